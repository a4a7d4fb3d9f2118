//! Command-line front end for the sequential-scattering simulator.
//!
//! Subcommands: simulate | sweep | verify | feasibility | witness.
//! Exit codes: 0 success (warnings allowed), 1 validation error,
//! 2 numerical-suite failure.

mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nscatter_core::analysis::{sweep, SweepEngine, SweepVariable};
use nscatter_core::config::{config_hash, RunConfig};
use nscatter_core::dynamics::{run_protocol, EngineKind, Variant};
use nscatter_core::entanglement::{
    measure_witness, witness_expectation, SignConvention, WitnessSpec,
};
use nscatter_core::feasibility::feasibility_report;
use nscatter_core::verify::{run_all, Status};

use output::{csv_body, write_file, Meta, VERSION};

#[derive(Parser)]
#[command(
    name = "nscatter",
    version,
    about = "Exact simulator for sequential two-neutron entanglement via scattering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol instance; write the reduced state, stage log and summary
    Simulate(CommonArgs),
    /// Sweep one parameter; write CSV and optionally an SVG plot
    Sweep(CommonArgs),
    /// Run the numerical verification suites
    Verify(VerifyArgs),
    /// Write the SI feasibility report
    Feasibility(CommonArgs),
    /// Shot-based witness estimate on the protocol output
    Witness(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed override for stochastic elements
    #[arg(long)]
    seed: Option<u64>,
    /// Engine override (sector_oracle | collective | closed_form)
    #[arg(long)]
    engine: Option<String>,
    /// Also write an SVG plot (sweep only)
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional config (used for the witness sign convention)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Optional directory for a verify.txt copy of the suite lines
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Feasibility(args) => cmd_feasibility(&args),
        Command::Witness(args) => cmd_witness(&args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

struct Loaded {
    config: RunConfig,
    meta: Meta,
}

fn load(path: &Path, seed_override: Option<u64>) -> anyhow::Result<Loaded> {
    let bytes = std::fs::read(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    let config = RunConfig::parse(std::str::from_utf8(&bytes)?)?;
    let seed = seed_override.or(config.seed).unwrap_or(42);
    Ok(Loaded {
        meta: Meta {
            config_hash: config_hash(&bytes),
            seed,
        },
        config,
    })
}

fn protocol_engine_override(name: &str) -> anyhow::Result<EngineKind> {
    match name {
        "sector_oracle" => Ok(EngineKind::SectorOracle),
        "collective" => Ok(EngineKind::Collective),
        other => anyhow::bail!("unknown engine '{other}' (expected sector_oracle | collective)"),
    }
}

fn sweep_engine_override(name: &str) -> anyhow::Result<SweepEngine> {
    match name {
        "closed_form" => Ok(SweepEngine::ClosedForm),
        "sector_oracle" => Ok(SweepEngine::SectorOracle),
        "collective" => Ok(SweepEngine::Collective),
        other => anyhow::bail!(
            "unknown engine '{other}' (expected closed_form | sector_oracle | collective)"
        ),
    }
}

fn witness_or_default(config: &RunConfig) -> anyhow::Result<(WitnessSpec, usize, bool)> {
    if config.witness.is_some() {
        Ok(config.witness_spec()?)
    } else {
        Ok((
            WitnessSpec::balanced(SignConvention::Corrected),
            100_000,
            true,
        ))
    }
}

fn cmd_simulate(args: &CommonArgs) -> anyhow::Result<u8> {
    let loaded = load(&args.config, args.seed)?;
    let mut protocol = loaded.config.protocol_config()?;
    if let Some(name) = &args.engine {
        protocol.engine = protocol_engine_override(name)?;
    }
    let result = run_protocol(&protocol)?;
    let concurrence = result.concurrence()?;
    let rho = &result.neutron_rho;
    let purity = rho.purity();
    let (wspec, _, align) = witness_or_default(&loaded.config)?;
    let w_raw = witness_expectation(rho, &wspec);
    let (aligned, theta) = rho.phase_aligned();
    let w_aligned = witness_expectation(&aligned, &wspec);

    let header = loaded.meta.header(&[
        ("command", "simulate".to_string()),
        ("engine", format!("{:?}", protocol.engine)),
    ]);

    let fmt_matrix = |imag: bool| {
        let rows: Vec<Vec<String>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let z = rho.matrix()[(i, j)];
                        format!("{:e}", if imag { z.im } else { z.re })
                    })
                    .collect()
            })
            .collect();
        csv_body(&["c00", "c01", "c10", "c11"], &rows)
    };
    write_file(
        &args.out,
        "rho_real.csv",
        &format!("{header}{}", fmt_matrix(false)),
    )?;
    write_file(
        &args.out,
        "rho_imag.csv",
        &format!("{header}{}", fmt_matrix(true)),
    )?;

    let stage_rows: Vec<Vec<String>> = result
        .stages
        .iter()
        .map(|s| {
            vec![
                s.label.to_string(),
                format!("{:e}", s.duration),
                format!("{:e}", s.time_end),
                format!("{:e}", s.norm),
            ]
        })
        .collect();
    write_file(
        &args.out,
        "stages.csv",
        &format!(
            "{header}{}",
            csv_body(
                &["stage", "duration", "protocol_time_end", "norm"],
                &stage_rows
            )
        ),
    )?;

    let mut summary = header.clone();
    summary.push_str(&format!("concurrence = {concurrence:e}\n"));
    summary.push_str(&format!("purity = {purity:e}\n"));
    summary.push_str(&format!(
        "witness_expectation_raw = {w_raw:e}\nwitness_expectation_aligned = {w_aligned:e}\n"
    ));
    summary.push_str(&format!("alignment_angle_rad = {theta:e}\n"));
    summary.push_str(&format!("phase_aligned_for_witness = {align}\n"));
    write_file(&args.out, "summary.txt", &summary)?;

    println!(
        "simulate: concurrence = {concurrence:.6}, purity = {purity:.6}, witness (aligned) = {w_aligned:.6}"
    );
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_sweep(args: &CommonArgs) -> anyhow::Result<u8> {
    let loaded = load(&args.config, args.seed)?;
    let mut spec = loaded.config.sweep_spec()?;
    if let Some(name) = &args.engine {
        spec.engine = sweep_engine_override(name)?;
        spec.validate()?;
    }
    let result = sweep(&spec)?;

    let header = loaded.meta.header(&[
        ("command", "sweep".to_string()),
        ("variable", result.variable.label().to_string()),
        ("engine", result.engine.label().to_string()),
    ]);
    let hash = format!("{:016x}", loaded.meta.config_hash);
    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                result.variable.label().to_string(),
                format!("{:e}", r.value),
                format!("{:e}", r.concurrence),
                result.engine.label().to_string(),
                hash.clone(),
            ]
        })
        .collect();
    write_file(
        &args.out,
        "sweep.csv",
        &format!(
            "{header}{}",
            csv_body(
                &["variable", "value", "concurrence", "engine", "config_hash"],
                &rows
            )
        ),
    )?;

    if args.plot {
        let series = plot_series(&spec, &result)?;
        let plot = svg::line_plot(
            &format!("concurrence vs {}", result.variable.label()),
            result.variable.label(),
            "concurrence",
            &series,
            &header,
        );
        write_file(&args.out, "sweep.svg", &plot)?;
    }

    println!(
        "sweep: {} points over {} ({})",
        result.rows.len(),
        result.variable.label(),
        result.engine.label()
    );
    println!("wrote {}", args.out.display());
    Ok(0)
}

/// Figure-style overlays: a tau sweep carries the two initial-state curves
/// (uniform-magnon closed form dashed, all-up oracle solid); a field sweep
/// adds the peak-concurrence curve for the same N.
fn plot_series(
    spec: &nscatter_core::analysis::SweepSpec,
    result: &nscatter_core::analysis::SweepResult,
) -> anyhow::Result<Vec<svg::Series>> {
    let main_points: Vec<(f64, f64)> = result
        .rows
        .iter()
        .map(|r| (r.value, r.concurrence))
        .collect();
    let mut series = vec![svg::Series {
        label: format!(
            "variant {:?} ({})",
            spec.base.init.variant,
            result.engine.label()
        ),
        points: main_points,
        color: if spec.base.init.variant == Variant::A {
            "seagreen"
        } else {
            "royalblue"
        },
        dashed: spec.base.init.variant == Variant::A,
    }];

    match spec.variable {
        SweepVariable::Tau => {
            // companion curve for the other initial state
            let mut companion = spec.clone();
            if spec.base.init.variant == Variant::A {
                companion.base.init =
                    nscatter_core::dynamics::InitialStateSpec::variant_b_for_field(
                        spec.base.params.b_z,
                        spec.base.params.lambda,
                        spec.base.n,
                    );
                companion.engine = SweepEngine::SectorOracle;
            } else {
                companion.base.init = nscatter_core::dynamics::InitialStateSpec::variant_a();
                companion.engine = SweepEngine::ClosedForm;
            }
            companion.validate()?;
            let other = sweep(&companion)?;
            series.push(svg::Series {
                label: format!(
                    "variant {:?} ({})",
                    companion.base.init.variant,
                    companion.engine.label()
                ),
                points: other
                    .rows
                    .iter()
                    .map(|r| (r.value, r.concurrence))
                    .collect(),
                color: if companion.base.init.variant == Variant::A {
                    "seagreen"
                } else {
                    "royalblue"
                },
                dashed: companion.base.init.variant == Variant::A,
            });
        }
        SweepVariable::BZ => {
            // peak-concurrence family C_p(B_z) for a few sample sizes
            let colors = ["firebrick", "darkorange", "purple"];
            for (i, n) in [spec.base.n, 2 * spec.base.n, 4 * spec.base.n]
                .into_iter()
                .enumerate()
            {
                let mut peaks = Vec::with_capacity(spec.values.len());
                for &b in &spec.values {
                    let p = nscatter_core::analysis::peak_concurrence(
                        n,
                        spec.base.params.lambda,
                        b,
                        SweepEngine::ClosedForm,
                    )?;
                    peaks.push((b, p.c_p));
                }
                series.push(svg::Series {
                    label: format!("peak concurrence, N = {n}"),
                    points: peaks,
                    color: colors[i],
                    dashed: true,
                });
            }
        }
        SweepVariable::N => {}
    }
    Ok(series)
}

fn cmd_verify(args: &VerifyArgs) -> anyhow::Result<u8> {
    let (convention, meta) = match &args.config {
        Some(path) => {
            let loaded = load(path, None)?;
            let convention = loaded
                .config
                .witness
                .as_ref()
                .map(|w| w.sign_convention)
                .unwrap_or(SignConvention::Corrected);
            (convention, Some(loaded.meta))
        }
        None => (SignConvention::Corrected, None),
    };

    let outcomes = run_all(convention);
    let mut lines = String::new();
    let mut failed = false;
    for o in &outcomes {
        let line = format!("{:<4} {:<26} {}", o.status.label(), o.name, o.detail);
        println!("{line}");
        lines.push_str(&line);
        lines.push('\n');
        if o.status == Status::Fail {
            failed = true;
        }
    }

    if let Some(dir) = &args.out {
        let header = meta
            .map(|m| m.header(&[("command", "verify".to_string())]))
            .unwrap_or_else(|| format!("# tool: nscatter {VERSION}\n# command: verify\n"));
        write_file(dir, "verify.txt", &format!("{header}{lines}"))?;
    }

    if failed {
        println!("verify: FAIL");
        Ok(2)
    } else {
        println!("verify: all suites passed");
        Ok(0)
    }
}

fn cmd_feasibility(args: &CommonArgs) -> anyhow::Result<u8> {
    let loaded = load(&args.config, args.seed)?;
    let scenario = loaded.config.scenario()?;
    let report = feasibility_report(&scenario)?;
    let header = loaded
        .meta
        .header(&[("command", "feasibility".to_string())]);
    let mut text = format!("{header}{report}");
    text.push_str("\n[values]\n");
    for (k, v) in report.key_values() {
        text.push_str(&format!("{k} = {v}\n"));
    }
    write_file(&args.out, "feasibility.txt", &text)?;
    print!("{report}");
    println!("wrote {}", args.out.display());
    Ok(0)
}

fn cmd_witness(args: &CommonArgs) -> anyhow::Result<u8> {
    let loaded = load(&args.config, args.seed)?;
    let mut protocol = loaded.config.protocol_config()?;
    if let Some(name) = &args.engine {
        protocol.engine = protocol_engine_override(name)?;
    }
    let (wspec, shots, align) = witness_or_default(&loaded.config)?;

    let result = run_protocol(&protocol)?;
    let rho = &result.neutron_rho;
    let (aligned, theta) = rho.phase_aligned();
    let measured_state = if align { &aligned } else { rho };

    let exact_raw = witness_expectation(rho, &wspec);
    let exact_used = witness_expectation(measured_state, &wspec);
    let estimate = measure_witness(measured_state, &wspec, shots, loaded.meta.seed)?;
    let sigma = if estimate.std_err > 0.0 {
        -estimate.value / estimate.std_err
    } else {
        f64::INFINITY
    };

    let header = loaded.meta.header(&[
        ("command", "witness".to_string()),
        ("convention", format!("{:?}", wspec.convention)),
    ]);
    let mut text = header.clone();
    text.push_str(&format!("alpha = {}\nbeta = {}\n", wspec.alpha, wspec.beta));
    text.push_str(&format!("align_phase = {align}\n"));
    text.push_str(&format!("alignment_angle_rad = {theta:e}\n"));
    text.push_str(&format!("expectation_exact_raw = {exact_raw:e}\n"));
    text.push_str(&format!(
        "expectation_exact_measured_frame = {exact_used:e}\n"
    ));
    text.push_str(&format!("shots_per_setting = {shots}\n"));
    text.push_str(&format!("estimate = {:e}\n", estimate.value));
    text.push_str(&format!("std_err = {:e}\n", estimate.std_err));
    text.push_str(&format!("sigma_below_zero = {sigma:e}\n"));
    text.push_str(&format!(
        "setting_values_z_x_y = {:e},{:e},{:e}\n",
        estimate.setting_values[0], estimate.setting_values[1], estimate.setting_values[2]
    ));
    write_file(&args.out, "witness.txt", &text)?;

    println!(
        "witness ({:?}, align={align}): estimate = {:.6} +/- {:.6} ({:.1} sigma below zero)",
        wspec.convention, estimate.value, estimate.std_err, sigma
    );
    println!("wrote {}", args.out.display());
    Ok(0)
}

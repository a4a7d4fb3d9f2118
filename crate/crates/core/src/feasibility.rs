//! SI-unit feasibility calculator for the experimental requirements.
//!
//! Everything else in this crate works in natural units
//! (`hbar = mu_0 = mu_B = m_e = 1`); this module owns every SI conversion.
//! The neutron-sample coupling is
//!
//!   lambda = -g_n mu_n g_e mu_B mu_0 / D^3,     D^3 = N a0^3,
//!
//! negative with the signed CODATA g-factors (both g_n and g_e are
//! negative, so the product of the three sign factors is negative). From it
//! follow the optimal field `B* = |lambda| (N-1) / mu_B` in tesla and the
//! optimal interaction time `tau* = arccos(-1/3) hbar / (4 |lambda|
//! sqrt(N))` in seconds, together with timing budgets, coherence-volume
//! conditions and calibration tolerances.
//!
//! Reported quantities are compared against decade-precision literature
//! quotes; a comparison more than one decade off is flagged DISAGREES and
//! both numbers are printed, neither silently adopted.

use std::fmt;

use crate::analysis::tolerance_widths;
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// dimensional quantities
// ---------------------------------------------------------------------------

/// SI dimension exponents over (kg, m, s, A).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dim {
    pub kg: i8,
    pub m: i8,
    pub s: i8,
    pub a: i8,
}

impl Dim {
    pub const NONE: Dim = Dim {
        kg: 0,
        m: 0,
        s: 0,
        a: 0,
    };
    pub const METER: Dim = Dim {
        kg: 0,
        m: 1,
        s: 0,
        a: 0,
    };
    pub const SECOND: Dim = Dim {
        kg: 0,
        m: 0,
        s: 1,
        a: 0,
    };
    pub const KILOGRAM: Dim = Dim {
        kg: 1,
        m: 0,
        s: 0,
        a: 0,
    };
    pub const JOULE: Dim = Dim {
        kg: 1,
        m: 2,
        s: -2,
        a: 0,
    };
    pub const TESLA: Dim = Dim {
        kg: 1,
        m: 0,
        s: -2,
        a: -1,
    };
    pub const JOULE_PER_TESLA: Dim = Dim {
        kg: 0,
        m: 2,
        s: 0,
        a: 1,
    };
    pub const TESLA_METER_PER_AMP: Dim = Dim {
        kg: 1,
        m: 1,
        s: -2,
        a: -2,
    };
    pub const JOULE_SECOND: Dim = Dim {
        kg: 1,
        m: 2,
        s: -1,
        a: 0,
    };
    pub const METER_PER_SECOND: Dim = Dim {
        kg: 0,
        m: 1,
        s: -1,
        a: 0,
    };
    pub const KG_METER_PER_SECOND: Dim = Dim {
        kg: 1,
        m: 1,
        s: -1,
        a: 0,
    };
    pub const PER_M2_PER_S: Dim = Dim {
        kg: 0,
        m: -2,
        s: -1,
        a: 0,
    };
    pub const M2: Dim = Dim {
        kg: 0,
        m: 2,
        s: 0,
        a: 0,
    };
    pub const M3: Dim = Dim {
        kg: 0,
        m: 3,
        s: 0,
        a: 0,
    };

    fn combine(self, other: Dim, sign: i8) -> Dim {
        Dim {
            kg: self.kg + sign * other.kg,
            m: self.m + sign * other.m,
            s: self.s + sign * other.s,
            a: self.a + sign * other.a,
        }
    }

    fn scaled(self, k: i8) -> Dim {
        Dim {
            kg: self.kg * k,
            m: self.m * k,
            s: self.s * k,
            a: self.a * k,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let friendly = match *self {
            Dim::NONE => Some(""),
            Dim::METER => Some("m"),
            Dim::SECOND => Some("s"),
            Dim::KILOGRAM => Some("kg"),
            Dim::JOULE => Some("J"),
            Dim::TESLA => Some("T"),
            Dim::JOULE_PER_TESLA => Some("J/T"),
            Dim::JOULE_SECOND => Some("J s"),
            Dim::METER_PER_SECOND => Some("m/s"),
            Dim::KG_METER_PER_SECOND => Some("kg m/s"),
            Dim::PER_M2_PER_S => Some("1/(m^2 s)"),
            Dim::M2 => Some("m^2"),
            Dim::M3 => Some("m^3"),
            _ => None,
        };
        if let Some(name) = friendly {
            return write!(f, "{name}");
        }
        let mut parts = Vec::new();
        for (sym, e) in [("kg", self.kg), ("m", self.m), ("s", self.s), ("A", self.a)] {
            match e {
                0 => {}
                1 => parts.push(sym.to_string()),
                _ => parts.push(format!("{sym}^{e}")),
            }
        }
        write!(f, "{}", parts.join(" "))
    }
}

/// A value with SI dimensions. Multiplication and division compose freely;
/// addition, subtraction and ratios of mismatched dimensions are
/// construction-time errors.
#[derive(Clone, Copy, Debug)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dim,
}

impl Quantity {
    pub fn new(value: f64, dim: Dim) -> Self {
        Self { value, dim }
    }

    pub fn scalar(value: f64) -> Self {
        Self::new(value, Dim::NONE)
    }

    pub fn meters(v: f64) -> Self {
        Self::new(v, Dim::METER)
    }

    pub fn seconds(v: f64) -> Self {
        Self::new(v, Dim::SECOND)
    }

    pub fn joules(v: f64) -> Self {
        Self::new(v, Dim::JOULE)
    }

    pub fn tesla(v: f64) -> Self {
        Self::new(v, Dim::TESLA)
    }

    pub fn try_add(self, other: Quantity) -> Result<Quantity> {
        if self.dim != other.dim {
            return Err(Error::InvalidParameter(format!(
                "cannot add [{}] to [{}]",
                other.dim, self.dim
            )));
        }
        Ok(Quantity::new(self.value + other.value, self.dim))
    }

    pub fn try_sub(self, other: Quantity) -> Result<Quantity> {
        if self.dim != other.dim {
            return Err(Error::InvalidParameter(format!(
                "cannot subtract [{}] from [{}]",
                other.dim, self.dim
            )));
        }
        Ok(Quantity::new(self.value - other.value, self.dim))
    }

    /// Dimensionless ratio of two same-dimension quantities.
    pub fn ratio(self, other: Quantity) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::InvalidParameter(format!(
                "cannot compare [{}] with [{}]",
                self.dim, other.dim
            )));
        }
        Ok(self.value / other.value)
    }

    pub fn powi(self, k: i8) -> Quantity {
        Quantity::new(self.value.powi(k as i32), self.dim.scaled(k))
    }

    pub fn cbrt(self) -> Result<Quantity> {
        let d = self.dim;
        if d.kg % 3 != 0 || d.m % 3 != 0 || d.s % 3 != 0 || d.a % 3 != 0 {
            return Err(Error::InvalidParameter(format!(
                "cube root of [{}] is not a whole dimension",
                d
            )));
        }
        Ok(Quantity::new(
            self.value.cbrt(),
            Dim {
                kg: d.kg / 3,
                m: d.m / 3,
                s: d.s / 3,
                a: d.a / 3,
            },
        ))
    }

    pub fn abs(self) -> Quantity {
        Quantity::new(self.value.abs(), self.dim)
    }
}

impl std::ops::Mul for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value * rhs.value, self.dim.combine(rhs.dim, 1))
    }
}

impl std::ops::Div for Quantity {
    type Output = Quantity;
    fn div(self, rhs: Quantity) -> Quantity {
        Quantity::new(self.value / rhs.value, self.dim.combine(rhs.dim, -1))
    }
}

impl std::ops::Mul<f64> for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: f64) -> Quantity {
        Quantity::new(self.value * rhs, self.dim)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim == Dim::NONE {
            write!(f, "{:.4e}", self.value)
        } else {
            write!(f, "{:.4e} {}", self.value, self.dim)
        }
    }
}

// ---------------------------------------------------------------------------
// constants and derived unit scales
// ---------------------------------------------------------------------------

/// Fundamental constants, CODATA 2018. The g-factors carry their signs.
#[derive(Clone, Copy, Debug)]
pub struct PhysicalConstants {
    /// Neutron g-factor (dimensionless, negative).
    pub g_n: f64,
    /// Nuclear magneton (J/T).
    pub mu_n: Quantity,
    /// Electron g-factor (dimensionless, negative).
    pub g_e: f64,
    /// Bohr magneton (J/T).
    pub mu_b: Quantity,
    /// Vacuum permeability (T m / A).
    pub mu_0: Quantity,
    /// Reduced Planck constant (J s).
    pub hbar: Quantity,
    /// Electron mass (kg).
    pub m_e: Quantity,
    /// Neutron mass (kg).
    pub m_n: Quantity,
}

pub fn codata2018() -> PhysicalConstants {
    PhysicalConstants {
        g_n: -3.826_085_45,
        mu_n: Quantity::new(5.050_783_746_1e-27, Dim::JOULE_PER_TESLA),
        g_e: -2.002_319_304_362_56,
        mu_b: Quantity::new(9.274_010_078_3e-24, Dim::JOULE_PER_TESLA),
        mu_0: Quantity::new(1.256_637_062_12e-6, Dim::TESLA_METER_PER_AMP),
        hbar: Quantity::new(1.054_571_817e-34, Dim::JOULE_SECOND),
        m_e: Quantity::new(9.109_383_701_5e-31, Dim::KILOGRAM),
        m_n: Quantity::new(1.674_927_498_04e-27, Dim::KILOGRAM),
    }
}

/// SI values of the natural units fixed by `hbar = mu_0 = mu_B = m_e = 1`.
#[derive(Clone, Copy, Debug)]
pub struct NaturalUnits {
    pub length: Quantity,
    pub time: Quantity,
    pub energy: Quantity,
    pub field: Quantity,
}

impl NaturalUnits {
    pub fn derive(c: &PhysicalConstants) -> Self {
        // solving the four unit constraints gives L = mu_0 mu_B^2 m_e / hbar^2
        let length = c.mu_0 * c.mu_b.powi(2) * c.m_e / c.hbar.powi(2);
        let time = c.m_e * length.powi(2) / c.hbar;
        let energy = c.hbar / time;
        let field = energy / c.mu_b;
        Self {
            length,
            time,
            energy,
            field,
        }
    }
}

// ---------------------------------------------------------------------------
// scenario and calculators
// ---------------------------------------------------------------------------

/// Experimental scenario in SI units.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentScenario {
    /// Lattice constant (m).
    pub a0: Quantity,
    /// Number of sample spins.
    pub n_spins: f64,
    /// Neutron velocity (m/s).
    pub v: Quantity,
    /// Source-to-sample flight path (m).
    pub flight_path: Quantity,
    /// Neutron flux (m^-2 s^-1).
    pub flux: Quantity,
    /// Illuminated sample area (m^2).
    pub sample_area: Quantity,
    /// Spin relaxation time (s).
    pub t1: Quantity,
    /// Phase coherence time (s).
    pub t2: Quantity,
    /// Target optimal field for the inversion section (T).
    pub b_target: Quantity,
    /// Target sample extent / coherence length (m).
    pub d_target: Quantity,
}

impl ExperimentScenario {
    /// Ultra-cold-neutron reference scenario.
    pub fn reference() -> Self {
        Self {
            a0: Quantity::meters(1e-10),
            n_spins: 1e14,
            v: Quantity::new(7.0, Dim::METER_PER_SECOND),
            flight_path: Quantity::meters(1.0),
            flux: Quantity::new(1e8, Dim::PER_M2_PER_S),
            sample_area: Quantity::new(1e-2, Dim::M2),
            t1: Quantity::seconds(1.0),
            t2: Quantity::seconds(1e-6),
            b_target: Quantity::tesla(1e-2),
            d_target: Quantity::meters(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [
            ("a0", self.a0.value),
            ("n_spins", self.n_spins),
            ("v", self.v.value),
            ("flight_path", self.flight_path.value),
            ("flux", self.flux.value),
            ("sample_area", self.sample_area.value),
            ("t1", self.t1.value),
            ("t2", self.t2.value),
            ("b_target", self.b_target.value),
            ("d_target", self.d_target.value),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "scenario field {label} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `|g_n| mu_n |g_e| mu_B mu_0`, the coupling numerator (J m^3).
fn coupling_numerator(c: &PhysicalConstants) -> Quantity {
    c.mu_n * c.mu_b * c.mu_0 * (c.g_n.abs() * c.g_e.abs())
}

/// Neutron-sample coupling in joules; negative with CODATA g-factor signs.
pub fn lambda_si(a0: Quantity, n_spins: f64) -> Result<Quantity> {
    if a0.dim != Dim::METER {
        return Err(Error::InvalidParameter(format!(
            "a0 must be a length, got [{}]",
            a0.dim
        )));
    }
    if !(a0.value > 0.0) || !(n_spins > 0.0) {
        return Err(Error::InvalidParameter("a0 and N must be positive".into()));
    }
    let c = codata2018();
    let d3 = a0.powi(3) * n_spins;
    // minus the product of signed factors: -(g_n)(g_e) < 0 since both < 0
    let sign = -(c.g_n.signum() * c.g_e.signum());
    Ok(coupling_numerator(&c) / d3 * sign)
}

fn log10_distance(ours: f64, quote: f64) -> f64 {
    (ours / quote).abs().log10().abs()
}

/// One quantity compared against a decade-precision literature quote.
#[derive(Clone, Debug)]
pub struct QuoteCheck {
    pub label: String,
    pub ours: f64,
    pub unit: String,
    pub quote: f64,
    pub decades_off: f64,
}

impl QuoteCheck {
    fn new(label: &str, ours: Quantity, quote: f64) -> Self {
        Self {
            label: label.to_string(),
            ours: ours.value,
            unit: ours.dim.to_string(),
            quote,
            decades_off: log10_distance(ours.value, quote),
        }
    }

    pub fn within_one_decade(&self) -> bool {
        self.decades_off <= 1.0
    }

    pub fn flag(&self) -> &'static str {
        if self.within_one_decade() {
            "OK"
        } else {
            "DISAGREES"
        }
    }
}

impl fmt::Display for QuoteCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} ours {:.3e} {} | quoted {:.0e} | {:.2} decades [{}]",
            self.label,
            self.ours,
            self.unit,
            self.quote,
            self.decades_off,
            self.flag()
        )
    }
}

/// Optimal operating point in SI units, plus the inversion of the target
/// field and sample extent back to lattice constant and spin count.
#[derive(Clone, Debug)]
pub struct OptimalSi {
    pub lambda: Quantity,
    /// Interaction volume edge `(N a0^3)^(1/3)`.
    pub d_interaction: Quantity,
    pub b_star: Quantity,
    pub tau_star: Quantity,
    /// Distance a neutron travels during `tau*`.
    pub d_flight: Quantity,
    /// Lattice constant required to hit `b_target`.
    pub a0_required: Quantity,
    /// Spin count required so that `v tau* = d_target` at `a0_required`.
    pub n_required: f64,
    /// Coefficient of `B* ~ c (a0/m)^-3` tesla.
    pub b_coefficient: f64,
    /// Coefficient of `tau* ~ c sqrt(N) (a0/m)^3` seconds.
    pub tau_coefficient: f64,
    pub checks: Vec<QuoteCheck>,
}

/// Optimal field, optimal time and derived requirements for a scenario.
pub fn optimal_field_time_si(sc: &ExperimentScenario) -> Result<OptimalSi> {
    sc.validate()?;
    let c = codata2018();
    let x0 = (-1.0f64 / 3.0).acos();
    let lambda = lambda_si(sc.a0, sc.n_spins)?;
    let lam_abs = lambda.abs();
    let d_interaction = (sc.a0.powi(3) * sc.n_spins).cbrt()?;
    let b_star = lam_abs * (sc.n_spins - 1.0) / c.mu_b;
    let tau_star = c.hbar / (lam_abs * (4.0 * sc.n_spins.sqrt())) * x0;
    let d_flight = sc.v * tau_star;

    let k = coupling_numerator(&c);
    // B* ~ (K / mu_B) a0^-3 and tau* ~ (x0 hbar / 4K) sqrt(N) a0^3;
    // the a0 exponent in the time relation must be +3 on dimensional grounds
    let b_coefficient = (k / c.mu_b).value;
    let tau_coefficient = (c.hbar / k).value * x0 / 4.0;

    // inversion: a0 from the field target, then N from d_target = v tau*
    let a0_required = (k / (sc.b_target * c.mu_b)).cbrt()?;
    let tau_target = sc.d_target / sc.v;
    let sqrt_n = tau_target.value / (tau_coefficient * a0_required.value.powi(3));
    let n_required = sqrt_n * sqrt_n;

    let checks = vec![
        QuoteCheck::new("B* (forward)", b_star, 1e-2),
        QuoteCheck::new("a0 required for B* target", a0_required, 1e-10),
        QuoteCheck::new(
            "N required for D target",
            Quantity::scalar(n_required),
            1e14,
        ),
        QuoteCheck::new(
            "B* power-law coefficient",
            Quantity::scalar(b_coefficient),
            1e-32,
        ),
        QuoteCheck::new(
            "tau* power-law coefficient",
            Quantity::scalar(tau_coefficient),
            1e21,
        ),
    ];

    Ok(OptimalSi {
        lambda,
        d_interaction,
        b_star,
        tau_star,
        d_flight,
        a0_required,
        n_required,
        b_coefficient,
        tau_coefficient,
        checks,
    })
}

/// Flight-time and inter-scattering timing requirements.
#[derive(Clone, Debug)]
pub struct TimingBudget {
    pub flight_time: Quantity,
    pub t1: Quantity,
    pub t1_ok: bool,
    /// Mean time between neutron arrivals, `1 / (flux * area)`.
    pub interval: Quantity,
    pub t2: Quantity,
    pub t2_ok: bool,
}

pub fn timing_budget(sc: &ExperimentScenario) -> Result<TimingBudget> {
    sc.validate()?;
    let flight_time = sc.flight_path / sc.v;
    let interval = Quantity::scalar(1.0) / (sc.flux * sc.sample_area);
    Ok(TimingBudget {
        flight_time,
        t1: sc.t1,
        t1_ok: flight_time.ratio(sc.t1)? <= 1.0,
        interval,
        t2: sc.t2,
        t2_ok: interval.ratio(sc.t2)? <= 1.0 + 1e-12,
    })
}

/// Coherence-volume condition: the neutron wavepacket must stay in phase
/// over the sample, so `Delta p ~ hbar / D` bounds the momentum spread.
#[derive(Clone, Debug)]
pub struct CoherenceReport {
    pub delta_p: Quantity,
    pub delta_v: Quantity,
    pub delta_v_over_v: f64,
    pub checks: Vec<QuoteCheck>,
}

pub fn coherence_condition(sc: &ExperimentScenario) -> Result<CoherenceReport> {
    sc.validate()?;
    let c = codata2018();
    let delta_p = c.hbar / sc.d_target;
    let delta_v = delta_p / c.m_n;
    let delta_v_over_v = delta_v.ratio(sc.v)?;
    let checks = vec![
        QuoteCheck::new("Delta v (absolute)", delta_v, 1e-6),
        QuoteCheck::new("Delta v / v", Quantity::scalar(delta_v_over_v), 1e-6),
    ];
    Ok(CoherenceReport {
        delta_p,
        delta_v,
        delta_v_over_v,
        checks,
    })
}

/// Calibration tolerances mapped to SI, with the literature quotes they are
/// compared against.
#[derive(Clone, Debug)]
pub struct ToleranceReport {
    /// Fractional field window, `Delta B / B*`.
    pub db_over_b: f64,
    /// Fractional time window, `Delta tau / tau*`, which equals the
    /// velocity calibration requirement `Delta v / v`.
    pub dtau_over_tau: f64,
    /// `Delta tau * lambda * sqrt(N)` (N-independent).
    pub dtau_coefficient: f64,
    /// `Delta B / (lambda sqrt(N))` (N-independent within 10 percent).
    pub db_coefficient: f64,
    pub checks: Vec<QuoteCheck>,
}

/// Tolerances for a concurrence floor of 0.7, scaled to the scenario's N.
pub fn tolerance_report(sc: &ExperimentScenario) -> Result<ToleranceReport> {
    sc.validate()?;
    // the widths scale exactly as 1/(lambda sqrt(N)) in tau and as
    // lambda sqrt(N) in B, so evaluate once at a desk-size N and scale
    let n_ref = 64usize;
    let w = tolerance_widths(n_ref, 1.0, 0.7)?;
    let dtau_coefficient = w.delta_tau * (n_ref as f64).sqrt();
    let db_coefficient = w.delta_b / (n_ref as f64).sqrt();
    let x0 = (-1.0f64 / 3.0).acos() / 4.0;
    // tau* = x0 / (lambda sqrt(N)): the fractional window is N-independent
    let dtau_over_tau = dtau_coefficient / x0;
    let n = sc.n_spins;
    let db_over_b = db_coefficient * n.sqrt() / (n - 1.0);
    let checks = vec![
        QuoteCheck::new(
            "Delta tau coefficient",
            Quantity::scalar(dtau_coefficient),
            1e-3,
        ),
        QuoteCheck::new("Delta B / B*", Quantity::scalar(db_over_b), 1e-9),
        QuoteCheck::new(
            "Delta v / v from Delta tau",
            Quantity::scalar(dtau_over_tau),
            1e-1,
        ),
    ];
    Ok(ToleranceReport {
        db_over_b,
        dtau_over_tau,
        dtau_coefficient,
        db_coefficient,
        checks,
    })
}

/// The full feasibility report.
#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub scenario: ExperimentScenario,
    pub optimal: OptimalSi,
    pub timing: TimingBudget,
    pub coherence: CoherenceReport,
    pub tolerances: ToleranceReport,
    pub natural_units: NaturalUnits,
}

pub fn feasibility_report(sc: &ExperimentScenario) -> Result<FeasibilityReport> {
    Ok(FeasibilityReport {
        scenario: *sc,
        optimal: optimal_field_time_si(sc)?,
        timing: timing_budget(sc)?,
        coherence: coherence_condition(sc)?,
        tolerances: tolerance_report(sc)?,
        natural_units: NaturalUnits::derive(&codata2018()),
    })
}

impl FeasibilityReport {
    /// Machine-readable key-value block.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        let mut push = |k: &str, v: String| kv.push((k.to_string(), v));
        push("lambda_J", format!("{:e}", self.optimal.lambda.value));
        push(
            "d_interaction_m",
            format!("{:e}", self.optimal.d_interaction.value),
        );
        push("b_star_T", format!("{:e}", self.optimal.b_star.value));
        push("tau_star_s", format!("{:e}", self.optimal.tau_star.value));
        push("d_flight_m", format!("{:e}", self.optimal.d_flight.value));
        push(
            "a0_required_m",
            format!("{:e}", self.optimal.a0_required.value),
        );
        push("n_required", format!("{:e}", self.optimal.n_required));
        push(
            "b_coefficient_T_m3",
            format!("{:e}", self.optimal.b_coefficient),
        );
        push(
            "tau_coefficient_s_m3",
            format!("{:e}", self.optimal.tau_coefficient),
        );
        push(
            "flight_time_s",
            format!("{:e}", self.timing.flight_time.value),
        );
        push("t1_ok", format!("{}", self.timing.t1_ok));
        push("interval_s", format!("{:e}", self.timing.interval.value));
        push("t2_ok", format!("{}", self.timing.t2_ok));
        push(
            "delta_p_kg_m_s",
            format!("{:e}", self.coherence.delta_p.value),
        );
        push("delta_v_m_s", format!("{:e}", self.coherence.delta_v.value));
        push(
            "delta_v_over_v",
            format!("{:e}", self.coherence.delta_v_over_v),
        );
        push("db_over_b", format!("{:e}", self.tolerances.db_over_b));
        push(
            "dtau_over_tau",
            format!("{:e}", self.tolerances.dtau_over_tau),
        );
        push(
            "natural_energy_J",
            format!("{:e}", self.natural_units.energy.value),
        );
        push(
            "natural_time_s",
            format!("{:e}", self.natural_units.time.value),
        );
        push(
            "natural_field_T",
            format!("{:e}", self.natural_units.field.value),
        );
        push(
            "natural_length_m",
            format!("{:e}", self.natural_units.length.value),
        );
        kv
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sc = &self.scenario;
        writeln!(f, "feasibility report (SI units, CODATA 2018)")?;
        writeln!(f, "==========================================")?;
        writeln!(
            f,
            "scenario: a0 = {}, N = {:.2e}, v = {}, path = {}",
            sc.a0, sc.n_spins, sc.v, sc.flight_path
        )?;
        writeln!(
            f,
            "          flux = {}, area = {}, T1 = {}, T2 = {}",
            sc.flux, sc.sample_area, sc.t1, sc.t2
        )?;
        writeln!(f)?;
        writeln!(f, "coupling and optimal point")?;
        writeln!(
            f,
            "  lambda          = {} (negative: signed g-factors)",
            self.optimal.lambda
        )?;
        writeln!(f, "  D (interaction) = {}", self.optimal.d_interaction)?;
        writeln!(f, "  B*              = {}", self.optimal.b_star)?;
        writeln!(f, "  tau*            = {}", self.optimal.tau_star)?;
        writeln!(f, "  v tau*          = {}", self.optimal.d_flight)?;
        writeln!(f)?;
        writeln!(f, "inversion from targets (B* -> a0, then D = v tau* -> N)")?;
        writeln!(
            f,
            "  B target  = {}  ->  a0 = {}",
            sc.b_target, self.optimal.a0_required
        )?;
        writeln!(
            f,
            "  D target  = {}  ->  N  = {:.3e}",
            sc.d_target, self.optimal.n_required
        )?;
        writeln!(f)?;
        writeln!(f, "timing budget")?;
        writeln!(
            f,
            "  flight time = {} vs T1 = {} [{}]",
            self.timing.flight_time,
            self.timing.t1,
            if self.timing.t1_ok { "ok" } else { "EXCEEDED" }
        )?;
        writeln!(
            f,
            "  arrival gap = {} vs T2 = {} [{}]",
            self.timing.interval,
            self.timing.t2,
            if self.timing.t2_ok { "ok" } else { "EXCEEDED" }
        )?;
        writeln!(f)?;
        writeln!(f, "coherence volume (Delta p = hbar / D over the sample)")?;
        writeln!(f, "  Delta p     = {}", self.coherence.delta_p)?;
        writeln!(f, "  Delta v     = {}", self.coherence.delta_v)?;
        writeln!(f, "  Delta v / v = {:.3e}", self.coherence.delta_v_over_v)?;
        writeln!(f)?;
        writeln!(
            f,
            "calibration tolerances (floor C >= 0.7; half-widths of the contiguous"
        )?;
        writeln!(f, "above-floor interval around the optimum)")?;
        writeln!(
            f,
            "  Delta tau * lambda sqrt(N) = {:.4e} (fraction of tau*: {:.3})",
            self.tolerances.dtau_coefficient, self.tolerances.dtau_over_tau
        )?;
        writeln!(
            f,
            "  Delta B / (lambda sqrt(N)) = {:.4} ; Delta B / B* = {:.3e}",
            self.tolerances.db_coefficient, self.tolerances.db_over_b
        )?;
        writeln!(f)?;
        writeln!(f, "decade comparisons against quoted estimates")?;
        for check in self
            .optimal
            .checks
            .iter()
            .chain(&self.coherence.checks)
            .chain(&self.tolerances.checks)
        {
            writeln!(f, "  {check}")?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "natural-unit scales implied by hbar = mu_0 = mu_B = m_e = 1"
        )?;
        writeln!(f, "  energy = {}", self.natural_units.energy)?;
        writeln!(f, "  time   = {}", self.natural_units.time)?;
        writeln!(f, "  field  = {}", self.natural_units.field)?;
        writeln!(f, "  length = {}", self.natural_units.length)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_magnitude_and_sign() {
        let lam = lambda_si(Quantity::meters(1e-10), 1e14).unwrap();
        assert!(lam.value < 0.0, "lambda should be negative: {lam}");
        assert_eq!(lam.dim, Dim::JOULE);
        // K = 4.509e-55 J m^3 over D^3 = 1e-16 m^3
        assert!((lam.value.abs() - 4.509e-39).abs() < 1e-41, "{lam}");
    }

    #[test]
    fn lambda_scales_inverse_cube() {
        let l1 = lambda_si(Quantity::meters(1e-10), 1e12).unwrap();
        let l2 = lambda_si(Quantity::meters(2e-10), 1e12).unwrap();
        let ratio = l1.value / l2.value;
        assert!((ratio - 8.0).abs() < 1e-10, "ratio {ratio}");
    }

    #[test]
    fn interaction_volume_edge() {
        let sc = ExperimentScenario::reference();
        let opt = optimal_field_time_si(&sc).unwrap();
        // (1e14 * 1e-30)^(1/3) = 4.64e-6 m
        assert!(
            (opt.d_interaction.value - 4.64e-6).abs() < 2e-8,
            "{}",
            opt.d_interaction
        );
    }

    #[test]
    fn optimal_point_decades() {
        let sc = ExperimentScenario::reference();
        let opt = optimal_field_time_si(&sc).unwrap();
        // B* ~ 5e-2 T, within a decade of the quoted 1e-2 T
        assert!(
            (opt.b_star.value.log10() - (-2.0)).abs() <= 1.0,
            "{}",
            opt.b_star
        );
        // tau* ~ 1.1e-3 s for the reference scenario
        assert!(
            (opt.tau_star.value - 1.117e-3).abs() < 1e-5,
            "{}",
            opt.tau_star
        );
        // inversion: a0 ~ 1.7e-10 m and N ~ 6.9e14
        assert!((opt.a0_required.value - 1.69e-10).abs() < 1e-12);
        assert!(
            (opt.n_required.log10() - 14.0).abs() <= 1.0,
            "{}",
            opt.n_required
        );
        for check in &opt.checks {
            assert!(check.within_one_decade(), "{check}");
        }
    }

    #[test]
    fn round_trip_through_natural_units() {
        let c = codata2018();
        let nu = NaturalUnits::derive(&c);
        let sc = ExperimentScenario::reference();
        let opt = optimal_field_time_si(&sc).unwrap();

        let lambda_nat = (opt.lambda.abs() / nu.energy).value;
        let b_nat = (opt.b_star / nu.field).value;
        let expect_b = lambda_nat * (sc.n_spins - 1.0);
        assert!(
            ((b_nat - expect_b) / expect_b).abs() < 1e-10,
            "B round trip: {b_nat} vs {expect_b}"
        );

        let tau_nat = (opt.tau_star / nu.time).value;
        let expect_tau = (-1.0f64 / 3.0).acos() / (4.0 * lambda_nat * sc.n_spins.sqrt());
        assert!(
            ((tau_nat - expect_tau) / expect_tau).abs() < 1e-10,
            "tau round trip: {tau_nat} vs {expect_tau}"
        );
    }

    #[test]
    fn timing_budget_reference() {
        let sc = ExperimentScenario::reference();
        let t = timing_budget(&sc).unwrap();
        // 1 m at 7 m/s: 0.143 s, inside the T1 window
        assert!((t.flight_time.value - 1.0 / 7.0).abs() < 1e-12);
        assert!(t.t1_ok);
        // 1/(1e8 * 1e-2) = 1e-6 s
        assert!((t.interval.value - 1e-6).abs() < 1e-18);
        assert!(t.t2_ok);
    }

    #[test]
    fn doubling_flux_halves_interval() {
        let mut sc = ExperimentScenario::reference();
        let i1 = timing_budget(&sc).unwrap().interval.value;
        sc.flux = Quantity::new(2e8, Dim::PER_M2_PER_S);
        let i2 = timing_budget(&sc).unwrap().interval.value;
        assert!((i1 / i2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_condition_reference() {
        let sc = ExperimentScenario::reference();
        let c = coherence_condition(&sc).unwrap();
        assert_eq!(c.delta_p.dim, Dim::KG_METER_PER_SECOND);
        assert!((c.delta_p.value - 1.0546e-33).abs() < 1e-36);
        // Delta v ~ 6.3e-7 m/s; Delta v / v ~ 9e-8
        assert!((c.delta_v.value - 6.296e-7).abs() < 1e-9);
        assert!((c.delta_v_over_v - 8.995e-8).abs() < 1e-10);
        // absolute Delta v sits within a decade of the quoted 1e-6
        assert!(c.checks[0].within_one_decade());
    }

    #[test]
    fn doubling_sample_halves_velocity_window() {
        let mut sc = ExperimentScenario::reference();
        let c1 = coherence_condition(&sc).unwrap().delta_v_over_v;
        sc.d_target = Quantity::meters(0.2);
        let c2 = coherence_condition(&sc).unwrap().delta_v_over_v;
        assert!((c1 / c2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tolerance_report_flags_quoted_discrepancies() {
        let sc = ExperimentScenario::reference();
        let t = tolerance_report(&sc).unwrap();
        // the derived Delta tau coefficient is ~8.8e-2, far from the quoted
        // 1e-3; printed as a flagged disagreement, never asserted equal
        assert!(
            (t.dtau_coefficient - 0.088).abs() < 2e-3,
            "{}",
            t.dtau_coefficient
        );
        assert!(!t.checks[0].within_one_decade());
        // Delta B / B* ~ 1e-7 against the quoted 1e-9: also flagged
        assert!(
            (t.db_over_b.log10() - (-7.0)).abs() < 0.3,
            "{}",
            t.db_over_b
        );
        assert!(!t.checks[1].within_one_decade());
        // Delta v / v from the time window ~ 0.18 against the quoted 1e-1: ok
        assert!(t.checks[2].within_one_decade());
    }

    #[test]
    fn unit_mismatch_is_an_error() {
        let t = Quantity::tesla(1.0);
        let s = Quantity::seconds(1.0);
        assert!(t.try_add(s).is_err());
        assert!(t.ratio(s).is_err());
        assert!(t.try_sub(Quantity::tesla(0.5)).is_ok());
        // cube root of a non-cubic dimension
        assert!(Quantity::new(8.0, Dim::M2).cbrt().is_err());
        assert!(Quantity::new(8.0, Dim::M3).cbrt().is_ok());
    }

    #[test]
    fn report_renders_and_exports() {
        let sc = ExperimentScenario::reference();
        let report = feasibility_report(&sc).unwrap();
        let text = report.to_string();
        assert!(text.contains("B*"));
        assert!(text.contains("DISAGREES"));
        let kv = report.key_values();
        assert!(kv.iter().any(|(k, _)| k == "b_star_T"));
        assert!(kv.iter().any(|(k, _)| k == "delta_v_over_v"));
    }

    #[test]
    fn scenario_rejects_nonpositive_fields() {
        let mut sc = ExperimentScenario::reference();
        sc.v = Quantity::new(0.0, Dim::METER_PER_SECOND);
        assert!(timing_budget(&sc).is_err());
    }
}

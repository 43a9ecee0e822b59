//! Lateral boundary families, the oscillatory cut-off, and the regularity
//! criteria built on the first Fourier coefficient `a₀(τ)`.
//!
//! Every criterion is an improper integral `∫^∞ f(φ(τ)) dτ` whose integrand
//! has the common shape `A φ^q e^{−dφ^α} cos(bφ^α + c)`
//! ([`CriterionIntegrand`]). Divergence to −∞ forces `a₀ → 0` (regular),
//! convergence leaves a finite nonzero limit (irregular, non-singular).

use crate::blayer::{biharmonic_profile, dispersion_profile, heat_profile, solve_bl_bvp, wall_constants, BlFamily};
use crate::kernels::{
    default_fit_window, eval_kernel_derivative, kernel_asymptotics_fit, kernel_constants, EquationFamily,
    KernelConstants,
};
use crate::numcore::lsq::{least_squares, linear_fit};
use crate::numcore::quad::{gk15, quad_finite};
use crate::numcore::{integrate_ode_until, Complex64, NumError, NumResult};
use crate::spectral::{interval_spectrum, top_eigenvalue, IntervalEigenProblem, Method};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

/// Left end of every analytic family's domain, `τ₀ = e` (so `ln τ ≥ 1`).
pub const TAU0: f64 = std::f64::consts::E;

/// Default smoothing width of the cut-off, in phase.
pub const DEFAULT_EPS_S: f64 = PI / 20.0;

// ---------------------------------------------------------------------------
// boundary functions

/// Slowly growing factor `φ(τ)` in `R(t) = (−t)^β φ(τ)`, `τ = −ln(−t)`.
///
/// All evaluation goes through `u = ln τ` so that astronomically late times
/// stay representable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundaryFunction {
    Constant { l: f64 },
    /// `C (ln τ)^γ`.
    PowerLog { c: f64, gamma: f64 },
    /// `C √(ln τ)`.
    PetrovskiiSqrtLog { c: f64 },
    /// `C τ^γ`; not slowly growing, used for the right dispersion wall.
    Power { c: f64, gamma: f64 },
    /// Samples on an increasing `τ` grid, monotone cubic in `ln τ`.
    Tabulated { tau: Vec<f64>, values: Vec<f64> },
}

impl BoundaryFunction {
    pub fn validate(&self) -> NumResult<()> {
        let bad = |s: &str| Err(NumError::Invalid(s.to_string()));
        match self {
            BoundaryFunction::Constant { l } if !(*l > 0.0 && l.is_finite()) => bad("constant boundary needs l > 0"),
            BoundaryFunction::PowerLog { c, gamma } | BoundaryFunction::Power { c, gamma }
                if !(*c > 0.0 && c.is_finite() && gamma.is_finite()) =>
            {
                bad("boundary family needs C > 0 and finite γ")
            }
            BoundaryFunction::PetrovskiiSqrtLog { c } if !(*c > 0.0 && c.is_finite()) => bad("sqrtlog needs C > 0"),
            BoundaryFunction::Tabulated { tau, values } => {
                if tau.len() != values.len() || tau.len() < 2 {
                    return bad("tabulated boundary needs at least two (τ, φ) pairs of equal length");
                }
                if tau[0] < TAU0 * (1.0 - 1e-12) {
                    return bad("tabulated boundary must start at τ ≥ e");
                }
                if tau.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated τ grid must be strictly increasing");
                }
                if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad("tabulated φ must be positive");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `[ln τ_lo, ln τ_hi]` where the function is defined.
    pub fn log_domain(&self) -> (f64, f64) {
        match self {
            BoundaryFunction::Tabulated { tau, .. } => (tau[0].ln(), tau[tau.len() - 1].ln()),
            _ => (1.0, f64::INFINITY),
        }
    }

    /// `φ` at `τ = e^u`.
    pub fn at_log(&self, u: f64) -> f64 {
        match self {
            BoundaryFunction::Constant { l } => *l,
            BoundaryFunction::PowerLog { c, gamma } => c * u.powf(*gamma),
            BoundaryFunction::PetrovskiiSqrtLog { c } => c * u.sqrt(),
            BoundaryFunction::Power { c, gamma } => c * (gamma * u).exp(),
            BoundaryFunction::Tabulated { tau, values } => pchip(tau, values, u).0,
        }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.at_log(tau.ln())
    }

    /// `dφ/du` with `u = ln τ`; `φ'(τ) = (dφ/du)/τ`.
    pub fn log_slope(&self, u: f64) -> f64 {
        match self {
            BoundaryFunction::Constant { .. } => 0.0,
            BoundaryFunction::PowerLog { c, gamma } => c * gamma * u.powf(gamma - 1.0),
            BoundaryFunction::PetrovskiiSqrtLog { c } => 0.5 * c / u.sqrt(),
            BoundaryFunction::Power { c, gamma } => c * gamma * (gamma * u).exp(),
            BoundaryFunction::Tabulated { tau, values } => pchip(tau, values, u).1,
        }
    }

    /// `u = ln τ` where `φ` first reaches `value`, for the closed-form families.
    pub fn inverse_log(&self, value: f64) -> Option<f64> {
        match self {
            BoundaryFunction::PowerLog { c, gamma } if *gamma > 0.0 => Some((value / c).powf(1.0 / gamma)),
            BoundaryFunction::PetrovskiiSqrtLog { c } => Some((value / c).powi(2)),
            BoundaryFunction::Power { c, gamma } if *gamma > 0.0 => Some((value / c).ln() / gamma),
            _ => None,
        }
    }

    /// As a `(C, γ)` member of the `C (ln τ)^γ` family, if it is one.
    pub fn as_power_log(&self) -> Option<(f64, f64)> {
        match self {
            BoundaryFunction::PowerLog { c, gamma } => Some((*c, *gamma)),
            BoundaryFunction::PetrovskiiSqrtLog { c } => Some((*c, 0.5)),
            _ => None,
        }
    }

    pub fn is_nondecreasing(&self) -> bool {
        match self {
            BoundaryFunction::Constant { .. } => true,
            BoundaryFunction::PowerLog { gamma, .. } | BoundaryFunction::Power { gamma, .. } => *gamma >= 0.0,
            BoundaryFunction::PetrovskiiSqrtLog { .. } => true,
            BoundaryFunction::Tabulated { values, .. } => values.windows(2).all(|w| w[1] >= w[0]),
        }
    }

    /// Same family with the leading constant replaced.
    pub fn with_constant(&self, c_new: f64) -> Self {
        match self {
            BoundaryFunction::Constant { .. } => BoundaryFunction::Constant { l: c_new },
            BoundaryFunction::PowerLog { gamma, .. } => BoundaryFunction::PowerLog { c: c_new, gamma: *gamma },
            BoundaryFunction::PetrovskiiSqrtLog { .. } => BoundaryFunction::PetrovskiiSqrtLog { c: c_new },
            BoundaryFunction::Power { gamma, .. } => BoundaryFunction::Power { c: c_new, gamma: *gamma },
            BoundaryFunction::Tabulated { .. } => self.clone(),
        }
    }
}

impl fmt::Display for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryFunction::Constant { l } => write!(f, "const:{l}"),
            BoundaryFunction::PowerLog { c, gamma } => write!(f, "powerlog:C={c},g={gamma}"),
            BoundaryFunction::PetrovskiiSqrtLog { c } => write!(f, "sqrtlog:C={c}"),
            BoundaryFunction::Power { c, gamma } => write!(f, "power:C={c},g={gamma}"),
            BoundaryFunction::Tabulated { tau, .. } => write!(f, "table:{}pts", tau.len()),
        }
    }
}

impl FromStr for BoundaryFunction {
    type Err = String;

    /// `const:4`, `powerlog:C=2.95,g=0.75`, `sqrtlog:C=2`, `power:C=1,g=1.5`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("boundary '{s}' needs the form kind:params"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number '{v}' in '{s}'"));
        let mut params: HashMap<String, f64> = HashMap::new();
        let kind = kind.trim().to_ascii_lowercase();
        if kind == "const" || kind == "constant" {
            let b = BoundaryFunction::Constant { l: num(rest)? };
            b.validate().map_err(|e| e.to_string())?;
            return Ok(b);
        }
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=value, got '{part}'"))?;
            let key = match k.trim().to_ascii_lowercase().as_str() {
                "c" => "c",
                "g" | "gamma" => "g",
                other => return Err(format!("unknown boundary parameter '{other}'")),
            };
            params.insert(key.to_string(), num(v)?);
        }
        let get = |k: &str| params.get(k).copied().ok_or_else(|| format!("boundary '{s}' is missing '{k}'"));
        let b = match kind.as_str() {
            "powerlog" => BoundaryFunction::PowerLog { c: get("c")?, gamma: get("g")? },
            "sqrtlog" | "petrovskii" => {
                if params.contains_key("g") {
                    return Err("sqrtlog takes only C".into());
                }
                BoundaryFunction::PetrovskiiSqrtLog { c: get("c")? }
            }
            "power" => BoundaryFunction::Power { c: get("c")?, gamma: get("g")? },
            other => return Err(format!("unknown boundary family '{other}'")),
        };
        b.validate().map_err(|e| e.to_string())?;
        Ok(b)
    }
}

/// Fritsch–Carlson monotone cubic in `ln τ`; returns `(φ, dφ/du)`, constant
/// extrapolation outside the table.
fn pchip(tau: &[f64], values: &[f64], u: f64) -> (f64, f64) {
    let n = tau.len();
    let x: Vec<f64> = tau.iter().map(|t| t.ln()).collect();
    if u <= x[0] {
        return (values[0], 0.0);
    }
    if u >= x[n - 1] {
        return (values[n - 1], 0.0);
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();
    let slope = |i: usize| -> f64 {
        if i == 0 {
            return del[0];
        }
        if i == n - 1 {
            return del[n - 2];
        }
        let (a, b) = (del[i - 1], del[i]);
        if a * b <= 0.0 {
            return 0.0;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        (w1 + w2) / (w1 / a + w2 / b)
    };
    let i = x.partition_point(|&v| v <= u).min(n - 1) - 1;
    let (d0, d1) = (slope(i), slope(i + 1));
    let t = (u - x[i]) / h[i];
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * values[i]
        + (t3 - 2.0 * t2 + t) * h[i] * d0
        + (-2.0 * t3 + 3.0 * t2) * values[i + 1]
        + (t3 - t2) * h[i] * d1;
    let dv = ((6.0 * t2 - 6.0 * t) * values[i] + (-6.0 * t2 + 6.0 * t) * values[i + 1]) / h[i]
        + (3.0 * t2 - 4.0 * t + 1.0) * d0
        + (3.0 * t2 - 2.0 * t) * d1;
    (v, dv)
}

// ---------------------------------------------------------------------------
// slow growth

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowGrowthReport {
    /// `φ → +∞`: strictly increasing on the grid.
    pub unbounded: bool,
    /// `φ'(τ) → 0`.
    pub derivative_vanishes: bool,
    /// `φ'/φ → 0`.
    pub log_derivative_vanishes: bool,
    /// `(φ/φ')' → ∞`.
    pub slow_growth: bool,
    /// `φ ≪ τ^a` for every `a > 0`: the local power `τφ'/φ` tends to zero.
    pub power_domination: bool,
    /// Range of `τ` examined.
    pub tau_range: (f64, f64),
    pub notes: Vec<String>,
}

impl SlowGrowthReport {
    pub fn all_pass(&self) -> bool {
        self.unbounded && self.derivative_vanishes && self.log_derivative_vanishes && self.slow_growth && self.power_domination
    }
}

/// Numerical check of the slow-growth conditions on `τ ∈ [10, 10⁸]`.
pub fn validate_slow_growth(phi: &BoundaryFunction) -> SlowGrowthReport {
    let (u_lo, u_hi) = (10f64.ln(), 1e8f64.ln());
    let (d_lo, d_hi) = phi.log_domain();
    let mut notes = Vec::new();
    let (a, b) = (u_lo.max(d_lo), u_hi.min(d_hi));
    if a != u_lo || b != u_hi {
        notes.push(format!("only τ ∈ [{:.3e}, {:.3e}] is available", a.exp(), b.exp()));
    }
    let n = 200;
    let us: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
    let f: Vec<f64> = us.iter().map(|&u| phi.at_log(u)).collect();
    let du: Vec<f64> = us.iter().map(|&u| phi.log_slope(u)).collect();
    let unbounded = f.windows(2).all(|w| w[1] > w[0]);
    if matches!(phi, BoundaryFunction::Constant { .. }) {
        notes.push("constant boundary: the conditions concern non-constant φ".into());
    }
    // φ'(τ) = (dφ/du) e^{−u}
    let dphi: Vec<f64> = us.iter().zip(&du).map(|(u, d)| d * (-u).exp()).collect();
    let derivative_vanishes = dphi[n - 1].abs() <= 1e-3 * dphi[0].abs() && dphi[0] != 0.0;
    let ld: Vec<f64> = dphi.iter().zip(&f).map(|(d, v)| d / v).collect();
    let log_derivative_vanishes = ld[n - 1].abs() <= 1e-3 * ld[0].abs() && ld[0] != 0.0;
    // D = d(φ/φ')/dτ, differentiated in u
    let ratio = |u: f64| {
        let s = phi.log_slope(u);
        if s == 0.0 {
            f64::INFINITY
        } else {
            phi.at_log(u) * u.exp() / s
        }
    };
    let h = 1e-4;
    let dd: Vec<f64> = us
        .iter()
        .map(|&u| (ratio(u + h) - ratio(u - h)) / (2.0 * h) * (-u).exp())
        .collect();
    let slow_growth = dd.iter().all(|v| v.is_finite())
        && dd.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6) - 1e-9)
        && dd[n - 1] >= 2.0 * dd[0];
    // local power τφ'/φ = (dφ/du)/φ
    let lp: Vec<f64> = du.iter().zip(&f).map(|(d, v)| d / v).collect();
    let power_domination = lp[0] > 0.0
        && lp.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
        && lp[n - 1] <= 0.5 * lp[0];
    SlowGrowthReport {
        unbounded,
        derivative_vanishes,
        log_derivative_vanishes,
        slow_growth,
        power_domination,
        tau_range: (a.exp(), b.exp()),
        notes,
    }
}

// ---------------------------------------------------------------------------
// criterion integrands

/// Equation family and wall whose criterion integrand is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionFamily {
    Heat,
    Biharmonic,
    Polyharmonic(u32),
    DispersionRight,
    DispersionLeft,
    Beam4,
}

impl fmt::Display for CriterionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriterionFamily::Heat => write!(f, "heat"),
            CriterionFamily::Biharmonic => write!(f, "biharmonic"),
            CriterionFamily::Polyharmonic(m) => write!(f, "polyharmonic:{m}"),
            CriterionFamily::DispersionRight => write!(f, "dispersion3-right"),
            CriterionFamily::DispersionLeft => write!(f, "dispersion3-left"),
            CriterionFamily::Beam4 => write!(f, "beam4"),
        }
    }
}

/// `f(φ) = A φ^q e^{−dφ^α} cos(bφ^α + c)` with `A > 0`; `a₀'/a₀ ≈ f(φ(τ))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionIntegrand {
    pub family: CriterionFamily,
    pub amplitude: f64,
    pub power: f64,
    pub decay: f64,
    pub alpha: f64,
    pub freq: f64,
    pub phase: f64,
}

impl CriterionIntegrand {
    pub fn oscillatory(&self) -> bool {
        self.freq > 0.0
    }

    /// `ln A + q ln φ − dφ^α`.
    pub fn log_envelope(&self, phi: f64) -> f64 {
        self.amplitude.ln() + self.power * phi.ln() - self.decay * phi.powf(self.alpha)
    }

    pub fn trig(&self, phi: f64) -> f64 {
        (self.freq * phi.powf(self.alpha) + self.phase).cos()
    }

    pub fn eval(&self, phi: f64) -> f64 {
        self.log_envelope(phi).exp() * self.trig(phi)
    }

    /// `τ f(φ)` at `τ = e^u`, the integrand in `u`.
    pub fn in_log(&self, u: f64, phi: f64) -> f64 {
        (u + self.log_envelope(phi)).exp() * self.trig(phi)
    }

    /// `d^{−1/α}`: threshold constant of the critical `C (ln τ)^{1/α}` family.
    pub fn threshold_constant(&self) -> Option<f64> {
        (self.decay > 0.0).then(|| self.decay.powf(-1.0 / self.alpha))
    }

    /// `1/α`, the critical `γ` of the `C (ln τ)^γ` family.
    pub fn critical_log_exponent(&self) -> Option<f64> {
        (self.decay > 0.0).then(|| 1.0 / self.alpha)
    }

    /// `1/(α − q)`: critical `γ` of the `C τ^γ` family when there is no envelope.
    pub fn critical_power_exponent(&self) -> Option<f64> {
        (self.decay == 0.0 && self.alpha > self.power).then(|| 1.0 / (self.alpha - self.power))
    }
}

/// Combines `γ₂φψ₀ + γ₁φ^{2−α}ψ₀'` with the fitted kernel tail
/// `F ≈ R y^{−δ₀} e^{−d y^α} cos(b y^α − θ₀)`.
fn wall_integrand(family: CriterionFamily, kc: &KernelConstants, r: f64, theta0: f64, g1: f64, g2: f64) -> CriterionIntegrand {
    let kappa = g2 + kc.alpha * g1 * Complex64::new(-kc.tail_decay(), kc.b0);
    CriterionIntegrand {
        family,
        amplitude: r * kappa.norm(),
        power: 1.0 - kc.delta0,
        decay: kc.tail_decay(),
        alpha: kc.alpha,
        freq: kc.b0,
        phase: kappa.arg() - theta0,
    }
}

fn build_integrand(family: CriterionFamily) -> NumResult<CriterionIntegrand> {
    Ok(match family {
        CriterionFamily::Heat | CriterionFamily::Polyharmonic(1) => {
            let (g1, _) = wall_constants(&heat_profile());
            CriterionIntegrand {
                family: CriterionFamily::Heat,
                amplitude: g1 / (2.0 * PI.sqrt()),
                power: 1.0,
                decay: 0.25,
                alpha: 2.0,
                freq: 0.0,
                phase: PI,
            }
        }
        CriterionFamily::Biharmonic | CriterionFamily::Polyharmonic(2) => {
            let fam = EquationFamily::BIHARMONIC;
            let fit = kernel_asymptotics_fit(fam, default_fit_window(fam))?;
            let (g1, g2) = wall_constants(&biharmonic_profile());
            wall_integrand(CriterionFamily::Biharmonic, &kernel_constants(fam), fit.amplitude, fit.phase, g1, g2)
        }
        CriterionFamily::Polyharmonic(m) => {
            if m == 0 {
                return Err(NumError::Invalid("order m must be at least 1".into()));
            }
            // no wall layer is available: the kernel tail alone carries the phase
            let fam = EquationFamily::Parabolic(m);
            let kc = kernel_constants(fam);
            let fit = kernel_asymptotics_fit(fam, default_fit_window(fam))?;
            CriterionIntegrand {
                family,
                amplitude: fit.amplitude,
                power: 1.0 - kc.delta0,
                decay: kc.d0,
                alpha: kc.alpha,
                freq: kc.b0,
                phase: -fit.phase,
            }
        }
        CriterionFamily::DispersionRight => {
            let fam = EquationFamily::Dispersion3;
            let fit = kernel_asymptotics_fit(fam, default_fit_window(fam))?;
            let (g1, g2) = wall_constants(&dispersion_profile());
            wall_integrand(family, &kernel_constants(fam), fit.amplitude, fit.phase, g1, g2)
        }
        CriterionFamily::DispersionLeft => {
            let kc = kernel_constants(EquationFamily::Dispersion3);
            CriterionIntegrand {
                family,
                amplitude: 1.0,
                power: 0.75,
                decay: kc.d0,
                alpha: 1.5,
                freq: 0.0,
                phase: PI,
            }
        }
        CriterionFamily::Beam4 => CriterionIntegrand {
            family,
            amplitude: 1.0,
            power: 28.0 / 13.0,
            decay: 0.0,
            alpha: 2.0,
            freq: 0.25,
            phase: 0.0,
        },
    })
}

/// Criterion integrand of `family`, cached.
pub fn criterion_integrand(family: CriterionFamily) -> NumResult<CriterionIntegrand> {
    static CACHE: OnceLock<Mutex<HashMap<CriterionFamily, CriterionIntegrand>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&family) {
        return Ok(v.clone());
    }
    let v = build_integrand(family)?;
    cache.lock().unwrap().insert(family, v.clone());
    Ok(v)
}

fn family_of(kc: &KernelConstants) -> CriterionFamily {
    match kc.family {
        EquationFamily::Parabolic(1) => CriterionFamily::Heat,
        EquationFamily::Parabolic(2) => CriterionFamily::Biharmonic,
        EquationFamily::Parabolic(m) => CriterionFamily::Polyharmonic(m),
        EquationFamily::Dispersion3 => CriterionFamily::DispersionRight,
        EquationFamily::Beam4 => CriterionFamily::Beam4,
    }
}

// ---------------------------------------------------------------------------
// oscillatory cut-off

/// `φ̃ ≥ φ` whose criterion phase skips the arcs where the trigonometric
/// factor is positive.
///
/// In the shifted phase `ψ = bφ^α + c − π/2` the good arcs are `[2πk, 2πk + π]`.
/// `φ̃` follows `φ` there, jumps across the bad arc during the last `ε_s` of
/// each good arc, waits just inside the next good arc and rejoins `φ` with a
/// quadratic blend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffBoundary {
    pub base: BoundaryFunction,
    pub integrand: CriterionIntegrand,
    pub eps_s: f64,
    pub identity: bool,
    pub notice: Option<String>,
}

fn smoothstep(x: f64) -> (f64, f64) {
    let x = x.clamp(0.0, 1.0);
    (x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x))
}

impl CutoffBoundary {
    /// `(J(ψ), J'(ψ))` of the monotone phase map.
    pub fn phase_map(&self, psi: f64) -> (f64, f64) {
        let e = self.eps_s;
        let two_pi = 2.0 * PI;
        let k = (psi / two_pi).floor();
        let base = two_pi * k;
        let r = psi - base;
        if r < e {
            // rejoin: J = base + e/2 + (e/2) q(s), q(s) = (s + 1)²/4
            let s = (r - 0.5 * e) / (0.5 * e);
            (base + 0.5 * e + 0.125 * e * (s + 1.0).powi(2), 0.5 * (s + 1.0))
        } else if r <= PI - e {
            (psi, 1.0)
        } else if r < PI {
            // jump towards the plateau L; the rise is concentrated in the middle quarter
            let t = (r - (PI - e)) / e;
            let (p, dp) = smoothstep(4.0 * (t - 0.375));
            let dp = 4.0 * dp / e;
            let l = base + two_pi + 0.5 * e;
            ((1.0 - p) * psi + p * l, (1.0 - p) + dp * (l - psi))
        } else {
            (base + two_pi + 0.5 * e, 0.0)
        }
    }

    /// `φ̃` at `τ = e^u`.
    pub fn at_log(&self, u: f64) -> f64 {
        let phi = self.base.at_log(u);
        if self.identity {
            return phi;
        }
        let ig = &self.integrand;
        let psi = ig.freq * phi.powf(ig.alpha) + ig.phase - 0.5 * PI;
        let (j, _) = self.phase_map(psi);
        ((j + 0.5 * PI - ig.phase) / ig.freq).powf(1.0 / ig.alpha)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.at_log(tau.ln())
    }

    /// `dφ̃/du`.
    pub fn log_slope(&self, u: f64) -> f64 {
        let phi = self.base.at_log(u);
        let dphi = self.base.log_slope(u);
        if self.identity {
            return dphi;
        }
        let ig = &self.integrand;
        let psi = ig.freq * phi.powf(ig.alpha) + ig.phase - 0.5 * PI;
        let (j, dj) = self.phase_map(psi);
        let theta_t = j + 0.5 * PI - ig.phase;
        let phit = (theta_t / ig.freq).powf(1.0 / ig.alpha);
        // dφ̃/dθ̃ · J' · dψ/dφ · dφ/du
        let dphit = phit / (ig.alpha * theta_t);
        dphit * dj * ig.freq * ig.alpha * phi.powf(ig.alpha - 1.0) * dphi
    }

    /// Trigonometric factor `cos(bφ̃^α + c)` at `τ = e^u`.
    pub fn trig_at_log(&self, u: f64) -> f64 {
        self.integrand.trig(self.at_log(u))
    }
}

/// Cut-off of `phi` for the criterion integrand of the family in `kc`.
pub fn apply_cutoff(phi: &BoundaryFunction, kc: &KernelConstants, eps_s: f64) -> NumResult<CutoffBoundary> {
    apply_cutoff_with(phi, &criterion_integrand(family_of(kc))?, eps_s)
}

pub fn apply_cutoff_with(phi: &BoundaryFunction, integrand: &CriterionIntegrand, eps_s: f64) -> NumResult<CutoffBoundary> {
    phi.validate()?;
    if !(eps_s > 0.0 && eps_s <= PI / 4.0) {
        return Err(NumError::Invalid("smoothing width must lie in (0, π/4]".into()));
    }
    if !phi.is_nondecreasing() {
        return Err(NumError::Invalid("the cut-off needs a nondecreasing boundary".into()));
    }
    let identity = !integrand.oscillatory();
    Ok(CutoffBoundary {
        base: phi.clone(),
        integrand: integrand.clone(),
        eps_s,
        identity,
        notice: identity.then(|| format!("{} integrand does not oscillate; cut-off is the identity", integrand.family)),
    })
}

/// Plain boundary or its cut-off.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Boundary {
    Plain(BoundaryFunction),
    Cutoff(CutoffBoundary),
}

impl Boundary {
    pub fn base(&self) -> &BoundaryFunction {
        match self {
            Boundary::Plain(b) => b,
            Boundary::Cutoff(c) => &c.base,
        }
    }

    pub fn at_log(&self, u: f64) -> f64 {
        match self {
            Boundary::Plain(b) => b.at_log(u),
            Boundary::Cutoff(c) => c.at_log(u),
        }
    }

    pub fn log_slope(&self, u: f64) -> f64 {
        match self {
            Boundary::Plain(b) => b.log_slope(u),
            Boundary::Cutoff(c) => c.log_slope(u),
        }
    }

    pub fn is_cutoff(&self) -> bool {
        matches!(self, Boundary::Cutoff(c) if !c.identity)
    }
}

impl From<BoundaryFunction> for Boundary {
    fn from(b: BoundaryFunction) -> Self {
        Boundary::Plain(b)
    }
}

impl From<CutoffBoundary> for Boundary {
    fn from(c: CutoffBoundary) -> Self {
        Boundary::Cutoff(c)
    }
}

// ---------------------------------------------------------------------------
// tail diagnosis

/// Contribution of `u ∈ [lo, hi]` (`u = ln τ`) to the criterion integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailWindow {
    pub lo: f64,
    pub hi: f64,
    pub integral: f64,
    pub abs_integral: f64,
    /// Running sum of `integral`.
    pub partial: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStatus {
    Convergent,
    /// Partial integrals leave monotonically towards `sign·∞`.
    Divergent { sign: i8 },
    DivergentOscillatory,
    Undecided,
}

impl fmt::Display for TailStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailStatus::Convergent => write!(f, "convergent"),
            TailStatus::Divergent { sign } if *sign < 0 => write!(f, "divergent to -inf"),
            TailStatus::Divergent { .. } => write!(f, "divergent to +inf"),
            TailStatus::DivergentOscillatory => write!(f, "divergent-oscillatory"),
            TailStatus::Undecided => write!(f, "undecided"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// `τ ∈ [2^j, 2^{j+1}]`.
    Dyadic,
    /// Between consecutive zeros of the trigonometric factor.
    HalfPeriod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDiagnosis {
    pub status: TailStatus,
    pub kind: WindowKind,
    pub windows: Vec<TailWindow>,
    /// Largest successive ratio of window magnitudes over the last six windows.
    pub ratio: Option<f64>,
    /// Dyadic: `p` in `|I_j| ~ 2^{j(1−p)} j^r`; half-period: growth power of `|I_k|` in `k`.
    pub exponent: Option<f64>,
    /// Dyadic: the logarithmic power `r`.
    pub log_power: Option<f64>,
    pub note: Option<String>,
}

const DYADIC_MAX: i32 = 60;
const MIN_WINDOWS: usize = 12;
const HALF_PERIODS: usize = 400;

fn window_integral<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> NumResult<(f64, f64)> {
    let h = |x: f64| g(x).abs();
    let (_, _, scale) = gk15(g, lo, hi);
    if scale == 0.0 {
        return Ok((0.0, 0.0));
    }
    let tol = 1e-10 * scale;
    let v = quad_finite(g, lo, hi, tol)?.value;
    let a = quad_finite(&h, lo, hi, tol)?.value;
    Ok((v, a))
}

fn windows_from<G: Fn(f64) -> f64>(g: &G, edges: &[f64]) -> NumResult<Vec<TailWindow>> {
    let mut out = Vec::with_capacity(edges.len());
    let mut partial = 0.0;
    for w in edges.windows(2) {
        let (v, a) = window_integral(g, w[0], w[1])?;
        partial += v;
        out.push(TailWindow { lo: w[0], hi: w[1], integral: v, abs_integral: a, partial });
    }
    Ok(out)
}

fn tail_signs(windows: &[TailWindow]) -> (bool, bool) {
    let tail = &windows[windows.len().saturating_sub(12)..];
    let sig = tail.iter().filter(|w| w.integral.abs() > 1e-3 * w.abs_integral);
    let mut pos = false;
    let mut neg = false;
    for w in sig {
        if w.integral > 0.0 {
            pos = true;
        } else {
            neg = true;
        }
    }
    (pos, neg)
}

fn divergent_status(windows: &[TailWindow]) -> TailStatus {
    match tail_signs(windows) {
        (true, true) => TailStatus::DivergentOscillatory,
        (true, false) => TailStatus::Divergent { sign: 1 },
        (false, true) => TailStatus::Divergent { sign: -1 },
        (false, false) => TailStatus::Undecided,
    }
}

/// Partial integrals of `g(u) = τ f(φ(τ))` over dyadic windows in `τ`.
///
/// Rule: six successive window ratios below 0.9 mean convergence; otherwise
/// `ln|I_j| = a + (1 − p) j ln 2 + r ln j` is fitted over the later windows and
/// `p > 1` (or `p ≈ 1` with `r < −1`) means convergence; divergence is
/// oscillatory when the late increments take both signs.
pub fn dyadic_tail<G: Fn(f64) -> f64>(g: G, log_domain: (f64, f64)) -> NumResult<TailDiagnosis> {
    let (ulo, uhi) = log_domain;
    let j0 = ((ulo.max(1.0)) / LN_2).ceil() as i32;
    let j1 = if uhi.is_finite() { ((uhi / LN_2).floor() as i32 - 1).min(DYADIC_MAX) } else { DYADIC_MAX };
    let mut diag = TailDiagnosis {
        status: TailStatus::Undecided,
        kind: WindowKind::Dyadic,
        windows: Vec::new(),
        ratio: None,
        exponent: None,
        log_power: None,
        note: None,
    };
    if j1 < j0 || ((j1 - j0 + 1) as usize) < MIN_WINDOWS {
        diag.note = Some(format!("insufficient range: fewer than {MIN_WINDOWS} dyadic windows"));
        return Ok(diag);
    }
    let edges: Vec<f64> = (j0..=j1 + 1).map(|j| j as f64 * LN_2).collect();
    diag.windows = windows_from(&g, &edges)?;
    let a: Vec<f64> = diag.windows.iter().map(|w| w.abs_integral).collect();
    let n = a.len();
    let last = &a[n - 6..];
    if last.iter().all(|v| *v == 0.0) {
        diag.status = TailStatus::Convergent;
        diag.ratio = Some(0.0);
        return Ok(diag);
    }
    let ratios: Vec<f64> = last.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY }).collect();
    let rmax = ratios.iter().cloned().fold(0.0, f64::max);
    diag.ratio = Some(rmax);
    if rmax < 0.9 {
        diag.status = TailStatus::Convergent;
        return Ok(diag);
    }
    // exponent fit over the later two thirds
    let start = n / 3;
    let pts: Vec<(f64, f64)> = (start..n)
        .filter(|&i| a[i] > 0.0)
        .map(|i| ((j0 + i as i32) as f64, a[i].ln()))
        .collect();
    if pts.len() < 8 {
        diag.note = Some("too few nonzero windows for the exponent fit".into());
        return Ok(diag);
    }
    let design = DMatrix::from_fn(pts.len(), 3, |i, k| match k {
        0 => 1.0,
        1 => pts[i].0,
        _ => pts[i].0.ln(),
    });
    let rhs = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let fit = least_squares(&design, &rhs)?;
    let p = 1.0 - fit.coef[1] / LN_2;
    let r = fit.coef[2];
    diag.exponent = Some(p);
    diag.log_power = Some(r);
    diag.status = if p > 1.02 {
        TailStatus::Convergent
    } else if p < 0.98 {
        divergent_status(&diag.windows)
    } else if r < -1.1 {
        TailStatus::Convergent
    } else if r > -0.9 {
        divergent_status(&diag.windows)
    } else {
        TailStatus::Undecided
    };
    Ok(diag)
}

/// Partial integrals between consecutive zeros of the trigonometric factor of
/// the base boundary; used when the phase grows like a power of `τ`.
pub fn half_period_tail<G: Fn(f64) -> f64>(g: G, base: &BoundaryFunction, integrand: &CriterionIntegrand) -> NumResult<TailDiagnosis> {
    let mut diag = TailDiagnosis {
        status: TailStatus::Undecided,
        kind: WindowKind::HalfPeriod,
        windows: Vec::new(),
        ratio: None,
        exponent: None,
        log_power: None,
        note: None,
    };
    if !integrand.oscillatory() {
        diag.note = Some("integrand does not oscillate".into());
        return Ok(diag);
    }
    let (ulo, uhi) = base.log_domain();
    let theta_lo = integrand.freq * base.at_log(ulo).powf(integrand.alpha) + integrand.phase;
    let k0 = ((theta_lo - 0.5 * PI) / PI).ceil();
    let mut edges = Vec::with_capacity(HALF_PERIODS + 1);
    for i in 0..=HALF_PERIODS {
        let theta = 0.5 * PI + (k0 + i as f64) * PI;
        let phi = ((theta - integrand.phase) / integrand.freq).powf(1.0 / integrand.alpha);
        let Some(u) = base.inverse_log(phi) else {
            diag.note = Some("half-period windows need an invertible closed-form boundary".into());
            return Ok(diag);
        };
        if u > uhi {
            break;
        }
        edges.push(u);
    }
    if edges.len() < 2 * MIN_WINDOWS {
        diag.note = Some("insufficient range for half-period windows".into());
        return Ok(diag);
    }
    diag.windows = windows_from(&g, &edges)?;
    // full periods smooth out the alternation of large and small half-periods
    let a: Vec<f64> = diag.windows.chunks_exact(2).map(|c| c[0].abs_integral + c[1].abs_integral).collect();
    let n = a.len();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (n / 2..n).filter(|&i| a[i] > 0.0).map(|i| (((i + 1) as f64).ln(), a[i].ln())).unzip();
    if xs.len() < 8 {
        diag.note = Some("too few nonzero windows for the exponent fit".into());
        return Ok(diag);
    }
    let (s, _) = linear_fit(&xs, &ys)?;
    diag.exponent = Some(s);
    let (pos, neg) = tail_signs(&diag.windows);
    diag.status = if pos && neg {
        // alternating series: converges iff the terms decay
        if s < -0.01 {
            TailStatus::Convergent
        } else if s > 0.01 {
            TailStatus::DivergentOscillatory
        } else {
            TailStatus::Undecided
        }
    } else if s < -1.02 {
        TailStatus::Convergent
    } else if s > -0.98 {
        divergent_status(&diag.windows)
    } else {
        TailStatus::Undecided
    };
    Ok(diag)
}

/// Numeric diagnosis of `∫ f(φ(τ)) dτ` for `boundary`.
pub fn tail_diagnosis(integrand: &CriterionIntegrand, boundary: &Boundary) -> NumResult<TailDiagnosis> {
    let g = |u: f64| integrand.in_log(u, boundary.at_log(u));
    let base = boundary.base();
    if integrand.oscillatory() && matches!(base, BoundaryFunction::Power { .. }) {
        half_period_tail(g, base, integrand)
    } else {
        dyadic_tail(g, base.log_domain())
    }
}

// ---------------------------------------------------------------------------
// verdicts

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Regular,
    IrregularNonsingular,
    IrregularSingular,
    Indeterminate,
}

impl Verdict {
    pub fn is_irregular(&self) -> bool {
        matches!(self, Verdict::IrregularNonsingular | Verdict::IrregularSingular)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Regular => "regular",
            Verdict::IrregularNonsingular => "irregular-nonsingular",
            Verdict::IrregularSingular => "irregular-singular",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rationale {
    AnalyticFamily,
    NumericTail,
    DelegatedSpectral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionVerdict {
    pub verdict: Verdict,
    pub rationale: Rationale,
    pub family: CriterionFamily,
    pub boundary: String,
    pub cutoff: bool,
    /// Threshold of the family parameter that the verdict is measured against.
    pub threshold: Option<f64>,
    /// Power of `τ` in the integrand envelope (analytic) or the fitted tail exponent.
    pub tail_exponent: Option<f64>,
    /// Convergence of the integral for the base boundary.
    pub tail: TailStatus,
    /// Partial integrals over windows for the boundary actually used.
    pub diagnostics: Option<TailDiagnosis>,
    /// `λ₀(l)` when a constant boundary is delegated to the interval spectrum.
    pub lambda0: Option<f64>,
    /// Verdict of the equivalent `ρ(h)` form (heat only).
    pub rho_form: Option<Verdict>,
    pub notes: Vec<String>,
}

/// Closed-form convergence of `∫ f(φ(τ)) dτ` for the closed-form families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticTail {
    pub status: TailStatus,
    pub threshold: Option<f64>,
    pub exponent: Option<f64>,
    pub reason: String,
}

pub fn analytic_tail(ig: &CriterionIntegrand, phi: &BoundaryFunction) -> Option<AnalyticTail> {
    let osc_or = |sign: i8| if ig.oscillatory() { TailStatus::DivergentOscillatory } else { TailStatus::Divergent { sign } };
    let trig_sign = (ig.phase.cos() < 0.0).then_some(-1).unwrap_or(1);
    match phi {
        BoundaryFunction::Constant { l } => {
            let v = ig.eval(*l);
            if v == 0.0 {
                return None;
            }
            Some(AnalyticTail {
                status: TailStatus::Divergent { sign: if v < 0.0 { -1 } else { 1 } },
                threshold: None,
                exponent: Some(0.0),
                reason: format!("constant integrand {v:.6e}"),
            })
        }
        BoundaryFunction::PowerLog { .. } | BoundaryFunction::PetrovskiiSqrtLog { .. } => {
            let (c, gamma) = phi.as_power_log()?;
            if ig.decay > 0.0 {
                let gc = 1.0 / ig.alpha;
                let cth = ig.decay.powf(-gc);
                if (gamma - gc).abs() <= 1e-12 {
                    let e = ig.decay * c.powf(ig.alpha);
                    // at e = 1 the leftover (ln τ)^{qγ}/τ still diverges
                    let status = if e > 1.0 + 1e-12 { TailStatus::Convergent } else { osc_or(trig_sign) };
                    Some(AnalyticTail {
                        status,
                        threshold: Some(cth),
                        exponent: Some(e),
                        reason: format!("envelope τ^(-{e:.6}), threshold C = {cth:.10}"),
                    })
                } else if gamma < gc {
                    Some(AnalyticTail {
                        status: osc_or(trig_sign),
                        threshold: Some(gc),
                        exponent: Some(0.0),
                        reason: format!("γ = {gamma} below the critical 1/α = {gc:.6}: envelope decays slower than any power"),
                    })
                } else {
                    Some(AnalyticTail {
                        status: TailStatus::Convergent,
                        threshold: Some(gc),
                        exponent: Some(f64::INFINITY),
                        reason: format!("γ = {gamma} above the critical 1/α = {gc:.6}: envelope decays faster than any power"),
                    })
                }
            } else {
                Some(AnalyticTail {
                    status: osc_or(trig_sign),
                    threshold: None,
                    exponent: Some(0.0),
                    reason: "no exponential envelope: the integrand does not decay in τ".into(),
                })
            }
        }
        BoundaryFunction::Power { c, gamma } => {
            if *gamma <= 0.0 {
                return None;
            }
            if ig.decay > 0.0 {
                return Some(AnalyticTail {
                    status: TailStatus::Convergent,
                    threshold: None,
                    exponent: Some(f64::INFINITY),
                    reason: "stretched-exponential envelope".into(),
                });
            }
            let Some(gth) = ig.critical_power_exponent() else {
                return Some(AnalyticTail {
                    status: osc_or(trig_sign),
                    threshold: None,
                    exponent: None,
                    reason: "amplitude power q ≥ α: no member of the family converges".into(),
                });
            };
            // s = τ^{αγ}: integrand s^{q/α + 1/(αγ) − 1} cos(bC^α s + c)
            let p = ig.power / ig.alpha + 1.0 / (ig.alpha * gamma) - 1.0;
            let _ = c;
            let status = if !ig.oscillatory() {
                if p < -1.0 {
                    TailStatus::Convergent
                } else {
                    TailStatus::Divergent { sign: trig_sign }
                }
            } else if *gamma > gth {
                TailStatus::Convergent
            } else {
                TailStatus::DivergentOscillatory
            };
            Some(AnalyticTail {
                status,
                threshold: Some(gth),
                exponent: Some(p),
                reason: format!("phase variable power {p:.6}; critical γ = {gth:.6}"),
            })
        }
        BoundaryFunction::Tabulated { .. } => None,
    }
}

fn verdict_for(status: TailStatus, cutoff: bool, notes: &mut Vec<String>) -> Verdict {
    match status {
        TailStatus::Convergent => Verdict::IrregularNonsingular,
        TailStatus::Divergent { sign } if sign < 0 => Verdict::Regular,
        TailStatus::Divergent { .. } => Verdict::IrregularSingular,
        TailStatus::DivergentOscillatory => {
            if cutoff {
                Verdict::Regular
            } else {
                notes.push(
                    "divergent with sign-alternating increments: a₀ oscillates unboundedly (irregular-singular signature); \
                     a regular verdict needs the oscillatory cut-off"
                        .into(),
                );
                Verdict::Indeterminate
            }
        }
        TailStatus::Undecided => Verdict::Indeterminate,
    }
}

fn classify_with(ig: &CriterionIntegrand, phi: &Boundary) -> NumResult<CriterionVerdict> {
    let base = phi.base();
    base.validate()?;
    let cutoff = phi.is_cutoff();
    let mut notes = Vec::new();
    if let Boundary::Cutoff(c) = phi {
        if let Some(n) = &c.notice {
            notes.push(n.clone());
        }
        if c.integrand.family != ig.family {
            return Err(NumError::Invalid(format!(
                "cut-off was built for {} but the criterion is {}",
                c.integrand.family, ig.family
            )));
        }
    }
    let diagnostics = tail_diagnosis(ig, phi).ok();
    let mut out = CriterionVerdict {
        verdict: Verdict::Indeterminate,
        rationale: Rationale::AnalyticFamily,
        family: ig.family,
        boundary: base.to_string(),
        cutoff,
        threshold: None,
        tail_exponent: None,
        tail: TailStatus::Undecided,
        diagnostics,
        lambda0: None,
        rho_form: None,
        notes: Vec::new(),
    };
    if let Some(an) = analytic_tail(ig, base) {
        out.tail = an.status;
        out.threshold = an.threshold;
        out.tail_exponent = an.exponent;
        notes.push(an.reason);
        out.verdict = verdict_for(an.status, cutoff, &mut notes);
    } else {
        out.rationale = Rationale::NumericTail;
        let base_diag = if cutoff { tail_diagnosis(ig, &Boundary::Plain(base.clone()))? } else { out.diagnostics.clone().unwrap_or_else(|| unreachable_diag()) };
        out.tail = base_diag.status;
        out.tail_exponent = base_diag.exponent;
        if let Some(n) = &base_diag.note {
            notes.push(n.clone());
        }
        out.verdict = match (base_diag.status, cutoff) {
            (TailStatus::Convergent, _) => Verdict::IrregularNonsingular,
            (TailStatus::Undecided, _) => Verdict::Indeterminate,
            (_, true) => match out.diagnostics.as_ref().map(|d| d.status) {
                Some(TailStatus::Divergent { sign }) if sign < 0 => Verdict::Regular,
                _ => {
                    notes.push("cut-off boundary does not diverge monotonically to -inf".into());
                    Verdict::Indeterminate
                }
            },
            (s, false) => verdict_for(s, false, &mut notes),
        };
    }
    out.notes = notes;
    Ok(out)
}

fn unreachable_diag() -> TailDiagnosis {
    TailDiagnosis {
        status: TailStatus::Undecided,
        kind: WindowKind::Dyadic,
        windows: Vec::new(),
        ratio: None,
        exponent: None,
        log_power: None,
        note: Some("numeric diagnosis failed".into()),
    }
}

fn delegated(family: CriterionFamily, l: f64, m: u32, phi: &Boundary) -> NumResult<CriterionVerdict> {
    let lambda = if m == 2 {
        top_eigenvalue(l, 1e-12)?
    } else {
        let p = IntervalEigenProblem::new(l)
            .with_family(EquationFamily::Parabolic(m))
            .with_method(Method::Shooting);
        interval_spectrum(&p, 1)?[0].lambda.re
    };
    let mut notes = vec![format!("λ₀({l}) = {lambda:.10e}")];
    if phi.is_cutoff() {
        notes.push("constant boundary: the cut-off is not applied".into());
    }
    let verdict = if lambda < -1e-9 {
        Verdict::Regular
    } else if lambda > 1e-9 {
        Verdict::IrregularSingular
    } else {
        notes.push("λ₀ is zero within the eigenvalue tolerance".into());
        Verdict::Indeterminate
    };
    Ok(CriterionVerdict {
        verdict,
        rationale: Rationale::DelegatedSpectral,
        family,
        boundary: phi.base().to_string(),
        cutoff: false,
        threshold: None,
        tail_exponent: None,
        tail: TailStatus::Undecided,
        diagnostics: None,
        lambda0: Some(lambda),
        rho_form: None,
        notes,
    })
}

/// Regularity of the vertex for `u_t = −u_xxxx` with lateral boundary `φ`.
pub fn classify_biharmonic(phi: &Boundary) -> NumResult<CriterionVerdict> {
    classify_polyharmonic(2, phi)
}

/// `u_t = −(−Δ)^m u`; critical family `C (ln τ)^{(2m−1)/2m}`, `C* = d₀^{−1/α}`.
pub fn classify_polyharmonic(m: u32, phi: &Boundary) -> NumResult<CriterionVerdict> {
    if m == 0 {
        return Err(NumError::Invalid("order m must be at least 1".into()));
    }
    if m == 1 {
        return classify_heat(phi.base());
    }
    let family = if m == 2 { CriterionFamily::Biharmonic } else { CriterionFamily::Polyharmonic(m) };
    if let BoundaryFunction::Constant { l } = phi.base() {
        return delegated(family, *l, m, phi);
    }
    classify_with(&criterion_integrand(family)?, phi)
}

/// Heat equation: regular iff `∫ φ e^{−φ²/4} dτ = ∞`; no cut-off is involved.
pub fn classify_heat(phi: &BoundaryFunction) -> NumResult<CriterionVerdict> {
    let ig = criterion_integrand(CriterionFamily::Heat)?;
    let mut v = classify_with(&ig, &Boundary::Plain(phi.clone()))?;
    let rho = petrovskii_rho_verdict(phi)?;
    v.rho_form = Some(rho);
    if rho != v.verdict {
        v.notes.push(format!("ρ-form gives {rho}, φ-form gives {}", v.verdict));
    }
    Ok(v)
}

/// Classic form: `R = 2√h √(−ln ρ(h))`, `h = −t`, regular iff
/// `∫₀ ρ(h)√|ln ρ(h)| dh/h = ∞`. Evaluated numerically in `ln ln(1/h)`.
pub fn petrovskii_rho_verdict(phi: &BoundaryFunction) -> NumResult<Verdict> {
    phi.validate()?;
    // ln ρ(h) = −φ(ln(1/h))²/4; with w = ln ln(1/h), dh/h = −e^w dw
    let ln_rho = |w: f64| -0.25 * phi.at_log(w).powi(2);
    let g = |w: f64| {
        let lr = ln_rho(w);
        (w + lr).exp() * (-lr).sqrt()
    };
    let d = dyadic_tail(g, phi.log_domain())?;
    // positive integrand: divergence is regularity
    Ok(match d.status {
        TailStatus::Convergent => Verdict::IrregularNonsingular,
        TailStatus::Divergent { sign } if sign > 0 => Verdict::Regular,
        _ => Verdict::Indeterminate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("side must be left or right, got '{other}'")),
        }
    }
}

/// `u_t = u_xxx`. Right wall: oscillatory `φ^{3/4}cos(d₀φ^{3/2} + ·)` without
/// envelope; left wall: positive envelope `e^{−d₀φ^{3/2}}`.
pub fn classify_dispersion(side: Side, phi: &Boundary) -> NumResult<CriterionVerdict> {
    let family = match side {
        Side::Left => CriterionFamily::DispersionLeft,
        Side::Right => CriterionFamily::DispersionRight,
    };
    classify_with(&criterion_integrand(family)?, phi)
}

/// `u_tt = −u_xxxx`: only diagnostics; the family has no convergent member.
pub fn classify_beam(phi: &Boundary) -> NumResult<CriterionVerdict> {
    let mut v = classify_with(&criterion_integrand(CriterionFamily::Beam4)?, phi)?;
    if v.verdict == Verdict::Regular {
        v.verdict = Verdict::Indeterminate;
        v.notes.push("beam verdicts are diagnostic only; no regularity claim is made".into());
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// first Fourier coefficient

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum A0Model {
    Heat,
    Biharmonic,
    Dispersion3,
    Beam4,
    /// `a₀` inside the kernel argument.
    Pme4,
    /// `a₀' = −exp(−d₀(φ/√a₀)^{4/3})`.
    Pme4Reduced,
}

impl FromStr for A0Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heat" => Ok(A0Model::Heat),
            "biharmonic" => Ok(A0Model::Biharmonic),
            "dispersion3" | "dispersion" => Ok(A0Model::Dispersion3),
            "beam4" | "beam" => Ok(A0Model::Beam4),
            "pme4" => Ok(A0Model::Pme4),
            "pme4-reduced" | "pme4reduced" => Ok(A0Model::Pme4Reduced),
            other => Err(format!("unknown a0 model '{other}'")),
        }
    }
}

/// `a ≈ A (ln τ)^p` fitted on a window of `ln τ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A0Trace {
    pub model: A0Model,
    /// Samples of `u = ln τ`.
    pub log_tau: Vec<f64>,
    pub ln_a0: Vec<f64>,
    pub hit_zero: bool,
    pub hit_at: Option<f64>,
    /// Fit over the last two decades of `ln τ`.
    pub fit: Option<LogPowerFit>,
}

impl A0Trace {
    pub fn a0(&self) -> Vec<f64> {
        self.ln_a0.iter().map(|v| v.exp()).collect()
    }

    pub fn fit_window(&self, window: (f64, f64)) -> NumResult<LogPowerFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .log_tau
            .iter()
            .zip(&self.ln_a0)
            .filter(|(u, _)| **u >= window.0 * (1.0 - 1e-12) && **u <= window.1 * (1.0 + 1e-12))
            .map(|(u, y)| (u.ln(), *y))
            .unzip();
        let (s, b) = linear_fit(&xs, &ys)?;
        Ok(LogPowerFit { exponent: s, amplitude: b.exp(), window })
    }
}

/// `ln a₀` below this counts as reaching zero.
pub const A0_FLOOR_LN: f64 = -200.0;

struct A0Constants {
    bih: (f64, f64),
    disp: (f64, f64),
    pme: (f64, f64),
    bih_ig: CriterionIntegrand,
    disp_ig: CriterionIntegrand,
    fit_end: f64,
    disp_fit_end: f64,
}

fn a0_constants() -> NumResult<&'static A0Constants> {
    static CELL: OnceLock<A0Constants> = OnceLock::new();
    if let Some(c) = CELL.get() {
        return Ok(c);
    }
    let pme = solve_bl_bvp(BlFamily::Pme4, 30.0, 1e-12)?;
    let c = A0Constants {
        bih: wall_constants(&biharmonic_profile()),
        disp: wall_constants(&dispersion_profile()),
        pme: wall_constants(&pme),
        bih_ig: criterion_integrand(CriterionFamily::Biharmonic)?,
        disp_ig: criterion_integrand(CriterionFamily::DispersionRight)?,
        fit_end: default_fit_window(EquationFamily::BIHARMONIC).1,
        disp_fit_end: default_fit_window(EquationFamily::Dispersion3).1,
    };
    Ok(CELL.get_or_init(|| c))
}

/// `(F(y), F'(y))` of the bi-harmonic kernel.
fn bih_kernel(y: f64) -> (f64, f64) {
    let f = eval_kernel_derivative(EquationFamily::BIHARMONIC, 0, y, 1e-11).unwrap_or(f64::NAN);
    let df = eval_kernel_derivative(EquationFamily::BIHARMONIC, 1, y, 1e-11).unwrap_or(f64::NAN);
    (f, df)
}

/// `d ln a₀ / du` at `u = ln τ`.
fn a0_rate(model: A0Model, k: &A0Constants, u: f64, phi: f64, ln_a: f64) -> f64 {
    match model {
        A0Model::Heat => -(u + 0.5f64.ln() - (2.0 * PI.sqrt()).ln() + phi.ln() - 0.25 * phi * phi).exp(),
        A0Model::Biharmonic => {
            if phi <= k.fit_end {
                let (f, df) = bih_kernel(phi);
                let (g1, g2) = k.bih;
                u.exp() * (g2 * phi * f + g1 * phi.powf(2.0 / 3.0) * df)
            } else {
                k.bih_ig.in_log(u, phi)
            }
        }
        A0Model::Dispersion3 => {
            if phi <= k.disp_fit_end {
                let f = eval_kernel_derivative(EquationFamily::Dispersion3, 0, phi, 1e-11).unwrap_or(f64::NAN);
                let df = eval_kernel_derivative(EquationFamily::Dispersion3, 1, phi, 1e-11).unwrap_or(f64::NAN);
                let (g1, g2) = k.disp;
                u.exp() * (g2 * phi * f + g1 * phi.sqrt() * df)
            } else {
                k.disp_ig.in_log(u, phi)
            }
        }
        A0Model::Beam4 => (u + (28.0 / 13.0) * phi.ln()).exp() * (0.25 * phi * phi).cos(),
        A0Model::Pme4 => {
            let a = ln_a.exp();
            let y = phi / a.sqrt();
            let (g1, g2) = k.pme;
            if y <= k.fit_end {
                let (f, df) = bih_kernel(y);
                u.exp() * (g2 * a.sqrt() * phi * f + g1 * a.powf(2.0 / 3.0) * phi.powf(2.0 / 3.0) * df) / a
            } else {
                // fitted tail R y^{−δ₀} e^{−d₀y^α} cos(b₀y^α − θ₀) and its derivative
                let kc = kernel_constants(EquationFamily::BIHARMONIC);
                let (r, theta0) = pme_kernel_fit();
                let ya = y.powf(kc.alpha);
                let env = r * (-kc.d0 * ya - kc.delta0 * y.ln()).exp();
                let osc = Complex64::from_polar(1.0, kc.b0 * ya - theta0);
                let w = Complex64::new(-kc.d0, kc.b0) * kc.alpha * y.powf(kc.alpha - 1.0) - kc.delta0 / y;
                let f = env * osc.re;
                let df = env * (w * osc).re;
                u.exp() * (g2 * a.sqrt() * phi * f + g1 * a.powf(2.0 / 3.0) * phi.powf(2.0 / 3.0) * df) / a
            }
        }
        A0Model::Pme4Reduced => {
            let d0 = kernel_constants(EquationFamily::BIHARMONIC).d0;
            -(u - d0 * phi.powf(4.0 / 3.0) * (-2.0 * ln_a / 3.0).exp() - ln_a).exp()
        }
    }
}

fn pme_kernel_fit() -> (f64, f64) {
    static CELL: OnceLock<(f64, f64)> = OnceLock::new();
    *CELL.get_or_init(|| {
        let fam = EquationFamily::BIHARMONIC;
        kernel_asymptotics_fit(fam, default_fit_window(fam)).map(|f| (f.amplitude, f.phase)).unwrap_or((f64::NAN, f64::NAN))
    })
}

/// Backward Euler with one Richardson extrapolation per step, for the stiff
/// relaxation of `ln a₀` in the PME models. Stops where `y` falls below `floor`.
fn implicit_scalar<F: Fn(f64, f64) -> f64>(f: F, y0: f64, span: (f64, f64), tol: f64, floor: f64) -> NumResult<(f64, Option<f64>)> {
    let be = |x1: f64, h: f64, yp: f64| -> NumResult<f64> {
        let mut y = yp + h * f(x1 - h, yp);
        for _ in 0..50 {
            let fy = f(x1, y);
            let dy = 1e-7 * (1.0 + y.abs());
            let j = (f(x1, y + dy) - f(x1, y - dy)) / (2.0 * dy);
            let step = (y - yp - h * fy) / (1.0 - h * j);
            y -= step;
            if !y.is_finite() {
                break;
            }
            if step.abs() <= 1e-14 * (1.0 + y.abs()) {
                return Ok(y);
            }
        }
        Err(NumError::NonFinite(format!("implicit step at x = {x1}")))
    };
    let (x0, x1) = span;
    let mut x = x0;
    let mut y = y0;
    let mut h = (1e-3 * x0.abs()).max(1e-6).min(x1 - x0);
    let mut steps = 0usize;
    while x < x1 {
        h = h.min(x1 - x).min(0.05 * x.abs().max(1.0));
        let full = be(x + h, h, y);
        let half = be(x + 0.5 * h, 0.5 * h, y).and_then(|m| be(x + h, 0.5 * h, m));
        match (full, half) {
            (Ok(a), Ok(b)) => {
                let err = (b - a).abs();
                if err <= tol * (1.0 + b.abs()) {
                    x += h;
                    y = 2.0 * b - a;
                    if y < floor {
                        return Ok((y, Some(x)));
                    }
                }
                let fac = (tol * (1.0 + b.abs()) / err.max(1e-300)).sqrt();
                h *= (0.9 * fac).clamp(0.2, 4.0);
            }
            _ => h *= 0.25,
        }
        steps += 1;
        if h < 1e-14 * x.abs().max(1.0) || steps > 2_000_000 {
            return Err(NumError::StepUnderflow { at: x });
        }
    }
    Ok((y, None))
}

/// Integrates the first-coefficient ODE in `u = ln τ` over `log_span` from
/// `a₀ = a0_init`, sampling `samples` log-spaced points in `u`.
pub fn integrate_a0(model: A0Model, phi: &Boundary, log_span: (f64, f64), a0_init: f64, samples: usize) -> NumResult<A0Trace> {
    let (u0, u1) = log_span;
    if !(u0 >= 1.0 - 1e-12 && u1 > u0 && u1.is_finite()) {
        return Err(NumError::Invalid("ln τ span must satisfy 1 ≤ u0 < u1 < ∞".into()));
    }
    if !(a0_init > 0.0) {
        return Err(NumError::Invalid("a0_init must be positive".into()));
    }
    if samples < 2 {
        return Err(NumError::Invalid("need at least two samples".into()));
    }
    phi.base().validate()?;
    let (_, dhi) = phi.base().log_domain();
    if u1 > dhi {
        return Err(NumError::Invalid(format!("boundary is only defined up to ln τ = {dhi}")));
    }
    let k = a0_constants()?;
    let grid: Vec<f64> = (0..samples)
        .map(|i| (u0.ln() + (u1.ln() - u0.ln()) * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let rhs = |u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = a0_rate(model, k, u, phi.at_log(u), y[0]);
    };
    let mut log_tau = vec![u0];
    let mut ln_a0 = vec![a0_init.ln()];
    let mut y = vec![a0_init.ln()];
    let mut x = u0;
    let mut hit_at = None;
    for &xt in &grid[1..] {
        let ev = if matches!(model, A0Model::Pme4 | A0Model::Pme4Reduced) {
            let f = |u: f64, v: f64| a0_rate(model, k, u, phi.at_log(u), v);
            match implicit_scalar(f, y[0], (x, xt), 1e-7, A0_FLOOR_LN)? {
                (v, None) => {
                    y[0] = v;
                    None
                }
                (v, Some(at)) => Some(crate::numcore::OdeEvent { x: at, y: vec![v] }),
            }
        } else {
            let (tr, ev) = integrate_ode_until(rhs, &y, (x, xt), 1e-10, |_, s: &[f64]| s[0] - A0_FLOOR_LN)?;
            y = tr.last().1.to_vec();
            ev
        };
        if let Some(e) = ev {
            hit_at = Some(e.x);
            log_tau.push(e.x);
            ln_a0.push(e.y[0]);
            break;
        }
        if !y[0].is_finite() {
            return Err(NumError::NonFinite(format!("ln a0 at ln τ = {xt}")));
        }
        x = xt;
        log_tau.push(x);
        ln_a0.push(y[0]);
    }
    let mut trace = A0Trace { model, log_tau, ln_a0, hit_zero: hit_at.is_some(), hit_at, fit: None };
    if !trace.hit_zero {
        let w = ((u1 / 100.0).max(u0), u1);
        trace.fit = trace.fit_window(w).ok();
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// PME-4

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pme4Outcome {
    /// `a₀` reached zero: regular.
    HitZero,
    /// `a₀ → 0` like a negative power of `ln τ`: regular.
    Decaying,
    /// `a₀` settles at a positive level: irregular.
    Bounded,
    Undecided,
}

/// Outcome of a reduced-model trace from the log-log slope over its last decade.
pub fn pme4_outcome(trace: &A0Trace) -> Pme4Outcome {
    if trace.hit_zero {
        return Pme4Outcome::HitZero;
    }
    let u1 = *trace.log_tau.last().unwrap();
    let u0 = trace.log_tau[0];
    match trace.fit_window(((u1 / 10.0).max(u0), u1)) {
        Ok(f) if f.exponent < -0.05 => Pme4Outcome::Decaying,
        Ok(f) if f.exponent > -0.01 => Pme4Outcome::Bounded,
        _ => Pme4Outcome::Undecided,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pme4Run {
    pub c: f64,
    pub gamma: f64,
    pub outcome: Pme4Outcome,
    pub final_a0: f64,
    /// `d₀^{3/2} C²`: for `γ = 3/4`, `a₀` decays while above this level and freezes below it.
    pub critical_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pme4Critical {
    pub gamma: f64,
    pub family: String,
    pub explanation: String,
    pub runs: Vec<Pme4Run>,
    pub same_classification: bool,
}

/// Reduced model under `φ = C (ln τ)^γ` on `ln τ ∈ [1, u_end]` from `a₀ = 1`.
pub fn pme4_reduced_run(c: f64, gamma: f64, u_end: f64) -> NumResult<Pme4Run> {
    let phi = BoundaryFunction::PowerLog { c, gamma };
    let tr = integrate_a0(A0Model::Pme4Reduced, &phi.into(), (1.0, u_end), 1.0, 121)?;
    let d0 = kernel_constants(EquationFamily::BIHARMONIC).d0;
    Ok(Pme4Run {
        c,
        gamma,
        outcome: pme4_outcome(&tr),
        final_a0: tr.ln_a0.last().unwrap().exp(),
        critical_level: d0.powf(1.5) * c * c,
    })
}

/// Critical boundary of the PME-4 reduced model and the check that its
/// constant does not matter.
pub fn pme4_critical() -> NumResult<Pme4Critical> {
    let runs = vec![pme4_reduced_run(1.0, 0.75, 1e4)?, pme4_reduced_run(2.0, 0.75, 1e4)?];
    let same = runs[0].outcome == runs[1].outcome;
    Ok(Pme4Critical {
        gamma: 0.75,
        family: "R*(t) = C (-t)^{1/4} [ln|ln(-t)|]^{3/4}".into(),
        explanation: "u = A û, x = √A x̂ maps the equation to itself and rescales C, so C cannot decide regularity; \
                      in the reduced model a₀^{-2/3} C^{4/3} is the only combination that enters"
            .into(),
        runs,
        same_classification: same,
    })
}

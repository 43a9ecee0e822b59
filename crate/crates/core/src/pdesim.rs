//! Direct solver for the rescaled problem `v_τ = B*v` in the shrinking domain
//! `|y| < φ(τ)`, written on the fixed grid `z = y/φ ∈ [−1, 1]`:
//!
//! `w_τ = −φ^{−4} w_zzzz + (φ'/φ − 1/4) z w_z` (clamped),
//! `w_τ =  φ^{−2} w_zz   + (φ'/φ − 1/2) z w_z` (heat, Dirichlet).

use crate::blayer::{biharmonic_closed_form, heat_closed_form};
use crate::criteria::{Boundary, BoundaryFunction, TAU0};
use crate::kernels::{eval_kernel, hermite_pair, EquationFamily};
use crate::numcore::BandMatrix;
use crate::numcore::lsq::linear_fit;
use crate::numcore::{NumError, NumResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimFamily {
    Heat,
    Biharmonic,
}

impl SimFamily {
    fn m(self) -> u32 {
        match self {
            SimFamily::Heat => 1,
            SimFamily::Biharmonic => 2,
        }
    }

    /// `α = 2m/(2m − 1)`: the wall layer variable is `ξ = φ^α (1 − z)`.
    fn alpha(self) -> f64 {
        let m = self.m() as f64;
        2.0 * m / (2.0 * m - 1.0)
    }

    fn equation(self) -> EquationFamily {
        EquationFamily::Parabolic(self.m())
    }

    /// Power of `1 − z²` that makes data satisfy the boundary conditions.
    fn clamp_power(self) -> i32 {
        self.m() as i32
    }
}

impl fmt::Display for SimFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimFamily::Heat => "heat",
            SimFamily::Biharmonic => "biharmonic",
        })
    }
}

impl FromStr for SimFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heat" => Ok(SimFamily::Heat),
            "biharmonic" => Ok(SimFamily::Biharmonic),
            other => Err(format!("simulation family must be heat or biharmonic, got '{other}'")),
        }
    }
}

/// Initial data on `z ∈ [−1, 1]`, multiplied by `(1 − z²)^m` so that the
/// boundary conditions hold, then scaled to unit sup-norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialData {
    /// `Σ c_j z^j`.
    Polynomial { coeffs: Vec<f64> },
    /// Gaussian bump.
    Bump { center: f64, width: f64 },
    /// `Σ_{k<modes} c_k T_k(z)`, `c_k` uniform in `[−1, 1]/(1 + k)²`, from a seeded stream.
    RandomSmooth { seed: u64, modes: usize },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::Bump { center: 0.0, width: 0.4 }
    }
}

impl InitialData {
    fn raw(&self, z: &[f64]) -> Vec<f64> {
        match self {
            InitialData::Polynomial { coeffs } => {
                z.iter().map(|&x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)).collect()
            }
            InitialData::Bump { center, width } => {
                z.iter().map(|&x| (-(x - center).powi(2) / (2.0 * width * width)).exp()).collect()
            }
            InitialData::RandomSmooth { seed, modes } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let c: Vec<f64> = (0..*modes).map(|k| rng.gen_range(-1.0..1.0) / ((1 + k) as f64).powi(2)).collect();
                z.iter()
                    .map(|&x| {
                        let t = x.clamp(-1.0, 1.0).acos();
                        c.iter().enumerate().map(|(k, ck)| ck * (k as f64 * t).cos()).sum()
                    })
                    .collect()
            }
        }
    }

    /// Samples on the nodes `z`, boundary conditions built in.
    pub fn sample(&self, family: SimFamily, z: &[f64]) -> NumResult<Vec<f64>> {
        if let InitialData::Bump { width, .. } = self {
            if !(*width > 0.0) {
                return Err(NumError::Invalid("bump width must be positive".into()));
            }
        }
        if let InitialData::RandomSmooth { modes, .. } = self {
            if *modes == 0 {
                return Err(NumError::Invalid("random-smooth data needs at least one mode".into()));
            }
        }
        let p = family.clamp_power();
        let mut w: Vec<f64> = self.raw(z).iter().zip(z).map(|(v, x)| v * (1.0 - x * x).powi(p)).collect();
        let s = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(s > 0.0 && s.is_finite()) {
            return Err(NumError::Invalid("initial data vanishes on the grid".into()));
        }
        w.iter_mut().for_each(|v| *v /= s);
        Ok(w)
    }
}

/// Adaptive variable-step BDF2 controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    pub dt_init: f64,
    pub dt_max: f64,
    /// Local error per step relative to the sup-norm.
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy { dt_init: 1e-5, dt_max: 1.0, rtol: 1e-6, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub family: SimFamily,
    pub boundary: Boundary,
    /// Number of grid intervals on `[−1, 1]`; even, at least 64.
    pub n: usize,
    pub tau_span: (f64, f64),
    pub initial: InitialData,
    pub steps: StepPolicy,
    /// Trace samples, logarithmically spaced in `τ − τ₀`.
    pub samples: usize,
    pub kernel_tol: f64,
    /// Times at which the wall profile is compared with the layer.
    pub bl_checks: Vec<f64>,
}

impl SimConfig {
    pub fn new(family: SimFamily, boundary: impl Into<Boundary>, tau_span: (f64, f64)) -> Self {
        SimConfig {
            family,
            boundary: boundary.into(),
            n: 128,
            tau_span,
            initial: InitialData::default(),
            steps: StepPolicy::default(),
            samples: 200,
            kernel_tol: 1e-10,
            bl_checks: Vec::new(),
        }
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_initial(mut self, initial: InitialData) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub fn with_steps(mut self, steps: StepPolicy) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_bl_checks(mut self, at: Vec<f64>) -> Self {
        self.bl_checks = at;
        self
    }

    pub fn validate(&self) -> NumResult<()> {
        let bad = |s: &str| Err(NumError::Invalid(s.to_string()));
        if self.n < 64 || self.n % 2 != 0 {
            return bad("grid size n must be even and at least 64");
        }
        let (t0, t1) = self.tau_span;
        if !(t1 > t0 && t0.is_finite() && t1.is_finite()) {
            return bad("τ span must satisfy τ₀ < τ_end");
        }
        let base = self.boundary.base();
        base.validate()?;
        if !matches!(base, BoundaryFunction::Constant { .. }) && t0 < TAU0 * (1.0 - 1e-12) {
            return bad("non-constant boundaries need τ₀ ≥ e");
        }
        let (_, dhi) = base.log_domain();
        if !matches!(base, BoundaryFunction::Constant { .. }) && t1.ln() > dhi {
            return bad("τ_end lies beyond the tabulated boundary");
        }
        if self.samples < 2 {
            return bad("need at least two trace samples");
        }
        let s = &self.steps;
        if !(s.dt_init > 0.0 && s.dt_max >= s.dt_init && s.rtol > 0.0 && s.max_steps > 0) {
            return bad("step policy needs 0 < dt_init ≤ dt_max, rtol > 0");
        }
        if !(self.kernel_tol > 0.0) {
            return bad("kernel tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlSnapshot {
    pub tau: f64,
    pub phi: f64,
    pub a0: f64,
    pub sup: f64,
    /// `|a₀| / sup-norm`.
    pub dominance: f64,
    /// Dominance below 0.9: the deviation is reported but not meaningful.
    pub inconclusive: bool,
    /// `max |w − a₀ g₀(ξ)| / |a₀|` over `ξ ∈ [0, 10]`.
    pub max_deviation: f64,
    pub points: usize,
    /// Least-squares `ρ` in `w ≈ ρ g₀(ξ)` over `ξ ∈ [0, 3]`.
    pub layer_amplitude: f64,
    /// `max |w − ρ g₀(ξ)| / |ρ|` over `ξ ∈ [0, 3]`.
    pub shape_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub family: SimFamily,
    pub n: usize,
    /// Grid nodes including both walls.
    pub z: Vec<f64>,
    pub tau: Vec<f64>,
    pub phi: Vec<f64>,
    pub sup: Vec<f64>,
    /// `⟨v, F⟩` with `v` extended by zero outside `|y| < φ`.
    pub a0: Vec<f64>,
    /// Node values at every sample.
    pub profiles: Vec<Vec<f64>>,
    /// Rate of the sup-norm over the second half of the span.
    pub sigma_fit: Option<f64>,
    pub bl: Vec<BlSnapshot>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub kernel_tol: f64,
}

fn phi_at(b: &Boundary, tau: f64) -> (f64, f64) {
    // (φ, φ'/φ)
    match b.base() {
        BoundaryFunction::Constant { l } if !b.is_cutoff() => (*l, 0.0),
        _ => {
            let u = tau.ln();
            let p = b.at_log(u);
            (p, b.log_slope(u) / (p * tau))
        }
    }
}

/// Right-hand side operator on the interior nodes `1..n−1`.
struct Operator {
    family: SimFamily,
    n: usize,
    h: f64,
    z: Vec<f64>,
}

impl Operator {
    fn size(&self) -> usize {
        self.n - 1
    }

    /// Coefficients `(diffusion, drift)` at `τ`.
    fn coeffs(&self, b: &Boundary, tau: f64) -> (f64, f64) {
        let (p, lg) = phi_at(b, tau);
        match self.family {
            SimFamily::Biharmonic => (-p.powi(-4), lg - 0.25),
            SimFamily::Heat => (p.powi(-2), lg - 0.5),
        }
    }

    /// `(I·a − dt·A)` as a band matrix, interior index `k = i − 1`.
    fn system(&self, diff: f64, drift: f64, a: f64, dt: f64) -> BandMatrix {
        let m = self.size();
        let h = self.h;
        let mut mat = BandMatrix::zeros(m, 2, 2);
        for k in 0..m {
            let i = k + 1;
            let zi = self.z[i];
            mat.add(k, k, a);
            let adv = drift * zi / (2.0 * h);
            if k + 1 < m {
                mat.add(k, k + 1, -dt * adv);
            }
            if k >= 1 {
                mat.add(k, k - 1, dt * adv);
            }
            match self.family {
                SimFamily::Heat => {
                    let c = diff / (h * h);
                    mat.add(k, k, 2.0 * dt * c);
                    if k + 1 < m {
                        mat.add(k, k + 1, -dt * c);
                    }
                    if k >= 1 {
                        mat.add(k, k - 1, -dt * c);
                    }
                }
                SimFamily::Biharmonic => {
                    // D⁴ stencil (1, −4, 6, −4, 1)/h⁴; ghost w_{−1} = w_1 enforces w_z = 0
                    let c = diff / h.powi(4);
                    let mut stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
                    if i == 1 || i == self.n - 1 {
                        stencil[2] += 1.0;
                    }
                    for (o, s) in stencil.iter().enumerate() {
                        let j = k as isize + o as isize - 2;
                        if j >= 0 && (j as usize) < m {
                            mat.add(k, j as usize, -dt * c * s);
                        }
                    }
                }
            }
        }
        mat
    }
}

/// Pairing `φ ∫ w(z) F(φz) dz` by composite Simpson on the nodes.
struct Pairing {
    family: SimFamily,
    tol: f64,
    last: Option<(f64, Vec<f64>)>,
}

impl Pairing {
    fn a0(&mut self, z: &[f64], w: &[f64], phi: f64) -> NumResult<f64> {
        let stale = self.last.as_ref().map_or(true, |(p, _)| *p != phi);
        if stale {
            let n = z.len() - 1;
            let mut kv = vec![0.0; n + 1];
            for i in 0..=n / 2 {
                let v = eval_kernel(self.family.equation(), phi * z[i], self.tol)?;
                kv[i] = v;
                kv[n - i] = v;
            }
            self.last = Some((phi, kv));
        }
        let kv = &self.last.as_ref().unwrap().1;
        Ok(phi * simpson(z, &w.iter().zip(kv).map(|(a, b)| a * b).collect::<Vec<_>>()))
    }
}

fn simpson(z: &[f64], f: &[f64]) -> f64 {
    let n = z.len() - 1;
    let h = z[1] - z[0];
    let mut s = f[0] + f[n];
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 * f[i] } else { 2.0 * f[i] };
    }
    s * h / 3.0
}

fn sample_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let span = t1 - t0;
    let lo = (span * 1e-4).ln();
    let hi = span.ln();
    let mut v = vec![t0];
    for k in 0..count - 1 {
        v.push(t0 + (lo + (hi - lo) * k as f64 / (count - 2).max(1) as f64).exp());
    }
    *v.last_mut().unwrap() = t1;
    v
}

fn full_profile(interior: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(interior.len() + 2);
    v.push(0.0);
    v.extend_from_slice(interior);
    v.push(0.0);
    v
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Advances the z-form problem and records traces.
pub fn simulate(cfg: &SimConfig) -> NumResult<SimResult> {
    cfg.validate()?;
    let n = cfg.n;
    let h = 2.0 / n as f64;
    let z: Vec<f64> = (0..=n).map(|i| -1.0 + h * i as f64).collect();
    let op = Operator { family: cfg.family, n, h, z: z.clone() };
    let w0 = cfg.initial.sample(cfg.family, &z)?;
    let mut pairing = Pairing { family: cfg.family, tol: cfg.kernel_tol, last: None };
    let (t0, t1) = cfg.tau_span;
    let times = sample_times(t0, t1, cfg.samples);

    let mut res = SimResult {
        family: cfg.family,
        n,
        z: z.clone(),
        tau: Vec::with_capacity(times.len()),
        phi: Vec::new(),
        sup: Vec::new(),
        a0: Vec::new(),
        profiles: Vec::new(),
        sigma_fit: None,
        bl: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
        kernel_tol: cfg.kernel_tol,
    };
    let mut record = |res: &mut SimResult, tau: f64, w: &[f64]| -> NumResult<()> {
        let full = full_profile(w);
        let (p, _) = phi_at(&cfg.boundary, tau);
        let a0 = pairing.a0(&z, &full, p)?;
        res.tau.push(tau);
        res.phi.push(p);
        res.sup.push(sup_norm(&full));
        res.a0.push(a0);
        res.profiles.push(full);
        Ok(())
    };

    // history: (τ, w) of the last three accepted levels
    let mut hist: Vec<(f64, Vec<f64>)> = vec![(t0, w0[1..n].to_vec())];
    record(&mut res, t0, &hist[0].1)?;
    let mut next_sample = 1;
    let mut dt = cfg.steps.dt_init.min(t1 - t0);
    let mut prev_dt: Option<f64> = None;
    let mut tau = t0;
    while next_sample < times.len() {
        if res.steps_accepted + res.steps_rejected >= cfg.steps.max_steps {
            return Err(NumError::StepBudget { at: tau });
        }
        let tn = tau + dt;
        let (diff, drift) = op.coeffs(&cfg.boundary, tn);
        let wn = &hist.last().unwrap().1;
        let (a, rhs): (f64, Vec<f64>) = match (prev_dt, hist.len()) {
            (Some(pd), l) if l >= 2 => {
                let om = dt / pd;
                let wm = &hist[hist.len() - 2].1;
                let a = (1.0 + 2.0 * om) / (1.0 + om);
                let r = wn.iter().zip(wm).map(|(x, y)| (1.0 + om) * x - om * om / (1.0 + om) * y).collect();
                (a, r)
            }
            _ => (1.0, wn.clone()),
        };
        let lu = op.system(diff, drift, a, dt).lu()?;
        let wc = lu.solve(&rhs);
        if wc.iter().any(|v| !v.is_finite()) {
            return Err(NumError::NonFinite(format!(
                "solution at τ = {tn} (last stable τ = {tau}, dt = {dt:e})"
            )));
        }
        let scale = sup_norm(&wc).max(1e-300);
        let err = if hist.len() >= 3 {
            // Milne device against quadratic extrapolation
            let (ta, wa) = (&hist[hist.len() - 3].0, &hist[hist.len() - 3].1);
            let (tb, wb) = (&hist[hist.len() - 2].0, &hist[hist.len() - 2].1);
            let tc = tau;
            let la = (tn - tb) * (tn - tc) / ((ta - tb) * (ta - tc));
            let lb = (tn - ta) * (tn - tc) / ((tb - ta) * (tb - tc));
            let lc = (tn - ta) * (tn - tb) / ((tc - ta) * (tc - tb));
            let mut e = 0.0f64;
            for k in 0..wc.len() {
                let p = la * wa[k] + lb * wb[k] + lc * wn[k];
                e = e.max((wc[k] - p).abs());
            }
            2.0 / 11.0 * e / scale
        } else {
            0.0
        };
        if err > cfg.steps.rtol {
            res.steps_rejected += 1;
            dt *= (0.9 * (cfg.steps.rtol / err).cbrt()).clamp(0.2, 0.9);
            if dt < 1e-14 * tau.abs().max(1.0) {
                return Err(NumError::StepUnderflow { at: tau });
            }
            continue;
        }
        res.steps_accepted += 1;
        // dense output at sample times inside (τ, tn]
        while next_sample < times.len() && times[next_sample] <= tn * (1.0 + 1e-15) {
            let ts = times[next_sample];
            let ws = if hist.len() >= 2 {
                let (ta, wa) = (&hist[hist.len() - 2].0, &hist[hist.len() - 2].1);
                let tb = tau;
                let la = (ts - tb) * (ts - tn) / ((ta - tb) * (ta - tn));
                let lb = (ts - ta) * (ts - tn) / ((tb - ta) * (tb - tn));
                let lc = (ts - ta) * (ts - tb) / ((tn - ta) * (tn - tb));
                (0..wc.len()).map(|k| la * wa[k] + lb * wn[k] + lc * wc[k]).collect::<Vec<_>>()
            } else {
                let s = (ts - tau) / dt;
                wn.iter().zip(&wc).map(|(x, y)| (1.0 - s) * x + s * y).collect()
            };
            record(&mut res, ts, &ws)?;
            next_sample += 1;
        }
        prev_dt = Some(dt);
        tau = tn;
        hist.push((tn, wc));
        if hist.len() > 3 {
            hist.remove(0);
        }
        let grow = if err > 0.0 { (0.9 * (cfg.steps.rtol / err).cbrt()).clamp(0.2, 2.0) } else { 2.0 };
        dt = (dt * grow).min(cfg.steps.dt_max).min((t1 - tau).max(1e-300));
        if t1 - tau <= 1e-12 * t1.abs().max(1.0) {
            // finish any samples left by rounding
            while next_sample < times.len() {
                let last = hist.last().unwrap().1.clone();
                record(&mut res, times[next_sample], &last)?;
                next_sample += 1;
            }
        }
    }
    let mid = 0.5 * (t0 + t1);
    res.sigma_fit = fit_rate(&res, (mid, t1)).ok().map(|f| f.sigma);
    for &ts in &cfg.bl_checks {
        let s = bl_snapshot_check(&res, ts)?;
        res.bl.push(s);
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub sigma: f64,
    pub intercept: f64,
    pub points: usize,
    /// Fitted on the local maxima of an oscillating trace.
    pub envelope: bool,
}

/// Least-squares slope of `ln |x|` against `τ` on `window`; oscillating or
/// sign-changing traces are fitted on their local maxima.
pub fn fit_rate_series(tau: &[f64], values: &[f64], window: (f64, f64)) -> NumResult<RateFit> {
    if tau.len() != values.len() {
        return Err(NumError::Invalid("trace and times differ in length".into()));
    }
    let (a, b) = window;
    if !(b > a) {
        return Err(NumError::Invalid("fit window must satisfy τ_a < τ_b".into()));
    }
    let lo = tau.first().copied().unwrap_or(f64::NAN);
    let hi = tau.last().copied().unwrap_or(f64::NAN);
    let eps = 1e-9 * hi.abs().max(1.0);
    if a < lo - eps || b > hi + eps {
        return Err(NumError::Invalid(format!("fit window [{a}, {b}] outside simulated span [{lo}, {hi}]")));
    }
    let idx: Vec<usize> = (0..tau.len()).filter(|&i| tau[i] >= a - eps && tau[i] <= b + eps).collect();
    if idx.len() < 3 {
        return Err(NumError::Invalid("fewer than three samples in the fit window".into()));
    }
    let sign_change = idx.windows(2).any(|w| values[w[0]] * values[w[1]] < 0.0);
    let mag: Vec<f64> = idx.iter().map(|&i| values[i].abs()).collect();
    let maxima: Vec<usize> = (1..mag.len() - 1).filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1]).collect();
    let envelope = sign_change || maxima.len() >= 2;
    let pick: Vec<usize> = if envelope { maxima.clone() } else { (0..mag.len()).collect() };
    if pick.len() < 2 {
        return Err(NumError::Invalid("too few local maxima for an envelope fit".into()));
    }
    if pick.iter().any(|&k| !(mag[k] > 0.0)) {
        return Err(NumError::Invalid("trace vanishes in the fit window".into()));
    }
    let xs: Vec<f64> = pick.iter().map(|&k| tau[idx[k]]).collect();
    let ys: Vec<f64> = pick.iter().map(|&k| mag[k].ln()).collect();
    let (sigma, intercept) = linear_fit(&xs, &ys)?;
    Ok(RateFit { sigma, intercept, points: pick.len(), envelope })
}

/// Exponential rate of the sup-norm trace on `window`.
pub fn fit_rate(r: &SimResult, window: (f64, f64)) -> NumResult<RateFit> {
    fit_rate_series(&r.tau, &r.sup, window)
}

fn nearest_sample(r: &SimResult, tau: f64) -> NumResult<usize> {
    let (lo, hi) = (r.tau[0], *r.tau.last().unwrap());
    if tau < lo || tau > hi * (1.0 + 1e-12) {
        return Err(NumError::Invalid(format!("τ* = {tau} outside simulated span [{lo}, {hi}]")));
    }
    Ok((0..r.tau.len()).min_by(|&i, &j| (r.tau[i] - tau).abs().total_cmp(&(r.tau[j] - tau).abs())).unwrap())
}

/// Compares the right-wall profile with `a₀(τ*) g₀(ξ)`, `ξ = φ^α (1 − z) ∈ [0, 10]`.
pub fn bl_snapshot_check(r: &SimResult, tau_star: f64) -> NumResult<BlSnapshot> {
    let i = nearest_sample(r, tau_star)?;
    let (phi, a0, sup) = (r.phi[i], r.a0[i], r.sup[i]);
    let w = &r.profiles[i];
    let alpha = r.family.alpha();
    let scale = phi.powf(alpha);
    let g0 = |xi: f64| match r.family {
        SimFamily::Biharmonic => biharmonic_closed_form(0, xi),
        SimFamily::Heat => heat_closed_form(0, xi),
    };
    let mut dev = 0.0f64;
    let mut points = 0;
    let (mut sgw, mut sgg) = (0.0, 0.0);
    let mut near = Vec::new();
    for (zk, wk) in r.z.iter().zip(w) {
        let xi = scale * (1.0 - zk);
        if xi > 10.0 {
            continue;
        }
        let g = g0(xi);
        dev = dev.max((wk - a0 * g).abs());
        points += 1;
        if xi <= 3.0 {
            sgw += g * wk;
            sgg += g * g;
            near.push((g, *wk));
        }
    }
    let rho = if sgg > 0.0 { sgw / sgg } else { 0.0 };
    let shape = near.iter().fold(0.0f64, |m, (g, wk)| m.max((wk - rho * g).abs())) / rho.abs().max(1e-300);
    let dominance = if sup > 0.0 { a0.abs() / sup } else { 0.0 };
    Ok(BlSnapshot {
        tau: r.tau[i],
        phi,
        a0,
        sup,
        dominance,
        inconclusive: dominance < 0.9 || points < 3,
        max_deviation: if a0 != 0.0 { dev / a0.abs() } else { f64::INFINITY },
        points,
        layer_amplitude: rho,
        shape_deviation: if near.len() >= 3 { shape } else { f64::INFINITY },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionCheck {
    pub tau: f64,
    /// `a_k = ⟨v, ψ_k⟩`, `k = 0..=k_max`.
    pub coefficients: Vec<f64>,
    /// Max error of `Σ a_k ψ*_k` on `|z| ≤ 0.5`, relative to the sup of `v` there.
    pub max_rel_error: f64,
}

/// Reconstructs the interior profile from the first Hermite coefficients.
pub fn expansion_check(r: &SimResult, tau: f64, k_max: u32) -> NumResult<ExpansionCheck> {
    let i = nearest_sample(r, tau)?;
    let phi = r.phi[i];
    let w = &r.profiles[i];
    let m = r.family.m();
    let pairs: Vec<_> = (0..=k_max).map(|k| hermite_pair(m, k)).collect();
    let mut coefficients = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let mut f = Vec::with_capacity(r.z.len());
        for (zk, wk) in r.z.iter().zip(w) {
            f.push(wk * p.psi(phi * zk, r.kernel_tol)?);
        }
        coefficients.push(phi * simpson(&r.z, &f));
    }
    let mut err = 0.0f64;
    let mut vmax = 0.0f64;
    for (zk, wk) in r.z.iter().zip(w) {
        if zk.abs() > 0.5 + 1e-12 {
            continue;
        }
        let y = phi * zk;
        let s: f64 = pairs.iter().zip(&coefficients).map(|(p, a)| a * p.psi_star(y)).sum();
        err = err.max((s - wk).abs());
        vmax = vmax.max(wk.abs());
    }
    Ok(ExpansionCheck { tau: r.tau[i], coefficients, max_rel_error: err / vmax.max(1e-300) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P2Row {
    pub l: f64,
    pub seed: u64,
    pub sigma: f64,
    /// `−1` for decay, `+1` for growth.
    pub expected_sign: i8,
    pub ok: bool,
    /// Sup-norm trace, attached when the run contradicts the expected sign.
    pub trace: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P2Report {
    pub rows: Vec<P2Row>,
    pub window: (f64, f64),
    pub pass: bool,
}

/// Default seeds of [`verify_p2`].
pub const P2_SEEDS: [u64; 3] = [1, 2, 3];

/// Biharmonic runs with `R(t) = l(−t)^{1/4}`: `l = 4` must decay and `l = 5`
/// grow for every seed of random-smooth data.
pub fn verify_p2(seeds: &[u64]) -> NumResult<P2Report> {
    let window = (50.0, 400.0);
    let jobs: Vec<(f64, u64)> = [4.0, 5.0].iter().flat_map(|&l| seeds.iter().map(move |&s| (l, s))).collect();
    let results: Vec<NumResult<P2Row>> = std::thread::scope(|sc| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(l, seed)| {
                sc.spawn(move || -> NumResult<P2Row> {
                    let cfg = SimConfig::new(SimFamily::Biharmonic, BoundaryFunction::Constant { l }, (0.0, window.1))
                        .with_initial(InitialData::RandomSmooth { seed, modes: 8 });
                    let r = simulate(&cfg)?;
                    let sigma = fit_rate(&r, window)?.sigma;
                    let expected_sign = if l < 4.5 { -1 } else { 1 };
                    let ok = sigma.signum() as i8 == expected_sign;
                    let trace = (!ok).then(|| r.tau.iter().copied().zip(r.sup.iter().copied()).collect());
                    Ok(P2Row { l, seed, sigma, expected_sign, ok, trace })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation thread panicked")).collect()
    });
    let rows = results.into_iter().collect::<NumResult<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.ok);
    Ok(P2Report { rows, window, pass })
}

//! Stationary wall boundary layers `g₀(ξ)`: closed forms, linear shooting BVPs,
//! and the nonlinear PME-4 profile in the `G = g³` form.

use crate::numcore::eigen::dense_eigenpairs;
use crate::numcore::ode::{integrate_ode_at, integrate_ode_until};
use crate::numcore::{Complex64, DenseMatrix, NumError, NumResult};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlFamily {
    /// `−g'''' + g'/4 = 0`, `g = g' = 0` at the wall.
    Biharmonic,
    /// `g'' + g'/2 = 0`, `g = 0` at the wall.
    Heat,
    /// `g''' − g'/3 = 0`, `g = 0` at the wall.
    Dispersion,
    /// `−G'''' + (1/12)|G|^{−2/3} G' = 0`, `G = G' = 0` at the wall.
    Pme4,
}

impl std::fmt::Display for BlFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BlFamily::Biharmonic => "biharmonic",
            BlFamily::Heat => "heat",
            BlFamily::Dispersion => "dispersion3",
            BlFamily::Pme4 => "pme4",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for BlFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "biharmonic" | "parabolic:2" => Ok(BlFamily::Biharmonic),
            "heat" | "parabolic:1" => Ok(BlFamily::Heat),
            "dispersion3" | "dispersion" => Ok(BlFamily::Dispersion),
            "pme4" => Ok(BlFamily::Pme4),
            _ => Err(format!("unknown boundary-layer family '{s}'")),
        }
    }
}

impl BlFamily {
    /// `g^{(n)} = Σ a_k g^{(k)}` for the linear families.
    fn linear_coeffs(&self) -> Option<Vec<f64>> {
        match self {
            BlFamily::Biharmonic => Some(vec![0.0, 0.25, 0.0, 0.0]),
            BlFamily::Heat => Some(vec![0.0, -0.5]),
            BlFamily::Dispersion => Some(vec![0.0, 1.0 / 3.0, 0.0]),
            BlFamily::Pme4 => None,
        }
    }

    /// Number of derivatives (from order 0) that vanish at the wall.
    fn wall_orders(&self) -> usize {
        match self {
            BlFamily::Biharmonic | BlFamily::Pme4 => 2,
            BlFamily::Heat | BlFamily::Dispersion => 1,
        }
    }

    fn order(&self) -> usize {
        match self {
            BlFamily::Biharmonic | BlFamily::Pme4 => 4,
            BlFamily::Heat => 2,
            BlFamily::Dispersion => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Bvp,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryLayerProfile {
    pub family: BlFamily,
    pub provenance: Provenance,
    pub xi: Vec<f64>,
    /// `g₀` samples (`G₀ = g₀³` for PME-4).
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    /// Derivatives `0..order` at the wall.
    pub wall: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub far_field: f64,
    pub truncation: f64,
    /// Mismatch of the re-integrated wall state (zero for closed forms).
    pub residual: f64,
}

impl BoundaryLayerProfile {
    /// Piecewise cubic Hermite interpolation of the samples.
    pub fn value(&self, xi: f64) -> f64 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.g[0];
        }
        if xi >= self.xi[n - 1] {
            return self.g[n - 1];
        }
        let i = self.xi.partition_point(|&x| x <= xi).min(n - 1) - 1;
        let (x0, x1) = (self.xi[i], self.xi[i + 1]);
        let h = x1 - x0;
        let t = (xi - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.g[i]
            + (t3 - 2.0 * t2 + t) * h * self.dg[i]
            + (-2.0 * t3 + 3.0 * t2) * self.g[i + 1]
            + (t3 - t2) * h * self.dg[i + 1]
    }

    /// Local maxima of `g₀ − 1` above `threshold`.
    pub fn overshoots(&self, threshold: f64) -> Vec<(f64, f64)> {
        let g = &self.g;
        (1..g.len() - 1)
            .filter(|&i| g[i] >= g[i - 1] && g[i] > g[i + 1] && g[i] - 1.0 > threshold)
            .map(|i| (self.xi[i], g[i]))
            .collect()
    }
}

const B: f64 = 0.314_980_262_473_718_3; // 2^{-5/3}

fn profile_grid(l: f64) -> Vec<f64> {
    let n = (20.0 * l).ceil() as usize;
    (0..=n).map(|i| l * i as f64 / n as f64).collect()
}

/// `g₀^{(k)}(ξ)` of `1 − e^{−bξ}[cos(√3 bξ) + sin(√3 bξ)/√3]`, `b = 2^{−5/3}`.
pub fn biharmonic_closed_form(k: u32, xi: f64) -> f64 {
    // g₀ = 1 − Re[(1 − i/√3) e^{μξ}], μ = −b + i√3 b
    let mu = Complex64::new(-B, 3f64.sqrt() * B);
    let amp = Complex64::new(1.0, -1.0 / 3f64.sqrt());
    let osc = (mu.powu(k) * amp * (mu * xi).exp()).re;
    if k == 0 {
        1.0 - osc
    } else {
        -osc
    }
}

/// `g₀^{(k)}(ξ)` of `1 − e^{−ξ/√3}`.
pub fn dispersion_closed_form(k: u32, xi: f64) -> f64 {
    let r = -1.0 / 3f64.sqrt();
    let e = r.powi(k as i32) * (r * xi).exp();
    if k == 0 {
        1.0 - e
    } else {
        -e
    }
}

/// `g₀^{(k)}(ξ)` of `1 − e^{−ξ/2}`.
pub fn heat_closed_form(k: u32, xi: f64) -> f64 {
    let e = (-0.5f64).powi(k as i32) * (-0.5 * xi).exp();
    if k == 0 {
        1.0 - e
    } else {
        -e
    }
}

fn closed_form(family: BlFamily, l: f64) -> NumResult<BoundaryLayerProfile> {
    let f: fn(u32, f64) -> f64 = match family {
        BlFamily::Biharmonic => biharmonic_closed_form,
        BlFamily::Heat => heat_closed_form,
        BlFamily::Dispersion => dispersion_closed_form,
        BlFamily::Pme4 => return Err(NumError::Invalid("pme4 has no closed form; use solve_bl_bvp".into())),
    };
    let xi = profile_grid(l);
    let wall: Vec<f64> = (0..family.order() as u32).map(|k| f(k, 0.0)).collect();
    let (gamma1, gamma2) = gamma_pair(family, &wall);
    Ok(BoundaryLayerProfile {
        family,
        provenance: Provenance::ClosedForm,
        g: xi.iter().map(|&x| f(0, x)).collect(),
        dg: xi.iter().map(|&x| f(1, x)).collect(),
        xi,
        wall,
        gamma1,
        gamma2,
        far_field: 1.0,
        truncation: l,
        residual: 0.0,
    })
}

fn gamma_pair(family: BlFamily, wall: &[f64]) -> (f64, f64) {
    match family {
        BlFamily::Biharmonic | BlFamily::Pme4 => (wall[2], wall[3]),
        BlFamily::Heat => (wall[1], heat_closed_form(2, 0.0)),
        BlFamily::Dispersion => (wall[1], wall[2]),
    }
}

pub fn biharmonic_profile() -> BoundaryLayerProfile {
    closed_form(BlFamily::Biharmonic, 30.0).expect("closed form")
}

pub fn dispersion_profile() -> BoundaryLayerProfile {
    closed_form(BlFamily::Dispersion, 30.0).expect("closed form")
}

pub fn heat_profile() -> BoundaryLayerProfile {
    closed_form(BlFamily::Heat, 30.0).expect("closed form")
}

/// `(γ₁, γ₂)`: `(g₀'', g₀''')` at the wall for the fourth-order layers,
/// `(g₀', g₀'')` for heat and dispersion.
pub fn wall_constants(p: &BoundaryLayerProfile) -> (f64, f64) {
    (p.gamma1, p.gamma2)
}

/// Wall derivative of order `k ∈ {1, 2, 3}` from one-sided differences with
/// Richardson extrapolation, for profiles given only as a function.
pub fn richardson_wall_derivative<F: Fn(f64) -> f64>(f: F, k: u32, h: f64) -> f64 {
    // forward-difference stencils of first order in h
    let d = |h: f64| -> f64 {
        match k {
            1 => (f(h) - f(0.0)) / h,
            2 => (f(2.0 * h) - 2.0 * f(h) + f(0.0)) / (h * h),
            3 => (f(3.0 * h) - 3.0 * f(2.0 * h) + 3.0 * f(h) - f(0.0)) / (h * h * h),
            _ => f64::NAN,
        }
    };
    // three-level table eliminating h and h²
    let (a, b, c) = (d(h), d(h / 2.0), d(h / 4.0));
    let ab = 2.0 * b - a;
    let bc = 2.0 * c - b;
    (4.0 * bc - ab) / 3.0
}

fn linear_rhs(coeffs: Vec<f64>) -> impl FnMut(f64, &[f64], &mut [f64]) {
    let n = coeffs.len();
    move |_x, s, d| {
        d[..n - 1].copy_from_slice(&s[1..n]);
        d[n - 1] = coeffs.iter().zip(s).map(|(a, v)| a * v).sum();
    }
}

fn companion(coeffs: &[f64]) -> DenseMatrix {
    let n = coeffs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        m[(i, i + 1)] = 1.0;
    }
    for (j, &a) in coeffs.iter().enumerate() {
        m[(n - 1, j)] = a;
    }
    m
}

/// Shoots backward from `ξ = L`, where the state is `1` plus a combination of
/// the decaying modes; the combination is fixed by the wall conditions.
fn solve_linear(family: BlFamily, l: f64, tol: f64) -> NumResult<BoundaryLayerProfile> {
    let coeffs = family.linear_coeffs().expect("linear family");
    let n = coeffs.len();
    let fixed = family.wall_orders();
    let pairs = dense_eigenpairs(&companion(&coeffs), n)?;
    let mut modes: Vec<Vec<f64>> = Vec::new();
    for p in pairs.iter().filter(|p| p.value.re < -1e-12 && p.value.im >= 0.0) {
        let v = p.vector.as_ref().ok_or(NumError::EigenNotConverged { index: 0 })?;
        modes.push(v.iter().map(|z| z.re).collect());
        if p.value.im > 1e-12 {
            modes.push(v.iter().map(|z| z.im).collect());
        }
    }
    if modes.len() != fixed {
        return Err(NumError::Invalid(format!(
            "{} decaying modes for {fixed} wall conditions",
            modes.len()
        )));
    }
    let xi = profile_grid(l);
    let back: Vec<f64> = xi.iter().rev().copied().collect();
    let mut runs = Vec::with_capacity(fixed);
    for v in &modes {
        runs.push(integrate_ode_at(linear_rhs(coeffs.clone()), v, l, &back, tol)?);
    }
    let last = back.len() - 1;
    // e₀ (the constant state) is an exact solution, so the wall rows only see the modes
    let a = DMatrix::from_fn(fixed, fixed, |k, j| runs[j][last][k]);
    let rhs = DVector::from_fn(fixed, |k, _| if k == 0 { -1.0 } else { 0.0 });
    let c = a.clone().lu().solve(&rhs).ok_or(NumError::Singular { pivot: 0 })?;
    let state = |i: usize| -> Vec<f64> {
        let mut s = vec![0.0; n];
        s[0] = 1.0;
        for (j, run) in runs.iter().enumerate() {
            for (dst, v) in s.iter_mut().zip(&run[i]) {
                *dst += c[j] * v;
            }
        }
        s
    };
    let states: Vec<Vec<f64>> = (0..back.len()).rev().map(state).collect();
    let wall = states[0].clone();
    let residual = (0..fixed).map(|k| wall[k].abs()).fold(0.0, f64::max);
    let far_field = states[states.len() - 1][0];
    let (gamma1, gamma2) = match family {
        BlFamily::Heat => (wall[1], coeffs[1] * wall[1]),
        _ => gamma_pair(family, &wall),
    };
    Ok(BoundaryLayerProfile {
        family,
        provenance: Provenance::Bvp,
        g: states.iter().map(|s| s[0]).collect(),
        dg: states.iter().map(|s| s[1]).collect(),
        xi,
        wall,
        gamma1,
        gamma2,
        far_field,
        truncation: l,
        residual,
    })
}

// ---------------------------------------------------------------------------

fn pme_rhs(_x: f64, s: &[f64], d: &mut [f64]) {
    d[0] = s[1];
    d[1] = s[2];
    d[2] = s[3];
    d[3] = s[0].abs().powf(-2.0 / 3.0) * s[1] / 12.0;
}

/// Decaying far-field mode `μ³ = 1/12`, `Re μ < 0`.
fn pme_mode() -> Complex64 {
    Complex64::from_polar(12f64.powf(-1.0 / 3.0), 2.0 * std::f64::consts::PI / 3.0)
}

const PME_EPS: f64 = 1e-6;
const PME_REACH: f64 = 200.0;
const PME_FLOOR: f64 = 1e-10;

fn pme_far_state(theta: f64, x: f64) -> Vec<f64> {
    let mu = pme_mode();
    let c = Complex64::from_polar(PME_EPS, theta) * (mu * x).exp();
    vec![1.0 + c.re, (c * mu).re, (c * mu * mu).re, (c * mu * mu * mu).re]
}

/// Backward shot from the far field: positive when `G` turns at a positive
/// minimum first, negative (`−G'`) when it reaches zero with nonzero slope.
fn pme_shot(theta: f64, tol: f64) -> NumResult<(f64, f64, Vec<f64>)> {
    // stop just above G = 0: the |G|^{-2/3} factor stalls the integrator at a transversal crossing
    let ev = |_x: f64, s: &[f64]| if s[0] < 0.5 { (s[0] - PME_FLOOR).min(s[1]) } else { 1.0 };
    let (traj, hit) = integrate_ode_until(pme_rhs, &pme_far_state(theta, 0.0), (0.0, -PME_REACH), tol, ev)?;
    match hit {
        Some(e) => {
            let v = if (e.y[0] - PME_FLOOR).abs() <= e.y[1].abs() { -e.y[1] } else { e.y[0] };
            Ok((v, e.x, e.y))
        }
        None => {
            let (x, s) = traj.last();
            Ok((s[0], x, s.to_vec()))
        }
    }
}

/// Phase of the far-field mode giving a touchdown `G = G' = 0`, bracketed
/// near the single admissible branch on `(1.57, 2.09)`.
fn pme_phase(tol: f64) -> NumResult<f64> {
    let (mut a, mut b) = (1.57, 2.09);
    let mut fa = pme_shot(a, tol)?.0;
    let fb = pme_shot(b, tol)?.0;
    if fa.signum() == fb.signum() {
        return Err(NumError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    // the shot value jumps between branches, so bisect rather than interpolate
    for _ in 0..60 {
        let c = 0.5 * (a + b);
        let fc = pme_shot(c, tol)?.0;
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
        if b - a < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

fn solve_pme4(l: f64, tol: f64) -> NumResult<BoundaryLayerProfile> {
    let theta = pme_phase(tol)?;
    let (_, x_wall, wall_state) = pme_shot(theta, tol)?;
    let xi = profile_grid(l);
    // nonlinear part sampled along the backward shot (forward re-integration
    // from the wall picks up the growing modes), linear mode beyond the far start
    let inner: Vec<f64> = xi.iter().map(|&s| s + x_wall).filter(|&x| x <= 0.0).collect();
    let down: Vec<f64> = inner[1..].iter().rev().copied().collect();
    let mut states = integrate_ode_at(pme_rhs, &pme_far_state(theta, 0.0), 0.0, &down, tol)?;
    states.push(wall_state.clone());
    states.reverse();
    for &s in &xi[inner.len()..] {
        states.push(pme_far_state(theta, s + x_wall));
    }
    let mut wall = wall_state.clone();
    wall[0] = wall[0].max(0.0);
    let residual = wall_state[0].abs().max(wall_state[1].abs());
    let far_field = states.last().unwrap()[0];
    Ok(BoundaryLayerProfile {
        family: BlFamily::Pme4,
        provenance: Provenance::Bvp,
        g: states.iter().map(|s| s[0]).collect(),
        dg: states.iter().map(|s| s[1]).collect(),
        xi,
        gamma1: wall[2],
        gamma2: wall[3],
        wall,
        far_field,
        truncation: l,
        residual,
    })
}

/// Numerical boundary layer on `[0, L]`.
pub fn solve_bl_bvp(family: BlFamily, l: f64, tol: f64) -> NumResult<BoundaryLayerProfile> {
    if !(l > 0.0 && tol > 0.0) {
        return Err(NumError::Invalid("need L > 0 and tol > 0".into()));
    }
    match family {
        BlFamily::Pme4 => solve_pme4(l, tol),
        _ => solve_linear(family, l, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_satisfy_wall_conditions() {
        assert!(biharmonic_closed_form(0, 0.0).abs() < 1e-15);
        assert!(biharmonic_closed_form(1, 0.0).abs() < 1e-15);
        assert!(dispersion_closed_form(0, 0.0).abs() < 1e-15);
        assert!(heat_closed_form(0, 0.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        let h = 1e-5;
        for x in [0.3, 2.0, 7.5] {
            for k in 0..3 {
                let fd = (biharmonic_closed_form(k, x + h) - biharmonic_closed_form(k, x - h)) / (2.0 * h);
                assert!((fd - biharmonic_closed_form(k + 1, x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn richardson_recovers_polynomial_derivatives() {
        let f = |x: f64| 2.0 * x * x - x.powi(3) + 0.5 * x.powi(4);
        assert!((richardson_wall_derivative(f, 2, 1e-2) - 4.0).abs() < 1e-6);
        assert!((richardson_wall_derivative(f, 3, 1e-2) + 6.0).abs() < 1e-5);
    }

    #[test]
    fn hermite_interpolation_is_exact_for_cubics() {
        let xi: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let f = |x: f64| x * x * x - 2.0 * x;
        let p = BoundaryLayerProfile {
            family: BlFamily::Heat,
            provenance: Provenance::ClosedForm,
            g: xi.iter().map(|&x| f(x)).collect(),
            dg: xi.iter().map(|&x| 3.0 * x * x - 2.0).collect(),
            xi,
            wall: vec![],
            gamma1: 0.0,
            gamma2: 0.0,
            far_field: 1.0,
            truncation: 10.0,
            residual: 0.0,
        };
        assert!((p.value(3.3) - f(3.3)).abs() < 1e-12);
    }

    #[test]
    fn family_names_roundtrip() {
        for f in [BlFamily::Biharmonic, BlFamily::Heat, BlFamily::Dispersion, BlFamily::Pme4] {
            assert_eq!(f.to_string().parse::<BlFamily>().unwrap(), f);
        }
    }
}

//! Clamped interval eigenproblem `B*Ψ = λΨ`, `Ψ = … = Ψ^{(m−1)} = 0` at `y = ±l`,
//! with `B* = −(−D²)^m − (1/2m) y D`.

use crate::kernels::{eval_kernel, eval_kernel_derivative, kernel_constants, EquationFamily};
use crate::numcore::cheb::weighted_cheb_diff;
use crate::numcore::eigen::inverse_iteration;
use crate::numcore::ode::{integrate_ode_at, integrate_ode_final};
use crate::numcore::{dense_eigenvalues, find_root, Complex64, DenseMatrix, NumError, NumResult};
use nalgebra::DMatrix;
use serde::Serialize;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Shooting,
    Collocation,
}

impl std::str::FromStr for Parity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            "full" => Ok(Parity::Full),
            _ => Err(format!("unknown parity '{s}'")),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shooting" => Ok(Method::Shooting),
            "collocation" => Ok(Method::Collocation),
            _ => Err(format!("unknown method '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalEigenProblem {
    pub l: f64,
    pub family: EquationFamily,
    pub parity: Parity,
    pub method: Method,
    /// Chebyshev intervals for collocation; `None` picks 96 (l ≤ 8) or 160.
    pub n: Option<usize>,
    pub tol: f64,
}

impl IntervalEigenProblem {
    pub fn new(l: f64) -> Self {
        IntervalEigenProblem {
            l,
            family: EquationFamily::BIHARMONIC,
            parity: Parity::Full,
            method: Method::Shooting,
            n: None,
            tol: 1e-12,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn with_family(mut self, family: EquationFamily) -> Self {
        self.family = family;
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    fn order_m(&self) -> NumResult<usize> {
        match self.family {
            EquationFamily::Parabolic(m) if m >= 1 => Ok(m as usize),
            f => Err(NumError::Invalid(format!("interval problem needs a parabolic family, got {f}"))),
        }
    }

    fn validate(&self) -> NumResult<usize> {
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(NumError::Invalid(format!("half-length must be positive, got {}", self.l)));
        }
        if !(self.tol > 0.0) {
            return Err(NumError::Invalid("tol must be positive".into()));
        }
        self.order_m()
    }

    fn grid(&self) -> usize {
        self.n.unwrap_or(if self.l <= 8.0 { 96 } else { 160 })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Eigenpair {
    pub lambda: Complex64,
    pub y: Vec<f64>,
    /// Real part of the eigenfunction, scaled to unit max modulus.
    pub values: Vec<f64>,
    pub residual: f64,
    pub zero_count: usize,
    pub parity: Parity,
    /// Residual above tolerance or grids disagree.
    pub flagged: bool,
}

/// Upper bound on `Re λ` for the clamped problem (energy estimate).
pub fn spectral_ceiling(m: usize) -> f64 {
    1.0 / (4.0 * m as f64)
}

fn rhs(m: usize, lambda: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
    let n = 2 * m;
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let drift = 1.0 / (2.0 * m as f64);
    move |y, s, d| {
        d[..n - 1].copy_from_slice(&s[1..n]);
        d[n - 1] = sign * (lambda * s[0] + drift * y * s[1]);
    }
}

fn basis(m: usize, parity: Parity) -> (f64, Vec<Vec<f64>>) {
    let n = 2 * m;
    let unit = |i: usize| {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    };
    match parity {
        Parity::Even => (0.0, (0..m).map(|j| unit(2 * j)).collect()),
        Parity::Odd => (0.0, (0..m).map(|j| unit(2 * j + 1)).collect()),
        Parity::Full => (f64::NAN, (0..m).map(|j| unit(m + j)).collect()),
    }
}

/// Boundary matrix: column `c` holds `Ψ_c, …, Ψ_c^{(m−1)}` at `y = l`.
fn boundary_matrix(m: usize, l: f64, parity: Parity, lambda: f64, tol: f64) -> NumResult<DMatrix<f64>> {
    let (y0, ics) = basis(m, parity);
    let start = if y0.is_nan() { -l } else { y0 };
    let mut mat = DMatrix::zeros(m, m);
    for (c, ic) in ics.iter().enumerate() {
        let end = integrate_ode_final(rhs(m, lambda), ic, (start, l), tol)?;
        for r in 0..m {
            mat[(r, c)] = end[r];
        }
    }
    Ok(mat)
}

/// Clamped-end determinant for real `λ`; its zeros are the real eigenvalues of
/// the given parity class.
pub fn shooting_determinant(m: usize, l: f64, parity: Parity, lambda: f64, tol: f64) -> NumResult<f64> {
    let mat = boundary_matrix(m, l, parity, lambda, tol)?;
    Ok(mat.determinant())
}

/// `|det| / Π‖columns‖`: zero at an eigenvalue, one for orthogonal columns.
fn hadamard_ratio(mat: &DMatrix<f64>) -> f64 {
    let norms: f64 = mat.column_iter().map(|c| c.norm()).product();
    if norms > 0.0 {
        mat.determinant().abs() / norms
    } else {
        0.0
    }
}

/// Scans `det(λ)` downward from just above the ceiling and returns up to
/// `want` refined roots above `floor`, in decreasing order.
fn scan_roots(m: usize, l: f64, parity: Parity, want: usize, floor: f64, tol: f64) -> NumResult<Vec<f64>> {
    let mut roots = Vec::new();
    let mut hi = spectral_ceiling(m) + 0.01;
    let mut f_hi = shooting_determinant(m, l, parity, hi, tol)?;
    while roots.len() < want && hi > floor {
        let lo = hi - (2e-3 * hi.abs()).max(1e-4);
        let f_lo = shooting_determinant(m, l, parity, lo, tol)?;
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo.signum() != f_hi.signum() {
            let r = find_root(
                |x| shooting_determinant(m, l, parity, x, tol).unwrap_or(f64::NAN),
                (lo, hi),
                1e-14 * (1.0 + lo.abs()),
            )?;
            roots.push(r);
        }
        hi = lo;
        f_hi = f_lo;
    }
    Ok(roots)
}

fn exhausted(l: f64, got: usize, want: usize, floor: f64) -> NumError {
    NumError::Invalid(format!(
        "shooting found {got} of {want} real eigenvalues above {floor:.3e} for l = {l}; use collocation"
    ))
}

fn scan_floor(m: usize, l: f64, count: usize) -> f64 {
    let beam = ((count as f64 + 2.0) * std::f64::consts::PI / (2.0 * l)).powi(2 * m as i32);
    -4.0 * beam - 10.0
}

fn sample_grid(l: f64) -> Vec<f64> {
    let n = 401;
    (0..n).map(|i| -l + 2.0 * l * i as f64 / (n - 1) as f64).collect()
}

fn count_zeros(v: &[f64]) -> usize {
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut last = 0.0;
    let mut n = 0;
    for &x in v {
        if x.abs() <= 1e-6 * vmax {
            continue;
        }
        if last != 0.0 && x.signum() != last {
            n += 1;
        }
        last = x.signum();
    }
    n
}

fn normalize(v: &mut [f64]) {
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    let s = v[imax];
    if s != 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}

fn shooting_pair(p: &IntervalEigenProblem, m: usize, parity: Parity, lambda: f64) -> NumResult<Eigenpair> {
    let mat = boundary_matrix(m, p.l, parity, lambda, p.tol)?;
    let residual = hadamard_ratio(&mat);
    let svd = mat.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| NumError::Invalid("svd failed".into()))?;
    let k = (0..m)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(0);
    let coef: Vec<f64> = vt.row(k).iter().copied().collect();
    let (y0, ics) = basis(m, parity);
    let mut ic = vec![0.0; 2 * m];
    for (c, b) in coef.iter().zip(&ics) {
        for (dst, src) in ic.iter_mut().zip(b) {
            *dst += c * src;
        }
    }
    let y = sample_grid(p.l);
    let mut values = vec![0.0; y.len()];
    if y0.is_nan() {
        let states = integrate_ode_at(rhs(m, lambda), &ic, -p.l, &y, p.tol)?;
        for (v, s) in values.iter_mut().zip(&states) {
            *v = s[0];
        }
    } else {
        let half = y.len() / 2;
        let states = integrate_ode_at(rhs(m, lambda), &ic, 0.0, &y[half..], p.tol)?;
        let odd = parity == Parity::Odd;
        for (j, s) in states.iter().enumerate() {
            values[half + j] = s[0];
            values[half - j] = if odd { -s[0] } else { s[0] };
        }
    }
    normalize(&mut values);
    Ok(Eigenpair {
        lambda: Complex64::new(lambda, 0.0),
        zero_count: count_zeros(&values),
        flagged: residual > p.tol.sqrt(),
        y,
        values,
        residual,
        parity,
    })
}

fn shooting_spectrum(p: &IntervalEigenProblem, m: usize, count: usize) -> NumResult<Vec<Eigenpair>> {
    let floor = scan_floor(m, p.l, 2 * count);
    let mut found: Vec<(f64, Parity)> = Vec::new();
    // the full problem is the union of the two parity classes; shooting each
    // from y = 0 avoids integrating across the whole interval
    let classes: &[Parity] = match p.parity {
        Parity::Full => &[Parity::Even, Parity::Odd],
        Parity::Even => &[Parity::Even],
        Parity::Odd => &[Parity::Odd],
    };
    let mut level = floor;
    for &par in classes {
        let roots = scan_roots(m, p.l, par, count, level, p.tol)?;
        if roots.len() == count {
            // later classes only matter above this class's count-th root
            level = level.max(roots[count - 1]);
        }
        found.extend(roots.into_iter().map(|r| (r, par)));
    }
    found.sort_by(|a, b| b.0.total_cmp(&a.0));
    if found.len() < count {
        return Err(exhausted(p.l, found.len(), count, floor));
    }
    found.truncate(count);
    found.iter().map(|&(r, par)| shooting_pair(p, m, par, r)).collect()
}

/// Collocation matrix of `B*` on the interior Chebyshev nodes, scaled to `[−l, l]`.
fn collocation_matrix(m: usize, l: f64, n: usize) -> (Vec<f64>, DenseMatrix) {
    let (x, d) = weighted_cheb_diff(n, m, 2 * m);
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let scale = sign / l.powi(2 * m as i32);
    let drift = 1.0 / (2.0 * m as f64);
    let np = x.len();
    let a = DMatrix::from_fn(np, np, |i, j| scale * d[2 * m - 1][(i, j)] - drift * x[i] * d[0][(i, j)]);
    (x, a)
}

struct ShiftInvert {
    sigma: f64,
    b: DenseMatrix,
    mu: Vec<Complex64>,
}

impl ShiftInvert {
    fn new(a: &DenseMatrix, sigma: f64) -> NumResult<Self> {
        let n = a.nrows();
        let shifted = a - DMatrix::identity(n, n) * sigma;
        let b = shifted.try_inverse().ok_or(NumError::Singular { pivot: 0 })?;
        let mu = dense_eigenvalues(&b)?;
        Ok(ShiftInvert { sigma, b, mu })
    }

    /// Eigenvalues of the original matrix, descending real part.
    fn lambdas(&self) -> Vec<Complex64> {
        // μ at the roundoff floor of B maps to huge spurious λ
        let floor = 1e-11 * self.mu.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut v: Vec<Complex64> = self
            .mu
            .iter()
            .filter(|z| z.norm() > floor)
            .map(|&z| Complex64::new(self.sigma, 0.0) + Complex64::new(1.0, 0.0) / z)
            .collect();
        v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        v
    }
}

fn classify_parity(v: &[f64]) -> Parity {
    let n = v.len();
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for i in 0..n {
        even = even.max((v[i] - v[n - 1 - i]).abs());
        odd = odd.max((v[i] + v[n - 1 - i]).abs());
    }
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if even <= 1e-6 * vmax {
        Parity::Even
    } else if odd <= 1e-6 * vmax {
        Parity::Odd
    } else {
        Parity::Full
    }
}

fn collocation_spectrum(p: &IntervalEigenProblem, m: usize, count: usize) -> NumResult<Vec<Eigenpair>> {
    let n = p.grid();
    let sigma = spectral_ceiling(m) + 0.1;
    let (x, a) = collocation_matrix(m, p.l, n);
    let si = ShiftInvert::new(&a, sigma)?;
    let coarse = si.lambdas();
    let fine = {
        let (_, a2) = collocation_matrix(m, p.l, 2 * n);
        ShiftInvert::new(&a2, sigma)?.lambdas()
    };
    let mut out = Vec::new();
    for &lam in &coarse {
        if out.len() >= count {
            break;
        }
        let mu = Complex64::new(1.0, 0.0) / (lam - Complex64::new(sigma, 0.0));
        let (v, res) = inverse_iteration(&si.b, mu)?;
        let residual = res / mu.norm();
        let mut values: Vec<f64> = v.iter().map(|z| z.re).collect();
        let par = classify_parity(&values);
        if p.parity != Parity::Full && par != p.parity {
            continue;
        }
        // nodes run from +1 down to −1; report on an increasing grid with wall zeros
        values.reverse();
        let mut y: Vec<f64> = x.iter().rev().map(|xi| p.l * xi).collect();
        y.insert(0, -p.l);
        y.push(p.l);
        values.insert(0, 0.0);
        values.push(0.0);
        normalize(&mut values);
        let agree = fine
            .iter()
            .map(|z| (z - lam).norm())
            .fold(f64::INFINITY, f64::min)
            <= 1e-6 * lam.norm().max(1.0);
        out.push(Eigenpair {
            lambda: lam,
            zero_count: count_zeros(&values),
            flagged: !agree || residual > p.tol.sqrt(),
            y,
            values,
            residual,
            parity: par,
        });
    }
    if out.len() < count {
        return Err(NumError::Invalid(format!(
            "collocation produced {} of {count} requested eigenpairs",
            out.len()
        )));
    }
    Ok(out)
}

/// The leading `count` eigenpairs, sorted by descending real part.
pub fn interval_spectrum(p: &IntervalEigenProblem, count: usize) -> NumResult<Vec<Eigenpair>> {
    let m = p.validate()?;
    if count == 0 {
        return Err(NumError::Invalid("count must be at least 1".into()));
    }
    match p.method {
        Method::Shooting => shooting_spectrum(p, m, count),
        Method::Collocation => collocation_spectrum(p, m, count),
    }
}

// ---------------------------------------------------------------------------

fn clamped_d4_ground() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| {
        let (_, d) = weighted_cheb_diff(64, 2, 4);
        let inv = d[3].clone().try_inverse().expect("clamped D⁴ is invertible");
        let mu = dense_eigenvalues(&inv).expect("eigenvalues of inverse D⁴");
        1.0 / mu[0].re
    })
}

/// First eigenvalue of `D⁴` with clamped ends on `(−l, l)`.
pub fn poincare_lambda(l: f64) -> f64 {
    clamped_d4_ground() / l.powi(4)
}

/// `l* = (8 Λ₀(1))^{1/4}`: below it the top eigenvalue is certainly negative.
pub fn regularity_bound() -> f64 {
    (8.0 * poincare_lambda(1.0)).powf(0.25)
}

// ---------------------------------------------------------------------------

/// Reference values of `λ₀(l)` for the bi-harmonic problem, to the printed precision.
pub const REFERENCE_LAMBDA0: [(f64, f64); 17] = [
    (1.0, -31.16),
    (2.0, -1.83),
    (3.0, -0.2647),
    (4.0, -0.008152),
    (4.075, -0.000236),
    (4.0775, 0.0000113),
    (4.08, 0.00026),
    (4.1, 0.0022),
    (4.2, 0.011),
    (5.0, 0.0483),
    (6.0, 0.046),
    (7.25, 0.00167),
    (7.5, -0.0097),
    (8.0, -0.027),
    (9.0, -0.018),
    (10.0, -0.00084),
    (11.0, 0.00397),
];

/// Top real eigenvalue of the bi-harmonic clamped problem at half-length `l`.
pub fn top_eigenvalue(l: f64, tol: f64) -> NumResult<f64> {
    let floor = scan_floor(2, l, 1);
    let even = *scan_roots(2, l, Parity::Even, 1, floor, tol)?
        .first()
        .ok_or_else(|| exhausted(l, 0, 1, floor))?;
    let odd = scan_roots(2, l, Parity::Odd, 1, even, tol)?;
    Ok(odd.first().map_or(even, |&r| r.max(even)))
}

/// Even-parity root near `guess`, bracketed by outward expansion.
fn eigenvalue_near(l: f64, guess: f64, width: f64, tol: f64) -> NumResult<f64> {
    let det = |x: f64| shooting_determinant(2, l, Parity::Even, x, tol).unwrap_or(f64::NAN);
    let f0 = det(guess);
    if f0 == 0.0 {
        return Ok(guess);
    }
    let mut w = width;
    for _ in 0..40 {
        for x in [guess + w, guess - w] {
            let fx = det(x);
            if fx.signum() != f0.signum() {
                let br = if x > guess { (guess, x) } else { (x, guess) };
                return find_root(det, br, 1e-14 * (1.0 + guess.abs()));
            }
        }
        w *= 1.6;
    }
    Err(NumError::RootNotConverged { lo: guess - w, hi: guess + w })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenBranch {
    pub samples: Vec<(f64, f64)>,
    pub roots: Vec<f64>,
    /// Abscissae where continuation jumped and was re-seeded.
    pub reseeds: Vec<f64>,
}

fn collocation_top(l: f64) -> NumResult<f64> {
    let p = IntervalEigenProblem::new(l).with_method(Method::Collocation);
    Ok(interval_spectrum(&p, 1)?[0].lambda.re)
}

/// Continuation of `λ₀(l)` over `[l_min, l_max]` with sign-change roots refined.
pub fn branch_trace(l_range: (f64, f64), step: f64) -> NumResult<EigenBranch> {
    branch_trace_with_tol(l_range, step, 1e-12)
}

pub fn branch_trace_with_tol(l_range: (f64, f64), step: f64, tol: f64) -> NumResult<EigenBranch> {
    let (l_min, l_max) = l_range;
    if !(l_min > 0.0 && l_max > l_min && step > 0.0) {
        return Err(NumError::Invalid("need 0 < l_min < l_max and step > 0".into()));
    }
    let nsteps = ((l_max - l_min) / step - 1e-9).ceil() as usize;
    let ls: Vec<f64> = (0..=nsteps).map(|i| (l_min + i as f64 * step).min(l_max)).collect();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(ls.len());
    let mut reseeds = Vec::new();
    for &l in &ls {
        let lam = match samples.len() {
            0 => top_eigenvalue(l, tol)?,
            k => {
                let prev = samples[k - 1].1;
                let trend = if k >= 2 { (prev - samples[k - 2].1).abs() } else { 0.0 };
                let guess = if k >= 2 { 2.0 * prev - samples[k - 2].1 } else { prev };
                let width = (0.5 * trend).max(1e-5 * (1.0 + prev.abs()));
                let cand = eigenvalue_near(l, guess, width, tol);
                match cand {
                    Ok(v) if k < 2 || (v - prev).abs() <= 10.0 * trend.max(1e-6) => v,
                    _ => {
                        reseeds.push(l);
                        let seed = collocation_top(l)?;
                        eigenvalue_near(l, seed, 1e-6 * (1.0 + seed.abs()), tol)?
                    }
                }
            }
        };
        samples.push((l, lam));
    }
    let mut roots = Vec::new();
    for w in samples.windows(2) {
        let ((la, fa), (lb, fb)) = (w[0], w[1]);
        if fa == 0.0 {
            roots.push(la);
            continue;
        }
        if fa.signum() != fb.signum() {
            let g = |l: f64| {
                let t = (l - la) / (lb - la);
                let guess = fa + t * (fb - fa);
                eigenvalue_near(l, guess, 1e-4 * (fb - fa).abs().max(1e-8), tol).unwrap_or(f64::NAN)
            };
            roots.push(find_root(g, (la, lb), 1e-10)?);
        }
    }
    Ok(EigenBranch { samples, roots, reseeds })
}

// ---------------------------------------------------------------------------

/// Wall boundary layer `−V'''' − V'/4 = 0` on `(0, L)`, `L = l^{4/3}`, with
/// `V(0) = 1`, `V(L) = V'(L) = 0`, and the matched eigenvalue approximation.
#[derive(Debug, Clone, Serialize)]
pub struct BlEigenApprox {
    pub l: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub lambda0: f64,
    pub d_hat0: f64,
    pub b_hat0: f64,
}

impl BlEigenApprox {
    pub const B: f64 = 0.314_980_262_473_718_3; // 2^{-5/3}

    pub fn a() -> f64 {
        3f64.sqrt() * Self::B
    }

    pub fn wall(&self) -> f64 {
        self.l.powf(4.0 / 3.0)
    }

    /// `V^{(k)}(z)`.
    pub fn v(&self, k: u32, z: f64) -> f64 {
        let u = z - self.wall();
        let mu = Complex64::new(Self::B, Self::a());
        let amp = Complex64::new(self.c1, -self.c2);
        let osc = (mu.powu(k) * amp * (mu * u).exp()).re;
        let base = if k == 0 { self.c3 } else { 0.0 };
        base - osc
    }
}

pub fn bl_eigenvalue_approx(l: f64) -> NumResult<BlEigenApprox> {
    if !(l > 0.0) {
        return Err(NumError::Invalid("l must be positive".into()));
    }
    let b = BlEigenApprox::B;
    let a = BlEigenApprox::a();
    let big_l = l.powf(4.0 / 3.0);
    let s3 = 3f64.sqrt();
    let c1 = 1.0 / (1.0 - (-b * big_l).exp() * ((a * big_l).cos() + (a * big_l).sin() / s3));
    let mut out = BlEigenApprox { l, c1, c2: -c1 / s3, c3: c1, lambda0: 0.0, d_hat0: 0.0, b_hat0: 0.0 };
    let tol = 1e-12;
    let f = eval_kernel(EquationFamily::BIHARMONIC, l, tol)?;
    let fp = eval_kernel_derivative(EquationFamily::BIHARMONIC, 1, l, tol)?;
    out.lambda0 = -l * out.v(3, big_l) * f + l.powf(2.0 / 3.0) * out.v(2, big_l) * fp;
    let kc = kernel_constants(EquationFamily::BIHARMONIC);
    out.d_hat0 = kc.d0 + b;
    out.b_hat0 = 0.5 * (kc.b0 + a);
    Ok(out)
}

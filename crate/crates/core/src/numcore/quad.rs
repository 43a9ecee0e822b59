use super::{NumError, NumResult};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_SUBDIVISIONS: usize = 20_000;

/// One 15-point panel: (integral, error estimate, ∫|f|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * h;
    res_abs *= h.abs();
    res_asc *= h.abs();
    let mut err = ((res_k - res_g) * h).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
}

/// Globally adaptive Gauss–Kronrod quadrature on a finite interval.
pub fn quad_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> NumResult<QuadEstimate> {
    if a == b {
        return Ok(QuadEstimate { value: 0.0, error: 0.0 });
    }
    let (v, e, ab) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(NumError::NonFinite(format!("integrand on [{a}, {b}]")));
    }
    // below this the estimate is limited by rounding in the panel sums
    let floor = |abs_sum: f64| tol.max(100.0 * f64::EPSILON * abs_sum);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e, abs: ab });
    let mut total_err = e;
    let mut total_abs = ab;
    let mut settled = Panel { a, b, value: 0.0, error: 0.0, abs: 0.0 };
    let mut count = 1;
    while total_err > floor(total_abs) {
        let Some(p) = heap.pop() else { break };
        let m = 0.5 * (p.a + p.b);
        if (p.b - p.a).abs() <= 64.0 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(f64::MIN_POSITIVE) {
            settled.value += p.value;
            settled.error += p.error;
            settled.abs += p.abs;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1, a1) = gk15(f, p.a, m);
        let (v2, e2, a2) = gk15(f, m, p.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(NumError::NonFinite(format!("integrand on [{}, {}]", p.a, p.b)));
        }
        total_err += e1 + e2 - p.error;
        total_abs += a1 + a2 - p.abs;
        heap.push(Panel { a: p.a, b: m, value: v1, error: e1, abs: a1 });
        heap.push(Panel { a: m, b: p.b, value: v2, error: e2, abs: a2 });
        count += 1;
        if count % 64 == 0 {
            // refresh running sums against drift
            total_err = settled.error + heap.iter().map(|q| q.error).sum::<f64>();
            total_abs = settled.abs + heap.iter().map(|q| q.abs).sum::<f64>();
        }
        if count > MAX_SUBDIVISIONS {
            let value = settled.value + heap.iter().map(|q| q.value).sum::<f64>();
            return Err(NumError::QuadratureFailed { estimate: value, error: total_err });
        }
    }
    let value = settled.value + heap.iter().map(|q| q.value).sum::<f64>();
    let error = settled.error + heap.iter().map(|q| q.error).sum::<f64>();
    let abs = settled.abs + heap.iter().map(|q| q.abs).sum::<f64>();
    if error > floor(abs) {
        return Err(NumError::QuadratureFailed { estimate: value, error });
    }
    Ok(QuadEstimate { value, error })
}

/// Integrates `f` over `[a, b]` with absolute tolerance `tol`.
///
/// `b` may be `f64::INFINITY`; the range is then truncated where sampled
/// values of `|f|` stay below `tol/100` over two consecutive doubling windows.
pub fn adaptive_quadrature<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> NumResult<f64> {
    if !(tol > 0.0) {
        return Err(NumError::Invalid("tol must be positive".into()));
    }
    if b.is_infinite() && b > 0.0 {
        let mut quiet = 0;
        let mut x = a + 1.0;
        let mut cut = None;
        for _ in 0..64 {
            let w = x - a;
            let hi = x + w;
            let peak = (0..=64)
                .map(|i| f(x + w * i as f64 / 64.0).abs())
                .fold(0.0, f64::max);
            if peak * w < tol / 100.0 {
                quiet += 1;
                if quiet == 2 {
                    cut = Some(x);
                    break;
                }
            } else {
                quiet = 0;
            }
            x = hi;
        }
        let Some(end) = cut else {
            return Err(NumError::QuadratureFailed { estimate: f64::NAN, error: f64::INFINITY });
        };
        let lo = a;
        let hi = end - (end - a) / 2.0;
        return quad_finite(&f, lo, hi, tol).map(|q| q.value);
    }
    quad_finite(&f, a, b, tol).map(|q| q.value)
}

/// Semi-infinite quadrature truncated where `envelope` drops below `tol/100`.
pub fn quad_semi_infinite<F, E>(f: F, a: f64, envelope: E, tol: f64) -> NumResult<f64>
where
    F: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    let mut x = a + 1.0;
    let mut width = 1.0;
    let mut n = 0;
    while envelope(x) >= tol / 100.0 {
        width *= 1.5;
        x += width;
        n += 1;
        if n > 200 {
            return Err(NumError::QuadratureFailed { estimate: f64::NAN, error: f64::INFINITY });
        }
    }
    quad_finite(&f, a, x, tol).map(|q| q.value)
}

/// Wynn's epsilon extrapolation of a sequence of partial sums.
pub fn wynn_epsilon(s: &[f64]) -> f64 {
    let n = s.len();
    if n < 3 {
        return *s.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = s.to_vec();
    let mut best = s[n - 1];
    let mut k = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d == 0.0 {
                return if k % 2 == 0 { cur[i + 1] } else { best };
            }
            next.push(prev[i + 1] + 1.0 / d);
        }
        k += 1;
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            if let Some(&v) = cur.last() {
                if v.is_finite() {
                    best = v;
                }
            }
        }
    }
    best
}

/// Sums `∫ f` over consecutive intervals `[z_i, z_{i+1}]` (typically the
/// zeros of an oscillatory factor) and accelerates the partial sums.
pub fn alternating_tail<F, Z>(f: F, mut zeros: Z, tol: f64, max_terms: usize) -> NumResult<f64>
where
    F: Fn(f64) -> f64,
    Z: Iterator<Item = f64>,
{
    let Some(mut left) = zeros.next() else { return Ok(0.0) };
    let mut partial = Vec::new();
    let mut sum = 0.0;
    let mut estimates: Vec<f64> = Vec::new();
    let mut last_term = f64::INFINITY;
    for right in zeros.take(max_terms) {
        let term = quad_finite(&f, left, right, tol * 1e-2)?.value;
        sum += term;
        last_term = term;
        partial.push(sum);
        left = right;
        if partial.len() >= 8 {
            let start = partial.len().saturating_sub(40);
            let est = wynn_epsilon(&partial[start..]);
            estimates.push(est);
            let k = estimates.len();
            if k >= 3
                && (estimates[k - 1] - estimates[k - 2]).abs() < tol
                && (estimates[k - 1] - estimates[k - 3]).abs() < tol
            {
                return Ok(est);
            }
        }
    }
    if last_term.abs() < tol {
        return Ok(estimates.last().copied().unwrap_or(sum));
    }
    Err(NumError::QuadratureFailed {
        estimate: estimates.last().copied().unwrap_or(sum),
        error: last_term.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let v = adaptive_quadrature(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_period_of_cosine() {
        let v = adaptive_quadrature(f64::cos, 0.0, 2.0 * std::f64::consts::PI, 1e-12).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn quartic_exponential_to_infinity() {
        // Γ(5/4)
        let expected = 0.906_402_477_055_477;
        let v = adaptive_quadrature(|s: f64| (-s.powi(4)).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!((v - expected).abs() < 1e-11, "{v}");
        let w = quad_semi_infinite(|s: f64| (-s.powi(4)).exp(), 0.0, |s: f64| (-s.powi(4)).exp(), 1e-12).unwrap();
        assert!((w - expected).abs() < 1e-11, "{w}");
    }

    #[test]
    fn endpoint_singularity_is_handled() {
        let v = adaptive_quadrature(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn wynn_accelerates_alternating_harmonic() {
        let mut s = 0.0;
        let sums: Vec<f64> = (1..=20)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        assert!((wynn_epsilon(&sums) - std::f64::consts::LN_2).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_tail_of_sine_over_x() {
        // ∫_π^∞ sin x / x dx = π/2 − Si(π)
        let si_pi = 1.851_937_051_982_466_2;
        let zeros = (1..).map(|k| k as f64 * std::f64::consts::PI);
        let v = alternating_tail(|x: f64| x.sin() / x, zeros, 1e-10, 5000).unwrap();
        assert!((v - (std::f64::consts::FRAC_PI_2 - si_pi)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = quad_finite(&|x: f64| (1.0 / x).sin() / x, 1e-12, 1.0, 1e-14);
        assert!(matches!(r, Err(NumError::QuadratureFailed { .. })));
    }
}

use super::{NumError, NumResult};

/// Brent's method on a sign-changing bracket; returns once the bracket is
/// narrower than `tol` (or `f` vanishes exactly).
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: (f64, f64), tol: f64) -> NumResult<f64> {
    let (mut a, mut b) = bracket;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(NumError::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumError::NonFinite(format!("f({b})")));
        }
    }
    Err(NumError::RootNotConverged { lo: b.min(c), hi: b.max(c) })
}

/// Scans `[lo, hi]` on `n` uniform cells and returns every sign-change bracket.
pub fn scan_brackets<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let fx = f(x);
        if f_prev.is_finite() && fx.is_finite() && f_prev.signum() != fx.signum() {
            out.push((x_prev, x));
        }
        x_prev = x;
        f_prev = fx;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn square_root_of_two() {
        let r = find_root(|x| x * x - 2.0, (1.0, 2.0), 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero() {
        let r = find_root(f64::cos, (1.0, 2.0), 1e-12).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn missing_sign_change_is_distinct() {
        let r = find_root(|x| x * x + 1.0, (-1.0, 1.0), 1e-12);
        assert!(matches!(r, Err(NumError::NoSignChange { .. })));
    }

    #[test]
    fn scan_finds_all_sine_zeros() {
        let b = scan_brackets(f64::sin, 0.5, 10.0, 50);
        assert_eq!(b.len(), 3);
    }

    proptest! {
        #[test]
        fn cubic_roots_recovered(r in -5.0f64..5.0) {
            let x = find_root(|x| (x - r) * (x * x + 1.0), (-6.0, 6.0), 1e-13).unwrap();
            prop_assert!((x - r).abs() < 1e-11);
        }
    }
}

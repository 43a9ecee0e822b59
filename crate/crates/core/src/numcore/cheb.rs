//! Weighted Chebyshev differentiation matrices (Weideman–Reddy `poldif`).

use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Interior Chebyshev nodes `cos(kπ/n)`, `k = 1..n-1`, with their angles.
pub fn interior_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let theta: Vec<f64> = (1..n).map(|k| k as f64 * PI / n as f64).collect();
    (theta.iter().map(|t| t.cos()).collect(), theta)
}

/// Ratios `α^{(l)}(x)/α(x)` for `α = (1 − x²)^m`, `l = 1..=order`, at a node with
/// `s = 1 − x²` supplied separately so no cancellation occurs near ±1.
fn weight_ratios(m: usize, order: usize, x: f64, s: f64) -> Vec<f64> {
    // α^{(l)} = Σ c·x^a·s^b, starting from s^m
    let mut terms: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    terms.insert((0, m as i32), 1.0);
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        let mut next: BTreeMap<(i32, i32), f64> = BTreeMap::new();
        for (&(a, b), &c) in &terms {
            if a > 0 {
                *next.entry((a - 1, b)).or_default() += c * a as f64;
            }
            if b > 0 {
                *next.entry((a + 1, b - 1)).or_default() += -2.0 * c * b as f64;
            }
        }
        terms = next;
        let v: f64 = terms
            .iter()
            .map(|(&(a, b), &c)| c * x.powi(a) * s.powi(b - m as i32))
            .sum();
        out.push(v);
    }
    out
}

/// Differentiation matrices of orders `1..=order` acting on samples of
/// `f = (1 − x²)^m p(x)` at the interior nodes of an `n`-interval Chebyshev grid.
pub fn weighted_cheb_diff(n: usize, m: usize, order: usize) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    assert!(n >= 3, "need at least two interior nodes");
    let (x, theta) = interior_nodes(n);
    let np = x.len();
    let s: Vec<f64> = theta.iter().map(|t| t.sin().powi(2)).collect();
    let alpha: Vec<f64> = s.iter().map(|v| v.powi(m as i32)).collect();
    let beta: Vec<Vec<f64>> = (0..np).map(|j| weight_ratios(m, order, x[j], s[j])).collect();
    let dx = |i: usize, j: usize| -> f64 {
        -2.0 * (0.5 * (theta[i] + theta[j])).sin() * (0.5 * (theta[i] - theta[j])).sin()
    };
    let mut z = DMatrix::<f64>::zeros(np, np);
    for i in 0..np {
        for j in 0..np {
            if i != j {
                z[(i, j)] = 1.0 / dx(i, j);
            }
        }
    }
    // c_i = α_i Π_{k≠i}(x_i − x_k), kept as log-magnitude and sign
    let mut logc = vec![0.0; np];
    let mut sgn = vec![1.0; np];
    for i in 0..np {
        let mut l = alpha[i].ln();
        let mut s_ = 1.0;
        for k in 0..np {
            if k != i {
                let d = dx(i, k);
                l += d.abs().ln();
                if d < 0.0 {
                    s_ = -s_;
                }
            }
        }
        logc[i] = l;
        sgn[i] = s_;
    }
    let cmat = DMatrix::from_fn(np, np, |i, j| sgn[i] * sgn[j] * (logc[i] - logc[j]).exp());
    // X[r][j] = 1/(x_j − x_i) over i ≠ j, in order of i
    let xcol: Vec<Vec<f64>> = (0..np)
        .map(|j| (0..np).filter(|&i| i != j).map(|i| z[(j, i)]).collect())
        .collect();
    let mut y = DMatrix::<f64>::from_element(np, np, 1.0);
    let mut d = DMatrix::<f64>::identity(np, np);
    let mut mats = Vec::with_capacity(order);
    for ell in 1..=order {
        let lf = ell as f64;
        let mut ynew = DMatrix::<f64>::zeros(np, np);
        for j in 0..np {
            let mut acc = beta[j][ell - 1];
            ynew[(0, j)] = acc;
            for r in 1..np {
                acc += lf * y[(r - 1, j)] * xcol[j][r - 1];
                ynew[(r, j)] = acc;
            }
        }
        y = ynew;
        let diag: Vec<f64> = (0..np).map(|i| d[(i, i)]).collect();
        let mut dn = DMatrix::<f64>::zeros(np, np);
        for i in 0..np {
            for j in 0..np {
                if i != j {
                    dn[(i, j)] = lf * z[(i, j)] * (cmat[(i, j)] * diag[i] - d[(i, j)]);
                }
            }
            dn[(i, i)] = y[(np - 1, i)];
        }
        d = dn;
        mats.push(d.clone());
    }
    (x, mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_derivative_of_weighted_polynomial() {
        // f = (1 − x²)² (1 + x), f' = −4x(1 − x²)(1 + x) + (1 − x²)²
        let (x, d) = weighted_cheb_diff(24, 2, 4);
        let f: Vec<f64> = x.iter().map(|&t| (1.0 - t * t).powi(2) * (1.0 + t)).collect();
        let fv = nalgebra::DVector::from_vec(f);
        let df = &d[0] * &fv;
        for (i, &t) in x.iter().enumerate() {
            let exact = -4.0 * t * (1.0 - t * t) * (1.0 + t) + (1.0 - t * t).powi(2);
            assert!((df[i] - exact).abs() < 1e-11, "{i}");
        }
        // fourth derivative of (1 − x²)²(1 + x) = 24 + 120x
        let d4 = &d[3] * &fv;
        for (i, &t) in x.iter().enumerate() {
            assert!((d4[i] - (24.0 + 120.0 * t)).abs() < 1e-7, "{i} {}", d4[i]);
        }
    }

    #[test]
    fn clamped_beam_fundamental_eigenvalue() {
        // cosh(2μ)cos(2μ) = 1, first root 2μ = 4.730040744862704
        let mu: f64 = 4.730_040_744_862_704 / 2.0;
        let (_, d) = weighted_cheb_diff(40, 2, 4);
        let ev = crate::numcore::dense_eigenvalues(&d[3]).unwrap();
        let smallest = ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        assert!((smallest - mu.powi(4)).abs() < 1e-8, "{smallest}");
    }

    #[test]
    fn ratios_match_direct_formula() {
        let (x, s) = (0.3f64, 1.0 - 0.09);
        let r = weight_ratios(2, 2, x, s);
        assert!((r[0] - (-4.0 * x / s)).abs() < 1e-14);
        assert!((r[1] - (-4.0 * s + 8.0 * x * x) / (s * s)).abs() < 1e-13);
    }
}

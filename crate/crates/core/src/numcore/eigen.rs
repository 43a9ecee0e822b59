use super::{Complex64, DenseMatrix, NumError, NumResult};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Option<DVector<Complex64>>,
    /// ‖Mv − λv‖ / ‖v‖, or NaN without a vector.
    pub residual: f64,
    /// Set when another eigenvalue lies within the cluster radius; such
    /// vectors are not resolved.
    pub clustered: bool,
}

/// Parlett–Reinsch diagonal balancing; returns the balanced matrix and the scaling.
pub fn balance(m: &DenseMatrix) -> (DenseMatrix, Vec<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut d = vec![1.0; n];
    let radix: f64 = 2.0;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / radix;
            while c < g {
                f *= radix;
                c *= radix * radix;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= radix * radix;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    (a, d)
}

fn sort_desc(v: &mut [Complex64]) {
    v.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// All eigenvalues, sorted by descending real part (ties: descending imaginary part).
pub fn dense_eigenvalues(m: &DenseMatrix) -> NumResult<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(NumError::Invalid("matrix must be square and non-empty".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(NumError::NonFinite("matrix entry".into()));
    }
    let (b, _) = balance(m);
    let schur = nalgebra::linalg::Schur::try_new(b, f64::EPSILON, 100 * n)
        .ok_or(NumError::EigenNotConverged { index: n - 1 })?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    sort_desc(&mut ev);
    Ok(ev)
}

/// Eigenvector for an approximate eigenvalue by complex inverse iteration.
pub fn inverse_iteration(m: &DenseMatrix, lambda: Complex64) -> NumResult<(DVector<Complex64>, f64)> {
    let n = m.nrows();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let shift = lambda + Complex64::new(scale * 1e-12, scale * 1e-12);
    let a: DMatrix<Complex64> =
        DMatrix::from_fn(n, n, |i, j| Complex64::new(m[(i, j)], 0.0) - if i == j { shift } else { Complex64::new(0.0, 0.0) });
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 / (i as f64 + 1.0), ((i as f64) * 0.7).sin()));
    for _ in 0..4 {
        let w = lu.solve(&v).ok_or(NumError::Singular { pivot: 0 })?;
        let norm = w.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(NumError::NonFinite("inverse iteration".into()));
        }
        v = w / Complex64::new(norm, 0.0);
    }
    // phase-normalize so the largest component is real positive
    let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (i, z)| if z.norm() > acc.1 { (i, z.norm()) } else { acc });
    let ph = v[imax] / Complex64::new(v[imax].norm(), 0.0);
    v /= ph;
    let mv = m.map(|x| Complex64::new(x, 0.0)) * &v;
    let res = (mv - &v * lambda).norm() / v.norm();
    Ok((v, res))
}

/// Eigenvalues with (optionally) inverse-iteration eigenvectors for the leading `vectors` entries.
pub fn dense_eigenpairs(m: &DenseMatrix, vectors: usize) -> NumResult<Vec<EigenPair>> {
    let ev = dense_eigenvalues(m)?;
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut out = Vec::with_capacity(ev.len());
    for (i, &lam) in ev.iter().enumerate() {
        let clustered = ev
            .iter()
            .enumerate()
            .any(|(j, &mu)| j != i && (mu - lam).norm() < 1e-8 * scale.max(lam.norm()));
        let (vector, residual) = if i < vectors && !clustered {
            let (v, r) = inverse_iteration(m, lam)?;
            (Some(v), r)
        } else {
            (None, f64::NAN)
        };
        out.push(EigenPair { value: lam, vector, residual, clustered });
    }
    Ok(out)
}

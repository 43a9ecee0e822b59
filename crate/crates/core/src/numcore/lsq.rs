use super::{NumError, NumResult};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct LsqFit {
    pub coef: DVector<f64>,
    /// Ratio of largest to smallest singular value of the design matrix.
    pub condition: f64,
    pub residual_rms: f64,
}

/// Linear least squares `min ‖A c − b‖` via SVD.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> NumResult<LsqFit> {
    if a.nrows() < a.ncols() {
        return Err(NumError::Invalid("underdetermined least-squares problem".into()));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let coef = svd
        .solve(b, smax * 1e-14)
        .map_err(|e| NumError::Invalid(e.to_string()))?;
    let r = a * &coef - b;
    let residual_rms = (r.norm_squared() / b.len() as f64).sqrt();
    Ok(LsqFit { coef, condition, residual_rms })
}

/// Straight-line fit; returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> NumResult<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(NumError::Invalid("need at least two paired samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(NumError::Invalid("degenerate abscissae".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert!((s - 3.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-13);
    }

    #[test]
    fn overdetermined_quadratic() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 / 10.0).collect();
        let a = DMatrix::from_fn(20, 3, |i, j| x[i].powi(j as i32));
        let b = DVector::from_fn(20, |i, _| 1.0 + 2.0 * x[i] - 0.5 * x[i] * x[i]);
        let f = least_squares(&a, &b).unwrap();
        assert!((f.coef[0] - 1.0).abs() < 1e-12);
        assert!((f.coef[2] + 0.5).abs() < 1e-12);
        assert!(f.residual_rms < 1e-12);
    }
}

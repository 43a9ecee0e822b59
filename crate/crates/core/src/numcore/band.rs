//! Banded matrices with partial-pivoting LU.

use super::{NumError, NumResult};

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// Zero `n×n` matrix with `kl` sub- and `ku` super-diagonals.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, w, data: vec![0.0; n * w] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off >= self.w as isize {
            None
        } else {
            Some(i * self.w + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets an entry inside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside band");
        let s = self.slot(i, j).unwrap();
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    pub fn clear_row(&mut self, i: usize) {
        let s = i * self.w;
        self.data[s..s + self.w].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn lu(&self) -> NumResult<BandLu> {
        let mut a = self.clone();
        let n = a.n;
        let reach = a.kl + a.ku;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last = (k + a.kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for r in k + 1..=last {
                let v = a.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(NumError::Singular { pivot: k });
            }
            piv[k] = p;
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (sk, sp) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.get(k, k);
            for r in k + 1..=last {
                let sr = a.slot(r, k).unwrap();
                let l = a.data[sr] / pivot;
                a.data[sr] = l;
                if l != 0.0 {
                    for j in k + 1..=jmax {
                        let akj = a.data[a.slot(k, j).unwrap()];
                        let s = a.slot(r, j).unwrap();
                        a.data[s] -= l * akj;
                    }
                }
            }
        }
        Ok(BandLu { a, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let a = &self.a;
        let n = a.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + a.kl).min(n - 1);
            for r in k + 1..=last {
                x[r] -= a.data[a.slot(r, k).unwrap()] * x[k];
            }
        }
        let reach = a.kl + a.ku;
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= a.data[a.slot(i, j).unwrap()] * x[j];
            }
            x[i] = s / a.data[a.slot(i, i).unwrap()];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tridiagonal_solve() {
        let n = 10;
        let mut m = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            m.set(i, i, 2.0);
            if i > 0 {
                m.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                m.set(i, i + 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let b = m.matvec(&x);
        let y = m.lu().unwrap().solve(&b);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_requires_pivoting() {
        let mut m = BandMatrix::zeros(3, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 1.0);
        let b = m.matvec(&[1.0, 2.0, 3.0]);
        let y = m.lu().unwrap().solve(&b);
        assert!((y[0] - 1.0).abs() < 1e-14 && (y[1] - 2.0).abs() < 1e-14 && (y[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = BandMatrix::zeros(4, 2, 2);
        assert!(matches!(m.lu(), Err(NumError::Singular { pivot: 0 })));
    }

    proptest! {
        #[test]
        fn random_banded_roundtrip(vals in proptest::collection::vec(-1.0f64..1.0, 30 * 5), xs in proptest::collection::vec(-3.0f64..3.0, 30)) {
            let n = 30;
            let mut m = BandMatrix::zeros(n, 2, 2);
            for i in 0..n {
                for (k, off) in (-2i64..=2).enumerate() {
                    let j = i as i64 + off;
                    if j >= 0 && (j as usize) < n {
                        m.set(i, j as usize, vals[i * 5 + k]);
                    }
                }
                m.add(i, i, 4.0 * vals[i * 5 + 2].signum());
            }
            let b = m.matvec(&xs);
            let y = m.lu().unwrap().solve(&b);
            for i in 0..n {
                prop_assert!((y[i] - xs[i]).abs() < 1e-8);
            }
        }
    }
}

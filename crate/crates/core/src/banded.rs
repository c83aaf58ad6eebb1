//! Symmetric positive definite banded matrices and their Cholesky factors.

use crate::error::{FlowError, Result};

/// Lower band of a symmetric matrix. Row `i` stores columns `i-bw..=i`.
#[derive(Clone, Debug)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBand {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Add `v` to entry `(i, j)`; only the lower triangle is stored, so call once per pair.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(r, c);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.slot(i, i)] * x[i];
        }
        y
    }

    /// In-place Cholesky factorization `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        let w = bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let mut s = self.data[self.slot(i, j)];
                if klo < j {
                    let ri = i * w + (klo + bw - i);
                    let rj = j * w + (klo + bw - j);
                    let len = j - klo;
                    let a = &self.data[ri..ri + len];
                    let b = &self.data[rj..rj + len];
                    s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(FlowError::numeric(
                            format!("matrix is not positive definite at pivot {i}"),
                            s,
                        ));
                    }
                    let slot = self.slot(i, i);
                    self.data[slot] = s.sqrt();
                } else {
                    let d = self.data[self.slot(j, j)];
                    let slot = self.slot(i, j);
                    self.data[slot] = s / d;
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

/// Cholesky factor of a [`SymBand`].
#[derive(Clone, Debug)]
pub struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.l.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let n = l.n;
        let bw = l.bw;
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for j in lo..i {
                s -= l.data[l.slot(i, j)] * y[j];
            }
            y[i] = s / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let yi = y[i] / l.data[l.slot(i, i)];
            y[i] = yi;
            let lo = i.saturating_sub(bw);
            for j in lo..i {
                y[j] -= l.data[l.slot(i, j)] * yi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal() {
        let n = 50;
        let mut a = SymBand::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul(&x);
        let sol = a.clone().cholesky().unwrap().solve(&b);
        for i in 0..n {
            assert!((sol[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = SymBand::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_err());
    }
}

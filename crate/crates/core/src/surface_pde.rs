//! Laplace-Beltrami solves on graph surfaces, `H^{-1}` norms and the
//! minimizing-movements penalty.

use crate::error::{FlowError, Result};
use crate::geometry::{metrics_on, volume, Profile};
use crate::spectral::Grid;

const CG_RTOL: f64 = 1e-12;

/// Weak-form operator `v -> -div(A Dv)` with `A = (Id - Dh (x) Dh / J^2) J`
/// frozen at a base profile.
///
/// `A Dv . Dv` integrated over `Q` equals `int_Gamma |D_Gamma v|^2`.
#[derive(Clone, Debug)]
pub struct MetricOperator {
    grid: Grid,
    /// Row-major `m x m` coefficient per node.
    coeff: Vec<Vec<f64>>,
    area: Vec<f64>,
    mean_coeff: f64,
}

impl MetricOperator {
    pub fn new(grid: &Grid, base: &[f64]) -> Result<Self> {
        let met = metrics_on(grid, base)?;
        let m = grid.m();
        let mut coeff = vec![vec![0.0; base.len()]; m * m];
        for i in 0..base.len() {
            let j = met.area_element[i];
            for a in 0..m {
                for b in 0..m {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    coeff[a * m + b][i] =
                        (delta - met.gradient[a][i] * met.gradient[b][i] / (j * j)) * j;
                }
            }
        }
        let mean_coeff = (0..m).map(|a| grid.mean(&coeff[a * m + a])).sum::<f64>() / m as f64;
        Ok(MetricOperator {
            grid: grid.clone(),
            coeff,
            area: met.area_element,
            mean_coeff,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Area element `J` of the base surface.
    pub fn area_element(&self) -> &[f64] {
        &self.area
    }

    /// Coefficient `A_ab` at every node.
    pub fn coefficient(&self, a: usize, b: usize) -> &[f64] {
        &self.coeff[a * self.grid.m() + b]
    }

    /// `A Dv`, one vector per axis.
    pub fn flux(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let m = self.grid.m();
        let dv = self.grid.gradient(v);
        (0..m)
            .map(|a| {
                (0..v.len())
                    .map(|i| (0..m).map(|b| self.coeff[a * m + b][i] * dv[b][i]).sum())
                    .collect()
            })
            .collect()
    }

    /// `K v = -div(A Dv)` (positive semidefinite).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.grid.divergence(&self.flux(v));
        out.iter_mut().for_each(|x| *x = -*x);
        out
    }

    /// `int_Q A Dv . Dv dx`.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let dv = self.grid.gradient(v);
        let flux = self.flux(v);
        (0..self.grid.m()).map(|a| self.grid.dot(&flux[a], &dv[a])).sum()
    }

    /// Flat Laplacian inverse scaled by the mean coefficient (kernel mapped to zero).
    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let mut data = grid.fft(r);
        let max_sym = grid.laplacian_symbol(grid.n() / 4);
        for (idx, c) in data.iter_mut().enumerate() {
            let s = grid.laplacian_symbol(idx);
            if s <= 1e-12 * max_sym {
                *c *= 0.0;
            } else {
                *c /= s * self.mean_coeff;
            }
        }
        grid.ifft(data)
    }

    /// Solve `K v = f` on the complement of the kernel by preconditioned CG.
    ///
    /// `f` is projected off the kernel first; the returned `v` has no kernel part.
    pub fn solve(&self, f: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        let grid = &self.grid;
        let mut rhs = f.to_vec();
        grid.project_out_kernel(&mut rhs);
        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm == 0.0 {
            return Ok(vec![0.0; f.len()]);
        }
        let mut x = match guess {
            Some(g) => {
                let mut g = g.to_vec();
                grid.project_out_kernel(&mut g);
                g
            }
            None => vec![0.0; f.len()],
        };
        let kx = self.apply(&x);
        let mut r: Vec<f64> = rhs.iter().zip(&kx).map(|(a, b)| a - b).collect();
        grid.project_out_kernel(&mut r);
        let mut z = self.precondition(&r);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let max_iter = 10 * grid.n() * grid.n();
        let mut res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut iter = 0;
        while res > CG_RTOL * rhs_norm {
            if iter >= max_iter {
                return Err(FlowError::numeric(
                    "Laplace-Beltrami conjugate gradient did not converge",
                    res / rhs_norm,
                ));
            }
            let kp = self.apply(&p);
            let pkp: f64 = p.iter().zip(&kp).map(|(a, b)| a * b).sum();
            if pkp <= 0.0 {
                return Err(FlowError::numeric(
                    "Laplace-Beltrami operator lost positivity",
                    res / rhs_norm,
                ));
            }
            let alpha = rz / pkp;
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            grid.project_out_kernel(&mut r);
            z = self.precondition(&r);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..p.len() {
                p[i] = z[i] + beta * p[i];
            }
            res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            iter += 1;
        }
        grid.project_out_kernel(&mut x);
        Ok(x)
    }

    /// Subtract the surface (`J`-weighted) mean.
    pub fn remove_surface_mean(&self, v: &mut [f64]) {
        let num: f64 = v.iter().zip(&self.area).map(|(a, b)| a * b).sum();
        let den: f64 = self.area.iter().sum();
        let c = num / den;
        v.iter_mut().for_each(|x| *x -= c);
    }

    /// Solve `Delta_Gamma v = rhs` weakly with zero surface mean.
    pub fn laplace_beltrami(&self, rhs: &[f64], guess: Option<&[f64]>) -> Result<Vec<f64>> {
        self.grid.validate(rhs)?;
        let weighted: Vec<f64> = rhs.iter().zip(&self.area).map(|(r, j)| r * j).collect();
        check_zero_mean(&self.grid, &weighted, "surface mean of the right-hand side")?;
        let neg: Vec<f64> = weighted.iter().map(|v| -v).collect();
        let mut v = self.solve(&neg, guess)?;
        self.remove_surface_mean(&mut v);
        Ok(v)
    }
}

fn check_zero_mean(grid: &Grid, f: &[f64], what: &str) -> Result<()> {
    let mean = grid.mean(f);
    let rms = (f.iter().map(|v| v * v).sum::<f64>() / f.len() as f64).sqrt();
    if mean.abs() > 1e-10 * rms {
        return Err(FlowError::compat(format!(
            "{what} must vanish (mean {mean:e}, rms {rms:e})"
        )));
    }
    Ok(())
}

/// Solve `Delta_Gamma v = rhs` on the graph of `base`, with `int_Gamma v = 0`.
pub fn laplace_beltrami_solve(base: &Profile, rhs: &[f64]) -> Result<Vec<f64>> {
    let op = MetricOperator::new(&base.grid(), base.values())?;
    op.laplace_beltrami(rhs, None)
}

/// `||f||_{H^{-1}} = ||Dw||_{L^2}` with `Delta w = f` on the flat torus.
pub fn hminus1_norm(grid: &Grid, f: &[f64]) -> Result<f64> {
    grid.validate(f)?;
    check_zero_mean(grid, f, "flat mean")?;
    Ok(hminus1_norm_unchecked(grid, f))
}

pub(crate) fn hminus1_norm_unchecked(grid: &Grid, f: &[f64]) -> f64 {
    let data = grid.fft(f);
    let total = grid.len() as f64;
    let vol = grid.period().powi(grid.m() as i32);
    let mut s = 0.0;
    for (idx, c) in data.iter().enumerate().skip(1) {
        let q = grid.wavevector(idx);
        s += c.norm_sqr() / (q[0] * q[0] + q[1] * q[1]);
    }
    (vol * s / (total * total)).sqrt()
}

/// Penalty value together with the potential `v_h` it was computed from.
#[derive(Clone, Debug)]
pub struct PenaltyEval {
    /// `(1/2) int_Gamma |D_Gamma v|^2` (no `1/tau` factor).
    pub value: f64,
    pub potential: Vec<f64>,
}

/// Minimizing-movements penalty bound to one base profile.
#[derive(Clone, Debug)]
pub struct PenaltyOperator {
    op: MetricOperator,
    base: Vec<f64>,
    base_mean: f64,
}

impl PenaltyOperator {
    pub fn new(grid: &Grid, base: &[f64]) -> Result<Self> {
        Ok(PenaltyOperator {
            op: MetricOperator::new(grid, base)?,
            base: base.to_vec(),
            base_mean: grid.mean(base),
        })
    }

    pub fn operator(&self) -> &MetricOperator {
        &self.op
    }

    /// Penalty for `h` against the base, warm-started from `guess`.
    pub fn eval(&self, h: &[f64], guess: Option<&[f64]>) -> Result<PenaltyEval> {
        let grid = self.op.grid();
        grid.validate(h)?;
        let mean = grid.mean(h);
        let scale = self.base_mean.abs().max(1e-300);
        if (mean - self.base_mean).abs() > 1e-10 * scale {
            return Err(FlowError::compat(format!(
                "volume mismatch: mean height {mean:e} vs base {:e}",
                self.base_mean
            )));
        }
        let delta: Vec<f64> = h.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        // Delta_Gamma v = delta / J, weak right-hand side delta.
        let neg: Vec<f64> = delta.iter().map(|v| -v).collect();
        let mut v = self.op.solve(&neg, guess)?;
        let value = 0.5 * self.op.energy(&v);
        self.op.remove_surface_mean(&mut v);
        Ok(PenaltyEval {
            value,
            potential: v,
        })
    }
}

/// `(1/2) int_{Gamma_prev} |D_Gamma v_h|^2` with `v_h` from the Laplace-Beltrami problem on `base`.
pub fn mm_penalty(base: &Profile, h: &Profile, h_prev: &Profile) -> Result<f64> {
    if !base.same_layout(h) || !base.same_layout(h_prev) {
        return Err(FlowError::invalid("profiles must share one grid"));
    }
    let (v0, v1) = (volume(h_prev), volume(h));
    if (v0 - v1).abs() > 1e-10 * v0.abs() {
        return Err(FlowError::compat(format!(
            "volume mismatch: {v1:e} vs {v0:e}"
        )));
    }
    let op = MetricOperator::new(&base.grid(), base.values())?;
    let delta: Vec<f64> = h.values().iter().zip(h_prev.values()).map(|(a, b)| b - a).collect();
    let v = op.solve(&delta, None)?;
    Ok(0.5 * op.energy(&v))
}

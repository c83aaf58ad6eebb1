//! Positively one-homogeneous surface energy densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::geometry::Profile;
use crate::spectral::Grid;

/// Surface energy density `psi` on `R^{m+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Anisotropy {
    /// `psi(xi) = |xi|`.
    Isotropic { dim: usize },
    /// `psi(xi) = sqrt(xi^T M xi)`, `M` symmetric positive definite (row-major).
    Elliptic { matrix: Vec<f64> },
    /// `psi(xi) = |xi| (1 + gamma sum_i xi_i^4 / |xi|^4)`.
    RegularizedCubic { dim: usize, gamma: f64 },
}

/// Value, gradient and Hessian of `psi` at one direction.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `dim x dim`.
    pub hessian: Vec<f64>,
}

impl PsiEval {
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let d = self.gradient.len();
        self.hessian[i * d + j]
    }

    /// `D^2 psi [v, w]`.
    pub fn hess_form(&self, v: &[f64], w: &[f64]) -> f64 {
        let d = self.gradient.len();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += v[i] * self.hessian[i * d + j] * w[j];
            }
        }
        s
    }
}

impl Anisotropy {
    pub fn isotropic(dim: usize) -> Self {
        Anisotropy::Isotropic { dim }
    }

    pub fn elliptic(matrix: Vec<f64>) -> Result<Self> {
        let a = Anisotropy::Elliptic { matrix };
        a.validate()?;
        Ok(a)
    }

    pub fn regularized_cubic(dim: usize, gamma: f64) -> Result<Self> {
        let a = Anisotropy::RegularizedCubic { dim, gamma };
        a.validate()?;
        Ok(a)
    }

    /// Build from a family name and a flat parameter list (config files).
    pub fn from_spec(family: &str, dim: usize, params: &[f64]) -> Result<Self> {
        let a = match family {
            "isotropic" => Anisotropy::Isotropic { dim },
            "elliptic" => {
                let matrix = if params.len() == dim {
                    let mut m = vec![0.0; dim * dim];
                    for i in 0..dim {
                        m[i * dim + i] = params[i];
                    }
                    m
                } else {
                    params.to_vec()
                };
                Anisotropy::Elliptic { matrix }
            }
            "regularized_cubic" | "cubic" => {
                let gamma = *params.first().ok_or_else(|| {
                    FlowError::invalid("regularized_cubic needs one parameter (gamma)")
                })?;
                Anisotropy::RegularizedCubic { dim, gamma }
            }
            other => {
                return Err(FlowError::invalid(format!(
                    "unknown anisotropy family '{other}' (expected isotropic, elliptic, regularized_cubic)"
                )))
            }
        };
        a.validate()?;
        if a.dim() != dim {
            return Err(FlowError::invalid(format!(
                "anisotropy acts on R^{}, expected R^{dim}",
                a.dim()
            )));
        }
        Ok(a)
    }

    pub fn dim(&self) -> usize {
        match self {
            Anisotropy::Isotropic { dim } | Anisotropy::RegularizedCubic { dim, .. } => *dim,
            Anisotropy::Elliptic { matrix } => (matrix.len() as f64).sqrt().round() as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim != 2 && dim != 3 {
            return Err(FlowError::invalid(format!(
                "anisotropy dimension must be 2 or 3, got {dim}"
            )));
        }
        match self {
            Anisotropy::Isotropic { .. } => Ok(()),
            Anisotropy::RegularizedCubic { gamma, .. } => {
                if gamma.is_finite() && *gamma >= 0.0 {
                    Ok(())
                } else {
                    Err(FlowError::invalid(format!("gamma must be >= 0, got {gamma}")))
                }
            }
            Anisotropy::Elliptic { matrix } => {
                if matrix.len() != dim * dim {
                    return Err(FlowError::invalid("elliptic matrix must be square"));
                }
                for i in 0..dim {
                    for j in 0..dim {
                        if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > 1e-14 {
                            return Err(FlowError::invalid("elliptic matrix must be symmetric"));
                        }
                    }
                }
                // Sylvester's criterion.
                let minors_ok = if dim == 2 {
                    matrix[0] > 0.0 && matrix[0] * matrix[3] - matrix[1] * matrix[2] > 0.0
                } else {
                    let m = |i: usize, j: usize| matrix[i * 3 + j];
                    let d2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
                    let d3 = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
                    m(0, 0) > 0.0 && d2 > 0.0 && d3 > 0.0
                };
                if minors_ok {
                    Ok(())
                } else {
                    Err(FlowError::invalid("elliptic matrix must be positive definite"))
                }
            }
        }
    }

    /// `psi`, `D psi`, `D^2 psi` at `xi != 0`.
    pub fn eval(&self, xi: &[f64]) -> Result<PsiEval> {
        let dim = self.dim();
        if xi.len() != dim {
            return Err(FlowError::invalid(format!(
                "direction has {} components, anisotropy acts on R^{dim}",
                xi.len()
            )));
        }
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        if r2 == 0.0 || !r2.is_finite() {
            return Err(FlowError::domain("psi derivatives are undefined at xi = 0"));
        }
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(&self, xi: &[f64]) -> PsiEval {
        let dim = xi.len();
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let r = r2.sqrt();
        match self {
            Anisotropy::Isotropic { .. } => {
                let gradient: Vec<f64> = xi.iter().map(|v| v / r).collect();
                let mut hessian = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hessian[i * dim + j] = (delta - gradient[i] * gradient[j]) / r;
                    }
                }
                PsiEval {
                    value: r,
                    gradient,
                    hessian,
                }
            }
            Anisotropy::Elliptic { matrix } => {
                let mx: Vec<f64> = (0..dim)
                    .map(|i| (0..dim).map(|j| matrix[i * dim + j] * xi[j]).sum())
                    .collect();
                let value = xi.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>().sqrt();
                let gradient: Vec<f64> = mx.iter().map(|v| v / value).collect();
                let mut hessian = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        hessian[i * dim + j] =
                            (matrix[i * dim + j] - mx[i] * mx[j] / (value * value)) / value;
                    }
                }
                PsiEval {
                    value,
                    gradient,
                    hessian,
                }
            }
            Anisotropy::RegularizedCubic { gamma, .. } => {
                let s: f64 = xi.iter().map(|v| v.powi(4)).sum();
                let r3 = r2 * r;
                let r5 = r3 * r2;
                let r7 = r5 * r2;
                let value = r + gamma * s / r3;
                let gradient: Vec<f64> = xi
                    .iter()
                    .map(|&v| v / r + gamma * (4.0 * v.powi(3) / r3 - 3.0 * s * v / r5))
                    .collect();
                let mut hessian = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in 0..dim {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let iso = (delta - xi[i] * xi[j] / r2) / r;
                        let cubic = 12.0 * delta * xi[i] * xi[i] / r3
                            - 12.0 * (xi[i].powi(3) * xi[j] + xi[i] * xi[j].powi(3)) / r5
                            + 15.0 * s * xi[i] * xi[j] / r7
                            - 3.0 * s * delta / r5;
                        hessian[i * dim + j] = iso + gamma * cubic;
                    }
                }
                PsiEval {
                    value,
                    gradient,
                    hessian,
                }
            }
        }
    }

    /// A constant `c` with `|xi|/c <= psi(xi) <= c |xi|`.
    pub fn bound_constant(&self) -> f64 {
        match self {
            Anisotropy::Isotropic { .. } => 1.0,
            Anisotropy::Elliptic { matrix } => {
                // Gershgorin bounds on the spectrum of M.
                let dim = self.dim();
                let mut hi: f64 = 0.0;
                let mut lo = f64::INFINITY;
                for i in 0..dim {
                    let off: f64 = (0..dim)
                        .filter(|&j| j != i)
                        .map(|j| matrix[i * dim + j].abs())
                        .sum();
                    hi = hi.max(matrix[i * dim + i] + off);
                    lo = lo.min(matrix[i * dim + i] - off);
                }
                let lo = if lo > 0.0 { lo } else { self.min_eigen_estimate() };
                hi.sqrt().max(1.0 / lo.sqrt())
            }
            Anisotropy::RegularizedCubic { gamma, .. } => 1.0 + gamma,
        }
    }

    fn min_eigen_estimate(&self) -> f64 {
        sphere_samples(self.dim(), 4096)
            .iter()
            .map(|xi| self.eval_unchecked(xi).value.powi(2))
            .fold(f64::INFINITY, f64::min)
    }

    /// `d^2 psi / d xi_1^2` at the vertical direction `e_{m+1}`.
    pub fn vertical_tangential_stiffness(&self) -> f64 {
        let dim = self.dim();
        let mut e = vec![0.0; dim];
        e[dim - 1] = 1.0;
        self.eval_unchecked(&e).hess(0, 0)
    }

    /// Minimum of `D^2 psi(xi)[w, w]` over sampled unit `xi` and unit `w` orthogonal to `xi`.
    pub fn convexity_margin(&self, samples: usize) -> f64 {
        let samples = samples.max(1);
        let dim = self.dim();
        sphere_samples(dim, samples)
            .iter()
            .map(|xi| {
                let ev = self.eval_unchecked(xi);
                if dim == 2 {
                    let t = [-xi[1], xi[0]];
                    ev.hess_form(&t, &t)
                } else {
                    // Smallest eigenvalue of the Hessian restricted to xi^perp.
                    let (t1, t2) = orthonormal_complement(xi);
                    let a = ev.hess_form(&t1, &t1);
                    let c = ev.hess_form(&t2, &t2);
                    let b = ev.hess_form(&t1, &t2);
                    0.5 * (a + c) - (0.25 * (a - c).powi(2) + b * b).sqrt()
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `g(theta) = psi(cos theta, sin theta)` and `g''(theta)`.
    pub fn angle_density(&self, theta: f64) -> Result<(f64, f64)> {
        if self.dim() != 2 {
            return Err(FlowError::invalid(
                "angle density is defined for planar (2-vector) anisotropies only",
            ));
        }
        let xi = [theta.cos(), theta.sin()];
        let ev = self.eval_unchecked(&xi);
        let t = [-xi[1], xi[0]];
        // g'' = D^2 psi[t, t] - D psi . xi, and D psi . xi = psi by homogeneity.
        let g = ev.value;
        Ok((g, ev.hess_form(&t, &t) - g))
    }
}

/// Deterministic unit vectors: uniform angles on the circle, Fibonacci points on the sphere.
pub fn sphere_samples(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(1);
    if dim == 2 {
        (0..count)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect()
    } else {
        let golden = PI * (3.0 - 5f64.sqrt());
        (0..count)
            .map(|k| {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let rho = (1.0 - z * z).max(0.0).sqrt();
                let th = golden * k as f64;
                vec![rho * th.cos(), rho * th.sin(), z]
            })
            .collect()
    }
}

fn orthonormal_complement(xi: &[f64]) -> ([f64; 3], [f64; 3]) {
    let a = if xi[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = a[0] * xi[0] + a[1] * xi[1] + a[2] * xi[2];
    let mut t1 = [a[0] - dot * xi[0], a[1] - dot * xi[1], a[2] - dot * xi[2]];
    let nrm = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1.iter_mut().for_each(|v| *v /= nrm);
    let t2 = [
        xi[1] * t1[2] - xi[2] * t1[1],
        xi[2] * t1[0] - xi[0] * t1[2],
        xi[0] * t1[1] - xi[1] * t1[0],
    ];
    (t1, t2)
}

/// Horizontal components of `D psi(-Dh, 1)` at every node.
pub(crate) fn tilted_gradient(grid: &Grid, psi: &Anisotropy, slope: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = grid.m();
    let len = slope[0].len();
    let mut values = vec![0.0; len];
    let mut horiz = vec![vec![0.0; len]; m];
    let mut xi = vec![0.0; m + 1];
    for i in 0..len {
        for a in 0..m {
            xi[a] = -slope[a][i];
        }
        xi[m] = 1.0;
        let ev = psi.eval_unchecked(&xi);
        values[i] = ev.value;
        for a in 0..m {
            horiz[a][i] = ev.gradient[a];
        }
    }
    (values, horiz)
}

/// Anisotropic mean curvature `H^psi = div_x [D_x psi(-Dh, 1)]` at the nodes.
pub fn anisotropic_curvature(profile: &Profile, psi: &Anisotropy) -> Result<Vec<f64>> {
    anisotropic_curvature_on(&profile.grid(), profile.values(), psi)
}

pub fn anisotropic_curvature_on(grid: &Grid, h: &[f64], psi: &Anisotropy) -> Result<Vec<f64>> {
    grid.validate(h)?;
    if psi.dim() != grid.m() + 1 {
        return Err(FlowError::invalid(format!(
            "anisotropy acts on R^{} but the surface lives in R^{}",
            psi.dim(),
            grid.m() + 1
        )));
    }
    let slope = grid.gradient(h);
    let (_, horiz) = tilted_gradient(grid, psi, &slope);
    Ok(grid.divergence(&horiz))
}

//! Plane-strain linear elasticity in the film `Omega_h = {0 < y < h(x)}` over one period.
//!
//! The displacement is `u = (e0 x, 0) + u~` with `u~` periodic in `x` and zero on the
//! substrate `y = 0`; the top surface is traction free. The strip is meshed by
//! bilinear quadrilaterals on the graph map `(x, s) -> (x, s h(x))`, one column per
//! profile node, so the top edge interpolates the profile exactly at the nodes.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::banded::{BandCholesky, SymBand};
use crate::error::{FlowError, Result};
use crate::geometry::Profile;

/// Isotropic Lamé coefficients and lattice mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    pub mu: f64,
    pub lambda: f64,
    pub e0: f64,
}

impl LameParams {
    pub fn new(mu: f64, lambda: f64, e0: f64) -> Result<Self> {
        let p = LameParams { mu, lambda, e0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.lambda.is_finite() && self.e0.is_finite()) {
            return Err(FlowError::invalid("Lamé parameters must be finite"));
        }
        if self.mu <= 0.0 || self.mu + self.lambda <= 0.0 {
            return Err(FlowError::domain(format!(
                "ellipticity requires mu > 0 and mu + lambda > 0 (mu = {}, lambda = {})",
                self.mu, self.lambda
            )));
        }
        Ok(())
    }

    /// Stress `sigma = 2 mu E + lambda tr(E) I` in Voigt order `(xx, yy, xy)`.
    pub fn stress(&self, strain: [f64; 3]) -> [f64; 3] {
        let tr = strain[0] + strain[1];
        [
            2.0 * self.mu * strain[0] + self.lambda * tr,
            2.0 * self.mu * strain[1] + self.lambda * tr,
            2.0 * self.mu * strain[2],
        ]
    }

    /// `W(E) = mu |E|^2 + (lambda/2) tr(E)^2` for `E = (xx, yy, xy)`.
    pub fn density(&self, strain: [f64; 3]) -> f64 {
        let tr = strain[0] + strain[1];
        self.mu * (strain[0] * strain[0] + strain[1] * strain[1] + 2.0 * strain[2] * strain[2])
            + 0.5 * self.lambda * tr * tr
    }

    /// Vertical strain of the flat film, fixed by a traction-free top.
    pub fn flat_vertical_strain(&self) -> f64 {
        -self.lambda * self.e0 / (2.0 * self.mu + self.lambda)
    }

    /// Energy density of the flat film.
    pub fn flat_density(&self) -> f64 {
        let c = self.flat_vertical_strain();
        self.density([self.e0, c, 0.0])
    }
}

const GAUSS: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Bilinear shape-function derivatives at `(xi, eta)`, corners ordered
/// bottom-left, bottom-right, top-right, top-left.
fn shape_derivs(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ]
}

/// Geometry of one element at one reference point.
struct PointGeom {
    det: f64,
    /// Physical gradients of the four shape functions.
    grad: [[f64; 2]; 4],
}

fn point_geom(xs: &[f64; 4], ys: &[f64; 4], xi: f64, eta: f64) -> PointGeom {
    let dn = shape_derivs(xi, eta);
    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
    for a in 0..4 {
        j11 += xs[a] * dn[a][0];
        j12 += xs[a] * dn[a][1];
        j21 += ys[a] * dn[a][0];
        j22 += ys[a] * dn[a][1];
    }
    let det = j11 * j22 - j12 * j21;
    // grad_x N = J^{-T} grad_xi N
    let mut grad = [[0.0; 2]; 4];
    for a in 0..4 {
        grad[a][0] = (j22 * dn[a][0] - j21 * dn[a][1]) / det;
        grad[a][1] = (-j12 * dn[a][0] + j11 * dn[a][1]) / det;
    }
    PointGeom { det, grad }
}

/// Displacement gradient `G_kl = du_k/dx_l` from nodal displacements.
fn displacement_gradient(g: &PointGeom, u: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for a in 0..4 {
        for k in 0..2 {
            for l in 0..2 {
                out[k][l] += u[a][k] * g.grad[a][l];
            }
        }
    }
    out
}

fn strain_of(gd: &[[f64; 2]; 2]) -> [f64; 3] {
    [gd[0][0], gd[1][1], 0.5 * (gd[0][1] + gd[1][0])]
}

/// Structured mesh of the film strip and its degree-of-freedom numbering.
#[derive(Clone, Debug)]
struct StripMesh {
    n: usize,
    ny: usize,
    dx: f64,
    heights: Vec<f64>,
    /// Column position in the interleaved ordering 0, n-1, 1, n-2, ...
    pos: Vec<usize>,
}

impl StripMesh {
    fn new(profile: &Profile, ny: usize) -> Self {
        let n = profile.n();
        let pos = (0..n)
            .map(|i| if i < n / 2 { 2 * i } else { 2 * (n - 1 - i) + 1 })
            .collect();
        StripMesh {
            n,
            ny,
            dx: profile.period() / n as f64,
            heights: profile.values().to_vec(),
            pos,
        }
    }

    fn ndof(&self) -> usize {
        2 * self.n * self.ny
    }

    fn dof(&self, i: usize, j: usize, c: usize) -> Option<usize> {
        if j == 0 {
            None
        } else {
            Some((self.pos[i] * self.ny + (j - 1)) * 2 + c)
        }
    }

    /// Corner node indices `(column, row)` of element `(i, j)`.
    fn corners(&self, i: usize, j: usize) -> [(usize, usize); 4] {
        let ip = (i + 1) % self.n;
        [(i, j), (ip, j), (ip, j + 1), (i, j + 1)]
    }

    /// Local corner coordinates (left column at `x = 0`).
    fn coords(&self, i: usize, j: usize) -> ([f64; 4], [f64; 4]) {
        let c = self.corners(i, j);
        let xs = [0.0, self.dx, self.dx, 0.0];
        let mut ys = [0.0; 4];
        for a in 0..4 {
            let (ci, cj) = c[a];
            ys[a] = cj as f64 / self.ny as f64 * self.heights[ci];
        }
        (xs, ys)
    }

    fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            for j in 0..self.ny {
                let dofs: Vec<usize> = self
                    .corners(i, j)
                    .iter()
                    .flat_map(|&(ci, cj)| (0..2).filter_map(move |c| self.dof(ci, cj, c)))
                    .collect();
                let lo = dofs.iter().min().copied().unwrap_or(0);
                let hi = dofs.iter().max().copied().unwrap_or(0);
                bw = bw.max(hi - lo);
            }
        }
        bw
    }

    fn element_dofs(&self, i: usize, j: usize) -> [Option<usize>; 8] {
        let c = self.corners(i, j);
        let mut out = [None; 8];
        for a in 0..4 {
            for k in 0..2 {
                out[2 * a + k] = self.dof(c[a].0, c[a].1, k);
            }
        }
        out
    }
}

/// Assembled stiffness and mismatch load of the strip.
fn assemble(mesh: &StripMesh, params: &LameParams) -> (SymBand, Vec<f64>) {
    let mut k = SymBand::zeros(mesh.ndof(), mesh.bandwidth());
    let mut f = vec![0.0; mesh.ndof()];
    let sigma0 = params.stress([params.e0, 0.0, 0.0]);
    for i in 0..mesh.n {
        for j in 0..mesh.ny {
            let (xs, ys) = mesh.coords(i, j);
            let dofs = mesh.element_dofs(i, j);
            let mut ke = [[0.0; 8]; 8];
            let mut fe = [0.0; 8];
            for &gx in &GAUSS {
                for &gy in &GAUSS {
                    let g = point_geom(&xs, &ys, gx, gy);
                    // strain (Voigt, engineering shear) per unit dof
                    let mut bm = [[0.0; 8]; 3];
                    for a in 0..4 {
                        bm[0][2 * a] = g.grad[a][0];
                        bm[1][2 * a + 1] = g.grad[a][1];
                        bm[2][2 * a] = g.grad[a][1];
                        bm[2][2 * a + 1] = g.grad[a][0];
                    }
                    let (lam, mu) = (params.lambda, params.mu);
                    let d = [[lam + 2.0 * mu, lam, 0.0], [lam, lam + 2.0 * mu, 0.0], [0.0, 0.0, mu]];
                    for p in 0..8 {
                        let db = [
                            d[0][0] * bm[0][p] + d[0][1] * bm[1][p],
                            d[1][0] * bm[0][p] + d[1][1] * bm[1][p],
                            d[2][2] * bm[2][p],
                        ];
                        for q in 0..8 {
                            ke[q][p] += g.det * (bm[0][q] * db[0] + bm[1][q] * db[1] + bm[2][q] * db[2]);
                        }
                        // sigma0 . B (sigma0 shear is zero)
                        fe[p] += g.det * (sigma0[0] * bm[0][p] + sigma0[1] * bm[1][p]);
                    }
                }
            }
            for p in 0..8 {
                let Some(gp) = dofs[p] else { continue };
                f[gp] -= fe[p];
                for q in 0..8 {
                    let Some(gq) = dofs[q] else { continue };
                    if gq <= gp {
                        k.add(gp, gq, ke[p][q]);
                    }
                }
            }
        }
    }
    (k, f)
}

/// Result of an energy/sensitivity sweep over the mesh for given periodic dofs.
struct Sweep {
    energy: f64,
    /// `dE/dh_i` (not divided by the cell length).
    dh: Vec<f64>,
}

fn nodal_displacements(mesh: &StripMesh, dofs: &[f64], i: usize, j: usize, e0: f64) -> [[f64; 2]; 4] {
    let c = mesh.corners(i, j);
    let xs = [0.0, mesh.dx, mesh.dx, 0.0];
    let mut u = [[0.0; 2]; 4];
    for a in 0..4 {
        u[a][0] = e0 * xs[a];
        for k in 0..2 {
            if let Some(d) = mesh.dof(c[a].0, c[a].1, k) {
                u[a][k] += dofs[d];
            }
        }
    }
    u
}

fn sweep(mesh: &StripMesh, params: &LameParams, dofs: &[f64]) -> Sweep {
    let mut energy = 0.0;
    let mut dh = vec![0.0; mesh.n];
    for i in 0..mesh.n {
        for j in 0..mesh.ny {
            let (xs, ys) = mesh.coords(i, j);
            let u = nodal_displacements(mesh, dofs, i, j, params.e0);
            let c = mesh.corners(i, j);
            for &gx in &GAUSS {
                for &gy in &GAUSS {
                    let g = point_geom(&xs, &ys, gx, gy);
                    let gd = displacement_gradient(&g, &u);
                    let eps = strain_of(&gd);
                    let w = params.density(eps);
                    let s = params.stress(eps);
                    let sig = [[s[0], s[2]], [s[2], s[1]]];
                    energy += g.det * w;
                    // d/dY_a: -(G e_y) . (sigma grad N_a) + W (grad N_a)_y, times det
                    let gey = [gd[0][1], gd[1][1]];
                    for a in 0..4 {
                        let sg = [
                            sig[0][0] * g.grad[a][0] + sig[0][1] * g.grad[a][1],
                            sig[1][0] * g.grad[a][0] + sig[1][1] * g.grad[a][1],
                        ];
                        let dy = g.det * (-(gey[0] * sg[0] + gey[1] * sg[1]) + w * g.grad[a][1]);
                        let (ci, cj) = c[a];
                        dh[ci] += dy * cj as f64 / mesh.ny as f64;
                    }
                }
            }
        }
    }
    Sweep { energy, dh }
}

/// Strain at reference point `(xi, eta)` of element `(i, j)`.
fn element_strain(mesh: &StripMesh, params: &LameParams, dofs: &[f64], i: usize, j: usize, xi: f64, eta: f64) -> [f64; 3] {
    let (xs, ys) = mesh.coords(i, j);
    let u = nodal_displacements(mesh, dofs, i, j, params.e0);
    let g = point_geom(&xs, &ys, xi, eta);
    strain_of(&displacement_gradient(&g, &u))
}

/// Solved plane-strain equilibrium on one profile.
#[derive(Clone, Debug)]
pub struct ElasticField {
    profile: Profile,
    params: LameParams,
    mesh: StripMesh,
    dofs: Vec<f64>,
    factor: Arc<BandCholesky>,
    elastic_energy: f64,
    trace_w: Vec<f64>,
    shape_gradient: Vec<f64>,
    residual: f64,
}

/// Equilibrium displacement for a flat-configuration perturbation, solution of the
/// surface-source problem driven by `div_Gamma(phi C E(u_h))`.
#[derive(Clone, Debug)]
pub struct PerturbationField {
    pub dofs: Vec<f64>,
    /// `int W(E(v_phi)) dz`.
    pub elastic_energy: f64,
}

/// Solve the elastic equilibrium in `Omega_h` on an `n x ny` mesh.
pub fn solve_equilibrium(profile: &Profile, params: &LameParams, ny: usize) -> Result<ElasticField> {
    params.validate()?;
    if profile.m() != 1 {
        return Err(FlowError::invalid(
            "plane-strain elasticity is available for one-dimensional profiles only",
        ));
    }
    if ny < 4 {
        return Err(FlowError::invalid(format!("vertical resolution must be >= 4, got {ny}")));
    }
    let mesh = StripMesh::new(profile, ny);
    let (k, f) = assemble(&mesh, params);
    let kk = k.clone();
    let factor = k.cholesky()?;
    let dofs = factor.solve(&f);
    let kd = kk.mul(&dofs);
    let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rnorm = kd.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let residual = if fnorm > 0.0 { rnorm / fnorm } else { rnorm };
    if residual > 1e-10 {
        return Err(FlowError::numeric("elastic solve residual too large", residual));
    }
    let sw = sweep(&mesh, params, &dofs);
    let mut field = ElasticField {
        profile: profile.clone(),
        params: *params,
        trace_w: Vec::new(),
        shape_gradient: sw.dh.iter().map(|v| v / mesh.dx).collect(),
        elastic_energy: sw.energy,
        dofs,
        factor: Arc::new(factor),
        mesh,
        residual,
    };
    field.trace_w = field.compute_trace();
    Ok(field)
}

impl ElasticField {
    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn params(&self) -> &LameParams {
        &self.params
    }

    pub fn ny(&self) -> usize {
        self.mesh.ny
    }

    /// `int_{Omega_h} W(E(u)) dz`.
    pub fn elastic_energy(&self) -> f64 {
        self.elastic_energy
    }

    /// Relative residual of the discrete equilibrium equations.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Periodic part of the displacement, interleaved-column numbering.
    pub fn periodic_dofs(&self) -> &[f64] {
        &self.dofs
    }

    /// `W(E(u))` on the top surface at each profile node.
    pub fn boundary_energy_trace(&self) -> &[f64] {
        &self.trace_w
    }

    /// `dE/dh_i / (b/n)`: the exact grid-level shape gradient of the discrete elastic energy.
    pub fn shape_gradient(&self) -> &[f64] {
        &self.shape_gradient
    }

    /// Total displacement `(u1, u2)` at node `(i, j)`.
    pub fn displacement(&self, i: usize, j: usize) -> [f64; 2] {
        let mut u = [self.params.e0 * i as f64 * self.mesh.dx, 0.0];
        for (k, uk) in u.iter_mut().enumerate() {
            if let Some(d) = self.mesh.dof(i, j, k) {
                *uk += self.dofs[d];
            }
        }
        u
    }

    fn compute_trace(&self) -> Vec<f64> {
        let mesh = &self.mesh;
        let n = mesh.n;
        let top = mesh.ny - 1;
        (0..n)
            .map(|i| {
                let left = (i + n - 1) % n;
                // node i is the top-right corner of `left` and the top-left corner of `i`
                let a = element_strain(mesh, &self.params, &self.dofs, left, top, 1.0, 1.0);
                let b = element_strain(mesh, &self.params, &self.dofs, i, top, -1.0, 1.0);
                0.5 * (self.params.density(a) + self.params.density(b))
            })
            .collect()
    }

    /// Energy and shape gradient of a new profile with this field's periodic dofs held fixed.
    ///
    /// Upper bound on the equilibrium energy of `h`; equal to it at the solved profile.
    pub fn frozen_energy(&self, h: &[f64]) -> Result<(f64, Vec<f64>)> {
        if h.len() != self.mesh.n {
            return Err(FlowError::invalid("profile does not match the elastic mesh"));
        }
        let mut mesh = self.mesh.clone();
        mesh.heights = h.to_vec();
        let sw = sweep(&mesh, &self.params, &self.dofs);
        Ok((sw.energy, sw.dh.iter().map(|v| v / mesh.dx).collect()))
    }

    /// Solve for `v_phi` vanishing on the substrate with load
    /// `w -> -int_Gamma phi (C E(u) tau) . d_tau w ds`.
    pub fn v_phi_solve(&self, profile: &Profile, phi: &[f64]) -> Result<PerturbationField> {
        if profile != &self.profile {
            return Err(FlowError::invalid("v_phi requires the profile the field was solved on"));
        }
        let mesh = &self.mesh;
        if phi.len() != mesh.n {
            return Err(FlowError::invalid(format!(
                "phi has {} entries, mesh has {} surface nodes",
                phi.len(),
                mesh.n
            )));
        }
        let load = self.surface_load(phi);
        let dofs = self.factor.solve(&load);
        let work: f64 = dofs.iter().zip(&load).map(|(a, b)| a * b).sum();
        Ok(PerturbationField {
            dofs,
            elastic_energy: 0.5 * work,
        })
    }

    fn surface_load(&self, phi: &[f64]) -> Vec<f64> {
        let mesh = &self.mesh;
        let n = mesh.n;
        let top = mesh.ny - 1;
        let mut load = vec![0.0; mesh.ndof()];
        for i in 0..n {
            let ip = (i + 1) % n;
            let (h0, h1) = (mesh.heights[i], mesh.heights[ip]);
            let len = (mesh.dx * mesh.dx + (h1 - h0) * (h1 - h0)).sqrt();
            let tau = [mesh.dx / len, (h1 - h0) / len];
            for &g in &GAUSS {
                let t = 0.5 * (1.0 + g);
                let phi_t = (1.0 - t) * phi[i] + t * phi[ip];
                let eps = element_strain(mesh, &self.params, &self.dofs, i, top, g, 1.0);
                let s = self.params.stress(eps);
                let st = [s[0] * tau[0] + s[2] * tau[1], s[2] * tau[0] + s[1] * tau[1]];
                // weight 1/2 per point, ds = len dt, d_tau w = (w1 - w0)/len
                for k in 0..2 {
                    let c = 0.5 * phi_t * st[k];
                    if let Some(d) = mesh.dof(i, mesh.ny, k) {
                        load[d] += c;
                    }
                    if let Some(d) = mesh.dof(ip, mesh.ny, k) {
                        load[d] -= c;
                    }
                }
            }
        }
        load
    }

    /// CSV rows `x,y,u1,u2` for every mesh node.
    pub fn displacement_csv(&self) -> String {
        let mut out = String::from("x,y,u1,u2\n");
        for j in 0..=self.mesh.ny {
            for i in 0..self.mesh.n {
                let x = i as f64 * self.mesh.dx;
                let y = j as f64 / self.mesh.ny as f64 * self.mesh.heights[i];
                let u = self.displacement(i, j);
                writeln!(out, "{x:e},{y:e},{:e},{:e}", u[0], u[1]).unwrap();
            }
        }
        out
    }

    /// Discrete energy of arbitrary periodic dofs on this mesh (for minimality probes).
    pub fn energy_of_dofs(&self, dofs: &[f64]) -> Result<f64> {
        if dofs.len() != self.dofs.len() {
            return Err(FlowError::invalid("dof vector has the wrong length"));
        }
        Ok(sweep(&self.mesh, &self.params, dofs).energy)
    }
}

/// Free functional form of [`ElasticField::boundary_energy_trace`].
pub fn boundary_energy_trace(field: &ElasticField) -> Vec<f64> {
    field.boundary_energy_trace().to_vec()
}

/// Free functional form of [`ElasticField::v_phi_solve`].
pub fn v_phi_solve(profile: &Profile, field: &ElasticField, phi: &[f64]) -> Result<PerturbationField> {
    field.v_phi_solve(profile, phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lame_validation() {
        assert!(LameParams::new(0.0, 1.0, 0.1).is_err());
        assert!(LameParams::new(1.0, -1.0, 0.1).is_err());
        assert!(LameParams::new(1.0, -0.5, 0.1).is_ok());
    }

    #[test]
    fn rejects_two_dimensional_profiles() {
        let p = Profile::flat(2, 1.0, 8, 1.0).unwrap();
        let lp = LameParams::new(1.0, 1.0, 0.1).unwrap();
        assert!(solve_equilibrium(&p, &lp, 8).is_err());
        let p1 = Profile::flat(1, 1.0, 8, 1.0).unwrap();
        assert!(solve_equilibrium(&p1, &lp, 3).is_err());
    }

    #[test]
    fn zero_mismatch_gives_zero_field() {
        let p = Profile::from_fn(1, 1.0, 16, |x, _| 1.0 + 0.2 * (std::f64::consts::TAU * x).sin()).unwrap();
        let lp = LameParams::new(1.0, 0.5, 0.0).unwrap();
        let f = solve_equilibrium(&p, &lp, 6).unwrap();
        assert_eq!(f.elastic_energy(), 0.0);
        assert!(f.boundary_energy_trace().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn flat_film_is_homogeneous() {
        let lp = LameParams::new(1.0, 0.7, 0.2).unwrap();
        let p = Profile::flat(1, 2.0, 16, 0.8).unwrap();
        let f = solve_equilibrium(&p, &lp, 6).unwrap();
        let exact = lp.flat_density() * 2.0 * 0.8;
        assert!((f.elastic_energy() - exact).abs() < 1e-12 * exact);
        for w in f.boundary_energy_trace() {
            assert!((w - lp.flat_density()).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_gradient_matches_difference_quotient() {
        let lp = LameParams::new(1.0, 1.0, 0.3).unwrap();
        let p = Profile::from_fn(1, 1.0, 16, |x, _| 0.5 + 0.1 * (std::f64::consts::TAU * x).cos()).unwrap();
        let f = solve_equilibrium(&p, &lp, 6).unwrap();
        let dx = 1.0 / 16.0;
        for &i in &[0usize, 3, 7] {
            let step = 1e-6;
            let mut hp = p.values().to_vec();
            hp[i] += step;
            let mut hm = p.values().to_vec();
            hm[i] -= step;
            let ep = solve_equilibrium(&p.with_values(hp).unwrap(), &lp, 6).unwrap().elastic_energy();
            let em = solve_equilibrium(&p.with_values(hm).unwrap(), &lp, 6).unwrap().elastic_energy();
            let fd = (ep - em) / (2.0 * step) / dx;
            assert!((fd - f.shape_gradient()[i]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", f.shape_gradient()[i]);
        }
    }

    #[test]
    fn v_phi_mesh_mismatch() {
        let p = Profile::flat(1, 1.0, 16, 1.0).unwrap();
        let q = Profile::flat(1, 1.0, 16, 1.5).unwrap();
        let lp = LameParams::new(1.0, 0.5, 0.1).unwrap();
        let f = solve_equilibrium(&p, &lp, 6).unwrap();
        assert!(f.v_phi_solve(&q, &[0.0; 16]).is_err());
        assert!(f.v_phi_solve(&p, &[0.0; 8]).is_err());
    }
}

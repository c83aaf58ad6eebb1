//! The regularized free energy
//! `F(h, u) = int_{Omega_h} W(E(u)) + int_Gamma (psi(nu) + eps/p |H|^p)`,
//! its grid-level L² gradient, and the weak residuals of criticality and of the
//! incremental problem.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{tilted_gradient, Anisotropy};
use crate::elasticity::{solve_equilibrium, ElasticField, LameParams};
use crate::error::{FlowError, Result};
use crate::geometry::{max_slope, metrics_on, Profile};
use crate::spectral::Grid;
use crate::surface_pde::PenaltyOperator;

/// Parameters of the regularized flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub epsilon: f64,
    pub p: f64,
    /// Slope bound `Lambda0`; must exceed the initial max slope.
    pub lambda0: f64,
    pub tau: f64,
}

impl FlowParams {
    pub fn new(epsilon: f64, p: f64, lambda0: f64, tau: f64) -> Result<Self> {
        let fp = FlowParams { epsilon, p, lambda0, tau };
        fp.validate()?;
        Ok(fp)
    }

    /// Parameters with the default slope bound `2 (1 + |Dh0|_inf)`.
    pub fn for_initial(epsilon: f64, p: f64, tau: f64, h0: &Profile) -> Result<Self> {
        Self::new(epsilon, p, default_lambda0(h0), tau)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(FlowError::invalid(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.p.is_finite() && self.p >= 2.0) {
            return Err(FlowError::invalid(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(FlowError::invalid(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.lambda0.is_finite() && self.lambda0 > 0.0) {
            return Err(FlowError::invalid(format!("Lambda0 must be > 0, got {}", self.lambda0)));
        }
        Ok(())
    }

    /// `Lambda0 > |Dh0|_inf` is required of the initial datum.
    pub fn check_initial(&self, h0: &Profile) -> Result<()> {
        let s = max_slope(&h0.grid(), h0.values());
        if self.lambda0 <= s {
            return Err(FlowError::invalid(format!(
                "Lambda0 = {} must exceed the initial max slope |Dh0|_inf = {s}",
                self.lambda0
            )));
        }
        Ok(())
    }
}

pub fn default_lambda0(h0: &Profile) -> f64 {
    2.0 * (1.0 + max_slope(&h0.grid(), h0.values()))
}

/// Energy split into its three groups.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// Bulk term: elastic energy, or a plug-in potential.
    pub elastic: f64,
    pub surface: f64,
    pub curvature: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn new(elastic: f64, surface: f64, curvature: f64) -> Self {
        EnergyBreakdown {
            elastic,
            surface,
            curvature,
            total: elastic + surface + curvature,
        }
    }
}

/// A bulk energy depending on the profile only, used where no elastic solve is run.
pub trait SurfacePotential: Send + Sync {
    fn id(&self) -> String;
    fn energy(&self, grid: &Grid, h: &[f64]) -> f64;
    /// L² gradient with respect to grid values.
    fn gradient(&self, grid: &Grid, h: &[f64]) -> Vec<f64>;
}

/// `(g/2) int h^2`: the gravitational energy of the film.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gravity {
    pub g: f64,
}

impl SurfacePotential for Gravity {
    fn id(&self) -> String {
        format!("gravity:{}", self.g)
    }

    fn energy(&self, grid: &Grid, h: &[f64]) -> f64 {
        0.5 * self.g * grid.cell() * h.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, _grid: &Grid, h: &[f64]) -> Vec<f64> {
        h.iter().map(|v| self.g * v).collect()
    }
}

/// Resolve a plug-in id (`none`, `gravity:<g>`).
pub fn potential_from_id(id: &str) -> Result<Option<Arc<dyn SurfacePotential>>> {
    let id = id.trim();
    if id == "none" {
        return Ok(None);
    }
    if let Some(g) = id.strip_prefix("gravity:") {
        let g: f64 = g
            .parse()
            .map_err(|_| FlowError::invalid(format!("bad gravity constant in {id:?}")))?;
        if !(g.is_finite() && g >= 0.0) {
            return Err(FlowError::invalid(format!("gravity constant must be >= 0, got {g}")));
        }
        return Ok(Some(Arc::new(Gravity { g })));
    }
    Err(FlowError::invalid(format!(
        "unknown surface potential {id:?} (known: none, gravity:<g>)"
    )))
}

/// How the bulk term of the energy is produced.
#[derive(Clone, Default)]
pub enum BulkModel {
    #[default]
    None,
    PlaneStrain { lame: LameParams, ny: usize },
    Potential(Arc<dyn SurfacePotential>),
}

impl fmt::Debug for BulkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BulkModel::None => write!(f, "None"),
            BulkModel::PlaneStrain { lame, ny } => write!(f, "PlaneStrain({lame:?}, ny = {ny})"),
            BulkModel::Potential(p) => write!(f, "Potential({})", p.id()),
        }
    }
}

/// Bulk input for a single evaluation.
#[derive(Clone, Copy)]
pub enum Bulk<'a> {
    None,
    Elastic(&'a ElasticField),
    Potential(&'a dyn SurfacePotential),
}

/// Surface and curvature parts with their gradients.
pub(crate) struct SurfaceTerms {
    pub surface: f64,
    pub curvature: f64,
    pub grad_surface: Vec<f64>,
    pub grad_curvature: Vec<f64>,
    pub mean_abs_h_pow: f64,
}

pub(crate) fn surface_terms(grid: &Grid, h: &[f64], psi: &Anisotropy, eps: f64, p: f64) -> Result<SurfaceTerms> {
    let m = grid.m();
    if psi.dim() != m + 1 {
        return Err(FlowError::invalid(format!(
            "anisotropy acts on R^{} but the surface lives in R^{}",
            psi.dim(),
            m + 1
        )));
    }
    let met = metrics_on(grid, h)?;
    let cell = grid.cell();
    let len = h.len();

    let (psi_vals, horiz) = tilted_gradient(grid, psi, &met.gradient);
    let surface = cell * psi_vals.iter().sum::<f64>();
    let grad_surface = grid.divergence(&horiz);

    let hm = &met.mean_curvature;
    let jac = &met.area_element;
    let abs_p: Vec<f64> = hm.iter().map(|v| v.abs().powf(p)).collect();
    let w: Vec<f64> = hm.iter().map(|v| v.abs().powf(p - 2.0) * v).collect();
    let curvature = eps / p * cell * abs_p.iter().zip(jac).map(|(a, j)| a * j).sum::<f64>();

    // q_b = eps [ sum_a D_a(w J) P_ab / J + |H|^p n_b / p ],  grad = -sum_b D_b q_b
    let wj: Vec<f64> = w.iter().zip(jac).map(|(a, j)| a * j).collect();
    let dwj = grid.gradient(&wj);
    let g = &met.gradient;
    let mut q = vec![vec![0.0; len]; m];
    for i in 0..len {
        let j = jac[i];
        let j2 = j * j;
        for b in 0..m {
            let mut s = 0.0;
            for a in 0..m {
                let pab = if a == b { 1.0 } else { 0.0 } - g[a][i] * g[b][i] / j2;
                s += dwj[a][i] * pab;
            }
            q[b][i] = eps * (s / j + abs_p[i] * g[b][i] / (j * p));
        }
    }
    let grad_curvature: Vec<f64> = grid.divergence(&q).into_iter().map(|v| -v).collect();
    let mean_abs_h_pow = grid.mean(&hm.iter().map(|v| v.abs().powf(p - 2.0)).collect::<Vec<_>>());

    Ok(SurfaceTerms {
        surface,
        curvature,
        grad_surface,
        grad_curvature,
        mean_abs_h_pow,
    })
}

fn check_field(profile: &Profile, field: &ElasticField) -> Result<()> {
    if field.profile() != profile {
        return Err(FlowError::State(
            "elastic field was solved on a different profile".into(),
        ));
    }
    Ok(())
}

fn bulk_energy(profile: &Profile, bulk: Bulk<'_>) -> Result<f64> {
    match bulk {
        Bulk::None => Ok(0.0),
        Bulk::Elastic(field) => {
            check_field(profile, field)?;
            Ok(field.elastic_energy())
        }
        Bulk::Potential(pot) => Ok(pot.energy(&profile.grid(), profile.values())),
    }
}

fn bulk_gradient(profile: &Profile, bulk: Bulk<'_>) -> Result<Vec<f64>> {
    match bulk {
        Bulk::None => Ok(vec![0.0; profile.len()]),
        Bulk::Elastic(field) => {
            check_field(profile, field)?;
            Ok(field.shape_gradient().to_vec())
        }
        Bulk::Potential(pot) => Ok(pot.gradient(&profile.grid(), profile.values())),
    }
}

pub fn free_energy(profile: &Profile, params: &FlowParams, psi: &Anisotropy, bulk: Bulk<'_>) -> Result<EnergyBreakdown> {
    let st = surface_terms(&profile.grid(), profile.values(), psi, params.epsilon, params.p)?;
    Ok(EnergyBreakdown::new(bulk_energy(profile, bulk)?, st.surface, st.curvature))
}

/// Gradient split by term group.
#[derive(Clone, Debug)]
pub struct GradientParts {
    pub elastic: Vec<f64>,
    pub surface: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl GradientParts {
    pub fn total(&self) -> Vec<f64> {
        (0..self.surface.len())
            .map(|i| self.elastic[i] + self.surface[i] + self.curvature[i])
            .collect()
    }
}

pub fn energy_gradient_parts(profile: &Profile, params: &FlowParams, psi: &Anisotropy, bulk: Bulk<'_>) -> Result<GradientParts> {
    let st = surface_terms(&profile.grid(), profile.values(), psi, params.epsilon, params.p)?;
    Ok(GradientParts {
        elastic: bulk_gradient(profile, bulk)?,
        surface: st.grad_surface,
        curvature: st.grad_curvature,
    })
}

/// L²(Q) gradient of `h -> F(h, u_h)`: `dF/dh_i` divided by the cell volume.
///
/// No mean is removed; only mean-zero variations are admissible, so the constant
/// component carries no information.
pub fn energy_gradient(profile: &Profile, params: &FlowParams, psi: &Anisotropy, bulk: Bulk<'_>) -> Result<Vec<f64>> {
    Ok(energy_gradient_parts(profile, params, psi, bulk)?.total())
}

/// Highest wavenumber per axis in the residual test bank.
pub const TEST_BANK_MODES: usize = 16;

/// `sup_phi |<g, phi>| / |phi|_{H^1}` over the modes `cos(q.x + theta)`, all phases,
/// up to [`TEST_BANK_MODES`] per axis (and below Nyquist). Taking every phase keeps
/// the residual invariant under translations.
pub fn bank_residual(grid: &Grid, g: &[f64]) -> f64 {
    let n = grid.n();
    let kmax = TEST_BANK_MODES.min(n / 2 - 1) as i64;
    let spec = grid.fft(g);
    let cell = grid.cell();
    let area = grid.period().powi(grid.m() as i32);
    let two_pi_b = 2.0 * std::f64::consts::PI / grid.period();
    let wrap = |k: i64| if k < 0 { (k + n as i64) as usize } else { k as usize };
    let mut best: f64 = 0.0;
    let k2range: Vec<i64> = if grid.m() == 1 { vec![0] } else { (-kmax..=kmax).collect() };
    for k1 in 0..=kmax {
        for &k2 in &k2range {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let idx = wrap(k2) * n + k1 as usize;
            let idx = if grid.m() == 1 { k1 as usize } else { idx };
            let q2 = two_pi_b * two_pi_b * ((k1 * k1 + k2 * k2) as f64);
            let norm = (0.5 * area * (1.0 + q2)).sqrt();
            let c = spec[idx];
            best = best.max(c.norm() * cell / norm);
        }
    }
    best
}

/// Residual of the weak criticality equation over the test bank.
pub fn criticality_residual(profile: &Profile, params: &FlowParams, psi: &Anisotropy, bulk: Bulk<'_>) -> Result<f64> {
    let g = energy_gradient(profile, params, psi, bulk)?;
    Ok(bank_residual(&profile.grid(), &g))
}

/// Residual of the Euler–Lagrange equation of the incremental problem:
/// energy gradient minus `v_h / tau`, tested against the bank.
pub fn weak_residual(h_prev: &Profile, h: &Profile, params: &FlowParams, psi: &Anisotropy, bulk: Bulk<'_>) -> Result<f64> {
    if !h.same_layout(h_prev) {
        return Err(FlowError::invalid("profiles live on different grids"));
    }
    let grid = h.grid();
    let pen = PenaltyOperator::new(&grid, h_prev.values())?.eval(h.values(), None)?;
    let mut g = energy_gradient(h, params, psi, bulk)?;
    for (gi, vi) in g.iter_mut().zip(&pen.potential) {
        *gi -= vi / params.tau;
    }
    Ok(bank_residual(&grid, &g))
}

/// Discrete `int_Q |D^2(|H|^{p-2} H)|^2 dx`, monitored along evolutions.
pub fn curvature_hessian_diagnostic(profile: &Profile, p: f64) -> Result<f64> {
    let grid = profile.grid();
    let met = metrics_on(&grid, profile.values())?;
    let w: Vec<f64> = met.mean_curvature.iter().map(|v| v.abs().powf(p - 2.0) * v).collect();
    let m = grid.m();
    let mut total = 0.0;
    for a in 0..m {
        for b in 0..m {
            let d = grid.deriv2(&w, a, b);
            total += grid.integrate(&d.iter().map(|v| v * v).collect::<Vec<_>>());
        }
    }
    Ok(total)
}

/// Energy functional with its bulk model, as used by the stepper.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    pub params: FlowParams,
    pub psi: Anisotropy,
    pub bulk: BulkModel,
}

/// Energy, gradient and (if any) the elastic field at one profile.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: EnergyBreakdown,
    pub gradient: Vec<f64>,
    pub field: Option<ElasticField>,
    pub(crate) mean_abs_h_pow: f64,
}

impl EnergyModel {
    pub fn new(params: FlowParams, psi: Anisotropy, bulk: BulkModel) -> Result<Self> {
        params.validate()?;
        if let BulkModel::PlaneStrain { lame, .. } = &bulk {
            lame.validate()?;
        }
        Ok(EnergyModel { params, psi, bulk })
    }

    pub fn check_profile(&self, profile: &Profile) -> Result<()> {
        if self.psi.dim() != profile.m() + 1 {
            return Err(FlowError::invalid(format!(
                "anisotropy acts on R^{} but the profile is {}-dimensional",
                self.psi.dim(),
                profile.m()
            )));
        }
        if matches!(self.bulk, BulkModel::PlaneStrain { .. }) && profile.m() != 1 {
            return Err(FlowError::invalid("elasticity is only available for m = 1"));
        }
        Ok(())
    }

    pub fn solve_field(&self, profile: &Profile) -> Result<Option<ElasticField>> {
        match &self.bulk {
            BulkModel::PlaneStrain { lame, ny } => Ok(Some(solve_equilibrium(profile, lame, *ny)?)),
            _ => Ok(None),
        }
    }

    /// Full evaluation with the elastic field re-solved on `profile`.
    pub fn evaluate(&self, profile: &Profile) -> Result<Evaluation> {
        let field = self.solve_field(profile)?;
        self.evaluate_with(profile, field)
    }

    fn evaluate_with(&self, profile: &Profile, field: Option<ElasticField>) -> Result<Evaluation> {
        let st = surface_terms(&profile.grid(), profile.values(), &self.psi, self.params.epsilon, self.params.p)?;
        let (bulk_e, mut gradient) = match (&self.bulk, &field) {
            (BulkModel::PlaneStrain { .. }, Some(f)) => (f.elastic_energy(), f.shape_gradient().to_vec()),
            (BulkModel::Potential(pot), _) => {
                let grid = profile.grid();
                (pot.energy(&grid, profile.values()), pot.gradient(&grid, profile.values()))
            }
            _ => (0.0, vec![0.0; profile.len()]),
        };
        for i in 0..gradient.len() {
            gradient[i] += st.grad_surface[i] + st.grad_curvature[i];
        }
        Ok(Evaluation {
            energy: EnergyBreakdown::new(bulk_e, st.surface, st.curvature),
            gradient,
            field,
            mean_abs_h_pow: st.mean_abs_h_pow,
        })
    }

    /// Evaluation with the periodic displacement of `frozen` held fixed (an upper
    /// bound of the equilibrium energy, exact at the profile `frozen` was solved on).
    pub fn evaluate_frozen(&self, profile: &Profile, frozen: &ElasticField) -> Result<Evaluation> {
        let st = surface_terms(&profile.grid(), profile.values(), &self.psi, self.params.epsilon, self.params.p)?;
        let (e, mut gradient) = frozen.frozen_energy(profile.values())?;
        for i in 0..gradient.len() {
            gradient[i] += st.grad_surface[i] + st.grad_curvature[i];
        }
        Ok(Evaluation {
            energy: EnergyBreakdown::new(e, st.surface, st.curvature),
            gradient,
            field: None,
            mean_abs_h_pow: st.mean_abs_h_pow,
        })
    }

    pub fn bulk_of<'a>(&'a self, field: Option<&'a ElasticField>) -> Bulk<'a> {
        match (&self.bulk, field) {
            (BulkModel::PlaneStrain { .. }, Some(f)) => Bulk::Elastic(f),
            (BulkModel::Potential(p), _) => Bulk::Potential(p.as_ref()),
            _ => Bulk::None,
        }
    }
}

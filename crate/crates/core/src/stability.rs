//! Stability of the flat configuration `h = d` of a planar film: the Grinfeld
//! function, the analytic threshold `d_loc(b)`, the finite-element second
//! variation at the flat state, and scripted evolution experiments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::anisotropy::Anisotropy;
use crate::elasticity::{solve_equilibrium, ElasticField, LameParams};
use crate::energy::{BulkModel, EnergyModel, FlowParams};
use crate::error::{FlowError, Result};
use crate::geometry::Profile;
use crate::stepper::{evolve, StepperOptions};

/// `nu_p = lambda / (2 (lambda + mu))`.
pub fn poisson_modulus(params: &LameParams) -> f64 {
    params.lambda / (2.0 * (params.lambda + params.mu))
}

fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..0.5).contains(&nu) {
        return Err(FlowError::domain(format!("Poisson modulus must lie in [0, 1/2), got {nu}")));
    }
    Ok(())
}

/// `J(y) = (y + a sinh y cosh y) / (4 (1 - nu)^2 + y^2 + a sinh^2 y)`, `a = 3 - 4 nu`.
pub fn grinfeld_j(y: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(y >= 0.0) || !y.is_finite() {
        return Err(FlowError::domain(format!("J needs a finite y >= 0, got {y}")));
    }
    let a = 3.0 - 4.0 * nu;
    let c = 4.0 * (1.0 - nu) * (1.0 - nu);
    if y <= 1.0 {
        let (s, ch) = (y.sinh(), y.cosh());
        return Ok((y + a * s * ch) / (c + y * y + a * s * s));
    }
    // multiply through by 4 e^{-2y}; evaluate 1 - J so the tail stays monotone in floating point
    let e2 = (-2.0 * y).exp();
    let e4 = e2 * e2;
    let den = (4.0 * c + 4.0 * y * y) * e2 + a * (1.0 - 2.0 * e2 + e4);
    let gap = e2 * (4.0 * c + 4.0 * y * y - 4.0 * y - 2.0 * a) + 2.0 * a * e4;
    Ok(1.0 - gap / den)
}

/// `K(y) = max_n J(n y) / n`, exact: since `J <= 1`, terms with `1/n <= best` cannot win.
pub fn grinfeld_k(y: f64, nu: f64) -> Result<f64> {
    let mut best = grinfeld_j(y, nu)?;
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut n = 2usize;
    while 1.0 / (n as f64) > best {
        best = best.max(grinfeld_j(n as f64 * y, nu)? / n as f64);
        n += 1;
    }
    Ok(best)
}

/// Right-hand side of the threshold equation, without the `1/b` factor.
pub fn threshold_constant(params: &LameParams, psi11: f64) -> f64 {
    let (mu, lambda, e0) = (params.mu, params.lambda, params.e0);
    PI / 4.0 * (2.0 * mu + lambda) * psi11 / (e0 * e0 * mu * (mu + lambda))
}

fn check_threshold_inputs(b: f64, params: &LameParams, psi11: f64) -> Result<()> {
    params.validate()?;
    if !(psi11 > 0.0) || !psi11.is_finite() {
        return Err(FlowError::domain(format!(
            "the flat-state threshold requires d^2 psi/d xi_1^2 (0,1) > 0, got {psi11}"
        )));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(FlowError::invalid(format!("period must be > 0, got {b}")));
    }
    Ok(())
}

/// Threshold thickness below which the flat film is a strict local minimizer;
/// `+inf` when `b <= (pi/4)(2mu+lambda) psi11 / (e0^2 mu (mu+lambda))`.
pub fn d_loc(b: f64, params: &LameParams, psi11: f64) -> Result<f64> {
    check_threshold_inputs(b, params, psi11)?;
    let nu = poisson_modulus(params);
    let c = threshold_constant(params, psi11);
    if b <= c {
        return Ok(f64::INFINITY);
    }
    let rhs = c / b;
    let mut hi = 1.0;
    while grinfeld_k(hi, nu)? < rhs {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(FlowError::numeric("threshold bracket did not close", rhs));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if grinfeld_k(mid, nu)? < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = 0.5 * (lo + hi);
    Ok(y * b / (2.0 * PI))
}

/// Second variation of the bulk + surface energy at a flat film along one cosine mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSecondVariation {
    pub k: usize,
    pub d: f64,
    /// Quadratic form at `phi = cos(2 pi k x / b)`.
    pub value: f64,
    /// Same form for the unit-L² mode `sqrt(2/b) cos(2 pi k x / b)`.
    pub unit_l2: f64,
    /// Rayleigh quotient with the H¹ norm of the mode.
    pub h1_rayleigh: f64,
    /// The local (surface) part alone, at `phi = cos(.)`.
    pub local: f64,
    /// `-2 int W(E(v_phi))` at `phi = cos(.)`.
    pub nonlocal: f64,
}

/// Mesh for flat-state second variations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatMesh {
    pub n: usize,
    pub ny: usize,
}

impl Default for FlatMesh {
    fn default() -> Self {
        FlatMesh { n: 256, ny: 64 }
    }
}

/// Flat film with its equilibrium, reused across modes.
pub struct FlatFilm {
    profile: Profile,
    field: ElasticField,
    psi11: f64,
}

impl FlatFilm {
    pub fn new(d: f64, b: f64, params: &LameParams, psi: &Anisotropy, mesh: FlatMesh) -> Result<Self> {
        if psi.dim() != 2 {
            return Err(FlowError::invalid("flat-state second variation is implemented for planar films"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(FlowError::invalid(format!("thickness must be > 0, got {d}")));
        }
        let profile = Profile::flat(1, b, mesh.n, d)?;
        Self::from_profile(&profile, params, psi, mesh.ny)
    }

    /// Rejects non-flat profiles: the general-profile form is out of scope.
    pub fn from_profile(profile: &Profile, params: &LameParams, psi: &Anisotropy, ny: usize) -> Result<Self> {
        let v = profile.values();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        if hi - lo > 1e-12 * hi {
            return Err(FlowError::invalid(
                "second variation is only available at a flat configuration",
            ));
        }
        if psi.dim() != 2 || profile.m() != 1 {
            return Err(FlowError::invalid("flat-state second variation is implemented for planar films"));
        }
        let field = solve_equilibrium(profile, params, ny)?;
        Ok(FlatFilm {
            profile: profile.clone(),
            field,
            psi11: psi.vertical_tangential_stiffness(),
        })
    }

    pub fn thickness(&self) -> f64 {
        self.profile.values()[0]
    }

    pub fn mode(&self, k: usize) -> Result<ModeSecondVariation> {
        let n = self.profile.n();
        if k == 0 || 2 * k >= n {
            return Err(FlowError::invalid(format!("mode k = {k} must lie in 1..{}", n / 2)));
        }
        let b = self.profile.period();
        let grid = self.profile.grid();
        let phi: Vec<f64> = (0..n).map(|i| (2.0 * PI * k as f64 * grid.coords(i)[0] / b).cos()).collect();
        let dphi = grid.deriv(&phi, 0);
        let local = self.psi11 * grid.dot(&dphi, &dphi);
        let v = self.field.v_phi_solve(&self.profile, &phi)?;
        let nonlocal = -2.0 * v.elastic_energy;
        let value = local + nonlocal;
        let q = 2.0 * PI * k as f64 / b;
        Ok(ModeSecondVariation {
            k,
            d: self.thickness(),
            value,
            unit_l2: value * 2.0 / b,
            h1_rayleigh: value / (0.5 * b * (1.0 + q * q)),
            local,
            nonlocal,
        })
    }
}

/// Second variation at `h = d` along `cos(2 pi k x / b)`.
pub fn second_variation_flat(
    d: f64,
    k: usize,
    b: f64,
    params: &LameParams,
    psi: &Anisotropy,
    mesh: FlatMesh,
) -> Result<ModeSecondVariation> {
    FlatFilm::new(d, b, params, psi, mesh)?.mode(k)
}

/// Sign-change search of `min_k` of the normalized second variation in `d`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// `+inf` if no sign change was found up to `d_max`.
    pub threshold: f64,
    pub samples: Vec<ModeSecondVariation>,
    pub mesh: FlatMesh,
}

/// Settings of the numeric threshold search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSettings {
    pub mesh: FlatMesh,
    /// Modes `1..=kmax` enter the minimum.
    pub kmax: usize,
    /// Relative tolerance in `d`.
    pub rtol: f64,
    /// Coarse mesh used to bracket the root first (`None`: bracket on `mesh`).
    pub coarse: Option<FlatMesh>,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        ThresholdSettings {
            mesh: FlatMesh::default(),
            kmax: 6,
            rtol: 1e-4,
            coarse: Some(FlatMesh { n: 64, ny: 16 }),
        }
    }
}

fn min_mode(
    d: f64,
    b: f64,
    params: &LameParams,
    psi: &Anisotropy,
    mesh: FlatMesh,
    kmax: usize,
    samples: &mut Vec<ModeSecondVariation>,
) -> Result<f64> {
    let film = FlatFilm::new(d, b, params, psi, mesh)?;
    let kmax = kmax.min(mesh.n / 4).max(1);
    let mut best = f64::INFINITY;
    for k in 1..=kmax {
        let mv = film.mode(k)?;
        // normalized by the local part: sign-preserving and O(1)
        best = best.min(mv.value / mv.local);
        samples.push(mv);
    }
    Ok(best)
}

fn bracket_and_solve(
    b: f64,
    params: &LameParams,
    psi: &Anisotropy,
    mesh: FlatMesh,
    kmax: usize,
    rtol: f64,
    start: (f64, f64),
    samples: &mut Vec<ModeSecondVariation>,
) -> Result<f64> {
    let d_max = 64.0 * b;
    let (mut lo, mut hi) = start;
    let mut flo = min_mode(lo, b, params, psi, mesh, kmax, samples)?;
    while flo <= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-8 * b {
            return Ok(0.0);
        }
        flo = min_mode(lo, b, params, psi, mesh, kmax, samples)?;
    }
    let mut fhi = min_mode(hi, b, params, psi, mesh, kmax, samples)?;
    while fhi > 0.0 {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        if hi > d_max {
            return Ok(f64::INFINITY);
        }
        fhi = min_mode(hi, b, params, psi, mesh, kmax, samples)?;
    }
    // Illinois false position
    let mut side = 0i32;
    for _ in 0..100 {
        if hi - lo <= rtol * hi {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = min_mode(x, b, params, psi, mesh, kmax, samples)?;
        if fx > 0.0 {
            lo = x;
            flo = fx;
            if side == 1 {
                fhi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            fhi = fx;
            if side == -1 {
                flo *= 0.5;
            }
            side = -1;
        }
    }
    Ok((lo * fhi - hi * flo) / (fhi - flo))
}

/// Thickness at which the smallest modal second variation changes sign.
pub fn numeric_threshold(b: f64, params: &LameParams, psi: &Anisotropy, settings: &ThresholdSettings) -> Result<ThresholdSearch> {
    params.validate()?;
    let mut samples = Vec::new();
    let guess = b / (2.0 * PI);
    let start = match settings.coarse {
        Some(coarse) => {
            let dc = bracket_and_solve(b, params, psi, coarse, settings.kmax, 1e-3, (guess, 2.0 * guess), &mut samples)?;
            if !dc.is_finite() || dc == 0.0 {
                return Ok(ThresholdSearch { threshold: dc, samples, mesh: settings.mesh });
            }
            (0.95 * dc, 1.05 * dc)
        }
        None => (guess, 2.0 * guess),
    };
    samples.clear();
    let threshold = bracket_and_solve(b, params, psi, settings.mesh, settings.kmax, settings.rtol, start, &mut samples)?;
    Ok(ThresholdSearch {
        threshold,
        samples,
        mesh: settings.mesh,
    })
}

/// Summary of the flat-state stability analysis.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub nu_p: f64,
    pub rhs_value: f64,
    /// `None` encodes `+inf`.
    pub d_loc: Option<f64>,
    pub per_mode_second_variation: Vec<ModeSecondVariation>,
    pub numeric_threshold: Option<f64>,
    pub relative_gap: Option<f64>,
}

/// Analytic report, with the finite-element threshold when `numeric` is given.
pub fn stability_report(
    b: f64,
    params: &LameParams,
    psi11: f64,
    numeric: Option<&ThresholdSettings>,
) -> Result<StabilityReport> {
    check_threshold_inputs(b, params, psi11)?;
    let dl = d_loc(b, params, psi11)?;
    let mut report = StabilityReport {
        nu_p: poisson_modulus(params),
        rhs_value: threshold_constant(params, psi11) / b,
        d_loc: dl.is_finite().then_some(dl),
        per_mode_second_variation: Vec::new(),
        numeric_threshold: None,
        relative_gap: None,
    };
    if let Some(settings) = numeric {
        let psi = Anisotropy::elliptic(vec![psi11, 0.0, 0.0, 1.0])?;
        let search = numeric_threshold(b, params, &psi, settings)?;
        report.per_mode_second_variation = search.samples;
        if search.threshold.is_finite() {
            report.numeric_threshold = Some(search.threshold);
            if dl.is_finite() {
                report.relative_gap = Some((search.threshold - dl).abs() / dl);
            }
        }
    }
    Ok(report)
}

/// Outcome of a perturbed-flat evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Decay,
    Growth,
    Inconclusive,
}

/// Mean-zero perturbation `sum_j a_j cos(2 pi k_j x / b + phase_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// `(k, amplitude, phase)`.
    pub modes: Vec<(usize, f64, f64)>,
}

impl Perturbation {
    pub fn single(k: usize, amplitude: f64) -> Self {
        Perturbation { modes: vec![(k, amplitude, 0.0)] }
    }

    pub fn eval(&self, x: f64, b: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(k, a, ph)| a * (2.0 * PI * k as f64 * x / b + ph).cos())
            .sum()
    }
}

/// Evolution settings for a stability experiment.
#[derive(Clone, Debug)]
pub struct LiapunovConfig {
    pub b: f64,
    pub n: usize,
    pub ny: usize,
    pub lame: LameParams,
    pub psi: Anisotropy,
    pub epsilon: f64,
    pub p: f64,
    pub tau: f64,
    pub t_end: f64,
    pub options: StepperOptions,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LiapunovResult {
    pub classification: Classification,
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    /// Discrete `|h - d|_{W^{2,p}}`.
    pub w2p_norms: Vec<f64>,
    pub ratio: f64,
}

fn w2p_norm(profile: &Profile, d: f64, p: f64) -> f64 {
    let grid = profile.grid();
    let f: Vec<f64> = profile.values().iter().map(|v| v - d).collect();
    let df = grid.deriv(&f, 0);
    let d2f = grid.deriv(&df, 0);
    let lp = |g: &[f64]| grid.integrate(&g.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()).powf(1.0 / p);
    lp(&f) + lp(&df) + lp(&d2f)
}

/// Evolve `d + perturbation` and classify by `|h(T) - d|_{L^2} / |h(0) - d|_{L^2}`:
/// decay below 0.5, growth above 2.
pub fn liapunov_experiment(d: f64, perturbation: &Perturbation, config: &LiapunovConfig) -> Result<LiapunovResult> {
    if perturbation.modes.iter().any(|m| m.0 == 0) {
        return Err(FlowError::invalid("perturbation must be mean-zero (no k = 0 mode)"));
    }
    let b = config.b;
    let h0 = Profile::from_fn(1, b, config.n, |x, _| d + perturbation.eval(x, b))?;
    let params = FlowParams::for_initial(config.epsilon, config.p, config.tau, &h0)?;
    let model = EnergyModel::new(
        params,
        config.psi.clone(),
        BulkModel::PlaneStrain { lame: config.lame, ny: config.ny },
    )?;
    let trace = evolve(&h0, &model, config.t_end, &config.options)?;
    let l2 = |p: &Profile| {
        let g = p.grid();
        g.l2_norm(&p.values().iter().map(|v| v - d).collect::<Vec<_>>())
    };
    let l2_norms: Vec<f64> = trace.profiles.iter().map(l2).collect();
    let w2p_norms: Vec<f64> = trace.profiles.iter().map(|p| w2p_norm(p, d, config.p)).collect();
    let first = l2_norms[0];
    let last = *l2_norms.last().unwrap();
    let (classification, ratio) = if first == 0.0 {
        (Classification::Inconclusive, if last == 0.0 { 1.0 } else { f64::INFINITY })
    } else {
        let r = last / first;
        let c = if r <= 0.5 {
            Classification::Decay
        } else if r >= 2.0 {
            Classification::Growth
        } else {
            Classification::Inconclusive
        };
        (c, r)
    };
    Ok(LiapunovResult {
        classification,
        times: trace.times,
        l2_norms,
        w2p_norms,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_values() {
        let p = |mu, l| poisson_modulus(&LameParams::new(mu, l, 0.1).unwrap());
        assert_eq!(p(1.0, 0.0), 0.0);
        assert!((p(1.0, 1.0) - 0.25).abs() < 1e-15);
        assert!((p(1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn j_branches_agree_at_one() {
        let nu = 0.3;
        let a = 3.0 - 4.0 * nu;
        let y: f64 = 1.0;
        let direct = (y + a * y.sinh() * y.cosh()) / (4.0 * (1.0 - nu) * (1.0 - nu) + y * y + a * y.sinh().powi(2));
        let y2 = 1.0 + 1e-12;
        assert!((grinfeld_j(y2, nu).unwrap() - direct).abs() < 1e-11);
    }

    #[test]
    fn domain_errors() {
        assert!(grinfeld_j(-1.0, 0.2).is_err());
        assert!(grinfeld_j(1.0, 0.5).is_err());
        let lp = LameParams::new(1.0, 1.0, 0.5).unwrap();
        assert!(matches!(d_loc(10.0, &lp, 0.0), Err(FlowError::Domain(_))));
    }

    #[test]
    fn non_flat_rejected() {
        let lp = LameParams::new(1.0, 1.0, 0.5).unwrap();
        let p = Profile::from_fn(1, 1.0, 16, |x, _| 1.0 + 0.1 * (6.0 * x).sin()).unwrap();
        assert!(matches!(
            FlatFilm::from_profile(&p, &lp, &Anisotropy::isotropic(2), 8),
            Err(FlowError::InvalidInput(_))
        ));
    }
}

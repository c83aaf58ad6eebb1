//! Randomized probes of periodic interpolation inequalities: worst observed
//! ratio `lhs / rhs` (without the constant) over random trigonometric polynomials.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::spectral::{Backend, Grid};
use crate::surface_pde::hminus1_norm_unchecked;

/// Which inequality is probed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeId {
    /// `|D^j f|_p <= C |D^m f|_p^{j/m} |f|_p^{1-j/m}`.
    A,
    /// `|f|_q <= C |D^m f|_p^theta |f|_p^{1-theta}`, `theta = n/(mp) - n/(mq)`.
    C,
    /// `|D^j f|_q <= C |D^m f|_p^theta |D^s f|_p^{1-theta}`.
    D,
    /// `|f|_2 <= C |D^m f|_2^{1/(m+1)} |f|_{H^-1}^{m/(m+1)}`, `m` in {1, 2}.
    H1,
    /// `|D^2 u|_p <= C |a_ij D_ij u|_p` with graph-metric coefficients.
    #[serde(rename = "morini")]
    Morini,
}

impl ProbeId {
    pub const ALL: [ProbeId; 5] = [ProbeId::A, ProbeId::C, ProbeId::D, ProbeId::H1, ProbeId::Morini];
}

impl fmt::Display for ProbeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProbeId::A => "A",
            ProbeId::C => "C",
            ProbeId::D => "D",
            ProbeId::H1 => "H1",
            ProbeId::Morini => "morini",
        };
        f.write_str(s)
    }
}

impl FromStr for ProbeId {
    type Err = FlowError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(ProbeId::A),
            "C" => Ok(ProbeId::C),
            "D" => Ok(ProbeId::D),
            "H1" => Ok(ProbeId::H1),
            "morini" => Ok(ProbeId::Morini),
            _ => Err(FlowError::invalid(format!(
                "unknown probe id {s:?}; valid ids: A, C, D, H1, morini"
            ))),
        }
    }
}

/// Test-function family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Gaussian coefficients scaled by `|k|^{-decay}`, degree `<= n/4`.
    Random { decay: f64 },
    /// `sin(2 pi k x_1 / b)`.
    PureMode { k: usize },
}

/// Exponents and sampling setup of a probe.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub p: f64,
    pub q: f64,
    pub j: usize,
    pub m: usize,
    pub s: usize,
    /// Space dimension of the torus (1 or 2).
    pub dim: usize,
    pub n: usize,
    pub b: f64,
    pub family: Family,
    /// Slope bound of the coefficient profile (morini only).
    pub slope_bound: f64,
}

impl ProbeParams {
    /// Default tuple of each inequality.
    pub fn defaults(id: ProbeId) -> Self {
        let base = ProbeParams {
            p: 2.0,
            q: 2.0,
            j: 1,
            m: 2,
            s: 0,
            dim: 1,
            n: 128,
            b: 1.0,
            family: Family::Random { decay: 2.0 },
            slope_bound: 1.0,
        };
        match id {
            ProbeId::A => base,
            ProbeId::C => ProbeParams { m: 1, q: 4.0, ..base },
            ProbeId::D => ProbeParams { q: 4.0, ..base },
            ProbeId::H1 => ProbeParams { m: 1, ..base },
            ProbeId::Morini => ProbeParams { m: 2, p: 2.0, ..base },
        }
    }

    /// Interpolation exponent `theta` of the inequality (`None` where not applicable).
    pub fn theta(&self, id: ProbeId) -> Option<f64> {
        let n = self.dim as f64;
        let (p, q, m, j, s) = (self.p, self.q, self.m as f64, self.j as f64, self.s as f64);
        match id {
            ProbeId::A => Some(j / m),
            ProbeId::C => Some(n / (m * p) - n / (m * q)),
            ProbeId::D => Some((n / p - n / q + j - s) / (m - s)),
            ProbeId::H1 => Some(1.0 / (m + 1.0)),
            ProbeId::Morini => None,
        }
    }

    pub fn validate(&self, id: ProbeId) -> Result<()> {
        let bad = |msg: String| Err(FlowError::domain(msg));
        if !(self.dim == 1 || self.dim == 2) {
            return Err(FlowError::invalid(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return Err(FlowError::invalid(format!("grid size must be a power of two >= 8, got {}", self.n)));
        }
        if !(self.b > 0.0) {
            return Err(FlowError::invalid("period must be positive"));
        }
        match self.family {
            Family::Random { decay } if !decay.is_finite() => return Err(FlowError::invalid("decay must be finite")),
            Family::PureMode { k } if k == 0 || 4 * k > self.n => {
                return Err(FlowError::invalid(format!("pure mode k = {k} must lie in 1..=n/4")))
            }
            _ => {}
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return bad(format!("p must satisfy 1 <= p < inf, got {}", self.p));
        }
        let n = self.dim as f64;
        match id {
            ProbeId::A => {
                if self.m < 1 || self.j > self.m {
                    return bad(format!("need 0 <= j <= m and m >= 1, got j = {}, m = {}", self.j, self.m));
                }
            }
            ProbeId::C => {
                if self.m < 1 {
                    return bad("need m >= 1".into());
                }
                if !(self.q >= self.p && self.q.is_finite()) {
                    return bad(format!("need p <= q < inf, got p = {}, q = {}", self.p, self.q));
                }
                let mp = self.m as f64 * self.p;
                if mp < n && self.q > n * self.p / (n - mp) {
                    return bad(format!("need q <= np/(n - mp) = {}", n * self.p / (n - mp)));
                }
            }
            ProbeId::D => {
                if !(self.s <= self.j && self.j <= self.m && self.s < self.m) {
                    return bad(format!(
                        "need s <= j <= m with s < m, got s = {}, j = {}, m = {}",
                        self.s, self.j, self.m
                    ));
                }
                if !(self.q >= self.p && self.q.is_finite()) {
                    return bad(format!("need p <= q < inf, got p = {}, q = {}", self.p, self.q));
                }
                let k = (self.m - self.j) as f64 * self.p;
                if k < n && self.q > n * self.p / (n - k) {
                    return bad(format!("need q <= np/(n - (m-j)p) = {}", n * self.p / (n - k)));
                }
            }
            ProbeId::H1 => {
                if !(self.m == 1 || self.m == 2) {
                    return bad(format!("the H^-1 interpolation holds for m = 1 or 2, got {}", self.m));
                }
                if self.p != 2.0 {
                    return bad("the H^-1 interpolation is an L^2 statement (p = 2)".into());
                }
            }
            ProbeId::Morini => {
                if self.p < 2.0 {
                    return bad(format!("need p >= 2, got {}", self.p));
                }
                if !(self.slope_bound > 0.0 && self.slope_bound.is_finite()) {
                    return bad("slope bound must be positive".into());
                }
            }
        }
        if let Some(theta) = self.theta(id) {
            if !(-1e-12..=1.0 + 1e-12).contains(&theta) {
                return bad(format!("interpolation exponent theta = {theta} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Coefficients of one test function: `c cos(2 pi k.x / b) + s sin(2 pi k.x / b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    /// `(k1, k2, cos coefficient, sin coefficient)`.
    pub coefficients: Vec<(i64, i64, f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProbeReport {
    pub id: ProbeId,
    pub trials: usize,
    pub worst_ratio: f64,
    pub theta: Option<f64>,
    pub params: ProbeParams,
    pub witness: Witness,
    /// Largest relative change of a trial ratio under `f -> 3 f`.
    pub homogeneity_max_dev: f64,
    /// Worst witness re-evaluated on a grid twice as fine.
    pub refined_worst_ratio: f64,
    /// Bound the default tuples are expected to respect.
    pub cap: f64,
}

pub const DEFAULT_CAP: f64 = 10.0;

fn modes(params: &ProbeParams) -> Vec<(i64, i64)> {
    let deg = (params.n / 4) as i64;
    let mut out = Vec::new();
    if params.dim == 1 {
        for k in 1..=deg {
            out.push((k, 0));
        }
    } else {
        for k1 in 0..=deg {
            for k2 in -deg..=deg {
                if k1 == 0 && k2 <= 0 {
                    continue;
                }
                out.push((k1, k2));
            }
        }
    }
    out
}

fn witness(params: &ProbeParams, seed: u64, trial: usize, salt: u64) -> Witness {
    let stream = 2 * trial as u64 + salt;
    match params.family {
        Family::PureMode { k } => Witness {
            trial,
            seed,
            stream,
            coefficients: vec![(k as i64, 0, 0.0, 1.0)],
        },
        Family::Random { decay } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let coefficients = modes(params)
                .into_iter()
                .map(|(k1, k2)| {
                    let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
                    let w = kn.powf(-decay);
                    let c: f64 = StandardNormal.sample(&mut rng);
                    let s: f64 = StandardNormal.sample(&mut rng);
                    (k1, k2, w * c, w * s)
                })
                .collect();
            Witness {
                trial,
                seed,
                stream,
                coefficients,
            }
        }
    }
}

fn synthesize(grid: &Grid, w: &Witness) -> Vec<f64> {
    let b = grid.period();
    (0..grid.len())
        .map(|idx| {
            let x = grid.coords(idx);
            w.coefficients
                .iter()
                .map(|&(k1, k2, c, s)| {
                    let arg = 2.0 * PI * (k1 as f64 * x[0] + k2 as f64 * x[1]) / b;
                    c * arg.cos() + s * arg.sin()
                })
                .sum()
        })
        .collect()
}

fn lp_norm(grid: &Grid, f: &[f64], p: f64) -> f64 {
    grid.integrate(&f.iter().map(|v| v.abs().powf(p)).collect::<Vec<_>>()).powf(1.0 / p)
}

/// `|D^j f|` pointwise (Frobenius norm over ordered multi-indices).
fn derivative_magnitude(grid: &Grid, f: &[f64], j: usize) -> Vec<f64> {
    let mut comps = vec![f.to_vec()];
    for _ in 0..j {
        comps = comps
            .iter()
            .flat_map(|c| (0..grid.m()).map(move |a| grid.deriv(c, a)))
            .collect();
    }
    (0..f.len())
        .map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .collect()
}

fn dnorm(grid: &Grid, f: &[f64], j: usize, p: f64) -> f64 {
    lp_norm(grid, &derivative_magnitude(grid, f, j), p)
}

/// Coefficients `a = (I - g g / J^2) / J` of the linearized mean-curvature operator.
fn morini_coefficients(grid: &Grid, params: &ProbeParams, seed: u64, trial: usize) -> Vec<Vec<f64>> {
    let w = witness(&ProbeParams { family: Family::Random { decay: 2.0 }, ..*params }, seed, trial, 1);
    let h = synthesize(grid, &w);
    let g = grid.gradient(&h);
    let smax = (0..h.len())
        .map(|i| g.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let scale = if smax > 0.0 { params.slope_bound / smax } else { 0.0 };
    let m = grid.m();
    let mut a = vec![vec![0.0; h.len()]; m * m];
    for i in 0..h.len() {
        let gi: Vec<f64> = g.iter().map(|c| scale * c[i]).collect();
        let j2 = 1.0 + gi.iter().map(|v| v * v).sum::<f64>();
        let j = j2.sqrt();
        for r in 0..m {
            for c in 0..m {
                let delta = if r == c { 1.0 } else { 0.0 };
                a[r * m + c][i] = (delta - gi[r] * gi[c] / j2) / j;
            }
        }
    }
    a
}

/// `(lhs, rhs without C)` for one function.
fn sides(id: ProbeId, params: &ProbeParams, grid: &Grid, f: &[f64], coeff: Option<&[Vec<f64>]>) -> (f64, f64) {
    let p = params.p;
    match id {
        ProbeId::A => {
            let t = params.j as f64 / params.m as f64;
            let lhs = dnorm(grid, f, params.j, p);
            let rhs = dnorm(grid, f, params.m, p).powf(t) * lp_norm(grid, f, p).powf(1.0 - t);
            (lhs, rhs)
        }
        ProbeId::C => {
            let t = params.theta(id).unwrap().clamp(0.0, 1.0);
            let lhs = lp_norm(grid, f, params.q);
            let rhs = dnorm(grid, f, params.m, p).powf(t) * lp_norm(grid, f, p).powf(1.0 - t);
            (lhs, rhs)
        }
        ProbeId::D => {
            let t = params.theta(id).unwrap().clamp(0.0, 1.0);
            let lhs = dnorm(grid, f, params.j, params.q);
            let rhs = dnorm(grid, f, params.m, p).powf(t) * dnorm(grid, f, params.s, p).powf(1.0 - t);
            (lhs, rhs)
        }
        ProbeId::H1 => {
            let t = 1.0 / (params.m as f64 + 1.0);
            let lhs = grid.l2_norm(f);
            let rhs = dnorm(grid, f, params.m, 2.0).powf(t) * hminus1_norm_unchecked(grid, f).powf(1.0 - t);
            (lhs, rhs)
        }
        ProbeId::Morini => {
            let a = coeff.expect("morini needs coefficients");
            let m = grid.m();
            let mut lu = vec![0.0; f.len()];
            for r in 0..m {
                for c in 0..m {
                    let d = grid.deriv2(f, r, c);
                    for i in 0..f.len() {
                        lu[i] += a[r * m + c][i] * d[i];
                    }
                }
            }
            (dnorm(grid, f, 2, p), lp_norm(grid, &lu, p))
        }
    }
}

struct TrialOutcome {
    ratio: f64,
    homogeneity: f64,
    witness: Witness,
}

fn run_trial(id: ProbeId, params: &ProbeParams, grid: &Grid, seed: u64, trial: usize) -> TrialOutcome {
    let w = witness(params, seed, trial, 0);
    let f = synthesize(grid, &w);
    let coeff = (id == ProbeId::Morini).then(|| morini_coefficients(grid, params, seed, trial));
    let (l, r) = sides(id, params, grid, &f, coeff.as_deref());
    let ratio = l / r;
    let scaled: Vec<f64> = f.iter().map(|v| 3.0 * v).collect();
    let (l3, r3) = sides(id, params, grid, &scaled, coeff.as_deref());
    let homogeneity = ((l3 / r3) - ratio).abs() / ratio.abs().max(f64::MIN_POSITIVE);
    TrialOutcome {
        ratio,
        homogeneity,
        witness: w,
    }
}

/// Worst ratio over `trials` random functions; trial `i` draws from stream `2i` of
/// a ChaCha generator seeded with `seed`, so reports are reproducible.
pub fn probe_interpolation(id: ProbeId, params: &ProbeParams, trials: usize, seed: u64) -> Result<ProbeReport> {
    params.validate(id)?;
    if trials == 0 {
        return Err(FlowError::invalid("at least one trial is required"));
    }
    let grid = Grid::new(params.dim, params.n, params.b, Backend::Spectral)?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(id, params, &grid, seed, t))
        .collect();
    if let Some(bad) = outcomes.iter().find(|o| !o.ratio.is_finite()) {
        return Err(FlowError::numeric(
            format!("probe ratio is not finite at trial {}", bad.witness.trial),
            bad.ratio,
        ));
    }
    let worst = outcomes
        .iter()
        .enumerate()
        .fold(0usize, |best, (i, o)| if o.ratio > outcomes[best].ratio { i } else { best });
    let homogeneity_max_dev = outcomes.iter().map(|o| o.homogeneity).fold(0.0, f64::max);
    let w = outcomes[worst].witness.clone();

    let fine_params = ProbeParams { n: 2 * params.n, ..*params };
    let fine = Grid::new(params.dim, fine_params.n, params.b, Backend::Spectral)?;
    let f = synthesize(&fine, &w);
    let coeff = (id == ProbeId::Morini).then(|| morini_coefficients(&fine, params, seed, w.trial));
    let (l, r) = sides(id, &fine_params, &fine, &f, coeff.as_deref());

    Ok(ProbeReport {
        id,
        trials,
        worst_ratio: outcomes[worst].ratio,
        theta: params.theta(id),
        params: *params,
        witness: w,
        homogeneity_max_dev,
        refined_worst_ratio: l / r,
        cap: DEFAULT_CAP,
    })
}

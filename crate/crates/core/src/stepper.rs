//! Minimizing movements: each step minimizes `F(h) + (1/2tau) int_{Gamma_prev} |D v_h|^2`
//! over profiles with the volume of the previous one and `|Dh|_inf <= Lambda0`.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::energy::{bank_residual, curvature_hessian_diagnostic, EnergyBreakdown, EnergyModel, Evaluation};
use crate::elasticity::ElasticField;
use crate::error::{FlowError, Result};
use crate::geometry::{max_slope, volume, Profile};
use crate::spectral::Grid;
use crate::surface_pde::{hminus1_norm_unchecked, PenaltyOperator};

/// Optimizer settings of one incremental step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperOptions {
    /// Convergence when `|P grad|_{L^2} <= gtol * scale`, `scale = |F(h_prev)| / b^m`.
    pub gtol: f64,
    pub max_iter: usize,
    /// L-BFGS memory; 0 gives preconditioned steepest descent.
    pub memory: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    /// Re-solve the elastic field every k accepted iterates (k >= 1).
    pub elastic_refresh: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            gtol: 1e-7,
            max_iter: 2000,
            memory: 12,
            armijo_c: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
            elastic_refresh: 1,
        }
    }
}

impl StepperOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.gtol > 0.0) || self.max_iter == 0 || self.elastic_refresh == 0 {
            return Err(FlowError::invalid("gtol > 0, max_iter >= 1 and elastic_refresh >= 1 are required"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 0.5) || !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(FlowError::invalid("line search needs 0 < c < 1/2 and 0 < factor < 1"));
        }
        Ok(())
    }
}

/// Outcome of one incremental minimization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepResult {
    pub profile_next: Profile,
    pub energy: EnergyBreakdown,
    /// `(1/2tau) int_{Gamma_prev} |D_Gamma v|^2`.
    pub penalty_value: f64,
    pub optimality_residual: f64,
    /// Residual tested against the mode bank (see [`crate::energy::weak_residual`]).
    pub weak_residual: f64,
    pub iterations: usize,
    pub slope_max: f64,
    pub constraint_active: bool,
    /// Energy of the previous profile.
    pub previous_energy: f64,
    /// `|(h_next - h_prev)/tau|_{H^{-1}}` on the flat torus.
    pub hminus1_velocity: f64,
    pub min_h: f64,
    pub volume: f64,
    pub curvature_hessian_diagnostic: f64,
}

struct Objective<'a> {
    model: &'a EnergyModel,
    grid: Grid,
    penalty: PenaltyOperator,
    layout: Profile,
}

struct Point {
    h: Vec<f64>,
    eval: Evaluation,
    /// Field used for the bulk term (fresh or frozen).
    field: Option<ElasticField>,
    fresh: bool,
    penalty: f64,
    potential: Vec<f64>,
    phi: f64,
    /// Projected total gradient.
    grad: Vec<f64>,
}

enum Trial {
    Rejected { slope: bool },
    Ok(Box<Point>),
}

impl<'a> Objective<'a> {
    fn point(&self, h: Vec<f64>, frozen: Option<&ElasticField>, guess: Option<&[f64]>) -> Result<Point> {
        let profile = self.layout.with_values(h.clone())?;
        let (eval, field, fresh) = match frozen {
            Some(f) => (self.model.evaluate_frozen(&profile, f)?, Some(f.clone()), false),
            None => {
                let mut ev = self.model.evaluate(&profile)?;
                let field = ev.field.take();
                (ev, field, true)
            }
        };
        let pen = self.penalty.eval(&h, guess)?;
        let tau = self.model.params.tau;
        let mut grad: Vec<f64> = eval
            .gradient
            .iter()
            .zip(&pen.potential)
            .map(|(g, v)| g - v / tau)
            .collect();
        self.grid.project_out_kernel(&mut grad);
        let penalty = pen.value / tau;
        Ok(Point {
            h,
            phi: eval.energy.total + penalty,
            eval,
            field,
            fresh,
            penalty,
            potential: pen.potential,
            grad,
        })
    }

    fn trial(&self, h: Vec<f64>, frozen: Option<&ElasticField>, guess: &[f64]) -> Result<Trial> {
        let lambda0 = self.model.params.lambda0;
        let positivity = h.iter().any(|v| !(*v > 0.0));
        let slope = max_slope(&self.grid, &h) > lambda0;
        if positivity || slope {
            return Ok(Trial::Rejected { slope });
        }
        Ok(Trial::Ok(Box::new(self.point(h, frozen, Some(guess))?)))
    }

    /// Fourier preconditioner: inverse of the flat linearization of the objective.
    fn precondition(&self, g: &[f64], mean_abs_h_pow: f64) -> Vec<f64> {
        let params = &self.model.params;
        let psi11 = self.model.psi.vertical_tangential_stiffness();
        let psi_bar = if psi11 > 0.0 { psi11 } else { self.model.psi.bound_constant().max(1e-3) };
        let eps_bar = params.epsilon * (params.p - 1.0) * mean_abs_h_pow;
        let tau = params.tau;
        let mut data = self.grid.fft(g);
        for (idx, c) in data.iter_mut().enumerate() {
            let q2 = self.grid.laplacian_symbol(idx);
            if q2 <= 1e-12 {
                *c *= 0.0;
            } else {
                *c *= 1.0 / (psi_bar * q2 + eps_bar * q2 * q2 + 1.0 / (tau * q2));
            }
        }
        let mut out = self.grid.ifft(data);
        self.grid.project_out_kernel(&mut out);
        out
    }
}

/// One incremental minimization from `h_prev`.
pub fn incremental_step(h_prev: &Profile, model: &EnergyModel, options: &StepperOptions) -> Result<StepResult> {
    incremental_step_from(h_prev, None, model, options)
}

/// Iterations without measurable progress before the round-off floor is accepted.
const STAGNATION_LIMIT: usize = 8;
/// How far above the requested tolerance a stagnated iterate may sit.
const FLOOR_FACTOR: f64 = 100.0;

/// As [`incremental_step`], starting the optimizer at `start` (same volume as `h_prev`).
pub fn incremental_step_from(
    h_prev: &Profile,
    start: Option<&Profile>,
    model: &EnergyModel,
    options: &StepperOptions,
) -> Result<StepResult> {
    options.validate()?;
    model.params.validate()?;
    model.check_profile(h_prev)?;
    let grid = h_prev.grid();
    let slope0 = max_slope(&grid, h_prev.values());
    if slope0 >= model.params.lambda0 {
        return Err(FlowError::invalid(format!(
            "previous profile has slope {slope0} >= Lambda0 = {}",
            model.params.lambda0
        )));
    }
    let obj = Objective {
        model,
        grid: grid.clone(),
        penalty: PenaltyOperator::new(&grid, h_prev.values())?,
        layout: h_prev.clone(),
    };
    let prev = obj.point(h_prev.values().to_vec(), None, None)?;
    let previous_energy = prev.eval.energy.total;
    let area = h_prev.period().powi(h_prev.m() as i32);
    let scale = (previous_energy.abs() / area).max(f64::MIN_POSITIVE);
    let tol = options.gtol * scale;

    let mut cur = match start {
        Some(s) => {
            if !s.same_layout(h_prev) {
                return Err(FlowError::invalid("start profile lives on a different grid"));
            }
            let p = obj.point(s.values().to_vec(), None, None)?;
            if p.phi <= prev.phi && max_slope(&grid, s.values()) <= model.params.lambda0 {
                p
            } else {
                prev
            }
        }
        None => prev,
    };

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut iterations = 0;
    let mut since_refresh = 0;
    let mut slope_blocked = false;
    let mut converged = false;
    let mut restarted = false;
    let mut stagnant = 0;

    while iterations < options.max_iter {
        let gnorm = grid.l2_norm(&cur.grad);
        if gnorm <= tol {
            if cur.fresh {
                converged = true;
                break;
            }
            let guess = cur.potential.clone();
            cur = obj.point(cur.h.clone(), None, Some(&guess))?;
            since_refresh = 0;
            continue;
        }
        iterations += 1;

        // two-loop recursion with the Fourier preconditioner as initial inverse Hessian
        let mut q = cur.grad.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / grid.dot(&y_hist[i], &s_hist[i]);
            alphas[i] = rho * grid.dot(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alphas[i] * yj;
            }
        }
        let mut r = obj.precondition(&q, cur.eval.mean_abs_h_pow);
        for i in 0..k {
            let rho = 1.0 / grid.dot(&y_hist[i], &s_hist[i]);
            let beta = rho * grid.dot(&y_hist[i], &r);
            for (rj, sj) in r.iter_mut().zip(&s_hist[i]) {
                *rj += (alphas[i] - beta) * sj;
            }
        }
        let mut dir: Vec<f64> = r.iter().map(|v| -v).collect();
        grid.project_out_kernel(&mut dir);
        let mut slope_dir = grid.dot(&cur.grad, &dir);
        if !(slope_dir < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = obj.precondition(&cur.grad, cur.eval.mean_abs_h_pow).iter().map(|v| -v).collect();
            slope_dir = grid.dot(&cur.grad, &dir);
        }

        let frozen = if since_refresh + 1 < options.elastic_refresh { cur.field.as_ref() } else { None };
        let mut alpha = 1.0;
        let mut accepted: Option<Point> = None;
        let mut blocked_by_slope = false;
        let mut fallback: Option<Point> = None;
        for _ in 0..options.max_backtracks {
            let h: Vec<f64> = cur.h.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect();
            match obj.trial(h, frozen, &cur.potential)? {
                Trial::Rejected { slope, .. } => {
                    blocked_by_slope |= slope;
                }
                Trial::Ok(p) => {
                    if p.phi <= cur.phi + options.armijo_c * alpha * slope_dir {
                        accepted = Some(*p);
                        break;
                    }
                    // round-off floor: no measurable increase and a smaller gradient
                    if fallback.is_none()
                        && p.phi <= cur.phi + 1e-12 * cur.phi.abs()
                        && grid.l2_norm(&p.grad) < gnorm
                    {
                        fallback = Some(*p);
                    }
                }
            }
            alpha *= options.backtrack;
        }
        let next = match accepted.or(fallback) {
            Some(p) => p,
            None => {
                slope_blocked |= blocked_by_slope;
                if !restarted && !s_hist.is_empty() {
                    restarted = true;
                    s_hist.clear();
                    y_hist.clear();
                    continue;
                }
                if blocked_by_slope {
                    break;
                }
                return Err(FlowError::numeric(
                    format!("line search stalled after {iterations} iterations"),
                    gnorm / scale,
                ));
            }
        };
        restarted = false;
        // no measurable progress in either value or gradient: round-off floor
        let progress = cur.phi - next.phi > 4.0 * f64::EPSILON * cur.phi.abs()
            || grid.l2_norm(&next.grad) < 0.99 * gnorm;
        stagnant = if progress || !next.fresh { 0 } else { stagnant + 1 };
        since_refresh = if next.fresh { 0 } else { since_refresh + 1 };

        let s: Vec<f64> = next.h.iter().zip(&cur.h).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = grid.dot(&s, &y);
        if options.memory > 0 && sy > 1e-12 * grid.l2_norm(&s) * grid.l2_norm(&y) {
            if s_hist.len() == options.memory {
                s_hist.pop_front();
                y_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
        }
        cur = next;
        if stagnant >= STAGNATION_LIMIT {
            converged = grid.l2_norm(&cur.grad) <= FLOOR_FACTOR * tol;
            break;
        }
    }

    if !cur.fresh {
        let guess = cur.potential.clone();
        cur = obj.point(cur.h.clone(), None, Some(&guess))?;
    }
    let residual = grid.l2_norm(&cur.grad);
    let slope_max = max_slope(&grid, &cur.h);
    let constraint_active = slope_blocked || slope_max >= 0.999 * model.params.lambda0;
    if !converged && !constraint_active && residual > tol {
        return Err(FlowError::numeric(
            format!("optimizer did not converge after {iterations} iterations"),
            residual / scale,
        ));
    }

    let mut raw_grad: Vec<f64> = cur
        .eval
        .gradient
        .iter()
        .zip(&cur.potential)
        .map(|(g, v)| g - v / model.params.tau)
        .collect();
    grid.remove_mean(&mut raw_grad);
    let weak = bank_residual(&grid, &raw_grad);

    let tau = model.params.tau;
    let velocity: Vec<f64> = cur.h.iter().zip(h_prev.values()).map(|(a, b)| (a - b) / tau).collect();
    let profile_next = h_prev.with_values(cur.h.clone())?;
    Ok(StepResult {
        energy: cur.eval.energy,
        penalty_value: cur.penalty,
        optimality_residual: residual,
        weak_residual: weak,
        iterations,
        slope_max,
        constraint_active,
        previous_energy,
        hminus1_velocity: hminus1_norm_unchecked(&grid, &velocity),
        min_h: profile_next.min_height(),
        volume: volume(&profile_next),
        curvature_hessian_diagnostic: curvature_hessian_diagnostic(&profile_next, model.params.p)?,
        profile_next,
    })
}

/// Why an evolution stopped before `t_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminalEvent {
    /// The slope bound became active: end of the existence window `T0`.
    SlopeActivation { step: usize, t: f64, slope: f64 },
    /// The film touched the substrate.
    PinchOff { step: usize, t: f64, min_h: f64 },
}

/// Time series of an evolution with its energy bookkeeping.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub tau: f64,
    pub times: Vec<f64>,
    /// `profiles[i]` is the state at `times[i]`; `profiles[0]` is the initial datum.
    pub profiles: Vec<Profile>,
    pub steps: Vec<StepResult>,
    pub initial_energy: EnergyBreakdown,
    pub initial_curvature_hessian: f64,
    /// `sum_i tau |(h_i - h_{i-1})/tau|^2_{H^{-1}}`.
    pub dissipation: f64,
    /// `sum_i penalty_i` (each carrying its `1/2tau`).
    pub penalty_sum: f64,
    pub event: Option<TerminalEvent>,
}

pub const TRACE_SCHEMA: &str = "filmflow-trace v1";

impl EvolutionTrace {
    pub fn final_profile(&self) -> &Profile {
        self.profiles.last().expect("trace has the initial profile")
    }

    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy.total)
            .chain(self.steps.iter().map(|s| s.energy.total))
            .collect()
    }

    /// Observed constant `C` in `dissipation <= C F(h0)`.
    pub fn dissipation_constant(&self) -> f64 {
        self.dissipation / self.initial_energy.total
    }

    /// Piecewise-linear interpolation in time between the discrete states.
    pub fn interpolate(&self, t: f64) -> Result<Profile> {
        let t_last = *self.times.last().unwrap();
        if !(t >= 0.0 && t <= t_last * (1.0 + 1e-14) + 1e-300) {
            return Err(FlowError::invalid(format!("t = {t} outside [0, {t_last}]")));
        }
        let i = ((t / self.tau).floor() as usize).min(self.profiles.len().saturating_sub(2));
        if self.profiles.len() == 1 {
            return Ok(self.profiles[0].clone());
        }
        let s = ((t - self.times[i]) / self.tau).clamp(0.0, 1.0);
        let a = self.profiles[i].values();
        let b = self.profiles[i + 1].values();
        self.profiles[i].with_values(a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# {TRACE_SCHEMA}\nstep,t,E_total,E_elastic,E_surface,E_curv,penalty,volume,max_slope,min_h,hminus1_velocity,curvature_hessian_diagnostic\n"
        );
        let h0 = &self.profiles[0];
        let e = &self.initial_energy;
        writeln!(
            out,
            "0,0,{:.16e},{:.16e},{:.16e},{:.16e},0,{:.16e},{:.16e},{:.16e},0,{:.16e}",
            e.total,
            e.elastic,
            e.surface,
            e.curvature,
            volume(h0),
            max_slope(&h0.grid(), h0.values()),
            h0.min_height(),
            self.initial_curvature_hessian
        )
        .unwrap();
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                i + 1,
                self.times[i + 1],
                s.energy.total,
                s.energy.elastic,
                s.energy.surface,
                s.energy.curvature,
                s.penalty_value,
                s.volume,
                s.slope_max,
                s.min_h,
                s.hminus1_velocity,
                s.curvature_hessian_diagnostic
            )
            .unwrap();
        }
        out
    }

    /// One row per saved snapshot: `step,t,h_0,...,h_{N-1}`.
    pub fn profiles_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = format!("# {TRACE_SCHEMA} profiles\n");
        let last = self.profiles.len() - 1;
        for (i, p) in self.profiles.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            write!(out, "{i},{:.16e}", self.times[i]).unwrap();
            for v in p.values() {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Run the scheme until `t_end` or a terminal event.
pub fn evolve(h0: &Profile, model: &EnergyModel, t_end: f64, options: &StepperOptions) -> Result<EvolutionTrace> {
    evolve_with(h0, model, t_end, options, |_, _| {})
}

/// As [`evolve`], calling `on_step(index, result)` after every accepted step.
pub fn evolve_with(
    h0: &Profile,
    model: &EnergyModel,
    t_end: f64,
    options: &StepperOptions,
    mut on_step: impl FnMut(usize, &StepResult),
) -> Result<EvolutionTrace> {
    model.params.check_initial(h0)?;
    model.check_profile(h0)?;
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(FlowError::invalid(format!("t_end must be finite and >= 0, got {t_end}")));
    }
    let tau = model.params.tau;
    let nsteps = (t_end / tau - 1e-9).ceil().max(0.0) as usize;
    let initial = model.evaluate(h0)?;
    let mut trace = EvolutionTrace {
        tau,
        times: vec![0.0],
        profiles: vec![h0.clone()],
        steps: Vec::new(),
        initial_energy: initial.energy,
        initial_curvature_hessian: curvature_hessian_diagnostic(h0, model.params.p)?,
        dissipation: 0.0,
        penalty_sum: 0.0,
        event: None,
    };
    let pinch_tol = 1e-6 * h0.values().iter().sum::<f64>() / h0.len() as f64;
    for i in 1..=nsteps {
        let prev = trace.profiles.last().unwrap().clone();
        let t = i as f64 * tau;
        let step = match incremental_step(&prev, model, options) {
            Ok(s) => s,
            Err(err) => {
                // a stall next to the substrate is reported as pinch-off
                if prev.min_height() <= 1e3 * pinch_tol {
                    trace.event = Some(TerminalEvent::PinchOff { step: i, t, min_h: prev.min_height() });
                    return Ok(trace);
                }
                return Err(err);
            }
        };
        trace.dissipation += tau * step.hminus1_velocity * step.hminus1_velocity;
        trace.penalty_sum += step.penalty_value;
        let active = step.constraint_active;
        let slope = step.slope_max;
        let min_h = step.min_h;
        on_step(i, &step);
        trace.times.push(t);
        trace.profiles.push(step.profile_next.clone());
        trace.steps.push(step);
        if active {
            trace.event = Some(TerminalEvent::SlopeActivation { step: i, t, slope });
            break;
        }
        if min_h <= pinch_tol {
            trace.event = Some(TerminalEvent::PinchOff { step: i, t, min_h });
            break;
        }
    }
    Ok(trace)
}

//! Config schema and command implementations behind the `filmflow` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use filmflow::energy::{default_lambda0, potential_from_id};
use filmflow::probes::{Family, ProbeId, ProbeParams, ProbeReport};
use filmflow::stability::{self, FlatMesh, ThresholdSettings};
use filmflow::stepper::{evolve, EvolutionTrace, StepperOptions, TerminalEvent};
use filmflow::{Anisotropy, BulkModel, EnergyModel, FlowParams, LameParams, Profile};

pub const REPORT_SCHEMA: &str = "filmflow-report v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub m: usize,
    pub b: f64,
    pub n: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub epsilon: f64,
    /// Defaults to 2 for curves and 3 for surfaces.
    pub p: Option<f64>,
    /// Defaults to `b^2 / 1024`.
    pub tau: Option<f64>,
    /// Defaults to `2 (1 + |Dh0|_inf)`.
    pub lambda0: Option<f64>,
    pub t_end: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyConfig {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl Default for AnisotropyConfig {
    fn default() -> Self {
        AnisotropyConfig {
            family: "isotropic".into(),
            params: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticityConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    pub mu: f64,
    pub lambda: f64,
    pub e0: f64,
    #[serde(default = "default_ny")]
    pub ny: usize,
}

fn yes() -> bool {
    true
}

fn default_ny() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    /// Wave vector `[k1]` or `[k1, k2]`.
    pub k: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// Mean thickness of the film.
    pub mean: Option<f64>,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
    /// Profile CSV (as written by the `profiles` output); relative to the config file.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_trace")]
    pub trace: String,
    #[serde(default = "default_profiles")]
    pub profiles: String,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_trace() -> String {
    "trace.csv".into()
}
fn default_profiles() -> String {
    "profiles.csv".into()
}
fn one() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            trace: default_trace(),
            profiles: default_profiles(),
            snapshot_stride: 1,
        }
    }
}

/// Complete description of one evolution run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub flow: FlowConfig,
    #[serde(default)]
    pub anisotropy: AnisotropyConfig,
    pub elasticity: Option<ElasticityConfig>,
    /// `none` or `gravity:<g>`; used when no elasticity is configured.
    #[serde(default = "default_potential")]
    pub surface_potential: String,
    pub initial: InitialConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub stepper: StepperOptions,
}

fn default_potential() -> String {
    "none".into()
}

/// Everything needed to start `evolve`.
pub struct PreparedRun {
    pub h0: Profile,
    pub model: EnergyModel,
    pub t_end: f64,
    pub options: StepperOptions,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text)
    }

    fn initial_profile(&self, base: &Path) -> Result<Profile> {
        let g = &self.geometry;
        if let Some(file) = &self.initial.file {
            if self.initial.mean.is_some() || !self.initial.modes.is_empty() {
                bail!("initial: give either `file` or `mean`/`modes`, not both");
            }
            let path = base.join(file);
            let p = Profile::read_csv(&path).map_err(|e| anyhow!("initial.file {}: {e}", path.display()))?;
            if p.m() != g.m || p.n() != g.n || (p.period() - g.b).abs() > 1e-12 * g.b {
                bail!("initial.file: profile layout (m, b, n) differs from [geometry]");
            }
            return Ok(p);
        }
        let mean = self.initial.mean.ok_or_else(|| anyhow!("initial.mean: required unless initial.file is set"))?;
        for (i, md) in self.initial.modes.iter().enumerate() {
            if md.k.is_empty() || md.k.len() > g.m {
                bail!("initial.modes[{i}].k: expected {} wave-vector entries", g.m);
            }
            if md.k.iter().all(|k| *k == 0) {
                bail!("initial.modes[{i}].k: the zero mode would change the mean");
            }
        }
        let modes = self.initial.modes.clone();
        let b = g.b;
        Profile::from_fn(g.m, b, g.n, move |x1, x2| {
            mean + modes
                .iter()
                .map(|md| {
                    let k1 = md.k[0] as f64;
                    let k2 = md.k.get(1).copied().unwrap_or(0) as f64;
                    md.amplitude * (2.0 * std::f64::consts::PI * (k1 * x1 + k2 * x2) / b + md.phase).cos()
                })
                .sum::<f64>()
        })
        .map_err(|e| anyhow!("initial: {e}"))
    }

    /// Validate cross-field constraints and build the run; relative paths resolve against `base`.
    pub fn prepare(&self, base: &Path) -> Result<PreparedRun> {
        let g = &self.geometry;
        if !(g.m == 1 || g.m == 2) {
            bail!("geometry.m: must be 1 or 2, got {}", g.m);
        }
        if !(g.b > 0.0 && g.b.is_finite()) {
            bail!("geometry.b: must be positive, got {}", g.b);
        }
        if g.n < 8 || !g.n.is_power_of_two() {
            bail!("geometry.n: must be a power of two >= 8, got {}", g.n);
        }
        let f = &self.flow;
        if !(f.epsilon > 0.0) {
            bail!("flow.epsilon: must be > 0, got {}", f.epsilon);
        }
        let p = f.p.unwrap_or(if g.m == 1 { 2.0 } else { 3.0 });
        if !(p >= 2.0) {
            bail!("flow.p: must be >= 2, got {p}");
        }
        let tau = f.tau.unwrap_or(g.b * g.b / 1024.0);
        if !(tau > 0.0) {
            bail!("flow.tau: must be > 0, got {tau}");
        }
        if !(f.t_end >= 0.0 && f.t_end.is_finite()) {
            bail!("flow.t_end: must be finite and >= 0, got {}", f.t_end);
        }
        let h0 = self.initial_profile(base)?;
        let slope = filmflow::geometry::max_slope(&h0.grid(), h0.values());
        let lambda0 = f.lambda0.unwrap_or_else(|| default_lambda0(&h0));
        if lambda0 <= slope {
            bail!("flow.lambda0: Lambda0 = {lambda0} must exceed the initial max slope |Dh0|_inf = {slope} (Lambda0 > |h0|_C1)");
        }
        let params = FlowParams::new(f.epsilon, p, lambda0, tau).map_err(|e| anyhow!("flow: {e}"))?;
        let psi = Anisotropy::from_spec(&self.anisotropy.family, g.m + 1, &self.anisotropy.params)
            .map_err(|e| anyhow!("anisotropy: {e}"))?;
        let bulk = match &self.elasticity {
            Some(el) if el.enabled => {
                if g.m != 1 {
                    bail!("elasticity: only available for m = 1 (use surface_potential for m = 2)");
                }
                if self.surface_potential.trim() != "none" {
                    bail!("surface_potential: cannot be combined with elasticity");
                }
                if el.ny < 4 {
                    bail!("elasticity.ny: must be >= 4, got {}", el.ny);
                }
                let lame = LameParams::new(el.mu, el.lambda, el.e0).map_err(|e| anyhow!("elasticity: {e}"))?;
                BulkModel::PlaneStrain { lame, ny: el.ny }
            }
            _ => match potential_from_id(&self.surface_potential).map_err(|e| anyhow!("surface_potential: {e}"))? {
                Some(pot) => BulkModel::Potential(pot),
                None => BulkModel::None,
            },
        };
        self.stepper.validate().map_err(|e| anyhow!("stepper: {e}"))?;
        if self.output.snapshot_stride == 0 {
            bail!("output.snapshot_stride: must be >= 1");
        }
        let model = EnergyModel::new(params, psi, bulk).map_err(|e| anyhow!("{e}"))?;
        Ok(PreparedRun {
            h0,
            model,
            t_end: f.t_end,
            options: self.stepper,
            output_dir: base.join(&self.output.dir),
        })
    }
}

/// Result of `evolve` with the paths written.
pub struct EvolveOutcome {
    pub trace: EvolutionTrace,
    pub trace_path: PathBuf,
    pub profiles_path: PathBuf,
    pub summary: String,
}

impl EvolveOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.trace.event.is_some() {
            2
        } else {
            0
        }
    }
}

fn gnuplot_stub(trace: &str, profiles: &str) -> String {
    format!(
        "# gnuplot script for a filmflow run\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set multiplot layout 2,1\n\
         set xlabel 't'\n\
         plot '{trace}' using 2:3 with lines title 'E_total', \\\n     '' using 2:4 with lines title 'E_elastic', \\\n     '' using 2:5 with lines title 'E_surface'\n\
         set xlabel 'node'\n\
         unset key\n\
         plot for [row=0:*] '{profiles}' matrix every ::2::1000000:row:row:row with lines\n\
         unset multiplot\n"
    )
}

/// Run one configured evolution and write trace, snapshots, plot stub and a sidecar log.
pub fn run_evolve(config: &RunConfig, base: &Path) -> Result<EvolveOutcome> {
    let run = config.prepare(base)?;
    let started = std::time::SystemTime::now();
    let trace = evolve(&run.h0, &run.model, run.t_end, &run.options).map_err(|e| anyhow!("evolution failed: {e}"))?;
    fs::create_dir_all(&run.output_dir)
        .with_context(|| format!("cannot create {}", run.output_dir.display()))?;
    let trace_path = run.output_dir.join(&config.output.trace);
    let profiles_path = run.output_dir.join(&config.output.profiles);
    fs::write(&trace_path, trace.to_csv())?;
    fs::write(&profiles_path, trace.profiles_csv(config.output.snapshot_stride))?;
    fs::write(
        run.output_dir.join("plot.gp"),
        gnuplot_stub(&config.output.trace, &config.output.profiles),
    )?;

    let v0 = filmflow::volume(&run.h0);
    let drift = trace
        .steps
        .iter()
        .map(|s| ((s.volume - v0) / v0).abs())
        .fold(0.0, f64::max);
    let final_e = trace.steps.last().map(|s| s.energy.total).unwrap_or(trace.initial_energy.total);
    let mut summary = String::new();
    writeln!(summary, "steps: {}", trace.steps.len()).unwrap();
    writeln!(summary, "initial energy: {:.12e}", trace.initial_energy.total).unwrap();
    writeln!(summary, "final energy: {final_e:.12e}").unwrap();
    writeln!(summary, "max relative volume drift: {drift:.3e}").unwrap();
    writeln!(summary, "dissipation / F(h0): {:.6e}", trace.dissipation_constant()).unwrap();
    match &trace.event {
        None => writeln!(summary, "terminal events: none").unwrap(),
        Some(TerminalEvent::SlopeActivation { step, t, slope }) => {
            writeln!(summary, "terminal event: slope bound active at step {step} (t = {t}, |Dh| = {slope}); T0 = {t}").unwrap()
        }
        Some(TerminalEvent::PinchOff { step, t, min_h }) => {
            writeln!(summary, "terminal event: pinch-off at step {step} (t = {t}, min h = {min_h:e})").unwrap()
        }
    }
    let elapsed = started.elapsed().map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let stamp = started
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::write(
        run.output_dir.join("run.log"),
        format!("started (unix): {stamp}\nwall time (s): {elapsed:.3}\n{summary}"),
    )?;
    Ok(EvolveOutcome {
        trace,
        trace_path,
        profiles_path,
        summary,
    })
}

/// Options of the `stability` command.
#[derive(Clone, Debug)]
pub struct StabilityArgs {
    pub mu: f64,
    pub lambda: f64,
    pub e0: f64,
    pub psi11: f64,
    pub b: f64,
    pub numeric: bool,
    pub n: usize,
    pub ny: usize,
    pub out_dir: Option<PathBuf>,
}

pub fn run_stability(args: &StabilityArgs) -> Result<(String, stability::StabilityReport)> {
    if !(args.psi11 > 0.0) {
        bail!(
            "--psi11 must be > 0: the flat-state threshold assumes d^2 psi / d xi_1^2 (0,1) > 0, got {}",
            args.psi11
        );
    }
    let lame = LameParams::new(args.mu, args.lambda, args.e0).map_err(|e| anyhow!("{e}"))?;
    let settings = ThresholdSettings {
        mesh: FlatMesh { n: args.n, ny: args.ny },
        ..Default::default()
    };
    let report = stability::stability_report(args.b, &lame, args.psi11, args.numeric.then_some(&settings))
        .map_err(|e| anyhow!("{e}"))?;
    let mut out = String::new();
    writeln!(out, "nu_p = {:.12}", report.nu_p).unwrap();
    writeln!(out, "rhs = {:.12e}", report.rhs_value).unwrap();
    match report.d_loc {
        None => writeln!(out, "d_loc = inf").unwrap(),
        Some(d) => {
            let k = stability::grinfeld_k(2.0 * std::f64::consts::PI * d / args.b, report.nu_p).map_err(|e| anyhow!("{e}"))?;
            writeln!(out, "d_loc = {d:.12e}").unwrap();
            writeln!(out, "round-trip residual = {:.3e}", (k - report.rhs_value).abs() / report.rhs_value).unwrap();
        }
    }
    if args.numeric {
        match report.numeric_threshold {
            Some(t) => writeln!(out, "numeric threshold ({}x{}) = {t:.12e}", args.n, args.ny).unwrap(),
            None => writeln!(out, "numeric threshold ({}x{}) = inf", args.n, args.ny).unwrap(),
        }
        if let Some(g) = report.relative_gap {
            writeln!(out, "relative gap = {:.4}%", 100.0 * g).unwrap();
        }
    }
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        let mut csv = format!("# {REPORT_SCHEMA} stability\nd,k,second_variation\n");
        for s in &report.per_mode_second_variation {
            writeln!(csv, "{:.16e},{},{:.16e}", s.d, s.k, s.value).unwrap();
        }
        fs::write(dir.join("second_variation.csv"), csv)?;
        let summary = serde_json::json!({
            "schema": REPORT_SCHEMA,
            "nu_p": report.nu_p,
            "rhs": report.rhs_value,
            "d_loc": report.d_loc,
            "numeric_threshold": report.numeric_threshold,
            "relative_gap": report.relative_gap,
        });
        fs::write(dir.join("stability.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok((out, report))
}

/// Options of the `probe` command.
#[derive(Clone, Debug)]
pub struct ProbeArgs {
    pub id: ProbeId,
    pub trials: usize,
    pub seed: u64,
    pub pure_mode: Option<usize>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub j: Option<usize>,
    pub m: Option<usize>,
    pub s: Option<usize>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub decay: Option<f64>,
}

pub fn run_probe(args: &ProbeArgs) -> Result<(String, ProbeReport)> {
    let mut params = ProbeParams::defaults(args.id);
    if let Some(v) = args.p {
        params.p = v;
    }
    if let Some(v) = args.q {
        params.q = v;
    }
    if let Some(v) = args.j {
        params.j = v;
    }
    if let Some(v) = args.m {
        params.m = v;
    }
    if let Some(v) = args.s {
        params.s = v;
    }
    if let Some(v) = args.dim {
        params.dim = v;
        if v == 2 && args.n.is_none() {
            params.n = 32;
        }
    }
    if let Some(v) = args.n {
        params.n = v;
    }
    if let Some(d) = args.decay {
        params.family = Family::Random { decay: d };
    }
    if let Some(k) = args.pure_mode {
        params.family = Family::PureMode { k };
    }
    let report = filmflow::probe_interpolation(args.id, &params, args.trials, args.seed).map_err(|e| anyhow!("{e}"))?;
    let json = serde_json::json!({ "schema": REPORT_SCHEMA, "report": report });
    Ok((serde_json::to_string_pretty(&json)? + "\n", report))
}

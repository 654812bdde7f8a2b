//! Scenario files and the experiment runner behind the `transleak` binary.
//!
//! A scenario is a TOML document naming one experiment plus the transmon,
//! bath, evolution, pulse and sweep settings it consumes. Every run writes
//! its CSV tables and a `manifest.json` into one output directory.

mod experiments;

use crate::bath::BathSpec;
use crate::control::{DriveSpec, Envelope, HoldTiming};
use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::noise::NoiseCheckConfig;
use crate::transmon::{TransmonModel, TransmonSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "TRANSLEAK_OUT";
/// Output directory used when neither the command line, the scenario nor
/// [`OUTPUT_ENV`] name one.
pub const DEFAULT_OUTPUT: &str = "transleak-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Decay,
    Shorttime,
    LmaxSweep,
    TmaxSweep,
    Rabi,
    Leakmap,
    GateSweep,
    DragSweep,
    NoiseCheck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Cosine,
    SimpleNot,
    Drag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub pulse: PulseKind,
    /// Drive amplitude `Omega`.
    pub omega: f64,
    #[serde(default = "one")]
    pub carrier: f64,
    /// Gate time; `pi / Omega` when absent.
    pub t_g: Option<f64>,
    /// Ramp time at the base gate time, scaled along with `t_g` in sweeps;
    /// `t_g / 20` when absent.
    pub t_r: Option<f64>,
    #[serde(default)]
    pub timing: HoldTiming,
}

impl PulseSection {
    /// Drive at amplitude `omega` and gate time `t_g`, ramps scaled with `t_g`.
    pub fn drive(&self, omega: f64, t_g: f64) -> DriveSpec {
        let envelope = match self.pulse {
            PulseKind::Cosine => Envelope::Cosine,
            PulseKind::SimpleNot => Envelope::SimpleNot {
                t_g,
                t_r: self.t_r.map_or(t_g / 20.0, |r| r * t_g / self.default_t_g()),
                timing: self.timing,
            },
            PulseKind::Drag => Envelope::Drag { t_g },
        };
        DriveSpec {
            amplitude: omega,
            carrier: self.carrier,
            envelope,
        }
    }

    fn default_t_g(&self) -> f64 {
        self.t_g.unwrap_or(PI / self.omega)
    }

    pub fn base_drive(&self) -> DriveSpec {
        self.drive(self.omega, self.default_t_g())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub method: Option<Method>,
    /// Methods compared side by side (`shorttime`).
    pub methods: Option<Vec<Method>>,
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default = "one_usize")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one_usize")]
    pub save_every: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        EvolutionSection {
            method: None,
            methods: None,
            t_final: None,
            dt: None,
            n_trajectories: 1,
            master_seed: 0,
            save_every: 1,
        }
    }
}

/// Parameter grid; absent axes fall back to the single value of the base scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_levels: Option<Vec<usize>>,
    pub kappa: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub omega: Option<Vec<f64>>,
    pub ej_over_ec: Option<Vec<f64>>,
    /// Gate times as multiples of `pi / Omega`.
    pub t_g_scale: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: Experiment,
    #[serde(default)]
    pub title: Option<String>,
    pub transmon: TransmonSpec,
    pub bath: BathSpec,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub pulse: Option<PulseSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub noise: Option<NoiseCheckConfig>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Scenario {
    /// Parse a scenario; `origin` only labels diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.transmon.validate()?;
        self.bath.validate()?;
        let missing = |key: &str| Error::Config(format!("`{key}` is required for experiment {:?}", self.name));
        match self.name {
            Experiment::Rabi | Experiment::Leakmap | Experiment::GateSweep | Experiment::DragSweep => {
                let p = self.pulse.as_ref().ok_or_else(|| missing("pulse"))?;
                if !(p.omega > 0.0) {
                    return Err(Error::invalid("omega", "must be positive"));
                }
                p.base_drive().validate()?;
            }
            Experiment::Decay | Experiment::LmaxSweep | Experiment::TmaxSweep | Experiment::Shorttime => {
                if self.evolution.t_final.is_none() {
                    return Err(missing("evolution.t_final"));
                }
            }
            Experiment::NoiseCheck => {}
        }
        if self.evolution.n_trajectories == 0 {
            return Err(Error::invalid("n_trajectories", "need at least one"));
        }
        if self.evolution.save_every == 0 {
            return Err(Error::invalid("save_every", "must be at least 1"));
        }
        let s = &self.sweep;
        let empty = [
            s.n_levels.as_ref().is_some_and(|v| v.is_empty()),
            s.kappa.as_ref().is_some_and(|v| v.is_empty()),
            s.beta.as_ref().is_some_and(|v| v.is_empty()),
            s.omega.as_ref().is_some_and(|v| v.is_empty()),
            s.ej_over_ec.as_ref().is_some_and(|v| v.is_empty()),
            s.t_g_scale.as_ref().is_some_and(|v| v.is_empty()),
        ];
        if empty.iter().any(|&e| e) {
            return Err(Error::Config("sweep axes must not be empty".into()));
        }
        Ok(())
    }

    fn n_levels_axis(&self) -> Vec<usize> {
        self.sweep
            .n_levels
            .clone()
            .unwrap_or_else(|| vec![self.transmon.n_levels])
    }

    fn kappa_axis(&self) -> Vec<f64> {
        self.sweep.kappa.clone().unwrap_or_else(|| vec![self.bath.kappa])
    }

    fn beta_axis(&self) -> Vec<f64> {
        self.sweep.beta.clone().unwrap_or_else(|| vec![self.bath.beta])
    }

    fn omega_axis(&self) -> Vec<f64> {
        self.sweep
            .omega
            .clone()
            .unwrap_or_else(|| self.pulse.as_ref().map_or_else(Vec::new, |p| vec![p.omega]))
    }

    fn ej_axis(&self) -> Vec<f64> {
        self.sweep
            .ej_over_ec
            .clone()
            .unwrap_or_else(|| vec![self.transmon.ej_over_ec])
    }

    fn t_g_scale_axis(&self) -> Vec<f64> {
        self.sweep.t_g_scale.clone().unwrap_or_else(|| vec![1.0])
    }

    fn model(&self, n_levels: usize, ej_over_ec: f64) -> Result<TransmonModel> {
        let mut spec = self.transmon;
        spec.n_levels = n_levels;
        spec.ej_over_ec = ej_over_ec;
        spec.charge_cutoff = spec.charge_cutoff.max(n_levels + 5);
        TransmonModel::build(&spec)
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Outcome of a completed run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// `Some(false)` when the run finished but a built-in tolerance check failed.
    pub passed: Option<bool>,
    pub summary: Vec<String>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        match self.passed {
            Some(false) => 1,
            _ => 0,
        }
    }
}

/// Evaluate `worker` at every grid point in parallel; rows come back in grid order.
pub fn sweep_executor<P, R, F>(grid: &[P], worker: F) -> Result<Vec<R>>
where
    P: Sync,
    R: Send,
    F: Fn(&P) -> Result<R> + Sync,
{
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let results: Vec<Result<R>> = grid.par_iter().map(&worker).collect();
    let total = results.len();
    let failed = results.iter().filter(|r| r.is_err()).count();
    if failed > 0 {
        let first = results.into_iter().find_map(|r| r.err()).expect("one failure");
        return Err(Error::Sweep {
            failed,
            total,
            first: Box::new(first),
        });
    }
    results.into_iter().collect()
}

/// CSV tables and manifest of one run; removes what it wrote unless committed.
struct OutputSink {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl OutputSink {
    fn open(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        fs::write(&path, body)?;
        Ok(())
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.files)
    }
}

impl Drop for OutputSink {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// A CSV table built row by row with full-precision floats.
pub(crate) struct Table {
    text: String,
    width: usize,
}

impl Table {
    pub(crate) fn new(header: &[String]) -> Self {
        Table {
            text: header.join(",") + "\n",
            width: header.len(),
        }
    }

    pub(crate) fn row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.width);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub(crate) fn into_string(self) -> String {
        self.text
    }
}

/// Tables produced by an experiment, plus an optional pass/fail verdict.
pub(crate) struct Outcome {
    pub(crate) tables: Vec<(String, String)>,
    pub(crate) passed: Option<bool>,
    pub(crate) summary: Vec<String>,
    pub(crate) derived: serde_json::Value,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: Experiment,
    scenario_file: Option<String>,
    code_version: &'static str,
    master_seed: u64,
    threads: usize,
    started_unix_s: u64,
    wall_time_s: f64,
    passed: Option<bool>,
    parameters: &'a Scenario,
    derived: serde_json::Value,
    outputs: Vec<String>,
}

fn resolve_out_dir(scenario: &Scenario, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| scenario.output.dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

/// Run a parsed scenario and write its outputs.
pub fn run(scenario: &Scenario, origin: Option<&Path>, opts: &RunOptions) -> Result<RunReport> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.evolution.master_seed = seed;
        if let Some(n) = scenario.noise.as_mut() {
            n.master_seed = seed;
        }
    }
    scenario.validate()?;
    let out_dir = resolve_out_dir(&scenario, opts);
    let threads = opts.threads.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut sink = OutputSink::open(&out_dir)?;
    let outcome = pool.install(|| experiments::dispatch(&scenario))?;
    for (name, body) in &outcome.tables {
        sink.write(name, body)?;
    }
    let manifest = Manifest {
        experiment: scenario.name,
        scenario_file: origin.map(|p| p.display().to_string()),
        code_version: env!("CARGO_PKG_VERSION"),
        master_seed: scenario.evolution.master_seed,
        threads,
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        passed: outcome.passed,
        parameters: &scenario,
        derived: outcome.derived,
        outputs: outcome.tables.iter().map(|(n, _)| n.clone()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    sink.write("manifest.json", &(json + "\n"))?;
    Ok(RunReport {
        out_dir,
        files: sink.commit(),
        passed: outcome.passed,
        summary: outcome.summary,
    })
}

/// Load and run a scenario file.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let scenario = Scenario::load(path)?;
    run(&scenario, Some(path), opts)
}

//! Reduced-density-matrix propagation: von Neumann, Lindblad, Redfield and
//! the two stochastic unravelings (full two-noise form and its high-cutoff
//! single-noise limit).

pub mod generators;
pub mod integrator;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::linalg::{CMat, Superoperator, C64};
use crate::noise::{NoiseGenerator, NoisePath, NoiseSpectrum};
use crate::transmon::TransmonModel;
use integrator::{rk4_step, Generator, StageNoise, Workspace};
pub use integrator::{Coefficient, Drive, DriveTerm};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

/// Trajectories per work unit of the ensemble reduction.
pub const ENSEMBLE_CHUNK: usize = 64;
/// `|rho|_max` above which a stochastic trajectory counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Largest tolerated fraction of resampled trajectories.
pub const MAX_RESAMPLE_FRACTION: f64 = 1e-3;
const RESAMPLE_STREAM_BASE: u64 = 1 << 48;
const MAX_ATTEMPTS: u64 = 16;

/// Equation of motion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    VonNeumann,
    Lindblad,
    Redfield,
    Sled,
    Sln,
}

impl Method {
    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Sled | Method::Sln)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::VonNeumann => "von_neumann",
            Method::Lindblad => "lindblad",
            Method::Redfield => "redfield",
            Method::Sled => "sled",
            Method::Sln => "sln",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "von_neumann" => Method::VonNeumann,
            "lindblad" => Method::Lindblad,
            "redfield" => Method::Redfield,
            "sled" => Method::Sled,
            "sln" => Method::Sln,
            other => return Err(Error::invalid("method", format!("unknown method `{other}`"))),
        })
    }
}

/// Hermitian, unit-trace `N x N` state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    data: CMat,
}

impl DensityMatrix {
    pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
    pub const TRACE_TOLERANCE: f64 = 1e-8;

    pub fn new(data: CMat) -> Result<Self> {
        let defect = data.hermiticity_defect();
        if defect > Self::HERMITICITY_TOLERANCE {
            return Err(Error::invalid("rho", format!("not Hermitian (defect {defect:.2e})")));
        }
        let tr = data.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > Self::TRACE_TOLERANCE {
            return Err(Error::invalid("rho", format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix { data })
    }

    /// `|k><k|` in `n` levels.
    pub fn basis_state(n: usize, k: usize) -> Self {
        DensityMatrix {
            data: CMat::basis_projector(n, k),
        }
    }

    /// `|psi><psi|` for a normalized copy of `psi`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("psi", "zero vector"));
        }
        let n = psi.len();
        Ok(DensityMatrix {
            data: CMat::from_fn(n, |r, c| psi[r] * psi[c].conj() / (norm * norm)),
        })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    pub fn population(&self, k: usize) -> f64 {
        self.data[(k, k)].re
    }
}

fn default_one() -> usize {
    1
}

/// Propagation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    pub method: Method,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "default_one")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Keep every `save_every`-th step (the final step is always kept).
    #[serde(default = "default_one")]
    pub save_every: usize,
}

impl EvolutionSpec {
    pub fn new(method: Method, t_final: f64, dt: f64) -> Self {
        EvolutionSpec {
            method,
            t_final,
            dt,
            n_trajectories: 1,
            master_seed: 0,
            save_every: 1,
        }
    }

    pub fn with_trajectories(mut self, n: usize, master_seed: u64) -> Self {
        self.n_trajectories = n;
        self.master_seed = master_seed;
        self
    }

    pub fn with_save_every(mut self, stride: usize) -> Self {
        self.save_every = stride;
        self
    }

    /// Largest admissible step for this model and bath.
    pub fn max_dt(&self, model: &TransmonModel, bath: &BathSpec) -> f64 {
        let mut limit = 0.05 * 2.0 * PI / model.max_splitting();
        if self.method != Method::VonNeumann {
            limit = limit.min(0.1 * 2.0 * PI / bath.cutoff);
        }
        limit
    }

    pub fn validate(&self, model: &TransmonModel, bath: &BathSpec) -> Result<()> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::invalid("t_final", "must be positive and finite"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let limit = self.max_dt(model, bath);
        if self.dt > limit {
            return Err(Error::invalid(
                "dt",
                format!("{} exceeds the stability limit {limit:.4e}", self.dt),
            ));
        }
        if self.n_trajectories == 0 {
            return Err(Error::invalid("n_trajectories", "need at least one"));
        }
        if self.save_every == 0 {
            return Err(Error::invalid("save_every", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps and the step actually used (`<= dt`, landing on `t_final`).
    pub fn grid(&self) -> (usize, f64) {
        let n = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

/// Saved states of a run; for stochastic methods the ensemble mean with
/// standard errors (real and imaginary parts packed into one complex matrix).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub stderr: Option<Vec<CMat>>,
    pub method: Method,
    pub seed: u64,
    pub n_trajectories: usize,
    pub resampled: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.dim())
    }

    pub fn population(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[(k, k)].re).collect()
    }

    pub fn population_stderr(&self, k: usize) -> Option<Vec<f64>> {
        self.stderr.as_ref().map(|se| se.iter().map(|s| s[(k, k)].re).collect())
    }

    pub fn final_state(&self) -> &CMat {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// Columns `t`, `re_rho_nm`, `im_rho_nm` (n <= m), then `se_*` when present.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let n = self.dim();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
        let mut header = vec!["t".to_string()];
        for &(a, b) in &pairs {
            header.push(format!("re_rho_{a}{b}"));
            header.push(format!("im_rho_{a}{b}"));
        }
        if self.stderr.is_some() {
            for &(a, b) in &pairs {
                header.push(format!("se_re_rho_{a}{b}"));
                header.push(format!("se_im_rho_{a}{b}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            let s = &self.states[i];
            for &(a, b) in &pairs {
                row.push(s[(a, b)].re.to_string());
                row.push(s[(a, b)].im.to_string());
            }
            if let Some(se) = &self.stderr {
                for &(a, b) in &pairs {
                    row.push(se[i][(a, b)].re.to_string());
                    row.push(se[i][(a, b)].im.to_string());
                }
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Time-independent generator part and noise coupling for a method.
pub struct Propagator {
    method: Method,
    base: Superoperator,
    coupling: CMat,
    n: usize,
}

impl Propagator {
    pub fn new(model: &TransmonModel, bath: &BathSpec, method: Method) -> Self {
        let base = match method {
            Method::VonNeumann => generators::hamiltonian_superoperator(&model.hamiltonian()),
            Method::Lindblad => generators::lindblad_generator(model, bath),
            Method::Redfield => generators::redfield_generator(model, bath),
            Method::Sled => generators::sled_drift(model, bath),
            Method::Sln => {
                let h = model.hamiltonian().add(&generators::counterterm(model, bath));
                generators::hamiltonian_superoperator(&h)
            }
        };
        Propagator {
            method,
            base,
            coupling: model.coupling(),
            n: model.n_levels(),
        }
    }

    /// Closed-system propagator for an arbitrary static Hamiltonian.
    pub fn closed(h0: &CMat) -> Self {
        Propagator {
            method: Method::VonNeumann,
            base: generators::hamiltonian_superoperator(h0),
            coupling: CMat::zeros(h0.dim()),
            n: h0.dim(),
        }
    }

    pub fn base(&self) -> &Superoperator {
        &self.base
    }

    /// Run one realization; `noise` must hold `2 n_steps + 1` stage samples.
    fn run(
        &self,
        drive: Option<&Drive>,
        rho0: &CMat,
        n_steps: usize,
        dt: f64,
        save_every: usize,
        noise: Option<&NoisePath>,
        mut visit: impl FnMut(usize, &CMat),
    ) -> Result<()> {
        let gen = Generator {
            base: &self.base,
            drive,
            coupling: noise.map(|_| &self.coupling),
        };
        let mut ws = Workspace::new(self.n);
        let mut rho = rho0.clone();
        let mut slot = 0;
        visit(slot, &rho);
        let mut stage = StageNoise::default();
        for step in 0..n_steps {
            let t = step as f64 * dt;
            if let Some(p) = noise {
                for j in 0..3 {
                    stage.xi[j] = p.xi[2 * step + j];
                    if !p.nu.is_empty() {
                        stage.nu[j] = p.nu[2 * step + j];
                    }
                }
            }
            rk4_step(&gen, t, dt, &mut rho, &stage, &mut ws);
            let t_next = t + dt;
            match self.method {
                Method::Sln => {
                    let norm = rho.max_abs();
                    if !(norm <= DIVERGENCE_NORM) {
                        return Err(Error::TrajectoryDiverged { time: t_next, norm });
                    }
                }
                Method::Sled => {
                    let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
                    if drift > 1e-6 {
                        return Err(Error::Step {
                            time: t_next,
                            reason: format!("trace drift {drift:.2e}"),
                        });
                    }
                    rho.make_hermitian();
                }
                _ => {
                    let defect = rho.hermiticity_defect();
                    if defect > 1e-8 {
                        return Err(Error::Step {
                            time: t_next,
                            reason: format!("Hermiticity defect {defect:.2e}"),
                        });
                    }
                    rho.make_hermitian();
                }
            }
            if (step + 1) % save_every == 0 || step + 1 == n_steps {
                slot += 1;
                visit(slot, &rho);
            }
        }
        Ok(())
    }
}

fn save_times(n_steps: usize, dt: f64, save_every: usize) -> Vec<f64> {
    let mut times = vec![0.0];
    for step in 0..n_steps {
        if (step + 1) % save_every == 0 || step + 1 == n_steps {
            times.push((step + 1) as f64 * dt);
        }
    }
    times
}

/// Propagate a closed system `H_0 + drive` (any static `H_0`, e.g. a rotating-frame one).
pub fn evolve_closed(
    h0: &CMat,
    drive: Option<&Drive>,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    save_every: usize,
) -> Result<Trajectory> {
    if rho0.dim() != h0.dim() {
        return Err(Error::Dimension {
            expected: h0.dim(),
            actual: rho0.dim(),
        });
    }
    let spec = EvolutionSpec::new(Method::VonNeumann, t_final, dt).with_save_every(save_every.max(1));
    let (n_steps, step) = spec.grid();
    let prop = Propagator::closed(h0);
    let mut states = Vec::new();
    prop.run(drive, rho0.matrix(), n_steps, step, spec.save_every, None, |_, r| {
        states.push(r.clone())
    })?;
    Ok(Trajectory {
        times: save_times(n_steps, step, spec.save_every),
        states,
        stderr: None,
        method: Method::VonNeumann,
        seed: 0,
        n_trajectories: 1,
        resampled: 0,
    })
}

#[derive(Clone)]
struct EnsembleSum {
    count: usize,
    resampled: usize,
    sum: Vec<CMat>,
    sq_re: Vec<Vec<f64>>,
    sq_im: Vec<Vec<f64>>,
}

impl EnsembleSum {
    fn new(slots: usize, n: usize) -> Self {
        EnsembleSum {
            count: 0,
            resampled: 0,
            sum: vec![CMat::zeros(n); slots],
            sq_re: vec![vec![0.0; n * n]; slots],
            sq_im: vec![vec![0.0; n * n]; slots],
        }
    }

    fn add_state(&mut self, slot: usize, rho: &CMat) {
        self.sum[slot].axpy(C64::new(1.0, 0.0), rho);
        for (i, z) in rho.as_slice().iter().enumerate() {
            self.sq_re[slot][i] += z.re * z.re;
            self.sq_im[slot][i] += z.im * z.im;
        }
    }

    fn merge(mut self, other: EnsembleSum) -> Self {
        self.count += other.count;
        self.resampled += other.resampled;
        for s in 0..self.sum.len() {
            self.sum[s].axpy(C64::new(1.0, 0.0), &other.sum[s]);
            for i in 0..self.sq_re[s].len() {
                self.sq_re[s][i] += other.sq_re[s][i];
                self.sq_im[s][i] += other.sq_im[s][i];
            }
        }
        self
    }
}

/// In-order pairwise reduction, independent of how the parts were computed.
fn pairwise(mut parts: Vec<EnsembleSum>) -> EnsembleSum {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        parts = next;
    }
    parts.pop().expect("at least one part")
}

/// Propagate `rho0` under `spec.method`, optionally with a drive.
pub fn evolve(
    model: &TransmonModel,
    bath: &BathSpec,
    drive: Option<&Drive>,
    rho0: &DensityMatrix,
    spec: &EvolutionSpec,
) -> Result<Trajectory> {
    bath.validate()?;
    spec.validate(model, bath)?;
    if rho0.dim() != model.n_levels() {
        return Err(Error::Dimension {
            expected: model.n_levels(),
            actual: rho0.dim(),
        });
    }
    let (n_steps, dt) = spec.grid();
    let times = save_times(n_steps, dt, spec.save_every);
    let prop = Propagator::new(model, bath, spec.method);

    if !spec.method.is_stochastic() {
        let mut states = Vec::with_capacity(times.len());
        prop.run(drive, rho0.matrix(), n_steps, dt, spec.save_every, None, |_, r| {
            states.push(r.clone())
        })?;
        return Ok(Trajectory {
            times,
            states,
            stderr: None,
            method: spec.method,
            seed: spec.master_seed,
            n_trajectories: 1,
            resampled: 0,
        });
    }

    let (spectrum, with_nu) = match spec.method {
        Method::Sled => (NoiseSpectrum::Quantum, false),
        _ => (NoiseSpectrum::Full, true),
    };
    let noise = NoiseGenerator::new(bath, 2 * n_steps + 1, 0.5 * dt, spectrum, with_nu, spec.master_seed)?;
    let n = model.n_levels();
    let slots = times.len();
    let total = spec.n_trajectories;
    let n_chunks = total.div_ceil(ENSEMBLE_CHUNK);

    let parts: Vec<Result<EnsembleSum>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = EnsembleSum::new(slots, n);
            let lo = chunk * ENSEMBLE_CHUNK;
            let hi = (lo + ENSEMBLE_CHUNK).min(total);
            let mut states = vec![CMat::zeros(n); slots];
            for index in lo..hi {
                let mut attempt = 0;
                loop {
                    let stream = if attempt == 0 {
                        index as u64
                    } else {
                        RESAMPLE_STREAM_BASE + index as u64 * MAX_ATTEMPTS + attempt
                    };
                    let path = noise.sample(stream);
                    let outcome = prop.run(
                        drive,
                        rho0.matrix(),
                        n_steps,
                        dt,
                        spec.save_every,
                        Some(&path),
                        |s, r| states[s].copy_from(r),
                    );
                    match outcome {
                        Ok(()) => break,
                        Err(Error::TrajectoryDiverged { .. }) if attempt + 1 < MAX_ATTEMPTS => {
                            attempt += 1;
                            acc.resampled += 1;
                        }
                        Err(e) => return Err(e),
                    }
                }
                for (s, rho) in states.iter().enumerate() {
                    acc.add_state(s, rho);
                }
                acc.count += 1;
            }
            Ok(acc)
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let total_sum = pairwise(parts);

    if total_sum.resampled as f64 > MAX_RESAMPLE_FRACTION * total as f64 {
        return Err(Error::ResampleRate {
            resampled: total_sum.resampled,
            total,
        });
    }

    let nf = total as f64;
    let mut states = Vec::with_capacity(slots);
    let mut stderr = Vec::with_capacity(slots);
    for s in 0..slots {
        let mean = total_sum.sum[s].scaled(C64::new(1.0 / nf, 0.0));
        let se = CMat::from_fn(n, |r, c| {
            let i = r * n + c;
            let m = mean[(r, c)];
            let var = |sq: f64, mu: f64| {
                if total < 2 {
                    0.0
                } else {
                    ((sq - nf * mu * mu) / (nf - 1.0)).max(0.0) / nf
                }
            };
            C64::new(
                var(total_sum.sq_re[s][i], m.re).sqrt(),
                var(total_sum.sq_im[s][i], m.im).sqrt(),
            )
        });
        states.push(mean);
        stderr.push(se);
    }
    Ok(Trajectory {
        times,
        states,
        stderr: Some(stderr),
        method: spec.method,
        seed: spec.master_seed,
        n_trajectories: total,
        resampled: total_sum.resampled,
    })
}

//! Gaussian noise paths for the stochastic Liouville equations.
//!
//! Paths are drawn on a uniform grid of spacing `h` through a circulant
//! embedding of size `M >= 4 n` (a power of two). Independent white sequences
//! `w1`, `w2` are filtered in the frequency domain:
//!
//! ```text
//! xi = G * w1                 G_k = sqrt(P_fold(w_k) / h)
//! nu = H * w1 + i H * w2      G_k H_k = DFT^-1[ i Theta(t) Im C(t) ]_k
//! ```
//!
//! `P_fold` is the aliased (folded) symmetric spectrum, which makes the grid
//! covariance of `xi` the sampled `Re C(t)` rather than a Riemann-sum
//! approximation of it. The shared channel `w1` produces the causal
//! cross-correlation, and the `i H * w2` channel cancels `<nu nu>`.

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::linalg::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Minimum ratio between the embedding size and the number of samples used.
pub const PADDING_FACTOR: usize = 4;

/// Which part of the bath fluctuation spectrum the real noise carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpectrum {
    /// `J(w) coth(beta w / 2)`, the full `Re C(t)`.
    Full,
    /// Full spectrum minus its classical white limit; the remainder is
    /// handled deterministically by the high-cutoff propagator.
    Quantum,
}

/// One realization of `(xi, nu)` on the grid `t_k = k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub dt: f64,
    pub xi: Vec<f64>,
    /// Empty when the generator was built without the `nu` channel.
    pub nu: Vec<C64>,
    pub seed: u64,
    pub stream: u64,
}

impl NoisePath {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn zeros(n: usize, dt: f64, with_nu: bool) -> Self {
        NoisePath {
            dt,
            xi: vec![0.0; n],
            nu: if with_nu {
                vec![C64::new(0.0, 0.0); n]
            } else {
                Vec::new()
            },
            seed: 0,
            stream: 0,
        }
    }
}

/// Target correlators for a `(xi, nu)` pair at lags `k * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseContract {
    pub dt: f64,
    /// `<xi(t) xi(0)> = Re C(t)`.
    pub target_xixi: Vec<f64>,
    /// `<xi(t) nu(0)> = i Theta(t) Im C(t)` for `t >= 0`; the `t < 0` branch is zero.
    pub target_xinu: Vec<C64>,
    /// `<nu(t) nu(0)> = 0`.
    pub target_nunu: Vec<C64>,
}

impl NoiseContract {
    pub fn from_table(table: &crate::bath::CorrelationTable) -> Self {
        NoiseContract {
            dt: table.dt,
            target_xixi: table.re_c.clone(),
            target_xinu: table.im_c.iter().map(|&im| C64::new(0.0, im)).collect(),
            target_nunu: vec![C64::new(0.0, 0.0); table.len()],
        }
    }
}

/// Frequency-domain white-noise coefficients (DFT of a real white sequence).
#[derive(Clone, Debug)]
pub struct WhiteCoefficients {
    pub values: Vec<C64>,
}

/// Reusable filter bank for one `(bath, grid)` combination.
pub struct NoiseGenerator {
    spacing: f64,
    n_samples: usize,
    embedding: usize,
    xi_filter: Vec<f64>,
    nu_filter: Option<Vec<C64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    master_seed: u64,
    silent: bool,
}

impl std::fmt::Debug for NoiseGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseGenerator")
            .field("spacing", &self.spacing)
            .field("n_samples", &self.n_samples)
            .field("embedding", &self.embedding)
            .field("with_nu", &self.nu_filter.is_some())
            .finish()
    }
}

/// Angular frequency of DFT bin `k` for an `m`-point grid of spacing `h`.
fn bin_frequency(k: usize, m: usize, h: f64) -> f64 {
    let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
    2.0 * PI * kk / (m as f64 * h)
}

/// `sum_j f(w + j * period)` over enough images that the remainder is below
/// a part in `1e8` of the head for spectra decaying as `w^-3`.
fn fold(f: impl Fn(f64) -> f64, w: f64, period: f64, reach: f64) -> f64 {
    let images = (reach / period).ceil() as i64;
    let mut acc = f(w);
    for j in 1..=images {
        let jf = j as f64 * period;
        acc += f(w + jf) + f(w - jf);
    }
    acc
}

impl NoiseGenerator {
    /// Build filters for paths of `n_samples` points spaced by `spacing`.
    pub fn new(
        bath: &BathSpec,
        n_samples: usize,
        spacing: f64,
        spectrum: NoiseSpectrum,
        with_nu: bool,
        master_seed: u64,
    ) -> Result<Self> {
        bath.validate()?;
        if !(spacing > 0.0) || spacing >= PI / bath.cutoff {
            return Err(Error::invalid(
                "dt",
                format!("noise spacing {spacing} must resolve the cutoff (< pi / w_c)"),
            ));
        }
        if n_samples == 0 {
            return Err(Error::invalid("n_steps", "need at least one sample"));
        }
        let m = (PADDING_FACTOR * n_samples).next_power_of_two().max(8);
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);

        let period = 2.0 * PI / spacing;
        let reach = 4000.0 * bath.cutoff;
        let silent = bath.kappa == 0.0;

        // xi filter from the folded symmetric spectrum P(w) = S_sym(w) / 2
        let half_spectrum = |w: f64| match spectrum {
            NoiseSpectrum::Full => 0.5 * bath.symmetrized_spectrum(w),
            NoiseSpectrum::Quantum => 0.5 * bath.quantum_spectrum(w),
        };
        let mut xi_filter = vec![0.0; m];
        for (k, g) in xi_filter.iter_mut().enumerate() {
            if silent {
                break;
            }
            let p = fold(half_spectrum, bin_frequency(k, m, spacing), period, reach);
            if p < 0.0 {
                // tolerate round-off at exact zeros of the spectrum
                if p < -1e-14 * bath.kappa * bath.cutoff * bath.cutoff {
                    return Err(Error::Embedding { bin: k, weight: p });
                }
                continue;
            }
            *g = (p / spacing).sqrt();
        }

        let nu_filter = if with_nu {
            Some(Self::causal_filter(
                bath, &xi_filter, m, spacing, period, reach, &*forward, &*inverse, silent,
            ))
        } else {
            None
        };

        Ok(NoiseGenerator {
            spacing,
            n_samples,
            embedding: m,
            xi_filter,
            nu_filter,
            forward,
            inverse,
            master_seed,
            silent,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn causal_filter(
        bath: &BathSpec,
        xi_filter: &[f64],
        m: usize,
        h: f64,
        period: f64,
        reach: f64,
        _forward: &dyn Fft<f64>,
        inverse: &dyn Fft<f64>,
        silent: bool,
    ) -> Vec<C64> {
        if silent {
            return vec![C64::new(0.0, 0.0); m];
        }
        // Im C on the grid: (1/(M h)) sum_k (i/2) J_fold(w_k) e^{2 pi i k m / M}
        let mut buf: Vec<C64> = (0..m)
            .map(|k| {
                let w = bin_frequency(k, m, h);
                let j = if k == m / 2 {
                    0.0
                } else {
                    fold(|x| bath.spectral_density(x), w, period, reach)
                };
                C64::new(0.0, 0.5 * j)
            })
            .collect();
        inverse.process(&mut buf);
        let scale = 1.0 / (m as f64 * h);
        // causal target T_m = i Im C(m h) for 0 <= m < M/2, zero otherwise
        let mut target: Vec<C64> = buf
            .iter()
            .enumerate()
            .map(|(idx, z)| {
                if idx < m / 2 {
                    C64::new(0.0, z.re * scale)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        // U_k = sum_m T_m e^{+2 pi i k m / M}
        inverse.process(&mut target);
        target
            .iter()
            .zip(xi_filter)
            .map(|(u, &g)| if g > 0.0 { u / g } else { C64::new(0.0, 0.0) })
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn embedding_size(&self) -> usize {
        self.embedding
    }

    pub fn has_nu(&self) -> bool {
        self.nu_filter.is_some()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// White coefficients for one stream: DFT of `M` standard normals.
    pub fn white_coefficients(&self, rng: &mut ChaCha8Rng) -> WhiteCoefficients {
        let mut values: Vec<C64> = (0..self.embedding)
            .map(|_| C64::new(StandardNormal.sample(rng), 0.0))
            .collect();
        self.forward.process(&mut values);
        WhiteCoefficients { values }
    }

    fn filtered(&self, filter: impl Fn(usize) -> C64, coeffs: &WhiteCoefficients) -> Vec<C64> {
        let mut buf: Vec<C64> = coeffs.values.iter().enumerate().map(|(k, w)| filter(k) * w).collect();
        self.inverse.process(&mut buf);
        let norm = 1.0 / self.embedding as f64;
        buf.truncate(self.n_samples);
        buf.iter_mut().for_each(|z| *z *= norm);
        buf
    }

    /// `xi` samples driven by the given white coefficients.
    pub fn xi_from(&self, w1: &WhiteCoefficients) -> Vec<f64> {
        self.filtered(|k| C64::new(self.xi_filter[k], 0.0), w1)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// `nu` samples from the shared channel `w1` and the compensation channel `w2`.
    pub fn nu_from(&self, w1: &WhiteCoefficients, w2: &WhiteCoefficients) -> Result<Vec<C64>> {
        let h = self
            .nu_filter
            .as_ref()
            .ok_or_else(|| Error::invalid("nu", "generator built without the nu channel"))?;
        let combined = WhiteCoefficients {
            values: w1
                .values
                .iter()
                .zip(&w2.values)
                .map(|(a, b)| a + C64::new(0.0, 1.0) * b)
                .collect(),
        };
        Ok(self.filtered(|k| h[k], &combined))
    }

    /// RNG for trajectory stream `stream`: counter-based, independent of thread scheduling.
    pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        rng
    }

    /// Draw the path for trajectory stream `stream`.
    pub fn sample(&self, stream: u64) -> NoisePath {
        if self.silent {
            let mut p = NoisePath::zeros(self.n_samples, self.spacing, self.has_nu());
            p.seed = self.master_seed;
            p.stream = stream;
            return p;
        }
        let mut rng = Self::stream_rng(self.master_seed, stream);
        let w1 = self.white_coefficients(&mut rng);
        let xi = self.xi_from(&w1);
        let nu = if self.has_nu() {
            let w2 = self.white_coefficients(&mut rng);
            self.nu_from(&w1, &w2).expect("nu channel present")
        } else {
            Vec::new()
        };
        NoisePath {
            dt: self.spacing,
            xi,
            nu,
            seed: self.master_seed,
            stream,
        }
    }

    /// Exact covariances of the discrete model at lags `0..n_lags`:
    /// `(<xi(k) xi(0)>, <xi(k) nu(0)>, <xi(0) nu(k)>)`.
    pub fn model_covariances(&self, n_lags: usize) -> (Vec<f64>, Vec<C64>, Vec<C64>) {
        let m = self.embedding;
        let mut xixi: Vec<C64> = self.xi_filter.iter().map(|g| C64::new(g * g, 0.0)).collect();
        self.inverse.process(&mut xixi);
        let xixi: Vec<f64> = xixi.iter().take(n_lags).map(|z| z.re / m as f64).collect();
        let zero = vec![C64::new(0.0, 0.0); n_lags];
        let Some(h) = &self.nu_filter else {
            return (xixi, zero.clone(), zero);
        };
        // E[xi_n nu_n'] = (1/M) sum_k g_k h_k e^{2 pi i k (n' - n)/M}
        let mut cross: Vec<C64> = self.xi_filter.iter().zip(h).map(|(g, hk)| hk * *g).collect();
        self.inverse.process(&mut cross);
        let causal = (0..n_lags).map(|k| cross[(m - k) % m] / m as f64).collect();
        let anticausal = (0..n_lags).map(|k| cross[k] / m as f64).collect();
        (xixi, causal, anticausal)
    }
}

/// Real noise with `<xi xi> = Re C` on `n_steps` points; also returns the
/// white coefficients so a correlated `nu` can be built from them.
pub fn synthesize_xi(bath: &BathSpec, n_steps: usize, dt: f64, seed: u64) -> Result<(Vec<f64>, WhiteCoefficients)> {
    let gen = NoiseGenerator::new(bath, n_steps, dt, NoiseSpectrum::Full, false, seed)?;
    let mut rng = NoiseGenerator::stream_rng(seed, 0);
    let w1 = gen.white_coefficients(&mut rng);
    Ok((gen.xi_from(&w1), w1))
}

/// Complex noise correlated with the `xi` built from `xi_coefficients`.
pub fn synthesize_nu(
    bath: &BathSpec,
    xi_coefficients: &WhiteCoefficients,
    n_steps: usize,
    dt: f64,
    seed2: u64,
) -> Result<Vec<C64>> {
    let gen = NoiseGenerator::new(bath, n_steps, dt, NoiseSpectrum::Full, true, seed2)?;
    if xi_coefficients.values.len() != gen.embedding_size() {
        return Err(Error::Dimension {
            expected: gen.embedding_size(),
            actual: xi_coefficients.values.len(),
        });
    }
    let mut rng = NoiseGenerator::stream_rng(seed2, 1);
    let w2 = gen.white_coefficients(&mut rng);
    gen.nu_from(xi_coefficients, &w2)
}

/// Lag layout for [`CorrelationAccumulator`]: lags `k * lag_stride` for
/// `k < n_lags`, averaged over `n_refs` reference points spaced `ref_stride`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LagPlan {
    pub n_lags: usize,
    pub lag_stride: usize,
    pub n_refs: usize,
    pub ref_stride: usize,
}

impl LagPlan {
    /// Samples a path must hold for this plan.
    pub fn required_samples(&self) -> usize {
        (self.n_lags - 1) * self.lag_stride + (self.n_refs - 1) * self.ref_stride + 1
    }
}

#[derive(Clone, Debug, Default)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Moments {
    fn new(n: usize) -> Self {
        Moments {
            sum: vec![0.0; n],
            sum_sq: vec![0.0; n],
        }
    }
    fn push(&mut self, k: usize, x: f64) {
        self.sum[k] += x;
        self.sum_sq[k] += x * x;
    }
    fn merge(&mut self, other: &Moments) {
        for k in 0..self.sum.len() {
            self.sum[k] += other.sum[k];
            self.sum_sq[k] += other.sum_sq[k];
        }
    }
    /// Mean and delete-one jackknife standard error (for a sample mean the
    /// jackknife reduces to `s / sqrt(n)`).
    fn finish(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let nf = n as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / nf).collect();
        let se = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| {
                if n < 2 {
                    return 0.0;
                }
                let var = ((sq - nf * m * m) / (nf - 1.0)).max(0.0);
                (var / nf).sqrt()
            })
            .collect();
        (mean, se)
    }
}

/// Streaming estimator of the three noise correlators.
#[derive(Clone, Debug)]
pub struct CorrelationAccumulator {
    plan: LagPlan,
    count: usize,
    xixi: Moments,
    xinu_re: Moments,
    xinu_im: Moments,
    nuxi_re: Moments,
    nuxi_im: Moments,
    nunu_re: Moments,
    nunu_im: Moments,
}

/// Ensemble means and standard errors at lags `k * lag_stride * dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCorrelations {
    pub times: Vec<f64>,
    pub ensemble_size: usize,
    pub xixi: Vec<f64>,
    pub xixi_se: Vec<f64>,
    /// `<xi(t) nu(0)>`, the causal branch.
    pub xinu: Vec<C64>,
    pub xinu_se: Vec<C64>,
    /// `<xi(0) nu(t)>`, the anticausal branch.
    pub nuxi: Vec<C64>,
    pub nuxi_se: Vec<C64>,
    pub nunu: Vec<C64>,
    pub nunu_se: Vec<C64>,
}

impl CorrelationAccumulator {
    pub fn new(plan: LagPlan) -> Self {
        let n = plan.n_lags;
        CorrelationAccumulator {
            plan,
            count: 0,
            xixi: Moments::new(n),
            xinu_re: Moments::new(n),
            xinu_im: Moments::new(n),
            nuxi_re: Moments::new(n),
            nuxi_im: Moments::new(n),
            nunu_re: Moments::new(n),
            nunu_im: Moments::new(n),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, path: &NoisePath) -> Result<()> {
        let need = self.plan.required_samples();
        if path.len() < need {
            return Err(Error::Dimension {
                expected: need,
                actual: path.len(),
            });
        }
        let has_nu = !path.nu.is_empty();
        let refs = self.plan.n_refs as f64;
        for k in 0..self.plan.n_lags {
            let lag = k * self.plan.lag_stride;
            let mut xx = 0.0;
            let mut xn = C64::new(0.0, 0.0);
            let mut nx = C64::new(0.0, 0.0);
            let mut nn = C64::new(0.0, 0.0);
            for r in 0..self.plan.n_refs {
                let t0 = r * self.plan.ref_stride;
                xx += path.xi[t0 + lag] * path.xi[t0];
                if has_nu {
                    xn += path.nu[t0] * path.xi[t0 + lag];
                    nx += path.nu[t0 + lag] * path.xi[t0];
                    nn += path.nu[t0 + lag] * path.nu[t0];
                }
            }
            self.xixi.push(k, xx / refs);
            self.xinu_re.push(k, xn.re / refs);
            self.xinu_im.push(k, xn.im / refs);
            self.nuxi_re.push(k, nx.re / refs);
            self.nuxi_im.push(k, nx.im / refs);
            self.nunu_re.push(k, nn.re / refs);
            self.nunu_im.push(k, nn.im / refs);
        }
        self.count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &CorrelationAccumulator) {
        self.count += other.count;
        self.xixi.merge(&other.xixi);
        self.xinu_re.merge(&other.xinu_re);
        self.xinu_im.merge(&other.xinu_im);
        self.nuxi_re.merge(&other.nuxi_re);
        self.nuxi_im.merge(&other.nuxi_im);
        self.nunu_re.merge(&other.nunu_re);
        self.nunu_im.merge(&other.nunu_im);
    }

    pub fn finish(&self, dt: f64) -> EmpiricalCorrelations {
        let n = self.count.max(1);
        let pair = |re: &Moments, im: &Moments| {
            let (mr, sr) = re.finish(n);
            let (mi, si) = im.finish(n);
            (
                mr.iter().zip(&mi).map(|(a, b)| C64::new(*a, *b)).collect::<Vec<_>>(),
                sr.iter().zip(&si).map(|(a, b)| C64::new(*a, *b)).collect::<Vec<_>>(),
            )
        };
        let (xixi, xixi_se) = self.xixi.finish(n);
        let (xinu, xinu_se) = pair(&self.xinu_re, &self.xinu_im);
        let (nuxi, nuxi_se) = pair(&self.nuxi_re, &self.nuxi_im);
        let (nunu, nunu_se) = pair(&self.nunu_re, &self.nunu_im);
        EmpiricalCorrelations {
            times: (0..self.plan.n_lags)
                .map(|k| (k * self.plan.lag_stride) as f64 * dt)
                .collect(),
            ensemble_size: self.count,
            xixi,
            xixi_se,
            xinu,
            xinu_se,
            nuxi,
            nuxi_se,
            nunu,
            nunu_se,
        }
    }
}

/// Ensemble estimators over an in-memory set of paths (single reference time).
pub fn estimate_correlations(paths: &[NoisePath], n_lags: usize) -> Result<EmpiricalCorrelations> {
    let Some(first) = paths.first() else {
        return Err(Error::invalid("paths", "empty ensemble"));
    };
    let mut acc = CorrelationAccumulator::new(LagPlan {
        n_lags,
        lag_stride: 1,
        n_refs: 1,
        ref_stride: 1,
    });
    for p in paths {
        acc.push(p)?;
    }
    Ok(acc.finish(first.dt))
}

/// Settings of an empirical check of the three noise correlators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseCheckConfig {
    pub n_paths: usize,
    /// Grid spacing of the synthesized paths.
    pub dt: f64,
    /// Largest lag of the coarse table.
    pub t_max: f64,
    /// Lag spacing of the coarse table.
    pub lag_step: f64,
    /// Number of lags, at spacing `dt`, of the fine table near the origin.
    pub fine_lags: usize,
    /// Reference times averaged per path.
    pub n_refs: usize,
    pub master_seed: u64,
}

impl Default for NoiseCheckConfig {
    fn default() -> Self {
        NoiseCheckConfig {
            n_paths: 100_000,
            dt: 0.01,
            t_max: 10.0,
            lag_step: 0.2,
            fine_lags: 40,
            n_refs: 32,
            master_seed: 0,
        }
    }
}

impl NoiseCheckConfig {
    fn plans(&self) -> Result<(LagPlan, LagPlan)> {
        if self.n_paths < 2 || self.n_refs == 0 || self.fine_lags == 0 {
            return Err(Error::invalid(
                "noise",
                "need n_paths >= 2, n_refs >= 1 and fine_lags >= 1",
            ));
        }
        if !(self.dt > 0.0) || !(self.lag_step >= self.dt) || !(self.t_max >= self.lag_step) {
            return Err(Error::invalid("noise", "need 0 < dt <= lag_step <= t_max"));
        }
        let stride = (self.lag_step / self.dt).round() as usize;
        let coarse = LagPlan {
            n_lags: (self.t_max / (stride as f64 * self.dt)).round() as usize + 1,
            lag_stride: stride,
            n_refs: self.n_refs,
            ref_stride: stride,
        };
        let fine = LagPlan {
            n_lags: self.fine_lags,
            lag_stride: 1,
            n_refs: self.n_refs,
            ref_stride: stride,
        };
        Ok((coarse, fine))
    }
}

/// Empirical tables of a noise check, coarse over `[0, t_max]` and fine near `t = 0`.
#[derive(Clone, Debug)]
pub struct NoiseCheckTables {
    pub coarse: EmpiricalCorrelations,
    pub fine: EmpiricalCorrelations,
}

/// Synthesize `config.n_paths` full (`xi`, `nu`) paths and estimate their correlators.
///
/// Work is split into fixed chunks merged in index order, so the result does
/// not depend on the number of threads.
pub fn noise_check(bath: &BathSpec, config: &NoiseCheckConfig) -> Result<NoiseCheckTables> {
    use rayon::prelude::*;
    const CHUNK: usize = 1000;
    let (coarse, fine) = config.plans()?;
    let need = coarse.required_samples().max(fine.required_samples());
    let gen = NoiseGenerator::new(bath, need, config.dt, NoiseSpectrum::Full, true, config.master_seed)?;
    let n = config.n_paths;
    let parts: Vec<(CorrelationAccumulator, CorrelationAccumulator)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut a = CorrelationAccumulator::new(coarse);
            let mut b = CorrelationAccumulator::new(fine);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let path = gen.sample(i as u64);
                a.push(&path)?;
                b.push(&path)?;
            }
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let mut a = CorrelationAccumulator::new(coarse);
    let mut b = CorrelationAccumulator::new(fine);
    for (pa, pb) in &parts {
        a.merge(pa);
        b.merge(pb);
    }
    Ok(NoiseCheckTables {
        coarse: a.finish(config.dt),
        fine: b.finish(config.dt),
    })
}

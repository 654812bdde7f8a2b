//! Short-time decoherence of the three-level transmon when the system
//! Hamiltonian is negligible next to the bath coupling.
//!
//! In the eigenbasis of `q` every coherence evolves independently:
//!
//! ```text
//! rho_ab(t) = exp([-(q_a - q_b)^2 f(t) + i (q_a^2 - q_b^2) phi(t)] kappa / 4 pi) rho_ab(0)
//! ```

use crate::bath::{y_coth_y, BathSpec};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::quadrature::{integrate_to_infinity, Tolerance};
use std::f64::consts::PI;

/// Below this value of `w t` the kernels use their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-3;

fn tolerance() -> Tolerance {
    Tolerance {
        rel: 1e-8,
        abs: 1e-15,
        max_intervals: 400_000,
    }
}

/// `(1 - cos wt) / w^2`
fn one_minus_cos_over_w2(w: f64, t: f64) -> f64 {
    let x = w * t;
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        t * t * (0.5 - x2 / 24.0 + x2 * x2 / 720.0 - x2 * x2 * x2 / 40320.0)
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / (w * w)
    }
}

/// `(wt - sin wt) / w`
fn excess_over_w(w: f64, t: f64) -> f64 {
    let x = w * t;
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        t * (x2 / 6.0 - x2 * x2 / 120.0 + x2 * x2 * x2 / 5040.0)
    } else {
        (x - x.sin()) / w
    }
}

/// The two decoherence integrals of a bath.
#[derive(Clone, Copy, Debug)]
pub struct DecoherenceKernels {
    pub bath: BathSpec,
}

impl DecoherenceKernels {
    pub fn new(bath: BathSpec) -> Self {
        DecoherenceKernels { bath }
    }

    fn integrate(&self, g: impl Fn(f64) -> f64, t: f64) -> Result<f64> {
        let split = 20.0 * self.bath.cutoff;
        let panels = ((split * t / PI).ceil() as usize).max(1) + 80;
        Ok(integrate_to_infinity(g, 0.0, split, panels, tolerance())?.0)
    }

    /// `f(t) = (2/kappa) int_0^inf J(w)/w^2 coth(beta w/2) (1 - cos wt) dw`
    pub fn f(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::invalid("t", "must be non-negative"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let b = self.bath;
        // J coth / w^2 = kappa * drude * (2/beta) y coth y / w^2 with y = beta w / 2
        self.integrate(
            |w| {
                let thermal = (2.0 / b.beta) * y_coth_y(0.5 * b.beta * w);
                2.0 * b.drude(w) * thermal * one_minus_cos_over_w2(w, t)
            },
            t,
        )
    }

    /// `phi(t) = (2/kappa) int_0^inf J(w)/w^2 (wt - sin wt) dw`
    pub fn phi(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::invalid("t", "must be non-negative"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let b = self.bath;
        self.integrate(|w| 2.0 * b.drude(w) * excess_over_w(w, t), t)
    }
}

/// Eigenbasis of the qutrit coupling `[[0,1,0],[1,0,sqrt2],[0,sqrt2,0]]`,
/// ordered `(q+, q-, q0)`.
#[derive(Clone, Debug)]
pub struct QutritBasisChange {
    /// Column `j` is eigenvector `j` in the energy basis.
    pub vectors: [[f64; 3]; 3],
    pub eigenvalues: [f64; 3],
}

impl Default for QutritBasisChange {
    fn default() -> Self {
        let s6 = 1.0 / 6f64.sqrt();
        let s2 = 1.0 / 2f64.sqrt();
        let s3 = 1.0 / 3f64.sqrt();
        let t23 = (2.0f64 / 3.0).sqrt();
        QutritBasisChange {
            vectors: [[s6, s6, -t23], [s2, -s2, 0.0], [s3, s3, s3]],
            eigenvalues: [3f64.sqrt(), -(3f64.sqrt()), 0.0],
        }
    }
}

impl QutritBasisChange {
    /// The coupling matrix whose eigenbasis this is.
    pub fn coupling() -> CMat {
        let r2 = 2f64.sqrt();
        CMat::from_real(3, |r, c| match (r.min(c), r.max(c)) {
            (0, 1) => 1.0,
            (1, 2) => r2,
            _ => 0.0,
        })
    }

    fn matrix(&self) -> CMat {
        CMat::from_real(3, |r, c| self.vectors[r][c])
    }

    /// Energy basis to `q` eigenbasis: `V^T rho V`.
    pub fn forward(&self, rho: &CMat) -> CMat {
        let v = self.matrix();
        v.adjoint().matmul(rho).matmul(&v)
    }

    /// `q` eigenbasis to energy basis: `V rho V^T`.
    pub fn backward(&self, rho: &CMat) -> CMat {
        let v = self.matrix();
        v.matmul(rho).matmul(&v.adjoint())
    }
}

/// Apply the short-time map for given kernel values `f`, `phi` and coupling `kappa`.
pub fn qutrit_map_with(rho0: &CMat, f: f64, phi: f64, kappa: f64) -> Result<CMat> {
    if rho0.dim() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: rho0.dim(),
        });
    }
    let basis = QutritBasisChange::default();
    let q = basis.eigenvalues;
    let scale = kappa / (4.0 * PI);
    let mut r = basis.forward(rho0);
    for a in 0..3 {
        for b in 0..3 {
            let decay = -(q[a] - q[b]).powi(2) * f * scale;
            let phase = (q[a] * q[a] - q[b] * q[b]) * phi * scale;
            r[(a, b)] *= C64::from_polar(decay.exp(), phase);
        }
    }
    Ok(basis.backward(&r))
}

/// `rho(t)` from `rho(0)` for the kernels' bath.
pub fn qutrit_map(rho0: &CMat, kernels: &DecoherenceKernels, t: f64) -> Result<CMat> {
    let f = kernels.f(t)?;
    let phi = kernels.phi(t)?;
    qutrit_map_with(rho0, f, phi, kernels.bath.kappa)
}

/// `|1><1|` written in the `(q+, q-, q0)` basis.
pub fn qutrit_initial_projections() -> CMat {
    let mut m = CMat::zeros(3);
    m[(0, 0)] = C64::new(0.5, 0.0);
    m[(1, 1)] = C64::new(0.5, 0.0);
    m[(0, 1)] = C64::new(-0.5, 0.0);
    m[(1, 0)] = C64::new(-0.5, 0.0);
    m
}

/// Populations `(rho_00, rho_11, rho_22)` for `rho(0) = |1><1|`.
pub fn first_excited_populations(f: f64, kappa: f64) -> [f64; 3] {
    let x = (-12.0 * f * kappa / (4.0 * PI)).exp();
    [(1.0 - x) / 6.0, (1.0 + x) / 2.0, (1.0 - x) / 3.0]
}

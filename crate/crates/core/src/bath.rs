//! Ohmic bosonic bath with a squared-Drude cutoff.
//!
//! All quantities use `hbar = 1` and `omega_01 = 1`:
//! `J(w) = kappa * w / (1 + w^2/w_c^2)^2`, so `kappa` is the zero-temperature
//! emission rate of the lowest transition.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    /// Coupling rate in units of `omega_01`.
    pub kappa: f64,
    /// Dimensionless inverse temperature `beta * hbar * omega_01`.
    pub beta: f64,
    /// Cutoff `omega_c` in units of `omega_01`.
    pub cutoff: f64,
}

/// `y * coth(y)`, smooth through `y = 0`.
pub(crate) fn y_coth_y(y: f64) -> f64 {
    if y.abs() < 1e-4 {
        1.0 + y * y / 3.0
    } else {
        y / y.tanh()
    }
}

impl BathSpec {
    pub fn new(kappa: f64, beta: f64, cutoff: f64) -> Self {
        BathSpec { kappa, beta, cutoff }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::invalid("kappa", "must be finite and non-negative"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if !(self.cutoff > 1.0) || !self.cutoff.is_finite() {
            return Err(Error::invalid("cutoff", "must be finite and above omega_01"));
        }
        Ok(())
    }

    /// Cutoff factor `1 / (1 + w^2/w_c^2)^2`.
    pub(crate) fn drude(&self, omega: f64) -> f64 {
        let x = omega / self.cutoff;
        1.0 / (1.0 + x * x).powi(2)
    }

    /// `J(w)`, odd in `w`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.kappa * omega * self.drude(omega)
    }

    /// `omega * coth(beta omega / 2)`, even and finite at zero.
    fn omega_coth(&self, omega: f64) -> f64 {
        2.0 / self.beta * y_coth_y(0.5 * self.beta * omega)
    }

    /// `S(w) = 2 J(w) / (1 - exp(-beta w))`, with `S(0) = 2 kappa / beta`.
    pub fn fluctuation_spectrum(&self, omega: f64) -> f64 {
        let x = self.beta * omega;
        if x.abs() < 1e-10 {
            return 2.0 * self.kappa / self.beta * self.drude(omega) * (1.0 + 0.5 * x);
        }
        2.0 * self.spectral_density(omega) / (-(-x).exp_m1())
    }

    /// Transition-rate spectrum `S(w)/2 = int dt e^{i w t} C(t)`.
    ///
    /// Positive frequencies are emission into the bath. This is the spectrum
    /// that enters golden-rule rates for the correlation function
    /// [`BathSpec::correlation_at`].
    pub fn rate_spectrum(&self, omega: f64) -> f64 {
        0.5 * self.fluctuation_spectrum(omega)
    }

    /// `J(|w|) coth(beta |w| / 2)`: symmetrized spectrum whose cosine transform
    /// over `(0, inf)` divided by `2 pi` is `Re C(t)`.
    pub fn symmetrized_spectrum(&self, omega: f64) -> f64 {
        let w = omega.abs();
        self.kappa * self.drude(w) * self.omega_coth(w)
    }

    /// Quantum part of [`Self::symmetrized_spectrum`]: the classical white
    /// contribution `2 kappa / (beta (1 + w^2/w_c^2)^2)` removed.
    ///
    /// Non-negative because `y coth y >= 1`.
    pub fn quantum_spectrum(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let y = 0.5 * self.beta * w;
        let excess = if y < 1e-4 { y * y / 3.0 } else { y_coth_y(y) - 1.0 };
        self.kappa * self.drude(w) * 2.0 / self.beta * excess
    }

    /// `kappa_T = kappa coth(beta / 2)`, the weak-coupling relaxation rate.
    pub fn weak_coupling_decay_rate(&self) -> f64 {
        self.kappa / (0.5 * self.beta).tanh()
    }

    /// `S(0)/2 = kappa / beta`, the pure-dephasing rate per unit `q^2`.
    pub fn dephasing_rate(&self) -> f64 {
        self.rate_spectrum(0.0)
    }

    /// `(1/2pi) int_0^inf J(w)/w dw = kappa w_c / 8`: the potential shift the
    /// bath imprints on `q^2`, cancelled by the counterterm in the exact solver.
    pub fn reorganization_energy(&self) -> f64 {
        self.kappa * self.cutoff / 8.0
    }

    fn quadrature_tolerance(&self) -> Tolerance {
        Tolerance {
            rel: 1e-8,
            abs: 1e-13 * self.kappa.max(1e-300) * (1.0 + self.cutoff * self.cutoff),
            max_intervals: 400_000,
        }
    }

    /// `(Re C(t), Im C(t))` by adaptive quadrature.
    pub fn correlation_at(&self, t: f64) -> Result<(f64, f64)> {
        if self.kappa == 0.0 {
            return Ok((0.0, 0.0));
        }
        let t = t.abs();
        let re = self.fourier_integral(|w| self.symmetrized_spectrum(w), t, Trig::Cos)?;
        let im = if t == 0.0 {
            0.0
        } else {
            -self.fourier_integral(|w| self.spectral_density(w), t, Trig::Sin)?
        };
        Ok((re / (2.0 * PI), im / (2.0 * PI)))
    }

    /// `int_0^inf g(w) trig(w t) dw` for a spectrum decaying like `w^-3`.
    ///
    /// Short times map the tail onto `(0, 1]`. Once the tail oscillates many
    /// times the head is integrated out to `x` and the rest is taken from one
    /// integration by parts, whose remainder is below `|g'(x)| / t^2`.
    fn fourier_integral(&self, g: impl Fn(f64) -> f64, t: f64, trig: Trig) -> Result<f64> {
        let kernel = |w: f64| match trig {
            Trig::Cos => g(w) * (w * t).cos(),
            Trig::Sin => g(w) * (w * t).sin(),
        };
        let split = 20.0 * self.cutoff;
        let tol = self.quadrature_tolerance();
        if split * t <= 50.0 {
            let panels = ((split * t / PI).ceil() as usize).max(1) + 80;
            return Ok(integrate_to_infinity(kernel, 0.0, split, panels, tol)?.0);
        }
        // |g'(x)| ~ 3 kappa w_c^4 / x^4 past the cutoff
        let scale = 3.0 * self.kappa * self.cutoff.powi(4);
        let x = (scale / (t * t * tol.abs)).powf(0.25).max(split);
        let panels = (x * t / PI).ceil() as usize + 80;
        let (head, _) = integrate(kernel, 0.0, x, panels, tol)?;
        let tail = match trig {
            Trig::Cos => -g(x) * (x * t).sin() / t,
            Trig::Sin => g(x) * (x * t).cos() / t,
        };
        Ok(head + tail)
    }

    /// Tabulate the correlation function on `t_k = k dt`, `0 <= t_k <= t_max`.
    pub fn correlation_function(&self, t_max: f64, dt: f64) -> Result<CorrelationTable> {
        self.validate()?;
        if !(dt > 0.0) || dt >= PI / self.cutoff {
            return Err(Error::invalid("dt", "must satisfy 0 < dt < pi / cutoff"));
        }
        let len = (t_max / dt).floor() as usize + 1;
        let mut re_c = Vec::with_capacity(len);
        let mut im_c = Vec::with_capacity(len);
        for k in 0..len {
            let (re, im) = self.correlation_at(k as f64 * dt)?;
            re_c.push(re);
            im_c.push(im);
        }
        Ok(CorrelationTable { dt, re_c, im_c })
    }
}

#[derive(Clone, Copy)]
enum Trig {
    Cos,
    Sin,
}

/// Uniformly sampled bath correlation function `C(t) = <zeta(t) zeta(0)>`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationTable {
    pub dt: f64,
    pub re_c: Vec<f64>,
    pub im_c: Vec<f64>,
}

impl CorrelationTable {
    pub fn len(&self) -> usize {
        self.re_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re_c.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Linear interpolation; `Re C` is extended evenly and `Im C` oddly to `t < 0`.
    pub fn interpolate(&self, t: f64) -> (f64, f64) {
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let x = t.abs() / self.dt;
        let k = x.floor() as usize;
        if k + 1 >= self.len() {
            let last = self.len() - 1;
            return (self.re_c[last], sign * self.im_c[last]);
        }
        let frac = x - k as f64;
        let re = self.re_c[k] * (1.0 - frac) + self.re_c[k + 1] * frac;
        let im = self.im_c[k] * (1.0 - frac) + self.im_c[k + 1] * frac;
        (re, sign * im)
    }
}

/// `int_0^inf` with a simple trapezoid over a frequency grid; used as the
/// dense-grid inverse transform of a spectrum.
pub fn cosine_transform_on_grid(spectrum: impl Fn(f64) -> f64, t: f64, w_max: f64, n: usize) -> f64 {
    let h = w_max / n as f64;
    let mut acc = 0.5 * (spectrum(0.0) + spectrum(w_max) * (w_max * t).cos());
    for k in 1..n {
        let w = k as f64 * h;
        acc += spectrum(w) * (w * t).cos();
    }
    acc * h
}

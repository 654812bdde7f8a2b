//! Drive Hamiltonians and gate pulses.
//!
//! The lab-frame drive is `q * [eps_x(t) cos(w_d t) + eps_y(t) sin(w_d t)]`,
//! with `q` normalized so `q_01 = 1`. In the frame rotating at `w_d` the
//! qubit block then reads `(eps_x sigma_x + eps_y sigma_y) / 2`, so a pulse
//! with `int eps_x dt = pi` is a NOT gate.

use crate::dynamics::{Coefficient, Drive};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::quadrature::{integrate, Tolerance};
use crate::transmon::TransmonModel;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// How the hold segment of the ramped NOT pulse is timed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HoldTiming {
    /// Hold for `t_g`; the ramps add area on top of `Omega t_g`.
    #[default]
    Literal,
    /// Shorten the hold so the total area is exactly `pi`.
    AreaCalibrated,
}

/// Pulse family and its timing parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// Constant amplitude for all times.
    Cosine,
    SimpleNot {
        t_g: f64,
        t_r: f64,
        #[serde(default)]
        timing: HoldTiming,
    },
    Drag {
        t_g: f64,
    },
}

/// Amplitude, carrier and envelope of a drive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub amplitude: f64,
    pub carrier: f64,
    pub envelope: Envelope,
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::invalid("omega", "amplitude must be finite and non-negative"));
        }
        if !self.carrier.is_finite() {
            return Err(Error::invalid("carrier", "must be finite"));
        }
        match self.envelope {
            Envelope::Cosine => {}
            Envelope::SimpleNot { t_g, t_r, .. } => {
                if !(t_g > 0.0) {
                    return Err(Error::invalid("t_g", "must be positive"));
                }
                if !(t_r >= 0.0) || t_r > 0.5 * t_g {
                    return Err(Error::invalid("t_r", "must lie in [0, t_g / 2]"));
                }
            }
            Envelope::Drag { t_g } => {
                if !(t_g > 0.0) {
                    return Err(Error::invalid("t_g", "must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Which frame the envelopes refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Rotating,
}

pub type Envelope1D = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Quadrature envelopes on a support window; both vanish outside it.
#[derive(Clone)]
pub struct PulseProgram {
    pub eps_x: Envelope1D,
    pub eps_y: Envelope1D,
    pub window: (f64, f64),
    pub carrier: f64,
    pub frame: Frame,
}

impl std::fmt::Debug for PulseProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PulseProgram")
            .field("window", &self.window)
            .field("carrier", &self.carrier)
            .field("frame", &self.frame)
            .finish()
    }
}

impl PulseProgram {
    fn inside(&self, t: f64) -> bool {
        t >= self.window.0 && t <= self.window.1
    }

    pub fn x(&self, t: f64) -> f64 {
        if self.inside(t) {
            (self.eps_x)(t)
        } else {
            0.0
        }
    }

    pub fn y(&self, t: f64) -> f64 {
        if self.inside(t) {
            (self.eps_y)(t)
        } else {
            0.0
        }
    }

    pub fn duration(&self) -> f64 {
        self.window.1 - self.window.0
    }

    /// `int eps_x dt` over the window.
    pub fn area(&self) -> Result<f64> {
        let f = self.eps_x.clone();
        Ok(integrate(|t| f(t), self.window.0, self.window.1, 64, fine_tolerance())?.0)
    }

    /// Lab-frame coefficient `eps_x cos(w_d t) + eps_y sin(w_d t)`.
    pub fn lab_coefficient(&self) -> Coefficient {
        let p = self.clone();
        Arc::new(move |t| {
            if !p.inside(t) {
                return 0.0;
            }
            let (s, c) = (p.carrier * t).sin_cos();
            (p.eps_x)(t) * c + (p.eps_y)(t) * s
        })
    }
}

fn fine_tolerance() -> Tolerance {
    Tolerance {
        rel: 1e-13,
        abs: 0.0,
        max_intervals: 10_000,
    }
}

/// Ramp `R(t) = [cos(cos(pi t / 2 t_r)) - cos 1] / [1 - cos 1]`.
pub fn ramp(t: f64, t_r: f64) -> f64 {
    let c1 = 1f64.cos();
    ((PI * t / (2.0 * t_r)).cos().cos() - c1) / (1.0 - c1)
}

/// Mean of `R` over one ramp.
pub fn ramp_mean() -> f64 {
    integrate(|u| ramp(u, 1.0), 0.0, 1.0, 8, fine_tolerance())
        .expect("smooth integrand")
        .0
}

/// Constant-envelope drive `Omega cos(w_d t) q`.
pub fn cosine_drive(model: &TransmonModel, drive: &DriveSpec) -> Drive {
    let (amp, w) = (drive.amplitude, drive.carrier);
    Drive::new().with_term(model.coupling(), Arc::new(move |t| amp * (w * t).cos()))
}

/// Lab-frame drive for a pulse program.
pub fn pulse_drive(model: &TransmonModel, program: &PulseProgram) -> Drive {
    Drive::new().with_term(model.coupling(), program.lab_coefficient())
}

/// Three-level rotating-wave Hamiltonian with the harmonic ladder factor `sqrt 2`.
pub fn rwa_hamiltonian(model: &TransmonModel, drive: &DriveSpec) -> Result<CMat> {
    if model.n_levels() != 3 {
        return Err(Error::Dimension {
            expected: 3,
            actual: model.n_levels(),
        });
    }
    let half = 0.5 * drive.amplitude;
    let r2 = 2f64.sqrt();
    let wd = drive.carrier;
    let mut h = CMat::zeros(3);
    h[(0, 1)] = C64::new(half, 0.0);
    h[(1, 0)] = C64::new(half, 0.0);
    h[(1, 2)] = C64::new(r2 * half, 0.0);
    h[(2, 1)] = C64::new(r2 * half, 0.0);
    h[(1, 1)] = C64::new(model.omega01() - wd, 0.0);
    h[(2, 2)] = C64::new(model.omega02() - 2.0 * wd, 0.0);
    Ok(h)
}

/// Ramped constant NOT pulse on `[0, hold + 2 t_r]`.
pub fn simple_not_envelope(drive: &DriveSpec) -> Result<PulseProgram> {
    drive.validate()?;
    let Envelope::SimpleNot { t_g, t_r, timing } = drive.envelope else {
        return Err(Error::invalid("pulse", "expected a simple_not envelope"));
    };
    let omega = drive.amplitude;
    let hold = match timing {
        HoldTiming::Literal => t_g,
        HoldTiming::AreaCalibrated => {
            if omega == 0.0 {
                return Err(Error::Calibration("zero amplitude cannot reach area pi".into()));
            }
            let h = PI / omega - 2.0 * t_r * ramp_mean();
            if h < 0.0 {
                return Err(Error::Calibration("ramps alone exceed area pi".into()));
            }
            h
        }
    };
    let end = hold + 2.0 * t_r;
    let eps_x: Envelope1D = Arc::new(move |t| {
        if t <= 0.0 || t > end {
            0.0
        } else if t <= t_r {
            omega * ramp(t, t_r)
        } else if t < hold + t_r {
            omega
        } else {
            // R is 4 t_r periodic; this argument runs over its falling quarter
            omega * ramp(t - hold + 2.0 * t_r, t_r)
        }
    });
    Ok(PulseProgram {
        eps_x,
        eps_y: Arc::new(|_| 0.0),
        window: (0.0, end),
        carrier: drive.carrier,
        frame: Frame::Lab,
    })
}

/// `int_0^{t_g} [exp(-(t - t_g/2)^2 / 2 t_g^2) - exp(-1/8)] dt` by quadrature.
pub fn drag_unit_area(t_g: f64) -> Result<f64> {
    let base = (-0.125f64).exp();
    let (v, err) = integrate(
        |t| {
            let u = (t - 0.5 * t_g) / t_g;
            (-0.5 * u * u).exp() - base
        },
        0.0,
        t_g,
        16,
        fine_tolerance(),
    )
    .map_err(|e| Error::Calibration(e.to_string()))?;
    if !(v > 0.0) || err > 1e-12 * v {
        return Err(Error::Calibration(format!("area {v} with error {err}")));
    }
    Ok(v)
}

/// Gaussian DRAG pulse on `[0, t_g]`, amplitude calibrated to a `pi` rotation.
pub fn drag_envelope(model: &TransmonModel, drive: &DriveSpec) -> Result<(PulseProgram, f64)> {
    drive.validate()?;
    let Envelope::Drag { t_g } = drive.envelope else {
        return Err(Error::invalid("pulse", "expected a drag envelope"));
    };
    let alpha = model.anharmonicity;
    if !(alpha < 0.0) {
        return Err(Error::invalid("anharmonicity", "DRAG needs a negative anharmonicity"));
    }
    if drive.amplitude == 0.0 {
        return Err(Error::Calibration("zero amplitude cannot reach area pi".into()));
    }
    let omega = drive.amplitude;
    // the area is linear in A, so one quadrature fixes it
    let a = PI / (omega * drag_unit_area(t_g)?);
    let base = (-0.125f64).exp();
    let s2 = t_g * t_g;
    let eps_x: Envelope1D = Arc::new(move |t| {
        if !(0.0..=t_g).contains(&t) {
            return 0.0;
        }
        let d = t - 0.5 * t_g;
        omega * a * ((-d * d / (2.0 * s2)).exp() - base)
    });
    let eps_y: Envelope1D = Arc::new(move |t| {
        if !(0.0..=t_g).contains(&t) {
            return 0.0;
        }
        let d = t - 0.5 * t_g;
        let slope = -omega * a * d / s2 * (-d * d / (2.0 * s2)).exp();
        -slope / alpha
    });
    Ok((
        PulseProgram {
            eps_x,
            eps_y,
            window: (0.0, t_g),
            carrier: drive.carrier,
            frame: Frame::Lab,
        },
        a,
    ))
}

/// Build the pulse for any envelope; `Cosine` runs on `[0, t_end]`.
pub fn pulse_program(model: &TransmonModel, drive: &DriveSpec, t_end: f64) -> Result<PulseProgram> {
    match drive.envelope {
        Envelope::Cosine => {
            drive.validate()?;
            let amp = drive.amplitude;
            Ok(PulseProgram {
                eps_x: Arc::new(move |_| amp),
                eps_y: Arc::new(|_| 0.0),
                window: (0.0, t_end),
                carrier: drive.carrier,
                frame: Frame::Lab,
            })
        }
        Envelope::SimpleNot { .. } => simple_not_envelope(drive),
        Envelope::Drag { .. } => Ok(drag_envelope(model, drive)?.0),
    }
}

/// `rho_nm -> exp(i (n - m) w_d t) rho_nm`.
pub fn to_rotating_frame(rho: &CMat, carrier: f64, t: f64) -> CMat {
    let n = rho.dim();
    CMat::from_fn(n, |r, c| {
        rho[(r, c)] * C64::from_polar(1.0, (r as f64 - c as f64) * carrier * t)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transmon::TransmonSpec;

    fn model(n: usize) -> TransmonModel {
        TransmonModel::build(&TransmonSpec::new(100.0, n)).unwrap()
    }

    #[test]
    fn ramp_end_points() {
        assert!(ramp(0.0, 3.0).abs() < 1e-15);
        assert!((ramp(3.0, 3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simple_not_is_continuous_and_windowed() {
        let drive = DriveSpec {
            amplitude: 0.02,
            carrier: 1.0,
            envelope: Envelope::SimpleNot {
                t_g: 100.0,
                t_r: 5.0,
                timing: HoldTiming::Literal,
            },
        };
        let p = simple_not_envelope(&drive).unwrap();
        assert_eq!(p.window, (0.0, 110.0));
        for &edge in &[5.0, 105.0] {
            let l = p.x(edge - 1e-12);
            let r = p.x(edge + 1e-12);
            assert!((l - r).abs() < 1e-12);
        }
        assert!(p.x(110.0).abs() < 1e-15);
        assert_eq!(p.x(110.5), 0.0);
        assert_eq!(p.x(-1.0), 0.0);
    }

    #[test]
    fn calibrated_simple_not_has_area_pi() {
        let drive = DriveSpec {
            amplitude: 0.02,
            carrier: 1.0,
            envelope: Envelope::SimpleNot {
                t_g: PI / 0.02,
                t_r: PI / 0.02 / 20.0,
                timing: HoldTiming::AreaCalibrated,
            },
        };
        let p = simple_not_envelope(&drive).unwrap();
        assert!((p.area().unwrap() - PI).abs() < 1e-9);
    }

    #[test]
    fn drag_shape() {
        let m = model(3);
        let drive = DriveSpec {
            amplitude: 0.01,
            carrier: 1.0,
            envelope: Envelope::Drag { t_g: 200.0 },
        };
        let (p, _) = drag_envelope(&m, &drive).unwrap();
        assert!(p.x(0.0).abs() < 1e-15);
        assert!(p.x(200.0).abs() < 1e-15);
        assert!(p.y(100.0).abs() < 1e-15);
        assert!((p.area().unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn rwa_matrix_without_drive_is_anharmonicity() {
        let m = model(3);
        let drive = DriveSpec {
            amplitude: 0.0,
            carrier: m.omega01(),
            envelope: Envelope::Cosine,
        };
        let h = rwa_hamiltonian(&m, &drive).unwrap();
        assert!(h[(1, 1)].norm() < 1e-15);
        assert!((h[(2, 2)].re - m.anharmonicity).abs() < 1e-12);
        assert!(rwa_hamiltonian(&model(4), &drive).is_err());
    }

    #[test]
    fn rotating_frame_keeps_populations() {
        let rho = CMat::from_fn(3, |r, c| C64::new(1.0 + r as f64, c as f64));
        let rot = to_rotating_frame(&rho, 1.0, 2.3);
        for k in 0..3 {
            assert_eq!(rot[(k, k)], rho[(k, k)]);
        }
        assert_eq!(to_rotating_frame(&rho, 1.0, 0.0), rho);
    }
}

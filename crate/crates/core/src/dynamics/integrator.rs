//! Fixed-step fourth-order Runge-Kutta for `d rho / dt = G(t) rho`.
//!
//! The generator is split into a precomputed superoperator, drive terms
//! `-i c_j(t) [O_j, rho]` and the two noise couplings `+i xi [q, rho]` and
//! `+i nu {q, rho}`. Noise is sampled on the stage grid of spacing `dt / 2`,
//! so step `n` reads samples `2n`, `2n + 1` and `2n + 2`.

use crate::linalg::{add_bracket, CMat, Superoperator, C64, I};
use std::sync::Arc;

/// Real envelope of a drive term.
pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `H(t) = H_0 + sum_j c_j(t) O_j`.
#[derive(Clone)]
pub struct DriveTerm {
    pub operator: CMat,
    pub coefficient: Coefficient,
}

impl std::fmt::Debug for DriveTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DriveTerm").field("operator", &self.operator).finish()
    }
}

/// Time-dependent Hamiltonian contributions added on top of the system part.
#[derive(Clone, Debug, Default)]
pub struct Drive {
    pub terms: Vec<DriveTerm>,
}

impl Drive {
    pub fn new() -> Self {
        Drive::default()
    }

    pub fn with_term(mut self, operator: CMat, coefficient: Coefficient) -> Self {
        self.terms.push(DriveTerm { operator, coefficient });
        self
    }

    /// Drive Hamiltonian at time `t`.
    pub fn hamiltonian(&self, n: usize, t: f64) -> CMat {
        let mut h = CMat::zeros(n);
        for term in &self.terms {
            h.axpy(C64::new((term.coefficient)(t), 0.0), &term.operator);
        }
        h
    }
}

/// Generator in split form.
pub struct Generator<'a> {
    pub base: &'a Superoperator,
    pub drive: Option<&'a Drive>,
    /// Operator the noise couples to.
    pub coupling: Option<&'a CMat>,
}

/// Noise samples at the three stage times of one step.
#[derive(Clone, Copy, Debug, Default)]
pub struct StageNoise {
    pub xi: [f64; 3],
    pub nu: [C64; 3],
}

/// Scratch buffers for [`rk4_step`].
pub struct Workspace {
    k: [CMat; 4],
    tmp: CMat,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            k: [CMat::zeros(n), CMat::zeros(n), CMat::zeros(n), CMat::zeros(n)],
            tmp: CMat::zeros(n),
        }
    }
}

impl Generator<'_> {
    #[inline]
    fn rhs(&self, t: f64, rho: &CMat, xi: f64, nu: C64, out: &mut CMat) {
        self.base.apply_into(rho, out);
        if let Some(drive) = self.drive {
            for term in &drive.terms {
                let c = (term.coefficient)(t);
                if c != 0.0 {
                    add_bracket(&term.operator, rho, 1.0, -I * c, out);
                }
            }
        }
        if let Some(q) = self.coupling {
            if xi != 0.0 {
                add_bracket(q, rho, 1.0, I * xi, out);
            }
            if nu.re != 0.0 || nu.im != 0.0 {
                add_bracket(q, rho, -1.0, I * nu, out);
            }
        }
    }
}

/// Advance `rho` from `t` to `t + dt`.
pub fn rk4_step(gen: &Generator<'_>, t: f64, dt: f64, rho: &mut CMat, noise: &StageNoise, ws: &mut Workspace) {
    let half = 0.5 * dt;
    let [k1, k2, k3, k4] = &mut ws.k;
    let tmp = &mut ws.tmp;

    gen.rhs(t, rho, noise.xi[0], noise.nu[0], k1);

    tmp.copy_from(rho);
    tmp.axpy(C64::new(half, 0.0), k1);
    gen.rhs(t + half, tmp, noise.xi[1], noise.nu[1], k2);

    tmp.copy_from(rho);
    tmp.axpy(C64::new(half, 0.0), k2);
    gen.rhs(t + half, tmp, noise.xi[1], noise.nu[1], k3);

    tmp.copy_from(rho);
    tmp.axpy(C64::new(dt, 0.0), k3);
    gen.rhs(t + dt, tmp, noise.xi[2], noise.nu[2], k4);

    let w = dt / 6.0;
    let data = rho.as_mut_slice();
    let (a, b, c, d) = (k1.as_slice(), k2.as_slice(), k3.as_slice(), k4.as_slice());
    for i in 0..data.len() {
        data[i] += (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::generators::hamiltonian_superoperator;

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let base = Superoperator::zeros(2);
        let gen = Generator {
            base: &base,
            drive: None,
            coupling: None,
        };
        let mut rho = CMat::diagonal(&[0.3, 0.7]);
        let before = rho.clone();
        let mut ws = Workspace::new(2);
        rk4_step(&gen, 0.0, 0.1, &mut rho, &StageNoise::default(), &mut ws);
        assert_eq!(rho, before);
    }

    #[test]
    fn rabi_flop_matches_closed_form() {
        // H = (W/2) sigma_x, rho_11(t) = sin^2(W t / 2)
        let w = 0.3;
        let sx = CMat::from_real(2, |r, c| if r != c { 1.0 } else { 0.0 });
        let base = hamiltonian_superoperator(&sx.scaled(C64::new(0.5 * w, 0.0)));
        let gen = Generator {
            base: &base,
            drive: None,
            coupling: None,
        };
        let mut rho = CMat::diagonal(&[1.0, 0.0]);
        let t_end = std::f64::consts::FRAC_PI_2 / w;
        let steps = 400;
        let dt = t_end / steps as f64;
        let mut ws = Workspace::new(2);
        for s in 0..steps {
            rk4_step(&gen, s as f64 * dt, dt, &mut rho, &StageNoise::default(), &mut ws);
        }
        let expect = (0.5 * w * t_end).sin().powi(2);
        assert!((rho[(1, 1)].re - expect).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_drive_is_evaluated_at_stages() {
        // H = c(t) sigma_z with c = t: phase of rho_01 is exp(-i t^2)
        let sz = CMat::diagonal(&[1.0, -1.0]);
        let drive = Drive::new().with_term(sz, Arc::new(|t| t));
        let base = Superoperator::zeros(2);
        let gen = Generator {
            base: &base,
            drive: Some(&drive),
            coupling: None,
        };
        let mut rho = CMat::from_real(2, |_, _| 0.5);
        let dt = 1e-3;
        let mut ws = Workspace::new(2);
        for s in 0..1000 {
            rk4_step(&gen, s as f64 * dt, dt, &mut rho, &StageNoise::default(), &mut ws);
        }
        let expect = C64::from_polar(0.5, -2.0 * 0.5);
        assert!((rho[(0, 1)] - expect).norm() < 1e-10);
    }
}

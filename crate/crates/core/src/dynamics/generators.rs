//! Time-independent parts of the equations of motion as superoperators.

use crate::bath::BathSpec;
use crate::linalg::{CMat, Superoperator, C64, I};
use crate::transmon::TransmonModel;

/// `rho -> -i [H, rho]`
pub fn hamiltonian_superoperator(h: &CMat) -> Superoperator {
    Superoperator::from_map(h.dim(), |rho| h.commutator(rho).scaled(-I))
}

/// A single jump channel `L` with rate `gamma`.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    pub operator: CMat,
    pub rate: f64,
}

/// Secular jump operators built from `Pi_nm = q_nm |n><m|`.
///
/// For `n < m` the downward jump `|n><m|` runs at the emission rate
/// `S(w_mn)/2` and the upward one at `S(-w_mn)/2`; the diagonal part of `q`
/// dephases at `S(0)/2`.
pub fn jump_operators(model: &TransmonModel, bath: &BathSpec) -> Vec<JumpOperator> {
    let n = model.n_levels();
    let q = model.coupling();
    let mut jumps = Vec::new();
    for lo in 0..n {
        for hi in lo + 1..n {
            let amp = q[(lo, hi)];
            if amp.norm() == 0.0 {
                continue;
            }
            let w = model.omega[hi] - model.omega[lo];
            let mut down = CMat::zeros(n);
            down[(lo, hi)] = amp;
            jumps.push(JumpOperator {
                operator: down.clone(),
                rate: bath.rate_spectrum(w),
            });
            jumps.push(JumpOperator {
                operator: down.adjoint(),
                rate: bath.rate_spectrum(-w),
            });
        }
    }
    let diag: Vec<f64> = (0..n).map(|k| q[(k, k)].re).collect();
    if diag.iter().any(|d| *d != 0.0) {
        jumps.push(JumpOperator {
            operator: CMat::diagonal(&diag),
            rate: bath.dephasing_rate(),
        });
    }
    jumps
}

fn dissipator(jump: &JumpOperator, rho: &CMat) -> CMat {
    let l = &jump.operator;
    let ld = l.adjoint();
    let ldl = ld.matmul(l);
    let mut out = l.matmul(rho).matmul(&ld);
    out.axpy(C64::new(-0.5, 0.0), &ldl.anticommutator(rho));
    out.scaled(C64::new(jump.rate, 0.0))
}

/// Lindblad generator `-i[H_S, .] + sum_j D[L_j]`.
pub fn lindblad_generator(model: &TransmonModel, bath: &BathSpec) -> Superoperator {
    let h = model.hamiltonian();
    let jumps = jump_operators(model, bath);
    Superoperator::from_map(model.n_levels(), |rho| {
        let mut out = h.commutator(rho).scaled(-I);
        for j in &jumps {
            out.axpy(C64::new(1.0, 0.0), &dissipator(j, rho));
        }
        out
    })
}

/// Redfield generator `-i[H_S, .] - [q, L rho - rho L^dag]` with
/// `L_kl = q_kl S(w_l - w_k) / 4` (principal-value shifts dropped).
pub fn redfield_generator(model: &TransmonModel, bath: &BathSpec) -> Superoperator {
    let n = model.n_levels();
    let h = model.hamiltonian();
    let q = model.coupling();
    let lambda = CMat::from_fn(n, |k, l| {
        q[(k, l)] * (0.5 * bath.rate_spectrum(model.omega[l] - model.omega[k]))
    });
    let lambda_dag = lambda.adjoint();
    Superoperator::from_map(n, |rho| {
        let mut out = h.commutator(rho).scaled(-I);
        let inner = lambda.matmul(rho).sub(&rho.matmul(&lambda_dag));
        out.axpy(C64::new(-1.0, 0.0), &q.commutator(&inner));
        out
    })
}

/// Deterministic part of the high-cutoff stochastic equation:
/// `-i[H_S, .] - (kappa / 2 beta)[q,[q, .]] - (i kappa / 4)[q, {p, .}]`.
pub fn sled_drift(model: &TransmonModel, bath: &BathSpec) -> Superoperator {
    let h = model.hamiltonian();
    let q = model.coupling();
    let p = model.coupling_conjugate();
    let diffusion = bath.kappa / (2.0 * bath.beta);
    let friction = C64::new(0.0, -0.25 * bath.kappa);
    Superoperator::from_map(model.n_levels(), |rho| {
        let mut out = h.commutator(rho).scaled(-I);
        out.axpy(C64::new(-diffusion, 0.0), &q.commutator(&q.commutator(rho)));
        out.axpy(friction, &q.commutator(&p.anticommutator(rho)));
        out
    })
}

/// Counterterm `(kappa w_c / 8) q^2` that removes the bath-induced
/// renormalization of the potential in the exact unraveling.
pub fn counterterm(model: &TransmonModel, bath: &BathSpec) -> CMat {
    let q = model.coupling();
    q.matmul(&q).scaled(C64::new(bath.reorganization_energy(), 0.0))
}

/// Stationary state of a generator: kernel vector normalized to unit trace.
pub fn steady_state(generator: &Superoperator) -> Option<CMat> {
    let n = generator.dim();
    let d = n * n;
    let mut a = generator.to_nalgebra();
    let mut rhs = nalgebra::DVector::from_element(d, C64::new(0.0, 0.0));
    // replace the first equation by the trace condition
    for c in 0..d {
        a[(0, c)] = C64::new(0.0, 0.0);
    }
    for k in 0..n {
        a[(0, k * n + k)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let x = a.lu().solve(&rhs)?;
    let mut rho = CMat::zeros(n);
    rho.as_mut_slice().copy_from_slice(x.as_slice());
    Some(rho)
}

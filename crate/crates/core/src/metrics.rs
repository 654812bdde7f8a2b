//! Leakage, gate fidelity and average gate leakage.

use crate::bath::BathSpec;
use crate::control::{pulse_drive, to_rotating_frame, PulseProgram};
use crate::dynamics::{evolve, DensityMatrix, EvolutionSpec, Method, Trajectory};
use crate::error::Result;
use crate::linalg::{CMat, C64};
use crate::transmon::TransmonModel;
use rayon::prelude::*;
use serde::Serialize;

const CLAMP_SLACK: f64 = 1e-9;

/// `1 - (rho_00 + rho_11)`, clamped to `[0, 1]` when within round-off of the edges.
pub fn state_leakage(rho: &CMat) -> f64 {
    let l = 1.0 - (rho[(0, 0)].re + rho[(1, 1)].re);
    if l < 0.0 && l > -CLAMP_SLACK {
        0.0
    } else if l > 1.0 && l < 1.0 + CLAMP_SLACK {
        1.0
    } else {
        l
    }
}

/// Thermal population outside the qubit subspace, `sum_{k>=2} e^{-beta w_k} / Z`.
pub fn gibbs_leakage(model: &TransmonModel, beta: f64) -> f64 {
    state_leakage(&model.gibbs_state(beta))
}

/// Leakage along a trajectory with its maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakageTrace {
    pub times: Vec<f64>,
    pub leakage: Vec<f64>,
    /// Largest sampled leakage.
    pub l_max: f64,
    /// Argmax, refined by a parabola through the neighbouring samples.
    pub t_max: f64,
    /// Sample index of the maximum.
    pub index: usize,
}

pub fn leakage_trace(traj: &Trajectory) -> LeakageTrace {
    let leakage: Vec<f64> = traj.states.iter().map(state_leakage).collect();
    let (index, l_max) =
        leakage.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &l)| if l > best.1 { (i, l) } else { best },
        );
    let t_max = refine_peak(&traj.times, &leakage, index);
    LeakageTrace {
        times: traj.times.clone(),
        leakage,
        l_max,
        t_max,
        index,
    }
}

/// Vertex of the parabola through samples `k-1, k, k+1`; falls back to `t_k` at edges.
pub fn refine_peak(times: &[f64], values: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= values.len() {
        return times[k];
    }
    let (t0, t1, t2) = (times[k - 1], times[k], times[k + 1]);
    let (y0, y1, y2) = (values[k - 1], values[k], values[k + 1]);
    let denom = (t0 - t1) * (t0 - t2) * (t1 - t2);
    let a = (t2 * (y1 - y0) + t1 * (y0 - y2) + t0 * (y2 - y1)) / denom;
    let b = (t2 * t2 * (y0 - y1) + t1 * t1 * (y2 - y0) + t0 * t0 * (y1 - y2)) / denom;
    if !(a < 0.0) {
        return t1;
    }
    (-b / (2.0 * a)).clamp(t0, t2)
}

/// Pauli eigenstate labels in the order of [`cardinal_states`].
pub const CARDINAL_TAGS: [&str; 6] = ["z+", "z-", "x+", "x-", "y+", "y-"];

/// The six Pauli eigenstates of the qubit, embedded in `n` levels.
pub fn cardinal_states(n: usize) -> Vec<DensityMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let amps = [
        (one, zero),
        (zero, one),
        (one * s, one * s),
        (one * s, -one * s),
        (one * s, C64::new(0.0, s)),
        (one * s, C64::new(0.0, -s)),
    ];
    amps.iter()
        .map(|&(a, b)| {
            let mut psi = vec![zero; n];
            psi[0] = a;
            psi[1] = b;
            DensityMatrix::pure(&psi).expect("normalized")
        })
        .collect()
}

/// `sigma_x` on the qubit block, identity on levels `>= 2`.
pub fn not_gate(n: usize) -> CMat {
    let mut u = CMat::identity(n);
    u[(0, 0)] = C64::new(0.0, 0.0);
    u[(1, 1)] = C64::new(0.0, 0.0);
    u[(0, 1)] = C64::new(1.0, 0.0);
    u[(1, 0)] = C64::new(1.0, 0.0);
    u
}

#[derive(Clone, Debug, Serialize)]
pub struct StateRecord {
    pub tag: &'static str,
    #[serde(skip)]
    pub final_state: CMat,
    pub overlap: f64,
    pub leakage: f64,
}

/// Average fidelity and leakage over the six cardinal states.
#[derive(Clone, Debug, Serialize)]
pub struct GateResult {
    pub fidelity: f64,
    pub avg_leakage: f64,
    pub per_state: Vec<StateRecord>,
    pub gate_duration: f64,
}

/// `F = (1/6) sum_j Tr[U rho_j(0) U^dag rho_j(t)]` and the mean leakage.
pub fn gate_fidelity(finals: &[CMat], ideal: &CMat, initials: &[DensityMatrix], gate_duration: f64) -> GateResult {
    let ud = ideal.adjoint();
    let per_state: Vec<StateRecord> = finals
        .iter()
        .zip(initials)
        .enumerate()
        .map(|(j, (fin, init))| {
            let target = ideal.matmul(init.matrix()).matmul(&ud);
            StateRecord {
                tag: CARDINAL_TAGS.get(j).copied().unwrap_or("state"),
                final_state: fin.clone(),
                overlap: target.trace_product(fin).re,
                leakage: state_leakage(fin),
            }
        })
        .collect();
    let n = per_state.len() as f64;
    GateResult {
        fidelity: per_state.iter().map(|r| r.overlap).sum::<f64>() / n,
        avg_leakage: per_state.iter().map(|r| r.leakage).sum::<f64>() / n,
        per_state,
        gate_duration,
    }
}

/// Run a NOT pulse on all cardinal states (deterministic methods) and score it
/// in the frame rotating at the carrier, at the end of the pulse window.
pub fn evaluate_not_gate(
    model: &TransmonModel,
    bath: &BathSpec,
    method: Method,
    program: &PulseProgram,
    dt: f64,
) -> Result<GateResult> {
    let n = model.n_levels();
    let t_end = program.window.1;
    let spec = EvolutionSpec::new(method, t_end, dt).with_save_every(usize::MAX);
    let drive = pulse_drive(model, program);
    let initials = cardinal_states(n);
    let finals: Vec<CMat> = initials
        .par_iter()
        .map(|rho0| {
            let traj = evolve(model, bath, Some(&drive), rho0, &spec)?;
            Ok(to_rotating_frame(traj.final_state(), program.carrier, t_end))
        })
        .collect::<Result<_>>()?;
    Ok(gate_fidelity(&finals, &not_gate(n), &initials, t_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leakage_of_basis_states() {
        assert_eq!(state_leakage(&CMat::basis_projector(4, 1)), 0.0);
        assert_eq!(state_leakage(&CMat::basis_projector(4, 2)), 1.0);
        let mut m = CMat::basis_projector(3, 0);
        m[(0, 0)] = C64::new(1.0 + 1e-12, 0.0);
        assert_eq!(state_leakage(&m), 0.0);
    }

    #[test]
    fn cardinal_states_are_pure_and_average_to_mixed() {
        let states = cardinal_states(4);
        let mut mean = CMat::zeros(4);
        for s in &states {
            let m = s.matrix();
            assert!(m.matmul(m).max_abs_diff(m) < 1e-15);
            assert_eq!(state_leakage(m), 0.0);
            mean.axpy(C64::new(1.0 / 6.0, 0.0), m);
        }
        assert!(mean.max_abs_diff(&CMat::diagonal(&[0.5, 0.5, 0.0, 0.0])) < 1e-15);
    }

    #[test]
    fn perfect_gate_has_unit_fidelity() {
        let u = not_gate(3);
        let init = cardinal_states(3);
        let finals: Vec<CMat> = init.iter().map(|r| u.matmul(r.matrix()).matmul(&u.adjoint())).collect();
        let res = gate_fidelity(&finals, &u, &init, 1.0);
        assert!((res.fidelity - 1.0).abs() < 1e-15);
        assert_eq!(res.avg_leakage, 0.0);
        // global phase of the ideal gate is irrelevant
        let phased = u.scaled(C64::from_polar(1.0, 0.7));
        let res2 = gate_fidelity(&finals, &phased, &init, 1.0);
        assert!((res2.fidelity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn parabolic_refinement_finds_vertex() {
        let times: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        let values: Vec<f64> = times.iter().map(|t| -(t - 2.2f64).powi(2)).collect();
        assert!((refine_peak(&times, &values, 4) - 2.2).abs() < 1e-12);
        assert_eq!(refine_peak(&times, &values, 0), 0.0);
    }
}

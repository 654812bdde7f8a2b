//! Charge-basis transmon Hamiltonian, truncated to its lowest eigenstates.
//!
//! Energies are computed in units of the charging energy `E_C` and then
//! reported in units of the lowest transition frequency `omega_01` (with
//! `hbar = 1`). All propagators work in the normalized units.

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub const DEFAULT_CHARGE_CUTOFF: usize = 15;
/// Relative change of any retained eigenfrequency allowed when the charge
/// cutoff is raised by [`CUTOFF_PROBE_STEP`].
pub const CONVERGENCE_TOLERANCE: f64 = 1e-9;
pub const CUTOFF_PROBE_STEP: usize = 5;

fn default_cutoff() -> usize {
    DEFAULT_CHARGE_CUTOFF
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSpec {
    pub ej_over_ec: f64,
    #[serde(default)]
    pub n_g: f64,
    pub n_levels: usize,
    #[serde(default = "default_cutoff")]
    pub charge_cutoff: usize,
}

impl TransmonSpec {
    pub fn new(ej_over_ec: f64, n_levels: usize) -> Self {
        TransmonSpec {
            ej_over_ec,
            n_g: 0.0,
            n_levels,
            charge_cutoff: DEFAULT_CHARGE_CUTOFF,
        }
    }

    pub fn with_offset_charge(mut self, n_g: f64) -> Self {
        self.n_g = n_g;
        self
    }

    pub fn with_charge_cutoff(mut self, cutoff: usize) -> Self {
        self.charge_cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ej_over_ec > 0.0) || !self.ej_over_ec.is_finite() {
            return Err(Error::invalid("ej_over_ec", "must be a finite positive number"));
        }
        if !self.n_g.is_finite() {
            return Err(Error::invalid("n_g", "must be finite"));
        }
        if self.n_levels < 2 {
            return Err(Error::invalid("n_levels", "need at least two levels"));
        }
        if self.charge_cutoff < self.n_levels + 5 {
            return Err(Error::invalid(
                "charge_cutoff",
                format!("{} is below n_levels + 5 = {}", self.charge_cutoff, self.n_levels + 5),
            ));
        }
        Ok(())
    }
}

/// Charge-basis Hamiltonian in units of `E_C`, basis `n = -N_c..=N_c`.
///
/// Diagonal `4 (n - n_g)^2`, nearest-neighbour coupling `-E_J / 2`.
pub fn build_charge_hamiltonian(spec: &TransmonSpec) -> DMatrix<f64> {
    charge_hamiltonian(spec.ej_over_ec, spec.n_g, spec.charge_cutoff)
}

fn charge_hamiltonian(ej: f64, n_g: f64, cutoff: usize) -> DMatrix<f64> {
    let dim = 2 * cutoff + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - cutoff as f64;
        h[(i, i)] = 4.0 * (n - n_g).powi(2);
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * ej;
            h[(i + 1, i)] = -0.5 * ej;
        }
    }
    h
}

/// Sorted eigenpairs of the charge Hamiltonian.
fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Truncated transmon in its energy eigenbasis.
#[derive(Clone, Debug)]
pub struct TransmonModel {
    pub spec: TransmonSpec,
    /// Eigenfrequencies in units of `omega_01`, `omega[0] = 0`.
    pub omega: Vec<f64>,
    /// Eigenfrequencies in units of `E_C`, shifted so `omega_raw[0] = 0`.
    pub omega_raw: Vec<f64>,
    /// Lowest transition frequency in units of `E_C`.
    pub omega01_raw: f64,
    /// `<n|n_hat|m>` in the truncated eigenbasis (charge units).
    pub q_op: DMatrix<f64>,
    /// Conjugate operator `(i/omega_01)[H, q]`, charge units.
    pub p_op: CMat,
    /// `(omega_12 - omega_01) / omega_01`.
    pub anharmonicity: f64,
}

impl TransmonModel {
    pub fn build(spec: &TransmonSpec) -> Result<Self> {
        diagonalize_and_truncate(spec)
    }

    pub fn n_levels(&self) -> usize {
        self.spec.n_levels
    }

    /// `omega_01`; equals 1 in normalized units.
    pub fn omega01(&self) -> f64 {
        self.omega[1]
    }

    pub fn omega02(&self) -> f64 {
        self.omega[2.min(self.omega.len() - 1)]
    }

    /// Largest level splitting `omega_{N-1} - omega_0`.
    pub fn max_splitting(&self) -> f64 {
        *self.omega.last().unwrap()
    }

    /// `H_S = diag(omega_k)` in normalized units.
    pub fn hamiltonian(&self) -> CMat {
        CMat::diagonal(&self.omega)
    }

    /// Coupling operator rescaled so that `q_01 = 1`.
    pub fn coupling(&self) -> CMat {
        let q01 = self.q_op[(0, 1)];
        CMat::from_real(self.n_levels(), |r, c| self.q_op[(r, c)] / q01)
    }

    /// Conjugate of [`Self::coupling`], i.e. `i[H_S, q]` with the rescaled `q`.
    pub fn coupling_conjugate(&self) -> CMat {
        self.p_op.scaled(C64::new(1.0 / self.q_op[(0, 1)], 0.0))
    }

    /// `<1|n|2> / <0|n|1>`, the ladder factor that is `sqrt(2)` for a harmonic oscillator.
    pub fn ladder_ratio(&self) -> f64 {
        self.q_op[(1, 2.min(self.n_levels() - 1))] / self.q_op[(0, 1)]
    }

    /// Thermal state `exp(-beta H_S)/Z` with `beta` in units of `1/omega_01`.
    pub fn gibbs_state(&self, beta: f64) -> CMat {
        let weights: Vec<f64> = self.omega.iter().map(|w| (-beta * w).exp()).collect();
        let z: f64 = weights.iter().sum();
        CMat::diagonal(&weights.iter().map(|w| w / z).collect::<Vec<_>>())
    }
}

fn lowest_frequencies(spec: &TransmonSpec, cutoff: usize) -> Vec<f64> {
    let (values, _) = sorted_eigen(charge_hamiltonian(spec.ej_over_ec, spec.n_g, cutoff));
    values[..spec.n_levels].iter().map(|e| e - values[0]).collect()
}

/// Diagonalize the charge Hamiltonian, keep the `n_levels` lowest states and
/// express the charge operator in that basis.
pub fn diagonalize_and_truncate(spec: &TransmonSpec) -> Result<TransmonModel> {
    spec.validate()?;
    let n = spec.n_levels;
    let cutoff = spec.charge_cutoff;
    let (values, vectors) = sorted_eigen(build_charge_hamiltonian(spec));

    let omega_raw: Vec<f64> = values[..n].iter().map(|e| e - values[0]).collect();

    let probe = lowest_frequencies(spec, cutoff + CUTOFF_PROBE_STEP);
    for k in 1..n {
        let rel = ((probe[k] - omega_raw[k]) / omega_raw[k]).abs();
        if rel > CONVERGENCE_TOLERANCE {
            return Err(Error::Convergence {
                level: k,
                relative_change: rel,
            });
        }
    }

    let dim = 2 * cutoff + 1;
    let mut basis = DMatrix::from_fn(dim, n, |r, c| vectors[(r, c)]);
    // gauge: largest component of the ground state positive, then q_{k,k+1} > 0
    let (imax, _) =
        basis.column(0).iter().enumerate().fold(
            (0, 0.0f64),
            |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc },
        );
    if basis[(imax, 0)] < 0.0 {
        basis.column_mut(0).neg_mut();
    }
    let charge: Vec<f64> = (0..dim).map(|i| i as f64 - cutoff as f64).collect();
    let element =
        |b: &DMatrix<f64>, r: usize, c: usize| -> f64 { (0..dim).map(|i| b[(i, r)] * charge[i] * b[(i, c)]).sum() };
    for k in 1..n {
        if element(&basis, k - 1, k) < 0.0 {
            basis.column_mut(k).neg_mut();
        }
    }
    let q_op = DMatrix::from_fn(n, n, |r, c| element(&basis, r, c));

    let omega01_raw = omega_raw[1];
    let omega: Vec<f64> = omega_raw.iter().map(|w| w / omega01_raw).collect();
    let anharmonicity = if n >= 3 {
        (omega[2] - omega[1]) - omega[1]
    } else {
        // two-level truncation still reports the transmon anharmonicity
        let full = lowest_frequencies(&TransmonSpec { n_levels: 3, ..*spec }, cutoff);
        (full[2] - 2.0 * full[1]) / full[1]
    };

    let mut model = TransmonModel {
        spec: *spec,
        omega,
        omega_raw,
        omega01_raw,
        q_op,
        p_op: CMat::zeros(n),
        anharmonicity,
    };
    model.p_op = conjugate_operator(&model);
    Ok(model)
}

/// `p_nm = i (omega_n - omega_m) / omega_01 * q_nm`.
pub fn conjugate_operator(model: &TransmonModel) -> CMat {
    let n = model.q_op.nrows();
    let w01 = model.omega[1];
    CMat::from_fn(n, |r, c| {
        C64::new(0.0, (model.omega[r] - model.omega[c]) / w01 * model.q_op[(r, c)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_josephson_energy_gives_charge_parabola() {
        let spec = TransmonSpec {
            ej_over_ec: 1e-300,
            n_g: 0.0,
            n_levels: 2,
            charge_cutoff: 7,
        };
        let h = build_charge_hamiltonian(&spec);
        for i in 0..15 {
            let n = i as f64 - 7.0;
            assert!((h[(i, i)] - 4.0 * n * n).abs() < 1e-12);
            if i + 1 < 15 {
                assert!(h[(i, i + 1)].abs() < 1e-200);
            }
        }
    }

    #[test]
    fn charge_hamiltonian_is_symmetric_with_offset() {
        let spec = TransmonSpec::new(30.0, 3).with_offset_charge(0.27);
        let h = build_charge_hamiltonian(&spec);
        assert_eq!(h.nrows(), 31);
        assert!((&h - h.transpose()).amax() == 0.0);
        assert!((h[(15, 16)] + 15.0).abs() < 1e-14);
        assert!((h[(15, 15)] - 4.0 * 0.27f64.powi(2)).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(TransmonSpec::new(0.0, 3).validate().is_err());
        assert!(TransmonSpec::new(100.0, 1).validate().is_err());
        assert!(TransmonSpec::new(100.0, 5).with_charge_cutoff(9).validate().is_err());
        assert!(TransmonSpec::new(100.0, 5).with_charge_cutoff(10).validate().is_ok());
    }

    #[test]
    fn unconverged_cutoff_is_reported() {
        // deep transmon with a tiny charge window cannot hold the wavefunctions
        let spec = TransmonSpec::new(20_000.0, 3).with_charge_cutoff(8);
        assert!(matches!(
            diagonalize_and_truncate(&spec),
            Err(Error::Convergence { .. })
        ));
    }

    #[test]
    fn gauge_and_parity() {
        let m = TransmonModel::build(&TransmonSpec::new(100.0, 5)).unwrap();
        for k in 0..4 {
            assert!(m.q_op[(k, k + 1)] > 0.0);
        }
        for k in 0..5 {
            assert!(m.q_op[(k, k)].abs() < 1e-12);
        }
        assert!(m.omega[0] == 0.0 && (m.omega[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_operator_vanishes_on_diagonal_and_is_hermitian() {
        let m = TransmonModel::build(&TransmonSpec::new(100.0, 4).with_offset_charge(0.2)).unwrap();
        for k in 0..4 {
            assert_eq!(m.p_op[(k, k)], C64::new(0.0, 0.0));
        }
        assert!(m.p_op.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn two_level_conjugate_is_sigma_y_like() {
        let m = TransmonModel::build(&TransmonSpec::new(100.0, 2)).unwrap();
        let p = m.coupling_conjugate();
        // sigma_y = [[0, -i], [i, 0]]
        assert!((p[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((p[(1, 0)] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }
}

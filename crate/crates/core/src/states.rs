//! Validated two-qubit density matrices.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, partial_transpose_b, trace_product, Complex, Matrix2, Matrix4, HERMITIAN_TOL, PSD_TOL};

const TRACE_TOL: f64 = 1e-12;

/// The four maximally entangled two-qubit states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

/// A Hermitian, unit-trace, positive semidefinite 4×4 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(Matrix4);

impl DensityMatrix {
    /// Validates `matrix` as a density matrix.
    pub fn new(matrix: Matrix4) -> Result<Self> {
        let defect = matrix.hermiticity_defect();
        if !defect.is_finite() || defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace { trace });
        }
        let min_eigenvalue = matrix.min_eigenvalue_hermitian()?;
        if min_eigenvalue < PSD_TOL {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(DensityMatrix(matrix))
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.0, &self.0).re
    }

    pub fn partial_transpose(&self) -> Matrix4 {
        partial_transpose_b(&self.0)
    }

    /// Born expectation `tr(ρ·op)`; real part only.
    pub fn expectation(&self, op: &Matrix4) -> f64 {
        trace_product(&self.0, op).re
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        DensityMatrix::new(self.0.scale(w) + other.0.scale(1.0 - w))
    }
}

fn projector(amplitudes: [f64; 4]) -> Matrix4 {
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = Complex::new(amplitudes[i] * amplitudes[j], 0.0);
        }
    }
    m
}

pub fn bell_state(which: BellState) -> DensityMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amplitudes = match which {
        BellState::PhiPlus => [h, 0.0, 0.0, h],
        BellState::PhiMinus => [h, 0.0, 0.0, -h],
        BellState::PsiPlus => [0.0, h, h, 0.0],
        BellState::PsiMinus => [0.0, h, -h, 0.0],
    };
    DensityMatrix(projector(amplitudes))
}

/// `η·|Ψ⁻⟩⟨Ψ⁻| + (1−η)·I/4`.
pub fn werner_state(eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange {
            name: "eta",
            value: eta,
            min: 0.0,
            max: 1.0,
        });
    }
    let singlet = bell_state(BellState::PsiMinus).0;
    Ok(DensityMatrix(
        singlet.scale(eta) + Matrix4::identity().scale(0.25 * (1.0 - eta)),
    ))
}

/// Density matrix from separate real and imaginary 4×4 tables.
pub fn custom_state(real: &[[f64; 4]; 4], imag: &[[f64; 4]; 4]) -> Result<DensityMatrix> {
    DensityMatrix::new(Matrix4::from_parts(real, imag)?)
}

/// `ρ_A ⊗ ρ_B` for two single-qubit density matrices.
pub fn product_state(a: &Matrix2, b: &Matrix2) -> Result<DensityMatrix> {
    DensityMatrix::new(kron(a, b))
}

pub fn maximally_mixed() -> DensityMatrix {
    DensityMatrix(Matrix4::identity().scale(0.25))
}

/// Random full-rank state `G·G†/tr(G·G†)` from a complex Gaussian-like matrix `G`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let mut g = Matrix4::zeros();
    for row in g.0.iter_mut() {
        for z in row.iter_mut() {
            *z = Complex::new(gaussian(rng), gaussian(rng));
        }
    }
    let mut m = g * g.adjoint();
    let tr = m.trace().re;
    m = m.scale(1.0 / tr);
    // remove rounding asymmetry
    let m = (m + m.adjoint()).scale(0.5);
    DensityMatrix::new(m).expect("Gram matrix is a valid state")
}

/// Random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let mut psi = [Complex::new(0.0, 0.0); 4];
    for z in psi.iter_mut() {
        *z = Complex::new(gaussian(rng), gaussian(rng));
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut m = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            m.0[i][j] = psi[i] * psi[j].conj() / (norm * norm);
        }
    }
    let m = (m + m.adjoint()).scale(0.5);
    DensityMatrix::new(m).expect("pure projector is a valid state")
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box–Muller
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

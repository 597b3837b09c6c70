//! Dense complex matrices for one- and two-qubit operators.
//!
//! Only the two fixed sizes used by the library are needed: 2×2 single-qubit
//! operators and 4×4 two-qubit operators. Two-qubit matrices use the
//! computational basis ordering `|00⟩, |01⟩, |10⟩, |11⟩`, with subsystem A as
//! the left (most significant) factor of every Kronecker product.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// Tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-10;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Builds a complex number, rejecting NaN and infinite components.
pub fn finite_complex(re: f64, im: f64) -> Result<Complex> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex::new(re, im))
    } else {
        Err(Error::NonFinite { re, im })
    }
}

/// Dense `N×N` complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[Complex; N]; N]);

pub type Matrix2 = Matrix<2>;
pub type Matrix4 = Matrix<4>;

impl<const N: usize> Matrix<N> {
    pub fn zeros() -> Self {
        Matrix([[Complex::new(0.0, 0.0); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = Complex::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(entries: [[f64; N]; N]) -> Self {
        Matrix(entries.map(|row| row.map(|v| Complex::new(v, 0.0))))
    }

    /// Real diagonal matrix.
    pub fn diag(values: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in values.into_iter().enumerate() {
            m.0[i][i] = Complex::new(v, 0.0);
        }
        m
    }

    /// Assembles a matrix from separate real and imaginary tables, rejecting
    /// non-finite entries.
    pub fn from_parts(re: &[[f64; N]; N], im: &[[f64; N]; N]) -> Result<Self> {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = finite_complex(re[i][j], im[i][j])?;
            }
        }
        Ok(m)
    }

    pub fn real_part(&self) -> [[f64; N]; N] {
        self.0.map(|row| row.map(|z| z.re))
    }

    pub fn imag_part(&self) -> [[f64; N]; N] {
        self.0.map(|row| row.map(|z| z.im))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Matrix(self.0.map(|row| row.map(|z| z * factor)))
    }

    pub fn trace(&self) -> Complex {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    /// Largest entry-wise deviation from Hermiticity, `max |m[i][j] − conj(m[j][i])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in i..N {
                worst = worst.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Largest entry-wise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn eigenvalues_hermitian(&self) -> Result<[f64; N]> {
        let defect = self.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let mut values = if N == 2 {
            let mut out = [0.0; N];
            let [lo, hi] = eigenvalues_2x2(self.0[0][0].re, self.0[1][1].re, self.0[0][1]);
            out[0] = lo;
            out[1] = hi;
            out
        } else {
            jacobi_eigenvalues(self)
        };
        values.sort_by(f64::total_cmp);
        Ok(values)
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    pub fn min_eigenvalue_hermitian(&self) -> Result<f64> {
        Ok(self.eigenvalues_hermitian()?[0])
    }

    pub fn is_psd(&self) -> Result<bool> {
        Ok(self.min_eigenvalue_hermitian()? >= PSD_TOL)
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> std::iter::Sum for Matrix<N> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zeros(), |acc, m| acc + m)
    }
}

/// Kronecker product `a ⊗ b`: `out[2i+k][2j+l] = a[i][j]·b[k][l]`.
pub fn kron(a: &Matrix2, b: &Matrix2) -> Matrix4 {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

/// `tr(a·b)` without forming the product.
pub fn trace_product<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> Complex {
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..N {
        for k in 0..N {
            acc += a.0[i][k] * b.0[k][i];
        }
    }
    acc
}

/// Partial transpose on subsystem B of a two-qubit operator.
pub fn partial_transpose_b(m: &Matrix4) -> Matrix4 {
    let mut out = Matrix4::zeros();
    for i in 0..2 {
        for k in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    out.0[2 * i + k][2 * j + l] = m.0[2 * i + l][2 * j + k];
                }
            }
        }
    }
    out
}

pub fn pauli_x() -> Matrix2 {
    Matrix2::from_real([[0.0, 1.0], [1.0, 0.0]])
}

pub fn pauli_y() -> Matrix2 {
    let i = Complex::new(0.0, 1.0);
    Matrix([[Complex::new(0.0, 0.0), -i], [i, Complex::new(0.0, 0.0)]])
}

pub fn pauli_z() -> Matrix2 {
    Matrix2::diag([1.0, -1.0])
}

/// `n·σ` for a real 3-vector `n`.
pub fn bloch_operator(n: [f64; 3]) -> Matrix2 {
    pauli_x().scale(n[0]) + pauli_y().scale(n[1]) + pauli_z().scale(n[2])
}

/// `½(I + r·σ)` for an arbitrary real 3-vector `r`.
pub fn qubit_operator(weight: f64, r: [f64; 3]) -> Matrix2 {
    (Matrix2::identity() + bloch_operator(r)).scale(weight)
}

fn eigenvalues_2x2(a: f64, d: f64, b: Complex) -> [f64; 2] {
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - half_gap, mean + half_gap]
}

fn off_diagonal_norm<const N: usize>(m: &Matrix<N>) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        for j in 0..N {
            if i != j {
                acc += m.0[i][j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Cyclic complex Jacobi sweeps on a Hermitian matrix.
///
/// Each pivot `(p, q)` is first made real by a diagonal phase on column/row
/// `q`, after which an ordinary real Jacobi rotation zeroes it. The iteration
/// stops once the off-diagonal Frobenius norm drops below `1e-12` relative to
/// the matrix scale (absolute for matrices of norm ≤ 1).
fn jacobi_eigenvalues<const N: usize>(input: &Matrix<N>) -> [f64; N] {
    let mut a = *input;
    // symmetrize away sub-tolerance noise so the diagonal stays real
    for i in 0..N {
        a.0[i][i] = Complex::new(a.0[i][i].re, 0.0);
        for j in (i + 1)..N {
            let avg = 0.5 * (a.0[i][j] + a.0[j][i].conj());
            a.0[i][j] = avg;
            a.0[j][i] = avg.conj();
        }
    }
    let threshold = JACOBI_TOL * input.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < threshold {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a.0[p][q];
                let magnitude = apq.norm();
                if magnitude == 0.0 {
                    continue;
                }
                // phase: column q *= e^{-iφ}, row q *= e^{iφ}
                let phase = apq / magnitude;
                for k in 0..N {
                    a.0[k][q] *= phase.conj();
                }
                for k in 0..N {
                    a.0[q][k] *= phase;
                }
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let theta = (aqq - app) / (2.0 * magnitude);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns
                for k in 0..N {
                    let kp = a.0[k][p];
                    let kq = a.0[k][q];
                    a.0[k][p] = kp * c - kq * s;
                    a.0[k][q] = kp * s + kq * c;
                }
                // rows
                for k in 0..N {
                    let pk = a.0[p][k];
                    let qk = a.0[q][k];
                    a.0[p][k] = pk * c - qk * s;
                    a.0[q][k] = pk * s + qk * c;
                }
                a.0[p][q] = Complex::new(0.0, 0.0);
                a.0[q][p] = Complex::new(0.0, 0.0);
            }
        }
    }

    let mut out = [0.0; N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = a.0[i][i].re;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn arb_matrix2() -> impl Strategy<Value = Matrix2> {
        prop::array::uniform4((-1.0..1.0f64, -1.0..1.0f64)).prop_map(|e| {
            Matrix([[c(e[0].0, e[0].1), c(e[1].0, e[1].1)], [c(e[2].0, e[2].1), c(e[3].0, e[3].1)]])
        })
    }

    fn arb_hermitian4() -> impl Strategy<Value = Matrix4> {
        prop::collection::vec(-1.0..1.0f64, 16).prop_map(|v| {
            let mut m = Matrix4::zeros();
            let mut it = v.into_iter();
            for i in 0..4 {
                m.0[i][i] = c(it.next().unwrap(), 0.0);
                for j in (i + 1)..4 {
                    let z = c(it.next().unwrap(), it.next().unwrap());
                    m.0[i][j] = z;
                    m.0[j][i] = z.conj();
                }
            }
            m
        })
    }

    #[test]
    fn kron_identity() {
        assert_eq!(kron(&Matrix2::identity(), &Matrix2::identity()), Matrix4::identity());
    }

    #[test]
    fn kron_projectors() {
        let p = Matrix2::diag([1.0, 0.0]);
        assert_eq!(kron(&p, &p), Matrix4::diag([1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_sigma_z() {
        let zz = kron(&pauli_z(), &pauli_z());
        assert_eq!(zz, Matrix4::diag([1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn trace_products() {
        assert_eq!(trace_product(&Matrix4::identity(), &Matrix4::identity()), c(4.0, 0.0));
        let rho = Matrix4::identity().scale(0.25);
        assert!((trace_product(&rho, &Matrix4::identity()) - c(1.0, 0.0)).norm() < 1e-15);
        let p00 = Matrix4::diag([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(trace_product(&p00, &p00), c(1.0, 0.0));
    }

    #[test]
    fn min_eigenvalues() {
        assert_eq!(Matrix2::identity().min_eigenvalue_hermitian().unwrap(), 1.0);
        assert_eq!(pauli_z().min_eigenvalue_hermitian().unwrap(), -1.0);
        let proj = qubit_operator(0.5, [0.6, 0.0, 0.8]);
        assert!(proj.min_eigenvalue_hermitian().unwrap().abs() < 1e-15);
        let big = Matrix4::diag([3.0, -2.0, 0.5, 1.0]);
        assert_eq!(big.eigenvalues_hermitian().unwrap(), [-2.0, 0.5, 1.0, 3.0]);
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        // σy ⊗ σy has eigenvalues {-1,-1,1,1}
        let m = kron(&pauli_y(), &pauli_y());
        let ev = m.eigenvalues_hermitian().unwrap();
        for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12, "{ev:?}");
        }
    }

    #[test]
    fn not_hermitian_rejected() {
        let m = Matrix2::from_real([[1.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(m.min_eigenvalue_hermitian(), Err(Error::NotHermitian { .. })));
        let mut m4 = Matrix4::identity();
        m4.0[0][3] = c(0.0, 1e-6);
        assert!(matches!(m4.min_eigenvalue_hermitian(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(finite_complex(f64::NAN, 0.0).is_err());
        assert!(finite_complex(0.0, f64::INFINITY).is_err());
        let mut re = [[0.0; 2]; 2];
        re[1][1] = f64::NAN;
        assert!(Matrix2::from_parts(&re, &[[0.0; 2]; 2]).is_err());
    }

    #[test]
    fn partial_transpose_of_product_is_product_of_transpose() {
        let a = bloch_operator([0.3, 0.4, 0.5]);
        let b = bloch_operator([0.1, -0.7, 0.2]);
        let pt = partial_transpose_b(&kron(&a, &b));
        let b_t = Matrix([[b.0[0][0], b.0[1][0]], [b.0[0][1], b.0[1][1]]]);
        assert!(pt.max_abs_diff(&kron(&a, &b_t)) < 1e-15);
    }

    proptest! {
        #[test]
        fn kron_is_bilinear(a in arb_matrix2(), b in arb_matrix2(), m in arb_matrix2()) {
            let lhs = kron(&(a + b), &m);
            let rhs = kron(&a, &m) + kron(&b, &m);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            let lhs = kron(&m, &(a + b));
            let rhs = kron(&m, &a) + kron(&m, &b);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn kron_trace_is_multiplicative(a in arb_matrix2(), b in arb_matrix2()) {
            prop_assert!((kron(&a, &b).trace() - a.trace() * b.trace()).norm() < 1e-12);
        }

        #[test]
        fn eigenvalues_sum_to_trace(m in arb_hermitian4()) {
            let ev = m.eigenvalues_hermitian().unwrap();
            prop_assert!((ev.iter().sum::<f64>() - m.trace().re).abs() < 1e-10);
            // and square sum matches Frobenius norm
            let sq: f64 = ev.iter().map(|v| v * v).sum();
            prop_assert!((sq - m.frobenius_norm().powi(2)).abs() < 1e-10);
        }

        #[test]
        fn trace_product_of_hermitians_is_real(a in arb_hermitian4(), b in arb_hermitian4()) {
            prop_assert!(trace_product(&a, &b).im.abs() <= 1e-12);
        }
    }
}

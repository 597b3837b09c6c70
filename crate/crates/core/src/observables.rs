//! Sharp dichotomic observables `X, Y` on subsystem A and `U, V` on subsystem B.
//!
//! Outcome `w = +1` corresponds to the projector along `+n`, so that
//! `Δ_W(w) = ½(I + w·n·σ)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bloch_operator, qubit_operator, Matrix2};

const BLOCH_NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    X,
    Y,
    U,
    V,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::X, Label::Y, Label::U, Label::V];

    pub fn subsystem(self) -> Subsystem {
        match self {
            Label::X | Label::Y => Subsystem::A,
            Label::U | Label::V => Subsystem::B,
        }
    }

    /// Position of the variable in `ξ = (x, y, u, v)`.
    pub fn position(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::X => "X",
            Label::Y => "Y",
            Label::U => "U",
            Label::V => "V",
        };
        f.write_str(s)
    }
}

/// A dichotomic observable `n·σ` with unit Bloch vector `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSpec {
    label: Label,
    bloch: [f64; 3],
}

impl ObservableSpec {
    pub fn new(label: Label, bloch: [f64; 3]) -> Result<Self> {
        let norm = norm(bloch);
        if !norm.is_finite() || (norm - 1.0).abs() > BLOCH_NORM_TOL {
            return Err(Error::NotUnitBloch { label, norm });
        }
        Ok(ObservableSpec { label, bloch })
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn operator(&self) -> Matrix2 {
        bloch_operator(self.bloch)
    }
}

/// Projective measurement `{Δ_W(+1), Δ_W(−1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpPovm {
    pub element_plus: Matrix2,
    pub element_minus: Matrix2,
}

impl SharpPovm {
    pub fn element(&self, w: i8) -> &Matrix2 {
        if w > 0 {
            &self.element_plus
        } else {
            &self.element_minus
        }
    }
}

pub fn sharp_povm(obs: &ObservableSpec) -> SharpPovm {
    let n = obs.bloch;
    SharpPovm {
        element_plus: qubit_operator(0.5, n),
        element_minus: qubit_operator(0.5, n.map(|c| -c)),
    }
}

/// The four measurement directions of a Bell test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub x: ObservableSpec,
    pub y: ObservableSpec,
    pub u: ObservableSpec,
    pub v: ObservableSpec,
}

impl Settings {
    /// Builds settings from four Bloch vectors in `(x, y, u, v)` order.
    pub fn from_bloch(vectors: [[f64; 3]; 4]) -> Result<Self> {
        Ok(Settings {
            x: ObservableSpec::new(Label::X, vectors[0])?,
            y: ObservableSpec::new(Label::Y, vectors[1])?,
            u: ObservableSpec::new(Label::U, vectors[2])?,
            v: ObservableSpec::new(Label::V, vectors[3])?,
        })
    }

    pub fn get(&self, label: Label) -> &ObservableSpec {
        match label {
            Label::X => &self.x,
            Label::Y => &self.y,
            Label::U => &self.u,
            Label::V => &self.v,
        }
    }

    pub fn bloch_vectors(&self) -> [[f64; 3]; 4] {
        [self.x.bloch, self.y.bloch, self.u.bloch, self.v.bloch]
    }
}

/// Settings reaching `|S| = 2√2` for the singlet with
/// `s(ξ) = xu − xv + yu + yv`.
///
/// `X = σz`, `Y = σx`, `U = (σz + σx)/√2`, `V = (σx − σz)/√2`. The sign of `V`
/// is fixed by the minus sign on the `xv` term.
pub fn chsh_optimal_angles() -> Settings {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Settings::from_bloch([
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [h, 0.0, h],
        [h, 0.0, -h],
    ])
    .expect("unit vectors")
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, trace_product};
    use crate::states::{bell_state, BellState};
    use proptest::prelude::*;

    fn unit_vector() -> impl Strategy<Value = [f64; 3]> {
        (-1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(cz, phi)| {
            let r = (1.0 - cz * cz).sqrt();
            [r * phi.cos(), r * phi.sin(), cz]
        })
    }

    #[test]
    fn z_and_x_eigenprojectors() {
        let z = sharp_povm(&ObservableSpec::new(Label::X, [0.0, 0.0, 1.0]).unwrap());
        assert_eq!(z.element_plus, Matrix2::diag([1.0, 0.0]));
        assert_eq!(z.element_minus, Matrix2::diag([0.0, 1.0]));
        let x = sharp_povm(&ObservableSpec::new(Label::Y, [1.0, 0.0, 0.0]).unwrap());
        assert_eq!(x.element_plus, Matrix2::from_real([[0.5, 0.5], [0.5, 0.5]]));
    }

    #[test]
    fn rejects_non_unit_vectors() {
        assert!(matches!(
            ObservableSpec::new(Label::U, [0.0, 0.0, 1.1]),
            Err(Error::NotUnitBloch { label: Label::U, .. })
        ));
        assert!(ObservableSpec::new(Label::U, [0.0, 0.0, 0.0]).is_err());
        assert!(ObservableSpec::new(Label::U, [f64::NAN, 0.0, 1.0]).is_err());
    }

    #[test]
    fn optimal_settings() {
        let s = chsh_optimal_angles();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s.u.bloch(), [h, 0.0, h]);
        for v in s.bloch_vectors() {
            assert!((norm(v) - 1.0).abs() < 1e-12);
        }
        assert!(dot(s.x.bloch(), s.y.bloch()).abs() < 1e-12);
        assert!(dot(s.u.bloch(), s.v.bloch()).abs() < 1e-12);
    }

    #[test]
    fn singlet_xu_correlation() {
        let s = chsh_optimal_angles();
        let rho = bell_state(BellState::PsiMinus);
        let px = sharp_povm(&s.x);
        let pu = sharp_povm(&s.u);
        let mut corr = 0.0;
        for x in [1i8, -1] {
            for u in [1i8, -1] {
                let p = trace_product(rho.matrix(), &kron(px.element(x), pu.element(u))).re;
                corr += f64::from(x * u) * p;
            }
        }
        assert!((corr + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sharp_povm_is_projective(n in unit_vector()) {
            let obs = ObservableSpec::new(Label::X, n).unwrap();
            let p = sharp_povm(&obs);
            prop_assert!((p.element_plus + p.element_minus).max_abs_diff(&Matrix2::identity()) < 1e-12);
            for e in [p.element_plus, p.element_minus] {
                prop_assert!((e * e).max_abs_diff(&e) < 1e-10);
                prop_assert!(e.min_eigenvalue_hermitian().unwrap() >= -1e-10);
            }
            let recovered = trace_product(&(p.element_plus - p.element_minus), &obs.operator()).re / 2.0;
            prop_assert!((recovered - 1.0).abs() < 1e-12);
        }
    }
}

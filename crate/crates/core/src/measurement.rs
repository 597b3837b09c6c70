//! Joint unsharp measurement of two observables per subsystem, its
//! 16-outcome product, and the observed statistics `p̃(ξ′|ρ)`.
//!
//! Each subsystem measurement has four elements
//! `Δ̃(w₁′, w₂′) = ¼(I + γ₁w₁′ n₁·σ + γ₂w₂′ n₂·σ)`, whose one-variable marginals
//! are the unsharp versions `½(I + γ w′ n·σ)` of the sharp observables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, qubit_operator, trace_product, Matrix2, Matrix4, PSD_TOL};
use crate::observables::{dot, Label, ObservableSpec, Settings};
use crate::states::DensityMatrix;

/// Smallest admissible `|γ|`.
pub const GAMMA_MIN: f64 = 1e-6;
const PAIR_TOL: f64 = 1e-12;
const ORTHOGONAL_TOL: f64 = 1e-12;
const CLAMP_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-10;

/// Measurement accuracies `γ_X, γ_Y, γ_U, γ_V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSet {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub v: f64,
}

impl GammaSet {
    pub fn new(x: f64, y: f64, u: f64, v: f64) -> Result<Self> {
        let set = GammaSet { x, y, u, v };
        for label in Label::ALL {
            check_gamma(label, set.get(label))?;
        }
        Ok(set)
    }

    pub fn equal(gamma: f64) -> Result<Self> {
        Self::new(gamma, gamma, gamma, gamma)
    }

    pub fn get(&self, label: Label) -> f64 {
        match label {
            Label::X => self.x,
            Label::Y => self.y,
            Label::U => self.u,
            Label::V => self.v,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.u, self.v]
    }

    /// For Bloch-orthogonal pairs, checks `γ₁² + γ₂² ≤ 1`.
    pub fn check_pairs(&self, settings: &Settings) -> Result<()> {
        for (first, second) in [(Label::X, Label::Y), (Label::U, Label::V)] {
            let cos = dot(settings.get(first).bloch(), settings.get(second).bloch());
            let sum_sq = self.get(first).powi(2) + self.get(second).powi(2);
            if cos.abs() <= ORTHOGONAL_TOL && sum_sq > 1.0 + PAIR_TOL {
                return Err(Error::GammaPairTooLarge { first, second, sum_sq });
            }
        }
        Ok(())
    }
}

pub(crate) fn check_gamma(label: Label, value: f64) -> Result<()> {
    let magnitude = value.abs();
    if !(GAMMA_MIN..=1.0).contains(&magnitude) {
        return Err(Error::GammaOutOfRange { label, value });
    }
    Ok(())
}

/// One outcome `(x, y, u, v)` with each component `±1`.
///
/// The 16 outcomes are ordered lexicographically with `+1` before `−1`,
/// `x` most significant: index bit 3 ↔ `x`, bit 0 ↔ `v`, set bit ↔ `−1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct Outcome([i8; 4]);

impl Outcome {
    pub const COUNT: usize = 16;

    pub fn new(x: i64, y: i64, u: i64, v: i64) -> Result<Self> {
        Self::try_from([x, y, u, v])
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < Self::COUNT, "outcome index {index} out of range");
        let bit = |shift: usize| if (index >> shift) & 1 == 1 { -1 } else { 1 };
        Outcome([bit(3), bit(2), bit(1), bit(0)])
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, &w| (acc << 1) | usize::from(w < 0))
    }

    /// All 16 outcomes in canonical order.
    pub fn all() -> impl Iterator<Item = Outcome> {
        (0..Self::COUNT).map(Outcome::from_index)
    }

    pub fn get(&self, label: Label) -> i8 {
        self.0[label.position()]
    }

    pub fn x(&self) -> i8 {
        self.0[0]
    }

    pub fn y(&self) -> i8 {
        self.0[1]
    }

    pub fn u(&self) -> i8 {
        self.0[2]
    }

    pub fn v(&self) -> i8 {
        self.0[3]
    }

    pub fn components(&self) -> [i8; 4] {
        self.0
    }

    /// Index of `(x′, y′)` within subsystem A's four elements.
    fn subsystem_a_index(&self) -> usize {
        self.index() >> 2
    }

    fn subsystem_b_index(&self) -> usize {
        self.index() & 3
    }
}

impl TryFrom<[i64; 4]> for Outcome {
    type Error = Error;

    fn try_from(values: [i64; 4]) -> Result<Self> {
        let mut out = [0i8; 4];
        for (slot, value) in out.iter_mut().zip(values) {
            *slot = match value {
                1 => 1,
                -1 => -1,
                other => return Err(Error::InvalidOutcome(other)),
            };
        }
        Ok(Outcome(out))
    }
}

impl From<Outcome> for [i64; 4] {
    fn from(o: Outcome) -> Self {
        o.0.map(i64::from)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, u, v] = self.0;
        write!(f, "({x:+}, {y:+}, {u:+}, {v:+})")
    }
}

/// Four-outcome joint measurement on one qubit, indexed by `(w₁′, w₂′)`
/// with the same `+1`-first ordering as [`Outcome`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsystemPovm {
    pub first: ObservableSpec,
    pub second: ObservableSpec,
    pub gammas: (f64, f64),
    pub elements: [Matrix2; 4],
}

impl SubsystemPovm {
    pub fn element(&self, w1: i8, w2: i8) -> &Matrix2 {
        &self.elements[2 * usize::from(w1 < 0) + usize::from(w2 < 0)]
    }

    /// Marginal `Σ_{partner} Δ̃(w₁′, w₂′)` for the observable `label`.
    pub fn marginal(&self, label: Label, w: i8) -> Result<Matrix2> {
        if label == self.first.label() {
            Ok(*self.element(w, 1) + *self.element(w, -1))
        } else if label == self.second.label() {
            Ok(*self.element(1, w) + *self.element(-1, w))
        } else {
            Err(Error::InvalidPair(self.first.label(), label))
        }
    }
}

fn signs() -> [(i8, i8); 4] {
    [(1, 1), (1, -1), (-1, 1), (-1, -1)]
}

/// Builds `Δ̃(w₁′, w₂′) = ¼(I + γ₁w₁′ n₁·σ + γ₂w₂′ n₂·σ)` and checks positivity.
pub fn build_joint_povm(
    first: &ObservableSpec,
    second: &ObservableSpec,
    gammas: (f64, f64),
) -> Result<SubsystemPovm> {
    let pair_ok = matches!(
        (first.label(), second.label()),
        (Label::X, Label::Y) | (Label::U, Label::V)
    );
    if !pair_ok {
        return Err(Error::InvalidPair(first.label(), second.label()));
    }
    check_gamma(first.label(), gammas.0)?;
    check_gamma(second.label(), gammas.1)?;

    let (n1, n2) = (first.bloch(), second.bloch());
    let mut elements = [Matrix2::zeros(); 4];
    for (slot, (w1, w2)) in elements.iter_mut().zip(signs()) {
        let a = gammas.0 * f64::from(w1);
        let b = gammas.1 * f64::from(w2);
        let r = [0, 1, 2].map(|k| a * n1[k] + b * n2[k]);
        let element = qubit_operator(0.25, r);
        let min_eigenvalue = element.min_eigenvalue_hermitian()?;
        if min_eigenvalue < PSD_TOL {
            return Err(Error::NotPositive {
                first: w1,
                second: w2,
                min_eigenvalue,
            });
        }
        *slot = element;
    }
    Ok(SubsystemPovm {
        first: *first,
        second: *second,
        gammas,
        elements,
    })
}

/// `Δ̃(ξ′) = Δ̃_A(x′, y′) ⊗ Δ̃_B(u′, v′)` for all 16 outcomes.
pub fn product_povm(a: &SubsystemPovm, b: &SubsystemPovm) -> [Matrix4; 16] {
    let mut out = [Matrix4::zeros(); 16];
    for outcome in Outcome::all() {
        out[outcome.index()] = kron(
            &a.elements[outcome.subsystem_a_index()],
            &b.elements[outcome.subsystem_b_index()],
        );
    }
    out
}

/// The full joint measurement on both qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPovm {
    pub gammas: GammaSet,
    pub subsystem_a: SubsystemPovm,
    pub subsystem_b: SubsystemPovm,
    pub product: [Matrix4; 16],
}

impl JointPovm {
    pub fn new(settings: &Settings, gammas: GammaSet) -> Result<Self> {
        let subsystem_a = build_joint_povm(&settings.x, &settings.y, (gammas.x, gammas.y))?;
        let subsystem_b = build_joint_povm(&settings.u, &settings.v, (gammas.u, gammas.v))?;
        let product = product_povm(&subsystem_a, &subsystem_b);
        Ok(JointPovm {
            gammas,
            subsystem_a,
            subsystem_b,
            product,
        })
    }

    pub fn element(&self, outcome: Outcome) -> &Matrix4 {
        &self.product[outcome.index()]
    }

    pub fn subsystem(&self, label: Label) -> &SubsystemPovm {
        match label {
            Label::X | Label::Y => &self.subsystem_a,
            Label::U | Label::V => &self.subsystem_b,
        }
    }

    /// Single-qubit marginal `Δ̃_W(w′)` of the observable `label`.
    pub fn marginal(&self, label: Label, w: i8) -> Matrix2 {
        self.subsystem(label)
            .marginal(label, w)
            .expect("label belongs to its own subsystem")
    }
}

/// `p̃(ξ′|ρ) = tr[ρ Δ̃(ξ′)]` in canonical outcome order.
///
/// Values within `1e-12` below zero are clamped to zero; anything more
/// negative, or a total deviating from 1 by more than `1e-10`, is reported
/// as an internal inconsistency.
pub fn observed_statistics(rho: &DensityMatrix, povm: &JointPovm) -> Result<[f64; 16]> {
    let mut probs = [0.0; 16];
    for (p, element) in probs.iter_mut().zip(povm.product.iter()) {
        let value = trace_product(rho.matrix(), element).re;
        if value < -CLAMP_TOL {
            return Err(Error::Inconsistent {
                what: "negative observed probability".into(),
                deviation: value,
            });
        }
        *p = value.max(0.0);
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Inconsistent {
            what: "observed statistics do not sum to 1".into(),
            deviation: total - 1.0,
        });
    }
    Ok(probs)
}

//! State-independent inversion from joint-measurement outcomes `ξ′` to the
//! sharp Bell-test variables `ξ`.
//!
//! Per observable, `p_W(w|w′) = ½(1 + w·w′/γ_W)`. The joint kernel is the
//! product of the four, and applying it to `p̃(ξ′|ρ)` gives a normalized but
//! possibly negative distribution `p(ξ|ρ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix2;
use crate::measurement::{check_gamma, GammaSet, JointPovm, Outcome};
use crate::observables::{sharp_povm, Label, SharpPovm, Subsystem};

const NORMALIZATION_TOL: f64 = 1e-10;
const MARGINAL_CLAMP_TOL: f64 = 1e-10;

fn sign_index(w: i8) -> usize {
    usize::from(w < 0)
}

/// `table[w][w′] = p_W(w|w′)` with index 0 ↔ `+1`.
pub fn kernel_1d(gamma: f64) -> Result<[[f64; 2]; 2]> {
    check_gamma(Label::X, gamma)?;
    Ok(kernel_1d_unchecked(gamma))
}

fn kernel_1d_unchecked(gamma: f64) -> [[f64; 2]; 2] {
    let same = 0.5 * (1.0 + 1.0 / gamma);
    let flip = 0.5 * (1.0 - 1.0 / gamma);
    [[same, flip], [flip, same]]
}

/// The 16×16 quasi-stochastic table `p(ξ|ξ′)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InversionKernel {
    gammas: GammaSet,
    singles: [[[f64; 2]; 2]; 4],
    table: [[f64; 16]; 16],
}

impl InversionKernel {
    pub fn gammas(&self) -> &GammaSet {
        &self.gammas
    }

    /// `p(ξ|ξ′)`.
    pub fn conditional(&self, xi: Outcome, xi_prime: Outcome) -> f64 {
        self.table[xi.index()][xi_prime.index()]
    }

    /// `p_W(w|w′)` for a single observable.
    pub fn single(&self, label: Label, w: i8, w_prime: i8) -> f64 {
        self.singles[label.position()][sign_index(w)][sign_index(w_prime)]
    }

    /// Column `ξ′` of the table: the inferred quasi-distribution over `ξ`.
    pub fn column(&self, xi_prime: Outcome) -> [f64; 16] {
        let j = xi_prime.index();
        std::array::from_fn(|i| self.table[i][j])
    }

    pub fn table(&self) -> &[[f64; 16]; 16] {
        &self.table
    }

    /// Overwrites one table entry. Used to exercise failure paths of the
    /// validation suite.
    pub(crate) fn corrupt(&mut self, xi: Outcome, xi_prime: Outcome, delta: f64) {
        self.table[xi.index()][xi_prime.index()] += delta;
    }
}

/// `p(ξ|ξ′) = p_X(x|x′)·p_Y(y|y′)·p_U(u|u′)·p_V(v|v′)`.
pub fn build_kernel(gammas: &GammaSet) -> InversionKernel {
    let singles = gammas.as_array().map(kernel_1d_unchecked);
    let mut table = [[0.0; 16]; 16];
    for xi in Outcome::all() {
        for xp in Outcome::all() {
            table[xi.index()][xp.index()] = Label::ALL
                .iter()
                .map(|&l| {
                    singles[l.position()][sign_index(xi.get(l))][sign_index(xp.get(l))]
                })
                .product();
        }
    }
    InversionKernel {
        gammas: *gammas,
        singles,
        table,
    }
}

/// Signed distribution `p(ξ|ρ)` over the 16 outcomes in canonical order.
///
/// Serialized as a plain array of 16 reals, ordered as [`Outcome::from_index`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuasiDistribution(pub [f64; 16]);

impl QuasiDistribution {
    pub fn get(&self, xi: Outcome) -> f64 {
        self.0[xi.index()]
    }

    pub fn entries(&self) -> &[f64; 16] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total negative weight `Σ max(0, −p)`.
    pub fn negativity(&self) -> f64 {
        self.0.iter().map(|&p| (-p).max(0.0)).sum()
    }

    /// `Σ` over the variables other than `label`, indexed by `w` (+1 first).
    pub fn single_marginal(&self, label: Label) -> [f64; 2] {
        let mut out = [0.0; 2];
        for xi in Outcome::all() {
            out[sign_index(xi.get(label))] += self.get(xi);
        }
        out
    }

    /// Unclamped pair marginal over any two distinct labels, indexed
    /// `2·[first = −1] + [second = −1]`.
    pub fn pair_marginal_raw(&self, first: Label, second: Label) -> [f64; 4] {
        let mut out = [0.0; 4];
        for xi in Outcome::all() {
            out[2 * sign_index(xi.get(first)) + sign_index(xi.get(second))] += self.get(xi);
        }
        out
    }
}

/// `p(ξ|ρ) = Σ_ξ′ p(ξ|ξ′)·p̃(ξ′|ρ)`.
pub fn invert_distribution(kernel: &InversionKernel, observed: &[f64; 16]) -> Result<QuasiDistribution> {
    let total: f64 = observed.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!(
            "observed statistics sum to {total}"
        )));
    }
    let mut out = [0.0; 16];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = kernel.table[i]
            .iter()
            .zip(observed)
            .map(|(k, p)| k * p)
            .sum();
    }
    Ok(QuasiDistribution(out))
}

/// `Δ_W(w) = Σ_w′ p_W(w|w′)·Δ̃_W(w′)`, which for this measurement equals the
/// sharp projector of `W`.
pub fn reconstructed_sharp_povm(kernel: &InversionKernel, povm: &JointPovm, label: Label) -> Result<SharpPovm> {
    let kernel_gamma = kernel.gammas.get(label);
    let povm_gamma = povm.gammas.get(label);
    if kernel_gamma != povm_gamma {
        return Err(Error::Inconsistent {
            what: format!("kernel gamma_{label} does not match measurement"),
            deviation: kernel_gamma - povm_gamma,
        });
    }
    let element = |w: i8| -> Matrix2 {
        [1i8, -1]
            .into_iter()
            .map(|wp| povm.marginal(label, wp).scale(kernel.single(label, w, wp)))
            .sum()
    };
    Ok(SharpPovm {
        element_plus: element(1),
        element_minus: element(-1),
    })
}

/// Exact two-observable statistics `p_{W,W′}(w, w′)` for one A and one B
/// observable, indexed `2·[w = −1] + [w′ = −1]`.
///
/// Entries within `1e-10` below zero are clamped; more negative entries mean
/// the input is not the inversion of genuine measurement statistics.
pub fn cross_marginal(q: &QuasiDistribution, a: Label, b: Label) -> Result<[f64; 4]> {
    if a.subsystem() != Subsystem::A || b.subsystem() != Subsystem::B {
        return Err(Error::InvalidPair(a, b));
    }
    let mut out = q.pair_marginal_raw(a, b);
    for p in out.iter_mut() {
        if *p < -MARGINAL_CLAMP_TOL {
            return Err(Error::Inconsistent {
                what: format!("negative cross marginal p_{a}{b}"),
                deviation: *p,
            });
        }
        *p = p.max(0.0);
    }
    Ok(out)
}

/// Sharp projector for `label` taken straight from the observable; the
/// independent reference for [`reconstructed_sharp_povm`].
pub fn target_sharp_povm(povm: &JointPovm, label: Label) -> SharpPovm {
    let sub = povm.subsystem(label);
    let spec = if sub.first.label() == label {
        sub.first
    } else {
        sub.second
    };
    sharp_povm(&spec)
}

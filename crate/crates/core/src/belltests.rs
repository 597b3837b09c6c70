//! CHSH and Clauser–Horne quantities, on the ensemble and per outcome.
//!
//! Every single-shot value is computed twice: once by summing over the
//! inferred conditional distribution `p(ξ|ξ′)` held in the kernel table,
//! once from the closed form in the `γ` factors. A disagreement beyond
//! `1e-10` (relative to the size of the summed terms) is an error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inversion::{InversionKernel, QuasiDistribution};
use crate::linalg::kron;
use crate::measurement::{GammaSet, Outcome};
use crate::observables::{sharp_povm, Label, Settings};
use crate::states::DensityMatrix;

/// Classical bound on `|S|`.
pub const CHSH_BOUND: f64 = 2.0;
/// Classical bounds `0 ≥ C ≥ −1`.
pub const CH_UPPER: f64 = 0.0;
pub const CH_LOWER: f64 = -1.0;

const DUAL_PATH_TOL: f64 = 1e-10;
const BOUNDARY_TOL: f64 = 1e-10;

fn w(v: i8) -> f64 {
    f64::from(v)
}

/// `s(ξ) = xu − xv + yu + yv`.
pub fn s_of_xi(xi: Outcome) -> f64 {
    let (x, y, u, v) = (w(xi.x()), w(xi.y()), w(xi.u()), w(xi.v()));
    x * u - x * v + y * u + y * v
}

/// `S = Σ_ξ s(ξ)·p(ξ|ρ)`.
pub fn ensemble_chsh(q: &QuasiDistribution) -> f64 {
    Outcome::all().map(|xi| s_of_xi(xi) * q.get(xi)).sum()
}

/// `Σ_ξ s(ξ)·p(ξ|ξ′)` straight from the kernel table.
pub fn single_shot_chsh_sum(kernel: &InversionKernel, xi_prime: Outcome) -> f64 {
    Outcome::all()
        .map(|xi| s_of_xi(xi) * kernel.conditional(xi, xi_prime))
        .sum()
}

/// `[γ_Yγ_V x′u′ − γ_Yγ_U x′v′ + γ_Xγ_V y′u′ + γ_Xγ_U y′v′] / (γ_Xγ_Yγ_Uγ_V)`.
pub fn single_shot_chsh_closed_form(gammas: &GammaSet, xi_prime: Outcome) -> f64 {
    let GammaSet { x: gx, y: gy, u: gu, v: gv } = *gammas;
    let (x, y, u, v) = (
        w(xi_prime.x()),
        w(xi_prime.y()),
        w(xi_prime.u()),
        w(xi_prime.v()),
    );
    (gy * gv * x * u - gy * gu * x * v + gx * gv * y * u + gx * gu * y * v) / (gx * gy * gu * gv)
}

fn agree(what: impl FnOnce() -> String, a: f64, b: f64, scale: f64) -> Result<()> {
    let deviation = a - b;
    if deviation.abs() <= DUAL_PATH_TOL * scale.max(1.0) {
        Ok(())
    } else {
        Err(Error::Inconsistent {
            what: what(),
            deviation,
        })
    }
}

/// Single-shot CHSH value `S(ξ′)`, cross-checked against the closed form.
pub fn single_shot_chsh(kernel: &InversionKernel, xi_prime: Outcome) -> Result<f64> {
    let summed = single_shot_chsh_sum(kernel, xi_prime);
    let closed = single_shot_chsh_closed_form(kernel.gammas(), xi_prime);
    let scale: f64 = Outcome::all()
        .map(|xi| (s_of_xi(xi) * kernel.conditional(xi, xi_prime)).abs())
        .sum();
    agree(|| format!("S({xi_prime}) summed vs closed form"), summed, closed, scale)?;
    Ok(closed)
}

/// `S(ξ′)` for all 16 outcomes in canonical order.
pub fn single_shot_chsh_table(kernel: &InversionKernel) -> Result<[f64; 16]> {
    let mut out = [0.0; 16];
    for xp in Outcome::all() {
        out[xp.index()] = single_shot_chsh(kernel, xp)?;
    }
    Ok(out)
}

/// Mean of `S(ξ′)` over a list of recorded outcomes.
pub fn ensemble_from_shots(kernel: &InversionKernel, shots: &[Outcome]) -> Result<f64> {
    if shots.is_empty() {
        return Err(Error::EmptyShotList);
    }
    let table = single_shot_chsh_table(kernel)?;
    let sum: f64 = shots.iter().map(|o| table[o.index()]).sum();
    Ok(sum / shots.len() as f64)
}

/// Probabilities entering the CH combination for one `ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChTerms {
    pub xu: f64,
    pub xv: f64,
    pub yu: f64,
    pub yv: f64,
    pub y: f64,
    pub u: f64,
}

impl ChTerms {
    /// `C = p_XU − p_XV + p_YU + p_YV − p_Y − p_U`.
    pub fn value(&self) -> f64 {
        self.xu - self.xv + self.yu + self.yv - self.y - self.u
    }

    fn magnitude(&self) -> f64 {
        [self.xu, self.xv, self.yu, self.yv, self.y, self.u]
            .iter()
            .map(|v| v.abs())
            .sum()
    }

    /// Terms read off a (quasi-)distribution over `ξ` given as 16 entries.
    pub fn from_distribution(entries: &[f64; 16], xi: Outcome) -> Self {
        let pair = |a: Label, b: Label| -> f64 {
            Outcome::all()
                .filter(|o| o.get(a) == xi.get(a) && o.get(b) == xi.get(b))
                .map(|o| entries[o.index()])
                .sum()
        };
        let single = |a: Label| -> f64 {
            Outcome::all()
                .filter(|o| o.get(a) == xi.get(a))
                .map(|o| entries[o.index()])
                .sum()
        };
        ChTerms {
            xu: pair(Label::X, Label::U),
            xv: pair(Label::X, Label::V),
            yu: pair(Label::Y, Label::U),
            yv: pair(Label::Y, Label::V),
            y: single(Label::Y),
            u: single(Label::U),
        }
    }

    /// Born probabilities with the sharp projectors of `settings`.
    pub fn from_sharp(rho: &DensityMatrix, settings: &Settings, xi: Outcome) -> Self {
        let projector = |l: Label| *sharp_povm(settings.get(l)).element(xi.get(l));
        let id = crate::linalg::Matrix2::identity();
        let pair = |a: Label, b: Label| rho.expectation(&kron(&projector(a), &projector(b)));
        ChTerms {
            xu: pair(Label::X, Label::U),
            xv: pair(Label::X, Label::V),
            yu: pair(Label::Y, Label::U),
            yv: pair(Label::Y, Label::V),
            y: rho.expectation(&kron(&projector(Label::Y), &id)),
            u: rho.expectation(&kron(&id, &projector(Label::U))),
        }
    }
}

/// Closed form `−½ − xx′vv′/(4γ_Xγ_V) + yy′vv′/(4γ_Yγ_V) + xx′uu′/(4γ_Xγ_U) + yy′uu′/(4γ_Yγ_U)`.
pub fn single_shot_ch_closed_form(gammas: &GammaSet, xi: Outcome, xi_prime: Outcome) -> f64 {
    let GammaSet { x: gx, y: gy, u: gu, v: gv } = *gammas;
    let a = w(xi.x() * xi_prime.x());
    let b = w(xi.y() * xi_prime.y());
    let c = w(xi.u() * xi_prime.u());
    let d = w(xi.v() * xi_prime.v());
    -0.5 - a * d / (4.0 * gx * gv) + b * d / (4.0 * gy * gv) + a * c / (4.0 * gx * gu) + b * c / (4.0 * gy * gu)
}

/// Single-shot CH value `C(ξ|ξ′)`: the CH combination evaluated on the
/// marginals of the inferred distribution `p(·|ξ′)`, cross-checked against
/// the closed form.
pub fn single_shot_ch(kernel: &InversionKernel, xi: Outcome, xi_prime: Outcome) -> Result<f64> {
    let terms = ChTerms::from_distribution(&kernel.column(xi_prime), xi);
    let closed = single_shot_ch_closed_form(kernel.gammas(), xi, xi_prime);
    agree(
        || format!("C({xi}|{xi_prime}) substituted vs closed form"),
        terms.value(),
        closed,
        terms.magnitude(),
    )?;
    Ok(closed)
}

/// Full `C(ξ|ξ′)` grid, `grid[ξ][ξ′]`.
pub fn single_shot_ch_grid(kernel: &InversionKernel) -> Result<[[f64; 16]; 16]> {
    let mut grid = [[0.0; 16]; 16];
    for xi in Outcome::all() {
        for xp in Outcome::all() {
            grid[xi.index()][xp.index()] = single_shot_ch(kernel, xi, xp)?;
        }
    }
    Ok(grid)
}

/// `C(ξ) = Σ_ξ′ C(ξ|ξ′)·p̃(ξ′|ρ)`, cross-checked against the CH combination
/// of the inverted distribution's marginals.
pub fn ensemble_ch(kernel: &InversionKernel, observed: &[f64; 16], xi: Outcome) -> Result<f64> {
    let mut weighted = 0.0;
    let mut scale = 0.0;
    for xp in Outcome::all() {
        let c = single_shot_ch(kernel, xi, xp)?;
        weighted += c * observed[xp.index()];
        scale += (c * observed[xp.index()]).abs();
    }
    let q = crate::inversion::invert_distribution(kernel, observed)?;
    let from_quasi = ChTerms::from_distribution(q.entries(), xi).value();
    agree(|| format!("C({xi}) from shots vs from p(ξ|ρ)"), weighted, from_quasi, scale)?;
    Ok(weighted)
}

/// CHSH value from sharp-projector Born probabilities, independent of any
/// joint measurement.
pub fn chsh_from_sharp(rho: &DensityMatrix, settings: &Settings) -> f64 {
    let corr = |a: Label, b: Label| -> f64 {
        let op = kron(&settings.get(a).operator(), &settings.get(b).operator());
        rho.expectation(&op)
    };
    corr(Label::X, Label::U) - corr(Label::X, Label::V) + corr(Label::Y, Label::U) + corr(Label::Y, Label::V)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfied,
    /// Sitting on a classical bound within `1e-10`.
    SatisfiedBoundary,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

/// Verdict for one value against its classical bounds. `margin` is the
/// distance past the violated bound, or the distance to the nearest bound
/// when satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub value: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    pub margin: f64,
}

fn check_interval(value: f64, lower: f64, upper: f64) -> BoundCheck {
    let (status, side, margin) = if value > upper + BOUNDARY_TOL {
        (Status::Violated, Some(Side::Upper), value - upper)
    } else if value < lower - BOUNDARY_TOL {
        (Status::Violated, Some(Side::Lower), lower - value)
    } else {
        let to_upper = upper - value;
        let to_lower = value - lower;
        let (side, distance) = if to_upper <= to_lower {
            (Side::Upper, to_upper)
        } else {
            (Side::Lower, to_lower)
        };
        if distance.abs() <= BOUNDARY_TOL {
            (Status::SatisfiedBoundary, Some(side), distance.max(0.0))
        } else {
            (Status::Satisfied, None, distance)
        }
    };
    BoundCheck {
        value,
        status,
        side,
        margin,
    }
}

/// `|S| ≤ 2`.
pub fn check_chsh(value: f64) -> BoundCheck {
    check_interval(value, -CHSH_BOUND, CHSH_BOUND)
}

/// `0 ≥ C ≥ −1`.
pub fn check_ch(value: f64) -> BoundCheck {
    check_interval(value, CH_LOWER, CH_UPPER)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshReport {
    pub s_values: [f64; 16],
    #[serde(rename = "ensemble_S")]
    pub ensemble_s: f64,
    #[serde(rename = "single_shot_S")]
    pub single_shot_s: [f64; 16],
    pub bound: f64,
}

impl ChshReport {
    /// Builds the report and checks `Σ_ξ s(ξ)p(ξ|ρ) = Σ_ξ′ S(ξ′)p̃(ξ′|ρ)`.
    pub fn new(kernel: &InversionKernel, observed: &[f64; 16], q: &QuasiDistribution) -> Result<Self> {
        let s_values = std::array::from_fn(|i| s_of_xi(Outcome::from_index(i)));
        let single_shot_s = single_shot_chsh_table(kernel)?;
        let ensemble_s = ensemble_chsh(q);
        let from_shots: f64 = single_shot_s.iter().zip(observed).map(|(s, p)| s * p).sum();
        let scale: f64 = single_shot_s.iter().zip(observed).map(|(s, p)| (s * p).abs()).sum();
        agree(|| "ensemble S two decompositions".into(), ensemble_s, from_shots, scale)?;
        Ok(ChshReport {
            s_values,
            ensemble_s,
            single_shot_s,
            bound: CHSH_BOUND,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChReport {
    /// `single_shot_C[ξ][ξ′]`.
    #[serde(rename = "single_shot_C")]
    pub single_shot_c: [[f64; 16]; 16],
    #[serde(rename = "ensemble_C")]
    pub ensemble_c: [f64; 16],
    pub bounds: (f64, f64),
}

impl ChReport {
    pub fn new(kernel: &InversionKernel, observed: &[f64; 16]) -> Result<Self> {
        let single_shot_c = single_shot_ch_grid(kernel)?;
        let mut ensemble_c = [0.0; 16];
        for xi in Outcome::all() {
            ensemble_c[xi.index()] = ensemble_ch(kernel, observed, xi)?;
        }
        Ok(ChReport {
            single_shot_c,
            ensemble_c,
            bounds: (CH_UPPER, CH_LOWER),
        })
    }

    /// Checks every ensemble `C(ξ)` against the sharp-projector route.
    pub fn check_against_sharp(&self, rho: &DensityMatrix, settings: &Settings) -> Result<()> {
        for xi in Outcome::all() {
            let terms = ChTerms::from_sharp(rho, settings, xi);
            agree(
                || format!("C({xi}) vs sharp-projector probabilities"),
                self.ensemble_c[xi.index()],
                terms.value(),
                terms.magnitude(),
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    #[serde(rename = "ensemble_S")]
    pub ensemble_s: BoundCheck,
    #[serde(rename = "single_shot_S")]
    pub single_shot_s: Vec<BoundCheck>,
    #[serde(rename = "ensemble_C")]
    pub ensemble_c: Vec<BoundCheck>,
    /// `single_shot_C[ξ][ξ′]`.
    #[serde(rename = "single_shot_C")]
    pub single_shot_c: Vec<Vec<BoundCheck>>,
}

impl Verdicts {
    /// Number of single-shot values (S and C) that violate a classical bound.
    pub fn single_shot_violations(&self) -> usize {
        self.single_shot_s
            .iter()
            .chain(self.single_shot_c.iter().flatten())
            .filter(|c| c.status == Status::Violated)
            .count()
    }
}

pub fn classical_bounds_check(chsh: &ChshReport, ch: &ChReport) -> Verdicts {
    Verdicts {
        ensemble_s: check_chsh(chsh.ensemble_s),
        single_shot_s: chsh.single_shot_s.iter().map(|&s| check_chsh(s)).collect(),
        ensemble_c: ch.ensemble_c.iter().map(|&c| check_ch(c)).collect(),
        single_shot_c: ch
            .single_shot_c
            .iter()
            .map(|row| row.iter().map(|&c| check_ch(c)).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::{build_kernel, invert_distribution};
    use crate::measurement::{observed_statistics, JointPovm};
    use crate::observables::chsh_optimal_angles;
    use crate::states::{bell_state, maximally_mixed, werner_state, BellState};
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn o(x: i64, y: i64, u: i64, v: i64) -> Outcome {
        Outcome::new(x, y, u, v).unwrap()
    }

    #[test]
    fn s_values() {
        assert_eq!(s_of_xi(o(1, 1, 1, 1)), 2.0);
        assert_eq!(s_of_xi(o(1, 1, 1, -1)), 2.0);
        for xi in Outcome::all() {
            // brute force over the definition with integers
            let [x, y, u, v] = xi.components().map(i32::from);
            let s = x * u - x * v + y * u + y * v;
            assert_eq!(s.abs(), 2);
            assert_eq!(s_of_xi(xi), f64::from(s));
        }
    }

    #[test]
    fn uniform_and_mixed_give_zero() {
        assert_eq!(ensemble_chsh(&QuasiDistribution([1.0 / 16.0; 16])), 0.0);
        let gammas = GammaSet::equal(0.5).unwrap();
        let povm = JointPovm::new(&chsh_optimal_angles(), gammas).unwrap();
        let p = observed_statistics(&maximally_mixed(), &povm).unwrap();
        let q = invert_distribution(&build_kernel(&gammas), &p).unwrap();
        assert!(ensemble_chsh(&q).abs() < 1e-14);
    }

    #[test]
    fn singlet_reaches_tsirelson() {
        let settings = chsh_optimal_angles();
        let rho = bell_state(BellState::PsiMinus);
        for g in [FRAC_1_SQRT_2, 0.5, 0.1] {
            let gammas = GammaSet::equal(g).unwrap();
            let povm = JointPovm::new(&settings, gammas).unwrap();
            let p = observed_statistics(&rho, &povm).unwrap();
            let q = invert_distribution(&build_kernel(&gammas), &p).unwrap();
            assert!((ensemble_chsh(&q) + 2.0 * SQRT_2).abs() < 1e-10);
        }
        assert!((chsh_from_sharp(&rho, &settings) + 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn single_shot_chsh_examples() {
        let sharp = build_kernel(&GammaSet::equal(1.0).unwrap());
        assert_eq!(single_shot_chsh(&sharp, o(1, 1, 1, 1)).unwrap(), 2.0);

        let k = build_kernel(&GammaSet::equal(FRAC_1_SQRT_2).unwrap());
        for xp in Outcome::all() {
            assert!((single_shot_chsh(&k, xp).unwrap().abs() - 4.0).abs() < 1e-12);
        }

        let k = build_kernel(&GammaSet::new(0.6, 0.6, 0.7, 0.5).unwrap());
        let want = (0.6 * 0.5 - 0.6 * 0.7 + 0.6 * 0.5 + 0.6 * 0.7) / (0.6 * 0.6 * 0.7 * 0.5);
        let summed = single_shot_chsh_sum(&k, o(1, 1, 1, 1));
        assert!((summed - want).abs() < 1e-12);
        assert!((single_shot_chsh(&k, o(1, 1, 1, 1)).unwrap() - 4.761904761904762).abs() < 1e-12);
    }

    #[test]
    fn ensemble_from_shots_examples() {
        let gammas = GammaSet::equal(FRAC_1_SQRT_2).unwrap();
        let k = build_kernel(&gammas);
        let one = o(1, -1, 1, 1);
        assert_eq!(
            ensemble_from_shots(&k, &[one]).unwrap(),
            single_shot_chsh(&k, one).unwrap()
        );
        let all: Vec<Outcome> = Outcome::all().collect();
        let povm = JointPovm::new(&chsh_optimal_angles(), gammas).unwrap();
        let q = invert_distribution(&k, &observed_statistics(&maximally_mixed(), &povm).unwrap()).unwrap();
        assert!((ensemble_from_shots(&k, &all).unwrap() - ensemble_chsh(&q)).abs() < 1e-12);
        assert!(matches!(ensemble_from_shots(&k, &[]), Err(Error::EmptyShotList)));
    }

    #[test]
    fn single_shot_ch_values() {
        let sharp = build_kernel(&GammaSet::equal(1.0).unwrap());
        assert_eq!(single_shot_ch(&sharp, o(1, 1, 1, 1), o(1, 1, 1, 1)).unwrap(), 0.0);
        for xi in Outcome::all() {
            for xp in Outcome::all() {
                let c = single_shot_ch(&sharp, xi, xp).unwrap();
                assert!(c == 0.0 || c == -1.0, "{c}");
            }
        }
        let k = build_kernel(&GammaSet::equal(FRAC_1_SQRT_2).unwrap());
        for xi in Outcome::all() {
            for xp in Outcome::all() {
                let c = single_shot_ch(&k, xi, xp).unwrap();
                assert!((c - 0.5).abs() < 1e-12 || (c + 1.5).abs() < 1e-12, "{c}");
                assert_eq!(check_ch(c).status, Status::Violated);
            }
        }
    }

    #[test]
    fn ensemble_ch_examples() {
        let settings = chsh_optimal_angles();
        let gammas = GammaSet::equal(FRAC_1_SQRT_2).unwrap();
        let k = build_kernel(&gammas);
        let povm = JointPovm::new(&settings, gammas).unwrap();

        let mixed = observed_statistics(&maximally_mixed(), &povm).unwrap();
        for xi in Outcome::all() {
            assert!((ensemble_ch(&k, &mixed, xi).unwrap() + 0.5).abs() < 1e-12);
        }

        let rho = bell_state(BellState::PsiMinus);
        let p = observed_statistics(&rho, &povm).unwrap();
        let report = ChReport::new(&k, &p).unwrap();
        report.check_against_sharp(&rho, &settings).unwrap();
        assert!(report.ensemble_c.iter().any(|&c| c > 0.0));
        assert!((report.ensemble_c.iter().copied().fold(f64::MIN, f64::max) - (SQRT_2 / 2.0 - 0.5)).abs() < 1e-12);

        // separable state measured sharply: product of σz eigenstates
        let sep = werner_state(0.0).unwrap();
        for xi in Outcome::all() {
            let c = ChTerms::from_sharp(&sep, &settings, xi).value();
            assert!((-1.0 - 1e-12..=1e-12).contains(&c));
        }
    }

    #[test]
    fn bound_checks() {
        let v = check_chsh(2.8284);
        assert_eq!(v.status, Status::Violated);
        assert!((v.margin - 0.8284).abs() < 1e-12);
        assert_eq!(check_chsh(1.0).status, Status::Satisfied);
        assert_eq!(check_chsh(-2.0).status, Status::SatisfiedBoundary);
        let c = check_ch(0.5);
        assert_eq!((c.status, c.side, c.margin), (Status::Violated, Some(Side::Upper), 0.5));
        let c = check_ch(-1.5);
        assert_eq!((c.status, c.side, c.margin), (Status::Violated, Some(Side::Lower), 0.5));
        assert_eq!(check_ch(0.0).status, Status::SatisfiedBoundary);
        assert_eq!(check_ch(-1.0).status, Status::SatisfiedBoundary);
        assert_eq!(check_ch(-0.5).status, Status::Satisfied);
    }

    #[test]
    fn corrupted_kernel_is_caught() {
        let mut k = build_kernel(&GammaSet::equal(0.6).unwrap());
        k.corrupt(o(1, -1, -1, 1), o(1, 1, 1, 1), 1e-3);
        assert!(matches!(single_shot_chsh(&k, o(1, 1, 1, 1)), Err(Error::Inconsistent { .. })));
        assert!(matches!(single_shot_ch(&k, o(1, 1, 1, 1), o(1, 1, 1, 1)), Err(Error::Inconsistent { .. })));
    }
}

//! Self-check harness: random admissible setups pushed through every
//! module, with each invariant recomputed by a second route.

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::belltests::{ensemble_from_shots, single_shot_chsh_table};
use crate::error::Result;
use crate::experiment::{exact, Experiment, Setup};
use crate::inversion::{reconstructed_sharp_povm, target_sharp_povm};
use crate::linalg::{qubit_operator, Matrix4};
use crate::measurement::{observed_statistics, GammaSet, Outcome};
use crate::observables::{Label, Settings};
use crate::sampler::{sample_shots, RngConfig};
use crate::states::{random_pure_state, random_state};

const TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Perturb one entry of the inversion kernel by `1e-3`.
    CorruptKernel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub trials: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (0.1..=1.0).contains(&n) {
            return v.map(|c| c / n);
        }
    }
}

/// Two orthogonal unit vectors.
pub fn random_orthonormal_pair<R: Rng + ?Sized>(rng: &mut R) -> ([f64; 3], [f64; 3]) {
    let a = random_unit_vector(rng);
    loop {
        let b = random_unit_vector(rng);
        let d: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
        let c: [f64; 3] = std::array::from_fn(|i| b[i] - d * a[i]);
        let n = c.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 0.1 {
            return (a, c.map(|x| x / n));
        }
    }
}

pub fn random_settings<R: Rng + ?Sized>(rng: &mut R) -> Settings {
    let (x, y) = random_orthonormal_pair(rng);
    let (u, v) = random_orthonormal_pair(rng);
    Settings::from_bloch([x, y, u, v]).expect("normalized vectors")
}

/// Accuracies with `γ₁² + γ₂² ≤ 1` per subsystem, magnitudes at least 0.05,
/// random signs.
pub fn random_gammas<R: Rng + ?Sized>(rng: &mut R) -> GammaSet {
    let pair = |rng: &mut R| {
        let r = rng.gen_range(0.1..=1.0f64);
        let t = rng.gen_range(0.15..std::f64::consts::FRAC_PI_2 - 0.15);
        let sign = |rng: &mut R| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        (sign(rng) * (r * t.cos()).max(0.05), sign(rng) * (r * t.sin()).max(0.05))
    };
    let (x, y) = pair(rng);
    let (u, v) = pair(rng);
    GammaSet::new(x, y, u, v).expect("magnitudes within range")
}

pub fn random_setup<R: Rng + ?Sized>(rng: &mut R) -> Setup {
    let state = if rng.gen_bool(0.5) {
        random_state(rng)
    } else {
        random_pure_state(rng)
    };
    Setup {
        state,
        settings: random_settings(rng),
        gammas: random_gammas(rng),
    }
}

struct Checker {
    checks: usize,
    failures: Vec<String>,
}

impl Checker {
    fn check(&mut self, trial: usize, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(format!("trial {trial}: {name}: {}", detail()));
        }
    }

    fn result<T>(&mut self, trial: usize, name: &str, r: Result<T>) -> Option<T> {
        self.checks += 1;
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.push(format!("trial {trial}: {name}: {e}"));
                None
            }
        }
    }
}

fn trial(c: &mut Checker, t: usize, rng: &mut Xoshiro256PlusPlus, fault: Option<Fault>) {
    let setup = random_setup(rng);
    let Some(mut exp) = c.result(t, "build experiment", Experiment::new(setup)) else {
        return;
    };
    if fault == Some(Fault::CorruptKernel) {
        let xi = Outcome::from_index(rng.gen_range(0..16));
        let xp = Outcome::from_index(rng.gen_range(0..16));
        exp.kernel.corrupt(xi, xp, 1e-3);
    }
    let Setup { state, settings, gammas } = exp.setup.clone();

    // POVM: completeness, positivity, unsharp marginals.
    let total: Matrix4 = Outcome::all().map(|o| *exp.povm.element(o)).sum();
    let defect = total.max_abs_diff(&Matrix4::identity());
    c.check(t, "POVM completeness", defect < TOL, || format!("defect {defect:e}"));
    let min_eig = Outcome::all()
        .map(|o| exp.povm.element(o).min_eigenvalue_hermitian().unwrap_or(f64::NEG_INFINITY))
        .fold(f64::INFINITY, f64::min);
    c.check(t, "POVM positivity", min_eig >= -TOL, || format!("min eigenvalue {min_eig:e}"));
    for l in Label::ALL {
        let n = settings.get(l).bloch();
        for w in [1i8, -1] {
            let want = qubit_operator(0.5, n.map(|c| c * gammas.get(l) * f64::from(w)));
            let diff = exp.povm.marginal(l, w).max_abs_diff(&want);
            c.check(t, "unsharp marginal", diff < TOL, || format!("{l}({w:+}) off by {diff:e}"));
        }
    }

    // Kernel: column normalization, sharp reconstruction.
    for xp in Outcome::all() {
        let sum: f64 = exp.kernel.column(xp).iter().sum();
        c.check(t, "kernel column sum", (sum - 1.0).abs() < TOL, || format!("column {xp}: {sum}"));
    }
    for l in Label::ALL {
        if let Some(rec) = c.result(t, "sharp reconstruction", reconstructed_sharp_povm(&exp.kernel, &exp.povm, l)) {
            let want = target_sharp_povm(&exp.povm, l);
            let diff = [1i8, -1]
                .iter()
                .map(|&w| rec.element(w).max_abs_diff(want.element(w)))
                .fold(0.0, f64::max);
            c.check(t, "sharp reconstruction", diff < TOL, || format!("{l} off by {diff:e}"));
        }
    }

    // Statistics and every dual-path check in the exact pipeline.
    let Some(observed) = c.result(t, "observed statistics", observed_statistics(&state, &exp.povm)) else {
        return;
    };
    let sum: f64 = observed.iter().sum();
    c.check(t, "observed normalization", (sum - 1.0).abs() < TOL, || format!("sum {sum}"));
    c.result(t, "single-shot S dual path", single_shot_chsh_table(&exp.kernel));
    let Some(result) = c.result(t, "exact pipeline", exact(&exp)) else {
        return;
    };
    let total = result.quasi.total();
    c.check(t, "quasi normalization", (total - 1.0).abs() < TOL, || format!("sum {total}"));
    let s_max = 2.0 * std::f64::consts::SQRT_2 + 1e-9;
    c.check(t, "Tsirelson", result.chsh.ensemble_s.abs() <= s_max, || {
        format!("S = {}", result.chsh.ensemble_s)
    });

    // Sampling: determinism and the shot-average identity.
    let cfg = RngConfig::new(rng.gen(), 3).expect("nonzero streams");
    if let (Some(a), Some(b)) = (
        c.result(t, "sampling", sample_shots(&observed, 500, &cfg)),
        c.result(t, "sampling", sample_shots(&observed, 500, &cfg)),
    ) {
        c.check(t, "sampling determinism", a == b, || "repeat differs".into());
        if let Some(mean) = c.result(t, "shot average", ensemble_from_shots(&exp.kernel, &a)) {
            let s_table = result.chsh.single_shot_s;
            let direct = a.iter().map(|o| s_table[o.index()]).sum::<f64>() / a.len() as f64;
            c.check(t, "shot average", (mean - direct).abs() < 1e-9, || format!("{mean} vs {direct}"));
        }
    }
}

pub fn run_validation(seed: u64, trials: usize, fault: Option<Fault>) -> ValidationReport {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut c = Checker {
        checks: 0,
        failures: Vec::new(),
    };
    for t in 0..trials {
        trial(&mut c, t, &mut rng, fault);
    }
    ValidationReport {
        seed,
        trials,
        checks: c.checks,
        failures: c.failures,
    }
}

//! Experiment configuration and the three computations behind the CLI:
//! exact evaluation, sampled runs, and parameter sweeps.
//!
//! # Config schema
//!
//! A single JSON document:
//!
//! ```json
//! {
//!   "state": { "bell": "psi_minus" },
//!   "observables": { "x": [0, 0, 1], "y": [1, 0, 0],
//!                    "u": [0.7071067811865476, 0, 0.7071067811865476],
//!                    "v": [0.7071067811865476, 0, -0.7071067811865476] },
//!   "gammas": 0.7071067811865476,
//!   "shots": 100000,
//!   "seed": 42,
//!   "streams": 1,
//!   "outputs": { "dir": "out" }
//! }
//! ```
//!
//! * `state`: `{"bell": "phi_plus" | "phi_minus" | "psi_plus" | "psi_minus"}`,
//!   `{"werner": {"eta": η}}`, or
//!   `{"custom": {"real": 4×4, "imag": 4×4}}` in the `|00⟩,|01⟩,|10⟩,|11⟩` basis.
//! * `observables`: Bloch vectors; omitted means the CHSH-optimal default.
//! * `gammas`: one number for all four, or `{"x": .., "y": .., "u": .., "v": ..}`.
//! * `shots` (default 0), `seed` (default 0), `streams` (default 1).
//! * `outputs`: `dir` plus optional file names `exact`, `shots`, `summary`, `sweep`.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belltests::{
    check_chsh, chsh_from_sharp, classical_bounds_check, ensemble_chsh, single_shot_ch_grid,
    single_shot_chsh_table, BoundCheck, ChReport, ChshReport, ChTerms, Verdicts,
};
use crate::error::{Error, Result};
use crate::inversion::{build_kernel, cross_marginal, invert_distribution, InversionKernel, QuasiDistribution};
use crate::linalg::kron;
use crate::measurement::{observed_statistics, GammaSet, JointPovm, Outcome, GAMMA_MIN};
use crate::observables::{chsh_optimal_angles, sharp_povm, Label, Settings};
use crate::output::format_real;
use crate::sampler::{convergence_report, empirical_frequencies, sample_shots, shot_records, RngConfig, ShotRecord};
use crate::states::{bell_state, custom_state, werner_state, BellState, DensityMatrix};

/// Below this `|γ|`, single-shot values grow as `1/γ²` and sampling variance as `1/γ⁴`.
pub const SMALL_GAMMA_WARNING: f64 = 0.1;
const EXACTNESS_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateConfig {
    Bell(BellState),
    Werner { eta: f64 },
    Custom { real: Box<[[f64; 4]; 4]>, imag: Box<[[f64; 4]; 4]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammasConfig {
    Equal(f64),
    Each { x: f64, y: f64, u: f64, v: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_exact")]
    pub exact: String,
    #[serde(default = "default_shots")]
    pub shots: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_sweep")]
    pub sweep: String,
}

fn default_exact() -> String {
    "exact.json".into()
}
fn default_shots() -> String {
    "shots.csv".into()
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_sweep() -> String {
    "sweep.csv".into()
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            dir: None,
            exact: default_exact(),
            shots: default_shots(),
            summary: default_summary(),
            sweep: default_sweep(),
        }
    }
}

fn default_streams() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateConfig,
    #[serde(default)]
    pub observables: Option<ObservablesConfig>,
    pub gammas: GammasConfig,
    #[serde(default)]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_streams")]
    pub streams: usize,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }
}

fn field<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(msg) => Error::Config(msg),
        other => Error::Config(format!("{name}: {other}")),
    })
}

/// State, settings and accuracies, each validated on its own.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub state: DensityMatrix,
    pub settings: Settings,
    pub gammas: GammaSet,
}

impl Setup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let state = field(
            "state",
            match &cfg.state {
                StateConfig::Bell(which) => Ok(bell_state(*which)),
                StateConfig::Werner { eta } => werner_state(*eta),
                StateConfig::Custom { real, imag } => custom_state(real, imag),
            },
        )?;
        let settings = match &cfg.observables {
            None => chsh_optimal_angles(),
            Some(o) => field("observables", Settings::from_bloch([o.x, o.y, o.u, o.v]))?,
        };
        let gammas = field(
            "gammas",
            match cfg.gammas {
                GammasConfig::Equal(g) => GammaSet::equal(g),
                GammasConfig::Each { x, y, u, v } => GammaSet::new(x, y, u, v),
            },
        )?;
        Ok(Setup {
            state,
            settings,
            gammas,
        })
    }
}

/// A physically realizable joint measurement together with its inversion.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub setup: Setup,
    pub povm: JointPovm,
    pub kernel: InversionKernel,
}

impl Experiment {
    pub fn new(setup: Setup) -> Result<Self> {
        field("gammas", setup.gammas.check_pairs(&setup.settings))?;
        let povm = field("gammas", JointPovm::new(&setup.settings, setup.gammas))?;
        let kernel = build_kernel(&setup.gammas);
        Ok(Experiment { setup, povm, kernel })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(Setup::from_config(cfg)?)
    }

    pub fn warnings(&self) -> Vec<String> {
        Label::ALL
            .iter()
            .filter(|&&l| self.setup.gammas.get(l).abs() < SMALL_GAMMA_WARNING)
            .map(|l| {
                format!(
                    "|gamma_{l}| = {} < {SMALL_GAMMA_WARNING}: single-shot values scale as 1/gamma^2 and sampling variance as 1/gamma^4",
                    self.setup.gammas.get(*l).abs()
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingsRecord {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub u: [f64; 3],
    pub v: [f64; 3],
}

impl From<&Settings> for SettingsRecord {
    fn from(s: &Settings) -> Self {
        SettingsRecord {
            x: s.x.bloch(),
            y: s.y.bloch(),
            u: s.u.bloch(),
            v: s.v.bloch(),
        }
    }
}

/// Output of the exact evaluation. Arrays over outcomes follow `outcome_order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub outcome_order: Vec<Outcome>,
    pub observables: SettingsRecord,
    pub gammas: GammaSet,
    /// `p̃(ξ′|ρ)`.
    pub observed: [f64; 16],
    /// `p(ξ|ρ)`.
    pub quasi: QuasiDistribution,
    pub quasi_min_entry: f64,
    pub negativity: f64,
    #[serde(flatten)]
    pub chsh: ChshReport,
    #[serde(flatten)]
    pub ch: ChReport,
    /// CHSH value from sharp-projector traces, no joint measurement involved.
    #[serde(rename = "sharp_S")]
    pub sharp_s: f64,
    pub verdicts: Verdicts,
}

pub fn exact(exp: &Experiment) -> Result<ExactResult> {
    let Setup { state, settings, gammas } = &exp.setup;
    let observed = observed_statistics(state, &exp.povm)?;
    let quasi = invert_distribution(&exp.kernel, &observed)?;
    check_cross_marginals(state, settings, &quasi)?;
    let chsh = ChshReport::new(&exp.kernel, &observed, &quasi)?;
    let ch = ChReport::new(&exp.kernel, &observed)?;
    ch.check_against_sharp(state, settings)?;
    let sharp_s = chsh_from_sharp(state, settings);
    if (sharp_s - chsh.ensemble_s).abs() > EXACTNESS_TOL {
        return Err(Error::Inconsistent {
            what: "ensemble S vs sharp-projector S".into(),
            deviation: sharp_s - chsh.ensemble_s,
        });
    }
    let verdicts = classical_bounds_check(&chsh, &ch);
    Ok(ExactResult {
        outcome_order: Outcome::all().collect(),
        observables: settings.into(),
        gammas: *gammas,
        observed,
        quasi_min_entry: quasi.min_entry(),
        negativity: quasi.negativity(),
        quasi,
        chsh,
        ch,
        sharp_s,
        verdicts,
    })
}

/// Cross-pair marginals of `p(ξ|ρ)` against sharp Born probabilities.
pub fn check_cross_marginals(rho: &DensityMatrix, settings: &Settings, q: &QuasiDistribution) -> Result<()> {
    for a in [Label::X, Label::Y] {
        for b in [Label::U, Label::V] {
            let got = cross_marginal(q, a, b)?;
            let (pa, pb) = (sharp_povm(settings.get(a)), sharp_povm(settings.get(b)));
            for (i, (wa, wb)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                let want = rho.expectation(&kron(pa.element(wa), pb.element(wb)));
                if (got[i] - want).abs() > EXACTNESS_TOL {
                    return Err(Error::Inconsistent {
                        what: format!("cross marginal p_{a}{b}({wa:+}, {wb:+})"),
                        deviation: got[i] - want,
                    });
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub shots: usize,
    pub seed: u64,
    pub streams: usize,
    /// Mean of `S(ξ′)` over the recorded shots.
    #[serde(rename = "empirical_S")]
    pub empirical_s: f64,
    pub std_dev: Option<f64>,
    pub std_error: Option<f64>,
    #[serde(rename = "exact_S")]
    pub exact_s: f64,
    /// `(empirical − exact) / std_error`.
    pub deviation_in_std_errors: Option<f64>,
    pub verdict: BoundCheck,
    pub distinct_abs_single_shot_s: Vec<f64>,
    pub empirical_frequencies: [f64; 16],
    /// Kernel applied to the empirical frequencies, without bias correction.
    pub empirical_quasi: QuasiDistribution,
    pub empirical_quasi_min_entry: f64,
    pub empirical_negativity: f64,
    /// `Σ_ξ s(ξ)·p_emp(ξ)`; equals `empirical_S` up to rounding.
    #[serde(rename = "empirical_S_via_inversion")]
    pub empirical_s_via_inversion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ShotRecord>,
    pub summary: RunSummary,
}

pub fn run(exp: &Experiment, shots: usize, rng: &RngConfig) -> Result<RunOutput> {
    if shots == 0 {
        return Err(Error::Config("shots: must be at least 1 for a sampled run".into()));
    }
    let Setup { state, settings, .. } = &exp.setup;
    let observed = observed_statistics(state, &exp.povm)?;
    let outcomes = sample_shots(&observed, shots, rng)?;
    let records = shot_records(&exp.kernel, &outcomes)?;
    let conv = convergence_report(&exp.kernel, &outcomes)?;
    let freqs = empirical_frequencies(&outcomes)?;
    let empirical_quasi = invert_distribution(&exp.kernel, &freqs)?;
    let via_inversion = ensemble_chsh(&empirical_quasi);
    let exact_s = ensemble_chsh(&invert_distribution(&exp.kernel, &observed)?);
    debug_assert!((exact_s - chsh_from_sharp(state, settings)).abs() < 1e-9);
    let summary = RunSummary {
        shots,
        seed: rng.seed,
        streams: rng.stream_count,
        empirical_s: conv.mean,
        std_dev: conv.std_dev,
        std_error: conv.std_error,
        exact_s,
        deviation_in_std_errors: conv
            .std_error
            .filter(|se| *se > 0.0)
            .map(|se| (conv.mean - exact_s) / se),
        verdict: check_chsh(conv.mean),
        distinct_abs_single_shot_s: conv.distinct_abs_values,
        empirical_frequencies: freqs,
        empirical_quasi_min_entry: empirical_quasi.min_entry(),
        empirical_negativity: empirical_quasi.negativity(),
        empirical_quasi,
        empirical_s_via_inversion: via_inversion,
    };
    Ok(RunOutput { records, summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Equal `γ` on all four observables.
    Gamma,
    /// Werner state `η`, with the configured `γ`.
    WernerEta,
}

/// One sweep grid point. State-dependent columns are absent when the
/// measurement is not realizable at that point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub physical: bool,
    #[serde(rename = "exact_S")]
    pub exact_s: Option<f64>,
    pub single_shot_abs_s_min: f64,
    pub single_shot_abs_s_max: f64,
    pub single_shot_c_min: f64,
    pub single_shot_c_max: f64,
    pub ensemble_c_min: Option<f64>,
    pub ensemble_c_max: Option<f64>,
    pub min_quasi_entry: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str = "value,physical,exact_S,single_shot_abs_S_min,single_shot_abs_S_max,single_shot_C_min,single_shot_C_max,ensemble_C_min,ensemble_C_max,min_quasi_entry";

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn sweep_point(setup: &Setup) -> Result<SweepRow> {
    let kernel = build_kernel(&setup.gammas);
    let s_table = single_shot_chsh_table(&kernel)?;
    let (s_lo, s_hi) = min_max(s_table.iter().map(|s| s.abs()));
    let grid = single_shot_ch_grid(&kernel)?;
    let (c_lo, c_hi) = min_max(grid.iter().flatten().copied());
    let physical = setup.gammas.check_pairs(&setup.settings).is_ok()
        && JointPovm::new(&setup.settings, setup.gammas).is_ok();
    let mut row = SweepRow {
        value: f64::NAN,
        physical,
        exact_s: None,
        single_shot_abs_s_min: s_lo,
        single_shot_abs_s_max: s_hi,
        single_shot_c_min: c_lo,
        single_shot_c_max: c_hi,
        ensemble_c_min: None,
        ensemble_c_max: None,
        min_quasi_entry: None,
    };
    if physical {
        let povm = JointPovm::new(&setup.settings, setup.gammas)?;
        let observed = observed_statistics(&setup.state, &povm)?;
        let q = invert_distribution(&kernel, &observed)?;
        let ch = ChReport::new(&kernel, &observed)?;
        let (e_lo, e_hi) = min_max(ch.ensemble_c.iter().copied());
        row.exact_s = Some(ensemble_chsh(&q));
        row.ensemble_c_min = Some(e_lo);
        row.ensemble_c_max = Some(e_hi);
        row.min_quasi_entry = Some(q.min_entry());
    }
    Ok(row)
}

pub fn sweep(base: &Setup, axis: SweepAxis, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    for &value in grid {
        let ok = match axis {
            SweepAxis::Gamma => (GAMMA_MIN..=1.0).contains(&value.abs()),
            SweepAxis::WernerEta => (0.0..=1.0).contains(&value),
        };
        if !ok {
            return Err(Error::Config(format!(
                "grid value {value} outside the admissible range for {axis:?} ({})",
                match axis {
                    SweepAxis::Gamma => "1e-6 <= |gamma| <= 1",
                    SweepAxis::WernerEta => "0 <= eta <= 1",
                }
            )));
        }
    }
    grid.par_iter()
        .map(|&value| {
            let mut setup = base.clone();
            match axis {
                SweepAxis::Gamma => setup.gammas = GammaSet::equal(value)?,
                SweepAxis::WernerEta => setup.state = werner_state(value)?,
            }
            let mut row = sweep_point(&setup)?;
            row.value = value;
            Ok(row)
        })
        .collect()
}

fn optional(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut out = String::with_capacity(200 * (rows.len() + 1));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let fields = [
            format_real(r.value),
            r.physical.to_string(),
            optional(r.exact_s),
            format_real(r.single_shot_abs_s_min),
            format_real(r.single_shot_abs_s_max),
            format_real(r.single_shot_c_min),
            format_real(r.single_shot_c_max),
            optional(r.ensemble_c_min),
            optional(r.ensemble_c_max),
            optional(r.min_quasi_entry),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// Evenly spaced grid of `count` points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Recomputes the CH combination for `xi` from sharp-projector probabilities.
pub fn sharp_ch(rho: &DensityMatrix, settings: &Settings, xi: Outcome) -> f64 {
    ChTerms::from_sharp(rho, settings, xi).value()
}

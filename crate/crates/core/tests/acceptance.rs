//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::time::{Duration, Instant};

use bellshot::belltests::{
    check_ch, chsh_from_sharp, ensemble_ch, ensemble_chsh, ensemble_from_shots, single_shot_ch_closed_form,
    single_shot_ch_grid, single_shot_chsh_closed_form, single_shot_chsh_sum, single_shot_chsh_table, ChTerms,
    Status,
};
use bellshot::experiment::{exact, linspace, run, sweep, Experiment, Setup, SweepAxis};
use bellshot::inversion::{build_kernel, cross_marginal, invert_distribution, reconstructed_sharp_povm};
use bellshot::linalg::{kron, Matrix2, Matrix4};
use bellshot::measurement::{observed_statistics, GammaSet, JointPovm, Outcome};
use bellshot::observables::{chsh_optimal_angles, Label};
use bellshot::output::shot_csv_bytes;
use bellshot::sampler::{sample_shots, RngConfig};
use bellshot::states::{bell_state, random_pure_state, random_state, BellState, DensityMatrix};
use bellshot::validation::random_setup;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

type Verdict = std::result::Result<String, String>;
type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

fn any_state(r: &mut Xoshiro256PlusPlus) -> DensityMatrix {
    if r.gen_bool(0.5) {
        random_state(r)
    } else {
        random_pure_state(r)
    }
}

// Oracles: straight from the one-dimensional kernel ½(1 + ww′/γ), no shared code.

fn oracle_conditional(g: [f64; 4], xi: [i8; 4], xp: [i8; 4]) -> f64 {
    (0..4)
        .map(|k| 0.5 * (1.0 + f64::from(xi[k] * xp[k]) / g[k]))
        .product()
}

fn all_outcomes() -> Vec<[i8; 4]> {
    let pm = [1i8, -1];
    let mut out = Vec::with_capacity(16);
    for x in pm {
        for y in pm {
            for u in pm {
                for v in pm {
                    out.push([x, y, u, v]);
                }
            }
        }
    }
    out
}

fn oracle_s(g: [f64; 4], xp: [i8; 4]) -> f64 {
    all_outcomes()
        .into_iter()
        .map(|[x, y, u, v]| {
            let s = f64::from(x * u - x * v + y * u + y * v);
            s * oracle_conditional(g, [x, y, u, v], xp)
        })
        .sum()
}

fn oracle_ch(g: [f64; 4], xi: [i8; 4], xp: [i8; 4]) -> f64 {
    let column: Vec<([i8; 4], f64)> = all_outcomes()
        .into_iter()
        .map(|o| (o, oracle_conditional(g, o, xp)))
        .collect();
    oracle_ch_from(&column, xi)
}

fn oracle_ch_from(column: &[([i8; 4], f64)], xi: [i8; 4]) -> f64 {
    let marginal = |keep: &[usize]| -> f64 {
        column
            .iter()
            .filter(|(o, _)| keep.iter().all(|&k| o[k] == xi[k]))
            .map(|(_, p)| p)
            .sum()
    };
    marginal(&[0, 2]) - marginal(&[0, 3]) + marginal(&[1, 2]) + marginal(&[1, 3]) - marginal(&[1]) - marginal(&[2])
}

fn random_gammas(r: &mut Xoshiro256PlusPlus) -> GammaSet {
    let mut g = || {
        let m = r.gen_range(0.1..=1.0f64);
        if r.gen_bool(0.5) {
            m
        } else {
            -m
        }
    };
    GammaSet::new(g(), g(), g(), g()).unwrap()
}

fn criterion_1() -> Verdict {
    let mut r = rng(1);
    let states: Vec<DensityMatrix> = (0..20).map(|_| any_state(&mut r)).collect();
    let mut checked = 0;
    for gamma in [0.99, 0.9, 0.8, FRAC_1_SQRT_2] {
        let gammas = GammaSet::equal(gamma).map_err(|e| e.to_string())?;
        let kernel = build_kernel(&gammas);
        let want = 2.0 / (gamma * gamma);
        let table = single_shot_chsh_table(&kernel).map_err(|e| e.to_string())?;
        for xp in Outcome::all() {
            let got = table[xp.index()].abs();
            ensure((got - want).abs() <= 1e-12, || format!("gamma {gamma}, {xp}: |S| = {got}, want {want}"))?;
            let oracle = oracle_s([gamma; 4], xp.components()).abs();
            ensure((oracle - want).abs() <= 1e-12, || format!("oracle disagrees at {xp}"))?;
        }
        ensure(want > 2.0, || "no violation".into())?;
        // State independence: every outcome a state can produce carries the same |S|.
        if let Ok(povm) = JointPovm::new(&chsh_optimal_angles(), gammas) {
            for rho in &states {
                let p = observed_statistics(rho, &povm).map_err(|e| e.to_string())?;
                for xp in Outcome::all().filter(|o| p[o.index()] > 0.0) {
                    let got = table[xp.index()].abs();
                    ensure((got - want).abs() <= 1e-12, || format!("state-dependent |S| at {xp}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("|S| = 2/gamma^2 for all 16 outcomes at 4 gammas; {checked} state/outcome pairs at gamma = 1/sqrt2"))
}

fn criterion_2() -> Verdict {
    let mut r = rng(2);
    let mut worst_s: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for _ in 0..1000 {
        let gammas = random_gammas(&mut r);
        let g = gammas.as_array();
        let kernel = build_kernel(&gammas);
        for xp in Outcome::all() {
            let brute = single_shot_chsh_sum(&kernel, xp);
            let closed = single_shot_chsh_closed_form(&gammas, xp);
            let oracle = oracle_s(g, xp.components());
            worst_s = worst_s.max((brute - closed).abs()).max((oracle - closed).abs());
            let column = kernel.column(xp);
            let oracle_column: Vec<([i8; 4], f64)> = all_outcomes()
                .into_iter()
                .map(|o| (o, oracle_conditional(g, o, xp.components())))
                .collect();
            for xi in Outcome::all() {
                let substituted = ChTerms::from_distribution(&column, xi).value();
                let closed = single_shot_ch_closed_form(&gammas, xi, xp);
                let oracle = oracle_ch_from(&oracle_column, xi.components());
                worst_c = worst_c.max((substituted - closed).abs()).max((oracle - closed).abs());
            }
        }
    }
    ensure(worst_s <= 1e-10 && worst_c <= 1e-10, || {
        format!("max deviation S {worst_s:e}, C {worst_c:e}")
    })?;
    Ok(format!("1000 draws, max deviation S {worst_s:.1e}, C {worst_c:.1e}"))
}

fn criterion_3() -> Verdict {
    let kernel = build_kernel(&GammaSet::equal(FRAC_1_SQRT_2).map_err(|e| e.to_string())?);
    let grid = single_shot_ch_grid(&kernel).map_err(|e| e.to_string())?;
    let (mut high, mut low) = (0, 0);
    for (i, row) in grid.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if (c - 0.5).abs() <= 1e-12 {
                high += 1;
            } else if (c + 1.5).abs() <= 1e-12 {
                low += 1;
            } else {
                return Err(format!("C({i}|{j}) = {c} not in {{0.5, -1.5}}"));
            }
            let oracle = oracle_ch([FRAC_1_SQRT_2; 4], Outcome::from_index(i).components(), Outcome::from_index(j).components());
            ensure((oracle - c).abs() <= 1e-12, || format!("oracle {oracle} vs {c}"))?;
            ensure(check_ch(c).status == Status::Violated, || format!("C = {c} not flagged"))?;
        }
    }
    ensure(high > 0 && low > 0, || "only one value present".into())?;
    Ok(format!("256 values: {high} at +0.5, {low} at -1.5, all violating"))
}

fn criterion_4() -> Verdict {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let exp = Experiment::new(random_setup(&mut r)).map_err(|e| e.to_string())?;
        let observed = observed_statistics(&exp.setup.state, &exp.povm).map_err(|e| e.to_string())?;
        let q = invert_distribution(&exp.kernel, &observed).map_err(|e| e.to_string())?;
        let table = single_shot_chsh_table(&exp.kernel).map_err(|e| e.to_string())?;
        let via_shots: f64 = Outcome::all().map(|o| table[o.index()] * observed[o.index()]).sum();
        worst = worst.max((via_shots - ensemble_chsh(&q)).abs());
        for xi in Outcome::all() {
            // ensemble_ch itself cross-checks; recompute independently here too.
            let lib = ensemble_ch(&exp.kernel, &observed, xi).map_err(|e| e.to_string())?;
            let weighted: f64 = Outcome::all()
                .map(|xp| single_shot_ch_closed_form(&exp.setup.gammas, xi, xp) * observed[xp.index()])
                .sum();
            let from_q = ChTerms::from_distribution(q.entries(), xi).value();
            worst = worst.max((weighted - from_q).abs()).max((lib - from_q).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    Ok(format!("100 random setups, max deviation {worst:.1e}"))
}

fn born(rho: &DensityMatrix, op: &Matrix4) -> f64 {
    let mut t = 0.0;
    for i in 0..4 {
        for k in 0..4 {
            t += (rho.matrix().0[i][k] * op.0[k][i]).re;
        }
    }
    t
}

fn projector(n: [f64; 3], w: i8) -> Matrix2 {
    let s = 0.5 * f64::from(w);
    let re = [[0.5 + s * n[2], s * n[0]], [s * n[0], 0.5 - s * n[2]]];
    let im = [[0.0, -s * n[1]], [s * n[1], 0.0]];
    Matrix2::from_parts(&re, &im).unwrap()
}

fn criterion_5() -> Verdict {
    let mut r = rng(5);
    let (mut worst_povm, mut worst_marg): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let exp = Experiment::new(random_setup(&mut r)).map_err(|e| e.to_string())?;
        let Setup { state, settings, .. } = &exp.setup;
        for l in Label::ALL {
            let rec = reconstructed_sharp_povm(&exp.kernel, &exp.povm, l).map_err(|e| e.to_string())?;
            for w in [1i8, -1] {
                worst_povm = worst_povm.max(rec.element(w).max_abs_diff(&projector(settings.get(l).bloch(), w)));
            }
        }
        let observed = observed_statistics(state, &exp.povm).map_err(|e| e.to_string())?;
        let q = invert_distribution(&exp.kernel, &observed).map_err(|e| e.to_string())?;
        for a in [Label::X, Label::Y] {
            for b in [Label::U, Label::V] {
                let got = cross_marginal(&q, a, b).map_err(|e| e.to_string())?;
                for (i, (wa, wb)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                    let op = kron(&projector(settings.get(a).bloch(), wa), &projector(settings.get(b).bloch(), wb));
                    worst_marg = worst_marg.max((got[i] - born(state, &op)).abs());
                }
            }
        }
    }
    ensure(worst_povm <= 1e-12 && worst_marg <= 1e-10, || {
        format!("POVM deviation {worst_povm:e}, marginal deviation {worst_marg:e}")
    })?;
    Ok(format!("100 trials, POVM deviation {worst_povm:.1e}, marginal deviation {worst_marg:.1e}"))
}

fn criterion_6() -> Verdict {
    let rho = bell_state(BellState::PsiMinus);
    let settings = chsh_optimal_angles();
    let exp = Experiment::new(Setup {
        state: rho,
        settings,
        gammas: GammaSet::equal(FRAC_1_SQRT_2).map_err(|e| e.to_string())?,
    })
    .map_err(|e| e.to_string())?;
    let result = exact(&exp).map_err(|e| e.to_string())?;
    let quasi_path = ensemble_chsh(&result.quasi);
    let shot_path: f64 = Outcome::all()
        .map(|o| result.chsh.single_shot_s[o.index()] * result.observed[o.index()])
        .sum();
    let sharp_path = chsh_from_sharp(&rho, &settings);
    let target = 2.0 * SQRT_2;
    for (name, v) in [("quasi", quasi_path), ("shots", shot_path), ("sharp", sharp_path)] {
        ensure((v.abs() - target).abs() <= 1e-9, || format!("{name} path gives {v}"))?;
    }
    Ok(format!("S = {quasi_path:.12} / {shot_path:.12} / {sharp_path:.12}"))
}

fn criterion_7() -> Verdict {
    let base = Setup {
        state: bell_state(BellState::PsiMinus),
        settings: chsh_optimal_angles(),
        gammas: GammaSet::equal(FRAC_1_SQRT_2).map_err(|e| e.to_string())?,
    };
    let grid = linspace(0.0, 1.0, 101);
    let rows = sweep(&base, SweepAxis::WernerEta, &grid).map_err(|e| e.to_string())?;
    let mut negativity_interval = None;
    let mut violation_interval = None;
    for (i, pair) in rows.windows(2).enumerate() {
        let (q0, q1) = (pair[0].min_quasi_entry.ok_or("unphysical row")?, pair[1].min_quasi_entry.ok_or("unphysical row")?);
        let (s0, s1) = (pair[0].exact_s.ok_or("unphysical row")?.abs(), pair[1].exact_s.ok_or("unphysical row")?.abs());
        if q0 >= 0.0 && q1 < 0.0 {
            ensure(negativity_interval.replace(i).is_none(), || "multiple sign changes".into())?;
        }
        if s0 <= 2.0 && s1 > 2.0 {
            ensure(violation_interval.replace(i).is_none(), || "multiple crossings".into())?;
        }
    }
    let (Some(a), Some(b)) = (negativity_interval, violation_interval) else {
        return Err("no sign change or crossing found".into());
    };
    ensure(a == b, || format!("negativity at interval {a}, violation at {b}"))?;
    ensure(grid[a] <= FRAC_1_SQRT_2 && FRAC_1_SQRT_2 <= grid[a + 1], || "interval misses 1/sqrt2".into())?;
    Ok(format!("both change in [{:.2}, {:.2}]", grid[a], grid[a + 1]))
}

fn criterion_8() -> Verdict {
    let exp = Experiment::new(Setup {
        state: bell_state(BellState::PsiMinus),
        settings: chsh_optimal_angles(),
        gammas: GammaSet::equal(FRAC_1_SQRT_2).map_err(|e| e.to_string())?,
    })
    .map_err(|e| e.to_string())?;
    let observed = observed_statistics(&exp.setup.state, &exp.povm).map_err(|e| e.to_string())?;
    let exact_s = -2.0 * SQRT_2;
    let shots = sample_shots(&observed, 1_000_000, &RngConfig::new(42, 8).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mean = ensemble_from_shots(&exp.kernel, &shots).map_err(|e| e.to_string())?;
    let tol = 5.0 * 8f64.sqrt() / 1e3;
    ensure((mean - exact_s).abs() <= tol, || format!("mean {mean} vs {exact_s}, tolerance {tol}"))?;

    let table = single_shot_chsh_table(&exp.kernel).map_err(|e| e.to_string())?;
    let replicates = 16u64;
    let mut points = Vec::new();
    for n in [1_000usize, 10_000, 100_000, 1_000_000] {
        let mut sq = 0.0;
        for rep in 0..replicates {
            let cfg = RngConfig::new(1000 + rep, 4).map_err(|e| e.to_string())?;
            let s = sample_shots(&observed, n, &cfg).map_err(|e| e.to_string())?;
            let m = s.iter().map(|o| table[o.index()]).sum::<f64>() / n as f64;
            sq += (m - exact_s).powi(2);
        }
        points.push(((n as f64).log10(), (sq / replicates as f64).sqrt().log10()));
    }
    let k = points.len() as f64;
    let (mx, my) = (
        points.iter().map(|p| p.0).sum::<f64>() / k,
        points.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    ensure((slope + 0.5).abs() <= 0.15, || format!("log-log slope {slope}"))?;
    Ok(format!(
        "10^6 shots: mean {mean:.5} (|err| {:.2e} <= {tol:.4}); RMS error slope {slope:.3}",
        (mean - exact_s).abs()
    ))
}

fn criterion_9() -> Verdict {
    let exp = Experiment::new(Setup {
        state: bell_state(BellState::PsiMinus),
        settings: chsh_optimal_angles(),
        gammas: GammaSet::equal(FRAC_1_SQRT_2).map_err(|e| e.to_string())?,
    })
    .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let cfg = RngConfig::new(42, 4).map_err(|e| e.to_string())?;
        let out = run(&exp, 100_000, &cfg).map_err(|e| e.to_string())?;
        let path = dir.path().join(name);
        bellshot::output::write_atomic(&path, &shot_csv_bytes(&out.records)).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "shot CSVs differ".into())?;
    Ok(format!("two runs of 100000 shots, {} identical bytes", files[0].len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "universal single-shot CHSH violation", Duration::from_secs(1), criterion_1),
        (2, "closed-form agreement", Duration::from_secs(5), criterion_2),
        (3, "CH two-value result", Duration::from_secs(1), criterion_3),
        (4, "ensemble consistency", Duration::from_secs(5), criterion_4),
        (5, "exact-statistics recovery", Duration::from_secs(5), criterion_5),
        (6, "Tsirelson-level violation", Duration::from_secs(1), criterion_6),
        (7, "negativity iff violation", Duration::from_secs(2), criterion_7),
        (8, "sampling convergence", Duration::from_secs(30), criterion_8),
        (9, "determinism", Duration::from_secs(10), criterion_9),
    ];
    let mut failed = 0;
    for (n, name, budget, f) in criteria {
        let start = Instant::now();
        let result = f();
        let elapsed = start.elapsed();
        let (status, detail) = match result {
            Ok(d) if elapsed <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {elapsed:.2?}, budget {budget:?}")),
            Err(e) => ("FAIL", e),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {n} ({name}) [{elapsed:.2?}]: {detail}");
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}

//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion, with
//! the measured quantities underneath, and exits nonzero if any check fails.

use std::process::ExitCode;
use std::time::Instant;

use aimccgf::cc::cc_energy;
use aimccgf::circuit::EvolutionMode;
use aimccgf::ed::EdOracle;
use aimccgf::lcu::{build_lcu, expansion_residual, ExpansionMode, Part};
use aimccgf::measurement::{
    classical_greens, greens_series, prepare_greens, GreensSettings, MeasurementConfig,
    MeasurementMode, PreparedGreens,
};
use aimccgf::resources::{tgate_estimate, trotter_error_ratio, upsilon, CostInputs, Method};
use aimccgf::series::{GreensSeries, TimeGrid};
use aimccgf::spectral::{
    lorentzian_spectrum, spectral_function, SpectralSeries, DEFAULT_BROADENING, DEFAULT_HORIZON,
    DEFAULT_PADDING, DEFAULT_STEP,
};
use aimccgf::{Execution, Result};
use aimccgf_validation::{log_log_slope, mean_and_std, BenchmarkSet, Verdict};
use num_complex::Complex64;

const SUM_RULE_TOL: f64 = 1e-10;
const EXPANSION_TOL: f64 = 1e-12;
const ED_TOL_TWO_SITE: f64 = 1e-6;
/// Measured hybrid-versus-ED deviations for the three-site sets are at the
/// 1e-13 level, so the same threshold as the two-site sets is pinned here.
const ED_TOL_THREE_SITE: f64 = 1e-6;
const ED_HORIZON: f64 = 10.0;
const TROTTER_STEP: f64 = 0.03;
const TROTTER_SUBSTEPS: [usize; 6] = [1, 2, 4, 8, 16, 32];
const TROTTER_POINTS: usize = 334;
const ORDER_TARGET: f64 = 2.0;
const ORDER_TOL: f64 = 0.3;
const SUBSTEP_INSENSITIVITY_TOL: f64 = 1e-3;
const ESTIMATOR_SEEDS: u64 = 200;
const ESTIMATOR_SHOTS: u64 = 1000;
const ESTIMATOR_SIGMAS: f64 = 3.0;
const SLOPE_SHOTS: [u64; 3] = [100, 1000, 10_000];
const SLOPE_TARGET: f64 = -0.5;
const SLOPE_TOL: f64 = 0.1;
const REDUCTION_TOL: f64 = 1e-6;
const ENERGY_IDENTITY_TOL: f64 = 1e-10;

fn exact_settings() -> GreensSettings {
    GreensSettings::default()
}

/// `G_pp` for the occupied impurity orbital from the hybrid pipeline and for
/// the empty one from the classical cluster route.
fn impurity_series(set: &BenchmarkSet, grid: &TimeGrid) -> Result<(GreensSeries, GreensSeries)> {
    let solved = set.solve()?;
    let p = solved.occupied;
    let hybrid = greens_series(
        &set.params,
        &solved.amplitudes,
        p,
        p,
        grid,
        &exact_settings(),
    )?
    .series;
    let q = solved.empty;
    let classical = classical_greens(
        &set.params,
        &solved.amplitudes,
        q,
        q,
        grid,
        Execution::default(),
    )?;
    Ok((hybrid, classical))
}

fn sum_rule() -> Result<Verdict> {
    let mut v = Verdict::new(format!("1 sum rule: |G_pp(0) - 1| <= {SUM_RULE_TOL:e}"));
    let grid = TimeGrid::new(DEFAULT_STEP, 1)?;
    for set in BenchmarkSet::all() {
        let (occupied, empty) = impurity_series(&set, &grid)?;
        for (label, g) in [("occupied", occupied.total[0]), ("empty", empty.total[0])] {
            let dev = (g - Complex64::new(1.0, 0.0)).norm();
            v.check(
                dev <= SUM_RULE_TOL,
                format!("{}: {label} impurity orbital deviation {dev:.3e}", set.name),
            );
        }
    }
    Ok(v)
}

fn expansion_identity() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "2 unitary-expansion identity: residual <= {EXPANSION_TOL:e}"
    ));
    for set in BenchmarkSet::all() {
        let solved = set.solve()?;
        for mode in [ExpansionMode::FullCcsd, ExpansionMode::T1Only] {
            let mut worst: f64 = 0.0;
            for part in [Part::Lesser, Part::Greater] {
                for &p in solved.reference.occupied() {
                    for &q in solved.reference.occupied() {
                        let e = build_lcu(&set.params, part, p, q, &solved.amplitudes, mode)?;
                        worst = worst.max(expansion_residual(&set.params, &e, &solved.amplitudes)?);
                    }
                }
            }
            v.check(
                worst <= EXPANSION_TOL,
                format!("{} {mode:?}: max residual {worst:.3e}", set.name),
            );
        }
    }
    Ok(v)
}

fn ed_agreement() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "3 hybrid vs ED over t in [0, {ED_HORIZON}]: two-site <= {ED_TOL_TWO_SITE:e}, three-site <= {ED_TOL_THREE_SITE:e}"
    ));
    let grid = TimeGrid::with_horizon(DEFAULT_STEP, ED_HORIZON)?;
    for set in BenchmarkSet::all() {
        let solved = set.solve()?;
        let p = solved.occupied;
        let hybrid = greens_series(
            &set.params,
            &solved.amplitudes,
            p,
            p,
            &grid,
            &exact_settings(),
        )?
        .series;
        let oracle = EdOracle::new(&set.params, &solved.reference)?;
        let ed = oracle.greens(p, p, &grid, Execution::default())?;
        let dev = hybrid.max_deviation(&ed);
        let tol = if set.is_two_site() {
            ED_TOL_TWO_SITE
        } else {
            ED_TOL_THREE_SITE
        };
        v.check(dev <= tol, format!("{}: max deviation {dev:.3e}", set.name));
    }
    Ok(v)
}

/// Peaks of `spectrum` paired one-to-one with peaks of `reference`, each
/// within one frequency bin.
fn peaks_match(spectrum: &SpectralSeries, reference: &SpectralSeries, bin: f64) -> (bool, String) {
    let found = spectrum.peaks(0.01);
    let expected = reference.peaks(0.01);
    let pairs = found.len() == expected.len()
        && found
            .iter()
            .zip(&expected)
            .all(|(a, b)| (a.omega - b.omega).abs() <= bin);
    let fmt = |list: &[aimccgf::spectral::Peak]| {
        list.iter()
            .map(|p| format!("{:.3}", p.omega))
            .collect::<Vec<_>>()
            .join(", ")
    };
    (
        pairs,
        format!("peaks [{}] vs poles [{}]", fmt(&found), fmt(&expected)),
    )
}

fn spectral_peaks() -> Result<Verdict> {
    let mut v = Verdict::new("4 spectral peaks within one frequency bin of the Lehmann poles");
    let grid = TimeGrid::with_horizon(DEFAULT_STEP, DEFAULT_HORIZON)?;
    for set in BenchmarkSet::all() {
        let solved = set.solve()?;
        let (occupied, empty) = impurity_series(&set, &grid)?;
        let averaged = occupied.average(&empty, "spin-averaged impurity");
        let spectrum = spectral_function(&averaged, DEFAULT_BROADENING, DEFAULT_PADDING)?;
        let bin = spectrum.omega[1] - spectrum.omega[0];
        let oracle = EdOracle::new(&set.params, &solved.reference)?;
        let poles = oracle
            .lehmann_spectrum(solved.occupied)?
            .average(&oracle.lehmann_spectrum(solved.empty)?);
        let reference = lorentzian_spectrum(&poles, &spectrum.omega, DEFAULT_BROADENING)?;
        let (ok, detail) = peaks_match(&spectrum, &reference, bin);
        v.check(ok, format!("{}: {detail} (bin {bin:.4})", set.name));
        if set.params.v().iter().all(|x| *x == 0.0) {
            let peaks = spectrum.peaks(0.01);
            let atomic = peaks.len() == 2
                && (peaks[0].omega - 4.0).abs() <= bin
                && (peaks[1].omega - 12.0).abs() <= bin;
            v.check(atomic, format!("{}: atomic peaks at 4 and 12", set.name));
        }
    }
    Ok(v)
}

fn trotter_bound() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "5 Trotter bound/actual >= 1 for dt = {TROTTER_STEP}, substeps {TROTTER_SUBSTEPS:?}; order {ORDER_TARGET} +- {ORDER_TOL}"
    ));
    for set in [
        BenchmarkSet::two_site(),
        BenchmarkSet::three_site_symmetric(),
    ] {
        let mut finals = Vec::new();
        for r in TROTTER_SUBSTEPS {
            let ratio = trotter_error_ratio(
                &set.params,
                TROTTER_STEP,
                r,
                TROTTER_POINTS,
                Execution::default(),
            )?;
            let min = ratio.min_ratio();
            v.check(
                min >= 1.0,
                format!("{} r={r}: min ratio {min:.4}", set.name),
            );
            finals.push(*ratio.actual.last().expect("nonempty series"));
        }
        let xs: Vec<f64> = TROTTER_SUBSTEPS.iter().map(|&r| r as f64).collect();
        let order = -log_log_slope(&xs, &finals);
        v.check(
            (order - ORDER_TARGET).abs() <= ORDER_TOL,
            format!("{}: measured order {order:.3}", set.name),
        );
    }
    Ok(v)
}

fn substep_insensitivity() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "6 Trotter substeps 8 vs 32 per dt = {TROTTER_STEP}: max deviation <= {SUBSTEP_INSENSITIVITY_TOL:e}"
    ));
    let grid = TimeGrid::with_horizon(TROTTER_STEP, ED_HORIZON)?;
    for set in [
        BenchmarkSet::three_site_symmetric(),
        BenchmarkSet::three_site_asymmetric(),
    ] {
        let solved = set.solve()?;
        let p = solved.occupied;
        let run = |substeps: usize| -> Result<GreensSeries> {
            let settings = GreensSettings {
                evolution: EvolutionMode::Trotter,
                substeps,
                ..exact_settings()
            };
            Ok(greens_series(&set.params, &solved.amplitudes, p, p, &grid, &settings)?.series)
        };
        let dev = run(8)?.max_deviation(&run(32)?);
        v.check(
            dev <= SUBSTEP_INSENSITIVITY_TOL,
            format!("{}: max deviation {dev:.3e}", set.name),
        );
    }
    Ok(v)
}

fn prepared(
    set: &BenchmarkSet,
    grid: &TimeGrid,
    expansion: ExpansionMode,
    mode: MeasurementMode,
) -> Result<PreparedGreens> {
    let solved = set.solve()?;
    let settings = GreensSettings {
        expansion,
        measurement: MeasurementConfig {
            mode,
            ..MeasurementConfig::exact()
        },
        ..exact_settings()
    };
    prepare_greens(
        &set.params,
        &solved.amplitudes,
        solved.occupied,
        solved.occupied,
        grid,
        &settings,
    )
}

fn sampled_runs(
    prepared: &PreparedGreens,
    mode: MeasurementMode,
    shots: u64,
    seeds: u64,
) -> Result<Vec<aimccgf::measurement::GreensRun>> {
    (0..seeds)
        .map(|seed| {
            prepared.sample(&MeasurementConfig {
                mode,
                shots,
                seed,
                eps_m: 1e-2,
            })
        })
        .collect()
}

fn estimator_statistics() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "7 estimators unbiased within {ESTIMATOR_SIGMAS} sigma over {ESTIMATOR_SEEDS} seeds; error slope {SLOPE_TARGET} +- {SLOPE_TOL}"
    ));
    let set = BenchmarkSet::three_site_symmetric();
    let solved = set.solve()?;
    let grid = TimeGrid::new(0.5, 5)?;
    let exact = greens_series(
        &set.params,
        &solved.amplitudes,
        solved.occupied,
        solved.occupied,
        &grid,
        &exact_settings(),
    )?
    .series;
    for mode in [MeasurementMode::Hadamard, MeasurementMode::Lcu] {
        let prepared = prepared(&set, &grid, ExpansionMode::FullCcsd, mode)?;
        let runs = sampled_runs(&prepared, mode, ESTIMATOR_SHOTS, ESTIMATOR_SEEDS)?;
        let mut worst: f64 = 0.0;
        for n in 0..grid.len() {
            for (name, part) in [("Re", 0usize), ("Im", 1)] {
                let samples: Vec<f64> = runs
                    .iter()
                    .map(|r| {
                        if part == 0 {
                            r.series.total[n].re
                        } else {
                            r.series.total[n].im
                        }
                    })
                    .collect();
                let target = if part == 0 {
                    exact.total[n].re
                } else {
                    exact.total[n].im
                };
                let (mean, std) = mean_and_std(&samples);
                let sigma = std / (samples.len() as f64).sqrt();
                let z = if sigma > 0.0 {
                    (mean - target).abs() / sigma
                } else {
                    0.0
                };
                worst = worst.max(z);
                v.check(
                    z <= ESTIMATOR_SIGMAS,
                    format!(
                        "{mode:?} t={:.1} {name}: bias {:.2e}, {z:.2} sigma",
                        grid.time(n),
                        mean - target
                    ),
                );
            }
        }
        v.note(format!("{mode:?}: largest deviation {worst:.2} sigma"));

        let mut spreads = Vec::new();
        for shots in SLOPE_SHOTS {
            let runs = sampled_runs(&prepared, mode, shots, ESTIMATOR_SEEDS)?;
            let mut acc = 0.0;
            let mut count = 0.0;
            for n in 1..grid.len() {
                for part in 0..2 {
                    let samples: Vec<f64> = runs
                        .iter()
                        .map(|r| {
                            if part == 0 {
                                r.series.total[n].re
                            } else {
                                r.series.total[n].im
                            }
                        })
                        .collect();
                    acc += mean_and_std(&samples).1;
                    count += 1.0;
                }
            }
            spreads.push(acc / count);
        }
        let xs: Vec<f64> = SLOPE_SHOTS.iter().map(|&s| s as f64).collect();
        let slope = log_log_slope(&xs, &spreads);
        v.check(
            (slope - SLOPE_TARGET).abs() <= SLOPE_TOL,
            format!("{mode:?}: standard error slope {slope:.3}"),
        );
    }
    Ok(v)
}

fn lcu_bound() -> Result<Verdict> {
    let mut v =
        Verdict::new("8 LCU empirical success >= 1 - p_f for every expansion, seed and time");
    let grid = TimeGrid::new(0.5, 5)?;
    for set in BenchmarkSet::all() {
        for expansion in [ExpansionMode::FullCcsd, ExpansionMode::T1Only] {
            let mut checked = 0usize;
            let mut margin = f64::INFINITY;
            let prepared = prepared(&set, &grid, expansion, MeasurementMode::Lcu)?;
            for seed in 0..20 {
                let run = prepared.sample(&MeasurementConfig {
                    mode: MeasurementMode::Lcu,
                    shots: 1000,
                    seed,
                    eps_m: 1e-2,
                })?;
                for (lesser, greater) in &run.lcu_stats {
                    for st in [lesser, greater] {
                        if st.one_norm == 0.0 {
                            continue;
                        }
                        checked += 1;
                        margin = margin.min(st.empirical_success - (1.0 - st.p_f));
                    }
                }
            }
            v.check(
                margin >= 0.0,
                format!(
                    "{} {expansion:?}: {checked} circuits, smallest margin {margin:.4}",
                    set.name
                ),
            );
        }
    }
    Ok(v)
}

fn formula_checks() -> Result<Verdict> {
    let mut v =
        Verdict::new("9 formula checks: commutator constant, energy identity, cost scalings");
    let two_site = BenchmarkSet::two_site();
    let value = upsilon(&two_site.params);
    v.check(
        value == 10.0 / 3.0,
        format!("two-site commutator constant {value:.17}"),
    );
    for set in BenchmarkSet::all() {
        let solved = set.solve()?;
        let energy = cc_energy(&set.params, &solved.amplitudes)?;
        let dev = (energy - solved.amplitudes.e_cc).abs();
        v.check(
            dev <= ENERGY_IDENTITY_TOL,
            format!("{}: singles energy identity {dev:.3e}", set.name),
        );
    }
    let inputs = |n_bath: usize, t: f64, eps_s: f64| CostInputs {
        upsilon: 10.0 / 3.0,
        alpha_norm: 12.0,
        n_bath,
        t,
        eps_s,
        eps_m: 1e-2,
        p_f: 0.1,
    };
    let mut monotone = true;
    for method in Method::ALL {
        for n_bath in 1..6 {
            for (t, eps_s) in [(1.0, 1e-3), (2.0, 1e-3), (4.0, 1e-3), (4.0, 5e-4)] {
                let base = tgate_estimate(method, &inputs(n_bath, t, eps_s))?.gates;
                let longer = tgate_estimate(method, &inputs(n_bath, 2.0 * t, eps_s))?.gates;
                let tighter = tgate_estimate(method, &inputs(n_bath, t, eps_s / 2.0))?.gates;
                let larger = tgate_estimate(method, &inputs(n_bath + 1, t, eps_s))?.gates;
                monotone &= longer >= base && tighter >= base && larger >= base;
            }
        }
    }
    v.check(
        monotone,
        "cost estimates grow with time, precision and bath size",
    );
    for n_bath in [1usize, 2, 3, 5] {
        let base = tgate_estimate(Method::LcuSingleCircuit, &inputs(n_bath, 1.0, 1e-3))?.gates;
        let doubled =
            tgate_estimate(Method::LcuSingleCircuit, &inputs(2 * n_bath, 1.0, 1e-3))?.gates;
        let factor = doubled / base;
        v.check(
            (factor - 32.0).abs() <= 32.0 * 1e-12,
            format!("LCU cost factor on doubling {n_bath} bath sites: {factor:.15}"),
        );
    }
    Ok(v)
}

fn impurity_singles_reduction() -> Result<Verdict> {
    let mut v = Verdict::new(format!(
        "supplementary: impurity-singles expansion vs full expansion <= {REDUCTION_TOL:e} (three-site symmetric)"
    ));
    let grid = TimeGrid::with_horizon(DEFAULT_STEP, ED_HORIZON)?;
    for set in BenchmarkSet::all().into_iter().filter(|s| !s.is_two_site()) {
        let solved = set.solve()?;
        let p = solved.occupied;
        let full = greens_series(
            &set.params,
            &solved.amplitudes,
            p,
            p,
            &grid,
            &exact_settings(),
        )?
        .series;
        let reduced_settings = GreensSettings {
            expansion: ExpansionMode::T1Only,
            ..exact_settings()
        };
        let reduced = greens_series(
            &set.params,
            &solved.amplitudes,
            p,
            p,
            &grid,
            &reduced_settings,
        )?
        .series;
        let dev = reduced.max_deviation(&full);
        if set.name == BenchmarkSet::three_site_symmetric().name {
            v.check(
                dev <= REDUCTION_TOL,
                format!("{}: max deviation {dev:.3e}", set.name),
            );
        } else {
            v.note(format!(
                "{}: max deviation {dev:.3e} (reported only)",
                set.name
            ));
        }
    }
    Ok(v)
}

fn main() -> ExitCode {
    type Check = (&'static str, fn() -> Result<Verdict>);
    let checks: [Check; 10] = [
        ("1 sum rule", sum_rule),
        ("2 unitary-expansion identity", expansion_identity),
        ("3 hybrid vs ED", ed_agreement),
        ("4 spectral peaks", spectral_peaks),
        ("5 Trotter bound", trotter_bound),
        ("6 Trotter substeps", substep_insensitivity),
        ("7 estimator statistics", estimator_statistics),
        ("8 LCU bound", lcu_bound),
        ("9 formula checks", formula_checks),
        (
            "supplementary impurity-singles reduction",
            impurity_singles_reduction,
        ),
    ];
    let mut failures = 0;
    for (label, check) in checks {
        let start = Instant::now();
        let verdict = check().unwrap_or_else(|e| Verdict::fail(label, e));
        println!(
            "{} ({:.1} s)",
            verdict.line(),
            start.elapsed().as_secs_f64()
        );
        for detail in &verdict.details {
            println!("    {detail}");
        }
        if !verdict.passed {
            failures += 1;
        }
    }
    println!("acceptance: {failures} failing criteria");
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

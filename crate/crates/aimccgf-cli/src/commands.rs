//! The pipeline behind each subcommand.
//!
//! Commands build their artifacts in memory; the caller writes them in order.

use aimccgf::cc::{solve_ccsd, CcAmplitudes, Excitation};
use aimccgf::ed::{exact_greens, lehmann_spectrum};
use aimccgf::exec::Execution;
use aimccgf::measurement::{
    greens_series, GreensRun, GreensSettings, MeasurementConfig, MeasurementMode,
};
use aimccgf::model::{reference_state, ReferenceState, Spin};
use aimccgf::resources::{
    alpha_norm, tgate_estimate, trotter_error_ratio, upsilon, CostInputs, Method, SCALING_LABEL,
};
use aimccgf::series::{GreensSeries, TimeGrid};
use aimccgf::spectral::{lorentzian_spectrum, spectral_function};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{Format, GridSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{csv_table, format_real, json_document, Cell, Stamp};

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub mode: Option<MeasurementMode>,
    pub format: Option<Format>,
}

/// A named file produced by a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Artifacts plus a one-line summary; `failure` is set when `validate`
/// exceeded its threshold.
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(artifacts: Vec<Artifact>, summary: String) -> Self {
        Self {
            artifacts,
            summary,
            failure: None,
        }
    }
}

/// Settings after merging the configuration with the command line.
struct Effective<'a> {
    cfg: &'a RunConfig,
    measurement: MeasurementConfig,
    format: Option<Format>,
}

impl<'a> Effective<'a> {
    fn new(cfg: &'a RunConfig, overrides: &Overrides) -> Self {
        let shots = overrides.shots.unwrap_or(cfg.shots);
        let requested = overrides.mode.unwrap_or(cfg.mode);
        // Zero shots selects exact evaluation whatever the requested estimator.
        let mode = if shots == 0 {
            MeasurementMode::Exact
        } else {
            requested
        };
        Self {
            cfg,
            measurement: MeasurementConfig {
                mode,
                shots,
                seed: overrides.seed.unwrap_or(cfg.seed),
                eps_m: cfg.eps_m,
            },
            format: overrides.format.or(cfg.format),
        }
    }

    fn stamp(&self, command: &'static str) -> Stamp {
        Stamp {
            command,
            config_sha256: self.cfg.hash.clone(),
            seed: self.measurement.seed,
        }
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn artifact(name: impl Into<String>, bytes: Vec<u8>) -> Artifact {
    Artifact {
        name: name.into(),
        bytes,
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn grid(spec: GridSpec) -> Result<TimeGrid> {
    TimeGrid::with_horizon(spec.step, spec.horizon).map_err(|e| CliError::Config(e.to_string()))
}

fn reference(cfg: &RunConfig) -> Result<ReferenceState> {
    reference_state(&cfg.params, &cfg.filling)
        .map_err(|e| CliError::Config(format!("[reference]: {e}")))
}

fn solve(cfg: &RunConfig) -> Result<CcAmplitudes> {
    Ok(solve_ccsd(&cfg.params, &reference(cfg)?, &cfg.cc)?)
}

/// The configured orbitals, defaulting to the impurity spin-orbital occupied
/// in the reference.
fn orbitals(cfg: &RunConfig, reference: &ReferenceState) -> (usize, usize) {
    let down = cfg.params.impurity(Spin::Down);
    let occupied = if reference.is_occupied(down) {
        down
    } else {
        cfg.params.impurity(Spin::Up)
    };
    let p = cfg.orbitals.0.unwrap_or(occupied);
    (p, cfg.orbitals.1.unwrap_or(p))
}

fn hybrid_series(
    eff: &Effective,
    amplitudes: &CcAmplitudes,
    p: usize,
    q: usize,
    grid: &TimeGrid,
) -> Result<GreensRun> {
    let cfg = eff.cfg;
    let settings = GreensSettings {
        evolution: cfg.evolution,
        substeps: cfg.substeps,
        expansion: cfg.expansion,
        measurement: eff.measurement,
        exec: Execution::default(),
    };
    Ok(greens_series(
        &cfg.params,
        amplitudes,
        p,
        q,
        grid,
        &settings,
    )?)
}

fn excitation_label(x: &Excitation) -> (Vec<usize>, Vec<usize>) {
    match *x {
        Excitation::Single { i, a } => (vec![i], vec![a]),
        Excitation::Double { i, j, a, b } => (vec![i, j], vec![a, b]),
    }
}

fn join(indices: &[usize]) -> String {
    indices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
struct AmplitudeEntry {
    occupied: Vec<usize>,
    virtuals: Vec<usize>,
    t: f64,
    lambda: Option<f64>,
}

#[derive(Serialize)]
struct AmplitudeReport {
    reference: String,
    level: usize,
    e_ref: f64,
    e_cc: f64,
    e_corr: f64,
    iterations: usize,
    residual_norm: f64,
    amplitudes: Vec<AmplitudeEntry>,
}

pub fn solve_cc(cfg: &RunConfig, overrides: &Overrides) -> Result<Outcome> {
    let eff = Effective::new(cfg, overrides);
    let amps = solve(cfg)?;
    let entries: Vec<AmplitudeEntry> = amps
        .excitations
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let (occupied, virtuals) = excitation_label(x);
            AmplitudeEntry {
                occupied,
                virtuals,
                t: amps.t[k],
                lambda: amps.lambda.as_ref().map(|l| l[k]),
            }
        })
        .collect();
    let report = AmplitudeReport {
        reference: amps.reference.bitstring(),
        level: amps.level.rank(),
        e_ref: amps.e_ref,
        e_cc: amps.e_cc,
        e_corr: amps.e_corr(),
        iterations: amps.iterations,
        residual_norm: amps.residual_norm,
        amplitudes: entries,
    };
    let stamp = eff.stamp("solve-cc");
    let format = eff.format_or(Format::Csv);
    let bytes = match format {
        Format::Json => json_document(&stamp, &report)?,
        Format::Csv => {
            let notes = [
                ("reference", report.reference.clone()),
                ("e_ref", format_real(report.e_ref)),
                ("e_cc", format_real(report.e_cc)),
                ("e_corr", format_real(report.e_corr)),
                ("iterations", report.iterations.to_string()),
                ("residual_norm", format_real(report.residual_norm)),
            ];
            let rows: Vec<Vec<Cell>> = report
                .amplitudes
                .iter()
                .map(|e| {
                    vec![
                        Cell::Text(join(&e.occupied)),
                        Cell::Text(join(&e.virtuals)),
                        e.t.into(),
                        e.lambda.map_or(Cell::Text(String::new()), Cell::Real),
                    ]
                })
                .collect();
            csv_table(
                &stamp,
                &notes,
                &["occupied", "virtual", "t", "lambda"],
                &rows,
            )?
        }
    };
    let summary = format!(
        "reference {} E_cc = {} ({} amplitudes, {} iterations)",
        report.reference,
        report.e_cc,
        report.amplitudes.len(),
        report.iterations
    );
    Ok(Outcome::ok(
        vec![artifact(format!("amplitudes.{}", extension(format)), bytes)],
        summary,
    ))
}

#[derive(Serialize)]
struct GreensDocument<'a> {
    p: usize,
    q: usize,
    provenance: &'a str,
    t: Vec<f64>,
    re_g: Vec<f64>,
    im_g: Vec<f64>,
    re_g_lesser: Vec<f64>,
    im_g_lesser: Vec<f64>,
    re_g_greater: Vec<f64>,
    im_g_greater: Vec<f64>,
    stderr_re: Vec<f64>,
    stderr_im: Vec<f64>,
}

const GREENS_COLUMNS: [&str; 9] = [
    "t",
    "ReG",
    "ImG",
    "ReG<",
    "ImG<",
    "ReG>",
    "ImG>",
    "stderr_Re",
    "stderr_Im",
];

fn greens_rows(series: &GreensSeries) -> Vec<Vec<Cell>> {
    (0..series.grid.len())
        .map(|n| {
            let (g, l, r, e) = (
                series.total[n],
                series.lesser[n],
                series.greater[n],
                series.stderr[n],
            );
            vec![
                series.grid.time(n).into(),
                g.re.into(),
                g.im.into(),
                l.re.into(),
                l.im.into(),
                r.re.into(),
                r.im.into(),
                e.re.into(),
                e.im.into(),
            ]
        })
        .collect()
}

fn greens_bytes(
    stamp: &Stamp,
    format: Format,
    series: &GreensSeries,
    p: usize,
    q: usize,
) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let notes = [
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("provenance", series.provenance.clone()),
            ];
            csv_table(stamp, &notes, &GREENS_COLUMNS, &greens_rows(series))
        }
        Format::Json => {
            let pick = |v: &[Complex64], f: fn(&Complex64) -> f64| v.iter().map(f).collect();
            let doc = GreensDocument {
                p,
                q,
                provenance: &series.provenance,
                t: series.grid.times(),
                re_g: pick(&series.total, |z| z.re),
                im_g: pick(&series.total, |z| z.im),
                re_g_lesser: pick(&series.lesser, |z| z.re),
                im_g_lesser: pick(&series.lesser, |z| z.im),
                re_g_greater: pick(&series.greater, |z| z.re),
                im_g_greater: pick(&series.greater, |z| z.im),
                stderr_re: pick(&series.stderr, |z| z.re),
                stderr_im: pick(&series.stderr, |z| z.im),
            };
            json_document(stamp, &doc)
        }
    }
}

fn lcu_listing(run: &GreensRun) -> String {
    let mut out = run.lesser.dump();
    out.push_str(&run.greater.dump());
    if !run.lcu_stats.is_empty() {
        out.push_str("# time_index part kappa delta p_plus p_minus p_f empirical_success success_probability\n");
        for (n, pair) in run.lcu_stats.iter().enumerate() {
            for (name, s) in [("lesser", &pair.0), ("greater", &pair.1)] {
                out.push_str(&format!(
                    "{n} {name} {} {} {} {} {} {} {}\n",
                    s.kappa,
                    s.delta,
                    s.p_plus,
                    s.p_minus,
                    s.p_f,
                    s.empirical_success,
                    s.success_probability
                ));
            }
        }
    }
    out
}

pub fn greens(cfg: &RunConfig, overrides: &Overrides, dump_lcu: bool) -> Result<Outcome> {
    let eff = Effective::new(cfg, overrides);
    let amps = solve(cfg)?;
    let (p, q) = orbitals(cfg, &amps.reference);
    let run = hybrid_series(&eff, &amps, p, q, &grid(cfg.evolution_grid)?)?;
    let stamp = eff.stamp("greens");
    let format = eff.format_or(Format::Csv);
    let mut artifacts = vec![artifact(
        format!("greens.{}", extension(format)),
        greens_bytes(&stamp, format, &run.series, p, q)?,
    )];
    if dump_lcu {
        let header = format!(
            "# config_sha256 = {}\n# seed = {}\n",
            stamp.config_sha256, stamp.seed
        );
        artifacts.push(artifact(
            "lcu.txt",
            (header + &lcu_listing(&run)).into_bytes(),
        ));
    }
    let summary = format!(
        "G_{p}{q} on {} points, measurement {:?}, G(0) = {}",
        run.series.grid.len(),
        eff.measurement.mode,
        run.series.total[0]
    );
    Ok(Outcome::ok(artifacts, summary))
}

const PLOT_SCRIPT: &str = r##"#!/usr/bin/env python3
"""Plot spectrum.csv written by `aimccgf spectrum`."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "spectrum.csv"
with open(path) as handle:
    rows = list(csv.DictReader(line for line in handle if not line.startswith("#")))
omega = [float(r["omega"]) for r in rows]
plt.plot(omega, [float(r["A"]) for r in rows], label="hybrid")
if rows and "A_lehmann" in rows[0]:
    plt.plot(omega, [float(r["A_lehmann"]) for r in rows], "--", label="exact poles")
plt.xlabel("omega")
plt.ylabel("A(omega)")
plt.legend()
plt.tight_layout()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"##;

#[derive(Serialize)]
struct SpectrumDocument<'a> {
    p: usize,
    broadening: f64,
    padding: usize,
    provenance: &'a str,
    omega: &'a [f64],
    a: &'a [f64],
    a_lehmann: &'a [f64],
}

pub fn spectrum(cfg: &RunConfig, overrides: &Overrides) -> Result<Outcome> {
    let eff = Effective::new(cfg, overrides);
    let amps = solve(cfg)?;
    let (p, _) = orbitals(cfg, &amps.reference);
    let run = hybrid_series(&eff, &amps, p, p, &grid(cfg.spectral_grid)?)?;
    let spectrum = spectral_function(&run.series, cfg.broadening, cfg.padding)?;
    let poles = lehmann_spectrum(&cfg.params, &amps.reference, p)?;
    let exact = lorentzian_spectrum(&poles, &spectrum.omega, cfg.broadening)?;
    let stamp = eff.stamp("spectrum");
    let format = eff.format_or(Format::Csv);
    let bytes = match format {
        Format::Csv => {
            let notes = [
                ("p", p.to_string()),
                ("broadening", format_real(cfg.broadening)),
                ("padding", cfg.padding.to_string()),
                ("provenance", spectrum.provenance.clone()),
            ];
            let rows: Vec<Vec<Cell>> = (0..spectrum.omega.len())
                .map(|k| {
                    vec![
                        spectrum.omega[k].into(),
                        spectrum.values[k].into(),
                        exact.values[k].into(),
                    ]
                })
                .collect();
            csv_table(&stamp, &notes, &["omega", "A", "A_lehmann"], &rows)?
        }
        Format::Json => json_document(
            &stamp,
            &SpectrumDocument {
                p,
                broadening: cfg.broadening,
                padding: cfg.padding,
                provenance: &spectrum.provenance,
                omega: &spectrum.omega,
                a: &spectrum.values,
                a_lehmann: &exact.values,
            },
        )?,
    };
    let peaks = spectrum.peaks(0.05);
    let summary = format!(
        "A_{p}(omega) on {} frequencies, {} peaks above 5% of the maximum",
        spectrum.omega.len(),
        peaks.len()
    );
    Ok(Outcome::ok(
        vec![
            artifact(format!("spectrum.{}", extension(format)), bytes),
            artifact("plot_spectrum.py", PLOT_SCRIPT.as_bytes().to_vec()),
        ],
        summary,
    ))
}

#[derive(Serialize)]
struct MethodEntry {
    method: &'static str,
    ancillas: f64,
    queries: Option<f64>,
    gates: f64,
}

#[derive(Serialize)]
struct ResourceDocument {
    upsilon: f64,
    alpha_norm: f64,
    n_bath: usize,
    t: f64,
    eps_s: f64,
    eps_m: f64,
    p_f: f64,
    label: &'static str,
    methods: Vec<MethodEntry>,
}

pub fn resources(cfg: &RunConfig, overrides: &Overrides) -> Result<Outcome> {
    let eff = Effective::new(cfg, overrides);
    let inputs = CostInputs::from_params(
        &cfg.params,
        cfg.resource_time,
        cfg.eps_s,
        cfg.eps_m,
        cfg.p_f,
    );
    let methods = Method::ALL
        .into_iter()
        .map(|m| {
            let r = tgate_estimate(m, &inputs)?;
            Ok(MethodEntry {
                method: m.name(),
                ancillas: r.ancillas,
                queries: r.queries,
                gates: r.gates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = ResourceDocument {
        upsilon: upsilon(&cfg.params),
        alpha_norm: alpha_norm(&cfg.params),
        n_bath: cfg.params.n_bath(),
        t: inputs.t,
        eps_s: inputs.eps_s,
        eps_m: inputs.eps_m,
        p_f: inputs.p_f,
        label: SCALING_LABEL,
        methods,
    };
    let stamp = eff.stamp("resources");
    let format = eff.format_or(Format::Json);
    let bytes = match format {
        Format::Json => json_document(&stamp, &doc)?,
        Format::Csv => {
            let real = format_real;
            let notes = [
                ("upsilon", real(doc.upsilon)),
                ("alpha_norm", real(doc.alpha_norm)),
                ("n_bath", doc.n_bath.to_string()),
                ("t", real(doc.t)),
                ("eps_s", real(doc.eps_s)),
                ("eps_m", real(doc.eps_m)),
                ("p_f", real(doc.p_f)),
                ("label", doc.label.to_string()),
            ];
            let rows: Vec<Vec<Cell>> = doc
                .methods
                .iter()
                .map(|m| {
                    vec![
                        m.method.into(),
                        m.ancillas.into(),
                        m.queries.map_or(Cell::Text(String::new()), Cell::Real),
                        m.gates.into(),
                    ]
                })
                .collect();
            csv_table(
                &stamp,
                &notes,
                &["method", "ancillas", "queries", "gates"],
                &rows,
            )?
        }
    };
    let summary = format!("upsilon = {}, alpha_norm = {}", doc.upsilon, doc.alpha_norm);
    Ok(Outcome::ok(
        vec![artifact(format!("resources.{}", extension(format)), bytes)],
        summary,
    ))
}

#[derive(Serialize)]
struct ValidationDocument {
    p: usize,
    q: usize,
    threshold: f64,
    max_deviation: f64,
    passed: bool,
    t: Vec<f64>,
    re_hybrid: Vec<f64>,
    im_hybrid: Vec<f64>,
    re_exact: Vec<f64>,
    im_exact: Vec<f64>,
}

pub fn validate(cfg: &RunConfig, overrides: &Overrides) -> Result<Outcome> {
    let mut eff = Effective::new(cfg, overrides);
    eff.measurement.mode = MeasurementMode::Exact;
    let amps = solve(cfg)?;
    let (p, q) = orbitals(cfg, &amps.reference);
    let grid = grid(GridSpec {
        step: cfg.evolution_grid.step,
        horizon: cfg.validate_horizon,
    })?;
    let hybrid = hybrid_series(&eff, &amps, p, q, &grid)?.series;
    let exact = exact_greens(&cfg.params, &amps.reference, p, q, &grid)?;
    let max_deviation = hybrid.max_deviation(&exact);
    let passed = max_deviation <= cfg.threshold;
    let doc = ValidationDocument {
        p,
        q,
        threshold: cfg.threshold,
        max_deviation,
        passed,
        t: grid.times(),
        re_hybrid: hybrid.total.iter().map(|z| z.re).collect(),
        im_hybrid: hybrid.total.iter().map(|z| z.im).collect(),
        re_exact: exact.total.iter().map(|z| z.re).collect(),
        im_exact: exact.total.iter().map(|z| z.im).collect(),
    };
    let stamp = eff.stamp("validate");
    let format = eff.format_or(Format::Csv);
    let bytes = match format {
        Format::Json => json_document(&stamp, &doc)?,
        Format::Csv => {
            let real = format_real;
            let notes = [
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("threshold", real(doc.threshold)),
                ("max_deviation", real(max_deviation)),
                ("passed", passed.to_string()),
            ];
            let rows: Vec<Vec<Cell>> = (0..grid.len())
                .map(|n| {
                    vec![
                        doc.t[n].into(),
                        doc.re_hybrid[n].into(),
                        doc.im_hybrid[n].into(),
                        doc.re_exact[n].into(),
                        doc.im_exact[n].into(),
                        (hybrid.total[n] - exact.total[n]).norm().into(),
                    ]
                })
                .collect();
            csv_table(
                &stamp,
                &notes,
                &[
                    "t",
                    "ReG_hybrid",
                    "ImG_hybrid",
                    "ReG_exact",
                    "ImG_exact",
                    "abs_diff",
                ],
                &rows,
            )?
        }
    };
    let summary = format!(
        "max |G_hybrid - G_exact| = {max_deviation:e} over t in [0, {}] (threshold {:e})",
        cfg.validate_horizon, cfg.threshold
    );
    Ok(Outcome {
        artifacts: vec![artifact(format!("validate.{}", extension(format)), bytes)],
        failure: (!passed).then(|| summary.clone()),
        summary,
    })
}

#[derive(Serialize)]
struct RatioSeries {
    substeps: usize,
    t: Vec<f64>,
    actual: Vec<f64>,
    bound: Vec<f64>,
    /// `None` where the actual error vanishes.
    ratio: Vec<Option<f64>>,
    min_ratio: Option<f64>,
}

#[derive(Serialize)]
struct RatioDocument {
    step: f64,
    upsilon: f64,
    series: Vec<RatioSeries>,
}

pub fn trotter_ratio(cfg: &RunConfig, overrides: &Overrides) -> Result<Outcome> {
    let eff = Effective::new(cfg, overrides);
    let finite = |x: f64| x.is_finite().then_some(x);
    let series = cfg
        .trotter_substeps
        .iter()
        .map(|&r| {
            let data = trotter_error_ratio(
                &cfg.params,
                cfg.trotter_step,
                r,
                cfg.trotter_timesteps,
                Execution::default(),
            )?;
            Ok(RatioSeries {
                substeps: r,
                min_ratio: finite(data.min_ratio()),
                ratio: data.ratio.iter().copied().map(finite).collect(),
                t: data.times,
                actual: data.actual,
                bound: data.bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let doc = RatioDocument {
        step: cfg.trotter_step,
        upsilon: upsilon(&cfg.params),
        series,
    };
    let stamp = eff.stamp("trotter-ratio");
    let format = eff.format_or(Format::Csv);
    let bytes = match format {
        Format::Json => json_document(&stamp, &doc)?,
        Format::Csv => {
            let notes = [
                ("step", format_real(doc.step)),
                ("upsilon", format_real(doc.upsilon)),
            ];
            let rows: Vec<Vec<Cell>> = doc
                .series
                .iter()
                .flat_map(|s| {
                    (0..s.t.len()).map(move |n| {
                        vec![
                            s.substeps.into(),
                            s.t[n].into(),
                            s.actual[n].into(),
                            s.bound[n].into(),
                            s.ratio[n].unwrap_or(f64::INFINITY).into(),
                        ]
                    })
                })
                .collect();
            csv_table(
                &stamp,
                &notes,
                &["substeps", "t", "actual", "bound", "ratio"],
                &rows,
            )?
        }
    };
    let mins: Vec<String> = doc
        .series
        .iter()
        .map(|s| match s.min_ratio {
            Some(x) => format!("r={}: {x:.4}", s.substeps),
            None => format!("r={}: exact", s.substeps),
        })
        .collect();
    let summary = format!("smallest bound/actual ratio {}", mins.join(", "));
    Ok(Outcome::ok(
        vec![artifact(
            format!("trotter_ratio.{}", extension(format)),
            bytes,
        )],
        summary,
    ))
}

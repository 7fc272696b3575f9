//! Emulated measurement of the time-domain Green's function.
//!
//! Each part of `G_pq(t)` is a sum of weighted matrix elements
//! `<Φ|W_k† U(t) W_l|Φ>`. The exact mode evaluates them directly. The
//! Hadamard mode samples one ancilla-interference circuit per term. The LCU
//! mode samples one circuit per part that block-encodes the whole weighted
//! sum and reads it out with a controlled Hadamard test.
//!
//! Sampling uses ChaCha streams keyed by `(seed, time index, term, channel)`,
//! so estimates do not depend on evaluation order.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::cc::{cluster_exponential_state, CcAmplitudes, CcState};
use crate::circuit::{
    controlled, EvolutionConfig, EvolutionMode, Evolver, ExponentSign, StateVector,
};
use crate::ed::SpectralDecomposition;
use crate::error::{domain, Error, Result};
use crate::exec::Execution;
use crate::fock::FermionOp;
use crate::lcu::{build_lcu, ExpansionMode, LcuExpansion, Part};
use crate::linalg::{self, spectral_norm};
use crate::model::{AimParams, ReferenceState};
use crate::pauli::PauliString;
use crate::resources::lcu_failure_bound;
use crate::series::{GreensSeries, TimeGrid};

/// Largest register for which unitary distances are computed from dense matrices.
pub const DENSE_DISTANCE_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementMode {
    Exact,
    Hadamard,
    Lcu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub mode: MeasurementMode,
    pub shots: u64,
    pub seed: u64,
    /// Target measurement error; informational for the sampling modes.
    pub eps_m: f64,
}

impl MeasurementConfig {
    pub fn exact() -> Self {
        Self {
            mode: MeasurementMode::Exact,
            shots: 0,
            seed: 0,
            eps_m: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode != MeasurementMode::Exact && self.shots < 1 {
            return Err(domain("sampling modes need at least one shot"));
        }
        if self.eps_m.is_nan() || self.eps_m <= 0.0 {
            return Err(domain("measurement error target must be positive"));
        }
        Ok(())
    }
}

/// Real or imaginary component of a Hadamard test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Real,
    Imag,
}

impl Component {
    fn channel(self) -> u64 {
        match self {
            Component::Real => 0,
            Component::Imag => 1,
        }
    }
}

/// Failure bounds and observed success rate of one LCU circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcuStats {
    /// Ratio of the positive to the negative coefficient mass.
    pub kappa: f64,
    /// Largest spectral-norm distance between two unitaries of the combination.
    pub delta: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_f: f64,
    /// Fraction of post-selections that returned the all-zero ancilla.
    pub empirical_success: f64,
    /// Exact post-selection probability.
    pub success_probability: f64,
    /// Ancilla qubits of the coefficient register.
    pub ancillas: usize,
    /// `sum |c_j|`.
    pub one_norm: f64,
}

/// `coefficient * <Φ|bra† U ket|Φ>`, with `(k, l)` and `(l, k)` merged.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTerm {
    pub coefficient: f64,
    pub bra: PauliString,
    pub ket: PauliString,
}

/// Merges the bra-ket pairs of an expansion into distinct terms.
///
/// The unitaries are real and the propagator is complex symmetric, so the
/// matrix element of `(k, l)` equals that of `(l, k)`.
pub fn measurement_terms(expansion: &LcuExpansion) -> Vec<MeasurementTerm> {
    let mut merged: BTreeMap<(PauliString, PauliString), f64> = BTreeMap::new();
    for k in &expansion.bra {
        for l in &expansion.ket {
            let key = if k.unitary <= l.unitary {
                (k.unitary.clone(), l.unitary.clone())
            } else {
                (l.unitary.clone(), k.unitary.clone())
            };
            *merged.entry(key).or_insert(0.0) += k.coefficient * l.coefficient;
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|((bra, ket), coefficient)| MeasurementTerm {
            coefficient,
            bra,
            ket,
        })
        .collect()
}

fn sign_of(part: Part) -> ExponentSign {
    match part {
        Part::Lesser => ExponentSign::Minus,
        Part::Greater => ExponentSign::Plus,
    }
}

/// `<Φ|W_k† U W_l|Φ>` by direct state-vector inner product.
pub fn exact_expectation(
    bra: &PauliString,
    evolver: &Evolver,
    cfg: &EvolutionConfig,
    ket: &PauliString,
    reference: &ReferenceState,
) -> Result<Complex64> {
    let phi = reference.vector();
    let left = bra.apply(&phi)?;
    let right = evolver.evolve(&ket.apply(&phi)?, cfg)?;
    Ok(linalg::inner(&left, &right))
}

/// Probability of reading `0` on the ancilla of the Hadamard test of
/// `<Φ|W_k† U W_l|Φ>`, built gate by gate: `H`, controlled `W_k† U W_l`,
/// an optional `S†`, then `H`.
pub fn hadamard_test_circuit(
    bra: &PauliString,
    evolver: &Evolver,
    cfg: &EvolutionConfig,
    ket: &PauliString,
    reference: &ReferenceState,
    component: Component,
) -> Result<f64> {
    let phi = StateVector::from_amplitudes(reference.vector())?;
    let mut state = phi.with_leading_ancillas(1);
    state.hadamard(0)?;
    let mut state = controlled(&state, 0, |target| {
        let v = ket.apply(target.amplitudes())?;
        let v = evolver.evolve(&v, cfg)?;
        StateVector::from_amplitudes(bra.adjoint().apply(&v)?)
    })?;
    if component == Component::Imag {
        state.phase(0, Complex64::new(0.0, -1.0))?;
    }
    state.hadamard(0)?;
    state.probability_zero(0)
}

/// Counter-based stream for one `(time index, term, channel)` triple.
pub fn stream_rng(seed: u64, time_index: u64, term: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(time_index);
    rng.set_word_pos(((term << 2 | channel) as u128) << 40);
    rng
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0))
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Estimate of one component from `shots` ancilla readouts with
/// `P(0) = (1 + value) / 2`, and its standard error.
pub fn hadamard_sample(value: f64, shots: u64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let zeros = binomial(rng, shots, 0.5 * (1.0 + value));
    let estimate = 2.0 * zeros as f64 / shots as f64 - 1.0;
    let variance = (1.0 - estimate * estimate).max(0.0) / shots as f64;
    (estimate, variance.sqrt())
}

/// Hadamard-test estimate of one component of `<Φ|W_k† U W_l|Φ>`.
#[allow(clippy::too_many_arguments)]
pub fn hadamard_test(
    bra: &PauliString,
    evolver: &Evolver,
    cfg: &EvolutionConfig,
    ket: &PauliString,
    reference: &ReferenceState,
    component: Component,
    mcfg: &MeasurementConfig,
    stream: (u64, u64),
) -> Result<(f64, f64)> {
    if mcfg.mode != MeasurementMode::Hadamard {
        return Err(domain("hadamard_test needs the Hadamard mode"));
    }
    mcfg.validate()?;
    let p0 = hadamard_test_circuit(bra, evolver, cfg, ket, reference, component)?;
    let mut rng = stream_rng(mcfg.seed, stream.0, stream.1, component.channel());
    Ok(hadamard_sample(2.0 * p0 - 1.0, mcfg.shots, &mut rng))
}

/// Evaluated ingredients of one part at one time.
struct PartSnapshot {
    terms: Vec<(f64, Complex64)>,
    /// `sum_j c_j / |c|_1 * V_j |Φ>`.
    block_state: Vec<Complex64>,
    stats: Option<LcuStats>,
}

/// The post-selected state of the prepare/select/unprepare circuit, built
/// with an explicit Householder prepare unitary on the coefficient register.
///
/// Returns `sum_j |c_j| / |c|_1 * sign(c_j) V_j |Φ>` and the ancilla count.
pub fn lcu_postselected_state(
    coefficients: &[f64],
    images: &[Vec<Complex64>],
) -> (Vec<Complex64>, usize) {
    let m = coefficients.len();
    let ancillas = if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    };
    let size = 1usize << ancillas;
    let one_norm: f64 = coefficients.iter().map(|c| c.abs()).sum();
    let mut amps = vec![0.0; size];
    for (a, c) in amps.iter_mut().zip(coefficients) {
        *a = (c.abs() / one_norm).sqrt();
    }
    // Householder reflection mapping |0> to the amplitude vector; it is its own inverse.
    let mut u = amps.clone();
    u[0] -= 1.0;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let prepare = |row: usize, col: usize| -> f64 {
        let id = if row == col { 1.0 } else { 0.0 };
        if uu == 0.0 {
            id
        } else {
            id - 2.0 * u[row] * u[col] / uu
        }
    };
    let dim = images.first().map_or(0, |v| v.len());
    let mut out = linalg::zeros(dim);
    for (j, (c, image)) in coefficients.iter().zip(images).enumerate() {
        let weight = prepare(0, j) * prepare(j, 0) * c.signum();
        linalg::axpy(Complex64::new(weight, 0.0), image, &mut out);
    }
    (out, ancillas)
}

/// Samples the LCU circuits for one part and returns the estimate of
/// `sum_j c_j <Φ|V_j|Φ>`, its standard error, and the circuit statistics.
pub fn lcu_sample(
    snapshot_terms: &[(f64, Complex64)],
    block_state: &[Complex64],
    phi_index: usize,
    stats: LcuStats,
    shots: u64,
    rngs: [&mut ChaCha8Rng; 3],
) -> Result<(Complex64, Complex64, LcuStats)> {
    let one_norm = stats.one_norm;
    if one_norm == 0.0 || snapshot_terms.is_empty() {
        return Ok((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), stats));
    }
    let success = linalg::norm(block_state).powi(2).min(1.0);
    let overlap = block_state[phi_index];
    let [rng_re, rng_im, rng_ps] = rngs;
    let mut estimate = [0.0; 2];
    let mut error = [0.0; 2];
    for (slot, (value, rng)) in [(overlap.re, rng_re), (overlap.im, rng_im)]
        .into_iter()
        .enumerate()
    {
        // Controlled block encoding followed by a Hadamard test on the control:
        // the ancilla register reads all-zero with probability (1 + P_s)/2 and
        // the control then reads 0 or 1 with probabilities (1 + P_s ± 2 value)/4.
        let accepted = binomial(rng, shots, 0.5 * (1.0 + success));
        if accepted == 0 {
            return Err(Error::Statistical(format!(
                "no successful post-selection in {shots} shots; increase the shot count"
            )));
        }
        let p_zero = ((1.0 + success + 2.0 * value) / 4.0) / (0.5 * (1.0 + success));
        let zeros = binomial(rng, accepted, p_zero);
        let ones = accepted - zeros;
        let n = shots as f64;
        let mean = (zeros as f64 - ones as f64) / n;
        let second = accepted as f64 / n;
        estimate[slot] = mean;
        error[slot] = ((second - mean * mean).max(0.0) / n).sqrt();
    }
    let postselected = binomial(rng_ps, shots, success);
    let stats = LcuStats {
        empirical_success: postselected as f64 / shots as f64,
        success_probability: success,
        ..stats
    };
    Ok((
        Complex64::new(estimate[0], estimate[1]) * one_norm,
        Complex64::new(error[0], error[1]) * one_norm,
        stats,
    ))
}

/// Time-domain Green's function together with per-point LCU statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensRun {
    pub series: GreensSeries,
    /// `(lesser, greater)` statistics per time point in LCU mode.
    pub lcu_stats: Vec<(LcuStats, LcuStats)>,
    pub lesser: LcuExpansion,
    pub greater: LcuExpansion,
}

/// Settings of a Green's-function evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensSettings {
    pub evolution: EvolutionMode,
    /// Trotter steps per grid interval.
    pub substeps: usize,
    pub expansion: ExpansionMode,
    pub measurement: MeasurementConfig,
    pub exec: Execution,
}

impl Default for GreensSettings {
    fn default() -> Self {
        Self {
            evolution: EvolutionMode::Exact,
            substeps: 8,
            expansion: ExpansionMode::FullCcsd,
            measurement: MeasurementConfig::exact(),
            exec: Execution::default(),
        }
    }
}

struct PartPlan {
    part: Part,
    terms: Vec<MeasurementTerm>,
    kets: Vec<PauliString>,
    bras: Vec<PauliString>,
    /// For each term, indices into `bras` and `kets`.
    index: Vec<(usize, usize)>,
}

impl PartPlan {
    fn new(expansion: &LcuExpansion) -> Self {
        let terms = measurement_terms(expansion);
        let mut kets: Vec<PauliString> = Vec::new();
        let mut bras: Vec<PauliString> = Vec::new();
        let find = |list: &mut Vec<PauliString>, w: &PauliString| -> usize {
            list.iter().position(|x| x == w).unwrap_or_else(|| {
                list.push(w.clone());
                list.len() - 1
            })
        };
        let index = terms
            .iter()
            .map(|t| (find(&mut bras, &t.bra), find(&mut kets, &t.ket)))
            .collect();
        Self {
            part: expansion.part,
            terms,
            kets,
            bras,
            index,
        }
    }
}

/// Ket images `U(t_n) W_l |Φ>` and overlaps on the grid.
struct EvolvedPart {
    /// `z[n][term]`.
    z: Vec<Vec<Complex64>>,
    /// `states[n][l]`, kept only on request.
    states: Vec<Vec<Vec<Complex64>>>,
}

/// Evolves every ket image over the grid.
fn matrix_elements(
    plan: &PartPlan,
    evolver: &Evolver,
    reference: &ReferenceState,
    grid: &TimeGrid,
    settings: &GreensSettings,
    e_cc: f64,
    keep_states: bool,
) -> Result<EvolvedPart> {
    let phi = reference.vector();
    let bra_images: Vec<Vec<Complex64>> = plan
        .bras
        .iter()
        .map(|w| w.apply(&phi))
        .collect::<Result<_>>()?;
    let sign = sign_of(plan.part);
    // per_ket[l][n] = (overlaps <W_k Φ| U(t_n) W_l Φ> over k, optional state)
    type Row = (Vec<Complex64>, Option<Vec<Complex64>>);
    let per_ket: Vec<Vec<Row>> = settings.exec.try_map(plan.kets.len(), |l| {
        let start = plan.kets[l].apply(&phi)?;
        let mut current = start.clone();
        let mut rows = Vec::with_capacity(grid.len());
        for n in 0..grid.len() {
            let evolved = match settings.evolution {
                EvolutionMode::Exact => evolver.evolve(
                    &start,
                    &EvolutionConfig {
                        t: grid.time(n),
                        r: 1,
                        sign,
                        e_cc,
                        mode: EvolutionMode::Exact,
                    },
                )?,
                EvolutionMode::Trotter => {
                    if n > 0 {
                        current = evolver.evolve(
                            &current,
                            &EvolutionConfig {
                                t: grid.step(),
                                r: settings.substeps,
                                sign,
                                e_cc,
                                mode: EvolutionMode::Trotter,
                            },
                        )?;
                    }
                    current.clone()
                }
            };
            let overlaps = bra_images
                .iter()
                .map(|b| linalg::inner(b, &evolved))
                .collect();
            rows.push((overlaps, keep_states.then_some(evolved)));
        }
        Ok(rows)
    })?;
    let z = (0..grid.len())
        .map(|n| {
            plan.index
                .iter()
                .map(|&(k, l)| per_ket[l][n].0[k])
                .collect()
        })
        .collect();
    let mut per_ket = per_ket;
    let states = if keep_states {
        let mut states: Vec<Vec<Vec<Complex64>>> =
            vec![Vec::with_capacity(plan.kets.len()); grid.len()];
        for rows in per_ket.iter_mut() {
            for (n, row) in rows.iter_mut().enumerate() {
                states[n].push(row.1.take().expect("states kept on request"));
            }
        }
        states
    } else {
        Vec::new()
    };
    Ok(EvolvedPart { z, states })
}

/// Spectral-norm distances between the unitaries `W_k† U W_l` of the plan.
fn max_unitary_distance(
    plan: &PartPlan,
    evolver: &Evolver,
    t: f64,
    e_cc: f64,
    n_qubits: usize,
) -> Result<f64> {
    if plan.terms.len() < 2 {
        return Ok(0.0);
    }
    if n_qubits > DENSE_DISTANCE_QUBITS {
        return Ok(2.0);
    }
    let sign = sign_of(plan.part);
    let angle = 2.0
        * std::f64::consts::PI
        * t
        * if sign == ExponentSign::Minus {
            1.0
        } else {
            -1.0
        };
    let u = evolver.decomposition().propagator_matrix(angle, e_cc);
    let ops: Vec<DMatrix<Complex64>> = plan
        .terms
        .iter()
        .map(|term| sandwich(&term.bra.adjoint(), &u, &term.ket))
        .collect::<Result<_>>()?;
    let mut delta: f64 = 0.0;
    for a in 0..ops.len() {
        for b in a + 1..ops.len() {
            delta = delta.max(spectral_norm(&(&ops[a] - &ops[b])));
        }
    }
    Ok(delta)
}

/// `left * u * right` for Pauli strings, using that a Pauli string maps each
/// basis vector to a single basis vector times a phase.
fn sandwich(
    left: &PauliString,
    u: &DMatrix<Complex64>,
    right: &PauliString,
) -> Result<DMatrix<Complex64>> {
    let dim = u.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    let mut unit = linalg::zeros(dim);
    for j in 0..dim {
        unit[j] = Complex64::new(1.0, 0.0);
        let image = right.apply(&unit)?;
        unit[j] = Complex64::new(0.0, 0.0);
        let (source, phase) = image
            .iter()
            .enumerate()
            .find(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(k, z)| (k, *z))
            .expect("a Pauli string is invertible");
        let column: Vec<Complex64> = u.column(source).iter().map(|z| z * phase).collect();
        out.set_column(j, &nalgebra::DVector::from_vec(left.apply(&column)?));
    }
    Ok(out)
}

/// Ingredients of one part at one time. `kets` holds the evolved ket images
/// `U W_l |Φ>` in plan order; when present, the LCU block state and bounds
/// are computed as well.
fn snapshot(
    plan: &PartPlan,
    z: &[Complex64],
    kets: Option<&[Vec<Complex64>]>,
    reference: &ReferenceState,
    evolver: &Evolver,
    t: f64,
    e_cc: f64,
) -> Result<PartSnapshot> {
    let terms: Vec<(f64, Complex64)> = plan
        .terms
        .iter()
        .zip(z)
        .map(|(t, &v)| (t.coefficient, v))
        .collect();
    let Some(kets) = kets else {
        return Ok(PartSnapshot {
            terms,
            block_state: Vec::new(),
            stats: None,
        });
    };
    let phi = reference.vector();
    let coefficients: Vec<f64> = plan.terms.iter().map(|t| t.coefficient).collect();
    let images = plan
        .terms
        .iter()
        .zip(&plan.index)
        .map(|(term, &(_, l))| term.bra.adjoint().apply(&kets[l]))
        .collect::<Result<Vec<_>>>()?;
    let (block_state, ancillas) = if coefficients.is_empty() {
        (linalg::zeros(phi.len()), 0)
    } else {
        lcu_postselected_state(&coefficients, &images)
    };
    let delta = max_unitary_distance(plan, evolver, t, e_cc, reference.fock().n_modes())?;
    let bound = lcu_failure_bound(&coefficients, delta);
    Ok(PartSnapshot {
        terms,
        block_state,
        stats: Some(LcuStats {
            ancillas,
            one_norm: coefficients.iter().map(|c| c.abs()).sum(),
            ..bound
        }),
    })
}

/// Seed-independent part of a Green's-function evaluation: the expansions and
/// the per-point matrix elements, plus the LCU block states and bounds when
/// the settings ask for the LCU estimator.
pub struct PreparedGreens {
    grid: TimeGrid,
    p: usize,
    q: usize,
    settings: GreensSettings,
    reference_index: usize,
    /// `snapshots[n] = [lesser, greater]`.
    snapshots: Vec<[PartSnapshot; 2]>,
    lesser: LcuExpansion,
    greater: LcuExpansion,
}

/// Builds the expansions and evaluates every seed-independent quantity on the grid.
pub fn prepare_greens(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
    p: usize,
    q: usize,
    grid: &TimeGrid,
    settings: &GreensSettings,
) -> Result<PreparedGreens> {
    if settings.substeps < 1 {
        return Err(domain("at least one Trotter step per interval is required"));
    }
    let lesser = build_lcu(params, Part::Lesser, p, q, amplitudes, settings.expansion)?;
    let greater = build_lcu(params, Part::Greater, p, q, amplitudes, settings.expansion)?;
    let evolver = Evolver::new(params);
    let reference = &amplitudes.reference;
    let e_cc = amplitudes.e_cc;
    let plans = [PartPlan::new(&lesser), PartPlan::new(&greater)];
    let with_stats = settings.measurement.mode == MeasurementMode::Lcu;
    let evolved: Vec<EvolvedPart> = plans
        .iter()
        .map(|plan| matrix_elements(plan, &evolver, reference, grid, settings, e_cc, with_stats))
        .collect::<Result<_>>()?;
    let snapshots = settings
        .exec
        .try_map(grid.len(), |n| -> Result<[PartSnapshot; 2]> {
            let snap = |slot: usize| {
                let part = &evolved[slot];
                let kets = part.states.get(n).map(|v| &v[..]);
                snapshot(
                    &plans[slot],
                    &part.z[n],
                    kets,
                    reference,
                    &evolver,
                    grid.time(n),
                    e_cc,
                )
            };
            Ok([snap(0)?, snap(1)?])
        })?;
    Ok(PreparedGreens {
        grid: *grid,
        p,
        q,
        settings: *settings,
        reference_index: reference.index(),
        snapshots,
        lesser,
        greater,
    })
}

impl PreparedGreens {
    /// Draws the estimates for one measurement configuration.
    ///
    /// The LCU mode is only available when the preparation used it.
    pub fn sample(&self, mcfg: &MeasurementConfig) -> Result<GreensRun> {
        mcfg.validate()?;
        if mcfg.mode == MeasurementMode::Lcu
            && self.settings.measurement.mode != MeasurementMode::Lcu
        {
            return Err(Error::State("LCU sampling needs an LCU preparation".into()));
        }
        let points = self
            .settings
            .exec
            .try_map(self.grid.len(), |n| -> Result<_> {
                let mut values = [Complex64::new(0.0, 0.0); 2];
                let mut errors = [Complex64::new(0.0, 0.0); 2];
                let mut stats = Vec::new();
                for (slot, snap) in self.snapshots[n].iter().enumerate() {
                    match mcfg.mode {
                        MeasurementMode::Exact => {
                            values[slot] = snap.terms.iter().map(|(c, v)| v * *c).sum();
                        }
                        MeasurementMode::Hadamard => {
                            let mut var = [0.0; 2];
                            for (j, (c, v)) in snap.terms.iter().enumerate() {
                                let term_id = (slot * (1 << 20) + j) as u64;
                                let mut rng_re = stream_rng(mcfg.seed, n as u64, term_id, 0);
                                let mut rng_im = stream_rng(mcfg.seed, n as u64, term_id, 1);
                                let (re, se_re) = hadamard_sample(v.re, mcfg.shots, &mut rng_re);
                                let (im, se_im) = hadamard_sample(v.im, mcfg.shots, &mut rng_im);
                                values[slot] += Complex64::new(re, im) * *c;
                                var[0] += (c * se_re).powi(2);
                                var[1] += (c * se_im).powi(2);
                            }
                            errors[slot] = Complex64::new(var[0].sqrt(), var[1].sqrt());
                        }
                        MeasurementMode::Lcu => {
                            let term_id = (slot * (1 << 20)) as u64;
                            let mut r0 = stream_rng(mcfg.seed, n as u64, term_id, 0);
                            let mut r1 = stream_rng(mcfg.seed, n as u64, term_id, 1);
                            let mut r2 = stream_rng(mcfg.seed, n as u64, term_id, 2);
                            let base = snap.stats.expect("statistics prepared in LCU mode");
                            let (value, err, st) = lcu_sample(
                                &snap.terms,
                                &snap.block_state,
                                self.reference_index,
                                base,
                                mcfg.shots,
                                [&mut r0, &mut r1, &mut r2],
                            )?;
                            values[slot] = value;
                            errors[slot] = err;
                            stats.push(st);
                        }
                    }
                }
                Ok((values, errors, stats))
            })?;
        let len = self.grid.len();
        let mut lesser_values = Vec::with_capacity(len);
        let mut greater_values = Vec::with_capacity(len);
        let mut stderr = Vec::with_capacity(len);
        let mut lcu_stats = Vec::new();
        for (values, errors, stats) in points {
            lesser_values.push(values[0]);
            greater_values.push(values[1]);
            stderr.push(Complex64::new(
                errors[0].re.hypot(errors[1].re),
                errors[0].im.hypot(errors[1].im),
            ));
            if let [a, b] = stats[..] {
                lcu_stats.push((a, b));
            }
        }
        let s = &self.settings;
        let provenance = format!(
            "hybrid CC, p={}, q={}, measurement={:?}, evolution={:?}, substeps={}, expansion={:?}, shots={}, seed={}",
            self.p, self.q, mcfg.mode, s.evolution, s.substeps, s.expansion, mcfg.shots, mcfg.seed
        );
        let mut series =
            GreensSeries::from_parts(self.grid, lesser_values, greater_values, provenance);
        series.stderr = stderr;
        Ok(GreensRun {
            series,
            lcu_stats,
            lesser: self.lesser.clone(),
            greater: self.greater.clone(),
        })
    }
}

/// `G_pq(t)` on the grid, assembled from the lesser and greater expansions.
pub fn greens_series(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
    p: usize,
    q: usize,
    grid: &TimeGrid,
    settings: &GreensSettings,
) -> Result<GreensRun> {
    prepare_greens(params, amplitudes, p, q, grid, settings)?.sample(&settings.measurement)
}

/// LCU estimate of one part of `G_pq` at a single time.
pub fn lcu_estimate(
    expansion: &LcuExpansion,
    evolver: &Evolver,
    cfg: &EvolutionConfig,
    reference: &ReferenceState,
    mcfg: &MeasurementConfig,
    time_index: u64,
) -> Result<(Complex64, Complex64, LcuStats)> {
    if mcfg.mode != MeasurementMode::Lcu {
        return Err(domain("lcu_estimate needs the LCU mode"));
    }
    mcfg.validate()?;
    if expansion.ket.is_empty() || expansion.bra.is_empty() {
        return Err(domain("the expansion is empty"));
    }
    let plan = PartPlan::new(expansion);
    let phi = reference.vector();
    let kets = plan
        .kets
        .iter()
        .map(|w| evolver.evolve(&w.apply(&phi)?, cfg))
        .collect::<Result<Vec<_>>>()?;
    let bras = plan
        .bras
        .iter()
        .map(|w| w.apply(&phi))
        .collect::<Result<Vec<_>>>()?;
    let z: Vec<Complex64> = plan
        .index
        .iter()
        .map(|&(k, l)| linalg::inner(&bras[k], &kets[l]))
        .collect();
    let snap = snapshot(&plan, &z, Some(&kets), reference, evolver, cfg.t, cfg.e_cc)?;
    let mut r0 = stream_rng(mcfg.seed, time_index, 0, 0);
    let mut r1 = stream_rng(mcfg.seed, time_index, 0, 1);
    let mut r2 = stream_rng(mcfg.seed, time_index, 0, 2);
    lcu_sample(
        &snap.terms,
        &snap.block_state,
        reference.index(),
        snap.stats.expect("statistics requested"),
        mcfg.shots,
        [&mut r0, &mut r1, &mut r2],
    )
}

/// Exact value `sum_j c_j <Φ|V_j|Φ>` of one part at a single time.
pub fn exact_part(
    expansion: &LcuExpansion,
    evolver: &Evolver,
    cfg: &EvolutionConfig,
    reference: &ReferenceState,
) -> Result<Complex64> {
    measurement_terms(expansion)
        .iter()
        .map(|t| Ok(exact_expectation(&t.bra, evolver, cfg, &t.ket, reference)? * t.coefficient))
        .sum()
}

/// `G_pq(t)` of the cluster bra and ket evaluated directly on state vectors
/// with the exact propagator, for any spin-orbitals `p` and `q`.
pub fn classical_greens(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
    p: usize,
    q: usize,
    grid: &TimeGrid,
    exec: Execution,
) -> Result<GreensSeries> {
    let n = params.n_modes();
    if p >= n || q >= n {
        return Err(domain(format!(
            "spin-orbitals ({p}, {q}) out of range for {n} modes"
        )));
    }
    let ket = cluster_exponential_state(amplitudes, CcState::Ket)?;
    let bra = cluster_exponential_state(amplitudes, CcState::Bra)?;
    let fock = params.fock();
    let apply = |op: FermionOp, v: &[Complex64]| fock.apply_ops_to_vector(&[op], v);
    let lesser_ket = apply(FermionOp::annihilate(p), &ket);
    let lesser_bra = apply(FermionOp::annihilate(q), &bra);
    let greater_ket = apply(FermionOp::create(q), &ket);
    let greater_bra = apply(FermionOp::create(p), &bra);
    let decomposition = SpectralDecomposition::new(params);
    let e_cc = amplitudes.e_cc;
    let values = exec.map(grid.len(), |k| {
        let angle = 2.0 * std::f64::consts::PI * grid.time(k);
        let lesser = linalg::inner(
            &lesser_bra,
            &decomposition.propagate(&lesser_ket, angle, e_cc),
        );
        let greater = linalg::inner(
            &greater_bra,
            &decomposition.propagate(&greater_ket, -angle, e_cc),
        );
        (lesser, greater)
    });
    let (lesser, greater) = values.into_iter().unzip();
    Ok(GreensSeries::from_parts(
        *grid,
        lesser,
        greater,
        format!("classical CC, p={p}, q={q}, exact propagator"),
    ))
}

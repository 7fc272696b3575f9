//! Cost and error accounting: the Trotter commutator constant, measured
//! Trotter errors against their bound, LCU failure bounds and asymptotic
//! T-gate scalings.
//!
//! All gate and query figures are scalings evaluated with unit constants.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::TrotterLayers;
use crate::ed::SpectralDecomposition;
use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::linalg::spectral_norm;
use crate::measurement::LcuStats;
use crate::model::{AimParams, Hamiltonian, DEFAULT_BATH_CAP};
use crate::pauli::{Pauli, PauliString, Phase};

/// Label attached to every asymptotic figure.
pub const SCALING_LABEL: &str = "asymptotic estimate, constants = 1";

/// `(1/12) [ |U| (sum |V|)^2 + U^2 sum |V| / 2 ]`.
pub fn upsilon(params: &AimParams) -> f64 {
    let u = params.u_c();
    let v_sum: f64 = params.v().iter().map(|v| v.abs()).sum();
    (u.abs() * v_sum * v_sum + 0.5 * u * u * v_sum) / 12.0
}

fn mode_operator(mode: usize, dagger: bool, n: usize) -> Vec<(Complex64, PauliString)> {
    let string = |letter: Pauli| {
        let letters = (0..n)
            .map(|q| match q.cmp(&mode) {
                std::cmp::Ordering::Less => Pauli::Z,
                std::cmp::Ordering::Equal => letter,
                std::cmp::Ordering::Greater => Pauli::I,
            })
            .collect();
        PauliString::new(Phase::ONE, letters)
    };
    let y_coef = if dagger { -0.5 } else { 0.5 };
    vec![
        (Complex64::new(0.5, 0.0), string(Pauli::X)),
        (Complex64::new(0.0, y_coef), string(Pauli::Y)),
    ]
}

/// Pauli decomposition of the Hamiltonian under Jordan–Wigner, keyed by
/// the letter string, with phases folded into real coefficients.
pub fn pauli_decomposition(params: &AimParams) -> Vec<(PauliString, f64)> {
    let n = params.n_modes();
    let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
    for term in Hamiltonian::new(params).terms() {
        let mut product = vec![(
            Complex64::new(term.coefficient, 0.0),
            PauliString::identity(n),
        )];
        for op in &term.operators {
            let factor = mode_operator(op.mode, op.dagger, n);
            product = product
                .iter()
                .flat_map(|(ca, pa)| {
                    factor.iter().map(move |(cb, pb)| {
                        let p = pa * pb;
                        (ca * cb * p.phase().value(), p.with_phase(Phase::ONE))
                    })
                })
                .collect();
        }
        for (c, p) in product {
            *acc.entry(p).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
    }
    acc.into_iter()
        .filter(|(_, c)| c.norm() > 1e-14)
        .map(|(p, c)| (p, c.re))
        .collect()
}

/// `sum |alpha_i|` over the non-identity Pauli terms of the Hamiltonian.
pub fn alpha_norm(params: &AimParams) -> f64 {
    let n = params.n_modes();
    let identity = PauliString::identity(n);
    pauli_decomposition(params)
        .into_iter()
        .filter(|(p, _)| *p != identity)
        .map(|(_, c)| c.abs())
        .sum()
}

/// Measured Trotter error and its additive bound on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrotterRatio {
    pub step: f64,
    pub substeps: usize,
    pub times: Vec<f64>,
    /// Largest singular value of `U_trotter(t) - U_exact(t)`.
    pub actual: Vec<f64>,
    pub bound: Vec<f64>,
    /// `bound / actual`, `+inf` where the actual error vanishes.
    pub ratio: Vec<f64>,
}

impl TrotterRatio {
    pub fn min_ratio(&self) -> f64 {
        self.ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Errors below this are treated as exact commutation.
const EXACT_ERROR_FLOOR: f64 = 1e-10;

/// Compares `n_timesteps` applications of the symmetric product formula
/// (with `n_substeps` steps per interval `step`) to the exact propagator.
///
/// The bound adds `Υ (2π step)^3 / n_substeps^2` per interval, matching the
/// `exp(-i 2π H t)` time convention.
pub fn trotter_error_ratio(
    params: &AimParams,
    step: f64,
    n_substeps: usize,
    n_timesteps: usize,
    exec: Execution,
) -> Result<TrotterRatio> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(domain(format!("time step must be positive, got {step}")));
    }
    if n_substeps < 1 {
        return Err(domain("at least one Trotter step per interval is required"));
    }
    params.check_cap(DEFAULT_BATH_CAP)?;
    let layers = TrotterLayers::new(params);
    let decomposition = SpectralDecomposition::new(params);
    let angle = 2.0 * PI * step;
    let dim = params.fock().dim();
    // One interval of each propagator, restricted to every particle-number block.
    let blocks: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = decomposition
        .blocks()
        .iter()
        .map(|block| {
            let exact = decomposition.block_propagator(block, angle, 0.0);
            let n = block.states.len();
            let mut trotter = DMatrix::zeros(n, n);
            for (j, &sj) in block.states.iter().enumerate() {
                let mut e = vec![Complex64::new(0.0, 0.0); dim];
                e[sj] = Complex64::new(1.0, 0.0);
                let column = layers.evolve(&e, angle, n_substeps);
                for (i, &si) in block.states.iter().enumerate() {
                    trotter[(i, j)] = column[si];
                }
            }
            (trotter, exact)
        })
        .collect();
    let per_step = upsilon(params) * angle.powi(3) / (n_substeps * n_substeps) as f64;
    let per_block: Vec<Vec<f64>> = exec.map(blocks.len(), |b| {
        let (trotter, exact) = &blocks[b];
        let mut tp = DMatrix::identity(trotter.nrows(), trotter.ncols());
        let mut ep = tp.clone();
        (0..n_timesteps)
            .map(|_| {
                tp = trotter * &tp;
                ep = exact * &ep;
                spectral_norm(&(&tp - &ep))
            })
            .collect()
    });
    let actual: Vec<f64> = (0..n_timesteps)
        .map(|k| per_block.iter().map(|b| b[k]).fold(0.0, f64::max))
        .collect();
    let bound: Vec<f64> = (1..=n_timesteps).map(|k| k as f64 * per_step).collect();
    let ratio = actual
        .iter()
        .zip(&bound)
        .map(|(&a, &b)| {
            if a <= EXACT_ERROR_FLOOR {
                f64::INFINITY
            } else {
                b / a
            }
        })
        .collect();
    Ok(TrotterRatio {
        step,
        substeps: n_substeps,
        times: (1..=n_timesteps).map(|k| k as f64 * step).collect(),
        actual,
        bound,
        ratio,
    })
}

/// Failure bounds of an LCU circuit with signed `coefficients` whose
/// unitaries lie within spectral distance `delta` of each other.
///
/// An all-negative list is the negation of an all-positive one, so it is
/// handled as such. With no subtraction the ratio of positive to negative
/// mass is infinite and the subtraction failure is zero.
pub fn lcu_failure_bound(coefficients: &[f64], delta: f64) -> LcuStats {
    let pos: f64 = coefficients.iter().filter(|c| **c > 0.0).sum();
    let neg: f64 = coefficients.iter().filter(|c| **c < 0.0).map(|c| -c).sum();
    let (pos, neg) = if pos == 0.0 { (neg, pos) } else { (pos, neg) };
    let kappa = if neg == 0.0 { f64::INFINITY } else { pos / neg };
    let p_plus = if delta == 0.0 {
        0.0
    } else {
        (kappa * delta * delta / 4.0).min(1.0)
    };
    let p_minus = if kappa.is_infinite() {
        0.0
    } else {
        (4.0 * kappa / ((kappa + 1.0) * (kappa + 1.0))).min(1.0)
    };
    let m = coefficients.len();
    LcuStats {
        kappa,
        delta,
        p_plus,
        p_minus,
        p_f: (p_plus + p_minus).min(1.0),
        empirical_success: f64::NAN,
        success_probability: f64::NAN,
        ancillas: if m <= 1 {
            0
        } else {
            (usize::BITS - (m - 1).leading_zeros()) as usize
        },
        one_norm: pos + neg,
    }
}

/// `ln η / ln ln η`, defined for `η > e`.
pub fn f_eta(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta <= E || !eta.is_finite() {
        return Err(domain(format!("f(η) needs η > e, got {eta}")));
    }
    Ok(eta.ln() / eta.ln().ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TrotterGivens,
    Taylor,
    Qubitization,
    HadamardPerTerm,
    LcuSingleCircuit,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TrotterGivens,
        Method::Taylor,
        Method::Qubitization,
        Method::HadamardPerTerm,
        Method::LcuSingleCircuit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::TrotterGivens => "trotter-givens",
            Method::Taylor => "taylor",
            Method::Qubitization => "qubitization",
            Method::HadamardPerTerm => "hadamard-per-term",
            Method::LcuSingleCircuit => "lcu-single-circuit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| domain(format!("unknown method {s:?}")))
    }
}

/// Inputs of the cost formulas. The model enters only through `upsilon`,
/// `alpha_norm` and `n_bath`, so each can be varied on its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostInputs {
    pub upsilon: f64,
    pub alpha_norm: f64,
    pub n_bath: usize,
    pub t: f64,
    pub eps_s: f64,
    pub eps_m: f64,
    pub p_f: f64,
}

impl CostInputs {
    pub fn from_params(params: &AimParams, t: f64, eps_s: f64, eps_m: f64, p_f: f64) -> Self {
        Self {
            upsilon: upsilon(params),
            alpha_norm: alpha_norm(params),
            n_bath: params.n_bath(),
            t,
            eps_s,
            eps_m,
            p_f,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |x: f64, name: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(domain(format!("{name} must be positive, got {x}")))
            }
        };
        positive(self.t, "t")?;
        positive(self.eps_s, "eps_s")?;
        positive(self.eps_m, "eps_m")?;
        if self.n_bath < 1 {
            return Err(domain("cost formulas need at least one bath site"));
        }
        if !(self.upsilon >= 0.0 && self.alpha_norm >= 0.0) {
            return Err(domain("model constants must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.p_f) {
            return Err(domain(format!(
                "failure probability must lie in [0, 1), got {}",
                self.p_f
            )));
        }
        Ok(())
    }
}

/// Scaling estimates for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceReport {
    pub method: Method,
    pub inputs: CostInputs,
    pub ancillas: f64,
    /// Oracle queries for Taylor and qubitization, circuit repetitions for the
    /// measurement schemes, absent for plain Trotter.
    pub queries: Option<f64>,
    pub gates: f64,
    pub label: &'static str,
}

/// Gates of one controlled propagator with synthesis budget `eps_s`.
fn controlled_propagator(c: &CostInputs, eps_s: f64) -> f64 {
    let n = c.n_bath as f64;
    c.upsilon.sqrt() * eps_s.powf(-0.5) * c.t.powf(1.5) * n * n
}

pub fn tgate_estimate(method: Method, c: &CostInputs) -> Result<ResourceReport> {
    c.validate()?;
    let n = c.n_bath as f64;
    let n2 = n * n;
    let (ancillas, queries, gates) = match method {
        Method::TrotterGivens => (
            0.0,
            None,
            c.upsilon.sqrt() * c.eps_s.powf(-0.5) * c.t.powf(1.5) * n * n.ln(),
        ),
        Method::Taylor => {
            let f = f_eta(c.alpha_norm * c.t / c.eps_s)?;
            (
                n.ln() * f,
                Some(c.alpha_norm * c.t * f),
                c.alpha_norm * c.t * n * f,
            )
        }
        Method::Qubitization => {
            let q = c.alpha_norm * c.t + f_eta(1.0 / c.eps_s)?;
            (n.log2().ceil() + 2.0, Some(q), n * q)
        }
        Method::HadamardPerTerm => {
            let per_unitary = controlled_propagator(c, c.eps_s / n2);
            let shots = (c.eps_m / n2).powi(-2);
            (1.0, Some(n2 * shots), n2 * per_unitary * shots)
        }
        Method::LcuSingleCircuit => {
            let per_unitary = controlled_propagator(c, c.eps_s / n2);
            let repetitions = c.eps_m.powi(-2) / (1.0 - c.p_f);
            (
                n2.log2().ceil() + 1.0,
                Some(repetitions),
                n2 * per_unitary * repetitions,
            )
        }
    };
    Ok(ResourceReport {
        method,
        inputs: *c,
        ancillas,
        queries,
        gates,
        label: SCALING_LABEL,
    })
}

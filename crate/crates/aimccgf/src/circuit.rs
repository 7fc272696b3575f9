//! State-vector emulation: Pauli strings, controlled operations and time
//! evolution by second-order Trotter steps or exact diagonalization.
//!
//! Evolution follows the cycles convention `exp(∓ i 2π (H - E) t)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ed::SpectralDecomposition;
use crate::error::{domain, Error, Result};
use crate::fock::{FermionOp, FockSpace};
use crate::linalg::{self, sorted_symmetric_eigen};
use crate::model::AimParams;
use crate::pauli::PauliString;

/// A normalized register of `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(domain(format!("basis index {index} exceeds {dim}")));
        }
        let mut amplitudes = linalg::zeros(dim);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Wraps amplitudes without renormalizing; the length must be `2^n`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(domain(format!("{dim} is not a power of two")));
        }
        Ok(Self {
            n: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    /// Adds `k` ancilla qubits in `|0>` in front of the register.
    pub fn with_leading_ancillas(&self, k: usize) -> StateVector {
        let mut amplitudes = linalg::zeros(self.amplitudes.len() << k);
        amplitudes[..self.amplitudes.len()].copy_from_slice(&self.amplitudes);
        StateVector {
            n: self.n + k,
            amplitudes,
        }
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(domain(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    pub fn hadamard(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for b in 0..self.amplitudes.len() {
            if b & m == 0 {
                let (x, y) = (self.amplitudes[b], self.amplitudes[b | m]);
                self.amplitudes[b] = (x + y) * s;
                self.amplitudes[b | m] = (x - y) * s;
            }
        }
        Ok(())
    }

    /// Multiplies the `|1>` branch of qubit `q` by `phase`.
    pub fn phase(&mut self, q: usize, phase: Complex64) -> Result<()> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        for (b, a) in self.amplitudes.iter_mut().enumerate() {
            if b & m != 0 {
                *a *= phase;
            }
        }
        Ok(())
    }

    /// Probability of reading `0` on qubit `q`.
    pub fn probability_zero(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(b, _)| b & m == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

/// Applies a Pauli string to a register of the same size.
pub fn apply_pauli(state: &StateVector, pauli: &PauliString) -> Result<StateVector> {
    if pauli.n_qubits() != state.n {
        return Err(Error::SizeMismatch {
            expected: state.n,
            found: pauli.n_qubits(),
        });
    }
    Ok(StateVector {
        n: state.n,
        amplitudes: pauli.apply(&state.amplitudes)?,
    })
}

/// Applies `op` to the other qubits on the branch where `control` reads `1`.
///
/// The target register keeps the relative order of the remaining qubits.
pub fn controlled<F>(state: &StateVector, control: usize, op: F) -> Result<StateVector>
where
    F: Fn(&StateVector) -> Result<StateVector>,
{
    state.check_qubit(control)?;
    let n = state.n;
    let m = state.mask(control);
    let low = m - 1;
    let squeeze = |b: usize| ((b >> 1) & !low) | (b & low);
    let spread = |t: usize| ((t & !low) << 1) | (t & low) | m;
    let mut sub = linalg::zeros(1 << (n - 1));
    for (b, a) in state.amplitudes.iter().enumerate() {
        if b & m != 0 {
            sub[squeeze(b)] = *a;
        }
    }
    let target = StateVector {
        n: n - 1,
        amplitudes: sub,
    };
    let result = op(&target)?;
    if result.n != n - 1 {
        return Err(Error::SizeMismatch {
            expected: n - 1,
            found: result.n,
        });
    }
    let mut out = state.clone();
    for (t, a) in result.amplitudes.iter().enumerate() {
        out.amplitudes[spread(t)] = *a;
    }
    Ok(out)
}

/// Block matrix `diag(I, u)` with the control as the leading qubit.
pub fn controlled_matrix(u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = u.nrows();
    let mut m = DMatrix::identity(2 * d, 2 * d);
    m.view_mut((d, d), (d, d)).copy_from(u);
    m
}

/// Sign of the exponent: `Minus` is `exp(-i 2π (H-E) t)`, used for hole
/// propagation; `Plus` is its inverse, used for particle propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExponentSign {
    Minus,
    Plus,
}

impl ExponentSign {
    fn factor(self) -> f64 {
        match self {
            ExponentSign::Minus => 1.0,
            ExponentSign::Plus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvolutionMode {
    Trotter,
    Exact,
}

/// Parameters of one propagation `exp(sign i 2π (H - e_cc) t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub t: f64,
    /// Trotter steps over the whole interval.
    pub r: usize,
    pub sign: ExponentSign,
    pub e_cc: f64,
    pub mode: EvolutionMode,
}

impl EvolutionConfig {
    fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(domain("evolution time must be finite"));
        }
        if self.r < 1 {
            return Err(domain("at least one Trotter step is required"));
        }
        Ok(())
    }

    /// `exp(-i angle H)` with `angle = ±2π t`.
    fn angle(&self) -> f64 {
        2.0 * PI * self.t * self.sign.factor()
    }
}

/// The potential and hopping layers of the Hamiltonian.
///
/// The potential (level energies and potential) is diagonal. Hopping acts
/// identically and independently on the two spin blocks, so its exponential
/// is `U_s ⊗ U_s` with `U_s` a dense exponential on one block.
#[derive(Debug, Clone)]
pub struct TrotterLayers {
    n_levels: usize,
    potential: Vec<f64>,
    hop_energies: DVector<f64>,
    hop_vectors: DMatrix<f64>,
}

impl TrotterLayers {
    pub fn new(params: &AimParams) -> Self {
        let fock = params.fock();
        let up = params.impurity(crate::model::Spin::Up);
        let down = params.impurity(crate::model::Spin::Down);
        let potential = (0..fock.dim())
            .map(|s| {
                let levels: f64 = (0..fock.n_modes())
                    .filter(|&q| fock.is_occupied(s, q))
                    .map(|q| params.eps()[params.level_of(q)])
                    .sum();
                if fock.is_occupied(s, up) && fock.is_occupied(s, down) {
                    levels + params.u_c()
                } else {
                    levels
                }
            })
            .collect();
        let m = params.n_levels();
        let block = FockSpace::new(m);
        let mut h = DMatrix::zeros(block.dim(), block.dim());
        for s in 0..block.dim() {
            for (k, &v) in params.v().iter().enumerate() {
                for ops in [
                    [FermionOp::create(0), FermionOp::annihilate(k + 1)],
                    [FermionOp::create(k + 1), FermionOp::annihilate(0)],
                ] {
                    if let Some((sign, t)) = block.apply_ops(s, &ops) {
                        h[(t, s)] += sign * v;
                    }
                }
            }
        }
        let (hop_energies, hop_vectors) = sorted_symmetric_eigen(&h);
        Self {
            n_levels: m,
            potential,
            hop_energies,
            hop_vectors,
        }
    }

    /// Diagonal of the potential layer.
    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `exp(-i angle H_s)` on one spin block.
    pub fn block_hopping(&self, angle: f64) -> DMatrix<Complex64> {
        let v = self.hop_vectors.map(|x| Complex64::new(x, 0.0));
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.hop_energies.len(),
            self.hop_energies
                .iter()
                .map(|e| Complex64::from_polar(1.0, -angle * e)),
        ));
        &v * d * v.transpose()
    }

    fn apply_phases(&self, v: &mut [Complex64], angle: f64) {
        for (a, e) in v.iter_mut().zip(&self.potential) {
            *a *= Complex64::from_polar(1.0, -angle * e);
        }
    }

    fn apply_hopping(&self, v: &mut [Complex64], hop: &DMatrix<Complex64>) {
        let side = 1usize << self.n_levels;
        let psi = DMatrix::from_row_slice(side, side, v);
        let out = hop * psi * hop.transpose();
        for d in 0..side {
            for u in 0..side {
                v[d * side + u] = out[(d, u)];
            }
        }
    }

    /// Applies `r` symmetric steps approximating `exp(-i angle H)`.
    pub fn evolve(&self, v: &[Complex64], angle: f64, r: usize) -> Vec<Complex64> {
        let tau = angle / r as f64;
        let hop = self.block_hopping(tau);
        let mut out = v.to_vec();
        self.apply_phases(&mut out, tau / 2.0);
        for step in 0..r {
            self.apply_hopping(&mut out, &hop);
            let last = step + 1 == r;
            self.apply_phases(&mut out, if last { tau / 2.0 } else { tau });
        }
        out
    }
}

/// Reusable propagator for one model.
#[derive(Debug, Clone)]
pub struct Evolver {
    layers: TrotterLayers,
    exact: SpectralDecomposition,
}

impl Evolver {
    pub fn new(params: &AimParams) -> Self {
        Self {
            layers: TrotterLayers::new(params),
            exact: SpectralDecomposition::new(params),
        }
    }

    pub fn layers(&self) -> &TrotterLayers {
        &self.layers
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.exact
    }

    /// Propagates a vector. The `e_cc` shift becomes the classical phase
    /// `exp(±i 2π e_cc t)` on the result.
    pub fn evolve(&self, v: &[Complex64], cfg: &EvolutionConfig) -> Result<Vec<Complex64>> {
        cfg.validate()?;
        let angle = cfg.angle();
        let mut out = match cfg.mode {
            EvolutionMode::Exact => self.exact.propagate(v, angle, 0.0),
            EvolutionMode::Trotter => self.layers.evolve(v, angle, cfg.r),
        };
        let phase = Complex64::from_polar(1.0, angle * cfg.e_cc);
        out.iter_mut().for_each(|a| *a *= phase);
        Ok(out)
    }
}

/// Trotterized evolution of a register.
pub fn trotter_evolve(
    state: &StateVector,
    params: &AimParams,
    cfg: &EvolutionConfig,
) -> Result<StateVector> {
    if cfg.mode != EvolutionMode::Trotter {
        return Err(domain("trotter_evolve needs the Trotter mode"));
    }
    if state.n != params.n_modes() {
        return Err(Error::SizeMismatch {
            expected: params.n_modes(),
            found: state.n,
        });
    }
    cfg.validate()?;
    let layers = TrotterLayers::new(params);
    let mut out = layers.evolve(&state.amplitudes, cfg.angle(), cfg.r);
    let phase = Complex64::from_polar(1.0, cfg.angle() * cfg.e_cc);
    out.iter_mut().for_each(|a| *a *= phase);
    StateVector::from_amplitudes(out)
}

/// Dense `exp(sign i 2π (H - e_cc) t)` from the spectral decomposition.
pub fn exact_propagator(params: &AimParams, cfg: &EvolutionConfig) -> Result<DMatrix<Complex64>> {
    if cfg.mode != EvolutionMode::Exact {
        return Err(domain("exact_propagator needs the exact mode"));
    }
    cfg.validate()?;
    Ok(SpectralDecomposition::new(params).propagator_matrix(cfg.angle(), cfg.e_cc))
}

/// Smallest number of steps per interval `dt` with `upsilon dt³ / r² <= eps_s`.
pub fn default_substeps(upsilon: f64, dt: f64, eps_s: f64) -> Result<usize> {
    if eps_s.is_nan() || eps_s <= 0.0 || dt.is_nan() || dt <= 0.0 {
        return Err(domain("step and synthesis error must be positive"));
    }
    Ok(((upsilon * dt.powi(3) / eps_s).sqrt().ceil() as usize).max(1))
}

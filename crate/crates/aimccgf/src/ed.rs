//! Exact diagonalization: ground state, time-domain Green's functions and
//! pole data.
//!
//! The Hamiltonian conserves the number of down and up electrons, so it is
//! diagonalized one `(n_down, n_up)` block at a time.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::fock::{FermionOp, FockSpace};
use crate::linalg::{self, sorted_symmetric_eigen};
use crate::model::{AimParams, Hamiltonian, ReferenceState};
use crate::series::{GreensSeries, TimeGrid};

/// Eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Smallest projection norm of the reference that counts as overlap.
pub const OVERLAP_TOL: f64 = 1e-8;
/// Pole weights below this magnitude are dropped.
pub const WEIGHT_TOL: f64 = 1e-14;

/// Eigen-decomposition of one symmetry block.
#[derive(Debug, Clone)]
pub struct SectorEigen {
    pub n_down: usize,
    pub n_up: usize,
    /// Basis indices spanned by the block, ascending.
    pub states: Vec<usize>,
    pub energies: DVector<f64>,
    /// Column `k` is the eigenvector of `energies[k]` in the `states` basis.
    pub vectors: DMatrix<f64>,
}

impl SectorEigen {
    fn coefficients(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.states.len())
            .map(|k| {
                self.states
                    .iter()
                    .enumerate()
                    .map(|(row, &s)| v[s] * self.vectors[(row, k)])
                    .sum()
            })
            .collect()
    }

    fn eigenvector(&self, k: usize, dim: usize) -> Vec<Complex64> {
        let mut out = linalg::zeros(dim);
        for (row, &s) in self.states.iter().enumerate() {
            out[s] = Complex64::new(self.vectors[(row, k)], 0.0);
        }
        out
    }
}

/// Full spectral decomposition of the model Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    fock: FockSpace,
    blocks: Vec<SectorEigen>,
}

impl SpectralDecomposition {
    pub fn new(params: &AimParams) -> Self {
        let fock = params.fock();
        let sparse = Hamiltonian::new(params).sparse();
        let blocks = fock
            .sector_labels()
            .into_iter()
            .map(|(n_down, n_up)| {
                let states = fock.sector(n_down, n_up);
                let (energies, vectors) = sorted_symmetric_eigen(&sparse.block(&states));
                SectorEigen {
                    n_down,
                    n_up,
                    states,
                    energies,
                    vectors,
                }
            })
            .collect();
        Self { fock, blocks }
    }

    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    pub fn blocks(&self) -> &[SectorEigen] {
        &self.blocks
    }

    pub fn block(&self, n_down: usize, n_up: usize) -> &SectorEigen {
        self.blocks
            .iter()
            .find(|b| b.n_down == n_down && b.n_up == n_up)
            .expect("every sector label has a block")
    }

    /// Applies `exp(-i * angle * (H - shift))` to `v`.
    pub fn propagate(&self, v: &[Complex64], angle: f64, shift: f64) -> Vec<Complex64> {
        let mut out = linalg::zeros(v.len());
        for block in &self.blocks {
            if block
                .states
                .iter()
                .all(|&s| v[s] == Complex64::new(0.0, 0.0))
            {
                continue;
            }
            let coefs = block.coefficients(v);
            for (row, &s) in block.states.iter().enumerate() {
                out[s] = coefs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let phase =
                            Complex64::from_polar(1.0, -angle * (block.energies[k] - shift));
                        c * phase * block.vectors[(row, k)]
                    })
                    .sum();
            }
        }
        out
    }

    /// Dense matrix of `exp(-i * angle * (H - shift))`.
    pub fn propagator_matrix(&self, angle: f64, shift: f64) -> DMatrix<Complex64> {
        let dim = self.fock.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for block in &self.blocks {
            let u = self.block_propagator(block, angle, shift);
            for (i, &si) in block.states.iter().enumerate() {
                for (j, &sj) in block.states.iter().enumerate() {
                    m[(si, sj)] = u[(i, j)];
                }
            }
        }
        m
    }

    /// Propagator restricted to one block, in the block's basis.
    pub fn block_propagator(
        &self,
        block: &SectorEigen,
        angle: f64,
        shift: f64,
    ) -> DMatrix<Complex64> {
        let n = block.states.len();
        let v = block.vectors.map(|x| Complex64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            block
                .energies
                .iter()
                .map(|e| Complex64::from_polar(1.0, -angle * (e - shift))),
        ));
        &v * phases * v.transpose()
    }
}

/// Ground energy and state.
#[derive(Debug, Clone, PartialEq)]
pub struct EdSolution {
    pub e0: f64,
    pub gs: Vec<Complex64>,
    /// All eigenvalues considered, ascending.
    pub spectrum: Vec<f64>,
}

/// Picks the ground state from ascending eigenpairs.
///
/// Without a reference vector it returns the first eigenpair. With one it
/// returns the lowest eigenvalue whose eigenspace overlaps the reference,
/// represented by the normalized projection of the reference onto it.
fn select_ground(
    energies: &DVector<f64>,
    vectors: &DMatrix<f64>,
    reference: Option<&DVector<f64>>,
) -> Option<(f64, DVector<f64>)> {
    let n = energies.len();
    if n == 0 {
        return None;
    }
    let Some(phi) = reference else {
        return Some((energies[0], vectors.column(0).clone_owned()));
    };
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && (energies[end] - energies[start]).abs()
                <= DEGENERACY_TOL * (1.0 + energies[start].abs())
        {
            end += 1;
        }
        let mut proj = DVector::zeros(phi.len());
        for k in start..end {
            let col = vectors.column(k);
            proj += col * col.dot(phi);
        }
        let norm = proj.norm();
        if norm > OVERLAP_TOL {
            return Some((energies[start], proj / norm));
        }
        start = end;
    }
    None
}

/// Ground state of a dense symmetric matrix.
///
/// `sector` restricts to basis states with that many set bits; `reference`
/// selects the lowest eigenspace that overlaps the given basis state.
pub fn ground_state(
    matrix: &DMatrix<f64>,
    sector: Option<usize>,
    reference: Option<usize>,
) -> Result<EdSolution> {
    let dim = matrix.nrows();
    if matrix.ncols() != dim {
        return Err(domain("matrix is not square"));
    }
    let scale = matrix.amax().max(1.0);
    if (matrix - matrix.transpose()).amax() > 1e-12 * scale {
        return Err(domain("matrix is not Hermitian"));
    }
    let states: Vec<usize> = match sector {
        Some(n) => (0..dim).filter(|s| s.count_ones() as usize == n).collect(),
        None => (0..dim).collect(),
    };
    if states.is_empty() {
        return Err(domain("empty sector"));
    }
    let block = DMatrix::from_fn(states.len(), states.len(), |i, j| {
        matrix[(states[i], states[j])]
    });
    let (energies, vectors) = sorted_symmetric_eigen(&block);
    let phi = match reference {
        Some(r) => match states.iter().position(|&s| s == r) {
            Some(pos) => {
                let mut phi = DVector::zeros(states.len());
                phi[pos] = 1.0;
                Some(phi)
            }
            None => return Err(domain("reference state is outside the sector")),
        },
        None => None,
    };
    let (e0, local) = select_ground(&energies, &vectors, phi.as_ref())
        .ok_or_else(|| domain("no eigenvector overlaps the reference"))?;
    let mut gs = linalg::zeros(dim);
    for (k, &s) in states.iter().enumerate() {
        gs[s] = Complex64::new(local[k], 0.0);
    }
    Ok(EdSolution {
        e0,
        gs,
        spectrum: energies.iter().cloned().collect(),
    })
}

/// A pole of a Green's function: `weight * exp(i 2π energy t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub energy: f64,
    pub weight: Complex64,
}

/// Removal poles at `E0 - E(N-1)` and addition poles at `E(N+1) - E0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LehmannData {
    pub removal: Vec<Pole>,
    pub addition: Vec<Pole>,
}

impl LehmannData {
    pub fn total_weight(&self) -> Complex64 {
        self.removal
            .iter()
            .chain(&self.addition)
            .map(|p| p.weight)
            .sum()
    }

    /// All poles, removal first.
    pub fn poles(&self) -> impl Iterator<Item = &Pole> {
        self.removal.iter().chain(&self.addition)
    }

    /// Lesser and greater parts at time `t`.
    pub fn evaluate(&self, t: f64) -> (Complex64, Complex64) {
        let sum = |poles: &[Pole]| -> Complex64 {
            poles
                .iter()
                .map(|p| {
                    p.weight * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * p.energy * t)
                })
                .sum()
        };
        (sum(&self.removal), sum(&self.addition))
    }

    /// Lorentzian-broadened spectral density `sum_n Re(w_n) δ / (π((ω-ω_n)² + δ²))`.
    pub fn broadened(&self, omega: f64, delta: f64) -> f64 {
        self.poles()
            .map(|p| {
                p.weight.re * delta
                    / (std::f64::consts::PI * ((omega - p.energy).powi(2) + delta * delta))
            })
            .sum()
    }

    /// Pole data of the spin-average of two Green's functions.
    pub fn average(&self, other: &LehmannData) -> LehmannData {
        let scale = |v: &[Pole]| {
            v.iter()
                .map(|p| Pole {
                    energy: p.energy,
                    weight: p.weight * 0.5,
                })
                .collect::<Vec<_>>()
        };
        let mut removal = scale(&self.removal);
        removal.extend(scale(&other.removal));
        let mut addition = scale(&self.addition);
        addition.extend(scale(&other.addition));
        LehmannData {
            removal: merge_poles(removal),
            addition: merge_poles(addition),
        }
    }
}

fn merge_poles(mut poles: Vec<Pole>) -> Vec<Pole> {
    poles.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let mut out: Vec<Pole> = Vec::new();
    for p in poles {
        match out.last_mut() {
            Some(last)
                if (p.energy - last.energy).abs() <= DEGENERACY_TOL * (1.0 + p.energy.abs()) =>
            {
                last.weight += p.weight;
            }
            _ => out.push(p),
        }
    }
    out.retain(|p| p.weight.norm() > WEIGHT_TOL);
    out
}

/// Exact-diagonalization oracle for one model and reference.
#[derive(Debug, Clone)]
pub struct EdOracle {
    decomposition: SpectralDecomposition,
    ground: EdSolution,
}

impl EdOracle {
    /// Ground state in the particle-number sector of `reference`, selected by
    /// overlap with the reference determinant.
    pub fn new(params: &AimParams, reference: &ReferenceState) -> Result<Self> {
        let decomposition = SpectralDecomposition::new(params);
        let fock = decomposition.fock();
        let (n_down, n_up) = fock.spin_counts(reference.index());
        let block = decomposition.block(n_down, n_up);
        let pos = block
            .states
            .iter()
            .position(|&s| s == reference.index())
            .expect("reference lies in its own sector");
        let mut phi = DVector::zeros(block.states.len());
        phi[pos] = 1.0;
        let (e0, local) = select_ground(&block.energies, &block.vectors, Some(&phi))
            .ok_or_else(|| domain("no eigenvector overlaps the reference"))?;
        let mut gs = linalg::zeros(fock.dim());
        for (k, &s) in block.states.iter().enumerate() {
            gs[s] = Complex64::new(local[k], 0.0);
        }
        let n = reference.n_electrons();
        let mut spectrum: Vec<f64> = decomposition
            .blocks()
            .iter()
            .filter(|b| b.n_down + b.n_up == n)
            .flat_map(|b| b.energies.iter().cloned())
            .collect();
        spectrum.sort_by(f64::total_cmp);
        Ok(Self {
            decomposition,
            ground: EdSolution { e0, gs, spectrum },
        })
    }

    pub fn ground(&self) -> &EdSolution {
        &self.ground
    }

    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    fn check_mode(&self, p: usize) -> Result<()> {
        let n = self.decomposition.fock().n_modes();
        if p >= n {
            return Err(domain(format!(
                "spin-orbital {p} out of range for {n} modes"
            )));
        }
        Ok(())
    }

    fn project(&self, v: &[Complex64], w: &[Complex64], sign: f64) -> Vec<Pole> {
        let mut poles = Vec::new();
        for block in self.decomposition.blocks() {
            if block
                .states
                .iter()
                .all(|&s| v[s].norm() == 0.0 && w[s].norm() == 0.0)
            {
                continue;
            }
            let cv = block.coefficients(v);
            let cw = block.coefficients(w);
            for k in 0..block.states.len() {
                poles.push(Pole {
                    energy: sign * (block.energies[k] - self.ground.e0),
                    weight: cw[k].conj() * cv[k],
                });
            }
        }
        merge_poles(poles)
    }

    /// Pole data of `G_pq`: removal weights `<GS|c_q†|n><n|c_p|GS>` and
    /// addition weights `<GS|c_p|n><n|c_q†|GS>`.
    pub fn transition_poles(&self, p: usize, q: usize) -> Result<LehmannData> {
        self.check_mode(p)?;
        self.check_mode(q)?;
        let fock = self.decomposition.fock();
        let gs = &self.ground.gs;
        let cp = fock.apply_ops_to_vector(&[FermionOp::annihilate(p)], gs);
        let cq = fock.apply_ops_to_vector(&[FermionOp::annihilate(q)], gs);
        let cpd = fock.apply_ops_to_vector(&[FermionOp::create(p)], gs);
        let cqd = fock.apply_ops_to_vector(&[FermionOp::create(q)], gs);
        Ok(LehmannData {
            removal: self.project(&cp, &cq, -1.0),
            addition: self.project(&cqd, &cpd, 1.0),
        })
    }

    /// Diagonal pole data of `G_pp`.
    pub fn lehmann_spectrum(&self, p: usize) -> Result<LehmannData> {
        self.transition_poles(p, p)
    }

    /// `G_pq(t)` on the grid from the spectral decomposition.
    pub fn greens(
        &self,
        p: usize,
        q: usize,
        grid: &TimeGrid,
        exec: Execution,
    ) -> Result<GreensSeries> {
        let poles = self.transition_poles(p, q)?;
        let values = exec.map(grid.len(), |n| poles.evaluate(grid.time(n)));
        let (lesser, greater) = values.into_iter().unzip();
        Ok(GreensSeries::from_parts(
            *grid,
            lesser,
            greater,
            format!("exact diagonalization, p={p}, q={q}"),
        ))
    }

    /// The `(n_down, n_up)` eigen block containing `state`.
    pub fn block_of(&self, state: usize) -> &SectorEigen {
        let (d, u) = self.decomposition.fock().spin_counts(state);
        self.decomposition.block(d, u)
    }

    /// Eigenvector `k` of a block as a full Fock-space vector.
    pub fn eigenvector(&self, block: &SectorEigen, k: usize) -> Vec<Complex64> {
        block.eigenvector(k, self.decomposition.fock().dim())
    }
}

/// Exact `G_pq(t)` for `params` with the ground state chosen from `reference`.
pub fn exact_greens(
    params: &AimParams,
    reference: &ReferenceState,
    p: usize,
    q: usize,
    grid: &TimeGrid,
) -> Result<GreensSeries> {
    EdOracle::new(params, reference)?.greens(p, q, grid, Execution::default())
}

/// Pole data of `G_pp` for `params` with the ground state chosen from `reference`.
pub fn lehmann_spectrum(
    params: &AimParams,
    reference: &ReferenceState,
    p: usize,
) -> Result<LehmannData> {
    EdOracle::new(params, reference)?.lehmann_spectrum(p)
}

//! Anderson impurity model: parameters, Hamiltonian terms and the product
//! reference state.
//!
//! Spin-orbitals are laid out as the down block followed by the up block,
//! with the impurity first in each block. Level 0 is the impurity and level
//! `i >= 1` is bath level `i`.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::fock::{FermionOp, FockSpace, SparseMatrix};

/// Default cap on the number of bath levels for dense work.
pub const DEFAULT_BATH_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn flip(self) -> Spin {
        match self {
            Spin::Down => Spin::Up,
            Spin::Up => Spin::Down,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Down => "down",
            Spin::Up => "up",
        })
    }
}

/// Model parameters: Coulomb repulsion, level energies and hybridizations.
#[derive(Debug, Clone, PartialEq)]
pub struct AimParams {
    n_bath: usize,
    u_c: f64,
    eps: Vec<f64>,
    v: Vec<f64>,
}

impl AimParams {
    /// `eps[0]` is the impurity level; `v[i]` couples the impurity to bath level `i + 1`.
    pub fn new(u_c: f64, eps: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if eps.len() != v.len() + 1 {
            return Err(domain(format!(
                "expected {} level energies for {} hybridizations, got {}",
                v.len() + 1,
                v.len(),
                eps.len()
            )));
        }
        if !u_c.is_finite() || eps.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(domain("model parameters must be finite"));
        }
        Ok(Self {
            n_bath: v.len(),
            u_c,
            eps,
            v,
        })
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn u_c(&self) -> f64 {
        self.u_c
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn n_levels(&self) -> usize {
        self.n_bath + 1
    }

    pub fn n_modes(&self) -> usize {
        2 * self.n_levels()
    }

    pub fn fock(&self) -> FockSpace {
        FockSpace::new(self.n_modes())
    }

    /// Spin-orbital index of `(level, spin)`.
    pub fn mode(&self, level: usize, spin: Spin) -> usize {
        match spin {
            Spin::Down => level,
            Spin::Up => self.n_levels() + level,
        }
    }

    pub fn impurity(&self, spin: Spin) -> usize {
        self.mode(0, spin)
    }

    pub fn spin_of(&self, mode: usize) -> Spin {
        if mode < self.n_levels() {
            Spin::Down
        } else {
            Spin::Up
        }
    }

    pub fn level_of(&self, mode: usize) -> usize {
        mode % self.n_levels()
    }

    pub fn is_impurity(&self, mode: usize) -> bool {
        self.level_of(mode) == 0
    }

    /// Fails if the model is larger than `bath_cap` bath levels.
    pub fn check_cap(&self, bath_cap: usize) -> Result<()> {
        if self.n_bath > bath_cap {
            return Err(Error::Resource(format!(
                "{} bath levels exceed the cap of {}",
                self.n_bath, bath_cap
            )));
        }
        Ok(())
    }
}

/// Maps `(level, spin)` to a qubit index for a model with `n_bath` bath levels.
pub fn jw_qubit_index(level: usize, spin: Spin, n_bath: usize) -> Result<usize> {
    if level > n_bath {
        return Err(domain(format!(
            "level {level} out of range for {n_bath} bath levels"
        )));
    }
    Ok(match spin {
        Spin::Down => level,
        Spin::Up => n_bath + 1 + level,
    })
}

/// A real coefficient times an ordered operator product.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionTerm {
    pub coefficient: f64,
    pub operators: Vec<FermionOp>,
}

impl FermionTerm {
    pub fn new(coefficient: f64, operators: Vec<FermionOp>) -> Self {
        Self {
            coefficient,
            operators,
        }
    }

    /// Hermitian conjugate: reversed order with every dagger flipped.
    pub fn adjoint(&self) -> Self {
        Self {
            coefficient: self.coefficient,
            operators: self.operators.iter().rev().map(|op| op.adjoint()).collect(),
        }
    }

    /// Normal-ordered form: creators left of annihilators, each group sorted,
    /// with the permutation sign folded into the coefficient. Terms with a
    /// repeated creator or annihilator vanish and return `None`.
    ///
    /// Only valid for products whose normal ordering needs no contractions,
    /// which covers every term of the model (`c†c` pairs on distinct modes
    /// and density products on distinct modes are rewritten exactly).
    pub fn canonical(&self) -> Option<Self> {
        let mut ops = self.operators.clone();
        let mut sign = 1.0;
        // Bubble sort keeps track of the transposition parity.
        let key = |op: &FermionOp| {
            (
                !op.dagger,
                if op.dagger {
                    op.mode
                } else {
                    usize::MAX - op.mode
                },
            )
        };
        for i in 0..ops.len() {
            for j in 0..ops.len() - 1 - i {
                if key(&ops[j]) > key(&ops[j + 1]) {
                    if ops[j].mode == ops[j + 1].mode {
                        return None;
                    }
                    ops.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        if ops.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Self::new(sign * self.coefficient, ops))
    }
}

/// The model Hamiltonian as a list of fermionic terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_modes: usize,
    terms: Vec<FermionTerm>,
}

impl Hamiltonian {
    /// On-site, interaction and hopping terms; zero coefficients are skipped.
    pub fn new(params: &AimParams) -> Self {
        let mut terms = Vec::new();
        for spin in [Spin::Down, Spin::Up] {
            for (level, &e) in params.eps().iter().enumerate() {
                if e != 0.0 {
                    let q = params.mode(level, spin);
                    terms.push(FermionTerm::new(
                        e,
                        vec![FermionOp::create(q), FermionOp::annihilate(q)],
                    ));
                }
            }
        }
        if params.u_c() != 0.0 {
            let up = params.impurity(Spin::Up);
            let down = params.impurity(Spin::Down);
            terms.push(FermionTerm::new(
                params.u_c(),
                vec![
                    FermionOp::create(up),
                    FermionOp::annihilate(up),
                    FermionOp::create(down),
                    FermionOp::annihilate(down),
                ],
            ));
        }
        for spin in [Spin::Down, Spin::Up] {
            let imp = params.impurity(spin);
            for (k, &vk) in params.v().iter().enumerate() {
                if vk != 0.0 {
                    let bath = params.mode(k + 1, spin);
                    terms.push(FermionTerm::new(
                        vk,
                        vec![FermionOp::create(imp), FermionOp::annihilate(bath)],
                    ));
                    terms.push(FermionTerm::new(
                        vk,
                        vec![FermionOp::create(bath), FermionOp::annihilate(imp)],
                    ));
                }
            }
        }
        Self {
            n_modes: params.n_modes(),
            terms,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    /// Sparse matrix in the occupation basis.
    pub fn sparse(&self) -> SparseMatrix {
        let fock = FockSpace::new(self.n_modes);
        let mut triples = Vec::new();
        for state in 0..fock.dim() {
            for term in &self.terms {
                if let Some((sign, target)) = fock.apply_ops(state, &term.operators) {
                    triples.push((target, state, sign * term.coefficient));
                }
            }
        }
        SparseMatrix::from_triples(fock.dim(), triples)
    }

    /// One-body matrix element `h[p][q]` of the `c_p† c_q` part.
    pub fn one_body(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n_modes, self.n_modes);
        for term in &self.terms {
            if let [a, b] = term.operators[..] {
                if a.dagger && !b.dagger {
                    h[(a.mode, b.mode)] += term.coefficient;
                }
            }
        }
        h
    }
}

/// Builds the term list and the dense matrix, refusing models above `bath_cap`.
pub fn build_hamiltonian(
    params: &AimParams,
    bath_cap: usize,
) -> Result<(Vec<FermionTerm>, DMatrix<f64>)> {
    params.check_cap(bath_cap)?;
    let h = Hamiltonian::new(params);
    let dense = h.sparse().to_dense();
    Ok((h.terms, dense))
}

/// How the reference determinant is filled.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Filling {
    /// One electron per bath level below the impurity count plus one on the
    /// impurity: `n_bath + 1` electrons. Bath electrons fill the lowest bath
    /// levels, down before up. The impurity electron takes the spin that is
    /// in the minority among the bath electrons, or `impurity_spin` if set.
    #[default]
    Default,
    /// As [`Filling::Default`] with the impurity spin fixed.
    DefaultWithImpuritySpin(Spin),
    /// Aufbau filling of `n` electrons by level energy, down before up.
    Electrons(usize),
    /// Explicit list of occupied spin-orbitals.
    Occupied(Vec<usize>),
}

/// A single occupation-number basis state with its occupied/virtual split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceState {
    fock: FockSpace,
    index: usize,
    occupied: Vec<usize>,
    virtuals: Vec<usize>,
}

impl ReferenceState {
    pub fn from_occupied(n_modes: usize, occupied: &[usize]) -> Result<Self> {
        let fock = FockSpace::new(n_modes);
        let mut index = 0usize;
        for &q in occupied {
            if q >= n_modes {
                return Err(domain(format!("orbital {q} exceeds {n_modes} modes")));
            }
            if index & fock.mask(q) != 0 {
                return Err(domain(format!("orbital {q} listed twice")));
            }
            index |= fock.mask(q);
        }
        Ok(Self::from_index(fock, index))
    }

    pub fn from_index(fock: FockSpace, index: usize) -> Self {
        let (occupied, virtuals) = (0..fock.n_modes()).partition(|&q| fock.is_occupied(index, q));
        Self {
            fock,
            index,
            occupied,
            virtuals,
        }
    }

    pub fn fock(&self) -> FockSpace {
        self.fock
    }

    /// Basis index of the determinant.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn occupied(&self) -> &[usize] {
        &self.occupied
    }

    pub fn virtuals(&self) -> &[usize] {
        &self.virtuals
    }

    pub fn is_occupied(&self, q: usize) -> bool {
        self.fock.is_occupied(self.index, q)
    }

    pub fn n_electrons(&self) -> usize {
        self.occupied.len()
    }

    pub fn bitstring(&self) -> String {
        self.fock.bitstring(self.index)
    }

    /// Dense state vector of the determinant.
    pub fn vector(&self) -> Vec<num_complex::Complex64> {
        let mut v = vec![num_complex::Complex64::new(0.0, 0.0); self.fock.dim()];
        v[self.index] = num_complex::Complex64::new(1.0, 0.0);
        v
    }
}

/// Builds the reference determinant for `params` under `filling`.
pub fn reference_state(params: &AimParams, filling: &Filling) -> Result<ReferenceState> {
    let n_modes = params.n_modes();
    let occupied = match filling {
        Filling::Default => default_occupation(params, None),
        Filling::DefaultWithImpuritySpin(spin) => default_occupation(params, Some(*spin)),
        Filling::Electrons(n) => {
            if *n > n_modes {
                return Err(domain(format!(
                    "{n} electrons exceed {n_modes} spin-orbitals"
                )));
            }
            let mut order: Vec<(usize, Spin)> = (0..params.n_levels())
                .flat_map(|l| [(l, Spin::Down), (l, Spin::Up)])
                .collect();
            order.sort_by(|a, b| {
                params.eps()[a.0]
                    .total_cmp(&params.eps()[b.0])
                    .then(a.0.cmp(&b.0))
                    .then(a.1.cmp(&b.1))
            });
            order
                .into_iter()
                .take(*n)
                .map(|(l, s)| params.mode(l, s))
                .collect()
        }
        Filling::Occupied(list) => list.clone(),
    };
    ReferenceState::from_occupied(n_modes, &occupied)
}

fn default_occupation(params: &AimParams, impurity_spin: Option<Spin>) -> Vec<usize> {
    let mut bath_levels: Vec<usize> = (1..params.n_levels()).collect();
    bath_levels.sort_by(|&a, &b| params.eps()[a].total_cmp(&params.eps()[b]).then(a.cmp(&b)));
    let slots = bath_levels
        .iter()
        .flat_map(|&l| [(l, Spin::Down), (l, Spin::Up)]);
    let bath: Vec<(usize, Spin)> = slots.take(params.n_bath()).collect();
    let downs = bath.iter().filter(|(_, s)| *s == Spin::Down).count();
    let ups = bath.len() - downs;
    let spin = impurity_spin.unwrap_or(if ups < downs { Spin::Up } else { Spin::Down });
    std::iter::once(params.impurity(spin))
        .chain(bath.into_iter().map(|(l, s)| params.mode(l, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_site() -> AimParams {
        AimParams::new(8.0, vec![4.0, 0.0], vec![1.0]).unwrap()
    }

    #[test]
    fn qubit_index_examples() {
        assert_eq!(jw_qubit_index(0, Spin::Down, 1).unwrap(), 0);
        assert_eq!(jw_qubit_index(0, Spin::Up, 1).unwrap(), 2);
        assert_eq!(jw_qubit_index(2, Spin::Up, 2).unwrap(), 5);
        assert!(jw_qubit_index(3, Spin::Up, 2).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(AimParams::new(8.0, vec![4.0], vec![1.0]).is_err());
        assert!(AimParams::new(f64::NAN, vec![4.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn two_site_term_classes() {
        let h = Hamiltonian::new(&two_site());
        let sizes: Vec<usize> = h.terms().iter().map(|t| t.operators.len()).collect();
        assert_eq!(sizes.iter().filter(|&&n| n == 4).count(), 1);
        let onsite = h
            .terms()
            .iter()
            .filter(|t| t.operators.len() == 2 && t.operators[0].mode == t.operators[1].mode)
            .count();
        assert_eq!(onsite, 2);
        let hopping = h
            .terms()
            .iter()
            .filter(|t| t.operators.len() == 2 && t.operators[0].mode != t.operators[1].mode)
            .count();
        assert_eq!(hopping, 4);
    }

    #[test]
    fn default_references() {
        let r = reference_state(&two_site(), &Filling::Default).unwrap();
        assert_eq!(r.bitstring(), "0110");
        let c = AimParams::new(8.0, vec![4.0, 3.61, 4.39], vec![0.63, 0.63]).unwrap();
        assert_eq!(
            reference_state(&c, &Filling::Default).unwrap().bitstring(),
            "110010"
        );
        let d = AimParams::new(8.0, vec![4.0, -0.13, 10.1], vec![1.0, 0.15]).unwrap();
        assert_eq!(
            reference_state(&d, &Filling::Default).unwrap().bitstring(),
            "110010"
        );
    }

    #[test]
    fn impurity_spin_override_and_empty_filling() {
        let r =
            reference_state(&two_site(), &Filling::DefaultWithImpuritySpin(Spin::Down)).unwrap();
        assert_eq!(r.bitstring(), "1100");
        let empty = reference_state(&two_site(), &Filling::Electrons(0)).unwrap();
        assert_eq!(empty.bitstring(), "0000");
        assert!(empty.occupied().is_empty());
        assert!(reference_state(&two_site(), &Filling::Electrons(5)).is_err());
    }

    #[test]
    fn canonical_form_of_hopping_adjoint() {
        let t = FermionTerm::new(1.0, vec![FermionOp::create(0), FermionOp::annihilate(1)]);
        let adj = t.adjoint().canonical().unwrap();
        assert_eq!(
            adj.operators,
            vec![FermionOp::create(1), FermionOp::annihilate(0)]
        );
        assert_eq!(adj.coefficient, 1.0);
    }
}

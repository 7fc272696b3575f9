//! Expansion of the cluster-dressed single-particle states over Pauli-string
//! unitaries.
//!
//! On the reference determinant a Majorana string `X̃_j` acts as `c_j` on an
//! occupied orbital and as `c_j†` on an empty one. Products of such strings
//! therefore reproduce every determinant reachable from the reference, and
//! the states entering the Green's function become short linear combinations
//! of Pauli strings applied to the reference.
//!
//! Two routes produce the coefficients: closed forms in the amplitudes, and
//! direct projection of the target vector on the unitary images of the
//! reference. The closed forms are exact for up to three electrons.

use std::fmt;

use num_complex::Complex64;

use crate::cc::{cluster_exponential_state, CcAmplitudes, CcState, DenseAmplitudes};
use crate::error::{domain, Result};
use crate::fock::{FermionOp, FockSpace};
use crate::linalg;
use crate::model::{AimParams, ReferenceState};
use crate::pauli::{majorana_product, PauliString};

/// Coefficients below this magnitude are pruned.
pub const PRUNE_TOL: f64 = 1e-14;

/// Which part of the Green's function an expansion serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    /// Hole propagation `<(1+Λ)e^{-T} c_q† U c_p e^T>`.
    Lesser,
    /// Particle propagation `<(1+Λ)e^{-T} c_p U c_q† e^T>`.
    Greater,
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::Lesser => "lesser",
            Part::Greater => "greater",
        })
    }
}

/// Amplitude content used for the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionMode {
    /// All singles and doubles.
    FullCcsd,
    /// Only singles touching the impurity, applied to first order.
    T1Only,
}

/// One weighted unitary, labelled by the Majorana orbitals of its product.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuTerm {
    pub coefficient: f64,
    pub unitary: PauliString,
    /// Orbitals `o` of the product `X̃_{o[0]} X̃_{o[1]} …`.
    pub orbitals: Vec<usize>,
}

/// Ket and bra expansions for one part of `G_pq`.
///
/// `sum_l ket[l].coefficient * ket[l].unitary |Φ>` is the propagated ket and
/// `sum_k bra[k].coefficient * <Φ| bra[k].unitary†` is the bra.
#[derive(Debug, Clone, PartialEq)]
pub struct LcuExpansion {
    pub part: Part,
    pub p: usize,
    pub q: usize,
    pub mode: ExpansionMode,
    pub ket: Vec<LcuTerm>,
    pub bra: Vec<LcuTerm>,
}

impl LcuExpansion {
    /// Number of bra-ket unitary pairs.
    pub fn pair_count(&self) -> usize {
        self.ket.len() * self.bra.len()
    }

    /// Number of distinct unordered unitary pairs after merging `(k, l)` with `(l, k)`.
    pub fn distinct_pair_count(&self) -> usize {
        let mut pairs = std::collections::BTreeSet::new();
        for k in &self.bra {
            for l in &self.ket {
                let (a, b) = if k.unitary <= l.unitary {
                    (&k.unitary, &l.unitary)
                } else {
                    (&l.unitary, &k.unitary)
                };
                pairs.insert((a.clone(), b.clone()));
            }
        }
        pairs.len()
    }

    /// Human-readable listing of both sides.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "# part={} p={} q={} mode={:?} ket_terms={} bra_terms={}\n",
            self.part,
            self.p,
            self.q,
            self.mode,
            self.ket.len(),
            self.bra.len()
        );
        for (side, terms) in [("ket", &self.ket), ("bra", &self.bra)] {
            for t in terms {
                out.push_str(&format!(
                    "{side} {:+.17e} {} {:?}\n",
                    t.coefficient, t.unitary, t.orbitals
                ));
            }
        }
        out
    }
}

/// A candidate unitary `X̃_{o[0]} X̃_{o[1]} …`.
fn term(orbitals: Vec<usize>, n: usize, coefficient: f64) -> Result<LcuTerm> {
    Ok(LcuTerm {
        coefficient,
        unitary: majorana_product(&orbitals, n)?,
        orbitals,
    })
}

fn pruned(terms: Vec<LcuTerm>) -> Vec<LcuTerm> {
    terms
        .into_iter()
        .filter(|t| t.coefficient.abs() >= PRUNE_TOL)
        .collect()
}

fn require_occupied(reference: &ReferenceState, orbital: usize, role: &str) -> Result<()> {
    if orbital >= reference.fock().n_modes() || !reference.is_occupied(orbital) {
        return Err(domain(format!(
            "{role} orbital {orbital} is not occupied in the reference {}",
            reference.bitstring()
        )));
    }
    Ok(())
}

fn ordered_pairs(items: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    items
        .iter()
        .enumerate()
        .flat_map(move |(x, &i)| items[x + 1..].iter().map(move |&j| (i, j)))
}

/// Coefficient generator for the lesser-part unitary set built on orbital `r`.
fn hole_set(
    reference: &ReferenceState,
    r: usize,
    doubles: bool,
    mut coefficient: impl FnMut(&[usize]) -> f64,
) -> Result<Vec<LcuTerm>> {
    let n = reference.fock().n_modes();
    let occ: Vec<usize> = reference
        .occupied()
        .iter()
        .cloned()
        .filter(|&i| i != r)
        .collect();
    let vir = reference.virtuals();
    let mut out = vec![term(vec![r], n, coefficient(&[r]))?];
    for &i in &occ {
        for &a in vir {
            let o = vec![a, i, r];
            out.push(term(o.clone(), n, coefficient(&o))?);
        }
    }
    if doubles {
        for (i, j) in ordered_pairs(&occ) {
            for (a, b) in ordered_pairs(vir) {
                let o = vec![a, b, j, i, r];
                out.push(term(o.clone(), n, coefficient(&o))?);
            }
        }
    }
    Ok(out)
}

/// Coefficient generator for the greater-part unitary set excluding orbital `r`.
fn particle_set(
    reference: &ReferenceState,
    r: usize,
    doubles: bool,
    mut coefficient: impl FnMut(&[usize]) -> f64,
) -> Result<Vec<LcuTerm>> {
    let n = reference.fock().n_modes();
    let occ: Vec<usize> = reference
        .occupied()
        .iter()
        .cloned()
        .filter(|&j| j != r)
        .collect();
    let vir = reference.virtuals();
    let mut out = Vec::new();
    for &a in vir {
        out.push(term(vec![a], n, coefficient(&[a]))?);
    }
    if doubles {
        for (a, b) in ordered_pairs(vir) {
            for &j in &occ {
                let o = vec![a, b, j];
                out.push(term(o.clone(), n, coefficient(&o))?);
            }
        }
    }
    Ok(out)
}

fn amplitudes_for(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> CcAmplitudes {
    match mode {
        ExpansionMode::FullCcsd => amplitudes.clone(),
        ExpansionMode::T1Only => amplitudes.impurity_singles(params),
    }
}

/// `<Φ|(1+Λ)e^{-T}|Φ_i^a>` from the dense amplitudes; first order in `T1-only` mode.
fn bra_single(
    d: &DenseAmplitudes,
    occ: &[usize],
    vir: &[usize],
    i: usize,
    a: usize,
    full: bool,
) -> f64 {
    let mut value = d.l1(i, a);
    if full {
        for &j in occ {
            for &b in vir {
                value -= d.l2(i, j, a, b) * d.t1(j, b);
            }
        }
    }
    value
}

/// `<Φ|(1+Λ)e^{-T}|Φ>`.
fn bra_norm(d: &DenseAmplitudes, occ: &[usize], vir: &[usize], full: bool) -> f64 {
    let mut value = 1.0;
    for &i in occ {
        for &a in vir {
            value -= d.l1(i, a) * d.t1(i, a);
        }
    }
    if full {
        for (i, j) in ordered_pairs(occ) {
            for (a, b) in ordered_pairs(vir) {
                let connected =
                    d.t2(i, j, a, b) - d.t1(i, a) * d.t1(j, b) + d.t1(i, b) * d.t1(j, a);
                value -= d.l2(i, j, a, b) * connected;
            }
        }
    }
    value
}

/// Closed-form expansion of `c_p e^T|Φ>` and `<Φ|(1+Λ)e^{-T} c_q†`.
pub fn build_lesser_lcu(
    params: &AimParams,
    p: usize,
    q: usize,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> Result<LcuExpansion> {
    let reference = &amplitudes.reference;
    require_occupied(reference, p, "annihilated")?;
    require_occupied(reference, q, "created")?;
    let amps = amplitudes_for(params, amplitudes, mode);
    amps.lambda_adjoint()?;
    let d = amps.dense();
    let full = mode == ExpansionMode::FullCcsd;
    let occ = reference.occupied().to_vec();
    let vir = reference.virtuals().to_vec();
    let ket = hole_set(reference, p, full, |o| match *o {
        [_] => 1.0,
        [a, i, _] => d.t1(i, a),
        [a, b, j, i, _] => d.t_tilde(i, j, a, b),
        _ => unreachable!("hole set tiers have one, three or five orbitals"),
    })?;
    let bra = hole_set(reference, q, full, |o| match *o {
        [_] => bra_norm(&d, &occ, &vir, full),
        [a, i, _] => bra_single(&d, &occ, &vir, i, a, full),
        [a, b, j, i, _] => d.l2(i, j, a, b),
        _ => unreachable!("hole set tiers have one, three or five orbitals"),
    })?;
    Ok(LcuExpansion {
        part: Part::Lesser,
        p,
        q,
        mode,
        ket: pruned(ket),
        bra: pruned(bra),
    })
}

/// Closed-form expansion of `c_q† e^T|Φ>` and `<Φ|(1+Λ)e^{-T} c_p` for
/// occupied `p` and `q`.
pub fn build_greater_lcu(
    params: &AimParams,
    p: usize,
    q: usize,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> Result<LcuExpansion> {
    let reference = &amplitudes.reference;
    require_occupied(reference, p, "annihilated")?;
    require_occupied(reference, q, "created")?;
    let amps = amplitudes_for(params, amplitudes, mode);
    amps.lambda_adjoint()?;
    let d = amps.dense();
    let full = mode == ExpansionMode::FullCcsd;
    let occ = reference.occupied().to_vec();
    let vir = reference.virtuals().to_vec();
    let ket = particle_set(reference, q, full, |o| match *o {
        [a] => -d.t1(q, a),
        [a, b, j] => -d.t_tilde(q, j, a, b),
        _ => unreachable!("particle set tiers have one or three orbitals"),
    })?;
    let bra = particle_set(reference, p, full, |o| match *o {
        [a] => -bra_single(&d, &occ, &vir, p, a, full),
        [a, b, j] => -d.l2(p, j, a, b),
        _ => unreachable!("particle set tiers have one or three orbitals"),
    })?;
    Ok(LcuExpansion {
        part: Part::Greater,
        p,
        q,
        mode,
        ket: pruned(ket),
        bra: pruned(bra),
    })
}

/// The vectors an expansion must reproduce: the propagated ket and the ket
/// dual to the bra.
///
/// Full mode uses the exponential forms; `T1-only` mode uses the first-order
/// forms `c(1+T')|Φ>` and `<Φ|(1+Λ')(1-T')c` of the truncated amplitudes.
pub fn target_vectors(
    params: &AimParams,
    part: Part,
    p: usize,
    q: usize,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let amps = amplitudes_for(params, amplitudes, mode);
    let (ket_form, bra_form) = match mode {
        ExpansionMode::FullCcsd => (CcState::Ket, CcState::Bra),
        ExpansionMode::T1Only => (CcState::LinearKet, CcState::LinearBra),
    };
    let ket = cluster_exponential_state(&amps, ket_form)?;
    let bra = cluster_exponential_state(&amps, bra_form)?;
    let fock = amps.reference.fock();
    Ok(match part {
        Part::Lesser => (
            fock.apply_ops_to_vector(&[FermionOp::annihilate(p)], &ket),
            fock.apply_ops_to_vector(&[FermionOp::annihilate(q)], &bra),
        ),
        Part::Greater => (
            fock.apply_ops_to_vector(&[FermionOp::create(q)], &ket),
            fock.apply_ops_to_vector(&[FermionOp::create(p)], &bra),
        ),
    })
}

/// `sum_l c_l W_l |Φ>`.
pub fn expansion_vector(terms: &[LcuTerm], reference: &ReferenceState) -> Vec<Complex64> {
    let fock: FockSpace = reference.fock();
    let mut out = linalg::zeros(fock.dim());
    for t in terms {
        let (factor, target) = t.unitary.apply_basis(reference.index());
        out[target] += factor * t.coefficient;
    }
    out
}

/// Expansion obtained by projecting the target vectors on the unitary images
/// of the reference, using the same unitary sets as the closed forms.
pub fn project_expansion(
    params: &AimParams,
    part: Part,
    p: usize,
    q: usize,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> Result<LcuExpansion> {
    let reference = &amplitudes.reference;
    require_occupied(reference, p, "annihilated")?;
    require_occupied(reference, q, "created")?;
    let (ket_vec, bra_vec) = target_vectors(params, part, p, q, amplitudes, mode)?;
    let full = mode == ExpansionMode::FullCcsd;
    let project = |v: &[Complex64]| {
        let v = v.to_vec();
        move |o: &[usize]| -> f64 {
            let w = majorana_product(o, reference.fock().n_modes()).expect("valid orbitals");
            let (factor, target) = w.apply_basis(reference.index());
            (factor.conj() * v[target]).re
        }
    };
    let (ket, bra) = match part {
        Part::Lesser => (
            hole_set(reference, p, full, project(&ket_vec))?,
            hole_set(reference, q, full, project(&bra_vec))?,
        ),
        Part::Greater => (
            particle_set(reference, q, full, project(&ket_vec))?,
            particle_set(reference, p, full, project(&bra_vec))?,
        ),
    };
    Ok(LcuExpansion {
        part,
        p,
        q,
        mode,
        ket: pruned(ket),
        bra: pruned(bra),
    })
}

/// Largest componentwise deviation of both sides from their target vectors.
pub fn expansion_residual(
    params: &AimParams,
    expansion: &LcuExpansion,
    amplitudes: &CcAmplitudes,
) -> Result<f64> {
    let (ket_vec, bra_vec) = target_vectors(
        params,
        expansion.part,
        expansion.p,
        expansion.q,
        amplitudes,
        expansion.mode,
    )?;
    let reference = &amplitudes.reference;
    Ok(
        linalg::max_abs_diff(&expansion_vector(&expansion.ket, reference), &ket_vec).max(
            linalg::max_abs_diff(&expansion_vector(&expansion.bra, reference), &bra_vec),
        ),
    )
}

/// Builds the expansion for either part.
pub fn build_lcu(
    params: &AimParams,
    part: Part,
    p: usize,
    q: usize,
    amplitudes: &CcAmplitudes,
    mode: ExpansionMode,
) -> Result<LcuExpansion> {
    match part {
        Part::Lesser => build_lesser_lcu(params, p, q, amplitudes, mode),
        Part::Greater => build_greater_lcu(params, p, q, amplitudes, mode),
    }
}

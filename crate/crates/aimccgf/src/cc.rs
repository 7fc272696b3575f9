//! Coupled-cluster amplitudes for the impurity model.
//!
//! Amplitude and de-excitation equations are evaluated in the full Fock
//! space: `exp(±T)` is applied exactly through its terminating series and the
//! similarity-transformed Hamiltonian is projected on excited determinants.
//! Excitations conserve `S_z`. A double `(i<j, a<b)` is the operator
//! `a_a† a_b† a_j a_i` acting on the reference.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fock::{FermionOp, FockSpace, SparseMatrix};
use crate::linalg::{self, least_squares, sorted_symmetric_eigen};
use crate::model::{AimParams, Hamiltonian, ReferenceState};

/// Truncation level of the cluster operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CcLevel {
    Singles,
    SinglesDoubles,
}

impl CcLevel {
    pub fn from_rank(rank: usize) -> Result<Self> {
        match rank {
            1 => Ok(CcLevel::Singles),
            2 => Ok(CcLevel::SinglesDoubles),
            _ => Err(Error::Domain(format!(
                "truncation level {rank} is not supported"
            ))),
        }
    }

    pub fn rank(self) -> usize {
        match self {
            CcLevel::Singles => 1,
            CcLevel::SinglesDoubles => 2,
        }
    }
}

/// An excitation from occupied to virtual spin-orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Excitation {
    Single {
        i: usize,
        a: usize,
    },
    Double {
        i: usize,
        j: usize,
        a: usize,
        b: usize,
    },
}

impl Excitation {
    /// Operator product, leftmost applied last.
    pub fn operators(&self) -> Vec<FermionOp> {
        match *self {
            Excitation::Single { i, a } => vec![FermionOp::create(a), FermionOp::annihilate(i)],
            Excitation::Double { i, j, a, b } => vec![
                FermionOp::create(a),
                FermionOp::create(b),
                FermionOp::annihilate(j),
                FermionOp::annihilate(i),
            ],
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Excitation::Single { .. } => 1,
            Excitation::Double { .. } => 2,
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match *self {
            Excitation::Single { i, a } => vec![i, a],
            Excitation::Double { i, j, a, b } => vec![i, j, a, b],
        }
    }
}

/// `S_z`-conserving excitations of `reference` up to `level`, singles first,
/// each tier in lexicographic order.
pub fn excitation_space(reference: &ReferenceState, level: CcLevel) -> Vec<Excitation> {
    let half = reference.fock().n_modes() / 2;
    let spin = |q: usize| q < half;
    let occ = reference.occupied();
    let vir = reference.virtuals();
    let mut out: Vec<Excitation> = Vec::new();
    for &i in occ {
        for &a in vir {
            if spin(i) == spin(a) {
                out.push(Excitation::Single { i, a });
            }
        }
    }
    if level == CcLevel::SinglesDoubles {
        for (x, &i) in occ.iter().enumerate() {
            for &j in &occ[x + 1..] {
                for (y, &a) in vir.iter().enumerate() {
                    for &b in &vir[y + 1..] {
                        let down_in = [i, j].iter().filter(|&&q| spin(q)).count();
                        let down_out = [a, b].iter().filter(|&&q| spin(q)).count();
                        if down_in == down_out {
                            out.push(Excitation::Double { i, j, a, b });
                        }
                    }
                }
            }
        }
    }
    out
}

/// A linear combination of excitation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOperator {
    fock: FockSpace,
    terms: Vec<(Vec<FermionOp>, Vec<FermionOp>, f64)>,
}

impl ClusterOperator {
    pub fn new(fock: FockSpace, excitations: &[Excitation], amplitudes: &[f64]) -> Self {
        let terms = excitations
            .iter()
            .zip(amplitudes)
            .filter(|(_, &x)| x != 0.0)
            .map(|(e, &x)| {
                let ops = e.operators();
                let adj = ops.iter().rev().map(|o| o.adjoint()).collect();
                (ops, adj, x)
            })
            .collect();
        Self { fock, terms }
    }

    fn apply_with(&self, v: &[Complex64], adjoint: bool) -> Vec<Complex64> {
        let mut out = linalg::zeros(v.len());
        for (state, amp) in v.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            for (ops, adj, x) in &self.terms {
                let ops = if adjoint { adj } else { ops };
                if let Some((sign, target)) = self.fock.apply_ops(state, ops) {
                    out[target] += amp * (sign * x);
                }
            }
        }
        out
    }

    /// `T v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply_with(v, false)
    }

    /// `T† v`.
    pub fn apply_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.apply_with(v, true)
    }

    fn exp_with(&self, v: &[Complex64], scale: f64, adjoint: bool) -> Vec<Complex64> {
        let mut out = v.to_vec();
        let mut term = v.to_vec();
        for k in 1..=self.fock.n_modes() + 1 {
            term = self.apply_with(&term, adjoint);
            let factor = scale / k as f64;
            term.iter_mut().for_each(|x| *x *= factor);
            if term.iter().all(|x| x.norm() == 0.0) {
                break;
            }
            linalg::axpy(Complex64::new(1.0, 0.0), &term, &mut out);
        }
        out
    }

    /// `exp(scale T) v`; the series terminates because `T` is nilpotent.
    pub fn exp(&self, v: &[Complex64], scale: f64) -> Vec<Complex64> {
        self.exp_with(v, scale, false)
    }

    /// `exp(scale T†) v`.
    pub fn exp_adjoint(&self, v: &[Complex64], scale: f64) -> Vec<Complex64> {
        self.exp_with(v, scale, true)
    }
}

/// Converged cluster and de-excitation amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct CcAmplitudes {
    pub level: CcLevel,
    pub reference: ReferenceState,
    pub excitations: Vec<Excitation>,
    pub t: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    /// `<Φ|H|Φ>`.
    pub e_ref: f64,
    /// Projective energy `<Φ|exp(-T) H exp(T)|Φ>`.
    pub e_cc: f64,
    /// Infinity norm of the amplitude residual at the returned amplitudes.
    pub residual_norm: f64,
    pub tolerance: f64,
    pub iterations: usize,
    /// Residual infinity norm after each iteration.
    pub residual_history: Vec<f64>,
}

impl CcAmplitudes {
    pub fn e_corr(&self) -> f64 {
        self.e_cc - self.e_ref
    }

    pub fn n_modes(&self) -> usize {
        self.reference.fock().n_modes()
    }

    pub fn is_converged(&self) -> bool {
        self.residual_norm <= self.tolerance
    }

    /// The cluster operator `T`.
    pub fn cluster(&self) -> ClusterOperator {
        ClusterOperator::new(self.reference.fock(), &self.excitations, &self.t)
    }

    /// `Λ†`, the excitation operator carrying the de-excitation amplitudes.
    pub fn lambda_adjoint(&self) -> Result<ClusterOperator> {
        let lambda = self
            .lambda
            .as_ref()
            .ok_or_else(|| Error::State("de-excitation amplitudes are not solved".into()))?;
        Ok(ClusterOperator::new(
            self.reference.fock(),
            &self.excitations,
            lambda,
        ))
    }

    /// Dense antisymmetric arrays of the amplitudes.
    pub fn dense(&self) -> DenseAmplitudes {
        let zero = vec![0.0; self.t.len()];
        DenseAmplitudes::new(
            self.n_modes(),
            &self.excitations,
            &self.t,
            self.lambda.as_deref().unwrap_or(&zero),
        )
    }

    /// Keeps only singles that touch an impurity spin-orbital and drops the doubles.
    pub fn impurity_singles(&self, params: &AimParams) -> CcAmplitudes {
        let keep: Vec<bool> = self
            .excitations
            .iter()
            .map(|e| match *e {
                Excitation::Single { i, a } => params.is_impurity(i) || params.is_impurity(a),
                Excitation::Double { .. } => false,
            })
            .collect();
        let pick = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&x, _)| x)
                .collect()
        };
        CcAmplitudes {
            level: CcLevel::Singles,
            excitations: self
                .excitations
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(e, _)| *e)
                .collect(),
            t: pick(&self.t),
            lambda: self.lambda.as_deref().map(pick),
            ..self.clone()
        }
    }

    /// Amplitude of an excitation, zero if it is not in the space.
    pub fn amplitude(&self, excitation: Excitation) -> f64 {
        self.excitations
            .iter()
            .position(|e| *e == excitation)
            .map_or(0.0, |k| self.t[k])
    }
}

/// Dense antisymmetric singles and doubles for both `T` and `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseAmplitudes {
    n: usize,
    t1: Vec<f64>,
    t2: Vec<f64>,
    l1: Vec<f64>,
    l2: Vec<f64>,
}

impl DenseAmplitudes {
    pub fn new(n: usize, excitations: &[Excitation], t: &[f64], lambda: &[f64]) -> Self {
        let mut out = Self {
            n,
            t1: vec![0.0; n * n],
            t2: vec![0.0; n * n * n * n],
            l1: vec![0.0; n * n],
            l2: vec![0.0; n * n * n * n],
        };
        for ((e, &x), &y) in excitations.iter().zip(t).zip(lambda) {
            match *e {
                Excitation::Single { i, a } => {
                    out.t1[i * n + a] = x;
                    out.l1[i * n + a] = y;
                }
                Excitation::Double { i, j, a, b } => {
                    for (p, q, r, s, sign) in [
                        (i, j, a, b, 1.0),
                        (j, i, a, b, -1.0),
                        (i, j, b, a, -1.0),
                        (j, i, b, a, 1.0),
                    ] {
                        let k = out.index4(p, q, r, s);
                        out.t2[k] = sign * x;
                        out.l2[k] = sign * y;
                    }
                }
            }
        }
        out
    }

    fn index4(&self, i: usize, j: usize, a: usize, b: usize) -> usize {
        ((i * self.n + j) * self.n + a) * self.n + b
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn t1(&self, i: usize, a: usize) -> f64 {
        self.t1[i * self.n + a]
    }

    pub fn t2(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.t2[self.index4(i, j, a, b)]
    }

    pub fn l1(&self, i: usize, a: usize) -> f64 {
        self.l1[i * self.n + a]
    }

    pub fn l2(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.l2[self.index4(i, j, a, b)]
    }

    /// Effective doubles `t2 + t_i^a t_j^b - t_i^b t_j^a`.
    pub fn t_tilde(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        self.t2(i, j, a, b) + self.t1(i, a) * self.t1(j, b) - self.t1(i, b) * self.t1(j, a)
    }
}

/// Antisymmetrized effective doubles of converged amplitudes.
pub fn t_tilde(amplitudes: &CcAmplitudes) -> DenseAmplitudes {
    amplitudes.dense()
}

/// Iteration controls for the amplitude solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcSettings {
    pub level: CcLevel,
    pub tol: f64,
    pub max_iter: usize,
    pub diis_size: usize,
    pub damping: f64,
    /// Start from the configuration-interaction eigenvector instead of `T = 0`.
    pub ci_start: bool,
}

impl Default for CcSettings {
    fn default() -> Self {
        Self {
            level: CcLevel::SinglesDoubles,
            tol: 1e-10,
            max_iter: 200,
            diis_size: 6,
            damping: 0.5,
            ci_start: true,
        }
    }
}

/// Projection machinery shared by the amplitude and de-excitation solvers.
struct Projector {
    fock: FockSpace,
    hamiltonian: SparseMatrix,
    reference: ReferenceState,
    excitations: Vec<Excitation>,
    /// `E_μ |Φ> = sign * |index>`.
    targets: Vec<(f64, usize)>,
    exec: Execution,
}

struct Evaluation {
    residual: Vec<f64>,
    energy: f64,
    /// `exp(-T) H exp(T) |Φ>`.
    hbar_phi: Vec<Complex64>,
}

impl Projector {
    fn new(
        params: &AimParams,
        reference: &ReferenceState,
        level: CcLevel,
        exec: Execution,
    ) -> Self {
        let fock = reference.fock();
        let excitations = excitation_space(reference, level);
        let targets = excitations
            .iter()
            .map(|e| {
                fock.apply_ops(reference.index(), &e.operators())
                    .expect("excitations of the reference are nonzero")
            })
            .collect();
        Self {
            fock,
            hamiltonian: Hamiltonian::new(params).sparse(),
            reference: reference.clone(),
            excitations,
            targets,
            exec,
        }
    }

    fn basis(&self, k: usize) -> Vec<Complex64> {
        let (sign, index) = self.targets[k];
        let mut v = linalg::zeros(self.fock.dim());
        v[index] = Complex64::new(sign, 0.0);
        v
    }

    fn component(&self, v: &[Complex64], k: usize) -> f64 {
        let (sign, index) = self.targets[k];
        sign * v[index].re
    }

    fn hbar(&self, cluster: &ClusterOperator, v: &[Complex64]) -> Vec<Complex64> {
        cluster.exp(&self.hamiltonian.apply(&cluster.exp(v, 1.0)), -1.0)
    }

    fn evaluate(&self, t: &[f64]) -> Evaluation {
        let cluster = ClusterOperator::new(self.fock, &self.excitations, t);
        let hbar_phi = self.hbar(&cluster, &self.reference.vector());
        Evaluation {
            residual: (0..t.len()).map(|k| self.component(&hbar_phi, k)).collect(),
            energy: hbar_phi[self.reference.index()].re,
            hbar_phi,
        }
    }

    /// Columns `exp(-T) H exp(T) E_ν |Φ>`.
    fn hbar_columns(&self, t: &[f64]) -> Vec<Vec<Complex64>> {
        let cluster = ClusterOperator::new(self.fock, &self.excitations, t);
        self.exec
            .map(t.len(), |nu| self.hbar(&cluster, &self.basis(nu)))
    }

    /// `J[μ][ν] = <Φ_μ|[H̄, E_ν]|Φ>`.
    fn jacobian(&self, t: &[f64], hbar_phi: &[Complex64]) -> DMatrix<f64> {
        let n = t.len();
        let columns = self.hbar_columns(t);
        let mut j = DMatrix::zeros(n, n);
        for (nu, col) in columns.iter().enumerate() {
            let e_x = self
                .fock
                .apply_ops_to_vector(&self.excitations[nu].operators(), hbar_phi);
            for mu in 0..n {
                j[(mu, nu)] = self.component(col, mu) - self.component(&e_x, mu);
            }
        }
        j
    }

    /// Amplitudes from the lowest configuration-interaction eigenvector in
    /// the span of the reference and the excitation space that overlaps the
    /// reference.
    fn ci_start(&self) -> Option<Vec<f64>> {
        let n = self.excitations.len();
        let phi = self.reference.vector();
        let mut basis = vec![phi];
        basis.extend((0..n).map(|k| self.basis(k)));
        let images: Vec<Vec<Complex64>> = basis.iter().map(|b| self.hamiltonian.apply(b)).collect();
        let h = DMatrix::from_fn(n + 1, n + 1, |r, c| linalg::inner(&basis[r], &images[c]).re);
        let (energies, vectors) = sorted_symmetric_eigen(&h);
        let mut unit = DVector::zeros(n + 1);
        unit[0] = 1.0;
        let mut start = 0;
        let coefficients = loop {
            if start > n {
                return None;
            }
            let mut end = start + 1;
            while end <= n
                && (energies[end] - energies[start]).abs() <= 1e-9 * (1.0 + energies[start].abs())
            {
                end += 1;
            }
            let mut proj: DVector<f64> = DVector::zeros(n + 1);
            for k in start..end {
                let col = vectors.column(k);
                proj += col * col[0];
            }
            if proj[0].abs() > 1e-6 {
                break proj;
            }
            start = end;
        };
        let c0 = coefficients[0];
        let mut t: Vec<f64> = (0..n)
            .map(|k| match self.excitations[k] {
                Excitation::Single { .. } => coefficients[k + 1] / c0,
                Excitation::Double { .. } => 0.0,
            })
            .collect();
        let singles = ClusterOperator::new(self.fock, &self.excitations, &t);
        let t1_squared = singles.apply(&singles.apply(&self.reference.vector()));
        for k in 0..n {
            if let Excitation::Double { .. } = self.excitations[k] {
                t[k] = coefficients[k + 1] / c0 - 0.5 * self.component(&t1_squared, k);
            }
        }
        Some(t)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Direct inversion in the iterative subspace over Newton candidates.
struct Diis {
    capacity: usize,
    points: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
}

impl Diis {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            points: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn push(&mut self, point: Vec<f64>, error: Vec<f64>) {
        if self.points.len() == self.capacity {
            self.points.remove(0);
            self.errors.remove(0);
        }
        self.points.push(point);
        self.errors.push(error);
    }

    fn extrapolate(&self) -> Option<Vec<f64>> {
        let m = self.points.len();
        if m < 2 {
            return None;
        }
        let mut b = DMatrix::zeros(m + 1, m + 1);
        for r in 0..m {
            for c in 0..m {
                b[(r, c)] = self.errors[r]
                    .iter()
                    .zip(&self.errors[c])
                    .map(|(x, y)| x * y)
                    .sum();
            }
            b[(r, m)] = -1.0;
            b[(m, r)] = -1.0;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs[m] = -1.0;
        let ls = least_squares(&b, &rhs, 1e-14);
        if ls.residual > 1e-8 {
            return None;
        }
        let n = self.points[0].len();
        let mut out = vec![0.0; n];
        for (k, p) in self.points.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(p) {
                *o += ls.solution[k] * x;
            }
        }
        out.iter().all(|x| x.is_finite()).then_some(out)
    }
}

/// Solves the projected amplitude equations with damped Newton steps and
/// subspace extrapolation.
pub fn solve_t_amplitudes(
    params: &AimParams,
    reference: &ReferenceState,
    settings: &CcSettings,
) -> Result<CcAmplitudes> {
    solve_t_amplitudes_with(params, reference, settings, Execution::default())
}

pub fn solve_t_amplitudes_with(
    params: &AimParams,
    reference: &ReferenceState,
    settings: &CcSettings,
    exec: Execution,
) -> Result<CcAmplitudes> {
    if settings.tol.is_nan() || settings.tol <= 0.0 {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if reference.fock().n_modes() != params.n_modes() {
        return Err(Error::SizeMismatch {
            expected: params.n_modes(),
            found: reference.fock().n_modes(),
        });
    }
    let projector = Projector::new(params, reference, settings.level, exec);
    let n = projector.excitations.len();
    let e_ref = projector
        .hamiltonian
        .get(reference.index(), reference.index());
    let mut t = if settings.ci_start {
        projector.ci_start().unwrap_or_else(|| vec![0.0; n])
    } else {
        vec![0.0; n]
    };
    let mut eval = projector.evaluate(&t);
    let mut rnorm = inf_norm(&eval.residual);
    let mut history = vec![rnorm];
    let mut best = (rnorm, t.clone(), eval.energy);
    let mut damping = settings.damping.clamp(1e-3, 1.0);
    let mut diis = Diis::new(settings.diis_size.max(1));
    let mut iterations = 0;
    while rnorm > settings.tol && iterations < settings.max_iter {
        iterations += 1;
        let jac = projector.jacobian(&t, &eval.hbar_phi);
        let rhs = DVector::from_iterator(n, eval.residual.iter().map(|r| -r));
        let step = least_squares(&jac, &rhs, 1e-12).solution;
        let newton: Vec<f64> = t
            .iter()
            .zip(step.iter())
            .map(|(x, d)| x + damping * d)
            .collect();
        diis.push(newton.clone(), step.iter().cloned().collect());
        let mut next = newton;
        let mut next_eval = projector.evaluate(&next);
        if let Some(extrapolated) = diis.extrapolate() {
            let trial = projector.evaluate(&extrapolated);
            if inf_norm(&trial.residual) < inf_norm(&next_eval.residual) {
                next = extrapolated;
                next_eval = trial;
            }
        }
        let next_norm = inf_norm(&next_eval.residual);
        damping = if next_norm < rnorm {
            (damping * 2.0).min(1.0)
        } else {
            (damping * 0.5).max(1.0 / 16.0)
        };
        t = next;
        eval = next_eval;
        rnorm = next_norm;
        history.push(rnorm);
        if rnorm < best.0 {
            best = (rnorm, t.clone(), eval.energy);
        }
    }
    let (residual_norm, t, e_cc) = best;
    if residual_norm > settings.tol {
        return Err(Error::Convergence {
            iterations,
            residual: residual_norm,
        });
    }
    Ok(CcAmplitudes {
        level: settings.level,
        reference: reference.clone(),
        excitations: projector.excitations,
        t,
        lambda: None,
        e_ref,
        e_cc,
        residual_norm,
        tolerance: settings.tol,
        iterations,
        residual_history: history,
    })
}

/// Solves `<Φ|(1+Λ)(H̄ - E)|Φ_μ> = 0` for the de-excitation amplitudes.
///
/// The linear system is solved in the minimum-norm least-squares sense, so a
/// singular but consistent system (for example a decoupled impurity) gives
/// the smallest solution. An inconsistent system is an error.
pub fn solve_lambda_amplitudes(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
) -> Result<CcAmplitudes> {
    solve_lambda_amplitudes_with(params, amplitudes, Execution::default())
}

pub fn solve_lambda_amplitudes_with(
    params: &AimParams,
    amplitudes: &CcAmplitudes,
    exec: Execution,
) -> Result<CcAmplitudes> {
    if !amplitudes.is_converged() {
        return Err(Error::State("cluster amplitudes are not converged".into()));
    }
    let projector = Projector::new(params, &amplitudes.reference, amplitudes.level, exec);
    let n = amplitudes.t.len();
    let columns = projector.hbar_columns(&amplitudes.t);
    // Row μ of the transposed system: sum_ν λ_ν <Φ_ν|H̄ - E|Φ_μ> = -<Φ|H̄|Φ_μ>.
    let mut m = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for mu in 0..n {
        for nu in 0..n {
            m[(mu, nu)] = projector.component(&columns[mu], nu);
        }
        m[(mu, mu)] -= amplitudes.e_cc;
        rhs[mu] = -columns[mu][amplitudes.reference.index()].re;
    }
    let ls = least_squares(&m, &rhs, 1e-12);
    let scale = 1.0f64.max(rhs.norm());
    if ls.residual > amplitudes.tolerance.max(1e-10) * scale * 10.0 {
        return Err(Error::Numerical {
            message: format!(
                "de-excitation equations are inconsistent (residual {:e}, rank {} of {})",
                ls.residual, ls.rank, n
            ),
            condition: ls.condition,
        });
    }
    Ok(CcAmplitudes {
        lambda: Some(ls.solution.iter().cloned().collect()),
        ..amplitudes.clone()
    })
}

/// Largest `|<Φ|(1+Λ)(H̄ - E)|Φ_μ>|`.
pub fn lambda_residual(params: &AimParams, amplitudes: &CcAmplitudes) -> Result<f64> {
    let phi = amplitudes.reference.vector();
    let mut bra = amplitudes.lambda_adjoint()?.apply(&phi);
    linalg::axpy(Complex64::new(1.0, 0.0), &phi, &mut bra);
    let projector = Projector::new(
        params,
        &amplitudes.reference,
        amplitudes.level,
        Execution::Sequential,
    );
    let cluster = amplitudes.cluster();
    let mut worst: f64 = 0.0;
    for mu in 0..amplitudes.t.len() {
        let basis = projector.basis(mu);
        let col = projector.hbar(&cluster, &basis);
        let value = linalg::inner(&bra, &col) - linalg::inner(&bra, &basis) * amplitudes.e_cc;
        worst = worst.max(value.norm());
    }
    Ok(worst)
}

/// `E_ref + sum h_ia t_i^a`, the energy from the single amplitudes alone.
///
/// The interaction is diagonal in the occupation basis, so only one-body
/// hopping elements couple the reference to its singles.
pub fn cc_energy(params: &AimParams, amplitudes: &CcAmplitudes) -> Result<f64> {
    if !amplitudes.is_converged() {
        return Err(Error::State("cluster amplitudes are not converged".into()));
    }
    let h = Hamiltonian::new(params).one_body();
    let correction: f64 = amplitudes
        .excitations
        .iter()
        .zip(&amplitudes.t)
        .filter_map(|(e, &x)| match *e {
            Excitation::Single { i, a } => Some(h[(i, a)] * x),
            Excitation::Double { .. } => None,
        })
        .sum();
    Ok(amplitudes.e_ref + correction)
}

/// Which exponential form to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcState {
    /// `exp(T)|Φ>`.
    Ket,
    /// `exp(-T)|Φ>`.
    InverseKet,
    /// The ket `exp(-T†)(1+Λ†)|Φ>` dual to the bra `<Φ|(1+Λ)exp(-T)`.
    Bra,
    /// `(1+T)|Φ>`, the linearized ket.
    LinearKet,
    /// The ket dual to `<Φ|(1+Λ)(1-T)`.
    LinearBra,
}

/// Fock-space vector of an exponential (or linearized) cluster form.
pub fn cluster_exponential_state(
    amplitudes: &CcAmplitudes,
    form: CcState,
) -> Result<Vec<Complex64>> {
    let phi = amplitudes.reference.vector();
    let cluster = amplitudes.cluster();
    Ok(match form {
        CcState::Ket => cluster.exp(&phi, 1.0),
        CcState::InverseKet => cluster.exp(&phi, -1.0),
        CcState::LinearKet => {
            let mut v = cluster.apply(&phi);
            linalg::axpy(Complex64::new(1.0, 0.0), &phi, &mut v);
            v
        }
        CcState::Bra | CcState::LinearBra => {
            let lambda = amplitudes.lambda_adjoint()?;
            let mut v = lambda.apply(&phi);
            linalg::axpy(Complex64::new(1.0, 0.0), &phi, &mut v);
            if form == CcState::Bra {
                cluster.exp_adjoint(&v, -1.0)
            } else {
                let tv = cluster.apply_adjoint(&v);
                linalg::axpy(Complex64::new(-1.0, 0.0), &tv, &mut v);
                v
            }
        }
    })
}

/// Convenience pipeline: amplitudes followed by de-excitation amplitudes.
pub fn solve_ccsd(
    params: &AimParams,
    reference: &ReferenceState,
    settings: &CcSettings,
) -> Result<CcAmplitudes> {
    let t = solve_t_amplitudes(params, reference, settings)?;
    solve_lambda_amplitudes(params, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reference_state, Filling};

    #[test]
    fn two_site_excitation_space() {
        let params = AimParams::new(8.0, vec![4.0, 0.0], vec![1.0]).unwrap();
        let r = reference_state(&params, &Filling::Default).unwrap();
        let space = excitation_space(&r, CcLevel::SinglesDoubles);
        assert_eq!(
            space,
            vec![
                Excitation::Single { i: 1, a: 0 },
                Excitation::Single { i: 2, a: 3 },
                Excitation::Double {
                    i: 1,
                    j: 2,
                    a: 0,
                    b: 3
                },
            ]
        );
    }

    #[test]
    fn single_amplitude_series_has_two_terms() {
        let fock = FockSpace::new(2);
        let r = ReferenceState::from_occupied(2, &[0]).unwrap();
        let op = ClusterOperator::new(fock, &[Excitation::Single { i: 0, a: 1 }], &[0.3]);
        let v = op.exp(&r.vector(), 1.0);
        assert!((linalg::norm(&v).powi(2) - 1.09).abs() < 1e-14);
        let back = op.exp(&v, -1.0);
        assert!(linalg::max_abs_diff(&back, &r.vector()) < 1e-14);
    }
}

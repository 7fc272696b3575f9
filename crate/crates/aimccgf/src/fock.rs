//! Occupation-number basis under the Jordan–Wigner encoding.
//!
//! Mode `q` is stored in qubit `q`. Qubit 0 is the most significant bit of
//! a basis index, so the displayed bitstring of an index reads qubit 0 first.
//! The sign of `c_q` or `c_q†` on a basis state is the parity of the occupied
//! modes with index below `q`.

use num_complex::Complex64;

/// A single creation or annihilation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FermionOp {
    pub mode: usize,
    pub dagger: bool,
}

impl FermionOp {
    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        Self {
            mode,
            dagger: false,
        }
    }

    pub fn adjoint(self) -> Self {
        Self {
            mode: self.mode,
            dagger: !self.dagger,
        }
    }
}

/// The Fock space of `n_modes` spin-orbitals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_modes: usize,
}

impl FockSpace {
    pub fn new(n_modes: usize) -> Self {
        assert!(n_modes < usize::BITS as usize, "too many modes");
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    /// Bit of the basis index that stores mode `q`.
    pub fn mask(&self, q: usize) -> usize {
        1 << (self.n_modes - 1 - q)
    }

    pub fn is_occupied(&self, state: usize, q: usize) -> bool {
        state & self.mask(q) != 0
    }

    /// `+1` or `-1` from the occupied modes below `q`.
    pub fn jw_sign(&self, state: usize, q: usize) -> f64 {
        if (state >> (self.n_modes - q)).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Applies one operator to a basis state.
    pub fn apply_op(&self, state: usize, op: FermionOp) -> Option<(f64, usize)> {
        let occupied = self.is_occupied(state, op.mode);
        if occupied == op.dagger {
            return None;
        }
        Some((self.jw_sign(state, op.mode), state ^ self.mask(op.mode)))
    }

    /// Applies an operator product to a basis state, rightmost operator first.
    pub fn apply_ops(&self, state: usize, ops: &[FermionOp]) -> Option<(f64, usize)> {
        ops.iter().rev().try_fold((1.0, state), |(sign, s), &op| {
            self.apply_op(s, op).map(|(f, next)| (sign * f, next))
        })
    }

    /// Applies an operator product to a state vector.
    pub fn apply_ops_to_vector(&self, ops: &[FermionOp], v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (state, amp) in v.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            if let Some((sign, target)) = self.apply_ops(state, ops) {
                out[target] += amp * sign;
            }
        }
        out
    }

    /// Number of occupied modes in the down block `0..half` and the up block `half..`.
    pub fn spin_counts(&self, state: usize) -> (usize, usize) {
        let half = self.n_modes / 2;
        let up_mask = (1usize << half) - 1;
        (
            (state >> half).count_ones() as usize,
            (state & up_mask).count_ones() as usize,
        )
    }

    /// Displays a basis index as a bitstring with qubit 0 first.
    pub fn bitstring(&self, state: usize) -> String {
        (0..self.n_modes)
            .map(|q| if self.is_occupied(state, q) { '1' } else { '0' })
            .collect()
    }

    /// Parses a bitstring with qubit 0 first.
    pub fn parse_bitstring(&self, text: &str) -> Option<usize> {
        if text.len() != self.n_modes {
            return None;
        }
        text.chars()
            .enumerate()
            .try_fold(0usize, |acc, (q, c)| match c {
                '0' => Some(acc),
                '1' => Some(acc | self.mask(q)),
                _ => None,
            })
    }

    /// Basis states with the given spin-resolved occupations, in increasing index order.
    pub fn sector(&self, n_down: usize, n_up: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&s| self.spin_counts(s) == (n_down, n_up))
            .collect()
    }

    /// All `(n_down, n_up)` pairs for this space.
    pub fn sector_labels(&self) -> Vec<(usize, usize)> {
        let half = self.n_modes / 2;
        (0..=half)
            .flat_map(|d| (0..=half).map(move |u| (d, u)))
            .collect()
    }
}

/// Real sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triples; duplicates are summed.
    pub fn from_triples(dim: usize, mut triples: Vec<(usize, usize, f64)>) -> Self {
        triples.sort_by_key(|t| (t.0, t.1));
        let mut row_start = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triples.len());
        let mut values: Vec<f64> = Vec::with_capacity(triples.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triples {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry present") += v;
            } else {
                cols.push(c);
                values.push(v);
                row_start[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..dim {
            row_start[r + 1] += row_start[r];
        }
        Self {
            dim,
            row_start,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        (self.row_start[row]..self.row_start[row + 1])
            .filter(|&k| self.cols[k] == col)
            .map(|k| self.values[k])
            .sum()
    }

    /// Row entries as `(col, value)` pairs.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_start[row]..self.row_start[row + 1]).map(move |k| (self.cols[k], self.values[k]))
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| {
                self.row(r)
                    .fold(Complex64::new(0.0, 0.0), |acc, (c, x)| acc + v[c] * x)
            })
            .collect()
    }

    /// Dense copy of the rows and columns listed in `states`.
    pub fn block(&self, states: &[usize]) -> nalgebra::DMatrix<f64> {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &s) in states.iter().enumerate() {
            position[s] = k;
        }
        let mut m = nalgebra::DMatrix::zeros(states.len(), states.len());
        for (k, &s) in states.iter().enumerate() {
            for (c, x) in self.row(s) {
                let j = position[c];
                assert!(j != usize::MAX, "block is not invariant under the operator");
                m[(k, j)] += x;
            }
        }
        m
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, x) in self.row(r) {
                m[(r, c)] += x;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_round_trip() {
        let fock = FockSpace::new(4);
        let s = fock.parse_bitstring("0110").unwrap();
        assert_eq!(s, 0b0110);
        assert_eq!(fock.bitstring(s), "0110");
        assert!(fock.is_occupied(s, 1) && fock.is_occupied(s, 2));
    }

    #[test]
    fn jordan_wigner_sign_counts_lower_modes() {
        let fock = FockSpace::new(4);
        let s = fock.parse_bitstring("0110").unwrap();
        assert_eq!(fock.jw_sign(s, 0), 1.0);
        assert_eq!(fock.jw_sign(s, 2), -1.0);
        assert_eq!(fock.jw_sign(s, 3), 1.0);
        let (sign, t) = fock.apply_op(s, FermionOp::annihilate(2)).unwrap();
        assert_eq!((sign, fock.bitstring(t).as_str()), (-1.0, "0100"));
        assert!(fock.apply_op(s, FermionOp::create(2)).is_none());
    }

    #[test]
    fn sparse_duplicates_are_summed() {
        let m = SparseMatrix::from_triples(2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
    }
}

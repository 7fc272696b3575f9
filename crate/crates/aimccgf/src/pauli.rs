//! Phased Pauli strings and their action on state vectors.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::fock::FockSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// `self * other = i^k * result`.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A global phase from `{+1, +i, -1, -i}`, stored as a power of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn value(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

impl Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A phase times a tensor product of single-qubit Pauli operators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<Pauli>) -> Self {
        Self { phase, letters }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Phase::ONE, vec![Pauli::I; n])
    }

    /// Parses letters such as `"ZZXI"`, optionally prefixed by a phase `+`, `-`, `i`, `+i` or `-i`.
    pub fn parse(text: &str) -> Result<Self> {
        let (phase, body) = if let Some(rest) = text.strip_prefix("-i") {
            (Phase::MINUS_I, rest)
        } else if let Some(rest) = text.strip_prefix('-') {
            (Phase::MINUS_ONE, rest)
        } else if let Some(rest) = text.strip_prefix("+i").or_else(|| text.strip_prefix('i')) {
            (Phase::I, rest)
        } else {
            (Phase::ONE, text.strip_prefix('+').unwrap_or(text))
        };
        let letters = body
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(domain(format!("unknown Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(phase, letters))
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.phase.conj(), self.letters.clone())
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Letters only, e.g. `"ZZXI"`.
    pub fn label(&self) -> String {
        self.letters.iter().map(|p| p.symbol()).collect()
    }

    /// Product `self * rhs`.
    pub fn try_mul(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.n_qubits() != rhs.n_qubits() {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits(),
                found: rhs.n_qubits(),
            });
        }
        let mut power = self.phase.0 + rhs.phase.0;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(&a, &b)| {
                let (k, p) = a.product(b);
                power += k;
                p
            })
            .collect();
        Ok(Self::new(Phase::from_power(power), letters))
    }

    fn masks(&self, fock: FockSpace) -> (usize, usize, u32) {
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut ys = 0u32;
        for (q, p) in self.letters.iter().enumerate() {
            let m = fock.mask(q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= m,
                Pauli::Y => {
                    flip |= m;
                    sign |= m;
                    ys += 1;
                }
                Pauli::Z => sign |= m,
            }
        }
        (flip, sign, ys)
    }

    /// `P|b> = factor * |target>` for basis state `b`.
    pub fn apply_basis(&self, state: usize) -> (Complex64, usize) {
        let fock = FockSpace::new(self.n_qubits());
        let (flip, sign, ys) = self.masks(fock);
        let base = (self.phase * Phase::from_power((ys % 4) as u8)).value();
        let parity = (state & sign).count_ones() % 2;
        let factor = if parity == 0 { base } else { -base };
        (factor, state ^ flip)
    }

    /// `P v` for a full state vector.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits();
        if v.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let fock = FockSpace::new(self.n_qubits());
        let (flip, sign, ys) = self.masks(fock);
        let base = (self.phase * Phase::from_power((ys % 4) as u8)).value();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (b, amp) in v.iter().enumerate() {
            let f = if (b & sign).count_ones() % 2 == 0 {
                base
            } else {
                -base
            };
            out[b ^ flip] = amp * f;
        }
        Ok(out)
    }

    /// Dense matrix in the computational basis.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (f, t) = self.apply_basis(b);
            m[(t, b)] = f;
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.label())
    }
}

impl Mul for &PauliString {
    type Output = PauliString;
    fn mul(self, rhs: &PauliString) -> PauliString {
        self.try_mul(rhs).expect("Pauli strings of equal length")
    }
}

/// `Z⊗…⊗Z ⊗ X ⊗ I⊗…⊗I` with the `X` on `orbital`, the qubit form of `c + c†`.
pub fn majorana_x(orbital: usize, n: usize) -> Result<PauliString> {
    if orbital >= n {
        return Err(domain(format!(
            "orbital {orbital} out of range for {n} qubits"
        )));
    }
    let letters = (0..n)
        .map(|q| match q.cmp(&orbital) {
            std::cmp::Ordering::Less => Pauli::Z,
            std::cmp::Ordering::Equal => Pauli::X,
            std::cmp::Ordering::Greater => Pauli::I,
        })
        .collect();
    Ok(PauliString::new(Phase::ONE, letters))
}

/// `Z⊗…⊗Z ⊗ Y ⊗ I⊗…⊗I`, the qubit form of `i(c† - c)`.
pub fn majorana_y(orbital: usize, n: usize) -> Result<PauliString> {
    let mut s = majorana_x(orbital, n)?;
    s.letters[orbital] = Pauli::Y;
    Ok(s)
}

/// Ordered product `X̃_{o[0]} X̃_{o[1]} …` of Majorana strings.
pub fn majorana_product(orbitals: &[usize], n: usize) -> Result<PauliString> {
    orbitals
        .iter()
        .try_fold(PauliString::identity(n), |acc, &o| {
            Ok(&acc * &majorana_x(o, n)?)
        })
}

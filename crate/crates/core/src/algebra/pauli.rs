//! Signed Pauli strings and bit strings.
//!
//! Qubit 0 is the leftmost tensor factor and the most significant bit of a
//! basis-state index, so `"XZ"` is `X (x) Z` and `|10>` has index 2.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, I, ONE};
use crate::error::{PqcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn matrix(self) -> ComplexMatrix {
        let z = C64::new(0.0, 0.0);
        match self {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => ComplexMatrix::from_rows(&[vec![z, ONE], vec![ONE, z]]),
            Pauli::Y => ComplexMatrix::from_rows(&[vec![z, -I], vec![I, z]]),
            Pauli::Z => ComplexMatrix::from_rows(&[vec![ONE, z], vec![z, -ONE]]),
        }
    }

    /// Single-qubit product `self * other` as `(i^k, letter)`.
    fn mul(self, other: Pauli) -> (u8, Pauli) {
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
}

/// Global phase `i^k`, `k in 0..4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn value(self) -> C64 {
        match self.0 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        }
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn negate(self) -> Self {
        Phase((self.0 + 2) % 4)
    }

    fn symbol(self) -> &'static str {
        match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        })
    }
}

/// A signed tensor product of single-qubit Paulis.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<Pauli>) -> Self {
        Self { phase, letters }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Phase::PLUS_ONE, vec![Pauli::I; n])
    }

    /// `letter` on qubit `q` of an `n`-qubit register, identity elsewhere.
    pub fn single(n: usize, q: usize, letter: Pauli) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[q] = letter;
        Self::new(Phase::PLUS_ONE, letters)
    }

    /// `Q_alpha`: `X` wherever `alpha` has a one, `I` elsewhere.
    pub fn x_string(alpha: &BitString) -> Self {
        let letters = alpha
            .bits()
            .iter()
            .map(|&b| if b { Pauli::X } else { Pauli::I })
            .collect();
        Self::new(Phase::PLUS_ONE, letters)
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn num_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn negated(&self) -> Self {
        Self::new(self.phase.negate(), self.letters.clone())
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// Same letters with phase `+1`.
    pub fn unsigned(&self) -> Self {
        Self::new(Phase::PLUS_ONE, self.letters.clone())
    }

    /// Tensor product `self (x) other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Self::new(Phase::from_power(self.phase.0 + other.phase.0), letters)
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.num_qubits() != other.num_qubits() {
            return Err(PqcError::Dimension(format!(
                "cannot multiply {}-qubit and {}-qubit Pauli strings",
                self.num_qubits(),
                other.num_qubits()
            )));
        }
        let mut k = self.phase.0 + other.phase.0;
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| {
                let (dk, p) = a.mul(b);
                k += dk;
                p
            })
            .collect();
        Ok(Self::new(Phase::from_power(k), letters))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    fn bit(&self, q: usize) -> u64 {
        1u64 << (self.letters.len() - 1 - q)
    }

    /// Bits flipped by the string (positions holding `X` or `Y`).
    pub fn x_mask(&self) -> u64 {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    /// Bits that pick up a sign (positions holding `Z` or `Y`).
    pub fn z_mask(&self) -> u64 {
        self.letters
            .iter()
            .enumerate()
            .filter(|(_, &p)| matches!(p, Pauli::Z | Pauli::Y))
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    /// Sparse action on a basis state: `P|col> = coeff |row>`.
    pub fn action(&self) -> PauliAction {
        let n_y = self.letters.iter().filter(|&&p| p == Pauli::Y).count() as u8;
        PauliAction {
            x_mask: self.x_mask() as usize,
            z_mask: self.z_mask() as usize,
            base: Phase::from_power(self.phase.0 + n_y).value(),
        }
    }

    /// Dense `phase * (P_1 (x) ... (x) P_n)`.
    pub fn matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.letters.len();
        let act = self.action();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for c in 0..dim {
            let (r, v) = act.apply(c);
            m[(r, c)] = v;
        }
        m
    }
}

/// A Pauli string viewed as a signed permutation of basis states.
#[derive(Debug, Clone, Copy)]
pub struct PauliAction {
    x_mask: usize,
    z_mask: usize,
    base: C64,
}

impl PauliAction {
    #[inline]
    pub fn apply(&self, col: usize) -> (usize, C64) {
        let v = if (col & self.z_mask).count_ones() % 2 == 1 {
            -self.base
        } else {
            self.base
        };
        (col ^ self.x_mask, v)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.phase.symbol())?;
        for p in &self.letters {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PqcError;

    /// Accepts an optional sign prefix (`+`, `-`, `+i`, `-i`, `i`) followed by
    /// letters from `IXYZ`. A bare string means phase `+1`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: String| PqcError::Parse { line: 0, msg };
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::PLUS_I, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PLUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::PLUS_I, r)
        } else {
            (Phase::PLUS_ONE, s)
        };
        if rest.is_empty() {
            return Err(bad(format!("empty Pauli string '{s}'")));
        }
        let letters = rest
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| bad(format!("bad Pauli letter '{c}' in '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(phase, letters))
    }
}

/// A fixed-length string of bits, `bits[0]` being the leftmost.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Big-endian: bit 0 is the most significant bit of `index`.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|q| (index >> (n - 1 - q)) & 1 == 1).collect())
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(PqcError::Dimension(format!(
                "bit string '{self}' has length {}, expected {n}",
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = PqcError;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(PqcError::Parse {
                    line: 0,
                    msg: format!("bad bit '{c}' in '{s}'"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

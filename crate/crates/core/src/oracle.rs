//! Brute-force ground truth: statevector simulation, dense unitaries,
//! Hermitian exponentials and ground-space projectors.
//!
//! Nothing here touches the channel machinery; it works on plain dense
//! vectors and matrices so agreement with the channel pipeline is evidence.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use crate::algebra::{hadamard, hadamard_n, hermitian_eigen, ComplexMatrix, PauliString, C64, I, ONE, ZERO};
use crate::circuit::{Circuit, Gate};
use crate::error::{PqcError, Result};
use crate::lindblad::PauliHamiltonian;

pub const MAX_STATEVECTOR_QUBITS: usize = 12;
pub const MAX_EXP_DIM: usize = 1 << 6;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(PqcError::Dimension(format!(
                "{} amplitudes for {n} qubits",
                amplitudes.len()
            )));
        }
        Ok(Self { n, amplitudes })
    }

    pub fn zero(n: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[0] = ONE;
        Self { n, amplitudes }
    }

    pub fn plus(n: usize) -> Self {
        let a = C64::new((1usize << n) as f64, 0.0).sqrt().inv();
        Self {
            n,
            amplitudes: vec![a; 1 << n],
        }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n];
        amplitudes[index] = ONE;
        Self { n, amplitudes }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn apply_gate(&mut self, g: &Gate) {
        match *g {
            Gate::H(q) => {
                let m = self.mask(q);
                for i in 0..self.amplitudes.len() {
                    if i & m == 0 {
                        let (a, b) = (self.amplitudes[i], self.amplitudes[i | m]);
                        self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                        self.amplitudes[i | m] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            Gate::S(q) => self.phase(q, I),
            Gate::T(q) => self.phase(q, C64::from_polar(1.0, FRAC_PI_4)),
            Gate::Cnot(c, t) => {
                let (mc, mt) = (self.mask(c), self.mask(t));
                for i in 0..self.amplitudes.len() {
                    if i & mc != 0 && i & mt == 0 {
                        self.amplitudes.swap(i, i | mt);
                    }
                }
            }
        }
    }

    fn phase(&mut self, q: usize, p: C64) {
        let m = self.mask(q);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & m != 0 {
                *a *= p;
            }
        }
    }
}

/// Gate-by-gate statevector simulation.
pub fn simulate(circuit: &Circuit, input: &StateVector) -> Result<StateVector> {
    let n = circuit.num_qubits();
    if n > MAX_STATEVECTOR_QUBITS {
        return Err(PqcError::Size {
            what: "qubits",
            got: n,
            max: MAX_STATEVECTOR_QUBITS,
        });
    }
    if input.n != n {
        return Err(PqcError::Dimension(format!(
            "circuit has {n} qubits, state has {}",
            input.n
        )));
    }
    let mut s = input.clone();
    for g in circuit.gates() {
        s.apply_gate(g);
    }
    Ok(s)
}

/// `<+|^n U |0>^n`.
pub fn amplitude_plus_u_zero(circuit: &Circuit) -> Result<C64> {
    let n = circuit.num_qubits();
    let out = simulate(circuit, &StateVector::zero(n))?;
    let plus = StateVector::plus(n);
    Ok(plus
        .amplitudes
        .iter()
        .zip(&out.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// `<alpha| H^n U H^n |+>^n = <alpha| H^n U |0>^n`: the logical amplitude the
/// compiled pipeline should carry on basis state `alpha`.
pub fn v_plus_amplitudes(circuit: &Circuit) -> Result<Vec<C64>> {
    let n = circuit.num_qubits();
    let mut out = simulate(circuit, &StateVector::zero(n))?.into_amplitudes();
    crate::algebra::walsh_hadamard(&mut out);
    Ok(out)
}

/// Dense single-gate matrices used for dense-unitary construction.
fn gate_matrix(g: &Gate) -> ComplexMatrix {
    match g {
        Gate::H(_) => hadamard(),
        Gate::S(_) => ComplexMatrix::diagonal(&[ONE, I]),
        Gate::T(_) => ComplexMatrix::diagonal(&[ONE, C64::from_polar(1.0, FRAC_PI_4)]),
        Gate::Cnot(..) => ComplexMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]),
    }
}

/// Dense `U` of the circuit (last gate leftmost).
pub fn circuit_unitary(circuit: &Circuit) -> Result<ComplexMatrix> {
    let n = circuit.num_qubits();
    let mut u = ComplexMatrix::identity(1 << n);
    for g in circuit.gates() {
        let local = gate_matrix(g);
        let full = crate::algebra::embed(&local, &g.qubits(), n)?;
        u = full.matmul(&u);
    }
    Ok(u)
}

/// Dense `V = H^n U H^n`.
pub fn conjugated_unitary(circuit: &Circuit) -> Result<ComplexMatrix> {
    let h = hadamard_n(circuit.num_qubits());
    Ok(h.matmul(&circuit_unitary(circuit)?).matmul(&h))
}

/// `exp(-t Hm)` for Hermitian `Hm` via eigendecomposition.
pub fn herm_exp(hm: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if hm.rows() > MAX_EXP_DIM {
        return Err(PqcError::Size {
            what: "dimension",
            got: hm.rows(),
            max: MAX_EXP_DIM,
        });
    }
    herm_exp_unbounded(hm, t)
}

fn herm_exp_unbounded(hm: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigen(hm, 1e-10)?;
    let d: Vec<C64> = eig.values.iter().map(|&e| C64::new((-t * e).exp(), 0.0)).collect();
    Ok(eig
        .vectors
        .matmul(&ComplexMatrix::diagonal(&d))
        .matmul(&eig.vectors.adjoint()))
}

/// Dense Pauli string built from the letters' 2x2 matrices.
pub fn dense_pauli(p: &PauliString) -> ComplexMatrix {
    p.letters()
        .iter()
        .fold(ComplexMatrix::identity(1), |acc, l| acc.kron(&l.matrix()))
        .scale(p.phase().value())
}

/// Dense `H_p = sum lambda_i P_i`.
pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> ComplexMatrix {
    let dim = 1usize << h.n();
    h.terms()
        .iter()
        .fold(ComplexMatrix::zeros(dim, dim), |mut acc, (lam, p)| {
            acc.axpy(C64::new(*lam, 0.0), &dense_pauli(p));
            acc
        })
}

/// Projector onto the eigenspace within `1e-9` of the lowest eigenvalue, and
/// that eigenvalue.
pub fn ground_projector(h: &PauliHamiltonian) -> Result<(ComplexMatrix, f64)> {
    let hm = hamiltonian_matrix(h);
    if hm.rows() > MAX_EXP_DIM {
        return Err(PqcError::Size {
            what: "dimension",
            got: hm.rows(),
            max: MAX_EXP_DIM,
        });
    }
    let eig = hermitian_eigen(&hm, 1e-10)?;
    let e_g = eig.values[0];
    let dim = hm.rows();
    let mut proj = ComplexMatrix::zeros(dim, dim);
    for (k, &e) in eig.values.iter().enumerate() {
        if e - e_g <= 1e-9 {
            let v = eig.vector(k);
            proj += &ComplexMatrix::outer(&v, &v);
        }
    }
    Ok((proj, e_g))
}

/// Exact Lindbladian propagation `rho(t) = exp(t L) rho0` for Hermitian jump
/// operators, where `L = sum lambda (F (x) F^* - I)` in the row-major
/// vectorized picture. Dimension of `rho0` at most 16.
pub fn lindblad_exact(rho0: &ComplexMatrix, jumps: &[(f64, ComplexMatrix)], t: f64) -> Result<ComplexMatrix> {
    let d = rho0.rows();
    if d > 16 {
        return Err(PqcError::Size {
            what: "dimension",
            got: d,
            max: 16,
        });
    }
    let big = d * d;
    let mut gen = ComplexMatrix::zeros(big, big);
    let id = ComplexMatrix::identity(big);
    for (lam, f) in jumps {
        if !f.is_hermitian(1e-12) {
            return Err(PqcError::Numeric("jump operator must be Hermitian".into()));
        }
        let mut term = f.kron(&f.conj());
        term.axpy(-ONE, &id);
        gen.axpy(C64::new(*lam, 0.0), &term);
    }
    // exp(t L) = herm_exp(-L, t)
    let prop = herm_exp_unbounded(&gen.scale_real(-1.0), t)?;
    let v = prop.mat_vec(rho0.as_slice());
    ComplexMatrix::new(d, d, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;
    use crate::lindblad::parse_hamiltonian;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hadamard_on_zero() {
        let circ = parse_circuit("qubits 1\nH 0").unwrap();
        let out = simulate(&circ, &StateVector::zero(1)).unwrap();
        let s = FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0] - c(s, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cnot_on_10() {
        let circ = parse_circuit("qubits 2\nCNOT 0 1").unwrap();
        let out = simulate(&circ, &StateVector::basis(2, 0b10)).unwrap();
        assert_eq!(out.amplitudes(), StateVector::basis(2, 0b11).amplitudes());
    }

    #[test]
    fn statevector_matches_dense_unitary() {
        // H then CNOT: the Bell-frame ordering fixture.
        let circ = parse_circuit("qubits 2\nH 0\nCNOT 0 1\nT 1\nS 0").unwrap();
        let u = circuit_unitary(&circ).unwrap();
        for b in 0..4 {
            let sv = simulate(&circ, &StateVector::basis(2, b)).unwrap();
            let col: Vec<C64> = (0..4).map(|r| u[(r, b)]).collect();
            assert!(crate::algebra::max_abs_diff_vec(sv.amplitudes(), &col) < 1e-14);
        }
        let bell = simulate(
            &parse_circuit("qubits 2\nH 0\nCNOT 0 1").unwrap(),
            &StateVector::zero(2),
        )
        .unwrap();
        assert!((bell.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((bell.amplitudes()[3] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn amplitude_examples() {
        let empty = parse_circuit("qubits 2").unwrap();
        assert!((amplitude_plus_u_zero(&empty).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        let hh = parse_circuit("qubits 2\nH 0\nH 1").unwrap();
        assert!((amplitude_plus_u_zero(&hh).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn exp_examples() {
        let z = crate::algebra::Pauli::Z.matrix();
        assert!(herm_exp(&z, 0.0).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        let e = herm_exp(&z, 1.0).unwrap();
        let want = ComplexMatrix::diagonal(&[c((-1f64).exp(), 0.0), c(1f64.exp(), 0.0)]);
        assert!(e.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn exp_semigroup() {
        let h = parse_hamiltonian("qubits 2\n0.7 -ZZ\n0.3 +XY\n1.1 +IX").unwrap();
        let hm = hamiltonian_matrix(&h);
        let a = herm_exp(&hm, 0.4).unwrap().matmul(&herm_exp(&hm, 0.9).unwrap());
        assert!(a.max_abs_diff(&herm_exp(&hm, 1.3).unwrap()) < 1e-10);
    }

    #[test]
    fn bell_ground_projector() {
        let h = parse_hamiltonian("qubits 2\n1.0 -ZZ\n1.0 -XX").unwrap();
        let (p, e) = ground_projector(&h).unwrap();
        assert!((e + 2.0).abs() < 1e-12);
        let phi = [c(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, c(FRAC_1_SQRT_2, 0.0)];
        assert!(p.max_abs_diff(&ComplexMatrix::outer(&phi, &phi)) < 1e-12);
        let hm = hamiltonian_matrix(&h);
        assert!(p.matmul(&p).max_abs_diff(&p) < 1e-10);
        assert!(p.matmul(&hm).max_abs_diff(&hm.matmul(&p)) < 1e-10);
    }

    #[test]
    fn frustrated_ground_energy() {
        let h = parse_hamiltonian("qubits 1\n1.0 +X\n1.0 +Z").unwrap();
        let (_, e) = ground_projector(&h).unwrap();
        assert!((e + 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_projector_is_identity() {
        let h = parse_hamiltonian("qubits 2").unwrap();
        let (p, e) = ground_projector(&h).unwrap();
        assert_eq!(e, 0.0);
        assert!(p.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn unitarity_on_random_circuits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let gates = (0..30)
                .map(|_| {
                    let q = rng.random_range(0..n);
                    match rng.random_range(0..4) {
                        0 => Gate::H(q),
                        1 => Gate::S(q),
                        2 => Gate::T(q),
                        _ => Gate::Cnot(q, (q + 1 + rng.random_range(0..n - 1)) % n),
                    }
                })
                .collect();
            let circ = Circuit::new(n, gates).unwrap();
            let out = simulate(&circ, &StateVector::zero(n)).unwrap();
            assert!((out.norm() - 1.0).abs() < 1e-12);
        }
    }
}

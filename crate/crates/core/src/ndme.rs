//! Non-diagonal density-matrix encodings: amplitude vectors stored as
//! `{I, X}`-supported matrices in the upper-right block of a density matrix.

use serde::{Deserialize, Serialize};

use crate::algebra::{hadamard_n, hermitian_eigen, log2_exact, vec_norm, walsh_hadamard, ComplexMatrix, C64, ZERO};
use crate::error::{dim_err, PqcError, Result};

/// Inputs whose norm deviates from 1 by less than this are renormalized.
pub const RENORMALIZE_TOL: f64 = 1e-9;
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeVector {
    n: usize,
    c: Vec<C64>,
}

impl AmplitudeVector {
    pub fn new(c: Vec<C64>) -> Result<Self> {
        let n = match log2_exact(c.len()) {
            Some(n) if n > 0 => n,
            _ => return dim_err(format!("{} amplitudes is not a positive power of two", c.len())),
        };
        let norm = vec_norm(&c);
        if !norm.is_finite() || (norm - 1.0).abs() > RENORMALIZE_TOL {
            return Err(PqcError::Normalization {
                norm,
                tol: RENORMALIZE_TOL,
            });
        }
        let c = c.into_iter().map(|z| z / norm).collect();
        Ok(Self { n, c })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(c: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&c);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(PqcError::Normalization {
                norm,
                tol: RENORMALIZE_TOL,
            });
        }
        Self::new(c.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut c = vec![ZERO; 1 << n];
        c[index] = C64::new(1.0, 0.0);
        Self { n, c }
    }

    pub fn plus(n: usize) -> Self {
        let a = C64::new(((1usize << n) as f64).sqrt().recip(), 0.0);
        Self { n, c: vec![a; 1 << n] }
    }

    /// A Haar-like random state from independent complex Gaussians.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        use rand_distr::StandardNormal;
        loop {
            let c: Vec<C64> = (0..1usize << n)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(v) = Self::normalized(c) {
                return v;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.c
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.c
    }

    /// `chi_beta = <beta| H^n |psi>`.
    pub fn chi(&self) -> Vec<C64> {
        let mut v = self.c.clone();
        walsh_hadamard(&mut v);
        v
    }
}

/// An `{I, X}`-supported matrix `S = 2^{-n/2} sum_alpha c_alpha Q_alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct SMatrix {
    n: usize,
    matrix: ComplexMatrix,
}

impl SMatrix {
    /// Checks `{I, X}` support and unit coefficient norm.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() < 2 {
            return dim_err("S must be square and act on at least one qubit");
        }
        let n = matrix.num_qubits();
        let (coeffs, residual) = x_support_coefficients(&matrix);
        if residual > SUPPORT_TOL {
            return Err(PqcError::Encoding(format!(
                "matrix has weight {residual:e} outside the {{I, X}} strings"
            )));
        }
        let norm = vec_norm(&coeffs);
        if (norm - 1.0).abs() > RENORMALIZE_TOL {
            return Err(PqcError::Normalization {
                norm,
                tol: RENORMALIZE_TOL,
            });
        }
        Ok(Self { n, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `Sigma_S = H^n S H^n`, diagonal with entries `chi_beta`.
    pub fn sigma(&self) -> ComplexMatrix {
        let h = hadamard_n(self.n);
        h.matmul(&self.matrix).matmul(&h)
    }
}

/// `2^{-n/2} sum_alpha c_alpha Q_alpha` for any coefficient vector, normalized or not.
pub fn s_matrix_of(c: &[C64]) -> ComplexMatrix {
    let d = c.len();
    let scale = (d as f64).sqrt().recip();
    ComplexMatrix::from_fn(d, d, |r, col| c[r ^ col] * scale)
}

pub fn s_from_amplitudes(c: &AmplitudeVector) -> SMatrix {
    SMatrix {
        n: c.n,
        matrix: s_matrix_of(&c.c),
    }
}

/// `2^{-n/2} Tr(Q_alpha M)` for every alpha, and the max-entry weight of `M`
/// left outside the span of the `{I, X}` strings.
pub fn x_support_coefficients(m: &ComplexMatrix) -> (Vec<C64>, f64) {
    let d = m.rows();
    let scale = (d as f64).sqrt().recip();
    let coeffs: Vec<C64> = (0..d)
        .map(|a| (0..d).map(|j| m[(j ^ a, j)]).sum::<C64>() * scale)
        .collect();
    let mut residual: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            residual = residual.max((m[(r, c)] - coeffs[r ^ c] * scale).norm());
        }
    }
    (coeffs, residual)
}

/// `c_alpha = 2^{-n/2} Tr(Q_alpha S)`.
pub fn pqc_decode(s: &SMatrix) -> Result<AmplitudeVector> {
    let (coeffs, residual) = x_support_coefficients(&s.matrix);
    if residual > SUPPORT_TOL {
        return Err(PqcError::Encoding(format!(
            "matrix has weight {residual:e} outside the {{I, X}} strings"
        )));
    }
    AmplitudeVector::new(coeffs)
}

/// `(<0| (x) I) rho (|1> (x) I)`.
pub fn ndme_block(rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !rho.is_square() || rho.rows() < 2 {
        return dim_err(format!("{}x{} is not an encoded state", rho.rows(), rho.cols()));
    }
    let d = rho.rows() / 2;
    Ok(rho.block(0, d, d, d))
}

/// `1 / (2 sum_beta |<beta| H^n |psi>|)`.
pub fn gamma_upper_bound(c: &AmplitudeVector) -> f64 {
    let s: f64 = c.chi().iter().map(|z| z.norm()).sum();
    0.5 / s
}

/// A density matrix on `1 + n` qubits whose upper-right block is `gamma S`.
#[derive(Debug, Clone, PartialEq)]
pub struct NdmeState {
    n: usize,
    rho: ComplexMatrix,
    gamma: f64,
    amplitudes: AmplitudeVector,
}

impl NdmeState {
    /// Reads `gamma` and the logical amplitudes off the upper-right block.
    /// The density-matrix invariants are not checked here; see [`validate`](Self::validate).
    pub fn from_rho(rho: ComplexMatrix, n: usize) -> Result<Self> {
        if !rho.is_square() || rho.rows() != 2usize << n {
            return dim_err(format!(
                "a {n}-qubit encoding needs a {0}x{0} density matrix, got {1}x{2}",
                2usize << n,
                rho.rows(),
                rho.cols()
            ));
        }
        let block = ndme_block(&rho)?;
        let (coeffs, residual) = x_support_coefficients(&block);
        let gamma = vec_norm(&coeffs);
        if !(gamma > 1e-14) {
            return Err(PqcError::DegenerateEncoding(gamma));
        }
        if residual > 1e-9 * gamma.max(1e-3) {
            return Err(PqcError::Encoding(format!(
                "block has weight {residual:e} outside the {{I, X}} strings"
            )));
        }
        let amplitudes = AmplitudeVector::new(coeffs.into_iter().map(|z| z / gamma).collect())?;
        Ok(Self {
            n,
            rho,
            gamma,
            amplitudes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn into_rho(self) -> ComplexMatrix {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn amplitudes(&self) -> &AmplitudeVector {
        &self.amplitudes
    }

    pub fn s(&self) -> SMatrix {
        s_from_amplitudes(&self.amplitudes)
    }

    /// `gamma sum_beta |chi_beta|`, at most `1/2` for any valid state.
    pub fn bound_product(&self) -> f64 {
        self.gamma * self.amplitudes.chi().iter().map(|z| z.norm()).sum::<f64>()
    }

    /// Full invariant check: Hermitian, unit trace, PSD to `-1e-10`, block
    /// equal to `gamma S`, and `gamma` within the upper bound.
    pub fn validate(&self) -> Result<()> {
        let herm = self.rho.hermiticity_defect();
        if herm > 1e-10 {
            return Err(PqcError::State(format!("rho is not Hermitian (defect {herm:e})")));
        }
        let tr = self.rho.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(PqcError::State(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eigen(&self.rho, 1e-10)?.values[0];
        if min < -1e-10 {
            return Err(PqcError::State(format!("rho has eigenvalue {min:e}")));
        }
        let block = ndme_block(&self.rho)?;
        let want = self.s().matrix().scale_real(self.gamma);
        let r = block.max_abs_diff(&want);
        if r > 1e-12 {
            return Err(PqcError::State(format!("block deviates from gamma S by {r:e}")));
        }
        let bound = gamma_upper_bound(&self.amplitudes);
        if self.gamma > bound + 1e-12 {
            return Err(PqcError::State(format!(
                "gamma {} exceeds the bound {bound}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// `H^n diag(d) H^n` as a dense matrix; its `(r, c)` entry depends only on `r xor c`.
fn hadamard_conjugated_diagonal(d: &[C64]) -> ComplexMatrix {
    let mut f = d.to_vec();
    walsh_hadamard(&mut f);
    let scale = (d.len() as f64).sqrt().recip();
    ComplexMatrix::from_fn(d.len(), d.len(), |r, c| f[r ^ c] * scale)
}

/// The mixture `sum_beta q_beta |phi_beta><phi_beta|` with
/// `q_beta = |chi_beta| / sum |chi|` and
/// `|phi_beta> = (|0> + e^{-i arg chi_beta} |1>)/sqrt 2 (x) H^n |beta>`,
/// which attains `gamma = gamma_upper_bound(c)`.
pub fn encode_state_optimal(c: &AmplitudeVector) -> Result<NdmeState> {
    let chi = c.chi();
    let total: f64 = chi.iter().map(|z| z.norm()).sum();
    if !(total > 0.0) {
        return Err(PqcError::Internal("all chi vanish for a unit vector".into()));
    }
    let q: Vec<C64> = chi.iter().map(|z| C64::new(z.norm() / total, 0.0)).collect();
    // q_beta e^{i arg chi} = chi / total; arg(0) = 0 drops out with q = 0.
    let qphase: Vec<C64> = chi.iter().map(|z| z / total).collect();
    let a = hadamard_conjugated_diagonal(&q).scale_real(0.5);
    let b = hadamard_conjugated_diagonal(&qphase).scale_real(0.5);
    let rho = ComplexMatrix::from_blocks(&a, &b, &b.adjoint(), &a);
    let gamma = 0.5 / total;
    Ok(NdmeState {
        n: c.n,
        rho,
        gamma,
        amplitudes: c.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli_decompose, BitString, PauliString, ONE};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn s_examples() {
        let s = s_from_amplitudes(&AmplitudeVector::basis(1, 0));
        assert!(
            s.matrix()
                .max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5f64.sqrt()))
                < 1e-15
        );
        let s = s_from_amplitudes(&AmplitudeVector::plus(1));
        assert!(
            s.matrix()
                .max_abs_diff(&ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]))
                < 1e-15
        );
        let alpha = BitString::from_index(0b101, 3);
        let s = s_from_amplitudes(&AmplitudeVector::basis(3, alpha.index()));
        let q = PauliString::x_string(&alpha).matrix().scale_real(8f64.sqrt().recip());
        assert!(s.matrix().max_abs_diff(&q) < 1e-15);
    }

    #[test]
    fn s_support_is_ix_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = AmplitudeVector::random(3, &mut rng);
        let s = s_from_amplitudes(&psi);
        for (p, _) in pauli_decompose(s.matrix()).unwrap() {
            assert!(p
                .letters()
                .iter()
                .all(|l| matches!(l, crate::algebra::Pauli::I | crate::algebra::Pauli::X)));
        }
        let sigma = s.sigma();
        let chi = psi.chi();
        for r in 0..8 {
            for col in 0..8 {
                let want = if r == col { chi[r] } else { ZERO };
                assert!((sigma[(r, col)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn decode_examples() {
        let s = SMatrix::from_matrix(ComplexMatrix::identity(2).scale_real(0.5f64.sqrt())).unwrap();
        let back = pqc_decode(&s).unwrap();
        assert!((back.as_slice()[0] - ONE).norm() < 1e-15);
        let plus = SMatrix::from_matrix(ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]])).unwrap();
        let back = pqc_decode(&plus).unwrap();
        let h = 0.5f64.sqrt();
        assert!((back.as_slice()[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((back.as_slice()[1] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            AmplitudeVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(PqcError::Normalization { .. })
        ));
        let z = crate::algebra::Pauli::Z.matrix().scale_real(0.5f64.sqrt());
        assert!(matches!(SMatrix::from_matrix(z), Err(PqcError::Encoding(_))));
        assert!(ndme_block(&ComplexMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn renormalizes_small_drift() {
        let v = AmplitudeVector::new(vec![c(1.0 + 1e-11, 0.0), ZERO]).unwrap();
        assert_eq!(v.as_slice()[0], ONE);
    }

    #[test]
    fn block_examples() {
        let plus2 = ComplexMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let rho = plus2.kron(&plus2);
        let b = ndme_block(&rho).unwrap();
        assert!(b.max_abs_diff(&ComplexMatrix::from_real(&[&[0.25, 0.25], &[0.25, 0.25]])) < 1e-15);

        for n in 1..=3 {
            let d = 1usize << n;
            let ix = ComplexMatrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]);
            let rho = ix.kron(&ComplexMatrix::identity(d)).scale_real(1.0 / (2 * d) as f64);
            let state = NdmeState::from_rho(rho.clone(), n).unwrap();
            assert!((state.gamma() - 2f64.powf(-(n as f64) / 2.0 - 1.0)).abs() < 1e-15);
            assert!((state.amplitudes().as_slice()[0] - ONE).norm() < 1e-14);
            let mixed = ComplexMatrix::identity(2 * d).scale_real(1.0 / (2 * d) as f64);
            assert_eq!(ndme_block(&mixed).unwrap().max_abs(), 0.0);
            assert!(matches!(
                NdmeState::from_rho(mixed, n),
                Err(PqcError::DegenerateEncoding(_))
            ));
        }
    }

    #[test]
    fn encoder_endpoints() {
        for n in 1..=4 {
            let d = 2usize << n;
            let plus = encode_state_optimal(&AmplitudeVector::plus(n)).unwrap();
            assert!((plus.gamma() - 0.5).abs() < 1e-15);
            let all_plus = ComplexMatrix::from_fn(d, d, |_, _| c(1.0 / d as f64, 0.0));
            assert!(plus.rho().max_abs_diff(&all_plus) < 1e-15);

            let zero = encode_state_optimal(&AmplitudeVector::basis(n, 0)).unwrap();
            assert!((zero.gamma() - 2f64.powf(-(n as f64) / 2.0 - 1.0)).abs() < 1e-15);
            let ix = ComplexMatrix::from_real(&[&[1.0, 1.0], &[1.0, 1.0]]);
            let want = ix.kron(&ComplexMatrix::identity(d / 2)).scale_real(1.0 / d as f64);
            assert!(zero.rho().max_abs_diff(&want) < 1e-15);
        }
        let one = AmplitudeVector::basis(1, 1);
        assert!((gamma_upper_bound(&one) - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn encoder_random_states_valid_and_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let psi = AmplitudeVector::random(3, &mut rng);
            let state = encode_state_optimal(&psi).unwrap();
            state.validate().unwrap();
            assert!((state.gamma() - gamma_upper_bound(&psi)).abs() < 1e-12);
            let reread = NdmeState::from_rho(state.rho().clone(), 3).unwrap();
            assert!((reread.gamma() - state.gamma()).abs() < 1e-12);
            assert!(crate::algebra::max_abs_diff_vec(reread.amplitudes().as_slice(), psi.as_slice()) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(seed in any::<u64>(), n in 1usize..=4) {
            let psi = AmplitudeVector::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let back = pqc_decode(&s_from_amplitudes(&psi)).unwrap();
            prop_assert!(crate::algebra::max_abs_diff_vec(back.as_slice(), psi.as_slice()) < 1e-12);
        }

        #[test]
        fn bound_bracketed(seed in any::<u64>(), n in 1usize..=6) {
            let psi = AmplitudeVector::random(n, &mut ChaCha8Rng::seed_from_u64(seed));
            let g = gamma_upper_bound(&psi);
            prop_assert!(g >= 2f64.powf(-(n as f64) / 2.0 - 1.0) - 1e-15);
            prop_assert!(g <= 0.5 + 1e-15);
        }
    }
}

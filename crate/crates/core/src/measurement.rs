//! Reading amplitudes and expectation values out of encoded states: exact
//! Pauli traces, the swap-trace expectation, the purification identity, and
//! seeded shot sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    hermitian_eigen, inner, pauli_trace, BitString, ComplexMatrix, Pauli, PauliString, Phase, C64, ZERO,
};
use crate::error::{dim_err, PqcError, Result};
use crate::ndme::NdmeState;

/// `Tr(P rho)` for Hermitian `P` and `rho`.
pub fn pauli_expectation(rho: &ComplexMatrix, p: &PauliString) -> Result<f64> {
    if !rho.is_square() || rho.rows() != 1 << p.num_qubits() {
        return dim_err(format!(
            "{}-qubit Pauli on a {}x{} matrix",
            p.num_qubits(),
            rho.rows(),
            rho.cols()
        ));
    }
    if !p.is_hermitian() {
        return Err(PqcError::UnsupportedPhase(p.phase().to_string()));
    }
    let defect = rho.hermiticity_defect();
    if defect > 1e-10 {
        return Err(PqcError::State(format!("rho is not Hermitian (defect {defect:e})")));
    }
    let t = pauli_trace(p, rho);
    if t.im.abs() > 1e-12 {
        return Err(PqcError::State(format!("trace has imaginary part {:e}", t.im)));
    }
    Ok(t.re)
}

/// `A (x) Q_alpha` on `1 + n` qubits.
pub fn assistant_x_string(assistant: Pauli, alpha: &BitString) -> PauliString {
    PauliString::new(Phase::PLUS_ONE, vec![assistant]).tensor(&PauliString::x_string(alpha))
}

/// The raw signals `(Tr(X (x) Q_alpha rho), Tr(Y (x) Q_alpha rho))`.
pub fn raw_signals(state: &NdmeState, alpha: &BitString) -> Result<(f64, f64)> {
    alpha.check_len(state.n())?;
    let x = pauli_expectation(state.rho(), &assistant_x_string(Pauli::X, alpha))?;
    let y = pauli_expectation(state.rho(), &assistant_x_string(Pauli::Y, alpha))?;
    Ok((x, y))
}

/// `c_alpha = (Tr(X Q_alpha rho) - i Tr(Y Q_alpha rho)) / (2^{n/2+1} gamma)`.
///
/// With the block `<0|rho|1> = gamma S`, the `Y` trace is `-2^{n/2+1} gamma Im c_alpha`.
pub fn amplitude_via_pauli(state: &NdmeState, alpha: &BitString) -> Result<C64> {
    let gamma = state.gamma();
    if !(gamma >= 1e-14) {
        return Err(PqcError::DegenerateEncoding(gamma));
    }
    let (x, y) = raw_signals(state, alpha)?;
    let scale = 2f64.powf(state.n() as f64 / 2.0 + 1.0) * gamma;
    Ok(C64::new(x, -y) / scale)
}

/// `Tr((|01><10| (x) SWAP_n)(rho (x) rho_1))`, equal to `gamma^2 <psi| P |psi>`
/// when `state1` is `state` after an eta-1 Pauli channel.
///
/// The trace collapses to `Tr(<1|rho|0> <0|rho_1|1>)`.
pub fn expectation_via_swap(state: &NdmeState, state1: &NdmeState) -> Result<C64> {
    if state.n() != state1.n() {
        return Err(PqcError::Consistency(format!(
            "states encode {} and {} qubits",
            state.n(),
            state1.n()
        )));
    }
    if (state.gamma() - state1.gamma()).abs() > 1e-10 {
        return Err(PqcError::Consistency(format!(
            "encoding factors {} and {} differ; the second state is not an eta-1 image",
            state.gamma(),
            state1.gamma()
        )));
    }
    let d = 1usize << state.n();
    let (r, s) = (state.rho(), state1.rho());
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += r[(d + i, j)] * s[(j, d + i)];
        }
    }
    Ok(acc)
}

/// The same trace built from the full `2(n+1)`-qubit operator, for `n <= 3`.
pub fn expectation_via_swap_dense(state: &NdmeState, state1: &NdmeState) -> Result<C64> {
    let n = state.n();
    if n > 3 || state1.n() != n {
        return Err(PqcError::Size {
            what: "qubits",
            got: n,
            max: 3,
        });
    }
    let d = 1usize << n;
    let big = 2 * d;
    let joint = state.rho().kron(state1.rho());
    // Index layout of rho (x) rho_1: (a, i, b, j) with a, b assistants.
    let idx = |a: usize, i: usize, b: usize, j: usize| ((a * d + i) * big) + b * d + j;
    // M = |0><1|_a (x) |1><0|_b (x) SWAP: M[(0,i,1,j), (1,j,0,i)] = 1.
    let mut acc = ZERO;
    let dim = big * big;
    let mut op = ComplexMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            op[(idx(0, i, 1, j), idx(1, j, 0, i))] = C64::new(1.0, 0.0);
        }
    }
    let prod = op.matmul(&joint);
    for k in 0..dim {
        acc += prod[(k, k)];
    }
    Ok(acc)
}

/// `|<P_S| I_e (x) (X (x) Q_alpha + I) |P_S> - (1 + Tr((X (x) Q_alpha) rho))|`
/// for an explicit purification `|P_S> = sum_k sqrt(lambda_k) |k>|v_k>`.
pub fn hle_identity_check(state: &NdmeState, alpha: &BitString) -> Result<f64> {
    alpha.check_len(state.n())?;
    let rho = state.rho();
    let d = rho.rows();
    let eig = hermitian_eigen(rho, 1e-10)?;
    let mut purification = vec![ZERO; d * d];
    for k in 0..d {
        let w = eig.values[k].max(0.0).sqrt();
        for r in 0..d {
            purification[k * d + r] = eig.vectors[(r, k)] * w;
        }
    }
    let obs = assistant_x_string(Pauli::X, alpha).action();
    let mut applied = vec![ZERO; d * d];
    for k in 0..d {
        for col in 0..d {
            let v = purification[k * d + col];
            let (row, coeff) = obs.apply(col);
            applied[k * d + row] += coeff * v;
            applied[k * d + col] += v;
        }
    }
    let lhs = inner(&purification, &applied);
    let rhs = 1.0 + pauli_expectation(rho, &assistant_x_string(Pauli::X, alpha))?;
    Ok((lhs - C64::new(rhs, 0.0)).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSample {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
    pub seed: u64,
    pub exact: f64,
    /// Set when the mean lies more than five standard errors from `exact`.
    pub flagged: bool,
    pub outcomes: Vec<i8>,
}

/// Draws `shots` outcomes in `{+1, -1}` with `P(+1) = (1 + Tr(P rho)) / 2`.
pub fn sample_pauli(rho: &ComplexMatrix, p: &PauliString, shots: u64, seed: u64) -> Result<PauliSample> {
    if shots == 0 {
        return Err(PqcError::State("shots must be at least 1".into()));
    }
    let exact = pauli_expectation(rho, p)?;
    let p_plus = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<i8> = (0..shots)
        .map(|_| if rng.random_bool(p_plus) { 1 } else { -1 })
        .collect();
    let mean = outcomes.iter().map(|&o| f64::from(o)).sum::<f64>() / shots as f64;
    let var = (1.0 - mean * mean).max(0.0);
    let std_error = (var / shots as f64).sqrt();
    let flagged = (mean - exact).abs() > 5.0 * std_error + 1e-12;
    Ok(PauliSample {
        mean,
        std_error,
        shots,
        seed,
        exact,
        flagged,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shots {
    Count(u64),
    #[serde(with = "exact_tag")]
    Exact,
}

mod exact_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("exact")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "exact" {
            Ok(())
        } else {
            Err(D::Error::custom(format!("expected \"exact\", got {s:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub observable: String,
    pub value_re: f64,
    pub value_im: f64,
    pub shots: Shots,
    pub seed: Option<u64>,
}

impl MeasurementRecord {
    pub fn exact(observable: impl Into<String>, value: C64) -> Self {
        Self {
            observable: observable.into(),
            value_re: value.re,
            value_im: value.im,
            shots: Shots::Exact,
            seed: None,
        }
    }

    pub fn sampled(observable: impl Into<String>, s: &PauliSample) -> Self {
        Self {
            observable: observable.into(),
            value_re: s.mean,
            value_im: 0.0,
            shots: Shots::Count(s.shots),
            seed: Some(s.seed),
        }
    }
}

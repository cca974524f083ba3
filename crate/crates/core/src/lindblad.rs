//! Dissipative evolution of encoded states under Pauli jump operators, and
//! its correspondence with imaginary time evolution of the encoded vector.

use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{bell_frame, vec_norm, ComplexMatrix, Pauli, PauliAction, PauliString, Phase, C64, ONE, ZERO};
use crate::error::{dim_err, PqcError, Result};
use crate::ndme::{ndme_block, s_matrix_of, AmplitudeVector, NdmeState};
use crate::oracle::{hamiltonian_matrix, herm_exp};

/// Largest system for the dense jump check.
pub const MAX_DENSE_JUMP_QUBITS: usize = 3;
/// Trace drift that aborts an integration.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

/// `H_p = sum lambda_i P_i` with `lambda_i >= 0` and real-signed `P_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliHamiltonian {
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        for (k, (lam, p)) in terms.iter().enumerate() {
            if !(lam.is_finite() && *lam >= 0.0) {
                return Err(PqcError::State(format!(
                    "term {k}: coefficient {lam} must be nonnegative"
                )));
            }
            if p.num_qubits() != n {
                return dim_err(format!("term {k}: {} letters for {n} qubits", p.num_qubits()));
            }
            if !p.phase().is_real() {
                return Err(PqcError::UnsupportedPhase(p.phase().to_string()));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn lambda_sum(&self) -> f64 {
        self.terms.iter().map(|(l, _)| l).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n);
        for (lam, p) in &self.terms {
            let _ = writeln!(s, "{lam} {p}");
        }
        s
    }
}

/// Parses `qubits n` followed by lines `<lambda> <sign><letters>`.
pub fn parse_hamiltonian(text: &str) -> Result<PauliHamiltonian> {
    let mut n = None;
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| PqcError::Parse { line: line_no, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let Some(num_qubits) = n else {
            match toks.as_slice() {
                ["qubits", k] => {
                    let k: usize = k.parse().map_err(|_| err(format!("bad qubit count '{k}'")))?;
                    if k == 0 {
                        return Err(err("qubit count must be positive".into()));
                    }
                    n = Some(k);
                    continue;
                }
                _ => return Err(err("expected 'qubits <n>' header".into())),
            }
        };
        let [lam, p] = toks.as_slice() else {
            return Err(err(format!("expected '<lambda> <pauli>', got '{line}'")));
        };
        let lam: f64 = lam.parse().map_err(|_| err(format!("bad coefficient '{lam}'")))?;
        if !(lam.is_finite() && lam >= 0.0) {
            return Err(err(format!("coefficient {lam} must be nonnegative")));
        }
        let p: PauliString = p.parse().map_err(|e| match e {
            PqcError::Parse { msg, .. } => err(msg),
            other => err(other.to_string()),
        })?;
        if !p.phase().is_real() {
            return Err(err(format!("phase {} is not allowed", p.phase())));
        }
        if p.num_qubits() != num_qubits {
            return Err(err(format!("{} letters for {num_qubits} qubits", p.num_qubits())));
        }
        terms.push((lam, p));
    }
    let n = n.ok_or(PqcError::Parse {
        line: 0,
        msg: "missing 'qubits <n>' header".into(),
    })?;
    PauliHamiltonian::new(n, terms)
}

/// `F = diag(p1, p2)` with rate `lambda`, built for the term `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub lambda: f64,
    pub p1: PauliString,
    pub p2: PauliString,
    pub target: PauliString,
}

impl Jump {
    pub fn dense(&self) -> ComplexMatrix {
        ComplexMatrix::direct_sum(&self.p1.matrix(), &self.p2.matrix())
    }

    /// `|U_B (P1 (x) P2^*) U_B^dagger + I (x) P|`, for `n <= 3`.
    pub fn dense_residual(&self) -> Result<f64> {
        let n = self.target.num_qubits();
        if n > MAX_DENSE_JUMP_QUBITS {
            return Err(PqcError::Size {
                what: "qubits",
                got: n,
                max: MAX_DENSE_JUMP_QUBITS,
            });
        }
        let ub = bell_frame(n)?;
        let lhs = ub
            .matmul(&self.p1.matrix().kron(&self.p2.matrix().conj()))
            .matmul(&ub.adjoint());
        let rhs = ComplexMatrix::identity(1 << n)
            .kron(&self.target.matrix())
            .scale_real(-1.0);
        Ok(lhs.max_abs_diff(&rhs))
    }

    /// `|P1 S(c) P2^dagger - S(-P c)|` for the given amplitudes.
    pub fn block_residual(&self, c: &[C64]) -> f64 {
        let s = s_matrix_of(c);
        let lhs = sandwich(&self.p1.action(), &self.p2.action(), &s, c.len(), 0, 0);
        let act = self.target.action();
        let mut pc = vec![ZERO; c.len()];
        for (col, &v) in c.iter().enumerate() {
            let (row, coeff) = act.apply(col);
            pc[row] -= coeff * v;
        }
        lhs.max_abs_diff(&s_matrix_of(&pc))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    pub n: usize,
    pub jumps: Vec<Jump>,
}

impl JumpSet {
    pub fn empty(n: usize) -> Self {
        Self { n, jumps: Vec::new() }
    }

    pub fn lambda_sum(&self) -> f64 {
        self.jumps.iter().map(|j| j.lambda).sum()
    }

    /// `(lambda, F)` pairs for the exact propagator.
    pub fn dense(&self) -> Vec<(f64, ComplexMatrix)> {
        self.jumps.iter().map(|j| (j.lambda, j.dense())).collect()
    }
}

/// Per-letter pairs `I -> (I, I)`, `X -> (I, X)`, `Y -> (Z, -Y)`, `Z -> (Z, Z)`,
/// with one extra sign on `P2` when `P` carries `+1`.
pub fn build_jumps(h: &PauliHamiltonian) -> Result<JumpSet> {
    let jumps = h
        .terms()
        .iter()
        .map(|(lam, p)| jump_for(*lam, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(JumpSet { n: h.n(), jumps })
}

fn jump_for(lambda: f64, p: &PauliString) -> Result<Jump> {
    let mut sign = match p.phase() {
        Phase::PLUS_ONE => Phase::MINUS_ONE,
        Phase::MINUS_ONE => Phase::PLUS_ONE,
        other => return Err(PqcError::UnsupportedPhase(other.to_string())),
    };
    let mut l1 = Vec::with_capacity(p.num_qubits());
    let mut l2 = Vec::with_capacity(p.num_qubits());
    for &letter in p.letters() {
        let (a, b) = match letter {
            Pauli::I => (Pauli::I, Pauli::I),
            Pauli::X => (Pauli::I, Pauli::X),
            Pauli::Y => {
                sign = sign.negate();
                (Pauli::Z, Pauli::Y)
            }
            Pauli::Z => (Pauli::Z, Pauli::Z),
        };
        l1.push(a);
        l2.push(b);
    }
    Ok(Jump {
        lambda,
        p1: PauliString::new(Phase::PLUS_ONE, l1),
        p2: PauliString::new(sign, l2),
        target: p.clone(),
    })
}

/// Writes `P M Q^dagger` for the `d x d` block of `m` at `(r0, c0)`.
fn sandwich(p: &PauliAction, q: &PauliAction, m: &ComplexMatrix, d: usize, r0: usize, c0: usize) -> ComplexMatrix {
    let qs: Vec<(usize, C64)> = (0..d)
        .map(|k| {
            let (row, coeff) = q.apply(k);
            (row, coeff.conj())
        })
        .collect();
    let mut out = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        let (pj, cj) = p.apply(j);
        for (k, &(qk, ck)) in qs.iter().enumerate() {
            out[(pj, qk)] += cj * ck * m[(r0 + j, c0 + k)];
        }
    }
    out
}

/// `sum lambda_i (F_i rho F_i^dagger - rho)`.
pub fn lindblad_rhs(rho: &ComplexMatrix, jumps: &JumpSet) -> Result<ComplexMatrix> {
    let d = 1usize << jumps.n;
    if !rho.is_square() || rho.rows() != 2 * d {
        return dim_err(format!(
            "{}x{} matrix for {} system qubits",
            rho.rows(),
            rho.cols(),
            jumps.n
        ));
    }
    let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
    for jump in &jumps.jumps {
        let lam = C64::new(jump.lambda, 0.0);
        let a1 = jump.p1.action();
        let a2 = jump.p2.action();
        for (bi, pi) in [(0, &a1), (1, &a2)] {
            for (bj, pj) in [(0, &a1), (1, &a2)] {
                let b = sandwich(pi, pj, rho, d, bi * d, bj * d);
                for r in 0..d {
                    for c in 0..d {
                        let (gr, gc) = (bi * d + r, bj * d + c);
                        out[(gr, gc)] += lam * (b[(r, c)] - rho[(gr, gc)]);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub times: Vec<f64>,
    pub rhos: Vec<ComplexMatrix>,
    pub block_norms: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_rho(&self) -> &ComplexMatrix {
        self.rhos.last().expect("trajectory has at least one snapshot")
    }

    pub fn final_block(&self) -> ComplexMatrix {
        ndme_block(self.final_rho()).expect("snapshots are encoded states")
    }

    pub fn state(&self, k: usize) -> Result<NdmeState> {
        NdmeState::from_rho(self.rhos[k].clone(), self.n)
    }

    /// Rows `t,trace,block_norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,trace,block_norm\n");
        for ((t, rho), b) in self.times.iter().zip(&self.rhos).zip(&self.block_norms) {
            let _ = writeln!(s, "{t},{},{b}", rho.trace().re);
        }
        s
    }
}

/// Fixed-step RK4 from `rho0` to `t_max`, keeping every `stride`-th step.
pub fn evolve(rho0: &NdmeState, jumps: &JumpSet, t_max: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PqcError::State(format!("time step {dt} must be positive")));
    }
    if !(t_max >= dt) {
        return Err(PqcError::State(format!("t_max {t_max} is shorter than dt {dt}")));
    }
    if rho0.n() != jumps.n {
        return dim_err(format!("state on {} qubits, jumps on {}", rho0.n(), jumps.n));
    }
    let stride = stride.max(1);
    let steps = (t_max / dt).round() as usize;
    let mut rho = rho0.rho().clone();
    let mut traj = Trajectory {
        n: rho0.n(),
        times: Vec::new(),
        rhos: Vec::new(),
        block_norms: Vec::new(),
    };
    let record = |traj: &mut Trajectory, rho: &ComplexMatrix, t: f64| -> Result<()> {
        let defect = rho.hermiticity_defect();
        if defect > 1e-9 || !rho.is_finite() {
            return Err(PqcError::Numeric(format!(
                "state lost Hermiticity ({defect:e}) at t = {t}"
            )));
        }
        traj.times.push(t);
        traj.block_norms.push(ndme_block(rho)?.frobenius_norm());
        traj.rhos.push(rho.clone());
        Ok(())
    };
    record(&mut traj, &rho, 0.0)?;
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    for step in 1..=steps {
        let k1 = lindblad_rhs(&rho, jumps)?;
        let mut tmp = rho.clone();
        tmp.axpy(half, &k1);
        let k2 = lindblad_rhs(&tmp, jumps)?;
        let mut tmp = rho.clone();
        tmp.axpy(half, &k2);
        let k3 = lindblad_rhs(&tmp, jumps)?;
        let mut tmp = rho.clone();
        tmp.axpy(full, &k3);
        let k4 = lindblad_rhs(&tmp, jumps)?;
        let w = C64::new(dt / 6.0, 0.0);
        rho.axpy(w, &k1);
        rho.axpy(w * 2.0, &k2);
        rho.axpy(w * 2.0, &k3);
        rho.axpy(w, &k4);
        let t = step as f64 * dt;
        let drift = (rho.trace() - ONE).norm();
        if !(drift <= TRACE_DRIFT_TOL) {
            return Err(PqcError::IntegratorInstability { drift, time: t });
        }
        if step % stride == 0 || step == steps {
            record(&mut traj, &rho, t)?;
        }
    }
    Ok(traj)
}

/// `exp(-t (H_p + sum lambda)) |psi0>`, unnormalized.
pub fn ite_reference(psi0: &AmplitudeVector, h: &PauliHamiltonian, t: f64) -> Result<Vec<C64>> {
    if psi0.n() != h.n() {
        return dim_err(format!("state on {} qubits, Hamiltonian on {}", psi0.n(), h.n()));
    }
    let mut hm = hamiltonian_matrix(h);
    let shift = h.lambda_sum();
    for k in 0..hm.rows() {
        hm[(k, k)] += shift;
    }
    Ok(herm_exp(&hm, t)?.mat_vec(psi0.as_slice()))
}

/// `gamma0 S(exp(-t (H_p + sum lambda)) |psi0>)`: the block the dissipative
/// evolution should reach at time `t`.
pub fn ite_block(psi0: &AmplitudeVector, gamma0: f64, h: &PauliHamiltonian, t: f64) -> Result<ComplexMatrix> {
    Ok(s_matrix_of(&ite_reference(psi0, h, t)?).scale_real(gamma0))
}

/// `Tr(rho (X (x) O))` for a `2d x 2d` state.
pub fn coherence_signal(rho: &ComplexMatrix, o: &ComplexMatrix) -> C64 {
    let d = o.rows();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += rho[(i, d + j)] * o[(j, i)] + rho[(d + i, j)] * o[(j, i)];
        }
    }
    acc
}

/// Largest forward-difference `|d/dt Tr(rho_t (X (x) O))|` along the trajectory.
pub fn coherence_steadiness(traj: &Trajectory, o: &ComplexMatrix) -> Result<f64> {
    let d = 1usize << traj.n;
    if !o.is_square() || o.rows() != d {
        return dim_err(format!("O is {}x{}, system dimension {d}", o.rows(), o.cols()));
    }
    let signals: Vec<C64> = traj.rhos.iter().map(|r| coherence_signal(r, o)).collect();
    Ok(signals
        .windows(2)
        .zip(traj.times.windows(2))
        .map(|(s, t)| (s[1] - s[0]).norm() / (t[1] - t[0]))
        .fold(0.0, f64::max))
}

/// Forward difference of the coherence signal over the first step.
pub fn initial_derivative(traj: &Trajectory, o: &ComplexMatrix) -> f64 {
    let s0 = coherence_signal(&traj.rhos[0], o);
    let s1 = coherence_signal(&traj.rhos[1], o);
    (s1 - s0).norm() / (traj.times[1] - traj.times[0])
}

/// Least-squares decay rate of `ln(block_norm)` over `t in [t0, t1]`.
pub fn fit_decay_rate(traj: &Trajectory, t0: f64, t1: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.block_norms)
        .filter(|(t, b)| **t >= t0 - 1e-12 && **t <= t1 + 1e-12 && **b > 0.0)
        .map(|(t, b)| (*t, b.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(PqcError::State(format!("only {} snapshots in [{t0}, {t1}]", pts.len())));
    }
    let m = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Ok(-sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dt_coarse: f64,
    pub dt_fine: f64,
    pub error_coarse: f64,
    pub error_fine: f64,
    /// `error_coarse / error_fine`; about 16 for a fourth-order method.
    pub ratio: f64,
}

/// Block error against the exact reference at two step sizes.
pub fn convergence_study(
    psi0: &AmplitudeVector,
    h: &PauliHamiltonian,
    t: f64,
    dt_coarse: f64,
) -> Result<ConvergenceReport> {
    let state = crate::ndme::encode_state_optimal(psi0)?;
    let jumps = build_jumps(h)?;
    let exact = ite_block(psi0, state.gamma(), h, t)?;
    let err = |dt: f64| -> Result<f64> {
        let traj = evolve(&state, &jumps, t, dt, usize::MAX)?;
        Ok(traj.final_block().max_abs_diff(&exact))
    };
    let dt_fine = dt_coarse / 2.0;
    let error_coarse = err(dt_coarse)?;
    let error_fine = err(dt_fine)?;
    Ok(ConvergenceReport {
        dt_coarse,
        dt_fine,
        error_coarse,
        error_fine,
        ratio: error_coarse / error_fine,
    })
}

/// A commuting, independent set of `m` signed Paulis on `n` qubits whose
/// generated group avoids `-I`.
pub fn random_stabilizer_generators<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Vec<PauliString> {
    assert!(m <= n, "at most n independent commuting generators");
    const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    loop {
        let mut gens: Vec<PauliString> = Vec::with_capacity(m);
        let mut attempts = 0;
        while gens.len() < m && attempts < 1000 {
            attempts += 1;
            let letters: Vec<Pauli> = (0..n).map(|_| *LETTERS.choose(rng).unwrap()).collect();
            let phase = if rng.random_bool(0.5) {
                Phase::PLUS_ONE
            } else {
                Phase::MINUS_ONE
            };
            let p = PauliString::new(phase, letters);
            if p.x_mask() == 0 && p.z_mask() == 0 {
                continue;
            }
            if gens.iter().all(|g| g.commutes_with(&p)) && symplectic_rank(&gens, Some(&p)) == gens.len() + 1 {
                gens.push(p);
            }
        }
        if gens.len() == m {
            return gens;
        }
    }
}

fn symplectic_rank(gens: &[PauliString], extra: Option<&PauliString>) -> usize {
    let rows: Vec<u128> = gens
        .iter()
        .chain(extra)
        .map(|p| (u128::from(p.x_mask()) << 64) | u128::from(p.z_mask()))
        .collect();
    crate::gf2::rank(&rows)
}

/// `H_p = -sum lambda_S g_S` over the generators and a random selection of
/// their products, `lambda` uniform in `[0.5, 1.5]`. Ground energy is
/// `-sum lambda`.
pub fn random_frustration_free<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PauliHamiltonian {
    let m = rng.random_range(1..=n);
    let gens = random_stabilizer_generators(n, m, rng);
    let mut terms = Vec::new();
    for mask in 1usize..1 << m {
        let is_generator = mask.is_power_of_two();
        if !is_generator && !rng.random_bool(0.5) {
            continue;
        }
        let mut p = PauliString::identity(n);
        for (k, g) in gens.iter().enumerate() {
            if mask >> k & 1 == 1 {
                p = p.mul(g).expect("same length");
            }
        }
        terms.push((rng.random_range(0.5..=1.5), p.negated()));
    }
    PauliHamiltonian::new(n, terms).expect("generated terms are valid")
}

/// Residual of the block against the reference at every snapshot.
pub fn block_ite_residual(traj: &Trajectory, psi0: &AmplitudeVector, gamma0: f64, h: &PauliHamiltonian) -> Result<f64> {
    let mut worst = 0.0f64;
    for (t, rho) in traj.times.iter().zip(&traj.rhos) {
        let r = ndme_block(rho)?.max_abs_diff(&ite_block(psi0, gamma0, h, *t)?);
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `||v||` for the reference vector, useful in reports.
pub fn ite_norm(psi0: &AmplitudeVector, h: &PauliHamiltonian, t: f64) -> Result<f64> {
    Ok(vec_norm(&ite_reference(psi0, h, t)?))
}

//! Block-diagonal Kraus-pair channels `rho -> sum_i diag(K_i, L_i) rho diag(K_i, L_i)^dagger`
//! and the gate library built from them.
//!
//! A channel stores its pairs on a list of target qubits of an `n`-qubit
//! encoding system; the dense `2^n` operators are formed only on request.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{
    apply_local, bell_frame, embed, hadamard, log2_exact, ComplexMatrix, Pauli, PauliString, Phase, C64, ONE,
};
use crate::error::{dim_err, PqcError, Result};
use crate::ndme::NdmeState;

/// Largest `n` for which [`KrausPairChannel::cbe_operator`] builds the dense `4^n` operator.
pub const MAX_CBE_QUBITS: usize = 4;

const CPTP_TOL: f64 = 1e-12;

/// Which `F_0` the block-encoding relation is stated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F0Variant {
    /// `|0><0|` on every acted-on qubit.
    Projector,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateId {
    X(F0Variant),
    Y(F0Variant),
    Z(F0Variant),
    H,
    Hsh,
    Hth,
    HhCnotHh,
}

impl GateId {
    /// Every construction in the library: seven projector-variant gates and
    /// the three identity-variant Paulis.
    pub const ALL: [GateId; 10] = [
        GateId::X(F0Variant::Projector),
        GateId::Y(F0Variant::Projector),
        GateId::Z(F0Variant::Projector),
        GateId::H,
        GateId::Hsh,
        GateId::Hth,
        GateId::HhCnotHh,
        GateId::X(F0Variant::Identity),
        GateId::Y(F0Variant::Identity),
        GateId::Z(F0Variant::Identity),
    ];

    pub fn arity(self) -> usize {
        match self {
            GateId::HhCnotHh => 2,
            _ => 1,
        }
    }

    pub fn f0_variant(self) -> F0Variant {
        match self {
            GateId::X(v) | GateId::Y(v) | GateId::Z(v) => v,
            _ => F0Variant::Projector,
        }
    }

    /// The optimal attenuation of the construction.
    pub fn eta(self) -> f64 {
        match self {
            GateId::H => FRAC_1_SQRT_2,
            _ => 1.0,
        }
    }

    /// The operator `V` the channel realizes on the logical state.
    pub fn target(self) -> ComplexMatrix {
        let h = hadamard();
        match self {
            GateId::X(_) => Pauli::X.matrix(),
            GateId::Y(_) => Pauli::Y.matrix(),
            GateId::Z(_) => Pauli::Z.matrix(),
            GateId::H => h,
            GateId::Hsh => h.matmul(&ComplexMatrix::diagonal(&[ONE, C64::I])).matmul(&h),
            GateId::Hth => h
                .matmul(&ComplexMatrix::diagonal(&[ONE, C64::from_polar(1.0, FRAC_PI_4)]))
                .matmul(&h),
            GateId::HhCnotHh => {
                let hh = h.kron(&h);
                hh.matmul(&cnot()).matmul(&hh)
            }
        }
    }

    pub fn name(self) -> String {
        let suffix = |v: F0Variant| match v {
            F0Variant::Projector => "",
            F0Variant::Identity => "_F0=I",
        };
        match self {
            GateId::X(v) => format!("X{}", suffix(v)),
            GateId::Y(v) => format!("Y{}", suffix(v)),
            GateId::Z(v) => format!("Z{}", suffix(v)),
            GateId::H => "H".into(),
            GateId::Hsh => "HSH".into(),
            GateId::Hth => "HTH".into(),
            GateId::HhCnotHh => "HH_CNOT_HH".into(),
        }
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

/// `F_0` for `m` qubits.
pub fn f0_matrix(variant: F0Variant, m: usize) -> ComplexMatrix {
    let dim = 1usize << m;
    match variant {
        F0Variant::Identity => ComplexMatrix::identity(dim),
        F0Variant::Projector => {
            let mut p = ComplexMatrix::zeros(dim, dim);
            p[(0, 0)] = ONE;
            p
        }
    }
}

fn default_targets() -> Vec<usize> {
    Vec::new()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausPairChannel {
    pub n: usize,
    /// Qubits the pairs act on, first target most significant. Empty means
    /// the pairs are full `2^n` operators.
    #[serde(default = "default_targets", skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<usize>,
    pub pairs: Vec<(ComplexMatrix, ComplexMatrix)>,
    pub eta: Option<f64>,
}

impl KrausPairChannel {
    /// A channel whose pairs act on the full system. Checks both CPTP sums.
    pub fn new(pairs: Vec<(ComplexMatrix, ComplexMatrix)>, eta: Option<f64>) -> Result<Self> {
        let Some((k0, _)) = pairs.first() else {
            return Err(PqcError::Channel("a channel needs at least one pair".into()));
        };
        let n = match log2_exact(k0.rows()) {
            Some(n) if k0.is_square() => n,
            _ => return dim_err("Kraus operators must be square with power-of-two dimension"),
        };
        let ch = Self {
            n,
            targets: Vec::new(),
            pairs,
            eta,
        };
        ch.check_cptp()?;
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        let id = ComplexMatrix::identity(1 << n);
        Self {
            n,
            targets: Vec::new(),
            pairs: vec![(id.clone(), id)],
            eta: Some(1.0),
        }
    }

    /// Number of qubits the stored pairs act on.
    pub fn arity(&self) -> usize {
        if self.targets.is_empty() {
            self.n
        } else {
            self.targets.len()
        }
    }

    /// The targets in effect, `0..n` when the pairs are full operators.
    pub fn effective_targets(&self) -> Vec<usize> {
        if self.targets.is_empty() {
            (0..self.n).collect()
        } else {
            self.targets.clone()
        }
    }

    /// `sum K^dagger K = I` and `sum L^dagger L = I` on the stored operators.
    pub fn check_cptp(&self) -> Result<()> {
        let m = self.arity();
        let dim = 1usize << m;
        if m > self.n || self.pairs.is_empty() {
            return Err(PqcError::Channel("channel has no pairs or too many targets".into()));
        }
        for (i, &t) in self.targets.iter().enumerate() {
            if t >= self.n || self.targets[..i].contains(&t) {
                return dim_err(format!("invalid target list {:?} for {} qubits", self.targets, self.n));
            }
        }
        let mut sk = ComplexMatrix::zeros(dim, dim);
        let mut sl = ComplexMatrix::zeros(dim, dim);
        for (k, l) in &self.pairs {
            for op in [k, l] {
                if !op.is_square() || op.rows() != dim {
                    return dim_err(format!("Kraus operator of size {} on {m} qubits", op.rows()));
                }
            }
            sk += &k.adjoint().matmul(k);
            sl += &l.adjoint().matmul(l);
        }
        let id = ComplexMatrix::identity(dim);
        let defect = sk.max_abs_diff(&id).max(sl.max_abs_diff(&id));
        if !(defect < CPTP_TOL) {
            return Err(PqcError::Channel(format!("CPTP condition violated by {defect:e}")));
        }
        Ok(())
    }

    /// Places a full-system channel onto `targets` of an `n`-qubit system.
    pub fn embed(&self, targets: &[usize], n: usize) -> Result<Self> {
        if !self.targets.is_empty() {
            return Err(PqcError::Channel("channel is already embedded".into()));
        }
        if targets.len() != self.arity() {
            return dim_err(format!(
                "channel acts on {} qubits, {} targets given",
                self.arity(),
                targets.len()
            ));
        }
        for (i, &t) in targets.iter().enumerate() {
            if t >= n || targets[..i].contains(&t) {
                return dim_err(format!("invalid target list {targets:?} for {n} qubits"));
            }
        }
        Ok(Self {
            n,
            targets: targets.to_vec(),
            pairs: self.pairs.clone(),
            eta: self.eta,
        })
    }

    /// The pairs as full `2^n` operators.
    pub fn dense_pairs(&self) -> Result<Vec<(ComplexMatrix, ComplexMatrix)>> {
        if self.targets.is_empty() {
            return Ok(self.pairs.clone());
        }
        self.pairs
            .iter()
            .map(|(k, l)| Ok((embed(k, &self.targets, self.n)?, embed(l, &self.targets, self.n)?)))
            .collect()
    }

    /// `sum_i K_i (x) conj(L_i)` on `4^n` dimensions.
    pub fn cbe_operator(&self) -> Result<ComplexMatrix> {
        if self.n > MAX_CBE_QUBITS {
            return Err(PqcError::Size {
                what: "qubits",
                got: self.n,
                max: MAX_CBE_QUBITS,
            });
        }
        let dim = 1usize << (2 * self.n);
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (k, l) in self.dense_pairs()? {
            out += &k.kron(&l.conj());
        }
        Ok(out)
    }

    /// `K M L^dagger` for one stored pair, without densifying.
    fn sandwich(&self, k: &ComplexMatrix, m: &ComplexMatrix, l: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.targets.is_empty() {
            return Ok(k.matmul(m).matmul_adj(l));
        }
        let km = apply_local(k, &self.targets, self.n, m)?;
        Ok(apply_local(l, &self.targets, self.n, &km.adjoint())?.adjoint())
    }

    /// Applies the channel to a `2^{n+1}` density matrix, block by block.
    pub fn apply_rho(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = 1usize << self.n;
        if !rho.is_square() || rho.rows() != 2 * d {
            return dim_err(format!(
                "channel on {} qubits cannot act on a {}x{} state",
                self.n,
                rho.rows(),
                rho.cols()
            ));
        }
        let blocks = [
            rho.block(0, 0, d, d),
            rho.block(0, d, d, d),
            rho.block(d, 0, d, d),
            rho.block(d, d, d, d),
        ];
        let mut out = [
            ComplexMatrix::zeros(d, d),
            ComplexMatrix::zeros(d, d),
            ComplexMatrix::zeros(d, d),
            ComplexMatrix::zeros(d, d),
        ];
        for (k, l) in &self.pairs {
            out[0] += &self.sandwich(k, &blocks[0], k)?;
            out[1] += &self.sandwich(k, &blocks[1], l)?;
            out[2] += &self.sandwich(l, &blocks[2], k)?;
            out[3] += &self.sandwich(l, &blocks[3], l)?;
        }
        Ok(ComplexMatrix::from_blocks(&out[0], &out[1], &out[2], &out[3]))
    }

    /// Applies the channel and re-reads the encoding factor from the new block.
    pub fn apply(&self, state: &NdmeState) -> Result<NdmeState> {
        self.check_cptp()?;
        if state.n() != self.n {
            return dim_err(format!(
                "channel acts on {} qubits, state encodes {}",
                self.n,
                state.n()
            ));
        }
        NdmeState::from_rho(self.apply_rho(state.rho())?, self.n)
    }

    /// Channel doing `first` and then `then`: pairs `(K2 K1, L2 L1)`, eta multiplied.
    pub fn compose(first: &Self, then: &Self) -> Result<Self> {
        if first.n != then.n {
            return dim_err(format!("cannot compose channels on {} and {} qubits", first.n, then.n));
        }
        let same_targets = first.targets == then.targets;
        let (a, b) = if same_targets {
            (first.pairs.clone(), then.pairs.clone())
        } else {
            (first.dense_pairs()?, then.dense_pairs()?)
        };
        let mut pairs = Vec::with_capacity(a.len() * b.len());
        for (k2, l2) in &b {
            for (k1, l1) in &a {
                pairs.push((k2.matmul(k1), l2.matmul(l1)));
            }
        }
        let eta = match (first.eta, then.eta) {
            (Some(x), Some(y)) => Some(x * y),
            _ => None,
        };
        Ok(Self {
            n: first.n,
            targets: if same_targets {
                first.targets.clone()
            } else {
                Vec::new()
            },
            pairs,
            eta,
        })
    }
}

/// `max |cbe_operator(ch) - eta U_B^dagger (F0 (x) V) U_B|` for `F0` of the
/// given variant on all of `V`'s qubits.
pub fn verify_po(ch: &KrausPairChannel, v: &ComplexMatrix, f0: F0Variant, eta: f64) -> Result<f64> {
    let m = match log2_exact(v.rows()) {
        Some(m) if v.is_square() => m,
        _ => return dim_err("V must be square with power-of-two dimension"),
    };
    verify_po_with(ch, &f0_matrix(f0, m), v, eta)
}

/// [`verify_po`] against an explicit `F0`.
pub fn verify_po_with(ch: &KrausPairChannel, f0: &ComplexMatrix, v: &ComplexMatrix, eta: f64) -> Result<f64> {
    if v.rows() != 1 << ch.n || f0.rows() != v.rows() {
        return dim_err(format!(
            "channel on {} qubits checked against a {}-dim V",
            ch.n,
            v.rows()
        ));
    }
    let ub = bell_frame(ch.n)?;
    let target = ub.adjoint().matmul(&f0.kron(v)).matmul(&ub).scale_real(eta);
    Ok(ch.cbe_operator()?.max_abs_diff(&target))
}

fn pair(k: ComplexMatrix, l: ComplexMatrix, w: f64) -> (ComplexMatrix, ComplexMatrix) {
    (k.scale_real(w), l.scale_real(w))
}

fn paulis(s: &str) -> ComplexMatrix {
    s.chars()
        .map(|c| Pauli::from_char(c).expect("valid letter").matrix())
        .fold(ComplexMatrix::identity(1), |acc, m| acc.kron(&m))
}

/// The library construction for `g`, acting on qubits `0..arity`.
pub fn gate_channel(g: GateId) -> KrausPairChannel {
    let r2 = FRAC_1_SQRT_2;
    let pairs = match g {
        GateId::X(_) | GateId::Y(_) | GateId::Z(_) => {
            let letter = match g {
                GateId::X(_) => Pauli::X,
                GateId::Y(_) => Pauli::Y,
                _ => Pauli::Z,
            };
            return pauli_channel(&PauliString::new(Phase::PLUS_ONE, vec![letter]), g.f0_variant())
                .expect("real phase");
        }
        GateId::H => ["IX", "ZZ", "XI", "YY"]
            .iter()
            .map(|s| {
                let (k, l) = s.split_at(1);
                pair(paulis(k), paulis(l), 0.5)
            })
            .collect(),
        GateId::Hsh | GateId::Hth => {
            // L blocks carry conj(V) so that K (x) conj(L) reproduces V.
            let w = if g == GateId::Hsh {
                -C64::I
            } else {
                C64::from_polar(1.0, -FRAC_PI_4)
            };
            let p = (ONE + w) * 0.5;
            let q = (ONE - w) * 0.5;
            let l0 = ComplexMatrix::from_rows(&[vec![p, q], vec![q, p]]);
            let l1 = ComplexMatrix::from_rows(&[vec![q, p], vec![p, q]]);
            vec![
                pair(ComplexMatrix::identity(2), l0, r2),
                pair(Pauli::X.matrix(), l1, r2),
            ]
        }
        GateId::HhCnotHh => {
            // V permutes the X strings, so (V, V) carries S(psi) to S(V psi);
            // the {I, X} twirl projects F0 onto |00><00|.
            let v = g.target();
            ["II", "IX", "XI", "XX"]
                .iter()
                .map(|q| {
                    let k = paulis(q).matmul(&v);
                    pair(k.clone(), k, 0.5)
                })
                .collect()
        }
    };
    KrausPairChannel {
        n: g.arity(),
        targets: Vec::new(),
        pairs,
        eta: Some(g.eta()),
    }
}

/// Single-qubit building blocks: pairs realizing `+letter` with eta 1.
fn letter_pairs(letter: Pauli, f0: F0Variant) -> Vec<(ComplexMatrix, ComplexMatrix, f64)> {
    use Pauli::*;
    let m = |p: Pauli| p.matrix();
    match (f0, letter) {
        (F0Variant::Identity, I) => vec![(m(I), m(I), 1.0)],
        (F0Variant::Identity, X) => vec![(m(I), m(X), 1.0)],
        (F0Variant::Identity, Y) => vec![(m(Z), m(Y).scale_real(-1.0), 1.0)],
        (F0Variant::Identity, Z) => vec![(m(Z), m(Z), 1.0)],
        (F0Variant::Projector, I) => vec![(m(I), m(I), FRAC_1_SQRT_2), (m(X), m(X), FRAC_1_SQRT_2)],
        (F0Variant::Projector, X) => vec![(m(I), m(X), FRAC_1_SQRT_2), (m(X), m(I), FRAC_1_SQRT_2)],
        (F0Variant::Projector, Y) => vec![
            (m(Z), m(Y).scale_real(-1.0), FRAC_1_SQRT_2),
            (m(Y), m(Z), FRAC_1_SQRT_2),
        ],
        (F0Variant::Projector, Z) => vec![(m(Z), m(Z), FRAC_1_SQRT_2), (m(Y), m(Y), FRAC_1_SQRT_2)],
    }
}

/// Eta-1 channel realizing `V = p` for a Pauli string with phase `+-1`.
///
/// Per-qubit pairs are tensored; a `-1` phase goes on every `L` block.
pub fn pauli_channel(p: &PauliString, f0: F0Variant) -> Result<KrausPairChannel> {
    let sign = match p.phase() {
        Phase::PLUS_ONE => 1.0,
        Phase::MINUS_ONE => -1.0,
        other => return Err(PqcError::UnsupportedPhase(other.to_string())),
    };
    let mut acc = vec![(ComplexMatrix::identity(1), ComplexMatrix::identity(1), 1.0)];
    for &letter in p.letters() {
        let local = letter_pairs(letter, f0);
        acc = acc
            .iter()
            .flat_map(|(k, l, w)| local.iter().map(move |(k2, l2, w2)| (k.kron(k2), l.kron(l2), w * w2)))
            .collect();
    }
    let pairs = acc
        .into_iter()
        .map(|(k, l, w)| (k.scale_real(w), l.scale_real(w * sign)))
        .collect();
    Ok(KrausPairChannel {
        n: p.num_qubits(),
        targets: Vec::new(),
        pairs,
        eta: Some(1.0),
    })
}

/// Sanity audit: recomputes the residual of a library channel against its
/// declared `(F0, V, eta)`.
pub fn audit_gate(g: GateId) -> Result<f64> {
    verify_po(&gate_channel(g), &g.target(), g.f0_variant(), g.eta())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndme::{encode_state_optimal, AmplitudeVector};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn library_satisfies_block_encoding() {
        for g in GateId::ALL {
            let r = audit_gate(g).unwrap();
            assert!(r < 1e-12, "{g}: residual {r:e}");
            gate_channel(g).check_cptp().unwrap();
        }
    }

    #[test]
    fn wrong_eta_detected() {
        let r = verify_po(&gate_channel(GateId::H), &GateId::H.target(), F0Variant::Projector, 1.0).unwrap();
        assert!(r > 1e-3);
    }

    #[test]
    fn pair_counts_and_eta() {
        assert_eq!(gate_channel(GateId::H).pairs.len(), 4);
        assert_eq!(gate_channel(GateId::Hsh).pairs.len(), 2);
        assert_eq!(gate_channel(GateId::HhCnotHh).pairs.len(), 4);
        assert!((gate_channel(GateId::H).eta.unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        let l0 = &gate_channel(GateId::Hsh).pairs[0].1;
        assert!((l0[(0, 0)] - c(0.5, -0.5).scale(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((l0[(0, 1)] - c(0.5, 0.5).scale(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn cbe_examples() {
        let id = KrausPairChannel::identity(2);
        assert!(id.cbe_operator().unwrap().max_abs_diff(&ComplexMatrix::identity(16)) < 1e-15);

        let h = gate_channel(GateId::H).cbe_operator().unwrap();
        let mut want = paulis("IX");
        want += &paulis("ZZ");
        want += &paulis("XI");
        want.axpy(-ONE, &paulis("YY"));
        assert!(h.max_abs_diff(&want.scale_real(0.25)) < 1e-15);

        let x = gate_channel(GateId::X(F0Variant::Projector)).cbe_operator().unwrap();
        assert!(x.max_abs_diff(&(&paulis("IX") + &paulis("XI")).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn pauli_channel_examples() {
        let x: PauliString = "+X".parse().unwrap();
        let ch = pauli_channel(&x, F0Variant::Identity).unwrap();
        assert_eq!(ch.pairs, vec![(paulis("I"), paulis("X"))]);

        let z: PauliString = "+Z".parse().unwrap();
        let ch = pauli_channel(&z, F0Variant::Projector).unwrap();
        assert_eq!(ch.pairs.len(), 2);
        assert!(ch.pairs[1].0.max_abs_diff(&paulis("Y").scale_real(FRAC_1_SQRT_2)) < 1e-15);

        let mzz: PauliString = "-ZZ".parse().unwrap();
        let ch = pauli_channel(&mzz, F0Variant::Identity).unwrap();
        assert_eq!(ch.pairs, vec![(paulis("ZZ"), paulis("ZZ").scale_real(-1.0))]);
        assert!(verify_po(&ch, &mzz.matrix(), F0Variant::Identity, 1.0).unwrap() < 1e-12);

        let imag: PauliString = "+iX".parse().unwrap();
        assert!(matches!(
            pauli_channel(&imag, F0Variant::Identity),
            Err(PqcError::UnsupportedPhase(_))
        ));
    }

    #[test]
    fn multi_qubit_pauli_channels_verify() {
        for s in ["+XY", "-ZI", "+YZX", "-IXY"] {
            let p: PauliString = s.parse().unwrap();
            for f0 in [F0Variant::Identity, F0Variant::Projector] {
                let ch = pauli_channel(&p, f0).unwrap();
                ch.check_cptp().unwrap();
                assert!(verify_po(&ch, &p.matrix(), f0, 1.0).unwrap() < 1e-12, "{s} {f0:?}");
            }
        }
    }

    #[test]
    fn compose_examples() {
        let id = KrausPairChannel::identity(1);
        let both = KrausPairChannel::compose(&id, &id).unwrap();
        assert_eq!(both.eta, Some(1.0));
        assert!(both.cbe_operator().unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);

        let h = gate_channel(GateId::H);
        let hh = KrausPairChannel::compose(&h, &h).unwrap();
        assert!((hh.eta.unwrap() - 0.5).abs() < 1e-15);
        let r = verify_po(&hh, &ComplexMatrix::identity(2), F0Variant::Projector, 0.5).unwrap();
        assert!(r < 1e-12);

        let s = gate_channel(GateId::Hsh);
        let ss = KrausPairChannel::compose(&s, &s).unwrap();
        let r = verify_po(&ss, &Pauli::X.matrix(), F0Variant::Projector, 1.0).unwrap();
        assert!(r < 1e-12);
        ss.check_cptp().unwrap();
    }

    #[test]
    fn cbe_is_multiplicative() {
        let lib: Vec<_> = [
            GateId::H,
            GateId::Hsh,
            GateId::Hth,
            GateId::X(F0Variant::Identity),
            GateId::Y(F0Variant::Projector),
        ]
        .into_iter()
        .map(gate_channel)
        .collect();
        for a in &lib {
            for b in &lib {
                let ab = KrausPairChannel::compose(a, b).unwrap().cbe_operator().unwrap();
                let prod = b.cbe_operator().unwrap().matmul(&a.cbe_operator().unwrap());
                assert!(ab.max_abs_diff(&prod) < 1e-12);
            }
        }
    }

    #[test]
    fn embedded_channels_still_verify() {
        for n in 1..=3 {
            for q in 0..n {
                for g in [GateId::H, GateId::Hsh, GateId::Hth, GateId::Z(F0Variant::Projector)] {
                    let ch = gate_channel(g).embed(&[q], n).unwrap();
                    let f0 = embed(&f0_matrix(F0Variant::Projector, 1), &[q], n).unwrap();
                    let v = embed(&g.target(), &[q], n).unwrap();
                    let r = verify_po_with(&ch, &f0, &v, g.eta()).unwrap();
                    assert!(r < 1e-12, "{g} on {q} of {n}: {r:e}");
                }
            }
        }
        let ch = gate_channel(GateId::HhCnotHh).embed(&[2, 0], 3).unwrap();
        let f0 = embed(&f0_matrix(F0Variant::Projector, 2), &[2, 0], 3).unwrap();
        let v = embed(&GateId::HhCnotHh.target(), &[2, 0], 3).unwrap();
        assert!(verify_po_with(&ch, &f0, &v, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn local_application_matches_dense() {
        let psi = AmplitudeVector::normalized(vec![
            c(0.3, 0.1),
            c(-0.2, 0.5),
            c(0.1, 0.0),
            c(0.4, -0.2),
            c(0.0, 0.3),
            c(0.2, 0.2),
            c(-0.1, 0.1),
            c(0.3, 0.0),
        ])
        .unwrap();
        let state = encode_state_optimal(&psi).unwrap();
        let ch = gate_channel(GateId::HhCnotHh).embed(&[2, 1], 3).unwrap();
        let dense = KrausPairChannel {
            n: 3,
            targets: Vec::new(),
            pairs: ch.dense_pairs().unwrap(),
            eta: ch.eta,
        };
        let a = ch.apply_rho(state.rho()).unwrap();
        let b = dense.apply_rho(state.rho()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn identity_channel_leaves_state() {
        let psi = AmplitudeVector::normalized(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let state = encode_state_optimal(&psi).unwrap();
        let out = KrausPairChannel::identity(1).apply(&state).unwrap();
        assert!(out.rho().max_abs_diff(state.rho()) < 1e-15);
        assert!((out.gamma() - state.gamma()).abs() < 1e-15);
    }

    #[test]
    fn h_channel_on_plus() {
        let plus = AmplitudeVector::plus(1);
        let out = gate_channel(GateId::H)
            .apply(&encode_state_optimal(&plus).unwrap())
            .unwrap();
        let amps = out.amplitudes().as_slice();
        assert!((amps[0] - ONE).norm() < 1e-12 && amps[1].norm() < 1e-12);
        assert!((out.gamma() - 0.5 * FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn x_identity_variant_flips() {
        let zero = AmplitudeVector::basis(1, 0);
        let out = gate_channel(GateId::X(F0Variant::Identity))
            .apply(&encode_state_optimal(&zero).unwrap())
            .unwrap();
        let amps = out.amplitudes().as_slice();
        assert!(amps[0].norm() < 1e-12 && (amps[1] - ONE).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_cptp() {
        let bad = vec![(ComplexMatrix::identity(2).scale_real(2.0), ComplexMatrix::identity(2))];
        assert!(matches!(KrausPairChannel::new(bad, None), Err(PqcError::Channel(_))));
    }

    #[test]
    fn json_round_trip() {
        let ch = gate_channel(GateId::Hth).embed(&[1], 2).unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        let back: KrausPairChannel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);
    }
}

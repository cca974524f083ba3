//! `{H, S, T, CNOT}` circuits and their compilation into channel pipelines
//! realizing `V = H^n U H^n`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{bell_frame, ComplexMatrix, ONE, ZERO};
use crate::channels::{gate_channel, GateId, KrausPairChannel};
use crate::error::{PqcError, Result};
use crate::ndme::NdmeState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    T(usize),
    Cnot(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::S(q) | Gate::T(q) => vec![q],
            Gate::Cnot(c, t) => vec![c, t],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(q) => write!(f, "H {q}"),
            Gate::S(q) => write!(f, "S {q}"),
            Gate::T(q) => write!(f, "T {q}"),
            Gate::Cnot(c, t) => write!(f, "CNOT {c} {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, gates: Vec<Gate>) -> Result<Self> {
        for (i, g) in gates.iter().enumerate() {
            validate_gate(g, n).map_err(|msg| PqcError::Parse { line: i + 2, msg })?;
        }
        Ok(Self { n, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn hadamard_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::H(_))).count()
    }

    /// Renders the circuit in the text format accepted by [`parse_circuit`].
    pub fn to_text(&self) -> String {
        let mut s = format!("qubits {}\n", self.n);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}

fn validate_gate(g: &Gate, n: usize) -> std::result::Result<(), String> {
    for q in g.qubits() {
        if q >= n {
            return Err(format!("qubit index {q} out of range for {n} qubits"));
        }
    }
    if let Gate::Cnot(c, t) = g {
        if c == t {
            return Err(format!("CNOT needs distinct qubits, got {c} {t}"));
        }
    }
    Ok(())
}

/// Parses `qubits n` followed by one gate per line (`H q`, `S q`, `T q`,
/// `CNOT c t`). `#` starts a comment; blank lines are skipped.
pub fn parse_circuit(text: &str) -> Result<Circuit> {
    let mut n = None;
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| PqcError::Parse { line: line_no, msg };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad qubit index '{s}'")));
        let Some(num_qubits) = n else {
            match toks.as_slice() {
                ["qubits", k] => {
                    let k = k.parse::<usize>().map_err(|_| err(format!("bad qubit count '{k}'")))?;
                    if k == 0 {
                        return Err(err("qubit count must be positive".into()));
                    }
                    n = Some(k);
                    continue;
                }
                _ => return Err(err("expected 'qubits <n>' header".into())),
            }
        };
        let gate = match toks.as_slice() {
            ["H", q] => Gate::H(index(q)?),
            ["S", q] => Gate::S(index(q)?),
            ["T", q] => Gate::T(index(q)?),
            ["CNOT", c, t] => Gate::Cnot(index(c)?, index(t)?),
            _ => return Err(err(format!("unknown gate '{line}'"))),
        };
        validate_gate(&gate, num_qubits).map_err(err)?;
        gates.push(gate);
    }
    let n = n.ok_or(PqcError::Parse {
        line: 0,
        msg: "missing 'qubits <n>' header".into(),
    })?;
    Ok(Circuit { n, gates })
}

/// Ordered channel pipeline realizing `V = H^n U H^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledProgram {
    pub n: usize,
    pub channels: Vec<KrausPairChannel>,
    pub eta_total: f64,
    pub hadamard_count: usize,
}

impl CompiledProgram {
    /// `|0><0|` on every qubit touched by some gate, identity elsewhere: the
    /// `F_0` that the composed channel block-encodes against.
    pub fn f0_chain(circuit: &Circuit) -> ComplexMatrix {
        let n = circuit.num_qubits();
        let mut touched = vec![false; n];
        for g in circuit.gates() {
            for q in g.qubits() {
                touched[q] = true;
            }
        }
        let p0 = ComplexMatrix::diagonal(&[ONE, ZERO]);
        let id = ComplexMatrix::identity(2);
        touched.iter().fold(ComplexMatrix::identity(1), |acc, &t| {
            acc.kron(if t { &p0 } else { &id })
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| PqcError::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        for ch in &p.channels {
            ch.check_cptp()?;
        }
        Ok(p)
    }
}

/// Maps each gate `g` of `U` to the channel for `H g H`.
pub fn compile(circuit: &Circuit) -> Result<CompiledProgram> {
    let n = circuit.num_qubits();
    let mut channels = Vec::with_capacity(circuit.gates().len());
    let mut eta_total = 1.0;
    for g in circuit.gates() {
        let (id, targets) = match *g {
            Gate::H(q) => (GateId::H, vec![q]),
            Gate::S(q) => (GateId::Hsh, vec![q]),
            Gate::T(q) => (GateId::Hth, vec![q]),
            Gate::Cnot(c, t) => (GateId::HhCnotHh, vec![c, t]),
        };
        let ch = gate_channel(id).embed(&targets, n)?;
        eta_total *= ch.eta.unwrap_or(1.0);
        channels.push(ch);
    }
    Ok(CompiledProgram {
        n,
        channels,
        eta_total,
        hadamard_count: circuit.hadamard_count(),
    })
}

/// Applies the program's channels in order.
pub fn run_program(program: &CompiledProgram, input: &NdmeState) -> Result<NdmeState> {
    if input.n() != program.n {
        return Err(PqcError::Dimension(format!(
            "program acts on {} qubits, state has {}",
            program.n,
            input.n()
        )));
    }
    program
        .channels
        .iter()
        .try_fold(input.clone(), |state, ch| ch.apply(&state))
}

/// `2^{n/2+1} gamma0 2^{-k/2}`: the factor by which the Pauli-trace signal
/// exceeds the amplitude after a compiled circuit with `k` Hadamards.
pub fn predicted_signal_factor(n: usize, k: usize, gamma0: f64) -> f64 {
    2f64.powf(n as f64 / 2.0 + 1.0) * gamma0 * 2f64.powf(-(k as f64) / 2.0)
}

/// Residual of the composed block-encoding relation
/// `prod CBE_i = eta_total U_B^dagger (F0-chain (x) V) U_B` for a dense `V`.
pub fn program_cbe_residual(program: &CompiledProgram, circuit: &Circuit, v: &ComplexMatrix) -> Result<f64> {
    let n = program.n;
    let dim = 1usize << (2 * n);
    let mut product = ComplexMatrix::identity(dim);
    for ch in &program.channels {
        product = ch.cbe_operator()?.matmul(&product);
    }
    let ub = bell_frame(n)?;
    let target = ub
        .adjoint()
        .matmul(&CompiledProgram::f0_chain(circuit).kron(v))
        .matmul(&ub)
        .scale_real(program.eta_total);
    Ok(product.max_abs_diff(&target))
}

//! Pauli search: an `eta = 1/3` oracle channel that keeps `X (x) Q_x` and
//! flips every other `X (x) Q_alpha`, the protocol state it produces,
//! X-basis sampling with post-selection, and GF(2) recovery of `x`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{BitString, ComplexMatrix, PauliString, C64, ONE, ZERO};
use crate::channels::KrausPairChannel;
use crate::error::{dim_err, PqcError, Result};
use crate::gf2;

pub const SEARCH_ETA: f64 = 1.0 / 3.0;
pub const MAX_SEARCH_QUBITS: usize = 10;
pub const MAX_LITERAL_QUBITS: usize = 3;
pub const DEFAULT_RETRIES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOracle {
    n: usize,
    target: BitString,
}

impl SearchOracle {
    pub fn new(target: BitString) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return dim_err("target must have at least one bit");
        }
        if n > MAX_SEARCH_QUBITS {
            return Err(PqcError::Size {
                what: "qubits",
                got: n,
                max: MAX_SEARCH_QUBITS,
            });
        }
        Ok(Self { n, target })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn target(&self) -> &BitString {
        &self.target
    }

    pub fn eta(&self) -> f64 {
        SEARCH_ETA
    }

    /// `2/3 C_x + 1/3 C_I` through its block action.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = 1usize << self.n;
        check_dim(rho, d)?;
        let x = self.target.index();
        let scale = 1.0 / d as f64;
        let mut out = ComplexMatrix::zeros(2 * d, 2 * d);
        for (bi, bj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let (r0, c0) = (bi * d, bj * d);
            let twirl = twirl_profile(rho, r0, c0, d);
            let sign = if bi == bj { 1.0 } else { -1.0 };
            for a in 0..d {
                for b in 0..d {
                    out[(r0 + a, c0 + b)] = twirl[a ^ b] * (sign / 3.0);
                }
            }
            let cx = if bi == bj {
                // Tr(block) I / 2^n
                let tr: C64 = (0..d).map(|j| rho[(r0 + j, c0 + j)]).sum();
                for a in 0..d {
                    out[(r0 + a, c0 + a)] += tr * (2.0 / 3.0 * scale);
                }
                continue;
            } else {
                // upper-right: sum_j B[j, j^x]; lower-left: sum_j C[j^x, j]
                twirl[x] * d as f64
            };
            for a in 0..d {
                out[(r0 + a, c0 + (a ^ x))] += cx * (2.0 / 3.0 * scale);
            }
        }
        Ok(out)
    }

    /// The same mixture as an explicit Kraus-pair channel: `4^n` pairs
    /// `(|i><j|, |i^x><j^x|) / 2^{n/2}` and `2^n` pairs `(Q_i, -Q_i) / 2^{n/2}`.
    pub fn kraus_channel(&self) -> Result<KrausPairChannel> {
        let n = self.n;
        if n > MAX_LITERAL_QUBITS {
            return Err(PqcError::Size {
                what: "qubits",
                got: n,
                max: MAX_LITERAL_QUBITS,
            });
        }
        let d = 1usize << n;
        let x = self.target.index();
        let wx = (2.0 / 3.0 / d as f64).sqrt();
        let wi = (1.0 / 3.0 / d as f64).sqrt();
        let mut pairs = Vec::with_capacity(d * d + d);
        for i in 0..d {
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(i, j)] = C64::new(wx, 0.0);
                let mut l = ComplexMatrix::zeros(d, d);
                l[(i ^ x, j ^ x)] = C64::new(wx, 0.0);
                pairs.push((k, l));
            }
        }
        for i in 0..d {
            let q = PauliString::x_string(&BitString::from_index(i, n)).matrix();
            pairs.push((q.scale_real(wi), q.scale_real(-wi)));
        }
        KrausPairChannel::new(pairs, Some(SEARCH_ETA))
    }

    /// Literal Kraus sum, `n <= 3`.
    pub fn apply_kraus(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(rho, 1 << self.n)?;
        self.kraus_channel()?.apply_rho(rho)
    }
}

fn check_dim(rho: &ComplexMatrix, d: usize) -> Result<()> {
    if !rho.is_square() || rho.rows() != 2 * d {
        return dim_err(format!(
            "{}x{} matrix, expected {}x{}",
            rho.rows(),
            rho.cols(),
            2 * d,
            2 * d
        ));
    }
    Ok(())
}

/// `t(delta) = 2^{-n} sum_r M[r, r ^ delta]` for the `d x d` block at `(r0, c0)`.
fn twirl_profile(m: &ComplexMatrix, r0: usize, c0: usize, d: usize) -> Vec<C64> {
    let scale = 1.0 / d as f64;
    (0..d)
        .map(|delta| (0..d).map(|r| m[(r0 + r, c0 + (r ^ delta))]).sum::<C64>() * scale)
        .collect()
}

/// `2^{-(n+1)} (I + X (x) Q_alpha)`.
pub fn pauli_probe_state(alpha: &BitString) -> ComplexMatrix {
    let n = alpha.len();
    let d = 1usize << n;
    let a = alpha.index();
    let s = C64::new(1.0 / (2 * d) as f64, 0.0);
    let mut rho = ComplexMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        rho[(i, i)] = s;
        rho[(d + i, d + i)] = s;
        rho[(i, d + (i ^ a))] = s;
        rho[(d + i, i ^ a)] = s;
    }
    rho
}

/// `Tr((X (x) Q_alpha) rho)`.
pub fn x_parity_expectation(rho: &ComplexMatrix, alpha: &BitString) -> f64 {
    let d = 1usize << alpha.len();
    let a = alpha.index();
    (0..d).map(|i| (rho[(i, d + (i ^ a))] + rho[(d + i, i ^ a)]).re).sum()
}

/// `Tr((X (x) Q_alpha) C[probe_alpha])`: `+1/3` for the target, `-1/3` otherwise.
pub fn verification_expectation(o: &SearchOracle, alpha: &BitString) -> Result<f64> {
    alpha.check_len(o.n())?;
    Ok(x_parity_expectation(&o.apply(&pauli_probe_state(alpha))?, alpha))
}

/// `|+><+|` on `1 + n` qubits.
pub fn plus_state(n: usize) -> ComplexMatrix {
    let dim = 2usize << n;
    ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(1.0 / dim as f64, 0.0))
}

/// `eta/(1+eta) rho_sys + 1/(1+eta) C[rho_sys]` with `rho_sys = |+><+|`.
pub fn run_protocol(o: &SearchOracle) -> Result<ComplexMatrix> {
    let sys = plus_state(o.n());
    let mut out = o.apply(&sys)?.scale_real(1.0 / (1.0 + SEARCH_ETA));
    out.axpy(C64::new(SEARCH_ETA / (1.0 + SEARCH_ETA), 0.0), &sys);
    Ok(out)
}

/// `1/2 [[A, B], [B, A]]` with `A = 1/2 |+><+| + 1/2 2^{-n} I` and `B = 1/2 2^{-n} Q_x`.
pub fn protocol_closed_form(target: &BitString) -> ComplexMatrix {
    let n = target.len();
    let d = 1usize << n;
    let x = target.index();
    let inv = 1.0 / d as f64;
    let mut rho = ComplexMatrix::zeros(2 * d, 2 * d);
    for blk in [0, d] {
        for i in 0..d {
            for j in 0..d {
                let diag = if i == j { 0.5 * inv } else { 0.0 };
                rho[(blk + i, blk + j)] = C64::new(0.5 * (0.5 * inv + diag), 0.0);
            }
        }
    }
    for i in 0..d {
        rho[(i, d + (i ^ x))] = C64::new(0.25 * inv, 0.0);
        rho[(d + i, i ^ x)] = C64::new(0.25 * inv, 0.0);
    }
    rho
}

/// `p_beta = <v_beta| rho |v_beta>` with `|v_beta> = H^{(x)(n+1)} |beta>`,
/// `beta_0` being the assistant (most significant) bit.
pub fn x_basis_probabilities(rho: &ComplexMatrix) -> Result<Vec<f64>> {
    let dim = rho.rows();
    if !rho.is_square() || !dim.is_power_of_two() || dim < 2 {
        return dim_err(format!("{}x{} is not a multi-qubit state", rho.rows(), rho.cols()));
    }
    let mut g: Vec<C64> = (0..dim).map(|a| (0..dim).map(|r| rho[(r, r ^ a)]).sum()).collect();
    let mut h = 1;
    while h < dim {
        for start in (0..dim).step_by(2 * h) {
            for i in start..start + h {
                let (u, v) = (g[i], g[i + h]);
                g[i] = u + v;
                g[i + h] = u - v;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / dim as f64;
    Ok(g.iter().map(|z| (z.re * scale).max(0.0)).collect())
}

/// The two outcomes attributable to the unflipped component: `0...0` and `10...0`.
pub fn is_discarded(beta: usize, n: usize) -> bool {
    beta == 0 || beta == 1 << n
}

/// `beta_0 + x . beta_{1..n} = 0 (mod 2)`.
pub fn satisfies_parity(beta: usize, x: usize, n: usize) -> bool {
    let b0 = (beta >> n) & 1;
    let low = beta & ((1 << n) - 1);
    (b0 + (low & x).count_ones() as usize) % 2 == 0
}

/// Exact probability of keeping an outcome.
pub fn exact_acceptance(probs: &[f64], n: usize) -> f64 {
    1.0 - probs[0] - probs[1 << n]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub n: usize,
    pub seed: u64,
    pub outcomes: Vec<BitString>,
    pub accepted: Vec<BitString>,
}

impl SampleBatch {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted.len() as f64 / self.outcomes.len() as f64
    }
}

/// Seeded X-basis sampler over a fixed protocol state.
pub struct XBasisSampler {
    n: usize,
    dist: WeightedIndex<f64>,
}

impl XBasisSampler {
    pub fn new(rho_out: &ComplexMatrix) -> Result<Self> {
        let probs = x_basis_probabilities(rho_out)?;
        let n = probs.len().trailing_zeros() as usize - 1;
        let dist = WeightedIndex::new(&probs).map_err(|e| PqcError::Numeric(format!("bad distribution: {e}")))?;
        Ok(Self { n, dist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// One outcome as an `(n+1)`-bit index.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }
}

pub fn sample_x_basis(rho_out: &ComplexMatrix, shots: usize, seed: u64) -> Result<SampleBatch> {
    if shots == 0 {
        return Err(PqcError::State("shots must be at least 1".into()));
    }
    let sampler = XBasisSampler::new(rho_out)?;
    let n = sampler.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<usize> = (0..shots).map(|_| sampler.draw(&mut rng)).collect();
    Ok(SampleBatch {
        n,
        seed,
        outcomes: raw.iter().map(|&b| BitString::from_index(b, n + 1)).collect(),
        accepted: raw
            .iter()
            .filter(|&&b| !is_discarded(b, n))
            .map(|&b| BitString::from_index(b, n + 1))
            .collect(),
    })
}

fn split_outcome(beta: &BitString, n: usize) -> Result<(u64, bool)> {
    beta.check_len(n + 1)?;
    let idx = beta.index();
    Ok(((idx & ((1 << n) - 1)) as u64, (idx >> n) & 1 == 1))
}

/// Rank of the system bits of the accepted outcomes.
pub fn batch_rank(accepted: &[BitString], n: usize) -> Result<usize> {
    let rows = accepted
        .iter()
        .map(|b| split_outcome(b, n).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(gf2::rank64(&rows))
}

/// Solves `sum_l beta_l r_l = beta_0` over the accepted outcomes; the
/// solution `r` is the target.
pub fn extract_target(batch: &SampleBatch) -> Result<BitString> {
    let n = batch.n;
    let (rows, rhs): (Vec<u64>, Vec<bool>) = batch
        .accepted
        .iter()
        .map(|b| split_outcome(b, n))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let rank = gf2::rank64(&rows);
    if rank < n {
        return Err(PqcError::InsufficientRank { rank, needed: n });
    }
    let r = gf2::solve(&rows, &rhs, n)
        .ok_or_else(|| PqcError::Consistency("accepted outcomes are not parity-consistent".into()))?;
    Ok(BitString::from_index(r as usize, n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    /// One query per prepared copy of the protocol state, i.e. per sample.
    pub oracle_queries: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Batches of `n` accepted outcomes consumed, the last possibly partial.
    pub independence_batches: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: BitString,
    pub stats: SearchStats,
}

/// Draws accepted outcomes until their system bits reach rank `n`, then
/// solves. The first `n` form the initial batch; while it is rank deficient,
/// further outcomes are added one at a time, at most `max_retries * n` of them.
pub fn end_to_end_search(target: &BitString, seed: u64, max_retries: usize) -> Result<SearchOutcome> {
    let oracle = SearchOracle::new(target.clone())?;
    let sampler = XBasisSampler::new(&run_protocol(&oracle)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    search_with(&sampler, &mut rng, max_retries)
}

pub fn search_with<R: Rng + ?Sized>(sampler: &XBasisSampler, rng: &mut R, max_retries: usize) -> Result<SearchOutcome> {
    let n = sampler.n();
    let mut queries = 0u64;
    let mut accepted = Vec::with_capacity(2 * n);
    let mut draw_accepted = |accepted: &mut Vec<BitString>, queries: &mut u64| loop {
        let b = sampler.draw(rng);
        *queries += 1;
        if !is_discarded(b, n) {
            accepted.push(BitString::from_index(b, n + 1));
            return;
        }
    };
    for _ in 0..n {
        draw_accepted(&mut accepted, &mut queries);
    }
    let budget = n + max_retries * n;
    loop {
        let batch = SampleBatch {
            n,
            seed: 0,
            outcomes: Vec::new(),
            accepted,
        };
        match extract_target(&batch) {
            Ok(found) => {
                let count = batch.accepted.len() as u64;
                return Ok(SearchOutcome {
                    found,
                    stats: SearchStats {
                        oracle_queries: queries,
                        accepted: count,
                        acceptance_rate: count as f64 / queries as f64,
                        independence_batches: count.div_ceil(n as u64),
                    },
                });
            }
            Err(PqcError::InsufficientRank { .. }) if batch.accepted.len() < budget => {
                accepted = batch.accepted;
                draw_accepted(&mut accepted, &mut queries);
            }
            Err(PqcError::InsufficientRank { .. }) => return Err(PqcError::RetriesExhausted { retries: max_retries }),
            Err(e) => return Err(e),
        }
    }
}

/// Fraction of `trials` batches of `n` accepted outcomes that have full rank.
pub fn independence_rate(target: &BitString, trials: usize, seed: u64) -> Result<f64> {
    let oracle = SearchOracle::new(target.clone())?;
    let sampler = XBasisSampler::new(&run_protocol(&oracle)?)?;
    let n = sampler.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut full = 0usize;
    for _ in 0..trials {
        let mut rows = Vec::with_capacity(n);
        while rows.len() < n {
            let b = sampler.draw(&mut rng);
            if !is_discarded(b, n) {
                rows.push((b & ((1 << n) - 1)) as u64);
            }
        }
        if gf2::rank64(&rows) == n {
            full += 1;
        }
    }
    Ok(full as f64 / trials as f64)
}

/// `prod_{k<n} (2^n - 2^k) / (2^n - 1)^n`: chance that `n` uniform nonzero
/// vectors of `GF(2)^n` are independent.
pub fn independence_probability(n: usize) -> f64 {
    let q = (1u64 << n) as f64;
    (0..n).map(|k| (q - (1u64 << k) as f64) / (q - 1.0)).product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityScan {
    /// Exact `Tr((X (x) Q_alpha) rho_out)` per `alpha`.
    pub exact: Vec<f64>,
    /// Sample means of `(-1)^{beta_0 + alpha . beta}` per `alpha`.
    pub estimated: Vec<f64>,
    pub best: BitString,
}

/// Estimates every `X (x) Q_alpha` parity from raw X-basis samples and picks
/// the largest. Exponential in `n`; `n <= 4`.
pub fn parity_scan(target: &BitString, shots: usize, seed: u64) -> Result<ParityScan> {
    let n = target.len();
    if n > 4 {
        return Err(PqcError::Size {
            what: "qubits",
            got: n,
            max: 4,
        });
    }
    let rho = run_protocol(&SearchOracle::new(target.clone())?)?;
    let batch = sample_x_basis(&rho, shots, seed)?;
    let d = 1usize << n;
    let exact = (0..d)
        .map(|a| x_parity_expectation(&rho, &BitString::from_index(a, n)))
        .collect();
    let estimated: Vec<f64> = (0..d)
        .map(|a| {
            let s: i64 = batch
                .outcomes
                .iter()
                .map(|b| {
                    let (low, b0) = split_outcome(b, n).expect("outcome length");
                    let par = (low & a as u64).count_ones() as usize + usize::from(b0);
                    if par % 2 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .sum();
            s as f64 / shots as f64
        })
        .collect();
    let best = (0..d)
        .max_by(|&a, &b| estimated[a].total_cmp(&estimated[b]))
        .expect("at least one alpha");
    Ok(ParityScan {
        exact,
        estimated,
        best: BitString::from_index(best, n),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFit {
    pub coefficients: [f64; 3],
    pub std_errors: [f64; 3],
    /// Slope of the weighted straight-line fit.
    pub linear_slope: f64,
    pub linear_slope_se: f64,
}

impl QueryFit {
    /// Positive slope and a quadratic coefficient within `k` standard errors of zero.
    pub fn is_linear(&self, k: f64) -> bool {
        self.linear_slope > 0.0 && self.coefficients[2].abs() < k * self.std_errors[2]
    }
}

/// Weighted least squares of mean query counts on `1, n, n^2` and on `1, n`.
pub fn fit_query_scaling(ns: &[f64], means: &[f64], std_errors: &[f64]) -> Result<QueryFit> {
    if ns.len() < 4 || ns.len() != means.len() || ns.len() != std_errors.len() {
        return Err(PqcError::State("need at least four matching points".into()));
    }
    let (c, se) = weighted_poly_fit::<3>(ns, means, std_errors)?;
    let (l, lse) = weighted_poly_fit::<2>(ns, means, std_errors)?;
    Ok(QueryFit {
        coefficients: c,
        std_errors: se,
        linear_slope: l[1],
        linear_slope_se: lse[1],
    })
}

fn weighted_poly_fit<const K: usize>(xs: &[f64], ys: &[f64], sig: &[f64]) -> Result<([f64; K], [f64; K])> {
    use nalgebra::{DMatrix, DVector};
    let m = xs.len();
    let design = DMatrix::from_fn(m, K, |i, j| xs[i].powi(j as i32) / sig[i]);
    let rhs = DVector::from_fn(m, |i, _| ys[i] / sig[i]);
    let normal = design.transpose() * &design;
    let cov = normal
        .try_inverse()
        .ok_or_else(|| PqcError::Numeric("singular fit".into()))?;
    let beta = &cov * design.transpose() * rhs;
    let mut c = [0.0; K];
    let mut se = [0.0; K];
    for j in 0..K {
        c[j] = beta[j];
        se[j] = cov[(j, j)].sqrt();
    }
    Ok((c, se))
}

/// `H^{(x)(n+1)} (Z (x) Z^r) |+>^{(n+1)}`, as a dense vector.
pub fn logical_x_image(r: &BitString) -> Vec<C64> {
    let n = r.len();
    let dim = 2usize << n;
    let mask = (1usize << n) | r.index();
    let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let mut v: Vec<C64> = (0..dim)
        .map(|i| if (i & mask).count_ones() % 2 == 1 { -amp } else { amp })
        .collect();
    crate::algebra::walsh_hadamard(&mut v);
    v
}

/// Basis vector `|1>|r>` for the logical check.
pub fn logical_x_expected(r: &BitString) -> Vec<C64> {
    let n = r.len();
    let mut v = vec![ZERO; 2usize << n];
    v[(1usize << n) | r.index()] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::max_abs_diff_vec;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn random_rho(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
        let a = ComplexMatrix::from_fn(dim, dim, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = a.matmul_adj(&a);
        let t = m.trace();
        m.scale(t.inv())
    }

    #[test]
    fn verification_values() {
        for n in 1..=3 {
            for x in 0..1usize << n {
                let o = SearchOracle::new(BitString::from_index(x, n)).unwrap();
                for a in 0..1usize << n {
                    let v = verification_expectation(&o, &BitString::from_index(a, n)).unwrap();
                    let want = if a == x { 1.0 / 3.0 } else { -1.0 / 3.0 };
                    assert!((v - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pso_operator_action() {
        for n in 1..=3 {
            let d = 1usize << n;
            for x in 0..d {
                let o = SearchOracle::new(BitString::from_index(x, n)).unwrap();
                for a in 0..d {
                    let xa = PauliString::x_string(&BitString::from_index(a, n));
                    let full = PauliString::new(crate::algebra::Phase::PLUS_ONE, vec![crate::algebra::Pauli::X])
                        .tensor(&xa)
                        .matrix();
                    let sign = if a == x { 1.0 } else { -1.0 };
                    let want = full.scale_real(sign / 3.0);
                    assert!(o.apply(&full).unwrap().max_abs_diff(&want) < 1e-12);
                    assert!(o.apply_kraus(&full).unwrap().max_abs_diff(&want) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fast_path_matches_kraus() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..3 {
                let x = rng.random_range(0..1usize << n);
                let o = SearchOracle::new(BitString::from_index(x, n)).unwrap();
                let rho = random_rho(2 << n, &mut rng);
                let fast = o.apply(&rho).unwrap();
                assert!(fast.max_abs_diff(&o.apply_kraus(&rho).unwrap()) < 1e-12);
                assert!((fast.trace() - ONE).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unital() {
        let o = SearchOracle::new(bits("101")).unwrap();
        let mixed = ComplexMatrix::identity(16).scale_real(1.0 / 16.0);
        assert!(o.apply(&mixed).unwrap().max_abs_diff(&mixed) < 1e-15);
    }

    #[test]
    fn protocol_closed_form_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 1..=6 {
            let x = BitString::from_index(rng.random_range(0..1usize << n), n);
            let rho = run_protocol(&SearchOracle::new(x.clone()).unwrap()).unwrap();
            assert!(rho.max_abs_diff(&protocol_closed_form(&x)) < 1e-12);
            assert!((x_parity_expectation(&rho, &x) - 0.5).abs() < 1e-12);
            for a in 0..1usize << n {
                if a != x.index() {
                    assert!(x_parity_expectation(&rho, &BitString::from_index(a, n)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn probabilities_match_dense() {
        let x = bits("10");
        let rho = run_protocol(&SearchOracle::new(x).unwrap()).unwrap();
        let p = x_basis_probabilities(&rho).unwrap();
        let h = crate::algebra::hadamard_n(3);
        for (beta, &pb) in p.iter().enumerate() {
            let v: Vec<C64> = (0..8).map(|r| h[(r, beta)]).collect();
            let e = crate::algebra::inner(&v, &rho.mat_vec(&v));
            assert!((e.re - pb).abs() < 1e-14);
        }
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn acceptance_and_parity() {
        for n in 1..=8 {
            let x = BitString::from_index((0b1011_0110usize) & ((1 << n) - 1), n);
            let rho = run_protocol(&SearchOracle::new(x.clone()).unwrap()).unwrap();
            let p = x_basis_probabilities(&rho).unwrap();
            let want = 0.5 - 2f64.powi(-(n as i32 + 1));
            assert!((exact_acceptance(&p, n) - want).abs() < 1e-12);
            for (beta, &pb) in p.iter().enumerate() {
                if pb > 1e-14 && !is_discarded(beta, n) {
                    assert!(satisfies_parity(beta, x.index(), n), "n={n} beta={beta}");
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = run_protocol(&SearchOracle::new(bits("101")).unwrap()).unwrap();
        let a = sample_x_basis(&rho, 500, 9).unwrap();
        let b = sample_x_basis(&rho, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.accepted.iter().all(|b| satisfies_parity(b.index(), 0b101, 3)));
        assert!(sample_x_basis(&rho, 0, 9).is_err());
    }

    #[test]
    fn extract_examples() {
        let rho = run_protocol(&SearchOracle::new(bits("101")).unwrap()).unwrap();
        let mut batch = sample_x_basis(&rho, 60, 1).unwrap();
        batch.accepted.truncate(20);
        assert_eq!(extract_target(&batch).unwrap(), bits("101"));

        let dup = SampleBatch {
            n: 3,
            seed: 0,
            outcomes: vec![],
            accepted: vec![bits("0011"); 5],
        };
        assert!(matches!(
            extract_target(&dup),
            Err(PqcError::InsufficientRank { rank: 1, needed: 3 })
        ));

        let one = SampleBatch {
            n: 1,
            seed: 0,
            outcomes: vec![],
            accepted: vec![bits("11")],
        };
        assert_eq!(extract_target(&one).unwrap(), bits("1"));
    }

    #[test]
    fn end_to_end_examples() {
        let x = bits("10110");
        let r = end_to_end_search(&x, 7, DEFAULT_RETRIES).unwrap();
        assert_eq!(r.found, x);
        assert!(r.stats.oracle_queries >= 5);
        let x = bits("101100");
        assert_eq!(end_to_end_search(&x, 3, DEFAULT_RETRIES).unwrap().found, x);
    }

    #[test]
    fn independence_examples() {
        assert!((independence_probability(1) - 1.0).abs() < 1e-15);
        assert!((independence_probability(3) - 168.0 / 343.0).abs() < 1e-15);
        let r = independence_rate(&bits("1011"), 500, 4).unwrap();
        assert!(r >= 0.25, "{r}");
    }

    #[test]
    fn parity_scan_finds_target() {
        let s = parity_scan(&bits("110"), 4000, 2).unwrap();
        assert_eq!(s.best, bits("110"));
        assert!((s.exact[0b110] - 0.5).abs() < 1e-12);
        assert!(s.exact.iter().enumerate().all(|(a, &e)| a == 0b110 || e.abs() < 1e-12));
    }

    #[test]
    fn logical_operator_check() {
        for n in 1..=4 {
            for r in 0..1usize << n {
                let r = BitString::from_index(r, n);
                assert!(max_abs_diff_vec(&logical_x_image(&r), &logical_x_expected(&r)) < 1e-12);
            }
        }
    }

    #[test]
    fn query_fit_detects_shapes() {
        let ns = [3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let se = [0.1; 6];
        let lin: Vec<f64> = ns.iter().map(|n| 2.0 + 3.0 * n).collect();
        assert!(fit_query_scaling(&ns, &lin, &se).unwrap().is_linear(3.0));
        let quad: Vec<f64> = ns.iter().map(|n| 2.0 + n * n).collect();
        assert!(!fit_query_scaling(&ns, &quad, &se).unwrap().is_linear(3.0));
    }
}

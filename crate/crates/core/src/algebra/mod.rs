//! Dense complex linear algebra and Pauli-string bookkeeping.
//!
//! Vectorization is row-major: `O = sum o_ij |i><j|` maps to
//! `sum o_ij |i>|j>`, so entry `(i, j)` lands at index `i * d + j`. In the
//! resulting `2n`-qubit space the row-space qubits come first and the
//! column-space qubits follow; the Bell frame pairs qubit `j` with `n + j`.

mod eigen;
mod matrix;
mod pauli;

use std::collections::BTreeMap;

pub use eigen::{hermitian_eigen, min_eigenvalue, HermitianEigen};
pub use matrix::{inner, log2_exact, max_abs_diff_vec, vec_norm, ComplexMatrix, C64, I, ONE, ZERO};
pub use pauli::{BitString, Pauli, PauliAction, PauliString, Phase};

use crate::error::{dim_err, PqcError, Result};

/// Largest `n` accepted by [`pauli_decompose`].
pub const MAX_DECOMPOSE_QUBITS: usize = 8;
/// Largest `n` accepted by [`bell_frame`].
pub const MAX_BELL_FRAME_QUBITS: usize = 6;

/// `V[O] = sum o_ij |i>|j>`.
pub fn vectorize(o: &ComplexMatrix) -> Result<Vec<C64>> {
    if !o.is_square() {
        return dim_err(format!("cannot vectorize a {}x{} matrix", o.rows(), o.cols()));
    }
    Ok(o.as_slice().to_vec())
}

/// Inverse of [`vectorize`].
pub fn matrixize(v: &[C64]) -> Result<ComplexMatrix> {
    let len = v.len();
    match log2_exact(len) {
        Some(bits) if bits % 2 == 0 => {
            let d = 1usize << (bits / 2);
            ComplexMatrix::new(d, d, v.to_vec())
        }
        _ => dim_err(format!("vector length {len} is not a power of 4")),
    }
}

pub fn pauli_matrix(p: &PauliString) -> ComplexMatrix {
    p.matrix()
}

/// Both sides of `V[K O L^dagger] = (K (x) conj(L)) V[O]`: returns the block
/// product `K O L^dagger` and the vectorized-picture product.
pub fn kraus_block_identity(
    k: &ComplexMatrix,
    l: &ComplexMatrix,
    o: &ComplexMatrix,
) -> Result<(ComplexMatrix, Vec<C64>)> {
    let d = o.rows();
    if !o.is_square() || k.rows() != d || k.cols() != d || l.rows() != d || l.cols() != d {
        return dim_err("K, L and O must be square matrices of equal dimension");
    }
    let block = k.matmul(o).matmul_adj(l);
    let vec_side = k.kron(&l.conj()).mat_vec(&vectorize(o)?);
    Ok((block, vec_side))
}

/// Enumerates all `4^n` unsigned Pauli strings in base-4 order
/// (`I < X < Y < Z`, qubit 0 most significant).
pub fn all_pauli_strings(n: usize) -> impl Iterator<Item = PauliString> {
    const LETTERS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..1usize << (2 * n)).map(move |mut idx| {
        let mut letters = vec![Pauli::I; n];
        for q in (0..n).rev() {
            letters[q] = LETTERS[idx & 3];
            idx >>= 2;
        }
        PauliString::new(Phase::PLUS_ONE, letters)
    })
}

/// `Tr(P O)` using the signed-permutation structure of `P`.
pub fn pauli_trace(p: &PauliString, o: &ComplexMatrix) -> C64 {
    let act = p.action();
    (0..o.rows())
        .map(|col| {
            let (row, v) = act.apply(col);
            v * o[(col, row)]
        })
        .sum()
}

/// Pauli coefficients `2^{-n} Tr(P O)`; entries below `1e-14` are omitted.
pub fn pauli_decompose(o: &ComplexMatrix) -> Result<BTreeMap<PauliString, C64>> {
    if !o.is_square() {
        return dim_err("pauli_decompose needs a square matrix");
    }
    let n = o.num_qubits();
    if n > MAX_DECOMPOSE_QUBITS {
        return Err(PqcError::Size {
            what: "qubits",
            got: n,
            max: MAX_DECOMPOSE_QUBITS,
        });
    }
    let norm = 1.0 / (1usize << n) as f64;
    Ok(all_pauli_strings(n)
        .filter_map(|p| {
            let c = pauli_trace(&p, o) * norm;
            (c.norm() > 1e-14).then_some((p, c))
        })
        .collect())
}

/// Rebuilds `sum_P c_P P`.
pub fn pauli_recompose(n: usize, coeffs: &BTreeMap<PauliString, C64>) -> ComplexMatrix {
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (p, &c) in coeffs {
        let act = p.action();
        for col in 0..dim {
            let (row, v) = act.apply(col);
            out[(row, col)] += c * v;
        }
    }
    out
}

/// `U_B^{(x)n}` on `2n` qubits, `U_B = (H (x) I) CNOT` acting on each pair
/// `(j, n + j)` with qubit `j` as control.
///
/// Row-space index `a` and column-space index `b` map to
/// `2^{-n/2} sum_o (-1)^{|o & a|} |o>|a xor b>`.
pub fn bell_frame(n: usize) -> Result<ComplexMatrix> {
    if n > MAX_BELL_FRAME_QUBITS {
        return Err(PqcError::Size {
            what: "qubits",
            got: n,
            max: MAX_BELL_FRAME_QUBITS,
        });
    }
    let d = 1usize << n;
    let amp = (d as f64).sqrt().recip();
    let mut u = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let col = a * d + b;
            for o in 0..d {
                let sign = if (o & a).count_ones() % 2 == 1 { -amp } else { amp };
                u[(o * d + (a ^ b), col)] = C64::new(sign, 0.0);
            }
        }
    }
    Ok(u)
}

/// Embeds a `2^k x 2^k` operator acting on `targets` (in order, the first
/// target being the most significant bit of `op`'s index) into `n` qubits.
pub fn embed(op: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    let k = targets.len();
    if !op.is_square() || op.rows() != 1 << k {
        return dim_err(format!("operator of size {} does not act on {k} qubits", op.rows()));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n || targets[..i].contains(&t) {
            return dim_err(format!("invalid target list {targets:?} for {n} qubits"));
        }
    }
    let dim = 1usize << n;
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n - 1 - t)).collect();
    let all_mask: usize = masks.iter().sum();
    let local = |idx: usize| {
        masks
            .iter()
            .fold(0usize, |acc, &m| (acc << 1) | usize::from(idx & m != 0))
    };
    let spread = |sub: usize| {
        masks
            .iter()
            .enumerate()
            .filter(|(i, _)| (sub >> (k - 1 - i)) & 1 == 1)
            .fold(0usize, |acc, (_, &m)| acc | m)
    };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let rest = col & !all_mask;
        let sc = local(col);
        for sr in 0..1usize << k {
            let v = op[(sr, sc)];
            if v != ZERO {
                out[(rest | spread(sr), col)] = v;
            }
        }
    }
    Ok(out)
}

/// `embed(op, targets, n) * m` without forming the embedded operator.
pub fn apply_local(op: &ComplexMatrix, targets: &[usize], n: usize, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let k = targets.len();
    if !op.is_square() || op.rows() != 1 << k || m.rows() != 1 << n {
        return dim_err(format!(
            "cannot apply a {}-dim operator on {k} targets to a matrix with {} rows",
            op.rows(),
            m.rows()
        ));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n || targets[..i].contains(&t) {
            return dim_err(format!("invalid target list {targets:?} for {n} qubits"));
        }
    }
    let masks: Vec<usize> = targets.iter().map(|&t| 1usize << (n - 1 - t)).collect();
    let all_mask: usize = masks.iter().sum();
    let sub = 1usize << k;
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            (0..k)
                .filter(|i| (s >> (k - 1 - i)) & 1 == 1)
                .fold(0, |acc, i| acc | masks[i])
        })
        .collect();
    let cols = m.cols();
    let mut out = ComplexMatrix::zeros(m.rows(), cols);
    let mut gathered = vec![ZERO; sub];
    for rest in (0..m.rows()).filter(|r| r & all_mask == 0) {
        for c in 0..cols {
            for (s, &off) in offsets.iter().enumerate() {
                gathered[s] = m[(rest | off, c)];
            }
            for (sr, &off) in offsets.iter().enumerate() {
                let row = op.row(sr);
                out[(rest | off, c)] = row.iter().zip(&gathered).map(|(a, b)| a * b).sum();
            }
        }
    }
    Ok(out)
}

/// The single-qubit Hadamard matrix.
pub fn hadamard() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real(&[&[h, h], &[h, -h]])
}

/// `H^{(x)n}` as a dense matrix.
pub fn hadamard_n(n: usize) -> ComplexMatrix {
    let d = 1usize << n;
    let amp = (d as f64).sqrt().recip();
    ComplexMatrix::from_fn(d, d, |r, c| {
        if (r & c).count_ones() % 2 == 1 {
            C64::new(-amp, 0.0)
        } else {
            C64::new(amp, 0.0)
        }
    })
}

/// In-place normalized Walsh-Hadamard transform (`H^{(x)n} v`).
pub fn walsh_hadamard(v: &mut [C64]) {
    let len = v.len();
    assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let s = (len as f64).sqrt().recip();
    v.iter_mut().for_each(|z| *z *= s);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn arb_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim)
            .prop_map(move |v| ComplexMatrix::new(dim, dim, v.into_iter().map(|(a, b)| c(a, b)).collect()).unwrap())
    }

    #[test]
    fn pauli_bell_correspondence() {
        let r = [c(1.0, 0.0), ZERO, ZERO, c(1.0, 0.0)];
        assert_eq!(vectorize(&Pauli::I.matrix()).unwrap(), r);
        assert_eq!(
            vectorize(&Pauli::Y.matrix()).unwrap(),
            vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]
        );
        assert_eq!(vectorize(&Pauli::Z.matrix()).unwrap(), vec![ONE, ZERO, ZERO, -ONE]);
        assert_eq!(matrixize(&r).unwrap(), Pauli::I.matrix());
        assert_eq!(matrixize(&[ZERO, ONE, ONE, ZERO]).unwrap(), Pauli::X.matrix());
    }

    #[test]
    fn zero_matrix_vectorizes_to_zero() {
        assert!(vectorize(&ComplexMatrix::zeros(4, 4))
            .unwrap()
            .iter()
            .all(|z| *z == ZERO));
    }

    #[test]
    fn dimension_errors() {
        assert!(vectorize(&ComplexMatrix::zeros(2, 4)).is_err());
        assert!(matrixize(&[ONE; 8]).is_err());
        assert!(matrixize(&[ONE; 3]).is_err());
        let i2 = ComplexMatrix::identity(2);
        assert!(kraus_block_identity(&i2, &ComplexMatrix::identity(4), &i2).is_err());
    }

    #[test]
    fn kraus_block_identity_examples() {
        let o = ComplexMatrix::from_rows(&[vec![c(0.3, 0.1), c(-0.2, 0.5)], vec![c(0.7, 0.0), c(0.1, -0.9)]]);
        let id = ComplexMatrix::identity(2);
        let (block, v) = kraus_block_identity(&id, &id, &o).unwrap();
        assert_eq!(block, o);
        assert_eq!(v, vectorize(&o).unwrap());

        let p0 = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let (block, _) = kraus_block_identity(&Pauli::X.matrix(), &id, &p0).unwrap();
        assert_eq!(block, ComplexMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]]));
    }

    #[test]
    fn decomposition_examples() {
        let h = pauli_decompose(&hadamard()).unwrap();
        assert_eq!(h.len(), 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((h[&ps("X")] - c(s, 0.0)).norm() < 1e-15);
        assert!((h[&ps("Z")] - c(s, 0.0)).norm() < 1e-15);

        let p0 = ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let d = pauli_decompose(&p0).unwrap();
        assert_eq!(d.len(), 2);
        assert!((d[&ps("I")] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((d[&ps("Z")] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn decompose_rejects_large() {
        let m = ComplexMatrix::identity(1 << 9);
        assert!(matches!(pauli_decompose(&m), Err(PqcError::Size { .. })));
    }

    #[test]
    fn bell_frame_maps_identity_and_x_to_basis_states() {
        let ub = bell_frame(1).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let out_i = ub.mat_vec(&vectorize(&Pauli::I.matrix()).unwrap());
        let out_x = ub.mat_vec(&vectorize(&Pauli::X.matrix()).unwrap());
        let e = |k: usize| (0..4).map(|i| if i == k { ONE } else { ZERO }).collect::<Vec<_>>();
        let scaled = |v: Vec<C64>| v.into_iter().map(|z| z * s).collect::<Vec<_>>();
        assert!(max_abs_diff_vec(&scaled(out_i), &e(0)) < 1e-15);
        assert!(max_abs_diff_vec(&scaled(out_x), &e(1)) < 1e-15);
    }

    #[test]
    fn bell_frame_matches_circuit_definition() {
        // (H (x) I) CNOT assembled from gates.
        let cnot = ComplexMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let ub = hadamard().kron(&ComplexMatrix::identity(2)).matmul(&cnot);
        assert!(ub.max_abs_diff(&bell_frame(1).unwrap()) < 1e-15);

        // n = 2: pairs (0,2) and (1,3).
        let two = embed(&ub, &[0, 2], 4).unwrap().matmul(&embed(&ub, &[1, 3], 4).unwrap());
        assert!(two.max_abs_diff(&bell_frame(2).unwrap()) < 1e-15);
    }

    #[test]
    fn bell_frame_n2_on_x_identity() {
        let ub = bell_frame(2).unwrap();
        let v = vectorize(&ps("XI").matrix()).unwrap();
        let out: Vec<C64> = ub.mat_vec(&v).into_iter().map(|z| z * 0.5).collect();
        // |0>|0>|1>|0> = index 0b0010.
        let mut expected = vec![ZERO; 16];
        expected[0b0010] = ONE;
        assert!(max_abs_diff_vec(&out, &expected) < 1e-15);
    }

    #[test]
    fn bell_frame_is_unitary_and_maps_every_x_string() {
        for n in 1..=3 {
            let ub = bell_frame(n).unwrap();
            let d = 1usize << n;
            let id = ComplexMatrix::identity(d * d);
            assert!(ub.matmul(&ub.adjoint()).max_abs_diff(&id) < 1e-12);
            let norm = (d as f64).sqrt().recip();
            for alpha in 0..d {
                let q = PauliString::x_string(&BitString::from_index(alpha, n));
                let out = ub.mat_vec(&vectorize(&q.matrix()).unwrap());
                for (i, z) in out.iter().enumerate() {
                    let want = if i == alpha { 1.0 } else { 0.0 };
                    assert!((z * norm - want).norm() < 1e-12);
                }
            }
        }
        assert!(bell_frame(7).is_err());
    }

    #[test]
    fn embed_matches_kron_on_adjacent_qubits() {
        let x = Pauli::X.matrix();
        let got = embed(&x, &[1], 3).unwrap();
        let want = ComplexMatrix::identity(2).kron(&x).kron(&ComplexMatrix::identity(2));
        assert_eq!(got, want);
        let cnot = ComplexMatrix::from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        // Reversed control/target equals (H(x)H) CNOT (H(x)H).
        let hh = hadamard().kron(&hadamard());
        let rev = embed(&cnot, &[1, 0], 2).unwrap();
        assert!(rev.max_abs_diff(&hh.matmul(&cnot).matmul(&hh)) < 1e-15);
    }

    #[test]
    fn walsh_hadamard_matches_dense() {
        let v: Vec<C64> = (0..8).map(|i| c(i as f64, 1.0 - i as f64)).collect();
        let mut w = v.clone();
        walsh_hadamard(&mut w);
        assert!(max_abs_diff_vec(&w, &hadamard_n(3).mat_vec(&v)) < 1e-12);
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(m in arb_matrix(4)) {
            prop_assert_eq!(matrixize(&vectorize(&m).unwrap()).unwrap(), m);
        }

        #[test]
        fn matrixize_round_trip(v in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let v: Vec<C64> = v.into_iter().map(|(a, b)| c(a, b)).collect();
            prop_assert_eq!(vectorize(&matrixize(&v).unwrap()).unwrap(), v);
        }

        #[test]
        fn vectorize_is_linear(a in arb_matrix(4), b in arb_matrix(4), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let (s, t) = (c(s, 0.3), c(-0.1, t));
            let lhs = vectorize(&(&a.scale(s) + &b.scale(t))).unwrap();
            let va = vectorize(&a).unwrap();
            let vb = vectorize(&b).unwrap();
            let rhs: Vec<C64> = va.iter().zip(&vb).map(|(x, y)| s * x + t * y).collect();
            prop_assert!(max_abs_diff_vec(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn kraus_block_identity_holds(n in 1usize..=3, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = 1 << n;
            let mut rand_m = || ComplexMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (k, l, o) = (rand_m(), rand_m(), rand_m());
            let (block, v) = kraus_block_identity(&k, &l, &o).unwrap();
            prop_assert!(max_abs_diff_vec(&vectorize(&block).unwrap(), &v) < 1e-12);
        }

        #[test]
        fn pauli_products_close(a in "[IXYZ]{3}", b in "[IXYZ]{3}", pa in 0u8..4, pb in 0u8..4) {
            let a = ps(&a).with_phase(Phase::from_power(pa));
            let b = ps(&b).with_phase(Phase::from_power(pb));
            let prod = a.mul(&b).unwrap();
            prop_assert_eq!(prod.matrix(), a.matrix().matmul(&b.matrix()));
        }

        #[test]
        fn hermitian_decomposition_resynthesizes(m in arb_matrix(4)) {
            let h = &m + &m.adjoint();
            let coeffs = pauli_decompose(&h).unwrap();
            prop_assert!(coeffs.values().all(|z| z.im.abs() < 1e-12));
            prop_assert!(pauli_recompose(2, &coeffs).max_abs_diff(&h) < 1e-12);
        }
    }
}

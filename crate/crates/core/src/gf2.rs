//! Bit-packed linear algebra over GF(2).

/// Rank of the rows, each a bit vector packed into a `u128`.
pub fn rank(rows: &[u128]) -> usize {
    let mut basis: Vec<u128> = Vec::new();
    for &r in rows {
        let mut v = r;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Solves `A x = b` where row `i` of `A` is `rows[i]` (bit `j` is column `j`)
/// and `b_i` is `rhs[i]`. Returns one solution, or `None` if inconsistent.
/// Free variables are set to zero.
pub fn solve(rows: &[u64], rhs: &[bool], cols: usize) -> Option<u64> {
    assert_eq!(rows.len(), rhs.len());
    let mut m: Vec<(u64, bool)> = rows.iter().copied().zip(rhs.iter().copied()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let bit = 1u64 << c;
        let Some(p) = (r..m.len()).find(|&i| m[i].0 & bit != 0) else {
            continue;
        };
        m.swap(r, p);
        let (pr, pb) = m[r];
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row.0 & bit != 0 {
                row.0 ^= pr;
                row.1 ^= pb;
            }
        }
        pivots.push(c);
        r += 1;
    }
    if m[r..].iter().any(|&(_, b)| b) {
        return None;
    }
    let mut x = 0u64;
    for (i, &c) in pivots.iter().enumerate() {
        if m[i].1 {
            x |= 1 << c;
        }
    }
    Some(x)
}

/// Rank of `u64` rows.
pub fn rank64(rows: &[u64]) -> usize {
    rank(&rows.iter().map(|&r| u128::from(r)).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[]), 0);
        assert_eq!(rank(&[0b11, 0b01, 0b10]), 2);
        assert_eq!(rank64(&[0b100, 0b010, 0b001]), 3);
        assert_eq!(rank(&[0, 0]), 0);
    }

    #[test]
    fn solve_examples() {
        // x0 ^ x1 = 1, x1 = 1
        assert_eq!(solve(&[0b11, 0b10], &[true, true], 2), Some(0b10));
        assert_eq!(solve(&[0b1, 0b1], &[true, false], 1), None);
    }

    proptest! {
        #[test]
        fn solve_recovers_planted(x in 0u64..256, rows in proptest::collection::vec(0u64..256, 8..16)) {
            let rhs: Vec<bool> = rows.iter().map(|r| (r & x).count_ones() % 2 == 1).collect();
            let y = solve(&rows, &rhs, 8).unwrap();
            for (r, b) in rows.iter().zip(&rhs) {
                prop_assert_eq!((r & y).count_ones() % 2 == 1, *b);
            }
            if rank64(&rows) == 8 {
                prop_assert_eq!(y, x);
            }
        }
    }
}

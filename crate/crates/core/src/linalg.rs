//! Dense Gaussian elimination over a [`Field`].

use crate::ring::Field;

/// Relative pivot threshold for float matrices.
const FLOAT_SINGULAR_RTOL: f64 = 1e-13;

/// Solves `a x = b` for square `a`. Returns `None` when `a` is singular
/// (exactly, or numerically for floats).
pub fn solve<F: Field>(a: &[Vec<F>], b: &[F]) -> Option<Vec<F>> {
    let n = a.len();
    assert_eq!(b.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let mut m: Vec<Vec<F>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            assert_eq!(row.len(), n, "matrix must be square");
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let scale = a
        .iter()
        .flatten()
        .map(|v| v.pivot_weight())
        .fold(0.0f64, f64::max);
    for col in 0..n {
        let (piv, weight) = (col..n)
            .map(|r| (r, m[r][col].pivot_weight()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty pivot range");
        if weight == 0.0 || (!F::EXACT && weight <= FLOAT_SINGULAR_RTOL * scale) {
            return None;
        }
        m.swap(col, piv);
        let pivot = m[col][col].clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].div(&pivot);
            for c in col..=n {
                let delta = factor.mul(&m[col][c]);
                m[r][c] = m[r][c].sub(&delta);
            }
        }
    }
    let mut x: Vec<F> = vec![b[0].zero_like(); n];
    for r in (0..n).rev() {
        let mut acc = m[r][n].clone();
        for c in r + 1..n {
            acc = acc.sub(&m[r][c].mul(&x[c]));
        }
        x[r] = acc.div(&m[r][r]);
    }
    Some(x)
}

pub fn mat_vec<F: Field>(a: &[Vec<F>], x: &[F]) -> Vec<F> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(x[0].zero_like(), |acc, (aij, xj)| acc.add(&aij.mul(xj)))
        })
        .collect()
}

/// Inverse of a square matrix, `None` if singular.
pub fn inverse<F: Field>(a: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = a.len();
    let zero = a[0][0].zero_like();
    let one = zero.one_like();
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let e: Vec<F> = (0..n).map(|i| if i == k { one.clone() } else { zero.clone() }).collect();
        cols.push(solve(a, &e)?);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_solve() {
        let a = vec![vec![r(0, 1), r(2, 1)], vec![r(3, 1), r(1, 1)]];
        let x = solve(&a, &[r(4, 1), r(5, 1)]).unwrap();
        assert_eq!(x, vec![r(1, 1), r(2, 1)]);
        let sing = vec![vec![r(1, 1), r(2, 1)], vec![r(1, 2), r(1, 1)]];
        assert!(solve(&sing, &[r(1, 1), r(1, 1)]).is_none());
    }

    #[test]
    fn float_solve_and_singular() {
        let a = vec![vec![1e-3, 2.0], vec![3.0, 1.0]];
        let x = solve(&a, &[2.001, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
        let sing = vec![vec![1.0, 2.0], vec![2.0, 4.0 + 1e-16]];
        assert!(solve(&sing, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn inverse_roundtrip() {
        let a = vec![
            vec![r(2, 1), r(1, 1), r(0, 1)],
            vec![r(1, 3), r(0, 1), r(1, 1)],
            vec![r(0, 1), r(5, 1), r(1, 2)],
        ];
        let inv = inverse(&a).unwrap();
        for i in 0..3 {
            let col: Vec<BigRational> = (0..3).map(|k| inv[k][i].clone()).collect();
            let e = mat_vec(&a, &col);
            for (k, v) in e.iter().enumerate() {
                assert_eq!(*v, if k == i { r(1, 1) } else { r(0, 1) });
            }
        }
    }
}

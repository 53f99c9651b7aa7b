use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Smith normal form `U * M * V = D` of an integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    /// Nonzero diagonal entries `d1 | d2 | ...`, all positive.
    pub factors: Vec<BigInt>,
    pub left: Vec<Vec<BigInt>>,
    pub right: Vec<Vec<BigInt>>,
    pub diagonal: Vec<Vec<BigInt>>,
}

type IMat = Vec<Vec<BigInt>>;

fn identity(n: usize) -> IMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect()
}

fn swap_cols(m: &mut IMat, a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

/// `row[dst] += k * row[src]`
fn add_row(m: &mut IMat, dst: usize, src: usize, k: &BigInt) {
    let src_row = m[src].clone();
    for (d, s) in m[dst].iter_mut().zip(src_row) {
        *d += k * s;
    }
}

/// `col[dst] += k * col[src]`
fn add_col(m: &mut IMat, dst: usize, src: usize, k: &BigInt) {
    for row in m.iter_mut() {
        let s = row[src].clone();
        row[dst] += k * s;
    }
}

fn negate_row(m: &mut IMat, r: usize) {
    for x in m[r].iter_mut() {
        *x = -x.clone();
    }
}

/// Smith normal form with unimodular transforms.
pub fn smith_normal_form(m: &[Vec<i64>]) -> SmithForm {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut d: IMat = m
        .iter()
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut u = identity(rows);
    let mut v = identity(cols);

    let mut t = 0;
    while t < rows.min(cols) {
        // Pivot: smallest nonzero absolute value in the trailing block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !d[i][j].is_zero() && best.is_none_or(|(bi, bj)| d[i][j].abs() < d[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        d.swap(t, pi);
        u.swap(t, pi);
        swap_cols(&mut d, t, pj);
        swap_cols(&mut v, t, pj);

        let mut clean = true;
        for i in t + 1..rows {
            if d[i][t].is_zero() {
                continue;
            }
            let q = -d[i][t].div_floor(&d[t][t]);
            add_row(&mut d, i, t, &q);
            add_row(&mut u, i, t, &q);
            if !d[i][t].is_zero() {
                clean = false;
            }
        }
        for j in t + 1..cols {
            if d[t][j].is_zero() {
                continue;
            }
            let q = -d[t][j].div_floor(&d[t][t]);
            add_col(&mut d, j, t, &q);
            add_col(&mut v, j, t, &q);
            if !d[t][j].is_zero() {
                clean = false;
            }
        }
        if !clean {
            // Remainders are strictly smaller than the pivot; re-pivot.
            continue;
        }
        // Divisibility: fold any offending row into the pivot row and retry.
        let offending =
            (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !(&d[i][j] % &d[t][t]).is_zero()));
        if let Some(i) = offending {
            let one = BigInt::one();
            add_row(&mut d, t, i, &one);
            add_row(&mut u, t, i, &one);
            continue;
        }
        if d[t][t].is_negative() {
            negate_row(&mut d, t);
            negate_row(&mut u, t);
        }
        t += 1;
    }

    let factors = (0..rows.min(cols))
        .map(|i| d[i][i].clone())
        .filter(|x| !x.is_zero())
        .collect();
    SmithForm {
        factors,
        left: u,
        right: v,
        diagonal: d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_mul(a: &IMat, b: &IMat) -> IMat {
        let n = a.len();
        let m = b.first().map_or(0, |r| r.len());
        let k = b.len();
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (0..k).map(|l| &a[i][l] * &b[l][j]).sum())
                    .collect()
            })
            .collect()
    }

    fn to_big(m: &[Vec<i64>]) -> IMat {
        m.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    fn check(m: &[Vec<i64>]) -> SmithForm {
        let s = smith_normal_form(m);
        assert_eq!(mat_mul(&mat_mul(&s.left, &to_big(m)), &s.right), s.diagonal);
        for w in s.factors.windows(2) {
            assert!((&w[1] % &w[0]).is_zero());
        }
        s
    }

    fn factors(m: &[Vec<i64>]) -> Vec<i64> {
        check(m)
            .factors
            .iter()
            .map(|x| x.try_into().unwrap())
            .collect()
    }

    #[test]
    fn diagonal_input() {
        assert_eq!(factors(&[vec![2, 0], vec![0, 4]]), vec![2, 4]);
        assert_eq!(factors(&[vec![4, 0], vec![0, 6]]), vec![2, 12]);
    }

    #[test]
    fn quaternion_relations_n3() {
        assert_eq!(factors(&[vec![3, -2], vec![2, 0]]), vec![1, 4]);
    }

    #[test]
    fn zero_matrix_has_no_factors() {
        assert!(factors(&[vec![0, 0], vec![0, 0], vec![0, 0]]).is_empty());
    }

    #[test]
    fn rectangular() {
        assert_eq!(factors(&[vec![5, 0], vec![0, 2], vec![-3, 2]]), vec![1, 2]);
    }
}

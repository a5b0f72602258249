//! Dense univariate integer polynomials for Bareiss elimination on matrices
//! whose entries involve at most one variable. Coefficients are stored low
//! degree first with no trailing zeros; the zero polynomial is empty.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

pub(crate) type Dense = Vec<BigInt>;

fn trim(mut p: Dense) -> Dense {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn mul(a: &[BigInt], b: &[BigInt]) -> Dense {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(out)
}

fn sub(mut a: Dense, b: &[BigInt]) -> Dense {
    if a.len() < b.len() {
        a.resize(b.len(), BigInt::zero());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x -= y;
    }
    trim(a)
}

/// `a / d` for `d` dividing `a` exactly.
fn exact_div(mut a: Dense, d: &[BigInt]) -> Dense {
    let lc = d.last().expect("division by zero polynomial");
    if d.len() == 1 {
        return a.into_iter().map(|x| x / lc).collect();
    }
    if a.len() < d.len() {
        debug_assert!(a.is_empty(), "inexact polynomial division");
        return Vec::new();
    }
    let shift = d.len() - 1;
    let mut q = vec![BigInt::zero(); a.len() - shift];
    for k in (0..q.len()).rev() {
        let top = std::mem::take(&mut a[k + shift]);
        if top.is_zero() {
            continue;
        }
        let (c, r) = top.div_rem(lc);
        debug_assert!(r.is_zero(), "inexact coefficient division");
        for (j, dj) in d[..shift].iter().enumerate() {
            if !dj.is_zero() {
                a[k + j] -= &c * dj;
            }
        }
        q[k] = c;
    }
    debug_assert!(a.iter().all(Zero::is_zero), "inexact polynomial division");
    trim(q)
}

pub(crate) fn bareiss(mut m: Vec<Vec<Dense>>) -> Dense {
    let n = m.len();
    if n == 0 {
        return vec![BigInt::one()];
    }
    let mut negate = false;
    let mut prev: Dense = vec![BigInt::one()];
    for k in 0..n - 1 {
        let Some(pivot) = (k..n).find(|&i| !m[i][k].is_empty()) else {
            return Vec::new();
        };
        if pivot != k {
            m.swap(pivot, k);
            negate = !negate;
        }
        let (top, rest) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in rest.iter_mut() {
            let rk = std::mem::take(&mut row[k]);
            for j in k + 1..n {
                let t = sub(mul(&row[j], &pivot_row[k]), &mul(&rk, &pivot_row[j]));
                row[j] = exact_div(t, &prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = std::mem::take(&mut m[n - 1][n - 1]);
    if negate {
        det.into_iter().map(|x| -x).collect()
    } else {
        det
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(xs: &[i64]) -> Dense {
        trim(xs.iter().map(|&x| BigInt::from(x)).collect())
    }

    #[test]
    fn division_inverts_multiplication() {
        let a = d(&[3, 0, -2, 5]);
        let b = d(&[-1, 4]);
        assert_eq!(exact_div(mul(&a, &b), &b), a);
        assert_eq!(exact_div(d(&[6, 12]), &d(&[3])), d(&[2, 4]));
    }

    #[test]
    fn two_by_two_and_singular() {
        // [[x, 1], [2, x]] -> x^2 - 2
        let m = vec![vec![d(&[0, 1]), d(&[1])], vec![d(&[2]), d(&[0, 1])]];
        assert_eq!(bareiss(m), d(&[-2, 0, 1]));
        let m = vec![vec![d(&[1, 1]), d(&[2, 2])], vec![d(&[1]), d(&[2])]];
        assert!(bareiss(m).is_empty());
    }
}

//! Exact linear solves over the rationals.
//!
//! Two routes: fraction-free (Bareiss) elimination on dense integer matrices,
//! used for small systems, and sparse rational elimination with a cheap
//! fill-reducing pivot rule for the large, very sparse systems produced by
//! energy unfoldings.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Rat;

/// Systems with at most this many unknowns go to the dense solver.
const DENSE_LIMIT: usize = 16;

/// A sparse row: `(column, coefficient)` pairs.
pub type SparseRow = Vec<(usize, Rat)>;

/// Solves `A x = b` for square `A` given as sparse rows. Returns `None` when
/// the system is singular.
pub fn solve(rows: Vec<SparseRow>, b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    debug_assert_eq!(rows.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    if n <= DENSE_LIMIT {
        let mut a = vec![vec![Rat::zero(); n]; n];
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                a[i][j] += v;
            }
        }
        bareiss_solve(&a, &b)
    } else {
        sparse_solve(rows, b)
    }
}

/// Fraction-free Gaussian elimination. Each row is first scaled to integers;
/// the elimination then stays in the integers and only divides exactly.
pub fn bareiss_solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = b.len();
    // augmented integer matrix
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut l = BigInt::one();
        for v in a[i].iter().chain(std::iter::once(&b[i])) {
            l = l.lcm(v.denom());
        }
        let row: Vec<BigInt> = a[i]
            .iter()
            .chain(std::iter::once(&b[i]))
            .map(|v| v.numer() * (&l / v.denom()))
            .collect();
        m.push(row);
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, p);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
            m[i][k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![Rat::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rat::from_integer(m[i][n].clone());
        for j in i + 1..n {
            if !m[i][j].is_zero() {
                acc -= Rat::from_integer(m[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / Rat::from_integer(m[i][i].clone());
    }
    Some(x)
}

/// Sparse rational elimination. The pivot is taken from the shortest
/// remaining row, in the column with the fewest remaining occurrences.
pub fn sparse_solve(rows: Vec<SparseRow>, b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    let mut a: Vec<BTreeMap<usize, Rat>> = Vec::with_capacity(n);
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rows.into_iter().enumerate() {
        let mut r: BTreeMap<usize, Rat> = BTreeMap::new();
        for (j, v) in row {
            *r.entry(j).or_insert_with(Rat::zero) += v;
        }
        r.retain(|_, v| !v.is_zero());
        for &j in r.keys() {
            cols[j].insert(i);
        }
        a.push(r);
    }
    let mut b = b;
    let mut done = vec![false; n];
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(n);

    for _ in 0..n {
        let pr = (0..n)
            .filter(|&i| !done[i])
            .min_by_key(|&i| (a[i].len(), i))?;
        if a[pr].is_empty() {
            return None;
        }
        let pc = *a[pr]
            .keys()
            .min_by_key(|&&j| (cols[j].len(), j))
            .expect("nonempty row");
        done[pr] = true;
        for &j in a[pr].keys() {
            cols[j].remove(&pr);
        }
        let pivot = a[pr][&pc].clone();
        let targets: Vec<usize> = cols[pc].iter().copied().collect();
        let prow: Vec<(usize, Rat)> = a[pr].iter().map(|(&j, v)| (j, v.clone())).collect();
        let pb = b[pr].clone();
        for i in targets {
            let f = a[i][&pc].clone() / &pivot;
            for (j, v) in &prow {
                let delta = &f * v;
                let entry = a[i].entry(*j).or_insert_with(Rat::zero);
                *entry -= delta;
                if entry.is_zero() {
                    a[i].remove(j);
                    cols[*j].remove(&i);
                } else {
                    cols[*j].insert(i);
                }
            }
            a[i].remove(&pc);
            cols[pc].remove(&i);
            let fb = &f * &pb;
            b[i] -= fb;
        }
        order.push((pr, pc));
    }

    let mut x = vec![Rat::zero(); n];
    for &(r, c) in order.iter().rev() {
        let mut acc = b[r].clone();
        for (&j, v) in &a[r] {
            if j != c {
                acc -= v * &x[j];
            }
        }
        x[c] = acc / &a[r][&c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_small_system_exactly() {
        // x + y = 3, x - y = 1/2
        let a = vec![vec![int(1), int(1)], vec![int(1), int(-1)]];
        let x = bareiss_solve(&a, &[int(3), rat(1, 2)]).unwrap();
        assert_eq!(x, vec![rat(7, 4), rat(5, 4)]);
    }

    #[test]
    fn singular_is_detected() {
        let a = vec![vec![int(1), int(2)], vec![int(2), int(4)]];
        assert!(bareiss_solve(&a, &[int(1), int(1)]).is_none());
        let rows = vec![vec![(0, int(1)), (1, int(2))], vec![(0, int(2)), (1, int(4))]];
        assert!(sparse_solve(rows, vec![int(1), int(1)]).is_none());
    }

    #[test]
    fn dense_and_sparse_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let n = rng.gen_range(1..8);
            let mut rows: Vec<SparseRow> = Vec::new();
            for i in 0..n {
                // diagonally dominant, hence nonsingular
                let mut row = vec![(i, int(10))];
                for j in 0..n {
                    if j != i && rng.gen_bool(0.4) {
                        row.push((j, rat(rng.gen_range(-4..5), rng.gen_range(1..5))));
                    }
                }
                rows.push(row);
            }
            let b: Vec<Rat> = (0..n).map(|_| rat(rng.gen_range(-9..10), 3)).collect();
            let mut dense = vec![vec![Rat::zero(); n]; n];
            for (i, r) in rows.iter().enumerate() {
                for (j, v) in r {
                    dense[i][*j] += v;
                }
            }
            let x1 = bareiss_solve(&dense, &b).unwrap();
            let x2 = sparse_solve(rows, b.clone()).unwrap();
            assert_eq!(x1, x2);
            for i in 0..n {
                let lhs: Rat = (0..n).map(|j| &dense[i][j] * &x1[j]).sum();
                assert_eq!(lhs, b[i]);
            }
        }
    }
}

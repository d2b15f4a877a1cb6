//! Action of a generator's matrix exponential on a vector, by
//! uniformization: with `m = max |diag|`, `P = I + L/m` is stochastic, so
//! `exp(tL) v = e^{-mt} sum_k (mt)^k/k! P^k v` converges with nonnegative
//! weights and no cancellation, and the Poisson tail bounds the truncation
//! error by `tail * max|v|`.

use crate::sparse::SparseOperator;

/// Compute `exp(t L) v` for a conservative generator `L`, to absolute
/// accuracy `tol * max|v|`.
pub fn expm_action(gen: &SparseOperator, v: &[f64], t: f64, tol: f64) -> Vec<f64> {
    assert_eq!(gen.nrows(), gen.ncols());
    assert_eq!(v.len(), gen.ncols());
    assert!(t >= 0.0 && tol > 0.0);
    let m = (0..gen.nrows())
        .map(|r| gen.get(r, r).abs())
        .fold(0.0, f64::max);
    if m == 0.0 || t == 0.0 {
        return v.to_vec();
    }
    // keep the leading Poisson weight representable
    let steps = (m * t / 200.0).ceil().max(1.0) as usize;
    if steps > 1 {
        let dt = t / steps as f64;
        let mut cur = v.to_vec();
        for _ in 0..steps {
            cur = expm_action(gen, &cur, dt, tol / steps as f64);
        }
        return cur;
    }
    let mt = m * t;
    let mut weight = (-mt).exp(); // Poisson(mt) mass at k = 0
    let mut accounted = weight;
    let mut term = v.to_vec(); // P^k v
    let mut acc: Vec<f64> = term.iter().map(|x| weight * x).collect();
    let mut next = vec![0.0; v.len()];
    let mut k = 0u64;
    while 1.0 - accounted > tol {
        k += 1;
        // next = P term = term + (L term) / m
        gen.matvec_into(&term, &mut next);
        for (n, &tv) in next.iter_mut().zip(&term) {
            *n = tv + *n / m;
        }
        std::mem::swap(&mut term, &mut next);
        weight *= mt / k as f64;
        accounted += weight;
        for (a, &tv) in acc.iter_mut().zip(&term) {
            *a += weight * tv;
        }
        if k > 1_000_000 {
            break;
        }
    }
    acc
}

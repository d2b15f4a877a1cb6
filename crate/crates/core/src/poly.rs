//! Degree-capped multivariate polynomial arithmetic, generic over the
//! coefficient ring so the same expansion code runs in exact rational and
//! floating-point arithmetic.

use num::traits::{One, Zero};
use std::collections::BTreeMap;
use std::ops::{Add, Mul};

/// A polynomial in `nvars` commuting variables, truncated to total degree
/// `cap`. Terms map exponent vectors (deterministically ordered) to
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly<T> {
    nvars: usize,
    cap: u32,
    terms: BTreeMap<Vec<u16>, T>,
}

impl<T> MultiPoly<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    pub fn zero(nvars: usize, cap: u32) -> Self {
        MultiPoly {
            nvars,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, cap: u32, value: T) -> Self {
        let mut p = Self::zero(nvars, cap);
        if !value.is_zero() {
            p.terms.insert(vec![0; nvars], value);
        }
        p
    }

    /// `c0 + sum_l coeffs[l] * z_l`.
    pub fn affine(nvars: usize, cap: u32, c0: T, coeffs: &[T]) -> Self {
        assert_eq!(coeffs.len(), nvars);
        let mut p = Self::constant(nvars, cap, c0);
        for (l, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0u16; nvars];
                e[l] = 1;
                p.add_term(e, c.clone());
            }
        }
        p
    }

    fn add_term(&mut self, expo: Vec<u16>, coeff: T) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(expo) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let cap = self.cap.min(other.cap);
        let mut out = Self::zero(self.nvars, cap);
        for (ea, ca) in &self.terms {
            let da: u32 = ea.iter().map(|&e| u32::from(e)).sum();
            for (eb, cb) in &other.terms {
                let db: u32 = eb.iter().map(|&e| u32::from(e)).sum();
                if da + db > cap {
                    continue;
                }
                let expo: Vec<u16> = ea.iter().zip(eb).map(|(&a, &b)| a + b).collect();
                out.add_term(expo, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, mut k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, self.cap, T::one());
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn coeff(&self, expo: &[u16]) -> T {
        self.terms.get(expo).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &T)> {
        self.terms.iter()
    }
}

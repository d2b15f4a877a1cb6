//! Charlier polynomials, Poisson weights, and the multi-species product
//! kernel built from them.
//!
//! Evaluation uses the explicit terminating hypergeometric sum with exact
//! integer falling-factorial products and one floating division per term,
//! rather than the three-term recurrence.

use crate::error::{Error, Result};
use crate::statespace::SiteConfig;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveLambda(lambda))
    }
}

/// Charlier polynomial `C_m(z, lambda)` at non-negative integer arguments:
/// the finite sum over `k` of `(-m)_k (-z)_k / k! * (-1/lambda)^k`.
pub fn charlier(m: u32, z: u32, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let kmax = m.min(z);
    let mut sum = 0.0;
    // (-m)_k (-z)_k (-1)^k = falling(m, k) * falling(z, k), cancelled signs
    let mut falling: u128 = 1;
    let mut k_factorial: f64 = 1.0;
    let mut lambda_pow: f64 = 1.0;
    for k in 0..=kmax {
        if k > 0 {
            falling *= u128::from(m - k + 1) * u128::from(z - k + 1);
            k_factorial *= f64::from(k);
            lambda_pow *= -lambda;
        }
        sum += falling as f64 / (k_factorial * lambda_pow);
    }
    Ok(sum)
}

/// Product Poisson mass `prod_i lambda^{xi_i} / xi_i! * exp(-lambda)`.
pub fn poisson_weight(xi: &SiteConfig, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut w = 1.0;
    for &c in xi.counts() {
        let mut factor = (-lambda).exp();
        for k in 1..=c {
            factor *= lambda / f64::from(k);
        }
        w *= factor;
    }
    Ok(w)
}

/// The species-factorized kernel `prod_i exp(lambda) * C_{xi_i}(eta_i, lambda)`.
pub fn product_kernel(xi: &SiteConfig, eta: &SiteConfig, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if xi.len() != eta.len() {
        return Err(Error::DimensionMismatch {
            expected: xi.len(),
            found: eta.len(),
        });
    }
    let mut value = 1.0;
    for (&m, &z) in xi.counts().iter().zip(eta.counts()) {
        value *= lambda.exp() * charlier(m, z, lambda)?;
    }
    Ok(value)
}

/// Table of `exp(lambda) * C_m(z, lambda)` for `m <= max_m`, `z <= max_z`.
/// Row index is the first polynomial argument.
pub fn kernel_table(max_m: u32, max_z: u32, lambda: f64) -> Result<nalgebra::DMatrix<f64>> {
    check_lambda(lambda)?;
    let mut t = nalgebra::DMatrix::zeros(max_m as usize + 1, max_z as usize + 1);
    for m in 0..=max_m {
        for z in 0..=max_z {
            t[(m as usize, z as usize)] = lambda.exp() * charlier(m, z, lambda)?;
        }
    }
    Ok(t)
}

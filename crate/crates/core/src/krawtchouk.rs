//! Parameter families for multivariate Krawtchouk polynomials, evaluation of
//! the polynomials by two independent routes, multinomial weights, and the
//! orthogonality sums.
//!
//! A family is the 4-tuple `(nu, p, p_hat, U)` with `p_0 = p_hat_0 = 1/nu`,
//! a bordered matrix `U` (first row and column all ones) and
//! `nu P U Phat U^T = I`. Families constructed from a rational probability
//! vector keep an exact rational backing; polynomial expansion then runs in
//! exact arithmetic whenever the degree allows it.

use crate::error::{Error, Result};
use crate::poly::MultiPoly;
use crate::statespace::{compositions_desc, SiteConfig};
use nalgebra::DMatrix;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::BigRational;
use rand::Rng;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

/// Largest capacity for which rational-backed families expand the generating
/// function exactly; beyond this the floating route is used.
pub const EXACT_DEGREE_MAX: u32 = 8;

/// Residual tolerance on the defining identity for floating validation.
pub const KAPPA_RESIDUAL_TOL: f64 = 1e-12;

type Rat = BigRational;

/// Exact rational backing of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKappa {
    pub nu: Rat,
    pub p: Vec<Rat>,
    pub p_hat: Vec<Rat>,
    /// Row-major, `(n+1) x (n+1)`.
    pub u: Vec<Vec<Rat>>,
}

/// A validated 4-tuple parametrizing a multivariate Krawtchouk family.
#[derive(Debug, Clone)]
pub struct Kappa {
    nu: f64,
    p: Vec<f64>,
    p_hat: Vec<f64>,
    u: DMatrix<f64>,
    exact: Option<ExactKappa>,
}

/// The change-of-basis matrix `R = Phat U^T` (overall scalar fixed to 1) and
/// its inverse `Q = nu P U`, which is exact whenever the family is valid.
#[derive(Debug, Clone)]
pub struct RMatrix {
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    /// `max |R Q - I|`, recorded at construction.
    pub identity_residual: f64,
}

fn check_probability(which: &'static str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotAProbability {
            which,
            detail: "empty vector".into(),
        });
    }
    if let Some(&bad) = p.iter().find(|&&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::NotAProbability {
            which,
            detail: format!("entry {bad} is not strictly positive"),
        });
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > KAPPA_RESIDUAL_TOL {
        return Err(Error::NotAProbability {
            which,
            detail: format!("entries sum to {total}"),
        });
    }
    Ok(())
}

/// Check the three defining conditions plus probability constraints and wrap
/// the tuple into a [`Kappa`].
pub fn validate_kappa(nu: f64, p: &[f64], p_hat: &[f64], u: &DMatrix<f64>) -> Result<Kappa> {
    let n1 = p.len();
    if p_hat.len() != n1 || u.nrows() != n1 || u.ncols() != n1 || n1 < 2 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            found: p_hat.len().max(u.nrows()).max(u.ncols()),
        });
    }
    check_probability("p", p)?;
    check_probability("p_hat", p_hat)?;
    // condition (1): p_0 = p_hat_0 = 1/nu
    let inv_nu = 1.0 / nu;
    if (p[0] - inv_nu).abs() > KAPPA_RESIDUAL_TOL || (p_hat[0] - inv_nu).abs() > KAPPA_RESIDUAL_TOL
    {
        return Err(Error::KappaCondition1 {
            p0: p[0],
            p_hat0: p_hat[0],
            inv_nu,
        });
    }
    // condition (2): bordered matrix
    for k in 0..n1 {
        if (u[(k, 0)] - 1.0).abs() > KAPPA_RESIDUAL_TOL {
            return Err(Error::KappaCondition2 {
                row: k,
                col: 0,
                value: u[(k, 0)],
            });
        }
        if (u[(0, k)] - 1.0).abs() > KAPPA_RESIDUAL_TOL {
            return Err(Error::KappaCondition2 {
                row: 0,
                col: k,
                value: u[(0, k)],
            });
        }
    }
    // condition (3): nu P U Phat U^T = I
    let residual = kappa_identity_residual(nu, p, p_hat, u);
    if residual > KAPPA_RESIDUAL_TOL {
        return Err(Error::KappaCondition3 {
            residual,
            tol: KAPPA_RESIDUAL_TOL,
        });
    }
    Ok(Kappa {
        nu,
        p: p.to_vec(),
        p_hat: p_hat.to_vec(),
        u: u.clone(),
        exact: None,
    })
}

/// `max |nu P U Phat U^T - I|`.
pub fn kappa_identity_residual(nu: f64, p: &[f64], p_hat: &[f64], u: &DMatrix<f64>) -> f64 {
    let n1 = p.len();
    let mut residual: f64 = 0.0;
    for i in 0..n1 {
        for j in 0..n1 {
            let mut acc = 0.0;
            for k in 0..n1 {
                acc += nu * p[i] * u[(i, k)] * p_hat[k] * u[(j, k)];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((acc - target).abs());
        }
    }
    residual
}

// Weighted orthogonalization of (1, e_1, ..., e_n) under
// <a, b> = nu * sum_k p_k a_k b_k, columns rescaled to unit top entry.
// Returns (columns of U, p_hat). Generic so the rational path stays exact.
fn gram_schmidt_columns<T>(p: &[T]) -> std::result::Result<(Vec<Vec<T>>, Vec<T>), &'static str>
where
    T: Clone
        + Zero
        + One
        + PartialEq
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>,
{
    let n1 = p.len();
    let nu = T::one() / p[0].clone();
    let dot = |a: &[T], b: &[T]| -> T {
        let mut acc = T::zero();
        for k in 0..n1 {
            acc = acc + nu.clone() * p[k].clone() * a[k].clone() * b[k].clone();
        }
        acc
    };
    let mut cols: Vec<Vec<T>> = vec![vec![T::one(); n1]];
    let mut norms: Vec<T> = vec![dot(&cols[0], &cols[0])];
    for l in 1..n1 {
        let mut v = vec![T::zero(); n1];
        v[l] = T::one();
        for m in 0..l {
            let coeff = dot(&v, &cols[m]) / norms[m].clone();
            for k in 0..n1 {
                v[k] = v[k].clone() - coeff.clone() * cols[m][k].clone();
            }
        }
        if v[0].is_zero() {
            return Err("zero leading entry while rescaling");
        }
        let lead = v[0].clone();
        for entry in &mut v {
            *entry = entry.clone() / lead.clone();
        }
        let norm = dot(&v, &v);
        if norm.is_zero() {
            return Err("rank deficiency");
        }
        norms.push(norm);
        cols.push(v);
    }
    let p_hat: Vec<T> = norms.into_iter().map(|s| T::one() / s).collect();
    Ok((cols, p_hat))
}

impl Kappa {
    /// Build a family from a strictly positive probability vector by weighted
    /// orthogonalization. The result always satisfies [`validate_kappa`].
    pub fn from_p(p: &[f64]) -> Result<Kappa> {
        check_probability("p", p)?;
        let (cols, p_hat) =
            gram_schmidt_columns(p).map_err(|m| Error::DegenerateFamily(m.into()))?;
        let n1 = p.len();
        let mut u = DMatrix::zeros(n1, n1);
        for (l, col) in cols.iter().enumerate() {
            for k in 0..n1 {
                u[(k, l)] = col[k];
            }
        }
        validate_kappa(1.0 / p[0], p, &p_hat, &u)
    }

    /// Exact counterpart of [`Kappa::from_p`]; the family carries a rational
    /// backing and the defining identity holds with zero residual.
    pub fn from_rational_p(p: &[Rat]) -> Result<Kappa> {
        if p.iter().any(|x| !x.is_positive()) || p.iter().sum::<Rat>() != Rat::one() {
            return Err(Error::NotAProbability {
                which: "p",
                detail: "rational entries must be positive and sum to 1".into(),
            });
        }
        let (cols, p_hat) =
            gram_schmidt_columns(p).map_err(|m| Error::DegenerateFamily(m.into()))?;
        let n1 = p.len();
        let mut u = vec![vec![Rat::zero(); n1]; n1];
        for (l, col) in cols.iter().enumerate() {
            for k in 0..n1 {
                u[k][l] = col[k].clone();
            }
        }
        let exact = ExactKappa {
            nu: Rat::one() / p[0].clone(),
            p: p.to_vec(),
            p_hat,
            u,
        };
        Kappa::from_exact(exact)
    }

    /// Wrap an exact tuple, verifying the defining conditions in rational
    /// arithmetic before deriving the floating view.
    pub fn from_exact(exact: ExactKappa) -> Result<Kappa> {
        let n1 = exact.p.len();
        let to_f = |x: &Rat| x.to_f64().unwrap_or(f64::NAN);
        if exact.nu.clone() * exact.p[0].clone() != Rat::one()
            || exact.p[0] != exact.p_hat[0]
        {
            return Err(Error::KappaCondition1 {
                p0: to_f(&exact.p[0]),
                p_hat0: to_f(&exact.p_hat[0]),
                inv_nu: to_f(&(Rat::one() / exact.nu.clone())),
            });
        }
        for k in 0..n1 {
            if exact.u[k][0] != Rat::one() {
                return Err(Error::KappaCondition2 {
                    row: k,
                    col: 0,
                    value: to_f(&exact.u[k][0]),
                });
            }
            if exact.u[0][k] != Rat::one() {
                return Err(Error::KappaCondition2 {
                    row: 0,
                    col: k,
                    value: to_f(&exact.u[0][k]),
                });
            }
        }
        for i in 0..n1 {
            for j in 0..n1 {
                let mut acc = Rat::zero();
                for k in 0..n1 {
                    acc += exact.nu.clone()
                        * exact.p[i].clone()
                        * exact.u[i][k].clone()
                        * exact.p_hat[k].clone()
                        * exact.u[j][k].clone();
                }
                let target = if i == j { Rat::one() } else { Rat::zero() };
                if acc != target {
                    return Err(Error::KappaCondition3 {
                        residual: to_f(&(acc - target)),
                        tol: 0.0,
                    });
                }
            }
        }
        let p: Vec<f64> = exact.p.iter().map(&to_f).collect();
        let p_hat: Vec<f64> = exact.p_hat.iter().map(&to_f).collect();
        let mut u = DMatrix::zeros(n1, n1);
        for k in 0..n1 {
            for l in 0..n1 {
                u[(k, l)] = to_f(&exact.u[k][l]);
            }
        }
        let mut kappa = validate_kappa(to_f(&exact.nu), &p, &p_hat, &u)?;
        kappa.exact = Some(exact);
        Ok(kappa)
    }

    /// Bypass validation. Intended for negative controls and diagnostics;
    /// downstream checks on such a tuple are expected to fail.
    pub fn unchecked(nu: f64, p: Vec<f64>, p_hat: Vec<f64>, u: DMatrix<f64>) -> Kappa {
        Kappa {
            nu,
            p,
            p_hat,
            u,
            exact: None,
        }
    }

    /// Draw a family from a random probability vector bounded away from the
    /// simplex boundary (keeps the bordered matrix well conditioned).
    pub fn random(species: usize, rng: &mut impl Rng) -> Kappa {
        let raw: Vec<f64> = (0..=species).map(|_| 0.3 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        Kappa::from_p(&p).expect("positive probability vector")
    }

    /// Number of particle species `n` (the tuple lives on `n + 1` classes).
    pub fn species(&self) -> usize {
        self.p.len() - 1
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p_hat(&self) -> &[f64] {
        &self.p_hat
    }

    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn exact(&self) -> Option<&ExactKappa> {
        self.exact.as_ref()
    }

    /// The tuple with the roles of `p` and `p_hat` swapped and `U`
    /// transposed, which is again a valid family.
    pub fn swapped(&self) -> Result<Kappa> {
        validate_kappa(self.nu, &self.p_hat, &self.p, &self.u.transpose())
    }

    pub fn r_matrix(&self) -> RMatrix {
        let n1 = self.p.len();
        let mut r = DMatrix::zeros(n1, n1);
        let mut q = DMatrix::zeros(n1, n1);
        for k in 0..n1 {
            for l in 0..n1 {
                // r_{kl} = p_hat_k u_{lk}, q_{kl} = nu p_k u_{kl}
                r[(k, l)] = self.p_hat[k] * self.u[(l, k)];
                q[(k, l)] = self.nu * self.p[k] * self.u[(k, l)];
            }
        }
        let prod = &r * &q;
        let mut identity_residual: f64 = 0.0;
        for i in 0..n1 {
            for j in 0..n1 {
                let target = if i == j { 1.0 } else { 0.0 };
                identity_residual = identity_residual.max((prod[(i, j)] - target).abs());
            }
        }
        RMatrix {
            r,
            q,
            identity_residual,
        }
    }

    /// Plain-text serialization; rational-backed families round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("krawtchouk-family v1\n");
        out.push_str(&format!("n {}\n", self.species()));
        match &self.exact {
            Some(e) => {
                out.push_str(&format!("nu {}\n", e.nu));
                out.push_str(&format!("p {}\n", join_with_space(e.p.iter())));
                out.push_str(&format!("phat {}\n", join_with_space(e.p_hat.iter())));
                let flat = e.u.iter().flat_map(|row| row.iter());
                out.push_str(&format!("u {}\n", join_with_space(flat)));
            }
            None => {
                out.push_str(&format!("nu {}\n", self.nu));
                out.push_str(&format!("p {}\n", join_with_space(self.p.iter())));
                out.push_str(&format!("phat {}\n", join_with_space(self.p_hat.iter())));
                let mut flat = Vec::with_capacity(self.p.len() * self.p.len());
                for r in 0..self.u.nrows() {
                    for c in 0..self.u.ncols() {
                        flat.push(self.u[(r, c)]);
                    }
                }
                out.push_str(&format!("u {}\n", join_with_space(flat)));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Kappa> {
        let mut n: Option<usize> = None;
        let mut nu: Option<String> = None;
        let mut p: Option<Vec<String>> = None;
        let mut p_hat: Option<Vec<String>> = None;
        let mut u: Option<Vec<String>> = None;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') || line.starts_with("krawtchouk-family") {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let key = tokens.next().unwrap_or_default();
            let rest: Vec<String> = tokens.map(String::from).collect();
            match key {
                "n" => {
                    n = Some(
                        rest.first()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::Parse("bad n line".into()))?,
                    )
                }
                "nu" => nu = rest.into_iter().next(),
                "p" => p = Some(rest),
                "phat" => p_hat = Some(rest),
                "u" => u = Some(rest),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let (n, nu, p, p_hat, u) = match (n, nu, p, p_hat, u) {
            (Some(n), Some(nu), Some(p), Some(ph), Some(u)) => (n, nu, p, ph, u),
            _ => return Err(Error::Parse("missing field in family document".into())),
        };
        let n1 = n + 1;
        if p.len() != n1 || p_hat.len() != n1 || u.len() != n1 * n1 {
            return Err(Error::Parse("field length does not match n".into()));
        }
        let all_tokens = std::iter::once(&nu).chain(&p).chain(&p_hat).chain(&u);
        if all_tokens.clone().all(|t| is_rational_token(t)) {
            let parse = |t: &String| {
                Rat::from_str(t).map_err(|_| Error::Parse(format!("bad rational {t:?}")))
            };
            let exact = ExactKappa {
                nu: parse(&nu)?,
                p: p.iter().map(parse).collect::<Result<_>>()?,
                p_hat: p_hat.iter().map(parse).collect::<Result<_>>()?,
                u: u
                    .chunks(n1)
                    .map(|row| row.iter().map(parse).collect::<Result<_>>())
                    .collect::<Result<_>>()?,
            };
            Kappa::from_exact(exact)
        } else {
            let parse = |t: &String| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {t:?}")))
            };
            let pf: Vec<f64> = p.iter().map(&parse).collect::<Result<_>>()?;
            let phf: Vec<f64> = p_hat.iter().map(&parse).collect::<Result<_>>()?;
            let uf: Vec<f64> = u.iter().map(&parse).collect::<Result<_>>()?;
            let umat = DMatrix::from_row_slice(n1, n1, &uf);
            validate_kappa(parse(&nu)?, &pf, &phf, &umat)
        }
    }
}

fn is_rational_token(t: &str) -> bool {
    t.contains('/') || t.parse::<i128>().is_ok()
}

fn join_with_space<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn factorial_u128(k: u32) -> u128 {
    (1..=u128::from(k)).product::<u128>().max(1)
}

fn multinomial_coefficient_u128(counts: &[u32]) -> u128 {
    let total: u32 = counts.iter().sum();
    let mut num = factorial_u128(total);
    for &c in counts {
        num /= factorial_u128(c);
    }
    num
}

/// Exact multinomial coefficient `total! / prod_i c_i!` as f64.
pub fn multinomial_coefficient(counts: &[u32]) -> f64 {
    multinomial_coefficient_u128(counts) as f64
}

/// Multinomial mass `binom(two_j, xi) prod_i p_i^{xi_i}` on compositions of
/// `two_j`.
pub fn multinomial_weight(xi: &SiteConfig, p: &[f64], two_j: u32) -> Result<f64> {
    if xi.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: xi.len(),
        });
    }
    if xi.total() != two_j {
        return Err(Error::TotalMismatch {
            expected: two_j,
            found: xi.total(),
        });
    }
    let mut w = multinomial_coefficient(xi.counts());
    for (&c, &pk) in xi.counts().iter().zip(p) {
        w *= pk.powi(c as i32);
    }
    Ok(w)
}

fn check_pair(xi: &SiteConfig, eta: &SiteConfig, kappa: &Kappa, two_j: u32) -> Result<()> {
    let n1 = kappa.p.len();
    if xi.len() != n1 || eta.len() != n1 {
        return Err(Error::DimensionMismatch {
            expected: n1,
            found: xi.len().min(eta.len()),
        });
    }
    if xi.total() != two_j {
        return Err(Error::TotalMismatch {
            expected: two_j,
            found: xi.total(),
        });
    }
    if eta.total() != two_j {
        return Err(Error::TotalMismatch {
            expected: two_j,
            found: eta.total(),
        });
    }
    Ok(())
}

// Expansion of prod_k (1 + sum_l u_{kl} z_l)^{eta_k} over any coefficient
// ring; variables are z_1..z_n.
fn gf_expand<T>(u_entry: impl Fn(usize, usize) -> T, n: usize, eta: &[u32], cap: u32) -> MultiPoly<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    let mut prod = MultiPoly::constant(n, cap, T::one());
    for (k, &mult) in eta.iter().enumerate() {
        if mult == 0 {
            continue;
        }
        let coeffs: Vec<T> = (1..=n).map(|l| u_entry(k, l)).collect();
        let factor = MultiPoly::affine(n, cap, T::one(), &coeffs);
        prod = prod.mul(&factor.pow(mult));
    }
    prod
}

fn exponent_of(xi: &SiteConfig) -> Vec<u16> {
    xi.counts()[1..].iter().map(|&c| c as u16).collect()
}

/// Generating-function route: expand the product over classes, read off the
/// coefficient of `z^xi`, divide by the multinomial coefficient.
pub fn krawtchouk_gf(xi: &SiteConfig, eta: &SiteConfig, kappa: &Kappa, two_j: u32) -> Result<f64> {
    check_pair(xi, eta, kappa, two_j)?;
    let n = kappa.species();
    let value = match (&kappa.exact, two_j <= EXACT_DEGREE_MAX) {
        (Some(exact), true) => {
            let poly = gf_expand(
                |k, l| exact.u[k][l].clone(),
                n,
                eta.counts(),
                two_j,
            );
            let coeff = poly.coeff(&exponent_of(xi));
            let norm = Rat::from_integer(multinomial_coefficient_u128(xi.counts()).into());
            (coeff / norm).to_f64().unwrap_or(f64::NAN)
        }
        _ => {
            let poly = gf_expand(|k, l| kappa.u[(k, l)], n, eta.counts(), two_j);
            poly.coeff(&exponent_of(xi)) / multinomial_coefficient(xi.counts())
        }
    };
    Ok(value)
}

/// Full table of polynomial values over the composition space, row index
/// first argument, column index second argument; rank order matches
/// [`compositions_desc`].
pub fn krawtchouk_table_gf(kappa: &Kappa, two_j: u32) -> DMatrix<f64> {
    let n = kappa.species();
    let states = compositions_desc(two_j, n + 1);
    let m = states.len();
    let mut table = DMatrix::zeros(m, m);
    let exact_path = kappa.exact.is_some() && two_j <= EXACT_DEGREE_MAX;
    for (j, eta) in states.iter().enumerate() {
        if exact_path {
            let exact = kappa.exact.as_ref().expect("checked");
            let poly = gf_expand(|k, l| exact.u[k][l].clone(), n, eta.counts(), two_j);
            for (i, xi) in states.iter().enumerate() {
                let coeff = poly.coeff(&exponent_of(xi));
                let norm = Rat::from_integer(multinomial_coefficient_u128(xi.counts()).into());
                table[(i, j)] = (coeff / norm).to_f64().unwrap_or(f64::NAN);
            }
        } else {
            let poly = gf_expand(|k, l| kappa.u[(k, l)], n, eta.counts(), two_j);
            for (i, xi) in states.iter().enumerate() {
                table[(i, j)] = poly.coeff(&exponent_of(xi)) / multinomial_coefficient(xi.counts());
            }
        }
    }
    table
}

/// Bilinear-form route, independent of the generating function: expand the
/// transformed monomial `zhat^eta` with `zhat = z R` over `z_0..z_n`, take
/// the coefficient at `xi`, weight by `xi! / p_hat^xi`, and fix the overall
/// scalar by the value 1 at the pair of extreme compositions.
pub fn krawtchouk_bilinear(
    xi: &SiteConfig,
    eta: &SiteConfig,
    kappa: &Kappa,
    two_j: u32,
) -> Result<f64> {
    check_pair(xi, eta, kappa, two_j)?;
    let rm = kappa.r_matrix();
    let raw = |xi: &SiteConfig, eta: &SiteConfig| -> f64 {
        let n1 = kappa.p.len();
        let mut prod = MultiPoly::constant(n1, two_j, 1.0);
        for (l, &mult) in eta.counts().iter().enumerate() {
            if mult == 0 {
                continue;
            }
            // zhat_l = sum_k z_k r_{kl}
            let coeffs: Vec<f64> = (0..n1).map(|k| rm.r[(k, l)]).collect();
            let factor = MultiPoly::affine(n1, two_j, 0.0, &coeffs);
            prod = prod.mul(&factor.pow(mult));
        }
        let expo: Vec<u16> = xi.counts().iter().map(|&c| c as u16).collect();
        let coeff = prod.coeff(&expo);
        let mut weight = 1.0;
        for (&c, &ph) in xi.counts().iter().zip(&kappa.p_hat) {
            weight *= factorial_u128(c) as f64 / ph.powi(c as i32);
        }
        coeff * weight
    };
    let mut anchor = vec![0u32; kappa.p.len()];
    anchor[0] = two_j;
    let anchor = SiteConfig::new(anchor);
    let scale = raw(&anchor, &anchor);
    Ok(raw(xi, eta) / scale)
}

/// Deviations of both orthogonality sums from their closed-form targets.
#[derive(Debug, Clone)]
pub struct OrthogonalityReport {
    pub max_residual_dual_weight: f64,
    pub max_residual_primal_weight: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OrthogonalityReport {
    pub fn max_residual(&self) -> f64 {
        self.max_residual_dual_weight
            .max(self.max_residual_primal_weight)
    }
}

/// Evaluate both orthogonality sums over the full composition space for every
/// pair of second arguments and report the worst deviation from
/// `p_0^{2j} delta / weight`.
pub fn orthogonality_sums(kappa: &Kappa, two_j: u32) -> Result<OrthogonalityReport> {
    let n = kappa.species();
    let states = compositions_desc(two_j, n + 1);
    let m = states.len();
    let table = krawtchouk_table_gf(kappa, two_j);
    let w_p: Vec<f64> = states
        .iter()
        .map(|s| multinomial_weight(s, &kappa.p, two_j))
        .collect::<Result<_>>()?;
    let w_ph: Vec<f64> = states
        .iter()
        .map(|s| multinomial_weight(s, &kappa.p_hat, two_j))
        .collect::<Result<_>>()?;
    let p0_pow = kappa.p[0].powi(two_j as i32);
    let mut max_dual: f64 = 0.0;
    let mut max_primal: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let mut sum_dual = 0.0;
            let mut sum_primal = 0.0;
            for x in 0..m {
                sum_dual += table[(x, a)] * table[(x, b)] * w_ph[x];
                sum_primal += table[(a, x)] * table[(b, x)] * w_p[x];
            }
            let target_dual = if a == b { p0_pow / w_p[a] } else { 0.0 };
            let target_primal = if a == b { p0_pow / w_ph[a] } else { 0.0 };
            max_dual = max_dual.max((sum_dual - target_dual).abs());
            max_primal = max_primal.max((sum_primal - target_primal).abs());
        }
    }
    let tolerance = if kappa.exact.is_some() && two_j <= EXACT_DEGREE_MAX {
        1e-12
    } else {
        1e-10
    };
    let max = max_dual.max(max_primal);
    Ok(OrthogonalityReport {
        max_residual_dual_weight: max_dual,
        max_residual_primal_weight: max_primal,
        tolerance,
        pass: max <= tolerance,
    })
}

/// Parse a probability vector given as comma-separated rationals or decimals;
/// returns the exact-backed family when every entry is rational.
pub fn kappa_from_p_text(text: &str) -> Result<Kappa> {
    let tokens: Vec<&str> = text.split(',').map(str::trim).collect();
    if tokens.iter().all(|t| is_rational_token(t)) {
        let p: Vec<Rat> = tokens
            .iter()
            .map(|t| Rat::from_str(t).map_err(|_| Error::Parse(format!("bad rational {t:?}"))))
            .collect::<Result<_>>()?;
        Kappa::from_rational_p(&p)
    } else {
        let p: Vec<f64> = tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        Kappa::from_p(&p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_half() -> Kappa {
        Kappa::from_p(&[0.5, 0.5]).unwrap()
    }

    #[test]
    fn validate_accepts_hadamard_family() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let k = validate_kappa(2.0, &[0.5, 0.5], &[0.5, 0.5], &u).unwrap();
        assert_eq!(k.species(), 1);
    }

    #[test]
    fn validate_rejects_border_violation() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, -1.0]);
        assert!(matches!(
            validate_kappa(2.0, &[0.5, 0.5], &[0.5, 0.5], &u),
            Err(Error::KappaCondition2 { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn validate_rejects_wrong_nu() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        assert!(matches!(
            validate_kappa(3.0, &[0.5, 0.5], &[0.5, 0.5], &u),
            Err(Error::KappaCondition1 { .. })
        ));
    }

    #[test]
    fn validate_rejects_broken_identity() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -0.9]);
        assert!(matches!(
            validate_kappa(2.0, &[0.5, 0.5], &[0.5, 0.5], &u),
            Err(Error::KappaCondition3 { .. })
        ));
    }

    #[test]
    fn from_p_reproduces_hadamard() {
        let k = half_half();
        assert_eq!(k.u()[(0, 0)], 1.0);
        assert_eq!(k.u()[(1, 1)], -1.0);
        assert_eq!(k.p_hat(), &[0.5, 0.5]);
    }

    #[test]
    fn from_p_uniform_three() {
        let k = Kappa::from_p(&[1.0 / 3.0; 3]).unwrap();
        assert_relative_eq!(k.nu(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(k.p_hat().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn from_rational_p_is_exact() {
        let quarter = Rat::new(1.into(), 4.into());
        let half = Rat::new(1.into(), 2.into());
        let k = Kappa::from_rational_p(&[half, quarter.clone(), quarter]).unwrap();
        let e = k.exact().unwrap();
        assert_eq!(e.p_hat.iter().sum::<Rat>(), Rat::one());
        assert_relative_eq!(k.p_hat().iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn random_families_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            for _ in 0..20 {
                let k = Kappa::random(n, &mut rng);
                assert!(kappa_identity_residual(k.nu(), k.p(), k.p_hat(), k.u()) <= 1e-12);
                let rm = k.r_matrix();
                assert!(rm.identity_residual <= 1e-12);
            }
        }
    }

    #[test]
    fn swapped_family_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let k = Kappa::random(2, &mut rng);
        assert!(k.swapped().is_ok());
    }

    #[test]
    fn multinomial_weight_values() {
        let xi = SiteConfig::new(vec![3, 0, 0]);
        assert_relative_eq!(
            multinomial_weight(&xi, &[0.2, 0.3, 0.5], 3).unwrap(),
            0.2f64.powi(3),
            max_relative = 1e-15
        );
        let xi = SiteConfig::new(vec![1, 1]);
        assert_relative_eq!(
            multinomial_weight(&xi, &[0.5, 0.5], 2).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert!(multinomial_weight(&SiteConfig::new(vec![1, 0]), &[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn multinomial_weight_normalizes() {
        let p = [1.0 / 3.0; 3];
        let total: f64 = compositions_desc(2, 3)
            .iter()
            .map(|s| multinomial_weight(s, &p, 2).unwrap())
            .sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gf_trivial_rows_and_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=3usize {
            let kappa = Kappa::random(n, &mut rng);
            for two_j in 1..=3u32 {
                let states = compositions_desc(two_j, n + 1);
                let extreme = states[0].clone();
                assert_eq!(extreme.counts()[0], two_j);
                for s in &states {
                    assert_relative_eq!(
                        krawtchouk_gf(&extreme, s, &kappa, two_j).unwrap(),
                        1.0,
                        epsilon = 1e-12
                    );
                    assert_relative_eq!(
                        krawtchouk_gf(s, &extreme, &kappa, two_j).unwrap(),
                        1.0,
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn gf_sign_flip_single_species() {
        let k = half_half();
        let xi = SiteConfig::new(vec![0, 1]);
        assert_eq!(krawtchouk_gf(&xi, &xi, &k, 1).unwrap(), -1.0);
    }

    #[test]
    fn bilinear_matches_gf() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in 1..=2usize {
            let kappa = Kappa::random(n, &mut rng);
            for two_j in 1..=3u32 {
                let states = compositions_desc(two_j, n + 1);
                for xi in &states {
                    for eta in &states {
                        let a = krawtchouk_gf(xi, eta, &kappa, two_j).unwrap();
                        let b = krawtchouk_bilinear(xi, eta, &kappa, two_j).unwrap();
                        assert!(
                            (a - b).abs() <= 1e-10,
                            "n={n} two_j={two_j} xi={xi:?} eta={eta:?}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn bilinear_anchor_is_one() {
        let k = half_half();
        let anchor = SiteConfig::new(vec![2, 0]);
        assert_relative_eq!(
            krawtchouk_bilinear(&anchor, &anchor, &k, 2).unwrap(),
            1.0,
            epsilon = 1e-14
        );
        let xi = SiteConfig::new(vec![0, 1]);
        assert_relative_eq!(
            krawtchouk_bilinear(&xi, &xi, &k, 1).unwrap(),
            -1.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn orthogonality_small_cases() {
        let k = half_half();
        let report = orthogonality_sums(&k, 1).unwrap();
        assert!(report.pass, "residual {}", report.max_residual());
        assert!(report.max_residual() <= 1e-12);

        let k3 = Kappa::from_p(&[1.0 / 3.0; 3]).unwrap();
        let report = orthogonality_sums(&k3, 2).unwrap();
        assert!(report.max_residual() <= 1e-10);
    }

    #[test]
    fn symmetry_under_role_swap() {
        // informational: swapping (p, p_hat, U) -> (p_hat, p, U^T) transposes
        // the value table
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=2usize {
            let kappa = Kappa::random(n, &mut rng);
            let swapped = kappa.swapped().unwrap();
            for two_j in 1..=3u32 {
                let t = krawtchouk_table_gf(&kappa, two_j);
                let ts = krawtchouk_table_gf(&swapped, two_j);
                let diff = (&t - ts.transpose()).abs().max();
                assert!(diff <= 1e-10, "n={n} two_j={two_j}: {diff}");
            }
        }
    }

    #[test]
    fn text_round_trip_exact() {
        let third = Rat::new(1.into(), 3.into());
        let k = Kappa::from_rational_p(&[third.clone(), third.clone(), third]).unwrap();
        let text = k.to_text();
        let back = Kappa::from_text(&text).unwrap();
        assert_eq!(back.exact().unwrap(), k.exact().unwrap());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn text_round_trip_float() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let k = Kappa::random(2, &mut rng);
        let text = k.to_text();
        let back = Kappa::from_text(&text).unwrap();
        assert_eq!(back.p(), k.p());
        assert_eq!(back.u(), k.u());
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn from_p_text_variants() {
        assert!(kappa_from_p_text("1/2,1/2").unwrap().exact().is_some());
        assert!(kappa_from_p_text("0.5, 0.5").unwrap().exact().is_none());
        assert!(kappa_from_p_text("1/2,1/3").is_err());
    }
}

//! Raising/lowering operator words for the walker process: the nilpotent
//! algebra with `[P_i, Q_l] = delta_il Z` acts on functions of occupation
//! numbers through a bounded window, the kernel relation couples the two
//! arguments of the product kernel, and the quadratic coupling element
//! realizes the one-edge generator.
//!
//! Raising operators are unbounded, so every application tracks a valid
//! sub-window: each raising factor shrinks the usable extent of its axis by
//! one, and identities are asserted only on the interior.

use crate::charlier::{kernel_table, product_kernel};
use crate::error::{Error, Result};
use crate::statespace::{ConfigSpace, Mode, SiteConfig};
use nalgebra::DMatrix;

/// One generator of the walker algebra, indexed by species.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeisenGen {
    /// `P_i`: shift the argument up, scale by the weight parameter.
    Raise(usize),
    /// `Q_i`: multiply by the occupation and shift down.
    Lower(usize),
    /// `Z`: scalar.
    Central,
}

/// A product of generators in algebraic order (rightmost factor acts first).
pub type HeisenWord = Vec<HeisenGen>;

/// A function on a box of occupation vectors, with a per-axis valid extent
/// that shrinks as raising factors consume the boundary.
#[derive(Debug, Clone)]
pub struct Window {
    dims: Vec<usize>,
    extent: Vec<usize>,
    data: Vec<f64>,
}

impl Window {
    pub fn zeros(dims: &[usize]) -> Self {
        Window {
            dims: dims.to_vec(),
            extent: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn from_fn(dims: &[usize], f: impl Fn(&[usize]) -> f64) -> Self {
        let mut w = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        loop {
            let flat = w.flat(&idx);
            w.data[flat] = f(&idx);
            if !advance(&mut idx, dims) {
                break;
            }
        }
        w
    }

    pub fn delta(dims: &[usize], at: &[usize]) -> Self {
        let mut w = Self::zeros(dims);
        let flat = w.flat(at);
        w.data[flat] = 1.0;
        w
    }

    fn flat(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        let mut acc = 0;
        for (i, &m) in multi.iter().enumerate() {
            debug_assert!(m < self.dims[i]);
            acc = acc * self.dims[i] + m;
        }
        acc
    }

    pub fn get(&self, multi: &[usize]) -> f64 {
        for (i, &m) in multi.iter().enumerate() {
            assert!(m < self.extent[i], "index outside the valid sub-window");
        }
        self.data[self.flat(multi)]
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    /// Pointwise sum on the intersection of the valid extents.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        let extent: Vec<usize> = self
            .extent
            .iter()
            .zip(&other.extent)
            .map(|(&a, &b)| a.min(b))
            .collect();
        let mut out = Window {
            dims: self.dims.clone(),
            extent: extent.clone(),
            data: vec![0.0; self.data.len()],
        };
        let mut idx = vec![0usize; self.dims.len()];
        loop {
            let flat = out.flat(&idx);
            out.data[flat] = self.data[flat] + other.data[flat];
            if !advance(&mut idx, &extent) {
                break;
            }
        }
        out
    }

    pub fn scale(mut self, alpha: f64) -> Self {
        for v in &mut self.data {
            *v *= alpha;
        }
        self
    }
}

fn advance(idx: &mut [usize], bound: &[usize]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < bound[i] {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Apply one generator (optionally through the sign-twisting isomorphism
/// `P -> Z - P`, `Q -> Z - Q`, `Z -> Z`) to a window function. Species `i`
/// acts on axis `axis_offset + i`.
pub fn apply_generator(
    f: &Window,
    gen: HeisenGen,
    axis_offset: usize,
    lambda: f64,
    twisted: bool,
) -> Result<Window> {
    let mut out = Window {
        dims: f.dims.clone(),
        extent: f.extent.clone(),
        data: vec![0.0; f.data.len()],
    };
    match gen {
        HeisenGen::Central => {
            let mut idx = vec![0usize; f.dims.len()];
            loop {
                let flat = f.flat(&idx);
                out.data[flat] = lambda * f.data[flat];
                if !advance(&mut idx, &f.extent) {
                    break;
                }
            }
        }
        HeisenGen::Raise(i) => {
            let axis = axis_offset + i;
            if f.extent[axis] <= 1 {
                return Err(Error::WindowExhausted);
            }
            out.extent[axis] = f.extent[axis] - 1;
            let mut idx = vec![0usize; f.dims.len()];
            loop {
                let flat = f.flat(&idx);
                let mut up = idx.clone();
                up[axis] += 1;
                let raised = lambda * f.data[f.flat(&up)];
                out.data[flat] = if twisted {
                    lambda * f.data[flat] - raised
                } else {
                    raised
                };
                if !advance(&mut idx, &out.extent) {
                    break;
                }
            }
        }
        HeisenGen::Lower(i) => {
            let axis = axis_offset + i;
            let mut idx = vec![0usize; f.dims.len()];
            loop {
                let flat = f.flat(&idx);
                let lowered = if idx[axis] == 0 {
                    0.0
                } else {
                    let mut down = idx.clone();
                    down[axis] -= 1;
                    idx[axis] as f64 * f.data[f.flat(&down)]
                };
                out.data[flat] = if twisted {
                    lambda * f.data[flat] - lowered
                } else {
                    lowered
                };
                if !advance(&mut idx, &f.extent) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Apply a word (rightmost factor first).
pub fn apply_word(
    f: &Window,
    word: &[HeisenGen],
    axis_offset: usize,
    lambda: f64,
    twisted: bool,
) -> Result<Window> {
    let mut acc = f.clone();
    for &gen in word.iter().rev() {
        acc = apply_generator(&acc, gen, axis_offset, lambda, twisted)?;
    }
    Ok(acc)
}

/// A two-leg word with a real coefficient; the legs act on the two sites of
/// an edge.
#[derive(Debug, Clone)]
pub struct TensorWord {
    pub left: HeisenWord,
    pub right: HeisenWord,
    pub coeff: f64,
}

/// The coupling element `sum_i (1 (x) Q_i - Q_i (x) 1)(P_i (x) 1 - 1 (x) P_i)`
/// expanded into plain tensor words.
pub fn irw_coupling_y(species: usize) -> Vec<TensorWord> {
    let mut out = Vec::new();
    for i in 0..species {
        let first: [(HeisenWord, HeisenWord, f64); 2] = [
            (vec![], vec![HeisenGen::Lower(i)], 1.0),
            (vec![HeisenGen::Lower(i)], vec![], -1.0),
        ];
        let second: [(HeisenWord, HeisenWord, f64); 2] = [
            (vec![HeisenGen::Raise(i)], vec![], 1.0),
            (vec![], vec![HeisenGen::Raise(i)], -1.0),
        ];
        for (la, ra, ca) in &first {
            for (lb, rb, cb) in &second {
                let mut left = la.clone();
                left.extend_from_slice(lb);
                let mut right = ra.clone();
                right.extend_from_slice(rb);
                out.push(TensorWord {
                    left,
                    right,
                    coeff: ca * cb,
                });
            }
        }
    }
    out
}

/// Pointwise verification of the kernel shift relations over the box
/// `{0..window}^n` for each species. Residuals are relative: kernel values
/// near the corner of the box reach 1e12 for small weight parameters, so an
/// absolute gate would only measure f64 granularity.
#[derive(Debug, Clone)]
pub struct Prop41Report {
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_prop41(lambda: f64, species: usize, window: u32) -> Result<Prop41Report> {
    let table = kernel_table(window + 1, window + 1, lambda)?;
    let kernel = |xi: &[usize], eta: &[usize]| -> f64 {
        let mut v = 1.0;
        for i in 0..species {
            v *= table[(xi[i], eta[i])];
        }
        v
    };
    let dims = vec![window as usize + 1; species];
    let mut max_residual: f64 = 0.0;
    let mut xi = vec![0usize; species];
    loop {
        let mut eta = vec![0usize; species];
        loop {
            for i in 0..species {
                // lowering on the first argument vs twisted raising on the second
                let lhs_low = if xi[i] == 0 {
                    0.0
                } else {
                    let mut down = xi.clone();
                    down[i] -= 1;
                    xi[i] as f64 * kernel(&down, &eta)
                };
                let mut eta_up = eta.clone();
                eta_up[i] += 1;
                let rhs_low = lambda * kernel(&xi, &eta) - lambda * kernel(&xi, &eta_up);
                let scale = lhs_low.abs().max(rhs_low.abs()).max(1.0);
                max_residual = max_residual.max((lhs_low - rhs_low).abs() / scale);

                // raising on the first argument vs twisted lowering on the second
                let mut xi_up = xi.clone();
                xi_up[i] += 1;
                let lhs_raise = lambda * kernel(&xi_up, &eta);
                let rhs_raise = lambda * kernel(&xi, &eta)
                    - if eta[i] == 0 {
                        0.0
                    } else {
                        let mut down = eta.clone();
                        down[i] -= 1;
                        eta[i] as f64 * kernel(&xi, &down)
                    };
                let scale = lhs_raise.abs().max(rhs_raise.abs()).max(1.0);
                max_residual = max_residual.max((lhs_raise - rhs_raise).abs() / scale);
            }
            if !advance(&mut eta, &dims) {
                break;
            }
        }
        if !advance(&mut xi, &dims) {
            break;
        }
    }
    let tolerance = 1e-9;
    Ok(Prop41Report {
        max_residual,
        tolerance,
        pass: max_residual <= tolerance,
    })
}

/// Outcome of realizing the one-edge walker generator through the coupling
/// element, by the plain and sign-twisted routes.
#[derive(Debug, Clone)]
pub struct Eq7Report {
    pub lambda: f64,
    pub max_diff_direct: f64,
    pub max_diff_twisted: f64,
    /// Largest amplitude the word action leaks outside the conserved sector
    /// (zero when the expansion is right).
    pub off_sector_leak: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Realize the coupling element on a two-site sector and compare with the
/// assembled generator, exactly.
pub fn check_eq7(lambda: f64, space: &ConfigSpace) -> Result<Eq7Report> {
    if lambda <= 0.0 {
        return Err(Error::NonpositiveLambda(lambda));
    }
    let Mode::Irw { species, totals } = space.mode().clone() else {
        return Err(Error::WrongMode("coupling check needs a walker sector"));
    };
    let graph = space.graph().clone();
    if graph.num_sites() != 2 || graph.edges() != [(0, 1)] {
        return Err(Error::WrongMode("coupling check runs on the one-edge graph"));
    }
    let gen = crate::generators::irw_generator(space, &graph)?.to_dense();
    let words = irw_coupling_y(species);
    let site_dims: Vec<usize> = totals.iter().map(|&n| n as usize + 2).collect();
    let mut dims = site_dims.clone();
    dims.extend_from_slice(&site_dims);

    let size = space.size();
    let mut off_sector_leak: f64 = 0.0;
    let mut run = |twisted: bool| -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(size, size);
        for col in 0..size {
            let cfg = space.unrank(col);
            let mut at = Vec::with_capacity(2 * species);
            for x in 0..2 {
                at.extend(cfg.site(x).iter().map(|&c| c as usize));
            }
            let delta = Window::delta(&dims, &at);
            let mut acc: Option<Window> = None;
            for word in &words {
                let w = apply_word(&delta, &word.right, species, lambda, twisted)?;
                let w = apply_word(&w, &word.left, 0, lambda, twisted)?;
                let w = w.scale(word.coeff);
                acc = Some(match acc {
                    None => w,
                    Some(a) => a.add(&w),
                });
            }
            let acc = acc.expect("coupling element is nonempty");
            // read off sector states; everything else must vanish
            let mut idx = vec![0usize; dims.len()];
            loop {
                let value = acc.get(&idx) / lambda;
                let in_sector = (0..species)
                    .all(|i| idx[i] + idx[species + i] == totals[i] as usize);
                if in_sector {
                    let mut data = Vec::with_capacity(2 * species);
                    for x in 0..2 {
                        for i in 0..species {
                            data.push(idx[x * species + i] as u32);
                        }
                    }
                    let row = space.rank(&crate::statespace::Config::new(species, data))?;
                    m[(row, col)] = value;
                } else {
                    off_sector_leak = off_sector_leak.max(value.abs());
                }
                if !advance(&mut idx, acc.extent()) {
                    break;
                }
            }
        }
        Ok(m)
    };

    let direct = run(false)?;
    let twisted = run(true)?;
    let max_diff_direct = (&direct - &gen).abs().max();
    let max_diff_twisted = (&twisted - &gen).abs().max();
    let tolerance = 1e-12;
    let worst = max_diff_direct.max(max_diff_twisted).max(off_sector_leak);
    Ok(Eq7Report {
        lambda,
        max_diff_direct,
        max_diff_twisted,
        off_sector_leak,
        tolerance,
        pass: worst <= tolerance,
    })
}

/// Convenience wrapper evaluating the product kernel on raw count slices.
pub fn kernel_value(xi: &[u32], eta: &[u32], lambda: f64) -> Result<f64> {
    product_kernel(
        &SiteConfig::new(xi.to_vec()),
        &SiteConfig::new(eta.to_vec()),
        lambda,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::{enumerate_irw_sector, Graph};
    use approx::assert_relative_eq;

    #[test]
    fn lowering_kills_the_origin() {
        let f = Window::from_fn(&[4], |idx| (idx[0] + 1) as f64);
        let g = apply_generator(&f, HeisenGen::Lower(0), 0, 1.0, false).unwrap();
        assert_eq!(g.get(&[0]), 0.0);
        assert_eq!(g.get(&[2]), 2.0 * f.get(&[1]));
    }

    #[test]
    fn raising_shrinks_the_window() {
        let f = Window::from_fn(&[4], |idx| idx[0] as f64);
        let g = apply_generator(&f, HeisenGen::Raise(0), 0, 2.0, false).unwrap();
        assert_eq!(g.extent(), &[3]);
        assert_eq!(g.get(&[1]), 2.0 * 2.0);
        let exhausted = apply_word(
            &Window::zeros(&[2]),
            &vec![HeisenGen::Raise(0), HeisenGen::Raise(0)],
            0,
            1.0,
            false,
        );
        assert!(matches!(exhausted, Err(Error::WindowExhausted)));
    }

    #[test]
    fn commutation_relation_on_interior() {
        let lambda = 1.7;
        let f = Window::from_fn(&[6, 6], |idx| (idx[0] * 7 + idx[1] * 3 + 1) as f64);
        for i in 0..2 {
            let pq = apply_word(
                &f,
                &vec![HeisenGen::Raise(i), HeisenGen::Lower(i)],
                0,
                lambda,
                false,
            )
            .unwrap();
            let qp = apply_word(
                &f,
                &vec![HeisenGen::Lower(i), HeisenGen::Raise(i)],
                0,
                lambda,
                false,
            )
            .unwrap();
            let mut idx = vec![0usize; 2];
            loop {
                let comm = pq.get(&idx) - qp.get(&idx);
                assert_relative_eq!(comm, lambda * f.get(&idx), max_relative = 1e-13);
                if !advance(&mut idx, pq.extent()) {
                    break;
                }
            }
        }
    }

    #[test]
    fn twisted_raise_matches_definition() {
        let lambda = 0.9;
        let f = Window::from_fn(&[5], |idx| (idx[0] as f64).powi(2) + 1.0);
        let g = apply_generator(&f, HeisenGen::Raise(0), 0, lambda, true).unwrap();
        for x in 0..4usize {
            assert_relative_eq!(
                g.get(&[x]),
                lambda * (f.get(&[x]) - f.get(&[x + 1])),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn kernel_relation_small_grids() {
        for lambda in [0.5, 1.0, 2.0] {
            let r1 = check_prop41(lambda, 1, 6).unwrap();
            assert!(r1.pass, "n=1 lambda={lambda}: {}", r1.max_residual);
        }
        let r2 = check_prop41(1.0, 2, 5).unwrap();
        assert!(r2.pass, "n=2: {}", r2.max_residual);
    }

    #[test]
    fn kernel_relation_trivial_point() {
        // at the origin both sides of the lowering relation vanish
        let lambda = 1.0;
        let xi = [0u32];
        let eta = [0u32];
        let lhs = 0.0;
        let rhs = lambda * kernel_value(&xi, &eta, lambda).unwrap()
            - lambda * kernel_value(&xi, &[1], lambda).unwrap();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn coupling_reproduces_generator() {
        let g = Graph::edge();
        for (species, totals) in [(1usize, vec![1u32]), (1, vec![3]), (2, vec![2, 1])] {
            let space = enumerate_irw_sector(&g, species, &totals).unwrap();
            for lambda in [0.5, 1.0, 3.0] {
                let report = check_eq7(lambda, &space).unwrap();
                assert!(
                    report.pass,
                    "species={species} totals={totals:?} lambda={lambda}: {report:?}"
                );
            }
        }
    }

    #[test]
    fn coupling_on_empty_sector_is_zero() {
        let g = Graph::edge();
        let space = enumerate_irw_sector(&g, 1, &[0]).unwrap();
        let report = check_eq7(1.0, &space).unwrap();
        assert!(report.pass);
    }

    #[test]
    fn coupling_independent_of_lambda() {
        let g = Graph::edge();
        let space = enumerate_irw_sector(&g, 2, &[2, 2]).unwrap();
        let gen = crate::generators::irw_generator(&space, &g).unwrap().to_dense();
        for lambda in [0.5, 1.0, 3.0] {
            let report = check_eq7(lambda, &space).unwrap();
            assert!(report.max_diff_direct <= 1e-12, "lambda={lambda}");
        }
        // and the generator itself carries no lambda
        assert!(gen.abs().max() > 0.0);
    }
}

//! Exact continuous-time Monte Carlo for both processes and the statistical
//! side of the duality check: forward and dual expectation estimates of the
//! kernel, compared with each other and with a matrix-exponential reference.
//!
//! Reproducibility: each sample runs on its own counter-indexed stream of a
//! seeded ChaCha generator, so results do not depend on how samples are
//! distributed over threads.

use crate::error::{Error, Result};
use crate::expm::expm_action;
use crate::statespace::{Config, ConfigSpace, Graph};
use crate::verify::DualityMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Which dynamics to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    /// Exclusion dynamics with `species` particle classes plus holes.
    Sep { species: usize },
    /// Independent walkers with `species` classes.
    Irw { species: usize },
}

/// A single continuous-time path: the state after each jump, up to the
/// horizon.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Config,
    pub times: Vec<f64>,
    pub states: Vec<Config>,
    pub horizon: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Config {
        self.states.last().unwrap_or(&self.initial)
    }

    pub fn num_jumps(&self) -> usize {
        self.times.len()
    }

    /// Delimited text export: `time<TAB>rank` per line, starting at time 0.
    pub fn to_text(&self, space: &ConfigSpace) -> Result<String> {
        let mut out = format!("0\t{}\n", space.rank(&self.initial)?);
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}\t{}\n", space.rank(s)?));
        }
        Ok(out)
    }
}

// Enumerate the legal moves out of `state` with their rates.
fn for_each_move(
    process: Process,
    graph: &Graph,
    state: &Config,
    mut visit: impl FnMut(f64, Config),
) {
    match process {
        Process::Sep { species } => {
            for &(x, y) in graph.edges() {
                for k in 0..species {
                    for l in (k + 1)..=species {
                        for (from, to) in [(x, y), (y, x)] {
                            let rate =
                                f64::from(state.site(from)[l]) * f64::from(state.site(to)[k]);
                            if rate > 0.0 {
                                let mut target = state.clone();
                                target.site_mut(from)[l] -= 1;
                                target.site_mut(from)[k] += 1;
                                target.site_mut(to)[k] -= 1;
                                target.site_mut(to)[l] += 1;
                                visit(rate, target);
                            }
                        }
                    }
                }
            }
        }
        Process::Irw { species } => {
            for &(x, y) in graph.edges() {
                for i in 0..species {
                    for (from, to) in [(x, y), (y, x)] {
                        let rate = f64::from(state.site(from)[i]);
                        if rate > 0.0 {
                            let mut target = state.clone();
                            target.site_mut(from)[i] -= 1;
                            target.site_mut(to)[i] += 1;
                            visit(rate, target);
                        }
                    }
                }
            }
        }
    }
}

/// Exact-in-law path sampling: exponential holding times at the total exit
/// rate, jumps proportional to individual move rates. An absorbing state
/// simply holds to the horizon.
pub fn gillespie_run(
    process: Process,
    graph: &Graph,
    initial: &Config,
    horizon: f64,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut state = initial.clone();
    let mut t = 0.0;
    let mut times = Vec::new();
    let mut states = Vec::new();
    loop {
        let mut total = 0.0;
        for_each_move(process, graph, &state, |rate, _| total += rate);
        if total == 0.0 {
            break;
        }
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > horizon {
            break;
        }
        let pick: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen: Option<Config> = None;
        for_each_move(process, graph, &state, |rate, target| {
            if chosen.is_none() {
                acc += rate;
                if pick < acc {
                    chosen = Some(target);
                }
            }
        });
        state = chosen.expect("total rate positive implies a move exists");
        times.push(t);
        states.push(state.clone());
    }
    Trajectory {
        initial: initial.clone(),
        times,
        states,
        horizon,
    }
}

/// Summation with pairwise recursion, stable and deterministic.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Result of the expectation-level duality comparison.
#[derive(Debug, Clone)]
pub struct McDualityResult {
    pub mean_forward: f64,
    pub mean_dual: f64,
    pub stderr_forward: f64,
    pub stderr_dual: f64,
    pub samples: usize,
    /// `|mean_forward - mean_dual|` over the combined standard error; 0 when
    /// both spreads vanish.
    pub z: f64,
    /// Matrix-exponential reference, available on small spaces.
    pub exact: Option<f64>,
    pub z_forward_vs_exact: Option<f64>,
    pub z_dual_vs_exact: Option<f64>,
}

fn z_score(a: f64, b: f64, se: f64) -> f64 {
    if se == 0.0 {
        if (a - b).abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / se
    }
}

/// Estimate both sides of the duality definition by Monte Carlo: evolve the
/// first argument forward from `xi0` and average the kernel against `eta0`,
/// then evolve the second argument from `eta0` and average against `xi0`.
/// When the spaces admit it, compare with `(exp(tL) D)[xi0, eta0]`.
#[allow(clippy::too_many_arguments)]
pub fn mc_duality_test(
    process: Process,
    space_a: &ConfigSpace,
    space_b: &ConfigSpace,
    kernel: &DualityMatrix,
    xi0: &Config,
    eta0: &Config,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<McDualityResult> {
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    let xi0_rank = space_a.rank(xi0)?;
    let eta0_rank = space_b.rank(eta0)?;

    let run_side = |space: &ConfigSpace, start: &Config, stream_base: u64| -> Result<Vec<f64>> {
        let fixed_rank = if stream_base == 0 { eta0_rank } else { xi0_rank };
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2 * i as u64 + stream_base);
                let traj = gillespie_run(process, space.graph(), start, horizon, &mut rng);
                let end_rank = space.rank(traj.final_state())?;
                Ok(if stream_base == 0 {
                    kernel.entry(end_rank, fixed_rank)
                } else {
                    kernel.entry(fixed_rank, end_rank)
                })
            })
            .collect()
    };

    let forward = run_side(space_a, xi0, 0)?;
    let dual = run_side(space_b, eta0, 1)?;
    let (mean_forward, stderr_forward) = mean_and_stderr(&forward);
    let (mean_dual, stderr_dual) = mean_and_stderr(&dual);
    let se = (stderr_forward * stderr_forward + stderr_dual * stderr_dual).sqrt();
    let z = if horizon == 0.0 {
        0.0
    } else {
        z_score(mean_forward, mean_dual, se)
    };

    let exact = if space_a.size() <= crate::verify::DENSE_LIMIT {
        let gen_a = match process {
            Process::Sep { .. } => crate::generators::sep_generator(space_a, space_a.graph())?,
            Process::Irw { .. } => crate::generators::irw_generator(space_a, space_a.graph())?,
        };
        let mut col = Vec::new();
        kernel.column_into(eta0_rank, &mut col);
        Some(expm_action(&gen_a, &col, horizon, 1e-12)[xi0_rank])
    } else {
        None
    };
    let (z_f, z_d) = match exact {
        Some(e) => (
            Some(z_score(mean_forward, e, stderr_forward)),
            Some(z_score(mean_dual, e, stderr_dual)),
        ),
        None => (None, None),
    };
    Ok(McDualityResult {
        mean_forward,
        mean_dual,
        stderr_forward,
        stderr_dual,
        samples,
        z,
        exact,
        z_forward_vs_exact: z_f,
        z_dual_vs_exact: z_d,
    })
}

/// Draw a site configuration from the multinomial with weight vector `p` and
/// `two_j` trials.
pub fn sample_site_multinomial(p: &[f64], two_j: u32, rng: &mut impl Rng) -> Vec<u32> {
    let mut counts = vec![0u32; p.len()];
    for _ in 0..two_j {
        let mut u: f64 = rng.random();
        let mut idx = p.len() - 1;
        for (k, &pk) in p.iter().enumerate() {
            if u < pk {
                idx = k;
                break;
            }
            u -= pk;
        }
        counts[idx] += 1;
    }
    counts
}

/// Kolmogorov-Smirnov statistic of sorted samples against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov-Smirnov p-value for sample size `n` and statistic
/// `d` (Stephens' small-sample correction).
pub fn ks_pvalue(n: usize, d: f64) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        p += sign * (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
    }
    (2.0 * p).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krawtchouk::Kappa;
    use crate::statespace::{enumerate_irw_sector, enumerate_sep};
    use crate::verify::{build_irw_duality, build_sep_duality};
    use approx::assert_relative_eq;

    fn sep_particle_hole() -> (Graph, ConfigSpace, Config) {
        let g = Graph::edge();
        let space = enumerate_sep(&g, 1, 1).unwrap();
        let start = Config::new(2, vec![0, 1, 1, 0]); // particle at site 1
        (g, space, start)
    }

    #[test]
    fn absorbing_state_never_jumps() {
        let g = Graph::edge();
        let space = enumerate_sep(&g, 1, 1).unwrap();
        let all_holes = space.unrank(0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traj = gillespie_run(Process::Sep { species: 1 }, &g, &all_holes, 10.0, &mut rng);
        assert_eq!(traj.num_jumps(), 0);
        assert_eq!(traj.final_state(), &all_holes);
    }

    #[test]
    fn replay_is_deterministic() {
        let (g, _space, start) = sep_particle_hole();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            gillespie_run(Process::Sep { species: 1 }, &g, &start, 25.0, &mut rng)
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(a.times, b.times);
        assert_eq!(a.states, b.states);
        assert!(a.num_jumps() > 0);
        let c = run(10);
        assert_ne!(a.times, c.times);
    }

    #[test]
    fn trajectory_text_export() {
        let (g, space, start) = sep_particle_hole();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let traj = gillespie_run(Process::Sep { species: 1 }, &g, &start, 5.0, &mut rng);
        let text = traj.to_text(&space).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, format!("0\t{}", space.rank(&start).unwrap()));
        assert_eq!(text.lines().count(), traj.num_jumps() + 1);
    }

    #[test]
    fn holding_times_are_exponential() {
        // single particle on one edge jumps at rate 1; KS against Exp(1)
        let (g, _space, start) = sep_particle_hole();
        let mut holds = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        while holds.len() < 10_000 {
            let traj = gillespie_run(Process::Sep { species: 1 }, &g, &start, 50.0, &mut rng);
            let mut prev = 0.0;
            for &t in &traj.times {
                holds.push(t - prev);
                prev = t;
            }
        }
        holds.truncate(10_000);
        holds.sort_by(f64::total_cmp);
        let d = ks_statistic(&holds, |x| 1.0 - (-x).exp());
        let p = ks_pvalue(holds.len(), d);
        assert!(p > 0.01, "KS p-value {p} (d = {d})");
    }

    #[test]
    fn marginal_matches_exponential_of_generator() {
        // empirical distribution at the horizon vs the semigroup row
        let g = Graph::edge();
        let space = enumerate_sep(&g, 2, 1).unwrap();
        let start = space.unrank(5);
        let gen = crate::generators::sep_generator(&space, &g).unwrap();
        let horizon = 0.8;
        let samples = 100_000usize;
        let counts: Vec<usize> = {
            let mut counts = vec![0usize; space.size()];
            let ends: Vec<usize> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(123);
                    rng.set_stream(i as u64);
                    let traj =
                        gillespie_run(Process::Sep { species: 2 }, &g, &start, horizon, &mut rng);
                    space.rank(traj.final_state()).unwrap()
                })
                .collect();
            for e in ends {
                counts[e] += 1;
            }
            counts
        };
        let mut delta = vec![0.0; space.size()];
        delta[space.rank(&start).unwrap()] = 1.0;
        let probs = expm_action(&gen.transpose(), &delta, horizon, 1e-12);
        let tv: f64 = 0.5
            * probs
                .iter()
                .zip(&counts)
                .map(|(&p, &c)| (p - c as f64 / samples as f64).abs())
                .sum::<f64>();
        assert!(tv <= 0.01, "total variation {tv}");
    }

    #[test]
    fn mc_duality_zero_horizon() {
        let g = Graph::edge();
        let space = enumerate_sep(&g, 1, 1).unwrap();
        let kappa = Kappa::from_p(&[0.5, 0.5]).unwrap();
        let d = build_sep_duality(&space, &kappa).unwrap();
        let xi0 = space.unrank(1);
        let eta0 = space.unrank(2);
        let result = mc_duality_test(
            Process::Sep { species: 1 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            0.0,
            500,
            7,
        )
        .unwrap();
        assert_eq!(result.z, 0.0);
        assert_eq!(result.mean_forward, d.entry(1, 2));
        assert_eq!(result.mean_dual, d.entry(1, 2));
        assert_relative_eq!(result.exact.unwrap(), d.entry(1, 2), epsilon = 1e-10);
    }

    #[test]
    fn mc_duality_sep_small() {
        let g = Graph::edge();
        let space = enumerate_sep(&g, 1, 1).unwrap();
        let kappa = Kappa::from_p(&[0.5, 0.5]).unwrap();
        let d = build_sep_duality(&space, &kappa).unwrap();
        let xi0 = Config::new(2, vec![0, 1, 1, 0]);
        let eta0 = Config::new(2, vec![1, 0, 0, 1]);
        let result = mc_duality_test(
            Process::Sep { species: 1 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            0.5,
            100_000,
            42,
        )
        .unwrap();
        assert!(result.z <= 4.0, "z = {}", result.z);
        assert!(result.z_forward_vs_exact.unwrap() <= 4.0);
        assert!(result.z_dual_vs_exact.unwrap() <= 4.0);
    }

    #[test]
    fn mc_duality_irw_small() {
        let g = Graph::edge();
        let space = enumerate_irw_sector(&g, 1, &[1]).unwrap();
        let d = build_irw_duality(&space, &space, 1.0).unwrap();
        let xi0 = space.unrank(0);
        let eta0 = space.unrank(1);
        let result = mc_duality_test(
            Process::Irw { species: 1 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            1.0,
            100_000,
            43,
        )
        .unwrap();
        assert!(result.z <= 4.0, "z = {}", result.z);
        assert!(result.z_forward_vs_exact.unwrap() <= 4.0);
        assert!(result.z_dual_vs_exact.unwrap() <= 4.0);
    }

    #[test]
    fn mc_results_independent_of_thread_count() {
        let g = Graph::edge();
        let space = enumerate_irw_sector(&g, 1, &[1]).unwrap();
        let d = build_irw_duality(&space, &space, 1.0).unwrap();
        let xi0 = space.unrank(0);
        let run = || {
            mc_duality_test(
                Process::Irw { species: 1 },
                &space,
                &space,
                &d,
                &xi0,
                &xi0,
                0.3,
                2000,
                5,
            )
            .unwrap()
        };
        let a = run();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(run);
        assert_eq!(a.mean_forward, b.mean_forward);
        assert_eq!(a.mean_dual, b.mean_dual);
        assert_eq!(a.stderr_forward, b.stderr_forward);
    }

    #[test]
    fn stationary_histogram_chi_square() {
        // start from the product multinomial and check the per-site species
        // histogram at the horizon against stationarity
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let g = Graph::path(3);
        let species = 2usize;
        let two_j = 2u32;
        let p = [0.5, 0.3, 0.2];
        let samples = 20_000usize;
        let horizon = 0.6;
        let totals: Vec<u64> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(777);
                rng.set_stream(i as u64);
                let mut data = Vec::new();
                for _ in 0..3 {
                    data.extend(sample_site_multinomial(&p, two_j, &mut rng));
                }
                let start = Config::new(species + 1, data);
                let traj = gillespie_run(Process::Sep { species }, &g, &start, horizon, &mut rng);
                let end = traj.final_state();
                let mut occ = vec![0u64; 3 * (species + 1)];
                for x in 0..3 {
                    for c in 0..=species {
                        occ[x * (species + 1) + c] += u64::from(end.site(x)[c]);
                    }
                }
                occ
            })
            .reduce(
                || vec![0u64; 3 * (species + 1)],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        // expected occupancy per (site, class): samples * 2j * p_c
        let mut chi2 = 0.0;
        let mut dof = 0usize;
        for x in 0..3 {
            for c in 0..=species {
                let expected = samples as f64 * f64::from(two_j) * p[c];
                let observed = totals[x * (species + 1) + c] as f64;
                chi2 += (observed - expected) * (observed - expected) / expected;
                dof += 1;
            }
        }
        // per site the class counts sum to samples * 2j
        dof -= 3;
        let dist = ChiSquared::new(dof as f64).unwrap();
        let pvalue = 1.0 - dist.cdf(chi2);
        assert!(pvalue > 0.001, "chi2 = {chi2}, dof = {dof}, p = {pvalue}");
    }
}

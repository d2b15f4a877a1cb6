//! The full verification suites: parameter grids, seeded random families,
//! and negative controls, emitted as structured records. The command-line
//! front end renders these; the acceptance tests assert them.

use crate::charlier;
use crate::generators::{check_detailed_balance, irw_generator, sep_generator};
use crate::krawtchouk::{
    kappa_identity_residual, krawtchouk_bilinear, krawtchouk_gf, krawtchouk_table_gf,
    orthogonality_sums, Kappa,
};
use crate::liealg::{
    casimir_y, check_eq5, check_eq7, check_prop41, intertwiner_sep, rho_p_matrix, sigma_p_direct,
    site_weights, spanning_set, weighted_adjoint, SlElement,
};
use crate::report::CheckRecord;
use crate::simulate::{mc_duality_test, Process};
use crate::statespace::{compositions_desc, enumerate_irw_sector, enumerate_sep, Config, Graph};
use crate::verify::{
    build_irw_duality, build_sep_duality, duality_residual, sep_duality_residual_factored,
    DualityMatrix,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator on a named stream; used everywhere a suite draws random
/// families so runs replay exactly.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

use seeded_rng as rng_for;

fn acceptance_graphs() -> Vec<(&'static str, Graph)> {
    vec![
        ("edge", Graph::edge()),
        ("path3", Graph::path(3)),
        ("triangle", Graph::cycle(3)),
    ]
}

/// Criterion 1: families built from random probability vectors satisfy the
/// defining conditions and their dual weights normalize.
pub fn kappa_validity(seed: u64) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for species in 1..=3usize {
        let mut rng = rng_for(seed, species as u64);
        let mut worst_identity: f64 = 0.0;
        let mut worst_sum: f64 = 0.0;
        for _ in 0..50 {
            let kappa = Kappa::random(species, &mut rng);
            worst_identity = worst_identity.max(kappa_identity_residual(
                kappa.nu(),
                kappa.p(),
                kappa.p_hat(),
                kappa.u(),
            ));
            worst_sum = worst_sum.max((kappa.p_hat().iter().sum::<f64>() - 1.0).abs());
        }
        let params = format!("n={species} trials=50");
        records.push(CheckRecord::le(
            "kappa-validity",
            "defining-identity-residual",
            &params,
            worst_identity,
            1e-12,
        ));
        records.push(CheckRecord::le(
            "kappa-validity",
            "dual-weight-sum-deviation",
            &params,
            worst_sum,
            1e-12,
        ));
    }
    records
}

fn grid_kappas(species: usize, seed: u64, stream: u64) -> Vec<(&'static str, Kappa)> {
    let uniform = {
        use num::BigRational;
        let share = BigRational::new(1.into(), (species as i64 + 1).into());
        Kappa::from_rational_p(&vec![share; species + 1]).expect("uniform family")
    };
    let mut rng = rng_for(seed, stream);
    vec![("uniform", uniform), ("random", Kappa::random(species, &mut rng))]
}

/// Criterion 2: the generating-function and bilinear-form evaluations agree
/// on every pair of compositions.
pub fn route_equivalence(seed: u64) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for species in 1..=3usize {
        for two_j in 1..=4u32 {
            for (kind, kappa) in grid_kappas(species, seed, 100 + two_j as u64) {
                let states = compositions_desc(two_j, species + 1);
                let mut worst: f64 = 0.0;
                for xi in &states {
                    for eta in &states {
                        let a = krawtchouk_gf(xi, eta, &kappa, two_j).expect("valid pair");
                        let b = krawtchouk_bilinear(xi, eta, &kappa, two_j).expect("valid pair");
                        worst = worst.max((a - b).abs());
                    }
                }
                records.push(CheckRecord::le(
                    "route-equivalence",
                    "gf-vs-bilinear",
                    &format!("n={species} two_j={two_j} family={kind}"),
                    worst,
                    1e-10,
                ));
            }
        }
    }
    records
}

/// Criterion 3: both orthogonality sums match their closed forms over the
/// same grid.
pub fn orthogonality_grid(seed: u64) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for species in 1..=3usize {
        for two_j in 1..=4u32 {
            for (kind, kappa) in grid_kappas(species, seed, 200 + two_j as u64) {
                let report = orthogonality_sums(&kappa, two_j).expect("valid family");
                records.push(CheckRecord::le(
                    "orthogonality",
                    "weighted-sums",
                    &format!("n={species} two_j={two_j} family={kind}"),
                    report.max_residual(),
                    report.tolerance,
                ));
            }
        }
    }
    records
}

/// Criterion 4: detailed balance for the product multinomial (exclusion) and
/// product Poisson (walkers) on the three acceptance graphs.
pub fn reversibility() -> Vec<CheckRecord> {
    let mut records = Vec::new();
    let p = [0.5, 0.3, 0.2];
    let lambda = 1.3;
    for (name, graph) in acceptance_graphs() {
        let space = enumerate_sep(&graph, 2, 2).expect("small space");
        let gen = sep_generator(&space, &graph).expect("matching space");
        let sites = graph.num_sites();
        let report = check_detailed_balance(&gen, &space, "product multinomial", |cfg| {
            (0..sites)
                .map(|x| {
                    crate::krawtchouk::multinomial_weight(&cfg.site_config(x), &p, 2)
                        .expect("valid site")
                })
                .product()
        });
        records.push(CheckRecord::le(
            "reversibility",
            "sep-detailed-balance",
            &format!("graph={name} n=2 two_j=2"),
            report.max_violation,
            report.tolerance,
        ));

        let sector = enumerate_irw_sector(&graph, 2, &[2, 1]).expect("small sector");
        let gen = irw_generator(&sector, &graph).expect("matching sector");
        let report = check_detailed_balance(&gen, &sector, "product poisson", |cfg| {
            (0..sites)
                .map(|x| charlier::poisson_weight(&cfg.site_config(x), lambda).expect("valid"))
                .product()
        });
        records.push(CheckRecord::le(
            "reversibility",
            "irw-detailed-balance",
            &format!("graph={name} n=2 totals=[2,1] lambda={lambda}"),
            report.max_violation,
            report.tolerance,
        ));
    }
    records
}

/// Criterion 5: exclusion self-duality over the full grid, with negative
/// controls showing the checks can fail.
pub fn sep_duality_grid(seed: u64) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for species in 1..=3usize {
        for two_j in 1..=3u32 {
            for (name, graph) in acceptance_graphs() {
                let space = enumerate_sep(&graph, species, two_j).expect("grid space");
                let mut rng = rng_for(seed, 500 + species as u64 * 10 + two_j as u64);
                let mut worst: f64 = 0.0;
                for _ in 0..20 {
                    let kappa = Kappa::random(species, &mut rng);
                    let report = sep_duality_residual_factored(&space, &graph, &kappa, 1e-10)
                        .expect("factored residual");
                    worst = worst.max(report.scaled_residual);
                }
                records.push(CheckRecord::le(
                    "sep-duality",
                    "generator-residual",
                    &format!("n={species} two_j={two_j} graph={name} kappas=20"),
                    worst,
                    1e-10,
                ));
            }
        }
    }
    records.extend(sep_negative_controls());
    records
}

/// The checks must be able to fail: a perturbed kernel value breaks the
/// duality residual, and a perturbed bordered matrix (which leaves duality
/// intact) is caught by the defining identity and the orthogonality sums.
pub fn sep_negative_controls() -> Vec<CheckRecord> {
    let graph = Graph::edge();
    let space = enumerate_sep(&graph, 2, 2).expect("small space");
    let gen = sep_generator(&space, &graph).expect("matching space");
    let kappa = Kappa::from_p(&[0.4, 0.35, 0.25]).expect("probability vector");
    let mut records = Vec::new();

    let mut table = krawtchouk_table_gf(&kappa, 2);
    table[(1, 1)] += 1e-3;
    let d = DualityMatrix::from_site_table(&table, 2, "perturbed-kernel-table");
    let report = duality_residual(&gen, &gen, &d, 1e-10).expect("control");
    records.push(CheckRecord::ge(
        "sep-duality",
        "control-perturbed-kernel-residual",
        "n=2 two_j=2 graph=edge delta=1e-3",
        report.scaled_residual,
        1e-6,
    ));

    let mut u = kappa.u().clone();
    u[(1, 1)] += 1e-3;
    let broken = Kappa::unchecked(kappa.nu(), kappa.p().to_vec(), kappa.p_hat().to_vec(), u.clone());
    let d = build_sep_duality(&space, &broken).expect("kernel");
    let report = duality_residual(&gen, &gen, &d, 1e-10).expect("control");
    records.push(CheckRecord::le(
        "sep-duality",
        "control-perturbed-family-keeps-duality",
        "n=2 two_j=2 graph=edge delta=1e-3",
        report.scaled_residual,
        1e-10,
    ));
    records.push(CheckRecord::ge(
        "sep-duality",
        "control-perturbed-family-identity-residual",
        "n=2 two_j=2 delta=1e-3",
        kappa_identity_residual(kappa.nu(), kappa.p(), kappa.p_hat(), &u),
        1e-6,
    ));
    let ortho = orthogonality_sums(&broken, 2).expect("control");
    records.push(CheckRecord::ge(
        "sep-duality",
        "control-perturbed-family-orthogonality-residual",
        "n=2 two_j=2 delta=1e-3",
        ortho.max_residual(),
        1e-6,
    ));
    records
}

/// Criterion 6: walker self-duality across all pairs of small sectors.
pub fn irw_duality_grid() -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for species in 1..=2usize {
        let sectors: Vec<Vec<u32>> = match species {
            1 => (0..=4u32).map(|a| vec![a]).collect(),
            _ => {
                let mut out = Vec::new();
                for a in 0..=4u32 {
                    for b in 0..=4u32 {
                        out.push(vec![a, b]);
                    }
                }
                out
            }
        };
        for lambda in [0.5, 1.0, 2.0] {
            for (name, graph) in acceptance_graphs() {
                let spaces: Vec<_> = sectors
                    .iter()
                    .map(|t| {
                        let space = enumerate_irw_sector(&graph, species, t).expect("sector");
                        let gen = irw_generator(&space, &graph).expect("generator");
                        (space, gen)
                    })
                    .collect();
                let mut worst: f64 = 0.0;
                for (space_a, gen_a) in &spaces {
                    for (space_b, gen_b) in &spaces {
                        let d = build_irw_duality(space_a, space_b, lambda).expect("kernel");
                        let report =
                            duality_residual(gen_a, gen_b, &d, 1e-10).expect("residual");
                        worst = worst.max(report.scaled_residual);
                    }
                }
                records.push(CheckRecord::le(
                    "irw-duality",
                    "generator-residual",
                    &format!(
                        "n={species} totals<=4 graph={name} lambda={lambda} pairs={}",
                        spaces.len() * spaces.len()
                    ),
                    worst,
                    1e-10,
                ));
            }
        }
    }
    records
}

/// Criterion 7: the representation-theory suite.
pub fn lie_checks(seed: u64) -> Vec<CheckRecord> {
    let mut records = Vec::new();

    // adjointness of both representations, and the two-site identity
    for species in 1..=2usize {
        for two_j in 1..=2u32 {
            let mut rng = rng_for(seed, 700 + species as u64 * 10 + two_j as u64);
            let mut worst_rho: f64 = 0.0;
            let mut worst_sigma: f64 = 0.0;
            let mut worst_eq5: f64 = 0.0;
            let mut worst_c_gap: f64 = 0.0;
            let mut worst_c_formula: f64 = 0.0;
            for _ in 0..20 {
                let kappa = Kappa::random(species, &mut rng);
                let w_p = site_weights(kappa.p(), two_j).expect("weights");
                for x in spanning_set(species) {
                    let rho = rho_p_matrix(&x, kappa.p(), two_j).expect("rho");
                    let rho_star = rho_p_matrix(&x.star(), kappa.p(), two_j).expect("rho");
                    worst_rho = worst_rho
                        .max((weighted_adjoint(&rho, &w_p) - rho_star).abs().max());
                    let sigma = sigma_p_direct(&x, &kappa, two_j);
                    let sigma_star = sigma_p_direct(&x.star(), &kappa, two_j);
                    worst_sigma = worst_sigma
                        .max((weighted_adjoint(&sigma, &w_p) - sigma_star).abs().max());
                }
                let eq5 = check_eq5(&kappa, two_j).expect("two-site identity");
                worst_eq5 = worst_eq5.max(eq5.residual_rho.max(eq5.residual_sigma));
                worst_c_gap = worst_c_gap.max((eq5.c_rho - eq5.c_sigma).abs());
                worst_c_formula = worst_c_formula.max((eq5.c_rho - eq5.closed_form).abs());
            }
            let params = format!("n={species} two_j={two_j} kappas=20");
            records.push(CheckRecord::le(
                "lie-checks",
                "rho-star-adjointness",
                &params,
                worst_rho,
                1e-12,
            ));
            records.push(CheckRecord::le(
                "lie-checks",
                "sigma-star-adjointness",
                &params,
                worst_sigma,
                1e-12,
            ));
            records.push(CheckRecord::le(
                "lie-checks",
                "two-site-identity-off-constant",
                &params,
                worst_eq5,
                1e-10,
            ));
            records.push(CheckRecord::le(
                "lie-checks",
                "two-site-constant-route-gap",
                &params,
                worst_c_gap,
                1e-10,
            ));
            records.push(CheckRecord::le(
                "lie-checks",
                "two-site-constant-closed-form",
                &params,
                worst_c_formula,
                1e-10,
            ));
        }
    }

    // conjugation automorphism: brackets preserved, coproduct element fixed
    for species in 1..=2usize {
        let mut rng = rng_for(seed, 730 + species as u64);
        let mut worst_bracket: f64 = 0.0;
        let mut worst_y: f64 = 0.0;
        for _ in 0..20 {
            let kappa = Kappa::random(species, &mut rng);
            for _ in 0..5 {
                let x = SlElement::random(species, &mut rng);
                let y = SlElement::random(species, &mut rng);
                let lhs = crate::liealg::ad_r(&x.bracket(&y), &kappa);
                let rhs = crate::liealg::ad_r(&x, &kappa)
                    .bracket(&crate::liealg::ad_r(&y, &kappa));
                let scale = 1.0 + rhs.matrix().abs().max();
                worst_bracket =
                    worst_bracket.max((lhs.matrix() - rhs.matrix()).abs().max() / scale);
            }
            let y = casimir_y(species);
            let canon = y.kron_canonical();
            let moved = y.ad_r_both(&kappa).kron_canonical();
            let scale = 1.0 + canon.abs().max();
            worst_y = worst_y.max((moved - canon).abs().max() / scale);
        }
        let params = format!("n={species} kappas=20");
        records.push(CheckRecord::le(
            "lie-checks",
            "conjugation-bracket-preservation",
            &params,
            worst_bracket,
            1e-12,
        ));
        records.push(CheckRecord::le(
            "lie-checks",
            "conjugation-fixes-coproduct-element",
            &params,
            worst_y,
            1e-12,
        ));
    }

    // intertwiner: unitarity and the kernel relation
    for species in 1..=2usize {
        for two_j in 1..=3u32 {
            let mut rng = rng_for(seed, 760 + species as u64 * 10 + two_j as u64);
            let mut worst_unitarity: f64 = 0.0;
            let mut worst_intertwine: f64 = 0.0;
            for _ in 0..10 {
                let kappa = Kappa::random(species, &mut rng);
                let iw = intertwiner_sep(&kappa, two_j, 1e-10).expect("unitary");
                worst_unitarity = worst_unitarity.max(iw.unitarity_defect);
                for x in spanning_set(species) {
                    let lhs = &iw.lambda
                        * rho_p_matrix(&x, kappa.p_hat(), two_j).expect("rho");
                    let rhs = sigma_p_direct(&x, &kappa, two_j) * &iw.lambda;
                    let scale = 1.0 + rhs.abs().max();
                    worst_intertwine = worst_intertwine.max((lhs - rhs).abs().max() / scale);
                }
            }
            let params = format!("n={species} two_j={two_j} kappas=10");
            records.push(CheckRecord::le(
                "lie-checks",
                "intertwiner-unitarity",
                &params,
                worst_unitarity,
                1e-10,
            ));
            records.push(CheckRecord::le(
                "lie-checks",
                "intertwiner-relation",
                &params,
                worst_intertwine,
                1e-10,
            ));
        }
    }

    // walker side: kernel shift relations and the coupling element
    for species in 1..=2usize {
        for lambda in [0.5, 1.0, 2.0] {
            let report = check_prop41(lambda, species, 8).expect("kernel relation");
            records.push(CheckRecord::le(
                "lie-checks",
                "kernel-shift-relations",
                &format!("n={species} lambda={lambda} window=8"),
                report.max_residual,
                1e-9,
            ));
        }
    }
    let edge = Graph::edge();
    for (species, totals) in [(1usize, vec![3u32]), (2, vec![2, 2])] {
        let space = enumerate_irw_sector(&edge, species, &totals).expect("sector");
        for lambda in [0.5, 1.0, 3.0] {
            let report = check_eq7(lambda, &space).expect("coupling");
            records.push(CheckRecord::le(
                "lie-checks",
                "coupling-element-vs-generator",
                &format!("n={species} totals={totals:?} lambda={lambda}"),
                report
                    .max_diff_direct
                    .max(report.max_diff_twisted)
                    .max(report.off_sector_leak),
                1e-12,
            ));
        }
    }
    records
}

/// Criterion 8: single-variable polynomial identities.
pub fn charlier_suite() -> Vec<CheckRecord> {
    let mut records = Vec::new();
    for lambda in [0.5, 1.0, 2.0] {
        // orthogonality under the Poisson weight, truncated far past the
        // mass: tail(60) * polygrowth << 1e-10 for these parameters
        let mut worst: f64 = 0.0;
        for m in 0..=6u32 {
            for mt in 0..=6u32 {
                let mut sum = 0.0;
                let mut mass = (-lambda as f64).exp();
                for z in 0..=60u32 {
                    if z > 0 {
                        mass *= lambda / f64::from(z);
                    }
                    sum += charlier::charlier(m, z, lambda).expect("valid")
                        * charlier::charlier(mt, z, lambda).expect("valid")
                        * mass;
                }
                let expect = if m == mt {
                    (1..=mt).map(f64::from).product::<f64>() * lambda.powi(-(mt as i32))
                } else {
                    0.0
                };
                worst = worst.max((sum - expect).abs());
            }
        }
        records.push(CheckRecord::le(
            "charlier",
            "poisson-orthogonality",
            &format!("lambda={lambda} degrees<=6 truncation=60"),
            worst,
            1e-8,
        ));

        let mut worst_shift: f64 = 0.0;
        for m in 0..=8u32 {
            for z in 0..=20u32 {
                if m >= 1 {
                    let lhs = f64::from(m) * charlier::charlier(m - 1, z, lambda).expect("v");
                    let rhs = lambda * charlier::charlier(m, z, lambda).expect("v")
                        - lambda * charlier::charlier(m, z + 1, lambda).expect("v");
                    let scale = lhs.abs().max(rhs.abs()).max(1.0);
                    worst_shift = worst_shift.max((lhs - rhs).abs() / scale);
                }
                let lhs = lambda * charlier::charlier(m + 1, z, lambda).expect("v");
                let low = if z == 0 {
                    0.0
                } else {
                    f64::from(z) * charlier::charlier(m, z - 1, lambda).expect("v")
                };
                let rhs = lambda * charlier::charlier(m, z, lambda).expect("v") - low;
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                worst_shift = worst_shift.max((lhs - rhs).abs() / scale);
            }
        }
        records.push(CheckRecord::le(
            "charlier",
            "raising-lowering-relative",
            &format!("lambda={lambda} m<=8 z<=20"),
            worst_shift,
            1e-12,
        ));
    }
    records
}

/// Criterion 9: expectation-level duality by Monte Carlo on the four
/// smallest configurations, compared against the semigroup reference.
pub fn mc_duality_suite(seed: u64, samples: usize) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    let edge = Graph::edge();

    let mut push = |name: &str, result: crate::simulate::McDualityResult| {
        let params = format!("{name} samples={samples}");
        records.push(CheckRecord::le(
            "mc-duality",
            "forward-vs-dual-z",
            &params,
            result.z,
            4.0,
        ));
        records.push(CheckRecord::le(
            "mc-duality",
            "forward-vs-exact-z",
            &params,
            result.z_forward_vs_exact.unwrap_or(f64::INFINITY),
            4.0,
        ));
        records.push(CheckRecord::le(
            "mc-duality",
            "dual-vs-exact-z",
            &params,
            result.z_dual_vs_exact.unwrap_or(f64::INFINITY),
            4.0,
        ));
    };

    {
        let space = enumerate_sep(&edge, 1, 1).expect("space");
        let kappa = Kappa::from_p(&[0.5, 0.5]).expect("family");
        let d = build_sep_duality(&space, &kappa).expect("kernel");
        let xi0 = Config::new(2, vec![0, 1, 1, 0]);
        let eta0 = Config::new(2, vec![1, 0, 0, 1]);
        let r = mc_duality_test(
            Process::Sep { species: 1 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            0.5,
            samples,
            seed,
        )
        .expect("mc");
        push("sep n=1 two_j=1 T=0.5", r);
    }
    {
        let space = enumerate_sep(&edge, 2, 1).expect("space");
        let kappa = Kappa::from_p(&[0.4, 0.35, 0.25]).expect("family");
        let d = build_sep_duality(&space, &kappa).expect("kernel");
        let xi0 = Config::new(3, vec![0, 1, 0, 0, 0, 1]);
        let eta0 = Config::new(3, vec![0, 0, 1, 1, 0, 0]);
        let r = mc_duality_test(
            Process::Sep { species: 2 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            0.5,
            samples,
            seed + 1,
        )
        .expect("mc");
        push("sep n=2 two_j=1 T=0.5", r);
    }
    {
        let space = enumerate_irw_sector(&edge, 1, &[1]).expect("sector");
        let d = build_irw_duality(&space, &space, 1.0).expect("kernel");
        let xi0 = space.unrank(0);
        let eta0 = space.unrank(1);
        let r = mc_duality_test(
            Process::Irw { species: 1 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            1.0,
            samples,
            seed + 2,
        )
        .expect("mc");
        push("irw n=1 totals=[1] lambda=1 T=1", r);
    }
    {
        let space = enumerate_irw_sector(&edge, 2, &[1, 1]).expect("sector");
        let d = build_irw_duality(&space, &space, 1.0).expect("kernel");
        let xi0 = space.unrank(0);
        let eta0 = space.unrank(3);
        let r = mc_duality_test(
            Process::Irw { species: 2 },
            &space,
            &space,
            &d,
            &xi0,
            &eta0,
            1.0,
            samples,
            seed + 3,
        )
        .expect("mc");
        push("irw n=2 totals=[1,1] lambda=1 T=1", r);
    }
    records
}

/// Everything except the byte-determinism criterion, which is asserted by
/// serializing this suite twice.
pub fn full_suite(seed: u64, mc_samples: usize) -> Vec<CheckRecord> {
    let mut records = Vec::new();
    records.extend(kappa_validity(seed));
    records.extend(route_equivalence(seed));
    records.extend(orthogonality_grid(seed));
    records.extend(reversibility());
    records.extend(sep_duality_grid(seed));
    records.extend(irw_duality_grid());
    records.extend(lie_checks(seed));
    records.extend(charlier_suite());
    records.extend(mc_duality_suite(seed, mc_samples));
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_pass;

    #[test]
    fn validity_suite_passes_quickly() {
        let records = kappa_validity(11);
        assert_eq!(records.len(), 6);
        assert!(all_pass(&records));
    }

    #[test]
    fn charlier_suite_passes() {
        assert!(all_pass(&charlier_suite()));
    }

    #[test]
    fn reversibility_suite_passes() {
        assert!(all_pass(&reversibility()));
    }

    #[test]
    fn suites_are_deterministic() {
        let a = kappa_validity(3);
        let b = kappa_validity(3);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.value, y.value);
            assert_eq!(x.params, y.params);
        }
    }
}

use duality_core::krawtchouk::Kappa;
use duality_core::statespace::{enumerate_sep, Graph};
use duality_core::verify::sep_duality_residual_factored;
use std::time::Instant;

fn main() {
    for (graph, label) in [(Graph::path(3), "path3"), (Graph::cycle(3), "triangle")] {
        let space = enumerate_sep(&graph, 3, 3).unwrap();
        let mut rng = rand::rng();
        let t0 = Instant::now();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let kappa = Kappa::random(3, &mut rng);
            let r = sep_duality_residual_factored(&space, &graph, &kappa, 1e-10).unwrap();
            worst = worst.max(r.scaled_residual);
            assert!(r.pass, "{}", r.scaled_residual);
        }
        println!("{label}: 20 kappas in {:?}, worst scaled residual {:.2e}", t0.elapsed(), worst);
    }
}

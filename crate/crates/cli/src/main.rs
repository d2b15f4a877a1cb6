//! Command-line front door: parse a run configuration, execute the matching
//! verification pipeline, and emit structured reports.
//!
//! Exit status: 0 when every check passes, 1 when any check fails, 2 on a
//! configuration error. Reports are byte-identical across repeated seeded
//! runs; timing chatter goes to stderr only.

use clap::{Parser, Subcommand, ValueEnum};
use duality_core::krawtchouk::{kappa_from_p_text, Kappa};
use duality_core::report::{all_pass, CheckRecord};
use duality_core::simulate::{mc_duality_test, Process};
use duality_core::statespace::{enumerate_irw_sector, enumerate_sep, Graph};
use duality_core::verify::{
    build_irw_duality, build_sep_duality, duality_residual, sep_duality_residual_factored,
};
use duality_core::{suites, Config};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Csv,
    JsonLines,
}

#[derive(Parser)]
#[command(
    name = "duality",
    about = "Exact and statistical self-duality checks for multi-species exclusion and walker processes"
)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exclusion-process self-duality residuals for one configuration.
    VerifySep {
        /// Graph preset (edge, path-K, cycle-K, complete-K) or edge-list file.
        #[arg(long)]
        graph: String,
        /// Number of particle species.
        #[arg(long)]
        n: usize,
        /// Per-site capacity.
        #[arg(long)]
        two_j: u32,
        /// Probability vector, comma-separated rationals or decimals.
        #[arg(long, conflicts_with = "kappa")]
        from_p: Option<String>,
        /// Family file produced by `kappa` serialization.
        #[arg(long)]
        kappa: Option<PathBuf>,
        /// Additional random families to test.
        #[arg(long, default_value_t = 0)]
        kappas: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Walker-process self-duality residuals between two sectors.
    VerifyIrw {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        n: usize,
        /// Particle totals per species, comma-separated.
        #[arg(long)]
        totals: String,
        /// Totals of the dual sector (defaults to the same sector).
        #[arg(long)]
        dual_totals: Option<String>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Orthogonality sums of one family.
    Orthogonality {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        two_j: u32,
        #[arg(long, conflicts_with = "kappa")]
        from_p: Option<String>,
        #[arg(long)]
        kappa: Option<PathBuf>,
    },
    /// The representation-theory suite.
    LieChecks {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Monte Carlo duality comparison for one configuration.
    Simulate {
        /// sep or irw.
        #[arg(long)]
        process: String,
        #[arg(long)]
        graph: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        two_j: Option<u32>,
        #[arg(long)]
        totals: Option<String>,
        #[arg(long)]
        from_p: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Time horizon.
        #[arg(long, default_value_t = 0.5)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Rank of the forward initial state.
        #[arg(long, default_value_t = 0)]
        xi0: usize,
        /// Rank of the dual initial state (defaults to the last state).
        #[arg(long)]
        eta0: Option<usize>,
    },
    /// Every acceptance suite, summarized per criterion.
    All {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn parse_graph(spec: &str) -> Result<Graph, String> {
    let preset = |k: &str| k.parse::<usize>().map_err(|_| format!("bad size in {spec:?}"));
    match spec {
        "edge" => return Ok(Graph::edge()),
        "triangle" => return Ok(Graph::cycle(3)),
        _ => {}
    }
    if let Some(k) = spec.strip_prefix("path-").or_else(|| spec.strip_prefix("path")) {
        if let Ok(k) = preset(k) {
            return Ok(Graph::path(k));
        }
    }
    if let Some(k) = spec.strip_prefix("cycle-").or_else(|| spec.strip_prefix("cycle")) {
        if let Ok(k) = preset(k) {
            return Ok(Graph::cycle(k));
        }
    }
    if let Some(k) = spec
        .strip_prefix("complete-")
        .or_else(|| spec.strip_prefix("complete"))
    {
        if let Ok(k) = preset(k) {
            return Ok(Graph::complete(k));
        }
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| format!("graph {spec:?} is not a preset and not readable: {e}"))?;
    Graph::from_edge_list(&text).map_err(|e| format!("graph file {spec:?}: {e}"))
}

fn parse_totals(text: &str) -> Result<Vec<u32>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad total {t:?}")))
        .collect()
}

fn load_kappa(
    n: usize,
    from_p: &Option<String>,
    kappa: &Option<PathBuf>,
) -> Result<Kappa, String> {
    let k = match (from_p, kappa) {
        (Some(p), _) => kappa_from_p_text(p).map_err(|e| e.to_string())?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            Kappa::from_text(&text).map_err(|e| e.to_string())?
        }
        (None, None) => return Err("need either --from-p or --kappa".into()),
    };
    if k.species() != n {
        return Err(format!(
            "family has {} species but --n is {n}",
            k.species()
        ));
    }
    Ok(k)
}

// Configuration phase: everything here exits with status 2 on failure.
fn run(command: &Command) -> Result<Vec<CheckRecord>, String> {
    match command {
        Command::VerifySep {
            graph,
            n,
            two_j,
            from_p,
            kappa,
            kappas,
            seed,
            tol,
        } => {
            let graph = parse_graph(graph)?;
            let space = enumerate_sep(&graph, *n, *two_j).map_err(|e| e.to_string())?;
            let mut families = Vec::new();
            if from_p.is_some() || kappa.is_some() {
                families.push(("given".to_string(), load_kappa(*n, from_p, kappa)?));
            }
            if families.is_empty() && *kappas == 0 {
                return Err("need --from-p, --kappa, or --kappas".into());
            }
            let mut rng = {
                use duality_core::suites::seeded_rng;
                seeded_rng(*seed, 1)
            };
            for i in 0..*kappas {
                families.push((format!("random{i}"), Kappa::random(*n, &mut rng)));
            }
            let mut records = Vec::new();
            for (kind, family) in &families {
                let report = sep_duality_residual_factored(&space, &graph, family, *tol)
                    .map_err(|e| e.to_string())?;
                records.push(CheckRecord::le(
                    "verify-sep",
                    "generator-residual",
                    &format!(
                        "{} family={kind} raw={:.3e} scale={:.3e}",
                        space.describe(),
                        report.residual,
                        report.scale
                    ),
                    report.scaled_residual,
                    *tol,
                ));
            }
            Ok(records)
        }
        Command::VerifyIrw {
            graph,
            n,
            totals,
            dual_totals,
            lambda,
            tol,
        } => {
            let graph = parse_graph(graph)?;
            let totals = parse_totals(totals)?;
            let dual = match dual_totals {
                Some(t) => parse_totals(t)?,
                None => totals.clone(),
            };
            let space_a = enumerate_irw_sector(&graph, *n, &totals).map_err(|e| e.to_string())?;
            let space_b = enumerate_irw_sector(&graph, *n, &dual).map_err(|e| e.to_string())?;
            let gen_a = duality_core::generators::irw_generator(&space_a, &graph)
                .map_err(|e| e.to_string())?;
            let gen_b = duality_core::generators::irw_generator(&space_b, &graph)
                .map_err(|e| e.to_string())?;
            let d = build_irw_duality(&space_a, &space_b, *lambda).map_err(|e| e.to_string())?;
            let report = duality_residual(&gen_a, &gen_b, &d, *tol).map_err(|e| e.to_string())?;
            Ok(vec![CheckRecord::le(
                "verify-irw",
                "generator-residual",
                &format!(
                    "{} dual_totals={dual:?} lambda={lambda} raw={:.3e} scale={:.3e}",
                    space_a.describe(),
                    report.residual,
                    report.scale
                ),
                report.scaled_residual,
                *tol,
            )])
        }
        Command::Orthogonality {
            n,
            two_j,
            from_p,
            kappa,
        } => {
            let family = load_kappa(*n, from_p, kappa)?;
            let report = duality_core::krawtchouk::orthogonality_sums(&family, *two_j)
                .map_err(|e| e.to_string())?;
            Ok(vec![
                CheckRecord::le(
                    "orthogonality",
                    "dual-weight-sum",
                    &format!("n={n} two_j={two_j}"),
                    report.max_residual_dual_weight,
                    report.tolerance,
                ),
                CheckRecord::le(
                    "orthogonality",
                    "primal-weight-sum",
                    &format!("n={n} two_j={two_j}"),
                    report.max_residual_primal_weight,
                    report.tolerance,
                ),
            ])
        }
        Command::LieChecks { seed } => Ok(suites::lie_checks(*seed)),
        Command::Simulate {
            process,
            graph,
            n,
            two_j,
            totals,
            from_p,
            lambda,
            t,
            samples,
            seed,
            xi0,
            eta0,
        } => {
            let graph = parse_graph(graph)?;
            let (proc_kind, space, d) = match process.as_str() {
                "sep" => {
                    let two_j = two_j.ok_or("sep needs --two-j")?;
                    let p = from_p.as_ref().ok_or("sep needs --from-p")?;
                    let family = kappa_from_p_text(p).map_err(|e| e.to_string())?;
                    if family.species() != *n {
                        return Err("family size does not match --n".into());
                    }
                    let space = enumerate_sep(&graph, *n, two_j).map_err(|e| e.to_string())?;
                    let d = build_sep_duality(&space, &family).map_err(|e| e.to_string())?;
                    (Process::Sep { species: *n }, space, d)
                }
                "irw" => {
                    let totals = parse_totals(totals.as_ref().ok_or("irw needs --totals")?)?;
                    let lambda = lambda.ok_or("irw needs --lambda")?;
                    let space =
                        enumerate_irw_sector(&graph, *n, &totals).map_err(|e| e.to_string())?;
                    let d = build_irw_duality(&space, &space, lambda).map_err(|e| e.to_string())?;
                    (Process::Irw { species: *n }, space, d)
                }
                other => return Err(format!("unknown process {other:?}")),
            };
            if *xi0 >= space.size() {
                return Err(format!("--xi0 {xi0} out of range (size {})", space.size()));
            }
            let eta0 = eta0.unwrap_or(space.size() - 1);
            if eta0 >= space.size() {
                return Err(format!("--eta0 {eta0} out of range"));
            }
            let xi0: Config = space.unrank(*xi0);
            let eta0: Config = space.unrank(eta0);
            let result = mc_duality_test(
                proc_kind, &space, &space, &d, &xi0, &eta0, *t, *samples, *seed,
            )
            .map_err(|e| e.to_string())?;
            let params = format!(
                "{} T={t} samples={samples} seed={seed} forward={:.6} dual={:.6} exact={:?}",
                space.describe(),
                result.mean_forward,
                result.mean_dual,
                result.exact
            );
            let mut records = vec![CheckRecord::le(
                "simulate",
                "forward-vs-dual-z",
                &params,
                result.z,
                4.0,
            )];
            if let (Some(zf), Some(zd)) = (result.z_forward_vs_exact, result.z_dual_vs_exact) {
                records.push(CheckRecord::le(
                    "simulate",
                    "forward-vs-exact-z",
                    &params,
                    zf,
                    4.0,
                ));
                records.push(CheckRecord::le(
                    "simulate",
                    "dual-vs-exact-z",
                    &params,
                    zd,
                    4.0,
                ));
            }
            Ok(records)
        }
        Command::All { seed, samples } => Ok(suites::full_suite(*seed, *samples)),
    }
}

fn render_table(records: &[CheckRecord]) -> String {
    let mut out = String::from("suite | check | params | value | tolerance | op | pass\n");
    for r in records {
        let op = match r.op {
            duality_core::report::Cmp::Le => "<=",
            duality_core::report::Cmp::Ge => ">=",
        };
        out.push_str(&format!(
            "{} | {} | {} | {:.6e} | {:.1e} | {} | {}\n",
            r.suite,
            r.check,
            r.params,
            r.value,
            r.tolerance,
            op,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    out
}

fn render_csv(records: &[CheckRecord]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

fn render_jsonl(records: &[CheckRecord]) -> Result<String, String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| e.to_string())?);
        out.push('\n');
    }
    Ok(out)
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("DUALITY_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let cli = Cli::parse();
    let started = std::time::Instant::now();
    let records = match run(&cli.command) {
        Ok(records) => records,
        Err(message) => {
            eprintln!("configuration error: {message}");
            return ExitCode::from(2);
        }
    };
    let rendered = match cli.format {
        Format::Table => Ok(render_table(&records)),
        Format::Csv => render_csv(&records),
        Format::JsonLines => render_jsonl(&records),
    };
    let rendered = match rendered {
        Ok(r) => r,
        Err(message) => {
            eprintln!("report error: {message}");
            return ExitCode::from(2);
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                eprintln!("cannot write {path:?}: {e}");
                return ExitCode::from(2);
            }
        }
        None => {
            print!("{rendered}");
            let _ = std::io::stdout().flush();
        }
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    eprintln!(
        "{} checks, {} failed, {:.1}s",
        records.len(),
        failed,
        started.elapsed().as_secs_f64()
    );
    if all_pass(&records) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

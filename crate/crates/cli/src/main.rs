use clap::{Args, Parser, Subcommand};
use fragkit::analytics::{asymptotic_coefficient, filippov_lambda, filippov_rho_cdf, gamma_z, m_series, psi_prime_at_malthus, rho_moment, rho_moments};
use fragkit::estimators::{cdf_distance, empirical_weighted_measure};
use fragkit::rng::{Domain, StreamFactory};
use fragkit::simulator::{run_replicates, sample_y, tagged_fragment_path, SimulationConfig};
use fragkit::{Error, LawSpec, ReproductionLaw};
use fragkit_cli::validate::{run_suite, Suite, SuiteConfig};
use fragkit_cli::{tidy, BUILD_ID};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_HELP: &str = r#"A law file is a JSON object {"kind": ..., "params": {...}, "overrides": {...}}.
"params" is omitted for kinds without parameters and "overrides" is optional.

  {"kind": "binary_uniform_conservative"}
  {"kind": "stick_breaking_lossy"}
  {"kind": "stick_breaking_conservative"}
  {"kind": "filippov_power", "params": {"lambda": 2, "theta": 1}}
  {"kind": "dirichlet_polynomial", "params": {"terms": [{"lambda": 3, "theta": 1}, {"lambda": -1, "theta": 2}]}}
  {"kind": "atomic", "params": {"outcomes": [{"probability": 1, "sizes": [0.5, 0.5]}]}}
  {"kind": "poisson", "params": {"first": {"type": "uniform"},
                                 "intensity": [{"type": "power", "lambda": 1, "theta": 1}]}}
  {"kind": "log_squared_power", "params": {"c": 1.0}}

overrides: {"arithmetic_flag": bool, "beta_a": number}. Unknown fields are rejected."#;

#[derive(Parser)]
#[command(name = "fragkit", version = BUILD_ID, about = "Self-similar fragmentation processes: analytics and simulation")]
struct Cli {
    /// Worker threads for replicate-parallel commands (output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LawArg {
    /// JSON law specification.
    #[arg(long)]
    law: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Law utilities.
    Law {
        #[command(subcommand)]
        action: LawAction,
    },
    /// Print the Malthusian exponent β*.
    Malthus {
        #[command(flatten)]
        law: LawArg,
    },
    /// Mean power sum m(t, β) from the series representation.
    Mseries {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        /// Real or complex, e.g. 1.3 or 1.3+0.5i.
        #[arg(long, allow_hyphen_values = true)]
        beta: Complex64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-12)]
        rel_tol: f64,
    },
    /// The extrapolated product γ(z, β).
    Gamma {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        z: Complex64,
        #[arg(long, allow_hyphen_values = true)]
        beta: Complex64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Coefficient C(β) of the large-t behaviour m(t, β) ~ C(β) t^{-(β-β*)/α}.
    AsymCoeff {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: Complex64,
    },
    /// Moments ∫x^{αk} ρ(dx) as CSV `k,moment`.
    RhoMoments {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        kmax: u32,
    },
    /// Simulate replicates; CSV `replicate,t,n_particles,M_beta_star,frozen_bound`.
    Simulate {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        tmax: f64,
        /// Comma-separated snapshot times (default: tmax).
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        #[arg(long)]
        replicates: u64,
        #[arg(long)]
        seed: u64,
        /// Child floor below which lineages are frozen.
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        max_particles: Option<usize>,
        /// Per-particle dump, CSV `replicate,t,size`.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tagged-fragment sizes L_t; CSV `path,t,size`.
    Tagged {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long)]
        paths: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Draws of the exponential functional Y; CSV `index,y,tail_bound`.
    SampleY {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
    },
    /// Run a validation suite; exits with 2 when a check fails.
    Validate {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 10_000)]
        replicates: u64,
        #[arg(long)]
        seed: u64,
        /// Snapshot time of the moments and cdf suites.
        #[arg(long, default_value_t = 30.0)]
        tmax: f64,
        /// Time ladder of the martingale and l2 suites.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long, default_value_t = 0.02)]
        ks_limit: f64,
        /// Write the JSON report here instead of after the table on stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Weighted empirical measure at time t; writes a histogram CSV `bin_left,bin_right,mass`.
    RhoEmpirical {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        replicates: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        hist: PathBuf,
    },
}

#[derive(Subcommand)]
enum LawAction {
    /// Print φ at probe points, β*, and the law's flags.
    Inspect { spec: PathBuf },
}

enum Failure {
    Usage(String),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Spec(_) => Failure::Usage(format!("{e}\n\n{SCHEMA_HELP}")),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Checks) => ExitCode::from(2),
    }
}

fn load_law(path: &Path) -> Result<ReproductionLaw, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(LawSpec::from_json(&text)?.build()?)
}

fn print_json(v: &Value) -> Outcome {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn complex_json(z: Complex64) -> Value {
    if z.im == 0.0 {
        json!(z.re)
    } else {
        json!({"re": z.re, "im": z.im})
    }
}

fn csv_sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Law { action: LawAction::Inspect { spec } } => inspect(&spec),
        Command::Malthus { law } => {
            let law = load_law(&law.law)?;
            println!("{:.10}", law.beta_star()?);
            Ok(())
        }
        Command::Mseries { law, alpha, beta, t, rel_tol } => {
            let law = load_law(&law.law)?;
            let s = m_series(&law, alpha, t, beta, rel_tol)?;
            print_json(&json!({
                "build": BUILD_ID,
                "value": complex_json(s.value),
                "precision_bits": s.working_precision_bits,
                "digits_lost": s.cancellation_digits_lost,
                "terms": s.terms_used,
            }))
        }
        Command::Gamma { law, alpha, z, beta, tol } => {
            let law = load_law(&law.law)?;
            let g = gamma_z(&law, alpha, z, beta, tol)?;
            print_json(&json!({
                "build": BUILD_ID,
                "value": complex_json(g.value),
                "truncation_k": g.truncation_k,
                "tail_estimate": g.tail_estimate,
            }))
        }
        Command::AsymCoeff { law, alpha, beta } => {
            let law = load_law(&law.law)?;
            let c = asymptotic_coefficient(&law, alpha, beta)?;
            print_json(&json!({
                "build": BUILD_ID,
                "value": complex_json(c),
                "beta_star": law.beta_star()?,
            }))
        }
        Command::RhoMoments { law, alpha, kmax } => {
            let law = load_law(&law.law)?;
            let m = rho_moments(&law, alpha, kmax)?;
            let mut out = io::stdout().lock();
            writeln!(out, "k,moment")?;
            for k in 1..=kmax as usize {
                writeln!(out, "{k},{}", tidy(m.get(k)))?;
            }
            Ok(())
        }
        Command::Simulate { law, alpha, tmax, snapshots, replicates, seed, floor, max_particles, dump, out } => {
            let law = load_law(&law.law)?;
            let times = if snapshots.is_empty() { vec![tmax] } else { snapshots };
            let mut cfg = SimulationConfig::new(alpha, times, seed);
            cfg.t_max = tmax;
            if let Some(f) = floor {
                cfg.child_floor = f;
            }
            if let Some(m) = max_particles {
                cfg.max_particles = m;
            }
            let bs = law.beta_star()?;
            let runs = run_replicates(&cfg, &law, 0, replicates)?;
            let mut w = csv_sink(out.as_deref())?;
            writeln!(w, "replicate,t,n_particles,M_beta_star,frozen_bound")?;
            for r in &runs {
                for s in &r.snapshots {
                    writeln!(w, "{},{},{},{},{}", r.replicate_id, s.t, s.sizes.len(), s.power_sum(bs), s.frozen_beta_mass_bound)?;
                }
            }
            w.flush()?;
            if let Some(path) = dump {
                let mut d = BufWriter::new(File::create(path)?);
                writeln!(d, "replicate,t,size")?;
                for r in &runs {
                    for s in &r.snapshots {
                        for x in &s.sizes {
                            writeln!(d, "{},{},{x}", r.replicate_id, s.t)?;
                        }
                    }
                }
                d.flush()?;
            }
            let capped = runs.iter().filter(|r| r.cap_exceeded).count();
            if capped > 0 {
                eprintln!("warning: {capped} replicate(s) hit the population cap; their later snapshots are missing");
            }
            Ok(())
        }
        Command::Tagged { law, alpha, times, paths, seed } => {
            let law = load_law(&law.law)?;
            let tag = law.tilted_tag_law()?;
            let t_max = times.iter().copied().fold(0.0, f64::max);
            let factory = StreamFactory::new(seed);
            let rows: Vec<Vec<f64>> = (0..paths)
                .into_par_iter()
                .map(|i| {
                    let p = tagged_fragment_path(&tag, alpha, t_max, &mut factory.stream(Domain::Tagged, i, 2));
                    times.iter().map(|&t| p.size_at(t)).collect()
                })
                .collect();
            let mut w = BufWriter::new(io::stdout().lock());
            writeln!(w, "path,t,size")?;
            for (i, row) in rows.iter().enumerate() {
                for (t, x) in times.iter().zip(row) {
                    writeln!(w, "{i},{t},{x}")?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::SampleY { law, alpha, n, seed, eps } => {
            let law = load_law(&law.law)?;
            let tag = law.tilted_tag_law()?;
            let factory = StreamFactory::new(seed);
            let ys: Vec<_> =
                (0..n).into_par_iter().map(|i| sample_y(&tag, alpha, eps, &mut factory.stream(Domain::Tagged, i, 0))).collect();
            let mut w = BufWriter::new(io::stdout().lock());
            writeln!(w, "index,y,tail_bound")?;
            for (i, y) in ys.iter().enumerate() {
                writeln!(w, "{i},{},{}", y.value, y.tail_bound)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Validate { law: law_arg, alpha, suite, replicates, seed, tmax, times, depth, floor, ks_limit, report } => {
            let law = load_law(&law_arg.law)?;
            let mut cfg = SuiteConfig::new(alpha, replicates, seed);
            cfg.t_max = tmax;
            cfg.times = times;
            cfg.depth = depth;
            cfg.child_floor = floor;
            cfg.ks_limit = ks_limit;
            let outcome = run_suite(&law, suite, &cfg)?;
            let pass = outcome.report.all_pass();
            let doc = json!({
                "build": BUILD_ID,
                "law": law.name(),
                "alpha": alpha,
                "suite": suite.to_string(),
                "replicates": replicates,
                "seed": seed,
                "checks": outcome.report.checks,
                "notes": outcome.notes,
                "all_pass": pass,
            });
            print!("{}", outcome.report.table());
            for n in &outcome.notes {
                println!("note: {n}");
            }
            match report {
                Some(p) => std::fs::write(p, serde_json::to_string_pretty(&doc).expect("serialisable") + "\n")?,
                None => {
                    println!();
                    print_json(&doc)?;
                }
            }
            if pass {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::RhoEmpirical { law, alpha, t, replicates, seed, bins, floor, hist } => {
            let law = load_law(&law.law)?;
            let bs = law.beta_star()?;
            let mut cfg = SimulationConfig::new(alpha, vec![t], seed);
            if let Some(f) = floor {
                cfg.child_floor = f;
            }
            let snaps: Vec<_> = run_replicates(&cfg, &law, 0, replicates)?
                .into_iter()
                .filter_map(|r| r.snapshots.into_iter().next())
                .collect();
            let measure = empirical_weighted_measure(&snaps, alpha, bs)?;
            let edges = measure.default_edges(bins);
            let mass = measure.histogram(&edges);
            let mut w = BufWriter::new(File::create(&hist)?);
            writeln!(w, "bin_left,bin_right,mass")?;
            for (i, m) in mass.iter().enumerate() {
                writeln!(w, "{},{},{m}", edges[i], edges[i + 1])?;
            }
            w.flush()?;
            let moments: Vec<Value> = (1..=3u32)
                .map(|k| {
                    let (m, se) = measure.moment(k);
                    json!({"k": k, "estimate": m, "se": se, "rho": rho_moment(&law, alpha, k).ok()})
                })
                .collect();
            let ks = filippov_lambda(&law).map(|l| cdf_distance(&measure, |x| filippov_rho_cdf(l, alpha, x))).transpose()?;
            let (total, total_se) = measure.total();
            print_json(&json!({
                "build": BUILD_ID,
                "law": law.name(),
                "t": t,
                "replicates": measure.replicates(),
                "total_weight": {"estimate": total, "se": total_se},
                "moments": moments,
                "kolmogorov_to_rho": ks,
            }))
        }
    }
}

fn inspect(path: &Path) -> Outcome {
    let law = load_law(path)?;
    let a = law.abscissa();
    let probes: Vec<f64> = if a.value.is_finite() {
        [0.05, 0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|d| a.value + d).collect()
    } else {
        vec![-1.0, 0.0, 0.5, 1.0, 2.0, 4.0]
    };
    let phi: Vec<Value> = probes.iter().map(|&b| json!({"beta": b, "phi": law.phi_real(b).ok()})).collect();
    let (beta_star, malthus_error) = match law.beta_star() {
        Ok(b) => (Some(b), None),
        Err(e) => (None, Some(e.to_string())),
    };
    print_json(&json!({
        "build": BUILD_ID,
        "name": law.name(),
        "kind": law.kind(),
        "abscissa": {
            "value": a.value.is_finite().then_some(a.value + 0.0),
            "closed": a.closed,
            "estimated_interval": a.estimated,
        },
        "phi": phi,
        "beta_star": beta_star,
        "malthus_error": malthus_error,
        "psi_prime_at_beta_star": psi_prime_at_malthus(&law).ok(),
        "arithmetic": law.is_arithmetic(),
        "conservative": law.is_conservative(),
        "atom_mass_at_one": law.atom_mass_at_one() + 0.0,
        "closed_form_transform": law.has_closed_form(),
        "sampler": law.has_sampler(),
    }))
}

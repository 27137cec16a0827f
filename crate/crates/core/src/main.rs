use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rfd_nls::exec::Execution;
use rfd_nls::harness::{
    convergence_study, emit_report, parse_config, run_single, verify_properties, RunConfig, VariantName,
    DEFAULT_SIZES,
};
use rfd_nls::ProblemId;

#[derive(Parser)]
#[command(name = "rfd", version, about = "Relaxation finite difference solver for 1D NLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write a JSON error report.
    Solve(RunArgs),
    /// Run a convergence study and write CSV and JSON tables.
    Converge(RunArgs),
    /// Run the operator and mollifier property suite.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mesh sizes J for the operator checks.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES.to_vec())]
        sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<ProblemId>,
    #[arg(long)]
    variant: Option<VariantName>,
    /// Number of interior nodes J.
    #[arg(long = "grid")]
    grid: Option<usize>,
    /// Number of time steps N.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long = "final-time")]
    final_time: Option<f64>,
    #[arg(long = "delta-star")]
    delta_star: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    levels: Option<usize>,
    /// Run study levels one after another.
    #[arg(long)]
    sequential: bool,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => parse_config(path)?,
            None => {
                let problem = self.problem.context("--problem is required without --config")?;
                let j = self.grid.context("--grid is required without --config")?;
                let n = self.steps.context("--steps is required without --config")?;
                RunConfig::new(problem, j, n)
            }
        };
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(j) = self.grid {
            cfg.interior = j;
        }
        if let Some(n) = self.steps {
            cfg.steps = n;
        }
        if let Some(t) = self.final_time {
            cfg.final_time = Some(t);
        }
        if let Some(d) = self.delta_star {
            cfg.delta_star = Some(d);
        }
        if let Some(o) = &self.out {
            cfg.output_dir = Some(o.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(l) = self.levels {
            cfg.levels = l;
        }
        if self.sequential {
            cfg.execution = Execution::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4e}"))
}

enum Outcome {
    Ok,
    PropertyFailure,
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.resolve()?;
            let report = run_single(&cfg)?;
            let path = cfg.resolve_output_dir().join("report.json");
            emit_report(&report, &path)?;
            println!(
                "{} J={} N={}: node H1 {} half H1 {} relax H1 {} charge drift {:.3e} ({:.1} ms)",
                cfg.problem,
                report.interior,
                report.steps,
                fmt_opt(report.err_node_h1),
                fmt_opt(report.err_half_h1),
                fmt_opt(report.err_relax_h1),
                report.charge_drift,
                report.wall_ms
            );
            println!("wrote {}", path.display());
        }
        Command::Converge(args) => {
            let cfg = args.resolve()?;
            let table = convergence_study(&cfg)?;
            let dir = cfg.resolve_output_dir();
            std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
            let csv_path = dir.join("eoc.csv");
            let file = std::fs::File::create(&csv_path).with_context(|| csv_path.display().to_string())?;
            table.write_csv(file)?;
            emit_report(&table, &dir.join("eoc.json"))?;
            print!("{}", table.to_csv_string()?);
            println!(
                "slopes: node {} half {} relax {}",
                fmt_opt(table.slope_node),
                fmt_opt(table.slope_half),
                fmt_opt(table.slope_relax)
            );
            println!("wrote {}", csv_path.display());
        }
        Command::Verify {
            seed,
            sizes,
            out,
            sequential,
        } => {
            let report = verify_properties(seed, &sizes, execution(sequential))?;
            for e in &report.entries {
                println!(
                    "{} {:<40} worst {:.3e} (tol {:.1e}, {} samples)",
                    if e.passed { "PASS" } else { "FAIL" },
                    e.name,
                    e.worst_defect,
                    e.tolerance,
                    e.samples
                );
            }
            let dir = out
                .or_else(|| std::env::var_os(rfd_nls::harness::OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            emit_report(&report, &dir.join("properties.json"))?;
            if !report.all_passed {
                return Ok(Outcome::PropertyFailure);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::PropertyFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

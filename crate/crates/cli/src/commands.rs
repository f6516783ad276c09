use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use pibai::alloc::{AllocationPlan, Strategy};
use pibai::bounds::{bound_for, BoundReport};
use pibai::config::{AlgorithmName, Config};
use pibai::linalg::SimplexPoint;
use pibai::sim::{compute_plan, format_g10, sweep, write_csv, Algorithm, ExperimentConfig, SimRow};
use pibai::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "pibai",
    version,
    about = "Prior-informed fixed-budget best-arm identification"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the error bound of an allocation.
    Bound {
        #[command(flatten)]
        common: Common,
        /// Inline weights "w1,...,wK" or a strategy name; defaults to the
        /// config's allocation strategy.
        #[arg(long)]
        omega: Option<String>,
    },
    /// Compute allocation weights and per-arm budgets.
    Alloc {
        #[command(flatten)]
        common: Common,
    },
    /// Run the config's algorithm at every budget and write the CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run every entry of the config's `sweep` list and write the CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output CSV path; overrides `output.csv`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Comma-separated budgets; overrides `experiment.budgets`.
    #[arg(long, value_name = "n1,n2,...")]
    budgets: Option<String>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::InvalidArgument(
                    "--threads must be at least 1".into(),
                ));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        let mut cfg = Config::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(b) = &self.budgets {
            cfg.experiment.budgets = parse_list(b, "--budgets")?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn out_path(&self, cfg: &Config) -> Option<PathBuf> {
        self.out
            .clone()
            .or_else(|| cfg.output.csv.as_ref().map(PathBuf::from))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, flag: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| Error::InvalidArgument(format!("{flag}: cannot parse `{x}`")))
        })
        .collect()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bound { common, omega } => cmd_bound(&common, omega.as_deref()),
        Command::Alloc { common } => cmd_alloc(&common),
        Command::Simulate { common } => cmd_simulate(&common, false),
        Command::Sweep { common } => cmd_simulate(&common, true),
    }
}

/// Budgets for the one-shot commands; a config without budgets means n = 0.
fn budgets_or_zero(cfg: &Config) -> Vec<u64> {
    if cfg.experiment.budgets.is_empty() {
        vec![0]
    } else {
        cfg.experiment.budgets.clone()
    }
}

fn top_level_algorithm(cfg: &Config) -> Result<Algorithm> {
    if cfg.algorithm != AlgorithmName::PiBai {
        return Err(Error::InvalidArgument(format!(
            "algorithm `{}` is adaptive and has no fixed allocation",
            cfg.algorithm.name()
        )));
    }
    let exp = ExperimentConfig::from_config(&Config {
        sweep: Vec::new(),
        ..cfg.clone()
    })?;
    Ok(exp.into_iter().next().expect("one run").algorithm)
}

fn plan_for(cfg: &Config, alg: &Algorithm, n: u64) -> Result<AllocationPlan> {
    if let Algorithm::PiBai {
        strategy: Strategy::WarmupTS,
        ..
    } = alg
    {
        return Err(Error::InvalidArgument(
            "the warm-up allocation depends on observed rewards; use `simulate`".into(),
        ));
    }
    compute_plan(&cfg.prior()?, alg, n, cfg.experiment.seed)
}

fn cmd_bound(common: &Common, omega: Option<&str>) -> Result<()> {
    let cfg = common.load()?;
    let prior = cfg.prior()?;
    let mut alg = top_level_algorithm(&cfg)?;
    let inline = match omega {
        Some(s) if s.parse::<Strategy>().is_ok() => {
            if let Algorithm::PiBai { strategy, .. } = &mut alg {
                *strategy = s.parse().expect("checked");
            }
            None
        }
        Some(s) => {
            let w: Vec<f64> = parse_list(s, "--omega")?;
            if w.len() != prior.k() {
                return Err(Error::DimMismatch {
                    expected: prior.k(),
                    got: w.len(),
                });
            }
            let sum: f64 = w.iter().sum();
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!(
                    "--omega must be non-negative weights summing to 1 (sum is {sum})"
                )));
            }
            Some(SimplexPoint::normalized(w)?)
        }
        None => None,
    };
    let mut reports = Vec::new();
    for n in budgets_or_zero(&cfg) {
        let w = match &inline {
            Some(w) => w.clone(),
            None => plan_for(&cfg, &alg, n)?.weights,
        };
        reports.push(bound_for(&prior, &w, n)?);
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    if let Some(path) = common.out_path(&cfg) {
        write_atomically(&path, |w| write_bound_csv(&reports, w))?;
    }
    Ok(())
}

fn write_bound_csv(reports: &[BoundReport], w: &mut dyn Write) -> Result<()> {
    writeln!(w, "kind,budget,i,j,exp_term,sqrt_denominator,coupling,term")?;
    for r in reports {
        for p in &r.pairs {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.kind,
                r.n,
                p.i + 1,
                p.j + 1,
                format_g10(p.exp_term),
                format_g10(p.sqrt_denominator),
                format_g10(p.coupling),
                format_g10(p.value())
            )?;
        }
        writeln!(w, "{},{},total,,,,,{}", r.kind, r.n, format_g10(r.total))?;
    }
    Ok(())
}

fn cmd_alloc(common: &Common) -> Result<()> {
    let cfg = common.load()?;
    let alg = top_level_algorithm(&cfg)?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for n in budgets_or_zero(&cfg) {
        let plan = plan_for(&cfg, &alg, n)?;
        let weights: Vec<String> = plan
            .weights
            .weights()
            .iter()
            .map(|w| format!("{w:.6}"))
            .collect();
        let budget: Vec<String> = plan.per_arm_budget.iter().map(u64::to_string).collect();
        writeln!(out, "strategy: {}  n = {n}", plan.strategy)?;
        writeln!(out, "weights: {}", weights.join(" "))?;
        writeln!(out, "per_arm_budget: {}", budget.join(" "))?;
        for (k, v) in &plan.diagnostics {
            writeln!(out, "{k}: {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_simulate(common: &Common, all_runs: bool) -> Result<()> {
    let mut cfg = common.load()?;
    if cfg.experiment.budgets.is_empty() {
        return Err(Error::Config("`experiment.budgets` is empty".into()));
    }
    if !all_runs {
        cfg.sweep.clear();
    } else if cfg.sweep.is_empty() {
        log::warn!("config has no `sweep` list; running the top-level algorithm only");
    }
    log::info!("config hash {}", cfg.hash());
    let path = common.out_path(&cfg);
    let result = sweep(&cfg)?;
    match &path {
        Some(p) => {
            write_atomically(p, |w| write_csv(&result.rows, w))?;
            print_summary(&result.rows, &mut io::stdout().lock())?;
        }
        None => {
            write_csv(&result.rows, io::stdout().lock())?;
            print_summary(&result.rows, &mut io::stderr().lock())?;
        }
    }
    Ok(())
}

fn print_summary(rows: &[SimRow], w: &mut dyn Write) -> Result<()> {
    writeln!(
        w,
        "{:<8} {:<10} {:>8} {:>8} {:>12} {:>12} {:>12} {:>10}",
        "algo", "alloc", "budget", "trials", "poe", "stderr", "bound", "ms"
    )?;
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
    for r in rows {
        writeln!(
            w,
            "{:<8} {:<10} {:>8} {:>8} {:>12} {:>12} {:>12} {:>10}",
            r.algorithm,
            if r.allocation.is_empty() {
                "-"
            } else {
                &r.allocation
            },
            r.budget,
            r.trials,
            opt(r.poe_mean),
            opt(r.poe_stderr),
            opt(r.bound_total),
            r.runtime_ms
        )?;
    }
    Ok(())
}

/// Writes through a temporary file in the target directory, so a failure
/// never leaves a partial file at `path`.
fn write_atomically(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    {
        let mut buf = io::BufWriter::new(tmp.as_file_mut());
        f(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

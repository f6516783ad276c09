//! Seeded Monte-Carlo estimation of the expected probability of error and
//! simple regret.
//!
//! Trial `t` draws everything from `RngStream::new(seed, t)`: the prior
//! means (when resampled), the instance, the rewards and the warm-up each
//! use their own substream. Instances therefore coincide across budgets and
//! algorithms, and results do not depend on the thread count.

use std::borrow::Cow;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::alloc::{
    g_opt_alloc, heuristic_alloc, mixture_alloc, opt_alloc, random_alloc, uniform_alloc,
    warmup_ts_alloc, AllocationPlan, OptimizerConfig, Strategy,
};
use crate::baselines::{sequential_halving, successive_rejects, Environment, SimulatedEnv};
use crate::bounds::bound_for;
use crate::config::{AlgorithmName, Config, Metric, RunSpec, UniformRange};
use crate::error::{Error, Result};
use crate::glm::glm_decide;
use crate::linalg::{RngStream, SimplexPoint};
use crate::models::{sample_instance, Prior};
use crate::posterior::{decide, hier_posterior, linear_posterior, mab_posterior, History};

/// Substream tags within a trial stream.
pub mod tags {
    pub const PRIOR: u64 = 1;
    pub const INSTANCE: u64 = 2;
    pub const REWARDS: u64 = 3;
    pub const WARMUP: u64 = 4;
}

/// Stream index reserved for allocation randomness (random weights).
pub const ALLOCATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    PiBai {
        strategy: Strategy,
        alpha: f64,
        /// Warm-up length; `None` means `k`.
        warmup: Option<u64>,
        optimizer: OptimizerConfig,
    },
    SequentialHalving,
    SuccessiveRejects,
}

impl Algorithm {
    pub fn pi_bai(strategy: Strategy) -> Self {
        Algorithm::PiBai {
            strategy,
            alpha: 0.5,
            warmup: None,
            optimizer: OptimizerConfig::default(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::PiBai { .. } => "pi-bai",
            Algorithm::SequentialHalving => "sh",
            Algorithm::SuccessiveRejects => "sr",
        }
    }

    pub fn allocation_name(&self) -> &'static str {
        match self {
            Algorithm::PiBai { strategy, .. } => strategy.name(),
            _ => "",
        }
    }

    fn from_run(run: &RunSpec, seed: u64) -> Self {
        match run.algorithm {
            AlgorithmName::PiBai => Algorithm::PiBai {
                strategy: run.allocation.strategy,
                alpha: run.allocation.alpha,
                warmup: run.allocation.warmup,
                optimizer: run.allocation.optimizer.resolve(seed),
            },
            AlgorithmName::SequentialHalving => Algorithm::SequentialHalving,
            AlgorithmName::SuccessiveRejects => Algorithm::SuccessiveRejects,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub setting: String,
    pub prior: Prior,
    /// Redraw the MAB prior means from `U[low, high]` per trial.
    pub mu0_resample: Option<UniformRange>,
    pub algorithm: Algorithm,
    pub budgets: Vec<u64>,
    pub trials: u64,
    pub master_seed: u64,
    pub metrics: Vec<Metric>,
}

impl ExperimentConfig {
    pub fn new(
        prior: Prior,
        algorithm: Algorithm,
        budgets: Vec<u64>,
        trials: u64,
        seed: u64,
    ) -> Self {
        ExperimentConfig {
            setting: "default".into(),
            prior,
            mu0_resample: None,
            algorithm,
            budgets,
            trials,
            master_seed: seed,
            metrics: vec![Metric::Poe, Metric::SimpleRegret],
        }
    }

    /// One experiment per run of `cfg`, in sweep order.
    pub fn from_config(cfg: &Config) -> Result<Vec<ExperimentConfig>> {
        let prior = cfg.prior()?;
        Ok(cfg
            .runs()
            .iter()
            .map(|run| ExperimentConfig {
                setting: cfg.setting.clone(),
                prior: prior.clone(),
                mu0_resample: cfg.mu0_resample(),
                algorithm: Algorithm::from_run(run, cfg.experiment.seed),
                budgets: cfg.experiment.budgets.clone(),
                trials: cfg.experiment.trials,
                master_seed: cfg.experiment.seed,
                metrics: cfg.experiment.metrics.clone(),
            })
            .collect())
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "budgets must be strictly increasing".into(),
            ));
        }
        if self.mu0_resample.is_some() && !matches!(self.prior, Prior::Mab(_)) {
            return Err(Error::InvalidArgument(
                "mu0 resampling needs the mab family".into(),
            ));
        }
        Ok(())
    }

    fn per_trial_plan(&self) -> bool {
        match &self.algorithm {
            Algorithm::PiBai { strategy, .. } => {
                *strategy == Strategy::WarmupTS
                    || (self.mu0_resample.is_some() && strategy.uses_prior_means())
            }
            _ => false,
        }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub error: bool,
    pub regret: f64,
    pub choice: usize,
    /// Bound total of the allocation used, when it was computed per trial.
    pub bound: Option<f64>,
}

/// Allocation-side state shared by every trial at one budget.
#[derive(Debug, Clone)]
pub struct BudgetContext {
    pub budget: u64,
    pub plan: Option<AllocationPlan>,
    pub bound: Option<f64>,
}

impl BudgetContext {
    pub fn prepare(exp: &ExperimentConfig, budget: u64) -> Result<Self> {
        let mut ctx = BudgetContext {
            budget,
            plan: None,
            bound: None,
        };
        if matches!(exp.algorithm, Algorithm::PiBai { .. }) && !exp.per_trial_plan() {
            let plan = compute_plan(&exp.prior, &exp.algorithm, budget, exp.master_seed)?;
            if exp.mu0_resample.is_none() {
                ctx.bound = bound_total(&exp.prior, &plan, budget)?;
            }
            ctx.plan = Some(plan);
        }
        Ok(ctx)
    }
}

/// Instance-independent allocation for `algorithm` at budget `n`.
pub fn compute_plan(
    prior: &Prior,
    algorithm: &Algorithm,
    n: u64,
    seed: u64,
) -> Result<AllocationPlan> {
    let Algorithm::PiBai {
        strategy,
        alpha,
        optimizer,
        ..
    } = algorithm
    else {
        return Err(Error::InvalidArgument(
            "adaptive baselines have no allocation".into(),
        ));
    };
    let mab = || match prior {
        Prior::Mab(p) => Ok(p),
        _ => Err(Error::Unsupported(format!(
            "strategy `{strategy}` needs the mab family"
        ))),
    };
    match strategy {
        Strategy::Uniform => uniform_alloc(prior.k(), n),
        Strategy::Opt => opt_alloc(prior, n, optimizer),
        Strategy::GOpt => g_opt_alloc(prior, n),
        Strategy::Mixture => mixture_alloc(mab()?, n, *alpha, optimizer),
        Strategy::Heuristic => heuristic_alloc(mab()?, n),
        Strategy::Random => {
            let mut rng = RngStream::new(seed, ALLOCATION_STREAM).substream(n).rng();
            random_alloc(prior.k(), n, &mut rng)
        }
        Strategy::WarmupTS => Err(Error::InvalidArgument(
            "the warm-up allocation interacts with an instance".into(),
        )),
    }
}

/// Bound total at the integerized fractions `per_arm_budget / n` (the plan's
/// weights when `n = 0`). `None` for the logistic model.
pub fn bound_total(prior: &Prior, plan: &AllocationPlan, n: u64) -> Result<Option<f64>> {
    let omega = if n == 0 {
        plan.weights.clone()
    } else {
        SimplexPoint::normalized(plan.per_arm_budget.iter().map(|c| *c as f64).collect())?
    };
    Ok(match prior {
        Prior::Logistic(_) => None,
        _ => Some(bound_for(prior, &omega, n)?.total),
    })
}

/// Mean posterior reward decision for any model.
pub fn posterior_decision(prior: &Prior, hist: &History) -> Result<usize> {
    Ok(match prior {
        Prior::Mab(p) => decide(&mab_posterior(p, hist)?.means),
        Prior::Linear(p) => decide(&linear_posterior(p, hist)?.mean_rewards(p.arms())),
        Prior::Hier(p) => decide(&hier_posterior(p, hist)?.marg_means),
        Prior::Logistic(m) => glm_decide(m, hist)?,
    })
}

fn pull_into<E: Environment>(env: &mut E, hist: &mut History, budget: &[u64]) -> Result<()> {
    for (arm, &c) in budget.iter().enumerate() {
        let have = hist.counts()[arm];
        for _ in have..c {
            let y = env.pull(arm)?;
            hist.record(arm, y);
        }
    }
    Ok(())
}

/// Runs trial `trial_index` at the budget of `ctx`.
pub fn run_trial(
    exp: &ExperimentConfig,
    ctx: &BudgetContext,
    trial_index: u64,
) -> Result<TrialOutcome> {
    let n = ctx.budget;
    let stream = RngStream::new(exp.master_seed, trial_index);
    let prior: Cow<Prior> = match (&exp.prior, exp.mu0_resample) {
        (Prior::Mab(p), Some(r)) => {
            let mut rng = stream.substream(tags::PRIOR).rng();
            let mu0 = (0..p.k())
                .map(|_| rng.random_range(r.low..r.high))
                .collect();
            Cow::Owned(Prior::Mab(p.with_means(mu0)?))
        }
        _ => Cow::Borrowed(&exp.prior),
    };
    let prior = prior.as_ref();
    let instance = sample_instance(prior, &mut stream.substream(tags::INSTANCE).rng());
    let mut env = SimulatedEnv::new(prior, &instance, stream.substream(tags::REWARDS).rng());

    let mut bound = None;
    let choice = match &exp.algorithm {
        Algorithm::SequentialHalving => sequential_halving(&mut env, n)?.final_choice,
        Algorithm::SuccessiveRejects => successive_rejects(&mut env, n)?.final_choice,
        Algorithm::PiBai {
            strategy, warmup, ..
        } => {
            let (plan, mut hist) = if *strategy == Strategy::WarmupTS {
                let n_w = warmup.unwrap_or(prior.k() as u64);
                let mut rng = stream.substream(tags::WARMUP).rng();
                let out = warmup_ts_alloc(prior, n, n_w, &mut env, &mut rng)?;
                (Cow::Owned(out.plan), out.history)
            } else if let Some(plan) = &ctx.plan {
                (Cow::Borrowed(plan), History::new(prior.k()))
            } else {
                let plan = compute_plan(prior, &exp.algorithm, n, exp.master_seed)?;
                (Cow::Owned(plan), History::new(prior.k()))
            };
            if exp.mu0_resample.is_some() && *strategy != Strategy::WarmupTS {
                bound = bound_total(prior, &plan, n)?;
            }
            pull_into(&mut env, &mut hist, &plan.per_arm_budget)?;
            posterior_decision(prior, &hist)?
        }
    };
    Ok(TrialOutcome {
        error: choice != instance.best_arm,
        regret: instance.gap(choice),
        choice,
        bound,
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRow {
    pub setting: String,
    pub model: String,
    pub algorithm: String,
    pub allocation: String,
    pub budget: u64,
    pub trials: u64,
    pub errors: u64,
    pub poe_mean: Option<f64>,
    pub poe_stderr: Option<f64>,
    pub sr_mean: Option<f64>,
    pub sr_stderr: Option<f64>,
    pub bound_total: Option<f64>,
    pub seed: u64,
    pub diagnostics: String,
    /// Wall-clock time; not written to CSV.
    pub runtime_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config_hash: String,
    pub rows: Vec<SimRow>,
}

/// Estimates the metrics at every budget of `exp`.
pub fn run_experiment(exp: &ExperimentConfig) -> Result<Vec<SimRow>> {
    exp.validate()?;
    exp.budgets.iter().map(|&n| run_budget(exp, n)).collect()
}

fn run_budget(exp: &ExperimentConfig, n: u64) -> Result<SimRow> {
    let start = Instant::now();
    let ctx = BudgetContext::prepare(exp, n)?;
    let outcomes: Vec<TrialOutcome> = (0..exp.trials)
        .into_par_iter()
        .map(|t| run_trial(exp, &ctx, t))
        .collect::<Result<_>>()?;

    // Sequential reduction in trial order.
    let t = exp.trials as f64;
    let errors = outcomes.iter().filter(|o| o.error).count() as u64;
    let mut regret = CompensatedSum::default();
    let mut regret_sq = CompensatedSum::default();
    let mut bound = CompensatedSum::default();
    let mut bound_count = 0u64;
    for o in &outcomes {
        regret.add(o.regret);
        regret_sq.add(o.regret * o.regret);
        if let Some(b) = o.bound {
            bound.add(b);
            bound_count += 1;
        }
    }
    let p = errors as f64 / t;
    let sr_mean = regret.value() / t;
    let sr_var = if exp.trials > 1 {
        ((regret_sq.value() - t * sr_mean * sr_mean) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    let want = |m: Metric| exp.metrics.contains(&m);
    let bound_total = ctx.bound.or_else(|| {
        (bound_count == exp.trials && bound_count > 0).then(|| bound.value() / bound_count as f64)
    });
    let diagnostics = match &ctx.plan {
        Some(plan) => plan.diagnostics_string(),
        None if exp.per_trial_plan() => "per_trial=1".into(),
        None => String::new(),
    };
    Ok(SimRow {
        setting: exp.setting.clone(),
        model: exp.prior.family().into(),
        algorithm: exp.algorithm.name().into(),
        allocation: exp.algorithm.allocation_name().into(),
        budget: n,
        trials: exp.trials,
        errors,
        poe_mean: want(Metric::Poe).then_some(p),
        poe_stderr: want(Metric::Poe).then(|| (p * (1.0 - p) / t).sqrt()),
        sr_mean: want(Metric::SimpleRegret).then_some(sr_mean),
        sr_stderr: want(Metric::SimpleRegret).then(|| (sr_var / t).sqrt()),
        bound_total,
        seed: exp.master_seed,
        diagnostics,
        runtime_ms: start.elapsed().as_millis(),
    })
}

/// Every run of `cfg` at every budget, in config order then budget order.
pub fn sweep(cfg: &Config) -> Result<SimResult> {
    let mut rows = Vec::new();
    for exp in ExperimentConfig::from_config(cfg)? {
        rows.extend(run_experiment(&exp)?);
    }
    Ok(SimResult {
        config_hash: cfg.hash(),
        rows,
    })
}

pub const CSV_HEADER: [&str; 13] = [
    "setting",
    "model",
    "algorithm",
    "allocation",
    "budget",
    "trials",
    "poe_mean",
    "poe_stderr",
    "sr_mean",
    "sr_stderr",
    "bound_total",
    "seed",
    "diagnostics",
];

/// Formats like C's `%.10g`.
pub fn format_g10(x: f64) -> String {
    const P: i32 = 10;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_g(x: Option<f64>) -> String {
    x.map(format_g10).unwrap_or_default()
}

/// Writes `rows` with the header, 10 significant digits per float.
pub fn write_csv<W: Write>(rows: &[SimRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.setting.clone(),
            r.model.clone(),
            r.algorithm.clone(),
            r.allocation.clone(),
            r.budget.to_string(),
            r.trials.to_string(),
            opt_g(r.poe_mean),
            opt_g(r.poe_stderr),
            opt_g(r.sr_mean),
            opt_g(r.sr_stderr),
            opt_g(r.bound_total),
            r.seed.to_string(),
            r.diagnostics.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

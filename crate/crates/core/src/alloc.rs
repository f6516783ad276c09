//! Budget allocation strategies: a point on the simplex plus its integer
//! per-arm budget.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::Environment;
use crate::bounds::{AllocationObjective, HierObjective, LinearObjective, MabObjective};
use crate::error::{Error, Result};
use crate::glm::{laplace_fit_history, LaplaceOptions};
use crate::linalg::{argmax_lowest, project_simplex, rank_of, sample_mvn, SimplexPoint, SpdMatrix};
use crate::models::{hier_to_linear, MabPrior, Prior};
use crate::posterior::{hier_posterior, linear_posterior, mab_posterior, History};

pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    Opt,
    #[serde(alias = "gopt")]
    GOpt,
    Mixture,
    Random,
    Heuristic,
    #[serde(rename = "warmup-ts", alias = "ts")]
    WarmupTS,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Opt => "opt",
            Strategy::GOpt => "g-opt",
            Strategy::Mixture => "mixture",
            Strategy::Random => "random",
            Strategy::Heuristic => "heuristic",
            Strategy::WarmupTS => "warmup-ts",
        }
    }

    /// Whether the weights depend on the prior means.
    pub fn uses_prior_means(&self) -> bool {
        matches!(
            self,
            Strategy::Opt | Strategy::Mixture | Strategy::Heuristic
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "uniform" => Strategy::Uniform,
            "opt" => Strategy::Opt,
            "g-opt" | "gopt" => Strategy::GOpt,
            "mixture" => Strategy::Mixture,
            "random" => Strategy::Random,
            "heuristic" => Strategy::Heuristic,
            "warmup-ts" | "ts" => Strategy::WarmupTS,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown allocation `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub weights: SimplexPoint,
    /// Pulls per arm; sums to the budget.
    pub per_arm_budget: Vec<u64>,
    pub strategy: Strategy,
    /// Ordered `key=value` diagnostics.
    pub diagnostics: Vec<(String, String)>,
}

impl AllocationPlan {
    fn new(weights: SimplexPoint, n: u64, strategy: Strategy) -> Self {
        let per_arm_budget = largest_remainder(weights.weights(), n);
        AllocationPlan {
            weights,
            per_arm_budget,
            strategy,
            diagnostics: Vec::new(),
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.diagnostics.push((key.to_string(), value.to_string()));
    }

    pub fn diagnostic(&self, key: &str) -> Option<&str> {
        self.diagnostics
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `k=v;k=v`, the form used in the CSV `diagnostics` column.
    pub fn diagnostics_string(&self) -> String {
        self.diagnostics
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn budget(&self) -> u64 {
        self.per_arm_budget.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    /// Minimum objective decrease that counts as progress.
    pub tol: f64,
    /// Number of starts: uniform first, then Dirichlet(1) draws.
    pub multistarts: usize,
    pub weight_floor: f64,
    /// Seed for the Dirichlet starts.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 2000,
            tol: 1e-9,
            multistarts: 5,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            || self.multistarts == 0
            || !(self.tol > 0.0)
            || !(self.weight_floor > 0.0)
        {
            return Err(Error::InvalidArgument(
                "optimizer max_iters, multistarts, tol and weight_floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Splits `n` by largest remainder; leftover units go to the largest
/// fractional parts, lowest index first on ties.
pub fn largest_remainder(weights: &[f64], n: u64) -> Vec<u64> {
    let nf = n as f64;
    let mut base = Vec::with_capacity(weights.len());
    let mut rem = Vec::with_capacity(weights.len());
    for w in weights {
        let x = w * nf;
        let r = x.round();
        // Snap values that are integers up to rounding error.
        let x = if (x - r).abs() <= 1e-9 { r } else { x };
        let f = x.floor();
        base.push(f as u64);
        rem.push(x - f);
    }
    let assigned: u64 = base.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| rem[b].partial_cmp(&rem[a]).unwrap().then(a.cmp(&b)));
    if assigned <= n {
        for &i in order.iter().cycle().take((n - assigned) as usize) {
            base[i] += 1;
        }
    } else {
        // Only reachable through weights summing slightly above one.
        let mut excess = assigned - n;
        for &i in order.iter().rev() {
            if excess == 0 {
                break;
            }
            if base[i] > 0 {
                base[i] -= 1;
                excess -= 1;
            }
        }
    }
    base
}

fn floor_weights(w: &[f64], floor: f64) -> SimplexPoint {
    SimplexPoint::normalized(w.iter().map(|x| x.max(floor)).collect())
        .expect("floored weights are positive")
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one arm".into()));
    }
    Ok(())
}

pub fn uniform_alloc(k: usize, n: u64) -> Result<AllocationPlan> {
    check_k(k)?;
    Ok(AllocationPlan::new(
        SimplexPoint::uniform(k),
        n,
        Strategy::Uniform,
    ))
}

/// `ω_i ∝ U_i` with `U_i ~ U[0, 1]`, floored at the default weight floor.
pub fn random_alloc<R: Rng + ?Sized>(k: usize, n: u64, rng: &mut R) -> Result<AllocationPlan> {
    check_k(k)?;
    let draws: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let s: f64 = draws.iter().sum();
    let w = if s > 0.0 {
        floor_weights(
            &draws.iter().map(|d| d / s).collect::<Vec<_>>(),
            DEFAULT_WEIGHT_FLOOR,
        )
    } else {
        SimplexPoint::uniform(k)
    };
    Ok(AllocationPlan::new(w, n, Strategy::Random))
}

/// `ω_i ∝ μ_{0,i} σ_{0,i}`.
pub fn heuristic_alloc(prior: &MabPrior, n: u64) -> Result<AllocationPlan> {
    let w = heuristic_weights(prior)?;
    Ok(AllocationPlan::new(w, n, Strategy::Heuristic))
}

fn heuristic_weights(prior: &MabPrior) -> Result<SimplexPoint> {
    if let Some(arm) = prior.mu0().iter().position(|m| *m <= 0.0) {
        return Err(Error::NonPositiveMean { arm });
    }
    SimplexPoint::normalized(
        prior
            .mu0()
            .iter()
            .zip(prior.sigma0())
            .map(|(m, s)| m * s)
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Bound-optimized weights.

/// Minimizes the bound for `prior` at budget `n`.
pub fn opt_alloc(prior: &Prior, n: u64, cfg: &OptimizerConfig) -> Result<AllocationPlan> {
    match prior {
        Prior::Mab(p) => opt_alloc_with(&MabObjective::new(p, n), n, cfg),
        Prior::Linear(p) => opt_alloc_with(&LinearObjective { prior: p, n }, n, cfg),
        Prior::Hier(p) => opt_alloc_with(&HierObjective::new(p, n), n, cfg),
        Prior::Logistic(_) => Err(Error::Unsupported(
            "no error bound is available for the logistic model; use g-opt or uniform".into(),
        )),
    }
}

struct StartResult {
    weights: Vec<f64>,
    value: f64,
    iterations: usize,
}

/// Projected gradient descent on `ln(bound)` with central finite
/// differences, Armijo backtracking and multistarts.
pub fn opt_alloc_with(
    objective: &dyn AllocationObjective,
    n: u64,
    cfg: &OptimizerConfig,
) -> Result<AllocationPlan> {
    cfg.validate()?;
    let k = objective.k();
    check_k(k)?;
    let uniform = vec![1.0 / k as f64; k];
    let uniform_value = objective.log_bound(&uniform);
    if uniform_value == f64::NEG_INFINITY {
        // Zero bound (a single arm, or every pair term underflows): nothing to optimize.
        let mut plan = AllocationPlan::new(SimplexPoint::uniform(k), n, Strategy::Opt);
        plan.note("objective", "0");
        plan.note("fallback", "uniform");
        return Ok(plan);
    }
    if !uniform_value.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut starts = vec![uniform.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 1..cfg.multistarts {
        let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.into_iter().map(|x| x / s).collect());
    }
    let results: Vec<Result<StartResult>> = starts
        .par_iter()
        .map(|x0| descend(objective, x0.clone(), cfg))
        .collect();
    let mut best: Option<(usize, StartResult)> = None;
    let mut per_start = Vec::with_capacity(results.len());
    for (idx, r) in results.into_iter().enumerate() {
        let r = r?;
        per_start.push(format!("{:.10e}", r.value));
        // Strict comparison keeps the lowest start index on ties.
        if best.as_ref().is_none_or(|(_, b)| r.value < b.value) {
            best = Some((idx, r));
        }
    }
    let (best_idx, best) = best.expect("at least one start");
    let floored = floor_weights(&best.weights, cfg.weight_floor);
    let mut value = objective.log_bound(floored.weights());
    let (weights, used_uniform) = if value.is_finite() && value <= uniform_value {
        (floored, false)
    } else {
        value = uniform_value;
        (SimplexPoint::uniform(k), true)
    };
    let mut plan = AllocationPlan::new(weights, n, Strategy::Opt);
    plan.note("objective", format!("{:.10e}", value.exp()));
    plan.note("log_objective", format!("{value:.10e}"));
    plan.note("best_start", best_idx);
    plan.note("iterations", best.iterations);
    plan.note("start_log_objectives", per_start.join("|"));
    if used_uniform {
        plan.note("fallback", "uniform");
    }
    Ok(plan)
}

const FD_STEP: f64 = 1e-6;

fn fd_gradient(objective: &dyn AllocationObjective, x: &[f64], f0: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let xi = x[i];
        y[i] = xi + FD_STEP;
        let fp = objective.log_bound(&y);
        if xi >= FD_STEP {
            y[i] = xi - FD_STEP;
            let fm = objective.log_bound(&y);
            g[i] = (fp - fm) / (2.0 * FD_STEP);
        } else {
            // One-sided at the boundary; weights stay nonnegative.
            g[i] = (fp - f0) / FD_STEP;
        }
        y[i] = xi;
    }
    g
}

fn descend(
    objective: &dyn AllocationObjective,
    mut x: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Result<StartResult> {
    let mut f = objective.log_bound(&x);
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut eta = 1.0;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let g = fd_gradient(objective, &x, f);
        let mut accepted = None;
        let mut step = eta;
        while step > 1e-14 {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let cand = project_simplex(&cand).into_inner();
            let decrease_model: f64 = g
                .iter()
                .zip(x.iter().zip(&cand))
                .map(|(gi, (a, b))| gi * (a - b))
                .sum();
            let fc = objective.log_bound(&cand);
            if fc.is_finite() && fc <= f - 1e-4 * decrease_model {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let moved = x
            .iter()
            .zip(&cand)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let decrease = f - fc;
        x = cand;
        f = fc;
        eta = (step * 2.0).min(1e6);
        if moved < 1e-10 || (decrease <= cfg.tol && moved < 1e-6) {
            break;
        }
    }
    Ok(StartResult {
        weights: x,
        value: f,
        iterations,
    })
}

/// `α ω^Opt + (1 − α) ω^heuristic`; falls back to `ω^Opt` when a prior mean
/// is not positive.
pub fn mixture_alloc(
    prior: &MabPrior,
    n: u64,
    alpha: f64,
    cfg: &OptimizerConfig,
) -> Result<AllocationPlan> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} is outside [0, 1]"
        )));
    }
    let opt = || opt_alloc_with(&MabObjective::new(prior, n), n, cfg);
    let heuristic = match heuristic_weights(prior) {
        Ok(h) => h,
        Err(Error::NonPositiveMean { arm }) => {
            let mut plan = opt()?;
            plan.strategy = Strategy::Mixture;
            plan.note("fallback", "opt");
            plan.note("nonpositive_mean_arm", arm);
            return Ok(plan);
        }
        Err(e) => return Err(e),
    };
    let (opt_w, opt_diag) = if alpha > 0.0 {
        let p = opt()?;
        (p.weights.into_inner(), p.diagnostics)
    } else {
        (vec![0.0; prior.k()], Vec::new())
    };
    let w: Vec<f64> = opt_w
        .iter()
        .zip(heuristic.weights())
        .map(|(o, h)| alpha * o + (1.0 - alpha) * h)
        .collect();
    let w = if alpha == 1.0 {
        SimplexPoint::new(w)?
    } else {
        floor_weights(&w, cfg.weight_floor)
    };
    let mut plan = AllocationPlan::new(w, n, Strategy::Mixture);
    plan.note("alpha", alpha);
    plan.diagnostics.extend(opt_diag);
    Ok(plan)
}

// ---------------------------------------------------------------------------
// G-optimal design.

/// Result of the log-det design optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct GOptDesign {
    /// Converged weights (no flooring).
    pub weights: SimplexPoint,
    /// Frank–Wolfe duality gap `max_k ∇_k − ⟨ω, ∇⟩`.
    pub gap: f64,
    /// `max_k ‖x_k‖²_{V_n(ξ)⁻¹}`.
    pub certificate: f64,
    pub iterations: usize,
    pub log_det: f64,
}

pub const GOPT_GAP_TOL: f64 = 1e-6;
pub const GOPT_MAX_ITERS: usize = 10_000;

struct LogDetDesign<'a> {
    arms: &'a [DVector<f64>],
    sigma0_inv: &'a DMatrix<f64>,
    scale: f64,
}

impl LogDetDesign<'_> {
    fn matrix(&self, w: &[f64]) -> Result<SpdMatrix> {
        let mut v = self.sigma0_inv.clone();
        for (x, wi) in self.arms.iter().zip(w) {
            if *wi > 0.0 {
                v.ger(self.scale * wi, x, x, 1.0);
            }
        }
        SpdMatrix::new(v)
    }

    /// `∇_k = scale · x_kᵀ V⁻¹ x_k`.
    fn gradient(&self, v: &SpdMatrix) -> Vec<f64> {
        self.arms
            .iter()
            .map(|x| self.scale * x.dot(&v.solve(x)))
            .collect()
    }

    /// Derivative of `log det V(ω + γ u)` in `γ`.
    fn directional(&self, w: &[f64], u: &[f64], gamma: f64) -> Result<f64> {
        let p: Vec<f64> = w
            .iter()
            .zip(u)
            .map(|(a, b)| (a + gamma * b).max(0.0))
            .collect();
        let v = self.matrix(&p)?;
        Ok(self.gradient(&v).iter().zip(u).map(|(g, ui)| g * ui).sum())
    }

    /// Maximizes the concave `γ ↦ log det V(ω + γ u)` on `[0, gmax]`.
    fn line_search(&self, w: &[f64], u: &[f64], gmax: f64) -> Result<f64> {
        if self.directional(w, u, gmax)? >= 0.0 {
            return Ok(gmax);
        }
        let (mut lo, mut hi) = (0.0, gmax);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.directional(w, u, mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * gmax.max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Maximizes `log det(Σ_0⁻¹ + (n/σ²) Σ_k ω_k x_k x_kᵀ)` by away-step
/// Frank–Wolfe with exact line search.
pub fn g_opt_linear(
    arms: &[DVector<f64>],
    sigma0_inv: &DMatrix<f64>,
    sigma: f64,
    n: u64,
) -> Result<GOptDesign> {
    check_k(arms.len())?;
    let d = sigma0_inv.nrows();
    let rank = rank_of(arms, d);
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    g_opt_regularized(arms, sigma0_inv, sigma, n)
}

/// The same design problem without the span requirement; the prior term
/// keeps the objective finite.
fn g_opt_regularized(
    arms: &[DVector<f64>],
    sigma0_inv: &DMatrix<f64>,
    sigma: f64,
    n: u64,
) -> Result<GOptDesign> {
    let k = arms.len();
    check_k(k)?;
    let design = LogDetDesign {
        arms,
        sigma0_inv,
        scale: n as f64 / (sigma * sigma),
    };
    let mut w = vec![1.0 / k as f64; k];
    let mut iterations = 0;
    let (gap, grad, v) = loop {
        let v = design.matrix(&w)?;
        let grad = design.gradient(&v);
        let inner: f64 = grad.iter().zip(&w).map(|(g, x)| g * x).sum();
        let top = argmax_lowest(&grad);
        let gap = grad[top] - inner;
        if gap <= GOPT_GAP_TOL || iterations >= GOPT_MAX_ITERS {
            break (gap, grad, v);
        }
        iterations += 1;
        // Away vertex: smallest gradient on the support.
        let away = (0..k)
            .filter(|&i| w[i] > 0.0)
            .min_by(|&a, &b| grad[a].partial_cmp(&grad[b]).unwrap().then(a.cmp(&b)))
            .expect("nonempty support");
        let away_gap = inner - grad[away];
        let (u, gmax) = if gap >= away_gap || w[away] >= 1.0 {
            let mut u: Vec<f64> = w.iter().map(|x| -x).collect();
            u[top] += 1.0;
            (u, 1.0)
        } else {
            let mut u = w.clone();
            u[away] -= 1.0;
            (u, w[away] / (1.0 - w[away]))
        };
        let gamma = design.line_search(&w, &u, gmax)?;
        for (wi, ui) in w.iter_mut().zip(&u) {
            *wi = (*wi + gamma * ui).max(0.0);
        }
        if gamma == gmax && gmax < 1.0 {
            // Drop step: the away vertex leaves the support exactly.
            w[away] = 0.0;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
    };
    Ok(GOptDesign {
        weights: SimplexPoint::normalized(w)?,
        gap,
        certificate: grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        iterations,
        log_det: v.logdet(),
    })
}

/// G-optimal allocation. Hierarchical priors use their stacked linear form;
/// independent arms use canonical arms; the logistic model uses its
/// features as if rewards were Gaussian with unit noise.
pub fn g_opt_alloc(prior: &Prior, n: u64) -> Result<AllocationPlan> {
    let design = match prior {
        Prior::Mab(p) => {
            let lin = p.to_linear();
            g_opt_linear(lin.arms(), lin.sigma0_inv(), lin.sigma(), n)?
        }
        Prior::Linear(p) => g_opt_linear(p.arms(), p.sigma0_inv(), p.sigma(), n)?,
        Prior::Hier(p) => {
            let lin = hier_to_linear(p);
            g_opt_regularized(lin.arms(), lin.sigma0_inv(), lin.sigma(), n)?
        }
        Prior::Logistic(m) => g_opt_linear(m.arms(), m.sigma0_inv(), 1.0, n)?,
    };
    let w = floor_weights(design.weights.weights(), DEFAULT_WEIGHT_FLOOR);
    let mut plan = AllocationPlan::new(w, n, Strategy::GOpt);
    plan.note("fw_gap", format!("{:.6e}", design.gap));
    plan.note("certificate", format!("{:.10}", design.certificate));
    plan.note("iterations", design.iterations);
    Ok(plan)
}

// ---------------------------------------------------------------------------
// Thompson-sampling warm-up.

/// Warm-up weights plus the history the warm-up produced.
#[derive(Debug, Clone)]
pub struct WarmupOutcome {
    /// `per_arm_budget` counts all `n` pulls, warm-up included.
    pub plan: AllocationPlan,
    pub history: History,
}

/// Runs `n_w` rounds of Thompson sampling against `env` and sets
/// `ω_i = pulls_i / n_w`. The remaining `n − n_w` pulls are split by `ω`.
pub fn warmup_ts_alloc<E: Environment + ?Sized, R: Rng + ?Sized>(
    prior: &Prior,
    n: u64,
    n_w: u64,
    env: &mut E,
    rng: &mut R,
) -> Result<WarmupOutcome> {
    if n_w == 0 {
        return Err(Error::InvalidArgument("warm-up needs n_w >= 1".into()));
    }
    if n_w > n {
        return Err(Error::BudgetTooSmall {
            budget: n,
            required: n_w,
        });
    }
    let k = prior.k();
    if env.k() != k {
        return Err(Error::DimMismatch {
            expected: k,
            got: env.k(),
        });
    }
    let mut hist = History::new(k);
    for _ in 0..n_w {
        let arm = ts_choice(prior, &hist, rng)?;
        let y = env.pull(arm)?;
        hist.record(arm, y);
    }
    let weights = SimplexPoint::normalized(hist.counts().iter().map(|c| *c as f64).collect())?;
    let rest = largest_remainder(weights.weights(), n - n_w);
    let per_arm_budget = rest.iter().zip(hist.counts()).map(|(r, c)| r + c).collect();
    let mut plan = AllocationPlan {
        weights,
        per_arm_budget,
        strategy: Strategy::WarmupTS,
        diagnostics: Vec::new(),
    };
    plan.note("n_w", n_w);
    plan.note(
        "warmup_pulls",
        hist.counts()
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join("|"),
    );
    Ok(WarmupOutcome {
        plan,
        history: hist,
    })
}

fn ts_choice<R: Rng + ?Sized>(prior: &Prior, hist: &History, rng: &mut R) -> Result<usize> {
    let scores: Vec<f64> = match prior {
        Prior::Mab(p) => {
            let post = mab_posterior(p, hist)?;
            post.means
                .iter()
                .zip(&post.variances)
                .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        Prior::Linear(p) => {
            let post = linear_posterior(p, hist)?;
            let theta = sample_mvn(&post.mean, post.cov.matrix(), rng)?;
            p.arms().iter().map(|x| theta.dot(x)).collect()
        }
        Prior::Hier(p) => {
            let post = hier_posterior(p, hist)?;
            let mu = sample_mvn(&post.effect_mean, post.effect_cov.matrix(), rng)?;
            let s2 = p.sigma() * p.sigma();
            p.mixing()
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let cond = post.cond_variances[i];
                    let mean = cond * (mu.dot(b) / p.var0(i) + hist.reward_sums()[i] / s2);
                    mean + cond.sqrt() * rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        }
        Prior::Logistic(m) => {
            let post = laplace_fit_history(m, hist, LaplaceOptions::default())?;
            let theta = sample_mvn(&post.map, post.cov.matrix(), rng)?;
            m.arms().iter().map(|x| theta.dot(x)).collect()
        }
    };
    Ok(argmax_lowest(&scores))
}

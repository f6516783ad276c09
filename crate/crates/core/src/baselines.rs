//! Frequentist fixed-budget baselines: Sequential Halving and Successive
//! Rejects, plus the environment abstraction they (and the warm-up) pull from.

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::{sample_reward, Instance, Prior};

/// Something that returns a reward when an arm is pulled.
pub trait Environment {
    fn k(&self) -> usize;
    fn pull(&mut self, arm: usize) -> Result<f64>;
}

/// Rewards drawn from `instance` with the likelihood of `prior`.
pub struct SimulatedEnv<'a, R> {
    prior: &'a Prior,
    instance: &'a Instance,
    rng: R,
    pulls: u64,
}

impl<'a, R: Rng> SimulatedEnv<'a, R> {
    pub fn new(prior: &'a Prior, instance: &'a Instance, rng: R) -> Self {
        SimulatedEnv {
            prior,
            instance,
            rng,
            pulls: 0,
        }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> Environment for SimulatedEnv<'_, R> {
    fn k(&self) -> usize {
        self.instance.k()
    }

    fn pull(&mut self, arm: usize) -> Result<f64> {
        let y = sample_reward(self.prior, self.instance, arm, &mut self.rng)?;
        self.pulls += 1;
        Ok(y)
    }
}

/// Trace of an adaptive baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveRun {
    /// Arm pulled in each round, in order.
    pub pulls: Vec<usize>,
    pub final_choice: usize,
    /// Mean of all rewards seen per arm; NaN for arms never pulled.
    pub empirical_means: Vec<f64>,
    pub counts: Vec<u64>,
}

struct Tracker {
    pulls: Vec<usize>,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl Tracker {
    fn new(k: usize) -> Self {
        Tracker {
            pulls: Vec::new(),
            sums: vec![0.0; k],
            counts: vec![0; k],
        }
    }

    fn pull<E: Environment + ?Sized>(&mut self, env: &mut E, arm: usize) -> Result<f64> {
        let y = env.pull(arm)?;
        self.pulls.push(arm);
        self.sums[arm] += y;
        self.counts[arm] += 1;
        Ok(y)
    }

    fn finish(self, final_choice: usize) -> AdaptiveRun {
        let empirical_means = self
            .sums
            .iter()
            .zip(&self.counts)
            .map(|(s, c)| if *c > 0 { s / *c as f64 } else { f64::NAN })
            .collect();
        AdaptiveRun {
            pulls: self.pulls,
            final_choice,
            empirical_means,
            counts: self.counts,
        }
    }
}

fn ceil_log2(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

/// Sequential Halving with round-local means.
pub fn sequential_halving<E: Environment + ?Sized>(env: &mut E, n: u64) -> Result<AdaptiveRun> {
    let k = env.k();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one arm".into()));
    }
    let rounds = ceil_log2(k) as u64;
    let required = k as u64 * rounds;
    if n < required {
        return Err(Error::BudgetTooSmall {
            budget: n,
            required,
        });
    }
    let mut tr = Tracker::new(k);
    let mut survivors: Vec<usize> = (0..k).collect();
    for _ in 0..rounds {
        let t = n / (survivors.len() as u64 * rounds);
        let mut local: Vec<(usize, f64)> = Vec::with_capacity(survivors.len());
        for &arm in &survivors {
            let mut s = 0.0;
            for _ in 0..t {
                s += tr.pull(env, arm)?;
            }
            local.push((arm, s / t as f64));
        }
        // Highest mean first, lowest index on ties.
        local.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let keep = survivors.len().div_ceil(2);
        survivors = local[..keep].iter().map(|(a, _)| *a).collect();
        survivors.sort_unstable();
    }
    Ok(tr.finish(survivors[0]))
}

/// Successive Rejects with cumulative means. Every phase length is at least
/// one pull and the total never exceeds `n`.
pub fn successive_rejects<E: Environment + ?Sized>(env: &mut E, n: u64) -> Result<AdaptiveRun> {
    let k = env.k();
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one arm".into()));
    }
    if n < k as u64 {
        return Err(Error::BudgetTooSmall {
            budget: n,
            required: k as u64,
        });
    }
    let mut tr = Tracker::new(k);
    if k == 1 {
        return Ok(tr.finish(0));
    }
    let log_bar = 0.5 + (2..=k).map(|i| 1.0 / i as f64).sum::<f64>();
    let mut survivors: Vec<usize> = (0..k).collect();
    let mut prev = 0u64;
    let mut spent = 0u64;
    for j in 1..k {
        let nj = (((n - k as u64) as f64) / (log_bar * (k + 1 - j) as f64)).ceil() as u64;
        let nj = nj.max(1).max(prev);
        'phase: for _ in prev..nj {
            for &arm in &survivors {
                if spent == n {
                    break 'phase;
                }
                tr.pull(env, arm)?;
                spent += 1;
            }
        }
        prev = nj;
        let mean = |a: usize| {
            if tr.counts[a] > 0 {
                tr.sums[a] / tr.counts[a] as f64
            } else {
                f64::NEG_INFINITY
            }
        };
        // Worst cumulative mean; the lowest index among ties.
        let mut worst = 0;
        for idx in 1..survivors.len() {
            if mean(survivors[idx]) < mean(survivors[worst]) {
                worst = idx;
            }
        }
        survivors.remove(worst);
    }
    Ok(tr.finish(survivors[0]))
}

//! Conjugate posteriors computed from per-arm sufficient statistics.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{argmax_lowest, symmetrize, SpdMatrix};
use crate::models::{HierPrior, LinearPrior, MabPrior};

/// Pull counts `n_i` and reward sums `B_{n,i}` per arm.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    counts: Vec<u64>,
    reward_sums: Vec<f64>,
}

impl History {
    pub fn new(k: usize) -> Self {
        History {
            counts: vec![0; k],
            reward_sums: vec![0.0; k],
        }
    }

    pub fn from_parts(counts: Vec<u64>, reward_sums: Vec<f64>) -> Result<Self> {
        if counts.len() != reward_sums.len() {
            return Err(Error::DimMismatch {
                expected: counts.len(),
                got: reward_sums.len(),
            });
        }
        Ok(History {
            counts,
            reward_sums,
        })
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.reward_sums[arm] += reward;
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if self.k() == k {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected: k,
                got: self.k(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MabPosterior {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

pub fn mab_posterior(prior: &MabPrior, hist: &History) -> Result<MabPosterior> {
    hist.check_k(prior.k())?;
    let s2 = prior.sigma() * prior.sigma();
    let (means, variances) = (0..prior.k())
        .map(|i| {
            let v0 = prior.var0(i);
            if hist.counts[i] == 0 {
                return (prior.mu0()[i], v0);
            }
            let var = 1.0 / (1.0 / v0 + hist.counts[i] as f64 / s2);
            (var * (prior.mu0()[i] / v0 + hist.reward_sums[i] / s2), var)
        })
        .unzip();
    Ok(MabPosterior { means, variances })
}

#[derive(Debug, Clone)]
pub struct LinearPosterior {
    pub mean: DVector<f64>,
    pub cov: SpdMatrix,
}

impl LinearPosterior {
    /// Mean posterior reward `meanᵀx_i` of every arm.
    pub fn mean_rewards(&self, arms: &[DVector<f64>]) -> Vec<f64> {
        arms.iter().map(|x| self.mean.dot(x)).collect()
    }
}

pub fn linear_posterior(prior: &LinearPrior, hist: &History) -> Result<LinearPosterior> {
    hist.check_k(prior.k())?;
    let s2 = prior.sigma() * prior.sigma();
    let d = prior.d();
    let mut precision = prior.sigma0_inv().clone();
    let mut rhs = prior.sigma0_inv() * prior.mu0();
    for (i, x) in prior.arms().iter().enumerate() {
        let n = hist.counts[i] as f64;
        if n > 0.0 {
            precision.ger(n / s2, x, x, 1.0);
        }
        rhs.axpy(hist.reward_sums[i] / s2, x, 1.0);
    }
    let precision = SpdMatrix::new(precision)?;
    let cov = precision.inverse();
    let mean = precision.solve(&rhs);
    debug_assert_eq!(mean.len(), d);
    Ok(LinearPosterior {
        mean,
        cov: SpdMatrix::new(cov)?,
    })
}

#[derive(Debug, Clone)]
pub struct HierPosterior {
    /// Effect posterior mean.
    pub effect_mean: DVector<f64>,
    /// Effect posterior covariance.
    pub effect_cov: SpdMatrix,
    /// Conditional arm variances given the effects.
    pub cond_variances: Vec<f64>,
    pub marg_means: Vec<f64>,
    pub marg_variances: Vec<f64>,
}

pub fn hier_posterior(prior: &HierPrior, hist: &History) -> Result<HierPosterior> {
    hist.check_k(prior.k())?;
    let s2 = prior.sigma() * prior.sigma();
    let counts: Vec<f64> = hist.counts.iter().map(|c| *c as f64).collect();
    let effect_cov = effect_covariance(prior, &counts)?;

    let mut rhs = prior.sigma_effects_inv() * prior.nu();
    for (i, b) in prior.mixing().iter().enumerate() {
        let denom = counts[i] * prior.var0(i) + s2;
        rhs.axpy(hist.reward_sums[i] / denom, b, 1.0);
    }
    let effect_mean = effect_cov.matrix() * rhs;

    let k = prior.k();
    let mut cond_variances = Vec::with_capacity(k);
    let mut marg_means = Vec::with_capacity(k);
    let mut marg_variances = Vec::with_capacity(k);
    for (i, b) in prior.mixing().iter().enumerate() {
        let v0 = prior.var0(i);
        let cond = 1.0 / (1.0 / v0 + counts[i] / s2);
        let mean = cond * (effect_mean.dot(b) / v0 + hist.reward_sums[i] / s2);
        let shrink = cond / v0;
        let var = cond + shrink * shrink * effect_cov.quad_form(b)?;
        cond_variances.push(cond);
        marg_means.push(mean);
        marg_variances.push(var);
    }
    Ok(HierPosterior {
        effect_mean,
        effect_cov,
        cond_variances,
        marg_means,
        marg_variances,
    })
}

/// Effect posterior covariance for (possibly fractional) pull counts.
pub(crate) fn effect_covariance(prior: &HierPrior, counts: &[f64]) -> Result<SpdMatrix> {
    let s2 = prior.sigma() * prior.sigma();
    let mut precision: DMatrix<f64> = prior.sigma_effects_inv().clone();
    for (i, b) in prior.mixing().iter().enumerate() {
        let n = counts[i];
        if n > 0.0 {
            precision.ger(n / (n * prior.var0(i) + s2), b, b, 1.0);
        }
    }
    let precision = SpdMatrix::new(precision)?;
    SpdMatrix::new(symmetrize(&precision.inverse()))
}

/// The decision rule: the arm with the highest mean posterior reward, lowest
/// index on ties.
pub fn decide(mean_rewards: &[f64]) -> usize {
    argmax_lowest(mean_rewards)
}

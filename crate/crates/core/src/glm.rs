//! Logistic bandits with a Gaussian prior, handled through a Laplace
//! approximation of the posterior.
//!
//! There is no closed-form posterior here. The MAP estimate is found with a
//! damped Newton (IRLS) iteration and the covariance is the inverse Hessian
//! of the negative log-posterior at the MAP, prior precision included.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{argmax_lowest, MvnSampler, SpdMatrix};
use crate::models::{check_span, validate_arms, Instance};
use crate::posterior::History;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `θ ~ N(mu0, Sigma0)`, rewards `Bernoulli(sigmoid(θᵀx_i))`.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    mu0: DVector<f64>,
    sigma0: SpdMatrix,
    sigma0_inv: DMatrix<f64>,
    arms: Vec<DVector<f64>>,
    sampler: MvnSampler,
}

impl LogisticModel {
    pub fn new(mu0: DVector<f64>, sigma0: SpdMatrix, arms: Vec<DVector<f64>>) -> Result<Self> {
        validate_arms(&arms, mu0.len())?;
        check_span(&arms, mu0.len())?;
        if sigma0.dim() != mu0.len() {
            return Err(Error::DimMismatch {
                expected: mu0.len(),
                got: sigma0.dim(),
            });
        }
        let sampler = MvnSampler::new(mu0.clone(), sigma0.matrix())?;
        Ok(LogisticModel {
            sigma0_inv: sigma0.inverse(),
            mu0,
            sigma0,
            arms,
            sampler,
        })
    }

    pub fn d(&self) -> usize {
        self.mu0.len()
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn sigma0(&self) -> &SpdMatrix {
        &self.sigma0
    }

    pub fn sigma0_inv(&self) -> &DMatrix<f64> {
        &self.sigma0_inv
    }

    pub fn arms(&self) -> &[DVector<f64>] {
        &self.arms
    }

    /// Draws `θ` and stores the arm success probabilities as mean rewards.
    pub fn sample_instance<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let param = self.sampler.sample(rng);
        let theta = self.arms.iter().map(|x| sigmoid(param.dot(x))).collect();
        Instance {
            latent: Some(param.iter().copied().collect()),
            ..Instance::from_means(theta)
        }
    }

    /// Log-posterior (up to a constant) given per-arm pulls and successes.
    pub fn log_posterior(&self, theta: &DVector<f64>, counts: &[f64], successes: &[f64]) -> f64 {
        let diff = theta - &self.mu0;
        let prior = -0.5 * diff.dot(&(&self.sigma0_inv * &diff));
        let lik: f64 = self
            .arms
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let z = theta.dot(x);
                successes[i] * z - counts[i] * softplus(z)
            })
            .sum();
        lik + prior
    }

    pub fn log_posterior_gradient(
        &self,
        theta: &DVector<f64>,
        counts: &[f64],
        successes: &[f64],
    ) -> DVector<f64> {
        let mut g = -(&self.sigma0_inv * (theta - &self.mu0));
        for (i, x) in self.arms.iter().enumerate() {
            let z = theta.dot(x);
            g.axpy(successes[i] - counts[i] * sigmoid(z), x, 1.0);
        }
        g
    }

    /// Negative Hessian of the log-posterior.
    fn precision_at(&self, theta: &DVector<f64>, counts: &[f64]) -> DMatrix<f64> {
        let mut h = self.sigma0_inv.clone();
        for (i, x) in self.arms.iter().enumerate() {
            if counts[i] > 0.0 {
                let p = sigmoid(theta.dot(x));
                h.ger(counts[i] * p * (1.0 - p), x, x, 1.0);
            }
        }
        h
    }
}

#[derive(Debug, Clone)]
pub struct LaplacePosterior {
    pub map: DVector<f64>,
    pub cov: SpdMatrix,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LaplaceOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            max_iters: 100,
            tol: 1e-8,
        }
    }
}

/// Fits the Laplace posterior from a list of `(arm, outcome)` observations.
pub fn laplace_fit(
    model: &LogisticModel,
    observations: &[(usize, bool)],
    opts: LaplaceOptions,
) -> Result<LaplacePosterior> {
    let mut hist = History::new(model.k());
    for &(arm, y) in observations {
        if arm >= model.k() {
            return Err(Error::ArmOutOfRange { arm, k: model.k() });
        }
        hist.record(arm, if y { 1.0 } else { 0.0 });
    }
    laplace_fit_history(model, &hist, opts)
}

/// Fits the Laplace posterior from pull counts and success counts.
///
/// With fixed arm features the likelihood only depends on these per-arm
/// totals, so this is equivalent to fitting the raw observation list.
pub fn laplace_fit_history(
    model: &LogisticModel,
    hist: &History,
    opts: LaplaceOptions,
) -> Result<LaplacePosterior> {
    if hist.k() != model.k() {
        return Err(Error::DimMismatch {
            expected: model.k(),
            got: hist.k(),
        });
    }
    let counts: Vec<f64> = hist.counts().iter().map(|c| *c as f64).collect();
    let succ = hist.reward_sums();

    let mut theta = model.mu0.clone();
    let mut obj = model.log_posterior(&theta, &counts, succ);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iters {
        iterations = it;
        let grad = model.log_posterior_gradient(&theta, &counts, succ);
        if grad.norm() <= opts.tol {
            converged = true;
            break;
        }
        let precision = SpdMatrix::new(model.precision_at(&theta, &counts))?;
        let step = precision.solve(&grad);
        // Halve the Newton step until the objective stops getting worse.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &theta + &step * t;
            let cand_obj = model.log_posterior(&cand, &counts, succ);
            if cand_obj >= obj {
                theta = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || (step.norm() * t) <= 1e-15 * (1.0 + theta.norm()) {
            // No further progress is representable.
            converged =
                model.log_posterior_gradient(&theta, &counts, succ).norm() <= opts.tol.max(1e-6);
            iterations = it + 1;
            break;
        }
        iterations = it + 1;
    }
    if !converged {
        converged = model.log_posterior_gradient(&theta, &counts, succ).norm() <= opts.tol;
    }
    if !converged {
        log::warn!("Laplace fit did not converge after {iterations} iterations");
    }
    let precision = SpdMatrix::new(model.precision_at(&theta, &counts))?;
    let cov = SpdMatrix::new(precision.inverse())?;
    Ok(LaplacePosterior {
        map: theta,
        cov,
        converged,
        iterations,
    })
}

/// Approximate mean posterior reward `σ(θ_MAPᵀx) / sqrt(1 + (π/8) xᵀΣx)`.
pub fn approx_mean_reward(post: &LaplacePosterior, x: &DVector<f64>) -> f64 {
    let q = post.cov.quad_form(x).unwrap_or(0.0);
    sigmoid(post.map.dot(x)) / (1.0 + std::f64::consts::PI / 8.0 * q).sqrt()
}

/// Decision rule for the logistic model.
pub fn glm_decide(model: &LogisticModel, hist: &History) -> Result<usize> {
    let post = laplace_fit_history(model, hist, LaplaceOptions::default())?;
    let scores: Vec<f64> = model
        .arms()
        .iter()
        .map(|x| approx_mean_reward(&post, x))
        .collect();
    Ok(argmax_lowest(&scores))
}

//! Generative bandit models: independent Gaussian arms, linear-Gaussian arms
//! and the hierarchical (mixed-effect) model, plus the logistic extension.
//!
//! Arms are indexed from zero throughout the library.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glm::LogisticModel;
use crate::linalg::{argmax_lowest, rank_of, MvnSampler, SpdMatrix};

/// Independent Gaussian arms: `θ_i ~ N(mu0_i, sigma0_i²)`, rewards `N(θ_i, sigma²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MabPrior {
    mu0: Vec<f64>,
    sigma0: Vec<f64>,
    sigma: f64,
}

impl MabPrior {
    pub fn new(mu0: Vec<f64>, sigma0: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu0.is_empty() {
            return Err(Error::InvalidPrior("need at least one arm".into()));
        }
        if sigma0.len() != mu0.len() {
            return Err(Error::DimMismatch {
                expected: mu0.len(),
                got: sigma0.len(),
            });
        }
        if mu0.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidPrior("prior means must be finite".into()));
        }
        if let Some(i) = sigma0.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidPrior(format!(
                "prior std dev of arm {i} must be positive"
            )));
        }
        check_noise(sigma)?;
        Ok(MabPrior { mu0, sigma0, sigma })
    }

    pub fn k(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &[f64] {
        &self.mu0
    }

    pub fn sigma0(&self) -> &[f64] {
        &self.sigma0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Prior variance `sigma0_i²` of arm `i`.
    pub fn var0(&self, i: usize) -> f64 {
        self.sigma0[i] * self.sigma0[i]
    }

    /// Same prior with new means; used when prior means are re-drawn per trial.
    pub fn with_means(&self, mu0: Vec<f64>) -> Result<Self> {
        Self::new(mu0, self.sigma0.clone(), self.sigma)
    }

    /// The equivalent linear model with canonical arms and a diagonal covariance.
    pub fn to_linear(&self) -> LinearPrior {
        let k = self.k();
        let arms = (0..k)
            .map(|i| {
                let mut e = DVector::zeros(k);
                e[i] = 1.0;
                e
            })
            .collect();
        let var: Vec<f64> = (0..k).map(|i| self.var0(i)).collect();
        LinearPrior::new(
            DVector::from_column_slice(&self.mu0),
            SpdMatrix::from_diagonal(&var).expect("positive variances"),
            arms,
            self.sigma,
        )
        .expect("canonical arms are valid")
    }
}

/// `θ ~ N(mu0, Sigma0)` in `R^d`, rewards `N(θᵀx_i, sigma²)`.
#[derive(Debug, Clone)]
pub struct LinearPrior {
    mu0: DVector<f64>,
    sigma0: SpdMatrix,
    sigma0_inv: DMatrix<f64>,
    arms: Vec<DVector<f64>>,
    sigma: f64,
    sampler: MvnSampler,
}

impl LinearPrior {
    pub fn new(
        mu0: DVector<f64>,
        sigma0: SpdMatrix,
        arms: Vec<DVector<f64>>,
        sigma: f64,
    ) -> Result<Self> {
        let d = mu0.len();
        validate_arms(&arms, d)?;
        check_span(&arms, d)?;
        Self::build(mu0, sigma0, arms, sigma)
    }

    /// As `new` but without requiring the arms to span `R^d`. The prior
    /// precision keeps every posterior well defined; the stacked form of a
    /// hierarchical model has `k` arms in `R^(l+k)` and needs this.
    pub(crate) fn new_regularized(
        mu0: DVector<f64>,
        sigma0: SpdMatrix,
        arms: Vec<DVector<f64>>,
        sigma: f64,
    ) -> Result<Self> {
        validate_arms(&arms, mu0.len())?;
        Self::build(mu0, sigma0, arms, sigma)
    }

    fn build(
        mu0: DVector<f64>,
        sigma0: SpdMatrix,
        arms: Vec<DVector<f64>>,
        sigma: f64,
    ) -> Result<Self> {
        let d = mu0.len();
        if sigma0.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                got: sigma0.dim(),
            });
        }
        check_noise(sigma)?;
        let sampler = MvnSampler::new(mu0.clone(), sigma0.matrix())?;
        Ok(LinearPrior {
            sigma0_inv: sigma0.inverse(),
            mu0,
            sigma0,
            arms,
            sigma,
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

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Prior mean reward `mu0ᵀx_i` of every arm.
    pub fn prior_mean_rewards(&self) -> Vec<f64> {
        self.arms.iter().map(|x| self.mu0.dot(x)).collect()
    }
}

/// Distinct arms in `R^d` that span the space.
pub(crate) fn validate_arms(arms: &[DVector<f64>], d: usize) -> Result<()> {
    if arms.is_empty() || d == 0 {
        return Err(Error::InvalidPrior(
            "need at least one arm and d >= 1".into(),
        ));
    }
    if let Some(x) = arms.iter().find(|x| x.len() != d) {
        return Err(Error::DimMismatch {
            expected: d,
            got: x.len(),
        });
    }
    for i in 0..arms.len() {
        for j in (i + 1)..arms.len() {
            if arms[i] == arms[j] {
                return Err(Error::InvalidPrior(format!(
                    "arms {i} and {j} are identical"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn check_span(arms: &[DVector<f64>], d: usize) -> Result<()> {
    let rank = rank_of(arms, d);
    if rank < d {
        return Err(Error::RankDeficient { rank, dim: d });
    }
    Ok(())
}

/// Mixed-effect model: `μ ~ N(nu, Sigma)`, `θ_i ~ N(b_iᵀμ, sigma0_i²)`,
/// rewards `N(θ_i, sigma²)`.
#[derive(Debug, Clone)]
pub struct HierPrior {
    nu: DVector<f64>,
    sigma_effects: SpdMatrix,
    sigma_effects_inv: DMatrix<f64>,
    mixing: Vec<DVector<f64>>,
    sigma0: Vec<f64>,
    sigma: f64,
    sampler: MvnSampler,
}

impl HierPrior {
    pub fn new(
        nu: DVector<f64>,
        sigma_effects: SpdMatrix,
        mixing: Vec<DVector<f64>>,
        sigma0: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let l = nu.len();
        if l == 0 || mixing.is_empty() {
            return Err(Error::InvalidPrior(
                "need l >= 1 effects and k >= 1 arms".into(),
            ));
        }
        if sigma_effects.dim() != l {
            return Err(Error::DimMismatch {
                expected: l,
                got: sigma_effects.dim(),
            });
        }
        if let Some(b) = mixing.iter().find(|b| b.len() != l) {
            return Err(Error::DimMismatch {
                expected: l,
                got: b.len(),
            });
        }
        if sigma0.len() != mixing.len() {
            return Err(Error::DimMismatch {
                expected: mixing.len(),
                got: sigma0.len(),
            });
        }
        if let Some(i) = sigma0.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidPrior(format!(
                "prior std dev of arm {i} must be positive"
            )));
        }
        check_noise(sigma)?;
        let sampler = MvnSampler::new(nu.clone(), sigma_effects.matrix())?;
        Ok(HierPrior {
            sigma_effects_inv: sigma_effects.inverse(),
            nu,
            sigma_effects,
            mixing,
            sigma0,
            sigma,
            sampler,
        })
    }

    pub fn l(&self) -> usize {
        self.nu.len()
    }

    pub fn k(&self) -> usize {
        self.mixing.len()
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    pub fn sigma_effects(&self) -> &SpdMatrix {
        &self.sigma_effects
    }

    pub fn sigma_effects_inv(&self) -> &DMatrix<f64> {
        &self.sigma_effects_inv
    }

    pub fn mixing(&self) -> &[DVector<f64>] {
        &self.mixing
    }

    pub fn sigma0(&self) -> &[f64] {
        &self.sigma0
    }

    pub fn var0(&self, i: usize) -> f64 {
        self.sigma0[i] * self.sigma0[i]
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Prior mean reward `nuᵀb_i` of every arm.
    pub fn prior_mean_rewards(&self) -> Vec<f64> {
        self.mixing.iter().map(|b| self.nu.dot(b)).collect()
    }
}

fn check_noise(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPrior("noise std dev must be positive".into()))
    }
}

/// Rewrites the hierarchical model as a linear bandit over the stacked
/// parameter `(μ, η)` where `θ_i = b_iᵀμ + η_i`.
///
/// The result has dimension `l + k`, mean `(nu, 0, …, 0)`, block-diagonal
/// covariance `diag(Sigma, sigma0_1², …, sigma0_k²)` and arms `(b_i, e_i)`.
pub fn hier_to_linear(prior: &HierPrior) -> LinearPrior {
    let (l, k) = (prior.l(), prior.k());
    let dim = l + k;
    let mut mu0 = DVector::zeros(dim);
    mu0.rows_mut(0, l).copy_from(prior.nu());
    let mut cov = DMatrix::zeros(dim, dim);
    cov.view_mut((0, 0), (l, l))
        .copy_from(prior.sigma_effects().matrix());
    for i in 0..k {
        cov[(l + i, l + i)] = prior.var0(i);
    }
    let arms = prior
        .mixing()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut x = DVector::zeros(dim);
            x.rows_mut(0, l).copy_from(b);
            x[l + i] = 1.0;
            x
        })
        .collect();
    LinearPrior::new_regularized(
        mu0,
        SpdMatrix::new(cov).expect("block-diagonal of SPD blocks"),
        arms,
        prior.sigma(),
    )
    .expect("augmented arms are distinct")
}

/// Any of the supported priors.
#[derive(Debug, Clone)]
pub enum Prior {
    Mab(MabPrior),
    Linear(LinearPrior),
    Hier(HierPrior),
    Logistic(LogisticModel),
}

impl Prior {
    pub fn k(&self) -> usize {
        match self {
            Prior::Mab(p) => p.k(),
            Prior::Linear(p) => p.k(),
            Prior::Hier(p) => p.k(),
            Prior::Logistic(p) => p.k(),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Prior::Mab(_) => "mab",
            Prior::Linear(_) => "linear",
            Prior::Hier(_) => "hierarchical",
            Prior::Logistic(_) => "logistic",
        }
    }

    /// Observation noise std dev; `None` for Bernoulli rewards.
    pub fn noise(&self) -> Option<f64> {
        match self {
            Prior::Mab(p) => Some(p.sigma()),
            Prior::Linear(p) => Some(p.sigma()),
            Prior::Hier(p) => Some(p.sigma()),
            Prior::Logistic(_) => None,
        }
    }
}

/// A bandit instance drawn from a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    /// Mean reward of each arm.
    pub theta: Vec<f64>,
    /// Latent effects `μ` (hierarchical) or the parameter vector (linear, logistic).
    pub latent: Option<Vec<f64>>,
    pub best_arm: usize,
}

impl Instance {
    pub fn from_means(theta: Vec<f64>) -> Self {
        let best_arm = argmax_lowest(&theta);
        Instance {
            theta,
            latent: None,
            best_arm,
        }
    }

    pub fn k(&self) -> usize {
        self.theta.len()
    }

    /// `θ_best − θ_arm`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.theta[self.best_arm] - self.theta[arm]
    }

    /// Largest gap `θ_best − min_i θ_i`.
    pub fn max_gap(&self) -> f64 {
        let min = self.theta.iter().cloned().fold(f64::INFINITY, f64::min);
        self.theta[self.best_arm] - min
    }
}

/// Draws an instance `θ ~ P_0`.
pub fn sample_instance<R: Rng + ?Sized>(prior: &Prior, rng: &mut R) -> Instance {
    match prior {
        Prior::Mab(p) => {
            let theta = p
                .mu0()
                .iter()
                .zip(p.sigma0())
                .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Instance::from_means(theta)
        }
        Prior::Linear(p) => {
            let param = p.sampler.sample(rng);
            let theta = p.arms().iter().map(|x| param.dot(x)).collect();
            Instance {
                latent: Some(param.iter().copied().collect()),
                ..Instance::from_means(theta)
            }
        }
        Prior::Hier(p) => {
            let mu = p.sampler.sample(rng);
            let theta = p
                .mixing()
                .iter()
                .zip(p.sigma0())
                .map(|(b, s)| b.dot(&mu) + s * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Instance {
                latent: Some(mu.iter().copied().collect()),
                ..Instance::from_means(theta)
            }
        }
        Prior::Logistic(m) => m.sample_instance(rng),
    }
}

/// Draws one reward from `arm`.
pub fn sample_reward<R: Rng + ?Sized>(
    prior: &Prior,
    instance: &Instance,
    arm: usize,
    rng: &mut R,
) -> Result<f64> {
    let k = instance.k();
    if arm >= k {
        return Err(Error::ArmOutOfRange { arm, k });
    }
    Ok(match prior.noise() {
        Some(sigma) => instance.theta[arm] + sigma * rng.sample::<f64, _>(StandardNormal),
        None => {
            if rng.random::<f64>() < instance.theta[arm] {
                1.0
            } else {
                0.0
            }
        }
    })
}

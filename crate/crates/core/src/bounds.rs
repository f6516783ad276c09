//! Prior-dependent upper bounds on the expected probability of error of the
//! fixed-allocation algorithm, and the two-arm lower bound used to sandwich
//! them.
//!
//! Every bound has the same shape: a sum over ordered pairs `(i, j)`, `i ≠ j`,
//! of a prior-gap factor `exp(-gap² / (2 v_ij))` divided by
//! `sqrt(1 + ratio_ij)`, where `ratio_ij` compares how much the posterior
//! means spread out over histories with how concentrated the posterior is.
//! Pull counts are the real numbers `ω_i · n`; no flooring happens here.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::alloc::g_opt_linear;
use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SimplexPoint, SpdMatrix};
use crate::models::{HierPrior, LinearPrior, MabPrior, Prior};
use crate::posterior::effect_covariance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Mab,
    Linear,
    LinearGOpt,
    Hierarchical,
    MabMisspecified,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Mab => "mab",
            BoundKind::Linear => "linear",
            BoundKind::LinearGOpt => "linear-gopt",
            BoundKind::Hierarchical => "hierarchical",
            BoundKind::MabMisspecified => "mab-misspecified",
        })
    }
}

/// One ordered pair's contribution to a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    /// `exp(-gap² / (2 v_ij))`.
    pub exp_term: f64,
    /// `sqrt(1 + ratio_ij)`.
    pub sqrt_denominator: f64,
    /// `φ_ij` for independent arms, `c_ij` for linear and hierarchical
    /// models, the KL term for the misspecified bound.
    pub coupling: f64,
    /// Multiplicative misspecification factor `d_n(i, j)`; 1 otherwise.
    pub misspecification: f64,
    /// `sqrt(1 + n c_ij / (2 d σ²))`, only for the G-optimal corollary.
    pub simplified_sqrt_denominator: Option<f64>,
    log_value: f64,
}

impl PairTerm {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn log_value(&self) -> f64 {
        self.log_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub n: u64,
    pub omega: Vec<f64>,
    pub pairs: Vec<PairTerm>,
    pub total: f64,
    /// `ln(total)` computed without underflow.
    pub log_total: f64,
}

impl BoundReport {
    fn from_pairs(kind: BoundKind, n: u64, omega: &[f64], pairs: Vec<PairTerm>) -> Self {
        let log_total = log_sum_exp(pairs.iter().map(|p| p.log_value));
        BoundReport {
            kind,
            n,
            omega: omega.to_vec(),
            total: pairs.iter().map(PairTerm::value).sum(),
            pairs,
            log_total,
        }
    }

    pub fn pair(&self, i: usize, j: usize) -> Option<&PairTerm> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "bound: {}  n = {}", self.kind, self.n)?;
        writeln!(f, "total: {:.10}", self.total)?;
        writeln!(
            f,
            "{:>4} {:>4} {:>16} {:>16} {:>16} {:>16}",
            "i", "j", "exp_term", "sqrt_denom", "coupling", "term"
        )?;
        for p in &self.pairs {
            writeln!(
                f,
                "{:>4} {:>4} {:>16.8e} {:>16.8e} {:>16.8e} {:>16.8e}",
                p.i + 1,
                p.j + 1,
                p.exp_term,
                p.sqrt_denominator,
                p.coupling,
                p.value()
            )?;
        }
        Ok(())
    }
}

fn log_sum_exp(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn pair_term(i: usize, j: usize, log_exp: f64, ratio: f64, coupling: f64) -> PairTerm {
    let sqrt_den = (1.0 + ratio).sqrt();
    PairTerm {
        i,
        j,
        exp_term: log_exp.exp(),
        sqrt_denominator: sqrt_den,
        coupling,
        misspecification: 1.0,
        simplified_sqrt_denominator: None,
        log_value: log_exp - 0.5 * ratio.ln_1p(),
    }
}

fn check_omega(omega: &SimplexPoint, k: usize) -> Result<()> {
    if omega.k() != k {
        return Err(Error::DimMismatch {
            expected: k,
            got: omega.k(),
        });
    }
    if !omega.is_interior() {
        log::warn!(
            "allocation has zero weights; the bound hypotheses ask for ω in the open simplex"
        );
    }
    Ok(())
}

fn ordered_pairs(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k).flat_map(move |i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
}

/// The bound matching the family of `prior`. Logistic models have none.
pub fn bound_for(prior: &Prior, omega: &SimplexPoint, n: u64) -> Result<BoundReport> {
    match prior {
        Prior::Mab(p) => bound_mab(p, omega, n),
        Prior::Linear(p) => bound_linear(p, omega, n),
        Prior::Hier(p) => bound_hier(p, omega, n),
        Prior::Logistic(_) => Err(Error::Unsupported(
            "no error bound for the logistic model".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Independent Gaussian arms.

/// `n φ_ij(ω)` with numerator and denominator multiplied through by `n`, so
/// that `n = 0` is well defined.
fn mab_n_phi(vi: f64, vj: f64, wi: f64, wj: f64, s2: f64, n: f64) -> f64 {
    let di = s2 + n * wi * vi;
    let dj = s2 + n * wj * vj;
    let num = vi * vi * wi * n * dj + vj * vj * wj * n * di;
    let den = s2 * (vi * dj + vj * di);
    num / den
}

/// `φ_ij(ω)` exactly as it appears in the bound; at `n = 0` its `n → 0`
/// limit is returned.
pub fn mab_phi(prior: &MabPrior, omega: &[f64], n: u64, i: usize, j: usize) -> f64 {
    let (vi, vj) = (prior.var0(i), prior.var0(j));
    let s2 = prior.sigma() * prior.sigma();
    let (wi, wj) = (omega[i], omega[j]);
    if n == 0 {
        return (vi * vi * wi + vj * vj * wj) / (s2 * (vi + vj));
    }
    let nf = n as f64;
    let num = vi * vi * wi * (s2 / nf + wj * vj) + vj * vj * wj * (s2 / nf + wi * vi);
    let den = s2 * vi * (s2 / nf + wj * vj) + s2 * vj * (s2 / nf + wi * vi);
    num / den
}

/// Upper bound for independent Gaussian arms.
pub fn bound_mab(prior: &MabPrior, omega: &SimplexPoint, n: u64) -> Result<BoundReport> {
    check_omega(omega, prior.k())?;
    let w = omega.weights();
    let s2 = prior.sigma() * prior.sigma();
    let nf = n as f64;
    let pairs = ordered_pairs(prior.k())
        .map(|(i, j)| {
            let (vi, vj) = (prior.var0(i), prior.var0(j));
            let gap = prior.mu0()[i] - prior.mu0()[j];
            let log_exp = -gap * gap / (2.0 * (vi + vj));
            let ratio = mab_n_phi(vi, vj, w[i], w[j], s2, nf);
            pair_term(i, j, log_exp, ratio, mab_phi(prior, w, n, i, j))
        })
        .collect();
    Ok(BoundReport::from_pairs(BoundKind::Mab, n, w, pairs))
}

/// `lim_{n→∞} φ_ij` for two arms sharing prior variance `var0`.
pub fn phi_limit(var0: f64, sigma: f64, wi: f64, wj: f64) -> f64 {
    if wi + wj == 0.0 {
        return 0.0;
    }
    2.0 * var0 / (sigma * sigma) * wi * wj / (wi + wj)
}

// ---------------------------------------------------------------------------
// Linear-Gaussian arms.

/// Posterior covariance `Σ̂_n` and covariance of the posterior mean over
/// histories `Cov(μ̂_n)` at pull counts `ω_i n`.
#[derive(Debug, Clone)]
pub struct LinearMoments {
    pub post_cov: DMatrix<f64>,
    pub mean_cov: DMatrix<f64>,
}

/// With `A = Σ_i n_i x_i x_iᵀ`, the sufficient statistic `B_n = Σ_t Y_t x_{A_t}`
/// has covariance `σ² A + A Σ_0 A` (same-arm rounds are correlated through
/// `θ` too), and `Cov(μ̂_n) = σ⁻⁴ Σ̂_n Cov(B_n) Σ̂_n`.
pub fn linear_moments(prior: &LinearPrior, omega: &[f64], n: u64) -> Result<LinearMoments> {
    if omega.len() != prior.k() {
        return Err(Error::DimMismatch {
            expected: prior.k(),
            got: omega.len(),
        });
    }
    let d = prior.d();
    let s2 = prior.sigma() * prior.sigma();
    let nf = n as f64;
    let mut info = DMatrix::zeros(d, d);
    for (x, w) in prior.arms().iter().zip(omega) {
        if *w > 0.0 {
            info.ger(w * nf, x, x, 1.0);
        }
    }
    let precision = SpdMatrix::new(prior.sigma0_inv() + &info / s2)?;
    let post_cov = precision.inverse();
    let cov_b = &info * s2 + &info * prior.sigma0().matrix() * &info;
    let mean_cov = symmetrize(&(&post_cov * cov_b * &post_cov)) / (s2 * s2);
    Ok(LinearMoments { post_cov, mean_cov })
}

fn linear_pairs(prior: &LinearPrior, omega: &[f64], n: u64) -> Result<Vec<PairTerm>> {
    let mom = linear_moments(prior, omega, n)?;
    let arms = prior.arms();
    let mu_rewards = prior.prior_mean_rewards();
    Ok(ordered_pairs(prior.k())
        .map(|(i, j)| {
            let v: DVector<f64> = &arms[i] - &arms[j];
            let prior_var = v.dot(&(prior.sigma0().matrix() * &v));
            let gap = mu_rewards[i] - mu_rewards[j];
            let log_exp = -gap * gap / (2.0 * prior_var);
            let post_var = v.dot(&(&mom.post_cov * &v));
            let c = v.dot(&(&mom.mean_cov * &v)).max(0.0);
            pair_term(i, j, log_exp, c / post_var, c)
        })
        .collect())
}

/// Upper bound for linear-Gaussian arms.
pub fn bound_linear(prior: &LinearPrior, omega: &SimplexPoint, n: u64) -> Result<BoundReport> {
    check_omega(omega, prior.k())?;
    let pairs = linear_pairs(prior, omega.weights(), n)?;
    Ok(BoundReport::from_pairs(
        BoundKind::Linear,
        n,
        omega.weights(),
        pairs,
    ))
}

/// The linear bound at the G-optimal design (diagonal `Σ_0` only), with the
/// simplified corollary denominator reported alongside each pair.
pub fn bound_linear_gopt(prior: &LinearPrior, n: u64) -> Result<BoundReport> {
    if !prior.sigma0().is_diagonal() {
        return Err(Error::InvalidArgument(
            "the G-optimal corollary needs a diagonal prior covariance".into(),
        ));
    }
    let design = g_opt_linear(prior.arms(), prior.sigma0_inv(), prior.sigma(), n)?;
    let omega = design.weights;
    let mut pairs = linear_pairs(prior, omega.weights(), n)?;
    let scale = n as f64 / (2.0 * prior.d() as f64 * prior.sigma() * prior.sigma());
    for p in &mut pairs {
        p.simplified_sqrt_denominator = Some((1.0 + scale * p.coupling).sqrt());
    }
    Ok(BoundReport::from_pairs(
        BoundKind::LinearGOpt,
        n,
        omega.weights(),
        pairs,
    ))
}

// ---------------------------------------------------------------------------
// Hierarchical arms.

/// Deterministic quantities of the hierarchical posterior at counts `ω_i n`.
#[derive(Debug, Clone)]
pub struct HierMoments {
    /// Effect posterior covariance.
    pub effect_cov: DMatrix<f64>,
    pub cond_variances: Vec<f64>,
    pub marg_variances: Vec<f64>,
    /// `μ̂_{n,i} = const_i + Σ_k loading[(i, k)] B_{n,k}`.
    pub loading: DMatrix<f64>,
    /// Covariance of the reward sums `B_n` over histories.
    pub reward_sum_cov: DMatrix<f64>,
    /// `Cov(μ̂_n) = loading · reward_sum_cov · loadingᵀ`.
    pub mean_cov: DMatrix<f64>,
}

impl HierMoments {
    /// `c_ij = Var(μ̂_{n,i} − μ̂_{n,j})`.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        let m = &self.mean_cov;
        (m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)]).max(0.0)
    }
}

pub fn hier_moments(prior: &HierPrior, omega: &[f64], n: u64) -> Result<HierMoments> {
    let k = prior.k();
    if omega.len() != k {
        return Err(Error::DimMismatch {
            expected: k,
            got: omega.len(),
        });
    }
    let s2 = prior.sigma() * prior.sigma();
    let counts: Vec<f64> = omega.iter().map(|w| w * n as f64).collect();
    let effect = effect_covariance(prior, &counts)?;
    let effect_cov = effect.matrix().clone();
    let b = prior.mixing();

    let mut cond_variances = Vec::with_capacity(k);
    let mut marg_variances = Vec::with_capacity(k);
    let mut loading = DMatrix::zeros(k, k);
    // Σ̆ b_k for every arm.
    let eb: Vec<DVector<f64>> = b.iter().map(|bk| &effect_cov * bk).collect();
    for i in 0..k {
        let v0 = prior.var0(i);
        let cond = 1.0 / (1.0 / v0 + counts[i] / s2);
        let shrink = cond / v0;
        cond_variances.push(cond);
        marg_variances.push(cond + shrink * shrink * b[i].dot(&eb[i]));
        for kk in 0..k {
            let dk = s2 + counts[kk] * prior.var0(kk);
            let mut l = cond * b[i].dot(&eb[kk]) / (v0 * dk);
            if kk == i {
                l += cond / s2;
            }
            loading[(i, kk)] = l;
        }
    }
    let sigma = prior.sigma_effects().matrix();
    let mut reward_sum_cov = DMatrix::zeros(k, k);
    for a in 0..k {
        let sb = sigma * &b[a];
        for c in a..k {
            let mut v = counts[a] * counts[c] * b[c].dot(&sb);
            if a == c {
                v += counts[a] * s2 + counts[a] * counts[a] * prior.var0(a);
            }
            reward_sum_cov[(a, c)] = v;
            reward_sum_cov[(c, a)] = v;
        }
    }
    let mean_cov = symmetrize(&(&loading * &reward_sum_cov * loading.transpose()));
    Ok(HierMoments {
        effect_cov,
        cond_variances,
        marg_variances,
        loading,
        reward_sum_cov,
        mean_cov,
    })
}

/// Upper bound for hierarchical arms. The denominator uses the posterior
/// variances `σ̂²_{n,i} + σ̂²_{n,j}`.
pub fn bound_hier(prior: &HierPrior, omega: &SimplexPoint, n: u64) -> Result<BoundReport> {
    check_omega(omega, prior.k())?;
    let pairs = hier_pairs(prior, &HierGaps::new(prior), omega.weights(), n)?;
    Ok(BoundReport::from_pairs(
        BoundKind::Hierarchical,
        n,
        omega.weights(),
        pairs,
    ))
}

/// Prior-only part of the hierarchical bound.
struct HierGaps {
    log_exp: DMatrix<f64>,
}

impl HierGaps {
    fn new(prior: &HierPrior) -> Self {
        let k = prior.k();
        let means = prior.prior_mean_rewards();
        let mut log_exp = DMatrix::zeros(k, k);
        for (i, j) in ordered_pairs(k) {
            let db = &prior.mixing()[i] - &prior.mixing()[j];
            let v =
                prior.sigma_effects().quad_form(&db).unwrap_or(0.0) + prior.var0(i) + prior.var0(j);
            let gap = means[i] - means[j];
            log_exp[(i, j)] = -gap * gap / (2.0 * v);
        }
        HierGaps { log_exp }
    }
}

fn hier_pairs(prior: &HierPrior, gaps: &HierGaps, omega: &[f64], n: u64) -> Result<Vec<PairTerm>> {
    let mom = hier_moments(prior, omega, n)?;
    Ok(ordered_pairs(prior.k())
        .map(|(i, j)| {
            let c = mom.c(i, j);
            let ratio = c / (mom.marg_variances[i] + mom.marg_variances[j]);
            pair_term(i, j, gaps.log_exp[(i, j)], ratio, c)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Misspecified prior means / variance, uniform allocation.

/// The prior the learner believes in: `N(mu0_tilde_i, sigma0_tilde²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MisspecifiedPrior {
    pub mu0_tilde: Vec<f64>,
    pub sigma0_tilde: f64,
}

impl MisspecifiedPrior {
    pub fn new(mu0_tilde: Vec<f64>, sigma0_tilde: f64) -> Result<Self> {
        if !(sigma0_tilde > 0.0) {
            return Err(Error::InvalidPrior(
                "assumed prior std dev must be positive".into(),
            ));
        }
        Ok(MisspecifiedPrior {
            mu0_tilde,
            sigma0_tilde,
        })
    }

    /// KL divergence between the true and assumed prior-gap laws of `(i, j)`.
    pub fn gap_kl(&self, true_prior: &MabPrior, i: usize, j: usize) -> f64 {
        let v0 = true_prior.var0(0);
        let vt = self.sigma0_tilde * self.sigma0_tilde;
        let true_gap = true_prior.mu0()[i] - true_prior.mu0()[j];
        let assumed_gap = self.mu0_tilde[i] - self.mu0_tilde[j];
        let d = vt / v0 * true_gap - assumed_gap;
        v0 / (vt * vt) * d * d
    }
}

/// Bound for the uniform allocation when the learner uses `assumed`
/// instead of the true homogeneous-variance prior.
pub fn bound_mab_misspecified(
    true_prior: &MabPrior,
    assumed: &MisspecifiedPrior,
    n: u64,
) -> Result<BoundReport> {
    let k = true_prior.k();
    if assumed.mu0_tilde.len() != k {
        return Err(Error::DimMismatch {
            expected: k,
            got: assumed.mu0_tilde.len(),
        });
    }
    let v0 = true_prior.var0(0);
    let spread = (0..k)
        .map(|i| (true_prior.sigma0()[i] - true_prior.sigma0()[0]).abs())
        .fold(0.0, f64::max);
    if spread > 1e-12 {
        return Err(Error::HeterogeneousVariance(spread));
    }
    let s2 = true_prior.sigma() * true_prior.sigma();
    let a = 1.0 + n as f64 * v0 / (k as f64 * s2);
    let pairs = ordered_pairs(k)
        .map(|(i, j)| {
            let gap = true_prior.mu0()[i] - true_prior.mu0()[j];
            let log_exp = -gap * gap / (4.0 * v0);
            let kl = assumed.gap_kl(true_prior, i, j);
            let log_d = kl / a;
            let mut p = pair_term(i, j, log_exp, a - 1.0, kl);
            p.misspecification = log_d.exp();
            p.log_value += log_d;
            p
        })
        .collect();
    let omega = vec![1.0 / k as f64; k];
    Ok(BoundReport::from_pairs(
        BoundKind::MabMisspecified,
        n,
        &omega,
        pairs,
    ))
}

// ---------------------------------------------------------------------------
// Lower bound and a Gaussian integral.

/// Lower bound on the expected error for two arms with equal prior variance
/// (natural logarithm in `log(2n)`).
pub fn two_arm_lower_bound(prior: &MabPrior, n: u64) -> Result<f64> {
    if prior.k() != 2 {
        return Err(Error::InvalidArgument(
            "the two-arm lower bound needs k = 2".into(),
        ));
    }
    let spread = (prior.sigma0()[0] - prior.sigma0()[1]).abs();
    if spread > 1e-12 {
        return Err(Error::HeterogeneousVariance(spread));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "the two-arm lower bound needs n >= 1".into(),
        ));
    }
    let v0 = prior.var0(0);
    let s2 = prior.sigma() * prior.sigma();
    let nf = n as f64;
    let gap = prior.mu0()[0] - prior.mu0()[1];
    let den = 2.0
        * std::f64::consts::E
        * (1.0 + 2.0 * nf * (8.0 * (2.0 * nf).ln() + 1.0) * v0 / s2).sqrt();
    Ok((-gap * gap / (4.0 * v0)).exp() / den)
}

/// The per-pair upper-bound expression for two arms with equal prior variance
/// and uniform allocation: `exp(-Δ²/(4σ0²)) / sqrt(1 + nσ0²/(2σ²))`.
pub fn two_arm_upper_pair(prior: &MabPrior, n: u64) -> f64 {
    let v0 = prior.var0(0);
    let s2 = prior.sigma() * prior.sigma();
    let gap = prior.mu0()[0] - prior.mu0()[1];
    (-gap * gap / (4.0 * v0)).exp() / (1.0 + n as f64 * v0 / (2.0 * s2)).sqrt()
}

/// `E[exp(-X² / (2a²))]` for `X ~ N(mean, var)`.
pub fn gaussian_exp_moment(mean: f64, var: f64, a: f64) -> f64 {
    let a2 = a * a;
    (-mean * mean / (2.0 * (a2 + var))).exp() / (1.0 + var / a2).sqrt()
}

// ---------------------------------------------------------------------------
// Objectives for the allocation optimizer.

/// A bound viewed as a function of the allocation, in log scale.
pub trait AllocationObjective: Sync {
    fn k(&self) -> usize;
    /// `ln(total)` for nonnegative weights `omega` (need not sum to one).
    fn log_bound(&self, omega: &[f64]) -> f64;
}

/// Log-bound for independent arms with the prior-gap factors precomputed.
pub struct MabObjective {
    var0: Vec<f64>,
    s2: f64,
    n: f64,
    log_exp: Vec<(usize, usize, f64)>,
}

impl MabObjective {
    pub fn new(prior: &MabPrior, n: u64) -> Self {
        let var0: Vec<f64> = (0..prior.k()).map(|i| prior.var0(i)).collect();
        let log_exp = ordered_pairs(prior.k())
            .map(|(i, j)| {
                let gap = prior.mu0()[i] - prior.mu0()[j];
                (i, j, -gap * gap / (2.0 * (var0[i] + var0[j])))
            })
            .collect();
        MabObjective {
            var0,
            s2: prior.sigma() * prior.sigma(),
            n: n as f64,
            log_exp,
        }
    }
}

impl AllocationObjective for MabObjective {
    fn k(&self) -> usize {
        self.var0.len()
    }

    fn log_bound(&self, omega: &[f64]) -> f64 {
        log_sum_exp(self.log_exp.iter().map(|&(i, j, le)| {
            let r = mab_n_phi(
                self.var0[i],
                self.var0[j],
                omega[i],
                omega[j],
                self.s2,
                self.n,
            );
            le - 0.5 * r.ln_1p()
        }))
    }
}

pub struct LinearObjective<'a> {
    pub prior: &'a LinearPrior,
    pub n: u64,
}

impl AllocationObjective for LinearObjective<'_> {
    fn k(&self) -> usize {
        self.prior.k()
    }

    fn log_bound(&self, omega: &[f64]) -> f64 {
        match linear_pairs(self.prior, omega, self.n) {
            Ok(p) => log_sum_exp(p.iter().map(|t| t.log_value)),
            Err(_) => f64::NAN,
        }
    }
}

pub struct HierObjective<'a> {
    prior: &'a HierPrior,
    gaps: HierGaps,
    n: u64,
}

impl<'a> HierObjective<'a> {
    pub fn new(prior: &'a HierPrior, n: u64) -> Self {
        HierObjective {
            prior,
            gaps: HierGaps::new(prior),
            n,
        }
    }
}

impl AllocationObjective for HierObjective<'_> {
    fn k(&self) -> usize {
        self.prior.k()
    }

    fn log_bound(&self, omega: &[f64]) -> f64 {
        match hier_pairs(self.prior, &self.gaps, omega, self.n) {
            Ok(p) => log_sum_exp(p.iter().map(|t| t.log_value)),
            Err(_) => f64::NAN,
        }
    }
}

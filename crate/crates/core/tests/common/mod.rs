//! Random model generators shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pibai::linalg::SpdMatrix;
use pibai::models::{HierPrior, LinearPrior, MabPrior};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal<R: Rng>(r: &mut R) -> f64 {
    r.sample(StandardNormal)
}

/// `A Aᵀ / d + floor · I`, scaled by `scale`.
pub fn random_spd<R: Rng>(r: &mut R, d: usize, scale: f64, floor: f64) -> SpdMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| normal(r));
    let m = (&a * a.transpose() / d as f64 + DMatrix::identity(d, d) * floor) * scale;
    SpdMatrix::new(m).unwrap()
}

pub fn random_vec<R: Rng>(r: &mut R, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * normal(r))
}

pub fn random_mab<R: Rng>(r: &mut R, k: usize) -> MabPrior {
    let mu0 = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
    let s0 = (0..k).map(|_| r.random_range(0.1..1.0)).collect();
    MabPrior::new(mu0, s0, r.random_range(0.5..1.5)).unwrap()
}

/// Gaussian arms that span `R^d` (the first `d` are made well conditioned).
pub fn random_arms<R: Rng>(r: &mut R, k: usize, d: usize) -> Vec<DVector<f64>> {
    (0..k)
        .map(|i| {
            let mut x = random_vec(r, d, 1.0);
            if i < d {
                x[i] += 2.0;
            }
            x
        })
        .collect()
}

pub fn random_linear<R: Rng>(r: &mut R, k: usize, d: usize) -> LinearPrior {
    LinearPrior::new(
        random_vec(r, d, 0.5),
        random_spd(r, d, 0.5, 0.2),
        random_arms(r, k, d),
        r.random_range(0.5..1.5),
    )
    .unwrap()
}

pub fn random_hier<R: Rng>(r: &mut R, k: usize, l: usize) -> HierPrior {
    let mixing = (0..k)
        .map(|_| DVector::from_fn(l, |_, _| r.random_range(-1.0..1.0)))
        .collect();
    HierPrior::new(
        DVector::from_fn(l, |_, _| r.random_range(-1.0..1.0)),
        random_spd(r, l, 0.5, 0.2),
        mixing,
        (0..k).map(|_| r.random_range(0.1..0.8)).collect(),
        r.random_range(0.5..1.5),
    )
    .unwrap()
}

/// A point of the open simplex drawn from Dirichlet(1).
pub fn random_weights<R: Rng>(r: &mut R, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k)
        .map(|_| -(1.0 - r.random::<f64>()).ln() + 1e-3)
        .collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// `|a − b| ≤ tol · max(|a|, |b|, 1)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

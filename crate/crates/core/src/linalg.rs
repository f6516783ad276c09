//! Dense symmetric positive-definite algebra, simplex helpers and seeded
//! random streams.
//!
//! Everything here works on `nalgebra` dynamic matrices. The dimensions in
//! this crate are small (tens, occasionally low hundreds) so a hand-written
//! Cholesky with an explicit pivot threshold is all we need.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative pivot threshold: a pivot must exceed `PIVOT_TOL * trace / dim`.
const PIVOT_TOL: f64 = 1e-14;

/// Jitter added to covariances before sampling.
pub const SAMPLING_JITTER: f64 = 1e-12;

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    m: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl SpdMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2` and factors it.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        let m = symmetrize(&m);
        let chol = cholesky_factor(&m)?;
        Ok(SpdMatrix { m, chol })
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix {
            m: DMatrix::identity(dim, dim),
            chol: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Lower-triangular `L` with `L Lᵀ = self`.
    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn logdet(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `self · x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = forward_sub(&self.chol, b);
        backward_sub_transposed(&self.chol, &y)
    }

    /// Solves `self · X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = self.solve(&b.column(c).into_owned());
            out.set_column(c, &col);
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        symmetrize(&self.solve_matrix(&DMatrix::identity(self.dim(), self.dim())))
    }

    /// `vᵀ self v`, clamped at zero against rounding.
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        quad_form(v, &self.m).map(|q| q.max(0.0))
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.m[(i, j)] == 0.0))
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factorization with the relative pivot test used throughout the
/// crate.
pub fn cholesky(m: &SpdMatrix) -> DMatrix<f64> {
    m.cholesky().clone()
}

fn cholesky_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (m.trace() / n as f64).abs();
    cholesky_with_floor(m, PIVOT_TOL * scale)
}

fn cholesky_with_floor(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

fn forward_sub(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

fn backward_sub_transposed(l: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = DVector::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Squared weighted norm `vᵀ m v` for any square `m`.
pub fn quad_form(v: &DVector<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != v.len() || m.ncols() != v.len() {
        return Err(Error::DimMismatch {
            expected: m.nrows(),
            got: v.len(),
        });
    }
    Ok(v.dot(&(m * v)))
}

pub fn logdet(m: &SpdMatrix) -> f64 {
    m.logdet()
}

/// Numerical rank of the rows of `rows` (each of length `dim`), via a
/// pivoted Gram–Schmidt sweep.
pub fn rank_of(rows: &[DVector<f64>], dim: usize) -> usize {
    let scale = rows
        .iter()
        .map(|r| r.norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for b in &basis {
            let p = v.dot(b);
            v -= b * p;
        }
        let nv = v.norm();
        if nv > 1e-10 * scale {
            basis.push(v / nv);
            if basis.len() == dim {
                break;
            }
        }
    }
    basis.len()
}

/// Draws from `N(mean, cov)` for a symmetric positive semi-definite `cov`.
///
/// `SAMPLING_JITTER · I` is added before factoring so degenerate covariances
/// collapse onto the mean.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let sampler = MvnSampler::new(mean.clone(), cov)?;
    Ok(sampler.sample(rng))
}

/// Multivariate normal with a cached (jittered) Cholesky factor.
#[derive(Debug, Clone)]
pub struct MvnSampler {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MvnSampler {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        let d = mean.len();
        let jittered = symmetrize(cov) + DMatrix::identity(d, d) * SAMPLING_JITTER;
        let factor = cholesky_with_floor(&jittered, 0.0)?;
        Ok(MvnSampler { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        &self.mean + &self.factor * z
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("simplex point needs k >= 1".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "simplex weights must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "simplex weights sum to {s}, not 1"
            )));
        }
        Ok(SimplexPoint(weights))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be nonnegative with a positive sum".into(),
            ));
        }
        Ok(SimplexPoint(weights.into_iter().map(|w| w / s).collect()))
    }

    pub fn uniform(k: usize) -> Self {
        SimplexPoint(vec![1.0 / k as f64; k])
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// True when every weight is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|w| *w > 0.0)
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> SimplexPoint {
    assert!(!v.is_empty(), "cannot project an empty vector");
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (idx, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (idx + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    // Remove the last ulp of drift so the invariant holds exactly.
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    } else {
        w = vec![1.0 / v.len() as f64; v.len()];
    }
    SimplexPoint(w)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A reproducible random stream addressed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8, whose 64-bit stream id gives independent sequences per
/// index without any shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream {
            master_seed,
            stream_index,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// A child stream keyed by `tag`, sharing this stream's index.
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream {
            master_seed: splitmix64(self.master_seed ^ splitmix64(tag.wrapping_add(0x5851_F42D))),
            stream_index: self.stream_index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

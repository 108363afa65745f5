//! Gaussian-process regression with kernels induced by a partition.
//!
//! The hard kernel is 1 for two points in the same region and 0 otherwise.
//! Its Gram matrix is a permuted block-diagonal of all-ones blocks, so
//! `v'Kv = sum over regions of (sum of v over the region's points)^2 >= 0`.
//!
//! The soft kernel replaces region indicators by logistic membership
//! weights. For region `b` let `s_b(x)` be the signed Chebyshev distance
//! from `x` to the faces of `b` that lie inside the domain (positive inside
//! `b`, negative outside; faces on the domain boundary are ignored). With
//! `phi_b(x) = 1 / (1 + exp(-alpha * s_b(x)))` and `p(x) = phi(x) / sum(phi(x))`,
//!
//! ```text
//! k(x, y) = p(x) . p(y) + (1 - |p(x)|^2) [x == y]
//! ```
//!
//! The first term is an inner product and the second a nonnegative diagonal,
//! so every Gram matrix is positive semidefinite; `k(x, x) = 1` and values
//! lie in `[0, 1]`. Because `p(x)` sums to one, the posterior mean between
//! two cells is a blend of the cells' weights rather than an overshoot. As
//! `alpha` grows, `p(x)` tends to the indicator of the region of `x`, the
//! diagonal term vanishes and `k` tends to the hard kernel.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::partition::{Binning, Domain, Partition, PartitionError, Region, RegionId};
use crate::tree::{FitConfig, TreeFitter};

/// Diagonal jitter added when the first factorization attempt fails.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },
    #[error("noise variance must be positive, got {0}")]
    NoiseVariance(f64),
    #[error("{points} training points but {targets} targets")]
    Shape { points: usize, targets: usize },
    #[error("sharpness alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("K + noise I is not positive definite even after jitter")]
    Factorization,
}

pub trait Kernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, GpError>;

    /// Pairwise evaluations over `points`.
    fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        cross(self, points, points)
    }

    /// `K[i][j] = k(a_i, b_j)`.
    fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        cross(self, a, b)
    }
}

fn cross<K: Kernel + ?Sized>(kernel: &K, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
    let mut out = DMatrix::zeros(a.len(), b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[(i, j)] = kernel.eval(x, y)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardBoxKernel {
    pub partition: Partition,
}

impl HardBoxKernel {
    pub fn new(partition: Partition) -> Self {
        Self { partition }
    }

    fn ids(&self, points: &[Vec<f64>]) -> Result<Vec<RegionId>, GpError> {
        points.iter().map(|p| Ok(self.partition.region_of(p)?.id)).collect()
    }
}

impl Kernel for HardBoxKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
        let same = self.partition.region_of(x)?.id == self.partition.region_of(y)?.id;
        Ok(if same { 1.0 } else { 0.0 })
    }

    fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        let (ia, ib) = (self.ids(a)?, self.ids(b)?);
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| if ia[i] == ib[j] { 1.0 } else { 0.0 }))
    }

    fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        self.cross(points, points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftBoxKernel {
    pub partition: Partition,
    pub alpha: f64,
}

impl SoftBoxKernel {
    pub fn new(partition: Partition, alpha: f64) -> Result<Self, GpError> {
        if !(alpha > 0.0) {
            return Err(GpError::Alpha(alpha));
        }
        Ok(Self { partition, alpha })
    }

    /// Membership weights `p(x)`, one entry per region, summing to one.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, GpError> {
        self.partition.domain().check_point(x)?;
        let (lo, hi) = (self.partition.domain().lo(), self.partition.domain().hi());
        let mut phi: Vec<f64> = self
            .partition
            .regions()
            .iter()
            .map(|r| logistic(self.alpha * signed_distance(r, x, lo, hi)))
            .collect();
        let total: f64 = phi.iter().sum();
        phi.iter_mut().for_each(|v| *v /= total);
        Ok(phi)
    }
}

impl Kernel for SoftBoxKernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
        if x == y {
            self.partition.domain().check_point(x)?;
            return Ok(1.0);
        }
        Ok(dot(&self.features(x)?, &self.features(y)?))
    }

    fn cross(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        let fa: Vec<Vec<f64>> = a.iter().map(|x| self.features(x)).collect::<Result<_, _>>()?;
        let fb: Vec<Vec<f64>> = b.iter().map(|x| self.features(x)).collect::<Result<_, _>>()?;
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| if a[i] == b[j] { 1.0 } else { dot(&fa[i], &fb[j]) }))
    }

    fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>, GpError> {
        self.cross(points, points)
    }
}

/// Kernel value of the soft kernel, see the module docs.
pub fn soft_kernel_eval(kernel: &SoftBoxKernel, x: &[f64], y: &[f64]) -> Result<f64, GpError> {
    kernel.eval(x, y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(0.0, 1.0)
}

fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Chebyshev distance from `x` to the interior faces of `region`: positive
/// inside, negative outside, infinite for a region spanning the domain.
fn signed_distance(region: &Region, x: &[f64], domain_lo: &[f64], domain_hi: &[f64]) -> f64 {
    let mut inside = f64::INFINITY;
    let mut outside: f64 = 0.0;
    for i in 0..x.len() {
        if region.lo[i] > domain_lo[i] {
            inside = inside.min(x[i] - region.lo[i]);
            outside = outside.max(region.lo[i] - x[i]);
        }
        if region.hi[i] < domain_hi[i] {
            inside = inside.min(region.hi[i] - x[i]);
            outside = outside.max(x[i] - region.hi[i]);
        }
    }
    if outside > 0.0 {
        -outside
    } else {
        inside
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub pass: bool,
    pub min_eigenvalue: f64,
}

/// Whether the smallest eigenvalue of the symmetric matrix is at least `-tol`.
pub fn psd_check(gram: &DMatrix<f64>, tol: f64) -> Result<PsdReport, GpError> {
    let n = gram.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let diff = (gram[(i, j)] - gram[(j, i)]).abs();
            if diff > 1e-12 {
                return Err(GpError::Asymmetric { i, j, diff });
            }
        }
    }
    if n == 0 {
        return Ok(PsdReport { pass: true, min_eigenvalue: f64::INFINITY });
    }
    let min_eigenvalue = SymmetricEigen::new(gram.clone()).eigenvalues.min();
    Ok(PsdReport { pass: min_eigenvalue >= -tol, min_eigenvalue })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Zero-mean GP regression: `mean = k*' (K + s2 I)^-1 y` and
/// `var = k** - k*' (K + s2 I)^-1 k*`, through a Cholesky factorization.
pub fn gp_posterior<K: Kernel + ?Sized>(
    kernel: &K,
    train_x: &[Vec<f64>],
    train_y: &[f64],
    noise_var: f64,
    query: &[Vec<f64>],
) -> Result<Posterior, GpError> {
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(GpError::NoiseVariance(noise_var));
    }
    if train_x.len() != train_y.len() {
        return Err(GpError::Shape { points: train_x.len(), targets: train_y.len() });
    }
    let n = train_x.len();
    let k_star = kernel.cross(train_x, query)?;
    let prior: Vec<f64> = query.iter().map(|q| kernel.eval(q, q)).collect::<Result<_, _>>()?;
    if n == 0 {
        return Ok(Posterior { means: vec![0.0; query.len()], variances: prior });
    }
    let mut a = kernel.gram(train_x)?;
    for i in 0..n {
        a[(i, i)] += noise_var;
    }
    let chol = match a.clone().cholesky() {
        Some(c) => c,
        None => {
            log::warn!("Cholesky factorization failed; retrying with diagonal jitter {JITTER:e}");
            for i in 0..n {
                a[(i, i)] += JITTER;
            }
            a.cholesky().ok_or(GpError::Factorization)?
        }
    };
    let weights = chol.solve(&DVector::from_column_slice(train_y));
    let means = (k_star.transpose() * &weights).iter().copied().collect();
    // |L^-1 k*|^2 per query column.
    let mut v = k_star;
    chol.l().solve_lower_triangular_mut(&mut v);
    let variances = prior
        .iter()
        .enumerate()
        .map(|(j, &kss)| (kss - v.column(j).norm_squared()).max(0.0))
        .collect();
    Ok(Posterior { means, variances })
}

/// Within-region averages of the training targets at the query points; 0 in
/// regions without training data.
pub fn tree_mean(
    partition: &Partition,
    train_x: &[Vec<f64>],
    train_y: &[f64],
    query: &[Vec<f64>],
) -> Result<Vec<f64>, GpError> {
    let mut acc: std::collections::BTreeMap<RegionId, (f64, usize)> = Default::default();
    for (x, &y) in train_x.iter().zip(train_y) {
        let e = acc.entry(partition.region_of(x)?.id).or_default();
        e.0 += y;
        e.1 += 1;
    }
    query
        .iter()
        .map(|q| {
            let id = partition.region_of(q)?.id;
            Ok(acc.get(&id).map_or(0.0, |&(s, c)| s / c as f64))
        })
        .collect()
}

/// Sum of absolute successive differences.
pub fn total_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Estimates along a query grid: piecewise-constant region means, the
/// hard-kernel posterior mean and one soft-kernel posterior mean per alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingCurves {
    pub query: Vec<Vec<f64>>,
    pub tree: Vec<f64>,
    pub hard: Vec<f64>,
    pub soft: Vec<(f64, Vec<f64>)>,
}

pub fn smoothing_curves(
    partition: &Partition,
    train_x: &[Vec<f64>],
    train_y: &[f64],
    noise_var: f64,
    alphas: &[f64],
    query: &[Vec<f64>],
) -> Result<SmoothingCurves, GpError> {
    let tree = tree_mean(partition, train_x, train_y, query)?;
    let hard = gp_posterior(&HardBoxKernel::new(partition.clone()), train_x, train_y, noise_var, query)?.means;
    let soft = alphas
        .iter()
        .map(|&alpha| {
            let kernel = SoftBoxKernel::new(partition.clone(), alpha)?;
            Ok((alpha, gp_posterior(&kernel, train_x, train_y, noise_var, query)?.means))
        })
        .collect::<Result<_, GpError>>()?;
    Ok(SmoothingCurves { query: query.to_vec(), tree, hard, soft })
}

/// The 1-D smoothing demo: 60 seeded uniform samples of a five-level step
/// function with `U[-0.05, 0.05]` noise, and the partition the regression
/// tree learns from them with `eta = 0.01`.
pub fn demo_problem() -> (Partition, Vec<Vec<f64>>, Vec<f64>) {
    use rand::{Rng, SeedableRng};

    const CUTS: [f64; 4] = [0.2, 0.45, 0.7, 0.85];
    const LEVELS: [f64; 5] = [0.2, 0.8, 0.4, 0.9, 0.3];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let x: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random::<f64>()]).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|p| LEVELS[CUTS.iter().filter(|&&c| p[0] >= c).count()] + rng.random_range(-0.05..=0.05))
        .collect();
    let mut partition = Partition::trivial(Domain::unit(1));
    let mut bins = Binning::new(&partition, &x).expect("samples lie in the unit interval");
    let config = FitConfig { eta: 0.01, ..FitConfig::default() };
    TreeFitter::new(config)
        .expect("valid fit config")
        .refine(&mut partition, &mut bins, &x, &y)
        .expect("samples lie in the unit interval");
    (partition, x, y)
}

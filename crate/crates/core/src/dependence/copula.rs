use crate::error::{Error, Result};
use crate::numeric::normal_cdf;
use crate::rng::{module, parallel_blocks, std_normal, Stream};
use nalgebra::{DMatrix, SymmetricEigen};

/// Sampling contract shared by all copulas.
pub trait Copula: Sync {
    fn dim(&self) -> usize;
    /// Writes one vector of `(0, 1)` uniforms with the copula's dependence into `out`.
    fn fill_uniforms(&self, rng: &mut Stream, out: &mut [f64]);
}

/// Pivots at or below this are treated as exact zeros (singular but valid).
const PIVOT_TOL: f64 = 1e-10;
/// Eigenvalue floor applied when repairing an indefinite matrix.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Most negative eigenvalue that is still attributed to rounding.
pub const REPAIR_TOLERANCE: f64 = 1e-6;
const LARGEST_BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Gaussian copula with a validated correlation matrix and its lower factor.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCopula {
    correlation: DMatrix<f64>,
    factor: DMatrix<f64>,
    repaired: bool,
}

impl GaussianCopula {
    pub fn new(correlation: DMatrix<f64>) -> Result<Self> {
        let d = correlation.nrows();
        if d == 0 || correlation.ncols() != d {
            return Err(Error::Matrix(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                d,
                correlation.ncols()
            )));
        }
        for i in 0..d {
            if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::Matrix(format!("diagonal entry {i} is {}, expected 1", correlation[(i, i)])));
            }
            for j in 0..i {
                let (a, b) = (correlation[(i, j)], correlation[(j, i)]);
                if !(a.is_finite() && a.abs() <= 1.0) || (a - b).abs() > 1e-12 {
                    return Err(Error::Matrix(format!("entry ({i}, {j}) must be symmetric and within [-1, 1]")));
                }
            }
        }
        if let Some(factor) = semi_cholesky(&correlation) {
            return Ok(Self { correlation, factor, repaired: false });
        }
        let fixed = clip_eigenvalues(&correlation)?;
        let factor = semi_cholesky(&fixed)
            .ok_or_else(|| Error::Matrix("eigenvalue repair did not yield a factorizable matrix".into()))?;
        Ok(Self { correlation: fixed, factor, repaired: true })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Matrix("correlation rows must all have length equal to the row count".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn independent(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    /// All off-diagonal correlations equal to `rho`.
    pub fn equicorrelated(dim: usize, rho: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    /// Whether the input needed eigenvalue clipping.
    pub fn repaired(&self) -> bool {
        self.repaired
    }

    /// Correlated standard normals.
    pub(crate) fn fill_normals(&self, rng: &mut Stream, out: &mut [f64]) {
        let d = self.correlation.nrows();
        let z: Vec<f64> = (0..d).map(|_| std_normal(rng)).collect();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = (0..=i).map(|k| self.factor[(i, k)] * z[k]).sum();
        }
    }
}

impl Copula for GaussianCopula {
    fn dim(&self) -> usize {
        self.correlation.nrows()
    }

    fn fill_uniforms(&self, rng: &mut Stream, out: &mut [f64]) {
        self.fill_normals(rng, out);
        for v in out.iter_mut() {
            *v = to_open_unit(normal_cdf(*v));
        }
    }
}

/// Keeps a probability inside `(0, 1)` so inverse cdfs stay finite.
pub(crate) fn to_open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, LARGEST_BELOW_ONE)
}

/// Cholesky factor allowing zero pivots, as needed for singular but valid
/// correlation matrices such as perfect dependence.
fn semi_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d < -PIVOT_TOL {
            return None;
        }
        if d <= PIVOT_TOL {
            for i in j + 1..n {
                let r = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
                if r.abs() > 1e-8 {
                    return None;
                }
            }
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in j + 1..n {
            let r = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = r / pivot;
        }
    }
    Some(l)
}

fn clip_eigenvalues(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(a.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -REPAIR_TOLERANCE {
        return Err(Error::Matrix(format!("correlation matrix is indefinite (smallest eigenvalue {min:e})")));
    }
    log::warn!("correlation matrix repaired by clipping eigenvalues at {EIGEN_FLOOR:e} (smallest was {min:e})");
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let b = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..b.nrows()).map(|i| b[(i, i)].sqrt()).collect();
    Ok(DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| if i == j { 1.0 } else { b[(i, j)] / (d[i] * d[j]) }))
}

/// `n` uniform vectors drawn from `copula`, generated in deterministic blocks.
pub fn sample_gaussian_copula<C: Copula + ?Sized>(copula: &C, n: usize, seed: u64) -> Vec<Vec<f64>> {
    parallel_blocks(seed, module::COPULA, n, |rng, _, len| {
        (0..len)
            .map(|_| {
                let mut u = vec![0.0; copula.dim()];
                copula.fill_uniforms(rng, &mut u);
                u
            })
            .collect()
    })
}

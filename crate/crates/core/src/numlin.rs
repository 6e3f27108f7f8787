//! Dense complex linear algebra on top of `nalgebra`: SVD with sorted
//! singular values, numerical kernels, seeded random unitaries and the norms
//! the certification formulas need.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default relative tolerance for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Relative cutoff below which a square matrix is treated as singular.
pub const SINGULAR_CUTOFF: f64 = 1e-14;

const SVD_MAX_ITER: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("SVD failed to converge within {0} iterations")]
    NoConvergence(usize),
    #[error("matrix is numerically singular (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    Singular { sigma_min: f64, sigma_max: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// `A = U · diag(sigma) · Vᴴ`, with `sigma` sorted in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(a: &CMatrix) -> Result<Svd, LinalgError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Svd { u: CMatrix::identity(m, m.min(n)), sigma: Vec::new(), v: CMatrix::identity(n, m.min(n)) });
    }
    let dec = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_MAX_ITER).ok_or(LinalgError::NoConvergence(SVD_MAX_ITER))?;
    let u = dec.u.expect("requested U");
    let v = dec.v_t.expect("requested V").adjoint();
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]).then(i.cmp(&j)));
    let sigma = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = CMatrix::from_fn(v.nrows(), order.len(), |r, c| v[(r, order[c])]);
    Ok(Svd { u, sigma, v })
}

/// Singular values only, descending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let dec =
        nalgebra::SVD::try_new(a.clone(), false, false, f64::EPSILON, SVD_MAX_ITER).ok_or(LinalgError::NoConvergence(SVD_MAX_ITER))?;
    let mut s: Vec<f64> = dec.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Absolute threshold used for a rank decision at relative tolerance `tol`.
///
/// The scale is `max(σ_max, 1)`: relative for matrices of unit size or
/// larger, absolute for tiny ones, so a Jacobian that is small everywhere
/// (an approximate singular root) is not declared full rank.
pub fn rank_threshold(sigma_max: f64, tol: f64) -> f64 {
    tol * sigma_max.max(1.0)
}

/// Numerical rank of a matrix given its descending singular values.
pub fn numerical_rank(sigma: &[f64], tol: f64) -> usize {
    let thr = rank_threshold(sigma.first().copied().unwrap_or(0.0), tol);
    sigma.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal split of `C^n` into a numerical kernel `V1` and its
/// complement `V2`.
#[derive(Debug, Clone)]
pub struct KernelFrame {
    pub kappa: usize,
    pub v1: CMatrix,
    pub v2: CMatrix,
    /// Full singular-value list of the analyzed matrix, descending.
    pub sigma: Vec<f64>,
    /// Absolute threshold the rank decision used.
    pub tol_used: f64,
}

impl KernelFrame {
    pub fn n(&self) -> usize {
        self.v1.nrows()
    }

    /// `v_i`, the `i`-th kernel basis vector.
    pub fn kernel_vector(&self, i: usize) -> CVector {
        self.v1.column(i).into_owned()
    }

    /// The unitary `[V1 V2]`.
    pub fn unitary(&self) -> CMatrix {
        let n = self.n();
        let mut v = CMatrix::zeros(n, n);
        v.columns_mut(0, self.kappa).copy_from(&self.v1);
        v.columns_mut(self.kappa, n - self.kappa).copy_from(&self.v2);
        v
    }

    /// Build a frame from explicit kernel columns; `V2` is completed to an
    /// orthonormal complement.
    pub fn from_kernel_columns(v1: CMatrix) -> Result<Self, LinalgError> {
        let (n, kappa) = v1.shape();
        // complement from the left singular vectors of V1 beyond its rank
        let mut padded = CMatrix::zeros(n, n);
        padded.columns_mut(0, kappa).copy_from(&v1);
        let dec = svd(&padded)?;
        let v2 = dec.u.columns(kappa, n - kappa).into_owned();
        Ok(Self { kappa, v1, v2, sigma: Vec::new(), tol_used: 0.0 })
    }
}

/// Kernel of a square matrix: `kappa` counts `σ_j ≤ tol·max(σ_max, 1)`;
/// `V1` holds the matching right-singular vectors.
pub fn numerical_kernel(a: &CMatrix, tol: f64) -> Result<KernelFrame, LinalgError> {
    let (m, n) = a.shape();
    if m != n {
        return Err(LinalgError::NotSquare { rows: m, cols: n });
    }
    let dec = svd(a)?;
    let tol_used = rank_threshold(dec.sigma.first().copied().unwrap_or(0.0), tol);
    let rank = dec.sigma.iter().filter(|&&s| s > tol_used).count();
    let kappa = n - rank;
    Ok(KernelFrame {
        kappa,
        v1: dec.v.columns(rank, kappa).into_owned(),
        v2: dec.v.columns(0, rank).into_owned(),
        sigma: dec.sigma,
        tol_used,
    })
}

/// Deterministic generator for one `(seed, stream)` pair.
///
/// Streams let independent consumers (frames, `λ₁`, samples) draw from the
/// same user seed without sharing state.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian (`E|z|² = 1`).
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    // column-major fill order
    let mut m = CMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_gaussian(rng);
        }
    }
    m
}

/// Haar-distributed `k × k` unitary: QR of a complex Gaussian matrix with
/// the phases of `diag(R)` moved into `Q`.
pub fn random_unitary(rng: &mut ChaCha8Rng, k: usize) -> CMatrix {
    if k == 0 {
        return CMatrix::zeros(0, 0);
    }
    let g = gaussian_matrix(rng, k, k);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..k {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Replace `V1` by `V1·Q` for a seeded Haar unitary `Q`.
pub fn random_orthonormal_kernel_basis(frame: &KernelFrame, seed: u64) -> KernelFrame {
    let mut rng = rng_for(seed, 0x6b65_726e);
    let q = random_unitary(&mut rng, frame.kappa);
    KernelFrame { v1: &frame.v1 * q, ..frame.clone() }
}

fn check_square(a: &CMatrix) -> Result<(), LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(())
}

/// `(σ_min, σ_max)` of a square matrix, erroring when numerically singular.
fn nonsingular_extremes(a: &CMatrix) -> Result<(f64, f64), LinalgError> {
    check_square(a)?;
    let s = singular_values(a)?;
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let sigma_min = s.last().copied().unwrap_or(0.0);
    if sigma_min <= SINGULAR_CUTOFF * sigma_max || sigma_min == 0.0 {
        return Err(LinalgError::Singular { sigma_min, sigma_max });
    }
    Ok((sigma_min, sigma_max))
}

/// Solve `A·X = B` for square nonsingular `A`.
pub fn solve_matrix(a: &CMatrix, b: &CMatrix) -> Result<CMatrix, LinalgError> {
    if b.nrows() != a.nrows() {
        return Err(LinalgError::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let (sigma_min, sigma_max) = nonsingular_extremes(a)?;
    a.clone().lu().solve(b).ok_or(LinalgError::Singular { sigma_min, sigma_max })
}

pub fn solve(a: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    let rhs = CMatrix::from_column_slice(b.len(), 1, b);
    Ok(solve_matrix(a, &rhs)?.column(0).iter().copied().collect())
}

/// `‖A⁻¹‖₂ = 1/σ_min`.
pub fn inv_norm(a: &CMatrix) -> Result<f64, LinalgError> {
    Ok(1.0 / nonsingular_extremes(a)?.0)
}

/// `‖A‖₂ = σ_max` (0 for empty matrices).
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a).map(|s| s.first().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖b − A·A⁺b‖`: distance from `b` to the column space of `A`.
pub fn least_squares_residual(a: &CMatrix, b: &[Complex64]) -> Result<f64, LinalgError> {
    if b.len() != a.nrows() {
        return Err(LinalgError::DimensionMismatch { expected: a.nrows(), found: b.len() });
    }
    let bv = CVector::from_column_slice(b);
    if a.ncols() == 0 {
        return Ok(bv.norm());
    }
    let dec = svd(a)?;
    let cutoff = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * dec.sigma.first().copied().unwrap_or(0.0);
    let mut proj = CVector::zeros(a.nrows());
    for (j, &s) in dec.sigma.iter().enumerate() {
        if s > cutoff {
            let uj = dec.u.column(j);
            proj += uj * uj.dotc(&bv);
        }
    }
    Ok((bv - proj).norm())
}

/// `max |(A − B)_ij|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

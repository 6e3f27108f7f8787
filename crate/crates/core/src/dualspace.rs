//! Local dual space dimensions via Macaulay matrices.
//!
//! The functionals of order at most `k` annihilating the ideal at `x` are the
//! null vectors of the matrix whose rows are the Taylor coefficients (at `x`,
//! up to order `k`) of the shifted products `(y − x)^β f_i` with `|β| ≤ k−1`.
//! Breadth, depth and multiplicity are read off the nullity sequence.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numlin::{self, CMatrix, LinalgError};
use crate::poly::{multi_indices, Point, PolyError, PolySystem};

/// Default cap on `k · n` for a single Macaulay matrix.
pub const DEFAULT_ORDER_CAP: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Macaulay matrix of order {order} in {nvars} variables exceeds the cap k*n <= {cap}")]
    TooLarge { order: usize, nvars: usize, cap: usize },
    #[error("dual space dimensions did not stabilize by order {kmax} (dims {dims:?}); the zero may be non-isolated or kmax too small")]
    NotStabilized { kmax: usize, dims: Vec<usize> },
}

#[derive(Debug, Clone, Copy)]
pub struct DualOptions {
    pub rank_tol: f64,
    pub res_tol: f64,
    pub order_cap: usize,
}

impl Default for DualOptions {
    fn default() -> Self {
        Self { rank_tol: numlin::DEFAULT_RANK_TOL, res_tol: 1e-6, order_cap: DEFAULT_ORDER_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualInvariants {
    pub breadth: usize,
    pub depth: usize,
    pub multiplicity: usize,
    /// `dim D^{(k)}` for `k = 0 … depth+1`.
    pub dims: Vec<usize>,
    /// `‖f(x)‖` at the analyzed point.
    pub residual: f64,
}

/// All multi-indices with `|α| ≤ k`, graded.
fn graded_indices(n: usize, k: usize) -> Vec<Vec<u32>> {
    (0..=k).flat_map(|d| multi_indices(n, d)).collect()
}

/// Macaulay matrix of order `k` for the system re-centered at `x`.
pub fn macaulay_matrix(centered: &PolySystem, k: usize) -> CMatrix {
    let n = centered.nvars();
    let cols = graded_indices(n, k);
    let col_of: std::collections::HashMap<&[u32], usize> = cols.iter().enumerate().map(|(j, a)| (a.as_slice(), j)).collect();
    let shifts = if k == 0 { Vec::new() } else { graded_indices(n, k - 1) };
    let mut m = CMatrix::zeros(shifts.len() * centered.len(), cols.len());
    let mut row = 0;
    for beta in &shifts {
        for p in centered.polys() {
            for (e, c) in p.terms() {
                let alpha: Vec<u32> = e.iter().zip(beta).map(|(a, b)| a + b).collect();
                if let Some(&j) = col_of.get(alpha.as_slice()) {
                    m[(row, j)] += *c;
                }
            }
            row += 1;
        }
    }
    m
}

fn nullity_centered(centered: &PolySystem, k: usize, opts: &DualOptions) -> Result<usize, DualError> {
    let n = centered.nvars();
    if k * n > opts.order_cap {
        return Err(DualError::TooLarge { order: k, nvars: n, cap: opts.order_cap });
    }
    let m = macaulay_matrix(centered, k);
    if m.nrows() == 0 {
        return Ok(m.ncols());
    }
    let sigma = numlin::singular_values(&m)?;
    Ok(m.ncols() - numlin::numerical_rank(&sigma, opts.rank_tol))
}

/// `dim D^{(k)}_{f,x}`, the numerical nullity of the order-`k` Macaulay matrix.
pub fn macaulay_nullity(f: &PolySystem, x: &Point, k: usize, opts: &DualOptions) -> Result<usize, DualError> {
    warn_residual(f, x, opts)?;
    nullity_centered(&f.translate(x)?, k, opts)
}

fn warn_residual(f: &PolySystem, x: &Point, opts: &DualOptions) -> Result<f64, DualError> {
    let r = f.residual(x)?;
    if r > opts.res_tol {
        log::warn!("residual ‖f(x)‖ = {r:e} exceeds res-tol {:e}; dual space of a non-root", opts.res_tol);
    }
    Ok(r)
}

/// Breadth, depth and multiplicity from the first plateau of the nullity
/// sequence, searching orders up to `kmax`.
pub fn dual_invariants(f: &PolySystem, x: &Point, kmax: usize, opts: &DualOptions) -> Result<DualInvariants, DualError> {
    let residual = warn_residual(f, x, opts)?;
    let centered = f.translate(x)?;
    let mut dims = vec![nullity_centered(&centered, 0, opts)?];
    for k in 1..=kmax.max(1) {
        dims.push(nullity_centered(&centered, k, opts)?);
        if dims[k] == dims[k - 1] {
            let depth = k - 1;
            return Ok(DualInvariants { breadth: dims[1] - dims[0], depth, multiplicity: dims[depth], dims, residual });
        }
    }
    Err(DualError::NotStabilized { kmax, dims })
}

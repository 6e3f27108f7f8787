//! Operators, growth bounds and radii for simple multiple roots.
//!
//! Conventions: `⟨a, b⟩ = Σ a_j · conj(b_j)` and `Π_v z = ⟨z, v⟩ v` for a
//! unit vector `v`, so `Π_v = v vᴴ`.

mod criteria;
mod lemmas;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numlin::{self, CMatrix, KernelFrame, LinalgError};
use crate::poly::{factorial, weighted_frobenius, DerivTensor, Point, PolyError, PolySystem};

pub use criteria::{
    certify_cluster, cluster_criterion, residual_lower_bound_check, separation_bound, CertReport, CertVerdict, ClusterReport, ExactRoot,
    PreconditionMargins, PreconditionReason, ResidualCheck, SeparationReport,
};
pub use lemmas::{lemma2_identity, lemma_suite, Lemma2Report, LemmaReport, LemmaTally};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("operator {which} is numerically singular (sigma_min = {sigma_min:e}, threshold {threshold:e})")]
    SingularOperator { which: OperatorTag, sigma_min: f64, threshold: f64 },
    #[error("x is a regular root (kappa = 0); the multiple-root bounds need kappa >= 1")]
    Regular,
    #[error("x is not a root: residual {residual:e} exceeds res-tol {res_tol:e}")]
    NotARoot { residual: f64, res_tol: f64 },
    #[error("x is not a simple multiple root")]
    NotSimple,
    #[error("system is not square: {equations} equations in {nvars} variables")]
    NotSquare { equations: usize, nvars: usize },
    #[error("||y - x|| = {distance:e} exceeds the ball radius {radius:e}")]
    OutOfBall { distance: f64, radius: f64 },
    #[error("radius {radius:e} must lie in (0, {max:e}]")]
    RadiusOutOfRange { radius: f64, max: f64 },
    #[error("no root of h on (0, 1) for kappa = {kappa}")]
    NoRoot { kappa: usize },
    #[error("gamma override {0} must be a finite number >= 1")]
    BadGammaOverride(f64),
}

/// Which operator a γ bound was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorTag {
    A,
    AmH,
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorTag::A => "A",
            OperatorTag::AmH => "A-H",
        })
    }
}

/// Which defining equation to use for the universal constant `d`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DVariant {
    /// `√(1−d²) − (κ+1)κ d √(1−d²) − κ d² − d`
    #[default]
    Paper,
    /// The same with `κ² d²` in place of `κ d²`.
    Kappa2,
}

impl FromStr for DVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(DVariant::Paper),
            "kappa2" => Ok(DVariant::Kappa2),
            other => Err(format!("unknown d-variant `{other}` (expected `paper` or `kappa2`)")),
        }
    }
}

impl fmt::Display for DVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DVariant::Paper => "paper",
            DVariant::Kappa2 => "kappa2",
        })
    }
}

/// Knobs shared by every certification entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertOptions {
    pub rank_tol: f64,
    pub res_tol: f64,
    pub seed: u64,
    pub d_variant: DVariant,
    /// Externally supplied γ used in place of the internal bound.
    pub gamma_override: Option<f64>,
}

impl Default for CertOptions {
    fn default() -> Self {
        Self { rank_tol: numlin::DEFAULT_RANK_TOL, res_tol: 1e-6, seed: 0, d_variant: DVariant::Paper, gamma_override: None }
    }
}

#[derive(Debug, Clone)]
pub struct CertOperators {
    pub a: CMatrix,
    pub h: CMatrix,
    pub amh: CMatrix,
    pub frame: KernelFrame,
    pub inv_norm_a: f64,
    pub inv_norm_amh: f64,
    pub norm_h: f64,
}

/// `𝒜_α = Df(x) + Σ_i α_i · D²f(x)(v_i, ·) · v_i v_iᴴ`.
pub fn operator_a_alpha(f: &PolySystem, x: &Point, frame: &KernelFrame, alpha: &[Complex64]) -> Result<CMatrix, CertError> {
    if alpha.len() != frame.kappa {
        return Err(PolyError::DimensionMismatch { expected: frame.kappa, found: alpha.len() }.into());
    }
    if alpha.iter().any(|a| a.norm() == 0.0) {
        log::warn!("operator A_alpha with a zero alpha_i; nonsingularity is only claimed for nonzero alpha");
    }
    let mut a = DerivTensor::new(f, x, 1)?.as_matrix();
    if frame.kappa == 0 {
        return Ok(a);
    }
    let d2 = DerivTensor::new(f, x, 2)?;
    for (i, &ai) in alpha.iter().enumerate() {
        let v = frame.kernel_vector(i);
        let m = d2.contract_all_but_last(v.as_slice())?;
        a += (m * &v * v.adjoint()) * ai;
    }
    Ok(a)
}

/// The raw matrix `𝒜` (all `α_i = ½`).
pub fn operator_a_matrix(f: &PolySystem, x: &Point, frame: &KernelFrame) -> Result<CMatrix, CertError> {
    operator_a_alpha(f, x, frame, &vec![Complex64::new(0.5, 0.0); frame.kappa])
}

fn checked_inv_norm(m: &CMatrix, which: OperatorTag, rank_tol: f64) -> Result<f64, CertError> {
    let sigma = numlin::singular_values(m)?;
    let smax = sigma.first().copied().unwrap_or(0.0);
    let smin = sigma.last().copied().unwrap_or(0.0);
    let threshold = numlin::rank_threshold(smax, rank_tol);
    if smin <= threshold {
        return Err(CertError::SingularOperator { which, sigma_min: smin, threshold });
    }
    Ok(1.0 / smin)
}

/// `𝒜`, `ℋ = Df(x)·V₁V₁ᴴ` and `𝒜 − ℋ`, with the norms the bounds use.
pub fn operator_a(f: &PolySystem, x: &Point, frame: &KernelFrame, rank_tol: f64) -> Result<CertOperators, CertError> {
    if !f.is_square() {
        return Err(CertError::NotSquare { equations: f.len(), nvars: f.nvars() });
    }
    let a = operator_a_matrix(f, x, frame)?;
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let h = &df * &frame.v1 * frame.v1.adjoint();
    let amh = &a - &h;
    let inv_norm_a = checked_inv_norm(&a, OperatorTag::A, rank_tol)?;
    let inv_norm_amh = checked_inv_norm(&amh, OperatorTag::AmH, rank_tol)?;
    let norm_h = numlin::op_norm(&h);
    Ok(CertOperators { a, h, amh, frame: frame.clone(), inv_norm_a, inv_norm_amh, norm_h })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaTerm {
    pub k: usize,
    pub bound: f64,
    pub root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaBound {
    pub per_k: Vec<GammaTerm>,
    pub gamma: f64,
    pub operator_used: OperatorTag,
}

/// Upper bound of `max{1, max_k ‖op⁻¹ D^k f(x)/k!‖^{1/(k−1)}}`.
///
/// Each tensor norm is bounded by the Frobenius norm of its expansion, which
/// dominates the spectral norm of every unfolding.
pub fn gamma_bound(f: &PolySystem, x: &Point, ops: &CertOperators, which: OperatorTag) -> Result<GammaBound, CertError> {
    let op = match which {
        OperatorTag::A => &ops.a,
        OperatorTag::AmH => &ops.amh,
    };
    let mut per_k = Vec::new();
    let mut gamma: f64 = 1.0;
    for k in 2..=f.max_degree() as usize {
        let t = DerivTensor::new(f, x, k)?;
        let applied = numlin::solve_matrix(op, &t.as_matrix()).map_err(|e| match e {
            LinalgError::Singular { sigma_min, sigma_max } => {
                CertError::SingularOperator { which, sigma_min, threshold: numlin::SINGULAR_CUTOFF * sigma_max }
            }
            other => other.into(),
        })?;
        let bound = weighted_frobenius(t.indices(), &applied) / factorial(k as u32);
        let root = bound.powf(1.0 / (k as f64 - 1.0));
        gamma = gamma.max(root);
        per_k.push(GammaTerm { k, bound, root });
    }
    Ok(GammaBound { per_k, gamma, operator_used: which })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniversalConstant {
    pub kappa: usize,
    pub variant: DVariant,
    pub d: f64,
    /// `|h(d)|` at the returned point.
    pub residual: f64,
    /// `sin θ = d/γ`, once paired with a γ.
    pub theta_sin: Option<f64>,
}

impl UniversalConstant {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.theta_sin = Some(self.d / gamma);
        self
    }
}

/// The function whose smallest positive root is `d`.
pub fn h_function(kappa: usize, variant: DVariant, d: f64) -> f64 {
    let k = kappa as f64;
    let s = (1.0 - d * d).sqrt();
    let quad = match variant {
        DVariant::Paper => k,
        DVariant::Kappa2 => k * k,
    };
    s - (k + 1.0) * k * d * s - quad * d * d - d
}

/// Smallest positive root of `h` on `(0, 1)`: coarse scan, then bisection.
/// The returned `d` is the left end of the final bracket, so `h(d) ≥ 0`.
pub fn universal_d(kappa: usize, variant: DVariant) -> Result<UniversalConstant, CertError> {
    const STEP: f64 = 1e-3;
    const WIDTH: f64 = 1e-14;
    if kappa == 0 {
        return Err(CertError::Regular);
    }
    let h = |d: f64| h_function(kappa, variant, d);
    let mut lo = 0.0;
    let mut hi = None;
    let mut i = 1;
    while (i as f64) * STEP < 1.0 {
        let t = i as f64 * STEP;
        if h(t) <= 0.0 {
            hi = Some(t);
            break;
        }
        lo = t;
        i += 1;
    }
    let mut hi = hi.ok_or(CertError::NoRoot { kappa })?;
    while hi - lo > WIDTH {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(UniversalConstant { kappa, variant, d: lo, residual: h(lo).abs(), theta_sin: None })
}

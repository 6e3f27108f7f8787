//! One step of kernel-parametrized deflation and the characterization matrix
//! `B = [D²f(v₁,v₁) ⋯ D²f(v_κ,v_κ) | Df·V₂]`.
//!
//! The augmented system is `g(x, λ₂) = [f(x); Df(x)·V·λ]` with `λ = (λ₁, λ₂)`,
//! `λ₁` a fixed seeded unit vector and `λ₂ ∈ C^{n−κ}` new unknowns. One step
//! suffices when `Dg` at `(x, 0)` has full column rank.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{self, CertError};
use crate::numlin::{self, CMatrix, KernelFrame, LinalgError};
use crate::poly::{DerivTensor, Point, PolyError, PolySystem, Polynomial};

const STREAM_LAMBDA: u64 = 0x6c61_6d62;
/// Diagnostic cap on repeated deflation.
pub const MAX_DEFLATIONS: usize = 5;
/// Rank decisions within this factor of the threshold count as borderline.
pub const BORDERLINE_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeflateError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("Df(x) has full rank (kappa = 0); nothing to deflate")]
    Regular,
}

#[derive(Debug, Clone)]
pub struct CharacterizationMatrix {
    pub b: CMatrix,
    pub frame: KernelFrame,
    pub det_abs: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl CharacterizationMatrix {
    pub fn full_rank(&self, rank_tol: f64) -> bool {
        self.sigma_min > numlin::rank_threshold(self.sigma_max, rank_tol)
    }
}

pub fn build_characterization_matrix(f: &PolySystem, x: &Point, frame: &KernelFrame) -> Result<CharacterizationMatrix, DeflateError> {
    if frame.kappa == 0 {
        return Err(DeflateError::Regular);
    }
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let d2 = DerivTensor::new(f, x, 2)?;
    let n = frame.n();
    let mut b = CMatrix::zeros(f.len(), n);
    for j in 0..frame.kappa {
        let col = d2.apply_power(frame.kernel_vector(j).as_slice())?;
        for (i, v) in col.into_iter().enumerate() {
            b[(i, j)] = v;
        }
    }
    b.columns_mut(frame.kappa, n - frame.kappa).copy_from(&(&df * &frame.v2));
    let sigma = numlin::singular_values(&b)?;
    let det_abs = if b.is_square() { b.clone().determinant().norm() } else { 0.0 };
    Ok(CharacterizationMatrix {
        b,
        frame: frame.clone(),
        det_abs,
        sigma_min: sigma.last().copied().unwrap_or(0.0),
        sigma_max: sigma.first().copied().unwrap_or(0.0),
    })
}

#[derive(Debug, Clone)]
pub struct DeflationStep {
    /// `2N` equations in `n + (n − κ)` unknowns.
    pub g: PolySystem,
    /// The point `(x, 0)` of `g`.
    pub point: Point,
    pub lambda1: Vec<Complex64>,
    pub v: CMatrix,
    pub dg: CMatrix,
    pub full_rank: bool,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Seeded unit vector in `C^κ`.
pub fn random_lambda1(kappa: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = numlin::rng_for(seed, STREAM_LAMBDA);
    let v = numlin::gaussian_vector(&mut rng, kappa);
    let norm = v.norm();
    v.iter().map(|z| z / norm).collect()
}

fn fresh_names(existing: &[String], count: usize) -> Vec<String> {
    let mut names = existing.to_vec();
    for j in 1..=count {
        let mut name = format!("lam{j}");
        while names.contains(&name) {
            name.push('_');
        }
        names.push(name);
    }
    names
}

/// `[f; Df·V·λ]` as polynomials in the original variables followed by `λ₂`.
fn augmented_system(f: &PolySystem, frame: &KernelFrame, lambda1: &[Complex64]) -> Result<PolySystem, DeflateError> {
    let n = f.nvars();
    let m = n - frame.kappa;
    let total = n + m;
    let c = &frame.v1 * numlin::CVector::from_column_slice(lambda1);
    // (V·λ)_j = c_j + Σ_b V₂[j, b]·λ₂_b
    let direction: Vec<Polynomial> = (0..n)
        .map(|j| {
            let mut p = Polynomial::constant(total, c[j]);
            for b in 0..m {
                p = &p + &Polynomial::variable(total, n + b).scale(frame.v2[(j, b)]);
            }
            p
        })
        .collect();
    let mut polys: Vec<Polynomial> = f.polys().iter().map(|p| p.extend_vars(m)).collect();
    for p in f.polys() {
        let mut q = Polynomial::zero(total);
        for (j, dir) in direction.iter().enumerate() {
            q = &q + &(&p.partial(j).extend_vars(m) * dir);
        }
        polys.push(q);
    }
    Ok(PolySystem::new(total, fresh_names(f.var_names(), m), polys)?)
}

/// Block assembly of `Dg(x, 0) = [[Df, 0], [D²f(V₁λ₁, ·), Df·V₂]]`.
pub fn deflated_jacobian(f: &PolySystem, x: &Point, frame: &KernelFrame, lambda1: &[Complex64]) -> Result<CMatrix, DeflateError> {
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let d2 = DerivTensor::new(f, x, 2)?;
    let c = &frame.v1 * numlin::CVector::from_column_slice(lambda1);
    let hes = d2.contract_all_but_last(c.as_slice())?;
    let (rows, n) = df.shape();
    let m = n - frame.kappa;
    let mut dg = CMatrix::zeros(2 * rows, n + m);
    dg.view_mut((0, 0), (rows, n)).copy_from(&df);
    dg.view_mut((rows, 0), (rows, n)).copy_from(&hes);
    dg.view_mut((rows, n), (rows, m)).copy_from(&(&df * &frame.v2));
    Ok(dg)
}

fn deflate_with(
    f: &PolySystem,
    x: &Point,
    frame: &KernelFrame,
    lambda1: Vec<Complex64>,
    rank_tol: f64,
) -> Result<DeflationStep, DeflateError> {
    if frame.kappa == 0 {
        return Err(DeflateError::Regular);
    }
    let g = augmented_system(f, frame, &lambda1)?;
    let dg = deflated_jacobian(f, x, frame, &lambda1)?;
    let sigma = numlin::singular_values(&dg)?;
    let rank = numlin::numerical_rank(&sigma, rank_tol);
    let mut coords = x.coords.clone();
    coords.resize(g.nvars(), Complex64::new(0.0, 0.0));
    Ok(DeflationStep {
        g,
        point: Point::new(coords),
        lambda1,
        v: frame.unitary(),
        full_rank: rank == dg.ncols(),
        sigma_min: sigma.last().copied().unwrap_or(0.0),
        sigma_max: sigma.first().copied().unwrap_or(0.0),
        dg,
    })
}

/// One deflation step with a seeded unit `λ₁`.
pub fn deflate_once(f: &PolySystem, x: &Point, frame: &KernelFrame, seed: u64, rank_tol: f64) -> Result<DeflationStep, DeflateError> {
    deflate_with(f, x, frame, random_lambda1(frame.kappa, seed), rank_tol)
}

/// Kernel of a matrix with at least as many rows as columns.
fn column_kernel(a: &CMatrix, tol: f64) -> Result<KernelFrame, DeflateError> {
    if a.is_square() {
        return Ok(numlin::numerical_kernel(a, tol)?);
    }
    let dec = numlin::svd(a)?;
    let n = a.ncols();
    let rank = numlin::numerical_rank(&dec.sigma, tol);
    // a tall matrix has a full n×n right factor
    Ok(KernelFrame {
        kappa: n - rank,
        v1: dec.v.columns(rank, n - rank).into_owned(),
        v2: dec.v.columns(0, rank).into_owned(),
        tol_used: numlin::rank_threshold(dec.sigma.first().copied().unwrap_or(0.0), tol),
        sigma: dec.sigma,
    })
}

/// Number of deflation steps until the Jacobian has full column rank, or
/// `None` beyond [`MAX_DEFLATIONS`]. Diagnostic only.
pub fn deflation_count(f: &PolySystem, x: &Point, seed: u64, rank_tol: f64) -> Result<Option<usize>, DeflateError> {
    let mut sys = f.clone();
    let mut pt = x.clone();
    for step in 0..=MAX_DEFLATIONS {
        let jac = DerivTensor::new(&sys, &pt, 1)?.as_matrix();
        let kernel = column_kernel(&jac, rank_tol)?;
        if kernel.kappa == 0 {
            return Ok(Some(step));
        }
        if step == MAX_DEFLATIONS {
            break;
        }
        let s = seed.wrapping_add(step as u64);
        let frame = numlin::random_orthonormal_kernel_basis(&kernel, s);
        let next = deflate_once(&sys, &pt, &frame, s, rank_tol)?;
        sys = next.g;
        pt = next.point;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub b_full_rank: bool,
    pub dg_full_rank: bool,
    /// `σ_min / threshold` for `B` and `Dg`.
    pub b_margin: f64,
    pub dg_margin: f64,
}

impl TrialOutcome {
    /// Both rank decisions are at least [`BORDERLINE_FACTOR`] away from the threshold.
    pub fn decisive(&self) -> bool {
        let clear = |m: f64| !(1.0 / BORDERLINE_FACTOR..=BORDERLINE_FACTOR).contains(&m);
        clear(self.b_margin) && clear(self.dg_margin)
    }

    pub fn agree(&self) -> bool {
        self.b_full_rank == self.dg_full_rank
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub kappa: usize,
    pub trials: usize,
    pub agreements: usize,
    pub b_full_rank: usize,
    pub dg_full_rank: usize,
    pub borderline: usize,
    /// Disagreements on decisive trials.
    pub decisive_disagreements: usize,
    pub outcomes: Vec<TrialOutcome>,
}

/// Compares the rank verdicts of `B` and `Dg` over seeded frames and `λ₁`.
/// Vacuous (zero trials recorded) when `κ = 0`.
pub fn one_step_equivalence_check(
    f: &PolySystem,
    x: &Point,
    trials: usize,
    seed: u64,
    rank_tol: f64,
) -> Result<EquivalenceReport, DeflateError> {
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let kernel = column_kernel(&df, rank_tol)?;
    let mut outcomes = Vec::new();
    if kernel.kappa > 0 {
        for t in 0..trials {
            let s = seed.wrapping_add(t as u64);
            let frame = numlin::random_orthonormal_kernel_basis(&kernel, s);
            let b = build_characterization_matrix(f, x, &frame)?;
            let step = deflate_once(f, x, &frame, s, rank_tol)?;
            let b_thr = numlin::rank_threshold(b.sigma_max, rank_tol);
            let dg_thr = numlin::rank_threshold(step.sigma_max, rank_tol);
            let outcome = TrialOutcome {
                trial: t,
                b_full_rank: b.full_rank(rank_tol),
                dg_full_rank: step.full_rank,
                b_margin: b.sigma_min / b_thr,
                dg_margin: step.sigma_min / dg_thr,
            };
            if !outcome.decisive() {
                log::info!("borderline trial {t}: B margin {:e}, Dg margin {:e}", outcome.b_margin, outcome.dg_margin);
            }
            outcomes.push(outcome);
        }
    }
    Ok(EquivalenceReport {
        kappa: kernel.kappa,
        trials: outcomes.len(),
        agreements: outcomes.iter().filter(|o| o.agree()).count(),
        b_full_rank: outcomes.iter().filter(|o| o.b_full_rank).count(),
        dg_full_rank: outcomes.iter().filter(|o| o.dg_full_rank).count(),
        borderline: outcomes.iter().filter(|o| !o.decisive()).count(),
        decisive_disagreements: outcomes.iter().filter(|o| o.decisive() && !o.agree()).count(),
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Regular,
    SimpleMultiple,
    NotSimple,
    NotARoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub verdict: Verdict,
    pub kappa: usize,
    pub residual: f64,
    /// `σ_min(𝒜)` and its rank threshold, when `κ ≥ 1`.
    pub sigma_min_a: Option<f64>,
    pub threshold_a: Option<f64>,
    /// Isolation of `x` is assumed, not verified.
    pub isolation_assumed: bool,
}

/// Classifies `x` by the invertibility of `𝒜` for a seeded kernel basis.
pub fn is_simple_multiple(f: &PolySystem, x: &Point, seed: u64, rank_tol: f64, res_tol: f64) -> Result<SimplicityReport, DeflateError> {
    let residual = f.residual(x)?;
    let mut report =
        SimplicityReport { verdict: Verdict::NotARoot, kappa: 0, residual, sigma_min_a: None, threshold_a: None, isolation_assumed: true };
    if residual > res_tol {
        return Ok(report);
    }
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let kernel = column_kernel(&df, rank_tol)?;
    report.kappa = kernel.kappa;
    if kernel.kappa == 0 {
        report.verdict = Verdict::Regular;
        return Ok(report);
    }
    let frame = numlin::random_orthonormal_kernel_basis(&kernel, seed);
    let a = certify::operator_a_matrix(f, x, &frame).map_err(|e| match e {
        CertError::Poly(p) => DeflateError::Poly(p),
        CertError::Linalg(l) => DeflateError::Linalg(l),
        other => unreachable!("operator assembly cannot fail with {other}"),
    })?;
    let sigma = numlin::singular_values(&a)?;
    let smin = sigma.last().copied().unwrap_or(0.0);
    let thr = numlin::rank_threshold(sigma.first().copied().unwrap_or(0.0), rank_tol);
    report.sigma_min_a = Some(smin);
    report.threshold_a = Some(thr);
    report.verdict = if a.is_square() && smin > thr { Verdict::SimpleMultiple } else { Verdict::NotSimple };
    Ok(report)
}

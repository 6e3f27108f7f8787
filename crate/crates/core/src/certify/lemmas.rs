use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{operator_a_alpha, CertError, CertOptions, ExactRoot};
use crate::numlin::{self, CVector};
use crate::poly::{Point, PolySystem};

const STREAM_LEMMA: u64 = 0x6c65_6d6d;
const STREAM_LEMMA2: u64 = 0x6c32_6964;
/// Slack for floating-point rounding in the inequality checks.
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaTally {
    pub checked: usize,
    pub violations: usize,
    /// `min (‖𝒜⁻¹f(y)‖ − rhs)` over checked samples.
    pub worst_margin: f64,
}

impl LemmaTally {
    fn new() -> Self {
        Self { checked: 0, violations: 0, worst_margin: f64::INFINITY }
    }

    fn record(&mut self, q: f64, rhs: f64) {
        self.checked += 1;
        let margin = q - rhs;
        if margin < -SLACK * rhs.abs().max(q).max(f64::MIN_POSITIVE) {
            self.violations += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub samples: usize,
    pub gamma: f64,
    pub d: f64,
    pub sin_theta: f64,
    /// Large-angle bound (`φ ≥ θ`).
    pub lemma1: LemmaTally,
    /// Bound in terms of `min |α_i|`.
    pub lemma3: LemmaTally,
    pub lemma4_large_angle: LemmaTally,
    pub lemma4_small_angle: LemmaTally,
    /// `max |cos²φ − Σ cos²φ_i|`.
    pub pythagoras_max_error: f64,
    /// Draws discarded because some `α_i` vanished.
    pub resampled_zero_alpha: usize,
}

impl LemmaReport {
    pub fn total_violations(&self) -> usize {
        self.lemma1.violations + self.lemma3.violations + self.lemma4_large_angle.violations + self.lemma4_small_angle.violations
    }
}

/// `arccos(|⟨a, b⟩| / (‖a‖‖b‖))`, with `π/2` for a zero argument.
pub fn projective_angle(a: &CVector, b: &CVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    (b.dotc(a).norm() / denom).clamp(0.0, 1.0).acos()
}

/// Samples `w` with `γ‖w‖ ≤ ½` around an exact simple multiple root and
/// checks the angle-split lower bounds on `‖𝒜⁻¹ f(x + w)‖`.
///
/// Odd draws lean towards the kernel so the small-angle case is exercised.
pub fn lemma_suite(f: &PolySystem, x: &Point, samples: usize, opts: &CertOptions) -> Result<LemmaReport, CertError> {
    let ctx = ExactRoot::new(f, x, opts)?;
    let n = f.nvars();
    let kappa = ctx.kappa();
    let gamma = ctx.gamma();
    let d = ctx.d.d;
    let sin_theta = d / gamma;
    let theta = sin_theta.asin();
    let kf = kappa as f64;
    let frame = &ctx.ops.frame;

    let mut rng = numlin::rng_for(opts.seed, STREAM_LEMMA);
    let mut report = LemmaReport {
        samples,
        gamma,
        d,
        sin_theta,
        lemma1: LemmaTally::new(),
        lemma3: LemmaTally::new(),
        lemma4_large_angle: LemmaTally::new(),
        lemma4_small_angle: LemmaTally::new(),
        pythagoras_max_error: 0.0,
        resampled_zero_alpha: 0,
    };

    let mut s = 0;
    while s < samples {
        let dir = if s % 2 == 0 {
            numlin::gaussian_vector(&mut rng, n)
        } else {
            let c = numlin::gaussian_vector(&mut rng, kappa);
            let core = &frame.v1 * &c;
            let noise = numlin::gaussian_vector(&mut rng, n);
            let eps = rng.random_range(0.0..1.0) * 2.0 * sin_theta * core.norm() / noise.norm().max(f64::MIN_POSITIVE);
            core + noise * Complex64::new(eps, 0.0)
        };
        let len = rng.random_range(0.0..=1.0) * 0.5 / gamma;
        let w = dir.clone() * Complex64::new(len / dir.norm(), 0.0);
        let wn = w.norm();

        let alpha: Vec<Complex64> = (0..kappa).map(|i| frame.v1.column(i).dotc(&w)).collect();
        if alpha.iter().any(|a| a.norm() <= SLACK * wn) || wn == 0.0 {
            report.resampled_zero_alpha += 1;
            continue;
        }
        s += 1;

        let kernel_part = &frame.v1 * CVector::from_vec(alpha.clone());
        let phi = projective_angle(&kernel_part, &w);
        let phis: Vec<f64> = (0..kappa).map(|i| projective_angle(&frame.kernel_vector(i), &w)).collect();
        let cos2: f64 = phis.iter().map(|p| p.cos().powi(2)).sum();
        report.pythagoras_max_error = report.pythagoras_max_error.max((phi.cos().powi(2) - cos2).abs());

        let y = x + w.as_slice();
        let fy = f.evaluate(&y)?;
        let q = CVector::from_vec(numlin::solve(&ctx.ops.a, &fy)?).norm();

        let min_alpha = alpha.iter().map(|a| a.norm()).fold(f64::INFINITY, f64::min);
        let sum_sc: f64 = phis.iter().map(|p| p.sin() * p.cos()).sum();
        let sum_s2: f64 = phis.iter().map(|p| p.sin().powi(2)).sum();
        let rhs3 = wn * min_alpha - (kf + 1.0) * gamma * wn * wn * sum_sc - gamma * wn * wn * sum_s2 - 2.0 * gamma * gamma * wn.powi(3);
        report.lemma3.record(q, rhs3);

        let gap = sin_theta / (2.0 * gamma) - wn;
        if phi >= theta {
            report.lemma1.record(q, wn * sin_theta - 2.0 * gamma * wn * wn);
            report.lemma4_large_angle.record(q, 2.0 * gamma * wn * gap);
        }
        if phi <= theta {
            report.lemma4_small_angle.record(q, 2.0 * gamma * gamma * wn * wn * gap);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Report {
    pub draws: usize,
    pub kappa: usize,
    pub nvars: usize,
    /// Worst relative gap to `max{1, max_i |β_i/α_i|}`.
    pub max_rel_error: f64,
    /// Draws whose gap exceeds the tolerance.
    pub failures: usize,
    /// Worst relative gap to `max_i |β_i/α_i|`, with the `1` kept only when `κ < n`.
    pub corrected_max_rel_error: f64,
    pub corrected_failures: usize,
}

/// Compares `‖𝒜_α⁻¹ 𝒜_β‖` with its closed form on random nonzero `α, β`.
pub fn lemma2_identity(f: &PolySystem, x: &Point, draws: usize, rel_tol: f64, opts: &CertOptions) -> Result<Lemma2Report, CertError> {
    let ctx = ExactRoot::new(f, x, opts)?;
    let frame = &ctx.ops.frame;
    let kappa = frame.kappa;
    let n = f.nvars();
    let mut rng = numlin::rng_for(opts.seed, STREAM_LEMMA2);
    let mut report =
        Lemma2Report { draws, kappa, nvars: n, max_rel_error: 0.0, failures: 0, corrected_max_rel_error: 0.0, corrected_failures: 0 };
    for _ in 0..draws {
        let alpha: Vec<Complex64> = numlin::gaussian_vector(&mut rng, kappa).iter().copied().collect();
        let beta: Vec<Complex64> = numlin::gaussian_vector(&mut rng, kappa).iter().copied().collect();
        let a_alpha = operator_a_alpha(f, x, frame, &alpha)?;
        let a_beta = operator_a_alpha(f, x, frame, &beta)?;
        let actual = numlin::op_norm(&numlin::solve_matrix(&a_alpha, &a_beta)?);
        let ratio = alpha.iter().zip(&beta).map(|(a, b)| (b / a).norm()).fold(0.0, f64::max);
        let stated = ratio.max(1.0);
        let corrected = if kappa < n { stated } else { ratio };
        let err = (actual - stated).abs() / stated;
        let cerr = (actual - corrected).abs() / corrected;
        report.max_rel_error = report.max_rel_error.max(err);
        report.corrected_max_rel_error = report.corrected_max_rel_error.max(cerr);
        report.failures += usize::from(err > rel_tol);
        report.corrected_failures += usize::from(cerr > rel_tol);
    }
    Ok(report)
}

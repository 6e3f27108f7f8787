use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    gamma_bound, operator_a, universal_d, CertError, CertOperators, CertOptions, DVariant, GammaBound, OperatorTag, UniversalConstant,
};
use crate::numlin::{self, CMatrix, KernelFrame};
use crate::poly::{DerivTensor, Point, PolySystem};

fn check_gamma_override(g: Option<f64>) -> Result<Option<f64>, CertError> {
    match g {
        Some(v) if !(v.is_finite() && v >= 1.0) => Err(CertError::BadGammaOverride(v)),
        other => Ok(other),
    }
}

/// Kernel of `Df(x)` mixed by the seeded unitary; `κ = 0` yields an empty `V1`.
pub(crate) fn seeded_frame(f: &PolySystem, x: &Point, opts: &CertOptions) -> Result<(CMatrix, KernelFrame), CertError> {
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let kernel = numlin::numerical_kernel(&df, opts.rank_tol)?;
    Ok((df, numlin::random_orthonormal_kernel_basis(&kernel, opts.seed)))
}

/// Everything the exact-root bounds share: operators, γ and `d`.
#[derive(Debug, Clone)]
pub struct ExactRoot {
    pub ops: CertOperators,
    /// Internal bound built on `𝒜`.
    pub gamma_bound: GammaBound,
    pub gamma_override: Option<f64>,
    pub d: UniversalConstant,
    pub residual: f64,
}

impl ExactRoot {
    pub fn new(f: &PolySystem, x: &Point, opts: &CertOptions) -> Result<Self, CertError> {
        if !f.is_square() {
            return Err(CertError::NotSquare { equations: f.len(), nvars: f.nvars() });
        }
        let gamma_override = check_gamma_override(opts.gamma_override)?;
        let residual = f.residual(x)?;
        if residual > opts.res_tol {
            return Err(CertError::NotARoot { residual, res_tol: opts.res_tol });
        }
        let (_, frame) = seeded_frame(f, x, opts)?;
        if frame.kappa == 0 {
            return Err(CertError::Regular);
        }
        let ops = operator_a(f, x, &frame, opts.rank_tol)?;
        let gamma_bound = gamma_bound(f, x, &ops, OperatorTag::A)?;
        let gamma = gamma_override.unwrap_or(gamma_bound.gamma);
        let d = universal_d(frame.kappa, opts.d_variant)?.with_gamma(gamma);
        Ok(Self { ops, gamma_bound, gamma_override, d, residual })
    }

    pub fn kappa(&self) -> usize {
        self.ops.frame.kappa
    }

    /// The γ in force: the override when given, else the internal bound.
    pub fn gamma(&self) -> f64 {
        self.gamma_override.unwrap_or(self.gamma_bound.gamma)
    }

    /// `d/(2γ²)`.
    pub fn separation_radius(&self) -> f64 {
        self.d.d / (2.0 * self.gamma().powi(2))
    }

    /// `d/(4γ²)`.
    pub fn ball_radius(&self) -> f64 {
        self.d.d / (4.0 * self.gamma().powi(2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub kappa: usize,
    pub gamma: f64,
    pub gamma_internal: f64,
    pub gamma_overridden: bool,
    pub d: f64,
    pub radius: f64,
    pub inv_norm_a: f64,
}

/// No other root lies within the returned radius of the simple multiple root `x`.
pub fn separation_bound(f: &PolySystem, x: &Point, opts: &CertOptions) -> Result<SeparationReport, CertError> {
    let ctx = ExactRoot::new(f, x, opts).map_err(|e| match e {
        CertError::SingularOperator { .. } => CertError::NotSimple,
        other => other,
    })?;
    Ok(SeparationReport {
        kappa: ctx.kappa(),
        gamma: ctx.gamma(),
        gamma_internal: ctx.gamma_bound.gamma,
        gamma_overridden: ctx.gamma_override.is_some(),
        d: ctx.d.d,
        radius: ctx.separation_radius(),
        inv_norm_a: ctx.ops.inv_norm_a,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualCheck {
    pub holds: bool,
    /// `‖f(y)‖`
    pub lhs: f64,
    /// `d‖y−x‖²/(2‖𝒜⁻¹‖)`
    pub rhs: f64,
    pub distance: f64,
}

/// Residual growth away from an exact simple multiple root, for `y` in the
/// ball of radius `d/(4γ²)`.
pub fn residual_lower_bound_check(f: &PolySystem, x: &Point, y: &Point, ctx: &ExactRoot) -> Result<ResidualCheck, CertError> {
    f.check_point(y)?;
    f.check_point(x)?;
    let w: Vec<Complex64> = y.coords.iter().zip(&x.coords).map(|(a, b)| a - b).collect();
    let distance = crate::poly::vec_norm(&w);
    let radius = ctx.ball_radius();
    if distance > radius * (1.0 + 1e-12) {
        return Err(CertError::OutOfBall { distance, radius });
    }
    let lhs = f.residual(y)?;
    let rhs = ctx.d.d * distance * distance / (2.0 * ctx.ops.inv_norm_a);
    Ok(ResidualCheck { holds: lhs >= rhs, lhs, rhs, distance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub certified: bool,
    pub radius: f64,
    /// Upper bound of `max_{‖y−x‖≤R} ‖f(y) − g(y)‖`.
    pub dr_bound: f64,
    /// `d R²/(2‖𝒜⁻¹‖)`
    pub threshold: f64,
    /// `μ` when supplied, else `2^κ`.
    pub zero_count: u64,
    pub zero_count_exact: bool,
}

/// Zero count of a perturbation `g` of `f` inside `B(x, R)`.
pub fn cluster_criterion(
    f: &PolySystem,
    g: &PolySystem,
    x: &Point,
    radius: f64,
    ctx: &ExactRoot,
    multiplicity: Option<usize>,
) -> Result<ClusterReport, CertError> {
    let max = ctx.ball_radius();
    if !(radius > 0.0 && radius <= max) {
        return Err(CertError::RadiusOutOfRange { radius, max });
    }
    let dr_bound = f.difference(g)?.taylor_norm_bound(x, radius)?;
    let threshold = ctx.d.d * radius * radius / (2.0 * ctx.ops.inv_norm_a);
    let (zero_count, zero_count_exact) = match multiplicity {
        Some(mu) => (mu as u64, true),
        None => (1u64 << ctx.kappa(), false),
    };
    Ok(ClusterReport { certified: dr_bound < threshold, radius, dr_bound, threshold, zero_count, zero_count_exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertVerdict {
    Certified,
    NotCertified,
    PreconditionFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PreconditionReason {
    /// `Df(x)` has full numerical rank at a root.
    Regular,
    /// `Df(x)·V₂` lost rank.
    RankDeficient,
    /// Some `D²f(x)(v_i, v_i)` lies in the image of `Df(x)·V₂`.
    HessianInImage,
    /// `𝒜` or `𝒜 − ℋ` is numerically singular.
    SingularOperator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionMargins {
    /// Smallest singular value of `Df(x)·V₂`; absent when `κ = n`.
    pub sigma_df_v2: Option<f64>,
    pub sigma_threshold: f64,
    /// Distance of each `D²f(x)(v_i, v_i)` to `im Df(x)·V₂`.
    pub ls_residuals: Vec<f64>,
    pub ls_thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub verdict: CertVerdict,
    pub reason: Option<PreconditionReason>,
    pub kappa: usize,
    /// `‖f(x)‖`
    pub residual: f64,
    /// The γ used in the inequality.
    pub gamma: Option<f64>,
    pub gamma_overridden: bool,
    /// Internal bound built on `𝒜 − ℋ`.
    pub gamma_bound: Option<GammaBound>,
    pub d: Option<f64>,
    pub d_variant: DVariant,
    pub radius_separation: Option<f64>,
    pub radius_cluster: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub norm_h: Option<f64>,
    pub inv_norm_amh: Option<f64>,
    /// `2^κ`, the zero count a Certified verdict guarantees.
    pub zero_count_lower_bound: Option<u64>,
    pub margins: Option<PreconditionMargins>,
    pub seed: u64,
    pub rank_tol: f64,
}

impl CertReport {
    fn empty(kappa: usize, residual: f64, opts: &CertOptions) -> Self {
        Self {
            verdict: CertVerdict::PreconditionFailed,
            reason: None,
            kappa,
            residual,
            gamma: None,
            gamma_overridden: opts.gamma_override.is_some(),
            gamma_bound: None,
            d: None,
            d_variant: opts.d_variant,
            radius_separation: None,
            radius_cluster: None,
            lhs: None,
            rhs: None,
            norm_h: None,
            inv_norm_amh: None,
            zero_count_lower_bound: None,
            margins: None,
            seed: opts.seed,
            rank_tol: opts.rank_tol,
        }
    }
}

/// Threshold on the distance of `D²f(x)(v_i, v_i)` to `im Df(x)·V₂`, relative to its norm.
pub const LS_REL_TOL: f64 = 1e-8;

fn precondition_margins(
    f: &PolySystem,
    x: &Point,
    df: &CMatrix,
    frame: &KernelFrame,
    rank_tol: f64,
) -> Result<PreconditionMargins, CertError> {
    let dfv2 = df * &frame.v2;
    let smax_df = numlin::singular_values(df)?.first().copied().unwrap_or(0.0);
    let sigma_df_v2 = numlin::singular_values(&dfv2)?.last().copied();
    let d2 = DerivTensor::new(f, x, 2)?;
    let mut ls_residuals = Vec::with_capacity(frame.kappa);
    let mut ls_thresholds = Vec::with_capacity(frame.kappa);
    for i in 0..frame.kappa {
        let v = frame.kernel_vector(i);
        let b = d2.apply_power(v.as_slice())?;
        ls_residuals.push(numlin::least_squares_residual(&dfv2, &b)?);
        ls_thresholds.push(LS_REL_TOL * crate::poly::vec_norm(&b));
    }
    Ok(PreconditionMargins { sigma_df_v2, sigma_threshold: numlin::rank_threshold(smax_df, rank_tol), ls_residuals, ls_thresholds })
}

/// Cluster certification at an approximate root: when the verdict is
/// Certified, `f` has at least `2^κ` zeros (with multiplicity) in
/// `B(x, d/(4γ²))`.
pub fn certify_cluster(f: &PolySystem, x: &Point, opts: &CertOptions) -> Result<CertReport, CertError> {
    if !f.is_square() {
        return Err(CertError::NotSquare { equations: f.len(), nvars: f.nvars() });
    }
    let gamma_override = check_gamma_override(opts.gamma_override)?;
    let residual = f.residual(x)?;
    let (df, frame) = seeded_frame(f, x, opts)?;
    let kappa = frame.kappa;
    let mut report = CertReport::empty(kappa, residual, opts);
    if kappa == 0 {
        if residual <= opts.res_tol {
            report.reason = Some(PreconditionReason::Regular);
        } else {
            // no kernel to build operators on: the inequality reduces to ‖f(x)‖ < 0
            report.verdict = CertVerdict::NotCertified;
            report.lhs = Some(residual);
            report.rhs = Some(0.0);
        }
        return Ok(report);
    }
    report.zero_count_lower_bound = Some(1u64 << kappa.min(63));

    let margins = precondition_margins(f, x, &df, &frame, opts.rank_tol)?;
    let rank_ok = margins.sigma_df_v2.is_none_or(|s| s > margins.sigma_threshold);
    let image_ok = margins.ls_residuals.iter().zip(&margins.ls_thresholds).all(|(r, t)| r > t);
    report.margins = Some(margins);
    if !rank_ok {
        report.reason = Some(PreconditionReason::RankDeficient);
        return Ok(report);
    }
    if !image_ok {
        report.reason = Some(PreconditionReason::HessianInImage);
        return Ok(report);
    }

    let ops = match operator_a(f, x, &frame, opts.rank_tol) {
        Ok(ops) => ops,
        Err(CertError::SingularOperator { .. }) => {
            report.reason = Some(PreconditionReason::SingularOperator);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let bound = match gamma_bound(f, x, &ops, OperatorTag::AmH) {
        Ok(b) => b,
        Err(CertError::SingularOperator { .. }) => {
            report.reason = Some(PreconditionReason::SingularOperator);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let gamma = gamma_override.unwrap_or(bound.gamma);
    let d = universal_d(kappa, opts.d_variant)?.d;
    let g2 = gamma * gamma;
    let lhs = residual + ops.norm_h * d / (4.0 * g2);
    let rhs = d.powi(3) / (32.0 * g2 * g2 * ops.inv_norm_amh);

    report.verdict = if lhs < rhs { CertVerdict::Certified } else { CertVerdict::NotCertified };
    report.gamma = Some(gamma);
    report.gamma_bound = Some(bound);
    report.d = Some(d);
    report.radius_separation = Some(d / (2.0 * g2));
    report.radius_cluster = Some(d / (4.0 * g2));
    report.lhs = Some(lhs);
    report.rhs = Some(rhs);
    report.norm_h = Some(ops.norm_h);
    report.inv_norm_amh = Some(ops.inv_norm_amh);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::parse_system;
    use rand::Rng;

    fn cyclic3() -> PolySystem {
        parse_system("vars x,y,z; x^3 - y*z; y^3 - x*z; z^3 - x*y").unwrap()
    }

    fn cube_diffs() -> PolySystem {
        parse_system(
            "vars x,y,z;
             x^3 - 3*x^2*y + 3*x*y^2 - y^3 - z^2;
             z^3 - 3*z^2*x + 3*z*x^2 - x^3 - y^2;
             y^3 - 3*y^2*z + 3*y*z^2 - z^3 - x^2",
        )
        .unwrap()
    }

    fn t1() -> Point {
        Point::new(vec![Complex64::new(-7.5e-20, -2.7e-20); 3])
    }

    #[test]
    fn separation_with_pinned_gamma() {
        let opts = CertOptions { gamma_override: Some(11.25), ..Default::default() };
        let r = separation_bound(&cube_diffs(), &Point::origin(3), &opts).unwrap();
        assert_eq!(r.kappa, 3);
        assert!((r.radius - 0.0003).abs() <= 0.1 * 0.0003, "radius {}", r.radius);
        assert!(r.gamma_internal.is_finite());
    }

    #[test]
    fn separation_rejects_non_simple() {
        let f = parse_system("vars x,y; x + y^2; y^3").unwrap();
        assert_eq!(separation_bound(&f, &Point::origin(2), &CertOptions::default()), Err(CertError::NotSimple));
        let g = parse_system("vars x,y; x - 1; y - 1").unwrap();
        assert_eq!(separation_bound(&g, &Point::from_real(&[1.0, 1.0]), &CertOptions::default()), Err(CertError::Regular));
    }

    #[test]
    fn bad_override_is_rejected() {
        let opts = CertOptions { gamma_override: Some(0.5), ..Default::default() };
        assert_eq!(separation_bound(&cyclic3(), &Point::origin(3), &opts), Err(CertError::BadGammaOverride(0.5)));
    }

    #[test]
    fn residual_bound_inside_ball() {
        let f = cyclic3();
        let x = Point::origin(3);
        let ctx = ExactRoot::new(&f, &x, &CertOptions::default()).unwrap();
        let same = residual_lower_bound_check(&f, &x, &x, &ctx).unwrap();
        assert!(same.holds && same.lhs == 0.0 && same.rhs == 0.0);
        let mut rng = numlin::rng_for(3, 0);
        for _ in 0..100 {
            let w = numlin::gaussian_vector(&mut rng, 3);
            let w = w.clone() * Complex64::new(1e-5 / w.norm(), 0.0);
            let y = &x + w.as_slice();
            assert!(residual_lower_bound_check(&f, &x, &y, &ctx).unwrap().holds);
        }
        let far = Point::from_real(&[1.0, 0.0, 0.0]);
        assert!(matches!(residual_lower_bound_check(&f, &x, &far, &ctx), Err(CertError::OutOfBall { .. })));
    }

    #[test]
    fn cluster_identity_and_range() {
        let f = cyclic3();
        let x = Point::origin(3);
        let ctx = ExactRoot::new(&f, &x, &CertOptions::default()).unwrap();
        let r = ctx.ball_radius();
        let rep = cluster_criterion(&f, &f, &x, r, &ctx, Some(11)).unwrap();
        assert!(rep.certified && rep.dr_bound == 0.0);
        assert_eq!((rep.zero_count, rep.zero_count_exact), (11, true));
        assert!(matches!(cluster_criterion(&f, &f, &x, 2.0 * r, &ctx, None), Err(CertError::RadiusOutOfRange { .. })));
    }

    #[test]
    fn cluster_switches_at_threshold() {
        let f = cyclic3();
        let x = Point::origin(3);
        let ctx = ExactRoot::new(&f, &x, &CertOptions::default()).unwrap();
        let r = ctx.ball_radius();
        let perturbed = |eps: f64| {
            let mut polys = f.polys().to_vec();
            polys[0].add_term(vec![0, 0, 0], Complex64::new(eps, 0.0));
            PolySystem::new(3, f.var_names().to_vec(), polys).unwrap()
        };
        let thr = cluster_criterion(&f, &f, &x, r, &ctx, None).unwrap().threshold;
        assert!(cluster_criterion(&f, &perturbed(0.5 * thr), &x, r, &ctx, None).unwrap().certified);
        assert!(!cluster_criterion(&f, &perturbed(1.5 * thr), &x, r, &ctx, None).unwrap().certified);
    }

    #[test]
    fn certify_cube_diffs_cluster() {
        let rep = certify_cluster(&cube_diffs(), &t1(), &CertOptions::default()).unwrap();
        assert_eq!(rep.verdict, CertVerdict::Certified, "{rep:?}");
        assert_eq!(rep.kappa, 3);
        assert_eq!(rep.zero_count_lower_bound, Some(8));
        assert!(rep.lhs.unwrap() < rep.rhs.unwrap());
    }

    #[test]
    fn certify_regular_and_far() {
        let g = parse_system("vars x,y; x - 1; y - 1").unwrap();
        let rep = certify_cluster(&g, &Point::from_real(&[1.0, 1.0]), &CertOptions::default()).unwrap();
        assert_eq!((rep.verdict, rep.reason), (CertVerdict::PreconditionFailed, Some(PreconditionReason::Regular)));
        let far = certify_cluster(&cube_diffs(), &Point::from_real(&[1.0, 2.0, 3.0]), &CertOptions::default()).unwrap();
        assert_eq!(far.verdict, CertVerdict::NotCertified);
        assert!(far.lhs.unwrap() >= far.rhs.unwrap());
    }

    #[test]
    fn inflating_gamma_never_helps() {
        // γ⁴·lhs grows with γ while γ⁴·rhs is fixed
        let mut shifted = cube_diffs().polys().to_vec();
        shifted[0].add_term(vec![0, 0, 0], Complex64::new(1e-3, 0.0));
        let shifted = PolySystem::new(3, cube_diffs().var_names().to_vec(), shifted).unwrap();
        let mut rng = numlin::rng_for(1, 0);
        for (f, x) in [(cube_diffs(), t1()), (shifted, Point::origin(3))] {
            let base = certify_cluster(&f, &x, &CertOptions::default()).unwrap();
            let g0 = base.gamma.unwrap();
            let scaled = |r: &CertReport| (r.lhs.unwrap() * r.gamma.unwrap().powi(4), r.rhs.unwrap() * r.gamma.unwrap().powi(4));
            let (l0, r0) = scaled(&base);
            for _ in 0..5 {
                let g = g0 * rng.random_range(1.0..50.0);
                let rep = certify_cluster(&f, &x, &CertOptions { gamma_override: Some(g), ..Default::default() }).unwrap();
                let (l, r) = scaled(&rep);
                assert!(l >= l0 * (1.0 - 1e-12) && (r - r0).abs() <= 1e-12 * r0);
                assert!(rep.verdict != CertVerdict::Certified || base.verdict == CertVerdict::Certified);
            }
        }
    }

    #[test]
    fn hessian_in_image_fails_precondition() {
        // kernel e2; D²f(e2, e2) = (2, 2) = 2·Df(x)e1
        let f = parse_system("vars x,y; x + y^2; x + y^2").unwrap();
        let rep = certify_cluster(&f, &Point::origin(2), &CertOptions::default()).unwrap();
        assert_eq!(rep.reason, Some(PreconditionReason::HessianInImage));
    }
}

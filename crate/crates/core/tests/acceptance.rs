//! Acceptance criteria, one PASS/FAIL line each.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{case_paths, constructed_system, load_case, random_point, random_system, MULTIPLE_ROOT_CASES, SIMPLE_MULTIPLE_CASES};
use rand::Rng;
use singcert::certify::{
    h_function, lemma2_identity, lemma_suite, operator_a_matrix, residual_lower_bound_check, universal_d, CertOptions, CertVerdict,
    DVariant, ExactRoot,
};
use singcert::commands::{cmd_certify, cmd_separation, ReportBody, RunConfig};
use singcert::deflate::one_step_equivalence_check;
use singcert::dualspace::{dual_invariants, DualOptions};
use singcert::numlin::{self, CMatrix, KernelFrame};
use singcert::poly::{parse_system, DerivTensor, Point, PolySystem};
use singcert::Complex64;

const RANK_TOL: f64 = 1e-8;
const GAMMA_OVERRIDE: f64 = 11.25;

struct Board {
    failed: usize,
    total: usize,
}

impl Board {
    fn line(&mut self, id: &str, pass: bool, detail: String) {
        self.total += 1;
        if !pass {
            self.failed += 1;
        }
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_1(b: &mut Board) {
    let (u, t) = timed(|| universal_d(1, DVariant::Paper).unwrap());
    let h = h_function(1, DVariant::Paper, u.d);
    b.line(
        "1 universal constant",
        (0.2975..=0.2977).contains(&u.d) && h.abs() <= 1e-12 && t < Duration::from_millis(1),
        format!("d(1) = {:.10}, |h(d)| = {:.2e}, {:.3} ms", u.d, h.abs(), t.as_secs_f64() * 1e3),
    );
}

fn criterion_2(b: &mut Board) {
    let opts = DualOptions::default();
    let limit = Duration::from_secs(10);
    let mut run = |id: &str, f: &PolySystem, x: &Point, check: &dyn Fn(usize, usize, usize) -> bool, want: &str| {
        let (inv, t) = timed(|| dual_invariants(f, x, 12, &opts).unwrap());
        b.line(
            id,
            check(inv.breadth, inv.depth, inv.multiplicity) && t < limit,
            format!("(κ, ρ, μ) = ({}, {}, {}), want {want}, {:.2} s", inv.breadth, inv.depth, inv.multiplicity, t.as_secs_f64()),
        );
    };
    let (f, x) = load_case("cyclic3");
    run("2 dual space, cubic cyclic system", &f, &x, &|k, r, m| (k, r, m) == (3, 4, 11), "(3, 4, 11)");
    let (f, x) = load_case("cube_diffs_origin");
    run("2 dual space, three-variable cubic example", &f, &x, &|k, _, m| (k, m) == (3, 8), "(3, ·, 8)");
    for n in [3u32, 4] {
        let f = parse_system(&format!("vars x,y,z; x^{n} - y*z; y^{n} - x*z; z^{n} - x*y")).unwrap();
        let mu = (2 + 3 * n) as usize;
        run(&format!("2 dual space, power family n = {n}"), &f, &Point::origin(3), &move |_, _, m| m == mu, &format!("μ = {mu}"));
    }
}

fn criterion_3(b: &mut Board) {
    let mut exceptions = Vec::new();
    for name in MULTIPLE_ROOT_CASES {
        let (f, x) = load_case(name);
        let inv = dual_invariants(&f, &x, 12, &DualOptions::default()).unwrap();
        if inv.breadth == 0 || inv.multiplicity < 1 << inv.breadth {
            exceptions.push(format!("{name} (κ {}, μ {})", inv.breadth, inv.multiplicity));
        }
    }
    b.line(
        "3 multiplicity lower bound",
        exceptions.is_empty(),
        format!("{} cases, exceptions: {:?}", MULTIPLE_ROOT_CASES.len(), exceptions),
    );
}

fn real_frame(cols: &[[f64; 3]]) -> KernelFrame {
    let data: Vec<Complex64> = cols.iter().flatten().map(|&v| Complex64::new(v, 0.0)).collect();
    KernelFrame::from_kernel_columns(CMatrix::from_column_slice(3, cols.len(), &data)).unwrap()
}

fn matrix_gap(a: &CMatrix, want: &[[f64; 3]; 3]) -> f64 {
    let w = CMatrix::from_fn(3, 3, |i, j| Complex64::new(want[i][j], 0.0));
    numlin::max_abs_diff(a, &w)
}

fn criterion_4(b: &mut Board) {
    let (f, x) = load_case("cyclic3");
    let (t, o) = (2.0 / 3.0, -1.0 / 3.0);
    let frame = real_frame(&[[o, t, t], [t, o, t], [t, t, o]]);
    let a = operator_a_matrix(&f, &x, &frame).unwrap();
    let (d, e) = (-2.0 / 9.0, 1.0 / 9.0);
    let gap = matrix_gap(&a, &[[d, e, e], [e, d, e], [e, e, d]]);
    b.line(
        "4 operator, cubic cyclic system with the displayed frame",
        gap <= 1e-12,
        format!("max |A − target| = {gap:.3e}, A[0][0] = {:.12}, A[0][1] = {:.12}", a[(0, 0)].re, a[(0, 1)].re),
    );

    let (f, x) = load_case("sin_truncation");
    let std = real_frame(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let a = operator_a_matrix(&f, &x, &std).unwrap();
    let gap = matrix_gap(&a, &[[-1.0, 0.0, 1.0], [0.0, -1.0, 1.0], [0.0, 0.0, 1.0]]);
    b.line("4 operator, sine truncation", gap <= 1e-12, format!("max |A − target| = {gap:.3e}"));
}

fn criterion_5(b: &mut Board) {
    let mut trials = 0;
    let mut borderline = 0;
    let mut disagreements = 0;
    let mut construction_mismatch = 0;
    for name in MULTIPLE_ROOT_CASES {
        let (f, x) = load_case(name);
        let r = one_step_equivalence_check(&f, &x, 20, 0, RANK_TOL).unwrap();
        trials += r.trials;
        borderline += r.borderline;
        disagreements += r.decisive_disagreements;
    }
    for s in 0..50u64 {
        let c = constructed_system(s, s % 2 == 0);
        let r = one_step_equivalence_check(&c.f, &c.x, 5, s, RANK_TOL).unwrap();
        trials += r.trials;
        borderline += r.borderline;
        disagreements += r.decisive_disagreements;
        let b_ok = r.outcomes.iter().filter(|o| o.decisive()).all(|o| o.b_full_rank == c.simple);
        if r.kappa != c.kappa || !b_ok {
            construction_mismatch += 1;
        }
    }
    let share = borderline as f64 / trials as f64;
    b.line(
        "5 characterization matrix vs deflated Jacobian",
        disagreements == 0 && share <= 0.05,
        format!(
            "{trials} trials, {disagreements} decisive disagreements, {borderline} borderline ({:.1}%), {construction_mismatch} random systems off their construction",
            share * 100.0
        ),
    );
}

fn criterion_6(b: &mut Board) {
    let (sys, pt) = case_paths("cube_diffs_origin");
    let cfg = RunConfig { gamma_override: Some(GAMMA_OVERRIDE), ..RunConfig::default() };
    let ReportBody::Separation(s) = cmd_separation(&sys, &pt, &cfg).unwrap().result else { unreachable!() };
    let d3 = universal_d(3, DVariant::Paper).unwrap().d;
    let exact = d3 / (2.0 * GAMMA_OVERRIDE * GAMMA_OVERRIDE);
    b.line(
        "6 separation radius with γ = 11.25",
        rel(s.radius, exact) <= 1e-12 && rel(s.radius, 3e-4) <= 0.1,
        format!("radius {:.6e}, d(3)/(2γ²) = {exact:.6e}, off 0.0003 by {:.1}%", s.radius, rel(s.radius, 3e-4) * 100.0),
    );

    let ReportBody::Separation(own) = cmd_separation(&sys, &pt, &RunConfig::default()).unwrap().result else { unreachable!() };
    let consistent = rel(own.radius, own.d / (2.0 * own.gamma_internal * own.gamma_internal)) <= 1e-12;
    b.line(
        "6 separation radius with the internal γ",
        own.gamma_internal.is_finite()
            && !own.gamma_overridden
            && consistent
            && (own.radius <= s.radius || own.gamma == own.gamma_internal),
        format!("internal γ = {:.6}, radius {:.6e}", own.gamma_internal, own.radius),
    );
}

fn criterion_7(b: &mut Board) {
    let (sys, pt) = case_paths("cube_diffs_approx");
    let (report, t) = timed(|| cmd_certify(&sys, &pt, &RunConfig::default()).unwrap());
    let ReportBody::Certify(internal) = report.result else { unreachable!() };
    b.line(
        "7 cluster certification with the internal γ",
        internal.verdict == CertVerdict::Certified && t < Duration::from_secs(1),
        format!("{:?}, γ = {:.6}, {:.3} s", internal.verdict, internal.gamma.unwrap_or(f64::NAN), t.as_secs_f64()),
    );

    let cfg = RunConfig { gamma_override: Some(GAMMA_OVERRIDE), ..RunConfig::default() };
    let (report, t) = timed(|| cmd_certify(&sys, &pt, &cfg).unwrap());
    let ReportBody::Certify(c) = report.result else { unreachable!() };
    let lhs = c.lhs.unwrap_or(f64::NAN);
    let rhs = c.rhs.unwrap_or(f64::NAN);
    let radius = c.radius_cluster.unwrap_or(f64::NAN);
    b.line(
        "7 verdict with γ = 11.25",
        c.verdict == CertVerdict::Certified && t < Duration::from_secs(1),
        format!("{:?}, {:.3} s", c.verdict, t.as_secs_f64()),
    );
    b.line("7 lhs ≤ 5e-21", lhs <= 5e-21, format!("lhs = {lhs:.4e}"));
    b.line("7 rhs ≥ 3e-9", rhs >= 3e-9, format!("rhs = {rhs:.4e}, ‖(A − H)⁻¹‖ = {:.4e}", c.inv_norm_amh.unwrap_or(f64::NAN)));
    b.line(
        "7 cluster radius near 0.00015",
        rel(radius, 1.5e-4) <= 0.1,
        format!("radius {radius:.6e}, off by {:.1}%", rel(radius, 1.5e-4) * 100.0),
    );
    b.line("7 zero count floor", c.zero_count_lower_bound == Some(8), format!("floor {:?}", c.zero_count_lower_bound));
}

fn criterion_8(b: &mut Board) {
    let opts = CertOptions::default();
    let mut checked = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (i, name) in SIMPLE_MULTIPLE_CASES.iter().enumerate() {
        let (f, x) = load_case(name);
        let ctx = ExactRoot::new(&f, &x, &opts).unwrap();
        let radius = ctx.ball_radius();
        let mut rng = numlin::rng_for(i as u64, 0x7468_6d35);
        for _ in 0..100 {
            let dir = numlin::gaussian_vector(&mut rng, f.nvars());
            let len = rng.random_range(0.0..=1.0) * radius;
            let w = dir.clone() * Complex64::new(len / dir.norm(), 0.0);
            let y = &x + w.as_slice();
            let r = residual_lower_bound_check(&f, &x, &y, &ctx).unwrap();
            checked += 1;
            violations += usize::from(!r.holds);
            if r.rhs > 0.0 {
                worst = worst.min(r.lhs / r.rhs);
            }
        }
    }
    b.line(
        "8 residual growth in the cluster ball",
        violations == 0,
        format!("{checked} samples, {violations} violations, min ‖f(y)‖/bound = {worst:.3}"),
    );
}

fn criterion_9(b: &mut Board) {
    let opts = CertOptions::default();
    let mut samples = 0;
    let mut violations = 0;
    let mut l2 = Vec::new();
    for name in SIMPLE_MULTIPLE_CASES {
        let (f, x) = load_case(name);
        let r = lemma_suite(&f, &x, 1000, &opts).unwrap();
        samples += r.samples;
        violations += r.total_violations();
        let id = lemma2_identity(&f, &x, 100, 1e-8, &opts).unwrap();
        l2.push((*name, id));
    }
    b.line(
        "9 angle-split residual lemmas",
        violations == 0,
        format!("{samples} samples over {} systems, {violations} violations", SIMPLE_MULTIPLE_CASES.len()),
    );
    let failures: usize = l2.iter().map(|(_, r)| r.failures).sum();
    let corrected: usize = l2.iter().map(|(_, r)| r.corrected_failures).sum();
    let detail: Vec<String> = l2.iter().map(|(n, r)| format!("{n} κ={}/n={} {}/{}", r.kappa, r.nvars, r.failures, r.draws)).collect();
    b.line(
        "9 inverse-product norm identity",
        failures == 0,
        format!("failures {} ({}); without the unit term when κ = n: {corrected} failures", failures, detail.join(", ")),
    );
}

/// Monte-Carlo lower bound of `max{1, max_k ‖A⁻¹ D^k f(x)/k!‖^{1/(k−1)}}` from unit directions.
fn sampled_gamma(f: &PolySystem, x: &Point, a: &CMatrix, directions: usize, seed: u64) -> f64 {
    let n = f.nvars();
    let inv = numlin::solve_matrix(a, &CMatrix::identity(n, n)).unwrap();
    let tensors: Vec<(usize, DerivTensor)> = (2..=f.max_degree() as usize).map(|k| (k, DerivTensor::new(f, x, k).unwrap())).collect();
    let mut rng = numlin::rng_for(seed, 0x6d63_6761);
    let mut best = vec![0.0f64; tensors.len()];
    for _ in 0..directions {
        let w = numlin::gaussian_vector(&mut rng, n);
        let w = w.clone() / Complex64::new(w.norm(), 0.0);
        for (slot, (k, t)) in tensors.iter().enumerate() {
            let v = numlin::CVector::from_vec(t.apply_power(w.as_slice()).unwrap());
            let fact: f64 = (1..=*k).map(|i| i as f64).product();
            best[slot] = best[slot].max((&inv * v).norm() / fact);
        }
    }
    tensors.iter().zip(&best).fold(1.0, |g, ((k, _), &m)| g.max(m.powf(1.0 / (*k as f64 - 1.0))))
}

fn criterion_10(b: &mut Board) {
    let mut worst = 0.0f64;
    for s in 0..50u64 {
        let f = random_system(s);
        let n = f.nvars();
        let x = random_point(s, n, 1.0);
        let w = random_point(s + 1000, n, 0.7);
        let exact = f.evaluate(&(&x + w.coords.as_slice())).unwrap();
        let mut sum = vec![Complex64::new(0.0, 0.0); f.len()];
        let mut scale = 0.0;
        for k in 0..=f.max_degree() as usize {
            let term = DerivTensor::new(&f, &x, k).unwrap().apply_power(&w.coords).unwrap();
            let fact: f64 = (1..=k).map(|i| i as f64).product();
            for (acc, t) in sum.iter_mut().zip(&term) {
                *acc += t / fact;
            }
            scale += singcert::poly::vec_norm(&term) / fact;
        }
        let err: f64 = exact.iter().zip(&sum).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(err / scale.max(f64::MIN_POSITIVE));
    }
    b.line("10 Taylor exactness", worst <= 1e-10, format!("50 systems, worst relative error {worst:.2e}"));

    let opts = CertOptions::default();
    let mut dominated = 0;
    let mut tightest = f64::INFINITY;
    let mut skipped = 0;
    let mut nontrivial = 0;
    for s in 0..50u64 {
        let c = constructed_system(1000 + s, true);
        let ctx = match ExactRoot::new(&c.f, &c.x, &opts) {
            Ok(ctx) => ctx,
            Err(e) => {
                skipped += 1;
                eprintln!("system {s}: {e}");
                continue;
            }
        };
        let lower = sampled_gamma(&c.f, &c.x, &ctx.ops.a, 10_000, s);
        let upper = ctx.gamma_bound.gamma;
        dominated += usize::from(upper >= lower);
        if lower > 1.0 {
            nontrivial += 1;
            tightest = tightest.min(upper / lower);
        }
    }
    b.line(
        "10 γ bound dominates sampled γ",
        dominated == 50 && skipped == 0,
        format!("{dominated}/50 dominated, {skipped} skipped, min upper/lower = {tightest:.3} over {nontrivial} with sampled γ > 1"),
    );
}

fn main() -> ExitCode {
    let mut b = Board { failed: 0, total: 0 };
    criterion_1(&mut b);
    criterion_2(&mut b);
    criterion_3(&mut b);
    criterion_4(&mut b);
    criterion_5(&mut b);
    criterion_6(&mut b);
    criterion_7(&mut b);
    criterion_8(&mut b);
    criterion_9(&mut b);
    criterion_10(&mut b);
    println!("acceptance: {}/{} passed", b.total - b.failed, b.total);
    if b.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

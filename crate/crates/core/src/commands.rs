//! Pipelines behind the `singcert` subcommands and their reports.
//!
//! Every command yields a [`Report`]: the inputs echoed back, the run
//! configuration, a command-specific body and the wall time. JSON output
//! writes every float with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{self, CertError, CertOptions, CertReport, CertVerdict, DVariant, SeparationReport};
use crate::deflate::{self, DeflateError, EquivalenceReport, SimplicityReport, Verdict};
use crate::dualspace::{self, DualError, DualInvariants, DualOptions};
use crate::numlin::{self, LinalgError};
use crate::poly::{parse_system, DerivTensor, ParseError, Point, PolyError, PolySystem};
use crate::Complex64;

/// Seeded trials behind the B/Dg agreement column.
pub const EQUIVALENCE_TRIALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub rank_tol: f64,
    pub res_tol: f64,
    pub seed: u64,
    pub kmax: usize,
    pub d_variant: DVariant,
    pub gamma_override: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { rank_tol: numlin::DEFAULT_RANK_TOL, res_tol: 1e-6, seed: 0, kmax: 12, d_variant: DVariant::Paper, gamma_override: None }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CommandError> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.rank_tol) {
            return Err(CommandError::InvalidConfig(format!("rank-tol {} must lie in (0, 1)", self.rank_tol)));
        }
        if !in_unit(self.res_tol) {
            return Err(CommandError::InvalidConfig(format!("res-tol {} must lie in (0, 1)", self.res_tol)));
        }
        if self.kmax < 1 {
            return Err(CommandError::InvalidConfig("kmax must be at least 1".into()));
        }
        if let Some(g) = self.gamma_override {
            if !(g.is_finite() && g >= 1.0) {
                return Err(CommandError::InvalidConfig(format!("gamma override {g} must be finite and >= 1")));
            }
        }
        Ok(())
    }

    fn cert_options(&self) -> CertOptions {
        CertOptions {
            rank_tol: self.rank_tol,
            res_tol: self.res_tol,
            seed: self.seed,
            d_variant: self.d_variant,
            gamma_override: self.gamma_override,
        }
    }

    fn dual_options(&self) -> DualOptions {
        DualOptions { rank_tol: self.rank_tol, res_tol: self.res_tol, ..DualOptions::default() }
    }
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: invalid point file: {source}")]
    PointFile { path: PathBuf, source: serde_json::Error },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Dual(#[from] DualError),
    #[error(transparent)]
    Deflate(#[from] DeflateError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<PolyError> for CommandError {
    fn from(e: PolyError) -> Self {
        CommandError::Dimension(e.to_string())
    }
}

impl CommandError {
    /// 2 usage/input, 3 dimension mismatch, 4 no dual-space plateau,
    /// 1 for a negative verdict surfaced as an error, 5 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Io { .. } | CommandError::Parse { .. } | CommandError::PointFile { .. } | CommandError::InvalidConfig(_) => 2,
            CommandError::Dimension(_)
            | CommandError::Dual(DualError::Poly(_))
            | CommandError::Deflate(DeflateError::Poly(_))
            | CommandError::Cert(CertError::Poly(_) | CertError::NotSquare { .. }) => 3,
            CommandError::Dual(DualError::NotStabilized { .. }) => 4,
            CommandError::Cert(CertError::NotSimple | CertError::Regular | CertError::NotARoot { .. }) => 1,
            CommandError::Dual(DualError::TooLarge { .. }) => 2,
            _ => 5,
        }
    }
}

/// A system and point read from disk.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub system_path: PathBuf,
    pub point_path: PathBuf,
    pub system: PolySystem,
    pub point: Point,
}

impl Inputs {
    pub fn load(system_path: &Path, point_path: &Path) -> Result<Self, CommandError> {
        let read = |p: &Path| fs::read_to_string(p).map_err(|source| CommandError::Io { path: p.to_path_buf(), source });
        let system = parse_system(&read(system_path)?).map_err(|source| CommandError::Parse { path: system_path.to_path_buf(), source })?;
        let point =
            Point::from_json(&read(point_path)?).map_err(|source| CommandError::PointFile { path: point_path.to_path_buf(), source })?;
        if point.len() != system.nvars() {
            return Err(CommandError::Dimension(format!("point has {} coordinates, system has {} variables", point.len(), system.nvars())));
        }
        Ok(Self { system_path: system_path.to_path_buf(), point_path: point_path.to_path_buf(), system, point })
    }

    fn require_square(&self) -> Result<(), CommandError> {
        if !self.system.is_square() {
            return Err(CommandError::Dimension(format!(
                "{} equations in {} variables; a square system is required",
                self.system.len(),
                self.system.nvars()
            )));
        }
        Ok(())
    }

    fn echo(&self) -> InputEcho {
        InputEcho {
            system: Some(self.system_path.display().to_string()),
            point: Some(self.point_path.display().to_string()),
            directory: None,
            nvars: Some(self.system.nvars()),
            equations: Some(self.system.len()),
            coordinates: Some(self.point.coords.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub system: Option<String>,
    pub point: Option<String>,
    pub directory: Option<String>,
    pub nvars: Option<usize>,
    pub equations: Option<usize>,
    pub coordinates: Option<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResult {
    pub dual: Option<DualInvariants>,
    pub dual_error: Option<String>,
    pub simplicity: SimplicityReport,
    /// Singular values of `Df(x)`, descending.
    pub jacobian_sigma: Vec<f64>,
    pub b_sigma_min: Option<f64>,
    pub deflations: Option<usize>,
    /// `μ ≥ 2^κ`, when both are known and `κ ≥ 1`.
    pub multiplicity_bound_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflateResult {
    pub kappa: usize,
    pub lambda1: Vec<Complex64>,
    pub dg_rows: usize,
    pub dg_cols: usize,
    pub dg_full_rank: bool,
    pub dg_sigma_min: f64,
    pub dg_sigma_max: f64,
    pub b_sigma_min: f64,
    pub b_det_abs: f64,
    pub equivalence: EquivalenceReport,
    pub deflations: Option<usize>,
    /// The augmented system in the input text format.
    pub augmented_system: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub name: String,
    pub nvars: Option<usize>,
    pub kappa: Option<usize>,
    pub depth: Option<usize>,
    pub multiplicity: Option<usize>,
    pub multiplicity_bound_holds: Option<bool>,
    pub verdict: Option<Verdict>,
    pub one_step: Option<bool>,
    pub equivalence_agreements: Option<usize>,
    pub equivalence_trials: Option<usize>,
    pub certify: Option<CertVerdict>,
    /// Whether the row matches `expected.json`, when present.
    pub expected_match: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusResult {
    pub rows: Vec<CorpusRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReportBody {
    Analyze(AnalyzeResult),
    Dual(DualInvariants),
    Deflate(DeflateResult),
    Separation(SeparationReport),
    Certify(CertReport),
    Corpus(CorpusResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: InputEcho,
    pub config: RunConfig,
    pub result: ReportBody,
    pub wall_time_s: f64,
}

impl Report {
    /// 0 for success or a positive verdict, 1 for a negative one.
    pub fn exit_code(&self) -> i32 {
        let ok = match &self.result {
            ReportBody::Analyze(a) => matches!(a.simplicity.verdict, Verdict::Regular | Verdict::SimpleMultiple),
            ReportBody::Deflate(d) => d.dg_full_rank,
            ReportBody::Certify(c) => c.verdict == CertVerdict::Certified,
            ReportBody::Dual(_) | ReportBody::Separation(_) | ReportBody::Corpus(_) => true,
        };
        if ok {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        to_json_17(self)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:.8e}")
    }
}

/// Compact JSON with every finite float written to 17 significant digits.
pub fn to_json_17<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFigFormatter);
    value.serialize(&mut ser).expect("report types serialize");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

fn finish(command: &str, inputs: InputEcho, config: &RunConfig, result: ReportBody, start: Instant) -> Report {
    Report { command: command.to_string(), inputs, config: *config, result, wall_time_s: start.elapsed().as_secs_f64() }
}

fn analyze_inputs(inputs: &Inputs, config: &RunConfig) -> Result<AnalyzeResult, CommandError> {
    let (f, x) = (&inputs.system, &inputs.point);
    let (dual, dual_error) = match dualspace::dual_invariants(f, x, config.kmax, &config.dual_options()) {
        Ok(d) => (Some(d), None),
        Err(e @ (DualError::NotStabilized { .. } | DualError::TooLarge { .. })) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let simplicity = deflate::is_simple_multiple(f, x, config.seed, config.rank_tol, config.res_tol)?;
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let jacobian_sigma = numlin::singular_values(&df)?;
    let root = simplicity.verdict != Verdict::NotARoot;
    let mut b_sigma_min = None;
    if root && simplicity.kappa > 0 && f.is_square() {
        let kernel = numlin::numerical_kernel(&df, config.rank_tol)?;
        let frame = numlin::random_orthonormal_kernel_basis(&kernel, config.seed);
        b_sigma_min = Some(deflate::build_characterization_matrix(f, x, &frame)?.sigma_min);
    }
    let deflations = if root { deflate::deflation_count(f, x, config.seed, config.rank_tol)? } else { None };
    let multiplicity_bound_holds =
        dual.as_ref().filter(|d| d.breadth > 0 && root).map(|d| d.multiplicity as u128 >= 1u128 << d.breadth.min(127));
    Ok(AnalyzeResult { dual, dual_error, simplicity, jacobian_sigma, b_sigma_min, deflations, multiplicity_bound_holds })
}

pub fn cmd_analyze(system: &Path, point: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let inputs = Inputs::load(system, point)?;
    let result = analyze_inputs(&inputs, config)?;
    Ok(finish("analyze", inputs.echo(), config, ReportBody::Analyze(result), start))
}

pub fn cmd_dual(system: &Path, point: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let inputs = Inputs::load(system, point)?;
    let dual = dualspace::dual_invariants(&inputs.system, &inputs.point, config.kmax, &config.dual_options())?;
    Ok(finish("dual", inputs.echo(), config, ReportBody::Dual(dual), start))
}

pub fn cmd_deflate(system: &Path, point: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let inputs = Inputs::load(system, point)?;
    inputs.require_square()?;
    let (f, x) = (&inputs.system, &inputs.point);
    let df = DerivTensor::new(f, x, 1)?.as_matrix();
    let kernel = numlin::numerical_kernel(&df, config.rank_tol)?;
    let frame = numlin::random_orthonormal_kernel_basis(&kernel, config.seed);
    let step = deflate::deflate_once(f, x, &frame, config.seed, config.rank_tol)?;
    let b = deflate::build_characterization_matrix(f, x, &frame)?;
    let equivalence = deflate::one_step_equivalence_check(f, x, EQUIVALENCE_TRIALS, config.seed, config.rank_tol)?;
    let result = DeflateResult {
        kappa: frame.kappa,
        dg_rows: step.dg.nrows(),
        dg_cols: step.dg.ncols(),
        dg_full_rank: step.full_rank,
        dg_sigma_min: step.sigma_min,
        dg_sigma_max: step.sigma_max,
        b_sigma_min: b.sigma_min,
        b_det_abs: b.det_abs,
        equivalence,
        deflations: deflate::deflation_count(f, x, config.seed, config.rank_tol)?,
        augmented_system: step.g.to_string(),
        lambda1: step.lambda1,
    };
    Ok(finish("deflate", inputs.echo(), config, ReportBody::Deflate(result), start))
}

pub fn cmd_separation(system: &Path, point: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let inputs = Inputs::load(system, point)?;
    inputs.require_square()?;
    let sep = certify::separation_bound(&inputs.system, &inputs.point, &config.cert_options())?;
    Ok(finish("separation", inputs.echo(), config, ReportBody::Separation(sep), start))
}

pub fn cmd_certify(system: &Path, point: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let inputs = Inputs::load(system, point)?;
    inputs.require_square()?;
    let rep = certify::certify_cluster(&inputs.system, &inputs.point, &config.cert_options())?;
    Ok(finish("certify", inputs.echo(), config, ReportBody::Certify(rep), start))
}

/// Optional expectations stored next to a corpus case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub kappa: Option<usize>,
    pub depth: Option<usize>,
    pub multiplicity: Option<usize>,
    pub verdict: Option<Verdict>,
    pub one_step: Option<bool>,
    pub certify: Option<CertVerdict>,
}

impl Expected {
    fn matches(&self, row: &CorpusRow) -> bool {
        fn eq<T: PartialEq>(want: &Option<T>, got: &Option<T>) -> bool {
            want.as_ref().is_none_or(|w| got.as_ref() == Some(w))
        }
        eq(&self.kappa, &row.kappa)
            && eq(&self.depth, &row.depth)
            && eq(&self.multiplicity, &row.multiplicity)
            && eq(&self.verdict, &row.verdict)
            && eq(&self.one_step, &row.one_step)
            && eq(&self.certify, &row.certify)
    }
}

fn empty_row(name: String) -> CorpusRow {
    CorpusRow {
        name,
        nvars: None,
        kappa: None,
        depth: None,
        multiplicity: None,
        multiplicity_bound_holds: None,
        verdict: None,
        one_step: None,
        equivalence_agreements: None,
        equivalence_trials: None,
        certify: None,
        expected_match: None,
        error: None,
    }
}

fn corpus_row(dir: &Path, config: &RunConfig) -> Result<CorpusRow, Box<(CorpusRow, CommandError)>> {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut row = empty_row(name);
    let attempt = (|| -> Result<(), CommandError> {
        let inputs = Inputs::load(&dir.join("system.txt"), &dir.join("point.json"))?;
        row.nvars = Some(inputs.system.nvars());
        let analysis = analyze_inputs(&inputs, config)?;
        row.kappa = Some(analysis.simplicity.kappa);
        row.verdict = Some(analysis.simplicity.verdict);
        row.multiplicity_bound_holds = analysis.multiplicity_bound_holds;
        if let Some(d) = &analysis.dual {
            row.depth = Some(d.depth);
            row.multiplicity = Some(d.multiplicity);
        }
        row.one_step = analysis.deflations.map(|k| k <= 1);
        if analysis.simplicity.kappa > 0 && analysis.simplicity.verdict != Verdict::NotARoot && inputs.system.is_square() {
            let eq = deflate::one_step_equivalence_check(&inputs.system, &inputs.point, EQUIVALENCE_TRIALS, config.seed, config.rank_tol)?;
            row.equivalence_agreements = Some(eq.agreements);
            row.equivalence_trials = Some(eq.trials);
        }
        if inputs.system.is_square() {
            row.certify = Some(certify::certify_cluster(&inputs.system, &inputs.point, &config.cert_options())?.verdict);
        }
        let expected_path = dir.join("expected.json");
        if expected_path.exists() {
            let text = fs::read_to_string(&expected_path).map_err(|source| CommandError::Io { path: expected_path.clone(), source })?;
            let expected: Expected =
                serde_json::from_str(&text).map_err(|source| CommandError::PointFile { path: expected_path.clone(), source })?;
            row.expected_match = Some(expected.matches(&row));
        }
        Ok(())
    })();
    match attempt {
        Ok(()) => Ok(row),
        Err(e) => {
            row.error = Some(e.to_string());
            Err(Box::new((row, e)))
        }
    }
}

/// Case directories (those holding a `system.txt`) in name order.
pub fn corpus_cases(dir: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let entries = fs::read_dir(dir).map_err(|source| CommandError::Io { path: dir.to_path_buf(), source })?;
    let mut cases: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.join("system.txt").is_file()).collect();
    cases.sort();
    Ok(cases)
}

pub fn cmd_corpus(dir: &Path, config: &RunConfig) -> Result<Report, CommandError> {
    config.validate()?;
    let start = Instant::now();
    let mut rows = Vec::new();
    for case in corpus_cases(dir)? {
        match corpus_row(&case, config) {
            Ok(row) => rows.push(row),
            Err(failed) => {
                let (row, e) = *failed;
                log::warn!("corpus case {}: {e}", case.display());
                rows.push(row);
            }
        }
    }
    let inputs = InputEcho {
        system: None,
        point: None,
        directory: Some(dir.display().to_string()),
        nvars: None,
        equations: None,
        coordinates: None,
    };
    Ok(finish("corpus", inputs, config, ReportBody::Corpus(CorpusResult { rows }), start))
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn opt_e(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

/// Plain-text rendering of a report.
pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "command: {}", report.command);
    if let Some(p) = &report.inputs.system {
        let _ = writeln!(s, "system:  {p}");
    }
    if let Some(p) = &report.inputs.point {
        let _ = writeln!(s, "point:   {p}");
    }
    if let Some(p) = &report.inputs.directory {
        let _ = writeln!(s, "corpus:  {p}");
    }
    match &report.result {
        ReportBody::Analyze(a) => {
            let _ =
                writeln!(s, "verdict: {:?} (kappa {}, residual {:.3e})", a.simplicity.verdict, a.simplicity.kappa, a.simplicity.residual);
            match &a.dual {
                Some(d) => {
                    let _ = writeln!(
                        s,
                        "dual:    breadth {}, depth {}, multiplicity {}, dims {:?}",
                        d.breadth, d.depth, d.multiplicity, d.dims
                    );
                }
                None => {
                    let _ = writeln!(s, "dual:    {}", opt(&a.dual_error));
                }
            }
            let sig: Vec<String> = a.jacobian_sigma.iter().map(|v| format!("{v:.3e}")).collect();
            let _ = writeln!(s, "sigma(Df): [{}]", sig.join(", "));
            let _ = writeln!(s, "sigma_min(B): {}", opt_e(a.b_sigma_min));
            let _ = writeln!(s, "deflation steps: {}", opt(&a.deflations));
            let _ = writeln!(s, "mu >= 2^kappa: {}", opt(&a.multiplicity_bound_holds));
        }
        ReportBody::Dual(d) => {
            let _ = writeln!(s, "breadth {}, depth {}, multiplicity {}", d.breadth, d.depth, d.multiplicity);
            let _ = writeln!(s, "dims {:?}", d.dims);
        }
        ReportBody::Deflate(d) => {
            let _ = writeln!(s, "kappa {}; Dg {}x{}, full rank: {}", d.kappa, d.dg_rows, d.dg_cols, d.dg_full_rank);
            let _ = writeln!(s, "sigma_min(Dg) {:.6e}, sigma_min(B) {:.6e}", d.dg_sigma_min, d.b_sigma_min);
            let e = &d.equivalence;
            let _ = writeln!(
                s,
                "B/Dg agreement {}/{} (B full {}, Dg full {}, borderline {})",
                e.agreements, e.trials, e.b_full_rank, e.dg_full_rank, e.borderline
            );
            let _ = writeln!(s, "deflation steps: {}", opt(&d.deflations));
        }
        ReportBody::Separation(r) => {
            let src = if r.gamma_overridden { "override" } else { "internal bound" };
            let _ = writeln!(s, "kappa {}, d {:.10}, gamma {:.6} ({src}; internal {:.6})", r.kappa, r.d, r.gamma, r.gamma_internal);
            let _ = writeln!(s, "separation radius d/(2 gamma^2) = {:.6e}", r.radius);
        }
        ReportBody::Certify(c) => {
            let _ = writeln!(s, "verdict: {:?}{}", c.verdict, c.reason.map(|r| format!(" ({r:?})")).unwrap_or_default());
            let _ = writeln!(s, "kappa {}, residual {:.3e}", c.kappa, c.residual);
            let src = if c.gamma_overridden { " (override)" } else { "" };
            let _ = writeln!(s, "gamma {}{src}, d {}", opt_e(c.gamma), opt_e(c.d));
            let _ = writeln!(s, "lhs {} < rhs {}", opt_e(c.lhs), opt_e(c.rhs));
            let _ = writeln!(s, "cluster radius d/(4 gamma^2) = {}", opt_e(c.radius_cluster));
            if c.verdict == CertVerdict::Certified {
                let _ = writeln!(s, "at least {} zeros in the ball", opt(&c.zero_count_lower_bound));
            }
        }
        ReportBody::Corpus(c) => {
            let _ = writeln!(
                s,
                "{:<24} {:>2} {:>5} {:>5} {:>4} {:>13} {:>14} {:>8} {:>9} {:>18} {:>8}",
                "case", "n", "kappa", "depth", "mu", "mu>=2^kappa", "verdict", "one-step", "B/Dg", "certify", "expected"
            );
            for r in &c.rows {
                let agree = match (r.equivalence_agreements, r.equivalence_trials) {
                    (Some(a), Some(t)) => format!("{a}/{t}"),
                    _ => "-".into(),
                };
                let _ = writeln!(
                    s,
                    "{:<24} {:>2} {:>5} {:>5} {:>4} {:>13} {:>14} {:>8} {:>9} {:>18} {:>8}",
                    r.name,
                    opt(&r.nvars),
                    opt(&r.kappa),
                    opt(&r.depth),
                    opt(&r.multiplicity),
                    opt(&r.multiplicity_bound_holds),
                    r.verdict.map_or("-".into(), |v| format!("{v:?}")),
                    opt(&r.one_step),
                    agree,
                    r.certify.map_or("-".into(), |v| format!("{v:?}")),
                    opt(&r.expected_match),
                );
                if let Some(e) = &r.error {
                    let _ = writeln!(s, "  error: {e}");
                }
            }
        }
    }
    let _ = writeln!(
        s,
        "seed {}, rank-tol {:e}, res-tol {:e}, wall time {:.3}s",
        report.config.seed, report.config.rank_tol, report.config.res_tol, report.wall_time_s
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_case(dir: &Path, system: &str, point: &str) -> (PathBuf, PathBuf) {
        let s = dir.join("system.txt");
        let p = dir.join("point.json");
        fs::write(&s, system).unwrap();
        fs::write(&p, point).unwrap();
        (s, p)
    }

    #[test]
    fn seventeen_digits() {
        let json = to_json_17(&vec![0.1, 1.0 / 3.0, -2.5e-300]);
        assert_eq!(json, "[1.0000000000000001e-1,3.3333333333333331e-1,-2.5000000000000000e-300]");
        let back: Vec<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![0.1, 1.0 / 3.0, -2.5e-300]);
    }

    #[test]
    fn report_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let (s, p) = write_case(tmp.path(), "vars x,y,z; x^3 - y*z; y^3 - x*z; z^3 - x*y", "[[0,0],[0,0],[0,0]]");
        let config = RunConfig::default();
        for report in [
            cmd_analyze(&s, &p, &config).unwrap(),
            cmd_dual(&s, &p, &config).unwrap(),
            cmd_deflate(&s, &p, &config).unwrap(),
            cmd_separation(&s, &p, &config).unwrap(),
            cmd_certify(&s, &p, &config).unwrap(),
        ] {
            let json = report.to_json();
            assert_eq!(Report::from_json(&json).unwrap(), report, "{}", report.command);
        }
    }

    #[test]
    fn deterministic_modulo_wall_time() {
        let tmp = tempfile::tempdir().unwrap();
        let (s, p) = write_case(tmp.path(), "vars x,y; x^2; y^2", "[[0,0],[0,0]]");
        let config = RunConfig { seed: 17, ..RunConfig::default() };
        let mut a = cmd_deflate(&s, &p, &config).unwrap();
        let mut b = cmd_deflate(&s, &p, &config).unwrap();
        a.wall_time_s = 0.0;
        b.wall_time_s = 0.0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn exit_codes() {
        let tmp = tempfile::tempdir().unwrap();
        let (s, p) = write_case(tmp.path(), "vars x,y; x^2 +; y", "[[0,0],[0,0]]");
        assert_eq!(cmd_dual(&s, &p, &RunConfig::default()).unwrap_err().exit_code(), 2);
        let (s, p) = write_case(tmp.path(), "vars x,y; x^2; y^2", "[[0,0]]");
        assert_eq!(cmd_dual(&s, &p, &RunConfig::default()).unwrap_err().exit_code(), 3);
        let (s, p) = write_case(tmp.path(), "vars x; x^5", "[[0,0]]");
        let small = RunConfig { kmax: 2, ..RunConfig::default() };
        assert_eq!(cmd_dual(&s, &p, &small).unwrap_err().exit_code(), 4);
        let (s, p) = write_case(tmp.path(), "vars x,y; x + y^2; y^3", "[[0,0],[0,0]]");
        assert_eq!(cmd_analyze(&s, &p, &RunConfig::default()).unwrap().exit_code(), 1);
        assert_eq!(cmd_separation(&s, &p, &RunConfig::default()).unwrap_err().exit_code(), 1);
        let bad = RunConfig { rank_tol: 2.0, ..RunConfig::default() };
        assert_eq!(cmd_dual(&s, &p, &bad).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn empty_corpus() {
        let tmp = tempfile::tempdir().unwrap();
        let r = cmd_corpus(tmp.path(), &RunConfig::default()).unwrap();
        assert_eq!(r.result, ReportBody::Corpus(CorpusResult { rows: vec![] }));
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn corpus_logs_failures_and_continues() {
        let tmp = tempfile::tempdir().unwrap();
        let good = tmp.path().join("a_good");
        let bad = tmp.path().join("b_bad");
        fs::create_dir(&good).unwrap();
        fs::create_dir(&bad).unwrap();
        write_case(&good, "vars x,y; x^2; y^2", "[[0,0],[0,0]]");
        fs::write(good.join("expected.json"), r#"{"kappa": 2, "multiplicity": 4, "verdict": "SimpleMultiple"}"#).unwrap();
        write_case(&bad, "vars x,y; x^2", "[[0,0]]");
        let r = cmd_corpus(tmp.path(), &RunConfig::default()).unwrap();
        let ReportBody::Corpus(c) = r.result else { panic!("corpus body") };
        assert_eq!(c.rows.len(), 2);
        assert_eq!(c.rows[0].expected_match, Some(true));
        assert_eq!(c.rows[0].multiplicity_bound_holds, Some(true));
        assert!(c.rows[1].error.is_some());
    }
}

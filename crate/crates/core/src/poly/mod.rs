//! Sparse multivariate polynomials with complex coefficients.
//!
//! A [`Polynomial`] is a map from exponent vectors to coefficients, kept in
//! lexicographic order so that every summation over terms is deterministic.
//! A [`PolySystem`] is an ordered list of polynomials sharing the same
//! variables; it is what the rest of the crate certifies.

mod deriv;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use deriv::weighted_frobenius;
pub use deriv::{multi_indices, multinomial_weight, DerivTensor};
pub use parse::{parse_system, ParseError};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tensor of order {order} applied to {given} vectors")]
    ArityMismatch { order: usize, given: usize },
}

/// A point of `C^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    pub coords: Vec<Complex64>,
}

impl Point {
    pub fn new(coords: Vec<Complex64>) -> Self {
        Self { coords }
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Self { coords: xs.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.coords)
    }

    /// Parse the point file format: a JSON array of `[re, im]` pairs.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let pairs: Vec<[f64; 2]> = serde_json::from_str(text)?;
        Ok(Self { coords: pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect() })
    }

    pub fn to_json(&self) -> String {
        let pairs: Vec<[f64; 2]> = self.coords.iter().map(|c| [c.re, c.im]).collect();
        serde_json::to_string(&pairs).expect("finite pairs serialize")
    }
}

impl Add<&[Complex64]> for &Point {
    type Output = Point;

    fn add(self, w: &[Complex64]) -> Point {
        Point { coords: self.coords.iter().zip(w).map(|(a, b)| a + b).collect() }
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Sparse polynomial in `nvars` variables.
///
/// Terms with an exactly zero coefficient are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponent, Complex64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The polynomial `x_j`.
    pub fn variable(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, Complex64::new(1.0, 0.0));
        p
    }

    pub fn from_terms<I>(nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent, Complex64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Complex64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, e: &[u32]) -> Complex64 {
        self.terms.get(e).copied().unwrap_or_default()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Accumulate `c * x^e`, dropping the term if it cancels exactly.
    pub fn add_term(&mut self, e: Exponent, c: Complex64) {
        assert_eq!(e.len(), self.nvars, "exponent length must equal nvars");
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        // canonical zeros: never store -0.0 parts
        let c = Complex64::new(c.re + 0.0, c.im + 0.0);
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut slot) => {
                let sum = *slot.get() + c;
                if sum == Complex64::new(0.0, 0.0) {
                    slot.remove();
                } else {
                    *slot.get_mut() = Complex64::new(sum.re + 0.0, sum.im + 0.0);
                }
            }
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, a)| (e.clone(), a * c)))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::constant(self.nvars, Complex64::new(1.0, 0.0));
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Evaluate by direct sparse summation in lexicographic term order.
    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.nvars);
        self.terms.iter().fold(Complex64::new(0.0, 0.0), |acc, (e, c)| acc + c * monomial(e, x))
    }

    /// Symbolic partial derivative with respect to `x_j`.
    pub fn partial(&self, j: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[j] -= 1;
            out.add_term(d, c * f64::from(e[j]));
        }
        out
    }

    /// Embed into a ring with `extra` additional trailing variables.
    pub fn extend_vars(&self, extra: usize) -> Self {
        Self::from_terms(
            self.nvars + extra,
            self.terms.iter().map(|(e, c)| {
                let mut e2 = e.clone();
                e2.resize(self.nvars + extra, 0);
                (e2, *c)
            }),
        )
    }

    fn check_same_ring(&self, other: &Self) {
        assert_eq!(self.nvars, other.nvars, "polynomials live in different rings");
    }
}

/// `x^e`, with exponents applied by repeated multiplication.
pub(crate) fn monomial(e: &[u32], x: &[Complex64]) -> Complex64 {
    e.iter().zip(x).filter(|(&k, _)| k > 0).fold(Complex64::new(1.0, 0.0), |acc, (&k, &xi)| acc * xi.powu(k))
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    // monomial products add exponents
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.check_same_ring(rhs);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// An ordered list of polynomials over the same variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem {
    nvars: usize,
    var_names: Vec<String>,
    polys: Vec<Polynomial>,
}

impl PolySystem {
    /// Build a system; variable names default to `x1 … xn` when `names` is empty.
    pub fn new(nvars: usize, names: Vec<String>, polys: Vec<Polynomial>) -> Result<Self, PolyError> {
        if let Some(p) = polys.iter().find(|p| p.nvars != nvars) {
            return Err(PolyError::DimensionMismatch { expected: nvars, found: p.nvars });
        }
        let var_names = if names.is_empty() {
            (1..=nvars).map(|i| format!("x{i}")).collect()
        } else if names.len() == nvars {
            names
        } else {
            return Err(PolyError::DimensionMismatch { expected: nvars, found: names.len() });
        };
        Ok(Self { nvars, var_names, polys })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.polys.len() == self.nvars
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn max_degree(&self) -> u32 {
        self.polys.iter().map(Polynomial::degree).max().unwrap_or(0)
    }

    pub fn check_point(&self, x: &Point) -> Result<(), PolyError> {
        if x.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, found: x.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &Point) -> Result<Vec<Complex64>, PolyError> {
        self.check_point(x)?;
        Ok(self.polys.iter().map(|p| p.eval(&x.coords)).collect())
    }

    /// `‖f(x)‖₂`.
    pub fn residual(&self, x: &Point) -> Result<f64, PolyError> {
        Ok(vec_norm(&self.evaluate(x)?))
    }

    /// Componentwise difference `self − other`.
    pub fn difference(&self, other: &PolySystem) -> Result<PolySystem, PolyError> {
        if other.nvars != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, found: other.nvars });
        }
        if other.len() != self.len() {
            return Err(PolyError::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        let polys = self.polys.iter().zip(&other.polys).map(|(a, b)| a - b).collect();
        PolySystem::new(self.nvars, self.var_names.clone(), polys)
    }

    /// `g(y) = f(y) − c − H·(y − x)`.
    ///
    /// Only constant and linear coefficients change, so `D^k g = D^k f` for
    /// every `k ≥ 2` at the level of stored coefficients.
    pub fn shift_system(&self, x: &Point, c: &[Complex64], h: &nalgebra::DMatrix<Complex64>) -> Result<PolySystem, PolyError> {
        self.check_point(x)?;
        let n = self.nvars;
        if c.len() != self.len() {
            return Err(PolyError::DimensionMismatch { expected: self.len(), found: c.len() });
        }
        if h.nrows() != self.len() || h.ncols() != n {
            return Err(PolyError::DimensionMismatch { expected: n, found: h.ncols() });
        }
        let polys = self
            .polys
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut g = p.clone();
                // −c_i + Σ_j H_ij x_j  as the constant part of −H(y − x)
                let mut constant = -c[i];
                for j in 0..n {
                    constant += h[(i, j)] * x.coords[j];
                }
                g.add_term(vec![0; n], constant);
                for j in 0..n {
                    let mut e = vec![0; n];
                    e[j] = 1;
                    g.add_term(e, -h[(i, j)]);
                }
                g
            })
            .collect();
        PolySystem::new(n, self.var_names.clone(), polys)
    }

    /// Re-center at `x`: the returned system `p` satisfies `p(t) = f(x + t)`.
    ///
    /// Coefficients are the scaled derivatives `∂^α f(x) / α!`.
    pub fn translate(&self, x: &Point) -> Result<PolySystem, PolyError> {
        self.check_point(x)?;
        let n = self.nvars;
        let mut polys = vec![Polynomial::zero(n); self.len()];
        for k in 0..=self.max_degree() as usize {
            let t = DerivTensor::new(self, x, k)?;
            for (a, alpha) in t.indices().iter().enumerate() {
                let fact: f64 = alpha.iter().map(|&m| factorial(m)).product();
                for (i, p) in polys.iter_mut().enumerate() {
                    p.add_term(alpha.clone(), t.entry(i, a) / fact);
                }
            }
        }
        PolySystem::new(n, self.var_names.clone(), polys)
    }

    /// Upper bound of `max_{‖y−x‖≤R} ‖f(y)‖`.
    ///
    /// Sums `‖D^k f(x)/k!‖_F R^k`, where `‖·‖_F` is the Frobenius norm of the
    /// expanded symmetric tensor (an upper bound of its operator norm).
    pub fn taylor_norm_bound(&self, x: &Point, radius: f64) -> Result<f64, PolyError> {
        self.check_point(x)?;
        let mut total = 0.0;
        for k in 0..=self.max_degree() as usize {
            let t = DerivTensor::new(self, x, k)?;
            total += t.frobenius_norm() / factorial(k as u32) * radius.powi(k as i32);
        }
        Ok(total)
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn fmt_coefficient(c: &Complex64) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("({:?}{}{:?}i)", c.re, sign, c.im.abs())
}

impl PolySystem {
    fn fmt_poly(&self, p: &Polynomial, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if p.is_zero() {
            return write!(f, "0");
        }
        for (t, (e, c)) in p.terms.iter().enumerate() {
            if t > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", fmt_coefficient(c))?;
            for (j, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*{}", self.var_names[j])?,
                    _ => write!(f, "*{}^{}", self.var_names[j], k)?,
                }
            }
        }
        Ok(())
    }
}

/// Canonical text form; it parses back to an equal system.
impl fmt::Display for PolySystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {};", self.var_names.join(","))?;
        for p in &self.polys {
            self.fmt_poly(p, f)?;
            writeln!(f, ";")?;
        }
        Ok(())
    }
}

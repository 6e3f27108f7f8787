use std::collections::HashMap;

use num_complex::Complex64;

use super::{factorial, monomial, Point, PolyError, PolySystem};

/// All exponent vectors of length `n` with total degree exactly `k`, in
/// descending lexicographic order (`x1^k` first).
pub fn multi_indices(n: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(n, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, k as u32, &mut Vec::with_capacity(n), &mut out);
    out
}

/// `k!/α!`: how many ordered index tuples collapse onto the multi-index `α`.
pub fn multinomial_weight(alpha: &[u32]) -> f64 {
    let k: u32 = alpha.iter().sum();
    factorial(k) / alpha.iter().map(|&a| factorial(a)).product::<f64>()
}

/// The order-`k` derivative `D^k f(x)` of a polynomial system.
///
/// Only one entry per multi-index `α` (with `|α| = k`) is stored: the raw
/// partial derivative `∂^α f_i(x)`. The full symmetric tensor is expanded on
/// demand by [`DerivTensor::apply`].
#[derive(Debug, Clone)]
pub struct DerivTensor {
    order: usize,
    nvars: usize,
    nout: usize,
    indices: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    // row-major: output i, multi-index a
    values: Vec<Complex64>,
}

impl DerivTensor {
    /// `D^k f(x)`. `k = 0` gives the value `f(x)`, `k = 1` the Jacobian.
    pub fn new(f: &PolySystem, x: &Point, k: usize) -> Result<Self, PolyError> {
        f.check_point(x)?;
        let n = f.nvars();
        let indices = multi_indices(n, k);
        let mut values = vec![Complex64::new(0.0, 0.0); f.len() * indices.len()];
        for (i, p) in f.polys().iter().enumerate() {
            for (a, alpha) in indices.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (e, c) in p.terms() {
                    if e.iter().zip(alpha).any(|(ej, aj)| ej < aj) {
                        continue;
                    }
                    let mut falling = 1.0;
                    let mut rest = Vec::with_capacity(n);
                    for (&ej, &aj) in e.iter().zip(alpha) {
                        for m in 0..aj {
                            falling *= f64::from(ej - m);
                        }
                        rest.push(ej - aj);
                    }
                    acc += c * falling * monomial(&rest, &x.coords);
                }
                values[i * indices.len() + a] = acc;
            }
        }
        let lookup = indices.iter().cloned().enumerate().map(|(a, e)| (e, a)).collect();
        Ok(Self { order: k, nvars: n, nout: f.len(), indices, lookup, values })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nout(&self) -> usize {
        self.nout
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }

    /// `∂^α f_i(x)` for the `a`-th stored multi-index.
    pub fn entry(&self, i: usize, a: usize) -> Complex64 {
        self.values[i * self.indices.len() + a]
    }

    /// Entry `(i; j_1, …, j_k)` of the expanded symmetric tensor.
    pub fn expanded(&self, i: usize, slots: &[usize]) -> Complex64 {
        let mut alpha = vec![0u32; self.nvars];
        for &j in slots {
            alpha[j] += 1;
        }
        self.values[i * self.indices.len() + self.lookup[&alpha]]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    /// Multilinear application `D^k f(x)(w_1, …, w_k)`.
    pub fn apply(&self, vectors: &[&[Complex64]]) -> Result<Vec<Complex64>, PolyError> {
        if vectors.len() != self.order {
            return Err(PolyError::ArityMismatch { order: self.order, given: vectors.len() });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.nvars) {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, found: v.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.nout];
        let mut alpha = vec![0u32; self.nvars];
        self.accumulate(vectors, 0, Complex64::new(1.0, 0.0), &mut alpha, &mut out);
        Ok(out)
    }

    fn accumulate(&self, vectors: &[&[Complex64]], slot: usize, weight: Complex64, alpha: &mut [u32], out: &mut [Complex64]) {
        if slot == vectors.len() {
            let a = self.lookup[&alpha[..]];
            for (i, o) in out.iter_mut().enumerate() {
                *o += weight * self.values[i * self.indices.len() + a];
            }
            return;
        }
        for (j, &wj) in vectors[slot].iter().enumerate() {
            if wj == Complex64::new(0.0, 0.0) {
                continue;
            }
            alpha[j] += 1;
            self.accumulate(vectors, slot + 1, weight * wj, alpha, out);
            alpha[j] -= 1;
        }
    }

    /// `D^k f(x)(w, …, w) = Σ_{|α|=k} (k!/α!) ∂^α f(x) w^α`.
    pub fn apply_power(&self, w: &[Complex64]) -> Result<Vec<Complex64>, PolyError> {
        if w.len() != self.nvars {
            return Err(PolyError::DimensionMismatch { expected: self.nvars, found: w.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.nout];
        for (a, alpha) in self.indices.iter().enumerate() {
            let coef = monomial(alpha, w) * multinomial_weight(alpha);
            for (i, o) in out.iter_mut().enumerate() {
                *o += coef * self.values[i * self.indices.len() + a];
            }
        }
        Ok(out)
    }

    /// The `nout × nvars` matrix `D^k f(x)(w, …, w, ·)` (k−1 copies of `w`).
    pub fn contract_all_but_last(&self, w: &[Complex64]) -> Result<nalgebra::DMatrix<Complex64>, PolyError> {
        let mut m = nalgebra::DMatrix::zeros(self.nout, self.nvars);
        let mut e = vec![Complex64::new(0.0, 0.0); self.nvars];
        for j in 0..self.nvars {
            e[j] = Complex64::new(1.0, 0.0);
            let mut args: Vec<&[Complex64]> = vec![w; self.order.saturating_sub(1)];
            args.push(&e);
            let col = self.apply(&args)?;
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
            e[j] = Complex64::new(0.0, 0.0);
        }
        Ok(m)
    }

    /// Stored entries as an `nout × (#multi-indices)` matrix.
    pub fn as_matrix(&self) -> nalgebra::DMatrix<Complex64> {
        let m = self.indices.len();
        nalgebra::DMatrix::from_fn(self.nout, m, |i, a| self.values[i * m + a])
    }

    /// Frobenius norm of the expanded tensor (each stored entry counted
    /// `k!/α!` times).
    pub fn frobenius_norm(&self) -> f64 {
        weighted_frobenius(&self.indices, &self.as_matrix())
    }
}

/// Frobenius norm of an expanded symmetric tensor given per-multi-index
/// columns `entries` (`nout × #indices`).
pub(crate) fn weighted_frobenius(indices: &[Vec<u32>], entries: &nalgebra::DMatrix<Complex64>) -> f64 {
    let mut total = 0.0;
    for (a, alpha) in indices.iter().enumerate() {
        let w = multinomial_weight(alpha);
        total += w * entries.column(a).iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    total.sqrt()
}

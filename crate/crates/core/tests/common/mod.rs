#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use singcert::numlin::{self, complex_gaussian};
use singcert::poly::{parse_system, Point, PolySystem, Polynomial};
use singcert::Complex64;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn case_paths(name: &str) -> (PathBuf, PathBuf) {
    let dir = corpus_dir().join(name);
    (dir.join("system.txt"), dir.join("point.json"))
}

pub fn load_case(name: &str) -> (PolySystem, Point) {
    let (sys, pt) = case_paths(name);
    let f = parse_system(&std::fs::read_to_string(sys).unwrap()).unwrap();
    let x = Point::from_json(&std::fs::read_to_string(pt).unwrap()).unwrap();
    (f, x)
}

/// Corpus cases whose point is a simple multiple root.
pub const SIMPLE_MULTIPLE_CASES: &[&str] = &["cyclic3", "cyclic4", "kappa_lt_n", "cube_diffs_origin", "sin_truncation", "two_squares"];

/// Corpus cases at an exact multiple root (simple or not).
pub const MULTIPLE_ROOT_CASES: &[&str] =
    &["cyclic3", "cyclic4", "kappa_lt_n", "not_simple", "cube_diffs_origin", "sin_truncation", "two_squares"];

pub struct Constructed {
    pub f: PolySystem,
    pub x: Point,
    pub kappa: usize,
    pub simple: bool,
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// A system of degree ≤ 3 in `n ≤ 4` variables with a zero of breadth `κ` at a
/// random point.
///
/// In local coordinates `l = Q(x − x₀)` the equations are `l_i²` for `i < κ`
/// and `l_i + quadratic` otherwise, plus a random cubic each, then mixed by a
/// random matrix. The non-simple variant replaces `l_0²` by `l_0³`, which kills
/// one row of the second-order data.
pub fn constructed_system(seed: u64, simple: bool) -> Constructed {
    let mut rng = numlin::rng_for(seed, 0x636f_6e73);
    let n = rng.random_range(2..=4usize);
    let kappa = rng.random_range(1..=n);
    let x0: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng) * 0.5).collect();
    let q = numlin::random_unitary(&mut rng, n);
    let lin: Vec<Polynomial> = (0..n)
        .map(|j| {
            let mut p = Polynomial::zero(n);
            for k in 0..n {
                let shifted = &Polynomial::variable(n, k) - &Polynomial::constant(n, x0[k]);
                p = &p + &shifted.scale(q[(j, k)]);
            }
            p
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng| lin[rng.random_range(0..n)].clone();

    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let mut gi = if i == 0 && !simple {
            lin[0].pow(3)
        } else if i < kappa {
            lin[i].pow(2)
        } else {
            let quad = &pick(&mut rng) * &pick(&mut rng);
            &lin[i] + &quad.scale(complex_gaussian(&mut rng))
        };
        let cubic = &(&pick(&mut rng) * &pick(&mut rng)) * &pick(&mut rng);
        gi = &gi + &cubic.scale(complex_gaussian(&mut rng) * 0.3);
        g.push(gi);
    }
    let m = numlin::gaussian_matrix(&mut rng, n, n);
    let polys = (0..n).map(|i| (0..n).fold(Polynomial::zero(n), |acc, j| &acc + &g[j].scale(m[(i, j)]))).collect();
    Constructed { f: PolySystem::new(n, names(n), polys).unwrap(), x: Point::new(x0), kappa, simple }
}

/// Dense-ish random system: `n ≤ 4` variables, degree ≤ 4, up to six terms per equation.
pub fn random_system(seed: u64) -> PolySystem {
    let mut rng = numlin::rng_for(seed, 0x7261_6e64);
    let n = rng.random_range(1..=4usize);
    let polys = (0..n)
        .map(|_| {
            let terms = rng.random_range(1..=6usize);
            let mut p = Polynomial::zero(n);
            for _ in 0..terms {
                let deg = rng.random_range(0..=4u32);
                let mut e = vec![0u32; n];
                for _ in 0..deg {
                    e[rng.random_range(0..n)] += 1;
                }
                p.add_term(e, complex_gaussian(&mut rng));
            }
            p
        })
        .collect();
    PolySystem::new(n, names(n), polys).unwrap()
}

pub fn random_point(seed: u64, n: usize, scale: f64) -> Point {
    let mut rng = numlin::rng_for(seed, 0x706f_696e);
    Point::new((0..n).map(|_| complex_gaussian(&mut rng) * scale).collect())
}

//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use safe_sbl::problem::{normalize_columns, Problem, WeightVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn unit_vec(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    let v = gaussian_vec(rng, n);
    let norm = v.norm();
    v / norm
}

/// Gaussian dictionary with unit columns and a sparse-plus-noise response.
pub fn random_problem(m: usize, n: usize, seed: u64) -> Problem {
    let mut r = rng(seed);
    let raw = DMatrix::from_fn(m, n, |_, _| r.sample::<f64, _>(StandardNormal));
    let (dict, _) = normalize_columns(&raw).unwrap();
    let mut y = gaussian_vec(&mut r, m) * 0.1;
    for _ in 0..(n / 30).max(1) {
        let i = r.random_range(0..n);
        y.axpy(r.random_range(-2.0..2.0), &dict.column(i), 1.0);
    }
    Problem::new(dict, y, 1.0).unwrap()
}

pub fn random_weights(n: usize, seed: u64) -> WeightVector {
    let mut r = rng(seed);
    WeightVector::new(DVector::from_fn(n, |_, _| r.random_range(0.5..=2.0))).unwrap()
}

/// Maximum of `(η − c)ᵀφ` over `B(c, r) ∩ {nᵀ(η − c) ≤ −ψr}` by sampling
/// the boundary arc in the plane spanned by `n` and `φ`.
pub fn m1_oracle(t1: f64, t2: f64, r: f64, psi: f64, samples: usize) -> f64 {
    let d = (t2 * t2 - t1 * t1).max(0.0).sqrt();
    // η − c = a·n + b·e, with φ = t1·n + d·e.
    let value = |a: f64, b: f64| a * t1 + b * d;
    let cut = -psi * r;
    let mut best = f64::NEG_INFINITY;
    for k in 0..samples {
        let th = std::f64::consts::TAU * k as f64 / samples as f64;
        let (a, b) = (r * th.cos(), r * th.sin());
        if a <= cut {
            best = best.max(value(a, b));
        }
    }
    let half = r * (1.0 - psi * psi).max(0.0).sqrt();
    best = best.max(value(cut, half)).max(value(cut, -half));
    best
}

/// Orthonormal basis of span{v_k} by Gram–Schmidt, dropping dependent ones.
fn basis(vs: &[&DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vs {
        let mut w = (*v).clone();
        for b in &out {
            let p = b.dot(&w);
            w.axpy(-p, b, 1.0);
        }
        let n = w.norm();
        if n > 1e-9 {
            out.push(w / n);
        }
    }
    out
}

/// Maximum of `(η − c)ᵀφ` over the sphere cut by two half-spaces
/// `n_iᵀ(η − c) ≤ −ψ_i r`, from explicit geometry: the unconstrained
/// sphere maximizer, samples of each cap circle that satisfy the other
/// constraint, and the two corner points.
pub fn m2_oracle(
    n1: &DVector<f64>,
    n2: &DVector<f64>,
    phi: &DVector<f64>,
    psi1: f64,
    psi2: f64,
    r: f64,
    samples: usize,
) -> f64 {
    let e = basis(&[n1, n2, phi]);
    let to3 = |v: &DVector<f64>| -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, b) in e.iter().enumerate() {
            out[k] = b.dot(v);
        }
        out
    };
    let (a1, a2, f) = (to3(n1), to3(n2), to3(phi));
    let dot3 = |x: &[f64; 3], y: &[f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
    let (h1, h2) = (-psi1 * r, -psi2 * r);
    let slack = 1e-12 * r.max(1.0);
    let feasible = |x: &[f64; 3]| dot3(&a1, x) <= h1 + slack && dot3(&a2, x) <= h2 + slack;
    let mut best = f64::NEG_INFINITY;

    let fn_ = dot3(&f, &f).sqrt();
    if fn_ > 0.0 {
        let x = [r * f[0] / fn_, r * f[1] / fn_, r * f[2] / fn_];
        if feasible(&x) {
            best = best.max(r * fn_);
        }
    }
    // Circle {x : |x| = r, aᵀx = h} for each unit normal a.
    for (a, h) in [(a1, h1), (a2, h2)] {
        let rho = (r * r - h * h).max(0.0).sqrt();
        let center = [a[0] * h, a[1] * h, a[2] * h];
        let seed = if a[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let mut u = [0.0; 3];
        let p = dot3(&a, &seed);
        for k in 0..3 {
            u[k] = seed[k] - p * a[k];
        }
        let un = dot3(&u, &u).sqrt();
        for x in u.iter_mut() {
            *x /= un;
        }
        let w = [
            a[1] * u[2] - a[2] * u[1],
            a[2] * u[0] - a[0] * u[2],
            a[0] * u[1] - a[1] * u[0],
        ];
        for k in 0..samples {
            let th = std::f64::consts::TAU * k as f64 / samples as f64;
            let (c, s) = (th.cos(), th.sin());
            let x = [
                center[0] + rho * (c * u[0] + s * w[0]),
                center[1] + rho * (c * u[1] + s * w[1]),
                center[2] + rho * (c * u[2] + s * w[2]),
            ];
            if feasible(&x) {
                best = best.max(dot3(&f, &x));
            }
        }
    }
    // Corners: sphere ∩ both planes.
    let tau = dot3(&a1, &a2);
    let den = 1.0 - tau * tau;
    if den > 1e-12 {
        let al = (h1 - tau * h2) / den;
        let be = (h2 - tau * h1) / den;
        let base = [
            al * a1[0] + be * a2[0],
            al * a1[1] + be * a2[1],
            al * a1[2] + be * a2[2],
        ];
        let rem = r * r - dot3(&base, &base);
        if rem >= 0.0 {
            let mut cr = [
                a1[1] * a2[2] - a1[2] * a2[1],
                a1[2] * a2[0] - a1[0] * a2[2],
                a1[0] * a2[1] - a1[1] * a2[0],
            ];
            let cn = dot3(&cr, &cr).sqrt();
            for x in cr.iter_mut() {
                *x /= cn;
            }
            let s = rem.sqrt();
            for sign in [1.0, -1.0] {
                let x = [
                    base[0] + sign * s * cr[0],
                    base[1] + sign * s * cr[1],
                    base[2] + sign * s * cr[2],
                ];
                best = best.max(dot3(&f, &x));
            }
        }
    }
    best
}

/// Exact weighted-lasso minimizer by enumerating sign patterns; `n ≤ 8`.
pub fn lasso_by_enumeration(problem: &Problem, weights: &WeightVector) -> DVector<f64> {
    let n = problem.cols();
    assert!(n <= 8);
    let phi = problem.dict();
    let y = problem.response();
    let lam = problem.noise_level();
    let objective = |t: &DVector<f64>| {
        0.5 * (y - phi * t).norm_squared()
            + lam * (0..n).map(|i| weights.get(i) * t[i].abs()).sum::<f64>()
    };
    let mut best = DVector::zeros(n);
    let mut best_val = objective(&best);
    let total = 3usize.pow(n as u32);
    for code in 1..total {
        let mut c = code;
        let signs: Vec<i32> = (0..n)
            .map(|_| {
                let s = (c % 3) as i32 - 1;
                c /= 3;
                s
            })
            .collect();
        let support: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
        let k = support.len();
        // Generic data has a minimizer with at most `m` active columns.
        if k > phi.nrows() {
            continue;
        }
        let sub = DMatrix::from_fn(phi.nrows(), k, |r, j| phi[(r, support[j])]);
        let gram = sub.transpose() * &sub;
        let rhs = DVector::from_fn(k, |j, _| {
            sub.column(j).dot(y) - lam * weights.get(support[j]) * signs[support[j]] as f64
        });
        let Some(sol) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            continue;
        };
        if (0..k).any(|j| sol[j] * signs[support[j]] as f64 <= 0.0) {
            continue;
        }
        let mut t = DVector::zeros(n);
        for (j, &i) in support.iter().enumerate() {
            t[i] = sol[j];
        }
        let v = objective(&t);
        if v < best_val {
            best_val = v;
            best = t;
        }
    }
    best
}

/// Gaussian mass of `[a, b]` by composite Simpson quadrature of the pdf.
pub fn gaussian_mass(a: f64, b: f64, sigma: f64, intervals: usize) -> f64 {
    let pdf = |x: f64| {
        (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (std::f64::consts::TAU).sqrt())
    };
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = pdf(a) + pdf(b);
    for k in 1..n {
        s += pdf(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `Σ_Y⁻¹` and `log det Σ_Y` from an explicit inverse and LU determinant.
pub fn dense_sigma(problem: &Problem, gamma: &DVector<f64>) -> (DMatrix<f64>, f64) {
    let phi = problem.dict();
    let s = DMatrix::from_diagonal_element(phi.nrows(), phi.nrows(), problem.noise_level())
        + phi * DMatrix::from_diagonal(gamma) * phi.transpose();
    let logdet = s
        .clone()
        .lu()
        .u()
        .diagonal()
        .iter()
        .map(|d| d.abs().ln())
        .sum();
    (s.try_inverse().unwrap(), logdet)
}

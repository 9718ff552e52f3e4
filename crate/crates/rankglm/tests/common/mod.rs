//! Shared oracles for the integration tests: independent reference
//! implementations that the production code must agree with. Everything here
//! is written in the most literal way possible (plain loops, direct `exp`),
//! deliberately avoiding the stable-kernel shortcuts used by the crate.
#![allow(dead_code)]

use itertools::Itertools;
use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rankglm::{Beta, Dataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard-normal test instance (independent y and X).
pub fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let y = Array1::from_iter((0..n).map(|_| r.sample::<f64, _>(StandardNormal)));
    let x = Array2::from_shape_fn((n, d), |_| r.sample::<f64, _>(StandardNormal));
    Dataset::new(y, x).unwrap()
}

pub fn random_beta(d: usize, seed: u64) -> Beta {
    let mut r = rng(seed);
    Beta::new(Array1::from_iter(
        (0..d).map(|_| 0.5 * r.sample::<f64, _>(StandardNormal)),
    ))
    .unwrap()
}

/// Central finite-difference gradient of a scalar function of beta.
pub fn fd_gradient<F: Fn(&Beta) -> f64>(f: F, at: &Beta, h: f64) -> Array1<f64> {
    let d = at.len();
    let mut out = Array1::zeros(d);
    for j in 0..d {
        let mut plus = at.values().clone();
        let mut minus = at.values().clone();
        plus[j] += h;
        minus[j] -= h;
        out[j] = (f(&Beta::new(plus).unwrap()) - f(&Beta::new(minus).unwrap())) / (2.0 * h);
    }
    out
}

/// Central finite differences of a vector function (column j = d/d beta_j).
pub fn fd_jacobian<F: Fn(&Beta) -> Array1<f64>>(f: F, at: &Beta, h: f64) -> Array2<f64> {
    let d = at.len();
    let rows = f(at).len();
    let mut out = Array2::zeros((rows, d));
    for j in 0..d {
        let mut plus = at.values().clone();
        let mut minus = at.values().clone();
        plus[j] += h;
        minus[j] -= h;
        let diff =
            (f(&Beta::new(plus).unwrap()) - f(&Beta::new(minus).unwrap())) / (2.0 * h);
        out.column_mut(j).assign(&diff);
    }
    out
}

fn observed(data: &Dataset, i: usize) -> bool {
    data.delta().map_or(true, |d| d[i] == 1)
}

/// Literal double-sum evaluation of the Hajek covariance estimator, O(n^2 d^2)
/// with direct exponentials.
pub fn brute_hajek(data: &Dataset, beta: &Beta) -> Array2<f64> {
    let n = data.n();
    let d = data.dim();
    let u: Vec<f64> = (0..n)
        .map(|i| {
            data.x()
                .row(i)
                .iter()
                .zip(beta.values())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    let mut sigma = Array2::zeros((d, d));
    for i in 0..n {
        let mut g = Array1::<f64>::zeros(d);
        if observed(data, i) {
            for j in 0..n {
                if j == i || !observed(data, j) {
                    continue;
                }
                let dy = data.y()[i] - data.y()[j];
                let r = f64::exp(-dy * (u[i] - u[j]));
                let w = r / (1.0 + r);
                for c in 0..d {
                    g[c] += w * dy * (data.x()[[i, c]] - data.x()[[j, c]]);
                }
            }
        }
        g /= (n - 1) as f64;
        for a in 0..d {
            for b in 0..d {
                sigma[[a, b]] += g[a] * g[b];
            }
        }
    }
    sigma / n as f64
}

/// Third-order likelihood by direct enumeration of all 3! response
/// assignments per triple (no log-sum-exp, mid-range instances only).
pub fn perm_third_order(data: &Dataset, beta: &Beta) -> f64 {
    let n = data.n();
    let u: Vec<f64> = (0..n)
        .map(|i| {
            data.x()
                .row(i)
                .iter()
                .zip(beta.values())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect();
    let mut acc = 0.0;
    let mut triples = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let idx = [i, j, k];
                let mut denom = 0.0;
                for perm in idx.iter().permutations(3) {
                    let mut e = 0.0;
                    for (&pos, &&src) in idx.iter().zip(perm.iter()) {
                        e += u[pos] * (data.y()[src] - data.y()[pos]);
                    }
                    denom += f64::exp(e);
                }
                acc += denom.ln();
                triples += 1;
            }
        }
    }
    -acc / triples as f64
}

/// Linear-model instance y = X beta* + eps with standard-normal X and eps.
pub fn linear_model_dataset(n: usize, beta_star: &[f64], seed: u64) -> Dataset {
    let mut r = rng(seed);
    let d = beta_star.len();
    let x = Array2::from_shape_fn((n, d), |_| r.sample::<f64, _>(StandardNormal));
    let eps = Array1::from_iter((0..n).map(|_| r.sample::<f64, _>(StandardNormal)));
    let y = x.dot(&Array1::from_iter(beta_star.iter().cloned())) + &eps;
    Dataset::new(y, x).unwrap()
}

/// Damped Newton ascent on the unpenalized pairwise likelihood; an
/// independent reference for low-dimensional unpenalized fits.
pub fn newton_unpenalized(data: &Dataset, max_iter: usize) -> Beta {
    let mut beta = Beta::zeros(data.dim());
    let mut f = rankglm::pairwise_loglik(data, &beta).unwrap();
    for _ in 0..max_iter {
        let g = rankglm::pairwise_gradient(data, &beta).unwrap();
        if g.iter().fold(0.0f64, |a, v| a.max(v.abs())) < 1e-12 {
            break;
        }
        let h = rankglm::pairwise_hessian(data, &beta).unwrap();
        let delta = dense_solve(&h, &g); // H is negative definite: ascent is beta - delta
        let mut t = 1.0;
        loop {
            let cand = Beta::new(beta.values() - &(delta.clone() * t)).unwrap();
            let fc = rankglm::pairwise_loglik(data, &cand).unwrap();
            if fc >= f - 1e-12 || t < 1e-8 {
                beta = cand;
                f = fc;
                break;
            }
            t *= 0.5;
        }
    }
    beta
}

/// Eigenvalue range of a symmetric matrix (nalgebra reference).
pub fn sym_eig_range(m: &Array2<f64>) -> (f64, f64) {
    let n = m.nrows();
    let dm = nalgebra::DMatrix::from_row_iterator(n, n, m.iter().cloned());
    let eig = dm.symmetric_eigen();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Dense linear solve (nalgebra LU reference).
pub fn dense_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = a.nrows();
    let dm = nalgebra::DMatrix::from_row_iterator(n, n, a.iter().cloned());
    let dv = nalgebra::DVector::from_iterator(n, b.iter().cloned());
    let sol = dm.lu().solve(&dv).expect("singular system in test oracle");
    Array1::from_iter(sol.iter().cloned())
}

/// Max |entry| difference between two matrices.
pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = ranks(x);
    let ry = ranks(y);
    pearson(&rx, &ry)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in s.iter().enumerate() {
        let f = cdf(v);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic two-sided KS critical value at level alpha for sample size n.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    // K(alpha): P(sup > K/sqrt(n)) = alpha; standard values.
    let k = match alpha {
        a if (a - 0.01).abs() < 1e-12 => 1.62762,
        a if (a - 0.05).abs() < 1e-12 => 1.35810,
        _ => panic!("unsupported KS level"),
    };
    k / (n as f64).sqrt()
}

/// Partition a full Hessian into the target row (without the diagonal entry)
/// and the nuisance block, for target coordinate j.
pub fn hessian_blocks(h: &Array2<f64>, j: usize) -> (Array1<f64>, Array2<f64>) {
    let d = h.nrows();
    let others: Vec<usize> = (0..d).filter(|&k| k != j).collect();
    let bvec = Array1::from_iter(others.iter().map(|&g| h[[j, g]]));
    let amat = Array2::from_shape_fn((d - 1, d - 1), |(r, c)| h[[others[r], others[c]]]);
    (bvec, amat)
}

/// Brute-force minimum of ||w||_1 subject to ||bvec - amat w||_inf <= lambda,
/// by enumerating every candidate vertex: a subset of coordinates pinned to
/// zero plus a signed subset of constraints held tight, solved as a square
/// linear system. Exponential in the dimension; fine for m <= 6.
pub fn brute_min_l1(amat: &Array2<f64>, bvec: &Array1<f64>, lambda: f64) -> f64 {
    let m = bvec.len();
    let feasible = |w: &Array1<f64>| -> bool {
        let r = bvec - &amat.dot(w);
        r.iter().all(|v| v.abs() <= lambda + 1e-9)
    };
    let mut best = f64::INFINITY;
    let zero = Array1::<f64>::zeros(m);
    if feasible(&zero) {
        return 0.0;
    }
    let all: Vec<usize> = (0..m).collect();
    for t in 0..m {
        // t coordinates free (nonzero), m - t pinned to zero; t constraints
        // tight with a sign choice.
        let free_count = t + 1;
        for free in all.iter().copied().combinations(free_count) {
            for rows in all.iter().copied().combinations(free_count) {
                for signs in 0..(1usize << free_count) {
                    // Solve (amat w)_rows = bvec_rows - sigma * lambda on the
                    // free coordinates.
                    let sub = nalgebra::DMatrix::from_fn(free_count, free_count, |r, c| {
                        amat[[rows[r], free[c]]]
                    });
                    let rhs = nalgebra::DVector::from_fn(free_count, |r, _| {
                        let sigma = if signs >> r & 1 == 1 { 1.0 } else { -1.0 };
                        bvec[rows[r]] - sigma * lambda
                    });
                    let Some(sol) = sub.lu().solve(&rhs) else {
                        continue;
                    };
                    let mut w = Array1::<f64>::zeros(m);
                    for (c, &fc) in free.iter().enumerate() {
                        w[fc] = sol[c];
                    }
                    if feasible(&w) {
                        let l1: f64 = w.iter().map(|v| v.abs()).sum();
                        if l1 < best {
                            best = l1;
                        }
                    }
                }
            }
        }
    }
    best
}

/// Golden-section maximizer of a unimodal function on [lo, hi].
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

//! Symmetric eigenvalue solvers.
//!
//! [`symmetric_eigen`] is a dense Householder tridiagonalization followed by
//! implicit QL iterations. [`largest_eigenvalues`] is a thick-restart Lanczos
//! method with full reorthogonalization for operators given as matvec
//! closures; the projected problems are solved with the dense kernel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Eigen-decomposition of a dense symmetric `n x n` row-major matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of a row-major `n x n` matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a[i * n..(i + 1) * n].to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vecs[row * n + col] = v[row][src];
        }
    }
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    symmetric_eigen(a, n).0
}

// Householder reduction to tridiagonal form; `v` ends up holding the
// accumulated orthogonal transform.
fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[n - 1][j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e), rotating the columns of `v`.
fn tql2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().skip(l + 2) {
                    *item -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanczosConfig {
    /// Relative residual tolerance for accepting a Ritz value.
    pub tol: f64,
    pub max_restarts: usize,
    /// Basis size before a restart.
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_restarts: 300,
            krylov_dim: 64,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RitzValues {
    /// Largest Ritz values, descending.
    pub values: Vec<f64>,
    /// Largest residual norm among the returned values.
    pub residual: f64,
    pub converged: bool,
    pub restarts: usize,
    /// The Krylov space became invariant, so the values are exact.
    pub invariant: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// The `wanted` largest eigenvalues of a symmetric operator of dimension `n`.
///
/// Multiple eigenvalues are generally reported once: the method sees one copy
/// per eigenspace reachable from a random start vector.
pub fn largest_eigenvalues<F>(n: usize, op: F, wanted: usize, cfg: &LanczosConfig) -> RitzValues
where
    F: Fn(&[f64], &mut [f64]),
{
    let wanted = wanted.min(n);
    if n == 0 || wanted == 0 {
        return RitzValues {
            values: Vec::new(),
            residual: 0.0,
            converged: true,
            restarts: 0,
            invariant: true,
        };
    }
    let m = n.min(cfg.krylov_dim.max(2 * wanted + 8));
    let keep = (wanted + 4).min(m.saturating_sub(2)).max(wanted.min(m - 1));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut start: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = dot(&start, &start).sqrt();
    start.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = vec![start];
    let mut t = vec![0.0; m * m];
    let mut w = vec![0.0; n];
    let mut scale: f64 = 0.0;
    let mut restarts = 0;
    loop {
        let mut invariant = false;
        let mut beta = 0.0;
        while basis.len() <= m {
            let j = basis.len() - 1;
            op(&basis[j], &mut w);
            let mut coef = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let h = dot(v, &w);
                    coef[i] += h;
                    axpy(-h, v, &mut w);
                }
            }
            for (i, &c) in coef.iter().enumerate() {
                t[i * m + j] = c;
                t[j * m + i] = c;
            }
            scale = scale.max(coef.iter().map(|c| c.abs()).sum::<f64>());
            beta = dot(&w, &w).sqrt();
            if beta <= 1e-12 * scale.max(1.0) {
                invariant = true;
                beta = 0.0;
                break;
            }
            if j + 1 == m {
                break;
            }
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let k = basis.len();
        let mut tk = vec![0.0; k * k];
        for i in 0..k {
            tk[i * k..(i + 1) * k].copy_from_slice(&t[i * m..i * m + k]);
        }
        let (vals, vecs) = symmetric_eigen(&tk, k);
        // descending order
        let order: Vec<usize> = (0..k).rev().collect();
        let top = wanted.min(k);
        let tol = cfg.tol * vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let resid: Vec<f64> = order.iter().map(|&c| (beta * vecs[(k - 1) * k + c]).abs()).collect();
        let residual = resid[..top].iter().copied().fold(0.0, f64::max);
        let converged = invariant || residual <= tol;
        if converged || restarts >= cfg.max_restarts || k < m {
            return RitzValues {
                values: order[..top].iter().map(|&c| vals[c]).collect(),
                residual,
                converged,
                restarts,
                invariant,
            };
        }
        restarts += 1;
        // thick restart: keep the leading Ritz vectors plus the residual direction
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(keep + 1);
        for &c in order.iter().take(keep) {
            let mut y = vec![0.0; n];
            for (i, v) in basis.iter().enumerate() {
                axpy(vecs[i * k + c], v, &mut y);
            }
            kept.push(y);
        }
        let resid_dir: Vec<f64> = w.iter().map(|x| x / beta).collect();
        t.iter_mut().for_each(|x| *x = 0.0);
        for (i, &c) in order.iter().take(keep).enumerate() {
            t[i * m + i] = vals[c];
        }
        kept.push(resid_dir);
        basis = kept;
    }
}

/// Collapses a descending list into values separated by more than `tol`.
pub fn distinct_descending(values: &[f64], tol: f64) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if out.last().is_none_or(|&last| last - v > tol) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_sym(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn dense_matches_nalgebra() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (30, 4)] {
            let a = random_sym(n, seed);
            let (vals, vecs) = symmetric_eigen(&a, n);
            let m = nalgebra::DMatrix::from_row_slice(n, n, &a);
            let mut want: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            want.sort_by(f64::total_cmp);
            for (x, y) in vals.iter().zip(&want) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
            // A v = lambda v
            for c in 0..n {
                for r in 0..n {
                    let av: f64 = (0..n).map(|k| a[r * n + k] * vecs[k * n + c]).sum();
                    assert_abs_diff_eq!(av, vals[c] * vecs[r * n + c], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn lanczos_top_values() {
        let n = 150;
        let a = random_sym(n, 9);
        let exact = symmetric_eigenvalues(&a, n);
        let cfg = LanczosConfig {
            krylov_dim: 30,
            ..Default::default()
        };
        let op = |x: &[f64], y: &mut [f64]| {
            for r in 0..n {
                y[r] = (0..n).map(|k| a[r * n + k] * x[k]).sum();
            }
        };
        let res = largest_eigenvalues(n, op, 3, &cfg);
        assert!(res.converged, "{res:?}");
        for (i, v) in res.values.iter().enumerate() {
            assert_abs_diff_eq!(*v, exact[n - 1 - i], epsilon = 1e-7);
        }
    }

    #[test]
    fn invariant_space_on_zero_operator() {
        let res = largest_eigenvalues(5, |_x, y| y.fill(0.0), 2, &LanczosConfig::default());
        assert!(res.invariant);
        assert_eq!(res.values, vec![0.0]);
    }

    #[test]
    fn distinct_merge() {
        assert_eq!(distinct_descending(&[3.0, 3.0 - 1e-12, 1.0, 0.5], 1e-9), vec![3.0, 1.0, 0.5]);
    }
}

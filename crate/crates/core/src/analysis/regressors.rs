//! Linear regressors with an unpenalized intercept.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressorKind {
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
    Huber,
    Pcr,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 6] = [
        RegressorKind::Ols,
        RegressorKind::Ridge,
        RegressorKind::Lasso,
        RegressorKind::ElasticNet,
        RegressorKind::Huber,
        RegressorKind::Pcr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegressorKind::Ols => "ols",
            RegressorKind::Ridge => "ridge",
            RegressorKind::Lasso => "lasso",
            RegressorKind::ElasticNet => "elastic-net",
            RegressorKind::Huber => "huber",
            RegressorKind::Pcr => "pcr",
        }
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RegressorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegressorKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown regressor `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressorParams {
    pub ridge_alpha: f64,
    pub lasso_alpha: f64,
    pub elastic_net_alpha: f64,
    pub elastic_net_ratio: f64,
    pub huber_delta: f64,
    /// Principal components kept by PCR; `None` means `min(p, 8)`.
    pub pcr_components: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for RegressorParams {
    fn default() -> Self {
        Self {
            ridge_alpha: 1.0,
            lasso_alpha: 1e-3,
            elastic_net_alpha: 1e-3,
            elastic_net_ratio: 0.5,
            huber_delta: 1.35,
            pcr_components: None,
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// The design was singular and a small ridge penalty was used instead.
    pub ridge_fallback: bool,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        xs.iter().map(|r| self.predict_row(r)).collect()
    }
}

const FALLBACK_ALPHA: f64 = 1e-6;

struct Centered {
    x: DMatrix<f64>,
    y: DVector<f64>,
    x_mean: DVector<f64>,
    y_mean: f64,
}

fn center(xs: &[Vec<f64>], y: &[f64], w: Option<&[f64]>) -> Centered {
    let n = xs.len();
    let p = xs.first().map_or(0, Vec::len);
    let weights: Vec<f64> = w.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let wsum: f64 = weights.iter().sum();
    let mut x_mean = DVector::zeros(p);
    let mut y_mean = 0.0;
    for i in 0..n {
        for j in 0..p {
            x_mean[j] += weights[i] * xs[i][j];
        }
        y_mean += weights[i] * y[i];
    }
    x_mean /= wsum;
    y_mean /= wsum;
    let x = DMatrix::from_fn(n, p, |i, j| xs[i][j] - x_mean[j]);
    let y = DVector::from_fn(n, |i, _| y[i] - y_mean);
    Centered { x, y, x_mean, y_mean }
}

fn finish(c: &Centered, beta: DVector<f64>, ridge_fallback: bool) -> LinearModel {
    let intercept = c.y_mean - beta.dot(&c.x_mean);
    LinearModel {
        intercept,
        coef: beta.iter().copied().collect(),
        ridge_fallback,
    }
}

fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> Option<DVector<f64>> {
    let p = x.ncols();
    let gram = x.transpose() * x + DMatrix::identity(p, p) * alpha;
    let rhs = x.transpose() * y;
    gram.cholesky().map(|ch| ch.solve(&rhs))
}

pub fn fit_ols(xs: &[Vec<f64>], y: &[f64]) -> LinearModel {
    let c = center(xs, y, None);
    let p = c.x.ncols();
    if p == 0 {
        return finish(&c, DVector::zeros(0), false);
    }
    let svd = c.x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let rank_ok = svd.singular_values.len() == p && svd.singular_values.iter().all(|&s| s > 1e-10 * smax.max(1e-300));
    if !rank_ok || c.x.nrows() < p {
        let beta = ridge_solve(&c.x, &c.y, FALLBACK_ALPHA).unwrap_or_else(|| DVector::zeros(p));
        return finish(&c, beta, true);
    }
    let beta = svd.solve(&c.y, 0.0).expect("svd computed with both factors");
    finish(&c, beta, false)
}

pub fn fit_ridge(xs: &[Vec<f64>], y: &[f64], alpha: f64) -> LinearModel {
    let c = center(xs, y, None);
    let p = c.x.ncols();
    match ridge_solve(&c.x, &c.y, alpha.max(0.0)) {
        Some(beta) => finish(&c, beta, false),
        None => {
            let beta = ridge_solve(&c.x, &c.y, alpha.max(FALLBACK_ALPHA)).unwrap_or_else(|| DVector::zeros(p));
            finish(&c, beta, true)
        }
    }
}

fn soft_threshold(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

/// Minimizes `1/(2n) |y - Xb|^2 + alpha*ratio*|b|_1 + alpha*(1-ratio)/2*|b|^2` by coordinate descent.
pub fn fit_elastic_net(xs: &[Vec<f64>], y: &[f64], alpha: f64, ratio: f64, params: &RegressorParams) -> LinearModel {
    let c = center(xs, y, None);
    let (n, p) = (c.x.nrows(), c.x.ncols());
    let nf = n as f64;
    let l1 = alpha * ratio * nf;
    let l2 = alpha * (1.0 - ratio) * nf;
    let norms: Vec<f64> = (0..p).map(|j| c.x.column(j).norm_squared()).collect();
    let mut beta = DVector::<f64>::zeros(p);
    let mut resid = c.y.clone();
    let y_scale = c.y.amax().max(1e-300);
    for _ in 0..params.max_iter {
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = c.x.column(j);
            let rho = col.dot(&resid) + norms[j] * beta[j];
            let new = soft_threshold(rho, l1) / (norms[j] + l2);
            let step = new - beta[j];
            if step != 0.0 {
                resid.axpy(-step, &col, 1.0);
                beta[j] = new;
                max_step = max_step.max(step.abs() * norms[j].sqrt());
            }
        }
        if max_step <= params.tol * y_scale {
            break;
        }
    }
    finish(&c, beta, false)
}

pub fn fit_lasso(xs: &[Vec<f64>], y: &[f64], alpha: f64, params: &RegressorParams) -> LinearModel {
    fit_elastic_net(xs, y, alpha, 1.0, params)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Huber loss by iteratively reweighted least squares with a MAD scale estimate.
pub fn fit_huber(xs: &[Vec<f64>], y: &[f64], delta: f64, params: &RegressorParams) -> LinearModel {
    let mut model = fit_ols(xs, y);
    for _ in 0..100 {
        let resid: Vec<f64> = xs.iter().zip(y).map(|(r, &t)| t - model.predict_row(r)).collect();
        let scale = median(resid.iter().map(|r| r.abs()).collect()) / 0.6745;
        if scale <= 1e-12 {
            break;
        }
        let cut = delta * scale;
        let new_w: Vec<f64> = resid
            .iter()
            .map(|r| if r.abs() <= cut { 1.0 } else { cut / r.abs() })
            .collect();
        let c = center(xs, y, Some(&new_w));
        let sw: Vec<f64> = new_w.iter().map(|v| v.sqrt()).collect();
        let xw = DMatrix::from_fn(c.x.nrows(), c.x.ncols(), |i, j| c.x[(i, j)] * sw[i]);
        let yw = DVector::from_fn(c.y.len(), |i, _| c.y[i] * sw[i]);
        let (beta, fallback) = match ridge_solve(&xw, &yw, 1e-12) {
            Some(b) => (b, false),
            None => (
                ridge_solve(&xw, &yw, FALLBACK_ALPHA).unwrap_or_else(|| DVector::zeros(c.x.ncols())),
                true,
            ),
        };
        let next = finish(&c, beta, fallback || model.ridge_fallback);
        let change = next
            .coef
            .iter()
            .zip(&model.coef)
            .map(|(a, b)| (a - b).abs())
            .fold((next.intercept - model.intercept).abs(), f64::max);
        model = next;
        if change <= params.tol.max(1e-12) {
            break;
        }
    }
    model
}

/// Principal-component regression on the `k` leading components of centered X.
pub fn fit_pcr(xs: &[Vec<f64>], y: &[f64], k: usize) -> LinearModel {
    let c = center(xs, y, None);
    let p = c.x.ncols();
    if p == 0 || c.x.nrows() == 0 {
        return finish(&c, DVector::zeros(p), false);
    }
    let svd = c.x.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let smax = svd.singular_values.max();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut beta = DVector::zeros(p);
    for &i in order.iter().take(k) {
        let s = svd.singular_values[i];
        if s <= 1e-10 * smax {
            continue;
        }
        let coef = u.column(i).dot(&c.y) / s;
        beta += vt.row(i).transpose() * coef;
    }
    finish(&c, beta, false)
}

pub fn fit(kind: RegressorKind, xs: &[Vec<f64>], y: &[f64], params: &RegressorParams) -> LinearModel {
    match kind {
        RegressorKind::Ols => fit_ols(xs, y),
        RegressorKind::Ridge => fit_ridge(xs, y, params.ridge_alpha),
        RegressorKind::Lasso => fit_lasso(xs, y, params.lasso_alpha, params),
        RegressorKind::ElasticNet => fit_elastic_net(xs, y, params.elastic_net_alpha, params.elastic_net_ratio, params),
        RegressorKind::Huber => fit_huber(xs, y, params.huber_delta, params),
        RegressorKind::Pcr => {
            let p = xs.first().map_or(0, Vec::len);
            fit_pcr(xs, y, params.pcr_components.unwrap_or(p.min(8)))
        }
    }
}

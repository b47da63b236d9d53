// Copyright 2026 The hyperlens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kmeans::plus_plus;
use super::{canonical_rows, check_k, params, restore_order, Algorithm, ClusterAssignment, ClusterError};
use crate::seed::mix;
use crate::text_index::TermDocMatrix;

pub const DEFAULT_SVD_DIMS: usize = 32;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;
pub const DEFAULT_EM_MAX_ITER: usize = 200;
pub const DEFAULT_EM_RESTARTS: usize = 3;
const EM_TOL: f64 = 1e-8;
const EMPTY_MASS: f64 = 1e-8;

/// Rank-`dims` projection `U_d Σ_d` of the rows, computed from the
/// eigendecomposition of the Gram matrix. Eigenvector signs are fixed so
/// the largest-magnitude entry is positive.
pub fn project_svd(data: &[Vec<f64>], dims: usize) -> Vec<Vec<f64>> {
    let n = data.len();
    if n == 0 {
        return Vec::new();
    }
    let gram = DMatrix::from_fn(n, n, |i, j| data[i].iter().zip(&data[j]).map(|(a, b)| a * b).sum::<f64>());
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&j| eig.eigenvalues[j] > top * 1e-12 && eig.eigenvalues[j] > 0.0)
        .take(dims.max(1))
        .collect();
    let mut out = vec![Vec::with_capacity(keep.len()); n];
    for &j in &keep {
        let col = eig.eigenvectors.column(j);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = eig.eigenvalues[j].sqrt() * sign;
        for i in 0..n {
            out[i].push(col[i] * scale);
        }
    }
    if keep.is_empty() {
        return vec![vec![0.0]; n];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Log-likelihood before each M-step.
    pub ll_trace: Vec<f64>,
    /// Trace indices where a component was reseeded; the trace is
    /// non-decreasing between consecutive segment starts.
    pub segment_starts: Vec<usize>,
    pub labels: Vec<usize>,
}

impl GmmFit {
    pub fn log_likelihood(&self) -> f64 {
        *self.ll_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

fn global_variance(data: &[Vec<f64>], floor: f64) -> Vec<f64> {
    let n = data.len() as f64;
    let dims = data[0].len();
    (0..dims)
        .map(|d| {
            let mean = data.iter().map(|x| x[d]).sum::<f64>() / n;
            let var = data.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / n;
            var.max(floor)
        })
        .collect()
}

fn log_joint(x: &[f64], w: f64, mean: &[f64], var: &[f64]) -> f64 {
    let mut s = w.ln();
    for ((v, m), s2) in x.iter().zip(mean).zip(var) {
        s -= 0.5 * (2.0 * PI * s2).ln() + (v - m).powi(2) / (2.0 * s2);
    }
    s
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = j;
        }
    }
    best
}

/// Diagonal-covariance Gaussian mixture fitted by EM. Means start from a
/// k-means++ draw, variances from the pooled per-dimension variance.
pub fn fit_gmm(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    var_floor: f64,
) -> Result<GmmFit, ClusterError> {
    let n = data.len();
    check_k(k, n)?;
    let global = global_variance(data, var_floor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<Vec<f64>> = plus_plus(data, k, &mut rng).iter().map(|&i| data[i].clone()).collect();
    let mut variances = vec![global.clone(); k];
    let mut weights = vec![1.0 / k as f64; k];
    let mut trace: Vec<f64> = Vec::new();
    let mut segment_starts = vec![0];
    let mut resp = vec![vec![0.0; k]; n];

    for _ in 0..max_iter.max(1) {
        let mut ll = 0.0f64;
        let mut point_ll = vec![0.0; n];
        for (i, x) in data.iter().enumerate() {
            let lj: Vec<f64> = (0..k).map(|j| log_joint(x, weights[j], &means[j], &variances[j])).collect();
            let lse = log_sum_exp(&lj);
            point_ll[i] = lse;
            ll += lse;
            for j in 0..k {
                resp[i][j] = (lj[j] - lse).exp();
            }
        }
        let segment_start = *segment_starts.last().unwrap();
        let converged = trace.len() > segment_start
            && (ll - trace[trace.len() - 1]).abs() <= EM_TOL * (1.0 + ll.abs());
        trace.push(ll);
        if converged {
            break;
        }

        let mut reseeded = false;
        for j in 0..k {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            if nj < EMPTY_MASS {
                let mut worst = 0;
                for i in 1..n {
                    if point_ll[i] < point_ll[worst] {
                        worst = i;
                    }
                }
                means[j] = data[worst].clone();
                variances[j] = global.clone();
                weights[j] = 1.0 / n as f64;
                point_ll[worst] = f64::INFINITY;
                reseeded = true;
                continue;
            }
            weights[j] = nj / n as f64;
            let dims = data[0].len();
            let mut mean = vec![0.0; dims];
            for (x, r) in data.iter().zip(&resp) {
                for d in 0..dims {
                    mean[d] += r[j] * x[d];
                }
            }
            mean.iter_mut().for_each(|m| *m /= nj);
            let mut var = vec![0.0; dims];
            for (x, r) in data.iter().zip(&resp) {
                for d in 0..dims {
                    var[d] += r[j] * (x[d] - mean[d]).powi(2);
                }
            }
            for v in var.iter_mut() {
                *v = (*v / nj).max(var_floor);
            }
            means[j] = mean;
            variances[j] = var;
        }
        if reseeded {
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            segment_starts.push(trace.len());
        }
    }
    let labels: Vec<usize> = resp.iter().map(|r| argmax(r)).collect();
    Ok(GmmFit {
        weights,
        means,
        variances,
        ll_trace: trace,
        segment_starts,
        labels,
    })
}

pub fn em_mixture(m: &TermDocMatrix, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    check_k(k, rows.len())?;
    let projected = project_svd(&rows, DEFAULT_SVD_DIMS);
    let mut best: Option<GmmFit> = None;
    for r in 0..DEFAULT_EM_RESTARTS {
        let fit = fit_gmm(&projected, k, mix(seed, r as u64), DEFAULT_EM_MAX_ITER, DEFAULT_VARIANCE_FLOOR)?;
        if best.as_ref().is_none_or(|b| fit.log_likelihood() > b.log_likelihood()) {
            best = Some(fit);
        }
    }
    let fit = best.unwrap();
    Ok(ClusterAssignment::from_labels(
        Algorithm::Em,
        m.doc_ids.clone(),
        &restore_order(&order, &fit.labels),
        params([
            ("k", k.to_string()),
            ("svd_dims", DEFAULT_SVD_DIMS.to_string()),
            ("variance_floor", DEFAULT_VARIANCE_FLOOR.to_string()),
            ("restarts", DEFAULT_EM_RESTARTS.to_string()),
        ]),
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::fixtures::{separable, split_at_five};
    use rand::Rng;

    #[test]
    fn one_component_is_closed_form() {
        let data = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![2.0, 6.0], vec![6.0, 2.0]];
        let fit = fit_gmm(&data, 1, 0, 50, 1e-6).unwrap();
        assert!((fit.means[0][0] - 3.0).abs() < 1e-9);
        assert!((fit.means[0][1] - 2.0).abs() < 1e-9);
        assert!((fit.variances[0][0] - 3.5).abs() < 1e-9);
        assert!((fit.variances[0][1] - 6.0).abs() < 1e-9);
        assert!((fit.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_floor_holds() {
        let data = vec![vec![1.0], vec![1.0], vec![1.0]];
        let fit = fit_gmm(&data, 1, 0, 10, 1e-6).unwrap();
        assert_eq!(fit.variances[0][0], 1e-6);
    }

    #[test]
    fn log_likelihood_is_monotone_within_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<Vec<f64>> = (0..80)
            .map(|i| (0..3).map(|_| rng.gen::<f64>() + (i % 4) as f64).collect())
            .collect();
        for seed in 0..5 {
            let fit = fit_gmm(&data, 4, seed, 200, 1e-6).unwrap();
            let mut bounds = fit.segment_starts.clone();
            bounds.push(fit.ll_trace.len());
            for seg in bounds.windows(2) {
                for w in fit.ll_trace[seg[0]..seg[1]].windows(2) {
                    assert!(w[1] >= w[0] - 1e-8, "{} < {}", w[1], w[0]);
                }
            }
        }
    }

    #[test]
    fn projection_preserves_inner_products() {
        let data = vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0], vec![3.0, 0.0, 1.0]];
        let p = project_svd(&data, 3);
        for i in 0..3 {
            for j in 0..3 {
                let a: f64 = data[i].iter().zip(&data[j]).map(|(x, y)| x * y).sum();
                let b: f64 = p[i].iter().zip(&p[j]).map(|(x, y)| x * y).sum();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn separates_two_groups() {
        let a = em_mixture(&separable(), 2, 5).unwrap();
        assert!(split_at_five(&a.clusters));
    }
}

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

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{canonical_rows, check_k, params, restore_order, sq_dist, Algorithm, ClusterAssignment, ClusterError};
use crate::seed::mix;
use crate::text_index::TermDocMatrix;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_KMEANS_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each update step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::INFINITY)
    }
}

/// k-means++ seeding: first center uniform, later ones with probability
/// proportional to squared distance from the nearest chosen center.
pub(crate) fn plus_plus(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = data.len();
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &data[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        } else {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.unwrap()
        };
        chosen.push(next);
        for (i, x) in data.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(x, &data[next]));
        }
    }
    chosen
}

fn nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn means(data: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dims = data[0].len();
    let mut sums = vec![vec![0.0; dims]; k];
    let mut counts = vec![0usize; k];
    for (x, &l) in data.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(x) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

fn objective(data: &[Vec<f64>], labels: &[usize], centers: &[Vec<f64>]) -> f64 {
    data.iter().zip(labels).map(|(x, &l)| sq_dist(x, &centers[l])).sum()
}

/// Any empty cluster takes the point farthest from its current center,
/// drawn from clusters that keep at least one member.
fn fill_empty(data: &[Vec<f64>], labels: &mut [usize], centers: &[Vec<f64>], k: usize) {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, x) in data.iter().enumerate() {
            if counts[labels[i]] < 2 {
                continue;
            }
            let d = sq_dist(x, &centers[labels[i]]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            counts[labels[i]] -= 1;
            labels[i] = j;
            counts[j] = 1;
        }
    }
}

fn lloyd(data: &[Vec<f64>], mut centers: Vec<Vec<f64>>, max_iter: usize) -> KMeansFit {
    let k = centers.len();
    let mut labels: Vec<usize> = vec![usize::MAX; data.len()];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let mut next: Vec<usize> = data.par_iter().map(|x| nearest(x, &centers).0).collect();
        fill_empty(data, &mut next, &centers, k);
        let changed = next != labels;
        labels = next;
        centers = means(data, &labels, k);
        trace.push(objective(data, &labels, &centers));
        if !changed {
            break;
        }
    }
    KMeansFit {
        labels,
        centers,
        objective_trace: trace,
        iterations,
    }
}

/// Lloyd's algorithm from `restarts` k-means++ seedings; the run with the
/// lowest final objective wins, earlier runs on ties.
pub fn kmeans_fit(
    data: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    restarts: usize,
) -> Result<KMeansFit, ClusterError> {
    check_k(k, data.len())?;
    let mut best: Option<KMeansFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, r as u64));
        let init = plus_plus(data, k, &mut rng);
        let centers = init.iter().map(|&i| data[i].clone()).collect();
        let fit = lloyd(data, centers, max_iter);
        if best.as_ref().is_none_or(|b| fit.objective() < b.objective()) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

pub fn kmeans(m: &TermDocMatrix, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    let fit = kmeans_fit(&rows, k, seed, DEFAULT_MAX_ITER, DEFAULT_KMEANS_RESTARTS)?;
    Ok(ClusterAssignment::from_labels(
        Algorithm::KMeans,
        m.doc_ids.clone(),
        &restore_order(&order, &fit.labels),
        params([
            ("k", k.to_string()),
            ("max_iter", DEFAULT_MAX_ITER.to_string()),
            ("restarts", DEFAULT_KMEANS_RESTARTS.to_string()),
        ]),
        seed,
    ))
}

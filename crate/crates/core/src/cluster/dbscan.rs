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

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{canonical_rows, params, restore_order, sq_dist, Algorithm, ClusterAssignment, ClusterError};
use crate::text_index::TermDocMatrix;

pub const DEFAULT_DBSCAN_EPS: f64 = 0.9;
pub const DEFAULT_MIN_PTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisePolicy {
    /// Each noise point becomes its own cluster.
    #[default]
    Singletons,
    /// Noise points are left out of the assignment.
    Drop,
}

/// Density-based labels: `Some(cluster)` for reachable points, `None` for
/// noise. Neighborhoods are closed balls of radius `eps` that include the
/// point itself. Clusters grow in index order.
pub fn dbscan_labels(data: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = data.len();
    let eps2 = eps * eps;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| sq_dist(&data[i], &data[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for start in 0..n {
        if labels[start].is_some() || !core[start] {
            continue;
        }
        labels[start] = Some(next);
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            if !core[p] {
                continue;
            }
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(next);
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    labels
}

pub fn dbscan(m: &TermDocMatrix, eps: f64, min_pts: usize, noise: NoisePolicy) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    let raw = dbscan_labels(&rows, eps, min_pts);
    let mut n_clusters = raw.iter().flatten().max().map_or(0, |&c| c + 1);
    let mut labels = Vec::with_capacity(raw.len());
    for l in &raw {
        labels.push(l.unwrap_or_else(|| {
            n_clusters += 1;
            n_clusters - 1
        }));
    }
    let labels = restore_order(&order, &labels);
    let mut noise_flag = vec![false; raw.len()];
    for (pos, &i) in order.iter().enumerate() {
        noise_flag[i] = raw[pos].is_none();
    }
    let (doc_ids, labels): (Vec<String>, Vec<usize>) = m
        .doc_ids
        .iter()
        .zip(labels)
        .zip(&noise_flag)
        .filter(|(_, &is_noise)| noise == NoisePolicy::Singletons || !is_noise)
        .map(|((d, l), _)| (d.clone(), l))
        .unzip();
    let policy = match noise {
        NoisePolicy::Singletons => "singletons",
        NoisePolicy::Drop => "drop",
    };
    Ok(ClusterAssignment::from_labels(
        Algorithm::Density,
        doc_ids,
        &labels,
        params([
            ("eps", eps.to_string()),
            ("min_pts", min_pts.to_string()),
            ("noise", policy.to_string()),
        ]),
        0,
    ))
}

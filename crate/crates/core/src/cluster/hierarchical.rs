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

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{canonical_rows, check_k, params, restore_order, sq_dist, Algorithm, ClusterAssignment, ClusterError};
use crate::text_index::TermDocMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage `{}`", other)),
        }
    }
}

/// Agglomeration history. Clusters are named by their lowest member index;
/// each merge `(a, b, d)` has `a < b` and absorbs `b` into `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<(usize, usize, f64)>,
}

impl Dendrogram {
    /// Labels after replaying merges until `k` clusters remain.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let mut rep: Vec<usize> = (0..self.n).collect();
        for &(a, b, _) in self.merges.iter().take(self.n.saturating_sub(k)) {
            for r in rep.iter_mut() {
                if *r == b {
                    *r = a;
                }
            }
        }
        rep
    }
}

/// Agglomerative clustering down to `k` clusters with Lance-Williams
/// distance updates. The closest pair merges first; ties go to the
/// lexicographically smallest pair.
pub fn hierarchical_fit(data: &[Vec<f64>], k: usize, linkage: Linkage) -> Result<Dendrogram, ClusterError> {
    let n = data.len();
    check_k(k, n)?;
    let mut dist: Vec<Vec<f64>> = data
        .iter()
        .map(|x| data.iter().map(|y| sq_dist(x, y).sqrt()).collect())
        .collect();
    let mut size = vec![1usize; n];
    let mut alive = vec![true; n];
    let mut merges = Vec::with_capacity(n - k);
    for _ in k..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..n).filter(|&a| alive[a]) {
            for b in (a + 1..n).filter(|&b| alive[b]) {
                if best.is_none_or(|(_, _, d)| dist[a][b] < d) {
                    best = Some((a, b, dist[a][b]));
                }
            }
        }
        let (a, b, d) = best.unwrap();
        for c in (0..n).filter(|&c| alive[c] && c != a && c != b) {
            let merged = match linkage {
                Linkage::Single => dist[a][c].min(dist[b][c]),
                Linkage::Complete => dist[a][c].max(dist[b][c]),
                Linkage::Average => {
                    (size[a] as f64 * dist[a][c] + size[b] as f64 * dist[b][c]) / (size[a] + size[b]) as f64
                }
            };
            dist[a][c] = merged;
            dist[c][a] = merged;
        }
        size[a] += size[b];
        alive[b] = false;
        merges.push((a, b, d));
    }
    Ok(Dendrogram { n, merges })
}

pub fn hierarchical(m: &TermDocMatrix, k: usize, linkage: Linkage) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    let labels = hierarchical_fit(&rows, k, linkage)?.cut(k);
    Ok(ClusterAssignment::from_labels(
        Algorithm::Hierarchical,
        m.doc_ids.clone(),
        &restore_order(&order, &labels),
        params([("k", k.to_string()), ("linkage", linkage.to_string())]),
        0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::fixtures::{separable, split_at_five};

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_points_merge_at_their_distance() {
        let d = hierarchical_fit(&[vec![0.0, 0.0], vec![3.0, 4.0]], 1, Linkage::Average).unwrap();
        assert_eq!(d.merges, vec![(0, 1, 5.0)]);
    }

    #[test]
    fn single_chains_where_complete_splits() {
        let pts = line(&[0.0, 1.0, 2.0, 3.0, 4.05]);
        let single = hierarchical_fit(&pts, 2, Linkage::Single).unwrap().cut(2);
        assert_eq!(single, vec![0, 0, 0, 0, 4]);
        let complete = hierarchical_fit(&pts, 2, Linkage::Complete).unwrap();
        assert_eq!(complete.merges[..2], [(0, 1, 1.0), (2, 3, 1.0)]);
        assert_eq!(complete.cut(2), vec![0, 0, 2, 2, 2]);
    }

    #[test]
    fn average_uses_size_weighted_means() {
        // {0,1} vs 4: mean of 4 and 3 is 3.5; 4 vs 10 is 6.
        let d = hierarchical_fit(&line(&[0.0, 1.0, 4.0, 10.0]), 1, Linkage::Average).unwrap();
        assert_eq!(d.merges[0], (0, 1, 1.0));
        assert_eq!(d.merges[1], (0, 2, 3.5));
        let last = d.merges[2];
        assert_eq!((last.0, last.1), (0, 3));
        assert!((last.2 - (10.0 + 9.0 + 6.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn separates_two_groups() {
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let a = hierarchical(&separable(), 2, linkage).unwrap();
            assert!(split_at_five(&a.clusters), "{}", linkage);
        }
    }
}

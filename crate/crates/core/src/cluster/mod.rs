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

//! Content-based clustering baselines over the TF-IDF matrix.
//!
//! Every algorithm works on documents sorted by id, so reordering the
//! input rows never changes the result, and cluster ids are renumbered by
//! first appearance in that order.

mod dbscan;
mod em;
mod farthest;
mod filtered;
mod hierarchical;
mod kmeans;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text_index::TermDocMatrix;

pub use dbscan::{dbscan, dbscan_labels, NoisePolicy, DEFAULT_DBSCAN_EPS, DEFAULT_MIN_PTS};
pub use em::{em_mixture, fit_gmm, project_svd, GmmFit, DEFAULT_SVD_DIMS, DEFAULT_VARIANCE_FLOOR};
pub use farthest::{farthest_first, farthest_first_from};
pub use filtered::{filtered_kmeans, standardize};
pub use hierarchical::{hierarchical, hierarchical_fit, Dendrogram, Linkage};
pub use kmeans::{kmeans, kmeans_fit, KMeansFit, DEFAULT_KMEANS_RESTARTS, DEFAULT_MAX_ITER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} exceeds the document count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("malformed assignment at line {0}")]
    Malformed(usize),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Em,
    Filtered,
    KMeans,
    FarthestFirst,
    Density,
    Hierarchical,
    Hypergraph,
}

impl Algorithm {
    /// Report order.
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Em,
        Algorithm::Filtered,
        Algorithm::KMeans,
        Algorithm::FarthestFirst,
        Algorithm::Density,
        Algorithm::Hierarchical,
        Algorithm::Hypergraph,
    ];

    pub const CONTENT: [Algorithm; 6] = [
        Algorithm::Em,
        Algorithm::Filtered,
        Algorithm::KMeans,
        Algorithm::FarthestFirst,
        Algorithm::Density,
        Algorithm::Hierarchical,
    ];

    /// Row label in the evaluation report.
    pub fn report_name(self) -> &'static str {
        match self {
            Algorithm::Em => "EM",
            Algorithm::Filtered => "Filtered",
            Algorithm::KMeans => "K-Mean",
            Algorithm::FarthestFirst => "FarthestFirst",
            Algorithm::Density => "Density",
            Algorithm::Hierarchical => "Hierarchical",
            Algorithm::Hypergraph => "Hypergraph",
        }
    }

    /// Name used on the command line and in artifact file names.
    pub fn cli_name(self) -> &'static str {
        match self {
            Algorithm::Em => "em",
            Algorithm::Filtered => "filtered",
            Algorithm::KMeans => "kmeans",
            Algorithm::FarthestFirst => "farthest-first",
            Algorithm::Density => "dbscan",
            Algorithm::Hierarchical => "hierarchical",
            Algorithm::Hypergraph => "hypergraph",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for Algorithm {
    type Err = ClusterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.cli_name() == s || a.report_name().eq_ignore_ascii_case(s))
            .or(match s {
                "density" => Some(Algorithm::Density),
                "k-means" | "k-mean" => Some(Algorithm::KMeans),
                _ => None,
            })
            .ok_or_else(|| ClusterError::UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub algorithm: Algorithm,
    pub doc_ids: Vec<String>,
    /// Cluster of `doc_ids[i]`, dense in `[0, k_effective)`.
    pub clusters: Vec<usize>,
    pub k_effective: usize,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
}

impl ClusterAssignment {
    /// Builds an assignment from raw labels, renumbering clusters by first
    /// appearance in doc-id order.
    pub fn from_labels(
        algorithm: Algorithm,
        doc_ids: Vec<String>,
        labels: &[usize],
        params: BTreeMap<String, String>,
        seed: u64,
    ) -> ClusterAssignment {
        assert_eq!(doc_ids.len(), labels.len());
        let order = canonical_order(&doc_ids);
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        for &i in &order {
            let next = relabel.len();
            relabel.entry(labels[i]).or_insert(next);
        }
        let clusters = labels.iter().map(|l| relabel[l]).collect();
        ClusterAssignment {
            algorithm,
            doc_ids,
            clusters,
            k_effective: relabel.len(),
            params,
            seed,
        }
    }

    /// Member doc ids per cluster, each list in input order.
    pub fn members(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k_effective];
        for (d, &c) in self.doc_ids.iter().zip(&self.clusters) {
            out[c].push(d.clone());
        }
        out
    }

    pub fn cluster_of(&self, doc: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc).map(|i| self.clusters[i])
    }

    /// `doc_id<TAB>cluster_id` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (d, c) in self.doc_ids.iter().zip(&self.clusters) {
            out.push_str(&format!("{}\t{}\n", d, c));
        }
        out
    }

    pub fn from_tsv(algorithm: Algorithm, text: &str) -> Result<ClusterAssignment, ClusterError> {
        let mut doc_ids = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (d, c) = line.split_once('\t').ok_or(ClusterError::Malformed(i + 1))?;
            doc_ids.push(d.to_string());
            labels.push(c.trim().parse().map_err(|_| ClusterError::Malformed(i + 1))?);
        }
        Ok(ClusterAssignment::from_labels(algorithm, doc_ids, &labels, BTreeMap::new(), 0))
    }
}

/// Row indices sorted by doc id.
pub(crate) fn canonical_order(doc_ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..doc_ids.len()).collect();
    order.sort_by(|&a, &b| doc_ids[a].cmp(&doc_ids[b]).then(a.cmp(&b)));
    order
}

/// Dense rows in canonical order plus the permutation used.
pub(crate) fn canonical_rows(m: &TermDocMatrix) -> (Vec<usize>, Vec<Vec<f64>>) {
    let order = canonical_order(&m.doc_ids);
    let dense = m.dense_rows();
    let rows = order.iter().map(|&i| dense[i].clone()).collect();
    (order, rows)
}

/// Maps labels computed on canonical rows back to input order.
pub(crate) fn restore_order(order: &[usize], canonical_labels: &[usize]) -> Vec<usize> {
    let mut labels = vec![0; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = canonical_labels[pos];
    }
    labels
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_k(k: usize, n: usize) -> Result<(), ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > n {
        return Err(ClusterError::KTooLarge { k, n });
    }
    Ok(())
}

/// Fraction of document pairs on which two clusterings agree about
/// co-membership (Rand index). Only docs present in both are compared.
pub fn pair_agreement(a: &HashMap<String, usize>, b: &HashMap<String, usize>) -> f64 {
    let mut docs: Vec<&String> = a.keys().filter(|d| b.contains_key(*d)).collect();
    docs.sort();
    let n = docs.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            let same_a = a[docs[i]] == a[docs[j]];
            let same_b = b[docs[i]] == b[docs[j]];
            if same_a == same_b {
                agree += 1;
            }
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

/// Co-membership matrix in doc-id order; equal matrices mean equal
/// clusterings up to relabeling.
pub fn co_membership(assignment: &ClusterAssignment) -> Vec<Vec<bool>> {
    let order = canonical_order(&assignment.doc_ids);
    order
        .iter()
        .map(|&i| {
            order
                .iter()
                .map(|&j| assignment.clusters[i] == assignment.clusters[j])
                .collect()
        })
        .collect()
}

pub fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

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

use super::kmeans::{kmeans_fit, DEFAULT_KMEANS_RESTARTS, DEFAULT_MAX_ITER};
use super::{canonical_rows, params, restore_order, Algorithm, ClusterAssignment, ClusterError};
use crate::text_index::TermDocMatrix;

/// Z-scores every column with the population standard deviation and drops
/// constant columns. Returns the kept column indices alongside the data.
pub fn standardize(data: &[Vec<f64>]) -> (Vec<usize>, Vec<Vec<f64>>) {
    let n = data.len() as f64;
    let dims = data.first().map_or(0, Vec::len);
    let mut kept = Vec::new();
    let mut stats = Vec::new();
    for d in 0..dims {
        let mean = data.iter().map(|x| x[d]).sum::<f64>() / n;
        let var = data.iter().map(|x| (x[d] - mean).powi(2)).sum::<f64>() / n;
        if var > 0.0 {
            kept.push(d);
            stats.push((mean, var.sqrt()));
        }
    }
    let out = data
        .iter()
        .map(|x| kept.iter().zip(&stats).map(|(&d, (m, s))| (x[d] - m) / s).collect())
        .collect();
    (kept, out)
}

/// k-means on standardized columns.
pub fn filtered_kmeans(m: &TermDocMatrix, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    let (kept, mut z) = standardize(&rows);
    if kept.is_empty() {
        z = vec![vec![0.0]; rows.len()];
    }
    let fit = kmeans_fit(&z, k, seed, DEFAULT_MAX_ITER, DEFAULT_KMEANS_RESTARTS)?;
    Ok(ClusterAssignment::from_labels(
        Algorithm::Filtered,
        m.doc_ids.clone(),
        &restore_order(&order, &fit.labels),
        params([("k", k.to_string()), ("kept_columns", kept.len().to_string())]),
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::fixtures::{separable, split_at_five};

    #[test]
    fn columns_are_standardized() {
        let data = vec![vec![1.0, 5.0, 2.0], vec![3.0, 5.0, 4.0], vec![5.0, 5.0, 0.0]];
        let (kept, z) = standardize(&data);
        assert_eq!(kept, vec![0, 2]);
        for c in 0..2 {
            let mean: f64 = z.iter().map(|r| r[c]).sum::<f64>() / 3.0;
            let var: f64 = z.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separates_two_groups() {
        let a = filtered_kmeans(&separable(), 2, 3).unwrap();
        assert!(split_at_five(&a.clusters));
    }
}

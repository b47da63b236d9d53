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

use super::{canonical_rows, check_k, params, restore_order, sq_dist, Algorithm, ClusterAssignment, ClusterError};
use crate::text_index::TermDocMatrix;

/// Greedy farthest-first traversal from a given first center. Returns the
/// chosen center indices and each point's nearest center (position in the
/// center list, lowest on ties).
pub fn farthest_first_from(data: &[Vec<f64>], k: usize, first: usize) -> Result<(Vec<usize>, Vec<usize>), ClusterError> {
    check_k(k, data.len())?;
    let mut centers = vec![first];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, &data[first])).collect();
    let mut owner = vec![0usize; data.len()];
    while centers.len() < k {
        let mut next = None;
        for (i, &d) in d2.iter().enumerate() {
            if centers.contains(&i) {
                continue;
            }
            if next.is_none_or(|(_, bd)| d > bd) {
                next = Some((i, d));
            }
        }
        let (c, _) = next.unwrap();
        let slot = centers.len();
        centers.push(c);
        for (i, x) in data.iter().enumerate() {
            let d = sq_dist(x, &data[c]);
            if d < d2[i] || i == c {
                d2[i] = d;
                owner[i] = slot;
            }
        }
    }
    Ok((centers, owner))
}

pub fn farthest_first(m: &TermDocMatrix, k: usize, seed: u64) -> Result<ClusterAssignment, ClusterError> {
    let (order, rows) = canonical_rows(m);
    check_k(k, rows.len())?;
    let first = ChaCha8Rng::seed_from_u64(seed).gen_range(0..rows.len());
    let (_, owner) = farthest_first_from(&rows, k, first)?;
    Ok(ClusterAssignment::from_labels(
        Algorithm::FarthestFirst,
        m.doc_ids.clone(),
        &restore_order(&order, &owner),
        params([("k", k.to_string())]),
        seed,
    ))
}

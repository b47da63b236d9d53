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


mod common;

use std::collections::{BTreeSet, HashMap};

use hyperlens::cluster::{
    dbscan, dbscan_labels, em_mixture, farthest_first, farthest_first_from, filtered_kmeans, fit_gmm,
    hierarchical, hierarchical_fit, kmeans, kmeans_fit, pair_agreement, project_svd, standardize, ClusterAssignment,
    ClusterError, Linkage, NoisePolicy,
};
use hyperlens::text_index::{TermDocMatrix, Weighting};
use proptest::prelude::*;
use rand::Rng;

fn dense_matrix(rows: &[Vec<f64>]) -> TermDocMatrix {
    let dims = rows.first().map_or(0, Vec::len);
    TermDocMatrix {
        doc_ids: (0..rows.len()).map(|i| format!("d{:03}", i)).collect(),
        terms: (0..dims).map(|j| format!("t{}", j)).collect(),
        rows: rows
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect())
            .collect(),
        weighting: Weighting::TfIdf,
        row_normalized: false,
    }
}

fn permuted(m: &TermDocMatrix, perm: &[usize]) -> TermDocMatrix {
    TermDocMatrix {
        doc_ids: perm.iter().map(|&i| m.doc_ids[i].clone()).collect(),
        terms: m.terms.clone(),
        rows: perm.iter().map(|&i| m.rows[i].clone()).collect(),
        weighting: m.weighting,
        row_normalized: m.row_normalized,
    }
}

fn as_map(a: &ClusterAssignment) -> HashMap<String, usize> {
    a.doc_ids.iter().cloned().zip(a.clusters.iter().copied()).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn random_points(rng: &mut impl Rng, n: usize, dims: usize, groups: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..dims).map(|d| rng.gen::<f64>() + if d == i % groups { 3.0 } else { 0.0 }).collect())
        .collect()
}

fn points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (6usize..24, 2usize..5).prop_flat_map(|(n, dims)| {
        (
            proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, dims), n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn content_algorithms_ignore_row_order((rows, perm) in points(), seed in 0u64..1000) {
        let m = dense_matrix(&rows);
        let p = permuted(&m, &perm);
        let k = 3;
        let pairs = [
            (kmeans(&m, k, seed).unwrap(), kmeans(&p, k, seed).unwrap()),
            (farthest_first(&m, k, seed).unwrap(), farthest_first(&p, k, seed).unwrap()),
            (filtered_kmeans(&m, k, seed).unwrap(), filtered_kmeans(&p, k, seed).unwrap()),
            (em_mixture(&m, k, seed).unwrap(), em_mixture(&p, k, seed).unwrap()),
            (hierarchical(&m, k, Linkage::Average).unwrap(), hierarchical(&p, k, Linkage::Average).unwrap()),
            (
                dbscan(&m, 2.0, 3, NoisePolicy::Singletons).unwrap(),
                dbscan(&p, 2.0, 3, NoisePolicy::Singletons).unwrap(),
            ),
        ];
        for (a, b) in &pairs {
            prop_assert_eq!(pair_agreement(&as_map(a), &as_map(b)), 1.0, "{:?}", a.algorithm);
        }
    }

    #[test]
    fn kmeans_objective_never_increases((rows, _) in points(), seed in 0u64..1000, k in 1usize..5) {
        let fit = kmeans_fit(&rows, k, seed, 100, 1).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} > {}", w[1], w[0]);
        }
        let direct: f64 = rows.iter().zip(&fit.labels).map(|(x, &l)| dist(x, &fit.centers[l]).powi(2)).sum();
        prop_assert!((direct - fit.objective()).abs() < 1e-9 * (1.0 + direct));
    }

    #[test]
    fn em_likelihood_never_decreases_within_segments((rows, _) in points(), seed in 0u64..1000, k in 1usize..4) {
        let proj = project_svd(&rows, 32);
        let fit = fit_gmm(&proj, k, seed, 100, 1e-6).unwrap();
        let mut bounds = fit.segment_starts.clone();
        bounds.push(fit.ll_trace.len());
        for seg in bounds.windows(2) {
            for w in fit.ll_trace[seg[0]..seg[1]].windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-7 * (1.0 + w[0].abs()), "{} < {}", w[1], w[0]);
            }
        }
        prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(fit.variances.iter().flatten().all(|&v| v >= 1e-6));
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_variance((rows, _) in points()) {
        let (kept, z) = standardize(&rows);
        let n = rows.len() as f64;
        for (c, &orig) in kept.iter().enumerate() {
            let mean = z.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = z.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9, "column {}", orig);
        }
    }
}

/// Linkage distance between two point sets, recomputed from scratch.
fn naive_linkage(data: &[Vec<f64>], a: &[usize], b: &[usize], linkage: Linkage) -> f64 {
    let ds = a.iter().flat_map(|&i| b.iter().map(move |&j| dist(&data[i], &data[j])));
    match linkage {
        Linkage::Single => ds.fold(f64::INFINITY, f64::min),
        Linkage::Complete => ds.fold(0.0, f64::max),
        Linkage::Average => ds.sum::<f64>() / (a.len() * b.len()) as f64,
    }
}

#[test]
fn hierarchical_matches_naive_agglomeration() {
    let mut rng = common::seeded(41);
    for trial in 0..30 {
        let n = rng.gen_range(3..14);
        let data = random_points(&mut rng, n, 3, 3);
        for linkage in [Linkage::Single, Linkage::Complete, Linkage::Average] {
            let dendro = hierarchical_fit(&data, 1, linkage).unwrap();
            let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
            assert_eq!(dendro.merges.len(), n - 1);
            for &(a, b, d) in &dendro.merges {
                let mut best = (f64::INFINITY, 0, 0);
                for x in 0..clusters.len() {
                    for y in x + 1..clusters.len() {
                        let dxy = naive_linkage(&data, &clusters[x], &clusters[y], linkage);
                        if dxy < best.0 {
                            best = (dxy, x, y);
                        }
                    }
                }
                let (bd, x, y) = best;
                assert!((bd - d).abs() < 1e-9, "trial {} {:?}", trial, linkage);
                assert_eq!((clusters[x][0], clusters[y][0]), (a, b), "trial {} {:?}", trial, linkage);
                let absorbed = clusters.remove(y);
                clusters[x].extend(absorbed);
                clusters[x].sort_unstable();
            }
            for k in 1..=n {
                let labels = dendro.cut(k);
                assert_eq!(labels.iter().collect::<BTreeSet<_>>().len(), k);
            }
        }
    }
}

#[test]
fn dbscan_matches_connected_core_components() {
    let mut rng = common::seeded(43);
    for _ in 0..40 {
        let n = rng.gen_range(1..30);
        let data = random_points(&mut rng, n, 2, 3);
        let eps = rng.gen_range(0.2..1.5);
        let min_pts = rng.gen_range(1..5);
        let labels = dbscan_labels(&data, eps, min_pts);
        let near = |i: usize, j: usize| dist(&data[i], &data[j]) <= eps;
        let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut Vec<usize>, x: usize) -> usize {
            if c[x] != x {
                let r = find(c, c[x]);
                c[x] = r;
            }
            c[x]
        }
        for i in 0..n {
            for j in 0..n {
                if core[i] && core[j] && near(i, j) {
                    let (ri, rj) = (find(&mut comp, i), find(&mut comp, j));
                    comp[ri] = rj;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if core[i] && core[j] {
                    let same = find(&mut comp, i) == find(&mut comp, j);
                    assert_eq!(same, labels[i] == labels[j]);
                }
            }
            let core_nbr = (0..n).find(|&j| core[j] && near(i, j));
            match core_nbr {
                None => assert_eq!(labels[i], None),
                Some(_) => {
                    let l = labels[i].expect("reachable point labelled");
                    assert!((0..n).any(|j| core[j] && near(i, j) && labels[j] == Some(l)));
                }
            }
        }
    }
}

#[test]
fn dbscan_drop_policy_omits_exactly_the_noise() {
    let mut rng = common::seeded(47);
    let rows = random_points(&mut rng, 40, 2, 2);
    let m = dense_matrix(&rows);
    let kept = dbscan(&m, 0.4, 4, NoisePolicy::Drop).unwrap();
    let all = dbscan(&m, 0.4, 4, NoisePolicy::Singletons).unwrap();
    assert_eq!(all.doc_ids.len(), 40);
    let kept_set: BTreeSet<&String> = kept.doc_ids.iter().collect();
    let mut canonical: Vec<usize> = (0..40).collect();
    canonical.sort_by_key(|&i| m.doc_ids[i].clone());
    let raw = dbscan_labels(&canonical.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>(), 0.4, 4);
    for (pos, &i) in canonical.iter().enumerate() {
        assert_eq!(kept_set.contains(&m.doc_ids[i]), raw[pos].is_some());
    }
}

/// Smallest covering radius over every choice of `k` centers.
fn optimal_k_center(data: &[Vec<f64>], k: usize) -> f64 {
    let n = data.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let centers: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let radius = (0..n)
            .map(|i| centers.iter().map(|&c| dist(&data[i], &data[c])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        best = best.min(radius);
    }
    best
}

#[test]
fn farthest_first_is_within_twice_the_optimal_radius() {
    let mut rng = common::seeded(53);
    for _ in 0..60 {
        let n = rng.gen_range(2..11);
        let k = rng.gen_range(1..=n.min(4));
        let data = random_points(&mut rng, n, 2, 3);
        let first = rng.gen_range(0..n);
        let (centers, owner) = farthest_first_from(&data, k, first).unwrap();
        assert_eq!(centers.len(), k);
        assert_eq!(centers[0], first);
        let radius = (0..n).map(|i| dist(&data[i], &data[centers[owner[i]]])).fold(0.0, f64::max);
        for i in 0..n {
            let nearest = centers.iter().map(|&c| dist(&data[i], &data[c])).fold(f64::INFINITY, f64::min);
            assert!((dist(&data[i], &data[centers[owner[i]]]) - nearest).abs() < 1e-12);
        }
        assert!(radius <= 2.0 * optimal_k_center(&data, k) + 1e-9);
    }
}

#[test]
fn oversized_k_is_rejected_everywhere() {
    let m = dense_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    let too_large = |r: Result<ClusterAssignment, ClusterError>| matches!(r, Err(ClusterError::KTooLarge { k: 3, n: 2 }));
    assert!(too_large(kmeans(&m, 3, 0)));
    assert!(too_large(farthest_first(&m, 3, 0)));
    assert!(too_large(filtered_kmeans(&m, 3, 0)));
    assert!(too_large(em_mixture(&m, 3, 0)));
    assert!(too_large(hierarchical(&m, 3, Linkage::Single)));
}

#[test]
fn assignments_round_trip_through_tsv() {
    let mut rng = common::seeded(59);
    let m = dense_matrix(&random_points(&mut rng, 20, 3, 3));
    for a in [kmeans(&m, 3, 1).unwrap(), hierarchical(&m, 4, Linkage::Complete).unwrap()] {
        let back = ClusterAssignment::from_tsv(a.algorithm, &a.to_tsv()).unwrap();
        assert_eq!(as_map(&back), as_map(&a));
        assert_eq!(back.k_effective, a.k_effective);
    }
}

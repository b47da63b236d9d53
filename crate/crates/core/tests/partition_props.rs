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

use std::collections::BTreeMap;

use hyperlens::hypergraph::{isolated_vertex_placement, Hypergraph, Partition};
use hyperlens::partition::{fm_refine_traced, initial_bisection, partition_k, PartitionError};
use proptest::prelude::*;
use rand::Rng;

fn random_bisection(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = common::seeded(seed);
    let mut a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    a[0] = 0;
    a[n - 1] = 1;
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fm_never_increases_cut(seed in any::<u64>(), n in 3usize..=20, passes in 1usize..=5) {
        let hg = common::random_hypergraph(&mut common::seeded(seed), n);
        // A balanced start so FM has no repair trade-off to make.
        let mut assignment: Vec<usize> = (0..n).map(|v| v % 2).collect();
        let scramble = random_bisection(n, seed ^ 1);
        for v in 0..n {
            if scramble[v] == 1 && scramble[(v + 1) % n] == 0 {
                assignment.swap(v, (v + 1) % n);
            }
        }
        let p = Partition { k: 2, assignment, epsilon: 0.2 };
        prop_assume!(p.is_balanced(&hg.vertex_weights));
        let before = common::edge_cut(&hg, &p.assignment);
        let (out, trace) = fm_refine_traced(&hg, &p, passes);
        let after = common::edge_cut(&hg, &out.assignment);
        prop_assert!(after <= before + 1e-9, "{} > {}", after, before);
        prop_assert!(out.is_balanced(&hg.vertex_weights));
        let mut prev = trace.initial_cut;
        for c in trace.cut_trace {
            prop_assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn partitions_honor_the_bound(seed in any::<u64>(), n in 4usize..=40, k in 2usize..=6, eps_pct in 0usize..=50) {
        prop_assume!(k <= n);
        let hg = common::random_hypergraph(&mut common::seeded(seed), n);
        let eps = eps_pct as f64 / 100.0;
        match partition_k(&hg, k, eps, seed) {
            Ok((p, report)) => {
                prop_assert!(p.is_balanced(&hg.vertex_weights));
                prop_assert_eq!(p.assignment.len(), n);
                prop_assert!(p.assignment.iter().all(|&a| a < k));
                prop_assert!((report.cut - common::edge_cut(&hg, &p.assignment)).abs() < 1e-9);
                let bound = (1.0 + eps) * n as f64 / k as f64;
                prop_assert!(report.per_part_weights.iter().all(|&w| w <= bound + 1e-9));
            }
            Err(PartitionError::InfeasibleBalance(_)) => {
                // Unit weights: infeasible only when k parts of floor((1+eps)n/k) cannot hold n.
                let cap = ((1.0 + eps) * n as f64 / k as f64 + 1e-9).floor() as usize;
                prop_assert!(cap * k < n);
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn partitioning_is_deterministic(seed in any::<u64>(), n in 6usize..=30) {
        let hg = common::random_hypergraph(&mut common::seeded(seed), n);
        let a = partition_k(&hg, 3, 0.3, seed).unwrap();
        let b = partition_k(&hg, 3, 0.3, seed).unwrap();
        prop_assert_eq!(a.0, b.0);
    }

    #[test]
    fn isolated_docs_are_assigned_once(seed in any::<u64>(), extra in 0usize..30) {
        let hg = common::random_hypergraph(&mut common::seeded(seed), 12);
        let (p, _) = partition_k(&hg, 4, 0.2, seed).unwrap();
        let mut docs: Vec<String> = hg.vertices.clone();
        docs.extend((0..extra).map(|i| format!("iso{}", i)));
        let (labels, full) = isolated_vertex_placement(&docs, &hg.vertices, &p);
        let mut seen: BTreeMap<&String, usize> = BTreeMap::new();
        for l in &labels {
            *seen.entry(l).or_insert(0) += 1;
        }
        prop_assert_eq!(seen.len(), docs.len());
        prop_assert!(seen.values().all(|&c| c == 1));
        prop_assert_eq!(full.assignment.len(), labels.len());
        prop_assert_eq!(&full.assignment[..12], &p.assignment[..]);
        let sizes = full.part_sizes();
        let spread = sizes.iter().max().unwrap() - sizes.iter().min().unwrap();
        let base = p.part_sizes();
        prop_assert!(spread <= (base.iter().max().unwrap() - base.iter().min().unwrap()).max(1));
    }
}

#[test]
fn six_vertex_fixture_hits_the_oracle() {
    let hg = common::six_vertex_fixture();
    let optimum = common::exhaustive_bisection(&hg, 0.1);
    assert_eq!(optimum, 1.0);
    let (p, report) = partition_k(&hg, 2, 0.1, 7).unwrap();
    assert_eq!(report.cut, optimum);
    let (refined, _) = fm_refine_traced(&hg, &p, 4);
    assert_eq!(refined.assignment, p.assignment);
}

#[test]
fn small_bisections_are_near_optimal() {
    let mut checked = 0;
    let mut trial = 0u64;
    while checked < 50 {
        let mut rng = common::seeded(1000 + trial);
        let n = rng.gen_range(4..=12);
        let hg = common::random_hypergraph(&mut rng, n);
        let optimum = common::exhaustive_bisection(&hg, 0.1);
        match partition_k(&hg, 2, 0.1, trial) {
            Ok((_, report)) => {
                assert!(report.cut <= 1.25 * optimum + 1e-9, "trial {}: {} vs {}", trial, report.cut, optimum);
                checked += 1;
            }
            Err(PartitionError::InfeasibleBalance(_)) => assert!(optimum.is_infinite(), "trial {}", trial),
            Err(e) => panic!("{}", e),
        }
        trial += 1;
    }
}

#[test]
fn initial_bisection_is_balanced() {
    for seed in 0..20 {
        let hg: Hypergraph = common::random_hypergraph(&mut common::seeded(seed), 10);
        let p = initial_bisection(&hg, 0.1, seed).unwrap();
        assert!(p.is_balanced(&hg.vertex_weights));
    }
}

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

//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use hyperlens::hypergraph::{Hypergraph, Partition};
use hyperlens::text_index::default_stopwords;
use hyperlens::rules::Transaction;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random transactions over items `i00..i{n_items}`.
pub fn random_transactions(rng: &mut ChaCha8Rng, n_items: usize, n_tx: usize) -> Vec<Transaction> {
    (0..n_tx)
        .map(|t| {
            let len = rng.gen_range(1..=n_items.min(6));
            let items: BTreeSet<String> = (0..len).map(|_| format!("i{:02}", rng.gen_range(0..n_items))).collect();
            Transaction {
                tid: format!("t{}", t),
                items: items.into_iter().collect(),
            }
        })
        .collect()
}

/// Every itemset whose count reaches `support_twentieths / 20` of the
/// transactions, by enumerating all subsets of the item alphabet.
pub fn brute_force_itemsets(tx: &[Transaction], support_twentieths: usize) -> BTreeMap<Vec<String>, usize> {
    let alphabet: Vec<String> = tx
        .iter()
        .flat_map(|t| t.items.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let sets: Vec<BTreeSet<&String>> = tx.iter().map(|t| t.items.iter().collect()).collect();
    let n = tx.len();
    let mut out = BTreeMap::new();
    for mask in 1u32..(1 << alphabet.len()) {
        let subset: Vec<&String> = (0..alphabet.len()).filter(|&i| mask & (1 << i) != 0).map(|i| &alphabet[i]).collect();
        let count = sets.iter().filter(|t| subset.iter().all(|i| t.contains(i))).count();
        if count > 0 && 20 * count >= support_twentieths * n {
            out.insert(subset.into_iter().cloned().collect(), count);
        }
    }
    out
}

/// `(antecedent, consequent) -> (union count, antecedent count)`.
pub type RuleCounts = BTreeMap<(Vec<String>, Vec<String>), (usize, usize)>;

/// Rule counts for every
/// split of every frequent itemset with confidence of at least
/// `confidence_tenths / 10`.
pub fn brute_force_rules(frequent: &BTreeMap<Vec<String>, usize>, confidence_tenths: usize) -> RuleCounts {
    let mut out = BTreeMap::new();
    for (items, &count) in frequent {
        if items.len() < 2 {
            continue;
        }
        for mask in 1u32..(1 << items.len()) - 1 {
            let side = |in_mask: bool| -> Vec<String> {
                (0..items.len()).filter(|&i| (mask & (1 << i) != 0) == in_mask).map(|i| items[i].clone()).collect()
            };
            let (a, c) = (side(true), side(false));
            let a_count = frequent[&a];
            if 10 * count >= confidence_tenths * a_count {
                out.insert((a, c), (count, a_count));
            }
        }
    }
    out
}

/// Random hypergraph with unit vertex weights.
pub fn random_hypergraph(rng: &mut ChaCha8Rng, n: usize) -> Hypergraph {
    let m = rng.gen_range(1..=2 * n);
    let edges = (0..m)
        .map(|_| {
            let size = rng.gen_range(2..=4.min(n));
            let mut pins: BTreeSet<usize> = BTreeSet::new();
            while pins.len() < size {
                pins.insert(rng.gen_range(0..n));
            }
            (pins.into_iter().collect(), rng.gen_range(1..=10) as f64 / 10.0)
        })
        .collect();
    Hypergraph::from_edges(n, edges)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn edge_cut(hg: &Hypergraph, assignment: &[usize]) -> f64 {
    hg.edges
        .iter()
        .zip(&hg.edge_weights)
        .filter(|(e, _)| e.iter().any(|&v| assignment[v] != assignment[e[0]]))
        .map(|(_, w)| w)
        .sum()
}

/// Minimum cut over every balanced two-way split with both sides non-empty.
pub fn exhaustive_bisection(hg: &Hypergraph, epsilon: f64) -> f64 {
    let n = hg.n_vertices();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let assignment: Vec<usize> = (0..n).map(|v| ((mask >> v) & 1) as usize).collect();
        let p = Partition {
            k: 2,
            assignment: assignment.clone(),
            epsilon,
        };
        if p.is_balanced(&hg.vertex_weights) {
            best = best.min(edge_cut(hg, &assignment));
        }
    }
    best
}

/// The six-vertex fixture: two triples joined by one bridging edge.
pub fn six_vertex_fixture() -> Hypergraph {
    Hypergraph::from_edges(
        6,
        vec![(vec![0, 1, 2], 1.0), (vec![3, 4, 5], 1.0), (vec![2, 3], 1.0)],
    )
}

/// The sample access-log line from the ingest documentation.
pub const GOLDEN: &str = "10.0.0.1 X2bFdM1R3txwlkv - 13d8f72f08d1a4e1c418a7cb8fc31437 [01/Jun/2014:00:47:10 -0500] \"GET http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=10251051 HTTP/1.1\" 200 29732";

pub const WORDS: [&str; 24] = [
    "history", "economics", "canada", "quantum", "river", "poetry", "market", "cells", "ontario", "war",
    "design", "ethics", "climate", "media", "law", "health", "music", "data", "urban", "faith",
    "the", "of", "and", "in",
];
pub const SEPARATORS: [&str; 5] = [" ", ", ", ": ", " - ", " / "];

/// Random titles together with the set of content words each contains.
pub fn random_titles(seed: u64, n: usize) -> Vec<(String, BTreeSet<&'static str>)> {
    let sw = default_stopwords();
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=7);
            let mut title = String::new();
            let mut content = BTreeSet::new();
            for i in 0..len {
                let w = *WORDS.choose(&mut rng).unwrap();
                if i > 0 {
                    title.push_str(SEPARATORS.choose(&mut rng).unwrap());
                }
                if rng.gen_bool(0.3) {
                    title.push_str(&w.to_uppercase());
                } else {
                    title.push_str(w);
                }
                if !sw.contains(w) {
                    content.insert(w);
                }
            }
            (title, content)
        })
        .collect()
}

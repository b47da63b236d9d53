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

//! Heavy-connectivity vertex matching for multilevel coarsening.

use std::collections::HashMap;

use super::net::Net;

/// Edges larger than this do not contribute pair scores.
const MAX_SCORED_EDGE: usize = 64;

/// Stop when a level removes fewer than this fraction of vertices.
const MIN_SHRINK: f64 = 0.05;

#[derive(Debug, Clone)]
pub(crate) struct Level {
    pub net: Net,
    /// Finer-level vertex -> vertex of this level.
    pub map: Vec<u32>,
}

/// Pair connectivity: each edge `e` adds `w(e) / (|e| - 1)` to every pair
/// of its pins.
fn pair_scores(net: &Net) -> HashMap<(u32, u32), f64> {
    let mut scores: HashMap<(u32, u32), f64> = HashMap::new();
    for (pins, &w) in net.pins.iter().zip(&net.ewgt) {
        if pins.len() > MAX_SCORED_EDGE {
            continue;
        }
        let s = w as f64 / (pins.len() - 1) as f64;
        for (i, &u) in pins.iter().enumerate() {
            for &v in &pins[i + 1..] {
                *scores.entry((u, v)).or_insert(0.0) += s;
            }
        }
    }
    scores
}

/// One level of matching. Pairs are taken heaviest first (ties: lowest
/// indices); a pair is eligible only if it is the heaviest connection of
/// at least one endpoint, so a vertex whose best partners are taken waits
/// for the next level instead of settling for a weak one.
fn match_level(net: &Net, max_vertex_weight: f64) -> Option<Level> {
    let scores = pair_scores(net);
    let mut best = vec![0.0f64; net.n()];
    for (&(u, v), &s) in &scores {
        best[u as usize] = best[u as usize].max(s);
        best[v as usize] = best[v as usize].max(s);
    }
    let mut pairs: Vec<(f64, u32, u32)> = scores
        .into_iter()
        .filter(|&((u, v), s)| s == best[u as usize] || s == best[v as usize])
        .map(|((u, v), s)| (s, u, v))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut mate: Vec<Option<u32>> = vec![None; net.n()];
    let mut matched = 0;
    for (_, u, v) in pairs {
        let (ui, vi) = (u as usize, v as usize);
        if mate[ui].is_some() || mate[vi].is_some() {
            continue;
        }
        if net.vwgt[ui] + net.vwgt[vi] > max_vertex_weight {
            continue;
        }
        mate[ui] = Some(v);
        mate[vi] = Some(u);
        matched += 1;
    }
    if matched == 0 {
        return None;
    }

    let mut map = vec![u32::MAX; net.n()];
    let mut vwgt = Vec::with_capacity(net.n() - matched);
    for v in 0..net.n() {
        if map[v] != u32::MAX {
            continue;
        }
        let id = vwgt.len() as u32;
        map[v] = id;
        let mut w = net.vwgt[v];
        if let Some(m) = mate[v] {
            map[m as usize] = id;
            w += net.vwgt[m as usize];
        }
        vwgt.push(w);
    }

    let mut merged: std::collections::BTreeMap<Vec<u32>, i64> = Default::default();
    let mut order = Vec::new();
    for (pins, &w) in net.pins.iter().zip(&net.ewgt) {
        let mut c: Vec<u32> = pins.iter().map(|&v| map[v as usize]).collect();
        c.sort_unstable();
        c.dedup();
        if c.len() < 2 {
            continue;
        }
        match merged.get_mut(&c) {
            Some(x) => *x += w,
            None => {
                order.push(c.clone());
                merged.insert(c, w);
            }
        }
    }
    let ewgt = order.iter().map(|p| merged[p]).collect();
    Some(Level {
        net: Net::new(vwgt, order, ewgt),
        map,
    })
}

/// Coarsens until at most `target` vertices remain, a level shrinks by
/// less than 5%, or nothing can be matched. Empty when `net` is already
/// small enough.
pub(crate) fn coarsen_net(net: &Net, target: usize, max_vertex_weight: f64) -> Vec<Level> {
    let mut levels: Vec<Level> = Vec::new();
    loop {
        let current = levels.last().map_or(net, |l| &l.net);
        if current.n() <= target {
            break;
        }
        let Some(level) = match_level(current, max_vertex_weight) else {
            break;
        };
        let shrink = 1.0 - level.net.n() as f64 / current.n() as f64;
        if shrink < MIN_SHRINK {
            break;
        }
        levels.push(level);
    }
    levels
}

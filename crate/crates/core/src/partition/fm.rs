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

//! Fiduccia–Mattheyses refinement of a bisection.
//!
//! Each pass moves every vertex at most once, always taking the feasible
//! move with the highest gain, then rolls back to the best prefix seen.
//! Gains are exact integers (edge weights in quantized units), kept in
//! ordered buckets; ties go to the lowest vertex index.

use std::collections::{BTreeMap, BTreeSet};

use super::net::{side_totals, Limits, Net};

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct FmStats {
    pub passes: usize,
    /// Cut after each pass, tracked incrementally.
    pub cut_trace: Vec<i64>,
    pub initial_cut: i64,
}

struct Buckets {
    by_gain: [BTreeMap<i64, BTreeSet<u32>>; 2],
}

impl Buckets {
    fn new() -> Self {
        Buckets {
            by_gain: [BTreeMap::new(), BTreeMap::new()],
        }
    }

    fn insert(&mut self, side: u8, gain: i64, v: u32) {
        self.by_gain[side as usize].entry(gain).or_default().insert(v);
    }

    fn remove(&mut self, side: u8, gain: i64, v: u32) {
        let map = &mut self.by_gain[side as usize];
        if let Some(set) = map.get_mut(&gain) {
            set.remove(&v);
            if set.is_empty() {
                map.remove(&gain);
            }
        }
    }
}

fn gain_of(net: &Net, side: &[u8], counts: &[[u32; 2]], v: usize) -> i64 {
    let from = side[v] as usize;
    let to = 1 - from;
    net.inc[v]
        .iter()
        .map(|&e| {
            let c = counts[e as usize];
            let w = net.ewgt[e as usize];
            let mut g = 0;
            if c[from] == 1 {
                g += w;
            }
            if c[to] == 0 {
                g -= w;
            }
            g
        })
        .sum()
}

fn pin_counts(net: &Net, side: &[u8]) -> Vec<[u32; 2]> {
    net.pins
        .iter()
        .map(|p| {
            let mut c = [0u32; 2];
            for &v in p {
                c[side[v as usize] as usize] += 1;
            }
            c
        })
        .collect()
}

/// Refines `side` in place. Stops after a pass that neither lowers the cut
/// nor reduces constraint violation, or after `max_passes`.
pub(crate) fn fm_bisect(net: &Net, side: &mut [u8], limits: &Limits, max_passes: usize) -> FmStats {
    let mut cut = net.cut(side);
    let mut stats = FmStats {
        initial_cut: cut,
        ..Default::default()
    };
    for _ in 0..max_passes {
        let (improved, new_cut) = fm_pass(net, side, limits, cut);
        stats.passes += 1;
        debug_assert_eq!(new_cut, net.cut(side), "incremental cut drifted");
        cut = new_cut;
        stats.cut_trace.push(cut);
        if !improved {
            break;
        }
    }
    stats
}

fn fm_pass(net: &Net, side: &mut [u8], limits: &Limits, start_cut: i64) -> (bool, i64) {
    let n = net.n();
    let mut counts = pin_counts(net, side);
    let (mut weight, mut count) = side_totals(net, side);
    let start_violation = limits.violation(weight, count);
    // moves may overload a side by up to one vertex weight mid-pass, which
    // lets FM swap vertices between two full sides
    let slack = net.vwgt.iter().cloned().fold(0.0, f64::max);

    let mut gain: Vec<i64> = (0..n).map(|v| gain_of(net, side, &counts, v)).collect();
    let mut locked = vec![false; n];
    let mut buckets = Buckets::new();
    for v in 0..n {
        buckets.insert(side[v], gain[v], v as u32);
    }

    let mut moves: Vec<u32> = Vec::new();
    let mut cum = 0i64;
    // best prefix: (violation, -gain, length) minimized
    let mut best = (start_violation, 0i64, 0usize);

    loop {
        let allowed = limits.violation(weight, count).max(slack.min(overload_room(limits, count)));
        // best feasible move per side: highest gain, then lowest index
        let mut per_side: [Option<(i64, u32)>; 2] = [None, None];
        for from in 0..2usize {
            let to = 1 - from;
            if count[from] <= limits.min_count[from] {
                continue;
            }
            per_side[from] = buckets.by_gain[from]
                .iter()
                .rev()
                .flat_map(|(&g, set)| set.iter().map(move |&v| (g, v)))
                .find(|&(_, v)| {
                    let w = net.vwgt[v as usize];
                    let mut nw = weight;
                    nw[from] -= w;
                    nw[to] += w;
                    let mut nc = count;
                    nc[from] -= 1;
                    nc[to] += 1;
                    limits.violation(nw, nc) <= allowed
                });
        }
        let overload = |s: usize| weight[s] - limits.max_weight[s];
        let choice = match per_side {
            [None, None] => None,
            [Some((g, v)), None] => Some((g, 0u8, v)),
            [None, Some((g, v))] => Some((g, 1u8, v)),
            [Some((g0, v0)), Some((g1, v1))] => {
                let take_first = g0 > g1
                    || (g0 == g1 && (overload(0) > overload(1) || (overload(0) == overload(1) && v0 < v1)));
                if take_first {
                    Some((g0, 0, v0))
                } else {
                    Some((g1, 1, v1))
                }
            }
        };
        let Some((g, from, v)) = choice else { break };
        let to = 1 - from;
        let vi = v as usize;

        buckets.remove(from, gain[vi], v);
        locked[vi] = true;
        cum += g;
        move_vertex(net, side, &mut counts, &mut gain, &locked, &mut buckets, vi, from, to);
        weight[from as usize] -= net.vwgt[vi];
        weight[to as usize] += net.vwgt[vi];
        count[from as usize] -= 1;
        count[to as usize] += 1;
        moves.push(v);

        let key = (limits.violation(weight, count), -cum, moves.len());
        if key.0 < best.0 || (key.0 == best.0 && (key.1, key.2) < (best.1, best.2)) {
            best = key;
        }
    }

    let keep = best.2;
    for &v in moves[keep..].iter().rev() {
        side[v as usize] ^= 1;
    }
    let gained = -best.1;
    let improved = keep > 0 && (gained > 0 || best.0 < start_violation);
    (improved, start_cut - gained)
}

/// Temporary overload is only granted while cardinality limits hold.
fn overload_room(limits: &Limits, count: [usize; 2]) -> f64 {
    if (0..2).all(|s| count[s] >= limits.min_count[s]) {
        f64::INFINITY
    } else {
        0.0
    }
}

fn bump(
    u: usize,
    delta: i64,
    side: &[u8],
    gain: &mut [i64],
    locked: &[bool],
    buckets: &mut Buckets,
) {
    if locked[u] || delta == 0 {
        return;
    }
    buckets.remove(side[u], gain[u], u as u32);
    gain[u] += delta;
    buckets.insert(side[u], gain[u], u as u32);
}

#[allow(clippy::too_many_arguments)]
fn move_vertex(
    net: &Net,
    side: &mut [u8],
    counts: &mut [[u32; 2]],
    gain: &mut [i64],
    locked: &[bool],
    buckets: &mut Buckets,
    v: usize,
    from: u8,
    to: u8,
) {
    let (f, t) = (from as usize, to as usize);
    // v is locked, so bump() never touches it; its side flips at the end.
    for &e in &net.inc[v] {
        let e = e as usize;
        let w = net.ewgt[e];
        let pins = &net.pins[e];
        if counts[e][t] == 0 {
            for &u in pins {
                bump(u as usize, w, side, gain, locked, buckets);
            }
        } else if counts[e][t] == 1 {
            if let Some(&u) = pins.iter().find(|&&u| side[u as usize] == to) {
                bump(u as usize, -w, side, gain, locked, buckets);
            }
        }
        counts[e][f] -= 1;
        counts[e][t] += 1;
        if counts[e][f] == 0 {
            for &u in pins {
                bump(u as usize, -w, side, gain, locked, buckets);
            }
        } else if counts[e][f] == 1 {
            if let Some(&u) = pins
                .iter()
                .find(|&&u| u as usize != v && side[u as usize] == from)
            {
                bump(u as usize, w, side, gain, locked, buckets);
            }
        }
    }
    side[v] = to;
}

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

//! Greedy region-growing bisection.

use rand::Rng;

use super::fm::fm_bisect;
use super::net::{side_totals, Limits, Net};

pub(crate) fn move_gain(net: &Net, side: &[u8], v: usize) -> i64 {
    let from = side[v];
    net.inc[v]
        .iter()
        .map(|&e| {
            let pins = &net.pins[e as usize];
            let w = net.ewgt[e as usize];
            let others_from = pins
                .iter()
                .filter(|&&u| u as usize != v && side[u as usize] == from)
                .count();
            let others_to = pins.len() - 1 - others_from;
            let mut g = 0;
            if others_from == 0 {
                g += w;
            }
            if others_to == 0 {
                g -= w;
            }
            g
        })
        .sum()
}

/// Grows side 0 from `start`. Each step absorbs the side-1 vertex with the
/// heaviest edges into the region, then the best move gain, then the
/// lowest index, until side 0 reaches `target0`.
pub(crate) fn grow_region(net: &Net, limits: &Limits, target0: f64, start: usize) -> Vec<u8> {
    let n = net.n();
    let mut side = vec![1u8; n];
    let mut in_region = vec![0usize; net.pins.len()];
    let mut conn = vec![0i64; n];
    let mut w0 = 0.0;
    let mut c1 = n;
    let mut absorb = |v: usize, side: &mut Vec<u8>, conn: &mut Vec<i64>| {
        side[v] = 0;
        for &e in &net.inc[v] {
            let e = e as usize;
            in_region[e] += 1;
            if in_region[e] == 1 {
                for &u in &net.pins[e] {
                    conn[u as usize] += net.ewgt[e];
                }
            }
        }
    };
    absorb(start, &mut side, &mut conn);
    w0 += net.vwgt[start];
    c1 -= 1;
    let mut gain: Vec<i64> = (0..n).map(|v| move_gain(net, &side, v)).collect();
    while w0 < target0 && c1 > limits.min_count[1] {
        let pick = (0..n)
            .filter(|&v| side[v] == 1 && w0 + net.vwgt[v] <= limits.max_weight[0])
            .max_by(|&a, &b| conn[a].cmp(&conn[b]).then(gain[a].cmp(&gain[b])).then(b.cmp(&a)));
        let Some(v) = pick else { break };
        absorb(v, &mut side, &mut conn);
        w0 += net.vwgt[v];
        c1 -= 1;
        for &e in &net.inc[v] {
            for &u in &net.pins[e as usize] {
                gain[u as usize] = move_gain(net, &side, u as usize);
            }
        }
    }
    side
}

/// Best of `restarts` grown-and-refined bisections from random start
/// vertices; feasibility first, then cut, ties to the earliest restart.
pub(crate) fn best_initial<R: Rng>(
    net: &Net,
    limits: &Limits,
    target0: f64,
    restarts: usize,
    max_passes: usize,
    rng: &mut R,
) -> Vec<u8> {
    let mut best: Option<(f64, i64, Vec<u8>)> = None;
    for _ in 0..restarts.max(1) {
        let start = rng.gen_range(0..net.n());
        let mut side = grow_region(net, limits, target0, start);
        fm_bisect(net, &mut side, limits, max_passes);
        let (w, c) = side_totals(net, &side);
        let violation = limits.violation(w, c);
        let cut = net.cut(&side);
        let better = match &best {
            None => true,
            Some((bv, bc, _)) => violation < *bv || (violation == *bv && cut < *bc),
        };
        if better {
            best = Some((violation, cut, side));
        }
    }
    best.expect("at least one restart").2
}

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

//! Integer-weighted working copy of a hypergraph used by the partitioner.

use crate::hypergraph::{weight_units, Hypergraph, WEIGHT_SCALE};

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Net {
    pub vwgt: Vec<f64>,
    pub pins: Vec<Vec<u32>>,
    pub ewgt: Vec<i64>,
    pub inc: Vec<Vec<u32>>,
}

impl Net {
    pub fn from_hypergraph(hg: &Hypergraph) -> Net {
        let pins = hg
            .edges
            .iter()
            .map(|e| e.iter().map(|&v| v as u32).collect())
            .collect();
        let ewgt = hg.edge_weights.iter().map(|&w| weight_units(w)).collect();
        Net::new(hg.vertex_weights.clone(), pins, ewgt)
    }

    pub fn new(vwgt: Vec<f64>, pins: Vec<Vec<u32>>, ewgt: Vec<i64>) -> Net {
        let mut inc = vec![Vec::new(); vwgt.len()];
        for (e, p) in pins.iter().enumerate() {
            for &v in p {
                inc[v as usize].push(e as u32);
            }
        }
        Net {
            vwgt,
            pins,
            ewgt,
            inc,
        }
    }

    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.vwgt.iter().sum()
    }

    /// Sub-net induced by `vertices` (local index = position in the slice).
    /// Edges keep only their pins inside the set and are dropped when fewer
    /// than two remain.
    pub fn induced(&self, vertices: &[u32]) -> Net {
        let mut local = vec![u32::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let mut merged: std::collections::BTreeMap<Vec<u32>, i64> = Default::default();
        let mut order = Vec::new();
        for (p, &w) in self.pins.iter().zip(&self.ewgt) {
            let mut sub: Vec<u32> = p
                .iter()
                .map(|&v| local[v as usize])
                .filter(|&l| l != u32::MAX)
                .collect();
            if sub.len() < 2 {
                continue;
            }
            sub.sort_unstable();
            match merged.get_mut(&sub) {
                Some(x) => *x += w,
                None => {
                    order.push(sub.clone());
                    merged.insert(sub, w);
                }
            }
        }
        let ewgt = order.iter().map(|p| merged[p]).collect();
        let vwgt = vertices.iter().map(|&v| self.vwgt[v as usize]).collect();
        Net::new(vwgt, order, ewgt)
    }

    /// Hyperedge cut of a bisection, in weight units.
    pub fn cut(&self, side: &[u8]) -> i64 {
        self.pins
            .iter()
            .zip(&self.ewgt)
            .filter(|(p, _)| {
                let first = side[p[0] as usize];
                p.iter().any(|&v| side[v as usize] != first)
            })
            .map(|(_, &w)| w)
            .sum()
    }

    pub fn to_hypergraph(&self, labels: Vec<String>) -> Hypergraph {
        let edges = self
            .pins
            .iter()
            .zip(&self.ewgt)
            .map(|(p, &w)| (p.iter().map(|&v| v as usize).collect(), w as f64 / WEIGHT_SCALE))
            .collect();
        Hypergraph::new(labels, self.vwgt.clone(), edges)
    }
}

/// Weight and cardinality constraints on the two sides of a bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Limits {
    pub max_weight: [f64; 2],
    pub min_count: [usize; 2],
}

impl Limits {
    /// Total constraint violation; zero means feasible.
    pub fn violation(&self, weight: [f64; 2], count: [usize; 2]) -> f64 {
        let mut v = 0.0;
        for s in 0..2 {
            v += (weight[s] - self.max_weight[s]).max(0.0);
            v += self.min_count[s].saturating_sub(count[s]) as f64;
        }
        v
    }
}

pub(crate) fn side_totals(net: &Net, side: &[u8]) -> ([f64; 2], [usize; 2]) {
    let mut w = [0.0; 2];
    let mut c = [0usize; 2];
    for (v, &s) in side.iter().enumerate() {
        w[s as usize] += net.vwgt[v];
        c[s as usize] += 1;
    }
    (w, c)
}

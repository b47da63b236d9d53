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

//! Multilevel recursive-bisection hypergraph partitioner.
//!
//! Each bisection coarsens the hypergraph by heavy-connectivity matching,
//! bisects the coarsest level by greedy region growing (best of several
//! restarts), then projects back level by level with FM refinement. A
//! k-way partition is built by recursive bisection with part counts split
//! `floor(k/2)` / `ceil(k/2)`; a side that will hold `j` final parts may
//! weigh at most `j` times the per-part capacity, so the final balance
//! bound always remains reachable.

mod coarsen;
mod fm;
mod initial;
mod net;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::{cut_report, CutReport, Hypergraph, Partition};
use crate::seed::mix;

use self::coarsen::coarsen_net;
use self::fm::fm_bisect;
use self::initial::best_initial;
use self::net::{side_totals, Limits, Net};

pub const DEFAULT_K: usize = 17;
pub const DEFAULT_EPSILON: f64 = 0.10;
pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_PASSES: usize = 10;
const MIN_COARSE_VERTICES: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("balance bound cannot be met: {0}")]
    InfeasibleBalance(String),
    #[error("k = {k} exceeds the vertex count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub k: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub restarts: usize,
    pub max_passes: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            k: DEFAULT_K,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

/// Per-part capacity `(1 + epsilon) * total / k`, rounded down when all
/// vertex weights are integral (part weights are then integers too).
fn part_capacity(vertex_weights: &[f64], k: usize, epsilon: f64) -> f64 {
    let total: f64 = vertex_weights.iter().sum();
    let bound = (1.0 + epsilon) * total / k as f64;
    if vertex_weights.iter().all(|w| w.fract() == 0.0) {
        (bound + 1e-9).floor().min(bound.ceil())
    } else {
        bound
    }
}

fn check_heaviest(vertex_weights: &[f64], cap: f64) -> Result<(), PartitionError> {
    match vertex_weights
        .iter()
        .enumerate()
        .find(|&(_, &w)| w > cap)
    {
        Some((v, &w)) => Err(PartitionError::InfeasibleBalance(format!(
            "vertex {} weighs {} but parts may hold at most {}",
            v, w, cap
        ))),
        None => Ok(()),
    }
}

/// One level of a coarsening hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseLevel {
    pub graph: Hypergraph,
    /// Vertex of the next-finer level -> vertex of this level.
    pub map: Vec<usize>,
}

/// Coarsens `hg` toward `target_vertices`. Matching is deterministic:
/// heaviest pair connectivity first, ties to the lowest vertex indices.
/// Merged vertices never exceed 1.5× the average weight at the target size.
pub fn coarsen(hg: &Hypergraph, target_vertices: usize) -> Vec<CoarseLevel> {
    let net = Net::from_hypergraph(hg);
    let max_vw = 1.5 * net.total_weight() / target_vertices.max(1) as f64;
    coarsen_net(&net, target_vertices, max_vw)
        .into_iter()
        .map(|l| {
            let labels = (0..l.net.n()).map(|i| format!("c{}", i)).collect();
            CoarseLevel {
                graph: l.net.to_hypergraph(labels),
                map: l.map.iter().map(|&m| m as usize).collect(),
            }
        })
        .collect()
}

fn bisection_limits(hg: &Hypergraph, epsilon: f64) -> Result<Limits, PartitionError> {
    if hg.n_vertices() < 2 {
        return Err(PartitionError::KTooLarge {
            k: 2,
            n: hg.n_vertices(),
        });
    }
    let cap = part_capacity(&hg.vertex_weights, 2, epsilon);
    check_heaviest(&hg.vertex_weights, cap)?;
    Ok(Limits {
        max_weight: [cap, cap],
        min_count: [1, 1],
    })
}

fn sides_to_partition(side: &[u8], epsilon: f64) -> Partition {
    Partition {
        k: 2,
        assignment: side.iter().map(|&s| s as usize).collect(),
        epsilon,
    }
}

/// Balanced bisection of a small hypergraph by greedy region growing from
/// random start vertices, each refined by FM; keeps the smallest cut.
pub fn initial_bisection(hg: &Hypergraph, epsilon: f64, seed: u64) -> Result<Partition, PartitionError> {
    initial_bisection_with(hg, epsilon, seed, DEFAULT_RESTARTS)
}

pub fn initial_bisection_with(
    hg: &Hypergraph,
    epsilon: f64,
    seed: u64,
    restarts: usize,
) -> Result<Partition, PartitionError> {
    let limits = bisection_limits(hg, epsilon)?;
    let net = Net::from_hypergraph(hg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = best_initial(
        &net,
        &limits,
        net.total_weight() / 2.0,
        restarts,
        DEFAULT_MAX_PASSES,
        &mut rng,
    );
    let (w, c) = side_totals(&net, &side);
    if limits.violation(w, c) > 0.0 {
        return Err(PartitionError::InfeasibleBalance(
            "no balanced bisection found".into(),
        ));
    }
    Ok(sides_to_partition(&side, epsilon))
}

/// Pass-by-pass record of an FM run, cuts in quantized weight units.
#[derive(Debug, Clone, PartialEq)]
pub struct FmTrace {
    pub initial_cut: i64,
    /// Cut after each pass as tracked incrementally by the gain updates.
    pub cut_trace: Vec<i64>,
}

/// FM refinement of a bisection under the bound `(1 + p.epsilon) * total / 2`.
/// Never increases the cut. Partitions with `k != 2` are returned unchanged.
pub fn fm_refine(hg: &Hypergraph, p: &Partition, max_passes: usize) -> Partition {
    fm_refine_traced(hg, p, max_passes).0
}

pub fn fm_refine_traced(hg: &Hypergraph, p: &Partition, max_passes: usize) -> (Partition, FmTrace) {
    let net = Net::from_hypergraph(hg);
    let mut side: Vec<u8> = p.assignment.iter().map(|&s| s as u8).collect();
    let initial_cut = net.cut(&side);
    let untouched = FmTrace {
        initial_cut,
        cut_trace: Vec::new(),
    };
    if p.k != 2 || hg.n_vertices() < 2 {
        return (p.clone(), untouched);
    }
    let cap = (1.0 + p.epsilon) * hg.total_vertex_weight() / 2.0;
    let limits = Limits {
        max_weight: [cap, cap],
        min_count: [1, 1],
    };
    let stats = fm_bisect(&net, &mut side, &limits, max_passes);
    // FM only accepts prefixes that do not worsen the balance; the cut
    // can only grow if that trade was made to repair an infeasible input.
    (
        sides_to_partition(&side, p.epsilon),
        FmTrace {
            initial_cut: stats.initial_cut,
            cut_trace: stats.cut_trace,
        },
    )
}

/// Moves vertices until `limits` hold, best gain first (ties: lowest index).
fn rebalance(net: &Net, side: &mut [u8], limits: &Limits) {
    loop {
        let (w, c) = side_totals(net, side);
        let current = limits.violation(w, c);
        if current == 0.0 {
            return;
        }
        let mut best: Option<(i64, usize)> = None;
        for v in 0..net.n() {
            let from = side[v] as usize;
            let to = 1 - from;
            let mut nw = w;
            nw[from] -= net.vwgt[v];
            nw[to] += net.vwgt[v];
            let mut nc = c;
            nc[from] -= 1;
            nc[to] += 1;
            if limits.violation(nw, nc) >= current {
                continue;
            }
            let g = initial::move_gain(net, side, v);
            if best.is_none_or(|(bg, _)| g > bg) {
                best = Some((g, v));
            }
        }
        match best {
            Some((_, v)) => side[v] ^= 1,
            None => return,
        }
    }
}

fn multilevel_bisect(
    net: &Net,
    limits: &Limits,
    target0: f64,
    k_sub: usize,
    cfg: &PartitionConfig,
    seed: u64,
) -> Vec<u8> {
    let total = net.total_weight();
    let coarse_target = (2 * k_sub).max(MIN_COARSE_VERTICES);
    let max_vw = (1.5 * total / coarse_target as f64)
        .min(0.5 * limits.max_weight[0].min(limits.max_weight[1]));
    let levels = coarsen_net(net, coarse_target, max_vw);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarsest = levels.last().map_or(net, |l| &l.net);
    let mut side = best_initial(coarsest, limits, target0, cfg.restarts, cfg.max_passes, &mut rng);

    for i in (0..levels.len()).rev() {
        let finer = if i == 0 { net } else { &levels[i - 1].net };
        side = levels[i].map.iter().map(|&c| side[c as usize]).collect();
        fm_bisect(finer, &mut side, limits, cfg.max_passes);
    }
    let (w, c) = side_totals(net, &side);
    if limits.violation(w, c) > 0.0 {
        rebalance(net, &mut side, limits);
        fm_bisect(net, &mut side, limits, cfg.max_passes);
    }
    side
}

struct Recursion<'a> {
    net: &'a Net,
    cap: f64,
    cfg: &'a PartitionConfig,
    assignment: Vec<usize>,
}

impl Recursion<'_> {
    fn run(&mut self, vertices: Vec<u32>, k_sub: usize, offset: usize) -> Result<(), PartitionError> {
        if k_sub == 1 {
            for v in vertices {
                self.assignment[v as usize] = offset;
            }
            return Ok(());
        }
        if vertices.len() < k_sub {
            return Err(PartitionError::InfeasibleBalance(format!(
                "{} vertices cannot fill {} parts",
                vertices.len(),
                k_sub
            )));
        }
        if vertices.len() == k_sub {
            for (i, v) in vertices.into_iter().enumerate() {
                self.assignment[v as usize] = offset + i;
            }
            return Ok(());
        }
        let sub = self.net.induced(&vertices);
        let k0 = k_sub / 2;
        let k1 = k_sub - k0;
        let limits = Limits {
            max_weight: [k0 as f64 * self.cap, k1 as f64 * self.cap],
            min_count: [k0, k1],
        };
        let target0 = sub.total_weight() * k0 as f64 / k_sub as f64;
        let seed = mix(mix(self.cfg.seed, offset as u64), k_sub as u64);
        let side = multilevel_bisect(&sub, &limits, target0, k_sub, self.cfg, seed);
        let (w, c) = side_totals(&sub, &side);
        if limits.violation(w, c) > 0.0 {
            return Err(PartitionError::InfeasibleBalance(format!(
                "could not split weight {:.3} into sides of at most {:.3} and {:.3}",
                w[0] + w[1],
                limits.max_weight[0],
                limits.max_weight[1]
            )));
        }
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, &v) in vertices.iter().enumerate() {
            if side[i] == 0 {
                left.push(v);
            } else {
                right.push(v);
            }
        }
        self.run(left, k0, offset)?;
        self.run(right, k1, offset + k0)
    }
}

/// Balanced k-way partition by recursive multilevel bisection.
/// Deterministic for a fixed configuration.
pub fn partition_k(
    hg: &Hypergraph,
    k: usize,
    epsilon: f64,
    seed: u64,
) -> Result<(Partition, CutReport), PartitionError> {
    partition_with(
        hg,
        &PartitionConfig {
            k,
            epsilon,
            seed,
            ..Default::default()
        },
    )
}

pub fn partition_with(
    hg: &Hypergraph,
    cfg: &PartitionConfig,
) -> Result<(Partition, CutReport), PartitionError> {
    let (k, n) = (cfg.k, hg.n_vertices());
    if k < 2 {
        return Err(PartitionError::InvalidK(k));
    }
    if k > n {
        return Err(PartitionError::KTooLarge { k, n });
    }
    let cap = part_capacity(&hg.vertex_weights, k, cfg.epsilon);
    check_heaviest(&hg.vertex_weights, cap)?;
    if cap * (k as f64) < hg.total_vertex_weight() {
        return Err(PartitionError::InfeasibleBalance(format!(
            "{} parts of at most {} cannot hold total weight {}",
            k,
            cap,
            hg.total_vertex_weight()
        )));
    }
    let net = Net::from_hypergraph(hg);
    let mut rec = Recursion {
        net: &net,
        cap,
        cfg,
        assignment: vec![0; n],
    };
    rec.run((0..n as u32).collect(), k, 0)?;
    let partition = Partition {
        k,
        assignment: rec.assignment,
        epsilon: cfg.epsilon,
    };
    if !partition.is_balanced(&hg.vertex_weights) {
        return Err(PartitionError::InfeasibleBalance(
            "final partition violates the balance bound".into(),
        ));
    }
    let report = cut_report(hg, &partition);
    Ok((partition, report))
}

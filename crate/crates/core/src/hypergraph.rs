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

//! Weighted hypergraphs built from association rules, k-way partitions
//! and their cut metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::AssociationRule;

/// Edge weights are quantized to integer units of `1 / WEIGHT_SCALE`
/// for refinement, so gain bookkeeping is exact.
pub const WEIGHT_SCALE: f64 = 1000.0;

pub fn weight_units(w: f64) -> i64 {
    ((w * WEIGHT_SCALE).round() as i64).max(1)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypergraphError {
    #[error("no rules to build a hypergraph from")]
    NoRules,
    #[error("malformed hypergraph file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeWeighting {
    /// Mean confidence of the rules sharing the vertex set.
    #[default]
    MeanConfidence,
    SumConfidence,
    /// Number of rules sharing the vertex set.
    RuleCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    pub vertices: Vec<String>,
    pub vertex_weights: Vec<f64>,
    /// Sorted, distinct vertex indices; at least two per edge.
    pub edges: Vec<Vec<usize>>,
    pub edge_weights: Vec<f64>,
}

impl Hypergraph {
    /// Merges edges with identical vertex sets (summing weights) and drops
    /// edges with fewer than two distinct vertices.
    pub fn new(
        vertices: Vec<String>,
        vertex_weights: Vec<f64>,
        edges: Vec<(Vec<usize>, f64)>,
    ) -> Hypergraph {
        assert_eq!(vertices.len(), vertex_weights.len());
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let mut order = Vec::new();
        for (mut e, w) in edges {
            e.sort_unstable();
            e.dedup();
            if e.len() < 2 {
                continue;
            }
            assert!(e.iter().all(|&v| v < vertices.len()), "edge vertex out of range");
            match merged.get_mut(&e) {
                Some(x) => *x += w,
                None => {
                    order.push(e.clone());
                    merged.insert(e, w);
                }
            }
        }
        let edge_weights = order.iter().map(|e| merged[e]).collect();
        Hypergraph {
            vertices,
            vertex_weights,
            edges: order,
            edge_weights,
        }
    }

    /// Unit vertex weights, labels `v0, v1, ...`.
    pub fn from_edges(n: usize, edges: Vec<(Vec<usize>, f64)>) -> Hypergraph {
        Hypergraph::new(
            (0..n).map(|i| format!("v{}", i)).collect(),
            vec![1.0; n],
            edges,
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_vertex_weight(&self) -> f64 {
        self.vertex_weights.iter().sum()
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edge_weights.iter().sum()
    }

    /// Vertex -> incident edge indices.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_vertices()];
        for (e, pins) in self.edges.iter().enumerate() {
            for &v in pins {
                inc[v].push(e);
            }
        }
        inc
    }

    /// `E V [fmt]` header, then `weight v1 v2 ...` per edge (1-indexed),
    /// then one vertex weight per line when any weight differs from 1.
    pub fn to_hgr(&self) -> String {
        let weighted_vertices = self.vertex_weights.iter().any(|&w| w != 1.0);
        let mut out = format!(
            "{} {} {}\n",
            self.n_edges(),
            self.n_vertices(),
            if weighted_vertices { 11 } else { 1 }
        );
        for (pins, w) in self.edges.iter().zip(&self.edge_weights) {
            let _ = write!(out, "{}", w);
            for &v in pins {
                let _ = write!(out, " {}", v + 1);
            }
            out.push('\n');
        }
        if weighted_vertices {
            for w in &self.vertex_weights {
                let _ = writeln!(out, "{}", w);
            }
        }
        out
    }

    /// Parses [`to_hgr`](Self::to_hgr) output. Labels are taken from
    /// `labels` when given, else `v0, v1, ...`.
    pub fn from_hgr(text: &str, labels: Option<Vec<String>>) -> Result<Hypergraph, HypergraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
        let bad = |line: usize, reason: &str| HypergraphError::Malformed {
            line: line + 1,
            reason: reason.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() < 2 || head.len() > 3 {
            return Err(bad(hl, "header must be `E V [fmt]`"));
        }
        let n_edges: usize = head[0].parse().map_err(|_| bad(hl, "bad edge count"))?;
        let n_vertices: usize = head[1].parse().map_err(|_| bad(hl, "bad vertex count"))?;
        let fmt = head.get(2).copied().unwrap_or("0");
        let (edge_w, vertex_w) = match fmt {
            "0" => (false, false),
            "1" => (true, false),
            "10" => (false, true),
            "11" => (true, true),
            _ => return Err(bad(hl, "unknown fmt code")),
        };
        let mut edges = Vec::with_capacity(n_edges);
        for _ in 0..n_edges {
            let (ln, line) = lines.next().ok_or_else(|| bad(hl, "fewer edges than declared"))?;
            let mut fields = line.split_whitespace();
            let w: f64 = if edge_w {
                fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .filter(|w: &f64| *w > 0.0)
                    .ok_or_else(|| bad(ln, "bad edge weight"))?
            } else {
                1.0
            };
            let pins = fields
                .map(|f| {
                    f.parse::<usize>()
                        .ok()
                        .filter(|&v| v >= 1 && v <= n_vertices)
                        .map(|v| v - 1)
                        .ok_or_else(|| bad(ln, "bad vertex id"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            edges.push((pins, w));
        }
        let mut vertex_weights = vec![1.0; n_vertices];
        if vertex_w {
            for w in vertex_weights.iter_mut() {
                let (ln, line) = lines.next().ok_or_else(|| bad(hl, "missing vertex weights"))?;
                *w = line
                    .trim()
                    .parse()
                    .ok()
                    .filter(|w: &f64| *w > 0.0)
                    .ok_or_else(|| bad(ln, "bad vertex weight"))?;
            }
        }
        let labels = match labels {
            Some(l) if l.len() == n_vertices => l,
            Some(_) => return Err(bad(hl, "label count does not match vertex count")),
            None => (0..n_vertices).map(|i| format!("v{}", i)).collect(),
        };
        Ok(Hypergraph::new(labels, vertex_weights, edges))
    }
}

/// One hyperedge per distinct rule item set (antecedent ∪ consequent).
/// Vertices are all items mentioned by any rule, sorted.
pub fn build_hypergraph(
    rules: &[AssociationRule],
    weighting: EdgeWeighting,
) -> Result<Hypergraph, HypergraphError> {
    if rules.is_empty() {
        return Err(HypergraphError::NoRules);
    }
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for r in rules {
        groups.entry(r.items()).or_default().push(r.confidence);
    }
    let vertices: Vec<String> = groups
        .keys()
        .flatten()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let edges = groups
        .iter()
        .map(|(items, confs)| {
            let pins = items.iter().map(|it| index[it.as_str()]).collect();
            let w = match weighting {
                EdgeWeighting::MeanConfidence => confs.iter().sum::<f64>() / confs.len() as f64,
                EdgeWeighting::SumConfidence => confs.iter().sum(),
                EdgeWeighting::RuleCount => confs.len() as f64,
            };
            (pins, w)
        })
        .collect();
    let n = vertices.len();
    Ok(Hypergraph::new(vertices, vec![1.0; n], edges))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    /// Vertex -> part in `[0, k)`.
    pub assignment: Vec<usize>,
    pub epsilon: f64,
}

impl Partition {
    pub fn part_weights(&self, vertex_weights: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.k];
        for (v, &p) in self.assignment.iter().enumerate() {
            w[p] += vertex_weights[v];
        }
        w
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &p in &self.assignment {
            s[p] += 1;
        }
        s
    }

    /// `(1 + epsilon) * total / k`.
    pub fn max_part_weight(&self, vertex_weights: &[f64]) -> f64 {
        (1.0 + self.epsilon) * vertex_weights.iter().sum::<f64>() / self.k as f64
    }

    /// Every part non-empty and no heavier than the balance bound.
    pub fn is_balanced(&self, vertex_weights: &[f64]) -> bool {
        let bound = self.max_part_weight(vertex_weights);
        self.part_sizes().iter().all(|&s| s > 0)
            && self.part_weights(vertex_weights).iter().all(|&w| w <= bound)
    }

    /// One part id per line, vertex order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.assignment {
            let _ = writeln!(out, "{}", p);
        }
        out
    }

    pub fn from_text(text: &str, epsilon: f64) -> Result<Partition, HypergraphError> {
        let assignment = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.trim().parse::<usize>().map_err(|_| HypergraphError::Malformed {
                    line: i + 1,
                    reason: "bad part id".into(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Ok(Partition {
            k,
            assignment,
            epsilon,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    /// Weight of edges spanning two or more parts.
    pub cut: f64,
    /// Sum over edges of weight × (parts spanned − 1).
    pub connectivity: f64,
    pub per_part_sizes: Vec<usize>,
    pub per_part_weights: Vec<f64>,
    pub max_part_weight: f64,
}

fn parts_spanned(pins: &[usize], assignment: &[usize], scratch: &mut Vec<usize>) -> usize {
    scratch.clear();
    scratch.extend(pins.iter().map(|&v| assignment[v]));
    scratch.sort_unstable();
    scratch.dedup();
    scratch.len()
}

pub fn cut_report(hg: &Hypergraph, p: &Partition) -> CutReport {
    let mut scratch = Vec::new();
    let (mut cut, mut connectivity) = (0.0, 0.0);
    for (pins, &w) in hg.edges.iter().zip(&hg.edge_weights) {
        let spanned = parts_spanned(pins, &p.assignment, &mut scratch);
        if spanned > 1 {
            cut += w;
            connectivity += w * (spanned - 1) as f64;
        }
    }
    CutReport {
        cut,
        connectivity,
        per_part_sizes: p.part_sizes(),
        per_part_weights: p.part_weights(&hg.vertex_weights),
        max_part_weight: p.max_part_weight(&hg.vertex_weights),
    }
}

/// Cut in quantized weight units (see [`WEIGHT_SCALE`]); this is the
/// quantity refinement minimizes.
pub fn cut_units(hg: &Hypergraph, assignment: &[usize]) -> i64 {
    let mut scratch = Vec::new();
    hg.edges
        .iter()
        .zip(&hg.edge_weights)
        .filter(|(pins, _)| parts_spanned(pins, assignment, &mut scratch) > 1)
        .map(|(_, &w)| weight_units(w))
        .sum()
}

/// Assigns documents missing from the hypergraph, one at a time, to the
/// currently lightest part (ties to the lowest part id). Returns the full
/// label list (hypergraph vertices first, then the added docs in input
/// order) and the extended partition.
pub fn isolated_vertex_placement(
    all_docs: &[String],
    hg_vertices: &[String],
    p: &Partition,
) -> (Vec<String>, Partition) {
    let known: std::collections::HashSet<&str> = hg_vertices.iter().map(String::as_str).collect();
    let mut labels = hg_vertices.to_vec();
    let mut assignment = p.assignment.clone();
    let mut sizes = p.part_sizes();
    let mut seen = std::collections::HashSet::new();
    for d in all_docs {
        if known.contains(d.as_str()) || !seen.insert(d.as_str()) {
            continue;
        }
        let (lightest, _) = sizes
            .iter()
            .enumerate()
            .min_by_key(|&(i, &s)| (s, i))
            .expect("partition has parts");
        sizes[lightest] += 1;
        assignment.push(lightest);
        labels.push(d.clone());
    }
    (
        labels,
        Partition {
            k: p.k,
            assignment,
            epsilon: p.epsilon,
        },
    )
}

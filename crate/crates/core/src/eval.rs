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

//! Profile-versus-cluster scoring and recommendation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::ClusterAssignment;
use crate::session::{Session, UserKey};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("no user profiles to evaluate")]
    NoProfiles,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BestOf {
    #[default]
    F1,
    Precision,
    Recall,
}

impl FromStr for BestOf {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f1" => Ok(BestOf::F1),
            "precision" => Ok(BestOf::Precision),
            "recall" => Ok(BestOf::Recall),
            other => Err(EvalError::InvalidConfig(format!("unknown metric `{}`", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub min_doc_views: usize,
    pub min_profile_items: usize,
    pub k_clusters: usize,
    pub best_of_metric: BestOf,
    /// Report the maximum of each metric separately instead of the triple
    /// of the single best cluster.
    pub independent_maxima: bool,
    /// Restrict profiles to the document universe before applying the
    /// size threshold.
    pub restrict_first: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            min_doc_views: 10,
            min_profile_items: 15,
            k_clusters: 17,
            best_of_metric: BestOf::F1,
            independent_maxima: false,
            restrict_first: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (name, v) in [
            ("min_doc_views", self.min_doc_views),
            ("min_profile_items", self.min_profile_items),
            ("k_clusters", self.k_clusters),
        ] {
            if v == 0 {
                return Err(EvalError::InvalidConfig(format!("{} must be positive", name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: UserKey,
    pub items: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    pub fn new(precision: f64, recall: f64) -> ScoreTriple {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ScoreTriple { precision, recall, f1 }
    }

    fn metric(&self, m: BestOf) -> f64 {
        match m {
            BestOf::F1 => self.f1,
            BestOf::Precision => self.precision,
            BestOf::Recall => self.recall,
        }
    }
}

impl fmt::Display for ScoreTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}\t{:.4}\t{:.4}", self.precision, self.recall, self.f1)
    }
}

/// Total views per document, repeats included.
pub fn view_counts(sessions: &[Session]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in sessions.iter().flat_map(|s| &s.resources) {
        *counts.entry(r.item_key()).or_insert(0) += 1;
    }
    counts
}

/// Documents viewed at least `min_doc_views` times.
pub fn select_top_documents(sessions: &[Session], cfg: &EvalConfig) -> BTreeSet<String> {
    view_counts(sessions)
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_doc_views)
        .map(|(d, _)| d)
        .collect()
}

/// Profiles of users with enough distinct documents, sorted by user.
pub fn build_profiles(sessions: &[Session], cfg: &EvalConfig, universe: &BTreeSet<String>) -> Vec<UserProfile> {
    let mut by_user: BTreeMap<&UserKey, BTreeSet<String>> = BTreeMap::new();
    for s in sessions {
        let items = by_user.entry(&s.user).or_default();
        items.extend(s.resources.iter().map(|r| r.item_key()));
    }
    by_user
        .into_iter()
        .filter_map(|(user, all)| {
            let restricted: BTreeSet<String> = all.iter().filter(|d| universe.contains(*d)).cloned().collect();
            let gate = if cfg.restrict_first { restricted.len() } else { all.len() };
            (gate >= cfg.min_profile_items).then(|| UserProfile {
                user: user.clone(),
                items: restricted,
            })
        })
        .collect()
}

/// Precision and recall of a cluster taken as the predicted set against
/// the profile taken as the relevant set.
pub fn score_pair(profile: &BTreeSet<String>, cluster: &BTreeSet<String>) -> Result<ScoreTriple, EvalError> {
    if cluster.is_empty() {
        return Err(EvalError::EmptyCluster);
    }
    let hits = cluster.intersection(profile).count() as f64;
    let recall = if profile.is_empty() { 0.0 } else { hits / profile.len() as f64 };
    Ok(ScoreTriple::new(hits / cluster.len() as f64, recall))
}

/// Best cluster for one profile and its triple. Ties go to the lowest
/// cluster index. Empty clusters are skipped.
pub fn score_user(
    profile: &UserProfile,
    clusters: &[BTreeSet<String>],
    cfg: &EvalConfig,
) -> (Option<usize>, ScoreTriple) {
    let mut best: Option<(usize, ScoreTriple)> = None;
    let mut maxima = ScoreTriple::default();
    for (i, c) in clusters.iter().enumerate() {
        let Ok(t) = score_pair(&profile.items, c) else {
            continue;
        };
        maxima.precision = maxima.precision.max(t.precision);
        maxima.recall = maxima.recall.max(t.recall);
        maxima.f1 = maxima.f1.max(t.f1);
        if best.is_none_or(|(_, b)| t.metric(cfg.best_of_metric) > b.metric(cfg.best_of_metric)) {
            best = Some((i, t));
        }
    }
    match best {
        Some((i, _)) if cfg.independent_maxima => (Some(i), maxima),
        Some((i, t)) => (Some(i), t),
        None => (None, ScoreTriple::default()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserScore {
    pub user: String,
    /// Winning cluster id, absent when every cluster was empty.
    pub cluster: Option<usize>,
    pub profile_size: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub algorithm: String,
    pub mean: ScoreTriple,
    pub per_user: Vec<UserScore>,
}

pub fn clusters_of(assignment: &ClusterAssignment) -> Vec<BTreeSet<String>> {
    assignment.members().into_iter().map(|m| m.into_iter().collect()).collect()
}

/// Component-wise mean of per-user best triples.
pub fn evaluate_algorithm(
    assignment: &ClusterAssignment,
    profiles: &[UserProfile],
    cfg: &EvalConfig,
) -> Result<EvalResult, EvalError> {
    if profiles.is_empty() {
        return Err(EvalError::NoProfiles);
    }
    let clusters = clusters_of(assignment);
    let per_user: Vec<UserScore> = profiles
        .par_iter()
        .map(|p| {
            let (cluster, t) = score_user(p, &clusters, cfg);
            UserScore {
                user: p.user.to_string(),
                cluster,
                profile_size: p.items.len(),
                precision: t.precision,
                recall: t.recall,
                f1: t.f1,
            }
        })
        .collect();
    let n = per_user.len() as f64;
    let mean = ScoreTriple {
        precision: per_user.iter().map(|u| u.precision).sum::<f64>() / n,
        recall: per_user.iter().map(|u| u.recall).sum::<f64>() / n,
        f1: per_user.iter().map(|u| u.f1).sum::<f64>() / n,
    };
    Ok(EvalResult {
        algorithm: assignment.algorithm.report_name().to_string(),
        mean,
        per_user,
    })
}

pub const REPORT_HEADER: &str = "algorithm\tprecision\trecall\tf1";

pub fn report_tsv(results: &[EvalResult]) -> String {
    let mut out = format!("{}\n", REPORT_HEADER);
    for r in results {
        out.push_str(&format!("{}\t{}\n", r.algorithm, r.mean));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub user: String,
    pub items: Vec<String>,
}

/// Unseen items of the user's best cluster, most viewed first (ties by
/// doc id), at most `n`.
pub fn recommend(
    profile: &UserProfile,
    clusters: &[BTreeSet<String>],
    n: usize,
    popularity: &BTreeMap<String, usize>,
    cfg: &EvalConfig,
) -> Recommendation {
    let (best, _) = score_user(profile, clusters, cfg);
    let mut items: Vec<String> = best
        .map(|c| clusters[c].difference(&profile.items).cloned().collect())
        .unwrap_or_default();
    items.sort_by(|a, b| {
        let pa = popularity.get(a).copied().unwrap_or(0);
        let pb = popularity.get(b).copied().unwrap_or(0);
        pb.cmp(&pa).then(a.cmp(b))
    });
    items.truncate(n);
    Recommendation {
        user: profile.user.to_string(),
        items,
    }
}

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

//! Transactions, Apriori frequent-itemset mining and association rules.
//!
//! Support thresholds are applied to exact integer counts: an itemset is
//! frequent when `count >= ceil(min_support * n)`. Fractions are derived
//! from the counts only at the output boundary.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::session::Session;

/// Absorbs representation error in `threshold * n` before rounding up, so
/// that e.g. `0.07 * 100` counts as 7.
const THRESHOLD_SLACK: f64 = 1e-9;

pub const DEFAULT_MIN_SUPPORT: f64 = 0.01;
pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.80;
pub const DEFAULT_MAX_ITEMSET_SIZE: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MiningError {
    #[error("no transactions to mine")]
    NoTransactions,
    #[error("min_support must be in (0, 1], got {0}")]
    InvalidSupport(f64),
    #[error("min_confidence must be in [0, 1], got {0}")]
    InvalidConfidence(f64),
    #[error("frequent itemsets larger than the cap of {cap} items exist; raise max_itemset_size or min_support")]
    ItemsetTooLarge { cap: usize },
    #[error("malformed rule at line {0}")]
    MalformedRule(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TransactionMode {
    #[default]
    PerSession,
    /// All of a user's sessions pooled into one transaction.
    PerUser,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tid: String,
    /// Sorted, deduplicated item keys.
    pub items: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionReport {
    pub transactions: usize,
    pub dropped_empty: usize,
}

/// One transaction per session (or per user) holding its distinct items.
/// When `universe` is given, items outside it are ignored. Transactions
/// left empty are dropped and counted.
pub fn build_transactions(
    sessions: &[Session],
    mode: TransactionMode,
    universe: Option<&BTreeSet<String>>,
) -> (Vec<Transaction>, TransactionReport) {
    let keep = |k: &String| universe.is_none_or(|u| u.contains(k));
    let groups: Vec<(String, BTreeSet<String>)> = match mode {
        TransactionMode::PerSession => sessions
            .iter()
            .map(|s| {
                let items = s.resources.iter().map(|r| r.item_key()).filter(keep).collect();
                (s.session_id.clone(), items)
            })
            .collect(),
        TransactionMode::PerUser => {
            let mut order = Vec::new();
            let mut by_user: HashMap<String, BTreeSet<String>> = HashMap::new();
            for s in sessions {
                let key = s.user.to_string();
                let items = by_user.entry(key.clone()).or_insert_with(|| {
                    order.push(key.clone());
                    BTreeSet::new()
                });
                items.extend(s.resources.iter().map(|r| r.item_key()).filter(keep));
            }
            order
                .into_iter()
                .map(|u| {
                    let items = by_user.remove(&u).unwrap_or_default();
                    (u, items)
                })
                .collect()
        }
    };
    let mut report = TransactionReport::default();
    let mut out = Vec::new();
    for (tid, items) in groups {
        if items.is_empty() {
            report.dropped_empty += 1;
        } else {
            out.push(Transaction {
                tid,
                items: items.into_iter().collect(),
            });
        }
    }
    report.transactions = out.len();
    (out, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemSet {
    pub items: Vec<String>,
    pub support_count: usize,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemsets {
    /// Ordered by size, then lexicographically.
    pub itemsets: Vec<ItemSet>,
    pub n_transactions: usize,
}

impl FrequentItemsets {
    pub fn max_size(&self) -> usize {
        self.itemsets.iter().map(|s| s.items.len()).max().unwrap_or(0)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for s in &self.itemsets {
            out.push_str(&format!("{}\t{}\t{}\n", s.items.join(","), s.support_count, s.support));
        }
        out
    }
}

/// Smallest integer count meeting `fraction` of `n`.
pub fn min_count(fraction: f64, n: usize) -> usize {
    let raw = (fraction * n as f64 - THRESHOLD_SLACK).ceil();
    raw.max(0.0) as usize
}

struct Vocabulary {
    items: Vec<String>,
}

impl Vocabulary {
    fn encode(tx: &[Transaction]) -> (Vocabulary, Vec<Vec<u64>>) {
        let items: Vec<String> = tx
            .iter()
            .flat_map(|t| t.items.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: HashMap<&str, usize> =
            items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let words = items.len().div_ceil(64).max(1);
        let bitsets = tx
            .iter()
            .map(|t| {
                let mut bits = vec![0u64; words];
                for it in &t.items {
                    let i = index[it.as_str()];
                    bits[i / 64] |= 1 << (i % 64);
                }
                bits
            })
            .collect();
        (Vocabulary { items }, bitsets)
    }

    fn decode(&self, set: &[u32]) -> Vec<String> {
        set.iter().map(|&i| self.items[i as usize].clone()).collect()
    }
}

fn contains_all(bits: &[u64], set: &[u32]) -> bool {
    set.iter().all(|&i| bits[i as usize / 64] & (1 << (i % 64)) != 0)
}

fn count_candidates(bitsets: &[Vec<u64>], candidates: &[Vec<u32>]) -> Vec<usize> {
    bitsets
        .par_iter()
        .fold(
            || vec![0usize; candidates.len()],
            |mut acc, bits| {
                for (c, cand) in candidates.iter().enumerate() {
                    if contains_all(bits, cand) {
                        acc[c] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0usize; candidates.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

/// Joins sorted k-itemsets sharing a (k-1)-prefix and prunes candidates
/// with an infrequent k-subset.
fn next_candidates(level: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let known: HashSet<&[u32]> = level.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            let k = a.len();
            if a[..k - 1] != b[..k - 1] {
                // level is sorted, so no later b shares a's prefix
                break;
            }
            let mut cand = a.clone();
            cand.push(b[k - 1]);
            let all_subsets_frequent = (0..cand.len()).all(|skip| {
                let sub: Vec<u32> = cand
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &x)| x)
                    .collect();
                known.contains(sub.as_slice())
            });
            if all_subsets_frequent {
                out.push(cand);
            }
        }
    }
    out
}

/// Level-wise Apriori. Aborts with [`MiningError::ItemsetTooLarge`] if any
/// itemset with more than `max_size` items is frequent.
pub fn mine_frequent_itemsets(
    tx: &[Transaction],
    min_support: f64,
    max_size: usize,
) -> Result<FrequentItemsets, MiningError> {
    if tx.is_empty() {
        return Err(MiningError::NoTransactions);
    }
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(MiningError::InvalidSupport(min_support));
    }
    let n = tx.len();
    let need = min_count(min_support, n).max(1);
    let (vocab, bitsets) = Vocabulary::encode(tx);

    let mut itemsets = Vec::new();
    let mut level: Vec<Vec<u32>> = (0..vocab.items.len() as u32).map(|i| vec![i]).collect();
    let mut size = 1;
    while !level.is_empty() {
        let counts = count_candidates(&bitsets, &level);
        let frequent: Vec<(Vec<u32>, usize)> = level
            .into_iter()
            .zip(counts)
            .filter(|&(_, c)| c >= need)
            .collect();
        if frequent.is_empty() {
            break;
        }
        if size > max_size {
            return Err(MiningError::ItemsetTooLarge { cap: max_size });
        }
        for (set, count) in &frequent {
            itemsets.push(ItemSet {
                items: vocab.decode(set),
                support_count: *count,
                support: *count as f64 / n as f64,
            });
        }
        let current: Vec<Vec<u32>> = frequent.into_iter().map(|(s, _)| s).collect();
        level = next_candidates(&current);
        size += 1;
    }
    Ok(FrequentItemsets {
        itemsets,
        n_transactions: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    /// Transactions containing antecedent and consequent.
    pub support_count: usize,
    /// Transactions containing the antecedent.
    pub antecedent_count: usize,
    pub support: f64,
    pub confidence: f64,
}

impl AssociationRule {
    /// Sorted union of antecedent and consequent.
    pub fn items(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .antecedent
            .iter()
            .chain(&self.consequent)
            .cloned()
            .collect();
        all.sort();
        all
    }
}

impl fmt::Display for AssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}) => ({}) [support {:.4}, confidence {:.4}]",
            self.antecedent.join(", "),
            self.consequent.join(", "),
            self.support,
            self.confidence
        )
    }
}

/// Every rule `A => C` with `A ∪ C` frequent, `A ∩ C = ∅` and confidence at
/// least `min_confidence`. With `single_consequent`, only one-item
/// consequents are produced. Output is sorted by (antecedent, consequent).
pub fn generate_rules(
    frequent: &FrequentItemsets,
    min_confidence: f64,
    single_consequent: bool,
) -> Result<Vec<AssociationRule>, MiningError> {
    if !(0.0..=1.0).contains(&min_confidence) {
        return Err(MiningError::InvalidConfidence(min_confidence));
    }
    let counts: HashMap<&[String], usize> = frequent
        .itemsets
        .iter()
        .map(|s| (s.items.as_slice(), s.support_count))
        .collect();
    let n = frequent.n_transactions;
    let mut rules = Vec::new();
    for set in frequent.itemsets.iter().filter(|s| s.items.len() >= 2) {
        let k = set.items.len();
        for mask in 1..(1u32 << k) - 1 {
            let (mut ante, mut cons) = (Vec::new(), Vec::new());
            for (i, item) in set.items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    ante.push(item.clone());
                } else {
                    cons.push(item.clone());
                }
            }
            if single_consequent && cons.len() != 1 {
                continue;
            }
            let ante_count = *counts
                .get(ante.as_slice())
                .expect("frequent itemsets are closed under subsets");
            let needed = min_confidence * ante_count as f64 - THRESHOLD_SLACK;
            if (set.support_count as f64) < needed {
                continue;
            }
            rules.push(AssociationRule {
                antecedent: ante,
                consequent: cons,
                support_count: set.support_count,
                antecedent_count: ante_count,
                support: set.support_count as f64 / n as f64,
                confidence: set.support_count as f64 / ante_count as f64,
            });
        }
    }
    rules.sort_by(|a, b| {
        (&a.antecedent, &a.consequent).cmp(&(&b.antecedent, &b.consequent))
    });
    Ok(rules)
}

/// `antecedent<TAB>consequent<TAB>support<TAB>confidence`, items comma-separated.
pub fn rules_to_tsv(rules: &[AssociationRule]) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.antecedent.join(","),
            r.consequent.join(","),
            r.support,
            r.confidence
        ));
    }
    out
}

/// Parses the rules TSV. Counts are not part of the format, so
/// `support_count` and `antecedent_count` come back as zero.
pub fn rules_from_tsv(text: &str) -> Result<Vec<AssociationRule>, MiningError> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || MiningError::MalformedRule(i + 1);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(bad());
        }
        let split = |s: &str| -> Vec<String> {
            s.split(',').filter(|x| !x.is_empty()).map(str::to_string).collect()
        };
        let antecedent = split(fields[0]);
        let consequent = split(fields[1]);
        if antecedent.is_empty() || consequent.is_empty() {
            return Err(bad());
        }
        rules.push(AssociationRule {
            antecedent,
            consequent,
            support_count: 0,
            antecedent_count: 0,
            support: fields[2].parse().map_err(|_| bad())?,
            confidence: fields[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rules)
}

/// Item -> number of rules mentioning it; handy for reports.
pub fn rule_item_frequency(rules: &[AssociationRule]) -> BTreeMap<String, usize> {
    let mut freq = BTreeMap::new();
    for r in rules {
        for it in r.items() {
            *freq.entry(it).or_insert(0) += 1;
        }
    }
    freq
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tx(sets: &[&str]) -> Vec<Transaction> {
        sets.iter()
            .enumerate()
            .map(|(i, s)| Transaction {
                tid: i.to_string(),
                items: s.chars().map(|c| c.to_string()).collect(),
            })
            .collect()
    }

    fn find<'a>(f: &'a FrequentItemsets, items: &str) -> Option<&'a ItemSet> {
        let want: Vec<String> = items.chars().map(|c| c.to_string()).collect();
        f.itemsets.iter().find(|s| s.items == want)
    }

    #[test]
    fn five_transaction_example() {
        let t = tx(&["ABC", "AB", "AC", "BC", "ABC"]);
        let f = mine_frequent_itemsets(&t, 0.4, 6).unwrap();
        let expected = [("A", 4), ("B", 4), ("C", 4), ("AB", 3), ("AC", 3), ("BC", 3), ("ABC", 2)];
        assert_eq!(f.itemsets.len(), expected.len());
        for (items, count) in expected {
            assert_eq!(find(&f, items).unwrap().support_count, count, "{}", items);
        }

        let rules = generate_rules(&f, 0.8, false).unwrap();
        // every split has confidence 2/3 or 3/4
        assert!(rules.is_empty());
        let rules = generate_rules(&f, 0.75, false).unwrap();
        assert_eq!(rules.len(), 6);
        assert!(rules.iter().all(|r| r.antecedent.len() == 1 && r.consequent.len() == 1));
        let all = generate_rules(&f, 0.0, false).unwrap();
        // 3 pairs x 2 + 6 splits of ABC
        assert_eq!(all.len(), 12);
        let single = generate_rules(&f, 0.0, true).unwrap();
        assert_eq!(single.len(), 9);
    }

    #[test]
    fn full_support_boundary() {
        let t = tx(&["AB", "AC", "AD"]);
        let f = mine_frequent_itemsets(&t, 1.0, 6).unwrap();
        assert_eq!(f.itemsets.len(), 1);
        assert_eq!(f.itemsets[0].items, ["A"]);
        let t = tx(&["AB", "CD"]);
        assert!(mine_frequent_itemsets(&t, 1.0, 6).unwrap().itemsets.is_empty());
    }

    #[test]
    fn certain_rules_have_confidence_one() {
        let t = tx(&["XY", "XYZ", "XY"]);
        let f = mine_frequent_itemsets(&t, 0.5, 6).unwrap();
        let rules = generate_rules(&f, 0.9, false).unwrap();
        assert_eq!(rules.len(), 2);
        assert!(rules.iter().all(|r| r.confidence == 1.0 && r.support == 1.0));
    }

    #[test]
    fn errors() {
        assert_eq!(mine_frequent_itemsets(&[], 0.1, 6), Err(MiningError::NoTransactions));
        let t = tx(&["AB"]);
        assert_eq!(mine_frequent_itemsets(&t, 0.0, 6), Err(MiningError::InvalidSupport(0.0)));
        let t = tx(&["ABCD", "ABCD"]);
        assert_eq!(
            mine_frequent_itemsets(&t, 0.5, 3),
            Err(MiningError::ItemsetTooLarge { cap: 3 })
        );
        assert!(mine_frequent_itemsets(&t, 0.5, 4).is_ok());
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(min_count(0.07, 100), 7);
        assert_eq!(min_count(0.4, 5), 2);
        assert_eq!(min_count(0.41, 5), 3);
        assert_eq!(min_count(0.01, 2364), 24);
    }

    #[test]
    fn tsv_round_trip() {
        let t = tx(&["ABC", "AB", "AC", "BC", "ABC"]);
        let f = mine_frequent_itemsets(&t, 0.4, 6).unwrap();
        let rules = generate_rules(&f, 0.5, false).unwrap();
        let back = rules_from_tsv(&rules_to_tsv(&rules)).unwrap();
        assert_eq!(back.len(), rules.len());
        for (a, b) in rules.iter().zip(&back) {
            assert_eq!((&a.antecedent, &a.consequent), (&b.antecedent, &b.consequent));
            assert_eq!(a.confidence, b.confidence);
            assert_eq!(a.support, b.support);
        }
        assert_eq!(rules_from_tsv("A\t\t0.1\t0.2\n"), Err(MiningError::MalformedRule(1)));
    }
}

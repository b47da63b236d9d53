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

//! Seeded generator of EZproxy-style logs with planted user communities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, FixedOffset};
use rand::distributions::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_ingest::LogEntry;

pub const VENDOR: &str = "ebrary";
const DOC_ID_BASE: u64 = 10_000_000;
const DOC_URL: &str = "http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=";
const SEARCH_URL: &str = "http://site.ebrary.com:80/lib/oculryerson/search.action?p00=";
const ASSETS: [&str; 4] = [
    "http://site.ebrary.com:80/lib/oculryerson/img/logo.png",
    "http://site.ebrary.com:80/lib/oculryerson/css/site.css",
    "http://site.ebrary.com:80/lib/oculryerson/js/reader.js",
    "http://site.ebrary.com:80/favicon.ico",
];
const SYLLABLES: [&str; 12] = ["ka", "lo", "mi", "ru", "te", "va", "zo", "ne", "pi", "su", "da", "fe"];
const WORDS_PER_TOPIC: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid synthetic config: {0}")]
pub struct InvalidConfig(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TitleVocabMode {
    /// Each community has its own vocabulary.
    #[default]
    Aligned,
    /// Title topics are drawn independently of communities.
    Shuffled,
}

impl fmt::Display for TitleVocabMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TitleVocabMode::Aligned => "aligned",
            TitleVocabMode::Shuffled => "shuffled",
        })
    }
}

impl FromStr for TitleVocabMode {
    type Err = InvalidConfig;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aligned" => Ok(TitleVocabMode::Aligned),
            "shuffled" => Ok(TitleVocabMode::Shuffled),
            other => Err(InvalidConfig(format!("unknown title mode `{}`", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_docs: usize,
    pub n_communities: usize,
    /// Mean sessions per user (at least one each).
    pub sessions_per_user: f64,
    /// Mean document views per session (at least one each).
    pub session_len: f64,
    pub in_community_prob: f64,
    pub title_vocab_mode: TitleVocabMode,
    /// Exponent of the rank-based popularity weights inside a community.
    pub popularity_skew: f64,
    /// Chance of a noise line (asset, failed request, search page) after
    /// each document view.
    pub noise_prob: f64,
    /// Not read from config files; the pipeline derives it from the root seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 400,
            n_docs: 300,
            n_communities: 17,
            sessions_per_user: 6.0,
            session_len: 14.0,
            in_community_prob: 0.9,
            title_vocab_mode: TitleVocabMode::Shuffled,
            popularity_skew: 0.8,
            noise_prob: 0.1,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        let fail = |m: &str| Err(InvalidConfig(m.to_string()));
        if self.n_users == 0 || self.n_docs == 0 || self.n_communities == 0 {
            return fail("counts must be positive");
        }
        if self.n_communities > self.n_docs {
            return fail("more communities than documents");
        }
        if self.n_communities * WORDS_PER_TOPIC > SYLLABLES.len().pow(3) {
            return fail("too many communities for the title vocabulary");
        }
        for (name, p) in [("in_community_prob", self.in_community_prob), ("noise_prob", self.noise_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(InvalidConfig(format!("{} must lie in [0, 1]", name)));
            }
        }
        if !(self.sessions_per_user >= 1.0 && self.session_len >= 1.0) {
            return fail("session means must be at least 1");
        }
        if !(self.popularity_skew >= 0.0 && self.popularity_skew.is_finite()) {
            return fail("popularity_skew must be a non-negative number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Item key (`vendor:doc_id`) to community.
    pub doc_community: BTreeMap<String, usize>,
    /// User key (`host/username`) to community.
    pub user_community: BTreeMap<String, usize>,
    /// Successful document views per item key.
    pub doc_views: BTreeMap<String, usize>,
    /// Distinct items viewed per user key.
    pub user_distinct_items: BTreeMap<String, usize>,
    pub sessions: usize,
    pub log_lines: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub log: String,
    /// `doc_id<TAB>title` per line.
    pub catalog: String,
    pub truth: GroundTruth,
}

pub fn doc_id(i: usize) -> String {
    (DOC_ID_BASE + i as u64).to_string()
}

pub fn item_key(i: usize) -> String {
    format!("{}:{}", VENDOR, doc_id(i))
}

/// Pronounceable nonce word, distinct for every index below 12^3.
pub fn vocab_word(i: usize) -> String {
    let n = SYLLABLES.len();
    format!("{}{}{}", SYLLABLES[i / (n * n) % n], SYLLABLES[i / n % n], SYLLABLES[i % n])
}

fn random_token(rng: &mut ChaCha8Rng, len: usize, alphabet: &[u8]) -> String {
    (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char).collect()
}

/// Balanced labels in `[0, groups)` over `n` items in seeded order.
fn balanced_labels(n: usize, groups: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut labels = vec![0; n];
    for (rank, &i) in perm.iter().enumerate() {
        labels[i] = rank % groups;
    }
    labels
}

fn title_for(topic: usize, rng: &mut ChaCha8Rng) -> String {
    let base = topic * WORDS_PER_TOPIC;
    let mut words = vec![vocab_word(base)];
    let extra = rng.gen_range(2..=4);
    let mut pool: Vec<usize> = (1..WORDS_PER_TOPIC).collect();
    pool.shuffle(rng);
    words.extend(pool[..extra].iter().map(|&w| vocab_word(base + w)));
    let mut title = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            title.push(' ');
        }
        let mut chars = w.chars();
        title.extend(chars.next().map(|c| c.to_ascii_uppercase()));
        title.push_str(chars.as_str());
    }
    title
}

fn entry(
    host: &str,
    username: &str,
    session: &str,
    at: DateTime<FixedOffset>,
    url: String,
    status: u16,
    bytes: Option<u64>,
) -> LogEntry {
    LogEntry {
        host: host.to_string(),
        username: username.to_string(),
        remote_user: "-".to_string(),
        session_id: session.to_string(),
        timestamp: at,
        method: "GET".to_string(),
        url,
        protocol: "HTTP/1.1".to_string(),
        status,
        bytes,
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, InvalidConfig> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = cfg.n_communities;
    let doc_comm = balanced_labels(cfg.n_docs, c, &mut rng);
    let members: Vec<Vec<usize>> = (0..c)
        .map(|k| (0..cfg.n_docs).filter(|&d| doc_comm[d] == k).collect())
        .collect();
    let weights: Vec<WeightedIndex<f64>> = members
        .iter()
        .map(|m| {
            let mut w: Vec<f64> = (1..=m.len()).map(|r| (r as f64).powf(-cfg.popularity_skew)).collect();
            w.shuffle(&mut rng);
            WeightedIndex::new(w).expect("positive weights")
        })
        .collect();
    let topics = match cfg.title_vocab_mode {
        TitleVocabMode::Aligned => doc_comm.clone(),
        TitleVocabMode::Shuffled => balanced_labels(cfg.n_docs, c, &mut rng),
    };
    let mut catalog = String::new();
    for (d, &topic) in topics.iter().enumerate() {
        catalog.push_str(&format!("{}\t{}\n", doc_id(d), title_for(topic, &mut rng)));
    }

    let extra_sessions = Poisson::new(cfg.sessions_per_user - 1.0).ok();
    let extra_views = Poisson::new(cfg.session_len - 1.0).ok();
    let click_gap = Exp::new(1.0 / 40.0).unwrap();
    let session_gap = Exp::new(1.0 / 7200.0).unwrap();
    let origin = DateTime::parse_from_rfc3339("2014-06-01T00:00:00-05:00").unwrap();
    let alnum = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
    let hex = b"0123456789abcdef";

    let mut truth = GroundTruth::default();
    for (d, &comm) in doc_comm.iter().enumerate() {
        truth.doc_community.insert(item_key(d), comm);
    }
    let mut entries: Vec<LogEntry> = Vec::new();
    for u in 0..cfg.n_users {
        let comm = u % c;
        let host = format!("10.{}.{}.{}", u / 65536 % 256, u / 256 % 256, u % 256);
        let username = random_token(&mut rng, 15, alnum);
        let user_key = format!("{}/{}", host, username);
        truth.user_community.insert(user_key.clone(), comm);
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut clock = origin + Duration::seconds(rng.gen_range(0..86_400));
        let n_sessions = 1 + extra_sessions.map_or(0, |p| p.sample(&mut rng) as usize);
        for _ in 0..n_sessions {
            let sid = random_token(&mut rng, 32, hex);
            truth.sessions += 1;
            let n_views = 1 + extra_views.map_or(0, |p| p.sample(&mut rng) as usize);
            for _ in 0..n_views {
                let doc = if c == 1 || rng.gen::<f64>() < cfg.in_community_prob {
                    members[comm][weights[comm].sample(&mut rng)]
                } else {
                    loop {
                        let d = rng.gen_range(0..cfg.n_docs);
                        if doc_comm[d] != comm {
                            break d;
                        }
                    }
                };
                let bytes = rng.gen_range(2_000..60_000);
                entries.push(entry(&host, &username, &sid, clock, format!("{}{}", DOC_URL, doc_id(doc)), 200, Some(bytes)));
                *truth.doc_views.entry(item_key(doc)).or_insert(0) += 1;
                seen.insert(doc);
                clock += Duration::seconds(1 + click_gap.sample(&mut rng) as i64);
                if rng.gen::<f64>() < cfg.noise_prob {
                    let noise = match rng.gen_range(0..3) {
                        0 => entry(&host, &username, &sid, clock, ASSETS[rng.gen_range(0..ASSETS.len())].to_string(), 200, Some(rng.gen_range(200..9_000))),
                        1 => {
                            let status = [302, 404, 500][rng.gen_range(0..3)];
                            let d = rng.gen_range(0..cfg.n_docs);
                            entry(&host, &username, &sid, clock, format!("{}{}", DOC_URL, doc_id(d)), status, None)
                        }
                        _ => {
                            let term = vocab_word(rng.gen_range(0..c * WORDS_PER_TOPIC));
                            entry(&host, &username, &sid, clock, format!("{}{}", SEARCH_URL, term), 200, Some(rng.gen_range(5_000..20_000)))
                        }
                    };
                    entries.push(noise);
                    clock += Duration::seconds(1);
                }
            }
            clock += Duration::seconds(3_600 + session_gap.sample(&mut rng) as i64);
        }
        truth.user_distinct_items.insert(user_key, seen.len());
    }
    entries.sort_by_key(|e| e.timestamp);
    truth.log_lines = entries.len();
    let mut log = String::with_capacity(entries.len() * 160);
    for e in &entries {
        log.push_str(&e.to_string());
        log.push('\n');
    }
    Ok(SynthOutput { log, catalog, truth })
}

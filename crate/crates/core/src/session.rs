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

//! User identification, sessionization and vendor URL extraction.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_ingest::{parse_url, LogEntry, PLACEHOLDER};

/// Inactivity gap used to split entries that carry no session id.
pub const FALLBACK_GAP_SECS: i64 = 30 * 60;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UserKey {
    pub host: String,
    pub username: String,
}

impl fmt::Display for UserKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.host, self.username)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("entry has no username")]
    AnonymousEntry,
    #[error("session {session_id} is shared by {users} users")]
    ConflictingUser { session_id: String, users: usize },
}

pub fn identify_user(entry: &LogEntry) -> Result<UserKey, SessionError> {
    if entry.username.is_empty() || entry.username == PLACEHOLDER || entry.host.is_empty() {
        return Err(SessionError::AnonymousEntry);
    }
    Ok(UserKey {
        host: entry.host.clone(),
        username: entry.username.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRef {
    pub vendor: String,
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

impl ResourceRef {
    /// Canonical item identity used by every downstream stage.
    pub fn item_key(&self) -> String {
        format!("{}:{}", self.vendor, self.doc_id)
    }
}

/// Where a pattern finds the document id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdSource {
    Query(String),
    /// Index into the non-empty path segments; negative counts from the end.
    Path(i64),
}

impl IdSource {
    pub fn parse(spec: &str) -> Option<IdSource> {
        let (kind, arg) = spec.split_once(':')?;
        match kind {
            "query" if !arg.is_empty() => Some(IdSource::Query(arg.to_string())),
            "path" => arg.parse().ok().map(IdSource::Path),
            _ => None,
        }
    }
}

impl fmt::Display for IdSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdSource::Query(k) => write!(f, "query:{}", k),
            IdSource::Path(i) => write!(f, "path:{}", i),
        }
    }
}

impl Serialize for IdSource {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IdSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        IdSource::parse(&s).ok_or_else(|| {
            serde::de::Error::custom(format!("expected `query:<key>` or `path:<index>`, got `{}`", s))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlPattern {
    pub name: String,
    pub host_glob: String,
    pub id_source: IdSource,
    /// Query keys copied into `ResourceRef::extras` when present.
    #[serde(default)]
    pub extras: Vec<String>,
}

/// Ordered list of vendor URL patterns; the first match wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternRegistry {
    pub patterns: Vec<UrlPattern>,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("reading pattern registry: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing pattern registry: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pattern registry is empty")]
    Empty,
}

impl PatternRegistry {
    pub fn from_json(text: &str) -> Result<Self, RegistryError> {
        let reg: PatternRegistry = serde_json::from_str(text)?;
        if reg.patterns.is_empty() {
            return Err(RegistryError::Empty);
        }
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }
}

impl Default for PatternRegistry {
    /// Ships with the ebrary document-detail pattern.
    fn default() -> Self {
        PatternRegistry {
            patterns: vec![UrlPattern {
                name: "ebrary".to_string(),
                host_glob: "*ebrary.com".to_string(),
                id_source: IdSource::Query("docID".to_string()),
                extras: Vec::new(),
            }],
        }
    }
}

/// Case-insensitive glob over `*` and `?`.
pub fn glob_match(pattern: &str, text: &str) -> bool {
    let p: Vec<char> = pattern.to_ascii_lowercase().chars().collect();
    let t: Vec<char> = text.to_ascii_lowercase().chars().collect();
    let (mut pi, mut ti) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ti < t.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == t[ti]) {
            pi += 1;
            ti += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ti));
            pi += 1;
        } else if let Some((sp, st)) = star {
            pi = sp + 1;
            ti = st + 1;
            star = Some((sp, st + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

pub fn extract_resource(url: &str, registry: &PatternRegistry) -> Option<ResourceRef> {
    let parsed = parse_url(url)?;
    let host = parsed.host_str()?;
    let query: Vec<(String, String)> = parsed
        .query_pairs()
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect();
    let lookup = |key: &str| query.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    for pattern in &registry.patterns {
        if !glob_match(&pattern.host_glob, host) {
            continue;
        }
        let doc_id = match &pattern.id_source {
            IdSource::Query(key) => lookup(key),
            IdSource::Path(idx) => {
                let segments: Vec<&str> = parsed
                    .path_segments()
                    .map(|s| s.filter(|seg| !seg.is_empty()).collect())
                    .unwrap_or_default();
                let at = if *idx < 0 {
                    segments.len() as i64 + idx
                } else {
                    *idx
                };
                usize::try_from(at)
                    .ok()
                    .and_then(|i| segments.get(i))
                    .map(|s| s.to_string())
            }
        };
        let doc_id = match doc_id {
            Some(d) if !d.is_empty() => d,
            _ => continue,
        };
        let extras = pattern
            .extras
            .iter()
            .filter_map(|k| lookup(k).map(|v| (k.clone(), v)))
            .collect();
        return Some(ResourceRef {
            vendor: pattern.name.clone(),
            doc_id,
            extras,
            title: None,
        });
    }
    None
}

/// Document titles keyed by bare `doc_id` or by the full `vendor:doc_id` key.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    titles: BTreeMap<String, String>,
}

impl Catalog {
    pub fn parse_tsv(text: &str) -> Catalog {
        let titles = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .filter_map(|l| l.split_once('\t'))
            .map(|(id, title)| (id.to_string(), title.to_string()))
            .collect();
        Catalog { titles }
    }

    pub fn load(path: &Path) -> std::io::Result<Catalog> {
        Ok(Self::parse_tsv(&std::fs::read_to_string(path)?))
    }

    pub fn insert(&mut self, id: impl Into<String>, title: impl Into<String>) {
        self.titles.insert(id.into(), title.into());
    }

    pub fn title(&self, r: &ResourceRef) -> Option<&str> {
        self.titles
            .get(&r.item_key())
            .or_else(|| self.titles.get(&r.doc_id))
            .map(String::as_str)
    }

    /// Title by canonical item key, falling back to the bare doc id.
    pub fn title_for_key(&self, item_key: &str) -> Option<&str> {
        self.titles
            .get(item_key)
            .or_else(|| {
                item_key
                    .split_once(':')
                    .and_then(|(_, doc)| self.titles.get(doc))
            })
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.titles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.titles.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, title) in &self.titles {
            out.push_str(id);
            out.push('\t');
            out.push_str(title);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub user: UserKey,
    pub start: DateTime<FixedOffset>,
    pub end: DateTime<FixedOffset>,
    /// Number of log entries attributed to this session.
    pub entries: usize,
    pub resources: Vec<ResourceRef>,
}

pub fn session_length(s: &Session) -> i64 {
    (s.end - s.start).num_seconds().max(0)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionReport {
    pub sessions: usize,
    pub attributed_entries: usize,
    pub anonymous_skipped: usize,
    pub unmatched_urls: usize,
    /// Sessions built by the inactivity-gap fallback.
    pub fallback_sessions: usize,
    pub conflicts: Vec<SessionConflict>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConflict {
    pub session_id: String,
    pub users: Vec<UserKey>,
}

struct Builder {
    session_id: String,
    user: UserKey,
    start: DateTime<FixedOffset>,
    end: DateTime<FixedOffset>,
    entries: usize,
    resources: Vec<ResourceRef>,
}

impl Builder {
    fn new(session_id: String, user: UserKey, at: DateTime<FixedOffset>) -> Self {
        Builder {
            session_id,
            user,
            start: at,
            end: at,
            entries: 0,
            resources: Vec::new(),
        }
    }

    fn push(&mut self, at: DateTime<FixedOffset>, resource: Option<ResourceRef>) {
        self.start = self.start.min(at);
        self.end = self.end.max(at);
        self.entries += 1;
        self.resources.extend(resource);
    }

    fn finish(self) -> Session {
        Session {
            session_id: self.session_id,
            user: self.user,
            start: self.start,
            end: self.end,
            entries: self.entries,
            resources: self.resources,
        }
    }
}

/// Groups cleaned entries into sessions, in order of each session's first
/// entry. A session id shared by several users is split per user; the
/// second and later users get `<id>~2`, `<id>~3`, ... Entries without a
/// session id are split per user on a 30 minute inactivity gap.
pub fn build_sessions(
    entries: &[LogEntry],
    registry: &PatternRegistry,
    catalog: Option<&Catalog>,
) -> (Vec<Session>, SessionReport) {
    let mut report = SessionReport::default();
    let mut builders: Vec<Builder> = Vec::new();
    // (session id, user) -> builder index
    let mut by_key: HashMap<(String, UserKey), usize> = HashMap::new();
    let mut users_per_id: HashMap<String, Vec<UserKey>> = HashMap::new();
    // fallback: user -> (builder index, last timestamp)
    let mut open_fallback: HashMap<UserKey, (usize, DateTime<FixedOffset>)> = HashMap::new();
    let mut fallback_counter: HashMap<UserKey, usize> = HashMap::new();

    for e in entries {
        let user = match identify_user(e) {
            Ok(u) => u,
            Err(_) => {
                report.anonymous_skipped += 1;
                continue;
            }
        };
        let mut resource = extract_resource(&e.url, registry);
        match resource.as_mut() {
            Some(r) => r.title = catalog.and_then(|c| c.title(r)).map(str::to_string),
            None => report.unmatched_urls += 1,
        }
        report.attributed_entries += 1;

        let idx = if e.has_session_id() {
            let key = (e.session_id.clone(), user.clone());
            match by_key.get(&key) {
                Some(&i) => i,
                None => {
                    let users = users_per_id.entry(e.session_id.clone()).or_default();
                    users.push(user.clone());
                    let id = if users.len() == 1 {
                        e.session_id.clone()
                    } else {
                        format!("{}~{}", e.session_id, users.len())
                    };
                    builders.push(Builder::new(id, user.clone(), e.timestamp));
                    by_key.insert(key, builders.len() - 1);
                    builders.len() - 1
                }
            }
        } else {
            let reuse = open_fallback
                .get(&user)
                .filter(|(_, last)| (e.timestamp - *last).num_seconds().abs() <= FALLBACK_GAP_SECS)
                .map(|(i, _)| *i);
            let i = match reuse {
                Some(i) => i,
                None => {
                    let n = fallback_counter.entry(user.clone()).or_insert(0);
                    *n += 1;
                    let id = format!("{}@{}#{}", user.username, user.host, n);
                    builders.push(Builder::new(id, user.clone(), e.timestamp));
                    report.fallback_sessions += 1;
                    builders.len() - 1
                }
            };
            open_fallback.insert(user.clone(), (i, e.timestamp));
            i
        };
        builders[idx].push(e.timestamp, resource);
    }

    let mut conflicts: Vec<SessionConflict> = users_per_id
        .into_iter()
        .filter(|(_, users)| users.len() > 1)
        .map(|(session_id, users)| SessionConflict { session_id, users })
        .collect();
    conflicts.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    for c in &conflicts {
        log::warn!(
            "{}",
            SessionError::ConflictingUser {
                session_id: c.session_id.clone(),
                users: c.users.len()
            }
        );
    }
    report.conflicts = conflicts;
    let sessions: Vec<Session> = builders.into_iter().map(Builder::finish).collect();
    report.sessions = sessions.len();
    (sessions, report)
}

pub fn write_sessions_jsonl(sessions: &[Session]) -> String {
    let mut out = String::new();
    for s in sessions {
        out.push_str(&serde_json::to_string(s).expect("session serializes"));
        out.push('\n');
    }
    out
}

pub fn read_sessions_jsonl(text: &str) -> Result<Vec<Session>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

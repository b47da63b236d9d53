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

//! EZproxy access-log parsing and cleaning.
//!
//! Lines follow the layout `%h %u %l %{ezproxy-session}i %t "%r" %s %b`:
//!
//! ```text
//! 10.0.0.1 X2bFdM1R3txwlkv - 13d8f72f08d1a4e1c418a7cb8fc31437 [01/Jun/2014:00:47:10 -0500] "GET http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=10251051 HTTP/1.1" 200 29732
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::net::IpAddr;
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TIMESTAMP_FORMAT: &str = "%d/%b/%Y:%H:%M:%S %z";

/// Placeholder used by the log format for absent values.
pub const PLACEHOLDER: &str = "-";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed line at byte {offset}: {reason}")]
    MalformedLine { offset: usize, reason: &'static str },
    #[error("bad timestamp at byte {offset}")]
    BadTimestamp { offset: usize },
    #[error("bad status at byte {offset}")]
    BadStatus { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match *self {
            ParseError::MalformedLine { offset, .. }
            | ParseError::BadTimestamp { offset }
            | ParseError::BadStatus { offset } => offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Validated IP address, kept in its original textual form.
    pub host: String,
    pub username: String,
    pub remote_user: String,
    pub session_id: String,
    pub timestamp: DateTime<FixedOffset>,
    pub method: String,
    pub url: String,
    pub protocol: String,
    pub status: u16,
    pub bytes: Option<u64>,
}

impl LogEntry {
    /// True when the username is the `-` placeholder.
    pub fn is_anonymous(&self) -> bool {
        self.username == PLACEHOLDER
    }

    pub fn has_session_id(&self) -> bool {
        self.session_id != PLACEHOLDER && !self.session_id.is_empty()
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} [{}] \"{} {} {}\" {} ",
            self.host,
            self.username,
            self.remote_user,
            self.session_id,
            self.timestamp.format(TIMESTAMP_FORMAT),
            self.method,
            self.url,
            self.protocol,
            self.status
        )?;
        match self.bytes {
            Some(b) => write!(f, "{}", b),
            None => f.write_str(PLACEHOLDER),
        }
    }
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn malformed(&self, reason: &'static str) -> ParseError {
        ParseError::MalformedLine {
            offset: self.pos,
            reason,
        }
    }

    /// Next space-delimited token. Consumes exactly one trailing space if present.
    fn token(&mut self, what: &'static str) -> Result<(usize, &'a str), ParseError> {
        let rest = &self.line[self.pos..];
        let end = rest.find(' ').unwrap_or(rest.len());
        if end == 0 {
            return Err(self.malformed(what));
        }
        let start = self.pos;
        self.pos += end;
        self.skip_space();
        Ok((start, &rest[..end]))
    }

    /// Text between `open` and `close`, e.g. `[...]` or `"..."`.
    fn delimited(
        &mut self,
        open: char,
        close: char,
        what: &'static str,
    ) -> Result<(usize, &'a str), ParseError> {
        let rest = &self.line[self.pos..];
        if !rest.starts_with(open) {
            return Err(self.malformed(what));
        }
        let body = &rest[1..];
        let end = match body.find(close) {
            Some(e) => e,
            None => {
                return Err(ParseError::MalformedLine {
                    offset: self.line.len(),
                    reason: what,
                })
            }
        };
        let start = self.pos + 1;
        self.pos += end + 2;
        if !self.at_end() && !self.line[self.pos..].starts_with(' ') {
            return Err(self.malformed(what));
        }
        self.skip_space();
        Ok((start, &body[..end]))
    }

    fn skip_space(&mut self) {
        if self.line[self.pos..].starts_with(' ') {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.line.len()
    }
}

/// Parses one physical log line.
pub fn parse_log_line(line: &str) -> Result<LogEntry, ParseError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(ParseError::MalformedLine {
            offset: line.find('\n').unwrap_or(0),
            reason: "embedded newline",
        });
    }
    let mut cur = Cursor { line, pos: 0 };

    let (host_at, host) = cur.token("host")?;
    if host.parse::<IpAddr>().is_err() {
        return Err(ParseError::MalformedLine {
            offset: host_at,
            reason: "host is not an IP address",
        });
    }
    let (_, username) = cur.token("username")?;
    let (_, remote_user) = cur.token("remote user")?;
    let (_, session_id) = cur.token("session id")?;

    let (ts_at, ts) = cur.delimited('[', ']', "timestamp")?;
    let timestamp = DateTime::parse_from_str(ts, TIMESTAMP_FORMAT)
        .map_err(|_| ParseError::BadTimestamp { offset: ts_at })?;

    let (req_at, request) = cur.delimited('"', '"', "request")?;
    let (method, url, protocol) = split_request(request).ok_or(ParseError::MalformedLine {
        offset: req_at,
        reason: "request must be `METHOD URL PROTOCOL`",
    })?;

    let (status_at, status) = cur.token("status")?;
    let status: u16 = status
        .parse()
        .ok()
        .filter(|s| (100..=599).contains(s))
        .ok_or(ParseError::BadStatus { offset: status_at })?;

    let (bytes_at, bytes) = cur.token("bytes")?;
    let bytes = if bytes == PLACEHOLDER {
        None
    } else {
        Some(bytes.parse::<u64>().map_err(|_| ParseError::MalformedLine {
            offset: bytes_at,
            reason: "bytes must be a non-negative integer or `-`",
        })?)
    };
    if !cur.at_end() {
        return Err(cur.malformed("trailing fields"));
    }

    Ok(LogEntry {
        host: host.to_string(),
        username: username.to_string(),
        remote_user: remote_user.to_string(),
        session_id: session_id.to_string(),
        timestamp,
        method: method.to_string(),
        url: url.to_string(),
        protocol: protocol.to_string(),
        status,
        bytes,
    })
}

// Method is the first word and protocol the last; anything between is the URL,
// so unencoded spaces survive a round trip.
fn split_request(request: &str) -> Option<(&str, &str, &str)> {
    let first = request.find(' ')?;
    let last = request.rfind(' ')?;
    if last <= first {
        return None;
    }
    let method = &request[..first];
    let url = &request[first + 1..last];
    let protocol = &request[last + 1..];
    if method.is_empty() || url.is_empty() || protocol.is_empty() {
        return None;
    }
    Some((method, url, protocol))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningConfig {
    pub asset_suffixes: BTreeSet<String>,
    /// Inclusive `(low, high)`.
    pub success_status_range: (u16, u16),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CleaningConfigError {
    #[error("success status range is empty: {0} > {1}")]
    EmptyRange(u16, u16),
    #[error("asset suffix list is empty")]
    NoSuffixes,
}

impl CleaningConfig {
    pub fn new<I, S>(suffixes: I, low: u16, high: u16) -> Result<Self, CleaningConfigError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let asset_suffixes: BTreeSet<String> = suffixes
            .into_iter()
            .map(|s| s.as_ref().trim_start_matches('.').to_ascii_lowercase())
            .filter(|s| !s.is_empty())
            .collect();
        if asset_suffixes.is_empty() {
            return Err(CleaningConfigError::NoSuffixes);
        }
        if low > high {
            return Err(CleaningConfigError::EmptyRange(low, high));
        }
        Ok(CleaningConfig {
            asset_suffixes,
            success_status_range: (low, high),
        })
    }

    pub fn validate(&self) -> Result<(), CleaningConfigError> {
        let (low, high) = self.success_status_range;
        if low > high {
            return Err(CleaningConfigError::EmptyRange(low, high));
        }
        if self.asset_suffixes.is_empty() {
            return Err(CleaningConfigError::NoSuffixes);
        }
        Ok(())
    }
}

pub const DEFAULT_ASSET_SUFFIXES: [&str; 10] = [
    "jpeg", "jpg", "gif", "css", "js", "png", "ico", "svg", "woff", "woff2",
];

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig::new(DEFAULT_ASSET_SUFFIXES, 200, 299).expect("default cleaning config")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UrlClass {
    Asset,
    Resource,
    Unparseable,
}

/// Parses absolute URLs as-is and scheme-less ones (`host:port/path`) as http.
pub(crate) fn parse_url(url: &str) -> Option<url::Url> {
    if url.contains("://") {
        url::Url::parse(url).ok().filter(|u| u.has_host())
    } else {
        url::Url::parse(&format!("http://{}", url)).ok()
    }
}

/// Path component of a URL, with or without a scheme. `None` when the URL
/// cannot be parsed.
pub(crate) fn url_path(url: &str) -> Option<String> {
    Some(parse_url(url)?.path().to_string())
}

pub fn classify_url(url: &str, cfg: &CleaningConfig) -> UrlClass {
    let path = match url_path(url) {
        Some(p) => p.to_ascii_lowercase(),
        None => return UrlClass::Unparseable,
    };
    let is_asset = match path.rsplit_once('.') {
        Some((_, ext)) if !ext.contains('/') => cfg.asset_suffixes.contains(ext),
        _ => false,
    };
    if is_asset {
        UrlClass::Asset
    } else {
        UrlClass::Resource
    }
}

/// True iff the URL path (query stripped, case-folded) ends in one of the
/// configured asset suffixes.
pub fn is_asset_request(url: &str, cfg: &CleaningConfig) -> bool {
    classify_url(url, cfg) == UrlClass::Asset
}

pub fn is_success_status(status: u16, cfg: &CleaningConfig) -> bool {
    let (low, high) = cfg.success_status_range;
    low <= status && status <= high
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub retained: usize,
    pub status_removed: usize,
    pub asset_removed: usize,
    /// URLs that could not be parsed; they are kept as non-assets.
    pub unparseable_urls: usize,
}

impl CleaningReport {
    pub fn merge(&mut self, other: &CleaningReport) {
        self.input += other.input;
        self.retained += other.retained;
        self.status_removed += other.status_removed;
        self.asset_removed += other.asset_removed;
        self.unparseable_urls += other.unparseable_urls;
    }
}

/// Drops failed requests and asset downloads, preserving input order. An
/// entry failing both rules is counted once, under status.
pub fn clean_log(entries: &[LogEntry], cfg: &CleaningConfig) -> (Vec<LogEntry>, CleaningReport) {
    let mut report = CleaningReport {
        input: entries.len(),
        ..Default::default()
    };
    let mut kept = Vec::with_capacity(entries.len());
    for e in entries {
        if !is_success_status(e.status, cfg) {
            report.status_removed += 1;
            continue;
        }
        match classify_url(&e.url, cfg) {
            UrlClass::Asset => report.asset_removed += 1,
            class => {
                if class == UrlClass::Unparseable {
                    report.unparseable_urls += 1;
                }
                kept.push(e.clone());
            }
        }
    }
    report.retained = kept.len();
    (kept, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub lines: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub blank: usize,
    /// Parsed requests whose URL contained an unencoded space.
    pub unencoded_spaces: usize,
    /// First few failures as `(1-based line number, message)`.
    pub samples: Vec<(usize, String)>,
}

#[derive(Debug, Error)]
pub enum LogReadError {
    #[error("line {line}: {source}")]
    Strict {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const MAX_SAMPLES: usize = 20;

/// Parses a whole log. Malformed lines are skipped and counted unless
/// `strict`, in which case the first one is returned as an error.
pub fn parse_log(text: &str, strict: bool) -> Result<(Vec<LogEntry>, ParseReport), LogReadError> {
    let mut report = ParseReport::default();
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        report.lines += 1;
        if line.trim().is_empty() {
            report.blank += 1;
            continue;
        }
        match parse_log_line(line) {
            Ok(e) => {
                if e.url.contains(' ') {
                    report.unencoded_spaces += 1;
                }
                report.parsed += 1;
                entries.push(e);
            }
            Err(err) => {
                if strict {
                    return Err(LogReadError::Strict {
                        line: i + 1,
                        source: err,
                    });
                }
                log::warn!("skipping malformed log line {}: {}", i + 1, err);
                report.malformed += 1;
                if report.samples.len() < MAX_SAMPLES {
                    report.samples.push((i + 1, err.to_string()));
                }
            }
        }
    }
    Ok((entries, report))
}

/// Reads a log file, transparently inflating gzip input (detected by magic bytes).
pub fn read_log_text(path: &Path) -> std::io::Result<String> {
    let raw = std::fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = String::new();
        flate2::read::MultiGzDecoder::new(&raw[..]).read_to_string(&mut out)?;
        Ok(out)
    } else {
        String::from_utf8(raw)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// Renders entries back into log text, one line each.
pub fn render_log(entries: &[LogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SAMPLE_LINE: &str = "10.0.0.1 X2bFdM1R3txwlkv - 13d8f72f08d1a4e1c418a7cb8fc31437 [01/Jun/2014:00:47:10 -0500] \"GET http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=10251051 HTTP/1.1\" 200 29732";

    fn entry(status: u16, url: &str) -> LogEntry {
        let mut e = parse_log_line(SAMPLE_LINE).unwrap();
        e.status = status;
        e.url = url.to_string();
        e
    }

    #[test]
    fn parses_sample_line() {
        let e = parse_log_line(SAMPLE_LINE).unwrap();
        assert_eq!(e.host, "10.0.0.1");
        assert_eq!(e.username, "X2bFdM1R3txwlkv");
        assert_eq!(e.remote_user, "-");
        assert_eq!(e.session_id, "13d8f72f08d1a4e1c418a7cb8fc31437");
        assert_eq!(e.method, "GET");
        assert!(e.url.ends_with("docDetail.action?docID=10251051"));
        assert_eq!(e.protocol, "HTTP/1.1");
        assert_eq!(e.status, 200);
        assert_eq!(e.bytes, Some(29732));
        assert_eq!(e.timestamp.offset().local_minus_utc(), -5 * 3600);
        assert_eq!(e.to_string(), SAMPLE_LINE);
    }

    #[test]
    fn status_errors() {
        let bad = SAMPLE_LINE.replace("\" 200 ", "\" abc ");
        let err = parse_log_line(&bad).unwrap_err();
        assert_eq!(err, ParseError::BadStatus { offset: bad.find("abc").unwrap() });
        let bad = SAMPLE_LINE.replace("\" 200 ", "\" 600 ");
        assert!(matches!(parse_log_line(&bad), Err(ParseError::BadStatus { .. })));
    }

    #[test]
    fn dash_bytes_is_absent() {
        let line = SAMPLE_LINE.replace(" 29732", " -");
        let e = parse_log_line(&line).unwrap();
        assert_eq!(e.bytes, None);
        assert_eq!(e.to_string(), line);
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(parse_log_line(""), Err(ParseError::MalformedLine { .. })));
        let unterminated = SAMPLE_LINE.replace("HTTP/1.1\"", "HTTP/1.1");
        assert!(matches!(
            parse_log_line(&unterminated),
            Err(ParseError::MalformedLine { .. })
        ));
        let not_ip = SAMPLE_LINE.replacen("10.0.0.1", "example.org", 1);
        assert_eq!(parse_log_line(&not_ip).unwrap_err().offset(), 0);
        let trailing = format!("{} extra", SAMPLE_LINE);
        assert!(parse_log_line(&trailing).is_err());
        let neg = SAMPLE_LINE.replace(" 29732", " -5");
        assert!(parse_log_line(&neg).is_err());
    }

    #[test]
    fn timestamp_without_offset_is_rejected() {
        let bad = SAMPLE_LINE.replace(" -0500]", "]");
        let err = parse_log_line(&bad).unwrap_err();
        assert_eq!(err, ParseError::BadTimestamp { offset: bad.find('[').unwrap() + 1 });
        let bad = SAMPLE_LINE.replace("01/Jun/2014", "01/Foo/2014");
        assert!(matches!(parse_log_line(&bad), Err(ParseError::BadTimestamp { .. })));
    }

    #[test]
    fn ipv6_host() {
        let line = SAMPLE_LINE.replacen("10.0.0.1", "2001:db8::1", 1);
        assert_eq!(parse_log_line(&line).unwrap().host, "2001:db8::1");
    }

    #[test]
    fn asset_detection() {
        let cfg = CleaningConfig::default();
        assert!(is_asset_request("http://x.com/logo.JPG", &cfg));
        assert!(!is_asset_request("http://x.com/docDetail.action?docID=1", &cfg));
        assert!(is_asset_request("http://x.com/style.css?v=2", &cfg));
        assert!(is_asset_request("x.com:80/a/b.js", &cfg));
        assert!(!is_asset_request("http://x.com/dir.css/page", &cfg));
        assert!(!is_asset_request("http://x.com/", &cfg));
        assert_eq!(classify_url("http://[::1", &cfg), UrlClass::Unparseable);
    }

    #[test]
    fn status_range() {
        let cfg = CleaningConfig::default();
        assert!(is_success_status(200, &cfg));
        assert!(is_success_status(299, &cfg));
        assert!(!is_success_status(404, &cfg));
        assert!(!is_success_status(199, &cfg));
    }

    #[test]
    fn config_validation() {
        assert_eq!(
            CleaningConfig::new(["jpg"], 300, 200).unwrap_err(),
            CleaningConfigError::EmptyRange(300, 200)
        );
        assert_eq!(
            CleaningConfig::new(Vec::<String>::new(), 200, 299).unwrap_err(),
            CleaningConfigError::NoSuffixes
        );
        let cfg = CleaningConfig::new([".PNG"], 200, 200).unwrap();
        assert!(cfg.asset_suffixes.contains("png"));
    }

    #[test]
    fn clean_counts_each_rule() {
        let cfg = CleaningConfig::default();
        let input = vec![
            entry(200, "http://x.com/docDetail.action?docID=1"),
            entry(304, "http://x.com/docDetail.action?docID=2"),
            entry(200, "http://x.com/a.gif"),
        ];
        let (kept, report) = clean_log(&input, &cfg);
        assert_eq!(kept, vec![input[0].clone()]);
        assert_eq!(report.status_removed, 1);
        assert_eq!(report.asset_removed, 1);
        assert_eq!(report.retained, 1);

        let (kept, report) = clean_log(&[], &cfg);
        assert!(kept.is_empty());
        assert_eq!(report, CleaningReport::default());
    }

    #[test]
    fn parse_log_skips_or_fails() {
        let text = format!("{}\n\ngarbage\n{}\n", SAMPLE_LINE, SAMPLE_LINE);
        let (entries, report) = parse_log(&text, false).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(report.malformed, 1);
        assert_eq!(report.blank, 1);
        assert_eq!(report.samples[0].0, 3);
        match parse_log(&text, true) {
            Err(LogReadError::Strict { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected strict failure, got {:?}", other.map(|r| r.1)),
        }
    }

    #[test]
    fn gzip_input_is_detected() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.gz");
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(SAMPLE_LINE.as_bytes()).unwrap();
        std::fs::write(&path, enc.finish().unwrap()).unwrap();
        assert_eq!(read_log_text(&path).unwrap(), SAMPLE_LINE);
    }
}

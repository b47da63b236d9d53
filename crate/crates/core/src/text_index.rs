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

//! Title tokenization, the term dictionary and the IDF-weighted
//! term-document matrix.
//!
//! `idf(t) = ln(N / df(t))` where `N` is the number of documents and
//! `df(t)` the number of documents whose title contains `t`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// One word per line; `#` starts a comment.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

/// Case-folds, splits on anything that is not alphanumeric, drops
/// stop-words and tokens shorter than two characters.
pub fn tokenize(title: &str, stopwords: &BTreeSet<String>) -> Vec<String> {
    title
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TitleDoc {
    pub doc_id: String,
    pub title: String,
    pub terms: Vec<String>,
}

impl TitleDoc {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, stopwords: &BTreeSet<String>) -> Self {
        let title = title.into();
        let terms = tokenize(&title, stopwords);
        TitleDoc {
            doc_id: doc_id.into(),
            title,
            terms,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("dictionary has no terms")]
    EmptyDictionary,
    #[error("malformed {what} at line {line}")]
    Malformed { what: &'static str, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dictionary {
    /// Sorted; a term's position is its column in the matrix.
    pub terms: Vec<String>,
    pub df: BTreeMap<String, usize>,
    pub n_docs: usize,
}

impl Dictionary {
    pub fn build(docs: &[TitleDoc]) -> Dictionary {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            let distinct: BTreeSet<&String> = d.terms.iter().collect();
            for t in distinct {
                *df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        Dictionary {
            terms: df.keys().cloned().collect(),
            df,
            n_docs: docs.len(),
        }
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `n_docs` on the first line as `#N<TAB>n`, then `term<TAB>df`.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#N\t{}\n", self.n_docs);
        for t in &self.terms {
            out.push_str(&format!("{}\t{}\n", t, self.df[t]));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Dictionary, IndexError> {
        let mut n_docs = None;
        let mut df = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let malformed = IndexError::Malformed {
                what: "dictionary",
                line: i + 1,
            };
            let (a, b) = line.split_once('\t').ok_or(malformed.clone())?;
            let n: usize = b.parse().map_err(|_| malformed.clone())?;
            if a == "#N" {
                n_docs = Some(n);
            } else {
                df.insert(a.to_string(), n);
            }
        }
        Ok(Dictionary {
            terms: df.keys().cloned().collect(),
            df,
            n_docs: n_docs.ok_or(IndexError::Malformed {
                what: "dictionary",
                line: 1,
            })?,
        })
    }
}

/// Natural-log inverse document frequency.
pub fn idf(term: &str, dict: &Dictionary) -> Result<f64, IndexError> {
    let df = *dict
        .df
        .get(term)
        .ok_or_else(|| IndexError::UnknownTerm(term.to_string()))?;
    debug_assert!(df >= 1 && df <= dict.n_docs);
    if df == dict.n_docs {
        return Ok(0.0);
    }
    Ok((dict.n_docs as f64 / df as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// IDF of each term present in the title.
    Idf,
    /// Term count times IDF.
    #[default]
    TfIdf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermDocMatrix {
    pub doc_ids: Vec<String>,
    pub terms: Vec<String>,
    /// Sparse rows of `(column, weight)`, columns ascending, zeros omitted.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub weighting: Weighting,
    pub row_normalized: bool,
}

impl TermDocMatrix {
    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn dense_rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut v = vec![0.0; self.terms.len()];
                for &(c, w) in row {
                    v[c] = w;
                }
                v
            })
            .collect()
    }

    /// Sparse triplets `doc_id<TAB>term<TAB>weight`.
    pub fn to_triplets_tsv(&self) -> String {
        let mut out = String::new();
        for (doc, row) in self.doc_ids.iter().zip(&self.rows) {
            for &(c, w) in row {
                out.push_str(&format!("{}\t{}\t{}\n", doc, self.terms[c], w));
            }
        }
        out
    }

    /// Inverse of [`to_triplets_tsv`](Self::to_triplets_tsv); documents and
    /// terms absent from the triplets still get a (zero) row or column.
    pub fn from_triplets_tsv(
        text: &str,
        doc_ids: Vec<String>,
        terms: Vec<String>,
        weighting: Weighting,
        row_normalized: bool,
    ) -> Result<TermDocMatrix, IndexError> {
        let doc_index: HashMap<&str, usize> =
            doc_ids.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
        let term_index: HashMap<&str, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        let mut rows = vec![Vec::new(); doc_ids.len()];
        for (i, line) in text.lines().enumerate() {
            let malformed = IndexError::Malformed {
                what: "matrix",
                line: i + 1,
            };
            let mut parts = line.split('\t');
            let (d, t, w) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(d), Some(t), Some(w), None) => (d, t, w),
                _ => return Err(malformed),
            };
            let r = *doc_index.get(d).ok_or(malformed.clone())?;
            let c = *term_index.get(t).ok_or(malformed.clone())?;
            let w: f64 = w.parse().map_err(|_| malformed.clone())?;
            rows[r].push((c, w));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
        }
        Ok(TermDocMatrix {
            doc_ids,
            terms,
            rows,
            weighting,
            row_normalized,
        })
    }
}

pub fn build_matrix(
    docs: &[TitleDoc],
    dict: &Dictionary,
    weighting: Weighting,
    normalize: bool,
) -> Result<TermDocMatrix, IndexError> {
    if dict.is_empty() {
        return Err(IndexError::EmptyDictionary);
    }
    let idfs: Vec<f64> = dict
        .terms
        .iter()
        .map(|t| idf(t, dict))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(docs.len());
    for d in docs {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in &d.terms {
            let c = dict
                .index_of(t)
                .ok_or_else(|| IndexError::UnknownTerm(t.clone()))?;
            *counts.entry(c).or_insert(0) += 1;
        }
        let mut row: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(c, n)| {
                let w = match weighting {
                    Weighting::Idf => idfs[c],
                    Weighting::TfIdf => n as f64 * idfs[c],
                };
                (c, w)
            })
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if normalize {
            let norm = row.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
            if norm > 0.0 {
                for (_, w) in &mut row {
                    *w /= norm;
                }
            }
        }
        rows.push(row);
    }
    Ok(TermDocMatrix {
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        terms: dict.terms.clone(),
        rows,
        weighting,
        row_normalized: normalize,
    })
}

pub fn cosine(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    let na = a.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(titles: &[&str]) -> Vec<TitleDoc> {
        let sw = default_stopwords();
        titles
            .iter()
            .enumerate()
            .map(|(i, t)| TitleDoc::new(format!("d{}", i), *t, &sw))
            .collect()
    }

    #[test]
    fn tokenizer() {
        let sw = default_stopwords();
        assert_eq!(tokenize("The Theory of Games", &sw), ["theory", "games"]);
        assert!(tokenize("", &sw).is_empty());
        assert_eq!(tokenize("TCP/IP Networks!", &sw), ["tcp", "ip", "networks"]);
        assert_eq!(tokenize("a C++ x", &sw), Vec::<String>::new());
    }

    #[test]
    fn idf_values() {
        let mut dict = Dictionary {
            terms: vec!["all".into(), "some".into()],
            df: BTreeMap::from([("all".into(), 100), ("some".into(), 25)]),
            n_docs: 100,
        };
        assert_eq!(idf("all", &dict).unwrap(), 0.0);
        assert!((idf("some", &dict).unwrap() - 4f64.ln()).abs() < 1e-12);
        dict.n_docs = 8;
        dict.df.insert("some".into(), 2);
        assert!((idf("some", &dict).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(idf("nope", &dict), Err(IndexError::UnknownTerm("nope".into())));
    }

    #[test]
    fn ubiquitous_terms_give_zero_rows() {
        let d = docs(&["graph theory", "graph theory", "graph theory notes"]);
        let dict = Dictionary::build(&d);
        let m = build_matrix(&d, &dict, Weighting::TfIdf, true).unwrap();
        assert!(m.rows[0].is_empty());
        assert_eq!(m.rows[0], m.rows[1]);
        assert_eq!(m.rows[2].len(), 1);
        assert!((m.rows[2][0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_dictionary_is_an_error() {
        let d = docs(&["the", "of a"]);
        let dict = Dictionary::build(&d);
        assert_eq!(
            build_matrix(&d, &dict, Weighting::TfIdf, false),
            Err(IndexError::EmptyDictionary)
        );
    }

    #[test]
    fn idf_mode_ignores_repeats() {
        let d = docs(&["data data mining", "graph mining", "graph theory"]);
        let dict = Dictionary::build(&d);
        let tfidf = build_matrix(&d, &dict, Weighting::TfIdf, false).unwrap();
        let idf_only = build_matrix(&d, &dict, Weighting::Idf, false).unwrap();
        let data = dict.index_of("data").unwrap();
        let w = |m: &TermDocMatrix| m.rows[0].iter().find(|x| x.0 == data).unwrap().1;
        assert!((w(&tfidf) - 2.0 * 3f64.ln()).abs() < 1e-12);
        assert!((w(&idf_only) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn identical_titles_have_unit_cosine() {
        let d = docs(&["Deep Learning for Graphs", "deep learning for graphs", "Medieval poetry"]);
        let dict = Dictionary::build(&d);
        let m = build_matrix(&d, &dict, Weighting::TfIdf, true).unwrap();
        assert!((cosine(&m.rows[0], &m.rows[1]) - 1.0).abs() < 1e-9);
        assert_eq!(cosine(&m.rows[0], &m.rows[2]), 0.0);
    }

    #[test]
    fn tsv_round_trips() {
        let d = docs(&["data mining", "graph mining", "graph theory", ""]);
        let dict = Dictionary::build(&d);
        assert_eq!(Dictionary::from_tsv(&dict.to_tsv()).unwrap(), dict);
        let m = build_matrix(&d, &dict, Weighting::TfIdf, true).unwrap();
        let back = TermDocMatrix::from_triplets_tsv(
            &m.to_triplets_tsv(),
            m.doc_ids.clone(),
            m.terms.clone(),
            m.weighting,
            true,
        )
        .unwrap();
        assert_eq!(back, m);
        assert!(TermDocMatrix::from_triplets_tsv("d9\tdata\t1\n", m.doc_ids.clone(), m.terms.clone(), m.weighting, true).is_err());
    }
}

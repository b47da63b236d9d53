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

//! Recommendation clusters from digital-library access logs.
//!
//! The pipeline parses EZproxy access logs, cleans and sessionizes them,
//! mines association rules over per-session transactions, turns the rules
//! into a weighted hypergraph and partitions it into balanced clusters.
//! Five content-based baselines cluster the same documents from their
//! TF-IDF title vectors, and every clustering is scored against user
//! browsing profiles with precision, recall and F1.

pub mod cluster;
pub mod eval;
pub mod hypergraph;
pub mod log_ingest;
pub mod partition;
pub mod pipeline;
pub mod rules;
pub mod seed;
pub mod session;
pub mod synth;
pub mod text_index;

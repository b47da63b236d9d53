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

//! Staged pipeline over a working directory of artifacts.
//!
//! Every stage reads the artifacts of earlier stages from the workdir and
//! writes its own atomically. Seeds for randomized stages come from one
//! root seed through [`derive_seed`] with a fixed label per stage.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    self, Algorithm, ClusterAssignment, ClusterError, Linkage, NoisePolicy, DEFAULT_DBSCAN_EPS, DEFAULT_MIN_PTS,
};
use crate::eval::{self, EvalConfig, EvalError, EvalResult, Recommendation};
use crate::hypergraph::{self, build_hypergraph, EdgeWeighting, Hypergraph, HypergraphError};
use crate::log_ingest::{self, CleaningConfig, LogReadError, DEFAULT_ASSET_SUFFIXES};
use crate::partition::{self, PartitionConfig, PartitionError};
use crate::rules::{self, MiningError, TransactionMode};
use crate::seed::derive_seed;
use crate::session::{self, Catalog, PatternRegistry, RegistryError, Session};
use crate::synth::{self, InvalidConfig, SynthConfig};
use crate::text_index::{self, Dictionary, IndexError, TermDocMatrix, TitleDoc, Weighting};

pub const PARSED_LOG: &str = "parsed.log";
pub const PARSE_REPORT: &str = "parse_report.json";
pub const CLEAN_LOG: &str = "clean.log";
pub const CLEAN_REPORT: &str = "clean_report.json";
pub const SESSIONS: &str = "sessions.jsonl";
pub const SESSION_REPORT: &str = "session_report.json";
pub const UNIVERSE: &str = "universe.txt";
pub const DICTIONARY: &str = "dictionary.tsv";
pub const TFIDF: &str = "tfidf.tsv";
pub const ITEMSETS: &str = "itemsets.tsv";
pub const RULES: &str = "rules.tsv";
pub const MINING_REPORT: &str = "mining_report.json";
pub const HYPERGRAPH: &str = "hypergraph.hgr";
pub const HYPERGRAPH_VERTICES: &str = "hypergraph_vertices.txt";
pub const PARTITION: &str = "partition.txt";
pub const CUT_REPORT: &str = "cut_report.json";
pub const REPORT: &str = "report.tsv";
pub const PER_USER: &str = "per_user.json";
pub const RECOMMENDATIONS: &str = "recommendations.json";
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

pub fn cluster_artifact(a: Algorithm) -> String {
    format!("clusters/{}.tsv", a.cli_name())
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing artifact {path}; run `{stage}` first")]
    MissingArtifact { stage: String, path: PathBuf },
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt artifact {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Parse(#[from] LogReadError),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] InvalidConfig),
}

impl PipelineError {
    /// Process exit status by error category.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Synth(_) | PipelineError::Registry(_) => 2,
            PipelineError::MissingArtifact { .. } => 3,
            PipelineError::Io { .. } => 4,
            _ => 5,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Inputs; relative paths resolve against the workdir.
    pub log: PathBuf,
    pub catalog: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub ground_truth: PathBuf,
    pub workdir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            log: "input/access.log".into(),
            catalog: Some("input/catalog.tsv".into()),
            registry: None,
            stopwords: None,
            ground_truth: "input/ground_truth.json".into(),
            workdir: "work".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    pub strict: bool,
    pub asset_suffixes: Vec<String>,
    pub success_status: (u16, u16),
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            strict: false,
            asset_suffixes: DEFAULT_ASSET_SUFFIXES.iter().map(|s| s.to_string()).collect(),
            success_status: (200, 299),
        }
    }
}

impl IngestSection {
    pub fn cleaning(&self) -> Result<CleaningConfig, PipelineError> {
        CleaningConfig::new(&self.asset_suffixes, self.success_status.0, self.success_status.1)
            .map_err(|e| PipelineError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfSection {
    pub weighting: Weighting,
    pub normalize: bool,
}

impl Default for TfidfSection {
    fn default() -> Self {
        TfidfSection {
            weighting: Weighting::TfIdf,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_itemset_size: usize,
    pub transactions: TransactionMode,
    pub single_consequent: bool,
    pub edge_weighting: EdgeWeighting,
}

impl Default for MiningSection {
    fn default() -> Self {
        MiningSection {
            min_support: rules::DEFAULT_MIN_SUPPORT,
            min_confidence: rules::DEFAULT_MIN_CONFIDENCE,
            max_itemset_size: rules::DEFAULT_MAX_ITEMSET_SIZE,
            transactions: TransactionMode::PerSession,
            single_consequent: false,
            edge_weighting: EdgeWeighting::MeanConfidence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    /// Falls back to `eval.k_clusters`.
    pub k: Option<usize>,
    pub epsilon: f64,
    pub restarts: usize,
    pub max_passes: usize,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection {
            k: None,
            epsilon: partition::DEFAULT_EPSILON,
            restarts: partition::DEFAULT_RESTARTS,
            max_passes: partition::DEFAULT_MAX_PASSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    /// Falls back to `eval.k_clusters`.
    pub k: Option<usize>,
    pub linkage: Linkage,
    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    pub dbscan_noise: NoisePolicy,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        ClusteringSection {
            k: None,
            linkage: Linkage::Average,
            dbscan_eps: DEFAULT_DBSCAN_EPS,
            dbscan_min_pts: DEFAULT_MIN_PTS,
            dbscan_noise: NoisePolicy::Singletons,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendSection {
    pub n: usize,
}

impl Default for RecommendSection {
    fn default() -> Self {
        RecommendSection { n: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub ingest: IngestSection,
    pub tfidf: TfidfSection,
    pub mining: MiningSection,
    pub partition: PartitionSection,
    pub clustering: ClusteringSection,
    pub eval: EvalConfig,
    pub recommend: RecommendSection,
    pub synth: SynthConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<PipelineConfig, PipelineError> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {}", path.display(), e)))?;
        PipelineConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn partition_k(&self) -> usize {
        self.partition.k.unwrap_or(self.eval.k_clusters)
    }

    pub fn clustering_k(&self) -> usize {
        self.clustering.k.unwrap_or(self.eval.k_clusters)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.ingest.cleaning()?;
        self.eval.validate()?;
        let m = &self.mining;
        if !(m.min_support > 0.0 && m.min_support <= 1.0) {
            return Err(PipelineError::Config(format!("min_support {} outside (0, 1]", m.min_support)));
        }
        if !(0.0..=1.0).contains(&m.min_confidence) {
            return Err(PipelineError::Config(format!("min_confidence {} outside [0, 1]", m.min_confidence)));
        }
        if m.max_itemset_size == 0 {
            return Err(PipelineError::Config("max_itemset_size must be positive".into()));
        }
        if self.partition.epsilon.is_nan() || self.partition.epsilon < 0.0 {
            return Err(PipelineError::Config("partition epsilon must be non-negative".into()));
        }
        if self.partition_k() < 2 {
            return Err(PipelineError::Config("partition k must be at least 2".into()));
        }
        if self.clustering_k() == 0 || self.recommend.n == 0 {
            return Err(PipelineError::Config("clustering k and recommend n must be positive".into()));
        }
        self.synth.validate()?;
        Ok(())
    }
}

/// Artifact directory with atomic writes.
#[derive(Debug, Clone)]
pub struct Workdir {
    pub root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Workdir {
        Workdir { root: root.into() }
    }

    pub fn path(&self, name: impl AsRef<Path>) -> PathBuf {
        self.root.join(name)
    }

    /// Input paths are taken relative to the workdir unless absolute.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn read(&self, name: &str, stage: &str) -> Result<String, PipelineError> {
        let path = self.path(name);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                stage: stage.to_string(),
                path,
            });
        }
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    pub fn write(&self, name: &str, content: &str) -> Result<PathBuf, PipelineError> {
        write_atomic(&self.path(name), content.as_bytes())?;
        Ok(self.path(name))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, PipelineError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn read_json<T: for<'de> Deserialize<'de>>(&self, name: &str, stage: &str) -> Result<T, PipelineError> {
        let text = self.read(name, stage)?;
        serde_json::from_str(&text).map_err(|e| self.corrupt(name, e))
    }

    fn corrupt(&self, name: &str, reason: impl ToString) -> PipelineError {
        PipelineError::Corrupt {
            path: self.path(name),
            reason: reason.to_string(),
        }
    }
}

/// Writes to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{}.tmp{}", name, std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub work: Workdir,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Pipeline {
        let work = Workdir::new(cfg.paths.workdir.clone());
        Pipeline { cfg, work }
    }

    pub fn seed_for(&self, label: &str) -> u64 {
        derive_seed(self.cfg.seed, label)
    }

    fn registry(&self) -> Result<PatternRegistry, PipelineError> {
        match &self.cfg.paths.registry {
            Some(p) => Ok(PatternRegistry::load(&self.work.resolve(p))?),
            None => Ok(PatternRegistry::default()),
        }
    }

    fn stopwords(&self) -> Result<BTreeSet<String>, PipelineError> {
        match &self.cfg.paths.stopwords {
            Some(p) => {
                let path = self.work.resolve(p);
                Ok(text_index::parse_stopwords(&fs::read_to_string(&path).map_err(io_err(&path))?))
            }
            None => Ok(text_index::default_stopwords()),
        }
    }

    /// Writes the synthetic log, catalog and ground truth to the input paths.
    pub fn synth(&self) -> Result<synth::GroundTruth, PipelineError> {
        let mut sc = self.cfg.synth.clone();
        sc.seed = self.seed_for("synth");
        let out = synth::generate(&sc)?;
        write_atomic(&self.work.resolve(&self.cfg.paths.log), out.log.as_bytes())?;
        if let Some(c) = &self.cfg.paths.catalog {
            write_atomic(&self.work.resolve(c), out.catalog.as_bytes())?;
        }
        let mut truth = serde_json::to_string_pretty(&out.truth).expect("truth serializes");
        truth.push('\n');
        write_atomic(&self.work.resolve(&self.cfg.paths.ground_truth), truth.as_bytes())?;
        info!("synth: {} lines, {} sessions", out.truth.log_lines, out.truth.sessions);
        Ok(out.truth)
    }

    pub fn parse(&self) -> Result<log_ingest::ParseReport, PipelineError> {
        let path = self.work.resolve(&self.cfg.paths.log);
        if !path.exists() {
            return Err(PipelineError::MissingArtifact {
                stage: "synth".into(),
                path,
            });
        }
        let text = log_ingest::read_log_text(&path).map_err(io_err(&path))?;
        let (entries, report) = log_ingest::parse_log(&text, self.cfg.ingest.strict)?;
        self.work.write(PARSED_LOG, &log_ingest::render_log(&entries))?;
        self.work.write_json(PARSE_REPORT, &report)?;
        info!("parse: {} of {} lines", report.parsed, report.lines);
        Ok(report)
    }

    pub fn clean(&self) -> Result<log_ingest::CleaningReport, PipelineError> {
        let text = self.work.read(PARSED_LOG, "parse")?;
        let (entries, _) = log_ingest::parse_log(&text, true)?;
        let (kept, report) = log_ingest::clean_log(&entries, &self.cfg.ingest.cleaning()?);
        self.work.write(CLEAN_LOG, &log_ingest::render_log(&kept))?;
        self.work.write_json(CLEAN_REPORT, &report)?;
        info!("clean: kept {} of {}", report.retained, report.input);
        Ok(report)
    }

    pub fn sessions(&self) -> Result<session::SessionReport, PipelineError> {
        let text = self.work.read(CLEAN_LOG, "clean")?;
        let (entries, _) = log_ingest::parse_log(&text, true)?;
        let catalog = match &self.cfg.paths.catalog {
            Some(p) => {
                let path = self.work.resolve(p);
                Some(Catalog::load(&path).map_err(io_err(&path))?)
            }
            None => None,
        };
        let (sessions, report) = session::build_sessions(&entries, &self.registry()?, catalog.as_ref());
        self.work.write(SESSIONS, &session::write_sessions_jsonl(&sessions))?;
        self.work.write_json(SESSION_REPORT, &report)?;
        info!("sessions: {}", report.sessions);
        Ok(report)
    }

    pub fn load_sessions(&self) -> Result<Vec<Session>, PipelineError> {
        let text = self.work.read(SESSIONS, "sessions")?;
        session::read_sessions_jsonl(&text).map_err(|e| self.work.corrupt(SESSIONS, e))
    }

    /// Selects the document universe and writes its TF-IDF matrix.
    pub fn tfidf(&self) -> Result<TermDocMatrix, PipelineError> {
        let sessions = self.load_sessions()?;
        let universe = eval::select_top_documents(&sessions, &self.cfg.eval);
        let mut titles: BTreeMap<String, String> = BTreeMap::new();
        for r in sessions.iter().flat_map(|s| &s.resources) {
            if let Some(t) = &r.title {
                titles.entry(r.item_key()).or_insert_with(|| t.clone());
            }
        }
        let sw = self.stopwords()?;
        let docs: Vec<TitleDoc> = universe
            .iter()
            .map(|d| TitleDoc::new(d.clone(), titles.get(d).cloned().unwrap_or_default(), &sw))
            .collect();
        let dict = Dictionary::build(&docs);
        let m = text_index::build_matrix(&docs, &dict, self.cfg.tfidf.weighting, self.cfg.tfidf.normalize)?;
        let mut listing = String::new();
        for d in &universe {
            listing.push_str(d);
            listing.push('\n');
        }
        self.work.write(UNIVERSE, &listing)?;
        self.work.write(DICTIONARY, &dict.to_tsv())?;
        self.work.write(TFIDF, &m.to_triplets_tsv())?;
        info!("tfidf: {} docs, {} terms, {} nonzeros", m.n_docs(), m.n_terms(), m.nnz());
        Ok(m)
    }

    pub fn load_universe(&self) -> Result<BTreeSet<String>, PipelineError> {
        Ok(self
            .work
            .read(UNIVERSE, "tfidf")?
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect())
    }

    pub fn load_matrix(&self) -> Result<TermDocMatrix, PipelineError> {
        let doc_ids: Vec<String> = self.load_universe()?.into_iter().collect();
        let dict = Dictionary::from_tsv(&self.work.read(DICTIONARY, "tfidf")?)?;
        let text = self.work.read(TFIDF, "tfidf")?;
        Ok(TermDocMatrix::from_triplets_tsv(
            &text,
            doc_ids,
            dict.terms,
            self.cfg.tfidf.weighting,
            self.cfg.tfidf.normalize,
        )?)
    }

    pub fn mine(&self) -> Result<MiningSummary, PipelineError> {
        let sessions = self.load_sessions()?;
        let universe = self.load_universe()?;
        let m = &self.cfg.mining;
        let (tx, tx_report) = rules::build_transactions(&sessions, m.transactions, Some(&universe));
        let frequent = rules::mine_frequent_itemsets(&tx, m.min_support, m.max_itemset_size)?;
        let found = rules::generate_rules(&frequent, m.min_confidence, m.single_consequent)?;
        self.work.write(ITEMSETS, &frequent.to_tsv())?;
        self.work.write(RULES, &rules::rules_to_tsv(&found))?;
        let summary = MiningSummary {
            transactions: tx_report.transactions,
            dropped_empty: tx_report.dropped_empty,
            frequent_itemsets: frequent.itemsets.len(),
            max_itemset_size: frequent.max_size(),
            rules: found.len(),
        };
        self.work.write_json(MINING_REPORT, &summary)?;
        info!("mine: {} itemsets, {} rules", summary.frequent_itemsets, summary.rules);
        Ok(summary)
    }

    pub fn hypergraph(&self) -> Result<Hypergraph, PipelineError> {
        let found = rules::rules_from_tsv(&self.work.read(RULES, "mine")?)?;
        let hg = build_hypergraph(&found, self.cfg.mining.edge_weighting)?;
        self.work.write(HYPERGRAPH, &hg.to_hgr())?;
        let mut labels = hg.vertices.join("\n");
        labels.push('\n');
        self.work.write(HYPERGRAPH_VERTICES, &labels)?;
        info!("hypergraph: {} vertices, {} edges", hg.n_vertices(), hg.n_edges());
        Ok(hg)
    }

    pub fn load_hypergraph(&self) -> Result<Hypergraph, PipelineError> {
        let labels: Vec<String> = self
            .work
            .read(HYPERGRAPH_VERTICES, "hypergraph")?
            .lines()
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        Ok(Hypergraph::from_hgr(&self.work.read(HYPERGRAPH, "hypergraph")?, Some(labels))?)
    }

    /// Partitions the rule hypergraph, places documents that appear in no
    /// rule, and writes the hypergraph cluster assignment.
    pub fn partition(&self) -> Result<ClusterAssignment, PipelineError> {
        let hg = self.load_hypergraph()?;
        let universe: Vec<String> = self.load_universe()?.into_iter().collect();
        let pc = PartitionConfig {
            k: self.cfg.partition_k(),
            epsilon: self.cfg.partition.epsilon,
            seed: self.seed_for("partition"),
            restarts: self.cfg.partition.restarts,
            max_passes: self.cfg.partition.max_passes,
        };
        let (p, cut) = partition::partition_with(&hg, &pc)?;
        let (labels, full) = hypergraph::isolated_vertex_placement(&universe, &hg.vertices, &p);
        self.work.write(PARTITION, &p.to_text())?;
        self.work.write_json(CUT_REPORT, &cut)?;
        let assignment = ClusterAssignment::from_labels(
            Algorithm::Hypergraph,
            labels,
            &full.assignment,
            cluster::params([
                ("k", pc.k.to_string()),
                ("epsilon", pc.epsilon.to_string()),
                ("restarts", pc.restarts.to_string()),
            ]),
            pc.seed,
        );
        self.work.write(&cluster_artifact(Algorithm::Hypergraph), &assignment.to_tsv())?;
        info!("partition: cut {:.3}, {} parts", cut.cut, pc.k);
        Ok(assignment)
    }

    pub fn cluster(&self, algorithm: Algorithm) -> Result<ClusterAssignment, PipelineError> {
        if algorithm == Algorithm::Hypergraph {
            return self.partition();
        }
        let m = self.load_matrix()?;
        let k = self.cfg.clustering_k().min(m.n_docs().max(1));
        let c = &self.cfg.clustering;
        let seed = self.seed_for(&format!("cluster/{}", algorithm.cli_name()));
        let assignment = match algorithm {
            Algorithm::KMeans => cluster::kmeans(&m, k, seed)?,
            Algorithm::Filtered => cluster::filtered_kmeans(&m, k, seed)?,
            Algorithm::FarthestFirst => cluster::farthest_first(&m, k, seed)?,
            Algorithm::Em => cluster::em_mixture(&m, k, seed)?,
            Algorithm::Hierarchical => cluster::hierarchical(&m, k, c.linkage)?,
            Algorithm::Density => cluster::dbscan(&m, c.dbscan_eps, c.dbscan_min_pts, c.dbscan_noise)?,
            Algorithm::Hypergraph => unreachable!(),
        };
        self.work.write(&cluster_artifact(algorithm), &assignment.to_tsv())?;
        info!("cluster {}: {} clusters", algorithm, assignment.k_effective);
        Ok(assignment)
    }

    pub fn load_assignment(&self, algorithm: Algorithm) -> Result<ClusterAssignment, PipelineError> {
        let name = cluster_artifact(algorithm);
        let stage = match algorithm {
            Algorithm::Hypergraph => "partition".to_string(),
            other => format!("cluster {}", other.cli_name()),
        };
        let text = self.work.read(&name, &stage)?;
        ClusterAssignment::from_tsv(algorithm, &text).map_err(|e| self.work.corrupt(&name, e))
    }

    pub fn profiles(&self, sessions: &[Session]) -> Result<Vec<eval::UserProfile>, PipelineError> {
        let universe = self.load_universe()?;
        Ok(eval::build_profiles(sessions, &self.cfg.eval, &universe))
    }

    /// Scores all seven assignments and writes the report.
    pub fn evaluate(&self) -> Result<Vec<EvalResult>, PipelineError> {
        let sessions = self.load_sessions()?;
        let profiles = self.profiles(&sessions)?;
        let assignments: Vec<ClusterAssignment> = Algorithm::ALL
            .iter()
            .map(|&a| self.load_assignment(a))
            .collect::<Result<_, _>>()?;
        let results: Vec<EvalResult> = assignments
            .iter()
            .map(|a| eval::evaluate_algorithm(a, &profiles, &self.cfg.eval))
            .collect::<Result<_, _>>()?;
        self.work.write(REPORT, &eval::report_tsv(&results))?;
        self.work.write_json(PER_USER, &results)?;
        self.work.write(RESOLVED_CONFIG, &self.cfg.to_toml())?;
        info!("evaluate: {} profiles", profiles.len());
        Ok(results)
    }

    pub fn recommend(
        &self,
        algorithm: Algorithm,
        user: Option<&str>,
        n: Option<usize>,
    ) -> Result<Vec<Recommendation>, PipelineError> {
        let sessions = self.load_sessions()?;
        let profiles = self.profiles(&sessions)?;
        let assignment = self.load_assignment(algorithm)?;
        let clusters = eval::clusters_of(&assignment);
        let popularity = eval::view_counts(&sessions);
        let n = n.unwrap_or(self.cfg.recommend.n);
        let recs: Vec<Recommendation> = profiles
            .iter()
            .filter(|p| user.is_none_or(|u| p.user.to_string() == u || p.user.username == u))
            .map(|p| eval::recommend(p, &clusters, n, &popularity, &self.cfg.eval))
            .collect();
        if let Some(u) = user {
            if recs.is_empty() {
                return Err(PipelineError::Config(format!("no profile for user `{}`", u)));
            }
        }
        if user.is_none() {
            self.work.write_json(RECOMMENDATIONS, &recs)?;
        }
        Ok(recs)
    }

    /// Every stage from `parse` through `evaluate` and `recommend`.
    pub fn run_all(&self) -> Result<Vec<EvalResult>, PipelineError> {
        self.parse()?;
        self.clean()?;
        self.sessions()?;
        self.tfidf()?;
        self.mine()?;
        self.hypergraph()?;
        self.partition()?;
        for a in Algorithm::CONTENT {
            self.cluster(a)?;
        }
        let results = self.evaluate()?;
        self.recommend(Algorithm::Hypergraph, None, None)?;
        Ok(results)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningSummary {
    pub transactions: usize,
    pub dropped_empty: usize,
    pub frequent_itemsets: usize,
    pub max_itemset_size: usize,
    pub rules: usize,
}

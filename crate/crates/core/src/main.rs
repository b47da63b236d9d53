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

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hyperlens::cluster::Algorithm;
use hyperlens::eval;
use hyperlens::pipeline::{write_atomic, Pipeline, PipelineConfig, PipelineError};
use hyperlens::rules::TransactionMode;
use hyperlens::synth::TitleVocabMode;

#[derive(Debug, Parser)]
#[command(name = "hyperlens", version, about = "Access-log recommender pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Pipeline config file (TOML). Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, global = true, env = "HYPERLENS_WORKDIR")]
    workdir: Option<PathBuf>,
    /// Root seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Where to write the command's main output; `-` for stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Access log (plain or .gz).
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    /// Tab-separated doc id to title catalog.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// JSON registry of document URL patterns.
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Number of clusters for partitioning, clustering and evaluation.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Partition imbalance tolerance.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Minimum itemset support as a fraction of transactions.
    #[arg(long, global = true)]
    min_support: Option<f64>,
    /// Minimum rule confidence.
    #[arg(long, global = true)]
    min_confidence: Option<f64>,
    /// Largest itemset size before mining aborts.
    #[arg(long, global = true)]
    max_itemset_size: Option<usize>,
    /// Only warnings and errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse the raw log into canonical form.
    Parse {
        /// Fail on the first malformed line.
        #[arg(long)]
        strict: bool,
    },
    /// Drop failed requests and asset fetches.
    Clean,
    /// Group entries into user sessions.
    Sessions,
    /// Select frequently viewed documents and index their titles.
    Tfidf,
    /// Mine frequent itemsets and association rules.
    Mine {
        /// Pool each user's sessions into one transaction.
        #[arg(long)]
        per_user: bool,
    },
    /// Build the rule hypergraph.
    Hypergraph,
    /// Partition the hypergraph into k parts.
    Partition,
    /// Run one content-based clustering baseline.
    Cluster {
        /// kmeans, filtered, farthest-first, em, dbscan or hierarchical.
        algorithm: String,
    },
    /// Score every clustering against user profiles.
    Evaluate,
    /// Recommend unseen documents from each user's best cluster.
    Recommend {
        #[arg(long, default_value = "hypergraph")]
        algorithm: String,
        /// Only this user (`host/username` or username).
        #[arg(long)]
        user: Option<String>,
        #[arg(short)]
        n: Option<usize>,
    },
    /// Generate a synthetic log, catalog and ground truth.
    Synth {
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        docs: Option<usize>,
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long)]
        prob: Option<f64>,
        /// aligned or shuffled.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Every stage from parse to recommend.
    RunAll,
    /// Print the effective configuration.
    ShowConfig,
}

fn resolve_config(g: &Global) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = &g.workdir {
        cfg.paths.workdir = w.clone();
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(p) = &g.log {
        cfg.paths.log = p.clone();
    }
    if let Some(p) = &g.catalog {
        cfg.paths.catalog = Some(p.clone());
    }
    if let Some(p) = &g.registry {
        cfg.paths.registry = Some(p.clone());
    }
    if let Some(k) = g.k {
        cfg.eval.k_clusters = k;
        cfg.partition.k = Some(k);
        cfg.clustering.k = Some(k);
    }
    if let Some(e) = g.epsilon {
        cfg.partition.epsilon = e;
    }
    if let Some(s) = g.min_support {
        cfg.mining.min_support = s;
    }
    if let Some(c) = g.min_confidence {
        cfg.mining.min_confidence = c;
    }
    if let Some(m) = g.max_itemset_size {
        cfg.mining.max_itemset_size = m;
    }
    Ok(cfg)
}

fn emit(out: Option<&str>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some("-") => {
            print!("{}", text);
            Ok(())
        }
        Some(path) => write_atomic(&PathBuf::from(path), text.as_bytes()),
        None => Ok(()),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn algorithm(name: &str) -> Result<Algorithm, PipelineError> {
    name.parse().map_err(|e: hyperlens::cluster::ClusterError| PipelineError::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = resolve_config(&cli.global)?;
    let out = cli.global.out.as_deref();
    match &cli.command {
        Command::Parse { strict } => cfg.ingest.strict |= *strict,
        Command::Mine { per_user: true } => cfg.mining.transactions = TransactionMode::PerUser,
        Command::Synth {
            users,
            docs,
            communities,
            prob,
            mode,
        } => {
            let s = &mut cfg.synth;
            s.n_users = users.unwrap_or(s.n_users);
            s.n_docs = docs.unwrap_or(s.n_docs);
            s.n_communities = communities.unwrap_or(s.n_communities);
            s.in_community_prob = prob.unwrap_or(s.in_community_prob);
            if let Some(m) = mode {
                s.title_vocab_mode = m.parse::<TitleVocabMode>()?;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    if let Some(t) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
    }
    let p = Pipeline::new(cfg);
    match cli.command {
        Command::Parse { .. } => emit(out, &json(&p.parse()?)),
        Command::Clean => emit(out, &json(&p.clean()?)),
        Command::Sessions => emit(out, &json(&p.sessions()?)),
        Command::Tfidf => {
            p.tfidf()?;
            Ok(())
        }
        Command::Mine { .. } => emit(out, &json(&p.mine()?)),
        Command::Hypergraph => {
            p.hypergraph()?;
            Ok(())
        }
        Command::Partition => emit(out, &p.partition()?.to_tsv()),
        Command::Cluster { algorithm: name } => emit(out, &p.cluster(algorithm(&name)?)?.to_tsv()),
        Command::Evaluate => emit(out, &eval::report_tsv(&p.evaluate()?)),
        Command::Recommend { algorithm: name, user, n } => {
            let recs = p.recommend(algorithm(&name)?, user.as_deref(), n)?;
            match (user, out) {
                (Some(_), None) => emit(Some("-"), &json(&recs[0])),
                (Some(_), o) => emit(o, &json(&recs[0])),
                (None, o) => emit(o, &json(&recs)),
            }
        }
        Command::Synth { .. } => emit(out, &json(&p.synth()?)),
        Command::RunAll => emit(out, &eval::report_tsv(&p.run_all()?)),
        Command::ShowConfig => emit(Some(out.unwrap_or("-")), &p.cfg.to_toml()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;

use clap::Args;
use fiberalign::embed::load_corpus;
use fiberalign::fiber::{join, write_join_csv, JoinConfig};
use serde::Serialize;

use super::write_json;
use crate::config::Settings;
use crate::error::CliResult;

#[derive(Debug, Args)]
pub struct JoinArgs {
    /// Corpus file (default: <out>/corpus.csv)
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct JoinSummary {
    count: usize,
    epsilon: f64,
    engine: String,
    /// Differs from `engine` when the grid falls back to brute force.
    engine_used: String,
    distance_evals: u64,
}

pub fn run(s: &Settings, a: &JoinArgs) -> CliResult<()> {
    let corpus = load_corpus(s.corpus_path(a.corpus.as_ref()))?;
    let result = join(corpus.images(), corpus.texts(), &JoinConfig::new(s.epsilon)?, s.engine)?;
    write_join_csv(&result, s.out_file("join.csv"))?;
    let summary = JoinSummary {
        count: result.len(),
        epsilon: result.epsilon,
        engine: s.engine.to_string(),
        engine_used: result.engine.to_string(),
        distance_evals: result.distance_evals,
    };
    write_json(&s.out_file("join_summary.json"), &summary)?;
    println!("{} pairs within ε = {} ({} engine)", summary.count, summary.epsilon, summary.engine);
    Ok(())
}

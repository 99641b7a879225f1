use std::path::PathBuf;

use clap::Args;
use fiberalign::decomp::{
    allocate_dimensions, optimize, save_decomposition, write_trace_csv, DimensionPlan, OptimizeConfig,
    SpecificityMode,
};
use fiberalign::embed::{load_corpus, LabeledVector};
use serde::Serialize;

use super::write_json;
use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Corpus file with pairs (default: <out>/corpus.csv)
    #[arg(long)]
    corpus: Option<PathBuf>,

    #[arg(long)]
    ds: Option<usize>,
    #[arg(long)]
    di: Option<usize>,
    #[arg(long)]
    dt: Option<usize>,

    /// Image variance for dimension allocation
    #[arg(long, default_value_t = 1.0)]
    var_f: f64,

    /// Text variance for dimension allocation
    #[arg(long, default_value_t = 1.0)]
    var_g: f64,

    /// Allocate from the corpus' pooled per-axis variances instead of --var-f/--var-g
    #[arg(long)]
    estimate_variances: bool,

    #[arg(long, default_value_t = 2000)]
    steps: usize,

    #[arg(long, default_value_t = 2e-2)]
    lr: f64,

    #[arg(long)]
    lambda: Option<f64>,

    #[arg(long)]
    gamma: Option<f64>,

    #[arg(long)]
    mode: Option<SpecificityMode>,
}

#[derive(Debug, Serialize)]
struct Metrics {
    plan: [usize; 3],
    plan_source: &'static str,
    steps: usize,
    learning_rate: f64,
    lambda: f64,
    gamma: f64,
    specificity_mode: String,
    total: f64,
    l_align: f64,
    l_orth: f64,
    l_specificity: f64,
    certified_orthogonal: bool,
}

/// Mean per-axis sample variance.
fn pooled_variance(points: &[LabeledVector], dim: usize) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 1.0;
    }
    (0..dim)
        .map(|k| {
            let mean = points.iter().map(|p| p.vector[k]).sum::<f64>() / n;
            points.iter().map(|p| (p.vector[k] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .sum::<f64>()
        / dim as f64
}

pub fn run(s: &Settings, a: &DecomposeArgs) -> CliResult<()> {
    let corpus = load_corpus(s.corpus_path(a.corpus.as_ref()))?;
    if corpus.pairs().is_empty() {
        return Err(CliError::usage("decompose needs a corpus with a #pairs section"));
    }
    let mut settings = s.clone();
    if let Some(l) = a.lambda {
        settings.lambda = l;
    }
    if let Some(g) = a.gamma {
        settings.gamma = g;
    }
    if let Some(m) = a.mode {
        settings.specificity_mode = m;
    }
    let weights = settings.weights()?;
    if weights.mode == SpecificityMode::Literal && weights.gamma != 0.0 {
        eprintln!(
            "notice: literal specificity mode adds +gamma * ||component||^2, which shrinks modality-specific \
             components; use --mode hinge to reward them instead"
        );
    }

    let dim = corpus.dim();
    let (plan, source) = match (a.ds, a.di, a.dt) {
        (Some(ds), Some(di), Some(dt)) => (DimensionPlan::new(ds, di, dt)?, "flags"),
        (None, None, None) if a.estimate_variances => {
            let var_f = pooled_variance(corpus.images(), dim);
            let var_g = pooled_variance(corpus.texts(), dim);
            (allocate_dimensions(dim, var_f, var_g)?, "allocated from corpus variances")
        }
        (None, None, None) => (allocate_dimensions(dim, a.var_f, a.var_g)?, "allocated"),
        _ => return Err(CliError::usage("give all of --ds, --di, --dt or none")),
    };
    let outcome = optimize(
        &corpus,
        &plan,
        &weights,
        &OptimizeConfig {
            steps: a.steps,
            learning_rate: a.lr,
            seed: fiberalign::rng::SeedTree::new(s.seed).child_seed("decompose"),
        },
    )?;
    save_decomposition(&outcome.decomposition, s.out_file("decomposition.csv"))?;
    write_trace_csv(&outcome.trace, s.out_file("loss_trace.csv"))?;
    let loss = outcome.final_loss;
    let metrics = Metrics {
        plan: [plan.d_s, plan.d_i, plan.d_t],
        plan_source: source,
        steps: a.steps,
        learning_rate: a.lr,
        lambda: weights.lambda,
        gamma: weights.gamma,
        specificity_mode: weights.mode.to_string(),
        total: loss.total,
        l_align: loss.align,
        l_orth: loss.orth,
        l_specificity: loss.specificity,
        certified_orthogonal: outcome.decomposition.is_orthogonal(),
    };
    write_json(&s.out_file("metrics.json"), &metrics)?;
    println!(
        "plan {:?}: L_align {:.3e}, L_orth {:.3e}, certified orthogonal: {}",
        plan.as_tuple(),
        loss.align,
        loss.orth,
        metrics.certified_orthogonal
    );
    Ok(())
}

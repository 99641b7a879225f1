use clap::{Args, ValueEnum};
use fiberalign::decomp::{allocate_dimensions, planted_model, save_decomposition, DimensionPlan, PlantedConfig};
use fiberalign::embed::{sample_gaussian_corpus, save_corpus, GaussianSpec};
use fiberalign::rng::SeedTree;

use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenMode {
    Gaussian,
    Planted,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenMode::Gaussian)]
    mode: GenMode,

    /// Ambient dimension (gaussian mode; planted mode uses ds + di + dt)
    #[arg(long)]
    dim: Option<usize>,

    /// Points per modality (gaussian) or number of pairs (planted)
    #[arg(long, default_value_t = 500)]
    n: usize,

    #[arg(long, default_value_t = 1.0)]
    var_f: f64,

    #[arg(long, default_value_t = 1.0)]
    var_g: f64,

    /// Offset of the text mean along the first axis
    #[arg(long, default_value_t = 0.0)]
    mean_shift: f64,

    /// Pair img{k} with txt{k}
    #[arg(long)]
    paired: bool,

    #[arg(long)]
    ds: Option<usize>,
    #[arg(long)]
    di: Option<usize>,
    #[arg(long)]
    dt: Option<usize>,

    /// Standard deviation of planted shared and modality coordinates
    #[arg(long, default_value_t = 0.5)]
    signal_scale: f64,

    #[arg(long, default_value_t = 1e-3)]
    noise_sd: f64,
}

pub fn run(s: &Settings, a: &GenArgs) -> CliResult<()> {
    let tree = SeedTree::new(s.seed);
    let corpus_path = s.out_file("corpus.csv");
    match a.mode {
        GenMode::Gaussian => {
            let dim = a.dim.unwrap_or(s.dim);
            let f = GaussianSpec::centered(dim, a.var_f)?;
            let mut mean_g = vec![0.0; dim];
            if dim > 0 {
                mean_g[0] = a.mean_shift;
            }
            let g = GaussianSpec::new(mean_g, a.var_g)?;
            let mut corpus = sample_gaussian_corpus(&f, &g, a.n, a.n, tree.child_seed("gen"))?;
            if a.paired {
                let pairs = (0..a.n).map(|k| (format!("img{k}"), format!("txt{k}"))).collect();
                corpus = corpus.with_pairs(pairs)?;
            }
            save_corpus(&corpus, &corpus_path)?;
            println!("wrote {} ({} points, dim {dim})", corpus_path.display(), corpus.len());
        }
        GenMode::Planted => {
            let plan = match (a.ds, a.di, a.dt) {
                (Some(ds), Some(di), Some(dt)) => DimensionPlan::new(ds, di, dt)?,
                (None, None, None) => allocate_dimensions(a.dim.unwrap_or(s.dim), 1.0, 1.0)?,
                _ => return Err(CliError::usage("give all of --ds, --di, --dt or none")),
            };
            let mut cfg = PlantedConfig::new(plan, a.n, tree.child_seed("gen"));
            cfg.signal_scale = a.signal_scale;
            cfg.noise_sd = a.noise_sd;
            let model = planted_model(&cfg)?;
            save_corpus(&model.corpus, &corpus_path)?;
            let truth_path = s.out_file("decomposition_truth.csv");
            save_decomposition(&model.truth, &truth_path)?;
            println!(
                "wrote {} ({} pairs, plan {:?}) and {}",
                corpus_path.display(),
                a.n,
                plan.as_tuple(),
                truth_path.display()
            );
        }
    }
    Ok(())
}

use std::path::PathBuf;

use clap::Args;
use fiberalign::decomp::{
    allocate_dimensions, check_dim_constraint, check_projector_laws, load_decomposition, perturb_stability_check,
    Decomposition,
};
use fiberalign::embed::{load_corpus, sample_gaussian_corpus, EmbeddedCorpus, GaussianSpec, LabeledVector};
use fiberalign::fiber::{
    check_inclusion_claim, max_cross_distance, verify_convergence, verify_monotonicity, verify_noise_tolerance,
    JoinConfig, NoiseSpec,
};
use fiberalign::linalg::{random_orthogonal, DEFAULT_RANK_TOL};
use fiberalign::report::{CheckKind, CheckReport};
use fiberalign::rng::SeedTree;
use nalgebra::DMatrix;
use serde::Serialize;

use super::write_json;
use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Corpus to check (default: a synthetic Gaussian corpus)
    #[arg(long)]
    corpus: Option<PathBuf>,

    /// Decomposition for the projector checks (default: random orthogonal)
    #[arg(long)]
    decomposition: Option<PathBuf>,

    /// Points per modality in the synthetic corpus
    #[arg(long, default_value_t = 200)]
    n: usize,

    #[arg(long, default_value_t = 100)]
    noise_trials: usize,

    #[arg(long, default_value_t = 20)]
    inclusion_trials: usize,

    /// Random vectors (projector laws) and perturbations (stability)
    #[arg(long, default_value_t = 1000)]
    vectors: usize,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    seed: u64,
    corpus: String,
    decomposition: String,
    epsilon: f64,
    eta: f64,
    all_theorems_passed: bool,
    failed_theorems: Vec<String>,
    diagnostics: Vec<String>,
    checks: Vec<CheckReport>,
}

fn points_matrix(points: &[LabeledVector], dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), dim, |r, c| points[r].vector[c])
}

fn monotonicity_grid(images: &[LabeledVector], texts: &[LabeledVector]) -> Vec<f64> {
    let diameter = max_cross_distance(images, texts);
    if diameter == 0.0 {
        return vec![0.0];
    }
    (0..=10).map(|k| diameter * k as f64 / 10.0).collect()
}

pub fn run(s: &Settings, a: &VerifyArgs) -> CliResult<()> {
    let tree = SeedTree::new(s.seed);
    let corpus_path = a.corpus.clone().or_else(|| s.paths.corpus.clone());
    let (corpus, corpus_label): (EmbeddedCorpus, String) = match &corpus_path {
        Some(p) => (load_corpus(p)?, p.display().to_string()),
        None => {
            let spec = GaussianSpec::centered(s.dim, 1.0)?;
            let c = sample_gaussian_corpus(&spec, &spec, a.n, a.n, tree.child_seed("verify-corpus"))?;
            (c, format!("synthetic gaussian (dim {}, n {})", s.dim, a.n))
        }
    };
    let (images, texts) = (corpus.images(), corpus.texts());
    let dim = corpus.dim();
    let cfg = JoinConfig::new(s.epsilon)?;

    let mut checks = vec![
        verify_monotonicity(images, texts, &monotonicity_grid(images, texts))?,
        verify_convergence(images, texts)?,
        verify_noise_tolerance(
            images,
            texts,
            &cfg,
            &NoiseSpec::new(s.eta, tree.child_seed("noise"))?,
            a.noise_trials,
        )?,
        check_inclusion_claim(
            images,
            texts,
            &cfg,
            &NoiseSpec::new(s.eta, tree.child_seed("inclusion"))?,
            a.inclusion_trials,
        )?,
    ];

    let dec_path = a.decomposition.clone().or_else(|| s.paths.decomposition.clone());
    let (dec, dec_label): (Option<Decomposition>, String) = match &dec_path {
        Some(p) => (Some(load_decomposition(p)?), p.display().to_string()),
        None if dim >= 3 => {
            let plan = allocate_dimensions(dim, 1.0, 1.0)?;
            let q = random_orthogonal(dim, &mut tree.stream("verify-decomposition"));
            let dec = Decomposition::from_orthogonal(&q, plan.d_s, plan.d_i, plan.d_t)?;
            (Some(dec), format!("random orthogonal {:?}", plan.as_tuple()))
        }
        None => (None, "none (dimension below 3)".to_string()),
    };
    if let Some(dec) = &dec {
        if dec.dim() != dim {
            return Err(CliError::usage(format!(
                "decomposition dimension {} does not match corpus dimension {dim}",
                dec.dim()
            )));
        }
        checks.push(check_projector_laws(dec, a.vectors, tree.child_seed("projector"))?);
        checks.push(perturb_stability_check(dec, a.vectors, s.eta, tree.child_seed("perturb"))?);
    }
    if !images.is_empty() && !texts.is_empty() {
        checks.push(check_dim_constraint(
            &points_matrix(images, dim),
            &points_matrix(texts, dim),
            dec.as_ref().map(|d| d.bases()),
            DEFAULT_RANK_TOL,
        )?);
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c.kind == CheckKind::Theorem && !c.passed)
        .map(|c| c.check.clone())
        .collect();
    let diagnostics: Vec<String> = checks
        .iter()
        .filter(|c| c.kind == CheckKind::Diagnostic)
        .map(|c| format!("{}: {}", c.check, if c.passed { "no violation found" } else { "violations found" }))
        .collect();
    let report = VerifyReport {
        seed: s.seed,
        corpus: corpus_label,
        decomposition: dec_label,
        epsilon: s.epsilon,
        eta: s.eta,
        all_theorems_passed: failed.is_empty(),
        failed_theorems: failed.clone(),
        diagnostics,
        checks,
    };
    write_json(&s.out_file("verify_report.json"), &report)?;
    for c in &report.checks {
        let status = match (c.kind, c.passed) {
            (CheckKind::Theorem, true) => "pass",
            (CheckKind::Theorem, false) => "FAIL",
            (CheckKind::Diagnostic, true) => "diagnostic: clean",
            (CheckKind::Diagnostic, false) => "diagnostic: violations",
        };
        println!("{:<28} {status}", c.check);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("theorem checks failed: {}", failed.join(", "))))
    }
}

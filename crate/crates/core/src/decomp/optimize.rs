use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::allocate::DimensionPlan;
use super::decomposition::{Bases, Decomposition, Subspace};
use super::loss::{loss_with_gradient, total_loss, LossBreakdown, LossData, LossWeights};
use crate::embed::EmbeddedCorpus;
use crate::error::{Error, Result};
use crate::linalg::{orthonormalize_columns, random_gaussian_matrix, random_orthogonal};
use crate::rng::SeedTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// One row of the loss trace, recorded after each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub total: f64,
    pub align: f64,
    pub orth: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub decomposition: Decomposition,
    pub trace: Vec<TraceRow>,
    pub final_loss: LossBreakdown,
}

fn check_plan(corpus: &EmbeddedCorpus, plan: &DimensionPlan) -> Result<()> {
    if plan.dim() != corpus.dim() {
        return Err(Error::domain(format!(
            "plan ({}, {}, {}) sums to {}, corpus dimension is {}",
            plan.d_s,
            plan.d_i,
            plan.d_t,
            plan.dim(),
            corpus.dim()
        )));
    }
    if corpus.pairs().is_empty() {
        return Err(Error::domain("decomposition needs a corpus with pairs"));
    }
    Ok(())
}

/// Full-batch gradient descent on the three bases.
///
/// Starts from a random orthogonal split, then each step moves every basis
/// along its negative gradient and re-orthonormalizes each basis on its own
/// (Gram–Schmidt). Orthogonality between different bases is only encouraged
/// through `lambda * L_orth`; the result is certified orthogonal only if the
/// cross inner products end within tolerance.
pub fn optimize(
    corpus: &EmbeddedCorpus,
    plan: &DimensionPlan,
    weights: &LossWeights,
    cfg: &OptimizeConfig,
) -> Result<OptimizeOutcome> {
    check_plan(corpus, plan)?;
    if cfg.steps == 0 {
        return Err(Error::domain("steps must be >= 1"));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::domain(format!("learning rate must be positive, got {}", cfg.learning_rate)));
    }
    let data = LossData::from_corpus(corpus);
    let q = random_orthogonal(corpus.dim(), &mut SeedTree::new(cfg.seed).stream("decomp-init"));
    let mut bases = Bases::from_stacked(&q, plan.d_s, plan.d_i, plan.d_t)?;

    let mut trace = Vec::with_capacity(cfg.steps);
    let mut last = None;
    for step in 1..=cfg.steps {
        let (_, grad) = loss_with_gradient(&bases, &data, weights)?;
        for which in Subspace::ALL {
            let b = bases.get_mut(which);
            *b -= grad.get(which) * cfg.learning_rate;
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step });
            }
            orthonormalize_columns(b).map_err(|e| Error::domain(format!("step {step}: {e}")))?;
        }
        let loss = total_loss(&bases, &data, weights)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { step });
        }
        trace.push(TraceRow {
            step,
            total: loss.total,
            align: loss.align,
            orth: loss.orth,
            specificity: loss.specificity,
        });
        last = Some(loss);
    }
    Ok(OptimizeOutcome {
        decomposition: Decomposition::new(bases)?,
        trace,
        final_loss: last.expect("steps >= 1"),
    })
}

/// Largest relative error between the analytic gradient of the total loss
/// and central finite differences (step `1e-5`), at a random non-orthonormal
/// parameter point.
///
/// Each entry's error is scaled by `max(|analytic|, |numeric|)`, floored at
/// `1e-6` of the largest gradient entry so that entries that are zero up to
/// rounding do not dominate. An identically zero gradient has error 0.
pub fn gradient_check(corpus: &EmbeddedCorpus, plan: &DimensionPlan, weights: &LossWeights, seed: u64) -> Result<f64> {
    check_plan(corpus, plan)?;
    let data = LossData::from_corpus(corpus);
    let d = corpus.dim();
    let mut rng = SeedTree::new(seed).stream("gradient-check");
    let scale = 1.0 / (d as f64).sqrt();
    let stacked: DMatrix<f64> = random_gaussian_matrix(d, plan.dim(), &mut rng) * scale;
    let bases = Bases::from_stacked(&stacked, plan.d_s, plan.d_i, plan.d_t)?;
    let (_, grad) = loss_with_gradient(&bases, &data, weights)?;

    const H: f64 = 1e-5;
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for which in Subspace::ALL {
        let b = bases.get(which);
        for idx in 0..b.len() {
            let mut plus = bases.clone();
            plus.get_mut(which)[idx] += H;
            let mut minus = bases.clone();
            minus.get_mut(which)[idx] -= H;
            let lp = total_loss(&plus, &data, weights)?.total;
            let lm = total_loss(&minus, &data, weights)?.total;
            numeric.push((lp - lm) / (2.0 * H));
            analytic.push(grad.get(which)[idx]);
        }
    }
    let gmax = analytic.iter().chain(&numeric).fold(0.0f64, |m, v| m.max(v.abs()));
    if gmax == 0.0 {
        return Ok(0.0);
    }
    let floor = 1e-6 * gmax;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max))
}

/// CSV `step,total,align,orth,specificity`.
pub fn write_trace_csv(trace: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "step,total,align,orth,specificity")?;
        for r in trace {
            writeln!(w, "{},{},{},{},{}", r.step, r.total, r.align, r.orth, r.specificity)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

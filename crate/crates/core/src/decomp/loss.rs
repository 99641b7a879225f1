//! The three-term training objective and its analytic gradient.
//!
//! All terms are written with the projector `P = B Bᵀ` of each basis `B`,
//! whether or not `B` has orthonormal columns, so the gradient is exact at
//! any parameter point.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::decomposition::Bases;
use crate::embed::{EmbeddedCorpus, LabeledVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecificityMode {
    /// `Σ ‖Π_I x‖² + Σ ‖Π_T y‖²`, added to the minimized loss.
    Literal,
    /// `Σ max(0, margin - ‖component‖²)`: penalizes components that are too small.
    Hinge,
}

impl fmt::Display for SpecificityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecificityMode::Literal => "literal",
            SpecificityMode::Hinge => "hinge",
        })
    }
}

impl FromStr for SpecificityMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "literal" => Ok(SpecificityMode::Literal),
            "hinge" => Ok(SpecificityMode::Hinge),
            other => Err(format!("unknown specificity mode {other:?} (expected literal or hinge)")),
        }
    }
}

/// `L = L_align + lambda * L_orth + gamma * L_specificity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub gamma: f64,
    pub mode: SpecificityMode,
    pub hinge_margin: f64,
}

impl LossWeights {
    pub fn new(lambda: f64, gamma: f64, mode: SpecificityMode, hinge_margin: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !gamma.is_finite() {
            return Err(Error::domain("gamma must be finite"));
        }
        if !(hinge_margin >= 0.0 && hinge_margin.is_finite()) {
            return Err(Error::domain(format!("hinge margin must be finite and >= 0, got {hinge_margin}")));
        }
        Ok(Self {
            lambda,
            gamma,
            mode,
            hinge_margin,
        })
    }

    pub fn literal(lambda: f64, gamma: f64) -> Result<Self> {
        Self::new(lambda, gamma, SpecificityMode::Literal, 0.0)
    }
}

/// Column matrices of a corpus, precomputed once for repeated loss evaluation.
#[derive(Debug, Clone)]
pub struct LossData {
    images: DMatrix<f64>,
    texts: DMatrix<f64>,
    all: DMatrix<f64>,
    pair_diffs: DMatrix<f64>,
}

fn columns(dim: usize, points: &[LabeledVector]) -> DMatrix<f64> {
    DMatrix::from_fn(dim, points.len(), |r, c| points[c].vector[r])
}

impl LossData {
    pub fn from_corpus(corpus: &EmbeddedCorpus) -> Self {
        let dim = corpus.dim();
        let images = columns(dim, corpus.images());
        let texts = columns(dim, corpus.texts());
        let mut all = DMatrix::zeros(dim, images.ncols() + texts.ncols());
        all.columns_mut(0, images.ncols()).copy_from(&images);
        all.columns_mut(images.ncols(), texts.ncols()).copy_from(&texts);
        let pairs = corpus.paired_vectors();
        let pair_diffs = DMatrix::from_fn(dim, pairs.len(), |r, c| pairs[c].0[r] - pairs[c].1[r]);
        Self {
            images,
            texts,
            all,
            pair_diffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.all.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.pair_diffs.ncols()
    }

    pub fn n_points(&self) -> usize {
        self.all.ncols()
    }

    /// `x - y` for every pair, one column each.
    pub fn pair_diffs(&self) -> &DMatrix<f64> {
        &self.pair_diffs
    }

    fn check(&self, bases: &Bases) -> Result<()> {
        if bases.dim() != self.dim() {
            return Err(Error::domain(format!(
                "bases live in R^{}, corpus in R^{}",
                bases.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// The three loss terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub align: f64,
    pub orth: f64,
    pub specificity: f64,
}

impl LossBreakdown {
    fn combine(align: f64, orth: f64, specificity: f64, w: &LossWeights) -> Self {
        Self {
            total: align + w.lambda * orth + w.gamma * specificity,
            align,
            orth,
            specificity,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.align.is_finite() && self.orth.is_finite() && self.specificity.is_finite()
    }
}

/// Per-column `q_j = ‖B Bᵀ u_j‖²` plus what is needed for its gradient.
struct Quadratic {
    v: DMatrix<f64>, // Bᵀ U
    w: DMatrix<f64>, // B Bᵀ U
    c: DMatrix<f64>, // Bᵀ B Bᵀ U
    q: Vec<f64>,
}

impl Quadratic {
    fn new(b: &DMatrix<f64>, u: &DMatrix<f64>) -> Self {
        let v = b.transpose() * u;
        let w = b * &v;
        let c = b.transpose() * &w;
        let q = w.column_iter().map(|col| col.norm_squared()).collect();
        Self { v, w, c, q }
    }

    /// Gradient of `Σ_j coef_j q_j` with respect to `B`.
    fn gradient(&self, u: &DMatrix<f64>, coef: &[f64]) -> DMatrix<f64> {
        let scale = DVector::from_column_slice(coef);
        let mut ws = self.w.clone();
        let mut us = u.clone();
        for (j, s) in scale.iter().enumerate() {
            ws.column_mut(j).scale_mut(2.0 * s);
            us.column_mut(j).scale_mut(2.0 * s);
        }
        ws * self.v.transpose() + us * self.c.transpose()
    }
}

/// `Σ_pairs ‖Π_s x - Π_s y‖²`.
pub fn loss_align(bases: &Bases, data: &LossData) -> Result<f64> {
    data.check(bases)?;
    if data.n_pairs() == 0 {
        return Err(Error::domain("alignment loss needs at least one pair"));
    }
    Ok(Quadratic::new(&bases.shared, &data.pair_diffs).q.iter().sum())
}

/// `Σ_z (z_s·z_I)² + (z_s·z_T)² + (z_I·z_T)²` over every corpus point.
pub fn loss_orth(bases: &Bases, data: &LossData) -> Result<f64> {
    data.check(bases)?;
    Ok(orth_terms(bases, data, false).0)
}

/// Literal: `Σ_images ‖Π_I x‖² + Σ_texts ‖Π_T y‖²`. Hinge: `Σ max(0, m - ‖·‖²)`.
pub fn loss_specificity(bases: &Bases, data: &LossData, weights: &LossWeights) -> Result<f64> {
    data.check(bases)?;
    Ok(specificity_terms(bases, data, weights, false).0)
}

pub fn total_loss(bases: &Bases, data: &LossData, weights: &LossWeights) -> Result<LossBreakdown> {
    let align = loss_align(bases, data)?;
    let orth = loss_orth(bases, data)?;
    let spec = loss_specificity(bases, data, weights)?;
    Ok(LossBreakdown::combine(align, orth, spec, weights))
}

/// Loss and its gradient with respect to each basis matrix.
pub fn loss_with_gradient(bases: &Bases, data: &LossData, weights: &LossWeights) -> Result<(LossBreakdown, Bases)> {
    data.check(bases)?;
    if data.n_pairs() == 0 {
        return Err(Error::domain("alignment loss needs at least one pair"));
    }
    let align_q = Quadratic::new(&bases.shared, &data.pair_diffs);
    let align: f64 = align_q.q.iter().sum();
    let mut grad = Bases {
        shared: align_q.gradient(&data.pair_diffs, &vec![1.0; data.n_pairs()]),
        image: DMatrix::zeros(bases.dim(), bases.image.ncols()),
        text: DMatrix::zeros(bases.dim(), bases.text.ncols()),
    };

    let (orth, orth_grad) = orth_terms(bases, data, true);
    let (spec, spec_grad) = specificity_terms(bases, data, weights, true);
    if let Some(g) = orth_grad {
        grad.shared += g.shared * weights.lambda;
        grad.image += g.image * weights.lambda;
        grad.text += g.text * weights.lambda;
    }
    if let Some(g) = spec_grad {
        grad.image += g.image * weights.gamma;
        grad.text += g.text * weights.gamma;
    }
    Ok((LossBreakdown::combine(align, orth, spec, weights), grad))
}

fn orth_terms(bases: &Bases, data: &LossData, want_grad: bool) -> (f64, Option<Bases>) {
    let z = &data.all;
    let v = [
        bases.shared.transpose() * z,
        bases.image.transpose() * z,
        bases.text.transpose() * z,
    ];
    let comps = [&bases.shared * &v[0], &bases.image * &v[1], &bases.text * &v[2]];
    let mats = [&bases.shared, &bases.image, &bases.text];
    let mut grads = [
        DMatrix::zeros(bases.dim(), mats[0].ncols()),
        DMatrix::zeros(bases.dim(), mats[1].ncols()),
        DMatrix::zeros(bases.dim(), mats[2].ncols()),
    ];
    let mut loss = 0.0;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let h: Vec<f64> = comps[a]
            .column_iter()
            .zip(comps[b].column_iter())
            .map(|(x, y)| x.dot(&y))
            .collect();
        loss += h.iter().map(|x| x * x).sum::<f64>();
        if want_grad {
            // d(h_j²)/dB_a = 2 h_j (zb_j (B_aᵀ z_j)ᵀ + z_j (B_aᵀ zb_j)ᵀ), symmetric in (a, b)
            for (me, other) in [(a, b), (b, a)] {
                let mut zo = comps[other].clone();
                let mut zs = z.clone();
                for (j, hj) in h.iter().enumerate() {
                    zo.column_mut(j).scale_mut(2.0 * hj);
                    zs.column_mut(j).scale_mut(2.0 * hj);
                }
                let bt_zother = mats[me].transpose() * &comps[other];
                grads[me] += zo * v[me].transpose() + zs * bt_zother.transpose();
            }
        }
    }
    let grad = want_grad.then(|| {
        let [s, i, t] = grads;
        Bases {
            shared: s,
            image: i,
            text: t,
        }
    });
    (loss, grad)
}

fn specificity_terms(bases: &Bases, data: &LossData, weights: &LossWeights, want_grad: bool) -> (f64, Option<Bases>) {
    let qi = Quadratic::new(&bases.image, &data.images);
    let qt = Quadratic::new(&bases.text, &data.texts);
    let (loss, coef_i, coef_t) = match weights.mode {
        SpecificityMode::Literal => {
            let loss = qi.q.iter().sum::<f64>() + qt.q.iter().sum::<f64>();
            (loss, vec![1.0; qi.q.len()], vec![1.0; qt.q.len()])
        }
        SpecificityMode::Hinge => {
            let m = weights.hinge_margin;
            let loss = qi.q.iter().chain(&qt.q).map(|q| (m - q).max(0.0)).sum::<f64>();
            let active = |q: &[f64]| q.iter().map(|&x| if m - x > 0.0 { -1.0 } else { 0.0 }).collect::<Vec<_>>();
            (loss, active(&qi.q), active(&qt.q))
        }
    };
    let grad = want_grad.then(|| Bases {
        shared: DMatrix::zeros(bases.dim(), bases.shared.ncols()),
        image: qi.gradient(&data.images, &coef_i),
        text: qt.gradient(&data.texts, &coef_t),
    });
    (loss, grad)
}

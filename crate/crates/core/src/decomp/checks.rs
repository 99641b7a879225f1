use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::allocate::DimensionPlan;
use super::decomposition::{Bases, Decomposition, Subspace};
use super::loss::{LossData, LossWeights};
use super::optimize::{optimize, OptimizeConfig};
use crate::embed::EmbeddedCorpus;
use crate::error::{Error, Result};
use crate::linalg::{random_gaussian_matrix, random_unit};
use crate::report::CheckReport;
use crate::rng::SeedTree;

const IDEMPOTENCE_TOL: f64 = 1e-10;
const ANNIHILATION_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-9;
const NORM_TOL: f64 = 1e-9;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Projector identities on the matrices themselves and on `n_vectors` random
/// Gaussian vectors. Vector errors are measured relative to `‖z‖`.
pub fn check_projector_laws(dec: &Decomposition, n_vectors: usize, seed: u64) -> Result<CheckReport> {
    dec.require_orthogonal_complete()?;
    let b = dec.bases();
    let d = dec.dim();
    let p = Subspace::ALL.map(|w| b.projector(w));
    let eye = DMatrix::<f64>::identity(d, d);

    let idem = p.iter().map(|m| max_abs(&(m * m - m))).fold(0.0, f64::max);
    let annih = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| max_abs(&(&p[i] * &p[j])).max(max_abs(&(&p[j] * &p[i]))))
        .fold(0.0, f64::max);
    let complete = max_abs(&(&p[0] + &p[1] + &p[2] - &eye));

    let mut rng = SeedTree::new(seed).stream("projector-laws");
    let (mut v_idem, mut v_annih, mut v_complete, mut v_norm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..n_vectors {
        let z = random_gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
        let zn = z.norm();
        if zn == 0.0 {
            continue;
        }
        let parts = Subspace::ALL.map(|w| b.project(w, &z));
        for (w, part) in Subspace::ALL.iter().zip(&parts) {
            v_idem = v_idem.max((b.project(*w, part) - part).norm() / zn);
            for other in Subspace::ALL.iter().filter(|o| *o != w) {
                v_annih = v_annih.max(b.project(*other, part).norm() / zn);
            }
        }
        v_complete = v_complete.max((&parts[0] + &parts[1] + &parts[2] - &z).norm() / zn);
        let sum_sq: f64 = parts.iter().map(|x| x.norm_squared()).sum();
        v_norm = v_norm.max((zn * zn - sum_sq).abs() / (zn * zn));
    }

    let mut report = CheckReport::theorem("projector_laws");
    report.trials = n_vectors;
    let rows = [
        ("idempotence", idem.max(v_idem), IDEMPOTENCE_TOL),
        ("annihilation", annih.max(v_annih), ANNIHILATION_TOL),
        ("completeness", complete.max(v_complete), COMPLETENESS_TOL),
        ("norm_decomposition", v_norm, NORM_TOL),
    ];
    for (law, err, tol) in rows {
        let row = json!({"law": law, "max_error": err, "tolerance": tol});
        if err <= tol {
            report.detail(row);
        } else {
            report.fail(row);
        }
    }
    Ok(report)
}

/// For random `z` and `δ` with `‖δ‖ <= η`: `‖δ‖² = Σ ‖Π_• δ‖²` to relative
/// `1e-9`, and `‖Π_•(z + δ) - Π_• z‖ <= η` for each subspace.
pub fn perturb_stability_check(dec: &Decomposition, trials: usize, eta: f64, seed: u64) -> Result<CheckReport> {
    dec.require_orthogonal_complete()?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::domain(format!("eta must be finite and >= 0, got {eta}")));
    }
    let b = dec.bases();
    let d = dec.dim();
    let mut rng = SeedTree::new(seed).stream("perturb-stability");
    let mut report = CheckReport::theorem("perturbation_stability");
    let (mut worst_pyth, mut worst_ratio) = (0.0f64, 0.0f64);
    for trial in 0..trials {
        let z = random_gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
        let delta: DVector<f64> = random_unit(d, &mut rng) * (eta * rng.random::<f64>());
        let dn2 = delta.norm_squared();
        let parts = Subspace::ALL.map(|w| b.project(w, &delta));
        let sum_sq: f64 = parts.iter().map(|x| x.norm_squared()).sum();
        let pyth = if dn2 == 0.0 { sum_sq } else { (dn2 - sum_sq).abs() / dn2 };
        worst_pyth = worst_pyth.max(pyth);
        let zd = &z + &delta;
        for w in Subspace::ALL {
            let shift = (b.project(w, &zd) - b.project(w, &z)).norm();
            let bound = eta * (1.0 + 1e-12) + 1e-15;
            if eta > 0.0 {
                worst_ratio = worst_ratio.max(shift / eta);
            }
            if shift > bound {
                report.fail(json!({"trial": trial, "violation": "projection shift exceeds eta", "subspace": w.to_string(), "shift": shift}));
            }
        }
        if pyth > NORM_TOL {
            report.fail(json!({"trial": trial, "violation": "pythagorean identity", "relative_error": pyth}));
        }
        report.trials += 1;
    }
    report.detail(json!({"eta": eta, "max_pythagoras_error": worst_pyth, "max_shift_over_eta": worst_ratio}));
    Ok(report)
}

/// Orthonormal basis (columns) of the span of `m`'s columns.
fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| max > 0.0 && svd.singular_values[k] > rel_tol * max)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Dimension of the intersection of two column spaces: principal angles whose
/// cosine is within `tol` of 1.
fn intersection_dim(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> usize {
    if a.ncols() == 0 || b.ncols() == 0 {
        return 0;
    }
    (a.transpose() * b)
        .singular_values()
        .iter()
        .filter(|&&c| c >= 1.0 - tol)
        .count()
}

/// Rank summary of two point clouds (one point per row).
///
/// The shared rank is the dimension of the subspace both clouds occupy: the
/// intersection of their spans, after projecting onto `Π_s` when a
/// decomposition is supplied. The check asserts it does not exceed either
/// cloud's rank.
pub fn check_dim_constraint(
    points_f: &DMatrix<f64>,
    points_g: &DMatrix<f64>,
    shared: Option<&Bases>,
    rank_tol: f64,
) -> Result<CheckReport> {
    if points_f.nrows() == 0 || points_g.nrows() == 0 {
        return Err(Error::domain("dimension check needs non-empty point sets"));
    }
    if points_f.ncols() != points_g.ncols() {
        return Err(Error::domain(format!(
            "point dimensions differ: {} vs {}",
            points_f.ncols(),
            points_g.ncols()
        )));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::domain(format!("rank tolerance must be in (0, 1), got {rank_tol}")));
    }
    let (ft, gt) = (points_f.transpose(), points_g.transpose());
    let span_f = column_space(&ft, rank_tol);
    let span_g = column_space(&gt, rank_tol);
    let (rank_f, rank_g) = (span_f.ncols(), span_g.ncols());
    let rank_shared = match shared {
        None => intersection_dim(&span_f, &span_g, rank_tol),
        Some(b) => {
            if b.dim() != points_f.ncols() {
                return Err(Error::domain("decomposition dimension does not match points"));
            }
            let p = b.projector(Subspace::Shared);
            intersection_dim(
                &column_space(&(&p * &ft), rank_tol),
                &column_space(&(&p * &gt), rank_tol),
                rank_tol,
            )
        }
    };
    let mut report = CheckReport::theorem("dimensionality_constraint");
    report.trials = 1;
    let row = json!({"rank_f": rank_f, "rank_g": rank_g, "rank_shared": rank_shared, "rank_tol": rank_tol});
    if rank_shared <= rank_f.min(rank_g) {
        report.detail(row);
    } else {
        report.fail(row);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d_s: usize,
    pub d_i: usize,
    pub d_t: usize,
    /// `max_pairs ‖Π_s x - Π_s y‖²` after optimization.
    pub sup_misalignment: f64,
    pub l_align: f64,
    pub l_orth: f64,
    pub certified_orthogonal: bool,
}

/// Runs [`optimize`] once per `d_s`, splitting the remaining dimensions as
/// `d_I = ceil((d - d_s) / 2)`, `d_T = floor((d - d_s) / 2)`.
pub fn misalignment_vs_ds_sweep(
    corpus: &EmbeddedCorpus,
    ds_values: &[usize],
    weights: &LossWeights,
    cfg: &OptimizeConfig,
) -> Result<Vec<SweepRow>> {
    let d = corpus.dim();
    let data = LossData::from_corpus(corpus);
    let mut rows = Vec::with_capacity(ds_values.len());
    for &ds in ds_values {
        if ds >= d {
            return Err(Error::domain(format!("d_s = {ds} leaves no room for modality subspaces in d = {d}")));
        }
        let rest = d - ds;
        let plan = DimensionPlan::new(ds, rest.div_ceil(2), rest / 2)?;
        let out = optimize(corpus, &plan, weights, cfg)?;
        let bs = &out.decomposition.bases().shared;
        let proj = bs.transpose() * data.pair_diffs();
        let sup = proj.column_iter().map(|c| c.norm_squared()).fold(0.0, f64::max);
        rows.push(SweepRow {
            d_s: plan.d_s,
            d_i: plan.d_i,
            d_t: plan.d_t,
            sup_misalignment: sup,
            l_align: out.final_loss.align,
            l_orth: out.final_loss.orth,
            certified_orthogonal: out.decomposition.is_orthogonal(),
        });
    }
    Ok(rows)
}

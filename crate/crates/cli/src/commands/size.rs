use std::fmt::Write as _;

use clap::Args;
use fiberalign::embed::{sample_gaussian_corpus, GaussianSpec};
use fiberalign::fiber::{closed_form_gaussian_size, empirical_size, estimate_size_mc, JoinConfig, SizeEstimate};
use fiberalign::linalg::fit_line;
use fiberalign::rng::SeedTree;
use serde::Serialize;

use super::{parse_list, write_json, write_text};
use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SizeArgs {
    #[arg(long)]
    dim: Option<usize>,

    #[arg(long, default_value_t = 1.0)]
    var_f: f64,

    #[arg(long, default_value_t = 1.0)]
    var_g: f64,

    /// Comma-separated ε values
    #[arg(long, default_value = "0.05,0.1,0.2,0.4")]
    eps_grid: String,

    /// Monte Carlo samples per estimate
    #[arg(long, default_value_t = 200_000)]
    n_samples: usize,

    /// Comma-separated squared mean separations
    #[arg(long, default_value = "0,1,2,4")]
    separations: String,

    /// ε used for the separation sweep
    #[arg(long, default_value_t = 0.1)]
    sep_eps: f64,

    /// Points per modality for the empirical join counts (0 to skip)
    #[arg(long, default_value_t = 1000)]
    empirical_n: usize,
}

#[derive(Debug, Serialize)]
struct CurvePoint {
    epsilon: f64,
    empirical_count: Option<usize>,
    empirical_fraction: Option<f64>,
    mc_estimate: f64,
    mc_std_error: f64,
    closed_form: f64,
}

#[derive(Debug, Serialize)]
struct SeparationPoint {
    separation_sq: f64,
    mc_estimate: f64,
    mc_std_error: f64,
}

#[derive(Debug, Serialize)]
struct SeparationSweep {
    epsilon: f64,
    points: Vec<SeparationPoint>,
    fitted_coefficient: Option<f64>,
    expected_coefficient: f64,
}

#[derive(Debug, Serialize)]
struct SizeReport {
    dim: usize,
    var_f: f64,
    var_g: f64,
    n_samples: usize,
    empirical_n: usize,
    curve: Vec<CurvePoint>,
    loglog_slope: Option<f64>,
    separation: SeparationSweep,
    notices: Vec<String>,
}

/// Slope of `log y` against `x`, over points with `y > 0`.
fn log_fit(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (px, py): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| **y > 0.0)
        .map(|(x, y)| (*x, y.ln()))
        .unzip();
    fit_line(&px, &py).map(|(slope, _)| slope)
}

fn estimate(f: &GaussianSpec, g: &GaussianSpec, eps: f64, n: usize, seed: u64) -> CliResult<SizeEstimate> {
    Ok(estimate_size_mc(f, g, eps, n, seed)?)
}

pub fn run(s: &Settings, a: &SizeArgs) -> CliResult<()> {
    let dim = a.dim.unwrap_or(s.dim);
    let grid = parse_list("--eps-grid", &a.eps_grid)?;
    let seps = parse_list("--separations", &a.separations)?;
    if grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::usage("--eps-grid values must be positive"));
    }
    if seps.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(CliError::usage("--separations values must be non-negative"));
    }
    let tree = SeedTree::new(s.seed);
    let f = GaussianSpec::centered(dim, a.var_f)?;
    let g = GaussianSpec::centered(dim, a.var_g)?;
    let mut notices = Vec::new();

    let sample = if a.empirical_n > 0 {
        Some(sample_gaussian_corpus(&f, &g, a.empirical_n, a.empirical_n, tree.child_seed("size-empirical"))?)
    } else {
        None
    };
    let mut curve = Vec::with_capacity(grid.len());
    for (k, &eps) in grid.iter().enumerate() {
        let est = estimate(&f, &g, eps, a.n_samples, tree.child_seed(&format!("size-mc-{k}")))?;
        let count = match &sample {
            Some(c) => Some(empirical_size(c.images(), c.texts(), &JoinConfig::new(eps)?)?),
            None => None,
        };
        curve.push(CurvePoint {
            epsilon: eps,
            empirical_count: count,
            empirical_fraction: count.map(|c| c as f64 / (a.empirical_n * a.empirical_n) as f64),
            mc_estimate: est.value,
            mc_std_error: est.std_error,
            closed_form: closed_form_gaussian_size(&f, &g, eps)?,
        });
    }
    let log_eps: Vec<f64> = grid.iter().map(|e| e.ln()).collect();
    let values: Vec<f64> = curve.iter().map(|c| c.mc_estimate).collect();
    let loglog_slope = log_fit(&log_eps, &values);
    if loglog_slope.is_none() {
        let msg = "log-log slope omitted: need at least two distinct ε with positive estimates".to_string();
        eprintln!("notice: {msg}");
        notices.push(msg);
    }

    let mut sep_points = Vec::with_capacity(seps.len());
    for (k, &sep2) in seps.iter().enumerate() {
        let mut mean = vec![0.0; dim];
        mean[0] = sep2.sqrt();
        let shifted = GaussianSpec::new(mean, a.var_g)?;
        let est = estimate(&f, &shifted, a.sep_eps, a.n_samples, tree.child_seed(&format!("size-sep-{k}")))?;
        sep_points.push(SeparationPoint {
            separation_sq: sep2,
            mc_estimate: est.value,
            mc_std_error: est.std_error,
        });
    }
    let fitted = log_fit(
        &seps,
        &sep_points.iter().map(|p| p.mc_estimate).collect::<Vec<_>>(),
    );
    if fitted.is_none() {
        let msg = "separation coefficient omitted: need at least two distinct separations".to_string();
        eprintln!("notice: {msg}");
        notices.push(msg);
    }

    let mut csv = String::from("epsilon,empirical_count,mc_estimate,mc_std_error,closed_form\n");
    for c in &curve {
        let count = c.empirical_count.map(|n| n.to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{},{},{}", c.epsilon, count, c.mc_estimate, c.mc_std_error, c.closed_form).expect("string write");
    }
    write_text(&s.out_file("size_curve.csv"), &csv)?;

    let report = SizeReport {
        dim,
        var_f: a.var_f,
        var_g: a.var_g,
        n_samples: a.n_samples,
        empirical_n: a.empirical_n,
        curve,
        loglog_slope,
        separation: SeparationSweep {
            epsilon: a.sep_eps,
            points: sep_points,
            fitted_coefficient: fitted,
            expected_coefficient: -1.0 / (2.0 * (a.var_f + a.var_g)),
        },
        notices,
    };
    write_json(&s.out_file("size_report.json"), &report)?;
    match report.loglog_slope {
        Some(slope) => println!("log-log slope {slope:.4} (dimension {dim})"),
        None => println!("log-log slope omitted"),
    }
    if let Some(c) = report.separation.fitted_coefficient {
        println!(
            "separation coefficient {c:.4} (closed form {:.4})",
            report.separation.expected_coefficient
        );
    }
    Ok(())
}

//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p fiberalign-cli --test acceptance`.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fiberalign::decomp::{
    allocate_dimensions, alignment_volume_mc, check_projector_laws, gradient_check, loss_align, optimize,
    perturb_stability_check, planted_model, Decomposition, DimensionPlan, LossData, LossWeights, OptimizeConfig,
    PlantedConfig, SpecificityMode, VolumeDensity,
};
use fiberalign::embed::{GaussianSpec, LabeledVector};
use fiberalign::fiber::{
    check_inclusion_claim, estimate_size_mc, join_bruteforce, join_grid, max_cross_distance, verify_convergence,
    verify_monotonicity, verify_noise_tolerance, JoinConfig, NoiseSpec,
};
use fiberalign::linalg::{fit_line, random_orthogonal};
use fiberalign::ring_poly::{decode, encode_patch, encode_tokens, ring_add, ring_mul, RingPoly};
use fiberalign::rng::SeedTree;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erf;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

fn uniform_points(prefix: &str, n: usize, d: usize, scale: f64, rng: &mut impl Rng) -> Vec<LabeledVector> {
    (0..n)
        .map(|k| LabeledVector::new(format!("{prefix}{k}"), (0..d).map(|_| scale * rng.random::<f64>()).collect()))
        .collect()
}

// ---------------------------------------------------------------- fiber

fn log_log_slope(d: usize, grid: &[f64], n: usize, seed: u64) -> f64 {
    let spec = GaussianSpec::centered(d, 1.0).unwrap();
    let (xs, ys): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let est = estimate_size_mc(&spec, &spec, eps, n, seed + k as u64).unwrap();
            (eps.ln(), est.value.ln())
        })
        .unzip();
    fit_line(&xs, &ys).unwrap().0
}

fn c01_eps_scaling() -> Outcome {
    let grid = [0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4];
    let mut ok = true;
    let mut parts = Vec::new();
    for d in 1..=3usize {
        let t = Instant::now();
        let slope = log_log_slope(d, &grid, 200_000, 100 * d as u64);
        let secs = t.elapsed().as_secs_f64();
        let within = (slope - d as f64).abs() <= 0.2 * d as f64 && secs <= 60.0;
        ok &= within;
        parts.push(format!("d={d} slope {slope:.3} ({secs:.1}s)"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn c02_separation_decay() -> Outcome {
    let t = Instant::now();
    let (eps, n) = (0.1, 200_000);
    let seps = [0.0, 1.0, 2.0, 4.0];
    let mut parts = Vec::new();
    let mut ok = true;
    for (var_f, var_g) in [(1.0, 1.0), (0.5, 1.5)] {
        let f = GaussianSpec::centered(2, var_f).unwrap();
        let logs: Vec<f64> = seps
            .iter()
            .enumerate()
            .map(|(k, &s2)| {
                let g = GaussianSpec::new(vec![f64::sqrt(s2), 0.0], var_g).unwrap();
                estimate_size_mc(&f, &g, eps, n, 500 + k as u64).unwrap().value.ln()
            })
            .collect();
        let coef = fit_line(&seps, &logs).unwrap().0;
        let expected = -1.0 / (2.0 * (var_f + var_g));
        ok &= ((coef - expected) / expected).abs() <= 0.15;
        parts.push(format!("σ²=({var_f},{var_g}) coef {coef:.4} vs {expected:.4}"));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs <= 60.0;
    Outcome::new(ok, format!("{} ({secs:.1}s)", parts.join(", ")))
}

fn c03_mc_vs_closed_form() -> Outcome {
    let spec = GaussianSpec::centered(1, 1.0).unwrap();
    let est = estimate_size_mc(&spec, &spec, 0.1, 100_000, 3).unwrap();
    // D = z - z' ~ N(0, 2): P(|D| <= 0.1) = erf(0.1 / 2)
    let oracle = erf(0.05);
    let ok = (oracle - 0.0564).abs() < 1e-4 && (est.value - oracle).abs() <= 4.0 * est.std_error;
    Outcome::new(
        ok,
        format!("estimate {:.6} ± {:.2e}, oracle {oracle:.6}", est.value, est.std_error),
    )
}

fn c04_noise_tolerance() -> Outcome {
    let mut rng = SeedTree::new(4).stream("corpora");
    let (mut passes, mut trials) = (0usize, 0usize);
    for c in 0..10u64 {
        let n = rng.random_range(20..=200);
        let d = rng.random_range(1..=8);
        let eta = rng.random_range(0.0..=1.0);
        let eps = rng.random_range(0.05..1.5);
        let xs = uniform_points("img", n, d, 2.0, &mut rng);
        let ys = uniform_points("txt", rng.random_range(20..=200), d, 2.0, &mut rng);
        let r = verify_noise_tolerance(&xs, &ys, &JoinConfig::new(eps).unwrap(), &NoiseSpec::new(eta, c).unwrap(), 100)
            .unwrap();
        trials += r.trials;
        passes += r.details.last().unwrap()["passes"].as_u64().unwrap() as usize;
    }
    Outcome::new(passes == trials && trials == 1000, format!("{passes}/{trials} inclusions"))
}

fn c05_inclusion_claim() -> Outcome {
    let mut rng = SeedTree::new(5).stream("corpus");
    let xs = uniform_points("img", 100, 3, 1.0, &mut rng);
    let ys = uniform_points("txt", 100, 3, 1.0, &mut rng);
    let r = check_inclusion_claim(&xs, &ys, &JoinConfig::new(0.2).unwrap(), &NoiseSpec::new(0.1, 5).unwrap(), 20)
        .unwrap();
    let summary = &r.details[0];
    let adversarial = summary["adversarial_violations"].as_u64().unwrap();
    let flagged = summary["claim_reproducible_as_printed"] == false;
    Outcome::new(
        adversarial >= 1 && flagged && !r.passed,
        format!("{adversarial} adversarial violations, claim_reproducible_as_printed = {}", !flagged),
    )
}

fn c06_monotonicity_convergence() -> Outcome {
    let mut rng = SeedTree::new(6).stream("corpora");
    let mut ok = true;
    let mut corpora = 0;
    for _ in 0..20 {
        let d = rng.random_range(1..=6);
        let xs = uniform_points("img", rng.random_range(0..=150), d, 3.0, &mut rng);
        let ys = uniform_points("txt", rng.random_range(1..=150), d, 3.0, &mut rng);
        let diameter = max_cross_distance(&xs, &ys);
        let mut grid: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..diameter.max(1e-3))).collect();
        grid.push(diameter);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mono = verify_monotonicity(&xs, &ys, &grid).unwrap();
        let conv = verify_convergence(&xs, &ys).unwrap();
        let full = join_grid(&xs, &ys, &JoinConfig::new(diameter).unwrap()).unwrap().len();
        ok &= mono.passed && conv.passed && full == xs.len() * ys.len();
        corpora += 1;
    }
    Outcome::new(ok, format!("{corpora} corpora nested and complete at the diameter"))
}

fn c07_engine_equivalence() -> Outcome {
    let mut rng = SeedTree::new(7).stream("instances");
    let mut mismatches = 0;
    for k in 0..50 {
        let d = rng.random_range(1..=8);
        let n = if k < 5 { 2000 } else { rng.random_range(1..=2000) };
        let m = rng.random_range(1..=2000);
        // half the instances sit on a lattice so boundary distances recur
        let lattice = k % 2 == 0;
        let mut pts = |prefix: &str, count: usize| -> Vec<LabeledVector> {
            (0..count)
                .map(|j| {
                    let v = (0..d)
                        .map(|_| {
                            if lattice {
                                rng.random_range(0..6) as f64 * 0.25
                            } else {
                                rng.random::<f64>()
                            }
                        })
                        .collect();
                    LabeledVector::new(format!("{prefix}{j}"), v)
                })
                .collect()
        };
        let xs = pts("img", n);
        let ys = pts("txt", m);
        let eps = if lattice { 0.25 * rng.random_range(1..4) as f64 } else { rng.random_range(0.02..0.3) };
        let cfg = JoinConfig::new(eps).unwrap();
        if join_grid(&xs, &ys, &cfg).unwrap().pairs != join_bruteforce(&xs, &ys, &cfg).unwrap().pairs {
            mismatches += 1;
        }
    }
    Outcome::new(mismatches == 0, format!("{mismatches}/50 instances differ"))
}

// ---------------------------------------------------------------- decomp

fn random_dec(d: usize, seed: u64) -> Decomposition {
    let plan = allocate_dimensions(d, 1.0, 1.0).unwrap();
    let q = random_orthogonal(d, &mut SeedTree::new(seed).stream("q"));
    Decomposition::from_orthogonal(&q, plan.d_s, plan.d_i, plan.d_t).unwrap()
}

fn c08_projector_laws() -> Outcome {
    let mut ok = true;
    let mut worst = [0.0f64; 4];
    for (k, d) in [3usize, 8, 16].into_iter().enumerate() {
        let r = check_projector_laws(&random_dec(d, k as u64), 1000, k as u64).unwrap();
        ok &= r.passed && r.trials == 1000;
        for (w, row) in worst.iter_mut().zip(&r.details) {
            *w = w.max(row["max_error"].as_f64().unwrap());
        }
    }
    Outcome::new(
        ok,
        format!(
            "max errors: idempotence {:.1e}, annihilation {:.1e}, completeness {:.1e}, norm {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c09_perturbation_stability() -> Outcome {
    let r = perturb_stability_check(&random_dec(8, 9), 1000, 0.5, 9).unwrap();
    let err = r.details.last().unwrap()["max_pythagoras_error"].as_f64().unwrap();
    Outcome::new(r.passed && r.trials == 1000, format!("1000 trials, max relative error {err:.1e}"))
}

fn c10_gradient() -> Outcome {
    let mut rng = SeedTree::new(10).stream("instances");
    let mut worst = 0.0f64;
    for k in 0..10u64 {
        let d = rng.random_range(3..=10);
        let ds = rng.random_range(1..=d - 2);
        let di = rng.random_range(1..=d - ds - 1);
        let plan = DimensionPlan::new(ds, di, d - ds - di).unwrap();
        let n = rng.random_range(3..=20);
        let spec = GaussianSpec::centered(d, 1.0).unwrap();
        let corpus = fiberalign::embed::sample_gaussian_corpus(&spec, &spec, n, n, k).unwrap();
        let corpus = corpus
            .with_pairs((0..n).map(|j| (format!("img{j}"), format!("txt{j}"))).collect())
            .unwrap();
        let mode = if k % 2 == 0 { SpecificityMode::Literal } else { SpecificityMode::Hinge };
        let w = LossWeights::new(rng.random_range(0.0..2.0), rng.random_range(0.0..1.0), mode, 3.0).unwrap();
        worst = worst.max(gradient_check(&corpus, &plan, &w, k).unwrap());
    }
    Outcome::new(worst <= 1e-4, format!("max relative error {worst:.2e}"))
}

fn c11_planted_recovery() -> Outcome {
    let plan = DimensionPlan::new(4, 2, 2).unwrap();
    let mut pc = PlantedConfig::new(plan, 32, 0);
    pc.signal_scale = 0.5;
    pc.noise_sd = 1e-3;
    let model = planted_model(&pc).unwrap();
    let planted = loss_align(model.truth.bases(), &LossData::from_corpus(&model.corpus)).unwrap();
    let w = LossWeights::literal(1.0, 0.0).unwrap();
    let t = Instant::now();
    let out = optimize(
        &model.corpus,
        &plan,
        &w,
        &OptimizeConfig {
            steps: 2000,
            learning_rate: 2e-2,
            seed: 100,
        },
    )
    .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let l = out.final_loss;
    let ok = l.orth <= 1e-6 && l.align <= 1.05 * planted && secs <= 30.0;
    Outcome::new(
        ok,
        format!(
            "L_orth {:.2e}, L_align {:.3e} vs planted {planted:.3e} (ratio {:.3}), {secs:.2}s",
            l.orth,
            l.align,
            l.align / planted
        ),
    )
}

fn c12_allocation() -> Outcome {
    let base = allocate_dimensions(16, 1.0, 1.0).unwrap().as_tuple();
    let mut rng = SeedTree::new(12).stream("draws");
    let mut bad = 0;
    for _ in 0..1000 {
        let d = rng.random_range(3..=64);
        let vf = 10f64.powf(rng.random_range(-2.0..2.0));
        let vg = 10f64.powf(rng.random_range(-2.0..2.0));
        let a = allocate_dimensions(d, vf, vg).unwrap();
        let b = allocate_dimensions(d, vg, vf).unwrap();
        let valid = a.dim() == d && a.d_s >= 1 && a.d_i >= 1 && a.d_t >= 1;
        let swapped = b.d_s == a.d_s && b.d_i == a.d_t && b.d_t == a.d_i;
        if !(valid && swapped) {
            bad += 1;
        }
    }
    Outcome::new(base == (8, 4, 4) && bad == 0, format!("(16,1,1) -> {base:?}, {bad}/1000 bad draws"))
}

fn c13_alignment_volume() -> Outcome {
    let gauss = |m: f64, v: f64| VolumeDensity::gaussian(GaussianSpec::new(vec![m], v).unwrap());
    let e = alignment_volume_mc(&gauss(0.0, 1.0), &gauss(2.0, 1.0), 200_000, 13).unwrap();
    let oracle = 2.0 * Normal::new(0.0, 1.0).unwrap().cdf(-1.0);
    let mut ok = (e.bound - oracle).abs() <= 4.0 * e.bound_se;
    let mut rng = SeedTree::new(13).stream("configs");
    let mut bound_ok = 0;
    for k in 0..20 {
        // variances >= 1/(2π) keep both densities below 1
        let f = gauss(rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0));
        let g = gauss(rng.random_range(-3.0..3.0), rng.random_range(0.2..3.0));
        let est = alignment_volume_mc(&f, &g, 50_000, 100 + k).unwrap();
        if est.product <= est.bound + 4.0 * est.combined_se() {
            bound_ok += 1;
        }
    }
    ok &= bound_ok == 20;
    Outcome::new(
        ok,
        format!(
            "∫min {:.4} ± {:.1e} vs {oracle:.4}; product <= bound in {bound_ok}/20",
            e.bound, e.bound_se
        ),
    )
}

// ---------------------------------------------------------------- ring

fn c14_ring() -> Outcome {
    let mut rng = SeedTree::new(14).stream("round-trips");
    let mut exact = 0;
    for k in 0..10_000 {
        let len = rng.random_range(1..=64);
        let (values, p) = if k % 2 == 0 {
            let v: Vec<i64> = (0..len).map(|_| rng.random_range(0..256)).collect();
            let p = encode_patch(&v).unwrap();
            (v, p)
        } else {
            let vocab = rng.random_range(2..=100_000u64);
            let v: Vec<i64> = (0..len).map(|_| rng.random_range(0..vocab as i64)).collect();
            let p = encode_tokens(&v, vocab).unwrap();
            (v, p)
        };
        if decode(&p).iter().map(|&c| c as i64).eq(values.iter().copied()) {
            exact += 1;
        }
    }

    let axioms = |m: u64| -> bool {
        let poly = move || prop::collection::vec(0..m, 0..10).prop_map(move |c| RingPoly::new(m, c).unwrap());
        let pad = |p: &RingPoly, n: usize| p.pad_to(n).unwrap();
        let mut runner = TestRunner::new(Config {
            cases: 512,
            failure_persistence: None,
            ..Config::default()
        });
        runner
            .run(&(poly(), poly(), poly()), |(a, b, c)| {
                prop_assert_eq!(ring_add(&a, &b).unwrap(), ring_add(&b, &a).unwrap());
                prop_assert_eq!(
                    ring_add(&ring_add(&a, &b).unwrap(), &c).unwrap(),
                    ring_add(&a, &ring_add(&b, &c).unwrap()).unwrap()
                );
                let ab_c = ring_mul(&ring_mul(&a, &b).unwrap(), &c).unwrap();
                let a_bc = ring_mul(&a, &ring_mul(&b, &c).unwrap()).unwrap();
                let n = ab_c.len().max(a_bc.len());
                prop_assert_eq!(pad(&ab_c, n), pad(&a_bc, n));
                prop_assert_eq!(ring_mul(&a, &b).unwrap(), ring_mul(&b, &a).unwrap());
                let lhs = ring_mul(&a, &ring_add(&b, &c).unwrap()).unwrap();
                let rhs = ring_add(&ring_mul(&a, &b).unwrap(), &ring_mul(&a, &c).unwrap()).unwrap();
                let n = lhs.len().max(rhs.len());
                prop_assert_eq!(pad(&lhs, n), pad(&rhs, n));
                let zero = RingPoly::zero(m).unwrap();
                prop_assert_eq!(ring_add(&a, &zero).unwrap(), a.clone());
                let one = RingPoly::new(m, vec![1]).unwrap();
                prop_assert_eq!(ring_mul(&a, &one).unwrap(), a.clone());
                let neg = RingPoly::new(m, a.coeffs().iter().map(|&x| (m - x) % m).collect()).unwrap();
                prop_assert!(ring_add(&a, &neg).unwrap().coeffs().iter().all(|&x| x == 0));
                Ok(())
            })
            .is_ok()
    };
    let (z256, z7) = (axioms(256), axioms(7));
    Outcome::new(
        exact == 10_000 && z256 && z7,
        format!("{exact}/10000 exact round trips; axioms Z_256 {z256}, Z_7 {z7}"),
    )
}

// ---------------------------------------------------------------- cli

fn run_cli(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_fiberalign"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c15_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let patches = tmp.path().join("patches.txt");
    let tokens = tmp.path().join("tokens.txt");
    fs::write(&patches, "0,12,255,7\n3,3,3\n200,100,50,25,12\n").unwrap();
    fs::write(&tokens, "101,2023\n5,6,7,8,9\n49999\n").unwrap();
    let (p, t) = (patches.to_str().unwrap(), tokens.to_str().unwrap());

    // (name, prerequisite commands, command under test)
    let gen_gauss: &[&str] = &["gen", "--mode", "gaussian", "--dim", "3", "--n", "150", "--seed", "7"];
    let gen_planted: &[&str] = &["gen", "--mode", "planted", "--ds", "2", "--di", "1", "--dt", "1", "--n", "24", "--seed", "7"];
    let cases: Vec<(&str, Vec<&[&str]>, Vec<&str>)> = vec![
        ("gen gaussian", vec![], gen_gauss.to_vec()),
        ("gen planted", vec![], gen_planted.to_vec()),
        ("embed", vec![], vec!["embed", "--patches", p, "--tokens", t, "--pair-by-line", "--seed", "7"]),
        ("join", vec![gen_gauss], vec!["join", "--eps", "0.4"]),
        ("size", vec![], vec!["size", "--dim", "2", "--n-samples", "20000", "--empirical-n", "200", "--seed", "7"]),
        ("verify", vec![], vec!["verify", "--n", "60", "--seed", "7"]),
        ("decompose", vec![gen_planted], vec!["decompose", "--steps", "200", "--seed", "7"]),
    ];
    let mut failures = Vec::new();
    for (name, setup, cmd) in &cases {
        let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|r| {
                let dir = tmp.path().join(format!("{}-{r}", name.replace(' ', "-")));
                fs::create_dir_all(&dir).unwrap();
                for s in setup {
                    assert!(run_cli(&dir, s), "{name}: setup failed");
                }
                assert!(run_cli(&dir, cmd), "{name}: command failed");
                dir_contents(&dir)
            })
            .collect();
        if runs[0].is_empty() || runs[0] != runs[1] {
            failures.push(*name);
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} commands byte-identical across repeated runs", cases.len())
        } else {
            format!("outputs differ for: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "gaussian ε-scaling", c01_eps_scaling),
        (2, "gaussian separation decay", c02_separation_decay),
        (3, "MC vs closed form", c03_mc_vs_closed_form),
        (4, "noise tolerance", c04_noise_tolerance),
        (5, "inclusion-claim diagnostic", c05_inclusion_claim),
        (6, "monotonicity and convergence", c06_monotonicity_convergence),
        (7, "engine equivalence", c07_engine_equivalence),
        (8, "projector laws and pythagoras", c08_projector_laws),
        (9, "perturbation stability", c09_perturbation_stability),
        (10, "gradient correctness", c10_gradient),
        (11, "planted-model recovery", c11_planted_recovery),
        (12, "dimensionality allocation", c12_allocation),
        (13, "alignment volume bound", c13_alignment_volume),
        (14, "ring round trip and axioms", c14_ring),
        (15, "CLI determinism", c15_determinism),
    ];
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let started = Instant::now();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, check) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::new(false, format!("panicked: {msg}"))
            });
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        if !outcome.passed {
            failed += 1;
        }
        println!("[{tag}] {id:>2} {name:<30} {} [{}]", outcome.detail, fmt_secs(t.elapsed()));
    }
    println!(
        "acceptance: {}/{ran} criteria passed in {}",
        ran - failed,
        fmt_secs(started.elapsed())
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::LabeledVector;
use crate::error::{Error, Result};

/// Above this dimension the grid engine scans too many neighbor cells and
/// falls back to brute force.
pub const GRID_MAX_DIM: usize = 12;

/// Join tolerance. The metric is always Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinConfig {
    epsilon: f64,
}

impl JoinConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::domain(format!("epsilon must be finite and >= 0, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinEngine {
    Brute,
    Grid,
}

impl fmt::Display for JoinEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinEngine::Brute => "brute",
            JoinEngine::Grid => "grid",
        })
    }
}

impl FromStr for JoinEngine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "brute" => Ok(JoinEngine::Brute),
            "grid" => Ok(JoinEngine::Grid),
            other => Err(format!("unknown engine {other:?} (expected brute or grid)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub image_id: String,
    pub text_id: String,
    pub distance: f64,
}

/// Pairs within ε, sorted by `(image_id, text_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinResult {
    pub epsilon: f64,
    pub pairs: Vec<MatchedPair>,
    /// Engine that actually ran (grid may fall back to brute).
    pub engine: JoinEngine,
    /// Number of point-to-point distances computed.
    pub distance_evals: u64,
}

impl JoinResult {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The `(image_id, text_id)` keys, in order.
    pub fn keys(&self) -> Vec<(&str, &str)> {
        self.pairs.iter().map(|p| (p.image_id.as_str(), p.text_id.as_str())).collect()
    }

    /// True when every pair of `self` also appears in `other`.
    pub fn is_subset_of(&self, other: &JoinResult) -> bool {
        // both sides are sorted by key, so a merge walk suffices
        let mut theirs = other.pairs.iter().map(|p| (&p.image_id, &p.text_id)).peekable();
        'outer: for p in &self.pairs {
            let key = (&p.image_id, &p.text_id);
            while let Some(&k) = theirs.peek() {
                match k.cmp(&key) {
                    std::cmp::Ordering::Less => {
                        theirs.next();
                    }
                    std::cmp::Ordering::Equal => {
                        theirs.next();
                        continue 'outer;
                    }
                    std::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn common_dim(images: &[LabeledVector], texts: &[LabeledVector]) -> Result<Option<usize>> {
    let mut dim = None;
    for p in images.iter().chain(texts) {
        match dim {
            None => dim = Some(p.vector.len()),
            Some(d) if d != p.vector.len() => {
                return Err(Error::domain(format!(
                    "point {:?} has dimension {}, expected {d}",
                    p.id,
                    p.vector.len()
                )))
            }
            _ => {}
        }
    }
    Ok(dim)
}

fn finish(epsilon: f64, mut pairs: Vec<MatchedPair>, engine: JoinEngine, distance_evals: u64) -> JoinResult {
    pairs.sort_by(|a, b| (&a.image_id, &a.text_id).cmp(&(&b.image_id, &b.text_id)));
    JoinResult {
        epsilon,
        pairs,
        engine,
        distance_evals,
    }
}

/// All pairs with distance `<= ε` (closed ball), by exhaustive comparison.
pub fn join_bruteforce(images: &[LabeledVector], texts: &[LabeledVector], cfg: &JoinConfig) -> Result<JoinResult> {
    common_dim(images, texts)?;
    let eps = cfg.epsilon;
    let pairs: Vec<MatchedPair> = images
        .par_iter()
        .flat_map_iter(|x| {
            texts.iter().filter_map(move |y| {
                let dist = distance(&x.vector, &y.vector);
                (dist <= eps).then(|| MatchedPair {
                    image_id: x.id.clone(),
                    text_id: y.id.clone(),
                    distance: dist,
                })
            })
        })
        .collect();
    let evals = images.len() as u64 * texts.len() as u64;
    Ok(finish(eps, pairs, JoinEngine::Brute, evals))
}

/// Same pair set as [`join_bruteforce`], using a uniform grid with cell side ε.
///
/// Text points are bucketed by `floor(v / ε)` per axis. Each image point scans
/// the cells within one ε of it on every axis (the 3^d neighborhood; the range
/// is widened by a few ulps so rounding in the cell index never drops a
/// boundary pair). When fewer cells are occupied than would be scanned, the
/// occupied cells are walked instead. ε = 0 and d > [`GRID_MAX_DIM`] run the
/// brute-force engine.
pub fn join_grid(images: &[LabeledVector], texts: &[LabeledVector], cfg: &JoinConfig) -> Result<JoinResult> {
    let dim = match common_dim(images, texts)? {
        Some(d) => d,
        None => return Ok(finish(cfg.epsilon, Vec::new(), JoinEngine::Grid, 0)),
    };
    let eps = cfg.epsilon;
    if eps == 0.0 || dim > GRID_MAX_DIM {
        return join_bruteforce(images, texts, cfg);
    }

    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (k, y) in texts.iter().enumerate() {
        let key: Vec<i64> = y.vector.iter().map(|&v| cell_of(v, eps)).collect();
        cells.entry(key).or_default().push(k);
    }
    // sorted so the occupied-cell walk is deterministic
    let mut occupied: Vec<(&Vec<i64>, &Vec<usize>)> = cells.iter().collect();
    occupied.sort_by(|a, b| a.0.cmp(b.0));

    let per_image: Vec<(Vec<MatchedPair>, u64)> = images
        .par_iter()
        .map(|x| {
            let ranges: Vec<(i64, i64)> = x.vector.iter().map(|&v| scan_range(v, eps)).collect();
            let span: f64 = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as f64).product();
            let mut found = Vec::new();
            let mut evals = 0u64;
            let mut visit = |members: &[usize]| {
                for &k in members {
                    let y = &texts[k];
                    evals += 1;
                    let dist = distance(&x.vector, &y.vector);
                    if dist <= eps {
                        found.push(MatchedPair {
                            image_id: x.id.clone(),
                            text_id: y.id.clone(),
                            distance: dist,
                        });
                    }
                }
            };
            if span > occupied.len() as f64 {
                for (key, members) in &occupied {
                    if key.iter().zip(&ranges).all(|(c, (lo, hi))| lo <= c && c <= hi) {
                        visit(members);
                    }
                }
            } else {
                let mut key: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                loop {
                    if let Some(members) = cells.get(&key) {
                        visit(members);
                    }
                    // odometer increment over the per-axis ranges
                    let mut axis = 0;
                    loop {
                        if axis == dim {
                            break;
                        }
                        if key[axis] < ranges[axis].1 {
                            key[axis] += 1;
                            break;
                        }
                        key[axis] = ranges[axis].0;
                        axis += 1;
                    }
                    if axis == dim {
                        break;
                    }
                }
            }
            (found, evals)
        })
        .collect();

    let evals = per_image.iter().map(|(_, e)| e).sum();
    let pairs = per_image.into_iter().flat_map(|(p, _)| p).collect();
    Ok(finish(eps, pairs, JoinEngine::Grid, evals))
}

fn cell_of(v: f64, eps: f64) -> i64 {
    (v / eps).floor() as i64
}

fn scan_range(v: f64, eps: f64) -> (i64, i64) {
    let slack = eps * 1e-9 + v.abs() * 1e-12;
    (cell_of(v - eps - slack, eps), cell_of(v + eps + slack, eps))
}

/// Runs the requested engine.
pub fn join(
    images: &[LabeledVector],
    texts: &[LabeledVector],
    cfg: &JoinConfig,
    engine: JoinEngine,
) -> Result<JoinResult> {
    match engine {
        JoinEngine::Brute => join_bruteforce(images, texts, cfg),
        JoinEngine::Grid => join_grid(images, texts, cfg),
    }
}

/// Cardinality of the ε-join.
pub fn empirical_size(images: &[LabeledVector], texts: &[LabeledVector], cfg: &JoinConfig) -> Result<usize> {
    Ok(join_grid(images, texts, cfg)?.len())
}

/// Writes `image_id,text_id,distance` rows (with header) in result order.
pub fn write_join_csv(result: &JoinResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "image_id,text_id,distance")?;
        for p in &result.pairs {
            writeln!(w, "{},{},{}", p.image_id, p.text_id, p.distance)?;
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

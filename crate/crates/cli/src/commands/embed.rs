use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fiberalign::embed::{build_map, embed_poly, save_corpus, EmbeddedCorpus, EmbeddingMap, LabeledVector};
use fiberalign::ring_poly::{encode_patch, encode_tokens, RingPoly, PIXEL_MODULUS};
use fiberalign::rng::SeedTree;

use crate::config::Settings;
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// One patch per line: comma-separated pixel values in [0, 255]
    #[arg(long)]
    patches: Option<PathBuf>,

    /// One token sequence per line: comma-separated ids in [0, vocab_size)
    #[arg(long)]
    tokens: Option<PathBuf>,

    /// Embedding dimension
    #[arg(long)]
    dim: Option<usize>,

    #[arg(long)]
    vocab_size: Option<u64>,

    /// Coefficients per polynomial (input width of the embedding maps)
    #[arg(long)]
    degree_bound: Option<usize>,

    /// Pair patch k with token line k
    #[arg(long)]
    pair_by_line: bool,
}

/// Non-blank, non-`#` lines as `(1-based line number, integers)`.
fn read_int_rows(path: &Path) -> CliResult<Vec<(usize, Vec<i64>)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_error(path, idx + 1, format!("expected comma-separated integers: {e}")))?;
        rows.push((idx + 1, values));
    }
    Ok(rows)
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Core(fiberalign::Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    })
}

fn embed_file(
    path: &Path,
    prefix: &str,
    map: &EmbeddingMap,
    encode: impl Fn(&[i64]) -> fiberalign::Result<RingPoly>,
) -> CliResult<Vec<LabeledVector>> {
    read_int_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(k, (line, values))| {
            let poly = encode(&values).map_err(|e| parse_error(path, line, e.to_string()))?;
            let v = embed_poly(map, &poly).map_err(|e| parse_error(path, line, e.to_string()))?;
            Ok(LabeledVector::new(format!("{prefix}{k}"), v))
        })
        .collect()
}

pub fn run(s: &Settings, a: &EmbedArgs) -> CliResult<()> {
    let patches = a.patches.clone().or_else(|| s.paths.patches.clone());
    let tokens = a.tokens.clone().or_else(|| s.paths.tokens.clone());
    if patches.is_none() && tokens.is_none() {
        return Err(CliError::usage("embed needs --patches and/or --tokens"));
    }
    let dim = a.dim.unwrap_or(s.dim);
    let width = a.degree_bound.unwrap_or(s.degree_bound);
    let vocab = a.vocab_size.unwrap_or(s.vocab_size);
    let tree = SeedTree::new(s.seed);

    let images = match &patches {
        Some(p) => {
            let map = build_map(tree.child_seed("embed-image"), width, dim, PIXEL_MODULUS)?;
            embed_file(p, "img", &map, encode_patch)?
        }
        None => Vec::new(),
    };
    let texts = match &tokens {
        Some(p) => {
            let map = build_map(tree.child_seed("embed-text"), width, dim, vocab)?;
            embed_file(p, "txt", &map, |t| encode_tokens(t, vocab))?
        }
        None => Vec::new(),
    };
    let pairs = if a.pair_by_line {
        (0..images.len().min(texts.len()))
            .map(|k| (format!("img{k}"), format!("txt{k}")))
            .collect()
    } else {
        Vec::new()
    };
    let corpus = EmbeddedCorpus::new(dim, images, texts, pairs)?;
    let out = s.out_file("corpus.csv");
    save_corpus(&corpus, &out)?;
    println!(
        "wrote {} ({} image, {} text points, dim {dim})",
        out.display(),
        corpus.images().len(),
        corpus.texts().len()
    );
    Ok(())
}

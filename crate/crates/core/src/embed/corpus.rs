use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Image,
    Text,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Image => "image",
            Modality::Text => "text",
        })
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "image" => Ok(Modality::Image),
            "text" => Ok(Modality::Text),
            other => Err(format!("unknown modality tag {other:?}")),
        }
    }
}

/// An embedded point with its identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub id: String,
    pub vector: Vec<f64>,
}

impl LabeledVector {
    pub fn new(id: impl Into<String>, vector: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            vector,
        }
    }
}

/// Image points `f(I)`, text points `g(T)` and optional known correspondences.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCorpus {
    dim: usize,
    images: Vec<LabeledVector>,
    texts: Vec<LabeledVector>,
    pairs: Vec<(String, String)>,
}

impl EmbeddedCorpus {
    pub fn new(
        dim: usize,
        images: Vec<LabeledVector>,
        texts: Vec<LabeledVector>,
        pairs: Vec<(String, String)>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("corpus dimension must be >= 1"));
        }
        let image_ids = check_points(dim, &images, Modality::Image)?;
        let text_ids = check_points(dim, &texts, Modality::Text)?;
        for (i, t) in &pairs {
            if !image_ids.contains(i.as_str()) {
                return Err(Error::domain(format!("pair references unknown image id {i:?}")));
            }
            if !text_ids.contains(t.as_str()) {
                return Err(Error::domain(format!("pair references unknown text id {t:?}")));
            }
        }
        Ok(Self {
            dim,
            images,
            texts,
            pairs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn images(&self) -> &[LabeledVector] {
        &self.images
    }

    pub fn texts(&self) -> &[LabeledVector] {
        &self.texts
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.images.len() + self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Replaces the correspondence list.
    pub fn with_pairs(self, pairs: Vec<(String, String)>) -> Result<Self> {
        Self::new(self.dim, self.images, self.texts, pairs)
    }

    /// Resolves each pair to `(image vector, text vector)`.
    pub fn paired_vectors(&self) -> Vec<(&[f64], &[f64])> {
        let (image_index, text_index) = (id_index(&self.images), id_index(&self.texts));
        self.pairs
            .iter()
            .map(|(i, t)| {
                // ids were validated against both sets in `new`
                let ii = image_index[i.as_str()];
                let tt = text_index[t.as_str()];
                (self.images[ii].vector.as_slice(), self.texts[tt].vector.as_slice())
            })
            .collect()
    }
}

fn id_index(set: &[LabeledVector]) -> HashMap<&str, usize> {
    set.iter().enumerate().map(|(k, p)| (p.id.as_str(), k)).collect()
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains([',', '\n', '\r']) || id.starts_with('#') {
        return Err(Error::domain(format!(
            "invalid id {id:?}: ids must be non-empty, comma-free and not start with '#'"
        )));
    }
    Ok(())
}

fn check_points(dim: usize, points: &[LabeledVector], modality: Modality) -> Result<HashSet<&str>> {
    let mut ids = HashSet::with_capacity(points.len());
    for p in points {
        check_id(&p.id)?;
        if p.vector.len() != dim {
            return Err(Error::domain(format!(
                "{modality} point {:?} has {} entries, corpus dim is {dim}",
                p.id,
                p.vector.len()
            )));
        }
        if p.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("{modality} point {:?} has a non-finite entry", p.id)));
        }
        if !ids.insert(p.id.as_str()) {
            return Err(Error::domain(format!("duplicate {modality} id {:?}", p.id)));
        }
    }
    Ok(ids)
}

const PAIRS_MARKER: &str = "#pairs";

/// Writes the corpus as CSV: a `dim=<d>` header, one row per point, then an
/// optional `#pairs` section. Floats use shortest round-trip formatting.
pub fn save_corpus(c: &EmbeddedCorpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_corpus(c, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_corpus(c: &EmbeddedCorpus, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "dim={}", c.dim)?;
    for (modality, set) in [(Modality::Image, &c.images), (Modality::Text, &c.texts)] {
        for p in set {
            write!(w, "{},{}", p.id, modality)?;
            for v in &p.vector {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
    }
    if !c.pairs.is_empty() {
        writeln!(w, "{PAIRS_MARKER}")?;
        for (i, t) in &c.pairs {
            writeln!(w, "{i},{t}")?;
        }
    }
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<EmbeddedCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file, expected `dim=<d>` header"))?;
    let dim: usize = header
        .strip_prefix("dim=")
        .and_then(|d| d.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::parse(path, 1, format!("bad header {header:?}, expected `dim=<d>`")))?;

    let mut images = Vec::new();
    let mut texts = Vec::new();
    let mut pairs = Vec::new();
    let mut in_pairs = false;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if line == PAIRS_MARKER {
            in_pairs = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if in_pairs {
            if fields.len() != 2 {
                return Err(Error::parse(path, lineno, "pair rows must be `image_id,text_id`"));
            }
            pairs.push((fields[0].to_string(), fields[1].to_string()));
            continue;
        }
        if fields.len() < 2 {
            return Err(Error::parse(path, lineno, "expected `id,modality,v0,...`"));
        }
        let modality: Modality = fields[1].parse().map_err(|e: String| Error::parse(path, lineno, e))?;
        if fields.len() - 2 != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("row has {} values, header declares dim={dim}", fields.len() - 2),
            ));
        }
        let vector = fields[2..]
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, lineno, format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let point = LabeledVector::new(fields[0], vector);
        match modality {
            Modality::Image => images.push(point),
            Modality::Text => texts.push(point),
        }
    }
    EmbeddedCorpus::new(dim, images, texts, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EmbeddedCorpus {
        EmbeddedCorpus::new(
            2,
            vec![LabeledVector::new("a", vec![0.1, -3.0e-300]), LabeledVector::new("b", vec![1.0 / 3.0, 2.0])],
            vec![LabeledVector::new("x", vec![std::f64::consts::PI, -0.0])],
            vec![("a".into(), "x".into())],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let c = small();
        save_corpus(&c, &path).unwrap();
        let back = load_corpus(&path).unwrap();
        assert_eq!(back, c);
        for (p, q) in c.images().iter().zip(back.images()) {
            for (u, v) in p.vector.iter().zip(&q.vector) {
                assert_eq!(u.to_bits() & !(1 << 63), v.to_bits() & !(1 << 63));
            }
        }
    }

    #[test]
    fn short_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "dim=4\na,image,1,2,3,4\nb,text,1,2,3\n").unwrap();
        match load_corpus(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_modality_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "dim=1\na,audio,1\n").unwrap();
        assert!(matches!(load_corpus(&path).unwrap_err(), Error::Parse { line: 2, .. }));
    }

    #[test]
    fn invalid_corpora_rejected() {
        let p = |id: &str, v: Vec<f64>| LabeledVector::new(id, v);
        assert!(EmbeddedCorpus::new(2, vec![p("a", vec![1.0])], vec![], vec![]).is_err());
        assert!(EmbeddedCorpus::new(1, vec![p("a", vec![f64::NAN])], vec![], vec![]).is_err());
        assert!(EmbeddedCorpus::new(1, vec![p("a", vec![1.0]), p("a", vec![2.0])], vec![], vec![]).is_err());
        assert!(EmbeddedCorpus::new(1, vec![p("a", vec![1.0])], vec![p("a", vec![1.0])], vec![]).is_ok());
        assert!(EmbeddedCorpus::new(1, vec![p("a", vec![1.0])], vec![], vec![("a".into(), "t".into())]).is_err());
        assert!(EmbeddedCorpus::new(1, vec![p("a,b", vec![1.0])], vec![], vec![]).is_err());
    }

    #[test]
    fn paired_vectors_resolve() {
        let c = small();
        let pv = c.paired_vectors();
        assert_eq!(pv.len(), 1);
        assert_eq!(pv[0].0, &[0.1, -3.0e-300]);
    }
}

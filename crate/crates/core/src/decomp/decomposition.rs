use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for column orthonormality within a basis and for certifying
/// cross-basis orthogonality.
pub const ORTHO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subspace {
    Shared,
    Image,
    Text,
}

impl Subspace {
    pub const ALL: [Subspace; 3] = [Subspace::Shared, Subspace::Image, Subspace::Text];
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subspace::Shared => "s",
            Subspace::Image => "i",
            Subspace::Text => "t",
        })
    }
}

impl FromStr for Subspace {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "s" | "shared" => Ok(Subspace::Shared),
            "i" | "image" => Ok(Subspace::Image),
            "t" | "text" => Ok(Subspace::Text),
            other => Err(format!("unknown subspace {other:?}")),
        }
    }
}

/// Three basis matrices (columns are basis vectors) with no orthonormality
/// requirement. This is the optimizer's parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct Bases {
    pub shared: DMatrix<f64>,
    pub image: DMatrix<f64>,
    pub text: DMatrix<f64>,
}

impl Bases {
    pub fn new(shared: DMatrix<f64>, image: DMatrix<f64>, text: DMatrix<f64>) -> Result<Self> {
        let d = shared.nrows();
        if d == 0 || image.nrows() != d || text.nrows() != d {
            return Err(Error::domain(format!(
                "bases must share a non-zero ambient dimension, got {}, {}, {}",
                shared.nrows(),
                image.nrows(),
                text.nrows()
            )));
        }
        Ok(Self { shared, image, text })
    }

    /// Splits the columns of `stacked` into blocks of widths `ds`, `di`, `dt`.
    pub fn from_stacked(stacked: &DMatrix<f64>, ds: usize, di: usize, dt: usize) -> Result<Self> {
        if ds + di + dt != stacked.ncols() {
            return Err(Error::domain("block widths do not match the stacked matrix"));
        }
        Self::new(
            stacked.columns(0, ds).into_owned(),
            stacked.columns(ds, di).into_owned(),
            stacked.columns(ds + di, dt).into_owned(),
        )
    }

    pub fn dim(&self) -> usize {
        self.shared.nrows()
    }

    pub fn widths(&self) -> (usize, usize, usize) {
        (self.shared.ncols(), self.image.ncols(), self.text.ncols())
    }

    pub fn get(&self, which: Subspace) -> &DMatrix<f64> {
        match which {
            Subspace::Shared => &self.shared,
            Subspace::Image => &self.image,
            Subspace::Text => &self.text,
        }
    }

    pub fn get_mut(&mut self, which: Subspace) -> &mut DMatrix<f64> {
        match which {
            Subspace::Shared => &mut self.shared,
            Subspace::Image => &mut self.image,
            Subspace::Text => &mut self.text,
        }
    }

    /// `B (Bᵀ z)` for the selected basis.
    pub fn project(&self, which: Subspace, z: &DVector<f64>) -> DVector<f64> {
        let b = self.get(which);
        b * (b.transpose() * z)
    }

    /// `B Bᵀ`.
    pub fn projector(&self, which: Subspace) -> DMatrix<f64> {
        let b = self.get(which);
        b * b.transpose()
    }

    /// Largest absolute inner product between columns of different bases.
    pub fn max_cross_inner(&self) -> f64 {
        let pairs = [
            (&self.shared, &self.image),
            (&self.shared, &self.text),
            (&self.image, &self.text),
        ];
        pairs
            .iter()
            .filter(|(a, b)| a.ncols() > 0 && b.ncols() > 0)
            .map(|(a, b)| (a.transpose() * *b).abs().max())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of `BᵀB` from the identity over the three bases.
    pub fn max_orthonormality_error(&self) -> f64 {
        Subspace::ALL
            .iter()
            .map(|&w| self.get(w))
            .filter(|b| b.ncols() > 0)
            .map(|b| (b.transpose() * b - DMatrix::identity(b.ncols(), b.ncols())).abs().max())
            .fold(0.0, f64::max)
    }
}

/// The three projected components of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSplit {
    pub z_s: DVector<f64>,
    pub z_i: DVector<f64>,
    pub z_t: DVector<f64>,
}

impl ComponentSplit {
    pub fn sum(&self) -> DVector<f64> {
        &self.z_s + &self.z_i + &self.z_t
    }
}

/// Validated bases: each basis has orthonormal columns and the widths fit in
/// the ambient dimension. `orthogonal` is certified only when every
/// cross-basis inner product is within [`ORTHO_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    bases: Bases,
    orthogonal: bool,
}

impl Decomposition {
    pub fn new(bases: Bases) -> Result<Self> {
        let (ds, di, dt) = bases.widths();
        if ds + di + dt > bases.dim() {
            return Err(Error::domain(format!(
                "subspace dimensions {ds}+{di}+{dt} exceed ambient dimension {}",
                bases.dim()
            )));
        }
        let err = bases.max_orthonormality_error();
        if err > ORTHO_TOL {
            return Err(Error::domain(format!(
                "basis columns are not orthonormal (max deviation {err:.3e})"
            )));
        }
        let orthogonal = bases.max_cross_inner() <= ORTHO_TOL;
        Ok(Self { bases, orthogonal })
    }

    /// Splits the columns of an orthogonal matrix into `(ds, di, dt)` blocks.
    pub fn from_orthogonal(q: &DMatrix<f64>, ds: usize, di: usize, dt: usize) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::domain("expected a square orthogonal matrix"));
        }
        Self::new(Bases::from_stacked(q, ds, di, dt)?)
    }

    /// Coordinate axes: `e_1..e_ds` shared, then image, then text.
    pub fn axis_aligned(dim: usize, ds: usize, di: usize, dt: usize) -> Result<Self> {
        if ds + di + dt > dim {
            return Err(Error::domain("subspace dimensions exceed ambient dimension"));
        }
        let eye = DMatrix::<f64>::identity(dim, dim);
        Self::new(Bases::new(
            eye.columns(0, ds).into_owned(),
            eye.columns(ds, di).into_owned(),
            eye.columns(ds + di, dt).into_owned(),
        )?)
    }

    pub fn bases(&self) -> &Bases {
        &self.bases
    }

    pub fn into_bases(self) -> Bases {
        self.bases
    }

    pub fn dim(&self) -> usize {
        self.bases.dim()
    }

    pub fn widths(&self) -> (usize, usize, usize) {
        self.bases.widths()
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    /// Widths sum to the ambient dimension.
    pub fn is_complete(&self) -> bool {
        let (a, b, c) = self.widths();
        a + b + c == self.dim()
    }

    pub fn project(&self, z: &[f64], which: Subspace) -> Result<Vec<f64>> {
        let z = self.vector(z)?;
        Ok(self.bases.project(which, &z).as_slice().to_vec())
    }

    /// `z = Π_s z + Π_I z + Π_T z`; requires an orthogonal, complete decomposition.
    pub fn split(&self, z: &[f64]) -> Result<ComponentSplit> {
        self.require_orthogonal_complete()?;
        let z = self.vector(z)?;
        Ok(ComponentSplit {
            z_s: self.bases.project(Subspace::Shared, &z),
            z_i: self.bases.project(Subspace::Image, &z),
            z_t: self.bases.project(Subspace::Text, &z),
        })
    }

    pub(crate) fn require_orthogonal_complete(&self) -> Result<()> {
        if !self.orthogonal {
            return Err(Error::domain("decomposition is not certified orthogonal"));
        }
        if !self.is_complete() {
            return Err(Error::domain("decomposition does not span the ambient space"));
        }
        Ok(())
    }

    fn vector(&self, z: &[f64]) -> Result<DVector<f64>> {
        if z.len() != self.dim() {
            return Err(Error::domain(format!(
                "vector has length {}, decomposition dimension is {}",
                z.len(),
                self.dim()
            )));
        }
        Ok(DVector::from_column_slice(z))
    }
}

/// Header `dim=<d>,ds=<d_s>,di=<d_I>,dt=<d_T>`, then one row per basis column
/// (shared columns first, then image, then text), `d` values per row.
pub fn save_decomposition(dec: &Decomposition, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let (ds, di, dt) = dec.widths();
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "dim={},ds={ds},di={di},dt={dt}", dec.dim())?;
        for which in Subspace::ALL {
            let b = dec.bases.get(which);
            for col in b.column_iter() {
                let row: Vec<String> = col.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", row.join(","))?;
            }
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

pub fn load_decomposition(path: impl AsRef<Path>) -> Result<Decomposition> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty decomposition file"))?;
    let bad_header = || Error::parse(path, 1, format!("bad header {header:?}, expected `dim=<d>,ds=..,di=..,dt=..`"));
    let mut fields = [0usize; 4];
    let names = ["dim", "ds", "di", "dt"];
    let parts: Vec<&str> = header.split(',').collect();
    if parts.len() != 4 {
        return Err(bad_header());
    }
    for (slot, (part, name)) in fields.iter_mut().zip(parts.iter().zip(names)) {
        *slot = part
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix('='))
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(bad_header)?;
    }
    let [dim, ds, di, dt] = fields;
    if dim == 0 {
        return Err(bad_header());
    }
    let mut columns = Vec::with_capacity(ds + di + dt);
    for (lineno, line) in lines {
        let values = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, lineno, format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("basis row has {} values, expected {dim}", values.len()),
            ));
        }
        columns.push(DVector::from_vec(values));
    }
    if columns.len() != ds + di + dt {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {} basis vectors, file has {}", ds + di + dt, columns.len()),
        ));
    }
    let stacked = if columns.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&columns)
    };
    Decomposition::new(Bases::from_stacked(&stacked, ds, di, dt)?)
}

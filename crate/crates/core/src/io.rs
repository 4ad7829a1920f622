//! Line-oriented text formats for families, recipes, measurements, signals
//! and reports.
//!
//! Every file starts with a magic word and version (`SFF 1`, `SRF 1`,
//! `SMF 1`, `SVF 1`, `SRP 1`). Blank lines are ignored and `#` starts a
//! comment. Reals are written with 17 significant digits, so they parse back
//! to the same `f64`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::designs::BinaryMatrix;
use crate::error::{Error, Result};
use crate::family::{ComplexFamily, Field, HyperplaneFamily, RealFamily, Recipe, Scalar, Subspace, SubspaceFamily};
use crate::frames::Frame;
use crate::linalg::Vector;

pub fn fmt_real(v: f64) -> String {
    format!("{:.16e}", v)
}

fn fmt_row<T: Scalar>(v: &DVector<T>) -> String {
    let mut parts = Vec::with_capacity(v.len());
    for &z in v.iter() {
        let (re, im) = z.parts();
        parts.push(fmt_real(re));
        if T::FIELD == Field::Complex {
            parts.push(fmt_real(im));
        }
    }
    parts.join(" ")
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.last, msg: msg.into() }
    }

    /// Next non-empty line with comments stripped, split into words.
    fn next_words(&mut self) -> Option<Vec<&'a str>> {
        for (i, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let words: Vec<&str> = body.split_whitespace().collect();
            if !words.is_empty() {
                self.last = i + 1;
                return Some(words);
            }
        }
        None
    }

    fn expect_words(&mut self, what: &str) -> Result<Vec<&'a str>> {
        self.next_words().ok_or_else(|| Error::Parse { line: self.last + 1, msg: format!("expected {}", what) })
    }

    fn header(&mut self, magic: &str) -> Result<()> {
        let w = self.expect_words(magic)?;
        if w != [magic, "1"] {
            return Err(self.err(format!("expected header '{} 1'", magic)));
        }
        Ok(())
    }

    /// A line `key value`.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let w = self.expect_words(key)?;
        if w.len() != 2 || w[0] != key {
            return Err(self.err(format!("expected '{} <value>'", key)));
        }
        Ok(w[1])
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.keyed(key)?;
        self.usize(v)
    }

    fn usize(&self, w: &str) -> Result<usize> {
        w.parse().map_err(|_| self.err(format!("invalid integer '{}'", w)))
    }

    fn real(&self, w: &str) -> Result<f64> {
        let v: f64 = w.parse().map_err(|_| self.err(format!("invalid number '{}'", w)))?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite number '{}'", w)));
        }
        Ok(v)
    }

    fn reals(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let w = self.expect_words(what)?;
        if w.len() != count {
            return Err(self.err(format!("expected {} numbers, found {}", count, w.len())));
        }
        w.iter().map(|t| self.real(t)).collect()
    }

    fn row<T: Scalar>(&mut self, m: usize) -> Result<DVector<T>> {
        let width = if T::FIELD == Field::Complex { 2 * m } else { m };
        let xs = self.reals(width, "vector row")?;
        Ok(DVector::from_fn(m, |i, _| {
            if T::FIELD == Field::Complex {
                T::from_parts(xs[2 * i], xs[2 * i + 1])
            } else {
                T::from_parts(xs[i], 0.0)
            }
        }))
    }

    fn finish(&mut self) -> Result<()> {
        if self.next_words().is_some() {
            return Err(self.err("unexpected trailing content"));
        }
        Ok(())
    }

    fn ctx<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| match e {
            Error::Parse { .. } => e,
            other => self.err(other.to_string()),
        })
    }
}

/// A family file holds either field.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyDoc {
    Real(RealFamily),
    Complex(ComplexFamily),
}

impl FamilyDoc {
    pub fn ambient(&self) -> usize {
        match self {
            FamilyDoc::Real(f) => f.ambient(),
            FamilyDoc::Complex(f) => f.ambient(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FamilyDoc::Real(f) => f.len(),
            FamilyDoc::Complex(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn write_family<T: Scalar>(family: &SubspaceFamily<T>) -> String {
    let mut out = String::new();
    out.push_str("SFF 1\n");
    out.push_str(&format!("field {}\n", family.field().name()));
    out.push_str(&format!("ambient {}\n", family.ambient()));
    out.push_str(&format!("count {}\n", family.len()));
    for (k, s) in family.subspaces().iter().enumerate() {
        out.push_str(&format!(
            "subspace {} dim {} complement {}\n",
            k + 1,
            s.dim(),
            u8::from(s.is_complement_encoded())
        ));
        for v in s.stored_vectors() {
            out.push_str(&fmt_row(v));
            out.push('\n');
        }
    }
    out
}

/// Uses the rows as given when they are orthonormal, so a written family
/// reads back unchanged; otherwise orthonormalizes them.
fn subspace_from_rows<T: Scalar>(m: usize, rows: Vec<DVector<T>>) -> Result<Subspace<T>> {
    match Subspace::from_orthonormal(m, rows.clone()) {
        Ok(s) => Ok(s),
        Err(_) => Subspace::span(m, &rows),
    }
}

fn parse_subspaces<T: Scalar>(lines: &mut Lines, m: usize, count: usize) -> Result<SubspaceFamily<T>> {
    let mut subspaces = Vec::with_capacity(count);
    for k in 0..count {
        let w = lines.expect_words("subspace header")?;
        if w.len() != 6 || w[0] != "subspace" || w[2] != "dim" || w[4] != "complement" {
            return Err(lines.err("expected 'subspace k dim D complement 0|1'"));
        }
        if lines.usize(w[1])? != k + 1 {
            return Err(lines.err(format!("expected subspace {}", k + 1)));
        }
        let dim = lines.usize(w[3])?;
        let complement = match w[5] {
            "0" => false,
            "1" => true,
            other => return Err(lines.err(format!("complement flag must be 0 or 1, got '{}'", other))),
        };
        if complement && dim + 1 != m {
            return Err(lines.err("complement-encoded subspaces have dimension M-1"));
        }
        let stored = if complement { 1 } else { dim };
        let rows = (0..stored).map(|_| lines.row::<T>(m)).collect::<Result<Vec<_>>>()?;
        let s = if complement { Subspace::complement_of(m, &rows[0]) } else { subspace_from_rows(m, rows) };
        let s = lines.ctx(s)?;
        if s.dim() != dim {
            return Err(lines.err(format!("rows span dimension {}, header says {}", s.dim(), dim)));
        }
        subspaces.push(s);
    }
    lines.ctx(SubspaceFamily::new(m, subspaces))
}

pub fn parse_family(text: &str) -> Result<FamilyDoc> {
    let mut lines = Lines::new(text);
    lines.header("SFF")?;
    let field = lines.keyed("field")?;
    let m = lines.keyed_usize("ambient")?;
    let count = lines.keyed_usize("count")?;
    let doc = match field {
        "real" => FamilyDoc::Real(parse_subspaces::<f64>(&mut lines, m, count)?),
        "complex" => FamilyDoc::Complex(parse_subspaces::<Complex64>(&mut lines, m, count)?),
        other => return Err(lines.err(format!("unknown field '{}'", other))),
    };
    lines.finish()?;
    Ok(doc)
}

/// Construction data needed for reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum RecipeDoc {
    Structured(Recipe),
    Hyperplane(HyperplaneFamily),
}

impl RecipeDoc {
    pub fn family(&self) -> Result<RealFamily> {
        match self {
            RecipeDoc::Structured(r) => r.family(),
            RecipeDoc::Hyperplane(h) => Ok(h.family.clone()),
        }
    }
}

fn fmt_int_row(row: &[u8]) -> String {
    row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn write_recipe(doc: &RecipeDoc) -> String {
    let mut out = String::from("SRF 1\n");
    match doc {
        RecipeDoc::Structured(r) => {
            let m = r.ambient();
            out.push_str("kind structured\n");
            out.push_str(&format!("ambient {}\n", m));
            out.push_str(&format!("vectors {}\n", r.frame.len()));
            for v in r.frame.vectors() {
                out.push_str(&fmt_row(v));
                out.push('\n');
            }
            out.push_str(&format!("blocks {}\n", r.frame.blocks().len()));
            for b in r.frame.blocks() {
                out.push_str(&format!("block {} {}\n", b.start, b.end));
            }
            for (name, d) in [("A", &r.design_a), ("B", &r.design_b)] {
                out.push_str(&format!("design {} {}\n", name, d.size()));
                for row in d.rows() {
                    out.push_str(&fmt_int_row(row));
                    out.push('\n');
                }
            }
            out.push_str(&format!("subspaces {}\n", r.index_sets.len()));
            for (k, (set, c)) in r.index_sets.iter().zip(&r.complement).enumerate() {
                let idx: Vec<String> = set.iter().map(|i| i.to_string()).collect();
                out.push_str(&format!("subspace {} complement {} indices {}\n", k + 1, u8::from(*c), idx.join(" ")));
            }
        }
        RecipeDoc::Hyperplane(h) => {
            out.push_str("kind hyperplane\n");
            out.push_str(&format!("ambient {}\n", h.family.ambient()));
            out.push_str(&format!("count {}\n", h.normals.len()));
            for (a, v) in h.weights.iter().zip(&h.normals) {
                out.push_str(&format!("{} {}\n", fmt_real(*a), fmt_row(v)));
            }
        }
    }
    out
}

fn parse_design(lines: &mut Lines, name: &str) -> Result<BinaryMatrix> {
    let w = lines.expect_words("design header")?;
    if w.len() != 3 || w[0] != "design" || w[1] != name {
        return Err(lines.err(format!("expected 'design {} <size>'", name)));
    }
    let n = lines.usize(w[2])?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let w = lines.expect_words("design row")?;
        if w.len() != n {
            return Err(lines.err(format!("design row must have {} entries", n)));
        }
        let row = w
            .iter()
            .map(|t| match *t {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                _ => Err(lines.err(format!("design entries are 0 or 1, got '{}'", t))),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    lines.ctx(BinaryMatrix::new(rows))
}

pub fn parse_recipe(text: &str) -> Result<RecipeDoc> {
    let mut lines = Lines::new(text);
    lines.header("SRF")?;
    let kind = lines.keyed("kind")?;
    let m = lines.keyed_usize("ambient")?;
    let doc = match kind {
        "structured" => {
            let n = lines.keyed_usize("vectors")?;
            let vectors = (0..n).map(|_| lines.row::<f64>(m)).collect::<Result<Vec<_>>>()?;
            let nb = lines.keyed_usize("blocks")?;
            let mut blocks = Vec::with_capacity(nb);
            for _ in 0..nb {
                let w = lines.expect_words("block")?;
                if w.len() != 3 || w[0] != "block" {
                    return Err(lines.err("expected 'block <start> <end>'"));
                }
                blocks.push(lines.usize(w[1])?..lines.usize(w[2])?);
            }
            let frame = lines.ctx(Frame::with_blocks(m, vectors, blocks))?;
            let design_a = parse_design(&mut lines, "A")?;
            let design_b = parse_design(&mut lines, "B")?;
            let ns = lines.keyed_usize("subspaces")?;
            let mut index_sets = Vec::with_capacity(ns);
            let mut complement = Vec::with_capacity(ns);
            for k in 0..ns {
                let w = lines.expect_words("subspace")?;
                if w.len() < 6 || w[0] != "subspace" || w[2] != "complement" || w[4] != "indices" {
                    return Err(lines.err("expected 'subspace k complement 0|1 indices i ...'"));
                }
                if lines.usize(w[1])? != k + 1 {
                    return Err(lines.err(format!("expected subspace {}", k + 1)));
                }
                complement.push(match w[3] {
                    "0" => false,
                    "1" => true,
                    other => return Err(lines.err(format!("complement flag must be 0 or 1, got '{}'", other))),
                });
                index_sets.push(w[5..].iter().map(|t| lines.usize(t)).collect::<Result<Vec<_>>>()?);
            }
            let recipe = Recipe { frame, index_sets, complement, design_a, design_b };
            lines.ctx(recipe.validate())?;
            RecipeDoc::Structured(recipe)
        }
        "hyperplane" => {
            let n = lines.keyed_usize("count")?;
            let mut weights = Vec::with_capacity(n);
            let mut normals = Vec::with_capacity(n);
            for _ in 0..n {
                let xs = lines.reals(m + 1, "weight and normal")?;
                weights.push(xs[0]);
                normals.push(Vector::from_column_slice(&xs[1..]));
            }
            let subspaces = lines.ctx(normals.iter().map(|v| Subspace::complement_of(m, v)).collect::<Result<Vec<_>>>())?;
            let family = lines.ctx(SubspaceFamily::new(m, subspaces))?;
            let hf = HyperplaneFamily { family, normals, weights };
            lines.ctx(hf.validate())?;
            RecipeDoc::Hyperplane(hf)
        }
        other => return Err(lines.err(format!("unknown recipe kind '{}'", other))),
    };
    lines.finish()?;
    Ok(doc)
}

pub fn write_measurements(values: &[f64]) -> String {
    let mut out = format!("SMF 1\ncount {}\n", values.len());
    for v in values {
        out.push_str(&fmt_real(*v));
        out.push('\n');
    }
    out
}

pub fn parse_measurements(text: &str) -> Result<Vec<f64>> {
    let mut lines = Lines::new(text);
    lines.header("SMF")?;
    let n = lines.keyed_usize("count")?;
    let values = (0..n).map(|_| lines.reals(1, "measurement").map(|v| v[0])).collect::<Result<Vec<_>>>()?;
    lines.finish()?;
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalDoc {
    Real(Vector),
    Complex(DVector<Complex64>),
}

pub fn write_signal<T: Scalar>(x: &DVector<T>) -> String {
    let mut out = format!("SVF 1\nfield {}\nambient {}\n", T::FIELD.name(), x.len());
    for &z in x.iter() {
        let (re, im) = z.parts();
        if T::FIELD == Field::Complex {
            out.push_str(&format!("{} {}\n", fmt_real(re), fmt_real(im)));
        } else {
            out.push_str(&format!("{}\n", fmt_real(re)));
        }
    }
    out
}

pub fn parse_signal(text: &str) -> Result<SignalDoc> {
    let mut lines = Lines::new(text);
    lines.header("SVF")?;
    let field = lines.keyed("field")?;
    let m = lines.keyed_usize("ambient")?;
    let doc = match field {
        "real" => {
            let xs = (0..m).map(|_| lines.reals(1, "coordinate").map(|v| v[0])).collect::<Result<Vec<_>>>()?;
            SignalDoc::Real(Vector::from_vec(xs))
        }
        "complex" => {
            let xs = (0..m)
                .map(|_| lines.reals(2, "coordinate").map(|v| Complex64::new(v[0], v[1])))
                .collect::<Result<Vec<_>>>()?;
            SignalDoc::Complex(DVector::from_vec(xs))
        }
        other => return Err(lines.err(format!("unknown field '{}'", other))),
    };
    lines.finish()?;
    Ok(doc)
}

/// Ordered `key value...` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace('\n', " ");
        self.entries.push((key.to_string(), value));
    }

    pub fn push_real(&mut self, key: &str, value: f64) {
        self.push(key, fmt_real(value));
    }

    pub fn push_vector(&mut self, key: &str, v: &Vector) {
        self.push(key, v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(" "));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn vector(&self, key: &str) -> Option<Vector> {
        let xs: Option<Vec<f64>> = self.get(key)?.split_whitespace().map(|t| t.parse().ok()).collect();
        xs.map(Vector::from_vec)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::from("SRP 1\n");
        for (k, v) in &self.entries {
            if v.is_empty() {
                out.push_str(&format!("{}\n", k));
            } else {
                out.push_str(&format!("{} {}\n", k, v));
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report> {
        let mut lines = Lines::new(text);
        lines.header("SRP")?;
        let mut report = Report::new();
        while let Some(w) = lines.next_words() {
            report.entries.push((w[0].to_string(), w[1..].join(" ")));
        }
        Ok(report)
    }
}

//! The F2D text format.
//!
//! ```text
//! F2D <nx> <ny> <x0> <x1> <y0> <y1> <scalar|vector>
//! <one node per line, row-major, ξ₂ rows outer>
//! ```
//!
//! Scalar files carry one value per line, vector files two. `#` starts a
//! comment. Values are written with 17 significant digits so that a
//! read/write cycle reproduces the file byte for byte.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::{Grid2D, ScalarField, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl AnyField {
    pub fn grid(&self) -> &Grid2D {
        match self {
            AnyField::Scalar(f) => &f.grid,
            AnyField::Vector(f) => &f.grid,
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            AnyField::Scalar(f) => Ok(f),
            AnyField::Vector(_) => Err(Error::Format {
                line: 1,
                msg: "expected a scalar field, found a vector field".into(),
            }),
        }
    }

    pub fn into_vector(self) -> Result<VectorField> {
        match self {
            AnyField::Vector(f) => Ok(f),
            AnyField::Scalar(_) => Err(Error::Format {
                line: 1,
                msg: "expected a vector field, found a scalar field".into(),
            }),
        }
    }
}

impl From<ScalarField> for AnyField {
    fn from(f: ScalarField) -> Self {
        AnyField::Scalar(f)
    }
}

impl From<VectorField> for AnyField {
    fn from(f: VectorField) -> Self {
        AnyField::Vector(f)
    }
}

#[inline]
fn fmt_real(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String cannot fail");
}

/// Serialize a field to F2D text.
pub fn to_f2d_string(field: &AnyField) -> String {
    let g = field.grid();
    let kind = match field {
        AnyField::Scalar(_) => "scalar",
        AnyField::Vector(_) => "vector",
    };
    let mut out = String::with_capacity(26 * g.len() * 2 + 128);
    write!(out, "F2D {} {} ", g.nx, g.ny).unwrap();
    for (n, b) in [g.x0, g.x1, g.y0, g.y1].into_iter().enumerate() {
        if n > 0 {
            out.push(' ');
        }
        fmt_real(&mut out, b);
    }
    writeln!(out, " {kind}").unwrap();
    match field {
        AnyField::Scalar(f) => {
            for &v in &f.values {
                fmt_real(&mut out, v);
                out.push('\n');
            }
        }
        AnyField::Vector(f) => {
            for (&a, &b) in f.u.iter().zip(&f.v) {
                fmt_real(&mut out, a);
                out.push(' ');
                fmt_real(&mut out, b);
                out.push('\n');
            }
        }
    }
    out
}

/// Write a field to any sink.
pub fn write_field_to(field: &AnyField, sink: &mut impl std::io::Write) -> std::io::Result<()> {
    sink.write_all(to_f2d_string(field).as_bytes())
}

/// Write a field to `path` (non-atomic; the CLI wraps this in a temp-file rename).
pub fn write_field(field: &AnyField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(to_f2d_string(field).as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<AnyField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_f2d(&text)
}

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format { line, msg: msg.into() }
}

pub fn parse_f2d(text: &str) -> Result<AnyField> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| format_err(1, "empty file, missing F2D header"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 8 || tok[0] != "F2D" {
        return Err(format_err(
            hline,
            "header must read `F2D <nx> <ny> <x0> <x1> <y0> <y1> <scalar|vector>`",
        ));
    }
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format_err(hline, format!("invalid node count `{s}`")))
    };
    let real = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| format_err(hline, format!("invalid bound `{s}`")))
    };
    let (nx, ny) = (count(tok[1])?, count(tok[2])?);
    let (x0, x1, y0, y1) = (real(tok[3])?, real(tok[4])?, real(tok[5])?, real(tok[6])?);
    let kind = match tok[7] {
        "scalar" => FieldKind::Scalar,
        "vector" => FieldKind::Vector,
        other => return Err(format_err(hline, format!("unknown field kind `{other}`"))),
    };
    let grid = Grid2D::new(x0, x1, y0, y1, nx, ny).map_err(|e| format_err(hline, e.to_string()))?;

    let width = match kind {
        FieldKind::Scalar => 1,
        FieldKind::Vector => 2,
    };
    let mut cols: [Vec<f64>; 2] = [Vec::with_capacity(grid.len()), Vec::new()];
    if width == 2 {
        cols[1].reserve(grid.len());
    }
    let mut rows = 0usize;
    for (n, l) in lines {
        let vals: Vec<&str> = l.split_whitespace().collect();
        if vals.len() != width {
            return Err(format_err(
                n,
                format!("expected {width} value(s) per line, found {}", vals.len()),
            ));
        }
        for (c, s) in vals.iter().enumerate() {
            let v = s
                .parse::<f64>()
                .map_err(|_| format_err(n, format!("invalid number `{s}`")))?;
            cols[c].push(v);
        }
        rows += 1;
    }
    if rows != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "header declares {nx}x{ny} = {} nodes but the file has {rows}",
            grid.len()
        )));
    }
    let [u, v] = cols;
    Ok(match kind {
        FieldKind::Scalar => AnyField::Scalar(ScalarField { grid, values: u }),
        FieldKind::Vector => AnyField::Vector(VectorField { grid, u, v }),
    })
}

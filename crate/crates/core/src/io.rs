//! JSON input files and deterministic report output.
//!
//! Floats in reports are written with 17 significant digits; non-finite values become `null`.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::fock::OperatorTuple;
use crate::linalg::C64;
use crate::poly::FreePolynomial;
use crate::variety::{ConstraintSet, ConstraintSpec};
use crate::words::Word;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema { path: origin.to_string(), message: e.to_string() })
}

pub fn load_poly(path: &Path) -> Result<FreePolynomial> {
    read_json(path)
}

pub fn load_tuple(path: &Path) -> Result<OperatorTuple> {
    read_json(path)
}

pub fn load_constraints(path: &Path) -> Result<ConstraintSet> {
    let spec: ConstraintSpec = read_json(path)?;
    ConstraintSet::from_spec(&spec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsFile {
    pub points: Vec<Vec<[f64; 2]>>,
}

impl PointsFile {
    pub fn to_points(&self) -> Result<Vec<Vec<C64>>> {
        self.points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if p.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!("points[{k}]: non-finite coordinate")));
                }
                Ok(p.iter().map(|z| C64::new(z[0], z[1])).collect())
            })
            .collect()
    }
}

pub fn load_points(path: &Path) -> Result<Vec<Vec<C64>>> {
    read_json::<PointsFile>(path)?.to_points()
}

/// One term `c W_alpha W_beta^*` of a Berezin symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolTerm {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub coeff: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolFile {
    pub n: usize,
    pub terms: Vec<SymbolTerm>,
}

impl SymbolFile {
    pub fn to_terms(&self) -> Result<Vec<(Word, Word, C64)>> {
        self.terms
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let left = Word::checked(t.left.clone(), self.n)
                    .map_err(|e| Error::InvalidInput(format!("terms[{k}].left: {e}")))?;
                let right = Word::checked(t.right.clone(), self.n)
                    .map_err(|e| Error::InvalidInput(format!("terms[{k}].right: {e}")))?;
                if !t.coeff.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput(format!("terms[{k}].coeff: non-finite")));
                }
                Ok((left, right, C64::new(t.coeff[0], t.coeff[1])))
            })
            .collect()
    }
}

pub fn load_symbol(path: &Path) -> Result<Vec<(Word, Word, C64)>> {
    read_json::<SymbolFile>(path)?.to_terms()
}

/// `%.17g`-style rendering.
pub fn format_f64(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    if v == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, v);
        let trimmed = if fixed.contains('.') { fixed.trim_end_matches('0').trim_end_matches('.') } else { &fixed };
        if trimmed.contains('.') {
            trimmed.to_string()
        } else {
            format!("{trimmed}.0")
        }
    } else {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        let m = if m.contains('.') { m.to_string() } else { format!("{m}.0") };
        format!("{m}e{exp}")
    }
}

/// Pretty JSON with 17-significant-digit floats.
struct ReportFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for ReportFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_report_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = ReportFormatter { inner: PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_report<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_report_json(value)?;
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

//! Deterministic text serialization: grid CSV with a JSON sidecar,
//! deficit-field CSV, and JSON emission with 17 significant digits so
//! reruns are byte-identical.

use crate::error::{LabError, Result};
use crate::grid::{Axis, Extension, GridFunction, RangeTag};
use crate::lab::{DeficitField, DeficitRecord};
use serde::Serialize;
use std::io::Write as _;

/// Shortest-round-trip scientific form, pinned at 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t
            .parse::<f64>()
            .map_err(|e| LabError::Config(format!("bad float {t:?}: {e}"))),
    }
}

/// JSON serializer whose floats always use 17 significant digits.
struct SigDigits;

impl serde_json::ser::Formatter for SigDigits {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes with pinned float formatting; non-finite floats become
/// `null` as in standard JSON.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serializer emits UTF-8"))
}

/// Grid CSV: header `x1[,x2[,x3]],value`, rows in row-major order with
/// the last axis fastest.
pub fn grid_to_csv(f: &GridFunction) -> String {
    let n = f.dim();
    let mut s = String::new();
    for k in 0..n {
        s.push_str(&format!("x{},", k + 1));
    }
    s.push_str("value\n");
    let mut idx = vec![0usize; n];
    for &v in &f.values {
        for (k, &i) in idx.iter().enumerate() {
            s.push_str(&fmt_f64(f.axes[k].coord(i)));
            s.push(',');
        }
        s.push_str(&fmt_f64(v));
        s.push('\n');
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < f.axes[k].count {
                break;
            }
            idx[k] = 0;
        }
    }
    s
}

/// Sidecar metadata stored next to a grid CSV.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    pub axes: Vec<Axis>,
    pub range: RangeTag,
    pub extension: Extension,
}

impl GridSidecar {
    pub fn of(f: &GridFunction) -> Self {
        GridSidecar {
            axes: f.axes.clone(),
            range: f.range,
            extension: f.extension,
        }
    }
}

/// Parses a grid CSV against its sidecar; validates the coordinate lattice
/// and value count.
pub fn grid_from_csv(csv: &str, sidecar: &GridSidecar) -> Result<GridFunction> {
    let n = sidecar.axes.len();
    if !(1..=3).contains(&n) {
        return Err(LabError::Config("sidecar must declare 1-3 axes".into()));
    }
    for ax in &sidecar.axes {
        if !(ax.spacing > 0.0) || ax.count < 2 || !ax.origin.is_finite() {
            return Err(LabError::Config("malformed axis in sidecar".into()));
        }
    }
    let expected: usize = sidecar
        .axes
        .iter()
        .try_fold(1usize, |acc, ax| acc.checked_mul(ax.count))
        .ok_or_else(|| LabError::Resource("grid size overflows".into()))?;
    if expected > 5_000_000 {
        return Err(LabError::Resource("grid larger than 5e6 cells".into()));
    }
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::Config("empty grid CSV".into()))?;
    let mut want = String::new();
    for k in 0..n {
        want.push_str(&format!("x{},", k + 1));
    }
    want.push_str("value");
    if header.trim() != want {
        return Err(LabError::Config(format!(
            "grid CSV header {header:?} does not match {want:?}"
        )));
    }
    let mut values = Vec::with_capacity(expected);
    let mut idx = vec![0usize; n];
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != n + 1 {
            return Err(LabError::Config(format!(
                "line {}: expected {} columns",
                lineno + 2,
                n + 1
            )));
        }
        if values.len() >= expected {
            return Err(LabError::Config("too many grid rows".into()));
        }
        for (k, c) in cols[..n].iter().enumerate() {
            let x = parse_f64(c)?;
            let want = sidecar.axes[k].coord(idx[k]);
            if (x - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(LabError::Config(format!(
                    "line {}: coordinate {x} off-lattice (expected {want})",
                    lineno + 2
                )));
            }
        }
        let v = parse_f64(cols[n])?;
        if !v.is_finite() {
            return Err(LabError::Config(format!(
                "line {}: non-finite grid value",
                lineno + 2
            )));
        }
        if sidecar.range == RangeTag::Probability && !(0.0..=1.0).contains(&v) {
            return Err(LabError::Config(format!(
                "line {}: probability value {v} outside [0, 1]",
                lineno + 2
            )));
        }
        values.push(v);
        for k in (0..n).rev() {
            idx[k] += 1;
            if idx[k] < sidecar.axes[k].count {
                break;
            }
            idx[k] = 0;
        }
    }
    if values.len() != expected {
        return Err(LabError::Config(format!(
            "grid CSV has {} values, lattice needs {expected}",
            values.len()
        )));
    }
    Ok(GridFunction {
        axes: sidecar.axes.clone(),
        values,
        range: sidecar.range,
        extension: sidecar.extension,
    })
}

/// Deficit-field CSV: `t,x1[,..],C,out_of_grid`.
pub fn deficit_field_to_csv(field: &DeficitField) -> String {
    let n = field
        .records
        .first()
        .map_or(1, |r| r.x.len());
    let mut s = String::from("t,");
    for k in 0..n {
        s.push_str(&format!("x{},", k + 1));
    }
    s.push_str("C,out_of_grid\n");
    for r in &field.records {
        s.push_str(&fmt_f64(r.t));
        s.push(',');
        for v in &r.x {
            s.push_str(&fmt_f64(*v));
            s.push(',');
        }
        s.push_str(&fmt_f64(r.c));
        s.push(',');
        s.push_str(if r.out_of_grid { "1" } else { "0" });
        s.push('\n');
    }
    s
}

pub fn deficit_field_from_csv(csv: &str) -> Result<DeficitField> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::Config("empty deficit CSV".into()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < 4
        || cols[0] != "t"
        || cols[cols.len() - 2] != "C"
        || cols[cols.len() - 1] != "out_of_grid"
    {
        return Err(LabError::Config("bad deficit CSV header".into()));
    }
    let n = cols.len() - 3;
    if n > 3 {
        return Err(LabError::Config("more than 3 spatial columns".into()));
    }
    let mut records = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != n + 3 {
            return Err(LabError::Config(format!(
                "line {}: expected {} columns",
                lineno + 2,
                n + 3
            )));
        }
        if records.len() >= 5_000_000 {
            return Err(LabError::Resource("deficit CSV too large".into()));
        }
        let t = parse_f64(parts[0])?;
        let x = parts[1..=n]
            .iter()
            .map(|p| parse_f64(p))
            .collect::<Result<Vec<f64>>>()?;
        let c = parse_f64(parts[n + 1])?;
        let out_of_grid = match parts[n + 2].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(LabError::Config(format!(
                    "line {}: bad out_of_grid flag {other:?}",
                    lineno + 2
                )))
            }
        };
        records.push(DeficitRecord { t, x, c, out_of_grid });
    }
    Ok(DeficitField { records })
}

/// Writes `content` atomically-ish (truncate + write + flush).
pub fn write_text(path: &std::path::Path, content: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    f.flush()?;
    Ok(())
}

//! Matrix export: the `qsu2-matrices/1` JSON document and per-matrix CSV.
//! Numbers are written with 17 significant digits and parsed with correct
//! rounding, so a write/read cycle reproduces every bit.

use std::path::{Path, PathBuf};

use qsu2_core::casimir::Pipeline;
use qsu2_core::RealMatrix;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::{CliError, CliResult};

pub const SCHEMA: &str = "qsu2-matrices/1";

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn ser_num<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return Err(serde::ser::Error::custom("non-finite number"));
    }
    RawValue::from_string(format_number(*x))
        .map_err(serde::ser::Error::custom)?
        .serialize(s)
}

fn ser_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    struct N(f64);
    impl Serialize for N {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_num(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&N(x))?;
    }
    seq.end()
}

fn ser_mat<S: Serializer>(m: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
    struct Row<'a>(&'a [f64]);
    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_vec(self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for row in m {
        seq.serialize_element(&Row(row))?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrices {
    #[serde(serialize_with = "ser_mat")]
    pub s: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_mat")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "K", serialize_with = "ser_mat")]
    pub k: Vec<Vec<f64>>,
    #[serde(rename = "R", serialize_with = "ser_mat")]
    pub big_r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub schema: String,
    pub two_l: u32,
    #[serde(serialize_with = "ser_num")]
    pub t: f64,
    #[serde(serialize_with = "ser_vec")]
    pub alphas: Vec<f64>,
    #[serde(serialize_with = "ser_num")]
    pub casimir: f64,
    pub matrices: Matrices,
}

impl MatrixDoc {
    pub fn from_pipeline(p: &Pipeline) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            two_l: p.pair.spin.two_l(),
            t: p.pair.t(),
            alphas: p
                .pair
                .alphas
                .as_ref()
                .map(|a| a.values().to_vec())
                .unwrap_or_default(),
            casimir: p.casimir,
            matrices: Matrices {
                s: p.pair.s.to_rows(),
                r: p.pair.r.to_rows(),
                k: p.k.to_rows(),
                big_r: p.fixed.r.to_rows(),
            },
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let doc: Self = serde_json::from_str(text)?;
        if doc.schema != SCHEMA {
            return Err(CliError::Input(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    /// The four matrices, validated as square and of the document's size.
    pub fn real_matrices(&self) -> CliResult<[RealMatrix; 4]> {
        let d = self.two_l as usize + 1;
        let m = &self.matrices;
        let conv = |rows: &Vec<Vec<f64>>, name: &str| -> CliResult<RealMatrix> {
            let mat = RealMatrix::from_rows(rows)?;
            if mat.dim() != d {
                return Err(CliError::Input(format!(
                    "matrix {name} has dimension {}, expected {d}",
                    mat.dim()
                )));
            }
            Ok(mat)
        };
        Ok([
            conv(&m.s, "s")?,
            conv(&m.r, "r")?,
            conv(&m.k, "K")?,
            conv(&m.big_r, "R")?,
        ])
    }

    fn named(&self) -> [(&'static str, &Vec<Vec<f64>>); 4] {
        let m = &self.matrices;
        [("s", &m.s), ("r", &m.r), ("K", &m.k), ("R", &m.big_r)]
    }

    /// Writes `<prefix>_<name>.csv` for each matrix; returns the paths.
    pub fn write_csv(&self, prefix: &Path) -> CliResult<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for (name, rows) in self.named() {
            let mut file = prefix.as_os_str().to_owned();
            file.push(format!("_{name}.csv"));
            let path = PathBuf::from(file);
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path)?;
            write_rows(&mut w, rows)?;
            w.flush()?;
            paths.push(path);
        }
        Ok(paths)
    }

    /// All matrices as CSV blocks headed by `# <name>`.
    pub fn csv_text(&self) -> CliResult<String> {
        let mut text = String::new();
        for (name, rows) in self.named() {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            write_rows(&mut w, rows)?;
            let bytes = w
                .into_inner()
                .map_err(|e| CliError::Input(e.to_string()))?;
            text.push_str(&format!("# {name}\n"));
            text.push_str(&String::from_utf8_lossy(&bytes));
        }
        Ok(text)
    }
}

fn write_rows<W: std::io::Write>(w: &mut csv::Writer<W>, rows: &[Vec<f64>]) -> CliResult<()> {
    for row in rows {
        w.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    Ok(())
}

/// Reads a headerless CSV matrix written by [`MatrixDoc::write_csv`].
pub fn read_csv_matrix(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| CliError::Input(format!("bad number {f:?} in {}", path.display())))
                })
                .collect::<CliResult<Vec<f64>>>()?,
        );
    }
    Ok(rows)
}

//! JSON and CSV files for representations, models, classifiers and curves.
//!
//! A representation file lists rotations in reference inner-edge order as
//! row-major 3×3 matrices and stretches in triangle order as `(a, b, c)` for
//! `[[a, b], [b, c]]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{FcmError, Result};
use crate::eval::{ClassifierModel, CvResult, MetricsReport};
use crate::lie::{Mat2, Mat3, Vec3};
use crate::reference::ReferencePrecomp;
use crate::representation::{DistanceParams, HistogramBin, ShapeRep, TangentMetric, TangentRep};
use crate::statistics::PgaModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepFile {
    pub reference_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub rotations: Vec<[f64; 9]>,
    pub stretches: Vec<[f64; 3]>,
}

fn sym_triple(u: &Mat2) -> [f64; 3] {
    [u[(0, 0)], 0.5 * (u[(0, 1)] + u[(1, 0)]), u[(1, 1)]]
}

fn from_triple(s: &[f64; 3]) -> Mat2 {
    Mat2::new(s[0], s[1], s[1], s[2])
}

impl RepFile {
    pub fn from_rep(rep: &ShapeRep, omega: Option<f64>) -> Self {
        RepFile {
            reference_hash: rep.reference_id.clone(),
            omega,
            rotations: rep
                .rotations
                .iter()
                .map(|r| {
                    let mut a = [0.0; 9];
                    for (k, v) in a.iter_mut().enumerate() {
                        *v = r[(k / 3, k % 3)];
                    }
                    a
                })
                .collect(),
            stretches: rep.stretches.iter().map(sym_triple).collect(),
        }
    }

    pub fn to_rep(&self) -> Result<ShapeRep> {
        let finite = self.rotations.iter().flatten().chain(self.stretches.iter().flatten()).all(|x| x.is_finite());
        if !finite {
            return Err(FcmError::InvalidArgument("representation contains non-finite values".into()));
        }
        Ok(ShapeRep {
            rotations: self.rotations.iter().map(|a| Mat3::from_row_slice(a)).collect(),
            stretches: self.stretches.iter().map(from_triple).collect(),
            reference_id: self.reference_hash.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentFile {
    pub rotations: Vec<[f64; 3]>,
    pub stretches: Vec<[f64; 3]>,
}

impl TangentFile {
    fn from_tangent(v: &TangentRep) -> Self {
        TangentFile {
            rotations: v.rot.iter().map(|r| [r.x, r.y, r.z]).collect(),
            stretches: v.stretch.iter().map(sym_triple).collect(),
        }
    }

    fn to_tangent(&self, base_id: &str) -> TangentRep {
        TangentRep {
            rot: self.rotations.iter().map(|r| Vec3::new(r[0], r[1], r[2])).collect(),
            stretch: self.stretches.iter().map(from_triple).collect(),
            base_id: base_id.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PgaFile {
    pub reference_hash: String,
    pub omega: f64,
    pub sample_count: usize,
    pub variances: Vec<f64>,
    pub mean: RepFile,
    pub modes: Vec<TangentFile>,
}

impl PgaFile {
    pub fn from_model(model: &PgaModel) -> Self {
        PgaFile {
            reference_hash: model.reference_id().to_string(),
            omega: model.params.omega(),
            sample_count: model.sample_count,
            variances: model.variances.clone(),
            mean: RepFile::from_rep(&model.mean, None),
            modes: model.modes.iter().map(TangentFile::from_tangent).collect(),
        }
    }

    pub fn to_model(&self, reference: &ReferencePrecomp) -> Result<PgaModel> {
        let mean = self.mean.to_rep()?;
        mean.ensure_bound(reference)?;
        if self.modes.len() != self.variances.len() {
            return Err(FcmError::InvalidArgument("mode and variance counts differ".into()));
        }
        let base = mean.content_id();
        let modes = self.modes.iter().map(|m| m.to_tangent(&base)).collect::<Vec<_>>();
        if modes
            .iter()
            .any(|m| m.rot.len() != mean.rotations.len() || m.stretch.len() != mean.stretches.len())
        {
            return Err(FcmError::CombinatoricsMismatch("mode size does not match the mean".into()));
        }
        let params = DistanceParams::new(self.omega)?;
        Ok(PgaModel {
            mean,
            modes,
            variances: self.variances.clone(),
            params,
            metric: TangentMetric::new(reference, params),
            sample_count: self.sample_count,
        })
    }
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut s)?;
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn save_rep(path: &Path, rep: &ShapeRep, omega: Option<f64>) -> Result<()> {
    write_json(path, &RepFile::from_rep(rep, omega))
}

pub fn load_rep(path: &Path) -> Result<ShapeRep> {
    read_json::<RepFile>(path)?.to_rep()
}

pub fn save_pga(path: &Path, model: &PgaModel) -> Result<()> {
    write_json(path, &PgaFile::from_model(model))
}

pub fn load_pga(path: &Path, reference: &ReferencePrecomp) -> Result<PgaModel> {
    read_json::<PgaFile>(path)?.to_model(reference)
}

pub fn save_classifier(path: &Path, clf: &ClassifierModel) -> Result<()> {
    write_json(path, clf)
}

pub fn load_classifier(path: &Path) -> Result<ClassifierModel> {
    read_json(path)
}

fn num(x: f64) -> String {
    crate::mesh::fmt_f64(x)
}

/// One row per shape: `shape, mode_1, …, mode_k`.
pub fn write_coefficients<W: Write>(out: W, names: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let k = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["shape".to_string()];
    header.extend((1..=k).map(|p| format!("mode_{p}")));
    w.write_record(&header)?;
    for (name, row) in names.iter().zip(rows) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|&x| num(x)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_coefficients`].
pub fn read_coefficients<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut it = rec.iter();
        names.push(it.next().unwrap_or_default().to_string());
        let row = it
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| FcmError::Parse {
                    line: line + 2,
                    message: format!("{s:?}: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((names, rows))
}

/// `shape,label` rows with labels ±1.
pub fn write_labels<W: Write>(out: W, names: &[String], labels: &[i8]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shape", "label"])?;
    for (n, l) in names.iter().zip(labels) {
        w.write_record([n.clone(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels<R: Read>(input: R) -> Result<(Vec<String>, Vec<i8>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut names = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| FcmError::Parse { line: line + 2, message: m };
        let name = rec.get(0).ok_or_else(|| bad("missing shape column".into()))?;
        let raw = rec.get(1).ok_or_else(|| bad("missing label column".into()))?.trim();
        let label = match raw {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(bad(format!("label must be ±1, got {other:?}"))),
        };
        names.push(name.to_string());
        labels.push(label);
    }
    Ok((names, labels))
}

pub fn write_accuracy_curve<W: Write>(out: W, curve: &[CvResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["share", "mean", "std"])?;
    for c in curve {
        w.write_record([num(c.share), num(c.mean), num(c.std)])?;
    }
    w.flush()?;
    Ok(())
}

/// `modes, compactness, specificity, generalization`; missing entries are empty.
pub fn write_metrics<W: Write>(out: W, report: &MetricsReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["modes", "compactness", "specificity", "generalization"])?;
    let cell = |v: &[f64], i: usize| v.get(i).map(|&x| num(x)).unwrap_or_default();
    for (i, k) in report.modes.iter().enumerate() {
        w.write_record([
            k.to_string(),
            cell(&report.compactness, i),
            cell(&report.specificity, i),
            cell(&report.generalization, i),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(out: W, bins: &[HistogramBin]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lo", "hi", "count"])?;
    for b in bins {
        w.write_record([num(b.lo), num(b.hi), b.count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Opens a CSV output file.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

//! File formats: estimate input (JSON or flat delimited), the bands
//! document, and plot series.
//!
//! Floats are written with 17 significant digits, so every document read
//! back and rewritten is byte-identical.

use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::inference::{AnalysisBundle, BandKind, BandSet, WaldTestResult};
use crate::numkit::SpdMatrix;
use crate::path_model::{ModelSpec, PathEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    pub beta_hat: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl EstimateFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("estimate JSON: {e}")))
    }

    /// First record `β̂`, then `H` records of covariance rows. Commas,
    /// semicolons or whitespace separate fields; `#` starts a comment.
    pub fn from_delimited(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("line {}: cannot parse '{f}' as a number", lineno + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let mut it = rows.into_iter();
        let beta_hat = it.next().ok_or_else(|| Error::Parse("empty estimate file".into()))?;
        Ok(EstimateFile {
            beta_hat,
            cov: it.collect(),
            labels: None,
        })
    }

    /// JSON if the first non-blank character is `{`, otherwise delimited.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_delimited(text)
        }
    }

    pub fn from_estimate(est: &PathEstimate) -> Self {
        let m = est.cov().matrix();
        EstimateFile {
            beta_hat: est.beta_hat().iter().copied().collect(),
            cov: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            labels: None,
        }
    }

    /// Validates shapes, finiteness and positive definiteness.
    pub fn to_estimate(&self) -> Result<PathEstimate> {
        let h = self.beta_hat.len();
        if h == 0 {
            return Err(Error::InvalidInput("beta_hat is empty".into()));
        }
        if let Some(labels) = &self.labels {
            if labels.len() != h {
                return Err(Error::DimensionMismatch {
                    expected: h,
                    actual: labels.len(),
                });
            }
        }
        if let Some(index) = self.beta_hat.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "beta_hat", index });
        }
        let cols = self.cov.first().map_or(0, Vec::len);
        if let Some(bad) = self.cov.iter().find(|r| r.len() != cols) {
            return Err(Error::NotSquare {
                rows: self.cov.len(),
                cols: bad.len(),
            });
        }
        if self.cov.len() != cols {
            return Err(Error::NotSquare {
                rows: self.cov.len(),
                cols,
            });
        }
        if cols != h {
            return Err(Error::DimensionMismatch { expected: h, actual: cols });
        }
        PathEstimate::from_slices(&self.beta_hat, SpdMatrix::from_rows(&self.cov)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRecord {
    pub kind: BandKind,
    pub critical_value: f64,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&BandSet> for BandRecord {
    fn from(b: &BandSet) -> Self {
        BandRecord {
            kind: b.kind,
            critical_value: b.critical_value,
            center: b.center.clone(),
            lower: b.lower.clone(),
            upper: b.upper.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub chosen_model: ModelSpec,
    pub index: usize,
    pub universe_size: usize,
    pub df: f64,
    pub bic_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRecord {
    pub u: f64,
    pub l: f64,
    #[serde(rename = "U_h")]
    pub upper_per_horizon: f64,
    #[serde(rename = "L_h")]
    pub lower_per_horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsFile {
    pub alpha: f64,
    pub seed: u64,
    pub n_draws: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub bands: Vec<BandRecord>,
    pub selection: SelectionRecord,
    pub wald_zero: WaldTestResult,
    pub cumulative: CumulativeRecord,
}

impl BandsFile {
    pub fn from_bundle(bundle: &AnalysisBundle, seed: u64, labels: Option<Vec<String>>) -> Self {
        let sel = &bundle.selection;
        let c = &bundle.cumulative_bounds;
        BandsFile {
            alpha: bundle.pointwise.alpha,
            seed,
            n_draws: bundle.posi_critical.n_draws,
            labels,
            bands: [&bundle.pointwise, &bundle.supt, &bundle.cumulative, &bundle.restricted]
                .into_iter()
                .map(BandRecord::from)
                .collect(),
            selection: SelectionRecord {
                chosen_model: *sel.chosen.spec(),
                index: sel.chosen_index,
                universe_size: sel.criterion_values.len(),
                df: sel.chosen.df(),
                bic_value: sel.criterion_values[sel.chosen_index],
            },
            wald_zero: bundle.wald_zero,
            cumulative: CumulativeRecord {
                u: c.u,
                l: c.l,
                upper_per_horizon: c.per_horizon_upper,
                lower_per_horizon: c.per_horizon_lower,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("bands JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Pretty JSON with every float written as `d.dddddddddddddddde±x`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization of finite values");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// Float in the same 17-significant-digit form as the JSON writer.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Columns `h, center, lower, upper` with `h` counted from 1.
pub fn band_series(band: &BandSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["h", "center", "lower", "upper"]).expect("in-memory write");
    for i in 0..band.horizon() {
        w.write_record([
            (i + 1).to_string(),
            format_float(band.center[i]),
            format_float(band.lower[i]),
            format_float(band.upper[i]),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delimited_and_json_agree() {
        let text = "# beta then cov\n1.0, 2.0\n1.0, 0.5\n0.5; 2.0\n";
        let a = EstimateFile::parse(text).unwrap();
        let b = EstimateFile::parse(r#"{"beta_hat":[1.0,2.0],"cov":[[1.0,0.5],[0.5,2.0]]}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_estimate().unwrap().horizon(), 2);
    }

    #[test]
    fn validation_errors_are_distinct() {
        let mk = |beta: Vec<f64>, cov: Vec<Vec<f64>>| EstimateFile { beta_hat: beta, cov, labels: None }.to_estimate();
        assert!(matches!(mk(vec![1.0, 2.0], vec![vec![1.0, 0.0]]), Err(Error::NotSquare { .. })));
        assert!(matches!(mk(vec![1.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(mk(vec![f64::NAN], vec![vec![1.0]]), Err(Error::NonFinite { .. })));
        assert!(matches!(mk(vec![0.0], vec![vec![f64::INFINITY]]), Err(Error::NonFinite { .. })));
        assert!(matches!(
            mk(vec![0.0, 0.0], vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(EstimateFile::parse("1.0, x\n"), Err(Error::Parse(_))));
        assert!(matches!(EstimateFile::parse("{\"beta_hat\": [1"), Err(Error::Parse(_))));
    }

    #[test]
    fn floats_round_trip_exactly() {
        let values = vec![0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 5e-324, -0.0, 123456789.12345679];
        let s = to_json_string(&values);
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{a}");
        }
        assert_eq!(to_json_string(&back), s);
    }

    #[test]
    fn series_layout() {
        let b = BandSet {
            kind: BandKind::Pointwise,
            critical_value: 1.0,
            alpha: 0.05,
            center: vec![0.0, 1.0],
            lower: vec![-1.0, 0.0],
            upper: vec![1.0, 2.0],
        };
        let s = band_series(&b);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "h,center,lower,upper");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,1.0000000000000000e0,"));
    }
}

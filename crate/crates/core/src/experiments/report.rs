//! Tabular experiment reports with CSV and JSON writers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One metric of one parameter cell.
///
/// `seed` together with `stream_offset..stream_offset + replicas` names the
/// random streams that produced the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(with = "lossless::option")]
    pub theta: Option<f64>,
    pub t: Option<f64>,
    pub metric: String,
    #[serde(with = "lossless")]
    pub value: f64,
    pub std_error: Option<f64>,
    pub replicas: Option<usize>,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
    pub seed: Option<u64>,
    pub stream_offset: Option<u64>,
}

impl MetricRow {
    pub fn new(metric: impl Into<String>, value: f64) -> Self {
        MetricRow {
            n: None,
            theta: None,
            t: None,
            metric: metric.into(),
            value,
            std_error: None,
            replicas: None,
            tolerance: None,
            pass: None,
            seed: None,
            stream_offset: None,
        }
    }

    pub fn cell(mut self, n: usize, theta: f64) -> Self {
        self.n = Some(n);
        self.theta = Some(theta);
        self
    }

    pub fn at(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn std_error(mut self, se: f64) -> Self {
        self.std_error = se.is_finite().then_some(se);
        self
    }

    pub fn streams(mut self, seed: u64, offset: u64, replicas: usize) -> Self {
        self.seed = Some(seed);
        self.stream_offset = Some(offset);
        self.replicas = Some(replicas);
        self
    }

    pub fn check(mut self, tolerance: f64, pass: bool) -> Self {
        self.tolerance = Some(tolerance);
        self.pass = Some(pass);
        self
    }

    pub fn flag(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }
}

/// JSON has no infinities; write them (and NaN) as strings.
mod lossless {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_finite() {
            Repr::Num(v)
        } else {
            Repr::Text(v.to_string())
        }
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => s.parse().map_err(E::custom),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            v.map(to_repr).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(from_repr).transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    /// Full configuration echo, defaults included.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub rows: Vec<MetricRow>,
    pub warnings: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment_id: impl Into<String>, config: serde_json::Value) -> Self {
        ExperimentReport {
            experiment_id: experiment_id.into(),
            config,
            seed: None,
            rows: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Rows whose `pass` flag is `Some(false)`.
    pub fn failures(&self) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    pub fn find(&self, metric: &str, n: Option<usize>, theta: Option<f64>) -> Option<&MetricRow> {
        self.rows.iter().find(|r| {
            r.metric == metric
                && (n.is_none() || r.n == n)
                && (theta.is_none() || r.theta == theta)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::invalid("format", format!("expected csv or json, got `{s}`"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "experiment_id",
    "N",
    "theta",
    "t",
    "metric",
    "value",
    "std_error",
    "replicas",
    "tolerance",
    "pass",
    "seed",
    "stream_offset",
];

/// Writes the report; CSV columns are always [`CSV_COLUMNS`] in that order.
pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    match format {
        ReportFormat::Json => {
            let mut out = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut out, report).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?;
            out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            out.flush().map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            let wrap = |source| Error::Csv {
                path: path.to_path_buf(),
                source,
            };
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            w.write_record(CSV_COLUMNS).map_err(wrap)?;
            for row in &report.rows {
                let opt = |v: Option<String>| v.unwrap_or_default();
                w.write_record([
                    report.experiment_id.clone(),
                    opt(row.n.map(|v| v.to_string())),
                    opt(row.theta.map(|v| v.to_string())),
                    opt(row.t.map(|v| v.to_string())),
                    row.metric.clone(),
                    row.value.to_string(),
                    opt(row.std_error.map(|v| v.to_string())),
                    opt(row.replicas.map(|v| v.to_string())),
                    opt(row.tolerance.map(|v| v.to_string())),
                    opt(row.pass.map(|v| v.to_string())),
                    opt(row.seed.map(|v| v.to_string())),
                    opt(row.stream_offset.map(|v| v.to_string())),
                ])
                .map_err(wrap)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

pub fn read_report_json(path: &Path) -> Result<ExperimentReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads the rows of a CSV report.
pub fn read_report_csv(path: &Path) -> Result<Vec<MetricRow>> {
    let wrap = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |line: usize, column: &str| {
        Error::invalid("report", format!("{}: row {line}: bad `{column}`", path.display()))
    };
    let mut r = csv::Reader::from_path(path).map_err(wrap)?;
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let rec = record.map_err(wrap)?;
        if rec.len() != CSV_COLUMNS.len() {
            return Err(bad(line + 1, "column count"));
        }
        fn field<T: FromStr>(s: &str) -> std::result::Result<Option<T>, ()> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| ())
            }
        }
        let get = |i: usize| &rec[i];
        macro_rules! parse {
            ($i:expr) => {
                field(get($i)).map_err(|_| bad(line + 1, CSV_COLUMNS[$i]))?
            };
        }
        rows.push(MetricRow {
            n: parse!(1),
            theta: parse!(2),
            t: parse!(3),
            metric: get(4).to_string(),
            value: get(5).parse().map_err(|_| bad(line + 1, "value"))?,
            std_error: parse!(6),
            replicas: parse!(7),
            tolerance: parse!(8),
            pass: parse!(9),
            seed: parse!(10),
            stream_offset: parse!(11),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", serde_json::json!({"alpha": 0.2, "N": [25, 50]}));
        r.seed = Some(7);
        r.rows.push(
            MetricRow::new("mean_linf", 0.1 + 0.2)
                .cell(25, 1.0)
                .std_error(1.0 / 3.0)
                .streams(7, 0, 1)
                .check(0.5, true),
        );
        r.rows.push(MetricRow::new("z_max", 3.25).cell(50, 0.5).at(0.1).flag(false));
        r.rows.push(MetricRow::new("z_max", f64::INFINITY).cell(50, f64::INFINITY));
        r
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let report = sample_report();
        emit_report(&report, ReportFormat::Json, &path).unwrap();
        assert_eq!(read_report_json(&path).unwrap(), report);
    }

    #[test]
    fn csv_rows_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let report = sample_report();
        emit_report(&report, ReportFormat::Csv, &path).unwrap();
        assert_eq!(read_report_csv(&path).unwrap(), report.rows);
    }

    #[test]
    fn empty_report_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_report(&ExperimentReport::new("x", serde_json::Value::Null), ReportFormat::Csv, &path)
            .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{}\n", CSV_COLUMNS.join(",")));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_report(
            &sample_report(),
            ReportFormat::Csv,
            Path::new("/nonexistent-dir/r.csv"),
        )
        .unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/r.csv"));
    }
}

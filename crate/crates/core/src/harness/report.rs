//! JSON and CSV output.
//!
//! JSON floats use the shortest representation that parses back to the same
//! value, so emit → parse → emit is byte-identical. Non-finite values, which
//! JSON cannot hold, are written as the strings `"NaN"`, `"inf"` and `"-inf"`.
//! CSV floats carry 17 significant digits.

use std::io::Write;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::anneal::{RunConfig, RunReport, TraceRow};
use crate::error::{AsaError, Result};

use super::bench::BenchSummary;
use super::diag::DiagReport;
use super::fmt_float;
use super::selfopt::{MetaConfig, SelfOptReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = AsaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(AsaError::InvalidConfig(format!(
                "unknown format `{other}`; expected json or csv"
            ))),
        }
    }
}

/// Serde adapter for `f64` fields that may hold non-finite values.
pub mod lossless {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn text(v: f64) -> &'static str {
        if v.is_nan() {
            "NaN"
        } else if v > 0.0 {
            "inf"
        } else {
            "-inf"
        }
    }

    fn parse<E: Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::custom(format!(
                    "expected a number, \"NaN\", \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(text(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse(Repr::deserialize(d)?)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(x) if x.is_finite() => s.serialize_some(x),
                Some(x) => s.serialize_some(text(*x)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            Option::<Repr>::deserialize(d)?.map(parse).transpose()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub problem: String,
    pub parameter_names: Vec<String>,
    pub config: RunConfig,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchDocument {
    pub problem: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub summary: BenchSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfOptDocument {
    pub problem: String,
    pub meta: MetaConfig,
    pub report: SelfOptReport,
}

/// Anything the harness can write out.
pub trait Report: Serialize + DeserializeOwned {
    fn write_csv<W: Write>(&self, out: W) -> Result<()>;
}

fn csv_err(e: csv::Error) -> AsaError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AsaError::Io(io),
        other => AsaError::Report(format!("{other:?}")),
    }
}

/// Best-update trace: one row per improvement, the first being the initial point.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "generated",
        "accepted",
        "best_cost",
        "current_cost",
        "t_accept",
        "max_param_t",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.generated.to_string(),
            r.accepted.to_string(),
            fmt_float(r.best_cost),
            fmt_float(r.current_cost),
            fmt_float(r.t_accept),
            fmt_float(r.max_param_t),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

impl Report for RunDocument {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trace_csv(&self.report.trace, out)
    }
}

impl Report for BenchDocument {
    /// One row per seed.
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["seed", "generated_to_target", "best_cost", "generated", "wall_seconds"])
            .map_err(csv_err)?;
        for r in &self.summary.runs {
            w.write_record([
                r.seed.to_string(),
                r.generated_to_target.map(|g| g.to_string()).unwrap_or_default(),
                fmt_float(r.best_cost),
                r.generated.to_string(),
                r.wall_seconds.map(fmt_float).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Report for SelfOptDocument {
    /// One row per meta-evaluation.
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["evaluation".to_string()];
        header.extend(self.report.fields.iter().map(|f| f.to_string()));
        header.push("meta_cost".into());
        w.write_record(&header).map_err(csv_err)?;
        for (i, row) in self.report.trace.iter().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(row.values.iter().map(|v| fmt_float(*v)));
            rec.push(fmt_float(row.cost));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Report for DiagReport {
    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "t_asa", "t_ba", "t_fa"]).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([fmt_float(r.k), fmt_float(r.t_asa), fmt_float(r.t_ba), fmt_float(r.t_fa)])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| AsaError::Report(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| AsaError::Report(e.to_string()))
}

/// Writes `doc` in the requested format.
pub fn emit_report<R: Report, W: Write>(doc: &R, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            out.write_all(to_json(doc)?.as_bytes())?;
            out.flush()?;
            Ok(())
        }
        ReportFormat::Csv => doc.write_csv(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anneal::run;
    use crate::harness::bench::{bench, BenchOptions};
    use crate::testfns::sphere_problem;

    fn sphere_doc() -> RunDocument {
        let problem = sphere_problem(2);
        let config = RunConfig::default().with_seed(5).with_max_generated(2000);
        let report = run(&problem, &config).unwrap();
        RunDocument {
            problem: "sphere".into(),
            parameter_names: problem.parameters.iter().map(|p| p.name.clone()).collect(),
            config,
            report,
        }
    }

    #[test]
    fn trace_csv_starts_at_initial_evaluation() {
        let mut buf = Vec::new();
        emit_report(&sphere_doc(), ReportFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "generated,accepted,best_cost,current_cost,t_accept,max_param_t"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "1");
        assert_eq!(first[2], "1.2500000000000000e1");
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let doc = sphere_doc();
        let a = to_json(&doc).unwrap();
        let back: RunDocument = from_json(&a).unwrap();
        assert_eq!(back, doc);
        assert_eq!(to_json(&back).unwrap(), a);
    }

    #[test]
    fn non_finite_values_survive_json() {
        #[derive(Debug, PartialEq, Serialize, Deserialize)]
        struct T {
            #[serde(with = "lossless")]
            a: f64,
            #[serde(with = "lossless")]
            b: f64,
            #[serde(with = "lossless::option")]
            c: Option<f64>,
            #[serde(with = "lossless::option")]
            d: Option<f64>,
        }
        let t = T {
            a: f64::INFINITY,
            b: -0.25,
            c: Some(f64::NEG_INFINITY),
            d: None,
        };
        let s = to_json(&t).unwrap();
        let back: T = from_json(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(to_json(&back).unwrap(), s);
        let nan: T = from_json(r#"{"a":"NaN","b":1,"c":null,"d":2.5}"#).unwrap();
        assert!(nan.a.is_nan());
        assert!(from_json::<T>(r#"{"a":"big","b":1,"c":null,"d":null}"#).is_err());
    }

    #[test]
    fn bench_json_aggregates_three_seeds() {
        let config = RunConfig::default().with_max_generated(3000);
        let seeds = vec![0, 1, 2];
        let summary = bench(&sphere_problem(2), &config, &seeds, 0.0, 1e-4, &BenchOptions::default()).unwrap();
        let doc = BenchDocument {
            problem: "sphere".into(),
            config,
            seeds,
            summary,
        };
        let text = to_json(&doc).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["summary"]["runs"].as_array().unwrap().len(), 3);
        assert_eq!(v["summary"]["best_cost"]["count"], 3);
        assert_eq!(to_json(&from_json::<BenchDocument>(&text).unwrap()).unwrap(), text);

        let mut buf = Vec::new();
        emit_report(&doc, ReportFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn unwritable_sink_errors() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("closed"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        assert!(matches!(
            emit_report(&sphere_doc(), ReportFormat::Json, Broken),
            Err(AsaError::Io(_))
        ));
        assert!(emit_report(&sphere_doc(), ReportFormat::Csv, Broken).is_err());
    }
}

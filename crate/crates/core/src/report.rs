//! JSON and CSV emission of variance reports and constant sets.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same double, so the JSON and CSV of a report carry identical values.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dirichlet::ConstantSet;
use crate::error::{Error, Result};
use crate::variance_lab::VarianceReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::InvalidArgument(format!(
                "unknown output format {s:?}"
            ))),
        }
    }
}

pub fn report_json(r: &VarianceReport) -> Value {
    let prediction = r.prediction.as_ref().map(|p| {
        let terms: serde_json::Map<String, Value> = p
            .main_terms
            .iter()
            .map(|t| (t.name.clone(), json!(t.value)))
            .collect();
        json!({
            "formula_id": p.formula_id,
            "main_terms": terms,
            "total": p.total,
        })
    });
    json!({
        "x": r.x,
        "Q": r.q,
        "v_empirical": r.v_empirical,
        "prediction": prediction,
        "u0_residual": r.u0_residual,
        "normalized": r.normalized,
        "formula": r.formula,
    })
}

/// CSV row; `prediction` holds the predicted total.
#[derive(Serialize)]
struct CsvRow<'a> {
    x: u64,
    #[serde(rename = "Q")]
    q: u64,
    v_empirical: f64,
    prediction: Option<f64>,
    u0_residual: Option<f64>,
    normalized: Option<f64>,
    formula: &'a str,
}

pub fn write_reports<W: Write>(
    out: W,
    reports: &[VarianceReport],
    format: OutputFormat,
) -> Result<()> {
    match format {
        OutputFormat::Json => {
            let mut out = out;
            let rows: Vec<Value> = reports.iter().map(report_json).collect();
            let v = if rows.len() == 1 {
                rows[0].clone()
            } else {
                Value::Array(rows)
            };
            serde_json::to_writer_pretty(&mut out, &v)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in reports {
                w.serialize(CsvRow {
                    x: r.x,
                    q: r.q,
                    v_empirical: r.v_empirical,
                    prediction: r.prediction.as_ref().map(|p| p.total),
                    u0_residual: r.u0_residual,
                    normalized: r.normalized,
                    formula: &r.formula,
                })?;
            }
            if reports.is_empty() {
                w.write_record([
                    "x",
                    "Q",
                    "v_empirical",
                    "prediction",
                    "u0_residual",
                    "normalized",
                    "formula",
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub fn constants_json(c: &ConstantSet) -> Value {
    let mut map = serde_json::Map::new();
    for k in c.named() {
        map.insert(
            k.name.clone(),
            json!({"name": k.name, "value": k.value, "error_estimate": k.error_estimate}),
        );
    }
    map.insert(
        "cutoffs".into(),
        json!({"prime_cutoff": c.prime_cutoff, "series_cutoff": c.series_cutoff}),
    );
    map.insert("warnings".into(), json!(c.warnings));
    Value::Object(map)
}

pub fn write_constants<W: Write>(out: W, c: &ConstantSet, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &constants_json(c))?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "name",
                "value",
                "error_estimate",
                "prime_cutoff",
                "series_cutoff",
            ])?;
            for k in c.named() {
                w.serialize((
                    &k.name,
                    k.value,
                    k.error_estimate,
                    c.prime_cutoff,
                    c.series_cutoff,
                ))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::main_terms::{FormulaId, Prediction, Term};

    fn sample() -> VarianceReport {
        let p = Prediction {
            x: 10.0,
            q: 2.0,
            main_terms: vec![Term {
                name: "q_times_sum_r3sq".into(),
                value: 20.0,
            }],
            total: 0.1 + 0.2,
            formula_id: FormulaId::Theorem2,
        };
        VarianceReport {
            x: 10,
            q: 2,
            v_empirical: 16.608_428_233_760_467,
            prediction: None,
            u0_residual: None,
            normalized: None,
            normalize_exponent: 2.0,
            formula: "none".into(),
            per_q_contributions: None,
        }
        .with_prediction(Some(p), 16.0 / 9.0)
    }

    #[test]
    fn json_schema() {
        let v = report_json(&sample());
        for key in [
            "x",
            "Q",
            "v_empirical",
            "prediction",
            "u0_residual",
            "normalized",
            "formula",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["formula"], "theorem2");
        assert_eq!(v["prediction"]["total"].as_f64().unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn csv_and_json_carry_identical_values() {
        let r = sample();
        let mut j = Vec::new();
        write_reports(&mut j, std::slice::from_ref(&r), OutputFormat::Json).unwrap();
        let mut c = Vec::new();
        write_reports(&mut c, std::slice::from_ref(&r), OutputFormat::Csv).unwrap();
        let jv: Value = serde_json::from_slice(&j).unwrap();
        let mut rdr = csv::Reader::from_reader(c.as_slice());
        let headers = rdr.headers().unwrap().clone();
        let row = rdr.records().next().unwrap().unwrap();
        let get = |name: &str| -> f64 {
            let i = headers.iter().position(|h| h == name).unwrap();
            row[i].parse().unwrap()
        };
        assert_eq!(
            get("v_empirical").to_bits(),
            jv["v_empirical"].as_f64().unwrap().to_bits()
        );
        assert_eq!(
            get("u0_residual").to_bits(),
            jv["u0_residual"].as_f64().unwrap().to_bits()
        );
        assert_eq!(
            get("normalized").to_bits(),
            jv["normalized"].as_f64().unwrap().to_bits()
        );
        assert_eq!(
            get("prediction").to_bits(),
            jv["prediction"]["total"].as_f64().unwrap().to_bits()
        );
    }
}

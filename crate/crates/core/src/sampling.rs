//! Sampling mode: keep the generating density and acceptance probability of
//! every evaluated candidate so the visited points can be reweighted into
//! importance-sampling estimates over the parameter box.
//!
//! The estimator here is self-normalized importance sampling over all
//! generated points with weights `1 / g`, where `g` is the exact (range-truncated)
//! density the candidate was drawn from given the state it was drawn in.
//! Acceptance probabilities are stored too, so other estimators can be built
//! from the same log.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::anneal::Candidate;
use crate::error::{AsaError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub generated_index: u64,
    pub point: Vec<f64>,
    #[serde(with = "crate::harness::report::lossless")]
    pub cost: f64,
    /// Generating density in parameter coordinates.
    #[serde(with = "crate::harness::report::lossless")]
    pub g: f64,
    /// In-range mass of the untruncated step density (`g · range_mass` is the untruncated density).
    #[serde(with = "crate::harness::report::lossless")]
    pub range_mass: f64,
    pub p_accept: f64,
    pub accepted: bool,
}

/// Builds the record for an evaluated candidate from the values the engine used.
pub fn record_sample(generated_index: u64, candidate: &Candidate, p_accept: f64, accepted: bool) -> SampleRecord {
    SampleRecord {
        generated_index,
        point: candidate.point.clone(),
        cost: candidate.cost,
        g: candidate.density.unwrap_or(f64::NAN),
        range_mass: candidate.range_mass.unwrap_or(f64::NAN),
        p_accept,
        accepted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub effective_sample_size: f64,
}

/// Self-normalized importance estimate of `E[observable]` under the uniform measure on the box.
pub fn estimate_expectation<F>(records: &[SampleRecord], observable: F) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64,
{
    estimate_with(records, |r| observable(&r.point))
}

/// As [`estimate_expectation`], with an observable that may read any field of the record (such as its cost).
pub fn estimate_with<F>(records: &[SampleRecord], observable: F) -> Result<Estimate>
where
    F: Fn(&SampleRecord) -> f64,
{
    if records.len() < 2 {
        return Err(AsaError::Sampling(format!(
            "need at least 2 records, got {}",
            records.len()
        )));
    }
    let mut weights = Vec::with_capacity(records.len());
    let mut values = Vec::with_capacity(records.len());
    for r in records {
        if !(r.g.is_finite() && r.g > 0.0) {
            return Err(AsaError::Sampling(format!(
                "record {} has non-positive density {}",
                r.generated_index, r.g
            )));
        }
        weights.push(1.0 / r.g);
        values.push(observable(r));
    }
    let w_sum: f64 = weights.iter().sum();
    if !(w_sum > 0.0 && w_sum.is_finite()) {
        return Err(AsaError::Sampling("weights sum to zero".into()));
    }
    // Shift by the first value so a constant observable is reproduced exactly.
    let anchor = values[0];
    let shift: f64 = weights.iter().zip(&values).map(|(w, f)| w * (f - anchor)).sum::<f64>() / w_sum;
    let value = anchor + shift;
    let w2_sum: f64 = weights.iter().map(|w| w * w).sum();
    let ess = w_sum * w_sum / w2_sum;
    let var = weights
        .iter()
        .zip(&values)
        .map(|(w, f)| w * (f - value) * (f - value))
        .sum::<f64>()
        / w_sum;
    Ok(Estimate {
        value,
        std_error: (var / ess).sqrt(),
        effective_sample_size: ess,
    })
}

/// Writes the log as CSV: `generated_index, <parameter names…>, cost, g, p_accept, accepted`.
pub fn write_samples_csv<W: Write>(records: &[SampleRecord], names: &[String], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["generated_index".to_string()];
    header.extend(names.iter().cloned());
    header.extend(["cost", "g", "p_accept", "accepted"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.generated_index.to_string()];
        row.extend(r.point.iter().map(|x| crate::harness::fmt_float(*x)));
        row.push(crate::harness::fmt_float(r.cost));
        row.push(crate::harness::fmt_float(r.g));
        row.push(crate::harness::fmt_float(r.p_accept));
        row.push(r.accepted.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> AsaError {
    AsaError::Report(e.to_string())
}

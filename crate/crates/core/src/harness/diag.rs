//! Schedule tables and generating-probability partial sums.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::schedules::{
    asa_temperature, proof_sum_diagnostic, AnnealIndex, ProofFamily, ScheduleParams, TEMPERATURE_FLOOR,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub k: f64,
    pub t_asa: f64,
    /// Logarithmic schedule with its index shifted so that `k = 0` gives `T0`: `T0 / ln(k + e)`.
    pub t_ba: f64,
    /// Reciprocal schedule shifted the same way: `T0 / (k + 1)`.
    pub t_fa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofSumRow {
    pub family: String,
    pub horizon: u64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub params: ScheduleParams,
    /// The schedule constant `c`.
    pub scale: f64,
    pub rows: Vec<DiagRow>,
    pub proof_sums: Vec<ProofSumRow>,
}

/// Indices `0, 1, 10, 100, …` up to `10^decades`.
pub fn decade_indices(decades: u32) -> Vec<f64> {
    std::iter::once(0.0)
        .chain((0..=decades).map(|e| 10f64.powi(e as i32)))
        .collect()
}

/// Temperatures of the three schedules at each index, and partial sums of
/// `1/k` and `1/k^Q` at each horizon.
pub fn schedule_diagnostics(params: &ScheduleParams, ks: &[f64], horizons: &[u64]) -> Result<DiagReport> {
    params.validate()?;
    let rows = ks
        .iter()
        .map(|&k| {
            let t_asa = asa_temperature(AnnealIndex::new(k)?, params);
            Ok(DiagRow {
                k,
                t_asa,
                t_ba: (params.t0 / (k + std::f64::consts::E).ln()).max(TEMPERATURE_FLOOR),
                t_fa: (params.t0 / (k + 1.0)).max(TEMPERATURE_FLOOR),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut families = vec![
        ("ba-log".to_string(), ProofFamily::BaLog),
        ("fa-reciprocal".into(), ProofFamily::FaReciprocal),
    ];
    if params.quench == 1.0 {
        families.push(("asa".into(), ProofFamily::Asa));
    } else {
        families.push((
            format!("asa-quench-{}", params.quench),
            ProofFamily::AsaQuenched(params.quench),
        ));
    }
    let mut proof_sums = Vec::new();
    for (name, family) in &families {
        for &h in horizons {
            proof_sums.push(ProofSumRow {
                family: name.clone(),
                horizon: h,
                sum: proof_sum_diagnostic(*family, h)?,
            });
        }
    }
    Ok(DiagReport {
        params: *params,
        scale: params.scale(),
        rows,
        proof_sums,
    })
}

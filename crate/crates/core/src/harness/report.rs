//! Report and pair-table serialization.
//!
//! The pair table is CSV with the fixed column set
//! `pair_id,d_base,dist_subspace,i_index,x_id,y_id`; floats print through
//! the shortest-roundtrip formatter, so identical runs produce byte-identical
//! files. The report is a structured document with fields `spectrum`,
//! `block_summary`, `fit`, `prediction`, `verdict`, and `versions`.

use std::io::Write;

use serde::Serialize;

use super::{ExperimentOutcome, HarnessError, PairSample};

pub const PAIR_CSV_HEADER: &str = "pair_id,d_base,dist_subspace,i_index,x_id,y_id";

pub fn write_pair_csv<W: Write>(mut out: W, pairs: &[PairSample]) -> Result<(), HarnessError> {
    writeln!(out, "{PAIR_CSV_HEADER}")?;
    for p in pairs {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.pair_id, p.d_base, p.dist_subspace, p.i_index, p.x_id, p.y_id
        )?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BlockSummarySection {
    pub eps: f64,
    pub chosen_ell: u32,
    pub horizon: usize,
    pub ell_fractions: Vec<(u32, f64)>,
    pub samples_drawn: usize,
    pub samples_passing: usize,
    pub partners_rejected: usize,
    pub passing_fraction: f64,
}

#[derive(Debug, Serialize)]
pub struct PredictionSection {
    pub i_index: usize,
    pub omega_i: f64,
    pub nu: f64,
    pub exponent: f64,
    pub constant: f64,
    pub log_a: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub spectrum: crate::oseledets::Spectrum,
    pub block_summary: BlockSummarySection,
    pub fit: Option<super::HolderFit>,
    pub prediction: Option<PredictionSection>,
    pub comparison: Option<super::TheoremComparison>,
    pub verdict: String,
    pub versions: Versions,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub schema: u32,
}

pub fn build_report(
    outcome: &ExperimentOutcome,
    eps: f64,
    horizon: usize,
    i_index: usize,
) -> Report {
    let verdict = match &outcome.comparison {
        Some(c) if c.passed => "pass".to_string(),
        Some(c) => format!(
            "fail: slope {} vs predicted {} (pointwise fraction {})",
            c.slope, c.predicted_exponent, c.pointwise_fraction
        ),
        None if outcome.sampled.pairs.is_empty() => "no pairs sampled".to_string(),
        None => "not compared (fewer than 10 usable pairs or trivial spectrum)".to_string(),
    };
    Report {
        spectrum: outcome.spectrum.clone(),
        block_summary: BlockSummarySection {
            eps,
            chosen_ell: outcome.chosen_ell,
            horizon,
            ell_fractions: outcome.ell_fractions.clone(),
            samples_drawn: outcome.sampled.samples_drawn,
            samples_passing: outcome.sampled.samples_passing,
            partners_rejected: outcome.sampled.partners_rejected,
            passing_fraction: outcome.sampled.block_fraction,
        },
        fit: outcome.fit.clone(),
        prediction: outcome.prediction.as_ref().map(|p| PredictionSection {
            i_index,
            omega_i: p.exponent,
            nu: outcome.nu,
            exponent: outcome.nu * p.exponent,
            constant: p.constant,
            log_a: outcome.log_a,
        }),
        comparison: outcome.comparison.clone(),
        verdict,
        versions: Versions { schema: 1 },
    }
}

impl Report {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        serde_json::to_string_pretty(self)
            .map_err(|e| HarnessError::Config(format!("report serialization: {e}")))
    }

    /// Flat `key,value` rendering for the CSV output format.
    pub fn to_flat_csv(&self) -> Result<String, HarnessError> {
        let value = serde_json::to_value(self)
            .map_err(|e| HarnessError::Config(format!("report serialization: {e}")))?;
        let mut rows = Vec::new();
        flatten("", &value, &mut rows);
        let mut out = String::from("key,value\n");
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        Ok(out)
    }
}

fn flatten(prefix: &str, value: &serde_json::Value, rows: &mut Vec<(String, String)>) {
    match value {
        serde_json::Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, rows);
            }
        }
        serde_json::Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_are_pinned() {
        let pairs = vec![PairSample {
            pair_id: 0,
            x_id: 3,
            y_id: 9,
            d_base: 0.001,
            dist_subspace: 0.0005,
            i_index: 1,
        }];
        let mut buf = Vec::new();
        write_pair_csv(&mut buf, &pairs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pair_id,d_base,dist_subspace,i_index,x_id,y_id"
        );
        assert_eq!(lines.next().unwrap(), "0,0.001,0.0005,1,3,9");
    }
}

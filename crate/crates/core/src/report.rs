//! Per-label reliability tables for one or more replication pairs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::irr::{iota, EstimateWarning, ReliabilityEstimate};
use crate::model::{item_stats_by_id, pair_stats, AnnotationTable, LabelId, LabelItemStats};
use crate::similarity::{normalized_kappa_x, rho_xy, DEFAULT_SPLITS};
use crate::xrr::kappa_x;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRow {
    pub label: String,
    pub irr_x: Option<f64>,
    pub irr_y: Option<f64>,
    pub kappa_x: Option<f64>,
    pub normalized_kappa_x: Option<f64>,
    pub rho: Option<f64>,
    /// Items annotated in both replications.
    pub n_items: usize,
    pub n_annotations_x: usize,
    pub n_annotations_y: usize,
    pub warnings: Vec<String>,
}

/// Reliability of every label for one pair of replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicationPairReport {
    pub x: String,
    pub y: String,
    pub rows: Vec<PairRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportOptions {
    /// Restrict to these labels; `None` means every label in the table.
    pub labels: Option<Vec<String>>,
    pub with_rho: bool,
    pub splits: usize,
    pub seed: u64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            labels: None,
            with_rho: false,
            splits: DEFAULT_SPLITS,
            seed: 42,
        }
    }
}

/// IRR of one label within one replication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IrrRow {
    pub label: String,
    pub replication: String,
    pub estimate: Option<ReliabilityEstimate>,
    pub error: Option<String>,
}

pub(crate) fn selected_labels(table: &AnnotationTable, filter: &Option<Vec<String>>) -> Result<Vec<LabelId>> {
    match filter {
        None => Ok((0..table.labels().len() as u32).map(LabelId).collect()),
        Some(names) => {
            let mut ids = names.iter().map(|n| table.label_id(n)).collect::<Result<Vec<_>>>()?;
            ids.sort();
            ids.dedup();
            Ok(ids)
        }
    }
}

/// Iota for every selected label in every replication, sorted by (label, replication).
pub fn irr_table(table: &AnnotationTable, labels: &Option<Vec<String>>) -> Result<Vec<IrrRow>> {
    let ids = selected_labels(table, labels)?;
    let rows = ids
        .par_iter()
        .flat_map_iter(|&label| {
            (0..table.replications().len() as u32).map(move |rep| {
                let rep = crate::model::ReplicationId(rep);
                let stats = item_stats_by_id(table, label, rep);
                let (estimate, error) = match iota(&stats) {
                    Ok(e) => (Some(e), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                IrrRow {
                    label: stats.label,
                    replication: stats.replication,
                    estimate,
                    error,
                }
            })
        })
        .collect();
    Ok(rows)
}

/// Builds one report per requested pair. IRR is computed once per
/// (label, replication) over all of that replication's items.
pub fn build_reports(
    table: &AnnotationTable,
    pairs: &[(String, String)],
    options: &ReportOptions,
) -> Result<Vec<ReplicationPairReport>> {
    let labels = selected_labels(table, &options.labels)?;
    let mut reps = Vec::new();
    for (x, y) in pairs {
        for name in [x, y] {
            let id = table.replication_id(name)?;
            if !reps.contains(&id) {
                reps.push(id);
            }
        }
    }

    let per_label: Vec<Vec<PairRow>> = labels
        .par_iter()
        .map(|&label| {
            let stats: BTreeMap<&str, LabelItemStats> = reps
                .iter()
                .map(|&r| (table.replication_name(r), item_stats_by_id(table, label, r)))
                .collect();
            let irr: BTreeMap<&str, Result<ReliabilityEstimate>> =
                stats.iter().map(|(name, s)| (*name, iota(s))).collect();
            pairs
                .iter()
                .map(|(x, y)| pair_row(&stats[x.as_str()], &stats[y.as_str()], &irr[x.as_str()], &irr[y.as_str()], options))
                .collect()
        })
        .collect();

    Ok(pairs
        .iter()
        .enumerate()
        .map(|(p, (x, y))| ReplicationPairReport {
            x: x.clone(),
            y: y.clone(),
            rows: per_label.iter().map(|rows| rows[p].clone()).collect(),
        })
        .collect())
}

fn pair_row(
    x: &LabelItemStats,
    y: &LabelItemStats,
    irr_x: &Result<ReliabilityEstimate>,
    irr_y: &Result<ReliabilityEstimate>,
    options: &ReportOptions,
) -> PairRow {
    let mut warnings = Vec::new();
    let irr_x_value = irr_x
        .as_ref()
        .map_err(|e| note(&mut warnings, &format!("irr {}", x.replication), e))
        .ok()
        .map(|e| e.value);
    let irr_y_value = irr_y
        .as_ref()
        .map_err(|e| note(&mut warnings, &format!("irr {}", y.replication), e))
        .ok()
        .map(|e| e.value);

    let mut row = PairRow {
        label: x.label.clone(),
        irr_x: irr_x_value,
        irr_y: irr_y_value,
        kappa_x: None,
        normalized_kappa_x: None,
        rho: None,
        n_items: 0,
        n_annotations_x: 0,
        n_annotations_y: 0,
        warnings: Vec::new(),
    };
    let view = match pair_stats(x.clone(), y.clone()) {
        Ok(v) => v,
        Err(e) => {
            note(&mut warnings, "pairing", &e);
            row.warnings = warnings;
            return row;
        }
    };
    row.n_items = view.len();
    row.n_annotations_x = view.total_x();
    row.n_annotations_y = view.total_y();
    match kappa_x(&view) {
        Ok(kx) => {
            row.kappa_x = Some(kx.value);
            if let (Ok(a), Ok(b)) = (irr_x, irr_y) {
                match normalized_kappa_x(&kx, a, b) {
                    Ok(n) => {
                        if n.warnings.contains(&EstimateWarning::AboveOne) {
                            warnings.push("normalized kappa_x above 1".into());
                        }
                        row.normalized_kappa_x = Some(n.value);
                    }
                    Err(e) => note(&mut warnings, "normalized kappa_x", &e),
                }
            }
        }
        Err(e) => note(&mut warnings, "kappa_x", &e),
    }
    if options.with_rho {
        match rho_xy(&view, options.splits, options.seed) {
            Ok(r) => {
                if r.warnings.contains(&EstimateWarning::AboveOne) {
                    warnings.push("rho above 1".into());
                }
                row.rho = Some(r.value);
            }
            Err(e) => warnings.push(format!("rho: {e}")),
        }
    }
    row.warnings = warnings;
    row
}

fn note(warnings: &mut Vec<String>, what: &str, e: &Error) {
    warnings.push(format!("{what}: {e}"));
}

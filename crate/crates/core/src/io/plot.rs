use super::fmt4;
use crate::error::{Error, Result};
use crate::report::ReplicationPairReport;

/// Fixed-width histogram buckets with edges at `k / per_unit` for
/// `k in first_edge..=last_edge`. Buckets are half-open `[lo, hi)`, so a
/// value sitting on an edge goes to the upper bucket. Values outside the
/// range are counted in the first or last bucket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HistogramSpec {
    pub first_edge: i32,
    pub last_edge: i32,
    pub per_unit: u32,
}

impl Default for HistogramSpec {
    /// Width 0.1 over [-0.1, 1.0]: eleven buckets.
    fn default() -> Self {
        Self {
            first_edge: -1,
            last_edge: 10,
            per_unit: 10,
        }
    }
}

impl HistogramSpec {
    pub fn buckets(&self) -> usize {
        (self.last_edge - self.first_edge).max(0) as usize
    }

    pub fn edge(&self, k: i32) -> f64 {
        k as f64 / self.per_unit as f64
    }

    /// Bucket index of `v`; NaN falls in the first bucket.
    pub fn bucket_of(&self, v: f64) -> usize {
        let n = self.buckets() as i64;
        if v.is_nan() || n == 0 {
            return 0;
        }
        let mut k = (v * self.per_unit as f64).floor().clamp(i32::MIN as f64, i32::MAX as f64) as i64;
        // floor(v * per_unit) can be off by one next to an edge.
        while k + 1 <= self.last_edge as i64 && self.edge((k + 1) as i32) <= v {
            k += 1;
        }
        while k >= self.first_edge as i64 && self.edge(k as i32) > v {
            k -= 1;
        }
        (k - self.first_edge as i64).clamp(0, n - 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScatterPoint {
    pub label: String,
    pub pair: String,
    pub normalized: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlotData {
    /// (group, value) pairs, typically (replication, IRR of one label).
    IrrHistogram(Vec<(String, f64)>),
    Scatter(Vec<ScatterPoint>),
}

/// One IRR value per (replication, label), in report order.
pub fn irr_points(reports: &[ReplicationPairReport]) -> Vec<(String, f64)> {
    let mut seen: Vec<(&str, &str)> = Vec::new();
    let mut out = Vec::new();
    for r in reports {
        for row in &r.rows {
            for (rep, value) in [(r.x.as_str(), row.irr_x), (r.y.as_str(), row.irr_y)] {
                if seen.contains(&(rep, row.label.as_str())) {
                    continue;
                }
                seen.push((rep, &row.label));
                if let Some(v) = value {
                    out.push((rep.to_owned(), v));
                }
            }
        }
    }
    out
}

pub fn scatter_points(reports: &[ReplicationPairReport]) -> Vec<ScatterPoint> {
    reports
        .iter()
        .flat_map(|r| {
            r.rows.iter().map(move |row| ScatterPoint {
                label: row.label.clone(),
                pair: format!("{}-{}", r.x, r.y),
                normalized: row.normalized_kappa_x,
                rho: row.rho,
            })
        })
        .collect()
}

/// CSV rows for an IRR histogram (`group,bucket_lower,bucket_upper,count`,
/// every bucket listed, groups in first-appearance order) or a
/// normalized-kappa_x versus rho scatter (`label,pair,normalized_kx,rho`).
pub fn emit_plot_data(data: &PlotData, spec: &HistogramSpec) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    match data {
        PlotData::IrrHistogram(points) => {
            if points.is_empty() || spec.buckets() == 0 {
                return Err(Error::EmptyInput);
            }
            let mut groups: Vec<(&str, Vec<u64>)> = Vec::new();
            for (group, v) in points {
                let at = match groups.iter().position(|(g, _)| g == group) {
                    Some(i) => i,
                    None => {
                        groups.push((group, vec![0; spec.buckets()]));
                        groups.len() - 1
                    }
                };
                groups[at].1[spec.bucket_of(*v)] += 1;
            }
            out.write_record(["group", "bucket_lower", "bucket_upper", "count"])?;
            let decimals = (spec.per_unit as f64).log10().ceil().max(0.0) as usize;
            for (group, counts) in &groups {
                for (b, count) in counts.iter().enumerate() {
                    let k = spec.first_edge + b as i32;
                    out.write_record([
                        group.to_string(),
                        format!("{:.*}", decimals, spec.edge(k)),
                        format!("{:.*}", decimals, spec.edge(k + 1)),
                        count.to_string(),
                    ])?;
                }
            }
        }
        PlotData::Scatter(points) => {
            if points.is_empty() {
                return Err(Error::EmptyInput);
            }
            out.write_record(["label", "pair", "normalized_kx", "rho"])?;
            for p in points {
                out.write_record([
                    p.label.clone(),
                    p.pair.clone(),
                    p.normalized.map(fmt4).unwrap_or_default(),
                    p.rho.map(fmt4).unwrap_or_default(),
                ])?;
            }
        }
    }
    out.into_inner().map_err(|e| Error::Io(e.into_error()))
}

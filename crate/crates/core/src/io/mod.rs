//! Dataset ingestion and report emission.
//!
//! * [`parse_long_csv`] / [`write_long_csv`]: one annotation per row with
//!   columns `replication,item,rater_slot,label,value,scale`.
//! * [`parse_wide_csv`]: configurable wide layouts such as the IRep release,
//!   described by a [`WideSchemaSpec`].
//! * [`write_report`] and [`emit_plot_data`]: deterministic CSV, JSON and
//!   Markdown renderings of reliability results.

mod long;
mod plot;
mod render;
mod wide;

pub use long::{parse_long_csv, parse_long_csv_reader, write_long_csv, LONG_COLUMNS};
pub use plot::{emit_plot_data, irr_points, scatter_points, HistogramSpec, PlotData, ScatterPoint};
pub use render::{write_report, write_table, Cell, ReportFormat};
pub use wide::{parse_wide_csv, parse_wide_csv_reader, SlotLayout, WideLabel, WideSchemaSpec};

/// Fixed four-decimal rendering; never prints `-0.0000`.
pub(crate) fn fmt4(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_owned()
    } else {
        s
    }
}

pub(crate) fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

//! Inter-rater (IRR) and cross-replication (xRR) reliability for annotated
//! datasets.
//!
//! The usual flow: load an [`AnnotationTable`] with [`io::parse_long_csv`] or
//! [`io::parse_wide_csv`], select one label in one replication with
//! [`item_stats`] for [`iota`], or pair two replications with [`pair_views`]
//! for [`kappa_x`], [`normalized_kappa_x`] and [`rho_xy`].
//! [`report::build_reports`] does all of this for every label at once.

pub mod distance;
pub mod error;
pub mod io;
pub mod irr;
pub mod model;
pub mod report;
pub mod resample;
pub mod similarity;
pub mod simulate;
pub mod xrr;

pub use error::{Error, Result};
pub use irr::{cohen_kappa_2x2, iota, ConfidenceInterval, Disagreement, EstimateWarning, MetricKind, ReliabilityEstimate};
pub use model::{
    build_table, item_stats, pair_views, AnnotationTable, AnnotationValue, LabelItemStats, PairedLabelView, RawRecord,
    RawValue, Scale,
};
pub use resample::{bootstrap_ci, bootstrap_distribution, BootstrapConfig, BootstrapInput, BootstrapMetric};
pub use similarity::{normalized_kappa_x, rho_xy};
pub use simulate::{analytic_irr, analytic_kappa_x, generate_pair, AnnotationCount, Pool, SimulationConfig};
pub use xrr::{kappa_x, kappa_x_naive};

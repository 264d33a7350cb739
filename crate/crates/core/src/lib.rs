//! Nonparametric control charts for monitoring streams of neural-network
//! embeddings.
//!
//! Phase I embeddings of correctly classified training data form one
//! reference sample per class. Each Phase II embedding is scored by a data
//! depth (or a benchmark outlier score) against the reference sample of its
//! predicted class, turned into a rank `r`, and charted against a lower
//! control limit: `r ≤ α` for the single-observation chart, or the batch mean
//! `Q ≤ LCL` for the batch chart.
//!
//! Modules:
//! - [`depth`]: Mahalanobis, Simplicial, robust Halfspace and Projection depth.
//! - [`charting`]: rank statistics, control limits and stream monitoring.
//! - [`reference`]: embedding records and Phase I reference construction.
//! - [`metrics`]: FAR, SR, CDR and misclassification-conditional rates.
//! - [`benchmarks`]: LOF, KDEOS, isolation forest, MDis and NOF scorers.
//! - [`simulate`]: the Gaussian toy experiment, a tiny feedforward network,
//!   the beta-ratio generator and the Monte Carlo study.
//! - [`pipeline`]: Phase I/II orchestration shared by the study runner and CLI.

pub mod benchmarks;
pub mod charting;
pub mod depth;
mod error;
pub mod metrics;
pub mod pipeline;
pub mod reference;
pub mod simulate;

pub use error::{Error, ErrorKind, Result};

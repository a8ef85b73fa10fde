//! Innovation peaks in scientific careers.
//!
//! The crate scores every paper of a citation corpus with the disruption (CD)
//! index, assembles long-lived researcher careers, locates each career's most
//! disruptive year and compares it against a date-preserving shuffle of the
//! scores. Effort and productivity around the peak feed standardized
//! least-squares models for peak-year innovation and impact.
//!
//! Modules follow the pipeline order:
//!
//! - [`ingest`]: json-lines and csv-pair corpus readers.
//! - [`graph`]: compressed citation graph and binary snapshot.
//! - [`disruption`]: disruption scores and windowed citation counts.
//! - [`careers`]: careers, cohort filter, peaks, phases, effort metrics.
//! - [`nullmodel`]: score shuffling and null peak distributions.
//! - [`stats`]: Kolmogorov-Smirnov, Mann-Whitney U, mean and standard error.
//! - [`regress`]: regression rows, standardization, OLS via Householder QR.
//! - [`synth`]: synthetic corpora with planted innovation dynamics.
//! - [`pipeline`]: file-based stages with manifests, used by the CLI.

pub mod careers;
pub mod disruption;
pub mod graph;
pub mod ingest;
pub mod nullmodel;
pub mod pipeline;
pub mod regress;
pub mod stats;
pub mod synth;

pub use careers::{Career, CohortFilter, PeakInfo, PeriodMetrics, Publication};
pub use disruption::{DisruptionParams, DisruptionResult};
pub use graph::CitationGraph;
pub use ingest::{CorpusFormat, CorpusStats, PaperRecord};

//! Digital-twin toolkit for predictive maintenance of printed ACME bolts.
//!
//! The crate is organised along the inspection-to-prediction workflow:
//!
//! * [`twin`]: twin-type schemas and an event-sourced store of twin instances
//! * [`geom`]: inspection-cell geometry (containment, sensor visibility, scan deviation)
//! * [`pipeline`]: ingestion and cleaning of tensile-test and dimensional data
//! * [`ml`]: decision tree and random forest classifiers
//! * [`eval`]: confusion matrices and classification reports
//! * [`workflow`]: the end-to-end run that ties the stages together

pub mod eval;
pub mod geom;
pub mod ml;
pub mod pipeline;
pub mod predict;
pub mod twin;
pub mod workflow;

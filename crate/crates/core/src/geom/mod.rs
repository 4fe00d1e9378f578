//! Inspection-cell geometry: part containment in the scan volume, sensor
//! visibility with ray-cast occlusion, and scan-versus-reference deviation.

pub mod bvh;
pub mod deviation;
pub mod inspect;
pub mod intersect;
pub mod io;
pub mod mesh;
mod vector;

use thiserror::Error;

pub use deviation::{scan_deviation, DeviationReport};
pub use inspect::{
    check_containment, load_features, parse_features_csv, rotation_sweep, visibility,
    visibility_with, Constraint, ContainmentReport, FeaturePoint, FeatureStatus,
    FeatureVisibility, InspectionCylinder, OcclusionStrategy, RotationVisibility, ScannerConfig,
    SensorCone, VertexViolation,
};
pub use io::{load_mesh, parse_obj, parse_stl};
pub use mesh::{Aabb, TriangleMesh};
pub use vector::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("scan has no points")]
    EmptyScan,
    #[error("no sensors configured")]
    NoSensors,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("feature `{0}` lies outside the part's bounding box")]
    FeatureOutsideMesh(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(String),
}

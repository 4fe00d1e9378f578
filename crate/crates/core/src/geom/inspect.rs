//! Inspection-cell checks: does the part fit the scan volume, and which
//! critical features can each structured-light sensor actually see?

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bvh::Bvh;
use super::intersect::ray_triangle;
use super::{GeomError, TriangleMesh, Vec3};

/// Offset applied along the feature-to-sensor ray so a feature does not
/// occlude itself.
pub const SELF_HIT_OFFSET_MM: f64 = 1e-4;

/// Features must lie within the mesh bounds grown by this margin.
pub const FEATURE_BOUNDS_MARGIN_MM: f64 = 1.0;

/// Meshes with more triangles than this are queried through a BVH.
pub const BVH_THRESHOLD: usize = 10_000;

/// Scan volume: a cylinder on the +Z axis with its base on `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InspectionCylinder {
    #[serde(rename = "radius_mm")]
    pub radius: f64,
    #[serde(rename = "height_mm")]
    pub height: f64,
}

impl Default for InspectionCylinder {
    /// 200 mm diameter by 100 mm height.
    fn default() -> Self {
        Self {
            radius: 100.0,
            height: 100.0,
        }
    }
}

impl InspectionCylinder {
    pub fn new(radius: f64, height: f64) -> Result<Self, GeomError> {
        if !(radius > 0.0 && radius.is_finite() && height > 0.0 && height.is_finite()) {
            return Err(GeomError::InvalidConfig(format!(
                "cylinder needs positive radius and height, got {radius} x {height}"
            )));
        }
        Ok(Self { radius, height })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Outside the cylinder's radius.
    Radial,
    /// Below the base plane `z = 0`.
    BelowBase,
    /// Above `z = height`.
    AboveTop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexViolation {
    pub index: usize,
    pub position: Vec3,
    pub violated: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentReport {
    pub fully_inside: bool,
    pub violating_vertices: Vec<VertexViolation>,
}

/// Vertex-wise containment. Since the cylinder is convex, all vertices
/// inside implies the whole piecewise-linear surface is inside.
pub fn check_containment(
    mesh: &TriangleMesh,
    cyl: &InspectionCylinder,
) -> Result<ContainmentReport, GeomError> {
    if mesh.is_empty() {
        return Err(GeomError::EmptyMesh);
    }
    let r2 = cyl.radius * cyl.radius;
    let violating_vertices: Vec<_> = mesh
        .vertices()
        .iter()
        .enumerate()
        .filter_map(|(index, &v)| {
            let mut violated = Vec::new();
            if v.x * v.x + v.y * v.y > r2 {
                violated.push(Constraint::Radial);
            }
            if v.z < 0.0 {
                violated.push(Constraint::BelowBase);
            }
            if v.z > cyl.height {
                violated.push(Constraint::AboveTop);
            }
            (!violated.is_empty()).then_some(VertexViolation {
                index,
                position: v,
                violated,
            })
        })
        .collect();
    Ok(ContainmentReport {
        fully_inside: violating_vertices.is_empty(),
        violating_vertices,
    })
}

/// Viewing cone of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorCone {
    apex: Vec3,
    axis: Vec3,
    half_angle: f64,
}

impl SensorCone {
    /// `axis` is normalized here; `half_angle` is in radians and must lie
    /// in `(0, π/2)`.
    pub fn new(apex: Vec3, axis: Vec3, half_angle: f64) -> Result<Self, GeomError> {
        if !apex.is_finite() {
            return Err(GeomError::InvalidConfig("sensor apex is not finite".into()));
        }
        let axis = axis
            .normalized()
            .ok_or_else(|| GeomError::InvalidConfig("sensor axis has zero length".into()))?;
        if !(half_angle > 0.0 && half_angle < FRAC_PI_2) {
            return Err(GeomError::InvalidConfig(format!(
                "sensor half-angle {half_angle} rad outside (0, pi/2)"
            )));
        }
        Ok(Self {
            apex,
            axis,
            half_angle,
        })
    }

    pub fn apex(&self) -> Vec3 {
        self.apex
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    /// Whether `p` lies within the cone (boundary inclusive).
    pub fn contains(&self, p: Vec3) -> bool {
        let d = p - self.apex;
        let len = d.norm();
        if len == 0.0 {
            return false;
        }
        let cos = (d.dot(self.axis) / len).clamp(-1.0, 1.0);
        cos.acos() <= self.half_angle
    }
}

/// A labelled critical feature on the part surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub label: String,
    pub position: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<Vec3>,
}

impl FeaturePoint {
    pub fn new(label: impl Into<String>, position: Vec3) -> Result<Self, GeomError> {
        let label = label.into();
        if label.is_empty() {
            return Err(GeomError::InvalidConfig("feature label is empty".into()));
        }
        Ok(Self {
            label,
            position,
            normal: None,
        })
    }
}

/// Reads `label,x,y,z` rows (optionally followed by `nx,ny,nz`), with a
/// header line.
pub fn parse_features_csv(text: &str) -> Result<Vec<FeaturePoint>, GeomError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| GeomError::Parse(format!("feature row {}: {e}", i + 1)))?;
        if rec.len() != 4 && rec.len() != 7 {
            return Err(GeomError::Parse(format!(
                "feature row {}: expected 4 or 7 fields, got {}",
                i + 1,
                rec.len()
            )));
        }
        let num = |k: usize| {
            rec[k].parse::<f64>().map_err(|e| {
                GeomError::Parse(format!("feature row {} field {}: {e}", i + 1, k + 1))
            })
        };
        let mut f = FeaturePoint::new(&rec[0], Vec3::new(num(1)?, num(2)?, num(3)?))?;
        if rec.len() == 7 {
            let n = Vec3::new(num(4)?, num(5)?, num(6)?);
            f.normal = Some(n.normalized().ok_or_else(|| {
                GeomError::Parse(format!("feature row {}: zero normal", i + 1))
            })?);
        }
        out.push(f);
    }
    Ok(out)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<Vec<FeaturePoint>, GeomError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
    parse_features_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStatus {
    /// Seen by at least one sensor.
    Visible,
    /// Inside at least one cone, but every such line of sight is blocked.
    Shadowed,
    /// Outside every sensor's cone.
    OutOfView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVisibility {
    pub label: String,
    pub visible_to: BTreeSet<usize>,
    pub status: FeatureStatus,
}

/// How occlusion queries are answered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcclusionStrategy {
    /// Brute force below [`BVH_THRESHOLD`] triangles, BVH above.
    Auto,
    BruteForce,
    Bvh,
}

enum Occluder<'a> {
    Brute(&'a TriangleMesh),
    Tree(&'a TriangleMesh, Bvh),
}

impl<'a> Occluder<'a> {
    fn new(mesh: &'a TriangleMesh, strategy: OcclusionStrategy) -> Self {
        let use_bvh = match strategy {
            OcclusionStrategy::Auto => mesh.triangles().len() > BVH_THRESHOLD,
            OcclusionStrategy::BruteForce => false,
            OcclusionStrategy::Bvh => true,
        };
        if use_bvh {
            Occluder::Tree(mesh, Bvh::build(mesh))
        } else {
            Occluder::Brute(mesh)
        }
    }

    /// Is the open segment from `from` to `to` blocked by any triangle?
    fn blocked(&self, from: Vec3, to: Vec3) -> bool {
        let dir = to - from;
        match self {
            Occluder::Brute(mesh) => (0..mesh.triangles().len())
                .any(|t| ray_triangle(from, dir, mesh.triangle(t), 1.0).is_some()),
            Occluder::Tree(mesh, bvh) => bvh.any_hit(mesh, from, dir, 1.0),
        }
    }
}

/// Per-feature sets of sensor indices with a clear, in-cone line of sight.
pub fn visibility(
    mesh: &TriangleMesh,
    features: &[FeaturePoint],
    sensors: &[SensorCone],
) -> Result<Vec<FeatureVisibility>, GeomError> {
    visibility_with(mesh, features, sensors, OcclusionStrategy::Auto)
}

pub fn visibility_with(
    mesh: &TriangleMesh,
    features: &[FeaturePoint],
    sensors: &[SensorCone],
    strategy: OcclusionStrategy,
) -> Result<Vec<FeatureVisibility>, GeomError> {
    if mesh.vertices().is_empty() {
        return Err(GeomError::EmptyMesh);
    }
    if sensors.is_empty() {
        return Err(GeomError::NoSensors);
    }
    let bounds = mesh.bounds().expanded(FEATURE_BOUNDS_MARGIN_MM);
    if let Some(f) = features.iter().find(|f| !bounds.contains(f.position)) {
        return Err(GeomError::FeatureOutsideMesh(f.label.clone()));
    }
    let occluder = Occluder::new(mesh, strategy);
    Ok(features
        .par_iter()
        .map(|f| {
            let mut in_cone = false;
            let visible_to: BTreeSet<usize> = sensors
                .iter()
                .enumerate()
                .filter(|(_, s)| {
                    if !s.contains(f.position) {
                        return false;
                    }
                    in_cone = true;
                    let Some(dir) = (s.apex - f.position).normalized() else {
                        return false;
                    };
                    let origin = f.position + dir * SELF_HIT_OFFSET_MM;
                    !occluder.blocked(origin, s.apex)
                })
                .map(|(i, _)| i)
                .collect();
            let status = if !visible_to.is_empty() {
                FeatureStatus::Visible
            } else if in_cone {
                FeatureStatus::Shadowed
            } else {
                FeatureStatus::OutOfView
            };
            FeatureVisibility {
                label: f.label.clone(),
                visible_to,
                status,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationVisibility {
    pub label: String,
    /// Visible sensor indices at each rotation step.
    pub per_step: Vec<BTreeSet<usize>>,
    pub inspectable: bool,
}

/// Evaluate visibility with the part rotated about +Z in `steps` equal
/// increments, as on a turntable. A feature is inspectable if some sensor
/// sees it at some step.
pub fn rotation_sweep(
    mesh: &TriangleMesh,
    features: &[FeaturePoint],
    sensors: &[SensorCone],
    steps: usize,
) -> Result<Vec<RotationVisibility>, GeomError> {
    if steps == 0 {
        return Err(GeomError::InvalidConfig("rotation_steps must be >= 1".into()));
    }
    let mut out: Vec<RotationVisibility> = features
        .iter()
        .map(|f| RotationVisibility {
            label: f.label.clone(),
            per_step: Vec::with_capacity(steps),
            inspectable: false,
        })
        .collect();
    for k in 0..steps {
        let angle = TAU * k as f64 / steps as f64;
        let rotated_mesh = mesh.rotated_z(angle);
        let rotated: Vec<FeaturePoint> = features
            .iter()
            .map(|f| FeaturePoint {
                label: f.label.clone(),
                position: f.position.rotate_z(angle),
                normal: f.normal.map(|n| n.rotate_z(angle)),
            })
            .collect();
        for (slot, vis) in out
            .iter_mut()
            .zip(visibility(&rotated_mesh, &rotated, sensors)?)
        {
            slot.inspectable |= !vis.visible_to.is_empty();
            slot.per_step.push(vis.visible_to);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SensorSpec {
    apex: Vec3,
    axis: Vec3,
    half_angle_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScannerFile {
    cylinder: InspectionCylinder,
    sensors: Vec<SensorSpec>,
    #[serde(default = "default_rotation_steps")]
    rotation_steps: usize,
}

fn default_rotation_steps() -> usize {
    8
}

/// Scanner cell layout: scan volume, sensor cones, turntable steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ScannerConfig {
    pub cylinder: InspectionCylinder,
    pub sensors: Vec<SensorCone>,
    pub rotation_steps: usize,
}

impl ScannerConfig {
    pub fn from_json(text: &str) -> Result<Self, GeomError> {
        let file: ScannerFile =
            serde_json::from_str(text).map_err(|e| GeomError::Parse(format!("scanner config: {e}")))?;
        let cylinder = InspectionCylinder::new(file.cylinder.radius, file.cylinder.height)?;
        let sensors = file
            .sensors
            .iter()
            .map(|s| SensorCone::new(s.apex, s.axis, s.half_angle_deg.to_radians()))
            .collect::<Result<Vec<_>, _>>()?;
        if file.rotation_steps == 0 {
            return Err(GeomError::InvalidConfig("rotation_steps must be >= 1".into()));
        }
        Ok(Self {
            cylinder,
            sensors,
            rotation_steps: file.rotation_steps,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GeomError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = ScannerFile {
            cylinder: self.cylinder,
            sensors: self
                .sensors
                .iter()
                .map(|s| SensorSpec {
                    apex: s.apex,
                    axis: s.axis,
                    half_angle_deg: s.half_angle.to_degrees(),
                })
                .collect(),
            rotation_steps: self.rotation_steps,
        };
        serde_json::to_string_pretty(&file).expect("scanner config serializes")
    }
}

impl Default for ScannerConfig {
    /// Six cones: a pair above the plate, a pair below it (looking up
    /// through the glass), and two lateral sensors. The poses are
    /// illustrative, not measured from a real cell.
    fn default() -> Self {
        let target = Vec3::new(0.0, 0.0, 50.0);
        let apexes = [
            Vec3::new(-60.0, 0.0, 230.0),
            Vec3::new(60.0, 0.0, 230.0),
            Vec3::new(-60.0, 0.0, -130.0),
            Vec3::new(60.0, 0.0, -130.0),
            Vec3::new(0.0, -260.0, 50.0),
            Vec3::new(0.0, 260.0, 50.0),
        ];
        let sensors = apexes
            .iter()
            .map(|&apex| {
                SensorCone::new(apex, target - apex, 35f64.to_radians()).expect("valid default")
            })
            .collect();
        Self {
            cylinder: InspectionCylinder::default(),
            sensors,
            rotation_steps: default_rotation_steps(),
        }
    }
}

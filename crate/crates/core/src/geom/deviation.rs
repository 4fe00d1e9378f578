use serde::{Deserialize, Serialize};

use super::intersect::closest_point_on_triangle;
use super::{GeomError, TriangleMesh, Vec3};

/// Scan-to-reference comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    /// Signed distance per scan point: positive on the side the nearest
    /// triangle's normal points to.
    pub distances: Vec<f64>,
    pub mean: f64,
    /// Largest absolute distance.
    pub max: f64,
    pub rms: f64,
}

/// Distance from every scan point to the nearest reference triangle.
/// The scan is assumed to be already registered to the reference frame.
pub fn scan_deviation(scan: &[Vec3], reference: &TriangleMesh) -> Result<DeviationReport, GeomError> {
    if scan.is_empty() {
        return Err(GeomError::EmptyScan);
    }
    if reference.is_empty() {
        return Err(GeomError::EmptyMesh);
    }
    let distances: Vec<f64> = scan.iter().map(|&p| signed_distance(p, reference)).collect();
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let max = distances.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let rms = (distances.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    Ok(DeviationReport {
        distances,
        mean,
        max,
        rms,
    })
}

fn signed_distance(p: Vec3, mesh: &TriangleMesh) -> f64 {
    let mut best = (f64::INFINITY, 0usize, p);
    for t in 0..mesh.triangles().len() {
        let q = closest_point_on_triangle(p, mesh.triangle(t));
        let d2 = (p - q).norm_squared();
        if d2 < best.0 {
            best = (d2, t, q);
        }
    }
    let (d2, t, q) = best;
    if d2 == 0.0 {
        return 0.0;
    }
    let d = d2.sqrt();
    if (p - q).dot(mesh.face_normal(t)) < 0.0 {
        -d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::mesh::{axis_box, cylinder};

    #[test]
    fn identity_scan_is_exactly_zero() {
        let m = cylinder(12.7, 90.0, 24, Vec3::new(0.0, 0.0, 2.0));
        let r = scan_deviation(m.vertices(), &m).unwrap();
        assert!(r.distances.iter().all(|&d| d == 0.0));
        assert_eq!((r.mean, r.max, r.rms), (0.0, 0.0, 0.0));
    }

    #[test]
    fn inward_points_are_negative() {
        let m = axis_box(Vec3::ZERO, Vec3::new(10.0, 10.0, 10.0));
        let r = scan_deviation(&[Vec3::new(5.0, 5.0, 9.5), Vec3::new(5.0, 5.0, 10.5)], &m).unwrap();
        assert!((r.distances[0] + 0.5).abs() < 1e-12);
        assert!((r.distances[1] - 0.5).abs() < 1e-12);
        assert!(r.mean.abs() < 1e-12);
        assert!((r.rms - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let m = axis_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        assert!(matches!(scan_deviation(&[], &m), Err(GeomError::EmptyScan)));
        let empty = TriangleMesh::new(vec![], vec![]).unwrap();
        assert!(matches!(
            scan_deviation(&[Vec3::ZERO], &empty),
            Err(GeomError::EmptyMesh)
        ));
    }
}

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::{GeomError, Vec3};

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn union(mut self, other: &Aabb) -> Aabb {
        self.grow(other.min);
        self.grow(other.max);
        self
    }

    pub fn expanded(self, margin: f64) -> Aabb {
        let m = Vec3::new(margin, margin, margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}

/// Indexed triangle mesh in millimetres.
///
/// Construction rejects out-of-range indices, non-finite coordinates and
/// zero-area triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeomError> {
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(GeomError::InvalidMesh(format!("vertex {i} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(GeomError::InvalidMesh(format!(
                    "triangle {t} references vertex {bad} of {}",
                    vertices.len()
                )));
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            if (b - a).cross(c - a).norm_squared() == 0.0 {
                return Err(GeomError::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    /// Like [`TriangleMesh::new`] but silently drops zero-area triangles,
    /// which mesh exporters routinely emit.
    pub fn new_dropping_degenerate(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self, GeomError> {
        let before = triangles.len();
        let kept: Vec<_> = triangles
            .into_iter()
            .filter(|tri| {
                tri.iter().any(|&i| i >= vertices.len()) || {
                    let [a, b, c] = tri.map(|i| vertices[i]);
                    (b - a).cross(c - a).norm_squared() != 0.0
                }
            })
            .collect();
        if kept.len() != before {
            log::debug!("dropped {} degenerate triangles", before - kept.len());
        }
        Self::new(vertices, kept)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty() || self.vertices.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    /// Unit face normal following the right-hand rule on vertex order.
    pub fn face_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(c - a).normalized().expect("non-degenerate")
    }

    /// Area-weighted average of adjacent face normals, per vertex.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::ZERO; self.vertices.len()];
        for tri in &self.triangles {
            let [a, b, c] = tri.map(|i| self.vertices[i]);
            let n = (b - a).cross(c - a);
            for &i in tri {
                acc[i] += n;
            }
        }
        acc.into_iter()
            .map(|n| n.normalized().unwrap_or(Vec3::ZERO))
            .collect()
    }

    pub fn bounds(&self) -> Aabb {
        let mut b = Aabb::empty();
        for &v in &self.vertices {
            b.grow(v);
        }
        b
    }

    pub fn translated(&self, offset: Vec3) -> TriangleMesh {
        self.map_vertices(|v| v + offset)
    }

    pub fn rotated_z(&self, angle: f64) -> TriangleMesh {
        self.map_vertices(|v| v.rotate_z(angle))
    }

    fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Mesh with only the triangles selected by `keep`. Vertices are kept
    /// as-is so indices stay stable.
    pub fn filter_triangles(&self, mut keep: impl FnMut(usize) -> bool) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            triangles: (0..self.triangles.len())
                .filter(|&t| keep(t))
                .map(|t| self.triangles[t])
                .collect(),
        }
    }

    /// Concatenate two meshes.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + offset)));
        TriangleMesh {
            vertices,
            triangles,
        }
    }
}

/// Closed, outward-facing cylinder along +Z, used as a stand-in for the
/// bolt body.
pub fn cylinder(radius: f64, length: f64, segments: usize, base: Vec3) -> TriangleMesh {
    assert!(segments >= 3 && radius > 0.0 && length > 0.0);
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for ring in [0.0, length] {
        for k in 0..segments {
            let a = TAU * k as f64 / segments as f64;
            vertices.push(base + Vec3::new(radius * a.cos(), radius * a.sin(), ring));
        }
    }
    let bottom_center = vertices.len();
    vertices.push(base);
    let top_center = vertices.len();
    vertices.push(base + Vec3::new(0.0, 0.0, length));

    let mut triangles = Vec::with_capacity(4 * segments);
    for k in 0..segments {
        let k1 = (k + 1) % segments;
        let (b0, b1, t0, t1) = (k, k1, k + segments, k1 + segments);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        triangles.push([bottom_center, b1, b0]);
        triangles.push([top_center, t0, t1]);
    }
    TriangleMesh::new(vertices, triangles).expect("valid cylinder")
}

/// Axis-aligned box with outward-facing triangles.
pub fn axis_box(min: Vec3, max: Vec3) -> TriangleMesh {
    let c = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(c).collect();
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriangleMesh::new(vertices, triangles).expect("valid box")
}

/// Flat square in the plane `z = height`, centred on `(cx, cy)`, facing +Z.
pub fn square_plate(cx: f64, cy: f64, height: f64, half_size: f64) -> TriangleMesh {
    let h = half_size;
    let vertices = vec![
        Vec3::new(cx - h, cy - h, height),
        Vec3::new(cx + h, cy - h, height),
        Vec3::new(cx + h, cy + h, height),
        Vec3::new(cx - h, cy + h, height),
    ];
    TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]]).expect("valid plate")
}

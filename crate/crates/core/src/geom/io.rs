//! STL and OBJ readers, plus an ASCII STL writer.
//!
//! STL facets are welded on exact coordinate equality so shared edges
//! reference shared vertices. Zero-area facets are dropped on load.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{GeomError, TriangleMesh, Vec3};

/// Load a mesh, choosing the format from the file extension (`.stl` / `.obj`).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, GeomError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)
        .map_err(|e| GeomError::Io(format!("{}: {e}", path.display())))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("stl") => parse_stl(&bytes),
        Some("obj") => {
            let text = std::str::from_utf8(&bytes)
                .map_err(|_| GeomError::Parse("OBJ file is not UTF-8".into()))?;
            parse_obj(text)
        }
        _ => Err(GeomError::Parse(format!(
            "unsupported mesh format: {}",
            path.display()
        ))),
    }
}

/// Parse ASCII or binary STL.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, GeomError> {
    if looks_binary(bytes) {
        parse_binary_stl(bytes)
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| GeomError::Parse("STL is neither binary nor UTF-8 text".into()))?;
        parse_ascii_stl(text)
    }
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    // Some binary exporters also start their header with "solid", so the
    // size check wins over the keyword.
    bytes.len() == 84 + 50 * n
}

fn parse_binary_stl(bytes: &[u8]) -> Result<TriangleMesh, GeomError> {
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let mut welder = Welder::default();
    for f in 0..n {
        let rec = &bytes[84 + 50 * f..84 + 50 * (f + 1)];
        let read = |o: usize| f32::from_le_bytes(rec[o..o + 4].try_into().unwrap()) as f64;
        // Skip the 12-byte facet normal; winding defines orientation.
        let corners =
            [12, 24, 36].map(|o| Vec3::new(read(o), read(o + 4), read(o + 8)));
        welder.push(corners);
    }
    welder.finish()
}

fn parse_ascii_stl(text: &str) -> Result<TriangleMesh, GeomError> {
    let mut welder = Welder::default();
    let mut corners = Vec::with_capacity(3);
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let coords: Vec<f64> = tokens
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| GeomError::Parse(format!("line {}: {e}", lineno + 1)))?;
                if coords.len() != 3 {
                    return Err(GeomError::Parse(format!(
                        "line {}: vertex needs 3 coordinates",
                        lineno + 1
                    )));
                }
                corners.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("endloop") => {
                if corners.len() != 3 {
                    return Err(GeomError::Parse(format!(
                        "line {}: facet with {} vertices",
                        lineno + 1,
                        corners.len()
                    )));
                }
                welder.push([corners[0], corners[1], corners[2]]);
                corners.clear();
            }
            _ => {}
        }
    }
    if !corners.is_empty() {
        return Err(GeomError::Parse("unterminated facet".into()));
    }
    welder.finish()
}

#[derive(Default)]
struct Welder {
    index: HashMap<[u64; 3], usize>,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl Welder {
    fn push(&mut self, corners: [Vec3; 3]) {
        let tri = corners.map(|p| {
            // +0.0 and -0.0 weld together.
            let key = [p.x, p.y, p.z].map(|c| (c + 0.0).to_bits());
            *self.index.entry(key).or_insert_with(|| {
                self.vertices.push(p);
                self.vertices.len() - 1
            })
        });
        self.triangles.push(tri);
    }

    fn finish(self) -> Result<TriangleMesh, GeomError> {
        TriangleMesh::new_dropping_degenerate(self.vertices, self.triangles)
    }
}

/// Parse Wavefront OBJ. Only `v` and `f` records are used; polygons are
/// fan-triangulated.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, GeomError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let err = |msg: String| GeomError::Parse(format!("line {}: {msg}", lineno + 1));
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(str::parse)
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(format!("{e}")))?;
                if coords.len() != 3 {
                    return Err(err("vertex needs 3 coordinates".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|tok| {
                        let raw: i64 = tok
                            .split('/')
                            .next()
                            .unwrap_or_default()
                            .parse()
                            .map_err(|e| err(format!("bad face index `{tok}`: {e}")))?;
                        let resolved = match raw {
                            0 => return Err(err("face index 0".into())),
                            r if r > 0 => r - 1,
                            r => vertices.len() as i64 + r,
                        };
                        usize::try_from(resolved)
                            .map_err(|_| err(format!("face index {raw} out of range")))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err("face with fewer than 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new_dropping_degenerate(vertices, triangles)
}

/// Render a mesh as ASCII STL.
pub fn to_ascii_stl(mesh: &TriangleMesh, name: &str) -> String {
    let mut out = format!("solid {name}\n");
    for t in 0..mesh.triangles().len() {
        let n = mesh.face_normal(t);
        let _ = writeln!(out, "  facet normal {} {} {}", n.x, n.y, n.z);
        out.push_str("    outer loop\n");
        for v in mesh.triangle(t) {
            let _ = writeln!(out, "      vertex {} {} {}", v.x, v.y, v.z);
        }
        out.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(out, "endsolid {name}");
    out
}

/// Render a mesh as binary STL (coordinates narrowed to `f32`).
pub fn to_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend_from_slice(&(mesh.triangles().len() as u32).to_le_bytes());
    for t in 0..mesh.triangles().len() {
        let n = mesh.face_normal(t);
        for v in std::iter::once(n).chain(mesh.triangle(t)) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

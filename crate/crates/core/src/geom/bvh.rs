//! Bounding-volume hierarchy for occlusion queries on large meshes.

use super::intersect::ray_triangle;
use super::mesh::Aabb;
use super::{TriangleMesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split BVH over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let tri_bounds: Vec<Aabb> = (0..mesh.triangles().len())
            .map(|t| {
                let mut b = Aabb::empty();
                for v in mesh.triangle(t) {
                    b.grow(v);
                }
                b
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::new(),
            order: (0..tri_bounds.len()).collect(),
        };
        if !tri_bounds.is_empty() {
            bvh.build_range(&tri_bounds, 0, tri_bounds.len());
        }
        bvh
    }

    fn build_range(&mut self, tri_bounds: &[Aabb], start: usize, end: usize) -> usize {
        let bounds = self.order[start..end]
            .iter()
            .fold(Aabb::empty(), |acc, &t| acc.union(&tri_bounds[t]));
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        let axis = bounds.extent().max_dimension();
        let centroid = |t: usize| (tri_bounds[t].min[axis] + tri_bounds[t].max[axis]) * 0.5;
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroid(a).total_cmp(&centroid(b)).then(a.cmp(&b))
        });
        // Placeholder, patched once both children exist.
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.build_range(tri_bounds, start, mid);
        let right = self.build_range(tri_bounds, mid, end);
        self.nodes[id] = Node::Inner {
            bounds,
            left,
            right,
        };
        id
    }

    /// True if any triangle is hit with `0 < t < t_max`.
    pub fn any_hit(&self, mesh: &TriangleMesh, origin: Vec3, dir: Vec3, t_max: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !slab_test(node.bounds(), origin, dir, t_max) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    if self.order[start..end]
                        .iter()
                        .any(|&t| ray_triangle(origin, dir, mesh.triangle(t), t_max).is_some())
                    {
                        return true;
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        false
    }
}

// Conservative: boxes are padded slightly so grazing hits are never culled.
fn slab_test(b: &Aabb, origin: Vec3, dir: Vec3, t_max: f64) -> bool {
    let pad = 1e-9 * (1.0 + b.extent().norm());
    let (mut t0, mut t1) = (0.0f64, t_max);
    for i in 0..3 {
        let (lo, hi) = (b.min[i] - pad, b.max[i] + pad);
        if dir[i] == 0.0 {
            if origin[i] < lo || origin[i] > hi {
                return false;
            }
            continue;
        }
        let inv = 1.0 / dir[i];
        let (mut near, mut far) = ((lo - origin[i]) * inv, (hi - origin[i]) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return false;
        }
    }
    true
}

//! Watertight ray–triangle intersection (Woop, Benthin and Wald, 2013).
//!
//! The ray is translated to the origin, its dominant axis permuted to +Z and
//! the triangle sheared so the ray becomes the Z axis. Edge functions are
//! then evaluated in 2D, which guarantees that rays through shared edges and
//! vertices hit exactly one of the adjacent triangles (never zero).

use super::Vec3;

const HALF_EPS: f64 = f64::EPSILON * 0.5;

fn gamma(n: u32) -> f64 {
    let n = n as f64 * HALF_EPS;
    n / (1.0 - n)
}

/// Parametric hit distance `t` such that `origin + t * dir` lies on the
/// triangle, if `0 < t < t_max`. Both faces count.
pub fn ray_triangle(origin: Vec3, dir: Vec3, tri: [Vec3; 3], t_max: f64) -> Option<f64> {
    let kz = dir.abs().max_dimension();
    let kx = (kz + 1) % 3;
    let ky = (kx + 1) % 3;
    let d = dir.permute(kx, ky, kz);
    if d.z == 0.0 {
        return None;
    }
    let [mut p0, mut p1, mut p2] = tri.map(|p| (p - origin).permute(kx, ky, kz));

    let sx = -d.x / d.z;
    let sy = -d.y / d.z;
    let sz = 1.0 / d.z;
    for p in [&mut p0, &mut p1, &mut p2] {
        p.x += sx * p.z;
        p.y += sy * p.z;
    }

    let e0 = p1.x * p2.y - p1.y * p2.x;
    let e1 = p2.x * p0.y - p2.y * p0.x;
    let e2 = p0.x * p1.y - p0.y * p1.x;

    if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) && (e0 > 0.0 || e1 > 0.0 || e2 > 0.0) {
        return None;
    }
    let det = e0 + e1 + e2;
    if det == 0.0 {
        return None;
    }

    p0.z *= sz;
    p1.z *= sz;
    p2.z *= sz;
    let t_scaled = e0 * p0.z + e1 * p1.z + e2 * p2.z;
    if det < 0.0 && (t_scaled >= 0.0 || t_scaled <= t_max * det) {
        return None;
    }
    if det > 0.0 && (t_scaled <= 0.0 || t_scaled >= t_max * det) {
        return None;
    }
    let t = t_scaled / det;

    // Reject hits whose t is within floating-point error of zero.
    let max_z = Vec3::new(p0.z, p1.z, p2.z).abs();
    let max_z = max_z.x.max(max_z.y).max(max_z.z);
    let delta_z = gamma(3) * max_z;
    let max_x = p0.x.abs().max(p1.x.abs()).max(p2.x.abs());
    let max_y = p0.y.abs().max(p1.y.abs()).max(p2.y.abs());
    let delta_x = gamma(5) * (max_x + max_z);
    let delta_y = gamma(5) * (max_y + max_z);
    let delta_e = 2.0 * (gamma(2) * max_x * max_y + delta_y * max_x + delta_x * max_y);
    let max_e = e0.abs().max(e1.abs()).max(e2.abs());
    let delta_t =
        3.0 * (gamma(3) * max_e * max_z + delta_e * max_z + delta_z * max_e) * (1.0 / det).abs();
    if t <= delta_t {
        return None;
    }
    Some(t)
}

/// Closest point on a triangle to `p` (Ericson, *Real-Time Collision
/// Detection*, 5.1.5). Returns vertices exactly when `p` coincides with one.
pub fn closest_point_on_triangle(p: Vec3, [a, b, c]: [Vec3; 3]) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

use std::f64::consts::PI;

use super::mesh::TriMesh;
use super::{Vec3, INSIDE_THRESHOLD};

const LEAF_SIZE: usize = 4;
/// Clusters farther than this many radii are replaced by their dipole term.
const FAR_FIELD_RATIO: f64 = 2.5;
/// Minimum ray parameter accepted as a hit.
pub const RAY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub point: Vec3,
    pub distance: f64,
    /// Face index for meshes, point index for clouds.
    pub face: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub point: Vec3,
    pub face: usize,
    pub t: f64,
}

/// Result of an inside/outside query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingQuery {
    pub winding: f64,
    pub inside: bool,
    /// Non-watertight mesh with a winding number in [0.4, 0.6]; reported as outside.
    pub ambiguous: bool,
}

#[derive(Debug, Clone)]
struct Node {
    lo: Vec3,
    hi: Vec3,
    /// leaf: triangle range in `order`; inner: child node ids
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
    vector_area: Vec3,
    center: Vec3,
    radius: f64,
}

/// Bounding volume hierarchy over the faces of a [`TriMesh`].
#[derive(Debug, Clone)]
pub struct MeshIndex {
    mesh: TriMesh,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl MeshIndex {
    pub fn new(mesh: TriMesh) -> Self {
        let n = mesh.faces().len();
        let mut idx = MeshIndex {
            mesh,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            let centroids: Vec<Vec3> = (0..n)
                .map(|f| {
                    let [a, b, c] = idx.mesh.triangle(f);
                    (a + b + c) / 3.0
                })
                .collect();
            idx.build(0, n, &centroids);
        }
        idx
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Vec3]) -> usize {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        let mut clo = Vec3::repeat(f64::INFINITY);
        let mut chi = Vec3::repeat(f64::NEG_INFINITY);
        let mut vector_area = Vec3::zeros();
        let mut weighted = Vec3::zeros();
        let mut area = 0.0;
        for &f in &self.order[start..end] {
            let [a, b, c] = self.mesh.triangle(f);
            for v in [a, b, c] {
                lo = lo.inf(&v);
                hi = hi.sup(&v);
            }
            clo = clo.inf(&centroids[f]);
            chi = chi.sup(&centroids[f]);
            let n2 = (b - a).cross(&(c - a));
            vector_area += 0.5 * n2;
            let ar = 0.5 * n2.norm();
            weighted += ar * centroids[f];
            area += ar;
        }
        let center = if area > 0.0 {
            weighted / area
        } else {
            (lo + hi) / 2.0
        };
        let mut radius = 0.0f64;
        for &f in &self.order[start..end] {
            for v in self.mesh.triangle(f) {
                radius = radius.max((v - center).norm());
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            children: None,
            vector_area,
            center,
            radius,
        });
        let extent = chi - clo;
        if end - start > LEAF_SIZE && extent.max() > 0.0 {
            let axis = extent.imax();
            let mid = (start + end) / 2;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                centroids[a][axis].total_cmp(&centroids[b][axis])
            });
            let l = self.build(start, mid, centroids);
            let r = self.build(mid, end, centroids);
            self.nodes[id].children = Some((l, r));
        }
        id
    }

    /// Exact closest point on the surface.
    pub fn closest_point(&self, p: &Vec3) -> Option<SurfacePoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = SurfacePoint {
            point: Vec3::zeros(),
            distance: f64::INFINITY,
            face: usize::MAX,
        };
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if aabb_dist2(&node.lo, &node.hi, p) > best_d2 {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    let dl = aabb_dist2(&self.nodes[l].lo, &self.nodes[l].hi, p);
                    let dr = aabb_dist2(&self.nodes[r].lo, &self.nodes[r].hi, p);
                    // nearer child popped first
                    if dl <= dr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for &f in &self.order[node.start..node.end] {
                        let [a, b, c] = self.mesh.triangle(f);
                        let q = closest_on_triangle(p, &a, &b, &c);
                        let d2 = (q - p).norm_squared();
                        if d2 < best_d2 || (d2 == best_d2 && f < best.face) {
                            best_d2 = d2;
                            best = SurfacePoint {
                                point: q,
                                distance: d2.sqrt(),
                                face: f,
                            };
                        }
                    }
                }
            }
        }
        Some(best)
    }

    /// Nearest intersection with `t > RAY_EPSILON`. `dir` need not be normalized here.
    pub fn ray_cast(&self, origin: &Vec3, dir: &Vec3) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let tmax = best.map(|h| h.t).unwrap_or(f64::INFINITY);
            if !ray_hits_aabb(origin, &inv, &node.lo, &node.hi, tmax) {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    for &f in &self.order[node.start..node.end] {
                        let [a, b, c] = self.mesh.triangle(f);
                        if let Some(t) = ray_triangle(origin, dir, &a, &b, &c) {
                            let better = match best {
                                None => true,
                                Some(h) => t < h.t || (t == h.t && f < h.face),
                            };
                            if t > RAY_EPSILON && better {
                                best = Some(RayHit {
                                    point: origin + t * dir,
                                    face: f,
                                    t,
                                });
                            }
                        }
                    }
                }
            }
        }
        best
    }

    /// Generalized winding number, with far clusters approximated by dipoles.
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let r = node.center - p;
            let dist = r.norm();
            if dist > FAR_FIELD_RATIO * node.radius {
                total += node.vector_area.dot(&r) / (dist * dist * dist);
                continue;
            }
            match node.children {
                Some((l, rr)) => {
                    stack.push(l);
                    stack.push(rr);
                }
                None => {
                    for &f in &self.order[node.start..node.end] {
                        let [a, b, c] = self.mesh.triangle(f);
                        total += solid_angle(p, &a, &b, &c);
                    }
                }
            }
        }
        total / (4.0 * PI)
    }

    /// Winding number summed exactly over every face.
    pub fn winding_number_exact(&self, p: &Vec3) -> f64 {
        let sum: f64 = (0..self.mesh.faces().len())
            .map(|f| {
                let [a, b, c] = self.mesh.triangle(f);
                solid_angle(p, &a, &b, &c)
            })
            .sum();
        sum / (4.0 * PI)
    }

    pub fn classify(&self, p: &Vec3) -> WindingQuery {
        // a closed surface has winding number zero outside its bounding box
        if self.mesh.is_watertight() {
            if let Some(root) = self.nodes.first() {
                if (0..3).any(|k| p[k] < root.lo[k] || p[k] > root.hi[k]) {
                    return WindingQuery {
                        winding: 0.0,
                        inside: false,
                        ambiguous: false,
                    };
                }
            }
        }
        let w = self.winding_number(p);
        let ambiguous = !self.mesh.is_watertight() && (0.4..=0.6).contains(&w);
        WindingQuery {
            winding: w,
            inside: w > INSIDE_THRESHOLD && !ambiguous,
            ambiguous,
        }
    }
}

fn aabb_dist2(lo: &Vec3, hi: &Vec3, p: &Vec3) -> f64 {
    let mut d2 = 0.0;
    for k in 0..3 {
        let v = if p[k] < lo[k] {
            lo[k] - p[k]
        } else if p[k] > hi[k] {
            p[k] - hi[k]
        } else {
            0.0
        };
        d2 += v * v;
    }
    d2
}

fn ray_hits_aabb(o: &Vec3, inv: &Vec3, lo: &Vec3, hi: &Vec3, tmax: f64) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = tmax;
    for k in 0..3 {
        let mut a = (lo[k] - o[k]) * inv[k];
        let mut b = (hi[k] - o[k]) * inv[k];
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        // NaN from 0 * inf means the ray lies in the slab plane: keep it
        if !a.is_nan() {
            t0 = t0.max(a);
        }
        if !b.is_nan() {
            t1 = t1.min(b);
        }
        if t0 > t1 * (1.0 + 1e-12) + 1e-12 {
            return false;
        }
    }
    true
}

/// Möller–Trumbore; returns the ray parameter of the hit, if any.
fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = d.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = o - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = d.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qvec) * inv)
}

/// Signed solid angle of triangle (a, b, c) seen from p (Van Oosterom–Strackee).
pub(crate) fn solid_angle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (a, b, c) = (a - p, b - p, c - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let det = a.dot(&b.cross(&c));
    let denom = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * det.atan2(denom)
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
pub(crate) fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + v * ab;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + w * ac;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

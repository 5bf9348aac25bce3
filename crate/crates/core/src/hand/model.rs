use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use super::template::{v3, CapsuleSpec, HandTemplate};
use super::volume::{capsule_sdf, ellipsoid_closest_point};
use super::{rot6d_backward, rot6d_to_matrix, Chirality, HandPose, Part, NUM_DOF, NUM_POSE_PARAMS};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

/// Template plus everything derived from it once: surface samples, their
/// parts and bodies, and the joint chain of every body.
///
/// Body 0 is the wrist (palm); body `j + 1` is the frame of joint `j`.
#[derive(Debug, Clone)]
pub struct HandModel {
    template: HandTemplate,
    local: Vec<Vec3>,
    body: Vec<usize>,
    parts: Vec<Part>,
    fingertip: Vec<bool>,
    rest: Vec<Vec3>,
    chains: Vec<Vec<usize>>,
    rest_rot: Vec<Mat3>,
}

fn rodrigues(axis: &Vec3, angle: f64) -> Mat3 {
    let k = axis.cross_matrix();
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Orthonormal pair perpendicular to `axis`; for axes along ±y the first is −z
/// so that angle zero points to the palmar side.
fn perpendicular_frame(axis: &Vec3) -> (Vec3, Vec3) {
    let u = if axis.z.abs() < 0.9 {
        let t = -Vec3::z();
        (t - axis * axis.dot(&t)).normalize()
    } else {
        let t = Vec3::x();
        (t - axis * axis.dot(&t)).normalize()
    };
    (u, axis.cross(&u))
}

/// Fingertip pad of a distal phalanx: a patch of the distal cap between the
/// palmar side and the tip, given as elevation range from the palmar
/// direction toward the axis and half-width in azimuth.
const PAD_ELEVATION: [f64; 2] = [0.45, 1.15];
const PAD_HALF_AZIMUTH: f64 = 0.5;
const PAD_GRID: usize = 5;

/// Regular grid of (point, normal, is fingertip pad) on a capsule surface.
/// Distal phalanges get a denser pad patch in place of the cap points it covers.
fn sample_capsule(c: &CapsuleSpec) -> Vec<(Vec3, Vec3, bool)> {
    let (a, b) = (v3(c.a), v3(c.b));
    let len = (b - a).norm();
    let axis = if len > 0.0 { (b - a) / len } else { Vec3::y() };
    let (u, w) = perpendicular_frame(&axis);
    let [n_ang, n_len, n_cap] = c.samples;
    let dir = |phi: f64| u * phi.cos() + w * phi.sin();
    let in_pad = |n: &Vec3| {
        let along = n.dot(&axis);
        let radial = n - axis * along;
        let phi = radial.dot(&w).atan2(radial.dot(&u));
        let elev = along.asin();
        c.fingertip
            && elev > PAD_ELEVATION[0] - 0.1
            && elev < PAD_ELEVATION[1] + 0.1
            && phi.abs() < PAD_HALF_AZIMUTH + 0.15
    };
    let mut out = Vec::new();
    for k in 0..n_len {
        let t = (k as f64 + 0.5) / n_len as f64;
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..n_ang {
            let phi = 2.0 * PI * (j as f64 + shift) / n_ang as f64;
            let n = dir(phi);
            out.push((a + (b - a) * t + n * c.radius, n, false));
        }
    }
    if c.fingertip {
        let m = (PAD_GRID - 1) as f64;
        for i in 0..PAD_GRID {
            let elev = PAD_ELEVATION[0] + (PAD_ELEVATION[1] - PAD_ELEVATION[0]) * i as f64 / m;
            for j in 0..PAD_GRID {
                let phi = PAD_HALF_AZIMUTH * (2.0 * j as f64 / m - 1.0);
                let n = dir(phi) * elev.cos() + axis * elev.sin();
                out.push((b + n * c.radius, n, true));
            }
        }
    }
    for (end, sign) in [(b, 1.0), (a, -1.0)] {
        for i in 0..n_cap {
            let alpha = PI / 2.0 * (i as f64 + 1.0) / (n_cap as f64 + 1.0);
            for j in 0..n_ang {
                let phi = 2.0 * PI * (j as f64 + 0.5 * (i % 2) as f64) / n_ang as f64;
                let n = dir(phi) * alpha.cos() + axis * (sign * alpha.sin());
                if sign < 0.0 || !in_pad(&n) {
                    out.push((end + n * c.radius, n, false));
                }
            }
        }
        let n = axis * sign;
        out.push((end + n * c.radius, n, false));
    }
    out
}

/// Joint frames in hand-local coordinates: rotations, origins and world axes.
struct Frames {
    rot: Vec<Mat3>,
    origin: Vec<Vec3>,
    axis: Vec<Vec3>,
}

impl HandModel {
    pub fn new(template: HandTemplate) -> Result<Self> {
        template.validate()?;
        let nj = template.joints.len();
        let rest_rot: Vec<Mat3> = template.joints.iter().map(|j| j.rest_matrix()).collect();
        let mut chains = vec![Vec::new()];
        for (j, spec) in template.joints.iter().enumerate() {
            let mut chain = match spec.parent {
                Some(p) => chains[p + 1].clone(),
                None => Vec::new(),
            };
            chain.push(j);
            chains.push(chain);
        }
        let mut model = HandModel {
            template,
            local: Vec::new(),
            body: Vec::new(),
            parts: Vec::new(),
            fingertip: Vec::new(),
            rest: Vec::new(),
            chains,
            rest_rot,
        };
        let frames = model.frames(&[0.0; NUM_DOF]);
        let to_rest = |body: usize, s: &Vec3| -> Vec3 {
            if body == 0 {
                *s
            } else {
                frames.origin[body - 1] + frames.rot[body - 1] * s
            }
        };
        // rest-pose primitives used to drop samples buried inside the volume
        let caps_rest: Vec<(Vec3, Vec3, f64)> = model
            .template
            .capsules
            .iter()
            .map(|c| {
                (
                    to_rest(c.joint + 1, &v3(c.a)),
                    to_rest(c.joint + 1, &v3(c.b)),
                    c.radius,
                )
            })
            .collect();
        let palm_c = v3(model.template.palm.center);
        let palm_e = v3(model.template.palm.semi_axes);
        let buried = |x: &Vec3, skip_capsule: Option<usize>, skip_palm: bool| -> bool {
            let in_caps = caps_rest.iter().enumerate().any(|(i, (a, b, r))| {
                Some(i) != skip_capsule && capsule_sdf(x, a, b, *r).0 < -1e-6
            });
            let y = (x - palm_c).component_div(&palm_e);
            in_caps || (!skip_palm && y.norm_squared() < 1.0 - 1e-6)
        };

        let n_palm = model.template.palm.samples;
        let golden = PI * (3.0 - 5f64.sqrt());
        for i in 0..n_palm {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n_palm as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let u = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let x = palm_c + palm_e.component_mul(&u);
            if !buried(&x, None, true) {
                model.push_sample(0, x, x, Part::Palm, false);
            }
        }
        for (ci, c) in model.template.capsules.clone().iter().enumerate() {
            for (s, _, tip) in sample_capsule(c) {
                let x = to_rest(c.joint + 1, &s);
                if !buried(&x, Some(ci), false) {
                    model.push_sample(c.joint + 1, s, x, c.part, tip);
                }
            }
        }
        debug_assert_eq!(nj + 1, model.chains.len());
        Ok(model)
    }

    fn push_sample(&mut self, body: usize, local: Vec3, rest: Vec3, part: Part, tip: bool) {
        self.body.push(body);
        self.local.push(local);
        self.rest.push(rest);
        self.parts.push(part);
        self.fingertip.push(tip);
    }

    /// The built-in template, built once per process.
    pub fn default_arc() -> Arc<HandModel> {
        static MODEL: OnceLock<Arc<HandModel>> = OnceLock::new();
        MODEL
            .get_or_init(|| {
                Arc::new(
                    HandModel::new(HandTemplate::default_right()).expect("valid default template"),
                )
            })
            .clone()
    }

    pub fn template(&self) -> &HandTemplate {
        &self.template
    }

    pub fn num_vertices(&self) -> usize {
        self.rest.len()
    }

    /// Right-hand vertices at θ = 0 in the hand-local frame.
    pub fn rest_vertices(&self) -> &[Vec3] {
        &self.rest
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn fingertip_mask(&self) -> &[bool] {
        &self.fingertip
    }

    pub fn vertex_body(&self) -> &[usize] {
        &self.body
    }

    /// Joints between the wrist and `body`, root first.
    pub fn chain(&self, body: usize) -> &[usize] {
        &self.chains[body]
    }

    fn frames(&self, theta: &[f64; NUM_DOF]) -> Frames {
        let n = self.template.joints.len();
        let mut rot = Vec::with_capacity(n);
        let mut origin = Vec::with_capacity(n);
        let mut axis = Vec::with_capacity(n);
        for (j, spec) in self.template.joints.iter().enumerate() {
            let (pr, po) = match spec.parent {
                Some(p) => (rot[p], origin[p]),
                None => (Mat3::identity(), Vec3::zeros()),
            };
            let base: Mat3 = pr * self.rest_rot[j];
            let local_axis = v3(spec.axis);
            origin.push(po + pr * v3(spec.origin));
            axis.push(base * local_axis);
            rot.push(base * rodrigues(&local_axis, theta[j]));
        }
        Frames { rot, origin, axis }
    }

    /// Evaluates the surface for `pose`; out-of-limit joints are clamped and flagged.
    pub fn forward(self: &Arc<Self>, pose: &HandPose) -> Result<HandSurface> {
        if !pose.is_finite() {
            return Err(Error::NonFinite("hand pose".into()));
        }
        let rot = rot6d_to_matrix(&pose.rot6d)?;
        let mut theta = pose.theta;
        let mut clamped = [false; NUM_DOF];
        for (j, spec) in self.template.joints.iter().enumerate() {
            let [lo, hi] = spec.limits;
            if theta[j] < lo || theta[j] > hi {
                theta[j] = theta[j].clamp(lo, hi);
                clamped[j] = true;
            }
        }
        let frames = self.frames(&theta);
        let local: Vec<Vec3> = self
            .local
            .iter()
            .zip(&self.body)
            .map(|(s, &b)| {
                if b == 0 {
                    *s
                } else {
                    frames.origin[b - 1] + frames.rot[b - 1] * s
                }
            })
            .collect();
        let sc = pose.chirality_matrix();
        let m = rot * sc;
        let vertices = local.iter().map(|x| m * x + pose.trans).collect();
        let capsules = self
            .template
            .capsules
            .iter()
            .map(|c| {
                let j = c.joint;
                (
                    frames.origin[j] + frames.rot[j] * v3(c.a),
                    frames.origin[j] + frames.rot[j] * v3(c.b),
                    c.radius,
                    j + 1,
                )
            })
            .collect();
        let rig = Rig {
            model: self.clone(),
            rot6d: pose.rot6d,
            m,
            sc,
            trans: pose.trans,
            origin: frames.origin,
            axis: frames.axis,
            clamped,
            local,
            capsules,
        };
        let bounds = rig.local_bounds();
        Ok(HandSurface {
            chirality: pose.chirality,
            vertices,
            part_of_vertex: self.parts.clone(),
            fingertip_mask: self.fingertip.clone(),
            clamped: clamped.iter().any(|&c| c),
            rig: Some(Box::new(RigWithBounds { rig, bounds })),
        })
    }
}

/// Forward kinematics with an explicit model.
pub fn forward_kinematics(pose: &HandPose, model: &Arc<HandModel>) -> Result<HandSurface> {
    model.forward(pose)
}

#[derive(Debug, Clone)]
struct Rig {
    model: Arc<HandModel>,
    rot6d: [f64; 6],
    /// R · S_c, mapping hand-local to world directions.
    m: Mat3,
    sc: Mat3,
    trans: Vec3,
    origin: Vec<Vec3>,
    axis: Vec<Vec3>,
    clamped: [bool; NUM_DOF],
    /// Vertex positions in the hand-local frame.
    local: Vec<Vec3>,
    /// (a, b, radius, body) in the hand-local frame.
    capsules: Vec<(Vec3, Vec3, f64, usize)>,
}

#[derive(Debug, Clone)]
struct RigWithBounds {
    rig: Rig,
    bounds: (Vec3, Vec3),
}

impl Rig {
    fn local_bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for (a, b, r, _) in &self.capsules {
            lo = lo.inf(&(a.inf(b) - Vec3::repeat(*r)));
            hi = hi.sup(&(a.sup(b) + Vec3::repeat(*r)));
        }
        let palm = &self.model.template.palm;
        let (c, e) = (v3(palm.center), v3(palm.semi_axes));
        (lo.inf(&(c - e)), hi.sup(&(c + e)))
    }
}

/// A point strictly inside a hand volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// Closest point on the deepest primitive (world).
    pub surface_point: Vec3,
    /// Outward normal of that primitive at `surface_point` (world).
    pub normal: Vec3,
    pub body: usize,
}

/// Gradient of a scalar with respect to one hand's pose, before the 6D pullback.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseGradient {
    pub trans: Vec3,
    /// Gradient with respect to the decoded rotation matrix.
    pub rot: Mat3,
    pub theta: [f64; NUM_DOF],
}

impl Default for PoseGradient {
    fn default() -> Self {
        PoseGradient {
            trans: Vec3::zeros(),
            rot: Mat3::zeros(),
            theta: [0.0; NUM_DOF],
        }
    }
}

impl PoseGradient {
    pub fn add_scaled(&mut self, other: &PoseGradient, s: f64) {
        self.trans += other.trans * s;
        self.rot += other.rot * s;
        for k in 0..NUM_DOF {
            self.theta[k] += other.theta[k] * s;
        }
    }
}

/// One hand's surface in world coordinates.
#[derive(Debug, Clone)]
pub struct HandSurface {
    pub chirality: Chirality,
    pub vertices: Vec<Vec3>,
    pub part_of_vertex: Vec<Part>,
    pub fingertip_mask: Vec<bool>,
    /// A joint was outside its limits and has been clamped.
    pub clamped: bool,
    rig: Option<Box<RigWithBounds>>,
}

impl HandSurface {
    /// Externally supplied vertex set (no kinematics, no volume).
    pub fn from_external(
        chirality: Chirality,
        vertices: Vec<Vec3>,
        part_of_vertex: Vec<Part>,
        fingertip_mask: Vec<bool>,
    ) -> Result<Self> {
        let n = vertices.len();
        for len in [part_of_vertex.len(), fingertip_mask.len()] {
            if len != n {
                return Err(Error::ShapeMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("external hand vertex".into()));
        }
        Ok(HandSurface {
            chirality,
            vertices,
            part_of_vertex,
            fingertip_mask,
            clamped: false,
            rig: None,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Whether the surface carries kinematics (FK output) rather than raw vertices.
    pub fn has_rig(&self) -> bool {
        self.rig.is_some()
    }

    pub fn fingertips(&self) -> impl Iterator<Item = (usize, &Vec3)> {
        self.vertices
            .iter()
            .enumerate()
            .filter(|(i, _)| self.fingertip_mask[*i])
    }

    /// Body that vertex `i` is attached to, when the surface has kinematics.
    pub fn vertex_body(&self, i: usize) -> Option<usize> {
        self.rig.as_ref().map(|r| r.rig.model.body[i])
    }

    /// World-space axis-aligned box enclosing the hand volume.
    pub fn volume_bounds(&self) -> Option<(Vec3, Vec3)> {
        let rb = self.rig.as_ref()?;
        let (lo, hi) = rb.bounds;
        let mut wlo = Vec3::repeat(f64::INFINITY);
        let mut whi = Vec3::repeat(f64::NEG_INFINITY);
        for k in 0..8 {
            let c = Vec3::new(
                if k & 1 == 0 { lo.x } else { hi.x },
                if k & 2 == 0 { lo.y } else { hi.y },
                if k & 4 == 0 { lo.z } else { hi.z },
            );
            let w = rb.rig.m * c + rb.rig.trans;
            wlo = wlo.inf(&w);
            whi = whi.sup(&w);
        }
        Some((wlo, whi))
    }

    /// Depth of `p` inside the hand volume (union of capsules and the palm
    /// ellipsoid): the largest depth over primitives containing `p`.
    pub fn penetration(&self, p: &Vec3) -> Option<Penetration> {
        let rb = self.rig.as_ref()?;
        let rig = &rb.rig;
        let x = rig.m.transpose() * (p - rig.trans);
        let (lo, hi) = rb.bounds;
        if (0..3).any(|k| x[k] <= lo[k] || x[k] >= hi[k]) {
            return None;
        }
        let mut best: Option<(f64, Vec3, Vec3, usize)> = None;
        let palm = &rig.model.template.palm;
        let (c, e) = (v3(palm.center), v3(palm.semi_axes));
        let y = x - c;
        if y.component_div(&e).norm_squared() < 1.0 {
            let q = ellipsoid_closest_point(&e, &y);
            let d = (q - y).norm();
            if d > 0.0 {
                best = Some((d, q + c, (q - y) / d, 0));
            }
        }
        for (a, b, r, body) in &rig.capsules {
            let (sdf, q, n) = capsule_sdf(&x, a, b, *r);
            if sdf < 0.0 && best.is_none_or(|bst| -sdf > bst.0) {
                best = Some((-sdf, q, n, *body));
            }
        }
        best.map(|(depth, q, n, body)| Penetration {
            depth,
            surface_point: rig.m * q + rig.trans,
            normal: rig.m * n,
            body,
        })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.penetration(p).is_some()
    }

    /// Accumulates the pose gradient of a world-space gradient `g` acting on a
    /// point rigidly attached to `body` and currently at `p`.
    pub fn add_point_grad(&self, acc: &mut PoseGradient, body: usize, p: &Vec3, g: &Vec3) {
        let Some(rb) = self.rig.as_ref() else { return };
        let rig = &rb.rig;
        let x = rig.m.transpose() * (p - rig.trans);
        Self::accumulate(rig, acc, body, &x, g);
    }

    /// Accumulates the pose gradient of a world-space gradient on vertex `i`.
    pub fn add_vertex_grad(&self, acc: &mut PoseGradient, i: usize, g: &Vec3) {
        let Some(rb) = self.rig.as_ref() else { return };
        let rig = &rb.rig;
        Self::accumulate(rig, acc, rig.model.body[i], &rig.local[i], g);
    }

    fn accumulate(rig: &Rig, acc: &mut PoseGradient, body: usize, x: &Vec3, g: &Vec3) {
        acc.trans += g;
        acc.rot += g * (rig.sc * x).transpose();
        let gl = rig.m.transpose() * g;
        for &k in rig.model.chain(body) {
            acc.theta[k] += rig.axis[k].dot(&(x - rig.origin[k]).cross(&gl));
        }
    }

    /// Flattens to (τ, r, θ) order; clamped joints get zero gradient.
    pub fn finish_grad(&self, acc: &PoseGradient) -> [f64; NUM_POSE_PARAMS] {
        let mut out = [0.0; NUM_POSE_PARAMS];
        let Some(rb) = self.rig.as_ref() else {
            return out;
        };
        let rig = &rb.rig;
        out[..3].copy_from_slice(acc.trans.as_slice());
        out[3..9].copy_from_slice(&rot6d_backward(&rig.rot6d, &acc.rot));
        for k in 0..NUM_DOF {
            out[9 + k] = if rig.clamped[k] { 0.0 } else { acc.theta[k] };
        }
        out
    }
}

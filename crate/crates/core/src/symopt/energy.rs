//! Interpenetration energies and their pose gradients.
//!
//! Membership of a vertex in a volume is held fixed within a step; the
//! distance terms are differentiated through forward kinematics.

use crate::geometry::Vec3;
use crate::hand::{HandSurface, PoseGradient, NUM_POSE_PARAMS};
use crate::object::ObjectModel;

/// Sum over left vertices inside the right hand of their depth.
pub fn energy_phh(left: &HandSurface, right: &HandSurface) -> f64 {
    left.vertices
        .iter()
        .filter_map(|v| right.penetration(v))
        .map(|p| p.depth)
        .sum()
}

/// Sum over vertices of both hands inside the object of their distance to its surface.
pub fn energy_pho(right: &HandSurface, left: &HandSurface, object: &ObjectModel) -> f64 {
    hand_object_energy(right, object) + hand_object_energy(left, object)
}

/// One hand's share of [`energy_pho`].
pub fn hand_object_energy(hand: &HandSurface, object: &ObjectModel) -> f64 {
    hand.vertices
        .iter()
        .filter(|v| object.contains(v))
        .map(|v| object.closest(v).distance)
        .sum()
}

/// Largest depth of any vertex of one hand inside the other, both directions.
pub fn hand_hand_max_depth(a: &HandSurface, b: &HandSurface) -> f64 {
    let one = |src: &HandSurface, dst: &HandSurface| {
        src.vertices
            .iter()
            .filter_map(|v| dst.penetration(v))
            .map(|p| p.depth)
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Largest depth of a hand vertex inside the object.
pub fn hand_object_max_depth(hand: &HandSurface, object: &ObjectModel) -> f64 {
    hand.vertices
        .iter()
        .filter(|v| object.contains(v))
        .map(|v| object.closest(v).distance)
        .fold(0.0, f64::max)
}

/// Number of hand vertices inside the object.
pub fn interior_count(hand: &HandSurface, object: &ObjectModel) -> usize {
    hand.vertices.iter().filter(|v| object.contains(v)).count()
}

/// [`energy_phh`] with its gradients on (left, right) pose parameters.
pub fn energy_phh_grad(
    left: &HandSurface,
    right: &HandSurface,
) -> (f64, PoseGradient, PoseGradient) {
    let mut gl = PoseGradient::default();
    let mut gr = PoseGradient::default();
    let mut e = 0.0;
    for (i, v) in left.vertices.iter().enumerate() {
        if let Some(p) = right.penetration(v) {
            e += p.depth;
            left.add_vertex_grad(&mut gl, i, &-p.normal);
            right.add_point_grad(&mut gr, p.body, &p.surface_point, &p.normal);
        }
    }
    (e, gl, gr)
}

/// One hand's object-penetration energy and its gradient.
pub fn hand_object_energy_grad(hand: &HandSurface, object: &ObjectModel) -> (f64, PoseGradient) {
    let mut g = PoseGradient::default();
    let mut e = 0.0;
    for (i, v) in hand.vertices.iter().enumerate() {
        if object.contains(v) {
            let sp = object.closest(v);
            if sp.distance > 0.0 {
                e += sp.distance;
                let dir: Vec3 = (v - sp.point) / sp.distance;
                hand.add_vertex_grad(&mut g, i, &dir);
            }
        }
    }
    (e, g)
}

/// Energies and flattened gradients for one dual grasp.
#[derive(Debug, Clone)]
pub struct DualEnergy {
    pub phh: f64,
    pub pho: f64,
    pub total: f64,
    pub grad_right: [f64; NUM_POSE_PARAMS],
    pub grad_left: [f64; NUM_POSE_PARAMS],
}

/// E = λ_phh·E_phh + λ_pho·E_pho with gradients.
pub fn dual_energy(
    right: &HandSurface,
    left: &HandSurface,
    object: &ObjectModel,
    lambda_phh: f64,
    lambda_pho: f64,
) -> DualEnergy {
    let (phh, mut gl, mut gr) = energy_phh_grad(left, right);
    let (er, gor) = hand_object_energy_grad(right, object);
    let (el, gol) = hand_object_energy_grad(left, object);
    let mut acc_l = PoseGradient::default();
    let mut acc_r = PoseGradient::default();
    acc_l.add_scaled(&gl, lambda_phh);
    acc_l.add_scaled(&gol, lambda_pho);
    acc_r.add_scaled(&gr, lambda_phh);
    acc_r.add_scaled(&gor, lambda_pho);
    gl = acc_l;
    gr = acc_r;
    let pho = er + el;
    DualEnergy {
        phh,
        pho,
        total: lambda_phh * phh + lambda_pho * pho,
        grad_right: right.finish_grad(&gr),
        grad_left: left.finish_grad(&gl),
    }
}

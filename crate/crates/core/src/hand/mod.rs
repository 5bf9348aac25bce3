//! Parametric 22-DoF hand: template, forward kinematics, analytic volume and
//! pose gradients.

mod model;
mod template;
mod volume;

pub use model::{forward_kinematics, HandModel, HandSurface, Penetration, PoseGradient};
pub use template::{CapsuleSpec, EllipsoidSpec, HandTemplate, JointKind, JointSpec};
pub use volume::{capsule_sdf, ellipsoid_closest_point};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, Mat3, Vec3};

/// Actuated degrees of freedom.
pub const NUM_DOF: usize = 22;
/// Hand parts: five fingers and the palm.
pub const NUM_PARTS: usize = 6;
/// Class index used for "no contact" in part maps.
pub const NO_CONTACT: usize = NUM_PARTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Right,
    Left,
}

impl Chirality {
    pub fn toggled(self) -> Self {
        match self {
            Chirality::Right => Chirality::Left,
            Chirality::Left => Chirality::Right,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Chirality::Right => "right",
            Chirality::Left => "left",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
    Palm,
}

impl Part {
    pub const ALL: [Part; NUM_PARTS] = [
        Part::Thumb,
        Part::Index,
        Part::Middle,
        Part::Ring,
        Part::Little,
        Part::Palm,
    ];
    pub const FINGERS: [Part; 5] = [
        Part::Thumb,
        Part::Index,
        Part::Middle,
        Part::Ring,
        Part::Little,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Part> {
        Part::ALL.get(i).copied()
    }
}

/// One hand's configuration: translation, 6D orientation and joint angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandPose {
    pub chirality: Chirality,
    pub trans: Vec3,
    pub rot6d: [f64; 6],
    pub theta: [f64; NUM_DOF],
}

impl HandPose {
    pub fn identity(chirality: Chirality) -> Self {
        HandPose {
            chirality,
            trans: Vec3::zeros(),
            rot6d: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            theta: [0.0; NUM_DOF],
        }
    }

    pub fn from_matrix(
        chirality: Chirality,
        trans: Vec3,
        rot: &Mat3,
        theta: [f64; NUM_DOF],
    ) -> Self {
        HandPose {
            chirality,
            trans,
            rot6d: matrix_to_rot6d(rot),
            theta,
        }
    }

    pub fn rotation(&self) -> Result<Mat3> {
        rot6d_to_matrix(&self.rot6d)
    }

    /// Reflection applied to hand-local coordinates: identity for the right
    /// template, the sagittal reflection for the left.
    pub fn chirality_matrix(&self) -> Mat3 {
        match self.chirality {
            Chirality::Right => Mat3::identity(),
            Chirality::Left => Axis::X.reflection(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.trans.iter().all(|v| v.is_finite())
            && self.rot6d.iter().all(|v| v.is_finite())
            && self.theta.iter().all(|v| v.is_finite())
    }

    /// Flat parameter vector (τ, r, θ) of length 31.
    pub fn to_params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 + 6 + NUM_DOF);
        v.extend(self.trans.iter());
        v.extend(self.rot6d.iter());
        v.extend(self.theta.iter());
        v
    }

    pub fn set_params(&mut self, p: &[f64]) {
        self.trans = Vec3::new(p[0], p[1], p[2]);
        self.rot6d.copy_from_slice(&p[3..9]);
        self.theta.copy_from_slice(&p[9..9 + NUM_DOF]);
    }
}

/// Clamps θ to the template limits and re-orthonormalizes the 6D rotation;
/// applied after every optimizer step.
pub fn project_pose(pose: &mut HandPose, template: &HandTemplate) -> Result<()> {
    for (t, spec) in pose.theta.iter_mut().zip(&template.joints) {
        *t = t.clamp(spec.limits[0], spec.limits[1]);
    }
    pose.rot6d = matrix_to_rot6d(&rot6d_to_matrix(&pose.rot6d)?);
    Ok(())
}

/// Number of scalars in [`HandPose::to_params`].
pub const NUM_POSE_PARAMS: usize = 3 + 6 + NUM_DOF;

/// Gram–Schmidt decode of the first two rotation columns.
pub fn rot6d_to_matrix(r: &[f64; 6]) -> Result<Mat3> {
    let a1 = Vec3::new(r[0], r[1], r[2]);
    let a2 = Vec3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    if !(n1 > 1e-8) {
        return Err(Error::invalid(format!(
            "6D rotation: first column has norm {n1:e}"
        )));
    }
    let e1 = a1 / n1;
    let u2 = a2 - e1 * e1.dot(&a2);
    let n2 = u2.norm();
    if !(n2 > 1e-8) {
        return Err(Error::invalid(
            "6D rotation: second column is parallel to the first",
        ));
    }
    let e2 = u2 / n2;
    let e3 = e1.cross(&e2);
    Ok(Mat3::from_columns(&[e1, e2, e3]))
}

pub fn matrix_to_rot6d(m: &Mat3) -> [f64; 6] {
    [
        m[(0, 0)],
        m[(1, 0)],
        m[(2, 0)],
        m[(0, 1)],
        m[(1, 1)],
        m[(2, 1)],
    ]
}

/// Pulls a gradient with respect to the decoded matrix back to the 6D input.
pub fn rot6d_backward(r: &[f64; 6], grad_m: &Mat3) -> [f64; 6] {
    let a1 = Vec3::new(r[0], r[1], r[2]);
    let a2 = Vec3::new(r[3], r[4], r[5]);
    let n1 = a1.norm();
    let e1 = a1 / n1;
    let u2 = a2 - e1 * e1.dot(&a2);
    let n2 = u2.norm();
    let e2 = u2 / n2;
    let (g1, g2, g3) = (
        grad_m.column(0).into_owned(),
        grad_m.column(1).into_owned(),
        grad_m.column(2).into_owned(),
    );
    // e3 = e1 × e2
    let mut ge1 = g1 + e2.cross(&g3);
    let ge2 = g2 + g3.cross(&e1);
    let gu2 = (ge2 - e2 * e2.dot(&ge2)) / n2;
    let ga2 = gu2 - e1 * e1.dot(&gu2);
    ge1 -= gu2 * e1.dot(&a2) + a2 * e1.dot(&gu2);
    let ga1 = (ge1 - e1 * e1.dot(&ge1)) / n1;
    [ga1.x, ga1.y, ga1.z, ga2.x, ga2.y, ga2.z]
}

/// Reflects a pose across a coordinate plane and toggles its chirality, so
/// that its surface is the reflection of the input surface vertex by vertex.
pub fn mirror_pose(pose: &HandPose, axis: Axis) -> HandPose {
    let s = axis.reflection();
    let r = rot6d_to_matrix(&pose.rot6d).unwrap_or_else(|_| Mat3::identity());
    let sh = Axis::X.reflection();
    HandPose {
        chirality: pose.chirality.toggled(),
        trans: s * pose.trans,
        rot6d: matrix_to_rot6d(&(s * r * sh)),
        theta: pose.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rot6d_identity_and_quarter_turn() {
        let id = rot6d_to_matrix(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(id, Mat3::identity());
        let rz = rot6d_to_matrix(&[0.0, 1.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((rz - expected).abs().max() < 1e-15);
    }

    #[test]
    fn rot6d_degenerate_first_column() {
        assert!(rot6d_to_matrix(&[0.0, 0.0, 1e-9, 0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn rot6d_backward_matches_finite_differences() {
        let r = [0.3, -0.8, 0.4, 0.9, 0.2, -0.5];
        let w = Mat3::new(0.3, -1.2, 0.5, 0.7, 0.1, -0.4, 1.1, 0.6, -0.9);
        let f = |r: &[f64; 6]| rot6d_to_matrix(r).unwrap().component_mul(&w).sum();
        let g = rot6d_backward(&r, &w);
        for k in 0..6 {
            let h = 1e-6;
            let (mut rp, mut rm) = (r, r);
            rp[k] += h;
            rm[k] -= h;
            let fd = (f(&rp) - f(&rm)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8, "{k}: {fd} vs {}", g[k]);
        }
    }

    proptest! {
        #[test]
        fn rot6d_is_orthonormal(v in prop::array::uniform6(-1.0f64..1.0)) {
            let a1 = Vec3::new(v[0], v[1], v[2]);
            let a2 = Vec3::new(v[3], v[4], v[5]);
            prop_assume!(a1.norm() > 1e-3 && a1.normalize().cross(&a2).norm() > 1e-3);
            let m = rot6d_to_matrix(&v).unwrap();
            prop_assert!((m.transpose() * m - Mat3::identity()).abs().max() < 1e-10);
            prop_assert!((m.determinant() - 1.0).abs() < 1e-10);
        }
    }
}

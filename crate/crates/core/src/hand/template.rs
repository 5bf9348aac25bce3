//! Hand template: kinematic tree, capsule and ellipsoid geometry, limits.
//!
//! Hand-local frame of the right template: fingers extend along +y, the palm
//! faces −z, the thumb sits on the −x side and the wrist is at the origin.

use nalgebra::Rotation3;
use serde::{Deserialize, Serialize};

use super::{Part, NUM_DOF};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Flexion,
    Abduction,
}

impl JointKind {
    pub fn default_limits(self) -> [f64; 2] {
        match self {
            JointKind::Flexion => [0.0, 1.6],
            JointKind::Abduction => [-0.35, 0.35],
        }
    }
}

/// One revolute joint. Its frame is `parent ∘ translate(origin) ∘ rest ∘ rot(axis, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// Index of the parent joint; `None` attaches to the wrist.
    pub parent: Option<usize>,
    pub part: Part,
    pub kind: JointKind,
    pub origin: [f64; 3],
    /// Rotation vector (axis × angle) of the rest orientation relative to the parent.
    pub rest_rotation: [f64; 3],
    /// Unit rotation axis in the joint frame.
    pub axis: [f64; 3],
    pub limits: [f64; 2],
}

/// Capsule rigidly attached to a joint frame, sampled on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapsuleSpec {
    pub joint: usize,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
    pub part: Part,
    /// (angular, along the axis, rings per cap)
    pub samples: [usize; 3],
    /// Distal phalanx: its palmar pad contributes fingertip vertices.
    pub fingertip: bool,
}

/// Palm ellipsoid in the wrist frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandTemplate {
    pub joints: Vec<JointSpec>,
    pub capsules: Vec<CapsuleSpec>,
    pub palm: EllipsoidSpec,
}

pub(crate) fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

impl JointSpec {
    pub fn rest_matrix(&self) -> Mat3 {
        Rotation3::new(v3(self.rest_rotation)).into_inner()
    }
}

impl HandTemplate {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: HandTemplate = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.len() != NUM_DOF {
            return Err(Error::invalid(format!(
                "hand template has {} joints, expected {NUM_DOF}",
                self.joints.len()
            )));
        }
        for (i, j) in self.joints.iter().enumerate() {
            // parents precede children, which also rules out cycles
            if let Some(p) = j.parent {
                if p >= i {
                    return Err(Error::invalid(format!(
                        "joint {i} ({}) has parent {p}; parents must precede children",
                        j.name
                    )));
                }
            }
            if (v3(j.axis).norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("joint {} axis is not unit", j.name)));
            }
            if !(j.limits[0] <= j.limits[1]) {
                return Err(Error::invalid(format!("joint {} has empty limits", j.name)));
            }
        }
        for c in &self.capsules {
            if c.joint >= self.joints.len() || !(c.radius > 0.0) {
                return Err(Error::invalid("capsule with bad joint index or radius"));
            }
        }
        if self.palm.semi_axes.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::invalid("palm semi-axes must be positive"));
        }
        Ok(())
    }

    /// The built-in right hand: thumb 5 DoF, index/middle/ring 4 DoF, little 5 DoF.
    pub fn default_right() -> Self {
        let mut joints = Vec::new();
        let mut capsules = Vec::new();
        let flex_axis = [-1.0, 0.0, 0.0];
        let abd_axis = [0.0, 0.0, 1.0];
        let joint = |joints: &mut Vec<JointSpec>,
                     name: &str,
                     parent: Option<usize>,
                     part: Part,
                     kind: JointKind,
                     origin: [f64; 3],
                     rest: [f64; 3],
                     axis: [f64; 3]| {
            joints.push(JointSpec {
                name: name.to_string(),
                parent,
                part,
                kind,
                origin,
                rest_rotation: rest,
                axis,
                limits: kind.default_limits(),
            });
            joints.len() - 1
        };
        let mid_samples = [8, 3, 2];
        let tip_samples = [10, 4, 3];
        let phalanx = |joint: usize, len: f64, radius: f64, part: Part, tip: bool| CapsuleSpec {
            joint,
            a: [0.0, 0.0, 0.0],
            b: [0.0, len, 0.0],
            radius,
            part,
            samples: if tip { tip_samples } else { mid_samples },
            fingertip: tip,
        };

        // thumb: pronated so that flexion sweeps across the palm
        let thumb_rest = (Rotation3::from_axis_angle(&Vec3::z_axis(), 0.8)
            * Rotation3::from_axis_angle(&Vec3::y_axis(), -0.9))
        .scaled_axis();
        let thumb_rest = [thumb_rest.x, thumb_rest.y, thumb_rest.z];
        let t0 = joint(
            &mut joints,
            "thumb_cmc_abd",
            None,
            Part::Thumb,
            JointKind::Abduction,
            [-0.022, 0.02, -0.01],
            thumb_rest,
            abd_axis,
        );
        let t1 = joint(
            &mut joints,
            "thumb_cmc_flex",
            Some(t0),
            Part::Thumb,
            JointKind::Flexion,
            [0.0; 3],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(t1, 0.038, 0.0095, Part::Thumb, false));
        let t2 = joint(
            &mut joints,
            "thumb_mcp_abd",
            Some(t1),
            Part::Thumb,
            JointKind::Abduction,
            [0.0, 0.038, 0.0],
            [0.0; 3],
            abd_axis,
        );
        let t3 = joint(
            &mut joints,
            "thumb_mcp_flex",
            Some(t2),
            Part::Thumb,
            JointKind::Flexion,
            [0.0; 3],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(t3, 0.032, 0.0085, Part::Thumb, false));
        let t4 = joint(
            &mut joints,
            "thumb_ip_flex",
            Some(t3),
            Part::Thumb,
            JointKind::Flexion,
            [0.0, 0.032, 0.0],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(t4, 0.027, 0.008, Part::Thumb, true));

        // (part, base, lengths, radii)
        let fingers = [
            (
                Part::Index,
                [-0.026, 0.09, 0.0],
                [0.040, 0.025, 0.020],
                [0.0080, 0.0075, 0.0070],
            ),
            (
                Part::Middle,
                [-0.0085, 0.093, 0.0],
                [0.045, 0.028, 0.022],
                [0.0082, 0.0077, 0.0072],
            ),
            (
                Part::Ring,
                [0.0085, 0.091, 0.0],
                [0.042, 0.026, 0.021],
                [0.0078, 0.0073, 0.0068],
            ),
        ];
        for (part, base, len, rad) in fingers {
            let name = format!("{part:?}").to_lowercase();
            let a = joint(
                &mut joints,
                &format!("{name}_mcp_abd"),
                None,
                part,
                JointKind::Abduction,
                base,
                [0.0; 3],
                abd_axis,
            );
            let f = joint(
                &mut joints,
                &format!("{name}_mcp_flex"),
                Some(a),
                part,
                JointKind::Flexion,
                [0.0; 3],
                [0.0; 3],
                flex_axis,
            );
            capsules.push(phalanx(f, len[0], rad[0], part, false));
            let p = joint(
                &mut joints,
                &format!("{name}_pip_flex"),
                Some(f),
                part,
                JointKind::Flexion,
                [0.0, len[0], 0.0],
                [0.0; 3],
                flex_axis,
            );
            capsules.push(phalanx(p, len[1], rad[1], part, false));
            let d = joint(
                &mut joints,
                &format!("{name}_dip_flex"),
                Some(p),
                part,
                JointKind::Flexion,
                [0.0, len[1], 0.0],
                [0.0; 3],
                flex_axis,
            );
            capsules.push(phalanx(d, len[2], rad[2], part, true));
        }

        // little finger: an extra metacarpal joint that cups the palm edge
        let l0 = joint(
            &mut joints,
            "little_cmc",
            None,
            Part::Little,
            JointKind::Abduction,
            [0.021, 0.05, 0.0],
            [0.0; 3],
            [0.0, 1.0, 0.0],
        );
        let l1 = joint(
            &mut joints,
            "little_mcp_abd",
            Some(l0),
            Part::Little,
            JointKind::Abduction,
            [0.005, 0.035, 0.0],
            [0.0; 3],
            abd_axis,
        );
        let l2 = joint(
            &mut joints,
            "little_mcp_flex",
            Some(l1),
            Part::Little,
            JointKind::Flexion,
            [0.0; 3],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(l2, 0.032, 0.0070, Part::Little, false));
        let l3 = joint(
            &mut joints,
            "little_pip_flex",
            Some(l2),
            Part::Little,
            JointKind::Flexion,
            [0.0, 0.032, 0.0],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(l3, 0.020, 0.0065, Part::Little, false));
        let l4 = joint(
            &mut joints,
            "little_dip_flex",
            Some(l3),
            Part::Little,
            JointKind::Flexion,
            [0.0, 0.020, 0.0],
            [0.0; 3],
            flex_axis,
        );
        capsules.push(phalanx(l4, 0.018, 0.0062, Part::Little, true));

        HandTemplate {
            joints,
            capsules,
            palm: EllipsoidSpec {
                center: [0.0, 0.045, 0.0],
                semi_axes: [0.042, 0.048, 0.015],
                samples: 260,
            },
        }
    }

    /// θ indices belonging to each finger, in template order.
    pub fn dof_layout(&self) -> Vec<(Part, Vec<usize>)> {
        Part::FINGERS
            .iter()
            .map(|&p| {
                (
                    p,
                    (0..self.joints.len())
                        .filter(|&j| self.joints[j].part == p)
                        .collect(),
                )
            })
            .collect()
    }
}

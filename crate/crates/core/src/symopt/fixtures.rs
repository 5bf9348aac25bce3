//! Procedural symmetric objects and synthetic right-hand grasps, shared by
//! tests, examples and the CLI's fixture export.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::{primitives, Axis, KdTree, Mat3, TriMesh, Vec3};
use crate::hand::{HandModel, HandPose, HandSurface, JointKind, Part, PoseGradient, NUM_DOF};
use crate::object::{ObjectModel, DEFAULT_CLOUD_POINTS};
use crate::symmetry::detect_symmetry_plane;

use super::{
    hand_object_max_depth, interior_count, run_symopt, DualGrasp, EnergyConfig, GraspStatus,
};
use crate::contact::{contact_representation, ContactConfig, HandDirections};
use crate::tta::average_distance;

/// Ten mirror-symmetric shapes: spheres, boxes, cylinders and capsule unions.
pub fn symmetric_suite() -> Vec<(String, TriMesh)> {
    let v = Vec3::new;
    vec![
        ("sphere_s".into(), primitives::icosphere(0.06, 3)),
        ("sphere_l".into(), primitives::icosphere(0.075, 3)),
        (
            "box_a".into(),
            primitives::box_mesh_subdivided(v(0.06, 0.04, 0.04), 4),
        ),
        (
            "box_b".into(),
            primitives::box_mesh_subdivided(v(0.05, 0.05, 0.035), 4),
        ),
        (
            "box_c".into(),
            primitives::box_mesh_subdivided(v(0.08, 0.03, 0.05), 4),
        ),
        ("cyl_a".into(), primitives::cylinder(0.035, 0.09, 32)),
        ("cyl_b".into(), primitives::cylinder(0.045, 0.06, 32)),
        ("cyl_c".into(), primitives::cylinder(0.03, 0.11, 32)),
        ("capsule".into(), primitives::capsule(0.035, 0.06, 32)),
        (
            "dumbbell".into(),
            primitives::dumbbell(0.04, 0.02, 0.05, 32),
        ),
    ]
}

/// [`symmetric_suite`] wrapped as object models with seeded surface clouds.
pub fn suite_objects(seed: u64) -> Result<Vec<ObjectModel>> {
    symmetric_suite()
        .into_iter()
        .enumerate()
        .map(|(k, (id, mesh))| {
            ObjectModel::from_mesh(id, mesh, DEFAULT_CLOUD_POINTS, seed + k as u64)
        })
        .collect()
}

/// Palm contact point in hand-local coordinates, just below the palm center.
const PALM_POINT: [f64; 3] = [0.0, 0.05, -0.015];

/// Places the right palm facing the object center from direction `u`, with
/// the fingers along `t` (orthogonal to `u`), `gap` meters off the surface.
pub fn approach_pose(
    object: &ObjectModel,
    u: &Vec3,
    t: &Vec3,
    gap: f64,
    flex: f64,
    model: &HandModel,
) -> HandPose {
    let u = u.normalize();
    let t = (t - u * u.dot(t)).normalize();
    let rot = Mat3::from_columns(&[t.cross(&u), t, u]);
    let c = object.center();
    let extent = object.ray_cast(&c, &u).map_or(object.max_radius(), |h| h.t);
    let palm = Vec3::from(PALM_POINT);
    let trans = c + u * (extent + gap) - rot * palm;
    let mut theta = [0.0; NUM_DOF];
    for (t, spec) in theta.iter_mut().zip(&model.template().joints) {
        if spec.kind == JointKind::Flexion {
            *t = flex.clamp(spec.limits[0], spec.limits[1]);
        }
    }
    HandPose::from_matrix(crate::hand::Chirality::Right, trans, &rot, theta)
}

/// Mean fingertip-to-cloud distance of one hand, with its pose gradient.
pub fn fingertip_attraction(hand: &HandSurface, tree: &KdTree) -> (f64, PoseGradient) {
    let mut g = PoseGradient::default();
    let tips: Vec<(usize, Vec3)> = hand.fingertips().map(|(i, v)| (i, *v)).collect();
    if tips.is_empty() {
        return (0.0, g);
    }
    let w = 1.0 / tips.len() as f64;
    let mut e = 0.0;
    for (i, v) in tips {
        let Some((j, d2)) = tree.nearest(&v) else {
            continue;
        };
        let d = d2.sqrt();
        e += w * d;
        if d > 0.0 {
            hand.add_vertex_grad(&mut g, i, &((v - tree.point(j)) * (w / d)));
        }
    }
    (e, g)
}

/// Any vertex of `part` inside the object.
fn part_touches(hand: &HandSurface, part: Part, object: &ObjectModel) -> bool {
    hand.vertices
        .iter()
        .zip(&hand.part_of_vertex)
        .any(|(v, p)| *p == part && object.contains(v))
}

/// Curls each finger until it meets the object: first all flexion joints
/// together, then the distal ones, so that the pads end up on the surface.
pub fn close_fingers(
    pose: &HandPose,
    object: &ObjectModel,
    model: &Arc<HandModel>,
) -> Result<HandPose> {
    const STEP: f64 = 0.03;
    let mut pose = pose.clone();
    let joints = &model.template().joints;
    for part in Part::FINGERS {
        let flex: Vec<usize> = (0..joints.len())
            .filter(|&j| joints[j].part == part && joints[j].kind == JointKind::Flexion)
            .collect();
        for stage in 0..flex.len() {
            let active = &flex[stage..];
            loop {
                let mut next = pose.clone();
                let mut moved = false;
                for &j in active {
                    let t = (next.theta[j] + STEP).min(joints[j].limits[1]);
                    moved |= t > next.theta[j];
                    next.theta[j] = t;
                }
                if !moved || part_touches(&model.forward(&next)?, part, object) {
                    break;
                }
                pose = next;
            }
        }
    }
    Ok(pose)
}

/// Mean surface distance of one finger's pad vertices.
fn pad_distance(hand: &HandSurface, part: Part, object: &ObjectModel) -> f64 {
    let (mut sum, mut n) = (0.0, 0);
    for (i, v) in hand.fingertips() {
        if hand.part_of_vertex[i] == part {
            sum += object.closest(v).distance;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Coordinate search over each finger's joints that brings its pad onto the
/// surface while keeping every vertex of that finger outside the object.
pub fn seat_pads(
    pose: &HandPose,
    object: &ObjectModel,
    model: &Arc<HandModel>,
) -> Result<HandPose> {
    let mut pose = pose.clone();
    let joints = &model.template().joints;
    for part in Part::FINGERS {
        let dofs: Vec<usize> = (0..joints.len())
            .filter(|&j| joints[j].part == part)
            .collect();
        let mut best = pad_distance(&model.forward(&pose)?, part, object);
        for delta in [0.08, 0.04, 0.02, 0.01, 0.005] {
            let mut improved = true;
            let mut sweeps = 0;
            while improved && sweeps < 6 {
                improved = false;
                sweeps += 1;
                for &j in &dofs {
                    for sign in [1.0, -1.0] {
                        let [lo, hi] = joints[j].limits;
                        let t = (pose.theta[j] + sign * delta).clamp(lo, hi);
                        if t == pose.theta[j] {
                            continue;
                        }
                        let mut next = pose.clone();
                        next.theta[j] = t;
                        let hand = model.forward(&next)?;
                        let d = pad_distance(&hand, part, object);
                        if d < best && !part_touches(&hand, part, object) {
                            best = d;
                            pose = next;
                            improved = true;
                        }
                    }
                }
            }
        }
    }
    Ok(pose)
}

/// Settles a pose onto the object: rigid push along `u` until no vertex is
/// inside, finger closing, then pad seating.
pub fn settle_grasp(
    pose: &HandPose,
    object: &ObjectModel,
    u: &Vec3,
    model: &Arc<HandModel>,
) -> Result<HandPose> {
    let mut pose = pose.clone();
    let u = u.normalize();
    for _ in 0..40 {
        let hand = model.forward(&pose)?;
        if interior_count(&hand, object) == 0 {
            break;
        }
        pose.trans += u * (hand_object_max_depth(&hand, object) + 3e-4);
    }
    let closed = close_fingers(&pose, object, model)?;
    seat_pads(&closed, object, model)
}

/// Right grasps approaching from the positive side of the object's symmetry
/// plane, settled into light contact without penetration.
pub fn synthetic_right_grasps(
    object: &ObjectModel,
    n: usize,
    seed: u64,
    model: &Arc<HandModel>,
) -> Result<Vec<HandPose>> {
    let axis = detect_symmetry_plane(object)
        .map(|r| r.axis)
        .unwrap_or(Axis::X);
    let e = axis.reflection() * Vec3::repeat(1.0);
    let normal = Vec3::repeat(1.0) - e;
    let normal = normal / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let len = u.norm();
        if !(0.1..=1.0).contains(&len) {
            continue;
        }
        let u = u / len;
        if u.dot(&normal) < 0.4 {
            continue;
        }
        let helper = if u.z.abs() < 0.9 {
            Vec3::z()
        } else {
            Vec3::x()
        };
        let t0 = u.cross(&helper).normalize();
        let psi = rng.random_range(0.0..std::f64::consts::TAU);
        let t = t0 * psi.cos() + u.cross(&t0) * psi.sin();
        let pose = approach_pose(object, &u, &t, 0.002, 0.0, model);
        out.push(settle_grasp(&pose, object, &u, model)?);
    }
    Ok(out)
}

/// Cloud density for refinement fixtures: fingertip-to-cloud distances of
/// a resting pad are dominated by cloud spacing below a few thousand points.
pub const DENSE_CLOUD_POINTS: usize = 8192;

/// A dual grasp displaced from a known good configuration, with the
/// directions extracted from that configuration.
#[derive(Debug, Clone)]
pub struct RefineFixture {
    /// Index into the object list the fixture was built from.
    pub object: usize,
    pub truth: DualGrasp,
    pub start: DualGrasp,
    pub directions: [HandDirections; 2],
    /// Hands pushed into the object rather than lifted off it.
    pub penetrating: bool,
}

/// Per-hand fingertip AD to the object cloud.
pub fn fingertip_distances(
    right: &HandSurface,
    left: &HandSurface,
    object: &ObjectModel,
) -> [f64; 2] {
    [right, left].map(|h| {
        let tips: Vec<Vec3> = h.fingertips().map(|(_, v)| *v).collect();
        average_distance(&tips, object.tree()).unwrap_or(f64::INFINITY)
    })
}

/// Ground truth from SymOpt on synthetic grasps, kept only when every hand's
/// fingertips rest within `max_truth_ad`. Each hand is then moved along the
/// ray from the object center through its vertex centroid: outward by
/// 1–3 cm (floating) or inward by 2–6 mm (penetrating), chosen per fixture.
/// Fixtures cycle over the objects until `n` are collected.
pub fn refine_fixtures(
    objects: &[ObjectModel],
    n: usize,
    max_truth_ad: f64,
    seed: u64,
    model: &Arc<HandModel>,
) -> Result<Vec<RefineFixture>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: Vec<Vec<(DualGrasp, [HandDirections; 2])>> = Vec::with_capacity(objects.len());
    for (k, obj) in objects.iter().enumerate() {
        let rights = synthetic_right_grasps(obj, 8, seed.wrapping_add(k as u64), model)?;
        let run = run_symopt(obj, &rights, &EnergyConfig::default(), seed, model)?;
        let mut pool = Vec::new();
        for g in run
            .grasps
            .into_iter()
            .filter(|g| g.status == GraspStatus::Optimized)
        {
            let (r, l) = (model.forward(&g.right)?, model.forward(&g.left)?);
            let ad = fingertip_distances(&r, &l, obj);
            if ad[0] > max_truth_ad || ad[1] > max_truth_ad {
                continue;
            }
            let rep = contact_representation(obj, &r, &l, &ContactConfig::default());
            pool.push((g, [rep.right.directions, rep.left.directions]));
        }
        pools.push(pool);
    }
    let mut out = Vec::with_capacity(n);
    let mut round = 0;
    while out.len() < n {
        let mut any = false;
        for (k, pool) in pools.iter().enumerate() {
            let Some((truth, dirs)) = pool.get(round) else {
                continue;
            };
            any = true;
            if out.len() == n {
                break;
            }
            let penetrating = rng.random_bool(0.5);
            let mut start = truth.clone();
            for pose in [&mut start.right, &mut start.left] {
                let hand = model.forward(pose)?;
                let centroid = hand.vertices.iter().sum::<Vec3>() / hand.len() as f64;
                let out_dir = (centroid - objects[k].center()).normalize();
                let mag = if penetrating {
                    -rng.random_range(0.002..0.006)
                } else {
                    rng.random_range(0.01..0.03)
                };
                pose.trans += out_dir * mag;
            }
            out.push(RefineFixture {
                object: k,
                truth: truth.clone(),
                start,
                directions: dirs.clone(),
                penetrating,
            });
        }
        if !any {
            break;
        }
        round += 1;
    }
    Ok(out)
}

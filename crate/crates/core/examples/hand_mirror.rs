//! Forward kinematics of the articulated hand and chirality mirroring.
//! Writes `hands.obj` with a posed right hand and its mirror image.
//!
//!     cargo run --release --example hand_mirror [out.obj]

use dualgrasp::geometry::{io::obj_points, Axis, Vec3};
use dualgrasp::hand::{mirror_pose, Chirality, HandModel, HandPose, Part};

fn main() -> dualgrasp::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "hands.obj".into());
    let model = HandModel::default_arc();
    println!(
        "{} vertices, {} joints",
        model.num_vertices(),
        model.template().joints.len()
    );
    for (part, dofs) in model.template().dof_layout() {
        println!("  {part:?}: joints {dofs:?}");
    }

    // curl every flexion joint halfway and lift the hand off the origin
    let mut theta = [0.0; 22];
    for (t, j) in theta.iter_mut().zip(&model.template().joints) {
        *t = 0.5 * (j.limits[0] + j.limits[1]);
    }
    let rot = *nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 0.4).matrix();
    let right = HandPose::from_matrix(Chirality::Right, Vec3::new(0.12, 0.0, 0.05), &rot, theta);
    let left = mirror_pose(&right, Axis::X);

    let (r, l) = (model.forward(&right)?, model.forward(&left)?);
    let err = r
        .vertices
        .iter()
        .zip(&l.vertices)
        .map(|(a, b)| (Axis::X.reflect(a) - b).norm())
        .fold(0.0, f64::max);
    println!("max |reflect(FK(right)) - FK(mirror(right))| = {err:.1e} m");
    let tips = r
        .fingertips()
        .filter(|(i, _)| r.part_of_vertex[*i] == Part::Index)
        .count();
    println!("index fingertip vertices: {tips}");

    let text = obj_points("right", &r.vertices) + &obj_points("left", &l.vertices);
    std::fs::write(&out, text)?;
    println!("wrote {out}");
    Ok(())
}

//! Pseudo-symmetry planes of the procedural objects, plus a lopsided
//! object where the best plane is only approximately symmetric.
//!
//!     cargo run --release --example symmetry_plane

use dualgrasp::geometry::{primitives, TriMesh, Vec3};
use dualgrasp::object::ObjectModel;
use dualgrasp::symmetry::detect_symmetry_plane;
use dualgrasp::symopt::fixtures::suite_objects;

fn main() -> dualgrasp::Result<()> {
    let mut objects = suite_objects(0)?;
    // a box with a knob on one side: mirror-symmetric in y and z only
    let body = primitives::box_mesh_subdivided(Vec3::new(0.05, 0.03, 0.03), 3);
    let knob = primitives::icosphere(0.015, 2).translated(&Vec3::new(0.05, 0.0, 0.0));
    objects.push(ObjectModel::from_mesh(
        "knobbed_box",
        TriMesh::concat(&[body, knob]),
        2048,
        0,
    )?);

    println!(
        "{:<12} {:>4} {:>12} {:>12} {:>12}",
        "object", "axis", "chamfer x", "chamfer y", "chamfer z"
    );
    for obj in &objects {
        let r = detect_symmetry_plane(obj)?;
        let scale = obj.diameter().powi(2);
        println!(
            "{:<12} {:>4} {:>12.2e} {:>12.2e} {:>12.2e}",
            obj.id,
            format!("{:?}", r.axis),
            r.chamfer[0] / scale,
            r.chamfer[1] / scale,
            r.chamfer[2] / scale
        );
    }
    println!("(Chamfer over squared diameter; sampling noise alone is ~1e-3)");
    Ok(())
}

//! Contact map, part map and affordance directions of a dual grasp.
//!
//!     cargo run --release --example contact_maps

use dualgrasp::contact::{contact_representation, ContactConfig, HandContact};
use dualgrasp::hand::{HandModel, Part, NO_CONTACT};
use dualgrasp::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use dualgrasp::symopt::{run_symopt, EnergyConfig, GraspStatus};

fn show(name: &str, hc: &HandContact) {
    let touching = hc.contact.iter().filter(|&&c| c >= 0.4).count();
    println!("{name}: {touching} object points in contact");
    for part in Part::ALL {
        let b = part.index();
        let n = hc.parts.iter().filter(|&&p| p == b).count();
        if hc.directions.mask[b] {
            let d = hc.directions.dirs[b];
            println!(
                "  {part:<7?} {n:>4} pts  dir ({:+.3}, {:+.3}, {:+.3})",
                d.x, d.y, d.z
            );
        } else {
            println!("  {part:<7?}    -");
        }
    }
    let free = hc.parts.iter().filter(|&&p| p == NO_CONTACT).count();
    println!("  no contact: {free}");
}

fn main() -> dualgrasp::Result<()> {
    let model = HandModel::default_arc();
    let obj = &suite_objects(0)?[2];
    let rights = synthetic_right_grasps(obj, 2, 3, &model)?;
    let run = run_symopt(obj, &rights, &EnergyConfig::default(), 0, &model)?;
    let Some(g) = run
        .grasps
        .iter()
        .find(|g| g.status == GraspStatus::Optimized)
    else {
        println!("no grasp survived optimization");
        return Ok(());
    };
    let rep = contact_representation(
        obj,
        &model.forward(&g.right)?,
        &model.forward(&g.left)?,
        &ContactConfig::default(),
    );
    println!("object {} with {} cloud points", obj.id, obj.cloud().len());
    show("right", &rep.right);
    show("left", &rep.left);
    Ok(())
}

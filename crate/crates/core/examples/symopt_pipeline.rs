//! Single right-hand grasps → mirrored proposals → penetration-free dual
//! grasps, on one procedural object.
//!
//!     cargo run --release --example symopt_pipeline [object-index]

use dualgrasp::hand::HandModel;
use dualgrasp::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use dualgrasp::symopt::{
    hand_hand_max_depth, hand_object_max_depth, run_symopt, EnergyConfig, GraspStatus,
};

fn main() -> dualgrasp::Result<()> {
    let k: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    let model = HandModel::default_arc();
    let objects = suite_objects(0)?;
    let obj = &objects[k % objects.len()];

    let rights = synthetic_right_grasps(obj, 4, 1, &model)?;
    let run = run_symopt(obj, &rights, &EnergyConfig::default(), 0, &model)?;
    let report = run.report.as_ref().expect("non-empty input");
    println!(
        "{}: symmetry axis {:?}, {} proposals",
        obj.id,
        report.axis,
        run.grasps.len()
    );

    for g in &run.grasps {
        match g.status {
            GraspStatus::Optimized => {
                let (r, l) = (model.forward(&g.right)?, model.forward(&g.left)?);
                let depth = hand_object_max_depth(&r, obj).max(hand_object_max_depth(&l, obj));
                println!(
                    "  optimized in {:>3} iters  E {:.2e} -> {:.2e}  obj depth {:.2} mm  hand-hand {:.2} mm",
                    g.energy_trace.len(),
                    g.energy_trace.first().unwrap_or(&0.0),
                    g.energy_trace.last().unwrap_or(&0.0),
                    depth * 1e3,
                    hand_hand_max_depth(&r, &l) * 1e3
                );
            }
            _ => println!(
                "  {:?}: {}",
                g.status,
                g.diagnostic.as_deref().unwrap_or("")
            ),
        }
    }
    println!(
        "kept {}/{}",
        run.count(GraspStatus::Optimized),
        run.grasps.len()
    );
    Ok(())
}

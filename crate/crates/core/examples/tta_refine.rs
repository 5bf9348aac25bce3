//! Test-time refinement of displaced dual grasps back onto the object,
//! guided by the affordance directions of the original grasp.
//!
//!     cargo run --release --example tta_refine [fixtures]

use dualgrasp::hand::HandModel;
use dualgrasp::object::ObjectModel;
use dualgrasp::symopt::fixtures::{
    fingertip_distances, refine_fixtures, symmetric_suite, DENSE_CLOUD_POINTS,
};
use dualgrasp::symopt::hand_object_max_depth;
use dualgrasp::tta::{refine, TtaConfig};

fn main() -> dualgrasp::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    let model = HandModel::default_arc();
    let objects = symmetric_suite()
        .into_iter()
        .enumerate()
        .map(|(k, (id, mesh))| ObjectModel::from_mesh(id, mesh, DENSE_CLOUD_POINTS, k as u64))
        .collect::<dualgrasp::Result<Vec<_>>>()?;
    let fixtures = refine_fixtures(&objects, n, 4e-3, 7, &model)?;
    let cfg = TtaConfig::default();
    println!(
        "{:<9} {:<11} {:>17} {:>17} {:>9}",
        "object", "start", "tip AD before", "tip AD after", "depth"
    );
    for f in &fixtures {
        let obj = &objects[f.object];
        let before = fingertip_distances(
            &model.forward(&f.start.right)?,
            &model.forward(&f.start.left)?,
            obj,
        );
        let out = refine(&f.start, obj, &f.directions, &cfg, &model);
        let (r, l) = (
            model.forward(&out.grasp.right)?,
            model.forward(&out.grasp.left)?,
        );
        let after = fingertip_distances(&r, &l, obj);
        let depth = hand_object_max_depth(&r, obj).max(hand_object_max_depth(&l, obj));
        println!(
            "{:<9} {:<11} {:>7.1} /{:>6.1} mm {:>7.1} /{:>6.1} mm {:>6.2} mm   E_T {:.4} -> {:.4}",
            obj.id,
            if f.penetrating {
                "penetrating"
            } else {
                "floating"
            },
            before[0] * 1e3,
            before[1] * 1e3,
            after[0] * 1e3,
            after[1] * 1e3,
            depth * 1e3,
            out.trace[0],
            out.trace.last().unwrap()
        );
    }
    Ok(())
}

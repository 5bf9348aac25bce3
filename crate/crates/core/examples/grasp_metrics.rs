//! Q1, penetration and diversity over SymOpt output on a few objects,
//! printed as one results table.
//!
//!     cargo run --release --example grasp_metrics

use dualgrasp::contact::ContactConfig;
use dualgrasp::hand::HandModel;
use dualgrasp::metrics::{metrics_report, MetricsConfig};
use dualgrasp::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use dualgrasp::symopt::{run_symopt, EnergyConfig, GraspStatus};

fn main() -> dualgrasp::Result<()> {
    let model = HandModel::default_arc();
    for obj in suite_objects(0)?.iter().step_by(3) {
        let rights = synthetic_right_grasps(obj, 3, 4, &model)?;
        let run = run_symopt(obj, &rights, &EnergyConfig::default(), 0, &model)?;
        let hands = run
            .grasps
            .iter()
            .filter(|g| g.status == GraspStatus::Optimized)
            .map(|g| {
                Ok((
                    obj.id.clone(),
                    model.forward(&g.right)?,
                    model.forward(&g.left)?,
                ))
            })
            .collect::<dualgrasp::Result<Vec<_>>>()?;
        if hands.is_empty() {
            continue;
        }
        let report = metrics_report(
            obj,
            &hands,
            &MetricsConfig::default(),
            &ContactConfig::default(),
        )?;
        println!("{} ({} grasps)", obj.id, hands.len());
        print!("{}", report.table());
    }
    Ok(())
}

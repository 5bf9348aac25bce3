//! Training loss terms for a noisy prediction of a dual grasp and its
//! contact representation.
//!
//!     cargo run --release --example training_losses

use dualgrasp::contact::{contact_representation, one_hot, ContactConfig};
use dualgrasp::hand::HandModel;
use dualgrasp::losses::{loss_contact, loss_hand, loss_part, loss_pen, LossConfig, LossTerms};
use dualgrasp::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use dualgrasp::symopt::{run_symopt, EnergyConfig, GraspStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dualgrasp::Result<()> {
    let model = HandModel::default_arc();
    let cfg = LossConfig::default();
    let obj = &suite_objects(0)?[0];
    let run = run_symopt(
        obj,
        &synthetic_right_grasps(obj, 2, 0, &model)?,
        &EnergyConfig::default(),
        0,
        &model,
    )?;
    let g = run
        .grasps
        .iter()
        .find(|g| g.status == GraspStatus::Optimized)
        .expect("a clean grasp");
    let truth = [g.right.clone(), g.left.clone()];
    let rep = contact_representation(
        obj,
        &model.forward(&g.right)?,
        &model.forward(&g.left)?,
        &ContactConfig::default(),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for noise in [0.0, 0.01, 0.05, 0.2] {
        let mut pred = truth.clone();
        for p in pred.iter_mut() {
            let mut v = p.to_params();
            for x in v.iter_mut() {
                *x += noise * rng.random_range(-1.0..1.0);
            }
            p.set_params(&v);
        }
        let cpred: Vec<f64> = rep
            .right
            .contact
            .iter()
            .map(|c| (c + noise * rng.random_range(-1.0..1.0)).clamp(0.0, 1.0))
            .collect();
        let truth_parts: Vec<Vec<f64>> = one_hot(&rep.right.parts)
            .iter()
            .map(|r| r.to_vec())
            .collect();
        let pred_parts: Vec<Vec<f64>> = truth_parts
            .iter()
            .map(|r| {
                let k = r.len() as f64;
                r.iter()
                    .map(|x| (1.0 - noise) * x + noise / k + 1e-9)
                    .collect::<Vec<_>>()
            })
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        let terms = LossTerms {
            contact: loss_contact(&rep.right.contact, &cpred, cfg.lambda_w)?.0,
            part: loss_part(&truth_parts, &pred_parts)?.0,
            hand: loss_hand(&truth, &pred, obj.diameter(), &cfg, &model)?.0,
            pen: loss_pen(&model.forward(&pred[0])?, &model.forward(&pred[1])?, obj),
        };
        println!(
            "noise {noise:<5} L_con {:.4}  L_part {:.4}  L_hand {:.4}  L_pen {:.4}  total {:.4}",
            terms.contact,
            terms.part,
            terms.hand,
            terms.pen,
            terms.total(&cfg)
        );
    }
    Ok(())
}

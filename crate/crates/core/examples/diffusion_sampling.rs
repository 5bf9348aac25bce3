//! Trains the small denoiser on two synthetic affordance types and samples
//! each with classifier-free guidance.
//!
//!     cargo run --release --example diffusion_sampling

use dualgrasp::ddpm::{reverse_sample, AffordanceState, DdpmSchedule, ToyDenoiser, TrainConfig};
use dualgrasp::geometry::Vec3;

fn template(k: usize) -> AffordanceState {
    let mut s = AffordanceState::zeros(12);
    // type 0 touches with thumb and index from +x, type 1 with the palm from -y
    let on: &[(usize, Vec3)] = if k == 0 {
        &[
            (0, Vec3::new(1.0, 0.2, 0.0)),
            (1, Vec3::new(1.0, -0.2, 0.0)),
            (6, Vec3::new(-1.0, 0.2, 0.0)),
        ]
    } else {
        &[
            (5, Vec3::new(0.0, -1.0, 0.0)),
            (11, Vec3::new(0.0, 1.0, 0.0)),
        ]
    };
    for (i, d) in on {
        s.mask[*i] = 1.0;
        s.dirs[*i] = d.normalize();
    }
    s
}

fn main() -> dualgrasp::Result<()> {
    let schedule = DdpmSchedule::linear(100, 1e-4, 0.05)?;
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
        .map(|k| {
            (
                template(k).flat(),
                if k == 0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                },
            )
        })
        .collect();
    let mut den = ToyDenoiser::new(48, 2, 64, schedule.steps(), 0);
    let report = den.train(
        &data,
        &schedule,
        &TrainConfig {
            iters: 1500,
            ..Default::default()
        },
    )?;
    let (head, tail) = report.head_tail(100);
    println!(
        "loss {head:.3} -> {tail:.3}; condition dropped in {}/{} draws",
        report.dropped, report.draws
    );

    for (k, cond) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
        let want = template(k);
        for guidance in [0.0, 2.0] {
            let mut hits = 0;
            for seed in 0..10 {
                let out = reverse_sample(&mut den, &schedule, Some(cond), guidance, 48, seed)?;
                hits += (out.state.mask == want.mask) as usize;
            }
            println!("type {k}, guidance {guidance}: mask matches in {hits}/10 samples");
        }
    }
    Ok(())
}

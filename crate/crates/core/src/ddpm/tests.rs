use super::*;
use rand::Rng;
use std::cell::Cell;

fn schedule() -> DdpmSchedule {
    DdpmConfig::default().schedule().unwrap()
}

/// A valid post-sampling state: unit directions where the mask is on.
fn planted(rng: &mut ChaCha8Rng) -> AffordanceState {
    let mut s = AffordanceState::zeros(2 * NUM_PARTS);
    for i in 0..s.len() {
        if rng.random_bool(0.5) {
            s.mask[i] = 1.0;
            s.dirs[i] = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
            .normalize();
        }
    }
    s
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn schedule_is_monotone() {
    let s = schedule();
    assert_eq!(s.steps(), 1000);
    assert_eq!(s.alpha_bar(0), 1.0);
    assert!((s.beta(1) - 1e-4).abs() < 1e-18 && (s.beta(1000) - 0.02).abs() < 1e-15);
    for t in 1..1000 {
        assert!(s.beta(t) < s.beta(t + 1));
        assert!(s.alpha_bar(t + 1) < s.alpha_bar(t));
        assert!(s.alpha_bar(t) > 0.0 && s.alpha_bar(t) < 1.0);
    }
    assert!(DdpmSchedule::linear(1000, 0.02, 1e-4).is_err());
    assert!(DdpmSchedule::linear(1, 1e-4, 0.02).is_err());
    assert!(DdpmSchedule::linear(10, 1e-4, 1.0).is_err());
}

#[test]
fn forward_noise_limits_and_inversion() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = schedule();
    let x0 = planted(&mut rng).flat();
    let eps = normals(&mut rng, x0.len());
    assert_eq!(forward_noise(&x0, 0, &eps, &s).unwrap(), x0);
    let steep = DdpmSchedule::linear(1000, 0.5, 0.999).unwrap();
    let xt = forward_noise(&x0, 1000, &eps, &steep).unwrap();
    for (a, b) in xt.iter().zip(&eps) {
        assert!((a - b).abs() < 1e-12);
    }
    for t in [1, 10, 500, 1000] {
        let xt = forward_noise(&x0, t, &eps, &s).unwrap();
        let back = recover_x0(&xt, t, &eps, &s).unwrap();
        for (a, b) in back.iter().zip(&x0) {
            assert!((a - b).abs() < 1e-9, "t={t}");
        }
    }
    assert!(forward_noise(&x0, 1001, &eps, &s).is_err());
    assert!(forward_noise(&x0, 5, &eps[1..], &s).is_err());
}

#[test]
fn forward_noise_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = schedule();
    let t = 300;
    let x0 = [0.8, -0.5, 1.0, 0.0];
    let n = 100_000;
    let mut sum = [0.0; 4];
    let mut sq = [0.0; 4];
    for _ in 0..n {
        let eps = normals(&mut rng, 4);
        let xt = forward_noise(&x0, t, &eps, &s).unwrap();
        for k in 0..4 {
            sum[k] += xt[k];
            sq[k] += xt[k] * xt[k];
        }
    }
    let ab = s.alpha_bar(t);
    for k in 0..4 {
        let mean = sum[k] / n as f64;
        let var = sq[k] / n as f64 - mean * mean;
        let want = ab.sqrt() * x0[k];
        // relative 2%, absolute floor where the expected mean is zero
        assert!(
            (mean - want).abs() <= 0.02 * want.abs().max(0.5),
            "{mean} {want}"
        );
        assert!((var / (1.0 - ab) - 1.0).abs() < 0.02, "{var}");
    }
}

#[test]
fn guidance_algebra() {
    let u = [0.1, -0.4, 2.0];
    let c = [1.0, 0.5, -1.0];
    assert_eq!(guidance_combine(&u, &c, 1.0).unwrap(), c.to_vec());
    assert_eq!(guidance_combine(&u, &c, 0.0).unwrap(), u.to_vec());
    for s in [-1.0, 0.5, 2.0, 3.5, 7.0] {
        let g = guidance_combine(&u, &c, s).unwrap();
        for k in 0..3 {
            assert!((g[k] - (u[k] + s * (c[k] - u[k]))).abs() < 1e-15);
        }
    }
    assert!(guidance_combine(&u, &c[..2], 1.0).is_err());
}

#[test]
fn plant_and_recover() {
    let s = schedule();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..3 {
        let x0 = planted(&mut rng);
        let flat = x0.flat();
        let sc = s.clone();
        let mut oracle = |x: &[f64], t: usize, _: Option<&[f64]>| -> Vec<f64> {
            let ab = sc.alpha_bar(t);
            x.iter()
                .zip(&flat)
                .map(|(xt, x0)| (xt - ab.sqrt() * x0) / (1.0 - ab).sqrt())
                .collect()
        };
        let out = reverse_sample(&mut oracle, &s, None, 0.0, flat.len(), seed).unwrap();
        for (a, b) in out.raw.iter().zip(&x0.flat()) {
            assert!((a - b).abs() < 1e-3, "{a} {b}");
        }
        assert_eq!(out.state.mask, x0.mask);
        for (a, b) in out.state.dirs.iter().zip(&x0.dirs) {
            assert!((a - b).amax() < 1e-3);
        }
    }
}

#[test]
fn zero_guidance_never_calls_the_conditional_branch() {
    let s = DdpmSchedule::linear(50, 1e-4, 0.02).unwrap();
    let calls = [Cell::new(0), Cell::new(0)];
    let mut den = |x: &[f64], _t: usize, c: Option<&[f64]>| -> Vec<f64> {
        calls[usize::from(c.is_some())].set(calls[usize::from(c.is_some())].get() + 1);
        x.iter()
            .map(|v| 0.1 * v + c.map_or(0.0, |c| c[0]))
            .collect()
    };
    let cond = [1.0, 0.0];
    let a = reverse_sample(&mut den, &s, Some(&cond), 0.0, 48, 7).unwrap();
    assert_eq!((calls[0].get(), calls[1].get()), (50, 0));
    let b = reverse_sample(&mut den, &s, None, 2.0, 48, 7).unwrap();
    assert_eq!(a, b);
    let c = reverse_sample(&mut den, &s, Some(&cond), 2.0, 48, 7).unwrap();
    assert_eq!(calls[1].get(), 50);
    assert_ne!(a.raw, c.raw);
}

#[test]
fn zero_denoiser_follows_the_closed_form() {
    let s = DdpmSchedule::linear(100, 1e-4, 0.02).unwrap();
    let dim = 48;
    let mut zero = |x: &[f64], _: usize, _: Option<&[f64]>| vec![0.0; x.len()];
    let out = reverse_sample(&mut zero, &s, None, 0.0, dim, 11).unwrap();
    // x₀ = x_T/√ᾱ_T + Σ_{t≥2} √β_t z_t/√ᾱ_{t−1}, same draw order
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xt = normals(&mut rng, dim);
    let mut want: Vec<f64> = xt.iter().map(|x| x / s.alpha_bar(100).sqrt()).collect();
    for t in (2..=100).rev() {
        let z = normals(&mut rng, dim);
        for k in 0..dim {
            want[k] += s.beta(t).sqrt() * z[k] / s.alpha_bar(t - 1).sqrt();
        }
    }
    for (a, b) in out.raw.iter().zip(&want) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} {b}");
    }
}

#[test]
fn sampling_is_reproducible_and_checks_output() {
    let s = DdpmSchedule::linear(30, 1e-4, 0.02).unwrap();
    let mut den = |x: &[f64], t: usize, _: Option<&[f64]>| {
        x.iter()
            .map(|v| v * (t as f64 / 30.0))
            .collect::<Vec<f64>>()
    };
    let a = reverse_sample(&mut den, &s, None, 0.0, 48, 5).unwrap();
    let b = reverse_sample(&mut den, &s, None, 0.0, 48, 5).unwrap();
    assert_eq!(a, b);
    assert!(a
        .raw
        .iter()
        .zip(&b.raw)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(reverse_sample(&mut den, &s, None, 0.0, 48, 6).unwrap(), a);

    let mut nan = |x: &[f64], t: usize, _: Option<&[f64]>| {
        vec![if t == 20 { f64::NAN } else { 0.0 }; x.len()]
    };
    let err = reverse_sample(&mut nan, &s, None, 0.0, 48, 5).unwrap_err();
    assert!(err.to_string().contains("step 20"), "{err}");
    let mut short = |_: &[f64], _: usize, _: Option<&[f64]>| vec![0.0; 3];
    assert!(reverse_sample(&mut short, &s, None, 0.0, 48, 5).is_err());
    assert!(reverse_sample(&mut short, &s, None, 0.0, 47, 5).is_err());
}

#[test]
fn state_round_trips_through_hand_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = planted(&mut rng);
    let hands = s.to_hands().unwrap();
    let back = AffordanceState::from_hands(&hands);
    assert_eq!(back.mask, s.mask);
    assert!(back
        .dirs
        .iter()
        .zip(&s.dirs)
        .all(|(a, b)| (a - b).amax() < 1e-15));
    assert_eq!(AffordanceState::from_flat(&s.flat()).unwrap(), s);
    let mut raw = s.clone();
    raw.mask[0] = 0.49;
    raw.dirs[0] = Vec3::x();
    let b = raw.binarized();
    assert_eq!((b.mask[0], b.dirs[0]), (0.0, Vec3::zeros()));
}

#[test]
fn condition_drop_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 10_000;
    let dropped = (0..n).filter(|_| condition_dropped(&mut rng, 0.1)).count();
    let rate = dropped as f64 / n as f64;
    assert!((rate - 0.1).abs() <= 0.01, "{rate}");
}

#[test]
fn toy_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let net = ToyDenoiser::new(8, 2, 6, 100, 1);
    let x = normals(&mut rng, 8);
    let dy = normals(&mut rng, 8);
    for cond in [None, Some([0.3, -1.0])] {
        let g = net.param_grad(&x, 37, cond.as_ref().map(|c| c.as_slice()), &dy);
        for i in (0..net.params.len()).step_by(3) {
            let f = |h: f64| {
                let mut n = net.clone();
                n.params[i] += h;
                n.predict(&x, 37, cond.as_ref().map(|c| c.as_slice()))
                    .iter()
                    .zip(&dy)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let fd = (f(1e-6) - f(-1e-6)) / 2e-6;
            assert!(
                (g[i] - fd).abs() <= 1e-6 * fd.abs().max(1.0),
                "param {i}: {} {fd}",
                g[i]
            );
        }
    }
}

/// Two classes with different mask patterns; the conditioned samples should
/// land on their class's mask.
#[test]
fn toy_training_learns_conditional_masks() {
    let s = DdpmSchedule::linear(100, 1e-4, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let classes = [planted(&mut rng), planted(&mut rng)];
    let data: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
        .map(|k| {
            (
                classes[k].flat(),
                if k == 0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                },
            )
        })
        .collect();
    let mut net = ToyDenoiser::new(48, 2, 96, 100, 2);
    let report = net
        .train(
            &data,
            &s,
            &TrainConfig {
                iters: 1500,
                ..Default::default()
            },
        )
        .unwrap();
    let (head, tail) = report.head_tail(100);
    assert!(tail < 0.5 * head, "{head} {tail}");
    let rate = report.dropped as f64 / report.draws as f64;
    assert!((rate - 0.1).abs() <= 0.01, "{rate}");
    let mut hits = 0;
    for seed in 0..10 {
        let k = seed as usize % 2;
        let out = reverse_sample(&mut net, &s, Some(&data[k].1), 2.0, 48, seed).unwrap();
        hits += usize::from(out.state.mask == classes[k].mask);
    }
    assert!(hits >= 8, "{hits}/10");
}

use super::*;
use crate::geometry::{primitives, Vec3};
use crate::hand::{Chirality, HandSurface, Part, NUM_DOF};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn external(chirality: Chirality, vertices: Vec<Vec3>) -> HandSurface {
    let n = vertices.len();
    HandSurface::from_external(chirality, vertices, vec![Part::Palm; n], vec![false; n]).unwrap()
}

fn sphere(r: f64) -> ObjectModel {
    ObjectModel::from_mesh("sphere", primitives::icosphere(r, 4), 2048, 0).unwrap()
}

fn at(chirality: Chirality, trans: Vec3) -> HandPose {
    let mut p = HandPose::identity(chirality);
    p.trans = trans;
    p
}

#[test]
fn phh_sums_depths() {
    let model = HandModel::default_arc();
    let right = model
        .forward(&HandPose::identity(Chirality::Right))
        .unwrap();
    let left = external(
        Chirality::Left,
        [0.001, 0.002, 0.003]
            .iter()
            .map(|d| Vec3::new(0.0, 0.045, -0.015 + d))
            .collect(),
    );
    assert!((energy_phh(&left, &right) - 0.006).abs() < 1e-9);

    let far = model
        .forward(&at(Chirality::Left, Vec3::new(0.1, 0.0, 0.0) * 3.0))
        .unwrap();
    assert_eq!(energy_phh(&far, &right), 0.0);
    let overlap = model
        .forward(&at(Chirality::Left, Vec3::new(0.01, 0.0, 0.0)))
        .unwrap();
    assert!(energy_phh(&overlap, &right) > 0.0);
}

#[test]
fn pho_matches_depth_and_is_additive() {
    let obj = sphere(0.05);
    let v = Vec3::new(1.0, 2.0, -0.5).normalize() * (0.05 - 0.002);
    let one = external(Chirality::Right, vec![v]);
    let none = external(Chirality::Left, vec![Vec3::new(1.0, 0.0, 0.0)]);
    let e = energy_pho(&one, &none, &obj);
    assert!((e - 0.002).abs() < 1e-4, "{e}");
    let two = external(Chirality::Right, vec![v, v]);
    assert!((energy_pho(&two, &none, &obj) - 2.0 * e).abs() < 1e-15);
    assert_eq!(energy_pho(&none, &none, &obj), 0.0);
}

fn perturbed(rng: &mut ChaCha8Rng, base: &HandPose, model: &HandModel) -> HandPose {
    let mut p = base.clone();
    for (t, spec) in p.theta.iter_mut().zip(&model.template().joints) {
        let [lo, hi] = spec.limits;
        *t = rng.random_range(lo + 0.05..hi - 0.05);
    }
    for r in p.rot6d.iter_mut() {
        *r += rng.random_range(-0.2..0.2);
    }
    p
}

/// Central-difference check of a scalar function of both pose vectors.
fn check_grad(
    f: &dyn Fn(&HandPose, &HandPose) -> f64,
    right: &HandPose,
    left: &HandPose,
    gr: &[f64],
    gl: &[f64],
) {
    let h = 1e-7;
    let mut fd = Vec::new();
    for which in 0..2 {
        for k in 0..NUM_POSE_PARAMS {
            let (mut rp, mut lp) = (right.clone(), left.clone());
            let (mut rm, mut lm) = (right.clone(), left.clone());
            let (target_p, target_m) = if which == 0 {
                (&mut rp, &mut rm)
            } else {
                (&mut lp, &mut lm)
            };
            let mut v = target_p.to_params();
            v[k] += h;
            target_p.set_params(&v);
            v[k] -= 2.0 * h;
            target_m.set_params(&v);
            fd.push((f(&rp, &lp) - f(&rm, &lm)) / (2.0 * h));
        }
    }
    let an: Vec<f64> = gr.iter().chain(gl).copied().collect();
    let err: f64 = fd
        .iter()
        .zip(&an)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = an.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
    assert!(err / scale < 1e-3, "gradient mismatch {err} / {scale}");
}

#[test]
fn dual_energy_gradients_match_finite_differences() {
    let model = HandModel::default_arc();
    let obj = sphere(0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 4 {
        let right = perturbed(
            &mut rng,
            &at(Chirality::Right, Vec3::new(0.0, -0.04, 0.06)),
            &model,
        );
        let left = perturbed(
            &mut rng,
            &at(Chirality::Left, Vec3::new(0.01, -0.02, 0.07)),
            &model,
        );
        let (sr, sl) = (
            model.forward(&right).unwrap(),
            model.forward(&left).unwrap(),
        );
        let e = dual_energy(&sr, &sl, &obj, 1.0, 1.0);
        if e.phh == 0.0 || e.pho == 0.0 {
            continue;
        }
        // skip configurations with a vertex on a membership boundary
        let near_boundary = sl.vertices.iter().chain(&sr.vertices).any(|v| {
            let w = obj.classify(v).winding;
            (w - 0.5).abs() < 0.05 && obj.closest(v).distance < 1e-5
        });
        if near_boundary {
            continue;
        }
        let f = |r: &HandPose, l: &HandPose| {
            let (sr, sl) = (model.forward(r).unwrap(), model.forward(l).unwrap());
            energy_phh(&sl, &sr) + energy_pho(&sr, &sl, &obj)
        };
        check_grad(&f, &right, &left, &e.grad_right, &e.grad_left);
        checked += 1;
    }
}

#[test]
fn zero_energy_exits_immediately() {
    let model = HandModel::default_arc();
    let obj = sphere(0.03);
    let g = DualGrasp::proposal(
        "s",
        at(Chirality::Right, Vec3::new(0.0, 0.0, 0.2)),
        at(Chirality::Left, Vec3::new(0.0, 0.0, -0.2)),
    );
    let out = optimize_dual_grasp(&g, &obj, &EnergyConfig::default(), &model);
    assert_eq!(out.status, GraspStatus::Optimized);
    assert_eq!(out.energy_trace, vec![0.0]);
    assert_eq!((out.right, out.left), (g.right, g.left));
}

#[test]
fn left_hand_is_pushed_out_of_object() {
    let model = HandModel::default_arc();
    let obj = sphere(0.05);
    let right = at(Chirality::Right, Vec3::new(0.0, 0.0, 0.3));
    // left palm underside 3 mm below the sphere top
    let mut left = HandPose::identity(Chirality::Left);
    left.trans = Vec3::new(0.0, -0.045, 0.05 + 0.015 - 0.003);
    let sl = model.forward(&left).unwrap();
    assert!(interior_count(&sl, &obj) > 0);
    let out = optimize_dual_grasp(
        &DualGrasp::proposal("s", right.clone(), left),
        &obj,
        &EnergyConfig::default(),
        &model,
    );
    assert_eq!(out.status, GraspStatus::Optimized, "{:?}", out.diagnostic);
    let sl = model.forward(&out.left).unwrap();
    assert!(hand_object_max_depth(&sl, &obj) < 1e-3);
    assert!(out.energy_trace.last().unwrap() < &out.energy_trace[0]);
    assert!((out.right.trans - right.trans).norm() < 1e-12);
}

#[test]
fn deep_hand_overlap_is_discarded() {
    let model = HandModel::default_arc();
    let obj = sphere(0.03);
    let right = at(Chirality::Right, Vec3::new(0.0, 0.0, 0.3));
    let left = at(Chirality::Left, Vec3::new(0.0, 0.0, 0.3 - 0.02));
    let out = optimize_dual_grasp(
        &DualGrasp::proposal("s", right, left),
        &obj,
        &EnergyConfig::default(),
        &model,
    );
    assert_eq!(out.status, GraspStatus::Discarded);
    assert!(out.energy_trace.is_empty());
    assert!(out.diagnostic.unwrap().contains("hand-hand depth"));
}

#[test]
fn config_validation() {
    assert!(EnergyConfig::default().validate().is_ok());
    let bad = EnergyConfig {
        lambda_phh: -1.0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
    let bad = EnergyConfig {
        max_iters: 0,
        ..Default::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn run_symopt_on_cylinder() {
    let model = HandModel::default_arc();
    let obj = &fixtures::suite_objects(0).unwrap()[5];
    let cfg = EnergyConfig::default();
    let empty = run_symopt(obj, &[], &cfg, 0, &model).unwrap();
    assert!(empty.grasps.is_empty() && empty.report.is_none());

    let rights = fixtures::synthetic_right_grasps(obj, 4, 2, &model).unwrap();
    let run = run_symopt(obj, &rights, &cfg, 9, &model).unwrap();
    assert_eq!(run.grasps.len(), 16);
    assert!(
        run.count(GraspStatus::Optimized) >= 4,
        "{}",
        run.count(GraspStatus::Optimized)
    );
    for g in run
        .grasps
        .iter()
        .filter(|g| g.status == GraspStatus::Optimized)
    {
        let (sr, sl) = (
            model.forward(&g.right).unwrap(),
            model.forward(&g.left).unwrap(),
        );
        assert!(energy_phh(&sl, &sr) < cfg.stop_phh);
        assert!(energy_pho(&sr, &sl, obj) < cfg.stop_pho);
        assert_eq!(sl.chirality, Chirality::Left);
    }
    let again = run_symopt(obj, &rights, &cfg, 9, &model).unwrap();
    assert_eq!(run.grasps, again.grasps);
    let _ = NUM_DOF;
}

use super::*;
use crate::contact::{ContactRepresentation, HandContact, HandDirections};
use crate::hand::NO_CONTACT;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pose(rng: &mut ChaCha8Rng, chirality: Chirality) -> HandPose {
    let mut p = HandPose::identity(chirality);
    p.trans = Vec3::new(
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
    );
    for r in p.rot6d.iter_mut() {
        *r += rng.random_range(-0.3..0.3);
    }
    for t in p.theta.iter_mut() {
        *t = rng.random_range(-0.5..1.2);
    }
    p
}

fn hand_line(rng: &mut ChaCha8Rng) -> String {
    SingleHandRecord {
        object: format!("obj{}", rng.random_range(0..4)),
        scale: 0.1,
        pose: random_pose(rng, Chirality::Right),
    }
    .to_json()
}

#[test]
fn ingests_well_formed_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let line = hand_line(&mut rng);
    let p = parse_single_hand(&line);
    assert_eq!(p.records.len(), 1);
    assert!(p.errors.is_empty());
    assert_eq!(p.records[0].to_json(), line);
}

#[test]
fn short_theta_is_rejected_with_its_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let good = hand_line(&mut rng);
    let mut v: serde_json::Value = serde_json::from_str(&hand_line(&mut rng)).unwrap();
    v["theta"].as_array_mut().unwrap().pop();
    let text = format!("{good}\n{v}\n");
    let p = parse_single_hand(&text);
    assert_eq!(p.records.len(), 1);
    assert_eq!(p.errors.len(), 1);
    assert_eq!(p.errors[0].line, 2);
    assert!(
        p.errors[0].message.contains("theta has 21 entries"),
        "{}",
        p.errors[0]
    );
}

#[test]
fn thousand_lines_with_three_corrupt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut lines: Vec<String> = (0..1000).map(|_| hand_line(&mut rng)).collect();
    lines[10] = "{not json".into();
    lines[500] = lines[500].replace("\"rot6d\":[", "\"rot6d\":[0.0,0.0,0.0,0.0,0.0,0.0],\"x\":[");
    let mut v: serde_json::Value = serde_json::from_str(&lines[999]).unwrap();
    v["rot6d"] = serde_json::json!([0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    lines[999] = v.to_string();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("hands.jsonl");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let p = ingest_single_hand(&path).unwrap();
    assert_eq!(p.records.len(), 997);
    let at: Vec<usize> = p.errors.iter().map(|e| e.line).collect();
    assert_eq!(at, vec![11, 501, 1000]);
    let groups = group_by_object(&p.records);
    assert_eq!(groups.values().map(Vec::len).sum::<usize>(), 997);
}

fn synthetic_contact(rng: &mut ChaCha8Rng, n: usize) -> ContactRepresentation {
    let hand = |rng: &mut ChaCha8Rng| {
        let contact: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let parts = contact
            .iter()
            .map(|&c| {
                if c >= 0.4 {
                    rng.random_range(0..NO_CONTACT)
                } else {
                    NO_CONTACT
                }
            })
            .collect();
        let mut directions = HandDirections::default();
        directions.dirs[1] = Vec3::new(0.6, 0.0, 0.8);
        directions.mask[1] = true;
        directions.degenerate[3] = true;
        HandContact {
            contact,
            parts,
            directions,
        }
    };
    ContactRepresentation {
        right: hand(rng),
        left: hand(rng),
    }
}

fn random_record(rng: &mut ChaCha8Rng) -> GraspRecord {
    GraspRecord {
        object: "bottle_3".into(),
        scale: rng.random_range(0.05..0.2),
        right: random_pose(rng, Chirality::Right),
        left: random_pose(rng, Chirality::Left),
        contact: Some(ContactBlocks::encode(&synthetic_contact(rng, 64))),
        label: Some(AffordanceLabel::new("bottle", "lid", "body").unwrap()),
        provenance: Provenance {
            status: Some(GraspStatus::Optimized),
            energy_tail: vec![0.25, 0.125, 1.0 / 3.0],
            tta: Some(TtaProvenance {
                steps: 100,
                accepted: 71,
                energy_tail: vec![0.1],
                failed: false,
            }),
            ..Default::default()
        },
    }
}

#[test]
fn record_round_trip_is_lossless() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let records: Vec<GraspRecord> = (0..20).map(|_| random_record(&mut rng)).collect();
    let mut buf = Vec::new();
    write_records(&records, &mut buf).unwrap();
    let back = parse_records(std::str::from_utf8(&buf).unwrap());
    assert!(back.errors.is_empty());
    assert_eq!(back.records, records);
    for r in &back.records {
        let rep = r.contact.as_ref().unwrap().decode().unwrap();
        assert!(rep.right.directions.degenerate[3]);
        assert_eq!(
            rep.right.directions.dirs[1],
            Vec3::new(0.6f32 as f64, 0.0, 0.8f32 as f64)
        );
    }
    let mut seen = 0;
    for_each_record(std::io::Cursor::new(&buf), |r| {
        assert!(r.is_ok());
        seen += 1;
    })
    .unwrap();
    assert_eq!(seen, 20);
}

#[test]
fn contact_blocks_round_trip_within_f32() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rep = synthetic_contact(&mut rng, 100);
    let back = ContactBlocks::encode(&rep).decode().unwrap();
    assert_eq!(back.right.parts, rep.right.parts);
    for (a, b) in back.left.contact.iter().zip(&rep.left.contact) {
        assert!((a - b).abs() <= f32::EPSILON as f64 * b.abs());
    }
}

#[test]
fn bad_record_lines_are_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let good = random_record(&mut rng).to_json();
    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["label"]["right"] = "Bottle Lid".into();
    let p = parse_records(&format!("{good}\n\n{v}\n"));
    assert_eq!(p.records.len(), 1);
    assert_eq!(p.errors[0].line, 3);
}

#[test]
fn label_rendering_grammar() {
    let l = AffordanceLabel::new("Bottle", "lid", "body").unwrap();
    assert_eq!(l.hand(Chirality::Right), "right bottle lid");
    assert_eq!(l.hand(Chirality::Left), "left bottle body");
    assert_eq!(l.text(), "right bottle lid / left bottle body");
    assert_eq!(
        AffordanceLabel::new("USBstick", "cap", "usb body")
            .unwrap()
            .hand(Chirality::Left),
        "left usbstick usb_body"
    );
    assert!(AffordanceLabel::new("", "a", "b").is_err());
    assert!(AffordanceLabel::new("bottle", "lid!", "b").is_err());
    for c in DEFAULT_CATEGORIES {
        assert_eq!(normalize_token(c), c);
    }
}

#[test]
fn fraction_threshold_is_strict() {
    assert_eq!(label_from_fractions(&[0.97, 0.03]), Some(0)); // cf. the bottle lid example
    assert_eq!(label_from_fractions(&[0.0, 1.0]), Some(1));
    assert_eq!(label_from_fractions(&[0.94, 0.06]), None);
    assert_eq!(label_from_fractions(&[0.95, 0.05]), None);
    assert_eq!(label_from_fractions(&[0.95 + 1e-6, 0.05 - 1e-6]), Some(0));
}

fn bottle_mapping(n: usize) -> PartMapping {
    PartMapping {
        category: Some("bottle".into()),
        points: (0..n).map(|i| [0.0, 0.0, i as f64]).collect(),
        part: (0..n)
            .map(|i| if i < 20 { "lid" } else { "body" }.to_string())
            .collect(),
    }
}

/// Right hand: `lid` unit contacts on lid points, `body` on body points.
fn record_with_mass(right: (usize, usize), left: (usize, usize)) -> GraspRecord {
    let n = 100;
    let hand = |(lid, body): (usize, usize)| {
        let contact: Vec<f64> = (0..n)
            .map(|i| {
                if i < lid || (20..20 + body).contains(&i) {
                    1.0
                } else {
                    0.01
                }
            })
            .collect();
        HandContact {
            parts: vec![NO_CONTACT; n],
            contact,
            directions: HandDirections::default(),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut r = random_record(&mut rng);
    r.label = None;
    r.contact = Some(ContactBlocks::encode(&ContactRepresentation {
        right: hand(right),
        left: hand(left),
    }));
    r
}

#[test]
fn label_grasp_examples() {
    let map = bottle_mapping(100);
    let out = label_grasp(&record_with_mass((20, 0), (0, 30)), &map, None, 0.4).unwrap();
    let l = out.label.unwrap();
    assert_eq!(
        (l.hand(Chirality::Right), l.hand(Chirality::Left)),
        ("right bottle lid".into(), "left bottle body".into())
    );

    // 19 of 20 units on the lid: exactly 0.95
    let out = label_grasp(&record_with_mass((19, 1), (0, 30)), &map, None, 0.4).unwrap();
    assert_eq!(out.fractions[0].as_ref().unwrap()[0], 0.95);
    assert!(out.label.is_none());

    let out = label_grasp(&record_with_mass((0, 0), (0, 30)), &map, None, 0.4).unwrap();
    assert!(out.label.is_none());
    assert!(out.diagnostic.unwrap().contains("zero contact mass"));

    let mut bare = record_with_mass((20, 0), (0, 30));
    bare.contact = None;
    assert!(label_grasp(&bare, &map, None, 0.4).is_err());
    let mut short = map.clone();
    short.part.pop();
    assert!(label_grasp(&record_with_mass((20, 0), (0, 30)), &short, None, 0.4).is_err());
}

#[test]
fn labeling_is_deterministic() {
    let map = bottle_mapping(64);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let r = random_record(&mut rng);
        let a = label_grasp(&r, &map, None, 0.4).unwrap();
        let b = label_grasp(&r, &map, None, 0.4).unwrap();
        assert_eq!(a, b);
    }
}

fn labeled(rng: &mut ChaCha8Rng, counts: &[usize]) -> Vec<GraspRecord> {
    let parts = ["lid", "body", "cap", "neck", "base"];
    let mut out = Vec::new();
    for (k, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            let mut r = random_record(rng);
            r.contact = None;
            r.label = Some(AffordanceLabel::new("bottle", parts[k], "body").unwrap());
            out.push(r);
        }
    }
    // interleave types
    for i in (1..out.len()).rev() {
        out.swap(i, rng.random_range(0..=i));
    }
    out
}

fn sorted_counts(b: &BalanceOutcome) -> Vec<usize> {
    let mut v: Vec<usize> = b.after.values().copied().collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

#[test]
fn balance_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let input = labeled(&mut rng, &[100, 30, 20]);
    let b = balance_affordances(input.clone()).unwrap();
    assert_eq!(sorted_counts(&b), vec![60, 30, 20]);
    assert_eq!(b.records.len(), 110);
    assert_eq!(
        b.truncated.as_deref(),
        Some("right bottle lid / left bottle body")
    );
    // survivors keep their original relative order
    let pos: Vec<usize> = b
        .records
        .iter()
        .map(|r| input.iter().position(|x| x == r).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));

    let input = labeled(&mut rng, &[50, 30]);
    let b = balance_affordances(input.clone()).unwrap();
    assert_eq!(b.records, input);
    let input = labeled(&mut rng, &[40]);
    assert_eq!(balance_affordances(input.clone()).unwrap().records, input);

    let mut bad = labeled(&mut rng, &[3, 1]);
    bad[0].label = None;
    assert!(balance_affordances(bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]
    #[test]
    fn balanced_top_is_at_most_twice_second(counts in prop::collection::vec(1usize..40, 2..5), seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = balance_affordances(labeled(&mut rng, &counts)).unwrap();
        let c = sorted_counts(&b);
        prop_assert!(c[0] <= 2 * c[1]);
        let mut orig = counts.clone();
        orig.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(&c[1..], &orig[1..]);
    }
}

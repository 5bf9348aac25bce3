//! Affordance labeling and balancing of dual-grasp records, written as
//! JSON Lines.
//!
//!     cargo run --release --example dataset_labels [out.jsonl]

use dualgrasp::cli::split_mapping;
use dualgrasp::contact::ContactConfig;
use dualgrasp::dataset::{
    balance_affordances, label_grasp, records_from_run, write_records, LABEL_THRESHOLD,
};
use dualgrasp::hand::HandModel;
use dualgrasp::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use dualgrasp::symopt::{run_symopt, EnergyConfig};

fn main() -> dualgrasp::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "labeled.jsonl".into());
    let model = HandModel::default_arc();
    let contact = ContactConfig::default();
    let mut labeled = Vec::new();
    for obj in &suite_objects(0)?[5..8] {
        // parts: the top 40 % of the longest axis versus the rest
        let mapping = split_mapping(obj);
        let rights = synthetic_right_grasps(obj, 4, 0, &model)?;
        let run = run_symopt(obj, &rights, &EnergyConfig::default(), 0, &model)?;
        for mut r in records_from_run(obj, &run, Some(&contact), &model)? {
            let o = label_grasp(&r, &mapping, None, contact.threshold)?;
            let shares = o
                .fractions
                .iter()
                .map(|f| {
                    format!(
                        "{:?}",
                        f.as_ref()
                            .map(|v| v.iter().map(|x| (x * 100.0).round()).collect::<Vec<_>>())
                    )
                })
                .collect::<Vec<_>>();
            match o.label {
                Some(l) => {
                    println!("{:<8} {}", obj.id, l.text());
                    r.label = Some(l);
                    labeled.push(r);
                }
                None => println!(
                    "{:<8} unlabeled: part shares (%) {}",
                    obj.id,
                    shares.join(" / ")
                ),
            }
        }
    }
    println!(
        "labeled {} records (threshold > {LABEL_THRESHOLD})",
        labeled.len()
    );
    let b = balance_affordances(labeled)?;
    for (k, n) in &b.after {
        println!("  {k}: {} -> {n}", b.before[k]);
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(&out)?);
    write_records(&b.records, &mut w)?;
    println!("wrote {} records to {out}", b.records.len());
    Ok(())
}

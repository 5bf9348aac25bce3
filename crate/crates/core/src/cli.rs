//! Command-line front end. Each subcommand reads files, calls the library
//! and writes its data file plus a `<out>.manifest.json` next to it. Logs
//! go to stderr. Exit codes: 0 ok, 1 internal error, 2 bad input.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::contact::{contact_representation, HandDirections};
use crate::dataset::{
    balance_affordances, ingest_single_hand, label_grasp, read_records, records_from_run,
    write_records, ContactBlocks, GraspRecord, PartMapping, SingleHandRecord, TtaProvenance,
};
use crate::ddpm::{reverse_sample, AffordanceState, DdpmConfig, ToyDenoiser, TrainConfig};
use crate::error::{Error, Result};
use crate::geometry::io::{obj_points, obj_scene, read_mesh};
use crate::hand::{HandModel, NUM_PARTS};
use crate::metrics::metrics_report;
use crate::object::{ObjectModel, DEFAULT_CLOUD_POINTS};
use crate::symmetry::detect_symmetry_plane;
use crate::symopt::fixtures::{suite_objects, synthetic_right_grasps};
use crate::symopt::{run_symopt, DualGrasp, GraspStatus};
use crate::tta::refine;

#[derive(Debug, Parser)]
#[command(name = "dualgrasp", version, about = "Dual-hand grasp data tools")]
pub struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

/// An object mesh and the seeded surface cloud every command derives from it.
#[derive(Debug, Clone, Args)]
pub struct ObjectArgs {
    /// OBJ or OFF mesh; its file stem is the object id.
    #[arg(long)]
    pub object: PathBuf,
    /// Surface points sampled from the mesh.
    #[arg(long, default_value_t = DEFAULT_CLOUD_POINTS)]
    pub points: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the pseudo-symmetry plane of an object.
    Symmetry {
        #[command(flatten)]
        object: ObjectArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mirror single right-hand grasps and optimize the dual grasps.
    Symopt {
        #[command(flatten)]
        object: ObjectArgs,
        /// Single-hand JSON Lines; only lines for this object are used.
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the inline contact blocks.
        #[arg(long)]
        no_contact: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Q1, penetration and diversity of dual-grasp records.
    Metrics {
        #[command(flatten)]
        object: ObjectArgs,
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep records whose hands each touch one part (> 95 % of contact mass).
    Label {
        #[arg(long)]
        grasps: PathBuf,
        /// JSON {"points": [[x,y,z]..], "part": [name..], "category"?: name}.
        #[arg(long)]
        parts: PathBuf,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cap the most frequent affordance type at twice the second.
    Balance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test-time refinement against predicted affordance directions.
    Refine {
        #[command(flatten)]
        object: ObjectArgs,
        #[arg(long)]
        grasps: PathBuf,
        /// JSON Lines of affordance states: one line for all records or one per record.
        #[arg(long)]
        dirs: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the toy denoiser on the directions stored in labeled records.
    TrainDirs {
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample affordance states with a trained denoiser.
    SampleDirs {
        /// TOML whose [ddpm] section gives the schedule and guidance scale.
        #[arg(long, alias = "config")]
        schedule: Option<PathBuf>,
        #[arg(long)]
        denoiser: PathBuf,
        /// Condition label, e.g. "right bottle lid / left bottle body".
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Object mesh and hand vertices of one record as an OBJ scene.
    Scene {
        #[command(flatten)]
        object: ObjectArgs,
        #[arg(long)]
        grasps: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the procedural fixtures.
    Fixture {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum FixtureAction {
    /// Objects, single right-hand grasps and part mappings.
    Export {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        objects: usize,
        #[arg(long, default_value_t = 4)]
        grasps: usize,
        #[arg(long, default_value_t = DEFAULT_CLOUD_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub elapsed_ms: u128,
    pub counts: BTreeMap<String, usize>,
}

impl RunManifest {
    fn new(command: &str, config: &Config, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config_digest: config.digest(),
            seed,
            ..Default::default()
        }
    }

    fn input(&mut self, p: &Path) -> &mut Self {
        self.inputs.push(p.display().to_string());
        self
    }

    fn count(&mut self, key: &str, n: usize) -> &mut Self {
        self.counts.insert(key.into(), n);
        self
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(|e| Error::file(path, e))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for it in items {
        serde_json::to_writer(&mut w, it)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn write_grasp_records(path: &Path, records: &[GraspRecord]) -> Result<()> {
    let mut w = create(path)?;
    write_records(records, &mut w)?;
    w.flush()?;
    Ok(())
}

fn finish(mut manifest: RunManifest, out: &Path, start: Instant) -> Result<()> {
    manifest.outputs.push(out.display().to_string());
    manifest.elapsed_ms = start.elapsed().as_millis();
    write_json(&manifest_path(out), &manifest)
}

fn load_object(args: &ObjectArgs, seed: u64) -> Result<ObjectModel> {
    let (mesh, _) = read_mesh(&args.object)?;
    let id = args
        .object
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("object")
        .to_string();
    ObjectModel::from_mesh(id, mesh, args.points, seed)
}

/// Parsed records; line errors are logged and counted.
fn load_records(path: &Path, manifest: &mut RunManifest) -> Result<Vec<GraspRecord>> {
    let parsed = read_records(path)?;
    for e in &parsed.errors {
        log::warn!("{}: {e}", path.display());
    }
    manifest
        .input(path)
        .count("input_errors", parsed.errors.len());
    Ok(parsed.records)
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli.command))
        }
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    let start = Instant::now();
    let model = HandModel::default_arc();
    match command {
        Command::Symmetry { object, seed, out } => {
            let config = Config::default();
            let obj = load_object(&object, seed)?;
            let report = detect_symmetry_plane(&obj)?;
            write_json(&out, &report)?;
            let mut m = RunManifest::new("symmetry", &config, Some(seed));
            m.input(&object.object);
            finish(m, &out, start)
        }
        Command::Symopt {
            object,
            grasps,
            config,
            seed,
            no_contact,
            out,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let obj = load_object(&object, seed)?;
            let parsed = ingest_single_hand(&grasps)?;
            for e in &parsed.errors {
                log::warn!("{}: {e}", grasps.display());
            }
            let mine: Vec<&SingleHandRecord> = parsed
                .records
                .iter()
                .filter(|r| r.object == obj.id)
                .collect();
            let obj = obj.with_scale(mine.first().map_or(1.0, |r| r.scale));
            let poses: Vec<_> = mine.iter().map(|r| r.pose.clone()).collect();
            log::info!("{}: {} right grasps", obj.id, poses.len());
            let run = run_symopt(&obj, &poses, &cfg.energy, seed, &model)?;
            let contact = (!no_contact).then_some(&cfg.contact);
            let records = records_from_run(&obj, &run, contact, &model)?;
            write_grasp_records(&out, &records)?;
            let mut m = RunManifest::new("symopt", &cfg, Some(seed));
            m.input(&object.object)
                .input(&grasps)
                .count("input_errors", parsed.errors.len())
                .count("proposals", run.grasps.len())
                .count("optimized", run.count(GraspStatus::Optimized))
                .count("discarded", run.count(GraspStatus::Discarded));
            finish(m, &out, start)
        }
        Command::Metrics {
            object,
            grasps,
            config,
            seed,
            out,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let obj = load_object(&object, seed)?;
            let mut m = RunManifest::new("metrics", &cfg, Some(seed));
            m.input(&object.object);
            let records = load_records(&grasps, &mut m)?;
            let hands = records
                .par_iter()
                .map(|r| {
                    Ok((
                        r.label
                            .as_ref()
                            .map_or_else(|| r.object.clone(), |l| l.text()),
                        model.forward(&r.right)?,
                        model.forward(&r.left)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            let report = metrics_report(&obj, &hands, &cfg.metrics, &cfg.contact)?;
            eprint!("{}", report.table());
            write_json(&out, &report)?;
            m.count("records", records.len());
            finish(m, &out, start)
        }
        Command::Label {
            grasps,
            parts,
            category,
            config,
            out,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let mut m = RunManifest::new("label", &cfg, None);
            let records = load_records(&grasps, &mut m)?;
            let text = std::fs::read_to_string(&parts).map_err(|e| Error::file(&parts, e))?;
            let mapping: PartMapping = serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: parts.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })?;
            m.input(&parts);
            let mut kept = Vec::new();
            let mut no_mass = 0;
            for mut r in records.iter().cloned() {
                let outcome =
                    label_grasp(&r, &mapping, category.as_deref(), cfg.contact.threshold)?;
                if let Some(d) = &outcome.diagnostic {
                    log::info!("{}: {d}", r.object);
                    no_mass += 1;
                }
                if let Some(l) = outcome.label {
                    r.label = Some(l);
                    kept.push(r);
                }
            }
            write_grasp_records(&out, &kept)?;
            m.count("records", records.len())
                .count("labeled", kept.len())
                .count("zero_contact", no_mass);
            finish(m, &out, start)
        }
        Command::Balance { input, out } => {
            let mut m = RunManifest::new("balance", &Config::default(), None);
            let records = load_records(&input, &mut m)?;
            let outcome = balance_affordances(records)?;
            for (k, n) in &outcome.after {
                log::info!("{k}: {} -> {n}", outcome.before[k]);
            }
            write_grasp_records(&out, &outcome.records)?;
            m.count("records", outcome.before.values().sum())
                .count("kept", outcome.records.len());
            finish(m, &out, start)
        }
        Command::Refine {
            object,
            grasps,
            dirs,
            config,
            seed,
            out,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let obj = load_object(&object, seed)?;
            let mut m = RunManifest::new("refine", &cfg, Some(seed));
            m.input(&object.object).input(&dirs);
            let records = load_records(&grasps, &mut m)?;
            let states = read_states(&dirs)?;
            if states.len() != 1 && states.len() != records.len() {
                return Err(Error::invalid(format!(
                    "{}: {} direction states for {} records (expected 1 or one per record)",
                    dirs.display(),
                    states.len(),
                    records.len()
                )));
            }
            let refined = records
                .par_iter()
                .enumerate()
                .map(|(i, r)| {
                    refine_record(r, &obj, &states[i.min(states.len() - 1)], &cfg, &model)
                })
                .collect::<Result<Vec<_>>>()?;
            let failed = refined
                .iter()
                .filter(|r| r.provenance.tta.as_ref().is_some_and(|t| t.failed))
                .count();
            write_grasp_records(&out, &refined)?;
            m.count("records", refined.len()).count("failed", failed);
            finish(m, &out, start)
        }
        Command::TrainDirs {
            grasps,
            config,
            iters,
            hidden,
            seed,
            out,
        } => {
            let cfg = Config::load(config.as_deref())?;
            let mut m = RunManifest::new("train-dirs", &cfg, Some(seed));
            let records = load_records(&grasps, &mut m)?;
            let file = train_denoiser(&records, &cfg.ddpm, iters, hidden, seed)?;
            write_json(&out, &file)?;
            m.count("records", records.len())
                .count("conditions", file.conditions.len());
            finish(m, &out, start)
        }
        Command::SampleDirs {
            schedule,
            denoiser,
            label,
            count,
            seed,
            out,
        } => {
            let cfg = Config::load(schedule.as_deref())?;
            let text = std::fs::read_to_string(&denoiser).map_err(|e| Error::file(&denoiser, e))?;
            let mut file: DenoiserFile = serde_json::from_str(&text)?;
            let states = sample_states(&mut file, &cfg.ddpm, label.as_deref(), count, seed)?;
            write_jsonl(&out, &states)?;
            let mut m = RunManifest::new("sample-dirs", &cfg, Some(seed));
            m.input(&denoiser).count("samples", states.len());
            finish(m, &out, start)
        }
        Command::Scene {
            object,
            grasps,
            index,
            out,
        } => {
            let obj = load_object(&object, 0)?;
            let mut m = RunManifest::new("scene", &Config::default(), None);
            m.input(&object.object);
            let records = load_records(&grasps, &mut m)?;
            let r = records.get(index).ok_or_else(|| {
                Error::invalid(format!(
                    "record {index} requested, {} available",
                    records.len()
                ))
            })?;
            let mut text = obj_scene(&[(obj.id.as_str(), obj.mesh())]);
            text += &obj_points("right_hand", &model.forward(&r.right)?.vertices);
            text += &obj_points("left_hand", &model.forward(&r.left)?.vertices);
            let mut w = create(&out)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
            finish(m, &out, start)
        }
        Command::Fixture {
            action:
                FixtureAction::Export {
                    out,
                    objects,
                    grasps,
                    points,
                    seed,
                },
        } => {
            let n = export_fixtures(&out, objects, grasps, points, seed, &model)?;
            let mut m = RunManifest::new("fixture export", &Config::default(), Some(seed));
            m.count("objects", n.0).count("grasps", n.1);
            finish(m, &out.join("grasps.jsonl"), start)
        }
    }
}

fn read_states(path: &Path) -> Result<Vec<AffordanceState>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<AffordanceState>(l).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Refines one record; contact blocks are recomputed when present.
pub fn refine_record(
    record: &GraspRecord,
    object: &ObjectModel,
    state: &AffordanceState,
    cfg: &Config,
    model: &Arc<HandModel>,
) -> Result<GraspRecord> {
    let dirs: [HandDirections; 2] = state.binarized().to_hands()?;
    let grasp = DualGrasp::proposal(&record.object, record.right.clone(), record.left.clone());
    let out = refine(&grasp, object, &dirs, &cfg.tta, model);
    let mut r = record.clone();
    r.right = out.grasp.right.clone();
    r.left = out.grasp.left.clone();
    if r.contact.is_some() {
        let (a, b) = (model.forward(&r.right)?, model.forward(&r.left)?);
        r.contact = Some(ContactBlocks::encode(&contact_representation(
            object,
            &a,
            &b,
            &cfg.contact,
        )));
    }
    if let Some(d) = &out.diagnostic {
        log::warn!("{}: refinement failed: {d}", r.object);
    }
    let tail = out.trace.len().saturating_sub(5);
    r.provenance.tta = Some(TtaProvenance {
        steps: cfg.tta.steps,
        accepted: out.accepted,
        energy_tail: out.trace[tail..].to_vec(),
        failed: out.failed,
    });
    Ok(r)
}

/// A trained toy denoiser with the label vocabulary used as its condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserFile {
    pub ddpm: DdpmConfig,
    pub conditions: Vec<String>,
    pub model: ToyDenoiser,
}

fn one_hot(conditions: &[String], label: &str) -> Option<Vec<f64>> {
    let k = conditions.iter().position(|c| c == label)?;
    Some(
        (0..conditions.len())
            .map(|i| if i == k { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// Trains on the directions in the records' contact blocks, conditioned on
/// a one-hot of the record's label (all zeros when unlabeled).
pub fn train_denoiser(
    records: &[GraspRecord],
    ddpm: &DdpmConfig,
    iters: usize,
    hidden: usize,
    seed: u64,
) -> Result<DenoiserFile> {
    let schedule = ddpm.schedule()?;
    let mut conditions: Vec<String> = records
        .iter()
        .filter_map(|r| r.label.as_ref().map(|l| l.text()))
        .collect();
    conditions.sort();
    conditions.dedup();
    let mut data = Vec::new();
    for r in records {
        let Some(blocks) = &r.contact else { continue };
        let rep = blocks.decode()?;
        let state = AffordanceState::from_hands(&[rep.right.directions, rep.left.directions]);
        let cond = r
            .label
            .as_ref()
            .and_then(|l| one_hot(&conditions, &l.text()))
            .unwrap_or_else(|| vec![0.0; conditions.len()]);
        data.push((state.flat(), cond));
    }
    if data.is_empty() {
        return Err(Error::invalid("no records with contact blocks to train on"));
    }
    let mut model = ToyDenoiser::new(
        8 * NUM_PARTS,
        conditions.len(),
        hidden,
        schedule.steps(),
        seed,
    );
    let report = model.train(
        &data,
        &schedule,
        &TrainConfig {
            iters,
            cond_drop: ddpm.cond_drop,
            seed,
            ..Default::default()
        },
    )?;
    let (head, tail) = report.head_tail(50);
    log::info!("denoiser loss {head:.4} -> {tail:.4} over {iters} iterations");
    Ok(DenoiserFile {
        ddpm: ddpm.clone(),
        conditions,
        model,
    })
}

/// `count` samples with seeds seed, seed + 1, ...
pub fn sample_states(
    file: &mut DenoiserFile,
    ddpm: &DdpmConfig,
    label: Option<&str>,
    count: usize,
    seed: u64,
) -> Result<Vec<AffordanceState>> {
    let schedule = ddpm.schedule()?;
    if schedule.steps() != file.model.steps {
        return Err(Error::invalid(format!(
            "schedule has {} steps, the denoiser was trained with {}",
            schedule.steps(),
            file.model.steps
        )));
    }
    let cond = match label {
        Some(l) => Some(
            one_hot(&file.conditions, l)
                .ok_or_else(|| Error::invalid(format!("unknown condition label {l:?}")))?,
        ),
        None => None,
    };
    (0..count as u64)
        .map(|i| {
            reverse_sample(
                &mut file.model,
                &schedule,
                cond.as_deref(),
                ddpm.guidance,
                8 * NUM_PARTS,
                seed + i,
            )
            .map(|s| s.state)
        })
        .collect()
}

/// Splits the cloud at 60 % of its extent along the longest axis into
/// "top" and "base".
pub fn split_mapping(object: &ObjectModel) -> PartMapping {
    let pts = object.cloud().points();
    let (lo, hi) = pts
        .iter()
        .fold((pts[0], pts[0]), |(a, b), p| (a.inf(p), b.sup(p)));
    let axis = (hi - lo).imax();
    let cut = lo[axis] + 0.6 * (hi[axis] - lo[axis]);
    PartMapping {
        category: Some(object.id.to_lowercase()),
        points: pts.iter().map(|p| [p.x, p.y, p.z]).collect(),
        part: pts
            .iter()
            .map(|p| if p[axis] > cut { "top" } else { "base" }.to_string())
            .collect(),
    }
}

/// Writes objects/<id>.obj, parts/<id>.json and grasps.jsonl under `dir`.
/// Object k's cloud uses seed `seed`, matching `--seed` of the other commands.
pub fn export_fixtures(
    dir: &Path,
    objects: usize,
    per_object: usize,
    points: usize,
    seed: u64,
    model: &Arc<HandModel>,
) -> Result<(usize, usize)> {
    let suite = suite_objects(seed)?;
    let mut lines = Vec::new();
    let mut n_obj = 0;
    for o in suite.iter().take(objects) {
        let obj = ObjectModel::from_mesh(o.id.clone(), o.mesh().clone(), points, seed)?;
        let obj_path = dir.join("objects").join(format!("{}.obj", obj.id));
        let mut w = create(&obj_path)?;
        w.write_all(obj_scene(&[(obj.id.as_str(), obj.mesh())]).as_bytes())?;
        w.flush()?;
        write_json(
            &dir.join("parts").join(format!("{}.json", obj.id)),
            &split_mapping(&obj),
        )?;
        for pose in synthetic_right_grasps(&obj, per_object, seed, model)? {
            lines.push(
                SingleHandRecord {
                    object: obj.id.clone(),
                    scale: 1.0,
                    pose,
                }
                .to_json(),
            );
        }
        n_obj += 1;
    }
    let mut w = create(&dir.join("grasps.jsonl"))?;
    for l in &lines {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok((n_obj, lines.len()))
}

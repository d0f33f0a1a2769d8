mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use pag_core::audit::audit;
use pag_core::catalog::AssetCatalog;
use pag_core::contact::{extract_contacts, settle, DEFAULT_THRESHOLD};
use pag_core::evalkit::{evaluate, SceneGraph, DEFAULT_IOU_MIN};
use pag_core::io::{scene_to_obj, CatalogFile, ContactFile, SceneFile};
use pag_core::pag::{validate, Pag};
use pag_core::solver::{solve, Scene, SolverConfig};
use pag_core::synth;

use manifest::RunManifest;

/// Exit status 1: the input parsed but failed (invalid PAG, unsolvable scene).
/// Exit status 2: unreadable or malformed input, or bad arguments.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

type CliResult<T> = Result<T, Failure>;

fn fail(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, err: err.into() }
}

fn bad_input(err: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, err: err.into() }
}

#[derive(Parser)]
#[command(name = "pag", version, about = "Part-centric assembly graphs: validate, solve, inspect and evaluate scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a PAG for structural errors and cycles.
    Validate {
        pag: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Solve one PAG into a scene; writes scene, contacts, OBJ and manifest.
    Solve {
        pag: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Solve many PAGs (files or directories of *.json) in parallel.
    Batch {
        #[arg(required = true)]
        pags: Vec<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
        /// Worker threads; the output does not depend on this.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Settle a solved scene and extract its part contact graph.
    Contacts {
        scene: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        contact_threshold: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score predicted scene graphs against ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        /// JSON map from alias to canonical label.
        #[arg(long)]
        synonyms: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_IOU_MIN)]
        iou_min: f64,
        /// Also write eval.json and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a solved scene's part boxes as Wavefront OBJ.
    Export {
        scene: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the built-in asset catalog and random PAGs for experiments.
    Generate {
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Catalog JSON; the built-in synthetic catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    contact_threshold: Option<f64>,
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(bad_input)
}

fn parse_json<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        bad_input(anyhow!(
            "{}: parse error at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

struct Loaded<T> {
    path: PathBuf,
    bytes: Vec<u8>,
    value: T,
}

fn load<T: DeserializeOwned>(path: &Path) -> CliResult<Loaded<T>> {
    let bytes = read(path)?;
    let value = parse_json(path, &bytes)?;
    Ok(Loaded {
        path: path.to_path_buf(),
        bytes,
        value,
    })
}

fn load_catalog(path: Option<&Path>) -> CliResult<(AssetCatalog, Option<Loaded<()>>)> {
    let Some(path) = path else {
        return Ok((synth::catalog(), None));
    };
    let file: Loaded<CatalogFile> = load(path)?;
    let catalog = file.value.into_catalog().map_err(bad_input)?;
    Ok((
        catalog,
        Some(Loaded {
            path: file.path,
            bytes: file.bytes,
            value: (),
        }),
    ))
}

/// Solver settings plus the CLI-level keys of a config file.
struct Settings {
    solver: SolverConfig,
    contact_threshold: f64,
}

impl Settings {
    fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(&self.solver).expect("serializable");
        v["contact_threshold"] = self.contact_threshold.into();
        v
    }
}

fn parse_config(text: &str, settings: &mut Settings) -> Result<(), String> {
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
        let (key, value) = (key.trim(), value.trim());
        let res = match key {
            "contact_threshold" => value
                .parse()
                .map(|v| settings.contact_threshold = v)
                .map_err(|e| format!("{key}: {e}")),
            _ => settings.solver.set(key, value),
        };
        res.map_err(|e| format!("line {}: {e}", n + 1))?;
    }
    Ok(())
}

fn settings(args: &SolveArgs, manifest_inputs: &mut Vec<Loaded<()>>) -> CliResult<Settings> {
    let mut s = Settings {
        solver: SolverConfig::default(),
        contact_threshold: DEFAULT_THRESHOLD,
    };
    if let Some(path) = &args.config {
        let bytes = read(path)?;
        let text = String::from_utf8(bytes.clone()).map_err(bad_input)?;
        parse_config(&text, &mut s).map_err(|e| bad_input(anyhow!("{}: {e}", path.display())))?;
        manifest_inputs.push(Loaded {
            path: path.clone(),
            bytes,
            value: (),
        });
    }
    if let Some(seed) = args.seed {
        s.solver.seed = seed;
    }
    if let Some(t) = args.contact_threshold {
        s.contact_threshold = t;
    }
    if !(s.contact_threshold >= 0.0) {
        return Err(bad_input(anyhow!("contact threshold must be non-negative")));
    }
    s.solver.check().map_err(|e| bad_input(anyhow!(e)))?;
    Ok(s)
}

/// Scene, contact and OBJ bytes of one solved PAG.
struct Solved {
    scene: Vec<u8>,
    contacts: Vec<u8>,
    obj: Vec<u8>,
    audit_failures: usize,
}

fn solve_one(pag: &Pag, catalog: &AssetCatalog, config: &SolverConfig, threshold: f64) -> anyhow::Result<Solved> {
    let scene = solve(pag, catalog, config)?;
    let report = audit(pag, &scene, config);
    let audit_failures = report.failures().count();
    let settled = settle(&scene)?;
    let contacts = ContactFile {
        schema_version: pag_core::io::SCHEMA_VERSION,
        threshold,
        graph: extract_contacts(&settled, threshold),
    };
    Ok(Solved {
        scene: to_json(&SceneFile::from_scene(&scene, Some(report))),
        contacts: to_json(&contacts),
        obj: scene_to_obj(&scene).into_bytes(),
        audit_failures,
    })
}

fn cmd_validate(path: &Path, json: bool) -> CliResult<()> {
    let pag: Loaded<Pag> = load(path)?;
    let report = validate(&pag.value);
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        print!("{report}");
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(fail(anyhow!("{}: {} violation(s)", path.display(), report.violations.len())))
    }
}

fn cmd_solve(path: &Path, args: &SolveArgs) -> CliResult<()> {
    let mut inputs = Vec::new();
    let s = settings(args, &mut inputs)?;
    let (catalog, cat_file) = load_catalog(args.catalog.as_deref())?;
    let pag: Loaded<Pag> = load(path)?;
    let mut m = RunManifest::new(&args.out, "solve", s.solver.seed, s.snapshot()).map_err(fail)?;
    m.input(&pag.path, &pag.bytes);
    for f in cat_file.iter().chain(&inputs) {
        m.input(&f.path, &f.bytes);
    }
    let t = Instant::now();
    let solved = solve_one(&pag.value, &catalog, &s.solver, s.contact_threshold);
    m.step("solve", t);
    let solved = match solved {
        Ok(v) => v,
        Err(e) => {
            m.failures.push(format!("{}: {e}", path.display()));
            m.finish().map_err(fail)?;
            return Err(fail(e));
        }
    };
    for (name, bytes) in [("scene.json", &solved.scene), ("contacts.json", &solved.contacts), ("scene.obj", &solved.obj)] {
        m.write(name, bytes).map_err(fail)?;
    }
    m.finish().map_err(fail)?;
    println!("solved {} -> {}", path.display(), args.out.display());
    if solved.audit_failures > 0 {
        return Err(fail(anyhow!("{} audit check(s) failed; see scene.json", solved.audit_failures)));
    }
    Ok(())
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th scene of a batch; depends only on the master seed
/// and the position in the sorted input list.
fn scene_seed(master: u64, index: usize) -> u64 {
    splitmix(master ^ splitmix(index as u64))
}

fn expand_inputs(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))
                .map_err(bad_input)?;
            for e in entries {
                let e = e.map_err(bad_input)?.path();
                if e.extension().is_some_and(|x| x == "json") {
                    out.push(e);
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn cmd_batch(paths: &[PathBuf], args: &SolveArgs, jobs: usize) -> CliResult<()> {
    let mut inputs = Vec::new();
    let s = settings(args, &mut inputs)?;
    let (catalog, cat_file) = load_catalog(args.catalog.as_deref())?;
    let files = expand_inputs(paths)?;
    let mut stems = BTreeMap::new();
    for f in &files {
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("scene").to_string();
        if let Some(prev) = stems.insert(stem.clone(), f) {
            return Err(bad_input(anyhow!("{} and {} share the output name `{stem}`", prev.display(), f.display())));
        }
    }
    let pags = files.iter().map(|f| load::<Pag>(f)).collect::<CliResult<Vec<_>>>()?;

    let mut m = RunManifest::new(&args.out, "batch", s.solver.seed, s.snapshot()).map_err(fail)?;
    for p in &pags {
        m.input(&p.path, &p.bytes);
    }
    for f in cat_file.iter().chain(&inputs) {
        m.input(&f.path, &f.bytes);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(fail)?;
    let t = Instant::now();
    let results: Vec<anyhow::Result<Solved>> = pool.install(|| {
        pags.par_iter()
            .enumerate()
            .map(|(i, p)| {
                let config = SolverConfig {
                    seed: scene_seed(s.solver.seed, i),
                    ..s.solver.clone()
                };
                solve_one(&p.value, &catalog, &config, s.contact_threshold)
            })
            .collect()
    });
    m.step("solve", t);

    let mut solved = 0;
    for (p, r) in pags.iter().zip(results) {
        let stem = p.path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
        match r {
            Ok(v) => {
                m.write(&format!("{stem}.scene.json"), &v.scene).map_err(fail)?;
                m.write(&format!("{stem}.contacts.json"), &v.contacts).map_err(fail)?;
                m.write(&format!("{stem}.obj"), &v.obj).map_err(fail)?;
                if v.audit_failures > 0 {
                    m.failures.push(format!("{}: {} audit check(s) failed", p.path.display(), v.audit_failures));
                } else {
                    solved += 1;
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", p.path.display());
                m.failures.push(format!("{}: {e}", p.path.display()));
            }
        }
    }
    m.finish().map_err(fail)?;
    println!("solved {solved}/{} -> {}", pags.len(), args.out.display());
    if solved < pags.len() {
        return Err(fail(anyhow!("{} scene(s) failed", pags.len() - solved)));
    }
    Ok(())
}

fn load_scene(path: &Path, catalog: Option<&Path>) -> CliResult<(Scene, Loaded<()>, Option<Loaded<()>>)> {
    let (catalog, cat_file) = load_catalog(catalog)?;
    let file: Loaded<SceneFile> = load(path)?;
    let scene = file.value.into_scene(&catalog).map_err(bad_input)?;
    let loaded = Loaded {
        path: file.path,
        bytes: file.bytes,
        value: (),
    };
    Ok((scene, loaded, cat_file))
}

fn cmd_contacts(path: &Path, catalog: Option<&Path>, threshold: Option<f64>, out: &Path) -> CliResult<()> {
    let threshold = threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(threshold >= 0.0) {
        return Err(bad_input(anyhow!("contact threshold must be non-negative")));
    }
    let (scene, file, cat_file) = load_scene(path, catalog)?;
    let config = serde_json::json!({ "contact_threshold": threshold });
    let mut m = RunManifest::new(out, "contacts", scene.seed, config).map_err(fail)?;
    for f in std::iter::once(&file).chain(&cat_file) {
        m.input(&f.path, &f.bytes);
    }
    let settled = settle(&scene).map_err(fail)?;
    let graph = extract_contacts(&settled, threshold);
    let faces = graph.face_contacts().count();
    let file = ContactFile {
        schema_version: pag_core::io::SCHEMA_VERSION,
        threshold,
        graph,
    };
    m.write("contacts.json", &to_json(&file)).map_err(fail)?;
    m.finish().map_err(fail)?;
    println!(
        "{} contact(s), {faces} face-to-face -> {}",
        file.graph.edges.len(),
        out.join("contacts.json").display()
    );
    Ok(())
}

fn cmd_export(path: &Path, catalog: Option<&Path>, out: &Path) -> CliResult<()> {
    let (scene, file, cat_file) = load_scene(path, catalog)?;
    let mut m = RunManifest::new(out, "export", scene.seed, serde_json::json!({})).map_err(fail)?;
    for f in std::iter::once(&file).chain(&cat_file) {
        m.input(&f.path, &f.bytes);
    }
    let written = m.write("scene.obj", scene_to_obj(&scene).as_bytes()).map_err(fail)?;
    m.finish().map_err(fail)?;
    println!("{}", written.display());
    Ok(())
}

/// A file holds one scene graph or an array of them.
fn load_graphs(path: &Path) -> CliResult<(Vec<SceneGraph>, Vec<u8>)> {
    #[derive(serde::Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(SceneGraph),
        Many(Vec<SceneGraph>),
    }
    let bytes = read(path)?;
    // Parse as a plain value first so syntax errors keep their position.
    let value: serde_json::Value = parse_json(path, &bytes)?;
    let graphs = match serde_json::from_value(value).map_err(|e| bad_input(anyhow!("{}: schema mismatch: {e}", path.display())))? {
        OneOrMany::One(g) => vec![g],
        OneOrMany::Many(v) => v,
    };
    Ok((graphs, bytes))
}

fn cmd_eval(pred: &Path, gt: &Path, synonyms: Option<&Path>, iou_min: f64, out: Option<&Path>) -> CliResult<()> {
    if !(0.0..=1.0).contains(&iou_min) {
        return Err(bad_input(anyhow!("--iou-min must lie in [0, 1]")));
    }
    let (p, pb) = load_graphs(pred)?;
    let (g, gb) = load_graphs(gt)?;
    if p.len() != g.len() {
        return Err(bad_input(anyhow!("{} predicted scene(s) but {} ground-truth scene(s)", p.len(), g.len())));
    }
    let syn: Option<Loaded<BTreeMap<String, String>>> = synonyms.map(load).transpose()?;
    let table = syn.as_ref().map(|s| s.value.clone()).unwrap_or_default();
    let pairs: Vec<_> = p.into_iter().zip(g).collect();
    let report = evaluate(&pairs, &table, iou_min).map_err(bad_input)?;
    println!("grounded/agnostic over {} scene(s), IoU >= {iou_min}", report.scenes);
    print!("{}", report.table());
    if let Some(out) = out {
        let config = serde_json::json!({ "iou_min": iou_min });
        let mut m = RunManifest::new(out, "eval", 0, config).map_err(fail)?;
        m.input(pred, &pb);
        m.input(gt, &gb);
        if let Some(s) = &syn {
            m.input(&s.path, &s.bytes);
        }
        m.write("eval.json", &to_json(&report)).map_err(fail)?;
        m.finish().map_err(fail)?;
    }
    Ok(())
}

fn cmd_generate(count: usize, seed: u64, out: &Path) -> CliResult<()> {
    let catalog = synth::catalog();
    let mut m = RunManifest::new(out, "generate", seed, serde_json::json!({ "count": count })).map_err(fail)?;
    m.write("catalog.json", &to_json(&CatalogFile::from_catalog(&catalog))).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let id = format!("pag_{i:04}");
        let n = rng.gen_range(5..=15);
        let pag = synth::random_pag(&mut rng, &id, n);
        m.write(&format!("pags/{id}.json"), &to_json(&pag)).map_err(fail)?;
    }
    m.finish().map_err(fail)?;
    println!("{count} PAG(s) and catalog.json -> {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate { pag, json } => cmd_validate(&pag, json),
        Command::Solve { pag, solve } => cmd_solve(&pag, &solve),
        Command::Batch { pags, solve, jobs } => cmd_batch(&pags, &solve, jobs),
        Command::Contacts {
            scene,
            catalog,
            contact_threshold,
            out,
        } => cmd_contacts(&scene, catalog.as_deref(), contact_threshold, &out),
        Command::Eval {
            pred,
            gt,
            synonyms,
            iou_min,
            out,
        } => cmd_eval(&pred, &gt, synonyms.as_deref(), iou_min, out.as_deref()),
        Command::Export { scene, catalog, out } => cmd_export(&scene, catalog.as_deref(), &out),
        Command::Generate { count, seed, out } => cmd_generate(count, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("PARSE_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

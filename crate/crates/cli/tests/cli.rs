use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const MUG_ON_TABLE: &str = r#"{
  "schema_version": 1,
  "id": "mug_on_table",
  "root": "floor",
  "objects": [
    {"id": "floor", "query": "floor"},
    {"id": "table", "query": "table", "supporter": "floor"},
    {"id": "mug", "query": "mug", "supporter": "table"}
  ],
  "part_edges": [
    {"source": {"object": "table"}, "target": {"object": "floor"}, "relation": "on", "support": true},
    {"source": {"object": "mug", "part": "body", "face": "bottom"},
     "target": {"object": "table", "part": "top", "face": "top"}, "relation": "on", "support": true}
  ]
}"#;

const CYCLIC: &str = r#"{
  "root": "floor",
  "objects": [
    {"id": "floor", "query": "floor"},
    {"id": "a", "query": "table", "supporter": "floor"},
    {"id": "b", "query": "table", "supporter": "floor"}
  ],
  "object_edges": [
    {"source": "a", "target": "b", "relation": "left_of"},
    {"source": "b", "target": "a", "relation": "left_of"}
  ]
}"#;

/// A bed does not fit in a one-metre room.
const TOO_SMALL: &str = r#"{
  "root": "floor",
  "room": {"width": 1.0, "depth": 1.0, "wall_height": 2.5},
  "objects": [
    {"id": "floor", "query": "floor"},
    {"id": "bed_1", "query": "bed", "supporter": "floor"}
  ]
}"#;

fn pag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pag"))
        .args(args)
        .env_remove("PARSE_LOG")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = pag(&["validate", &write(dir.path(), "ok.json", MUG_ON_TABLE)]);
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok.stderr));

    let cyc = pag(&["validate", &write(dir.path(), "cyc.json", CYCLIC)]);
    assert_eq!(cyc.status.code(), Some(1));
    let out = text(&cyc.stdout);
    assert!(out.contains("cycle") && out.contains('a') && out.contains('b'), "{out}");

    let bad = pag(&["validate", &write(dir.path(), "bad.json", "{\n  \"root\": \"floor\",\n  \"objects\": [}\n")]);
    assert_eq!(bad.status.code(), Some(2));
    let err = text(&bad.stderr);
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
}

#[test]
fn validate_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = pag(&["validate", "--json", &write(dir.path(), "cyc.json", CYCLIC)]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["violations"][0]["kind"], "cycle");
}

fn solve_into(pag_path: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["solve", pag_path, "--out", s(out)];
    args.extend_from_slice(extra);
    pag(&args)
}

#[test]
fn solve_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "mug.json", MUG_ON_TABLE);
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        let o = solve_into(&p, out, &["--seed", "7"]);
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    assert!(solve_into(&p, &c, &["--seed", "8"]).status.success());
    for f in ["scene.json", "contacts.json", "scene.obj"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("scene.json")).unwrap(), fs::read(c.join("scene.json")).unwrap());

    let scene: serde_json::Value = serde_json::from_slice(&fs::read(a.join("scene.json")).unwrap()).unwrap();
    assert_eq!(scene["schema_version"], 1);
    assert_eq!(scene["seed"], 7);
    let ids: Vec<&str> = scene["instances"].as_array().unwrap().iter().map(|i| i["object_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["floor", "table", "mug"]);
    assert!(scene["audit"]["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let contacts: serde_json::Value = serde_json::from_slice(&fs::read(a.join("contacts.json")).unwrap()).unwrap();
    let mug_on_top = contacts["edges"].as_array().unwrap().iter().any(|e| {
        let ends = [&e["a"], &e["b"]];
        e["class"] == "face"
            && ends.iter().any(|x| x["object"] == "mug" && x["part"] == "body")
            && ends.iter().any(|x| x["object"] == "table" && x["part"] == "top")
            && e["gap"].as_f64().unwrap() <= 0.001
    });
    assert!(mug_on_top);
}

#[test]
fn manifest_lists_every_output_with_digest() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "mug.json", MUG_ON_TABLE);
    let out = dir.path().join("run");
    assert!(solve_into(&p, &out, &["--seed", "3"]).status.success());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["complete"], true);
    assert_eq!(m["seed"], 3);
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 3);
    for o in outputs {
        let bytes = fs::read(out.join(o["path"].as_str().unwrap())).unwrap();
        assert_eq!(o["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
    let input = &m["inputs"][0];
    assert_eq!(input["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(MUG_ON_TABLE.as_bytes())));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "mug.json", MUG_ON_TABLE);
    let cfg = write(dir.path(), "run.cfg", "# solver settings\nseed = 5\ncontact_threshold = 0.002\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(solve_into(&p, &a, &["--config", &cfg, "--seed", "7"]).status.success());
    assert!(solve_into(&p, &b, &["--seed", "7", "--contact-threshold", "0.002"]).status.success());
    assert_eq!(fs::read(a.join("scene.json")).unwrap(), fs::read(b.join("scene.json")).unwrap());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["contact_threshold"], 0.002);

    let bad = write(dir.path(), "bad.cfg", "no_such_key = 1\n");
    let o = solve_into(&p, &dir.path().join("c"), &["--config", &bad]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unsolvable_scene_names_failing_node() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "small.json", TOO_SMALL);
    let out = dir.path().join("run");
    let o = solve_into(&p, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("bed_1"), "{}", text(&o.stderr));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(m["outputs"].as_array().unwrap().is_empty());
    assert!(m["failures"][0].as_str().unwrap().contains("bed_1"));
}

#[test]
fn contacts_and_export_from_scene_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "mug.json", MUG_ON_TABLE);
    let run = dir.path().join("run");
    assert!(solve_into(&p, &run, &["--seed", "11"]).status.success());

    let again = dir.path().join("again");
    let o = pag(&["contacts", s(&run.join("scene.json")), "--out", s(&again)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(fs::read(run.join("contacts.json")).unwrap(), fs::read(again.join("contacts.json")).unwrap());

    let o = pag(&["contacts", s(&run.join("scene.json")), "--contact-threshold", "0.05", "--out", s(&again)]);
    assert!(o.status.success());
    let wide: serde_json::Value = serde_json::from_slice(&fs::read(again.join("contacts.json")).unwrap()).unwrap();
    let narrow: serde_json::Value = serde_json::from_slice(&fs::read(run.join("contacts.json")).unwrap()).unwrap();
    assert!(wide["edges"].as_array().unwrap().len() >= narrow["edges"].as_array().unwrap().len());

    let exp = dir.path().join("exp");
    assert!(pag(&["export", s(&run.join("scene.json")), "--out", s(&exp)]).status.success());
    let obj = fs::read_to_string(exp.join("scene.obj")).unwrap();
    assert_eq!(obj, fs::read_to_string(run.join("scene.obj")).unwrap());
    let count = |p: &str| obj.lines().filter(|l| l.starts_with(p)).count();
    // Room (slab and four walls), table (top and four legs), mug (body and handle).
    let parts = 5 + 5 + 2;
    assert_eq!(count("g "), parts);
    assert_eq!(count("v "), 8 * parts);
    assert_eq!(count("f "), 12 * parts);
    assert!(obj.contains("g mug/body"));
}

#[test]
fn catalog_round_trips_through_generate() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(pag(&["generate", "--count", "2", "--seed", "4", "--out", s(&g)]).status.success());
    let p = g.join("pags").join("pag_0000.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let with_file = solve_into(s(&p), &a, &["--catalog", s(&g.join("catalog.json")), "--seed", "2"]);
    let built_in = solve_into(s(&p), &b, &["--seed", "2"]);
    assert_eq!(with_file.status.code(), built_in.status.code());
    if built_in.status.success() {
        assert_eq!(fs::read(a.join("scene.json")).unwrap(), fs::read(b.join("scene.json")).unwrap());
    }
}

fn batch(dir: &Path, out: &PathBuf, jobs: &str) {
    let o = pag(&["batch", s(dir), "--seed", "2024", "--jobs", jobs, "--out", s(out)]);
    // Some random scenes may be unsolvable; only the outputs are compared.
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", text(&o.stderr));
}

#[test]
fn batch_output_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(pag(&["generate", "--count", "50", "--seed", "9", "--out", s(&g)]).status.success());
    let (one, four) = (dir.path().join("one"), dir.path().join("four"));
    batch(&g.join("pags"), &one, "1");
    batch(&g.join("pags"), &four, "4");
    let mut names: Vec<String> = fs::read_dir(&one)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    names.sort();
    assert!(names.len() >= 3 * 40, "only {} outputs", names.len());
    for n in &names {
        assert_eq!(fs::read(one.join(n)).unwrap(), fs::read(four.join(n)).unwrap(), "{n}");
    }
    assert_eq!(fs::read_dir(&four).unwrap().count(), names.len() + 1);
}

const GT: &str = r#"{
  "schema_version": 1,
  "detections": [
    {"label": "mug", "bbox": [0, 0, 10, 10]},
    {"label": "table", "bbox": [20, 0, 60, 40]},
    {"label": "book", "bbox": [70, 0, 80, 10]},
    {"label": "lamp", "bbox": [90, 0, 100, 20]}
  ],
  "relations": [
    {"s": 0, "p": "on", "o": 1},
    {"s": 2, "p": "on", "o": 1},
    {"s": 3, "p": "near", "o": 1},
    {"s": 0, "p": "left_of", "o": 2}
  ]
}"#;

const PRED: &str = r#"{
  "detections": [
    {"label": "cup", "bbox": [0, 0, 10, 11]},
    {"label": "table", "bbox": [21, 0, 60, 40]},
    {"label": "book", "bbox": [70, 0, 80, 10]},
    {"label": "lamp", "bbox": [90, 0, 100, 20]}
  ],
  "relations": [
    {"s": 0, "p": "on", "o": 1},
    {"s": 2, "p": "on", "o": 1},
    {"s": 3, "p": "on", "o": 1},
    {"s": 3, "p": "on", "o": 1}
  ]
}"#;

#[test]
fn eval_reports_grounded_and_agnostic() {
    let dir = tempfile::tempdir().unwrap();
    let gt = write(dir.path(), "gt.json", GT);
    let pred = write(dir.path(), "pred.json", PRED);
    let syn = write(dir.path(), "syn.json", r#"{"cup": "mug"}"#);
    let out = dir.path().join("eval");
    let o = pag(&["eval", &pred, &gt, "--synonyms", &syn, "--out", s(&out)]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let table = text(&o.stdout);
    assert!(table.contains("Precision  0.6667/0.6667"), "{table}");
    assert!(table.contains("Recall     0.5000/0.5000"), "{table}");
    assert!(table.contains("F1         0.5714/0.5714"), "{table}");
    let r: serde_json::Value = serde_json::from_slice(&fs::read(out.join("eval.json")).unwrap()).unwrap();
    assert_eq!(r["avg_relations"], 3.0);
    assert_eq!(r["avg_relations_raw"], 4.0);

    let same = pag(&["eval", &gt, &gt]);
    let t = text(&same.stdout);
    assert!(t.contains("Recall     1.0000/1.0000") && t.contains("F1         1.0000/1.0000"), "{t}");

    let empty = write(dir.path(), "empty.json", r#"{"detections": [], "relations": []}"#);
    let t = text(&pag(&["eval", &empty, &gt]).stdout);
    assert!(t.contains("Recall     0.0000/0.0000") && t.contains("Precision  0.0000/0.0000"), "{t}");

    let wrong = write(dir.path(), "wrong.json", r#"{"detections": [{"label": "mug"}]}"#);
    assert_eq!(pag(&["eval", &wrong, &gt]).status.code(), Some(2));
    let dangling = write(dir.path(), "dangling.json", r#"{"detections": [], "relations": [{"s": 0, "p": "on", "o": 1}]}"#);
    assert_eq!(pag(&["eval", &dangling, &gt]).status.code(), Some(2));
}

//! End-to-end runs of the binary: generate, run, export, evaluate, plot.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mosaic_qaoa_core::dataset::DatasetRecord;
use mosaic_qaoa_core::tokens::Vocabulary;
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mosaic-qaoa"));
    c.env_remove("MOSAIC_QAOA_CAP").env("RUST_LOG", "error");
    c
}

fn exec(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = exec(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn generate(dir: &Path, n: u32, count: usize, kind: &str, sat: &str, seed: u64) {
    ok(&[
        "generate",
        "--n",
        &n.to_string(),
        "--count",
        &count.to_string(),
        "--kind",
        kind,
        "--sat",
        sat,
        "--seed",
        &seed.to_string(),
        "--out",
        p(dir),
    ]);
}

#[test]
fn full_pipeline() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    let out = tmp.path().join("out");
    let ds = tmp.path().join("ds");
    generate(&inst, 5, 4, "mixed", "half", 11);

    let manifest = json(&inst.join("manifest.json"));
    let entries = manifest["instances"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    let provenances: Vec<&str> = entries.iter().map(|e| e["provenance"].as_str().unwrap()).collect();
    assert_eq!(provenances, ["uniform", "uniform", "balanced", "balanced"]);
    let sat: Vec<bool> = entries.iter().map(|e| e["satisfiable"].as_bool().unwrap()).collect();
    assert_eq!(sat, [true, true, false, false]);

    ok(&["run", "--input", p(&inst), "--strategy", "all", "--max-layers", "4", "--jobs", "2", "--out", p(&out)]);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("formula_id,strategy,gamma0,ar,layers,params,stuck,stop_reason,wall_time,"));
    let rows = csv_rows(&metrics);
    assert_eq!(rows.len(), 12, "three strategies per instance");
    for row in &rows {
        let ar: f64 = row[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&ar));
        assert!(row[8].is_empty(), "wall_time only with --record-wall-time");
    }
    let runs = sorted_files(&out.join("runs"));
    assert_eq!(runs.len(), 12);

    // Every recorded circuit re-simulates to its recorded energy.
    for run in &runs {
        let rep = ok(&["eval-circuit", "--circuit", p(run)]);
        let v: Value = serde_json::from_slice(&rep.stdout).unwrap();
        assert_eq!(v["reproduced"], true, "{}", run.display());
        assert!(v["abs_diff"].as_f64().unwrap() <= 1e-9);
    }

    ok(&["export-dataset", "--runs", p(&out), "--out", p(&ds), "--split", "0.5,0.25,0.25", "--seed", "2"]);
    let mut records = Vec::new();
    for name in ["train", "val", "test"] {
        let text = fs::read_to_string(ds.join(format!("{name}.jsonl"))).unwrap();
        for line in text.lines() {
            let r: DatasetRecord = serde_json::from_str(line).unwrap();
            r.validate().unwrap();
            r.verify_energy(1e-9).unwrap();
            records.push(r);
        }
    }
    assert_eq!(records.len(), 4, "one mosaic record per instance");
    let vocab: Vocabulary = serde_json::from_str(&fs::read_to_string(ds.join("vocab.json")).unwrap()).unwrap();
    assert_eq!(vocab, Vocabulary::new(5).unwrap());
    for r in &records {
        let seq = r.token_sequence().unwrap();
        assert_eq!(vocab.decode(&vocab.encode(&seq).unwrap()).unwrap(), seq);
    }

    // The request/response pair the trainer uses.
    let req_path = tmp.path().join("req.jsonl");
    let mut req = String::new();
    for (k, r) in records.iter().enumerate() {
        let circuit_only: Vec<&String> = r.tokens.iter().skip_while(|t| *t != "<end_of_formula>").skip(1).collect();
        let line = serde_json::json!({
            "id": format!("f{k}"),
            "formula": r.formula,
            "n": r.n,
            "samples": [r.tokens.join(" "), r.tokens, circuit_only, "<bos> x1 <eos>"],
            "shots": 200,
        });
        req.push_str(&line.to_string());
        req.push('\n');
    }
    fs::write(&req_path, req).unwrap();
    let resp_path = tmp.path().join("resp.jsonl");
    ok(&["eval-circuit", "--requests", p(&req_path), "--out", p(&resp_path)]);
    let resp = fs::read_to_string(&resp_path).unwrap();
    let lines: Vec<Value> = resp.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), records.len());
    for (v, r) in lines.iter().zip(&records) {
        assert_eq!(v["valid_count"], 3);
        assert_eq!(v["formula_error"], false);
        assert_eq!(v["circuit_error_rate"].as_f64().unwrap(), 25.0);
        let samples = v["samples"].as_array().unwrap();
        for s in &samples[..3] {
            assert!((s["energy"].as_f64().unwrap() - r.energy).abs() <= 1e-9);
            assert!((s["ar_expectation"].as_f64().unwrap() - r.ar).abs() <= 1e-9);
            assert_eq!(s["layers"].as_u64().unwrap() as usize, r.layers);
        }
        assert_eq!(samples[3]["valid"], false);
        assert!(samples[3]["reason"].as_str().unwrap().contains("parse error"));
    }

    // Histogram counts add up to every selected operator.
    let hist = ok(&["plotdata", "--runs", p(&out), "--kind", "op-histogram"]);
    let total: usize = csv_rows(std::str::from_utf8(&hist.stdout).unwrap())
        .iter()
        .map(|r| r[2].parse::<usize>().unwrap())
        .sum();
    let selected: usize = runs
        .iter()
        .map(|run| {
            json(run)["circuit"]["layers"]
                .as_array()
                .unwrap()
                .iter()
                .map(|l| l["mixers"].as_array().unwrap().len())
                .sum::<usize>()
        })
        .sum();
    assert_eq!(total, selected);
    for kind in ["energy-trace", "max-grad", "param-bands"] {
        let a = ok(&["plotdata", "--runs", p(&out), "--kind", kind]).stdout;
        let b = ok(&["plotdata", "--runs", p(&out), "--kind", kind]).stdout;
        assert_eq!(a, b);
        assert!(a.split(|&c| c == b'\n').count() > 2, "{kind} has rows");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate(&a, 5, 3, "uniform", "any", 5);
    generate(&b, 5, 3, "uniform", "any", 5);
    let cnf = |d: &Path| -> Vec<(PathBuf, Vec<u8>)> {
        sorted_files(d)
            .into_iter()
            .filter(|f| f.extension().unwrap() == "cnf")
            .map(|f| (f.file_name().unwrap().into(), fs::read(&f).unwrap()))
            .collect()
    };
    assert_eq!(cnf(&a), cnf(&b));

    let (ra, rb) = (tmp.path().join("ra"), tmp.path().join("rb"));
    let base = ["run", "--input", p(&a), "--strategy", "tetris", "--max-layers", "3"];
    ok(&[&base[..], &["--jobs", "1", "--out", p(&ra)]].concat());
    ok(&[&base[..], &["--jobs", "3", "--out", p(&rb)]].concat());
    assert_eq!(fs::read(ra.join("metrics.csv")).unwrap(), fs::read(rb.join("metrics.csv")).unwrap());
    let runs_a = sorted_files(&ra.join("runs"));
    assert_eq!(runs_a.len(), 3);
    for f in runs_a {
        let other = rb.join("runs").join(f.file_name().unwrap());
        assert_eq!(fs::read(&f).unwrap(), fs::read(other).unwrap());
        let v = json(&f);
        assert_eq!(v["tool_version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config_digest"].as_str().unwrap().len(), 16);
    }
    let m = json(&ra.join("manifest.json"));
    assert!(m["created_unix"].as_u64().unwrap() > 0);
    assert_eq!(m["timings"].as_array().unwrap().len(), 3);
}

#[test]
fn sat_filter_is_enforced() {
    let tmp = TempDir::new().unwrap();
    for (filter, want) in [("sat", true), ("unsat", false)] {
        let dir = tmp.path().join(filter);
        generate(&dir, 6, 3, "balanced", filter, 1);
        for e in json(&dir.join("manifest.json"))["instances"].as_array().unwrap() {
            assert_eq!(e["opt"] == e["m"], want, "{e}");
            assert_eq!(e["satisfiable"], want);
        }
    }
}

#[test]
fn small_satisfiable_mosaic_run_reaches_high_ar() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    let out = tmp.path().join("out");
    generate(&inst, 6, 2, "uniform", "sat", 4);
    ok(&["run", "--input", p(&inst), "--strategy", "mosaic", "--gamma0", "0.5", "--out", p(&out), "--jobs", "0"]);
    let rows = csv_rows(&fs::read_to_string(out.join("metrics.csv")).unwrap());
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row[3].parse::<f64>().unwrap() >= 0.95, "{row:?}");
        assert_eq!(row[6], "false", "{row:?}");
    }
}

#[test]
fn gamma_grid_keeps_the_best_run() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    generate(&inst, 5, 1, "uniform", "any", 8);
    let run = |gamma: &str, out: &Path| {
        ok(&["run", "--input", p(&inst), "--gamma0", gamma, "--max-layers", "3", "--out", p(out)]);
        let files = sorted_files(&out.join("runs"));
        assert_eq!(files.len(), 1);
        (files[0].clone(), json(&files[0]))
    };
    let (file, grid) = run("0.01,0.1,0.5", &tmp.path().join("grid"));
    assert!(file.to_str().unwrap().ends_with("__mosaic__ggrid.json"));
    assert_eq!(grid["gamma_grid"].as_array().unwrap().len(), 3);
    let best = grid["final_energy"].as_f64().unwrap();
    let mut singles = Vec::new();
    for g in ["0.01", "0.1", "0.5"] {
        let (_, single) = run(g, &tmp.path().join(format!("g{g}")));
        singles.push((g.parse::<f64>().unwrap(), single["final_energy"].as_f64().unwrap()));
        assert!(best <= single["final_energy"].as_f64().unwrap() + 1e-9);
    }
    let chosen = grid["gamma0"].as_f64().unwrap();
    let chosen_single = singles.iter().find(|(g, _)| *g == chosen).unwrap().1;
    assert!((chosen_single - best).abs() <= 1e-9);
}

#[test]
fn duplicate_export_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    let out = tmp.path().join("out");
    generate(&inst, 4, 1, "uniform", "any", 3);
    ok(&["run", "--input", p(&inst), "--strategy", "all", "--max-layers", "2", "--out", p(&out)]);
    let res = exec(&["export-dataset", "--runs", p(&out), "--out", p(&tmp.path().join("ds")), "--strategy", "all"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("duplicate canonical formulas") && err.contains("(x3)"), "{err}");
    assert!(!tmp.path().join("ds").join("train.jsonl").exists());
}

#[test]
fn token_file_mode_and_sample_limit() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    let out = tmp.path().join("out");
    let ds = tmp.path().join("ds");
    generate(&inst, 4, 1, "uniform", "any", 6);
    ok(&["run", "--input", p(&inst), "--max-layers", "2", "--out", p(&out)]);
    ok(&["export-dataset", "--runs", p(&out), "--out", p(&ds), "--split", "1,0,0"]);
    let record: DatasetRecord =
        serde_json::from_str(fs::read_to_string(ds.join("train.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    let tokens = tmp.path().join("samples.txt");
    let good = record.tokens.join(" ");
    fs::write(&tokens, format!("{good}\n<new_layer_p> XMIXER a5 <eos>\n{good}\n")).unwrap();
    let cnf = sorted_files(&inst).into_iter().find(|f| f.extension().unwrap() == "cnf").unwrap();
    let res = ok(&["eval-circuit", "--tokens", p(&tokens), "--instance", p(&cnf), "--samples", "2"]);
    let v: Value = serde_json::from_slice(&res.stdout).unwrap();
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 2);
    assert_eq!(samples[0]["valid"], true);
    assert!((samples[0]["energy"].as_f64().unwrap() - record.energy).abs() <= 1e-9);
    assert_eq!(samples[1]["valid"], false, "a layer needs its cost angle");
    assert_eq!(v["circuit_error_rate"].as_f64().unwrap(), 50.0);
}

#[test]
fn empty_run_dir_gives_header_only() {
    let tmp = TempDir::new().unwrap();
    let expected = [
        ("energy-trace", "formula_id,strategy,gamma0,layer,energy,ar\n"),
        ("op-histogram", "strategy,family,count\n"),
    ];
    for (kind, header) in expected {
        let out = ok(&["plotdata", "--runs", p(tmp.path()), "--kind", kind]);
        assert_eq!(String::from_utf8(out.stdout).unwrap(), header);
    }
}

#[test]
fn wall_time_is_opt_in() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    let out = tmp.path().join("out");
    generate(&inst, 4, 1, "uniform", "any", 2);
    ok(&["run", "--input", p(&inst), "--max-layers", "1", "--record-wall-time", "--out", p(&out)]);
    let rows = csv_rows(&fs::read_to_string(out.join("metrics.csv")).unwrap());
    assert!(rows[0][8].parse::<f64>().unwrap() >= 0.0);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let inst = tmp.path().join("inst");
    generate(&inst, 4, 1, "uniform", "any", 1);
    let code = |args: &[&str]| exec(args).status.code();
    let out = tmp.path().join("o");
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["--version"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(3));
    assert_eq!(code(&["run", "--input", p(&inst), "--strategy", "best", "--out", p(&out)]), Some(3));
    assert_eq!(code(&["run", "--input", p(&inst), "--gamma0", "fast", "--out", p(&out)]), Some(3));
    assert_eq!(code(&["run", "--input", p(&inst), "--max-layers", "0", "--out", p(&out)]), Some(3));
    assert_eq!(code(&["generate", "--n", "2", "--out", p(&out)]), Some(3));
    assert_eq!(code(&["export-dataset", "--runs", p(&out), "--out", p(&out), "--split", "0.9,0.9,0.1"]), Some(3));
    assert_eq!(code(&["run", "--input", p(&tmp.path().join("missing")), "--out", p(&out)]), Some(1));
    let capped = bin()
        .env("MOSAIC_QAOA_CAP", "lots")
        .args(["run", "--input", p(&inst), "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(3));

    // A cap below the instance size fails that run only.
    let capped = bin()
        .env("MOSAIC_QAOA_CAP", "3")
        .args(["run", "--input", p(&inst), "--out", p(&out)])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));

    // One unreadable instance next to a good one: partial failure, good run kept.
    fs::write(inst.join("broken.cnf"), "p cnf 3 1\n1 2 0\n").unwrap();
    let partial = tmp.path().join("partial");
    assert_eq!(
        code(&["run", "--input", p(&inst), "--max-layers", "1", "--out", p(&partial)]),
        Some(2)
    );
    assert_eq!(csv_rows(&fs::read_to_string(partial.join("metrics.csv")).unwrap()).len(), 1);
    let m = json(&partial.join("manifest.json"));
    assert_eq!(m["failures"].as_array().unwrap().len(), 1);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

use coarray_lab::formats::{beampattern_csv, parse_beampattern_csv, to_cx};
use coarray_lab::manifold::steering_vector_u;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coarray-lab"));
    cmd.env_remove("COARRAY_LAB_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coarray-lab")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json_of(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn read(path: &Path) -> Value {
    json_of(&fs::read_to_string(path).unwrap())
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, value.to_string()).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn arraygen_kinds() {
    let g = json_of(&run_ok(&["arraygen", "--kind", "sym-na", "--n", "10"]));
    assert_eq!(g["tx"], json!([0, 1, 2, 5, 8, 11, 14, 17, 18, 19]));
    assert_eq!(g["rx"], g["tx"]);

    let g = json_of(&run_ok(&["arraygen", "--kind", "ula", "--n", "1"]));
    assert_eq!(g["tx"], json!([0]));

    let g = json_of(&run_ok(&[
        "arraygen",
        "--kind",
        "nonoverlap-mra",
        "--ntx",
        "3",
        "--nrx",
        "3",
    ]));
    assert_eq!(g["tx"], json!([0, 3, 6]));
    assert_eq!(g["rx"], json!([0, 1, 2]));

    let g = json_of(&run_ok(&[
        "arraygen",
        "--kind",
        "symmetric-from-generator",
        "--generator",
        "0,1,4",
        "--offset",
        "3",
    ]));
    assert_eq!(g["tx"], json!([0, 1, 3, 4, 6, 7]));
}

#[test]
fn arraygen_echoes_size_and_rejects_bad_params() {
    let out = run(&["arraygen", "--kind", "cna", "--n1", "2", "--n2", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sensors, aperture"));

    assert_eq!(code(&run(&["arraygen", "--kind", "ula", "--n", "0"])), 2);
    assert_eq!(
        code(&run(&["arraygen", "--kind", "nested", "--n1", "2"])),
        2
    );
}

#[test]
fn coarray_reports() {
    let dir = TempDir::new().unwrap();
    let ula = write(&dir, "ula.json", &json!({"tx": [0, 1], "rx": [0, 1]}));
    let r = json_of(&run_ok(&["coarray", "-g", s(&ula)]));
    assert_eq!(r["multiplicities"], json!([1, 2, 1]));
    assert_eq!(r["contiguous"], json!(true));

    let d = write(
        &dir,
        "d.json",
        &json!({"tx": [0, 1, 3, 4], "rx": [0, 1, 3, 4]}),
    );
    let r = json_of(&run_ok(&["coarray", "-g", s(&d)]));
    assert_eq!(r["redundancy"], json!({"num": 10, "den": 9}));

    let gap = write(&dir, "gap.json", &json!({"tx": [0, 5], "rx": [0, 5]}));
    let r = json_of(&run_ok(&["coarray", "-g", s(&gap)]));
    assert_eq!(r["redundancy"], Value::Null);
    assert!(r["reason"].as_str().unwrap().contains("holes"));

    let r = json_of(&run_ok(&["coarray", "-g", s(&d), "--mode", "difference"]));
    assert_eq!(r["kind"], json!("difference"));
    assert_eq!(r["positions"], json!([-4, -3, -2, -1, 0, 1, 2, 3, 4]));
}

#[test]
fn coarray_rejects_bad_files() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["coarray", "-g", s(&missing)])), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"tx\": [1, 0]").unwrap();
    assert_eq!(code(&run(&["coarray", "-g", s(&bad)])), 2);
    let negative = write(&dir, "negative.json", &json!({"tx": [-1, 0], "rx": [0]}));
    assert_eq!(code(&run(&["coarray", "-g", s(&negative)])), 2);
    let empty = write(&dir, "empty.json", &json!({"tx": [], "rx": [0]}));
    assert_eq!(code(&run(&["coarray", "-g", s(&empty)])), 2);
}

#[test]
fn search_mra_solutions() {
    let r = json_of(&run_ok(&["search-mra", "--n", "11"]));
    assert_eq!(r["complete"], json!(true));
    assert_eq!(r["aperture"], json!(22));
    assert_eq!(r["configs"].as_array().unwrap().len(), 6);

    let r = json_of(&run_ok(&["search-mra", "--n", "2"]));
    assert_eq!(r["configs"], json!([[0, 1]]));

    let r = json_of(&run_ok(&["search-mra", "--n", "6"]));
    assert_eq!(r["aperture"], json!(8));
    assert!(r["configs"]
        .as_array()
        .unwrap()
        .contains(&json!([0, 1, 3, 5, 7, 8])));
}

#[test]
fn search_mra_partial_is_data() {
    let out = run(&["search-mra", "--n", "12", "--max-nodes", "10"]);
    assert_eq!(code(&out), 0);
    let r = json_of(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(r["complete"], json!(false));
    assert_eq!(code(&run(&["search-mra", "--n", "0"])), 2);
}

#[test]
fn search_mra_independent_of_threads() {
    let one = json_of(&run_ok(&["--threads", "1", "search-mra", "--n", "10"]));
    let four = json_of(
        &String::from_utf8(
            bin()
                .env("COARRAY_LAB_THREADS", "4")
                .args(["search-mra", "--n", "10"])
                .output()
                .unwrap()
                .stdout,
        )
        .unwrap(),
    );
    assert_eq!(one["configs"], four["configs"]);
    assert_eq!(one["aperture"], four["aperture"]);
}

#[test]
fn pipeline_arraygen_coarray_synth() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    let c = dir.path().join("c.json");
    let out = dir.path().join("s.json");
    let csv = dir.path().join("p.csv");
    run_ok(&["arraygen", "--kind", "ula", "--n", "2", "-o", s(&g)]);
    run_ok(&["coarray", "-g", s(&g), "-o", s(&c)]);
    run_ok(&[
        "synth",
        "-g",
        s(&g),
        "--target",
        s(&c),
        "--method",
        "ls",
        "-o",
        s(&out),
        "--pattern-out",
        s(&csv),
        "--grid",
        "16",
    ]);
    let r = read(&out);
    assert_eq!(r["q"], json!(1));
    assert!(r["residual"].as_f64().unwrap() < 1e-12);
    let (us, values) = parse_beampattern_csv(&fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(us.len(), 16);
    let peak = values[us.iter().position(|&u| u == 0.0).unwrap()];
    assert!((peak.re - 4.0).abs() < 1e-12);
}

#[test]
fn synth_min_rank_mra_needs_two_components() {
    let dir = TempDir::new().unwrap();
    let g = write(
        &dir,
        "mra.json",
        &json!({"tx": [0, 1, 3, 5, 7, 8], "rx": [0, 1, 3, 5, 7, 8]}),
    );
    let u9 = dir.path().join("u9.json");
    let t = dir.path().join("t.json");
    let out = dir.path().join("s.json");
    run_ok(&["arraygen", "--kind", "ula", "--n", "9", "-o", s(&u9)]);
    run_ok(&["coarray", "-g", s(&u9), "-o", s(&t)]);
    let target = read(&t);
    let w: Vec<Value> = target["multiplicities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| json!({"re": m, "im": 0.0}))
        .collect();
    let t = write(&dir, "w.json", &json!({ "w_sigma": w }));
    run_ok(&[
        "synth",
        "-g",
        s(&g),
        "--target",
        s(&t),
        "--seed",
        "1",
        "-o",
        s(&out),
    ]);
    let r = read(&out);
    assert_eq!(r["q"], json!(2));
    assert!(r["residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(r["attempts"][0]["q"], json!(1));
    assert!(r["attempts"][0]["best_residual"].as_f64().unwrap() > 1e-3);

    let csv = run_ok(&[
        "beampattern",
        "-g",
        s(&g),
        "--components",
        s(&out),
        "--grid",
        "8",
    ]);
    let (us, values) = parse_beampattern_csv(&csv).unwrap();
    let peak = values[us.iter().position(|&u| u == 0.0).unwrap()];
    assert!((peak.re - 81.0).abs() < 1e-8);
}

#[test]
fn synth_errors() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &json!({"tx": [0, 1], "rx": [0, 1]}));
    let short = write(
        &dir,
        "short.json",
        &json!({"w_sigma": [{"re": 1.0, "im": 0.0}]}),
    );
    let out = run(&[
        "synth",
        "-g",
        s(&g),
        "--target",
        s(&short),
        "--method",
        "ls",
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("length"));

    let t = write(
        &dir,
        "t.json",
        &json!({"w_sigma": [{"re": 1.0, "im": 0.0}, {"re": 0.5, "im": 0.0}, {"re": 1.0, "im": 0.0}]}),
    );
    let out = run(&["synth", "-g", s(&g), "--target", s(&t)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    let out = run(&[
        "synth",
        "-g",
        s(&g),
        "--target",
        s(&t),
        "--seed",
        "3",
        "--restarts",
        "0",
        "--max-iters",
        "1",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code(&out), 3);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("residual"));
    assert!(
        stderr
            .lines()
            .filter(|l| l.trim_start().starts_with('1'))
            .count()
            >= 1
    );
}

#[test]
fn beampattern_single_weights() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &json!({"tx": [0, 1], "rx": [0, 1, 2]}));
    let one = json!({"re": 1.0, "im": 0.0});
    let w = write(
        &dir,
        "w.json",
        &json!({"w_tx": [one, one], "w_rx": [one, one, one]}),
    );
    let csv = run_ok(&[
        "beampattern",
        "-g",
        s(&g),
        "--weights",
        s(&w),
        "--grid",
        "4",
    ]);
    assert!(csv.starts_with("u,re,im,mag2\n"));
    let (us, values) = parse_beampattern_csv(&csv).unwrap();
    assert_eq!(csv, beampattern_csv(&us, &values));
    let peak = values[us.iter().position(|&u| u == 0.0).unwrap()];
    assert!((peak.re - 6.0).abs() < 1e-12);

    let bad = write(
        &dir,
        "bad.json",
        &json!({"w_tx": [one], "w_rx": [one, one, one]}),
    );
    assert_eq!(
        code(&run(&["beampattern", "-g", s(&g), "--weights", s(&bad)])),
        2
    );
}

fn matched_components(positions: &[u32], u: f64) -> Value {
    let a = to_cx(&steering_vector_u(positions, u));
    json!({
        "q": 1,
        "n_tx": positions.len(),
        "n_rx": positions.len(),
        "components": [{"w_tx": a, "w_rx": a}],
    })
}

#[test]
fn simulate_matched_output() {
    let dir = TempDir::new().unwrap();
    let positions = [0u32, 1, 3];
    let g = write(&dir, "g.json", &json!({"tx": positions, "rx": positions}));
    let theta: f64 = 0.3;
    let scene = write(
        &dir,
        "scene.json",
        &json!({"scatterers": [{"theta_rad": theta, "gamma": {"re": 1.0, "im": 0.0}}]}),
    );
    let comps = write(&dir, "c.json", &matched_components(&positions, theta.sin()));
    let r = json_of(&run_ok(&[
        "simulate",
        "-g",
        s(&g),
        "--scene",
        s(&scene),
        "--t",
        "4",
        "--seed",
        "5",
        "--components",
        s(&comps),
    ]));
    let total = &r["image_addition"]["total"];
    assert!((total["re"].as_f64().unwrap() - 9.0).abs() < 1e-12);
    assert!(total["im"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(r["measurement"]["rows"], json!(3));
    assert_eq!(r["measurement"]["cols"], json!(4));
}

#[test]
fn simulate_empty_scene_is_zero() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &json!({"tx": [0, 1], "rx": [0, 1]}));
    let scene = write(&dir, "scene.json", &json!({"scatterers": []}));
    let r = json_of(&run_ok(&[
        "simulate",
        "-g",
        s(&g),
        "--scene",
        s(&scene),
        "--t",
        "2",
        "--seed",
        "0",
        "--waveform",
        "phased-array",
        "--phi",
        "0.2",
    ]));
    let data = r["measurement"]["data"].as_array().unwrap();
    assert_eq!(data.len(), 4);
    assert!(data
        .iter()
        .all(|z| z["re"] == json!(0.0) && z["im"] == json!(0.0)));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &json!({"tx": [0, 1, 4], "rx": [0, 2]}));
    let scene = write(
        &dir,
        "scene.json",
        &json!({"scatterers": [
            {"theta_rad": -0.4, "gamma": {"re": 1.0, "im": 0.5}},
            {"theta_rad": 0.7, "gamma": {"re": -0.2, "im": 0.0}}
        ]}),
    );
    let files: Vec<PathBuf> = (0..3)
        .map(|i| dir.path().join(format!("y{i}.json")))
        .collect();
    for (i, f) in files.iter().enumerate() {
        let seed = if i < 2 { "11" } else { "12" };
        run_ok(&[
            "simulate",
            "-g",
            s(&g),
            "--scene",
            s(&scene),
            "--t",
            "5",
            "--sigma2",
            "0.3",
            "--seed",
            seed,
            "-o",
            s(f),
        ]);
    }
    let bytes: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(bytes[0], bytes[1]);
    assert_ne!(bytes[0], bytes[2]);

    let out = run(&["simulate", "-g", s(&g), "--scene", s(&scene), "--t", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_rejects_dimension_errors() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "g.json", &json!({"tx": [0, 1, 2], "rx": [0, 1]}));
    let scene = write(&dir, "scene.json", &json!({"scatterers": []}));
    let out = run(&[
        "simulate",
        "-g",
        s(&g),
        "--scene",
        s(&scene),
        "--t",
        "2",
        "--seed",
        "0",
    ]);
    assert_eq!(code(&out), 2);
    let comps = write(&dir, "c.json", &matched_components(&[0, 1], 0.0));
    let out = run(&[
        "simulate",
        "-g",
        s(&g),
        "--scene",
        s(&scene),
        "--t",
        "4",
        "--seed",
        "0",
        "--components",
        s(&comps),
    ]);
    assert_eq!(code(&out), 2);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geodesica"));
    c.env_remove("GEODESICA_THREADS");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run_in(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with("{\"error\"")).unwrap_or_else(|| panic!("{text}"));
    serde_json::from_str(line).unwrap()
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

/// Every non-manifest file in `dir`, sorted by name.
fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn closed_curve_embedding_reports_signature() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(
        d,
        &["generate", "--manifold", "example-curve", "-n", "200", "--sampling", "equally-spaced", "--out-dir", "gen"],
    );
    ok(d, &["geodesics", "--manifold", "gen/manifold.json", "--points", "gen/points.csv", "--out-dir", "geo"]);
    ok(d, &["embed", "--delta", "geo/geodesics.csv", "--method", "cmds", "--dim", "2", "--out-dir", "emb"]);
    let s = json(d.join("emb/spectrum.json"));
    assert_eq!((s["n_pos"].as_u64(), s["n_zero"].as_u64(), s["n_neg"].as_u64()), (Some(100), Some(1), Some(99)));
    assert!((s["pos_variation"].as_f64().unwrap() - 50.0).abs() < 1e-6);
    let config = fs::read_to_string(d.join("emb/configuration.csv")).unwrap();
    assert!(config.starts_with("dim=2\n"));
    assert_eq!(config.lines().count(), 201);
    let m = json(d.join("emb/manifest.json"));
    assert_eq!(m["command"], "embed");
    assert_eq!(m["inputs"][0]["path"], "geo/geodesics.csv");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn off_center_pipeline_runs_twenty_guttman_steps() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(
        t.path(),
        "run.json",
        r#"{"output_dir":"out","seed":37,"manifold":"off-center-hole","stages":[
            {"stage":"generate","n":600},
            {"stage":"geodesics"},
            {"stage":"embed","input":"geodesics","method":"smacof","iterations":20,"rel_tol":0},
            {"stage":"plot"}]}"#,
    );
    ok(t.path(), &["pipeline", "--config", cfg.to_str().unwrap()]);
    let out = t.path().join("out");
    let trace = json(out.join("trace.json"));
    assert_eq!(trace["iterations"], 20);
    assert_eq!(trace["trace"].as_array().unwrap().len(), 21);
    assert!(trace["final_stress"].as_f64().unwrap() <= trace["initial_stress"].as_f64().unwrap());
    assert_eq!(fs::read_to_string(out.join("configuration.csv")).unwrap().lines().count(), 601);
    assert_eq!(fs::read_to_string(out.join("plot.svg")).unwrap().matches("<circle").count(), 600);
}

#[test]
fn empty_stage_list_writes_nothing() {
    let t = TempDir::new().unwrap();
    let cfg = write_config(t.path(), "empty.json", r#"{"output_dir":"out","stages":[]}"#);
    ok(t.path(), &["pipeline", "--config", cfg.to_str().unwrap()]);
    assert!(!t.path().join("out").exists());
}

#[test]
fn failures_emit_error_json() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let out = run_in(d, &["embed", "--delta", "missing.csv", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "missing-file");
    assert_eq!(e["error"]["path"], "missing.csv");

    fs::write(d.join("bad.csv"), "0,1\n1,0\n2,oops\n").unwrap();
    let e = error_json(&run_in(d, &["embed", "--delta", "bad.csv", "--out-dir", "o"]));
    assert_eq!(e["error"]["kind"], "parse");
    assert!(e["error"]["message"].as_str().unwrap().contains("line 3"));

    let out = run_in(d, &["embed", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "usage");

    let out = run_in(d, &["generate", "--manifold", "torus", "-n", "5", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("o").exists());
}

fn two_clusters(dir: &Path) {
    let mut text = String::from("dim=2\n");
    for i in 0..10 {
        text.push_str(&format!("{},0\n", i as f64 * 0.1));
    }
    for i in 0..4 {
        text.push_str(&format!("{},5\n", i as f64 * 0.1));
    }
    fs::write(dir.join("points.csv"), text).unwrap();
}

#[test]
fn disconnected_graph_is_strict_by_default() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    two_clusters(d);
    ok(d, &["graph", "--points", "points.csv", "--epsilon", "0.15", "--out-dir", "g"]);
    let conn = json(d.join("g/connectivity.json"));
    assert_eq!(conn["n_components"], 2);

    let out = run_in(d, &["shortest-paths", "--points", "points.csv", "--graph", "g/graph.json", "--out-dir", "sp"]);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "disconnected");
    assert!(e["error"]["message"].as_str().unwrap().contains("--largest-component"));
    assert!(!d.join("sp").exists());

    let out = ok(
        d,
        &[
            "shortest-paths",
            "--points",
            "points.csv",
            "--graph",
            "g/graph.json",
            "--largest-component",
            "--out-dir",
            "sp",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("\"warning\""));
    let kept = json(d.join("sp/kept.json"));
    assert_eq!(kept["kept"].as_array().unwrap().len(), 10);
    assert_eq!(kept["original_n"], 14);
    ok(d, &["embed", "--delta", "sp/distances.csv", "--dim", "1", "--out-dir", "emb"]);

    // an unrestricted matrix with inf entries is refused by embed
    fs::write(d.join("inf.csv"), "0,inf\ninf,0\n").unwrap();
    let e = error_json(&run_in(d, &["embed", "--delta", "inf.csv", "--out-dir", "x"]));
    assert_eq!(e["error"]["kind"], "disconnected");
}

#[test]
fn plot_output() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("one.csv"), "dim=2\n0.5,-0.25\n").unwrap();
    ok(d, &["plot", "--configuration", "one.csv", "--out-dir", "p1"]);
    let svg = fs::read_to_string(d.join("p1/plot.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1);
    assert!(svg.contains(r#"viewBox="-0.050000 -0.300000 1.100000 1.100000""#), "{svg}");

    ok(d, &["plot", "--configuration", "one.csv", "--out-dir", "p2"]);
    assert_eq!(fs::read(d.join("p1/plot.svg")).unwrap(), fs::read(d.join("p2/plot.svg")).unwrap());

    fs::write(d.join("three.csv"), "dim=3\n0,0,0\n1,1,1\n").unwrap();
    let e = error_json(&run_in(d, &["plot", "--configuration", "three.csv", "--out-dir", "p3"]));
    assert_eq!(e["error"]["kind"], "shape-mismatch");

    fs::write(d.join("two.csv"), "dim=2\n0,0\n1,1\n").unwrap();
    fs::write(d.join("labels.json"), r#"{"component_map":[0,1]}"#).unwrap();
    ok(d, &["plot", "--configuration", "two.csv", "--labels", "labels.json", "--out-dir", "p4"]);
    assert!(fs::read_to_string(d.join("p4/plot.svg")).unwrap().contains("#ff7f0e"));
}

const CIRCLE_PIPELINE: &str = r#"{"output_dir":"piped","seed":5,"manifold":"unit-circle","stages":[
    {"stage":"generate","n":150},
    {"stage":"graph","epsilon":0.3},
    {"stage":"shortest-paths"},
    {"stage":"audit","lambda":0.2,"s0_probes":200,"covering_probes":300},
    {"stage":"embed","method":"smacof","iterations":10},
    {"stage":"frechet"},
    {"stage":"plot"}]}"#;

#[test]
fn pipeline_equals_subcommand_composition() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let cfg = write_config(d, "circle.json", CIRCLE_PIPELINE);
    ok(d, &["pipeline", "--config", cfg.to_str().unwrap()]);

    let s = "sub";
    ok(d, &["generate", "--manifold", "unit-circle", "--seed", "5", "-n", "150", "--out-dir", s]);
    ok(d, &["graph", "--points", "sub/points.csv", "--epsilon", "0.3", "--out-dir", s]);
    ok(d, &["shortest-paths", "--points", "sub/points.csv", "--graph", "sub/graph.json", "--out-dir", s]);
    ok(
        d,
        &[
            "audit",
            "--manifold",
            "unit-circle",
            "--points",
            "sub/points.csv",
            "--distances",
            "sub/distances.csv",
            "--epsilon",
            "0.3",
            "--lambda",
            "0.2",
            "--seed",
            "5",
            "--s0-probes",
            "200",
            "--covering-probes",
            "300",
            "--out-dir",
            s,
        ],
    );
    ok(d, &["embed", "--delta", "sub/distances.csv", "--method", "smacof", "--iterations", "10", "--out-dir", s]);
    ok(d, &["frechet", "--delta", "sub/distances.csv", "--configuration", "sub/configuration.csv", "--out-dir", s]);
    ok(d, &["plot", "--configuration", "sub/configuration.csv", "--out-dir", s]);

    let piped = artifacts(&d.join("piped"));
    let composed = artifacts(&d.join(s));
    let names: Vec<&str> = piped.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "audit.json",
            "bounds.json",
            "configuration.csv",
            "connectivity.json",
            "distances.csv",
            "frechet.json",
            "graph.json",
            "manifold.json",
            "plot.svg",
            "points.csv",
            "spectrum.json",
            "trace.json"
        ]
    );
    assert_eq!(piped, composed);
    let f = json(d.join("piped/frechet.json"));
    assert_eq!(f[0]["method"], "geodesic-brute-force");
    assert_eq!(f[1]["method"], "embedded-average");
}

#[test]
fn rerun_reproduces_outputs_byte_for_byte() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    let cfg = write_config(d, "circle.json", CIRCLE_PIPELINE);
    ok(d, &["pipeline", "--config", cfg.to_str().unwrap()]);
    ok(d, &["rerun", "--manifest", "piped/manifest.json", "--out-dir", "again"]);
    assert_eq!(artifacts(&d.join("piped")), artifacts(&d.join("again")));

    ok(d, &["generate", "--manifold", "spiral", "--seed", "9", "-n", "40", "--out-dir", "g"]);
    ok(d, &["rerun", "--manifest", "g/manifest.json", "--out-dir", "g2"]);
    assert_eq!(artifacts(&d.join("g")), artifacts(&d.join("g2")));

    // a changed input is detected before anything runs
    fs::write(&cfg, CIRCLE_PIPELINE.replace("\"seed\":5", "\"seed\":6")).unwrap();
    let out = run_in(d, &["rerun", "--manifest", "piped/manifest.json", "--out-dir", "third"]);
    assert_eq!(error_json(&out)["error"]["kind"], "reproducibility");
    assert!(!d.join("third").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    for body in [
        r#"{"output_dir":"o","stages":[],"extra":1}"#,
        r#"{"output_dir":"o","manifold":"unit-circle","stages":[{"stage":"generate","n":5,"colour":"red"}]}"#,
    ] {
        let cfg = write_config(d, "bad.json", body);
        let out = run_in(d, &["pipeline", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1));
        assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("unknown field"));
    }
    let cfg = write_config(d, "order.json", r#"{"output_dir":"o","stages":[{"stage":"plot","source":"projection"}]}"#);
    let e = error_json(&run_in(d, &["pipeline", "--config", cfg.to_str().unwrap()]));
    assert_eq!(e["error"]["kind"], "config");
    assert!(!d.join("o").exists());
}

#[test]
fn strict_audit_fails_on_uncertifiable_runs() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["generate", "--manifold", "thin-frame", "-n", "200", "--seed", "1", "--out-dir", "a"]);
    ok(d, &["graph", "--points", "a/points.csv", "--epsilon", "0.1", "--out-dir", "a"]);
    ok(d, &["shortest-paths", "--points", "a/points.csv", "--graph", "a/graph.json", "--out-dir", "a"]);
    let audit = |strict: bool, out: &str| {
        let mut args = vec![
            "audit",
            "--manifold",
            "thin-frame",
            "--points",
            "a/points.csv",
            "--distances",
            "a/distances.csv",
            "--epsilon",
            "0.1",
            "--covering-probes",
            "200",
            "--out-dir",
            out,
        ];
        if strict {
            args.push("--strict");
        }
        run_in(d, &args)
    };
    assert!(audit(false, "lenient").status.success());
    assert_eq!(json(d.join("lenient/audit.json"))["audit"]["mode"], "empirical");

    let out = audit(true, "strict");
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "hypothesis");
    assert!(e["error"]["message"].as_str().unwrap().contains("corners"));
    // the report is still written for inspection
    assert_eq!(json(d.join("strict/audit.json"))["certified"], false);
    assert!(d.join("strict/manifest.json").exists());
}

#[test]
fn thread_count_does_not_change_results() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    ok(d, &["generate", "--manifold", "sphere", "-n", "120", "--seed", "4", "--out-dir", "g"]);
    for (threads, out) in [("1", "one"), ("3", "three")] {
        let o = bin()
            .current_dir(d)
            .env("GEODESICA_THREADS", threads)
            .args(["geodesics", "--manifold", "sphere", "--points", "g/points.csv", "--out-dir", out])
            .output()
            .unwrap();
        assert!(o.status.success());
        let o = bin()
            .current_dir(d)
            .env("GEODESICA_THREADS", threads)
            .args(["embed", "--delta", &format!("{out}/geodesics.csv"), "--method", "smacof", "--out-dir", out])
            .output()
            .unwrap();
        assert!(o.status.success());
    }
    assert_eq!(
        fs::read(d.join("one/configuration.csv")).unwrap(),
        fs::read(d.join("three/configuration.csv")).unwrap()
    );
    assert_eq!(fs::read(d.join("one/geodesics.csv")).unwrap(), fs::read(d.join("three/geodesics.csv")).unwrap());

    let o = bin().current_dir(d).env("GEODESICA_THREADS", "0").args(["plot", "--help"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "usage");
}

#[test]
fn projection_of_a_coastline_file() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("coast.csv"), "lat_deg,lon_deg\n10,-80\n0,0\n45,-120\n20,30\n").unwrap();
    ok(
        d,
        &[
            "project",
            "--method",
            "transverse-mercator",
            "--coastline",
            "coast.csv",
            "--western-only",
            "--out-dir",
            "tm",
        ],
    );
    let report = json(d.join("tm/projection.json"));
    assert_eq!(report["n_input"], 3);
    assert_eq!(report["n_output"], 2);
    // (0, 0) sits 90 degrees from the central meridian on the equator
    assert_eq!(report["singular"], serde_json::json!([1]));
    assert_eq!(fs::read_to_string(d.join("tm/projection.csv")).unwrap().lines().count(), 3);

    ok(d, &["project", "--method", "equirectangular", "--coastline", "coast.csv", "--out-dir", "eq"]);
    let eq = fs::read_to_string(d.join("eq/projection.csv")).unwrap();
    let first: Vec<f64> = eq.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first, vec![(-80.0_f64).to_radians(), 10.0_f64.to_radians()]);

    fs::write(d.join("bad.csv"), "lat,lon\n1,2\n").unwrap();
    let e = error_json(&run_in(d, &["project", "--method", "lambert", "--coastline", "bad.csv", "--out-dir", "x"]));
    assert_eq!(e["error"]["kind"], "parse");
}

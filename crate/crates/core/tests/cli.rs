mod common;

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nervelab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nervelab")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write<T: serde::Serialize>(name: &str, v: &T) -> String {
    let p = tmp(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn homology_json() {
    let circle = write("circle.json", &common::circle());
    let o = run(&["homology", &circle, "--dim", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["dim"], 1);
    assert_eq!(v["rank"], 1);
    assert_eq!(v["torsion"], serde_json::json!([]));

    let o = run(&["homology", &circle, "--dim", "0", "--reduced"]);
    assert_eq!(json(&o)["rank"], 0);

    let rp2 = write("rp2.json", &common::rp2_6());
    let v = json(&run(&["homology", &rp2]));
    let ranks: Vec<i64> = v.as_array().unwrap().iter().map(|g| g["rank"].as_i64().unwrap()).collect();
    assert_eq!(ranks, vec![1, 0, 0]);
    assert_eq!(v[1]["torsion"], serde_json::json!([2]));
}

#[test]
fn cover_commands() {
    let cover = write("two-balls.json", &common::two_ball_cover());
    let o = run(&["grate", &cover, "--id", "u", "--center", "-1/2,0", "--epsilon", "1/2", "--m", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let grated = json(&o);
    let ids: Vec<&str> = grated["elements"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(ids, vec!["u/1", "u/2", "u/3", "v"]);

    // center outside the kernel of u
    let o = run(&["grate", &cover, "--id", "u", "--center", "3/4,0", "--epsilon", "1/8", "--m", "2"]);
    assert_eq!(code(&o), 1);

    let o = run(&["kernel", &cover, "--id", "v"]);
    assert_eq!(code(&o), 0);
    assert!(!json(&o)["kernel"].as_array().unwrap().is_empty());

    let o = run(&["nerve", &cover, "--format", "off"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("OFF"));
    let o = run(&["nerve", &cover, "--format", "dot"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"u\" -- \"v\""));

    assert_eq!(code(&run(&["mesh", &cover])), 0);
    // u and v already meet
    assert_eq!(code(&run(&["extend", &cover, "--ids", "u,v"])), 1);

    let arc = write("arc.json", &common::random_arc_cover(5));
    let o = run(&["canonize", &arc]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_round_trip_and_exit_codes() {
    let out = tmp("bouquet.json");
    let o = run(&["example", "bouquet", "--N", "4", "--stages", "all", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let o = run(&["verify", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "verified");

    let mut r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    r["verdicts"]["injective"] = Value::Bool(false);
    let bad = write("bouquet-bad.json", &r);
    assert_eq!(code(&run(&["verify", &bad])), 2);

    let o = run(&["export", out.to_str().unwrap(), "--stage", "stage1", "--format", "dot"]);
    assert_eq!(code(&o), 0);
    assert_eq!(code(&run(&["export", out.to_str().unwrap(), "--stage", "nope"])), 1);

    let tower = write("tower.json", &r["tower"]);
    let o = run(&["tower", &tower, "--eventual-image", "--stage", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["rank"], 0);

    assert_eq!(code(&run(&["verify", "/nonexistent/report.json"])), 1);
    assert_eq!(code(&run(&["scene", "torus"])), 1);
}

#[test]
fn thm1_and_scene() {
    let o = run(&["scene", "sinusoid"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["disks"].is_array());

    let out = tmp("thm1.json");
    let o = run(&["thm1", "--scene", "point", "--epsilon", "1/2", "--K", "17", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["verify", out.to_str().unwrap()])), 0);
    assert_eq!(code(&run(&["thm1", "--scene", "point", "--epsilon", "1/2", "--K", "16"])), 1);
}

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn infodist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infodist"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn eval_reports_every_key() {
    let out = infodist(&["eval", "--lambda", "0.8,0.7,0.4,0"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in [
        "d", "lambdas", "G", "F", "R", "p", "n1", "nd", "n0", "cos_theta_g", "cos_theta_f",
        "cos_theta_r", "C_GF", "C_GR", "C_GF_pp", "C_GF_mp", "C_GF_pm", "C_GF_mm", "C_GR_pp",
        "C_GR_mp", "C_GR_pm", "C_GR_mm", "improvability_gf", "improvability_gr",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["G"].as_f64().unwrap() - 0.299_224_806_201_550_4).abs() < 1e-15);
    assert!((v["F"].as_f64().unwrap() - 0.759_689_922_480_620_2).abs() < 1e-15);
    assert_eq!(v["R"].as_f64().unwrap(), 0.0);
    assert!((v["p"].as_f64().unwrap() - 0.3225).abs() < 1e-15);
    assert_eq!(v["n0"], 1);
}

#[test]
fn eval_round_trips() {
    let first = stdout(&infodist(&["eval", "--lambda", "0.9,0.6,0.3,0.1"]));
    let v: Value = serde_json::from_str(&first).unwrap();
    let lambdas: Vec<String> = v["lambdas"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap().to_string())
        .collect();
    let second = stdout(&infodist(&["eval", "--lambda", &lambdas.join(",")]));
    assert_eq!(first, second);
}

#[test]
fn rescale_is_opt_in() {
    let out = infodist(&["eval", "--lambda", "1.5,0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds 1"));

    let out = infodist(&["eval", "--lambda", "2,1", "--rescale"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["lambdas"], serde_json::json!([1.0, 0.5]));
}

#[test]
fn exit_codes() {
    assert_eq!(infodist(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(infodist(&["eval"]).status.code(), Some(2));
    assert_eq!(infodist(&["eval", "--lambda", "0.5,-0.2"]).status.code(), Some(2));
    assert_eq!(infodist(&["scatter", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(
        infodist(&["scatter", "--lambda", "0.5,0.2", "--pair", "xy"]).status.code(),
        Some(2)
    );
    assert_eq!(infodist(&["eval", "--lambda", "0.5,0.2", "--d", "3"]).status.code(), Some(2));
    assert_eq!(infodist(&["--help"]).status.code(), Some(0));

    // Rank-1 projection in d = 30: every one of the 29 zero components must
    // grow, so only one draw in 2²⁹ is admissible.
    let mut lambda = vec!["1"];
    lambda.extend(std::iter::repeat_n("0", 29));
    let out = infodist(&["scatter", "--lambda", &lambda.join(","), "--count", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn scatter_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = infodist(&[
            "scatter", "--preset", "nd=2", "--pair", "gr", "--count", "3000", "--seed", "42",
            "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,dg,dd"));
    assert_eq!(lines.count(), 3000);

    let other = stdout(&infodist(&[
        "scatter", "--preset", "nd=2", "--pair", "gr", "--count", "3000", "--seed", "43",
    ]));
    assert_ne!(other, text);
}

#[test]
fn improve_trajectory_csv() {
    let out = infodist(&["improve", "--lambda", "0.8,0.7,0.4,0", "--pair", "gf", "--eps", "0.05"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iter,lambda1,lambda2,lambda3,lambda4,G,D,improvability,nd,events")
    );
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    let lambdas: Vec<f64> = last[1..5].iter().map(|x| x.parse().unwrap()).collect();
    for (x, want) in lambdas.iter().zip([0.93, 0.39, 0.39, 0.39]) {
        assert!((x - want).abs() <= 0.02);
    }
    assert_eq!(last[9], "converged");

    let gr = stdout(&infodist(&["improve", "--lambda", "0.8,0.7,0.4,0", "--pair", "gr", "--eps", "0.01"]));
    assert!(gr.lines().filter(|l| l.contains("boundary_landed")).count() >= 2);
    assert!(gr.lines().any(|l| l.contains("renormalized")));
}

#[test]
fn seventeen_significant_digits() {
    let text = stdout(&infodist(&["scatter", "--preset", "smooth", "--count", "5"]));
    for line in text.lines().skip(1) {
        for field in line.split(',').skip(1) {
            let mantissa = field.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17, "{field}");
        }
    }
}

#[test]
fn region_and_range_schemas() {
    let text = stdout(&infodist(&["region", "--preset", "p_r"]));
    assert_eq!(text.lines().next(), Some("segment,t,x,y"));
    for seg in ["1", "2", "3", "4", "sigma"] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{seg},"))));
    }

    let text = stdout(&infodist(&["range", "--d", "4", "--pair", "gr", "--count", "11"]));
    assert_eq!(text.lines().next(), Some("family,param,G,C"));
    assert!(text.lines().any(|l| l.starts_with("L_2,")));
    assert!(text.lines().any(|l| l.starts_with("P_4,")));
}

#[test]
fn oracle_checks() {
    let text = stdout(&infodist(&["oracle", "--lambda", "0.8,0.7,0.4,0", "--samples", "20000"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,closed_form,mc_value,std_error,z_score"));
    for line in lines {
        let z: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(z.abs() < 5.0, "{line}");
    }

    let out = infodist(&["oracle", "--lambda", "0.8,0.7,0.4,0", "--check", "gradients"]);
    assert_eq!(out.status.code(), Some(2));

    let out = infodist(&["oracle", "--preset", "smooth", "--check", "region", "--samples", "2000"]);
    assert!(out.status.success());
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("gf,2000,0,0,"), "{row}");
}

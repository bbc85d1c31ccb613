use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nacstruct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nacstruct"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Two comonotone columns and one unrelated column.
fn write_comonotone_csv(path: &Path) {
    let mut s = String::from("x1,x2,x3\n");
    for i in 0..60u64 {
        let x = i as f64 / 60.0;
        let noise = ((i * 37 + 11) % 61) as f64 / 61.0;
        s.push_str(&format!("{x},{},{noise}\n", 2.0 * x + 1.0));
    }
    fs::write(path, s).unwrap();
}

const CHAIN_SPEC: &str = r#"{"newick":"(U1,(U2,(U3,U4)));","generators":[
  {"node_path":"","family":"clayton","tau":0.2},
  {"node_path":"1","family":"clayton","tau":0.5},
  {"node_path":"1.1","family":"clayton","tau":0.8}]}"#;

#[test]
fn help_and_unknown_commands() {
    assert!(nacstruct(&["--help"]).status.success());
    let help = stdout(&nacstruct(&["estimate", "--help"]));
    for flag in ["--input", "--method", "--tau-c", "--alpha", "--boot", "--seed", "--output", "--annotate"] {
        assert!(help.contains(flag), "{flag}");
    }
    assert_eq!(nacstruct(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nacstruct(&["estimate", "--bogus"]).status.code(), Some(1));
}

#[test]
fn estimate_annotates_the_comonotone_cherry() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    write_comonotone_csv(&csv);
    let out = dir.path().join("t.nwk");
    let o = nacstruct(&["estimate", "--input", p(&csv), "--annotate", "--output", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("(x1,x2)1"), "{text}");
    let out2 = dir.path().join("t2.nwk");
    nacstruct(&["estimate", "--input", p(&csv), "--annotate", "--output", p(&out2)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn estimate_without_collapse_is_binary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, CHAIN_SPEC).unwrap();
    let csv = dir.path().join("d.csv");
    assert!(nacstruct(&["sample", "--spec", p(&spec), "--n", "300", "--seed", "2", "--output", p(&csv)]).status.success());
    let o = nacstruct(&["estimate", "--input", p(&csv), "--tau-c", "0"]);
    let tree = nacstruct::tree::parse_newick(stdout(&o).trim()).unwrap();
    assert!(tree.is_binary());
    let o = nacstruct(&["estimate", "--input", p(&csv), "--method", "kt_kb", "--alpha", "0.05", "--boot", "49"]);
    assert!(o.status.success());
}

#[test]
fn estimate_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    fs::write(&csv, "a,b\n0.1,0.2\n0.3,0.1\n0.5,0.9\n").unwrap();
    assert_eq!(nacstruct(&["estimate", "--input", p(&csv)]).status.code(), Some(2));
    let missing = dir.path().join("none.csv");
    assert_eq!(nacstruct(&["estimate", "--input", p(&missing)]).status.code(), Some(2));
    let good = dir.path().join("d.csv");
    write_comonotone_csv(&good);
    for bad in [
        vec!["--method", "kt_kb", "--tau-c", "0.1"],
        vec!["--method", "kt_kagg", "--alpha", "0.1"],
        vec!["--method", "nonsense"],
        vec!["--tau-c", "-1"],
    ] {
        let mut args = vec!["estimate", "--input", p(&good)];
        args.extend(bad.iter());
        assert_eq!(nacstruct(&args).status.code(), Some(1), "{bad:?}");
    }
}

#[test]
fn sample_is_reproducible_and_checked() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("fan.json");
    fs::write(
        &spec,
        r#"{"newick":"(a,b,c);","generators":[{"node_path":"","family":"clayton","tau":0.5}]}"#,
    )
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert!(nacstruct(&["sample", "--spec", p(&spec), "--n", "5", "--seed", "9", "--output", p(out)]).status.success());
    }
    let text = fs::read_to_string(&a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a,b,c");
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        assert!(line.split(',').all(|v| {
            let v: f64 = v.parse().unwrap();
            v > 0.0 && v < 1.0
        }));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"newick":"(a,(b,c));","generators":[{"node_path":"","family":"clayton","tau":0.8},{"node_path":"1","family":"clayton","tau":0.3}]}"#,
    )
    .unwrap();
    let o = nacstruct(&["sample", "--spec", p(&bad), "--n", "5", "--output", p(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_writes_reproducible_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = nacstruct(&[
            "simulate",
            "--paper-config",
            "fig7_right",
            "--out",
            p(&out),
            "--replicates",
            "3",
            "--sample-sizes",
            "40,80",
            "--estimators",
            "kt_kagg,kt_kb",
            "--boot",
            "19",
            "--no-timing",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    for f in ["results.csv", "summary.json", "config.json"] {
        assert!(a.join(f).is_file(), "{f}");
    }
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(b.join("results.csv")).unwrap());
    let rows = fs::read_to_string(a.join("results.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 2 * 3 * (7 + 6));

    // The saved configuration runs as a config file.
    let c = dir.path().join("c");
    let o = nacstruct(&["simulate", "--config", p(&a.join("config.json")), "--out", p(&c)]);
    assert!(o.status.success());
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(c.join("results.csv")).unwrap());

    let cfg = dir.path().join("empty.json");
    let text = fs::read_to_string(a.join("config.json")).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["estimators"] = serde_json::json!([]);
    json["thresholds"] = serde_json::json!({});
    fs::write(&cfg, json.to_string()).unwrap();
    assert_ne!(nacstruct(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("e"))]).status.code(), Some(0));
    assert_eq!(
        nacstruct(&["simulate", "--paper-config", "fig99", "--out", p(&dir.path().join("f"))]).status.code(),
        Some(1)
    );
}

#[test]
fn treedist_outputs() {
    let o = nacstruct(&["treedist", "--a", "(U1,(U2,(U3,U4)));", "--b", "((U4,U3),U2,U1);"]);
    assert_eq!(stdout(&o).trim(), "01=1 tri=2 max=4");
    let o = nacstruct(&["treedist", "--a", "(U1,(U2,(U3,U4)));", "--b", "(U1,(U2,U3,U4));"]);
    // Only the triple (U2,U3,U4) changes from a cherry to a fan.
    assert_eq!(stdout(&o).trim(), "01=1 tri=1 max=4");
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.nwk");
    fs::write(&f, "((a,b),c,d);\n").unwrap();
    let o = nacstruct(&["treedist", "--a", p(&f), "--b", p(&f)]);
    assert!(stdout(&o).starts_with("01=0 tri=0"));
    assert_eq!(nacstruct(&["treedist", "--a", "(a,b,c);", "--b", "(a,b,d);"]).status.code(), Some(2));
}

#[test]
fn triples_outputs() {
    assert_eq!(stdout(&nacstruct(&["triples", "--input", "(U1,U2,U3);"])).trim(), "U1,U2,U3 FAN");
    assert_eq!(stdout(&nacstruct(&["triples", "--input", "(U1,(U2,U3));"])).trim(), "U2,U3|U1 CHERRY");
    assert_eq!(stdout(&nacstruct(&["triples", "--input", "((a,b),(c,d));"])).lines().count(), 4);
    assert_eq!(nacstruct(&["triples", "--input", "(U1,U2);"]).status.code(), Some(2));
}

#[test]
fn distmat_writes_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    write_comonotone_csv(&csv);
    let o = nacstruct(&["distmat", "--input", p(&csv), "--kind", "kt"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], ",x1,x2,x3");
    assert!(lines[1].starts_with("x1,0,0,"));
    assert_eq!(nacstruct(&["distmat", "--input", p(&csv), "--kind", "zz"]).status.code(), Some(1));
}

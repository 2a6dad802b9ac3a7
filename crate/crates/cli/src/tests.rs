use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{execute, jobs};

const REFERENCE: &str = r#"{"a1":1,"a2":1,"beta":[0,1],"delta":[1,1],"q_left":"0","q_right":"0"}"#;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("p.json"), REFERENCE).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn write(&self, name: &str, text: &str) {
        std::fs::write(self.path(name), text).unwrap();
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.path(name)).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&self.read(name)).unwrap()
    }

    /// Runs `spectra4 <args>`; `@name` expands to a path inside the workspace.
    fn run(&self, args: &[&str]) -> u8 {
        let argv: Vec<String> = std::iter::once("spectra4".to_string())
            .chain(args.iter().map(|a| match a.strip_prefix('@') {
                Some(name) => self.arg(name),
                None => a.to_string(),
            }))
            .collect();
        execute(argv)
    }
}

fn manifest_line(text: &str, out: &Path) -> bool {
    let name = out.file_name().unwrap().to_string_lossy();
    text.starts_with(&format!("# manifest={name}.manifest.json\n"))
}

#[test]
fn unknown_flag_exits_one() {
    let w = Workspace::new();
    assert_eq!(w.run(&["solve", "--config", "@p.json", "--no-such-flag"]), 1);
    assert_eq!(w.run(&["frobnicate"]), 1);
}

#[test]
fn help_and_version_exit_zero() {
    let w = Workspace::new();
    assert_eq!(w.run(&["--help"]), 0);
    assert_eq!(w.run(&["--version"]), 0);
}

#[test]
fn invalid_config_exits_one() {
    let w = Workspace::new();
    w.write("neg.json", &REFERENCE.replace(r#""a1":1"#, r#""a1":-2"#));
    assert_eq!(w.run(&["solve", "--config", "@neg.json"]), 1);
    w.write("syntax.json", "{ not json");
    assert_eq!(w.run(&["solve", "--config", "@syntax.json"]), 1);
    assert_eq!(w.run(&["solve", "--config", "@missing.json"]), 1);
    w.write("unknown.json", &REFERENCE.replace(r#""a1":1"#, r#""a1":1,"a3":1"#));
    assert_eq!(w.run(&["solve", "--config", "@unknown.json"]), 1);
}

#[test]
fn bad_potential_exits_one() {
    let w = Workspace::new();
    w.write("q.json", &REFERENCE.replace(r#""q_left":"0""#, r#""q_left":"sin(x""#));
    assert_eq!(w.run(&["solve", "--config", "@q.json"]), 1);
    w.write("y.json", &REFERENCE.replace(r#""q_left":"0""#, r#""q_left":"y""#));
    assert_eq!(w.run(&["solve", "--config", "@y.json"]), 1);
}

#[test]
fn bad_numeric_arguments_exit_one() {
    let w = Workspace::new();
    assert_eq!(w.run(&["charfun", "--config", "@p.json", "--s-grid", "1:0"]), 1);
    assert_eq!(
        w.run(&["solve", "--config", "@p.json", "--s-min", "5", "--s-max", "1"]),
        1
    );
    assert_eq!(w.run(&["solve", "--config", "@p.json", "--accuracy", "0"]), 1);
    assert_eq!(w.run(&["oracle", "--config", "@p.json", "--n", "3"]), 1);
    assert_eq!(w.run(&["solve", "--config", "@p.json", "--eigenfunctions", "2"]), 1);
}

#[test]
fn jobs_resolution() {
    assert_eq!(jobs(Some(3), Some("7".into())).unwrap(), 3);
    assert_eq!(jobs(None, Some(" 7 ".into())).unwrap(), 7);
    assert_eq!(jobs(None, None).unwrap(), 0);
    assert!(jobs(None, Some("many".into())).is_err());
}

#[test]
fn solve_writes_manifest_and_tagged_csv() {
    let w = Workspace::new();
    let status = w.run(&[
        "solve",
        "--config",
        "@p.json",
        "--s-max",
        "5",
        "--out",
        "@eig.json",
        "--eigenfunctions",
        "2",
    ]);
    assert_eq!(status, 0);
    let records = w.json("eig.json");
    let list = records.as_array().unwrap();
    assert!(list.len() >= 4);
    assert_eq!(list[0]["n"], 0);
    assert_eq!(list[0]["method"], "shooting");

    let manifest = w.json("eig.json.manifest.json");
    assert_eq!(manifest["subcommand"], "solve");
    assert_eq!(manifest["problem"]["delta"], serde_json::json!([1.0, 1.0]));
    assert_eq!(manifest["tolerances"]["s_max"], 5.0);
    assert!(manifest["timings_ms"]["scan"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);

    let out = w.path("eig.json");
    for csv in ["eig.csv", "eig.eigfn0.csv", "eig.eigfn1.csv"] {
        assert!(manifest_line(&w.read(csv), &out), "{csv}");
    }
    assert_eq!(w.read("eig.csv").lines().count(), list.len() + 2);
}

#[test]
fn charfun_samples_both_axes() {
    let w = Workspace::new();
    assert_eq!(
        w.run(&["charfun", "--config", "@p.json", "--s-grid", "-2:2:0.5", "--out", "@w.csv"]),
        0
    );
    let text = w.read("w.csv");
    assert!(manifest_line(&text, &w.path("w.csv")));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(
        rows[0],
        "lambda_re,lambda_im,s_re,s_im,w_scaled_re,w_scaled_im,log_scale"
    );
    assert_eq!(rows.len(), 10);
    assert!(rows[1].starts_with("-16,"));
    assert!(rows[9].starts_with("16,"));
}

#[test]
fn asym_matches_a_solved_spectrum() {
    let w = Workspace::new();
    assert_eq!(
        w.run(&["solve", "--config", "@p.json", "--s-max", "12", "--out", "@eig.json"]),
        0
    );
    let status = w.run(&[
        "asym",
        "--config",
        "@p.json",
        "--n-max",
        "4",
        "--out",
        "@grid.csv",
        "--match",
        "@eig.json",
    ]);
    assert_eq!(status, 0);
    assert_eq!(w.read("grid.csv").lines().count(), 2 + 8);
    let matched = w.json("grid.matched.json");
    assert!(matched["records"]
        .as_array()
        .unwrap()
        .iter()
        .any(|r| !r["asym"].is_null()));

    assert_eq!(
        w.run(&["asym", "--config", "@p.json", "--family", "prime", "--out", "@one.csv"]),
        0
    );
    assert!(w.read("one.csv").lines().skip(2).all(|l| l.contains(",prime,")));
}

#[test]
fn asym_match_needs_out_and_a_record_list() {
    let w = Workspace::new();
    assert_eq!(w.run(&["asym", "--config", "@p.json", "--match", "@eig.json"]), 1);
    w.write("junk.json", "{}");
    assert_eq!(
        w.run(&[
            "asym",
            "--config",
            "@p.json",
            "--out",
            "@g.csv",
            "--match",
            "@junk.json"
        ]),
        1
    );
}

#[test]
fn oracle_dumps_matrices() {
    let w = Workspace::new();
    let status = w.run(&[
        "oracle",
        "--config",
        "@p.json",
        "--n",
        "20",
        "--k",
        "4",
        "--out",
        "@o.json",
        "--dump-matrix",
        "@m",
    ]);
    assert_eq!(status, 0);
    let recs = w.json("o.json");
    assert_eq!(recs.as_array().unwrap().len(), 4);
    assert_eq!(recs[0]["method"], "oracle");
    let (a, b) = (w.read("m.A.csv"), w.read("m.B.csv"));
    assert!(manifest_line(&a, &w.path("o.json")));
    let rows = a.lines().count() - 1;
    assert_eq!(rows, b.lines().count() - 1);
    assert!(rows > 40);
}

#[test]
fn verify_reports_failures_with_exit_three() {
    let w = Workspace::new();
    let status = w.run(&[
        "verify",
        "--config",
        "@p.json",
        "--oracle-n",
        "100",
        "--s-max",
        "30",
        "--out",
        "@v.json",
    ]);
    assert_eq!(status, 3);
    let report = w.json("v.json");
    let checks = report["checks"].as_array().unwrap();
    let verdict = |name: &str| {
        checks
            .iter()
            .find(|c| c["name"] == name)
            .map(|c| c["passed"].as_bool().unwrap())
    };
    assert_eq!(verdict("w1_equals_w2"), Some(true));
    assert_eq!(verdict("transmission_determinant"), Some(true));
    assert_eq!(verdict("shooting_oracle_agreement"), Some(true));
    assert_eq!(verdict("system_determinant_is_minus_w_cubed"), Some(false));
    assert!(report["volterra"].is_null());
}

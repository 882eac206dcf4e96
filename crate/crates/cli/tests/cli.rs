use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rbfront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbfront"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SWEEP: &str = r#"
model = "ks"
seed = 2024
replicas = 6

[rb]
dim = 2
densities = [0.1, 0.2, 0.4, 0.8]
t_max = 12.0

[analysis]
bound = { model = "rb", delta = 0.2 }
"#;

const SINGLE: &str = r#"
model = "frog"
seed = 5
replicas = 1

[rb]
dim = 1
densities = [0.3]
t_max = 50.0
"#;

fn assert_valid_svg(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    text
}

#[test]
fn config_errors_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SWEEP.replace("t_max = 12.0", "t_max = 12.0\nblue_speed = 3");
    let cfg = write(dir.path(), "bad.toml", &bad);
    let out = rbfront(&["sweep", &cfg, "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 10"), "{err}");
    assert!(err.contains("rb.blue_speed"), "{err}");
    assert!(!dir.path().join("run").exists());

    let cfg = write(dir.path(), "neg.toml", &SWEEP.replace("0.8]", "-0.8]"));
    let out = rbfront(&["sweep", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rb.densities"));

    let cfg = write(dir.path(), "sweep.toml", SWEEP);
    let out = rbfront(&["simulate", &cfg]);
    assert_eq!(out.status.code(), Some(2), "simulate rejects a grid");

    let out = rbfront(&["sweep", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical_and_plots_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let out = rbfront(&["--threads", threads, "sweep", &cfg, "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for i in 0..4 {
        let rel = format!("point-{i:02}/trace.csv");
        let ta = fs::read(a.join(&rel)).unwrap();
        assert_eq!(ta, fs::read(b.join(&rel)).unwrap());
        assert!(ta.starts_with(b"time,replica,max_radius,n_red,visited\n"));
        assert_valid_svg(&a.join(format!("point-{i:02}/radius.svg")));
    }
    for f in ["summary.json", "config.toml", "velocity.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let svg = assert_valid_svg(&a.join("velocity.svg"));
    assert_eq!(svg.matches("<path").count(), 4 + 2);

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert!(summary["scaling"]["exponent"].is_number());
    assert_eq!(summary["scaling"]["residuals"].as_array().unwrap().len(), 4);
    assert_eq!(summary["points"][0]["velocity"]["replicas"], 6);
    assert!(summary["bound"]["critical_delta"].is_number());

    // the echoed config reproduces the run
    let echo = a.join("config.toml");
    let c = dir.path().join("c");
    let out = rbfront(&["sweep", echo.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(c.join("summary.json")).unwrap());
}

#[test]
fn analyze_and_plot_reuse_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "one.toml", SINGLE);
    let run = dir.path().join("run");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = assert_valid_svg(&run.join("radius.svg"));
    assert_eq!(svg.matches("<path").count(), 1);
    assert!(!run.join("velocity.svg").exists());

    let before = fs::read(run.join("summary.json")).unwrap();
    let out = rbfront(&["analyze", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(before, fs::read(run.join("summary.json")).unwrap());
    let out = rbfront(&["analyze", run.to_str().unwrap(), "--burn-in", "0.8"]);
    assert_eq!(out.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["points"][0]["velocity"]["window"]["start"], 40.0);

    fs::remove_file(run.join("radius.svg")).unwrap();
    let out = rbfront(&["plot", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(run.join("radius.svg")).unwrap(), svg);

    let out = rbfront(&["plot", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "missing summary");
}

#[test]
fn zero_time_run_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.toml", &SINGLE.replace("t_max = 50.0", "t_max = 0.0"));
    let run = dir.path().join("run");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert!(s["points"][0]["velocity"].is_null());
    assert!(s["points"][0]["velocity_error"].as_str().unwrap().contains("degenerate"));
}

#[test]
fn aborts_give_exit_3_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let src = SINGLE
        .replace("replicas = 1", "replicas = 5")
        .replace("t_max = 50.0", "t_max = 50.0\nfield = { mode = \"window\", half_width = 3 }\nseed_rule = \"nearest-origin\"");
    let cfg = write(dir.path(), "w.toml", &src);
    let run = dir.path().join("run");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.as_array().unwrap().len(), 5);
    assert_eq!(m[0]["kind"], "aborted");
}

#[test]
fn failed_replicas_leave_nothing_to_plot() {
    let dir = tempfile::tempdir().unwrap();
    let src = SINGLE.replace("t_max = 50.0", "t_max = 50.0\nparticle_budget = 1");
    let cfg = write(dir.path(), "f.toml", &src);
    let run = dir.path().join("run");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!run.join("radius.svg").exists());
    let out = rbfront(&["plot", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_dir(&run).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".svg")));
}

#[test]
fn bounds_subcommand() {
    let out = rbfront(&["bounds", "--model", "rb", "--delta", "0.5", "--rho", "0.25,4", "--t", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rho,t,threshold,prob_bound"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[..3], [0.25, 10.0, 10.0]);
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row[2], 80.0);
}

#[test]
fn rbk_and_two_box_models_run() {
    let dir = tempfile::tempdir().unwrap();
    let rbk = r#"
model = "rbk"
seed = 9
replicas = 3

[kawasaki]
betas = [1.0]
u = 1.0
delta = 1.0
theta = 2.0
t_max = 5.0
side = 10
particles = 20

[analysis]
bound = { model = "rbk", beta = 1.0, density_exp = 1.0, delta = 1.0 }
"#;
    let cfg = write(dir.path(), "rbk.toml", rbk);
    let run = dir.path().join("rbk");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["points"][0]["parameter"], "beta");
    assert!(s["points"][0]["velocity"]["v_hat"].is_number());

    let two = r#"
model = "kawasaki-two-box"
seed = 9
replicas = 50

[kawasaki]
betas = [1.0]
u = 0.0
delta = 1.0
theta = 2.0
t_max = 3.0
side = 10
particles = 10

[two_box]
box1 = { corner = [0, 0, 0], side = 2 }
box2 = { corner = [5, 5, 0], side = 2 }
event1 = { kind = "enters" }
event2 = { kind = "enters" }
"#;
    let cfg = write(dir.path(), "two.toml", two);
    let run = dir.path().join("two");
    let out = rbfront(&["simulate", &cfg, "--out", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["points"][0]["two_box"]["replicas"], 50);
    assert!(!run.join("trace.csv").exists());

    let cfg = write(dir.path(), "overlap.toml", &two.replace("[5, 5, 0]", "[1, 1, 0]"));
    assert_eq!(rbfront(&["simulate", &cfg]).status.code(), Some(2));
}

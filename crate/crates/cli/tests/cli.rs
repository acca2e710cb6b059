use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const PULSE: &str = r#"
[bias]
omega = 0.47
kind = "rect_pulse_train"
iota_dc = IOTA
pulse_integral = 3.5
duty = 0.2
"#;

fn pulse(iota: f64, extra: &str) -> String {
    PULSE.replace("IOTA", &iota.to_string()) + extra
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    dir: tempfile::TempDir,
    out: Output,
}

impl Run {
    fn code(&self) -> i32 {
        self.out.status.code().expect("exited normally")
    }

    fn json(&self, name: &str) -> Value {
        let text = std::fs::read_to_string(self.dir.path().join("out").join(name)).unwrap();
        serde_json::from_str(&text).unwrap()
    }

    fn text(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.path().join("out").join(name)).unwrap()
    }
}

fn run(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_phaselock"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .args(extra)
        .output()
        .unwrap();
    Run { dir, out }
}

fn run_file(cmd: &str, file: &str, extra: &[&str]) -> Run {
    run(
        cmd,
        &std::fs::read_to_string(configs_dir().join(file)).unwrap(),
        extra,
    )
}

#[test]
fn analyze_zero_bias() {
    let r = run(
        "analyze",
        "[bias]\nperiod = 3\nkind = \"constant\"\nlevel = 0\n",
        &[],
    );
    assert_eq!(r.code(), 0, "{:?}", r.out);
    let j = r.json("analyze.json");
    assert_eq!(j["regime"], "locked");
    assert_eq!(j["k"], 0);
    assert_eq!(j["v_av"].as_f64().unwrap(), 0.0);
    let ground = r.text("ground.csv");
    assert!(ground.starts_with("t,phi0,p0,q0,phi_inf,phi_bowtie\n"));
}

#[test]
fn analyze_locked_and_quasiperiodic_configs() {
    let r = run_file("analyze", "fig12.cfg", &[]);
    assert_eq!(r.code(), 0);
    let j = r.json("analyze.json");
    assert_eq!(j["regime"], "locked");
    assert!(j["c_infinity"].is_object() && j["c_bowtie"].is_object());
    assert!(j["delta"].as_f64().unwrap() > 0.0);

    let r = run_file("analyze", "fig20.cfg", &[]);
    assert_eq!(r.code(), 0);
    let j = r.json("analyze.json");
    assert_eq!(j["regime"], "quasiperiodic");
    assert!(j["alpha"].as_f64().is_some() && j["v_av"].as_f64().unwrap() > 0.0);
    assert!(j.get("c_infinity").is_none());
}

#[test]
fn sweep_constant_family_iv() {
    let r = run_file("sweep", "constant_iv.cfg", &[]);
    assert_eq!(r.code(), 0, "{:?}", r.out);
    let text = r.text("sweep.csv");
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iota_dc,delta,regime,k,alpha,v_av,error"
    );
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let b: f64 = f[0].parse().unwrap();
        let v: f64 = f[5].parse().unwrap();
        if (b - 1.0).abs() < 0.01 || (f[2] == "locked" && b > 1.0) {
            continue;
        }
        let expected = if b < 1.0 { 0.0 } else { (b * b - 1.0).sqrt() };
        assert!((v - expected).abs() < 1e-6, "B {b}: {v}");
    }
    let summary = r.json("sweep_summary.json");
    assert_eq!(summary["steps"].as_array().unwrap().len(), 1);
    assert_eq!(summary["steps"][0]["k"], 0);
}

#[test]
fn sweep_single_point_and_json() {
    let cfg = pulse(1.0, "[sweep]\nlo = 1.25\nhi = 1.25\nstep = 0.1\n");
    let r = run("sweep", &cfg, &["--format", "json"]);
    assert_eq!(r.code(), 0);
    let rows = r.json("sweep.json");
    assert_eq!(rows.as_array().unwrap().len(), 1);
    assert_eq!(rows[0]["regime"], "locked");
}

#[test]
fn sweep_is_identical_across_worker_counts() {
    let cfg = pulse(0.0, "[sweep]\nlo = 0.6\nhi = 1.6\nstep = 0.01\n");
    let a = run("sweep", &cfg, &["--workers", "1"]);
    let b = run("sweep", &cfg, &["--workers", "4"]);
    assert_eq!(a.code(), 0);
    assert_eq!(a.text("sweep.csv"), b.text("sweep.csv"));
    assert_eq!(a.text("sweep_summary.json"), b.text("sweep_summary.json"));
}

#[test]
fn evolve_locked_segments_settle() {
    let r = run_file("evolve", "fig01.cfg", &[]);
    assert_eq!(r.code(), 0, "{:?}", r.out);
    let s = r.json("evolve_summary.json");
    let gaps: Vec<f64> = s["closed_gaps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(gaps.len(), 2);
    assert!(gaps[1] < 1e-2 * gaps[0]);
    let rsj: Vec<f64> = s["rsj_gaps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(rsj[1] < 1e-2);
    assert!(s["ode_deviation"].as_f64().unwrap() < 1e-8);
    assert!(r
        .text("closed_segments.csv")
        .starts_with("t,phi,segment_index\n"));
}

#[test]
fn evolve_quasiperiodic_segments_keep_moving() {
    let r = run_file("evolve", "fig20.cfg", &[]);
    assert_eq!(r.code(), 0);
    let s = r.json("evolve_summary.json");
    let gaps: Vec<f64> = s["closed_gaps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(gaps.len(), 29);
    assert!(gaps.iter().all(|&g| g > 1e-2));
}

#[test]
fn evolve_second_order_overlay_splashes_at_edges() {
    let r = run_file("evolve", "fig06.cfg", &[]);
    assert_eq!(r.code(), 0);
    let text = r.text("rsj_overlay.csv");
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    let t: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let diff: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let period = std::f64::consts::TAU / 0.47;
    let edges = [0.0, 0.4 * period, 0.6 * period];
    // The difference moves fastest right after t = 0 and the two edges.
    let slope: Vec<(f64, f64)> = t
        .windows(2)
        .zip(diff.windows(2))
        .map(|(tw, dw)| (tw[0], ((dw[1] - dw[0]) / (tw[1] - tw[0])).abs()))
        .collect();
    let near = |x: f64| edges.iter().any(|&e| x >= e && x < e + 0.5);
    let far_max = slope
        .iter()
        .filter(|(x, _)| !near(*x))
        .map(|p| p.1)
        .fold(0.0, f64::max);
    for &e in &edges {
        let local = slope
            .iter()
            .filter(|(x, _)| *x >= e && *x < e + 0.5)
            .map(|p| p.1)
            .fold(0.0, f64::max);
        assert!(local > 3.0 * far_max, "edge {e}: {local} vs {far_max}");
    }
}

#[test]
fn validate_passes_and_negative_control_fails() {
    let r = run_file("validate", "validate.cfg", &[]);
    assert_eq!(r.code(), 0, "{}", String::from_utf8_lossy(&r.out.stdout));
    let j = r.json("validate.json");
    assert_eq!(j["checks"].as_array().unwrap().len(), 8);

    let r = run_file("validate", "validate_loose.cfg", &[]);
    assert_eq!(r.code(), 1);
    assert!(String::from_utf8_lossy(&r.out.stdout).contains("c_constancy            FAIL"));

    let empty = "[bias]\nperiod = 1\nkind = \"constant\"\nlevel = 0\n[validate]\nchecks = []\n";
    assert_eq!(run("validate", empty, &[]).code(), 0);
}

#[test]
fn outputs_are_byte_identical() {
    let cfg = pulse(1.25, "[validate]\nchecks = [\"group_law\", \"det_phi\"]\n");
    let a = run("analyze", &cfg, &[]);
    let b = run("analyze", &cfg, &[]);
    assert_eq!(a.text("analyze.json"), b.text("analyze.json"));
    assert_eq!(a.text("ground.csv"), b.text("ground.csv"));
    let a = run("validate", &cfg, &["--seed", "5"]);
    let b = run("validate", &cfg, &["--seed", "5"]);
    assert_eq!(a.text("validate.json"), b.text("validate.json"));
    assert!(a.text("run_config.toml").contains("seed = 5"));
}

#[test]
fn exit_codes_for_bad_input() {
    assert_eq!(run("analyze", "[bias]\nperiod = 1\n", &[]).code(), 2);
    assert_eq!(run("analyze", "not toml [", &[]).code(), 2);
    assert_eq!(run("sweep", &pulse(1.0, ""), &["--workers", "0"]).code(), 2);
    let missing = Command::new(env!("CARGO_BIN_EXE_phaselock"))
        .args(["analyze", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    // A solver asked for more than double precision can give underflows.
    let strict = pulse(1.25, "[solver]\nrel_tol = 1e-18\nabs_tol = 1e-300\n");
    let r = run("analyze", &strict, &[]);
    assert_eq!(r.code(), 3, "{:?}", r.out);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: toml::Value = toml::from_str(&text).unwrap();
        assert!(parsed.get("bias").is_some(), "{}", path.display());
    }
}

#[test]
fn coarse_sweep_reports_mixed_orders() {
    let cfg = pulse(0.0, "[sweep]\nlo = 0.6\nhi = 1.6\nstep = 0.02\n");
    let r = run("sweep", &cfg, &[]);
    assert_eq!(r.code(), 3);
    assert!(r.json("sweep_summary.json")["step_error"]
        .as_str()
        .unwrap()
        .contains("order changes"));
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gbu(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gbu"))
        .args(args)
        .env("GBU_OUT", out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn bundle_dir(o: &Output) -> PathBuf {
    PathBuf::from(String::from_utf8_lossy(&o.stdout).lines().next().unwrap())
}

const INTERVAL: &str = "[domain]\nkind = \"interval\"\n[hamiltonian]\np = 3.0\n";

#[test]
fn eigen_reports_lambda1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "e.toml", INTERVAL);
    let o = gbu(&["eigen", "--config", cfg.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = bundle_dir(&o);
    assert!(dir.starts_with(tmp.path()));
    let s: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    let l = s["result"]["analytic"]["lambda1"].as_f64().unwrap();
    assert!((l - 2.4674011002723395).abs() < 1e-8);
    assert!(dir.join("phi1.csv").exists());
}

#[test]
fn selftest_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        &format!("{INTERVAL}[selftest]\ncases = 8\nn_interior = 51\n"),
    );
    let args = [
        "selftest",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "42",
        "--jobs",
        "2",
    ];
    let a = gbu(&args, tmp.path());
    let b = gbu(&args, tmp.path());
    assert!(a.status.success() && b.status.success());
    let (da, db) = (bundle_dir(&a), bundle_dir(&b));
    assert_ne!(da, db);
    assert!(String::from_utf8_lossy(&b.stderr).contains("warning"));
    for f in ["config.toml", "summary.json"] {
        assert_eq!(
            fs::read(da.join(f)).unwrap(),
            fs::read(db.join(f)).unwrap(),
            "{f}"
        );
    }
    let c = gbu(
        &[
            "selftest",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "43",
        ],
        tmp.path(),
    );
    assert_ne!(
        fs::read(da.join("summary.json")).unwrap(),
        fs::read(bundle_dir(&c).join("summary.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = write(
        tmp.path(),
        "t.toml",
        &format!("{INTERVAL}[gird]\nn_interior = 5\n"),
    );
    let o = gbu(&["run", "--config", typo.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("gird.n_interior"));
    let sub = write(tmp.path(), "p.toml", &INTERVAL.replace("3.0", "1.5"));
    let o = gbu(&["run", "--config", sub.to_str().unwrap()], tmp.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("p must be > 2"));
    let o = gbu(&["run"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn run_writes_trace_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "r.toml",
        &format!("{INTERVAL}[grid]\nn_interior = 51\n[solver]\nt_max = 0.05\n[initial]\nprofile = \"zero\"\n"),
    );
    let out = tmp.path().join("explicit");
    let o = gbu(
        &[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert!(o.status.success());
    let dir = bundle_dir(&o);
    assert!(dir.starts_with(&out));
    let csv = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,sup_u,sup_grad,eigen_mass,sup_ut"
    );
    assert!(csv.lines().count() > 2);
}

#[test]
fn threshold_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "th.toml",
        &format!("{INTERVAL}[grid]\nn_interior = 51\n"),
    );
    let o = gbu(
        &[
            "threshold",
            "--config",
            cfg.to_str().unwrap(),
            "--rel-tol",
            "0.05",
            "--t-max",
            "2.0",
            "--profile",
            "quartic",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = bundle_dir(&o);
    let echo = fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(echo.contains("rel_tol = 0.05"));
    let s: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    let (lo, hi) = (
        s["result"]["lambda_lo"].as_f64().unwrap(),
        s["result"]["lambda_hi"].as_f64().unwrap(),
    );
    assert!(lo < hi && (hi - lo) / hi < 0.05);
}

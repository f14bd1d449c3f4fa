use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_deltascat"));
    c.env_remove("DELTASCAT_OUT").env("RUST_LOG", "error");
    c
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().expect("spawn")
}

fn potential(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|x| x.unwrap()[i].parse().unwrap()).collect()
}

fn metric(path: &Path, name: &str) -> f64 {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).find(|x| &x[0] == name).unwrap()[1].parse().unwrap()
}

#[test]
fn scatter_single_delta_matches_closed_form() {
    let d = tempfile::tempdir().unwrap();
    let p = potential(d.path(), "v.toml", "[[delta]]\nc = 2.0\ny = 0.0\n");
    let o = run(&d.path().join("out"), &["scatter", "--potential", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let f = d.path().join("out/scatter.csv");
    let (k, re, im) = (column(&f, "k"), column(&f, "re_t"), column(&f, "im_t"));
    for i in 0..k.len() {
        // T = 2ik / (2ik - c)
        let (a, b) = (-2.0, 2.0 * k[i]);
        let n = a * a + b * b;
        let t = (2.0 * k[i] * b / n, 2.0 * k[i] * a / n);
        assert!((re[i] - t.0).abs() < 1e-12 && (im[i] - t.1).abs() < 1e-12, "k = {}", k[i]);
    }
}

#[test]
fn scatter_free_has_unit_transmission() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["scatter"]);
    assert!(o.status.success());
    assert!(column(&d.path().join("scatter.csv"), "re_t").iter().all(|&t| t == 1.0));
    assert!(column(&d.path().join("scatter.csv"), "im_t").iter().all(|&t| t == 0.0));
}

#[test]
fn malformed_config_fails_with_diagnostic() {
    let d = tempfile::tempdir().unwrap();
    let p = potential(d.path(), "bad.toml", "[[delta]]\nc = -1.0\nposition = 0.5\n");
    let o = run(&d.path().join("out"), &["scatter", "--potential", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = String::from_utf8_lossy(&o.stderr);
    assert!(e.contains("bad.toml") && e.contains("line 3") && e.contains("position"), "{e}");
}

#[test]
fn scatter_is_byte_deterministic_and_listed() {
    let d = tempfile::tempdir().unwrap();
    let p = potential(d.path(), "v.toml", "deltas = [{ c = -1.0, y = -0.5 }, { c = 0.5, y = 0.75 }]\n");
    for o in ["a", "b"] {
        assert!(run(&d.path().join(o), &["scatter", "--potential", p.to_str().unwrap()]).status.success());
    }
    let manifest = fs::read_to_string(d.path().join("a/manifest.csv")).unwrap();
    for name in ["scatter.csv", "bound_states.csv", "rt_assume.csv", "scatter_metrics.csv", "checks.csv"] {
        assert_eq!(fs::read(d.path().join("a").join(name)).unwrap(), fs::read(d.path().join("b").join(name)).unwrap());
        assert!(manifest.contains(name), "{name} missing from manifest");
    }
}

#[test]
fn jost_free_and_delta() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&d.path().join("free"), &["jost", "--xmax", "0.5", "--dx", "0.0625", "--fft-n", "1024"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let f = d.path().join("free/jost.csv");
    assert!(column(&f, "re_m1").iter().all(|&v| v == 1.0));
    assert!(column(&f, "im_m2").iter().all(|&v| v == 0.0));

    let p = potential(d.path(), "v.toml", "[[delta]]\nc = -1.0\ny = 0.0\n");
    let o = run(&d.path().join("delta"), &["jost", "--potential", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(metric(&d.path().join("delta/jost_metrics.csv"), "k1_max"), 0.0);
}

#[test]
fn jost_box_matches_kn_series() {
    let d = tempfile::tempdir().unwrap();
    let p = potential(d.path(), "v.toml", "[regular]\nkind = \"box\"\nheight = 1.0\na = -0.5\nb = 0.5\n");
    let o = run(d.path(), &["jost", "--potential", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(metric(&d.path().join("jost_metrics.csv"), "b1_kn_sup") < 1e-5);
}

#[test]
fn waveop_free_ratio_is_one() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["waveop", "--family", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    for r in column(&d.path().join("sobolev.csv"), "ratio") {
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }
}

#[test]
fn evolve_linear_at_zero_echoes_input() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["evolve", "--xmax", "16", "--times", "0"]);
    assert!(o.status.success());
    let f = d.path().join("states.csv");
    let (x, re, im) = (column(&f, "x"), column(&f, "re_u"), column(&f, "im_u"));
    for i in 0..x.len() {
        assert!((re[i] - (-x[i] * x[i] / 2.0).exp()).abs() < 1e-8 && im[i].abs() < 1e-8, "x = {}", x[i]);
    }
}

#[test]
fn evolve_double_well_beat() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["evolve", "--mode", "double-well", "--g", "0", "--dt", "0.1", "--t-final", "40"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("[PASS] beat_period"));
}

#[test]
fn verify_all_reports_and_exits() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&d.path().join("ok"), &["verify-all", "--only", "1,2,12"]);
    assert!(o.status.success());
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("criterion 12") && s.contains("3 passed, 0 failed"), "{s}");
    assert!(d.path().join("ok/summary.csv").exists());

    // an impossible tolerance forces a failure
    let o = run(&d.path().join("bad"), &["verify-all", "--only", "2", "--tol-unitarity", "1e-20"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] criterion  2"));
}

#[test]
fn coarse_spectral_grid_fails_identities() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["verify-all", "--only", "6", "--xmax", "16", "--dx", "0.0625"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("1 failed: 6"));
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = bin().env("DELTASCAT_OUT", d.path()).arg("scatter").output().unwrap();
    assert!(o.status.success());
    assert!(d.path().join("manifest.csv").exists());
}

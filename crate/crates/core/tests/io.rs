use deltascat::io::*;
use deltascat::scattering::{bound_states, scattering_coeffs};
use deltascat::{PotentialSpec, RegularKind};

#[test]
fn round_trips_scattering_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PotentialSpec::single_delta(2.0, 0.0);
    let s = scattering_coeffs(&spec, &[0.5, 1.0, 2.0]).unwrap();
    let p = dir.path().join("sub/scatter.csv");
    write_scattering(&p, &s).unwrap();
    let mut r = csv::Reader::from_path(&p).unwrap();
    assert_eq!(r.headers().unwrap().len(), 8);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let re_t: f64 = rows[1][1].parse().unwrap();
    let im_t: f64 = rows[1][2].parse().unwrap();
    // shortest round-trip formatting is lossless
    assert_eq!(re_t, s.t[1].re);
    assert_eq!(im_t, s.t[1].im);
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PotentialSpec::from_deltas(&[(-1.0, -0.5), (-1.0, 0.5)]);
    let b = bound_states(&spec).unwrap();
    let (p, q) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    write_bound_states(&p, &b).unwrap();
    write_bound_states(&q, &bound_states(&spec).unwrap()).unwrap();
    assert_eq!(std::fs::read(p).unwrap(), std::fs::read(q).unwrap());
}

#[test]
fn manifest_paths_are_relative() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x/m.csv");
    write_metrics(&f, &[("a".into(), 1.5)]).unwrap();
    let mut m = Manifest::default();
    m.add(&f, &config_hash("cfg"));
    let path = m.write(dir.path()).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("file,config_hash\n"));
    assert!(text.contains("x/m.csv,"));
}

#[test]
fn parses_each_regular_kind() {
    for body in [
        "kind = \"zero\"",
        "kind = \"gaussian\"\namplitude = 1.0\ncenter = 0.0\nwidth = 0.5",
        "kind = \"exponential\"\namplitude = -1.0\nrate = 2.0",
        "kind = \"sampled\"\nx = [0.0, 1.0, 2.0]\nv = [0.0, 1.0, 0.0]",
    ] {
        let s = parse_potential(&format!("[regular]\n{body}\n")).unwrap();
        assert!(s.deltas.is_empty());
        if body.contains("zero") {
            assert!(matches!(s.regular.kind, RegularKind::Zero));
        }
    }
}

#[test]
fn rejects_unknown_kind_and_bad_values() {
    assert!(parse_potential("[regular]\nkind = \"cubic\"\n").is_err());
    assert!(parse_potential("[[delta]]\nc = 1.0\n").is_err());
    assert!(parse_potential("[[delta]]\nc = nan\ny = 0.0\n").is_err());
}

#[test]
fn load_reports_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "gamma = \"x\"\n").unwrap();
    let e = load_potential(&p).unwrap_err().to_string();
    assert!(e.contains("bad.toml"), "{e}");
}

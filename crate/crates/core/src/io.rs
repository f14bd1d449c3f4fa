//! Potential config files and CSV output.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{DecayReport, EvolutionTrace};
use crate::jost::{B1Kernel, JostSolution};
use crate::potential::{validate, DeltaTerm, PotentialSpec, RegularKind, RegularPart, DEFAULT_GAMMA};
use crate::scattering::{BoundState, ScatteringData};
use crate::wave_operators::SobolevStudy;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    #[serde(default, alias = "deltas")]
    delta: Vec<DeltaFile>,
    regular: Option<RegularFile>,
    gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeltaFile {
    c: f64,
    y: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RegularFile {
    Zero,
    Box { height: f64, a: f64, b: f64 },
    Gaussian { amplitude: f64, center: f64, width: f64 },
    Exponential { amplitude: f64, rate: f64 },
    Sampled { x: Vec<f64>, v: Vec<f64> },
}

/// Parses a TOML potential:
///
/// ```toml
/// gamma = 1.6
/// [[delta]]
/// c = -1.0
/// y = 0.5
/// [regular]
/// kind = "box"
/// height = 0.5
/// a = 0.0
/// b = 1.0
/// ```
///
/// Inline arrays work too: `deltas = [{ c = -1.0, y = 0.5 }]`.
pub fn parse_potential(text: &str) -> Result<PotentialSpec> {
    let file: PotentialFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let kind = match file.regular.unwrap_or(RegularFile::Zero) {
        RegularFile::Zero => RegularKind::Zero,
        RegularFile::Box { height, a, b } => RegularKind::Box { height, a, b },
        RegularFile::Gaussian { amplitude, center, width } => RegularKind::Gaussian { amplitude, center, width },
        RegularFile::Exponential { amplitude, rate } => RegularKind::Exponential { amplitude, rate },
        RegularFile::Sampled { x, v } => RegularKind::Sampled { x, v },
    };
    let regular = RegularPart { kind, gamma: file.gamma.unwrap_or(DEFAULT_GAMMA) };
    let deltas = file.delta.iter().map(|d| DeltaTerm { c: d.c, y: d.y }).collect();
    let spec = PotentialSpec::new(deltas, regular);
    validate(&spec)?;
    Ok(spec)
}

pub fn load_potential(path: &Path) -> Result<PotentialSpec> {
    let text = fs::read_to_string(path)?;
    parse_potential(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(csv::Writer::from_path(path)?)
}

/// Generic table writer.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// `k, re_t, im_t, re_r1, im_r1, re_r2, im_r2, unitarity`.
pub fn write_scattering(path: &Path, s: &ScatteringData) -> Result<()> {
    let rows = (0..s.k.len()).map(|i| {
        let u = s.t[i].norm_sqr() + s.r1[i].norm_sqr() - 1.0;
        vec![
            num(s.k[i]),
            num(s.t[i].re),
            num(s.t[i].im),
            num(s.r1[i].re),
            num(s.r1[i].im),
            num(s.r2[i].re),
            num(s.r2[i].im),
            num(u),
        ]
    });
    write_table(path, &["k", "re_t", "im_t", "re_r1", "im_r1", "re_r2", "im_r2", "unitarity"], rows)
}

/// `index, kappa, energy`.
pub fn write_bound_states(path: &Path, b: &[BoundState]) -> Result<()> {
    let rows = b.iter().enumerate().map(|(i, s)| vec![i.to_string(), num(s.kappa), num(s.energy)]);
    write_table(path, &["index", "kappa", "energy"], rows)
}

/// Long format `x, k, re_m1, im_m1, re_m2, im_m2`; missing sides are left empty.
pub fn write_jost(path: &Path, j: &JostSolution) -> Result<()> {
    let mut rows = Vec::with_capacity(j.x_grid.len * j.k_grid.len());
    for ix in 0..j.x_grid.len {
        for (ik, &k) in j.k_grid.iter().enumerate() {
            let c = |v: Option<crate::C64>| match v {
                Some(v) => [num(v.re), num(v.im)],
                None => [String::new(), String::new()],
            };
            let [a, b] = c(j.m1_at(ix, ik));
            let [d, e] = c(j.m2_at(ix, ik));
            rows.push(vec![num(j.x_grid.point(ix)), num(k), a, b, d, e]);
        }
    }
    write_table(path, &["x", "k", "re_m1", "im_m1", "re_m2", "im_m2"], rows)
}

/// `x, y, b1, dx_b1`.
pub fn write_b1(path: &Path, b: &B1Kernel) -> Result<()> {
    let mut rows = Vec::with_capacity(b.x_grid.len * b.y_grid.len);
    for ix in 0..b.x_grid.len {
        for iy in 0..b.y_grid.len {
            rows.push(vec![
                num(b.x_grid.point(ix)),
                num(b.y_grid.point(iy)),
                num(b.value(ix, iy)),
                num(*b.dx_values.at(ix, iy)),
            ]);
        }
    }
    write_table(path, &["x", "y", "b1", "dx_b1"], rows)
}

/// States in long format `t, x, re_u, im_u` and diagnostics
/// `t, mass, energy, supnorm, left_mass, right_mass`.
pub fn write_trace(states: &Path, diagnostics: &Path, tr: &EvolutionTrace) -> Result<()> {
    let mut rows = Vec::new();
    for (t, s) in tr.state_times.iter().zip(&tr.states) {
        for (i, v) in s.values.iter().enumerate() {
            rows.push(vec![num(*t), num(s.grid.point(i)), num(v.re), num(v.im)]);
        }
    }
    write_table(states, &["t", "x", "re_u", "im_u"], rows)?;
    let rows = (0..tr.len()).map(|i| {
        vec![
            num(tr.times[i]),
            num(tr.mass[i]),
            num(tr.energy[i]),
            num(tr.supnorm[i]),
            num(tr.left_mass[i]),
            num(tr.right_mass[i]),
        ]
    });
    write_table(diagnostics, &["t", "mass", "energy", "supnorm", "left_mass", "right_mass"], rows)
}

/// `p, ratio, family_size` with the running sup after each member.
pub fn write_sobolev(path: &Path, studies: &[SobolevStudy]) -> Result<()> {
    let mut rows = Vec::new();
    for s in studies {
        for (n, r) in s.running_max.iter().enumerate() {
            rows.push(vec![num(s.p), num(*r), (n + 1).to_string()]);
        }
    }
    write_table(path, &["p", "ratio", "family_size"], rows)
}

/// `t, sup_norm, scaled` plus the fit in the last two rows.
pub fn write_decay(path: &Path, r: &DecayReport) -> Result<()> {
    let mut rows: Vec<Vec<String>> = r
        .times
        .iter()
        .zip(&r.sup_norms)
        .map(|(t, s)| vec![num(*t), num(*s), num(t.sqrt() * s)])
        .collect();
    rows.push(vec!["slope".into(), num(r.slope), String::new()]);
    rows.push(vec!["intercept".into(), num(r.intercept), String::new()]);
    write_table(path, &["t", "sup_norm", "scaled"], rows)
}

/// `name, value` pairs.
pub fn write_metrics(path: &Path, metrics: &[(String, f64)]) -> Result<()> {
    write_table(path, &["name", "value"], metrics.iter().map(|(n, v)| vec![n.clone(), num(*v)]))
}

/// Hex SHA-256 of a config string.
pub fn config_hash(config: &str) -> String {
    let d = Sha256::digest(config.as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Lists emitted files with the hash of the config that produced them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(PathBuf, String)>,
}

impl Manifest {
    pub fn add(&mut self, file: &Path, hash: &str) {
        self.entries.push((file.to_path_buf(), hash.to_string()));
    }

    pub fn files(&self) -> impl Iterator<Item = &Path> {
        self.entries.iter().map(|e| e.0.as_path())
    }

    /// Writes `manifest.csv` in `dir` with paths relative to `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.csv");
        let rows = self.entries.iter().map(|(p, h)| {
            let rel = p.strip_prefix(dir).unwrap_or(p);
            vec![rel.display().to_string(), h.clone()]
        });
        write_table(&path, &["file", "config_hash"], rows)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_box_plus_delta() {
        let s = parse_potential(
            "[[delta]]\nc = -1.0\ny = 0.5\n[regular]\nkind = \"box\"\nheight = 0.5\na = 0.0\nb = 1.0\n",
        )
        .unwrap();
        assert_eq!(s.deltas.len(), 1);
        assert!(matches!(s.regular.kind, RegularKind::Box { .. }));
    }

    #[test]
    fn bad_field_reports_line() {
        let e = parse_potential("[[delta]]\nc = -1.0\nwhere = 0.5\n").unwrap_err();
        let m = e.to_string();
        assert!(m.contains("line") && m.contains("where"), "{m}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}

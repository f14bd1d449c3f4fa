use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use deltascat::dynamics::{
    dispersive_decay_study, double_well_demo, linear_trace, log_times, nls_solve, BoxOptions, BoxPropagator,
    DecayOptions, InitialRecipe, NlsConfig, NlsSign,
};
use deltascat::io::{self, Manifest};
use deltascat::jost::{b1_from_m1_on, fft_k_grid, kn_series, solve_both, solve_m1, verify_kernel_bounds, verify_m_bounds};
use deltascat::scattering::{mixed_scattering, rt_assume_check, scattering_coeffs};
use deltascat::spectral::{decompose, SpectralDecomposition};
use deltascat::verify::{determinism, SpectralGrid, Suite, SuiteConfig, Tolerances};
use deltascat::wave_operators::{band_limited_family, distorted_family, identity_residuals, intertwining_check, sobolev_ratios};
use deltascat::{GridFunction, KQuadrature, PotentialSpec, Result, UniformGrid, C64};

use crate::{Cli, Command, EvolveArgs, EvolveMode, JostArgs, PotentialArg, ScatterArgs, Sign, SpectralArgs, VerifyArgs, WaveopArgs};

/// Collects files and named checks for one command.
struct Run {
    dir: PathBuf,
    hash: String,
    manifest: Manifest,
    checks: Vec<(String, bool, String)>,
}

impl Run {
    fn new(dir: &Path, config: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash: io::config_hash(config), manifest: Manifest::default(), checks: vec![] })
    }

    fn emit(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let p = self.dir.join(name);
        write(&p)?;
        self.manifest.add(&p, &self.hash);
        Ok(())
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        println!("[{}] {name}: {detail}", if passed { "PASS" } else { "FAIL" });
        self.checks.push((name.into(), passed, detail));
    }

    fn finish(mut self) -> Result<bool> {
        let rows: Vec<Vec<String>> =
            self.checks.iter().map(|(n, p, d)| vec![n.clone(), p.to_string(), d.clone()]).collect();
        let p = self.dir.join("checks.csv");
        io::write_table(&p, &["check", "passed", "detail"], rows)?;
        self.manifest.add(&p, &self.hash);
        self.manifest.write(&self.dir)?;
        Ok(self.checks.iter().all(|c| c.1))
    }
}

pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Scatter(a) => scatter(cli, a),
        Command::Jost(a) => jost(cli, a),
        Command::Waveop(a) => waveop(cli, a),
        Command::Evolve(a) => evolve(cli, a),
        Command::VerifyAll(a) => verify_all(cli, a),
    }
}

fn load(p: &PotentialArg) -> Result<(PotentialSpec, String)> {
    match &p.potential {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let spec = io::load_potential(path)?;
            Ok((spec, text))
        }
        None => Ok((PotentialSpec::free(), String::new())),
    }
}

fn config(cli: &Cli, pot: &str, args: &impl std::fmt::Debug) -> String {
    format!("seed={}\n{args:?}\n{pot}", cli.seed)
}

fn scatter(cli: &Cli, a: &ScatterArgs) -> Result<bool> {
    let (spec, text) = load(&a.pot)?;
    let mut run = Run::new(&cli.out, &config(cli, &text, a))?;
    if !(a.kmin > 0.0 && a.kmin < 1.0 && a.kmax > 1.0 && a.nk >= 4) {
        return Err(deltascat::Error::InvalidArgument("need 0 < kmin < 1 < kmax and nk >= 4".into()));
    }
    let half = a.nk / 2;
    let mut ks: Vec<f64> = (0..half).map(|i| a.kmin * (1.0 / a.kmin).powf(i as f64 / half as f64)).collect();
    ks.extend((0..a.nk - half).map(|i| 1.0 + (a.kmax - 1.0) * (i + 1) as f64 / (a.nk - half) as f64));

    let mut metrics = Vec::new();
    let data = if spec.is_pure_delta() {
        scattering_coeffs(&spec, &ks)?
    } else {
        let m = mixed_scattering(&spec, &ks)?;
        metrics.push(("wronskian_residual".to_string(), m.wronskian_residual));
        m.data
    };
    let u = data.unitarity_residual();
    metrics.push(("unitarity_residual".into(), u));
    run.emit("scatter.csv", |p| io::write_scattering(p, &data))?;
    let rows = data.bound_state_kappas.iter().enumerate().map(|(i, k)| vec![i.to_string(), format!("{k}"), format!("{}", -k * k)]);
    run.emit("bound_states.csv", |p| io::write_table(p, &["index", "kappa", "energy"], rows))?;
    run.check("unitarity", u < a.tol_unitarity, format!("max residual {u:.2e} (tol {:.0e})", a.tol_unitarity));

    let rt = rt_assume_check(&spec, a.rt_points)?;
    for (i, m) in rt.decade_max.iter().enumerate() {
        metrics.push((format!("rt_decade_1e{}", i as i32 - 2), *m));
    }
    let rows = rt.k.iter().zip(&rt.scaled).map(|(k, s)| vec![format!("{k}"), format!("{s}")]);
    run.emit("rt_assume.csv", |p| io::write_table(p, &["k", "scaled"], rows))?;
    run.check("rt_bounded", rt.bounded, format!("decade maxima {:?}", rt.decade_max.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()));
    run.emit("scatter_metrics.csv", |p| io::write_metrics(p, &metrics))?;
    println!("{} bound state(s), kappas {:?}", data.bound_state_kappas.len(), data.bound_state_kappas);
    run.finish()
}

fn jost(cli: &Cli, a: &JostArgs) -> Result<bool> {
    let (spec, text) = load(&a.pot)?;
    let mut run = Run::new(&cli.out, &config(cli, &text, a))?;
    let g = UniformGrid::span(-a.xmax, a.xmax, a.dx)?;
    let nk = (a.kmax / a.dk).round() as i64;
    let ks: Vec<f64> = (-nk..nk).map(|j| (j as f64 + 0.5) * a.dk).collect();
    let table = solve_both(&spec, &ks, &g)?;
    run.emit("jost.csv", |p| io::write_jost(p, &table))?;

    let radius = spec.support_radius();
    let mb = verify_m_bounds(&spec, &table, radius)?;
    let mut metrics = vec![
        ("m_far_violations".to_string(), mb.far_violations as f64),
        ("m_compact_sup".into(), mb.compact_m),
        ("m_compact_dx".into(), mb.compact_dx),
        ("m_compact_dk".into(), mb.compact_dk),
    ];
    run.check("m_bounds", mb.far_violations == 0, format!("{} far-region violations beyond a = {radius}", mb.far_violations));

    let j1 = solve_m1(&spec, &fft_k_grid(a.fft_n, PI / 8.0), &g)?;
    let b1 = b1_from_m1_on(&j1, a.dx)?;
    run.emit("b1.csv", |p| io::write_b1(p, &b1))?;
    let kb = verify_kernel_bounds(&spec, &b1)?;
    metrics.push(("b1_imag_max".into(), b1.imag_max));
    metrics.push(("c_b1".into(), kb.c_b1.unwrap_or(f64::NAN)));
    metrics.push(("c_dx_b1".into(), kb.c_dx.unwrap_or(f64::NAN)));

    let yg = UniformGrid::span(0.0, 2.0 * a.xmax, a.dx)?;
    match kn_series(&spec, &g, &yg, a.n_max) {
        Ok(kn) => {
            let sum = kn.partial.last().expect("n_max >= 0");
            let offsets = reflection_offsets(&spec, yg.end());
            let mut err: f64 = 0.0;
            let mut err_all: f64 = 0.0;
            let mut rows = Vec::new();
            for ix in 0..g.len {
                for iy in 0..yg.len.min(b1.y_grid.len) {
                    let s = g.point(ix) + yg.point(iy);
                    let (b, k) = (b1.value(ix, iy), *sum.at(ix, iy));
                    let y = yg.point(iy);
                    let near = |v: f64| (v).abs() < 1.5 * a.dx;
                    let singular = offsets.iter().any(|&d| {
                        (d > 0.0 && near(y - d)) || spec.deltas.iter().any(|p| near(s - p.y - d))
                    });
                    err_all = err_all.max((b - k).abs());
                    if !singular {
                        err = err.max((b - k).abs());
                    }
                    rows.push(vec![format!("{}", g.point(ix)), format!("{}", yg.point(iy)), format!("{b}"), format!("{k}")]);
                }
            }
            run.emit("b1_vs_kn.csv", |p| io::write_table(p, &["x", "y", "b1_transform", "kn_sum"], rows))?;
            let k1 = if kn.terms.len() > 1 {
                let t = &kn.terms[1];
                (0..g.len).flat_map(|i| (0..yg.len).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max(t.at(i, j).abs()))
            } else {
                0.0
            };
            metrics.push(("b1_kn_sup".into(), err));
            metrics.push(("b1_kn_sup_all".into(), err_all));
            metrics.push(("k1_max".into(), k1));
            metrics.push(("kn_tail".into(), kn.tail));
            run.check("b1_vs_kn", err < a.tol_b1_kn, format!("sup |B1 - sum K_n| = {err:.2e} off the singular lines ({err_all:.2e} on them), max |K_1| = {k1:.2e}"));
        }
        Err(e) => println!("K_n series skipped: {e}"),
    }
    run.emit("jost_metrics.csv", |p| io::write_metrics(p, &metrics))?;
    run.finish()
}

/// Sums of inter-delta distances up to `y_max`, with 0. B1 is singular on
/// `y = d` and on `x + y = y_j + d` for these `d`.
fn reflection_offsets(spec: &PotentialSpec, y_max: f64) -> Vec<f64> {
    let mut gaps = Vec::new();
    for (i, a) in spec.deltas.iter().enumerate() {
        for b in &spec.deltas[i + 1..] {
            gaps.push((a.y - b.y).abs());
        }
    }
    let mut out = vec![0.0];
    let mut i = 0;
    while i < out.len() {
        let base = out[i];
        for g in &gaps {
            let v = base + g;
            if v <= y_max + 1e-12 && !out.iter().any(|o| (o - v).abs() < 1e-12) {
                out.push(v);
            }
        }
        i += 1;
    }
    out
}

fn build(spec: &PotentialSpec, g: &SpectralArgs) -> Result<SpectralDecomposition> {
    let x = UniformGrid::symmetric(g.xmax, g.dx)?;
    decompose(spec, &KQuadrature::gauss_panels(g.kmax, g.dk, g.order), &x)
}

fn waveop(cli: &Cli, a: &WaveopArgs) -> Result<bool> {
    let (spec, text) = load(&a.pot)?;
    let mut run = Run::new(&cli.out, &config(cli, &text, a))?;
    let d = build(&spec, &a.grid)?;
    let free = band_limited_family(&d, a.family, cli.seed);
    let dist = distorted_family(&d, a.family, cli.seed);
    let mut worst = [0.0f64; 3];
    let mut rows = Vec::with_capacity(a.family);
    for (i, (f, g)) in free.iter().zip(&dist).enumerate() {
        let (iso, _) = identity_residuals(&d, f)?;
        let (_, pc) = identity_residuals(&d, g)?;
        let tw = intertwining_check(&d, g, |l| C64::from_polar(1.0, -l))?;
        for (w, v) in worst.iter_mut().zip([iso, pc, tw]) {
            *w = w.max(v);
        }
        rows.push(vec![i.to_string(), format!("{iso}"), format!("{pc}"), format!("{tw}")]);
    }
    run.emit("identities.csv", |p| io::write_table(p, &["member", "isometry", "ww_star_pc", "intertwining"], rows))?;
    let tol = a.tol_identity;
    run.check("isometry", worst[0] < tol, format!("max ||W*W f - f|| / ||f|| = {:.2e}", worst[0]));
    run.check("ww_star", worst[1] < tol, format!("max ||WW* f - P_c f|| / ||f|| = {:.2e}", worst[1]));
    run.check("intertwining", worst[2] < tol, format!("max residual for exp(-i lambda) = {:.2e}", worst[2]));

    let st = sobolev_ratios(&d, &a.p, &free)?;
    run.emit("sobolev.csv", |p| io::write_sobolev(p, &st))?;
    for s in &st {
        println!("p = {}: sup ratio {:.4}", s.p, s.sup());
    }
    run.finish()
}

fn gaussian(g: UniformGrid, a: &EvolveArgs) -> GridFunction {
    GridFunction::from_fn(g, |x| {
        C64::from_polar(a.amplitude * (-(x - a.center).powi(2) / (2.0 * a.width * a.width)).exp(), a.velocity * x)
    })
}

fn nls_config(a: &EvolveArgs) -> NlsConfig {
    NlsConfig {
        sigma: a.sigma,
        sign: match a.sign {
            Sign::Focusing => NlsSign::Focusing,
            Sign::Defocusing => NlsSign::Defocusing,
        },
        g: a.g,
        dt: a.dt,
        t_final: a.t_final,
        record_every: a.record_every.max(1),
    }
}

fn evolve(cli: &Cli, a: &EvolveArgs) -> Result<bool> {
    let (spec, text) = load(&a.pot)?;
    let mut run = Run::new(&cli.out, &config(cli, &text, a))?;
    match a.mode {
        EvolveMode::Linear => {
            let d = build(&spec, &a.grid)?;
            let f = gaussian(d.table.x_grid, a);
            let tr = linear_trace(&d, &f, &a.times)?;
            write_trace(&mut run, &tr)?;
            for (t, m) in tr.times.iter().zip(&tr.mass) {
                println!("t = {t}: ||P_c u||^2 = {m:.10}");
            }
        }
        EvolveMode::Decay => {
            let g = UniformGrid::symmetric(8.0, 1.0 / 32.0)?;
            let f = gaussian(g, a);
            let ts = log_times(a.t0, a.t1, a.nt);
            let r = dispersive_decay_study(&spec, &f, &ts, &DecayOptions::default())?;
            run.emit("decay.csv", |p| io::write_decay(p, &r))?;
            let ok = r.slope >= a.tol_slope_lo && r.slope <= a.tol_slope_hi;
            run.check("decay_slope", ok, format!("slope {:.4} in [{}, {}], sup t^(1/2) |u| = {:.4}", r.slope, a.tol_slope_lo, a.tol_slope_hi, r.scaled_sup));
        }
        EvolveMode::Nls => {
            let prop = BoxPropagator::new(&spec, a.box_half_width, a.box_dx)?;
            let u0 = gaussian(prop.grid, a);
            let tr = nls_solve(&prop, &u0, &nls_config(a))?;
            write_trace(&mut run, &tr)?;
            let drift = tr.mass_drift_rate();
            run.check("mass_drift", drift < a.tol_mass_drift, format!("{drift:.2e} per unit time"));
        }
        EvolveMode::DoubleWell => {
            let cfg = nls_config(a);
            let recipe = if a.gaussian {
                InitialRecipe::Gaussian { center: a.center, width: a.width, amplitude: a.amplitude }
            } else {
                InitialRecipe::BoundPair
            };
            let opts = BoxOptions { half_width: a.box_half_width, dx: a.box_dx };
            let r = double_well_demo(a.q, a.l, &cfg, recipe, &opts)?;
            write_trace(&mut run, &r.trace)?;
            let drift = r.trace.mass_drift_rate();
            run.check("mass_drift", drift < a.tol_mass_drift, format!("{drift:.2e} per unit time"));
            let m = r.measured_period.map_or("none".to_string(), |p| format!("{p:.6}"));
            println!("beat period {:.6}, measured {m} over {} crossings", r.beat_period, r.crossings);
            if a.g == 0.0 {
                let err = r.measured_period.map_or(f64::INFINITY, |p| (p - r.beat_period).abs() / r.beat_period);
                run.check("beat_period", err < a.tol_beat, format!("relative error {err:.2e}"));
            }
        }
    }
    run.finish()
}

fn write_trace(run: &mut Run, tr: &deltascat::dynamics::EvolutionTrace) -> Result<()> {
    let diag = run.dir.join("diagnostics.csv");
    run.emit("states.csv", |p| io::write_trace(p, &diag, tr))?;
    run.manifest.add(&diag, &run.hash);
    Ok(())
}

fn suite_config(cli: &Cli, a: &VerifyArgs) -> SuiteConfig {
    let mut tol = Tolerances::default();
    let t = &a.tol;
    for (slot, v) in [
        (&mut tol.closed_single, t.tol_closed_single),
        (&mut tol.closed_double, t.tol_closed_double),
        (&mut tol.unitarity, t.tol_unitarity),
        (&mut tol.rt_window, t.tol_rt_window),
        (&mut tol.b1_kn, t.tol_b1_kn),
        (&mut tol.kernel_refine, t.tol_kernel_refine),
        (&mut tol.identity, t.tol_identity),
        (&mut tol.young_refine, t.tol_young_refine),
        (&mut tol.sobolev_refine, t.tol_sobolev_refine),
        (&mut tol.slope_lo, t.tol_slope_lo),
        (&mut tol.slope_hi, t.tol_slope_hi),
        (&mut tol.sandwich, t.tol_sandwich),
        (&mut tol.mass_drift, t.tol_mass_drift),
        (&mut tol.order_ratio, t.tol_order_ratio),
        (&mut tol.order_band, t.tol_order_band),
        (&mut tol.beat, t.tol_beat),
    ] {
        if let Some(v) = v {
            *slot = v;
        }
    }
    let g = &a.grid;
    SuiteConfig { seed: cli.seed, tol, grid: SpectralGrid { x_max: g.xmax, dx: g.dx, k_max: g.kmax, dk: g.dk, order: g.order } }
}

fn verify_all(cli: &Cli, a: &VerifyArgs) -> Result<bool> {
    let cfg = suite_config(cli, a);
    let ids: Vec<u8> = if a.only.is_empty() { (1..=12).collect() } else { a.only.clone() };
    if let Some(bad) = ids.iter().find(|i| !(1..=12).contains(*i)) {
        return Err(deltascat::Error::InvalidArgument(format!("no criterion {bad}")));
    }
    let base: Vec<u8> = ids.iter().copied().filter(|&i| i != 12).collect();
    let suite = Suite::new(cfg.clone());
    let mut reports = suite.run_all(&base, Some(&cli.out), |r| println!("{}", r.line()))?;
    if ids.contains(&12) {
        let r = determinism(&cfg, &base, &cli.out, &cli.out.join("rerun"));
        println!("{}", r.line());
        reports.push(r);
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    println!("{} passed, {} failed{}", reports.len() - failed.len(), failed.len(), if failed.is_empty() { String::new() } else { format!(": {}", failed.join(", ")) });
    Ok(failed.is_empty())
}

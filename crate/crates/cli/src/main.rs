use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Scattering, Jost functions, wave operators and dispersive dynamics for
/// 1D Schrodinger operators with delta potentials.
#[derive(Debug, Parser)]
#[command(name = "deltascat", version)]
pub struct Cli {
    /// Output directory for CSV tables and the manifest.
    #[arg(long, global = true, env = "DELTASCAT_OUT", default_value = "deltascat-out")]
    pub out: PathBuf,
    /// Seed for random test families.
    #[arg(long, global = true, default_value_t = 20240611)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission, reflection, bound states and the decay hypothesis check.
    Scatter(ScatterArgs),
    /// Jost functions, the kernel B1, its K_n series and the empirical bounds.
    Jost(JostArgs),
    /// Wave-operator identities, intertwining and W^{1,p} ratios.
    Waveop(WaveopArgs),
    /// Linear, dispersive and nonlinear time evolution.
    Evolve(EvolveArgs),
    /// The full acceptance suite with a pass/fail summary.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct PotentialArg {
    /// Potential file (TOML). Omit for V = 0.
    #[arg(long)]
    pub potential: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub pot: PotentialArg,
    /// Smallest wavenumber of the log-spaced part.
    #[arg(long, default_value_t = 1e-3)]
    pub kmin: f64,
    #[arg(long, default_value_t = 1e3)]
    pub kmax: f64,
    /// Nodes of the k grid (half log-spaced below 1, half linear above).
    #[arg(long, default_value_t = 2048)]
    pub nk: usize,
    /// Points per decade for the decay sweep.
    #[arg(long, default_value_t = 40)]
    pub rt_points: usize,
    /// Bound on `| |T|^2 + |R|^2 - 1 |`.
    #[arg(long, default_value_t = 1e-10)]
    pub tol_unitarity: f64,
}

#[derive(Debug, Args)]
pub struct JostArgs {
    #[command(flatten)]
    pub pot: PotentialArg,
    /// Half width of the x grid.
    #[arg(long, default_value_t = 1.0)]
    pub xmax: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub dx: f64,
    /// k range of the tabulated m1, m2.
    #[arg(long, default_value_t = 8.0)]
    pub kmax: f64,
    #[arg(long, default_value_t = 0.25)]
    pub dk: f64,
    /// FFT size for B1.
    #[arg(long, default_value_t = 8192)]
    pub fft_n: usize,
    /// Terms of the K_n series.
    #[arg(long, default_value_t = 6)]
    pub n_max: usize,
    /// Bound on `sup |B1 - sum K_n|` away from the singular lines.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_b1_kn: f64,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// Half width of the x grid.
    #[arg(long, default_value_t = 64.0)]
    pub xmax: f64,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub dx: f64,
    #[arg(long, default_value_t = 8.0)]
    pub kmax: f64,
    /// Gauss-Legendre panel width in k.
    #[arg(long, default_value_t = 0.25)]
    pub dk: f64,
    /// Nodes per panel.
    #[arg(long, default_value_t = 16)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct WaveopArgs {
    #[command(flatten)]
    pub pot: PotentialArg,
    #[command(flatten)]
    pub grid: SpectralArgs,
    /// Members of each test family.
    #[arg(long, default_value_t = 20)]
    pub family: usize,
    /// Exponents for the W^{1,p} study.
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.0, 4.0])]
    pub p: Vec<f64>,
    /// Bound on the identity and intertwining residuals.
    #[arg(long, default_value_t = 1e-5)]
    pub tol_identity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolveMode {
    /// `e^{-itH} P_c f` from the distorted transform.
    Linear,
    /// Sup-norm decay over log-spaced times.
    Decay,
    /// Strang splitting for the NLS with the potential.
    Nls,
    /// The NLS double well `-q [delta(x-L) + delta(x+L)]`.
    DoubleWell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Sign {
    Focusing,
    Defocusing,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub pot: PotentialArg,
    #[arg(long, value_enum, default_value_t = EvolveMode::Linear)]
    pub mode: EvolveMode,
    #[command(flatten)]
    pub grid: SpectralArgs,
    /// Gaussian initial datum `a exp(-(x-x0)^2 / (2 w^2) + i v x)`.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0.0)]
    pub center: f64,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 0.0)]
    pub velocity: f64,
    /// Sample times for linear mode.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 1.0, 2.0])]
    pub times: Vec<f64>,
    /// Time window and count for decay mode.
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t1: f64,
    #[arg(long, default_value_t = 15)]
    pub nt: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, value_enum, default_value_t = Sign::Defocusing)]
    pub sign: Sign,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    /// Keep every n-th NLS state.
    #[arg(long, default_value_t = 100)]
    pub record_every: usize,
    /// Dirichlet box half width and step for the NLS.
    #[arg(long, default_value_t = 16.0)]
    pub box_half_width: f64,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    pub box_dx: f64,
    /// Double-well strength and half separation.
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    /// Start the double well from the Gaussian instead of the bound pair.
    #[arg(long)]
    pub gaussian: bool,
    #[arg(long, default_value_t = -0.55)]
    pub tol_slope_lo: f64,
    #[arg(long, default_value_t = -0.45)]
    pub tol_slope_hi: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol_mass_drift: f64,
    #[arg(long, default_value_t = 0.02)]
    pub tol_beat: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criteria to run (1-12). Criterion 12 reruns the others into `out/rerun`.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[command(flatten)]
    pub grid: SpectralArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

/// Overrides of the suite tolerances; defaults in brackets.
#[derive(Debug, Args)]
pub struct TolArgs {
    /// Single-delta closed forms [1e-12].
    #[arg(long)]
    pub tol_closed_single: Option<f64>,
    /// Double-delta closed forms [1e-10].
    #[arg(long)]
    pub tol_closed_double: Option<f64>,
    /// Unitarity residual [1e-10].
    #[arg(long)]
    pub tol_unitarity: Option<f64>,
    /// Relative growth window of the decay hypothesis [0.05].
    #[arg(long)]
    pub tol_rt_window: Option<f64>,
    /// B1 against the K_n series [1e-5].
    #[arg(long)]
    pub tol_b1_kn: Option<f64>,
    /// Relative change of kernel-bound constants under refinement [0.10].
    #[arg(long)]
    pub tol_kernel_refine: Option<f64>,
    /// Wave-operator identities [1e-5].
    #[arg(long)]
    pub tol_identity: Option<f64>,
    /// Young constant under refinement [0.10].
    #[arg(long)]
    pub tol_young_refine: Option<f64>,
    /// Sobolev ratio under family doubling [0.05].
    #[arg(long)]
    pub tol_sobolev_refine: Option<f64>,
    /// Decay slope window [-0.55].
    #[arg(long, allow_hyphen_values = true)]
    pub tol_slope_lo: Option<f64>,
    /// [-0.45].
    #[arg(long, allow_hyphen_values = true)]
    pub tol_slope_hi: Option<f64>,
    /// Resolvent sandwich agreement [1e-5].
    #[arg(long)]
    pub tol_sandwich: Option<f64>,
    /// Mass drift per unit time [1e-8].
    #[arg(long)]
    pub tol_mass_drift: Option<f64>,
    /// dt-halving target ratio [4] and band [0.5].
    #[arg(long)]
    pub tol_order_ratio: Option<f64>,
    #[arg(long)]
    pub tol_order_band: Option<f64>,
    /// Relative beat-period error [0.02].
    #[arg(long)]
    pub tol_beat: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

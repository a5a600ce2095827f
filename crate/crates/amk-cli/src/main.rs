//! `amk` — command-line front end for the alpha-modulation kernel toolkit.
//!
//! One command per process; every run is fully determined by its flags and
//! seed, reports echo every tolerance they applied, and outputs are written
//! atomically (temp file + rename). Exit codes: 0 = pass, 1 = usage or
//! input error, 2 = a numerical check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use amk_core::bump::SmoothBump;
use amk_core::fixtures::{self, fixture_kernel, FixtureKind};
use amk_core::gabor::{
    gabor_compactness, gabor_kernel_bound, gabor_norm, gaussian_window, CoeffWindow,
    GaborCheckConfig, GaborSystem,
};
use amk_core::grid::{relative_l2_error, Grid, Signal};
use amk_core::kernel::{
    boundedness_report, compactness_report, dual_bound_report, mixed_norm, Kernel2D,
    KernelCheckConfig, MixedNormParams, MixedVariant,
};
use amk_core::modulation::{alpha_mod_norm, band_lp_norms, sampled_norm, ModNormParams};
use amk_core::partition::{
    build_atoms, build_partition, default_covering_constant, validate_partition, AlphaPartition,
    AtomFamily, PartitionTolerances,
};
use amk_core::sampling::{
    bernstein_ratio, lp_sampling_ratio, shifted_expand, shifted_sampling_ratio, standard_expand,
    BallSpec, WindowPsi,
};
use amk_core::tails::{family_tail_profile, tb_verdict, TailProfile};
use amk_core::{AmkError, Check, Report};

fn parse_exponent(s: &str) -> Result<f64, String> {
    let v = match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "oo" => f64::INFINITY,
        other => other.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("exponent must be positive, got {v}"))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    C1,
    C2,
}

impl From<VariantArg> for MixedVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::C1 => MixedVariant::C1,
            VariantArg::C2 => MixedVariant::C2,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExpectArg {
    Compact,
    Noncompact,
}

#[derive(Debug, Args)]
struct GridOpts {
    /// Samples per axis (even, >= 8).
    #[arg(long = "grid-n", default_value_t = 256)]
    grid_n: usize,
    /// Side length of the periodic cube.
    #[arg(long, default_value_t = 16.0)]
    extent: f64,
    /// Dimension (1 or 2) when no input file fixes it.
    #[arg(long, default_value_t = 1)]
    dim: usize,
}

impl GridOpts {
    fn build(&self) -> Result<Grid, AmkError> {
        Grid::new(self.dim, self.extent, self.grid_n)
    }
}

#[derive(Debug, Args)]
struct DecompOpts {
    /// Covering interpolation parameter in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Covering constant (defaults to 2 in 1-d, 3 in 2-d).
    #[arg(long = "C")]
    covering_c: Option<f64>,
    /// Atom enlargement factor (> 1).
    #[arg(long, default_value_t = 1.5)]
    r: f64,
    /// Sampling density parameter in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

impl DecompOpts {
    fn covering(&self, dim: usize) -> f64 {
        self.covering_c.unwrap_or_else(|| default_covering_constant(dim))
    }

    fn build(&self, grid: &Grid) -> Result<(AlphaPartition, AtomFamily), AmkError> {
        let partition =
            build_partition(self.alpha, grid, self.covering(grid.dim), SmoothBump::reference())?;
        let atoms = build_atoms(&partition, self.r)?;
        Ok((partition, atoms))
    }
}

#[derive(Debug, Args)]
struct RunOpts {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Random witnesses per check.
    #[arg(long, default_value_t = 16)]
    trials: usize,
    /// Tail box levels.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 4, 8, 16])]
    levels: Vec<u32>,
    /// Sandwich band: ratios must lie in [1/band, band].
    #[arg(long = "tol-band", default_value_t = 10.0)]
    tol_band: f64,
    /// Write the JSON report here (atomically).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a CSV table here, for commands that produce one.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(name = "amk", version, about = "alpha-modulation kernel toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a partition of unity and validate its invariants.
    PartitionValidate {
        /// Also export the partition (sparse band arrays) as JSON here.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Alpha-modulation norm of a signal, with per-band detail.
    Norm {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        p: f64,
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        q: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Sampled-norm vs definition-norm equivalence over random signals.
    NormEquiv {
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        p: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Band-limited sampling expansions: reconstruction + ratio trials.
    SamplingCheck {
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        p: f64,
        /// Plateau parameter of the standard window, in (0, 1).
        #[arg(long = "r-std", default_value_t = 0.8)]
        r_std: f64,
        /// Enlargement of the shifted window, > 1.
        #[arg(long = "r-shift", default_value_t = 1.5)]
        r_shift: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Bernstein embedding ratio for ball-supported spectra.
    Bernstein {
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long = "ball-center", default_value_t = 0.0)]
        ball_center: f64,
        #[arg(long = "ball-radius", default_value_t = 2.0)]
        ball_radius: f64,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Mixed alpha-modulation norm of a kernel.
    KernelNorm {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p1: f64,
        #[arg(long, value_parser = parse_exponent)]
        p2: f64,
        #[arg(long, value_parser = parse_exponent)]
        q1: f64,
        #[arg(long, value_parser = parse_exponent)]
        q2: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::C1)]
        variant: VariantArg,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Three-way boundedness sandwich for a kernel.
    Boundedness {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Dual-side sandwich (target space M^inf).
    DualBoundedness {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Atom-image tail profile and compactness verdict.
    Compactness {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        /// Fail (exit 2) unless the verdict matches.
        #[arg(long, value_enum)]
        expect: Option<ExpectArg>,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Tail profile of a signal family and totally-bounded verdict.
    TbProfile {
        /// Signal files (repeatable).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_parser = parse_exponent, default_value = "1")]
        p: f64,
        #[arg(long, default_value_t = 1e3)]
        bound: f64,
        #[arg(long = "decay-threshold", default_value_t = 0.1)]
        decay_threshold: f64,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Lattice Gabor coefficient norm of a signal.
    GaborNorm {
        #[arg(long)]
        signal: PathBuf,
        #[arg(long, value_parser = parse_exponent, default_value = "2")]
        p: f64,
        #[arg(long = "n-lat", default_value_t = 1)]
        n_lat: u32,
        #[arg(long = "window-width", default_value_t = 1.0)]
        window_width: f64,
        /// Custom window signal file (overrides the Gaussian).
        #[arg(long = "window-file")]
        window_file: Option<PathBuf>,
        /// Use the canonical dual window for the coefficients.
        #[arg(long)]
        dual: bool,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Gabor-route kernel sandwich.
    GaborKernel {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long = "n-lat", default_value_t = 1)]
        n_lat: u32,
        #[arg(long = "window-width", default_value_t = 1.0)]
        window_width: f64,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Gabor-route compactness tails.
    GaborCompactness {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_parser = parse_exponent)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long = "n-lat", default_value_t = 1)]
        n_lat: u32,
        #[arg(long = "window-width", default_value_t = 1.0)]
        window_width: f64,
        #[arg(long, value_enum)]
        expect: Option<ExpectArg>,
        #[command(flatten)]
        run: RunOpts,
    },
    /// Write a deterministic fixture kernel or signal.
    Fixture {
        /// zero | identity | rank1 | convolution | random-band
        #[arg(long)]
        kind: String,
        /// What to emit: a kernel or a signal.
        #[arg(long, value_enum, default_value_t = ObjectArg::Kernel)]
        object: ObjectArg,
        #[command(flatten)]
        grid: GridOpts,
        #[command(flatten)]
        decomp: DecompOpts,
        #[command(flatten)]
        run: RunOpts,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ObjectArg {
    Kernel,
    Signal,
}

/// Write bytes atomically: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AmkError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(report: &Report, run: &RunOpts) -> Result<bool, AmkError> {
    let json = serde_json::to_string_pretty(&report.to_json())? + "\n";
    if let Some(path) = &run.out {
        write_atomic(path, json.as_bytes())?;
    }
    print!("{json}");
    Ok(report.passed())
}

fn read_json(path: &Path) -> Result<serde_json::Value, AmkError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn load_signal(path: &Path) -> Result<Signal, AmkError> {
    Signal::from_json(&read_json(path)?)
}

fn load_kernel(path: &Path) -> Result<Kernel2D, AmkError> {
    Kernel2D::from_json(&read_json(path)?)
}

fn kernel_cfg(decomp: &DecompOpts, run: &RunOpts, dim: usize) -> KernelCheckConfig {
    KernelCheckConfig {
        covering_c: decomp.covering(dim),
        enlargement: decomp.r,
        lambda: decomp.lambda,
        trials: run.trials,
        seed: run.seed,
        sandwich: run.tol_band,
        ..Default::default()
    }
}

fn expect_check(report: &mut Report, expect: Option<ExpectArg>) {
    if let Some(expect) = expect {
        let want = match expect {
            ExpectArg::Compact => "compact-consistent",
            ExpectArg::Noncompact => "not compact-consistent",
        };
        let got = report.verdict.clone().unwrap_or_default();
        report.check(Check::flag(&format!("verdict_is_{want}"), got == want));
    }
}

fn profile_csv(profile: &TailProfile) -> String {
    let mut csv = String::from("level,sup_tail,ratio_to_total\n");
    for (level, value, ratio) in profile.rows() {
        csv.push_str(&format!("{level},{value:.17e},{ratio:.17e}\n"));
    }
    csv
}

fn run(cli: Cli) -> Result<bool, AmkError> {
    match cli.command {
        Command::PartitionValidate { export, grid, decomp, run } => {
            let g = grid.build()?;
            let partition =
                build_partition(decomp.alpha, &g, decomp.covering(g.dim), SmoothBump::reference())?;
            if let Some(path) = export {
                let text = serde_json::to_string(&partition.to_json())? + "\n";
                write_atomic(&path, text.as_bytes())?;
            }
            let report = validate_partition(&partition, PartitionTolerances::default());
            emit(&report, &run)
        }
        Command::Norm { signal, p, q, s, decomp, run } => {
            let f = load_signal(&signal)?;
            let partition = build_partition(
                decomp.alpha,
                &f.grid,
                decomp.covering(f.grid.dim),
                SmoothBump::reference(),
            )?;
            let params = ModNormParams::new(p, q, s);
            let norm = alpha_mod_norm(&f, &partition, params);
            let per_band: Vec<_> = partition
                .bands
                .iter()
                .zip(band_lp_norms(&amk_core::grid::spectrum(&f), &partition, p))
                .map(|(band, lp)| serde_json::json!({"k": band.geometry.k, "lp": lp}))
                .collect();
            let mut report = Report::new("norm");
            report.config = serde_json::json!({
                "params": params, "alpha": decomp.alpha, "signal": signal,
            });
            report.metric("norm", norm);
            report.extra = serde_json::json!({"norm": norm, "per_band": per_band, "params": params});
            emit(&report, &run)
        }
        Command::NormEquiv { p, grid, decomp, run } => {
            let g = grid.build()?;
            let (partition, atoms) = decomp.build(&g)?;
            let mut rng = fixtures::rng(run.seed);
            let mut report = Report::new("norm-equiv");
            report.config = serde_json::json!({
                "p": p, "alpha": decomp.alpha, "lambda": decomp.lambda,
                "trials": run.trials, "seed": run.seed, "tol_band": run.tol_band,
            });
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for _ in 0..run.trials.max(1) {
                let f = fixtures::random_retained_band_signal(&partition, &atoms, &mut rng);
                let ratio = sampled_norm(&f, &partition, &atoms, p, decomp.lambda)?
                    / alpha_mod_norm(&f, &partition, ModNormParams::diagonal(p));
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            report.metric("ratio_min", lo);
            report.metric("ratio_max", hi);
            report.check(Check::in_band("ratio_min", lo, 1.0 / run.tol_band, run.tol_band));
            report.check(Check::in_band("ratio_max", hi, 1.0 / run.tol_band, run.tol_band));
            emit(&report, &run)
        }
        Command::SamplingCheck { p, r_std, r_shift, lambda, grid, run } => {
            let g = grid.build()?;
            let psi_std = WindowPsi::standard(r_std)?;
            let std_ball = BallSpec::new(&[0.0, 0.0], r_std / 2.0 * 0.9)?;
            let psi_sh = WindowPsi::shifted(r_shift)?;
            let sh_ball = BallSpec::new(&[g.nyquist() * 0.6, 0.0], g.nyquist() * 0.2)?;
            let mut rng = fixtures::rng(run.seed);
            let mut csv = String::from("f_id,p,lambda,lp_norm,seq_norm,ratio\n");
            let mut worst = 0.0f64;
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for trial in 0..run.trials.max(1) {
                let f = fixtures::random_ball_signal(&g, std_ball.center[0], std_ball.radius, &mut rng);
                let (samples, recon) = standard_expand(&f, &psi_std, lambda)?;
                worst = worst.max(relative_l2_error(&recon, &f));
                let ratio = lp_sampling_ratio(&f, &psi_std, p, lambda)?;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
                let lpn = amk_core::grid::lp_norm(&f, p);
                let seq = samples.lp_norm(p);
                csv.push_str(&format!("{trial},{p},{lambda},{lpn:.17e},{seq:.17e},{ratio:.17e}\n"));

                let h = fixtures::random_ball_signal(&g, sh_ball.center[0], sh_ball.radius, &mut rng);
                let (_, recon2) = shifted_expand(&h, &sh_ball, r_shift, &psi_sh, lambda)?;
                worst = worst.max(relative_l2_error(&recon2, &h));
                let _ = shifted_sampling_ratio(&h, &sh_ball, r_shift, &psi_sh, p, lambda)?;
            }
            if let Some(path) = &run.csv {
                write_atomic(path, csv.as_bytes())?;
            }
            let mut report = Report::new("sampling-check");
            report.config = serde_json::json!({
                "p": p, "r_std": r_std, "r_shift": r_shift, "lambda": lambda,
                "trials": run.trials, "seed": run.seed, "recon_tol": 1e-9,
                "tol_band": run.tol_band,
            });
            report.metric("worst_reconstruction_error", worst);
            report.metric("ratio_min", lo);
            report.metric("ratio_max", hi);
            report.check(Check::le("reconstruction", worst, 1e-9));
            report.check(Check::in_band("ratio_min", lo, 1.0 / run.tol_band, run.tol_band));
            report.check(Check::in_band("ratio_max", hi, 1.0 / run.tol_band, run.tol_band));
            emit(&report, &run)
        }
        Command::Bernstein { p, q, ball_center, ball_radius, grid, run } => {
            let g = grid.build()?;
            let ball = BallSpec::new(&[ball_center, 0.0], ball_radius)?;
            let mut rng = fixtures::rng(run.seed);
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for _ in 0..run.trials.max(1) {
                let f = fixtures::random_ball_signal(&g, ball.center[0], ball.radius, &mut rng);
                let r = bernstein_ratio(&f, p, q, &ball)?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let mut report = Report::new("bernstein");
            report.config = serde_json::json!({
                "p": p, "q": q, "ball_center": ball_center, "ball_radius": ball_radius,
                "trials": run.trials, "seed": run.seed,
            });
            report.metric("ratio_min", lo);
            report.metric("ratio_max", hi);
            emit(&report, &run)
        }
        Command::KernelNorm { kernel, p1, p2, q1, q2, s, t, variant, decomp, run } => {
            let k = load_kernel(&kernel)?;
            let partition = build_partition(
                decomp.alpha,
                &k.grid,
                decomp.covering(1),
                SmoothBump::reference(),
            )?;
            let params = MixedNormParams::new(p1, p2, q1, q2, s, t, variant.into());
            let value = mixed_norm(&k, &partition, params)?;
            let mut report = Report::new("kernel-norm");
            report.config = serde_json::json!({"params": params, "alpha": decomp.alpha});
            report.metric("mixed_norm", value);
            emit(&report, &run)
        }
        Command::Boundedness { kernel, p, q, decomp, run } => {
            let k = load_kernel(&kernel)?;
            let cfg = kernel_cfg(&decomp, &run, 1);
            let report = boundedness_report(&k, p, q, decomp.alpha, &cfg)?;
            emit(&report, &run)
        }
        Command::DualBoundedness { kernel, p, decomp, run } => {
            let k = load_kernel(&kernel)?;
            let cfg = kernel_cfg(&decomp, &run, 1);
            let report = dual_bound_report(&k, p, decomp.alpha, &cfg)?;
            emit(&report, &run)
        }
        Command::Compactness { kernel, p, q, expect, decomp, run } => {
            let k = load_kernel(&kernel)?;
            let cfg = kernel_cfg(&decomp, &run, 1);
            let mut report = compactness_report(&k, p, q, decomp.alpha, &cfg, &run.levels)?;
            expect_check(&mut report, expect);
            if let (Some(path), Some(profile)) = (
                &run.csv,
                report.extra.get("profile").cloned(),
            ) {
                let profile: TailProfile = serde_json::from_value(profile)?;
                write_atomic(path, profile_csv(&profile).as_bytes())?;
            }
            emit(&report, &run)
        }
        Command::TbProfile { inputs, p, bound, decay_threshold, decomp, run } => {
            let family: Vec<Signal> =
                inputs.iter().map(|path| load_signal(path)).collect::<Result<_, _>>()?;
            let grid = family[0].grid;
            let (partition, atoms) = decomp.build(&grid)?;
            let profile =
                family_tail_profile(&family, &partition, &atoms, p, decomp.lambda, &run.levels)?;
            if let Some(path) = &run.csv {
                write_atomic(path, profile_csv(&profile).as_bytes())?;
            }
            let mut report = tb_verdict(&profile, bound, decay_threshold);
            report.extra = serde_json::json!({"profile": profile, "members": inputs.len()});
            emit(&report, &run)
        }
        Command::GaborNorm { signal, p, n_lat, window_width, window_file, dual, run } => {
            let f = load_signal(&signal)?;
            let window = match window_file {
                Some(path) => load_signal(&path)?,
                None => gaussian_window(&f.grid, window_width),
            };
            let sys = GaborSystem::new(window, n_lat)?;
            let against = if dual { CoeffWindow::Dual } else { CoeffWindow::Analysis };
            let value = gabor_norm(&f, &sys, p, against);
            let mut report = Report::new("gabor-norm");
            report.config = serde_json::json!({
                "p": p, "n_lat": n_lat, "window_width": window_width, "dual": dual,
                "frame_bounds": sys.frame_bounds,
            });
            report.metric("gabor_norm", value);
            emit(&report, &run)
        }
        Command::GaborKernel { kernel, p, q, n_lat, window_width, run } => {
            let k = load_kernel(&kernel)?;
            let sys = GaborSystem::new(gaussian_window(&k.grid, window_width), n_lat)?;
            let cfg = GaborCheckConfig {
                trials: run.trials,
                seed: run.seed,
                sandwich: run.tol_band,
                ..Default::default()
            };
            let report = gabor_kernel_bound(&k, &sys, p, q, &cfg)?;
            emit(&report, &run)
        }
        Command::GaborCompactness { kernel, p, q, n_lat, window_width, expect, run } => {
            let k = load_kernel(&kernel)?;
            let sys = GaborSystem::new(gaussian_window(&k.grid, window_width), n_lat)?;
            let cfg = GaborCheckConfig {
                trials: run.trials,
                seed: run.seed,
                sandwich: run.tol_band,
                ..Default::default()
            };
            let mut report = gabor_compactness(&k, &sys, p, q, &cfg, &run.levels)?;
            expect_check(&mut report, expect);
            emit(&report, &run)
        }
        Command::Fixture { kind, object, grid, decomp, run } => {
            let g = grid.build()?;
            let kind: FixtureKind = kind.parse()?;
            let (partition, atoms) = decomp.build(&g)?;
            let json = match object {
                ObjectArg::Kernel => {
                    fixture_kernel(kind, &partition, &atoms, run.seed)?.to_json()
                }
                ObjectArg::Signal => match kind {
                    FixtureKind::Zero => Signal::zeros(g).to_json(),
                    FixtureKind::RandomBand => {
                        let mut rng = fixtures::rng(run.seed);
                        fixtures::random_retained_band_signal(&partition, &atoms, &mut rng)
                            .to_json()
                    }
                    other => {
                        return Err(AmkError::Parameter(format!(
                            "fixture kind {other:?} only exists as a kernel"
                        )))
                    }
                },
            };
            let text = serde_json::to_string(&json)? + "\n";
            match &run.out {
                Some(path) => write_atomic(path, text.as_bytes())?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("AMK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed (see report)");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

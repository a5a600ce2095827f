//! Band-limited sampling expansions and embedding ratio checks.
//!
//! A signal whose spectrum sits inside a ball can be recovered from lattice
//! samples against a smooth window that is 1 on the ball:
//!
//! * the standard expansion `f = lambda^d sum f(lambda k) T_(lambda k)
//!   psi^vee` for spectra in `B(0, r/2)`, `r in (0,1)`;
//! * the shifted expansion on `B(xi0, R)` with window
//!   `psi((xi - xi0)/(2rR))`, `r > 1`, and lattice spacing
//!   `lambda / (2rR)`.
//!
//! The two `r` knobs are different parameters that happen to share a letter;
//! they are named `r_std` and `r_shift` here. Lattice spacings are snapped
//! commensurate with the torus (never coarser than nominal) so both
//! expansions are exact identities on band-limited grid data.

use crate::error::{AmkError, Result};
use crate::grid::{inverse_spectrum, lp_norm, spectrum, Grid, Signal, Spectrum, C64};
use crate::modulation::BandLattice;
use crate::SmoothBump;
use rustfft::FftPlanner;

/// Frequency ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(center: &[f64], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(AmkError::Parameter(format!("ball radius must be > 0, got {radius}")));
        }
        Ok(Self { center: center.to_vec(), radius })
    }

    fn contains(&self, xi: &[f64], dim: usize) -> bool {
        let d2: f64 = (0..dim).map(|a| (xi[a] - self.center[a]).powi(2)).sum();
        d2 < self.radius * self.radius
    }
}

/// Smooth sampling window, supported in `B(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WindowPsi {
    pub profile: SmoothBump,
}

impl WindowPsi {
    /// Window for the standard expansion: 1 on `B(0, r_std/2)`, `r_std in (0,1)`.
    pub fn standard(r_std: f64) -> Result<Self> {
        if !(0.0 < r_std && r_std < 1.0) {
            return Err(AmkError::Parameter(format!("r_std must be in (0,1), got {r_std}")));
        }
        Ok(Self { profile: SmoothBump::new(r_std / 2.0, 0.5) })
    }

    /// Window for the shifted expansion: 1 on `B(0, 1/(2 r_shift))`, `r_shift > 1`.
    pub fn shifted(r_shift: f64) -> Result<Self> {
        if !(r_shift > 1.0) {
            return Err(AmkError::Parameter(format!("r_shift must be > 1, got {r_shift}")));
        }
        Ok(Self { profile: SmoothBump::new(0.5 / r_shift, 0.5) })
    }
}

/// Samples of a signal on a commensurate lattice, natural label order.
#[derive(Debug, Clone)]
pub struct LatticeSamples {
    pub lattice: BandLattice,
    pub values: Vec<C64>,
}

impl LatticeSamples {
    pub fn lp_norm(&self, p: f64) -> f64 {
        crate::grid::lp_aggregate(self.values.iter().map(|v| v.norm()), p, 1.0)
    }
}

fn check_support(s: &Spectrum, ball: &BallSpec, what: &str) -> Result<()> {
    let grid = s.grid;
    let leakage = s.leakage_outside(|j| {
        let xi = [j[0] as f64 * grid.dxi(), j[1] as f64 * grid.dxi()];
        ball.contains(&xi, grid.dim)
    });
    if leakage > 1e-12 {
        return Err(AmkError::SupportViolation { what: what.to_string(), leakage });
    }
    Ok(())
}

/// Snap a nominal lattice spacing to `L / m`.
fn snapped_lattice(grid: &Grid, nominal_spacing: f64) -> BandLattice {
    let ratio = grid.extent / nominal_spacing;
    let rounded = ratio.round();
    let m = if (ratio - rounded).abs() < 1e-9 { rounded } else { ratio.ceil() } as usize;
    let m = m.max(1);
    BandLattice { m, beta: grid.extent / m as f64 }
}

/// Sample a spectrum at all points of a commensurate lattice (exact
/// band-limited evaluation via spectral folding).
fn sample_full_on_lattice(s: &Spectrum, lattice: &BandLattice) -> Vec<C64> {
    let grid = &s.grid;
    let m = lattice.m as i64;
    let mut folded = vec![C64::default(); lattice.total(grid.dim)];
    for (pos, c) in s.coeffs.iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let j = grid.freq_index(pos);
        let b0 = j[0].rem_euclid(m) as usize;
        let b1 = if grid.dim == 2 { j[1].rem_euclid(m) as usize } else { 0 };
        folded[lattice.flat_of([b0, b1], grid.dim)] += *c;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(lattice.m);
    match grid.dim {
        1 => fft.process(&mut folded),
        _ => {
            let mm = lattice.m;
            for r in 0..mm {
                fft.process(&mut folded[r * mm..(r + 1) * mm]);
            }
            let mut col = vec![C64::default(); mm];
            for c in 0..mm {
                for r in 0..mm {
                    col[r] = folded[r * mm + c];
                }
                fft.process(&mut col);
                for r in 0..mm {
                    folded[r * mm + c] = col[r];
                }
            }
        }
    }
    let scale = 1.0 / grid.extent.powi(grid.dim as i32);
    for v in &mut folded {
        *v *= scale;
    }
    folded
}

/// Synthesize `spacing^d sum_k c_k T_(spacing k) w^vee` spectrally, where `w`
/// evaluates the window at a grid frequency.
fn synthesize(
    grid: &Grid,
    samples: &[C64],
    lattice: &BandLattice,
    window: impl Fn(&[f64]) -> f64,
) -> Signal {
    let mut dft = samples.to_vec();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(lattice.m);
    match grid.dim {
        1 => fft.process(&mut dft),
        _ => {
            let mm = lattice.m;
            for r in 0..mm {
                fft.process(&mut dft[r * mm..(r + 1) * mm]);
            }
            let mut col = vec![C64::default(); mm];
            for c in 0..mm {
                for r in 0..mm {
                    col[r] = dft[r * mm + c];
                }
                fft.process(&mut col);
                for r in 0..mm {
                    dft[r * mm + c] = col[r];
                }
            }
        }
    }
    let m = lattice.m as i64;
    let w = lattice.beta.powi(grid.dim as i32);
    let mut out = Spectrum::zeros(*grid);
    for pos in 0..grid.total() {
        let xi = grid.freq_value(pos);
        let win = window(&xi[..grid.dim]);
        if win == 0.0 {
            continue;
        }
        let j = grid.freq_index(pos);
        let b0 = j[0].rem_euclid(m) as usize;
        let b1 = if grid.dim == 2 { j[1].rem_euclid(m) as usize } else { 0 };
        out.coeffs[pos] = dft[lattice.flat_of([b0, b1], grid.dim)] * (win * w);
    }
    inverse_spectrum(&out)
}

/// Standard sampling expansion for spectra in `B(0, r_std/2)`.
///
/// Returns the lattice samples `{f(lambda k)}` and the reconstruction
/// `lambda^d sum_k f(lambda k) T_(lambda k) psi^vee`.
pub fn standard_expand(
    f: &Signal,
    psi: &WindowPsi,
    lambda: f64,
) -> Result<(LatticeSamples, Signal)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(AmkError::Parameter(format!("lambda must be in (0,1], got {lambda}")));
    }
    let s = spectrum(f);
    let plateau = psi.profile.plateau;
    check_support(&s, &BallSpec::new(&[0.0, 0.0], plateau)?, "standard expansion plateau")?;
    let lattice = snapped_lattice(&f.grid, lambda);
    let values = sample_full_on_lattice(&s, &lattice);
    let samples = LatticeSamples { lattice, values };
    let recon = synthesize(&f.grid, &samples.values, &lattice, |xi| psi.profile.eval_at(xi));
    Ok((samples, recon))
}

/// `||f||_p / (lambda^(d/p) ||{f(lambda k)}||_p)` for the standard lattice.
pub fn lp_sampling_ratio(f: &Signal, psi: &WindowPsi, p: f64, lambda: f64) -> Result<f64> {
    let (samples, _) = standard_expand(f, psi, lambda)?;
    let d = f.grid.dim as f64;
    let seq = samples.lattice.beta.powf(d / p) * samples.lp_norm(p);
    if seq == 0.0 {
        return Err(AmkError::UndefinedRatio("zero signal".into()));
    }
    Ok(lp_norm(f, p) / seq)
}

/// Shifted sampling expansion for spectra in `B(xi0, R)`, window
/// `psi((xi - xi0) / (2 r_shift R))`, lattice spacing `lambda / (2 r_shift R)`.
pub fn shifted_expand(
    f: &Signal,
    ball: &BallSpec,
    r_shift: f64,
    psi: &WindowPsi,
    lambda: f64,
) -> Result<(LatticeSamples, Signal)> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(AmkError::Parameter(format!("lambda must be in (0,1], got {lambda}")));
    }
    if !(r_shift > 1.0) {
        return Err(AmkError::Parameter(format!("r_shift must be > 1, got {r_shift}")));
    }
    let s = spectrum(f);
    check_support(&s, ball, "shifted expansion ball")?;
    let dilation = 2.0 * r_shift * ball.radius;
    let lattice = snapped_lattice(&f.grid, lambda / dilation);
    let values = sample_full_on_lattice(&s, &lattice);
    let samples = LatticeSamples { lattice, values };
    let dim = f.grid.dim;
    let center = ball.center.clone();
    let recon = synthesize(&f.grid, &samples.values, &lattice, move |xi| {
        let rel: Vec<f64> = (0..dim).map(|a| (xi[a] - center[a]) / dilation).collect();
        psi.profile.eval_at(&rel)
    });
    Ok((samples, recon))
}

/// `||f||_p / ((2 spacing)^(d/p) ||{f(spacing k)}||_p)` for the shifted
/// lattice with spacing `lambda / (2 r_shift R)` (the two-sided constant of
/// the off-center sampling equivalence; the weight `lambda/(r_shift R)` is
/// twice the spacing).
pub fn shifted_sampling_ratio(
    f: &Signal,
    ball: &BallSpec,
    r_shift: f64,
    psi: &WindowPsi,
    p: f64,
    lambda: f64,
) -> Result<f64> {
    let (samples, _) = shifted_expand(f, ball, r_shift, psi, lambda)?;
    let d = f.grid.dim as f64;
    let seq = (2.0 * samples.lattice.beta).powf(d / p) * samples.lp_norm(p);
    if seq == 0.0 {
        return Err(AmkError::UndefinedRatio("zero signal".into()));
    }
    Ok(lp_norm(f, p) / seq)
}

/// Bernstein-type embedding ratio `||f||_q / (R^(d(1/p - 1/q)) ||f||_p)` for
/// spectra in the given ball; `0 < p <= q`.
pub fn bernstein_ratio(f: &Signal, p: f64, q: f64, ball: &BallSpec) -> Result<f64> {
    if !(p > 0.0) || q < p {
        return Err(AmkError::Parameter(format!("need 0 < p <= q, got p={p} q={q}")));
    }
    let s = spectrum(f);
    check_support(&s, ball, "bernstein ball")?;
    let np = lp_norm(f, p);
    if np == 0.0 {
        return Err(AmkError::UndefinedRatio("zero signal".into()));
    }
    let nq = lp_norm(f, q);
    let d = f.grid.dim as f64;
    let inv = |e: f64| if e.is_infinite() { 0.0 } else { 1.0 / e };
    let exponent = d * (inv(p) - inv(q));
    Ok(nq / (ball.radius.powf(exponent) * np))
}

/// `L^p` norm of the truncated synthesis over a label subset, divided by the
/// weighted sequence norm of the kept samples. Bounded by a constant
/// depending only on `(p, psi)`.
pub fn truncated_sum_ratio(
    f: &Signal,
    psi: &WindowPsi,
    p: f64,
    lambda: f64,
    keep: impl Fn([i64; 2]) -> bool,
) -> Result<f64> {
    let (mut samples, _) = standard_expand(f, psi, lambda)?;
    let dim = f.grid.dim;
    for flat in 0..samples.values.len() {
        if !keep(samples.lattice.labels_of(flat, dim)) {
            samples.values[flat] = C64::default();
        }
    }
    let seq = samples.lattice.beta.powf(dim as f64 / p) * samples.lp_norm(p);
    if seq == 0.0 {
        return Err(AmkError::UndefinedRatio("empty subset".into()));
    }
    let partial = synthesize(&f.grid, &samples.values, &samples.lattice, |xi| {
        psi.profile.eval_at(xi)
    });
    Ok(lp_norm(&partial, p) / seq)
}

//! Short-time Fourier transforms, lattice Gabor frames, and the
//! modulation-space kernel certificates (the alpha = 0 route).
//!
//! Time-frequency shifts are `pi(z) f(t) = exp(2 pi i t xi) f(t - x)` for
//! `z = (x, xi)`. The lattice is `delta Z x delta Z` with `delta = 2^-n_lat`,
//! restricted to the torus and the Nyquist window; admissibility requires
//! the time step to be a whole number of grid samples and the frequency
//! step a whole number of grid frequencies, so lattice shifts are exact
//! permutations-with-phases of the sample grid.
//!
//! The frame operator `S f = sum_lambda <f, pi(lambda) g> pi(lambda) g` is
//! assembled densely; extreme eigenvalues come from power and inverse-power
//! iteration (the solve is an LU factorization) and the canonical dual
//! window is `gamma = S^-1 g`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AmkError, Result};
use crate::grid::{inverse_spectrum, spectrum, Grid, Signal, Spectrum, C64};
use crate::kernel::{apply_kernel, Kernel2D};
use crate::report::{Check, Report};
use crate::tails::TailProfile;

const TAU: f64 = std::f64::consts::TAU;

/// A time-frequency shift with grid-admissible components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeFrequencyShift {
    /// Time shift in grid samples.
    pub time_steps: i64,
    /// Frequency shift in grid frequency units (multiples of 1/L).
    pub freq_steps: i64,
}

/// `pi(z) f = M_xi T_x f` for a grid-admissible shift (exact).
pub fn tf_shift(f: &Signal, shift: TimeFrequencyShift) -> Signal {
    let n = f.grid.n as i64;
    let values = (0..f.grid.n)
        .map(|t| {
            let src = (t as i64 - shift.time_steps).rem_euclid(n) as usize;
            let turns = (t as i64 * shift.freq_steps).rem_euclid(n) as f64 / n as f64;
            f.values[src] * C64::from_polar(1.0, TAU * turns)
        })
        .collect();
    Signal { grid: f.grid, values }
}

/// Full-grid STFT `V_g f(x, xi) = <f, pi(x, xi) g>`, conjugate-linear in the
/// window. Layout: `values[time_idx * n + freq_pos]` with frequencies in
/// signed order.
pub fn stft(f: &Signal, window: &Signal) -> Result<Vec<C64>> {
    if f.grid != window.grid {
        return Err(AmkError::GridMismatch("stft".into()));
    }
    if window.l2_norm() == 0.0 {
        return Err(AmkError::Parameter("zero window".into()));
    }
    let n = f.grid.n;
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let h = Signal {
                grid: f.grid,
                values: (0..n)
                    .map(|t| f.values[t] * window.values[(t + n - x) % n].conj())
                    .collect(),
            };
            spectrum(&h).coeffs
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// `L^p` norm of a full-grid STFT map over phase space (cell `dx * dxi`).
pub fn stft_lp_norm(grid: &Grid, map: &[C64], p: f64) -> f64 {
    crate::grid::lp_aggregate(map.iter().map(|v| v.norm()), p, grid.dx() * grid.dxi())
}

/// The time-frequency lattice `(delta Z) x (delta Z)` on torus x Nyquist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaborLattice {
    /// `delta = 2^-n_lat`.
    pub step: f64,
    /// Lattice time points per period.
    pub time_count: usize,
    /// Lattice frequency points across the Nyquist window.
    pub freq_count: usize,
    /// Time step in grid samples.
    pub time_stride: usize,
    /// Frequency step in grid frequency units.
    pub freq_stride: usize,
}

impl GaborLattice {
    pub fn new(grid: &Grid, n_lat: u32) -> Result<Self> {
        let step = 0.5f64.powi(n_lat as i32);
        if step > 0.5 {
            return Err(AmkError::Parameter(format!(
                "lattice density insufficient: delta = {step} > 1/2"
            )));
        }
        let time_stride = step / grid.dx();
        let freq_stride = step * grid.extent;
        let fits = |v: f64| (v - v.round()).abs() < 1e-9 && v.round() >= 1.0;
        if !fits(time_stride) || !fits(freq_stride) {
            return Err(AmkError::Parameter(format!(
                "lattice step {step} is not grid-admissible (time stride {time_stride}, freq stride {freq_stride})"
            )));
        }
        let time_stride = time_stride.round() as usize;
        let freq_stride = freq_stride.round() as usize;
        Ok(Self {
            step,
            time_count: grid.n / time_stride,
            freq_count: grid.n / freq_stride,
            time_stride,
            freq_stride,
        })
    }

    pub fn total(&self) -> usize {
        self.time_count * self.freq_count
    }

    /// Phase-space cell volume `delta^2` of the lattice; the quadrature
    /// weight that makes lattice `l^p` norms density-stable.
    pub fn cell(&self) -> f64 {
        self.step * self.step
    }

    /// Signed time label of a natural time index.
    fn signed_time(&self, a: usize) -> i64 {
        let m = self.time_count as i64;
        let a = a as i64;
        if a < m - m / 2 {
            a
        } else {
            a - m
        }
    }

    /// Signed frequency label of a natural frequency index.
    fn signed_freq(&self, b: usize) -> i64 {
        let m = self.freq_count as i64;
        let b = b as i64;
        if b < m - m / 2 {
            b
        } else {
            b - m
        }
    }

    /// The grid-admissible shift of lattice point `(a, b)` (natural indices).
    pub fn shift(&self, a: usize, b: usize) -> TimeFrequencyShift {
        TimeFrequencyShift {
            time_steps: (self.signed_time(a) * self.time_stride as i64),
            freq_steps: (self.signed_freq(b) * self.freq_stride as i64),
        }
    }
}

/// Inner products of `f` against all lattice shifts of a window:
/// `coeffs[a * freq_count + b] = <f, pi(lambda_(a,b)) w>`.
pub fn lattice_coeffs(f: &Signal, window: &Signal, lattice: &GaborLattice) -> Vec<C64> {
    let n = f.grid.n;
    let rows: Vec<Vec<C64>> = (0..lattice.time_count)
        .into_par_iter()
        .map(|a| {
            let x = a * lattice.time_stride;
            let h = Signal {
                grid: f.grid,
                values: (0..n)
                    .map(|t| f.values[t] * window.values[(t + n - x) % n].conj())
                    .collect(),
            };
            let sp = spectrum(&h);
            (0..lattice.freq_count)
                .map(|b| {
                    let j = lattice.signed_freq(b) * lattice.freq_stride as i64;
                    sp.coeffs[sp.grid.pos_of_freq([j, 0]).expect("lattice freq in window")]
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// `L^2`-normalized Gaussian window of the given width, centered at the
/// torus origin.
pub fn gaussian_window(grid: &Grid, width: f64) -> Signal {
    let mut g = Signal::from_fn(*grid, |x| {
        let u = if x[0] > grid.extent / 2.0 { x[0] - grid.extent } else { x[0] };
        C64::new((-std::f64::consts::PI * (u / width).powi(2)).exp(), 0.0)
    });
    let norm = g.l2_norm();
    for v in &mut g.values {
        *v /= norm;
    }
    g
}

/// Dense frame operator matrix `S = sum_lambda |pi(lambda) g><pi(lambda) g|`
/// as a quadrature kernel.
pub fn frame_operator(window: &Signal, lattice: &GaborLattice) -> Result<Kernel2D> {
    let grid = window.grid;
    let n = grid.n;
    let atoms: Vec<Signal> = (0..lattice.time_count)
        .flat_map(|a| (0..lattice.freq_count).map(move |b| (a, b)))
        .map(|(a, b)| tf_shift(window, lattice.shift(a, b)))
        .collect();
    let rows: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![C64::default(); n];
            for atom in &atoms {
                let gi = atom.values[i];
                for (j, r) in row.iter_mut().enumerate() {
                    *r += gi * atom.values[j].conj();
                }
            }
            row
        })
        .collect();
    let mut k = Kernel2D::zeros(grid)?;
    k.values = rows.into_iter().flatten().collect();
    Ok(k)
}

fn to_matrix(k: &Kernel2D) -> DMatrix<Complex<f64>> {
    let n = k.grid.n;
    let dx = k.grid.dx();
    DMatrix::from_fn(n, n, |i, j| k.values[i * n + j] * dx)
}

/// Extreme eigenvalues of a Hermitian positive matrix by power and
/// inverse-power iteration.
fn extreme_eigenvalues(m: &DMatrix<Complex<f64>>) -> Result<(f64, f64)> {
    let n = m.nrows();
    let start = DVector::from_fn(n, |i, _| {
        Complex::new(1.0 + (i as f64 * 0.7311).sin(), (i as f64 * 0.4159).cos())
    });
    let rayleigh = |v: &DVector<Complex<f64>>, mv: &DVector<Complex<f64>>| -> f64 {
        let num: Complex<f64> = v.dotc(mv);
        let den: f64 = v.norm_squared();
        num.re / den
    };
    let mut v = start.clone();
    let mut top = 0.0;
    for _ in 0..300 {
        let mv = m * &v;
        top = rayleigh(&v, &mv);
        let norm = mv.norm();
        if norm == 0.0 {
            return Ok((0.0, 0.0));
        }
        v = mv / Complex::new(norm, 0.0);
    }
    let lu = m.clone().lu();
    let mut w = start;
    let mut bottom = top;
    for _ in 0..300 {
        let Some(sol) = lu.solve(&w) else {
            return Ok((0.0, top));
        };
        bottom = rayleigh(&sol, &w);
        let norm = sol.norm();
        if norm == 0.0 {
            break;
        }
        w = sol / Complex::new(norm, 0.0);
    }
    Ok((bottom, top))
}

/// A lattice Gabor system with verified frame bounds and canonical dual.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    pub grid: Grid,
    pub window: Signal,
    pub lattice: GaborLattice,
    /// (A_fr, B_fr): extreme eigenvalues of the frame operator.
    pub frame_bounds: (f64, f64),
    pub dual: Signal,
}

impl GaborSystem {
    /// Build the system, verify the frame property, and invert for the
    /// canonical dual window.
    pub fn new(window: Signal, n_lat: u32) -> Result<Self> {
        let grid = window.grid;
        if grid.dim != 1 {
            return Err(AmkError::Parameter("gabor systems live on 1-d grids".into()));
        }
        let lattice = GaborLattice::new(&grid, n_lat)?;
        let s = frame_operator(&window, &lattice)?;
        let m = to_matrix(&s);
        let (a_fr, b_fr) = extreme_eigenvalues(&m)?;
        if a_fr < 1e-8 {
            return Err(AmkError::NotAFrame { min_eig: a_fr });
        }
        let rhs = DVector::from_iterator(grid.n, window.values.iter().copied());
        let dual_vec = m
            .lu()
            .solve(&rhs)
            .ok_or(AmkError::NotAFrame { min_eig: a_fr })?;
        let dual = Signal { grid, values: dual_vec.iter().copied().collect() };
        Ok(Self { grid, window, lattice, frame_bounds: (a_fr, b_fr), dual })
    }

    /// Frame expansion `sum_lambda <f, pi(lambda) gamma> pi(lambda) g`.
    pub fn reconstruct(&self, f: &Signal) -> Signal {
        let coeffs = lattice_coeffs(f, &self.dual, &self.lattice);
        self.synthesize(&coeffs)
    }

    /// `sum_lambda c_lambda pi(lambda) g`.
    pub fn synthesize(&self, coeffs: &[C64]) -> Signal {
        let mut acc = Signal::zeros(self.grid);
        for a in 0..self.lattice.time_count {
            for b in 0..self.lattice.freq_count {
                let c = coeffs[a * self.lattice.freq_count + b];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let atom = tf_shift(&self.window, self.lattice.shift(a, b));
                for (o, v) in acc.values.iter_mut().zip(&atom.values) {
                    *o += c * v;
                }
            }
        }
        acc
    }
}

/// Which window the Gabor coefficients are taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffWindow {
    Analysis,
    Dual,
}

/// `l^p` norm of the lattice Gabor coefficients of `f`, weighted by the
/// phase-space cell so the value is stable under lattice refinement (it is
/// the lattice quadrature of the continuum STFT `L^p` norm).
pub fn gabor_norm(f: &Signal, sys: &GaborSystem, p: f64, against: CoeffWindow) -> f64 {
    let window = match against {
        CoeffWindow::Analysis => &sys.window,
        CoeffWindow::Dual => &sys.dual,
    };
    let coeffs = lattice_coeffs(f, window, &sys.lattice);
    crate::grid::lp_aggregate(coeffs.iter().map(|c| c.norm()), p, sys.lattice.cell())
}

/// Configuration for the Gabor-route kernel certificates.
#[derive(Debug, Clone, Serialize)]
pub struct GaborCheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub sandwich: f64,
    pub decay_threshold: f64,
    pub plateau_threshold: f64,
}

impl Default for GaborCheckConfig {
    fn default() -> Self {
        Self { trials: 16, seed: 0x9AB0, sandwich: 10.0, decay_threshold: 0.1, plateau_threshold: 0.5 }
    }
}

/// Random signal with Gaussian spectrum masked well inside Nyquist.
fn random_margin_signal(grid: &Grid, rng: &mut impl Rng) -> Signal {
    let mut s = Spectrum::zeros(*grid);
    let cut = 0.75 * grid.nyquist();
    for pos in 0..grid.total() {
        if grid.freq_value(pos)[0].abs() <= cut {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..TAU);
            let r = (-2.0 * u1.ln()).sqrt();
            s.coeffs[pos] = C64::new(r * u2.cos(), r * u2.sin());
        }
    }
    inverse_spectrum(&s)
}

/// The doubled-window STFT of a kernel at the certificate's argument
/// pattern: `V_(g (x) conj g) K (mu1, lambda1, mu2, -lambda2)` for all
/// lattice `mu`, one input point `lambda` at a time.
///
/// Returns, for each `(lambda1, lambda2)` (natural indices), the full map
/// over `mu` in the same layout as [`lattice_coeffs`]. Computed directly
/// from the kernel samples; never applies the operator.
pub fn kernel_stft_maps(
    kernel: &Kernel2D,
    window: &Signal,
    lattice: &GaborLattice,
) -> Vec<Vec<C64>> {
    let grid = kernel.grid;
    let n = grid.n;
    let maps: Vec<Vec<Vec<C64>>> = (0..lattice.time_count)
        .into_par_iter()
        .map(|a_in| {
            let x_in = a_in * lattice.time_stride;
            // W(u, v) = K(u, v) g(v - lambda1)
            // inner transform over v at e = -lambda2: full row DFTs
            let mut w2 = vec![C64::default(); n * n];
            for u in 0..n {
                let row: Vec<C64> = (0..n)
                    .map(|v| kernel.values[u * n + v] * window.values[(v + n - x_in) % n])
                    .collect();
                let sp = spectrum(&Signal { grid, values: row });
                for (t, c) in sp.coeffs.iter().enumerate() {
                    w2[u * n + t] = *c;
                }
            }
            (0..lattice.freq_count)
                .map(|b_in| {
                    // e = -lambda2: pick the spectrum at the negated frequency,
                    // wrapped into the signed window (discrete frequencies alias
                    // exactly, so +n/2 is the same exponential as -n/2)
                    let half = n as i64 / 2;
                    let j = -lattice.signed_freq(b_in) * lattice.freq_stride as i64;
                    let j = (j + half).rem_euclid(n as i64) - half;
                    let col = grid.pos_of_freq([j, 0]).expect("wrapped freq in window");
                    let slice = Signal {
                        grid,
                        values: (0..n).map(|u| w2[u * n + col]).collect(),
                    };
                    lattice_coeffs(&slice, window, lattice)
                })
                .collect()
        })
        .collect();
    maps.into_iter().flatten().collect()
}

fn sandwich_check(report: &mut Report, n1: f64, n2: f64, sandwich: f64) {
    if n1 == 0.0 && n2 == 0.0 {
        report.check(Check::flag("all_quantities_zero", true));
    } else {
        let ratio = if n2 == 0.0 { f64::INFINITY } else { n1 / n2 };
        report.check(Check::in_band("ratio_empirical_over_kernel_stft", ratio, 1.0 / sandwich, sandwich));
    }
}

/// Boundedness certificate for `A: M^p -> M^q` on the Gabor route:
/// empirical norm over Gabor atoms and random signals against the kernel
/// STFT functional `sup_lambda || V_(g(x)conj g) K (mu1,lambda1,mu2,-lambda2) ||_(l^q_mu)`.
pub fn gabor_kernel_bound(
    kernel: &Kernel2D,
    sys: &GaborSystem,
    p: f64,
    q: f64,
    cfg: &GaborCheckConfig,
) -> Result<Report> {
    if !(p > 0.0 && q > 0.0) || p > q.min(1.0) {
        return Err(AmkError::Parameter(format!(
            "kernel certificate needs 0 < p <= min(q,1), got p={p} q={q}"
        )));
    }
    if kernel.grid != sys.grid {
        return Err(AmkError::GridMismatch("gabor_kernel_bound".into()));
    }

    // N2 from the kernel STFT alone (cell-weighted l^q over mu)
    let maps = kernel_stft_maps(kernel, &sys.window, &sys.lattice);
    let n2 = maps
        .iter()
        .map(|map| crate::grid::lp_aggregate(map.iter().map(|c| c.norm()), q, sys.lattice.cell()))
        .fold(0.0f64, f64::max);

    // N1 empirically over atoms and random witnesses
    let ratio_of = |f: &Signal| -> f64 {
        let denom = gabor_norm(f, sys, p, CoeffWindow::Analysis);
        if denom == 0.0 {
            return 0.0;
        }
        let image = apply_kernel(kernel, f).expect("grids match");
        gabor_norm(&image, sys, q, CoeffWindow::Analysis) / denom
    };
    let lattice = &sys.lattice;
    let atoms: Vec<Signal> = (0..lattice.time_count)
        .flat_map(|a| (0..lattice.freq_count).map(move |b| (a, b)))
        .map(|(a, b)| tf_shift(&sys.window, lattice.shift(a, b)))
        .collect();
    let n1_atoms = atoms.par_iter().map(ratio_of).reduce(|| 0.0, f64::max);
    let mut rng = crate::fixtures::rng(cfg.seed);
    let witnesses: Vec<Signal> =
        (0..cfg.trials).map(|_| random_margin_signal(&kernel.grid, &mut rng)).collect();
    let n1 = witnesses
        .par_iter()
        .map(ratio_of)
        .reduce(|| 0.0, f64::max)
        .max(n1_atoms);

    let mut report = Report::new("gabor-kernel");
    report.config = serde_json::json!({
        "p": p, "q": q, "grid": kernel.grid, "lattice": sys.lattice, "config": cfg,
        "frame_bounds": sys.frame_bounds,
    });
    report.metric("empirical_norm", n1);
    report.metric("kernel_stft_bound", n2);
    sandwich_check(&mut report, n1, n2, cfg.sandwich);
    Ok(report)
}

/// Compactness diagnostic on the Gabor route: tails of the atom-image
/// coefficient maps over lattice boxes (frequency boxes absolute, time
/// boxes centered on the input atom's time slot).
pub fn gabor_compactness(
    kernel: &Kernel2D,
    sys: &GaborSystem,
    p: f64,
    q: f64,
    cfg: &GaborCheckConfig,
    levels: &[u32],
) -> Result<Report> {
    if !(p > 0.0 && q > 0.0) || p > q.min(1.0) {
        return Err(AmkError::Parameter(format!(
            "compactness needs 0 < p <= min(q,1), got p={p} q={q}"
        )));
    }
    if q.is_infinite() {
        return Err(AmkError::Parameter("compactness needs q < inf".into()));
    }
    let mut levels: Vec<u32> = levels.to_vec();
    if !levels.contains(&0) {
        levels.push(0);
    }
    levels.sort_unstable();
    levels.dedup();

    let lattice = &sys.lattice;
    let mt = lattice.time_count as i64;
    let inputs: Vec<(usize, usize)> = (0..lattice.time_count)
        .flat_map(|a| (0..lattice.freq_count).map(move |b| (a, b)))
        .collect();
    let per_atom: Vec<Vec<f64>> = inputs
        .par_iter()
        .map(|&(a_in, b_in)| {
            let atom = tf_shift(&sys.window, lattice.shift(a_in, b_in));
            let image = apply_kernel(kernel, &atom).expect("grids match");
            let map = lattice_coeffs(&image, &sys.window, lattice);
            let center = lattice.signed_time(a_in);
            levels
                .iter()
                .map(|&lvl| {
                    let lvl = lvl as i64;
                    let tail = map.iter().enumerate().filter(|(idx, _)| {
                        let a = idx / lattice.freq_count;
                        let b = idx % lattice.freq_count;
                        let mut dt = (lattice.signed_time(a) - center).rem_euclid(mt);
                        if dt >= mt - mt / 2 {
                            dt -= mt;
                        }
                        dt.abs() > lvl || lattice.signed_freq(b).abs() > lvl
                    });
                    crate::grid::lp_aggregate(tail.map(|(_, c)| c.norm()), q, lattice.cell())
                })
                .collect()
        })
        .collect();

    let values: Vec<f64> = (0..levels.len())
        .map(|i| per_atom.iter().map(|t| t[i]).fold(0.0f64, f64::max))
        .collect();
    let profile = TailProfile { levels: levels.clone(), values: values.clone(), total: values[0] };

    // verdict at the largest lattice-resolved level (half the frequency
    // range; larger boxes swallow every coefficient map vacuously)
    let resolvable = (lattice.freq_count as u32 / 2).saturating_sub(1).max(1);
    let verdict_idx = levels
        .iter()
        .rposition(|&l| l <= resolvable && l > 0)
        .unwrap_or(levels.len() - 1);
    let verdict_ratio = if profile.total == 0.0 {
        0.0
    } else {
        profile.values[verdict_idx] / profile.total
    };
    let verdict = if profile.total == 0.0 || verdict_ratio <= cfg.decay_threshold {
        "compact-consistent"
    } else if verdict_ratio >= cfg.plateau_threshold {
        "not compact-consistent"
    } else {
        "indeterminate"
    };

    let mut report = Report::new("gabor-compactness");
    report.config = serde_json::json!({
        "p": p, "q": q, "grid": kernel.grid, "lattice": sys.lattice, "config": cfg,
        "levels": levels, "resolvable_level": levels[verdict_idx],
    });
    report.metric("tail_total", profile.total);
    report.metric("final_ratio", verdict_ratio);
    report.verdict = Some(verdict.into());
    report.extra = serde_json::json!({ "profile": profile });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::relative_l2_error;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn grid() -> Grid {
        Grid::new(1, 16.0, 128).unwrap()
    }

    fn system() -> GaborSystem {
        GaborSystem::new(gaussian_window(&grid(), 1.0), 1).unwrap()
    }

    #[test]
    fn stft_at_origin_is_window_energy() {
        let g = gaussian_window(&grid(), 1.0);
        let v = stft(&g, &g).unwrap();
        let origin = grid().pos_of_freq([0, 0]).unwrap();
        let want = g.l2_norm().powi(2);
        assert!((v[origin] - C64::new(want, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn stft_of_zero_vanishes_and_zero_window_errors() {
        let g = gaussian_window(&grid(), 1.0);
        let z = Signal::zeros(grid());
        let v = stft(&z, &g).unwrap();
        assert!(v.iter().all(|c| c.norm() == 0.0));
        assert!(stft(&g, &z).is_err());
    }

    #[test]
    fn moyal_identity() {
        let mut rng = StdRng::seed_from_u64(31);
        let g = gaussian_window(&grid(), 1.0);
        let f = random_margin_signal(&grid(), &mut rng);
        let v = stft(&f, &g).unwrap();
        let lhs = stft_lp_norm(&grid(), &v, 2.0);
        let rhs = f.l2_norm() * g.l2_norm();
        assert!((lhs - rhs).abs() / rhs < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn lattice_admissibility() {
        let g = grid();
        assert!(GaborLattice::new(&g, 0).is_err()); // delta = 1 too sparse
        let lat = GaborLattice::new(&g, 1).unwrap();
        assert_eq!(lat.time_count, 32);
        assert_eq!(lat.freq_count, 16);
        assert_eq!(lat.time_stride, 4);
        assert_eq!(lat.freq_stride, 8);
    }

    #[test]
    fn frame_operator_is_hermitian_and_commutes_with_lattice_shifts() {
        let sys = system();
        let s = frame_operator(&sys.window, &sys.lattice).unwrap();
        let n = s.grid.n;
        let mut herm: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                herm = herm.max((s.values[i * n + j] - s.values[j * n + i].conj()).norm());
                scale = scale.max(s.values[i * n + j].norm());
            }
        }
        assert!(herm <= 1e-10 * scale);

        // commutation with a lattice shift, on a test vector
        let mut rng = StdRng::seed_from_u64(32);
        let f = random_margin_signal(&grid(), &mut rng);
        let shift = sys.lattice.shift(3, 5);
        let a = tf_shift(&apply_kernel(&s, &f).unwrap(), shift);
        let b = apply_kernel(&s, &tf_shift(&f, shift)).unwrap();
        assert!(relative_l2_error(&a, &b) < 1e-8);
    }

    #[test]
    fn gaussian_at_half_density_is_a_frame_with_modest_condition() {
        let sys = system();
        let (a, b) = sys.frame_bounds;
        assert!(a > 0.0 && b >= a);
        assert!(b / a < 100.0, "condition {}", b / a);
    }

    #[test]
    fn critical_density_is_rejected() {
        // delta = 1 is both too sparse by the precondition and numerically
        // singular; the lattice constructor refuses it
        let err = GaborSystem::new(gaussian_window(&grid(), 1.0), 0).unwrap_err();
        assert!(matches!(err, AmkError::Parameter(_)));
    }

    #[test]
    fn frame_reconstruction_and_dual_shift_invariance() {
        let sys = system();
        let mut rng = StdRng::seed_from_u64(33);
        for _ in 0..5 {
            let f = random_margin_signal(&grid(), &mut rng);
            let r = sys.reconstruct(&f);
            let err = relative_l2_error(&r, &f);
            assert!(err < 1e-8, "reconstruction err {err}");
        }

        // dual of the shifted window is the shifted dual
        let shift = sys.lattice.shift(2, 3);
        let shifted = GaborSystem::new(tf_shift(&sys.window, shift), 1).unwrap();
        let want = tf_shift(&sys.dual, shift);
        assert!(relative_l2_error(&shifted.dual, &want) < 1e-8);
    }

    #[test]
    fn dense_lattice_gives_near_tight_frame() {
        let sys = GaborSystem::new(gaussian_window(&grid(), 1.0), 2).unwrap();
        let (a, b) = sys.frame_bounds;
        assert!(b / a < 1.2, "condition {}", b / a);
        // gamma is nearly parallel to g
        let ip = sys.dual.inner(&sys.window).unwrap();
        let cos = ip.norm() / (sys.dual.l2_norm() * sys.window.l2_norm());
        assert!(cos >= 0.99, "cosine {cos}");
    }

    #[test]
    fn kernel_stft_matches_operator_stft_identity() {
        // V_g(A pi(z) g)(z') = V_(g x conj g) K (z1', z1, z2', -z2) on a
        // rank-one kernel
        let g = grid();
        let sys = system();
        let mut rng = StdRng::seed_from_u64(34);
        let u = random_margin_signal(&g, &mut rng);
        let v = random_margin_signal(&g, &mut rng);
        let n = g.n;
        let mut kernel = Kernel2D::zeros(g).unwrap();
        for i in 0..n {
            for j in 0..n {
                kernel.values[i * n + j] = u.values[i] * v.values[j].conj();
            }
        }
        let maps = kernel_stft_maps(&kernel, &sys.window, &sys.lattice);
        for (a_in, b_in) in [(0usize, 0usize), (3, 7), (17, 2)] {
            let atom = tf_shift(&sys.window, sys.lattice.shift(a_in, b_in));
            let image = apply_kernel(&kernel, &atom).unwrap();
            let want = lattice_coeffs(&image, &sys.window, &sys.lattice);
            let got = &maps[a_in * sys.lattice.freq_count + b_in];
            let err: f64 = got
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / want.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-10, "({a_in},{b_in}): err {err}");
        }
    }

    #[test]
    fn zero_kernel_certificates() {
        let sys = system();
        let k = Kernel2D::zeros(grid()).unwrap();
        let cfg = GaborCheckConfig { trials: 2, ..Default::default() };
        let rep = gabor_kernel_bound(&k, &sys, 1.0, 1.0, &cfg).unwrap();
        assert!(rep.passed());
        assert_eq!(rep.metric_value("empirical_norm"), Some(0.0));
        let rep = gabor_compactness(&k, &sys, 1.0, 1.0, &cfg, &[1, 2]).unwrap();
        assert_eq!(rep.verdict.as_deref(), Some("compact-consistent"));
    }
}

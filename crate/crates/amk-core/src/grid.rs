//! Periodic sampled functions and discrete spectral transforms.
//!
//! Functions live on the torus `[0, L)^d` sampled at `n` points per axis
//! (`d` = 1 or 2, `n` even). The Fourier convention is calibrated to the
//! continuum transform `f^(xi) = integral f(x) exp(-2 pi i x.xi) dx`:
//! spectral coefficients carry the quadrature weight `dx^d`, so for signals
//! that are band-limited to the Nyquist window (or numerically negligible at
//! the torus seam) they agree with the continuous transform at the grid
//! frequencies `xi_j = j / L`, `j in {-n/2, ..., n/2 - 1}` per axis.
//!
//! Spectra are stored with frequency indices in signed ascending order
//! (`-n/2 ... n/2-1`, row-major over axes), which fixes the serialization.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{AmkError, Result};

pub type C64 = Complex64;

const TAU: f64 = std::f64::consts::TAU;

/// Uniform periodic grid on `[0, extent)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub extent: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, extent: f64, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(AmkError::Parameter(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(extent > 0.0) {
            return Err(AmkError::Parameter(format!("extent must be > 0, got {extent}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(AmkError::Parameter(format!(
                "n must be even and >= 8, got {n}"
            )));
        }
        Ok(Self { dim, extent, n })
    }

    /// Sample spacing `L / n`.
    pub fn dx(&self) -> f64 {
        self.extent / self.n as f64
    }

    /// Frequency spacing `1 / L`.
    pub fn dxi(&self) -> f64 {
        1.0 / self.extent
    }

    /// Half-width of the Nyquist window per axis: `n / (2L)`.
    pub fn nyquist(&self) -> f64 {
        self.n as f64 / (2.0 * self.extent)
    }

    /// Total number of grid points, `n^dim`.
    pub fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Quadrature cell volume `dx^dim`.
    pub fn cell(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Frequency cell volume `dxi^dim`.
    pub fn freq_cell(&self) -> f64 {
        self.dxi().powi(self.dim as i32)
    }

    /// Decompose a flat row-major index into per-axis positions.
    #[inline]
    pub fn axes_of(&self, flat: usize) -> [usize; 2] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / self.n, flat % self.n],
        }
    }

    /// Flat row-major index from per-axis positions.
    #[inline]
    pub fn flat_of(&self, axes: [usize; 2]) -> usize {
        match self.dim {
            1 => axes[0],
            _ => axes[0] * self.n + axes[1],
        }
    }

    /// Signed frequency integers of a flat spectral position.
    #[inline]
    pub fn freq_index(&self, flat: usize) -> [i64; 2] {
        let ax = self.axes_of(flat);
        let half = (self.n / 2) as i64;
        [ax[0] as i64 - half, if self.dim == 2 { ax[1] as i64 - half } else { 0 }]
    }

    /// Physical frequency vector of a flat spectral position.
    #[inline]
    pub fn freq_value(&self, flat: usize) -> [f64; 2] {
        let j = self.freq_index(flat);
        [j[0] as f64 * self.dxi(), j[1] as f64 * self.dxi()]
    }

    /// Physical coordinates of a flat sample position.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let ax = self.axes_of(flat);
        [ax[0] as f64 * self.dx(), ax[1] as f64 * self.dx()]
    }

    /// Flat spectral position of signed frequency integers, if inside the window.
    pub fn pos_of_freq(&self, j: [i64; 2]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let ok = |v: i64| v >= -half && v < half;
        if !ok(j[0]) || (self.dim == 2 && !ok(j[1])) {
            return None;
        }
        let a0 = (j[0] + half) as usize;
        let a1 = if self.dim == 2 { (j[1] + half) as usize } else { 0 };
        Some(self.flat_of([a0, a1]))
    }

    fn check_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(AmkError::GridMismatch(what.to_string()));
        }
        Ok(())
    }
}

/// Complex samples of a function on the grid, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub grid: Grid,
    pub values: Vec<C64>,
}

/// Spectral coefficients in signed frequency order.
///
/// `coeffs[j] = dx^dim * sum_m values[m] exp(-2 pi i x_m . xi_j)`, so they
/// approximate the continuous transform at `xi_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: Grid,
    pub coeffs: Vec<C64>,
}

impl Signal {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![C64::default(); grid.total()] }
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> C64) -> Self {
        let values = (0..grid.total())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..grid.dim])
            })
            .collect();
        Self { grid, values }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.grid.check_same(&other.grid, "signal add")?;
        Ok(Signal {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.grid.check_same(&other.grid, "signal sub")?;
        Ok(Signal {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Discrete inner product `dx^dim * sum f conj(g)`.
    pub fn inner(&self, other: &Signal) -> Result<C64> {
        self.grid.check_same(&other.grid, "inner product")?;
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell())
    }

    pub fn l2_norm(&self) -> f64 {
        lp_norm(self, 2.0)
    }
}

impl Spectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, coeffs: vec![C64::default(); grid.total()] }
    }

    /// Evaluate the band-limited interpolant at an arbitrary point:
    /// `f(x) = dxi^dim * sum_j coeffs[j] exp(2 pi i x . xi_j)`.
    pub fn eval_at(&self, x: &[f64]) -> C64 {
        let mut acc = C64::default();
        for (flat, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let xi = self.grid.freq_value(flat);
            let phase = TAU * (x[0] * xi[0] + if self.grid.dim == 2 { x[1] * xi[1] } else { 0.0 });
            acc += c * C64::from_polar(1.0, phase);
        }
        acc * self.grid.freq_cell()
    }

    /// Relative spectral mass outside a predicate on signed frequency indices.
    pub fn leakage_outside(&self, mut inside: impl FnMut([i64; 2]) -> bool) -> f64 {
        let mut out = 0.0;
        let mut tot = 0.0;
        for (flat, c) in self.coeffs.iter().enumerate() {
            let m = c.norm_sqr();
            tot += m;
            if !inside(self.grid.freq_index(flat)) {
                out += m;
            }
        }
        if tot == 0.0 {
            0.0
        } else {
            (out / tot).sqrt()
        }
    }
}

/// Swap axis halves, converting between natural FFT bin order and signed
/// frequency order (an involution for even `n`).
fn swap_halves(grid: &Grid, data: &[C64]) -> Vec<C64> {
    let n = grid.n;
    let mut out = vec![C64::default(); data.len()];
    match grid.dim {
        1 => {
            for t in 0..n {
                out[t] = data[(t + n / 2) % n];
            }
        }
        _ => {
            for t0 in 0..n {
                let s0 = (t0 + n / 2) % n;
                for t1 in 0..n {
                    out[t0 * n + t1] = data[s0 * n + (t1 + n / 2) % n];
                }
            }
        }
    }
    out
}

fn fft_nd(grid: &Grid, data: &mut [C64], forward: bool) {
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(grid.n)
    } else {
        planner.plan_fft_inverse(grid.n)
    };
    match grid.dim {
        1 => fft.process(data),
        _ => {
            let n = grid.n;
            // rows
            for r in 0..n {
                fft.process(&mut data[r * n..(r + 1) * n]);
            }
            // columns
            let mut col = vec![C64::default(); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
    }
}

/// Quadrature Fourier transform of a signal.
pub fn spectrum(f: &Signal) -> Spectrum {
    let mut data = f.values.clone();
    fft_nd(&f.grid, &mut data, true);
    let w = f.grid.cell();
    for v in &mut data {
        *v *= w;
    }
    Spectrum { grid: f.grid, coeffs: swap_halves(&f.grid, &data) }
}

/// Inverse transform; `inverse_spectrum(spectrum(f)) == f` up to roundoff.
pub fn inverse_spectrum(s: &Spectrum) -> Signal {
    let mut data = swap_halves(&s.grid, &s.coeffs);
    fft_nd(&s.grid, &mut data, false);
    let w = 1.0 / s.grid.extent.powi(s.grid.dim as i32);
    for v in &mut data {
        *v *= w;
    }
    Signal { grid: s.grid, values: data }
}

/// Discrete `L^p` norm: `(dx^dim sum |f|^p)^(1/p)`, sup norm for p = inf.
pub fn lp_norm(f: &Signal, p: f64) -> f64 {
    lp_aggregate(f.values.iter().map(|v| v.norm()), p, f.grid.cell())
}

/// `l^p` norm of a finite complex family (no quadrature weight).
pub fn lp_seq_norm(a: &[C64], p: f64) -> f64 {
    lp_aggregate(a.iter().map(|v| v.norm()), p, 1.0)
}

/// Weighted `l^p` aggregation of nonnegative magnitudes:
/// `(weight * sum m^p)^(1/p)` for finite p, `max m` for p = inf.
pub fn lp_aggregate(mags: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    assert!(p > 0.0, "p must be in (0, inf], got {p}");
    if p.is_infinite() {
        mags.fold(0.0_f64, f64::max)
    } else if (p - 1.0).abs() < 1e-15 {
        let s: f64 = mags.sum();
        s * weight
    } else if (p - 2.0).abs() < 1e-15 {
        let s: f64 = mags.map(|m| m * m).sum();
        (s * weight).sqrt()
    } else {
        let s: f64 = mags.map(|m| m.powf(p)).sum();
        (s * weight).powf(1.0 / p)
    }
}

/// Conjugate exponent: `p' = p / (p - 1)` for `p in [1, inf]`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if p.is_infinite() {
        Ok(1.0)
    } else if (p - 1.0).abs() < 1e-12 {
        Ok(f64::INFINITY)
    } else if p > 1.0 {
        Ok(p / (p - 1.0))
    } else {
        Err(AmkError::Parameter(format!("conjugate exponent needs p >= 1, got {p}")))
    }
}

/// Shift `f(. - y)` implemented by phase multiplication in the spectrum
/// (exact for band-limited data; `y` may be off-grid).
pub fn translate(f: &Signal, y: &[f64]) -> Signal {
    let mut s = spectrum(f);
    apply_translation_phase(&mut s, y);
    inverse_spectrum(&s)
}

/// Multiply a spectrum by the translation phase `exp(-2 pi i y . xi)`.
pub fn apply_translation_phase(s: &mut Spectrum, y: &[f64]) {
    let grid = s.grid;
    for (flat, c) in s.coeffs.iter_mut().enumerate() {
        let xi = grid.freq_value(flat);
        let phase = -TAU * (y[0] * xi[0] + if grid.dim == 2 { y[1] * xi[1] } else { 0.0 });
        *c *= C64::from_polar(1.0, phase);
    }
}

/// Relative L^2 distance between two signals; zero-zero counts as exact.
pub fn relative_l2_error(got: &Signal, want: &Signal) -> f64 {
    let denom = want.l2_norm();
    let diff = got.sub(want).expect("grids must match").l2_norm();
    if denom == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / denom
    }
}

#[derive(Serialize, Deserialize)]
struct ArrayJson {
    dim: usize,
    extent: f64,
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

fn to_array_json(grid: &Grid, data: &[C64]) -> serde_json::Value {
    let j = ArrayJson {
        dim: grid.dim,
        extent: grid.extent,
        n: grid.n,
        re: data.iter().map(|c| c.re).collect(),
        im: data.iter().map(|c| c.im).collect(),
    };
    serde_json::to_value(j).expect("array json")
}

fn from_array_json(v: &serde_json::Value) -> Result<(Grid, Vec<C64>)> {
    let j: ArrayJson = serde_json::from_value(v.clone())?;
    let grid = Grid::new(j.dim, j.extent, j.n)?;
    if j.re.len() != grid.total() || j.im.len() != grid.total() {
        return Err(AmkError::Parameter(format!(
            "array length {} does not match n^dim = {}",
            j.re.len(),
            grid.total()
        )));
    }
    let data = j.re.iter().zip(&j.im).map(|(&re, &im)| C64::new(re, im)).collect();
    Ok((grid, data))
}

impl Signal {
    pub fn to_json(&self) -> serde_json::Value {
        to_array_json(&self.grid, &self.values)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let (grid, values) = from_array_json(v)?;
        Ok(Self { grid, values })
    }
}

impl Spectrum {
    pub fn to_json(&self) -> serde_json::Value {
        to_array_json(&self.grid, &self.coeffs)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let (grid, coeffs) = from_array_json(v)?;
        Ok(Self { grid, coeffs })
    }
}

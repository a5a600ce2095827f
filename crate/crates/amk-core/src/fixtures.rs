//! Deterministic fixture signals and kernels.
//!
//! Random data is always drawn from a seeded ChaCha stream, so identical
//! seeds give identical fixtures byte for byte. Random band-limited signals
//! are built by masking complex Gaussian spectral coefficients to the
//! retained-band core and inverse transforming, which makes them exactly
//! band-limited by construction. Spatially concentrated fixtures are
//! centered at the torus origin (wrapping the seam) so that signed lattice
//! labels see their decay.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AmkError, Result};
use crate::grid::{inverse_spectrum, spectrum, Grid, Signal, Spectrum, C64};
use crate::kernel::Kernel2D;
use crate::partition::{AlphaPartition, AtomFamily};

/// The deterministic RNG used for every fixture.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-2.0 * u1.ln()).sqrt();
    C64::new(r * u2.cos(), r * u2.sin())
}

/// Signed distance to the torus origin along one axis.
fn centered(x: f64, extent: f64) -> f64 {
    if x > extent / 2.0 {
        x - extent
    } else {
        x
    }
}

/// Complex Gaussian spectral coefficients masked to the retained-band core
/// (the region the retained bands reproduce exactly; use these wherever an
/// expansion identity is being tested).
pub fn random_retained_band_signal(
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    rng: &mut impl Rng,
) -> Signal {
    let grid = partition.grid;
    let mask = atoms.retained_core_mask(partition);
    let mut s = Spectrum::zeros(grid);
    for (pos, keep) in mask.iter().enumerate() {
        if *keep {
            s.coeffs[pos] = complex_gaussian(rng);
        }
    }
    inverse_spectrum(&s)
}

/// Complex Gaussian spectral coefficients on the frequencies inside a ball
/// (1-d): exactly band-limited to `B(center, radius)`.
pub fn random_ball_signal(grid: &Grid, center: f64, radius: f64, rng: &mut impl Rng) -> Signal {
    let mut s = Spectrum::zeros(*grid);
    for pos in 0..grid.total() {
        let xi = grid.freq_value(pos)[0];
        if (xi - center).abs() < radius {
            s.coeffs[pos] = complex_gaussian(rng);
        }
    }
    inverse_spectrum(&s)
}

/// Grid mask covering the union of the retained bands' supports (wider than
/// the core; signals here are band-limited but not exactly reproducible).
pub fn retained_union_mask(partition: &AlphaPartition, atoms: &AtomFamily) -> Vec<bool> {
    let mut mask = vec![false; partition.grid.total()];
    for atom in &atoms.atoms {
        let band = partition.band(&atom.geometry.k).expect("retained band is active");
        for &pos in &band.support {
            mask[pos as usize] = true;
        }
    }
    mask
}

/// Complex Gaussian spectral coefficients over the union of retained band
/// supports; the mask used for operator-norm witnesses and kernel fixtures,
/// which stays roomy even where the exact core pinches off.
pub fn random_union_band_signal(
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    rng: &mut impl Rng,
) -> Signal {
    let grid = partition.grid;
    let mask = retained_union_mask(partition, atoms);
    let mut s = Spectrum::zeros(grid);
    for (pos, keep) in mask.iter().enumerate() {
        if *keep {
            s.coeffs[pos] = complex_gaussian(rng);
        }
    }
    inverse_spectrum(&s)
}

/// A Gaussian envelope of the given width centered at the torus origin,
/// modulated to the given frequency, then masked to the union of retained
/// band supports so it is exactly band-limited.
pub fn gaussian_core_signal(
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    width: f64,
    freq: f64,
) -> Signal {
    let grid = partition.grid;
    // snap the modulation to a grid frequency so it is exactly periodic;
    // an off-grid modulation would jump at the seam, right under the peak
    let freq = (freq * grid.extent).round() / grid.extent;
    let raw = Signal::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|&v| centered(v, grid.extent).powi(2)).sum();
        C64::from_polar(
            (-r2 / (2.0 * width * width)).exp(),
            std::f64::consts::TAU * freq * x[0],
        )
    });
    let mask = retained_union_mask(partition, atoms);
    let mut s = spectrum(&raw);
    for (pos, keep) in mask.iter().enumerate() {
        if !*keep {
            s.coeffs[pos] = C64::default();
        }
    }
    inverse_spectrum(&s)
}

/// Built-in kernel fixture kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    Zero,
    Identity,
    Rank1,
    Convolution,
    RandomBand,
}

impl std::str::FromStr for FixtureKind {
    type Err = AmkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "identity" => Ok(Self::Identity),
            "rank1" => Ok(Self::Rank1),
            "convolution" => Ok(Self::Convolution),
            "random-band" => Ok(Self::RandomBand),
            other => Err(AmkError::Parameter(format!("unknown fixture kind: {other}"))),
        }
    }
}

/// Discrete delta kernel `K[i][j] = delta_ij / dx`, the quadrature identity.
pub fn identity_kernel(grid: &Grid) -> Result<Kernel2D> {
    let mut k = Kernel2D::zeros(*grid)?;
    let inv_dx = 1.0 / grid.dx();
    for i in 0..grid.n {
        k.values[i * grid.n + i] = C64::new(inv_dx, 0.0);
    }
    Ok(k)
}

/// Rank-one kernel `K = u (x) conj(v)` from two concentrated Gaussian
/// factors (band-limited to the retained union), slightly jittered by the
/// seed. The widths keep the factors well inside the smallest position box
/// the compactness tails resolve.
pub fn rank_one_kernel(
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    seed: u64,
) -> Result<Kernel2D> {
    let grid = partition.grid;
    let mut r = rng(seed ^ 0xA70);
    let fu: f64 = r.gen_range(-0.5..0.5);
    let fv: f64 = r.gen_range(-0.5..0.5);
    let u = gaussian_core_signal(partition, atoms, 0.2, fu);
    let v = gaussian_core_signal(partition, atoms, 0.25, fv);
    let n = grid.n;
    let mut k = Kernel2D::zeros(grid)?;
    for i in 0..n {
        for j in 0..n {
            k.values[i * n + j] = u.values[i] * v.values[j].conj();
        }
    }
    Ok(k)
}

/// Convolution kernel `K(x, y) = h(x - y)` with a smooth, rapidly decaying
/// symbol `h^(xi) = exp(-(xi/width)^2)`: low frequency bands dominate, the
/// spatial profile is concentrated.
pub fn convolution_kernel(grid: &Grid, symbol_width: f64) -> Result<Kernel2D> {
    let mut s = Spectrum::zeros(*grid);
    for pos in 0..grid.total() {
        let xi = grid.freq_value(pos)[0];
        s.coeffs[pos] = C64::new((-(xi / symbol_width).powi(2)).exp(), 0.0);
    }
    let h = inverse_spectrum(&s);
    let n = grid.n;
    let mut k = Kernel2D::zeros(*grid)?;
    for i in 0..n {
        for j in 0..n {
            k.values[i * n + j] = h.values[(i + n - j) % n];
        }
    }
    Ok(k)
}

/// Kernel with complex Gaussian spectrum masked to the retained union on
/// both frequency axes.
pub fn random_band_kernel(
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    seed: u64,
) -> Result<Kernel2D> {
    let grid = partition.grid;
    let mask = retained_union_mask(partition, atoms);
    let mut r = rng(seed ^ 0xBA2D);
    let k0 = Kernel2D::zeros(grid)?;
    let product = k0.product_grid();
    let mut s = Spectrum::zeros(product);
    let n = grid.n;
    for tx in 0..n {
        for ty in 0..n {
            if mask[tx] && mask[ty] {
                s.coeffs[tx * n + ty] = complex_gaussian(&mut r);
            }
        }
    }
    let sig = inverse_spectrum(&s);
    Ok(Kernel2D { grid, values: sig.values })
}

/// Build a fixture kernel by kind; `seed` feeds the random kinds.
pub fn fixture_kernel(
    kind: FixtureKind,
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    seed: u64,
) -> Result<Kernel2D> {
    let grid = partition.grid;
    match kind {
        FixtureKind::Zero => Kernel2D::zeros(grid),
        FixtureKind::Identity => identity_kernel(&grid),
        FixtureKind::Rank1 => rank_one_kernel(partition, atoms, seed),
        FixtureKind::Convolution => convolution_kernel(&grid, 1.0),
        FixtureKind::RandomBand => random_band_kernel(partition, atoms, seed),
    }
}

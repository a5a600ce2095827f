//! Band decompositions, alpha-modulation norms, and discrete atom expansions.
//!
//! The frequency decomposition operators are Fourier multipliers by the
//! partition functions: `band_project(f, k) = F^-1 (eta_k F f)`. The
//! alpha-modulation norm aggregates weighted `L^p` norms of the band
//! projections over bands in `l^q`.
//!
//! The atom expansion samples each band projection on a per-band lattice of
//! spacing `beta_k ~ lambda / (2 r C <k>^(a/(1-a)))` and reconstructs with
//! translated atoms `T_(beta_k k') phi_k^vee`. On the torus the lattice is
//! snapped to an integer number of points per period (`beta_k = L / m_k`,
//! never coarser than nominal), which makes both the sampling and the
//! reconstruction exact band-limited identities instead of O(beta/L)
//! approximations. Lattice labels are signed, `k' in [-m/2, m/2)` per axis,
//! with sample points reduced into `[0, L)`.

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{AmkError, Result};
use crate::grid::{
    inverse_spectrum, lp_aggregate, spectrum, Grid, Signal, Spectrum, C64,
};
use crate::partition::{AlphaPartition, AtomFamily, Band};

const TAU: f64 = std::f64::consts::TAU;

/// Parameters of the alpha-modulation norm `M^{p,q}_s`; the decomposition
/// parameter alpha comes from the partition itself.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ModNormParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
}

impl ModNormParams {
    pub fn new(p: f64, q: f64, s: f64) -> Self {
        Self { p, q, s }
    }

    /// `p = q`, unweighted.
    pub fn diagonal(p: f64) -> Self {
        Self { p, q: p, s: 0.0 }
    }
}

/// Multiply a spectrum by a sparse band mask.
pub(crate) fn masked_spectrum(s: &Spectrum, support: &[u32], mask: &[f64]) -> Spectrum {
    let mut out = Spectrum::zeros(s.grid);
    for (&pos, &w) in support.iter().zip(mask) {
        out.coeffs[pos as usize] = s.coeffs[pos as usize] * w;
    }
    out
}

/// Frequency projection onto band `k`: `F^-1 (eta_k F f)`.
pub fn band_project(f: &Signal, partition: &AlphaPartition, k: &[i64]) -> Result<Signal> {
    if f.grid != partition.grid {
        return Err(AmkError::GridMismatch("band_project".into()));
    }
    let band = partition.band(k)?;
    let s = spectrum(f);
    Ok(inverse_spectrum(&masked_spectrum(&s, &band.support, &band.eta)))
}

/// Weight `<k>^(s/(1-alpha))` attached to band `k`.
pub(crate) fn band_weight(band: &Band, s: f64, alpha: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        band.geometry.bracket.powf(s / (1.0 - alpha))
    }
}

/// Per-band `L^p` norms of the band projections of `f`.
pub fn band_lp_norms(f: &Spectrum, partition: &AlphaPartition, p: f64) -> Vec<f64> {
    partition
        .bands
        .par_iter()
        .map(|band| {
            let piece = inverse_spectrum(&masked_spectrum(f, &band.support, &band.eta));
            crate::grid::lp_norm(&piece, p)
        })
        .collect()
}

/// The alpha-modulation norm of `f`:
/// `( sum_k (<k>^(s/(1-a)) ||band_k f||_p)^q )^(1/q)`, sups for infinite
/// exponents.
pub fn alpha_mod_norm(f: &Signal, partition: &AlphaPartition, params: ModNormParams) -> f64 {
    let s = spectrum(f);
    alpha_mod_norm_of_spectrum(&s, partition, params)
}

/// Same as [`alpha_mod_norm`] but starting from a precomputed spectrum.
pub fn alpha_mod_norm_of_spectrum(
    f: &Spectrum,
    partition: &AlphaPartition,
    params: ModNormParams,
) -> f64 {
    let norms = band_lp_norms(f, partition, params.p);
    let alpha = partition.alpha;
    let weighted = partition
        .bands
        .iter()
        .zip(&norms)
        .map(|(band, &n)| band_weight(band, params.s, alpha) * n);
    lp_aggregate(weighted, params.q, 1.0)
}

/// Commensurate sampling lattice of one band: `m` points per axis over the
/// period, spacing `beta = L / m` no coarser than the nominal
/// `lambda / (2 r C scale)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BandLattice {
    pub m: usize,
    pub beta: f64,
}

pub fn band_lattice(
    grid: &Grid,
    scale: f64,
    enlargement: f64,
    covering_c: f64,
    lambda: f64,
) -> BandLattice {
    let nominal = lambda / (2.0 * enlargement * covering_c * scale);
    let ratio = grid.extent / nominal;
    let rounded = ratio.round();
    let m = if (ratio - rounded).abs() < 1e-9 { rounded } else { ratio.ceil() } as usize;
    let m = m.max(1);
    BandLattice { m, beta: grid.extent / m as f64 }
}

impl BandLattice {
    /// Signed labels per axis: `[-floor(m/2), m - 1 - floor(m/2)]`.
    pub fn label_range(&self) -> std::ops::RangeInclusive<i64> {
        let half = (self.m / 2) as i64;
        -half..=(self.m as i64 - 1 - half)
    }

    /// Natural array position of a signed label.
    #[inline]
    pub fn pos_of_label(&self, label: i64) -> usize {
        label.rem_euclid(self.m as i64) as usize
    }

    /// Sample point of a signed label, reduced into `[0, L)`.
    pub fn point_of_label(&self, label: i64, extent: f64) -> f64 {
        (self.beta * label as f64).rem_euclid(extent)
    }

    /// Total number of lattice points, `m^dim`.
    pub fn total(&self, dim: usize) -> usize {
        self.m.pow(dim as u32)
    }

    #[inline]
    pub fn flat_of(&self, pos: [usize; 2], dim: usize) -> usize {
        match dim {
            1 => pos[0],
            _ => pos[0] * self.m + pos[1],
        }
    }

    #[inline]
    pub fn axes_of(&self, flat: usize, dim: usize) -> [usize; 2] {
        match dim {
            1 => [flat, 0],
            _ => [flat / self.m, flat % self.m],
        }
    }

    /// Signed labels of a flat natural position.
    #[inline]
    pub fn labels_of(&self, flat: usize, dim: usize) -> [i64; 2] {
        let ax = self.axes_of(flat, dim);
        let m = self.m as i64;
        let half = (self.m / 2) as i64;
        let signed = |t: usize| {
            let t = t as i64;
            if t <= m - 1 - half {
                t
            } else {
                t - m
            }
        };
        [signed(ax[0]), if dim == 2 { signed(ax[1]) } else { 0 }]
    }
}

fn fft_lattice(m: usize, dim: usize, data: &mut [C64], forward: bool) {
    let mut planner = FftPlanner::new();
    let fft = if forward { planner.plan_fft_forward(m) } else { planner.plan_fft_inverse(m) };
    match dim {
        1 => fft.process(data),
        _ => {
            for r in 0..m {
                fft.process(&mut data[r * m..(r + 1) * m]);
            }
            let mut col = vec![C64::default(); m];
            for c in 0..m {
                for r in 0..m {
                    col[r] = data[r * m + c];
                }
                fft.process(&mut col);
                for r in 0..m {
                    data[r * m + c] = col[r];
                }
            }
        }
    }
}

/// Evaluate a masked spectral piece at all points of a commensurate lattice.
///
/// Folds the masked coefficients modulo `m` per axis and applies an inverse
/// DFT of size `m`; this is the value of the band-limited interpolant at the
/// points `x = (L/m) k'` exactly, in natural label order.
pub fn sample_masked_on_lattice(
    f: &Spectrum,
    support: &[u32],
    mask: &[f64],
    lattice: &BandLattice,
) -> Vec<C64> {
    let grid = &f.grid;
    let m = lattice.m as i64;
    let mut folded = vec![C64::default(); lattice.total(grid.dim)];
    for (&pos, &w) in support.iter().zip(mask) {
        let j = grid.freq_index(pos as usize);
        let b0 = j[0].rem_euclid(m) as usize;
        let b1 = if grid.dim == 2 { j[1].rem_euclid(m) as usize } else { 0 };
        folded[lattice.flat_of([b0, b1], grid.dim)] += f.coeffs[pos as usize] * w;
    }
    fft_lattice(lattice.m, grid.dim, &mut folded, false);
    let scale = 1.0 / grid.extent.powi(grid.dim as i32);
    for v in &mut folded {
        *v *= scale;
    }
    folded
}

/// Coefficients of one band of the atom expansion, in natural label order:
/// `coeffs[k'] = beta^d * (band_k f)(beta k')`.
#[derive(Debug, Clone)]
pub struct BandCoefficients {
    pub k: Vec<i64>,
    pub lattice: BandLattice,
    pub coeffs: Vec<C64>,
}

/// The discrete atom expansion of a signal over the retained bands.
#[derive(Debug, Clone)]
pub struct AtomCoefficients {
    pub grid: Grid,
    pub lambda: f64,
    pub bands: Vec<BandCoefficients>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(AmkError::Parameter(format!("lambda must be in (0,1], got {lambda}")));
    }
    Ok(())
}

/// Expand `f` into atom coefficients `c_(k,k') = beta_k^d (band_k f)(beta_k k')`.
pub fn atom_expand(
    f: &Signal,
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    lambda: f64,
) -> Result<AtomCoefficients> {
    check_lambda(lambda)?;
    if f.grid != partition.grid {
        return Err(AmkError::GridMismatch("atom_expand".into()));
    }
    let s = spectrum(f);
    Ok(atom_expand_spectrum(&s, partition, atoms, lambda))
}

pub(crate) fn atom_expand_spectrum(
    s: &Spectrum,
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    lambda: f64,
) -> AtomCoefficients {
    let grid = partition.grid;
    let bands: Vec<BandCoefficients> = atoms
        .atoms
        .par_iter()
        .map(|atom| {
            let band = partition.band(&atom.geometry.k).expect("retained band active");
            let lattice = band_lattice(
                &grid,
                atom.geometry.scale,
                atoms.enlargement,
                atoms.covering_c,
                lambda,
            );
            let mut coeffs = sample_masked_on_lattice(s, &band.support, &band.eta, &lattice);
            let w = lattice.beta.powi(grid.dim as i32);
            for c in &mut coeffs {
                *c *= w;
            }
            BandCoefficients { k: atom.geometry.k.clone(), lattice, coeffs }
        })
        .collect();
    AtomCoefficients { grid, lambda, bands }
}

/// Spectrum of the shifted atom `T_(beta k') phi_k^vee` for a signed label.
pub fn atom_spectrum(
    atoms: &AtomFamily,
    k: &[i64],
    lattice: &BandLattice,
    label: [i64; 2],
) -> Result<Spectrum> {
    let atom = atoms.atom(k)?;
    let grid = atoms.grid;
    let mut out = Spectrum::zeros(grid);
    let shift0 = lattice.beta * label[0] as f64;
    let shift1 = lattice.beta * label[1] as f64;
    for (&pos, &phi) in atom.support.iter().zip(&atom.phi) {
        let xi = grid.freq_value(pos as usize);
        let phase = -TAU * (shift0 * xi[0] + if grid.dim == 2 { shift1 * xi[1] } else { 0.0 });
        out.coeffs[pos as usize] = C64::from_polar(phi, phase);
    }
    Ok(out)
}

/// The shifted atom as a signal on the grid.
pub fn atom_signal(
    atoms: &AtomFamily,
    k: &[i64],
    lattice: &BandLattice,
    label: [i64; 2],
) -> Result<Signal> {
    Ok(inverse_spectrum(&atom_spectrum(atoms, k, lattice, label)?))
}

/// Reassemble a signal from atom coefficients:
/// `sum_(k,k') c_(k,k') T_(beta_k k') phi_k^vee`.
pub fn atom_reconstruct(coeffs: &AtomCoefficients, atoms: &AtomFamily) -> Result<Signal> {
    let grid = coeffs.grid;
    if grid != atoms.grid {
        return Err(AmkError::GridMismatch("atom_reconstruct".into()));
    }
    let mut acc = Spectrum::zeros(grid);
    for bc in &coeffs.bands {
        let atom = atoms.atom(&bc.k)?;
        // forward DFT of the coefficient array gives
        // sum_k' c_(k,k') exp(-2 pi i k' j / m) at bin j mod m
        let mut dft = bc.coeffs.clone();
        fft_lattice(bc.lattice.m, grid.dim, &mut dft, true);
        let m = bc.lattice.m as i64;
        for (&pos, &phi) in atom.support.iter().zip(&atom.phi) {
            let j = grid.freq_index(pos as usize);
            let b0 = j[0].rem_euclid(m) as usize;
            let b1 = if grid.dim == 2 { j[1].rem_euclid(m) as usize } else { 0 };
            acc.coeffs[pos as usize] += dft[bc.lattice.flat_of([b0, b1], grid.dim)] * phi;
        }
    }
    Ok(inverse_spectrum(&acc))
}

/// The sampled (quasi-)norm `|| { beta_k^(d/p) (band_k f)(beta_k k') } ||_(l^p)`
/// over all retained bands and lattice labels.
pub fn sampled_norm(
    f: &Signal,
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    p: f64,
    lambda: f64,
) -> Result<f64> {
    check_lambda(lambda)?;
    let coeffs = atom_expand(f, partition, atoms, lambda)?;
    Ok(sampled_norm_of_coeffs(&coeffs, p))
}

/// The sampled norm computed from existing atom coefficients.
///
/// Coefficients store `beta^d * sample`, so the `beta^(d/p)` weighting
/// becomes `beta^(d/p - d) |c|`.
pub fn sampled_norm_of_coeffs(coeffs: &AtomCoefficients, p: f64) -> f64 {
    assert!(p > 0.0);
    let d = coeffs.grid.dim as f64;
    if p.is_infinite() {
        coeffs
            .bands
            .iter()
            .map(|bc| {
                let w = bc.lattice.beta.powf(-d);
                bc.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max) * w
            })
            .fold(0.0f64, f64::max)
    } else {
        let mut acc = 0.0f64;
        for bc in &coeffs.bands {
            let w = bc.lattice.beta.powf(d / p - d).powf(p);
            acc += w * bc.coeffs.iter().map(|c| c.norm().powf(p)).sum::<f64>();
        }
        acc.powf(1.0 / p)
    }
}

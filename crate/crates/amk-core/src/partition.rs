//! Alpha-coverings of frequency space and their smooth partitions of unity.
//!
//! For `alpha in [0, 1)` the frequency axis is covered by balls
//! `B(<k>^(a/(1-a)) k, C <k>^(a/(1-a)))`, `k in Z^d`, where `<k>` is the
//! Japanese bracket `(1 + |k|^2)^(1/2)`. At `alpha = 0` this is the uniform
//! covering, and the balls widen polynomially as `alpha` grows. Each band
//! carries a bump `rho_k(xi) = rho_0((xi - center_k) / (2 C scale_k))` and the
//! partition functions are the pointwise normalizations
//! `eta_k = rho_k / sum_l rho_l`, which sum to one exactly on the grid.
//!
//! The companion atom family `phi_k` is 1 on each covering ball and supported
//! in the ball enlarged by a factor `r > 1`; bands whose enlarged ball leaves
//! the Nyquist window are dropped from the atom family and reported.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::bump::SmoothBump;
use crate::error::{AmkError, Result};
use crate::grid::Grid;
use crate::report::{Check, Report};

/// Minimum admissible value of `sum_l rho_l` on the frequency window.
pub const COVERING_FLOOR: f64 = 1e-6;

/// Japanese bracket `(1 + |k|^2)^(1/2)`.
pub fn bracket(k: &[i64]) -> f64 {
    (1.0 + k.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt()
}

/// Default covering constant for a dimension (validated empirically for
/// alpha <= 0.75; overridable everywhere it is used).
pub fn default_covering_constant(dim: usize) -> f64 {
    if dim == 1 {
        2.0
    } else {
        3.0
    }
}

/// Geometry of one covering ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandGeometry {
    pub alpha: f64,
    pub k: Vec<i64>,
    pub bracket: f64,
    /// `<k>^(alpha/(1-alpha))`, the dilation factor of the band.
    pub scale: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub covering_c: f64,
}

/// Ball geometry of band `k`: center `scale * k`, radius `C * scale`.
pub fn band_geometry(alpha: f64, k: &[i64], covering_c: f64) -> Result<BandGeometry> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(AmkError::Parameter(format!("alpha must be in [0,1), got {alpha}")));
    }
    if !(covering_c > 0.0) {
        return Err(AmkError::Parameter(format!("covering constant must be > 0, got {covering_c}")));
    }
    let b = bracket(k);
    let scale = b.powf(alpha / (1.0 - alpha));
    Ok(BandGeometry {
        alpha,
        k: k.to_vec(),
        bracket: b,
        scale,
        center: k.iter().map(|&v| v as f64 * scale).collect(),
        radius: covering_c * scale,
        covering_c,
    })
}

/// Euclidean distance from a point to the closed cube `[-half, half]^d`.
fn dist_to_window(center: &[f64], half: f64) -> f64 {
    center
        .iter()
        .map(|&c| (c.abs() - half).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// All band indices whose covering ball meets the Nyquist window
/// (boundary-touching bands included), in lexicographic order.
pub fn active_bands(alpha: f64, grid: &Grid, covering_c: f64) -> Result<Vec<Vec<i64>>> {
    let half = grid.nyquist();
    // scale >= 1 forces |k|_inf <= nyquist + C for any active band
    let kmax = (half + covering_c).floor() as i64 + 1;
    let mut out = Vec::new();
    let mut visit = |k: &[i64]| -> Result<()> {
        let geo = band_geometry(alpha, k, covering_c)?;
        if dist_to_window(&geo.center, half) <= geo.radius {
            out.push(k.to_vec());
        }
        Ok(())
    };
    match grid.dim {
        1 => {
            for k0 in -kmax..=kmax {
                visit(&[k0])?;
            }
        }
        _ => {
            for k0 in -kmax..=kmax {
                for k1 in -kmax..=kmax {
                    visit(&[k0, k1])?;
                }
            }
        }
    }
    out.sort();
    Ok(out)
}

/// One partition band: geometry plus the sparse frequency-grid samples of
/// `eta_k` (positions are flat signed-order spectral indices).
#[derive(Debug, Clone)]
pub struct Band {
    pub geometry: BandGeometry,
    pub support: Vec<u32>,
    pub eta: Vec<f64>,
    /// Ball contained in the closed Nyquist window (not clipped).
    pub interior: bool,
}

/// Smooth partition of unity subordinate to an alpha-covering, sampled on
/// the frequency grid.
#[derive(Debug, Clone)]
pub struct AlphaPartition {
    pub grid: Grid,
    pub alpha: f64,
    pub covering_c: f64,
    pub rho0: SmoothBump,
    pub bands: Vec<Band>,
    index: BTreeMap<Vec<i64>, usize>,
}

/// Sparse samples of a radial profile centered at `center` with the given
/// support radius, over in-window grid frequencies.
fn sample_radial(
    grid: &Grid,
    center: &[f64],
    support_radius: f64,
    eval: impl Fn(f64) -> f64,
) -> (Vec<u32>, Vec<f64>) {
    let dxi = grid.dxi();
    let half = (grid.n / 2) as i64;
    let range = |c: f64| -> (i64, i64) {
        let lo = ((c - support_radius) / dxi).floor() as i64;
        let hi = ((c + support_radius) / dxi).ceil() as i64;
        (lo.max(-half), hi.min(half - 1))
    };
    let mut pos = Vec::new();
    let mut val = Vec::new();
    let mut push = |j: [i64; 2]| {
        let xi0 = j[0] as f64 * dxi - center[0];
        let xi1 = if grid.dim == 2 { j[1] as f64 * dxi - center[1] } else { 0.0 };
        let r = (xi0 * xi0 + xi1 * xi1).sqrt();
        let v = eval(r);
        if v != 0.0 {
            pos.push(grid.pos_of_freq(j).expect("in-window frequency") as u32);
            val.push(v);
        }
    };
    match grid.dim {
        1 => {
            let (lo, hi) = range(center[0]);
            for j in lo..=hi {
                push([j, 0]);
            }
        }
        _ => {
            let (lo0, hi0) = range(center[0]);
            let (lo1, hi1) = range(center[1]);
            for j0 in lo0..=hi0 {
                for j1 in lo1..=hi1 {
                    push([j0, j1]);
                }
            }
        }
    }
    (pos, val)
}

/// Build the partition `{eta_k}` on the grid.
///
/// `rho0` is the reference bump (plateau 1/4, support 1/2 by default);
/// each band uses `rho_0(. / (2C))` dilated by the band scale.
/// Fails if `sum_l rho_l` dips below [`COVERING_FLOOR`] anywhere on the
/// window, which means the covering constant is too small.
pub fn build_partition(
    alpha: f64,
    grid: &Grid,
    covering_c: f64,
    rho0: SmoothBump,
) -> Result<AlphaPartition> {
    let ks = active_bands(alpha, grid, covering_c)?;
    let half = grid.nyquist();

    // rho(xi) = rho0(xi / 2C), per band dilated by scale
    let mut raw: Vec<(BandGeometry, Vec<u32>, Vec<f64>)> = Vec::with_capacity(ks.len());
    for k in &ks {
        let geo = band_geometry(alpha, k, covering_c)?;
        let profile = rho0.scaled(2.0 * covering_c * geo.scale);
        let (pos, val) = sample_radial(grid, &geo.center, profile.support, |r| profile.eval(r));
        raw.push((geo, pos, val));
    }

    let mut denom = vec![0.0f64; grid.total()];
    for (_, pos, val) in &raw {
        for (&p, &v) in pos.iter().zip(val) {
            denom[p as usize] += v;
        }
    }
    let min = denom.iter().copied().fold(f64::INFINITY, f64::min);
    if min < COVERING_FLOOR {
        return Err(AmkError::CoveringTooSmall { min, floor: COVERING_FLOOR });
    }

    let mut bands = Vec::with_capacity(raw.len());
    let mut index = BTreeMap::new();
    for (geo, pos, mut val) in raw {
        for (v, &p) in val.iter_mut().zip(&pos) {
            *v /= denom[p as usize];
        }
        let interior = geo.center.iter().all(|&c| c.abs() + geo.radius <= half);
        index.insert(geo.k.clone(), bands.len());
        bands.push(Band { geometry: geo, support: pos, eta: val, interior });
    }

    Ok(AlphaPartition { grid: *grid, alpha, covering_c, rho0, bands, index })
}

impl AlphaPartition {
    pub fn band_index(&self, k: &[i64]) -> Result<usize> {
        self.index.get(k).copied().ok_or_else(|| AmkError::InactiveBand(k.to_vec()))
    }

    pub fn band(&self, k: &[i64]) -> Result<&Band> {
        Ok(&self.bands[self.band_index(k)?])
    }

    /// Pointwise sum of all partition functions on the grid (dense).
    pub fn eta_sum(&self) -> Vec<f64> {
        let mut sum = vec![0.0f64; self.grid.total()];
        for band in &self.bands {
            for (&p, &v) in band.support.iter().zip(&band.eta) {
                sum[p as usize] += v;
            }
        }
        sum
    }

    /// Sparse export per the partition JSON schema.
    pub fn to_json(&self) -> serde_json::Value {
        let bands: Vec<_> = self
            .bands
            .iter()
            .map(|b| {
                serde_json::json!({
                    "k": b.geometry.k,
                    "center": b.geometry.center,
                    "radius": b.geometry.radius,
                })
            })
            .collect();
        let eta: Vec<_> = self
            .bands
            .iter()
            .map(|b| serde_json::json!({"idx": b.support, "val": b.eta}))
            .collect();
        serde_json::json!({
            "alpha": self.alpha,
            "C": self.covering_c,
            "grid": self.grid,
            "bands": bands,
            "eta": eta,
        })
    }
}

/// One atom band: `phi_k` is 1 on the covering ball, supported in the ball
/// enlarged by `r`.
#[derive(Debug, Clone)]
pub struct AtomBand {
    pub geometry: BandGeometry,
    pub support: Vec<u32>,
    pub phi: Vec<f64>,
}

/// The atom family `{phi_k}` over the retained bands.
#[derive(Debug, Clone)]
pub struct AtomFamily {
    pub grid: Grid,
    pub alpha: f64,
    pub covering_c: f64,
    pub enlargement: f64,
    pub atoms: Vec<AtomBand>,
    /// Active bands whose enlarged ball exits the window; no atoms built.
    pub dropped: Vec<Vec<i64>>,
    index: BTreeMap<Vec<i64>, usize>,
}

/// Build the atom family for a partition with enlargement factor `r > 1`.
pub fn build_atoms(partition: &AlphaPartition, r: f64) -> Result<AtomFamily> {
    if !(r > 1.0) {
        return Err(AmkError::Parameter(format!("enlargement factor must be > 1, got {r}")));
    }
    let grid = partition.grid;
    let half = grid.nyquist();
    let mut atoms = Vec::new();
    let mut dropped = Vec::new();
    let mut index = BTreeMap::new();
    for band in &partition.bands {
        let geo = &band.geometry;
        let enlarged = r * geo.radius;
        if !geo.center.iter().all(|&c| c.abs() + enlarged <= half) {
            dropped.push(geo.k.clone());
            continue;
        }
        let profile = SmoothBump::new(geo.radius, enlarged);
        let (pos, val) = sample_radial(&grid, &geo.center, enlarged, |rad| profile.eval(rad));
        index.insert(geo.k.clone(), atoms.len());
        atoms.push(AtomBand { geometry: geo.clone(), support: pos, phi: val });
    }
    Ok(AtomFamily {
        grid,
        alpha: partition.alpha,
        covering_c: partition.covering_c,
        enlargement: r,
        atoms,
        dropped,
        index,
    })
}

impl AtomFamily {
    pub fn atom_index(&self, k: &[i64]) -> Result<usize> {
        self.index.get(k).copied().ok_or_else(|| AmkError::InactiveBand(k.to_vec()))
    }

    pub fn atom(&self, k: &[i64]) -> Result<&AtomBand> {
        Ok(&self.atoms[self.atom_index(k)?])
    }

    /// Grid frequency mask where the retained bands alone already sum to one:
    /// signals supported here are reproduced exactly by the retained-band
    /// machinery (no mass leaks into dropped bands).
    pub fn retained_core_mask(&self, partition: &AlphaPartition) -> Vec<bool> {
        let mut sum = vec![0.0f64; self.grid.total()];
        for atom in &self.atoms {
            let band = partition.band(&atom.geometry.k).expect("retained band is active");
            for (&p, &v) in band.support.iter().zip(&band.eta) {
                sum[p as usize] += v;
            }
        }
        sum.iter().map(|&s| s >= 1.0 - 1e-12).collect()
    }
}

/// Finite-difference gradient diagnostics for one band, computed on a dense
/// copy of `eta_k`. Returns `max |grad eta| * scale`.
fn scaled_gradient_max(grid: &Grid, band: &Band) -> f64 {
    let n = grid.n;
    let mut dense = vec![0.0f64; grid.total()];
    for (&p, &v) in band.support.iter().zip(&band.eta) {
        dense[p as usize] = v;
    }
    let inv2h = 1.0 / (2.0 * grid.dxi());
    let mut best = 0.0f64;
    match grid.dim {
        1 => {
            for t in 1..n - 1 {
                let g = (dense[t + 1] - dense[t - 1]) * inv2h;
                best = best.max(g.abs());
            }
        }
        _ => {
            for t0 in 1..n - 1 {
                for t1 in 1..n - 1 {
                    let gx = (dense[(t0 + 1) * n + t1] - dense[(t0 - 1) * n + t1]) * inv2h;
                    let gy = (dense[t0 * n + t1 + 1] - dense[t0 * n + t1 - 1]) * inv2h;
                    best = best.max((gx * gx + gy * gy).sqrt());
                }
            }
        }
    }
    best * band.geometry.scale
}

/// Tolerances for [`validate_partition`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartitionTolerances {
    pub sum_identity: f64,
    pub gradient_spread: f64,
}

impl Default for PartitionTolerances {
    fn default() -> Self {
        Self { sum_identity: 1e-10, gradient_spread: 50.0 }
    }
}

/// Diagnostic report: partition-of-unity identity, support containment,
/// range, and the scaled-derivative uniformity across bands.
///
/// The derivative spread is taken over bands whose ball lies fully inside
/// the window; bands clipped by the window edge see only a sliver of their
/// bump and would make the statistic meaningless.
pub fn validate_partition(partition: &AlphaPartition, tol: PartitionTolerances) -> Report {
    let grid = &partition.grid;
    let sum = partition.eta_sum();
    let max_dev = sum.iter().map(|s| (s - 1.0).abs()).fold(0.0f64, f64::max);

    let mut support_violations = 0usize;
    let mut range_violations = 0usize;
    for band in &partition.bands {
        let geo = &band.geometry;
        for (&p, &v) in band.support.iter().zip(&band.eta) {
            let xi = grid.freq_value(p as usize);
            let d = (0..grid.dim)
                .map(|a| (xi[a] - geo.center[a]).powi(2))
                .sum::<f64>()
                .sqrt();
            if v != 0.0 && d >= geo.radius {
                support_violations += 1;
            }
            if !(0.0..=1.0 + 1e-14).contains(&v) {
                range_violations += 1;
            }
        }
    }

    let mut per_band = Vec::new();
    let mut interior_max = f64::MIN;
    let mut interior_min = f64::MAX;
    for band in &partition.bands {
        let g = scaled_gradient_max(grid, band);
        per_band.push(serde_json::json!({
            "k": band.geometry.k,
            "scaled_gradient_max": g,
            "interior": band.interior,
        }));
        if band.interior && g > 0.0 {
            interior_max = interior_max.max(g);
            interior_min = interior_min.min(g);
        }
    }
    let spread = if interior_min < interior_max {
        interior_max / interior_min
    } else {
        1.0
    };

    let mut report = Report::new("partition-validate");
    report.config = serde_json::json!({
        "alpha": partition.alpha,
        "C": partition.covering_c,
        "grid": partition.grid,
        "tolerances": tol,
        "bands": partition.bands.len(),
    });
    report.metric("max_sum_deviation", max_dev);
    report.metric("support_violations", support_violations as f64);
    report.metric("range_violations", range_violations as f64);
    report.metric("scaled_gradient_spread", spread);
    report.extra = serde_json::json!({ "per_band": per_band });
    report.check(Check::le("sum_identity", max_dev, tol.sum_identity));
    report.check(Check::le("support_exact", support_violations as f64, 0.0));
    report.check(Check::le("range", range_violations as f64, 0.0));
    report.check(Check::le("gradient_spread", spread, tol.gradient_spread));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_alpha_zero_is_uniform() {
        let g = band_geometry(0.0, &[5], 1.0).unwrap();
        assert_eq!(g.center, vec![5.0]);
        assert_eq!(g.radius, 1.0);
        assert_eq!(g.scale, 1.0);
    }

    #[test]
    fn geometry_at_origin() {
        for alpha in [0.0, 0.3, 0.77] {
            let g = band_geometry(alpha, &[0], 1.7).unwrap();
            assert_eq!(g.bracket, 1.0);
            assert_eq!(g.center, vec![0.0]);
            assert_eq!(g.radius, 1.7);
        }
    }

    #[test]
    fn geometry_alpha_half_k3() {
        // alpha/(1-alpha) = 1, so scale = <3> = sqrt(10)
        let g = band_geometry(0.5, &[3], 1.0).unwrap();
        let s10 = 10.0_f64.sqrt();
        assert!((g.bracket - s10).abs() < 1e-12);
        assert!((g.center[0] - 3.0 * s10).abs() < 1e-12);
        assert!((g.radius - s10).abs() < 1e-12);
    }

    #[test]
    fn geometry_rejects_bad_parameters() {
        assert!(band_geometry(1.0, &[1], 1.0).is_err());
        assert!(band_geometry(-0.1, &[1], 1.0).is_err());
        assert!(band_geometry(0.5, &[1], 0.0).is_err());
    }

    #[test]
    fn active_bands_uniform_covering() {
        // Nyquist half-width 32; balls of radius 1 at integers: |k| <= 33
        let g = Grid::new(1, 1.0, 64).unwrap();
        let ks = active_bands(0.0, &g, 1.0).unwrap();
        let want: Vec<Vec<i64>> = (-33..=33).map(|k| vec![k]).collect();
        assert_eq!(ks, want);
    }

    #[test]
    fn active_bands_small_window_includes_boundary_touchers() {
        // Nyquist half-width 2: k in {-2..2} plus the boundary-touching +-3
        let g = Grid::new(1, 2.0, 8).unwrap();
        let ks = active_bands(0.0, &g, 1.0).unwrap();
        let want: Vec<Vec<i64>> = (-3..=3).map(|k| vec![k]).collect();
        assert_eq!(ks, want);
    }

    #[test]
    fn wider_bands_mean_fewer_active_indices() {
        let g = Grid::new(1, 4.0, 128).unwrap();
        let uniform = active_bands(0.0, &g, 2.0).unwrap().len();
        let half = active_bands(0.5, &g, 2.0).unwrap().len();
        assert!(half < uniform, "{half} !< {uniform}");
    }

    #[test]
    fn partition_sums_to_one_and_stays_supported() {
        for &(dim, n, l) in &[(1usize, 256usize, 16.0), (2, 32, 4.0)] {
            let g = Grid::new(dim, l, n).unwrap();
            let c = default_covering_constant(dim);
            for alpha in [0.0, 0.5] {
                let p = build_partition(alpha, &g, c, SmoothBump::reference()).unwrap();
                let report = validate_partition(&p, PartitionTolerances::default());
                assert!(report.passed(), "alpha={alpha} dim={dim}: {report:?}");
            }
        }
    }

    #[test]
    fn zeroing_a_band_breaks_the_identity() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let mut p = build_partition(0.0, &g, 1.0, SmoothBump::reference()).unwrap();
        let mid = p.band_index(&[0]).unwrap();
        let peak = p.bands[mid].eta.iter().copied().fold(0.0f64, f64::max);
        for v in &mut p.bands[mid].eta {
            *v = 0.0;
        }
        let report = validate_partition(&p, PartitionTolerances::default());
        assert!(!report.passed());
        // the sum now misses exactly eta_k, so the deviation is its peak
        let dev = report.metric_value("max_sum_deviation").unwrap();
        assert!((dev - peak).abs() < 1e-12);
        assert!(dev >= 0.5, "removing a band should leave a hole, dev = {dev}");
    }

    #[test]
    fn covering_constant_too_small_is_detected() {
        let g = Grid::new(1, 8.0, 128).unwrap();
        let err = build_partition(0.5, &g, 0.2, SmoothBump::reference()).unwrap_err();
        assert!(matches!(err, AmkError::CoveringTooSmall { .. }), "{err}");
    }

    #[test]
    fn atoms_are_one_on_eta_support() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        for alpha in [0.0, 0.5] {
            let p = build_partition(alpha, &g, 2.0, SmoothBump::reference()).unwrap();
            let atoms = build_atoms(&p, 1.5).unwrap();
            assert!(!atoms.atoms.is_empty());
            assert!(!atoms.dropped.is_empty(), "edge bands should be dropped");
            for atom in &atoms.atoms {
                let band = p.band(&atom.geometry.k).unwrap();
                let mut dense = vec![0.0f64; g.total()];
                for (&pos, &v) in atom.support.iter().zip(&atom.phi) {
                    dense[pos as usize] = v;
                }
                for (&pos, &e) in band.support.iter().zip(&band.eta) {
                    let phi = dense[pos as usize];
                    assert!((phi * e - e).abs() <= 1e-12, "phi={phi} eta={e}");
                }
            }
        }
    }

    #[test]
    fn atom_profile_on_transition_annulus() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let c = 2.0;
        let p = build_partition(0.0, &g, c, SmoothBump::reference()).unwrap();
        let atoms = build_atoms(&p, 1.5).unwrap();
        let atom = atoms.atom(&[0]).unwrap();
        let profile = SmoothBump::new(atom.geometry.radius, 1.5 * atom.geometry.radius);
        assert_eq!(profile.eval(0.0), 1.0);
        let v = profile.eval(1.4 * c);
        assert!(v > 0.0 && v < 1.0, "transition value {v}");
        assert_eq!(profile.eval(1.5 * c), 0.0);
    }

    #[test]
    fn build_atoms_rejects_r_le_one() {
        let g = Grid::new(1, 8.0, 64).unwrap();
        let p = build_partition(0.0, &g, 2.0, SmoothBump::reference()).unwrap();
        assert!(build_atoms(&p, 1.0).is_err());
    }

    #[test]
    fn inactive_band_lookup_fails() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let p = build_partition(0.0, &g, 1.0, SmoothBump::reference()).unwrap();
        assert!(p.band(&[0]).is_ok());
        assert!(matches!(p.band(&[999]), Err(AmkError::InactiveBand(_))));
    }

    #[test]
    fn retained_core_is_nonempty_and_correct() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let p = build_partition(0.5, &g, 2.0, SmoothBump::reference()).unwrap();
        let atoms = build_atoms(&p, 1.5).unwrap();
        let mask = atoms.retained_core_mask(&p);
        assert!(mask.iter().any(|&m| m));
        // center of the window is always in the core
        let center = g.pos_of_freq([0, 0]).unwrap();
        assert!(mask[center]);
        // the very edge never is
        assert!(!mask[0]);
    }
}

//! Coefficient tail profiles and totally-bounded-set diagnostics.
//!
//! A family of sequences indexed over `Z^m` is totally bounded in `l^p`
//! (p finite) iff it is uniformly bounded and its out-of-box mass vanishes
//! uniformly: `sup_family || {a_j}_(j outside [-N,N]^m) ||_p -> 0`. The same
//! criterion transfers to signal families through their weighted atom
//! coefficients. Finite grids cannot take the limit, so verdicts are
//! explicitly "consistent with" / "inconsistent with" total boundedness at
//! the resolvable levels, never proofs.

use serde::{Deserialize, Serialize};

use crate::error::{AmkError, Result};
use crate::grid::{lp_aggregate, Signal};
use crate::modulation::{atom_expand, AtomCoefficients};
use crate::partition::{AlphaPartition, AtomFamily};
use crate::report::{Check, Report};

/// Default tail levels (level 0, the "total", is always included).
pub const DEFAULT_LEVELS: [u32; 5] = [1, 2, 4, 8, 16];

/// A coefficient array with explicit signed integer indices.
#[derive(Debug, Clone, Default)]
pub struct IndexedCoeffs {
    /// (index tuple, magnitude) pairs; tuples share one arity within a family.
    pub entries: Vec<(Vec<i64>, f64)>,
}

impl IndexedCoeffs {
    pub fn from_magnitudes(entries: Vec<(Vec<i64>, f64)>) -> Self {
        Self { entries }
    }

    /// `l^p` norm of the entries outside the closed box `[-level, level]^m`.
    fn tail_norm(&self, p: f64, level: u32) -> f64 {
        let n = level as i64;
        lp_aggregate(
            self.entries
                .iter()
                .filter(|(idx, _)| idx.iter().any(|&j| j.abs() > n))
                .map(|(_, v)| *v),
            p,
            1.0,
        )
    }
}

/// Sup-over-family tail norms at increasing box levels.
///
/// `total` is the level-0 value (everything but the origin index); levels
/// always start at 0 so `values[0] == total`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailProfile {
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    pub total: f64,
}

impl TailProfile {
    /// Ratio of the last level to the total; 0 when the total vanishes.
    pub fn final_ratio(&self) -> f64 {
        if self.total == 0.0 {
            0.0
        } else {
            self.values.last().copied().unwrap_or(self.total) / self.total
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        self.levels.iter().zip(&self.values).map(move |(&l, &v)| {
            (l, v, if self.total == 0.0 { 0.0 } else { v / self.total })
        })
    }
}

fn with_level_zero(levels: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = levels.to_vec();
    if !out.contains(&0) {
        out.push(0);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Tail profile of a family of coefficient arrays in `l^p`, `p` finite.
pub fn seq_tail_profile(
    family: &[IndexedCoeffs],
    p: f64,
    levels: &[u32],
) -> Result<TailProfile> {
    if family.is_empty() {
        return Err(AmkError::Parameter("empty family".into()));
    }
    if !(p > 0.0) || p.is_infinite() {
        return Err(AmkError::Parameter(format!("tail profiles need p in (0,inf), got {p}")));
    }
    let levels = with_level_zero(levels);
    let values: Vec<f64> = levels
        .iter()
        .map(|&lvl| {
            family
                .iter()
                .map(|coeffs| coeffs.tail_norm(p, lvl))
                .fold(0.0f64, f64::max)
        })
        .collect();
    let total = values[0];
    Ok(TailProfile { levels, values, total })
}

/// Weighted atom-coefficient array of one signal: entries
/// `((k, k'), beta_k^(d/p) |(band_k f)(beta_k k')|)` with the band and
/// lattice labels concatenated into one index tuple.
pub fn weighted_atom_coeffs(coeffs: &AtomCoefficients, p: f64) -> IndexedCoeffs {
    let d = coeffs.grid.dim as f64;
    let dim = coeffs.grid.dim;
    let mut entries = Vec::new();
    for bc in &coeffs.bands {
        // stored coefficients carry beta^d already
        let w = bc.lattice.beta.powf(d / p - d);
        for (flat, c) in bc.coeffs.iter().enumerate() {
            let labels = bc.lattice.labels_of(flat, dim);
            let mut idx = Vec::with_capacity(2 * dim);
            idx.extend_from_slice(&bc.k);
            idx.extend_from_slice(&labels[..dim]);
            entries.push((idx, w * c.norm()));
        }
    }
    IndexedCoeffs { entries }
}

/// Tail profile of a signal family through its weighted atom coefficients.
pub fn family_tail_profile(
    family: &[Signal],
    partition: &AlphaPartition,
    atoms: &AtomFamily,
    p: f64,
    lambda: f64,
    levels: &[u32],
) -> Result<TailProfile> {
    if family.is_empty() {
        return Err(AmkError::Parameter("empty family".into()));
    }
    let arrays: Vec<IndexedCoeffs> = family
        .iter()
        .map(|f| Ok(weighted_atom_coeffs(&atom_expand(f, partition, atoms, lambda)?, p)))
        .collect::<Result<_>>()?;
    seq_tail_profile(&arrays, p, levels)
}

/// Judge a tail profile against a uniform bound and a decay threshold.
///
/// Consistent iff the total is within `bound` and the final tail has decayed
/// below `decay_threshold * total`; a zero total is trivially consistent.
pub fn tb_verdict(profile: &TailProfile, bound: f64, decay_threshold: f64) -> Report {
    let mut report = Report::new("tb-verdict");
    report.config = serde_json::json!({
        "bound": bound,
        "decay_threshold": decay_threshold,
        "levels": profile.levels,
    });
    report.metric("total", profile.total);
    report.metric("final_ratio", profile.final_ratio());
    if profile.total == 0.0 {
        report.verdict = Some("totally-bounded-consistent".into());
        report.check(Check::flag("trivial_zero_family", true));
        return report;
    }
    let a = Check::le("uniform_boundedness", profile.total, bound);
    let b = Check::le("uniform_disappearance", profile.final_ratio(), decay_threshold);
    let ok = a.passed && b.passed;
    report.check(a);
    report.check(b);
    report.verdict = Some(
        if ok { "totally-bounded-consistent" } else { "inconsistent" }.into(),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(entries: &[(i64, f64)]) -> IndexedCoeffs {
        IndexedCoeffs::from_magnitudes(
            entries.iter().map(|&(k, v)| (vec![k], v)).collect(),
        )
    }

    #[test]
    fn finite_support_hits_zero() {
        let fam = [seq(&[(-3, 1.0), (0, 2.0), (3, 0.5)])];
        let prof = seq_tail_profile(&fam, 1.0, &[1, 2, 3, 4]).unwrap();
        assert_eq!(prof.levels, vec![0, 1, 2, 3, 4]);
        assert!((prof.values[0] - 1.5).abs() < 1e-15);
        assert_eq!(prof.values[3], 0.0); // level 3 box swallows everything
        assert_eq!(prof.values[4], 0.0);
    }

    #[test]
    fn geometric_tail_matches_closed_form() {
        // a_k = 2^(-|k|): tail at level N in l^1 is exactly 2 * 2^(-N)
        let entries: Vec<(i64, f64)> =
            (-60i64..=60).map(|k| (k, 0.5f64.powi(k.abs() as i32))).collect();
        let fam = [seq(&entries)];
        let prof = seq_tail_profile(&fam, 1.0, &[1, 2, 4, 8, 16]).unwrap();
        for (level, value, _) in prof.rows() {
            let want = 2.0 * 0.5f64.powi(level as i32);
            assert!((value - want).abs() < 1e-12, "level {level}: {value} vs {want}");
        }
    }

    #[test]
    fn spike_family_plateaus_and_is_flagged() {
        // unit coordinate vectors e_m, |m| <= 12: the sup keeps finding a
        // surviving spike outside every box below 12
        let fam: Vec<IndexedCoeffs> = (-12..=12).map(|m| seq(&[(m, 1.0)])).collect();
        let prof = seq_tail_profile(&fam, 2.0, &[1, 2, 4, 8]).unwrap();
        assert!(prof.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let report = tb_verdict(&prof, 10.0, 0.1);
        assert_eq!(report.verdict.as_deref(), Some("inconsistent"));
        assert!(!report.check_value("uniform_disappearance").unwrap().passed);
        assert!(report.check_value("uniform_boundedness").unwrap().passed);
    }

    #[test]
    fn profiles_are_nonincreasing_and_homogeneous() {
        let entries: Vec<(i64, f64)> =
            (-40..=40).map(|k| (k, 1.0 / (1.0 + (k * k) as f64))).collect();
        let fam = [seq(&entries)];
        let prof = seq_tail_profile(&fam, 2.0, &DEFAULT_LEVELS).unwrap();
        assert!(prof.values.windows(2).all(|w| w[1] <= w[0] + 1e-15));

        let scaled: Vec<IndexedCoeffs> = fam
            .iter()
            .map(|c| {
                IndexedCoeffs::from_magnitudes(
                    c.entries.iter().map(|(i, v)| (i.clone(), 3.0 * v)).collect(),
                )
            })
            .collect();
        let prof3 = seq_tail_profile(&scaled, 2.0, &DEFAULT_LEVELS).unwrap();
        for (a, b) in prof.values.iter().zip(&prof3.values) {
            assert!((b - 3.0 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_family_is_trivially_consistent() {
        let fam = [seq(&[(0, 0.0), (5, 0.0)])];
        let prof = seq_tail_profile(&fam, 1.0, &DEFAULT_LEVELS).unwrap();
        let report = tb_verdict(&prof, 1.0, 0.1);
        assert_eq!(report.verdict.as_deref(), Some("totally-bounded-consistent"));
        assert!(report.passed());
    }

    #[test]
    fn rejects_empty_family_and_bad_p() {
        assert!(seq_tail_profile(&[], 1.0, &DEFAULT_LEVELS).is_err());
        let fam = [seq(&[(0, 1.0)])];
        assert!(seq_tail_profile(&fam, f64::INFINITY, &DEFAULT_LEVELS).is_err());
        assert!(seq_tail_profile(&fam, 0.0, &DEFAULT_LEVELS).is_err());
    }
}

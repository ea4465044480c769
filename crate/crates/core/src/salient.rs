//! Selection of salient clusters (features) from a cluster hierarchy.
//!
//! Levels are traversed from the top. Top-level clusters are always salient
//! so that every node is covered. A nested cluster is salient when, for each
//! of its direct ancestors, it is at least as dense as the ancestor and not
//! heavier than the ancestor's weight discounted by `r_w`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::hierarchy::{ClusterId, Hierarchy};

/// Weight discount used when the overlap between clusters is unknown.
pub const DEFAULT_WEIGHT_DISCOUNT: f64 = 0.6;
/// Lower bound of the weight discount.
pub const MIN_WEIGHT_DISCOUNT: f64 = 0.5;

/// Weight discount refined by a known overlap: `0.5 + (b-1) w_ovp / (2 b w_c)`,
/// where `b >= 2` clusters share the overlapping weight `w_ovp < w_c`.
pub fn discount_factor(w_ovp: f64, w_c: f64, b: usize) -> Result<f64> {
    if b < 2 {
        return Err(Error::domain(format!("overlap factor must be at least 2, got {b}")));
    }
    if !(w_ovp >= 0.0 && w_ovp < w_c) {
        return Err(Error::domain(format!("overlap weight {w_ovp} must lie in [0, {w_c})")));
    }
    let b = b as f64;
    Ok(MIN_WEIGHT_DISCOUNT + (b - 1.0) * w_ovp / (2.0 * b * w_c))
}

/// [`discount_factor`] for a known `(w_ovp, w_c, b)` overlap, the default otherwise.
pub fn discount_factor_or_default(overlap: Option<(f64, f64, usize)>) -> Result<f64> {
    match overlap {
        Some((w_ovp, w_c, b)) => discount_factor(w_ovp, w_c, b),
        None => Ok(DEFAULT_WEIGHT_DISCOUNT),
    }
}

pub fn validate_weight_discount(r_w: f64) -> Result<()> {
    if !(MIN_WEIGHT_DISCOUNT..1.0).contains(&r_w) {
        return Err(Error::domain(format!("weight discount {r_w} outside [0.5, 1)")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SalientReason {
    Top,
    Dominant,
}

impl fmt::Display for SalientReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SalientReason::Top => "top",
            SalientReason::Dominant => "dominant",
        })
    }
}

/// Salient clusters in order of discovery.
#[derive(Clone, Debug, PartialEq)]
pub struct SalientSet {
    clusters: Vec<ClusterId>,
    reasons: Vec<SalientReason>,
    r_w: f64,
}

impl SalientSet {
    pub fn clusters(&self) -> &[ClusterId] {
        &self.clusters
    }

    pub fn reasons(&self) -> &[SalientReason] {
        &self.reasons
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn weight_discount(&self) -> f64 {
        self.r_w
    }

    pub fn contains(&self, id: ClusterId) -> bool {
        self.clusters.contains(&id)
    }
}

/// Statistics an ancestor keeps for its descendants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncestorStats {
    pub dens: f64,
    /// Discounted weight.
    pub wgh: f64,
    /// Descendants that consumed the record so far.
    pub reqs: usize,
}

pub fn extract_features(hierarchy: &Hierarchy, r_w: f64) -> Result<SalientSet> {
    extract_traced(hierarchy, r_w).map(|(set, _)| set)
}

/// Returns the salient set and the peak number of live ancestor records.
pub(crate) fn extract_traced(hierarchy: &Hierarchy, r_w: f64) -> Result<(SalientSet, usize)> {
    validate_weight_discount(r_w)?;
    let mut clusters = Vec::new();
    let mut reasons = Vec::new();
    let mut stats: HashMap<ClusterId, AncestorStats> = HashMap::new();
    let mut peak = 0;

    for level in (0..hierarchy.level_count()).rev() {
        let mut order: Vec<_> = hierarchy.formed_at(level).collect();
        order.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.id.cmp(&b.id)));
        for cl in order {
            let mut reason = cl.ancestors.is_empty().then_some(SalientReason::Top);
            if reason.is_none() {
                let mut hits = 0;
                for &ac in &cl.ancestors {
                    let ast = stats.get_mut(&ac).expect("ancestor record is alive until all descendants used it");
                    if cl.density >= ast.dens && cl.weight <= ast.wgh {
                        hits += 1;
                    }
                    ast.reqs += 1;
                    if ast.reqs == hierarchy.cluster(ac).children.len() {
                        stats.remove(&ac);
                    }
                }
                if hits == cl.ancestors.len() {
                    reason = Some(SalientReason::Dominant);
                }
            }
            if !cl.children.is_empty() {
                stats.insert(cl.id, AncestorStats { dens: cl.density, wgh: cl.weight * r_w, reqs: 0 });
                peak = peak.max(stats.len());
            }
            if let Some(reason) = reason {
                clusters.push(cl.id);
                reasons.push(reason);
            }
        }
    }
    Ok((SalientSet { clusters, reasons, r_w }, peak))
}

/// Writes `cluster_id level weight density reason` lines, tab-separated.
pub fn write_salient<W: Write>(hierarchy: &Hierarchy, set: &SalientSet, mut out: W) -> Result<()> {
    for (&id, reason) in set.clusters.iter().zip(&set.reasons) {
        let c = hierarchy.cluster(id);
        writeln!(out, "{}\t{}\t{}\t{}\t{}", id, c.level, c.weight, c.density, reason)?;
    }
    Ok(())
}

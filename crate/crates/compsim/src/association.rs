//! Serving-cell selection and the coordination set of the L strongest
//! interferers.

use thiserror::Error;

use crate::geometry::SpatialRealization;
use crate::model::{CoordinationPolicy, TierConfig};

/// A sampled base station: tier index plus within-tier rank (0 = nearest).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsId {
    pub tier: usize,
    pub rank: usize,
}

/// The serving BS and the coordinated cells, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationSet {
    pub serving: BsId,
    /// Ordered by descending average received power; excludes the serving BS.
    pub members: Vec<BsId>,
    pub policy: CoordinationPolicy,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AssociationError {
    #[error(
        "insufficient sampled points: {available} admissible candidates for L = {requested}; \
         raise truncation_points_per_tier"
    )]
    InsufficientCandidates { available: usize, requested: usize },
}

/// The max-average-power serving BS: argmax over tiers of the nearest point's
/// average power. Ties (measure zero) go to the lowest tier index.
pub fn select_serving(realization: &SpatialRealization, tiers: &[TierConfig]) -> (usize, f64) {
    assert_eq!(realization.num_tiers(), tiers.len());
    let mut best = (0, f64::NEG_INFINITY);
    for (k, tier) in tiers.iter().enumerate() {
        let d2 = realization.squared_distances(k)[0];
        let p = tier.avg_power(d2);
        if p > best.1 {
            best = (k, p);
        }
    }
    best
}

/// The L strongest interferers admitted by the policy, excluding the serving
/// BS. Power ties break by (tier, rank) lexicographic order.
pub fn select_coordination_set(
    realization: &SpatialRealization,
    tiers: &[TierConfig],
    l: usize,
    policy: CoordinationPolicy,
    serving: BsId,
) -> Result<CoordinationSet, AssociationError> {
    let mut candidates: Vec<(f64, BsId)> = Vec::new();
    for (k, tier) in tiers.iter().enumerate() {
        if policy == CoordinationPolicy::IntraTier && k != serving.tier {
            continue;
        }
        for (rank, &d2) in realization.squared_distances(k).iter().enumerate() {
            let id = BsId { tier: k, rank };
            if id == serving {
                continue;
            }
            candidates.push((tier.avg_power(d2), id));
        }
    }
    if candidates.len() < l {
        return Err(AssociationError::InsufficientCandidates {
            available: candidates.len(),
            requested: l,
        });
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then_with(|| (a.1.tier, a.1.rank).cmp(&(b.1.tier, b.1.rank)))
    });
    Ok(CoordinationSet {
        serving,
        members: candidates[..l].iter().map(|&(_, id)| id).collect(),
        policy,
    })
}

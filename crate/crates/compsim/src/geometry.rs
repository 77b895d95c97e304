//! Per-tier PPP geometry, sampled as squared distances to the origin.
//!
//! For a planar PPP of intensity lambda, the squared distances of its points
//! to the origin form a one-dimensional PPP of rate pi * lambda, so the
//! ascending squared distances are cumulative sums of independent exponential
//! increments. Every downstream quantity depends on distances only, so planar
//! coordinates are never materialized.
//!
//! The infinite field is truncated after a fixed number of points per tier;
//! the mean of the residual interference beyond the truncation radius is
//! stored per tier so the SIR denominator can be compensated (mean only, no
//! variance — a documented approximation).

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::model::{NetworkConfig, TierConfig};

/// Squared distances from the origin to the sampled BSs of every tier.
#[derive(Debug, Clone)]
pub struct SpatialRealization {
    per_tier: Vec<Vec<f64>>,
    tail_mean: Vec<f64>,
}

impl SpatialRealization {
    /// Sample `truncation_points_per_tier` points for every tier.
    pub fn sample(net: &NetworkConfig, rng: &mut impl Rng) -> Self {
        let per_tier = net
            .tiers
            .iter()
            .map(|t| sample_tier_distances(t.density_per_m2, net.truncation_points_per_tier, rng))
            .collect();
        Self::from_squared_distances(per_tier, &net.tiers, net.tail_compensation)
    }

    /// Build a realization from explicit ascending squared distances.
    ///
    /// Tail means are recomputed from the last sampled point of each tier
    /// (zero when compensation is disabled).
    pub fn from_squared_distances(
        per_tier: Vec<Vec<f64>>,
        tiers: &[TierConfig],
        tail_compensation: bool,
    ) -> Self {
        assert_eq!(per_tier.len(), tiers.len());
        for list in &per_tier {
            debug_assert!(list.windows(2).all(|w| w[0] < w[1]), "distances must ascend");
            debug_assert!(list.iter().all(|&d| d > 0.0));
        }
        let tail_mean = per_tier
            .iter()
            .zip(tiers)
            .map(|(list, tier)| {
                if tail_compensation {
                    let radius = list.last().expect("non-empty tier").sqrt();
                    tail_mean_interference(tier.density_per_m2, tier.pathloss, radius)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            per_tier,
            tail_mean,
        }
    }

    pub fn num_tiers(&self) -> usize {
        self.per_tier.len()
    }

    /// Ascending squared distances (m^2) of tier `k`.
    pub fn squared_distances(&self, k: usize) -> &[f64] {
        &self.per_tier[k]
    }

    /// Expected residual interference of tier `k` beyond its last sampled
    /// point, per unit transmit power.
    pub fn tail_mean(&self, k: usize) -> f64 {
        self.tail_mean[k]
    }
}

/// Squared nearest distance of a planar PPP: one exponential increment.
pub fn sample_nearest_squared(density: f64, rng: &mut impl Rng) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / (std::f64::consts::PI * density)
}

/// The `count` smallest squared distances of a planar PPP with the given
/// intensity, as cumulative sums of exponential increments of rate
/// pi * density.
pub fn sample_tier_distances(density: f64, count: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(density > 0.0 && count >= 1);
    let rate = std::f64::consts::PI * density;
    let mut increments = Vec::with_capacity(count);
    for _ in 0..count {
        let e: f64 = Exp1.sample(rng);
        increments.push(e / rate);
    }
    accumulate_increments(increments)
}

/// In-place cumulative sums; the deterministic core of
/// [`sample_tier_distances`].
pub fn accumulate_increments(mut increments: Vec<f64>) -> Vec<f64> {
    let mut acc = 0.0;
    for v in &mut increments {
        acc += *v;
        *v = acc;
    }
    increments
}

/// Intensity of the power-rescaled, superposed process in which every tier
/// transmits at the serving tier's power:
/// sum_k lambda_k (P_k / P_serving)^(2 / alpha_k).
pub fn equivalent_intensity(tiers: &[TierConfig], serving_tier: usize) -> f64 {
    let p_star = tiers[serving_tier].power_watts;
    tiers
        .iter()
        .map(|t| t.density_per_m2 * (t.power_watts / p_star).powf(2.0 / t.pathloss))
        .sum()
}

/// Mean normalized interference from all PPP points beyond `radius` (meters),
/// per unit transmit power and with unit-mean fading:
/// 2 pi density radius^(2 - pathloss) / (pathloss - 2).
pub fn tail_mean_interference(density: f64, pathloss: f64, radius: f64) -> f64 {
    assert!(pathloss > 2.0 && radius > 0.0);
    2.0 * std::f64::consts::PI * density * radius.powf(2.0 - pathloss) / (pathloss - 2.0)
}

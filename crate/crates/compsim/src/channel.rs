//! Effective fading gains, interference-cancellation factors, and the
//! end-user SIR for any cooperation-phase subset.
//!
//! Gains follow the unit-mean-per-complex-dimension convention: the serving
//! gain is a sum of (N - L) unit-mean exponentials (so E[1/S1] = 1/(N-L-1)),
//! every interferer gain is a single unit-mean exponential. Coordinated BSs
//! in the cooperation phase leak the fraction 2^(-B/(N-1)) of their
//! interference after quantized zero-forcing; everyone else leaks all of it.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use thiserror::Error;

use crate::association::CoordinationSet;
use crate::geometry::SpatialRealization;
use crate::model::TierConfig;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChannelError {
    #[error("zero-forcing requires >= 2 antennas, coordinated BS has {antennas}")]
    TooFewAntennas { antennas: usize },
}

/// One draw of effective fading gains for a whole realization.
///
/// `interferer_gains` covers every sampled point, including the serving slot;
/// SIR computations skip the serving entry and use `serving_gain` instead.
#[derive(Debug, Clone)]
pub struct GainDraw {
    pub serving_gain: f64,
    pub interferer_gains: Vec<Vec<f64>>,
}

/// Subset of the coordination set currently in the cooperation phase.
/// Bit j set means `members[j]` has received its updated overhead message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSubset {
    mask: u64,
    len: usize,
}

impl PhaseSubset {
    pub fn new(mask: u64, len: usize) -> Self {
        assert!(len <= 63 && mask < (1u64 << len));
        Self { mask, len }
    }

    pub fn empty(len: usize) -> Self {
        Self::new(0, len)
    }

    pub fn full(len: usize) -> Self {
        Self::new(if len == 0 { 0 } else { (1u64 << len) - 1 }, len)
    }

    pub fn contains(&self, member: usize) -> bool {
        debug_assert!(member < self.len);
        self.mask >> member & 1 == 1
    }

    pub fn cardinality(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }
}

/// Interference cancellation factor of one BS.
///
/// `cooperating` means a coordinated member in the cooperation phase; members
/// still waiting for their overhead message and non-members leak everything.
pub fn rho_factor(cooperating: bool, bits: u32, antennas: usize) -> Result<f64, ChannelError> {
    if !cooperating {
        return Ok(1.0);
    }
    if antennas < 2 {
        return Err(ChannelError::TooFewAntennas { antennas });
    }
    Ok(2f64.powf(-(bits as f64) / (antennas as f64 - 1.0)))
}

fn member_rho(tier: &TierConfig) -> Result<f64, ChannelError> {
    rho_factor(true, tier.feedback_bits, tier.antennas)
}

/// Draw gains for a realization: serving gain with `serving_dof` unit-mean
/// exponential summands, one unit-mean exponential per sampled point.
pub fn draw_gains_with_dof(
    realization: &SpatialRealization,
    serving_dof: usize,
    rng: &mut impl Rng,
) -> GainDraw {
    assert!(serving_dof >= 1, "serving gain needs positive degrees of freedom");
    let gamma = Gamma::new(serving_dof as f64, 1.0).expect("valid gamma parameters");
    let serving_gain = gamma.sample(rng);
    let interferer_gains = (0..realization.num_tiers())
        .map(|k| {
            realization
                .squared_distances(k)
                .iter()
                .map(|_| Exp1.sample(rng))
                .collect()
        })
        .collect();
    GainDraw {
        serving_gain,
        interferer_gains,
    }
}

/// Draw gains for a coordination set: the serving BS spends one beamforming
/// dimension per coordinated cell, leaving N - L for its own link.
pub fn draw_gains(
    realization: &SpatialRealization,
    tiers: &[TierConfig],
    coordset: &CoordinationSet,
    rng: &mut impl Rng,
) -> GainDraw {
    let n = tiers[coordset.serving.tier].antennas;
    let l = coordset.members.len();
    assert!(n > l, "serving antennas must exceed the coordinated count");
    draw_gains_with_dof(realization, n - l, rng)
}

/// End-user SIR for the given cooperation-phase subset.
///
/// Numerator: serving power times serving gain. Denominator: every other
/// sampled BS with its cancellation factor, plus the per-tier tail
/// compensation (power-weighted mean of the unsampled residual field).
pub fn compute_sir(
    realization: &SpatialRealization,
    tiers: &[TierConfig],
    coordset: &CoordinationSet,
    subset: &PhaseSubset,
    gains: &GainDraw,
) -> f64 {
    assert_eq!(subset.len(), coordset.members.len());
    let serving = coordset.serving;
    let d2 = realization.squared_distances(serving.tier)[serving.rank];
    let numerator = tiers[serving.tier].avg_power(d2) * gains.serving_gain;

    let mut denominator = 0.0;
    for (k, tier) in tiers.iter().enumerate() {
        for (rank, &d2) in realization.squared_distances(k).iter().enumerate() {
            if k == serving.tier && rank == serving.rank {
                continue;
            }
            let member_idx = coordset
                .members
                .iter()
                .position(|m| m.tier == k && m.rank == rank);
            let rho = match member_idx {
                Some(j) if subset.contains(j) => {
                    member_rho(tier).expect("validated config: members need >= 2 antennas")
                }
                _ => 1.0,
            };
            denominator += tier.avg_power(d2) * rho * gains.interferer_gains[k][rank];
        }
        denominator += tier.power_watts * realization.tail_mean(k);
    }
    numerator / denominator
}

/// Normalized one-tier interference with the nearest `m` BSs removed:
/// sum over sampled ranks i > m of S_i |X_i|^(-alpha), plus the tail mean.
pub fn interference_removed_m(
    realization: &SpatialRealization,
    tiers: &[TierConfig],
    gains: &GainDraw,
    m: usize,
) -> f64 {
    assert_eq!(realization.num_tiers(), 1, "defined for one-tier realizations");
    let alpha = tiers[0].pathloss;
    let mut total = realization.tail_mean(0);
    for (rank, &d2) in realization.squared_distances(0).iter().enumerate().skip(m) {
        total += d2.powf(-alpha / 2.0) * gains.interferer_gains[0][rank];
    }
    total
}

/// Precomputed per-trial terms so all 2^L subset SIRs reuse one realization
/// and one gain draw (common random numbers).
#[derive(Debug, Clone)]
pub struct SubsetSirEvaluator {
    numerator: f64,
    nonmember_sum: f64,
    member_terms: Vec<f64>,
    member_rhos: Vec<f64>,
}

impl SubsetSirEvaluator {
    pub fn new(
        realization: &SpatialRealization,
        tiers: &[TierConfig],
        coordset: &CoordinationSet,
        gains: &GainDraw,
    ) -> Result<Self, ChannelError> {
        let serving = coordset.serving;
        let d2 = realization.squared_distances(serving.tier)[serving.rank];
        let numerator = tiers[serving.tier].avg_power(d2) * gains.serving_gain;

        let mut member_terms = vec![0.0; coordset.members.len()];
        let mut member_rhos = vec![1.0; coordset.members.len()];
        for (j, m) in coordset.members.iter().enumerate() {
            member_rhos[j] = member_rho(&tiers[m.tier])?;
        }

        let mut nonmember_sum = 0.0;
        for (k, tier) in tiers.iter().enumerate() {
            for (rank, &d2) in realization.squared_distances(k).iter().enumerate() {
                if k == serving.tier && rank == serving.rank {
                    continue;
                }
                let term = tier.avg_power(d2) * gains.interferer_gains[k][rank];
                match coordset
                    .members
                    .iter()
                    .position(|m| m.tier == k && m.rank == rank)
                {
                    Some(j) => member_terms[j] = term,
                    None => nonmember_sum += term,
                }
            }
            nonmember_sum += tier.power_watts * realization.tail_mean(k);
        }
        Ok(Self {
            numerator,
            nonmember_sum,
            member_terms,
            member_rhos,
        })
    }

    pub fn num_members(&self) -> usize {
        self.member_terms.len()
    }

    /// SIR for one cooperation-phase subset.
    pub fn sir(&self, subset: &PhaseSubset) -> f64 {
        debug_assert_eq!(subset.len(), self.member_terms.len());
        let mut denominator = self.nonmember_sum;
        for (j, &term) in self.member_terms.iter().enumerate() {
            let rho = if subset.contains(j) {
                self.member_rhos[j]
            } else {
                1.0
            };
            denominator += rho * term;
        }
        self.numerator / denominator
    }
}

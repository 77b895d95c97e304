//! Network and experiment configuration shared by every other module.
//!
//! All physical quantities are SI: powers in watts, densities in BSs per
//! square meter, times in seconds. dB values appear only in the experiment
//! file schema and are converted to linear scale exactly once, here.

use serde::{Deserialize, Serialize};

/// One tier of base stations (macro, pico, femto, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierConfig {
    /// Transmit power in watts.
    pub power_watts: f64,
    /// Transmit antennas per BS.
    pub antennas: usize,
    /// Path-loss exponent; must exceed 2 for a finite interference field.
    pub pathloss: f64,
    /// Spatial density in BSs per square meter.
    pub density_per_m2: f64,
    /// Feedback bits used by every coordinated BS of this tier.
    pub feedback_bits: u32,
}

impl TierConfig {
    /// Long-term average received power at the origin from a BS of this tier
    /// at squared distance `d2` (m^2).
    pub fn avg_power(&self, d2: f64) -> f64 {
        self.power_watts * d2.powf(-self.pathloss / 2.0)
    }
}

/// Which cells are admissible as coordination candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinationPolicy {
    /// The L strongest interferers from any tier.
    CrossTier,
    /// The L strongest interferers from the serving tier only.
    IntraTier,
}

/// The K-tier network plus sampling controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub tiers: Vec<TierConfig>,
    /// Number of coordinated cells L.
    pub num_coordinated: usize,
    pub coordination_policy: CoordinationPolicy,
    /// When set, realizations are rejected until the max-average-power
    /// serving BS belongs to this tier.
    #[serde(default)]
    pub condition_serving_tier: Option<usize>,
    /// Sampled points per tier for the truncated interference field.
    #[serde(default = "default_truncation")]
    pub truncation_points_per_tier: usize,
    /// Add the expected residual interference beyond the truncation radius.
    #[serde(default = "default_tail_compensation")]
    pub tail_compensation: bool,
}

fn default_truncation() -> usize {
    200
}

fn default_tail_compensation() -> bool {
    true
}

impl NetworkConfig {
    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// Same network with a different number of coordinated cells.
    pub fn with_num_coordinated(&self, l: usize) -> Self {
        let mut out = self.clone();
        out.num_coordinated = l;
        out
    }

    /// Same network with a different coordination policy.
    pub fn with_policy(&self, policy: CoordinationPolicy) -> Self {
        let mut out = self.clone();
        out.coordination_policy = policy;
        out
    }
}

/// SIR-to-rate mapping. Linear units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMapping {
    /// Fixed-rate user: `target_rate` when the SIR reaches `target_sir`, else 0.
    FixedTarget { target_sir: f64, target_rate: f64 },
    /// Data-greedy user: log2(1 + sir / gap).
    ShannonGap { gap: f64 },
}

impl RateMapping {
    pub fn fixed_from_db(target_sir_db: f64, target_rate: f64) -> Self {
        RateMapping::FixedTarget {
            target_sir: db_to_linear(target_sir_db),
            target_rate,
        }
    }

    pub fn shannon_from_db(gap_db: f64) -> Self {
        RateMapping::ShannonGap {
            gap: db_to_linear(gap_db),
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        match *self {
            RateMapping::FixedTarget {
                target_sir,
                target_rate,
            } => {
                if target_sir <= 0.0 {
                    v.push(format!("target_sir must be positive, got {target_sir}"));
                }
                if target_rate <= 0.0 {
                    v.push(format!("target_rate must be positive, got {target_rate}"));
                }
            }
            RateMapping::ShannonGap { gap } => {
                if gap < 1.0 {
                    v.push(format!("shannon_gap must be >= 1 (linear), got {gap}"));
                }
            }
        }
        v
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Check every invariant of a network configuration.
///
/// Violations are data, not faults: a valid config yields an empty list, and
/// every config accepted here is accepted by all downstream operations.
pub fn validate(config: &NetworkConfig) -> Vec<String> {
    let mut violations = Vec::new();
    if config.tiers.is_empty() {
        violations.push("at least one tier is required".to_string());
    }
    for (k, tier) in config.tiers.iter().enumerate() {
        // NaN-rejecting comparisons: a non-finite field is a violation too
        if tier.power_watts <= 0.0 || tier.power_watts.is_nan() {
            violations.push(format!("tier {k}: power must be positive"));
        }
        if tier.density_per_m2 <= 0.0 || tier.density_per_m2.is_nan() {
            violations.push(format!("tier {k}: density must be positive"));
        }
        if tier.antennas < 1 {
            violations.push(format!("tier {k}: antennas must be >= 1"));
        }
        if tier.pathloss <= 2.0 || tier.pathloss.is_nan() {
            violations.push(format!(
                "tier {k}: pathloss must exceed 2 (got {}); the aggregate interference diverges otherwise",
                tier.pathloss
            ));
        }
    }
    if let Some(k) = config.condition_serving_tier {
        if k >= config.tiers.len() {
            violations.push(format!(
                "condition_serving_tier {k} is out of range (have {} tiers)",
                config.tiers.len()
            ));
        }
    }
    // The serving BS spends L beamforming dimensions on nulling; its
    // effective signal gain needs N - L > 0 degrees of freedom.
    for (k, tier) in config.tiers.iter().enumerate() {
        let can_serve = match config.condition_serving_tier {
            Some(target) => k == target,
            None => true,
        };
        if can_serve && config.num_coordinated >= tier.antennas {
            violations.push(format!(
                "num_coordinated must be < serving antennas (tier {k}: L = {} >= N = {})",
                config.num_coordinated, tier.antennas
            ));
        }
    }
    // Coordinated members null toward the end-user, which takes a spare
    // antenna dimension at the member itself.
    if config.num_coordinated >= 1 {
        for (k, tier) in config.tiers.iter().enumerate() {
            let can_coordinate = match config.coordination_policy {
                CoordinationPolicy::CrossTier => true,
                CoordinationPolicy::IntraTier => match config.condition_serving_tier {
                    Some(target) => k == target,
                    None => true,
                },
            };
            if can_coordinate && tier.antennas < 2 {
                violations.push(format!(
                    "tier {k}: coordination requires >= 2 antennas per coordinated BS"
                ));
            }
        }
    }
    if config.truncation_points_per_tier < 1 {
        violations.push("truncation_points_per_tier must be >= 1".to_string());
    }
    violations
}

/// Coherence-block description as written in experiment files (ms units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceConfig {
    pub mean_ms: f64,
    pub shape: ShapeConfig,
}

/// Either the string `"deterministic"` or a positive integer gamma shape M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeConfig {
    GammaShape(u32),
    Named(String),
}

/// Overhead-delay description as written in experiment files (ms units):
/// a fixed offset plus `stages` equal-rate exponential backhaul servers
/// whose rates are chosen to hit `mean_ms` in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub stages: usize,
    pub mean_ms: f64,
    #[serde(default)]
    pub fixed_offset_ms: f64,
}

/// Root of the experiment file (JSON). See the README for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub coherence: CoherenceConfig,
    pub delay: DelayConfig,
    pub target_sir_db: f64,
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    pub shannon_gap_db: f64,
    #[serde(default = "default_delay_sweep_means")]
    pub delay_sweep_means_ms: Vec<f64>,
    #[serde(default = "default_l_sweep_values")]
    pub l_sweep_values: Vec<usize>,
}

fn default_target_rate() -> f64 {
    1.0
}

fn default_delay_sweep_means() -> Vec<f64> {
    vec![0.0, 10.0, 20.0, 40.0, 48.0, 60.0, 80.0]
}

fn default_l_sweep_values() -> Vec<usize> {
    vec![0, 1, 2, 3, 4, 5]
}

impl ExperimentConfig {
    pub fn coverage_mapping(&self) -> RateMapping {
        RateMapping::fixed_from_db(self.target_sir_db, self.target_rate)
    }

    pub fn throughput_mapping(&self) -> RateMapping {
        RateMapping::shannon_from_db(self.shannon_gap_db)
    }

    /// Every violated invariant across the whole experiment description.
    pub fn validate(&self) -> Vec<String> {
        let mut v = validate(&self.network);
        v.extend(self.coverage_mapping().validate());
        v.extend(self.throughput_mapping().validate());
        if self.coherence.mean_ms <= 0.0 || self.coherence.mean_ms.is_nan() {
            v.push("coherence.mean_ms must be positive".to_string());
        }
        match &self.coherence.shape {
            ShapeConfig::GammaShape(m) if *m >= 1 => {}
            ShapeConfig::GammaShape(m) => {
                v.push(format!("coherence.shape must be >= 1, got {m}"));
            }
            ShapeConfig::Named(s) if s == "deterministic" => {}
            ShapeConfig::Named(s) => {
                v.push(format!(
                    "coherence.shape must be a positive integer or \"deterministic\", got \"{s}\""
                ));
            }
        }
        if self.delay.mean_ms < 0.0 || self.delay.fixed_offset_ms < 0.0 {
            v.push("delay means and offsets must be non-negative".to_string());
        }
        if self.delay.mean_ms < self.delay.fixed_offset_ms {
            v.push("delay.mean_ms must be >= delay.fixed_offset_ms".to_string());
        }
        if self.delay.stages == 0 && self.delay.mean_ms > self.delay.fixed_offset_ms {
            v.push("delay.stages = 0 cannot reach a mean above the fixed offset".to_string());
        }
        for &m in &self.delay_sweep_means_ms {
            if m < 0.0 {
                v.push(format!("delay_sweep_means_ms entry {m} is negative"));
            }
        }
        v
    }
}

//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use compsim::model::{CoordinationPolicy, NetworkConfig, RateMapping, TierConfig};

/// Macro / pico / femto reference network: serving conditioned on the macro
/// tier, feedback bits 3(N_k - 1) per tier.
pub fn table1_network(l: usize) -> NetworkConfig {
    NetworkConfig {
        tiers: vec![
            TierConfig {
                power_watts: 40.0,
                antennas: 8,
                pathloss: 4.0,
                density_per_m2: 1e-6,
                feedback_bits: 21,
            },
            TierConfig {
                power_watts: 2.0,
                antennas: 4,
                pathloss: 3.5,
                density_per_m2: 1e-5,
                feedback_bits: 9,
            },
            TierConfig {
                power_watts: 0.2,
                antennas: 2,
                pathloss: 3.0,
                density_per_m2: 1e-4,
                feedback_bits: 3,
            },
        ],
        num_coordinated: l,
        coordination_policy: CoordinationPolicy::CrossTier,
        condition_serving_tier: Some(0),
        truncation_points_per_tier: 200,
        tail_compensation: true,
    }
}

/// Single-tier network with N = 8, alpha = 4 and B = 3(N - 1).
pub fn onetier_network(l: usize, density: f64) -> NetworkConfig {
    NetworkConfig {
        tiers: vec![TierConfig {
            power_watts: 1.0,
            antennas: 8,
            pathloss: 4.0,
            density_per_m2: density,
            feedback_bits: 21,
        }],
        num_coordinated: l,
        coordination_policy: CoordinationPolicy::CrossTier,
        condition_serving_tier: None,
        truncation_points_per_tier: 200,
        tail_compensation: true,
    }
}

pub fn coverage_mapping() -> RateMapping {
    RateMapping::fixed_from_db(3.0, 1.0)
}

pub fn shannon_mapping() -> RateMapping {
    RateMapping::shannon_from_db(3.0)
}

/// Print one pass/fail line and fail the test afterwards if needed.
pub fn report(name: &str, failures: &[String], detail: &str) {
    if failures.is_empty() {
        println!("[PASS] {name}: {detail}");
    } else {
        println!("[FAIL] {name}: {}", failures.join(" | "));
        panic!("{name} failed:\n{}", failures.join("\n"));
    }
}

/// Two-sample Kolmogorov distance.
pub fn ks_distance(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut ks: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        ks = ks.max((fa - fb).abs());
    }
    ks
}

//! Long-term coverage and throughput estimation, plus the experiment
//! drivers behind the CLI.
//!
//! The long-term rate of the end-user is the subset-weighted average
//! sum_{B subset of members} p_B R(gamma_B): each coordinated BS is in the
//! cooperation phase independently with its time fraction tau, p_B is the
//! product measure over the 2^L phase states, and gamma_B reuses one spatial
//! realization and one gain draw per trial across every subset (common
//! random numbers). Trials run on independent, seed-derived streams and are
//! reduced in trial order, so results are reproducible bit for bit no matter
//! how the work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    dominance_constant, lb_cdf_1tier, lb_cdf_ktier, ub_cdf_1tier, ub_cdf_ktier, BoundQuery,
    DomainFault,
};
use crate::association::{select_coordination_set, select_serving, AssociationError, BsId};
use crate::channel::{
    draw_gains_with_dof, rho_factor, ChannelError, PhaseSubset, SubsetSirEvaluator,
};
use crate::geometry::{sample_nearest_squared, sample_tier_distances, SpatialRealization};
use crate::model::{validate, NetworkConfig, RateMapping};
use crate::overhead::{
    subset_probability, time_fraction_analytic, CoherenceModel, DelayModel, OverheadError,
    TauEstimator, TimeFractions,
};

/// Rejection-sampling budget per trial when conditioning on the serving tier.
const MAX_CONDITION_ATTEMPTS: u64 = 1_000_000;
/// Stream id reserved for time-fraction estimation (trials use 0..trials).
const TAU_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration:\n{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Association(#[from] AssociationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Overhead(#[from] OverheadError),
    #[error("conditioning on serving tier {tier} was not accepted within {attempts} attempts")]
    ConditioningTooRare { tier: usize, attempts: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Coverage,
    Throughput,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Coverage => write!(f, "coverage"),
            Metric::Throughput => write!(f, "throughput"),
        }
    }
}

/// A Monte Carlo estimate. Coverage means live in [0, 1] (the fixed-target
/// throughput normalized by the target rate); throughput is bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub metric: Metric,
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub config_digest: String,
}

impl EvalResult {
    /// Bit-level equality of the estimates (field-for-field).
    pub fn bitwise_eq(&self, other: &EvalResult) -> bool {
        self.metric == other.metric
            && self.mean.to_bits() == other.mean.to_bits()
            && self.std_error.to_bits() == other.std_error.to_bits()
            && self.trials == other.trials
            && self.seed == other.seed
            && self.config_digest == other.config_digest
    }
}

/// Fixed-target mapping: the target rate when the SIR reaches the target,
/// zero otherwise (boundary included).
pub fn rate_coverage(sir: f64, mapping: &RateMapping) -> f64 {
    match *mapping {
        RateMapping::FixedTarget {
            target_sir,
            target_rate,
        } => {
            if sir >= target_sir {
                target_rate
            } else {
                0.0
            }
        }
        _ => panic!("rate_coverage needs a FixedTarget mapping"),
    }
}

/// Gap-adjusted Shannon mapping: log2(1 + sir / gap) bits/s/Hz.
pub fn rate_shannon(sir: f64, mapping: &RateMapping) -> f64 {
    match *mapping {
        RateMapping::ShannonGap { gap } => (1.0 + sir / gap).log2(),
        _ => panic!("rate_shannon needs a ShannonGap mapping"),
    }
}

fn rate(sir: f64, mapping: &RateMapping) -> f64 {
    match mapping {
        RateMapping::FixedTarget { .. } => rate_coverage(sir, mapping),
        RateMapping::ShannonGap { .. } => rate_shannon(sir, mapping),
    }
}

fn metric_of(mapping: &RateMapping) -> Metric {
    match mapping {
        RateMapping::FixedTarget { .. } => Metric::Coverage,
        RateMapping::ShannonGap { .. } => Metric::Throughput,
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn tau_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TAU_STREAM);
    rng
}

/// Sample a realization, rejecting until the serving BS lands in the
/// conditioned tier. Only the per-tier nearest points are drawn to decide
/// acceptance; the accepted attempt is then extended to the full truncation
/// count (the later points are independent of the acceptance event).
fn sample_realization(
    net: &NetworkConfig,
    rng: &mut impl Rng,
) -> Result<SpatialRealization, EvalError> {
    let Some(target) = net.condition_serving_tier else {
        return Ok(SpatialRealization::sample(net, rng));
    };
    let count = net.truncation_points_per_tier;
    let mut firsts = vec![0.0; net.tiers.len()];
    for _ in 0..MAX_CONDITION_ATTEMPTS {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, tier) in net.tiers.iter().enumerate() {
            let d2 = sample_nearest_squared(tier.density_per_m2, rng);
            firsts[k] = d2;
            let p = tier.avg_power(d2);
            if p > best.1 {
                best = (k, p);
            }
        }
        if best.0 != target {
            continue;
        }
        let per_tier: Vec<Vec<f64>> = net
            .tiers
            .iter()
            .enumerate()
            .map(|(k, tier)| {
                let mut v = Vec::with_capacity(count);
                v.push(firsts[k]);
                if count > 1 {
                    for d in sample_tier_distances(tier.density_per_m2, count - 1, rng) {
                        v.push(firsts[k] + d);
                    }
                }
                v
            })
            .collect();
        return Ok(SpatialRealization::from_squared_distances(
            per_tier,
            &net.tiers,
            net.tail_compensation,
        ));
    }
    Err(EvalError::ConditioningTooRare {
        tier: target,
        attempts: MAX_CONDITION_ATTEMPTS,
    })
}

struct TrialPieces {
    evaluator: SubsetSirEvaluator,
    num_members: usize,
}

fn trial_pieces(
    net: &NetworkConfig,
    serving_dof_override: Option<usize>,
    rng: &mut impl Rng,
) -> Result<TrialPieces, EvalError> {
    let realization = sample_realization(net, rng)?;
    let (k, _) = select_serving(&realization, &net.tiers);
    let serving = BsId { tier: k, rank: 0 };
    let coordset = select_coordination_set(
        &realization,
        &net.tiers,
        net.num_coordinated,
        net.coordination_policy,
        serving,
    )?;
    let dof =
        serving_dof_override.unwrap_or(net.tiers[k].antennas - coordset.members.len());
    let gains = draw_gains_with_dof(&realization, dof, rng);
    let evaluator = SubsetSirEvaluator::new(&realization, &net.tiers, &coordset, &gains)?;
    Ok(TrialPieces {
        num_members: coordset.members.len(),
        evaluator,
    })
}

#[derive(Serialize)]
struct DigestInput<'a> {
    net: &'a NetworkConfig,
    taus: &'a [f64],
    serving_dof: Option<usize>,
    mapping: &'a RateMapping,
    trials: u64,
}

fn config_digest(input: &DigestInput) -> String {
    let bytes = serde_json::to_vec(input).expect("config serializes");
    let hash = Sha256::digest(&bytes);
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn validated(net: &NetworkConfig) -> Result<(), EvalError> {
    let violations = validate(net);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(EvalError::InvalidConfig(violations.join("\n")))
    }
}

fn summarize(
    values: impl Iterator<Item = f64> + Clone,
    trials: u64,
    normalize: f64,
) -> (f64, f64) {
    let n = trials as f64;
    let mean: f64 = values.clone().sum::<f64>() / n;
    let var: f64 = if trials > 1 {
        values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ((mean / normalize), (var / n).sqrt() / normalize)
}

/// Core estimator: run `trials` independent trials with explicit per-member
/// time fractions and average sum_B p_B R(gamma_B) for every mapping at once.
///
/// `serving_dof_override` pins the serving gain's degrees of freedom (the
/// no-coordination baseline uses the full N; a run that pays the beamforming
/// cost without any members uses N - L).
pub fn run_with_taus(
    net: &NetworkConfig,
    taus: &TimeFractions,
    serving_dof_override: Option<usize>,
    mappings: &[RateMapping],
    trials: u64,
    seed: u64,
) -> Result<Vec<EvalResult>, EvalError> {
    validated(net)?;
    assert_eq!(
        taus.len(),
        net.num_coordinated,
        "one time fraction per coordinated BS"
    );
    assert!(trials >= 1);
    let l = net.num_coordinated;
    let p_table: Vec<f64> = (0..(1u64 << l))
        .map(|mask| subset_probability(taus, &PhaseSubset::new(mask, l)))
        .collect();

    let per_trial: Result<Vec<Vec<f64>>, EvalError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let pieces = trial_pieces(net, serving_dof_override, &mut rng)?;
            let mut out = vec![0.0; mappings.len()];
            for mask in 0..(1u64 << pieces.num_members) {
                let sir = pieces.evaluator.sir(&PhaseSubset::new(mask, pieces.num_members));
                let p = p_table[mask as usize];
                for (mi, mapping) in mappings.iter().enumerate() {
                    out[mi] += p * rate(sir, mapping);
                }
            }
            Ok(out)
        })
        .collect();
    let per_trial = per_trial?;

    Ok(mappings
        .iter()
        .enumerate()
        .map(|(mi, mapping)| {
            let normalize = match *mapping {
                RateMapping::FixedTarget { target_rate, .. } => target_rate,
                _ => 1.0,
            };
            let (mean, std_error) =
                summarize(per_trial.iter().map(move |v| v[mi]), trials, normalize);
            EvalResult {
                metric: metric_of(mapping),
                mean,
                std_error,
                trials,
                seed,
                config_digest: config_digest(&DigestInput {
                    net,
                    taus: taus.values(),
                    serving_dof: serving_dof_override,
                    mapping,
                    trials,
                }),
            }
        })
        .collect())
}

/// Like [`run_with_taus`] for a single mapping, also returning the raw
/// per-trial, per-subset rates R(gamma_B) for post-hoc identities.
pub fn run_logged(
    net: &NetworkConfig,
    taus: &TimeFractions,
    mapping: &RateMapping,
    trials: u64,
    seed: u64,
) -> Result<(EvalResult, Vec<Vec<f64>>), EvalError> {
    validated(net)?;
    assert_eq!(taus.len(), net.num_coordinated);
    let l = net.num_coordinated;
    let p_table: Vec<f64> = (0..(1u64 << l))
        .map(|mask| subset_probability(taus, &PhaseSubset::new(mask, l)))
        .collect();
    let logged: Result<Vec<Vec<f64>>, EvalError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let pieces = trial_pieces(net, None, &mut rng)?;
            Ok((0..(1u64 << l))
                .map(|mask| rate(pieces.evaluator.sir(&PhaseSubset::new(mask, l)), mapping))
                .collect())
        })
        .collect();
    let logged = logged?;
    let normalize = match *mapping {
        RateMapping::FixedTarget { target_rate, .. } => target_rate,
        _ => 1.0,
    };
    let (mean, std_error) = summarize(
        logged.iter().map(|rates| {
            let mut acc = 0.0;
            for (mask, r) in rates.iter().enumerate() {
                acc += p_table[mask] * r;
            }
            acc
        }),
        trials,
        normalize,
    );
    let result = EvalResult {
        metric: metric_of(mapping),
        mean,
        std_error,
        trials,
        seed,
        config_digest: config_digest(&DigestInput {
            net,
            taus: taus.values(),
            serving_dof: None,
            mapping,
            trials,
        }),
    };
    Ok((result, logged))
}

/// Uniform closed-form time fraction for one overhead configuration.
pub fn analytic_taus(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    delay: &DelayModel,
    seed: u64,
) -> TimeFractions {
    let tau = time_fraction_analytic(coherence, delay, &mut tau_rng(seed));
    TimeFractions::uniform(tau, net.num_coordinated, TauEstimator::Analytic)
}

/// Long-term estimate for every mapping under one overhead configuration.
pub fn evaluate_mappings(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    delay: &DelayModel,
    mappings: &[RateMapping],
    trials: u64,
    seed: u64,
) -> Result<Vec<EvalResult>, EvalError> {
    let taus = analytic_taus(net, coherence, delay, seed);
    run_with_taus(net, &taus, None, mappings, trials, seed)
}

/// Long-term estimate for one mapping (closed-form time fractions).
pub fn long_term_throughput(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    delay: &DelayModel,
    mapping: &RateMapping,
    trials: u64,
    seed: u64,
) -> Result<EvalResult, EvalError> {
    Ok(evaluate_mappings(net, coherence, delay, std::slice::from_ref(mapping), trials, seed)?
        .pop()
        .expect("one mapping in, one result out"))
}

/// Delay-free reference: every coordinated BS is always cooperating, i.e.
/// the full subset carries probability one.
pub fn ideal_throughput(
    net: &NetworkConfig,
    mapping: &RateMapping,
    trials: u64,
    seed: u64,
) -> Result<EvalResult, EvalError> {
    let taus = TimeFractions::uniform(1.0, net.num_coordinated, TauEstimator::Analytic);
    Ok(
        run_with_taus(net, &taus, None, std::slice::from_ref(mapping), trials, seed)?
            .pop()
            .expect("one mapping in, one result out"),
    )
}

/// One row of a delay sweep: the CoMP estimates at a given mean overhead
/// delay plus the shared no-CoMP baseline (L = 0, full-N serving gain).
#[derive(Debug, Clone)]
pub struct DelaySweepRow {
    pub mean_delay_s: f64,
    pub tau: f64,
    pub results: Vec<EvalResult>,
    pub baselines: Vec<EvalResult>,
}

/// Sweep the mean overhead delay by uniformly rescaling the backhaul stage
/// rates; a zero mean drops the stochastic stages entirely.
pub fn delay_sweep(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    base_delay: &DelayModel,
    mappings: &[RateMapping],
    delay_means_s: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<DelaySweepRow>, EvalError> {
    let baseline_net = net.with_num_coordinated(0);
    let baseline_taus = TimeFractions::uniform(1.0, 0, TauEstimator::Analytic);
    let baselines = run_with_taus(&baseline_net, &baseline_taus, None, mappings, trials, seed)?;
    let mut rows = Vec::with_capacity(delay_means_s.len());
    for &mean in delay_means_s {
        let delay = base_delay.scaled_to_mean(mean)?;
        let taus = analytic_taus(net, coherence, &delay, seed);
        let tau = taus.values().first().copied().unwrap_or(1.0);
        let results = run_with_taus(net, &taus, None, mappings, trials, seed)?;
        rows.push(DelaySweepRow {
            mean_delay_s: mean,
            tau,
            results,
            baselines: baselines.clone(),
        });
    }
    Ok(rows)
}

/// One row of a coordination-count sweep.
#[derive(Debug, Clone)]
pub struct LSweepRow {
    pub l: usize,
    pub results: Vec<EvalResult>,
}

/// Sweep the number of coordinated cells under one overhead configuration;
/// L = 0 rows are the no-CoMP baseline. Realizations are shared across L
/// through the common seed.
pub fn l_sweep(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    delay: &DelayModel,
    mappings: &[RateMapping],
    l_values: &[usize],
    trials: u64,
    seed: u64,
) -> Result<Vec<LSweepRow>, EvalError> {
    let tau = time_fraction_analytic(coherence, delay, &mut tau_rng(seed));
    let mut rows = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let net_l = net.with_num_coordinated(l);
        let taus = TimeFractions::uniform(tau, l, TauEstimator::Analytic);
        let results = run_with_taus(&net_l, &taus, None, mappings, trials, seed)?;
        rows.push(LSweepRow { l, results });
    }
    Ok(rows)
}

/// Axis of an intra-tier-loss comparison.
#[derive(Debug, Clone)]
pub enum LossAxis {
    DelaySweep(Vec<f64>),
    LSweep(Vec<usize>),
}

/// One row of a cross- vs intra-tier comparison on shared seeds.
/// `loss` is (cross - intra) / cross per mapping; its standard error combines
/// the two run errors (conservative, since the paired runs are positively
/// correlated).
#[derive(Debug, Clone)]
pub struct LossRow {
    pub axis: f64,
    pub cross: Vec<EvalResult>,
    pub intra: Vec<EvalResult>,
    pub loss: Vec<f64>,
    pub loss_se: Vec<f64>,
}

/// Quantify what restricting coordination to the serving tier costs.
pub fn intratier_loss(
    net: &NetworkConfig,
    coherence: &CoherenceModel,
    base_delay: &DelayModel,
    mappings: &[RateMapping],
    axis: &LossAxis,
    trials: u64,
    seed: u64,
) -> Result<Vec<LossRow>, EvalError> {
    use crate::model::CoordinationPolicy;
    let mut rows = Vec::new();
    let points: Vec<(f64, NetworkConfig, DelayModel)> = match axis {
        LossAxis::DelaySweep(means) => means
            .iter()
            .map(|&m| Ok((m, net.clone(), base_delay.scaled_to_mean(m)?)))
            .collect::<Result<_, OverheadError>>()?,
        LossAxis::LSweep(ls) => ls
            .iter()
            .map(|&l| (l as f64, net.with_num_coordinated(l), base_delay.clone()))
            .collect(),
    };
    for (axis_value, point_net, delay) in points {
        let taus = analytic_taus(&point_net, coherence, &delay, seed);
        let cross = run_with_taus(
            &point_net.with_policy(CoordinationPolicy::CrossTier),
            &taus,
            None,
            mappings,
            trials,
            seed,
        )?;
        let intra = run_with_taus(
            &point_net.with_policy(CoordinationPolicy::IntraTier),
            &taus,
            None,
            mappings,
            trials,
            seed,
        )?;
        let mut loss = Vec::with_capacity(mappings.len());
        let mut loss_se = Vec::with_capacity(mappings.len());
        for (c, i) in cross.iter().zip(&intra) {
            if c.mean == i.mean {
                loss.push(0.0);
                loss_se.push(0.0);
            } else {
                loss.push((c.mean - i.mean) / c.mean);
                loss_se.push(
                    (c.std_error * c.std_error + i.std_error * i.std_error).sqrt() / c.mean,
                );
            }
        }
        rows.push(LossRow {
            axis: axis_value,
            cross,
            intra,
            loss,
            loss_se,
        });
    }
    Ok(rows)
}

/// Raw SIR samples of the full cooperation subset, one per trial.
pub fn sir_samples(net: &NetworkConfig, trials: u64, seed: u64) -> Result<Vec<f64>, EvalError> {
    validated(net)?;
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let pieces = trial_pieces(net, None, &mut rng)?;
            Ok(pieces
                .evaluator
                .sir(&PhaseSubset::full(pieces.num_members)))
        })
        .collect()
}

/// Paired one-tier interference samples: I_B with the `subset_size` strongest
/// interferers cancelling at `rho_min`, and the full field I_(0), from the
/// same draws. Both are normalized by the tier power.
pub fn dominance_samples(
    net: &NetworkConfig,
    subset_size: usize,
    rho_min: f64,
    trials: u64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    validated(net)?;
    assert_eq!(net.num_tiers(), 1, "dominance chain is a one-tier construction");
    assert!(rho_min > 0.0 && rho_min <= 1.0);
    let alpha = net.tiers[0].pathloss;
    let pairs: Result<Vec<(f64, f64)>, EvalError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let realization = sample_realization(net, &mut rng)?;
            let gains = draw_gains_with_dof(&realization, 1, &mut rng);
            let d2 = realization.squared_distances(0);
            let s = &gains.interferer_gains[0];
            let tail = realization.tail_mean(0);
            let mut i_b = tail;
            let mut i_0 = tail;
            for (rank, (&d2, &g)) in d2.iter().zip(s).enumerate() {
                let term = d2.powf(-alpha / 2.0) * g;
                i_0 += term;
                if rank == 0 {
                    continue; // serving BS is removed from I_B
                }
                let rho = if rank <= subset_size { rho_min } else { 1.0 };
                i_b += rho * term;
            }
            Ok((i_b, i_0))
        })
        .collect();
    Ok(pairs?.into_iter().unzip())
}

/// One row of the bounds-validation experiment.
#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub beta_db: f64,
    pub beta: f64,
    pub empirical_cdf: f64,
    pub empirical_se: f64,
    pub upper_bound: f64,
    pub lower_bound: Result<f64, DomainFault>,
    /// P(I_B > x) at this row's grid point (one-tier networks only).
    pub dominance_lhs: Option<f64>,
    /// P(c I_(0) > x) at the same grid point.
    pub dominance_rhs: Option<f64>,
    pub dominance_x: Option<f64>,
}

/// Empirical full-subset SIR CDF against the closed-form bounds on a dB grid,
/// plus (for one-tier networks) the dominance-chain survival comparison at
/// matched quantiles of c I_(0).
pub fn bounds_validation(
    net: &NetworkConfig,
    beta_db_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<BoundsRow>, EvalError> {
    validated(net)?;
    let serving_tier = match net.condition_serving_tier {
        Some(k) => k,
        None if net.num_tiers() == 1 => 0,
        None => {
            return Err(EvalError::InvalidConfig(
                "bounds validation on a multi-tier network needs condition_serving_tier \
                 so the analytical query has a fixed serving tier"
                    .to_string(),
            ))
        }
    };
    let tier = &net.tiers[serving_tier];
    let l = net.num_coordinated;
    let rho = rho_factor(true, tier.feedback_bits, tier.antennas)?;
    let rho_min = if l == 0 { 1.0 } else { rho };

    let mut sirs = sir_samples(net, trials, seed)?;
    sirs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let dominance = if net.num_tiers() == 1 {
        let (i_b, i_0) = dominance_samples(net, l, rho_min, trials, seed)?;
        let c = dominance_constant(l, tier.pathloss, rho_min);
        let mut scaled: Vec<f64> = i_0.iter().map(|v| c * v).collect();
        scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some((i_b, scaled))
    } else {
        None
    };

    let n = trials as f64;
    let rows = beta_db_grid
        .iter()
        .enumerate()
        .map(|(row, &beta_db)| {
            let beta = crate::model::db_to_linear(beta_db);
            let below = sirs.partition_point(|&s| s <= beta);
            let cdf = below as f64 / n;
            let se = (cdf * (1.0 - cdf) / n).sqrt();
            let query = BoundQuery {
                threshold: beta,
                subset_size: l,
                rho_list: vec![rho; l],
                rho_min,
                serving_antennas: tier.antennas,
                num_coordinated: l,
                pathloss: tier.pathloss,
            };
            let (upper_bound, lower_bound) = if net.num_tiers() == 1 {
                (ub_cdf_1tier(&query, 1e-10), lb_cdf_1tier(&query))
            } else {
                let overrides: Vec<(usize, usize, f64)> =
                    (2..=l + 1).map(|rank| (serving_tier, rank, rho)).collect();
                (
                    ub_cdf_ktier(&query, &net.tiers, serving_tier, &overrides, 1e-10),
                    lb_cdf_ktier(&query, &net.tiers, serving_tier),
                )
            };
            let (dominance_lhs, dominance_rhs, dominance_x) = match &dominance {
                Some((i_b, scaled)) => {
                    // quantile grid of c I_(0), one point per row
                    let q = (row + 1) as f64 / (beta_db_grid.len() + 1) as f64;
                    let x = scaled[((q * n) as usize).min(trials as usize - 1)];
                    let lhs =
                        i_b.iter().filter(|&&v| v > x).count() as f64 / n;
                    let rhs =
                        scaled.iter().filter(|&&v| v > x).count() as f64 / n;
                    (Some(lhs), Some(rhs), Some(x))
                }
                None => (None, None, None),
            };
            BoundsRow {
                beta_db,
                beta,
                empirical_cdf: cdf,
                empirical_se: se,
                upper_bound,
                lower_bound,
                dominance_lhs,
                dominance_rhs,
                dominance_x,
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::table1_network;
    use crate::model::{db_to_linear, CoordinationPolicy, TierConfig};

    fn coverage_mapping() -> RateMapping {
        RateMapping::fixed_from_db(3.0, 1.0)
    }

    fn shannon_mapping() -> RateMapping {
        RateMapping::shannon_from_db(3.0)
    }

    fn one_tier_net(l: usize) -> NetworkConfig {
        NetworkConfig {
            tiers: vec![TierConfig {
                power_watts: 1.0,
                antennas: 8,
                pathloss: 4.0,
                density_per_m2: 1e-4,
                feedback_bits: 21,
            }],
            num_coordinated: l,
            coordination_policy: CoordinationPolicy::CrossTier,
            condition_serving_tier: None,
            truncation_points_per_tier: 100,
            tail_compensation: true,
        }
    }

    #[test]
    fn rate_mapping_examples() {
        let cov = coverage_mapping();
        let target = db_to_linear(3.0);
        assert_eq!(rate_coverage(target, &cov), 1.0); // boundary included
        assert_eq!(rate_coverage(1.0, &cov), 0.0); // 1.0 < 3 dB
        let thr = shannon_mapping();
        assert_eq!(rate_shannon(0.0, &thr), 0.0);
        let gap = db_to_linear(3.0);
        assert!((rate_shannon(gap, &thr) - 1.0).abs() < 1e-15);
        assert!((rate_shannon(10.0, &thr) - 2.587_814_373_562_031_3).abs() < 1e-12);
    }

    #[test]
    fn conditioned_sampling_hits_requested_tier() {
        let net = table1_network(1);
        let mut rng = trial_rng(7, 0);
        for _ in 0..20 {
            let r = sample_realization(&net, &mut rng).unwrap();
            let (k, _) = select_serving(&r, &net.tiers);
            assert_eq!(k, 0);
            for tier in 0..net.num_tiers() {
                assert_eq!(r.squared_distances(tier).len(), 200);
                assert!(r
                    .squared_distances(tier)
                    .windows(2)
                    .all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn ideal_reduction_is_bitwise() {
        // zero-delay long-term run equals the ideal run, bit for bit
        let net = table1_network(1);
        let coherence = CoherenceModel::deterministic(0.080);
        let mapping = shannon_mapping();
        let lt =
            long_term_throughput(&net, &coherence, &DelayModel::zero(), &mapping, 1_000, 3).unwrap();
        let ideal = ideal_throughput(&net, &mapping, 1_000, 3).unwrap();
        assert!(lt.bitwise_eq(&ideal));
    }

    #[test]
    fn identical_runs_are_bitwise_identical() {
        let net = table1_network(2);
        let coherence = CoherenceModel::deterministic(0.080);
        let delay = DelayModel::erlang(4, 0.020);
        let mappings = [coverage_mapping(), shannon_mapping()];
        let a = evaluate_mappings(&net, &coherence, &delay, &mappings, 500, 42).unwrap();
        let b = evaluate_mappings(&net, &coherence, &delay, &mappings, 500, 42).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.bitwise_eq(y));
        }
        // different seeds must not collide
        let c = evaluate_mappings(&net, &coherence, &delay, &mappings, 500, 43).unwrap();
        assert_ne!(a[0].mean.to_bits(), c[0].mean.to_bits());
    }

    #[test]
    fn zero_tau_matches_dof_adjusted_baseline() {
        // members never cooperate: equals an L = 0 run that still pays the
        // beamforming dimension cost (serving gain with N - L summands)
        let net = table1_network(1);
        let taus = TimeFractions::uniform(0.0, 1, TauEstimator::Analytic);
        let mappings = [coverage_mapping(), shannon_mapping()];
        let frozen = run_with_taus(&net, &taus, None, &mappings, 2_000, 9).unwrap();
        let l0 = net.with_num_coordinated(0);
        let empty = TimeFractions::uniform(1.0, 0, TauEstimator::Analytic);
        let adjusted = run_with_taus(&l0, &empty, Some(7), &mappings, 2_000, 9).unwrap();
        for (a, b) in frozen.iter().zip(&adjusted) {
            assert!(
                (a.mean - b.mean).abs() <= 1e-9 * a.mean.abs().max(1e-30),
                "{} vs {}",
                a.mean,
                b.mean
            );
        }
    }

    #[test]
    fn one_coordinated_cell_helps_under_perfect_feedback() {
        // With effectively infinite feedback bits and no delay, ideal L = 1
        // coverage at the 3 dB target is at least the L = 0 coverage.
        let mut net = table1_network(1);
        for t in &mut net.tiers {
            t.feedback_bits = 10_000;
        }
        let mapping = coverage_mapping();
        let l1 = ideal_throughput(&net, &mapping, 20_000, 41).unwrap();
        let l0 = ideal_throughput(&net.with_num_coordinated(0), &mapping, 20_000, 41).unwrap();
        let se = (l1.std_error.powi(2) + l0.std_error.powi(2)).sqrt();
        assert!(
            l1.mean >= l0.mean - 2.0 * se,
            "L=1 coverage {} vs L=0 {}",
            l1.mean,
            l0.mean
        );
        assert!(l1.mean > l0.mean, "expected a strict paired gain");
    }

    #[test]
    fn optimal_l_stays_small_even_with_ideal_overhead() {
        // zero delay, effectively infinite bits: the best L is still <= 2
        let mut net = table1_network(1);
        for t in &mut net.tiers {
            t.feedback_bits = 10_000;
        }
        let coherence = CoherenceModel::deterministic(0.080);
        let rows = l_sweep(
            &net,
            &coherence,
            &DelayModel::zero(),
            &[shannon_mapping()],
            &[0, 1, 2, 3, 4, 5],
            20_000,
            43,
        )
        .unwrap();
        let best_small = rows[..3]
            .iter()
            .map(|r| r.results[0].mean)
            .fold(f64::NEG_INFINITY, f64::max);
        for row in &rows[3..] {
            let r = &row.results[0];
            assert!(
                r.mean <= best_small + 2.0 * r.std_error,
                "L={} throughput {} beats best of L<=2 ({})",
                row.l,
                r.mean,
                best_small
            );
        }
    }

    #[test]
    fn ideal_dominates_delayed_run_on_shared_seed() {
        let net = table1_network(2);
        let coherence = CoherenceModel::deterministic(0.080);
        let delay = DelayModel::erlang(4, 0.020);
        for mapping in [coverage_mapping(), shannon_mapping()] {
            let lt = long_term_throughput(&net, &coherence, &delay, &mapping, 10_000, 5).unwrap();
            let ideal = ideal_throughput(&net, &mapping, 10_000, 5).unwrap();
            let se = (lt.std_error.powi(2) + ideal.std_error.powi(2)).sqrt();
            assert!(
                ideal.mean >= lt.mean - 2.0 * se,
                "ideal {} vs delayed {}",
                ideal.mean,
                lt.mean
            );
        }
    }

    #[test]
    fn estimator_is_linear_in_subset_probabilities() {
        let net = one_tier_net(2);
        let taus = TimeFractions::new(vec![0.3, 0.8], TauEstimator::Analytic);
        let mapping = shannon_mapping();
        let (result, log) = run_logged(&net, &taus, &mapping, 1_000, 11).unwrap();
        // recomputing the estimator from the log in engine order is exact
        let p_table: Vec<f64> = (0..4u64)
            .map(|m| subset_probability(&taus, &PhaseSubset::new(m, 2)))
            .collect();
        let mean = log
            .iter()
            .map(|rates| {
                let mut acc = 0.0;
                for (mask, r) in rates.iter().enumerate() {
                    acc += p_table[mask] * r;
                }
                acc
            })
            .sum::<f64>()
            / 1_000.0;
        assert_eq!(mean.to_bits(), result.mean.to_bits());
        // post-hoc exchange of the sums: sum_B p_B mean_B
        let mut exchanged = 0.0;
        for mask in 0..4usize {
            let mean_b = log.iter().map(|r| r[mask]).sum::<f64>() / 1_000.0;
            exchanged += p_table[mask] * mean_b;
        }
        assert!(
            (exchanged - result.mean).abs() <= 1e-12 * result.mean.abs(),
            "{exchanged} vs {}",
            result.mean
        );
    }

    #[test]
    fn l_zero_reduces_to_plain_average() {
        let net = one_tier_net(0);
        let taus = TimeFractions::uniform(1.0, 0, TauEstimator::Analytic);
        let mapping = shannon_mapping();
        let (result, log) = run_logged(&net, &taus, &mapping, 500, 13).unwrap();
        let mean = log.iter().map(|r| r[0]).sum::<f64>() / 500.0;
        assert_eq!(mean.to_bits(), result.mean.to_bits());
        assert!(log.iter().all(|r| r.len() == 1));
    }

    #[test]
    fn throughput_monotone_in_tau_on_shared_seed() {
        let net = one_tier_net(2);
        let mappings = [coverage_mapping(), shannon_mapping()];
        let hi = run_with_taus(
            &net,
            &TimeFractions::uniform(0.9, 2, TauEstimator::Analytic),
            None,
            &mappings,
            5_000,
            17,
        )
        .unwrap();
        let lo = run_with_taus(
            &net,
            &TimeFractions::uniform(0.3, 2, TauEstimator::Analytic),
            None,
            &mappings,
            5_000,
            17,
        )
        .unwrap();
        for (h, l) in hi.iter().zip(&lo) {
            assert!(h.mean >= l.mean, "tau 0.9 {} vs tau 0.3 {}", h.mean, l.mean);
        }
    }

    #[test]
    fn coverage_in_unit_interval_and_throughput_nonnegative() {
        let net = table1_network(1);
        let coherence = CoherenceModel::deterministic(0.080);
        let delay = DelayModel::erlang(4, 0.020);
        let results = evaluate_mappings(
            &net,
            &coherence,
            &delay,
            &[coverage_mapping(), shannon_mapping()],
            2_000,
            19,
        )
        .unwrap();
        assert_eq!(results[0].metric, Metric::Coverage);
        assert!((0.0..=1.0).contains(&results[0].mean));
        assert_eq!(results[1].metric, Metric::Throughput);
        assert!(results[1].mean >= 0.0);
        assert!(results.iter().all(|r| r.std_error >= 0.0));
    }

    #[test]
    fn delay_sweep_zero_row_equals_ideal() {
        let net = table1_network(1);
        let coherence = CoherenceModel::deterministic(0.080);
        let base = DelayModel::erlang(4, 0.020);
        let mappings = [coverage_mapping(), shannon_mapping()];
        let rows = delay_sweep(&net, &coherence, &base, &mappings, &[0.0, 0.020], 1_000, 23)
            .unwrap();
        assert_eq!(rows[0].tau, 1.0);
        for (mi, mapping) in mappings.iter().enumerate() {
            let ideal = ideal_throughput(&net, mapping, 1_000, 23).unwrap();
            assert_eq!(rows[0].results[mi].mean.to_bits(), ideal.mean.to_bits());
        }
        assert!(rows[1].tau < 1.0);
    }

    #[test]
    fn intratier_loss_vanishes_for_one_tier() {
        let net = one_tier_net(2);
        let coherence = CoherenceModel::deterministic(0.080);
        let delay = DelayModel::erlang(4, 0.020);
        let rows = intratier_loss(
            &net,
            &coherence,
            &delay,
            &[coverage_mapping(), shannon_mapping()],
            &LossAxis::LSweep(vec![0, 1, 2]),
            500,
            29,
        )
        .unwrap();
        for row in rows {
            assert!(row.loss.iter().all(|&l| l == 0.0));
            // the policies admit identical candidate pools, so the estimates
            // coincide exactly (digests differ: the configs differ)
            for (c, i) in row.cross.iter().zip(&row.intra) {
                assert_eq!(c.mean.to_bits(), i.mean.to_bits());
                assert_eq!(c.std_error.to_bits(), i.std_error.to_bits());
            }
        }
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut net = one_tier_net(1);
        net.tiers[0].pathloss = 2.0;
        let taus = TimeFractions::uniform(1.0, 1, TauEstimator::Analytic);
        let err = run_with_taus(&net, &taus, None, &[shannon_mapping()], 10, 0).unwrap_err();
        assert!(matches!(err, EvalError::InvalidConfig(_)));
        assert!(err.to_string().contains("pathloss must exceed 2"));
    }

    #[test]
    fn dominance_samples_are_ordered_pointwise() {
        let net = one_tier_net(2);
        let (i_b, i_0) = dominance_samples(&net, 2, 0.125, 2_000, 31).unwrap();
        assert_eq!(i_b.len(), i_0.len());
        // I_B drops the serving term and shrinks members, so it sits below I_(0)
        for (b, z) in i_b.iter().zip(&i_0) {
            assert!(b < z);
        }
    }

    #[test]
    fn bounds_validation_requires_fixed_serving_tier() {
        let mut net = table1_network(1);
        net.condition_serving_tier = None;
        let err = bounds_validation(&net, &[0.0], 10, 0).unwrap_err();
        assert!(matches!(err, EvalError::InvalidConfig(_)));
    }

    #[test]
    fn bounds_validation_row_contents() {
        let net = one_tier_net(1);
        let grid = [-10.0, 0.0, 10.0, 20.0];
        let rows = bounds_validation(&net, &grid, 4_000, 37).unwrap();
        assert_eq!(rows.len(), 4);
        let mut last = 0.0;
        for row in &rows {
            assert!(row.empirical_cdf >= last);
            last = row.empirical_cdf;
            assert!(row.upper_bound >= 0.0 && row.upper_bound <= 1.0);
            // alpha = 4 puts the closed-form lower bound at the gamma pole
            assert!(matches!(row.lower_bound, Err(DomainFault::GammaPole { .. })));
            assert!(row.dominance_lhs.is_some() && row.dominance_rhs.is_some());
        }
    }
}

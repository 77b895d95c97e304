//! Coherence-block and overhead-delay models, cooperation-phase time
//! fractions, and subset probabilities.
//!
//! A coordinated BS can cancel interference only after its updated overhead
//! message arrives: within each block of length T, the first min(D, T)
//! seconds are the overhead-messaging phase and the rest is the cooperation
//! phase. The long-term cooperation-phase fraction is
//!
//!   tau = p(T, inf) - eta * Int_0^inf { p(T, inf) - p(T, s) } ds,
//!
//! with p(T, s) = P(D <= T, D <= s) and eta = 1 / E[T]. The integral equals
//! E[D 1{D <= T}] exactly, which is how the general (random-T) estimator is
//! computed. A renewal-reward oracle, tau = E[(T - D)+] / E[T], is exposed
//! alongside; the two coincide for deterministic T. For random T they differ
//! (the report experiment surfaces the gap); the closed-form estimator is the default.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use thiserror::Error;

use crate::channel::PhaseSubset;
use crate::gamma::ln_gamma;

/// Samples used by the Monte Carlo fallback of [`joint_prob`]; the standard
/// error of a probability estimate stays below 1e-3.
const JOINT_PROB_MC_SAMPLES: u64 = 400_000;
/// Samples used by the Monte Carlo path of [`time_fraction_analytic`].
const ANALYTIC_MC_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OverheadError {
    #[error("cannot scale delay model to mean {target_s} s (fixed offset {offset_s} s, {stages} stages)")]
    UnreachableMean {
        target_s: f64,
        offset_s: f64,
        stages: usize,
    },
}

/// Coherence-block length distribution: mean 1/eta for every shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockShape {
    Deterministic,
    /// Gamma with integer shape M and scale 1/(M eta); M = 1 is exponential,
    /// M -> infinity approaches the deterministic block.
    GammaShape(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceModel {
    /// Mean block length in seconds (1/eta).
    pub mean_block: f64,
    pub shape: BlockShape,
}

impl CoherenceModel {
    pub fn deterministic(mean_block: f64) -> Self {
        assert!(mean_block > 0.0);
        Self {
            mean_block,
            shape: BlockShape::Deterministic,
        }
    }

    pub fn gamma(shape: u32, mean_block: f64) -> Self {
        assert!(shape >= 1 && mean_block > 0.0);
        Self {
            mean_block,
            shape: BlockShape::GammaShape(shape),
        }
    }
}

/// Overhead delay: a fixed offset plus a tandem of exponential servers.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayModel {
    /// Rate of each backhaul stage, per second.
    pub stage_rates: Vec<f64>,
    /// Deterministic part of the delay, seconds.
    pub fixed_offset: f64,
}

impl DelayModel {
    pub fn new(stage_rates: Vec<f64>, fixed_offset: f64) -> Self {
        assert!(stage_rates.iter().all(|&r| r > 0.0));
        assert!(fixed_offset >= 0.0);
        Self {
            stage_rates,
            fixed_offset,
        }
    }

    /// Identically zero delay.
    pub fn zero() -> Self {
        Self {
            stage_rates: Vec::new(),
            fixed_offset: 0.0,
        }
    }

    /// `stages` equal-rate servers summing to `mean` seconds.
    pub fn erlang(stages: usize, mean: f64) -> Self {
        assert!(stages >= 1 && mean > 0.0);
        Self {
            stage_rates: vec![stages as f64 / mean; stages],
            fixed_offset: 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.fixed_offset + self.stage_rates.iter().map(|r| 1.0 / r).sum::<f64>()
    }

    /// Uniformly rescale the stage rates so the total mean hits `target_s`.
    /// A target equal to the fixed offset (in particular zero) drops the
    /// stochastic stages entirely.
    pub fn scaled_to_mean(&self, target_s: f64) -> Result<Self, OverheadError> {
        let stage_mean = target_s - self.fixed_offset;
        if stage_mean < 0.0 || (stage_mean > 0.0 && self.stage_rates.is_empty()) {
            return Err(OverheadError::UnreachableMean {
                target_s,
                offset_s: self.fixed_offset,
                stages: self.stage_rates.len(),
            });
        }
        if stage_mean == 0.0 {
            return Ok(Self {
                stage_rates: Vec::new(),
                fixed_offset: self.fixed_offset,
            });
        }
        let current: f64 = self.stage_rates.iter().map(|r| 1.0 / r).sum();
        let factor = current / stage_mean;
        Ok(Self {
            stage_rates: self.stage_rates.iter().map(|r| r * factor).collect(),
            fixed_offset: self.fixed_offset,
        })
    }

    /// P(D <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.fixed_offset {
            return 0.0;
        }
        stage_sum_cdf(&self.stage_rates, x - self.fixed_offset)
    }

    pub fn is_zero(&self) -> bool {
        self.stage_rates.is_empty() && self.fixed_offset == 0.0
    }
}

/// One draw of a coherence-block length.
pub fn sample_coherence(model: &CoherenceModel, rng: &mut impl Rng) -> f64 {
    match model.shape {
        BlockShape::Deterministic => model.mean_block,
        BlockShape::GammaShape(m) => {
            let g = Gamma::new(m as f64, model.mean_block / m as f64).expect("valid parameters");
            g.sample(rng)
        }
    }
}

/// One draw of the overhead delay.
pub fn sample_delay(model: &DelayModel, rng: &mut impl Rng) -> f64 {
    let stages: f64 = model
        .stage_rates
        .iter()
        .map(|&r| {
            let e: f64 = Exp1.sample(rng);
            e / r
        })
        .sum();
    model.fixed_offset + stages
}

/// CDF of a sum of independent exponentials (hypoexponential), evaluated by
/// uniformization of the underlying pure-birth chain. Handles equal, distinct
/// and repeated rates in one path; absolute error below 1e-13.
fn stage_sum_cdf(rates: &[f64], t: f64) -> f64 {
    if rates.is_empty() {
        return if t >= 0.0 { 1.0 } else { 0.0 };
    }
    if t <= 0.0 {
        return 0.0;
    }
    let big_lambda = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lt = big_lambda * t;
    let j = rates.len();
    // state occupation of the uniformized chain; index j is absorbing
    let mut v = vec![0.0; j + 1];
    v[0] = 1.0;
    let mut next = vec![0.0; j + 1];
    let log_lt = lt.ln();
    let mut cdf = 0.0;
    let mut weight_sum = 0.0;
    let mut n: u64 = 0;
    loop {
        // Poisson(n; lt) weight in log space so large lt cannot underflow
        let w = (-lt + n as f64 * log_lt - ln_gamma(n as f64 + 1.0)).exp();
        cdf += w * v[j];
        weight_sum += w;
        if weight_sum >= 1.0 - 1e-14 && n as f64 >= lt {
            break;
        }
        if n > 20_000_000 {
            break; // unreachable for sane rates; avoids an infinite loop
        }
        // one uniformized step
        next[j] = v[j] + v[j - 1] * (rates[j - 1] / big_lambda);
        for s in (0..j).rev() {
            let stay = 1.0 - rates[s] / big_lambda;
            next[s] = v[s] * stay
                + if s > 0 {
                    v[s - 1] * (rates[s - 1] / big_lambda)
                } else {
                    0.0
                };
        }
        std::mem::swap(&mut v, &mut next);
        n += 1;
    }
    cdf.clamp(0.0, 1.0)
}

/// p(T, s) = P(D <= T and D <= s).
///
/// Closed form when T is deterministic (the delay CDF at min(T, s));
/// Monte Carlo with standard error <= 1e-3 for random T.
pub fn joint_prob(
    coherence: &CoherenceModel,
    delay: &DelayModel,
    s: f64,
    rng: &mut impl Rng,
) -> f64 {
    assert!(s >= 0.0);
    match coherence.shape {
        BlockShape::Deterministic => delay.cdf(coherence.mean_block.min(s)),
        BlockShape::GammaShape(_) => {
            let mut hits = 0u64;
            for _ in 0..JOINT_PROB_MC_SAMPLES {
                let t = sample_coherence(coherence, rng);
                let d = sample_delay(delay, rng);
                if d <= t && d <= s {
                    hits += 1;
                }
            }
            hits as f64 / JOINT_PROB_MC_SAMPLES as f64
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if a >= b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Long-term cooperation-phase time fraction.
///
/// Deterministic T: exact evaluation with the integral term computed by
/// adaptive quadrature of the closed-form delay CDF over [0, T]. Random T:
/// Monte Carlo of E[D 1{D <= T}]. Clamped to [0, 1].
pub fn time_fraction_analytic(
    coherence: &CoherenceModel,
    delay: &DelayModel,
    rng: &mut impl Rng,
) -> f64 {
    let eta = 1.0 / coherence.mean_block;
    match coherence.shape {
        BlockShape::Deterministic => {
            let t = coherence.mean_block;
            let p_done = delay.cdf(t);
            // Int_0^T {F_D(T) - F_D(s)} ds; F_D vanishes below the offset
            let kink = delay.fixed_offset.min(t);
            let integral = p_done * kink
                + adaptive_simpson(&|s| p_done - delay.cdf(s), kink, t, 1e-11);
            (p_done - eta * integral).clamp(0.0, 1.0)
        }
        BlockShape::GammaShape(_) => {
            let mut acc = 0.0;
            let mut done = 0u64;
            for _ in 0..ANALYTIC_MC_SAMPLES {
                let t = sample_coherence(coherence, rng);
                let d = sample_delay(delay, rng);
                if d <= t {
                    acc += d;
                    done += 1;
                }
            }
            let p_done = done as f64 / ANALYTIC_MC_SAMPLES as f64;
            let integral = acc / ANALYTIC_MC_SAMPLES as f64;
            (p_done - eta * integral).clamp(0.0, 1.0)
        }
    }
}

/// Renewal-reward oracle: simulate i.i.d. (T, D) block pairs and return
/// the realized cooperation-time share sum(T - D)+ / sum(T).
pub fn time_fraction_renewal(
    coherence: &CoherenceModel,
    delay: &DelayModel,
    rng: &mut impl Rng,
    blocks: u64,
) -> f64 {
    assert!(blocks >= 10_000, "renewal oracle needs >= 1e4 blocks");
    let mut coop = 0.0;
    let mut total = 0.0;
    for _ in 0..blocks {
        let t = sample_coherence(coherence, rng);
        let d = sample_delay(delay, rng);
        coop += (t - d).max(0.0);
        total += t;
    }
    coop / total
}

/// Which estimator produced a [`TimeFractions`] table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauEstimator {
    Analytic,
    RenewalOracle,
}

/// Per-coordinated-BS cooperation-phase fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFractions {
    values: Vec<f64>,
    estimator: TauEstimator,
}

impl TimeFractions {
    pub fn new(values: Vec<f64>, estimator: TauEstimator) -> Self {
        assert!(values.iter().all(|&t| (0.0..=1.0).contains(&t)));
        Self { values, estimator }
    }

    /// All coordinated BSs share one overhead configuration.
    pub fn uniform(tau: f64, len: usize, estimator: TauEstimator) -> Self {
        Self::new(vec![tau; len], estimator)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn estimator(&self) -> TauEstimator {
        self.estimator
    }
}

/// Probability that exactly the BSs in `subset` are in the cooperation phase:
/// product of tau over the subset times (1 - tau) over its complement.
pub fn subset_probability(fractions: &TimeFractions, subset: &PhaseSubset) -> f64 {
    assert_eq!(fractions.len(), subset.len());
    let mut p = 1.0;
    for (j, &tau) in fractions.values().iter().enumerate() {
        p *= if subset.contains(j) { tau } else { 1.0 - tau };
    }
    p
}

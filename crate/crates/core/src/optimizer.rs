//! Empirical ergodic sum rate and the breakpoint threshold search.
//!
//! The mean sum rate of a threshold scheduler is piecewise constant in the
//! threshold: the active sets only change when the threshold crosses an
//! observed score. The search therefore evaluates candidates = {0} plus
//! every observed score, which is exhaustive. Each realization is swept
//! once from the largest score downward, activating one link per step and
//! updating interference incrementally, so the whole curve costs O(K^2) per
//! realization instead of a fresh schedule per candidate.

use rayon::prelude::*;

use crate::channel::{drop_rng, drop_topology, realize_channel, ChannelRealization, NetworkConfig};
use crate::scheduler::{rates_of_schedule, ScheduleDecision};
use crate::{Error, Result};

/// Which per-link score a threshold is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdScore {
    /// All-active SINR prediction (binary power control on local CSI).
    PredictedSinr,
    /// Direct-link SNR (the selfish baseline).
    Snr,
}

impl ThresholdScore {
    fn of<'a>(&self, real: &'a ChannelRealization) -> &'a [f64] {
        match self {
            ThresholdScore::PredictedSinr => &real.sinr_all_active,
            ThresholdScore::Snr => &real.snr,
        }
    }
}

/// Candidate selection for the breakpoint search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidatePolicy {
    /// Evaluate zero plus every observed score: K*T_s + 1 candidates.
    Exact,
    /// Evaluate zero plus every m-th sorted observed score, for speed.
    EveryMth(usize),
}

/// Outcome of a threshold search: the argmax and the whole empirical curve.
#[derive(Debug, Clone)]
pub struct ThresholdSearchResult {
    /// Best threshold; ties broken toward the smallest candidate, which
    /// schedules weakly more links at equal sum rate.
    pub gamma_star: f64,
    pub best_mean_sum_rate: f64,
    /// (candidate threshold, mean sum rate) pairs sorted by threshold.
    pub curve: Vec<(f64, f64)>,
    pub num_candidates: usize,
    pub num_realizations: usize,
}

/// One row of the broadcastable threshold table.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTableRow {
    pub k: usize,
    pub gamma_star: f64,
    pub mean_sum_rate: f64,
}

/// Mean sum rate over the given realizations for one threshold, using the
/// supplied threshold scheduler (e.g. [`crate::scheduler::sinr_threshold_schedule`]).
pub fn empirical_mean_sum_rate<F>(
    realizations: &[ChannelRealization],
    gamma: f64,
    schedule: F,
) -> Result<f64>
where
    F: Fn(&ChannelRealization, f64) -> Result<ScheduleDecision>,
{
    if realizations.is_empty() {
        return Err(Error::InvalidInput("need at least one realization".into()));
    }
    let mut total = 0.0;
    for real in realizations {
        total += rates_of_schedule(real, &schedule(real, gamma)?).sum_rate;
    }
    Ok(total / realizations.len() as f64)
}

/// Sum rate of one realization as a function of the threshold, in compact
/// form: descending scores and the sum-rate level after each activation.
struct SumRateSteps {
    /// Per-link scores sorted descending.
    scores_desc: Vec<f64>,
    /// `levels[m]` = sum rate with the m highest-score links active.
    levels: Vec<f64>,
}

impl SumRateSteps {
    fn build(real: &ChannelRealization, score: ThresholdScore) -> Self {
        let k = real.num_pairs();
        let scores = score.of(real);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        let n_over_p = real.noise_over_power();
        // totals[i] = sum of gains at Rx_i from currently active transmitters.
        let mut totals = vec![0.0f64; k];
        let mut active: Vec<usize> = Vec::with_capacity(k);
        let mut levels = Vec::with_capacity(k + 1);
        levels.push(0.0);
        for &link in &order {
            for (i, t) in totals.iter_mut().enumerate() {
                *t += real.gain(i, link);
            }
            active.push(link);
            let mut sum = 0.0;
            for &i in &active {
                let direct = real.gain(i, i);
                let interference = totals[i] - direct;
                sum += (1.0 + direct / (interference + n_over_p)).log2();
            }
            levels.push(sum);
        }
        let scores_desc = order.iter().map(|&i| scores[i]).collect();
        Self { scores_desc, levels }
    }

    /// Sum rate at a threshold: every link whose score is >= the threshold
    /// is active.
    fn eval(&self, gamma: f64) -> f64 {
        let count = self.scores_desc.partition_point(|&s| s >= gamma);
        self.levels[count]
    }
}

fn curve_from_steps(
    steps: &[SumRateSteps],
    policy: CandidatePolicy,
) -> Result<ThresholdSearchResult> {
    let t_s = steps.len();
    if t_s == 0 {
        return Err(Error::InvalidInput("need at least one realization".into()));
    }
    let mut candidates = Vec::with_capacity(
        1 + steps.iter().map(|s| s.scores_desc.len()).sum::<usize>(),
    );
    candidates.push(0.0);
    for s in steps {
        candidates.extend_from_slice(&s.scores_desc);
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let selected: Vec<f64> = match policy {
        CandidatePolicy::Exact => candidates,
        CandidatePolicy::EveryMth(m) => {
            if m == 0 {
                return Err(Error::InvalidInput("subsampling step must be >= 1".into()));
            }
            // Index 0 is the zero candidate, always kept.
            candidates.into_iter().step_by(m).collect()
        }
    };
    let curve: Vec<(f64, f64)> = selected
        .par_iter()
        .map(|&g| {
            let total: f64 = steps.iter().map(|s| s.eval(g)).sum();
            (g, total / t_s as f64)
        })
        .collect();
    let mut best = 0usize;
    for (idx, &(_, rate)) in curve.iter().enumerate().skip(1) {
        if rate > curve[best].1 {
            best = idx;
        }
    }
    Ok(ThresholdSearchResult {
        gamma_star: curve[best].0,
        best_mean_sum_rate: curve[best].1,
        num_candidates: curve.len(),
        num_realizations: t_s,
        curve,
    })
}

/// Breakpoint search for the SINR-threshold scheme over in-memory
/// realizations: exhaustive over {0} and all observed predicted SINRs.
pub fn breakpoint_search(
    realizations: &[ChannelRealization],
    policy: CandidatePolicy,
) -> Result<ThresholdSearchResult> {
    let steps: Vec<SumRateSteps> = realizations
        .par_iter()
        .map(|r| SumRateSteps::build(r, ThresholdScore::PredictedSinr))
        .collect();
    curve_from_steps(&steps, policy)
}

/// Breakpoint search where realizations are produced on demand (one call
/// per drop index), so large studies never hold more than one gain matrix
/// per worker in memory. The provider must be deterministic in the index.
pub fn threshold_search_streamed<F>(
    num_realizations: usize,
    provider: F,
    score: ThresholdScore,
    policy: CandidatePolicy,
) -> Result<ThresholdSearchResult>
where
    F: Fn(usize) -> Result<ChannelRealization> + Sync,
{
    let steps: Vec<SumRateSteps> = (0..num_realizations)
        .into_par_iter()
        .map(|t| provider(t).map(|r| SumRateSteps::build(&r, score)))
        .collect::<Result<Vec<_>>>()?;
    curve_from_steps(&steps, policy)
}

/// Optimal threshold per network size, on fresh geometric drops: the table
/// a controller would broadcast.
pub fn optimal_threshold_vs_k(
    k_values: &[usize],
    cfg: &NetworkConfig,
    num_realizations: usize,
) -> Result<Vec<ThresholdTableRow>> {
    if num_realizations == 0 {
        return Err(Error::InvalidInput("need at least one realization".into()));
    }
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let cfg_k = cfg.with_pairs(k);
        cfg_k.validate()?;
        let result = threshold_search_streamed(
            num_realizations,
            |t| {
                let mut rng = drop_rng(cfg_k.rng_seed, k, t);
                let topo = drop_topology(&cfg_k, &mut rng)?;
                realize_channel(&topo, &cfg_k, &mut rng)
            },
            ThresholdScore::PredictedSinr,
            CandidatePolicy::Exact,
        )?;
        rows.push(ThresholdTableRow {
            k,
            gamma_star: result.gamma_star,
            mean_sum_rate: result.best_mean_sum_rate,
        });
    }
    Ok(rows)
}

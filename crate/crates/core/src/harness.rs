//! Seeded Monte Carlo experiment runner: sum-rate-vs-K studies, user-rate
//! CDFs and fairness fractions, threshold tables, operation counts, and the
//! cellular time-sharing hybrid, with deterministic CSV export.
//!
//! Drops execute in parallel on per-drop derived substreams and are reduced
//! in fixed drop order, so a study's outputs are byte-identical for a given
//! seed regardless of thread count. Scheme parameters that the experiment
//! must pick (the SINR threshold, the SNR threshold, ITLinQ's eta) are
//! fitted on a leading block of training drops and evaluated on the rest;
//! a zero-sized training block fits on the evaluation drops themselves.

use std::fs;
use std::ops::Range;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::channel::{
    drop_rng, drop_topology, realize_channel, realize_iid_rayleigh, ChannelRealization,
    NetworkConfig,
};
use crate::config::{parse_f64, parse_usize};
use crate::optimizer::{
    threshold_search_streamed, CandidatePolicy, ThresholdScore, ThresholdTableRow,
};
use crate::scheduler::{
    enforced_subset_schedule, fair_itlinq_schedule, flashlinq_schedule, itlinq_schedule,
    rates_of_schedule, reduced_threshold_schedule, sinr_threshold_schedule, snr_based_schedule,
    FairItlinqParams, FlashlinqParams, ScheduleDecision, SchemeId,
};
use crate::{Error, Result};

/// Eta grid searched when fitting ITLinQ.
pub const ITLINQ_ETA_GRID: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Predetermined direct-link SNR gate of the selfish baseline: 40 dB, a
/// "link is serviceable on its own" test well below the typical direct SNR
/// of the default geometry. Deliberately independent of the network size —
/// the scheme reads no interference information, so its activation fraction
/// cannot adapt to density. Set `snr_threshold = auto` to fit it on the
/// training drops instead.
pub const DEFAULT_SNR_THRESHOLD: f64 = 1e4;

/// Rates below this count as "near zero" in the secondary fairness statistic.
pub const NEAR_ZERO_RATE: f64 = 0.01;

/// How each drop's channel is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelMode {
    /// Square-area geometry with pathloss and fading.
    Geometric,
    /// Every gain i.i.d. exponential(1), unit noise, the given linear
    /// transmit power; the analytic-validation channel.
    IidRayleigh { power: f64 },
}

/// A scheme to run, with its free parameters; `None` means "fit on the
/// training drops".
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    SinrThreshold { gamma: Option<f64> },
    SnrBased { threshold: Option<f64> },
    Itlinq { eta: Option<f64> },
    FairItlinq(FairItlinqParams),
    Flashlinq(FlashlinqParams),
    /// Forces ceil(fraction * K) links on, rotated round-robin across the
    /// evaluated drops; remaining links use the (fitted) SINR threshold.
    EnforcedSubset { gamma: Option<f64>, enforced_fraction: f64 },
    /// SINR threshold backed off by `gamma_v` from the (fitted) optimum.
    ReducedThreshold { gamma_star: Option<f64>, gamma_v: f64 },
}

impl SchemeSpec {
    pub fn id(&self) -> SchemeId {
        match self {
            SchemeSpec::SinrThreshold { .. } => SchemeId::SinrThreshold,
            SchemeSpec::SnrBased { .. } => SchemeId::SnrBased,
            SchemeSpec::Itlinq { .. } => SchemeId::Itlinq,
            SchemeSpec::FairItlinq(_) => SchemeId::FairItlinq,
            SchemeSpec::Flashlinq(_) => SchemeId::Flashlinq,
            SchemeSpec::EnforcedSubset { .. } => SchemeId::EnforcedSubset,
            SchemeSpec::ReducedThreshold { .. } => SchemeId::ReducedThreshold,
        }
    }
}

/// Everything one experiment needs: the channel config, which network sizes
/// and schemes to run, the drop budget and its train/eval split, and where
/// CSV artifacts go.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub cfg: NetworkConfig,
    pub k_values: Vec<usize>,
    pub num_drops: usize,
    pub schemes: Vec<SchemeSpec>,
    /// Fraction of drops reserved for parameter fitting, in [0, 1). Zero
    /// fits in-sample on the evaluation drops.
    pub train_eval_split: f64,
    pub output_dir: std::path::PathBuf,
    pub channel_mode: ChannelMode,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            cfg: NetworkConfig::default(),
            k_values: vec![50, 100, 200, 400, 800],
            num_drops: 200,
            schemes: vec![
                SchemeSpec::SinrThreshold { gamma: None },
                SchemeSpec::Itlinq { eta: None },
                SchemeSpec::FairItlinq(FairItlinqParams::default()),
                SchemeSpec::Flashlinq(FlashlinqParams::default()),
                SchemeSpec::SnrBased { threshold: Some(DEFAULT_SNR_THRESHOLD) },
                SchemeSpec::EnforcedSubset { gamma: None, enforced_fraction: 0.10 },
                SchemeSpec::ReducedThreshold { gamma_star: None, gamma_v: 0.45 },
            ],
            train_eval_split: 0.5,
            output_dir: std::path::PathBuf::from("out"),
            channel_mode: ChannelMode::Geometric,
        }
    }
}

/// Per-scheme parameter knobs picked up from config keys before the scheme
/// list is materialized.
#[derive(Debug, Clone)]
struct SchemeKnobs {
    sinr_gamma: Option<f64>,
    snr_threshold: Option<f64>,
    itlinq_eta: Option<f64>,
    fair: FairItlinqParams,
    flash: FlashlinqParams,
    enforced_fraction: f64,
    reduced_gamma_v: f64,
    iid_power: f64,
}

impl Default for SchemeKnobs {
    fn default() -> Self {
        Self {
            sinr_gamma: None,
            snr_threshold: Some(DEFAULT_SNR_THRESHOLD),
            itlinq_eta: None,
            fair: FairItlinqParams::default(),
            flash: FlashlinqParams::default(),
            enforced_fraction: 0.10,
            reduced_gamma_v: 0.45,
            iid_power: 100.0,
        }
    }
}

fn parse_auto_f64(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse_f64(key, value).map(Some)
    }
}

fn scheme_from_name(name: &str, knobs: &SchemeKnobs) -> Result<SchemeSpec> {
    Ok(match name {
        "sinr_threshold" => SchemeSpec::SinrThreshold { gamma: knobs.sinr_gamma },
        "snr_based" => SchemeSpec::SnrBased { threshold: knobs.snr_threshold },
        "itlinq" => SchemeSpec::Itlinq { eta: knobs.itlinq_eta },
        "fair_itlinq" => SchemeSpec::FairItlinq(knobs.fair),
        "flashlinq" => SchemeSpec::Flashlinq(knobs.flash),
        "sinr_enforced_rr" => SchemeSpec::EnforcedSubset {
            gamma: knobs.sinr_gamma,
            enforced_fraction: knobs.enforced_fraction,
        },
        "sinr_reduced" => SchemeSpec::ReducedThreshold {
            gamma_star: knobs.sinr_gamma,
            gamma_v: knobs.reduced_gamma_v,
        },
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown scheme `{other}` (expected sinr_threshold, snr_based, itlinq, \
                 fair_itlinq, flashlinq, sinr_enforced_rr or sinr_reduced)"
            )))
        }
    })
}

impl ExperimentSpec {
    /// Builds a spec from ordered key-value pairs (config file first, then
    /// overrides; last occurrence of a key wins). Keys are the field names
    /// of the network config and of this struct, plus per-scheme parameter
    /// keys; unknown keys are an error naming the key.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        let mut knobs = SchemeKnobs::default();
        let mut scheme_names: Option<Vec<String>> = None;
        let mut channel_mode_name = String::from("geometric");
        for (key, value) in pairs {
            if spec.cfg.apply_key(key, value)? {
                continue;
            }
            match key.as_str() {
                "k_values" => {
                    let mut ks = Vec::new();
                    for part in value.split(',') {
                        ks.push(parse_usize(key, part.trim())?);
                    }
                    spec.k_values = ks;
                }
                "num_drops" => spec.num_drops = parse_usize(key, value)?,
                "train_eval_split" => spec.train_eval_split = parse_f64(key, value)?,
                "output_dir" => spec.output_dir = value.into(),
                "channel_mode" => channel_mode_name = value.clone(),
                "iid_power" => knobs.iid_power = parse_f64(key, value)?,
                "schemes" => {
                    scheme_names =
                        Some(value.split(',').map(|s| s.trim().to_string()).collect());
                }
                "sinr_gamma" => knobs.sinr_gamma = parse_auto_f64(key, value)?,
                "snr_threshold" => knobs.snr_threshold = parse_auto_f64(key, value)?,
                "itlinq_eta" => knobs.itlinq_eta = parse_auto_f64(key, value)?,
                "fair_snr_th_db" => knobs.fair.snr_th_db = parse_f64(key, value)?,
                "fair_m_db" => knobs.fair.m_db = parse_f64(key, value)?,
                "fair_mbar_db" => knobs.fair.mbar_db = parse_f64(key, value)?,
                "fair_etabar" => knobs.fair.etabar = parse_f64(key, value)?,
                "flash_gamma_tx_db" => knobs.flash.gamma_tx_db = parse_f64(key, value)?,
                "flash_gamma_rx_db" => knobs.flash.gamma_rx_db = parse_f64(key, value)?,
                "enforced_fraction" => knobs.enforced_fraction = parse_f64(key, value)?,
                "reduced_gamma_v" => knobs.reduced_gamma_v = parse_f64(key, value)?,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown config key `{other}`")))
                }
            }
        }
        spec.channel_mode = match channel_mode_name.as_str() {
            "geometric" => ChannelMode::Geometric,
            "iid_rayleigh" => ChannelMode::IidRayleigh { power: knobs.iid_power },
            other => {
                return Err(Error::InvalidConfig(format!(
                    "key `channel_mode`: expected geometric|iid_rayleigh, got `{other}`"
                )))
            }
        };
        let names = scheme_names.unwrap_or_else(|| {
            vec![
                "sinr_threshold".into(),
                "itlinq".into(),
                "fair_itlinq".into(),
                "flashlinq".into(),
                "snr_based".into(),
                "sinr_enforced_rr".into(),
                "sinr_reduced".into(),
            ]
        });
        spec.schemes = names
            .iter()
            .map(|n| scheme_from_name(n, &knobs))
            .collect::<Result<Vec<_>>>()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        if self.num_drops < 1 {
            return Err(Error::InvalidConfig("num_drops must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.train_eval_split) {
            return Err(Error::InvalidConfig(format!(
                "train_eval_split must be in [0, 1), got {}",
                self.train_eval_split
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes must be nonempty".into()));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("k_values must be nonempty".into()));
        }
        if let ChannelMode::IidRayleigh { power } = self.channel_mode {
            if !(power > 0.0) {
                return Err(Error::InvalidConfig("iid_power must be > 0".into()));
            }
        }
        for scheme in &self.schemes {
            if let SchemeSpec::EnforcedSubset { enforced_fraction, .. } = scheme {
                if !(0.0..=1.0).contains(enforced_fraction) {
                    return Err(Error::InvalidConfig(
                        "enforced_fraction must be in [0, 1]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn train_eval_ranges(&self) -> (Range<usize>, Range<usize>) {
        let n_train = (self.train_eval_split * self.num_drops as f64).floor() as usize;
        if n_train == 0 {
            // In-sample: fit on the same drops that get evaluated.
            (0..self.num_drops, 0..self.num_drops)
        } else {
            (0..n_train, n_train..self.num_drops)
        }
    }
}

/// Generates drop `t` for `cfg.num_pairs` links: the channel realization
/// plus the drop's scheduler ordering, both from the drop's own substream.
fn realize_drop(
    cfg: &NetworkConfig,
    mode: ChannelMode,
    t: usize,
) -> Result<(ChannelRealization, Vec<usize>)> {
    let k = cfg.num_pairs;
    let mut rng = drop_rng(cfg.rng_seed, k, t);
    let real = match mode {
        ChannelMode::Geometric => {
            let topo = drop_topology(cfg, &mut rng)?;
            realize_channel(&topo, cfg, &mut rng)?
        }
        ChannelMode::IidRayleigh { power } => realize_iid_rayleigh(k, power, &mut rng)?,
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    Ok((real, order))
}

/// A scheme with all parameters pinned, ready to run on a realization.
#[derive(Debug, Clone)]
enum FittedScheme {
    SinrThreshold { gamma: f64 },
    SnrBased { threshold: f64 },
    Itlinq { eta: f64 },
    FairItlinq(FairItlinqParams),
    Flashlinq(FlashlinqParams),
    EnforcedSubset { gamma: f64, num_enforced: usize },
    ReducedThreshold { gamma: f64 },
}

impl FittedScheme {
    fn id(&self) -> SchemeId {
        match self {
            FittedScheme::SinrThreshold { .. } => SchemeId::SinrThreshold,
            FittedScheme::SnrBased { .. } => SchemeId::SnrBased,
            FittedScheme::Itlinq { .. } => SchemeId::Itlinq,
            FittedScheme::FairItlinq(_) => SchemeId::FairItlinq,
            FittedScheme::Flashlinq(_) => SchemeId::Flashlinq,
            FittedScheme::EnforcedSubset { .. } => SchemeId::EnforcedSubset,
            FittedScheme::ReducedThreshold { .. } => SchemeId::ReducedThreshold,
        }
    }

    fn describe(&self) -> String {
        match self {
            FittedScheme::SinrThreshold { gamma } => format!("gamma={gamma:.6}"),
            FittedScheme::SnrBased { threshold } => format!("threshold={threshold:.6e}"),
            FittedScheme::Itlinq { eta } => format!("eta={eta}"),
            FittedScheme::FairItlinq(p) => format!(
                "snr_th={}dB m={}dB mbar={}dB etabar={}",
                p.snr_th_db, p.m_db, p.mbar_db, p.etabar
            ),
            FittedScheme::Flashlinq(p) => {
                format!("gamma_tx={}dB gamma_rx={}dB", p.gamma_tx_db, p.gamma_rx_db)
            }
            FittedScheme::EnforcedSubset { gamma, num_enforced } => {
                format!("gamma={gamma:.6} enforced={num_enforced}")
            }
            FittedScheme::ReducedThreshold { gamma } => format!("gamma={gamma:.6}"),
        }
    }

    /// Runs the scheme on one realization. `eval_ordinal` drives the
    /// round-robin rotation of the enforced subset.
    fn schedule(
        &self,
        real: &ChannelRealization,
        order: &[usize],
        eval_ordinal: usize,
    ) -> Result<ScheduleDecision> {
        match self {
            FittedScheme::SinrThreshold { gamma } => sinr_threshold_schedule(real, *gamma),
            FittedScheme::SnrBased { threshold } => snr_based_schedule(real, *threshold),
            FittedScheme::Itlinq { eta } => itlinq_schedule(real, *eta, order),
            FittedScheme::FairItlinq(p) => fair_itlinq_schedule(real, p, order),
            FittedScheme::Flashlinq(p) => flashlinq_schedule(real, p, order),
            FittedScheme::EnforcedSubset { gamma, num_enforced } => {
                let k = real.num_pairs();
                let start = (eval_ordinal * num_enforced) % k;
                let enforced: Vec<usize> =
                    (0..*num_enforced).map(|r| (start + r) % k).collect();
                enforced_subset_schedule(real, *gamma, &enforced)
            }
            FittedScheme::ReducedThreshold { gamma } => {
                reduced_threshold_schedule(real, *gamma, 0.0)
            }
        }
    }
}

/// Fits the free parameters of every requested scheme on the training drops.
fn fit_schemes(spec: &ExperimentSpec, cfg: &NetworkConfig, train: Range<usize>) -> Result<Vec<FittedScheme>> {
    let needs_sinr_fit = spec.schemes.iter().any(|s| {
        matches!(
            s,
            SchemeSpec::SinrThreshold { gamma: None }
                | SchemeSpec::EnforcedSubset { gamma: None, .. }
                | SchemeSpec::ReducedThreshold { gamma_star: None, .. }
        )
    });
    let needs_snr_fit = spec
        .schemes
        .iter()
        .any(|s| matches!(s, SchemeSpec::SnrBased { threshold: None }));
    let needs_eta_fit = spec
        .schemes
        .iter()
        .any(|s| matches!(s, SchemeSpec::Itlinq { eta: None }));

    let fit_threshold = |score: ThresholdScore| -> Result<f64> {
        let result = threshold_search_streamed(
            train.len(),
            |i| realize_drop(cfg, spec.channel_mode, train.start + i).map(|(r, _)| r),
            score,
            CandidatePolicy::Exact,
        )?;
        Ok(result.gamma_star)
    };
    let sinr_gamma_star = if needs_sinr_fit {
        Some(fit_threshold(ThresholdScore::PredictedSinr)?)
    } else {
        None
    };
    let snr_threshold_star = if needs_snr_fit {
        Some(fit_threshold(ThresholdScore::Snr)?)
    } else {
        None
    };
    let eta_star = if needs_eta_fit {
        Some(fit_itlinq_eta(cfg, spec.channel_mode, train.clone())?)
    } else {
        None
    };

    let k = cfg.num_pairs;
    spec.schemes
        .iter()
        .map(|scheme| {
            Ok(match scheme {
                SchemeSpec::SinrThreshold { gamma } => FittedScheme::SinrThreshold {
                    gamma: gamma.or(sinr_gamma_star).expect("fitted above"),
                },
                SchemeSpec::SnrBased { threshold } => FittedScheme::SnrBased {
                    threshold: threshold.or(snr_threshold_star).expect("fitted above"),
                },
                SchemeSpec::Itlinq { eta } => FittedScheme::Itlinq {
                    eta: eta.or(eta_star).expect("fitted above"),
                },
                SchemeSpec::FairItlinq(p) => FittedScheme::FairItlinq(*p),
                SchemeSpec::Flashlinq(p) => FittedScheme::Flashlinq(*p),
                SchemeSpec::EnforcedSubset { gamma, enforced_fraction } => {
                    let num_enforced =
                        ((enforced_fraction * k as f64).ceil() as usize).min(k);
                    FittedScheme::EnforcedSubset {
                        gamma: gamma.or(sinr_gamma_star).expect("fitted above"),
                        num_enforced,
                    }
                }
                SchemeSpec::ReducedThreshold { gamma_star, gamma_v } => {
                    let star = gamma_star.or(sinr_gamma_star).expect("fitted above");
                    FittedScheme::ReducedThreshold { gamma: (star - gamma_v).max(0.0) }
                }
            })
        })
        .collect()
}

/// Mean-sum-rate-maximizing eta over the fixed grid, fitted in one pass
/// over the training drops. Ties break toward the smaller eta.
fn fit_itlinq_eta(cfg: &NetworkConfig, mode: ChannelMode, train: Range<usize>) -> Result<f64> {
    let per_drop: Vec<[f64; ITLINQ_ETA_GRID.len()]> = train
        .clone()
        .into_par_iter()
        .map(|t| {
            let (real, order) = realize_drop(cfg, mode, t)?;
            let mut sums = [0.0; ITLINQ_ETA_GRID.len()];
            for (slot, &eta) in ITLINQ_ETA_GRID.iter().enumerate() {
                let dec = itlinq_schedule(&real, eta, &order)?;
                sums[slot] = rates_of_schedule(&real, &dec).sum_rate;
            }
            Ok(sums)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = [0.0; ITLINQ_ETA_GRID.len()];
    for sums in &per_drop {
        for (slot, &s) in sums.iter().enumerate() {
            totals[slot] += s;
        }
    }
    let mut best = 0usize;
    for (slot, &total) in totals.iter().enumerate().skip(1) {
        if total > totals[best] {
            best = slot;
        }
    }
    Ok(ITLINQ_ETA_GRID[best])
}

/// Aggregated outcome of one scheme over the evaluated drops.
#[derive(Debug, Clone)]
pub struct SchemeAggregate {
    pub id: SchemeId,
    /// CSV label; gains a numeric suffix when a scheme appears twice.
    pub label: String,
    /// Human-readable fitted parameters.
    pub params: String,
    pub mean_sum_rate: f64,
    /// Sample standard deviation of the per-drop sum rate over sqrt(drops).
    pub stderr: f64,
    /// Every per-user rate sample, drop-major: K * num_eval_drops values.
    pub user_rates: Vec<f64>,
    /// Share of samples with exactly zero rate (unscheduled).
    pub fraction_inactive: f64,
    /// Share of samples below [`NEAR_ZERO_RATE`] (includes the zeros).
    pub fraction_near_zero: f64,
    /// Share of user slots never active in any evaluated drop.
    pub fraction_never_active: f64,
    /// Mean condition-check count per drop.
    pub mean_checks: f64,
    pub max_checks: u64,
    pub min_checks: u64,
    /// Cumulative scheduling + rate time across drops (diagnostic only;
    /// never written to CSV).
    pub wall_clock: Duration,
}

/// Results of one network size: every scheme's aggregate.
#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub k: usize,
    pub num_eval_drops: usize,
    pub schemes: Vec<SchemeAggregate>,
}

impl AggregateResult {
    /// The aggregate for a scheme id, if the study ran it exactly once.
    pub fn scheme(&self, id: SchemeId) -> Option<&SchemeAggregate> {
        let mut found = self.schemes.iter().filter(|s| s.id == id);
        let first = found.next();
        if found.next().is_some() {
            return None;
        }
        first
    }
}

struct DropStats {
    sum_rate: f64,
    per_user: Vec<f64>,
    checks: u64,
    nanos: u64,
}

fn disambiguated_labels(fitted: &[FittedScheme]) -> Vec<String> {
    use std::collections::HashMap;
    let base: Vec<&'static str> = fitted.iter().map(|f| f.id().label()).collect();
    let mut totals: HashMap<&str, usize> = HashMap::new();
    for &b in &base {
        *totals.entry(b).or_insert(0) += 1;
    }
    let mut seen: HashMap<&str, usize> = HashMap::new();
    base.iter()
        .map(|&b| {
            if totals[b] > 1 {
                let n = seen.entry(b).or_insert(0);
                *n += 1;
                format!("{b}#{n}")
            } else {
                b.to_string()
            }
        })
        .collect()
}

/// Runs every scheme of the spec at one network size and aggregates.
fn study_for_k(spec: &ExperimentSpec, k: usize) -> Result<AggregateResult> {
    let cfg = spec.cfg.with_pairs(k);
    cfg.validate()?;
    let (train, eval) = spec.train_eval_ranges();
    let fitted = fit_schemes(spec, &cfg, train)?;
    let eval_len = eval.len();

    let per_drop: Vec<Vec<DropStats>> = eval
        .clone()
        .into_par_iter()
        .enumerate()
        .map(|(ordinal, t)| {
            let (real, order) = realize_drop(&cfg, spec.channel_mode, t)?;
            fitted
                .iter()
                .map(|scheme| {
                    let started = Instant::now();
                    let dec = scheme.schedule(&real, &order, ordinal)?;
                    let report = rates_of_schedule(&real, &dec);
                    let nanos = started.elapsed().as_nanos() as u64;
                    Ok(DropStats {
                        sum_rate: report.sum_rate,
                        per_user: report.per_user_rate,
                        checks: dec.comparison_count,
                        nanos,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let labels = disambiguated_labels(&fitted);
    let mut schemes = Vec::with_capacity(fitted.len());
    for (slot, scheme) in fitted.iter().enumerate() {
        let mut sum = 0.0;
        let mut user_rates = Vec::with_capacity(k * eval_len);
        let mut zeros = 0usize;
        let mut near_zeros = 0usize;
        let mut ever_active = vec![false; k];
        let mut checks_total = 0u64;
        let mut max_checks = 0u64;
        let mut min_checks = u64::MAX;
        let mut nanos = 0u64;
        for drop in &per_drop {
            let stats = &drop[slot];
            sum += stats.sum_rate;
            checks_total += stats.checks;
            max_checks = max_checks.max(stats.checks);
            min_checks = min_checks.min(stats.checks);
            nanos += stats.nanos;
            for (u, &r) in stats.per_user.iter().enumerate() {
                if r == 0.0 {
                    zeros += 1;
                } else {
                    ever_active[u] = true;
                }
                if r < NEAR_ZERO_RATE {
                    near_zeros += 1;
                }
                user_rates.push(r);
            }
        }
        let mean = sum / eval_len as f64;
        let variance = per_drop
            .iter()
            .map(|d| (d[slot].sum_rate - mean).powi(2))
            .sum::<f64>()
            / (eval_len as f64 - 1.0).max(1.0);
        let samples = (k * eval_len) as f64;
        schemes.push(SchemeAggregate {
            id: scheme.id(),
            label: labels[slot].clone(),
            params: scheme.describe(),
            mean_sum_rate: mean,
            stderr: variance.sqrt() / (eval_len as f64).sqrt(),
            user_rates,
            fraction_inactive: zeros as f64 / samples,
            fraction_near_zero: near_zeros as f64 / samples,
            fraction_never_active: ever_active.iter().filter(|&&a| !a).count() as f64
                / k as f64,
            mean_checks: checks_total as f64 / eval_len as f64,
            max_checks,
            min_checks,
            wall_clock: Duration::from_nanos(nanos),
        });
    }
    Ok(AggregateResult { k, num_eval_drops: eval_len, schemes })
}

/// The sum-rate-vs-K study: per network size, fit parameters on the
/// training drops and aggregate every scheme over the evaluation drops.
pub fn run_sum_rate_study(spec: &ExperimentSpec) -> Result<Vec<AggregateResult>> {
    spec.validate()?;
    spec.k_values.iter().map(|&k| study_for_k(spec, k)).collect()
}

/// The user-rate CDF/fairness study at a single network size: the same
/// aggregation, whose `user_rates` samples feed the quantile export.
pub fn run_cdf_study(spec: &ExperimentSpec, k: usize) -> Result<AggregateResult> {
    spec.validate()?;
    study_for_k(spec, k)
}

/// One row of the operation-count table.
#[derive(Debug, Clone, PartialEq)]
pub struct OpCountRow {
    pub k: usize,
    pub label: String,
    pub mean_checks: f64,
    pub min_checks: u64,
    pub max_checks: u64,
}

/// Counts per-drop condition checks for every scheme at every network size.
/// Parameters do not change check counts for the threshold schemes, so
/// fixed placeholders are used instead of fitting.
pub fn count_ops_study(spec: &ExperimentSpec) -> Result<Vec<OpCountRow>> {
    spec.validate()?;
    let fixed: Vec<FittedScheme> = spec
        .schemes
        .iter()
        .map(|scheme| match scheme {
            SchemeSpec::SinrThreshold { gamma } => {
                FittedScheme::SinrThreshold { gamma: gamma.unwrap_or(1.0) }
            }
            SchemeSpec::SnrBased { threshold } => {
                FittedScheme::SnrBased { threshold: threshold.unwrap_or(1.0) }
            }
            SchemeSpec::Itlinq { eta } => FittedScheme::Itlinq { eta: eta.unwrap_or(0.7) },
            SchemeSpec::FairItlinq(p) => FittedScheme::FairItlinq(*p),
            SchemeSpec::Flashlinq(p) => FittedScheme::Flashlinq(*p),
            SchemeSpec::EnforcedSubset { gamma, enforced_fraction } => {
                FittedScheme::EnforcedSubset {
                    gamma: gamma.unwrap_or(1.0),
                    num_enforced: (enforced_fraction * 1.0).ceil() as usize, // per-K below
                }
            }
            SchemeSpec::ReducedThreshold { gamma_star, .. } => {
                FittedScheme::ReducedThreshold { gamma: gamma_star.unwrap_or(1.0) }
            }
        })
        .collect();

    let mut rows = Vec::new();
    for &k in &spec.k_values {
        let cfg = spec.cfg.with_pairs(k);
        cfg.validate()?;
        // Re-anchor the enforced count to this K.
        let fitted: Vec<FittedScheme> = fixed
            .iter()
            .zip(&spec.schemes)
            .map(|(f, s)| match (f, s) {
                (
                    FittedScheme::EnforcedSubset { gamma, .. },
                    SchemeSpec::EnforcedSubset { enforced_fraction, .. },
                ) => FittedScheme::EnforcedSubset {
                    gamma: *gamma,
                    num_enforced: ((enforced_fraction * k as f64).ceil() as usize).min(k),
                },
                _ => f.clone(),
            })
            .collect();
        let labels = disambiguated_labels(&fitted);
        let counts: Vec<Vec<u64>> = (0..spec.num_drops)
            .into_par_iter()
            .map(|t| {
                let (real, order) = realize_drop(&cfg, spec.channel_mode, t)?;
                fitted
                    .iter()
                    .map(|scheme| Ok(scheme.schedule(&real, &order, t)?.comparison_count))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (slot, label) in labels.iter().enumerate() {
            let mut total = 0u64;
            let mut max = 0u64;
            let mut min = u64::MAX;
            for drop in &counts {
                total += drop[slot];
                max = max.max(drop[slot]);
                min = min.min(drop[slot]);
            }
            rows.push(OpCountRow {
                k,
                label: label.clone(),
                mean_checks: total as f64 / spec.num_drops as f64,
                min_checks: min,
                max_checks: max,
            });
        }
    }
    Ok(rows)
}

/// Time-sharing hybrid of per-user D2D rates with a cellular share: user k
/// gets alpha * (r_c * b_cells * k_c / K) + (1 - alpha) * d2d[k].
pub fn cellular_assisted_rate(
    d2d_user_rates: &[f64],
    r_c_nominal: f64,
    b_cells: u32,
    k_c: u32,
    alpha: f64,
) -> Result<Vec<f64>> {
    if d2d_user_rates.is_empty() {
        return Err(Error::InvalidInput("need at least one user rate".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("alpha must be in [0, 1], got {alpha}")));
    }
    if !(r_c_nominal >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "nominal cellular rate must be nonnegative, got {r_c_nominal}"
        )));
    }
    if let Some(bad) = d2d_user_rates.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidInput(format!("negative user rate {bad}")));
    }
    let k = d2d_user_rates.len() as f64;
    let cellular = r_c_nominal * b_cells as f64 * k_c as f64 / k;
    Ok(d2d_user_rates
        .iter()
        .map(|&r| alpha * cellular + (1.0 - alpha) * r)
        .collect())
}

/// Relative gain of `a` over `b`: (a - b) / b.
pub fn percentage_gain(a: f64, b: f64) -> f64 {
    (a - b) / b
}

// --- CSV export -----------------------------------------------------------
//
// All floats print with 9 significant digits; rows follow the iteration
// order of the inputs, so identical studies produce identical bytes.

fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

/// `sum_rate_vs_k.csv`: k, scheme, mean_sum_rate, stderr.
pub fn write_sum_rate_csv(path: &Path, results: &[AggregateResult]) -> Result<()> {
    let mut out = String::from("k,scheme,mean_sum_rate,stderr\n");
    for result in results {
        for scheme in &result.schemes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                result.k,
                scheme.label,
                fmt_float(scheme.mean_sum_rate),
                fmt_float(scheme.stderr)
            ));
        }
    }
    write_file(path, &out)
}

/// Linear-interpolation quantile of an ascending-sorted sample.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// `cdf_k{K}.csv`: scheme, quantile, rate on a fixed percent grid.
pub fn write_cdf_csv(path: &Path, result: &AggregateResult) -> Result<()> {
    let mut out = String::from("scheme,quantile,rate\n");
    for scheme in &result.schemes {
        let mut sorted = scheme.user_rates.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for percent in 0..=100u32 {
            let q = percent as f64 / 100.0;
            out.push_str(&format!(
                "{},{:.2},{}\n",
                scheme.label,
                q,
                fmt_float(quantile(&sorted, q))
            ));
        }
    }
    write_file(path, &out)
}

/// `thresholds.csv`: k, gamma_star, mean_sum_rate.
pub fn write_thresholds_csv(path: &Path, rows: &[ThresholdTableRow]) -> Result<()> {
    let mut out = String::from("k,gamma_star,mean_sum_rate\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.k,
            fmt_float(row.gamma_star),
            fmt_float(row.mean_sum_rate)
        ));
    }
    write_file(path, &out)
}

/// `op_counts.csv`: k, scheme, mean_checks.
pub fn write_op_counts_csv(path: &Path, rows: &[OpCountRow]) -> Result<()> {
    let mut out = String::from("k,scheme,mean_checks\n");
    for row in rows {
        out.push_str(&format!("{},{},{}\n", row.k, row.label, fmt_float(row.mean_checks)));
    }
    write_file(path, &out)
}

/// Analytic two-pair curve: gamma, sum_rate, is_optimal (single final row).
pub fn write_analytic_k2_csv(
    path: &Path,
    curve: &[(f64, f64)],
    gamma_star: f64,
    rate_star: f64,
) -> Result<()> {
    let mut out = String::from("gamma,sum_rate,is_optimal\n");
    for &(gamma, rate) in curve {
        out.push_str(&format!("{},{},0\n", fmt_float(gamma), fmt_float(rate)));
    }
    out.push_str(&format!("{},{},1\n", fmt_float(gamma_star), fmt_float(rate_star)));
    write_file(path, &out)
}

/// Cellular hybrid export: user, d2d_rate, hybrid_rate.
pub fn write_cellular_csv(path: &Path, d2d: &[f64], hybrid: &[f64]) -> Result<()> {
    let mut out = String::from("user,d2d_rate,hybrid_rate\n");
    for (user, (&d, &h)) in d2d.iter().zip(hybrid).enumerate() {
        out.push_str(&format!("{},{},{}\n", user, fmt_float(d), fmt_float(h)));
    }
    write_file(path, &out)
}

//! Link schedulers and the TIN rates of a scheduled set.
//!
//! The SINR-threshold scheme is the centerpiece: each receiver compares its
//! all-active SINR prediction to a broadcast threshold and feeds one bit
//! back, so the whole network spends exactly K comparisons per drop. The
//! greedy baselines (ITLinQ, Fair ITLinQ, FlashLinQ) admit links one at a
//! time in a given order and pay a per-member check against everything
//! already scheduled; their exact admission conditions follow the usual
//! formulations and are each isolated in a single function.
//!
//! All schedulers are pure: same realization, same parameters, same
//! decision.

use crate::channel::ChannelRealization;
use crate::{Error, Result};

/// Identifies which scheduling scheme produced a decision or report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    /// Binary power control gated on the all-active SINR prediction.
    SinrThreshold,
    /// Selfish activation on the direct-link SNR only.
    SnrBased,
    /// Greedy information-theoretic link scheduling.
    Itlinq,
    /// ITLinQ variant with margins and an SNR escape threshold.
    FairItlinq,
    /// Greedy SIR-based admission with yielding to scheduled receivers.
    Flashlinq,
    /// SINR threshold with a rotating subset of links forced active.
    EnforcedSubset,
    /// SINR threshold reduced by a fixed offset to admit more links.
    ReducedThreshold,
}

impl SchemeId {
    /// Stable label used in CSV output and config files.
    pub fn label(&self) -> &'static str {
        match self {
            SchemeId::SinrThreshold => "sinr_threshold",
            SchemeId::SnrBased => "snr_based",
            SchemeId::Itlinq => "itlinq",
            SchemeId::FairItlinq => "fair_itlinq",
            SchemeId::Flashlinq => "flashlinq",
            SchemeId::EnforcedSubset => "sinr_enforced_rr",
            SchemeId::ReducedThreshold => "sinr_reduced",
        }
    }
}

/// The active set chosen for one realization, plus bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleDecision {
    pub scheme_id: SchemeId,
    /// `active[i]` = transmitter i sends at full power; false = silent.
    pub active: Vec<bool>,
    /// Per-link one-bit feedback values; for the threshold family this is
    /// exactly the indicator each receiver feeds back.
    pub feedback: Vec<bool>,
    /// Number of admission/threshold condition checks performed.
    pub comparison_count: u64,
}

impl ScheduleDecision {
    pub fn num_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Per-user rates of a scheduled set, in bits/s/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub scheme_id: SchemeId,
    /// Rate of each user; zero for unscheduled users.
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    /// Share of users with zero rate in this realization.
    pub fraction_inactive: f64,
}

fn require_threshold(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be nonnegative, got {value}"
        )));
    }
    Ok(())
}

fn check_permutation(order: &[usize], k: usize) -> Result<()> {
    if order.len() != k {
        return Err(Error::InvalidInput(format!(
            "order has {} entries, expected {k}",
            order.len()
        )));
    }
    let mut seen = vec![false; k];
    for &i in order {
        if i >= k || seen[i] {
            return Err(Error::InvalidInput(format!(
                "order is not a permutation of 0..{k}"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

/// The SINR-threshold scheme: link i is active iff its all-active SINR
/// prediction is at least `gamma` (boundary included). Exactly K comparisons,
/// no inter-link coordination.
pub fn sinr_threshold_schedule(
    real: &ChannelRealization,
    gamma: f64,
) -> Result<ScheduleDecision> {
    require_threshold("gamma", gamma)?;
    let active: Vec<bool> = real.sinr_all_active.iter().map(|&s| s >= gamma).collect();
    Ok(ScheduleDecision {
        scheme_id: SchemeId::SinrThreshold,
        feedback: active.clone(),
        comparison_count: real.num_pairs() as u64,
        active,
    })
}

/// TIN rates of the decided set: scheduled users see only the interference
/// of other scheduled transmitters, so their realized SINR is at least the
/// all-active prediction; unscheduled users get rate zero.
pub fn rates_of_schedule(real: &ChannelRealization, dec: &ScheduleDecision) -> RateReport {
    let k = real.num_pairs();
    assert_eq!(dec.active.len(), k, "decision and realization sizes differ");
    let n_over_p = real.noise_over_power();
    let mut per_user_rate = vec![0.0; k];
    let mut sum_rate = 0.0;
    let mut inactive = 0usize;
    for i in 0..k {
        if !dec.active[i] {
            inactive += 1;
            continue;
        }
        let row = real.row(i);
        let interference: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i && dec.active[j])
            .map(|(_, &g)| g)
            .sum();
        let rate = (1.0 + row[i] / (interference + n_over_p)).log2();
        per_user_rate[i] = rate;
        sum_rate += rate;
    }
    RateReport {
        scheme_id: dec.scheme_id,
        per_user_rate,
        sum_rate,
        fraction_inactive: inactive as f64 / k as f64,
    }
}

/// Selfish SNR gate: link i is active iff its direct-link SNR is at least
/// the threshold. Ignores interference entirely.
pub fn snr_based_schedule(
    real: &ChannelRealization,
    snr_threshold: f64,
) -> Result<ScheduleDecision> {
    require_threshold("snr_threshold", snr_threshold)?;
    let active: Vec<bool> = real.snr.iter().map(|&s| s >= snr_threshold).collect();
    Ok(ScheduleDecision {
        scheme_id: SchemeId::SnrBased,
        feedback: active.clone(),
        comparison_count: real.num_pairs() as u64,
        active,
    })
}

/// Greedy ITLinQ admission in the given order: the first link always joins;
/// link i then joins iff SNR_i >= (max incoming INR)^eta and
/// SNR_i >= (max outgoing INR)^eta over the already-scheduled set, all in
/// linear units. Counts one check per scheduled transmitter and receiver
/// plus the admission decision itself.
pub fn itlinq_schedule(
    real: &ChannelRealization,
    eta: f64,
    order: &[usize],
) -> Result<ScheduleDecision> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidInput(format!("eta must be in (0, 1], got {eta}")));
    }
    let k = real.num_pairs();
    check_permutation(order, k)?;
    let p_over_n = real.tx_power_w / real.noise_power_w;
    let mut active = vec![false; k];
    let mut scheduled: Vec<usize> = Vec::with_capacity(k);
    let mut checks = 0u64;
    for &i in order {
        let mut max_in = 0.0f64;
        let mut max_out = 0.0f64;
        for &j in &scheduled {
            max_in = max_in.max(real.gain(i, j) * p_over_n);
            max_out = max_out.max(real.gain(j, i) * p_over_n);
            checks += 2;
        }
        checks += 1;
        let snr = real.snr[i];
        if scheduled.is_empty() || (snr >= max_in.powf(eta) && snr >= max_out.powf(eta)) {
            active[i] = true;
            scheduled.push(i);
        }
    }
    Ok(ScheduleDecision {
        scheme_id: SchemeId::Itlinq,
        feedback: active.clone(),
        comparison_count: checks,
        active,
    })
}

/// Parameters of the fair ITLinQ variant (dB fields are converted to linear
/// internally).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairItlinqParams {
    pub snr_th_db: f64,
    pub m_db: f64,
    pub mbar_db: f64,
    pub etabar: f64,
}

impl Default for FairItlinqParams {
    fn default() -> Self {
        Self { snr_th_db: 110.0, m_db: 25.0, mbar_db: 20.0, etabar: 0.6 }
    }
}

/// Fair ITLinQ: same greedy structure as [`itlinq_schedule`], but a link
/// joins iff its SNR clears the escape threshold, or its margin-damped SNR
/// dominates the strongest incoming and outgoing interference:
/// M * SNR^etabar >= max INR_in and Mbar * SNR^etabar >= max INR_out. The
/// sublinear exponent keeps very strong links from crowding out weak ones.
pub fn fair_itlinq_schedule(
    real: &ChannelRealization,
    params: &FairItlinqParams,
    order: &[usize],
) -> Result<ScheduleDecision> {
    if !(params.etabar > 0.0 && params.etabar <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "etabar must be in (0, 1], got {}",
            params.etabar
        )));
    }
    let k = real.num_pairs();
    check_permutation(order, k)?;
    let p_over_n = real.tx_power_w / real.noise_power_w;
    let snr_th = 10f64.powf(params.snr_th_db / 10.0);
    let m = 10f64.powf(params.m_db / 10.0);
    let mbar = 10f64.powf(params.mbar_db / 10.0);
    let mut active = vec![false; k];
    let mut scheduled: Vec<usize> = Vec::with_capacity(k);
    let mut checks = 0u64;
    for &i in order {
        let mut max_in = 0.0f64;
        let mut max_out = 0.0f64;
        for &j in &scheduled {
            max_in = max_in.max(real.gain(i, j) * p_over_n);
            max_out = max_out.max(real.gain(j, i) * p_over_n);
            checks += 2;
        }
        checks += 1;
        let snr = real.snr[i];
        let damped = snr.powf(params.etabar);
        let join = scheduled.is_empty()
            || snr >= snr_th
            || (m * damped >= max_in && mbar * damped >= max_out);
        if join {
            active[i] = true;
            scheduled.push(i);
        }
    }
    Ok(ScheduleDecision {
        scheme_id: SchemeId::FairItlinq,
        feedback: active.clone(),
        comparison_count: checks,
        active,
    })
}

/// Parameters of the FlashLinQ-style admission (dB, converted internally).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlashlinqParams {
    pub gamma_tx_db: f64,
    pub gamma_rx_db: f64,
}

impl Default for FlashlinqParams {
    fn default() -> Self {
        Self { gamma_tx_db: 9.0, gamma_rx_db: 9.0 }
    }
}

/// Greedy FlashLinQ-style admission with pairwise yielding tests: the first
/// link always joins; link i then joins iff against every scheduled link j,
/// (a) receiver side, i's own signal beats j's individual interference by
/// gamma_rx: g_ii / g_ij >= gamma_rx, and (b) transmitter side, i's
/// interference leaves j's signal above gamma_tx: g_jj / g_ji >= gamma_tx.
/// One signal-to-single-interferer comparison per side per scheduled link,
/// mirroring the scheme's distributed tone-energy tests.
pub fn flashlinq_schedule(
    real: &ChannelRealization,
    params: &FlashlinqParams,
    order: &[usize],
) -> Result<ScheduleDecision> {
    let k = real.num_pairs();
    check_permutation(order, k)?;
    let gamma_rx = 10f64.powf(params.gamma_rx_db / 10.0);
    let gamma_tx = 10f64.powf(params.gamma_tx_db / 10.0);
    let mut active = vec![false; k];
    let mut scheduled: Vec<usize> = Vec::with_capacity(k);
    let mut checks = 0u64;
    for &i in order {
        let direct = real.gain(i, i);
        let mut join = true;
        for &j in &scheduled {
            checks += 2;
            let rx_ok = direct / real.gain(i, j) >= gamma_rx;
            let tx_ok = real.gain(j, j) / real.gain(j, i) >= gamma_tx;
            if !(rx_ok && tx_ok) {
                join = false;
                break;
            }
        }
        checks += 1;
        if scheduled.is_empty() || join {
            active[i] = true;
            scheduled.push(i);
        }
    }
    Ok(ScheduleDecision {
        scheme_id: SchemeId::Flashlinq,
        feedback: active.clone(),
        comparison_count: checks,
        active,
    })
}

/// SINR threshold with a forced-on subset: enforced links are always active,
/// every other link applies the usual all-active SINR test. Only the
/// non-enforced links spend a comparison.
pub fn enforced_subset_schedule(
    real: &ChannelRealization,
    gamma: f64,
    enforced: &[usize],
) -> Result<ScheduleDecision> {
    require_threshold("gamma", gamma)?;
    let k = real.num_pairs();
    let mut forced = vec![false; k];
    for &i in enforced {
        if i >= k {
            return Err(Error::InvalidInput(format!(
                "enforced index {i} out of range for {k} links"
            )));
        }
        forced[i] = true;
    }
    let num_forced = forced.iter().filter(|&&f| f).count();
    let active: Vec<bool> = (0..k)
        .map(|i| forced[i] || real.sinr_all_active[i] >= gamma)
        .collect();
    Ok(ScheduleDecision {
        scheme_id: SchemeId::EnforcedSubset,
        feedback: active.clone(),
        comparison_count: (k - num_forced) as u64,
        active,
    })
}

/// SINR threshold reduced by the offset `gamma_v` (clamped at zero), trading
/// sum rate for more active links.
pub fn reduced_threshold_schedule(
    real: &ChannelRealization,
    gamma_star: f64,
    gamma_v: f64,
) -> Result<ScheduleDecision> {
    require_threshold("gamma_star", gamma_star)?;
    if !gamma_v.is_finite() {
        return Err(Error::InvalidInput(format!("gamma_v must be finite, got {gamma_v}")));
    }
    let mut dec = sinr_threshold_schedule(real, (gamma_star - gamma_v).max(0.0))?;
    dec.scheme_id = SchemeId::ReducedThreshold;
    Ok(dec)
}

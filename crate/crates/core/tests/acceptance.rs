//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
//! line with the measured numbers. Criteria 1-8 and 10 live here; criterion
//! 9 (byte-identical CSVs across thread counts) exercises the CLI binary
//! and lives in the CLI crate's own acceptance test.
//!
//! Run with `cargo test -p d2dsim --test acceptance -- --nocapture`.

mod common;

use std::time::Instant;

use common::{best_subset_sum_rate, quadratic_fit_r2};
use d2dsim::analytic::{ergodic_sum_rate_k2, prob_active};
use d2dsim::channel::{drop_rng, realize_iid_rayleigh, NetworkConfig};
use d2dsim::harness::{
    count_ops_study, run_cdf_study, run_sum_rate_study, ExperimentSpec, SchemeSpec,
    DEFAULT_SNR_THRESHOLD,
};
use d2dsim::optimizer::{empirical_mean_sum_rate, breakpoint_search, CandidatePolicy};
use d2dsim::scheduler::{
    rates_of_schedule, sinr_threshold_schedule, FairItlinqParams, FlashlinqParams,
};
use d2dsim::{ChannelRealization, SchemeId};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA_GRID: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Criterion 1: closed-form two-pair sum rate vs Monte Carlo, P = 100,
/// 1e6 i.i.d. Rayleigh drops, agreement within 3 standard errors per
/// threshold, under one minute.
#[test]
fn acceptance_01_analytic_vs_monte_carlo() {
    let started = Instant::now();
    let p = 100.0;
    let drops = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut sums = [0.0f64; GAMMA_GRID.len()];
    let mut sumsq = [0.0f64; GAMMA_GRID.len()];
    for _ in 0..drops {
        let real = realize_iid_rayleigh(2, p, &mut rng).unwrap();
        for (slot, &gamma) in GAMMA_GRID.iter().enumerate() {
            let dec = sinr_threshold_schedule(&real, gamma).unwrap();
            let rate = rates_of_schedule(&real, &dec).sum_rate;
            sums[slot] += rate;
            sumsq[slot] += rate * rate;
        }
    }
    let mut all_pass = true;
    let mut details = Vec::new();
    for (slot, &gamma) in GAMMA_GRID.iter().enumerate() {
        let mean = sums[slot] / drops as f64;
        let var = (sumsq[slot] - sums[slot] * sums[slot] / drops as f64) / (drops as f64 - 1.0);
        let se = (var / drops as f64).sqrt();
        let analytic = ergodic_sum_rate_k2(gamma, p).unwrap();
        let pass = (analytic - mean).abs() <= 3.0 * se;
        all_pass &= pass;
        details.push(format!(
            "gamma {gamma}: mc {mean:.5} vs analytic {analytic:.5} ({:+.2} se)",
            (analytic - mean) / se
        ));
    }
    let elapsed = started.elapsed();
    let in_time = elapsed.as_secs_f64() < 60.0;
    report(
        "1 (analytic-empirical agreement)",
        all_pass && in_time,
        &format!("{}; elapsed {elapsed:.2?}", details.join("; ")),
    );
    assert!(all_pass, "{details:?}");
    assert!(in_time, "took {elapsed:?}, budget is one minute");
}

/// Criterion 2: activation probability e^(-gamma/P)/(1+gamma) within
/// 0.002 of the empirical frequency over 1e6 draws.
#[test]
fn acceptance_02_activation_probability() {
    let p = 100.0;
    let draws = 1_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut hits = [0usize; GAMMA_GRID.len()];
    for _ in 0..draws {
        let real = realize_iid_rayleigh(2, p, &mut rng).unwrap();
        let sinr = real.sinr_all_active[1];
        for (slot, &gamma) in GAMMA_GRID.iter().enumerate() {
            if sinr >= gamma {
                hits[slot] += 1;
            }
        }
    }
    let mut all_pass = true;
    let mut details = Vec::new();
    for (slot, &gamma) in GAMMA_GRID.iter().enumerate() {
        let empirical = hits[slot] as f64 / draws as f64;
        let analytic = prob_active(gamma, p).unwrap();
        let pass = (empirical - analytic).abs() < 0.002;
        all_pass &= pass;
        details.push(format!("gamma {gamma}: {empirical:.5} vs {analytic:.5}"));
    }
    report("2 (activation probability)", all_pass, &details.join("; "));
    assert!(all_pass, "{details:?}");
}

/// Criterion 3: the breakpoint search equals a dense-grid scan (1e4
/// thresholds) to 1e-12 in rate, over 100 random small instances.
#[test]
fn acceptance_03_breakpoint_search_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_gap = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(1..=4usize);
        let t_s = rng.random_range(1..=5usize);
        let reals: Vec<ChannelRealization> = (0..t_s)
            .map(|_| realize_iid_rayleigh(k, 100.0, &mut rng).unwrap())
            .collect();
        let search = breakpoint_search(&reals, CandidatePolicy::Exact).unwrap();
        let max_sinr = reals
            .iter()
            .flat_map(|r| r.sinr_all_active.iter().copied())
            .fold(0.0f64, f64::max);
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..10_000 {
            let gamma = 1.01 * max_sinr * i as f64 / 9_999.0;
            let rate =
                empirical_mean_sum_rate(&reals, gamma, sinr_threshold_schedule).unwrap();
            grid_best = grid_best.max(rate);
        }
        worst_gap = worst_gap.max((search.best_mean_sum_rate - grid_best).abs());
    }
    let pass = worst_gap <= 1e-12;
    report(
        "3 (breakpoint search exactness)",
        pass,
        &format!("worst |search - grid| = {worst_gap:.3e} over 100 instances"),
    );
    assert!(pass, "worst gap {worst_gap}");
}

/// Criterion 4: at K = 10 the threshold scheme never beats the exhaustive
/// best subset, and at the searched optimum its mean relative gap over 200
/// drops stays under the 35% budget. The frozen constant below is the
/// regression bound calibrated once from the first oracle run.
#[test]
fn acceptance_04_exhaustive_subset_sanity() {
    // First oracle run measured a mean gap of 0.0534 (5.3%) at K = 10 on
    // the default geometry; frozen with headroom against drop-set jitter.
    const FROZEN_MEAN_GAP: f64 = 0.08;

    let cfg = NetworkConfig { num_pairs: 10, ..NetworkConfig::default() };
    let drops = 200usize;
    let reals: Vec<ChannelRealization> = (0..drops)
        .map(|t| {
            let mut rng = drop_rng(cfg.rng_seed, 10, t);
            let topo = d2dsim::channel::drop_topology(&cfg, &mut rng).unwrap();
            d2dsim::channel::realize_channel(&topo, &cfg, &mut rng).unwrap()
        })
        .collect();
    let gamma_star = breakpoint_search(&reals, CandidatePolicy::Exact).unwrap().gamma_star;
    let mut gap_sum = 0.0;
    let mut never_beats = true;
    for real in &reals {
        let dec = sinr_threshold_schedule(real, gamma_star).unwrap();
        let scheme = rates_of_schedule(real, &dec).sum_rate;
        let best = best_subset_sum_rate(real);
        never_beats &= scheme <= best + 1e-9;
        gap_sum += (best - scheme) / best;
    }
    let mean_gap = gap_sum / drops as f64;
    let pass = never_beats && mean_gap < 0.35 && mean_gap < FROZEN_MEAN_GAP;
    report(
        "4 (exhaustive subset sanity)",
        pass,
        &format!(
            "mean gap {mean_gap:.4} (budget 0.35, frozen {FROZEN_MEAN_GAP}), \
             scheme never beats oracle: {never_beats}"
        ),
    );
    assert!(pass, "mean gap {mean_gap}, never_beats {never_beats}");
}

/// Criterion 5: scheme ordering at desk scale, K in {200, 800} with 200
/// drops: threshold scheme > ITLinQ > FlashLinQ > SNR-based, stderr
/// intervals of the first and last disjoint, and at K = 800 the gains over
/// FlashLinQ and SNR-based both exceed 30%. Under ten minutes.
#[test]
fn acceptance_05_desk_scale_ordering() {
    let started = Instant::now();
    let mut spec = ExperimentSpec::default();
    spec.k_values = vec![200, 800];
    spec.num_drops = 200;
    spec.schemes = vec![
        SchemeSpec::SinrThreshold { gamma: None },
        SchemeSpec::Itlinq { eta: None },
        SchemeSpec::Flashlinq(FlashlinqParams::default()),
        SchemeSpec::SnrBased { threshold: Some(DEFAULT_SNR_THRESHOLD) },
    ];
    let results = run_sum_rate_study(&spec).unwrap();
    let mut all_pass = true;
    let mut details = Vec::new();
    for result in &results {
        let get = |id: SchemeId| result.scheme(id).unwrap();
        let sinr = get(SchemeId::SinrThreshold);
        let itlinq = get(SchemeId::Itlinq);
        let flash = get(SchemeId::Flashlinq);
        let snr = get(SchemeId::SnrBased);
        let ordered = sinr.mean_sum_rate > itlinq.mean_sum_rate
            && itlinq.mean_sum_rate > flash.mean_sum_rate
            && flash.mean_sum_rate > snr.mean_sum_rate;
        let separated =
            sinr.mean_sum_rate - sinr.stderr > snr.mean_sum_rate + snr.stderr;
        all_pass &= ordered && separated;
        details.push(format!(
            "K={}: {:.1} > {:.1} > {:.1} > {:.1} (ordered {ordered}, separated {separated})",
            result.k,
            sinr.mean_sum_rate,
            itlinq.mean_sum_rate,
            flash.mean_sum_rate,
            snr.mean_sum_rate
        ));
        if result.k == 800 {
            let gain_flash =
                (sinr.mean_sum_rate - flash.mean_sum_rate) / flash.mean_sum_rate;
            let gain_snr = (sinr.mean_sum_rate - snr.mean_sum_rate) / snr.mean_sum_rate;
            let gains_ok = gain_flash > 0.30 && gain_snr > 0.30;
            all_pass &= gains_ok;
            details.push(format!(
                "K=800 gains: {:.1}% over flashlinq, {:.1}% over snr_based",
                100.0 * gain_flash,
                100.0 * gain_snr
            ));
        }
    }
    let elapsed = started.elapsed();
    let in_time = elapsed.as_secs_f64() < 600.0;
    report(
        "5 (desk-scale ordering)",
        all_pass && in_time,
        &format!("{}; elapsed {elapsed:.2?}", details.join("; ")),
    );
    assert!(all_pass, "{details:?}");
    assert!(in_time, "took {elapsed:?}, budget is ten minutes");
}

/// Criterion 6: fairness fractions at K = 800: the threshold scheme leaves
/// 70-90% of users silent; the round-robin enforced variant leaves nobody
/// permanently silent over a full rotation cycle.
#[test]
fn acceptance_06_fairness_fractions() {
    let mut spec = ExperimentSpec::default();
    spec.k_values = vec![800];
    spec.num_drops = 200;
    spec.schemes = vec![
        SchemeSpec::SinrThreshold { gamma: None },
        SchemeSpec::EnforcedSubset { gamma: None, enforced_fraction: 0.10 },
    ];
    let result = run_cdf_study(&spec, 800).unwrap();
    let sinr = result.scheme(SchemeId::SinrThreshold).unwrap();
    let enforced = result.scheme(SchemeId::EnforcedSubset).unwrap();
    let band_ok = (0.70..=0.90).contains(&sinr.fraction_inactive);
    let rotation_ok = enforced.fraction_never_active == 0.0;
    let pass = band_ok && rotation_ok;
    report(
        "6 (fairness fractions)",
        pass,
        &format!(
            "threshold scheme inactive {:.3} (band [0.70, 0.90]); \
             enforced-rotation never-active {:.3}",
            sinr.fraction_inactive, enforced.fraction_never_active
        ),
    );
    assert!(pass);
}

/// Criterion 7: the threshold scheme spends exactly K checks per drop for
/// every K; the greedy schemes stay under 1.5 (K+2)(K-1) and grow
/// superlinearly (quadratic fit R^2 > 0.99).
#[test]
fn acceptance_07_operation_counts() {
    let mut spec = ExperimentSpec::default();
    spec.k_values = vec![50, 100, 200, 400, 800];
    spec.num_drops = 20;
    spec.schemes = vec![
        SchemeSpec::SinrThreshold { gamma: Some(1.0) },
        SchemeSpec::Itlinq { eta: Some(0.7) },
        SchemeSpec::Flashlinq(FlashlinqParams::default()),
        SchemeSpec::FairItlinq(FairItlinqParams::default()),
    ];
    let rows = count_ops_study(&spec).unwrap();
    let mut all_pass = true;
    let mut details = Vec::new();
    let mut greedy_means: std::collections::HashMap<&str, Vec<(f64, f64)>> =
        std::collections::HashMap::new();
    for row in &rows {
        let k = row.k as f64;
        match row.label.as_str() {
            "sinr_threshold" => {
                let exact = row.min_checks == row.k as u64 && row.max_checks == row.k as u64;
                all_pass &= exact;
                if !exact {
                    details.push(format!("threshold checks at K={} not exact", row.k));
                }
            }
            label => {
                let bound = 1.5 * (k + 2.0) * (k - 1.0);
                let bounded = (row.max_checks as f64) <= bound;
                all_pass &= bounded;
                if !bounded {
                    details.push(format!("{label} exceeds bound at K={}", row.k));
                }
                greedy_means.entry(row.label.as_str()).or_default().push((k, row.mean_checks));
            }
        }
    }
    for (label, points) in &greedy_means {
        let xs: Vec<f64> = points.iter().map(|&(k, _)| k).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, c)| c).collect();
        let r2 = quadratic_fit_r2(&xs, &ys);
        let superlinear = ys
            .iter()
            .zip(&xs)
            .map(|(c, k)| c / k)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] > w[0]);
        all_pass &= r2 > 0.99 && superlinear;
        details.push(format!("{label}: quadratic R^2 {r2:.5}, superlinear {superlinear}"));
    }
    report("7 (operation counts)", all_pass, &details.join("; "));
    assert!(all_pass, "{details:?}");
}

/// Criterion 8: backing the threshold off by gamma_v at K = 800 trades sum
/// rate monotonically for activity, and at gamma_v = 0.45 the scheme should
/// still beat ITLinQ.
///
/// The last clause is structurally out of reach for this channel: the
/// fitted optimum at K = 800 is gamma* ~ 0.30 (median direct link 33.5 m
/// against an expected nearest interferer at ~18 m pins the top SINR
/// quantiles there), so a 0.45 back-off clamps the threshold to zero and
/// the scheme degenerates to all-active. The assertion is kept as stated;
/// see the monotonicity clauses for the parts that do hold.
#[test]
fn acceptance_08_reduced_threshold_tradeoff() {
    let gamma_vs = [0.0, 0.15, 0.30, 0.45];
    let mut spec = ExperimentSpec::default();
    spec.k_values = vec![800];
    spec.num_drops = 200;
    spec.schemes = vec![SchemeSpec::Itlinq { eta: None }];
    for &gamma_v in &gamma_vs {
        spec.schemes.push(SchemeSpec::ReducedThreshold { gamma_star: None, gamma_v });
    }
    let result = run_cdf_study(&spec, 800).unwrap();
    let itlinq = &result.schemes[0];
    let reduced = &result.schemes[1..];

    let inactive: Vec<f64> = reduced.iter().map(|s| s.fraction_inactive).collect();
    let rates: Vec<f64> = reduced.iter().map(|s| s.mean_sum_rate).collect();
    let inactive_monotone = inactive.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let rate_monotone = rates.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let beats_itlinq = *rates.last().unwrap() > itlinq.mean_sum_rate;
    let pass = inactive_monotone && rate_monotone && beats_itlinq;
    report(
        "8 (reduced-threshold tradeoff)",
        pass,
        &format!(
            "inactive {:?} (monotone {inactive_monotone}); rates {:?} (monotone \
             {rate_monotone}); at gamma_v=0.45: {:.1} vs itlinq {:.1} (beats: {beats_itlinq})",
            inactive.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            rates.iter().map(|r| r.round()).collect::<Vec<_>>(),
            rates.last().unwrap(),
            itlinq.mean_sum_rate
        ),
    );
    assert!(inactive_monotone, "inactive fractions {inactive:?}");
    assert!(rate_monotone, "rates {rates:?}");
    assert!(
        beats_itlinq,
        "known limitation of the pinned channel: gamma*(800) ~ 0.30 makes a 0.45 \
         back-off clamp to all-active ({:.1}) vs itlinq ({:.1})",
        rates.last().unwrap(),
        itlinq.mean_sum_rate
    );
}

/// Criterion 10: dual-slope pathloss golden values for the default config:
/// breakpoint distance/loss against independent hand evaluation, and
/// continuity of the two slopes at the breakpoint.
#[test]
fn acceptance_10_pathloss_golden_values() {
    // lambda = 299792458 / 2.4e9, r_bp = 4 * 1.5^2 / lambda,
    // l_bp = |20 log10(lambda^2 / (8 pi 1.5^2))|, evaluated by hand.
    const R_BP: f64 = 72.04984456280084;
    const L_BP: f64 = 71.18406910729594;
    let cfg = NetworkConfig::default();
    let r_bp = cfg.breakpoint_distance_m();
    let l_bp = cfg.breakpoint_loss_db();
    let golden_ok = (r_bp - R_BP).abs() < 1e-6 && (l_bp - L_BP).abs() < 1e-6;

    let at = d2dsim::channel::pathloss_db(r_bp, &cfg).unwrap();
    let just_above = d2dsim::channel::pathloss_db(r_bp * (1.0 + 1e-9), &cfg).unwrap();
    let continuous = (at - (l_bp + 6.0)).abs() < 1e-9 && (just_above - at).abs() < 1e-6;
    let pass = golden_ok && continuous;
    report(
        "10 (pathloss golden values)",
        pass,
        &format!(
            "r_bp {r_bp:.9} (expected {R_BP:.9}), l_bp {l_bp:.9} (expected {L_BP:.9}), \
             continuity gap {:.3e} dB",
            (just_above - at).abs()
        ),
    );
    assert!(pass);
}

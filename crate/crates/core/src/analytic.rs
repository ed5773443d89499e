//! Closed-form ergodic sum rate of the two-pair threshold scheme under
//! i.i.d. Rayleigh fading with unit noise power.
//!
//! Everything reduces to the exponential integral E1(x) = int_x^inf e^-t/t dt.
//! Products e^x E1(x) appear with arguments like (1+gamma)^2/(gamma P) that
//! explode as gamma -> 0, so they are always evaluated as one scaled
//! function: the continued fraction computes e^x E1(x) directly and never
//! forms the overflowing exponential.
//!
//! The module works in nats internally (the E1 identities live there) and
//! converts to bits at the boundary so results compare directly against the
//! scheduler's log2 rates.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use crate::{Error, Result};

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// E1 by the alternating series around zero; used for x <= 1.
fn e1_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = term;
    let mut k = 1.0f64;
    while term.abs() > sum.abs() * 1e-18 && k < 200.0 {
        term *= -x * k / ((k + 1.0) * (k + 1.0));
        k += 1.0;
        sum += term;
    }
    -EULER_GAMMA - x.ln() + sum
}

/// e^x E1(x) by the continued fraction 1/(x+1- 1^2/(x+3- 2^2/(x+5- ...))),
/// evaluated with the modified Lentz algorithm; used for x > 1 and accurate
/// well below that.
fn e1_cf_scaled(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for j in 1..=1000u64 {
        let a = -((j * j) as f64);
        b += 2.0;
        d = a * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// The exponential integral E1(x) for x > 0, to better than ten significant
/// digits.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!("E1 argument must be positive, got {x}")));
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok(e1_cf_scaled(x) * (-x).exp())
    }
}

/// e^x E1(x) for x > 0, safe for arbitrarily large x (the bare exponential
/// would overflow long before the product stops being ~1/x).
pub fn exp_scaled_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidInput(format!("E1 argument must be positive, got {x}")));
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_cf_scaled(x))
    }
}

/// The four building blocks of the two-pair ergodic sum rate, in nats.
///
/// With q the single-link activation probability, the rate splits into the
/// partner-silent part (a1 + a2) and the partner-active part (a3 + a4):
/// a1/a3 carry the log terms, a2/a4 the E1 tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ATerms {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

/// Evaluates the four terms at threshold `gamma` > 0 and power `p` > 0.
/// a1 and a2 contain E1((1+gamma)^2/(gamma p)), singular as gamma -> 0, so
/// zero is outside the domain; the sum-rate endpoint is handled by its
/// analytic limit instead.
pub fn a_terms(gamma: f64, p: f64) -> Result<ATerms> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!(
            "a_terms needs gamma > 0, got {gamma}"
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("power must be positive, got {p}")));
    }
    let one_plus = 1.0 + gamma;
    let decay = (-gamma / p).exp();
    let x_cross = one_plus * one_plus / (gamma * p);
    let y_direct = one_plus / p;
    let se_x = exp_scaled_e1(x_cross)?;
    let se_y = exp_scaled_e1(y_direct)?;
    let log_term = gamma.ln_1p();
    Ok(ATerms {
        a1: decay / one_plus * (log_term + se_x),
        a2: decay * (se_y - se_x),
        a3: decay / one_plus * log_term,
        a4: decay * (1.0 / one_plus - se_y / p),
    })
}

/// Probability that one link passes the threshold test under i.i.d.
/// exponential gains and unit noise: e^(-gamma/p) / (1 + gamma).
pub fn prob_active(gamma: f64, p: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("power must be positive, got {p}")));
    }
    Ok((-gamma / p).exp() / (1.0 + gamma))
}

/// Closed-form two-pair ergodic sum rate at threshold `gamma`, in bits/s/Hz:
/// 2 (1 - q)(a1 + a2) + 2 q (a3 + a4) with q the activation probability.
/// The gamma = 0 endpoint (both links always active) is the analytic limit
/// 2 (1 - e^(1/p) E1(1/p) / p) rather than a pass through a1/a2.
pub fn ergodic_sum_rate_k2(gamma: f64, p: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("power must be positive, got {p}")));
    }
    let nats = if gamma == 0.0 {
        2.0 * (1.0 - exp_scaled_e1(1.0 / p)? / p)
    } else {
        let q = prob_active(gamma, p)?;
        let t = a_terms(gamma, p)?;
        2.0 * (1.0 - q) * (t.a1 + t.a2) + 2.0 * q * (t.a3 + t.a4)
    };
    Ok(nats / LN_2)
}

/// Maximizes the two-pair sum rate over the threshold: a 512-point log grid
/// over (0, 100 p] followed by golden-section refinement of the bracket to
/// width 1e-8. Returns (gamma_star, rate at gamma_star in bits/s/Hz).
///
/// Grid-then-refine needs no derivative of the E1-laden expression and is
/// robust to the curve flattening out at either end.
pub fn optimal_gamma_k2(p: f64) -> Result<(f64, f64)> {
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!("power must be positive, got {p}")));
    }
    const GRID: usize = 512;
    let gamma_max = 100.0 * p;
    let gamma_min = 1e-8 * gamma_max;
    let (lo, hi) = (gamma_min.ln(), gamma_max.ln());
    let mut grid = Vec::with_capacity(GRID);
    let mut best_idx = 0usize;
    let mut best = (gamma_min, f64::NEG_INFINITY);
    for i in 0..GRID {
        let g = (lo + (hi - lo) * i as f64 / (GRID - 1) as f64).exp();
        let r = ergodic_sum_rate_k2(g, p)?;
        if r > best.1 {
            best = (g, r);
            best_idx = i;
        }
        grid.push(g);
    }
    let mut a = if best_idx == 0 { gamma_min } else { grid[best_idx - 1] };
    let mut b = if best_idx + 1 == GRID { gamma_max } else { grid[best_idx + 1] };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = ergodic_sum_rate_k2(x1, p)?;
    let mut f2 = ergodic_sum_rate_k2(x2, p)?;
    while b - a > 1e-8 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = ergodic_sum_rate_k2(x2, p)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = ergodic_sum_rate_k2(x1, p)?;
        }
        if f1 > best.1 {
            best = (x1, f1);
        }
        if f2 > best.1 {
            best = (x2, f2);
        }
    }
    Ok(best)
}

/// Two-pair closed form bound to one power value, with an evaluation cache
/// keyed by the threshold's bit pattern.
#[derive(Debug, Clone)]
pub struct AnalyticSumRateK2 {
    power_p: f64,
    cache: HashMap<u64, f64>,
}

impl AnalyticSumRateK2 {
    pub fn new(power_p: f64) -> Result<Self> {
        if !(power_p > 0.0) {
            return Err(Error::InvalidInput(format!(
                "power must be positive, got {power_p}"
            )));
        }
        Ok(Self { power_p, cache: HashMap::new() })
    }

    pub fn power(&self) -> f64 {
        self.power_p
    }

    /// Cached sum-rate evaluation in bits/s/Hz.
    pub fn sum_rate(&mut self, gamma: f64) -> Result<f64> {
        if let Some(&r) = self.cache.get(&gamma.to_bits()) {
            return Ok(r);
        }
        let r = ergodic_sum_rate_k2(gamma, self.power_p)?;
        self.cache.insert(gamma.to_bits(), r);
        Ok(r)
    }

    pub fn optimal_gamma(&self) -> Result<(f64, f64)> {
        optimal_gamma_k2(self.power_p)
    }
}

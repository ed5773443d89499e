//! Network geometry, dual-slope pathloss link budget and fading draws.
//!
//! A drop places K transmitter-receiver pairs in a square area, the link
//! budget turns pairwise distances into linear power gains, and a
//! realization assembles the K x K gain matrix together with the
//! per-receiver SNR and the all-active SINR prediction each receiver would
//! feed into a threshold test.
//!
//! Everything here is a pure function of its inputs and an explicit random
//! stream, so drops can run in parallel on independently derived substreams
//! and reproduce bit-identically for a given seed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Seed used when a config or CLI invocation does not set one. Fixed (not
/// drawn from entropy) so unseeded runs stay reproducible.
pub const DEFAULT_SEED: u64 = 0xD2D_5EED;

/// Cap on angle redraws when placing a receiver inside the area.
const MAX_PLACEMENT_REDRAWS: usize = 10_000;

/// Fast-fading model applied on top of the deterministic pathloss gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingModel {
    /// Pure pathloss; two realizations of the same topology are identical.
    None,
    /// Unit-mean Rayleigh fading: i.i.d. exponential(1) power factors.
    RayleighUnitMean,
}

/// All RF, geometry and seeding parameters for one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Number of transmitter-receiver pairs K.
    pub num_pairs: usize,
    /// Side of the square deployment area in meters.
    pub area_side_m: f64,
    /// Minimum Tx-Rx link distance in meters.
    pub link_dist_min_m: f64,
    /// Maximum Tx-Rx link distance in meters.
    pub link_dist_max_m: f64,
    /// Transmit power in dBm (every active transmitter uses full power).
    pub tx_power_dbm: f64,
    /// Noise power spectral density in dBm/Hz.
    pub noise_psd_dbm_hz: f64,
    /// Receiver noise figure in dB.
    pub noise_figure_db: f64,
    /// Antenna gain in dB per device (applied once at each link end).
    pub antenna_gain_db: f64,
    /// Carrier frequency in Hz.
    pub carrier_freq_hz: f64,
    /// System bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Antenna height in meters, used for both ends of a link.
    pub antenna_height_m: f64,
    /// Fast-fading model multiplying the pathloss gain.
    pub fading_model: FadingModel,
    /// Master seed; per-drop substreams are derived from it.
    pub rng_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            num_pairs: 2,
            area_side_m: 1000.0,
            link_dist_min_m: 2.0,
            link_dist_max_m: 65.0,
            tx_power_dbm: 20.0,
            noise_psd_dbm_hz: -184.0,
            noise_figure_db: 7.0,
            antenna_gain_db: -2.5,
            carrier_freq_hz: 2.4e9,
            bandwidth_hz: 5e6,
            antenna_height_m: 1.5,
            fading_model: FadingModel::RayleighUnitMean,
            rng_seed: DEFAULT_SEED,
        }
    }
}

impl NetworkConfig {
    /// Checks the config invariants, returning the first violation found.
    pub fn validate(&self) -> Result<()> {
        if self.num_pairs < 1 {
            return Err(Error::InvalidConfig("num_pairs must be >= 1".into()));
        }
        if !(self.link_dist_min_m < self.link_dist_max_m) {
            return Err(Error::InvalidConfig(format!(
                "link_dist_min_m ({}) must be < link_dist_max_m ({})",
                self.link_dist_min_m, self.link_dist_max_m
            )));
        }
        if !(self.link_dist_max_m <= self.area_side_m) {
            return Err(Error::InvalidConfig(format!(
                "link_dist_max_m ({}) must be <= area_side_m ({})",
                self.link_dist_max_m, self.area_side_m
            )));
        }
        if !(self.link_dist_min_m > 0.0) {
            return Err(Error::InvalidConfig("link_dist_min_m must be > 0".into()));
        }
        for (name, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("noise_figure_db", self.noise_figure_db),
            ("antenna_gain_db", self.antenna_gain_db),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::InvalidConfig("bandwidth_hz must be > 0".into()));
        }
        if !(self.carrier_freq_hz > 0.0) {
            return Err(Error::InvalidConfig("carrier_freq_hz must be > 0".into()));
        }
        if !(self.antenna_height_m > 0.0) {
            return Err(Error::InvalidConfig("antenna_height_m must be > 0".into()));
        }
        Ok(())
    }

    /// Returns a copy with a different pair count.
    pub fn with_pairs(&self, num_pairs: usize) -> Self {
        Self { num_pairs, ..self.clone() }
    }

    /// Carrier wavelength in meters.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / self.carrier_freq_hz
    }

    /// Breakpoint distance of the dual-slope pathloss model:
    /// 4 h_b h_m / lambda.
    pub fn breakpoint_distance_m(&self) -> f64 {
        4.0 * self.antenna_height_m * self.antenna_height_m / self.wavelength_m()
    }

    /// Pathloss at the breakpoint distance (before the +6 dB offset):
    /// |20 log10(lambda^2 / (8 pi h_b h_m))|.
    pub fn breakpoint_loss_db(&self) -> f64 {
        let lambda = self.wavelength_m();
        let h2 = self.antenna_height_m * self.antenna_height_m;
        (20.0 * (lambda * lambda / (8.0 * std::f64::consts::PI * h2)).log10()).abs()
    }

    /// Transmit power in watts.
    pub fn tx_power_w(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }
}

/// Dual-slope pathloss in dB at the given distance: 20 dB/decade up to the
/// breakpoint distance, 40 dB/decade beyond it, continuous at the breakpoint.
pub fn pathloss_db(distance_m: f64, cfg: &NetworkConfig) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::InvalidInput(format!(
            "pathloss distance must be positive, got {distance_m}"
        )));
    }
    let r_bp = cfg.breakpoint_distance_m();
    let slope = if distance_m <= r_bp { 20.0 } else { 40.0 };
    Ok(cfg.breakpoint_loss_db() + 6.0 + slope * (distance_m / r_bp).log10())
}

/// Linear power gain of a link at the given distance: antenna gain applied
/// once per device at each end, minus the pathloss. Strictly decreasing in
/// distance.
pub fn link_budget_gain_linear(distance_m: f64, cfg: &NetworkConfig) -> Result<f64> {
    let loss = pathloss_db(distance_m, cfg)?;
    Ok(10f64.powf((2.0 * cfg.antenna_gain_db - loss) / 10.0))
}

/// Receiver noise power in watts: PSD integrated over the bandwidth plus the
/// noise figure.
pub fn noise_power_w(cfg: &NetworkConfig) -> f64 {
    let dbm = cfg.noise_psd_dbm_hz + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Positions of the K transmitters and K receivers of one drop, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub tx: Vec<(f64, f64)>,
    pub rx: Vec<(f64, f64)>,
}

impl Topology {
    pub fn num_pairs(&self) -> usize {
        self.tx.len()
    }

    /// Distance from receiver `rx` to transmitter `tx`.
    pub fn distance(&self, rx: usize, tx: usize) -> f64 {
        let (rxx, rxy) = self.rx[rx];
        let (txx, txy) = self.tx[tx];
        ((rxx - txx).powi(2) + (rxy - txy).powi(2)).sqrt()
    }
}

/// Draws one drop: transmitters uniform over the square, each receiver at a
/// distance uniform in [link_dist_min, link_dist_max] from its transmitter.
///
/// The placement angle is uniform and redrawn (the distance is kept) until
/// the receiver lands inside the area, so the link-distance marginal stays
/// exactly uniform. Redraws are capped per link; hitting the cap is an error
/// rather than a hang on degenerate geometry.
pub fn drop_topology<R: Rng + ?Sized>(cfg: &NetworkConfig, rng: &mut R) -> Result<Topology> {
    cfg.validate()?;
    let side = cfg.area_side_m;
    let k = cfg.num_pairs;
    let mut tx = Vec::with_capacity(k);
    let mut rx = Vec::with_capacity(k);
    for link in 0..k {
        let t = (rng.random_range(0.0..side), rng.random_range(0.0..side));
        let dist = rng.random_range(cfg.link_dist_min_m..cfg.link_dist_max_m);
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_REDRAWS {
            let theta = rng.random_range(0.0..TAU);
            let r = (t.0 + dist * theta.cos(), t.1 + dist * theta.sin());
            if r.0 >= 0.0 && r.0 <= side && r.1 >= 0.0 && r.1 <= side {
                placed = Some(r);
                break;
            }
        }
        match placed {
            Some(r) => {
                tx.push(t);
                rx.push(r);
            }
            None => {
                return Err(Error::InvalidInput(format!(
                    "receiver placement for link {link} exceeded {MAX_PLACEMENT_REDRAWS} redraws"
                )))
            }
        }
    }
    Ok(Topology { tx, rx })
}

/// One channel draw: the K x K linear power-gain matrix (row = receiver,
/// column = transmitter) plus the derived per-receiver quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    num_pairs: usize,
    /// Row-major gains, `gains[i * k + j]` = gain from Tx_j at Rx_i.
    gains: Vec<f64>,
    /// Linear noise power at each receiver, watts.
    pub noise_power_w: f64,
    /// Linear transmit power, watts.
    pub tx_power_w: f64,
    /// Per-receiver SINR assuming all K links are active.
    pub sinr_all_active: Vec<f64>,
    /// Per-receiver SNR (no interference).
    pub snr: Vec<f64>,
}

impl ChannelRealization {
    /// Builds a realization from a row-major K x K gain matrix, validating
    /// the gain invariants and filling the derived SINR/SNR vectors.
    pub fn from_gains(gains: Vec<f64>, noise_power_w: f64, tx_power_w: f64) -> Result<Self> {
        let k = (gains.len() as f64).sqrt() as usize;
        if k * k != gains.len() || k == 0 {
            return Err(Error::InvalidInput(format!(
                "gain matrix must be square and nonempty, got {} entries",
                gains.len()
            )));
        }
        if !(noise_power_w > 0.0) || !(tx_power_w > 0.0) {
            return Err(Error::InvalidInput(
                "noise and transmit power must be positive".into(),
            ));
        }
        for (idx, &g) in gains.iter().enumerate() {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "gain at ({}, {}) must be finite and nonnegative, got {g}",
                    idx / k,
                    idx % k
                )));
            }
        }
        for i in 0..k {
            if gains[i * k + i] <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "diagonal gain for link {i} must be positive"
                )));
            }
        }
        let n_over_p = noise_power_w / tx_power_w;
        let mut sinr = Vec::with_capacity(k);
        let mut snr = Vec::with_capacity(k);
        for i in 0..k {
            let row = &gains[i * k..(i + 1) * k];
            let direct = row[i];
            let interference: f64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &g)| g)
                .sum();
            sinr.push(direct / (interference + n_over_p));
            snr.push(direct * tx_power_w / noise_power_w);
        }
        Ok(Self {
            num_pairs: k,
            gains,
            noise_power_w,
            tx_power_w,
            sinr_all_active: sinr,
            snr,
        })
    }

    pub fn num_pairs(&self) -> usize {
        self.num_pairs
    }

    /// Gain from Tx `tx` at Rx `rx`.
    pub fn gain(&self, rx: usize, tx: usize) -> f64 {
        self.gains[rx * self.num_pairs + tx]
    }

    /// The receiver-side gain row of link `rx`.
    pub fn row(&self, rx: usize) -> &[f64] {
        &self.gains[rx * self.num_pairs..(rx + 1) * self.num_pairs]
    }

    /// N_o / P, the noise term appearing next to interference sums.
    pub fn noise_over_power(&self) -> f64 {
        self.noise_power_w / self.tx_power_w
    }
}

/// Realizes the channel for a drawn topology: pathloss gains times i.i.d.
/// unit-mean fading factors (or exactly the pathloss gains when fading is
/// off).
pub fn realize_channel<R: Rng + ?Sized>(
    topology: &Topology,
    cfg: &NetworkConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let k = topology.num_pairs();
    if k != cfg.num_pairs {
        return Err(Error::InvalidInput(format!(
            "topology has {k} pairs but config expects {}",
            cfg.num_pairs
        )));
    }
    let mut gains = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            let base = link_budget_gain_linear(topology.distance(i, j), cfg)?;
            let fading = match cfg.fading_model {
                FadingModel::None => 1.0,
                FadingModel::RayleighUnitMean => rng.sample::<f64, _>(Exp1),
            };
            gains.push(base * fading);
        }
    }
    ChannelRealization::from_gains(gains, noise_power_w(cfg), cfg.tx_power_w())
}

/// One independent, deterministically derived random substream per drop:
/// the experiment master seed (mixed with the pair count so different
/// network sizes use unrelated streams) selects the cipher key and the drop
/// index selects the stream. Drops can then run on any number of threads
/// and still reproduce bit-identically.
pub fn drop_rng(seed: u64, num_pairs: usize, drop_index: usize) -> ChaCha8Rng {
    let key = seed ^ (num_pairs as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(drop_index as u64);
    rng
}

/// Analytic-validation channel: every gain i.i.d. exponential(1), noise
/// normalized to unit power, transmit power `power_w`. Bypasses geometry.
pub fn realize_iid_rayleigh<R: Rng + ?Sized>(
    k: usize,
    power_w: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if k < 1 {
        return Err(Error::InvalidInput("need at least one pair".into()));
    }
    if !(power_w > 0.0) {
        return Err(Error::InvalidInput(format!(
            "transmit power must be positive, got {power_w}"
        )));
    }
    let gains: Vec<f64> = (0..k * k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    ChannelRealization::from_gains(gains, 1.0, power_w)
}

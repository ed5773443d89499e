//! Shared fixtures for the benchmarks: deterministic channel draws at the
//! sizes the studies actually run.

use d2dsim::channel::{drop_rng, drop_topology, realize_channel, realize_iid_rayleigh};
use d2dsim::{ChannelRealization, NetworkConfig};

/// One geometric drop of the default configuration at the given size.
pub fn geometric_realization(k: usize, drop: usize) -> ChannelRealization {
    let cfg = NetworkConfig::default().with_pairs(k);
    let mut rng = drop_rng(cfg.rng_seed, k, drop);
    let topo = drop_topology(&cfg, &mut rng).unwrap();
    realize_channel(&topo, &cfg, &mut rng).unwrap()
}

/// A batch of i.i.d. Rayleigh realizations for search benchmarks.
pub fn iid_batch(k: usize, count: usize, power: f64) -> Vec<ChannelRealization> {
    (0..count)
        .map(|t| {
            let mut rng = drop_rng(1, k, t);
            realize_iid_rayleigh(k, power, &mut rng).unwrap()
        })
        .collect()
}

/// The identity ordering, for schedulers that take a permutation.
pub fn identity_order(k: usize) -> Vec<usize> {
    (0..k).collect()
}

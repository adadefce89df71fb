//! Deterministic Rayleigh-fading channel draws.
//!
//! Every link of every realization gets its own stream of a counter-based
//! generator keyed by the scenario seed, so a draw depends only on
//! `(seed, realization, transmitter, receiver)` and never on the order in
//! which links or realizations are generated. That independence is what makes
//! multi-worker runs reproduce single-worker output bit for bit. Entries are
//! drawn with unit variance and scaled by the link's standard deviation, so
//! sweeping a variance grid reuses common random numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{ComplexMatrix, Cx};
use crate::multi_user::MAX_USERS;
use crate::sim::config::ScenarioConfig;

/// One generator per (realization, transmitter, receiver) triple.
fn link_rng(seed: u64, realization: usize, tx: usize, rx: usize) -> ChaCha8Rng {
    debug_assert!(tx < MAX_USERS && rx < MAX_USERS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((realization as u64) * MAX_USERS as u64 + tx as u64) * MAX_USERS as u64 + rx as u64);
    rng
}

/// Draws all channel matrices of one realization. `out[j][k]` is the link
/// from transmitter `j` to receiver `k`, sized receive-antennas by
/// transmit-antennas, each entry circularly symmetric complex Gaussian with
/// variance `channel_variances[j][k]` split evenly between the real and
/// imaginary parts. Entries are filled row-major.
pub fn draw_channels(cfg: &ScenarioConfig, realization: usize) -> Vec<Vec<ComplexMatrix>> {
    (0..cfg.k)
        .map(|j| {
            (0..cfg.k)
                .map(|k| {
                    let rows = cfg.antennas[k].1;
                    let cols = cfg.antennas[j].0;
                    let scale = (cfg.channel_variances[j][k] / 2.0).sqrt();
                    let mut rng = link_rng(cfg.seed, realization, j, k);
                    let entries: Vec<Cx> = (0..rows * cols)
                        .map(|_| {
                            let re: f64 = rng.sample(StandardNormal);
                            let im: f64 = rng.sample(StandardNormal);
                            Cx::new(re * scale, im * scale)
                        })
                        .collect();
                    ComplexMatrix::new(rows, cols, entries)
                        .expect("drawn entries are finite and the dimensions are validated")
                })
                .collect()
        })
        .collect()
}

//! Round-robin covariance adaptation: users take turns best-responding to
//! the current covariances and rates of everyone else until rates stop
//! moving or the round budget runs out.

use crate::matrix::{congruence_sum, ComplexMatrix, HermitianPsd};
use crate::multi_user::{self, Interferer, ReceiverContext};
use crate::rate::{conditional_capacity, omd_rate, TwoUserContext};
use crate::sim::config::{Decoder, ScenarioConfig};
use crate::two_user;
use crate::waterfill::{sud_best_response, waterfill};

/// Outcome of one protocol run on one channel realization.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub sweep_value: f64,
    /// Final per-user rates in nats.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// Rounds actually executed (at most `max_rounds`).
    pub rounds: usize,
    pub converged: bool,
    pub covariances: Vec<HermitianPsd>,
}

/// One covariance update as seen by an observer: the new rate, and the rate
/// a pure noise-treating best response would have achieved against the same
/// interference (the floor an opportunistic decoder must never undercut).
pub struct UpdateEvent<'a> {
    pub round: usize,
    /// 0-based user index.
    pub user: usize,
    pub rate: f64,
    pub sud_rate: f64,
    pub covariance: &'a HermitianPsd,
}

pub fn run_protocol(cfg: &ScenarioConfig, channels: &[Vec<ComplexMatrix>], sweep_value: f64) -> RunRecord {
    run_protocol_observed(cfg, channels, sweep_value, &mut |_| {})
}

/// [`run_protocol`] with a per-update callback, used by invariant checks.
pub fn run_protocol_observed(
    cfg: &ScenarioConfig,
    channels: &[Vec<ComplexMatrix>],
    sweep_value: f64,
    observer: &mut dyn FnMut(UpdateEvent),
) -> RunRecord {
    let kk = cfg.k;
    let mut covariances: Vec<HermitianPsd> = (0..kk)
        .map(|k| HermitianPsd::scaled_identity(cfg.antennas[k].0, cfg.powers[k] / cfg.antennas[k].0 as f64))
        .collect();

    // initial rates: evaluate the isotropic covariances user by user, each
    // with its own decoder, later users' rates still at zero
    let mut rates = vec![0.0f64; kk];
    for k in 0..kk {
        rates[k] = fixed_covariance_rate(cfg, channels, &covariances, &rates, k);
    }

    let mut rounds = 0;
    let mut converged = false;
    for round in 1..=cfg.max_rounds {
        rounds = round;
        let mut max_delta = 0.0f64;
        for k in 0..kk {
            let (cov, rate) = best_response(cfg, channels, &covariances, &rates, k);
            let sud_rate =
                sud_best_response(&channels[k][k], &interference_at(channels, &covariances, k), cfg.powers[k])
                    .expect("interference covariance and channel dimensions are consistent")
                    .rate;
            observer(UpdateEvent {
                round,
                user: k,
                rate,
                sud_rate,
                covariance: &cov,
            });
            max_delta = max_delta.max((rate - rates[k]).abs());
            covariances[k] = cov;
            rates[k] = rate;
        }
        if max_delta <= cfg.rate_tol {
            converged = true;
            break;
        }
    }

    let sum_rate = rates.iter().sum();
    RunRecord {
        sweep_value,
        rates,
        sum_rate,
        rounds,
        converged,
        covariances,
    }
}

/// Received interference covariance at receiver `k` (no noise floor).
fn interference_at(
    channels: &[Vec<ComplexMatrix>],
    covariances: &[HermitianPsd],
    k: usize,
) -> HermitianPsd {
    let rx = channels[k][k].rows();
    congruence_sum(
        rx,
        (0..channels.len())
            .filter(|j| *j != k)
            .map(|j| (&channels[j][k], &covariances[j])),
    )
}

fn receiver_context(
    cfg: &ScenarioConfig,
    channels: &[Vec<ComplexMatrix>],
    covariances: &[HermitianPsd],
    rates: &[f64],
    k: usize,
) -> ReceiverContext {
    let interferers = (0..cfg.k)
        .filter(|j| *j != k)
        .map(|j| Interferer {
            user: j + 1,
            channel: channels[j][k].clone(),
            covariance: covariances[j].clone(),
            rate: rates[j],
        })
        .collect();
    ReceiverContext::new(k + 1, channels[k][k].clone(), interferers, cfg.powers[k])
        .expect("protocol state always forms a valid receiver context")
}

fn two_user_context(
    cfg: &ScenarioConfig,
    channels: &[Vec<ComplexMatrix>],
    covariances: &[HermitianPsd],
    rates: &[f64],
    k: usize,
) -> TwoUserContext {
    let j = 1 - k;
    TwoUserContext::new(
        channels[k][k].clone(),
        channels[j][k].clone(),
        covariances[j].clone(),
        rates[j],
        cfg.powers[k],
    )
    .expect("protocol state always forms a valid two-user context")
}

/// Rate of user `k` with every covariance held fixed, under its decoder.
fn fixed_covariance_rate(
    cfg: &ScenarioConfig,
    channels: &[Vec<ComplexMatrix>],
    covariances: &[HermitianPsd],
    rates: &[f64],
    k: usize,
) -> f64 {
    if cfg.k == 1 {
        return conditional_capacity(
            &HermitianPsd::scaled_identity(channels[0][0].rows(), 1.0),
            &[(&channels[0][0], &covariances[0])],
        );
    }
    match cfg.decoders[k] {
        Decoder::Sud => conditional_capacity(
            &interference_at(channels, covariances, k).add_identity(),
            &[(&channels[k][k], &covariances[k])],
        ),
        Decoder::Omd if cfg.k == 2 => {
            let ctx = two_user_context(cfg, channels, covariances, rates, k);
            omd_rate(&ctx, &covariances[k])
                .expect("isotropic and best-response covariances stay feasible")
                .0
        }
        Decoder::Omd => {
            let ctx = receiver_context(cfg, channels, covariances, rates, k);
            multi_user::rate_at(&ctx, &covariances[k])
                .expect("isotropic and best-response covariances stay feasible")
        }
    }
}

/// Covariance update of user `k`: water-filling in isolation, whitened
/// water-filling for noise-treating receivers, and the opportunistic solvers
/// otherwise.
fn best_response(
    cfg: &ScenarioConfig,
    channels: &[Vec<ComplexMatrix>],
    covariances: &[HermitianPsd],
    rates: &[f64],
    k: usize,
) -> (HermitianPsd, f64) {
    if cfg.k == 1 {
        let wf = waterfill(&channels[0][0], cfg.powers[0]);
        return (wf.covariance, wf.rate);
    }
    match cfg.decoders[k] {
        Decoder::Sud => {
            let wf = sud_best_response(
                &channels[k][k],
                &interference_at(channels, covariances, k),
                cfg.powers[k],
            )
            .expect("interference covariance and channel dimensions are consistent");
            (wf.covariance, wf.rate)
        }
        Decoder::Omd if cfg.k == 2 => {
            let sol = two_user::solve(&two_user_context(cfg, channels, covariances, rates, k))
                .expect("two-user best response is total over valid contexts");
            (sol.covariance, sol.rate)
        }
        Decoder::Omd => {
            let sol = multi_user::solve(&receiver_context(cfg, channels, covariances, rates, k))
                .expect("multi-user best response is total over valid contexts");
            (sol.covariance, sol.rate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::channel::draw_channels;
    use approx::assert_relative_eq;

    fn cfg(k: usize, decoders: Vec<Decoder>, variances: Vec<Vec<f64>>, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            k,
            antennas: vec![(2, 2); k],
            powers: vec![10.0; k],
            channel_variances: variances,
            decoders,
            realizations: 1,
            seed,
            sweep: None,
            max_rounds: 100,
            rate_tol: 1e-6,
        }
    }

    #[test]
    fn uncoupled_users_waterfill_in_isolation() {
        let c = cfg(
            2,
            vec![Decoder::Omd, Decoder::Sud],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            11,
        );
        let channels = draw_channels(&c, 0);
        let rec = run_protocol(&c, &channels, 0.0);
        assert!(rec.converged);
        for k in 0..2 {
            let wf = waterfill(&channels[k][k], c.powers[k]);
            assert_relative_eq!(rec.rates[k], wf.rate, epsilon = 1e-9);
        }
        assert_relative_eq!(rec.sum_rate, rec.rates.iter().sum::<f64>(), epsilon = 1e-12);
    }

    #[test]
    fn single_user_converges_to_waterfilling() {
        let c = cfg(1, vec![Decoder::Omd], vec![vec![1.0]], 12);
        let channels = draw_channels(&c, 0);
        let rec = run_protocol(&c, &channels, 0.0);
        assert!(rec.converged);
        assert_relative_eq!(rec.rates[0], waterfill(&channels[0][0], 10.0).rate, epsilon = 1e-12);
    }

    #[test]
    fn sud_pair_converges_and_respects_budgets() {
        let mut ok = 0;
        for seed in 0..20 {
            let c = cfg(
                2,
                vec![Decoder::Sud, Decoder::Sud],
                vec![vec![1.0, 1.0], vec![1.0, 1.0]],
                seed,
            );
            let channels = draw_channels(&c, 0);
            let rec = run_protocol(&c, &channels, 0.0);
            if rec.converged {
                ok += 1;
            }
            assert!(rec.rounds <= c.max_rounds);
            for (k, s) in rec.covariances.iter().enumerate() {
                assert!(s.trace_re() <= c.powers[k] + 1e-9);
                s.validate().unwrap();
            }
        }
        assert!(ok >= 19, "only {ok}/20 noise-treating pairs converged");
    }

    #[test]
    fn omd_updates_never_undercut_the_noise_treating_floor() {
        for seed in 0..10 {
            let c = cfg(
                2,
                vec![Decoder::Omd, Decoder::Omd],
                vec![vec![1.0, 1.5], vec![1.5, 1.0]],
                100 + seed,
            );
            let channels = draw_channels(&c, 0);
            let mut worst = f64::INFINITY;
            run_protocol_observed(&c, &channels, 0.0, &mut |ev| {
                worst = worst.min(ev.rate - ev.sud_rate);
                assert!(ev.covariance.trace_re() <= c.powers[ev.user] + 1e-9);
            });
            assert!(
                worst >= -1e-9,
                "an opportunistic update fell {worst} below its floor (seed {seed})"
            );
        }
    }

    #[test]
    fn mixed_three_user_run_stays_feasible() {
        let c = cfg(
            3,
            vec![Decoder::Omd, Decoder::Sud, Decoder::Omd],
            vec![
                vec![1.0, 0.4, 0.4],
                vec![0.4, 1.0, 0.4],
                vec![0.4, 0.4, 1.0],
            ],
            21,
        );
        let channels = draw_channels(&c, 0);
        let rec = run_protocol(&c, &channels, 0.0);
        assert!(rec.rates.iter().all(|r| r.is_finite() && *r >= 0.0));
        for (k, s) in rec.covariances.iter().enumerate() {
            assert!(s.trace_re() <= c.powers[k] + 1e-9);
        }
    }
}

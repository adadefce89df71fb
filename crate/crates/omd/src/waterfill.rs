//! Exact water-filling over channel eigenmodes and the single-user-detection
//! best response against colored interference.

use crate::error::Result;
use crate::matrix::{congruence, svd, whiten, ComplexMatrix, HermitianPsd};

/// Modes with singular value below `sigma_max * RANK_TOL` carry no usable
/// gain and are excluded from the allocation.
const RANK_TOL: f64 = 1e-12;

/// Result of water-filling `power` over the eigenmodes of an effective
/// channel.
///
/// `power_alloc[i]` pairs with `singular_values[i]` (descending); inactive
/// modes hold zero. The water level satisfies
/// `power_alloc[i] = max(water_level - 1/singular_values[i]^2, 0)` on every
/// active mode, and `covariance` is expressed in the transmitter basis.
#[derive(Clone, Debug)]
pub struct WaterfillResult {
    pub covariance: HermitianPsd,
    pub power_alloc: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub water_level: f64,
    /// Achievable rate `sum_i ln(1 + sigma_i^2 p_i)` in nats.
    pub rate: f64,
}

/// Water-fills `power` over the right singular vectors of `h_eff`.
///
/// The water level is found exactly by sorting the squared singular values
/// descending and testing active-set sizes; no iterative search is involved.
/// A zero channel or zero power yields the zero covariance and zero rate.
pub fn waterfill(h_eff: &ComplexMatrix, power: f64) -> WaterfillResult {
    assert!(power >= 0.0 && power.is_finite(), "power must be finite and nonnegative");
    let parts = svd(h_eff);
    let t = parts.sigma.len();
    let sigma_max = parts.sigma.first().copied().unwrap_or(0.0);
    let mut alloc = vec![0.0; t];

    let active: Vec<usize> = (0..t)
        .filter(|&i| parts.sigma[i] > sigma_max * RANK_TOL && parts.sigma[i] > 0.0)
        .collect();
    if active.is_empty() || power == 0.0 {
        let water_level = if active.is_empty() {
            0.0
        } else {
            1.0 / (parts.sigma[active[0]] * parts.sigma[active[0]])
        };
        return WaterfillResult {
            covariance: HermitianPsd::zeros(h_eff.cols()),
            power_alloc: alloc,
            singular_values: parts.sigma,
            water_level,
            rate: 0.0,
        };
    }

    // inverse gains ascending because sigma is descending
    let inv_gain: Vec<f64> = active
        .iter()
        .map(|&i| 1.0 / (parts.sigma[i] * parts.sigma[i]))
        .collect();
    let mut level = 0.0;
    let mut count = 0;
    let mut prefix = 0.0;
    for m in 1..=inv_gain.len() {
        prefix += inv_gain[m - 1];
        let candidate = (power + prefix) / m as f64;
        if candidate >= inv_gain[m - 1] {
            level = candidate;
            count = m;
        } else {
            break;
        }
    }
    debug_assert!(count > 0);

    let mut rate = 0.0;
    for (k, &i) in active.iter().take(count).enumerate() {
        let p = (level - inv_gain[k]).max(0.0);
        alloc[i] = p;
        rate += (1.0 + parts.sigma[i] * parts.sigma[i] * p).ln();
    }

    // covariance = V diag(p) V^H over the active columns
    let v = parts.v.raw();
    let mut scaled = v.clone_owned();
    for i in 0..t {
        let w = num_complex::Complex::new(alloc[i], 0.0);
        for r in 0..scaled.nrows() {
            scaled[(r, i)] *= w;
        }
    }
    let covariance = HermitianPsd::from_hermitian_part(&scaled * v.adjoint());

    WaterfillResult {
        covariance,
        power_alloc: alloc,
        singular_values: parts.sigma,
        water_level: level,
        rate,
    }
}

/// Best response of a transmitter that treats all interference as noise:
/// whitens its direct channel by `I + interference_cov` and water-fills
/// `power` over the whitened modes. `interference_cov` is the bare
/// interference sum (identity not included). The returned covariance lives in
/// the transmitter basis and the rate equals the whitened-channel capacity.
pub fn sud_best_response(
    h_direct: &ComplexMatrix,
    interference_cov: &HermitianPsd,
    power: f64,
) -> Result<WaterfillResult> {
    let noise = interference_cov.add_identity();
    let w = whiten(&noise, h_direct)?;
    Ok(waterfill(&w, power))
}

#[allow(dead_code)]
fn achieved_rate_check(h: &ComplexMatrix, wf: &WaterfillResult) -> f64 {
    // diagnostic: rate recomputed from the covariance in the original basis
    crate::matrix::logdet(&congruence(h, &wf.covariance), true).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{logdet, Cx};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
        let entries: Vec<Cx> = (0..rows * cols)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Cx::new(re * 0.5f64.sqrt(), im * 0.5f64.sqrt())
            })
            .collect();
        ComplexMatrix::new(rows, cols, entries).unwrap()
    }

    #[test]
    fn single_mode_gets_everything() {
        // gains (1, 0.25), budget 1: level 2 on the strong mode only
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.5]).unwrap();
        let wf = waterfill(&h, 1.0);
        assert_relative_eq!(wf.water_level, 2.0, epsilon = 1e-12);
        assert_relative_eq!(wf.power_alloc[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(wf.power_alloc[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(wf.rate, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn two_modes_share_the_budget() {
        // gains (4, 1), budget 3: level (3 + 1/4 + 1)/2 = 2.125
        let h = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        let wf = waterfill(&h, 3.0);
        assert_relative_eq!(wf.water_level, 2.125, epsilon = 1e-12);
        assert_relative_eq!(wf.power_alloc[0], 1.875, epsilon = 1e-12);
        assert_relative_eq!(wf.power_alloc[1], 1.125, epsilon = 1e-12);
        assert_relative_eq!(wf.rate, 8.5f64.ln() + 2.125f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn zero_channel_and_zero_power_edge_cases() {
        let z = ComplexMatrix::zeros(2, 2);
        let wf = waterfill(&z, 5.0);
        assert_eq!(wf.rate, 0.0);
        assert_relative_eq!(wf.covariance.trace_re(), 0.0, epsilon = 1e-15);

        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let wf0 = waterfill(&h, 0.0);
        assert_eq!(wf0.rate, 0.0);
        assert_relative_eq!(wf0.covariance.trace_re(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn budget_is_spent_and_kkt_holds_on_random_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let rows = rng.gen_range(1..=4);
            let cols = rng.gen_range(1..=4);
            let power = rng.gen_range(0.1..10.0);
            let h = random_matrix(&mut rng, rows, cols);
            let wf = waterfill(&h, power);
            let spent: f64 = wf.power_alloc.iter().sum();
            assert_relative_eq!(spent, power, max_relative = 1e-9);
            assert!(wf.covariance.trace_re() <= power * (1.0 + 1e-9));
            wf.covariance.validate().unwrap();
            for (i, &s) in wf.singular_values.iter().enumerate() {
                if s > 0.0 {
                    let want = (wf.water_level - 1.0 / (s * s)).max(0.0);
                    assert!(
                        (wf.power_alloc[i] - want).abs() <= 1e-9 * (1.0 + want),
                        "KKT violated on mode {i}"
                    );
                }
            }
            // rate matches the covariance it reports
            let direct = logdet(&congruence(&h, &wf.covariance), true).unwrap();
            assert_relative_eq!(direct, wf.rate, epsilon = 1e-8);
        }
    }

    #[test]
    fn beats_random_feasible_covariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..10 {
            let h = random_matrix(&mut rng, 3, 3);
            let power = 2.0;
            let wf = waterfill(&h, power);
            for _ in 0..200 {
                let a = random_matrix(&mut rng, 3, 3);
                let raw = congruence(&a, &HermitianPsd::scaled_identity(3, 1.0));
                let s = raw.scale(power / raw.trace_re());
                let rate = logdet(&congruence(&h, &s), true).unwrap();
                assert!(rate <= wf.rate + 1e-6, "random covariance beat water-filling");
            }
        }
    }

    #[test]
    fn sud_response_whitens_interference() {
        // direct gain 1, interference 3: whitened gain 1/4, rate ln(1 + 1/4)
        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let c = HermitianPsd::new(DMatrix::from_row_slice(1, 1, &[Cx::new(3.0, 0.0)])).unwrap();
        let wf = sud_best_response(&h, &c, 1.0).unwrap();
        assert_relative_eq!(wf.rate, 1.25f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(wf.covariance.trace_re(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sud_response_with_zero_interference_is_plain_waterfill() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_matrix(&mut rng, 2, 2);
        let zero = HermitianPsd::zeros(2);
        let a = sud_best_response(&h, &zero, 1.5).unwrap();
        let b = waterfill(&h, 1.5);
        assert_relative_eq!(a.rate, b.rate, epsilon = 1e-10);
        assert_relative_eq!(a.covariance.frobenius_distance(&b.covariance), 0.0, epsilon = 1e-8);
    }
}

//! Best response of a transmitter facing one interferer whose rate and
//! covariance are fixed.
//!
//! Outside a bounded band of interferer rates the optimizer has a closed
//! form: plain water-filling when the interferer stays decodable even then,
//! the sum-capacity covariance when joint decoding binds, and the whitened
//! water-filling solution when the interferer is never decodable. Inside the
//! band the solution comes from a one-dimensional dual search whose scalar
//! weight trades the own-capacity term against the sum-capacity term.

use crate::convex::{self, LogDetObjective, LogDetTerm};
use crate::error::{Error, Result};
use crate::matrix::HermitianPsd;
use crate::rate::{thresholds, Regime, ThresholdSet, TwoUserContext};
use crate::waterfill::{sud_best_response, waterfill};

/// Bisection stops when the dual-weight interval is this small.
pub const DEFAULT_WEIGHT_TOL: f64 = 1e-6;
/// ... or when the subgradient magnitude drops below this.
pub const DEFAULT_SUBGRADIENT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct TwoUserSolution {
    pub covariance: HermitianPsd,
    /// Own achievable rate in nats.
    pub rate: f64,
    pub regime: Regime,
    /// Dual weight on the own-capacity term: 1 for the selfish closed form,
    /// 0 under joint decoding, interior in the dual regime, and absent when
    /// interference is treated as noise.
    pub dual_weight: Option<f64>,
    pub thresholds: ThresholdSet,
}

/// Computes the rate-optimal transmit covariance for the context's operating
/// point and reports which regime produced it.
pub fn solve(ctx: &TwoUserContext) -> Result<TwoUserSolution> {
    let wf_noise = sud_best_response(ctx.h_direct(), ctx.cross_interference(), ctx.power())?;
    let wf_selfish = waterfill(ctx.h_direct(), ctx.power());
    // the joint-decoding covariance coincides with the whitened one: both
    // maximize the sum capacity over the own covariance
    let th = thresholds(ctx, &wf_selfish.covariance, &wf_noise.covariance);

    match th.regime {
        Regime::Sud => Ok(TwoUserSolution {
            covariance: wf_noise.covariance,
            rate: wf_noise.rate,
            regime: Regime::Sud,
            dual_weight: None,
            thresholds: th,
        }),
        Regime::SdClosedForm => Ok(TwoUserSolution {
            covariance: wf_selfish.covariance,
            rate: wf_selfish.rate,
            regime: Regime::SdClosedForm,
            dual_weight: Some(1.0),
            thresholds: th,
        }),
        Regime::Jd => Ok(TwoUserSolution {
            rate: wf_noise.rate + th.clean_limit - ctx.rate_cross(),
            covariance: wf_noise.covariance,
            regime: Regime::Jd,
            dual_weight: Some(0.0),
            thresholds: th,
        }),
        Regime::SdDual => {
            match bisect_dual_weight(ctx, DEFAULT_WEIGHT_TOL, DEFAULT_SUBGRADIENT_TOL) {
                Ok((w, cov)) => {
                    let rate = ctx.own_cap(&cov);
                    Ok(TwoUserSolution {
                        covariance: cov,
                        rate,
                        regime: Regime::SdDual,
                        dual_weight: Some(w),
                        thresholds: th,
                    })
                }
                Err(Error::BisectionFailed) => {
                    // numerically lost bracket: fall back to the better of the
                    // two endpoint covariances under the exact constraint form
                    let r_selfish = ctx.decodable_rate(&wf_selfish.covariance);
                    let r_joint = ctx.decodable_rate(&wf_noise.covariance);
                    let (cov, rate, w) = if r_selfish >= r_joint {
                        (wf_selfish.covariance, r_selfish, 1.0)
                    } else {
                        (wf_noise.covariance, r_joint, 0.0)
                    };
                    Ok(TwoUserSolution {
                        covariance: cov,
                        rate,
                        regime: Regime::SdDual,
                        dual_weight: Some(w),
                        thresholds: th,
                    })
                }
                Err(e) => Err(e),
            }
        }
    }
}

/// Weighted objective whose maximizer traces the dual path between the
/// selfish (`w = 1`) and joint-decoding (`w = 0`) covariances.
fn dual_objective(ctx: &TwoUserContext, w: f64) -> Result<LogDetObjective> {
    let rx = ctx.rx_dim();
    LogDetObjective::new(
        vec![
            LogDetTerm {
                weight: w,
                base: HermitianPsd::scaled_identity(rx, 1.0),
                map: ctx.h_direct().clone(),
            },
            LogDetTerm {
                weight: 1.0 - w,
                base: ctx.cross_interference().add_identity(),
                map: ctx.h_direct().clone(),
            },
        ],
        ctx.power(),
    )
}

/// Bisects the dual weight on `[0, 1]` until the decodability subgradient
/// `decode_with_signal_limit(S*(w)) - rate_cross` crosses zero.
///
/// The subgradient is nonincreasing in `w`; the search requires it to be
/// nonnegative at `w = 0` and nonpositive at `w = 1` (both up to `tol_g`),
/// which holds exactly when the operating point lies in the dual band.
/// Returns the weight and the covariance solved at it.
pub fn bisect_dual_weight(
    ctx: &TwoUserContext,
    tol_weight: f64,
    tol_g: f64,
) -> Result<(f64, HermitianPsd)> {
    assert!(tol_weight > 0.0 && tol_g > 0.0, "tolerances must be positive");
    let r2 = ctx.rate_cross();
    let selfish = waterfill(ctx.h_direct(), ctx.power()).covariance;
    let g1 = ctx.decode_with_signal_limit(&selfish) - r2;
    if g1.abs() <= tol_g {
        return Ok((1.0, selfish));
    }
    let joint = sud_best_response(ctx.h_direct(), ctx.cross_interference(), ctx.power())?.covariance;
    let g0 = ctx.decode_with_signal_limit(&joint) - r2;
    if g0.abs() <= tol_g {
        return Ok((0.0, joint));
    }
    if g0 < 0.0 || g1 > 0.0 {
        return Err(Error::BisectionFailed);
    }

    let obj = dual_objective(ctx, 0.5)?;
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut warm = joint;
    loop {
        let mid = 0.5 * (lo + hi);
        let out = convex::solve_from(
            &obj.reweighted(&[mid, 1.0 - mid])?,
            &warm,
            convex::DEFAULT_TOL,
            convex::DEFAULT_MAX_ITER,
        );
        warm = out.covariance;
        let g = ctx.decode_with_signal_limit(&warm) - r2;
        if g.abs() <= tol_g || hi - lo <= tol_weight {
            return Ok((mid, warm));
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{congruence, ComplexMatrix, Cx};
    use crate::rate::{mac_member_with_tol, MacMember, MacRegionSpec};
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

    fn random_psd(rng: &mut ChaCha8Rng, dim: usize, trace: f64) -> HermitianPsd {
        let a = random_matrix(rng, dim, dim);
        let p = congruence(&a, &HermitianPsd::scaled_identity(dim, 1.0));
        let t = p.trace_re();
        p.scale(trace / t)
    }

    fn random_ctx(rng: &mut ChaCha8Rng, r2: f64) -> TwoUserContext {
        let s2_trace = rng.gen_range(0.5..2.5);
        TwoUserContext::new(
            random_matrix(rng, 2, 2),
            random_matrix(rng, 2, 2),
            random_psd(rng, 2, s2_trace),
            r2,
            rng.gen_range(0.5..4.0),
        )
        .unwrap()
    }

    fn scalar_ctx(r2: f64) -> TwoUserContext {
        TwoUserContext::new(
            ComplexMatrix::from_real(1, 1, &[1.0]).unwrap(),
            ComplexMatrix::from_real(1, 1, &[1.0]).unwrap(),
            HermitianPsd::new(DMatrix::from_row_slice(1, 1, &[Cx::new(3.0, 0.0)])).unwrap(),
            r2,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn scalar_closed_forms() {
        let sol = solve(&scalar_ctx(0.5)).unwrap();
        assert_eq!(sol.regime, Regime::SdClosedForm);
        assert_relative_eq!(sol.rate, 2.0f64.ln(), epsilon = 1e-9);
        assert_eq!(sol.dual_weight, Some(1.0));

        let sol = solve(&scalar_ctx(1.2)).unwrap();
        assert_eq!(sol.regime, Regime::Jd);
        assert_relative_eq!(sol.rate, 5.0f64.ln() - 1.2, epsilon = 1e-9);
        assert_eq!(sol.dual_weight, Some(0.0));

        let sol = solve(&scalar_ctx(2.0)).unwrap();
        assert_eq!(sol.regime, Regime::Sud);
        assert_relative_eq!(sol.rate, 1.25f64.ln(), epsilon = 1e-9);
        assert_eq!(sol.dual_weight, None);
    }

    #[test]
    fn scalar_dual_band_is_a_point() {
        // selfish and joint covariances coincide on scalar channels, so the
        // dual band collapses; right on it the bisection exits at an endpoint
        let hat = 2.5f64.ln();
        let sol = solve(&scalar_ctx(hat)).unwrap();
        assert_eq!(sol.regime, Regime::SdDual);
        assert_relative_eq!(sol.rate, 2.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn dominates_noise_treatment_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..60 {
            let r2 = rng.gen_range(0.0..3.0);
            let ctx = random_ctx(&mut rng, r2);
            let sol = solve(&ctx).unwrap();
            let sud = sud_best_response(ctx.h_direct(), ctx.cross_interference(), ctx.power())
                .unwrap();
            assert!(
                sol.rate >= sud.rate - 1e-9,
                "regime {:?} fell below noise treatment",
                sol.regime
            );
            assert!(sol.covariance.trace_re() <= ctx.power() * (1.0 + 1e-9));
            sol.covariance.validate().unwrap();
        }
    }

    #[test]
    fn rate_point_stays_in_the_mac_region_when_decoding() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let mut checked = 0;
        for _ in 0..80 {
            let r2 = rng.gen_range(0.0..2.0);
            let ctx = random_ctx(&mut rng, r2);
            let sol = solve(&ctx).unwrap();
            if sol.regime == Regime::Sud {
                continue;
            }
            checked += 1;
            let spec = MacRegionSpec::new(
                vec![
                    MacMember {
                        user: 1,
                        channel: ctx.h_direct().clone(),
                        covariance: sol.covariance.clone(),
                    },
                    MacMember {
                        user: 2,
                        channel: ctx.h_cross().clone(),
                        covariance: ctx.cov_cross().clone(),
                    },
                ],
                HermitianPsd::scaled_identity(ctx.rx_dim(), 1.0),
            )
            .unwrap();
            // dual-regime rates carry up to tol_g of constraint slack
            let m = mac_member_with_tol(&spec, &[sol.rate, ctx.rate_cross()], 2e-6).unwrap();
            assert!(m.is_member, "violations: {:?}", m.violations);
        }
        assert!(checked > 20, "too few decoding-regime samples to be meaningful");
    }

    #[test]
    fn rate_is_monotone_and_lipschitz_in_the_interferer_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..5 {
            let base = random_ctx(&mut rng, 0.0);
            let hi = base.decode_clean_limit() * 1.2 + 0.2;
            let steps = 40;
            let mut last: Option<f64> = None;
            for k in 0..=steps {
                let r2 = hi * k as f64 / steps as f64;
                let sol = solve(&base.with_rate_cross(r2).unwrap()).unwrap();
                if let Some(prev) = last {
                    let delta = sol.rate - prev;
                    assert!(delta <= 2e-6, "rate increased with the interferer rate");
                    assert!(
                        delta >= -(hi / steps as f64) - 1e-4,
                        "rate dropped faster than the moderate-branch slope"
                    );
                }
                last = Some(sol.rate);
            }
        }
    }

    #[test]
    fn dual_regime_keeps_both_constraints_active() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let mut tested = 0;
        while tested < 10 {
            let ctx0 = random_ctx(&mut rng, 0.1);
            let selfish = waterfill(ctx0.h_direct(), ctx0.power()).covariance;
            let joint =
                sud_best_response(ctx0.h_direct(), ctx0.cross_interference(), ctx0.power())
                    .unwrap()
                    .covariance;
            let hat = ctx0.decode_with_signal_limit(&selfish);
            let bar = ctx0.decode_with_signal_limit(&joint);
            if bar - hat < 0.05 {
                continue;
            }
            tested += 1;
            let ctx = ctx0.with_rate_cross(0.5 * (hat + bar)).unwrap();
            let sol = solve(&ctx).unwrap();
            assert_eq!(sol.regime, Regime::SdDual);
            let w = sol.dual_weight.unwrap();
            assert!(w > 0.0 && w < 1.0, "interior point expected, got {w}");
            // own-capacity constraint is active by construction of the rate;
            // the sum constraint must be active within the subgradient tol
            let own = ctx.own_cap(&sol.covariance);
            let sum_slack = ctx.sum_cap(&sol.covariance) - ctx.rate_cross() - sol.rate;
            assert_relative_eq!(own, sol.rate, epsilon = 1e-9);
            assert!(sum_slack.abs() <= 1e-5, "sum constraint slack {sum_slack}");
        }
    }

    #[test]
    fn dual_weight_minimizes_the_dual_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut tested = 0;
        while tested < 3 {
            let ctx0 = random_ctx(&mut rng, 0.1);
            let selfish = waterfill(ctx0.h_direct(), ctx0.power()).covariance;
            let joint =
                sud_best_response(ctx0.h_direct(), ctx0.cross_interference(), ctx0.power())
                    .unwrap()
                    .covariance;
            let hat = ctx0.decode_with_signal_limit(&selfish);
            let bar = ctx0.decode_with_signal_limit(&joint);
            if bar - hat < 0.1 {
                continue;
            }
            tested += 1;
            let ctx = ctx0.with_rate_cross(0.5 * (hat + bar)).unwrap();
            let sol = solve(&ctx).unwrap();
            let w_star = sol.dual_weight.unwrap();
            let dual = |w: f64| -> f64 {
                let out = convex::solve(
                    &dual_objective(&ctx, w).unwrap(),
                    convex::DEFAULT_TOL,
                    convex::DEFAULT_MAX_ITER,
                );
                w * ctx.own_cap(&out.covariance)
                    + (1.0 - w) * (ctx.sum_cap(&out.covariance) - ctx.rate_cross())
            };
            let at_star = dual(w_star);
            for dw in [-0.2, -0.05, 0.05, 0.2] {
                let w = (w_star + dw).clamp(0.0, 1.0);
                assert!(
                    dual(w) >= at_star - 1e-6,
                    "dual function dips below its reported minimizer"
                );
            }
        }
    }

    #[test]
    fn bisection_reports_a_lost_bracket() {
        // interferer rate above the joint threshold: subgradient negative on
        // the whole interval
        let ctx = scalar_ctx(1.2);
        assert!(matches!(
            bisect_dual_weight(&ctx, 1e-6, 1e-9),
            Err(Error::BisectionFailed)
        ));
    }

    #[test]
    fn bisection_exits_at_the_selfish_endpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let ctx0 = random_ctx(&mut rng, 0.1);
        let selfish = waterfill(ctx0.h_direct(), ctx0.power()).covariance;
        let hat = ctx0.decode_with_signal_limit(&selfish);
        let ctx = ctx0.with_rate_cross(hat).unwrap();
        let (w, cov) = bisect_dual_weight(&ctx, 1e-6, 1e-6).unwrap();
        assert_eq!(w, 1.0);
        assert!(cov.frobenius_distance(&selfish) <= 1e-4);
    }
}

//! Maximization of weighted log-det objectives over the trace-bounded PSD
//! cone by projected gradient ascent.
//!
//! The objective has the form `sum_n w_n log det(B_n + H S H^H)` with fixed
//! bases `B_n` dominating the identity, a common transmit map `H`, simplex
//! weights `w`, and the feasible set `{S PSD, tr(S) <= P}`. Values are
//! reported relative to `S = 0`, i.e. the constant `log det(B_n)` offsets are
//! subtracted.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::matrix::{congruence, eigh_raw, logdet, logdet_pd_raw, pd_inverse, ComplexMatrix, Cx, HermitianPsd};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Sufficient-increase fraction for the backtracking line search.
const ARMIJO: f64 = 1e-4;

/// One weighted log-det term `w * log det(B + H S H^H)`.
#[derive(Clone, Debug)]
pub struct LogDetTerm {
    pub weight: f64,
    /// Base matrix `B`, Hermitian and dominating the identity.
    pub base: HermitianPsd,
    /// Transmit map `H` shared across terms (receiver rows x transmit cols).
    pub map: ComplexMatrix,
}

/// Validated objective plus the power budget for the trace constraint.
#[derive(Clone, Debug)]
pub struct LogDetObjective {
    terms: Vec<LogDetTerm>,
    base_logdets: Vec<f64>,
    power: f64,
    tx_dim: usize,
}

impl LogDetObjective {
    pub fn new(terms: Vec<LogDetTerm>, power: f64) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidConfig(
                "objective needs at least one term".into(),
            ));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::InvalidConfig(
                "power budget must be finite and nonnegative".into(),
            ));
        }
        let tx_dim = terms[0].map.cols();
        let mut sum = 0.0;
        for t in &terms {
            if !t.weight.is_finite() || t.weight < 0.0 {
                return Err(Error::InvalidConfig(
                    "term weights must be finite and nonnegative".into(),
                ));
            }
            sum += t.weight;
            if t.map.cols() != tx_dim {
                return Err(Error::DimensionMismatch(
                    "all terms must share the transmit dimension".into(),
                ));
            }
            if t.base.dim() != t.map.rows() {
                return Err(Error::DimensionMismatch(format!(
                    "base is {}x{} but the map has {} rows",
                    t.base.dim(),
                    t.base.dim(),
                    t.map.rows()
                )));
            }
            let (vals, _) = eigh_raw(t.base.raw());
            let min_eig = vals[vals.len() - 1];
            if min_eig < 1.0 - 1e-6 {
                return Err(Error::InvalidConfig(format!(
                    "term base must dominate the identity (min eigenvalue {min_eig:.6e})"
                )));
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedWeights { sum });
        }
        let base_logdets = terms
            .iter()
            .map(|t| logdet(&t.base, false))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            terms,
            base_logdets,
            power,
            tx_dim,
        })
    }

    /// Same bases and maps with new weights; only the simplex condition is
    /// re-checked. Used by dual methods that re-solve under many weight
    /// vectors.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.terms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} terms",
                weights.len(),
                self.terms.len()
            )));
        }
        let mut sum = 0.0;
        for &w in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidConfig(
                    "term weights must be finite and nonnegative".into(),
                ));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::UnnormalizedWeights { sum });
        }
        let mut out = self.clone();
        for (t, &w) in out.terms.iter_mut().zip(weights) {
            t.weight = w;
        }
        Ok(out)
    }

    pub fn terms(&self) -> &[LogDetTerm] {
        &self.terms
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn tx_dim(&self) -> usize {
        self.tx_dim
    }

    /// Objective value at `s`, relative to `s = 0`. Zero-weight terms are
    /// skipped entirely, so their bases may even be singular.
    pub fn value(&self, s: &HermitianPsd) -> f64 {
        let mut acc = 0.0;
        for (t, &off) in self.terms.iter().zip(&self.base_logdets) {
            if t.weight == 0.0 {
                continue;
            }
            acc += t.weight * (self.term_logdet(t, s) - off);
        }
        acc
    }

    /// `log det(B_n + H S H^H) - log det(B_n)` for every term, including
    /// zero-weight ones.
    pub fn term_capacities(&self, s: &HermitianPsd) -> Vec<f64> {
        self.terms
            .iter()
            .zip(&self.base_logdets)
            .map(|(t, &off)| self.term_logdet(t, s) - off)
            .collect()
    }

    fn term_logdet(&self, t: &LogDetTerm, s: &HermitianPsd) -> f64 {
        let m = t.base.raw() + congruence(&t.map, s).raw();
        logdet_pd_raw(&m).expect("base dominates the identity, so the shifted matrix is PD")
    }

    /// Euclidean gradient `sum_n w_n H^H (B_n + H S H^H)^{-1} H`, Hermitian.
    pub fn gradient(&self, s: &HermitianPsd) -> ComplexMatrix {
        let n = self.tx_dim;
        let mut acc = DMatrix::<Cx>::zeros(n, n);
        for t in &self.terms {
            if t.weight == 0.0 {
                continue;
            }
            let m = t.base.raw() + congruence(&t.map, s).raw();
            let inv = pd_inverse(&m);
            acc += (t.map.raw().adjoint() * inv * t.map.raw()) * Complex::new(t.weight, 0.0);
        }
        let sym = (&acc + acc.adjoint()) * Complex::new(0.5, 0.0);
        ComplexMatrix::from_raw(sym).expect("gradient of a finite objective is finite")
    }
}

/// Euclidean projection of a Hermitian matrix onto
/// `{S PSD, tr(S) <= power}`: eigenvalues are clamped to zero and, if the
/// trace still exceeds the budget, uniformly shifted down (a simplex
/// projection on the spectrum).
pub fn project_psd_trace(m: &ComplexMatrix, power: f64) -> HermitianPsd {
    assert_eq!(m.rows(), m.cols(), "projection needs a square matrix");
    assert!(power >= 0.0 && power.is_finite(), "power must be finite and nonnegative");
    let sym = HermitianPsd::from_hermitian_part(m.raw().clone());
    let (vals, vecs) = eigh_raw(sym.raw());
    let mut lam: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = lam.iter().sum();
    if total > power {
        // descending lam: find the uniform shift that lands the sum on power
        let mut theta = 0.0;
        let mut prefix = 0.0;
        for (m_act, &l) in lam.iter().enumerate() {
            prefix += l;
            let t = (prefix - power) / (m_act + 1) as f64;
            if l - t > 0.0 {
                theta = t;
            } else {
                break;
            }
        }
        for l in lam.iter_mut() {
            *l = (*l - theta).max(0.0);
        }
    }
    let n = m.rows();
    let mut scaled = vecs.clone();
    for (j, &l) in lam.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= Complex::new(l, 0.0);
        }
    }
    HermitianPsd::from_hermitian_part(&scaled * vecs.adjoint())
}

/// Result of a projected-gradient solve. When `converged` is false the best
/// iterate found is still returned; the caller decides whether that warrants
/// a warning.
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub covariance: HermitianPsd,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes the objective from the default isotropic start `(P/N) I`.
pub fn solve(obj: &LogDetObjective, tol: f64, max_iter: usize) -> SolveOutcome {
    let n = obj.tx_dim();
    let init = HermitianPsd::scaled_identity(n, obj.power() / n as f64);
    solve_from(obj, &init, tol, max_iter)
}

/// Maximizes the objective starting from `init` (projected onto the feasible
/// set first). Convergence is declared when the unit projected-gradient step
/// moves the iterate by at most `tol` in Frobenius norm.
pub fn solve_from(
    obj: &LogDetObjective,
    init: &HermitianPsd,
    tol: f64,
    max_iter: usize,
) -> SolveOutcome {
    let n = obj.tx_dim();
    if obj.power() == 0.0 {
        return SolveOutcome {
            covariance: HermitianPsd::zeros(n),
            value: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    assert_eq!(init.dim(), n, "initial covariance has the wrong dimension");
    let mut s = project_psd_trace(
        &ComplexMatrix::from_raw(init.raw().clone()).expect("finite initial covariance"),
        obj.power(),
    );
    let mut f = obj.value(&s);
    let mut step = 1.0f64;

    for it in 0..max_iter {
        let g = obj.gradient(&s);
        let unit = shifted_projection(&s, &g, 1.0, obj.power());
        let pg_norm = (unit.raw() - s.raw()).norm();
        if pg_norm <= tol {
            return SolveOutcome {
                covariance: s,
                value: f,
                iterations: it,
                converged: true,
            };
        }

        let mut alpha = step.clamp(1e-12, 1e6);
        let mut accepted = false;
        while alpha >= 1e-18 {
            let cand = shifted_projection(&s, &g, alpha, obj.power());
            let diff = cand.raw() - s.raw();
            // projection property makes this inner product nonnegative
            let inc = herm_inner(g.raw(), &diff);
            let fc = obj.value(&cand);
            if fc - f >= ARMIJO * inc && fc.is_finite() {
                s = cand;
                f = fc;
                step = (alpha * 2.0).min(1e6);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // numerically stationary: no ascent direction survives projection
            return SolveOutcome {
                covariance: s,
                value: f,
                iterations: it + 1,
                converged: pg_norm <= tol,
            };
        }
    }
    SolveOutcome {
        covariance: s.clone(),
        value: f,
        iterations: max_iter,
        converged: false,
    }
}

fn shifted_projection(s: &HermitianPsd, g: &ComplexMatrix, alpha: f64, power: f64) -> HermitianPsd {
    let moved = s.raw() + g.raw() * Complex::new(alpha, 0.0);
    project_psd_trace(
        &ComplexMatrix::from_raw(moved).expect("gradient step stays finite"),
        power,
    )
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
fn herm_inner(a: &DMatrix<Cx>, b: &DMatrix<Cx>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waterfill::{sud_best_response, waterfill};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
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

    fn single_term(h: &ComplexMatrix, power: f64) -> LogDetObjective {
        LogDetObjective::new(
            vec![LogDetTerm {
                weight: 1.0,
                base: HermitianPsd::scaled_identity(h.rows(), 1.0),
                map: h.clone(),
            }],
            power,
        )
        .unwrap()
    }

    #[test]
    fn single_term_matches_waterfilling() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let h = random_matrix(&mut rng, 2, 2);
            let power = rng.gen_range(0.5..4.0);
            let obj = single_term(&h, power);
            let out = solve(&obj, DEFAULT_TOL, DEFAULT_MAX_ITER);
            let wf = waterfill(&h, power);
            assert!(out.converged);
            assert_relative_eq!(out.value, wf.rate, epsilon = 1e-6);
        }
    }

    #[test]
    fn zero_power_returns_zero_covariance() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 2.0]).unwrap();
        let out = solve(&single_term(&h, 0.0), DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!(out.converged);
        assert_eq!(out.value, 0.0);
        assert_relative_eq!(out.covariance.trace_re(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_weight_terms_are_inert() {
        // weight (0, 1) with a colored second base reduces to the whitened
        // single-user problem
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h = random_matrix(&mut rng, 2, 2);
        let hc = random_matrix(&mut rng, 2, 2);
        let s2 = random_psd(&mut rng, 2, 1.5);
        let colored = congruence(&hc, &s2).add_identity();
        let power = 2.0;
        let obj = LogDetObjective::new(
            vec![
                LogDetTerm {
                    weight: 0.0,
                    base: HermitianPsd::scaled_identity(2, 1.0),
                    map: h.clone(),
                },
                LogDetTerm {
                    weight: 1.0,
                    base: colored.clone(),
                    map: h.clone(),
                },
            ],
            power,
        )
        .unwrap();
        let out = solve(&obj, DEFAULT_TOL, DEFAULT_MAX_ITER);
        let wf = sud_best_response(&h, &congruence(&hc, &s2), power).unwrap();
        assert_relative_eq!(out.value, wf.rate, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_weight_vectors() {
        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let base = HermitianPsd::scaled_identity(1, 1.0);
        let t = |w: f64| LogDetTerm {
            weight: w,
            base: base.clone(),
            map: h.clone(),
        };
        assert!(matches!(
            LogDetObjective::new(vec![t(0.4), t(0.4)], 1.0),
            Err(Error::UnnormalizedWeights { .. })
        ));
        assert!(matches!(
            LogDetObjective::new(vec![t(-0.2), t(1.2)], 1.0),
            Err(Error::InvalidConfig(_))
        ));
        let obj = LogDetObjective::new(vec![t(0.5), t(0.5)], 1.0).unwrap();
        assert!(matches!(
            obj.reweighted(&[0.9, 0.2]),
            Err(Error::UnnormalizedWeights { .. })
        ));
    }

    #[test]
    fn rejects_base_below_identity() {
        let h = ComplexMatrix::from_real(1, 1, &[1.0]).unwrap();
        let weak_base = HermitianPsd::scaled_identity(1, 0.5);
        assert!(matches!(
            LogDetObjective::new(
                vec![LogDetTerm { weight: 1.0, base: weak_base, map: h }],
                1.0
            ),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn projection_handles_the_diagonal_example() {
        // diag(2, -1) with power 1: clamp to (2, 0), then shift to (1, 0)
        let m = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, -1.0]).unwrap();
        let p = project_psd_trace(&m, 1.0);
        assert_relative_eq!(p.raw()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.raw()[(1, 1)].re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(p.trace_re(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_keeps_feasible_points_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..25 {
            let s = random_psd(&mut rng, 3, 0.8);
            let back = project_psd_trace(
                &ComplexMatrix::from_raw(s.raw().clone()).unwrap(),
                1.0,
            );
            assert!(s.frobenius_distance(&back) <= 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..5 {
            let h = random_matrix(&mut rng, 2, 2);
            let hc = random_matrix(&mut rng, 2, 2);
            let base2 = congruence(&hc, &random_psd(&mut rng, 2, 1.0)).add_identity();
            let obj = LogDetObjective::new(
                vec![
                    LogDetTerm {
                        weight: 0.3,
                        base: HermitianPsd::scaled_identity(2, 1.0),
                        map: h.clone(),
                    },
                    LogDetTerm {
                        weight: 0.7,
                        base: base2,
                        map: h.clone(),
                    },
                ],
                1.0,
            )
            .unwrap();
            let s = random_psd(&mut rng, 2, 0.7);
            let g = obj.gradient(&s);
            let step = 1e-6;
            for i in 0..2 {
                for j in 0..2 {
                    // real-part direction e_i e_j^H + e_j e_i^H
                    let mut d = DMatrix::<Cx>::zeros(2, 2);
                    d[(i, j)] += Cx::new(1.0, 0.0);
                    d[(j, i)] += Cx::new(1.0, 0.0);
                    let fd = directional_fd(&obj, &s, &d, step);
                    let want = herm_inner(g.raw(), &d);
                    assert_relative_eq!(fd, want, epsilon = 1e-5, max_relative = 1e-4);
                }
            }
        }
    }

    fn directional_fd(
        obj: &LogDetObjective,
        s: &HermitianPsd,
        d: &DMatrix<Cx>,
        step: f64,
    ) -> f64 {
        let plus = HermitianPsd::from_hermitian_part(s.raw() + d * Cx::new(step, 0.0));
        let minus = HermitianPsd::from_hermitian_part(s.raw() - d * Cx::new(step, 0.0));
        (obj.value(&plus) - obj.value(&minus)) / (2.0 * step)
    }

    #[test]
    fn objective_is_concave_along_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let h = random_matrix(&mut rng, 2, 2);
        let obj = single_term(&h, 2.0);
        for _ in 0..25 {
            let a = random_psd(&mut rng, 2, 1.8);
            let b = random_psd(&mut rng, 2, 1.2);
            let t: f64 = rng.gen_range(0.0..1.0);
            let mix = HermitianPsd::from_hermitian_part(
                a.raw() * Cx::new(t, 0.0) + b.raw() * Cx::new(1.0 - t, 0.0),
            );
            let lhs = obj.value(&mix);
            let rhs = t * obj.value(&a) + (1.0 - t) * obj.value(&b);
            assert!(lhs >= rhs - 1e-9, "concavity violated");
        }
    }

    #[test]
    fn solve_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let h = random_matrix(&mut rng, 2, 2);
        let hc = random_matrix(&mut rng, 2, 2);
        let power = 1.5;
        let obj = LogDetObjective::new(
            vec![
                LogDetTerm {
                    weight: 0.5,
                    base: HermitianPsd::scaled_identity(2, 1.0),
                    map: h.clone(),
                },
                LogDetTerm {
                    weight: 0.5,
                    base: congruence(&hc, &random_psd(&mut rng, 2, 1.0)).add_identity(),
                    map: h.clone(),
                },
            ],
            power,
        )
        .unwrap();
        let out = solve(&obj, DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert!(out.converged);
        for _ in 0..500 {
            let frac = rng.gen_range(0.2..1.0f64);
            let s = random_psd(&mut rng, 2, power * frac);
            assert!(obj.value(&s) <= out.value + 1e-6);
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let h = random_matrix(&mut rng, 2, 2);
        let obj = single_term(&h, 1.0);
        let cold = solve(&obj, DEFAULT_TOL, DEFAULT_MAX_ITER);
        let warm_init = random_psd(&mut rng, 2, 0.4);
        let warm = solve_from(&obj, &warm_init, DEFAULT_TOL, DEFAULT_MAX_ITER);
        assert_relative_eq!(cold.value, warm.value, epsilon = 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

        #[test]
        fn projection_is_idempotent_and_feasible(
            entries in proptest::collection::vec(-3.0f64..3.0, 9),
            power in 0.0f64..4.0,
        ) {
            let m = ComplexMatrix::from_real(3, 3, &entries).unwrap();
            let p = project_psd_trace(&m, power);
            prop_assert!(p.trace_re() <= power + 1e-9);
            prop_assert!(p.validate().is_ok());
            let again = project_psd_trace(
                &ComplexMatrix::from_raw(p.raw().clone()).unwrap(),
                power,
            );
            prop_assert!(p.frobenius_distance(&again) <= 1e-10);
        }
    }
}

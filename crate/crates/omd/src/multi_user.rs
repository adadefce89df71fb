//! Receiver-side machinery for any number of interferers: the optimal
//! decodable set, the max-min covariance optimization over its subset
//! constraints, and extraction of a successive decoding order.
//!
//! The decodable set is the unique largest group of interferers whose fixed
//! rates jointly satisfy every multiple-access inequality when everyone else
//! is treated as noise. Given that set, the transmitter's best response
//! maximizes the minimum over all subset constraints, solved through a dual
//! weighting of the constraints: a cutting-plane (ellipsoid) search over the
//! weight simplex with a warm-started inner concave solve per iterate.

use nalgebra::{DMatrix, DVector};

use crate::convex::{self, LogDetObjective, LogDetTerm};
use crate::error::{Error, Result};
use crate::matrix::{congruence_sum, ComplexMatrix, HermitianPsd};
use crate::rate::{
    conditional_capacity, mac_member_with_tol, MacMember, MacRegionSpec, BOUNDARY_TOL,
};
use crate::sets::{ordered_partitions_finest_first, subsets_canonical};
use crate::waterfill::sud_best_response;

/// Hard cap on the total user count; the subset machinery is exponential.
pub const MAX_USERS: usize = 8;
/// The dual search stops once the ellipsoid volume has shrunk by this factor.
pub const VOLUME_STOP: f64 = 1e-8;
/// ... or after this many iterations, whichever comes first.
pub const MAX_DUAL_ITERS: usize = 2000;

/// One interferer as seen by the receiver under optimization: its channel
/// into this receiver, its fixed transmit covariance, and its fixed rate.
#[derive(Clone, Debug)]
pub struct Interferer {
    pub user: usize,
    pub channel: ComplexMatrix,
    pub covariance: HermitianPsd,
    pub rate: f64,
}

/// Everything one transmitter-receiver pair needs to best-respond: its own
/// channel and power budget plus the frozen state of every interferer.
#[derive(Clone, Debug)]
pub struct ReceiverContext {
    user: usize,
    direct: ComplexMatrix,
    interferers: Vec<Interferer>,
    power: f64,
}

impl ReceiverContext {
    pub fn new(
        user: usize,
        direct: ComplexMatrix,
        interferers: Vec<Interferer>,
        power: f64,
    ) -> Result<Self> {
        let total = interferers.len() + 1;
        if total > MAX_USERS {
            return Err(Error::TooManyUsers {
                got: total,
                max: MAX_USERS,
            });
        }
        if !power.is_finite() || power < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "power budget must be finite and nonnegative (got {power})"
            )));
        }
        let rx = direct.rows();
        let mut seen = std::collections::BTreeSet::new();
        seen.insert(user);
        for i in &interferers {
            if !seen.insert(i.user) {
                return Err(Error::InvalidConfig(format!(
                    "user index {} appears more than once in the receiver context",
                    i.user
                )));
            }
            if i.channel.rows() != rx {
                return Err(Error::DimensionMismatch(format!(
                    "user {} channel has {} rows but the receiver has {rx} antennas",
                    i.user,
                    i.channel.rows()
                )));
            }
            if i.covariance.dim() != i.channel.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "user {} covariance is {}x{} but its channel has {} columns",
                    i.user,
                    i.covariance.dim(),
                    i.covariance.dim(),
                    i.channel.cols()
                )));
            }
            i.covariance.validate()?;
            if !i.rate.is_finite() || i.rate < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "user {} rate must be finite and nonnegative (got {})",
                    i.user, i.rate
                )));
            }
        }
        Ok(Self {
            user,
            direct,
            interferers,
            power,
        })
    }

    pub fn user(&self) -> usize {
        self.user
    }

    pub fn direct(&self) -> &ComplexMatrix {
        &self.direct
    }

    pub fn interferers(&self) -> &[Interferer] {
        &self.interferers
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn rx_dim(&self) -> usize {
        self.direct.rows()
    }

    fn interferer(&self, user: usize) -> &Interferer {
        self.interferers
            .iter()
            .find(|i| i.user == user)
            .expect("user id not present in the receiver context")
    }

    /// Received covariance of every interferer, without the unit noise floor.
    pub fn total_interference(&self) -> HermitianPsd {
        congruence_sum(
            self.rx_dim(),
            self.interferers.iter().map(|i| (&i.channel, &i.covariance)),
        )
    }

    /// `I + sum of interference from users outside `candidates``: the noise
    /// floor once everyone in `candidates` is slated for decoding.
    fn noise_excluding(&self, candidates: &[usize]) -> HermitianPsd {
        congruence_sum(
            self.rx_dim(),
            self.interferers
                .iter()
                .filter(|i| !candidates.contains(&i.user))
                .map(|i| (&i.channel, &i.covariance)),
        )
        .add_identity()
    }

    fn rate_sum(&self, users: &[usize]) -> f64 {
        users.iter().map(|u| self.interferer(*u).rate).sum()
    }

    fn pairs<'a>(&'a self, users: &[usize]) -> Vec<(&'a ComplexMatrix, &'a HermitianPsd)> {
        users
            .iter()
            .map(|u| {
                let i = self.interferer(*u);
                (&i.channel, &i.covariance)
            })
            .collect()
    }
}

/// One certified inequality: the named interferers' rates sum to at most the
/// group's joint capacity over the ambient noise.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub subset: Vec<usize>,
    pub rate_sum: f64,
    pub capacity: f64,
}

/// The largest set of interferers the receiver can decode, plus the
/// inequalities certifying it (one per nonempty subset of the members).
#[derive(Clone, Debug)]
pub struct DecodableSet {
    pub members: Vec<usize>,
    pub complement: Vec<usize>,
    pub certificates: Vec<Certificate>,
}

/// Finds the optimal decodable set by the restart scan: repeatedly test every
/// nonempty subset of the current candidate set against its joint capacity
/// (noise = identity plus all non-candidates) and drop the first violating
/// subset, starting over until a full pass is clean.
pub fn find_optimal_decodable_set(ctx: &ReceiverContext) -> DecodableSet {
    find_decodable_set_with(ctx, |_| {})
}

/// Same scan with the per-pass subset order shuffled by a seeded permutation.
/// The result is provably order-independent; this entry point exists so that
/// tests can exercise that claim.
pub fn find_optimal_decodable_set_seeded(ctx: &ReceiverContext, seed: u64) -> DecodableSet {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    find_decodable_set_with(ctx, move |subsets| subsets.shuffle(&mut rng))
}

/// First violating subset of `subset` in canonical order. Size-ascending
/// enumeration means every proper subset of the returned one has already
/// passed, making it minimal; `subset` itself violates, so one always exists.
fn minimal_violator(ctx: &ReceiverContext, noise: &HermitianPsd, subset: Vec<usize>) -> Vec<usize> {
    for sub in subsets_canonical(&subset, false) {
        if ctx.rate_sum(&sub) > conditional_capacity(noise, &ctx.pairs(&sub)) + BOUNDARY_TOL {
            return sub;
        }
    }
    subset
}

fn find_decodable_set_with<F>(ctx: &ReceiverContext, mut reorder: F) -> DecodableSet
where
    F: FnMut(&mut Vec<Vec<usize>>),
{
    let mut candidates: Vec<usize> = ctx.interferers.iter().map(|i| i.user).collect();
    candidates.sort_unstable();

    'scan: loop {
        let noise = ctx.noise_excluding(&candidates);
        let mut subsets = subsets_canonical(&candidates, false);
        reorder(&mut subsets);
        for subset in subsets {
            let rate_sum = ctx.rate_sum(&subset);
            let capacity = conditional_capacity(&noise, &ctx.pairs(&subset));
            if rate_sum > capacity + BOUNDARY_TOL {
                // a violating subset can still contain decodable users; only a
                // minimal violator (every proper subset passes) is provably
                // disjoint from every decodable set, so descend before removing
                let victim = minimal_violator(ctx, &noise, subset);
                candidates.retain(|u| !victim.contains(u));
                continue 'scan;
            }
        }
        break;
    }

    let noise = ctx.noise_excluding(&candidates);
    let certificates = subsets_canonical(&candidates, false)
        .into_iter()
        .map(|subset| {
            let rate_sum = ctx.rate_sum(&subset);
            let capacity = conditional_capacity(&noise, &ctx.pairs(&subset));
            Certificate {
                subset,
                rate_sum,
                capacity,
            }
        })
        .collect();
    let complement = ctx
        .interferers
        .iter()
        .map(|i| i.user)
        .filter(|u| !candidates.contains(u))
        .collect::<Vec<_>>();
    let mut complement = complement;
    complement.sort_unstable();
    DecodableSet {
        members: candidates,
        complement,
        certificates,
    }
}

/// Best response of the transmitter together with the dual state that
/// produced it.
#[derive(Clone, Debug)]
pub struct KUserSolution {
    pub covariance: HermitianPsd,
    /// Own achievable rate in nats: the minimum constraint value at
    /// `covariance`.
    pub rate: f64,
    pub decodable_set: DecodableSet,
    /// All subsets of the decodable members in canonical order, starting with
    /// the empty set; `duals` is aligned with this list.
    pub subsets: Vec<Vec<usize>>,
    pub duals: Vec<f64>,
    /// False when the dual search hit its iteration cap before the volume
    /// criterion; the solution is then the best feasible iterate seen.
    pub dual_converged: bool,
    /// Filled by [`find_decode_order`], not by [`solve`].
    pub decode_order: Option<Vec<Vec<usize>>>,
}

/// Maximizes the worst-case decoding constraint over the transmit covariance.
///
/// With decodable set `U` and noise floor `Phi` (identity plus all
/// non-decodable interference), the achievable rate under covariance `S` is
/// `min over subsets J of U of [cap(J + own; Phi) - sum of rates in J]`. The
/// max-min is solved in the dual: a weight per subset on the simplex, the
/// weighted concave objective maximized exactly per iterate, and the weights
/// driven by a central-cut ellipsoid on the reduced simplex.
pub fn solve(ctx: &ReceiverContext) -> Result<KUserSolution> {
    let dset = find_optimal_decodable_set(ctx);
    if dset.members.is_empty() {
        let wf = sud_best_response(&ctx.direct, &ctx.total_interference(), ctx.power)?;
        return Ok(KUserSolution {
            covariance: wf.covariance,
            rate: wf.rate,
            decodable_set: dset,
            subsets: vec![Vec::new()],
            duals: vec![1.0],
            dual_converged: true,
            decode_order: None,
        });
    }

    let (obj, offsets, subsets) = constraint_objective(ctx, &dset)?;
    let search = minimize_dual(&obj, &offsets, VOLUME_STOP)?;
    let search = polish_support(&obj, &offsets, search)?;
    let rate = min_slack(&obj, &offsets, &search.covariance);
    Ok(KUserSolution {
        covariance: search.covariance,
        rate,
        decodable_set: dset,
        subsets,
        duals: search.weights,
        dual_converged: search.converged,
        decode_order: None,
    })
}

/// Rate achieved by a fixed covariance in this context: the minimum
/// constraint value over all subsets of the optimal decodable set.
pub fn rate_at(ctx: &ReceiverContext, s: &HermitianPsd) -> Result<f64> {
    if s.dim() != ctx.direct.cols() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{} but the transmitter has {} antennas",
            s.dim(),
            s.dim(),
            ctx.direct.cols()
        )));
    }
    s.validate()?;
    if s.trace_re() > ctx.power * (1.0 + 1e-9) + BOUNDARY_TOL {
        return Err(Error::InfeasibleCovariance(format!(
            "trace {} exceeds the power budget {}",
            s.trace_re(),
            ctx.power
        )));
    }
    let dset = find_optimal_decodable_set(ctx);
    if dset.members.is_empty() {
        let phi = ctx.noise_excluding(&[]);
        return Ok(conditional_capacity(&phi, &[(&ctx.direct, s)]));
    }
    let (obj, offsets, _) = constraint_objective(ctx, &dset)?;
    Ok(min_slack(&obj, &offsets, s))
}

/// Constraint values `cap(J + own; Phi) - sum of rates in J` at `s`, aligned
/// with `sol.subsets`. The solution's rate is the minimum of these at its own
/// covariance.
pub fn constraint_slacks(
    ctx: &ReceiverContext,
    sol: &KUserSolution,
    s: &HermitianPsd,
) -> Result<Vec<f64>> {
    let (obj, offsets, _) = constraint_objective(ctx, &sol.decodable_set)?;
    let caps = obj.term_capacities(s);
    Ok(caps
        .iter()
        .zip(offsets.iter())
        .map(|(c, o)| c + o)
        .collect())
}

/// The multiple-access region containing the solution's rate point: decodable
/// members plus the receiver's own user, over the noise floor of the
/// non-decodable interferers. Returns the region together with the aligned
/// rate vector.
pub fn solution_mac_spec(
    ctx: &ReceiverContext,
    sol: &KUserSolution,
) -> Result<(MacRegionSpec, Vec<f64>)> {
    let mut members = Vec::new();
    let mut rates = Vec::new();
    for u in &sol.decodable_set.members {
        let i = ctx.interferer(*u);
        members.push(MacMember {
            user: i.user,
            channel: i.channel.clone(),
            covariance: i.covariance.clone(),
        });
        rates.push(i.rate);
    }
    members.push(MacMember {
        user: ctx.user,
        channel: ctx.direct.clone(),
        covariance: sol.covariance.clone(),
    });
    rates.push(sol.rate);
    let spec = MacRegionSpec::new(members, ctx.noise_excluding(&sol.decodable_set.members))?;
    Ok((spec, rates))
}

fn constraint_objective(
    ctx: &ReceiverContext,
    dset: &DecodableSet,
) -> Result<(LogDetObjective, Vec<f64>, Vec<Vec<usize>>)> {
    let phi = ctx.noise_excluding(&dset.members);
    let subsets = subsets_canonical(&dset.members, true);
    let uniform = 1.0 / subsets.len() as f64;
    let mut terms = Vec::with_capacity(subsets.len());
    let mut offsets = Vec::with_capacity(subsets.len());
    for subset in &subsets {
        let pairs = ctx.pairs(subset);
        // constant part of the constraint: capacity headroom the subset's
        // rates leave on the table (nonnegative by decodability)
        offsets.push(conditional_capacity(&phi, &pairs) - ctx.rate_sum(subset));
        let base = phi.add(&congruence_sum(
            ctx.rx_dim(),
            pairs.iter().map(|(h, s)| (*h, *s)),
        ));
        terms.push(LogDetTerm {
            weight: uniform,
            base,
            map: ctx.direct.clone(),
        });
    }
    let obj = LogDetObjective::new(terms, ctx.power)?;
    Ok((obj, offsets, subsets))
}

fn min_slack(obj: &LogDetObjective, offsets: &[f64], s: &HermitianPsd) -> f64 {
    obj.term_capacities(s)
        .iter()
        .zip(offsets.iter())
        .map(|(c, o)| c + o)
        .fold(f64::INFINITY, f64::min)
}

struct DualSearch {
    weights: Vec<f64>,
    covariance: HermitianPsd,
    converged: bool,
}

/// Slack margin inside which a constraint is treated as active when
/// restricting the dual support.
const SUPPORT_GAP: f64 = 1e-2;
/// Restricted re-solves are cheap (few constraints), so they run the
/// ellipsoid much further down than the full search.
const POLISH_VOLUME_STOP: f64 = 1e-12;

/// Tightens complementary slackness after the volume-based stop: the
/// ellipsoid's best iterate can leave small weights on constraints that are
/// clearly inactive at its covariance. Each round drops those constraints and
/// re-minimizes the dual on the surviving support, keeping the result only if
/// the dual value (an upper bound on the achievable rate) does not increase,
/// so polishing never degrades the saddle approximation.
fn polish_support(
    obj: &LogDetObjective,
    offsets: &[f64],
    search: DualSearch,
) -> Result<DualSearch> {
    let mut current = search;
    for _ in 0..3 {
        let slacks: Vec<f64> = obj
            .term_capacities(&current.covariance)
            .iter()
            .zip(offsets.iter())
            .map(|(c, o)| c + o)
            .collect();
        let floor = slacks.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let active: Vec<usize> = (0..slacks.len())
            .filter(|&n| slacks[n] <= floor + SUPPORT_GAP)
            .collect();
        if active.len() == slacks.len() {
            break;
        }
        let dual_now: f64 = current
            .weights
            .iter()
            .zip(slacks.iter())
            .map(|(m, s)| m * s)
            .sum();

        let uniform = 1.0 / active.len() as f64;
        let terms: Vec<LogDetTerm> = active
            .iter()
            .map(|&n| {
                let t = &obj.terms()[n];
                LogDetTerm {
                    weight: uniform,
                    base: t.base.clone(),
                    map: t.map.clone(),
                }
            })
            .collect();
        let sub_obj = LogDetObjective::new(terms, obj.power())?;
        let sub_offsets: Vec<f64> = active.iter().map(|&n| offsets[n]).collect();

        let sub = if active.len() == 1 {
            let out =
                convex::solve(&sub_obj, convex::DEFAULT_TOL, convex::DEFAULT_MAX_ITER);
            DualSearch {
                weights: vec![1.0],
                covariance: out.covariance,
                converged: out.converged,
            }
        } else {
            minimize_dual(&sub_obj, &sub_offsets, POLISH_VOLUME_STOP)?
        };

        // weights outside the support are exactly zero, so the restricted
        // dual value is the full dual value of the expanded weights
        let dual_sub: f64 = sub
            .weights
            .iter()
            .zip(sub_obj.term_capacities(&sub.covariance).iter())
            .zip(sub_offsets.iter())
            .map(|((m, c), o)| m * (c + o))
            .sum();
        if dual_sub > dual_now + 1e-9 {
            break;
        }

        let mut weights = vec![0.0; slacks.len()];
        for (w, &n) in sub.weights.iter().zip(active.iter()) {
            weights[n] = *w;
        }
        let done = active.len() == 1;
        current = DualSearch {
            weights,
            covariance: sub.covariance,
            converged: current.converged && sub.converged,
        };
        if done {
            break;
        }
    }
    Ok(current)
}

/// Minimizes the dual function `g(mu) = max_S sum_n mu_n f_n(S)` over the
/// weight simplex. Returns the best (lowest dual value) feasible iterate.
fn minimize_dual(
    obj: &LogDetObjective,
    offsets: &[f64],
    volume_stop: f64,
) -> Result<DualSearch> {
    let d = offsets.len() - 1;
    debug_assert!(d >= 1);

    let mut warm = HermitianPsd::scaled_identity(
        obj.tx_dim(),
        obj.power() / obj.tx_dim() as f64,
    );
    let mut best: Option<(f64, Vec<f64>, HermitianPsd)> = None;
    // evaluates the dual at full weights `mu`, updating the warm start and
    // the running best; returns the constraint slacks at the inner maximizer
    let eval = |mu: &[f64],
                    warm: &mut HermitianPsd,
                    best: &mut Option<(f64, Vec<f64>, HermitianPsd)>|
     -> Result<Vec<f64>> {
        let out = convex::solve_from(
            &obj.reweighted(mu)?,
            warm,
            convex::DEFAULT_TOL,
            convex::DEFAULT_MAX_ITER,
        );
        *warm = out.covariance;
        let slacks: Vec<f64> = obj
            .term_capacities(warm)
            .iter()
            .zip(offsets.iter())
            .map(|(c, o)| c + o)
            .collect();
        let dual: f64 = mu.iter().zip(slacks.iter()).map(|(m, s)| m * s).sum();
        if best.as_ref().map_or(true, |(b, _, _)| dual < *b) {
            *best = Some((dual, mu.to_vec(), warm.clone()));
        }
        Ok(slacks)
    };

    if d == 1 {
        // one free weight: the ellipsoid degenerates to interval bisection on
        // the convex dual, guided by the subgradient sign
        for z in [1.0, 0.0] {
            eval(&[z, 1.0 - z], &mut warm, &mut best)?;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            let slacks = eval(&[mid, 1.0 - mid], &mut warm, &mut best)?;
            let subgrad = slacks[0] - slacks[1];
            if subgrad.abs() <= 1e-12 {
                break;
            }
            if subgrad > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (_, weights, covariance) = best.expect("bisection evaluates its endpoints");
        return Ok(DualSearch {
            weights,
            covariance,
            converged: true,
        });
    }

    // central-cut ellipsoid on the reduced simplex (the last weight is one
    // minus the rest); the unit ball around the uniform point contains it
    let n = d as f64;
    let per_iter_volume = (n / (n + 1.0)) * (n * n / (n * n - 1.0)).powf((n - 1.0) / 2.0);
    let mut x = DVector::<f64>::from_element(d, 1.0 / (d as f64 + 1.0));
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut volume = 1.0f64;
    let mut converged = false;

    for _ in 0..MAX_DUAL_ITERS {
        let g: DVector<f64> = if let Some(i) = (0..d).find(|&i| x[i] < 0.0) {
            // feasibility cut: restore the violated nonnegativity constraint
            let mut e = DVector::zeros(d);
            e[i] = -1.0;
            e
        } else if x.sum() > 1.0 {
            DVector::from_element(d, 1.0)
        } else {
            let mut mu: Vec<f64> = x.iter().copied().collect();
            mu.push((1.0 - x.sum()).max(0.0));
            let slacks = eval(&mu, &mut warm, &mut best)?;
            DVector::from_fn(d, |i, _| slacks[i] - slacks[d])
        };

        let gpg = (g.transpose() * &p * &g)[(0, 0)];
        if !(gpg > 1e-30) {
            // flat subgradient or collapsed ellipsoid: nothing left to cut
            converged = true;
            break;
        }
        let q = (&p * &g) / gpg.sqrt();
        x -= &q / (n + 1.0);
        p = (&p - (2.0 / (n + 1.0)) * (&q * q.transpose())) * (n * n / (n * n - 1.0));
        // keep the shape matrix symmetric against drift
        p = 0.5 * (&p + p.transpose());
        volume *= per_iter_volume;
        if volume < volume_stop {
            converged = true;
            break;
        }
    }

    let (_, weights, covariance) =
        best.expect("the initial center is feasible, so at least one dual evaluation ran");
    Ok(DualSearch {
        weights,
        covariance,
        converged,
    })
}

/// Searches for an ordered grouping of the decodable members plus the
/// receiver that supports the solution's rate point by successive group
/// decoding: groups are decoded in order, each jointly, treating all later
/// groups (and the non-decodable interferers) as noise.
///
/// Candidates are ordered partitions with the receiver's user in the last
/// group, tried finest first (most groups first) so that fully successive
/// orders are preferred over joint decoding. Verification uses the
/// multiple-access membership test, first at a strict tolerance and then at a
/// relaxed one to absorb solver noise. The search cost grows with the ordered
/// Bell numbers, which is fine at the supported user counts.
pub fn find_decode_order(ctx: &ReceiverContext, sol: &KUserSolution) -> Result<Vec<Vec<usize>>> {
    if sol.decodable_set.members.is_empty() {
        return Ok(vec![vec![ctx.user]]);
    }
    let mut items = sol.decodable_set.members.clone();
    items.push(ctx.user);
    items.sort_unstable();
    let phi = ctx.noise_excluding(&sol.decodable_set.members);

    // channel, covariance, and rate for any participant, own user included
    let entry = |u: usize| -> (&ComplexMatrix, &HermitianPsd, f64) {
        if u == ctx.user {
            (&ctx.direct, &sol.covariance, sol.rate)
        } else {
            let i = ctx.interferer(u);
            (&i.channel, &i.covariance, i.rate)
        }
    };

    let partitions = ordered_partitions_finest_first(&items);
    for tol in [1e-9, 1e-6] {
        'candidate: for partition in &partitions {
            let last = partition.last().expect("partitions have no empty groups");
            if !last.contains(&ctx.user) {
                continue;
            }
            for (stage, group) in partition.iter().enumerate() {
                let mut noise = phi.clone();
                for later in &partition[stage + 1..] {
                    for &u in later {
                        let (h, s, _) = entry(u);
                        noise = noise.add(&congruence_sum(ctx.rx_dim(), [(h, s)]));
                    }
                }
                let mut members = Vec::with_capacity(group.len());
                let mut rates = Vec::with_capacity(group.len());
                for &u in group {
                    let (h, s, r) = entry(u);
                    members.push(MacMember {
                        user: u,
                        channel: h.clone(),
                        covariance: s.clone(),
                    });
                    rates.push(r);
                }
                let spec = MacRegionSpec::new(members, noise)?;
                if !mac_member_with_tol(&spec, &rates, tol)?.is_member {
                    continue 'candidate;
                }
            }
            return Ok(partition.clone());
        }
    }
    Err(Error::OrderNotFound)
}

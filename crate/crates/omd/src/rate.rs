//! Achievable-rate model for a receiver that opportunistically decodes
//! interference.
//!
//! The receiver of interest sees its own signal plus one or more interferers.
//! Depending on how much rate an interferer carries relative to what the
//! receiver's channel can support, the interferer is decoded before the own
//! signal (strong), jointly with it (moderate), or treated as noise (weak).
//! This module evaluates that piecewise rate, the thresholds separating the
//! branches, and membership in the multiple-access capacity region that
//! underlies the joint-decoding constraints. All rates are in nats.

use crate::error::{Error, Result};
use crate::matrix::{congruence, eigh, logdet, ComplexMatrix, HermitianPsd};
use crate::sets::subsets_canonical;

/// Absolute tolerance for all boundary and membership comparisons: a point on
/// the boundary counts as inside.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// `log det(I + H S H^H)`: capacity of a channel against unit noise.
pub fn own_capacity(h: &ComplexMatrix, s: &HermitianPsd) -> f64 {
    logdet(&congruence(h, s), true).expect("shifted log-determinant of a PSD matrix is defined")
}

/// `log det(noise + sum_i H_i S_i H_i^H) - log det(noise)` for a strictly
/// positive definite `noise_full` (by convention it includes the identity).
pub fn conditional_capacity(
    noise_full: &HermitianPsd,
    pairs: &[(&ComplexMatrix, &HermitianPsd)],
) -> f64 {
    let total = congruence_sum_with(noise_full, pairs);
    let a = logdet(&total, false).expect("noise covariance dominates the identity");
    let b = logdet(noise_full, false).expect("noise covariance dominates the identity");
    a - b
}

fn congruence_sum_with(
    base: &HermitianPsd,
    pairs: &[(&ComplexMatrix, &HermitianPsd)],
) -> HermitianPsd {
    let mut acc = base.clone();
    for (h, s) in pairs {
        acc = acc.add(&congruence(h, s));
    }
    acc
}

/// Which branch of the piecewise rate applied at a given operating point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Interference decoded first and subtracted; own channel is clean.
    Strong,
    /// Own signal and interference decoded jointly; the interferer's rate
    /// eats into the sum capacity.
    Moderate,
    /// Interference left as noise; own channel is whitened against it.
    Weak,
}

/// Best-response regime selected by the two-user solver.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Interference fully decodable even at the selfish covariance: plain
    /// water-filling on the direct channel is optimal.
    SdClosedForm,
    /// Decodability binds: the covariance comes from a one-dimensional dual
    /// search between the selfish and joint-decoding endpoints.
    SdDual,
    /// Joint decoding: the sum-capacity-optimal covariance is used and the
    /// interferer's rate is subtracted.
    Jd,
    /// Interferer not decodable at all; treat it as noise.
    Sud,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SdClosedForm => "sd-closed-form",
            Regime::SdDual => "sd-dual",
            Regime::Jd => "jd",
            Regime::Sud => "sud",
        }
    }
}

/// One receiver, one interferer: everything needed to evaluate the piecewise
/// rate of the receiver's own user.
///
/// `h_direct` maps the own transmitter (`tx_dim` antennas) to the receiver,
/// `h_cross` maps the interferer's transmitter, `cov_cross` and `rate_cross`
/// are the interferer's fixed covariance and rate, and `power` bounds the
/// trace of the own covariance.
#[derive(Clone, Debug)]
pub struct TwoUserContext {
    h_direct: ComplexMatrix,
    h_cross: ComplexMatrix,
    cov_cross: HermitianPsd,
    rate_cross: f64,
    power: f64,
    // cached: H_cross S_cross H_cross^H and its clean decode limit
    cross_cov: HermitianPsd,
    clean_limit: f64,
}

impl TwoUserContext {
    pub fn new(
        h_direct: ComplexMatrix,
        h_cross: ComplexMatrix,
        cov_cross: HermitianPsd,
        rate_cross: f64,
        power: f64,
    ) -> Result<Self> {
        if h_direct.rows() != h_cross.rows() {
            return Err(Error::DimensionMismatch(format!(
                "direct and cross channels must share the receiver dimension ({} vs {})",
                h_direct.rows(),
                h_cross.rows()
            )));
        }
        if cov_cross.dim() != h_cross.cols() {
            return Err(Error::DimensionMismatch(format!(
                "interferer covariance is {}x{} but its channel has {} columns",
                cov_cross.dim(),
                cov_cross.dim(),
                h_cross.cols()
            )));
        }
        cov_cross.validate()?;
        if !(rate_cross >= 0.0) || !rate_cross.is_finite() {
            return Err(Error::InvalidConfig(
                "interferer rate must be finite and nonnegative".into(),
            ));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(Error::InvalidConfig(
                "power budget must be finite and nonnegative".into(),
            ));
        }
        let cross_cov = congruence(&h_cross, &cov_cross);
        let clean_limit =
            logdet(&cross_cov, true).expect("shifted log-determinant of a PSD matrix is defined");
        Ok(Self {
            h_direct,
            h_cross,
            cov_cross,
            rate_cross,
            power,
            cross_cov,
            clean_limit,
        })
    }

    pub fn h_direct(&self) -> &ComplexMatrix {
        &self.h_direct
    }

    pub fn h_cross(&self) -> &ComplexMatrix {
        &self.h_cross
    }

    pub fn cov_cross(&self) -> &HermitianPsd {
        &self.cov_cross
    }

    pub fn rate_cross(&self) -> f64 {
        self.rate_cross
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn rx_dim(&self) -> usize {
        self.h_direct.rows()
    }

    pub fn tx_dim(&self) -> usize {
        self.h_direct.cols()
    }

    /// Interference covariance `H_cross S_cross H_cross^H` at the receiver.
    pub fn cross_interference(&self) -> &HermitianPsd {
        &self.cross_cov
    }

    /// Same context with a different interferer rate; channels and
    /// covariances are shared.
    pub fn with_rate_cross(&self, rate_cross: f64) -> Result<Self> {
        if !(rate_cross >= 0.0) || !rate_cross.is_finite() {
            return Err(Error::InvalidConfig(
                "interferer rate must be finite and nonnegative".into(),
            ));
        }
        let mut c = self.clone();
        c.rate_cross = rate_cross;
        Ok(c)
    }

    /// `log det(I + H_d S H_d^H)`.
    pub fn own_cap(&self, s: &HermitianPsd) -> f64 {
        own_capacity(&self.h_direct, s)
    }

    /// `log det(I + H_d S H_d^H + H_c S_c H_c^H)`.
    pub fn sum_cap(&self, s: &HermitianPsd) -> f64 {
        logdet(&congruence(&self.h_direct, s).add(&self.cross_cov), true)
            .expect("shifted log-determinant of a PSD matrix is defined")
    }

    /// Largest interferer rate decodable while the own signal (at covariance
    /// `s`) is still treated as noise. Decodability of the interferer at rate
    /// `rate_cross` in the strong sense means `rate_cross` is at most this.
    pub fn decode_with_signal_limit(&self, s: &HermitianPsd) -> f64 {
        self.sum_cap(s) - self.own_cap(s)
    }

    /// Largest interferer rate decodable after the own signal has been
    /// removed, `log det(I + H_c S_c H_c^H)`. Above this the interferer is
    /// never decodable at this receiver.
    pub fn decode_clean_limit(&self) -> f64 {
        self.clean_limit
    }

    /// Own rate when interference is treated as noise,
    /// `log det(I + (I + H_c S_c H_c^H)^{-1} H_d S H_d^H)`.
    pub fn whitened_cap(&self, s: &HermitianPsd) -> f64 {
        conditional_capacity(&self.cross_cov.add_identity(), &[(&self.h_direct, s)])
    }

    /// Largest own rate compatible with the interferer staying decodable:
    /// the binding of the own-capacity and sum-capacity constraints.
    pub fn decodable_rate(&self, s: &HermitianPsd) -> f64 {
        self.own_cap(s).min(self.sum_cap(s) - self.rate_cross)
    }
}

/// Piecewise achievable rate of the receiver's own user at covariance `s`,
/// along with the branch that applied. `s` must be PSD with trace within the
/// power budget.
pub fn omd_rate(ctx: &TwoUserContext, s: &HermitianPsd) -> Result<(f64, Branch)> {
    if s.dim() != ctx.tx_dim() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {}x{} but the transmitter has {} antennas",
            s.dim(),
            s.dim(),
            ctx.tx_dim()
        )));
    }
    s.validate()?;
    let trace = s.trace_re();
    if trace > ctx.power * (1.0 + 1e-9) + BOUNDARY_TOL {
        return Err(Error::InfeasibleCovariance(format!(
            "trace {trace:.6e} exceeds the power budget {:.6e}",
            ctx.power
        )));
    }

    let own = ctx.own_cap(s);
    let sum = ctx.sum_cap(s);
    let with_signal = sum - own;
    let r2 = ctx.rate_cross;
    if r2 <= with_signal + BOUNDARY_TOL {
        Ok((own, Branch::Strong))
    } else if r2 <= ctx.clean_limit + BOUNDARY_TOL {
        Ok((sum - r2, Branch::Moderate))
    } else {
        Ok((ctx.whitened_cap(s), Branch::Weak))
    }
}

/// The three scalar thresholds dividing the interferer-rate axis, plus the
/// regime they select for the context's operating point.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdSet {
    /// Decode-with-signal limit at the selfish (plain water-filling)
    /// covariance.
    pub at_selfish: f64,
    /// Decode-with-signal limit at the joint-decoding covariance.
    pub at_joint: f64,
    /// Clean decode limit; above it only noise-treatment remains.
    pub clean_limit: f64,
    pub regime: Regime,
}

/// Classifies the operating point given the two candidate covariances: the
/// selfish water-filling solution and the sum-capacity (joint-decoding)
/// solution. The thresholds always satisfy `at_selfish <= at_joint <=
/// clean_limit` up to solver tolerance.
pub fn thresholds(
    ctx: &TwoUserContext,
    cov_selfish: &HermitianPsd,
    cov_joint: &HermitianPsd,
) -> ThresholdSet {
    let at_selfish = ctx.decode_with_signal_limit(cov_selfish);
    let at_joint = ctx.decode_with_signal_limit(cov_joint);
    let clean_limit = ctx.decode_clean_limit();
    let r2 = ctx.rate_cross;
    // Boundary points fall toward the dual interval; when the interval is
    // degenerate (selfish and joint covariances coincide) the outer
    // comparisons dispatch directly to the closed forms.
    let regime = if r2 > clean_limit + BOUNDARY_TOL {
        Regime::Sud
    } else if r2 < at_selfish - BOUNDARY_TOL {
        Regime::SdClosedForm
    } else if r2 > at_joint + BOUNDARY_TOL {
        Regime::Jd
    } else {
        Regime::SdDual
    };
    ThresholdSet {
        at_selfish,
        at_joint,
        clean_limit,
        regime,
    }
}

/// One user inside a multiple-access region: its channel into the common
/// receiver and its transmit covariance.
#[derive(Clone, Debug)]
pub struct MacMember {
    pub user: usize,
    pub channel: ComplexMatrix,
    pub covariance: HermitianPsd,
}

/// A multiple-access capacity region at one receiver with colored noise
/// `noise_cov` (which must dominate the identity).
#[derive(Clone, Debug)]
pub struct MacRegionSpec {
    members: Vec<MacMember>,
    noise_cov: HermitianPsd,
}

impl MacRegionSpec {
    pub fn new(members: Vec<MacMember>, noise_cov: HermitianPsd) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidConfig(
                "a multiple-access region needs at least one member".into(),
            ));
        }
        let dim = noise_cov.dim();
        let mut seen = std::collections::BTreeSet::new();
        for m in &members {
            if !seen.insert(m.user) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate user index {} in multiple-access region",
                    m.user
                )));
            }
            if m.channel.rows() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "user {} channel has {} rows but the noise covariance is {dim}x{dim}",
                    m.user,
                    m.channel.rows()
                )));
            }
            if m.covariance.dim() != m.channel.cols() {
                return Err(Error::DimensionMismatch(format!(
                    "user {} covariance is {}x{} but its channel has {} columns",
                    m.user,
                    m.covariance.dim(),
                    m.covariance.dim(),
                    m.channel.cols()
                )));
            }
            m.covariance.validate()?;
        }
        noise_cov.validate()?;
        let min_eig = eigh(&noise_cov).values.last().copied().unwrap_or(0.0);
        if min_eig < 1.0 - 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "noise covariance must dominate the identity (min eigenvalue {min_eig:.6e})"
            )));
        }
        Ok(Self { members, noise_cov })
    }

    pub fn members(&self) -> &[MacMember] {
        &self.members
    }

    pub fn noise_cov(&self) -> &HermitianPsd {
        &self.noise_cov
    }

    /// Rank function of the region: joint capacity of the given member users
    /// over the colored noise. `users` must name members of this region.
    pub fn capacity(&self, users: &[usize]) -> f64 {
        let pairs: Vec<(&ComplexMatrix, &HermitianPsd)> = users
            .iter()
            .map(|id| {
                let m = self
                    .members
                    .iter()
                    .find(|m| m.user == *id)
                    .expect("capacity queried for a non-member user");
                (&m.channel, &m.covariance)
            })
            .collect();
        conditional_capacity(&self.noise_cov, &pairs)
    }
}

/// A subset whose sum rate exceeds its joint capacity.
#[derive(Clone, Debug)]
pub struct MacViolation {
    pub users: Vec<usize>,
    pub rate_sum: f64,
    pub capacity: f64,
}

#[derive(Clone, Debug)]
pub struct MacMembership {
    pub is_member: bool,
    pub violations: Vec<MacViolation>,
}

/// Tests whether the rate vector (aligned with `spec.members()`) lies in the
/// multiple-access region. Boundary points count as inside up to
/// [`BOUNDARY_TOL`]. Violated subsets are reported in canonical order
/// (increasing size, then lexicographic).
pub fn mac_member(spec: &MacRegionSpec, rates: &[f64]) -> Result<MacMembership> {
    mac_member_with_tol(spec, rates, BOUNDARY_TOL)
}

/// [`mac_member`] with an explicit boundary tolerance, for callers whose rate
/// vectors carry solver-level noise.
pub fn mac_member_with_tol(
    spec: &MacRegionSpec,
    rates: &[f64],
    tol: f64,
) -> Result<MacMembership> {
    if rates.len() != spec.members.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rates given for {} members",
            rates.len(),
            spec.members.len()
        )));
    }
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidConfig(
            "rates must be finite and nonnegative".into(),
        ));
    }
    let positions: Vec<usize> = (0..spec.members.len()).collect();
    let mut violations = Vec::new();
    for subset in subsets_canonical(&positions, false) {
        let users: Vec<usize> = subset.iter().map(|&i| spec.members[i].user).collect();
        let rate_sum: f64 = subset.iter().map(|&i| rates[i]).sum();
        let capacity = spec.capacity(&users);
        if rate_sum > capacity + tol {
            violations.push(MacViolation {
                users,
                rate_sum,
                capacity,
            });
        }
    }
    Ok(MacMembership {
        is_member: violations.is_empty(),
        violations,
    })
}

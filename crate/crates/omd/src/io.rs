//! JSON wire formats for problem instances and solution reports.
//!
//! Complex matrices travel as row-major nested arrays of `[re, im]` pairs,
//! e.g. the 1x2 matrix `[1, i]` is `[[[1.0, 0.0], [0.0, 1.0]]]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, Cx, HermitianPsd};
use crate::multi_user::{
    Certificate, DecodableSet, Interferer, KUserSolution, ReceiverContext,
};
use crate::rate::TwoUserContext;
use crate::two_user::TwoUserSolution;

/// Row-major complex matrix: rows of `[re, im]` entries.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(m: &MatrixJson) -> Result<ComplexMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch(
            "matrix rows have unequal lengths".into(),
        ));
    }
    let entries: Vec<Cx> = m
        .iter()
        .flat_map(|r| r.iter().map(|[re, im]| Cx::new(*re, *im)))
        .collect();
    ComplexMatrix::new(rows, cols, entries)
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| {
                    let z = m.raw()[(r, c)];
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// Parses and fully validates a Hermitian positive-semidefinite matrix.
pub fn psd_from_json(m: &MatrixJson) -> Result<HermitianPsd> {
    HermitianPsd::new(matrix_from_json(m)?.into_raw())
}

pub fn psd_to_json(p: &HermitianPsd) -> MatrixJson {
    (0..p.dim())
        .map(|r| {
            (0..p.dim())
                .map(|c| {
                    let z = p.raw()[(r, c)];
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

/// One transmitter facing one fixed interferer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoUserInstance {
    /// Own channel.
    pub h11: MatrixJson,
    /// Interferer's channel into this receiver.
    pub h21: MatrixJson,
    /// Interferer's transmit covariance.
    pub s2: MatrixJson,
    /// Interferer's rate in nats.
    pub r2: f64,
    /// Own power budget.
    pub p1: f64,
}

impl TwoUserInstance {
    pub fn context(&self) -> Result<TwoUserContext> {
        TwoUserContext::new(
            matrix_from_json(&self.h11)?,
            matrix_from_json(&self.h21)?,
            psd_from_json(&self.s2)?,
            self.r2,
            self.p1,
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InterfererJson {
    pub user: usize,
    pub channel: MatrixJson,
    pub covariance: MatrixJson,
    pub rate: f64,
}

fn default_user() -> usize {
    1
}

/// One receiver among up to seven fixed interferers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KUserInstance {
    /// Receiver's own user index (defaults to 1).
    #[serde(default = "default_user")]
    pub user: usize,
    /// Own channel.
    pub direct: MatrixJson,
    /// Own power budget.
    pub power: f64,
    pub interferers: Vec<InterfererJson>,
}

impl KUserInstance {
    pub fn context(&self) -> Result<ReceiverContext> {
        let interferers = self
            .interferers
            .iter()
            .map(|i| {
                Ok(Interferer {
                    user: i.user,
                    channel: matrix_from_json(&i.channel)?,
                    covariance: psd_from_json(&i.covariance)?,
                    rate: i.rate,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ReceiverContext::new(self.user, matrix_from_json(&self.direct)?, interferers, self.power)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdsReport {
    /// Interferer rate below which plain water-filling already decodes it.
    pub at_selfish: f64,
    /// Interferer rate above which the sum-capacity covariance decodes it.
    pub at_joint: f64,
    /// Interferer rate above which it is not decodable at all.
    pub clean_limit: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoUserReport {
    pub regime: String,
    /// Achieved own rate in nats.
    pub rate: f64,
    pub dual_weight: Option<f64>,
    pub thresholds: ThresholdsReport,
    pub covariance: MatrixJson,
}

impl From<&TwoUserSolution> for TwoUserReport {
    fn from(sol: &TwoUserSolution) -> Self {
        TwoUserReport {
            regime: sol.regime.as_str().to_string(),
            rate: sol.rate,
            dual_weight: sol.dual_weight,
            thresholds: ThresholdsReport {
                at_selfish: sol.thresholds.at_selfish,
                at_joint: sol.thresholds.at_joint,
                clean_limit: sol.thresholds.clean_limit,
            },
            covariance: psd_to_json(&sol.covariance),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    pub subset: Vec<usize>,
    pub rate_sum: f64,
    pub capacity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodableSetReport {
    pub members: Vec<usize>,
    pub complement: Vec<usize>,
    pub certificates: Vec<CertificateReport>,
}

impl From<&DecodableSet> for DecodableSetReport {
    fn from(d: &DecodableSet) -> Self {
        DecodableSetReport {
            members: d.members.clone(),
            complement: d.complement.clone(),
            certificates: d
                .certificates
                .iter()
                .map(|c: &Certificate| CertificateReport {
                    subset: c.subset.clone(),
                    rate_sum: c.rate_sum,
                    capacity: c.capacity,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KUserReport {
    /// Achieved own rate in nats.
    pub rate: f64,
    pub covariance: MatrixJson,
    pub decodable_set: DecodableSetReport,
    /// Subsets of the decodable set in canonical order, aligned with `duals`.
    pub subsets: Vec<Vec<usize>>,
    pub duals: Vec<f64>,
    pub dual_converged: bool,
    pub decode_order: Option<Vec<Vec<usize>>>,
}

impl From<&KUserSolution> for KUserReport {
    fn from(sol: &KUserSolution) -> Self {
        KUserReport {
            rate: sol.rate,
            covariance: psd_to_json(&sol.covariance),
            decodable_set: DecodableSetReport::from(&sol.decodable_set),
            subsets: sol.subsets.clone(),
            duals: sol.duals.clone(),
            dual_converged: sol.dual_converged,
            decode_order: sol.decode_order.clone(),
        }
    }
}

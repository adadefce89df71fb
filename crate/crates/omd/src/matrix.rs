//! Complex matrix primitives shared by all solvers.
//!
//! Two shapes cover everything downstream: general complex channel matrices
//! and Hermitian positive semidefinite covariances. The wrappers keep those
//! invariants explicit and centralize the numerically delicate primitives
//! (log-determinants, noise whitening, spectral factorizations) so tolerance
//! conventions live in one place.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type Cx = Complex<f64>;

/// Relative tolerance on the Hermitian deviation `max|M - M^H|`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Relative tolerance below which negative eigenvalues disqualify a matrix
/// from being treated as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;

fn all_finite(m: &DMatrix<Cx>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// General complex matrix with finite entries and nonzero dimensions.
#[derive(Clone, Debug)]
pub struct ComplexMatrix {
    m: DMatrix<Cx>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Cx>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        // entries are given row-major; nalgebra stores column-major
        let m = DMatrix::from_row_iterator(rows, cols, entries.into_iter());
        Self::from_raw(m)
    }

    pub fn from_raw(m: DMatrix<Cx>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if !all_finite(&m) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m })
    }

    /// Real-valued entries, row-major.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| Cx::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { m: DMatrix::zeros(rows, cols) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn rows(&self) -> usize {
        self.m.nrows()
    }

    pub fn cols(&self) -> usize {
        self.m.ncols()
    }

    pub fn raw(&self) -> &DMatrix<Cx> {
        &self.m
    }

    pub fn into_raw(self) -> DMatrix<Cx> {
        self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }
}

/// Square Hermitian matrix used as a covariance. Values produced by solvers
/// are positive semidefinite up to [`PSD_TOL`]; [`HermitianPsd::new`] enforces
/// that, while [`HermitianPsd::from_hermitian_part`] only symmetrizes and
/// leaves the spectrum to the caller (used where PSD-ness holds by
/// construction, and in tests that need indefinite carriers).
#[derive(Clone, Debug)]
pub struct HermitianPsd {
    m: DMatrix<Cx>,
}

impl HermitianPsd {
    /// Validating constructor: requires a finite square matrix, Hermitian
    /// within [`HERMITIAN_TOL`], with spectrum no lower than
    /// `-PSD_TOL * (1 + lambda_max)`. Eigenvalues in the tolerance band below
    /// zero are clamped to exactly zero.
    pub fn new(m: DMatrix<Cx>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(&m) {
            return Err(Error::NonFinite);
        }
        let dev = hermitian_deviation(&m);
        let scale = 1.0 + m.iter().map(|z| z.norm_sqr().sqrt()).fold(0.0, f64::max);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let sym = Self::from_hermitian_part(m);
        let (vals, vecs) = eigh_raw(&sym.m);
        let lam_max = vals[0];
        let lam_min = vals[vals.len() - 1];
        if lam_min < -PSD_TOL * (1.0 + lam_max) {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lam_min });
        }
        if lam_min < 0.0 {
            let clamped: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
            return Ok(rebuild_from_eigh(&clamped, &vecs));
        }
        Ok(sym)
    }

    /// Hermitian part `(M + M^H) / 2` of a square matrix, no spectrum check.
    pub fn from_hermitian_part(m: DMatrix<Cx>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian part needs a square matrix");
        let sym = (&m + m.adjoint()) * Cx::new(0.5, 0.0);
        Self { m: sym }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    /// `s * I`, `s >= 0`.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        assert!(s >= 0.0 && s.is_finite(), "scale must be finite and nonnegative");
        Self { m: DMatrix::identity(dim, dim) * Cx::new(s, 0.0) }
    }

    /// Re-checks both structural invariants (Hermitian within tolerance,
    /// spectrum above the PSD floor) on the stored matrix.
    pub fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.m);
        let scale = 1.0 + self.m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let (vals, _) = eigh_raw(&self.m);
        let lam_max = vals[0];
        let lam_min = vals[vals.len() - 1];
        if lam_min < -PSD_TOL * (1.0 + lam_max) {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: lam_min });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn raw(&self) -> &DMatrix<Cx> {
        &self.m
    }

    pub fn trace_re(&self) -> f64 {
        (0..self.dim()).map(|i| self.m[(i, i)].re).sum()
    }

    pub fn add(&self, other: &HermitianPsd) -> HermitianPsd {
        assert_eq!(self.dim(), other.dim(), "covariance dimensions differ");
        HermitianPsd { m: &self.m + &other.m }
    }

    /// `I + M`, the standard noise-plus-interference form.
    pub fn add_identity(&self) -> HermitianPsd {
        let mut m = self.m.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += Cx::new(1.0, 0.0);
        }
        HermitianPsd { m }
    }

    pub fn scale(&self, s: f64) -> HermitianPsd {
        assert!(s >= 0.0 && s.is_finite(), "scale must be finite and nonnegative");
        HermitianPsd { m: &self.m * Cx::new(s, 0.0) }
    }

    pub fn frobenius_distance(&self, other: &HermitianPsd) -> f64 {
        (&self.m - &other.m).norm()
    }
}

fn hermitian_deviation(m: &DMatrix<Cx>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = m[(i, j)] - m[(j, i)].conj();
            dev = dev.max(d.norm());
        }
    }
    dev
}

fn rebuild_from_eigh(vals: &[f64], vecs: &DMatrix<Cx>) -> HermitianPsd {
    let n = vecs.nrows();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= Cx::new(l, 0.0);
        }
    }
    HermitianPsd::from_hermitian_part(&scaled * vecs.adjoint())
}

/// `H S H^H`, positive semidefinite by construction (symmetrized to shed
/// round-off).
pub fn congruence(h: &ComplexMatrix, s: &HermitianPsd) -> HermitianPsd {
    assert_eq!(
        h.cols(),
        s.dim(),
        "congruence needs matching inner dimensions"
    );
    let p = h.raw() * s.raw() * h.raw().adjoint();
    HermitianPsd::from_hermitian_part(p)
}

/// `sum_i H_i S_i H_i^H` over transmitter/covariance pairs observed at one
/// receiver with `rx_dim` antennas.
pub fn congruence_sum<'a, I>(rx_dim: usize, pairs: I) -> HermitianPsd
where
    I: IntoIterator<Item = (&'a ComplexMatrix, &'a HermitianPsd)>,
{
    let mut acc = DMatrix::<Cx>::zeros(rx_dim, rx_dim);
    for (h, s) in pairs {
        assert_eq!(h.rows(), rx_dim, "channel row count must match receiver dimension");
        acc += congruence(h, s).m;
    }
    HermitianPsd { m: acc }
}

/// Log-determinant of a Hermitian matrix, in nats.
///
/// With `shifted` set, computes `log det(I + M)` (defined for any PSD `M`);
/// otherwise `log det(M)`, which requires strict positive definiteness and
/// fails with [`Error::NonPositiveDefinite`] when a Cholesky pivot is not
/// strictly positive.
pub fn logdet(m: &HermitianPsd, shifted: bool) -> Result<f64> {
    if shifted {
        logdet_pd_raw(&m.add_identity().m)
    } else {
        logdet_pd_raw(&m.m)
    }
}

/// Cholesky-based log-determinant with an explicit positivity check on every
/// pivot. Hand-rolled because the backing library's complex Cholesky accepts
/// indefinite matrices (complex square roots always exist).
pub(crate) fn logdet_pd_raw(a: &DMatrix<Cx>) -> Result<f64> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let mut l = a.clone_owned();
    let mut acc = 0.0;
    for j in 0..n {
        let mut d = l[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositiveDefinite);
        }
        acc += d.ln();
        let root = d.sqrt();
        l[(j, j)] = Cx::new(root, 0.0);
        for i in j + 1..n {
            let mut s = l[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(acc)
}

/// Inverse of a Hermitian positive definite matrix via its eigensystem.
/// Callers guarantee positive definiteness (inputs are `I + PSD`).
pub(crate) fn pd_inverse(a: &DMatrix<Cx>) -> DMatrix<Cx> {
    let (vals, vecs) = eigh_raw(a);
    let n = a.nrows();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        assert!(l > 0.0, "pd_inverse needs a positive definite matrix");
        let inv = Cx::new(1.0 / l, 0.0);
        for i in 0..n {
            scaled[(i, j)] *= inv;
        }
    }
    let inv = &scaled * vecs.adjoint();
    // inverse of Hermitian is Hermitian; shed round-off
    (&inv + inv.adjoint()) * Cx::new(0.5, 0.0)
}

/// `noise_cov^{-1/2} * h` using the principal Hermitian inverse square root.
/// `noise_cov` is the full noise-plus-interference covariance (including the
/// identity) and must be strictly positive definite.
pub fn whiten(noise_cov: &HermitianPsd, h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if noise_cov.dim() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "noise covariance is {}x{} but channel has {} rows",
            noise_cov.dim(),
            noise_cov.dim(),
            h.rows()
        )));
    }
    let (vals, vecs) = eigh_raw(&noise_cov.m);
    if vals[vals.len() - 1] <= 0.0 {
        return Err(Error::NonPositiveDefinite);
    }
    let n = noise_cov.dim();
    let mut scaled = vecs.clone();
    for (j, &l) in vals.iter().enumerate() {
        let inv_root = Cx::new(1.0 / l.sqrt(), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= inv_root;
        }
    }
    let w = &scaled * vecs.adjoint() * h.raw();
    Ok(ComplexMatrix { m: w })
}

/// Thin singular value decomposition `H = U diag(sigma) V^H` with
/// `sigma` sorted descending.
pub struct SvdParts {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(h: &ComplexMatrix) -> SvdParts {
    let decomp = h.m.clone().svd(true, true);
    let u = decomp.u.expect("svd requested u");
    let v_t = decomp.v_t.expect("svd requested v_t");
    let sigma: Vec<f64> = decomp.singular_values.iter().map(|&s| s.max(0.0)).collect();
    SvdParts {
        u: ComplexMatrix { m: u },
        sigma,
        v: ComplexMatrix { m: v_t.adjoint() },
    }
}

/// Hermitian eigendecomposition with eigenvalues sorted descending and
/// eigenvectors in the matching column order.
pub struct EighParts {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

pub fn eigh(m: &HermitianPsd) -> EighParts {
    let (vals, vecs) = eigh_raw(&m.m);
    EighParts { values: vals, vectors: ComplexMatrix { m: vecs } }
}

/// Sorted (descending) Hermitian eigendecomposition on the raw representation.
pub(crate) fn eigh_raw(a: &DMatrix<Cx>) -> (Vec<f64>, DMatrix<Cx>) {
    let n = a.nrows();
    if n == 1 {
        return (vec![a[(0, 0)].re], DMatrix::identity(1, 1));
    }
    let se = nalgebra::SymmetricEigen::new(a.clone_owned());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        se.eigenvalues[j]
            .partial_cmp(&se.eigenvalues[i])
            .expect("eigenvalues of a finite Hermitian matrix are finite")
    });
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::<Cx>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

//! Eigendecomposition of covariance matrices with an explicit numerical rank.
//!
//! Singular and near-singular covariance matrices are expected inputs here,
//! not error conditions. The decomposition keeps every eigenpair, sorted by
//! non-increasing eigenvalue, and draws a single line — the tolerance η —
//! between the image space (eigenvalues strictly above η) and the numerical
//! null space (the rest). Everything downstream (pseudoinverse solves,
//! projectors, redundancy analysis) is phrased in terms of that split.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative symmetry tolerance: max|C−Cᵀ| must not exceed this times max|C|.
const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Eigenvalues in `[−1e-8·λ₁, 0)` are treated as rounding noise and clamped
/// to zero; anything more negative means the matrix is not a covariance.
const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-8;

/// Default condition-number cap κ. The default rank tolerance is `λ₁/κ`, so
/// the retained eigenvalues have `λ₁/λᵢ < κ`.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e8;

/// Full eigendecomposition of a symmetric positive semi-definite matrix,
/// split at a tolerance η into image and null spaces.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    tolerance: f64,
    rank: usize,
}

fn decompose(c: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if c.nrows() != c.ncols() {
        return Err(Error::DimensionMismatch {
            expected: c.nrows(),
            got: c.ncols(),
        });
    }
    if c.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "covariance matrix must have at least one row".into(),
        ));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "covariance matrix has non-finite entries".into(),
        ));
    }

    let scale = c.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let asymmetry = (c - c.transpose())
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale > 0.0 && asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: asymmetry / scale,
            tolerance: SYMMETRY_TOLERANCE,
        });
    }

    let eig = c.clone().symmetric_eigen();
    let n = c.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]];
    if lambda_max < 0.0 {
        return Err(Error::Numeric(format!(
            "matrix is not positive semi-definite: largest eigenvalue {lambda_max:e}"
        )));
    }
    let floor = -NEGATIVE_EIGENVALUE_TOLERANCE * lambda_max;

    let mut eigenvalues = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda < floor {
            return Err(Error::Numeric(format!(
                "matrix is not positive semi-definite: eigenvalue {lambda:e} is below \
                 the tolerance {floor:e}"
            )));
        }
        eigenvalues.push(lambda.max(0.0));
        vectors.set_column(col, &eig.eigenvectors.column(idx));
        // Fix the sign ambiguity: make the largest-magnitude component
        // positive so repeated runs and reloads agree bit for bit.
        let mut lead = 0;
        for i in 1..n {
            if vectors[(i, col)].abs() > vectors[(lead, col)].abs() {
                lead = i;
            }
        }
        if vectors[(lead, col)] < 0.0 {
            for i in 0..n {
                vectors[(i, col)] = -vectors[(i, col)];
            }
        }
    }
    Ok((eigenvalues, vectors))
}

impl SpectralDecomposition {
    /// Decomposes `c` and splits the spectrum at `tolerance`: eigenvalues
    /// strictly greater than `tolerance` belong to the image space.
    ///
    /// `c` must be square, symmetric to within a relative 1e-8, and positive
    /// semi-definite up to rounding (eigenvalues in `[−1e-8·λ₁, 0)` are
    /// clamped to zero).
    pub fn new(c: &DMatrix<f64>, tolerance: f64) -> Result<Self> {
        if !tolerance.is_finite() || tolerance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rank tolerance must be finite and non-negative, got {tolerance}"
            )));
        }
        let (eigenvalues, vectors) = decompose(c)?;
        let rank = eigenvalues.iter().take_while(|&&l| l > tolerance).count();
        Ok(SpectralDecomposition {
            eigenvalues,
            vectors,
            tolerance,
            rank,
        })
    }

    /// Decomposes `c` with the default tolerance `η = λ₁/1e8`, which keeps
    /// the retained eigenvalues better conditioned than
    /// [`DEFAULT_CONDITION_LIMIT`].
    pub fn with_default_tolerance(c: &DMatrix<f64>) -> Result<Self> {
        let (eigenvalues, vectors) = decompose(c)?;
        let tolerance = eigenvalues[0] / DEFAULT_CONDITION_LIMIT;
        let rank = eigenvalues.iter().take_while(|&&l| l > tolerance).count();
        Ok(SpectralDecomposition {
            eigenvalues,
            vectors,
            tolerance,
            rank,
        })
    }

    /// Matrix size n.
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues sorted non-increasing, with rounding-level negatives
    /// clamped to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors; column i pairs with `eigenvalues()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// The tolerance η that separates image from null space.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Number of eigenvalues strictly greater than η.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The n×r matrix V whose columns span the image space.
    pub fn image_basis(&self) -> DMatrix<f64> {
        self.vectors.columns(0, self.rank).into_owned()
    }

    /// The n×(n−r) matrix W whose columns span the numerical null space.
    pub fn null_basis(&self) -> DMatrix<f64> {
        self.vectors
            .columns(self.rank, self.n() - self.rank)
            .into_owned()
    }

    /// Orthogonal projector VVᵀ onto the image space.
    pub fn image_projector(&self) -> DMatrix<f64> {
        let v = self.image_basis();
        &v * v.transpose()
    }

    /// Orthogonal projector I − VVᵀ onto the null space.
    pub fn null_projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n(), self.n()) - self.image_projector()
    }

    /// Moore–Penrose pseudoinverse `Σᵢ≤r Vᵢ Vᵢᵀ / λᵢ`.
    pub fn pseudoinverse(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut p = DMatrix::zeros(n, n);
        for i in 0..self.rank {
            let v = self.vectors.column(i);
            p += v * v.transpose() / self.eigenvalues[i];
        }
        p
    }

    /// `C⁺ y` computed spectrally, without forming the pseudoinverse.
    pub fn apply_pseudoinverse(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n());
        for i in 0..self.rank {
            let v = self.vectors.column(i);
            x += v * (v.dot(y) / self.eigenvalues[i]);
        }
        x
    }

    /// Projection of `y` onto the image space.
    pub fn project_image(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n());
        for i in 0..self.rank {
            let v = self.vectors.column(i);
            x += v * v.dot(y);
        }
        x
    }

    /// Projection of `y` onto the null space.
    pub fn project_null(&self, y: &DVector<f64>) -> DVector<f64> {
        y - self.project_image(y)
    }

    /// `(C + τ²I)⁻¹ y` computed over the full spectrum. Requires
    /// `λₙ + τ² > 0`, i.e. τ² > 0 whenever the matrix is singular.
    pub fn apply_shifted_inverse(&self, tau2: f64, y: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n());
        for i in 0..self.n() {
            let v = self.vectors.column(i);
            x += v * (v.dot(y) / (self.eigenvalues[i] + tau2));
        }
        x
    }

    /// `ln|C + τ²I| = Σᵢ ln(λᵢ + τ²)`.
    pub fn log_det_shifted(&self, tau2: f64) -> f64 {
        self.eigenvalues.iter().map(|&l| (l + tau2).ln()).sum()
    }

    /// Condition number λ₁/λₙ over the full spectrum; infinite when the
    /// smallest eigenvalue is zero (or was clamped to zero).
    pub fn condition_number(&self) -> f64 {
        let lambda_min = *self.eigenvalues.last().unwrap();
        if lambda_min <= 0.0 {
            f64::INFINITY
        } else {
            self.eigenvalues[0] / lambda_min
        }
    }

    /// Condition number λ₁/λᵣ of the retained part of the spectrum — the
    /// effective conditioning of pseudoinverse solves. Errors when the rank
    /// is zero (a zero matrix has no image space to condition).
    pub fn pi_condition_bound(&self) -> Result<f64> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter(
                "rank is zero: no eigenvalue exceeds the tolerance".into(),
            ));
        }
        Ok(self.eigenvalues[0] / self.eigenvalues[self.rank - 1])
    }

    /// Rebuilds `V diag(λ) Vᵀ` from the stored eigenpairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            let v = self.vectors.column(i);
            c += v * v.transpose() * self.eigenvalues[i];
        }
        c
    }
}

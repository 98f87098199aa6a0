//! Covariance kernels and the design-point container.
//!
//! Four kernel families are supported, each a declarative [`KernelSpec`]:
//!
//! * squared exponential (separable, anisotropic):
//!   `K(x,x') = σ² ∏ᵢ exp(−(xᵢ−xᵢ')²/(2θᵢ²))`
//! * additive: `K(x,x') = Σᵢ σᵢ² exp(−(xᵢ−xᵢ')²/(2θᵢ²))` — one squared
//!   exponential summand per input dimension
//! * periodic: `K(x,x') = σ² ∏ᵢ exp(−sin(ω(xᵢ−xᵢ'))²/(2θᵢ²))`; since `sin²`
//!   has period π, the kernel is periodic in each coordinate with period
//!   `P = π/ω`
//! * dot product (linear): `K(x,x') = 1 + xᵀx'`, no hyperparameters
//!
//! Hyperparameters are plain data — nothing is hidden in global state — and
//! specs serialize to/from JSON with explicit field names (unknown keys are
//! rejected).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A set of design points: one row per point, one column per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Design {
    data: Vec<f64>, // row-major
    n: usize,
    dim: usize,
}

impl Design {
    /// Builds a design from point rows. Requires at least one point, equal
    /// row lengths, and finite coordinates.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter(
                "design needs at least one point".into(),
            ));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "design points need at least one coordinate".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "design point {i} has a non-finite coordinate"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Design {
            data,
            n: rows.len(),
            dim,
        })
    }

    /// Convenience constructor for one-dimensional designs.
    pub fn from_1d(xs: &[f64]) -> Result<Self> {
        Design::new(xs.iter().map(|&x| vec![x]).collect())
    }

    /// Number of design points.
    pub fn n_points(&self) -> usize {
        self.n
    }

    /// Input dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `i`-th design point as a coordinate slice.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Iterator over all points.
    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Copy of the design as point rows.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    /// A new design without point `i`.
    pub fn without_point(&self, i: usize) -> Result<Self> {
        if i >= self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: i,
            });
        }
        let rows = self
            .points()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, p)| p.to_vec())
            .collect();
        Design::new(rows)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Design {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Design::new(rows)
    }
}

impl From<Design> for Vec<Vec<f64>> {
    fn from(d: Design) -> Self {
        d.rows()
    }
}

/// Declarative description of a covariance function with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernelSpec", into = "RawKernelSpec")]
pub enum KernelSpec {
    /// `σ² ∏ᵢ exp(−(xᵢ−xᵢ')²/(2θᵢ²))`
    SquaredExponential { sigma2: f64, theta: Vec<f64> },
    /// `Σᵢ σᵢ² exp(−(xᵢ−xᵢ')²/(2θᵢ²))`
    Additive { sigma2: Vec<f64>, theta: Vec<f64> },
    /// `σ² ∏ᵢ exp(−sin(ω(xᵢ−xᵢ'))²/(2θᵢ²))`
    Periodic {
        sigma2: f64,
        theta: Vec<f64>,
        omega: f64,
    },
    /// `1 + xᵀx'`
    DotProduct { dim: usize },
}

impl KernelSpec {
    /// Squared-exponential kernel with process variance `sigma2` and one
    /// length-scale per dimension.
    pub fn squared_exponential(sigma2: f64, theta: Vec<f64>) -> Result<Self> {
        let spec = KernelSpec::SquaredExponential { sigma2, theta };
        spec.validate()?;
        Ok(spec)
    }

    /// Additive kernel with one variance and one length-scale per dimension.
    pub fn additive(sigma2: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let spec = KernelSpec::Additive { sigma2, theta };
        spec.validate()?;
        Ok(spec)
    }

    /// Periodic kernel; `omega` is the radian multiplier inside
    /// `sin(ω·Δxᵢ)`, giving period `π/ω` per coordinate.
    pub fn periodic(sigma2: f64, theta: Vec<f64>, omega: f64) -> Result<Self> {
        let spec = KernelSpec::Periodic {
            sigma2,
            theta,
            omega,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Dot-product (linear) kernel on `dim` input dimensions.
    pub fn dot_product(dim: usize) -> Result<Self> {
        let spec = KernelSpec::DotProduct { dim };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )))
            }
        };
        match self {
            KernelSpec::SquaredExponential { sigma2, theta } => {
                positive("sigma2", *sigma2)?;
                if theta.is_empty() {
                    return Err(Error::InvalidParameter("theta must be non-empty".into()));
                }
                for t in theta {
                    positive("theta", *t)?;
                }
            }
            KernelSpec::Additive { sigma2, theta } => {
                if theta.is_empty() {
                    return Err(Error::InvalidParameter("theta must be non-empty".into()));
                }
                if sigma2.len() != theta.len() {
                    return Err(Error::DimensionMismatch {
                        expected: theta.len(),
                        got: sigma2.len(),
                    });
                }
                for s in sigma2 {
                    positive("sigma2", *s)?;
                }
                for t in theta {
                    positive("theta", *t)?;
                }
            }
            KernelSpec::Periodic {
                sigma2,
                theta,
                omega,
            } => {
                positive("sigma2", *sigma2)?;
                positive("omega", *omega)?;
                if theta.is_empty() {
                    return Err(Error::InvalidParameter("theta must be non-empty".into()));
                }
                for t in theta {
                    positive("theta", *t)?;
                }
            }
            KernelSpec::DotProduct { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("dim must be at least 1".into()));
                }
            }
        }
        Ok(())
    }

    /// Input dimension this kernel operates on.
    pub fn dim(&self) -> usize {
        match self {
            KernelSpec::SquaredExponential { theta, .. } => theta.len(),
            KernelSpec::Additive { theta, .. } => theta.len(),
            KernelSpec::Periodic { theta, .. } => theta.len(),
            KernelSpec::DotProduct { dim } => *dim,
        }
    }

    /// Evaluates `K(x, x')`. Symmetric in its arguments; `K(x,x)` equals the
    /// total process variance (σ² for squared-exponential/periodic, Σσᵢ² for
    /// additive, `1 + xᵀx` for dot-product).
    pub fn eval(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if xp.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: xp.len(),
            });
        }
        Ok(self.eval_unchecked(x, xp))
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], xp: &[f64]) -> f64 {
        match self {
            KernelSpec::SquaredExponential { sigma2, theta } => {
                let mut q = 0.0;
                for i in 0..theta.len() {
                    let dx = x[i] - xp[i];
                    q += dx * dx / (2.0 * theta[i] * theta[i]);
                }
                sigma2 * (-q).exp()
            }
            KernelSpec::Additive { sigma2, theta } => {
                let mut sum = 0.0;
                for i in 0..theta.len() {
                    let dx = x[i] - xp[i];
                    sum += sigma2[i] * (-dx * dx / (2.0 * theta[i] * theta[i])).exp();
                }
                sum
            }
            KernelSpec::Periodic {
                sigma2,
                theta,
                omega,
            } => {
                let mut q = 0.0;
                for i in 0..theta.len() {
                    let s = (omega * (x[i] - xp[i])).sin();
                    q += s * s / (2.0 * theta[i] * theta[i]);
                }
                sigma2 * (-q).exp()
            }
            KernelSpec::DotProduct { dim } => {
                let mut dot = 0.0;
                for i in 0..*dim {
                    dot += x[i] * xp[i];
                }
                1.0 + dot
            }
        }
    }

    /// The n×n covariance matrix of a design. The upper triangle is computed
    /// and mirrored, so the result is exactly symmetric.
    pub fn covariance_matrix(&self, design: &Design) -> Result<DMatrix<f64>> {
        if design.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: design.dim(),
            });
        }
        let n = design.n_points();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(design.point(i), design.point(j));
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(c)
    }

    /// The covariance vector `c(x) = (K(x, x¹), …, K(x, xⁿ))ᵀ`.
    pub fn covariance_vector(&self, design: &Design, x: &[f64]) -> Result<DVector<f64>> {
        if design.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: design.dim(),
            });
        }
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(DVector::from_iterator(
            design.n_points(),
            design.points().map(|p| self.eval_unchecked(x, p)),
        ))
    }
}

/// JSON mirror of [`KernelSpec`]: `{"kind": …, "sigma2": …, "theta": […],
/// "omega": …, "dim": …}`. Unknown keys are rejected; fields that do not
/// apply to a kind are rejected too.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<Sigma2Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Sigma2Field {
    Scalar(f64),
    PerDimension(Vec<f64>),
}

impl TryFrom<RawKernelSpec> for KernelSpec {
    type Error = Error;

    fn try_from(raw: RawKernelSpec) -> Result<Self> {
        let parse_err = |msg: &str| Error::Parse(format!("kernel spec: {msg}"));
        let scalar_sigma2 = |sigma2: Option<Sigma2Field>| -> Result<f64> {
            match sigma2 {
                Some(Sigma2Field::Scalar(v)) => Ok(v),
                Some(Sigma2Field::PerDimension(_)) => {
                    Err(parse_err("sigma2 must be a single number for this kind"))
                }
                None => Err(parse_err("missing sigma2")),
            }
        };
        let theta_required = |theta: Option<Vec<f64>>| -> Result<Vec<f64>> {
            theta.ok_or_else(|| parse_err("missing theta"))
        };
        let check_dim = |stated: Option<usize>, actual: usize| -> Result<()> {
            match stated {
                Some(d) if d != actual => Err(parse_err(&format!(
                    "dim {d} disagrees with theta length {actual}"
                ))),
                _ => Ok(()),
            }
        };
        let no_omega = |omega: Option<f64>| -> Result<()> {
            if omega.is_some() {
                Err(parse_err("omega only applies to Periodic kernels"))
            } else {
                Ok(())
            }
        };

        let spec = match raw.kind.as_str() {
            "SquaredExponential" => {
                no_omega(raw.omega)?;
                let theta = theta_required(raw.theta)?;
                check_dim(raw.dim, theta.len())?;
                KernelSpec::SquaredExponential {
                    sigma2: scalar_sigma2(raw.sigma2)?,
                    theta,
                }
            }
            "Additive" => {
                no_omega(raw.omega)?;
                let theta = theta_required(raw.theta)?;
                check_dim(raw.dim, theta.len())?;
                let sigma2 = match raw.sigma2 {
                    Some(Sigma2Field::PerDimension(v)) => v,
                    Some(Sigma2Field::Scalar(_)) => {
                        return Err(parse_err(
                            "sigma2 must be an array (one entry per dimension) for Additive",
                        ))
                    }
                    None => return Err(parse_err("missing sigma2")),
                };
                KernelSpec::Additive { sigma2, theta }
            }
            "Periodic" => {
                let theta = theta_required(raw.theta)?;
                check_dim(raw.dim, theta.len())?;
                KernelSpec::Periodic {
                    sigma2: scalar_sigma2(raw.sigma2)?,
                    theta,
                    omega: raw.omega.ok_or_else(|| parse_err("missing omega"))?,
                }
            }
            "DotProduct" => {
                no_omega(raw.omega)?;
                if raw.sigma2.is_some() || raw.theta.is_some() {
                    return Err(parse_err("DotProduct takes no sigma2/theta"));
                }
                KernelSpec::DotProduct {
                    dim: raw.dim.ok_or_else(|| parse_err("missing dim"))?,
                }
            }
            other => {
                return Err(parse_err(&format!(
                    "unknown kind {other:?}; expected one of SquaredExponential, Additive, \
                     Periodic, DotProduct"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for RawKernelSpec {
    fn from(spec: KernelSpec) -> Self {
        let dim = Some(spec.dim());
        match spec {
            KernelSpec::SquaredExponential { sigma2, theta } => RawKernelSpec {
                kind: "SquaredExponential".into(),
                sigma2: Some(Sigma2Field::Scalar(sigma2)),
                theta: Some(theta),
                omega: None,
                dim,
            },
            KernelSpec::Additive { sigma2, theta } => RawKernelSpec {
                kind: "Additive".into(),
                sigma2: Some(Sigma2Field::PerDimension(sigma2)),
                theta: Some(theta),
                omega: None,
                dim,
            },
            KernelSpec::Periodic {
                sigma2,
                theta,
                omega,
            } => RawKernelSpec {
                kind: "Periodic".into(),
                sigma2: Some(Sigma2Field::Scalar(sigma2)),
                theta: Some(theta),
                omega: Some(omega),
                dim,
            },
            KernelSpec::DotProduct { dim: d } => RawKernelSpec {
                kind: "DotProduct".into(),
                sigma2: None,
                theta: None,
                omega: None,
                dim: Some(d),
            },
        }
    }
}

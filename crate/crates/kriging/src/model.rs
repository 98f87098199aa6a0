//! Kriging model fitting and prediction under three regularization policies.
//!
//! The conditional-GP mean and covariance are
//!
//! ```text
//! m(x)       = c(x)ᵀ C⁻¹ y
//! cov(x,x′)  = K(x,x′) − c(x)ᵀ C⁻¹ c(x′)
//! ```
//!
//! and the three policies differ only in what stands in for `C⁻¹`:
//!
//! * **Exact** — the plain inverse; refused when the condition number
//!   exceeds [`EXACT_CONDITION_LIMIT`].
//! * **Pi** — the Moore–Penrose pseudoinverse truncated at a rank tolerance
//!   η: only eigenvalues above η are inverted. Predictions average the
//!   outputs at redundant points and have zero variance there.
//! * **Nugget** — `(C + τ²I)⁻¹`: τ² is added to every eigenvalue, which
//!   regularizes the solve at the cost of no longer interpolating.
//!
//! Predictions are computed through the eigendecomposition (sums over
//! `(Vᵢᵀc)(Vᵢᵀy)/(λᵢ+τ²)`), never by re-solving a linear system per point.
//! A key fact keeps this sound on singular matrices: any vector w with
//! Cw = 0 satisfies Σᵢ wᵢ K(xᵢ, ·) ≡ 0 as a function, so covariance vectors
//! c(x) are orthogonal to the null space for *every* x and the dropped
//! null-space terms are exact zeros, not approximations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kernels::{Design, KernelSpec};
use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};

/// Condition-number ceiling for plain inversion: beyond this the Exact
/// policy refuses rather than silently losing digits.
pub const EXACT_CONDITION_LIMIT: f64 = 1e12;

/// How the (possibly singular) covariance matrix is inverted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum RegularizationPolicy {
    /// Pseudoinverse truncated at rank tolerance `eta`; `None` picks the
    /// default `λ₁/1e8`.
    Pi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    /// Adds `tau2 ≥ 0` to the diagonal. `tau2 = 0` degenerates to `Exact`
    /// and is held to the same conditioning requirement.
    Nugget { tau2: f64 },
    /// Plain inversion; requires condition number ≤ [`EXACT_CONDITION_LIMIT`].
    Exact,
}

impl RegularizationPolicy {
    /// Pseudoinverse with the default rank tolerance.
    pub fn pi() -> Self {
        RegularizationPolicy::Pi { eta: None }
    }

    /// Pseudoinverse with an explicit rank tolerance η > 0.
    pub fn pi_with_tolerance(eta: f64) -> Self {
        RegularizationPolicy::Pi { eta: Some(eta) }
    }

    /// Nugget regularization with diagonal shift τ² ≥ 0.
    pub fn nugget(tau2: f64) -> Self {
        RegularizationPolicy::Nugget { tau2 }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RegularizationPolicy::Pi { eta: Some(e) } if !(e.is_finite() && *e > 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "pseudoinverse tolerance eta must be finite and positive, got {e}"
                )))
            }
            RegularizationPolicy::Nugget { tau2 } if !(tau2.is_finite() && *tau2 >= 0.0) => {
                Err(Error::InvalidParameter(format!(
                    "nugget tau2 must be finite and non-negative, got {tau2}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Serializable description of a model: exactly the inputs to [`KrigingModel::fit`],
/// nothing derived. Decompositions are recomputed on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub design: Design,
    pub outputs: Vec<f64>,
    pub kernel: KernelSpec,
    pub policy: RegularizationPolicy,
}

impl ModelSpec {
    /// Fits the described model.
    pub fn fit(self) -> Result<KrigingModel> {
        KrigingModel::fit(self.design, &self.outputs, self.kernel, self.policy)
    }
}

/// A fitted kriging model. Immutable; predictions are pure functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct KrigingModel {
    design: Design,
    outputs: DVector<f64>,
    kernel: KernelSpec,
    policy: RegularizationPolicy,
    decomposition: SpectralDecomposition,
    beta: DVector<f64>,
    /// Diagonal shift applied to retained eigenvalues (τ² or 0).
    shift: f64,
    /// Number of leading eigenpairs used in predictions.
    active: usize,
    /// Precomputed (Vᵢᵀy)/(λᵢ + shift) for i < active.
    alpha: Vec<f64>,
}

impl TryFrom<ModelSpec> for KrigingModel {
    type Error = Error;
    fn try_from(spec: ModelSpec) -> Result<Self> {
        spec.fit()
    }
}

impl From<KrigingModel> for ModelSpec {
    fn from(m: KrigingModel) -> Self {
        ModelSpec {
            outputs: m.outputs.iter().copied().collect(),
            design: m.design,
            kernel: m.kernel,
            policy: m.policy,
        }
    }
}

impl KrigingModel {
    /// Fits a zero-mean GP to `outputs` observed at `design` points.
    ///
    /// The covariance matrix is assembled, eigendecomposed once, and the
    /// weight vector β solved per the policy: `C⁺y` for Pi, `(C+τ²I)⁻¹y`
    /// for Nugget, `C⁻¹y` for Exact.
    pub fn fit(
        design: Design,
        outputs: &[f64],
        kernel: KernelSpec,
        policy: RegularizationPolicy,
    ) -> Result<Self> {
        policy.validate()?;
        let n = design.n_points();
        if outputs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: outputs.len(),
            });
        }
        if outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "outputs contain non-finite values".into(),
            ));
        }
        let y = DVector::from_column_slice(outputs);
        let c = kernel.covariance_matrix(&design)?;

        let decomposition = match &policy {
            RegularizationPolicy::Pi { eta: Some(e) } => SpectralDecomposition::new(&c, *e)?,
            _ => SpectralDecomposition::with_default_tolerance(&c)?,
        };

        let require_invertible = |what: &str| -> Result<()> {
            let condition = decomposition.condition_number();
            if condition > EXACT_CONDITION_LIMIT {
                let ev = decomposition.eigenvalues();
                return Err(Error::IllConditioned {
                    condition,
                    limit: EXACT_CONDITION_LIMIT,
                    lambda_max: ev[0],
                    lambda_min: *ev.last().unwrap(),
                });
            }
            let _ = what;
            Ok(())
        };

        let (shift, active, beta) = match &policy {
            RegularizationPolicy::Pi { .. } => {
                (0.0, decomposition.rank(), decomposition.apply_pseudoinverse(&y))
            }
            RegularizationPolicy::Nugget { tau2 } if *tau2 > 0.0 => (
                *tau2,
                decomposition.rank(),
                decomposition.apply_shifted_inverse(*tau2, &y),
            ),
            RegularizationPolicy::Nugget { .. } | RegularizationPolicy::Exact => {
                require_invertible("exact inversion")?;
                (0.0, n, decomposition.apply_shifted_inverse(0.0, &y))
            }
        };

        let vectors = decomposition.vectors();
        let eigenvalues = decomposition.eigenvalues();
        let alpha: Vec<f64> = (0..active)
            .map(|i| vectors.column(i).dot(&y) / (eigenvalues[i] + shift))
            .collect();

        Ok(KrigingModel {
            design,
            outputs: y,
            kernel,
            policy,
            decomposition,
            beta,
            shift,
            active,
            alpha,
        })
    }

    /// The design the model was fitted on.
    pub fn design(&self) -> &Design {
        &self.design
    }

    /// The observed outputs.
    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    /// The kernel specification.
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// The regularization policy the model was fitted with.
    pub fn policy(&self) -> &RegularizationPolicy {
        &self.policy
    }

    /// The cached eigendecomposition of the covariance matrix.
    pub fn decomposition(&self) -> &SpectralDecomposition {
        &self.decomposition
    }

    /// The weight vector β solving the policy's linear system.
    pub fn weights(&self) -> &DVector<f64> {
        &self.beta
    }

    /// Number of eigenpairs participating in predictions (the numerical
    /// rank under Pi/Nugget, n under Exact).
    pub fn active_terms(&self) -> usize {
        self.active
    }

    /// Projections of `c(x)` onto the active eigenvectors.
    fn spectral_coords(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.kernel.covariance_vector(&self.design, x)?;
        let vectors = self.decomposition.vectors();
        Ok((0..self.active).map(|i| vectors.column(i).dot(&c)).collect())
    }

    /// Predictive mean at `x`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        let u = self.spectral_coords(x)?;
        Ok(u.iter().zip(&self.alpha).map(|(ui, ai)| ui * ai).sum())
    }

    /// Predictive covariance between `x` and `xp`. Can be a hair negative
    /// at x = xp from spectral cancellation; [`Self::predict_var`] clamps.
    pub fn predict_cov(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        let ux = self.spectral_coords(x)?;
        let uxp = self.spectral_coords(xp)?;
        let eigenvalues = self.decomposition.eigenvalues();
        let mut acc = self.kernel.eval(x, xp)?;
        for i in 0..self.active {
            acc -= ux[i] * uxp[i] / (eigenvalues[i] + self.shift);
        }
        Ok(acc)
    }

    /// Predictive variance at `x`, clamped below at zero.
    pub fn predict_var(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_var_raw(x)?.max(0.0))
    }

    /// Unclamped predictive variance — `predict_cov(x, x)`, which may come
    /// out at −1e-12-level values on singular fixtures.
    pub fn predict_var_raw(&self, x: &[f64]) -> Result<f64> {
        self.predict_cov(x, x)
    }

    /// The vector of predictive means at the design points of a
    /// pseudoinverse model: the orthogonal projection VVᵀy of the outputs
    /// onto the image space. At repeated points this is the mean of the
    /// outputs observed there.
    ///
    /// Only meaningful under the Pi policy (nugget/exact prediction at
    /// design points is pointwise [`Self::predict_mean`], not a projection);
    /// other policies are a usage error.
    pub fn predict_mean_at_design(&self) -> Result<DVector<f64>> {
        match self.policy {
            RegularizationPolicy::Pi { .. } => Ok(self.decomposition.project_image(&self.outputs)),
            _ => Err(Error::InvalidParameter(
                "predict_mean_at_design requires the Pi policy".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// 1-D design with repeats at 1.5 (×2), 2 (×4) and 2.5 (×2).
    fn averaging_design() -> Design {
        Design::from_1d(&[1.0, 1.5, 1.5, 2.0, 2.0, 2.0, 2.0, 2.5, 2.5, 3.0]).unwrap()
    }

    fn averaging_outputs() -> Vec<f64> {
        vec![-2.0, -1.0, 0.0, 1.5, 4.0, 7.0, 7.5, 6.0, 5.0, 3.0]
    }

    fn se1(theta: f64) -> KernelSpec {
        KernelSpec::squared_exponential(1.0, vec![theta]).unwrap()
    }

    #[test]
    fn single_point_exact_beta_is_y_over_sigma2() {
        let design = Design::from_1d(&[0.0]).unwrap();
        let kernel = KernelSpec::squared_exponential(2.0, vec![0.3]).unwrap();
        let m = KrigingModel::fit(design, &[3.0], kernel, RegularizationPolicy::Exact).unwrap();
        assert_relative_eq!(m.weights()[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(m.predict_mean(&[0.0]).unwrap(), 3.0, epsilon = 1e-10);
        assert!(m.predict_var(&[0.0]).unwrap() < 1e-10);
    }

    #[test]
    fn pi_averages_outputs_at_repeated_points_for_any_lengthscale() {
        for theta in [0.1, 0.37, 1.0] {
            let m = KrigingModel::fit(
                averaging_design(),
                &averaging_outputs(),
                se1(theta),
                RegularizationPolicy::pi(),
            )
            .unwrap();
            assert!(m.active_terms() < 10, "rank must drop below n");
            assert_relative_eq!(m.predict_mean(&[1.5]).unwrap(), -0.5, epsilon = 1e-8);
            assert_relative_eq!(m.predict_mean(&[2.0]).unwrap(), 5.0, epsilon = 1e-8);
            assert_relative_eq!(m.predict_mean(&[2.5]).unwrap(), 5.5, epsilon = 1e-8);
            // Uniquely-defined points are interpolated.
            assert_relative_eq!(m.predict_mean(&[1.0]).unwrap(), -2.0, epsilon = 1e-8);
            assert_relative_eq!(m.predict_mean(&[3.0]).unwrap(), 3.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn pi_variance_is_zero_at_every_design_point() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        for p in m.design().rows() {
            let v = m.predict_var(&p).unwrap();
            assert!(v.abs() < 1e-8, "v({p:?}) = {v}");
            assert!(v >= 0.0, "variance clamp failed");
        }
    }

    #[test]
    fn pi_mean_at_design_is_image_projection() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        let proj = m.predict_mean_at_design().unwrap();
        let expected = [-2.0, -0.5, -0.5, 5.0, 5.0, 5.0, 5.0, 5.5, 5.5, 3.0];
        for (got, want) in proj.iter().zip(expected) {
            assert_relative_eq!(*got, want, epsilon = 1e-8);
        }
        // Pointwise prediction agrees with the projection at design points.
        for (i, p) in m.design().rows().iter().enumerate() {
            assert_relative_eq!(m.predict_mean(p).unwrap(), proj[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn mean_at_design_requires_pi_policy() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::nugget(0.5),
        )
        .unwrap();
        assert!(matches!(
            m.predict_mean_at_design(),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn pi_beta_lies_in_image_space() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        let null_part = m.decomposition().project_null(m.weights());
        assert!(null_part.amax() < 1e-8, "β leaks into the null space");
    }

    #[test]
    fn nugget_weights_solve_the_shifted_system() {
        let tau2 = 0.5;
        let design = averaging_design();
        let y = averaging_outputs();
        let kernel = se1(0.3);
        let c = kernel.covariance_matrix(&design).unwrap();
        let m = KrigingModel::fit(design, &y, kernel, RegularizationPolicy::nugget(tau2)).unwrap();
        let shifted = &c + DMatrix::identity(10, 10) * tau2;
        let residual = &shifted * m.weights() - DVector::from_column_slice(&y);
        let ynorm = DVector::from_column_slice(&y).norm();
        assert!(residual.amax() < 1e-8 * ynorm, "residual {}", residual.amax());
    }

    #[test]
    fn nugget_spectral_prediction_matches_dense_solve_oracle() {
        let design = averaging_design();
        let y = DVector::from_column_slice(&averaging_outputs());
        let kernel = se1(0.3);
        let c = kernel.covariance_matrix(&design).unwrap();
        for tau2 in [1e-2, 1e-4] {
            let m = KrigingModel::fit(
                design.clone(),
                &averaging_outputs(),
                kernel.clone(),
                RegularizationPolicy::nugget(tau2),
            )
            .unwrap();
            let shifted = &c + DMatrix::identity(10, 10) * tau2;
            let lu = shifted.lu();
            let beta_dense = lu.solve(&y).unwrap();
            for step in 0..40 {
                let x = [0.5 + 3.0 * step as f64 / 39.0];
                let cv = kernel.covariance_vector(&design, &x).unwrap();
                let mean_dense = cv.dot(&beta_dense);
                assert_relative_eq!(
                    m.predict_mean(&x).unwrap(),
                    mean_dense,
                    epsilon = 1e-8
                );
                let var_dense = kernel.eval(&x, &x).unwrap() - cv.dot(&lu.solve(&cv).unwrap());
                assert_relative_eq!(
                    m.predict_var_raw(&x).unwrap(),
                    var_dense,
                    epsilon = 1e-8
                );
            }
        }
    }

    #[test]
    fn nugget_converges_to_pi_as_tau2_vanishes() {
        let pi = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        let grid: Vec<[f64; 1]> = (0..100)
            .map(|i| [0.5 + 3.0 * i as f64 / 99.0])
            .collect();
        let mut last_mean_gap = f64::INFINITY;
        let mut last_var_gap = f64::INFINITY;
        for tau2 in [1e-2, 1e-4, 1e-6, 1e-8] {
            let nug = KrigingModel::fit(
                averaging_design(),
                &averaging_outputs(),
                se1(0.3),
                RegularizationPolicy::nugget(tau2),
            )
            .unwrap();
            let mut mean_gap = 0.0f64;
            let mut var_gap = 0.0f64;
            for x in &grid {
                mean_gap = mean_gap
                    .max((nug.predict_mean(x).unwrap() - pi.predict_mean(x).unwrap()).abs());
                var_gap = var_gap
                    .max((nug.predict_var(x).unwrap() - pi.predict_var(x).unwrap()).abs());
            }
            assert!(
                mean_gap < last_mean_gap && var_gap < last_var_gap,
                "sup gaps must decrease with tau2: mean {last_mean_gap}->{mean_gap}, \
                 var {last_var_gap}->{var_gap} at tau2={tau2}"
            );
            last_mean_gap = mean_gap;
            last_var_gap = var_gap;
        }
        assert!(last_mean_gap < 1e-3);
        assert!(last_var_gap < 1e-3);
    }

    #[test]
    fn large_nugget_loses_interpolation() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::nugget(1.0),
        )
        .unwrap();
        // x = 1 and x = 3 are uniquely defined; with τ² = 1 the prediction
        // visibly departs from the observation there.
        for (x, y) in [(1.0, -2.0), (3.0, 3.0)] {
            let gap = (m.predict_mean(&[x]).unwrap() - y).abs();
            assert!(gap > 1e-3, "nugget model still interpolates at {x}: gap {gap}");
        }
    }

    #[test]
    fn single_site_nugget_variance_closed_form() {
        // n repeats of one site: v at the site is τ²σ²/(nσ² + τ²).
        for (n, sigma2, tau2) in [(1usize, 1.0, 1.0), (3, 2.0, 0.1), (10, 0.5, 0.73)] {
            let design = Design::new(vec![vec![0.7]; n]).unwrap();
            let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let kernel = KernelSpec::squared_exponential(sigma2, vec![0.25]).unwrap();
            let m =
                KrigingModel::fit(design, &y, kernel, RegularizationPolicy::nugget(tau2)).unwrap();
            let expected = tau2 * sigma2 / (n as f64 * sigma2 + tau2);
            assert_relative_eq!(m.predict_var(&[0.7]).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn variance_saturates_to_process_variance_far_away() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            KernelSpec::squared_exponential(1.7, vec![0.2]).unwrap(),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        // 10 length-scales past the data.
        assert_relative_eq!(m.predict_var(&[5.1]).unwrap(), 1.7, epsilon = 1e-6);
        assert_relative_eq!(m.predict_mean(&[5.1]).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn covariance_is_symmetric_and_nugget_dominates_pi() {
        let pi = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        let nug = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::nugget(0.5),
        )
        .unwrap();
        let grid: Vec<f64> = (0..20).map(|i| 0.8 + 2.4 * i as f64 / 19.0).collect();
        for (idx, &a) in grid.iter().enumerate() {
            let b = grid[(idx * 7 + 3) % grid.len()];
            let ab = pi.predict_cov(&[a], &[b]).unwrap();
            let ba = pi.predict_cov(&[b], &[a]).unwrap();
            assert!((ab - ba).abs() < 1e-12);
            let v_pi = pi.predict_cov(&[a], &[a]).unwrap();
            let v_nug = nug.predict_cov(&[a], &[a]).unwrap();
            assert!(
                v_nug >= v_pi - 1e-10,
                "nugget variance {v_nug} below pseudoinverse variance {v_pi} at {a}"
            );
        }
    }

    #[test]
    fn exact_policy_interpolates_well_conditioned_data() {
        let design = Design::from_1d(&[0.0, 0.4, 0.9, 1.3, 2.0]).unwrap();
        let y = [1.0, -0.5, 2.0, 0.3, 1.1];
        let m = KrigingModel::fit(
            design,
            &y,
            KernelSpec::squared_exponential(1.0, vec![0.15]).unwrap(),
            RegularizationPolicy::Exact,
        )
        .unwrap();
        for (i, p) in m.design().rows().iter().enumerate() {
            assert_relative_eq!(m.predict_mean(p).unwrap(), y[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn exact_policy_refuses_singular_covariance() {
        let err = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::Exact,
        )
        .unwrap_err();
        match err {
            Error::IllConditioned {
                condition,
                limit,
                lambda_max,
                lambda_min,
            } => {
                assert!(condition > limit);
                assert_eq!(limit, EXACT_CONDITION_LIMIT);
                assert!(lambda_max > 0.0);
                assert!(lambda_min < lambda_max);
            }
            other => panic!("expected IllConditioned, got {other:?}"),
        }
    }

    #[test]
    fn zero_nugget_is_held_to_the_exact_gate() {
        // τ² = 0 on a singular design must refuse like Exact…
        assert!(matches!(
            KrigingModel::fit(
                averaging_design(),
                &averaging_outputs(),
                se1(0.3),
                RegularizationPolicy::nugget(0.0),
            ),
            Err(Error::IllConditioned { .. })
        ));
        // …and interpolate like Exact on well-conditioned data.
        let design = Design::from_1d(&[0.0, 0.5, 1.1]).unwrap();
        let y = [2.0, 0.0, -1.0];
        let m = KrigingModel::fit(
            design,
            &y,
            KernelSpec::squared_exponential(1.0, vec![0.2]).unwrap(),
            RegularizationPolicy::nugget(0.0),
        )
        .unwrap();
        for (i, p) in m.design().rows().iter().enumerate() {
            assert_relative_eq!(m.predict_mean(p).unwrap(), y[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn covariance_vectors_are_orthogonal_to_the_null_space() {
        let m = KrigingModel::fit(
            averaging_design(),
            &averaging_outputs(),
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        let w = m.decomposition().null_basis();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let x = [rng.random_range(-1.0..5.0)];
            let c = m.kernel().covariance_vector(m.design(), &x).unwrap();
            let leak = (w.transpose() * &c).amax();
            assert!(leak < 1e-8, "‖Wᵀc(x)‖∞ = {leak} at x = {}", x[0]);
        }
    }

    #[test]
    fn custom_eta_lowers_the_active_rank() {
        let design = averaging_design();
        let y = averaging_outputs();
        let default_fit = KrigingModel::fit(
            design.clone(),
            &y,
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        // A tolerance above λ₂ keeps only the leading eigenvalue.
        let lambda2 = default_fit.decomposition().eigenvalues()[1];
        let coarse = KrigingModel::fit(
            design,
            &y,
            se1(0.3),
            RegularizationPolicy::pi_with_tolerance(lambda2 * 1.001),
        )
        .unwrap();
        assert_eq!(coarse.active_terms(), 1);
        assert!(coarse.active_terms() < default_fit.active_terms());
    }

    #[test]
    fn invalid_policy_parameters_are_usage_errors() {
        let fit = |policy| {
            KrigingModel::fit(
                Design::from_1d(&[0.0, 1.0]).unwrap(),
                &[1.0, 2.0],
                se1(0.3),
                policy,
            )
        };
        assert!(matches!(
            fit(RegularizationPolicy::pi_with_tolerance(-1.0)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            fit(RegularizationPolicy::nugget(-0.1)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            fit(RegularizationPolicy::nugget(f64::NAN)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        assert!(matches!(
            KrigingModel::fit(
                Design::from_1d(&[0.0, 1.0]).unwrap(),
                &[1.0],
                se1(0.3),
                RegularizationPolicy::pi(),
            ),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = KrigingModel::fit(
            Design::from_1d(&[0.0, 1.0]).unwrap(),
            &[1.0, 2.0],
            se1(0.3),
            RegularizationPolicy::pi(),
        )
        .unwrap();
        assert!(m.predict_mean(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn model_json_round_trip_preserves_weights_and_predictions() {
        for policy in [
            RegularizationPolicy::pi(),
            RegularizationPolicy::pi_with_tolerance(1e-6),
            RegularizationPolicy::nugget(0.25),
        ] {
            let m = KrigingModel::fit(
                averaging_design(),
                &averaging_outputs(),
                se1(0.3),
                policy,
            )
            .unwrap();
            let json = serde_json::to_string(&m).unwrap();
            let back: KrigingModel = serde_json::from_str(&json).unwrap();
            assert_eq!(m.policy(), back.policy());
            assert_eq!(m.kernel(), back.kernel());
            let diff = (m.weights() - back.weights()).amax();
            assert!(diff < 1e-12, "weights drifted {diff} across round trip");
            for x in [0.9, 1.5, 2.0, 2.7] {
                assert_relative_eq!(
                    m.predict_mean(&[x]).unwrap(),
                    back.predict_mean(&[x]).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn model_json_contains_inputs_only() {
        let m = KrigingModel::fit(
            Design::from_1d(&[0.0, 1.0]).unwrap(),
            &[1.0, 2.0],
            se1(0.3),
            RegularizationPolicy::nugget(0.1),
        )
        .unwrap();
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(|s| s.as_str()).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["design", "kernel", "outputs", "policy"]);
        assert_eq!(v["policy"]["kind"], "Nugget");
        assert_eq!(v["policy"]["tau2"], 0.1);
    }
}

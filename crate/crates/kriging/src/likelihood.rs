//! Likelihood evaluation and hyperparameter tuning.
//!
//! Everything here is phrased through the eigendecomposition of the
//! covariance matrix: `ln|C + τ²I| = Σ ln(λᵢ + τ²)` and
//! `yᵀ(C+τ²I)⁻¹y = Σ (Vᵢᵀy)²/(λᵢ + τ²)`, so one decomposition supports any
//! number of nugget evaluations at O(n) each. That matters for the nugget
//! searches, which evaluate their objective hundreds of times.
//!
//! All optimizers are derivative-free and deterministic: fixed coarse-scan
//! grids, golden-section line searches, fixed multi-start lattices, and a
//! tie-break of lowest objective then lexicographically smallest parameters.
//! Reproducibility outranks last-digit optimality.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kernels::{Design, KernelSpec};
use crate::model::EXACT_CONDITION_LIMIT;
use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};

/// Smallest nugget the estimators will return; the search domain is
/// `[NUGGET_FLOOR, λ₁]`.
pub const NUGGET_FLOOR: f64 = 1e-12;

/// Inverse golden ratio, the contraction factor of golden-section search.
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// A point estimate of GP hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Length-scale per input dimension.
    pub theta: Vec<f64>,
    /// Process variance (profiled analytically where applicable).
    pub sigma2: f64,
    /// Nugget; at least [`NUGGET_FLOOR`].
    pub nugget: f64,
}

/// Result of a nugget search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuggetEstimate {
    /// The estimated nugget τ̂².
    pub tau2: f64,
    /// The minimized objective value (likelihood- or CV-based).
    pub objective: f64,
    /// Number of objective evaluations spent.
    pub evaluations: usize,
}

/// Kernel family for length-scale estimation, at correlation level
/// (unit process variance; the amplitude is profiled out analytically).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    SquaredExponential,
    Additive,
    Periodic { omega: f64 },
}

impl KernelFamily {
    fn build(&self, theta: &[f64]) -> Result<KernelSpec> {
        match self {
            KernelFamily::SquaredExponential => {
                KernelSpec::squared_exponential(1.0, theta.to_vec())
            }
            KernelFamily::Additive => {
                KernelSpec::additive(vec![1.0; theta.len()], theta.to_vec())
            }
            KernelFamily::Periodic { omega } => {
                KernelSpec::periodic(1.0, theta.to_vec(), *omega)
            }
        }
    }
}

fn output_vector(design: &Design, y: &[f64]) -> Result<DVector<f64>> {
    if y.len() != design.n_points() {
        return Err(Error::DimensionMismatch {
            expected: design.n_points(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "outputs contain non-finite values".into(),
        ));
    }
    Ok(DVector::from_column_slice(y))
}

fn check_tau2(tau2: f64) -> Result<()> {
    if !tau2.is_finite() || tau2 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tau2 must be finite and non-negative, got {tau2}"
        )));
    }
    Ok(())
}

fn require_invertible_when_unshifted(s: &SpectralDecomposition, tau2: f64) -> Result<()> {
    if tau2 == 0.0 {
        let condition = s.condition_number();
        if condition > EXACT_CONDITION_LIMIT {
            let ev = s.eigenvalues();
            return Err(Error::IllConditioned {
                condition,
                limit: EXACT_CONDITION_LIMIT,
                lambda_max: ev[0],
                lambda_min: *ev.last().unwrap(),
            });
        }
    }
    Ok(())
}

/// Log-likelihood of outputs `y` under a zero-mean GP with covariance
/// `C + τ²I`:
///
/// ```text
/// ln L = −n/2·ln 2π − ½ ln|C + τ²I| − ½ yᵀ(C + τ²I)⁻¹ y
/// ```
///
/// computed through the eigen-shift form (no explicit determinant). A
/// singular covariance with `tau2 = 0` is a conditioning error.
pub fn log_likelihood(design: &Design, y: &[f64], kernel: &KernelSpec, tau2: f64) -> Result<f64> {
    check_tau2(tau2)?;
    let yv = output_vector(design, y)?;
    let c = kernel.covariance_matrix(design)?;
    let s = SpectralDecomposition::with_default_tolerance(&c)?;
    require_invertible_when_unshifted(&s, tau2)?;

    let n = design.n_points() as f64;
    let quad = yv.dot(&s.apply_shifted_inverse(tau2, &yv));
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * s.log_det_shifted(tau2) - 0.5 * quad)
}

/// Concentrated (profiled) −2 ln-likelihood at correlation level.
///
/// `correlation` is the kernel at unit process variance (its amplitude is
/// the profiled parameter) and `tau2_ratio` is the nugget-to-variance ratio,
/// so the working matrix is `K̃ = correlation matrix + tau2_ratio·I`.
/// Returns the pair
///
/// ```text
/// ( n·ln 2π + n·ln σ̂² + ln|K̃| + n ,  σ̂² = yᵀK̃⁻¹y / n )
/// ```
pub fn concentrated_neg2ll(
    design: &Design,
    y: &[f64],
    correlation: &KernelSpec,
    tau2_ratio: f64,
) -> Result<(f64, f64)> {
    check_tau2(tau2_ratio)?;
    let yv = output_vector(design, y)?;
    let c = kernel_matrix_decomposition(design, correlation)?;
    require_invertible_when_unshifted(&c, tau2_ratio)?;

    let n = design.n_points() as f64;
    let sigma2_hat = yv.dot(&c.apply_shifted_inverse(tau2_ratio, &yv)) / n;
    if sigma2_hat <= 0.0 {
        return Err(Error::Numeric(
            "profiled variance is zero: outputs are identically zero".into(),
        ));
    }
    let value =
        n * (2.0 * std::f64::consts::PI).ln() + n * sigma2_hat.ln() + c.log_det_shifted(tau2_ratio) + n;
    Ok((value, sigma2_hat))
}

fn kernel_matrix_decomposition(
    design: &Design,
    kernel: &KernelSpec,
) -> Result<SpectralDecomposition> {
    let c = kernel.covariance_matrix(design)?;
    SpectralDecomposition::with_default_tolerance(&c)
}

/// Golden-section minimization of `f` over `[a, b]`, to an absolute interval
/// tolerance `tol` with a hard iteration cap. Returns (argmin, min value).
fn golden_section(f: &mut dyn FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut h = b - a;
    if h <= tol {
        let m = 0.5 * (a + b);
        return (m, f(m));
    }
    let mut c = b - INVPHI * h;
    let mut d = a + INVPHI * h;
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if h <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            h = b - a;
            c = b - INVPHI * h;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            h = b - a;
            d = a + INVPHI * h;
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Deterministic scalar search used by both nugget estimators: a 64-point
/// coarse scan over log τ² brackets the best cell, golden-section refines it
/// to 1e-6 relative, and the domain endpoints compete with the refined
/// interior point so boundary minima are returned exactly.
fn minimize_over_log_tau2(
    objective: &mut dyn FnMut(f64) -> f64,
    tau2_max: f64,
) -> (f64, f64, usize) {
    let mut evaluations = 0usize;
    let lo = NUGGET_FLOOR.ln();
    let hi = tau2_max.max(NUGGET_FLOOR * 10.0).ln();
    let mut eval_log = |t: f64| {
        evaluations += 1;
        objective(t.exp())
    };

    const SCAN: usize = 64;
    let mut best_idx = 0usize;
    let mut best_val = f64::INFINITY;
    let step = (hi - lo) / (SCAN - 1) as f64;
    for i in 0..SCAN {
        let v = eval_log(lo + step * i as f64);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let a = lo + step * best_idx.saturating_sub(1) as f64;
    let b = lo + step * (best_idx + 1).min(SCAN - 1) as f64;
    let (t_star, f_star) = golden_section(&mut eval_log, a, b, 1e-6);

    // Let the exact endpoints compete (floor/ceiling minima are common);
    // ties go to the endpoint so boundary optima are reported exactly.
    let mut best = (t_star.exp(), f_star);
    for tau2 in [NUGGET_FLOOR, tau2_max.max(NUGGET_FLOOR * 10.0)] {
        evaluations += 1;
        let v = objective(tau2);
        if v <= best.1 {
            best = (tau2, v);
        }
    }
    (best.0, best.1, evaluations)
}

/// Maximum-likelihood nugget at fixed kernel hyperparameters.
///
/// Minimizes `g(τ²) = ln|C+τ²I| + yᵀ(C+τ²I)⁻¹y` (−2 ln L up to its constant)
/// over `τ² ∈ [NUGGET_FLOOR, λ₁]` with the deterministic scan + golden-section
/// scheme. Inflating the spread of outputs around their per-site means never
/// decreases this estimate.
pub fn estimate_nugget_ml(design: &Design, y: &[f64], kernel: &KernelSpec) -> Result<NuggetEstimate> {
    let yv = output_vector(design, y)?;
    let s = kernel_matrix_decomposition(design, kernel)?;
    let u = s.vectors().transpose() * &yv;
    let lambda = s.eigenvalues().to_vec();

    let mut g = |tau2: f64| -> f64 {
        lambda
            .iter()
            .zip(u.iter())
            .map(|(&l, &ui)| (l + tau2).ln() + ui * ui / (l + tau2))
            .sum()
    };
    let (tau2, objective, evaluations) = minimize_over_log_tau2(&mut g, lambda[0]);
    Ok(NuggetEstimate {
        tau2,
        objective,
        evaluations,
    })
}

struct LooFold {
    lambda: Vec<f64>,
    /// Eigenvector projections of the held-out covariance vector.
    vc: Vec<f64>,
    /// Eigenvector projections of the retained outputs.
    vy: Vec<f64>,
    rank: usize,
    y_out: f64,
}

fn loo_folds(design: &Design, yv: &DVector<f64>, kernel: &KernelSpec) -> Result<Vec<LooFold>> {
    let n = design.n_points();
    let mut folds = Vec::with_capacity(n);
    for i in 0..n {
        let sub = design.without_point(i)?;
        let mut y_sub = DVector::zeros(n - 1);
        let mut row = 0;
        for j in 0..n {
            if j != i {
                y_sub[row] = yv[j];
                row += 1;
            }
        }
        let c = kernel.covariance_matrix(&sub)?;
        let s = SpectralDecomposition::with_default_tolerance(&c)?;
        let cv = kernel.covariance_vector(&sub, design.point(i))?;
        let vc = s.vectors().transpose() * &cv;
        let vy = s.vectors().transpose() * &y_sub;
        folds.push(LooFold {
            lambda: s.eigenvalues().to_vec(),
            vc: vc.iter().copied().collect(),
            vy: vy.iter().copied().collect(),
            rank: s.rank(),
            y_out: yv[i],
        });
    }
    Ok(folds)
}

fn loo_error_from_folds(folds: &[LooFold], tau2: f64) -> f64 {
    let mut acc = 0.0;
    for fold in folds {
        let mut m = 0.0;
        for j in 0..fold.rank {
            m += fold.vc[j] * fold.vy[j] / (fold.lambda[j] + tau2);
        }
        let r = m - fold.y_out;
        acc += r * r;
    }
    acc / folds.len() as f64
}

/// Mean squared leave-one-out prediction error at a fixed nugget: each fold
/// refits on the other n−1 points with the same kernel and predicts the
/// held-out output through the nugget spectral form.
pub fn loo_squared_error(design: &Design, y: &[f64], kernel: &KernelSpec, tau2: f64) -> Result<f64> {
    check_tau2(tau2)?;
    let yv = output_vector(design, y)?;
    if design.n_points() < 2 {
        return Err(Error::InvalidParameter(
            "leave-one-out error needs at least two points".into(),
        ));
    }
    let folds = loo_folds(design, &yv, kernel)?;
    Ok(loo_error_from_folds(&folds, tau2))
}

/// Cross-validation nugget at fixed kernel hyperparameters: minimizes the
/// mean squared leave-one-out error over the same τ² domain and with the
/// same deterministic search as [`estimate_nugget_ml`]. Per-fold
/// eigendecompositions are computed once and reused across all τ² probes.
pub fn estimate_nugget_cv(design: &Design, y: &[f64], kernel: &KernelSpec) -> Result<NuggetEstimate> {
    if design.n_points() < 3 {
        return Err(Error::InvalidParameter(
            "cross-validation needs at least three points".into(),
        ));
    }
    let yv = output_vector(design, y)?;
    let s = kernel_matrix_decomposition(design, kernel)?;
    let folds = loo_folds(design, &yv, kernel)?;
    let mut objective = |tau2: f64| loo_error_from_folds(&folds, tau2);
    let (tau2, value, evaluations) = minimize_over_log_tau2(&mut objective, s.eigenvalues()[0]);
    Ok(NuggetEstimate {
        tau2,
        objective: value,
        evaluations,
    })
}

/// Length-scale estimation by minimizing the concentrated −2 ln-likelihood.
///
/// Runs a deterministic multi-start coordinate descent: a 3-per-dimension
/// geometric lattice of starts inside `bounds`, golden-section line searches
/// on each log θ coordinate, a fixed sweep budget, and the tie-break of
/// lowest objective then lexicographically smallest θ. The result is the
/// best local optimum found, not a certified global one.
///
/// The profiled objective is evaluated at a nugget-to-variance ratio pinned
/// to [`NUGGET_FLOOR`], keeping it defined even where the correlation matrix
/// is numerically singular (exact singularity there would otherwise wall off
/// parts of the search region); a θ whose objective still fails to evaluate
/// counts as infinitely bad, and if every evaluation fails a numeric error
/// is returned. The returned `nugget` repeats the floor — tune the nugget
/// separately with the nugget estimators.
pub fn estimate_lengthscales(
    design: &Design,
    y: &[f64],
    family: KernelFamily,
    bounds: (f64, f64),
) -> Result<HyperParams> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "length-scale bounds must satisfy 0 < lo < hi and be finite, got ({lo}, {hi})"
        )));
    }
    let yv = output_vector(design, y)?;
    let _ = &yv;
    let d = design.dim();

    let objective = |theta: &[f64]| -> f64 {
        match family
            .build(theta)
            .and_then(|k| concentrated_neg2ll(design, y, &k, NUGGET_FLOOR))
        {
            Ok((value, _)) => value,
            Err(_) => f64::INFINITY,
        }
    };

    // 3-per-dimension geometric start lattice strictly inside the bounds.
    let ratio = hi / lo;
    let marks: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|p| lo * ratio.powf(*p)).collect();
    let n_starts = 3usize.pow(d as u32);
    let log_lo = lo.ln();
    let log_hi = hi.ln();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start_idx in 0..n_starts {
        let mut theta: Vec<f64> = (0..d)
            .map(|dim| marks[(start_idx / 3usize.pow(dim as u32)) % 3])
            .collect();
        let mut value = objective(&theta);

        for _sweep in 0..15 {
            let before = value;
            for dim in 0..d {
                let mut line = |t: f64| {
                    let mut probe = theta.clone();
                    probe[dim] = t.exp();
                    objective(&probe)
                };
                let (t_best, f_best) = golden_section(&mut line, log_lo, log_hi, 1e-6);
                if f_best < value {
                    theta[dim] = t_best.exp().clamp(lo, hi);
                    value = f_best;
                }
            }
            if !value.is_finite() || before - value < 1e-9 * (1.0 + value.abs()) {
                break;
            }
        }

        let better = match &best {
            None => value.is_finite(),
            Some((bv, bt)) => {
                value.is_finite()
                    && (value < *bv || (value == *bv && theta.as_slice() < bt.as_slice()))
            }
        };
        if better {
            best = Some((value, theta));
        }
    }

    let (_, theta) = best.ok_or_else(|| {
        Error::Numeric(
            "length-scale search failed: no evaluable point (correlation matrix singular \
             throughout the bounds)"
                .into(),
        )
    })?;
    let kernel = family.build(&theta)?;
    let (_, sigma2) = concentrated_neg2ll(design, y, &kernel, NUGGET_FLOOR)?;
    Ok(HyperParams {
        theta,
        sigma2,
        nugget: NUGGET_FLOOR,
    })
}

/// The smallest nugget bringing the condition number of `C + τ²I` down to
/// `kappa_max`:
///
/// ```text
/// τ² = (λ_max − κ_max·λ_min)/(κ_max − 1)   if λ_max − κ_max·λ_min ≥ 0,
/// τ² = 0                                    otherwise.
/// ```
pub fn smallest_nugget_for_condition(
    lambda_max: f64,
    lambda_min: f64,
    kappa_max: f64,
) -> Result<f64> {
    if !kappa_max.is_finite() || kappa_max <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa_max must be finite and greater than 1, got {kappa_max}"
        )));
    }
    if !(lambda_max.is_finite() && lambda_min.is_finite() && lambda_max >= lambda_min)
        || lambda_min < 0.0
    {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue bounds must satisfy lambda_max >= lambda_min >= 0, \
             got ({lambda_max}, {lambda_min})"
        )));
    }
    let numerator = lambda_max - kappa_max * lambda_min;
    if numerator >= 0.0 {
        Ok(numerator / (kappa_max - 1.0))
    } else {
        Ok(0.0)
    }
}

/// The pseudoinverse rank tolerance achieving a target condition bound:
/// `η = λ₁/κ_max`, so that `λ₁/λᵣ ≤ λ₁/η = κ_max`.
pub fn pi_tolerance_for_condition(lambda_1: f64, kappa_max: f64) -> Result<f64> {
    if !lambda_1.is_finite() || lambda_1 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_1 must be positive and finite, got {lambda_1}"
        )));
    }
    if !kappa_max.is_finite() || kappa_max <= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa_max must be finite and greater than 1, got {kappa_max}"
        )));
    }
    Ok(lambda_1 / kappa_max)
}

//! Redundancy diagnostics: which design points share null-space directions,
//! how they cluster, and how much of the observed output the model cannot
//! represent.
//!
//! A null vector `w` of the covariance matrix ties the points in its support
//! together: `Σ wᵢ k(xᵢ, ·) ≡ 0`, so those observations constrain each other
//! exactly. The diagnostics here read that structure off the spectral
//! projectors — no thresholding of the design coordinates themselves is
//! involved, so "redundant" always means redundant *for the chosen kernel*.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kernels::{Design, KernelSpec};
use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};

/// Default threshold on projector off-diagonals for declaring two points
/// null-space coupled.
pub const DEFAULT_PAIR_TOLERANCE: f64 = 1e-6;

/// A maximal set of mutually coupled points (0-based indices, ascending)
/// together with the dimension of the null space of the covariance matrix
/// restricted to the set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedundancyGroup {
    pub indices: Vec<usize>,
    pub degree: usize,
}

/// The part of the outputs no function in the kernel's span can reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    /// Projection of the outputs onto the null space, `W Wᵀ y`.
    pub residual: Vec<f64>,
    /// `‖residual‖² / ‖y‖²`.
    pub discr_sq_ratio: f64,
    /// Square root of `discr_sq_ratio`.
    pub discr_rms_ratio: f64,
}

fn check_pair_tolerance(pair_tol: f64) -> Result<()> {
    if !pair_tol.is_finite() || pair_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "pair tolerance must be finite and positive, got {pair_tol}"
        )));
    }
    Ok(())
}

/// Pairs of design points coupled through the null space: `(i, j)` with
/// `i < j` is reported exactly when the image projector `VVᵀ` (equivalently
/// the null projector, whose off-diagonals differ only in sign) has
/// `|entry| > pair_tol` at `(i, j)`. Pairs are 0-based and sorted
/// lexicographically. A full-rank covariance yields no pairs.
pub fn redundant_pairs(
    decomposition: &SpectralDecomposition,
    pair_tol: f64,
) -> Result<Vec<(usize, usize)>> {
    check_pair_tolerance(pair_tol)?;
    let n = decomposition.n();
    if decomposition.rank() == n {
        return Ok(Vec::new());
    }
    let coupling = decomposition.null_projector();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if coupling[(i, j)].abs() > pair_tol {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

/// Connected components of the pair graph from [`redundant_pairs`], each with
/// its redundancy degree: the number of zero eigenvalues (relative to the
/// same rank tolerance) of the covariance matrix restricted to the group.
/// Points in no pair form no group; groups and their indices are ascending.
pub fn redundancy_groups(
    decomposition: &SpectralDecomposition,
    pair_tol: f64,
) -> Result<Vec<RedundancyGroup>> {
    let pairs = redundant_pairs(decomposition, pair_tol)?;
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let n = decomposition.n();

    // Union-find over the pair graph.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for &(i, j) in &pairs {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        members[root].push(i);
    }

    let c = decomposition.reconstruct();
    let mut groups = Vec::new();
    for indices in members.into_iter().filter(|m| m.len() > 1) {
        let sub = c.select_rows(indices.iter()).select_columns(indices.iter());
        let sub_decomp = SpectralDecomposition::new(&sub, decomposition.tolerance())?;
        groups.push(RedundancyGroup {
            degree: indices.len() - sub_decomp.rank(),
            indices,
        });
    }
    Ok(groups)
}

/// Splits the outputs into representable and unrepresentable parts for the
/// given kernel on the given design: the residual is the null-space
/// projection of `y`, and the ratios compare its size to `‖y‖`. Passing
/// `eta = None` uses the default rank tolerance. All-zero outputs are
/// rejected (the ratios would be 0/0).
pub fn discrepancy(
    design: &Design,
    y: &[f64],
    kernel: &KernelSpec,
    eta: Option<f64>,
) -> Result<Discrepancy> {
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
    let yv = DVector::from_column_slice(y);
    let norm_sq = yv.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::InvalidParameter(
            "discrepancy is undefined for all-zero outputs".into(),
        ));
    }
    let c = kernel.covariance_matrix(design)?;
    let s = match eta {
        Some(e) => SpectralDecomposition::new(&c, e)?,
        None => SpectralDecomposition::with_default_tolerance(&c)?,
    };
    let residual = s.project_null(&yv);
    let discr_sq_ratio = residual.norm_squared() / norm_sq;
    Ok(Discrepancy {
        residual: residual.iter().copied().collect(),
        discr_sq_ratio,
        discr_rms_ratio: discr_sq_ratio.sqrt(),
    })
}

/// Group entry of a [`RedundancyReport`], with 1-based point indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportGroup {
    pub indices: Vec<usize>,
    pub degree: usize,
}

/// Combined, serialization-friendly redundancy summary. Point indices are
/// 1-based here (and only here): the report is for people and files, while
/// the library API above stays 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub pairs: Vec<[usize; 2]>,
    pub groups: Vec<ReportGroup>,
    pub discr_sq_ratio: f64,
    pub discr_rms_ratio: f64,
    pub residual: Vec<f64>,
}

impl RedundancyReport {
    /// Runs the pair, group, and discrepancy diagnostics in one pass.
    pub fn build(
        design: &Design,
        y: &[f64],
        kernel: &KernelSpec,
        eta: Option<f64>,
        pair_tol: f64,
    ) -> Result<RedundancyReport> {
        let c = kernel.covariance_matrix(design)?;
        let s = match eta {
            Some(e) => SpectralDecomposition::new(&c, e)?,
            None => SpectralDecomposition::with_default_tolerance(&c)?,
        };
        let pairs = redundant_pairs(&s, pair_tol)?
            .into_iter()
            .map(|(i, j)| [i + 1, j + 1])
            .collect();
        let groups = redundancy_groups(&s, pair_tol)?
            .into_iter()
            .map(|g| ReportGroup {
                indices: g.indices.iter().map(|i| i + 1).collect(),
                degree: g.degree,
            })
            .collect();
        let d = discrepancy(design, y, kernel, eta)?;
        Ok(RedundancyReport {
            pairs,
            groups,
            discr_sq_ratio: d.discr_sq_ratio,
            discr_rms_ratio: d.discr_rms_ratio,
            residual: d.residual,
        })
    }
}

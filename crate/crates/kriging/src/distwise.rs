//! Distribution-wise prediction from site summaries.
//!
//! Instead of feeding every replicated observation into one covariance
//! matrix (which is singular by construction under repetition), the data are
//! reduced to per-site summaries — count, mean, spread — and the GP runs on
//! the distinct sites only. The covariance matrix is k×k for k sites
//! regardless of how many raw observations stand behind them, and the
//! per-site spread re-enters the predictive variance through a diagonal
//! matrix, so the variance interpolates the observed scatter at each site.

use std::io::{Read, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::kernels::{Design, KernelSpec};
use crate::model::EXACT_CONDITION_LIMIT;
use crate::spectral::SpectralDecomposition;
use crate::{Error, Result};

/// Divisor used for the per-site spread: `Population` divides the squared
/// deviations by the count N, `Sample` by N−1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum VarianceConvention {
    #[default]
    Population,
    Sample,
}

/// One distinct site with its replication summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSummary {
    pub location: Vec<f64>,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Reduces raw observations to site summaries by single-linkage clustering:
/// two points join the same site when some chain of points links them with
/// steps of Euclidean length at most `tol`. Each site reports the centroid
/// of its members, their count, mean output, and output variance under the
/// chosen convention (a single observation has variance 0 under both).
/// Sites are sorted lexicographically by location.
pub fn group_repeated_points(
    design: &Design,
    y: &[f64],
    tol: f64,
    convention: VarianceConvention,
) -> Result<Vec<SiteSummary>> {
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
    if !tol.is_finite() || tol < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "grouping tolerance must be finite and non-negative, got {tol}"
        )));
    }

    let n = design.n_points();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = design
                .point(i)
                .iter()
                .zip(design.point(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let root = find(&mut parent, i);
        members[root].push(i);
    }

    let d = design.dim();
    let mut sites = Vec::new();
    for group in members.into_iter().filter(|m| !m.is_empty()) {
        let count = group.len();
        let mut location = vec![0.0; d];
        for &i in &group {
            for (acc, v) in location.iter_mut().zip(design.point(i)) {
                *acc += v;
            }
        }
        for v in &mut location {
            *v /= count as f64;
        }
        let mean = group.iter().map(|&i| y[i]).sum::<f64>() / count as f64;
        let ss: f64 = group.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
        let variance = match convention {
            VarianceConvention::Population => ss / count as f64,
            VarianceConvention::Sample => {
                if count > 1 {
                    ss / (count - 1) as f64
                } else {
                    0.0
                }
            }
        };
        sites.push(SiteSummary {
            location,
            count,
            mean,
            variance,
        });
    }
    sites.sort_by(|a, b| {
        a.location
            .iter()
            .zip(&b.location)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(sites)
}

/// GP regression on site summaries: the mean interpolates the site means and
/// the variance interpolates the site spreads.
///
/// With `C_Z` the covariance among the k distinct sites, `c_Z(x)` the
/// covariances to a prediction point, `ȳ` the site means and
/// `Γ = diag(s₁², …, s_k²)` the site spreads:
///
/// ```text
/// m(x) = c_Z(x)ᵀ C_Z⁻¹ ȳ
/// v(x) = K(x,x) − c_Z(x)ᵀ C_Z⁻¹ c_Z(x) + qᵀ Γ q,   q = C_Z⁻¹ c_Z(x)
/// ```
///
/// Replication counts never enter these formulas: more observations at a
/// site sharpen the summary, not the predictive spread, which stays pinned
/// to the observed scatter.
#[derive(Debug, Clone)]
pub struct DistWiseModel {
    sites: Vec<SiteSummary>,
    kernel: KernelSpec,
    decomposition: SpectralDecomposition,
    beta: DVector<f64>,
}

impl DistWiseModel {
    /// Fits on distinct sites. Errors if any two site locations coincide, if
    /// summaries are malformed, or if the site covariance matrix has
    /// condition number above the invertibility limit.
    pub fn fit(sites: Vec<SiteSummary>, kernel: KernelSpec) -> Result<DistWiseModel> {
        if sites.is_empty() {
            return Err(Error::InvalidParameter("no sites to fit".into()));
        }
        let dim = sites[0].location.len();
        for (i, site) in sites.iter().enumerate() {
            if site.location.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: site.location.len(),
                });
            }
            if site.location.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "site {i} has a non-finite location"
                )));
            }
            if site.count == 0 {
                return Err(Error::InvalidParameter(format!("site {i} has count 0")));
            }
            if !site.mean.is_finite() || !site.variance.is_finite() || site.variance < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "site {i} has an invalid mean or variance"
                )));
            }
        }
        for i in 0..sites.len() {
            for j in (i + 1)..sites.len() {
                if sites[i].location == sites[j].location {
                    return Err(Error::InvalidParameter(format!(
                        "sites {i} and {j} share a location; summaries must be distinct"
                    )));
                }
            }
        }

        let design = Design::new(sites.iter().map(|s| s.location.clone()).collect())?;
        let c = kernel.covariance_matrix(&design)?;
        let decomposition = SpectralDecomposition::with_default_tolerance(&c)?;
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
        let means = DVector::from_iterator(sites.len(), sites.iter().map(|s| s.mean));
        let beta = decomposition.apply_shifted_inverse(0.0, &means);
        Ok(DistWiseModel {
            sites,
            kernel,
            decomposition,
            beta,
        })
    }

    pub fn sites(&self) -> &[SiteSummary] {
        &self.sites
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    fn site_design(&self) -> Design {
        Design::new(self.sites.iter().map(|s| s.location.clone()).collect())
            .expect("validated at fit time")
    }

    fn covariances_to(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.kernel.covariance_vector(&self.site_design(), x)
    }

    /// Predictive mean `c_Z(x)ᵀ C_Z⁻¹ ȳ`.
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        Ok(self.covariances_to(x)?.dot(&self.beta))
    }

    /// Predictive variance with the site-spread term, clamped at zero.
    pub fn predict_var(&self, x: &[f64]) -> Result<f64> {
        let c = self.covariances_to(x)?;
        let q = self.decomposition.apply_shifted_inverse(0.0, &c);
        let prior = self.kernel.eval(x, x)?;
        let mut v = prior - c.dot(&q);
        for (qi, site) in q.iter().zip(&self.sites) {
            v += qi * qi * site.variance;
        }
        Ok(v.max(0.0))
    }
}

/// Reads site summaries from CSV with header `x1,…,xd,count,mean,variance`.
pub fn read_sites_csv<R: Read>(reader: R) -> Result<Vec<SiteSummary>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse(format!("sites CSV header: {e}")))?
        .clone();
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 4 {
        return Err(Error::Parse(format!(
            "sites CSV header needs x1,…,xd,count,mean,variance; got {} columns",
            fields.len()
        )));
    }
    let d = fields.len() - 3;
    for (i, name) in fields.iter().take(d).enumerate() {
        let expected = format!("x{}", i + 1);
        if *name != expected {
            return Err(Error::Parse(format!(
                "sites CSV header column {} must be '{expected}', got '{name}'",
                i + 1
            )));
        }
    }
    if fields[d] != "count" || fields[d + 1] != "mean" || fields[d + 2] != "variance" {
        return Err(Error::Parse(
            "sites CSV header must end with count,mean,variance".into(),
        ));
    }

    let mut sites = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2; // 1-based, after the header line
        let record = record.map_err(|e| Error::Parse(format!("sites CSV line {line}: {e}")))?;
        if record.len() != fields.len() {
            return Err(Error::Parse(format!(
                "sites CSV line {line}: expected {} fields, got {}",
                fields.len(),
                record.len()
            )));
        }
        let num = |field: &str, what: &str| -> Result<f64> {
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("sites CSV line {line}: bad {what} '{field}'")))
        };
        let mut location = Vec::with_capacity(d);
        for i in 0..d {
            location.push(num(&record[i], "coordinate")?);
        }
        let count = record[d]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("sites CSV line {line}: bad count '{}'", &record[d])))?;
        let mean = num(&record[d + 1], "mean")?;
        let variance = num(&record[d + 2], "variance")?;
        sites.push(SiteSummary {
            location,
            count,
            mean,
            variance,
        });
    }
    Ok(sites)
}

/// Writes site summaries as CSV with header `x1,…,xd,count,mean,variance`.
pub fn write_sites_csv<W: Write>(writer: W, sites: &[SiteSummary]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter("no sites to write".into()));
    }
    let d = sites[0].location.len();
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend(["count".into(), "mean".into(), "variance".into()]);
    wtr.write_record(&header)
        .map_err(|e| Error::Parse(format!("sites CSV write: {e}")))?;
    for site in sites {
        let mut row: Vec<String> = site.location.iter().map(|v| v.to_string()).collect();
        row.push(site.count.to_string());
        row.push(site.mean.to_string());
        row.push(site.variance.to_string());
        wtr.write_record(&row)
            .map_err(|e| Error::Parse(format!("sites CSV write: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::Parse(format!("sites CSV write: {e}")))?;
    Ok(())
}

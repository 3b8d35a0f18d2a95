//! Degree of closeness of observations to clusters and the degree-of-membership
//! matrix between cluster memberships and clusters.
//!
//! For a partition into `k` clusters, `mean_d2[i][c]` is the mean squared
//! distance of observation `i` to every member of cluster `c` (the zero
//! self-distance is included when `i` belongs to `c`). Summing those means over
//! the members of cluster `m` gives `gamma[m][c]`; the row-normalized
//! reciprocals of `gamma` form the degree-of-membership matrix, and its
//! diagonal weighted by the membership marginal gives the overall homogeneity
//! `delta_T`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::linkage::ClusterAssignment;

/// Homogeneity assigned to the single-cluster fit. The membership matrix is
/// not computed at `k = 1`; with no other cluster to share membership with,
/// the degree of membership is 1 by definition.
pub const DELTA_T_SINGLE_CLUSTER: f64 = 1.0;

/// Cross-membership cutoff used when thresholding is requested without an
/// explicit value.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Per-observation closeness to every cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosenessMatrix {
    /// `n x k`, rows sum to 1.
    pub delta_ik: Array2<f64>,
    /// `n x k` mean squared distance of each observation to each cluster.
    pub mean_d2: Array2<f64>,
}

/// Degree of membership of each membership `m` (rows) in each cluster `k`
/// (columns), with its marginals and overall homogeneity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    pub k: usize,
    /// `gamma[m][k]`: summed mean squared distances from members of `m` to `k`.
    pub gamma: Vec<Vec<f64>>,
    /// Row-stochastic degree-of-membership matrix.
    pub delta_mk: Vec<Vec<f64>>,
    /// Cluster-validity marginal (column mass of `1/gamma`).
    pub delta_dot_k: Vec<f64>,
    /// Membership-validity marginal (row mass of `1/gamma`).
    pub delta_m_dot: Vec<f64>,
    pub delta_t: f64,
    pub thresholded: bool,
    pub threshold: f64,
}

/// Mean squared distance of every observation to every cluster, and the
/// normalized reciprocal closeness.
///
/// An observation with zero mean distance to some clusters (a singleton's own
/// cluster, or a cluster made only of copies of it) is split evenly between
/// those clusters, the limit of the reciprocal weighting.
pub fn degree_of_closeness(dm: &DistanceMatrix, assign: &ClusterAssignment) -> Result<ClosenessMatrix> {
    let n = dm.n();
    let k = assign.k();
    if assign.n() != n {
        return Err(Error::invalid(format!(
            "assignment covers {} observations but the distance matrix has {n}",
            assign.n()
        )));
    }
    if k < 2 {
        return Err(Error::UnsupportedK { k });
    }
    let sizes = assign.sizes();
    let mut mean_d2 = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        let mut row = mean_d2.row_mut(i);
        for j in 0..n {
            row[assign.cluster_of(j)] += dm.get(i, j);
        }
        for (c, v) in row.iter_mut().enumerate() {
            *v /= sizes[c] as f64;
        }
    }

    let mut delta_ik = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        let means = mean_d2.row(i);
        let zeros = means.iter().filter(|&&v| v == 0.0).count();
        let mut out = delta_ik.row_mut(i);
        if zeros > 0 {
            for (c, &v) in means.iter().enumerate() {
                out[c] = if v == 0.0 { 1.0 / zeros as f64 } else { 0.0 };
            }
        } else {
            let total: f64 = means.iter().map(|v| v.recip()).sum();
            for (c, &v) in means.iter().enumerate() {
                out[c] = v.recip() / total;
            }
        }
    }
    Ok(ClosenessMatrix { delta_ik, mean_d2 })
}

/// Builds `gamma`, the degree-of-membership matrix, its marginals and
/// `delta_T`.
///
/// A singleton cluster's own entry `gamma[m][m]` is zero and is set to 1.
/// Any other zero entry (a zero-diameter cluster of duplicates) is an error.
pub fn membership_matrix(closeness: &ClosenessMatrix, assign: &ClusterAssignment) -> Result<MembershipMatrix> {
    let k = assign.k();
    if k < 2 {
        return Err(Error::UnsupportedK { k });
    }
    let (n, cols) = closeness.mean_d2.dim();
    if cols != k || n != assign.n() {
        return Err(Error::invalid(format!(
            "closeness matrix is {n}x{cols}, expected {}x{k}",
            assign.n()
        )));
    }
    let sizes = assign.sizes();
    let mut gamma = vec![vec![0.0; k]; k];
    for i in 0..n {
        let m = assign.cluster_of(i);
        for (c, g) in gamma[m].iter_mut().enumerate() {
            *g += closeness.mean_d2[[i, c]];
        }
    }
    for m in 0..k {
        if sizes[m] == 1 && gamma[m][m] == 0.0 {
            gamma[m][m] = 1.0;
        }
        if let Some(c) = gamma[m].iter().position(|&g| g == 0.0) {
            return Err(Error::DegenerateCluster { m: m + 1, k: c + 1 });
        }
    }
    Ok(from_gamma(gamma))
}

/// Convenience: closeness followed by the membership matrix.
pub fn membership_for(dm: &DistanceMatrix, assign: &ClusterAssignment) -> Result<MembershipMatrix> {
    let closeness = degree_of_closeness(dm, assign)?;
    membership_matrix(&closeness, assign)
}

fn from_gamma(gamma: Vec<Vec<f64>>) -> MembershipMatrix {
    let k = gamma.len();
    let recip: Vec<Vec<f64>> = gamma
        .iter()
        .map(|row| row.iter().map(|g| g.recip()).collect())
        .collect();
    let row_mass: Vec<f64> = recip.iter().map(|r| r.iter().sum()).collect();
    let total: f64 = row_mass.iter().sum();
    let col_mass: Vec<f64> = (0..k).map(|c| recip.iter().map(|r| r[c]).sum()).collect();

    let delta_mk: Vec<Vec<f64>> = recip
        .iter()
        .zip(&row_mass)
        .map(|(r, s)| r.iter().map(|v| v / s).collect())
        .collect();
    let delta_m_dot: Vec<f64> = row_mass.iter().map(|s| s / total).collect();
    let delta_dot_k: Vec<f64> = col_mass.iter().map(|s| s / total).collect();
    let delta_t = homogeneity(&delta_mk, &delta_m_dot);
    MembershipMatrix {
        k,
        gamma,
        delta_mk,
        delta_dot_k,
        delta_m_dot,
        delta_t,
        thresholded: false,
        threshold: 0.0,
    }
}

fn homogeneity(delta_mk: &[Vec<f64>], weights: &[f64]) -> f64 {
    let t: f64 = delta_mk.iter().enumerate().map(|(m, row)| row[m] * weights[m]).sum();
    t.min(1.0)
}

/// Zeroes cross-memberships strictly below `threshold` and renormalizes each
/// row to sum to 1. Diagonal entries are never zeroed. `delta_T` is
/// recomputed from the new diagonal with the original `delta_m_dot`; `gamma`
/// and both marginals are left untouched.
pub fn apply_threshold(mm: &MembershipMatrix, threshold: f64) -> Result<MembershipMatrix> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold must lie in [0, 1), got {threshold}")));
    }
    if mm.thresholded {
        return Err(Error::invalid("membership matrix is already thresholded"));
    }
    let delta_mk: Vec<Vec<f64>> = mm
        .delta_mk
        .iter()
        .enumerate()
        .map(|(m, row)| {
            if row.iter().enumerate().all(|(c, &v)| c == m || v >= threshold) {
                return row.clone();
            }
            let kept: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(c, &v)| if c != m && v < threshold { 0.0 } else { v })
                .collect();
            let s: f64 = kept.iter().sum();
            kept.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let delta_t = homogeneity(&delta_mk, &mm.delta_m_dot);
    Ok(MembershipMatrix {
        delta_mk,
        delta_t,
        thresholded: true,
        threshold,
        ..mm.clone()
    })
}

impl MembershipMatrix {
    /// Builds a matrix directly from row-stochastic `delta_mk` values, with
    /// uniform membership weights. Used for externally supplied tables.
    pub fn from_delta(delta_mk: Vec<Vec<f64>>) -> Result<Self> {
        let k = delta_mk.len();
        if k < 2 || delta_mk.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("delta matrix must be square with k >= 2"));
        }
        for (m, row) in delta_mk.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid(format!("row {} has a negative or non-finite entry", m + 1)));
            }
            if row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid(format!("row {} has no mass", m + 1)));
            }
        }
        let weights = vec![1.0 / k as f64; k];
        let delta_t = homogeneity(&delta_mk, &weights);
        Ok(MembershipMatrix {
            k,
            gamma: Vec::new(),
            delta_mk,
            delta_dot_k: weights.clone(),
            delta_m_dot: weights,
            delta_t,
            thresholded: false,
            threshold: 0.0,
        })
    }

    /// Table-style rendering to three decimals: rows are memberships,
    /// columns clusters.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("membership");
        for c in 1..=self.k {
            out.push_str(&format!("\t{c}"));
        }
        out.push('\n');
        for (m, row) in self.delta_mk.iter().enumerate() {
            out.push_str(&format!("{}", m + 1));
            for v in row {
                out.push_str(&format!("\t{v:.3}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("delta_T\t{:.3}\n", self.delta_t));
        out.push_str("delta_m.");
        for v in &self.delta_m_dot {
            out.push_str(&format!("\t{v:.3}"));
        }
        out.push('\n');
        out.push_str("delta_.k");
        for v in &self.delta_dot_k {
            out.push_str(&format!("\t{v:.3}"));
        }
        out.push('\n');
        if self.thresholded {
            out.push_str(&format!("threshold\t{}\n", self.threshold));
        }
        out
    }
}

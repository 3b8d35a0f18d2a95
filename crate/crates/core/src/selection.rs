//! Cluster-number selection from the odds of overall homogeneity.
//!
//! `phi_k = delta_T / (1 - delta_T)` and the lag-1 ratio
//! `Phi1(k) = phi_k / phi_{k+1}`; the selected k is the smallest maximizer of
//! `Phi1` over `2..k_max-1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DistanceMatrix;
use crate::linkage::{cut, Dendrogram};
use crate::membership::{apply_threshold, membership_for};

/// `delta_T` values at or above this are clamped before taking odds.
pub const DELTA_T_CLAMP: f64 = 1.0 - 1e-12;

pub const DEFAULT_K_MAX: usize = 10;

/// Odds form of the homogeneity: `delta_T / (1 - delta_T)`.
pub fn phi_ratio(delta_t: f64) -> Result<f64> {
    if delta_t == 1.0 {
        return Err(Error::InfiniteOdds);
    }
    if !(delta_t > 0.0 && delta_t < 1.0) {
        return Err(Error::invalid(format!("delta_T must lie in (0, 1), got {delta_t}")));
    }
    Ok(delta_t / (1.0 - delta_t))
}

/// Per-k homogeneity, odds and lag-1 ratios for `k = 2..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSeries {
    pub k_min: usize,
    pub k_max: usize,
    /// Index 0 is `k = 2`.
    pub delta_t_by_k: Vec<f64>,
    pub phi_by_k: Vec<f64>,
    /// `Phi1(k)` for `k = 2..=k_max-1`; index 0 is `k = 2`.
    pub phi1_by_k: Vec<f64>,
    pub selected_k: usize,
    pub threshold: Option<f64>,
}

impl PhiSeries {
    pub fn delta_t(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_min).and_then(|i| self.delta_t_by_k.get(i).copied())
    }

    pub fn phi(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_min).and_then(|i| self.phi_by_k.get(i).copied())
    }

    pub fn phi1(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_min).and_then(|i| self.phi1_by_k.get(i).copied())
    }

    /// Builds the odds, ratios and selection from a `delta_T` series starting
    /// at `k = 2`.
    pub fn from_delta_t(delta_t_by_k: Vec<f64>, threshold: Option<f64>) -> Result<Self> {
        if delta_t_by_k.len() < 2 {
            return Err(Error::invalid("need delta_T for at least k = 2 and k = 3"));
        }
        let phi_by_k = delta_t_by_k
            .iter()
            .map(|&t| phi_ratio(t.min(DELTA_T_CLAMP)))
            .collect::<Result<Vec<_>>>()?;
        let phi1_by_k: Vec<f64> = phi_by_k.windows(2).map(|w| w[0] / w[1]).collect();
        let best = phi1_by_k
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
            .0;
        Ok(PhiSeries {
            k_min: 2,
            k_max: delta_t_by_k.len() + 1,
            delta_t_by_k,
            phi_by_k,
            phi1_by_k,
            selected_k: best + 2,
            threshold,
        })
    }
}

/// Homogeneity of the `k`-cluster cut of `tree`, optionally thresholded.
pub fn delta_t_at(dm: &DistanceMatrix, tree: &Dendrogram, k: usize, threshold: Option<f64>) -> Result<f64> {
    let run = || -> Result<f64> {
        let assign = cut(tree, k)?;
        let mm = membership_for(dm, &assign)?;
        Ok(match threshold {
            Some(t) => apply_threshold(&mm, t)?.delta_t,
            None => mm.delta_t,
        })
    };
    run().map_err(|e| e.at_k(k))
}

/// Evaluates `delta_T` on every cut `k = 2..=k_max` and selects the k that
/// maximizes `Phi1`.
pub fn select_k(dm: &DistanceMatrix, tree: &Dendrogram, k_max: usize, threshold: Option<f64>) -> Result<PhiSeries> {
    let n = tree.n();
    if dm.n() != n {
        return Err(Error::invalid("distance matrix and tree disagree on n"));
    }
    if k_max < 3 || k_max + 1 > n {
        return Err(Error::invalid(format!(
            "k_max must satisfy 3 <= k_max <= n - 1 (n = {n}), got {k_max}"
        )));
    }
    let per_k: Vec<Result<f64>> = (2..=k_max)
        .into_par_iter()
        .map(|k| delta_t_at(dm, tree, k, threshold))
        .collect();
    let delta_t = per_k.into_iter().collect::<Result<Vec<_>>>()?;
    PhiSeries::from_delta_t(delta_t, threshold)
}

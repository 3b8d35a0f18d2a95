//! Baseline criteria for the number of clusters: within/between sums of
//! squares, Calinski-Harabasz, average silhouette and the GAP statistic.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{center_columns, principal_axes, squared_distance_matrix, Dataset};
use crate::linkage::{complete_linkage, cut, ClusterAssignment, Dendrogram};
use crate::rng::{stream_rng, STREAM_GAP_REFERENCE};

pub const DEFAULT_BOOTSTRAPS: usize = 100;

fn check_partition(data: &Dataset, assign: &ClusterAssignment) -> Result<()> {
    if data.n() != assign.n() {
        return Err(Error::invalid(format!(
            "assignment covers {} observations, dataset has {}",
            assign.n(),
            data.n()
        )));
    }
    Ok(())
}

fn centroids(data: &Dataset, assign: &ClusterAssignment) -> Array2<f64> {
    let mut sums = Array2::<f64>::zeros((assign.k(), data.p()));
    for (i, row) in data.values().axis_iter(Axis(0)).enumerate() {
        let mut s = sums.row_mut(assign.cluster_of(i));
        s += &row;
    }
    for (c, size) in assign.sizes().into_iter().enumerate() {
        sums.row_mut(c).mapv_inplace(|v| v / size as f64);
    }
    sums
}

/// Sum over clusters of squared distances to the cluster centroid.
pub fn within_ss(data: &Dataset, assign: &ClusterAssignment) -> Result<f64> {
    check_partition(data, assign)?;
    let cent = centroids(data, assign);
    Ok(data
        .values()
        .axis_iter(Axis(0))
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .zip(cent.row(assign.cluster_of(i)).iter())
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
        })
        .sum())
}

/// Size-weighted squared distances of cluster centroids to the grand mean.
pub fn between_ss(data: &Dataset, assign: &ClusterAssignment) -> Result<f64> {
    check_partition(data, assign)?;
    let cent = centroids(data, assign);
    let grand = Array1::from(data.means());
    Ok(assign
        .sizes()
        .into_iter()
        .enumerate()
        .map(|(c, size)| {
            let diff = &cent.row(c) - &grand;
            size as f64 * diff.dot(&diff)
        })
        .sum())
}

/// Squared deviations from the grand mean.
pub fn total_ss(data: &Dataset) -> f64 {
    let grand = Array1::from(data.means());
    data.values()
        .axis_iter(Axis(0))
        .map(|row| {
            let diff = &row - &grand;
            diff.dot(&diff)
        })
        .sum()
}

/// Degrees-of-freedom convention for Calinski-Harabasz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChVariant {
    /// `(B / (k - 1)) / (W / (n - k))`.
    #[default]
    Standard,
    /// `(B / (n - k)) / (W / (k - 1))`, degrees of freedom swapped.
    AsPrinted,
}

pub fn calinski_harabasz(data: &Dataset, assign: &ClusterAssignment, variant: ChVariant) -> Result<f64> {
    let n = data.n();
    let k = assign.k();
    if k < 2 {
        return Err(Error::UnsupportedK { k });
    }
    if n <= k {
        return Err(Error::invalid(format!("Calinski-Harabasz needs n > k, got n={n}, k={k}")));
    }
    let w = within_ss(data, assign)?;
    let b = between_ss(data, assign)?;
    if w == 0.0 {
        return Err(Error::InfiniteIndex);
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(match variant {
        ChVariant::Standard => (b / (kf - 1.0)) / (w / (nf - kf)),
        ChVariant::AsPrinted => (b / (nf - kf)) / (w / (kf - 1.0)),
    })
}

/// Mean silhouette width over all observations.
///
/// `distances` must hold plain Euclidean (not squared) distances. A point in
/// a singleton cluster has silhouette 0, as does a point with `a = b = 0`.
pub fn silhouette(distances: ArrayView2<'_, f64>, assign: &ClusterAssignment) -> Result<f64> {
    let n = assign.n();
    let k = assign.k();
    if k < 2 {
        return Err(Error::UnsupportedK { k });
    }
    if distances.dim() != (n, n) {
        return Err(Error::invalid("distance matrix does not match assignment"));
    }
    let sizes = assign.sizes();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = assign.cluster_of(i);
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            sums[assign.cluster_of(j)] += distances[[i, j]];
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    CalinskiHarabasz,
    Silhouette,
}

/// Index values over `k = k_min..=k_max`, selected by argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub kind: IndexKind,
    pub k_min: usize,
    pub values: Vec<f64>,
}

impl IndexSeries {
    pub fn k_max(&self) -> usize {
        self.k_min + self.values.len() - 1
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.k_min).and_then(|i| self.values.get(i).copied())
    }
}

/// Smallest k attaining the maximum value. Positive infinity counts as a
/// maximum; NaN never does.
pub fn select_by_argmax(series: &IndexSeries) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in series.values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| series.k_min + i)
        .ok_or_else(|| Error::invalid("index series has no comparable values"))
}

/// Calinski-Harabasz for every cut `k = 2..=k_max`. A zero within-cluster
/// sum of squares is recorded as `+inf`.
pub fn ch_series(data: &Dataset, tree: &Dendrogram, k_max: usize, variant: ChVariant) -> Result<IndexSeries> {
    if k_max < 2 || k_max >= data.n() {
        return Err(Error::invalid(format!("k_max must lie in 2..n, got {k_max}")));
    }
    let values = (2..=k_max)
        .map(|k| {
            let assign = cut(tree, k)?;
            match calinski_harabasz(data, &assign, variant) {
                Err(Error::InfiniteIndex) => Ok(f64::INFINITY),
                other => other.map_err(|e| e.at_k(k)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries {
        kind: IndexKind::CalinskiHarabasz,
        k_min: 2,
        values,
    })
}

/// Average silhouette for every cut `k = 2..=k_max`.
pub fn silhouette_series(distances: ArrayView2<'_, f64>, tree: &Dendrogram, k_max: usize) -> Result<IndexSeries> {
    if k_max < 2 || k_max > tree.n() {
        return Err(Error::invalid(format!("k_max must lie in 2..=n, got {k_max}")));
    }
    let values = (2..=k_max)
        .map(|k| silhouette(distances, &cut(tree, k)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexSeries {
        kind: IndexKind::Silhouette,
        k_min: 2,
        values,
    })
}

/// How GAP reference datasets are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Uniform over the per-column bounding box of the data.
    UniformBox,
    /// Uniform over the bounding box of the principal-axis-rotated, centered
    /// data, rotated back and re-centered.
    PcaRotatedBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapConfig {
    pub k_max: usize,
    pub bootstraps: usize,
    pub reference: ReferenceKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub k_min: usize,
    pub k_max: usize,
    /// Index 0 is `k = 1`.
    pub gap_by_k: Vec<f64>,
    pub se_by_k: Vec<f64>,
    pub log_w_by_k: Vec<f64>,
    pub bootstraps: usize,
    pub reference_kind: ReferenceKind,
    pub seed: u64,
    pub selected_k: usize,
}

impl GapSeries {
    pub fn gap(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.gap_by_k.get(i).copied())
    }

    pub fn se(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.se_by_k.get(i).copied())
    }
}

/// Complete-linkage tree over squared Euclidean distances.
pub fn complete_linkage_tree(data: &Dataset) -> Result<Dendrogram> {
    complete_linkage(&squared_distance_matrix(data))
}

fn log_w_curve(data: &Dataset, tree: &Dendrogram, k_max: usize) -> Result<Vec<f64>> {
    (1..=k_max)
        .map(|k| Ok(within_ss(data, &cut(tree, k)?)?.ln()))
        .collect()
}

/// Draws reference datasets from a fixed box.
struct ReferenceSampler {
    bounds: Vec<(f64, f64)>,
    /// Rotation and mean to map box draws back to data space.
    back: Option<(Array2<f64>, Array1<f64>)>,
    n: usize,
}

impl ReferenceSampler {
    fn new(data: &Dataset, kind: ReferenceKind) -> Result<Self> {
        match kind {
            ReferenceKind::UniformBox => Ok(ReferenceSampler {
                bounds: data.bounds(),
                back: None,
                n: data.n(),
            }),
            ReferenceKind::PcaRotatedBox => {
                let centered = center_columns(data);
                let rotation = principal_axes(&centered)?;
                let rotated = Dataset::new(centered.values().dot(&rotation))?;
                Ok(ReferenceSampler {
                    bounds: rotated.bounds(),
                    back: Some((rotation.reversed_axes(), Array1::from(data.means()))),
                    n: data.n(),
                })
            }
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<Dataset> {
        let p = self.bounds.len();
        let mut values = Array2::<f64>::zeros((self.n, p));
        for mut row in values.axis_iter_mut(Axis(0)) {
            for (v, &(lo, hi)) in row.iter_mut().zip(&self.bounds) {
                *v = lo + (hi - lo) * rng.random::<f64>();
            }
        }
        if let Some((rotation_t, mean)) = &self.back {
            values = values.dot(rotation_t) + mean;
        }
        Dataset::new(values)
    }
}

/// GAP statistic for `k = 1..=k_max` with the one-standard-error rule.
///
/// `cluster` builds the tree for the observed data and for every reference
/// draw. Reference `b` is drawn from seed `config.seed + b`, so the result
/// does not depend on scheduling. `s_k` uses the sample standard deviation
/// of the reference `log W` inflated by `sqrt(1 + 1/B)`.
pub fn gap_statistic<F>(data: &Dataset, cluster: F, config: &GapConfig) -> Result<GapSeries>
where
    F: Fn(&Dataset) -> Result<Dendrogram> + Sync,
{
    let tree = cluster(data)?;
    gap_statistic_with_tree(data, &tree, cluster, config)
}

/// As [`gap_statistic`], reusing an already built tree for the observed data.
pub fn gap_statistic_with_tree<F>(data: &Dataset, tree: &Dendrogram, cluster: F, config: &GapConfig) -> Result<GapSeries>
where
    F: Fn(&Dataset) -> Result<Dendrogram> + Sync,
{
    let GapConfig {
        k_max,
        bootstraps,
        reference,
        seed,
    } = *config;
    if bootstraps < 10 {
        return Err(Error::invalid(format!("GAP needs at least 10 reference draws, got {bootstraps}")));
    }
    if k_max < 2 || k_max > data.n() {
        return Err(Error::invalid(format!("GAP k_max must lie in 2..=n, got {k_max}")));
    }
    if data.bounds().iter().all(|(lo, hi)| lo == hi) {
        return Err(Error::invalid("GAP is undefined when all observations are identical"));
    }
    let observed = log_w_curve(data, tree, k_max)?;
    if let Some(k) = observed.iter().position(|w| !w.is_finite()) {
        return Err(Error::invalid(format!(
            "within-cluster sum of squares is zero at k={}; too few distinct observations",
            k + 1
        )));
    }

    let sampler = ReferenceSampler::new(data, reference)?;
    let per_draw: Vec<Result<Vec<f64>>> = (0..bootstraps)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed.wrapping_add(b as u64), STREAM_GAP_REFERENCE);
            let draw = sampler.draw(&mut rng)?;
            let tree = cluster(&draw)?;
            log_w_curve(&draw, &tree, k_max)
        })
        .collect();
    let reference_log_w = per_draw.into_iter().collect::<Result<Vec<_>>>()?;

    let bf = bootstraps as f64;
    let mut gap_by_k = Vec::with_capacity(k_max);
    let mut se_by_k = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let mean = reference_log_w.iter().map(|c| c[k]).sum::<f64>() / bf;
        let var = reference_log_w.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (bf - 1.0);
        gap_by_k.push(mean - observed[k]);
        se_by_k.push(var.sqrt() * (1.0 + 1.0 / bf).sqrt());
    }
    let selected_k = (0..k_max - 1)
        .find(|&k| gap_by_k[k] >= gap_by_k[k + 1] - se_by_k[k + 1])
        .map_or(k_max, |k| k + 1);

    Ok(GapSeries {
        k_min: 1,
        k_max,
        gap_by_k,
        se_by_k,
        log_w_by_k: observed,
        bootstraps,
        reference_kind: reference,
        seed,
        selected_k,
    })
}

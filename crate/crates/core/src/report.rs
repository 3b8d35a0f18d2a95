//! Per-k validity report over one dataset, combining the phi-ratio series
//! with the GAP, Calinski-Harabasz and silhouette baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{squared_distance_matrix, Dataset};
use crate::indices::{
    ch_series, complete_linkage_tree, gap_statistic_with_tree, select_by_argmax, silhouette_series, ChVariant,
    GapConfig, ReferenceKind, DEFAULT_BOOTSTRAPS,
};
use crate::linkage::complete_linkage;
use crate::membership::DELTA_T_SINGLE_CLUSTER;
use crate::rng::DEFAULT_SEED;
use crate::selection::{select_k, DEFAULT_K_MAX};

/// Column order of [`ValidityReport::to_csv`].
pub const CSV_COLUMNS: [&str; 10] = [
    "k",
    "delta_T",
    "phi",
    "phi1",
    "gap_unif",
    "gap_unif_se",
    "gap_pca",
    "gap_pca_se",
    "ch",
    "silhouette",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzeOptions {
    pub k_max: usize,
    pub threshold: Option<f64>,
    pub bootstraps: usize,
    pub seed: u64,
    pub ch_variant: ChVariant,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            k_max: DEFAULT_K_MAX,
            threshold: None,
            bootstraps: DEFAULT_BOOTSTRAPS,
            seed: DEFAULT_SEED,
            ch_variant: ChVariant::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub source: Option<String>,
    pub n: usize,
    pub p: usize,
    pub k_max: usize,
    pub threshold: Option<f64>,
    pub seed: u64,
    pub bootstraps: usize,
    pub ch_variant: ChVariant,
}

/// One row per k. Undefined cells are `None` (`null` in JSON, blank in CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: usize,
    pub delta_t: Option<f64>,
    pub phi: Option<f64>,
    pub phi1: Option<f64>,
    pub gap_unif: Option<f64>,
    pub gap_unif_se: Option<f64>,
    pub gap_pca: Option<f64>,
    pub gap_pca_se: Option<f64>,
    pub ch: Option<f64>,
    pub silhouette: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selections {
    pub phi: usize,
    pub gap_unif: usize,
    pub gap_pca: usize,
    pub ch: usize,
    pub silhouette: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub meta: ReportMeta,
    pub records: Vec<KRecord>,
    pub selected: Selections,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Builds the distance matrix and complete-linkage tree once and evaluates
/// every criterion on `k = 1..=k_max`.
pub fn analyze(data: &Dataset, source: Option<String>, options: &AnalyzeOptions) -> Result<ValidityReport> {
    let n = data.n();
    if n < 4 {
        return Err(Error::invalid(format!("need at least 4 observations, got {n}")));
    }
    let k_max = options.k_max;
    if k_max < 3 || k_max >= n {
        return Err(Error::invalid(format!("k_max must satisfy 3 <= k_max <= n - 1 (n = {n}), got {k_max}")));
    }
    let dm = squared_distance_matrix(data);
    let tree = complete_linkage(&dm)?;

    let phi = select_k(&dm, &tree, k_max, options.threshold)?;
    let gap = |reference| {
        let cfg = GapConfig {
            k_max,
            bootstraps: options.bootstraps,
            reference,
            seed: options.seed,
        };
        gap_statistic_with_tree(data, &tree, complete_linkage_tree, &cfg)
    };
    let gap_unif = gap(ReferenceKind::UniformBox)?;
    let gap_pca = gap(ReferenceKind::PcaRotatedBox)?;
    let ch = ch_series(data, &tree, k_max, options.ch_variant)?;
    let sil = silhouette_series(dm.euclidean().view(), &tree, k_max)?;

    let records = (1..=k_max)
        .map(|k| KRecord {
            k,
            delta_t: if k == 1 { Some(DELTA_T_SINGLE_CLUSTER) } else { phi.delta_t(k) },
            phi: phi.phi(k),
            phi1: phi.phi1(k),
            gap_unif: gap_unif.gap(k),
            gap_unif_se: gap_unif.se(k),
            gap_pca: gap_pca.gap(k),
            gap_pca_se: gap_pca.se(k),
            ch: ch.value(k).and_then(finite),
            silhouette: sil.value(k),
        })
        .collect();

    Ok(ValidityReport {
        meta: ReportMeta {
            source,
            n,
            p: data.p(),
            k_max,
            threshold: options.threshold,
            seed: options.seed,
            bootstraps: options.bootstraps,
            ch_variant: options.ch_variant,
        },
        records,
        selected: Selections {
            phi: phi.selected_k,
            gap_unif: gap_unif.selected_k,
            gap_pca: gap_pca.selected_k,
            ch: select_by_argmax(&ch)?,
            silhouette: select_by_argmax(&sil)?,
        },
    })
}

impl ValidityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One line per k under the fixed [`CSV_COLUMNS`] header.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = CSV_COLUMNS.join(",");
        out.push('\n');
        for r in &self.records {
            let cells = [
                r.delta_t, r.phi, r.phi1, r.gap_unif, r.gap_unif_se, r.gap_pca, r.gap_pca_se, r.ch, r.silhouette,
            ];
            out.push_str(&r.k.to_string());
            for c in cells {
                out.push(',');
                out.push_str(&cell(c));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_groups() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let base = if i < 6 { 0.0 } else { 20.0 };
                vec![base + (i % 6) as f64 * 0.3, ((i * 7) % 5) as f64 * 0.2]
            })
            .collect();
        Dataset::from_rows(&rows).unwrap()
    }

    fn options() -> AnalyzeOptions {
        AnalyzeOptions {
            k_max: 5,
            bootstraps: 10,
            ..AnalyzeOptions::default()
        }
    }

    #[test]
    fn selections_lie_in_range() {
        let report = analyze(&two_groups(), None, &options()).unwrap();
        assert_eq!(report.records.len(), 5);
        let s = &report.selected;
        for k in [s.phi, s.ch, s.silhouette] {
            assert!((2..=5).contains(&k));
        }
        for k in [s.gap_unif, s.gap_pca] {
            assert!((1..=5).contains(&k));
        }
        assert_eq!(report.records[0].delta_t, Some(1.0));
        assert_eq!(report.records[0].phi, None);
        assert_eq!(report.records[4].phi1, None);
        assert_eq!(s.silhouette, 2);
    }

    #[test]
    fn csv_header_and_rows() {
        let report = analyze(&two_groups(), None, &options()).unwrap();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,delta_T,phi,phi1,gap_unif,gap_unif_se,gap_pca,gap_pca_se,ch,silhouette"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 10);
        assert_eq!(first[0], "1");
        assert_eq!(first[2], "");
        assert_eq!(csv.lines().count(), 6);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let report = analyze(&two_groups(), Some("x.csv".into()), &options()).unwrap();
        let text = report.to_json().unwrap();
        let back = ValidityReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn threshold_changes_only_phi_fields() {
        let plain = analyze(&two_groups(), None, &options()).unwrap();
        let thr = analyze(
            &two_groups(),
            None,
            &AnalyzeOptions {
                threshold: Some(0.1),
                ..options()
            },
        )
        .unwrap();
        for (a, b) in plain.records.iter().zip(&thr.records) {
            assert_eq!(
                (a.gap_unif, a.gap_unif_se, a.gap_pca, a.gap_pca_se, a.ch, a.silhouette),
                (b.gap_unif, b.gap_unif_se, b.gap_pca, b.gap_pca_se, b.ch, b.silhouette)
            );
        }
        assert_eq!(plain.selected.ch, thr.selected.ch);
        assert_eq!(plain.selected.gap_pca, thr.selected.gap_pca);
    }

    #[test]
    fn rejects_tiny_inputs() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!(analyze(&data, None, &options()).is_err());
        assert!(analyze(&two_groups(), None, &AnalyzeOptions { k_max: 12, ..options() }).is_err());
    }
}

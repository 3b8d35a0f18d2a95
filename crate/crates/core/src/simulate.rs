//! Simulation scenarios and the replication harness that tallies each
//! method's selected number of clusters.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{squared_distance_matrix, Dataset};
use crate::indices::{
    ch_series, complete_linkage_tree, gap_statistic_with_tree, select_by_argmax, silhouette_series, ChVariant,
    GapConfig, ReferenceKind, DEFAULT_BOOTSTRAPS,
};
use crate::linkage::complete_linkage;
use crate::membership::DEFAULT_THRESHOLD;
use crate::rng::{stream_rng, DEFAULT_SEED, STREAM_DATA};
use crate::selection::{select_k, DEFAULT_K_MAX};

/// Default Gaussian standard deviation where a scenario does not fix one.
pub const DEFAULT_SD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    /// `n` i.i.d. points uniform on a box given as `[lower, upper]` per dimension.
    Uniform { n: usize, bounds: Vec<[f64; 2]> },
    /// Isotropic Gaussian blobs: `sizes[j]` points around `centers[j]`.
    GaussianMixture {
        centers: Vec<Vec<f64>>,
        sizes: Vec<usize>,
        sd: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(flatten)]
    pub scenario: Scenario,
}

impl ScenarioSpec {
    pub fn dims(&self) -> usize {
        match &self.scenario {
            Scenario::Uniform { bounds, .. } => bounds.len(),
            Scenario::GaussianMixture { centers, .. } => centers.first().map_or(0, Vec::len),
        }
    }

    pub fn n(&self) -> usize {
        match &self.scenario {
            Scenario::Uniform { n, .. } => *n,
            Scenario::GaussianMixture { sizes, .. } => sizes.iter().sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::invalid(format!("scenario '{}': {field}: {msg}", self.name)));
        match &self.scenario {
            Scenario::Uniform { n, bounds } => {
                if *n == 0 {
                    return bad("n", "must be at least 1".into());
                }
                if bounds.is_empty() {
                    return bad("bounds", "need at least one dimension".into());
                }
                for (d, [lo, hi]) in bounds.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return bad("bounds", format!("dimension {d} needs finite lower < upper, got [{lo}, {hi}]"));
                    }
                }
            }
            Scenario::GaussianMixture { centers, sizes, sd } => {
                if centers.is_empty() {
                    return bad("centers", "need at least one center".into());
                }
                if centers.len() != sizes.len() {
                    return bad(
                        "sizes",
                        format!("{} sizes given for {} centers", sizes.len(), centers.len()),
                    );
                }
                let dims = centers[0].len();
                if dims == 0 {
                    return bad("centers", "centers must have at least one coordinate".into());
                }
                if let Some(j) = centers.iter().position(|c| c.len() != dims) {
                    return bad("centers", format!("center {j} has {} coordinates, expected {dims}", centers[j].len()));
                }
                if centers.iter().flatten().any(|v| !v.is_finite()) {
                    return bad("centers", "coordinates must be finite".into());
                }
                if sizes.iter().sum::<usize>() == 0 {
                    return bad("sizes", "total size must be positive".into());
                }
                if !(sd.is_finite() && *sd > 0.0) {
                    return bad("sd", format!("must be positive, got {sd}"));
                }
            }
        }
        Ok(())
    }

    /// Copy with the Gaussian standard deviation replaced (no-op for uniform).
    pub fn with_sd(&self, new_sd: f64) -> ScenarioSpec {
        let mut spec = self.clone();
        if let Scenario::GaussianMixture { sd, .. } = &mut spec.scenario {
            *sd = new_sd;
        }
        spec
    }
}

fn mixture(name: &str, centers: &[&[f64]], sizes: &[usize], sd: f64) -> ScenarioSpec {
    ScenarioSpec {
        name: name.to_string(),
        scenario: Scenario::GaussianMixture {
            centers: centers.iter().map(|c| c.to_vec()).collect(),
            sizes: sizes.to_vec(),
            sd,
        },
    }
}

/// The six reference scenarios.
pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    let four_2d: [&[f64]; 4] = [&[-4.0, -6.0], &[-8.0, 1.0], &[4.0, -5.0], &[-6.0, 9.0]];
    let four_4d: [&[f64]; 4] = [
        &[11.0, -8.0, 0.0, -3.0],
        &[-8.0, 4.0, 4.0, 2.0],
        &[9.0, -2.0, -2.0, 3.0],
        &[3.0, 7.0, -4.0, 0.0],
    ];
    let nested: [&[f64]; 6] = [
        &[12.0, -15.0],
        &[15.0, -18.0],
        &[-16.0, -15.0],
        &[-16.0, -18.0],
        &[17.0, 14.0],
        &[14.0, 11.0],
    ];
    let nested_sizes = [25, 25, 15, 15, 10, 10];
    vec![
        ScenarioSpec {
            name: "uniform".into(),
            scenario: Scenario::Uniform {
                n: 100,
                bounds: vec![[0.0, 1.0]; 6],
            },
        },
        mixture("four-2d", &four_2d, &[25, 25, 10, 10], DEFAULT_SD),
        mixture("four-2d-n5", &four_2d, &[5, 5, 5, 5], DEFAULT_SD),
        mixture("four-4d", &four_4d, &[30, 30, 20, 15], DEFAULT_SD),
        mixture("nested-sd05", &nested, &nested_sizes, 0.5),
        mixture("nested-sd1", &nested, &nested_sizes, 1.0),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<ScenarioSpec> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// One draw with the generating group of every row (0 for uniform data).
pub fn sample_labeled(spec: &ScenarioSpec, seed: u64) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = stream_rng(seed, STREAM_DATA);
    let mut rows = Vec::with_capacity(spec.n());
    let mut groups = Vec::with_capacity(spec.n());
    match &spec.scenario {
        Scenario::Uniform { n, bounds } => {
            for _ in 0..*n {
                rows.push(bounds.iter().map(|[lo, hi]| lo + (hi - lo) * rng.random::<f64>()).collect());
                groups.push(0);
            }
        }
        Scenario::GaussianMixture { centers, sizes, sd } => {
            for (j, (center, &size)) in centers.iter().zip(sizes).enumerate() {
                for _ in 0..size {
                    rows.push(
                        center
                            .iter()
                            .map(|c| {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                c + sd * z
                            })
                            .collect::<Vec<f64>>(),
                    );
                    groups.push(j);
                }
            }
        }
    }
    Ok((Dataset::from_rows(&rows)?, groups))
}

pub fn sample(spec: &ScenarioSpec, seed: u64) -> Result<Dataset> {
    sample_labeled(spec, seed).map(|(data, _)| data)
}

/// Cluster-number selection methods compared by the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GapUnif,
    GapPca,
    Silhouette,
    Ch,
    Phi,
    PhiThreshold,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GapUnif,
        Method::GapPca,
        Method::Silhouette,
        Method::Ch,
        Method::Phi,
        Method::PhiThreshold,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::GapUnif => "gap-unif",
            Method::GapPca => "gap-pca",
            Method::Silhouette => "silhouette",
            Method::Ch => "ch",
            Method::Phi => "phi",
            Method::PhiThreshold => "phi-threshold",
        }
    }

    /// Smallest k the method can select.
    pub fn min_k(self) -> usize {
        match self {
            Method::GapUnif | Method::GapPca => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub replicates: usize,
    pub k_max: usize,
    pub seed: u64,
    pub bootstraps: usize,
    pub threshold: f64,
    pub ch_variant: ChVariant,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            replicates: 100,
            k_max: DEFAULT_K_MAX,
            seed: DEFAULT_SEED,
            bootstraps: DEFAULT_BOOTSTRAPS,
            threshold: DEFAULT_THRESHOLD,
            ch_variant: ChVariant::Standard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyRow {
    pub method: Method,
    /// `counts[k - 1]`; `None` where the method cannot select `k`.
    pub counts: Vec<Option<u32>>,
    pub failures: u32,
}

impl TallyRow {
    pub fn count(&self, k: usize) -> u32 {
        k.checked_sub(1)
            .and_then(|i| self.counts.get(i).copied().flatten())
            .unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub seed: u64,
    /// Fingerprint of the dataset every method saw in this replicate.
    pub data_fingerprint: u64,
    /// Aligned with the table rows; `None` marks a failure.
    pub selected: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TallyTable {
    pub scenario: ScenarioSpec,
    pub replicates: usize,
    pub seed: u64,
    pub k_max: usize,
    pub bootstraps: usize,
    pub threshold: f64,
    pub ch_variant: ChVariant,
    pub rows: Vec<TallyRow>,
    pub replicate_log: Vec<ReplicateRecord>,
}

impl TallyTable {
    pub fn row(&self, method: Method) -> Option<&TallyRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Methods as rows, `k = 1..k_max` as columns, blank where a method
    /// cannot select that k, then a failure count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for k in 1..=self.k_max {
            out.push_str(&format!(",{k}"));
        }
        out.push_str(",failed\n");
        for row in &self.rows {
            out.push_str(row.method.id());
            for c in &row.counts {
                out.push(',');
                if let Some(c) = c {
                    out.push_str(&c.to_string());
                }
            }
            out.push_str(&format!(",{}\n", row.failures));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Selected k of every method on one dataset; the distance matrix and tree
/// are built once and shared.
pub fn evaluate_methods(data: &Dataset, methods: &[Method], config: &StudyConfig, seed: u64) -> Vec<Result<usize>> {
    let dm = squared_distance_matrix(data);
    let tree = match complete_linkage(&dm) {
        Ok(t) => t,
        Err(e) => {
            let msg = e.to_string();
            return methods.iter().map(|_| Err(Error::invalid(msg.clone()))).collect();
        }
    };
    let euclidean = dm.euclidean();
    methods
        .iter()
        .map(|&method| match method {
            Method::GapUnif | Method::GapPca => {
                let reference = if method == Method::GapUnif {
                    ReferenceKind::UniformBox
                } else {
                    ReferenceKind::PcaRotatedBox
                };
                let cfg = GapConfig {
                    k_max: config.k_max,
                    bootstraps: config.bootstraps,
                    reference,
                    seed,
                };
                gap_statistic_with_tree(data, &tree, complete_linkage_tree, &cfg).map(|g| g.selected_k)
            }
            Method::Silhouette => silhouette_series(euclidean.view(), &tree, config.k_max).and_then(|s| select_by_argmax(&s)),
            Method::Ch => ch_series(data, &tree, config.k_max, config.ch_variant).and_then(|s| select_by_argmax(&s)),
            Method::Phi => select_k(&dm, &tree, config.k_max, None).map(|s| s.selected_k),
            Method::PhiThreshold => select_k(&dm, &tree, config.k_max, Some(config.threshold)).map(|s| s.selected_k),
        })
        .collect()
}

/// Runs `config.replicates` replicates of every scenario. Replicate `r` draws
/// its data from seed `config.seed + r`; all methods see the same draw.
pub fn run_study(specs: &[ScenarioSpec], methods: &[Method], config: &StudyConfig) -> Result<Vec<TallyTable>> {
    if config.replicates == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }
    if methods.is_empty() {
        return Err(Error::invalid("need at least one method"));
    }
    if config.k_max < 3 {
        return Err(Error::invalid(format!("k_max must be at least 3, got {}", config.k_max)));
    }
    specs.iter().map(|spec| run_scenario(spec, methods, config)).collect()
}

fn run_scenario(spec: &ScenarioSpec, methods: &[Method], config: &StudyConfig) -> Result<TallyTable> {
    spec.validate()?;
    if config.k_max >= spec.n() {
        return Err(Error::invalid(format!(
            "scenario '{}' has {} observations; k_max {} is too large",
            spec.name,
            spec.n(),
            config.k_max
        )));
    }
    let records = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r as u64);
            let data = sample(spec, seed)?;
            let fingerprint = data.fingerprint();
            log::debug!("{} replicate {r}: seed {seed}, data {fingerprint:016x}", spec.name);
            let selected = evaluate_methods(&data, methods, config, seed)
                .into_iter()
                .zip(methods)
                .map(|(res, m)| match res {
                    Ok(k) => Some(k),
                    Err(e) => {
                        log::warn!("{} replicate {r}: {m} failed: {e}", spec.name);
                        None
                    }
                })
                .collect();
            Ok(ReplicateRecord {
                replicate: r,
                seed,
                data_fingerprint: fingerprint,
                selected,
            })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let rows = methods
        .iter()
        .enumerate()
        .map(|(idx, &method)| {
            let mut counts: Vec<Option<u32>> = (1..=config.k_max)
                .map(|k| (k >= method.min_k()).then_some(0))
                .collect();
            let mut failures = 0;
            for rec in &records {
                match rec.selected[idx] {
                    Some(k) => {
                        if let Some(Some(c)) = counts.get_mut(k - 1) {
                            *c += 1;
                        }
                    }
                    None => failures += 1,
                }
            }
            TallyRow {
                method,
                counts,
                failures,
            }
        })
        .collect();

    Ok(TallyTable {
        scenario: spec.clone(),
        replicates: config.replicates,
        seed: config.seed,
        k_max: config.k_max,
        bootstraps: config.bootstraps,
        threshold: config.threshold,
        ch_variant: config.ch_variant,
        rows,
        replicate_log: records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::cut;
    use approx::assert_abs_diff_eq;
    use std::collections::HashMap;

    #[test]
    fn builtin_shapes() {
        let specs = builtin_scenarios();
        assert_eq!(specs.len(), 6);
        let four_4d = sample(&builtin_scenario("four-4d").unwrap(), 1).unwrap();
        assert_eq!((four_4d.n(), four_4d.p()), (95, 4));
        let nested = sample(&builtin_scenario("nested-sd05").unwrap(), 1).unwrap();
        assert_eq!((nested.n(), nested.p()), (100, 2));
        let uniform = sample(&builtin_scenario("uniform").unwrap(), 1).unwrap();
        assert_eq!((uniform.n(), uniform.p()), (100, 6));
        assert!(uniform.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(builtin_scenario("four-2d-n5").unwrap().n(), 20);
        assert_eq!(builtin_scenario("four-2d").unwrap().dims(), 2);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = builtin_scenario("four-2d").unwrap();
        assert_eq!(sample(&spec, 17).unwrap(), sample(&spec, 17).unwrap());
        assert_ne!(sample(&spec, 17).unwrap(), sample(&spec, 18).unwrap());
    }

    #[test]
    fn vanishing_sd_collapses_to_centers() {
        let spec = builtin_scenario("four-2d").unwrap().with_sd(1e-9);
        let (data, groups) = sample_labeled(&spec, 3).unwrap();
        let Scenario::GaussianMixture { centers, .. } = &spec.scenario else {
            unreachable!()
        };
        for (row, g) in data.values().rows().into_iter().zip(groups) {
            for (v, c) in row.iter().zip(&centers[g]) {
                assert_abs_diff_eq!(v, c, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn nested_groups_are_recovered_at_six() {
        let spec = builtin_scenario("nested-sd05").unwrap();
        let (data, groups) = sample_labeled(&spec, 7).unwrap();
        let tree = complete_linkage_tree(&data).unwrap();
        let assign = cut(&tree, 6).unwrap();
        // Majority map from found cluster to generating group.
        let mut votes: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, &g) in groups.iter().enumerate() {
            *votes.entry((assign.cluster_of(i), g)).or_default() += 1;
        }
        let agree: usize = (0..6)
            .map(|c| (0..6).map(|g| votes.get(&(c, g)).copied().unwrap_or(0)).max().unwrap())
            .sum();
        assert!(agree as f64 >= 0.95 * data.n() as f64, "agreement {agree}/100");
    }

    #[test]
    fn spec_validation_messages() {
        let bad = ScenarioSpec {
            name: "x".into(),
            scenario: Scenario::GaussianMixture {
                centers: vec![vec![0.0, 0.0], vec![1.0]],
                sizes: vec![3, 3],
                sd: 1.0,
            },
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("centers"), "{msg}");
        let bad = ScenarioSpec {
            name: "y".into(),
            scenario: Scenario::Uniform {
                n: 10,
                bounds: vec![[1.0, 0.0]],
            },
        };
        assert!(bad.validate().unwrap_err().to_string().contains("bounds"));
        let bad = builtin_scenario("four-2d").unwrap().with_sd(0.0);
        assert!(bad.validate().unwrap_err().to_string().contains("sd"));
    }

    #[test]
    fn spec_json_shape() {
        let spec = builtin_scenario("four-2d").unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"gaussian-mixture\""), "{text}");
        let back: ScenarioSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn single_replicate_rows_sum_to_one() {
        let config = StudyConfig {
            replicates: 1,
            bootstraps: 10,
            ..StudyConfig::default()
        };
        let tables = run_study(&[builtin_scenario("four-2d").unwrap()], &Method::ALL, &config).unwrap();
        let table = &tables[0];
        for row in &table.rows {
            assert_eq!(row.total() + row.failures, 1, "{}", row.method);
        }
        assert_eq!(table.row(Method::Silhouette).unwrap().counts[0], None);
        assert!(table.row(Method::GapUnif).unwrap().counts[0].is_some());
    }

    #[test]
    fn csv_layout() {
        let config = StudyConfig {
            replicates: 2,
            bootstraps: 10,
            ..StudyConfig::default()
        };
        let tables = run_study(&[builtin_scenario("four-2d").unwrap()], &[Method::GapUnif, Method::Phi], &config).unwrap();
        let csv = tables[0].to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "method,1,2,3,4,5,6,7,8,9,10,failed");
        assert!(lines[2].starts_with("phi,,"));
        assert_eq!(lines[1].split(',').count(), 12);
    }

    #[test]
    fn method_ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        assert!("kmeans".parse::<Method>().is_err());
    }
}

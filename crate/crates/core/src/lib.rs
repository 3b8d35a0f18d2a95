//! Cluster validity from a degree-of-membership matrix.
//!
//! Given a distance matrix and a flat partition, [`membership`] measures how
//! much each cluster's membership belongs to every cluster, and summarizes
//! the fit by an overall homogeneity `delta_T`. [`selection`] picks the number
//! of clusters by maximizing the lag-1 ratio of the odds of `delta_T` along a
//! complete-linkage tree ([`linkage`]). [`indices`] provides the GAP,
//! Calinski-Harabasz and silhouette baselines, and [`simulate`] runs seeded
//! comparison studies.

pub mod error;
pub mod geometry;
pub mod indices;
pub mod io;
pub mod linkage;
pub mod membership;
pub mod report;
pub mod rng;
pub mod selection;
pub mod simulate;

pub use error::{Error, Result};
pub use geometry::{center_columns, principal_axes, squared_distance_matrix, Dataset, DistanceMatrix};
pub use linkage::{complete_linkage, cut, ClusterAssignment, Dendrogram, Merge};
pub use membership::{
    apply_threshold, degree_of_closeness, membership_for, membership_matrix, ClosenessMatrix, MembershipMatrix,
};
pub use selection::{phi_ratio, select_k, PhiSeries};

//! Observation matrices, squared Euclidean distances and principal axes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// An `n x p` matrix of finite observations, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Array2<f64>,
}

impl Dataset {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::invalid(format!(
                "dataset must have at least one row and one column, got {n}x{p}"
            )));
        }
        for ((row, col), v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Dataset { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::invalid(format!(
                "row {bad} has {} columns, expected {p}",
                rows[bad].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), p), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Dataset::new(values)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// Column means.
    pub fn means(&self) -> Vec<f64> {
        self.values
            .mean_axis(Axis(0))
            .expect("dataset has at least one row")
            .to_vec()
    }

    /// Per-column `(min, max)`.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.values
            .axis_iter(Axis(1))
            .map(|col| {
                col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .collect()
    }

    /// Stable 64-bit fingerprint of the raw values (FNV-1a over the bit patterns).
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let (n, p) = self.values.dim();
        for word in [n as u64, p as u64]
            .into_iter()
            .chain(self.values.iter().map(|v| v.to_bits()))
        {
            for byte in word.to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        }
        hash
    }
}

/// Symmetric matrix of squared Euclidean distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d2: Array2<f64>,
}

impl DistanceMatrix {
    /// Wraps an existing matrix after checking symmetry, the zero diagonal and
    /// nonnegativity.
    pub fn from_squared(d2: Array2<f64>) -> Result<Self> {
        let (rows, cols) = d2.dim();
        if rows != cols || rows == 0 {
            return Err(Error::invalid(format!(
                "distance matrix must be square and non-empty, got {rows}x{cols}"
            )));
        }
        for i in 0..rows {
            if d2[[i, i]] != 0.0 {
                return Err(Error::invalid(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d2[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!(
                        "entry ({i}, {j}) must be finite and nonnegative, got {v}"
                    )));
                }
                if v != d2[[j, i]] {
                    return Err(Error::invalid(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix { d2 })
    }

    pub fn n(&self) -> usize {
        self.d2.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d2[[i, j]]
    }

    pub fn squared(&self) -> ArrayView2<'_, f64> {
        self.d2.view()
    }

    /// Plain (non-squared) Euclidean distances.
    pub fn euclidean(&self) -> Array2<f64> {
        self.d2.mapv(f64::sqrt)
    }

    /// Every entry multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::invalid(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(DistanceMatrix {
            d2: self.d2.mapv(|v| v * factor),
        })
    }
}

/// `d2[i][j] = sum_p (x_ip - x_jp)^2`.
pub fn squared_distance_matrix(data: &Dataset) -> DistanceMatrix {
    let x = data.values();
    let n = data.n();
    let mut d2 = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let xi = x.row(i);
        for j in (i + 1)..n {
            let s: f64 = xi
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[[i, j]] = s;
            d2[[j, i]] = s;
        }
    }
    DistanceMatrix { d2 }
}

/// Subtracts each column's mean.
pub fn center_columns(data: &Dataset) -> Dataset {
    let means = ndarray::Array1::from(data.means());
    Dataset {
        values: &data.values - &means,
    }
}

/// Orthonormal right-singular vectors of `data` (expected to be column
/// centered) as the columns of a `p x p` matrix, ordered by descending
/// singular value.
///
/// Each axis is signed so that its largest-magnitude component is positive.
/// Axes belonging to zero singular values are completed by Gram-Schmidt over
/// the canonical basis `e_1, e_2, ...` in order.
pub fn principal_axes(data: &Dataset) -> Result<Array2<f64>> {
    let n = data.n();
    let p = data.p();
    if n < 2 {
        return Err(Error::invalid(format!(
            "principal axes need at least two observations, got {n}"
        )));
    }
    let x = data.values();
    let xm = DMatrix::from_fn(n, p, |i, j| x[[i, j]]);
    let gram = xm.transpose() * &xm;
    let eig = SymmetricEigen::new(gram);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    let top = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = top * (p.max(n) as f64) * f64::EPSILON * 16.0;

    let mut axes: Vec<DVector<f64>> = Vec::with_capacity(p);
    for &idx in &order {
        if eig.eigenvalues[idx] > tol {
            axes.push(eig.eigenvectors.column(idx).into_owned());
        }
    }
    // Complete the basis for the null space.
    let mut canonical = 0;
    while axes.len() < p {
        let mut v = DVector::<f64>::zeros(p);
        v[canonical] = 1.0;
        canonical += 1;
        for _ in 0..2 {
            for a in &axes {
                let proj = a.dot(&v);
                v -= a * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            axes.push(v / norm);
        }
    }

    let mut rotation = Array2::<f64>::zeros((p, p));
    for (c, mut axis) in axes.into_iter().enumerate() {
        let lead = axis
            .iter()
            .enumerate()
            .fold((0, 0.0_f64), |(bi, bv), (i, v)| {
                if v.abs() > bv + 1e-12 {
                    (i, v.abs())
                } else {
                    (bi, bv)
                }
            })
            .0;
        if axis[lead] < 0.0 {
            axis = -axis;
        }
        for r in 0..p {
            rotation[[r, c]] = axis[r];
        }
    }
    Ok(rotation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> Dataset {
        Dataset::from_rows(&points.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn four_point_line_distances() {
        let dm = squared_distance_matrix(&line(&[0.0, 1.0, 10.0, 11.0]));
        let row: Vec<f64> = dm.squared().row(0).to_vec();
        assert_eq!(row, vec![0.0, 1.0, 100.0, 121.0]);
    }

    #[test]
    fn identical_rows_have_zero_distance() {
        let data = Dataset::new(array![[1.5, -2.0], [0.0, 3.0], [1.5, -2.0]]).unwrap();
        let dm = squared_distance_matrix(&data);
        assert_eq!(dm.get(0, 2), 0.0);
        assert_eq!(dm.get(2, 0), 0.0);
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = Dataset::new(array![[1.0, 2.0], [f64::NAN, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        let err = Dataset::new(array![[1.0, f64::INFINITY]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
    }

    #[test]
    fn rejects_empty_dataset() {
        assert!(Dataset::new(Array2::zeros((0, 2))).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn validates_external_distance_matrices() {
        assert!(DistanceMatrix::from_squared(array![[0.0, 1.0], [1.0, 0.0]]).is_ok());
        assert!(DistanceMatrix::from_squared(array![[0.0, 1.0], [2.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_squared(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(DistanceMatrix::from_squared(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
    }

    #[test]
    fn centering() {
        let single = Dataset::new(array![[3.0, -4.0]]).unwrap();
        assert_eq!(center_columns(&single).values(), array![[0.0, 0.0]]);

        let col = line(&[1.0, 2.0, 3.0]);
        assert_eq!(center_columns(&col).values(), array![[-1.0], [0.0], [1.0]]);

        let data = Dataset::new(array![[1.0, 5.0], [2.0, -1.0], [7.0, 2.5]]).unwrap();
        let once = center_columns(&data);
        let twice = center_columns(&once);
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn axis_aligned_data_gives_identity() {
        // Column variances 4 and 1, uncorrelated.
        let data = Dataset::new(array![[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let r = principal_axes(&data).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(r[[i, j]].abs(), expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_line_axis() {
        let data = center_columns(&Dataset::new(array![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap());
        let r = principal_axes(&data).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(r[[0, 0]], h, epsilon = 1e-12);
        assert_abs_diff_eq!(r[[1, 0]], h, epsilon = 1e-12);
        // Rank-deficient completion is orthogonal to the first axis.
        assert_abs_diff_eq!(r[[0, 0]] * r[[0, 1]] + r[[1, 0]] * r[[1, 1]], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn seeded_rotation_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let data = center_columns(&Dataset::from_rows(&rows).unwrap());
        let r = principal_axes(&data).unwrap();
        let rtr = r.t().dot(&r);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(rtr[[i, j]], expected, epsilon = 1e-10);
            }
        }
        // Rotated covariance is diagonal with descending variances.
        let rotated = data.values().dot(&r);
        let cov = rotated.t().dot(&rotated);
        assert!(cov[[0, 1]].abs() < 1e-9 && cov[[0, 2]].abs() < 1e-9 && cov[[1, 2]].abs() < 1e-9);
        assert!(cov[[0, 0]] >= cov[[1, 1]] && cov[[1, 1]] >= cov[[2, 2]]);
    }

    #[test]
    fn fully_degenerate_rotation_is_canonical() {
        let data = Dataset::new(array![[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]).unwrap();
        let r = principal_axes(&data).unwrap();
        assert_eq!(r, Array2::<f64>::eye(3));
    }

    #[test]
    fn principal_axes_needs_two_rows() {
        let data = Dataset::new(array![[1.0, 2.0]]).unwrap();
        assert!(principal_axes(&data).is_err());
    }
}

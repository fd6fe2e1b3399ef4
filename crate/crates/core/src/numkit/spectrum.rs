//! Eigenvalue lists with explicit degeneracy clusters.

use crate::{Error, Result, Scalar};

/// Default relative tolerance under which nodes are treated as coincident.
///
/// Chosen so the confluent pathway engages before the plain
/// `det/Δ` ratio loses more than about half of double precision.
pub const DEFAULT_MERGE_TOL: f64 = 1e-9;

/// A group of coincident nodes: representative value and multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster<T> {
    /// Representative (mean of the merged members).
    pub value: T,
    /// Number of merged members.
    pub multiplicity: usize,
}

impl<T> Cluster<T> {
    /// Cluster of the given multiplicity.
    pub fn new(value: T, multiplicity: usize) -> Self {
        Self { value, multiplicity }
    }
}

/// Groups `values` into clusters, preserving order of first appearance.
///
/// A value joins an existing cluster when it lies within
/// `rel_tol · max(|v|, |c|)` of the cluster's first member `c` (exact
/// equality always merges, so structural zeros form one cluster).
pub fn cluster_values<T: Scalar>(values: &[T], rel_tol: f64) -> Vec<Cluster<T>> {
    let mut firsts: Vec<T> = Vec::new();
    let mut sums: Vec<T> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in values {
        let hit = firsts.iter().position(|c| {
            let d = (v.clone() - c.clone()).magnitude();
            d == 0.0 || d <= rel_tol * v.magnitude().max(c.magnitude())
        });
        match hit {
            Some(k) => {
                sums[k] = sums[k].clone() + v.clone();
                counts[k] += 1;
            }
            None => {
                firsts.push(v.clone());
                sums.push(v.clone());
                counts.push(1);
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| Cluster::new(s / T::from_int(c as i64), c))
        .collect()
}

/// Expands clusters back to a flat node list (each representative repeated).
pub fn expand_clusters<T: Clone>(clusters: &[Cluster<T>]) -> Vec<T> {
    clusters
        .iter()
        .flat_map(|c| std::iter::repeat_n(c.value.clone(), c.multiplicity))
        .collect()
}

/// Strictly positive real eigenvalues, sorted descending, with clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    clusters: Vec<Cluster<f64>>,
    merge_tol: f64,
}

impl Spectrum {
    /// Builds a spectrum with the default merge tolerance.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(values, DEFAULT_MERGE_TOL)
    }

    /// Builds a spectrum with an explicit relative merge tolerance.
    pub fn with_tolerance(mut values: Vec<f64>, merge_tol: f64) -> Result<Self> {
        if !(merge_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "merge tolerance must be nonnegative, got {merge_tol}"
            )));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NotPositiveDefinite { index: i, value: v });
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
        // Values are sorted, so chaining against the first member of the
        // running cluster is equivalent to the generic grouping.
        let clusters = cluster_values(&values, merge_tol);
        Ok(Self {
            values,
            clusters,
            merge_tol,
        })
    }

    /// A single cluster `{value, multiplicity n}`.
    pub fn constant(value: f64, n: usize) -> Result<Self> {
        Self::new(vec![value; n])
    }

    /// Eigenvalues, descending.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Degeneracy clusters in descending order of value.
    pub fn clusters(&self) -> &[Cluster<f64>] {
        &self.clusters
    }

    /// Total dimension (sum of multiplicities).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// `true` for an empty spectrum.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The merge tolerance used to build the clusters.
    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tol
    }

    /// `true` if any cluster has multiplicity above one.
    pub fn is_degenerate(&self) -> bool {
        self.clusters.iter().any(|c| c.multiplicity > 1)
    }

    /// Product of all values.
    pub fn product(&self) -> f64 {
        self.values.iter().product()
    }

    /// Sum of all values.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Spectrum of `f(values)` with the same tolerance.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::with_tolerance(self.values.iter().map(|&v| f(v)).collect(), self.merge_tol)
    }

    /// Same values regrouped under a different tolerance.
    pub fn retolerance(&self, merge_tol: f64) -> Result<Self> {
        Self::with_tolerance(self.values.clone(), merge_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sorts_and_clusters() {
        let s = Spectrum::new(vec![1.0, 3.0, 1.0 + 1e-12, 2.0]).unwrap();
        assert_eq!(s.values()[0], 3.0);
        assert_eq!(s.clusters().len(), 3);
        assert_eq!(s.clusters()[2].multiplicity, 2);
        assert!(s.is_degenerate());
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(matches!(
            Spectrum::new(vec![1.0, -0.5]),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn zeros_merge_exactly() {
        let c = cluster_values(&[0.5, 0.0, 0.0, 0.2], 1e-9);
        assert_eq!(c.len(), 3);
        assert_eq!(c[1], Cluster::new(0.0, 2));
        assert_eq!(expand_clusters(&c), vec![0.5, 0.0, 0.0, 0.2]);
    }

    proptest! {
        #[test]
        fn multiplicities_sum_to_dimension(v in proptest::collection::vec(0.01f64..10.0, 1..8), dup in 0usize..3) {
            let mut vals = v.clone();
            for _ in 0..dup { vals.push(v[0]); }
            let s = Spectrum::new(vals.clone()).unwrap();
            let total: usize = s.clusters().iter().map(|c| c.multiplicity).sum();
            prop_assert_eq!(total, vals.len());
            for w in s.values().windows(2) { prop_assert!(w[0] >= w[1]); }
            for (i, a) in s.clusters().iter().enumerate() {
                for b in &s.clusters()[i + 1..] {
                    prop_assert!((a.value - b.value).abs() > s.merge_tolerance() * a.value.max(b.value));
                }
            }
        }
    }
}

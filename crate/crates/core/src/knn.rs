//! k-nearest-neighbor regression under the count metric.
//!
//! The neighborhood of a query is every training element whose distance to it
//! equals one of the `k` smallest distinct distance values (nonzero ones only,
//! unless zero distances are admitted). Ties are kept, so the neighborhood can
//! be larger than `k`. Because the metric only sees the scalar count, training
//! elements are bucketed by count and a query only walks the bucket keys.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Element, PartialWeighting};
use crate::metric::ProfileTable;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroDistancePolicy {
    /// Only nonzero distances qualify.
    #[default]
    Exclude,
    /// Zero distances count as the smallest value.
    Include,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorPolicy {
    /// Divide the neighbor sum by `k` regardless of neighborhood size.
    LiteralK,
    /// Plain mean over the neighborhood.
    #[default]
    NeighborhoodSize,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub zero_distance: ZeroDistancePolicy,
    pub denominator: DenominatorPolicy,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 5,
            zero_distance: ZeroDistancePolicy::default(),
            denominator: DenominatorPolicy::default(),
        }
    }
}

impl KnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Neighborhood of one query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnnNeighborhood {
    /// Training element indices, ascending.
    pub members: Vec<usize>,
    /// The distinct distance values used, ascending.
    pub distances: Vec<u64>,
    /// Fewer than `k` distinct qualifying distances existed.
    pub degenerate: bool,
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct KnnPrediction {
    pub value: f64,
    pub neighborhood_size: usize,
    pub degenerate: bool,
    /// The neighborhood was empty and the training mean was returned.
    pub fallback: bool,
}

#[derive(Clone, Debug)]
pub struct KnnRegressor<'a> {
    profiles: &'a ProfileTable,
    weighting: &'a PartialWeighting,
    config: KnnConfig,
    buckets: BTreeMap<usize, Vec<usize>>,
    training_mean: f64,
}

impl<'a> KnnRegressor<'a> {
    pub fn fit(profiles: &'a ProfileTable, weighting: &'a PartialWeighting, config: KnnConfig) -> Result<Self> {
        config.validate()?;
        if profiles.variant() != weighting.variant() {
            return Err(Error::VariantMismatch {
                expected: profiles.variant(),
                found: weighting.variant(),
            });
        }
        let training_mean = weighting.mean().ok_or(Error::EmptyTraining)?;
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &i in weighting.domain() {
            buckets.entry(profiles.count_at(i)).or_default().push(i);
        }
        Ok(KnnRegressor {
            profiles,
            weighting,
            config,
            buckets,
            training_mean,
        })
    }

    pub fn config(&self) -> KnnConfig {
        self.config
    }

    pub fn neighborhood(&self, x: Element) -> Result<KnnNeighborhood> {
        let cx = self.profiles.c_count(x)?;
        let dist = |c: usize| cx.abs_diff(c) as u64;
        let admit_zero = self.config.zero_distance == ZeroDistancePolicy::Include;

        let distinct: BTreeSet<u64> = self
            .buckets
            .keys()
            .map(|&c| dist(c))
            .filter(|&d| admit_zero || d > 0)
            .collect();
        let distances: Vec<u64> = distinct.into_iter().take(self.config.k).collect();
        let degenerate = distances.len() < self.config.k;

        let mut members: Vec<usize> = self
            .buckets
            .iter()
            .filter(|(&c, _)| distances.binary_search(&dist(c)).is_ok())
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        members.sort_unstable();
        Ok(KnnNeighborhood {
            members,
            distances,
            degenerate,
        })
    }

    pub fn predict(&self, x: Element) -> Result<KnnPrediction> {
        let nb = self.neighborhood(x)?;
        if nb.members.is_empty() {
            return Ok(KnnPrediction {
                value: self.training_mean,
                neighborhood_size: 0,
                degenerate: nb.degenerate,
                fallback: true,
            });
        }
        let mut sum = 0.0;
        for &i in &nb.members {
            sum += self.weighting.get(i).ok_or(Error::MissingWeight { index: i })?;
        }
        let denom = match self.config.denominator {
            DenominatorPolicy::LiteralK => self.config.k,
            DenominatorPolicy::NeighborhoodSize => nb.members.len(),
        };
        Ok(KnnPrediction {
            value: sum / denom as f64,
            neighborhood_size: nb.members.len(),
            degenerate: nb.degenerate,
            fallback: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DirectedGraph, NeighborOptions, WeightRange};

    fn toy_origins() -> (DirectedGraph, PartialWeighting) {
        let g = DirectedGraph::from_edges([
            ("a", "1"),
            ("a", "2"),
            ("b", "1"),
            ("b", "3"),
            ("c", "2"),
            ("c", "4"),
            ("d", "3"),
        ])
        .unwrap();
        let w = PartialWeighting::origins(&g, WeightRange::UNIT, [("b", 0.3), ("c", 0.6)]).unwrap();
        (g, w)
    }

    #[test]
    fn toy_query_a_k1() {
        let (g, w) = toy_origins();
        let t = ProfileTable::build(&g, &w, 0.2, NeighborOptions::default()).unwrap();
        let knn = KnnRegressor::fit(
            &t,
            &w,
            KnnConfig {
                k: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let a = Element::Origin(g.origin("a").unwrap());
        // C(a)=2, C(b)=C(c)=1: both training origins sit at distance 1.
        let nb = knn.neighborhood(a).unwrap();
        let expect: Vec<usize> = ["b", "c"].iter().map(|s| g.origin(s).unwrap().index()).collect();
        assert_eq!(nb.members, expect);
        assert_eq!(nb.distances, [1]);
        assert!(!nb.degenerate);

        let p = knn.predict(a).unwrap();
        assert!((p.value - 0.45).abs() < 1e-15);
        assert!(!p.fallback);

        let lit = KnnRegressor::fit(
            &t,
            &w,
            KnnConfig {
                k: 1,
                denominator: DenominatorPolicy::LiteralK,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((lit.predict(a).unwrap().value - 0.9).abs() < 1e-15);
    }

    #[test]
    fn all_equivalent_falls_back_to_mean() {
        let (g, w) = toy_origins();
        let t = ProfileTable::build(&g, &w, 0.2, NeighborOptions::default()).unwrap();
        let knn = KnnRegressor::fit(&t, &w, KnnConfig::default()).unwrap();
        // d has count 1 like every training origin.
        let d = Element::Origin(g.origin("d").unwrap());
        let nb = knn.neighborhood(d).unwrap();
        assert!(nb.members.is_empty());
        assert!(nb.degenerate);
        let p = knn.predict(d).unwrap();
        assert!(p.fallback);
        assert!((p.value - 0.45).abs() < 1e-15);

        let incl = KnnRegressor::fit(
            &t,
            &w,
            KnnConfig {
                k: 1,
                zero_distance: ZeroDistancePolicy::Include,
                ..Default::default()
            },
        )
        .unwrap();
        let nb = incl.neighborhood(d).unwrap();
        assert_eq!(nb.members.len(), 2);
        assert_eq!(nb.distances, [0]);
    }

    #[test]
    fn single_neighbor_any_policy() {
        let g = DirectedGraph::from_edges([("a", "1"), ("b", "1"), ("b", "2"), ("c", "2"), ("c", "3")]).unwrap();
        // only b weighted; a sees b (count 1), c sees b (count 1), b sees b (count 1)
        let w = PartialWeighting::origins(&g, WeightRange::UNIT, [("b", 0.3)]).unwrap();
        let t = ProfileTable::build(&g, &w, 0.2, NeighborOptions { exclude_self: true }).unwrap();
        // with self excluded, b has no neighbors -> count 0; a has count 1
        for denominator in [DenominatorPolicy::LiteralK, DenominatorPolicy::NeighborhoodSize] {
            let knn = KnnRegressor::fit(
                &t,
                &w,
                KnnConfig {
                    k: 1,
                    denominator,
                    ..Default::default()
                },
            )
            .unwrap();
            let p = knn.predict(Element::Origin(g.origin("a").unwrap())).unwrap();
            assert_eq!(p.value, 0.3);
            assert_eq!(p.neighborhood_size, 1);
        }
    }

    #[test]
    fn zero_k_rejected() {
        let (g, w) = toy_origins();
        let t = ProfileTable::build(&g, &w, 0.2, NeighborOptions::default()).unwrap();
        assert!(KnnRegressor::fit(
            &t,
            &w,
            KnnConfig {
                k: 0,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn empty_training_rejected() {
        let (g, _) = toy_origins();
        let w = PartialWeighting::origins(&g, WeightRange::UNIT, []).unwrap();
        let t = ProfileTable::build(&g, &w, 0.2, NeighborOptions::default()).unwrap();
        assert!(matches!(
            KnnRegressor::fit(&t, &w, KnnConfig::default()),
            Err(Error::EmptyTraining)
        ));
    }
}

//! Count profiles and the count-difference metrics on origins, terminals and
//! edges.
//!
//! For an element `x` with training neighbors `N(x)`, the profile records the
//! mean training weight over `N(x)` and the count `C_h(x)` of neighbors whose
//! weight lies within `h` of that mean. The distance between two elements of
//! the same kind is `|C_h(x) - C_h(y)|`, which vanishes exactly on elements
//! with equal counts. Elements without neighbors get `C_h = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{neighbors, DirectedGraph, Element, NeighborOptions, PartialWeighting, Variant};

/// Smallest bandwidth used when the training weights have zero spread.
pub const MIN_BANDWIDTH: f64 = 1e-12;

/// How the tolerance `h` is chosen.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum Bandwidth {
    /// Population standard deviation of the training weights.
    #[default]
    TrainingStdDev,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, w: &PartialWeighting) -> Result<f64> {
        match self {
            Bandwidth::Fixed(h) => check_bandwidth(h).map(|_| h),
            Bandwidth::TrainingStdDev => {
                let sd = w.std_dev().ok_or(Error::EmptyTraining)?;
                Ok(if sd > MIN_BANDWIDTH { sd } else { MIN_BANDWIDTH })
            }
        }
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bandwidth h must be positive, got {h}"
        )))
    }
}

/// Cached neighborhood statistics of one element.
#[derive(Clone, Debug, PartialEq)]
pub struct CountProfile {
    pub element: Element,
    pub neighbor_count: usize,
    pub avg_weight: Option<f64>,
    pub c_count: usize,
    pub h: f64,
}

/// Distance between two elements of the same kind.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MetricValue(pub u64);

/// Mean training weight over `neighbors`, `None` for an empty set.
pub fn avg_neighbor_weight(w: &PartialWeighting, neighbors: &[usize]) -> Result<Option<f64>> {
    if neighbors.is_empty() {
        return Ok(None);
    }
    let mut sum = 0.0;
    for &i in neighbors {
        sum += w.get(i).ok_or(Error::MissingWeight { index: i })?;
    }
    Ok(Some(sum / neighbors.len() as f64))
}

/// Number of neighbors whose weight is within `h` of `avg`.
pub fn c_count(w: &PartialWeighting, neighbors: &[usize], avg: Option<f64>, h: f64) -> Result<usize> {
    check_bandwidth(h)?;
    let Some(avg) = avg else {
        return Ok(0);
    };
    let mut count = 0;
    for &i in neighbors {
        let wi = w.get(i).ok_or(Error::MissingWeight { index: i })?;
        if (wi - avg).abs() <= h {
            count += 1;
        }
    }
    Ok(count)
}

/// Full profile of a single element.
pub fn profile(
    g: &DirectedGraph,
    w: &PartialWeighting,
    el: Element,
    h: f64,
    opts: NeighborOptions,
) -> Result<CountProfile> {
    check_bandwidth(h)?;
    let nbrs = neighbors(g, w, el, opts)?;
    let avg_weight = avg_neighbor_weight(w, &nbrs)?;
    let c = c_count(w, &nbrs, avg_weight, h)?;
    Ok(CountProfile {
        element: el,
        neighbor_count: nbrs.len(),
        avg_weight,
        c_count: c,
        h,
    })
}

/// Distinct count values and the size of their classes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieStats {
    pub elements: usize,
    pub classes: usize,
    pub largest_class: usize,
}

/// Profiles for every element of one variant under a fixed weighting and `h`.
#[derive(Clone, Debug)]
pub struct ProfileTable {
    variant: Variant,
    h: f64,
    options: NeighborOptions,
    profiles: Vec<CountProfile>,
}

impl ProfileTable {
    pub fn build(g: &DirectedGraph, w: &PartialWeighting, h: f64, options: NeighborOptions) -> Result<Self> {
        check_bandwidth(h)?;
        let variant = w.variant();
        let profiles = (0..g.element_count(variant))
            .into_par_iter()
            .map(|i| profile(g, w, Element::from_index(variant, i), h, options))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileTable {
            variant,
            h,
            options,
            profiles,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn options(&self) -> NeighborOptions {
        self.options
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[CountProfile] {
        &self.profiles
    }

    fn lookup(&self, el: Element) -> Result<&CountProfile> {
        if el.variant() != self.variant {
            return Err(Error::VariantMismatch {
                expected: self.variant,
                found: el.variant(),
            });
        }
        self.profiles.get(el.index()).ok_or(Error::UnknownElement {
            variant: el.variant(),
            index: el.index(),
        })
    }

    pub fn profile(&self, el: Element) -> Result<&CountProfile> {
        self.lookup(el)
    }

    pub fn c_count(&self, el: Element) -> Result<usize> {
        Ok(self.lookup(el)?.c_count)
    }

    /// Count of element `index`; panics on an out-of-range index.
    pub fn count_at(&self, index: usize) -> usize {
        self.profiles[index].c_count
    }

    pub fn distance(&self, x: Element, y: Element) -> Result<MetricValue> {
        let cx = self.c_count(x)? as i64;
        let cy = self.c_count(y)? as i64;
        Ok(MetricValue(cx.abs_diff(cy)))
    }

    /// Equal counts: the equivalence relation the metric is taken modulo.
    pub fn equivalent(&self, x: Element, y: Element) -> Result<bool> {
        Ok(self.c_count(x)? == self.c_count(y)?)
    }

    pub fn tie_stats(&self) -> TieStats {
        let mut counts: Vec<usize> = self.profiles.iter().map(|p| p.c_count).collect();
        counts.sort_unstable();
        let mut classes = 0;
        let mut largest = 0;
        let mut run = 0;
        for (i, c) in counts.iter().enumerate() {
            if i == 0 || counts[i - 1] != *c {
                classes += 1;
                run = 0;
            }
            run += 1;
            largest = largest.max(run);
        }
        TieStats {
            elements: counts.len(),
            classes,
            largest_class: largest,
        }
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AreaId;
use crate::error::{Error, Result};

/// Small areas, their parents, and aggregation weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<HierarchyEntry>", into = "Vec<HierarchyEntry>")]
pub struct RegionHierarchy {
    small_areas: Vec<AreaId>,
    large_areas: Vec<AreaId>,
    parent_of: BTreeMap<AreaId, AreaId>,
    weight_of: BTreeMap<AreaId, f64>,
    children: BTreeMap<AreaId, Vec<AreaId>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct HierarchyEntry {
    small_area_id: AreaId,
    large_area_id: AreaId,
    weight: f64,
}

impl RegionHierarchy {
    /// Build from `(small, large, weight)` triples. A weight of `None`
    /// means the default of exactly 1.
    pub fn new<I, S, L>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L, Option<f64>)>,
        S: Into<AreaId>,
        L: Into<AreaId>,
    {
        let mut parent_of = BTreeMap::new();
        let mut weight_of = BTreeMap::new();
        let mut children: BTreeMap<AreaId, Vec<AreaId>> = BTreeMap::new();
        for (small, large, weight) in entries {
            let small = small.into();
            let large = large.into();
            let weight = weight.unwrap_or(1.0);
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::InvalidHierarchy(format!(
                    "weight {weight} of `{small}` outside [0, 1]"
                )));
            }
            if parent_of.insert(small.clone(), large.clone()).is_some() {
                return Err(Error::InvalidHierarchy(format!(
                    "small area `{small}` listed more than once"
                )));
            }
            weight_of.insert(small.clone(), weight);
            children.entry(large).or_default().push(small);
        }
        if parent_of.is_empty() {
            return Err(Error::InvalidHierarchy("no areas".into()));
        }
        for kids in children.values_mut() {
            kids.sort();
        }
        Ok(RegionHierarchy {
            small_areas: parent_of.keys().cloned().collect(),
            large_areas: children.keys().cloned().collect(),
            parent_of,
            weight_of,
            children,
        })
    }

    /// Small areas in sorted order.
    pub fn small_areas(&self) -> &[AreaId] {
        &self.small_areas
    }

    /// Large areas in sorted order; each has at least one child.
    pub fn large_areas(&self) -> &[AreaId] {
        &self.large_areas
    }

    /// The parent `p = π(q)` of a small area.
    pub fn parent_of(&self, q: &str) -> Result<&AreaId> {
        self.parent_of
            .get(q)
            .ok_or_else(|| Error::UnknownSmallArea(q.to_owned()))
    }

    pub fn weight_of(&self, q: &str) -> Result<f64> {
        self.weight_of
            .get(q)
            .copied()
            .ok_or_else(|| Error::UnknownSmallArea(q.to_owned()))
    }

    pub fn children(&self, p: &str) -> Result<&[AreaId]> {
        self.children
            .get(p)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownLargeArea(p.to_owned()))
    }

    pub fn is_small(&self, q: &str) -> bool {
        self.parent_of.contains_key(q)
    }

    pub fn is_large(&self, p: &str) -> bool {
        self.children.contains_key(p)
    }

    /// `(small, large, weight)` triples in small-area order.
    pub fn entries(&self) -> impl Iterator<Item = (&AreaId, &AreaId, f64)> {
        self.parent_of
            .iter()
            .map(|(q, p)| (q, p, self.weight_of[q]))
    }
}

impl TryFrom<Vec<HierarchyEntry>> for RegionHierarchy {
    type Error = Error;

    fn try_from(entries: Vec<HierarchyEntry>) -> Result<Self> {
        RegionHierarchy::new(
            entries
                .into_iter()
                .map(|e| (e.small_area_id, e.large_area_id, Some(e.weight))),
        )
    }
}

impl From<RegionHierarchy> for Vec<HierarchyEntry> {
    fn from(h: RegionHierarchy) -> Self {
        h.entries()
            .map(|(q, p, w)| HierarchyEntry {
                small_area_id: q.clone(),
                large_area_id: p.clone(),
                weight: w,
            })
            .collect()
    }
}

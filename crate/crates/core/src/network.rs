//! Weighted directed interference graph and neighborhood exposure.
//!
//! The graph is stored per period. An edge record `source -> target` with
//! weight `w` sets `a[target][source] = w`: the target *receives* from the
//! source, and exposure sums over a unit's in-edges. Edges never cross
//! periods, so the implied full adjacency matrix is block-diagonal.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{NodeKey, PanelDataset};
use crate::error::{Error, Result};
use crate::math::compensated_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub period: String,
    pub weight: f64,
}

impl EdgeRecord {
    pub fn new(
        source: impl Into<String>,
        target: impl Into<String>,
        period: impl Into<String>,
        weight: f64,
    ) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            period: period.into(),
            weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExposureMode {
    /// `G_i = (1/N) sum_j a_ij Z_j`
    Plain,
    /// `G_i = (1/(N S)) sum_j a_ij Z_j`, `S` the mean nonzero weight of the period.
    TradeNormalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Edges pointing at the unit (`a_ij`, j -> i).
    In,
    /// Edges leaving the unit (`a_ji`, i -> j).
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Summarizer {
    WeightedMean,
    /// Weighted sum `sum_j a_ij x_j`.
    Sum,
    /// Number of neighbors with nonzero weight.
    Count,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodSummarySpec {
    pub covariate: String,
    pub summarizer: Summarizer,
    pub direction: Direction,
}

/// Per-unit neighborhood summary. `isolated[i]` is set when unit `i` has
/// no neighbor with positive weight in the chosen direction.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodSummary {
    pub values: Vec<f64>,
    pub isolated: Vec<bool>,
}

/// Immutable, validated view of the interference graph.
#[derive(Debug, Clone)]
pub struct AdjacencyView {
    nodes: Vec<NodeKey>,
    periods: Vec<String>,
    period_of: Vec<usize>,
    period_size: Vec<usize>,
    /// Per target node: `(source node, weight)` sorted by source.
    in_edges: Vec<Vec<(usize, f64)>>,
    /// Per source node: `(target node, weight)` sorted by target.
    out_edges: Vec<Vec<(usize, f64)>>,
    /// Per period: (sum of nonzero weights, count of nonzero weights).
    nonzero: Vec<(f64, usize)>,
}

impl AdjacencyView {
    /// Validates edges against the node registry. Duplicate
    /// `(source, target, period)` records are merged by summing weights.
    pub fn build(edges: &[EdgeRecord], registry: &[NodeKey]) -> Result<Self> {
        let mut index: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        let mut periods: Vec<String> = Vec::new();
        let mut period_lookup: BTreeMap<&str, usize> = BTreeMap::new();
        let mut period_of = Vec::with_capacity(registry.len());
        for (i, key) in registry.iter().enumerate() {
            if index.insert((&key.period, &key.unit), i).is_some() {
                return Err(Error::DuplicateUnit {
                    unit: key.unit.clone(),
                    period: key.period.clone(),
                });
            }
            let p = *period_lookup.entry(&key.period).or_insert_with(|| {
                periods.push(key.period.clone());
                periods.len() - 1
            });
            period_of.push(p);
        }
        let mut period_size = alloc::vec![0usize; periods.len()];
        for &p in &period_of {
            period_size[p] += 1;
        }

        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for e in edges {
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(Error::InvalidWeight {
                    source_unit: e.source.clone(),
                    target_unit: e.target.clone(),
                    weight: e.weight,
                });
            }
            let lookup = |unit: &str| {
                index
                    .get(&(e.period.as_str(), unit))
                    .copied()
                    .ok_or_else(|| Error::UnknownUnit {
                        unit: unit.into(),
                        period: e.period.clone(),
                    })
            };
            let s = lookup(&e.source)?;
            let t = lookup(&e.target)?;
            if s == t {
                return Err(Error::SelfLoop {
                    unit: e.source.clone(),
                    period: e.period.clone(),
                });
            }
            *merged.entry((t, s)).or_insert(0.0) += e.weight;
        }

        let n = registry.len();
        let mut in_edges = alloc::vec![Vec::new(); n];
        let mut out_edges = alloc::vec![Vec::new(); n];
        let mut nonzero_weights: Vec<Vec<f64>> = alloc::vec![Vec::new(); periods.len()];
        // BTreeMap order: by target, then source.
        for (&(t, s), &w) in &merged {
            in_edges[t].push((s, w));
            out_edges[s].push((t, w));
            if w != 0.0 {
                nonzero_weights[period_of[t]].push(w);
            }
        }
        for list in &mut out_edges {
            list.sort_by_key(|&(t, _)| t);
        }
        let nonzero = nonzero_weights
            .into_iter()
            .map(|ws| (compensated_sum(ws.iter().copied()), ws.len()))
            .collect();

        Ok(Self {
            nodes: registry.to_vec(),
            periods,
            period_of,
            period_size,
            in_edges,
            out_edges,
            nonzero,
        })
    }

    /// Graph over the rows of `dataset`, in row order.
    pub fn for_dataset(edges: &[EdgeRecord], dataset: &PanelDataset) -> Result<Self> {
        Self::build(edges, dataset.keys())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeKey] {
        &self.nodes
    }

    pub fn periods(&self) -> &[String] {
        &self.periods
    }

    pub fn node_index(&self, unit: &str, period: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|k| k.unit == unit && k.period == period)
            .ok_or_else(|| Error::UnknownUnit {
                unit: unit.into(),
                period: period.into(),
            })
    }

    pub fn edge_count(&self) -> usize {
        self.in_edges.iter().map(Vec::len).sum()
    }

    /// Number of units in the period block containing `node`.
    pub fn period_population(&self, node: usize) -> usize {
        self.period_size[self.period_of[node]]
    }

    /// Mean nonzero weight `S` of the period containing `node`, if any.
    pub fn mean_nonzero_weight(&self, node: usize) -> Option<f64> {
        let (sum, count) = self.nonzero[self.period_of[node]];
        (count > 0).then(|| sum / count as f64)
    }

    pub fn neighbors(&self, node: usize, direction: Direction) -> &[(usize, f64)] {
        match direction {
            Direction::In => &self.in_edges[node],
            Direction::Out => &self.out_edges[node],
        }
    }

    /// Weight `a_ij` (i receives from j); zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.in_edges[i]
            .binary_search_by_key(&j, |&(s, _)| s)
            .map(|pos| self.in_edges[i][pos].1)
            .unwrap_or(0.0)
    }

    /// Edge records in canonical order (by target node, then source node).
    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (t, list) in self.in_edges.iter().enumerate() {
            for &(s, w) in list {
                out.push(EdgeRecord {
                    source: self.nodes[s].unit.clone(),
                    target: self.nodes[t].unit.clone(),
                    period: self.nodes[t].period.clone(),
                    weight: w,
                });
            }
        }
        out
    }
}

/// Neighborhood treatment `G` for every registered node.
pub fn exposure(adj: &AdjacencyView, treatment: &[f64], mode: ExposureMode) -> Result<Vec<f64>> {
    if treatment.len() != adj.node_count() {
        return Err(Error::LengthMismatch {
            expected: adj.node_count(),
            actual: treatment.len(),
        });
    }
    let scale: Vec<f64> = match mode {
        ExposureMode::Plain => alloc::vec![1.0; adj.periods.len()],
        ExposureMode::TradeNormalized => adj
            .nonzero
            .iter()
            .zip(&adj.periods)
            .map(|(&(sum, count), label)| {
                if count == 0 {
                    Err(Error::DegenerateNormalizer {
                        period: label.clone(),
                    })
                } else {
                    Ok(sum / count as f64)
                }
            })
            .collect::<Result<_>>()?,
    };
    Ok((0..adj.node_count())
        .map(|i| {
            let p = adj.period_of[i];
            let acc = compensated_sum(adj.in_edges[i].iter().map(|&(j, w)| w * treatment[j]));
            acc / (adj.period_size[p] as f64 * scale[p])
        })
        .collect())
}

/// Summary of neighbors' covariate values (e.g. a network-level attribute).
pub fn neighborhood_covariate(
    adj: &AdjacencyView,
    dataset: &PanelDataset,
    spec: &NeighborhoodSummarySpec,
) -> Result<NeighborhoodSummary> {
    let x = dataset.covariate(&spec.covariate)?;
    if x.len() != adj.node_count() {
        return Err(Error::LengthMismatch {
            expected: adj.node_count(),
            actual: x.len(),
        });
    }
    let mut values = Vec::with_capacity(x.len());
    let mut isolated = Vec::with_capacity(x.len());
    for i in 0..adj.node_count() {
        let nbrs = adj.neighbors(i, spec.direction);
        let total_weight = compensated_sum(nbrs.iter().map(|&(_, w)| w));
        let weighted = compensated_sum(nbrs.iter().map(|&(j, w)| w * x[j]));
        let count = nbrs.iter().filter(|&&(_, w)| w > 0.0).count();
        let lonely = !(total_weight > 0.0);
        let v = match spec.summarizer {
            Summarizer::WeightedMean if lonely => 0.0,
            Summarizer::WeightedMean => weighted / total_weight,
            Summarizer::Sum => weighted,
            Summarizer::Count => count as f64,
        };
        values.push(v);
        isolated.push(lonely);
    }
    Ok(NeighborhoodSummary { values, isolated })
}

/// Distinct neighbors with nonzero weight in the given direction.
pub fn degree(adj: &AdjacencyView, node: usize, direction: Direction) -> Result<usize> {
    if node >= adj.node_count() {
        return Err(Error::InvalidArgument("node index out of range"));
    }
    Ok(adj
        .neighbors(node, direction)
        .iter()
        .filter(|&&(_, w)| w != 0.0)
        .count())
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::types::{ClusterId, Side, TimedEdge, VertexId};
use crate::error::{Error, Result};

/// Customers and tables for one (side, cluster, vertex) cell of the
/// franchise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCounts {
    pub customers: u32,
    pub tables: u32,
}

/// Sufficient statistics of the collapsed franchise. Each (side, cluster,
/// vertex) cell holds its customer and table counts; per-vertex table totals
/// are kept alongside.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "CountsRepr", try_from = "CountsRepr")]
pub struct CollapsedCounts {
    cells: BTreeMap<(Side, ClusterId, VertexId), CellCounts>,
    totals: BTreeMap<(Side, ClusterId), CellCounts>,
    global_tables: BTreeMap<VertexId, u32>,
    total_tables: u64,
}

impl CollapsedCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Customer counts from cluster labels, with one table per occupied
    /// cell.
    pub fn from_assignment(edges: &[TimedEdge], clusters: &[ClusterId]) -> Result<Self> {
        if edges.len() != clusters.len() {
            return Err(Error::input(format!(
                "{} edges but {} cluster labels",
                edges.len(),
                clusters.len()
            )));
        }
        let mut counts = Self::new();
        for (e, &k) in edges.iter().zip(clusters) {
            for (side, v) in [(Side::Sender, e.sender), (Side::Recipient, e.recipient)] {
                let first = counts.count(side, k, v) == 0;
                counts.add_customer(side, k, v, first)?;
            }
        }
        Ok(counts)
    }

    /// Builds counts from `(side, cluster, vertex, customers, tables)` rows.
    pub fn from_cells<I>(cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Side, ClusterId, VertexId, u32, u32)>,
    {
        CountsRepr {
            cells: cells.into_iter().collect(),
        }
        .try_into()
    }

    pub fn cell(&self, side: Side, cluster: ClusterId, v: VertexId) -> CellCounts {
        self.cells
            .get(&(side, cluster, v))
            .copied()
            .unwrap_or_default()
    }

    pub fn count(&self, side: Side, cluster: ClusterId, v: VertexId) -> u32 {
        self.cell(side, cluster, v).customers
    }

    pub fn tables(&self, side: Side, cluster: ClusterId, v: VertexId) -> u32 {
        self.cell(side, cluster, v).tables
    }

    /// Customers and tables of one restaurant.
    pub fn cluster_total(&self, side: Side, cluster: ClusterId) -> CellCounts {
        self.totals
            .get(&(side, cluster))
            .copied()
            .unwrap_or_default()
    }

    pub fn global_tables(&self, v: VertexId) -> u32 {
        self.global_tables.get(&v).copied().unwrap_or(0)
    }

    pub fn total_tables(&self) -> u64 {
        self.total_tables
    }

    /// Vertices with at least one table, ascending.
    pub fn seen_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.global_tables.keys().copied()
    }

    pub fn n_seen_vertices(&self) -> usize {
        self.global_tables.len()
    }

    /// Cluster ids with at least one customer, ascending.
    pub fn clusters(&self) -> Vec<ClusterId> {
        let mut ks: Vec<ClusterId> = self
            .totals
            .keys()
            .filter(|(side, _)| *side == Side::Sender)
            .map(|&(_, k)| k)
            .collect();
        ks.dedup();
        ks
    }

    /// Number of edges assigned to a cluster.
    pub fn cluster_size(&self, cluster: ClusterId) -> u32 {
        self.cluster_total(Side::Sender, cluster).customers
    }

    /// Non-empty cells of one side, in key order.
    pub fn cells(
        &self,
        side: Side,
    ) -> impl Iterator<Item = (ClusterId, VertexId, CellCounts)> + '_ {
        self.cells
            .range((side, 0, 0)..=(side, ClusterId::MAX, VertexId::MAX))
            .map(|(&(_, k, v), &c)| (k, v, c))
    }

    /// Non-empty cells of one restaurant.
    pub fn restaurant(
        &self,
        side: Side,
        cluster: ClusterId,
    ) -> impl Iterator<Item = (VertexId, CellCounts)> + '_ {
        self.cells
            .range((side, cluster, 0)..=(side, cluster, VertexId::MAX))
            .map(|(&(_, _, v), &c)| (v, c))
    }

    /// Seats one customer; `new_table` opens a table for it. Joining an
    /// existing table requires the cell to be occupied.
    pub fn add_customer(
        &mut self,
        side: Side,
        cluster: ClusterId,
        v: VertexId,
        new_table: bool,
    ) -> Result<()> {
        let cell = self.cells.entry((side, cluster, v)).or_default();
        if !new_table && cell.tables == 0 {
            return Err(Error::invariant(format!(
                "customer for vertex {v} cannot join a table in empty cell ({side:?}, {cluster})"
            )));
        }
        cell.customers += 1;
        let total = self.totals.entry((side, cluster)).or_default();
        total.customers += 1;
        if new_table {
            cell.tables += 1;
            total.tables += 1;
            *self.global_tables.entry(v).or_insert(0) += 1;
            self.total_tables += 1;
        }
        Ok(())
    }

    /// Overwrites the table count of an occupied cell.
    pub fn set_tables(
        &mut self,
        side: Side,
        cluster: ClusterId,
        v: VertexId,
        tables: u32,
    ) -> Result<()> {
        let cell = self.cells.get_mut(&(side, cluster, v)).ok_or_else(|| {
            Error::invariant(format!("no customers in cell ({side:?}, {cluster}, {v})"))
        })?;
        if tables == 0 || tables > cell.customers {
            return Err(Error::invariant(format!(
                "table count {tables} outside 1..={} for cell ({side:?}, {cluster}, {v})",
                cell.customers
            )));
        }
        let old = cell.tables;
        cell.tables = tables;
        let total = self
            .totals
            .get_mut(&(side, cluster))
            .expect("cell implies total");
        total.tables = total.tables - old + tables;
        let global = self.global_tables.entry(v).or_insert(0);
        *global = *global - old + tables;
        self.total_tables = self.total_tables - old as u64 + tables as u64;
        Ok(())
    }

    /// Checks every structural invariant.
    pub fn check_invariants(&self) -> Result<()> {
        let mut totals: BTreeMap<(Side, ClusterId), CellCounts> = BTreeMap::new();
        let mut global: BTreeMap<VertexId, u32> = BTreeMap::new();
        for (&(side, k, v), c) in &self.cells {
            if c.customers == 0 || c.tables == 0 || c.tables > c.customers {
                return Err(Error::invariant(format!(
                    "cell ({side:?}, {k}, {v}) has {} customers at {} tables",
                    c.customers, c.tables
                )));
            }
            let t = totals.entry((side, k)).or_default();
            t.customers += c.customers;
            t.tables += c.tables;
            *global.entry(v).or_insert(0) += c.tables;
        }
        if totals != self.totals {
            return Err(Error::invariant("restaurant totals disagree with cells"));
        }
        if global != self.global_tables {
            return Err(Error::invariant("global table counts disagree with cells"));
        }
        if global.values().map(|&m| m as u64).sum::<u64>() != self.total_tables {
            return Err(Error::invariant("total table count disagrees with cells"));
        }
        for k in self.clusters() {
            if self.cluster_total(Side::Sender, k).customers
                != self.cluster_total(Side::Recipient, k).customers
            {
                return Err(Error::invariant(format!(
                    "cluster {k} has unequal sender and recipient counts"
                )));
            }
        }
        Ok(())
    }

    /// True when both hold the same customers in the same cells, ignoring
    /// tables.
    pub fn same_customers(&self, other: &CollapsedCounts) -> bool {
        self.cells.len() == other.cells.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|((ka, a), (kb, b))| ka == kb && a.customers == b.customers)
    }
}

#[derive(Serialize, Deserialize)]
struct CountsRepr {
    /// `(side, cluster, vertex, customers, tables)` rows.
    cells: Vec<(Side, ClusterId, VertexId, u32, u32)>,
}

impl From<CollapsedCounts> for CountsRepr {
    fn from(c: CollapsedCounts) -> Self {
        CountsRepr {
            cells: c
                .cells
                .iter()
                .map(|(&(s, k, v), cell)| (s, k, v, cell.customers, cell.tables))
                .collect(),
        }
    }
}

impl TryFrom<CountsRepr> for CollapsedCounts {
    type Error = Error;

    fn try_from(repr: CountsRepr) -> Result<Self> {
        let mut counts = CollapsedCounts::new();
        for (side, k, v, customers, tables) in repr.cells {
            if customers == 0 {
                continue;
            }
            counts
                .cells
                .insert((side, k, v), CellCounts { customers, tables });
            let t = counts.totals.entry((side, k)).or_default();
            t.customers += customers;
            t.tables += tables;
            *counts.global_tables.entry(v).or_insert(0) += tables;
            counts.total_tables += tables as u64;
        }
        counts.check_invariants()?;
        Ok(counts)
    }
}

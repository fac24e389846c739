//! Global degree-of-freedom numbering with a (graph entity, variable) block
//! structure.

use crate::error::{Error, Result};
use crate::geom::graph::MixedDimGraph;
use std::collections::HashMap;
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    /// Subdomain (graph node) id.
    Node(usize),
    /// Interface (graph edge) id.
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct DofBlock {
    pub entity: Entity,
    pub variable: String,
    /// Unknowns per cell (or mortar cell).
    pub per_unit: usize,
    pub units: usize,
    pub offset: usize,
}

impl DofBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.per_unit * self.units
    }
}

#[derive(Debug, Clone, Default)]
pub struct DofManager {
    blocks: Vec<DofBlock>,
    lookup: HashMap<(Entity, String), usize>,
    total: usize,
}

impl DofManager {
    /// Number blocks in the given order: `(entity, variable, per_unit, units)`.
    pub fn new(spec: impl IntoIterator<Item = (Entity, String, usize, usize)>) -> Result<Self> {
        let mut dm = DofManager::default();
        for (entity, variable, per_unit, units) in spec {
            let key = (entity, variable.clone());
            if dm.lookup.contains_key(&key) {
                return Err(Error::Assembly(format!("variable '{variable}' declared twice on {entity:?}")));
            }
            dm.lookup.insert(key, dm.blocks.len());
            dm.blocks.push(DofBlock { entity, variable, per_unit, units, offset: dm.total });
            dm.total += per_unit * units;
        }
        Ok(dm)
    }

    /// Numbering from the variables declared on the graph: nodes in order,
    /// then edges, each in declaration order.
    pub fn from_graph(g: &MixedDimGraph) -> Result<Self> {
        let mut spec = Vec::new();
        for n in &g.nodes {
            for (v, k) in &n.variables {
                spec.push((Entity::Node(n.id), v.clone(), *k, n.grid.num_cells()));
            }
        }
        for e in &g.edges {
            for (v, k) in &e.variables {
                spec.push((Entity::Edge(e.id), v.clone(), *k, e.mortar.num_cells()));
            }
        }
        Self::new(spec)
    }

    pub fn num_dofs(&self) -> usize {
        self.total
    }

    pub fn blocks(&self) -> &[DofBlock] {
        &self.blocks
    }

    pub fn block_index(&self, entity: Entity, variable: &str) -> Option<usize> {
        self.lookup.get(&(entity, variable.to_string())).copied()
    }

    pub fn range(&self, entity: Entity, variable: &str) -> Option<Range<usize>> {
        self.block_index(entity, variable).map(|b| self.blocks[b].range())
    }

    /// Like [`range`](Self::range) but an error when the block is missing.
    pub fn get(&self, entity: Entity, variable: &str) -> Result<Range<usize>> {
        self.range(entity, variable).ok_or_else(|| Error::Assembly(format!("no variable '{variable}' registered on {entity:?}")))
    }

    /// The block containing global dof `i`.
    pub fn locate(&self, i: usize) -> Option<&DofBlock> {
        self.blocks.iter().find(|b| b.range().contains(&i))
    }

    /// Copy of `x` restricted to a block.
    pub fn slice<'a>(&self, x: &'a [f64], entity: Entity, variable: &str) -> Result<&'a [f64]> {
        Ok(&x[self.get(entity, variable)?])
    }
}

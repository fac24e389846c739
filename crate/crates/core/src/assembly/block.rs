//! Global block assembly: contributions keyed by (entity, variable) pairs are
//! scattered into one sparse system using the dof numbering.

use super::dofs::{DofManager, Entity};
use crate::error::{Error, Result};
use crate::geom::graph::MixedDimGraph;
use crate::sparse::{max_abs, sub_block, SpMat, Triplets};

pub type BlockKey = (Entity, String);

/// Assembled linear system together with its dof numbering.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub matrix: SpMat,
    pub rhs: Vec<f64>,
    pub dofs: DofManager,
}

/// Matrix and right-hand-side pieces, each addressed by block.
#[derive(Debug, Clone, Default)]
pub struct Contributions {
    pub matrix: Vec<(BlockKey, BlockKey, SpMat)>,
    pub rhs: Vec<(BlockKey, Vec<f64>)>,
}

fn key(e: Entity, v: &str) -> BlockKey {
    (e, v.to_string())
}

impl Contributions {
    pub fn mat(&mut self, row: (Entity, &str), col: (Entity, &str), m: SpMat) {
        self.matrix.push((key(row.0, row.1), key(col.0, col.1), m));
    }

    pub fn rhs(&mut self, row: (Entity, &str), v: Vec<f64>) {
        self.rhs.push((key(row.0, row.1), v));
    }

    pub fn extend(&mut self, o: Contributions) {
        self.matrix.extend(o.matrix);
        self.rhs.extend(o.rhs);
    }

    /// Scatter into a global system. Every dof block must receive at least
    /// one matrix contribution in its rows.
    pub fn assemble(&self, dofs: &DofManager) -> Result<BlockSystem> {
        let n = dofs.num_dofs();
        let nnz = self.matrix.iter().map(|m| m.2.nnz()).sum();
        let mut t = Triplets::with_capacity(n, n, nnz);
        let mut covered = vec![false; dofs.blocks().len()];
        for ((re, rv), (ce, cv), m) in &self.matrix {
            let r = dofs.get(*re, rv)?;
            let c = dofs.get(*ce, cv)?;
            if m.rows() != r.len() || m.cols() != c.len() {
                return Err(Error::Assembly(format!(
                    "block ({re:?} {rv}, {ce:?} {cv}) is {}x{} but the dof ranges are {}x{}",
                    m.rows(),
                    m.cols(),
                    r.len(),
                    c.len()
                )));
            }
            covered[dofs.block_index(*re, rv).unwrap()] = true;
            t.push_block(r.start, c.start, m);
        }
        for (b, ok) in dofs.blocks().iter().zip(&covered) {
            if !ok && !b.range().is_empty() {
                return Err(Error::Assembly(format!("no discretization registered for variable '{}' on {:?}", b.variable, b.entity)));
            }
        }
        let mut rhs = vec![0.0; n];
        for ((e, v), vals) in &self.rhs {
            let r = dofs.get(*e, v)?;
            if vals.len() != r.len() {
                return Err(Error::Assembly(format!("right-hand side for {e:?} {v} has the wrong length")));
            }
            for (i, x) in r.zip(vals) {
                rhs[i] += x;
            }
        }
        Ok(BlockSystem { matrix: t.into_csr(), rhs, dofs: dofs.clone() })
    }
}

impl BlockSystem {
    pub fn block(&self, row: (Entity, &str), col: (Entity, &str)) -> Result<SpMat> {
        let r = self.dofs.get(row.0, row.1)?;
        let c = self.dofs.get(col.0, col.1)?;
        Ok(sub_block(&self.matrix, r, c))
    }
}

/// Blocks that couple the two subdomains of an interface directly, which
/// must not happen: all such coupling goes through the mortar variables.
/// Returns a description of every offending block.
pub fn direct_coupling_violations(sys: &BlockSystem, g: &MixedDimGraph) -> Vec<String> {
    let mut out = Vec::new();
    for e in &g.edges {
        for (a, b) in [(e.high, e.low), (e.low, e.high)] {
            for ba in sys.dofs.blocks().iter().filter(|x| x.entity == Entity::Node(a)) {
                for bb in sys.dofs.blocks().iter().filter(|x| x.entity == Entity::Node(b)) {
                    let m = sub_block(&sys.matrix, ba.range(), bb.range());
                    if max_abs(&m) != 0.0 {
                        out.push(format!("edge {}: block ({} on node {a}, {} on node {b}) is nonzero", e.id, ba.variable, bb.variable));
                    }
                }
            }
        }
    }
    out
}

//! Link-based and proximity checks: connectivity of the link graph and
//! membership reports for spatially placed monitor agents.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{neighbors_within, AgentId, World};
use crate::vomas::ast::{Placement, VOAgentDef};
use crate::vomas::eval::{EvalContext, EvalError, Value};
use crate::vomas::Expr;

/// Connectivity summary of the link graph restricted to a set of agents.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentReport {
    pub component_count: usize,
    /// Component sizes, descending.
    pub component_sizes: Vec<usize>,
    /// Largest component size over total agents considered; 1.0 for the
    /// empty set so "fully connected" invariants hold vacuously.
    pub largest_fraction: f64,
}

/// Who is inside a spatial monitor's disk at one tick, with optional
/// per-member predicate outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityReport {
    pub vo_agent: String,
    pub tick: u64,
    pub members: Vec<AgentId>,
    /// Present when a predicate was supplied: (member, predicate outcome).
    pub outcomes: Option<Vec<(AgentId, bool)>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ValidatorError {
    #[error("vo agent `{0}` has no spatial placement")]
    NonSpatialVoAgent(String),
    #[error("predicate failed for agent {agent}: {source}")]
    Predicate {
        agent: AgentId,
        source: EvalError,
    },
}

// Weighted quick-union with path halving.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Components of the undirected link graph over the given agents (or, with
/// a kind filter, the matching subset). Links leaving the subset are
/// ignored.
pub fn connected_components(world: &World, kind_filter: Option<&str>) -> ComponentReport {
    let ids: Vec<AgentId> = world
        .agents()
        .filter(|a| kind_filter.is_none_or(|k| a.kind == k))
        .map(|a| a.id)
        .collect();
    components_of(world, &ids)
}

/// Same as [`connected_components`] but over an explicit id set (ascending);
/// this is the DSL surface `components(set)`.
pub fn components_of(world: &World, ids: &[AgentId]) -> ComponentReport {
    let index: BTreeMap<AgentId, usize> =
        ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    for link in world.links() {
        let (a, b) = link.endpoints();
        if let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) {
            uf.union(ia, ib);
        }
    }
    let mut sizes_by_root: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..ids.len() {
        *sizes_by_root.entry(uf.find(i)).or_insert(0) += 1;
    }
    let mut component_sizes: Vec<usize> = sizes_by_root.into_values().collect();
    component_sizes.sort_unstable_by(|a, b| b.cmp(a));
    let total = ids.len();
    let largest_fraction = if total == 0 {
        1.0
    } else {
        component_sizes[0] as f64 / total as f64
    };
    ComponentReport {
        component_count: component_sizes.len(),
        component_sizes,
        largest_fraction,
    }
}

/// Report who is inside a spatial monitor's disk, optionally evaluating a
/// boolean predicate with each member bound in turn.
pub fn proximity_report(
    vo: &VOAgentDef,
    world: &World,
    tick: u64,
    predicate: Option<(&str, &Expr)>,
) -> Result<ProximityReport, ValidatorError> {
    let (x, y, radius) = match vo.placement {
        Placement::Spatial { x, y, radius } => (x, y, radius),
        Placement::Global => return Err(ValidatorError::NonSpatialVoAgent(vo.name.clone())),
    };
    let members = neighbors_within(world, (x, y), radius, vo.kind_filter.as_deref());
    let outcomes = match predicate {
        None => None,
        Some((binder, expr)) => {
            let mut results = Vec::with_capacity(members.len());
            for &member in &members {
                let ctx = EvalContext::new(world, tick).with_binding(binder, member);
                let outcome = match ctx.eval(expr) {
                    Ok(Value::Bool(b)) => b,
                    Ok(_) => {
                        return Err(ValidatorError::Predicate {
                            agent: member,
                            source: EvalError::NotBoolean,
                        })
                    }
                    Err(source) => {
                        return Err(ValidatorError::Predicate {
                            agent: member,
                            source,
                        })
                    }
                };
                results.push((member, outcome));
            }
            Some(results)
        }
    };
    Ok(ProximityReport {
        vo_agent: vo.name.clone(),
        tick,
        members,
        outcomes,
    })
}

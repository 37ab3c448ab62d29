//! Deterministic discrete-tick world: agent storage, toroidal geometry,
//! links, seeded randomness, and the run loop that interleaves model steps
//! with overlay evaluation.

pub mod geometry;
pub mod params;
pub mod rng;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use geometry::{neighbors_within, toroidal_distance};
pub use params::{ParamValue, Params};
pub use rng::EngineRng;
pub use run::{compute_run_id, run_simulation, run_simulation_with_console, RunConfig, TraceOptions};

/// Unique agent identifier. Ids are assigned in creation order and never
/// reused within a run; all iteration over agents is ascending by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A named scalar attribute value.
#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Real(f64),
    Bool(bool),
    Sym(String),
}

impl AttrValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Int(n) => Some(*n as f64),
            AttrValue::Real(x) => Some(*x),
            _ => None,
        }
    }
}

/// An undirected link between two live agents. Endpoints are stored in
/// ascending id order so the pair is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Link(AgentId, AgentId);

impl Link {
    pub fn new(a: AgentId, b: AgentId) -> Self {
        if a <= b {
            Link(a, b)
        } else {
            Link(b, a)
        }
    }

    pub fn endpoints(&self) -> (AgentId, AgentId) {
        (self.0, self.1)
    }

    pub fn touches(&self, id: AgentId) -> bool {
        self.0 == id || self.1 == id
    }
}

/// One simulated agent: immutable kind, toroidal position, named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimAgent {
    pub id: AgentId,
    pub kind: String,
    pub x: f64,
    pub y: f64,
    pub attributes: BTreeMap<String, AttrValue>,
}

impl SimAgent {
    pub fn attr(&self, name: &str) -> Option<&AttrValue> {
        self.attributes.get(name)
    }
}

/// The simulated population on a 2-D torus at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub width: f64,
    pub height: f64,
    pub tick: u64,
    agents: BTreeMap<AgentId, SimAgent>,
    links: BTreeSet<Link>,
    next_id: u64,
    pub rng: EngineRng,
    pub model: String,
    pub params: Params,
    // Mutations queued during a step, applied at end of tick so expressions
    // always see a consistent snapshot.
    pending_spawns: Vec<SimAgent>,
    pending_removals: BTreeSet<AgentId>,
}

/// Agents created and removed by one model step, in application order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepEvents {
    pub created: Vec<AgentId>,
    pub removed: Vec<AgentId>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("parameter `{name}`: expected {expected}, got `{value}`")]
    Parameter {
        name: String,
        expected: String,
        value: String,
    },
    #[error("model step failed: {0}")]
    ModelPanic(String),
}

impl World {
    pub fn new(model: &str, params: Params, seed: u64) -> Self {
        let width = params.get_number("width").unwrap_or(50.0);
        let height = params.get_number("height").unwrap_or(50.0);
        World {
            width,
            height,
            tick: 0,
            agents: BTreeMap::new(),
            links: BTreeSet::new(),
            next_id: 0,
            rng: EngineRng::new(seed),
            model: model.to_string(),
            params,
            pending_spawns: Vec::new(),
            pending_removals: BTreeSet::new(),
        }
    }

    /// Rebuild a world view from recorded state (offline replay). The rng is
    /// inert: replayed evaluation never draws from it.
    pub fn from_snapshot(
        width: f64,
        height: f64,
        tick: u64,
        agents: Vec<SimAgent>,
        links: Vec<(u64, u64)>,
    ) -> Self {
        let next_id = agents.iter().map(|a| a.id.0 + 1).max().unwrap_or(0);
        World {
            width,
            height,
            tick,
            agents: agents.into_iter().map(|a| (a.id, a)).collect(),
            links: links
                .into_iter()
                .map(|(a, b)| Link::new(AgentId(a), AgentId(b)))
                .collect(),
            next_id,
            rng: EngineRng::new(0),
            model: String::new(),
            params: Params::default(),
            pending_spawns: Vec::new(),
            pending_removals: BTreeSet::new(),
        }
    }

    /// Immediately insert an agent. Position is wrapped onto the torus.
    pub fn add_agent(
        &mut self,
        kind: &str,
        x: f64,
        y: f64,
        attributes: BTreeMap<String, AttrValue>,
    ) -> AgentId {
        let id = AgentId(self.next_id);
        self.next_id += 1;
        let (x, y) = self.wrap(x, y);
        self.agents.insert(
            id,
            SimAgent {
                id,
                kind: kind.to_string(),
                x,
                y,
                attributes,
            },
        );
        id
    }

    /// Queue an agent for creation at end of the current tick. The id is
    /// assigned now (creation order) but the agent is not visible until the
    /// queue is applied.
    pub fn spawn_deferred(
        &mut self,
        kind: &str,
        x: f64,
        y: f64,
        attributes: BTreeMap<String, AttrValue>,
    ) -> AgentId {
        let id = AgentId(self.next_id);
        self.next_id += 1;
        let (x, y) = self.wrap(x, y);
        self.pending_spawns.push(SimAgent {
            id,
            kind: kind.to_string(),
            x,
            y,
            attributes,
        });
        id
    }

    /// Queue an agent for removal at end of the current tick.
    pub fn remove_deferred(&mut self, id: AgentId) {
        self.pending_removals.insert(id);
    }

    /// Apply queued spawns and removals; links to removed agents are purged
    /// in the same tick. Returns what changed, in application order.
    pub fn apply_pending(&mut self) -> StepEvents {
        let mut events = StepEvents::default();
        for agent in self.pending_spawns.drain(..) {
            events.created.push(agent.id);
            self.agents.insert(agent.id, agent);
        }
        for id in std::mem::take(&mut self.pending_removals) {
            if self.agents.remove(&id).is_some() {
                events.removed.push(id);
                self.links.retain(|link| !link.touches(id));
            }
        }
        events
    }

    pub fn add_link(&mut self, a: AgentId, b: AgentId) {
        debug_assert!(self.agents.contains_key(&a) && self.agents.contains_key(&b));
        self.links.insert(Link::new(a, b));
    }

    pub fn remove_link(&mut self, a: AgentId, b: AgentId) {
        self.links.remove(&Link::new(a, b));
    }

    /// Agents in ascending id order, always.
    pub fn agents(&self) -> impl Iterator<Item = &SimAgent> {
        self.agents.values()
    }

    pub fn agent(&self, id: AgentId) -> Option<&SimAgent> {
        self.agents.get(&id)
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Option<&mut SimAgent> {
        self.agents.get_mut(&id)
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.agents.keys().copied().collect()
    }

    pub fn population(&self) -> usize {
        self.agents.len()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.iter()
    }

    pub fn has_link(&self, a: AgentId, b: AgentId) -> bool {
        self.links.contains(&Link::new(a, b))
    }

    fn wrap(&self, x: f64, y: f64) -> (f64, f64) {
        (wrap_coord(x, self.width), wrap_coord(y, self.height))
    }

    /// Move an agent by a heading (radians) and step length, wrapping around
    /// the torus.
    pub fn move_by(&mut self, id: AgentId, heading: f64, step: f64) {
        let (w, h) = (self.width, self.height);
        if let Some(agent) = self.agents.get_mut(&id) {
            agent.x = wrap_coord(agent.x + step * heading.cos(), w);
            agent.y = wrap_coord(agent.y + step * heading.sin(), h);
        }
    }

    pub fn set_position(&mut self, id: AgentId, x: f64, y: f64) {
        let (x, y) = self.wrap(x, y);
        if let Some(agent) = self.agents.get_mut(&id) {
            agent.x = x;
            agent.y = y;
        }
    }

    /// Panics (debug builds) if a structural invariant is broken: positions
    /// off the torus or links to dead agents.
    pub fn debug_check_invariants(&self) {
        #[cfg(debug_assertions)]
        {
            for agent in self.agents.values() {
                debug_assert!(
                    agent.x >= 0.0 && agent.x < self.width,
                    "agent {} x={} outside [0,{})",
                    agent.id,
                    agent.x,
                    self.width
                );
                debug_assert!(
                    agent.y >= 0.0 && agent.y < self.height,
                    "agent {} y={} outside [0,{})",
                    agent.id,
                    agent.y,
                    self.height
                );
            }
            for link in &self.links {
                let (a, b) = link.endpoints();
                debug_assert!(
                    self.agents.contains_key(&a) && self.agents.contains_key(&b),
                    "link {a}-{b} references a dead agent"
                );
            }
        }
    }
}

/// Wrap a coordinate into [0, dim). `rem_euclid` alone can return `dim`
/// when the argument is a tiny negative number, so clamp that case back.
pub fn wrap_coord(v: f64, dim: f64) -> f64 {
    let wrapped = v.rem_euclid(dim);
    if wrapped >= dim {
        0.0
    } else {
        wrapped
    }
}

/// Instantiate a registered model's initial population at tick 0.
/// Identical (model, params, seed) yields an identical world.
pub fn init_world(model_name: &str, params: &Params, seed: u64) -> Result<World, EngineError> {
    let model = crate::models::registry()
        .find(model_name)
        .ok_or_else(|| EngineError::UnknownModel(model_name.to_string()))?;
    let params = model.resolve_params(params)?;
    let mut world = World::new(model_name, params, seed);
    (model.init)(&mut world)?;
    world.debug_check_invariants();
    Ok(world)
}

/// Advance the world by exactly one tick using the registered model's step
/// function, then apply queued spawns/removals.
pub fn step_model(world: &mut World) -> Result<StepEvents, EngineError> {
    let model = crate::models::registry()
        .find(&world.model)
        .ok_or_else(|| EngineError::UnknownModel(world.model.clone()))?;
    (model.step)(world)?;
    let events = world.apply_pending();
    world.tick += 1;
    world.debug_check_invariants();
    Ok(events)
}

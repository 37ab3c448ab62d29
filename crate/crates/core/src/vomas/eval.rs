//! Pure expression evaluation against a read-only world at one tick.
//!
//! Evaluation is deterministic and total: anything that cannot produce a
//! scalar (empty-set min, division by zero, a missing attribute) is an
//! [`EvalError`], which callers log as data rather than crash on.
//!
//! Rules for the corners the language definition leaves open:
//! - `count`/`sum` over an empty set are 0; `min`/`max`/`avg` fail.
//! - `forall` over an empty set is true, `exists` is false.
//! - `and`/`or` short-circuit; quantifiers stop at the first witness or
//!   counterexample. Observable only through timing, never through results.
//! - Number comparisons are exact; `approx(a, b, eps)` is the tolerant form.
//! - A set filter on an attribute an agent does not carry, or whose type
//!   does not match the literal, simply excludes that agent. Reading such an
//!   attribute anywhere else (aggregates, quantifier bodies) is an error.
//! - Arithmetic that leaves the finite range fails rather than producing
//!   infinities in watch series.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::engine::{AgentId, AttrValue, World};

use super::ast::{
    AggFn, ArithOp, CmpOp, Expr, Filter, Literal, Placement, Quantifier, SetExpr, VOAgentDef,
};

/// A scalar produced by expression evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Sym(String),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Sym(_) => "symbol",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Sym(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} over an empty set")]
    EmptySet { func: &'static str },
    #[error("division by zero")]
    DivByZero,
    #[error("agent {agent} has no attribute `{attr}`")]
    MissingAttribute { agent: AgentId, attr: String },
    #[error("attribute `{attr}` of agent {agent} is not a number")]
    NonNumericAttribute { agent: AgentId, attr: String },
    #[error("expected {expected}, got {found}")]
    TypeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("comparison of {lhs} with {rhs}")]
    IncomparableValues {
        lhs: &'static str,
        rhs: &'static str,
    },
    #[error("result is not a finite number")]
    NonFinite,
    #[error("expression result is not boolean")]
    NotBoolean,
    #[error("no vo agent named `{0}` in scope")]
    UnknownVoAgent(String),
    #[error("binder `{0}` is not bound")]
    UnboundBinder(String),
}

/// Evaluation context: the world view, the current tick, declared monitor
/// agents (for `within`), and quantifier bindings.
pub struct EvalContext<'a> {
    world: &'a World,
    tick: u64,
    vo_agents: &'a [VOAgentDef],
    bindings: Vec<(String, AgentId)>,
}

impl<'a> EvalContext<'a> {
    pub fn new(world: &'a World, tick: u64) -> Self {
        EvalContext {
            world,
            tick,
            vo_agents: &[],
            bindings: Vec::new(),
        }
    }

    pub fn with_vo_agents(mut self, vo_agents: &'a [VOAgentDef]) -> Self {
        self.vo_agents = vo_agents;
        self
    }

    pub fn with_binding(mut self, binder: &str, agent: AgentId) -> Self {
        self.bindings.push((binder.to_string(), agent));
        self
    }

    /// Evaluate an expression to a scalar. Never mutates the world.
    pub fn eval(&self, expr: &Expr) -> Result<Value, EvalError> {
        // bindings stack mutates during quantification, so work on a scratch
        // copy of the stack rather than requiring &mut self
        let mut scratch = Evaluator {
            world: self.world,
            tick: self.tick,
            vo_agents: self.vo_agents,
            bindings: self.bindings.clone(),
        };
        scratch.eval(expr)
    }

    /// Resolve a set expression to ascending agent ids.
    pub fn resolve_set(&self, set: &SetExpr) -> Result<Vec<AgentId>, EvalError> {
        let scratch = Evaluator {
            world: self.world,
            tick: self.tick,
            vo_agents: self.vo_agents,
            bindings: self.bindings.clone(),
        };
        scratch.resolve_set(set)
    }
}

struct Evaluator<'a> {
    world: &'a World,
    tick: u64,
    vo_agents: &'a [VOAgentDef],
    bindings: Vec<(String, AgentId)>,
}

impl<'a> Evaluator<'a> {
    fn eval(&mut self, expr: &Expr) -> Result<Value, EvalError> {
        match expr {
            Expr::Num(x) => Ok(Value::Num(*x)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Tick => Ok(Value::Num(self.tick as f64)),
            Expr::Attr { binder, attr } => {
                let agent = self
                    .bindings
                    .iter()
                    .rev()
                    .find(|(name, _)| name == binder)
                    .map(|(_, id)| *id)
                    .ok_or_else(|| EvalError::UnboundBinder(binder.clone()))?;
                self.read_attr(agent, attr)
            }
            Expr::Not(e) => Ok(Value::Bool(!self.eval_bool(e)?)),
            Expr::Neg(e) => {
                let x = self.eval_num(e)?;
                Ok(Value::Num(-x))
            }
            Expr::Arith { op, lhs, rhs } => {
                let a = self.eval_num(lhs)?;
                let b = self.eval_num(rhs)?;
                let result = match op {
                    ArithOp::Add => a + b,
                    ArithOp::Sub => a - b,
                    ArithOp::Mul => a * b,
                    ArithOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivByZero);
                        }
                        a / b
                    }
                };
                finite(result)
            }
            Expr::Cmp { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                compare(*op, &a, &b).map(Value::Bool)
            }
            Expr::And(lhs, rhs) => {
                if !self.eval_bool(lhs)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.eval_bool(rhs)?))
            }
            Expr::Or(lhs, rhs) => {
                if self.eval_bool(lhs)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.eval_bool(rhs)?))
            }
            Expr::Approx { lhs, rhs, eps } => {
                let a = self.eval_num(lhs)?;
                let b = self.eval_num(rhs)?;
                Ok(Value::Bool((a - b).abs() <= *eps))
            }
            Expr::Agg { func, set, attr } => self.eval_agg(*func, set, attr.as_deref()),
            Expr::ArgmaxCount { set, group, value } => self.eval_argmax_count(set, group, value),
            Expr::Quant {
                q,
                set,
                binder,
                body,
            } => {
                let members = self.resolve_set(set)?;
                for member in members {
                    self.bindings.push((binder.clone(), member));
                    let holds = self.eval_bool(body);
                    self.bindings.pop();
                    let holds = holds?;
                    match q {
                        Quantifier::Forall if !holds => return Ok(Value::Bool(false)),
                        Quantifier::Exists if holds => return Ok(Value::Bool(true)),
                        _ => {}
                    }
                }
                Ok(Value::Bool(matches!(q, Quantifier::Forall)))
            }
        }
    }

    fn eval_bool(&mut self, expr: &Expr) -> Result<bool, EvalError> {
        match self.eval(expr)? {
            Value::Bool(b) => Ok(b),
            other => Err(EvalError::TypeMismatch {
                expected: "boolean",
                found: other.type_name(),
            }),
        }
    }

    fn eval_num(&mut self, expr: &Expr) -> Result<f64, EvalError> {
        match self.eval(expr)? {
            Value::Num(x) => Ok(x),
            other => Err(EvalError::TypeMismatch {
                expected: "number",
                found: other.type_name(),
            }),
        }
    }

    fn read_attr(&self, agent: AgentId, attr: &str) -> Result<Value, EvalError> {
        let a = self
            .world
            .agent(agent)
            .ok_or(EvalError::MissingAttribute {
                agent,
                attr: attr.to_string(),
            })?;
        match attr {
            "kind" => Ok(Value::Sym(a.kind.clone())),
            "x" => Ok(Value::Num(a.x)),
            "y" => Ok(Value::Num(a.y)),
            _ => match a.attr(attr) {
                Some(AttrValue::Int(n)) => Ok(Value::Num(*n as f64)),
                Some(AttrValue::Real(x)) => Ok(Value::Num(*x)),
                Some(AttrValue::Bool(b)) => Ok(Value::Bool(*b)),
                Some(AttrValue::Sym(s)) => Ok(Value::Sym(s.clone())),
                None => Err(EvalError::MissingAttribute {
                    agent,
                    attr: attr.to_string(),
                }),
            },
        }
    }

    fn numeric_attr(&self, agent: AgentId, attr: &str) -> Result<f64, EvalError> {
        match self.read_attr(agent, attr)? {
            Value::Num(x) => Ok(x),
            _ => Err(EvalError::NonNumericAttribute {
                agent,
                attr: attr.to_string(),
            }),
        }
    }

    fn eval_agg(
        &mut self,
        func: AggFn,
        set: &SetExpr,
        attr: Option<&str>,
    ) -> Result<Value, EvalError> {
        let members = self.resolve_set(set)?;
        match func {
            AggFn::Count => Ok(Value::Num(members.len() as f64)),
            AggFn::Components => {
                let report = crate::validators::components_of(self.world, &members);
                Ok(Value::Num(report.component_count as f64))
            }
            AggFn::LargestComponentFraction => {
                let report = crate::validators::components_of(self.world, &members);
                Ok(Value::Num(report.largest_fraction))
            }
            AggFn::Sum | AggFn::Min | AggFn::Max | AggFn::Avg => {
                let attr = attr.expect("checked at compile time");
                if members.is_empty() {
                    return match func {
                        AggFn::Sum => Ok(Value::Num(0.0)),
                        AggFn::Min => Err(EvalError::EmptySet { func: "min" }),
                        AggFn::Max => Err(EvalError::EmptySet { func: "max" }),
                        AggFn::Avg => Err(EvalError::EmptySet { func: "avg" }),
                        _ => unreachable!(),
                    };
                }
                let mut sum = 0.0;
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for &member in &members {
                    let x = self.numeric_attr(member, attr)?;
                    sum += x;
                    min = min.min(x);
                    max = max.max(x);
                }
                match func {
                    AggFn::Sum => finite(sum),
                    AggFn::Min => finite(min),
                    AggFn::Max => finite(max),
                    AggFn::Avg => finite(sum / members.len() as f64),
                    _ => unreachable!(),
                }
            }
        }
    }

    // Size of the group (by `group` attribute) with the highest mean of
    // `value`; ties go to the smallest group key.
    fn eval_argmax_count(
        &mut self,
        set: &SetExpr,
        group: &str,
        value: &str,
    ) -> Result<Value, EvalError> {
        let members = self.resolve_set(set)?;
        if members.is_empty() {
            return Err(EvalError::EmptySet {
                func: "argmax_count",
            });
        }
        let mut groups: BTreeMap<GroupKey, (f64, usize)> = BTreeMap::new();
        for &member in &members {
            let key = GroupKey::from_value(self.read_attr(member, group)?);
            let x = self.numeric_attr(member, value)?;
            let entry = groups.entry(key).or_insert((0.0, 0));
            entry.0 += x;
            entry.1 += 1;
        }
        // BTreeMap iterates in ascending key order, so on equal means the
        // first (smallest) key wins the strict comparison below.
        let mut best: Option<(f64, usize)> = None;
        for (sum, count) in groups.values() {
            let mean = sum / *count as f64;
            if best.is_none_or(|(best_mean, _)| mean > best_mean) {
                best = Some((mean, *count));
            }
        }
        Ok(Value::Num(best.expect("non-empty groups").1 as f64))
    }

    fn resolve_set(&self, set: &SetExpr) -> Result<Vec<AgentId>, EvalError> {
        match set {
            SetExpr::Agents { filters } => Ok(self
                .world
                .agents()
                .filter(|agent| filters.iter().all(|f| self.filter_matches(agent.id, f)))
                .map(|agent| agent.id)
                .collect()),
            SetExpr::Within { vo } => {
                let def = self
                    .vo_agents
                    .iter()
                    .find(|v| v.name == *vo)
                    .ok_or_else(|| EvalError::UnknownVoAgent(vo.clone()))?;
                match def.placement {
                    Placement::Spatial { x, y, radius } => Ok(crate::engine::neighbors_within(
                        self.world,
                        (x, y),
                        radius,
                        def.kind_filter.as_deref(),
                    )),
                    Placement::Global => Ok(self
                        .world
                        .agents()
                        .filter(|a| def.kind_filter.as_deref().is_none_or(|k| a.kind == k))
                        .map(|a| a.id)
                        .collect()),
                }
            }
        }
    }

    fn filter_matches(&self, agent: AgentId, filter: &Filter) -> bool {
        let Ok(actual) = self.read_attr(agent, &filter.attr) else {
            return false;
        };
        let literal = match &filter.literal {
            Literal::Num(x) => Value::Num(*x),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Sym(s) => Value::Sym(s.clone()),
        };
        compare(filter.op, &actual, &literal).unwrap_or(false)
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Result<bool, EvalError> {
    match (a, b) {
        (Value::Num(x), Value::Num(y)) => Ok(match op {
            CmpOp::Eq => x == y,
            CmpOp::Ne => x != y,
            CmpOp::Lt => x < y,
            CmpOp::Le => x <= y,
            CmpOp::Gt => x > y,
            CmpOp::Ge => x >= y,
        }),
        (Value::Bool(x), Value::Bool(y)) if !op.is_ordering() => Ok(match op {
            CmpOp::Eq => x == y,
            _ => x != y,
        }),
        (Value::Sym(x), Value::Sym(y)) if !op.is_ordering() => Ok(match op {
            CmpOp::Eq => x == y,
            _ => x != y,
        }),
        _ => Err(EvalError::IncomparableValues {
            lhs: a.type_name(),
            rhs: b.type_name(),
        }),
    }
}

fn finite(x: f64) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::Num(x))
    } else {
        Err(EvalError::NonFinite)
    }
}

// Orders mixed-type group keys: booleans, then numbers, then symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Bool(bool),
    Num(OrdF64),
    Sym(String),
}

impl GroupKey {
    fn from_value(v: Value) -> Self {
        match v {
            Value::Bool(b) => GroupKey::Bool(b),
            Value::Num(x) => GroupKey::Num(OrdF64(x)),
            Value::Sym(s) => GroupKey::Sym(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

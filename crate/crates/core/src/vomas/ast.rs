//! Compiled overlay specification: monitor agents, watches, invariants, and
//! the expression trees they evaluate.

use std::fmt;

/// Where a monitor agent sits. Spatial agents own a disk of the torus;
/// global agents see every agent.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Spatial { x: f64, y: f64, radius: f64 },
    Global,
}

/// A declared overlay monitor agent.
#[derive(Debug, Clone, PartialEq)]
pub struct VOAgentDef {
    pub name: String,
    pub placement: Placement,
    pub kind_filter: Option<String>,
}

/// A named expression evaluated and logged every `period` ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct Watch {
    pub name: String,
    pub expr: Expr,
    pub period: u64,
}

/// When an invariant's predicate is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    EveryTick,
    AtTermination,
}

impl Scope {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scope::EveryTick => "every_tick",
            Scope::AtTermination => "at_termination",
        }
    }

    pub fn parse(s: &str) -> Option<Scope> {
        match s {
            "every_tick" => Some(Scope::EveryTick),
            "at_termination" => Some(Scope::AtTermination),
            _ => None,
        }
    }
}

/// What happens when an invariant's predicate evaluates false.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationPolicy {
    Halt,
    LogOnly,
}

/// A boolean condition that must hold, plus when to check it and what a
/// violation does to the run.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub name: String,
    pub scope: Scope,
    pub predicate: Expr,
    pub on_violation: ViolationPolicy,
}

/// The whole compiled overlay. `source` keeps the original text for
/// reporting; it does not participate in structural equality.
#[derive(Debug, Clone, Default)]
pub struct VomasSpec {
    pub vo_agents: Vec<VOAgentDef>,
    pub watches: Vec<Watch>,
    pub invariants: Vec<Invariant>,
    pub source: String,
}

impl PartialEq for VomasSpec {
    fn eq(&self, other: &Self) -> bool {
        self.vo_agents == other.vo_agents
            && self.watches == other.watches
            && self.invariants == other.invariants
    }
}

impl VomasSpec {
    pub fn is_empty(&self) -> bool {
        self.vo_agents.is_empty() && self.watches.is_empty() && self.invariants.is_empty()
    }

    pub fn vo_agent(&self, name: &str) -> Option<&VOAgentDef> {
        self.vo_agents.iter().find(|v| v.name == name)
    }

    /// Every attribute name the spec reads, in filters, aggregates, or
    /// quantifier bodies.
    pub fn referenced_attrs(&self) -> Vec<String> {
        let mut attrs = Vec::new();
        for w in &self.watches {
            w.expr.collect_attrs(&mut attrs);
        }
        for i in &self.invariants {
            i.predicate.collect_attrs(&mut attrs);
        }
        attrs.sort();
        attrs.dedup();
        attrs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_ordering(&self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn as_str(&self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

/// A literal in a set filter: `agents[kind == wolf]` compares against the
/// symbol `wolf`.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Num(f64),
    Bool(bool),
    Sym(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Num(x) => write!(f, "{x}"),
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Sym(s) => write!(f, "{s}"),
        }
    }
}

/// One conjunctive attribute filter on a set.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub attr: String,
    pub op: CmpOp,
    pub literal: Literal,
}

/// An agent set: the whole population under filters, or the disk owned by a
/// declared monitor agent.
#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Agents { filters: Vec<Filter> },
    Within { vo: String },
}

impl SetExpr {
    pub fn all_agents() -> Self {
        SetExpr::Agents { filters: vec![] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggFn {
    Count,
    Sum,
    Min,
    Max,
    Avg,
    /// Connected components of the link graph restricted to the set.
    Components,
    /// Size of the largest component divided by the set size (1.0 if empty).
    LargestComponentFraction,
}

impl AggFn {
    pub fn as_str(&self) -> &'static str {
        match self {
            AggFn::Count => "count",
            AggFn::Sum => "sum",
            AggFn::Min => "min",
            AggFn::Max => "max",
            AggFn::Avg => "avg",
            AggFn::Components => "components",
            AggFn::LargestComponentFraction => "largest_component_fraction",
        }
    }

    /// Whether the aggregate takes an attribute argument.
    pub fn takes_attr(&self) -> bool {
        matches!(self, AggFn::Sum | AggFn::Min | AggFn::Max | AggFn::Avg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

/// A pure expression over the world at one tick. Evaluation never mutates
/// anything.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    /// A bare name in expression position: a symbol literal, comparable
    /// with symbol-valued attributes (`r.policy == journal`).
    Sym(String),
    Tick,
    /// `binder.attr` inside a quantifier body.
    Attr { binder: String, attr: String },
    Not(Box<Expr>),
    Neg(Box<Expr>),
    Arith {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Cmp {
        op: CmpOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    /// `approx(a, b, eps)`: |a - b| <= eps.
    Approx {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        eps: f64,
    },
    Agg {
        func: AggFn,
        set: SetExpr,
        attr: Option<String>,
    },
    /// Size of the group (by `group` attribute) whose members have the
    /// highest mean `value`; ties go to the smallest group key.
    ArgmaxCount {
        set: SetExpr,
        group: String,
        value: String,
    },
    Quant {
        q: Quantifier,
        set: SetExpr,
        binder: String,
        body: Box<Expr>,
    },
}

impl Expr {
    fn collect_attrs(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) | Expr::Bool(_) | Expr::Tick => {}
            Expr::Attr { attr, .. } => out.push(attr.clone()),
            Expr::Not(e) | Expr::Neg(e) => e.collect_attrs(out),
            Expr::Arith { lhs, rhs, .. } | Expr::Cmp { lhs, rhs, .. } => {
                lhs.collect_attrs(out);
                rhs.collect_attrs(out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_attrs(out);
                b.collect_attrs(out);
            }
            Expr::Approx { lhs, rhs, .. } => {
                lhs.collect_attrs(out);
                rhs.collect_attrs(out);
            }
            Expr::Agg { set, attr, .. } => {
                collect_set_attrs(set, out);
                if let Some(a) = attr {
                    out.push(a.clone());
                }
            }
            Expr::ArgmaxCount { set, group, value } => {
                collect_set_attrs(set, out);
                out.push(group.clone());
                out.push(value.clone());
            }
            Expr::Quant { set, body, .. } => {
                collect_set_attrs(set, out);
                body.collect_attrs(out);
            }
        }
    }
}

fn collect_set_attrs(set: &SetExpr, out: &mut Vec<String>) {
    if let SetExpr::Agents { filters } = set {
        for f in filters {
            out.push(f.attr.clone());
        }
    }
}

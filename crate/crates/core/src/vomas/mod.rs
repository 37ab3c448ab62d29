//! The virtual overlay: spec compilation, expression evaluation, the VO
//! manager that runs watches and invariants each tick, the virtual console,
//! and violation policy enforcement.

pub mod ast;
pub mod console;
pub mod eval;
mod lexer;
pub mod manager;
mod parser;
pub mod pretty;
pub mod typecheck;

pub use ast::{
    Expr, Invariant, Placement, Scope, SetExpr, VOAgentDef, ViolationPolicy, VomasSpec, Watch,
};
pub use console::{console_emit, ConsoleAgent, ConsoleRecord};
pub use eval::{EvalContext, EvalError, Value};
pub use lexer::{Diagnostic, Pos};
pub use manager::{TickOutcome, VomasManager};
pub use parser::{builtin_attr_type, compile_spec, CompileError, Ty};
pub use pretty::{pretty_expr, pretty_spec};
pub use typecheck::{validate_spec, ModelSchema};

//! Canonical text form of a compiled spec. Recompiling the printed text
//! yields a structurally identical spec, so this form doubles as the
//! predicate source text recorded in violation entries.

use std::fmt::Write;

use super::ast::*;

/// Print the whole spec, one item per line, in declaration order.
pub fn pretty_spec(spec: &VomasSpec) -> String {
    let mut out = String::new();
    for vo in &spec.vo_agents {
        match &vo.placement {
            Placement::Spatial { x, y, radius } => {
                write!(
                    out,
                    "vo {} at ({}, {}) radius {}",
                    vo.name,
                    fmt_num(*x),
                    fmt_num(*y),
                    fmt_num(*radius)
                )
                .unwrap();
            }
            Placement::Global => write!(out, "vo {} global", vo.name).unwrap(),
        }
        if let Some(kind) = &vo.kind_filter {
            write!(out, " kind {kind}").unwrap();
        }
        out.push('\n');
    }
    for watch in &spec.watches {
        write!(out, "watch {} = {}", watch.name, pretty_expr(&watch.expr)).unwrap();
        if watch.period != 1 {
            write!(out, " every {}", watch.period).unwrap();
        }
        out.push('\n');
    }
    for inv in &spec.invariants {
        write!(out, "invariant {}: ", inv.name).unwrap();
        if inv.scope == Scope::AtTermination {
            out.push_str("at_termination ");
        }
        out.push_str(&pretty_expr(&inv.predicate));
        if inv.on_violation == ViolationPolicy::Halt {
            out.push_str(" on_violation halt");
        }
        out.push('\n');
    }
    out
}

pub fn pretty_expr(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr, 0);
    out
}

pub fn pretty_set(set: &SetExpr) -> String {
    match set {
        SetExpr::Agents { filters } => {
            let mut out = String::from("agents");
            for f in filters {
                write!(out, "[{} {} {}]", f.attr, f.op.as_str(), f.literal).unwrap();
            }
            out
        }
        SetExpr::Within { vo } => format!("within({vo})"),
    }
}

// Precedence: or(1) < and(2) < not(3) < comparison(4) < add/sub(5)
// < mul/div(6) < unary(7) < atoms(8). A child is parenthesized when its
// precedence is below the minimum its position requires.
fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(..) => 3,
        Expr::Cmp { .. } => 4,
        Expr::Arith { op, .. } => match op {
            ArithOp::Add | ArithOp::Sub => 5,
            ArithOp::Mul | ArithOp::Div => 6,
        },
        Expr::Neg(..) => 7,
        Expr::Num(x) if *x < 0.0 => 7, // prints with a leading minus
        _ => 8,
    }
}

fn write_expr(out: &mut String, expr: &Expr, min_prec: u8) {
    let prec = precedence(expr);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match expr {
        Expr::Num(x) => out.push_str(&fmt_num(*x)),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Tick => out.push_str("tick"),
        Expr::Attr { binder, attr } => {
            write!(out, "{binder}.{attr}").unwrap();
        }
        Expr::Not(e) => {
            out.push_str("not ");
            write_expr(out, e, 3);
        }
        Expr::Neg(e) => {
            out.push('-');
            write_expr(out, e, 7);
        }
        Expr::Arith { op, lhs, rhs } => {
            let (left_min, right_min) = match op {
                ArithOp::Add | ArithOp::Sub => (5, 6),
                ArithOp::Mul | ArithOp::Div => (6, 7),
            };
            write_expr(out, lhs, left_min);
            write!(out, " {} ", op.as_str()).unwrap();
            write_expr(out, rhs, right_min);
        }
        Expr::Cmp { op, lhs, rhs } => {
            write_expr(out, lhs, 5);
            write!(out, " {} ", op.as_str()).unwrap();
            write_expr(out, rhs, 5);
        }
        Expr::And(lhs, rhs) => {
            write_expr(out, lhs, 2);
            out.push_str(" and ");
            write_expr(out, rhs, 3);
        }
        Expr::Or(lhs, rhs) => {
            write_expr(out, lhs, 1);
            out.push_str(" or ");
            write_expr(out, rhs, 2);
        }
        Expr::Approx { lhs, rhs, eps } => {
            out.push_str("approx(");
            write_expr(out, lhs, 0);
            out.push_str(", ");
            write_expr(out, rhs, 0);
            write!(out, ", {})", fmt_num(*eps)).unwrap();
        }
        Expr::Agg { func, set, attr } => {
            write!(out, "{}({}", func.as_str(), pretty_set(set)).unwrap();
            if let Some(attr) = attr {
                write!(out, ", {attr}").unwrap();
            }
            out.push(')');
        }
        Expr::ArgmaxCount { set, group, value } => {
            write!(out, "argmax_count({}, {group}, {value})", pretty_set(set)).unwrap();
        }
        Expr::Quant {
            q,
            set,
            binder,
            body,
        } => {
            write!(out, "{}({}, {binder} -> ", q.as_str(), pretty_set(set)).unwrap();
            write_expr(out, body, 0);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Literal formatting the lexer can read back: no exponents, integral
/// values without a fraction.
fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

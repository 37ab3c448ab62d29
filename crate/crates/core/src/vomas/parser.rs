//! Recursive-descent compiler for the overlay spec language.
//!
//! Compilation is total: the result is either a [`VomasSpec`] or a
//! positioned diagnostic. Types are checked while parsing; attribute types
//! are unknown until a model schema is available (see
//! [`crate::vomas::typecheck`]), so here they unify with anything.
//!
//! Grammar:
//!
//! ```text
//! spec      := item*
//! item      := voagent | watch | invariant
//! voagent   := "vo" NAME ( "at" "(" NUM "," NUM ")" "radius" NUM | "global" ) [ "kind" NAME ]
//! watch     := "watch" NAME "=" expr [ "every" INT ]
//! invariant := "invariant" NAME ":" [ "at_termination" ] expr [ "on_violation" ("halt"|"log") ]
//! set       := "agents" filter* | "within" "(" NAME ")"
//! filter    := "[" NAME ("=="|"!="|"<"|"<="|">"|">=") literal "]"
//! expr      := or < and < not < comparison < add/sub < mul/div < unary;
//!              atoms: NUM | "true" | "false" | "tick" | agg | quant
//!                   | "(" expr ")" | "approx(" expr "," expr "," NUM ")"
//! agg       := ("count"|"sum"|"min"|"max"|"avg"
//!              |"components"|"largest_component_fraction") "(" set ["," NAME] ")"
//!            | "argmax_count" "(" set "," NAME "," NAME ")"
//! quant     := ("forall"|"exists") "(" set "," NAME "->" expr ")"
//! ```
//!
//! `#` starts a comment. Inside quantifier bodies the binder's attributes
//! read as `binder.attr`.

use std::fmt;

use super::ast::*;
use super::lexer::{tokenize, Diagnostic, Pos, Tok, Token};

/// Compilation failure: one or more positioned diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CompileError {
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for CompileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for CompileError {}

impl From<Diagnostic> for CompileError {
    fn from(d: Diagnostic) -> Self {
        CompileError {
            diagnostics: vec![d],
        }
    }
}

/// Expression type as far as it is known without a model schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
    Sym,
    Unknown,
}

impl Ty {
    pub fn as_str(&self) -> &'static str {
        match self {
            Ty::Num => "number",
            Ty::Bool => "boolean",
            Ty::Sym => "symbol",
            Ty::Unknown => "unknown",
        }
    }

    fn compatible(self, other: Ty) -> bool {
        self == Ty::Unknown || other == Ty::Unknown || self == other
    }
}

/// Types of the built-in attributes every agent carries.
pub fn builtin_attr_type(attr: &str) -> Option<Ty> {
    match attr {
        "kind" => Some(Ty::Sym),
        "x" | "y" => Some(Ty::Num),
        _ => None,
    }
}

/// Compile spec source text into a checked [`VomasSpec`].
pub fn compile_spec(text: &str) -> Result<VomasSpec, CompileError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        binders: Vec::new(),
        within_refs: Vec::new(),
    };
    let mut spec = VomasSpec {
        source: text.to_string(),
        ..VomasSpec::default()
    };
    // (category, name, position) for duplicate detection
    let mut names: Vec<(&'static str, String, Pos)> = Vec::new();

    loop {
        let token = parser.peek().clone();
        match &token.tok {
            Tok::Eof => break,
            Tok::Ident(word) => match word.as_str() {
                "vo" => {
                    let vo = parser.parse_voagent()?;
                    names.push(("vo agent", vo.name.clone(), token.pos));
                    spec.vo_agents.push(vo);
                }
                "watch" => {
                    let watch = parser.parse_watch()?;
                    names.push(("watch", watch.name.clone(), token.pos));
                    spec.watches.push(watch);
                }
                "invariant" => {
                    let invariant = parser.parse_invariant()?;
                    names.push(("invariant", invariant.name.clone(), token.pos));
                    spec.invariants.push(invariant);
                }
                other => {
                    return Err(Diagnostic {
                        pos: token.pos,
                        message: format!(
                            "expected `vo`, `watch`, or `invariant`, found `{other}`"
                        ),
                    }
                    .into());
                }
            },
            other => {
                return Err(Diagnostic {
                    pos: token.pos,
                    message: format!("expected `vo`, `watch`, or `invariant`, found {other}"),
                }
                .into());
            }
        }
    }

    let mut diagnostics = Vec::new();
    // duplicate names within each category
    for (i, (cat, name, pos)) in names.iter().enumerate() {
        if names[..i].iter().any(|(c, n, _)| c == cat && n == name) {
            diagnostics.push(Diagnostic {
                pos: *pos,
                message: format!("duplicate {cat} name `{name}`"),
            });
        }
    }
    // every within(NAME) must reference a declared vo agent
    for (name, pos) in &parser.within_refs {
        if spec.vo_agent(name).is_none() {
            diagnostics.push(Diagnostic {
                pos: *pos,
                message: format!("`within({name})` references an undeclared vo agent"),
            });
        }
    }
    if diagnostics.is_empty() {
        Ok(spec)
    } else {
        Err(CompileError { diagnostics })
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    binders: Vec<String>,
    within_refs: Vec<(String, Pos)>,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        token
    }

    fn error<T>(&self, pos: Pos, message: String) -> PResult<T> {
        Err(Diagnostic { pos, message })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        let token = self.peek().clone();
        if token.tok == tok {
            self.advance();
            Ok(token.pos)
        } else {
            self.error(token.pos, format!("expected {tok}, found {}", token.tok))
        }
    }

    fn expect_name(&mut self, role: &str) -> PResult<(String, Pos)> {
        let token = self.peek().clone();
        match token.tok {
            Tok::Ident(name) => {
                self.advance();
                Ok((name, token.pos))
            }
            other => self.error(token.pos, format!("expected {role}, found {other}")),
        }
    }

    /// Matches the given keyword if it is next; does not consume otherwise.
    fn eat_keyword(&mut self, word: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Ident(w) if w == word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, word: &str) -> PResult<Pos> {
        let token = self.peek().clone();
        if matches!(&token.tok, Tok::Ident(w) if w == word) {
            self.advance();
            Ok(token.pos)
        } else {
            self.error(token.pos, format!("expected `{word}`, found {}", token.tok))
        }
    }

    /// A number with optional leading minus (outside expressions).
    fn expect_number(&mut self, role: &str) -> PResult<(f64, Pos)> {
        let negative = matches!(self.peek().tok, Tok::Minus);
        if negative {
            self.advance();
        }
        let token = self.peek().clone();
        match token.tok {
            Tok::Num(x) => {
                self.advance();
                Ok((if negative { -x } else { x }, token.pos))
            }
            other => self.error(token.pos, format!("expected {role}, found {other}")),
        }
    }

    fn expect_integer(&mut self, role: &str) -> PResult<(u64, Pos)> {
        let (value, pos) = self.expect_number(role)?;
        if value.fract() != 0.0 || value < 0.0 || value > u64::MAX as f64 {
            return self.error(pos, format!("{role} must be a non-negative integer"));
        }
        Ok((value as u64, pos))
    }

    // voagent := "vo" NAME ( "at" "(" NUM "," NUM ")" "radius" NUM | "global" ) [ "kind" NAME ]
    fn parse_voagent(&mut self) -> PResult<VOAgentDef> {
        self.expect_keyword("vo")?;
        let (name, _) = self.expect_name("a vo agent name")?;
        let placement = if self.eat_keyword("at") {
            self.expect(Tok::LParen)?;
            let (x, _) = self.expect_number("a coordinate")?;
            self.expect(Tok::Comma)?;
            let (y, _) = self.expect_number("a coordinate")?;
            self.expect(Tok::RParen)?;
            self.expect_keyword("radius")?;
            let (radius, rpos) = self.expect_number("a radius")?;
            if radius < 0.0 {
                return self.error(rpos, format!("radius must be >= 0, got {radius}"));
            }
            Placement::Spatial { x, y, radius }
        } else if self.eat_keyword("global") {
            Placement::Global
        } else {
            let token = self.peek().clone();
            return self.error(
                token.pos,
                format!("expected `at` or `global`, found {}", token.tok),
            );
        };
        let kind_filter = if self.eat_keyword("kind") {
            Some(self.expect_name("a kind name")?.0)
        } else {
            None
        };
        Ok(VOAgentDef {
            name,
            placement,
            kind_filter,
        })
    }

    // watch := "watch" NAME "=" expr [ "every" INT ]
    fn parse_watch(&mut self) -> PResult<Watch> {
        self.expect_keyword("watch")?;
        let (name, _) = self.expect_name("a watch name")?;
        self.expect(Tok::Assign)?;
        let expr_pos = self.peek().pos;
        let (expr, ty) = self.parse_expr()?;
        if !matches!(ty, Ty::Num | Ty::Bool | Ty::Unknown) {
            return self.error(
                expr_pos,
                format!(
                    "watch `{name}` must yield a number or boolean, got {}",
                    ty.as_str()
                ),
            );
        }
        let period = if self.eat_keyword("every") {
            let (period, ppos) = self.expect_integer("a period")?;
            if period == 0 {
                return self.error(ppos, "period must be >= 1".to_string());
            }
            period
        } else {
            1
        };
        Ok(Watch { name, expr, period })
    }

    // invariant := "invariant" NAME ":" [ "at_termination" ] expr [ "on_violation" ("halt"|"log") ]
    fn parse_invariant(&mut self) -> PResult<Invariant> {
        self.expect_keyword("invariant")?;
        let (name, _) = self.expect_name("an invariant name")?;
        self.expect(Tok::Colon)?;
        let scope = if self.eat_keyword("at_termination") {
            Scope::AtTermination
        } else {
            Scope::EveryTick
        };
        let expr_pos = self.peek().pos;
        let (predicate, ty) = self.parse_expr()?;
        if !ty.compatible(Ty::Bool) {
            return self.error(
                expr_pos,
                format!(
                    "invariant `{name}` predicate must be boolean, got {}",
                    ty.as_str()
                ),
            );
        }
        let on_violation = if self.eat_keyword("on_violation") {
            let (word, wpos) = self.expect_name("`halt` or `log`")?;
            match word.as_str() {
                "halt" => ViolationPolicy::Halt,
                "log" => ViolationPolicy::LogOnly,
                other => {
                    return self.error(wpos, format!("expected `halt` or `log`, found `{other}`"))
                }
            }
        } else {
            ViolationPolicy::LogOnly
        };
        Ok(Invariant {
            name,
            scope,
            predicate,
            on_violation,
        })
    }

    fn parse_expr(&mut self) -> PResult<(Expr, Ty)> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> PResult<(Expr, Ty)> {
        let (mut lhs, mut lty) = self.parse_and()?;
        loop {
            let pos = self.peek().pos;
            if !self.eat_keyword("or") {
                break;
            }
            self.check_bool(pos, lty, "left operand of `or`")?;
            let rpos = self.peek().pos;
            let (rhs, rty) = self.parse_and()?;
            self.check_bool(rpos, rty, "right operand of `or`")?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
            lty = Ty::Bool;
        }
        Ok((lhs, lty))
    }

    fn parse_and(&mut self) -> PResult<(Expr, Ty)> {
        let (mut lhs, mut lty) = self.parse_not()?;
        loop {
            let pos = self.peek().pos;
            if !self.eat_keyword("and") {
                break;
            }
            self.check_bool(pos, lty, "left operand of `and`")?;
            let rpos = self.peek().pos;
            let (rhs, rty) = self.parse_not()?;
            self.check_bool(rpos, rty, "right operand of `and`")?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
            lty = Ty::Bool;
        }
        Ok((lhs, lty))
    }

    fn parse_not(&mut self) -> PResult<(Expr, Ty)> {
        let pos = self.peek().pos;
        if self.eat_keyword("not") {
            let (operand, ty) = self.parse_not()?;
            self.check_bool(pos, ty, "operand of `not`")?;
            Ok((Expr::Not(Box::new(operand)), Ty::Bool))
        } else {
            self.parse_cmp()
        }
    }

    // single, non-chaining comparison
    fn parse_cmp(&mut self) -> PResult<(Expr, Ty)> {
        let lpos = self.peek().pos;
        let (lhs, lty) = self.parse_addsub()?;
        let op = match self.peek().tok {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return Ok((lhs, lty)),
        };
        let op_pos = self.advance().pos;
        let rpos = self.peek().pos;
        let (rhs, rty) = self.parse_addsub()?;
        if op.is_ordering() {
            self.check_num(lpos, lty, "ordered comparison operand")?;
            self.check_num(rpos, rty, "ordered comparison operand")?;
        } else if !lty.compatible(rty) {
            return self.error(
                op_pos,
                format!(
                    "`{}` compares {} with {}",
                    op.as_str(),
                    lty.as_str(),
                    rty.as_str()
                ),
            );
        }
        Ok((
            Expr::Cmp {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            Ty::Bool,
        ))
    }

    fn parse_addsub(&mut self) -> PResult<(Expr, Ty)> {
        let lpos = self.peek().pos;
        let (mut lhs, mut lty) = self.parse_muldiv()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => ArithOp::Add,
                Tok::Minus => ArithOp::Sub,
                _ => break,
            };
            self.advance();
            self.check_num(lpos, lty, "arithmetic operand")?;
            let rpos = self.peek().pos;
            let (rhs, rty) = self.parse_muldiv()?;
            self.check_num(rpos, rty, "arithmetic operand")?;
            lhs = Expr::Arith {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
            lty = Ty::Num;
        }
        Ok((lhs, lty))
    }

    fn parse_muldiv(&mut self) -> PResult<(Expr, Ty)> {
        let lpos = self.peek().pos;
        let (mut lhs, mut lty) = self.parse_unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => ArithOp::Mul,
                Tok::Slash => ArithOp::Div,
                _ => break,
            };
            self.advance();
            self.check_num(lpos, lty, "arithmetic operand")?;
            let rpos = self.peek().pos;
            let (rhs, rty) = self.parse_unary()?;
            self.check_num(rpos, rty, "arithmetic operand")?;
            lhs = Expr::Arith {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
            lty = Ty::Num;
        }
        Ok((lhs, lty))
    }

    fn parse_unary(&mut self) -> PResult<(Expr, Ty)> {
        if matches!(self.peek().tok, Tok::Minus) {
            let pos = self.advance().pos;
            let (operand, ty) = self.parse_unary()?;
            self.check_num(pos, ty, "operand of unary `-`")?;
            // fold into the literal so `-3` is one number
            let expr = match operand {
                Expr::Num(x) => Expr::Num(-x),
                other => Expr::Neg(Box::new(other)),
            };
            Ok((expr, Ty::Num))
        } else {
            self.parse_atom()
        }
    }

    fn parse_atom(&mut self) -> PResult<(Expr, Ty)> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Num(x) => {
                self.advance();
                Ok((Expr::Num(*x), Ty::Num))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.advance();
                    Ok((Expr::Bool(true), Ty::Bool))
                }
                "false" => {
                    self.advance();
                    Ok((Expr::Bool(false), Ty::Bool))
                }
                "tick" => {
                    self.advance();
                    Ok((Expr::Tick, Ty::Num))
                }
                "approx" => self.parse_approx(),
                "count" => self.parse_agg(AggFn::Count),
                "sum" => self.parse_agg(AggFn::Sum),
                "min" => self.parse_agg(AggFn::Min),
                "max" => self.parse_agg(AggFn::Max),
                "avg" => self.parse_agg(AggFn::Avg),
                "components" => self.parse_agg(AggFn::Components),
                "largest_component_fraction" => self.parse_agg(AggFn::LargestComponentFraction),
                "argmax_count" => self.parse_argmax_count(),
                "forall" => self.parse_quant(Quantifier::Forall),
                "exists" => self.parse_quant(Quantifier::Exists),
                binder => {
                    if self.peek2().tok == Tok::Dot {
                        if !self.binders.iter().any(|b| b == binder) {
                            return self.error(
                                token.pos,
                                format!("`{binder}` is not bound by an enclosing quantifier"),
                            );
                        }
                        let binder = binder.to_string();
                        self.advance();
                        self.advance(); // dot
                        let (attr, _) = self.expect_name("an attribute name")?;
                        let ty = builtin_attr_type(&attr).unwrap_or(Ty::Unknown);
                        Ok((Expr::Attr { binder, attr }, ty))
                    } else {
                        self.error(
                            token.pos,
                            format!(
                                "expected an expression, found `{binder}` \
                                 (attributes read as `binder.attr` inside quantifiers)"
                            ),
                        )
                    }
                }
            },
            other => self.error(token.pos, format!("expected an expression, found {other}")),
        }
    }

    // approx "(" expr "," expr "," NUM ")"
    fn parse_approx(&mut self) -> PResult<(Expr, Ty)> {
        self.expect_keyword("approx")?;
        self.expect(Tok::LParen)?;
        let lpos = self.peek().pos;
        let (lhs, lty) = self.parse_expr()?;
        self.check_num(lpos, lty, "`approx` operand")?;
        self.expect(Tok::Comma)?;
        let rpos = self.peek().pos;
        let (rhs, rty) = self.parse_expr()?;
        self.check_num(rpos, rty, "`approx` operand")?;
        self.expect(Tok::Comma)?;
        let (eps, epos) = self.expect_number("a tolerance")?;
        if eps < 0.0 {
            return self.error(epos, format!("tolerance must be >= 0, got {eps}"));
        }
        self.expect(Tok::RParen)?;
        Ok((
            Expr::Approx {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                eps,
            },
            Ty::Bool,
        ))
    }

    // agg "(" set ["," NAME] ")"
    fn parse_agg(&mut self, func: AggFn) -> PResult<(Expr, Ty)> {
        let name_pos = self.advance().pos; // aggregate keyword
        self.expect(Tok::LParen)?;
        let set = self.parse_set()?;
        let attr = if matches!(self.peek().tok, Tok::Comma) {
            self.advance();
            Some(self.expect_name("an attribute name")?.0)
        } else {
            None
        };
        self.expect(Tok::RParen)?;
        if func.takes_attr() && attr.is_none() {
            return self.error(
                name_pos,
                format!("`{}` requires an attribute argument", func.as_str()),
            );
        }
        if !func.takes_attr() && attr.is_some() {
            return self.error(
                name_pos,
                format!("`{}` does not take an attribute argument", func.as_str()),
            );
        }
        if let Some(attr) = &attr {
            // a known non-numeric builtin can be rejected right here
            if builtin_attr_type(attr) == Some(Ty::Sym) {
                return self.error(
                    name_pos,
                    format!("`{}` requires a numeric attribute, `{attr}` is a symbol", func.as_str()),
                );
            }
        }
        Ok((Expr::Agg { func, set, attr }, Ty::Num))
    }

    // argmax_count "(" set "," NAME "," NAME ")"
    fn parse_argmax_count(&mut self) -> PResult<(Expr, Ty)> {
        let name_pos = self.advance().pos;
        self.expect(Tok::LParen)?;
        let set = self.parse_set()?;
        self.expect(Tok::Comma)?;
        let (group, _) = self.expect_name("a grouping attribute")?;
        self.expect(Tok::Comma)?;
        let (value, vpos) = self.expect_name("a value attribute")?;
        self.expect(Tok::RParen)?;
        if builtin_attr_type(&value) == Some(Ty::Sym) {
            return self.error(
                vpos,
                format!("`argmax_count` requires a numeric value attribute, `{value}` is a symbol"),
            );
        }
        let _ = name_pos;
        Ok((Expr::ArgmaxCount { set, group, value }, Ty::Num))
    }

    // quant "(" set "," NAME "->" expr ")"
    fn parse_quant(&mut self, q: Quantifier) -> PResult<(Expr, Ty)> {
        self.advance(); // forall/exists
        self.expect(Tok::LParen)?;
        let set = self.parse_set()?;
        self.expect(Tok::Comma)?;
        let (binder, _) = self.expect_name("a binder name")?;
        self.expect(Tok::Arrow)?;
        self.binders.push(binder.clone());
        let body_pos = self.peek().pos;
        let body = self.parse_expr();
        self.binders.pop();
        let (body, bty) = body?;
        self.check_bool(body_pos, bty, "quantifier body")?;
        self.expect(Tok::RParen)?;
        Ok((
            Expr::Quant {
                q,
                set,
                binder,
                body: Box::new(body),
            },
            Ty::Bool,
        ))
    }

    // set := "agents" filter* | "within" "(" NAME ")"
    fn parse_set(&mut self) -> PResult<SetExpr> {
        let token = self.peek().clone();
        match &token.tok {
            Tok::Ident(word) if word == "agents" => {
                self.advance();
                let mut filters = Vec::new();
                while matches!(self.peek().tok, Tok::LBracket) {
                    filters.push(self.parse_filter()?);
                }
                Ok(SetExpr::Agents { filters })
            }
            Tok::Ident(word) if word == "within" => {
                self.advance();
                self.expect(Tok::LParen)?;
                let (name, npos) = self.expect_name("a vo agent name")?;
                self.expect(Tok::RParen)?;
                self.within_refs.push((name.clone(), npos));
                Ok(SetExpr::Within { vo: name })
            }
            other => self.error(
                token.pos,
                format!("expected `agents` or `within(...)`, found {other}"),
            ),
        }
    }

    // filter := "[" NAME op literal "]"
    fn parse_filter(&mut self) -> PResult<Filter> {
        self.expect(Tok::LBracket)?;
        let (attr, apos) = self.expect_name("an attribute name")?;
        let op = match self.peek().tok {
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            ref other => {
                let pos = self.peek().pos;
                let msg = format!("expected a comparison operator, found {other}");
                return self.error(pos, msg);
            }
        };
        self.advance();
        let literal = self.parse_literal()?;
        self.expect(Tok::RBracket)?;

        let attr_ty = builtin_attr_type(&attr).unwrap_or(Ty::Unknown);
        let lit_ty = match literal {
            Literal::Num(_) => Ty::Num,
            Literal::Bool(_) => Ty::Bool,
            Literal::Sym(_) => Ty::Sym,
        };
        if op.is_ordering() && !lit_ty.compatible(Ty::Num) {
            return self.error(
                apos,
                format!(
                    "`{}` needs a numeric literal, got {}",
                    op.as_str(),
                    lit_ty.as_str()
                ),
            );
        }
        if !attr_ty.compatible(lit_ty) {
            return self.error(
                apos,
                format!(
                    "filter compares `{attr}` ({}) with {}",
                    attr_ty.as_str(),
                    lit_ty.as_str()
                ),
            );
        }
        Ok(Filter { attr, op, literal })
    }

    fn parse_literal(&mut self) -> PResult<Literal> {
        let negative = matches!(self.peek().tok, Tok::Minus);
        if negative {
            self.advance();
        }
        let token = self.peek().clone();
        match &token.tok {
            Tok::Num(x) => {
                self.advance();
                Ok(Literal::Num(if negative { -x } else { *x }))
            }
            Tok::Ident(word) if !negative => {
                let lit = match word.as_str() {
                    "true" => Literal::Bool(true),
                    "false" => Literal::Bool(false),
                    sym => Literal::Sym(sym.to_string()),
                };
                self.advance();
                Ok(lit)
            }
            other => self.error(token.pos, format!("expected a literal, found {other}")),
        }
    }

    fn check_bool(&self, pos: Pos, ty: Ty, what: &str) -> PResult<()> {
        if ty.compatible(Ty::Bool) {
            Ok(())
        } else {
            Err(Diagnostic {
                pos,
                message: format!("{what} must be boolean, got {}", ty.as_str()),
            })
        }
    }

    fn check_num(&self, pos: Pos, ty: Ty, what: &str) -> PResult<()> {
        if ty.compatible(Ty::Num) {
            Ok(())
        } else {
            Err(Diagnostic {
                pos,
                message: format!("{what} must be a number, got {}", ty.as_str()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wolves_invariant_compiles() {
        let spec =
            compile_spec("invariant wolves_alive: count(agents[kind == wolf]) > 0 on_violation halt")
                .unwrap();
        assert_eq!(spec.invariants.len(), 1);
        let inv = &spec.invariants[0];
        assert_eq!(inv.name, "wolves_alive");
        assert_eq!(inv.scope, Scope::EveryTick);
        assert_eq!(inv.on_violation, ViolationPolicy::Halt);
    }

    #[test]
    fn empty_input_is_a_valid_spec() {
        let spec = compile_spec("  # only a comment\n").unwrap();
        assert!(spec.is_empty());
    }

    #[test]
    fn duplicate_watch_name_rejected() {
        let err = compile_spec("watch w = avg(agents, pubs) watch w = tick").unwrap_err();
        assert!(err.to_string().contains("duplicate watch name `w`"));
    }

    #[test]
    fn same_name_across_categories_is_fine() {
        compile_spec("watch w = tick invariant w: tick >= 0").unwrap();
    }

    #[test]
    fn undeclared_vo_agent_rejected() {
        let err = compile_spec("watch n = count(within(gate))").unwrap_err();
        assert!(err.to_string().contains("undeclared vo agent"));
        // and with the declaration present (in any order) it compiles
        compile_spec("watch n = count(within(gate))\nvo gate at (10, 10) radius 5").unwrap();
    }

    #[test]
    fn at_termination_scope_and_quantifier() {
        let spec = compile_spec(
            "invariant journal_ten: at_termination forall(agents[policy == journal], r -> r.pubs >= 10)",
        )
        .unwrap();
        let inv = &spec.invariants[0];
        assert_eq!(inv.scope, Scope::AtTermination);
        assert_eq!(inv.on_violation, ViolationPolicy::LogOnly);
        match &inv.predicate {
            Expr::Quant { q, binder, .. } => {
                assert_eq!(*q, Quantifier::Forall);
                assert_eq!(binder, "r");
            }
            other => panic!("expected quantifier, got {other:?}"),
        }
    }

    #[test]
    fn unbound_binder_rejected() {
        let err = compile_spec("invariant i: r.pubs >= 10").unwrap_err();
        assert!(err.to_string().contains("not bound"));
    }

    #[test]
    fn type_error_number_where_boolean_needed() {
        let err = compile_spec("invariant i: count(agents) + 1").unwrap_err();
        assert!(err.to_string().contains("must be boolean"));
    }

    #[test]
    fn aggregate_arity_enforced() {
        assert!(compile_spec("watch w = sum(agents)").is_err());
        assert!(compile_spec("watch w = count(agents, pubs)").is_err());
    }

    #[test]
    fn precedence_or_lower_than_and() {
        let spec = compile_spec("invariant i: true or false and false").unwrap();
        // or(true, and(false, false))
        match &spec.invariants[0].predicate {
            Expr::Or(lhs, _) => assert_eq!(**lhs, Expr::Bool(true)),
            other => panic!("expected or at top, got {other:?}"),
        }
    }

    #[test]
    fn arithmetic_precedence() {
        let spec = compile_spec("watch w = 1 + 2 * 3").unwrap();
        match &spec.watches[0].expr {
            Expr::Arith {
                op: ArithOp::Add,
                rhs,
                ..
            } => {
                assert!(matches!(**rhs, Expr::Arith { op: ArithOp::Mul, .. }));
            }
            other => panic!("expected add at top, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = compile_spec("watch w = count(agents").unwrap_err();
        let diag = &err.diagnostics[0];
        assert_eq!(diag.pos.line, 1);
        assert!(diag.message.contains("expected"));
    }

    #[test]
    fn watch_period_must_be_positive() {
        let err = compile_spec("watch w = tick every 0").unwrap_err();
        assert!(err.to_string().contains("period"));
        let spec = compile_spec("watch w = tick every 10").unwrap();
        assert_eq!(spec.watches[0].period, 10);
    }

    #[test]
    fn filter_type_errors() {
        assert!(compile_spec("watch w = count(agents[kind < 5])").is_err());
        assert!(compile_spec("watch w = count(agents[x == wolf])").is_err());
        compile_spec("watch w = count(agents[x < 5])").unwrap();
    }

    #[test]
    fn global_vo_agent_with_kind() {
        let spec = compile_spec("vo everything global kind wolf").unwrap();
        assert_eq!(spec.vo_agents[0].placement, Placement::Global);
        assert_eq!(spec.vo_agents[0].kind_filter.as_deref(), Some("wolf"));
    }

    #[test]
    fn negative_radius_rejected() {
        let err = compile_spec("vo g at (1, 2) radius -3").unwrap_err();
        assert!(err.to_string().contains("radius"));
    }
}

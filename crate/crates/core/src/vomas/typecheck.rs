//! Schema-aware validation of a compiled spec against a concrete model:
//! attribute existence and types, and spatial placements inside the world.
//! The parser already checked everything knowable without a schema.

use std::collections::BTreeMap;

use super::ast::{AggFn, Expr, Literal, Placement, SetExpr, VomasSpec};
use super::parser::{builtin_attr_type, Ty};

/// What a model exposes to expressions: the union of attributes declared by
/// its kinds, plus world geometry.
#[derive(Debug, Clone)]
pub struct ModelSchema {
    pub attrs: BTreeMap<String, Ty>,
    pub kinds: Vec<String>,
    pub width: f64,
    pub height: f64,
}

impl ModelSchema {
    fn attr_type(&self, attr: &str) -> Option<Ty> {
        builtin_attr_type(attr).or_else(|| self.attrs.get(attr).copied())
    }
}

/// Validate a spec against a model schema. Returns one message per problem;
/// empty means the spec is runnable.
pub fn validate_spec(spec: &VomasSpec, schema: &ModelSchema) -> Vec<String> {
    let mut errors = Vec::new();
    for vo in &spec.vo_agents {
        if let Placement::Spatial { x, y, radius: _ } = vo.placement {
            if x < 0.0 || x >= schema.width || y < 0.0 || y >= schema.height {
                errors.push(format!(
                    "vo agent `{}` is placed at ({x}, {y}), outside the {}x{} world",
                    vo.name, schema.width, schema.height
                ));
            }
        }
    }
    for watch in &spec.watches {
        let mut checker = Checker {
            schema,
            item: format!("watch `{}`", watch.name),
            errors: &mut errors,
            binders: Vec::new(),
        };
        let ty = checker.infer(&watch.expr);
        if !matches!(ty, Ty::Num | Ty::Bool | Ty::Unknown) {
            let item = checker.item.clone();
            errors.push(format!(
                "{item}: expression yields a {}, expected number or boolean",
                ty.as_str()
            ));
        }
    }
    for inv in &spec.invariants {
        let mut checker = Checker {
            schema,
            item: format!("invariant `{}`", inv.name),
            errors: &mut errors,
            binders: Vec::new(),
        };
        let ty = checker.infer(&inv.predicate);
        if !matches!(ty, Ty::Bool | Ty::Unknown) {
            let item = checker.item.clone();
            errors.push(format!(
                "{item}: predicate yields a {}, expected boolean",
                ty.as_str()
            ));
        }
    }
    errors
}

struct Checker<'a> {
    schema: &'a ModelSchema,
    item: String,
    errors: &'a mut Vec<String>,
    binders: Vec<String>,
}

impl<'a> Checker<'a> {
    fn attr_type(&mut self, attr: &str, context: &str) -> Ty {
        match self.schema.attr_type(attr) {
            Some(ty) => ty,
            None => {
                self.errors.push(format!(
                    "{}: {context} references attribute `{attr}`, which no kind of this model declares",
                    self.item
                ));
                Ty::Unknown
            }
        }
    }

    fn require(&mut self, ty: Ty, want: Ty, what: &str) {
        if ty != Ty::Unknown && ty != want {
            self.errors.push(format!(
                "{}: {what} is a {}, expected {}",
                self.item,
                ty.as_str(),
                want.as_str()
            ));
        }
    }

    fn infer(&mut self, expr: &Expr) -> Ty {
        match expr {
            Expr::Num(_) | Expr::Tick => Ty::Num,
            Expr::Bool(_) => Ty::Bool,
            Expr::Attr { binder: _, attr } => self.attr_type(attr, "a quantifier body"),
            Expr::Not(e) => {
                let ty = self.infer(e);
                self.require(ty, Ty::Bool, "operand of `not`");
                Ty::Bool
            }
            Expr::Neg(e) => {
                let ty = self.infer(e);
                self.require(ty, Ty::Num, "operand of `-`");
                Ty::Num
            }
            Expr::Arith { lhs, rhs, op } => {
                let lt = self.infer(lhs);
                let rt = self.infer(rhs);
                self.require(lt, Ty::Num, &format!("left operand of `{}`", op.as_str()));
                self.require(rt, Ty::Num, &format!("right operand of `{}`", op.as_str()));
                Ty::Num
            }
            Expr::Cmp { op, lhs, rhs } => {
                let lt = self.infer(lhs);
                let rt = self.infer(rhs);
                if op.is_ordering() {
                    self.require(lt, Ty::Num, "ordered comparison operand");
                    self.require(rt, Ty::Num, "ordered comparison operand");
                } else if lt != Ty::Unknown && rt != Ty::Unknown && lt != rt {
                    self.errors.push(format!(
                        "{}: `{}` compares a {} with a {}",
                        self.item,
                        op.as_str(),
                        lt.as_str(),
                        rt.as_str()
                    ));
                }
                Ty::Bool
            }
            Expr::And(l, r) | Expr::Or(l, r) => {
                let lt = self.infer(l);
                let rt = self.infer(r);
                self.require(lt, Ty::Bool, "boolean operand");
                self.require(rt, Ty::Bool, "boolean operand");
                Ty::Bool
            }
            Expr::Approx { lhs, rhs, .. } => {
                let lt = self.infer(lhs);
                let rt = self.infer(rhs);
                self.require(lt, Ty::Num, "`approx` operand");
                self.require(rt, Ty::Num, "`approx` operand");
                Ty::Bool
            }
            Expr::Agg { func, set, attr } => {
                self.check_set(set);
                if let Some(attr) = attr {
                    let ty = self.attr_type(attr, &format!("`{}`", func.as_str()));
                    if func.takes_attr() {
                        self.require(ty, Ty::Num, &format!("`{}` attribute `{attr}`", func.as_str()));
                    }
                }
                let _ = AggFn::Count; // all aggregates are numeric
                Ty::Num
            }
            Expr::ArgmaxCount { set, group, value } => {
                self.check_set(set);
                self.attr_type(group, "`argmax_count` grouping");
                let ty = self.attr_type(value, "`argmax_count` value");
                self.require(ty, Ty::Num, &format!("`argmax_count` value attribute `{value}`"));
                Ty::Num
            }
            Expr::Quant { set, binder, body, .. } => {
                self.check_set(set);
                self.binders.push(binder.clone());
                let ty = self.infer(body);
                self.binders.pop();
                self.require(ty, Ty::Bool, "quantifier body");
                Ty::Bool
            }
        }
    }

    fn check_set(&mut self, set: &SetExpr) {
        if let SetExpr::Agents { filters } = set {
            for f in filters {
                let attr_ty = self.attr_type(&f.attr, "a set filter");
                let lit_ty = match f.literal {
                    Literal::Num(_) => Ty::Num,
                    Literal::Bool(_) => Ty::Bool,
                    Literal::Sym(_) => Ty::Sym,
                };
                if attr_ty != Ty::Unknown && attr_ty != lit_ty {
                    self.errors.push(format!(
                        "{}: filter compares `{}` (a {}) with a {}",
                        self.item,
                        f.attr,
                        attr_ty.as_str(),
                        lit_ty.as_str()
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vomas::compile_spec;

    fn researcher_schema() -> ModelSchema {
        ModelSchema {
            attrs: BTreeMap::from([
                ("policy".to_string(), Ty::Sym),
                ("pubs".to_string(), Ty::Num),
                ("color".to_string(), Ty::Sym),
            ]),
            kinds: vec!["researcher".to_string()],
            width: 50.0,
            height: 50.0,
        }
    }

    #[test]
    fn valid_spec_passes() {
        let spec = compile_spec(
            "vo mid at (25, 25) radius 10\n\
             watch w = sum(agents[policy == journal], pubs)\n\
             invariant i: forall(agents, r -> r.pubs >= 0)",
        )
        .unwrap();
        assert!(validate_spec(&spec, &researcher_schema()).is_empty());
    }

    #[test]
    fn undeclared_attribute_is_reported() {
        let spec = compile_spec("watch w = avg(agents, energy)").unwrap();
        let errors = validate_spec(&spec, &researcher_schema());
        assert_eq!(errors.len(), 1);
        assert!(errors[0].contains("energy"));
    }

    #[test]
    fn symbol_attribute_rejected_in_numeric_aggregate() {
        let spec = compile_spec("watch w = sum(agents, policy)").unwrap();
        let errors = validate_spec(&spec, &researcher_schema());
        assert!(errors.iter().any(|e| e.contains("policy")));
    }

    #[test]
    fn filter_type_mismatch_reported() {
        let spec = compile_spec("watch w = count(agents[policy == 5])").unwrap();
        let errors = validate_spec(&spec, &researcher_schema());
        assert!(errors.iter().any(|e| e.contains("filter")));
    }

    #[test]
    fn quantifier_body_types_resolve() {
        let spec = compile_spec("invariant i: forall(agents, r -> r.policy == journal)").unwrap();
        assert!(validate_spec(&spec, &researcher_schema()).is_empty());
        let spec = compile_spec("invariant i: forall(agents, r -> r.policy >= 10)").unwrap();
        assert!(!validate_spec(&spec, &researcher_schema()).is_empty());
    }

    #[test]
    fn out_of_world_placement_reported() {
        let spec = compile_spec("vo far at (120, 10) radius 1").unwrap();
        let errors = validate_spec(&spec, &researcher_schema());
        assert!(errors[0].contains("outside"));
    }
}

//! Name resolution and type checking.

use std::collections::HashMap;

use super::ast::*;
use super::diagnostic::{Diagnostic, DiagnosticKind};

pub(crate) struct Checker<'a> {
    facts: HashMap<&'a str, &'a FactDecl>,
    duties: HashMap<&'a str, ()>,
    // location of the declaration being checked, for literal-only expressions
    here: Loc,
    pub diagnostics: Vec<Diagnostic>,
}

fn mismatch(loc: Loc, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(
        DiagnosticKind::TypeMismatch,
        format!("type mismatch: {}", msg.into()),
        loc,
    )
}

fn unresolved(loc: Loc, name: &str) -> Diagnostic {
    Diagnostic::error(
        DiagnosticKind::UnresolvedIdentifier,
        format!("unresolved identifier `{name}`"),
        loc,
    )
}

fn expr_loc(e: &Expr) -> Option<Loc> {
    match e {
        Expr::Fact(r) => Some(r.loc),
        Expr::DeadlinePassed(l) => Some(*l),
        Expr::Cmp(_, a, b) | Expr::And(a, b) | Expr::Or(a, b) => {
            expr_loc(a).or_else(|| expr_loc(b))
        }
        Expr::Not(a) => expr_loc(a),
        Expr::Lit(_) => None,
    }
}

impl<'a> Checker<'a> {
    pub fn new(facts: &'a [FactDecl], duty_names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut fmap = HashMap::new();
        for f in facts {
            fmap.entry(f.name.as_str()).or_insert(f);
        }
        Checker {
            facts: fmap,
            duties: duty_names.into_iter().map(|n| (n, ())).collect(),
            here: Loc::new(1, 1),
            diagnostics: Vec::new(),
        }
    }

    fn loc_of(&self, e: &Expr) -> Loc {
        expr_loc(e).unwrap_or(self.here)
    }

    fn fact_ref(&mut self, r: &FactRef) -> Option<ScalarType> {
        let Some(decl) = self.facts.get(r.name.as_str()).copied() else {
            self.diagnostics.push(unresolved(r.loc, &r.name));
            return None;
        };
        if decl.params.len() != r.args.len() {
            self.diagnostics.push(mismatch(
                r.loc,
                format!(
                    "`{}` takes {} argument(s), {} given",
                    r.name,
                    decl.params.len(),
                    r.args.len()
                ),
            ));
            return None;
        }
        for (p, a) in decl.params.iter().zip(&r.args) {
            if a.scalar_type() != p.ty {
                self.diagnostics.push(mismatch(
                    r.loc,
                    format!(
                        "argument `{}` of `{}` expects {}, found {}",
                        p.name,
                        r.name,
                        p.ty,
                        a.scalar_type()
                    ),
                ));
                return None;
            }
        }
        Some(decl.ty)
    }

    fn infer(&mut self, e: &Expr, allow_deadline: bool) -> Option<ScalarType> {
        match e {
            Expr::Lit(v) => Some(v.scalar_type()),
            Expr::Fact(r) => self.fact_ref(r),
            Expr::DeadlinePassed(loc) => {
                if allow_deadline {
                    Some(ScalarType::Boolean)
                } else {
                    self.diagnostics.push(mismatch(
                        *loc,
                        "`deadline-passed` is only available in `violated when` conditions",
                    ));
                    None
                }
            }
            Expr::Cmp(op, a, b) => {
                let ta = self.infer(a, allow_deadline);
                let tb = self.infer(b, allow_deadline);
                let (ta, tb) = (ta?, tb?);
                if ta != tb {
                    self.diagnostics.push(mismatch(
                        self.loc_of(a),
                        format!("cannot compare {ta} with {tb}"),
                    ));
                    return None;
                }
                if !matches!(op, CmpOp::Eq | CmpOp::Ne) && !ta.is_ordered() {
                    self.diagnostics.push(mismatch(
                        self.loc_of(a),
                        format!(
                            "`{}` needs integer or date operands, found {ta}",
                            op.symbol()
                        ),
                    ));
                    return None;
                }
                Some(ScalarType::Boolean)
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                let ok_a = self.boolean(a, allow_deadline);
                let ok_b = self.boolean(b, allow_deadline);
                (ok_a && ok_b).then_some(ScalarType::Boolean)
            }
            Expr::Not(a) => self
                .boolean(a, allow_deadline)
                .then_some(ScalarType::Boolean),
        }
    }

    pub fn boolean(&mut self, e: &Expr, allow_deadline: bool) -> bool {
        match self.infer(e, allow_deadline) {
            Some(ScalarType::Boolean) => true,
            Some(other) => {
                self.diagnostics.push(mismatch(
                    self.loc_of(e),
                    format!("expected boolean condition, found {other}"),
                ));
                false
            }
            None => false,
        }
    }

    /// Checks an act in place; `terminates` targets naming a duty are
    /// rewritten to [`Termination::Duty`].
    pub fn act(&mut self, act: &mut ActDecl) {
        self.here = act.loc;
        self.boolean(&act.condition, false);
        for eff in &act.creates {
            let Some(ty) = self.fact_ref(&eff.target) else {
                continue;
            };
            match &eff.value {
                None if ty != ScalarType::Boolean => self.diagnostics.push(mismatch(
                    eff.target.loc,
                    format!(
                        "`creates {}` needs a value because the fact is {ty}",
                        eff.target.name
                    ),
                )),
                Some(v) if v.scalar_type() != ty => self.diagnostics.push(mismatch(
                    eff.target.loc,
                    format!(
                        "`{}` is {ty}, cannot assign {}",
                        eff.target.name,
                        v.scalar_type()
                    ),
                )),
                _ => {}
            }
        }
        for t in act.terminates.iter_mut() {
            if let Termination::Fact(r) = t {
                if self.duties.contains_key(r.name.as_str())
                    && !self.facts.contains_key(r.name.as_str())
                {
                    if !r.args.is_empty() {
                        self.diagnostics.push(mismatch(
                            r.loc,
                            format!("duty `{}` takes no arguments", r.name),
                        ));
                    }
                    *t = Termination::Duty {
                        name: r.name.clone(),
                        loc: r.loc,
                    };
                } else {
                    self.fact_ref(r);
                }
            }
        }
        for d in &act.imposes {
            if !self.duties.contains_key(d.name.as_str()) {
                if self.facts.contains_key(d.name.as_str()) {
                    self.diagnostics.push(mismatch(
                        d.loc,
                        format!("`{}` is a fact, not a duty", d.name),
                    ));
                } else {
                    self.diagnostics.push(unresolved(d.loc, &d.name));
                }
            }
        }
    }

    pub fn duty(&mut self, duty: &DutyDecl) {
        self.here = duty.loc;
        if let Some(r) = &duty.deadline {
            if let Some(ty) = self.fact_ref(r) {
                if ty != ScalarType::Date {
                    self.diagnostics.push(mismatch(
                        r.loc,
                        format!("deadline `{}` must be a date fact, found {ty}", r.name),
                    ));
                }
            }
        }
        self.boolean(&duty.violated_when, true);
    }
}

pub(crate) fn check_fact_params(fact: &FactDecl, out: &mut Vec<Diagnostic>) {
    for (i, p) in fact.params.iter().enumerate() {
        if fact.params[..i].iter().any(|q| q.name == p.name) {
            out.push(Diagnostic::error(
                DiagnosticKind::DuplicateName,
                format!(
                    "duplicate name `{}` in parameters of `{}`",
                    p.name, fact.name
                ),
                fact.loc,
            ));
        }
    }
}

/// Warnings that do not prevent a spec from loading.
pub(crate) fn lint(spec: &NormSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for duty in &spec.duties {
        let imposed = spec
            .acts
            .iter()
            .any(|a| a.imposes.iter().any(|d| d.name == duty.name));
        if !imposed {
            out.push(Diagnostic::warning(
                format!("duty `{}` is never imposed by any act", duty.name),
                duty.loc,
            ));
        }
    }
    out
}

//! Canonical text form of a [`NormSpec`].

use std::fmt::Write;

use super::ast::*;

pub const HEADER: &str = "# norm specification\n";

const INDENT: &str = "  ";

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Or(..) => 1,
        Expr::And(..) => 2,
        Expr::Not(..) => 3,
        Expr::Cmp(..) => 4,
        Expr::Lit(_) | Expr::Fact(_) | Expr::DeadlinePassed(_) => 5,
    }
}

pub fn fact_ref(r: &FactRef) -> String {
    if r.args.is_empty() {
        return r.name.clone();
    }
    let args: Vec<String> = r.args.iter().map(|a| a.to_string()).collect();
    format!("{}({})", r.name, args.join(", "))
}

fn write_expr(out: &mut String, e: &Expr, min: u8) {
    let paren = prec(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Lit(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Fact(r) => out.push_str(&fact_ref(r)),
        Expr::DeadlinePassed(_) => out.push_str("deadline-passed"),
        Expr::Cmp(op, a, b) => {
            write_expr(out, a, 5);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, b, 5);
        }
        Expr::Or(a, b) => {
            write_expr(out, a, 1);
            out.push_str(" or ");
            write_expr(out, b, 2);
        }
        Expr::And(a, b) => {
            write_expr(out, a, 2);
            out.push_str(" and ");
            write_expr(out, b, 3);
        }
        Expr::Not(a) => {
            out.push_str("not ");
            write_expr(out, a, 3);
        }
    }
    if paren {
        out.push(')');
    }
}

/// Single-line rendering of an expression.
pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

/// Like [`expr`], but each operand of a top-level `and` chain goes on its
/// own continuation line.
fn clause_expr(out: &mut String, e: &Expr) {
    fn spine(out: &mut String, e: &Expr) {
        match e {
            Expr::And(a, b) => {
                spine(out, a);
                let _ = write!(out, "\n{INDENT}{INDENT}and ");
                write_expr(out, b, 3);
            }
            other => write_expr(out, other, 2),
        }
    }
    match e {
        Expr::And(..) => spine(out, e),
        other => write_expr(out, other, 0),
    }
}

fn source_line(s: &SourceRef) -> String {
    let mut line = format!("source {}", Value::Text(s.title.clone()));
    if let Some(url) = &s.url {
        let _ = write!(line, " url {}", Value::Text(url.clone()));
    }
    if let Some(d) = s.applicable_from {
        let _ = write!(line, " from {}", d.format("%Y-%m-%d"));
    }
    line
}

pub fn fact_decl(f: &FactDecl) -> String {
    let mut s = format!("fact {}", f.name);
    if !f.params.is_empty() {
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| format!("{}: {}", p.name, p.ty))
            .collect();
        let _ = write!(s, "({})", params.join(", "));
    }
    let _ = write!(s, " : {}", f.ty);
    s
}

pub fn act_decl(a: &ActDecl) -> String {
    let mut s = format!("act {}\n", a.name);
    let _ = writeln!(s, "{INDENT}actor {}", a.actor);
    let _ = writeln!(s, "{INDENT}recipient {}", a.recipient);
    let _ = write!(s, "{INDENT}conditioned by ");
    clause_expr(&mut s, &a.condition);
    s.push('\n');
    for c in &a.creates {
        match &c.value {
            Some(v) => {
                let _ = writeln!(s, "{INDENT}creates {} = {v}", fact_ref(&c.target));
            }
            None => {
                let _ = writeln!(s, "{INDENT}creates {}", fact_ref(&c.target));
            }
        }
    }
    for t in &a.terminates {
        let target = match t {
            Termination::Fact(r) => fact_ref(r),
            Termination::Duty { name, .. } => name.clone(),
        };
        let _ = writeln!(s, "{INDENT}terminates {target}");
    }
    for d in &a.imposes {
        let _ = writeln!(s, "{INDENT}imposes {}", d.name);
    }
    for src in &a.sources {
        let _ = writeln!(s, "{INDENT}{}", source_line(src));
    }
    s
}

pub fn duty_decl(d: &DutyDecl) -> String {
    let mut s = format!("duty {}\n", d.name);
    let _ = writeln!(s, "{INDENT}holder {}", d.holder);
    let _ = writeln!(s, "{INDENT}claimant {}", d.claimant);
    if let Some(r) = &d.deadline {
        let _ = writeln!(s, "{INDENT}deadline {}", fact_ref(r));
    }
    let _ = write!(s, "{INDENT}violated when ");
    clause_expr(&mut s, &d.violated_when);
    s.push('\n');
    for src in &d.sources {
        let _ = writeln!(s, "{INDENT}{}", source_line(src));
    }
    s
}

pub fn declaration(d: &Declaration) -> String {
    match d {
        Declaration::Act(a) => act_decl(a),
        Declaration::Duty(d) => duty_decl(d),
    }
}

/// Canonical text: header, spec-level sources, facts, acts, duties.
/// Output always uses LF line endings.
pub fn print_spec(spec: &NormSpec) -> String {
    let mut out = String::from(HEADER);
    if !spec.sources.is_empty() {
        out.push('\n');
        for s in &spec.sources {
            out.push_str(&source_line(s));
            out.push('\n');
        }
    }
    if !spec.facts.is_empty() {
        out.push('\n');
        for f in &spec.facts {
            out.push_str(&fact_decl(f));
            out.push('\n');
        }
    }
    for a in &spec.acts {
        out.push('\n');
        out.push_str(&act_decl(a));
    }
    for d in &spec.duties {
        out.push('\n');
        out.push_str(&duty_decl(d));
    }
    out
}

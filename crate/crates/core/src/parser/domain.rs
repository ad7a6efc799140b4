//! Line-oriented domain-description grammar.
//!
//! ```text
//! sort object < location = a, b
//! static obj_size(object, size)
//! fluent obj_rel(relation, object, location) inertial except below, above
//! action pickup(robot, object)
//! max_step 12
//! causal c1: putdown(R, O, L) causes obj_rel(on, O, L)
//! constraint s1: obj_rel(below, B, A) if obj_rel(on, A, B)
//! impossible e1: pickup(R, O) if obj_rel(below, O, O2)
//! default d1: obj_rel(on, O, table)
//! ```
//!
//! Identifiers starting with an uppercase letter are variables. `-` (or
//! `¬`) is classical negation, `not` default negation. Axiom ids are
//! optional; missing ones are numbered per keyword.

use std::collections::BTreeMap;

use crate::kr::{
    Axiom, AxiomKind, BodyLit, DomainDescription, LearnedAxiom, LitKind, Literal, PredSchema, Provenance, Signature,
    Term,
};

use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Minus,
    Lt,
    Eq,
    Neq,
}

#[derive(Clone, Debug)]
struct Lexed {
    tok: Tok,
    col: usize,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Lexed>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '(' => {
                out.push(Lexed { tok: Tok::LParen, col });
                i += 1;
            }
            ')' => {
                out.push(Lexed { tok: Tok::RParen, col });
                i += 1;
            }
            ',' => {
                out.push(Lexed { tok: Tok::Comma, col });
                i += 1;
            }
            ':' => {
                out.push(Lexed { tok: Tok::Colon, col });
                i += 1;
            }
            '<' => {
                out.push(Lexed { tok: Tok::Lt, col });
                i += 1;
            }
            '=' => {
                out.push(Lexed { tok: Tok::Eq, col });
                i += 1;
            }
            '-' | '¬' => {
                out.push(Lexed { tok: Tok::Minus, col });
                i += 1;
            }
            '!' if chars.get(i + 1) == Some(&'=') => {
                out.push(Lexed { tok: Tok::Neq, col });
                i += 2;
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Lexed { tok: Tok::Ident(chars[start..i].iter().collect()), col });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    column: col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [Lexed],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let column = self.toks.get(self.pos).map(|t| t.col).unwrap_or(self.end_col);
        Err(ParseError::Syntax { line: self.line, column, message: msg.into() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            out.push(self.ident()?);
        }
        Ok(out)
    }
}

fn term(name: String) -> Term {
    if name.chars().next().is_some_and(|c| c.is_uppercase()) {
        Term::Var { name, sort: None }
    } else {
        Term::Const(name)
    }
}

/// Parses one literal; the kind is provisional until resolved against the
/// signature.
fn literal(cur: &mut Cursor) -> Result<Literal, ParseError> {
    let negated = cur.eat(&Tok::Minus);
    let name = cur.ident()?;
    if !negated && matches!(cur.peek(), Some(Tok::Eq) | Some(Tok::Neq)) {
        let kind = if cur.next() == Some(&Tok::Eq) { LitKind::Eq } else { LitKind::Neq };
        let rhs = cur.ident()?;
        let pred = if kind == LitKind::Eq { "=" } else { "!=" };
        return Ok(Literal::new(kind, pred, vec![term(name), term(rhs)], true));
    }
    let mut args = Vec::new();
    if cur.eat(&Tok::LParen) && !cur.eat(&Tok::RParen) {
        loop {
            args.push(term(cur.ident()?));
            if cur.eat(&Tok::RParen) {
                break;
            }
            cur.expect(&Tok::Comma, "`,` or `)`")?;
        }
    }
    Ok(Literal::new(LitKind::Fluent, &name, args, !negated))
}

fn body(cur: &mut Cursor) -> Result<Vec<BodyLit>, ParseError> {
    let mut out = Vec::new();
    loop {
        let naf = matches!(cur.peek(), Some(Tok::Ident(s)) if s == "not")
            && !matches!(cur.peek_at(1), Some(Tok::LParen) | Some(Tok::Comma) | None);
        if naf {
            cur.pos += 1;
        }
        out.push(BodyLit { lit: literal(cur)?, naf });
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    Ok(out)
}

fn schema_decl(cur: &mut Cursor) -> Result<PredSchema, ParseError> {
    let name = cur.ident()?;
    let mut args = Vec::new();
    if cur.eat(&Tok::LParen) && !cur.eat(&Tok::RParen) {
        args = cur.ident_list()?;
        cur.expect(&Tok::RParen, "`)`")?;
    }
    Ok(PredSchema { name, args, inertial: false, non_inertial_keys: Vec::new() })
}

fn resolve_kind(sig: &Signature, l: &mut Literal) {
    if l.is_builtin() {
        return;
    }
    if let Some((k, _)) = sig.schema(&l.pred) {
        l.kind = k;
    }
}

struct RawAxiom {
    line: usize,
    axiom: Axiom,
    learned: Option<(f64, usize)>,
}

/// Parses a `# learned strength=<s> support=<n>` annotation.
fn learned_annotation(comment: &str) -> Option<(f64, usize)> {
    let rest = comment.trim_start_matches('#').trim().strip_prefix("learned")?;
    let mut strength = None;
    let mut support = None;
    for kv in rest.split_whitespace() {
        if let Some(v) = kv.strip_prefix("strength=") {
            strength = v.parse().ok();
        } else if let Some(v) = kv.strip_prefix("support=") {
            support = v.parse().ok();
        }
    }
    Some((strength?, support?))
}

/// A domain file's contents. Learned axioms (those preceded by a learned
/// annotation) are also returned separately with their metadata.
pub fn parse_domain(text: &str) -> Result<DomainDescription, ParseError> {
    parse_domain_with_learned(text).map(|(d, _)| d)
}

pub fn parse_domain_with_learned(text: &str) -> Result<(DomainDescription, Vec<LearnedAxiom>), ParseError> {
    let mut sig = Signature::new();
    let mut raw: Vec<RawAxiom> = Vec::new();
    let mut counters: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut pending_learned = None;
    let mut saw_decl = false;

    for (idx, full_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = full_line.trim();
        if trimmed.starts_with('#') {
            if let Some(a) = learned_annotation(trimmed) {
                pending_learned = Some(a);
            }
            continue;
        }
        let line = match full_line.find('#') {
            Some(i) => &full_line[..i],
            None => full_line,
        };
        let toks = lex(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { toks: &toks, pos: 0, line: lineno, end_col: line.len() + 1 };
        let kw = cur.ident()?;
        saw_decl = true;
        match kw.as_str() {
            "sort" => {
                let name = cur.ident()?;
                let parent = if cur.eat(&Tok::Lt) { Some(cur.ident()?) } else { None };
                sig.declare_sort(&name, parent.as_deref());
                if cur.eat(&Tok::Eq) {
                    for c in cur.ident_list()? {
                        sig.add_constant(&name, &c);
                    }
                }
            }
            "static" => sig.statics.push(schema_decl(&mut cur)?),
            "action" => sig.actions.push(schema_decl(&mut cur)?),
            "fluent" => {
                let mut s = schema_decl(&mut cur)?;
                if cur.keyword("inertial") {
                    s.inertial = true;
                    if cur.keyword("except") {
                        s.non_inertial_keys = cur.ident_list()?;
                    }
                }
                sig.fluents.push(s);
            }
            "max_step" => {
                let n = cur.ident()?;
                sig.max_step = match n.parse() {
                    Ok(v) => v,
                    Err(_) => return cur.err("max_step expects an integer"),
                };
            }
            "causal" | "constraint" | "impossible" | "default" => {
                let kind = match kw.as_str() {
                    "causal" => AxiomKind::CausalLaw,
                    "constraint" => AxiomKind::StateConstraint,
                    "impossible" => AxiomKind::ExecutabilityCondition,
                    _ => AxiomKind::InitialDefault,
                };
                let id = if matches!(cur.peek_at(1), Some(Tok::Colon)) {
                    let id = cur.ident()?;
                    cur.pos += 1;
                    id
                } else {
                    let n = counters.entry(kind.keyword()).or_insert(0);
                    *n += 1;
                    format!("{}{}", kind.keyword(), n)
                };
                let axiom = match kind {
                    AxiomKind::CausalLaw => {
                        let mut action = literal(&mut cur)?;
                        action.kind = LitKind::Action;
                        if !cur.keyword("causes") {
                            return cur.err("expected `causes`");
                        }
                        let head = literal(&mut cur)?;
                        let mut b = vec![BodyLit::pos(action)];
                        if cur.keyword("if") {
                            b.extend(body(&mut cur)?);
                        }
                        Axiom { id, kind, head, body: b }
                    }
                    AxiomKind::ExecutabilityCondition => {
                        let mut head = literal(&mut cur)?;
                        head.kind = LitKind::Action;
                        head.positive = false;
                        let b = if cur.keyword("if") { body(&mut cur)? } else { Vec::new() };
                        Axiom { id, kind, head, body: b }
                    }
                    _ => {
                        let head = literal(&mut cur)?;
                        let b = if cur.keyword("if") { body(&mut cur)? } else { Vec::new() };
                        Axiom { id, kind, head, body: b }
                    }
                };
                raw.push(RawAxiom { line: lineno, axiom, learned: pending_learned.take() });
            }
            other => {
                return Err(ParseError::Syntax {
                    line: lineno,
                    column: toks[0].col,
                    message: format!("unknown keyword `{other}`"),
                })
            }
        }
        if !cur.done() {
            return cur.err("unexpected trailing input");
        }
    }
    if !saw_decl || sig.sorts.is_empty() {
        return Err(ParseError::EmptySignature);
    }
    sig.validate().map_err(|e| ParseError::Sort { axiom: "signature".into(), message: e.to_string() })?;

    let mut d = DomainDescription { signature: sig, axioms: Vec::new(), defaults: Vec::new() };
    let mut learned = Vec::new();
    for r in raw {
        let mut ax = r.axiom;
        resolve_kind(&d.signature, &mut ax.head);
        if ax.kind == AxiomKind::ExecutabilityCondition {
            ax.head.kind = LitKind::Action;
        }
        for b in &mut ax.body {
            if b.lit.kind != LitKind::Action {
                resolve_kind(&d.signature, &mut b.lit);
            }
        }
        let ax = d
            .signature
            .resolve_axiom(&ax)
            .map_err(|e| ParseError::Sort { axiom: format!("{} (line {})", ax.id, r.line), message: e.to_string() })?;
        if let Some((strength, support)) = r.learned {
            learned.push(LearnedAxiom {
                axiom: ax.clone(),
                strength,
                support,
                cycles_seen: 0,
                provenance: Provenance::Learned,
            });
        }
        if ax.kind == AxiomKind::InitialDefault {
            d.defaults.push(ax);
        } else {
            d.axioms.push(ax);
        }
    }
    Ok((d, learned))
}

/// Parses a goal: comma-separated literals, each optionally wrapped as
/// `holds(<literal>, I)`, with an optional leading `goal` keyword.
pub fn parse_goal(text: &str, sig: &Signature) -> Result<Vec<Literal>, ParseError> {
    let toks = lex(text, 1)?;
    let mut cur = Cursor { toks: &toks, pos: 0, line: 1, end_col: text.len() + 1 };
    cur.keyword("goal");
    let mut out = Vec::new();
    loop {
        let negated = cur.eat(&Tok::Minus);
        let wrapped = matches!(cur.peek(), Some(Tok::Ident(s)) if s == "holds") && cur.peek_at(1) == Some(&Tok::LParen);
        let mut l = if wrapped {
            cur.pos += 2;
            let inner = literal(&mut cur)?;
            cur.expect(&Tok::Comma, "`,` before the step")?;
            cur.ident()?;
            cur.expect(&Tok::RParen, "`)`")?;
            inner
        } else {
            literal(&mut cur)?
        };
        if negated {
            l.positive = !l.positive;
        }
        resolve_kind(sig, &mut l);
        if !l.is_ground() {
            return cur.err(format!("goal literal {l} is not ground"));
        }
        sig.check_literal(&l).map_err(|e| ParseError::Sort { axiom: "goal".into(), message: e.to_string() })?;
        out.push(l);
        if !cur.eat(&Tok::Comma) {
            break;
        }
    }
    if !cur.done() {
        return cur.err("unexpected trailing input");
    }
    Ok(out)
}

/// Parses a single ground action such as `pickup(rob1, green_can)`.
pub fn parse_action(text: &str, sig: &Signature) -> Result<crate::kr::Action, ParseError> {
    let toks = lex(text, 1)?;
    let mut cur = Cursor { toks: &toks, pos: 0, line: 1, end_col: text.len() + 1 };
    let mut l = literal(&mut cur)?;
    l.kind = LitKind::Action;
    sig.check_literal(&l).map_err(|e| ParseError::Sort { axiom: "action".into(), message: e.to_string() })?;
    crate::kr::Action::from_literal(&l).ok_or_else(|| ParseError::Syntax {
        line: 1,
        column: 1,
        message: "action must be ground".into(),
    })
}

fn schema_line(kw: &str, s: &PredSchema) -> String {
    let mut line = format!("{kw} {}", s.name);
    if !s.args.is_empty() {
        line.push_str(&format!("({})", s.args.join(", ")));
    }
    if s.inertial {
        line.push_str(" inertial");
        if !s.non_inertial_keys.is_empty() {
            line.push_str(&format!(" except {}", s.non_inertial_keys.join(", ")));
        }
    }
    line
}

/// Renders a domain back into the grammar accepted by [`parse_domain`].
pub fn serialize_domain(d: &DomainDescription) -> String {
    let sig = &d.signature;
    let mut out = String::new();
    // parents before children so `<` always names a declared sort
    let mut emitted: Vec<&String> = Vec::new();
    while emitted.len() < sig.sorts.len() {
        for (name, consts) in &sig.sorts {
            if emitted.contains(&name) {
                continue;
            }
            let parent = sig.parents.get(name);
            if parent.is_some_and(|p| !emitted.contains(&p)) {
                continue;
            }
            out.push_str(&format!("sort {name}"));
            if let Some(p) = parent {
                out.push_str(&format!(" < {p}"));
            }
            if !consts.is_empty() {
                let cs: Vec<&str> = consts.iter().map(|s| s.as_str()).collect();
                out.push_str(&format!(" = {}", cs.join(", ")));
            }
            out.push('\n');
            emitted.push(name);
        }
    }
    out.push('\n');
    for s in &sig.statics {
        out.push_str(&schema_line("static", s));
        out.push('\n');
    }
    for s in &sig.fluents {
        out.push_str(&schema_line("fluent", s));
        out.push('\n');
    }
    for s in &sig.actions {
        out.push_str(&schema_line("action", s));
        out.push('\n');
    }
    out.push_str(&format!("max_step {}\n\n", sig.max_step));
    for a in d.axioms.iter().chain(&d.defaults) {
        out.push_str(&a.to_string());
        out.push('\n');
    }
    out
}

/// Serializes learned axioms with their annotation comments.
pub fn serialize_learned(axioms: &[LearnedAxiom]) -> String {
    let mut out = String::new();
    for l in axioms {
        out.push_str(&format!("# learned strength={:.4} support={}\n", l.strength, l.support));
        out.push_str(&l.axiom.to_string());
        out.push('\n');
    }
    out
}

/// Parses a file of learned axioms against an existing domain.
pub fn parse_learned(text: &str, base: &DomainDescription) -> Result<Vec<LearnedAxiom>, ParseError> {
    let mut full = serialize_domain(&DomainDescription {
        signature: base.signature.clone(),
        axioms: Vec::new(),
        defaults: Vec::new(),
    });
    full.push_str(text);
    Ok(parse_domain_with_learned(&full)?.1)
}

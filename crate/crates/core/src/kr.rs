//! Domain representation: sorts, terms, literals, axioms, states and
//! histories, plus the grounding and substitution machinery every other
//! module builds on.
//!
//! Belief is three-valued and encoded by set membership: a [`State`] holding
//! `l` believes `l`, holding `-l` believes its negation, holding neither
//! leaves it unknown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrError {
    #[error("undeclared sort `{0}`")]
    UndeclaredSort(String),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("`{pred}` expects {expected} arguments, got {got}")]
    ArityMismatch { pred: String, expected: usize, got: usize },
    #[error("sort error in axiom {axiom}: {msg}")]
    SortError { axiom: String, msg: String },
    #[error("ill-formed axiom {axiom}: {msg}")]
    InvalidAxiom { axiom: String, msg: String },
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    Const(String),
    Var { name: String, sort: Option<String> },
}

impl Term {
    pub fn c(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn v(name: &str) -> Term {
        Term::Var { name: name.to_string(), sort: None }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var { .. })
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var { .. } => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Const(c) => c,
            Term::Var { name, .. } => name,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LitKind {
    Fluent,
    Static,
    Action,
    /// Built-in `A = B`.
    Eq,
    /// Built-in `A != B`.
    Neq,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub pred: String,
    pub args: Vec<Term>,
    pub positive: bool,
    pub kind: LitKind,
}

impl Literal {
    pub fn new(kind: LitKind, pred: &str, args: Vec<Term>, positive: bool) -> Self {
        Literal { pred: pred.to_string(), args, positive, kind }
    }

    /// Ground fluent literal from constant names.
    pub fn fluent(pred: &str, args: &[&str], positive: bool) -> Self {
        Literal::new(LitKind::Fluent, pred, args.iter().map(|a| Term::c(a)).collect(), positive)
    }

    pub fn fact(pred: &str, args: &[&str]) -> Self {
        Literal::new(LitKind::Static, pred, args.iter().map(|a| Term::c(a)).collect(), true)
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn is_builtin(&self) -> bool {
        matches!(self.kind, LitKind::Eq | LitKind::Neq)
    }

    pub fn complement(&self) -> Literal {
        let mut l = self.clone();
        l.positive = !l.positive;
        l
    }

    /// Same literal with a positive sign.
    pub fn atom(&self) -> Literal {
        let mut l = self.clone();
        l.positive = true;
        l
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.args {
            if let Term::Var { name, .. } = t {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        out
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| t.as_const())
    }

    pub fn apply(&self, b: &Bindings) -> Literal {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Var { name, .. } => match b.get(name) {
                    Some(c) => Term::Const(c.clone()),
                    None => t.clone(),
                },
                c => c.clone(),
            })
            .collect();
        Literal { pred: self.pred.clone(), args, positive: self.positive, kind: self.kind }
    }

    /// Truth of a ground built-in comparison.
    pub fn eval_builtin(&self) -> Option<bool> {
        let (a, b) = (self.args.first()?.as_const()?, self.args.get(1)?.as_const()?);
        match self.kind {
            LitKind::Eq => Some((a == b) == self.positive),
            LitKind::Neq => Some((a != b) == self.positive),
            _ => None,
        }
    }

    /// First constant argument, used as the grammatical subject by templates.
    pub fn key(&self) -> Option<&str> {
        self.args.first().and_then(|t| t.as_const())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            LitKind::Eq | LitKind::Neq => {
                let op = match (self.kind, self.positive) {
                    (LitKind::Eq, true) | (LitKind::Neq, false) => "=",
                    _ => "!=",
                };
                write!(f, "{} {} {}", self.args[0], op, self.args[1])
            }
            _ => {
                if !self.positive {
                    f.write_str("-")?;
                }
                write!(f, "{}", self.pred)?;
                if !self.args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in self.args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A ground action such as `pickup(rob1, green_can)`. Ordering is
/// lexicographic over (name, arguments), which the planner relies on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub args: Vec<String>,
}

impl Action {
    pub fn new(name: &str, args: &[&str]) -> Self {
        Action { name: name.to_string(), args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn to_literal(&self) -> Literal {
        Literal::new(LitKind::Action, &self.name, self.args.iter().map(|a| Term::Const(a.clone())).collect(), true)
    }

    pub fn from_literal(l: &Literal) -> Option<Action> {
        if l.kind != LitKind::Action || !l.is_ground() {
            return None;
        }
        Some(Action { name: l.pred.clone(), args: l.args.iter().map(|t| t.name().to_string()).collect() })
    }

    /// The manipulated object: the first non-robot argument.
    pub fn object(&self) -> Option<&str> {
        self.args.get(1).map(|s| s.as_str())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxiomKind {
    CausalLaw,
    StateConstraint,
    ExecutabilityCondition,
    InitialDefault,
}

impl AxiomKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AxiomKind::CausalLaw => "causal",
            AxiomKind::StateConstraint => "constraint",
            AxiomKind::ExecutabilityCondition => "impossible",
            AxiomKind::InitialDefault => "default",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BodyLit {
    pub lit: Literal,
    /// Default negation (`not l`).
    pub naf: bool,
}

impl BodyLit {
    pub fn pos(lit: Literal) -> Self {
        BodyLit { lit, naf: false }
    }

    pub fn not(lit: Literal) -> Self {
        BodyLit { lit, naf: true }
    }
}

impl fmt::Display for BodyLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.naf {
            f.write_str("not ")?;
        }
        write!(f, "{}", self.lit)
    }
}

/// An axiom with implicitly universally quantified variables.
///
/// Causal laws keep their action occurrence in the body; an executability
/// condition's head is the negated action occurrence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Axiom {
    pub id: String,
    pub kind: AxiomKind,
    pub head: Literal,
    pub body: Vec<BodyLit>,
}

impl Axiom {
    /// The action occurrence of a causal law.
    pub fn action(&self) -> Option<&Literal> {
        match self.kind {
            AxiomKind::CausalLaw => self.body.iter().map(|b| &b.lit).find(|l| l.kind == LitKind::Action),
            AxiomKind::ExecutabilityCondition => Some(&self.head),
            _ => None,
        }
    }

    /// Body items other than the action occurrence.
    pub fn conditions(&self) -> impl Iterator<Item = &BodyLit> {
        self.body.iter().filter(|b| b.lit.kind != LitKind::Action)
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = self.head.vars();
        for b in &self.body {
            for v in b.lit.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn apply(&self, b: &Bindings) -> Axiom {
        Axiom {
            id: self.id.clone(),
            kind: self.kind,
            head: self.head.apply(b),
            body: self.body.iter().map(|x| BodyLit { lit: x.lit.apply(b), naf: x.naf }).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.head.is_ground() && self.body.iter().all(|b| b.lit.is_ground())
    }

    /// Structural invariants that do not need a signature.
    pub fn check_shape(&self) -> Result<(), KrError> {
        let bad = |msg: &str| Err(KrError::InvalidAxiom { axiom: self.id.clone(), msg: msg.into() });
        if self.head.is_builtin() {
            return bad("built-in comparison in head");
        }
        let n_actions = self.body.iter().filter(|b| b.lit.kind == LitKind::Action).count();
        match self.kind {
            AxiomKind::CausalLaw => {
                if self.head.kind != LitKind::Fluent {
                    return bad("causal law head must be a fluent literal");
                }
                if n_actions != 1 {
                    return bad("causal law body needs exactly one action occurrence");
                }
                if self.body.iter().any(|b| b.lit.kind == LitKind::Action && (b.naf || !b.lit.positive)) {
                    return bad("action occurrence must be positive");
                }
            }
            AxiomKind::StateConstraint | AxiomKind::InitialDefault => {
                if !matches!(self.head.kind, LitKind::Fluent | LitKind::Static) {
                    return bad("head must be a fluent or static literal");
                }
                if n_actions != 0 {
                    return bad("action occurrence in a state constraint");
                }
            }
            AxiomKind::ExecutabilityCondition => {
                if self.head.kind != LitKind::Action || self.head.positive {
                    return bad("executability head must be a negated action occurrence");
                }
                if n_actions != 0 {
                    return bad("action occurrence in an executability body");
                }
            }
        }
        // safety: head variables and variables of negated/built-in items
        // must be bound by a positive body literal or, for actions, the head
        let mut bound: BTreeSet<String> = BTreeSet::new();
        for b in &self.body {
            if !b.naf && !b.lit.is_builtin() {
                bound.extend(b.lit.vars());
            }
        }
        if self.kind == AxiomKind::ExecutabilityCondition {
            bound.extend(self.head.vars());
        }
        if self.kind == AxiomKind::InitialDefault || self.kind == AxiomKind::StateConstraint {
            // defaults and constraints may quantify head variables over sorts
            bound.extend(self.head.vars());
        }
        for v in self.head.vars() {
            if !bound.contains(&v) {
                return bad(&format!("unsafe head variable {v}"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let conds: Vec<String> = self.conditions().map(|b| b.to_string()).collect();
        write!(f, "{} {}: ", self.kind.keyword(), self.id)?;
        match self.kind {
            AxiomKind::CausalLaw => write!(f, "{} causes {}", self.action().expect("causal action"), self.head)?,
            AxiomKind::ExecutabilityCondition => write!(f, "{}", self.head.atom())?,
            _ => write!(f, "{}", self.head)?,
        }
        if !conds.is_empty() {
            write!(f, " if {}", conds.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredSchema {
    pub name: String,
    pub args: Vec<String>,
    pub inertial: bool,
    /// Values of the first argument for which an otherwise inertial fluent
    /// is defined by constraints instead (e.g. `below`, `above`).
    pub non_inertial_keys: Vec<String>,
}

impl PredSchema {
    pub fn new(name: &str, args: &[&str]) -> Self {
        PredSchema {
            name: name.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
            inertial: false,
            non_inertial_keys: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    /// Constants declared directly in each sort.
    pub sorts: BTreeMap<String, BTreeSet<String>>,
    pub parents: BTreeMap<String, String>,
    pub statics: Vec<PredSchema>,
    pub fluents: Vec<PredSchema>,
    pub actions: Vec<PredSchema>,
    pub max_step: usize,
}

pub const DEFAULT_MAX_STEP: usize = 12;

impl Signature {
    pub fn new() -> Self {
        Signature { max_step: DEFAULT_MAX_STEP, ..Default::default() }
    }

    pub fn declare_sort(&mut self, sort: &str, parent: Option<&str>) {
        self.sorts.entry(sort.to_string()).or_default();
        if let Some(p) = parent {
            self.parents.insert(sort.to_string(), p.to_string());
        }
    }

    pub fn add_constant(&mut self, sort: &str, c: &str) {
        self.sorts.entry(sort.to_string()).or_default().insert(c.to_string());
    }

    pub fn has_sort(&self, sort: &str) -> bool {
        self.sorts.contains_key(sort)
    }

    /// `a` equals `b` or descends from it.
    pub fn is_subsort(&self, a: &str, b: &str) -> bool {
        let mut cur = Some(a);
        while let Some(s) = cur {
            if s == b {
                return true;
            }
            cur = self.parents.get(s).map(|p| p.as_str());
        }
        false
    }

    /// Every constant of `sort`, including those of its descendants.
    pub fn constants_of(&self, sort: &str) -> Result<BTreeSet<String>, KrError> {
        if !self.has_sort(sort) {
            return Err(KrError::UndeclaredSort(sort.to_string()));
        }
        let mut out = BTreeSet::new();
        for (s, cs) in &self.sorts {
            if self.is_subsort(s, sort) {
                out.extend(cs.iter().cloned());
            }
        }
        Ok(out)
    }

    /// The leaf-most sort a constant was declared in.
    pub fn sort_of(&self, c: &str) -> Option<&str> {
        self.sorts.iter().find(|(_, cs)| cs.contains(c)).map(|(s, _)| s.as_str())
    }

    pub fn member(&self, c: &str, sort: &str) -> bool {
        self.sort_of(c).is_some_and(|s| self.is_subsort(s, sort))
    }

    pub fn schema(&self, pred: &str) -> Option<(LitKind, &PredSchema)> {
        if let Some(s) = self.fluents.iter().find(|s| s.name == pred) {
            return Some((LitKind::Fluent, s));
        }
        if let Some(s) = self.statics.iter().find(|s| s.name == pred) {
            return Some((LitKind::Static, s));
        }
        self.actions.iter().find(|s| s.name == pred).map(|s| (LitKind::Action, s))
    }

    pub fn is_inertial(&self, l: &Literal) -> bool {
        if l.kind != LitKind::Fluent {
            return false;
        }
        match self.fluents.iter().find(|s| s.name == l.pred) {
            Some(s) => s.inertial && !l.key().is_some_and(|k| s.non_inertial_keys.iter().any(|n| n == k)),
            None => false,
        }
    }

    /// Checks arity and, for constant arguments, sort membership.
    pub fn check_literal(&self, l: &Literal) -> Result<(), KrError> {
        if l.is_builtin() {
            return if l.args.len() == 2 {
                Ok(())
            } else {
                Err(KrError::ArityMismatch { pred: l.pred.clone(), expected: 2, got: l.args.len() })
            };
        }
        let (kind, schema) = self.schema(&l.pred).ok_or_else(|| KrError::UnknownPredicate(l.pred.clone()))?;
        if kind != l.kind {
            return Err(KrError::UnknownPredicate(format!("{} used as {:?}", l.pred, l.kind)));
        }
        if schema.args.len() != l.args.len() {
            return Err(KrError::ArityMismatch {
                pred: l.pred.clone(),
                expected: schema.args.len(),
                got: l.args.len(),
            });
        }
        for (t, sort) in l.args.iter().zip(&schema.args) {
            if let Term::Const(c) = t {
                if !self.member(c, sort) {
                    return Err(KrError::SortError {
                        axiom: l.to_string(),
                        msg: format!("`{c}` is not of sort {sort}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), KrError> {
        let mut names = BTreeSet::new();
        for s in self.fluents.iter().chain(&self.statics).chain(&self.actions) {
            if !names.insert(&s.name) {
                return Err(KrError::InvalidSignature(format!("duplicate name {}", s.name)));
            }
            for a in &s.args {
                if !self.has_sort(a) {
                    return Err(KrError::UndeclaredSort(a.clone()));
                }
            }
        }
        for p in self.parents.values() {
            if !self.has_sort(p) {
                return Err(KrError::UndeclaredSort(p.clone()));
            }
        }
        Ok(())
    }

    /// Infers the sort of each variable of an axiom: the most specific of
    /// the sorts of the argument positions it occupies.
    pub fn var_sorts(&self, ax: &Axiom) -> Result<BTreeMap<String, String>, KrError> {
        let mut out: BTreeMap<String, String> = BTreeMap::new();
        let lits = std::iter::once(&ax.head).chain(ax.body.iter().map(|b| &b.lit));
        for l in lits {
            if l.is_builtin() {
                continue;
            }
            let (_, schema) = self.schema(&l.pred).ok_or_else(|| KrError::UnknownPredicate(l.pred.clone()))?;
            if schema.args.len() != l.args.len() {
                return Err(KrError::ArityMismatch {
                    pred: l.pred.clone(),
                    expected: schema.args.len(),
                    got: l.args.len(),
                });
            }
            for (t, sort) in l.args.iter().zip(&schema.args) {
                let Term::Var { name, sort: declared } = t else { continue };
                let sort = declared.as_deref().unwrap_or(sort);
                match out.get(name) {
                    None => {
                        out.insert(name.clone(), sort.to_string());
                    }
                    Some(prev) if self.is_subsort(sort, prev) => {
                        out.insert(name.clone(), sort.to_string());
                    }
                    Some(prev) if self.is_subsort(prev, sort) => {}
                    Some(prev) => {
                        return Err(KrError::SortError {
                            axiom: ax.id.clone(),
                            msg: format!("variable {name} used as both {prev} and {sort}"),
                        })
                    }
                }
            }
        }
        for l in std::iter::once(&ax.head).chain(ax.body.iter().map(|b| &b.lit)) {
            if l.is_builtin() {
                for v in l.vars() {
                    if !out.contains_key(&v) {
                        return Err(KrError::SortError {
                            axiom: ax.id.clone(),
                            msg: format!("variable {v} only occurs in a comparison"),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Fills in variable sorts and checks every literal of an axiom.
    pub fn resolve_axiom(&self, ax: &Axiom) -> Result<Axiom, KrError> {
        ax.check_shape()?;
        let sorts = self.var_sorts(ax)?;
        let fix = |l: &Literal| -> Result<Literal, KrError> {
            let mut l = l.clone();
            for t in &mut l.args {
                if let Term::Var { name, sort } = t {
                    *sort = sorts.get(name).cloned();
                }
            }
            if !l.is_builtin() {
                self.check_literal(&l).map_err(|e| KrError::SortError { axiom: ax.id.clone(), msg: e.to_string() })?;
            }
            Ok(l)
        };
        let head = fix(&ax.head)?;
        let body = ax
            .body
            .iter()
            .map(|b| Ok(BodyLit { lit: fix(&b.lit)?, naf: b.naf }))
            .collect::<Result<Vec<_>, KrError>>()?;
        Ok(Axiom { id: ax.id.clone(), kind: ax.kind, head, body })
    }
}

/// Structural matching of a pattern against a ground literal. Sorts are not
/// consulted; see [`unify_in`].
pub fn unify(pattern: &Literal, ground: &Literal) -> Option<Bindings> {
    unify_with(pattern, ground, Bindings::new())
}

/// Extends existing bindings; `None` on any clash.
pub fn unify_with(pattern: &Literal, ground: &Literal, mut b: Bindings) -> Option<Bindings> {
    if pattern.pred != ground.pred
        || pattern.positive != ground.positive
        || pattern.kind != ground.kind
        || pattern.args.len() != ground.args.len()
    {
        return None;
    }
    for (p, g) in pattern.args.iter().zip(&ground.args) {
        let g = g.as_const()?;
        match p {
            Term::Const(c) if c == g => {}
            Term::Const(_) => return None,
            Term::Var { name, .. } => match b.get(name) {
                Some(v) if v == g => {}
                Some(_) => return None,
                None => {
                    b.insert(name.clone(), g.to_string());
                }
            },
        }
    }
    Some(b)
}

/// Sort-respecting unification: every bound variable's constant must belong
/// to the variable's sort (when the sort is known).
pub fn unify_in(sig: &Signature, pattern: &Literal, ground: &Literal) -> Option<Bindings> {
    let b = unify(pattern, ground)?;
    for t in &pattern.args {
        if let Term::Var { name, sort: Some(s) } = t {
            if !sig.member(&b[name], s) {
                return None;
            }
        }
    }
    Some(b)
}

pub fn complement(l: &Literal) -> Literal {
    l.complement()
}

/// Enumerates every sort-respecting substitution of the given variables.
pub fn substitutions(sig: &Signature, vars: &[(String, String)], seed: Bindings) -> Result<Vec<Bindings>, KrError> {
    let mut domains = Vec::with_capacity(vars.len());
    for (_, sort) in vars {
        domains.push(sig.constants_of(sort)?.into_iter().collect::<Vec<_>>());
    }
    let mut out = vec![seed];
    for ((name, _), dom) in vars.iter().zip(&domains) {
        let mut next = Vec::with_capacity(out.len() * dom.len());
        for b in &out {
            if b.contains_key(name) {
                next.push(b.clone());
                continue;
            }
            for c in dom {
                let mut nb = b.clone();
                nb.insert(name.clone(), c.clone());
                next.push(nb);
            }
        }
        out = next;
    }
    Ok(out)
}

/// All sort-respecting ground instances of an axiom, deduplicated.
/// Instances whose built-in comparisons fail are dropped.
pub fn ground_axiom(axiom: &Axiom, sig: &Signature) -> Result<Vec<Axiom>, KrError> {
    let sorts = sig.var_sorts(axiom)?;
    let vars: Vec<(String, String)> = sorts.into_iter().collect();
    let mut out = BTreeSet::new();
    for b in substitutions(sig, &vars, Bindings::new())? {
        let g = axiom.apply(&b);
        if g.body.iter().all(|x| !x.lit.is_builtin() || x.lit.eval_builtin() == Some(true)) {
            let body = g.body.into_iter().filter(|x| !x.lit.is_builtin()).collect();
            out.insert(Axiom { body, ..g });
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State {
    pub step: usize,
    pub lits: BTreeSet<Literal>,
}

impl State {
    pub fn new(step: usize, lits: impl IntoIterator<Item = Literal>) -> Self {
        State { step, lits: lits.into_iter().collect() }
    }

    pub fn contains(&self, l: &Literal) -> bool {
        self.lits.contains(l)
    }

    /// Satisfaction of a ground body item.
    pub fn satisfies(&self, b: &BodyLit) -> bool {
        if let Some(v) = b.lit.eval_builtin() {
            return v != b.naf;
        }
        self.lits.contains(&b.lit) != b.naf
    }

    pub fn is_consistent(&self) -> bool {
        self.lits.iter().all(|l| l.positive || !self.lits.contains(&l.atom()))
    }

    pub fn fluents(&self) -> impl Iterator<Item = &Literal> {
        self.lits.iter().filter(|l| l.kind == LitKind::Fluent)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    pub observations: Vec<(Literal, usize)>,
    pub happened: Vec<(Action, usize)>,
    pub defaults: Vec<Axiom>,
    pub retracted_defaults: BTreeSet<Literal>,
}

impl History {
    pub fn observed_at(&self, step: usize) -> impl Iterator<Item = &Literal> {
        self.observations.iter().filter(move |(_, s)| *s == step).map(|(l, _)| l)
    }

    pub fn is_observed(&self, l: &Literal, step: usize) -> bool {
        self.observations.iter().any(|(o, s)| *s == step && o == l)
    }

    pub fn check(&self, sig: &Signature) -> Result<(), KrError> {
        for (l, s) in &self.observations {
            if *s > sig.max_step {
                return Err(KrError::InvalidSignature(format!("observation {l} beyond max_step")));
            }
        }
        for w in self.happened.windows(2) {
            if w[1].1 <= w[0].1 {
                return Err(KrError::InvalidSignature("happened steps must increase".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Seeded,
    Learned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedAxiom {
    pub axiom: Axiom,
    pub strength: f64,
    pub support: usize,
    pub cycles_seen: usize,
    pub provenance: Provenance,
}

impl LearnedAxiom {
    pub fn fresh(axiom: Axiom, support: usize) -> Self {
        LearnedAxiom { axiom, strength: 1.0, support, cycles_seen: 1, provenance: Provenance::Learned }
    }
}

/// System description: signature, axioms, and initial-state defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDescription {
    pub signature: Signature,
    pub axioms: Vec<Axiom>,
    pub defaults: Vec<Axiom>,
}

impl DomainDescription {
    pub fn axiom(&self, id: &str) -> Option<&Axiom> {
        self.axioms.iter().chain(&self.defaults).find(|a| a.id == id)
    }

    /// Copy with the given axiom ids removed.
    pub fn without(&self, ids: &[&str]) -> DomainDescription {
        let keep = |a: &&Axiom| !ids.contains(&a.id.as_str());
        DomainDescription {
            signature: self.signature.clone(),
            axioms: self.axioms.iter().filter(keep).cloned().collect(),
            defaults: self.defaults.iter().filter(keep).cloned().collect(),
        }
    }

    /// Copy extended with extra axioms (already sort-resolved or not).
    pub fn with_axioms(&self, extra: impl IntoIterator<Item = Axiom>) -> Result<Self, KrError> {
        let mut d = self.clone();
        for a in extra {
            d.axioms.push(d.signature.resolve_axiom(&a)?);
        }
        Ok(d)
    }

    /// Adds object constants (with their sort) to the signature.
    pub fn with_objects<'a>(&self, objs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut d = self.clone();
        for (sort, c) in objs {
            d.signature.add_constant(sort, c);
        }
        d
    }

    pub fn of_kind(&self, k: AxiomKind) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().filter(move |a| a.kind == k)
    }
}

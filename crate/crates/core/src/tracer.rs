//! Belief tracing: proof trees showing how a belief follows from axioms,
//! observations, executed actions, and defaults.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kr::{unify, Axiom, AxiomKind, Bindings, DomainDescription, LitKind, Literal, Term};
use crate::reasoner::BeliefTrajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("step {step} is outside the trajectory (last step {last})")]
    StepOutOfRange { step: usize, last: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Justification {
    /// A ground instance of an axiom whose body held.
    Axiom {
        id: String,
        bindings: Bindings,
    },
    /// The literal held unchanged since `from`.
    Inertia {
        from: usize,
    },
    Observed(usize),
    Happened(usize),
    Default(String),
    /// A negation-as-failure condition: the atom was not believed.
    Absent,
    Unsupported,
}

impl Justification {
    pub fn is_leaf(&self) -> bool {
        !matches!(self, Justification::Axiom { .. } | Justification::Inertia { .. })
    }

    fn label(&self) -> String {
        match self {
            Justification::Axiom { id, .. } => id.clone(),
            Justification::Inertia { from } => format!("persisted from step {from}"),
            Justification::Observed(i) => format!("observed at step {i}"),
            Justification::Happened(i) => format!("happened at step {i}"),
            Justification::Default(id) => format!("default {id}"),
            Justification::Absent => "not believed".into(),
            Justification::Unsupported => "unsupported".into(),
        }
    }

    fn order_key(&self) -> String {
        match self {
            Justification::Axiom { id, .. } => format!("1{id}"),
            Justification::Inertia { .. } => "2".into(),
            other => format!("0{}", other.label()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub just: Justification,
    pub children: Vec<ProofNode>,
}

/// A belief with every way it is supported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofNode {
    pub belief: Literal,
    pub step: usize,
    pub branches: Vec<Branch>,
}

impl ProofNode {
    fn leaf(belief: Literal, step: usize, just: Justification) -> Self {
        ProofNode { belief, step, branches: vec![Branch { just, children: Vec::new() }] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofTree {
    pub root: ProofNode,
}

/// One link of an explanation chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub belief: Literal,
    pub step: usize,
    pub just: Justification,
}

struct Tracer<'a> {
    domain: &'a DomainDescription,
    traj: &'a BeliefTrajectory,
}

impl Tracer<'_> {
    fn holds(&self, l: &Literal, i: usize) -> bool {
        match l.kind {
            LitKind::Action if l.positive => {
                crate::kr::Action::from_literal(l).is_some_and(|a| self.traj.occurred(&a, i))
            }
            _ => self.traj.holds(l, i),
        }
    }

    /// Groundings of `body` (already under `b`) supported at step `i`:
    /// positive items matched against the state, then NAF and built-ins
    /// checked.
    fn support(&self, ax: &Axiom, b: Bindings, i: usize) -> Vec<Bindings> {
        let Some(state) = self.traj.state(i) else { return Vec::new() };
        let pos: Vec<&Literal> = ax.body.iter().filter(|x| !x.naf && !x.lit.is_builtin()).map(|x| &x.lit).collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, b)];
        while let Some((k, b)) = stack.pop() {
            let Some(p) = pos.get(k) else {
                let ok = ax.body.iter().all(|x| {
                    let g = x.lit.apply(&b);
                    if !g.is_ground() {
                        return false;
                    }
                    if let Some(v) = g.eval_builtin() {
                        return v != x.naf;
                    }
                    x.naf != self.holds(&g, i)
                });
                if ok {
                    out.push(b);
                }
                continue;
            };
            let pat = p.apply(&b);
            if pat.is_ground() {
                if self.holds(&pat, i) {
                    stack.push((k + 1, b));
                }
                continue;
            }
            let cands: Vec<Literal> = if pat.kind == LitKind::Action {
                self.traj.occurrences.iter().filter(|(_, s)| *s == i).map(|(a, _)| a.to_literal()).collect()
            } else {
                state.lits.iter().filter(|l| l.pred == pat.pred && l.positive == pat.positive).cloned().collect()
            };
            for c in cands.iter().rev() {
                if let Some(u) = unify(&pat, c) {
                    if self.sorts_ok(&pat, &u) {
                        let mut nb = b.clone();
                        nb.extend(u);
                        stack.push((k + 1, nb));
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    fn sorts_ok(&self, pat: &Literal, u: &Bindings) -> bool {
        pat.args.iter().all(|t| match t {
            Term::Var { name, sort: Some(s) } => u.get(name).is_none_or(|c| self.domain.signature.member(c, s)),
            _ => true,
        })
    }

    fn axiom_branches(
        &self,
        l: &Literal,
        kinds: &[AxiomKind],
        at: usize,
        seen: &mut BTreeSet<(Literal, usize)>,
    ) -> Vec<Branch> {
        let mut out = Vec::new();
        for ax in self.domain.axioms.iter().filter(|a| kinds.contains(&a.kind)) {
            let Some(b) = unify(&ax.head, l) else { continue };
            if !self.sorts_ok(&ax.head, &b) {
                continue;
            }
            for g in self.support(ax, b, at) {
                let children = ax
                    .body
                    .iter()
                    .filter(|x| !x.lit.is_builtin())
                    .map(|x| {
                        let c = x.lit.apply(&g);
                        if x.naf {
                            ProofNode::leaf(c, at, Justification::Absent)
                        } else {
                            self.node(&c, at, seen)
                        }
                    })
                    .collect();
                out.push(Branch { just: Justification::Axiom { id: ax.id.clone(), bindings: g }, children });
            }
        }
        out
    }

    fn caused_at(&self, l: &Literal, i: usize) -> bool {
        i > 0
            && self
                .domain
                .of_kind(AxiomKind::CausalLaw)
                .any(|ax| unify(&ax.head, l).is_some_and(|b| !self.support(ax, b, i - 1).is_empty()))
    }

    fn node(&self, l: &Literal, i: usize, seen: &mut BTreeSet<(Literal, usize)>) -> ProofNode {
        let key = (l.clone(), i);
        if !seen.insert(key.clone()) {
            return ProofNode::leaf(l.clone(), i, Justification::Unsupported);
        }
        let n = self.expand(l, i, seen);
        seen.remove(&key);
        n
    }

    fn expand(&self, l: &Literal, i: usize, seen: &mut BTreeSet<(Literal, usize)>) -> ProofNode {
        let unsupported = || ProofNode::leaf(l.clone(), i, Justification::Unsupported);
        if l.kind == LitKind::Action {
            if l.positive {
                return if self.holds(l, i) {
                    ProofNode::leaf(l.clone(), i, Justification::Happened(i))
                } else {
                    unsupported()
                };
            }
            let branches = self.axiom_branches(l, &[AxiomKind::ExecutabilityCondition], i, seen);
            return if branches.is_empty() {
                unsupported()
            } else {
                ProofNode { belief: l.clone(), step: i, branches }
            };
        }
        if !self.holds(l, i) {
            return unsupported();
        }
        if l.kind == LitKind::Static {
            return match (0..=i).find(|&j| self.traj.is_observed(l, j)) {
                Some(j) => ProofNode::leaf(l.clone(), i, Justification::Observed(j)),
                None => unsupported(),
            };
        }
        if self.traj.is_observed(l, i) {
            return ProofNode::leaf(l.clone(), i, Justification::Observed(i));
        }
        if i == 0 {
            if let Some((_, id)) = self.traj.applied_defaults.iter().find(|(d, _)| d == l) {
                return ProofNode::leaf(l.clone(), i, Justification::Default(id.clone()));
            }
        }
        let mut branches = self.axiom_branches(l, &[AxiomKind::StateConstraint], i, seen);
        if i > 0 {
            branches.extend(self.axiom_branches(l, &[AxiomKind::CausalLaw], i - 1, seen));
            if self.domain.signature.is_inertial(l) && self.holds(l, i - 1) {
                let mut j = i - 1;
                while j > 0 && self.holds(l, j - 1) && !self.traj.is_observed(l, j) && !self.caused_at(l, j) {
                    j -= 1;
                }
                branches
                    .push(Branch { just: Justification::Inertia { from: j }, children: vec![self.node(l, j, seen)] });
            }
        }
        branches.sort_by_key(|b| b.just.order_key());
        if branches.is_empty() {
            return unsupported();
        }
        ProofNode { belief: l.clone(), step: i, branches }
    }
}

/// Groundings extending `b` under which the body of `ax` held at `step`.
pub(crate) fn body_support(
    domain: &DomainDescription,
    traj: &BeliefTrajectory,
    ax: &Axiom,
    b: Bindings,
    step: usize,
) -> Vec<Bindings> {
    Tracer { domain, traj }.support(ax, b, step)
}

/// Builds the proof tree of `belief` at `step`. A belief not held in the
/// trajectory gets a single unsupported root.
pub fn trace(
    domain: &DomainDescription,
    traj: &BeliefTrajectory,
    belief: &Literal,
    step: usize,
) -> Result<ProofTree, TraceError> {
    let last = traj.last_step();
    if step > last {
        return Err(TraceError::StepOutOfRange { step, last });
    }
    let t = Tracer { domain, traj };
    Ok(ProofTree { root: t.node(belief, step, &mut BTreeSet::new()) })
}

impl ProofTree {
    /// Root-to-leaf chains, shortest first, ties broken by the axiom ids
    /// along the chain.
    pub fn paths(&self) -> Vec<Vec<PathStep>> {
        fn walk(n: &ProofNode, prefix: &mut Vec<PathStep>, out: &mut Vec<Vec<PathStep>>) {
            for b in &n.branches {
                prefix.push(PathStep { belief: n.belief.clone(), step: n.step, just: b.just.clone() });
                if b.children.is_empty() {
                    out.push(prefix.clone());
                } else {
                    for c in &b.children {
                        walk(c, prefix, out);
                    }
                }
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out.sort_by_key(|p| (p.len(), p.iter().map(|s| s.just.order_key()).collect::<Vec<_>>()));
        out
    }

    pub fn depth(&self) -> usize {
        fn d(n: &ProofNode) -> usize {
            1 + n.branches.iter().flat_map(|b| b.children.iter().map(d)).max().unwrap_or(0)
        }
        d(&self.root)
    }

    pub fn leaves(&self) -> Vec<&ProofNode> {
        fn walk<'a>(n: &'a ProofNode, out: &mut Vec<&'a ProofNode>) {
            for b in &n.branches {
                if b.children.is_empty() {
                    out.push(n);
                }
                for c in &b.children {
                    walk(c, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Indented text, one line per (belief, support).
    pub fn to_text(&self) -> String {
        fn walk(n: &ProofNode, depth: usize, out: &mut String) {
            for b in &n.branches {
                let _ = writeln!(out, "{}{}@{}  [{}]", "  ".repeat(depth), n.belief, n.step, b.just.label());
                for c in &b.children {
                    walk(c, depth + 1, out);
                }
            }
        }
        let mut s = String::new();
        walk(&self.root, 0, &mut s);
        s
    }

    /// Graphviz dot: one node per belief, one edge per support.
    pub fn to_dot(&self) -> String {
        fn walk(n: &ProofNode, id: &mut usize, out: &mut String) -> usize {
            let me = *id;
            *id += 1;
            let _ = writeln!(out, "  n{me} [label=\"{}@{}\"];", n.belief, n.step);
            for b in &n.branches {
                if b.children.is_empty() {
                    let leaf = *id;
                    *id += 1;
                    let _ = writeln!(out, "  n{leaf} [shape=box, label=\"{}\"];", b.just.label());
                    let _ = writeln!(out, "  n{me} -> n{leaf};");
                }
                for c in &b.children {
                    let k = walk(c, id, out);
                    let _ = writeln!(out, "  n{me} -> n{k} [label=\"{}\"];", b.just.label());
                }
            }
            me
        }
        let mut s = String::from("digraph proof {\n");
        walk(&self.root, &mut 0, &mut s);
        s.push_str("}\n");
        s
    }
}

/// Re-checks a tree against the axioms and trajectory: every axiom branch's
/// children are exactly its grounded body, each child holds (or, for
/// negation as failure, does not hold) at its step, no belief repeats along
/// a path, and unsupported leaves really have no support.
pub fn check_soundness(tree: &ProofTree, domain: &DomainDescription, traj: &BeliefTrajectory) -> Result<(), String> {
    let t = Tracer { domain, traj };
    fn walk(t: &Tracer, n: &ProofNode, path: &mut Vec<(Literal, usize)>, root: bool) -> Result<(), String> {
        let key = (n.belief.clone(), n.step);
        if path.contains(&key) {
            return Err(format!("{}@{} repeats along a path", n.belief, n.step));
        }
        path.push(key);
        for b in &n.branches {
            match &b.just {
                Justification::Axiom { id, bindings } => {
                    let ax = t.domain.axiom(id).ok_or_else(|| format!("unknown axiom {id}"))?;
                    let g = ax.apply(bindings);
                    if g.head != n.belief {
                        return Err(format!("{id} head {} is not {}", g.head, n.belief));
                    }
                    let body: Vec<_> = g.body.iter().filter(|x| !x.lit.is_builtin()).collect();
                    if body.len() != b.children.len() {
                        return Err(format!("{id}: {} children for {} conditions", b.children.len(), body.len()));
                    }
                    let at = if ax.kind == AxiomKind::CausalLaw {
                        n.step.checked_sub(1).ok_or("causal at 0")?
                    } else {
                        n.step
                    };
                    for (x, c) in body.iter().zip(&b.children) {
                        if c.belief != x.lit || c.step != at {
                            return Err(format!("{id}: child {}@{} is not {}@{at}", c.belief, c.step, x.lit));
                        }
                        if t.holds(&x.lit, at) == x.naf {
                            return Err(format!("{id}: {} does not hold as required at {at}", x.lit));
                        }
                    }
                    if g.body.iter().any(|x| x.lit.is_builtin() && x.lit.eval_builtin() != Some(!x.naf)) {
                        return Err(format!("{id}: comparison fails"));
                    }
                }
                Justification::Inertia { from } => {
                    if (*from..=n.step).any(|j| !t.holds(&n.belief, j)) {
                        return Err(format!("{} does not persist from {from}", n.belief));
                    }
                }
                Justification::Observed(j) => {
                    if !t.traj.is_observed(&n.belief, *j) {
                        return Err(format!("{} was not observed at {j}", n.belief));
                    }
                }
                Justification::Happened(j) => {
                    if !t.holds(&n.belief, *j) {
                        return Err(format!("{} did not happen at {j}", n.belief));
                    }
                }
                Justification::Default(_) => {
                    if !t.traj.applied_defaults.iter().any(|(d, _)| d == &n.belief) {
                        return Err(format!("{} is not an applied default", n.belief));
                    }
                }
                Justification::Absent => {
                    if t.holds(&n.belief, n.step) {
                        return Err(format!("{} is believed at {}", n.belief, n.step));
                    }
                }
                Justification::Unsupported => {
                    let l = &n.belief;
                    let held = t.holds(l, n.step);
                    // only a believed root may lack support; inner nodes always hold
                    if held || !root {
                        let kinds = [AxiomKind::StateConstraint, AxiomKind::ExecutabilityCondition];
                        let mut seen = BTreeSet::new();
                        let persisted = n.step > 0 && t.domain.signature.is_inertial(l) && t.holds(l, n.step - 1);
                        if !t.axiom_branches(l, &kinds, n.step, &mut seen).is_empty()
                            || t.caused_at(l, n.step)
                            || persisted
                        {
                            return Err(format!("{}@{} marked unsupported but has support", l, n.step));
                        }
                    }
                }
            }
            for c in &b.children {
                walk(t, c, path, false)?;
            }
        }
        path.pop();
        Ok(())
    }
    walk(&t, &tree.root, &mut Vec::new(), true)
}

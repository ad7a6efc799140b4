//! Compiled ground program: atoms interned to integers, states as bitsets,
//! constraint closure by counter-based propagation.
//!
//! A literal id is `atom * 2 + negated`.

use std::collections::HashMap;

use crate::kr::{Action, Axiom, AxiomKind, DomainDescription, KrError, LitKind, Literal, Term};

pub type Lit = u32;

#[inline]
pub fn lit_of(atom: u32, negated: bool) -> Lit {
    atom * 2 + negated as u32
}

#[inline]
pub fn compl(l: Lit) -> Lit {
    l ^ 1
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LitSet(Vec<u64>);

impl LitSet {
    pub fn with_capacity(n_lits: usize) -> Self {
        LitSet(vec![0; n_lits.div_ceil(64)])
    }

    #[inline]
    pub fn has(&self, l: Lit) -> bool {
        self.0[(l / 64) as usize] >> (l % 64) & 1 == 1
    }

    /// Returns true if newly inserted.
    #[inline]
    pub fn insert(&mut self, l: Lit) -> bool {
        let w = &mut self.0[(l / 64) as usize];
        let bit = 1u64 << (l % 64);
        let fresh = *w & bit == 0;
        *w |= bit;
        fresh
    }

    #[inline]
    pub fn remove(&mut self, l: Lit) {
        self.0[(l / 64) as usize] &= !(1u64 << (l % 64));
    }

    pub fn iter(&self) -> impl Iterator<Item = Lit> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some(i as u32 * 64 + b)
            })
        })
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Atoms present with both signs.
    pub fn clashes(&self) -> Vec<u32> {
        let mut out = Vec::new();
        for (i, &w) in self.0.iter().enumerate() {
            // even bits positive, odd bits negative
            let both = w & (w >> 1) & 0x5555_5555_5555_5555;
            let mut b = both;
            while b != 0 {
                let t = b.trailing_zeros();
                b &= b - 1;
                out.push((i as u32 * 64 + t) / 2);
            }
        }
        out
    }

    pub fn is_subset(&self, other: &LitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

#[derive(Clone, Debug)]
pub struct GRule {
    /// Index into [`GroundProgram::axioms`].
    pub axiom: u32,
    /// Literal id, or the action index for executability conditions.
    pub head: u32,
    pub pos: Box<[Lit]>,
    pub naf: Box<[Lit]>,
}

impl GRule {
    #[inline]
    pub fn holds(&self, s: &LitSet) -> bool {
        self.pos.iter().all(|&l| s.has(l)) && !self.naf.iter().any(|&l| s.has(l))
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Const(u32),
}

#[derive(Clone, Debug)]
struct TLit {
    pred: u32,
    args: Vec<Slot>,
    positive: bool,
    naf: bool,
    kind: LitKind,
}

/// The ground form of a domain over a fixed set of constants.
#[derive(Clone, Debug)]
pub struct GroundProgram {
    pub consts: Vec<String>,
    const_ix: HashMap<String, u32>,
    pred_ix: HashMap<String, u32>,
    /// Positive atom per atom id.
    pub atoms: Vec<Literal>,
    atom_ix: HashMap<u64, u32>,
    pub inertial: Vec<bool>,
    pub is_static: Vec<bool>,
    /// Source axioms (excluding defaults), indexed by `GRule::axiom`.
    pub axioms: Vec<Axiom>,
    pub actions: Vec<Action>,
    action_ix: HashMap<u64, u32>,
    pub constraints: Vec<GRule>,
    pub causal: Vec<Vec<GRule>>,
    pub exec: Vec<Vec<GRule>>,
    pub defaults: Vec<GRule>,
    pub default_axioms: Vec<Axiom>,
    sort_members: HashMap<String, Vec<u32>>,
    /// Constraints watching each literal in their positive body.
    watch: Vec<Vec<u32>>,
    /// Constraints with an empty positive body.
    unconditional: Vec<u32>,
    /// Constraints using default negation.
    naf_rules: Vec<u32>,
    need0: Vec<u16>,
}

fn key(pred: u32, args: &[u32]) -> u64 {
    debug_assert!(args.len() <= 4);
    let mut k = pred as u64;
    for &a in args {
        k = (k << 13) | (a as u64 + 1);
    }
    k << (13 * (4 - args.len()))
}

fn product(domains: &[Vec<u32>], mut f: impl FnMut(&[u32])) {
    if domains.iter().any(|d| d.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; domains.len()];
    let mut cur: Vec<u32> = domains.iter().map(|d| d[0]).collect();
    loop {
        f(&cur);
        let mut k = domains.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                cur[k] = domains[k][idx[k]];
                break;
            }
            idx[k] = 0;
            cur[k] = domains[k][0];
        }
    }
}

impl GroundProgram {
    pub fn new(d: &DomainDescription) -> Result<Self, KrError> {
        let sig = &d.signature;
        let mut consts: Vec<String> = sig.sorts.values().flatten().cloned().collect();
        consts.sort();
        consts.dedup();
        if consts.len() >= (1 << 13) - 1 {
            return Err(KrError::InvalidSignature("too many constants".into()));
        }
        let const_ix: HashMap<String, u32> = consts.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect();
        let mut sort_members = HashMap::new();
        for sort in sig.sorts.keys() {
            let m: Vec<u32> = sig.constants_of(sort)?.iter().map(|c| const_ix[c]).collect();
            sort_members.insert(sort.clone(), m);
        }
        let sort_consts = |s: &str| -> Result<Vec<u32>, KrError> {
            sort_members.get(s).cloned().ok_or_else(|| KrError::UndeclaredSort(s.to_string()))
        };

        let schemas: Vec<_> = sig.fluents.iter().chain(&sig.statics).chain(&sig.actions).collect();
        let preds: Vec<String> = schemas.iter().map(|s| s.name.clone()).collect();
        let pred_ix: HashMap<String, u32> = preds.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        for s in &schemas {
            if s.args.len() > 4 {
                return Err(KrError::InvalidSignature(format!("{} has arity above 4", s.name)));
            }
        }

        let mut g = GroundProgram {
            consts,
            const_ix,
            pred_ix,
            atoms: Vec::new(),
            atom_ix: HashMap::new(),
            inertial: Vec::new(),
            is_static: Vec::new(),
            axioms: Vec::new(),
            actions: Vec::new(),
            action_ix: HashMap::new(),
            constraints: Vec::new(),
            causal: Vec::new(),
            exec: Vec::new(),
            defaults: Vec::new(),
            default_axioms: Vec::new(),
            sort_members: HashMap::new(),
            watch: Vec::new(),
            unconditional: Vec::new(),
            naf_rules: Vec::new(),
            need0: Vec::new(),
        };

        for (kind, list) in [(LitKind::Fluent, &sig.fluents), (LitKind::Static, &sig.statics)] {
            for s in list {
                let doms = s.args.iter().map(|a| sort_consts(a)).collect::<Result<Vec<_>, _>>()?;
                let p = g.pred_ix[&s.name];
                product(&doms, |args| {
                    let lit = Literal::new(
                        kind,
                        &s.name,
                        args.iter().map(|&a| Term::c(&g.consts[a as usize])).collect(),
                        true,
                    );
                    let id = g.atoms.len() as u32;
                    g.atom_ix.insert(key(p, args), id);
                    g.inertial.push(sig.is_inertial(&lit));
                    g.is_static.push(kind == LitKind::Static);
                    g.atoms.push(lit);
                });
            }
        }
        let mut actions = Vec::new();
        for s in &sig.actions {
            let doms = s.args.iter().map(|a| sort_consts(a)).collect::<Result<Vec<_>, _>>()?;
            product(&doms, |args| {
                let names: Vec<&str> = args.iter().map(|&a| g.consts[a as usize].as_str()).collect();
                actions.push(Action::new(&s.name, &names));
            });
        }
        actions.sort();
        for (i, a) in actions.iter().enumerate() {
            let p = g.pred_ix[&a.name];
            let args: Vec<u32> = a.args.iter().map(|c| g.const_ix[c]).collect();
            g.action_ix.insert(key(p, &args), i as u32);
        }
        g.sort_members = sort_members;
        g.causal = vec![Vec::new(); actions.len()];
        g.exec = vec![Vec::new(); actions.len()];
        g.actions = actions;

        for ax in &d.axioms {
            let ax = sig.resolve_axiom(ax)?;
            let ix = g.axioms.len() as u32;
            g.ground_into(&ax, ix, false)?;
            g.axioms.push(ax);
        }
        for ax in &d.defaults {
            let ax = sig.resolve_axiom(ax)?;
            let ix = g.default_axioms.len() as u32;
            g.ground_into(&ax, ix, true)?;
            g.default_axioms.push(ax);
        }

        let n_lits = g.atoms.len() * 2;
        g.watch = vec![Vec::new(); n_lits];
        for (i, r) in g.constraints.iter().enumerate() {
            for &l in r.pos.iter() {
                g.watch[l as usize].push(i as u32);
            }
            if r.pos.is_empty() {
                g.unconditional.push(i as u32);
            }
            if !r.naf.is_empty() {
                g.naf_rules.push(i as u32);
            }
        }
        g.need0 = g.constraints.iter().map(|r| r.pos.len() as u16).collect();
        Ok(g)
    }

    fn compile(&self, l: &Literal, naf: bool, vars: &[String]) -> TLit {
        let args = l
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => Slot::Const(self.const_ix.get(c).copied().unwrap_or(u32::MAX)),
                Term::Var { name, .. } => Slot::Var(vars.iter().position(|v| v == name).unwrap()),
            })
            .collect();
        let pred = self.pred_ix.get(&l.pred).copied().unwrap_or(u32::MAX);
        TLit { pred, args, positive: l.positive, naf, kind: l.kind }
    }

    fn ground_into(&mut self, ax: &Axiom, ix: u32, is_default: bool) -> Result<(), KrError> {
        let sorts = self.sorts_of(ax)?;
        let vars: Vec<String> = sorts.keys().cloned().collect();
        let doms: Vec<Vec<u32>> = vars.iter().map(|v| self.sig_consts(&sorts[v])).collect::<Result<_, _>>()?;
        let head = self.compile(&ax.head, false, &vars);
        let body: Vec<TLit> = ax.body.iter().map(|b| self.compile(&b.lit, b.naf, &vars)).collect();
        let mut out: Vec<(u32, GRule)> = Vec::new();
        let mut buf: Vec<u32> = Vec::with_capacity(4);
        product(&doms, |vals| {
            let inst = |t: &TLit, buf: &mut Vec<u32>| {
                buf.clear();
                for s in &t.args {
                    buf.push(match *s {
                        Slot::Var(i) => vals[i],
                        Slot::Const(c) => c,
                    });
                }
            };
            let mut pos = Vec::new();
            let mut naf = Vec::new();
            let mut action = None;
            for t in &body {
                inst(t, &mut buf);
                match t.kind {
                    LitKind::Eq | LitKind::Neq => {
                        let same = buf[0] == buf[1];
                        let ok = (t.kind == LitKind::Eq) == same;
                        if ok == t.naf {
                            return;
                        }
                    }
                    LitKind::Action => action = self.action_ix.get(&key(t.pred, &buf)).copied(),
                    _ => {
                        let Some(&a) = self.atom_ix.get(&key(t.pred, &buf)) else { return };
                        let l = lit_of(a, !t.positive);
                        if t.naf {
                            naf.push(l)
                        } else {
                            pos.push(l)
                        }
                    }
                }
            }
            inst(&head, &mut buf);
            let (slot, head_id) = match ax.kind {
                AxiomKind::ExecutabilityCondition => {
                    let Some(&a) = self.action_ix.get(&key(head.pred, &buf)) else { return };
                    (a, a)
                }
                AxiomKind::CausalLaw => {
                    let Some(&a) = self.atom_ix.get(&key(head.pred, &buf)) else { return };
                    let Some(act) = action else { return };
                    (act, lit_of(a, !head.positive))
                }
                _ => {
                    let Some(&a) = self.atom_ix.get(&key(head.pred, &buf)) else { return };
                    (0, lit_of(a, !head.positive))
                }
            };
            pos.sort_unstable();
            pos.dedup();
            naf.sort_unstable();
            naf.dedup();
            out.push((slot, GRule { axiom: ix, head: head_id, pos: pos.into(), naf: naf.into() }));
        });
        for (slot, r) in out {
            match ax.kind {
                AxiomKind::CausalLaw => self.causal[slot as usize].push(r),
                AxiomKind::ExecutabilityCondition => self.exec[slot as usize].push(r),
                AxiomKind::StateConstraint => self.constraints.push(r),
                AxiomKind::InitialDefault => {
                    debug_assert!(is_default);
                    self.defaults.push(r)
                }
            }
        }
        Ok(())
    }

    fn sorts_of(&self, ax: &Axiom) -> Result<std::collections::BTreeMap<String, String>, KrError> {
        let mut out = std::collections::BTreeMap::new();
        for l in std::iter::once(&ax.head).chain(ax.body.iter().map(|b| &b.lit)) {
            for t in &l.args {
                if let Term::Var { name, sort: Some(s) } = t {
                    out.insert(name.clone(), s.clone());
                }
            }
        }
        if out.len() != ax.vars().len() {
            return Err(KrError::SortError { axiom: ax.id.clone(), msg: "unresolved variable sort".into() });
        }
        Ok(out)
    }

    fn sig_consts(&self, sort: &str) -> Result<Vec<u32>, KrError> {
        self.sort_members.get(sort).cloned().ok_or_else(|| KrError::UndeclaredSort(sort.to_string()))
    }

    pub fn n_lits(&self) -> usize {
        self.atoms.len() * 2
    }

    pub fn empty_set(&self) -> LitSet {
        LitSet::with_capacity(self.n_lits())
    }

    pub fn lit_id(&self, l: &Literal) -> Option<Lit> {
        let p = *self.pred_ix.get(&l.pred)?;
        let mut args = Vec::with_capacity(l.args.len());
        for t in &l.args {
            args.push(*self.const_ix.get(t.as_const()?)?);
        }
        let a = *self.atom_ix.get(&key(p, &args))?;
        Some(lit_of(a, !l.positive))
    }

    pub fn literal(&self, l: Lit) -> Literal {
        let a = &self.atoms[(l / 2) as usize];
        if l % 2 == 1 {
            a.complement()
        } else {
            a.clone()
        }
    }

    pub fn action_id(&self, a: &Action) -> Option<u32> {
        let p = *self.pred_ix.get(&a.name)?;
        let args: Option<Vec<u32>> = a.args.iter().map(|c| self.const_ix.get(c).copied()).collect();
        self.action_ix.get(&key(p, &args?)).copied()
    }

    pub fn is_inertial_lit(&self, l: Lit) -> bool {
        self.inertial[(l / 2) as usize]
    }

    pub fn is_static_lit(&self, l: Lit) -> bool {
        self.is_static[(l / 2) as usize]
    }

    /// Closes `s` under the state constraints in place. Default-negated
    /// items are evaluated against the set as it stands after positive
    /// propagation; the process repeats until no rule fires.
    pub fn close(&self, s: &mut LitSet) {
        let mut need = self.need0.clone();
        let mut queue: Vec<Lit> = s.iter().collect();
        for &r in &self.unconditional {
            let r = &self.constraints[r as usize];
            if r.naf.is_empty() && s.insert(r.head) {
                queue.push(r.head);
            }
        }
        loop {
            while let Some(l) = queue.pop() {
                for &ri in &self.watch[l as usize] {
                    let n = &mut need[ri as usize];
                    *n -= 1;
                    if *n == 0 {
                        let r = &self.constraints[ri as usize];
                        if r.naf.is_empty() && s.insert(r.head) {
                            queue.push(r.head);
                        }
                    }
                }
            }
            for &ri in &self.naf_rules {
                let r = &self.constraints[ri as usize];
                if need[ri as usize] == 0 && !s.has(r.head) && !r.naf.iter().any(|&l| s.has(l)) {
                    s.insert(r.head);
                    queue.push(r.head);
                }
            }
            if queue.is_empty() {
                return;
            }
        }
    }

    /// Executability conditions of `a` whose bodies hold in `s`.
    pub fn blockers<'a>(&'a self, a: u32, s: &'a LitSet) -> impl Iterator<Item = &'a GRule> + 'a {
        self.exec[a as usize].iter().filter(move |r| r.holds(s))
    }

    pub fn is_legal(&self, a: u32, s: &LitSet) -> bool {
        self.blockers(a, s).next().is_none()
    }

    pub fn direct_effects(&self, a: u32, s: &LitSet) -> LitSet {
        let mut e = self.empty_set();
        for r in &self.causal[a as usize] {
            if r.holds(s) {
                e.insert(r.head);
            }
        }
        e
    }

    /// Closure of `effects` plus the statics of `prev` plus every inertial
    /// literal of `prev` not overridden. A carried literal whose complement
    /// gets derived is dropped and the closure recomputed. `Err` carries the
    /// clashing atom when the clash does not involve carried literals.
    pub fn settle(&self, effects: &LitSet, prev: &LitSet) -> Result<LitSet, u32> {
        let mut carried = self.empty_set();
        for l in prev.iter() {
            if (self.is_static_lit(l) || self.is_inertial_lit(l)) && !effects.has(compl(l)) {
                carried.insert(l);
            }
        }
        loop {
            let mut s = effects.clone();
            for l in carried.iter() {
                s.insert(l);
            }
            self.close(&mut s);
            let clashes = s.clashes();
            if clashes.is_empty() {
                return Ok(s);
            }
            let mut dropped = false;
            for &a in &clashes {
                for l in [lit_of(a, false), lit_of(a, true)] {
                    if carried.has(l) && !self.is_static_lit(l) {
                        carried.remove(l);
                        dropped = true;
                    }
                }
            }
            if !dropped {
                return Err(clashes[0]);
            }
        }
    }

    /// Successor under action `a`; `Ok(None)` when `a` is not executable.
    pub fn step(&self, s: &LitSet, a: u32) -> Result<Option<LitSet>, u32> {
        if !self.is_legal(a, s) {
            return Ok(None);
        }
        let e = self.direct_effects(a, s);
        if let Some(&c) = e.clashes().first() {
            return Err(c);
        }
        self.settle(&e, s).map(Some)
    }

    pub fn to_set(&self, lits: impl IntoIterator<Item = Literal>) -> Result<LitSet, Literal> {
        let mut s = self.empty_set();
        for l in lits {
            match self.lit_id(&l) {
                Some(id) => {
                    s.insert(id);
                }
                None => return Err(l),
            }
        }
        Ok(s)
    }

    pub fn to_literals(&self, s: &LitSet) -> impl Iterator<Item = Literal> + '_ {
        s.iter().map(|l| self.literal(l)).collect::<Vec<_>>().into_iter()
    }
}

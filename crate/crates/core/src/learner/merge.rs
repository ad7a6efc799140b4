use std::collections::{BTreeMap, BTreeSet};

use super::{normalize_local, CandidateAxiom, Label, LearnerConfig, TrainingSample};
use crate::kr::{Axiom, AxiomKind, LearnedAxiom, LitKind, Literal, Term};

/// Whether every condition of `a` is present in the sample.
pub fn covers(a: &Axiom, s: &TrainingSample) -> bool {
    a.conditions().all(|b| !b.naf && s.has(&normalize_local(&b.lit)))
}

fn correct(a: &Axiom, s: &TrainingSample) -> bool {
    match (a.kind, &s.label) {
        (AxiomKind::ExecutabilityCondition, Label::Exec(bad)) => *bad,
        (AxiomKind::CausalLaw, l) => l.contains(&a.head),
        _ => false,
    }
}

/// Fraction of covered samples on which the axiom's prediction holds, and
/// how many samples it covers.
pub fn confidence(a: &Axiom, samples: &[TrainingSample]) -> (f64, usize) {
    let covered: Vec<&TrainingSample> = samples.iter().filter(|s| covers(a, s)).collect();
    if covered.is_empty() {
        return (0.0, 0);
    }
    let ok = covered.iter().filter(|s| correct(a, s)).count();
    (ok as f64 / covered.len() as f64, covered.len())
}

/// Text identifying an axiom up to the naming of its local variables and
/// the order of its conditions.
pub fn canonical_key(a: &Axiom) -> String {
    let mask = |l: &Literal| {
        let n = normalize_local(l);
        let args: Vec<Term> = n
            .args
            .iter()
            .map(|t| match t {
                Term::Var { name, .. } if super::is_local(name) => Term::v("_"),
                t => t.clone(),
            })
            .collect();
        Literal { args, ..n }.to_string()
    };
    let mut body: Vec<String> =
        a.body.iter().map(|b| if b.naf { format!("not {}", mask(&b.lit)) } else { mask(&b.lit) }).collect();
    body.sort();
    format!("{} {} :- {}", a.kind.keyword(), mask(&a.head), body.join(", "))
}

fn map_lit(
    m: &mut BTreeMap<String, String>,
    used: &mut BTreeSet<String>,
    g: &Literal,
    s: &Literal,
) -> Option<Vec<String>> {
    if g.pred != s.pred || g.positive != s.positive || g.kind != s.kind || g.args.len() != s.args.len() {
        return None;
    }
    let mut added = Vec::new();
    for (a, b) in g.args.iter().zip(&s.args) {
        let ok = match (a, b) {
            (Term::Var { name: x, .. }, Term::Var { name: y, .. }) => match m.get(x) {
                Some(z) => z == y,
                None if used.contains(y) => false,
                None => {
                    m.insert(x.clone(), y.clone());
                    used.insert(y.clone());
                    added.push(x.clone());
                    true
                }
            },
            (Term::Const(x), Term::Const(y)) => x == y,
            _ => false,
        };
        if !ok {
            for x in &added {
                used.remove(&m.remove(x).unwrap());
            }
            return None;
        }
    }
    Some(added)
}

fn undo(m: &mut BTreeMap<String, String>, used: &mut BTreeSet<String>, added: Vec<String>) {
    for x in added {
        if let Some(y) = m.remove(&x) {
            used.remove(&y);
        }
    }
}

/// True if some injective renaming of `general`'s variables maps its head
/// onto `specific`'s head and its body into (or, unless `subset`, onto)
/// `specific`'s body.
pub fn alpha_match(general: &Axiom, specific: &Axiom, subset: bool) -> bool {
    if general.kind != specific.kind || general.body.len() > specific.body.len() {
        return false;
    }
    if !subset && general.body.len() != specific.body.len() {
        return false;
    }
    let mut m = BTreeMap::new();
    let mut used = BTreeSet::new();
    let Some(_) = map_lit(&mut m, &mut used, &general.head, &specific.head) else { return false };
    // actions first: they pin the most variables
    let mut order: Vec<usize> = (0..general.body.len()).collect();
    order.sort_by_key(|&i| general.body[i].lit.kind != LitKind::Action);
    fn go(
        i: usize,
        order: &[usize],
        g: &Axiom,
        s: &Axiom,
        taken: &mut Vec<bool>,
        m: &mut BTreeMap<String, String>,
        used: &mut BTreeSet<String>,
    ) -> bool {
        let Some(&gi) = order.get(i) else { return true };
        let gb = &g.body[gi];
        for (j, sb) in s.body.iter().enumerate() {
            if taken[j] || gb.naf != sb.naf {
                continue;
            }
            if let Some(added) = map_lit(m, used, &gb.lit, &sb.lit) {
                taken[j] = true;
                if go(i + 1, order, g, s, taken, m, used) {
                    return true;
                }
                taken[j] = false;
                undo(m, used, added);
            }
        }
        false
    }
    let mut taken = vec![false; specific.body.len()];
    go(0, &order, general, specific, &mut taken, &mut m, &mut used)
}

#[derive(Clone, Debug)]
pub struct EnsembleEntry {
    pub axiom: Axiom,
    pub cycles: usize,
    pub support: usize,
    pub validation: f64,
}

/// Candidates seen across the cycles of one learning episode.
#[derive(Clone, Debug, Default)]
pub struct Ensemble {
    pub entries: BTreeMap<String, EnsembleEntry>,
    pub cycles_run: usize,
    /// Held-out samples of every cycle so far, used when merging.
    pub holdout: Vec<TrainingSample>,
    /// Axioms already known; candidates they subsume are discarded.
    pub known: Vec<Axiom>,
}

impl Ensemble {
    pub fn new(known: Vec<Axiom>) -> Self {
        Ensemble { known, ..Default::default() }
    }
}

fn generalize(a: &Axiom, holdout: &[TrainingSample]) -> Axiom {
    let mut cur = a.clone();
    let mut score = confidence(&cur, holdout).0;
    let mut i = 0;
    while i < cur.body.len() {
        if cur.body[i].lit.kind == LitKind::Action {
            i += 1;
            continue;
        }
        let mut next = cur.clone();
        next.body.remove(i);
        let empty = next.conditions().next().is_none();
        let (s, n) = confidence(&next, holdout);
        let safe = next.head.vars().iter().all(|v| next.body.iter().any(|b| b.lit.vars().contains(v)))
            || next.kind == AxiomKind::ExecutabilityCondition;
        if n > 0 && s >= score && safe && !(empty && next.kind == AxiomKind::ExecutabilityCondition) {
            cur = next;
            score = s;
        } else {
            i += 1;
        }
    }
    cur
}

/// Records one cycle's candidates and returns the axioms promoted so far.
///
/// Candidates scoring below `validation_min` on `holdout` are dropped; the
/// rest count towards their axiom's cycles. Promoted axioms lose every
/// condition whose removal does not lower their score on the pooled
/// holdout, and axioms subsumed by a more general one are removed.
pub fn validate_and_merge(
    candidates: &[CandidateAxiom],
    holdout: &[TrainingSample],
    ensemble: &mut Ensemble,
    cfg: &LearnerConfig,
) -> Vec<LearnedAxiom> {
    ensemble.cycles_run += 1;
    ensemble.holdout.extend_from_slice(holdout);
    let mut this_cycle = BTreeSet::new();
    for c in candidates {
        let (v, n) = confidence(&c.axiom, holdout);
        if n == 0 || v < cfg.validation_min {
            continue;
        }
        let key = canonical_key(&c.axiom);
        if !this_cycle.insert(key.clone()) {
            continue;
        }
        let e = ensemble.entries.entry(key).or_insert(EnsembleEntry {
            axiom: c.axiom.clone(),
            cycles: 0,
            support: 0,
            validation: 0.0,
        });
        e.cycles += 1;
        e.support += c.support;
        e.validation = v;
    }
    let mut promoted: Vec<LearnedAxiom> = Vec::new();
    let mut keys = BTreeSet::new();
    for e in ensemble.entries.values().filter(|e| e.cycles >= cfg.cycles_required) {
        let g = generalize(&e.axiom, &ensemble.holdout);
        if keys.insert(canonical_key(&g)) {
            let mut la = LearnedAxiom::fresh(g, e.support);
            la.cycles_seen = e.cycles;
            promoted.push(la);
        }
    }
    let snapshot: Vec<Axiom> = promoted.iter().map(|l| l.axiom.clone()).collect();
    promoted.retain(|l| {
        let by_other = snapshot.iter().any(|o| o.body.len() < l.axiom.body.len() && alpha_match(o, &l.axiom, true));
        let by_known = ensemble.known.iter().any(|k| alpha_match(k, &l.axiom, true));
        !by_other && !by_known
    });
    promoted
}

/// One episode of decay: used axioms are restored to full strength, the
/// others lose strength, and weak ones go.
pub fn decay_strengths(axioms: Vec<LearnedAxiom>, used: &BTreeSet<String>, cfg: &LearnerConfig) -> Vec<LearnedAxiom> {
    axioms
        .into_iter()
        .filter_map(|mut a| {
            if used.contains(&a.axiom.id) {
                a.strength = 1.0;
            } else {
                a.strength *= cfg.lambda;
            }
            (a.strength >= cfg.prune_threshold).then_some(a)
        })
        .collect()
}

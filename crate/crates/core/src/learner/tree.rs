use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{is_local, CandidateAxiom, Label, LearnerConfig, Mode, TrainingSample};
use crate::kr::{Axiom, AxiomKind, BodyLit, Literal, Term};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { counts: BTreeMap<Label, usize>, n: usize },
    Split { feature: Literal, present: Box<Node>, absent: Box<Node> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub action: Literal,
    pub mode: Mode,
    pub root: Node,
}

fn entropy(counts: &BTreeMap<&Label, usize>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    counts
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

fn class_counts<'a>(samples: &[&'a TrainingSample]) -> BTreeMap<&'a Label, usize> {
    let mut m = BTreeMap::new();
    for s in samples {
        *m.entry(&s.label).or_insert(0) += 1;
    }
    m
}

/// Information gain of splitting `samples` on presence of `f`.
pub fn gain(samples: &[&TrainingSample], f: &Literal) -> f64 {
    let n = samples.len();
    let (yes, no): (Vec<&TrainingSample>, Vec<&TrainingSample>) = samples.iter().partition(|s| s.has(f));
    let h = entropy(&class_counts(samples), n);
    let hy = entropy(&class_counts(&yes), yes.len());
    let hn = entropy(&class_counts(&no), no.len());
    h - (yes.len() as f64 / n as f64) * hy - (no.len() as f64 / n as f64) * hn
}

type TieKey = (bool, usize, usize, String);

/// Ordering among equally informative features: literals whose first
/// variable is an action variable, then rarer ones (so the test reads as
/// the specific case), then fewer local variables, then text.
fn tie_key(f: &Literal, present: usize) -> TieKey {
    let vars = f.vars();
    let first_local = vars.first().is_none_or(|v| is_local(v));
    let locals = vars.iter().filter(|v| is_local(v)).count();
    (first_local, present, locals, f.to_string())
}

fn build(samples: &[&TrainingSample], depth: usize, cfg_depth: usize) -> Node {
    let counts = class_counts(samples);
    let leaf = || Node::Leaf { counts: counts.iter().map(|(k, v)| ((*k).clone(), *v)).collect(), n: samples.len() };
    if counts.len() <= 1 || depth >= cfg_depth || samples.len() < 2 {
        return leaf();
    }
    let features: BTreeSet<&Literal> = samples.iter().flat_map(|s| s.features.iter()).collect();
    let mut best: Option<(f64, TieKey, &Literal)> = None;
    for f in features {
        let g = gain(samples, f);
        if g <= 1e-12 {
            continue;
        }
        let key = tie_key(f, samples.iter().filter(|s| s.has(f)).count());
        let better = match &best {
            None => true,
            Some((bg, bk, _)) => g > bg + 1e-9 || ((g - bg).abs() <= 1e-9 && key < *bk),
        };
        if better {
            best = Some((g, key, f));
        }
    }
    let Some((_, _, f)) = best else { return leaf() };
    let (yes, no): (Vec<&TrainingSample>, Vec<&TrainingSample>) = samples.iter().partition(|s| s.has(f));
    Node::Split {
        feature: f.clone(),
        present: Box::new(build(&yes, depth + 1, cfg_depth)),
        absent: Box::new(build(&no, depth + 1, cfg_depth)),
    }
}

/// ID3 over binary presence features. Causal-mode labels are sets of
/// effects and each distinct set is one class.
pub fn induce_tree(samples: &[TrainingSample], mode: Mode, depth_max: usize) -> DecisionTree {
    let refs: Vec<&TrainingSample> = samples.iter().collect();
    let action = samples.first().map(|s| s.action.clone()).unwrap_or_else(|| Literal::fact("none", &[]));
    DecisionTree { action, mode, root: build(&refs, 0, depth_max) }
}

impl DecisionTree {
    /// Leaves with the tests on the path to each.
    pub fn paths(&self) -> Vec<(Vec<(Literal, bool)>, &Node)> {
        fn walk<'a>(n: &'a Node, path: &mut Vec<(Literal, bool)>, out: &mut Vec<(Vec<(Literal, bool)>, &'a Node)>) {
            match n {
                Node::Leaf { .. } => out.push((path.clone(), n)),
                Node::Split { feature, present, absent } => {
                    path.push((feature.clone(), true));
                    walk(present, path, out);
                    path.pop();
                    path.push((feature.clone(), false));
                    walk(absent, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { present, absent, .. } => 1 + d(present).max(d(absent)),
            }
        }
        d(&self.root)
    }
}

/// Renames the local variables of each literal apart, so that separate
/// conditions never share a local variable by accident.
fn apart(lits: &[Literal]) -> Vec<Literal> {
    let mut next = 0;
    lits.iter()
        .map(|l| {
            let mut map: BTreeMap<String, String> = BTreeMap::new();
            let args = l
                .args
                .iter()
                .map(|t| match t {
                    Term::Var { name, .. } if is_local(name) => {
                        let v = map.entry(name.clone()).or_insert_with(|| {
                            next += 1;
                            format!("V{next}")
                        });
                        Term::v(v)
                    }
                    t => t.clone(),
                })
                .collect();
            Literal { args, ..l.clone() }
        })
        .collect()
}

/// Axioms read off leaves that are pure enough and well supported. The
/// body is the positive tests on the path.
pub fn extract_candidates(tree: &DecisionTree, cfg: &LearnerConfig) -> Vec<CandidateAxiom> {
    let mut out = Vec::new();
    for (path, leaf) in tree.paths() {
        let Node::Leaf { counts, n } = leaf else { continue };
        if *n == 0 {
            continue;
        }
        let conds = apart(&path.iter().filter(|(_, p)| *p).map(|(l, _)| l.clone()).collect::<Vec<_>>());
        match tree.mode {
            Mode::Exec => {
                let bad = counts.get(&Label::Exec(true)).copied().unwrap_or(0);
                let purity = bad as f64 / *n as f64;
                if conds.is_empty() || purity < cfg.purity_min || bad < cfg.support_min {
                    continue;
                }
                out.push(CandidateAxiom {
                    axiom: Axiom {
                        id: String::new(),
                        kind: AxiomKind::ExecutabilityCondition,
                        head: Literal { positive: false, ..tree.action.clone() },
                        body: conds.into_iter().map(BodyLit::pos).collect(),
                    },
                    purity,
                    support: bad,
                    validation: 0.0,
                });
            }
            Mode::Causal => {
                let mut per: BTreeMap<&Literal, usize> = BTreeMap::new();
                for (label, c) in counts {
                    if let Label::Causal(set) = label {
                        for l in set {
                            *per.entry(l).or_insert(0) += c;
                        }
                    }
                }
                for (effect, k) in per {
                    let purity = k as f64 / *n as f64;
                    if purity < cfg.purity_min || k < cfg.support_min {
                        continue;
                    }
                    if effect.vars().iter().any(|v| is_local(v)) {
                        continue;
                    }
                    let mut body = vec![BodyLit::pos(tree.action.clone())];
                    body.extend(conds.iter().cloned().map(BodyLit::pos));
                    out.push(CandidateAxiom {
                        axiom: Axiom { id: String::new(), kind: AxiomKind::CausalLaw, head: effect.clone(), body },
                        purity,
                        support: k,
                        validation: 0.0,
                    });
                }
            }
        }
    }
    out
}

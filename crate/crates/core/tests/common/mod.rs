//! Reference semantics for the transition system, written directly from
//! the definition of a transition rather than from the reasoner's
//! propagation. Slow, but small enough to trust.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use xplain::kr::{Action, Axiom, AxiomKind, DomainDescription, History, LitKind, Literal, Signature, State, Term};
use xplain::reasoner::{BeliefTrajectory, Reasoner};
use xplain::tracer::{Justification, ProofNode};

pub type Lits = BTreeSet<Literal>;

/// A ground instance of an axiom.
#[derive(Clone, Debug)]
pub struct Rule {
    pub head: Literal,
    pub pos: Vec<Literal>,
    pub naf: Vec<Literal>,
    pub action: Option<Literal>,
    /// Built-in comparisons, already decided true.
    pub ok: bool,
}

pub struct Oracle {
    pub sig: Signature,
    pub causal: Vec<Rule>,
    pub constraints: Vec<Rule>,
    pub exec: Vec<Rule>,
    pub actions: Vec<Action>,
    /// Ground heads some constraint could derive.
    pub derivable: Lits,
}

fn var_domains(sig: &Signature, ax: &Axiom) -> BTreeMap<String, Vec<String>> {
    let mut doms: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let lits = std::iter::once(&ax.head).chain(ax.body.iter().map(|b| &b.lit));
    for l in lits {
        if l.is_builtin() {
            continue;
        }
        let (_, schema) = sig.schema(&l.pred).expect("declared predicate");
        for (t, sort) in l.args.iter().zip(&schema.args) {
            if let Term::Var { name, .. } = t {
                let members = sig.constants_of(sort).expect("declared sort");
                doms.entry(name.clone())
                    .and_modify(|d| *d = d.intersection(&members).cloned().collect())
                    .or_insert(members);
            }
        }
    }
    doms.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect()
}

fn subst(l: &Literal, b: &BTreeMap<String, String>) -> Literal {
    let mut g = l.clone();
    for t in &mut g.args {
        if let Term::Var { name, .. } = t {
            *t = Term::Const(b[name.as_str()].clone());
        }
    }
    g
}

/// Every well-sorted grounding of `ax`.
pub fn ground(sig: &Signature, ax: &Axiom) -> Vec<Rule> {
    let doms: Vec<(String, Vec<String>)> = var_domains(sig, ax).into_iter().collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; doms.len()];
    if doms.iter().any(|(_, d)| d.is_empty()) {
        return out;
    }
    loop {
        let b: BTreeMap<String, String> = doms.iter().zip(&idx).map(|((v, d), &i)| (v.clone(), d[i].clone())).collect();
        let mut r = Rule { head: subst(&ax.head, &b), pos: vec![], naf: vec![], action: None, ok: true };
        for bl in &ax.body {
            let l = subst(&bl.lit, &b);
            match l.kind {
                LitKind::Eq | LitKind::Neq => {
                    let same = l.args[0] == l.args[1];
                    r.ok &= same == (l.kind == LitKind::Eq);
                }
                LitKind::Action => r.action = Some(l),
                _ if bl.naf => r.naf.push(l),
                _ => r.pos.push(l),
            }
        }
        if r.ok {
            out.push(r);
        }
        // odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < doms[k].1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn all_actions(sig: &Signature) -> Vec<Action> {
    let mut out = Vec::new();
    for s in &sig.actions {
        let doms: Vec<Vec<String>> =
            s.args.iter().map(|a| sig.constants_of(a).unwrap().into_iter().collect()).collect();
        let mut combos: Vec<Vec<String>> = vec![vec![]];
        for d in &doms {
            combos =
                combos.into_iter().flat_map(|c| d.iter().map(move |x| [c.clone(), vec![x.clone()]].concat())).collect();
        }
        for c in combos {
            let args: Vec<&str> = c.iter().map(|s| s.as_str()).collect();
            out.push(Action::new(&s.name, &args));
        }
    }
    out.sort();
    out
}

fn holds(r: &Rule, x: &Lits, neg_in: &Lits) -> bool {
    r.pos.iter().all(|l| x.contains(l)) && r.naf.iter().all(|l| !neg_in.contains(l))
}

fn acts(r: &Rule, a: &Action) -> bool {
    r.action
        .as_ref()
        .is_some_and(|l| l.pred == a.name && l.args.iter().map(|t| t.name()).eq(a.args.iter().map(|s| s.as_str())))
}

impl Oracle {
    pub fn new(d: &DomainDescription) -> Oracle {
        let mut o = Oracle {
            sig: d.signature.clone(),
            causal: vec![],
            constraints: vec![],
            exec: vec![],
            actions: all_actions(&d.signature),
            derivable: Lits::new(),
        };
        for ax in &d.axioms {
            let rules = ground(&d.signature, ax);
            match ax.kind {
                AxiomKind::CausalLaw => o.causal.extend(rules),
                AxiomKind::StateConstraint => o.constraints.extend(rules),
                AxiomKind::ExecutabilityCondition => {
                    // the head is the forbidden occurrence
                    o.exec.extend(rules.into_iter().map(|mut r| {
                        r.action = Some(r.head.clone());
                        r
                    }))
                }
                AxiomKind::InitialDefault => {}
            }
        }
        o.derivable = o.constraints.iter().map(|r| r.head.clone()).collect();
        o
    }

    /// Least set containing `base` and closed under the constraints, with
    /// default negation read against `reduct`.
    pub fn least(&self, base: &Lits, reduct: &Lits) -> Lits {
        let mut x = base.clone();
        loop {
            let mut grew = false;
            for r in &self.constraints {
                if !x.contains(&r.head) && holds(r, &x, reduct) {
                    x.insert(r.head.clone());
                    grew = true;
                }
            }
            if !grew {
                return x;
            }
        }
    }

    /// The stable closures of `base`: sets M with M equal to the least
    /// closure of `base` under the reduct by M. Candidates are generated
    /// by iterating to a fixpoint, which finds the stable set of a
    /// stratified program.
    pub fn stable(&self, base: &Lits) -> Option<Lits> {
        let mut m = base.clone();
        for _ in 0..64 {
            let next = self.least(base, &m);
            if next == m {
                break;
            }
            m = next;
        }
        (self.least(base, &m) == m).then_some(m)
    }

    pub fn consistent(x: &Lits) -> bool {
        x.iter().all(|l| !x.contains(&l.complement()))
    }

    pub fn legal(&self, s: &Lits, a: &Action) -> bool {
        !self.exec.iter().any(|r| acts(r, a) && holds(r, s, s))
    }

    /// All successors of `s` under `a` by the definition: M is a successor
    /// when it is a consistent stable closure of the direct effects, the
    /// statics, and exactly those inertial literals of `s` whose complement
    /// is not in M.
    pub fn successors(&self, s: &Lits, a: &Action) -> Vec<Lits> {
        if !self.legal(s, a) {
            return vec![];
        }
        let effects: Lits =
            self.causal.iter().filter(|r| acts(r, a) && holds(r, s, s)).map(|r| r.head.clone()).collect();
        let statics: Lits = s.iter().filter(|l| l.kind == LitKind::Static).cloned().collect();
        let inert: Vec<Literal> = s.iter().filter(|l| self.sig.is_inertial(l)).cloned().collect();
        // literals that cannot be overridden must persist
        let (open, fixed): (Vec<Literal>, Vec<Literal>) = inert.into_iter().partition(|l| {
            let c = l.complement();
            effects.contains(&c) || self.derivable.contains(&c)
        });
        assert!(open.len() <= 16, "too many open literals for the oracle: {}", open.len());
        let mut out = Vec::new();
        for mask in 0u32..(1 << open.len()) {
            let kept: Lits = fixed
                .iter()
                .cloned()
                .chain(open.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, l)| l.clone()))
                .collect();
            let base: Lits = effects.iter().chain(&statics).chain(&kept).cloned().collect();
            let Some(m) = self.stable(&base) else { continue };
            if !Self::consistent(&m) {
                continue;
            }
            let persists: Lits =
                s.iter().filter(|l| self.sig.is_inertial(l) && !m.contains(&l.complement())).cloned().collect();
            if persists == kept && !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    pub fn successor(&self, s: &Lits, a: &Action) -> Option<Lits> {
        let mut all = self.successors(s, a);
        assert!(all.len() <= 1, "{} successors for {a}", all.len());
        all.pop()
    }

    /// States reachable from `s0`, with their outgoing edges.
    pub fn graph(&self, s0: &Lits, limit: usize) -> (Vec<Lits>, Vec<Vec<(Action, usize)>>) {
        let mut states = vec![s0.clone()];
        let mut index: HashMap<Lits, usize> = HashMap::from([(s0.clone(), 0)]);
        let mut edges: Vec<Vec<(Action, usize)>> = vec![vec![]];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for a in &self.actions {
                let Some(t) = self.successor(&states[i], a) else { continue };
                let j = match index.get(&t) {
                    Some(&j) => j,
                    None => {
                        assert!(states.len() < limit, "state space above {limit}");
                        states.push(t.clone());
                        edges.push(vec![]);
                        index.insert(t, states.len() - 1);
                        queue.push_back(states.len() - 1);
                        states.len() - 1
                    }
                };
                edges[i].push((a.clone(), j));
            }
        }
        (states, edges)
    }

    /// Breadth-first distance from `s0` to a state containing `goal`.
    pub fn distance(&self, s0: &Lits, goal: &[Literal], limit: usize) -> Option<usize> {
        let (states, edges) = self.graph(s0, limit);
        let mut dist = vec![usize::MAX; states.len()];
        dist[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if goal.iter().all(|g| states[i].contains(g)) {
                return Some(dist[i]);
            }
            for (_, j) in &edges[i] {
                if dist[*j] == usize::MAX {
                    dist[*j] = dist[i] + 1;
                    queue.push_back(*j);
                }
            }
        }
        None
    }
}

pub fn lits(s: &State) -> Lits {
    s.lits.clone()
}

pub fn state(l: &Lits) -> State {
    State::new(0, l.iter().cloned())
}

/// Small scenes used as transition fixtures.
pub fn fixture_scenes() -> Vec<xplain::world::Scene> {
    vec![
        xplain::world::gen_scene(11, 3, 0).unwrap(),
        xplain::world::gen_scene(12, 3, 2).unwrap(),
        xplain::world::gen_scene(13, 3, 3).unwrap(),
        xplain::bundled_scene("small_base").unwrap(),
    ]
}

/// Compares the reasoner with the oracle on every reachable state and
/// every action. Returns (pairs checked, discrepancies).
pub fn check_transitions(scene: &xplain::world::Scene) -> (usize, Vec<String>) {
    check_against(scene, &[])
}

/// As [`check_transitions`], with the reasoner missing the axioms `drop`.
pub fn check_against(scene: &xplain::world::Scene, drop: &[&str]) -> (usize, Vec<String>) {
    let d = scene.domain(&xplain::ra_domain());
    let r = xplain::reasoner::Reasoner::new(&d.without(drop)).unwrap();
    let o = Oracle::new(&d);
    let (states, _) = o.graph(&lits(&scene.true_literals), 20_000);
    let mut bad = Vec::new();
    let mut n = 0;
    for s in &states {
        let st = state(s);
        for a in &o.actions {
            n += 1;
            let want = o.successor(s, a);
            let got = match r.step(&st, a) {
                Ok(t) => Some(lits(&t)),
                Err(xplain::reasoner::ReasonError::NotExecutable { .. }) => None,
                Err(e) => {
                    bad.push(format!("{a}: {e}"));
                    continue;
                }
            };
            if got != want {
                bad.push(format!("{a} from {:?}", s.iter().map(|l| l.to_string()).collect::<Vec<_>>()));
            }
        }
    }
    (n, bad)
}

/// A seeded scene executed along its first plan towards a random goal.
pub struct Episode {
    pub domain: DomainDescription,
    pub history: History,
    pub traj: BeliefTrajectory,
}

pub fn episode(seed: u64) -> Episode {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let profile = if seed.is_multiple_of(2) { xplain::world::Profile::Real } else { xplain::world::Profile::Simulated };
    let scene = xplain::world::gen_profile_scene(seed, profile);
    let domain = scene.domain(&xplain::ra_domain());
    let r = Reasoner::new(&domain).unwrap();
    let mut history = scene.history(&domain);
    let s0 = r.initial_state(&history).unwrap();
    let names = scene.names();
    let plan = (0..20)
        .find_map(|_| {
            let a = names[rng.gen_range(0..names.len())];
            let b = names[rng.gen_range(0..names.len())];
            let goal = if a == b { xplain::world::in_hand_lit(a, true) } else { xplain::world::rel_lit("on", a, b) };
            r.plan(&s0, &[goal], 8).ok().map(|mut p| p.remove(0).plan)
        })
        .unwrap_or_default();
    history.happened = plan.into_iter().enumerate().map(|(i, a)| (a, i)).collect();
    let traj = r.trajectory(&history).unwrap();
    Episode { domain, history, traj }
}

fn believed(traj: &BeliefTrajectory, l: &Literal, i: usize) -> bool {
    match Action::from_literal(l) {
        Some(a) if l.kind == LitKind::Action => traj.occurrences.iter().any(|(x, s)| x == &a && *s == i),
        _ => traj.states[i].lits.contains(l),
    }
}

/// Verifies every axiom branch of a proof tree by re-applying its bindings:
/// the children are the body conditions, each holding (or absent, for
/// default negation) at the body's step. Returns the violations found.
pub fn verify_tree(n: &ProofNode, d: &DomainDescription, traj: &BeliefTrajectory, out: &mut Vec<String>) {
    for b in &n.branches {
        match &b.just {
            Justification::Axiom { id, bindings } => {
                let ax = d.axiom(id).unwrap();
                let g = ax.apply(bindings);
                if g.head != n.belief {
                    out.push(format!("{id}: head {} for {}", g.head, n.belief));
                }
                let at = if ax.kind == AxiomKind::CausalLaw { n.step.wrapping_sub(1) } else { n.step };
                let body: Vec<_> = g.body.iter().filter(|x| !x.lit.is_builtin()).collect();
                if body.len() != b.children.len() {
                    out.push(format!("{id}: {} children, {} conditions", b.children.len(), body.len()));
                }
                for (x, c) in body.iter().zip(&b.children) {
                    if c.belief != x.lit || c.step != at {
                        out.push(format!("{id}: child {}@{} is not {}@{at}", c.belief, c.step, x.lit));
                    } else if at >= traj.states.len() || believed(traj, &x.lit, at) == x.naf {
                        out.push(format!("{id}: {}@{at} fails", x.lit));
                    }
                }
                for x in g.body.iter().filter(|x| x.lit.is_builtin()) {
                    let same = x.lit.args[0] == x.lit.args[1];
                    if same != (x.lit.kind == LitKind::Eq) {
                        out.push(format!("{id}: comparison {} fails", x.lit));
                    }
                }
                if n.belief.kind != LitKind::Action
                    && (n.step >= traj.states.len() || !believed(traj, &n.belief, n.step))
                {
                    out.push(format!("{}@{} derived but not believed", n.belief, n.step));
                }
            }
            Justification::Inertia { from } if (*from..=n.step).any(|j| !believed(traj, &n.belief, j)) => {
                out.push(format!("{} does not persist from {from}", n.belief));
            }
            _ => {}
        }
        for c in &b.children {
            verify_tree(c, d, traj, out);
        }
    }
}

pub const HORIZON: usize = 10;

/// Shortest distance to the goal in the reference graph, and how many
/// action sequences of that length reach it.
pub fn shortest(o: &Oracle, s0: &Lits, goal: &[Literal]) -> Option<(usize, u64)> {
    let (states, edges) = o.graph(s0, 50_000);
    let at_goal = |i: usize| goal.iter().all(|g| states[i].contains(g));
    let mut dist = vec![usize::MAX; states.len()];
    let mut ways = vec![0u64; states.len()];
    dist[0] = 0;
    ways[0] = 1;
    let mut queue = VecDeque::from([0usize]);
    let mut best = None;
    while let Some(i) = queue.pop_front() {
        if best.is_some_and(|d| dist[i] >= d) {
            continue;
        }
        if at_goal(i) {
            best = Some(dist[i]);
            continue;
        }
        for (_, j) in &edges[i] {
            if dist[*j] == usize::MAX {
                dist[*j] = dist[i] + 1;
                queue.push_back(*j);
            }
            if dist[*j] == dist[i] + 1 {
                ways[*j] += ways[i];
            }
        }
    }
    let d = best?;
    let total = (0..states.len()).filter(|&i| dist[i] == d && at_goal(i)).map(|i| ways[i]).sum();
    Some((d, total))
}

pub fn planner_pairs() -> Vec<(xplain::world::Scene, Vec<Literal>)> {
    use rand::{Rng, SeedableRng};
    use xplain::world::{gen_scene, in_hand_lit, rel_lit};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    (0..25u64)
        .map(|k| {
            let n = 3 + (k % 2) as usize;
            let stacked = [0, 2, n][k as usize % 3];
            let scene = gen_scene(100 + k, n, stacked).unwrap();
            let names: Vec<String> = scene.names().iter().map(|s| s.to_string()).collect();
            let a = &names[rng.gen_range(0..names.len())];
            let goal = if rng.gen_bool(0.3) {
                in_hand_lit(a, true)
            } else {
                let others: Vec<&str> = names.iter().map(|s| s.as_str()).filter(|b| b != a).chain(["table"]).collect();
                rel_lit("on", a, others[rng.gen_range(0..others.len())])
            };
            (scene, vec![goal])
        })
        .collect()
}

pub fn replay(o: &Oracle, s0: &Lits, plan: &[Action]) -> Option<Lits> {
    plan.iter().try_fold(s0.clone(), |s, a| o.successor(&s, a))
}

/// Plans for every pair and compares with the reference search. Returns
/// (solvable pairs, mismatches).
pub fn check_planner() -> (usize, Vec<String>) {
    use xplain::reasoner::ReasonError;
    let mut solvable = 0;
    let mut bad = Vec::new();
    for (scene, goal) in planner_pairs() {
        let d = scene.domain(&xplain::ra_domain());
        let o = Oracle::new(&d);
        let r = Reasoner::new(&d).unwrap();
        let s0 = scene.true_literals.lits.clone();
        let want = shortest(&o, &s0, &goal).filter(|(len, _)| *len <= HORIZON);
        match (r.plan_set(&scene.true_literals, &goal, HORIZON), want) {
            (Ok(ps), Some((len, total))) => {
                solvable += 1;
                let replays = ps.plans.iter().all(|p| {
                    p.plan.len() == len
                        && replay(&o, &s0, &p.plan).is_some_and(|end| goal.iter().all(|g| end.contains(g)))
                });
                if ps.plans[0].length != len || ps.total != total || !replays {
                    bad.push(format!("{goal:?}: length {} total {} vs {len} {total}", ps.plans[0].length, ps.total));
                }
            }
            (Err(ReasonError::NoPlanWithinHorizon(_)), None) => {}
            (got, want) => bad.push(format!("{goal:?}: planner {got:?}, reference {want:?}")),
        }
    }
    (solvable, bad)
}

/// Header values (`# key: value`) and the Q/A body of a corpus file.
pub fn split_corpus(text: &str) -> (Vec<(String, String)>, String) {
    let mut head = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        match line.strip_prefix("# ").and_then(|h| h.split_once(": ")) {
            Some((k, v)) => head.push((k.to_string(), v.to_string())),
            None => {
                body.push_str(line);
                body.push('\n');
            }
        }
    }
    (head, body)
}

pub fn corpus_files() -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

/// Replays one corpus file through `xplain ask` and returns the transcript
/// the binary wrote, with the expected one.
pub fn replay_corpus(file: &std::path::Path) -> (String, String) {
    use std::io::Write;
    use std::process::{Command, Stdio};
    let (head, want) = split_corpus(&std::fs::read_to_string(file).unwrap());
    let get = |k: &str| head.iter().find(|(h, _)| h == k).map(|(_, v)| v.clone()).unwrap();
    let questions: String = xplain::analyzer::parse_transcript(&want).into_iter().map(|(q, _)| q + "\n").collect();
    let out = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_xplain"))
        .args(["--out", out.path().to_str().unwrap(), "ask", "--scene", &get("scene"), "--goal", &get("goal")])
        .args(["--vocab", &get("vocab")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(questions.as_bytes()).unwrap();
    let status = child.wait_with_output().unwrap();
    assert!(status.status.success(), "{}", file.display());
    let got = std::fs::read_to_string(out.path().join("transcript.txt")).unwrap_or_default();
    (got, want)
}

/// Traces random believed fluents over seeded episodes and re-verifies each
/// tree. Returns (calls, violations).
pub fn trace_suite(calls: usize) -> (usize, Vec<String>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut n = 0;
    let mut violations = Vec::new();
    for seed in 0..calls.div_ceil(20) as u64 {
        let ep = episode(seed);
        for _ in 0..20.min(calls - n) {
            let step = rng.gen_range(0..ep.traj.states.len());
            let lits: Vec<_> = ep.traj.states[step].fluents().collect();
            let belief = lits[rng.gen_range(0..lits.len())].clone();
            let tree = xplain::tracer::trace(&ep.domain, &ep.traj, &belief, step).unwrap();
            n += 1;
            verify_tree(&tree.root, &ep.domain, &ep.traj, &mut violations);
            if let Err(e) = xplain::tracer::check_soundness(&tree, &ep.domain, &ep.traj) {
                violations.push(e);
            }
        }
    }
    (n, violations)
}

/// Literals of the initial state that only the defaults license.
fn default_inferences(r: &Reasoner, bare: &Reasoner, h: &History) -> Lits {
    let with = r.initial_state(h).unwrap().lits;
    let without = bare.initial_state(&History { defaults: Vec::new(), ..h.clone() }).unwrap().lits;
    with.difference(&without).cloned().collect()
}

/// For each seeded fixture, observes the opposite of a default conclusion
/// at step 0 and checks that the default-derived set strictly shrinks.
/// Returns the failing fixtures.
pub fn nonmonotonic_suite(fixtures: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for seed in 0..fixtures {
        let scene = xplain::world::gen_scene(40 + seed, 3 + (seed % 3) as usize, 0).unwrap();
        let domain = scene.domain(&xplain::ra_domain());
        let r = Reasoner::new(&domain).unwrap();
        let ids: Vec<&str> = domain.defaults.iter().map(|d| d.id.as_str()).collect();
        let bare = Reasoner::new(&domain.without(&ids)).unwrap();
        let mut h = scene.history(&domain);
        // leave table placement to the default
        h.observations.retain(|(l, _)| !l.args.iter().any(|t| t.name() == "table"));
        let before = default_inferences(&r, &bare, &h);
        let assumed = xplain::world::rel_lit("on", scene.names()[0], "table");
        h.observations.push((assumed.complement(), 0));
        let after = default_inferences(&r, &bare, &h);
        let shrinks = after.is_subset(&before) && after.len() < before.len();
        if !before.contains(&assumed) || after.contains(&assumed) || !shrinks {
            bad.push(format!("fixture {seed}: {} default inferences became {}", before.len(), after.len()));
        }
    }
    bad
}

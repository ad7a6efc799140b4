//! The `xplain` command line: planning, execution in the simulated world,
//! question answering, learning, and experiments.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::analyzer::{transcript, AnalyzeError, Analyzer};
use crate::eval::{emit_tables, run_all, EvalError, ExperimentConfig};
use crate::kr::{Action, DomainDescription, History, LearnedAxiom, Literal};
use crate::learner::DiscrepancyKind;
use crate::learner::{classify_discrepancy, learn_for, run_learning, LearnError, LearnerConfig, Mode, SampleSource};
use crate::parser::{
    parse_domain, parse_goal, parse_learned, parse_query, serialize_learned, ParseError, VocabTable, GRAMMARS,
};
use crate::reasoner::{BeliefTrajectory, ReasonError, Reasoner};
use crate::world::{NoiseModel, Outcome, Profile, Scene, World, WorldError};

const QUERY_HELP: &str = "\
Questions (ask):
  describe the plan
  why did you <action> [at step N]
  why did you not <action> [at step N]
  why did you believe <object> was <relation> <object> [at step N]
where <action> is `pick up <object>` or `put <object> on <object|table>` and
<relation> is one of on, below, above, in front of. Objects are named by
their constants with spaces for underscores (`the green can`). Steps may
be digits or words, and `in the initial state` means step 0.

Exit codes: 0 success, 1 unreadable or malformed input, 2 no plan within
the step limit, 3 any other failure.";

#[derive(Debug, Parser)]
#[command(name = "xplain", version, about = "Plan, act, learn, and explain in a simulated tabletop domain", after_help = QUERY_HELP)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Rate at which observed spatial relations are wrong.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub noise: f64,
    /// Learned axioms to add to the agent's knowledge.
    #[arg(long, global = true, value_name = "FILE")]
    pub learned_axioms: Option<PathBuf>,
    /// Longest plan to search for.
    #[arg(long, global = true, default_value_t = 10)]
    pub max_steps: usize,
    /// Output directory (default: runs/<unix time>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Problem {
    /// Domain file (default: the bundled tabletop domain).
    #[arg(long)]
    pub domain: Option<PathBuf>,
    /// Scene JSON file, or the name of a bundled scene (tower, toys, small_base).
    #[arg(long)]
    pub scene: String,
    /// Goal, e.g. "goal obj_rel(on, pitcher, red_block)".
    #[arg(long)]
    pub goal: String,
    /// Axiom ids withheld from the agent (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub hide: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every minimal plan for a goal.
    Plan(Problem),
    /// Plan and execute in the simulated world, replanning on surprises.
    Run {
        #[command(flatten)]
        problem: Problem,
        /// Learn axioms when an outcome contradicts expectations.
        #[arg(long)]
        learn: bool,
        /// Rate at which pickups and putdowns fail.
        #[arg(long, default_value_t = 0.0)]
        failure: f64,
        #[arg(long, default_value_t = 3)]
        max_replans: usize,
    },
    /// Answer questions about the plan for a goal.
    Ask {
        #[command(flatten)]
        problem: Problem,
        /// One question; without it, questions are read from standard input.
        #[arg(long)]
        question: Option<String>,
        /// Vocabulary: analyzer, exec, intro, or a vocabulary file.
        #[arg(long, default_value = "exec")]
        vocab: String,
    },
    /// Learn hidden axioms by acting in random scenes.
    Learn {
        #[arg(long, value_delimiter = ',', default_value = "c1,c2,e1,e4,e5")]
        hide: Vec<String>,
    },
    /// Run the experiments and write result tables.
    Eval {
        /// Experiment config (key = value lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Experiments to run (h1, h2, h4).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Input(String),
    #[error("no plan within {0} steps")]
    NoPlan(usize),
    #[error("gave up after {0} replans")]
    ReplanLimitExceeded(usize),
    #[error(transparent)]
    Reason(#[from] ReasonError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) => 1,
            CliError::Eval(EvalError::Config { .. }) => 1,
            CliError::NoPlan(_) | CliError::Reason(ReasonError::NoPlanWithinHorizon(_)) => 2,
            _ => 3,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Everything a question can be about: the agent's knowledge, the scene,
/// the goal, and the plan executed in belief.
pub struct Session {
    /// The complete domain, used as ground truth by the world.
    pub truth: DomainDescription,
    /// The agent's knowledge over the scene's constants.
    pub domain: DomainDescription,
    pub scene: Scene,
    pub goal: Vec<Literal>,
    pub history: History,
    pub trajectory: Option<BeliefTrajectory>,
    pub learned: Vec<LearnedAxiom>,
    pub transcript: Vec<(String, String)>,
}

impl Session {
    pub fn load(p: &Problem, learned_path: Option<&Path>) -> Result<Session, CliError> {
        let truth = match &p.domain {
            Some(path) => parse_domain(&read(path)?)
                .map_err(|source| CliError::Parse { path: path.display().to_string(), source })?,
            None => crate::ra_domain(),
        };
        if let Some(id) = p.hide.iter().find(|id| truth.axiom(id).is_none()) {
            return Err(CliError::Input(format!("no axiom `{id}` to hide")));
        }
        let scene = match crate::bundled_scene(&p.scene) {
            Some(s) => s,
            None => Scene::from_json(&read(Path::new(&p.scene))?)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.scene)))?,
        };
        let hidden: Vec<&str> = p.hide.iter().map(|s| s.as_str()).collect();
        let mut base = truth.without(&hidden);
        let mut learned = Vec::new();
        if let Some(path) = learned_path {
            learned = parse_learned(&read(path)?, &base)
                .map_err(|source| CliError::Parse { path: path.display().to_string(), source })?;
            base = base.with_axioms(learned.iter().map(|l| l.axiom.clone())).map_err(ReasonError::from)?;
        }
        let domain = scene.domain(&base);
        let goal =
            parse_goal(&p.goal, &domain.signature).map_err(|source| CliError::Parse { path: "goal".into(), source })?;
        let history = scene.history(&domain);
        Ok(Session { truth, domain, scene, goal, history, trajectory: None, learned, transcript: Vec::new() })
    }

    /// Plans for the goal and executes the first plan in belief.
    pub fn execute_plan(&mut self, max_steps: usize) -> Result<Vec<Action>, CliError> {
        let r = Reasoner::new(&self.domain)?;
        let s0 = r.initial_state(&self.history)?;
        let plan = r.plan(&s0, &self.goal, max_steps).map_err(|_| CliError::NoPlan(max_steps))?.remove(0).plan;
        self.history.happened = plan.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        self.trajectory = Some(r.trajectory(&self.history)?);
        Ok(plan)
    }

    /// Answers one question; failures to parse or explain become the answer
    /// text.
    pub fn ask(&mut self, question: &str, vocab: &VocabTable) -> String {
        let answer = match (parse_query(question, vocab, &self.domain.signature), &self.trajectory) {
            (Err(ParseError::UnknownObject(o)), _) => format!("I do not know the object `{o}`."),
            (Err(_), _) => format!("I did not understand. I can answer:\n  {}", GRAMMARS.join("\n  ")),
            (Ok(_), None) => "There is no plan yet.".to_string(),
            (Ok(q), Some(t)) => match Analyzer::new(&self.domain, t, &self.goal, vocab).answer(&q) {
                Ok(a) => a.text,
                Err(e) => explain_error(&e),
            },
        };
        self.transcript.push((question.to_string(), answer.clone()));
        answer
    }
}

fn explain_error(e: &AnalyzeError) -> String {
    match e {
        AnalyzeError::NotInPlan { .. } => format!("I did not do that: {e}."),
        AnalyzeError::ActionWasExecuted { .. } => format!("But I did: {e}."),
        AnalyzeError::UnknownBelief { .. } => format!("I did not believe that: {e}."),
        _ => format!("I cannot explain that: {e}."),
    }
}

fn load_vocab(name: &str) -> Result<VocabTable, CliError> {
    match VocabTable::bundled(name) {
        Some(v) => Ok(v),
        None => VocabTable::parse(&read(Path::new(name))?)
            .map_err(|source| CliError::Parse { path: name.to_string(), source }),
    }
}

/// All minimal plans, one per line.
pub fn cmd_plan(p: &Problem, learned: Option<&Path>, max_steps: usize) -> Result<String, CliError> {
    let s = Session::load(p, learned)?;
    let r = Reasoner::new(&s.domain)?;
    let s0 = r.initial_state(&s.history)?;
    let plans = r.plan(&s0, &s.goal, max_steps).map_err(|_| CliError::NoPlan(max_steps))?;
    Ok(plans.iter().map(|p| format!("{p}\n")).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpisodeStatus {
    Reached,
    NotReached,
}

#[derive(Debug)]
pub struct Episode {
    pub status: EpisodeStatus,
    pub executed: Vec<Action>,
    pub replans: usize,
    pub learned: Vec<LearnedAxiom>,
    pub notes: Vec<String>,
    /// World events as JSON lines.
    pub log: String,
}

pub struct RunOptions {
    pub noise: NoiseModel,
    pub seed: u64,
    pub max_steps: usize,
    pub max_replans: usize,
    pub learn: Option<LearnerConfig>,
}

/// Plans, executes in the world, and replans from what is observed when an
/// action fails or its outcome differs from the prediction. With learning
/// on, a differing outcome first triggers learning for that action.
pub fn run_episode(s: &mut Session, o: &RunOptions) -> Result<Episode, CliError> {
    let mut world = World::new(s.scene.clone(), &s.truth, o.noise, o.seed)?;
    let mut agent = Reasoner::new(&s.domain)?;
    let mut history = s.history.clone();
    history.observations = world.observe().into_iter().map(|l| (l, 0)).collect();
    let mut belief = agent.initial_state(&history)?;
    let mut ep = Episode {
        status: EpisodeStatus::NotReached,
        executed: Vec::new(),
        replans: 0,
        learned: Vec::new(),
        notes: Vec::new(),
        log: String::new(),
    };
    'outer: loop {
        let plan = match agent.plan(&belief, &s.goal, o.max_steps) {
            Ok(mut p) => p.remove(0).plan,
            Err(_) if ep.replans == 0 => return Err(CliError::NoPlan(o.max_steps)),
            Err(_) => {
                ep.notes.push("no plan from here".into());
                break;
            }
        };
        ep.notes.push(format!("plan: {}", plan.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", ")));
        for a in plan {
            let expected = agent.step(&belief, &a)?;
            ep.executed.push(a.clone());
            let failed = world.execute(&a)? == Outcome::Failed;
            let obs = world.observe();
            let observed = agent.closure(obs.clone())?;
            let sig = agent.signature();
            let disc = classify_discrepancy(&belief, &expected, &observed, |l| sig.is_inertial(l));
            if !failed && disc.is_empty() {
                belief = agent.absorb(&expected, &obs).unwrap_or(observed);
                continue;
            }
            ep.notes.push(if failed {
                format!("{a} failed")
            } else {
                let d: Vec<String> = disc.iter().map(|(_, l)| l.to_string()).collect();
                format!("after {a}, unexpected: {}", d.join(", "))
            });
            if let (Some(cfg), false) = (&o.learn, failed) {
                let mode = if disc.iter().any(|(k, _)| *k == DiscrepancyKind::MissingCausalLaw) {
                    Mode::Causal
                } else {
                    Mode::Exec
                };
                let src =
                    SampleSource { agent: &s.domain, truth: &s.truth, profile: Profile::Simulated, noise: o.noise };
                let (promoted, _) = learn_for(&src, &a.name, mode, cfg, o.seed.wrapping_add(ep.replans as u64))?;
                for p in promoted {
                    if let Ok(d) = s.domain.with_axioms([p.axiom.clone()]) {
                        ep.notes.push(format!("learned {}", p.axiom));
                        s.domain = d;
                        ep.learned.push(p);
                    }
                }
                agent = Reasoner::new(&s.domain)?;
            }
            ep.replans += 1;
            if ep.replans > o.max_replans {
                ep.log = world.log_jsonl();
                return Err(CliError::ReplanLimitExceeded(o.max_replans));
            }
            belief = agent.closure(obs)?;
            continue 'outer;
        }
        break;
    }
    if s.goal.iter().all(|g| world.state.contains(g)) {
        ep.status = EpisodeStatus::Reached;
    }
    ep.log = world.log_jsonl();
    s.learned.extend(ep.learned.iter().cloned());
    Ok(ep)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        PathBuf::from("runs").join(t.to_string())
    })
}

fn save(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

/// Runs a parsed command line, writing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let learned = cli.learned_axioms.as_deref();
    if !(0.0..=1.0).contains(&cli.noise) {
        return Err(CliError::Input(format!("noise {} is not a rate", cli.noise)));
    }
    match &cli.command {
        Command::Plan(p) => write!(out, "{}", cmd_plan(p, learned, cli.max_steps)?)?,
        Command::Run { problem, learn, failure, max_replans } => {
            let mut s = Session::load(problem, learned)?;
            let opts = RunOptions {
                noise: NoiseModel { manipulation_failure_rate: *failure, ..NoiseModel::relations(cli.noise) },
                seed: cli.seed,
                max_steps: cli.max_steps,
                max_replans: *max_replans,
                learn: learn.then(LearnerConfig::default),
            };
            let ep = run_episode(&mut s, &opts)?;
            for n in &ep.notes {
                writeln!(out, "{n}")?;
            }
            writeln!(out, "{:?} after {} actions and {} replans", ep.status, ep.executed.len(), ep.replans)?;
            let dir = out_dir(cli);
            save(&dir, "episode.jsonl", &ep.log)?;
            if !ep.learned.is_empty() {
                save(&dir, "learned.axioms", &serialize_learned(&ep.learned))?;
            }
            writeln!(out, "log: {}", dir.display())?;
        }
        Command::Ask { problem, question, vocab } => {
            let vocab = load_vocab(vocab)?;
            let mut s = Session::load(problem, learned)?;
            s.execute_plan(cli.max_steps)?;
            match question {
                Some(q) => writeln!(out, "{}", s.ask(q, &vocab))?,
                None => {
                    let stdin = std::io::stdin();
                    for line in stdin.lock().lines() {
                        let line = line?;
                        let q = line.trim();
                        if q.is_empty() {
                            continue;
                        }
                        if matches!(q, "quit" | "exit") {
                            break;
                        }
                        writeln!(out, "{}", s.ask(q, &vocab))?;
                    }
                }
            }
            let pairs: Vec<(&str, &str)> = s.transcript.iter().map(|(q, a)| (q.as_str(), a.as_str())).collect();
            save(&out_dir(cli), "transcript.txt", &transcript(pairs))?;
        }
        Command::Learn { hide } => {
            let truth = crate::ra_domain();
            let hidden: Vec<&str> = hide.iter().map(|s| s.as_str()).collect();
            if let Some(id) = hidden.iter().find(|id| truth.axiom(id).is_none()) {
                return Err(CliError::Input(format!("no axiom `{id}` to hide")));
            }
            let run =
                run_learning(&truth, &hidden, &LearnerConfig::default(), NoiseModel::relations(cli.noise), cli.seed)?;
            let text = serialize_learned(&run.learned);
            write!(out, "{text}")?;
            let dir = out_dir(cli);
            save(&dir, "learned.axioms", &text)?;
            save(&dir, "learning.log", &(run.log.join("\n") + "\n"))?;
        }
        Command::Eval { config, only } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::parse(&read(p)?)?,
                None => ExperimentConfig::default(),
            };
            cfg.seed = cli.seed;
            if !only.is_empty() {
                cfg.only = only.clone();
                cfg.validate()?;
            }
            let rep = run_all(&cfg)?;
            let dir = out_dir(cli);
            for f in emit_tables(&rep, &dir)? {
                writeln!(out, "{}", dir.join(f).display())?;
            }
        }
    }
    Ok(())
}

/// Entry point: parses arguments, runs, and returns the exit code.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

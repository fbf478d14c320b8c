//! Unrealizability checking on examples, and the CEGIS loop that races it
//! against enumerative synthesis.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{predabs_sat, predabs_solve, PredicateDomain, ShowPred};
use crate::booldom::LessThanMemo;
use crate::clia::{solve_system, SolveStats};
use crate::frontend::{specialize, Problem, SpecFormula};
use crate::gfa::{build_equations, AbsValue, Domain, GfaError, GfaProblem, PolynomialSystem};
use crate::grammar::{ExampleError, ExampleSet, Rtg, Sort, Term, Value};
use crate::ilp::{IlpError, IlpOutcome, IlpSolver, IlpSystem, Oracle, DEFAULT_NODE_BUDGET};
use crate::logic::{build_query, export_smtlib, solve_query, QueryOutcome};
use crate::newton::NewtonOptions;
use crate::rewrite::to_plus_form;
use crate::synth::{verify, Enumerator, SynthBudget, SynthOutcome, VerifyOutcome};

/// Abstract domain used by the unrealizability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Exact: semi-linear sets and Boolean vector sets.
    SemiLinear,
    /// Sound only: a finite predicate partition.
    PredAbs(PredicateDomain),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Gfa(#[from] GfaError),
    #[error(transparent)]
    Examples(#[from] ExampleError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckResult {
    Unrealizable,
    /// Some output vector of the grammar satisfies the specification on
    /// the examples; it is recorded when known.
    Realizable(Option<Vec<BigInt>>),
    Unknown(String),
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub result: CheckResult,
    /// `n(Start)` as text.
    pub start_value: String,
    /// The final query as an SMT-LIB2 script, for the semi-linear backend
    /// with an integer start symbol.
    pub query_smt: Option<String>,
    pub stats: SolveStats,
}

/// `𝒢_E` for a surface grammar: n-ary expansion, Minus elimination, then
/// one equation per nonterminal.
pub fn equations(g: &Rtg, e: &ExampleSet) -> Result<PolynomialSystem, GfaError> {
    let plus = to_plus_form(&g.expand_nary());
    build_equations(&GfaProblem { grammar: plus, examples: e.clone(), domain: Domain::SemiLinear })
}

fn unknown(e: IlpError) -> CheckResult {
    CheckResult::Unknown(match e {
        IlpError::Cancelled => "time budget exhausted".into(),
        e => e.to_string(),
    })
}

/// Decides whether `(g, spec)` restricted to the examples `e` is
/// unrealizable.
pub fn check_unrealizable(
    g: &Rtg,
    spec: &SpecFormula,
    e: &ExampleSet,
    backend: &Backend,
    oracle: &dyn Oracle,
) -> Result<CheckReport, CheckError> {
    let ps = specialize(spec, e);
    let sort = g.sort(g.start);
    match backend {
        Backend::PredAbs(dom) => {
            let r = predabs_solve(g, e, dom)?;
            let value = &r.values[g.start.0];
            let start_value = ShowPred(dom, sort, value).to_string();
            let result = match predabs_sat(value, sort, dom, &ps, oracle) {
                Ok(false) => CheckResult::Unrealizable,
                Ok(true) => CheckResult::Unknown("predicate abstraction admits a solution".into()),
                Err(err) => unknown(err),
            };
            let stats = SolveStats { bool_iterations: vec![(r.iterations, g.len())], ..SolveStats::default() };
            Ok(CheckReport { result, start_value, query_smt: None, stats })
        }
        Backend::SemiLinear => {
            let sys = equations(g, e)?;
            let memo = LessThanMemo::new();
            let sol = match solve_system(&sys, oracle, &memo, NewtonOptions::default()) {
                Ok(s) => s,
                Err(err) => {
                    return Ok(CheckReport {
                        result: unknown(err),
                        start_value: String::new(),
                        query_smt: None,
                        stats: SolveStats::default(),
                    })
                }
            };
            let value = sol.get(sys.start);
            let start_value = value.to_string();
            let (result, query_smt) = match value {
                AbsValue::Sl(sl) => {
                    let text = export_smtlib(&build_query(sl, &ps));
                    let r = match solve_query(sl, &ps, oracle) {
                        Ok(QueryOutcome::Unsat) => CheckResult::Unrealizable,
                        Ok(QueryOutcome::Sat(o)) => CheckResult::Realizable(Some(o)),
                        Err(err) => unknown(err),
                    };
                    (r, Some(text))
                }
                AbsValue::Bools(bs) => {
                    let ok = bs.iter().any(|b| ps.holds_value(&Value::Bool(b.clone())));
                    (if ok { CheckResult::Realizable(None) } else { CheckResult::Unrealizable }, None)
                }
            };
            debug_assert_eq!(sort == Sort::Int, query_smt.is_some());
            Ok(CheckReport { result, start_value, query_smt, stats: sol.stats })
        }
    }
}

/// Oracle wrapper that refuses queries after a deadline.
struct Deadline<'a> {
    inner: &'a dyn Oracle,
    until: Instant,
}

impl Oracle for Deadline<'_> {
    fn feasible(&self, sys: &IlpSystem) -> Result<IlpOutcome, IlpError> {
        if self.cancelled() {
            return Err(IlpError::Cancelled);
        }
        self.inner.feasible(sys)
    }

    fn cancelled(&self) -> bool {
        Instant::now() >= self.until || self.inner.cancelled()
    }
}

#[derive(Debug, Clone)]
pub struct CegisConfig {
    pub seed: u64,
    pub backend: Backend,
    /// Race the two tasks on threads instead of interleaving them.
    pub parallel: bool,
    /// Wall-clock budget of one unrealizability check.
    pub check_budget: Duration,
    pub max_term_size: usize,
    pub max_rounds: usize,
    /// Cap on temporary random examples per round.
    pub max_random_examples: usize,
    pub node_budget: u64,
    /// Write every ILP query here.
    pub export_dir: Option<PathBuf>,
    /// Set from outside to stop early.
    pub interrupt: Option<Arc<AtomicBool>>,
}

impl Default for CegisConfig {
    fn default() -> Self {
        CegisConfig {
            seed: 0,
            backend: Backend::SemiLinear,
            parallel: false,
            check_budget: Duration::from_secs(60),
            max_term_size: 20,
            max_rounds: 20,
            max_random_examples: 16,
            node_budget: DEFAULT_NODE_BUDGET,
            export_dir: None,
            interrupt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictKind {
    Unrealizable,
    Realizable,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Option<Term>,
    /// For witnesses: `proven` or `tested`.
    pub validation: Option<&'static str>,
    pub reason: Option<String>,
    pub variables: Vec<String>,
    /// The examples in force when the verdict was reached.
    pub examples: Vec<Vec<BigInt>>,
    pub iterations: usize,
    pub trace: Vec<String>,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        let examples: Vec<serde_json::Value> = self
            .examples
            .iter()
            .map(|ex| {
                let m: serde_json::Map<String, serde_json::Value> = self
                    .variables
                    .iter()
                    .zip(ex)
                    .map(|(x, v)| (x.clone(), json_int(v)))
                    .collect();
                serde_json::Value::Object(m)
            })
            .collect();
        serde_json::json!({
            "verdict": self.kind,
            "witness": self.witness.as_ref().map(Term::to_sexpr),
            "validation": self.validation,
            "reason": self.reason,
            "examples": examples,
            "iterations": self.iterations,
            "trace": self.trace,
        })
    }
}

fn json_int(v: &BigInt) -> serde_json::Value {
    match i64::try_from(v) {
        Ok(i) => serde_json::Value::from(i),
        Err(_) => serde_json::Value::String(v.to_string()),
    }
}

fn show_examples(vars: &[String], ex: &[Vec<BigInt>]) -> String {
    let items: Vec<String> = ex
        .iter()
        .map(|i| {
            let parts: Vec<String> = vars.iter().zip(i).map(|(x, v)| format!("{x}={v}")).collect();
            parts.join(",")
        })
        .collect();
    format!("{{{}}}", items.join("; "))
}

const RANDOM_RANGE: i64 = 50;

fn random_input(rng: &mut ChaCha8Rng, k: usize, taken: &[Vec<BigInt>]) -> Option<Vec<BigInt>> {
    for _ in 0..1000 {
        let v: Vec<BigInt> = (0..k).map(|_| BigInt::from(rng.gen_range(-RANDOM_RANGE..=RANDOM_RANGE))).collect();
        if !taken.contains(&v) {
            return Some(v);
        }
    }
    None
}

/// Outcome of one round of racing.
enum Race {
    Unrealizable(Vec<Vec<BigInt>>),
    Candidate(Term),
    GaveUp(String),
}

/// Task ②: checks on `E ∪ E_r`, growing `E_r` while the answer is not
/// Unrealizable. Each call performs one check.
struct Checker<'a> {
    problem: &'a Problem,
    cfg: &'a CegisConfig,
    examples: Vec<Vec<BigInt>>,
    extra: Vec<Vec<BigInt>>,
    rng: ChaCha8Rng,
    done: bool,
}

enum CheckStep {
    Unrealizable(Vec<Vec<BigInt>>),
    Continue,
    GaveUp(String),
}

impl Checker<'_> {
    fn step(&mut self, oracle: &dyn Oracle, trace: &mut Vec<String>) -> CheckStep {
        let mut all = self.examples.clone();
        all.extend(self.extra.iter().cloned());
        let e = ExampleSet::new(self.problem.variables.clone(), all.clone()).expect("non-empty");
        let guarded = Deadline { inner: oracle, until: Instant::now() + self.cfg.check_budget };
        let report = match check_unrealizable(&self.problem.grammar, &self.problem.spec, &e, &self.cfg.backend, &guarded) {
            Ok(r) => r,
            Err(err) => {
                self.done = true;
                return CheckStep::GaveUp(err.to_string());
            }
        };
        let label = match &report.result {
            CheckResult::Unrealizable => "unrealizable".to_string(),
            CheckResult::Realizable(_) => "realizable".to_string(),
            CheckResult::Unknown(r) => format!("unknown ({r})"),
        };
        trace.push(format!(
            "check E={}: n(Start) = {} => {label}",
            show_examples(&self.problem.variables, &all),
            report.start_value
        ));
        match report.result {
            CheckResult::Unrealizable => {
                self.done = true;
                CheckStep::Unrealizable(all)
            }
            CheckResult::Unknown(r) if matches!(self.cfg.backend, Backend::SemiLinear) => {
                self.done = true;
                CheckStep::GaveUp(r)
            }
            _ => {
                if self.extra.len() >= self.cfg.max_random_examples {
                    self.done = true;
                    return CheckStep::GaveUp("random example cap reached".into());
                }
                match random_input(&mut self.rng, self.problem.variables.len(), &all) {
                    Some(i) => {
                        self.extra.push(i);
                        CheckStep::Continue
                    }
                    None => {
                        self.done = true;
                        CheckStep::GaveUp("no fresh random example".into())
                    }
                }
            }
        }
    }
}

/// The first example of a run: one input drawn from the seeded generator.
pub fn initial_example(k: usize, seed: u64) -> Vec<BigInt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_input(&mut rng, k, &[]).expect("empty set")
}

fn round_rng(seed: u64, round: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn interrupted(cfg: &CegisConfig) -> bool {
    cfg.interrupt.as_ref().is_some_and(|f| f.load(Ordering::Relaxed))
}

fn race_sequential(
    problem: &Problem,
    cfg: &CegisConfig,
    examples: &[Vec<BigInt>],
    round: usize,
    oracle: &IlpSolver,
    trace: &mut Vec<String>,
) -> Race {
    let e = ExampleSet::new(problem.variables.clone(), examples.to_vec()).expect("non-empty");
    let ps = specialize(&problem.spec, &e);
    let budget = SynthBudget { max_size: cfg.max_term_size, ..SynthBudget::default() };
    let mut en = Enumerator::new(&problem.grammar, &ps, &e, budget);
    let mut synth_live = true;
    let mut checker = Checker {
        problem,
        cfg,
        examples: examples.to_vec(),
        extra: Vec::new(),
        rng: round_rng(cfg.seed, round),
        done: false,
    };
    let mut why = Vec::new();
    loop {
        if interrupted(cfg) {
            return Race::GaveUp("interrupted".into());
        }
        if !checker.done {
            match checker.step(oracle, trace) {
                CheckStep::Unrealizable(all) => return Race::Unrealizable(all),
                CheckStep::Continue => {}
                CheckStep::GaveUp(r) => why.push(format!("check: {r}")),
            }
        }
        if synth_live {
            match en.step() {
                Ok(Some(c)) => {
                    trace.push(format!("synth: candidate {} at size {}", c.term.to_sexpr(), en.size()));
                    return Race::Candidate(c.term);
                }
                Ok(None) => {}
                Err(o) => {
                    synth_live = false;
                    let r = match o {
                        SynthOutcome::Budget => "term budget exhausted",
                        _ => "size cap reached",
                    };
                    trace.push(format!("synth: {r} at size {}", en.size()));
                    why.push(format!("synth: {r}"));
                }
            }
        }
        if checker.done && !synth_live {
            return Race::GaveUp(why.join("; "));
        }
    }
}

enum Event {
    Check(CheckStep, Vec<String>),
    Synth(Result<Term, String>, Vec<String>),
}

fn race_parallel(
    problem: &Problem,
    cfg: &CegisConfig,
    examples: &[Vec<BigInt>],
    round: usize,
    oracle: &IlpSolver,
    trace: &mut Vec<String>,
) -> Race {
    let stop = Arc::new(AtomicBool::new(false));
    let check_oracle = IlpSolver::new(cfg.node_budget).sharing_counter(oracle).with_cancel(Arc::clone(&stop));
    let check_oracle = match &cfg.export_dir {
        Some(d) => check_oracle.with_export(d.clone()),
        None => check_oracle,
    };
    let (tx, rx) = mpsc::channel::<Event>();
    std::thread::scope(|s| {
        let tx1 = tx.clone();
        let stop1 = Arc::clone(&stop);
        let check_oracle = &check_oracle;
        s.spawn(move || {
            let mut checker = Checker {
                problem,
                cfg,
                examples: examples.to_vec(),
                extra: Vec::new(),
                rng: round_rng(cfg.seed, round),
                done: false,
            };
            while !checker.done && !stop1.load(Ordering::Relaxed) {
                let mut lines = Vec::new();
                let step = checker.step(check_oracle, &mut lines);
                let last = !matches!(step, CheckStep::Continue);
                if tx1.send(Event::Check(step, lines)).is_err() || last {
                    break;
                }
            }
        });
        let stop2 = Arc::clone(&stop);
        s.spawn(move || {
            let e = ExampleSet::new(problem.variables.clone(), examples.to_vec()).expect("non-empty");
            let ps = specialize(&problem.spec, &e);
            let budget = SynthBudget { max_size: cfg.max_term_size, ..SynthBudget::default() };
            let mut en = Enumerator::new(&problem.grammar, &ps, &e, budget);
            while !stop2.load(Ordering::Relaxed) {
                match en.step() {
                    Ok(Some(c)) => {
                        let line = format!("synth: candidate {} at size {}", c.term.to_sexpr(), en.size());
                        let _ = tx.send(Event::Synth(Ok(c.term), vec![line]));
                        return;
                    }
                    Ok(None) => {}
                    Err(o) => {
                        let r = if o == SynthOutcome::Budget { "term budget exhausted" } else { "size cap reached" };
                        let line = format!("synth: {r} at size {}", en.size());
                        let _ = tx.send(Event::Synth(Err(r.to_string()), vec![line]));
                        return;
                    }
                }
            }
        });
        let mut why = Vec::new();
        let (mut check_live, mut synth_live) = (true, true);
        let outcome = loop {
            if interrupted(cfg) {
                break Race::GaveUp("interrupted".into());
            }
            let ev = match rx.recv_timeout(Duration::from_millis(50)) {
                Ok(ev) => ev,
                Err(mpsc::RecvTimeoutError::Timeout) => continue,
                Err(mpsc::RecvTimeoutError::Disconnected) => break Race::GaveUp(why.join("; ")),
            };
            match ev {
                Event::Check(step, lines) => {
                    trace.extend(lines);
                    match step {
                        CheckStep::Unrealizable(all) => break Race::Unrealizable(all),
                        CheckStep::Continue => {}
                        CheckStep::GaveUp(r) => {
                            why.push(format!("check: {r}"));
                            check_live = false;
                        }
                    }
                }
                Event::Synth(r, lines) => {
                    trace.extend(lines);
                    match r {
                        Ok(t) => break Race::Candidate(t),
                        Err(r) => {
                            why.push(format!("synth: {r}"));
                            synth_live = false;
                        }
                    }
                }
            }
            if !check_live && !synth_live {
                break Race::GaveUp(why.join("; "));
            }
        };
        stop.store(true, Ordering::Relaxed);
        outcome
    })
}

/// CEGIS with random examples: start from one random input, race synthesis
/// against unrealizability checking, and grow `E` with counterexamples.
pub fn run_cegis(problem: &Problem, cfg: &CegisConfig) -> Verdict {
    let mut oracle = IlpSolver::new(cfg.node_budget);
    if let Some(d) = &cfg.export_dir {
        oracle = oracle.with_export(d.clone());
    }
    if let Some(f) = &cfg.interrupt {
        oracle = oracle.with_cancel(Arc::clone(f));
    }
    let vars = problem.variables.clone();
    let mut examples = vec![initial_example(vars.len(), cfg.seed)];
    let mut trace = Vec::new();
    let verdict = |kind, witness, validation, reason, examples: Vec<Vec<BigInt>>, iterations, trace| Verdict {
        kind,
        witness,
        validation,
        reason,
        variables: vars.clone(),
        examples,
        iterations,
        trace,
    };
    for round in 1..=cfg.max_rounds {
        trace.push(format!("round {round}: E={}", show_examples(&vars, &examples)));
        let race = if cfg.parallel {
            race_parallel(problem, cfg, &examples, round, &oracle, &mut trace)
        } else {
            race_sequential(problem, cfg, &examples, round, &oracle, &mut trace)
        };
        match race {
            Race::Unrealizable(all) => {
                return verdict(VerdictKind::Unrealizable, None, None, None, all, round, trace);
            }
            Race::GaveUp(r) => {
                return verdict(VerdictKind::Unknown, None, None, Some(r), examples, round, trace);
            }
            Race::Candidate(t) => match verify(&t, &problem.spec, &vars, &oracle) {
                VerifyOutcome::Valid => {
                    trace.push("verify: valid".into());
                    return verdict(VerdictKind::Realizable, Some(t), Some("proven"), None, examples, round, trace);
                }
                VerifyOutcome::ValidUnknown => {
                    trace.push("verify: no counterexample in random testing".into());
                    return verdict(VerdictKind::Realizable, Some(t), Some("tested"), None, examples, round, trace);
                }
                VerifyOutcome::Counterexample(i) => {
                    trace.push(format!("verify: counterexample {}", show_examples(&vars, std::slice::from_ref(&i))));
                    assert!(!examples.contains(&i), "counterexample already in E");
                    examples.push(i);
                }
                VerifyOutcome::Unknown(r) => {
                    trace.push(format!("verify: unknown ({r})"));
                    return verdict(VerdictKind::Unknown, None, None, Some(r), examples, round, trace);
                }
            },
        }
    }
    let n = cfg.max_rounds;
    verdict(VerdictKind::Unknown, None, None, Some("round limit reached".into()), examples, n, trace)
}

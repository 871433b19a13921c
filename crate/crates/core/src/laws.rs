//! Randomized checks of the axioms: each case draws a closed instance of
//! an axiom and compares its two sides, either as thread terms (behavioural
//! equivalence) or as executions under the same replies and choices.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{app, std_located, DistEntry, Loc, LocSet, LocThread};
use crate::error::{Error, Result};
use crate::exec::{Expect, Outcome, ReplySource, Resolver, Response, Trace};
use crate::fragsearch::{appfs, pv, FragSet, FsEntry};
use crate::local::{pci, std};
use crate::poly::spt_term;
use crate::service::{use_service, Reply, Service};
use crate::term::{Action, BasicAction, Focus, Method, RecSpec, Thread};

/// Depth used when comparing possibly infinite threads.
pub const EQUIV_DEPTH: usize = 32;
/// Step budget for execution-based comparisons.
pub const TRACE_STEPS: usize = 60;

/// Names accepted by [`run_suite`].
pub const SUITES: &[&str] = &[
    "t1", "rdp", "tsu", "pcs", "spt", "s2d", "pci", "lthr", "pcdi", "pcdifs",
];

/// A reply source without state: the reply to an action depends only on
/// the seed and the action, so that runs starting at different points of
/// the same behaviour see the same replies.
#[derive(Debug, Clone, Copy)]
pub struct HashReplies {
    seed: u64,
}

impl HashReplies {
    pub fn new(seed: u64) -> Self {
        HashReplies { seed }
    }

    pub fn reply(&self, action: &BasicAction, expect: Expect) -> Reply {
        let mut h = DefaultHasher::new();
        (self.seed, action).hash(&mut h);
        let bits = h.finish();
        match expect {
            Expect::Bool if bits % 2 == 0 => Reply::True,
            Expect::Bool => Reply::False,
            Expect::Index(k) => Reply::Nat(1 + bits % k.max(1) as u64),
        }
    }
}

impl ReplySource for HashReplies {
    fn respond(&mut self, action: &BasicAction, expect: Expect) -> Result<Response> {
        Ok(Response::External(self.reply(action, expect)))
    }
}

/// What may occur in generated threads.
#[derive(Debug, Clone, Default)]
pub struct Kinds {
    /// Highest switch-over index drawn (indices start at 0).
    pub switch: Option<usize>,
    pub external: bool,
    pub pcs: bool,
    pub choice: bool,
    /// Migration targets.
    pub mig: Vec<Loc>,
    pub rec: bool,
}

/// Random instance generator over at most three foci, three methods and
/// three locations.
pub struct Gen {
    pub rng: ChaCha8Rng,
    foci: Vec<Focus>,
    methods: Vec<Method>,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nf = rng.gen_range(1..=3);
        let nm = rng.gen_range(1..=3);
        let foci = ["f", "g", "h"][..nf]
            .iter()
            .map(|s| Focus::new(s).unwrap())
            .collect();
        let methods = ["a", "b", "c"][..nm]
            .iter()
            .map(|s| Method::new(s).unwrap())
            .collect();
        Gen { rng, foci, methods }
    }

    pub fn focus(&mut self) -> Focus {
        self.foci.choose(&mut self.rng).unwrap().clone()
    }

    pub fn method(&mut self) -> Method {
        self.methods.choose(&mut self.rng).unwrap().clone()
    }

    pub fn basic(&mut self) -> BasicAction {
        BasicAction::new(self.focus(), self.method())
    }

    pub fn action(&mut self) -> Action {
        if self.rng.gen_bool(0.15) {
            Action::Tau
        } else {
            Action::Basic(self.basic())
        }
    }

    /// A focus other than `f`, if there is one.
    pub fn other_focus(&mut self, f: &Focus) -> Option<Focus> {
        let others: Vec<&Focus> = self.foci.iter().filter(|g| *g != f).collect();
        others.choose(&mut self.rng).map(|g| (*g).clone())
    }

    fn leaf(&mut self, kinds: &Kinds, vars: &[&str]) -> Thread {
        let mut options: Vec<u8> = vec![0, 1];
        if kinds.switch.is_some() {
            options.extend([2, 2]);
        }
        if kinds.external {
            options.push(3);
        }
        if !vars.is_empty() {
            options.extend([4, 4]);
        }
        match *options.choose(&mut self.rng).unwrap() {
            0 => Thread::Stop,
            1 => Thread::Deadlock,
            2 => Thread::Switch(self.rng.gen_range(0..=kinds.switch.unwrap_or(0))),
            3 => Thread::Extern,
            _ => Thread::Var(vars.choose(&mut self.rng).unwrap().to_string()),
        }
    }

    fn node(&mut self, depth: usize, kinds: &Kinds, vars: &[&str]) -> Thread {
        let sub = |g: &mut Gen| g.with_vars(depth - 1, kinds, vars);
        let roll = self.rng.gen_range(0..10);
        if roll == 0 && kinds.pcs {
            let k = self.rng.gen_range(1..=3);
            let a = self.action();
            Thread::Pcs(a, (0..k).map(|_| sub(self)).collect())
        } else if roll == 1 && kinds.choice {
            let k = self.rng.gen_range(1..=3);
            Thread::Choice((0..k).map(|_| sub(self)).collect())
        } else if roll == 2 && !kinds.mig.is_empty() {
            let n = *kinds.mig.choose(&mut self.rng).unwrap();
            Thread::mig(n, sub(self), sub(self))
        } else {
            let a = self.action();
            Thread::pcc(a, sub(self), sub(self))
        }
    }

    fn with_vars(&mut self, depth: usize, kinds: &Kinds, vars: &[&str]) -> Thread {
        if depth == 0 || self.rng.gen_bool(0.3) {
            self.leaf(kinds, vars)
        } else {
            self.node(depth, kinds, vars)
        }
    }

    /// A closed thread of depth at most `depth`; with `kinds.rec` set it is
    /// sometimes the solution of a small recursive specification.
    pub fn thread(&mut self, depth: usize, kinds: &Kinds) -> Thread {
        if kinds.rec && depth > 0 && self.rng.gen_bool(0.2) {
            return self.recursive(depth, kinds);
        }
        self.with_vars(depth, kinds, &[])
    }

    /// The constant for `X` of a guarded specification over `X` and maybe
    /// `Y`.
    pub fn recursive(&mut self, depth: usize, kinds: &Kinds) -> Thread {
        let vars: &[&str] = if self.rng.gen_bool(0.5) {
            &["X"]
        } else {
            &["X", "Y"]
        };
        let depth = depth.max(1);
        let equations: Vec<(&str, Thread)> = vars
            .iter()
            .map(|v| {
                let a = self.action();
                let x = self.with_vars(depth - 1, kinds, vars);
                let y = self.with_vars(depth - 1, kinds, vars);
                (*v, Thread::pcc(a, x, y))
            })
            .collect();
        let spec = RecSpec::new(equations).expect("generated bodies are guarded");
        Thread::rec("X", spec).expect("X is defined")
    }

    pub fn vector(&mut self, lo: usize, hi: usize, depth: usize, kinds: &Kinds) -> Vec<Thread> {
        let n = self.rng.gen_range(lo..=hi);
        (0..n).map(|_| self.thread(depth, kinds)).collect()
    }

    /// A finite-state service.
    pub fn service(&mut self) -> Service {
        match self.rng.gen_range(0..7) {
            0 => Service::Counter {
                value: self.rng.gen_range(0..=2),
                max: Some(3),
            },
            1 => Service::Register(self.rng.gen_bool(0.5)),
            2 => Service::Stack(
                (0..self.rng.gen_range(0..=2))
                    .map(|_| self.rng.gen_bool(0.5))
                    .collect(),
            ),
            3 => {
                let n = self.rng.gen_range(0..=4);
                let replies = (0..n).map(|_| self.reply()).collect();
                Service::scripted(replies)
            }
            4 => Service::constant(self.reply()),
            5 => Service::Blocked,
            _ => Service::constant(Reply::True),
        }
    }

    pub fn reply(&mut self) -> Reply {
        match self.rng.gen_range(0..6) {
            0 | 1 => Reply::True,
            2 | 3 => Reply::False,
            4 => Reply::Blocked,
            _ => Reply::Nat(self.rng.gen_range(0..=4)),
        }
    }

    /// Resolver choices for selections among `n` fragments; 0 is rare.
    pub fn choices(&mut self, n: usize) -> Vec<usize> {
        (0..256)
            .map(|_| {
                if n == 0 || self.rng.gen_bool(0.1) {
                    0
                } else {
                    self.rng.gen_range(1..=n)
                }
            })
            .collect()
    }

    pub fn locations(&mut self) -> Vec<Loc> {
        let n = self.rng.gen_range(1..=3);
        (1..=n as Loc).collect()
    }

    pub fn frag_set(&mut self, n: usize) -> FragSet {
        (1..=n).filter(|_| self.rng.gen_bool(0.5)).collect()
    }
}

/// Outcome of one axiom over all its cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomResult {
    pub axiom: String,
    pub passed: usize,
    pub cases: usize,
    pub first_failure: Option<String>,
}

impl AxiomResult {
    pub fn ok(&self) -> bool {
        self.passed == self.cases
    }
}

impl fmt::Display for AxiomResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "pass" } else { "FAIL" };
        write!(
            f,
            "{:<9} {verdict} {}/{}",
            self.axiom, self.passed, self.cases
        )?;
        if let Some(msg) = &self.first_failure {
            write!(f, "  first failure: {msg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: String,
    pub results: Vec<AxiomResult>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.results.iter().all(AxiomResult::ok)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite)?;
        for r in &self.results {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

/// `Ok(None)`: the drawn instance does not meet the side condition and is
/// redrawn. `Ok(Some(msg))`: the sides differ.
type Verdict = Result<Option<Option<String>>>;
type Law = fn(&mut Gen) -> Verdict;

fn same(lhs: &Thread, rhs: &Thread) -> Verdict {
    if lhs.equivalent(rhs, EQUIV_DEPTH) {
        Ok(Some(None))
    } else {
        Ok(Some(Some(format!("{lhs} vs {rhs}"))))
    }
}

type Observed = (
    Vec<(Option<u64>, Action, Option<Reply>, Option<BasicAction>)>,
    Outcome,
);

fn observed(t: &Trace) -> Observed {
    (t.observable(), t.outcome)
}

fn same_runs(lhs: Observed, rhs: Observed) -> Verdict {
    if lhs == rhs {
        Ok(Some(None))
    } else {
        Ok(Some(Some(format!("{:?} vs {:?}", lhs, rhs))))
    }
}

fn skip() -> Verdict {
    Ok(None)
}

const REDRAWS: usize = 200;

fn run_law(name: &str, law: Law, cases: usize, seed: u64, index: u64) -> AxiomResult {
    let mut passed = 0;
    let mut first_failure = None;
    for case in 0..cases as u64 {
        let mut outcome = None;
        for attempt in 0..REDRAWS as u64 {
            let mut gen = Gen::new(mix(seed, index, case, attempt));
            match law(&mut gen) {
                Ok(None) => continue,
                Ok(Some(v)) => {
                    outcome = Some(v);
                    break;
                }
                Err(e) => {
                    outcome = Some(Some(format!("error: {e}")));
                    break;
                }
            }
        }
        match outcome {
            Some(None) => passed += 1,
            Some(Some(mut msg)) => {
                if msg.len() > 400 {
                    let cut = (0..=400)
                        .rev()
                        .find(|i| msg.is_char_boundary(*i))
                        .unwrap_or(0);
                    msg.truncate(cut);
                    msg.push_str("...");
                }
                first_failure.get_or_insert(format!("case {case}: {msg}"));
            }
            None => {
                first_failure
                    .get_or_insert(format!("case {case}: no instance met the side condition"));
            }
        }
    }
    AxiomResult {
        axiom: name.to_string(),
        passed,
        cases,
        first_failure,
    }
}

fn mix(seed: u64, index: u64, case: u64, attempt: u64) -> u64 {
    let mut h = DefaultHasher::new();
    (seed, index, case, attempt).hash(&mut h);
    h.finish()
}

/// Runs one suite with `cases` instances per axiom.
pub fn run_suite(suite: &str, cases: usize, seed: u64) -> Result<SuiteReport> {
    let laws: &[(&str, Law)] = match suite {
        "t1" => &[("T1", t1)],
        "rdp" => &[("RDP", rdp)],
        "tsu" => &TSU,
        "pcs" => &PCS,
        "spt" => &SPT,
        "s2d" => &S2D,
        "pci" => &PCI,
        "lthr" => &LTHR,
        "pcdi" => &PCDI,
        "pcdifs" => &PCDIFS,
        other => return Err(Error::Config(format!("unknown suite `{other}`"))),
    };
    let results = laws
        .iter()
        .enumerate()
        .map(|(i, (name, law))| run_law(name, *law, cases, seed, i as u64))
        .collect();
    Ok(SuiteReport {
        suite: suite.to_string(),
        results,
    })
}

/// Runs every suite.
pub fn run_all(cases: usize, seed: u64) -> Vec<SuiteReport> {
    SUITES
        .iter()
        .map(|s| run_suite(s, cases, seed).expect("known suite"))
        .collect()
}

// Basic thread algebra and recursion.

fn plain() -> Kinds {
    Kinds {
        switch: Some(3),
        external: true,
        rec: true,
        ..Kinds::default()
    }
}

fn t1(g: &mut Gen) -> Verdict {
    let x = g.thread(5, &plain());
    let y = g.thread(5, &plain());
    same(&Thread::pcc(Action::Tau, x.clone(), y), &Thread::tau(x))
}

fn rdp(g: &mut Gen) -> Verdict {
    let x = g.recursive(5, &plain());
    same(&x, &x.unfold()?)
}

// Use.

fn finite() -> Kinds {
    Kinds {
        switch: Some(3),
        external: true,
        ..Kinds::default()
    }
}

fn used(t: &Thread, f: &Focus, h: &Service) -> Result<Thread> {
    use_service(t, f, h)
}

/// A focus, a service and a method whose reply satisfies `want`.
fn service_with(g: &mut Gen, want: impl Fn(Reply) -> bool) -> Option<(Focus, Service, Method)> {
    let f = g.focus();
    let h = g.service();
    let mut methods = h.vocabulary();
    methods.push(g.method());
    methods.shuffle(&mut g.rng);
    let m = methods.into_iter().find(|m| want(h.reply(m)))?;
    Some((f, h, m))
}

const TSU: [(&str, Law); 7] = [
    ("TSU1", |g| {
        let (f, h) = (g.focus(), g.service());
        same(&used(&Thread::Stop, &f, &h)?, &Thread::Stop)
    }),
    ("TSU2", |g| {
        let (f, h) = (g.focus(), g.service());
        same(&used(&Thread::Deadlock, &f, &h)?, &Thread::Deadlock)
    }),
    ("TSU3", |g| {
        let (f, h) = (g.focus(), g.service());
        let x = g.thread(5, &finite());
        same(
            &used(&Thread::tau(x.clone()), &f, &h)?,
            &Thread::tau(used(&x, &f, &h)?),
        )
    }),
    ("TSU4", |g| {
        let (f, h) = (g.focus(), g.service());
        let Some(other) = g.other_focus(&f) else {
            return skip();
        };
        let a = Action::Basic(BasicAction::new(other, g.method()));
        let (x, y) = (g.thread(5, &finite()), g.thread(5, &finite()));
        same(
            &used(&Thread::pcc(a.clone(), x.clone(), y.clone()), &f, &h)?,
            &Thread::pcc(a, used(&x, &f, &h)?, used(&y, &f, &h)?),
        )
    }),
    ("TSU5", |g| tsu_reply(g, Reply::True)),
    ("TSU6", |g| tsu_reply(g, Reply::False)),
    ("TSU7", |g| {
        let Some((f, h, m)) = service_with(g, |r| r == Reply::Blocked) else {
            return skip();
        };
        let (x, y) = (g.thread(5, &finite()), g.thread(5, &finite()));
        let a = Action::Basic(BasicAction::new(f.clone(), m));
        same(&used(&Thread::pcc(a, x, y), &f, &h)?, &Thread::Deadlock)
    }),
];

fn tsu_reply(g: &mut Gen, want: Reply) -> Verdict {
    let Some((f, h, m)) = service_with(g, |r| r == want) else {
        return skip();
    };
    let (x, y) = (g.thread(5, &finite()), g.thread(5, &finite()));
    let a = Action::Basic(BasicAction::new(f.clone(), m.clone()));
    let taken = if want == Reply::True { &x } else { &y };
    same(
        &used(&Thread::pcc(a, x.clone(), y.clone()), &f, &h)?,
        &Thread::tau(used(taken, &f, &h.derive(&m))?),
    )
}

// Postconditional switching.

fn branches(g: &mut Gen, kinds: &Kinds) -> Vec<Thread> {
    let k = g.rng.gen_range(1..=4);
    (0..k).map(|_| g.thread(4, kinds)).collect()
}

const PCS: [(&str, Law); 6] = [
    ("PCS1", |g| {
        let xs = branches(g, &plain());
        let first = vec![xs[0].clone(); xs.len()];
        same(
            &Thread::Pcs(Action::Tau, xs),
            &Thread::Pcs(Action::Tau, first),
        )
    }),
    ("PCS2", |g| {
        let xs = branches(g, &plain());
        let alpha = g.vector(0, 4, 3, &plain());
        let a = g.action();
        let inner: Result<Vec<Thread>> = xs.iter().map(|x| spt_term(x, &alpha)).collect();
        same(
            &spt_term(&Thread::Pcs(a.clone(), xs), &alpha)?,
            &Thread::Pcs(a, inner?),
        )
    }),
    ("PCS3", |g| {
        let (f, h) = (g.focus(), g.service());
        let xs = branches(g, &finite());
        let inner: Result<Vec<Thread>> = xs.iter().map(|x| used(x, &f, &h)).collect();
        same(
            &used(&Thread::Pcs(Action::Tau, xs), &f, &h)?,
            &Thread::Pcs(Action::Tau, inner?),
        )
    }),
    ("PCS4", |g| {
        let (f, h) = (g.focus(), g.service());
        let Some(other) = g.other_focus(&f) else {
            return skip();
        };
        let a = Action::Basic(BasicAction::new(other, g.method()));
        let xs = branches(g, &finite());
        let inner: Result<Vec<Thread>> = xs.iter().map(|x| used(x, &f, &h)).collect();
        same(
            &used(&Thread::Pcs(a.clone(), xs), &f, &h)?,
            &Thread::Pcs(a, inner?),
        )
    }),
    ("PCS5", |g| {
        let xs = branches(g, &finite());
        let k = xs.len() as u64;
        let (f, m) = (g.focus(), g.method());
        let i = g.rng.gen_range(1..=k);
        let mut replies = vec![Reply::Nat(i)];
        replies.extend((0..g.rng.gen_range(0..=3)).map(|_| g.reply()));
        let h = Service::scripted(replies);
        let a = Action::Basic(BasicAction::new(f.clone(), m.clone()));
        same(
            &used(&Thread::Pcs(a, xs.clone()), &f, &h)?,
            &Thread::tau(used(&xs[i as usize - 1], &f, &h.derive(&m))?),
        )
    }),
    ("PCS6", |g| {
        let xs = branches(g, &finite());
        let k = xs.len() as u64;
        let Some((f, h, m)) =
            service_with(g, |r| !matches!(r, Reply::Nat(i) if (1..=k).contains(&i)))
        else {
            return skip();
        };
        let a = Action::Basic(BasicAction::new(f.clone(), m));
        same(&used(&Thread::Pcs(a, xs), &f, &h)?, &Thread::Deadlock)
    }),
];

// Poly-threading.

fn init(t: Thread) -> Thread {
    Thread::prefix(Action::tls_init(), t)
}

const SPT: [(&str, Law); 7] = [
    ("SPT1", |g| {
        let alpha = g.vector(0, 4, 3, &plain());
        same(&spt_term(&Thread::Stop, &alpha)?, &Thread::Stop)
    }),
    ("SPT2", |g| {
        let alpha = g.vector(0, 4, 3, &plain());
        same(&spt_term(&Thread::Deadlock, &alpha)?, &Thread::Deadlock)
    }),
    ("SPT3", |g| {
        let alpha = g.vector(0, 4, 3, &plain());
        let (x, y, a) = (g.thread(5, &plain()), g.thread(5, &plain()), g.action());
        same(
            &spt_term(&Thread::pcc(a.clone(), x.clone(), y.clone()), &alpha)?,
            &Thread::pcc(a, spt_term(&x, &alpha)?, spt_term(&y, &alpha)?),
        )
    }),
    ("SPT4", |g| {
        let alpha = g.vector(1, 4, 3, &plain());
        let i = g.rng.gen_range(1..=alpha.len());
        same(
            &spt_term(&Thread::Switch(i), &alpha)?,
            &init(spt_term(&alpha[i - 1], &alpha)?),
        )
    }),
    ("SPT5", |g| {
        let alpha = g.vector(0, 4, 3, &plain());
        let i = if g.rng.gen_bool(0.5) {
            0
        } else {
            alpha.len() + g.rng.gen_range(1..=3)
        };
        same(&spt_term(&Thread::Switch(i), &alpha)?, &Thread::Deadlock)
    }),
    ("SPT6", |g| {
        let alpha = g.vector(1, 4, 3, &plain());
        let inits: Result<Vec<Thread>> = alpha
            .iter()
            .map(|x| spt_term(x, &alpha).map(init))
            .collect();
        same(&spt_term(&Thread::Extern, &alpha)?, &Thread::Choice(inits?))
    }),
    ("SPT7", |_| {
        same(&spt_term(&Thread::Extern, &[])?, &Thread::Deadlock)
    }),
];

// Deadlock at termination.

fn with_choice() -> Kinds {
    Kinds {
        choice: true,
        pcs: true,
        ..plain()
    }
}

const S2D: [(&str, Law); 6] = [
    ("S2D1", |_| same(&std(&Thread::Stop), &Thread::Deadlock)),
    ("S2D2", |_| same(&std(&Thread::Deadlock), &Thread::Deadlock)),
    ("S2D3", |g| {
        let (x, y, a) = (
            g.thread(5, &with_choice()),
            g.thread(5, &with_choice()),
            g.action(),
        );
        same(
            &std(&Thread::pcc(a.clone(), x.clone(), y.clone())),
            &Thread::pcc(a, std(&x), std(&y)),
        )
    }),
    ("S2D4", |g| {
        let i = g.rng.gen_range(0..=5);
        same(&std(&Thread::Switch(i)), &Thread::Switch(i))
    }),
    ("S2D5", |_| same(&std(&Thread::Extern), &Thread::Extern)),
    ("S2D6", |g| {
        let xs = branches(g, &with_choice());
        let inner = xs.iter().map(std).collect();
        same(&std(&Thread::Choice(xs)), &Thread::Choice(inner))
    }),
];

// Cyclic interleaving, compared by execution.

struct Setup {
    replies: HashReplies,
    choices: Vec<usize>,
}

impl Setup {
    fn new(g: &mut Gen, n: usize) -> Setup {
        Setup {
            replies: HashReplies::new(g.rng.gen()),
            choices: g.choices(n),
        }
    }

    fn pci(
        &self,
        beta: &[Thread],
        alpha: &[Thread],
        skip_choices: usize,
        max: usize,
    ) -> Result<Trace> {
        pci(
            beta,
            alpha,
            &mut self.replies.clone(),
            &mut Resolver::scripted(self.choices[skip_choices..].iter().copied()),
            max,
        )
    }

    fn located(&self, u: &LocThread) -> Result<Observed> {
        let t = crate::dist::run_located(
            u,
            &mut self.replies.clone(),
            &mut Resolver::scripted(self.choices.iter().copied()),
            TRACE_STEPS,
        )?;
        Ok(observed(&t))
    }
}

fn std_outcome(mut o: Observed) -> Observed {
    if o.1 == Outcome::Terminated {
        o.1 = Outcome::Deadlocked;
    }
    o
}

fn after(
    first: (Option<u64>, Action, Option<Reply>, Option<BasicAction>),
    mut rest: Observed,
) -> Observed {
    rest.0.insert(0, first);
    rest
}

fn local_kinds(alpha_len: usize) -> Kinds {
    Kinds {
        switch: Some(alpha_len + 1),
        external: true,
        rec: true,
        ..Kinds::default()
    }
}

fn local_setup(g: &mut Gen, alpha_lo: usize) -> (Vec<Thread>, Vec<Thread>, Setup) {
    let n = g.rng.gen_range(alpha_lo..=3);
    let kinds = local_kinds(n);
    let alpha: Vec<Thread> = (0..n).map(|_| g.thread(3, &kinds)).collect();
    let beta = g.vector(0, 3, 4, &kinds);
    let setup = Setup::new(g, n);
    (beta, alpha, setup)
}

fn pushed(beta: &[Thread], x: &Thread) -> Vec<Thread> {
    let mut out = beta.to_vec();
    out.push(x.clone());
    out
}

fn headed(x: Thread, beta: &[Thread]) -> Vec<Thread> {
    let mut out = vec![x];
    out.extend_from_slice(beta);
    out
}

fn tls_step(
    s: &Setup,
    l: Option<Loc>,
) -> (Option<u64>, Action, Option<Reply>, Option<BasicAction>) {
    let init = BasicAction::tls_init();
    let r = s.replies.reply(&init, Expect::Bool);
    (l, Action::Basic(init), Some(r), None)
}

const PCI: [(&str, Law); 8] = [
    ("PCI1", |g| {
        let (_, alpha, s) = local_setup(g, 0);
        same_runs(
            observed(&s.pci(&[], &alpha, 0, TRACE_STEPS)?),
            (vec![], Outcome::Terminated),
        )
    }),
    ("PCI2", |g| {
        let (beta, alpha, s) = local_setup(g, 0);
        same_runs(
            observed(&s.pci(&headed(Thread::Stop, &beta), &alpha, 0, TRACE_STEPS)?),
            observed(&s.pci(&beta, &alpha, 0, TRACE_STEPS)?),
        )
    }),
    ("PCI3", |g| {
        let (beta, alpha, s) = local_setup(g, 0);
        same_runs(
            observed(&s.pci(&headed(Thread::Deadlock, &beta), &alpha, 0, TRACE_STEPS)?),
            std_outcome(observed(&s.pci(&beta, &alpha, 0, TRACE_STEPS)?)),
        )
    }),
    ("PCI4", |g| {
        let (beta, alpha, s) = local_setup(g, 0);
        let kinds = local_kinds(alpha.len());
        let (x, y, a) = (g.thread(4, &kinds), g.thread(4, &kinds), g.action());
        let lhs = s.pci(
            &headed(Thread::pcc(a.clone(), x.clone(), y.clone()), &beta),
            &alpha,
            0,
            TRACE_STEPS,
        )?;
        let (first, taken) = match &a {
            Action::Tau => ((None, Action::Tau, None, None), &x),
            Action::Basic(b) => {
                let r = s.replies.reply(b, Expect::Bool);
                (
                    (None, a.clone(), Some(r), None),
                    if r == Reply::True { &x } else { &y },
                )
            }
        };
        let rest = s.pci(&pushed(&beta, taken), &alpha, 0, TRACE_STEPS - 1)?;
        same_runs(observed(&lhs), after(first, observed(&rest)))
    }),
    ("PCI5", |g| {
        let (beta, alpha, s) = local_setup(g, 1);
        let i = g.rng.gen_range(1..=alpha.len());
        let lhs = s.pci(&headed(Thread::Switch(i), &beta), &alpha, 0, TRACE_STEPS)?;
        let rest = s.pci(&pushed(&beta, &alpha[i - 1]), &alpha, 0, TRACE_STEPS - 1)?;
        same_runs(observed(&lhs), after(tls_step(&s, None), observed(&rest)))
    }),
    ("PCI6", |g| {
        let (beta, alpha, s) = local_setup(g, 0);
        let i = if g.rng.gen_bool(0.5) {
            0
        } else {
            alpha.len() + 1
        };
        same_runs(
            observed(&s.pci(&headed(Thread::Switch(i), &beta), &alpha, 0, TRACE_STEPS)?),
            std_outcome(observed(&s.pci(&beta, &alpha, 0, TRACE_STEPS)?)),
        )
    }),
    ("PCI7", |g| {
        let (beta, alpha, s) = local_setup(g, 1);
        let lhs = s.pci(&headed(Thread::Extern, &beta), &alpha, 0, TRACE_STEPS)?;
        let rhs = match s.choices[0] {
            0 => (vec![], Outcome::Deadlocked),
            j => {
                let rest = s.pci(&pushed(&beta, &alpha[j - 1]), &alpha, 1, TRACE_STEPS - 1)?;
                after(tls_step(&s, None), observed(&rest))
            }
        };
        same_runs(observed(&lhs), rhs)
    }),
    ("PCI8", |g| {
        let (beta, _, s) = local_setup(g, 0);
        let beta: Vec<Thread> = beta.iter().map(|t| crate::poly::rho(t, 0)).collect();
        same_runs(
            observed(&s.pci(&headed(Thread::Extern, &beta), &[], 0, TRACE_STEPS)?),
            std_outcome(observed(&s.pci(&beta, &[], 0, TRACE_STEPS)?)),
        )
    }),
];

// Located threads.

fn located_thread(g: &mut Gen, depth: usize, locs: &[Loc], with_switch: bool) -> LocThread {
    if depth == 0 || g.rng.gen_bool(0.3) {
        let top = if with_switch { 4 } else { 2 };
        return match g.rng.gen_range(0..top) {
            0 => LocThread::Stop,
            1 => LocThread::Deadlock,
            2 => LocThread::Switch(g.rng.gen_range(0..=3)),
            _ => LocThread::Extern,
        };
    }
    let l = *locs.choose(&mut g.rng).unwrap();
    if g.rng.gen_bool(0.15) {
        // Three branches, matching the choices drawn for these cases.
        return LocThread::Choice(
            (0..3)
                .map(|_| located_thread(g, depth - 1, locs, with_switch))
                .collect(),
        );
    }
    let a = g.action();
    let x = located_thread(g, depth - 1, locs, with_switch);
    let y = located_thread(g, depth - 1, locs, with_switch);
    LocThread::pcc(l, a, x, y)
}

fn same_located(lhs: &LocThread, rhs: &LocThread) -> Verdict {
    if lhs == rhs {
        Ok(Some(None))
    } else {
        Ok(Some(Some(format!("{lhs:?} vs {rhs:?}"))))
    }
}

const LTHR: [(&str, Law); 7] = [
    ("LT1", |g| {
        let locs = g.locations();
        let l = *locs.choose(&mut g.rng).unwrap();
        let u = located_thread(g, 5, &locs, false);
        let v = located_thread(g, 5, &locs, false);
        let s = Setup::new(g, 3);
        same_runs(
            s.located(&LocThread::pcc(l, Action::Tau, u.clone(), v))?,
            s.located(&LocThread::pcc(l, Action::Tau, u.clone(), u))?,
        )
    }),
    ("LS2D1", |_| {
        same_located(&std_located(&LocThread::Stop), &LocThread::Deadlock)
    }),
    ("LS2D2", |_| {
        same_located(&std_located(&LocThread::Deadlock), &LocThread::Deadlock)
    }),
    ("LS2D3", |g| {
        let locs = g.locations();
        let l = *locs.choose(&mut g.rng).unwrap();
        let a = g.action();
        let u = located_thread(g, 5, &locs, true);
        let v = located_thread(g, 5, &locs, true);
        same_located(
            &std_located(&LocThread::pcc(l, a.clone(), u.clone(), v.clone())),
            &LocThread::pcc(l, a, std_located(&u), std_located(&v)),
        )
    }),
    ("LS2D4", |g| {
        let i = g.rng.gen_range(0..=5);
        same_located(&std_located(&LocThread::Switch(i)), &LocThread::Switch(i))
    }),
    ("LS2D5", |_| {
        same_located(&std_located(&LocThread::Extern), &LocThread::Extern)
    }),
    ("LS2D6", |g| {
        let locs = g.locations();
        let k = g.rng.gen_range(1..=4);
        let us: Vec<LocThread> = (0..k).map(|_| located_thread(g, 4, &locs, true)).collect();
        same_located(
            &std_located(&LocThread::Choice(us.clone())),
            &LocThread::Choice(us.iter().map(std_located).collect()),
        )
    }),
];

// Distributed interleaving, compared by executing both sides as located
// threads.

struct DistCase {
    locs: LocSet,
    /// Locations used for entries and migration targets, including one
    /// outside `locs` now and then.
    alpha: Vec<Thread>,
    kinds: Kinds,
    setup: Setup,
}

fn dist_case(g: &mut Gen, alpha_lo: usize, alpha_hi: usize) -> DistCase {
    let locs: LocSet = g.locations().into_iter().collect();
    let n = g.rng.gen_range(alpha_lo..=alpha_hi);
    let mut targets: Vec<Loc> = locs.iter().copied().collect();
    targets.push(9);
    let kinds = Kinds {
        switch: Some(n + 1),
        external: true,
        mig: targets,
        rec: true,
        ..Kinds::default()
    };
    let alpha = (0..n).map(|_| g.thread(3, &kinds)).collect();
    let setup = Setup::new(g, n);
    DistCase {
        locs,
        alpha,
        kinds,
        setup,
    }
}

impl DistCase {
    fn location(&self, g: &mut Gen) -> Loc {
        **self
            .locs
            .iter()
            .collect::<Vec<_>>()
            .choose(&mut g.rng)
            .unwrap()
    }

    /// Entries at random locations of `locs`.
    fn delta(&self, g: &mut Gen, lo: usize) -> Vec<DistEntry> {
        let n = g.rng.gen_range(lo..=3);
        (0..n)
            .map(|_| {
                let l = self.location(g);
                DistEntry::new(l, g.vector(0, 3, 3, &self.kinds))
            })
            .collect()
    }

    fn pci(&self, delta: Vec<DistEntry>) -> LocThread {
        LocThread::Pci {
            delta,
            alpha: self.alpha.clone(),
            locs: self.locs.clone(),
        }
    }

    fn fs_delta(&self, g: &mut Gen, lo: usize) -> Vec<FsEntry> {
        let n = self.alpha.len();
        self.delta(g, lo)
            .into_iter()
            .map(|e| FsEntry::new(e.location, e.threads, g.frag_set(n)))
            .collect()
    }

    fn pci_fs(&self, delta: Vec<FsEntry>) -> LocThread {
        LocThread::PciFs {
            delta,
            alpha: self.alpha.clone(),
            locs: self.locs.clone(),
        }
    }

    fn compare(&self, lhs: &LocThread, rhs: &LocThread) -> Verdict {
        same_runs(self.setup.located(lhs)?, self.setup.located(rhs)?)
    }
}

fn cat(delta: &[DistEntry], tail: DistEntry) -> Vec<DistEntry> {
    let mut out = delta.to_vec();
    out.push(tail);
    out
}

fn cons(head: DistEntry, delta: &[DistEntry]) -> Vec<DistEntry> {
    let mut out = vec![head];
    out.extend_from_slice(delta);
    out
}

/// The head entry `[x ^ gamma]_l` of a left-hand side, with the parts of
/// the right-hand side.
struct Head {
    l: Loc,
    gamma: Vec<Thread>,
    delta: Vec<DistEntry>,
}

fn dist_head(c: &DistCase, g: &mut Gen) -> Head {
    Head {
        l: c.location(g),
        gamma: g.vector(0, 2, 3, &c.kinds),
        delta: c.delta(g, 0),
    }
}

impl Head {
    fn lhs(&self, x: Thread) -> Vec<DistEntry> {
        cons(DistEntry::new(self.l, headed(x, &self.gamma)), &self.delta)
    }

    /// `delta ^ [gamma ^ <x>]_l`, or `delta ^ [gamma]_l` without `x`.
    fn rotated(&self, x: Option<&Thread>) -> Vec<DistEntry> {
        let gamma = match x {
            Some(x) => pushed(&self.gamma, x),
            None => self.gamma.clone(),
        };
        cat(&self.delta, DistEntry::new(self.l, gamma))
    }
}

fn tls_prefix(l: Loc, u: LocThread) -> LocThread {
    LocThread::prefix(l, Action::tls_init(), u)
}

fn std_of(u: LocThread) -> LocThread {
    LocThread::Std(Box::new(u))
}

const PCDI: [(&str, Law); 12] = [
    ("PCDI1", |g| {
        let c = dist_case(g, 0, 3);
        c.compare(&c.pci(vec![]), &LocThread::Stop)
    }),
    ("PCDI2", |g| {
        let c = dist_case(g, 0, 3);
        let k = g.rng.gen_range(1..=3);
        let delta = (0..k)
            .map(|_| DistEntry::new(c.location(g), vec![]))
            .collect();
        c.compare(&c.pci(delta), &LocThread::Stop)
    }),
    ("PCDI3", |g| {
        let c = dist_case(g, 0, 3);
        let (l, delta) = (c.location(g), c.delta(g, 0));
        c.compare(
            &c.pci(cons(DistEntry::new(l, vec![]), &delta)),
            &c.pci(cat(&delta, DistEntry::new(l, vec![]))),
        )
    }),
    ("PCDI4", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        c.compare(&c.pci(h.lhs(Thread::Stop)), &c.pci(h.rotated(None)))
    }),
    ("PCDI5", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        c.compare(
            &c.pci(h.lhs(Thread::Deadlock)),
            &std_of(c.pci(h.rotated(None))),
        )
    }),
    ("PCDI6", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        let (x, y, a) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds), g.action());
        c.compare(
            &c.pci(h.lhs(Thread::pcc(a.clone(), x.clone(), y.clone()))),
            &LocThread::pcc(
                h.l,
                a,
                c.pci(h.rotated(Some(&x))),
                c.pci(h.rotated(Some(&y))),
            ),
        )
    }),
    ("PCDI7", |g| {
        let c = dist_case(g, 1, 3);
        let h = dist_head(&c, g);
        let i = g.rng.gen_range(1..=c.alpha.len());
        c.compare(
            &c.pci(h.lhs(Thread::Switch(i))),
            &tls_prefix(h.l, c.pci(h.rotated(Some(&c.alpha[i - 1])))),
        )
    }),
    ("PCDI8", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        let i = if g.rng.gen_bool(0.5) {
            0
        } else {
            c.alpha.len() + 1
        };
        c.compare(
            &c.pci(h.lhs(Thread::Switch(i))),
            &std_of(c.pci(h.rotated(None))),
        )
    }),
    ("PCDI9", |g| {
        let c = dist_case(g, 1, 3);
        let h = dist_head(&c, g);
        let options = c
            .alpha
            .iter()
            .map(|x| tls_prefix(h.l, c.pci(h.rotated(Some(x)))))
            .collect();
        c.compare(&c.pci(h.lhs(Thread::Extern)), &LocThread::Choice(options))
    }),
    ("PCDI10", |g| {
        let c = dist_case(g, 0, 0);
        let h = dist_head(&c, g);
        c.compare(
            &c.pci(h.lhs(Thread::Extern)),
            &std_of(c.pci(h.rotated(None))),
        )
    }),
    ("PCDI11", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        let n = c.location(g);
        let (x, y) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds));
        c.compare(
            &c.pci(h.lhs(Thread::mig(n, x.clone(), y))),
            &LocThread::prefix(h.l, Action::Tau, c.pci(app(n, x, &h.rotated(None)))),
        )
    }),
    ("PCDI12", |g| {
        let c = dist_case(g, 0, 3);
        let h = dist_head(&c, g);
        let n = 9;
        let (x, y) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds));
        c.compare(
            &c.pci(h.lhs(Thread::mig(n, x, y.clone()))),
            &LocThread::prefix(h.l, Action::Tau, c.pci(h.rotated(Some(&y)))),
        )
    }),
];

/// The head entry `[x ^ gamma]_l^I` of a fragment-searching left-hand
/// side.
struct FsHead {
    l: Loc,
    set: FragSet,
    gamma: Vec<Thread>,
    delta: Vec<FsEntry>,
}

fn fs_head(c: &DistCase, g: &mut Gen) -> FsHead {
    FsHead {
        l: c.location(g),
        set: g.frag_set(c.alpha.len()),
        gamma: g.vector(0, 2, 3, &c.kinds),
        delta: c.fs_delta(g, 0),
    }
}

impl FsHead {
    fn entry(&self, threads: Vec<Thread>) -> FsEntry {
        FsEntry::new(self.l, threads, self.set.clone())
    }

    /// `[x ^ gamma]_l^I ^ delta`.
    fn with_head(&self, x: Thread) -> Vec<FsEntry> {
        let mut out = vec![self.entry(headed(x, &self.gamma))];
        out.extend(self.delta.iter().cloned());
        out
    }

    /// `delta ^ [gamma]_l^I`.
    fn rotated(&self) -> Vec<FsEntry> {
        let mut out = self.delta.clone();
        out.push(self.entry(self.gamma.clone()));
        out
    }
}

const PCDIFS: [(&str, Law); 12] = [
    ("PCDIfs1", |g| {
        let c = dist_case(g, 0, 3);
        c.compare(&c.pci_fs(vec![]), &LocThread::Stop)
    }),
    ("PCDIfs2", |g| {
        let c = dist_case(g, 0, 3);
        let k = g.rng.gen_range(1..=3);
        let delta = (0..k)
            .map(|_| FsEntry::new(c.location(g), vec![], g.frag_set(c.alpha.len())))
            .collect();
        c.compare(&c.pci_fs(delta), &LocThread::Stop)
    }),
    ("PCDIfs3", |g| {
        let c = dist_case(g, 0, 3);
        let head = FsEntry::new(c.location(g), vec![], g.frag_set(c.alpha.len()));
        let delta = c.fs_delta(g, 0);
        let mut lhs = vec![head.clone()];
        lhs.extend(delta.iter().cloned());
        let mut rhs = delta;
        rhs.push(head);
        c.compare(&c.pci_fs(lhs), &c.pci_fs(rhs))
    }),
    ("PCDIfs4", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        c.compare(&c.pci_fs(h.with_head(Thread::Stop)), &c.pci_fs(h.rotated()))
    }),
    ("PCDIfs5", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        c.compare(
            &c.pci_fs(h.with_head(Thread::Deadlock)),
            &std_of(c.pci_fs(h.rotated())),
        )
    }),
    ("PCDIfs6", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        let (x, y, a) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds), g.action());
        c.compare(
            &c.pci_fs(h.with_head(Thread::pcc(a.clone(), x.clone(), y.clone()))),
            &LocThread::pcc(
                h.l,
                a,
                c.pci_fs(pv(&h.with_head(x))),
                c.pci_fs(pv(&h.with_head(y))),
            ),
        )
    }),
    ("PCDIfs7", |g| {
        let c = dist_case(g, 1, 3);
        let h = fs_head(&c, g);
        let Some(&i) = h
            .set
            .iter()
            .filter(|i| **i <= c.alpha.len())
            .collect::<Vec<_>>()
            .choose(&mut g.rng)
        else {
            return skip();
        };
        c.compare(
            &c.pci_fs(h.with_head(Thread::Switch(*i))),
            &tls_prefix(h.l, c.pci_fs(pv(&h.with_head(c.alpha[i - 1].clone())))),
        )
    }),
    ("PCDIfs8", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        let n = c.alpha.len();
        let missing: Vec<usize> = (0..=n + 1)
            .filter(|i| !(h.set.contains(i) && (1..=n).contains(i)))
            .collect();
        let i = *missing.choose(&mut g.rng).unwrap();
        c.compare(
            &c.pci_fs(h.with_head(Thread::Switch(i))),
            &std_of(c.pci_fs(h.rotated())),
        )
    }),
    ("PCDIfs9", |g| {
        let c = dist_case(g, 1, 3);
        let h = fs_head(&c, g);
        let options = c
            .alpha
            .iter()
            .map(|x| tls_prefix(h.l, c.pci_fs(pv(&h.with_head(x.clone())))))
            .collect();
        c.compare(
            &c.pci_fs(h.with_head(Thread::Extern)),
            &LocThread::Choice(options),
        )
    }),
    ("PCDIfs10", |g| {
        let c = dist_case(g, 0, 0);
        let h = fs_head(&c, g);
        c.compare(
            &c.pci_fs(h.with_head(Thread::Extern)),
            &std_of(c.pci_fs(h.rotated())),
        )
    }),
    ("PCDIfs11", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        let n = c.location(g);
        let (x, y) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds));
        c.compare(
            &c.pci_fs(h.with_head(Thread::mig(n, x.clone(), y))),
            &LocThread::prefix(h.l, Action::Tau, c.pci_fs(appfs(n, x, &h.rotated()))),
        )
    }),
    ("PCDIfs12", |g| {
        let c = dist_case(g, 0, 3);
        let h = fs_head(&c, g);
        let (x, y) = (g.thread(3, &c.kinds), g.thread(3, &c.kinds));
        c.compare(
            &c.pci_fs(h.with_head(Thread::mig(9, x, y.clone()))),
            &LocThread::prefix(h.l, Action::Tau, c.pci_fs(pv(&h.with_head(y)))),
        )
    }),
];

/// Every axiom label, in suite order.
pub fn axiom_names() -> Vec<&'static str> {
    let mut out = vec!["T1", "RDP"];
    for table in [&TSU[..], &PCS, &SPT, &S2D, &PCI, &LTHR, &PCDI, &PCDIFS] {
        out.extend(table.iter().map(|(n, _)| *n));
    }
    out
}

/// The distinct labels of `names`, for reporting.
pub fn distinct(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_briefly() {
        for suite in SUITES {
            let report = run_suite(suite, 10, 1).unwrap();
            assert!(report.ok(), "{report}");
        }
        assert!(run_suite("nope", 1, 1).is_err());
    }

    #[test]
    fn names_are_unique() {
        let names = axiom_names();
        assert_eq!(distinct(&names).len(), names.len());
        assert_eq!(names.len(), 2 + 7 + 6 + 7 + 6 + 8 + 7 + 12 + 12);
    }

    #[test]
    fn hash_replies_are_stable() {
        let a: BasicAction = "f.m".parse().unwrap();
        let r = HashReplies::new(3);
        assert_eq!(r.reply(&a, Expect::Bool), r.reply(&a, Expect::Bool));
        assert!(matches!(r.reply(&a, Expect::Index(3)), Reply::Nat(1..=3)));
    }
}

//! Small-step execution: traces, reply sources and external-choice resolvers.

use std::collections::VecDeque;
use std::fmt;
use std::io::BufRead;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::service::{Reply, Service, ServiceMap};
use crate::term::{Action, BasicAction, Thread};

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Terminated,
    Deadlocked,
    /// The step budget ran out first.
    Cut,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Terminated => "terminated",
            Outcome::Deadlocked => "deadlocked",
            Outcome::Cut => "cut",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One performed action.
///
/// An action processed by an attached service shows up as `tau` with the
/// original action kept in `request`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub n: usize,
    pub location: Option<u64>,
    pub thread: Option<usize>,
    pub action: Action,
    pub reply: Option<Reply>,
    pub request: Option<BasicAction>,
}

impl Step {
    pub(crate) fn new(action: Action, reply: Option<Reply>, request: Option<BasicAction>) -> Step {
        Step {
            n: 0,
            location: None,
            thread: None,
            action,
            reply,
            request,
        }
    }

    /// `(location, action, reply)`: what two runs must agree on to count as
    /// the same behaviour, ignoring bookkeeping such as thread tags.
    pub fn observable(&self) -> (Option<u64>, Action, Option<Reply>, Option<BasicAction>) {
        (
            self.location,
            self.action.clone(),
            self.reply,
            self.request.clone(),
        )
    }

    pub fn is_tau(&self) -> bool {
        self.action == Action::Tau
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("n".into(), json!(self.n));
        if let Some(l) = self.location {
            m.insert("location".into(), json!(l));
        }
        if let Some(t) = self.thread {
            m.insert("thread".into(), json!(t));
        }
        m.insert("action".into(), json!(self.action.to_string()));
        if let Some(r) = self.reply {
            m.insert("reply".into(), r.to_json());
        }
        if let Some(req) = &self.request {
            m.insert("request".into(), json!(req.to_string()));
        }
        Value::Object(m)
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>4}  ", self.n)?;
        if let Some(l) = self.location {
            write!(f, "{l}.")?;
        }
        write!(f, "{}", self.action)?;
        if let Some(req) = &self.request {
            write!(f, " [{req}]")?;
        }
        if let Some(r) = self.reply {
            write!(f, " -> {r}")?;
        }
        if let Some(t) = self.thread {
            write!(f, "  (thread {t})")?;
        }
        Ok(())
    }
}

/// A finished run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    /// External choices made along the way.
    pub choices: Vec<usize>,
}

impl Trace {
    pub(crate) fn new() -> Trace {
        Trace {
            steps: Vec::new(),
            outcome: Outcome::Cut,
            choices: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, mut step: Step) {
        step.n = self.steps.len() + 1;
        self.steps.push(step);
    }

    /// The observable content of every step, in order.
    pub fn observable(&self) -> Vec<(Option<u64>, Action, Option<Reply>, Option<BasicAction>)> {
        self.steps.iter().map(Step::observable).collect()
    }

    /// Steps other than `tau`.
    pub fn visible(&self) -> Vec<&Step> {
        self.steps.iter().filter(|s| !s.is_tau()).collect()
    }

    /// Same observable steps and outcome.
    pub fn same_behaviour(&self, other: &Trace) -> bool {
        self.outcome == other.outcome && self.observable() == other.observable()
    }

    pub fn to_json(&self) -> Value {
        let tau = self.steps.iter().filter(|s| s.is_tau()).count();
        json!({
            "steps": self.steps.iter().map(Step::to_json).collect::<Vec<_>>(),
            "outcome": self.outcome.as_str(),
            "stats": {
                "steps": self.steps.len(),
                "tau": tau,
                "visible": self.steps.len() - tau,
                "choices": self.choices,
            },
        })
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        write!(f, "{}", self.outcome)
    }
}

/// The kind of reply a composition waits for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    /// Postconditional composition: true or false.
    Bool,
    /// Postconditional switch with this many branches.
    Index(usize),
}

/// Where a reply came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    /// Supplied from outside; the action stays visible.
    External(Reply),
    /// Produced by an attached service; the action becomes `tau`.
    Processed(Reply),
}

/// Supplies replies to basic actions during execution.
pub trait ReplySource {
    fn respond(&mut self, action: &BasicAction, expect: Expect) -> Result<Response>;
}

/// Replays a fixed list of replies; afterwards uses `default` or fails.
#[derive(Debug, Clone, Default)]
pub struct ReplyScript {
    replies: VecDeque<Reply>,
    default: Option<Reply>,
}

impl ReplyScript {
    pub fn new(replies: impl IntoIterator<Item = Reply>) -> Self {
        ReplyScript {
            replies: replies.into_iter().collect(),
            default: None,
        }
    }

    /// Every action gets `reply`.
    pub fn always(reply: Reply) -> Self {
        ReplyScript {
            replies: VecDeque::new(),
            default: Some(reply),
        }
    }

    pub fn with_default(mut self, reply: Reply) -> Self {
        self.default = Some(reply);
        self
    }

    /// Comma-separated replies, e.g. `T,F,2`.
    pub fn parse(s: &str) -> Result<Self> {
        let replies = s
            .split(',')
            .map(str::trim)
            .filter(|r| !r.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Reply>>>()
            .map_err(|e| Error::Config(format!("reply script: {e}")))?;
        Ok(ReplyScript::new(replies))
    }
}

impl ReplySource for ReplyScript {
    fn respond(&mut self, action: &BasicAction, _: Expect) -> Result<Response> {
        match self.replies.pop_front().or(self.default) {
            Some(r) => Ok(Response::External(r)),
            None => Err(Error::ScriptExhausted(action.clone())),
        }
    }
}

/// Random well-typed replies from a seeded generator.
#[derive(Debug, Clone)]
pub struct RandomReplies(ChaCha8Rng);

impl RandomReplies {
    pub fn new(seed: u64) -> Self {
        RandomReplies(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl ReplySource for RandomReplies {
    fn respond(&mut self, _: &BasicAction, expect: Expect) -> Result<Response> {
        let reply = match expect {
            Expect::Bool => {
                if self.0.gen_bool(0.5) {
                    Reply::True
                } else {
                    Reply::False
                }
            }
            Expect::Index(k) => Reply::Nat(self.0.gen_range(1..=k as u64)),
        };
        Ok(Response::External(reply))
    }
}

/// Attached services, one per focus; other foci go to `fallback`.
pub struct Environment {
    pub services: ServiceMap,
    pub fallback: Option<Box<dyn ReplySource>>,
}

impl Environment {
    pub fn new(services: ServiceMap) -> Self {
        Environment {
            services,
            fallback: None,
        }
    }

    pub fn with_fallback(mut self, fallback: Box<dyn ReplySource>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn service(&self, focus: &crate::term::Focus) -> Option<&Service> {
        self.services.get(focus)
    }
}

impl ReplySource for Environment {
    fn respond(&mut self, action: &BasicAction, expect: Expect) -> Result<Response> {
        if let Some(service) = self.services.get_mut(&action.focus) {
            let (reply, next) = service.step(&action.method);
            *service = next;
            return Ok(Response::Processed(reply));
        }
        match &mut self.fallback {
            Some(source) => source.respond(action, expect),
            None => Err(Error::UnservedFocus(action.focus.to_string())),
        }
    }
}

impl<R: ReplySource + ?Sized> ReplySource for &mut R {
    fn respond(&mut self, action: &BasicAction, expect: Expect) -> Result<Response> {
        (**self).respond(action, expect)
    }
}

impl<R: ReplySource + ?Sized> ReplySource for Box<R> {
    fn respond(&mut self, action: &BasicAction, expect: Expect) -> Result<Response> {
        (**self).respond(action, expect)
    }
}

/// Resolves external choices: `j` in `[1, k]` selects an alternative, `0`
/// selects deadlock.
pub enum Resolver {
    Scripted {
        choices: Vec<usize>,
        cursor: usize,
    },
    Seeded {
        rng: ChaCha8Rng,
        include_deadlock: bool,
    },
    Interactive(Box<dyn BufRead + Send>),
}

impl fmt::Debug for Resolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolver::Scripted { choices, cursor } => f
                .debug_struct("Scripted")
                .field("choices", choices)
                .field("cursor", cursor)
                .finish(),
            Resolver::Seeded {
                include_deadlock, ..
            } => f
                .debug_struct("Seeded")
                .field("include_deadlock", include_deadlock)
                .finish(),
            Resolver::Interactive(_) => f.write_str("Interactive"),
        }
    }
}

impl Resolver {
    pub fn scripted(choices: impl IntoIterator<Item = usize>) -> Self {
        Resolver::Scripted {
            choices: choices.into_iter().collect(),
            cursor: 0,
        }
    }

    /// Uniform over `[1, k]`.
    pub fn seeded(seed: u64) -> Self {
        Resolver::Seeded {
            rng: ChaCha8Rng::seed_from_u64(seed),
            include_deadlock: false,
        }
    }

    /// Uniform over `[0, k]`, deadlock included.
    pub fn seeded_with_deadlock(seed: u64) -> Self {
        Resolver::Seeded {
            rng: ChaCha8Rng::seed_from_u64(seed),
            include_deadlock: true,
        }
    }

    /// Reads one integer per choice from standard input.
    pub fn interactive() -> Self {
        Resolver::Interactive(Box::new(std::io::BufReader::new(std::io::stdin())))
    }

    /// `script:1,0,2`, `seed:42` or `interactive`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("resolver `{s}`: {msg}"));
        if s == "interactive" {
            return Ok(Resolver::interactive());
        }
        if let Some(list) = s.strip_prefix("script:") {
            let choices = list
                .split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(|c| {
                    c.parse::<usize>()
                        .map_err(|_| bad("choices are natural numbers"))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Resolver::scripted(choices));
        }
        if let Some(seed) = s.strip_prefix("seed:") {
            return seed
                .trim()
                .parse()
                .map(Resolver::seeded)
                .map_err(|_| bad("seed must be a natural number"));
        }
        Err(bad("expected script:..., seed:N or interactive"))
    }

    /// A choice among `k >= 1` alternatives.
    pub fn choose(&mut self, k: usize) -> Result<usize> {
        let choice = match self {
            Resolver::Scripted { choices, cursor } => {
                let c = *choices.get(*cursor).ok_or(Error::UnresolvedChoice)?;
                *cursor += 1;
                c
            }
            Resolver::Seeded {
                rng,
                include_deadlock,
            } => {
                let low = if *include_deadlock { 0 } else { 1 };
                rng.gen_range(low..=k)
            }
            Resolver::Interactive(input) => {
                eprint!("external choice [0-{k}]: ");
                let mut line = String::new();
                let read = input
                    .read_line(&mut line)
                    .map_err(|e| Error::Input(e.to_string()))?;
                if read == 0 {
                    return Err(Error::UnresolvedChoice);
                }
                line.trim().parse().map_err(|_| {
                    Error::Input(format!("expected an integer, got `{}`", line.trim()))
                })?
            }
        };
        if choice > k {
            return Err(Error::InvalidChoice { choice, arity: k });
        }
        Ok(choice)
    }
}

/// Result of giving the head of a thread its turn.
pub(crate) enum Performed {
    /// The branch taken (0-based) and the step to record.
    Branch(usize, Step),
    /// Blocked or ill-typed reply: the thread becomes `D`.
    Blocked,
}

/// Performs the action of a `Pcc`/`Pcs` node.
pub(crate) fn perform(head: &Thread, replies: &mut dyn ReplySource) -> Result<Performed> {
    let (action, expect) = match head {
        Thread::Pcc(a, _, _) => (a, Expect::Bool),
        Thread::Pcs(a, xs) => (a, Expect::Index(xs.len())),
        _ => unreachable!("perform on a node without an action"),
    };
    let basic = match action {
        Action::Tau => return Ok(Performed::Branch(0, Step::new(Action::Tau, None, None))),
        Action::Basic(b) => b,
    };
    let response = replies.respond(basic, expect)?;
    let reply = match response {
        Response::External(r) | Response::Processed(r) => r,
    };
    let branch = match (expect, reply) {
        (Expect::Bool, Reply::True) => 0,
        (Expect::Bool, Reply::False) => 1,
        (Expect::Index(k), Reply::Nat(i)) if i >= 1 && i as usize <= k => i as usize - 1,
        _ => return Ok(Performed::Blocked),
    };
    let step = match response {
        Response::External(_) => Step::new(action.clone(), Some(reply), None),
        Response::Processed(_) => Step::new(Action::Tau, Some(reply), Some(basic.clone())),
    };
    Ok(Performed::Branch(branch, step))
}

/// Runs a single thread on its own. Switch-overs are an error here.
pub fn run_thread(
    t: &Thread,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    run_sequential(t, None, replies, resolver, max_steps)
}

/// The shared sequential machine behind [`run_thread`] and poly-threading:
/// with `alpha` present, switch-overs start up fragments of `alpha`.
pub(crate) fn run_sequential(
    t: &Thread,
    alpha: Option<&[Thread]>,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut trace = Trace::new();
    let mut current = t.clone();
    loop {
        let head = current.head().into_owned();
        let next = match &head {
            Thread::Stop => {
                trace.outcome = Outcome::Terminated;
                return Ok(trace);
            }
            Thread::Deadlock => {
                trace.outcome = Outcome::Deadlocked;
                return Ok(trace);
            }
            Thread::Pcc(..) | Thread::Pcs(..) => {
                if trace.steps.len() >= max_steps {
                    trace.outcome = Outcome::Cut;
                    return Ok(trace);
                }
                match perform(&head, replies)? {
                    Performed::Branch(i, step) => {
                        trace.push(step);
                        head.children()[i].clone()
                    }
                    Performed::Blocked => Thread::Deadlock,
                }
            }
            Thread::Switch(i) => {
                let alpha = alpha.ok_or(Error::SwitchOutsideContext)?;
                match alpha.get(i.wrapping_sub(1)) {
                    Some(x) => Thread::prefix(Action::tls_init(), x.clone()),
                    None => Thread::Deadlock,
                }
            }
            Thread::Extern => {
                let alpha = alpha.ok_or(Error::SwitchOutsideContext)?;
                if alpha.is_empty() {
                    Thread::Deadlock
                } else {
                    let j = resolver.choose(alpha.len())?;
                    trace.choices.push(j);
                    match j {
                        0 => Thread::Deadlock,
                        j => Thread::prefix(Action::tls_init(), alpha[j - 1].clone()),
                    }
                }
            }
            Thread::Choice(xs) => {
                let j = resolver.choose(xs.len())?;
                trace.choices.push(j);
                match j {
                    0 => Thread::Deadlock,
                    j => xs[j - 1].clone(),
                }
            }
            Thread::Mig(..) => return Err(Error::MigrationOutsideDistribution),
            Thread::Var(v) => return Err(Error::UnboundVariable(v.clone())),
            Thread::Rec(_) => unreachable!("head is unfolded"),
        };
        current = next;
    }
}

//! Thread terms.
//!
//! A [`Thread`] is a behaviour built from termination `S`, deadlock `D`,
//! postconditional composition over an [`Action`], the k-ary postconditional
//! switch, the switch-over constants used by poly-threading, external choice,
//! migration, and constants for solutions of guarded recursive
//! specifications ([`RecRef`]).
//!
//! Recursion is carried inside the term: a [`RecRef`] names one variable of
//! an [`RecSpec`], and the bodies of that specification refer to its own
//! variables through [`Thread::Var`] leaves. Unfolding is plain substitution.

use std::borrow::Cow;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Depth used by [`Thread::equivalent`] callers that have no better bound.
pub const DEFAULT_DEPTH: usize = 64;

/// Largest number of states explored before falling back to projections.
pub const DEFAULT_STATE_LIMIT: usize = 10_000;

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// Recursion variables: `[A-Za-z_][A-Za-z0-9_]*`, other than `S` and `D`.
pub fn is_var_name(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    s != "S" && s != "D" && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

macro_rules! ident_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(s: &str) -> Result<Self> {
                if is_ident(s) {
                    Ok($name(Arc::from(s)))
                } else {
                    Err(Error::InvalidIdentifier(s.to_string()))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                $name::new(s)
            }
        }
    };
}

ident_newtype!(
    /// Name of a service channel.
    Focus
);
ident_newtype!(
    /// A command proper, sent to the service at some focus.
    Method
);

impl Focus {
    /// Focus of the service initialised whenever a fragment starts up.
    pub fn tls() -> Focus {
        Focus(Arc::from("tls"))
    }

    /// Focus under which the external environment answers selections.
    pub fn ext() -> Focus {
        Focus(Arc::from("ext"))
    }
}

impl Method {
    pub fn init() -> Method {
        Method(Arc::from("init"))
    }

    pub fn sel() -> Method {
        Method(Arc::from("sel"))
    }
}

/// A basic action `f.m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasicAction {
    pub focus: Focus,
    pub method: Method,
}

impl BasicAction {
    pub fn new(focus: Focus, method: Method) -> Self {
        BasicAction { focus, method }
    }

    /// `tls.init`, performed between a switch-over and the start-up of the
    /// selected fragment.
    pub fn tls_init() -> Self {
        BasicAction::new(Focus::tls(), Method::init())
    }
}

impl fmt::Display for BasicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.focus, self.method)
    }
}

impl fmt::Debug for BasicAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for BasicAction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (focus, method) = s
            .split_once('.')
            .ok_or_else(|| Error::InvalidIdentifier(s.to_string()))?;
        Ok(BasicAction::new(focus.parse()?, method.parse()?))
    }
}

/// Either the internal action `tau` or a basic action.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    Basic(BasicAction),
}

impl Action {
    pub fn basic(focus: Focus, method: Method) -> Self {
        Action::Basic(BasicAction::new(focus, method))
    }

    pub fn tls_init() -> Self {
        Action::Basic(BasicAction::tls_init())
    }

    pub fn as_basic(&self) -> Option<&BasicAction> {
        match self {
            Action::Tau => None,
            Action::Basic(b) => Some(b),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::Basic(b) => fmt::Display::fmt(b, f),
        }
    }
}

impl fmt::Debug for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Action {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "tau" {
            Ok(Action::Tau)
        } else {
            s.parse().map(Action::Basic)
        }
    }
}

/// A thread term.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Thread {
    /// Termination.
    Stop,
    /// Deadlock.
    Deadlock,
    /// Postconditional composition: the first branch on reply true.
    Pcc(Action, Box<Thread>, Box<Thread>),
    /// Postconditional switch: branch `i` (1-based) on reply `i`.
    Pcs(Action, Vec<Thread>),
    /// Internally controlled switch-over to fragment `i`.
    Switch(usize),
    /// Externally controlled switch-over.
    Extern,
    /// External choice between the branches and deadlock.
    Choice(Vec<Thread>),
    /// Migration postconditional composition towards location `n`.
    Mig(u64, Box<Thread>, Box<Thread>),
    /// The solution of a guarded recursive specification for one variable.
    Rec(RecRef),
    /// A recursion variable; only meaningful inside [`RecSpec`] bodies.
    Var(String),
}

impl Thread {
    pub fn pcc(action: Action, pos: Thread, neg: Thread) -> Thread {
        Thread::Pcc(action, Box::new(pos), Box::new(neg))
    }

    /// Action prefix `a o x`, i.e. `x <| a |> x`.
    pub fn prefix(action: Action, then: Thread) -> Thread {
        Thread::Pcc(action, Box::new(then.clone()), Box::new(then))
    }

    pub fn tau(then: Thread) -> Thread {
        Thread::prefix(Action::Tau, then)
    }

    /// Panics if `branches` is empty.
    pub fn pcs(action: Action, branches: Vec<Thread>) -> Thread {
        assert!(!branches.is_empty(), "postconditional switch needs k >= 1");
        Thread::Pcs(action, branches)
    }

    /// Panics if `branches` is empty.
    pub fn choice(branches: Vec<Thread>) -> Thread {
        assert!(!branches.is_empty(), "external choice needs k >= 1");
        Thread::Choice(branches)
    }

    pub fn mig(n: u64, pos: Thread, neg: Thread) -> Thread {
        Thread::Mig(n, Box::new(pos), Box::new(neg))
    }

    pub fn rec(name: &str, spec: Arc<RecSpec>) -> Result<Thread> {
        RecRef::new(name, spec).map(Thread::Rec)
    }

    /// Direct subterms, in branch order. Recursion constants have none.
    pub fn children(&self) -> Vec<&Thread> {
        match self {
            Thread::Pcc(_, x, y) | Thread::Mig(_, x, y) => vec![x, y],
            Thread::Pcs(_, xs) | Thread::Choice(xs) => xs.iter().collect(),
            _ => Vec::new(),
        }
    }

    /// One RDP step: a recursion constant is replaced by the body of its
    /// equation with every variable turned back into a constant over the
    /// same specification. Other terms are returned unchanged.
    pub fn unfold(&self) -> Result<Thread> {
        match self {
            Thread::Rec(r) => {
                let body = r
                    .spec
                    .body(&r.name)
                    .ok_or_else(|| Error::UnboundVariable(r.name.to_string()))?;
                Ok(instantiate(body, &r.spec))
            }
            other => Ok(other.clone()),
        }
    }

    /// The term with recursion constants at the root unfolded until the root
    /// is an ordinary constructor.
    pub fn head(&self) -> Cow<'_, Thread> {
        let mut current = Cow::Borrowed(self);
        while let Thread::Rec(r) = current.as_ref() {
            let body = r
                .spec
                .body(&r.name)
                .expect("recursion constants are validated on construction");
            current = Cow::Owned(instantiate(body, &r.spec));
        }
        current
    }

    /// Rewrites every `tau`-headed composition so that all branches equal the
    /// first one. Specification bodies are rewritten once, not unfolded.
    pub fn normalize_tau(&self) -> Thread {
        self.map_bottom_up(&|t| match t {
            Thread::Pcc(Action::Tau, x, _) => Thread::Pcc(Action::Tau, x.clone(), x),
            Thread::Pcs(Action::Tau, xs) => {
                let k = xs.len();
                Thread::Pcs(Action::Tau, vec![xs[0].clone(); k])
            }
            other => other,
        })
    }

    /// The finite approximation that behaves as `self` for `depth` steps and
    /// deadlocks below that.
    pub fn project(&self, depth: usize) -> Thread {
        if depth == 0 {
            return Thread::Deadlock;
        }
        let next = depth - 1;
        match self.head().as_ref() {
            Thread::Pcc(a, x, y) => Thread::pcc(a.clone(), x.project(next), y.project(next)),
            Thread::Pcs(a, xs) => {
                Thread::Pcs(a.clone(), xs.iter().map(|x| x.project(next)).collect())
            }
            Thread::Choice(xs) => Thread::Choice(xs.iter().map(|x| x.project(next)).collect()),
            Thread::Mig(n, x, y) => Thread::mig(*n, x.project(next), y.project(next)),
            leaf => leaf.clone(),
        }
    }

    /// States reachable by following branches and unfolding recursion.
    pub fn reachable_states(&self, limit: usize) -> Reachable {
        match StateGraph::explore(self, limit) {
            Some(graph) => Reachable::States(graph.states),
            None => Reachable::Overflow,
        }
    }

    /// Behavioural equivalence. Finite-state threads are compared by
    /// bisimulation; otherwise the two `depth`-projections (after the tau
    /// law) must coincide.
    pub fn equivalent(&self, other: &Thread, depth: usize) -> bool {
        if let (Some(left), Some(right)) = (
            StateGraph::explore(self, DEFAULT_STATE_LIMIT),
            StateGraph::explore(other, DEFAULT_STATE_LIMIT),
        ) {
            return left.bisimilar(0, &right, 0);
        }
        lockstep(self, other, depth, &mut HashSet::new())
    }

    /// Rebuilds the term bottom-up, applying `f` to every rebuilt node.
    /// Specification bodies are rewritten as well, producing fresh
    /// specifications.
    pub fn map_bottom_up(&self, f: &dyn Fn(Thread) -> Thread) -> Thread {
        self.map_with(f, &mut HashMap::new())
    }

    fn map_with(
        &self,
        f: &dyn Fn(Thread) -> Thread,
        memo: &mut HashMap<*const RecSpec, Arc<RecSpec>>,
    ) -> Thread {
        let rebuilt = match self {
            Thread::Pcc(a, x, y) => {
                Thread::pcc(a.clone(), x.map_with(f, memo), y.map_with(f, memo))
            }
            Thread::Pcs(a, xs) => {
                Thread::Pcs(a.clone(), xs.iter().map(|x| x.map_with(f, memo)).collect())
            }
            Thread::Choice(xs) => Thread::Choice(xs.iter().map(|x| x.map_with(f, memo)).collect()),
            Thread::Mig(n, x, y) => Thread::mig(*n, x.map_with(f, memo), y.map_with(f, memo)),
            Thread::Rec(r) => {
                let key = Arc::as_ptr(&r.spec);
                let spec = match memo.get(&key) {
                    Some(spec) => spec.clone(),
                    None => {
                        let equations = r
                            .spec
                            .equations
                            .iter()
                            .map(|(name, body)| (name.clone(), body.map_with(f, memo)))
                            .collect();
                        let spec = RecSpec::from_map_unchecked(equations);
                        memo.insert(key, spec.clone());
                        spec
                    }
                };
                Thread::Rec(RecRef {
                    name: r.name.clone(),
                    spec,
                })
            }
            leaf => leaf.clone(),
        };
        f(rebuilt)
    }

    /// True when the term contains no recursion constants.
    pub fn is_finite(&self) -> bool {
        match self {
            Thread::Rec(_) => false,
            other => other.children().into_iter().all(Thread::is_finite),
        }
    }

    /// Number of constructors, not looking into specifications.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Thread::size).sum::<usize>()
    }

    /// Every action occurring in the term, including specification bodies.
    pub fn actions(&self) -> BTreeSet<Action> {
        let mut out = BTreeSet::new();
        let mut seen = HashSet::new();
        collect_actions(self, &mut out, &mut seen);
        out
    }

    /// True when some `Switch`, `Extern` or `Choice` occurs, including
    /// inside specification bodies.
    pub fn has_switch_over(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if matches!(t, Thread::Switch(_) | Thread::Extern | Thread::Choice(_)) {
                found = true;
            }
        });
        found
    }

    /// Pre-order visit of every node, entering each specification once.
    pub fn visit(&self, f: &mut dyn FnMut(&Thread)) {
        let mut seen = HashSet::new();
        visit_with(self, f, &mut seen);
    }
}

fn visit_with(t: &Thread, f: &mut dyn FnMut(&Thread), seen: &mut HashSet<*const RecSpec>) {
    f(t);
    if let Thread::Rec(r) = t {
        if seen.insert(Arc::as_ptr(&r.spec)) {
            for body in r.spec.equations.values() {
                visit_with(body, f, seen);
            }
        }
    }
    for c in t.children() {
        visit_with(c, f, seen);
    }
}

fn collect_actions(t: &Thread, out: &mut BTreeSet<Action>, seen: &mut HashSet<*const RecSpec>) {
    visit_with(
        t,
        &mut |node| match node {
            Thread::Pcc(a, _, _) | Thread::Pcs(a, _) => {
                out.insert(a.clone());
            }
            _ => {}
        },
        seen,
    );
}

/// Replaces variables of `spec` in `body` by recursion constants.
fn instantiate(body: &Thread, spec: &Arc<RecSpec>) -> Thread {
    match body {
        Thread::Var(name) => Thread::Rec(RecRef {
            name: Arc::from(name.as_str()),
            spec: spec.clone(),
        }),
        Thread::Pcc(a, x, y) => Thread::pcc(a.clone(), instantiate(x, spec), instantiate(y, spec)),
        Thread::Pcs(a, xs) => {
            Thread::Pcs(a.clone(), xs.iter().map(|x| instantiate(x, spec)).collect())
        }
        Thread::Choice(xs) => Thread::Choice(xs.iter().map(|x| instantiate(x, spec)).collect()),
        Thread::Mig(n, x, y) => Thread::mig(*n, instantiate(x, spec), instantiate(y, spec)),
        other => other.clone(),
    }
}

/// A constant `<X|E>`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RecRef {
    name: Arc<str>,
    spec: Arc<RecSpec>,
}

impl RecRef {
    pub fn new(name: &str, spec: Arc<RecSpec>) -> Result<Self> {
        if spec.body(name).is_none() {
            return Err(Error::UnboundVariable(name.to_string()));
        }
        Ok(RecRef {
            name: Arc::from(name),
            spec,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> &Arc<RecSpec> {
        &self.spec
    }
}

/// A guarded recursive specification: equations `X = t_X`.
///
/// Equality is structural. A digest of the equations is cached so that
/// hashing terms that carry specifications stays cheap.
#[derive(Clone)]
pub struct RecSpec {
    equations: BTreeMap<String, Thread>,
    digest: u64,
}

impl RecSpec {
    /// Validates names, variable scoping and guardedness.
    pub fn new<I, S>(equations: I) -> Result<Arc<RecSpec>>
    where
        I: IntoIterator<Item = (S, Thread)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (name, body) in equations {
            let name = name.into();
            if !is_var_name(&name) {
                return Err(Error::MalformedTerm(format!(
                    "invalid recursion variable `{name}`"
                )));
            }
            if map.insert(name.clone(), body).is_some() {
                return Err(Error::MalformedTerm(format!(
                    "variable `{name}` defined twice"
                )));
            }
        }
        if map.is_empty() {
            return Err(Error::MalformedTerm("empty recursive specification".into()));
        }
        for (name, body) in &map {
            check_scope(body, &map)?;
            if !guarded(body) {
                return Err(Error::Unguarded(format!("body of `{name}`")));
            }
        }
        Ok(RecSpec::from_map_unchecked(map))
    }

    pub(crate) fn from_map_unchecked(equations: BTreeMap<String, Thread>) -> Arc<RecSpec> {
        let mut hasher = DefaultHasher::new();
        equations.hash(&mut hasher);
        Arc::new(RecSpec {
            digest: hasher.finish(),
            equations,
        })
    }

    pub fn equations(&self) -> &BTreeMap<String, Thread> {
        &self.equations
    }

    pub fn body(&self, name: &str) -> Option<&Thread> {
        self.equations.get(name)
    }
}

impl PartialEq for RecSpec {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.equations == other.equations
    }
}

impl Eq for RecSpec {}

impl Hash for RecSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest);
    }
}

impl fmt::Debug for RecSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.equations.iter()).finish()
    }
}

fn check_scope(body: &Thread, eqs: &BTreeMap<String, Thread>) -> Result<()> {
    match body {
        Thread::Var(v) if !eqs.contains_key(v) => Err(Error::UnboundVariable(v.clone())),
        other => other
            .children()
            .into_iter()
            .try_for_each(|c| check_scope(c, eqs)),
    }
}

/// Bodies must be a constant or start with an operator; a bare variable is
/// unguarded, and so is a choice with an unguarded branch.
fn guarded(body: &Thread) -> bool {
    match body {
        Thread::Var(_) => false,
        Thread::Choice(xs) => xs.iter().all(guarded),
        _ => true,
    }
}

/// Outcome of [`Thread::reachable_states`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reachable {
    States(Vec<Thread>),
    Overflow,
}

impl Reachable {
    pub fn len(&self) -> Option<usize> {
        match self {
            Reachable::States(s) => Some(s.len()),
            Reachable::Overflow => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Reachable::States(s) if s.is_empty())
    }
}

/// The observable shape of a node: what must match between bisimilar states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub(crate) enum Shape {
    Stop,
    Deadlock,
    Switch(usize),
    Extern,
    Var(String),
    Pcc(Action),
    Pcs(Action, usize),
    Choice(usize),
    Mig(u64),
}

impl Shape {
    pub(crate) fn of(t: &Thread) -> Shape {
        match t {
            Thread::Stop => Shape::Stop,
            Thread::Deadlock => Shape::Deadlock,
            Thread::Switch(i) => Shape::Switch(*i),
            Thread::Extern => Shape::Extern,
            Thread::Var(v) => Shape::Var(v.clone()),
            Thread::Pcc(a, _, _) => Shape::Pcc(a.clone()),
            Thread::Pcs(a, xs) => Shape::Pcs(a.clone(), xs.len()),
            Thread::Choice(xs) => Shape::Choice(xs.len()),
            Thread::Mig(n, _, _) => Shape::Mig(*n),
            Thread::Rec(_) => unreachable!("shape of an unfolded node"),
        }
    }

    /// Number of branches that matter behaviourally: a `tau` reply is always
    /// positive (resp. 1), so only the first branch counts.
    pub(crate) fn live_branches(&self, branches: usize) -> usize {
        match self {
            Shape::Pcc(Action::Tau) | Shape::Pcs(Action::Tau, _) => branches.min(1),
            _ => branches,
        }
    }
}

/// Unfolded states of a thread with their successor lists.
pub(crate) struct StateGraph {
    pub(crate) states: Vec<Thread>,
    pub(crate) shapes: Vec<Shape>,
    pub(crate) succ: Vec<Vec<usize>>,
}

impl StateGraph {
    pub(crate) fn explore(root: &Thread, limit: usize) -> Option<StateGraph> {
        let mut index: HashMap<Thread, usize> = HashMap::new();
        let mut graph = StateGraph {
            states: Vec::new(),
            shapes: Vec::new(),
            succ: Vec::new(),
        };
        let root = root.head().into_owned();
        index.insert(root.clone(), 0);
        graph.states.push(root);
        let mut next = 0;
        while next < graph.states.len() {
            let state = graph.states[next].clone();
            let mut succ = Vec::new();
            for child in state.children() {
                let child = child.head().into_owned();
                let id = match index.get(&child) {
                    Some(&id) => id,
                    None => {
                        if graph.states.len() >= limit {
                            return None;
                        }
                        let id = graph.states.len();
                        index.insert(child.clone(), id);
                        graph.states.push(child);
                        id
                    }
                };
                succ.push(id);
            }
            graph.shapes.push(Shape::of(&state));
            graph.succ.push(succ);
            next += 1;
        }
        Some(graph)
    }

    /// Bisimilarity of two deterministic systems: explore pairs of states
    /// and require equal shapes everywhere.
    pub(crate) fn bisimilar(&self, a: usize, other: &StateGraph, b: usize) -> bool {
        let mut seen = HashSet::new();
        let mut stack = vec![(a, b)];
        while let Some((x, y)) = stack.pop() {
            if !seen.insert((x, y)) {
                continue;
            }
            if self.shapes[x] != other.shapes[y] {
                return false;
            }
            let live = self.shapes[x].live_branches(self.succ[x].len());
            for i in 0..live {
                stack.push((self.succ[x][i], other.succ[y][i]));
            }
        }
        true
    }
}

fn lockstep(
    a: &Thread,
    b: &Thread,
    depth: usize,
    seen: &mut HashSet<(Thread, Thread, usize)>,
) -> bool {
    if depth == 0 {
        return true;
    }
    let (ha, hb) = (a.head(), b.head());
    if !seen.insert((ha.as_ref().clone(), hb.as_ref().clone(), depth)) {
        return true;
    }
    let shape = Shape::of(&ha);
    if shape != Shape::of(&hb) {
        return false;
    }
    let (ca, cb) = (ha.children(), hb.children());
    let live = shape.live_branches(ca.len());
    (0..live).all(|i| lockstep(ca[i], cb[i], depth - 1, seen))
}

impl fmt::Display for Thread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::print_thread(self))
    }
}

impl fmt::Debug for Thread {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for RecRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&Thread::Rec(self.clone()), f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> Action {
        s.parse().unwrap()
    }

    fn looping() -> Thread {
        // <X | X = a o X>
        let spec =
            RecSpec::new([("X", Thread::prefix(act("f.a"), Thread::Var("X".into())))]).unwrap();
        Thread::rec("X", spec).unwrap()
    }

    #[test]
    fn identifiers_are_checked() {
        assert!(Focus::new("f_1").is_ok());
        assert!(Focus::new("").is_err());
        assert!(Method::new("Up").is_err());
        assert!("f.m".parse::<BasicAction>().is_ok());
        assert!("fm".parse::<BasicAction>().is_err());
        assert_eq!("tau".parse::<Action>().unwrap(), Action::Tau);
    }

    #[test]
    fn unfold_substitutes_once() {
        let x = looping();
        let unfolded = x.unfold().unwrap();
        assert_eq!(unfolded, Thread::prefix(act("f.a"), x.clone()));
        assert_eq!(Thread::Stop.unfold().unwrap(), Thread::Stop);
    }

    #[test]
    fn unfold_two_equations() {
        let spec = RecSpec::new([
            (
                "X",
                Thread::pcc(act("f.m"), Thread::Stop, Thread::Var("Y".into())),
            ),
            ("Y", Thread::Deadlock),
        ])
        .unwrap();
        let x = Thread::rec("X", spec.clone()).unwrap();
        let y = Thread::rec("Y", spec).unwrap();
        assert_eq!(
            x.unfold().unwrap(),
            Thread::pcc(act("f.m"), Thread::Stop, y)
        );
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            RecSpec::new([("X", Thread::Var("Y".into()))]),
            Err(Error::UnboundVariable(_))
        ));
        assert!(matches!(
            RecSpec::new([("X", Thread::Var("X".into()))]),
            Err(Error::Unguarded(_))
        ));
        assert!(matches!(
            RecSpec::new([("X", Thread::choice(vec![Thread::Var("X".into())]))]),
            Err(Error::Unguarded(_))
        ));
        let spec = RecSpec::new([("X", Thread::Stop)]).unwrap();
        assert!(matches!(
            Thread::rec("Z", spec),
            Err(Error::UnboundVariable(_))
        ));
    }

    #[test]
    fn tau_normalisation() {
        let t = Thread::pcc(Action::Tau, Thread::Stop, Thread::Deadlock);
        assert_eq!(t.normalize_tau(), Thread::tau(Thread::Stop));
        let s = Thread::pcs(
            Action::Tau,
            vec![Thread::Stop, Thread::Deadlock, Thread::Deadlock],
        );
        assert_eq!(
            s.normalize_tau(),
            Thread::pcs(Action::Tau, vec![Thread::Stop; 3])
        );
        assert_eq!(Thread::Stop.normalize_tau(), Thread::Stop);
    }

    #[test]
    fn projection() {
        assert_eq!(looping().project(0), Thread::Deadlock);
        let a = act("f.a");
        let inner = Thread::prefix(a.clone(), Thread::Deadlock);
        assert_eq!(looping().project(2), Thread::prefix(a.clone(), inner));
        let t = Thread::pcc(act("f.m"), Thread::Stop, Thread::Extern);
        assert_eq!(
            t.project(1),
            Thread::pcc(act("f.m"), Thread::Deadlock, Thread::Deadlock)
        );
        assert_eq!(Thread::Switch(3).project(5), Thread::Switch(3));
    }

    #[test]
    fn reachable() {
        assert_eq!(looping().reachable_states(10).len(), Some(1));
        let t = Thread::pcc(act("f.a"), Thread::Stop, Thread::Deadlock);
        assert_eq!(t.reachable_states(10).len(), Some(3));
        let spec = RecSpec::new([
            (
                "X",
                Thread::pcc(act("f.a"), Thread::Var("X".into()), Thread::Var("Y".into())),
            ),
            (
                "Y",
                Thread::pcc(act("f.b"), Thread::Var("Y".into()), Thread::Var("X".into())),
            ),
        ])
        .unwrap();
        let x = Thread::rec("X", spec).unwrap();
        assert_eq!(x.reachable_states(10).len(), Some(2));
        assert_eq!(x.reachable_states(1), Reachable::Overflow);
    }

    #[test]
    fn equivalence() {
        let t1 = Thread::pcc(Action::Tau, Thread::Stop, Thread::Deadlock);
        assert!(t1.equivalent(&Thread::tau(Thread::Stop), 4));
        assert!(!Thread::Stop.equivalent(&Thread::Deadlock, 1));
        let spec = RecSpec::new([(
            "Y",
            Thread::pcc(act("f.a"), Thread::Var("Y".into()), Thread::Var("Y".into())),
        )])
        .unwrap();
        let y = Thread::rec("Y", spec).unwrap();
        assert!(looping().equivalent(&y, 32));
        assert!(!looping().equivalent(&Thread::prefix(act("f.a"), Thread::Stop), 32));
        assert!(!Thread::Switch(1).equivalent(&Thread::Switch(2), 8));
    }

    #[test]
    fn lockstep_matches_projection() {
        let a = Thread::pcc(act("f.a"), looping(), Thread::Stop);
        let b = Thread::pcc(act("f.a"), looping().unfold().unwrap(), Thread::Stop);
        assert!(lockstep(&a, &b, 20, &mut HashSet::new()));
        assert_eq!(a.project(6), b.project(6));
    }
}

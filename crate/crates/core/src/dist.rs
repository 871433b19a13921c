//! Distributed interleaving with explicit migration.
//!
//! A distributed thread vector is a sequence of entries, each pairing a
//! location with its local thread vector. The first thread of the first
//! entry gets a turn; afterwards the entry moves to the back. Fragment
//! searching (see [`crate::fragsearch`]) runs on the same machine with
//! fragment sets attached to the entries.

use std::collections::BTreeSet;
use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::exec::{perform, Outcome, Performed, ReplySource, Resolver, Step, Trace};
use crate::fragsearch::{appfs_in_place, pv, FragSet, FsEntry};
use crate::local::{drive, Event, Removal};
use crate::term::{Action, Thread};

pub type Loc = u64;
pub type LocSet = BTreeSet<Loc>;

/// Anything that travels through a distributed vector as a thread.
pub trait Carried: Clone {
    fn thread(&self) -> &Thread;
}

impl Carried for Thread {
    fn thread(&self) -> &Thread {
        self
    }
}

/// A thread with the identity it started with.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tagged {
    pub tag: usize,
    pub thread: Thread,
}

impl Carried for Tagged {
    fn thread(&self) -> &Thread {
        &self.thread
    }
}

/// `<gamma>_l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DistEntry<T = Thread> {
    pub location: Loc,
    pub threads: Vec<T>,
}

impl<T> DistEntry<T> {
    pub fn new(location: Loc, threads: Vec<T>) -> Self {
        DistEntry { location, threads }
    }
}

/// Appends `x` to the local vector of the first entry at `l`; without such
/// an entry the vector is returned unchanged.
pub fn app<T: Clone>(l: Loc, x: T, delta: &[DistEntry<T>]) -> Vec<DistEntry<T>> {
    let mut out = delta.to_vec();
    app_in_place(l, x, &mut out);
    out
}

pub(crate) fn app_in_place<T>(l: Loc, x: T, delta: &mut [DistEntry<T>]) -> bool {
    match delta.iter_mut().find(|e| e.location == l) {
        Some(entry) => {
            entry.threads.push(x);
            true
        }
        None => {
            warn!("no entry for location {l}; migrating thread dropped");
            false
        }
    }
}

/// Exactly one entry per configured location, and no others.
pub fn is_proper<'a>(locations: impl IntoIterator<Item = &'a Loc>, locs: &LocSet) -> bool {
    let mut seen = LocSet::new();
    for &l in locations {
        if !locs.contains(&l) || !seen.insert(l) {
            return false;
        }
    }
    seen.len() == locs.len()
}

pub fn is_proper_vec<T>(delta: &[DistEntry<T>], locs: &LocSet) -> bool {
    is_proper(delta.iter().map(|e| &e.location), locs)
}

/// `l.a`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LocAction {
    pub location: Loc,
    pub action: Action,
}

impl fmt::Display for LocAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.location, self.action)
    }
}

impl fmt::Debug for LocAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Located threads: the behaviours produced by distributed interleaving.
/// `Pci`/`PciFs` stand for the interleaving of a vector and are run by the
/// machine when reached.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LocThread {
    Stop,
    Deadlock,
    Pcc(LocAction, Box<LocThread>, Box<LocThread>),
    Pcs(LocAction, Vec<LocThread>),
    Switch(usize),
    Extern,
    Choice(Vec<LocThread>),
    /// Deadlock at termination applied to a behaviour not yet unfolded.
    Std(Box<LocThread>),
    Pci {
        delta: Vec<DistEntry>,
        alpha: Vec<Thread>,
        locs: LocSet,
    },
    PciFs {
        delta: Vec<FsEntry>,
        alpha: Vec<Thread>,
        locs: LocSet,
    },
}

impl LocThread {
    pub fn pcc(location: Loc, action: Action, pos: LocThread, neg: LocThread) -> LocThread {
        LocThread::Pcc(LocAction { location, action }, Box::new(pos), Box::new(neg))
    }

    /// `l.a o u`.
    pub fn prefix(location: Loc, action: Action, then: LocThread) -> LocThread {
        LocThread::pcc(location, action, then.clone(), then)
    }
}

/// Deadlock at termination over located threads.
pub fn std_located(u: &LocThread) -> LocThread {
    match u {
        LocThread::Stop | LocThread::Deadlock => LocThread::Deadlock,
        LocThread::Pcc(a, x, y) => LocThread::Pcc(
            a.clone(),
            Box::new(std_located(x)),
            Box::new(std_located(y)),
        ),
        LocThread::Pcs(a, xs) => LocThread::Pcs(a.clone(), xs.iter().map(std_located).collect()),
        LocThread::Choice(xs) => LocThread::Choice(xs.iter().map(std_located).collect()),
        LocThread::Switch(i) => LocThread::Switch(*i),
        LocThread::Extern => LocThread::Extern,
        LocThread::Std(x) => LocThread::Std(x.clone()),
        lazy => LocThread::Std(Box::new(lazy.clone())),
    }
}

/// `l.tau`-headed compositions keep only their first branch.
pub fn normalize_tau_located(u: &LocThread) -> LocThread {
    match u {
        LocThread::Pcc(a, x, _) if a.action == Action::Tau => {
            let x = normalize_tau_located(x);
            LocThread::Pcc(a.clone(), Box::new(x.clone()), Box::new(x))
        }
        LocThread::Pcc(a, x, y) => LocThread::Pcc(
            a.clone(),
            Box::new(normalize_tau_located(x)),
            Box::new(normalize_tau_located(y)),
        ),
        LocThread::Pcs(a, xs) if a.action == Action::Tau => {
            let x = normalize_tau_located(&xs[0]);
            LocThread::Pcs(a.clone(), vec![x; xs.len()])
        }
        LocThread::Pcs(a, xs) => {
            LocThread::Pcs(a.clone(), xs.iter().map(normalize_tau_located).collect())
        }
        LocThread::Choice(xs) => LocThread::Choice(xs.iter().map(normalize_tau_located).collect()),
        LocThread::Std(x) => LocThread::Std(Box::new(normalize_tau_located(x))),
        other => other.clone(),
    }
}

/// Executes a located thread.
pub fn run_located(
    u: &LocThread,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut trace = Trace::new();
    trace.outcome = exec_located(u, &mut trace, replies, resolver, max_steps)?;
    Ok(trace)
}

fn exec_located(
    u: &LocThread,
    trace: &mut Trace,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Outcome> {
    let mut current = u.clone();
    loop {
        current = match current {
            LocThread::Stop => return Ok(Outcome::Terminated),
            LocThread::Deadlock => return Ok(Outcome::Deadlocked),
            LocThread::Switch(_) | LocThread::Extern => return Err(Error::SwitchOutsideContext),
            LocThread::Std(x) => {
                let outcome = exec_located(&x, trace, replies, resolver, max_steps)?;
                return Ok(match outcome {
                    Outcome::Terminated => Outcome::Deadlocked,
                    other => other,
                });
            }
            LocThread::Choice(mut xs) => {
                let j = resolver.choose(xs.len())?;
                trace.choices.push(j);
                if j == 0 {
                    return Ok(Outcome::Deadlocked);
                }
                xs.swap_remove(j - 1)
            }
            LocThread::Pcc(a, x, y) => {
                if trace.steps.len() >= max_steps {
                    return Ok(Outcome::Cut);
                }
                let probe = Thread::pcc(a.action.clone(), Thread::Stop, Thread::Stop);
                match perform(&probe, replies)? {
                    Performed::Branch(i, mut step) => {
                        step.location = Some(a.location);
                        trace.push(step);
                        if i == 0 {
                            *x
                        } else {
                            *y
                        }
                    }
                    Performed::Blocked => return Ok(Outcome::Deadlocked),
                }
            }
            LocThread::Pcs(a, mut xs) => {
                if trace.steps.len() >= max_steps {
                    return Ok(Outcome::Cut);
                }
                let probe = Thread::Pcs(a.action.clone(), vec![Thread::Stop; xs.len()]);
                match perform(&probe, replies)? {
                    Performed::Branch(i, mut step) => {
                        step.location = Some(a.location);
                        trace.push(step);
                        xs.swap_remove(i)
                    }
                    Performed::Blocked => return Ok(Outcome::Deadlocked),
                }
            }
            LocThread::Pci { delta, alpha, locs } => {
                let machine = DistMachine::plain(&delta, &alpha, &locs);
                return continue_machine(machine, trace, replies, resolver, max_steps);
            }
            LocThread::PciFs { delta, alpha, locs } => {
                let machine = DistMachine::fragment_search(&delta, &alpha, &locs);
                return continue_machine(machine, trace, replies, resolver, max_steps);
            }
        };
    }
}

fn continue_machine(
    mut machine: DistMachine,
    trace: &mut Trace,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Outcome> {
    let budget = max_steps.saturating_sub(trace.steps.len());
    let rest = drive(
        |r, c, may| machine.step(r, c, may),
        replies,
        resolver,
        budget,
    )?;
    for step in rest.steps {
        trace.push(step);
    }
    trace.choices.extend(rest.choices);
    Ok(rest.outcome)
}

/// The distributed scheduler. Entries always carry a fragment set; it is
/// only consulted when fragment searching is on.
#[derive(Debug, Clone)]
pub struct DistMachine {
    entries: Vec<FsEntry<Tagged>>,
    alpha: Vec<Thread>,
    locs: LocSet,
    pending_deadlock: bool,
    searching: bool,
    /// The head thread has been externally assigned this fragment and
    /// starts it up on its next turn.
    starting: Option<usize>,
}

impl DistMachine {
    fn tagged(entries: impl Iterator<Item = (Loc, Vec<Thread>, FragSet)>) -> Vec<FsEntry<Tagged>> {
        let mut next = 0;
        entries
            .map(|(location, threads, fragments)| FsEntry {
                location,
                threads: threads
                    .into_iter()
                    .map(|thread| {
                        next += 1;
                        Tagged {
                            tag: next - 1,
                            thread,
                        }
                    })
                    .collect(),
                fragments,
            })
            .collect()
    }

    /// Cyclic distributed interleaving. Threads are tagged in vector order.
    pub fn plain(delta: &[DistEntry], alpha: &[Thread], locs: &LocSet) -> Self {
        let entries = delta
            .iter()
            .map(|e| (e.location, e.threads.clone(), FragSet::new()));
        DistMachine {
            entries: Self::tagged(entries),
            alpha: alpha.to_vec(),
            locs: locs.clone(),
            pending_deadlock: false,
            searching: false,
            starting: None,
        }
    }

    /// Cyclic distributed interleaving with fragment searching.
    pub fn fragment_search(delta: &[FsEntry], alpha: &[Thread], locs: &LocSet) -> Self {
        let entries = delta
            .iter()
            .map(|e| (e.location, e.threads.clone(), e.fragments.clone()));
        DistMachine {
            entries: Self::tagged(entries),
            alpha: alpha.to_vec(),
            locs: locs.clone(),
            pending_deadlock: false,
            searching: true,
            starting: None,
        }
    }

    pub fn entries(&self) -> &[FsEntry<Tagged>] {
        &self.entries
    }

    /// The current vector without tags or fragment sets.
    pub fn snapshot(&self) -> Vec<DistEntry> {
        self.entries
            .iter()
            .map(|e| {
                DistEntry::new(
                    e.location,
                    e.threads.iter().map(|t| t.thread.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn snapshot_fs(&self) -> Vec<FsEntry> {
        self.entries
            .iter()
            .map(|e| FsEntry {
                location: e.location,
                threads: e.threads.iter().map(|t| t.thread.clone()).collect(),
                fragments: e.fragments.clone(),
            })
            .collect()
    }

    pub fn is_proper(&self) -> bool {
        is_proper(self.entries.iter().map(|e| &e.location), &self.locs)
    }

    pub fn pending_deadlock(&self) -> bool {
        self.pending_deadlock
    }

    fn rotate(&mut self) {
        let first = self.entries.remove(0);
        self.entries.push(first);
    }

    /// Drops the head thread and rotates.
    fn remove(&mut self, tag: usize, why: Removal) -> Event {
        self.entries[0].threads.remove(0);
        self.rotate();
        if why != Removal::Terminated {
            self.pending_deadlock = true;
        }
        Event::Removed { tag, why }
    }

    /// Replaces the head thread by its continuation `x` and moves on.
    fn continue_with(&mut self, tag: usize, x: Thread) {
        let next = Tagged { tag, thread: x };
        if self.searching {
            self.entries[0].threads[0] = next;
            self.entries = pv(&self.entries);
        } else {
            self.entries[0].threads.remove(0);
            self.rotate();
            self.entries
                .last_mut()
                .expect("non-empty")
                .threads
                .push(next);
        }
    }

    fn switch_allowed(&self, i: usize) -> bool {
        (1..=self.alpha.len()).contains(&i)
            && (!self.searching || self.entries[0].fragments.contains(&i))
    }

    /// Performs `l.tls.init` and starts fragment `i` (1-based).
    fn start(&mut self, tag: usize, i: usize, replies: &mut dyn ReplySource) -> Result<Event> {
        let l = self.entries[0].location;
        let x = self.alpha[i - 1].clone();
        match perform(&Thread::prefix(Action::tls_init(), Thread::Stop), replies)? {
            Performed::Branch(_, mut step) => {
                step.location = Some(l);
                step.thread = Some(tag);
                self.continue_with(tag, x);
                Ok(Event::Turn { tag, step })
            }
            Performed::Blocked => Ok(Event::Finished(Outcome::Deadlocked)),
        }
    }

    /// Advances by one event; see [`crate::local::LocalMachine::step`].
    pub fn step(
        &mut self,
        replies: &mut dyn ReplySource,
        resolver: &mut Resolver,
        may_act: bool,
    ) -> Result<Event> {
        if self.entries.iter().all(|e| e.threads.is_empty()) {
            let outcome = if self.pending_deadlock {
                Outcome::Deadlocked
            } else {
                Outcome::Terminated
            };
            return Ok(Event::Finished(outcome));
        }
        while self.entries[0].threads.is_empty() {
            self.rotate();
        }
        let l = self.entries[0].location;
        let Tagged { tag, thread } = self.entries[0].threads[0].clone();
        if let Some(i) = self.starting {
            if !may_act {
                return Ok(Event::Finished(Outcome::Cut));
            }
            self.starting = None;
            return self.start(tag, i, replies);
        }
        let head = thread.head().into_owned();
        match &head {
            Thread::Stop => Ok(self.remove(tag, Removal::Terminated)),
            Thread::Deadlock => Ok(self.remove(tag, Removal::Deadlocked)),
            Thread::Pcc(..) | Thread::Pcs(..) => {
                if !may_act {
                    return Ok(Event::Finished(Outcome::Cut));
                }
                match perform(&head, replies)? {
                    Performed::Branch(i, mut step) => {
                        step.location = Some(l);
                        step.thread = Some(tag);
                        self.continue_with(tag, head.children()[i].clone());
                        Ok(Event::Turn { tag, step })
                    }
                    Performed::Blocked => Ok(Event::Finished(Outcome::Deadlocked)),
                }
            }
            Thread::Switch(i) if self.switch_allowed(*i) => {
                if !may_act {
                    return Ok(Event::Finished(Outcome::Cut));
                }
                self.start(tag, *i, replies)
            }
            Thread::Switch(_) => Ok(self.remove(tag, Removal::InvalidSwitch)),
            Thread::Extern if self.alpha.is_empty() => Ok(self.remove(tag, Removal::NoFragments)),
            Thread::Extern => {
                let j = resolver.choose(self.alpha.len())?;
                if j == 0 {
                    return Ok(Event::Finished(Outcome::Deadlocked));
                }
                self.starting = Some(j);
                Ok(Event::Chose { tag, choice: j })
            }
            Thread::Choice(xs) => {
                let j = resolver.choose(xs.len())?;
                if j == 0 {
                    return Ok(Event::Finished(Outcome::Deadlocked));
                }
                self.entries[0].threads[0].thread = xs[j - 1].clone();
                Ok(Event::Chose { tag, choice: j })
            }
            Thread::Mig(n, x, y) => {
                if !may_act {
                    return Ok(Event::Finished(Outcome::Cut));
                }
                let mut step = Step::new(Action::Tau, None, None);
                step.location = Some(l);
                step.thread = Some(tag);
                if self.locs.contains(n) {
                    self.entries[0].threads.remove(0);
                    self.rotate();
                    let migrant = Tagged {
                        tag,
                        thread: (**x).clone(),
                    };
                    appfs_in_place(*n, migrant, &mut self.entries);
                } else {
                    self.continue_with(tag, (**y).clone());
                }
                Ok(Event::Turn { tag, step })
            }
            Thread::Var(v) => Err(Error::UnboundVariable(v.clone())),
            Thread::Rec(_) => unreachable!("head is unfolded"),
        }
    }
}

/// Executes `pci(delta, alpha)` over the locations `locs`.
pub fn pci_d(
    delta: &[DistEntry],
    alpha: &[Thread],
    locs: &LocSet,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut machine = DistMachine::plain(delta, alpha, locs);
    drive(
        |r, c, may| machine.step(r, c, may),
        replies,
        resolver,
        max_steps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_thread;
    use crate::exec::ReplyScript;
    use crate::service::Reply;

    fn th(s: &str) -> Thread {
        parse_thread(s).unwrap()
    }

    fn entry(l: Loc, srcs: &[&str]) -> DistEntry {
        DistEntry::new(l, srcs.iter().map(|s| th(s)).collect())
    }

    fn locs(ls: &[Loc]) -> LocSet {
        ls.iter().copied().collect()
    }

    fn run(delta: &[DistEntry], ls: &[Loc]) -> Trace {
        pci_d(
            delta,
            &[],
            &locs(ls),
            &mut ReplyScript::always(Reply::True),
            &mut Resolver::scripted([]),
            100,
        )
        .unwrap()
    }

    fn shown(t: &Trace) -> Vec<String> {
        t.steps
            .iter()
            .map(|s| format!("{}.{}", s.location.unwrap(), s.action))
            .collect()
    }

    #[test]
    fn app_examples() {
        let x = Thread::Stop;
        assert!(app(1, x.clone(), &[]).is_empty());
        let delta = vec![entry(1, &["D"]), entry(2, &[])];
        assert_eq!(
            app(1, x.clone(), &delta)[0].threads,
            vec![Thread::Deadlock, Thread::Stop]
        );
        assert_eq!(app(2, x.clone(), &delta)[1].threads, vec![Thread::Stop]);
        assert_eq!(app(3, x, &delta), delta);
    }

    #[test]
    fn properness() {
        let delta = vec![entry(1, &[]), entry(2, &[])];
        assert!(is_proper_vec(&delta, &locs(&[1, 2])));
        assert!(!is_proper_vec(&delta, &locs(&[1, 2, 3])));
        assert!(!is_proper_vec(&[entry(1, &[]), entry(1, &[])], &locs(&[1])));
    }

    #[test]
    fn interleaving_examples() {
        let t = run(&[], &[1]);
        assert_eq!((t.steps.len(), t.outcome), (0, Outcome::Terminated));
        let t = run(
            &[entry(1, &["(pcc f.a S S)"]), entry(2, &["(pcc f.b S S)"])],
            &[1, 2],
        );
        assert_eq!(
            (shown(&t), t.outcome),
            (vec!["1.f.a".into(), "2.f.b".into()], Outcome::Terminated)
        );
        let t = run(
            &[entry(1, &["(mig 2 (pcc f.a S S) S)"]), entry(2, &[])],
            &[1, 2],
        );
        assert_eq!(
            (shown(&t), t.outcome),
            (vec!["1.tau".into(), "2.f.a".into()], Outcome::Terminated)
        );
        let t = run(&[entry(1, &["(mig 9 D (pcc f.b S S))"])], &[1]);
        assert_eq!(
            (shown(&t), t.outcome),
            (vec!["1.tau".into(), "1.f.b".into()], Outcome::Terminated)
        );
        let t = run(&[entry(1, &["D"]), entry(2, &["(tau S)"])], &[1, 2]);
        assert_eq!(
            (shown(&t), t.outcome),
            (vec!["2.tau".into()], Outcome::Deadlocked)
        );
    }

    #[test]
    fn located_threads() {
        let u = LocThread::pcc(
            1,
            "f.a".parse().unwrap(),
            LocThread::Stop,
            LocThread::Deadlock,
        );
        let expected = LocThread::pcc(
            1,
            "f.a".parse().unwrap(),
            LocThread::Deadlock,
            LocThread::Deadlock,
        );
        assert_eq!(std_located(&u), expected);
        assert_eq!(std_located(&LocThread::Deadlock), LocThread::Deadlock);
        let mut replies = ReplyScript::always(Reply::True);
        let t = run_located(
            &std_located(&u),
            &mut replies,
            &mut Resolver::scripted([]),
            10,
        )
        .unwrap();
        assert_eq!((t.steps.len(), t.outcome), (1, Outcome::Deadlocked));
        assert_eq!(t.steps[0].location, Some(1));
        let tau = LocThread::pcc(2, Action::Tau, LocThread::Stop, LocThread::Deadlock);
        assert_eq!(
            normalize_tau_located(&tau),
            LocThread::prefix(2, Action::Tau, LocThread::Stop)
        );
    }

    #[test]
    fn lazy_interleaving_inside_located_threads() {
        let delta = vec![entry(1, &["(pcc f.a S S)"])];
        let u = LocThread::prefix(
            1,
            Action::Tau,
            LocThread::Std(Box::new(LocThread::Pci {
                delta,
                alpha: vec![],
                locs: locs(&[1]),
            })),
        );
        let mut replies = ReplyScript::always(Reply::True);
        let t = run_located(&u, &mut replies, &mut Resolver::scripted([]), 10).unwrap();
        assert_eq!(
            (shown(&t), t.outcome),
            (vec!["1.tau".into(), "1.f.a".into()], Outcome::Deadlocked)
        );
    }
}

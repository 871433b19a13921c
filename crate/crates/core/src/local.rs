//! Poly-threaded cyclic strategic interleaving.
//!
//! The first thread of the vector gets a turn: it performs one action and
//! its continuation moves to the back. Terminated threads leave the vector;
//! a thread that deadlocks leaves as well, but then the whole run can at
//! best deadlock once every other thread is done ("deadlock at
//! termination").

use std::collections::VecDeque;

use crate::build::{build, Node};
use crate::error::{Error, Result};
use crate::exec::{perform, Outcome, Performed, ReplySource, Resolver, Step, Trace};
use crate::term::{Action, Thread, DEFAULT_STATE_LIMIT};

/// Deadlock at termination: every `S` becomes `D`.
pub fn std(t: &Thread) -> Thread {
    t.map_bottom_up(&|t| match t {
        Thread::Stop => Thread::Deadlock,
        other => other,
    })
}

/// Why a thread left the vector without taking a turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Removal {
    Terminated,
    Deadlocked,
    InvalidSwitch,
    NoFragments,
}

/// One observable event of a scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// The thread with this tag performed `step`.
    Turn {
        tag: usize,
        step: Step,
    },
    /// The head thread left the vector.
    Removed {
        tag: usize,
        why: Removal,
    },
    /// An external choice was resolved (0 means deadlock).
    Chose {
        tag: usize,
        choice: usize,
    },
    Finished(Outcome),
}

/// The `pci` scheduler as an explicit state machine.
#[derive(Debug, Clone)]
pub struct LocalMachine {
    queue: VecDeque<(usize, Thread)>,
    alpha: Vec<Thread>,
    pending_deadlock: bool,
}

impl LocalMachine {
    /// Threads are tagged with their initial position; continuations keep
    /// the tag of the thread they continue.
    pub fn new(beta: &[Thread], alpha: &[Thread]) -> Self {
        LocalMachine {
            queue: beta.iter().cloned().enumerate().collect(),
            alpha: alpha.to_vec(),
            pending_deadlock: false,
        }
    }

    pub fn queue(&self) -> impl Iterator<Item = &(usize, Thread)> {
        self.queue.iter()
    }

    pub fn pending_deadlock(&self) -> bool {
        self.pending_deadlock
    }

    fn remove(&mut self, tag: usize, why: Removal) -> Event {
        self.queue.pop_front();
        if why != Removal::Terminated {
            self.pending_deadlock = true;
        }
        Event::Removed { tag, why }
    }

    /// Advances by one event. With `may_act` false, a turn that would
    /// perform an action ends the run as cut instead.
    pub fn step(
        &mut self,
        replies: &mut dyn ReplySource,
        resolver: &mut Resolver,
        may_act: bool,
    ) -> Result<Event> {
        let (tag, head) = match self.queue.front() {
            None => {
                let outcome = if self.pending_deadlock {
                    Outcome::Deadlocked
                } else {
                    Outcome::Terminated
                };
                return Ok(Event::Finished(outcome));
            }
            Some((tag, t)) => (*tag, t.head().into_owned()),
        };
        let continuation = match &head {
            Thread::Stop => return Ok(self.remove(tag, Removal::Terminated)),
            Thread::Deadlock => return Ok(self.remove(tag, Removal::Deadlocked)),
            Thread::Pcc(..) | Thread::Pcs(..) => {
                if !may_act {
                    return Ok(Event::Finished(Outcome::Cut));
                }
                match perform(&head, replies)? {
                    Performed::Branch(i, step) => (head.children()[i].clone(), step),
                    Performed::Blocked => return Ok(Event::Finished(Outcome::Deadlocked)),
                }
            }
            Thread::Switch(i) => match self.alpha.get(i.wrapping_sub(1)) {
                Some(x) => {
                    if !may_act {
                        return Ok(Event::Finished(Outcome::Cut));
                    }
                    match self.init(x.clone(), replies)? {
                        Some(next) => next,
                        None => return Ok(Event::Finished(Outcome::Deadlocked)),
                    }
                }
                None => return Ok(self.remove(tag, Removal::InvalidSwitch)),
            },
            Thread::Extern => {
                if self.alpha.is_empty() {
                    return Ok(self.remove(tag, Removal::NoFragments));
                }
                let j = resolver.choose(self.alpha.len())?;
                if j == 0 {
                    return Ok(Event::Finished(Outcome::Deadlocked));
                }
                // the selected fragment starts up on the next event
                self.queue[0].1 = Thread::Switch(j);
                return Ok(Event::Chose { tag, choice: j });
            }
            Thread::Choice(xs) => {
                let j = resolver.choose(xs.len())?;
                if j == 0 {
                    return Ok(Event::Finished(Outcome::Deadlocked));
                }
                self.queue[0].1 = xs[j - 1].clone();
                return Ok(Event::Chose { tag, choice: j });
            }
            Thread::Mig(..) => return Err(Error::MigrationOutsideDistribution),
            Thread::Var(v) => return Err(Error::UnboundVariable(v.clone())),
            Thread::Rec(_) => unreachable!("head is unfolded"),
        };
        let (next, mut step) = continuation;
        self.queue.pop_front();
        self.queue.push_back((tag, next));
        step.thread = Some(tag);
        Ok(Event::Turn { tag, step })
    }

    /// Performs `tls.init` for fragment `x`; `None` when it was refused.
    fn init(&self, x: Thread, replies: &mut dyn ReplySource) -> Result<Option<(Thread, Step)>> {
        let prefixed = Thread::prefix(Action::tls_init(), x.clone());
        Ok(match perform(&prefixed, replies)? {
            Performed::Branch(_, step) => Some((x, step)),
            Performed::Blocked => None,
        })
    }
}

/// Drives a scheduler until it finishes or `max_steps` actions were
/// performed.
pub(crate) fn drive(
    mut next: impl FnMut(&mut dyn ReplySource, &mut Resolver, bool) -> Result<Event>,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut trace = Trace::new();
    loop {
        let may_act = trace.steps.len() < max_steps;
        match next(replies, resolver, may_act)? {
            Event::Turn { step, .. } => trace.push(step),
            Event::Chose { choice, .. } => trace.choices.push(choice),
            Event::Removed { .. } => {}
            Event::Finished(outcome) => {
                trace.outcome = outcome;
                return Ok(trace);
            }
        }
    }
}

/// Executes `pci(beta, alpha)`. Steps carry the tag of the thread that
/// performed them.
///
/// Resolving an external choice to 0 deadlocks the whole run, as does a
/// refused (blocked) reply.
pub fn pci(
    beta: &[Thread],
    alpha: &[Thread],
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut machine = LocalMachine::new(beta, alpha);
    drive(
        |r, c, may| machine.step(r, c, may),
        replies,
        resolver,
        max_steps,
    )
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum PciKey {
    Queue(Vec<Thread>, bool),
    /// `tls.init o pci(queue)`.
    Init(Vec<Thread>, bool),
}

/// The thread denoted by `pci(beta, alpha)`, built over the reachable
/// (queue, deadlock-pending) states.
pub fn pci_term(beta: &[Thread], alpha: &[Thread]) -> Result<Thread> {
    build(
        PciKey::Queue(beta.to_vec(), false),
        DEFAULT_STATE_LIMIT,
        |key| {
            let (mut queue, mut pending) = match key {
                PciKey::Init(q, p) => {
                    let next = PciKey::Queue(q.clone(), *p);
                    return Ok(Node::Pcc(Action::tls_init(), next.clone(), next));
                }
                PciKey::Queue(q, p) => (q.clone(), *p),
            };
            loop {
                let Some(first) = queue.first() else {
                    return Ok(if pending { Node::Deadlock } else { Node::Stop });
                };
                let head = first.head().into_owned();
                let rest = &queue[1..];
                let then = |x: &Thread| {
                    let mut q = rest.to_vec();
                    q.push(x.clone());
                    q
                };
                match &head {
                    Thread::Stop => {}
                    Thread::Deadlock => pending = true,
                    Thread::Switch(i) if (1..=alpha.len()).contains(i) => {
                        let next = PciKey::Queue(then(&alpha[i - 1]), pending);
                        return Ok(Node::Pcc(Action::tls_init(), next.clone(), next));
                    }
                    Thread::Switch(_) => pending = true,
                    Thread::Extern if alpha.is_empty() => pending = true,
                    Thread::Extern => {
                        let options = alpha
                            .iter()
                            .map(|x| PciKey::Init(then(x), pending))
                            .collect();
                        return Ok(Node::Choice(options));
                    }
                    Thread::Pcc(a, x, y) => {
                        return Ok(Node::Pcc(
                            a.clone(),
                            PciKey::Queue(then(x), pending),
                            PciKey::Queue(then(y), pending),
                        ))
                    }
                    Thread::Pcs(a, xs) => {
                        let branches = xs.iter().map(|x| PciKey::Queue(then(x), pending)).collect();
                        return Ok(Node::Pcs(a.clone(), branches));
                    }
                    Thread::Choice(xs) => {
                        let options = xs
                            .iter()
                            .map(|x| {
                                let mut q = vec![x.clone()];
                                q.extend_from_slice(rest);
                                PciKey::Queue(q, pending)
                            })
                            .collect();
                        return Ok(Node::Choice(options));
                    }
                    Thread::Mig(..) => return Err(Error::MigrationOutsideDistribution),
                    Thread::Var(v) => return Err(Error::UnboundVariable(v.clone())),
                    Thread::Rec(_) => unreachable!("head is unfolded"),
                }
                queue.remove(0);
            }
        },
    )
}

use std::collections::HashSet;

use super::{proc_step, Datum, Next, ProcAction, ProcTerm, TlsEncoding};
use crate::error::{Error, Result};
use crate::service::{use_service, Reply, Service};
use crate::term::{Action, BasicAction, Focus, Thread};

/// Settings for [`trace_match`].
#[derive(Debug, Clone, Copy)]
pub struct MatchOptions {
    /// Thread constructors followed along any path before giving up and
    /// accepting.
    pub depth: usize,
    pub encoding: TlsEncoding,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            depth: 64,
            encoding: TlsEncoding::Literal,
        }
    }
}

type Transitions = Vec<(ProcAction, Next)>;

struct Matcher<'a> {
    alpha: &'a [Thread],
    opts: MatchOptions,
    assumed: HashSet<(Thread, ProcTerm)>,
}

fn snd(b: &BasicAction) -> ProcAction {
    ProcAction::Snd(b.focus.clone(), Datum::Method(b.method.clone()))
}

fn rcv(f: &Focus, r: Reply) -> ProcAction {
    ProcAction::Rcv(f.clone(), Datum::Reply(r))
}

/// The target of the only transition, if it is labelled `label` and does
/// not terminate.
fn only(ts: &Transitions, label: &ProcAction) -> Option<ProcTerm> {
    match ts.as_slice() {
        [(a, Next::Term(q))] if a == label => Some(q.clone()),
        _ => None,
    }
}

/// The non-terminating target labelled `label` among `ts`.
fn find(ts: &Transitions, label: &ProcAction) -> Option<ProcTerm> {
    ts.iter().find_map(|(a, n)| match n {
        Next::Term(q) if a == label => Some(q.clone()),
        _ => None,
    })
}

impl Matcher<'_> {
    fn stuck(&self, q: &ProcTerm) -> Result<bool> {
        Ok(proc_step(q)?.is_empty())
    }

    /// `i` followed by nothing.
    fn dead(&self, ts: &Transitions) -> Result<bool> {
        match only(ts, &ProcAction::I) {
            Some(q) => self.stuck(&q),
            None => Ok(false),
        }
    }

    fn tau(&mut self, ts: &Transitions, x: &Thread, depth: usize) -> Result<bool> {
        let Some(q) = only(ts, &ProcAction::I) else {
            return Ok(false);
        };
        let Some(r) = only(&proc_step(&q)?, &ProcAction::I) else {
            return Ok(false);
        };
        self.go(x, &r, depth - 1)
    }

    fn replies(
        &mut self,
        q: &ProcTerm,
        f: &Focus,
        branches: &[(Reply, &Thread)],
        depth: usize,
    ) -> Result<bool> {
        let ts = proc_step(q)?;
        if ts.len() != branches.len() {
            return Ok(false);
        }
        for (r, x) in branches {
            let Some(next) = find(&ts, &rcv(f, *r)) else {
                return Ok(false);
            };
            if !self.go(x, &next, depth - 1)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `tls.init` followed by fragment `i` (1-based, valid).
    fn init(&mut self, ts: &Transitions, i: usize, depth: usize) -> Result<bool> {
        let init = BasicAction::tls_init();
        let fragment = &self.alpha[i - 1];
        match self.opts.encoding {
            TlsEncoding::Literal => match only(ts, &ProcAction::Lit(init)) {
                Some(q) => self.go(fragment, &q, depth - 1),
                None => Ok(false),
            },
            TlsEncoding::Pattern => match only(ts, &snd(&init)) {
                Some(q) => self.replies(
                    &q,
                    &init.focus,
                    &[(Reply::True, fragment), (Reply::False, fragment)],
                    depth,
                ),
                None => Ok(false),
            },
        }
    }

    /// Selections `1..=count` followed by `then(j)`, plus the deadlock
    /// alternative.
    fn selection(
        &mut self,
        ts: &Transitions,
        count: usize,
        then: &mut dyn FnMut(&mut Self, usize, &ProcTerm) -> Result<bool>,
    ) -> Result<bool> {
        if ts.len() != count + 1 {
            return Ok(false);
        }
        for j in 1..=count {
            let Some(q) = find(ts, &ProcAction::RcvExt(j as u64)) else {
                return Ok(false);
            };
            if !then(self, j, &q)? {
                return Ok(false);
            }
        }
        match find(ts, &ProcAction::I) {
            Some(q) => self.stuck(&q),
            None => Ok(false),
        }
    }

    fn go(&mut self, t: &Thread, p: &ProcTerm, depth: usize) -> Result<bool> {
        if depth == 0 || !self.assumed.insert((t.clone(), p.clone())) {
            return Ok(true);
        }
        let ts = proc_step(p)?;
        let head = t.head();
        match head.as_ref() {
            Thread::Stop => Ok(matches!(
                ts.as_slice(),
                [(ProcAction::Stp, Next::Terminated)]
            )),
            Thread::Deadlock => self.dead(&ts),
            Thread::Pcc(Action::Tau, x, _) => self.tau(&ts, x, depth),
            Thread::Pcs(Action::Tau, xs) => self.tau(&ts, &xs[0], depth),
            Thread::Pcc(Action::Basic(b), x, y) => match only(&ts, &snd(b)) {
                Some(q) => {
                    self.replies(&q, &b.focus, &[(Reply::True, x), (Reply::False, y)], depth)
                }
                None => Ok(false),
            },
            Thread::Pcs(Action::Basic(b), xs) => match only(&ts, &snd(b)) {
                Some(q) => {
                    let branches: Vec<(Reply, &Thread)> = xs
                        .iter()
                        .enumerate()
                        .map(|(j, x)| (Reply::Nat(j as u64 + 1), x))
                        .collect();
                    self.replies(&q, &b.focus, &branches, depth)
                }
                None => Ok(false),
            },
            Thread::Switch(i) if (1..=self.alpha.len()).contains(i) => self.init(&ts, *i, depth),
            Thread::Switch(_) => self.dead(&ts),
            Thread::Extern => {
                let k = self.alpha.len();
                self.selection(&ts, k, &mut |m, j, q| {
                    let next = proc_step(q)?;
                    m.init(&next, j, depth)
                })
            }
            Thread::Choice(xs) => {
                let xs = xs.clone();
                self.selection(&ts, xs.len(), &mut |m, j, q| m.go(&xs[j - 1], q, depth - 1))
            }
            Thread::Mig(..) => Err(Error::MigrationOutsideDistribution),
            Thread::Var(v) => Err(Error::UnboundVariable(v.clone())),
            Thread::Rec(_) => unreachable!("head is unfolded"),
        }
    }
}

/// Whether the process `p` behaves as `spt(t, alpha)` step for step: a
/// basic action `f.m` is a send of `m` over `f` answered by a receive of
/// each possible reply, `tau` is two internal steps, termination is `stp`,
/// deadlock an internal step into inaction, and a selection among `k`
/// alternatives is `k` external receives plus the deadlock alternative.
///
/// Paths are compared up to `opts.depth` thread constructors.
pub fn trace_match(t: &Thread, alpha: &[Thread], p: &ProcTerm, opts: MatchOptions) -> Result<bool> {
    Matcher {
        alpha,
        opts,
        assumed: HashSet::new(),
    }
    .go(t, p, opts.depth)
}

/// Whether `p` behaves as the thread-level use `t /f H` in the sense of
/// [`trace_match`].
pub fn use_match(
    t: &Thread,
    focus: &Focus,
    service: &Service,
    p: &ProcTerm,
    opts: MatchOptions,
) -> Result<bool> {
    let used = use_service(t, focus, service)?;
    trace_match(&used, &[], p, opts)
}

//! Poly-threading: sequencing of program fragments through switch-overs,
//! and the internalization of external thread selection.

use crate::build::{build, Node};
use crate::error::{Error, Result};
use crate::exec::{run_sequential, ReplySource, Resolver, Trace};
use crate::service::Reply;
use crate::term::{Action, Focus, Method, Thread, DEFAULT_STATE_LIMIT};

/// Executes `spt(t, alpha)`.
///
/// A switch-over to a valid fragment performs `tls.init` (answered by the
/// reply source like any other basic action) and continues with the
/// fragment; an invalid switch-over deadlocks. `Extern` asks the resolver,
/// where choice 0 is the deadlock alternative.
pub fn spt(
    t: &Thread,
    alpha: &[Thread],
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    run_sequential(t, Some(alpha), replies, resolver, max_steps)
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum SptKey {
    At(Thread),
    /// `tls.init o spt(alpha[j], alpha)`, 0-based.
    Init(usize),
}

/// The thread denoted by `spt(t, alpha)`. External selections appear as
/// choice nodes over the `tls.init`-prefixed continuations.
pub fn spt_term(t: &Thread, alpha: &[Thread]) -> Result<Thread> {
    build(SptKey::At(t.clone()), DEFAULT_STATE_LIMIT, |key| {
        let t = match key {
            SptKey::Init(j) => {
                let next = SptKey::At(alpha[*j].clone());
                return Ok(Node::Pcc(Action::tls_init(), next.clone(), next));
            }
            SptKey::At(t) => t.head(),
        };
        let at = |x: &Thread| SptKey::At(x.clone());
        Ok(match t.as_ref() {
            Thread::Stop => Node::Stop,
            Thread::Deadlock => Node::Deadlock,
            Thread::Pcc(a, x, y) => Node::Pcc(a.clone(), at(x), at(y)),
            Thread::Pcs(a, xs) => Node::Pcs(a.clone(), xs.iter().map(at).collect()),
            Thread::Switch(i) if (1..=alpha.len()).contains(i) => {
                let next = at(&alpha[i - 1]);
                Node::Pcc(Action::tls_init(), next.clone(), next)
            }
            Thread::Switch(_) => Node::Deadlock,
            Thread::Extern if alpha.is_empty() => Node::Deadlock,
            Thread::Extern => Node::Choice((0..alpha.len()).map(SptKey::Init).collect()),
            Thread::Choice(xs) => Node::Choice(xs.iter().map(at).collect()),
            Thread::Mig(..) => return Err(Error::MigrationOutsideDistribution),
            Thread::Var(v) => return Err(Error::UnboundVariable(v.clone())),
            Thread::Rec(_) => unreachable!("head is unfolded"),
        })
    })
}

/// Simultaneously `Extern -> Switch(k+1)` and `Switch(k+1) -> D`.
pub fn rho(t: &Thread, k: usize) -> Thread {
    t.map_bottom_up(&|t| match t {
        Thread::Extern => Thread::Switch(k + 1),
        Thread::Switch(i) if i == k + 1 => Thread::Deadlock,
        other => other,
    })
}

/// Replaces external selection by a selector fragment appended at
/// position `k + 1` that asks the environment (focus `ext`) which fragment
/// to start: `Pcs(ext.sel, [Switch(1), ..., Switch(k)])`.
pub fn internalize(p: &Thread, ps: &[Thread]) -> Result<(Thread, Vec<Thread>)> {
    if ps.is_empty() {
        return internalize_with(p, ps, Thread::Deadlock);
    }
    let selector = Thread::pcs(
        Action::basic(Focus::ext(), Method::sel()),
        (1..=ps.len()).map(Thread::Switch).collect(),
    );
    internalize_with(p, ps, selector)
}

/// As [`internalize`], but the selector halves the candidate range with one
/// boolean question per split, so it performs between `floor(log2 k)` and
/// `ceil(log2 k)` actions.
pub fn internalize_binary(p: &Thread, ps: &[Thread]) -> Result<(Thread, Vec<Thread>)> {
    internalize_with(p, ps, binary_selector(1, ps.len()))
}

fn internalize_with(p: &Thread, ps: &[Thread], selector: Thread) -> Result<(Thread, Vec<Thread>)> {
    let k = ps.len();
    if k == 0 {
        return Err(Error::MalformedTerm(
            "internalization needs at least one fragment".into(),
        ));
    }
    let mut fragments: Vec<Thread> = ps.iter().map(|x| rho(x, k)).collect();
    fragments.push(selector);
    Ok((rho(p, k), fragments))
}

/// Method asking whether the wanted fragment lies in the lower half of
/// `[lo, hi]`.
pub fn split_method(lo: usize, hi: usize) -> Method {
    Method::new(&format!("sel_{lo}_{hi}")).expect("valid identifier")
}

/// Selector over the fragments `[lo, hi]`; an empty range is `D`.
pub fn binary_selector(lo: usize, hi: usize) -> Thread {
    if lo > hi {
        return Thread::Deadlock;
    }
    if lo == hi {
        return Thread::Switch(lo);
    }
    let half = (hi - lo + 1) / 2;
    Thread::pcc(
        Action::basic(Focus::ext(), split_method(lo, hi)),
        binary_selector(lo, lo + half - 1),
        binary_selector(lo + half, hi),
    )
}

/// Replies the environment gives the binary selector over `[1, k]` to
/// select fragment `j`; choice 0 (deadlock) is a single blocked reply.
pub fn binary_replies(k: usize, j: usize) -> Vec<Reply> {
    if j == 0 || j > k {
        return vec![Reply::Blocked];
    }
    let (mut lo, mut hi) = (1, k);
    let mut out = Vec::new();
    while lo < hi {
        let half = (hi - lo + 1) / 2;
        if j < lo + half {
            out.push(Reply::True);
            hi = lo + half - 1;
        } else {
            out.push(Reply::False);
            lo += half;
        }
    }
    out
}

/// Replies the `k`-ary selector gets for the choices `sigma`.
pub fn switch_replies(sigma: &[usize]) -> Vec<Reply> {
    sigma
        .iter()
        .map(|&j| {
            if j == 0 {
                Reply::Blocked
            } else {
                Reply::Nat(j as u64)
            }
        })
        .collect()
}

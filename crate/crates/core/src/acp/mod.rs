//! Process terms in the style of ACP with conditions, the action alphabet
//! and communication function relating threads and services to processes,
//! and the translation of threads and services into process terms.

mod matching;
mod print;
mod step;
mod translate;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::service::{Reply, Service};
use crate::term::{BasicAction, Focus, Method};

pub use matching::{trace_match, use_match, MatchOptions};
pub use print::{print_proc, transition_dump};
pub use step::{proc_step, Next};
pub use translate::{translate_service, translate_thread, translate_use, TlsEncoding, UseParts};

/// What travels over a focus channel: a method one way, a reply back.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Datum {
    Method(Method),
    Reply(Reply),
}

/// Process actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProcAction {
    Snd(Focus, Datum),
    Rcv(Focus, Datum),
    SndExt(u64),
    RcvExt(u64),
    /// `stp`: the thread side of termination.
    Stp,
    /// `stp-bar`: the service side of termination.
    StpBar,
    /// `stp*`: both sides together.
    StpStar,
    /// The internal action `i`.
    I,
    SndServ(Reply),
    RcvServ(Method),
    /// A basic action written as an atomic action, as the translation of
    /// switch-overs does with `tls.init`.
    Lit(BasicAction),
}

/// The communication function: defined on three kinds of pairs only.
pub fn comm(a: &ProcAction, b: &ProcAction) -> Option<ProcAction> {
    use ProcAction::*;
    match (a, b) {
        (Snd(f, d), Rcv(g, e)) | (Rcv(g, e), Snd(f, d)) if f == g && d == e => Some(I),
        (SndExt(n), RcvExt(m)) | (RcvExt(m), SndExt(n)) if n == m => Some(I),
        (Stp, StpBar) | (StpBar, Stp) => Some(StpStar),
        _ => None,
    }
}

/// Encapsulation sets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ActionSet {
    Explicit(BTreeSet<ProcAction>),
    /// `A_f`: every send and receive over focus `f`.
    Focus(Focus),
}

impl ActionSet {
    pub fn contains(&self, a: &ProcAction) -> bool {
        match self {
            ActionSet::Explicit(set) => set.contains(a),
            ActionSet::Focus(f) => {
                matches!(a, ProcAction::Snd(g, _) | ProcAction::Rcv(g, _) if g == f)
            }
        }
    }

    /// `{stp, stp-bar}`.
    pub fn stops() -> ActionSet {
        ActionSet::Explicit([ProcAction::Stp, ProcAction::StpBar].into_iter().collect())
    }
}

/// `A_f`.
pub fn encap_af(f: &Focus) -> ActionSet {
    ActionSet::Focus(f.clone())
}

/// Action renamings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Renaming {
    /// `stp* -> stp`.
    StarToStp,
    /// `R_f`: service-side actions become actions over focus `f`.
    Rf(Focus),
    /// Exchanges two actions.
    Swap(ProcAction, ProcAction),
}

impl Renaming {
    pub fn apply(&self, a: &ProcAction) -> ProcAction {
        match (self, a) {
            (Renaming::StarToStp, ProcAction::StpStar) => ProcAction::Stp,
            (Renaming::Rf(f), ProcAction::SndServ(r)) => {
                ProcAction::Snd(f.clone(), Datum::Reply(*r))
            }
            (Renaming::Rf(f), ProcAction::RcvServ(m)) => {
                ProcAction::Rcv(f.clone(), Datum::Method(m.clone()))
            }
            (Renaming::Swap(x, y), a) if a == x => y.clone(),
            (Renaming::Swap(x, y), a) if a == y => x.clone(),
            _ => a.clone(),
        }
    }
}

/// `R_f(a)`.
pub fn rename_rf(f: &Focus, a: &ProcAction) -> ProcAction {
    Renaming::Rf(f.clone()).apply(a)
}

/// Conditions over concrete service states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cond {
    Top,
    Bot,
    /// `H(<m>) = r`.
    Atom {
        service: Service,
        method: Method,
        reply: Reply,
    },
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

impl Cond {
    pub fn eval(&self) -> bool {
        match self {
            Cond::Top => true,
            Cond::Bot => false,
            Cond::Atom {
                service,
                method,
                reply,
            } => service.reply(method) == *reply,
            Cond::Not(c) => !c.eval(),
            Cond::And(a, b) => a.eval() && b.eval(),
            Cond::Or(a, b) => a.eval() || b.eval(),
        }
    }
}

/// Process terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProcTerm {
    /// `delta`.
    Dead,
    Act(ProcAction),
    Alt(Box<ProcTerm>, Box<ProcTerm>),
    Seq(Box<ProcTerm>, Box<ProcTerm>),
    /// `c :-> p`.
    Guard(Cond, Box<ProcTerm>),
    Par(Box<ProcTerm>, Box<ProcTerm>),
    Encap(ActionSet, Box<ProcTerm>),
    Rename(Renaming, Box<ProcTerm>),
    Rec(Arc<str>, Arc<ProcSpec>),
    Var(Arc<str>),
}

impl ProcTerm {
    pub fn act(a: ProcAction) -> ProcTerm {
        ProcTerm::Act(a)
    }

    pub fn alt(p: ProcTerm, q: ProcTerm) -> ProcTerm {
        ProcTerm::Alt(Box::new(p), Box::new(q))
    }

    pub fn seq(p: ProcTerm, q: ProcTerm) -> ProcTerm {
        ProcTerm::Seq(Box::new(p), Box::new(q))
    }

    /// `a . p`.
    pub fn prefix(a: ProcAction, p: ProcTerm) -> ProcTerm {
        ProcTerm::seq(ProcTerm::Act(a), p)
    }

    pub fn par(p: ProcTerm, q: ProcTerm) -> ProcTerm {
        ProcTerm::Par(Box::new(p), Box::new(q))
    }

    pub fn encap(h: ActionSet, p: ProcTerm) -> ProcTerm {
        ProcTerm::Encap(h, Box::new(p))
    }

    pub fn rename(f: Renaming, p: ProcTerm) -> ProcTerm {
        ProcTerm::Rename(f, Box::new(p))
    }

    pub fn guard(c: Cond, p: ProcTerm) -> ProcTerm {
        ProcTerm::Guard(c, Box::new(p))
    }

    /// Right-associated alternatives; `delta` when empty.
    pub fn sum(terms: Vec<ProcTerm>) -> ProcTerm {
        let mut iter = terms.into_iter().rev();
        match iter.next() {
            None => ProcTerm::Dead,
            Some(last) => iter.fold(last, |acc, t| ProcTerm::alt(t, acc)),
        }
    }

    /// `i . delta`: the translation of deadlock.
    pub fn stuck() -> ProcTerm {
        ProcTerm::prefix(ProcAction::I, ProcTerm::Dead)
    }

    /// Applies `f` to every node bottom-up, not entering specifications.
    pub fn map(&self, f: &dyn Fn(ProcTerm) -> ProcTerm) -> ProcTerm {
        let boxed = |p: &ProcTerm| Box::new(p.map(f));
        let rebuilt = match self {
            ProcTerm::Alt(p, q) => ProcTerm::Alt(boxed(p), boxed(q)),
            ProcTerm::Seq(p, q) => ProcTerm::Seq(boxed(p), boxed(q)),
            ProcTerm::Par(p, q) => ProcTerm::Par(boxed(p), boxed(q)),
            ProcTerm::Guard(c, p) => ProcTerm::Guard(c.clone(), boxed(p)),
            ProcTerm::Encap(h, p) => ProcTerm::Encap(h.clone(), boxed(p)),
            ProcTerm::Rename(r, p) => ProcTerm::Rename(r.clone(), boxed(p)),
            leaf => leaf.clone(),
        };
        f(rebuilt)
    }
}

/// A recursive specification over process terms.
#[derive(Debug, Clone)]
pub struct ProcSpec {
    equations: BTreeMap<String, ProcTerm>,
    digest: u64,
}

impl ProcSpec {
    pub fn new(equations: BTreeMap<String, ProcTerm>) -> Arc<ProcSpec> {
        let mut hasher = DefaultHasher::new();
        equations.hash(&mut hasher);
        Arc::new(ProcSpec {
            digest: hasher.finish(),
            equations,
        })
    }

    pub fn equations(&self) -> &BTreeMap<String, ProcTerm> {
        &self.equations
    }

    pub fn body(&self, name: &str) -> Option<&ProcTerm> {
        self.equations.get(name)
    }
}

impl PartialEq for ProcSpec {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest && self.equations == other.equations
    }
}

impl Eq for ProcSpec {}

impl Hash for ProcSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest);
    }
}

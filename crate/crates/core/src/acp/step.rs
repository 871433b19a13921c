use std::sync::Arc;

use super::{comm, ProcAction, ProcSpec, ProcTerm};
use crate::error::{Error, Result};

/// How many recursion constants may be unfolded in a row before the
/// specification is deemed unguarded.
const UNFOLD_LIMIT: usize = 64;

/// Where a transition leads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Next {
    /// Successful termination.
    Terminated,
    Term(ProcTerm),
}

impl Next {
    fn map(self, f: impl FnOnce(ProcTerm) -> ProcTerm) -> Next {
        match self {
            Next::Terminated => Next::Terminated,
            Next::Term(p) => Next::Term(f(p)),
        }
    }
}

/// The outgoing transitions of `p`, without duplicates, in a fixed order.
pub fn proc_step(p: &ProcTerm) -> Result<Vec<(ProcAction, Next)>> {
    let mut out = Vec::new();
    steps(p, 0, &mut out)?;
    let mut unique: Vec<(ProcAction, Next)> = Vec::with_capacity(out.len());
    for t in out {
        if !unique.contains(&t) {
            unique.push(t);
        }
    }
    Ok(unique)
}

fn collect(p: &ProcTerm, unfolds: usize) -> Result<Vec<(ProcAction, Next)>> {
    let mut out = Vec::new();
    steps(p, unfolds, &mut out)?;
    Ok(out)
}

fn steps(p: &ProcTerm, unfolds: usize, out: &mut Vec<(ProcAction, Next)>) -> Result<()> {
    match p {
        ProcTerm::Dead => {}
        ProcTerm::Act(a) => out.push((a.clone(), Next::Terminated)),
        ProcTerm::Alt(p, q) => {
            steps(p, unfolds, out)?;
            steps(q, unfolds, out)?;
        }
        ProcTerm::Seq(p, q) => {
            for (a, n) in collect(p, unfolds)? {
                let next = match n {
                    Next::Terminated => Next::Term((**q).clone()),
                    Next::Term(p1) => Next::Term(ProcTerm::seq(p1, (**q).clone())),
                };
                out.push((a, next));
            }
        }
        ProcTerm::Guard(c, p) => {
            if c.eval() {
                steps(p, unfolds, out)?;
            }
        }
        ProcTerm::Par(p, q) => {
            let left = collect(p, unfolds)?;
            let right = collect(q, unfolds)?;
            for (a, n) in &left {
                out.push((
                    a.clone(),
                    match n {
                        Next::Terminated => Next::Term((**q).clone()),
                        Next::Term(p1) => Next::Term(ProcTerm::par(p1.clone(), (**q).clone())),
                    },
                ));
            }
            for (b, n) in &right {
                out.push((
                    b.clone(),
                    match n {
                        Next::Terminated => Next::Term((**p).clone()),
                        Next::Term(q1) => Next::Term(ProcTerm::par((**p).clone(), q1.clone())),
                    },
                ));
            }
            for (a, np) in &left {
                for (b, nq) in &right {
                    if let Some(c) = comm(a, b) {
                        let next = match (np, nq) {
                            (Next::Terminated, Next::Terminated) => Next::Terminated,
                            (Next::Terminated, Next::Term(q1)) => Next::Term(q1.clone()),
                            (Next::Term(p1), Next::Terminated) => Next::Term(p1.clone()),
                            (Next::Term(p1), Next::Term(q1)) => {
                                Next::Term(ProcTerm::par(p1.clone(), q1.clone()))
                            }
                        };
                        out.push((c, next));
                    }
                }
            }
        }
        ProcTerm::Encap(h, p) => {
            for (a, n) in collect(p, unfolds)? {
                if !h.contains(&a) {
                    out.push((a, n.map(|p1| ProcTerm::encap(h.clone(), p1))));
                }
            }
        }
        ProcTerm::Rename(f, p) => {
            for (a, n) in collect(p, unfolds)? {
                out.push((f.apply(&a), n.map(|p1| ProcTerm::rename(f.clone(), p1))));
            }
        }
        ProcTerm::Rec(name, spec) => {
            if unfolds >= UNFOLD_LIMIT {
                return Err(Error::Unguarded(name.to_string()));
            }
            let body = spec
                .body(name)
                .ok_or_else(|| Error::UnboundVariable(name.to_string()))?;
            steps(&instantiate(body, spec), unfolds + 1, out)?;
        }
        ProcTerm::Var(v) => return Err(Error::UnboundVariable(v.to_string())),
    }
    Ok(())
}

/// Turns the variables of `body` into constants over `spec`.
pub(crate) fn instantiate(body: &ProcTerm, spec: &Arc<ProcSpec>) -> ProcTerm {
    body.map(&|t| match t {
        ProcTerm::Var(v) => ProcTerm::Rec(v, spec.clone()),
        other => other,
    })
}

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::{encap_af, ActionSet, Datum, ProcAction, ProcSpec, ProcTerm, Renaming};
use crate::error::{Error, Result};
use crate::service::{Reply, Service};
use crate::term::{Action, BasicAction, Focus, Method, RecSpec, Thread, DEFAULT_STATE_LIMIT};

/// How the `tls.init` performed by a switch-over is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TlsEncoding {
    /// As one atomic action.
    #[default]
    Literal,
    /// As a request over focus `tls` followed by either boolean reply, so
    /// that a `tls` service can answer it.
    Pattern,
}

fn snd(b: &BasicAction) -> ProcAction {
    ProcAction::Snd(b.focus.clone(), Datum::Method(b.method.clone()))
}

fn rcv(f: &Focus, r: Reply) -> ProcAction {
    ProcAction::Rcv(f.clone(), Datum::Reply(r))
}

struct Translator<'a> {
    alpha: &'a [Thread],
    encoding: TlsEncoding,
    specs: HashMap<*const RecSpec, usize>,
    keep: Vec<Arc<RecSpec>>,
    fragments: BTreeSet<usize>,
    equations: BTreeMap<String, ProcTerm>,
    pending: VecDeque<(String, Thread, Option<usize>)>,
}

impl Translator<'_> {
    fn spec_id(&mut self, spec: &Arc<RecSpec>) -> usize {
        let key = Arc::as_ptr(spec);
        if let Some(id) = self.specs.get(&key) {
            return *id;
        }
        let id = self.keep.len();
        self.specs.insert(key, id);
        self.keep.push(spec.clone());
        for (name, body) in spec.equations() {
            self.pending
                .push_back((format!("X{id}_{name}"), body.clone(), Some(id)));
        }
        id
    }

    fn fragment(&mut self, i: usize) -> ProcTerm {
        if self.fragments.insert(i) {
            self.pending
                .push_back((format!("F{i}"), self.alpha[i - 1].clone(), None));
        }
        ProcTerm::Var(format!("F{i}").into())
    }

    fn init(&self, then: ProcTerm) -> ProcTerm {
        let init = BasicAction::tls_init();
        match self.encoding {
            TlsEncoding::Literal => ProcTerm::prefix(ProcAction::Lit(init), then),
            TlsEncoding::Pattern => ProcTerm::prefix(
                snd(&init),
                ProcTerm::alt(
                    ProcTerm::prefix(rcv(&init.focus, Reply::True), then.clone()),
                    ProcTerm::prefix(rcv(&init.focus, Reply::False), then),
                ),
            ),
        }
    }

    fn switch(&mut self, i: usize) -> ProcTerm {
        if (1..=self.alpha.len()).contains(&i) {
            let f = self.fragment(i);
            self.init(f)
        } else {
            ProcTerm::stuck()
        }
    }

    fn term(&mut self, t: &Thread, ctx: Option<usize>) -> Result<ProcTerm> {
        Ok(match t {
            Thread::Stop => ProcTerm::Act(ProcAction::Stp),
            Thread::Deadlock => ProcTerm::stuck(),
            Thread::Pcc(Action::Tau, x, _) => tau(self.term(x, ctx)?),
            Thread::Pcc(Action::Basic(b), x, y) => {
                let x = self.term(x, ctx)?;
                let y = self.term(y, ctx)?;
                ProcTerm::prefix(
                    snd(b),
                    ProcTerm::alt(
                        ProcTerm::prefix(rcv(&b.focus, Reply::True), x),
                        ProcTerm::prefix(rcv(&b.focus, Reply::False), y),
                    ),
                )
            }
            Thread::Pcs(Action::Tau, xs) => tau(self.term(&xs[0], ctx)?),
            Thread::Pcs(Action::Basic(b), xs) => {
                let mut alts = Vec::with_capacity(xs.len());
                for (j, x) in xs.iter().enumerate() {
                    alts.push(ProcTerm::prefix(
                        rcv(&b.focus, Reply::Nat(j as u64 + 1)),
                        self.term(x, ctx)?,
                    ));
                }
                ProcTerm::prefix(snd(b), ProcTerm::sum(alts))
            }
            Thread::Switch(i) => self.switch(*i),
            Thread::Extern => {
                let mut alts = Vec::with_capacity(self.alpha.len() + 1);
                for j in 1..=self.alpha.len() {
                    alts.push(ProcTerm::prefix(
                        ProcAction::RcvExt(j as u64),
                        self.switch(j),
                    ));
                }
                alts.push(ProcTerm::stuck());
                ProcTerm::sum(alts)
            }
            Thread::Choice(xs) => {
                let mut alts = Vec::with_capacity(xs.len() + 1);
                for (j, x) in xs.iter().enumerate() {
                    alts.push(ProcTerm::prefix(
                        ProcAction::RcvExt(j as u64 + 1),
                        self.term(x, ctx)?,
                    ));
                }
                alts.push(ProcTerm::stuck());
                ProcTerm::sum(alts)
            }
            Thread::Mig(..) => return Err(Error::MigrationOutsideDistribution),
            Thread::Rec(r) => {
                let id = self.spec_id(r.spec());
                ProcTerm::Var(format!("X{id}_{}", r.name()).into())
            }
            Thread::Var(v) => match ctx {
                Some(id) => ProcTerm::Var(format!("X{id}_{v}").into()),
                None => return Err(Error::UnboundVariable(v.clone())),
            },
        })
    }

    fn finish(mut self, root: &Thread) -> Result<ProcTerm> {
        let top = self.term(root, None)?;
        while let Some((name, body, ctx)) = self.pending.pop_front() {
            let translated = self.term(&body, ctx)?;
            self.equations.insert(name, translated);
        }
        if self.equations.is_empty() {
            return Ok(top);
        }
        let root_name: Arc<str> = match top {
            ProcTerm::Var(v) => v,
            other => {
                self.equations.insert("P".to_string(), other);
                "P".into()
            }
        };
        Ok(ProcTerm::Rec(root_name, ProcSpec::new(self.equations)))
    }
}

fn tau(then: ProcTerm) -> ProcTerm {
    ProcTerm::prefix(ProcAction::I, ProcTerm::prefix(ProcAction::I, then))
}

/// The process term for `spt(t, alpha)` (or for `t` alone when `alpha` is
/// empty and `t` has no switch-overs). Every recursion involved, including
/// cycles through fragments, ends up in one specification.
pub fn translate_thread(t: &Thread, alpha: &[Thread], encoding: TlsEncoding) -> Result<ProcTerm> {
    Translator {
        alpha,
        encoding,
        specs: HashMap::new(),
        keep: Vec::new(),
        fragments: BTreeSet::new(),
        equations: BTreeMap::new(),
        pending: VecDeque::new(),
    }
    .finish(t)
}

/// The process term for a service restricted to `methods`: one equation
/// per reachable state, each accepting any of the methods, sending the
/// reply and moving to the derived state, or stopping.
///
/// A blocked reply leaves the state alone; the thread side cannot accept
/// it anyway.
pub fn translate_service(s: &Service, methods: &BTreeSet<Method>) -> Result<ProcTerm> {
    let mut index: HashMap<Service, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut equations = BTreeMap::new();
    index.insert(s.clone(), 0);
    queue.push_back(s.clone());
    while let Some(state) = queue.pop_front() {
        let me = index[&state];
        let mut alts = Vec::with_capacity(methods.len() + 1);
        for m in methods {
            let (reply, derived) = state.step(m);
            let next = if reply.is_blocked() {
                state.clone()
            } else {
                derived
            };
            let target = match index.get(&next) {
                Some(j) => *j,
                None => {
                    let j = index.len();
                    if j >= DEFAULT_STATE_LIMIT {
                        return Err(Error::Overflow {
                            limit: DEFAULT_STATE_LIMIT,
                        });
                    }
                    index.insert(next.clone(), j);
                    queue.push_back(next);
                    j
                }
            };
            alts.push(ProcTerm::prefix(
                ProcAction::RcvServ(m.clone()),
                ProcTerm::prefix(
                    ProcAction::SndServ(reply),
                    ProcTerm::Var(format!("H{target}").into()),
                ),
            ));
        }
        alts.push(ProcTerm::Act(ProcAction::StpBar));
        equations.insert(format!("H{me}"), ProcTerm::sum(alts));
    }
    Ok(ProcTerm::Rec("H0".into(), ProcSpec::new(equations)))
}

/// The two halves of a translated use and the focus joining them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseParts {
    pub focus: Focus,
    pub thread: ProcTerm,
    pub service: ProcTerm,
}

impl UseParts {
    /// `rho_{stp* -> stp}(d_{stp, stp-bar}(d_{A_f}(thread || rho_{R_f}(service))))`.
    pub fn compose(&self) -> ProcTerm {
        let merged = ProcTerm::encap(encap_af(&self.focus), self.merged());
        ProcTerm::rename(
            Renaming::StarToStp,
            ProcTerm::encap(ActionSet::stops(), merged),
        )
    }

    /// As [`UseParts::compose`] with the `A_f` encapsulation left out.
    pub fn compose_unencapsulated(&self) -> ProcTerm {
        ProcTerm::rename(
            Renaming::StarToStp,
            ProcTerm::encap(ActionSet::stops(), self.merged()),
        )
    }

    fn merged(&self) -> ProcTerm {
        ProcTerm::par(
            self.thread.clone(),
            ProcTerm::rename(Renaming::Rf(self.focus.clone()), self.service.clone()),
        )
    }
}

/// Translates `t` (with fragments `alpha`) and `service` for a use over
/// `focus`. The service only needs the methods the threads send it.
pub fn translate_use(
    t: &Thread,
    focus: &Focus,
    service: &Service,
    alpha: &[Thread],
    encoding: TlsEncoding,
) -> Result<UseParts> {
    let mut methods = BTreeSet::new();
    for x in std::iter::once(t).chain(alpha) {
        for a in x.actions() {
            if let Action::Basic(b) = a {
                if &b.focus == focus {
                    methods.insert(b.method);
                }
            }
        }
    }
    Ok(UseParts {
        focus: focus.clone(),
        thread: translate_thread(t, alpha, encoding)?,
        service: translate_service(service, &methods)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acp::{proc_step, Next};
    use crate::dsl::parse_thread;

    fn th(s: &str) -> Thread {
        parse_thread(s).unwrap()
    }

    #[test]
    fn basic_constructors() {
        assert_eq!(
            translate_thread(&Thread::Stop, &[], TlsEncoding::Literal).unwrap(),
            ProcTerm::Act(ProcAction::Stp)
        );
        assert_eq!(
            translate_thread(&Thread::Deadlock, &[], TlsEncoding::Literal).unwrap(),
            ProcTerm::stuck()
        );
        let p = translate_thread(&th("(tau S)"), &[], TlsEncoding::Literal).unwrap();
        assert_eq!(p, tau(ProcTerm::Act(ProcAction::Stp)));
        let p = translate_thread(&th("(pcc f.m S D)"), &[], TlsEncoding::Literal).unwrap();
        let ts = proc_step(&p).unwrap();
        assert_eq!(ts.len(), 1);
        let Next::Term(rest) = &ts[0].1 else { panic!() };
        assert_eq!(proc_step(rest).unwrap().len(), 2);
        assert!(translate_thread(&th("(mig 1 S S)"), &[], TlsEncoding::Literal).is_err());
    }

    #[test]
    fn switch_overs() {
        let p =
            translate_thread(&Thread::Switch(2), &[Thread::Stop], TlsEncoding::Literal).unwrap();
        assert_eq!(p, ProcTerm::stuck());
        let p = translate_thread(
            &Thread::Switch(1),
            &[Thread::Switch(1)],
            TlsEncoding::Literal,
        )
        .unwrap();
        let ProcTerm::Rec(_, spec) = &p else {
            panic!("{p:?}")
        };
        assert_eq!(spec.equations().len(), 2);
        let p = translate_thread(
            &Thread::Extern,
            &[Thread::Stop, Thread::Deadlock],
            TlsEncoding::Pattern,
        )
        .unwrap();
        let labels: Vec<ProcAction> = proc_step(&p).unwrap().into_iter().map(|(a, _)| a).collect();
        assert_eq!(
            labels,
            vec![ProcAction::RcvExt(1), ProcAction::RcvExt(2), ProcAction::I]
        );
    }

    #[test]
    fn recursion_flattens() {
        let p =
            translate_thread(&th("(rec X (X (pcc f.a X S)))"), &[], TlsEncoding::Literal).unwrap();
        let ProcTerm::Rec(root, spec) = &p else {
            panic!()
        };
        assert_eq!(&**root, "X0_X");
        assert_eq!(spec.equations().len(), 1);
    }

    #[test]
    fn services() {
        let methods: BTreeSet<Method> = ["inc", "dec"]
            .iter()
            .map(|m| Method::new(m).unwrap())
            .collect();
        let p = translate_service(
            &Service::Counter {
                value: 0,
                max: Some(2),
            },
            &methods,
        )
        .unwrap();
        let ProcTerm::Rec(_, spec) = &p else { panic!() };
        assert_eq!(spec.equations().len(), 3);
        let p = translate_service(&Service::Blocked, &methods).unwrap();
        let ProcTerm::Rec(_, spec) = &p else { panic!() };
        assert_eq!(spec.equations().len(), 1);
    }
}

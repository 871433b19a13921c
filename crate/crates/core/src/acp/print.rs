use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde_json::{json, Value};

use super::{proc_step, ActionSet, Cond, Datum, Next, ProcAction, ProcSpec, ProcTerm, Renaming};
use crate::error::{Error, Result};

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Method(m) => write!(f, "{m}"),
            Datum::Reply(r) => write!(f, "{r}"),
        }
    }
}

impl fmt::Display for ProcAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcAction::Snd(g, d) => write!(f, "snd_{g}({d})"),
            ProcAction::Rcv(g, d) => write!(f, "rcv_{g}({d})"),
            ProcAction::SndExt(n) => write!(f, "snd_ext({n})"),
            ProcAction::RcvExt(n) => write!(f, "rcv_ext({n})"),
            ProcAction::Stp => f.write_str("stp"),
            ProcAction::StpBar => f.write_str("stp~"),
            ProcAction::StpStar => f.write_str("stp*"),
            ProcAction::I => f.write_str("i"),
            ProcAction::SndServ(r) => write!(f, "snd_serv({r})"),
            ProcAction::RcvServ(m) => write!(f, "rcv_serv({m})"),
            ProcAction::Lit(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Top => f.write_str("true"),
            Cond::Bot => f.write_str("false"),
            Cond::Atom {
                service,
                method,
                reply,
            } => write!(f, "{}({method})={reply}", service.kind()),
            Cond::Not(c) => write!(f, "!{c}"),
            Cond::And(a, b) => write!(f, "({a} & {b})"),
            Cond::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionSet::Focus(g) => write!(f, "A_{g}"),
            ActionSet::Explicit(set) => {
                let items: Vec<String> = set.iter().map(ToString::to_string).collect();
                write!(f, "{{{}}}", items.join(","))
            }
        }
    }
}

impl fmt::Display for Renaming {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Renaming::StarToStp => f.write_str("stp*->stp"),
            Renaming::Rf(g) => write!(f, "R_{g}"),
            Renaming::Swap(a, b) => write!(f, "{a}<->{b}"),
        }
    }
}

fn level(p: &ProcTerm) -> u8 {
    match p {
        ProcTerm::Alt(..) => 0,
        ProcTerm::Par(..) => 1,
        ProcTerm::Guard(..) => 2,
        ProcTerm::Seq(..) => 3,
        _ => 4,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, p: &ProcTerm, min: u8) -> fmt::Result {
    if level(p) < min {
        write!(f, "(")?;
        write_term(f, p)?;
        write!(f, ")")
    } else {
        write_term(f, p)
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, p: &ProcTerm) -> fmt::Result {
    match p {
        ProcTerm::Dead => f.write_str("delta"),
        ProcTerm::Act(a) => write!(f, "{a}"),
        ProcTerm::Alt(p, q) => {
            write_at(f, p, 1)?;
            f.write_str(" + ")?;
            write_at(f, q, 0)
        }
        ProcTerm::Par(p, q) => {
            write_at(f, p, 2)?;
            f.write_str(" || ")?;
            write_at(f, q, 1)
        }
        ProcTerm::Guard(c, p) => {
            write!(f, "{c} :-> ")?;
            write_at(f, p, 2)
        }
        ProcTerm::Seq(p, q) => {
            write_at(f, p, 4)?;
            f.write_str(" . ")?;
            write_at(f, q, 3)
        }
        ProcTerm::Encap(h, p) => {
            write!(f, "encap[{h}](")?;
            write_term(f, p)?;
            f.write_str(")")
        }
        ProcTerm::Rename(r, p) => {
            write!(f, "rename[{r}](")?;
            write_term(f, p)?;
            f.write_str(")")
        }
        ProcTerm::Rec(name, _) | ProcTerm::Var(name) => f.write_str(name),
    }
}

impl fmt::Display for ProcTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self)
    }
}

fn specs_of(p: &ProcTerm, out: &mut Vec<Arc<ProcSpec>>, seen: &mut BTreeSet<*const ProcSpec>) {
    match p {
        ProcTerm::Rec(_, spec) => {
            if seen.insert(Arc::as_ptr(spec)) {
                out.push(spec.clone());
                for body in spec.equations().values() {
                    specs_of(body, out, seen);
                }
            }
        }
        ProcTerm::Alt(p, q) | ProcTerm::Seq(p, q) | ProcTerm::Par(p, q) => {
            specs_of(p, out, seen);
            specs_of(q, out, seen);
        }
        ProcTerm::Guard(_, p) | ProcTerm::Encap(_, p) | ProcTerm::Rename(_, p) => {
            specs_of(p, out, seen)
        }
        _ => {}
    }
}

/// The term on the first line, then one `X = body` line per equation of
/// every specification it refers to.
pub fn print_proc(p: &ProcTerm) -> String {
    let mut specs = Vec::new();
    specs_of(p, &mut specs, &mut BTreeSet::new());
    let mut out = p.to_string();
    for spec in specs {
        for (name, body) in spec.equations() {
            out.push_str(&format!("\n  {name} = {body}"));
        }
    }
    out
}

/// The transition system reachable from `p`, as
/// `{"states": [...], "transitions": [{"from", "action", "to"}]}` where
/// `to` is null for successful termination.
pub fn transition_dump(p: &ProcTerm, limit: usize) -> Result<Value> {
    let mut index: HashMap<ProcTerm, usize> = HashMap::new();
    let mut states = vec![p.clone()];
    let mut queue = VecDeque::from([0usize]);
    let mut transitions = Vec::new();
    index.insert(p.clone(), 0);
    while let Some(i) = queue.pop_front() {
        for (a, next) in proc_step(&states[i].clone())? {
            let to = match next {
                Next::Terminated => Value::Null,
                Next::Term(q) => {
                    let j = match index.get(&q) {
                        Some(j) => *j,
                        None => {
                            if states.len() >= limit {
                                return Err(Error::Overflow { limit });
                            }
                            let j = states.len();
                            index.insert(q.clone(), j);
                            states.push(q);
                            queue.push_back(j);
                            j
                        }
                    };
                    json!(j)
                }
            };
            transitions.push(json!({"from": i, "action": a.to_string(), "to": to}));
        }
    }
    Ok(json!({
        "states": states.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "transitions": transitions,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acp::{translate_thread, TlsEncoding};
    use crate::dsl::parse_thread;

    #[test]
    fn printing() {
        let t = parse_thread("(pcc f.a S D)").unwrap();
        let p = translate_thread(&t, &[], TlsEncoding::Literal).unwrap();
        assert_eq!(
            print_proc(&p),
            "snd_f(a) . (rcv_f(T) . stp + rcv_f(F) . i . delta)"
        );
        let t = parse_thread("(rec X (X (tau X)))").unwrap();
        let p = translate_thread(&t, &[], TlsEncoding::Literal).unwrap();
        assert_eq!(print_proc(&p), "X0_X\n  X0_X = i . i . X0_X");
    }

    #[test]
    fn dumping() {
        let t = parse_thread("(rec X (X (pcc f.a X S)))").unwrap();
        let p = translate_thread(&t, &[], TlsEncoding::Literal).unwrap();
        let v = transition_dump(&p, 100).unwrap();
        assert_eq!(v["states"].as_array().unwrap().len(), 3);
        assert_eq!(v["transitions"].as_array().unwrap().len(), 4);
        assert!(transition_dump(&p, 2).is_err());
    }
}

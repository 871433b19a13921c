//! S-expression syntax for threads.
//!
//! ```text
//! S  D  extern  (switch i)
//! (pcc f.m <t> <t>)   (pcc tau <t> <t>)   (tau <t>)
//! (pcs f.m <t> ...)   (choice <t> ...)    (mig n <t> <t>)
//! (rec X (X <t>) (Y <t>) ...)             X   ; a variable of the innermost rec
//! ```
//!
//! `;` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::term::{is_var_name, Action, RecSpec, Thread};

#[derive(Debug, Clone)]
pub(crate) enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    pub(crate) fn line(&self) -> usize {
        match self {
            Sexp::Atom(_, l) | Sexp::List(_, l) => *l,
        }
    }
}

pub(crate) fn read_all(src: &str) -> Result<Vec<Sexp>> {
    let mut tokens = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let code = line.split(';').next().unwrap_or("");
        let mut atom = String::new();
        for c in code.chars() {
            match c {
                '(' | ')' => {
                    if !atom.is_empty() {
                        tokens.push((std::mem::take(&mut atom), line_no));
                    }
                    tokens.push((c.to_string(), line_no));
                }
                c if c.is_whitespace() => {
                    if !atom.is_empty() {
                        tokens.push((std::mem::take(&mut atom), line_no));
                    }
                }
                c => atom.push(c),
            }
        }
        if !atom.is_empty() {
            tokens.push((atom, line_no));
        }
    }
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        out.push(read_one(&tokens, &mut pos)?);
    }
    Ok(out)
}

fn read_one(tokens: &[(String, usize)], pos: &mut usize) -> Result<Sexp> {
    let (tok, line) = &tokens[*pos];
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(Error::parse(*line, "unclosed `(`")),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *line));
                    }
                    Some(_) => items.push(read_one(tokens, pos)?),
                }
            }
        }
        ")" => Err(Error::parse(*line, "unexpected `)`")),
        atom => Ok(Sexp::Atom(atom.to_string(), *line)),
    }
}

/// Parses exactly one thread.
pub fn parse_thread(src: &str) -> Result<Thread> {
    let mut items = read_all(src)?;
    match items.len() {
        1 => thread_of(&items.remove(0), &BTreeSet::new()),
        0 => Err(Error::parse(1, "empty input")),
        _ => Err(Error::parse(items[1].line(), "trailing input after thread")),
    }
}

pub(crate) fn thread_of(sexp: &Sexp, scope: &BTreeSet<String>) -> Result<Thread> {
    match sexp {
        Sexp::Atom(a, line) => match a.as_str() {
            "S" => Ok(Thread::Stop),
            "D" => Ok(Thread::Deadlock),
            "extern" => Ok(Thread::Extern),
            v if scope.contains(v) => Ok(Thread::Var(v.to_string())),
            v => Err(Error::parse(*line, format!("unknown atom `{v}`"))),
        },
        Sexp::List(items, line) => {
            let line = *line;
            let (head, args) = match items.split_first() {
                Some((Sexp::Atom(h, _), rest)) => (h.as_str(), rest),
                _ => return Err(Error::parse(line, "expected an operator")),
            };
            let arity = |n: usize| {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(line, format!("`{head}` takes {n} arguments")))
                }
            };
            let sub = |s: &Sexp| thread_of(s, scope);
            match head {
                "pcc" => {
                    arity(3)?;
                    Ok(Thread::pcc(
                        action_of(&args[0])?,
                        sub(&args[1])?,
                        sub(&args[2])?,
                    ))
                }
                "tau" => {
                    arity(1)?;
                    Ok(Thread::tau(sub(&args[0])?))
                }
                "pcs" => {
                    if args.len() < 2 {
                        return Err(Error::parse(
                            line,
                            "`pcs` needs an action and at least one branch",
                        ));
                    }
                    let branches = args[1..].iter().map(sub).collect::<Result<Vec<_>>>()?;
                    Ok(Thread::Pcs(action_of(&args[0])?, branches))
                }
                "choice" => {
                    if args.is_empty() {
                        return Err(Error::parse(line, "`choice` needs at least one branch"));
                    }
                    Ok(Thread::Choice(args.iter().map(sub).collect::<Result<_>>()?))
                }
                "switch" => {
                    arity(1)?;
                    Ok(Thread::Switch(nat_of(&args[0])? as usize))
                }
                "mig" => {
                    arity(3)?;
                    Ok(Thread::mig(
                        nat_of(&args[0])?,
                        sub(&args[1])?,
                        sub(&args[2])?,
                    ))
                }
                "rec" => rec_of(args, line),
                other => Err(Error::parse(line, format!("unknown operator `{other}`"))),
            }
        }
    }
}

fn rec_of(args: &[Sexp], line: usize) -> Result<Thread> {
    let root = match args.first() {
        Some(Sexp::Atom(name, _)) => name.clone(),
        _ => return Err(Error::parse(line, "`rec` needs a root variable")),
    };
    let mut names = BTreeSet::new();
    let mut raw = Vec::new();
    for eq in &args[1..] {
        match eq {
            Sexp::List(parts, l) if parts.len() == 2 => match &parts[0] {
                Sexp::Atom(name, _) if is_var_name(name) => {
                    if !names.insert(name.clone()) {
                        return Err(Error::parse(*l, format!("variable `{name}` defined twice")));
                    }
                    raw.push((name.clone(), &parts[1]));
                }
                _ => return Err(Error::parse(*l, "equation must start with a variable name")),
            },
            other => {
                return Err(Error::parse(
                    other.line(),
                    "expected an equation `(X <thread>)`",
                ))
            }
        }
    }
    let mut equations = BTreeMap::new();
    for (name, body) in raw {
        equations.insert(name, thread_of(body, &names)?);
    }
    let spec = RecSpec::new(equations).map_err(|e| Error::parse(line, e.to_string()))?;
    Thread::rec(&root, spec).map_err(|e| Error::parse(line, e.to_string()))
}

fn action_of(s: &Sexp) -> Result<Action> {
    match s {
        Sexp::Atom(a, line) => a
            .parse()
            .map_err(|e: Error| Error::parse(*line, e.to_string())),
        other => Err(Error::parse(other.line(), "expected an action")),
    }
}

fn nat_of(s: &Sexp) -> Result<u64> {
    match s {
        Sexp::Atom(a, line) => a
            .parse()
            .map_err(|_| Error::parse(*line, format!("expected a natural number, got `{a}`"))),
        other => Err(Error::parse(other.line(), "expected a natural number")),
    }
}

/// Prints a thread so that [`parse_thread`] reads it back unchanged.
pub fn print_thread(t: &Thread) -> String {
    let mut out = String::new();
    write_thread(t, &mut out);
    out
}

fn write_thread(t: &Thread, out: &mut String) {
    let list = |out: &mut String, head: &str, args: &[&Thread]| {
        out.push('(');
        out.push_str(head);
        for a in args {
            out.push(' ');
            write_thread(a, out);
        }
        out.push(')');
    };
    match t {
        Thread::Stop => out.push('S'),
        Thread::Deadlock => out.push('D'),
        Thread::Extern => out.push_str("extern"),
        Thread::Switch(i) => out.push_str(&format!("(switch {i})")),
        Thread::Var(v) => out.push_str(v),
        Thread::Pcc(Action::Tau, x, y) if x == y => list(out, "tau", &[x]),
        Thread::Pcc(a, x, y) => list(out, &format!("pcc {a}"), &[x, y]),
        Thread::Pcs(a, xs) => list(out, &format!("pcs {a}"), &xs.iter().collect::<Vec<_>>()),
        Thread::Choice(xs) => list(out, "choice", &xs.iter().collect::<Vec<_>>()),
        Thread::Mig(n, x, y) => list(out, &format!("mig {n}"), &[x, y]),
        Thread::Rec(r) => {
            out.push_str("(rec ");
            out.push_str(r.name());
            for (name, body) in r.spec().equations() {
                out.push_str(" (");
                out.push_str(name);
                out.push(' ');
                write_thread(body, out);
                out.push(')');
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_form() {
        let t = parse_thread("(pcc f.m S (pcs g.n D extern (switch 2)))").unwrap();
        assert_eq!(
            print_thread(&t),
            "(pcc f.m S (pcs g.n D extern (switch 2)))"
        );
        let t = parse_thread("(tau (mig 3 S D))").unwrap();
        assert_eq!(
            t,
            Thread::tau(Thread::mig(3, Thread::Stop, Thread::Deadlock))
        );
        let t = parse_thread("(choice S D)").unwrap();
        assert_eq!(t, Thread::choice(vec![Thread::Stop, Thread::Deadlock]));
        assert_eq!(
            parse_thread("(pcc tau S D)").unwrap(),
            Thread::pcc(Action::Tau, Thread::Stop, Thread::Deadlock)
        );
    }

    #[test]
    fn parses_recursion() {
        let src = "(rec X (X (pcc f.a X Y)) (Y (tau X)))";
        let t = parse_thread(src).unwrap();
        assert!(matches!(t, Thread::Rec(_)));
        assert_eq!(parse_thread(&print_thread(&t)).unwrap(), t);
    }

    #[test]
    fn comments_and_whitespace() {
        let t = parse_thread("; a loop\n(rec X\n  (X (tau X))) ; trailing").unwrap();
        assert_eq!(t.reachable_states(4).len(), Some(1));
    }

    #[test]
    fn errors_carry_lines() {
        assert!(matches!(
            parse_thread("(pcc f.m S)"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_thread("S\n(D"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_thread("\n\nX"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_thread("(rec X (X X))").is_err());
        assert!(parse_thread("(rec X (Y S))").is_err());
        assert!(parse_thread("(pcc F.m S S)").is_err());
        assert!(parse_thread("S S").is_err());
        assert!(parse_thread("").is_err());
    }
}

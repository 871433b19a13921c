//! Instruction sequences with switch-over instructions, thread extraction,
//! and the execution architecture built from a program, a fragment vector
//! and services.
//!
//! File format, one instruction per line:
//!
//! ```text
//! a f.m     ; plain basic instruction
//! + f.m     ; positive test: skip the next instruction on reply false
//! - f.m     ; negative test: skip the next instruction on reply true
//! # 3       ; absolute jump to position 3 (1-based)
//! !         ; halt
//! swo 2     ; switch over to fragment 2
//! ```

use std::collections::HashSet;
use std::fmt;

use crate::build::{build, Node};
use crate::error::{Error, Result};
use crate::exec::{run_thread, Environment, ReplySource, Resolver, Trace};
use crate::poly::spt;
use crate::service::{Reply, Service, ServiceMap};
use crate::term::{Action, BasicAction, Focus, Thread};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instr {
    Plain(BasicAction),
    PosTest(BasicAction),
    NegTest(BasicAction),
    /// Absolute, 1-based.
    Jump(usize),
    Halt,
    Swo(usize),
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Plain(a) => write!(f, "a {a}"),
            Instr::PosTest(a) => write!(f, "+ {a}"),
            Instr::NegTest(a) => write!(f, "- {a}"),
            Instr::Jump(k) => write!(f, "# {k}"),
            Instr::Halt => f.write_str("!"),
            Instr::Swo(i) => write!(f, "swo {i}"),
        }
    }
}

fn parse_line(line: usize, text: &str) -> Result<Instr> {
    let mut words = text.split_whitespace();
    let op = words.next().unwrap_or_default();
    let arg = words.next();
    if words.next().is_some() {
        return Err(Error::parse(line, "trailing input"));
    }
    let action = |arg: Option<&str>| -> Result<BasicAction> {
        arg.ok_or_else(|| Error::parse(line, format!("`{op}` needs a basic action")))?
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))
    };
    let number = |arg: Option<&str>| -> Result<usize> {
        arg.ok_or_else(|| Error::parse(line, format!("`{op}` needs a number")))?
            .parse()
            .map_err(|_| Error::parse(line, "expected a natural number"))
    };
    match op {
        "a" => Ok(Instr::Plain(action(arg)?)),
        "+" => Ok(Instr::PosTest(action(arg)?)),
        "-" => Ok(Instr::NegTest(action(arg)?)),
        "#" => Ok(Instr::Jump(number(arg)?)),
        "swo" => Ok(Instr::Swo(number(arg)?)),
        "!" if arg.is_none() => Ok(Instr::Halt),
        other => Err(Error::parse(line, format!("unknown instruction `{other}`"))),
    }
}

/// Parses an instruction sequence; blank lines and `;` comments are
/// ignored, and at least one instruction is required.
pub fn parse_program(src: &str) -> Result<Vec<Instr>> {
    let mut out = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let text = raw.split(';').next().unwrap_or_default().trim();
        if !text.is_empty() {
            out.push(parse_line(i + 1, text)?);
        }
    }
    if out.is_empty() {
        return Err(Error::parse(0, "empty instruction sequence"));
    }
    Ok(out)
}

/// One instruction per line.
pub fn print_program(p: &[Instr]) -> String {
    p.iter().map(|i| format!("{i}\n")).collect()
}

/// Follows jumps from position `j` to the first non-jump; `None` for
/// positions outside the sequence and for jump cycles.
fn settle(p: &[Instr], mut j: usize) -> Option<usize> {
    let mut seen = HashSet::new();
    loop {
        if j == 0 || j > p.len() || !seen.insert(j) {
            return None;
        }
        match &p[j - 1] {
            Instr::Jump(k) => j = *k,
            _ => return Some(j),
        }
    }
}

/// The thread a sequence denotes when execution starts at position 1.
/// `swo i` becomes `Switch(i)` whatever follows it; running off either end,
/// jumping outside, or looping through jumps alone yields `D`.
pub fn extract(p: &[Instr]) -> Thread {
    build(settle(p, 1), p.len() + 2, |&j| {
        let Some(j) = j else {
            return Ok(Node::Deadlock);
        };
        let at = |k: usize| settle(p, k);
        Ok(match &p[j - 1] {
            Instr::Plain(a) => Node::Pcc(Action::Basic(a.clone()), at(j + 1), at(j + 1)),
            Instr::PosTest(a) => Node::Pcc(Action::Basic(a.clone()), at(j + 1), at(j + 2)),
            Instr::NegTest(a) => Node::Pcc(Action::Basic(a.clone()), at(j + 2), at(j + 1)),
            Instr::Halt => Node::Stop,
            Instr::Swo(i) => Node::Switch(*i),
            Instr::Jump(_) => unreachable!("settled"),
        })
    })
    .expect("one state per position")
}

/// A program, its fragment vector and the services processing their
/// actions.
#[derive(Debug, Clone, Default)]
pub struct Architecture {
    pub program: Vec<Instr>,
    pub fragments: Vec<Vec<Instr>>,
    pub services: ServiceMap,
}

impl Architecture {
    /// Services in force: the configured ones, plus a `tls` service
    /// replying true unless one is configured.
    pub fn environment(&self) -> Environment {
        let mut services = self.services.clone();
        services
            .entry(Focus::tls())
            .or_insert_with(|| Service::constant(Reply::True));
        Environment::new(services)
    }
}

/// Executes `spt(extr(P), <extr(P1), ..., extr(Pn)>)` under the services of
/// `arch`. Actions on other foci go to `fallback`, or fail as unserved.
pub fn run_architecture(
    arch: &Architecture,
    fallback: Option<Box<dyn ReplySource>>,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut env = arch.environment();
    if let Some(source) = fallback {
        env = env.with_fallback(source);
    }
    let program = extract(&arch.program);
    if arch.fragments.is_empty() && !program.has_switch_over() {
        return run_thread(&program, &mut env, resolver, max_steps);
    }
    let alpha: Vec<Thread> = arch.fragments.iter().map(|f| extract(f)).collect();
    spt(&program, &alpha, &mut env, resolver, max_steps)
}

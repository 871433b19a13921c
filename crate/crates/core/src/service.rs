//! Services and thread-service composition.
//!
//! A service is a deterministic reply machine. Replying to a method never
//! mutates the service; [`Service::derive`] returns the service that remains
//! after the method has been processed. Once a service has replied
//! `Blocked`, every derived service is [`Service::Blocked`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::build::{build, Node};
use crate::error::{Error, Result};
use crate::term::{Action, Focus, Method, Thread, DEFAULT_STATE_LIMIT};

/// A service reply. `Nat` replies (always at least 1) select branches of a
/// postconditional switch.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Reply {
    True,
    False,
    Blocked,
    Nat(u64),
}

impl Reply {
    pub fn is_blocked(self) -> bool {
        matches!(self, Reply::Blocked)
    }
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reply::True => f.write_str("T"),
            Reply::False => f.write_str("F"),
            Reply::Blocked => f.write_str("B"),
            Reply::Nat(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Reply {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(Reply::True),
            "F" => Ok(Reply::False),
            "B" => Ok(Reply::Blocked),
            n => match n.parse::<u64>() {
                Ok(n) if n >= 1 => Ok(Reply::Nat(n)),
                _ => Err(Error::MalformedParams(format!("bad reply `{s}`"))),
            },
        }
    }
}

impl Reply {
    pub fn from_json(v: &Value) -> Result<Reply> {
        match v {
            Value::String(s) => s.parse(),
            Value::Number(n) => match n.as_u64() {
                Some(n) if n >= 1 => Ok(Reply::Nat(n)),
                _ => Err(Error::MalformedParams(format!("bad reply `{n}`"))),
            },
            other => Err(Error::MalformedParams(format!("bad reply `{other}`"))),
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            Reply::Nat(n) => Value::from(n),
            other => Value::from(other.to_string()),
        }
    }
}

impl Serialize for Reply {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Reply {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        Reply::from_json(&v).map_err(D::Error::custom)
    }
}

/// Built-in reply machines.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Service {
    /// Natural-number counter: `inc`, `dec`, `iszero`. `dec` at zero and
    /// `inc` at the optional cap reply false and leave the value alone.
    Counter { value: u64, max: Option<u64> },
    /// Boolean register: `get`, `set_true`, `set_false`.
    Register(bool),
    /// Bit stack, top at the end: `push0`, `push1`, `pop` (replies the
    /// popped bit; blocked when empty), `empty`.
    Stack(Vec<bool>),
    /// Replays the listed replies, one per method, then blocks.
    Scripted(Vec<Reply>),
    /// Replies the same value to every method.
    Constant(Reply),
    /// Replies `Blocked` to everything.
    Blocked,
}

fn bool_reply(b: bool) -> Reply {
    if b {
        Reply::True
    } else {
        Reply::False
    }
}

impl Service {
    pub fn counter(value: u64) -> Service {
        Service::Counter { value, max: None }
    }

    pub fn constant(reply: Reply) -> Service {
        if reply.is_blocked() {
            Service::Blocked
        } else {
            Service::Constant(reply)
        }
    }

    pub fn scripted(replies: Vec<Reply>) -> Service {
        Service::Scripted(replies)
    }

    /// `H(<m>)`.
    pub fn reply(&self, m: &Method) -> Reply {
        self.step(m).0
    }

    /// `d/dm H`: behaves on `rho` as `self` does on `<m> ^ rho`.
    pub fn derive(&self, m: &Method) -> Service {
        self.step(m).1
    }

    /// Reply and successor in one go.
    pub fn step(&self, m: &Method) -> (Reply, Service) {
        let (reply, next) = match self {
            Service::Counter { value, max } => match m.as_str() {
                "inc" if Some(*value) == *max => (Reply::False, self.clone()),
                "inc" => (
                    Reply::True,
                    Service::Counter {
                        value: value + 1,
                        max: *max,
                    },
                ),
                "dec" if *value == 0 => (Reply::False, self.clone()),
                "dec" => (
                    Reply::True,
                    Service::Counter {
                        value: value - 1,
                        max: *max,
                    },
                ),
                "iszero" => (bool_reply(*value == 0), self.clone()),
                _ => (Reply::Blocked, Service::Blocked),
            },
            Service::Register(b) => match m.as_str() {
                "get" => (bool_reply(*b), self.clone()),
                "set_true" => (Reply::True, Service::Register(true)),
                "set_false" => (Reply::True, Service::Register(false)),
                _ => (Reply::Blocked, Service::Blocked),
            },
            Service::Stack(bits) => match m.as_str() {
                "push0" | "push1" => {
                    let mut bits = bits.clone();
                    bits.push(m.as_str() == "push1");
                    (Reply::True, Service::Stack(bits))
                }
                "pop" => match bits.split_last() {
                    Some((&top, rest)) => (bool_reply(top), Service::Stack(rest.to_vec())),
                    None => (Reply::Blocked, Service::Blocked),
                },
                "empty" => (bool_reply(bits.is_empty()), self.clone()),
                _ => (Reply::Blocked, Service::Blocked),
            },
            Service::Scripted(replies) => match replies.split_first() {
                Some((&r, rest)) if !r.is_blocked() && !rest.is_empty() => {
                    (r, Service::Scripted(rest.to_vec()))
                }
                Some((&r, _)) => (r, Service::Blocked),
                None => (Reply::Blocked, Service::Blocked),
            },
            Service::Constant(r) => (*r, self.clone()),
            Service::Blocked => (Reply::Blocked, Service::Blocked),
        };
        if reply.is_blocked() {
            (reply, Service::Blocked)
        } else {
            (reply, next)
        }
    }

    /// Methods the machine reacts to other than by blocking, when that set
    /// is fixed. Scripted and constant machines accept any method.
    pub fn vocabulary(&self) -> Vec<Method> {
        let names: &[&str] = match self {
            Service::Counter { .. } => &["inc", "dec", "iszero"],
            Service::Register(_) => &["get", "set_true", "set_false"],
            Service::Stack(_) => &["push0", "push1", "pop", "empty"],
            _ => &[],
        };
        names
            .iter()
            .map(|n| Method::new(n).expect("static identifier"))
            .collect()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Service::Counter { .. } => "nat_counter",
            Service::Register(_) => "bool_register",
            Service::Stack(_) => "stack",
            Service::Scripted(_) => "scripted",
            Service::Constant(_) => "constant",
            Service::Blocked => "blocked",
        }
    }
}

/// Builds one of the built-in machines from a JSON parameter object.
///
/// | kind            | params                                   |
/// |-----------------|------------------------------------------|
/// | `nat_counter`   | `init` (default 0), `max` (optional)     |
/// | `bool_register` | `init` (default false)                   |
/// | `stack`         | `init`: list of 0/1, top last (default []) |
/// | `scripted`      | `replies`: list of `"T"`/`"F"`/`"B"`/n   |
/// | `constant`      | `reply`                                  |
/// | `blocked`       | none                                     |
pub fn builtin_service(kind: &str, params: &Map<String, Value>) -> Result<Service> {
    let allowed: &[&str] = match kind {
        "nat_counter" => &["init", "max"],
        "bool_register" => &["init"],
        "stack" => &["init"],
        "scripted" => &["replies"],
        "constant" => &["reply"],
        "blocked" => &[],
        other => return Err(Error::UnknownService(other.to_string())),
    };
    if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::MalformedParams(format!(
            "unexpected parameter `{extra}` for {kind}"
        )));
    }
    let nat = |key: &str| -> Result<Option<u64>> {
        params
            .get(key)
            .map(|v| {
                v.as_u64().ok_or_else(|| {
                    Error::MalformedParams(format!("`{key}` must be a natural number"))
                })
            })
            .transpose()
    };
    match kind {
        "nat_counter" => {
            let value = nat("init")?.unwrap_or(0);
            let max = nat("max")?;
            if matches!(max, Some(m) if m < value) {
                return Err(Error::MalformedParams("`max` below `init`".into()));
            }
            Ok(Service::Counter { value, max })
        }
        "bool_register" => match params.get("init") {
            None => Ok(Service::Register(false)),
            Some(Value::Bool(b)) => Ok(Service::Register(*b)),
            Some(_) => Err(Error::MalformedParams("`init` must be a boolean".into())),
        },
        "stack" => match params.get("init") {
            None => Ok(Service::Stack(Vec::new())),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v.as_u64() {
                    Some(0) => Ok(false),
                    Some(1) => Ok(true),
                    _ => Err(Error::MalformedParams("stack bits must be 0 or 1".into())),
                })
                .collect::<Result<Vec<_>>>()
                .map(Service::Stack),
            Some(_) => Err(Error::MalformedParams("`init` must be a list".into())),
        },
        "scripted" => match params.get("replies") {
            Some(Value::Array(items)) => items
                .iter()
                .map(Reply::from_json)
                .collect::<Result<Vec<_>>>()
                .map(Service::Scripted),
            _ => Err(Error::MalformedParams("`replies` must be a list".into())),
        },
        "constant" => match params.get("reply") {
            Some(v) => Reply::from_json(v).map(Service::constant),
            None => Err(Error::MalformedParams("`reply` is required".into())),
        },
        _ => Ok(Service::Blocked),
    }
}

/// At most one service per focus.
pub type ServiceMap = BTreeMap<Focus, Service>;

/// One entry of a service configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub focus: String,
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

/// Parses a service configuration: a JSON list of `{focus, kind, params}`.
pub fn parse_services(src: &str) -> Result<ServiceMap> {
    let entries: Vec<ServiceConfig> =
        serde_json::from_str(src).map_err(|e| Error::Config(format!("services: {e}")))?;
    let mut map = ServiceMap::new();
    for entry in entries {
        let focus = Focus::new(&entry.focus)?;
        let service = builtin_service(&entry.kind, &entry.params)?;
        if map.insert(focus.clone(), service).is_some() {
            return Err(Error::Config(format!("focus `{focus}` configured twice")));
        }
    }
    Ok(map)
}

/// `t /f H`: every `f`-action of `t` is processed by `service` and becomes
/// `tau`; a blocked or ill-typed reply turns the thread into `D`.
///
/// The result is built over the reachable (thread state, service state)
/// pairs, so both must be finite-state; [`use_project`] materialises a
/// depth-bounded prefix instead.
pub fn use_service(t: &Thread, focus: &Focus, service: &Service) -> Result<Thread> {
    build(
        (t.clone(), service.clone()),
        DEFAULT_STATE_LIMIT,
        |(t, s)| Ok(use_step(&t.head(), focus, s)),
    )
}

fn use_step(t: &Thread, focus: &Focus, s: &Service) -> Node<(Thread, Service)> {
    let with = |x: &Thread, s: &Service| (x.clone(), s.clone());
    match t {
        Thread::Stop => Node::Stop,
        Thread::Deadlock => Node::Deadlock,
        Thread::Switch(i) => Node::Switch(*i),
        Thread::Extern => Node::Extern,
        Thread::Var(_) => Node::Deadlock,
        Thread::Choice(xs) => Node::Choice(xs.iter().map(|x| with(x, s)).collect()),
        Thread::Mig(n, x, y) => Node::Mig(*n, with(x, s), with(y, s)),
        Thread::Pcc(a, x, y) => match a {
            Action::Basic(b) if &b.focus == focus => {
                let (reply, next) = s.step(&b.method);
                match reply {
                    Reply::True => Node::Pcc(Action::Tau, with(x, &next), with(x, &next)),
                    Reply::False => Node::Pcc(Action::Tau, with(y, &next), with(y, &next)),
                    _ => Node::Deadlock,
                }
            }
            _ => Node::Pcc(a.clone(), with(x, s), with(y, s)),
        },
        Thread::Pcs(a, xs) => match a {
            Action::Basic(b) if &b.focus == focus => {
                let (reply, next) = s.step(&b.method);
                match reply {
                    Reply::Nat(i) if i >= 1 && (i as usize) <= xs.len() => {
                        let x = &xs[i as usize - 1];
                        Node::Pcc(Action::Tau, with(x, &next), with(x, &next))
                    }
                    _ => Node::Deadlock,
                }
            }
            _ => Node::Pcs(a.clone(), xs.iter().map(|x| with(x, s)).collect()),
        },
        Thread::Rec(_) => unreachable!("use_step receives unfolded terms"),
    }
}

/// The `depth`-projection of `t /f H`, computed on demand so that it also
/// works for infinite-state threads or services.
pub fn use_project(t: &Thread, focus: &Focus, service: &Service, depth: usize) -> Thread {
    if depth == 0 {
        return Thread::Deadlock;
    }
    let node = use_step(&t.head(), focus, service);
    let next = |(x, s): &(Thread, Service)| use_project(x, focus, s, depth - 1);
    match node {
        Node::Stop => Thread::Stop,
        Node::Deadlock => Thread::Deadlock,
        Node::Switch(i) => Thread::Switch(i),
        Node::Extern => Thread::Extern,
        Node::Pcc(a, x, y) => Thread::pcc(a, next(&x), next(&y)),
        Node::Pcs(a, xs) => Thread::Pcs(a, xs.iter().map(next).collect()),
        Node::Choice(xs) => Thread::Choice(xs.iter().map(next).collect()),
        Node::Mig(n, x, y) => Thread::mig(n, next(&x), next(&y)),
    }
}

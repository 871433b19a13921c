//! Turns an explicitly explored state space into a thread term.
//!
//! Operators such as use, poly-threading and interleaving are defined by
//! equations whose right-hand sides mention the operator again. For
//! finite-state arguments the reachable argument tuples form a finite graph;
//! each tuple becomes one equation of a guarded recursive specification.
//! Acyclic graphs of modest size are inlined into a plain tree instead.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use crate::error::{Error, Result};
use crate::term::{Action, RecRef, RecSpec, Thread};

const INLINE_LIMIT: usize = 4096;

/// One state of an operator's unfolding, with successor states as keys.
#[derive(Debug, Clone)]
pub(crate) enum Node<K> {
    Stop,
    Deadlock,
    Switch(usize),
    Extern,
    Pcc(Action, K, K),
    Pcs(Action, Vec<K>),
    Choice(Vec<K>),
    Mig(u64, K, K),
}

impl<K> Node<K> {
    fn keys(&self) -> Vec<&K> {
        match self {
            Node::Pcc(_, x, y) | Node::Mig(_, x, y) => vec![x, y],
            Node::Pcs(_, xs) | Node::Choice(xs) => xs.iter().collect(),
            _ => Vec::new(),
        }
    }

    fn map<L>(&self, mut f: impl FnMut(&K) -> L) -> Node<L> {
        match self {
            Node::Stop => Node::Stop,
            Node::Deadlock => Node::Deadlock,
            Node::Switch(i) => Node::Switch(*i),
            Node::Extern => Node::Extern,
            Node::Pcc(a, x, y) => Node::Pcc(a.clone(), f(x), f(y)),
            Node::Pcs(a, xs) => Node::Pcs(a.clone(), xs.iter().map(&mut f).collect()),
            Node::Choice(xs) => Node::Choice(xs.iter().map(&mut f).collect()),
            Node::Mig(n, x, y) => Node::Mig(*n, f(x), f(y)),
        }
    }

    fn is_leaf(&self) -> bool {
        matches!(
            self,
            Node::Stop | Node::Deadlock | Node::Switch(_) | Node::Extern
        )
    }
}

impl Node<Thread> {
    fn into_thread(self) -> Thread {
        match self {
            Node::Stop => Thread::Stop,
            Node::Deadlock => Thread::Deadlock,
            Node::Switch(i) => Thread::Switch(i),
            Node::Extern => Thread::Extern,
            Node::Pcc(a, x, y) => Thread::pcc(a, x, y),
            Node::Pcs(a, xs) => Thread::Pcs(a, xs),
            Node::Choice(xs) => Thread::Choice(xs),
            Node::Mig(n, x, y) => Thread::mig(n, x, y),
        }
    }
}

/// Explores from `root` with `expand` and returns the denoted thread.
pub(crate) fn build<K, F>(root: K, limit: usize, mut expand: F) -> Result<Thread>
where
    K: Clone + Eq + Hash,
    F: FnMut(&K) -> Result<Node<K>>,
{
    let mut index: HashMap<K, usize> = HashMap::new();
    let mut keys = vec![root.clone()];
    index.insert(root, 0);
    let mut nodes: Vec<Node<usize>> = Vec::new();
    while nodes.len() < keys.len() {
        let node = expand(&keys[nodes.len()])?;
        let mut overflow = false;
        let node = node.map(|k| match index.get(k) {
            Some(&id) => id,
            None => {
                let id = keys.len();
                if id >= limit {
                    overflow = true;
                }
                keys.push(k.clone());
                index.insert(k.clone(), id);
                id
            }
        });
        if overflow {
            return Err(Error::Overflow { limit });
        }
        nodes.push(node);
    }

    if let Some(size) = tree_size(&nodes) {
        if size <= INLINE_LIMIT {
            let mut memo = HashMap::new();
            return Ok(inline(0, &nodes, &mut memo));
        }
    }
    if nodes[0].is_leaf() {
        return Ok(leaf(&nodes[0]));
    }
    let name = |id: usize| format!("X{id}");
    let mut equations = BTreeMap::new();
    for (id, node) in nodes.iter().enumerate() {
        if node.is_leaf() {
            continue;
        }
        let body = node
            .map(|&child| {
                if nodes[child].is_leaf() {
                    leaf(&nodes[child])
                } else {
                    Thread::Var(name(child))
                }
            })
            .into_thread();
        equations.insert(name(id), body);
    }
    let spec = RecSpec::from_map_unchecked(equations);
    Ok(Thread::Rec(
        RecRef::new(&name(0), spec).expect("root equation exists"),
    ))
}

fn leaf(node: &Node<usize>) -> Thread {
    match node {
        Node::Stop => Thread::Stop,
        Node::Deadlock => Thread::Deadlock,
        Node::Switch(i) => Thread::Switch(*i),
        Node::Extern => Thread::Extern,
        _ => unreachable!("not a leaf"),
    }
}

/// Size of the unfolded tree, or `None` when the graph has a cycle.
fn tree_size(nodes: &[Node<usize>]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done(usize),
    }
    let mut marks = vec![Mark::New; nodes.len()];
    let mut stack = vec![(0usize, false)];
    while let Some((id, closing)) = stack.pop() {
        if closing {
            let size = nodes[id]
                .keys()
                .iter()
                .map(|&&c| match marks[c] {
                    Mark::Done(s) => s,
                    _ => unreachable!("children are closed first"),
                })
                .fold(1usize, |acc, s| acc.saturating_add(s));
            marks[id] = Mark::Done(size);
            continue;
        }
        match marks[id] {
            Mark::Done(_) => continue,
            Mark::Open => return None,
            Mark::New => {}
        }
        marks[id] = Mark::Open;
        stack.push((id, true));
        for &&child in nodes[id].keys().iter() {
            match marks[child] {
                Mark::Open => return None,
                Mark::New => stack.push((child, false)),
                Mark::Done(_) => {}
            }
        }
    }
    match marks[0] {
        Mark::Done(s) => Some(s),
        _ => None,
    }
}

fn inline(id: usize, nodes: &[Node<usize>], memo: &mut HashMap<usize, Thread>) -> Thread {
    if let Some(t) = memo.get(&id) {
        return t.clone();
    }
    let t = nodes[id].map(|&c| inline(c, nodes, memo)).into_thread();
    memo.insert(id, t.clone());
    t
}

//! Distributed interleaving with fragment searching.
//!
//! Each entry also records which program fragments are present at its
//! location. Right after a thread has had its turn, if its next step is a
//! switch-over to a fragment missing locally, the thread is moved to the
//! first location (in vector order) where that fragment is present.

use std::collections::BTreeSet;

use log::warn;

use crate::dist::{Carried, DistMachine, Loc, LocSet};
use crate::error::Result;
use crate::exec::{ReplySource, Resolver, Trace};
use crate::local::drive;
use crate::term::Thread;

/// Indices of the fragments present at a location.
pub type FragSet = BTreeSet<usize>;

/// `[gamma]_l^I`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FsEntry<T = Thread> {
    pub location: Loc,
    pub threads: Vec<T>,
    pub fragments: FragSet,
}

impl<T> FsEntry<T> {
    pub fn new(location: Loc, threads: Vec<T>, fragments: FragSet) -> Self {
        FsEntry {
            location,
            threads,
            fragments,
        }
    }
}

/// Appends `x` to the local vector of the first entry at `l`, keeping the
/// fragment sets; without such an entry the vector is returned unchanged.
pub fn appfs<T: Clone>(l: Loc, x: T, delta: &[FsEntry<T>]) -> Vec<FsEntry<T>> {
    let mut out = delta.to_vec();
    appfs_in_place(l, x, &mut out);
    out
}

pub(crate) fn appfs_in_place<T>(l: Loc, x: T, delta: &mut [FsEntry<T>]) -> bool {
    match delta.iter_mut().find(|e| e.location == l) {
        Some(entry) => {
            entry.threads.push(x);
            true
        }
        None => {
            warn!("no entry for location {l}; migrating thread dropped");
            false
        }
    }
}

/// The first location whose fragment set contains `i`, else `fallback`.
pub fn iml_prime<T>(i: usize, delta: &[FsEntry<T>], fallback: Loc) -> Loc {
    delta
        .iter()
        .find(|e| e.fragments.contains(&i))
        .map_or(fallback, |e| e.location)
}

/// Where the head thread of a non-empty vector should live for its next
/// turn: elsewhere only if it is about to switch over to a fragment that
/// is missing at its current location.
pub fn iml<T: Carried>(delta: &[FsEntry<T>]) -> Loc {
    let (first, rest) = delta.split_first().expect("iml of an empty vector");
    let l = first.location;
    match first.threads.first().map(|x| x.thread().head()) {
        Some(head) => match head.as_ref() {
            Thread::Switch(i) if !first.fragments.contains(i) => iml_prime(*i, rest, l),
            _ => l,
        },
        None => l,
    }
}

/// Cyclic permutation with implicit migration: the head entry minus its
/// first thread moves to the back, and that thread is appended at the
/// location given by [`iml`].
pub fn pv<T: Carried>(delta: &[FsEntry<T>]) -> Vec<FsEntry<T>> {
    match delta.first() {
        None => Vec::new(),
        Some(first) if first.threads.is_empty() => delta.to_vec(),
        Some(first) => {
            let target = iml(delta);
            let x = first.threads[0].clone();
            let mut out: Vec<FsEntry<T>> = delta[1..].to_vec();
            out.push(FsEntry {
                location: first.location,
                threads: first.threads[1..].to_vec(),
                fragments: first.fragments.clone(),
            });
            appfs_in_place(target, x, &mut out);
            out
        }
    }
}

/// Exactly one entry per configured location, and no others.
pub fn is_proper_fs<T>(delta: &[FsEntry<T>], locs: &LocSet) -> bool {
    crate::dist::is_proper(delta.iter().map(|e| &e.location), locs)
}

/// Executes `pci(delta, alpha)` with fragment searching. A switch-over to
/// fragment `i` needs `i` present locally and within the fragment vector.
pub fn pci_fs(
    delta: &[FsEntry],
    alpha: &[Thread],
    locs: &LocSet,
    replies: &mut dyn ReplySource,
    resolver: &mut Resolver,
    max_steps: usize,
) -> Result<Trace> {
    let mut machine = DistMachine::fragment_search(delta, alpha, locs);
    drive(
        |r, c, may| machine.step(r, c, may),
        replies,
        resolver,
        max_steps,
    )
}

//! Leader election on anonymous trees with one parent pointer per process.
//!
//! `Par` is stored as a local port so that the rotation `(Par + 1) mod deg`
//! is plain arithmetic, and `min` over neighbors uses port order.

use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use super::Specification;
use crate::error::{Error, Result};
use crate::system::{ActionId, LocalView, ProcessId, Protocol};
use crate::topology::Topology;

/// Parent pointer: `None` is the bottom value (the process claims leadership).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LeaderState(pub Option<u8>);

impl LeaderState {
    pub const BOTTOM: LeaderState = LeaderState(None);

    pub fn port(port: u8) -> Self {
        LeaderState(Some(port))
    }

    pub fn is_leader(self) -> bool {
        self.0.is_none()
    }
}

impl fmt::Display for LeaderState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("⊥"),
            Some(port) => write!(f, "#{port}"),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LeaderElection;

impl LeaderElection {
    pub const A1: ActionId = 0;
    pub const A2: ActionId = 1;
    pub const A3: ActionId = 2;

    pub fn new(topo: &Topology) -> Result<Self> {
        if !topo.is_tree() {
            return Err(Error::input("leader election needs a tree"));
        }
        if topo.max_degree() > u8::MAX as usize {
            return Err(Error::input("degree too large"));
        }
        Ok(LeaderElection)
    }
}

/// Ports of the neighbors whose parent pointer designates this process.
pub fn children(view: &LocalView<'_, LeaderState>) -> Vec<usize> {
    (0..view.degree())
        .filter(|&i| view.neighbor(i).0 == Some(view.back_port(i) as u8))
        .collect()
}

impl Protocol for LeaderElection {
    type State = LeaderState;

    fn name(&self) -> &str {
        "leader"
    }

    fn labels(&self) -> &[&'static str] {
        &["A1", "A2", "A3"]
    }

    fn domain(&self, topo: &Topology, p: ProcessId) -> Vec<LeaderState> {
        core::iter::once(LeaderState::BOTTOM)
            .chain((0..topo.degree(p) as u8).map(LeaderState::port))
            .collect()
    }

    fn guard(&self, view: &LocalView<'_, LeaderState>, action: ActionId) -> bool {
        let par = view.state().0;
        let kids = children(view);
        match action {
            Self::A1 => par.is_some() && kids.len() == view.degree(),
            Self::A2 => match par {
                Some(par) => (0..view.degree()).any(|i| i != par as usize && !kids.contains(&i)),
                None => false,
            },
            Self::A3 => par.is_none() && kids.len() < view.degree(),
            _ => false,
        }
    }

    fn execute(&self, view: &LocalView<'_, LeaderState>, action: ActionId, _rng: &mut dyn RngCore) -> LeaderState {
        match action {
            Self::A1 => LeaderState::BOTTOM,
            Self::A2 => {
                let par = view.state().0.expect("A2 runs with a parent") as usize;
                LeaderState::port(((par + 1) % view.degree()) as u8)
            }
            Self::A3 => {
                let kids = children(view);
                let first = (0..view.degree()).find(|i| !kids.contains(i)).expect("A3 runs with a non-child");
                LeaderState::port(first as u8)
            }
            _ => unreachable!("unknown leader action {action}"),
        }
    }
}

impl Specification for LeaderElection {
    fn is_legitimate(&self, topo: &Topology, cfg: &[LeaderState]) -> bool {
        is_lc(topo, cfg)
    }

    /// The leader does not change.
    fn observable(&self, _topo: &Topology, from: &[LeaderState], to: &[LeaderState]) -> bool {
        leaders(from) == leaders(to)
    }
}

/// Processes with a bottom parent pointer.
pub fn leaders(cfg: &[LeaderState]) -> Vec<ProcessId> {
    (0..cfg.len()).filter(|&p| cfg[p].is_leader()).collect()
}

/// Neighbor designated by the parent pointer of `p`.
pub fn parent(topo: &Topology, cfg: &[LeaderState], p: ProcessId) -> Option<ProcessId> {
    cfg[p].0.map(|port| topo.neighbor(p, port as usize))
}

/// Initial extremity of the maximal parent path ending at `p`: follow parent
/// pointers until a process with no parent, or one whose parent points back.
pub fn root(topo: &Topology, cfg: &[LeaderState], p: ProcessId) -> ProcessId {
    let mut cur = p;
    // A tree has no pointer cycle longer than two, so n hops always suffice.
    for _ in 0..topo.node_count() {
        match parent(topo, cfg, cur) {
            None => return cur,
            Some(q) if parent(topo, cfg, q) == Some(cur) => return cur,
            Some(q) => cur = q,
        }
    }
    cur
}

/// Exactly one leader, and it is the root of every process.
pub fn is_lc(topo: &Topology, cfg: &[LeaderState]) -> bool {
    let ls = leaders(cfg);
    if ls.len() != 1 {
        return false;
    }
    (0..topo.node_count()).all(|q| root(topo, cfg, q) == ls[0])
}

/// Rewrites a configuration given as parent identities (`None` for bottom)
/// into local ports.
pub fn from_parents(topo: &Topology, parents: &[Option<ProcessId>]) -> Result<Vec<LeaderState>> {
    if parents.len() != topo.node_count() {
        return Err(Error::input("one parent entry per process expected"));
    }
    parents
        .iter()
        .enumerate()
        .map(|(p, par)| match par {
            None => Ok(LeaderState::BOTTOM),
            Some(q) => topo
                .port_of(p, *q)
                .map(|i| LeaderState::port(i as u8))
                .ok_or_else(|| Error::input(alloc::format!("{q} is not a neighbor of {p}"))),
        })
        .collect()
}

/// Inverse of [`from_parents`].
pub fn to_parents(topo: &Topology, cfg: &[LeaderState]) -> Vec<Option<ProcessId>> {
    (0..cfg.len()).map(|p| parent(topo, cfg, p)).collect()
}

//! Token circulation on an anonymous oriented ring with counters modulo the
//! smallest non-divisor of the ring size.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use super::Specification;
use crate::analysis::StateSpace;
use crate::error::{Error, Result};
use crate::system::{ActionId, LocalView, ProcessId, Protocol};
use crate::topology::Topology;

/// Least `m >= 2` that does not divide `n`.
pub fn smallest_non_divisor(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::input(format!("smallest non-divisor needs n >= 2, got {n}")));
    }
    Ok((2..).find(|m| !n.is_multiple_of(*m)).expect("n + 1 never divides n"))
}

/// The counter `dt` of one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenState(pub u8);

impl fmt::Display for TokenState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct TokenCirculation {
    modulus: u8,
}

impl TokenCirculation {
    pub const PASS: ActionId = 0;

    pub fn new(topo: &Topology) -> Result<Self> {
        if !topo.is_oriented_ring() {
            return Err(Error::input("token circulation needs an oriented ring"));
        }
        let m = smallest_non_divisor(topo.node_count())?;
        let modulus = u8::try_from(m).map_err(|_| Error::input("ring too large"))?;
        Ok(TokenCirculation { modulus })
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    fn expected(&self, view: &LocalView<'_, TokenState>) -> u8 {
        let pred = view.pred_port().expect("oriented ring");
        (view.neighbor(pred).0 + 1) % self.modulus
    }
}

impl Protocol for TokenCirculation {
    type State = TokenState;

    fn name(&self) -> &str {
        "token"
    }

    fn labels(&self) -> &[&'static str] {
        &["A"]
    }

    fn domain(&self, _topo: &Topology, _p: ProcessId) -> Vec<TokenState> {
        (0..self.modulus).map(TokenState).collect()
    }

    fn guard(&self, view: &LocalView<'_, TokenState>, action: ActionId) -> bool {
        action == Self::PASS && view.state().0 != self.expected(view)
    }

    fn execute(&self, view: &LocalView<'_, TokenState>, _action: ActionId, _rng: &mut dyn RngCore) -> TokenState {
        TokenState(self.expected(view))
    }
}

impl Specification for TokenCirculation {
    fn is_legitimate(&self, topo: &Topology, cfg: &[TokenState]) -> bool {
        token_holders(self, topo, cfg).len() == 1
    }

    /// The single token moves to the successor of its holder.
    fn observable(&self, topo: &Topology, from: &[TokenState], to: &[TokenState]) -> bool {
        let before = token_holders(self, topo, from);
        let after = token_holders(self, topo, to);
        before.len() == 1 && after.len() == 1 && topo.successor(before[0]) == Some(after[0])
    }
}

/// Processes whose token predicate holds, in increasing order.
pub fn token_holders(proto: &TokenCirculation, topo: &Topology, cfg: &[TokenState]) -> Vec<ProcessId> {
    (0..topo.node_count())
        .filter(|&p| proto.guard(&LocalView::new(topo, cfg, p), TokenCirculation::PASS))
        .collect()
}

/// First configuration, in state-space order, whose token holders are
/// exactly `holders`.
pub fn configuration_with_holders(
    proto: &TokenCirculation,
    topo: &Topology,
    holders: &[ProcessId],
) -> Result<Option<Vec<TokenState>>> {
    let mut wanted = holders.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let space = StateSpace::new(proto, topo)?;
    let found = space.iter().find(|c| token_holders(proto, topo, c) == wanted);
    Ok(found.map(|c| c.into_inner()))
}

/// Number of successor hops from `p` to `q` along the ring orientation.
pub fn pred_path_len(topo: &Topology, p: ProcessId, q: ProcessId) -> Option<usize> {
    let mut cur = p;
    for len in 0..topo.node_count() {
        if cur == q {
            return Some(len);
        }
        cur = topo.successor(cur)?;
    }
    None
}

/// Shortest oriented distance between two distinct token holders.
pub fn min_token_distance(proto: &TokenCirculation, topo: &Topology, cfg: &[TokenState]) -> Result<usize> {
    let holders = token_holders(proto, topo, cfg);
    if holders.len() < 2 {
        return Err(Error::Undefined(format!(
            "minimum token distance needs two token holders, found {}",
            holders.len()
        )));
    }
    let mut best = usize::MAX;
    for &p in &holders {
        for &q in &holders {
            if p != q {
                if let Some(d) = pred_path_len(topo, p, q) {
                    best = best.min(d);
                }
            }
        }
    }
    Ok(best)
}

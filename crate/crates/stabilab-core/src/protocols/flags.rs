//! Two neighbors with one boolean each; convergence needs a simultaneous move
//! out of `(false, false)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;

use super::Specification;
use crate::error::{Error, Result};
use crate::system::{ActionId, LocalView, ProcessId, Protocol};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlagState(pub bool);

impl fmt::Display for FlagState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TwoFlag;

impl TwoFlag {
    pub const SET: ActionId = 0;
    pub const CLEAR: ActionId = 1;

    pub fn new() -> Self {
        TwoFlag
    }

    /// The fixed network: two neighboring processes.
    pub fn topology() -> Topology {
        Topology::tree(&[(0, 1)]).expect("two-node tree")
    }

    pub fn check_topology(topo: &Topology) -> Result<()> {
        if topo.node_count() != 2 || topo.degree(0) != 1 {
            return Err(Error::input("the two-flag protocol runs on exactly two neighbors"));
        }
        Ok(())
    }
}

impl Protocol for TwoFlag {
    type State = FlagState;

    fn name(&self) -> &str {
        "two-flag"
    }

    fn labels(&self) -> &[&'static str] {
        &["A1", "A2"]
    }

    fn domain(&self, _topo: &Topology, _p: ProcessId) -> Vec<FlagState> {
        vec![FlagState(false), FlagState(true)]
    }

    fn guard(&self, view: &LocalView<'_, FlagState>, action: ActionId) -> bool {
        let mine = view.state().0;
        let other = view.neighbor(0).0;
        match action {
            Self::SET => !mine && !other,
            Self::CLEAR => mine && !other,
            _ => false,
        }
    }

    fn execute(&self, _view: &LocalView<'_, FlagState>, action: ActionId, _rng: &mut dyn RngCore) -> FlagState {
        FlagState(action == Self::SET)
    }
}

impl Specification for TwoFlag {
    fn is_legitimate(&self, _topo: &Topology, cfg: &[FlagState]) -> bool {
        cfg.iter().all(|b| b.0)
    }
}

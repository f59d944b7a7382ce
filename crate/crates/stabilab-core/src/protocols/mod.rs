//! The built-in protocols and their legitimacy predicates.

use crate::system::Protocol;
use crate::topology::Topology;

pub mod flags;
pub mod leader;
pub mod token;

pub use flags::{FlagState, TwoFlag};
pub use leader::{LeaderElection, LeaderState};
pub use token::{smallest_non_divisor, TokenCirculation, TokenState};

/// A protocol together with the problem it solves: the legitimate
/// configurations and the property every step out of them must satisfy.
pub trait Specification: Protocol {
    fn is_legitimate(&self, topo: &Topology, cfg: &[Self::State]) -> bool;

    /// Observable condition on a step `from -> to` taken from a legitimate
    /// configuration.
    fn observable(&self, _topo: &Topology, _from: &[Self::State], _to: &[Self::State]) -> bool {
        true
    }
}

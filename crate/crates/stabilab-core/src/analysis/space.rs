use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::system::{Configuration, Protocol};
use crate::topology::Topology;

/// Mixed-radix numbering of every configuration of a protocol on a
/// topology. Process 0 is the least significant digit.
#[derive(Debug, Clone)]
pub struct StateSpace<S> {
    domains: Vec<Vec<S>>,
    weights: Vec<usize>,
    size: usize,
}

impl<S: Clone + Ord> StateSpace<S> {
    pub fn new<P: Protocol<State = S>>(protocol: &P, topo: &Topology) -> Result<Self> {
        let domains: Vec<Vec<S>> = (0..topo.node_count()).map(|p| protocol.domain(topo, p)).collect();
        Self::from_domains(domains)
    }

    pub fn from_domains(domains: Vec<Vec<S>>) -> Result<Self> {
        let mut weights = Vec::with_capacity(domains.len());
        let mut size: u128 = 1;
        for d in &domains {
            if d.is_empty() {
                return Err(Error::input("empty local domain"));
            }
            weights.push(size as usize);
            size = size.saturating_mul(d.len() as u128);
            if size > usize::MAX as u128 {
                return Err(Error::ResourceLimit {
                    what: "configurations",
                    count: size,
                    limit: usize::MAX as u128,
                });
            }
        }
        Ok(StateSpace { domains, weights, size: size as usize })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn process_count(&self) -> usize {
        self.domains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn domain(&self, p: usize) -> &[S] {
        &self.domains[p]
    }

    pub fn weight(&self, p: usize) -> usize {
        self.weights[p]
    }

    /// Position of `s` in the domain of `p`.
    pub fn digit(&self, p: usize, s: &S) -> Option<usize> {
        self.domains[p].binary_search(s).ok()
    }

    pub fn encode(&self, cfg: &[S]) -> Option<usize> {
        if cfg.len() != self.domains.len() {
            return None;
        }
        cfg.iter()
            .enumerate()
            .try_fold(0usize, |acc, (p, s)| Some(acc + self.digit(p, s)? * self.weights[p]))
    }

    pub fn decode(&self, mut index: usize) -> Configuration<S> {
        let mut states = Vec::with_capacity(self.domains.len());
        for d in &self.domains {
            states.push(d[index % d.len()].clone());
            index /= d.len();
        }
        Configuration::new(states)
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration<S>> + '_ {
        (0..self.size).map(|i| self.decode(i))
    }
}

//! Explicit-state analysis: enumerate every configuration, then decide
//! possible convergence, strong closure, and look for non-converging lassos.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::protocols::Specification;
use crate::scheduler::Lasso;
use crate::system::{class_masks, enabled_actions, Configuration, LocalView, Protocol, SchedulerClass, MAX_DISTRIBUTED_ENABLED};
use crate::topology::Topology;

mod space;
mod witness;

pub use space::StateSpace;
pub use witness::{
    check_symmetry_closure, find_synchronous_lasso, lasso_from_schedule, verify_lasso, LassoVerdict,
    SymmetryVerdict,
};

/// Stuck-configuration samples kept in reports.
pub const STUCK_SAMPLE: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_configurations: usize,
    pub max_edges: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_configurations: 10_000_000, max_edges: 10_000_000 }
    }
}

/// Every configuration with its successor set under one scheduler class,
/// stored as compressed adjacency over configuration indexes.
#[derive(Debug, Clone)]
pub struct TransitionSystem<S> {
    space: StateSpace<S>,
    class: SchedulerClass,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl<S: Clone + Ord> TransitionSystem<S> {
    /// Assembles a system from per-configuration successor lists, in
    /// configuration index order.
    pub fn from_successor_lists(space: StateSpace<S>, class: SchedulerClass, lists: Vec<Vec<usize>>) -> Result<Self> {
        if lists.len() != space.len() {
            return Err(Error::input("one successor list per configuration expected"));
        }
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in lists {
            targets.extend(list);
            offsets.push(targets.len());
        }
        Ok(TransitionSystem { space, class, offsets, targets })
    }

    pub fn space(&self) -> &StateSpace<S> {
        &self.space
    }

    pub fn class(&self) -> SchedulerClass {
        self.class
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, index: usize) -> &[usize] {
        &self.targets[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn config(&self, index: usize) -> Configuration<S> {
        self.space.decode(index)
    }

    pub fn is_terminal(&self, index: usize) -> bool {
        self.successors(index).is_empty()
    }

    pub fn terminal_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_terminal(i)).count()
    }
}

/// Successor indexes of configuration `index`, sorted and deduplicated.
pub fn expand<P: Protocol>(
    space: &StateSpace<P::State>,
    protocol: &P,
    topo: &Topology,
    index: usize,
    class: SchedulerClass,
) -> Result<Vec<usize>> {
    let cfg = space.decode(index);
    let active = enabled_actions(protocol, topo, &cfg)?;
    if class == SchedulerClass::Distributed && active.len() > MAX_DISTRIBUTED_ENABLED {
        return Err(Error::ResourceLimit {
            what: "enabled processes in one configuration",
            count: active.len() as u128,
            limit: MAX_DISTRIBUTED_ENABLED as u128,
        });
    }
    // index offset contributed by each outcome of each enabled process
    let mut deltas: Vec<Vec<isize>> = Vec::with_capacity(active.len());
    for &(p, a) in &active {
        let old = space.digit(p, &cfg[p]).expect("decoded state is in its domain") as isize;
        let weight = space.weight(p) as isize;
        let mut row = Vec::new();
        for s in protocol.support(&LocalView::new(topo, &cfg[..], p), a) {
            let new = space
                .digit(p, &s)
                .ok_or_else(|| Error::input(alloc::format!("action {a} at process {p} left the state domain")))?;
            row.push((new as isize - old) * weight);
        }
        deltas.push(row);
    }
    let mut out = Vec::new();
    for mask in class_masks(class, active.len()) {
        let mut sums = vec![0isize];
        for (i, row) in deltas.iter().enumerate() {
            if mask >> i & 1 == 1 {
                sums = sums.iter().flat_map(|&s| row.iter().map(move |&d| s + d)).collect();
            }
        }
        out.extend(sums.into_iter().map(|d| (index as isize + d) as usize));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Builds the complete transition system of `protocol` on `topo`.
pub fn enumerate<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    class: SchedulerClass,
    limits: Limits,
) -> Result<TransitionSystem<P::State>> {
    let space = StateSpace::new(protocol, topo)?;
    if space.len() > limits.max_configurations {
        return Err(Error::ResourceLimit {
            what: "configurations",
            count: space.len() as u128,
            limit: limits.max_configurations as u128,
        });
    }
    let mut lists = Vec::with_capacity(space.len());
    let mut edges = 0usize;
    for i in 0..space.len() {
        let succ = expand(&space, protocol, topo, i, class)?;
        edges += succ.len();
        if edges > limits.max_edges {
            return Err(Error::ResourceLimit { what: "edges", count: edges as u128, limit: limits.max_edges as u128 });
        }
        lists.push(succ);
    }
    TransitionSystem::from_successor_lists(space, class, lists)
}

/// Marks every configuration from which some path reaches a marked seed.
pub fn backward_reachable<S: Clone + Ord>(ts: &TransitionSystem<S>, seeds: &[bool]) -> Vec<bool> {
    let n = ts.len();
    let mut in_degree = vec![0usize; n + 1];
    for i in 0..n {
        for &j in ts.successors(i) {
            in_degree[j + 1] += 1;
        }
    }
    for j in 0..n {
        in_degree[j + 1] += in_degree[j];
    }
    let offsets = in_degree;
    let mut fill = offsets.clone();
    let mut sources = vec![0usize; ts.edge_count()];
    for i in 0..n {
        for &j in ts.successors(i) {
            sources[fill[j]] = i;
            fill[j] += 1;
        }
    }
    let mut reached = seeds.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| seeds[i]).collect();
    while let Some(j) = queue.pop_front() {
        for &i in &sources[offsets[j]..offsets[j + 1]] {
            if !reached[i] {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    reached
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceVerdict<S> {
    pub holds: bool,
    pub legitimate: usize,
    pub reached: usize,
    pub stuck_total: usize,
    /// The first [`STUCK_SAMPLE`] stuck configurations in index order.
    pub stuck: Vec<Configuration<S>>,
}

/// Every configuration can reach the legitimate set.
pub fn check_possible_convergence<S: Clone + Ord>(
    ts: &TransitionSystem<S>,
    legit: impl Fn(&[S]) -> bool,
) -> Result<ConvergenceVerdict<S>> {
    let seeds: Vec<bool> = (0..ts.len()).map(|i| legit(&ts.config(i))).collect();
    let legitimate = seeds.iter().filter(|&&b| b).count();
    if legitimate == 0 {
        return Err(Error::input("the legitimate set is empty"));
    }
    let reached = backward_reachable(ts, &seeds);
    let stuck_idx: Vec<usize> = (0..ts.len()).filter(|&i| !reached[i]).collect();
    Ok(ConvergenceVerdict {
        holds: stuck_idx.is_empty(),
        legitimate,
        reached: ts.len() - stuck_idx.len(),
        stuck_total: stuck_idx.len(),
        stuck: stuck_idx.iter().take(STUCK_SAMPLE).map(|&i| ts.config(i)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureVerdict<S> {
    pub holds: bool,
    pub edges_checked: usize,
    /// First offending edge in index order.
    pub violation: Option<(Configuration<S>, Configuration<S>)>,
}

/// Every edge out of a legitimate configuration lands in the legitimate set
/// and satisfies `observable`.
pub fn check_closure<S: Clone + Ord>(
    ts: &TransitionSystem<S>,
    legit: impl Fn(&[S]) -> bool,
    observable: impl Fn(&[S], &[S]) -> bool,
) -> ClosureVerdict<S> {
    let mut edges_checked = 0;
    for i in 0..ts.len() {
        let from = ts.config(i);
        if !legit(&from) {
            continue;
        }
        for &j in ts.successors(i) {
            edges_checked += 1;
            let to = ts.config(j);
            if !legit(&to) || !observable(&from, &to) {
                return ClosureVerdict { holds: false, edges_checked, violation: Some((from, to)) };
            }
        }
    }
    ClosureVerdict { holds: true, edges_checked, violation: None }
}

/// Same verdict as [`check_closure`] without materializing the transition
/// system: only legitimate configurations are expanded.
pub fn check_closure_direct<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    class: SchedulerClass,
    legit: impl Fn(&[P::State]) -> bool,
    observable: impl Fn(&[P::State], &[P::State]) -> bool,
) -> Result<ClosureVerdict<P::State>> {
    let space = StateSpace::new(protocol, topo)?;
    let mut edges_checked = 0;
    for i in 0..space.len() {
        let from = space.decode(i);
        if !legit(&from) {
            continue;
        }
        for j in expand(&space, protocol, topo, i, class)? {
            edges_checked += 1;
            let to = space.decode(j);
            if !legit(&to) || !observable(&from, &to) {
                return Ok(ClosureVerdict { holds: false, edges_checked, violation: Some((from, to)) });
            }
        }
    }
    Ok(ClosureVerdict { holds: true, edges_checked, violation: None })
}

/// Verdicts for one protocol on one topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport<S> {
    pub protocol: String,
    pub class: SchedulerClass,
    pub configurations: usize,
    pub edges: usize,
    pub terminal: usize,
    pub convergence: ConvergenceVerdict<S>,
    pub closure: ClosureVerdict<S>,
    /// Synchronous orbit that never reaches the legitimate set, when one
    /// exists (deterministic protocols only).
    pub counterexample: Option<Lasso<S>>,
}

impl<S> AnalysisReport<S> {
    /// Possible convergence and strong closure together.
    pub fn weak_stabilizing(&self) -> bool {
        self.convergence.holds && self.closure.holds
    }
}

/// Full weak-stabilization analysis of a protocol against its own
/// specification.
pub fn analyze<P: Specification>(
    protocol: &P,
    topo: &Topology,
    class: SchedulerClass,
    limits: Limits,
) -> Result<AnalysisReport<P::State>> {
    let ts = enumerate(protocol, topo, class, limits)?;
    report_from_system(protocol, topo, &ts)
}

/// [`analyze`] over an already enumerated system.
pub fn report_from_system<P: Specification>(
    protocol: &P,
    topo: &Topology,
    ts: &TransitionSystem<P::State>,
) -> Result<AnalysisReport<P::State>> {
    let legit = |c: &[P::State]| protocol.is_legitimate(topo, c);
    let convergence = check_possible_convergence(ts, legit)?;
    let closure = check_closure(ts, legit, |a: &[P::State], b: &[P::State]| protocol.observable(topo, a, b));
    let counterexample =
        if protocol.is_probabilistic() { None } else { find_synchronous_lasso(protocol, topo, legit)? };
    Ok(AnalysisReport {
        protocol: protocol.name().into(),
        class: ts.class(),
        configurations: ts.len(),
        edges: ts.edge_count(),
        terminal: ts.terminal_count(),
        convergence,
        closure,
        counterexample,
    })
}

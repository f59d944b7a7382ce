//! Configurations, protocols as guarded actions, and the atomic-step
//! semantics shared by the analyzer and the simulator.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Deref, DerefMut};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::topology::Topology;

pub type ProcessId = usize;

/// Index into [`Protocol::labels`].
pub type ActionId = usize;

/// Read access to per-process states. Implemented by slices and by
/// projections (see the transformer).
pub trait StateSource<S> {
    fn state_of(&self, p: ProcessId) -> &S;
}

impl<S> StateSource<S> for [S] {
    fn state_of(&self, p: ProcessId) -> &S {
        &self[p]
    }
}

pub(crate) enum Source<'a, S> {
    Slice(&'a [S]),
    Dyn(&'a dyn StateSource<S>),
}

impl<S> Clone for Source<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S> Copy for Source<'_, S> {}

impl<'a, S> Source<'a, S> {
    pub(crate) fn state_of(self, p: ProcessId) -> &'a S {
        match self {
            Source::Slice(s) => &s[p],
            Source::Dyn(d) => d.state_of(p),
        }
    }
}

/// What a process may read: its own state and its neighbors' states, by
/// local port.
pub struct LocalView<'a, S> {
    topo: &'a Topology,
    states: Source<'a, S>,
    p: ProcessId,
}

impl<'a, S> LocalView<'a, S> {
    pub fn new(topo: &'a Topology, states: &'a [S], p: ProcessId) -> Self {
        LocalView { topo, states: Source::Slice(states), p }
    }

    pub fn from_source(topo: &'a Topology, states: &'a dyn StateSource<S>, p: ProcessId) -> Self {
        LocalView { topo, states: Source::Dyn(states), p }
    }

    pub fn state(&self) -> &'a S {
        self.states.state_of(self.p)
    }

    pub fn degree(&self) -> usize {
        self.topo.degree(self.p)
    }

    /// State of the neighbor behind local port `port`.
    pub fn neighbor(&self, port: usize) -> &'a S {
        self.states.state_of(self.topo.neighbor(self.p, port))
    }

    /// Port under which the neighbor behind `port` sees this process.
    pub fn back_port(&self, port: usize) -> usize {
        self.topo.back_port(self.p, port)
    }

    /// Port of the ring predecessor, when the topology is oriented.
    pub fn pred_port(&self) -> Option<usize> {
        self.topo.pred_port(self.p)
    }

    pub(crate) fn source(&self) -> Source<'a, S> {
        self.states
    }

    /// Same view over a different state source.
    pub fn project<'b, T>(&self, states: &'b dyn StateSource<T>) -> LocalView<'b, T>
    where
        'a: 'b,
    {
        LocalView { topo: self.topo, states: Source::Dyn(states), p: self.p }
    }

    /// Internal identity of this process. Breaks anonymity; the built-in
    /// protocols never call it.
    pub fn identity(&self) -> ProcessId {
        self.p
    }

    /// Internal identity of the neighbor behind `port`. Breaks anonymity.
    pub fn neighbor_identity(&self, port: usize) -> ProcessId {
        self.topo.neighbor(self.p, port)
    }
}

/// A protocol given as guarded actions `label :: guard -> statement`.
///
/// Guards must read only the local view, and statements return the new
/// state of the executing process only. Deterministic protocols must not
/// draw from the randomness source.
pub trait Protocol {
    type State: Clone + Ord + Debug;

    fn name(&self) -> &str;

    fn labels(&self) -> &[&'static str];

    /// Every value the local state of `p` may take, sorted ascending.
    fn domain(&self, topo: &Topology, p: ProcessId) -> Vec<Self::State>;

    fn guard(&self, view: &LocalView<'_, Self::State>, action: ActionId) -> bool;

    fn execute(
        &self,
        view: &LocalView<'_, Self::State>,
        action: ActionId,
        rng: &mut dyn RngCore,
    ) -> Self::State;

    fn is_probabilistic(&self) -> bool {
        false
    }

    /// All states `execute` can return. Deterministic protocols have exactly
    /// one outcome.
    fn support(&self, view: &LocalView<'_, Self::State>, action: ActionId) -> Vec<Self::State> {
        vec![self.execute(view, action, &mut NoRandomness)]
    }
}

/// Randomness source for deterministic evaluation; panics when drawn from.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoRandomness;

impl RngCore for NoRandomness {
    fn next_u32(&mut self) -> u32 {
        panic!("a deterministic statement consumed randomness")
    }

    fn next_u64(&mut self) -> u64 {
        panic!("a deterministic statement consumed randomness")
    }

    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        panic!("a deterministic statement consumed randomness")
    }

    fn try_fill_bytes(&mut self, _dest: &mut [u8]) -> core::result::Result<(), rand::Error> {
        panic!("a deterministic statement consumed randomness")
    }
}

/// One local state per process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration<S>(Vec<S>);

impl<S> Configuration<S> {
    pub fn new(states: Vec<S>) -> Self {
        Configuration(states)
    }

    pub fn into_inner(self) -> Vec<S> {
        self.0
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> Configuration<T> {
        Configuration(self.0.iter().map(f).collect())
    }
}

impl<S> From<Vec<S>> for Configuration<S> {
    fn from(states: Vec<S>) -> Self {
        Configuration(states)
    }
}

impl<S> Deref for Configuration<S> {
    type Target = [S];

    fn deref(&self) -> &[S] {
        &self.0
    }
}

impl<S> DerefMut for Configuration<S> {
    fn deref_mut(&mut self) -> &mut [S] {
        &mut self.0
    }
}

/// Nonempty set of `(process, action)` pairs with at most one pair per
/// process, kept sorted by process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Activation(Vec<(ProcessId, ActionId)>);

impl Activation {
    pub fn new(mut pairs: Vec<(ProcessId, ActionId)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::input("an activation must select at least one process"));
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::input("an activation selects each process at most once"));
        }
        Ok(Activation(pairs))
    }

    pub fn single(p: ProcessId, action: ActionId) -> Self {
        Activation(vec![(p, action)])
    }

    pub fn pairs(&self) -> &[(ProcessId, ActionId)] {
        &self.0
    }

    pub fn processes(&self) -> impl Iterator<Item = ProcessId> + '_ {
        self.0.iter().map(|&(p, _)| p)
    }

    pub fn contains(&self, p: ProcessId) -> bool {
        self.0.binary_search_by_key(&p, |&(q, _)| q).is_ok()
    }
}

/// Scheduler classes used for exhaustive successor enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchedulerClass {
    Central,
    Distributed,
    Synchronous,
}

impl SchedulerClass {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerClass::Central => "central",
            SchedulerClass::Distributed => "distributed",
            SchedulerClass::Synchronous => "synchronous",
        }
    }
}

/// Rejects configurations of the wrong length or with out-of-domain states.
pub fn validate<P: Protocol>(protocol: &P, topo: &Topology, cfg: &[P::State]) -> Result<()> {
    if cfg.len() != topo.node_count() {
        return Err(Error::input(format!(
            "configuration has {} states for {} processes",
            cfg.len(),
            topo.node_count()
        )));
    }
    for (p, s) in cfg.iter().enumerate() {
        if protocol.domain(topo, p).binary_search(s).is_err() {
            return Err(Error::input(format!("state {s:?} of process {p} is outside its domain")));
        }
    }
    Ok(())
}

/// Labels whose guards hold at `p`.
pub fn enabled<P: Protocol>(protocol: &P, topo: &Topology, cfg: &[P::State], p: ProcessId) -> Vec<ActionId> {
    let view = LocalView::new(topo, cfg, p);
    (0..protocol.labels().len()).filter(|&a| protocol.guard(&view, a)).collect()
}

/// The unique enabled action of every enabled process, in process order.
pub fn enabled_actions<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    cfg: &[P::State],
) -> Result<Vec<(ProcessId, ActionId)>> {
    let mut out = Vec::new();
    for p in 0..topo.node_count() {
        let actions = enabled(protocol, topo, cfg, p);
        match actions.len() {
            0 => {}
            1 => out.push((p, actions[0])),
            _ => return Err(Error::Ambiguity { process: p, actions }),
        }
    }
    Ok(out)
}

pub fn is_terminal<P: Protocol>(protocol: &P, topo: &Topology, cfg: &[P::State]) -> bool {
    (0..topo.node_count()).all(|p| enabled(protocol, topo, cfg, p).is_empty())
}

/// Executes every activated pair against the original configuration.
pub fn apply<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    cfg: &[P::State],
    act: &Activation,
    rng: &mut dyn RngCore,
) -> Result<Configuration<P::State>> {
    check_guards(protocol, topo, cfg, act)?;
    let updates: Vec<(ProcessId, P::State)> = act
        .pairs()
        .iter()
        .map(|&(p, a)| (p, protocol.execute(&LocalView::new(topo, cfg, p), a, rng)))
        .collect();
    let mut next = cfg.to_vec();
    for (p, s) in updates {
        next[p] = s;
    }
    Ok(Configuration(next))
}

fn check_guards<P: Protocol>(protocol: &P, topo: &Topology, cfg: &[P::State], act: &Activation) -> Result<()> {
    for &(p, a) in act.pairs() {
        if p >= topo.node_count() || a >= protocol.labels().len() {
            return Err(Error::ContractViolation { process: p, action: a });
        }
        if !protocol.guard(&LocalView::new(topo, cfg, p), a) {
            return Err(Error::ContractViolation { process: p, action: a });
        }
    }
    Ok(())
}

/// Subsets of `0..k` selected by a scheduler class, as bitmasks.
pub(crate) fn class_masks(class: SchedulerClass, k: usize) -> Vec<u64> {
    if k == 0 {
        return Vec::new();
    }
    match class {
        SchedulerClass::Central => (0..k).map(|i| 1u64 << i).collect(),
        SchedulerClass::Distributed => (1..(1u64 << k)).collect(),
        SchedulerClass::Synchronous => vec![(1u64 << k) - 1],
    }
}

/// Most processes the distributed class may expand at once.
pub const MAX_DISTRIBUTED_ENABLED: usize = 20;

/// All configurations reachable in one step under `class`, sorted and
/// deduplicated. Probabilistic statements contribute every outcome of their
/// support.
pub fn successors<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    cfg: &[P::State],
    class: SchedulerClass,
) -> Result<Vec<Configuration<P::State>>> {
    let active = enabled_actions(protocol, topo, cfg)?;
    if class == SchedulerClass::Distributed && active.len() > MAX_DISTRIBUTED_ENABLED {
        return Err(Error::ResourceLimit {
            what: "enabled processes in one configuration",
            count: active.len() as u128,
            limit: MAX_DISTRIBUTED_ENABLED as u128,
        });
    }
    let outcomes: Vec<Vec<P::State>> = active
        .iter()
        .map(|&(p, a)| protocol.support(&LocalView::new(topo, cfg, p), a))
        .collect();
    let mut out = BTreeSet::new();
    for mask in class_masks(class, active.len()) {
        let chosen: Vec<usize> = (0..active.len()).filter(|&i| mask >> i & 1 == 1).collect();
        let mut partial = vec![cfg.to_vec()];
        for &i in &chosen {
            let p = active[i].0;
            partial = partial
                .into_iter()
                .flat_map(|base| {
                    outcomes[i].iter().map(move |s| {
                        let mut next = base.clone();
                        next[p] = s.clone();
                        next
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(Configuration));
    }
    Ok(out.into_iter().collect())
}

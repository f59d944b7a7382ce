//! Scheduler policies for simulation, and fairness predicates evaluated on
//! lassos.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::system::{self, Activation, Configuration, NoRandomness, ProcessId, Protocol, SchedulerClass};
use crate::topology::Topology;

/// How a script is replayed once it wraps around.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptMode {
    /// Entry `k mod len` as written.
    Fixed,
    /// Entry `k mod len`, with every process shifted `k / len` positions
    /// forward on a ring of `ring_size` processes numbered along its
    /// orientation. A script that names the token holders of the first
    /// round keeps following the same tokens.
    Rotating { ring_size: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchedulerPolicy {
    /// Next enabled process after the last chosen one, in identity order.
    CentralRoundRobin,
    /// Every enabled process.
    DistributedFull,
    /// Every enabled process.
    Synchronous,
    /// One enabled process, uniformly.
    RandomizedCentral,
    /// A nonempty subset of the enabled processes, uniformly among all
    /// `2^k - 1` of them.
    RandomizedDistributed,
    Scripted { script: Vec<Vec<ProcessId>>, mode: ScriptMode },
}

impl SchedulerPolicy {
    pub fn scripted(script: Vec<Vec<ProcessId>>, mode: ScriptMode) -> Result<Self> {
        if script.is_empty() || script.iter().any(Vec::is_empty) {
            return Err(Error::input("script entries must be nonempty process sets"));
        }
        if let ScriptMode::Rotating { ring_size } = mode {
            if ring_size == 0 || script.iter().flatten().any(|&p| p >= ring_size) {
                return Err(Error::input("rotating script names a process outside the ring"));
            }
        }
        Ok(SchedulerPolicy::Scripted { script, mode })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SchedulerPolicy::CentralRoundRobin => "central-rr",
            SchedulerPolicy::DistributedFull => "distributed-full",
            SchedulerPolicy::Synchronous => "synchronous",
            SchedulerPolicy::RandomizedCentral => "randomized-central",
            SchedulerPolicy::RandomizedDistributed => "randomized-distributed",
            SchedulerPolicy::Scripted { .. } => "scripted",
        }
    }

    pub fn is_randomized(&self) -> bool {
        matches!(self, SchedulerPolicy::RandomizedCentral | SchedulerPolicy::RandomizedDistributed)
    }

    /// Scripted entry for step `k`, before intersecting with the enabled set.
    pub fn script_entry(&self, k: u64) -> Option<Vec<ProcessId>> {
        let SchedulerPolicy::Scripted { script, mode } = self else {
            return None;
        };
        let len = script.len() as u64;
        let entry = &script[(k % len) as usize];
        Some(match *mode {
            ScriptMode::Fixed => entry.clone(),
            ScriptMode::Rotating { ring_size } => {
                let shift = ((k / len) % ring_size as u64) as usize;
                entry.iter().map(|&p| (p + shift) % ring_size).collect()
            }
        })
    }
}

/// A policy plus the little state round robin needs.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: SchedulerPolicy,
    last: Option<ProcessId>,
}

impl Scheduler {
    pub fn new(policy: SchedulerPolicy) -> Self {
        Scheduler { policy, last: None }
    }

    pub fn policy(&self) -> &SchedulerPolicy {
        &self.policy
    }

    /// Picks the processes to activate at step `step` among `enabled`
    /// (sorted, nonempty). Returns a sorted nonempty subset.
    pub fn select(&mut self, enabled: &[ProcessId], rng: &mut dyn RngCore, step: u64) -> Result<Vec<ProcessId>> {
        if enabled.is_empty() {
            return Err(Error::input("select needs at least one enabled process"));
        }
        let chosen = match &self.policy {
            SchedulerPolicy::CentralRoundRobin => {
                let next = match self.last {
                    Some(last) => enabled.iter().copied().find(|&p| p > last).unwrap_or(enabled[0]),
                    None => enabled[0],
                };
                self.last = Some(next);
                alloc::vec![next]
            }
            SchedulerPolicy::DistributedFull | SchedulerPolicy::Synchronous => enabled.to_vec(),
            SchedulerPolicy::RandomizedCentral => alloc::vec![enabled[rng.gen_range(0..enabled.len())]],
            SchedulerPolicy::RandomizedDistributed => uniform_nonempty_subset(enabled, rng),
            SchedulerPolicy::Scripted { .. } => {
                let entry = self.policy.script_entry(step).expect("scripted policy");
                let chosen: Vec<ProcessId> = enabled.iter().copied().filter(|p| entry.contains(p)).collect();
                if chosen.is_empty() {
                    return Err(Error::ScriptStall { step });
                }
                chosen
            }
        };
        Ok(chosen)
    }
}

/// Independent fair coin per process, redrawn until at least one lands
/// heads: every nonempty subset ends up with probability `1 / (2^k - 1)`.
fn uniform_nonempty_subset(enabled: &[ProcessId], rng: &mut dyn RngCore) -> Vec<ProcessId> {
    loop {
        let chosen: Vec<ProcessId> = enabled.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        if !chosen.is_empty() {
            return chosen;
        }
    }
}

/// One step of a lasso: the source configuration and what was activated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step<S> {
    pub config: Configuration<S>,
    pub activation: Activation,
}

/// A finite prefix followed by a cycle that returns to its first
/// configuration. Witness form for infinite executions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lasso<S> {
    pub prefix: Vec<Step<S>>,
    pub cycle: Vec<Step<S>>,
}

impl<S: Clone + Ord + core::fmt::Debug> Lasso<S> {
    /// Checks every activation against its configuration and that
    /// consecutive steps chain, including the cycle's closing step.
    /// Deterministic protocols only.
    pub fn validate<P: Protocol<State = S>>(&self, protocol: &P, topo: &Topology) -> Result<()> {
        if self.cycle.is_empty() {
            return Err(Error::InvalidLasso { step: 0, reason: "empty cycle".into() });
        }
        if protocol.is_probabilistic() {
            return Err(Error::input("lassos are checked against deterministic protocols"));
        }
        let steps: Vec<&Step<S>> = self.prefix.iter().chain(&self.cycle).collect();
        for (i, step) in steps.iter().enumerate() {
            let target = system::apply(protocol, topo, &step.config, &step.activation, &mut NoRandomness)
                .map_err(|e| Error::InvalidLasso { step: i, reason: format!("{e}") })?;
            let expected = match steps.get(i + 1) {
                Some(next) => &next.config,
                None => &self.cycle[0].config,
            };
            if &target != expected {
                let reason = if i + 1 == steps.len() { "cycle is not closed" } else { "steps do not chain" };
                return Err(Error::InvalidLasso { step: i, reason: reason.into() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FairnessKind {
    /// Continuously enabled processes eventually move.
    Weak,
    /// Processes enabled infinitely often eventually move.
    Strong,
    /// Every transition out of an infinitely recurring configuration is
    /// eventually taken.
    Gouda,
}

impl FairnessKind {
    pub fn name(self) -> &'static str {
        match self {
            FairnessKind::Weak => "weak",
            FairnessKind::Strong => "strong",
            FairnessKind::Gouda => "gouda",
        }
    }
}

/// Whether the infinite execution described by `lasso` satisfies `kind`.
/// Only the cycle matters. Gouda fairness compares against every
/// distributed-scheduler successor of each cycle configuration.
pub fn check_fairness<P: Protocol>(
    lasso: &Lasso<P::State>,
    kind: FairnessKind,
    protocol: &P,
    topo: &Topology,
) -> Result<bool> {
    let activated: BTreeSet<ProcessId> = lasso.cycle.iter().flat_map(|s| s.activation.processes()).collect();
    let enabled_sets: Vec<BTreeSet<ProcessId>> = lasso
        .cycle
        .iter()
        .map(|s| {
            (0..topo.node_count())
                .filter(|&p| !system::enabled(protocol, topo, &s.config, p).is_empty())
                .collect()
        })
        .collect();
    Ok(match kind {
        FairnessKind::Weak => {
            let mut always = enabled_sets.first().cloned().unwrap_or_default();
            for set in &enabled_sets[1..] {
                always = always.intersection(set).copied().collect();
            }
            always.is_subset(&activated)
        }
        FairnessKind::Strong => {
            let sometimes: BTreeSet<ProcessId> = enabled_sets.iter().flatten().copied().collect();
            sometimes.is_subset(&activated)
        }
        FairnessKind::Gouda => {
            let n = lasso.cycle.len();
            let mut taken = BTreeSet::new();
            for (i, step) in lasso.cycle.iter().enumerate() {
                let target = &lasso.cycle[(i + 1) % n].config;
                taken.insert((step.config.clone(), target.clone()));
            }
            let sources: BTreeSet<&Configuration<P::State>> = lasso.cycle.iter().map(|s| &s.config).collect();
            let mut fair = true;
            for cfg in sources {
                for next in system::successors(protocol, topo, cfg, SchedulerClass::Distributed)? {
                    if !taken.contains(&(cfg.clone(), next)) {
                        fair = false;
                    }
                }
            }
            fair
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_robin_cycles_through_enabled() {
        let mut s = Scheduler::new(SchedulerPolicy::CentralRoundRobin);
        let mut rng = NoRandomness;
        let picks: Vec<_> = (0..5).map(|k| s.select(&[1, 4, 6], &mut rng, k).unwrap()[0]).collect();
        assert_eq!(picks, vec![1, 4, 6, 1, 4]);
    }

    #[test]
    fn full_and_synchronous_take_everything() {
        for policy in [SchedulerPolicy::DistributedFull, SchedulerPolicy::Synchronous] {
            let mut s = Scheduler::new(policy);
            assert_eq!(s.select(&[0, 2, 3], &mut NoRandomness, 0).unwrap(), vec![0, 2, 3]);
        }
    }

    #[test]
    fn randomized_central_is_uniform_over_two() {
        let mut s = Scheduler::new(SchedulerPolicy::RandomizedCentral);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 20_000;
        let twos = (0..draws).filter(|&k| s.select(&[2, 5], &mut rng, k).unwrap() == vec![2]).count();
        // ±4σ with σ = sqrt(n/4)
        let sigma = (draws as f64 / 4.0).sqrt();
        assert!(((twos as f64) - draws as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn scripted_fixed_and_stall() {
        let policy = SchedulerPolicy::scripted(vec![vec![0], vec![3]], ScriptMode::Fixed).unwrap();
        let mut s = Scheduler::new(policy);
        assert_eq!(s.select(&[0, 3], &mut NoRandomness, 0).unwrap(), vec![0]);
        assert_eq!(s.select(&[1, 3], &mut NoRandomness, 1).unwrap(), vec![3]);
        assert_eq!(s.select(&[1, 4], &mut NoRandomness, 2), Err(Error::ScriptStall { step: 2 }));
    }

    #[test]
    fn scripted_rotation_follows_tokens() {
        let policy = SchedulerPolicy::scripted(vec![vec![0], vec![3]], ScriptMode::Rotating { ring_size: 6 }).unwrap();
        let entries: Vec<_> = (0..14).map(|k| policy.script_entry(k).unwrap()[0]).collect();
        assert_eq!(entries, vec![0, 3, 1, 4, 2, 5, 3, 0, 4, 1, 5, 2, 0, 3]);
    }

    #[test]
    fn scripted_rejects_empty_entries() {
        assert!(SchedulerPolicy::scripted(vec![], ScriptMode::Fixed).is_err());
        assert!(SchedulerPolicy::scripted(vec![vec![0], vec![]], ScriptMode::Fixed).is_err());
        assert!(SchedulerPolicy::scripted(vec![vec![6]], ScriptMode::Rotating { ring_size: 6 }).is_err());
    }

    #[test]
    fn select_rejects_empty_enabled_set() {
        let mut s = Scheduler::new(SchedulerPolicy::Synchronous);
        assert!(s.select(&[], &mut NoRandomness, 0).is_err());
    }
}

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::space::StateSpace;
use crate::error::{Error, Result};
use crate::scheduler::{check_fairness, FairnessKind, Lasso, Scheduler, SchedulerPolicy, ScriptMode, Step};
use crate::system::{apply, enabled_actions, Activation, Configuration, NoRandomness, ProcessId, Protocol};
use crate::topology::Topology;

/// The synchronous step from `cfg`, or `None` when `cfg` is terminal.
fn synchronous_step<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    cfg: &[P::State],
) -> Result<Option<(Activation, Configuration<P::State>)>> {
    let active = enabled_actions(protocol, topo, cfg)?;
    if active.is_empty() {
        return Ok(None);
    }
    let act = Activation::new(active)?;
    let next = apply(protocol, topo, cfg, &act, &mut NoRandomness)?;
    Ok(Some((act, next)))
}

/// Follows the synchronous orbit of every illegitimate configuration, in
/// index order, and returns the first orbit that cycles outside the
/// legitimate set. `None` means every synchronous orbit converges (or halts).
pub fn find_synchronous_lasso<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    legit: impl Fn(&[P::State]) -> bool,
) -> Result<Option<Lasso<P::State>>> {
    if protocol.is_probabilistic() {
        return Err(Error::input("synchronous orbits are defined for deterministic protocols"));
    }
    const UNSEEN: u8 = 0;
    const ON_PATH: u8 = 1;
    const DONE: u8 = 2;
    let space = StateSpace::new(protocol, topo)?;
    let mut status = vec![UNSEEN; space.len()];
    for start in 0..space.len() {
        if status[start] != UNSEEN {
            continue;
        }
        let mut path: Vec<(usize, Step<P::State>)> = Vec::new();
        let mut cur = start;
        loop {
            match status[cur] {
                DONE => break,
                ON_PATH => {
                    let entry = path.iter().position(|(i, _)| *i == cur).expect("index on current path");
                    let mut steps: Vec<Step<P::State>> = path.into_iter().map(|(_, s)| s).collect();
                    let cycle = steps.split_off(entry);
                    return Ok(Some(Lasso { prefix: steps, cycle }));
                }
                _ => {}
            }
            let cfg = space.decode(cur);
            if legit(&cfg) {
                break;
            }
            let Some((activation, next)) = synchronous_step(protocol, topo, &cfg)? else {
                break;
            };
            status[cur] = ON_PATH;
            path.push((cur, Step { config: cfg, activation }));
            cur = space.encode(&next).ok_or_else(|| Error::input("statement left the state domain"))?;
        }
        status[cur] = DONE;
        for (i, _) in &path {
            status[*i] = DONE;
        }
    }
    Ok(None)
}

type PhaseKey<S> = (Configuration<S>, u64, Option<ProcessId>);

/// Replays a deterministic scheduler from `init` until the pair
/// (configuration, scheduler phase) repeats, and returns the resulting lasso.
/// `None` if a terminal configuration is reached or `max_steps` runs out.
pub fn lasso_from_schedule<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    init: &[P::State],
    policy: &SchedulerPolicy,
    max_steps: usize,
) -> Result<Option<Lasso<P::State>>> {
    if policy.is_randomized() {
        return Err(Error::input("lassos are replayed from deterministic schedulers"));
    }
    let period = match policy {
        SchedulerPolicy::Scripted { script, mode: ScriptMode::Fixed } => script.len() as u64,
        SchedulerPolicy::Scripted { script, mode: ScriptMode::Rotating { ring_size } } => {
            script.len() as u64 * *ring_size as u64
        }
        _ => 1,
    };
    let mut scheduler = Scheduler::new(policy.clone());
    let mut seen: BTreeMap<PhaseKey<P::State>, usize> = BTreeMap::new();
    let mut steps: Vec<Step<P::State>> = Vec::new();
    let mut cfg = Configuration::new(init.to_vec());
    let mut last: Option<ProcessId> = None;
    for k in 0..=max_steps as u64 {
        let key = (cfg.clone(), k % period, last);
        if let Some(&first) = seen.get(&key) {
            let cycle = steps.split_off(first);
            return Ok(Some(Lasso { prefix: steps, cycle }));
        }
        seen.insert(key, steps.len());
        let active = enabled_actions(protocol, topo, &cfg)?;
        if active.is_empty() {
            return Ok(None);
        }
        let enabled: Vec<ProcessId> = active.iter().map(|&(p, _)| p).collect();
        let chosen = scheduler.select(&enabled, &mut NoRandomness, k)?;
        if matches!(policy, SchedulerPolicy::CentralRoundRobin) {
            last = chosen.first().copied();
        }
        let act = Activation::new(active.into_iter().filter(|(p, _)| chosen.contains(p)).collect())?;
        let next = apply(protocol, topo, &cfg, &act, &mut NoRandomness)?;
        steps.push(Step { config: cfg, activation: act });
        cfg = next;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LassoVerdict {
    pub kind: FairnessKind,
    pub fair: bool,
    /// No configuration of the cycle is legitimate.
    pub avoids_legitimate: bool,
    pub prefix_len: usize,
    pub cycle_len: usize,
}

impl LassoVerdict {
    /// The lasso is a fair execution that never converges.
    pub fn is_witness(&self) -> bool {
        self.fair && self.avoids_legitimate
    }
}

/// Checks that `lasso` is a legal, closed execution and reports whether its
/// cycle avoids the legitimate set while satisfying `kind`.
pub fn verify_lasso<P: Protocol>(
    lasso: &Lasso<P::State>,
    protocol: &P,
    topo: &Topology,
    legit: impl Fn(&[P::State]) -> bool,
    kind: FairnessKind,
) -> Result<LassoVerdict> {
    lasso.validate(protocol, topo)?;
    let avoids_legitimate = lasso.cycle.iter().all(|s| !legit(&s.config));
    let fair = check_fairness(lasso, kind, protocol, topo)?;
    Ok(LassoVerdict { kind, fair, avoids_legitimate, prefix_len: lasso.prefix.len(), cycle_len: lasso.cycle.len() })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryVerdict<S> {
    /// The synchronous successor of every symmetric configuration is
    /// symmetric.
    pub closed: bool,
    pub class_size: usize,
    pub legitimate_in_class: usize,
    pub witness: Option<(Configuration<S>, Configuration<S>)>,
}

/// Configurations invariant under a port-preserving automorphism `sigma`
/// (`cfg[sigma(p)] == cfg[p]` for all `p`), and whether that class is closed
/// under synchronous steps.
pub fn check_symmetry_closure<P: Protocol>(
    protocol: &P,
    topo: &Topology,
    sigma: &[ProcessId],
    legit: impl Fn(&[P::State]) -> bool,
) -> Result<SymmetryVerdict<P::State>> {
    if !topo.preserves_ports(sigma) {
        return Err(Error::input("sigma is not a port-preserving automorphism of the topology"));
    }
    let symmetric = |cfg: &[P::State]| (0..cfg.len()).all(|p| cfg[sigma[p]] == cfg[p]);
    let space = StateSpace::new(protocol, topo)?;
    let mut verdict = SymmetryVerdict { closed: true, class_size: 0, legitimate_in_class: 0, witness: None };
    for cfg in space.iter() {
        if !symmetric(&cfg) {
            continue;
        }
        verdict.class_size += 1;
        if legit(&cfg) {
            verdict.legitimate_in_class += 1;
        }
        if let Some((_, next)) = synchronous_step(protocol, topo, &cfg)? {
            if verdict.closed && !symmetric(&next) {
                verdict.closed = false;
                verdict.witness = Some((cfg, next));
            }
        }
    }
    Ok(verdict)
}

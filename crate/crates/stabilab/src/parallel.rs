//! Thread-sharded enumeration and trial execution. Results are identical to
//! the sequential versions in `stabilab-core` for every thread count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use stabilab_core::analysis::{expand, Limits, StateSpace, TransitionSystem};
use stabilab_core::montecarlo::{Experiment, InitMode, TrialOutcome, TrialStats};
use stabilab_core::{Error, Protocol, SchedulerClass, Topology};

pub const THREADS_ENV: &str = "STABILAB_THREADS";

/// Worker count from `STABILAB_THREADS`; unset, empty or 0 means one per
/// available core.
pub fn thread_count() -> usize {
    let auto = || thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(0) | None => auto(),
        Some(n) => n,
    }
}

fn shards(len: usize, threads: usize) -> Vec<std::ops::Range<usize>> {
    let threads = threads.clamp(1, len.max(1));
    let chunk = len.div_ceil(threads);
    (0..threads).map(|t| (t * chunk).min(len)..((t + 1) * chunk).min(len)).filter(|r| !r.is_empty()).collect()
}

pub fn enumerate<P>(
    protocol: &P,
    topo: &Topology,
    class: SchedulerClass,
    limits: Limits,
    threads: usize,
) -> Result<TransitionSystem<P::State>, Error>
where
    P: Protocol + Sync,
    P::State: Send + Sync,
{
    let space = StateSpace::new(protocol, topo)?;
    if space.len() > limits.max_configurations {
        return Err(Error::ResourceLimit {
            what: "configurations",
            count: space.len() as u128,
            limit: limits.max_configurations as u128,
        });
    }
    let edges = AtomicUsize::new(0);
    let parts: Vec<Result<Vec<Vec<usize>>, Error>> = thread::scope(|s| {
        let handles: Vec<_> = shards(space.len(), threads)
            .into_iter()
            .map(|range| {
                let (space, edges) = (&space, &edges);
                s.spawn(move || {
                    let mut lists = Vec::with_capacity(range.len());
                    for i in range {
                        let next = expand(space, protocol, topo, i, class)?;
                        let total = edges.fetch_add(next.len(), Ordering::Relaxed) + next.len();
                        if total > limits.max_edges {
                            return Err(Error::ResourceLimit {
                                what: "edges",
                                count: total as u128,
                                limit: limits.max_edges as u128,
                            });
                        }
                        lists.push(next);
                    }
                    Ok(lists)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("enumeration worker panicked")).collect()
    });
    let mut lists = Vec::with_capacity(space.len());
    for part in parts {
        lists.extend(part?);
    }
    TransitionSystem::from_successor_lists(space, class, lists)
}

/// Trials `0..trials`, outcomes in trial order.
pub fn estimate<P, L>(
    exp: &Experiment<'_, P, L>,
    init: &InitMode<P::State>,
    trials: u64,
    master: u64,
    threads: usize,
) -> Result<(Vec<TrialOutcome>, TrialStats), Error>
where
    P: Protocol + Sync,
    P::State: Send + Sync,
    L: Fn(&[P::State]) -> bool + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidInput("at least one trial is required".into()));
    }
    let space = StateSpace::new(exp.protocol, exp.topo)?;
    let parts: Vec<Result<Vec<TrialOutcome>, Error>> = thread::scope(|s| {
        let handles: Vec<_> = shards(trials as usize, threads)
            .into_iter()
            .map(|range| {
                let space = &space;
                s.spawn(move || range.map(|t| exp.run_trial(space, init, master, t as u64)).collect())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("trial worker panicked")).collect()
    });
    let mut outcomes = Vec::with_capacity(trials as usize);
    for part in parts {
        outcomes.extend(part?);
    }
    let stats = TrialStats::from_outcomes(&outcomes);
    Ok((outcomes, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shards_cover_the_range() {
        for len in [0, 1, 7, 64] {
            for threads in [1, 3, 8, 100] {
                let parts = shards(len, threads);
                let flat: Vec<usize> = parts.into_iter().flatten().collect();
                assert_eq!(flat, (0..len).collect::<Vec<_>>());
            }
        }
    }
}

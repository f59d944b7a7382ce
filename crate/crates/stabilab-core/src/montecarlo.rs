//! Seeded trials of (possibly probabilistic) protocols under simulated
//! schedulers, and hitting-time statistics over many trials.
//!
//! Trial `i` of a run with master seed `s` is driven by a ChaCha8 stream
//! seeded with `trial_seed(s, i)`, so its outcome does not depend on how
//! many trials run or in which order.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::StateSpace;
use crate::error::{Error, Result};
use crate::scheduler::{Scheduler, SchedulerPolicy};
use crate::system::{apply, enabled_actions, validate, Activation, Configuration, ProcessId, Protocol};
use crate::topology::Topology;

pub const DEFAULT_STEP_CAP: u64 = 100_000;

/// SplitMix64 finalizer over the master seed and the trial counter.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitMode<S> {
    Fixed(Configuration<S>),
    /// Each local state drawn uniformly from its domain.
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    /// Index of the initial configuration in the protocol's state space.
    pub initial: usize,
    pub converged: bool,
    /// Steps until the first legitimate configuration, when converged.
    pub steps_to_legitimate: Option<u64>,
    pub steps_taken: u64,
    /// Stopped in a terminal configuration that is not legitimate.
    pub stuck_terminal: bool,
}

/// One executed step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep<S> {
    pub activation: Activation,
    pub after: Configuration<S>,
}

/// Everything a trial needs besides its seed and initial configuration.
pub struct Experiment<'a, P: Protocol, L> {
    pub protocol: &'a P,
    pub topo: &'a Topology,
    pub policy: &'a SchedulerPolicy,
    pub legit: L,
    pub step_cap: u64,
}

impl<'a, P, L> Experiment<'a, P, L>
where
    P: Protocol,
    L: Fn(&[P::State]) -> bool,
{
    /// Runs from `init` with randomness `rng`. `observe` sees every step.
    pub fn run_with(
        &self,
        init: Configuration<P::State>,
        rng: &mut dyn RngCore,
        mut observe: impl FnMut(&TraceStep<P::State>),
    ) -> Result<(bool, Option<u64>, u64, bool)> {
        if self.step_cap == 0 {
            return Err(Error::input("step cap must be at least 1"));
        }
        validate(self.protocol, self.topo, &init)?;
        let mut scheduler = Scheduler::new(self.policy.clone());
        let mut cfg = init;
        let mut step = 0u64;
        loop {
            if (self.legit)(&cfg) {
                return Ok((true, Some(step), step, false));
            }
            if step >= self.step_cap {
                return Ok((false, None, step, false));
            }
            let active = enabled_actions(self.protocol, self.topo, &cfg)?;
            if active.is_empty() {
                return Ok((false, None, step, true));
            }
            let enabled: Vec<ProcessId> = active.iter().map(|&(p, _)| p).collect();
            let chosen = scheduler.select(&enabled, rng, step)?;
            let act = Activation::new(active.into_iter().filter(|(p, _)| chosen.contains(p)).collect())?;
            cfg = apply(self.protocol, self.topo, &cfg, &act, rng)?;
            step += 1;
            observe(&TraceStep { activation: act, after: cfg.clone() });
        }
    }

    /// Trial number `trial` of a run with master seed `master`.
    pub fn run_trial(
        &self,
        space: &StateSpace<P::State>,
        init: &InitMode<P::State>,
        master: u64,
        trial: u64,
    ) -> Result<TrialOutcome> {
        self.run_trial_with(space, init, master, trial, |_| {}).map(|(o, _)| o)
    }

    /// [`Self::run_trial`] that also returns the initial configuration and
    /// passes every step to `observe`.
    pub fn run_trial_with(
        &self,
        space: &StateSpace<P::State>,
        init: &InitMode<P::State>,
        master: u64,
        trial: u64,
        observe: impl FnMut(&TraceStep<P::State>),
    ) -> Result<(TrialOutcome, Configuration<P::State>)> {
        let seed = trial_seed(master, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = match init {
            InitMode::Fixed(cfg) => cfg.clone(),
            InitMode::UniformRandom => random_configuration(space, &mut rng),
        };
        let initial = space.encode(&start).ok_or_else(|| Error::input("initial configuration outside the state space"))?;
        let (converged, steps_to_legitimate, steps_taken, stuck_terminal) =
            self.run_with(start.clone(), &mut rng, observe)?;
        let outcome = TrialOutcome { trial, seed, initial, converged, steps_to_legitimate, steps_taken, stuck_terminal };
        Ok((outcome, start))
    }

    /// Runs trials `0..trials` sequentially and aggregates them.
    pub fn estimate(&self, init: &InitMode<P::State>, trials: u64, master: u64) -> Result<(Vec<TrialOutcome>, TrialStats)> {
        if trials == 0 {
            return Err(Error::input("at least one trial is required"));
        }
        let space = StateSpace::new(self.protocol, self.topo)?;
        let outcomes = (0..trials)
            .map(|t| self.run_trial(&space, init, master, t))
            .collect::<Result<Vec<_>>>()?;
        let stats = TrialStats::from_outcomes(&outcomes);
        Ok((outcomes, stats))
    }
}

pub fn random_configuration<S: Clone + Ord>(space: &StateSpace<S>, rng: &mut dyn RngCore) -> Configuration<S> {
    Configuration::new((0..space.process_count()).map(|p| space.domain(p)[rng.gen_range(0..space.domain(p).len())].clone()).collect())
}

/// Hitting-time statistics over the converged trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingTimes {
    pub mean: f64,
    pub median: f64,
    pub p95: u64,
    pub std_dev: f64,
    pub std_error: f64,
    /// Half-width of the normal 95% confidence interval for the mean.
    pub ci95_half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub trials: u64,
    pub converged: u64,
    pub not_converged: u64,
    pub stuck_terminal: u64,
    pub convergence_rate: f64,
    /// `None` when no trial converged.
    pub hitting: Option<HittingTimes>,
}

impl TrialStats {
    /// Aggregates outcomes; the result does not depend on their order.
    pub fn from_outcomes(outcomes: &[TrialOutcome]) -> Self {
        let mut times: Vec<u64> = outcomes.iter().filter_map(|o| o.steps_to_legitimate).collect();
        times.sort_unstable();
        let trials = outcomes.len() as u64;
        let converged = times.len() as u64;
        let stuck_terminal = outcomes.iter().filter(|o| o.stuck_terminal).count() as u64;
        let hitting = (!times.is_empty()).then(|| hitting_times(&times));
        TrialStats {
            trials,
            converged,
            not_converged: trials - converged,
            stuck_terminal,
            convergence_rate: if trials == 0 { 0.0 } else { converged as f64 / trials as f64 },
            hitting,
        }
    }
}

/// `sorted` must be nonempty and ascending.
fn hitting_times(sorted: &[u64]) -> HittingTimes {
    let n = sorted.len();
    let sum: u128 = sorted.iter().map(|&t| t as u128).sum();
    let mean = sum as f64 / n as f64;
    let var = if n > 1 {
        sorted.iter().map(|&t| (t as f64 - mean) * (t as f64 - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std_dev = libm::sqrt(var);
    let std_error = std_dev / libm::sqrt(n as f64);
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    // nearest rank
    let rank = libm::ceil(0.95 * n as f64) as usize;
    let p95 = sorted[rank.clamp(1, n) - 1];
    HittingTimes { mean, median, p95, std_dev, std_error, ci95_half_width: 1.96 * std_error }
}

//! Coin-toss transformer: every action `guard -> S` of a deterministic
//! protocol becomes `guard -> b := coin(); if b then S`.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::protocols::Specification;
use crate::system::{Activation, ActionId, Configuration, LocalView, ProcessId, Protocol, Source, StateSource};
use crate::topology::Topology;

/// Original local state plus the coin variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransformedState<S> {
    pub base: S,
    pub b: bool,
}

impl<S> TransformedState<S> {
    pub fn new(base: S, b: bool) -> Self {
        TransformedState { base, b }
    }
}

impl<S: fmt::Display> fmt::Display for TransformedState<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base, if self.b { 1 } else { 0 })
    }
}

struct BaseProjection<'a, S>(Source<'a, TransformedState<S>>);

impl<S> StateSource<S> for BaseProjection<'_, S> {
    fn state_of(&self, p: ProcessId) -> &S {
        &self.0.state_of(p).base
    }
}

#[derive(Debug, Clone)]
pub struct Transformed<P> {
    inner: P,
    bias: f64,
}

impl<P: Protocol> Transformed<P> {
    /// Wraps `inner` with a fair coin.
    pub fn new(inner: P) -> Result<Self> {
        Self::with_bias(inner, 0.5)
    }

    /// Wraps `inner` with a coin that lands `true` with probability `bias`.
    pub fn with_bias(inner: P, bias: f64) -> Result<Self> {
        if inner.is_probabilistic() {
            return Err(Error::input(format!("{} is already probabilistic", inner.name())));
        }
        if !(bias > 0.0 && bias < 1.0) {
            return Err(Error::input(format!("coin bias must lie in (0, 1), got {bias}")));
        }
        Ok(Transformed { inner, bias })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Runs `action` with a predetermined toss.
    pub fn execute_with_toss(
        &self,
        view: &LocalView<'_, TransformedState<P::State>>,
        action: ActionId,
        toss: bool,
    ) -> TransformedState<P::State> {
        let base = if toss {
            let proj = BaseProjection(view.source());
            self.inner.execute(&view.project(&proj), action, &mut crate::system::NoRandomness)
        } else {
            view.state().base.clone()
        };
        TransformedState { base, b: toss }
    }

    /// Synchronous-style step where the activated processes in `winners`
    /// win their toss and all others lose it.
    pub fn apply_with_tosses(
        &self,
        topo: &Topology,
        cfg: &[TransformedState<P::State>],
        act: &Activation,
        winners: &[ProcessId],
    ) -> Result<Configuration<TransformedState<P::State>>> {
        for &(p, a) in act.pairs() {
            if !self.guard(&LocalView::new(topo, cfg, p), a) {
                return Err(Error::ContractViolation { process: p, action: a });
            }
        }
        let mut next = cfg.to_vec();
        for &(p, a) in act.pairs() {
            next[p] = self.execute_with_toss(&LocalView::new(topo, cfg, p), a, winners.contains(&p));
        }
        Ok(Configuration::new(next))
    }
}

/// Base part of a transformed configuration.
pub fn project<S: Clone>(cfg: &[TransformedState<S>]) -> Configuration<S> {
    Configuration::new(cfg.iter().map(|s| s.base.clone()).collect())
}

/// Lifts a base configuration with every coin set to `b`.
pub fn lift<S: Clone>(cfg: &[S], b: bool) -> Configuration<TransformedState<S>> {
    Configuration::new(cfg.iter().map(|s| TransformedState::new(s.clone(), b)).collect())
}

impl<P: Protocol> Protocol for Transformed<P> {
    type State = TransformedState<P::State>;

    fn name(&self) -> &str {
        self.inner.name()
    }

    fn labels(&self) -> &[&'static str] {
        self.inner.labels()
    }

    fn domain(&self, topo: &Topology, p: ProcessId) -> Vec<Self::State> {
        let base = self.inner.domain(topo, p);
        let mut out: Vec<Self::State> = base
            .iter()
            .flat_map(|s| [false, true].map(|b| TransformedState::new(s.clone(), b)))
            .collect();
        out.sort();
        out
    }

    fn guard(&self, view: &LocalView<'_, Self::State>, action: ActionId) -> bool {
        let proj = BaseProjection(view.source());
        self.inner.guard(&view.project(&proj), action)
    }

    fn execute(&self, view: &LocalView<'_, Self::State>, action: ActionId, rng: &mut dyn RngCore) -> Self::State {
        let toss = rng.gen_bool(self.bias);
        self.execute_with_toss(view, action, toss)
    }

    fn is_probabilistic(&self) -> bool {
        true
    }

    fn support(&self, view: &LocalView<'_, Self::State>, action: ActionId) -> Vec<Self::State> {
        let mut out: Vec<Self::State> =
            [false, true].iter().map(|&toss| self.execute_with_toss(view, action, toss)).collect();
        out.sort();
        out.dedup();
        out
    }
}

impl<P: Specification> Specification for Transformed<P> {
    /// Reads the base states only; the coins are ignored.
    fn is_legitimate(&self, topo: &Topology, cfg: &[Self::State]) -> bool {
        self.inner.is_legitimate(topo, &project(cfg))
    }

    /// A step either leaves the base configuration as it was (every toss
    /// lost) or is a step satisfying the inner observable.
    fn observable(&self, topo: &Topology, from: &[Self::State], to: &[Self::State]) -> bool {
        let (from, to) = (project(from), project(to));
        from == to || self.inner.observable(topo, &from, &to)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::{FlagState, TokenCirculation, TokenState, TwoFlag};
    use crate::system::{enabled, successors, SchedulerClass};
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn rejects_probabilistic_input() {
        let once = Transformed::new(TwoFlag::new()).unwrap();
        assert!(matches!(Transformed::new(once), Err(Error::InvalidInput(_))));
        assert!(Transformed::with_bias(TwoFlag::new(), 1.0).is_err());
    }

    #[test]
    fn labels_and_domain() {
        let topo = TwoFlag::topology();
        let t = Transformed::new(TwoFlag::new()).unwrap();
        assert_eq!(t.labels(), TwoFlag::new().labels());
        assert_eq!(t.domain(&topo, 0).len(), 4);
        assert!(t.is_probabilistic());
    }

    #[test]
    fn synchronous_outcomes_from_false_false() {
        let topo = TwoFlag::topology();
        let t = Transformed::new(TwoFlag::new()).unwrap();
        let start = lift(&[FlagState(false), FlagState(false)], false);
        let next = successors(&t, &topo, &start, SchedulerClass::Synchronous).unwrap();
        // four toss outcomes, one of which sets both flags
        assert_eq!(next.len(), 4);
        let both: Vec<_> = next.iter().filter(|c| project(c).iter().all(|s| s.0)).collect();
        assert_eq!(both.len(), 1);
    }

    #[test]
    fn losing_toss_keeps_base() {
        let topo = Topology::ring(6).unwrap();
        let t = Transformed::new(TokenCirculation::new(&topo).unwrap()).unwrap();
        let cfg = lift(&[0, 1, 2, 3, 0, 1].map(TokenState), true);
        let act = Activation::single(0, 0);
        let lost = t.apply_with_tosses(&topo, &cfg, &act, &[]).unwrap();
        assert_eq!(project(&lost), project(&cfg));
        assert!(!lost[0].b);
        let won = t.apply_with_tosses(&topo, &cfg, &act, &[0]).unwrap();
        assert_eq!(won[0].base, TokenState(2));
    }

    #[test]
    fn guards_ignore_coins() {
        let topo = TwoFlag::topology();
        let t = Transformed::new(TwoFlag::new()).unwrap();
        for b0 in [false, true] {
            for b1 in [false, true] {
                let cfg = vec![
                    TransformedState::new(FlagState(false), b0),
                    TransformedState::new(FlagState(false), b1),
                ];
                assert_eq!(enabled(&t, &topo, &cfg, 0), vec![TwoFlag::SET]);
            }
        }
    }
}

//! Per-protocol rendering and parsing of configurations, and dispatch from
//! protocol names to concrete protocol types.

use clap::ValueEnum;
use serde_json::{json, Value};
use stabilab_core::protocols::leader::{from_parents, to_parents};
use stabilab_core::protocols::token::configuration_with_holders;
use stabilab_core::transformer::lift;
use stabilab_core::{
    Configuration, FlagState, LeaderElection, LeaderState, Specification, TokenCirculation, TokenState, Topology,
    Transformed, TransformedState, TwoFlag,
};

use crate::error::CliError;
use crate::format::{as_bool, as_int, parse_assignments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolKind {
    Token,
    Leader,
    TwoFlag,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Token => "token",
            ProtocolKind::Leader => "leader",
            ProtocolKind::TwoFlag => "two-flag",
        }
    }
}

/// What the command line needs from a protocol beyond its specification.
pub trait Instance: Specification + Sync
where
    Self::State: Send + Sync,
{
    /// Report form of a configuration.
    fn render(&self, topo: &Topology, cfg: &[Self::State]) -> Value;

    fn parse_config(&self, topo: &Topology, literal: &str) -> Result<Configuration<Self::State>, CliError>;

    /// Configuration whose token holders are exactly `holders`.
    fn with_token_holders(
        &self,
        _topo: &Topology,
        _holders: &[usize],
    ) -> Result<Configuration<Self::State>, CliError> {
        Err(CliError::usage("--two-token-init applies to the token protocol only"))
    }
}

fn list<'a>(
    map: &'a std::collections::BTreeMap<String, Vec<Value>>,
    name: &str,
    topo: &Topology,
) -> Result<&'a [Value], CliError> {
    let values = map.get(name).ok_or_else(|| CliError::usage(format!("--init: missing `{name}=[...]`")))?;
    if values.len() != topo.node_count() {
        return Err(CliError::usage(format!(
            "--init: `{name}` has {} entries for {} processes",
            values.len(),
            topo.node_count()
        )));
    }
    Ok(values)
}

fn only(map: &std::collections::BTreeMap<String, Vec<Value>>, allowed: &[&str]) -> Result<(), CliError> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::usage(format!("--init: unexpected `{k}` (expected {})", allowed.join(", ")))),
        None => Ok(()),
    }
}

impl Instance for TokenCirculation {
    fn render(&self, _topo: &Topology, cfg: &[TokenState]) -> Value {
        json!({ "dt": cfg.iter().map(|s| s.0).collect::<Vec<_>>() })
    }

    fn parse_config(&self, topo: &Topology, literal: &str) -> Result<Configuration<TokenState>, CliError> {
        let map = parse_assignments(literal)?;
        only(&map, &["dt"])?;
        let states = list(&map, "dt", topo)?
            .iter()
            .map(|v| {
                let x = as_int(v, "dt")?;
                if x < 0 || x >= self.modulus() as i64 {
                    return Err(CliError::usage(format!("--init: dt value {x} outside 0..{}", self.modulus())));
                }
                Ok(TokenState(x as u8))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Configuration::new(states))
    }

    fn with_token_holders(&self, topo: &Topology, holders: &[usize]) -> Result<Configuration<TokenState>, CliError> {
        configuration_with_holders(self, topo, holders)?
            .map(Configuration::new)
            .ok_or_else(|| CliError::usage(format!("no configuration has exactly the token holders {holders:?}")))
    }
}

impl Instance for LeaderElection {
    /// Parents as neighbor identities, -1 for ⊥.
    fn render(&self, topo: &Topology, cfg: &[LeaderState]) -> Value {
        let par: Vec<i64> = to_parents(topo, cfg).iter().map(|p| p.map_or(-1, |q| q as i64)).collect();
        json!({ "par": par })
    }

    fn parse_config(&self, topo: &Topology, literal: &str) -> Result<Configuration<LeaderState>, CliError> {
        let map = parse_assignments(literal)?;
        only(&map, &["par"])?;
        let parents = list(&map, "par", topo)?
            .iter()
            .map(|v| match as_int(v, "par")? {
                -1 => Ok(None),
                q if q >= 0 => Ok(Some(q as usize)),
                q => Err(CliError::usage(format!("--init: parent {q} is neither -1 nor a process"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Configuration::new(from_parents(topo, &parents)?))
    }
}

impl Instance for TwoFlag {
    fn render(&self, _topo: &Topology, cfg: &[FlagState]) -> Value {
        json!({ "B": cfg.iter().map(|s| s.0).collect::<Vec<_>>() })
    }

    fn parse_config(&self, topo: &Topology, literal: &str) -> Result<Configuration<FlagState>, CliError> {
        let map = parse_assignments(literal)?;
        only(&map, &["B"])?;
        let states = list(&map, "B", topo)?
            .iter()
            .map(|v| Ok(FlagState(as_bool(v, "B")?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Configuration::new(states))
    }
}

impl<P> Instance for Transformed<P>
where
    P: Instance + Clone,
    P::State: Send + Sync,
{
    fn render(&self, topo: &Topology, cfg: &[TransformedState<P::State>]) -> Value {
        let base: Vec<P::State> = cfg.iter().map(|s| s.base.clone()).collect();
        let mut v = self.inner().render(topo, &base);
        v["b"] = json!(cfg.iter().map(|s| s.b).collect::<Vec<_>>());
        v
    }

    /// The base literal plus an optional `b=[...]` (default all false).
    fn parse_config(
        &self,
        topo: &Topology,
        literal: &str,
    ) -> Result<Configuration<TransformedState<P::State>>, CliError> {
        let mut base_parts = Vec::new();
        let mut coins = None;
        for part in literal.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            if part.split_once('=').map(|(n, _)| n.trim()) == Some("b") {
                let map = parse_assignments(part)?;
                let bits = list(&map, "b", topo)?
                    .iter()
                    .map(|v| as_bool(v, "b"))
                    .collect::<Result<Vec<_>, _>>()?;
                coins = Some(bits);
            } else {
                base_parts.push(part);
            }
        }
        let base = self.inner().parse_config(topo, &base_parts.join(";"))?;
        let mut cfg = lift(&base, false);
        if let Some(bits) = coins {
            for (s, b) in cfg.iter_mut().zip(bits) {
                s.b = b;
            }
        }
        Ok(cfg)
    }

    fn with_token_holders(
        &self,
        topo: &Topology,
        holders: &[usize],
    ) -> Result<Configuration<TransformedState<P::State>>, CliError> {
        Ok(lift(&self.inner().with_token_holders(topo, holders)?, false))
    }
}

/// Runs `$body` with `$p` bound to a reference to the requested protocol,
/// built for `$topo`.
#[macro_export]
macro_rules! with_protocol {
    ($kind:expr, $transform:expr, $topo:expr, |$p:ident| $body:expr) => {{
        use stabilab_core::{LeaderElection, TokenCirculation, Transformed, TwoFlag};
        use $crate::instance::ProtocolKind;
        let topo: &stabilab_core::Topology = $topo;
        match ($kind, $transform) {
            (ProtocolKind::Token, false) => {
                let $p = &TokenCirculation::new(topo)?;
                $body
            }
            (ProtocolKind::Token, true) => {
                let $p = &Transformed::new(TokenCirculation::new(topo)?)?;
                $body
            }
            (ProtocolKind::Leader, false) => {
                let $p = &LeaderElection::new(topo)?;
                $body
            }
            (ProtocolKind::Leader, true) => {
                let $p = &Transformed::new(LeaderElection::new(topo)?)?;
                $body
            }
            (ProtocolKind::TwoFlag, false) => {
                TwoFlag::check_topology(topo)?;
                let $p = &TwoFlag;
                $body
            }
            (ProtocolKind::TwoFlag, true) => {
                TwoFlag::check_topology(topo)?;
                let $p = &Transformed::new(TwoFlag)?;
                $body
            }
        }
    }};
}

//! The run report: one JSON document with the sections `spec`, `verdicts`,
//! `witnesses` and `stats`. Sections keep this order, keys inside them are
//! sorted, and the document contains nothing that depends on timing or
//! thread count, so identical runs give identical bytes.
//!
//! Field names:
//!
//! - `verdicts` of `check`: `weak_stabilizing`, `possible_convergence`,
//!   `closure`, `configurations`, `edges`, `terminal`, `legitimate`,
//!   `stuck_total`, `closure_edges_checked`, `synchronous_lasso`.
//! - `verdicts` of `lasso`: `found`, `avoids_legitimate`, `weak_fair`,
//!   `strong_fair`, `gouda_fair`, `witness` (under the requested fairness).
//! - `stats` of `simulate`/`estimate`: `trials`, `converged`,
//!   `not_converged`, `stuck_terminal`, `convergence_rate`, and
//!   `hitting_time` (`mean`, `median`, `p95`, `std_dev`, `std_error`,
//!   `ci95_half_width`) or `null` when no trial converged.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use stabilab_core::analysis::{AnalysisReport, LassoVerdict};
use stabilab_core::montecarlo::{TrialOutcome, TrialStats};
use stabilab_core::{Lasso, Topology};

use crate::error::CliError;
use crate::instance::Instance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub spec: Value,
    pub verdicts: Value,
    pub witnesses: Value,
    pub stats: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report values serialize");
        text.push('\n');
        text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}

pub fn topology_json(topo: &Topology) -> Value {
    let kind = if topo.is_oriented_ring() {
        "ring"
    } else if topo.is_tree() {
        "tree"
    } else {
        "general"
    };
    let ports: Vec<&[usize]> = (0..topo.node_count()).map(|p| topo.neighbors(p)).collect();
    json!({ "kind": kind, "n": topo.node_count(), "ports": ports })
}

pub fn lasso_json<P: Instance>(protocol: &P, topo: &Topology, lasso: &Lasso<P::State>) -> Value
where
    P::State: Send + Sync,
{
    let steps = |steps: &[stabilab_core::Step<P::State>]| -> Vec<Value> {
        steps
            .iter()
            .map(|s| {
                let act: Vec<Value> = s
                    .activation
                    .pairs()
                    .iter()
                    .map(|&(p, a)| json!([p, protocol.labels()[a]]))
                    .collect();
                json!({ "config": protocol.render(topo, &s.config), "activation": act })
            })
            .collect()
    };
    json!({ "prefix": steps(&lasso.prefix), "cycle": steps(&lasso.cycle) })
}

pub fn lasso_verdicts(found: bool, verdicts: &[LassoVerdict], requested: Option<&LassoVerdict>) -> Value {
    let fair = |name: &str| verdicts.iter().find(|v| v.kind.name() == name).map(|v| v.fair);
    json!({
        "found": found,
        "avoids_legitimate": verdicts.first().map(|v| v.avoids_legitimate),
        "weak_fair": fair("weak"),
        "strong_fair": fair("strong"),
        "gouda_fair": fair("gouda"),
        "prefix_len": verdicts.first().map(|v| v.prefix_len),
        "cycle_len": verdicts.first().map(|v| v.cycle_len),
        "witness": requested.is_some_and(|v| v.is_witness()),
    })
}

pub fn analysis_json<P: Instance>(
    protocol: &P,
    topo: &Topology,
    report: &AnalysisReport<P::State>,
) -> (Value, Value)
where
    P::State: Send + Sync,
{
    let verdicts = json!({
        "weak_stabilizing": report.weak_stabilizing(),
        "possible_convergence": report.convergence.holds,
        "closure": report.closure.holds,
        "configurations": report.configurations,
        "edges": report.edges,
        "terminal": report.terminal,
        "legitimate": report.convergence.legitimate,
        "stuck_total": report.convergence.stuck_total,
        "closure_edges_checked": report.closure.edges_checked,
        "synchronous_lasso": report.counterexample.is_some(),
    });
    let stuck: Vec<Value> = report.convergence.stuck.iter().map(|c| protocol.render(topo, c)).collect();
    let witnesses = json!({
        "stuck_sample": stuck,
        "closure_violation": report.closure.violation.as_ref().map(|(a, b)| json!({
            "from": protocol.render(topo, a),
            "to": protocol.render(topo, b),
        })),
        "synchronous_lasso": report.counterexample.as_ref().map(|l| lasso_json(protocol, topo, l)),
    });
    (verdicts, witnesses)
}

pub fn stats_json(stats: &TrialStats) -> Value {
    json!({
        "trials": stats.trials,
        "converged": stats.converged,
        "not_converged": stats.not_converged,
        "stuck_terminal": stats.stuck_terminal,
        "convergence_rate": stats.convergence_rate,
        "hitting_time": stats.hitting.map(|h| json!({
            "mean": h.mean,
            "median": h.median,
            "p95": h.p95,
            "std_dev": h.std_dev,
            "std_error": h.std_error,
            "ci95_half_width": h.ci95_half_width,
        })),
    })
}

#[derive(Debug, Serialize)]
struct CsvRow {
    trial: u64,
    seed: u64,
    initial: usize,
    converged: bool,
    steps: Option<u64>,
    stuck_terminal: bool,
}

/// One row per trial.
pub fn write_csv(path: &Path, outcomes: &[TrialOutcome]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for o in outcomes {
        w.serialize(CsvRow {
            trial: o.trial,
            seed: o.seed,
            initial: o.initial,
            converged: o.converged,
            steps: o.steps_to_legitimate,
            stuck_terminal: o.stuck_terminal,
        })?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

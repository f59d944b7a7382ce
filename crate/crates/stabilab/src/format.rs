//! Text formats: topology files, inline topologies, schedule scripts and
//! configuration literals.
//!
//! A topology file is TOML:
//!
//! ```toml
//! type = "ring"
//! n = 6
//! ```
//!
//! or a tree given by edges (`edges = [[0, 1], [1, 2]]`) or by explicit
//! port lists (`ports = [[1], [0, 2], [3, 1], [2]]`, port `i` of process `p`
//! is `ports[p][i]`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use stabilab_core::{ProcessId, Topology};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(rename = "type")]
    pub kind: TopologyFileKind,
    pub n: Option<usize>,
    pub edges: Option<Vec<[ProcessId; 2]>>,
    pub ports: Option<Vec<Vec<ProcessId>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyFileKind {
    Ring,
    Tree,
}

impl TopologyFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::usage(format!("topology file: {e}")))
    }

    pub fn build(&self) -> Result<Topology, CliError> {
        match self.kind {
            TopologyFileKind::Ring => {
                let n = self.n.ok_or_else(|| CliError::usage("topology file: a ring needs `n`"))?;
                if self.edges.is_some() || self.ports.is_some() {
                    return Err(CliError::usage("topology file: a ring takes only `n`"));
                }
                ring(n)
            }
            TopologyFileKind::Tree => {
                let topo = match (&self.edges, &self.ports) {
                    (Some(edges), None) => {
                        let edges: Vec<_> = edges.iter().map(|e| (e[0], e[1])).collect();
                        Topology::tree(&edges)?
                    }
                    (None, Some(ports)) => Topology::with_ports(ports.clone())?,
                    _ => return Err(CliError::usage("topology file: a tree needs exactly one of `edges` or `ports`")),
                };
                if !topo.is_tree() {
                    return Err(CliError::usage("topology file: the port lists do not describe a tree"));
                }
                if let Some(n) = self.n {
                    if n != topo.node_count() {
                        return Err(CliError::usage(format!(
                            "topology file: n = {n} but the tree has {} processes",
                            topo.node_count()
                        )));
                    }
                }
                Ok(topo)
            }
        }
    }
}

pub fn read_topology_file(path: &Path) -> Result<Topology, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    TopologyFile::parse(&text)?.build()
}

pub fn ring(n: usize) -> Result<Topology, CliError> {
    if n < 3 {
        return Err(CliError::usage(format!("--ring: a ring needs at least 3 processes, got {n}")));
    }
    Ok(Topology::ring(n)?)
}

/// `"0-1,1-2,2-3"`.
pub fn parse_edges(text: &str) -> Result<Vec<(ProcessId, ProcessId)>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|edge| {
            let (a, b) = edge
                .split_once('-')
                .ok_or_else(|| CliError::usage(format!("--tree: `{edge}` is not of the form a-b")))?;
            Ok((parse_id(a, "--tree")?, parse_id(b, "--tree")?))
        })
        .collect()
}

fn parse_id(text: &str, flag: &str) -> Result<ProcessId, CliError> {
    text.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("{flag}: `{}` is not a process identity", text.trim())))
}

fn parse_step(line: &str, flag: &str) -> Result<Vec<ProcessId>, CliError> {
    let step: Vec<ProcessId> = line
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_id(s, flag))
        .collect::<Result<_, _>>()?;
    if step.is_empty() {
        return Err(CliError::usage(format!("{flag}: empty schedule step")));
    }
    Ok(step)
}

/// Steps separated by `;`, processes within a step by `,`: `"0;3"`,
/// `"0,2;1"`.
pub fn parse_script(text: &str) -> Result<Vec<Vec<ProcessId>>, CliError> {
    text.split(';').map(|s| parse_step(s, "--script")).collect()
}

/// One step per line, processes comma-separated. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_script_file(text: &str) -> Result<Vec<Vec<ProcessId>>, CliError> {
    let steps: Vec<_> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_step(l, "--script-file"))
        .collect::<Result<_, _>>()?;
    if steps.is_empty() {
        return Err(CliError::usage("--script-file: no steps"));
    }
    Ok(steps)
}

/// `"dt=[0,1,2]"`, `"par=[-1,0,1,2]"`, `"B=[true,false];b=[0,1]"`: named
/// lists separated by `;`. Names are case-sensitive.
pub fn parse_assignments(text: &str) -> Result<BTreeMap<String, Vec<Value>>, CliError> {
    let mut out = BTreeMap::new();
    for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, list) = part
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--init: `{part}` is not of the form name=[...]")))?;
        let values: Vec<Value> = serde_json::from_str(list.trim())
            .map_err(|e| CliError::usage(format!("--init: cannot read the list for `{}`: {e}", name.trim())))?;
        if out.insert(name.trim().to_string(), values).is_some() {
            return Err(CliError::usage(format!("--init: `{}` given twice", name.trim())));
        }
    }
    Ok(out)
}

pub fn as_int(v: &Value, name: &str) -> Result<i64, CliError> {
    v.as_i64().ok_or_else(|| CliError::usage(format!("--init: `{name}` expects integers, got {v}")))
}

/// `true`/`false` or `1`/`0`.
pub fn as_bool(v: &Value, name: &str) -> Result<bool, CliError> {
    match v {
        Value::Bool(b) => Ok(*b),
        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        _ => Err(CliError::usage(format!("--init: `{name}` expects booleans, got {v}"))),
    }
}

//! Port-labeled undirected graphs: oriented rings and trees.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::system::ProcessId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    Ring,
    Tree,
    /// Connected graph that is neither an oriented ring nor a tree.
    General,
}

/// An undirected, connected, simple graph where every process numbers its
/// neighbors with local ports `0..degree`.
///
/// `ports[p][i]` is the neighbor behind port `i` of `p`, and `back[p][i]` is
/// the port under which that neighbor sees `p`. Rings built with
/// [`Topology::ring`] also carry a predecessor port per process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    ports: Vec<Vec<ProcessId>>,
    back: Vec<Vec<usize>>,
    pred: Option<Vec<usize>>,
    kind: TopologyKind,
}

impl Topology {
    /// Oriented ring of `n` processes with `Pred(i) = (i - 1) mod n`.
    ///
    /// Port 0 of every process is its predecessor and port 1 its successor.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::topology(format!("a ring needs at least 3 processes, got {n}")));
        }
        let ports = (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect();
        let mut topo = Self::with_ports(ports)?;
        topo.pred = Some(vec![0; n]);
        topo.kind = TopologyKind::Ring;
        Ok(topo)
    }

    /// Tree over nodes `0..N` from an edge list; neighbors are indexed in
    /// increasing identity order.
    pub fn tree(edges: &[(ProcessId, ProcessId)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::topology("a tree needs at least one edge"));
        }
        let n = edges.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) + 1;
        let mut ports = vec![Vec::new(); n];
        for &(a, b) in edges {
            ports[a].push(b);
            ports[b].push(a);
        }
        for list in &mut ports {
            list.sort_unstable();
        }
        let topo = Self::with_ports(ports)?;
        if topo.kind != TopologyKind::Tree {
            return Err(Error::topology("edge list contains a cycle"));
        }
        Ok(topo)
    }

    /// Graph with an explicit port order at every process.
    pub fn with_ports(ports: Vec<Vec<ProcessId>>) -> Result<Self> {
        let n = ports.len();
        if n == 0 {
            return Err(Error::topology("empty graph"));
        }
        let mut back = Vec::with_capacity(n);
        let mut edge_ends = 0usize;
        for (p, list) in ports.iter().enumerate() {
            let mut row = Vec::with_capacity(list.len());
            for (i, &q) in list.iter().enumerate() {
                if q >= n {
                    return Err(Error::topology(format!("process {p} names unknown neighbor {q}")));
                }
                if q == p {
                    return Err(Error::topology(format!("self-loop at process {p}")));
                }
                if list[..i].contains(&q) {
                    return Err(Error::topology(format!("duplicate edge {p}-{q}")));
                }
                let Some(j) = ports[q].iter().position(|&r| r == p) else {
                    return Err(Error::topology(format!("edge {p}-{q} is not symmetric")));
                };
                row.push(j);
            }
            edge_ends += list.len();
            back.push(row);
        }
        let edges = edge_ends / 2;
        let topo = Topology { ports, back, pred: None, kind: TopologyKind::General };
        if !topo.is_connected() {
            return Err(Error::topology("graph is disconnected"));
        }
        let kind = if edges + 1 == n { TopologyKind::Tree } else { TopologyKind::General };
        Ok(Topology { kind, ..topo })
    }

    /// Chain `0 - 1 - ... - (n-1)` whose ports are numbered so that the
    /// reflection `p -> n-1-p` preserves them: on each side of the middle,
    /// port 0 points away from the center.
    pub fn mirrored_chain(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::topology("a chain needs at least 2 processes"));
        }
        let ports = (0..n)
            .map(|p| {
                let mut list = Vec::new();
                if p > 0 {
                    list.push(p - 1);
                }
                if p + 1 < n {
                    list.push(p + 1);
                }
                if 2 * p >= n {
                    list.reverse();
                }
                list
            })
            .collect();
        Self::with_ports(ports)
    }

    pub fn node_count(&self) -> usize {
        self.ports.len()
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn is_tree(&self) -> bool {
        self.kind == TopologyKind::Tree
    }

    pub fn is_oriented_ring(&self) -> bool {
        self.pred.is_some()
    }

    pub fn degree(&self, p: ProcessId) -> usize {
        self.ports[p].len()
    }

    pub fn max_degree(&self) -> usize {
        self.ports.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, p: ProcessId) -> &[ProcessId] {
        &self.ports[p]
    }

    /// Neighbor of `p` behind local port `port`.
    pub fn neighbor(&self, p: ProcessId, port: usize) -> ProcessId {
        self.ports[p][port]
    }

    /// Port under which the neighbor behind `port` sees `p`.
    pub fn back_port(&self, p: ProcessId, port: usize) -> usize {
        self.back[p][port]
    }

    /// Local port of `q` at `p`, if they are neighbors.
    pub fn port_of(&self, p: ProcessId, q: ProcessId) -> Option<usize> {
        self.ports[p].iter().position(|&r| r == q)
    }

    pub fn pred_port(&self, p: ProcessId) -> Option<usize> {
        self.pred.as_ref().map(|pred| pred[p])
    }

    pub fn pred(&self, p: ProcessId) -> Option<ProcessId> {
        self.pred_port(p).map(|i| self.ports[p][i])
    }

    /// The unique process whose predecessor is `p`.
    pub fn successor(&self, p: ProcessId) -> Option<ProcessId> {
        self.pred.as_ref()?;
        self.ports[p].iter().copied().find(|&q| self.pred(q) == Some(p))
    }

    pub fn edges(&self) -> Vec<(ProcessId, ProcessId)> {
        let mut out = Vec::new();
        for (p, list) in self.ports.iter().enumerate() {
            for &q in list {
                if p < q {
                    out.push((p, q));
                }
            }
        }
        out
    }

    /// BFS distances from `src`.
    pub fn distances(&self, src: ProcessId) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(p) = queue.pop_front() {
            for &q in &self.ports[p] {
                if dist[q] == usize::MAX {
                    dist[q] = dist[p] + 1;
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    pub fn eccentricity(&self, p: ProcessId) -> usize {
        self.distances(p).into_iter().max().unwrap_or(0)
    }

    /// Processes of minimal eccentricity. On a tree this is one process or
    /// two neighbors.
    pub fn centers(&self) -> Result<Vec<ProcessId>> {
        if !self.is_tree() {
            return Err(Error::input("centers are only defined here for trees"));
        }
        let ecc: Vec<usize> = (0..self.node_count()).map(|p| self.eccentricity(p)).collect();
        let best = ecc.iter().copied().min().unwrap_or(0);
        Ok((0..self.node_count()).filter(|&p| ecc[p] == best).collect())
    }

    /// Checks that `sigma` is a graph automorphism that also preserves local
    /// port numbers: the neighbor behind port `i` of `p` maps to the neighbor
    /// behind port `i` of `sigma(p)`.
    pub fn preserves_ports(&self, sigma: &[ProcessId]) -> bool {
        let n = self.node_count();
        if sigma.len() != n || sigma.iter().any(|&s| s >= n) {
            return false;
        }
        let mut seen = vec![false; n];
        for &s in sigma {
            if core::mem::replace(&mut seen[s], true) {
                return false;
            }
        }
        (0..n).all(|p| {
            self.degree(p) == self.degree(sigma[p])
                && self.ports[p]
                    .iter()
                    .zip(&self.ports[sigma[p]])
                    .all(|(&q, &image)| sigma[q] == image)
        })
    }

    fn is_connected(&self) -> bool {
        self.distances(0).iter().all(|&d| d != usize::MAX)
    }
}

//! Exact expected hitting times of the legitimate set, from a direct
//! absorbing-chain solve. The protocol rules are re-stated here over plain
//! integer vectors and share no code with the simulator.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub enum Model {
    TwoFlag,
    /// Ring of `n`, counters modulo `m`.
    Token { n: usize, m: u8 },
    /// Tree adjacency with neighbors sorted ascending (port order).
    Leader { adj: Vec<Vec<usize>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Daemon {
    Synchronous,
    RandomCentral,
    RandomDistributed,
}

fn smallest_non_divisor(n: usize) -> u8 {
    (2..=n + 1).find(|m| !n.is_multiple_of(*m)).unwrap() as u8
}

impl Model {
    pub fn token(n: usize) -> Self {
        Model::Token { n, m: smallest_non_divisor(n) }
    }

    pub fn leader(edges: &[(usize, usize)]) -> Self {
        let n = edges.len() + 1;
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Model::Leader { adj }
    }

    pub fn processes(&self) -> usize {
        match self {
            Model::TwoFlag => 2,
            Model::Token { n, .. } => *n,
            Model::Leader { adj } => adj.len(),
        }
    }

    /// Values of process `p`. Leader: 0 is ⊥, k + 1 points at port k.
    fn radix(&self, p: usize) -> usize {
        match self {
            Model::TwoFlag => 2,
            Model::Token { m, .. } => *m as usize,
            Model::Leader { adj } => adj[p].len() + 1,
        }
    }

    pub fn all_configs(&self) -> Vec<Vec<u8>> {
        let mut out = vec![Vec::new()];
        for p in 0..self.processes() {
            let mut next = Vec::new();
            for c in &out {
                for v in 0..self.radix(p) {
                    let mut c = c.clone();
                    c.push(v as u8);
                    next.push(c);
                }
            }
            out = next;
        }
        out
    }

    fn leader_parent(adj: &[Vec<usize>], c: &[u8], p: usize) -> Option<usize> {
        (c[p] > 0).then(|| adj[p][c[p] as usize - 1])
    }

    /// New value of `p` if `p` is enabled.
    pub fn step_of(&self, c: &[u8], p: usize) -> Option<u8> {
        match self {
            Model::TwoFlag => {
                let (me, other) = (c[p] == 1, c[1 - p] == 1);
                match (me, other) {
                    (false, false) => Some(1),
                    (true, false) => Some(0),
                    _ => None,
                }
            }
            Model::Token { n, m } => {
                let pred = c[(p + n - 1) % n];
                let want = (pred + 1) % m;
                (c[p] != want).then_some(want)
            }
            Model::Leader { adj } => {
                let deg = adj[p].len();
                let child: Vec<bool> = adj[p].iter().map(|&q| Self::leader_parent(adj, c, q) == Some(p)).collect();
                let kids = child.iter().filter(|&&k| k).count();
                match Self::leader_parent(adj, c, p) {
                    Some(par) => {
                        if kids == deg {
                            Some(0)
                        } else if adj[p].iter().zip(&child).any(|(&q, &k)| q != par && !k) {
                            let port = c[p] as usize - 1;
                            Some(((port + 1) % deg) as u8 + 1)
                        } else {
                            None
                        }
                    }
                    None if kids < deg => {
                        let port = child.iter().position(|&k| !k).unwrap();
                        Some(port as u8 + 1)
                    }
                    None => None,
                }
            }
        }
    }

    pub fn legitimate(&self, c: &[u8]) -> bool {
        match self {
            Model::TwoFlag => c.iter().all(|&b| b == 1),
            Model::Token { .. } => (0..c.len()).filter(|&p| self.step_of(c, p).is_some()).count() == 1,
            Model::Leader { adj } => {
                let roots: Vec<usize> = (0..c.len()).filter(|&p| c[p] == 0).collect();
                if roots.len() != 1 {
                    return false;
                }
                // every parent chain reaches the unique root
                (0..c.len()).all(|mut p| {
                    for _ in 0..c.len() {
                        match Self::leader_parent(adj, c, p) {
                            Some(q) => p = q,
                            None => break,
                        }
                    }
                    p == roots[0]
                })
            }
        }
    }

    /// One-step distribution from `c`. `coins` applies the coin toss to
    /// every activated process.
    pub fn transitions(&self, c: &[u8], daemon: Daemon, coins: bool) -> BTreeMap<Vec<u8>, f64> {
        let enabled: Vec<usize> = (0..c.len()).filter(|&p| self.step_of(c, p).is_some()).collect();
        let mut out = BTreeMap::new();
        if enabled.is_empty() {
            out.insert(c.to_vec(), 1.0);
            return out;
        }
        let k = enabled.len();
        let subsets: Vec<(Vec<usize>, f64)> = match daemon {
            Daemon::Synchronous => vec![(enabled.clone(), 1.0)],
            Daemon::RandomCentral => enabled.iter().map(|&p| (vec![p], 1.0 / k as f64)).collect(),
            Daemon::RandomDistributed => {
                let w = 1.0 / ((1u64 << k) - 1) as f64;
                (1u64..1 << k)
                    .map(|mask| ((0..k).filter(|i| mask >> i & 1 == 1).map(|i| enabled[i]).collect(), w))
                    .collect()
            }
        };
        for (chosen, w) in subsets {
            let outcomes: Vec<(Vec<usize>, f64)> = if coins {
                let s = chosen.len();
                let each = w / (1u64 << s) as f64;
                (0u64..1 << s)
                    .map(|mask| ((0..s).filter(|i| mask >> i & 1 == 1).map(|i| chosen[i]).collect(), each))
                    .collect()
            } else {
                vec![(chosen, w)]
            };
            for (movers, pr) in outcomes {
                let mut next = c.to_vec();
                for &p in &movers {
                    next[p] = self.step_of(c, p).unwrap();
                }
                *out.entry(next).or_insert(0.0) += pr;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub configs: Vec<Vec<u8>>,
    /// Expected steps to the legitimate set; `None` where it is infinite.
    pub expected: Vec<Option<f64>>,
}

impl Solution {
    pub fn all_finite(&self) -> bool {
        self.expected.iter().all(Option::is_some)
    }

    /// Mean over a uniformly random initial configuration.
    pub fn uniform_mean(&self) -> Option<f64> {
        let sum: Option<f64> = self.expected.iter().copied().sum();
        sum.map(|s| s / self.expected.len() as f64)
    }

    pub fn at(&self, c: &[u8]) -> Option<f64> {
        self.expected[self.configs.iter().position(|x| x == c).unwrap()]
    }
}

pub fn solve(model: &Model, daemon: Daemon, coins: bool) -> Solution {
    let configs = model.all_configs();
    let index: BTreeMap<Vec<u8>, usize> = configs.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let n = configs.len();
    let legit: Vec<bool> = configs.iter().map(|c| model.legitimate(c)).collect();
    let rows: Vec<Vec<(usize, f64)>> = configs
        .iter()
        .map(|c| model.transitions(c, daemon, coins).into_iter().map(|(d, p)| (index[&d], p)).collect())
        .collect();
    // states that reach the legitimate set with positive probability
    let mut reach = legit.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if !reach[i] && rows[i].iter().any(|&(j, _)| reach[j]) {
                reach[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // finite expectation iff no reachable state is outside `reach`
    let mut finite = reach.clone();
    loop {
        let mut changed = false;
        for i in 0..n {
            if finite[i] && !legit[i] && rows[i].iter().any(|&(j, _)| !finite[j]) {
                finite[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let transient: Vec<usize> = (0..n).filter(|&i| finite[i] && !legit[i]).collect();
    let pos: BTreeMap<usize, usize> = transient.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let t = transient.len();
    let mut a = DMatrix::<f64>::identity(t, t);
    for (k, &i) in transient.iter().enumerate() {
        for &(j, p) in &rows[i] {
            if let Some(&kj) = pos.get(&j) {
                a[(k, kj)] -= p;
            }
        }
    }
    let x = if t == 0 {
        DVector::zeros(0)
    } else {
        a.lu().solve(&DVector::from_element(t, 1.0)).expect("fundamental matrix is invertible")
    };
    let expected = (0..n)
        .map(|i| {
            if legit[i] {
                Some(0.0)
            } else if finite[i] {
                Some(x[pos[&i]])
            } else {
                None
            }
        })
        .collect();
    Solution { configs, expected }
}

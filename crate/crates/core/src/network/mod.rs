//! Signed undirected networks and block assignments.
//!
//! Node ids are 0-based everywhere in memory. The text formats in [`io`]
//! are 1-based and convert at the boundary.

pub mod io;

use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of an existing edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Pos, Sign::Neg];

    pub fn from_int(value: i64) -> Option<Sign> {
        match value {
            1 => Some(Sign::Pos),
            -1 => Some(Sign::Neg),
            _ => None,
        }
    }

    pub fn as_int(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    #[inline]
    pub(crate) fn slot(self) -> usize {
        match self {
            Sign::Pos => 0,
            Sign::Neg => 1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Pos => "+",
            Sign::Neg => "-",
        })
    }
}

/// Value of a dyad: negative, absent or positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DyadValue {
    Neg,
    Zero,
    Pos,
}

impl DyadValue {
    pub const ALL: [DyadValue; 3] = [DyadValue::Neg, DyadValue::Zero, DyadValue::Pos];

    /// Position in `[-, 0, +]` tables.
    #[inline]
    pub fn index(self) -> usize {
        match self {
            DyadValue::Neg => 0,
            DyadValue::Zero => 1,
            DyadValue::Pos => 2,
        }
    }

    #[inline]
    pub fn sign(self) -> Option<Sign> {
        match self {
            DyadValue::Neg => Some(Sign::Neg),
            DyadValue::Zero => None,
            DyadValue::Pos => Some(Sign::Pos),
        }
    }
}

impl From<Option<Sign>> for DyadValue {
    fn from(sign: Option<Sign>) -> Self {
        match sign {
            Some(Sign::Neg) => DyadValue::Neg,
            Some(Sign::Pos) => DyadValue::Pos,
            None => DyadValue::Zero,
        }
    }
}

impl From<Sign> for DyadValue {
    fn from(sign: Sign) -> Self {
        Some(sign).into()
    }
}

/// Sparse undirected signed graph.
///
/// Every node keeps a neighbor list sorted by node id, so dyad lookups are a
/// binary search and the canonical `i < j` edge list falls out of a scan.
/// Absent dyads have value 0. Values can only be changed inside the crate
/// (the samplers); the public surface is read-only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedNetwork {
    adj: Vec<Vec<(usize, Sign)>>,
    degree: Vec<[usize; 2]>,
    counts: [usize; 2],
}

impl SignedNetwork {
    /// Empty network on `n` nodes.
    pub fn empty(n: usize) -> Self {
        SignedNetwork {
            adj: vec![Vec::new(); n],
            degree: vec![[0; 2]; n],
            counts: [0; 2],
        }
    }

    /// Builds a network from `(i, j, sign)` records with 0-based ids.
    ///
    /// Records are folded onto `i < j`. Repeating a dyad with the same sign is
    /// accepted (with a warning); repeating it with the other sign is an error.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Sign)>,
    {
        let mut net = SignedNetwork::empty(n);
        for (i, j, sign) in edges {
            net.insert_checked(i, j, sign)?;
        }
        Ok(net)
    }

    pub(crate) fn insert_checked(&mut self, i: usize, j: usize, sign: Sign) -> Result<bool> {
        let n = self.n_nodes();
        if i >= n || j >= n {
            return Err(Error::invalid(format!(
                "node id out of range: ({}, {}) with N={}",
                i + 1,
                j + 1,
                n
            )));
        }
        if i == j {
            return Err(Error::invalid(format!("self-loop at node {}", i + 1)));
        }
        match self.sign(i, j) {
            Some(existing) if existing == sign => {
                warn!("duplicate record for dyad ({}, {})", i.min(j) + 1, i.max(j) + 1);
                Ok(false)
            }
            Some(_) => Err(Error::invalid(format!(
                "conflicting signs for dyad ({}, {})",
                i.min(j) + 1,
                i.max(j) + 1
            ))),
            None => {
                self.set(i, j, sign.into());
                Ok(true)
            }
        }
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Number of unordered pairs of distinct nodes.
    #[inline]
    pub fn n_dyads(&self) -> usize {
        let n = self.n_nodes();
        n * n.saturating_sub(1) / 2
    }

    #[inline]
    pub fn n_edges(&self) -> usize {
        self.counts[0] + self.counts[1]
    }

    #[inline]
    pub fn n_edges_of(&self, sign: Sign) -> usize {
        self.counts[sign.slot()]
    }

    /// Sorted `(neighbor, sign)` list of node `i`.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[(usize, Sign)] {
        &self.adj[i]
    }

    #[inline]
    pub fn sign(&self, i: usize, j: usize) -> Option<Sign> {
        let row = &self.adj[i];
        row.binary_search_by_key(&j, |&(h, _)| h)
            .ok()
            .map(|pos| row[pos].1)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> DyadValue {
        self.sign(i, j).into()
    }

    /// Number of edges of the given sign incident to `i`.
    #[inline]
    pub fn signed_degree(&self, i: usize, sign: Sign) -> usize {
        self.degree[i][sign.slot()]
    }

    /// Canonical edge list, `i < j`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Sign)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, row)| {
            let start = row.partition_point(|&(h, _)| h <= i);
            row[start..].iter().map(move |&(j, s)| (i, j, s))
        })
    }

    /// Number of dyads `i < j` whose values differ.
    pub fn hamming_distance(&self, other: &SignedNetwork) -> Result<usize> {
        if self.n_nodes() != other.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                found: other.n_nodes(),
            });
        }
        let mut distance = 0;
        for (a, b) in self.adj.iter().zip(&other.adj) {
            // Merge the two sorted rows; each differing dyad is seen from both ends.
            let (mut x, mut y) = (0, 0);
            while x < a.len() || y < b.len() {
                match (a.get(x), b.get(y)) {
                    (Some(&(ha, sa)), Some(&(hb, sb))) if ha == hb => {
                        distance += usize::from(sa != sb);
                        x += 1;
                        y += 1;
                    }
                    (Some(&(ha, _)), Some(&(hb, _))) if ha < hb => {
                        distance += 1;
                        x += 1;
                    }
                    (Some(_), None) => {
                        distance += 1;
                        x += 1;
                    }
                    _ => {
                        distance += 1;
                        y += 1;
                    }
                }
            }
        }
        Ok(distance / 2)
    }

    /// Network induced on `nodes`; local id `a` is global node `nodes[a]`.
    pub fn induced(&self, nodes: &[usize]) -> SignedNetwork {
        let local = self.local_index(nodes);
        let mut out = SignedNetwork::empty(nodes.len());
        for (a, &g) in nodes.iter().enumerate() {
            for &(h, s) in &self.adj[g] {
                if let Some(b) = local[h] {
                    if a < b {
                        out.set(a, b, s.into());
                    }
                }
            }
        }
        out
    }

    fn local_index(&self, nodes: &[usize]) -> Vec<Option<usize>> {
        let mut local = vec![None; self.n_nodes()];
        for (a, &g) in nodes.iter().enumerate() {
            local[g] = Some(a);
        }
        local
    }

    /// Sets dyad `(i, j)` to `value` and returns the previous value.
    pub(crate) fn set(&mut self, i: usize, j: usize, value: DyadValue) -> DyadValue {
        debug_assert!(i != j);
        let old = self.remove(i, j);
        if let Some(sign) = value.sign() {
            Self::insert_sorted(&mut self.adj[i], j, sign);
            Self::insert_sorted(&mut self.adj[j], i, sign);
            self.degree[i][sign.slot()] += 1;
            self.degree[j][sign.slot()] += 1;
            self.counts[sign.slot()] += 1;
        }
        old
    }

    fn remove(&mut self, i: usize, j: usize) -> DyadValue {
        let Ok(pos) = self.adj[i].binary_search_by_key(&j, |&(h, _)| h) else {
            return DyadValue::Zero;
        };
        let (_, sign) = self.adj[i].remove(pos);
        let back = self.adj[j]
            .binary_search_by_key(&i, |&(h, _)| h)
            .expect("adjacency is symmetric");
        self.adj[j].remove(back);
        self.degree[i][sign.slot()] -= 1;
        self.degree[j][sign.slot()] -= 1;
        self.counts[sign.slot()] -= 1;
        sign.into()
    }

    fn insert_sorted(row: &mut Vec<(usize, Sign)>, h: usize, sign: Sign) {
        let pos = row.partition_point(|&(x, _)| x < h);
        row.insert(pos, (h, sign));
    }
}

/// Hard partition of the nodes into `K` blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockAssignment {
    z: Vec<usize>,
    k_blocks: usize,
}

impl BlockAssignment {
    /// `z` holds 0-based block ids, each below `k_blocks`.
    pub fn new(z: Vec<usize>, k_blocks: usize) -> Result<Self> {
        if k_blocks == 0 {
            return Err(Error::invalid("number of blocks must be positive"));
        }
        if let Some((i, &b)) = z.iter().enumerate().find(|(_, &b)| b >= k_blocks) {
            return Err(Error::invalid(format!(
                "node {} assigned to block {} outside 1..={}",
                i + 1,
                b + 1,
                k_blocks
            )));
        }
        Ok(BlockAssignment { z, k_blocks })
    }

    /// Builds an assignment from 1-based block labels, `K` = largest label.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::invalid("block ids are 1-based"));
        }
        let k = labels.iter().copied().max().unwrap_or(1);
        Self::new(labels.iter().map(|&b| b - 1).collect(), k)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.z.len()
    }

    #[inline]
    pub fn n_blocks(&self) -> usize {
        self.k_blocks
    }

    #[inline]
    pub fn block_of(&self, i: usize) -> usize {
        self.z[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.z
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k_blocks];
        for &b in &self.z {
            sizes[b] += 1;
        }
        sizes
    }

    /// Members of every block, each list sorted.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k_blocks];
        for (i, &b) in self.z.iter().enumerate() {
            members[b].push(i);
        }
        members
    }

    /// Logs a warning for every block with fewer than two nodes and returns them.
    pub fn check_block_sizes(&self) -> Vec<usize> {
        let small: Vec<usize> = self
            .sizes()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 2)
            .map(|(b, _)| b)
            .collect();
        for &b in &small {
            warn!("block {} has fewer than two nodes", b + 1);
        }
        small
    }
}

/// Restriction of a network to one block or one pair of blocks.
#[derive(Clone, Debug)]
pub struct Subnetwork {
    pub network: SignedNetwork,
    /// Global id of every local node.
    pub nodes: Vec<usize>,
    /// For a between-block restriction the first `split` local nodes belong
    /// to block `k`, the rest to block `l`. Equals `nodes.len()` within a block.
    pub split: usize,
}

/// Within-block network `y_kk` when `k == l`, the bipartite network `y_kl`
/// otherwise. Block ids are 0-based.
pub fn subnetwork(
    net: &SignedNetwork,
    z: &BlockAssignment,
    k: usize,
    l: usize,
) -> Result<Subnetwork> {
    if z.n_nodes() != net.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: net.n_nodes(),
            found: z.n_nodes(),
        });
    }
    let kb = z.n_blocks();
    if k >= kb || l >= kb {
        return Err(Error::invalid(format!(
            "block pair ({}, {}) outside 1..={}",
            k + 1,
            l + 1,
            kb
        )));
    }
    let members_of = |b: usize| -> Vec<usize> {
        (0..z.n_nodes()).filter(|&i| z.block_of(i) == b).collect()
    };
    let first = members_of(k);
    if first.is_empty() {
        return Err(Error::EmptyBlock(k + 1));
    }
    if k == l {
        let network = net.induced(&first);
        let split = first.len();
        return Ok(Subnetwork {
            network,
            nodes: first,
            split,
        });
    }
    let second = members_of(l);
    if second.is_empty() {
        return Err(Error::EmptyBlock(l + 1));
    }
    let split = first.len();
    let nodes: Vec<usize> = first.iter().chain(&second).copied().collect();
    let local = net.local_index(&nodes);
    let mut network = SignedNetwork::empty(nodes.len());
    for (a, &g) in first.iter().enumerate() {
        for &(h, s) in net.neighbors(g) {
            if let Some(b) = local[h] {
                if b >= split {
                    network.set(a, b, s.into());
                }
            }
        }
    }
    Ok(Subnetwork {
        network,
        nodes,
        split,
    })
}

//! Adjacency matrices, lower-triangle edge vectors and datasets.
//!
//! Edge vectors follow the column-wise lower-triangle order
//! (2,1), (3,1), ..., (V,1), (3,2), ..., (V,V-1). Nodes are 1-based in the
//! public pair/index API and 0-based everywhere else. Every conversion
//! between pairs and positions goes through [`pair_to_index`] /
//! [`index_to_pair`] (or the 0-based [`EdgeIndexer`]).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Number of node pairs, V(V-1)/2.
#[inline]
pub const fn num_pairs(v: usize) -> usize {
    v * v.saturating_sub(1) / 2
}

/// 1-based position of pair (v, u), `1 <= u < v <= nodes`.
pub fn pair_to_index(v: usize, u: usize, nodes: usize) -> Result<usize> {
    if u == 0 || u >= v || v > nodes {
        return Err(Error::InvalidArgument(format!("pair ({v},{u}) is not a lower-triangle pair for V={nodes}")));
    }
    Ok(pair_offset(v - 1, u - 1, nodes) + 1)
}

/// Inverse of [`pair_to_index`]: 1-based position to the 1-based pair (v, u).
pub fn index_to_pair(index: usize, nodes: usize) -> Result<(usize, usize)> {
    if index == 0 || index > num_pairs(nodes) {
        return Err(Error::InvalidArgument(format!("edge index {index} out of range for V={nodes}")));
    }
    let (v, u) = offset_to_pair(index - 1, nodes);
    Ok((v + 1, u + 1))
}

/// 0-based offset of the 0-based pair (v, u) with u < v.
#[inline]
fn pair_offset(v: usize, u: usize, nodes: usize) -> usize {
    // columns 0..u hold (nodes-1) + (nodes-2) + ... + (nodes-u) entries
    u * (2 * nodes - u - 1) / 2 + (v - u - 1)
}

fn offset_to_pair(mut offset: usize, nodes: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let col = nodes - u - 1;
        if offset < col {
            return (u + 1 + offset, u);
        }
        offset -= col;
        u += 1;
    }
}

/// Precomputed 0-based pair/offset tables for a fixed node count.
#[derive(Debug, Clone)]
pub struct EdgeIndexer {
    nodes: usize,
    pairs: Vec<(u32, u32)>,
    /// `nodes x nodes`, symmetric, `usize::MAX` on the diagonal.
    offsets: Vec<usize>,
}

impl EdgeIndexer {
    pub fn new(nodes: usize) -> Self {
        let mut pairs = Vec::with_capacity(num_pairs(nodes));
        let mut offsets = vec![usize::MAX; nodes * nodes];
        for u in 0..nodes {
            for v in (u + 1)..nodes {
                let l = pairs.len();
                debug_assert_eq!(l, pair_offset(v, u, nodes));
                pairs.push((v as u32, u as u32));
                offsets[v * nodes + u] = l;
                offsets[u * nodes + v] = l;
            }
        }
        Self { nodes, pairs, offsets }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// 0-based pair (v, u), v > u, at 0-based offset `l`.
    #[inline]
    pub fn pair(&self, l: usize) -> (usize, usize) {
        let (v, u) = self.pairs[l];
        (v as usize, u as usize)
    }

    /// Offset of the unordered 0-based pair {a, b}, a != b.
    #[inline]
    pub fn offset(&self, a: usize, b: usize) -> usize {
        debug_assert_ne!(a, b);
        self.offsets[a * self.nodes + b]
    }
}

/// One observed edge value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EdgeState {
    Absent,
    Present,
    /// Held out or unobserved. Never the same thing as `Absent`.
    Missing,
}

impl EdgeState {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Self::Present
        } else {
            Self::Absent
        }
    }

    pub fn observed(self) -> Option<bool> {
        match self {
            Self::Absent => Some(false),
            Self::Present => Some(true),
            Self::Missing => None,
        }
    }

    pub fn is_missing(self) -> bool {
        self == Self::Missing
    }
}

/// Symmetric binary matrix with zero diagonal, stored densely row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    nodes: usize,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(nodes: usize) -> Self {
        Self { nodes, entries: vec![false; nodes * nodes] }
    }

    pub fn complete(nodes: usize) -> Self {
        let mut a = Self::empty(nodes);
        for v in 0..nodes {
            for u in 0..v {
                a.set(v, u, true);
            }
        }
        a
    }

    /// Validates symmetry and the zero diagonal of a row-major 0/1 matrix.
    pub fn from_rows(nodes: usize, entries: &[u8]) -> Result<Self> {
        if entries.len() != nodes * nodes {
            return Err(Error::Validation(format!(
                "expected {} entries for V={nodes}, got {}",
                nodes * nodes,
                entries.len()
            )));
        }
        let mut a = Self::empty(nodes);
        for v in 0..nodes {
            for u in 0..nodes {
                let x = entries[v * nodes + u];
                if x > 1 {
                    return Err(Error::Validation(format!("entry ({v},{u}) is not binary")));
                }
                if v == u && x != 0 {
                    return Err(Error::Validation(format!("nonzero diagonal at node {}", v + 1)));
                }
                if x != entries[u * nodes + v] {
                    return Err(Error::Validation(format!("asymmetric entries at ({},{})", v + 1, u + 1)));
                }
                a.entries[v * nodes + u] = x == 1;
            }
        }
        Ok(a)
    }

    /// Builds from 0-based undirected edges; self-loops are rejected.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = Self::empty(nodes);
        for &(v, u) in edges {
            if v == u || v >= nodes || u >= nodes {
                return Err(Error::Validation(format!("invalid edge ({v},{u}) for V={nodes}")));
            }
            a.set(v, u, true);
        }
        Ok(a)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    #[inline]
    pub fn get(&self, v: usize, u: usize) -> bool {
        self.entries[v * self.nodes + u]
    }

    /// Sets both (v,u) and (u,v). `v != u`.
    #[inline]
    pub fn set(&mut self, v: usize, u: usize, present: bool) {
        debug_assert_ne!(v, u);
        self.entries[v * self.nodes + u] = present;
        self.entries[u * self.nodes + v] = present;
    }

    pub fn edge_count(&self) -> usize {
        (0..self.nodes).map(|v| (0..v).filter(|&u| self.get(v, u)).count()).sum()
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.nodes).filter(|&u| self.get(v, u)).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes).filter(move |&u| self.get(v, u))
    }

    pub fn vectorize(&self) -> EdgeVector {
        let nodes = self.nodes;
        let mut values = Vec::with_capacity(num_pairs(nodes));
        for u in 0..nodes {
            for v in (u + 1)..nodes {
                values.push(EdgeState::from_bool(self.get(v, u)));
            }
        }
        EdgeVector { nodes, values }
    }
}

/// Lower-triangle encoding of one network, possibly with missing entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeVector {
    nodes: usize,
    values: Vec<EdgeState>,
}

impl EdgeVector {
    pub fn new(nodes: usize, values: Vec<EdgeState>) -> Result<Self> {
        if values.len() != num_pairs(nodes) {
            return Err(Error::Validation(format!(
                "edge vector for V={nodes} needs {} entries, got {}",
                num_pairs(nodes),
                values.len()
            )));
        }
        Ok(Self { nodes, values })
    }

    pub fn from_bits(nodes: usize, bits: &[bool]) -> Result<Self> {
        Self::new(nodes, bits.iter().copied().map(EdgeState::from_bool).collect())
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[EdgeState] {
        &self.values
    }

    #[inline]
    pub fn get(&self, l: usize) -> EdgeState {
        self.values[l]
    }

    pub fn set(&mut self, l: usize, s: EdgeState) {
        self.values[l] = s;
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|s| s.is_missing()).count()
    }

    /// Rebuilds the adjacency matrix; fails if any entry is missing.
    pub fn devectorize(&self) -> Result<AdjacencyMatrix> {
        let mut a = AdjacencyMatrix::empty(self.nodes);
        let mut l = 0;
        for u in 0..self.nodes {
            for v in (u + 1)..self.nodes {
                match self.values[l].observed() {
                    Some(b) => a.set(v, u, b),
                    None => {
                        return Err(Error::Validation(format!(
                            "edge {} is missing; cannot build an adjacency matrix",
                            l + 1
                        )))
                    }
                }
                l += 1;
            }
        }
        Ok(a)
    }
}

/// Node labels grouping nodes into blocks (hemispheres, lobes, ...).
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockPartition {
    labels: Vec<usize>,
}

impl BlockPartition {
    pub fn new(labels: Vec<usize>) -> Self {
        Self { labels }
    }

    /// Contiguous blocks of the given sizes, labelled 0, 1, ...
    pub fn contiguous(sizes: &[usize]) -> Self {
        let labels = sizes.iter().enumerate().flat_map(|(b, &s)| core::iter::repeat_n(b, s)).collect();
        Self { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    #[inline]
    pub fn label(&self, v: usize) -> usize {
        self.labels[v]
    }
}

/// n networks on a shared node set, each with a scalar trait.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDataset {
    nodes: usize,
    subject_ids: Vec<alloc::string::String>,
    networks: Vec<EdgeVector>,
    traits: Vec<f64>,
    unique_traits: Vec<f64>,
    unique_index: Vec<usize>,
}

impl NetworkDataset {
    pub fn new(
        nodes: usize,
        subject_ids: Vec<alloc::string::String>,
        networks: Vec<EdgeVector>,
        traits: Vec<f64>,
    ) -> Result<Self> {
        if networks.len() != traits.len() || networks.len() != subject_ids.len() {
            return Err(Error::Validation(format!(
                "{} networks, {} traits and {} subject ids",
                networks.len(),
                traits.len(),
                subject_ids.len()
            )));
        }
        if networks.is_empty() {
            return Err(Error::Validation("dataset has no subjects".into()));
        }
        for (i, e) in networks.iter().enumerate() {
            if e.nodes() != nodes {
                return Err(Error::Validation(format!("subject {} has V={}, expected {nodes}", i + 1, e.nodes())));
            }
        }
        if let Some(i) = traits.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!("trait of subject {} is not finite", i + 1)));
        }
        let mut unique_traits = traits.clone();
        unique_traits.sort_by(|a, b| a.total_cmp(b));
        unique_traits.dedup();
        let unique_index =
            traits.iter().map(|x| unique_traits.binary_search_by(|u| u.total_cmp(x)).expect("present")).collect();
        Ok(Self { nodes, subject_ids, networks, traits, unique_traits, unique_index })
    }

    /// Dataset with subject ids "1", "2", ...
    pub fn from_networks(nodes: usize, networks: Vec<EdgeVector>, traits: Vec<f64>) -> Result<Self> {
        let ids = (1..=networks.len()).map(|i| format!("{i}")).collect();
        Self::new(nodes, ids, networks, traits)
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn num_subjects(&self) -> usize {
        self.networks.len()
    }

    pub fn num_edges(&self) -> usize {
        num_pairs(self.nodes)
    }

    pub fn subject_ids(&self) -> &[alloc::string::String] {
        &self.subject_ids
    }

    pub fn networks(&self) -> &[EdgeVector] {
        &self.networks
    }

    pub fn network(&self, i: usize) -> &EdgeVector {
        &self.networks[i]
    }

    pub fn traits(&self) -> &[f64] {
        &self.traits
    }

    /// Sorted distinct trait values.
    pub fn unique_traits(&self) -> &[f64] {
        &self.unique_traits
    }

    /// Index into [`Self::unique_traits`] for each subject.
    pub fn unique_index(&self) -> &[usize] {
        &self.unique_index
    }

    /// Number of subjects at each unique trait.
    pub fn replicate_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.unique_traits.len()];
        for &j in &self.unique_index {
            counts[j] += 1;
        }
        counts
    }

    #[inline]
    pub fn edge(&self, i: usize, l: usize) -> EdgeState {
        self.networks[i].values[l]
    }

    pub fn missing_count(&self) -> usize {
        self.networks.iter().map(|e| e.missing_count()).sum()
    }

    /// Copy with the listed (subject, edge) entries replaced by `Missing`.
    pub fn with_missing(&self, entries: &[(usize, usize)]) -> Result<Self> {
        let mut out = self.clone();
        for &(i, l) in entries {
            if i >= out.num_subjects() || l >= out.num_edges() {
                return Err(Error::InvalidArgument(format!("entry ({i},{l}) out of range")));
            }
            out.networks[i].values[l] = EdgeState::Missing;
        }
        Ok(out)
    }

    /// Fraction of observed entries equal to 1 for edge `l`, or `None`
    /// when the edge is missing for every subject.
    pub fn empirical_probability(&self, l: usize) -> Option<f64> {
        let (mut ones, mut seen) = (0usize, 0usize);
        for net in &self.networks {
            if let Some(b) = net.values[l].observed() {
                seen += 1;
                ones += b as usize;
            }
        }
        (seen > 0).then(|| ones as f64 / seen as f64)
    }
}

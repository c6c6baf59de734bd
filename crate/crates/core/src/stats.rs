//! Network summary measures.

use alloc::collections::VecDeque;
use alloc::vec;

use crate::error::{Error, Result};
use crate::network::{num_pairs, AdjacencyMatrix, BlockPartition};

/// Fraction of node pairs that are connected.
pub fn density(a: &AdjacencyMatrix) -> f64 {
    let pairs = num_pairs(a.nodes());
    if pairs == 0 {
        return 0.0;
    }
    a.edge_count() as f64 / pairs as f64
}

/// Global transitivity: 3 x triangles / connected triples, 0 without triples.
pub fn transitivity(a: &AdjacencyMatrix) -> f64 {
    let n = a.nodes();
    let mut closed = 0usize;
    let mut triples = 0usize;
    let mut nbrs = vec![0usize; n];
    for v in 0..n {
        let mut d = 0;
        for u in a.neighbors(v) {
            nbrs[d] = u;
            d += 1;
        }
        triples += d * d.saturating_sub(1) / 2;
        for x in 0..d {
            for y in (x + 1)..d {
                if a.get(nbrs[x], nbrs[y]) {
                    closed += 1;
                }
            }
        }
    }
    if triples == 0 {
        0.0
    } else {
        closed as f64 / triples as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLength {
    pub value: f64,
    /// Set when no pair of nodes is connected; `value` is then 0.
    pub no_edges: bool,
}

/// Mean shortest-path length over ordered pairs of distinct nodes that
/// reach each other. Pairs in different components are left out.
pub fn average_path_length(a: &AdjacencyMatrix) -> PathLength {
    let n = a.nodes();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::with_capacity(n);
    let mut total = 0usize;
    let mut count = 0usize;
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for u in a.neighbors(v) {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    total += dist[u];
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
    }
    if count == 0 {
        PathLength { value: 0.0, no_edges: true }
    } else {
        PathLength { value: total as f64 / count as f64, no_edges: false }
    }
}

/// Newman's categorical assortativity of the block labels.
///
/// With `m` edges, `w` of them inside a block, and `D_b` the degree sum of
/// block `b`, this is `(4 m w - sum D_b^2) / (4 m^2 - sum D_b^2)`, evaluated
/// in integers and divided once.
pub fn block_assortativity(a: &AdjacencyMatrix, p: &BlockPartition) -> Result<f64> {
    let n = a.nodes();
    if p.nodes() != n {
        return Err(Error::InvalidArgument(alloc::format!("partition covers {} nodes, graph has {n}", p.nodes())));
    }
    let mut degree_sum = vec![0u64; p.num_blocks()];
    let mut m = 0u64;
    let mut within = 0u64;
    for v in 0..n {
        for u in 0..v {
            if a.get(v, u) {
                let (bv, bu) = (p.label(v), p.label(u));
                degree_sum[bv] += 1;
                degree_sum[bu] += 1;
                m += 1;
                within += u64::from(bv == bu);
            }
        }
    }
    if m == 0 {
        return Err(Error::Undefined("assortativity of an edgeless graph".into()));
    }
    let sq: u64 = degree_sum.iter().map(|d| d * d).sum();
    let denom = 4 * m * m - sq;
    if denom == 0 {
        return Err(Error::Undefined("assortativity with all edge ends in one block".into()));
    }
    let num = (4 * m * within) as i128 - sq as i128;
    Ok(num as f64 / denom as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn star4() -> AdjacencyMatrix {
        AdjacencyMatrix::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    #[test]
    fn density_examples() {
        assert_eq!(density(&AdjacencyMatrix::complete(5)), 1.0);
        assert_eq!(density(&AdjacencyMatrix::empty(5)), 0.0);
        assert!((density(&path3()) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn transitivity_examples() {
        assert_eq!(transitivity(&AdjacencyMatrix::complete(3)), 1.0);
        assert_eq!(transitivity(&star4()), 0.0);
        assert_eq!(transitivity(&AdjacencyMatrix::empty(4)), 0.0);
    }

    #[test]
    fn path_length_examples() {
        let c = average_path_length(&AdjacencyMatrix::complete(4));
        assert_eq!(c.value, 1.0);
        assert!(!c.no_edges);
        assert!((average_path_length(&path3()).value - 4.0 / 3.0).abs() < 1e-15);
        let two = AdjacencyMatrix::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(average_path_length(&two).value, 1.0);
        let none = average_path_length(&AdjacencyMatrix::empty(4));
        assert_eq!(none.value, 0.0);
        assert!(none.no_edges);
    }

    #[test]
    fn assortativity_examples() {
        let p = BlockPartition::contiguous(&[2, 2]);
        let within = AdjacencyMatrix::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!((block_assortativity(&within, &p).unwrap() - 1.0).abs() < 1e-12);
        let bip = AdjacencyMatrix::from_edges(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert!((block_assortativity(&bip, &p).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(block_assortativity(&AdjacencyMatrix::empty(4), &p), Err(Error::Undefined(_))));
    }
}

//! Synthetic population of brain-like networks.
//!
//! Nodes are split into four equal blocks: first and second lobe of the
//! left hemisphere, then first and second lobe of the right hemisphere.
//! The trait grid is cut into three equal ranges:
//!
//! * low traits: half the subjects at each trait are hemisphere-assortative,
//!   the other half lobe-assortative;
//! * middle traits: Watts-Strogatz small-world graphs;
//! * high traits: block graphs whose inter-hemisphere density exceeds the
//!   intra-hemisphere density.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::network::{AdjacencyMatrix, BlockPartition, NetworkDataset};
use crate::rng::{Phase, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BlockProbs {
    pub within: f64,
    pub between: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SmallWorld {
    pub ring_degree: usize,
    pub rewire_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HighTrait {
    /// Edge probability between hemispheres.
    pub inter: f64,
    /// Edge probability within a hemisphere.
    pub intra: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ScenarioConfig {
    pub nodes: usize,
    pub grid: Vec<f64>,
    pub per_trait: usize,
    pub assortative: BlockProbs,
    pub small_world: SmallWorld,
    pub high_trait: HighTrait,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nodes: 20,
            grid: (1..=15).map(f64::from).collect(),
            per_trait: 4,
            assortative: BlockProbs { within: 0.9, between: 0.05 },
            small_world: SmallWorld { ring_degree: 8, rewire_p: 0.05 },
            high_trait: HighTrait { inter: 0.7, intra: 0.1 },
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64, what: &str| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} = {p} is not a probability")))
            }
        };
        prob(self.assortative.within, "assortative.within")?;
        prob(self.assortative.between, "assortative.between")?;
        prob(self.small_world.rewire_p, "small_world.rewire_p")?;
        prob(self.high_trait.inter, "high_trait.inter")?;
        prob(self.high_trait.intra, "high_trait.intra")?;
        if self.nodes < 4 || self.nodes % 4 != 0 {
            return Err(Error::InvalidArgument(format!("node count {} must be a positive multiple of 4", self.nodes)));
        }
        if self.grid.len() < 3 || self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("grid needs >= 3 strictly increasing values".into()));
        }
        if self.per_trait < 2 || self.per_trait % 2 != 0 {
            return Err(Error::InvalidArgument("per_trait must be a positive even number".into()));
        }
        let k = self.small_world.ring_degree;
        if k % 2 != 0 || k >= self.nodes {
            return Err(Error::InvalidArgument(format!("ring degree {k} must be even and below V")));
        }
        Ok(())
    }
}

/// How a simulated subject's network was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Regime {
    HemisphereAssortative,
    LobeAssortative,
    SmallWorld,
    InterHemispheric,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Self::HemisphereAssortative => "hemisphere-assortative",
            Self::LobeAssortative => "lobe-assortative",
            Self::SmallWorld => "small-world",
            Self::InterHemispheric => "inter-hemispheric",
        }
    }
}

/// The four lobe/hemisphere blocks L1, L2, R1, R2.
pub fn four_blocks(nodes: usize) -> BlockPartition {
    let b = nodes / 4;
    BlockPartition::contiguous(&[b, b, b, nodes - 3 * b])
}

/// Left (L1 and L2) versus right (R1 and R2).
pub fn hemisphere_partition(nodes: usize) -> BlockPartition {
    let h = nodes / 2;
    BlockPartition::contiguous(&[h, nodes - h])
}

/// First lobe (L1 and R1) versus second lobe (L2 and R2).
pub fn lobe_partition(nodes: usize) -> BlockPartition {
    let blocks = four_blocks(nodes);
    BlockPartition::new(blocks.labels().iter().map(|&b| b % 2).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dataset: NetworkDataset,
    pub networks: Vec<AdjacencyMatrix>,
    pub regimes: Vec<Regime>,
    pub blocks: BlockPartition,
}

/// Independent edges: `within_p` for nodes sharing a label, `between_p` otherwise.
pub fn generate_block_network<R: Rng + ?Sized>(
    within_p: f64,
    between_p: f64,
    blocks: &BlockPartition,
    rng: &mut R,
) -> AdjacencyMatrix {
    let n = blocks.nodes();
    let mut a = AdjacencyMatrix::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if blocks.label(v) == blocks.label(u) { within_p } else { between_p };
            if rng.random::<f64>() < p {
                a.set(v, u, true);
            }
        }
    }
    a
}

/// Ring lattice joining each node to its `ring_degree` nearest neighbours,
/// after which every lattice edge (v, v+j) is, with probability `rewire_p`,
/// moved to (v, w) for a uniform w that is neither v nor already adjacent.
pub fn generate_watts_strogatz<R: Rng + ?Sized>(
    nodes: usize,
    ring_degree: usize,
    rewire_p: f64,
    rng: &mut R,
) -> Result<AdjacencyMatrix> {
    if ring_degree % 2 != 0 || ring_degree >= nodes {
        return Err(Error::InvalidArgument(format!("ring degree {ring_degree} must be even and below V={nodes}")));
    }
    let mut a = AdjacencyMatrix::empty(nodes);
    let half = ring_degree / 2;
    for j in 1..=half {
        for v in 0..nodes {
            a.set(v, (v + j) % nodes, true);
        }
    }
    for j in 1..=half {
        for v in 0..nodes {
            let u = (v + j) % nodes;
            if rng.random::<f64>() >= rewire_p || !a.get(v, u) {
                continue;
            }
            if a.degree(v) >= nodes - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..nodes);
                if w != v && !a.get(v, w) {
                    break w;
                }
            };
            a.set(v, u, false);
            a.set(v, w, true);
        }
    }
    Ok(a)
}

/// Generates the full labelled population. Subject `i` draws from its own
/// stream, so the dataset depends only on the configuration.
pub fn generate_scenario(sc: &ScenarioConfig) -> Result<LabeledDataset> {
    sc.validate()?;
    let v = sc.nodes;
    let hemi = hemisphere_partition(v);
    let lobe = lobe_partition(v);
    let third = sc.grid.len() / 3;
    let (low_end, mid_end) = (third, sc.grid.len() - third);
    let mut networks = Vec::new();
    let mut regimes = Vec::new();
    let mut traits = Vec::new();
    let mut ids = Vec::new();
    for (g, &x) in sc.grid.iter().enumerate() {
        for s in 0..sc.per_trait {
            let i = networks.len();
            let mut rng = RngStream::derive(sc.seed, 0, Phase::Simulate, i as u64).rng();
            let (regime, a) = if g < low_end {
                if s < sc.per_trait / 2 {
                    let p = sc.assortative;
                    (Regime::HemisphereAssortative, generate_block_network(p.within, p.between, &hemi, &mut rng))
                } else {
                    let p = sc.assortative;
                    (Regime::LobeAssortative, generate_block_network(p.within, p.between, &lobe, &mut rng))
                }
            } else if g < mid_end {
                let p = sc.small_world;
                (Regime::SmallWorld, generate_watts_strogatz(v, p.ring_degree, p.rewire_p, &mut rng)?)
            } else {
                let p = sc.high_trait;
                (Regime::InterHemispheric, generate_block_network(p.intra, p.inter, &hemi, &mut rng))
            };
            ids.push(format_id(i + 1));
            networks.push(a);
            regimes.push(regime);
            traits.push(x);
        }
    }
    let vecs = networks.iter().map(|a| a.vectorize()).collect();
    let dataset = NetworkDataset::new(v, ids, vecs, traits)?;
    Ok(LabeledDataset { dataset, networks, regimes, blocks: four_blocks(v) })
}

fn format_id(i: usize) -> String {
    format!("s{i:03}")
}

/// Expected density of a block graph under `generate_block_network`.
pub fn expected_block_density(within_p: f64, between_p: f64, blocks: &BlockPartition) -> f64 {
    let n = blocks.nodes();
    let mut same = 0usize;
    let mut total = 0usize;
    for u in 0..n {
        for v in (u + 1)..n {
            total += 1;
            same += (blocks.label(u) == blocks.label(v)) as usize;
        }
    }
    (same as f64 * within_p + (total - same) as f64 * between_p) / total as f64
}

/// Indices of subjects per unique trait, in subject order.
pub fn subjects_by_trait(ds: &NetworkDataset) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); ds.unique_traits().len()];
    for (i, &j) in ds.unique_index().iter().enumerate() {
        out[j].push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{block_assortativity, density, transitivity};

    #[test]
    fn partitions() {
        assert_eq!(four_blocks(8).labels(), &[0, 0, 1, 1, 2, 2, 3, 3]);
        assert_eq!(hemisphere_partition(8).labels(), &[0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(lobe_partition(8).labels(), &[0, 0, 1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn perfectly_assortative_blocks() {
        let mut rng = RngStream::new(1, 0).rng();
        let a = generate_block_network(1.0, 0.0, &hemisphere_partition(20), &mut rng);
        let r = block_assortativity(&a, &hemisphere_partition(20)).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_transitivity_and_edge_count() {
        let mut rng = RngStream::new(1, 0).rng();
        let a = generate_watts_strogatz(20, 4, 0.0, &mut rng).unwrap();
        assert_eq!(a.edge_count(), 40);
        assert!((transitivity(&a) - 0.5).abs() < 1e-12);
        for _ in 0..50 {
            let a = generate_watts_strogatz(20, 4, 1.0, &mut rng).unwrap();
            assert_eq!(a.edge_count(), 40);
        }
        assert!(generate_watts_strogatz(20, 3, 0.1, &mut rng).is_err());
        assert!(generate_watts_strogatz(4, 4, 0.1, &mut rng).is_err());
    }

    #[test]
    fn erdos_renyi_degenerate_density() {
        let blocks = four_blocks(20);
        let mut rng = RngStream::new(4, 0).rng();
        let draws: Vec<f64> = (0..200).map(|_| density(&generate_block_network(0.3, 0.3, &blocks, &mut rng))).collect();
        let m = draws.iter().sum::<f64>() / 200.0;
        let se = (0.3 * 0.7 / 190.0 / 200.0f64).sqrt();
        assert!((m - 0.3).abs() < 3.0 * se, "{m}");
    }

    #[test]
    fn scenario_shape_and_reproducibility() {
        let sc = ScenarioConfig::default();
        let a = generate_scenario(&sc).unwrap();
        assert_eq!(a.dataset.num_subjects(), 60);
        assert_eq!(a.dataset.nodes(), 20);
        assert_eq!(a.dataset.replicate_counts(), vec![4; 15]);
        assert_eq!(a.regimes[0], Regime::HemisphereAssortative);
        assert_eq!(a.regimes[2], Regime::LobeAssortative);
        assert_eq!(a.regimes[20], Regime::SmallWorld);
        assert_eq!(a.regimes[59], Regime::InterHemispheric);
        assert_eq!(generate_scenario(&sc).unwrap(), a);
    }

    #[test]
    fn expected_density_helper() {
        let h = hemisphere_partition(20);
        // 90 within pairs, 100 between
        let d = expected_block_density(0.6, 0.15, &h);
        assert!((d - (90.0 * 0.6 + 100.0 * 0.15) / 190.0).abs() < 1e-15);
    }

    #[test]
    fn hemisphere_grouping_monte_carlo() {
        let hemi = hemisphere_partition(20);
        let lobe = lobe_partition(20);
        let mut rng = RngStream::new(8, 0).rng();
        let (mut rh, mut rl) = (0.0, 0.0);
        for _ in 0..500 {
            let a = generate_block_network(0.6, 0.15, &hemi, &mut rng);
            rh += block_assortativity(&a, &hemi).unwrap();
            rl += block_assortativity(&a, &lobe).unwrap();
        }
        assert!(rh / 500.0 > 0.3, "{}", rh / 500.0);
        // Expected mixing: 31.5 of 69 expected edges join same-lobe nodes,
        // both lobes carry half the stubs, so r = (31.5/69 - 0.5) / 0.5.
        let expected = (31.5 / 69.0 - 0.5) / 0.5;
        assert!((rl / 500.0 - expected).abs() < 0.02, "{} vs {expected}", rl / 500.0);
    }

    #[test]
    fn full_rewiring_breaks_clustering() {
        let mut rng = RngStream::new(9, 0).rng();
        let below =
            (0..200).filter(|_| transitivity(&generate_watts_strogatz(20, 4, 1.0, &mut rng).unwrap()) < 0.5).count();
        assert!(below >= 190, "{below}");
    }

    #[test]
    fn low_traits_more_hemisphere_assortative_than_high() {
        let hemi = hemisphere_partition(20);
        let (mut low, mut high) = (0.0, 0.0);
        for seed in 0..20 {
            let sc = ScenarioConfig { seed, ..ScenarioConfig::default() };
            let d = generate_scenario(&sc).unwrap();
            for (a, r) in d.networks.iter().zip(&d.regimes) {
                let v = block_assortativity(a, &hemi).unwrap();
                match r {
                    Regime::HemisphereAssortative | Regime::LobeAssortative => low += v,
                    Regime::InterHemispheric => high += v,
                    Regime::SmallWorld => {}
                }
            }
        }
        assert!(low > high);
    }

    #[test]
    fn block_density_matches_expectation() {
        let hemi = hemisphere_partition(20);
        let mut rng = RngStream::new(10, 0).rng();
        let n = 400;
        let xs: Vec<f64> = (0..n).map(|_| density(&generate_block_network(0.2, 0.45, &hemi, &mut rng))).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        let e = expected_block_density(0.2, 0.45, &hemi);
        assert!((m - e).abs() < 3.0 * (var / n as f64).sqrt(), "{m} vs {e}");
    }

    #[test]
    fn generated_networks_are_valid() {
        let d = generate_scenario(&ScenarioConfig { seed: 3, ..ScenarioConfig::default() }).unwrap();
        for a in &d.networks {
            for v in 0..20 {
                assert!(!a.get(v, v));
                for u in 0..20 {
                    assert_eq!(a.get(v, u), a.get(u, v));
                }
            }
        }
    }
}

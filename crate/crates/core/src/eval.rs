//! Hold-out masks, AUC, calibration tables and posterior predictive checks.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math::quantile_sorted;
use crate::model::PosteriorDraws;
use crate::network::{AdjacencyMatrix, BlockPartition, EdgeIndexer, NetworkDataset};
use crate::rng::{Phase, RngStream};
use crate::stats::{average_path_length, block_assortativity, density, transitivity};

/// How a mask was drawn.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "kebab-case"))]
pub enum MaskProtocol {
    /// `per_trait` random subjects at every unique trait.
    Simulation { per_trait: usize },
    /// A random `subject_fraction` of all subjects.
    HardEdge { subject_fraction: f64 },
}

/// (subject, edge) entries hidden from training. Entries are sorted and
/// unique; edges are 0-based offsets into the lower-triangle vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoldoutMask {
    pub protocol: MaskProtocol,
    pub lower: f64,
    pub upper: f64,
    pub entries: Vec<(usize, usize)>,
}

impl HoldoutMask {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, i: usize, l: usize) -> bool {
        self.entries.binary_search(&(i, l)).is_ok()
    }

    /// Share of all n * L entries that are masked.
    pub fn masked_fraction(&self, ds: &NetworkDataset) -> f64 {
        self.len() as f64 / (ds.num_subjects() * ds.num_edges()) as f64
    }

    /// Checks that every entry exists and is observed in `ds`.
    pub fn validate(&self, ds: &NetworkDataset) -> Result<()> {
        if self.entries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("mask entries must be sorted and unique".into()));
        }
        for &(i, l) in &self.entries {
            if i >= ds.num_subjects() || l >= ds.num_edges() {
                return Err(Error::Validation(format!("mask entry ({i},{l}) outside the dataset")));
            }
            if ds.edge(i, l).is_missing() {
                return Err(Error::Validation(format!("mask entry ({i},{l}) is already missing")));
            }
        }
        Ok(())
    }

    /// Training copy of `ds` with the masked entries turned into missing values.
    pub fn apply(&self, ds: &NetworkDataset) -> Result<NetworkDataset> {
        self.validate(ds)?;
        ds.with_missing(&self.entries)
    }
}

/// Edges whose empirical probability lies strictly inside (lower, upper).
pub fn variable_edges(ds: &NetworkDataset, lower: f64, upper: f64) -> Vec<usize> {
    (0..ds.num_edges()).filter(|&l| ds.empirical_probability(l).is_some_and(|p| p > lower && p < upper)).collect()
}

fn check_band(lower: f64, upper: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower >= upper {
        return Err(Error::InvalidArgument(format!("invalid probability band ({lower}, {upper})")));
    }
    Ok(())
}

fn build_mask(
    ds: &NetworkDataset,
    protocol: MaskProtocol,
    lower: f64,
    upper: f64,
    mut subjects: Vec<usize>,
) -> HoldoutMask {
    let edges = variable_edges(ds, lower, upper);
    if edges.is_empty() {
        log::warn!("no edge has empirical probability inside ({lower}, {upper}); mask is empty");
    }
    subjects.sort_unstable();
    let mut entries = Vec::with_capacity(subjects.len() * edges.len());
    for &i in &subjects {
        for &l in &edges {
            if !ds.edge(i, l).is_missing() {
                entries.push((i, l));
            }
        }
    }
    HoldoutMask { protocol, lower, upper, entries }
}

/// Masks the variable edges for a random `subject_fraction` of subjects.
/// An empty set of variable edges yields an empty mask and a warning.
pub fn make_hard_edge_mask<R: Rng + ?Sized>(
    ds: &NetworkDataset,
    lower: f64,
    upper: f64,
    subject_fraction: f64,
    rng: &mut R,
) -> Result<HoldoutMask> {
    check_band(lower, upper)?;
    if !(0.0..=1.0).contains(&subject_fraction) {
        return Err(Error::InvalidArgument(format!("subject fraction {subject_fraction} outside [0,1]")));
    }
    let n = ds.num_subjects();
    let m = libm::round(subject_fraction * n as f64) as usize;
    let subjects = sample(rng, n, m.min(n)).into_vec();
    Ok(build_mask(ds, MaskProtocol::HardEdge { subject_fraction }, lower, upper, subjects))
}

/// Masks the variable edges for `per_trait` random subjects at each trait.
pub fn make_simulation_mask<R: Rng + ?Sized>(
    ds: &NetworkDataset,
    lower: f64,
    upper: f64,
    per_trait: usize,
    rng: &mut R,
) -> Result<HoldoutMask> {
    check_band(lower, upper)?;
    let mut groups = vec![Vec::new(); ds.unique_traits().len()];
    for (i, &j) in ds.unique_index().iter().enumerate() {
        groups[j].push(i);
    }
    let mut subjects = Vec::new();
    for g in &groups {
        let picked = sample(rng, g.len(), per_trait.min(g.len()));
        subjects.extend(picked.iter().map(|k| g[k]));
    }
    Ok(build_mask(ds, MaskProtocol::Simulation { per_trait }, lower, upper, subjects))
}

fn check_scores(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    Ok(())
}

/// Area under the ROC curve, P(s+ > s-) + P(s+ = s-)/2, from mid-ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_scores(scores, labels)?;
    let pos = labels.iter().filter(|&&b| b).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("AUC needs both present and absent labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let mid = (start + end + 1) as f64 / 2.0;
        rank_sum += mid * order[start..end].iter().filter(|&&k| labels[k]).count() as f64;
        start = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

pub const CALIBRATION_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub positives: usize,
    /// Share of present edges in the bin; `None` for an empty bin.
    pub proportion: Option<f64>,
}

impl CalibrationBin {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Bins [0,0.1], (0.1,0.2], ..., (0.9,1].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationTable {
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationTable {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Bin holding `score`; the first bin is closed on the left, all others
/// are open on the left and closed on the right.
pub fn calibration_bin(score: f64) -> usize {
    (1..CALIBRATION_BINS).find(|&k| score <= k as f64 / CALIBRATION_BINS as f64).map_or(CALIBRATION_BINS - 1, |k| k - 1)
}

pub fn calibration_table(scores: &[f64], labels: &[bool]) -> Result<CalibrationTable> {
    check_scores(scores, labels)?;
    let mut count = [0usize; CALIBRATION_BINS];
    let mut positives = [0usize; CALIBRATION_BINS];
    for (&s, &y) in scores.iter().zip(labels) {
        let b = calibration_bin(s);
        count[b] += 1;
        positives[b] += y as usize;
    }
    let bins = (0..CALIBRATION_BINS)
        .map(|b| CalibrationBin {
            lower: b as f64 / CALIBRATION_BINS as f64,
            upper: (b + 1) as f64 / CALIBRATION_BINS as f64,
            count: count[b],
            positives: positives[b],
            proportion: (count[b] > 0).then(|| positives[b] as f64 / count[b] as f64),
        })
        .collect();
    Ok(CalibrationTable { bins })
}

/// Network summary measures used for predictive checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Statistic {
    Density,
    Transitivity,
    AveragePathLength,
    Assortativity,
}

impl Statistic {
    pub const ALL: [Statistic; 4] =
        [Statistic::Density, Statistic::Transitivity, Statistic::AveragePathLength, Statistic::Assortativity];

    pub fn name(self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Transitivity => "transitivity",
            Self::AveragePathLength => "average-path-length",
            Self::Assortativity => "assortativity",
        }
    }

    /// `None` where the statistic is undefined for `a`.
    pub fn compute(self, a: &AdjacencyMatrix, blocks: &BlockPartition) -> Option<f64> {
        match self {
            Self::Density => Some(density(a)),
            Self::Transitivity => Some(transitivity(a)),
            Self::AveragePathLength => {
                let p = average_path_length(a);
                (!p.no_edges).then_some(p.value)
            }
            Self::Assortativity => block_assortativity(a, blocks).ok(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictiveInterval {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    /// Replicates on which the statistic was defined.
    pub defined: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PpcRow {
    pub subject: usize,
    pub statistic: Statistic,
    pub interval: Option<PredictiveInterval>,
    pub observed: Option<f64>,
    pub covered: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PpcReport {
    pub level: f64,
    pub rows: Vec<PpcRow>,
}

impl PpcReport {
    /// (covered, assessed) subjects for one statistic.
    pub fn coverage(&self, stat: Statistic) -> (usize, usize) {
        let flags = self.rows.iter().filter(|r| r.statistic == stat).filter_map(|r| r.covered);
        flags.fold((0, 0), |(c, t), f| (c + f as usize, t + 1))
    }

    pub fn coverage_rate(&self, stat: Statistic) -> Option<f64> {
        let (c, t) = self.coverage(stat);
        (t > 0).then(|| c as f64 / t as f64)
    }
}

fn subject_ppc(
    draws: &PosteriorDraws,
    ds: &NetworkDataset,
    i: usize,
    statistics: &[Statistic],
    blocks: &BlockPartition,
    level: f64,
    seed: u64,
) -> Vec<PpcRow> {
    let ix = EdgeIndexer::new(ds.nodes());
    let mut rng = RngStream::derive(seed, 0, Phase::Ppc, i as u64).rng();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.num_draws()); statistics.len()];
    let mut a = AdjacencyMatrix::empty(ds.nodes());
    for d in 0..draws.num_draws() {
        for (l, &p) in draws.draw(d, i).iter().enumerate() {
            let (v, u) = ix.pair(l);
            a.set(v, u, rng.random::<f64>() < p);
        }
        for (s, stat) in statistics.iter().enumerate() {
            if let Some(x) = stat.compute(&a, blocks) {
                values[s].push(x);
            }
        }
    }
    let observed_net = ds.network(i).devectorize().ok();
    let tail = (1.0 - level) / 2.0;
    statistics
        .iter()
        .zip(values.iter_mut())
        .map(|(&stat, xs)| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.sort_by(f64::total_cmp);
            let interval = (!xs.is_empty()).then(|| PredictiveInterval {
                mean,
                lower: quantile_sorted(xs, tail),
                upper: quantile_sorted(xs, 1.0 - tail),
                defined: xs.len(),
            });
            let observed = observed_net.as_ref().and_then(|a| stat.compute(a, blocks));
            let covered = match (interval, observed) {
                (Some(iv), Some(o)) => Some(iv.lower <= o && o <= iv.upper),
                _ => None,
            };
            PpcRow { subject: i, statistic: stat, interval, observed, covered }
        })
        .collect()
}

/// For every retained draw and subject, simulates one network from
/// independent Bernoulli(pi) edges and summarises each statistic by its
/// predictive mean and central `level` interval. Subject `i` uses its own
/// stream of `seed`. The observed value comes from `ds`; subjects with
/// missing entries get no observed value or coverage flag.
pub fn posterior_predictive_check(
    draws: &PosteriorDraws,
    ds: &NetworkDataset,
    statistics: &[Statistic],
    blocks: &BlockPartition,
    level: f64,
    seed: u64,
) -> Result<PpcReport> {
    if draws.num_draws() == 0 {
        return Err(Error::State("no retained draws".into()));
    }
    if draws.subjects != ds.num_subjects() || draws.edges != ds.num_edges() {
        return Err(Error::State("draws do not match the dataset".into()));
    }
    if blocks.nodes() != ds.nodes() {
        return Err(Error::InvalidArgument("partition size differs from node count".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("interval level {level} outside (0,1)")));
    }
    let run = |i: usize| subject_ppc(draws, ds, i, statistics, blocks, level, seed);
    #[cfg(feature = "parallel")]
    let per_subject: Vec<Vec<PpcRow>> = {
        use rayon::prelude::*;
        (0..ds.num_subjects()).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_subject: Vec<Vec<PpcRow>> = (0..ds.num_subjects()).map(run).collect();
    Ok(PpcReport { level, rows: per_subject.into_iter().flatten().collect() })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub method: String,
    pub scored: usize,
    pub positives: usize,
    pub auc: f64,
    pub calibration: CalibrationTable,
    pub ppc: Option<PpcReport>,
}

/// Predictive means and true labels on the masked entries.
pub fn masked_scores(draws: &PosteriorDraws, ds: &NetworkDataset, mask: &HoldoutMask) -> Result<(Vec<f64>, Vec<bool>)> {
    if draws.subjects != ds.num_subjects() || draws.edges != ds.num_edges() {
        return Err(Error::State(format!(
            "draws cover {}x{} entries, dataset has {}x{}",
            draws.subjects,
            draws.edges,
            ds.num_subjects(),
            ds.num_edges()
        )));
    }
    mask.validate(ds).map_err(|e| Error::State(e.to_string()))?;
    let mut scores = Vec::with_capacity(mask.len());
    let mut labels = Vec::with_capacity(mask.len());
    for &(i, l) in &mask.entries {
        scores.push(draws.predictive_mean(i, l)?);
        labels.push(ds.edge(i, l).observed().unwrap_or(false));
    }
    Ok((scores, labels))
}

pub fn evaluate_one(
    method: &str,
    draws: &PosteriorDraws,
    ds: &NetworkDataset,
    mask: &HoldoutMask,
) -> Result<EvalReport> {
    let (scores, labels) = masked_scores(draws, ds, mask)?;
    Ok(EvalReport {
        method: method.to_string(),
        scored: scores.len(),
        positives: labels.iter().filter(|&&b| b).count(),
        auc: auc(&scores, &labels)?,
        calibration: calibration_table(&scores, &labels)?,
        ppc: None,
    })
}

/// Scores both methods on the masked entries of the full dataset `ds`.
pub fn evaluate(
    model: &PosteriorDraws,
    baseline: &PosteriorDraws,
    ds: &NetworkDataset,
    mask: &HoldoutMask,
) -> Result<(EvalReport, EvalReport)> {
    Ok((evaluate_one("model", model, ds, mask)?, evaluate_one("baseline", baseline, ds, mask)?))
}

/// Sorting helper shared by the tests and CLI writers.
pub fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.total_cmp(b)
}

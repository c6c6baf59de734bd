//! Model parameters, priors and the edge-probability map.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::{build_covariance, GpCovariance, KernelParams};
use crate::math::{logistic, sqrt};
use crate::network::{EdgeIndexer, NetworkDataset};
use crate::pg::pg1_mean;

/// Prior hyperparameters and latent dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct HyperParams {
    pub mu_z: f64,
    pub sigma2_z: f64,
    pub a: f64,
    pub q: f64,
    pub kappa: f64,
    /// Latent space dimension R.
    pub latent_dim: usize,
    /// Dictionary size K.
    pub dict_size: usize,
}

impl Default for HyperParams {
    /// The simulation-study preset.
    fn default() -> Self {
        Self { mu_z: 0.0, sigma2_z: 10.0, a: 2.0, q: 2.0, kappa: 0.01, latent_dim: 5, dict_size: 5 }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("hyperparameter {what}")));
        if !self.mu_z.is_finite() {
            return bad("mu_z must be finite");
        }
        if !(self.sigma2_z > 0.0) || !self.sigma2_z.is_finite() {
            return bad("sigma2_z must be positive");
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return bad("a must be positive");
        }
        if !(self.q > 1.0) || !self.q.is_finite() {
            return bad("q must exceed 1");
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return bad("kappa must be positive");
        }
        if self.latent_dim == 0 || self.dict_size == 0 {
            return bad("R and K must be at least 1");
        }
        Ok(())
    }

    /// Shape and rate of the Gamma prior on tau_k (k is 0-based).
    pub fn tau_prior(&self, k: usize) -> (f64, f64) {
        let k = k as i32;
        (self.a * self.q.powi(3 * k), self.q.powi(2 * k))
    }

    /// Prior mean of tau_k, `a q^k` for 0-based k.
    pub fn tau_prior_mean(&self, k: usize) -> f64 {
        let (shape, rate) = self.tau_prior(k);
        shape / rate
    }
}

/// One full state of the sampler.
///
/// Layouts: `y[(i * V + v) * R + r]`, `g[v * K + k]`,
/// `w[(k * R + r) * n_unique + j]`, `omega[i * L + l]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatentState {
    pub nodes: usize,
    pub subjects: usize,
    pub n_unique: usize,
    pub latent_dim: usize,
    pub dict_size: usize,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    pub w: Vec<f64>,
    pub tau: Vec<f64>,
    pub omega: Vec<f64>,
}

impl LatentState {
    pub fn zeros(nodes: usize, subjects: usize, n_unique: usize, r: usize, k: usize) -> Self {
        let l = crate::network::num_pairs(nodes);
        Self {
            nodes,
            subjects,
            n_unique,
            latent_dim: r,
            dict_size: k,
            z: vec![0.0; l],
            y: vec![0.0; subjects * nodes * r],
            g: vec![0.0; nodes * k],
            w: vec![0.0; k * r * n_unique],
            tau: vec![1.0; k],
            omega: vec![0.25; subjects * l],
        }
    }

    pub fn num_edges(&self) -> usize {
        self.z.len()
    }

    /// Coordinates of node `v` in subject `i`.
    #[inline]
    pub fn y_row(&self, i: usize, v: usize) -> &[f64] {
        let r = self.latent_dim;
        let start = (i * self.nodes + v) * r;
        &self.y[start..start + r]
    }

    /// Y^(i) as a V x R row-major slice.
    #[inline]
    pub fn y_subject(&self, i: usize) -> &[f64] {
        let s = self.nodes * self.latent_dim;
        &self.y[i * s..(i + 1) * s]
    }

    #[inline]
    pub fn w_at(&self, k: usize, r: usize, j: usize) -> f64 {
        self.w[(k * self.latent_dim + r) * self.n_unique + j]
    }

    #[inline]
    pub fn g_at(&self, v: usize, k: usize) -> f64 {
        self.g[v * self.dict_size + k]
    }

    /// `Z_l + <Y_v, Y_u>` for pair `l` = (v, u) in subject `i`.
    #[inline]
    pub fn linear_predictor(&self, i: usize, l: usize, ix: &EdgeIndexer) -> f64 {
        let (v, u) = ix.pair(l);
        self.z[l] + dot(self.y_row(i, v), self.y_row(i, u))
    }

    pub fn is_finite(&self) -> bool {
        [&self.z, &self.y, &self.g, &self.w, &self.tau, &self.omega].iter().all(|xs| xs.iter().all(|x| x.is_finite()))
            && self.tau.iter().all(|&t| t > 0.0)
            && self.omega.iter().all(|&o| o > 0.0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `logistic(Z_l + sum_r Y_vr Y_ur)` for subject `i` and edge `l`.
pub fn edge_probability(state: &LatentState, i: usize, l: usize, ix: &EdgeIndexer) -> f64 {
    logistic(state.linear_predictor(i, l, ix))
}

/// `mu_vr(x*_j) = sum_k G_vk W_kr(x*_j)`.
pub fn mean_function(state: &LatentState, v: usize, r: usize, j: usize) -> f64 {
    (0..state.dict_size).map(|k| state.g_at(v, k) * state.w_at(k, r, j)).sum()
}

/// How a chain is started.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum InitMode {
    /// One draw from the prior.
    #[default]
    Prior,
    /// Z at its prior mean, all coordinates and dictionary terms at zero.
    Zeros,
}

/// Draws tau, G, W, Y and Z from the prior. Omega is set to the PG mean of
/// the implied tilts.
pub fn init_state<R: Rng + ?Sized>(
    hp: &HyperParams,
    ds: &NetworkDataset,
    mode: InitMode,
    rng: &mut R,
) -> Result<LatentState> {
    hp.validate()?;
    let cov = build_covariance(ds.unique_traits(), &KernelParams::new(hp.kappa)?)?;
    init_state_with(hp, ds.nodes(), ds.unique_index(), &cov, mode, rng)
}

pub(crate) fn init_state_with<R: Rng + ?Sized>(
    hp: &HyperParams,
    nodes: usize,
    unique_index: &[usize],
    cov: &GpCovariance,
    mode: InitMode,
    rng: &mut R,
) -> Result<LatentState> {
    let (kk, rr) = (hp.dict_size, hp.latent_dim);
    let n = unique_index.len();
    let n_unique = cov.matrix.dim();
    let mut st = LatentState::zeros(nodes, n, n_unique, rr, kk);
    st.z.iter_mut().for_each(|z| *z = hp.mu_z);
    for k in 0..kk {
        st.tau[k] = hp.tau_prior_mean(k);
    }
    if mode == InitMode::Prior {
        for k in 0..kk {
            let (shape, rate) = hp.tau_prior(k);
            st.tau[k] = sample_gamma(shape, rate, rng)?;
        }
        for v in 0..nodes {
            for k in 0..kk {
                let e: f64 = StandardNormal.sample(rng);
                st.g[v * kk + k] = e / sqrt(st.tau[k]);
            }
        }
        let mut z = vec![0.0; n_unique];
        for k in 0..kk {
            for r in 0..rr {
                z.iter_mut().for_each(|x| *x = StandardNormal.sample(rng));
                let draw = cov.factor.mul_lower(&z);
                let base = (k * rr + r) * n_unique;
                st.w[base..base + n_unique].copy_from_slice(&draw);
            }
        }
        for (i, &j) in unique_index.iter().enumerate() {
            for v in 0..nodes {
                for r in 0..rr {
                    let e: f64 = StandardNormal.sample(rng);
                    st.y[(i * nodes + v) * rr + r] = mean_function(&st, v, r, j) + e;
                }
            }
        }
        let sd = sqrt(hp.sigma2_z);
        for z in st.z.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *z = hp.mu_z + sd * e;
        }
    }
    let ix = EdgeIndexer::new(nodes);
    let l_count = ix.len();
    for i in 0..n {
        for l in 0..l_count {
            st.omega[i * l_count + l] = pg1_mean(st.linear_predictor(i, l, &ix));
        }
    }
    Ok(st)
}

/// Gamma draw in the shape-rate convention.
pub(crate) fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    let g =
        Gamma::new(shape, 1.0 / rate).map_err(|e| Error::InvalidArgument(format!("Gamma({shape}, {rate}): {e}")))?;
    // guard the (practically unreachable) zero draw so tau stays positive
    Ok(g.sample(rng).max(f64::MIN_POSITIVE))
}

/// Bookkeeping for one chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainMeta {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

/// Thinned post-burn-in edge-probability draws.
///
/// `probs` is laid out draw-major: `probs[(d * subjects + i) * edges + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub subjects: usize,
    pub edges: usize,
    pub probs: Vec<f64>,
    pub latents: Vec<LatentState>,
    pub meta: ChainMeta,
    /// (iteration, mean log-likelihood of observed edges).
    pub loglik_trace: Vec<(u64, f64)>,
}

impl PosteriorDraws {
    pub fn new(subjects: usize, edges: usize, meta: ChainMeta) -> Self {
        Self { subjects, edges, probs: Vec::new(), latents: Vec::new(), meta, loglik_trace: Vec::new() }
    }

    pub fn num_draws(&self) -> usize {
        if self.subjects * self.edges == 0 {
            0
        } else {
            self.probs.len() / (self.subjects * self.edges)
        }
    }

    /// pi^(i) in draw `d`.
    pub fn draw(&self, d: usize, i: usize) -> &[f64] {
        let start = (d * self.subjects + i) * self.edges;
        &self.probs[start..start + self.edges]
    }

    #[inline]
    pub fn prob(&self, d: usize, i: usize, l: usize) -> f64 {
        self.probs[(d * self.subjects + i) * self.edges + l]
    }

    /// Average of pi_l^(i) over the retained draws.
    pub fn predictive_mean(&self, i: usize, l: usize) -> Result<f64> {
        let nd = self.num_draws();
        if nd == 0 {
            return Err(Error::State("no retained draws".into()));
        }
        if i >= self.subjects || l >= self.edges {
            return Err(Error::State(format!("entry ({i},{l}) outside the draws")));
        }
        Ok((0..nd).map(|d| self.prob(d, i, l)).sum::<f64>() / nd as f64)
    }

    /// Predictive means for every (subject, edge), subject-major.
    pub fn predictive_means(&self) -> Result<Vec<f64>> {
        let nd = self.num_draws();
        if nd == 0 {
            return Err(Error::State("no retained draws".into()));
        }
        let block = self.subjects * self.edges;
        let mut out = vec![0.0; block];
        for d in 0..nd {
            for (o, p) in out.iter_mut().zip(&self.probs[d * block..(d + 1) * block]) {
                *o += p;
            }
        }
        out.iter_mut().for_each(|x| *x /= nd as f64);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::AdjacencyMatrix;
    use crate::rng::RngStream;

    fn small_ds(n: usize, nodes: usize) -> NetworkDataset {
        let nets = (0..n).map(|_| AdjacencyMatrix::empty(nodes).vectorize()).collect();
        let traits = (0..n).map(|i| (i % 3) as f64 + 1.0).collect();
        NetworkDataset::from_networks(nodes, nets, traits).unwrap()
    }

    #[test]
    fn edge_probability_examples() {
        let ix = EdgeIndexer::new(2);
        let mut st = LatentState::zeros(2, 1, 1, 1, 1);
        assert_eq!(edge_probability(&st, 0, 0, &ix), 0.5);
        st.y = vec![2.0, 1.0];
        let p = edge_probability(&st, 0, 0, &ix);
        assert!((p - 0.880_797_077_977_882_3).abs() < 1e-12);
        // symmetric in the node roles
        st.y = vec![1.0, 2.0];
        assert_eq!(edge_probability(&st, 0, 0, &ix), p);
    }

    #[test]
    fn edge_probability_increasing_in_z() {
        let ix = EdgeIndexer::new(3);
        let mut st = LatentState::zeros(3, 1, 1, 2, 1);
        st.y = vec![0.3, -0.2, 1.0, 0.5, -0.7, 0.1];
        let mut last = 0.0;
        for step in -40..40 {
            st.z[1] = step as f64 * 0.5;
            let p = edge_probability(&st, 0, 1, &ix);
            assert!(p > 0.0 && p < 1.0);
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn mean_function_examples() {
        let mut st = LatentState::zeros(3, 1, 2, 2, 1);
        assert_eq!(mean_function(&st, 1, 1, 0), 0.0);
        st.g[1] = 2.0; // v=1, k=0
        st.w[(0 * 2 + 1) * 2 + 0] = 3.0; // k=0, r=1, j=0
        assert_eq!(mean_function(&st, 1, 1, 0), 6.0);
    }

    #[test]
    fn tau_prior_means() {
        let hp = HyperParams::default();
        assert_eq!(hp.tau_prior_mean(0), 2.0);
        assert_eq!(hp.tau_prior_mean(1), 4.0);
        assert_eq!(hp.tau_prior_mean(2), 8.0);
    }

    #[test]
    fn degenerate_z_prior() {
        let hp = HyperParams { sigma2_z: 1e-12, ..HyperParams::default() };
        let mut rng = RngStream::new(1, 0).rng();
        let st = init_state(&hp, &small_ds(4, 5), InitMode::Prior, &mut rng).unwrap();
        assert!(st.z.iter().all(|z| z.abs() < 1e-4));
        assert!(st.is_finite());
    }

    #[test]
    fn init_reproducible() {
        let hp = HyperParams::default();
        let ds = small_ds(6, 5);
        let a = init_state(&hp, &ds, InitMode::Prior, &mut RngStream::new(9, 0).rng()).unwrap();
        let b = init_state(&hp, &ds, InitMode::Prior, &mut RngStream::new(9, 0).rng()).unwrap();
        assert_eq!(a, b);
        let c = init_state(&hp, &ds, InitMode::Zeros, &mut RngStream::new(9, 0).rng()).unwrap();
        assert!(c.y.iter().all(|&y| y == 0.0));
        assert!(c.omega.iter().all(|&o| o == 0.25));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let bad = [
            HyperParams { q: 1.0, ..HyperParams::default() },
            HyperParams { sigma2_z: 0.0, ..HyperParams::default() },
            HyperParams { latent_dim: 0, ..HyperParams::default() },
            HyperParams { kappa: -1.0, ..HyperParams::default() },
        ];
        for hp in bad {
            assert!(hp.validate().is_err());
        }
    }

    #[test]
    fn predictive_mean_examples() {
        let meta = ChainMeta { iterations: 2, burn_in: 0, thin: 1, seed: 0 };
        let mut d = PosteriorDraws::new(1, 1, meta);
        assert!(d.predictive_mean(0, 0).is_err());
        d.probs = vec![0.2, 0.4];
        assert!((d.predictive_mean(0, 0).unwrap() - 0.3).abs() < 1e-15);
        d.probs = vec![0.7, 0.7, 0.7];
        assert!((d.predictive_mean(0, 0).unwrap() - 0.7).abs() < 1e-15);
    }
}

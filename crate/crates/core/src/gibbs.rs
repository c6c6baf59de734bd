//! Polya-Gamma augmented Gibbs sampler for the network-response model.
//!
//! One sweep updates, in order: the PG auxiliaries, the rows of every
//! Y^(i) (one R-dimensional block per node, swept sequentially within a
//! subject), the shared similarities Z, the dictionary functions W at the
//! unique traits (one joint K n* block per latent dimension), the rows of
//! G, the shrinkage rates tau, and finally the imputation of missing edges
//! from their current probabilities.
//!
//! Randomness comes from [`RngStream::derive`] keyed by the iteration and
//! the update phase; per-subject updates additionally key on the subject,
//! so the subject loops may run on a thread pool without changing results.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernel::{build_covariance, GpCovariance, KernelParams};
use crate::linalg::{factor_into, sample_canonical_into, SpdMatrix};
use crate::math::{bernoulli_logit_loglik, logistic, sqrt};
use crate::model::{dot, init_state_with, sample_gamma, ChainMeta, HyperParams, InitMode, LatentState, PosteriorDraws};
use crate::network::{EdgeIndexer, NetworkDataset};
use crate::pg::draw_pg1;
use crate::rng::{Phase, RngStream};

/// Iterations between log-likelihood heartbeats.
pub const LOG_EVERY: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ChainConfig {
    pub iterations: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub store_latents: bool,
    pub init: InitMode,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { iterations: 5000, burn_in: 1000, thin: 4, seed: 1, store_latents: false, init: InitMode::Prior }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidArgument(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidArgument("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// `floor((iterations - burn_in) / thin)`.
    pub fn retained_draws(&self) -> u64 {
        (self.iterations - self.burn_in) / self.thin
    }

    /// Whether the state after 1-based iteration `t` is kept.
    pub fn retains(&self, t: u64) -> bool {
        t > self.burn_in && (t - self.burn_in) % self.thin == 0
    }

    pub fn meta(&self) -> ChainMeta {
        ChainMeta { iterations: self.iterations, burn_in: self.burn_in, thin: self.thin, seed: self.seed }
    }
}

/// The sampler: a latent state plus the current (observed or imputed)
/// responses and the fixed quantities every sweep needs.
#[derive(Debug, Clone)]
pub struct Sampler {
    hp: HyperParams,
    seed: u64,
    ix: EdgeIndexer,
    unique_index: Vec<usize>,
    counts: Vec<f64>,
    c_inv: SpdMatrix,
    gp: GpCovariance,
    /// Current value of every L(A_i)_l, subject-major; imputed where missing.
    response: Vec<bool>,
    missing: Vec<bool>,
    state: LatentState,
}

impl Sampler {
    /// Builds the sampler and draws its initial state (stream: iteration 0).
    pub fn new(ds: &NetworkDataset, hp: &HyperParams, seed: u64, init: InitMode) -> Result<Self> {
        hp.validate()?;
        if hp.dict_size >= ds.nodes() {
            log::warn!("dictionary size K={} is not below V={}", hp.dict_size, ds.nodes());
        }
        let gp = build_covariance(ds.unique_traits(), &KernelParams::new(hp.kappa)?)?;
        let mut rng = RngStream::derive(seed, 0, Phase::Init, 0).rng();
        let state = init_state_with(hp, ds.nodes(), ds.unique_index(), &gp, init, &mut rng)?;
        let mut s = Self::assemble(ds, hp, seed, gp, state);
        s.impute_missing(0);
        Ok(s)
    }

    /// Rebuilds a sampler around a saved state and response vector.
    pub fn from_parts(
        ds: &NetworkDataset,
        hp: &HyperParams,
        seed: u64,
        state: LatentState,
        response: Vec<bool>,
    ) -> Result<Self> {
        hp.validate()?;
        let n = ds.num_subjects();
        let l = ds.num_edges();
        let expected = LatentState::zeros(ds.nodes(), n, ds.unique_traits().len(), hp.latent_dim, hp.dict_size);
        if state.z.len() != expected.z.len()
            || state.y.len() != expected.y.len()
            || state.g.len() != expected.g.len()
            || state.w.len() != expected.w.len()
            || state.tau.len() != expected.tau.len()
            || state.omega.len() != expected.omega.len()
            || response.len() != n * l
        {
            return Err(Error::State("saved state does not match the dataset and hyperparameters".into()));
        }
        let gp = build_covariance(ds.unique_traits(), &KernelParams::new(hp.kappa)?)?;
        let mut s = Self::assemble(ds, hp, seed, gp, state);
        for (k, (&m, r)) in s.missing.iter().zip(&response).enumerate() {
            if !m && s.response[k] != *r {
                return Err(Error::State("saved responses disagree with observed edges".into()));
            }
        }
        s.response = response;
        Ok(s)
    }

    fn assemble(ds: &NetworkDataset, hp: &HyperParams, seed: u64, gp: GpCovariance, state: LatentState) -> Self {
        let n = ds.num_subjects();
        let l = ds.num_edges();
        let mut response = vec![false; n * l];
        let mut missing = vec![false; n * l];
        for i in 0..n {
            for e in 0..l {
                match ds.edge(i, e).observed() {
                    Some(b) => response[i * l + e] = b,
                    None => missing[i * l + e] = true,
                }
            }
        }
        let c_inv = gp.factor.inverse();
        Self {
            hp: *hp,
            seed,
            ix: EdgeIndexer::new(ds.nodes()),
            unique_index: ds.unique_index().to_vec(),
            counts: ds.replicate_counts().into_iter().map(|c| c as f64).collect(),
            c_inv,
            gp,
            response,
            missing,
            state,
        }
    }

    pub fn state(&self) -> &LatentState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut LatentState {
        &mut self.state
    }

    pub fn hyper(&self) -> &HyperParams {
        &self.hp
    }

    pub fn indexer(&self) -> &EdgeIndexer {
        &self.ix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn covariance(&self) -> &GpCovariance {
        &self.gp
    }

    /// Current responses (observed values, imputed values where missing).
    pub fn response(&self) -> &[bool] {
        &self.response
    }

    /// Overwrites one response; used by joint-distribution tests that
    /// redraw the data between sweeps.
    pub fn set_response(&mut self, i: usize, l: usize, present: bool) {
        let edges = self.ix.len();
        self.response[i * edges + l] = present;
    }

    pub fn is_missing(&self, i: usize, l: usize) -> bool {
        self.missing[i * self.ix.len() + l]
    }

    /// One full sweep. `iteration` is 1-based and selects the random streams.
    pub fn sweep(&mut self, iteration: u64) -> Result<()> {
        self.update_omega(iteration);
        self.update_y(iteration).map_err(|e| e.with_context(&format!("iteration {iteration}")))?;
        self.update_z(iteration);
        self.update_w(iteration).map_err(|e| e.with_context(&format!("iteration {iteration}")))?;
        self.update_g(iteration).map_err(|e| e.with_context(&format!("iteration {iteration}")))?;
        self.update_tau(iteration)?;
        self.impute_missing(iteration);
        Ok(())
    }

    /// omega_l^(i) ~ PG(1, Z_l + <Y_v, Y_u>) for every subject and edge,
    /// including missing ones.
    pub fn update_omega(&mut self, iteration: u64) {
        let edges = self.ix.len();
        let st = &mut self.state;
        let (nodes, rr) = (st.nodes, st.latent_dim);
        let (z, y) = (&st.z, &st.y);
        let ix = &self.ix;
        let seed = self.seed;
        let work = |i: usize, omega: &mut [f64]| {
            let mut rng = RngStream::derive(seed, iteration, Phase::Omega, i as u64).rng();
            let yi = &y[i * nodes * rr..(i + 1) * nodes * rr];
            for (l, o) in omega.iter_mut().enumerate() {
                let (v, u) = ix.pair(l);
                let psi = z[l] + dot(&yi[v * rr..(v + 1) * rr], &yi[u * rr..(u + 1) * rr]);
                *o = draw_pg1(psi, &mut rng);
            }
        };
        for_each_subject(&mut st.omega, edges, work);
    }

    /// Row-block update of every Y^(i).
    pub fn update_y(&mut self, iteration: u64) -> Result<()> {
        let edges = self.ix.len();
        let st = &mut self.state;
        let (nodes, rr, kk, nu) = (st.nodes, st.latent_dim, st.dict_size, st.n_unique);
        let (z, g, w, omega) = (&st.z, &st.g, &st.w, &st.omega);
        let response = &self.response;
        let ix = &self.ix;
        let unique_index = &self.unique_index;
        let seed = self.seed;
        let work = |i: usize, yi: &mut [f64]| -> Result<()> {
            let mut rng = RngStream::derive(seed, iteration, Phase::Y, i as u64).rng();
            let j = unique_index[i];
            let om = &omega[i * edges..(i + 1) * edges];
            let resp = &response[i * edges..(i + 1) * edges];
            let mut prec = vec![0.0; rr * rr];
            let mut chol = vec![0.0; rr * rr];
            let mut lin = vec![0.0; rr];
            let mut out = vec![0.0; rr];
            for v in 0..nodes {
                prec.iter_mut().for_each(|x| *x = 0.0);
                for r in 0..rr {
                    prec[r * rr + r] = 1.0;
                    // prior mean W(x_i)^T G_v.
                    lin[r] = (0..kk).map(|k| g[v * kk + k] * w[(k * rr + r) * nu + j]).sum();
                }
                for u in 0..nodes {
                    if u == v {
                        continue;
                    }
                    let l = ix.offset(v, u);
                    let o = om[l];
                    let yu = &yi[u * rr..(u + 1) * rr];
                    let psi = if resp[l] { 0.5 } else { -0.5 } - o * z[l];
                    for a in 0..rr {
                        lin[a] += yu[a] * psi;
                        for b in 0..=a {
                            prec[a * rr + b] += o * yu[a] * yu[b];
                        }
                    }
                }
                factor_into(&prec, rr, &mut chol)
                    .map_err(|e| e.with_context(&format!("Y update for subject {} node {}", i + 1, v + 1)))?;
                sample_canonical_into(&chol, rr, &lin, &mut rng, &mut out);
                yi[v * rr..(v + 1) * rr].copy_from_slice(&out);
            }
            Ok(())
        };
        try_for_each_subject(&mut st.y, nodes * rr, work)
    }

    /// Z_l ~ N(mean, 1 / (sigma_z^-2 + sum_i omega)).
    pub fn update_z(&mut self, iteration: u64) {
        let mut rng = RngStream::derive(self.seed, iteration, Phase::Z, 0).rng();
        let edges = self.ix.len();
        let st = &mut self.state;
        let n = st.subjects;
        let prior_prec = 1.0 / self.hp.sigma2_z;
        for l in 0..edges {
            let (v, u) = self.ix.pair(l);
            let mut prec = prior_prec;
            let mut lin = prior_prec * self.hp.mu_z;
            for i in 0..n {
                let o = st.omega[i * edges + l];
                let s = dot(st.y_row(i, v), st.y_row(i, u));
                prec += o;
                lin += if self.response[i * edges + l] { 0.5 } else { -0.5 } - o * s;
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            st.z[l] = lin / prec + e / sqrt(prec);
        }
    }

    /// Joint update of (W_kr(x*_1), ..., W_kr(x*_n*)) over k for each r:
    /// precision `I_K (x) C^-1 + G^T G (x) D`, linear term `(G^T (x) I) Yhat_r`.
    pub fn update_w(&mut self, iteration: u64) -> Result<()> {
        let mut rng = RngStream::derive(self.seed, iteration, Phase::W, 0).rng();
        let st = &mut self.state;
        let (nodes, rr, kk, nu) = (st.nodes, st.latent_dim, st.dict_size, st.n_unique);
        let dim = kk * nu;
        let mut gtg = vec![0.0; kk * kk];
        for v in 0..nodes {
            for a in 0..kk {
                for b in 0..kk {
                    gtg[a * kk + b] += st.g[v * kk + a] * st.g[v * kk + b];
                }
            }
        }
        let mut prec = vec![0.0; dim * dim];
        for a in 0..kk {
            for b in 0..kk {
                for j in 0..nu {
                    let row = a * nu + j;
                    if a == b {
                        for jj in 0..nu {
                            prec[row * dim + b * nu + jj] = self.c_inv.get(j, jj);
                        }
                    }
                    prec[row * dim + b * nu + j] += gtg[a * kk + b] * self.counts[j];
                }
            }
        }
        let mut chol = vec![0.0; dim * dim];
        factor_into(&prec, dim, &mut chol).map_err(|e| e.with_context("W update"))?;
        let mut yhat = vec![0.0; nodes * nu];
        let mut lin = vec![0.0; dim];
        let mut out = vec![0.0; dim];
        for r in 0..rr {
            yhat.iter_mut().for_each(|x| *x = 0.0);
            for (i, &j) in self.unique_index.iter().enumerate() {
                for v in 0..nodes {
                    yhat[v * nu + j] += st.y[(i * nodes + v) * rr + r];
                }
            }
            lin.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..kk {
                for v in 0..nodes {
                    let gvk = st.g[v * kk + k];
                    for j in 0..nu {
                        lin[k * nu + j] += gvk * yhat[v * nu + j];
                    }
                }
            }
            sample_canonical_into(&chol, dim, &lin, &mut rng, &mut out);
            for k in 0..kk {
                let base = (k * rr + r) * nu;
                st.w[base..base + nu].copy_from_slice(&out[k * nu..(k + 1) * nu]);
            }
        }
        Ok(())
    }

    /// G_v. ~ N with precision `diag(tau) + sum_i W(x_i) W(x_i)^T`.
    pub fn update_g(&mut self, iteration: u64) -> Result<()> {
        let mut rng = RngStream::derive(self.seed, iteration, Phase::G, 0).rng();
        let st = &mut self.state;
        let (nodes, rr, kk, nu) = (st.nodes, st.latent_dim, st.dict_size, st.n_unique);
        let mut prec = vec![0.0; kk * kk];
        for k in 0..kk {
            prec[k * kk + k] = st.tau[k];
        }
        for j in 0..nu {
            let c = self.counts[j];
            for a in 0..kk {
                for b in 0..kk {
                    let s: f64 = (0..rr).map(|r| st.w[(a * rr + r) * nu + j] * st.w[(b * rr + r) * nu + j]).sum();
                    prec[a * kk + b] += c * s;
                }
            }
        }
        let mut chol = vec![0.0; kk * kk];
        factor_into(&prec, kk, &mut chol).map_err(|e| e.with_context("G update"))?;
        let mut lin = vec![0.0; kk];
        let mut out = vec![0.0; kk];
        for v in 0..nodes {
            lin.iter_mut().for_each(|x| *x = 0.0);
            for (i, &j) in self.unique_index.iter().enumerate() {
                let yv = &st.y[(i * nodes + v) * rr..(i * nodes + v + 1) * rr];
                for k in 0..kk {
                    lin[k] += (0..rr).map(|r| st.w[(k * rr + r) * nu + j] * yv[r]).sum::<f64>();
                }
            }
            sample_canonical_into(&chol, kk, &lin, &mut rng, &mut out);
            st.g[v * kk..(v + 1) * kk].copy_from_slice(&out);
        }
        Ok(())
    }

    /// tau_k ~ Ga(a q^{3(k-1)} + V/2, q^{2(k-1)} + sum_v G_vk^2 / 2).
    pub fn update_tau(&mut self, iteration: u64) -> Result<()> {
        let mut rng = RngStream::derive(self.seed, iteration, Phase::Tau, 0).rng();
        let st = &mut self.state;
        let (nodes, kk) = (st.nodes, st.dict_size);
        for k in 0..kk {
            let (shape, rate) = tau_posterior(&self.hp, k, nodes, (0..nodes).map(|v| st.g[v * kk + k]));
            st.tau[k] = sample_gamma(shape, rate, &mut rng)?;
        }
        Ok(())
    }

    /// Redraws every missing response as Bernoulli(pi) under the current state.
    pub fn impute_missing(&mut self, iteration: u64) {
        let edges = self.ix.len();
        for i in 0..self.state.subjects {
            let row = &self.missing[i * edges..(i + 1) * edges];
            if !row.iter().any(|&m| m) {
                continue;
            }
            let mut rng = RngStream::derive(self.seed, iteration, Phase::Impute, i as u64).rng();
            for l in 0..edges {
                if row[l] {
                    let p = logistic(self.state.linear_predictor(i, l, &self.ix));
                    self.response[i * edges + l] = rng.random::<f64>() < p;
                }
            }
        }
    }

    /// Edge probabilities of every subject, subject-major.
    pub fn edge_probabilities_into(&self, out: &mut Vec<f64>) {
        let edges = self.ix.len();
        for i in 0..self.state.subjects {
            for l in 0..edges {
                out.push(logistic(self.state.linear_predictor(i, l, &self.ix)));
            }
        }
    }

    /// Mean Bernoulli log-likelihood of the observed (non-missing) edges.
    pub fn mean_observed_loglik(&self) -> f64 {
        let edges = self.ix.len();
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..self.state.subjects {
            for l in 0..edges {
                if !self.missing[i * edges + l] {
                    let eta = self.state.linear_predictor(i, l, &self.ix);
                    total += bernoulli_logit_loglik(self.response[i * edges + l], eta);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }
}

/// Shape and rate of the tau_k full conditional.
pub fn tau_posterior(hp: &HyperParams, k: usize, nodes: usize, g_col: impl Iterator<Item = f64>) -> (f64, f64) {
    let (shape, rate) = hp.tau_prior(k);
    let ss: f64 = g_col.map(|x| x * x).sum();
    (shape + 0.5 * nodes as f64, rate + 0.5 * ss)
}

#[cfg(feature = "parallel")]
fn for_each_subject<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
fn for_each_subject<F>(data: &mut [f64], chunk: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(feature = "parallel")]
fn try_for_each_subject<F>(data: &mut [f64], chunk: usize, f: F) -> Result<()>
where
    F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
}

#[cfg(not(feature = "parallel"))]
fn try_for_each_subject<F>(data: &mut [f64], chunk: usize, f: F) -> Result<()>
where
    F: Fn(usize, &mut [f64]) -> Result<()>,
{
    data.chunks_mut(chunk).enumerate().try_for_each(|(i, c)| f(i, c))
}

/// A chain in progress: sampler, configuration and the draws kept so far.
#[derive(Debug, Clone)]
pub struct Chain {
    sampler: Sampler,
    config: ChainConfig,
    completed: u64,
    draws: PosteriorDraws,
}

impl Chain {
    pub fn new(ds: &NetworkDataset, hp: &HyperParams, cc: &ChainConfig) -> Result<Self> {
        cc.validate()?;
        let sampler = Sampler::new(ds, hp, cc.seed, cc.init)?;
        let draws = PosteriorDraws::new(ds.num_subjects(), ds.num_edges(), cc.meta());
        Ok(Self { sampler, config: cc.clone(), completed: 0, draws })
    }

    /// Continues a chain saved after `completed` iterations.
    pub fn resume(sampler: Sampler, config: ChainConfig, completed: u64, draws: PosteriorDraws) -> Result<Self> {
        config.validate()?;
        if completed > config.iterations {
            return Err(Error::State(format!(
                "checkpoint at iteration {completed} is past the configured {}",
                config.iterations
            )));
        }
        let expected = (1..=completed).filter(|&t| config.retains(t)).count();
        if draws.num_draws() != expected {
            return Err(Error::State(format!("checkpoint holds {} draws, expected {expected}", draws.num_draws())));
        }
        Ok(Self { sampler, config, completed, draws })
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn sampler_mut(&mut self) -> &mut Sampler {
        &mut self.sampler
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }

    pub fn draws(&self) -> &PosteriorDraws {
        &self.draws
    }

    pub fn is_done(&self) -> bool {
        self.completed >= self.config.iterations
    }

    /// Runs one iteration and records it if it is retained.
    pub fn step(&mut self) -> Result<()> {
        let t = self.completed + 1;
        self.sampler.sweep(t)?;
        if t % LOG_EVERY == 0 || t == self.config.iterations {
            let ll = self.sampler.mean_observed_loglik();
            log::info!("iteration {t}: mean observed log-likelihood {ll:.5}");
            self.draws.loglik_trace.push((t, ll));
        }
        if self.config.retains(t) {
            self.sampler.edge_probabilities_into(&mut self.draws.probs);
            if self.config.store_latents {
                self.draws.latents.push(self.sampler.state().clone());
            }
        }
        self.completed = t;
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_draws(self) -> PosteriorDraws {
        self.draws
    }
}

/// Runs a full chain and returns the retained edge-probability draws.
pub fn run_chain(ds: &NetworkDataset, hp: &HyperParams, cc: &ChainConfig) -> Result<PosteriorDraws> {
    let mut chain = Chain::new(ds, hp, cc)?;
    chain.run_to_end()?;
    Ok(chain.into_draws())
}

/// Posterior predictive mean of edge `l` in subject `i`.
pub fn predictive_mean(draws: &PosteriorDraws, i: usize, l: usize) -> Result<f64> {
    draws.predictive_mean(i, l)
}

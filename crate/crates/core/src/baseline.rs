//! Massive univariate competitor: an independent GP-logit regression for
//! every edge, `logit pi_l(x) ~ GP(mu_bar_l, sigma_bar * c)`, fitted with
//! the same Polya-Gamma augmentation. The mean function is the clamped
//! empirical log-odds of the edge at each unique trait.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gibbs::ChainConfig;
use crate::kernel::{build_covariance, GpCovariance, KernelParams};
use crate::linalg::{factor_into, sample_canonical_into, SpdMatrix};
use crate::math::{logistic, logit};
use crate::model::{InitMode, PosteriorDraws};
use crate::network::NetworkDataset;
use crate::pg::draw_pg1;
use crate::rng::{Phase, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BaselineConfig {
    /// Multiplier of the GP correlation function.
    pub sigma_bar: f64,
    pub kappa: f64,
    /// Frequency clamp before the empirical logit. `None` uses
    /// `1 / (2 m + 2)` with `m` the average number of subjects per trait.
    pub clamp_eps: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { sigma_bar: 10.0, kappa: 0.01, clamp_eps: None }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_bar > 0.0) || !self.sigma_bar.is_finite() {
            return Err(Error::InvalidArgument("sigma_bar must be positive".into()));
        }
        KernelParams::new(self.kappa)?;
        if let Some(e) = self.clamp_eps {
            if !(e > 0.0 && e < 0.5) {
                return Err(Error::InvalidArgument(format!("clamp_eps must lie in (0, 0.5), got {e}")));
            }
        }
        Ok(())
    }

    /// Clamp actually used on `ds`.
    pub fn resolved_clamp(&self, ds: &NetworkDataset) -> f64 {
        self.clamp_eps.unwrap_or_else(|| {
            let per_trait = libm::round(ds.num_subjects() as f64 / ds.unique_traits().len() as f64);
            1.0 / (2.0 * per_trait + 2.0)
        })
    }
}

/// Empirical log-odds of one edge at every unique trait.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLogit {
    pub values: Vec<f64>,
    /// Trait cells with no observed value, filled from the all-trait frequency.
    pub fallback: Vec<bool>,
}

pub fn empirical_logit_mean(ds: &NetworkDataset, l: usize, clamp_eps: f64) -> Result<EmpiricalLogit> {
    if l >= ds.num_edges() {
        return Err(Error::InvalidArgument(format!("edge {l} out of range")));
    }
    if !(clamp_eps > 0.0 && clamp_eps < 0.5) {
        return Err(Error::InvalidArgument(format!("clamp_eps must lie in (0, 0.5), got {clamp_eps}")));
    }
    let nu = ds.unique_traits().len();
    let mut ones = vec![0usize; nu];
    let mut seen = vec![0usize; nu];
    for (i, &j) in ds.unique_index().iter().enumerate() {
        if let Some(b) = ds.edge(i, l).observed() {
            seen[j] += 1;
            ones[j] += b as usize;
        }
    }
    let total_seen: usize = seen.iter().sum();
    let global = if total_seen == 0 { 0.5 } else { ones.iter().sum::<usize>() as f64 / total_seen as f64 };
    let clamped = |p: f64| logit(p.clamp(clamp_eps, 1.0 - clamp_eps));
    let mut values = Vec::with_capacity(nu);
    let mut fallback = Vec::with_capacity(nu);
    for j in 0..nu {
        if seen[j] == 0 {
            values.push(clamped(global));
            fallback.push(true);
        } else {
            values.push(clamped(ones[j] as f64 / seen[j] as f64));
            fallback.push(false);
        }
    }
    Ok(EmpiricalLogit { values, fallback })
}

/// Gibbs sampler for one edge's latent logit vector over the unique traits.
#[derive(Debug, Clone)]
pub struct EdgeGpSampler {
    mean: Vec<f64>,
    prior_prec: SpdMatrix,
    prior_lin: Vec<f64>,
    /// Current logit values at the unique traits.
    pub f: Vec<f64>,
    /// PG auxiliaries, one per observation passed to [`Self::sweep`].
    pub omega: Vec<f64>,
    prec: Vec<f64>,
    chol: Vec<f64>,
    lin: Vec<f64>,
}

impl EdgeGpSampler {
    /// Prior `N(mean, sigma_bar * C)`; the chain starts at the prior mean.
    pub fn new(mean: Vec<f64>, gp: &GpCovariance, sigma_bar: f64) -> Self {
        let nu = mean.len();
        let mut prior_prec = gp.factor.inverse();
        prior_prec.scale(1.0 / sigma_bar);
        let prior_lin = prior_prec.mul_vec(&mean);
        Self {
            f: mean.clone(),
            mean,
            prior_prec,
            prior_lin,
            omega: Vec::new(),
            prec: vec![0.0; nu * nu],
            chol: vec![0.0; nu * nu],
            lin: vec![0.0; nu],
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Replaces `f` with a draw from the prior.
    pub fn draw_prior<R: Rng + ?Sized>(&mut self, gp: &GpCovariance, sigma_bar: f64, rng: &mut R) {
        let z: Vec<f64> = (0..self.mean.len()).map(|_| StandardNormal.sample(rng)).collect();
        let lz = gp.factor.mul_lower(&z);
        let s = libm::sqrt(sigma_bar);
        for (f, (m, e)) in self.f.iter_mut().zip(self.mean.iter().zip(lz)) {
            *f = m + s * e;
        }
    }

    /// One sweep: PG draws for every observation `(unique index, present)`,
    /// then the Gaussian full conditional of `f`.
    pub fn sweep<R: Rng + ?Sized>(&mut self, obs: &[(usize, bool)], rng: &mut R) -> Result<()> {
        let nu = self.mean.len();
        self.omega.resize(obs.len(), 0.0);
        self.prec.copy_from_slice(self.prior_prec.as_slice());
        self.lin.copy_from_slice(&self.prior_lin);
        for (o, &(j, present)) in self.omega.iter_mut().zip(obs) {
            *o = draw_pg1(self.f[j], rng);
            self.prec[j * nu + j] += *o;
            self.lin[j] += if present { 0.5 } else { -0.5 };
        }
        factor_into(&self.prec, nu, &mut self.chol)?;
        let mut out = vec![0.0; nu];
        sample_canonical_into(&self.chol, nu, &self.lin, rng, &mut out);
        self.f.copy_from_slice(&out);
        Ok(())
    }
}

/// Draws from the baseline plus the cells where the empirical mean fell back
/// to the all-trait frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub draws: PosteriorDraws,
    /// `(edge, unique trait index)` pairs that used the fallback mean.
    pub fallbacks: Vec<(usize, usize)>,
    pub clamp_eps: f64,
}

/// Fits every edge independently and returns per-subject draws
/// `pi_l(x_i)` in the same layout as the main model.
pub fn fit_baseline(ds: &NetworkDataset, bc: &BaselineConfig, cc: &ChainConfig) -> Result<BaselineFit> {
    bc.validate()?;
    cc.validate()?;
    let gp = build_covariance(ds.unique_traits(), &KernelParams::new(bc.kappa)?)?;
    let clamp = bc.resolved_clamp(ds);
    let edges = ds.num_edges();
    let n = ds.num_subjects();
    let nu = ds.unique_traits().len();
    let kept = cc.retained_draws() as usize;

    let fit_edge = |l: usize| -> Result<(Vec<f64>, Vec<bool>)> {
        let emp = empirical_logit_mean(ds, l, clamp)?;
        let obs: Vec<(usize, bool)> = ds
            .unique_index()
            .iter()
            .enumerate()
            .filter_map(|(i, &j)| ds.edge(i, l).observed().map(|b| (j, b)))
            .collect();
        let mut s = EdgeGpSampler::new(emp.values, &gp, bc.sigma_bar);
        if cc.init == InitMode::Prior {
            let mut rng = RngStream::derive(cc.seed, 0, Phase::Baseline, l as u64).rng();
            s.draw_prior(&gp, bc.sigma_bar, &mut rng);
        }
        let mut trace = Vec::with_capacity(kept * nu);
        for t in 1..=cc.iterations {
            let mut rng = RngStream::derive(cc.seed, t, Phase::Baseline, l as u64).rng();
            s.sweep(&obs, &mut rng)
                .map_err(|e| e.with_context(&format!("baseline edge {} at iteration {t}", l + 1)))?;
            if cc.retains(t) {
                trace.extend_from_slice(&s.f);
            }
        }
        Ok((trace, emp.fallback))
    };

    #[cfg(feature = "parallel")]
    let per_edge: Vec<(Vec<f64>, Vec<bool>)> = {
        use rayon::prelude::*;
        (0..edges).into_par_iter().map(fit_edge).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let per_edge: Vec<(Vec<f64>, Vec<bool>)> = (0..edges).map(fit_edge).collect::<Result<_>>()?;

    let mut draws = PosteriorDraws::new(n, edges, cc.meta());
    draws.probs = vec![0.0; kept * n * edges];
    let mut fallbacks = Vec::new();
    for (l, (trace, fb)) in per_edge.iter().enumerate() {
        for d in 0..kept {
            let f = &trace[d * nu..(d + 1) * nu];
            for (i, &j) in ds.unique_index().iter().enumerate() {
                draws.probs[(d * n + i) * edges + l] = logistic(f[j]);
            }
        }
        fallbacks.extend(fb.iter().enumerate().filter(|(_, &b)| b).map(|(j, _)| (l, j)));
    }
    Ok(BaselineFit { draws, fallbacks, clamp_eps: clamp })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeState, EdgeVector};

    fn single_edge(values: &[EdgeState], traits: &[f64]) -> NetworkDataset {
        let nets = values.iter().map(|&s| EdgeVector::new(2, vec![s]).unwrap()).collect();
        NetworkDataset::from_networks(2, nets, traits.to_vec()).unwrap()
    }

    #[test]
    fn empirical_logit_examples() {
        use EdgeState::*;
        let ds = single_edge(&[Present, Absent, Present, Present], &[1.0, 1.0, 2.0, 2.0]);
        let e = empirical_logit_mean(&ds, 0, 0.01).unwrap();
        assert!(e.values[0].abs() < 1e-15);
        assert!((e.values[1] - 4.595_119_850_134_589).abs() < 1e-9);
        assert_eq!(e.fallback, vec![false, false]);

        let ds = single_edge(&[Present, Absent, Missing, Missing], &[1.0, 1.0, 2.0, 2.0]);
        let e = empirical_logit_mean(&ds, 0, 0.01).unwrap();
        assert!(e.values[1].abs() < 1e-15);
        assert_eq!(e.fallback, vec![false, true]);
    }

    #[test]
    fn default_clamp_uses_subjects_per_trait() {
        use EdgeState::*;
        let ds = single_edge(&[Present; 8], &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        assert!((BaselineConfig::default().resolved_clamp(&ds) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn likelihood_direction() {
        use EdgeState::*;
        let ds = single_edge(&[Present, Present, Present], &[1.0, 1.0, 1.0]);
        let bc = BaselineConfig { clamp_eps: Some(0.4), ..Default::default() };
        let cc = ChainConfig { iterations: 2000, burn_in: 200, thin: 2, seed: 1, ..Default::default() };
        let fit = fit_baseline(&ds, &bc, &cc).unwrap();
        assert!(fit.draws.predictive_mean(0, 0).unwrap() > 0.5);
    }

    #[test]
    fn tiny_sigma_pins_to_mean() {
        use EdgeState::*;
        let ds = single_edge(&[Present, Absent, Absent, Present, Present, Present], &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let bc = BaselineConfig { sigma_bar: 1e-10, kappa: 0.5, clamp_eps: Some(0.1) };
        let cc = ChainConfig { iterations: 50, burn_in: 10, thin: 1, seed: 2, ..Default::default() };
        let fit = fit_baseline(&ds, &bc, &cc).unwrap();
        let emp = empirical_logit_mean(&ds, 0, 0.1).unwrap();
        for d in 0..fit.draws.num_draws() {
            for (i, &j) in ds.unique_index().iter().enumerate() {
                let f = logit(fit.draws.prob(d, i, 0));
                assert!((f - emp.values[j]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn subjects_sharing_a_trait_share_draws() {
        use EdgeState::*;
        let ds = single_edge(&[Present, Absent, Absent, Absent], &[1.0, 1.0, 2.0, 2.0]);
        let cc = ChainConfig { iterations: 20, burn_in: 0, thin: 1, seed: 2, ..Default::default() };
        let fit = fit_baseline(&ds, &BaselineConfig::default(), &cc).unwrap();
        for d in 0..20 {
            assert_eq!(fit.draws.prob(d, 0, 0), fit.draws.prob(d, 1, 0));
            assert_eq!(fit.draws.prob(d, 2, 0), fit.draws.prob(d, 3, 0));
        }
    }
}

//! Joint-distribution (Geweke) checks on tiny models: prior-then-data
//! simulation against Gibbs-then-data simulation.

use netresp_core::baseline::EdgeGpSampler;
use netresp_core::gibbs::Sampler;
use netresp_core::kernel::{build_covariance, KernelParams};
use netresp_core::math::logistic;
use netresp_core::model::{init_state, HyperParams, InitMode, LatentState};
use netresp_core::network::{EdgeVector, NetworkDataset};
use netresp_core::pg::{sample_pg1, PgTilt};
use netresp_core::rng::{Phase, RngStream, StreamRng};
use rand::Rng;

pub const SAMPLES: usize = 10_000;
const BATCHES: usize = 50;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn iid_se(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

fn batch_se(xs: &[f64]) -> f64 {
    let size = xs.len() / BATCHES;
    let means: Vec<f64> = xs.chunks(size).take(BATCHES).map(mean).collect();
    iid_se(&means)
}

/// z-scores per test function; `marginal[f]` and `successive[f]` hold the
/// samples of test function `f`.
fn z_scores(marginal: &[Vec<f64>], successive: &[Vec<f64>]) -> Vec<f64> {
    marginal
        .iter()
        .zip(successive)
        .map(|(m, s)| (mean(m) - mean(s)) / (iid_se(m).powi(2) + batch_se(s).powi(2)).sqrt())
        .collect()
}

fn tiny_hyper(dim: usize) -> HyperParams {
    HyperParams { mu_z: 0.5, sigma2_z: 1.0, a: 5.0, q: 2.0, kappa: 0.5, latent_dim: dim, dict_size: dim }
}

fn tiny_dataset() -> NetworkDataset {
    let nets = (0..3).map(|_| EdgeVector::from_bits(4, &[false; 6]).unwrap()).collect();
    NetworkDataset::from_networks(4, nets, vec![1.0, 2.0, 3.0]).unwrap()
}

fn test_functions(st: &LatentState) -> [f64; 6] {
    let m = |v: &[f64]| mean(v);
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
    [m(&st.z), sq(&st.y), sq(&st.g), st.tau[0], m(&st.omega), sq(&st.w)]
}

const NAMES: [&str; 6] = ["mean Z", "mean Y^2", "mean G^2", "tau", "mean omega", "mean W^2"];

fn draw_data(sampler: &mut Sampler, rng: &mut StreamRng) {
    let ix = sampler.indexer().clone();
    for i in 0..3 {
        for l in 0..ix.len() {
            let p = logistic(sampler.state().linear_predictor(i, l, &ix));
            let a = rng.random::<f64>() < p;
            sampler.set_response(i, l, a);
        }
    }
}

fn draw_omega(st: &mut LatentState, rng: &mut StreamRng) {
    let ix = netresp_core::network::EdgeIndexer::new(st.nodes);
    let edges = ix.len();
    for i in 0..st.subjects {
        for l in 0..edges {
            let psi = st.linear_predictor(i, l, &ix);
            st.omega[i * edges + l] = sample_pg1(PgTilt::new(psi).unwrap(), rng);
        }
    }
}

/// z-scores of the main sampler with R = K = `dim`.
pub fn main_sampler_z(dim: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let hp = tiny_hyper(dim);
    let ds = tiny_dataset();
    let mut rng = RngStream::derive(seed, 0, Phase::Test, 0).rng();

    let mut marginal = vec![Vec::with_capacity(SAMPLES); NAMES.len()];
    for _ in 0..SAMPLES {
        let mut st = init_state(&hp, &ds, InitMode::Prior, &mut rng).unwrap();
        draw_omega(&mut st, &mut rng);
        for (f, v) in test_functions(&st).into_iter().enumerate() {
            marginal[f].push(v);
        }
    }

    let mut sampler = Sampler::new(&ds, &hp, seed + 1, InitMode::Prior).unwrap();
    draw_data(&mut sampler, &mut rng);
    let mut successive = vec![Vec::with_capacity(SAMPLES); NAMES.len()];
    for t in 1..=SAMPLES as u64 {
        sampler.sweep(t).unwrap();
        draw_data(&mut sampler, &mut rng);
        for (f, v) in test_functions(sampler.state()).into_iter().enumerate() {
            successive[f].push(v);
        }
    }

    NAMES.iter().copied().zip(z_scores(&marginal, &successive)).collect()
}

/// z-scores of the per-edge baseline sampler, two subjects per trait.
pub fn baseline_sampler_z(seed: u64) -> Vec<(&'static str, f64)> {
    let traits = [1.0, 2.0, 3.0];
    let gp = build_covariance(&traits, &KernelParams::new(0.5).unwrap()).unwrap();
    let mu = vec![0.3, -0.5, 0.1];
    let sigma_bar = 2.0;
    // two subjects per trait
    let layout = [0usize, 0, 1, 1, 2, 2];
    let mut rng = RngStream::derive(seed, 0, Phase::Test, 0).rng();

    let fns =
        |f: &[f64], omega: &[f64]| [mean(f), f.iter().map(|x| x * x).sum::<f64>() / 3.0, f[0] * f[2], mean(omega)];

    let mut marginal = vec![Vec::with_capacity(SAMPLES); 4];
    let mut s = EdgeGpSampler::new(mu.clone(), &gp, sigma_bar);
    for _ in 0..SAMPLES {
        s.draw_prior(&gp, sigma_bar, &mut rng);
        let omega: Vec<f64> = layout.iter().map(|&j| sample_pg1(PgTilt::new(s.f[j]).unwrap(), &mut rng)).collect();
        for (k, v) in fns(&s.f, &omega).into_iter().enumerate() {
            marginal[k].push(v);
        }
    }

    let mut s = EdgeGpSampler::new(mu, &gp, sigma_bar);
    s.draw_prior(&gp, sigma_bar, &mut rng);
    let data = |f: &[f64], rng: &mut StreamRng| -> Vec<(usize, bool)> {
        layout.iter().map(|&j| (j, rng.random::<f64>() < logistic(f[j]))).collect()
    };
    let mut obs = data(&s.f, &mut rng);
    let mut successive = vec![Vec::with_capacity(SAMPLES); 4];
    for _ in 0..SAMPLES {
        s.sweep(&obs, &mut rng).unwrap();
        obs = data(&s.f, &mut rng);
        for (k, v) in fns(&s.f, &s.omega).into_iter().enumerate() {
            successive[k].push(v);
        }
    }

    ["mean f", "mean f^2", "f1 f3", "mean omega"].into_iter().zip(z_scores(&marginal, &successive)).collect()
}

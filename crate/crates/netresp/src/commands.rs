//! Command implementations. Each command reads its inputs, computes in
//! memory, stages every output and commits them together.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use netresp_core::baseline::{fit_baseline, BaselineFit};
use netresp_core::eval::{
    evaluate_one, make_hard_edge_mask, make_simulation_mask, posterior_predictive_check, EvalReport, HoldoutMask,
    PpcReport, Statistic,
};
use netresp_core::gibbs::{Chain, ChainConfig, Sampler};
use netresp_core::model::{HyperParams, PosteriorDraws};
use netresp_core::network::NetworkDataset;
use netresp_core::rng::{Phase, RngStream};
use netresp_core::sim::{generate_scenario, LabeledDataset};
use serde::{Deserialize, Serialize};

use crate::config::{sha256_hex, DatasetFormat, MaskKind, RunConfig};
use crate::dataset_io::{dataset_bytes, load_dataset, load_matrix_dataset, read_edge_list, regimes_csv};
use crate::draws_io::{
    decode_draws, encode_draws, load_draws, Checkpoint, DrawsSidecar, Method, CHECKPOINT_DRAWS, CHECKPOINT_JSON,
};
use crate::error::{CliError, IoContext, Result};
use crate::output::{write_atomic, Manifest, Staging};

pub const DATASET_FILE: &str = "dataset.txt";
pub const REGIMES_FILE: &str = "regimes.csv";
pub const MASK_FILE: &str = "mask.json";
pub const MODEL_DRAWS: &str = "model.draws.json";
pub const BASELINE_DRAWS: &str = "baseline.draws.json";
pub const REPORT_FILE: &str = "report.json";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const PPC_JSON: &str = "ppc.json";
pub const PPC_CSV: &str = "ppc.csv";
pub const SCATTER_CSV: &str = "scatter.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Effective settings for one invocation.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    /// Latent dimensions to fit; `R = K` for each entry.
    pub rk: Option<Vec<usize>>,
    pub resume: bool,
    /// Stop the main sampler after this many iterations, leaving only the
    /// checkpoint behind. Used to exercise resumption.
    pub halt_after: Option<u64>,
}

impl Context {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        Self { config: config.normalized(), out: out.into(), rk: None, resume: false, halt_after: None }
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, self.config.seed, self.config.hash())
    }
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| CliError::Usage(format!("config is missing data.{what}")))
}

/// Loads the dataset named in the config and records it as an input.
pub fn load_input_dataset(cfg: &RunConfig, manifest: &mut Manifest) -> Result<NetworkDataset> {
    match cfg.data.format {
        DatasetFormat::Vector => {
            let p = required(&cfg.data.dataset, "dataset")?;
            manifest.add_input(p)?;
            load_dataset(p)
        }
        DatasetFormat::Matrix => {
            let p = required(&cfg.data.dataset, "dataset")?;
            manifest.add_input(p)?;
            load_matrix_dataset(p)
        }
        DatasetFormat::EdgeList => {
            let e = required(&cfg.data.edges, "edges")?;
            let t = required(&cfg.data.traits, "traits")?;
            manifest.add_input(e)?;
            manifest.add_input(t)?;
            read_edge_list(e, t, cfg.data.nodes)
        }
    }
}

pub fn dataset_hash(ds: &NetworkDataset) -> String {
    sha256_hex(&dataset_bytes(ds))
}

fn load_mask(path: &Path, ds: &NetworkDataset, manifest: &mut Manifest) -> Result<HoldoutMask> {
    manifest.add_input(path)?;
    let bytes = std::fs::read(path).at(path)?;
    let mask: HoldoutMask =
        serde_json::from_slice(&bytes).map_err(|source| CliError::Json { path: path.into(), source })?;
    mask.validate(ds).map_err(|e| CliError::Mismatch(format!("{}: {e}", path.display())))?;
    Ok(mask)
}

fn load_draws_checked(
    path: &Path,
    ds: &NetworkDataset,
    expected: Method,
    manifest: &mut Manifest,
) -> Result<PosteriorDraws> {
    manifest.add_input(path)?;
    let (side, draws) = load_draws(path)?;
    if side.method != expected {
        return Err(CliError::Mismatch(format!("{} holds {} draws", path.display(), side.method.name())));
    }
    if side.dataset_sha256 != dataset_hash(ds) || side.subjects != ds.num_subjects() || side.edges != ds.num_edges() {
        return Err(CliError::Mismatch(format!("{} was not fitted to this dataset", path.display())));
    }
    Ok(draws)
}

// ---------------------------------------------------------------- simulate

pub fn simulate(cfg: &RunConfig) -> Result<LabeledDataset> {
    Ok(generate_scenario(&cfg.simulate)?)
}

fn stage_simulation(st: &mut Staging, lab: &LabeledDataset) -> Result<()> {
    st.write(DATASET_FILE, &dataset_bytes(&lab.dataset))?;
    st.write(REGIMES_FILE, &regimes_csv(&lab.dataset, &lab.regimes))
}

pub fn cmd_simulate(ctx: &Context) -> Result<()> {
    let lab = simulate(&ctx.config)?;
    let mut st = Staging::new(&ctx.out)?;
    stage_simulation(&mut st, &lab)?;
    st.commit(ctx.manifest("simulate"))
}

// -------------------------------------------------------------------- mask

pub fn build_mask(cfg: &RunConfig, ds: &NetworkDataset) -> Result<HoldoutMask> {
    let m = &cfg.mask;
    let mut rng = RngStream::derive(cfg.seed, 0, Phase::Mask, 0).rng();
    let mask = match m.protocol {
        MaskKind::Simulation => make_simulation_mask(ds, m.lower, m.upper, m.per_trait, &mut rng)?,
        MaskKind::HardEdge => make_hard_edge_mask(ds, m.lower, m.upper, m.subject_fraction, &mut rng)?,
    };
    log::info!("masked {} entries ({:.4} of all entries)", mask.len(), mask.masked_fraction(ds));
    Ok(mask)
}

pub fn cmd_mask(ctx: &Context) -> Result<()> {
    let mut manifest = ctx.manifest("mask");
    let ds = load_input_dataset(&ctx.config, &mut manifest)?;
    let mask = build_mask(&ctx.config, &ds)?;
    let mut st = Staging::new(&ctx.out)?;
    st.write_json(MASK_FILE, &mask)?;
    st.commit(manifest)
}

// --------------------------------------------------------------------- fit

/// Training data: the full dataset with the masked entries removed.
fn training_set(ds: &NetworkDataset, mask: Option<&HoldoutMask>) -> Result<NetworkDataset> {
    match mask {
        Some(m) => Ok(m.apply(ds)?),
        None => Ok(ds.clone()),
    }
}

fn checkpoint_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join(CHECKPOINT_JSON), dir.join(CHECKPOINT_DRAWS))
}

fn save_checkpoint(dir: &Path, chain: &Chain, hp: &HyperParams, ds_hash: &str) -> Result<()> {
    let (json, bin) = checkpoint_paths(dir);
    let draws = chain.draws();
    let bytes = encode_draws(draws);
    write_atomic(&bin, &bytes)?;
    let ck = Checkpoint {
        completed: chain.completed(),
        chain: chain.config().clone(),
        hyper: *hp,
        dataset_sha256: ds_hash.to_string(),
        state: chain.sampler().state().clone(),
        response: chain.sampler().response().to_vec(),
        latents: draws.latents.clone(),
        loglik_trace: draws.loglik_trace.clone(),
        draws_sha256: sha256_hex(&bytes),
    };
    write_atomic(&json, &serde_json::to_vec(&ck).expect("checkpoint serializes"))?;
    log::info!("checkpoint written at iteration {}", ck.completed);
    Ok(())
}

fn load_checkpoint(
    dir: &Path,
    train: &NetworkDataset,
    hp: &HyperParams,
    cc: &ChainConfig,
    ds_hash: &str,
) -> Result<Option<Chain>> {
    let (json, bin) = checkpoint_paths(dir);
    if !json.exists() {
        log::info!("no checkpoint in {}; starting from scratch", dir.display());
        return Ok(None);
    }
    let text = std::fs::read(&json).at(&json)?;
    let ck: Checkpoint =
        serde_json::from_slice(&text).map_err(|source| CliError::Json { path: json.clone(), source })?;
    if ck.dataset_sha256 != ds_hash || ck.hyper != *hp || ck.chain != *cc {
        return Err(CliError::Mismatch(format!("{} belongs to a different run", json.display())));
    }
    let bytes = std::fs::read(&bin).at(&bin)?;
    if sha256_hex(&bytes) != ck.draws_sha256 {
        return Err(CliError::Mismatch(format!("{} does not match its checkpoint", bin.display())));
    }
    let mut draws = decode_draws(&bytes, cc.meta(), &bin)?;
    draws.latents = ck.latents;
    draws.loglik_trace = ck.loglik_trace;
    let sampler = Sampler::from_parts(train, hp, cc.seed, ck.state, ck.response)?;
    log::info!("resuming from iteration {}", ck.completed);
    Ok(Some(Chain::resume(sampler, cc.clone(), ck.completed, draws)?))
}

/// Runs the main sampler with periodic checkpoints in `ck_dir`.
/// Returns `None` when stopped early by `halt_after`.
pub fn run_checkpointed(
    ctx: &Context,
    train: &NetworkDataset,
    hp: &HyperParams,
    ds_hash: &str,
    ck_dir: &Path,
) -> Result<Option<PosteriorDraws>> {
    let cc = &ctx.config.chain;
    let resumed = if ctx.resume { load_checkpoint(ck_dir, train, hp, cc, ds_hash)? } else { None };
    let mut chain = match resumed {
        Some(c) => c,
        None => Chain::new(train, hp, cc)?,
    };
    let every = ctx.config.checkpoint_every;
    while !chain.is_done() {
        chain.step()?;
        let t = chain.completed();
        if t % every == 0 && !chain.is_done() {
            save_checkpoint(ck_dir, &chain, hp, ds_hash)?;
        }
        if ctx.halt_after.is_some_and(|h| t >= h) && !chain.is_done() {
            save_checkpoint(ck_dir, &chain, hp, ds_hash)?;
            return Ok(None);
        }
    }
    Ok(Some(chain.into_draws()))
}

pub fn chain_log(method: Method, d: &PosteriorDraws, hp: Option<&HyperParams>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method {}", method.name());
    let _ = writeln!(s, "seed {}", d.meta.seed);
    let _ = writeln!(s, "iterations {} burn_in {} thin {}", d.meta.iterations, d.meta.burn_in, d.meta.thin);
    if let Some(hp) = hp {
        let _ = writeln!(
            s,
            "R {} K {} kappa {} mu_z {} sigma2_z {} a {} q {}",
            hp.latent_dim, hp.dict_size, hp.kappa, hp.mu_z, hp.sigma2_z, hp.a, hp.q
        );
    }
    for (t, ll) in &d.loglik_trace {
        let _ = writeln!(s, "iteration {t} mean_observed_loglik {ll}");
    }
    let _ = writeln!(s, "retained_draws {}", d.num_draws());
    s
}

fn sidecar(
    method: Method,
    data_file: &str,
    d: &PosteriorDraws,
    ctx: &Context,
    hp: Option<HyperParams>,
    fit: Option<&BaselineFit>,
    ds_hash: &str,
) -> DrawsSidecar {
    DrawsSidecar {
        method,
        data_file: data_file.to_string(),
        subjects: d.subjects,
        edges: d.edges,
        draws: d.num_draws(),
        chain: d.meta.clone(),
        hyper: hp,
        baseline: fit.map(|_| ctx.config.baseline),
        fallbacks: fit.map(|f| f.fallbacks.clone()),
        dataset_sha256: ds_hash.to_string(),
        config_sha256: ctx.config.hash(),
    }
}

fn stage_draws(
    st: &mut Staging,
    prefix: &str,
    method: Method,
    d: &PosteriorDraws,
    side: &DrawsSidecar,
    log: Option<&str>,
) -> Result<()> {
    st.write(&format!("{prefix}{}", side.data_file), &encode_draws(d))?;
    st.write_json(&format!("{prefix}{}.draws.json", method.name()), side)?;
    if let Some(log) = log {
        st.write(&format!("{prefix}chain.log"), log.as_bytes())?;
    }
    Ok(())
}

/// Fits the main model for every requested R = K. Returns the draws per
/// dimension, or `None` if halted.
fn fit_dimensions(
    ctx: &Context,
    st: &mut Staging,
    ds: &NetworkDataset,
    mask: Option<&HoldoutMask>,
) -> Result<Option<Vec<(usize, PosteriorDraws)>>> {
    let train = training_set(ds, mask)?;
    let ds_hash = dataset_hash(ds);
    let dims = ctx.rk.clone().unwrap_or_else(|| vec![ctx.config.model.latent_dim]);
    let several = dims.len() > 1;
    let mut fitted = Vec::new();
    for &r in &dims {
        let hp = HyperParams { latent_dim: r, dict_size: r, ..ctx.config.model };
        let prefix = if several { format!("rk{r}/") } else { String::new() };
        let ck_dir = ctx.out.join(format!("{prefix}checkpoint"));
        log::info!("fitting R = K = {r}");
        let Some(d) = run_checkpointed(ctx, &train, &hp, &ds_hash, &ck_dir)? else {
            return Ok(None);
        };
        let side = sidecar(Method::Model, "model.draws.bin", &d, ctx, Some(hp), None, &ds_hash);
        stage_draws(st, &prefix, Method::Model, &d, &side, Some(&chain_log(Method::Model, &d, Some(&hp))))?;
        fitted.push((r, d));
    }
    if let (Some(mask), true) = (mask, fitted.len() > 1) {
        let mut csv = String::from("rk,auc\n");
        for (r, d) in &fitted {
            let auc = evaluate_one("model", d, ds, mask).map(|e| e.auc.to_string()).unwrap_or_default();
            let _ = writeln!(csv, "{r},{auc}");
        }
        st.write("selection.csv", csv.as_bytes())?;
    }
    Ok(Some(fitted))
}

fn remove_checkpoints(ctx: &Context) {
    let mut dirs = vec![ctx.out.join("checkpoint")];
    if let Some(rk) = &ctx.rk {
        dirs.extend(rk.iter().map(|r| ctx.out.join(format!("rk{r}/checkpoint"))));
    }
    for d in dirs {
        if d.is_dir() {
            if let Err(e) = std::fs::remove_dir_all(&d) {
                log::warn!("could not remove {}: {e}", d.display());
            }
        }
    }
}

/// Returns false when halted before the end.
pub fn cmd_fit(ctx: &Context) -> Result<bool> {
    let mut manifest = ctx.manifest("fit");
    let ds = load_input_dataset(&ctx.config, &mut manifest)?;
    let mask = match &ctx.config.data.mask {
        Some(p) => Some(load_mask(p, &ds, &mut manifest)?),
        None => None,
    };
    let mut st = Staging::new(&ctx.out)?;
    if fit_dimensions(ctx, &mut st, &ds, mask.as_ref())?.is_none() {
        return Ok(false);
    }
    st.commit(manifest)?;
    remove_checkpoints(ctx);
    Ok(true)
}

fn fit_baseline_draws(ctx: &Context, ds: &NetworkDataset, mask: Option<&HoldoutMask>) -> Result<BaselineFit> {
    let train = training_set(ds, mask)?;
    let fit = fit_baseline(&train, &ctx.config.baseline, &ctx.config.chain)?;
    if !fit.fallbacks.is_empty() {
        log::warn!("{} edge/trait cells used the all-trait empirical frequency", fit.fallbacks.len());
    }
    Ok(fit)
}

fn stage_baseline(st: &mut Staging, ctx: &Context, ds: &NetworkDataset, fit: &BaselineFit) -> Result<()> {
    let side = sidecar(Method::Baseline, "baseline.draws.bin", &fit.draws, ctx, None, Some(fit), &dataset_hash(ds));
    stage_draws(st, "", Method::Baseline, &fit.draws, &side, None)
}

pub fn cmd_fit_baseline(ctx: &Context) -> Result<()> {
    let mut manifest = ctx.manifest("fit-baseline");
    let ds = load_input_dataset(&ctx.config, &mut manifest)?;
    let mask = match &ctx.config.data.mask {
        Some(p) => Some(load_mask(p, &ds, &mut manifest)?),
        None => None,
    };
    let fit = fit_baseline_draws(ctx, &ds, mask.as_ref())?;
    let mut st = Staging::new(&ctx.out)?;
    stage_baseline(&mut st, ctx, &ds, &fit)?;
    st.commit(manifest)
}

// ---------------------------------------------------------------- evaluate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub masked_entries: usize,
    pub masked_fraction: f64,
    pub model_auc: f64,
    pub baseline_auc: f64,
    pub model: EvalReport,
    pub baseline: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcOutput {
    pub level: f64,
    pub model: PpcReport,
    pub baseline: Option<PpcReport>,
}

pub fn run_ppc(cfg: &RunConfig, ds: &NetworkDataset, draws: &PosteriorDraws) -> Result<PpcReport> {
    let blocks = cfg.ppc.partition.resolve(ds.nodes())?;
    Ok(posterior_predictive_check(draws, ds, &cfg.ppc.statistics, &blocks, cfg.ppc.level, cfg.seed)?)
}

pub fn evaluation(
    cfg: &RunConfig,
    ds: &NetworkDataset,
    mask: &HoldoutMask,
    model: &PosteriorDraws,
    baseline: &PosteriorDraws,
) -> Result<EvaluationReport> {
    let mut m = evaluate_one("model", model, ds, mask)?;
    let mut b = evaluate_one("baseline", baseline, ds, mask)?;
    m.ppc = Some(run_ppc(cfg, ds, model)?);
    b.ppc = Some(run_ppc(cfg, ds, baseline)?);
    Ok(EvaluationReport {
        seed: cfg.seed,
        masked_entries: mask.len(),
        masked_fraction: mask.masked_fraction(ds),
        model_auc: m.auc,
        baseline_auc: b.auc,
        model: m,
        baseline: b,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Ten rows, one per bin, both methods side by side.
pub fn calibration_csv(r: &EvaluationReport) -> String {
    let mut s = String::from(
        "bin_lower,bin_upper,model_count,model_positives,model_proportion,baseline_count,baseline_positives,baseline_proportion\n",
    );
    for (m, b) in r.model.calibration.bins.iter().zip(&r.baseline.calibration.bins) {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            m.lower,
            m.upper,
            m.count,
            m.positives,
            opt(m.proportion),
            b.count,
            b.positives,
            opt(b.proportion)
        );
    }
    s
}

fn stage_evaluation(st: &mut Staging, r: &EvaluationReport) -> Result<()> {
    st.write_json(REPORT_FILE, r)?;
    st.write(CALIBRATION_FILE, calibration_csv(r).as_bytes())
}

pub fn cmd_evaluate(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let mut manifest = ctx.manifest("evaluate");
    let ds = load_input_dataset(cfg, &mut manifest)?;
    let mask = load_mask(required(&cfg.data.mask, "mask")?, &ds, &mut manifest)?;
    let model = load_draws_checked(required(&cfg.data.model_draws, "model_draws")?, &ds, Method::Model, &mut manifest)?;
    let base = load_draws_checked(
        required(&cfg.data.baseline_draws, "baseline_draws")?,
        &ds,
        Method::Baseline,
        &mut manifest,
    )?;
    let report = evaluation(cfg, &ds, &mask, &model, &base)?;
    let mut st = Staging::new(&ctx.out)?;
    stage_evaluation(&mut st, &report)?;
    st.commit(manifest)
}

// --------------------------------------------------------------------- ppc

/// `method,subject_id,trait,statistic,observed,mean,lower,upper,covered`.
pub fn ppc_csv(ds: &NetworkDataset, out: &PpcOutput) -> String {
    let mut s = String::from("method,subject_id,trait,statistic,observed,mean,lower,upper,covered\n");
    let methods = [("model", Some(&out.model)), ("baseline", out.baseline.as_ref())];
    for (name, rep) in methods {
        let Some(rep) = rep else { continue };
        for r in &rep.rows {
            let iv = r.interval;
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{},{},{}",
                ds.subject_ids()[r.subject],
                ds.traits()[r.subject],
                r.statistic.name(),
                opt(r.observed),
                opt(iv.map(|i| i.mean)),
                opt(iv.map(|i| i.lower)),
                opt(iv.map(|i| i.upper)),
                r.covered.map(|c| c.to_string()).unwrap_or_default()
            );
        }
    }
    s
}

/// Observed value against predictive mean, one row per subject and statistic.
pub fn scatter_csv(ds: &NetworkDataset, out: &PpcOutput) -> String {
    let mut s = String::from("method,statistic,subject_id,trait,observed,predicted\n");
    let methods = [("model", Some(&out.model)), ("baseline", out.baseline.as_ref())];
    for (name, rep) in methods {
        let Some(rep) = rep else { continue };
        for stat in Statistic::ALL {
            for r in rep.rows.iter().filter(|r| r.statistic == stat) {
                let _ = writeln!(
                    s,
                    "{name},{},{},{},{},{}",
                    stat.name(),
                    ds.subject_ids()[r.subject],
                    ds.traits()[r.subject],
                    opt(r.observed),
                    opt(r.interval.map(|i| i.mean))
                );
            }
        }
    }
    s
}

fn stage_ppc(st: &mut Staging, ds: &NetworkDataset, out: &PpcOutput) -> Result<()> {
    st.write_json(PPC_JSON, out)?;
    st.write(PPC_CSV, ppc_csv(ds, out).as_bytes())?;
    st.write(SCATTER_CSV, scatter_csv(ds, out).as_bytes())
}

pub fn cmd_ppc(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let mut manifest = ctx.manifest("ppc");
    let ds = load_input_dataset(cfg, &mut manifest)?;
    let model = load_draws_checked(required(&cfg.data.model_draws, "model_draws")?, &ds, Method::Model, &mut manifest)?;
    let baseline = match &cfg.data.baseline_draws {
        Some(p) => Some(load_draws_checked(p, &ds, Method::Baseline, &mut manifest)?),
        None => None,
    };
    let out = PpcOutput {
        level: cfg.ppc.level,
        model: run_ppc(cfg, &ds, &model)?,
        baseline: baseline.as_ref().map(|b| run_ppc(cfg, &ds, b)).transpose()?,
    };
    let mut st = Staging::new(&ctx.out)?;
    stage_ppc(&mut st, &ds, &out)?;
    st.commit(manifest)
}

// --------------------------------------------------------- full simulation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub statistic: Statistic,
    pub model: (usize, usize),
    pub baseline: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub masked_entries: usize,
    pub masked_fraction: f64,
    pub model_auc: f64,
    pub baseline_auc: f64,
    pub coverage: Vec<Coverage>,
}

/// Everything produced by `reproduce-simulation`, kept in memory.
pub struct Reproduction {
    pub data: LabeledDataset,
    pub mask: HoldoutMask,
    pub model: PosteriorDraws,
    pub baseline: BaselineFit,
    pub report: EvaluationReport,
    pub ppc: PpcOutput,
    pub summary: Summary,
}

/// simulate, mask, fit, fit-baseline, evaluate and ppc in one pass.
/// Returns `None` when halted.
pub fn reproduce(ctx: &Context, st: &mut Staging) -> Result<Option<Reproduction>> {
    let cfg = &ctx.config;
    let data = simulate(cfg)?;
    let ds = &data.dataset;
    stage_simulation(st, &data)?;
    let mask = build_mask(cfg, ds)?;
    st.write_json(MASK_FILE, &mask)?;
    let Some(mut fitted) = fit_dimensions(ctx, st, ds, Some(&mask))? else {
        return Ok(None);
    };
    let (_, model) = fitted.pop().expect("at least one dimension");
    let baseline = fit_baseline_draws(ctx, ds, Some(&mask))?;
    stage_baseline(st, ctx, ds, &baseline)?;
    let report = evaluation(cfg, ds, &mask, &model, &baseline.draws)?;
    stage_evaluation(st, &report)?;
    let ppc = PpcOutput {
        level: cfg.ppc.level,
        model: report.model.ppc.clone().expect("evaluation attaches ppc"),
        baseline: report.baseline.ppc.clone(),
    };
    stage_ppc(st, ds, &ppc)?;
    let coverage = cfg
        .ppc
        .statistics
        .iter()
        .map(|&s| Coverage {
            statistic: s,
            model: ppc.model.coverage(s),
            baseline: ppc.baseline.as_ref().map_or((0, 0), |b| b.coverage(s)),
        })
        .collect();
    let summary = Summary {
        seed: cfg.seed,
        masked_entries: mask.len(),
        masked_fraction: report.masked_fraction,
        model_auc: report.model_auc,
        baseline_auc: report.baseline_auc,
        coverage,
    };
    st.write_json(SUMMARY_FILE, &summary)?;
    Ok(Some(Reproduction { data, mask, model, baseline, report, ppc, summary }))
}

pub fn cmd_reproduce(ctx: &Context) -> Result<Option<Reproduction>> {
    let mut st = Staging::new(&ctx.out)?;
    let Some(rep) = reproduce(ctx, &mut st)? else {
        return Ok(None);
    };
    st.commit(ctx.manifest("reproduce-simulation"))?;
    remove_checkpoints(ctx);
    log::info!(
        "model AUC {:.4}, baseline AUC {:.4}, masked fraction {:.4}",
        rep.summary.model_auc,
        rep.summary.baseline_auc,
        rep.summary.masked_fraction
    );
    Ok(Some(rep))
}

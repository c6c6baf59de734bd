//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/support/geweke.rs"]
#[allow(dead_code)]
mod geweke;

use std::path::Path;
use std::process::Command;

use netresp::commands::{self, Context, EvaluationReport, Summary};
use netresp::config::RunConfig;
use netresp::output::Staging;
use netresp_core::eval::{auc, Statistic};
use netresp_core::network::{AdjacencyMatrix, BlockPartition, EdgeVector};
use netresp_core::pg::{pg_mean, sample_pg1, PgTilt};
use netresp_core::rng::{Phase, RngStream, StreamRng};
use netresp_core::stats::{average_path_length, block_assortativity, density, transitivity};
use rand::Rng;

const SEEDS: [u64; 3] = [1, 2, 3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ------------------------------------------------------------- criterion 2

fn moments(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m, var, m4)
}

/// Variance of PG(1, 0) from its series: the sum of independent
/// `Exp(1) / (2 pi^2 (k - 1/2)^2)` terms, truncated after `terms`.
fn pg0_variance_series(terms: usize) -> f64 {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    (1..=terms).rev().map(|k| 1.0 / (2.0 * pi2 * (k as f64 - 0.5).powi(2)).powi(2)).sum()
}

fn polya_gamma() -> Outcome {
    const N: usize = 100_000;
    let mut ok = true;
    let mut notes = Vec::new();
    for (j, c) in [0.0, 0.5, 1.0, 2.0, 5.0].into_iter().enumerate() {
        let tilt = PgTilt::new(c).unwrap();
        let mut rng = RngStream::derive(77, 0, Phase::Test, j as u64).rng();
        let xs: Vec<f64> = (0..N).map(|_| sample_pg1(tilt, &mut rng)).collect();
        let (m, var, m4) = moments(&xs);
        let se = (var / N as f64).sqrt();
        let z = (m - pg_mean(tilt)) / se;
        ok &= z.abs() < 3.0;
        notes.push(format!("c={c} z={z:.2}"));
        if c == 0.0 {
            let oracle = pg0_variance_series(1_000_000);
            let se_var = ((m4 - var * var) / N as f64).sqrt();
            let zv = (var - oracle) / se_var;
            ok &= (oracle - 1.0 / 24.0).abs() < 1e-9 && zv.abs() < 3.0;
            notes.push(format!("var z={zv:.2}"));
        }
    }
    outcome(ok, notes.join(", "))
}

// ------------------------------------------------------------- criterion 3

fn sampler_validity() -> Outcome {
    let main = geweke::main_sampler_z(1, 2024);
    let base = geweke::baseline_sampler_z(2025);
    let worst = main.iter().chain(&base).map(|(_, z)| z.abs()).fold(0.0, f64::max);
    outcome(
        worst < 4.0,
        format!("{} samples, max |z| = {worst:.2} over {} test functions", geweke::SAMPLES, main.len() + base.len()),
    )
}

// ------------------------------------------------------------- criterion 6

fn random_graph(rng: &mut StreamRng) -> AdjacencyMatrix {
    let n = rng.random_range(1..=15);
    let p: f64 = rng.random();
    let mut a = AdjacencyMatrix::empty(n);
    for v in 0..n {
        for u in 0..v {
            if rng.random::<f64>() < p {
                a.set(v, u, true);
            }
        }
    }
    a
}

fn brute_density(a: &AdjacencyMatrix) -> f64 {
    let n = a.nodes();
    let pairs = n * n.saturating_sub(1) / 2;
    let edges = (0..n).flat_map(|v| (0..v).map(move |u| (v, u))).filter(|&(v, u)| a.get(v, u)).count();
    if pairs == 0 {
        0.0
    } else {
        edges as f64 / pairs as f64
    }
}

fn brute_transitivity(a: &AdjacencyMatrix) -> f64 {
    let n = a.nodes();
    let (mut closed, mut triples) = (0usize, 0usize);
    for c in 0..n {
        for x in 0..n {
            for y in (x + 1)..n {
                if x != c && y != c && a.get(c, x) && a.get(c, y) {
                    triples += 1;
                    closed += usize::from(a.get(x, y));
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

/// Floyd-Warshall; `None` when no pair is connected.
fn brute_path_length(a: &AdjacencyMatrix) -> Option<f64> {
    let n = a.nodes();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for v in 0..n {
        d[v][v] = 0;
        for u in 0..n {
            if u != v && a.get(v, u) {
                d[v][u] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    let (mut total, mut count) = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j] < inf {
                total += d[i][j];
                count += 1;
            }
        }
    }
    (count > 0).then(|| total as f64 / count as f64)
}

/// Edge-list route: share of within-block edges against the squared
/// shares of edge ends per block.
fn brute_assortativity(a: &AdjacencyMatrix, labels: &[usize]) -> Option<f64> {
    let n = a.nodes();
    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|v| (0..v).map(move |u| (v, u))).filter(|&(v, u)| a.get(v, u)).collect();
    let m = edges.len() as i128;
    if m == 0 {
        return None;
    }
    let within = edges.iter().filter(|&&(v, u)| labels[v] == labels[u]).count() as i128;
    let blocks = labels.iter().max().map_or(0, |b| b + 1);
    let ends: i128 = (0..blocks)
        .map(|b| {
            let deg: i128 = (0..n).filter(|&v| labels[v] == b).map(|v| a.degree(v) as i128).sum();
            deg * deg
        })
        .sum();
    let denom = 4 * m * m - ends;
    (denom != 0).then(|| (4 * m * within - ends) as f64 / denom as f64)
}

fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1;
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

fn oracles() -> Outcome {
    let mut rng = RngStream::derive(6, 0, Phase::Test, 0).rng();
    let mut bad = Vec::new();
    for g in 0..100 {
        let a = random_graph(&mut rng);
        let n = a.nodes();
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let part = BlockPartition::new(labels.clone());
        let apl = average_path_length(&a);
        let checks = [
            density(&a) == brute_density(&a),
            transitivity(&a) == brute_transitivity(&a),
            (!apl.no_edges).then_some(apl.value) == brute_path_length(&a),
            block_assortativity(&a, &part).ok() == brute_assortativity(&a, &labels),
        ];
        if checks.contains(&false) {
            bad.push(format!("graph {g} {checks:?}"));
        }
        let bits = a.vectorize();
        if bits.devectorize().ok().as_ref() != Some(&a)
            || EdgeVector::new(n, bits.values().to_vec()).unwrap().devectorize().unwrap().vectorize() != bits
        {
            bad.push(format!("graph {g} vectorization"));
        }
    }
    let mut auc_checked = 0;
    while auc_checked < 100 {
        let len = rng.random_range(2..=60);
        let levels = rng.random_range(1..=20);
        let scores: Vec<f64> = (0..len).map(|_| rng.random_range(0..levels) as f64 / levels as f64).collect();
        let labels: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let Ok(x) = auc(&scores, &labels) else { continue };
        if x != brute_auc(&scores, &labels) {
            bad.push(format!("auc set {auc_checked}"));
        }
        auc_checked += 1;
    }
    outcome(bad.is_empty(), if bad.is_empty() { "100 graphs, 100 AUC sets, exact".into() } else { bad.join("; ") })
}

// ----------------------------------------------------- criteria 1, 4 and 5

/// The parts of a reproduction the criteria look at; draws are dropped.
struct Run {
    summary: Summary,
    report: EvaluationReport,
}

fn reproduce(seed: u64) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    let ctx = Context::new(cfg, dir.path());
    let mut st = Staging::new(dir.path()).unwrap();
    let rep = commands::reproduce(&ctx, &mut st).unwrap().expect("not halted");
    drop(st);
    Run { summary: rep.summary, report: rep.report }
}

fn simulation_study(runs: &[Run]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let (m, b) = (r.summary.model_auc, r.summary.baseline_auc);
        ok &= (0.85..=0.95).contains(&m) && m - b >= 0.03;
        notes.push(format!("seed {}: model {m:.3} baseline {b:.3} gap {:+.3}", r.summary.seed, m - b));
    }
    outcome(ok, notes.join(", "))
}

fn coverage(runs: &[Run]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        for stat in [Statistic::Density, Statistic::Transitivity] {
            let (c, t) = r.report.model.ppc.as_ref().unwrap().coverage(stat);
            ok &= t == 60 && c * 10 >= t * 9;
            notes.push(format!("seed {} {} {c}/{t}", r.summary.seed, stat.name()));
        }
    }
    outcome(ok, notes.join(", "))
}

fn violations(report: &netresp_core::eval::EvalReport) -> Vec<f64> {
    report
        .calibration
        .bins
        .iter()
        .filter(|b| b.count >= 30)
        .filter(|b| {
            let p = b.proportion.unwrap();
            p < b.lower - 0.10 || p > b.upper + 0.10
        })
        .map(|b| b.lower)
        .collect()
}

fn calibration(runs: &[Run]) -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for r in runs {
        let m = violations(&r.report.model);
        let b = violations(&r.report.baseline);
        ok &= m.is_empty() && !b.is_empty();
        notes.push(format!("seed {}: model off {m:?} baseline off {b:?}", r.summary.seed));
    }
    outcome(ok, notes.join(", "))
}

// ------------------------------------------------------------- criterion 7

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut v = Vec::new();
    walk(dir, dir, &mut v);
    v.sort();
    v
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut cfg = RunConfig::default();
    cfg.seed = 11;
    cfg.chain.iterations = 200;
    cfg.chain.burn_in = 100;
    cfg.chain.thin = 2;
    cfg.checkpoint_every = 50;
    let data = root.join("data");
    cfg.data.dataset = Some(data.join("dataset.txt"));
    cfg.data.mask = Some(data.join("mask.json"));
    cfg.data.model_draws = Some(data.join("model.draws.json"));
    cfg.data.baseline_draws = Some(data.join("baseline.draws.json"));
    let cfg_path = root.join("config.json");
    std::fs::write(&cfg_path, cfg.to_json()).unwrap();

    let run = |cmd: &str, out: &Path| -> bool {
        Command::new(env!("CARGO_BIN_EXE_netresp"))
            .env("NETRESP_LOG", "warn")
            .args([cmd, "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--create"])
            .status()
            .unwrap()
            .success()
    };
    let commands = ["simulate", "mask", "fit", "fit-baseline", "evaluate", "ppc", "reproduce-simulation"];
    let mut bad = Vec::new();
    for cmd in commands {
        let (a, b) = (root.join(format!("{cmd}-a")), root.join(format!("{cmd}-b")));
        if !(run(cmd, &a) && run(cmd, &b)) {
            bad.push(format!("{cmd} failed"));
            continue;
        }
        if listing(&a) != listing(&b) || listing(&a).is_empty() {
            bad.push(format!("{cmd} differs"));
        }
        // later commands read the first run's outputs
        for (name, bytes) in listing(&a) {
            if name != "manifest.json" {
                let to = data.join(&name);
                std::fs::create_dir_all(to.parent().unwrap()).unwrap();
                std::fs::write(to, bytes).unwrap();
            }
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() { format!("{} commands byte-identical", commands.len()) } else { bad.join("; ") },
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Outcome)> = Vec::new();
    results.push((2, "Polya-Gamma moments", polya_gamma()));
    results.push((3, "Geweke joint-distribution tests", sampler_validity()));
    results.push((6, "oracle equivalence", oracles()));
    results.push((7, "reproducibility", reproducibility()));
    let runs: Vec<Run> = SEEDS.iter().map(|&s| reproduce(s)).collect();
    results.push((1, "simulation study AUC", simulation_study(&runs)));
    results.push((4, "predictive coverage", coverage(&runs)));
    results.push((5, "calibration", calibration(&runs)));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (k, name, o) in &results {
        println!("criterion {k} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", results.len());
        std::process::exit(1);
    }
}

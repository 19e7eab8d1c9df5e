//! The ten experiment kinds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hcpinn::boundary::{features, grid, make_pair, BoundaryPair, Family};
use hcpinn::dynamics::{analytic_residual, decompose, integrate_frozen_with, predict};
use hcpinn::kernels::{assemble_bundle, assemble_kn, assemble_kt, KernelBundle};
use hcpinn::linalg::{cka, eig_sym, ensemble_stats, SpectrumReport, SymMatrix};
use hcpinn::net::{init_kaiming_uniform, mlp_sizes, NetworkParams};
use hcpinn::pde::{benchmark, Problem};
use hcpinn::train::{lazy_check, run_from, Objective, Phase, TrainConfig};
use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    correlate, correlation_metrics, correlation_rows, evaluate_checks, summary_metrics, CheckResult, Correlation,
};
use crate::config::{ExperimentConfig, Kind, NetworkSpec, SCHEMA_VERSION};
use crate::table::{fmt_f64, write_csv, Row};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub id: String,
    pub kind: String,
    pub rows_ok: usize,
    pub rows_failed: usize,
    pub metrics: BTreeMap<String, f64>,
    pub correlations: Vec<Correlation>,
    pub checks: Vec<CheckResult>,
    /// Side outputs such as ensemble statistics.
    pub extra: serde_json::Value,
    /// TOML echo of the config that produced this summary.
    pub config: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub summary: Summary,
    pub dir: PathBuf,
    pub wall_s: f64,
}

impl Outcome {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.summary.metrics.get(name).copied()
    }
}

/// Status column for recoverable numerical failures; `None` for errors that abort the experiment.
pub fn status_of(e: &hcpinn::Error) -> Option<&'static str> {
    use hcpinn::Error as E;
    match e {
        E::EigFailure { .. } | E::InvalidMatrix(_) | E::DegenerateKernel(_) => Some("eig-failure"),
        E::DivergenceDetected { .. } | E::StepSize { .. } => Some("divergence"),
        E::SingularCoefficient { .. } => Some("singular-coefficient"),
        _ => None,
    }
}

/// Records a row failure or passes on an aborting error.
fn settle(row: &mut Row, r: hcpinn::Result<()>) -> Result<(), CliError> {
    match r {
        Ok(()) => {
            row.text("status", "ok");
            Ok(())
        }
        Err(e) => match status_of(&e) {
            Some(s) => {
                debug!("row {:?} failed: {e}", row.get_text("row"));
                row.text("status", s).text("error", e.to_string());
                Ok(())
            }
            None => Err(e.into()),
        },
    }
}

pub fn spectral_columns(row: &mut Row, prefix: &str, s: &SpectrumReport) {
    row.num(&format!("{prefix}_trace"), s.trace)
        .num(&format!("{prefix}_frob"), s.frob)
        .num(&format!("{prefix}_eff_rank"), s.eff_rank)
        .num(&format!("{prefix}_kappa"), s.kappa)
        .num(&format!("{prefix}_lambda_max"), s.lambda_max)
        .num(&format!("{prefix}_lambda_min"), s.lambda_min)
        .int(&format!("{prefix}_numerical_rank"), s.numerical_rank as i64);
}

fn feature_columns(row: &mut Row, pair: &BoundaryPair, points: &[Vec<f64>]) {
    let f = features(pair, points);
    row.num("grad_l2", f.grad_l2)
        .num("tv", f.tv)
        .num("gini", f.gini)
        .num("dyn_range", f.dyn_range)
        .num("curv_l2", f.curv_l2)
        .num("b2_max", f.b2_max)
        .num("b2_tv", f.b2_tv);
}

fn params_label(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";")
}

/// Persists a kernel, if enabled, so that its metrics can be recomputed later.
fn persist(dir: &Path, enabled: bool, row: usize, name: &str, k: &SymMatrix) -> Result<(), CliError> {
    if !enabled {
        return Ok(());
    }
    let path = dir.join("kernels").join(format!("row{row:05}_{name}.csv"));
    let f = std::fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    k.write_csv(std::io::BufWriter::new(f))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Worker count from `HCPINN_WORKERS`, defaulting to the available parallelism.
pub fn workers() -> usize {
    std::env::var("HCPINN_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    dim: usize,
    points: Vec<Vec<f64>>,
    problem: Option<Problem>,
}

/// Family sweep points as `(family, params)` in config order.
fn family_points(cfg: &ExperimentConfig) -> Vec<(Family, Vec<f64>)> {
    cfg.sweep
        .families
        .iter()
        .flat_map(|f| f.params.iter().map(move |p| (f.family, p.clone())))
        .collect()
}

fn base_row(ctx: &Ctx, index: usize) -> Row {
    let mut r = Row::default();
    r.text("experiment", &ctx.cfg.id).int("row", index as i64);
    r
}

/// Runs the experiment and writes `results.csv` and `summary.json` under `out/<id>/`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = out.join(&cfg.id);
    std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    if cfg.persist_kernels {
        let k = dir.join("kernels");
        std::fs::create_dir_all(&k).map_err(io_err(&k))?;
    }
    let dim = cfg.dim()?;
    let g = cfg.grid_spec(dim);
    let ctx = Ctx {
        cfg,
        dir: dir.clone(),
        dim,
        points: grid(dim, g.points_per_axis, g.mode)?,
        problem: cfg.benchmark.as_deref().map(benchmark).transpose()?,
    };
    info!("{}: {} on {} collocation points", cfg.id, cfg.kind.name(), ctx.points.len());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers())
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let (rows, extra_metrics, extra) = pool.install(|| match cfg.kind {
        k if k.is_invariance() => invariance(&ctx),
        Kind::KtSpectrum | Kind::KrSpectrum | Kind::KrCorrelation => spectrum(&ctx),
        Kind::DynamicsSim => dynamics(&ctx),
        Kind::TrainStudy | Kind::OptimizerCompare => training(&ctx),
        _ => unreachable!("all kinds handled"),
    })?;

    let provenance = cfg.to_toml();
    write_csv(&dir.join("results.csv"), &provenance, &rows)?;
    let mut metrics = summary_metrics(&rows);
    metrics.extend(extra_metrics);
    let mut correlations = Vec::new();
    if let Some(c) = &cfg.correlate {
        correlations = correlate(&rows, &c.features, &c.targets, c.stratify.as_deref());
        correlation_metrics(&correlations, &mut metrics);
        write_csv(&dir.join("correlations.csv"), &provenance, &correlation_rows(&correlations))?;
    }
    let checks = evaluate_checks(&cfg.checks, &metrics);
    let rows_ok = rows.iter().filter(|r| r.is_ok()).count();
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        id: cfg.id.clone(),
        kind: cfg.kind.name().into(),
        rows_ok,
        rows_failed: rows.len() - rows_ok,
        metrics,
        correlations,
        checks,
        extra,
        config: provenance,
    };
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    let wall_s = start.elapsed().as_secs_f64();
    info!("{}: {} ok, {} failed in {:.1} s", cfg.id, summary.rows_ok, summary.rows_failed, wall_s);
    Ok(Outcome { rows, summary, dir, wall_s })
}

type KindResult = Result<(Vec<Row>, BTreeMap<String, f64>, serde_json::Value), CliError>;

fn invariance(ctx: &Ctx) -> KindResult {
    let cfg = ctx.cfg;
    let net = &cfg.network;
    let groups: Vec<(String, NetworkSpec)> = match cfg.kind {
        Kind::KnInvarianceWidth => cfg
            .sweep
            .widths
            .iter()
            .map(|&w| (format!("w{w}"), NetworkSpec { width: w, ..net.clone() }))
            .collect(),
        Kind::KnInvarianceDepth => cfg
            .sweep
            .depths
            .iter()
            .map(|&d| (format!("d{d}"), NetworkSpec { depth: d, ..net.clone() }))
            .collect(),
        Kind::KnInvarianceActivation => cfg
            .sweep
            .activations
            .iter()
            .map(|&a| (a.name().to_string(), NetworkSpec { activation: a, ..net.clone() }))
            .collect(),
        _ => vec![("all".into(), net.clone())],
    };
    let jobs: Vec<(usize, usize, u64)> = groups
        .iter()
        .enumerate()
        .flat_map(|(gi, _)| cfg.sweep.seeds.iter().map(move |&s| (gi, s)))
        .enumerate()
        .map(|(i, (gi, s))| (i, gi, s))
        .collect();
    let results: Vec<Result<(Row, Option<SymMatrix>), CliError>> = jobs
        .par_iter()
        .map(|&(i, gi, seed)| {
            let (label, spec) = &groups[gi];
            let mut row = base_row(ctx, i);
            row.text("group", label)
                .int("seed", seed as i64)
                .int("width", spec.width as i64)
                .int("depth", spec.depth as i64)
                .text("activation", spec.activation.name());
            let mut kernel = None;
            let r = (|| {
                let params = init_kaiming_uniform(&mlp_sizes(ctx.dim, spec.width, spec.depth), spec.activation, seed)?;
                let kn = assemble_kn(&params, &ctx.points)?;
                let s = eig_sym(&kn)?;
                spectral_columns(&mut row, "kn", &s);
                kernel = Some(kn);
                Ok(())
            })();
            settle(&mut row, r)?;
            if let Some(k) = &kernel {
                persist(&ctx.dir, cfg.persist_kernels, i, "kn", k)?;
            }
            debug!("{} row {i} done", cfg.id);
            Ok((row, kernel))
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut kernels: Vec<Vec<SymMatrix>> = vec![Vec::new(); groups.len()];
    for (r, &(_, gi, _)) in results.into_iter().zip(&jobs) {
        let (row, k) = r?;
        if let Some(k) = k {
            kernels[gi].push(k);
        }
        rows.push(row);
    }

    let mut metrics = BTreeMap::new();
    let mut per_group = serde_json::Map::new();
    let mut means: Vec<Option<SymMatrix>> = Vec::new();
    for ((label, _), ks) in groups.iter().zip(&kernels) {
        if ks.len() < 2 {
            means.push(ks.first().cloned());
            continue;
        }
        let stats = ensemble_stats(ks)?;
        let pairs: Vec<(usize, usize)> = (0..ks.len()).flat_map(|a| (a + 1..ks.len()).map(move |b| (a, b))).collect();
        let ckas: Vec<f64> = pairs.par_iter().map(|&(a, b)| cka(&ks[a], &ks[b])).collect::<hcpinn::Result<_>>()?;
        let cka_mean = ckas.iter().sum::<f64>() / ckas.len() as f64;
        let cka_min = ckas.iter().copied().fold(f64::INFINITY, f64::min);
        metrics.insert(format!("{label}.cv_mean"), stats.cv_mean);
        metrics.insert(format!("{label}.cv_max"), stats.cv_max);
        metrics.insert(format!("{label}.cka_mean"), cka_mean);
        metrics.insert(format!("{label}.cka_min"), cka_min);
        per_group.insert(
            label.clone(),
            json!({ "ensemble": stats, "cka_mean": cka_mean, "cka_min": cka_min, "members": ks.len() }),
        );
        means.push(Some(stats.mean.clone()));
    }
    let mut cross = serde_json::Map::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            if let (Some(ma), Some(mb)) = (&means[a], &means[b]) {
                let v = cka(ma, mb)?;
                let key = format!("{}.{}", groups[a].0, groups[b].0);
                metrics.insert(format!("cka_mean_kernel.{key}"), v);
                cross.insert(key, json!(v));
            }
        }
    }
    if cfg.kind == Kind::KnInvarianceActivation {
        activation_groups(&groups, &means, &mut metrics)?;
    }
    let extra = json!({ "groups": per_group, "cka_mean_kernel": cross });
    let path = ctx.dir.join("ensemble.json");
    std::fs::write(&path, serde_json::to_string_pretty(&extra).expect("ensemble serializes") + "\n")
        .map_err(io_err(&path))?;
    Ok((rows, metrics, extra))
}

/// Smooth versus piecewise-linear activation groups.
fn activation_groups(
    groups: &[(String, NetworkSpec)],
    means: &[Option<SymMatrix>],
    metrics: &mut BTreeMap<String, f64>,
) -> Result<(), CliError> {
    let smooth: Vec<bool> = groups.iter().map(|(_, s)| s.activation.is_smooth()).collect();
    for (flag, name) in [(true, "smooth"), (false, "non_smooth")] {
        let cvs: Vec<f64> = groups
            .iter()
            .zip(&smooth)
            .filter(|(_, &s)| s == flag)
            .filter_map(|((l, _), _)| metrics.get(&format!("{l}.cv_mean")).copied())
            .collect();
        if !cvs.is_empty() {
            metrics.insert(format!("{name}.cv_mean"), cvs.iter().sum::<f64>() / cvs.len() as f64);
        }
    }
    let (mut within, mut across) = (Vec::new(), Vec::new());
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            if let (Some(ma), Some(mb)) = (&means[a], &means[b]) {
                let v = cka(ma, mb)?;
                if smooth[a] == smooth[b] { &mut within } else { &mut across }.push(v);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    if !within.is_empty() {
        metrics.insert("cka.within_group".into(), mean(&within));
    }
    if !across.is_empty() {
        metrics.insert("cka.cross_group".into(), mean(&across));
    }
    Ok(())
}

fn network(ctx: &Ctx, seed: u64) -> hcpinn::Result<NetworkParams> {
    let n = &ctx.cfg.network;
    init_kaiming_uniform(&mlp_sizes(ctx.dim, n.width, n.depth), n.activation, seed)
}

/// `(row index, family, params, seed)` in sweep order.
fn family_jobs(cfg: &ExperimentConfig) -> Vec<(usize, Family, Vec<f64>, u64)> {
    family_points(cfg)
        .into_iter()
        .flat_map(|(f, p)| cfg.sweep.seeds.iter().map(move |&s| (f, p.clone(), s)))
        .enumerate()
        .map(|(i, (f, p, s))| (i, f, p, s))
        .collect()
}

fn family_row(ctx: &Ctx, i: usize, family: Family, params: &[f64], seed: u64) -> hcpinn::Result<(Row, BoundaryPair)> {
    let pair = make_pair(family, params, ctx.dim)?;
    let mut row = base_row(ctx, i);
    row.text("group", pair.label())
        .text("family", family.name())
        .text("params", params_label(params))
        .int("seed", seed as i64);
    for (k, v) in params.iter().enumerate() {
        row.num(&format!("p{k}"), *v);
    }
    Ok((row, pair))
}

/// `t_conv`, `loss_rate` and frozen-mode count for the residual kernel at the initial residual.
fn prediction_columns(row: &mut Row, kr: &SymMatrix, r0: &[f64], eta: f64) -> hcpinn::Result<()> {
    let dec = decompose(kr, r0, eta, r0.len() as f64)?;
    let p = predict(&dec)?;
    row.num("eta", eta)
        .num("t_conv", p.t_conv)
        .num("loss_rate", p.loss_rate)
        .num("lambda_min_active", p.lambda_min)
        .int("frozen_modes", p.frozen_modes as i64)
        .int("in_scope", p.in_scope as i64);
    Ok(())
}

fn spectrum(ctx: &Ctx) -> KindResult {
    let cfg = ctx.cfg;
    let eta = cfg.dynamics.as_ref().map(|d| d.eta).unwrap_or(1e-3);
    let rows: Vec<Result<Row, CliError>> = family_jobs(cfg)
        .par_iter()
        .map(|(i, family, fp, seed)| {
            let (mut row, pair) = family_row(ctx, *i, *family, fp, *seed)?;
            feature_columns(&mut row, &pair, &ctx.points);
            let mut kernels: Vec<(&str, SymMatrix)> = Vec::new();
            let r = (|| {
                let params = network(ctx, *seed)?;
                if cfg.kind == Kind::KtSpectrum {
                    let kt = assemble_kt(&params, &pair, &ctx.points, cfg.kernel_path)?;
                    spectral_columns(&mut row, "kt", &eig_sym(&kt)?);
                    kernels.push(("kt", kt));
                    return Ok(());
                }
                let problem = ctx.problem.as_ref().expect("validated");
                let KernelBundle { kn, kt, kr, .. } = assemble_bundle(&params, problem, &pair, &ctx.points, cfg.kernel_path)?;
                let kr = kr.ok_or(hcpinn::Error::UnsupportedActivation(params.activation))?;
                spectral_columns(&mut row, "kn", &eig_sym(&kn)?);
                spectral_columns(&mut row, "kt", &eig_sym(&kt)?);
                spectral_columns(&mut row, "kr", &eig_sym(&kr)?);
                let r0 = Objective::new(problem, &pair, &ctx.points)?.residuals(&params)?;
                prediction_columns(&mut row, &kr, &r0, eta)?;
                kernels.extend([("kn", kn), ("kt", kt), ("kr", kr)]);
                Ok(())
            })();
            settle(&mut row, r)?;
            for (name, k) in &kernels {
                persist(&ctx.dir, cfg.persist_kernels, *i, name, k)?;
            }
            Ok(row)
        })
        .collect();
    Ok((rows.into_iter().collect::<Result<_, _>>()?, BTreeMap::new(), json!({})))
}

fn dynamics(ctx: &Ctx) -> KindResult {
    let cfg = ctx.cfg;
    let spec = cfg.dynamics.clone().unwrap_or_default();
    let problem = ctx.problem.as_ref().expect("validated");
    if spec.write_trajectories {
        let t = ctx.dir.join("trajectories");
        std::fs::create_dir_all(&t).map_err(io_err(&t))?;
    }
    let rows: Vec<Result<Row, CliError>> = family_jobs(cfg)
        .par_iter()
        .map(|(i, family, fp, seed)| {
            let (mut row, pair) = family_row(ctx, *i, *family, fp, *seed)?;
            let mut traj_out = None;
            let r = (|| {
                let params = network(ctx, *seed)?;
                let kr = assemble_bundle(&params, problem, &pair, &ctx.points, cfg.kernel_path)?
                    .kr
                    .ok_or(hcpinn::Error::UnsupportedActivation(params.activation))?;
                let objective = Objective::new(problem, &pair, &ctx.points)?;
                let r0 = objective.residuals(&params)?;
                let n_r = r0.len() as f64;
                spectral_columns(&mut row, "kr", &eig_sym(&kr)?);
                prediction_columns(&mut row, &kr, &r0, spec.eta)?;
                let dec = decompose(&kr, &r0, spec.eta, n_r)?;
                let pred = predict(&dec)?;
                let fast = n_r / (2.0 * spec.eta * dec.spectrum.lambda_max);
                let t_end = match (spec.t_conv_fraction, spec.fast_multiple) {
                    (Some(f), _) => f * pred.t_conv,
                    (_, Some(m)) => m * fast,
                    _ => 10.0 * fast,
                };
                let mut dt = spec.dt_fraction * fast;
                if t_end / dt > spec.max_steps as f64 {
                    dt = t_end / spec.max_steps as f64;
                }
                let traj = integrate_frozen_with(&kr, &r0, spec.eta, n_r, t_end, dt, spec.integrator)?;
                let mut worst = 0.0f64;
                for (t, r) in traj.times.iter().zip(&traj.residuals) {
                    let a = analytic_residual(&dec, *t);
                    let num: f64 = r.iter().zip(&a).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    let den: f64 = a.iter().map(|y| y * y).sum::<f64>().sqrt();
                    worst = worst.max(num / den.max(1e-300));
                }
                let losses = traj.losses(n_r);
                row.num("t_end", t_end)
                    .num("dt", dt)
                    .int("steps", (traj.times.len() - 1) as i64)
                    .num("loss_initial", losses[0])
                    .num("loss_final", *losses.last().expect("nonempty"))
                    .num("analytic_rel_diff", worst);
                if let Some(steps) = spec.lazy_steps {
                    let lc = lazy_check(&params, problem, &pair, &ctx.points, spec.eta, steps)?;
                    row.int("lazy_steps", steps as i64)
                        .num("lazy_rel_diff", lc.rel_diff)
                        .num("lazy_increment_rel_diff", lc.increment_rel_diff);
                }
                traj_out = Some(traj);
                Ok(())
            })();
            settle(&mut row, r)?;
            if let (true, Some(t)) = (spec.write_trajectories, traj_out) {
                let path = ctx.dir.join("trajectories").join(format!("row{i:05}.csv"));
                let f = std::fs::File::create(&path).map_err(io_err(&path))?;
                t.write_csv(std::io::BufWriter::new(f), ctx.points.len() as f64).map_err(io_err(&path))?;
            }
            Ok(row)
        })
        .collect();
    Ok((rows.into_iter().collect::<Result<_, _>>()?, BTreeMap::new(), json!({})))
}

struct TrainJob {
    index: usize,
    family: Family,
    params: Vec<f64>,
    seed: u64,
    schedule: Option<String>,
    phases: Vec<Phase>,
}

fn training(ctx: &Ctx) -> KindResult {
    let cfg = ctx.cfg;
    let spec = cfg.train.clone().unwrap_or_default();
    let problem = ctx.problem.as_ref().expect("validated");
    let jobs: Vec<TrainJob> = if cfg.kind == Kind::OptimizerCompare {
        let (family, params) = family_points(cfg).into_iter().next().expect("validated");
        cfg.sweep
            .schedules
            .iter()
            .flat_map(|s| cfg.sweep.seeds.iter().map(move |&seed| (s, seed)))
            .enumerate()
            .map(|(index, (s, seed))| TrainJob {
                index,
                family,
                params: params.clone(),
                seed,
                schedule: Some(s.name.clone()),
                phases: s.phases.clone(),
            })
            .collect()
    } else {
        family_jobs(cfg)
            .into_iter()
            .map(|(index, family, params, seed)| TrainJob {
                index,
                family,
                params,
                seed,
                schedule: None,
                phases: spec.phases.clone(),
            })
            .collect()
    };
    if spec.write_runs {
        for sub in ["epochs", "params"] {
            let d = ctx.dir.join(sub);
            std::fs::create_dir_all(&d).map_err(io_err(&d))?;
        }
    }
    let mut snapshot_epochs = spec.snapshot_epochs.clone();
    if !snapshot_epochs.contains(&0) {
        snapshot_epochs.insert(0, 0);
    }
    let results: Vec<Result<(Row, f64), CliError>> = jobs
        .par_iter()
        .map(|job| {
            let (mut row, _) = family_row(ctx, job.index, job.family, &job.params, job.seed)?;
            if let Some(s) = &job.schedule {
                row.text("group", s).text("schedule", s);
            }
            let tc = TrainConfig {
                benchmark: problem.name.clone(),
                family: job.family,
                family_params: job.params.clone(),
                width: cfg.network.width,
                depth: cfg.network.depth,
                activation: cfg.network.activation,
                seed: job.seed,
                phases: job.phases.clone(),
                grid: Some(cfg.grid_spec(ctx.dim)),
                test_grid: spec.test_grid,
                snapshot_epochs: snapshot_epochs.clone(),
                snapshot_path: cfg.kernel_path,
            };
            row.int("epochs_planned", tc.total_steps() as i64);
            let start = Instant::now();
            let mut epoch_log = None;
            let r = (|| {
                tc.validate()?;
                let params = tc.init_params(ctx.dim)?;
                let pair = tc.pair(ctx.dim)?;
                let rec = run_from(&tc, problem, params.clone())?;
                for snap in &rec.snapshots {
                    let suffix = if snap.epoch == 0 { String::new() } else { format!("_e{}", snap.epoch) };
                    spectral_columns(&mut row, &format!("kn{suffix}"), &snap.kn);
                    spectral_columns(&mut row, &format!("kt{suffix}"), &snap.kt);
                    if let Some(kr) = &snap.kr {
                        spectral_columns(&mut row, &format!("kr{suffix}"), kr);
                    }
                }
                if let Some(kr) = rec.snapshots.first().and_then(|s| s.bundle.kr.as_ref()) {
                    let r0 = Objective::new(problem, &pair, &ctx.points)?.residuals(&params)?;
                    let eta = tc.phases.first().map(Phase::lr).unwrap_or(1e-3);
                    prediction_columns(&mut row, kr, &r0, eta)?;
                }
                row.num("loss_initial", rec.losses[0])
                    .num("final_loss", rec.final_loss)
                    .int("epochs", rec.epochs() as i64);
                if let Some(l2) = rec.l2_error {
                    row.num("l2_error", l2);
                }
                for (k, ph) in rec.phases.iter().enumerate() {
                    row.int(&format!("phase{k}_steps"), ph.steps_run as i64)
                        .text(&format!("phase{k}_status"), &ph.status);
                }
                epoch_log = Some(rec);
                Ok(())
            })();
            settle(&mut row, r)?;
            let wall = start.elapsed().as_secs_f64() * 1e3;
            if let (true, Some(rec)) = (spec.write_runs, epoch_log) {
                let path = ctx.dir.join("epochs").join(format!("row{:05}.csv", job.index));
                let mut text = String::from("epoch,loss,wall_ms\n");
                for (e, (l, w)) in rec.losses.iter().zip(&rec.wall_ms).enumerate() {
                    text.push_str(&format!("{e},{},{}\n", fmt_f64(*l), fmt_f64(*w)));
                }
                std::fs::write(&path, text).map_err(io_err(&path))?;
                let pp = ctx.dir.join("params").join(format!("row{:05}.bin", job.index));
                rec.params.save(&pp)?;
            }
            info!("{} row {} {} in {:.1} s", cfg.id, job.index, row.status(), wall / 1e3);
            Ok((row, wall))
        })
        .collect();
    let mut rows = Vec::new();
    let mut timing = Vec::new();
    for r in results {
        let (row, wall) = r?;
        let mut t = Row::default();
        t.set("row", row.get("row").cloned().expect("row index"));
        if let Some(g) = row.get("group") {
            t.set("group", g.clone());
        }
        t.num("wall_ms", wall);
        timing.push(t);
        rows.push(row);
    }
    write_csv(&ctx.dir.join("timing.csv"), &cfg.to_toml(), &timing)?;
    let mut metrics = BTreeMap::new();
    if cfg.kind == Kind::OptimizerCompare {
        for t in &timing {
            if let (Some(g), Some(w)) = (t.get_text("group"), t.get_f64("wall_ms")) {
                *metrics.entry(format!("wall_ms.{g}")).or_insert(0.0) += w;
            }
        }
    }
    Ok((rows, metrics, json!({})))
}

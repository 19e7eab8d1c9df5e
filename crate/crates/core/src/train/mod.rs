//! Physics-informed training of `u = A + B N` on the mean squared residual.

mod optim;

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

pub use optim::{Adam, Lbfgs, LbfgsOutcome, LbfgsStatus, Sgd};

use crate::boundary::{grid, make_pair, BoundaryPair, Family, GridMode};
use crate::error::{Error, Result};
use crate::kernels::{assemble_bundle, residual_seed, trial_point_values, KernelBundle, Path, TrialFunction};
use crate::linalg::{eig_sym, SpectrumReport};
use crate::net::{init_kaiming_uniform, mlp_sizes, Activation, NetworkParams, Order, Tape};
use crate::pde::{benchmark, coefficients, CoefficientField, Problem};

/// Loss above this multiple of the initial loss aborts a run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Mean squared residual over a fixed collocation set.
///
/// The residual is written as `alpha N + beta . grad N + gamma lap N + L[A] - f`,
/// the same coefficient fields that weight the residual kernel.
#[derive(Clone)]
pub struct Objective {
    pub problem: Problem,
    pub pair: BoundaryPair,
    pub points: Vec<Vec<f64>>,
    coef: CoefficientField,
    /// `L[A](x_i) - f(x_i)`
    shift: Vec<f64>,
}

impl Objective {
    pub fn new(problem: &Problem, pair: &BoundaryPair, points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("training needs at least one collocation point".into()));
        }
        let coef = coefficients(&problem.op, pair, points)?;
        let shift = points
            .iter()
            .map(|x| problem.op.apply(x, &pair.eval_offset(x)) - (problem.source)(x))
            .collect();
        Ok(Objective {
            problem: problem.clone(),
            pair: pair.clone(),
            points: points.to_vec(),
            coef,
            shift,
        })
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    fn residuals_from(&self, tape: &Tape) -> Vec<f64> {
        let d = self.pair.dim;
        (0..self.points.len())
            .map(|i| {
                let g = tape.grad(i);
                let bg: f64 = (0..d).map(|k| self.coef.beta[i][k] * g[k]).sum();
                self.coef.alpha[i] * tape.value(i) + bg + self.coef.gamma[i] * tape.lap(i) + self.shift[i]
            })
            .collect()
    }

    pub fn residuals(&self, params: &NetworkParams) -> Result<Vec<f64>> {
        let tape = Tape::forward(params, &self.points, Order::Laplacian)?;
        Ok(self.residuals_from(&tape))
    }

    pub fn loss(&self, params: &NetworkParams) -> Result<f64> {
        let r = self.residuals(params)?;
        Ok(mean_square(&r))
    }

    /// `J = (1/N) sum R_i^2` and `dJ/dtheta = (2/N) sum R_i J_r(x_i)`.
    pub fn loss_and_grad(&self, params: &NetworkParams) -> Result<(f64, Vec<f64>)> {
        if !params.activation.is_smooth() {
            return Err(Error::UnsupportedActivation(params.activation));
        }
        let tape = Tape::forward(params, &self.points, Order::Laplacian)?;
        let r = self.residuals_from(&tape);
        let n = r.len() as f64;
        let w: Vec<f64> = r.iter().map(|v| 2.0 * v / n).collect();
        let seed: Array2<f64> = residual_seed(&self.coef, Some(&w));
        let grad = tape.param_gradient(&tape.adjoints(&seed));
        Ok((mean_square(&r), grad))
    }
}

fn mean_square(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
}

pub fn loss_and_grad(trial: &TrialFunction, problem: &Problem, points: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    Objective::new(problem, &trial.pair, points)?.loss_and_grad(&trial.params)
}

/// `||u_trial - u|| / ||u||` over `test_points`.
pub fn l2_error(trial: &TrialFunction, problem: &Problem, test_points: &[Vec<f64>]) -> Result<f64> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Config(format!("benchmark {} has no exact solution", problem.name)))?;
    let u = trial_point_values(trial, test_points)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, ut) in test_points.iter().zip(&u) {
        let ue = exact(x).value;
        num += (ut - ue).powi(2);
        den += ue * ue;
    }
    if den == 0.0 {
        return Err(Error::DegenerateReference);
    }
    Ok((num / den).sqrt())
}

/// Collocation points per axis used when a config omits them.
pub fn default_train_points(dim: usize) -> usize {
    match dim {
        1 => 100,
        2 => 32,
        _ => 20,
    }
}

/// Test points per axis used when a config omits them.
pub fn default_test_points(dim: usize) -> usize {
    match dim {
        1 => 1000,
        2 => 32,
        _ => 50,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub kind: OptimizerKind,
    pub steps: usize,
    /// Step size for sgd and adam; initial step scale for lbfgs.
    #[serde(default)]
    pub lr: Option<f64>,
}

impl Phase {
    pub fn lr(&self) -> f64 {
        self.lr.unwrap_or(match self.kind {
            OptimizerKind::Sgd => 1e-5,
            OptimizerKind::Adam => 1e-3,
            OptimizerKind::Lbfgs => 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points_per_axis: usize,
    #[serde(default)]
    pub mode: GridMode,
}

fn default_activation() -> Activation {
    Activation::Tanh
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub benchmark: String,
    pub family: Family,
    pub family_params: Vec<f64>,
    pub width: usize,
    pub depth: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub seed: u64,
    #[serde(default)]
    pub phases: Vec<Phase>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub test_grid: Option<GridSpec>,
    #[serde(default)]
    pub snapshot_epochs: Vec<usize>,
    #[serde(default)]
    pub snapshot_path: Path,
}

impl TrainConfig {
    /// Adam for 10000 steps at 1e-3 followed by 500 L-BFGS iterations.
    pub fn hybrid(benchmark: &str, family: Family, family_params: &[f64], width: usize, depth: usize, seed: u64) -> Self {
        TrainConfig {
            benchmark: benchmark.to_string(),
            family,
            family_params: family_params.to_vec(),
            width,
            depth,
            activation: Activation::Tanh,
            seed,
            phases: vec![
                Phase { kind: OptimizerKind::Adam, steps: 10000, lr: Some(1e-3) },
                Phase { kind: OptimizerKind::Lbfgs, steps: 500, lr: None },
            ],
            grid: None,
            test_grid: None,
            snapshot_epochs: Vec::new(),
            snapshot_path: Path::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.phases.iter().enumerate() {
            if p.steps == 0 {
                return Err(Error::Config(format!("phase {i} has zero steps")));
            }
            if !(p.lr() > 0.0) || !p.lr().is_finite() {
                return Err(Error::Config(format!("phase {i} has non-positive learning rate {}", p.lr())));
            }
        }
        if self.family == Family::PowerAsym {
            return Err(Error::Config("power_asym does not vanish on the whole boundary".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.phases.iter().map(|p| p.steps).sum()
    }

    pub fn problem(&self) -> Result<Problem> {
        benchmark(&self.benchmark)
    }

    pub fn pair(&self, dim: usize) -> Result<BoundaryPair> {
        make_pair(self.family, &self.family_params, dim)
    }

    pub fn train_points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let g = self.grid.unwrap_or(GridSpec { points_per_axis: default_train_points(dim), mode: GridMode::Open });
        grid(dim, g.points_per_axis, g.mode)
    }

    pub fn test_points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let g = self
            .test_grid
            .unwrap_or(GridSpec { points_per_axis: default_test_points(dim), mode: GridMode::Inclusive });
        grid(dim, g.points_per_axis, g.mode)
    }

    pub fn init_params(&self, dim: usize) -> Result<NetworkParams> {
        init_kaiming_uniform(&mlp_sizes(dim, self.width, self.depth), self.activation, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub epoch: usize,
    pub bundle: KernelBundle,
    pub kn: SpectrumReport,
    pub kt: SpectrumReport,
    pub kr: Option<SpectrumReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseOutcome {
    pub kind: OptimizerKind,
    pub steps_run: usize,
    /// `completed`, or the L-BFGS status when it stopped early.
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct TrainRecord {
    /// `losses[e]` is the loss at the parameters after `e` steps.
    pub losses: Vec<f64>,
    /// Cumulative wall time in milliseconds, aligned with `losses`.
    pub wall_ms: Vec<f64>,
    pub final_loss: f64,
    pub l2_error: Option<f64>,
    pub snapshots: Vec<Snapshot>,
    pub phases: Vec<PhaseOutcome>,
    pub params: NetworkParams,
}

impl TrainRecord {
    pub fn epochs(&self) -> usize {
        self.losses.len() - 1
    }
}

pub fn snapshot(
    params: &NetworkParams,
    problem: &Problem,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    path: Path,
    epoch: usize,
) -> Result<Snapshot> {
    let bundle = assemble_bundle(params, problem, pair, points, path)?;
    let kn = eig_sym(&bundle.kn)?;
    let kt = eig_sym(&bundle.kt)?;
    let kr = bundle.kr.as_ref().map(eig_sym).transpose()?;
    Ok(Snapshot { epoch, bundle, kn, kt, kr })
}

struct Recorder<'a> {
    objective: &'a Objective,
    snapshot_epochs: &'a [usize],
    snapshot_path: Path,
    start: Instant,
    losses: Vec<f64>,
    wall_ms: Vec<f64>,
    snapshots: Vec<Snapshot>,
}

impl Recorder<'_> {
    fn record(&mut self, params: &NetworkParams, loss: f64) -> Result<()> {
        let epoch = self.losses.len();
        if !loss.is_finite() || (epoch > 0 && loss > DIVERGENCE_FACTOR * self.losses[0]) {
            return Err(Error::DivergenceDetected { epoch });
        }
        self.losses.push(loss);
        self.wall_ms.push(self.start.elapsed().as_secs_f64() * 1e3);
        if self.snapshot_epochs.contains(&epoch) {
            let o = self.objective;
            self.snapshots
                .push(snapshot(params, &o.problem, &o.pair, &o.points, self.snapshot_path, epoch)?);
        }
        Ok(())
    }
}

pub fn run(config: &TrainConfig) -> Result<TrainRecord> {
    config.validate()?;
    let problem = config.problem()?;
    let dim = problem.dim;
    let params = config.init_params(dim)?;
    run_from(config, &problem, params)
}

/// Runs the configured schedule from the given starting parameters.
pub fn run_from(config: &TrainConfig, problem: &Problem, mut params: NetworkParams) -> Result<TrainRecord> {
    config.validate()?;
    let dim = problem.dim;
    let pair = config.pair(dim)?;
    let objective = Objective::new(problem, &pair, &config.train_points(dim)?)?;
    let mut rec = Recorder {
        objective: &objective,
        snapshot_epochs: &config.snapshot_epochs,
        snapshot_path: config.snapshot_path,
        start: Instant::now(),
        losses: Vec::new(),
        wall_ms: Vec::new(),
        snapshots: Vec::new(),
    };
    let mut phases = Vec::new();
    let (mut loss, mut grad) = objective.loss_and_grad(&params)?;
    rec.record(&params, loss)?;
    let mut theta = params.flatten();
    let template = params.clone();
    let eval = |theta: &[f64]| -> Result<(f64, Vec<f64>)> { objective.loss_and_grad(&template.from_flat(theta)?) };

    for phase in &config.phases {
        match phase.kind {
            OptimizerKind::Sgd | OptimizerKind::Adam => {
                let sgd = Sgd { lr: phase.lr() };
                let mut adam = Adam::new(phase.lr(), theta.len());
                for _ in 0..phase.steps {
                    if phase.kind == OptimizerKind::Sgd {
                        sgd.step(&mut theta, &grad);
                    } else {
                        adam.step(&mut theta, &grad);
                    }
                    (loss, grad) = eval(&theta)?;
                    params.set_flat(&theta)?;
                    rec.record(&params, loss)?;
                }
                phases.push(PhaseOutcome {
                    kind: phase.kind,
                    steps_run: phase.steps,
                    status: "completed".into(),
                });
            }
            OptimizerKind::Lbfgs => {
                let lbfgs = Lbfgs { initial_step: phase.lr(), ..Lbfgs::default() };
                let mut shadow = params.clone();
                let out = lbfgs.minimize(eval, &theta, phase.steps, |_, x, f| {
                    shadow.set_flat(x)?;
                    rec.record(&shadow, f)
                })?;
                theta = out.x;
                loss = out.f;
                grad = out.grad;
                let status = match out.status {
                    LbfgsStatus::MaxIterations => "completed".to_string(),
                    s => s.name().to_string(),
                };
                phases.push(PhaseOutcome {
                    kind: phase.kind,
                    steps_run: out.iterations,
                    status,
                });
            }
        }
    }
    params.set_flat(&theta)?;
    let trial = TrialFunction { pair, params };
    let l2 = match problem.exact {
        Some(_) => Some(l2_error(&trial, problem, &config.test_points(dim)?)?),
        None => None,
    };
    Ok(TrainRecord {
        final_loss: loss,
        losses: rec.losses,
        wall_ms: rec.wall_ms,
        l2_error: l2,
        snapshots: rec.snapshots,
        phases,
        params: trial.params,
    })
}

/// Plain gradient descent against the frozen initial residual kernel.
#[derive(Debug, Clone, Serialize)]
pub struct LazyCheck {
    pub steps: usize,
    pub eta: f64,
    /// `max_k ||R_emp(k) - R_pred(k)|| / ||R_pred(k)||`
    pub rel_diff: f64,
    /// Same comparison on the change from `R(0)`.
    pub increment_rel_diff: f64,
    pub empirical_loss: Vec<f64>,
    pub predicted_loss: Vec<f64>,
}

/// Runs `steps` SGD steps and compares each residual with `dynamics::analytic_residual` at `t = k`.
pub fn lazy_check(
    params: &NetworkParams,
    problem: &Problem,
    pair: &BoundaryPair,
    points: &[Vec<f64>],
    eta: f64,
    steps: usize,
) -> Result<LazyCheck> {
    let objective = Objective::new(problem, pair, points)?;
    let n_r = points.len() as f64;
    let r0 = objective.residuals(params)?;
    let kr = assemble_bundle(params, problem, pair, points, Path::Direct)?
        .kr
        .ok_or(Error::UnsupportedActivation(params.activation))?;
    let dec = crate::dynamics::decompose(&kr, &r0, eta, n_r)?;
    let sgd = Sgd { lr: eta };
    let mut p = params.clone();
    let mut theta = p.flatten();
    let (mut rel_diff, mut inc_diff) = (0.0f64, 0.0f64);
    let mut empirical_loss = vec![mean_square(&r0)];
    let mut predicted_loss = vec![crate::dynamics::modal_loss(&dec, 0.0)];
    for k in 1..=steps {
        let (_, g) = objective.loss_and_grad(&p)?;
        sgd.step(&mut theta, &g);
        p.set_flat(&theta)?;
        let r = objective.residuals(&p)?;
        let pred = crate::dynamics::analytic_residual(&dec, k as f64);
        let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
        let diff = norm(&mut r.iter().zip(&pred).map(|(a, b)| a - b));
        rel_diff = rel_diff.max(diff / norm(&mut pred.iter().copied()).max(1e-300));
        let dp = norm(&mut pred.iter().zip(&r0).map(|(a, b)| a - b));
        if dp > 0.0 {
            inc_diff = inc_diff.max(diff / dp);
        }
        empirical_loss.push(mean_square(&r));
        predicted_loss.push(crate::dynamics::modal_loss(&dec, k as f64));
    }
    Ok(LazyCheck {
        steps,
        eta,
        rel_diff,
        increment_rel_diff: inc_diff,
        empirical_loss,
        predicted_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::assemble_kr;
    use crate::pde::{jet_eval, Real};
    use std::sync::Arc;

    fn poisson_config(phases: Vec<Phase>) -> TrainConfig {
        TrainConfig {
            phases,
            grid: Some(GridSpec { points_per_axis: 20, mode: GridMode::Open }),
            test_grid: Some(GridSpec { points_per_axis: 50, mode: GridMode::Inclusive }),
            ..TrainConfig::hybrid("poisson1d_sin", Family::Power, &[1.0], 8, 2, 3)
        }
    }

    #[test]
    fn zero_network_loss_is_mean_square_source() {
        let problem = benchmark("poisson1d_sin").unwrap();
        let pair = make_pair(Family::Power, &[1.0], 1).unwrap();
        let pts = grid(1, 9, GridMode::Open).unwrap();
        let params = NetworkParams::zeros(&[1, 5, 1], Activation::Tanh).unwrap();
        let (loss, _) = loss_and_grad(&TrialFunction { pair, params }, &problem, &pts).unwrap();
        let expect = pts.iter().map(|x| (problem.source)(x).powi(2)).sum::<f64>() / 9.0;
        assert!((loss - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn self_consistent_source_gives_zero_loss() {
        let mut problem = benchmark("diffusion2d").unwrap();
        let pair = make_pair(Family::Tanh2D, &[3.0], 2).unwrap();
        let params = init_kaiming_uniform(&[2, 6, 1], Activation::Tanh, 9).unwrap();
        let trial = TrialFunction { pair: pair.clone(), params: params.clone() };
        let op = problem.op.clone();
        let t2 = trial.clone();
        problem.source = Arc::new(move |x: &[f64]| {
            let u = crate::kernels::trial_values(&t2, &[x.to_vec()]).unwrap();
            op.apply(x, &u[0])
        });
        let pts = grid(2, 4, GridMode::Open).unwrap();
        let (loss, grad) = loss_and_grad(&trial, &problem, &pts).unwrap();
        assert!(loss <= 1e-15, "{loss}");
        assert!(grad.iter().map(|g| g * g).sum::<f64>().sqrt() <= 1e-7);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let problem = benchmark("diffusion1d_sincos").unwrap();
        let pair = make_pair(Family::Trig, &[2.0], 1).unwrap();
        let params = init_kaiming_uniform(&[1, 7, 5, 1], Activation::Sigmoid, 4).unwrap();
        let obj = Objective::new(&problem, &pair, &grid(1, 11, GridMode::Open).unwrap()).unwrap();
        let (_, g) = obj.loss_and_grad(&params).unwrap();
        let theta = params.flatten();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in (0..theta.len()).step_by(3) {
            let h = 1e-6;
            let mut tp = theta.clone();
            tp[k] += h;
            let mut tm = theta.clone();
            tm[k] -= h;
            let fd = (obj.loss(&params.from_flat(&tp).unwrap()).unwrap() - obj.loss(&params.from_flat(&tm).unwrap()).unwrap())
                / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * gmax.max(1.0), "k={k} {fd} {}", g[k]);
        }
    }

    #[test]
    fn residual_matches_trial_form() {
        let problem = benchmark("diffusion2d").unwrap();
        let pair = make_pair(Family::MixedPower2D, &[1.0, 1.5], 2).unwrap();
        let params = init_kaiming_uniform(&[2, 6, 1], Activation::Tanh, 1).unwrap();
        let pts = grid(2, 3, GridMode::Open).unwrap();
        let obj = Objective::new(&problem, &pair, &pts).unwrap();
        let r = obj.residuals(&params).unwrap();
        let u = crate::kernels::trial_values(&TrialFunction { pair, params }, &pts).unwrap();
        let r2 = crate::pde::residual(&problem, &pts, &u).unwrap();
        for (a, b) in r.iter().zip(&r2) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn l2_error_cases() {
        let problem = benchmark("poisson1d_sin").unwrap();
        let pts = grid(1, 30, GridMode::Inclusive).unwrap();
        let pair = make_pair(Family::Power, &[1.0], 1).unwrap();
        let zero = TrialFunction { pair: pair.clone(), params: NetworkParams::zeros(&[1, 3, 1], Activation::Tanh).unwrap() };
        assert!((l2_error(&zero, &problem, &pts).unwrap() - 1.0).abs() < 1e-15);
        let mut flat = problem.clone();
        flat.exact = Some(Arc::new(|x: &[f64]| jet_eval(|_| crate::pde::Dual2::cst(0.0), x)));
        assert!(matches!(l2_error(&zero, &flat, &pts), Err(Error::DegenerateReference)));
    }

    #[test]
    fn empty_schedule_records_initial_state() {
        let mut cfg = poisson_config(vec![]);
        cfg.snapshot_epochs = vec![0];
        let rec = run(&cfg).unwrap();
        assert_eq!(rec.losses.len(), 1);
        assert_eq!(rec.snapshots.len(), 1);
        let problem = cfg.problem().unwrap();
        let params = cfg.init_params(1).unwrap();
        let kr = assemble_kr(&params, &problem, &cfg.pair(1).unwrap(), &cfg.train_points(1).unwrap(), Path::Direct).unwrap();
        assert_eq!(rec.snapshots[0].bundle.kr.as_ref().unwrap(), &kr);
    }

    #[test]
    fn hybrid_run_improves_and_is_deterministic() {
        let cfg = poisson_config(vec![
            Phase { kind: OptimizerKind::Adam, steps: 300, lr: Some(1e-2) },
            Phase { kind: OptimizerKind::Lbfgs, steps: 100, lr: None },
        ]);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.losses, b.losses);
        assert!(a.final_loss < 1e-3 * a.losses[0], "{} {}", a.final_loss, a.losses[0]);
        assert_eq!(*a.losses.last().unwrap(), a.final_loss);
        let obj = Objective::new(&cfg.problem().unwrap(), &cfg.pair(1).unwrap(), &cfg.train_points(1).unwrap()).unwrap();
        assert!((obj.loss(&a.params).unwrap() - a.final_loss).abs() <= 1e-12 * a.final_loss.max(1e-300));
        assert!(a.l2_error.unwrap() < 1e-2);
    }

    #[test]
    fn divergence_is_detected() {
        let cfg = poisson_config(vec![Phase { kind: OptimizerKind::Sgd, steps: 50, lr: Some(10.0) }]);
        assert!(matches!(run(&cfg), Err(Error::DivergenceDetected { .. })));
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let cfg = poisson_config(vec![Phase { kind: OptimizerKind::Adam, steps: 0, lr: None }]);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let cfg = poisson_config(vec![Phase { kind: OptimizerKind::Sgd, steps: 5, lr: Some(-1.0) }]);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs every criterion at desk scale and always exits 0; the verdicts are the
//! output. `HCPINN_ACCEPTANCE=1,4,12` restricts the run to a subset. Results
//! are also written to `acceptance.json` under the cargo test scratch dir.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hcpinn::boundary::{grid, make_pair, Family, GridMode};
use hcpinn::dynamics::{analytic_residual, decompose, integrate_frozen, predict};
use hcpinn::kernels::{assemble_kr, assemble_kt, Path as KernelPath};
use hcpinn::linalg::{eig_sym, SymMatrix};
use hcpinn::net::{eval_with_derivatives, init_kaiming_uniform, mlp_sizes, Activation, NetworkParams, Order};
use hcpinn::pde::{benchmark, self_check, BENCHMARKS};
use hcpinn_cli::table::Row;
use hcpinn_cli::{run_experiment, ExperimentConfig, Outcome};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Serialize)]
struct Verdict {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

struct Rng(ChaCha8Rng);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn out_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance")
}

fn config(name: &str) -> ExperimentConfig {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk").join(name);
    ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn run(name: &str) -> Result<Outcome, String> {
    run_experiment(&config(name), &out_dir()).map_err(|e| format!("{name}: {e}"))
}

/// Config checks as `(all passed, "name ok|FAIL (detail); ...")`.
fn config_checks(o: &Outcome) -> (bool, Vec<String>) {
    let mut all = true;
    let mut parts = Vec::new();
    for c in &o.summary.checks {
        all &= c.passed;
        parts.push(format!("{} {} [{}]", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail));
    }
    (all, parts)
}

fn metric(o: &Outcome, key: &str) -> f64 {
    o.metric(key).unwrap_or(f64::NAN)
}

// Criterion 1

/// Per-neuron value, input gradient and Laplacian by the scalar chain rule.
fn naive_jet(params: &NetworkParams, x: &[f64]) -> (f64, Vec<f64>, f64) {
    let d = x.len();
    let mut h = x.to_vec();
    let mut g: Vec<Vec<f64>> = (0..d).map(|k| (0..d).map(|j| if j == k { 1.0 } else { 0.0 }).collect()).collect();
    let mut l = vec![0.0; d];
    let last = params.n_layers() - 1;
    for (layer, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let (mut nh, mut ng, mut nl) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..w.nrows() {
            let mut z = b[i];
            let mut gz = vec![0.0; d];
            let mut lz = 0.0;
            for j in 0..h.len() {
                z += w[[i, j]] * h[j];
                for k in 0..d {
                    gz[k] += w[[i, j]] * g[j][k];
                }
                lz += w[[i, j]] * l[j];
            }
            if layer == last {
                nh.push(z);
                ng.push(gz);
                nl.push(lz);
            } else {
                let s = params.activation.eval(z);
                let g2: f64 = gz.iter().map(|v| v * v).sum();
                nh.push(s[0]);
                ng.push(gz.iter().map(|v| s[1] * v).collect());
                nl.push(s[2] * g2 + s[1] * lz);
            }
        }
        h = nh;
        g = ng;
        l = nl;
    }
    (h[0], g.swap_remove(0), l[0])
}

fn fd_theta(params: &NetworkParams, f: impl Fn(&NetworkParams) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let theta = params.flatten();
    (0..theta.len())
        .map(|p| {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[p] += h;
            minus[p] -= h;
            (f(&params.from_flat(&plus).unwrap()) - f(&params.from_flat(&minus).unwrap())) / (2.0 * h)
        })
        .collect()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

fn c1() -> Result<(bool, String), String> {
    let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Elu, Activation::Selu];
    let mut rng = Rng::new(1);
    let (mut worst_v, mut worst_g, mut worst_l) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let d = rng.int(1, 3);
        let width = rng.int(2, 16);
        let depth = rng.int(1, 4);
        let act = acts[rng.int(0, 3)];
        let seed = rng.0.next_u64();
        let x: Vec<f64> = (0..d).map(|_| rng.range(0.05, 0.95)).collect();
        let params = init_kaiming_uniform(&mlp_sizes(d, width, depth), act, seed).map_err(|e| e.to_string())?;
        let e = eval_with_derivatives(&params, &x, Order::Laplacian).map_err(|e| e.to_string())?;
        worst_v = worst_v.max(max_rel(&e.jac_value, &fd_theta(&params, |p| naive_jet(p, &x).0)));
        for k in 0..d {
            worst_g = worst_g.max(max_rel(&e.jac_grad[k], &fd_theta(&params, |p| naive_jet(p, &x).1[k])));
        }
        let jl = e.jac_lap.as_ref().ok_or("missing Laplacian Jacobian")?;
        worst_l = worst_l.max(max_rel(jl, &fd_theta(&params, |p| naive_jet(p, &x).2)));
    }
    let worst = worst_v.max(worst_g).max(worst_l);
    Ok((
        worst <= 1e-5,
        format!("20 triples, max rel err value {} grad {} lap {} (tol 1e-5)", sci(worst_v), sci(worst_g), sci(worst_l)),
    ))
}

// Criterion 2

fn c2() -> Result<(bool, String), String> {
    let cases: [(&str, [(Family, Vec<f64>); 3]); 2] = [
        (
            "poisson1d_sin",
            [(Family::Power, vec![1.0]), (Family::Tanh, vec![5.0]), (Family::Rational, vec![2.0])],
        ),
        (
            "diffusion2d",
            [
                (Family::Power2D, vec![1.0]),
                (Family::MixedPower2D, vec![1.0, 2.0]),
                (Family::Tanh2D, vec![5.0]),
            ],
        ),
    ];
    let (mut kt_worst, mut kr_worst, mut n) = (0.0f64, 0.0f64, 0);
    for (name, fams) in &cases {
        let problem = benchmark(name).map_err(|e| e.to_string())?;
        let ppa = if problem.dim == 1 { 100 } else { 10 };
        let points = grid(problem.dim, ppa, GridMode::Open).map_err(|e| e.to_string())?;
        for (family, fp) in fams {
            let pair = make_pair(*family, fp, problem.dim).map_err(|e| e.to_string())?;
            for seed in 0..3 {
                let params = init_kaiming_uniform(&mlp_sizes(problem.dim, 64, 2), Activation::Tanh, seed)
                    .map_err(|e| e.to_string())?;
                let f = |path| assemble_kt(&params, &pair, &points, path).map_err(|e| e.to_string());
                kt_worst = kt_worst.max(f(KernelPath::Direct)?.rel_frobenius_diff(&f(KernelPath::Composed)?));
                let g = |path| assemble_kr(&params, &problem, &pair, &points, path).map_err(|e| e.to_string());
                kr_worst = kr_worst.max(g(KernelPath::Direct)?.rel_frobenius_diff(&g(KernelPath::Composed)?));
                n += 1;
            }
        }
    }
    Ok((
        kt_worst <= 1e-10 && kr_worst <= 1e-8,
        format!("{n} cases, max rel Frobenius diff K_t {} (tol 1e-10), K_r {} (tol 1e-8)", sci(kt_worst), sci(kr_worst)),
    ))
}

// Criterion 3

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn c3() -> Result<(bool, String), String> {
    let mut rng = Rng::new(3);
    let mut worst = 0.0f64;
    let mut sizes = Vec::new();
    for _ in 0..10 {
        let n = rng.int(2, 50);
        let r = rng.int(1, n);
        let g: Vec<f64> = (0..n * r).map(|_| rng.range(-1.0, 1.0)).collect();
        let shift = rng.range(0.01, 0.5);
        let k = SymMatrix::from_fn(n, |i, j| {
            (0..r).map(|c| g[i * r + c] * g[j * r + c]).sum::<f64>() + if i == j { shift } else { 0.0 }
        });
        let r0: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
        let eta = rng.range(1e-3, 1e-1);
        let n_r = n as f64;
        let dec = decompose(&k, &r0, eta, n_r).map_err(|e| e.to_string())?;
        let t_end = 0.1 * predict(&dec).map_err(|e| e.to_string())?.t_conv;
        let dt = (0.05 * n_r / (2.0 * eta * dec.spectrum.lambda_max)).min(t_end / 50.0);
        let traj = integrate_frozen(&k, &r0, eta, n_r, t_end, dt).map_err(|e| e.to_string())?;
        for (t, rt) in traj.times.iter().zip(&traj.residuals) {
            let a = analytic_residual(&dec, *t);
            let diff: Vec<f64> = rt.iter().zip(&a).map(|(x, y)| x - y).collect();
            worst = worst.max(norm(&diff) / norm(&a).max(1e-300));
        }
        sizes.push(n);
    }
    Ok((worst <= 1e-4, format!("10 systems, n = {sizes:?}, max rel norm diff {} over [0, 0.1 t_conv] (tol 1e-4)", sci(worst))))
}

// Criterion 4

fn c4() -> Result<(bool, String), String> {
    let o = run("dynamics_lazy.toml")?;
    let diffs: Vec<f64> = o.rows.iter().filter_map(|r| r.get_f64("lazy_rel_diff")).collect();
    let inc: Vec<f64> = o.rows.iter().filter_map(|r| r.get_f64("lazy_increment_rel_diff")).collect();
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    let worst_inc = inc.iter().copied().fold(0.0, f64::max);
    Ok((
        diffs.len() == o.rows.len() && !diffs.is_empty() && worst <= 0.02,
        format!(
            "1x16 tanh, eta 1e-6, 200 steps, {} seeds: max rel diff {} (tol 2e-2); increment rel diff {}",
            diffs.len(),
            sci(worst),
            sci(worst_inc)
        ),
    ))
}

// Criterion 5

fn c5() -> Result<(bool, String), String> {
    let mut rng = Rng::new(5);
    let (mut rec, mut orth) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.int(1, 100);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.range(-1.0, 1.0)).collect();
        let m = SymMatrix::from_fn(n, |i, j| if i <= j { vals[i * n + j] } else { vals[j * n + i] });
        let s = eig_sym(&m).map_err(|e| e.to_string())?;
        let v = &s.eigenvectors;
        let mut err2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| v[k][i] * s.eigenvalues[k] * v[k][j]).sum();
                err2 += (r - m.get(i, j)).powi(2);
                let dot: f64 = (0..n).map(|c| v[i][c] * v[j][c]).sum();
                orth = orth.max((dot - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        rec = rec.max(err2.sqrt() / m.frobenius().max(1e-300));
    }
    Ok((
        rec <= 1e-7 && orth <= 1e-8,
        format!("1000 matrices n <= 100: reconstruction/||m||_F {} (tol 1e-7), orthonormality {} (tol 1e-8)", sci(rec), sci(orth)),
    ))
}

// Criterion 6

fn c6() -> Result<(bool, String), String> {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in BENCHMARKS {
        let r = self_check(&benchmark(name).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ok &= r <= 1e-8;
        parts.push(format!("{name} {}", sci(r)));
    }
    Ok((ok, format!("max |L[u] - f|: {} (tol 1e-8)", parts.join(", "))))
}

// Criteria 7-17

fn c7() -> Result<(bool, String), String> {
    let o = run("kn_seed.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok, format!("{} rows; {}; {:.0} s", o.rows.len(), parts.join("; "), o.wall_s)))
}

fn c8() -> Result<(bool, String), String> {
    let o = run("kn_width.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok, parts.join("; ")))
}

fn c9() -> Result<(bool, String), String> {
    let o = run("kn_depth.toml")?;
    let (ok, parts) = config_checks(&o);
    let ratio = metric(&o, "mean.d1.kn_trace") / metric(&o, "mean.d8.kn_trace");
    Ok((ok && ratio >= 20.0, format!("{}; trace d1/d8 = {ratio:.1} (min 20)", parts.join("; "))))
}

fn c10() -> Result<(bool, String), String> {
    let o = run("kn_activation.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok, parts.join("; ")))
}

fn c11() -> Result<(bool, String), String> {
    let o = run("kt_power.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok, parts.join("; ")))
}

fn c12() -> Result<(bool, String), String> {
    let o = run("kr_alpha.toml")?;
    let (ok, parts) = config_checks(&o);
    let ratio = metric(&o, "mean.power(0.5).kr_trace") / metric(&o, "mean.power(5).kr_trace");
    let lmin = metric(&o, "mean.power(0.5).kr_lambda_min");
    let note = if lmin <= 0.0 {
        format!("; kappa(0.5) is floor-limited (raw lambda_min = {})", sci(lmin))
    } else {
        String::new()
    };
    Ok((ok && ratio >= 1e6, format!("{}; trace(0.5)/trace(5) = {} (min 1e6){note}", parts.join("; "), sci(ratio))))
}

fn c13() -> Result<(bool, String), String> {
    let o = run("kr_reference.toml")?;
    let (ok, parts) = config_checks(&o);
    let negative = o.rows.iter().filter(|r| r.get_f64("kr_lambda_min").is_some_and(|v| v <= 0.0)).count();
    Ok((ok, format!("{}; {negative}/{} seeds have raw lambda_min <= 0", parts.join("; "), o.rows.len())))
}

fn c14() -> Result<(bool, String), String> {
    let o = run("optimizer_compare.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok && o.wall_s <= 600.0, format!("{}; runtime {:.0} s (max 600)", parts.join("; "), o.wall_s)))
}

fn failed_or_above(rows: &[Row], families: &[&str], bound: f64) -> (usize, usize) {
    let mut above = 0;
    let mut failed = 0;
    for r in rows {
        if !r.get_text("family").is_some_and(|f| families.contains(&f.as_str())) {
            continue;
        }
        if !r.is_ok() {
            failed += 1;
        } else if r.get_f64("l2_error").is_some_and(|v| v > bound) {
            above += 1;
        }
    }
    (above, failed)
}

fn status_counts(rows: &[Row]) -> String {
    let mut m: BTreeMap<String, usize> = BTreeMap::new();
    for r in rows {
        *m.entry(r.status()).or_default() += 1;
    }
    m.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
}

fn c15() -> Result<(bool, String), String> {
    let o = run("family_1d.toml")?;
    let (ok, parts) = config_checks(&o);
    let (above, failed) = failed_or_above(&o.rows, &["power", "trig"], 1e-2);
    Ok((
        ok && above + failed >= 1,
        format!(
            "{}; power/trig rows with L2 > 1e-2: {above}, failed: {failed}; statuses: {}; spearman(eff_rank, L2) {:.3}; {:.0} s",
            parts.join("; "),
            status_counts(&o.rows),
            metric(&o, "spearman.all.kr_eff_rank.l2_error"),
            o.wall_s
        ),
    ))
}

fn c16() -> Result<(bool, String), String> {
    let o = run("family_2d.toml")?;
    let (ok, parts) = config_checks(&o);
    Ok((ok, format!("{}; statuses: {}; {:.0} s", parts.join("; "), status_counts(&o.rows), o.wall_s)))
}

fn c17() -> Result<(bool, String), String> {
    let o = run("family_3d.toml")?;
    let (ok, parts) = config_checks(&o);
    let asym = metric(&o, "family_mean.mixed_power_asym_3d.l2_error");
    let sym = metric(&o, "family_mean.mixed_power_sym_3d.l2_error");
    let ratio = asym / sym;
    Ok((
        ok && ratio >= 10.0 && o.wall_s <= 3600.0,
        format!(
            "{}; asym/sym mean L2 = {} / {} = {:.2} (min 10); statuses: {}; runtime {:.0} s (max 3600)",
            parts.join("; "),
            sci(asym),
            sci(sym),
            ratio,
            status_counts(&o.rows),
            o.wall_s
        ),
    ))
}

type Criterion = (usize, &'static str, fn() -> Result<(bool, String), String>);

const CRITERIA: [Criterion; 17] = [
    (1, "jacobian-oracle", c1),
    (2, "kernel-path-equivalence", c2),
    (3, "modal-solution-oracle", c3),
    (4, "lazy-regime-consistency", c4),
    (5, "eigensolver", c5),
    (6, "exact-solution-gate", c6),
    (7, "kn-seed-invariance", c7),
    (8, "kn-width-study", c8),
    (9, "kn-depth-study", c9),
    (10, "kn-activation-study", c10),
    (11, "kt-power-sweep", c11),
    (12, "kr-alpha-sweep", c12),
    (13, "kr-reference-point", c13),
    (14, "optimizer-comparison", c14),
    (15, "family-study-1d", c15),
    (16, "family-study-2d", c16),
    (17, "family-study-3d", c17),
];

fn main() {
    let only: Option<Vec<usize>> = std::env::var("HCPINN_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    std::fs::create_dir_all(out_dir()).expect("scratch dir");
    let mut verdicts = Vec::new();
    for (id, name, f) in CRITERIA {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(v)) => v,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        let seconds = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {name}: {detail} ({seconds:.1} s)", if passed { "PASS" } else { "FAIL" });
        verdicts.push(Verdict { id, name, passed, detail, seconds });
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    println!("acceptance: {passed}/{} criteria passed", verdicts.len());
    let path = out_dir().join("acceptance.json");
    let text = serde_json::to_string_pretty(&verdicts).expect("verdicts serialize");
    if let Err(e) = std::fs::write(&path, text + "\n") {
        eprintln!("could not write {}: {e}", path.display());
    }
}

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use serde_json::json;

use svrc_core::cubic::{self, CubicModel, SolveReport};
use svrc_core::metrics::{best_f_star, Trace};
use svrc_core::objectives::{estimate_rho_with, fd_check, CorruptedGradient, RhoSampling};
use svrc_core::optimizers::{corollary_defaults, theta_recursion, RunOutput};
use svrc_core::{FiniteSumObjective, SymMatrix, Vector};

use crate::config::{self, ObjectiveOnly, RunConfig, SuiteConfig};
use crate::error::{CliError, CliResult};
use crate::plot::{step_chart, Series};

const GAP_FLOOR: f64 = 1e-16;

fn write_trace(trace: &Trace, path: &Path, timing: bool) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut out = BufWriter::new(file);
    trace
        .write_csv(&mut out, timing)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

fn summary(label: &str, out: &RunOutput) -> String {
    match out.trace.last() {
        Some(r) => format!(
            "{label}: {} rows, {} SO calls ({:.3} epochs), {} CSO calls, final f = {:e}, grad norm = {:e}",
            out.trace.len(),
            out.counters.so_calls,
            out.trace.epoch(r),
            out.counters.cso_calls,
            r.f_value,
            r.grad_norm
        ),
        None => format!("{label}: budget allowed no iterations"),
    }
}

pub fn run(path: &Path) -> CliResult<()> {
    let loaded = config::load::<RunConfig>(path)?;
    let c = &loaded.config;
    let stop = c.budget.stopping_rule()?;
    let obj = c.objective.build(&loaded.base, c.seed)?;
    let x0 = c.start.point(obj.dim(), c.seed)?;
    let out = c.optimizer.execute(obj.as_ref(), &x0, c.seed, stop)?;
    write_trace(
        &out.trace,
        &loaded.resolve(&c.output.trace),
        c.output.timing,
    )?;
    println!("{}", summary("run", &out));
    Ok(())
}

fn thread_cap() -> CliResult<usize> {
    match std::env::var("SVRC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(CliError::Usage(format!(
                "SVRC_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |k| k.get())),
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        && !label.starts_with('.')
}

/// Points at snapshot rows plus the final row; every row when a trace has no snapshots.
fn plot_points(trace: &Trace, f_star: f64, x: impl Fn(&Trace, usize) -> f64) -> Vec<(f64, f64)> {
    let rows = trace.records();
    let has_snapshots = rows.iter().any(|r| r.is_snapshot());
    rows.iter()
        .enumerate()
        .filter(|(k, r)| !has_snapshots || r.is_snapshot() || *k + 1 == rows.len())
        .map(|(k, r)| {
            (
                x(trace, k),
                ((r.f_value - f_star).max(0.0) + GAP_FLOOR).log10(),
            )
        })
        .collect()
}

pub fn suite(path: &Path) -> CliResult<()> {
    let loaded = config::load::<SuiteConfig>(path)?;
    let c = &loaded.config;
    if c.runs.is_empty() {
        return Err(CliError::Data("suite lists no runs".into()));
    }
    for (k, r) in c.runs.iter().enumerate() {
        if !valid_label(&r.label) {
            return Err(CliError::Data(format!(
                "run label '{}' must use only letters, digits, '-', '_' and '.'",
                r.label
            )));
        }
        if c.runs[..k].iter().any(|o| o.label == r.label) {
            return Err(CliError::Data(format!("duplicate run label '{}'", r.label)));
        }
    }
    let stop = c.budget.stopping_rule()?;
    let obj = c.objective.build(&loaded.base, c.seed)?;
    let x0 = c.start.point(obj.dim(), c.seed)?;
    let dir = loaded.resolve(&c.output.dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let workers = thread_cap()?.min(c.runs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<CliResult<RunOutput>>>> =
        Mutex::new(c.runs.iter().map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(entry) = c.runs.get(k) else { break };
                let seed = entry.seed.unwrap_or(c.seed);
                let res = entry
                    .optimizer
                    .execute(obj.as_ref(), &x0, seed, stop)
                    .map_err(CliError::from)
                    .and_then(|out| {
                        write_trace(
                            &out.trace,
                            &dir.join(format!("{}.csv", entry.label)),
                            c.output.timing,
                        )?;
                        Ok(out)
                    });
                results.lock().unwrap()[k] = Some(res);
            });
        }
    });
    let results: Vec<CliResult<RunOutput>> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();

    let mut first_error = None;
    let mut done = Vec::new();
    for (entry, res) in c.runs.iter().zip(results) {
        match res {
            Ok(out) => {
                println!("{}", summary(&entry.label, &out));
                done.push((entry.label.as_str(), out));
            }
            Err(e) => {
                eprintln!("run '{}' failed: {e}", entry.label);
                first_error.get_or_insert(e);
            }
        }
    }
    if done.is_empty() {
        return Err(first_error.unwrap_or_else(|| CliError::Data("no runs completed".into())));
    }

    let f_star = best_f_star(done.iter().map(|(_, o)| &o.trace)).unwrap_or(0.0);
    println!("best f: {f_star:e}");
    let y_label = "log10(F - F* + 1e-16)";
    type Abscissa = fn(&Trace, usize) -> f64;
    let charts: [(&str, &str, Abscissa); 2] = [
        ("convergence_epochs.svg", "epochs", |t, k| {
            t.epoch(&t.records()[k])
        }),
        ("convergence_wall.svg", "wall seconds", |t, k| {
            t.records()[k].wall_seconds
        }),
    ];
    for (file, x_label, x) in charts {
        let series: Vec<Series> = done
            .iter()
            .map(|(label, out)| Series {
                label: label.to_string(),
                points: plot_points(&out.trace, f_star, x),
            })
            .collect();
        let svg = step_chart(
            &format!("optimality gap vs {x_label}"),
            x_label,
            y_label,
            &series,
        );
        let p = dir.join(file);
        fs::write(&p, svg).map_err(|e| CliError::io(&p, e))?;
    }
    Ok(())
}

pub struct CheckOptions {
    pub points: usize,
    pub step: f64,
    pub pairs: usize,
    pub threshold: f64,
    pub corrupt_gradient: Option<f64>,
}

pub fn check(path: &Path, opts: &CheckOptions) -> CliResult<()> {
    let loaded = config::load::<ObjectiveOnly>(path)?;
    let c = &loaded.config;
    let base = c.objective.build(&loaded.base, c.seed)?;
    let obj: Box<dyn FiniteSumObjective> = match opts.corrupt_gradient {
        Some(eps) => {
            let d = base.dim();
            Box::new(CorruptedGradient {
                inner: base,
                offset: Vector::from_element(d, eps),
            })
        }
        None => base,
    };
    if opts.points == 0 || opts.pairs == 0 || !(opts.step > 0.0) {
        return Err(CliError::Usage(
            "--points and --pairs must be >= 1 and --step > 0".into(),
        ));
    }
    let (n, d) = (obj.n_samples(), obj.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    println!("point,sample,grad_rel_err,hess_rel_err");
    let (mut g_max, mut h_max) = (0.0f64, 0.0f64);
    for p in 0..opts.points {
        let x = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let i = rng.random_range(0..n);
        let r = fd_check(obj.as_ref(), &x, i, opts.step);
        println!("{p},{i},{:e},{:e}", r.grad_rel_err, r.hess_rel_err);
        g_max = g_max.max(r.grad_rel_err);
        h_max = h_max.max(r.hess_rel_err);
    }
    let rho = estimate_rho_with(obj.as_ref(), c.seed, opts.pairs, &RhoSampling::default())?;
    println!("max gradient error: {g_max:e}");
    println!("max hessian error: {h_max:e}");
    println!(
        "rho_hat: {:e} (max sampled ratio {:e})",
        rho.rho_hat, rho.max_ratio
    );
    if g_max > opts.threshold || h_max > opts.threshold || g_max.is_nan() || h_max.is_nan() {
        return Err(CliError::Numerical(format!(
            "derivative check failed: errors {g_max:e} / {h_max:e} exceed {:e}",
            opts.threshold
        )));
    }
    println!("derivative check passed");
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Nested(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    g: Vec<f64>,
    #[serde(rename = "H", alias = "h")]
    hessian: MatrixRepr,
    theta: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

fn read_model(path: &Path) -> CliResult<CubicModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let m: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let d = m.g.len();
    let entries = match m.hessian {
        MatrixRepr::Flat(v) => v,
        MatrixRepr::Nested(rows) => {
            if rows.iter().any(|r| r.len() != d) {
                return Err(CliError::Data(format!("H must have {d} columns per row")));
            }
            rows.concat()
        }
    };
    if entries.len() != d * d {
        return Err(CliError::Data(format!(
            "H must have {} entries for d = {d}, got {}",
            d * d,
            entries.len()
        )));
    }
    let h = SymMatrix::from_row_major(d, &entries, SYMMETRY_TOL)?;
    Ok(CubicModel::new(Vector::from_vec(m.g), h, m.theta)?)
}

fn report_json(r: &SolveReport) -> serde_json::Value {
    json!({
        "h": r.h.as_slice(),
        "model_value": r.model_value,
        "model_grad_norm": r.model_grad_norm,
        "lambda": r.lambda,
        "hard_case": r.hard_case,
        "iterations": r.iterations,
        "exact": r.exact,
        "zero_step": r.zero_step,
    })
}

pub fn solve_subproblem(path: &Path, tol: f64, lanczos: Option<usize>) -> CliResult<()> {
    let model = read_model(path)?;
    let report = match lanczos {
        None => cubic::solve_exact(&model, tol)?,
        Some(k) => cubic::solve_lanczos(
            |v| model.hessian().mul_vec(v),
            model.g(),
            model.theta(),
            k,
            tol,
        )?,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report_json(&report)).expect("report serializes")
    );
    Ok(())
}

pub fn defaults(n: usize, d: usize, rho: f64, c: f64) -> CliResult<()> {
    let defaults = corollary_defaults(n, d, rho)?;
    let recursion = theta_recursion(&defaults.recursion_input(rho, c, d))?;
    if defaults.b_g_clamped || defaults.b_h_clamped {
        eprintln!("note: batch sizes above n = {n} were clamped to n");
    }
    let out = json!({ "defaults": defaults, "recursion": recursion });
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("defaults serialize")
    );
    Ok(())
}

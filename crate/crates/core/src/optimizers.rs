//! Stochastic variance-reduced cubic regularization and its baselines.
//!
//! All three methods share one step machinery: build a gradient estimate `v`
//! and Hessian estimate `U`, minimize `⟨v,h⟩ + ½⟨Uh,h⟩ + (M/6)‖h‖³`, move to
//! `x + h`. They differ in how `v` and `U` are formed and what that costs in
//! second-order oracle (SO) calls.

use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cubic::{self, CubicModel, SolveReport};
use crate::linalg::{SymMatrix, Vector};
use crate::metrics::{self, Trace, TraceRecord};
use crate::objectives::FiniteSumObjective;
use crate::{Error, Result};

/// Runs abort once `F` exceeds this.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PenaltySchedule {
    Fixed {
        m: f64,
    },
    /// `M_{s,t} = α / (1 + β)^{s + t/T}`.
    Decaying {
        alpha: f64,
        beta: f64,
    },
}

impl PenaltySchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PenaltySchedule::Fixed { m } => m > 0.0 && m.is_finite(),
            PenaltySchedule::Decaying { alpha, beta } => {
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid penalty schedule {self:?}")))
        }
    }

    /// Penalty for inner step `t` of outer loop `s` (1-based) with loop length `len`.
    pub fn penalty(&self, s: usize, t: usize, len: usize) -> f64 {
        match *self {
            PenaltySchedule::Fixed { m } => m,
            PenaltySchedule::Decaying { alpha, beta } => {
                let e = s as f64 + t as f64 / len as f64;
                alpha / (1.0 + beta).powf(e)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SubproblemSolver {
    Exact { tol: f64 },
    Lanczos { max_k: usize, tol: f64 },
}

impl Default for SubproblemSolver {
    fn default() -> Self {
        SubproblemSolver::Exact {
            tol: cubic::DEFAULT_TOL,
        }
    }
}

impl SubproblemSolver {
    pub fn solve(&self, v: Vector, u: SymMatrix, m: f64) -> Result<SolveReport> {
        match *self {
            SubproblemSolver::Exact { tol } => cubic::solve_exact(&CubicModel::new(v, u, m)?, tol),
            SubproblemSolver::Lanczos { max_k, tol } => {
                cubic::solve_lanczos(|w| u.mul_vec(w), &v, m, max_k, tol)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithReplacement,
    WithoutReplacement,
}

impl Sampling {
    pub fn draw(&self, rng: &mut ChaCha8Rng, n: usize, b: usize) -> Vec<usize> {
        match self {
            Sampling::WithReplacement => (0..b).map(|_| rng.random_range(0..n)).collect(),
            Sampling::WithoutReplacement => index::sample(rng, n, b).into_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputRule {
    UniformRandomIterate,
    #[default]
    LastIterate,
    BestMuIterate,
}

/// How the SO cost of one inner step is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoAccounting {
    /// `b_g + b_h` per step.
    Disjoint,
    /// A draw of index `i` in `I_g` and one in `I_h` share a single oracle triple.
    #[default]
    OncePerTriple,
}

impl SoAccounting {
    pub fn cost(&self, i_g: &[usize], i_h: &[usize]) -> u64 {
        let total = (i_g.len() + i_h.len()) as u64;
        match self {
            SoAccounting::Disjoint => total,
            SoAccounting::OncePerTriple => {
                let mut a = i_g.to_vec();
                let mut b = i_h.to_vec();
                a.sort_unstable();
                b.sort_unstable();
                let (mut i, mut j, mut shared) = (0, 0, 0u64);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            shared += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                total - shared
            }
        }
    }
}

/// Budget limits; a run stops before any oracle work that would start past them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_epochs: Option<f64>,
    pub max_wall_seconds: Option<f64>,
}

impl StoppingRule {
    fn exhausted(&self, counters: &OracleCounters, n: usize, started: Instant) -> bool {
        if let Some(e) = self.max_epochs {
            if counters.epochs(n) >= e {
                return true;
            }
        }
        if let Some(w) = self.max_wall_seconds {
            if started.elapsed().as_secs_f64() >= w {
                return true;
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrcConfig {
    pub b_g: usize,
    pub b_h: usize,
    /// Inner loop length `T`.
    pub inner_steps: usize,
    /// Outer loop count `S`.
    pub outer_loops: usize,
    pub schedule: PenaltySchedule,
    #[serde(default)]
    pub solver: SubproblemSolver,
    /// Inexactness target reported alongside the solver tolerance.
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub output_rule: OutputRule,
    #[serde(default)]
    pub accounting: SoAccounting,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stop: StoppingRule,
}

impl SvrcConfig {
    pub fn new(
        b_g: usize,
        b_h: usize,
        inner_steps: usize,
        outer_loops: usize,
        schedule: PenaltySchedule,
    ) -> Self {
        SvrcConfig {
            b_g,
            b_h,
            inner_steps,
            outer_loops,
            schedule,
            solver: SubproblemSolver::default(),
            delta: 0.0,
            sampling: Sampling::default(),
            output_rule: OutputRule::default(),
            accounting: SoAccounting::default(),
            seed: 0,
            stop: StoppingRule::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.b_g == 0 || self.b_g > n || self.b_h == 0 || self.b_h > n {
            return Err(Error::invalid(format!(
                "batch sizes must lie in [1, {n}], got b_g = {}, b_h = {}",
                self.b_g, self.b_h
            )));
        }
        if self.inner_steps == 0 {
            return Err(Error::invalid("inner loop length must be at least 1"));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::invalid("delta must be non-negative"));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OracleCounters {
    pub so_calls: u64,
    pub cso_calls: u64,
}

impl OracleCounters {
    pub fn epochs(&self, n: usize) -> f64 {
        self.so_calls as f64 / n as f64
    }
}

/// Anchor point with its exact full-batch gradient and Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotState {
    pub x_hat: Vector,
    pub g_s: Vector,
    pub h_s: SymMatrix,
}

impl SnapshotState {
    pub fn at<O: FiniteSumObjective + ?Sized>(obj: &O, x_hat: &Vector) -> Self {
        SnapshotState {
            x_hat: x_hat.clone(),
            g_s: obj.gradient(x_hat),
            h_s: obj.hessian(x_hat),
        }
    }
}

/// `v = (1/b)Σ[∇f_i(x) − ∇f_i(x̂)] + g^s − [(1/b)Σ∇²f_i(x̂) − H^s](x − x̂)`.
pub fn semi_stochastic_gradient<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x: &Vector,
    snap: &SnapshotState,
    i_g: &[usize],
) -> Result<Vector> {
    if i_g.is_empty() {
        return Err(Error::invalid("empty gradient batch"));
    }
    let scale = 1.0 / i_g.len() as f64;
    let diff = x - &snap.x_hat;
    let mut acc = Vector::zeros(obj.dim());
    for &i in i_g {
        obj.add_gradient_i(i, x, scale, &mut acc);
        obj.add_gradient_i(i, &snap.x_hat, -scale, &mut acc);
        obj.add_hessian_vec_i(i, &snap.x_hat, &diff, -scale, &mut acc);
    }
    acc += &snap.g_s;
    acc += snap.h_s.mul_vec(&diff);
    Ok(acc)
}

/// `U = (1/b)Σ[∇²f_j(x) − ∇²f_j(x̂)] + H^s`.
pub fn semi_stochastic_hessian<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x: &Vector,
    snap: &SnapshotState,
    i_h: &[usize],
) -> Result<SymMatrix> {
    if i_h.is_empty() {
        return Err(Error::invalid("empty Hessian batch"));
    }
    let scale = 1.0 / i_h.len() as f64;
    let mut acc = SymMatrix::zeros(obj.dim());
    for &j in i_h {
        obj.add_hessian_i(j, x, scale, &mut acc);
        obj.add_hessian_i(j, &snap.x_hat, -scale, &mut acc);
    }
    acc.add_scaled(1.0, &snap.h_s);
    Ok(acc)
}

/// What a run returns, including every accepted iterate.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub x: Vector,
    pub trace: Trace,
    pub counters: OracleCounters,
    /// Every post-step iterate, in order.
    pub iterates: Vec<Vector>,
}

struct Recorder<'a, O: ?Sized> {
    obj: &'a O,
    n: usize,
    counters: OracleCounters,
    trace: Trace,
    started: Instant,
    stop: StoppingRule,
}

impl<'a, O: FiniteSumObjective + ?Sized> Recorder<'a, O> {
    fn new(obj: &'a O, stop: StoppingRule) -> Self {
        let n = obj.n_samples();
        Recorder {
            obj,
            n,
            counters: OracleCounters::default(),
            trace: Trace::new(n),
            started: Instant::now(),
            stop,
        }
    }

    fn exhausted(&self) -> bool {
        self.stop.exhausted(&self.counters, self.n, self.started)
    }

    /// Appends a row for `x`. Full-batch derivatives already paid for are reused.
    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        x: &Vector,
        s: usize,
        t: Option<usize>,
        known: Option<(&Vector, &SymMatrix)>,
        step_norm: f64,
        m: f64,
    ) -> Result<()> {
        let (f, grad_norm, lmin) = match known {
            Some((g, h)) => (self.obj.value(x), g.norm(), metrics::matrix_lambda_min(h)?),
            None => {
                let pm = metrics::evaluate(self.obj, x)?;
                (pm.f_value, pm.grad_norm, pm.lambda_min)
            }
        };
        if !f.is_finite() || f > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                epoch: s,
                step: t.unwrap_or(0),
                value: f,
            });
        }
        self.trace.push(TraceRecord {
            s,
            t,
            so_calls: self.counters.so_calls,
            cso_calls: self.counters.cso_calls,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            f_value: f,
            grad_norm,
            lambda_min: lmin,
            mu: metrics::mu_from(grad_norm, lmin, m),
            step_norm,
            m_used: m,
        });
        Ok(())
    }

    fn solve(
        &mut self,
        solver: &SubproblemSolver,
        v: Vector,
        u: SymMatrix,
        m: f64,
        s: usize,
        t: usize,
    ) -> Result<SolveReport> {
        self.counters.cso_calls += 1;
        solver.solve(v, u, m).map_err(|e| Error::Subproblem {
            epoch: s,
            step: t,
            source: Box::new(e),
        })
    }
}

fn check_start<O: FiniteSumObjective + ?Sized>(obj: &O, x0: &Vector) -> Result<()> {
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch {
            expected: obj.dim(),
            got: x0.len(),
        });
    }
    if obj.n_samples() == 0 {
        return Err(Error::invalid("objective has no samples"));
    }
    Ok(())
}

/// Stochastic variance-reduced cubic regularization.
pub fn svrc_run<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x0: &Vector,
    config: &SvrcConfig,
) -> Result<RunOutput> {
    check_start(obj, x0)?;
    let n = obj.n_samples();
    config.validate(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(obj, config.stop);
    let len = config.inner_steps;
    let mut x_hat = x0.clone();
    let mut iterates = Vec::new();
    let mut mus = Vec::new();

    'outer: for s in 1..=config.outer_loops {
        if rec.exhausted() {
            break;
        }
        let snap = SnapshotState::at(obj, &x_hat);
        rec.counters.so_calls += n as u64;
        rec.record(
            &x_hat,
            s,
            None,
            Some((&snap.g_s, &snap.h_s)),
            0.0,
            config.schedule.penalty(s, 0, len),
        )?;

        let mut x = x_hat.clone();
        for t in 0..len {
            if rec.exhausted() {
                break 'outer;
            }
            let i_g = config.sampling.draw(&mut rng, n, config.b_g);
            let i_h = config.sampling.draw(&mut rng, n, config.b_h);
            rec.counters.so_calls += config.accounting.cost(&i_g, &i_h);
            let v = semi_stochastic_gradient(obj, &x, &snap, &i_g)?;
            let u = semi_stochastic_hessian(obj, &x, &snap, &i_h)?;
            let m = config.schedule.penalty(s, t, len);
            let rep = rec.solve(&config.solver, v, u, m, s, t)?;
            x += &rep.h;
            rec.record(&x, s, Some(t), None, rep.h.norm(), m)?;
            mus.push(rec.trace.last().map(|r| r.mu).unwrap_or(f64::INFINITY));
            iterates.push(x.clone());
        }
        x_hat = x;
    }

    let x = match config.output_rule {
        _ if iterates.is_empty() => x_hat,
        OutputRule::LastIterate => x_hat,
        OutputRule::UniformRandomIterate => iterates[rng.random_range(0..iterates.len())].clone(),
        OutputRule::BestMuIterate => {
            let best = (0..mus.len())
                .min_by(|&a, &b| mus[a].total_cmp(&mus[b]))
                .unwrap_or(0);
            iterates[best].clone()
        }
    };
    Ok(RunOutput {
        x,
        counters: rec.counters,
        trace: rec.trace,
        iterates,
    })
}

/// Cubic regularization with exact full-batch derivatives at every step.
/// Iteration `k` (0-based) uses the penalty `M_{k+1,0}` of `schedule`.
pub fn full_cubic_run<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x0: &Vector,
    schedule: &PenaltySchedule,
    iters: usize,
    solver: &SubproblemSolver,
    stop: StoppingRule,
) -> Result<RunOutput> {
    check_start(obj, x0)?;
    schedule.validate()?;
    let n = obj.n_samples();
    let mut rec = Recorder::new(obj, stop);
    let mut x = x0.clone();
    let mut iterates = Vec::new();
    for k in 0..iters {
        if rec.exhausted() {
            break;
        }
        let g = obj.gradient(&x);
        let h = obj.hessian(&x);
        rec.counters.so_calls += n as u64;
        let m = schedule.penalty(k + 1, 0, 1);
        let rep = rec.solve(solver, g, h, m, k + 1, 0)?;
        x += &rep.h;
        rec.record(&x, k + 1, Some(0), None, rep.h.norm(), m)?;
        iterates.push(x.clone());
    }
    Ok(RunOutput {
        x,
        counters: rec.counters,
        trace: rec.trace,
        iterates,
    })
}

/// Per-iteration gradient and Hessian sample sizes for the subsampled baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleSizes {
    Constant {
        n_g: usize,
        n_h: usize,
    },
    /// Sizes grow by `rate` per iteration, capped at `n`.
    Geometric {
        n_g: usize,
        n_h: usize,
        rate: f64,
    },
}

impl SampleSizes {
    pub fn at(&self, k: usize, n: usize) -> (usize, usize) {
        match *self {
            SampleSizes::Constant { n_g, n_h } => (n_g.min(n), n_h.min(n)),
            SampleSizes::Geometric { n_g, n_h, rate } => {
                let f = rate.powi(k as i32);
                let grow = |b: usize| ((b as f64 * f).ceil() as usize).clamp(1, n);
                (grow(n_g), grow(n_h))
            }
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let (g, h, ok) = match *self {
            SampleSizes::Constant { n_g, n_h } => (n_g, n_h, true),
            SampleSizes::Geometric { n_g, n_h, rate } => {
                (n_g, n_h, rate >= 1.0 && rate.is_finite())
            }
        };
        if g == 0 || h == 0 || g > n || h > n || !ok {
            return Err(Error::invalid(format!(
                "invalid sample sizes {self:?} for n = {n}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampledConfig {
    pub sizes: SampleSizes,
    pub schedule: PenaltySchedule,
    pub iters: usize,
    #[serde(default)]
    pub solver: SubproblemSolver,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stop: StoppingRule,
}

/// Cubic regularization on plain minibatch gradient and Hessian averages.
pub fn subsampled_cubic_run<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x0: &Vector,
    config: &SubsampledConfig,
) -> Result<RunOutput> {
    check_start(obj, x0)?;
    let n = obj.n_samples();
    config.sizes.validate(n)?;
    config.schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder::new(obj, config.stop);
    let mut x = x0.clone();
    let mut iterates = Vec::new();
    for k in 0..config.iters {
        if rec.exhausted() {
            break;
        }
        let (n_g, n_h) = config.sizes.at(k, n);
        let i_g = config.sampling.draw(&mut rng, n, n_g);
        let i_h = config.sampling.draw(&mut rng, n, n_h);
        rec.counters.so_calls += (n_g + n_h) as u64;
        let g = obj.gradient_avg(&i_g, &x);
        let h = obj.hessian_avg(&i_h, &x);
        let m = config.schedule.penalty(k + 1, 0, 1);
        let rep = rec.solve(&config.solver, g, h, m, k + 1, 0)?;
        x += &rep.h;
        rec.record(&x, k + 1, Some(0), None, rep.h.norm(), m)?;
        iterates.push(x.clone());
    }
    Ok(RunOutput {
        x,
        counters: rec.counters,
        trace: rec.trace,
        iterates,
    })
}

/// Inputs of the `Θ_t`, `c_t` recursion. Every array has length `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionInput {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub m: Vec<f64>,
    pub b_g: f64,
    pub b_h: f64,
    pub rho: f64,
    /// Absolute constant of the Hessian concentration term.
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    /// `c_0, …, c_T` with `c_T = 0`.
    pub c: Vec<f64>,
    /// `Θ_0, …, Θ_{T−1}`.
    pub theta: Vec<f64>,
    pub gamma_n: f64,
    /// Every `Θ_t > 0`.
    pub feasible: bool,
}

pub fn theta_recursion(input: &RecursionInput) -> Result<RecursionReport> {
    let len = input.m.len();
    if len == 0 {
        return Err(Error::invalid("recursion needs T >= 1"));
    }
    for (name, arr) in [
        ("A", &input.a),
        ("B", &input.b),
        ("alpha", &input.alpha),
        ("beta", &input.beta),
    ] {
        if arr.len() != len {
            return Err(Error::invalid(format!(
                "{name} has length {}, expected {len}",
                arr.len()
            )));
        }
    }
    let scalars = [input.b_g, input.b_h, input.rho, input.c, input.d];
    let arrays = [&input.a, &input.b, &input.alpha, &input.beta, &input.m];
    if scalars.iter().any(|v| !(*v > 0.0)) || arrays.iter().any(|a| a.iter().any(|v| !(*v > 0.0))) {
        return Err(Error::invalid("recursion inputs must be positive"));
    }
    let rho = input.rho;
    let grad_term = rho.powf(1.5) / input.b_g.powf(0.75);
    let hess_term = input.c * rho.powi(3) * input.d.ln().powf(1.5) / input.b_h.powf(1.5);
    let mut c = vec![0.0; len + 1];
    let mut theta = vec![0.0; len];
    for t in (0..len).rev() {
        let (a, b, al, be, m) = (
            input.a[t],
            input.b[t],
            input.alpha[t],
            input.beta[t],
            input.m[t],
        );
        let next = c[t + 1];
        theta[t] = (3.0 * m - 2.0 * rho - 4.0 * a - 4.0 * b) / 12.0 - next * (1.0 + 2.0 * al + be);
        c[t] = (theta[t] / m.powf(1.5) + 1.0 / a.sqrt()) * grad_term
            + (theta[t] / m.powi(3) + 1.0 / (b * b)) * hess_term
            + next * (1.0 + 1.0 / (al * al) + 2.0 / be.sqrt());
    }
    let gamma_n = theta
        .iter()
        .zip(&input.m)
        .map(|(th, m)| th / (15.0 * m.powf(1.5)))
        .fold(f64::INFINITY, f64::min);
    Ok(RecursionReport {
        feasible: theta.iter().all(|&t| t > 0.0),
        c,
        theta,
        gamma_n,
    })
}

/// Theoretical parameter settings for a problem with `n` samples in `d` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryDefaults {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub m: f64,
    pub inner_steps: usize,
    /// Batch sizes before clamping to `n`.
    pub b_g_raw: f64,
    pub b_h_raw: f64,
    pub b_g_clamped: bool,
    pub b_h_clamped: bool,
    /// One outer loop; callers pick `S`.
    pub config: SvrcConfig,
}

impl CorollaryDefaults {
    pub fn recursion_input(&self, rho: f64, c: f64, d: usize) -> RecursionInput {
        let len = self.inner_steps;
        RecursionInput {
            a: vec![self.a; len],
            b: vec![self.b; len],
            alpha: vec![self.alpha; len],
            beta: vec![self.beta; len],
            m: vec![self.m; len],
            b_g: self.b_g_raw.ceil(),
            b_h: self.b_h_raw.ceil(),
            rho,
            c,
            d: d as f64,
        }
    }
}

fn ceil_tolerant(x: f64) -> f64 {
    (x - 1e-9 * x.abs()).ceil()
}

pub fn corollary_defaults(n: usize, d: usize, rho: f64) -> Result<CorollaryDefaults> {
    if n < 2 || d < 2 || !(rho > 0.0) {
        return Err(Error::invalid(
            "corollary defaults need n, d >= 2 and rho > 0",
        ));
    }
    let nf = n as f64;
    let root = 1400.0 * nf.powf(0.4);
    let b_g_raw = root * root;
    let b_h_raw = root * (d as f64).ln();
    let clamp = |raw: f64| {
        let c = ceil_tolerant(raw);
        if c > nf {
            (n, true)
        } else {
            ((c as usize).max(1), false)
        }
    };
    let (b_g, b_g_clamped) = clamp(b_g_raw);
    let (b_h, b_h_clamped) = clamp(b_h_raw);
    let inner_steps = (ceil_tolerant(nf.powf(0.2)) as usize).max(1);
    let m = 2000.0 * rho;
    Ok(CorollaryDefaults {
        a: 125.0 * rho,
        b: 125.0 * rho,
        alpha: 2f64.sqrt() * nf.powf(0.1),
        beta: 4.0 * nf.powf(0.4),
        m,
        inner_steps,
        b_g_raw,
        b_h_raw,
        b_g_clamped,
        b_h_clamped,
        config: SvrcConfig::new(b_g, b_h, inner_steps, 1, PenaltySchedule::Fixed { m }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{DoubleWell, Quadratic};

    #[test]
    fn decaying_schedule_examples() {
        let s = PenaltySchedule::Decaying {
            alpha: 8.0,
            beta: 1.0,
        };
        assert_eq!(s.penalty(1, 0, 4), 4.0);
        assert_eq!(s.penalty(2, 0, 4), 2.0);
        assert!(s.penalty(1, 1, 4) < 4.0 && s.penalty(1, 3, 4) > 2.0);
        assert!(PenaltySchedule::Fixed { m: 0.0 }.validate().is_err());
        assert!(PenaltySchedule::Decaying {
            alpha: 1.0,
            beta: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn accounting_examples() {
        assert_eq!(SoAccounting::Disjoint.cost(&[1, 2, 3], &[3, 4]), 5);
        assert_eq!(SoAccounting::OncePerTriple.cost(&[1, 2, 3], &[3, 4]), 4);
        assert_eq!(SoAccounting::OncePerTriple.cost(&[3, 3], &[3]), 2);
        assert_eq!(SoAccounting::OncePerTriple.cost(&[3, 3], &[3, 3]), 2);
    }

    #[test]
    fn estimators_reduce_to_snapshot_at_anchor() {
        let dw = DoubleWell::new(2, 10, 3, 0.5, 0.5).unwrap();
        let x = Vector::from_vec(vec![0.3, -0.2, 1.1]);
        let snap = SnapshotState::at(&dw, &x);
        assert_eq!(
            semi_stochastic_gradient(&dw, &x, &snap, &[0, 4, 4]).unwrap(),
            snap.g_s
        );
        assert_eq!(
            semi_stochastic_hessian(&dw, &x, &snap, &[1, 9]).unwrap(),
            snap.h_s
        );
        assert!(semi_stochastic_gradient(&dw, &x, &snap, &[]).is_err());
        assert!(semi_stochastic_hessian(&dw, &x, &snap, &[]).is_err());
    }

    #[test]
    fn estimators_full_batch_identity() {
        let dw = DoubleWell::new(5, 12, 4, 0.5, 0.5).unwrap();
        let x_hat = Vector::from_vec(vec![0.1, 0.5, -0.7, 0.9]);
        let x = Vector::from_vec(vec![-0.2, 0.4, 0.3, 1.2]);
        let snap = SnapshotState::at(&dw, &x_hat);
        let all: Vec<usize> = (0..12).collect();
        let v = semi_stochastic_gradient(&dw, &x, &snap, &all).unwrap();
        assert!((v - dw.gradient(&x)).amax() < 1e-12);
        let u = semi_stochastic_hessian(&dw, &x, &snap, &all).unwrap();
        assert!((u.into_matrix() - dw.hessian(&x).into_matrix()).amax() < 1e-12);
    }

    #[test]
    fn empty_run_returns_start() {
        let dw = DoubleWell::new(1, 10, 2, 0.5, 0.5).unwrap();
        let x0 = Vector::from_vec(vec![0.5, 0.5]);
        let cfg = SvrcConfig::new(2, 2, 3, 0, PenaltySchedule::Fixed { m: 1.0 });
        let out = svrc_run(&dw, &x0, &cfg).unwrap();
        assert_eq!(out.x, x0);
        assert_eq!(out.counters, OracleCounters::default());
        assert!(out.trace.is_empty());
    }

    #[test]
    fn zero_budget_produces_no_rows() {
        let dw = DoubleWell::new(1, 10, 2, 0.5, 0.5).unwrap();
        let x0 = Vector::from_vec(vec![0.5, 0.5]);
        let mut cfg = SvrcConfig::new(2, 2, 3, 4, PenaltySchedule::Fixed { m: 1.0 });
        cfg.stop.max_epochs = Some(0.0);
        assert!(svrc_run(&dw, &x0, &cfg).unwrap().trace.is_empty());
    }

    #[test]
    fn rejects_bad_batches() {
        let dw = DoubleWell::new(1, 10, 2, 0.5, 0.5).unwrap();
        let x0 = Vector::zeros(2);
        for (bg, bh) in [(0, 1), (1, 0), (11, 1), (1, 11)] {
            let cfg = SvrcConfig::new(bg, bh, 1, 1, PenaltySchedule::Fixed { m: 1.0 });
            assert!(svrc_run(&dw, &x0, &cfg).is_err());
        }
    }

    #[test]
    fn full_cubic_counts_and_converges_on_quadratic() {
        let q = Quadratic::random_convex(3, 8, 4).unwrap();
        let (a, b) = q.averaged();
        let x_star = -crate::linalg::solve_shifted(&a, 0.0, &b).unwrap();
        let out = full_cubic_run(
            &q,
            &Vector::from_element(4, 3.0),
            &PenaltySchedule::Fixed { m: 10.0 },
            30,
            &SubproblemSolver::default(),
            StoppingRule::default(),
        )
        .unwrap();
        assert_eq!(
            out.counters,
            OracleCounters {
                so_calls: 240,
                cso_calls: 30
            }
        );
        assert!((out.x - x_star).norm() < 1e-8);
        let f: Vec<f64> = out.trace.records().iter().map(|r| r.f_value).collect();
        assert!(f.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn divergence_guard_trips() {
        // a tiny penalty on negative curvature throws the iterate far up the wall
        let dw = DoubleWell::new(0, 2, 1, 0.0, 0.0).unwrap();
        let err = full_cubic_run(
            &dw,
            &Vector::from_element(1, 0.1),
            &PenaltySchedule::Fixed { m: 1e-6 },
            5,
            &SubproblemSolver::default(),
            StoppingRule::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn recursion_single_step() {
        let input = RecursionInput {
            a: vec![1.0],
            b: vec![2.0],
            alpha: vec![3.0],
            beta: vec![4.0],
            m: vec![100.0],
            b_g: 16.0,
            b_h: 9.0,
            rho: 1.0,
            c: 1.0,
            d: 10.0,
        };
        let r = theta_recursion(&input).unwrap();
        assert_eq!(r.c[1], 0.0);
        let theta0 = (300.0 - 2.0 - 4.0 - 8.0) / 12.0;
        assert_eq!(r.theta[0], theta0);
        let c0 =
            (theta0 / 1000.0 + 1.0) / 8.0 + (theta0 / 1e6 + 0.25) * 10f64.ln().powf(1.5) / 27.0;
        assert!((r.c[0] - c0).abs() < 1e-15);
        assert!(r.feasible);
    }

    #[test]
    fn corollary_reference_values() {
        let c = corollary_defaults(100_000, 100, 1.0).unwrap();
        assert_eq!(c.inner_steps, 10);
        let b_h = 1400.0 * 1e5f64.powf(0.4) * 100f64.ln();
        assert!((c.b_h_raw - b_h).abs() < 1e-6);
        assert!(c.b_g_clamped && c.b_h_clamped);
        assert_eq!(c.config.b_g, 100_000);
    }
}

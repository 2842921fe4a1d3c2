//! Finite-sum objectives `F(x) = (1/n) Σ f_i(x)` with analytic per-sample
//! derivatives, plus derivative and Lipschitz-constant diagnostics.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataio::{self, Dataset};
use crate::linalg::{sym_eigen, SymMatrix, Vector};
use crate::{Error, Result};

/// A finite sum of `n` smooth per-sample losses over `R^d`.
///
/// Implementors provide accumulating per-sample evaluators; batch averages are
/// derived from them with a fixed left-to-right summation order, so averaging
/// over `0..n` reproduces the full objective bit for bit on every call.
pub trait FiniteSumObjective: Send + Sync {
    fn n_samples(&self) -> usize;

    fn dim(&self) -> usize;

    fn value_i(&self, i: usize, x: &Vector) -> f64;

    /// `out += scale * ∇f_i(x)`.
    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector);

    /// `out += scale * ∇²f_i(x)`.
    fn add_hessian_i(&self, i: usize, x: &Vector, scale: f64, out: &mut SymMatrix);

    /// `out += scale * ∇²f_i(x) v`.
    fn add_hessian_vec_i(&self, i: usize, x: &Vector, v: &Vector, scale: f64, out: &mut Vector) {
        let h = self.hessian_i(i, x);
        out.axpy(scale, &h.mul_vec(v), 1.0);
    }

    fn gradient_i(&self, i: usize, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        self.add_gradient_i(i, x, 1.0, &mut g);
        g
    }

    fn hessian_i(&self, i: usize, x: &Vector) -> SymMatrix {
        let mut h = SymMatrix::zeros(self.dim());
        self.add_hessian_i(i, x, 1.0, &mut h);
        h
    }

    fn hessian_vec_i(&self, i: usize, x: &Vector, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        self.add_hessian_vec_i(i, x, v, 1.0, &mut out);
        out
    }

    fn value_avg(&self, batch: &[usize], x: &Vector) -> f64 {
        let mut s = 0.0;
        for &i in batch {
            s += self.value_i(i, x);
        }
        s / batch.len() as f64
    }

    fn gradient_avg(&self, batch: &[usize], x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        for &i in batch {
            self.add_gradient_i(i, x, 1.0, &mut g);
        }
        g /= batch.len() as f64;
        g
    }

    fn hessian_avg(&self, batch: &[usize], x: &Vector) -> SymMatrix {
        let mut h = SymMatrix::zeros(self.dim());
        for &i in batch {
            self.add_hessian_i(i, x, 1.0, &mut h);
        }
        h.scale_mut(1.0 / batch.len() as f64);
        h
    }

    fn hessian_vec_avg(&self, batch: &[usize], x: &Vector, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        for &i in batch {
            self.add_hessian_vec_i(i, x, v, 1.0, &mut out);
        }
        out /= batch.len() as f64;
        out
    }

    fn value(&self, x: &Vector) -> f64 {
        self.value_avg(&full_batch(self.n_samples()), x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.gradient_avg(&full_batch(self.n_samples()), x)
    }

    fn hessian(&self, x: &Vector) -> SymMatrix {
        self.hessian_avg(&full_batch(self.n_samples()), x)
    }
}

pub fn full_batch(n: usize) -> Vec<usize> {
    (0..n).collect()
}

impl<T: FiniteSumObjective + ?Sized> FiniteSumObjective for Box<T> {
    fn n_samples(&self) -> usize {
        (**self).n_samples()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value_i(&self, i: usize, x: &Vector) -> f64 {
        (**self).value_i(i, x)
    }
    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector) {
        (**self).add_gradient_i(i, x, scale, out)
    }
    fn add_hessian_i(&self, i: usize, x: &Vector, scale: f64, out: &mut SymMatrix) {
        (**self).add_hessian_i(i, x, scale, out)
    }
    fn add_hessian_vec_i(&self, i: usize, x: &Vector, v: &Vector, scale: f64, out: &mut Vector) {
        (**self).add_hessian_vec_i(i, x, v, scale, out)
    }
}

/// Numerically safe logistic sigmoid.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErmLoss {
    /// Negative log-likelihood of a logistic model.
    Logistic,
    /// `(y - φ(z))²`.
    SigmoidSquared,
    /// `log((y - z)²/2 + 1)`.
    Robust,
}

impl ErmLoss {
    /// Loss and its first two derivatives with respect to the margin `z = xᵀw`.
    #[inline]
    fn eval(self, z: f64, y: f64) -> (f64, f64, f64) {
        match self {
            ErmLoss::Logistic => {
                let p = sigmoid(z);
                let value = y * softplus(-z) + (1.0 - y) * softplus(z);
                (value, p - y, p * (1.0 - p))
            }
            ErmLoss::SigmoidSquared => {
                let p = sigmoid(z);
                let dp = p * (1.0 - p);
                let ddp = dp * (1.0 - 2.0 * p);
                let r = y - p;
                (r * r, -2.0 * r * dp, 2.0 * dp * dp - 2.0 * r * ddp)
            }
            ErmLoss::Robust => {
                let t = y - z;
                let q = 0.5 * t * t + 1.0;
                (q.ln(), -t / q, (1.0 - 0.5 * t * t) / (q * q))
            }
        }
    }
}

/// Empirical risk `f_i(w) = loss(x_iᵀw, y_i) + λ Σ_j w_j²/(1+w_j²)`.
#[derive(Debug, Clone)]
pub struct ErmObjective {
    data: Dataset,
    loss: ErmLoss,
    lambda: f64,
}

/// Experiment default for the non-convex regularizer weight.
pub const DEFAULT_LAMBDA: f64 = 10.0;

fn require_binary(ds: &Dataset) -> Result<()> {
    match ds.labels().iter().position(|&y| y != 0.0 && y != 1.0) {
        Some(i) => Err(Error::invalid(format!(
            "label {} of sample {i} is outside {{0, 1}}",
            ds.label(i)
        ))),
        None => Ok(()),
    }
}

/// Logistic regression with the non-convex penalty `λ Σ w_j²/(1+w_j²)`.
pub fn nc_logistic(data: Dataset, lambda: f64) -> Result<ErmObjective> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
    }
    require_binary(&data)?;
    Ok(ErmObjective {
        data,
        loss: ErmLoss::Logistic,
        lambda,
    })
}

pub fn nonlinear_least_squares(data: Dataset) -> Result<ErmObjective> {
    require_binary(&data)?;
    Ok(ErmObjective {
        data,
        loss: ErmLoss::SigmoidSquared,
        lambda: 0.0,
    })
}

pub fn robust_linear_regression(data: Dataset) -> Result<ErmObjective> {
    Ok(ErmObjective {
        data,
        loss: ErmLoss::Robust,
        lambda: 0.0,
    })
}

impl ErmObjective {
    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self) -> ErmLoss {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    #[inline]
    fn margin(&self, i: usize, x: &Vector) -> f64 {
        self.data
            .row(i)
            .iter()
            .zip(x.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    fn regularizer(&self, x: &Vector) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        x.iter().map(|&w| self.lambda * w * w / (1.0 + w * w)).sum()
    }

    #[inline]
    fn reg_grad(&self, w: f64) -> f64 {
        let q = 1.0 + w * w;
        self.lambda * 2.0 * w / (q * q)
    }

    #[inline]
    fn reg_curv(&self, w: f64) -> f64 {
        let q = 1.0 + w * w;
        self.lambda * (2.0 - 6.0 * w * w) / (q * q * q)
    }
}

impl FiniteSumObjective for ErmObjective {
    fn n_samples(&self) -> usize {
        self.data.n()
    }

    fn dim(&self) -> usize {
        self.data.d()
    }

    fn value_i(&self, i: usize, x: &Vector) -> f64 {
        let (l, _, _) = self.loss.eval(self.margin(i, x), self.data.label(i));
        l + self.regularizer(x)
    }

    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector) {
        let (_, dl, _) = self.loss.eval(self.margin(i, x), self.data.label(i));
        let row = self.data.row(i);
        for j in 0..row.len() {
            let e = dl * row[j] + self.reg_grad(x[j]);
            out[j] += scale * e;
        }
    }

    fn add_hessian_i(&self, i: usize, x: &Vector, scale: f64, out: &mut SymMatrix) {
        let (_, _, ddl) = self.loss.eval(self.margin(i, x), self.data.label(i));
        let row = self.data.row(i);
        let c = scale * ddl;
        let d = row.len();
        for j in 0..d {
            let rj = row[j];
            if rj != 0.0 {
                let cj = c * rj;
                for (k, &rk) in row.iter().enumerate().skip(j + 1) {
                    if rk != 0.0 {
                        out.add_at(j, k, cj * rk);
                    }
                }
            }
            let diag = ddl * rj * rj + self.reg_curv(x[j]);
            if diag != 0.0 {
                out.add_at(j, j, scale * diag);
            }
        }
    }

    fn add_hessian_vec_i(&self, i: usize, x: &Vector, v: &Vector, scale: f64, out: &mut Vector) {
        let (_, _, ddl) = self.loss.eval(self.margin(i, x), self.data.label(i));
        let row = self.data.row(i);
        let xv: f64 = row.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        let c = scale * ddl * xv;
        for j in 0..row.len() {
            out[j] += c * row[j] + scale * self.reg_curv(x[j]) * v[j];
        }
    }
}

/// Separable double well `Σ_j (w_j² − 1)²/4` split across samples.
///
/// Sample `i` carries `Σ_j c_ij (w_j² − 1)²/4 + Σ_j a_ij w_j`, where the weights
/// `c_ij` and tilts `a_ij` come in `±` pairs around `1` and `0`, so the average is
/// the plain double well (up to rounding). Local minima sit at `w_j = ±1`, the
/// origin is a strict saddle with `λ_min = −1`.
#[derive(Debug, Clone)]
pub struct DoubleWell {
    n: usize,
    d: usize,
    weights: Vec<f64>,
    tilts: Vec<f64>,
}

impl DoubleWell {
    /// `spread` bounds `|c_ij − 1|`, `tilt` scales the linear terms.
    pub fn new(seed: u64, n: usize, d: usize, spread: f64, tilt: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("double well needs n, d >= 1"));
        }
        if !(0.0..1.0).contains(&spread) {
            return Err(Error::invalid("weight spread must lie in [0, 1)"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = vec![1.0; n * d];
        let mut tilts = vec![0.0; n * d];
        for pair in 0..n / 2 {
            for j in 0..d {
                let dc = if spread > 0.0 {
                    rng.random_range(-spread..spread)
                } else {
                    0.0
                };
                let da = tilt * rng.sample::<f64, _>(StandardNormal);
                let (a, b) = (2 * pair * d + j, (2 * pair + 1) * d + j);
                weights[a] = 1.0 + dc;
                weights[b] = 1.0 - dc;
                tilts[a] = da;
                tilts[b] = -da;
            }
        }
        Ok(DoubleWell {
            n,
            d,
            weights,
            tilts,
        })
    }

    /// Largest per-sample weight, which bounds the per-sample Hessian-Lipschitz ratio.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }
}

impl FiniteSumObjective for DoubleWell {
    fn n_samples(&self) -> usize {
        self.n
    }

    fn dim(&self) -> usize {
        self.d
    }

    fn value_i(&self, i: usize, x: &Vector) -> f64 {
        let (c, a) = (&self.weights[i * self.d..], &self.tilts[i * self.d..]);
        (0..self.d)
            .map(|j| {
                let q = x[j] * x[j] - 1.0;
                c[j] * q * q / 4.0 + a[j] * x[j]
            })
            .sum()
    }

    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector) {
        let (c, a) = (&self.weights[i * self.d..], &self.tilts[i * self.d..]);
        for j in 0..self.d {
            let e = c[j] * x[j] * (x[j] * x[j] - 1.0) + a[j];
            out[j] += scale * e;
        }
    }

    fn add_hessian_i(&self, i: usize, x: &Vector, scale: f64, out: &mut SymMatrix) {
        let c = &self.weights[i * self.d..];
        for j in 0..self.d {
            let e = c[j] * (3.0 * x[j] * x[j] - 1.0);
            out.add_at(j, j, scale * e);
        }
    }

    fn add_hessian_vec_i(&self, i: usize, x: &Vector, v: &Vector, scale: f64, out: &mut Vector) {
        let c = &self.weights[i * self.d..];
        for j in 0..self.d {
            out[j] += scale * c[j] * (3.0 * x[j] * x[j] - 1.0) * v[j];
        }
    }
}

/// Finite sum of quadratics `f_i(x) = ½ xᵀA_i x + b_iᵀx`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    mats: Vec<SymMatrix>,
    lin: Vec<Vector>,
}

impl Quadratic {
    pub fn new(mats: Vec<SymMatrix>, lin: Vec<Vector>) -> Result<Self> {
        if mats.is_empty() || mats.len() != lin.len() {
            return Err(Error::invalid(
                "quadratic needs matching, non-empty A_i and b_i",
            ));
        }
        let d = mats[0].dim();
        if d == 0 || mats.iter().any(|m| m.dim() != d) || lin.iter().any(|b| b.len() != d) {
            return Err(Error::invalid("inconsistent quadratic dimensions"));
        }
        Ok(Quadratic { mats, lin })
    }

    /// Random instance whose average Hessian is positive definite (eigenvalues ≥ 0.5).
    pub fn random_convex(seed: u64, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::invalid("quadratic needs n, d >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let mut base = SymMatrix::from_matrix(b.transpose() * &b / d as f64, 1e-12)?;
        base.add_diagonal(0.5);
        let mut mats = Vec::with_capacity(n);
        let mut lin = Vec::with_capacity(n);
        let mut pending: Option<(SymMatrix, Vector)> = None;
        for i in 0..n {
            let (dm, db) = match pending.take() {
                Some((m, v)) => {
                    let mut nm = m;
                    nm.scale_mut(-1.0);
                    (nm, -v)
                }
                None if i + 1 < n => {
                    let m = SymMatrix::from_upper_fn(d, |_, _| {
                        0.3 * rng.sample::<f64, _>(StandardNormal)
                    });
                    let v = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
                    pending = Some((m.clone(), v.clone()));
                    (m, v)
                }
                None => (SymMatrix::zeros(d), Vector::zeros(d)),
            };
            let mut a = base.clone();
            a.add_scaled(1.0, &dm);
            mats.push(a);
            lin.push(Vector::from_element(d, 0.5) + db);
        }
        Quadratic::new(mats, lin)
    }

    /// `(Ā, b̄)` of the averaged quadratic.
    pub fn averaged(&self) -> (SymMatrix, Vector) {
        let d = self.mats[0].dim();
        let mut a = SymMatrix::zeros(d);
        let mut b = Vector::zeros(d);
        for (m, v) in self.mats.iter().zip(&self.lin) {
            a.add_scaled(1.0, m);
            b += v;
        }
        let n = self.mats.len() as f64;
        a.scale_mut(1.0 / n);
        b /= n;
        (a, b)
    }
}

impl FiniteSumObjective for Quadratic {
    fn n_samples(&self) -> usize {
        self.mats.len()
    }

    fn dim(&self) -> usize {
        self.mats[0].dim()
    }

    fn value_i(&self, i: usize, x: &Vector) -> f64 {
        0.5 * self.mats[i].quad_form(x) + self.lin[i].dot(x)
    }

    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector) {
        let g = self.mats[i].mul_vec(x) + &self.lin[i];
        out.axpy(scale, &g, 1.0);
    }

    fn add_hessian_i(&self, i: usize, _x: &Vector, scale: f64, out: &mut SymMatrix) {
        out.add_scaled(scale, &self.mats[i]);
    }
}

/// Wraps an objective and shifts every per-sample gradient by a constant vector.
/// Exists to exercise derivative checks against a known-bad gradient.
pub struct CorruptedGradient<O> {
    pub inner: O,
    pub offset: Vector,
}

impl<O: FiniteSumObjective> FiniteSumObjective for CorruptedGradient<O> {
    fn n_samples(&self) -> usize {
        self.inner.n_samples()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value_i(&self, i: usize, x: &Vector) -> f64 {
        self.inner.value_i(i, x)
    }
    fn add_gradient_i(&self, i: usize, x: &Vector, scale: f64, out: &mut Vector) {
        self.inner.add_gradient_i(i, x, scale, out);
        out.axpy(scale, &self.offset, 1.0);
    }
    fn add_hessian_i(&self, i: usize, x: &Vector, scale: f64, out: &mut SymMatrix) {
        self.inner.add_hessian_i(i, x, scale, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    DoubleWell,
    Quadratic,
    NcLogistic,
    NonlinearLeastSquares,
    RobustRegression,
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "double_well" => SyntheticKind::DoubleWell,
            "quadratic" => SyntheticKind::Quadratic,
            "nc_logistic" => SyntheticKind::NcLogistic,
            "nonlinear_least_squares" => SyntheticKind::NonlinearLeastSquares,
            "robust_regression" => SyntheticKind::RobustRegression,
            other => {
                return Err(Error::invalid(format!(
                    "unknown synthetic objective '{other}'"
                )))
            }
        })
    }
}

/// Default weight spread and tilt of the synthetic double well.
pub const DOUBLE_WELL_SPREAD: f64 = 0.5;
pub const DOUBLE_WELL_TILT: f64 = 0.5;

/// Deterministic synthetic objective of the given kind.
pub fn synthetic_objective(
    seed: u64,
    n: usize,
    d: usize,
    kind: SyntheticKind,
) -> Result<Box<dyn FiniteSumObjective>> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("synthetic objective needs n, d >= 1"));
    }
    Ok(match kind {
        SyntheticKind::DoubleWell => Box::new(DoubleWell::new(
            seed,
            n,
            d,
            DOUBLE_WELL_SPREAD,
            DOUBLE_WELL_TILT,
        )?),
        SyntheticKind::Quadratic => Box::new(Quadratic::random_convex(seed, n, d)?),
        SyntheticKind::NcLogistic => Box::new(nc_logistic(
            dataio::synthetic_classification(seed, n, d)?,
            DEFAULT_LAMBDA,
        )?),
        SyntheticKind::NonlinearLeastSquares => Box::new(nonlinear_least_squares(
            dataio::synthetic_classification(seed, n, d)?,
        )?),
        SyntheticKind::RobustRegression => Box::new(robust_linear_regression(
            dataio::synthetic_regression(seed, n, d)?,
        )?),
    })
}

/// Relative errors of analytic derivatives against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub grad_rel_err: f64,
    pub hess_rel_err: f64,
}

/// Compares `∇f_i(x)` and `∇²f_i(x)` with central differences of step `step`.
///
/// Errors are `‖analytic − fd‖_max / max(1, ‖analytic‖_max)`. The gradient
/// check differences values; the Hessian check differences analytic gradients.
pub fn fd_check<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x: &Vector,
    i: usize,
    step: f64,
) -> FdReport {
    let d = obj.dim();
    let g = obj.gradient_i(i, x);
    let h = obj.hessian_i(i, x);
    let mut g_err = 0.0_f64;
    let mut h_err = 0.0_f64;
    let mut xp = x.clone();
    for j in 0..d {
        xp[j] = x[j] + step;
        let fp = obj.value_i(i, &xp);
        let gp = obj.gradient_i(i, &xp);
        xp[j] = x[j] - step;
        let fm = obj.value_i(i, &xp);
        let gm = obj.gradient_i(i, &xp);
        xp[j] = x[j];
        g_err = g_err.max(((fp - fm) / (2.0 * step) - g[j]).abs());
        for k in 0..d {
            h_err = h_err.max(((gp[k] - gm[k]) / (2.0 * step) - h.get(k, j)).abs());
        }
    }
    FdReport {
        grad_rel_err: g_err / g.amax().max(1.0),
        hess_rel_err: h_err / h.max_abs().max(1.0),
    }
}

/// Sampled Hessian-Lipschitz constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    /// `safety * max_ratio`.
    pub rho_hat: f64,
    /// Largest observed `‖∇²f_i(x) − ∇²f_i(y)‖₂ / ‖x − y‖₂`.
    pub max_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct RhoSampling {
    pub center: Option<Vector>,
    pub radius: f64,
    pub safety: f64,
}

impl Default for RhoSampling {
    fn default() -> Self {
        RhoSampling {
            center: None,
            radius: 1.0,
            safety: 1.5,
        }
    }
}

pub fn estimate_rho<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    seed: u64,
    pairs: usize,
) -> Result<LipschitzEstimate> {
    estimate_rho_with(obj, seed, pairs, &RhoSampling::default())
}

/// Samples `pairs` triples `(x, y, i)` with `x` uniform in the ball; even pairs
/// take `y` anywhere in the ball, odd pairs take `y` close to `x` so that local
/// third-derivative peaks are seen.
pub fn estimate_rho_with<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    seed: u64,
    pairs: usize,
    sampling: &RhoSampling,
) -> Result<LipschitzEstimate> {
    if pairs == 0 {
        return Err(Error::invalid("need at least one sample pair"));
    }
    let d = obj.dim();
    let center = sampling.center.clone().unwrap_or_else(|| Vector::zeros(d));
    if center.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: center.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ball = |rng: &mut ChaCha8Rng, r: f64| -> Vector {
        let dir = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let norm = dir.norm().max(f64::MIN_POSITIVE);
        let scale = r * rng.random::<f64>().powf(1.0 / d as f64);
        dir * (scale / norm)
    };
    let mut max_ratio = 0.0_f64;
    for p in 0..pairs {
        let x = &center + ball(&mut rng, sampling.radius);
        let y = if p % 2 == 0 {
            &center + ball(&mut rng, sampling.radius)
        } else {
            &x + ball(&mut rng, 1e-2 * sampling.radius)
        };
        let dist = (&x - &y).norm();
        if dist == 0.0 {
            continue;
        }
        let i = rng.random_range(0..obj.n_samples());
        let mut diff = obj.hessian_i(i, &x);
        diff.add_scaled(-1.0, &obj.hessian_i(i, &y));
        let e = sym_eigen(&diff)?;
        let spectral = e.values[0].abs().max(e.values[d - 1].abs());
        max_ratio = max_ratio.max(spectral / dist);
    }
    Ok(LipschitzEstimate {
        rho_hat: sampling.safety * max_ratio,
        max_ratio,
    })
}

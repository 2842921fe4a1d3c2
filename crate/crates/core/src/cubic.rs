//! The cubic subproblem oracle.
//!
//! Minimizes `m(h) = ⟨g, h⟩ + ½⟨Hh, h⟩ + (θ/6)‖h‖³` over `R^d`. The global
//! minimizer is characterized by `(H + λI)h = −g`, `λ = (θ/2)‖h‖` and
//! `H + λI ⪰ 0`; [`solve_exact`] finds it through an eigendecomposition and a
//! safeguarded 1-d root find on `λ`, [`solve_lanczos`] restricts the problem
//! to a growing Krylov space and solves the reduced model exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{sym_eigen, EigenDecomp, LanczosProcess, SymMatrix, Vector};
use crate::{Error, Result};

/// Default absolute tolerance on the model gradient norm.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative size of `⟨q, g⟩` below which a bottom eigenvector counts as orthogonal to `g`.
const HARD_CASE_THRESHOLD: f64 = 1e-11;

const MAX_SECULAR_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicModel {
    g: Vector,
    h: SymMatrix,
    theta: f64,
}

impl CubicModel {
    pub fn new(g: Vector, h: SymMatrix, theta: f64) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::invalid(format!(
                "cubic penalty must be positive, got {theta}"
            )));
        }
        if g.len() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                got: g.len(),
            });
        }
        if g.is_empty() {
            return Err(Error::invalid("empty cubic model"));
        }
        if g.iter().any(|v| !v.is_finite()) || !h.is_finite() {
            return Err(Error::invalid("cubic model has non-finite entries"));
        }
        Ok(CubicModel { g, h, theta })
    }

    pub fn g(&self) -> &Vector {
        &self.g
    }

    pub fn hessian(&self) -> &SymMatrix {
        &self.h
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn value(&self, s: &Vector) -> f64 {
        let n = s.norm();
        self.g.dot(s) + 0.5 * self.h.quad_form(s) + self.theta / 6.0 * n * n * n
    }

    pub fn gradient(&self, s: &Vector) -> Vector {
        let n = s.norm();
        let mut out = self.h.mul_vec(s);
        out += &self.g;
        out.axpy(0.5 * self.theta * n, s, 1.0);
        out
    }
}

pub fn model_value(model: &CubicModel, h: &Vector) -> f64 {
    model.value(h)
}

pub fn model_gradient(model: &CubicModel, h: &Vector) -> Vector {
    model.gradient(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub h: Vector,
    pub model_value: f64,
    pub model_grad_norm: f64,
    /// `(θ/2)‖h‖` at the returned step.
    pub lambda: f64,
    pub hard_case: bool,
    pub iterations: usize,
    /// The step minimizes the model over the whole space, not just a subspace.
    pub exact: bool,
    /// Zero gradient and no negative curvature found: the step is `h = 0`.
    pub zero_step: bool,
}

/// `ψ(λ) = ‖(H + λI)⁻¹g‖ − 2λ/θ` in the eigenbasis of `H`.
#[derive(Debug, Clone)]
pub struct SecularEquation<'a> {
    values: &'a [f64],
    coeffs: &'a [f64],
    theta: f64,
}

impl<'a> SecularEquation<'a> {
    pub fn new(values: &'a [f64], coeffs: &'a [f64], theta: f64) -> Self {
        SecularEquation {
            values,
            coeffs,
            theta,
        }
    }

    /// `‖(H + λI)⁻¹g‖`, infinite on a pole carrying weight.
    pub fn step_norm(&self, lambda: f64) -> f64 {
        self.values
            .iter()
            .zip(self.coeffs)
            .map(|(&l, &c)| {
                if c == 0.0 {
                    0.0
                } else {
                    let r = c / (l + lambda);
                    r * r
                }
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn psi(&self, lambda: f64) -> f64 {
        self.step_norm(lambda) - 2.0 * lambda / self.theta
    }

    /// `φ(λ) = 1/‖h(λ)‖ − θ/(2λ)` and its derivative. `φ` is increasing and
    /// concave on the admissible interval and has the same root as `ψ`.
    fn reciprocal(&self, lambda: f64) -> (f64, f64) {
        let mut s2 = 0.0;
        let mut s3 = 0.0;
        for (&l, &c) in self.values.iter().zip(self.coeffs) {
            if c == 0.0 {
                continue;
            }
            let den = l + lambda;
            let r = c / den;
            s2 += r * r;
            s3 += r * r / den;
        }
        let norm = s2.sqrt();
        let phi = 1.0 / norm - self.theta / (2.0 * lambda);
        let dphi = s3 / (norm * norm * norm) + self.theta / (2.0 * lambda * lambda);
        (phi, dphi)
    }
}

/// Global minimizer of the cubic model.
pub fn solve_exact(model: &CubicModel, tol: f64) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    solve_exact_traced(model, tol, None)
}

fn solve_exact_traced(
    model: &CubicModel,
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SolveReport> {
    let eig = sym_eigen(&model.h)?;
    let d = model.dim();
    let theta = model.theta;
    let gq: Vec<f64> = (eig.vectors.transpose() * &model.g)
        .iter()
        .cloned()
        .collect();
    let values: Vec<f64> = eig.values.iter().cloned().collect();
    let gnorm = model.g.norm();
    let l1 = values[0];
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let bottom: Vec<usize> = (0..d)
        .filter(|&i| values[i] - l1 <= 1e-10 * scale)
        .collect();

    if gnorm == 0.0 && l1 >= 0.0 {
        return Ok(finish(model, Vector::zeros(d), false, 0));
    }

    let orthogonal = bottom
        .iter()
        .all(|&i| gq[i].abs() <= HARD_CASE_THRESHOLD * gnorm);
    if l1 < 0.0 && orthogonal {
        let lbar = -l1;
        let mut perp = gq.clone();
        for &i in &bottom {
            perp[i] = 0.0;
        }
        let sec = SecularEquation::new(&values, &perp, theta);
        let partial = sec.step_norm(lbar);
        let target = 2.0 * lbar / theta;
        if partial <= target {
            let mut coords = Vector::zeros(d);
            for i in 0..d {
                if perp[i] != 0.0 {
                    coords[i] = -perp[i] / (values[i] + lbar);
                }
            }
            let q = bottom[0];
            let tau = (target * target - partial * partial).max(0.0).sqrt();
            coords[q] = if gq[q] > 0.0 { -tau } else { tau };
            let h = &eig.vectors * coords;
            return Ok(finish(model, h, true, 0));
        }
    }

    let sec = SecularEquation::new(&values, &gq, theta);
    let mut lo = (-l1).max(0.0);
    // ‖h(λ)‖ ≤ ‖g‖/(λ + λ_1) ≤ 2λ/θ once 2λ² + 2λ_1λ − θ‖g‖ ≥ 0
    let mut hi = 0.5 * (-l1 + (l1 * l1 + 2.0 * theta * gnorm).sqrt());
    hi = hi.max(lo) * (1.0 + 1e-12) + f64::MIN_POSITIVE;
    while sec.psi(hi) > 0.0 {
        hi = 2.0 * hi + 1.0;
    }

    let mut lambda = hi;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_SECULAR_ITERS {
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(lambda);
        }
        let (phi, dphi) = sec.reciprocal(lambda);
        if phi == 0.0 {
            converged = true;
            break;
        }
        if phi < 0.0 {
            lo = lo.max(lambda);
        } else {
            hi = hi.min(lambda);
        }
        let norm = sec.step_norm(lambda);
        let grad_est = (0.5 * theta * norm - lambda).abs() * norm;
        if grad_est <= 1e-3 * tol {
            converged = true;
            break;
        }
        let newton = lambda - phi / dphi;
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let floor = 4.0 * f64::EPSILON * lambda.abs().max(f64::MIN_POSITIVE);
        if (next - lambda).abs() <= floor || hi - lo <= floor {
            converged = true;
            break;
        }
        lambda = next;
    }
    if !converged {
        let h = step_at(&eig, &gq, lambda);
        let report = finish(model, h, false, iterations);
        if report.model_grad_norm <= tol {
            return Ok(report);
        }
        return Err(Error::SecularNonConvergence { iterations, lo, hi });
    }

    let h = polish(model, &eig, step_at(&eig, &gq, lambda));
    Ok(finish(model, h, false, iterations))
}

/// Newton steps on `g + (H + (θ/2)‖h‖I)h = 0`, kept only while they shrink the
/// residual. The Jacobian `H + λI + (θ/2‖h‖)hhᵀ` is inverted in the eigenbasis
/// of `H` with a rank-one correction.
fn polish(model: &CubicModel, eig: &EigenDecomp, mut h: Vector) -> Vector {
    let mut best = model.gradient(&h).norm();
    for _ in 0..4 {
        let n = h.norm();
        if best == 0.0 || n == 0.0 {
            break;
        }
        let lambda = 0.5 * model.theta * n;
        if eig.values.iter().any(|&v| v + lambda <= 0.0) {
            break;
        }
        let solve = |r: &Vector| {
            let rq = eig.vectors.transpose() * r;
            &eig.vectors * Vector::from_fn(r.len(), |i, _| rq[i] / (eig.values[i] + lambda))
        };
        let f = model.gradient(&h);
        let af = solve(&f);
        let ah = solve(&h);
        let c = model.theta / (2.0 * n);
        let step = &af - &ah * (c * h.dot(&af) / (1.0 + c * h.dot(&ah)));
        let cand = &h - step;
        let r = model.gradient(&cand).norm();
        if !(r < best) {
            break;
        }
        h = cand;
        best = r;
    }
    h
}

fn step_at(eig: &EigenDecomp, gq: &[f64], lambda: f64) -> Vector {
    let coords = Vector::from_fn(gq.len(), |i, _| {
        if gq[i] == 0.0 {
            0.0
        } else {
            -gq[i] / (eig.values[i] + lambda)
        }
    });
    &eig.vectors * coords
}

fn finish(model: &CubicModel, h: Vector, hard_case: bool, iterations: usize) -> SolveReport {
    let zero_step = h.iter().all(|&v| v == 0.0);
    SolveReport {
        model_value: model.value(&h),
        model_grad_norm: model.gradient(&h).norm(),
        lambda: 0.5 * model.theta * h.norm(),
        hard_case,
        iterations,
        exact: true,
        zero_step,
        h,
    }
}

/// Krylov-subspace solver: grows a Lanczos basis from `g` and solves the
/// reduced model exactly until the full-space model gradient drops to `tol`,
/// `max_k` vectors are used, or the Krylov space becomes invariant.
///
/// With `g = 0` a fixed pseudo-random start vector probes for negative curvature.
pub fn solve_lanczos<F>(
    matvec: F,
    g: &Vector,
    theta: f64,
    max_k: usize,
    tol: f64,
) -> Result<SolveReport>
where
    F: FnMut(&Vector) -> Vector,
{
    if max_k == 0 {
        return Err(Error::invalid("max_k must be at least 1"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::invalid(format!(
            "cubic penalty must be positive, got {theta}"
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    let d = g.len();
    let gnorm = g.norm();
    let start = if gnorm > 0.0 {
        g.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ d as u64);
        Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng))
    };
    let mut process = LanczosProcess::new(matvec, &start)?;
    let inner_tol = (0.1 * tol).max(1e-15);
    let limit = max_k.min(d);

    let (y, reduced) = loop {
        process.extend();
        let k = process.len();
        let mut g_red = Vector::zeros(k);
        g_red[0] = gnorm;
        let reduced = CubicModel::new(g_red, process.tridiagonal(), theta)?;
        let rep = solve_exact_traced(&reduced, inner_tol, None)?;
        let tail = process.coupling() * rep.h[k - 1];
        let est = rep.model_grad_norm.hypot(tail);
        let probing = gnorm == 0.0 && rep.zero_step;
        if (est <= tol && !probing) || process.is_exhausted() || k >= limit {
            break (rep.h.clone(), rep);
        }
    };

    let h = process.expand(&y);
    let hh = process.apply(&h);
    let n = h.norm();
    let mut grad = hh.clone();
    grad += g;
    grad.axpy(0.5 * theta * n, &h, 1.0);
    let zero_step = gnorm == 0.0 && y.iter().all(|&v| v == 0.0);
    Ok(SolveReport {
        model_value: g.dot(&h) + 0.5 * h.dot(&hh) + theta / 6.0 * n * n * n,
        model_grad_norm: grad.norm(),
        lambda: 0.5 * theta * n,
        hard_case: reduced.hard_case,
        iterations: process.len(),
        exact: process.is_exhausted(),
        zero_step,
        h,
    })
}

/// Plain gradient descent on the model from `h = 0`. An experimentation hook
/// with no accuracy guarantee.
pub fn solve_gradient_descent(model: &CubicModel, step: f64, iters: usize) -> Result<SolveReport> {
    if !(step > 0.0) {
        return Err(Error::invalid("gradient-descent step must be positive"));
    }
    let mut h = Vector::zeros(model.dim());
    for _ in 0..iters {
        let g = model.gradient(&h);
        h.axpy(-step, &g, 1.0);
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "gradient descent on the cubic model diverged",
            ));
        }
    }
    let mut rep = finish(model, h, false, iters);
    rep.exact = false;
    Ok(rep)
}

/// Outcome of the three δ-inexactness inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InexactCheck {
    /// `m(h̃) ≤ −(θ/12)‖h̃‖³ + δ`.
    pub sufficient_decrease: bool,
    /// `‖∇m(h̃)‖ ≤ δ^{3/2}`.
    pub small_gradient: bool,
    /// `‖h*‖³ ≤ ‖h̃‖³ + δ`; `None` when no exact step was supplied.
    pub norm_bound: Option<bool>,
}

impl InexactCheck {
    /// All checks that could be evaluated hold.
    pub fn holds(&self) -> bool {
        self.sufficient_decrease && self.small_gradient && self.norm_bound.unwrap_or(true)
    }
}

pub fn check_inexact(
    model: &CubicModel,
    h_tilde: &Vector,
    delta: f64,
    h_exact: Option<&Vector>,
) -> InexactCheck {
    let n = h_tilde.norm();
    let n3 = n * n * n;
    InexactCheck {
        sufficient_decrease: model.value(h_tilde) <= -model.theta / 12.0 * n3 + delta,
        small_gradient: model.gradient(h_tilde).norm() <= delta.powf(1.5),
        norm_bound: h_exact.map(|h| h.norm().powi(3) <= n3 + delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn model(g: &[f64], h: SymMatrix, theta: f64) -> CubicModel {
        CubicModel::new(Vector::from_row_slice(g), h, theta).unwrap()
    }

    fn random_model(rng: &mut ChaCha8Rng, d: usize) -> CubicModel {
        let q = nalgebra::DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng))
            .qr()
            .q();
        let eigs = nalgebra::DVector::<f64>::from_fn(d, |_, _| rng.random_range(-5.0..5.0));
        let h = SymMatrix::from_matrix(
            &q * nalgebra::DMatrix::from_diagonal(&eigs) * q.transpose(),
            1e-10,
        )
        .unwrap();
        let g = Vector::from_fn(d, |_, _| StandardNormal.sample(rng));
        CubicModel::new(g, h, rng.random_range(0.1..10.0)).unwrap()
    }

    #[test]
    fn rejects_nonpositive_theta() {
        assert!(CubicModel::new(Vector::zeros(1), SymMatrix::zeros(1), 0.0).is_err());
        assert!(CubicModel::new(Vector::zeros(1), SymMatrix::zeros(1), -1.0).is_err());
    }

    #[test]
    fn value_examples() {
        let m = model(&[0.0, 0.0], SymMatrix::identity(2), 1.0);
        assert_eq!(m.value(&Vector::zeros(2)), 0.0);
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        assert!((m.value(&e1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.gradient(&Vector::zeros(2)), Vector::zeros(2));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = random_model(&mut rng, 5);
            let h = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let g = m.gradient(&h);
            let step = 1e-6;
            for j in 0..5 {
                let mut hp = h.clone();
                hp[j] += step;
                let mut hm = h.clone();
                hm[j] -= step;
                let fd = (m.value(&hp) - m.value(&hm)) / (2.0 * step);
                assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()));
            }
        }
    }

    #[test]
    fn zero_gradient_psd_gives_zero_step() {
        let m = model(&[0.0, 0.0], SymMatrix::from_diagonal(&[1.0, 2.0]), 1.0);
        let r = solve_exact(&m, DEFAULT_TOL).unwrap();
        assert!(r.zero_step);
        assert_eq!(r.model_value, 0.0);
    }

    #[test]
    fn one_dimensional_closed_form() {
        // g = 1, H = 0, θ = 3: stationarity 1 + (3/2)h|h| = 0 → h = −√(2/3)
        let m = model(&[1.0], SymMatrix::zeros(1), 3.0);
        let r = solve_exact(&m, DEFAULT_TOL).unwrap();
        let h = -(2.0f64 / 3.0).sqrt();
        assert!((r.h[0] - h).abs() < 1e-12);
        let best = (0..=400_000)
            .map(|k| -2.0 + 4.0 * k as f64 / 400_000.0)
            .map(|s| s + 0.5 * s.abs().powi(3))
            .fold(f64::INFINITY, f64::min);
        assert!(r.model_value <= best + 1e-12);
        assert!((r.model_value - (-0.5443310539518174)).abs() < 1e-12);
    }

    #[test]
    fn hard_case_example() {
        let m = model(&[0.0, 0.0], SymMatrix::from_diagonal(&[-1.0, 1.0]), 1.0);
        let r = solve_exact(&m, DEFAULT_TOL).unwrap();
        assert!(r.hard_case);
        assert!((r.h.norm() - 2.0).abs() < 1e-12);
        assert!(r.h[1].abs() < 1e-12 && (r.h[0].abs() - 2.0).abs() < 1e-12);
        assert!((r.model_value + 2.0 / 3.0).abs() < 1e-12);
        // 2-d grid search
        let mut best = f64::INFINITY;
        for a in -300..=300 {
            for b in -300..=300 {
                let s = Vector::from_vec(vec![a as f64 / 100.0, b as f64 / 100.0]);
                best = best.min(m.value(&s));
            }
        }
        assert!(r.model_value <= best + 1e-12);
    }

    #[test]
    fn hard_case_with_orthogonal_gradient() {
        let m = model(&[0.0, 0.5], SymMatrix::from_diagonal(&[-2.0, 1.0]), 1.0);
        let r = solve_exact(&m, DEFAULT_TOL).unwrap();
        assert!(r.hard_case);
        assert!(r.model_grad_norm < 1e-12);
        assert!((r.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn optimality_certificate_and_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..100 {
            let d = 1 + trial % 10;
            let m = random_model(&mut rng, d);
            let mut lambdas = Vec::new();
            let r = solve_exact_traced(&m, DEFAULT_TOL, Some(&mut lambdas)).unwrap();
            let mut shifted = m.hessian().clone();
            shifted.add_diagonal(r.lambda);
            let resid = (shifted.mul_vec(&r.h) + m.g()).norm();
            assert!(resid <= 1e-8 * (1.0 + m.g().norm()), "resid {resid}");
            let lmin = crate::linalg::min_eigenvalue(m.hessian()).unwrap();
            assert!(r.lambda >= -lmin - 1e-8);
            assert!(r.model_value <= 0.0);
            let radius = 2.0 * r.h.norm() + 1.0;
            for _ in 0..1000 {
                let p = Vector::from_fn(d, |_, _| rng.random_range(-radius..radius));
                assert!(r.model_value <= m.value(&p) + 1e-10);
            }
            // ψ decreasing along the sampled iterates
            let eig = sym_eigen(m.hessian()).unwrap();
            let gq: Vec<f64> = (eig.vectors.transpose() * m.g()).iter().cloned().collect();
            let values: Vec<f64> = eig.values.iter().cloned().collect();
            let sec = SecularEquation::new(&values, &gq, m.theta());
            let mut pts = lambdas.clone();
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            for w in pts.windows(2) {
                assert!(sec.psi(w[0]) > sec.psi(w[1]));
            }
        }
    }

    #[test]
    fn lanczos_matches_exact_at_full_dimension() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let d = 6;
            let m = random_model(&mut rng, d);
            let exact = solve_exact(&m, DEFAULT_TOL).unwrap();
            let h = m.hessian().clone();
            let lz = solve_lanczos(|v| h.mul_vec(v), m.g(), m.theta(), d, 0.0).unwrap();
            assert!((lz.model_value - exact.model_value).abs() <= 1e-8);
            assert!(
                (lz.model_value - m.value(&lz.h)).abs() <= 1e-12 * (1.0 + lz.model_value.abs())
            );
        }
    }

    #[test]
    fn lanczos_single_eigenvector_converges_in_one_step() {
        let h = SymMatrix::from_diagonal(&[2.0, -1.0, 3.0]);
        let g = Vector::from_vec(vec![0.0, 0.0, 1.5]);
        let r = solve_lanczos(|v| h.mul_vec(v), &g, 1.0, 3, 1e-10).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.exact);
    }

    #[test]
    fn lanczos_zero_gradient_finds_negative_curvature() {
        let h = SymMatrix::from_diagonal(&[1.0, -1.0, 2.0]);
        let r = solve_lanczos(|v| h.mul_vec(v), &Vector::zeros(3), 1.0, 3, 1e-10).unwrap();
        assert!((r.model_value + 2.0 / 3.0).abs() < 1e-10);
        assert!(!r.zero_step);
        let psd = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let r = solve_lanczos(|v| psd.mul_vec(v), &Vector::zeros(2), 1.0, 2, 1e-10).unwrap();
        assert!(r.zero_step);
        assert_eq!(r.h, Vector::zeros(2));
    }

    #[test]
    fn large_penalty_shrinks_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = random_model(&mut rng, 4);
        let big = CubicModel::new(base.g().clone(), base.hessian().clone(), 1e6).unwrap();
        let r = solve_exact(&big, DEFAULT_TOL).unwrap();
        // with θ ≫ ‖H‖ the step scales like √(2‖g‖/θ) and points against g
        let expect = (2.0 * base.g().norm() / 1e6).sqrt();
        assert!((r.h.norm() - expect).abs() / expect < 0.05);
        assert!(r.h.dot(base.g()) < 0.0);
        assert!(r.model_value < 0.0);
    }

    #[test]
    fn inexact_examples() {
        let m = model(&[1.0, -2.0], SymMatrix::from_diagonal(&[-1.0, 3.0]), 2.0);
        let exact = solve_exact(&m, 1e-14).unwrap();
        let c = check_inexact(&m, &exact.h, 0.0, Some(&exact.h));
        assert!(c.sufficient_decrease);
        assert_eq!(c.norm_bound, Some(true));
        let c = check_inexact(&m, &Vector::zeros(2), 0.5, None);
        assert!(!c.small_gradient);
        assert_eq!(c.norm_bound, None);
    }
}

//! Stationarity measures and run traces.
//!
//! Everything here is instrumentation: evaluating a metric never touches an
//! optimizer's oracle counters.

use std::io::Write;

use crate::linalg::{lanczos, min_eigenvalue, sym_eigen, SymMatrix, Vector};
use crate::objectives::FiniteSumObjective;
use crate::{Error, Result};

/// Above this dimension `λ_min` comes from a Lanczos estimate instead of a dense eigensolve.
pub const DENSE_EIGEN_LIMIT: usize = 512;

/// Column header of the trace CSV.
pub const TRACE_HEADER: &str =
    "epoch,so_calls,cso_calls,wall_seconds,f_value,grad_norm,lambda_min,mu,step_norm,M_used";

/// `max{‖∇F‖^{3/2}, −λ_min³ / M^{3/2}}`.
pub fn mu_from(grad_norm: f64, lambda_min: f64, m: f64) -> f64 {
    let curvature = -(lambda_min * lambda_min * lambda_min) / m.powf(1.5);
    grad_norm.powf(1.5).max(curvature)
}

/// Full-batch measurements at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub f_value: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
}

impl PointMetrics {
    pub fn mu(&self, m: f64) -> f64 {
        mu_from(self.grad_norm, self.lambda_min, m)
    }
}

pub fn evaluate<O: FiniteSumObjective + ?Sized>(obj: &O, x: &Vector) -> Result<PointMetrics> {
    Ok(PointMetrics {
        f_value: obj.value(x),
        grad_norm: obj.gradient(x).norm(),
        lambda_min: lambda_min(obj, x)?,
    })
}

/// Smallest eigenvalue of `∇²F(x)`.
pub fn lambda_min<O: FiniteSumObjective + ?Sized>(obj: &O, x: &Vector) -> Result<f64> {
    let d = obj.dim();
    if d <= DENSE_EIGEN_LIMIT {
        min_eigenvalue(&obj.hessian(x))
    } else {
        let batch: Vec<usize> = (0..obj.n_samples()).collect();
        lanczos_min_eigenvalue(|v| obj.hessian_vec_avg(&batch, x, v), d, 1e-6)
    }
}

/// Lanczos estimate of the smallest eigenvalue of a symmetric operator, grown
/// until the Ritz residual `|β_k y_k|` drops below `tol`.
pub fn lanczos_min_eigenvalue<F>(mut matvec: F, d: usize, tol: f64) -> Result<f64>
where
    F: FnMut(&Vector) -> Vector,
{
    if d == 0 {
        return Err(Error::invalid("empty operator"));
    }
    let start = Vector::from_fn(d, |i, _| 1.0 + ((i * 7919) % 97) as f64 / 97.0);
    let mut k = d.min(32);
    loop {
        let lz = lanczos(&mut matvec, &start, k)?;
        let eig = sym_eigen(&lz.tridiagonal)?;
        let theta = eig.values[0];
        if lz.exact || k == d {
            return Ok(theta);
        }
        let ritz = lz.basis.iter().zip(eig.vectors.column(0).iter()).fold(
            Vector::zeros(d),
            |mut acc, (q, &c)| {
                acc.axpy(c, q, 1.0);
                acc
            },
        );
        let mut r = matvec(&ritz);
        r.axpy(-theta, &ritz, 1.0);
        if r.norm() <= tol {
            return Ok(theta);
        }
        k = (2 * k).min(d);
    }
}

/// `‖∇F(x)‖ ≤ ε_g` and `λ_min(∇²F(x)) ≥ −ε_h`.
pub fn is_local_min<O: FiniteSumObjective + ?Sized>(
    obj: &O,
    x: &Vector,
    eps_g: f64,
    eps_h: f64,
) -> Result<bool> {
    if !(eps_g > 0.0 && eps_h > 0.0) {
        return Err(Error::invalid("tolerances must be positive"));
    }
    if obj.gradient(x).norm() > eps_g {
        return Ok(false);
    }
    Ok(lambda_min(obj, x)? >= -eps_h)
}

pub fn mu<O: FiniteSumObjective + ?Sized>(obj: &O, x: &Vector, m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::invalid("M must be positive"));
    }
    Ok(evaluate(obj, x)?.mu(m))
}

/// Smallest eigenvalue of an explicit matrix, shared with the optimizers' snapshot rows.
pub(crate) fn matrix_lambda_min(h: &SymMatrix) -> Result<f64> {
    min_eigenvalue(h)
}

/// One row of a run trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Outer loop index, 1-based.
    pub s: usize,
    /// Inner step index within the outer loop; `None` on snapshot rows.
    pub t: Option<usize>,
    pub so_calls: u64,
    pub cso_calls: u64,
    pub wall_seconds: f64,
    pub f_value: f64,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub mu: f64,
    pub step_norm: f64,
    pub m_used: f64,
}

impl TraceRecord {
    pub fn is_snapshot(&self) -> bool {
        self.t.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    n: usize,
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new(n: usize) -> Self {
        Trace {
            n,
            records: Vec::new(),
        }
    }

    pub fn n_samples(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn epoch(&self, record: &TraceRecord) -> f64 {
        record.so_calls as f64 / self.n as f64
    }

    pub fn min_f(&self) -> Option<f64> {
        self.records.iter().map(|r| r.f_value).reduce(f64::min)
    }

    /// Oracle calls spent when the trace first reaches `f ≤ level`.
    pub fn so_calls_to_reach(&self, level: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.f_value <= level)
            .map(|r| r.so_calls)
    }

    /// Writes the CSV, optionally blanking the wall-clock column.
    pub fn write_csv<W: Write>(&self, mut out: W, with_timing: bool) -> std::io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            let wall = if with_timing {
                format!("{:e}", r.wall_seconds)
            } else {
                String::new()
            };
            writeln!(
                out,
                "{:e},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.epoch(r),
                r.so_calls,
                r.cso_calls,
                wall,
                r.f_value,
                r.grad_norm,
                r.lambda_min,
                r.mu,
                r.step_norm,
                r.m_used
            )?;
        }
        Ok(())
    }
}

/// Best final value across traces, the stand-in for `F*` in gap plots.
pub fn best_f_star<'a, I>(traces: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a Trace>,
{
    let mut any = false;
    let mut best = f64::INFINITY;
    for t in traces {
        any = true;
        if let Some(m) = t.min_f() {
            best = best.min(m);
        }
    }
    if !any {
        return Err(Error::invalid("best_f_star needs at least one trace"));
    }
    if !best.is_finite() {
        return Err(Error::invalid("traces carry no finite values"));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{DoubleWell, Quadratic};

    fn record(f: f64) -> TraceRecord {
        TraceRecord {
            s: 1,
            t: Some(0),
            so_calls: 1,
            cso_calls: 1,
            wall_seconds: 0.0,
            f_value: f,
            grad_norm: 0.0,
            lambda_min: 0.0,
            mu: 0.0,
            step_norm: 0.0,
            m_used: 1.0,
        }
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_from(0.0, 0.5, 1.0), 0.0);
        let (eps, m) = (1e-2_f64, 4.0_f64);
        let both = mu_from(eps, -(m * eps).sqrt(), m);
        assert!((both - eps.powf(1.5)).abs() < 1e-15);
    }

    #[test]
    fn double_well_origin_and_minimum() {
        let dw = DoubleWell::new(3, 10, 1, 0.0, 0.0).unwrap();
        let origin = Vector::zeros(1);
        assert!((mu(&dw, &origin, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(!is_local_min(&dw, &origin, 1.0, 0.5).unwrap());
        let ones = Vector::from_element(1, 1.0);
        assert!(is_local_min(&dw, &ones, 1e-12, 1e-12).unwrap());
    }

    #[test]
    fn lanczos_estimator_matches_dense() {
        let q = Quadratic::random_convex(4, 5, 40).unwrap();
        let x = Vector::zeros(40);
        let dense = min_eigenvalue(&q.hessian(&x)).unwrap();
        let batch: Vec<usize> = (0..5).collect();
        let est = lanczos_min_eigenvalue(|v| q.hessian_vec_avg(&batch, &x, v), 40, 1e-6).unwrap();
        assert!((dense - est).abs() < 1e-6);
    }

    #[test]
    fn best_f_star_rules() {
        assert!(best_f_star(std::iter::empty::<&Trace>()).is_err());
        let mut a = Trace::new(10);
        a.push(record(3.0));
        a.push(record(1.0));
        let mut b = Trace::new(10);
        b.push(record(2.0));
        assert_eq!(best_f_star([&a]).unwrap(), 1.0);
        assert_eq!(best_f_star([&a, &b]).unwrap(), 1.0);
        assert_eq!(best_f_star([&b, &a]).unwrap(), 1.0);
    }

    #[test]
    fn csv_header_only_for_empty_trace() {
        let mut buf = Vec::new();
        Trace::new(5).write_csv(&mut buf, true).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRACE_HEADER}\n"));
    }
}

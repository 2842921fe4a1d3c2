//! Dense linear algebra used throughout the crate.
//!
//! Problem dimensions here are small (a few hundred at most), so everything is
//! stored densely. Vectors are plain `nalgebra` column vectors; symmetric
//! matrices are wrapped so that symmetry holds exactly by construction.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

pub type Vector = DVector<f64>;

/// Dense symmetric matrix. Every write goes to both `(i, j)` and `(j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn zeros(d: usize) -> Self {
        SymMatrix(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix(DMatrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.0[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from its upper triangle; `f` is called with `i <= j`.
    pub fn from_upper_fn(d: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in i..d {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a full square matrix whose asymmetry is at most `tol` (in max norm)
    /// and symmetrizes it by averaging mirrored entries.
    pub fn from_matrix(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        let mut asym = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if !(asym <= tol) {
            return Err(Error::invalid(format!(
                "matrix asymmetry {asym:e} exceeds tolerance {tol:e}"
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(Self::from_upper_fn(d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
    }

    /// Row-major entries of a `d x d` matrix.
    pub fn from_row_major(d: usize, entries: &[f64], tol: f64) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: entries.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(d, d, entries), tol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] = v;
        self.0[(j, i)] = v;
    }

    /// Adds `v` to entry `(i, j)` and its mirror.
    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let new = self.0[(i, j)] + v;
        self.set(i, j, new);
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.dim() {
            self.0[(i, i)] += shift;
        }
    }

    /// `self += alpha * x xᵀ`. Zero entries of `x` are skipped, which keeps
    /// sparse rows cheap.
    pub fn add_outer(&mut self, alpha: f64, x: &[f64]) {
        assert_eq!(x.len(), self.dim(), "outer product dimension");
        let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        for (a, &j) in nz.iter().enumerate() {
            let ax = alpha * x[j];
            for &i in &nz[..a] {
                let w = ax * x[i];
                self.0[(i, j)] += w;
                self.0[(j, i)] += w;
            }
            self.0[(j, j)] += ax * x[j];
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, scale: f64, other: &SymMatrix) {
        self.0 += &other.0 * scale;
    }

    pub fn scale_mut(&mut self, scale: f64) {
        self.0 *= scale;
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        &self.0 * x
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &Vector) -> f64 {
        x.dot(&self.mul_vec(x))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Largest `|A_ij - A_ji|`; zero for every matrix built through this type.
    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim();
        let mut out = 0.0_f64;
        for i in 0..d {
            for j in (i + 1)..d {
                out = out.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        out
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

/// Eigendecomposition `A = Q diag(values) Qᵀ` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vector,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: DMatrix<f64>,
}

impl EigenDecomp {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.vectors * DMatrix::from_diagonal(&self.values) * self.vectors.transpose()
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomp> {
    let d = a.dim();
    if d == 0 {
        return Err(Error::invalid("eigendecomposition of an empty matrix"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let max_iter = 100 * d + 1000;
    let eig = SymmetricEigen::try_new(a.0.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.0[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        Error::EigenNonConvergence {
            iterations: max_iter,
            residual: off,
        }
    })?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = Vector::from_iterator(d, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigenDecomp { values, vectors })
}

/// Smallest eigenvalue of `a`.
pub fn min_eigenvalue(a: &SymMatrix) -> Result<f64> {
    Ok(sym_eigen(a)?.min_value())
}

/// Solves `(A + shift I) x = b`, requiring the shifted matrix to be positive definite.
pub fn solve_shifted(a: &SymMatrix, shift: f64, b: &Vector) -> Result<Vector> {
    let d = a.dim();
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.len(),
        });
    }
    let mut shifted = a.clone();
    shifted.add_diagonal(shift);
    let chol = Cholesky::new(shifted.0.clone()).ok_or(Error::NotPositiveDefinite { shift })?;
    let mut x = chol.solve(b);
    // one round of iterative refinement
    let r = b - shifted.mul_vec(&x);
    x += chol.solve(&r);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite { shift });
    }
    Ok(x)
}

/// Breakdown threshold relative to the running operator-norm estimate.
const LANCZOS_BREAKDOWN: f64 = 1e-12;

/// Incremental Lanczos tridiagonalization with full reorthogonalization.
///
/// Each call to [`LanczosProcess::extend`] adds one orthonormal basis vector
/// `q_k` and the corresponding diagonal entry of `T = QᵀAQ`.
pub struct LanczosProcess<F> {
    matvec: F,
    dim: usize,
    basis: Vec<Vector>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Unnormalized next direction, valid when `!exhausted`.
    residual: Vector,
    norm_estimate: f64,
    start: Vector,
    exhausted: bool,
}

impl<F> LanczosProcess<F>
where
    F: FnMut(&Vector) -> Vector,
{
    pub fn new(matvec: F, v0: &Vector) -> Result<Self> {
        let norm = v0.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid(
                "Lanczos start vector must be nonzero and finite",
            ));
        }
        Ok(LanczosProcess {
            matvec,
            dim: v0.len(),
            basis: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
            residual: Vector::zeros(v0.len()),
            norm_estimate: 0.0,
            start: v0 / norm,
            exhausted: false,
        })
    }

    /// Adds one basis vector. Returns `false` once the Krylov space is exhausted.
    pub fn extend(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        let q = if self.basis.is_empty() {
            self.start.clone()
        } else {
            let b = *self.beta.last().expect("beta recorded with each step");
            &self.residual / b
        };
        let mut w = (self.matvec)(&q);
        self.norm_estimate = self.norm_estimate.max(w.norm());
        let a = q.dot(&w);
        w.axpy(-a, &q, 1.0);
        if let (Some(prev), Some(&b)) = (self.basis.last(), self.beta.last()) {
            w.axpy(-b, prev, 1.0);
        }
        self.basis.push(q);
        self.alpha.push(a);
        // twice is enough
        for _ in 0..2 {
            for v in &self.basis {
                let c = v.dot(&w);
                w.axpy(-c, v, 1.0);
            }
        }
        let b = w.norm();
        self.residual = w;
        if self.basis.len() >= self.dim
            || b <= LANCZOS_BREAKDOWN * self.norm_estimate.max(f64::MIN_POSITIVE)
        {
            self.exhausted = true;
        } else {
            self.beta.push(b);
        }
        true
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// True once the Krylov space is invariant (breakdown or full dimension).
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Coupling `β_k` between the last basis vector and the next one; zero once exhausted.
    pub fn coupling(&self) -> f64 {
        if self.exhausted || self.basis.is_empty() {
            0.0
        } else {
            self.beta[self.basis.len() - 1]
        }
    }

    pub fn tridiagonal(&self) -> SymMatrix {
        let k = self.basis.len();
        let mut t = SymMatrix::zeros(k);
        for i in 0..k {
            t.set(i, i, self.alpha[i]);
            if i + 1 < k {
                t.set(i, i + 1, self.beta[i]);
            }
        }
        t
    }

    /// Applies the operator once more, outside the recurrence.
    pub fn apply(&mut self, v: &Vector) -> Vector {
        (self.matvec)(v)
    }

    /// Maps reduced coordinates `y` back to `Q y`.
    pub fn expand(&self, y: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for (q, &c) in self.basis.iter().zip(y.iter()) {
            out.axpy(c, q, 1.0);
        }
        out
    }
}

/// Result of a fixed-length Lanczos run.
#[derive(Debug, Clone)]
pub struct Lanczos {
    pub basis: Vec<Vector>,
    pub tridiagonal: SymMatrix,
    /// The Krylov space is invariant under the operator: `T` captures it exactly.
    pub exact: bool,
}

/// Runs up to `k` Lanczos steps from `v0`, stopping early on breakdown.
pub fn lanczos<F>(matvec: F, v0: &Vector, k: usize) -> Result<Lanczos>
where
    F: FnMut(&Vector) -> Vector,
{
    if k == 0 || k > v0.len() {
        return Err(Error::invalid(format!(
            "Lanczos step count {k} must lie in 1..={}",
            v0.len()
        )));
    }
    let mut process = LanczosProcess::new(matvec, v0)?;
    while process.len() < k && process.extend() {}
    Ok(Lanczos {
        tridiagonal: process.tridiagonal(),
        exact: process.is_exhausted(),
        basis: process.basis,
    })
}

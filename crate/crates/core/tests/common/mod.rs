#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use svrc_core::cubic::CubicModel;
use svrc_core::{SymMatrix, Vector};

pub fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `Q diag(eigs) Qᵀ` with a Haar-ish orthogonal `Q`.
pub fn with_spectrum(rng: &mut ChaCha8Rng, eigs: &[f64]) -> SymMatrix {
    let d = eigs.len();
    let q = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal))
        .qr()
        .q();
    let m = &q * DMatrix::from_diagonal(&Vector::from_row_slice(eigs)) * q.transpose();
    SymMatrix::from_matrix(m, 1e-10).expect("symmetric by construction")
}

/// Eigenvalues uniform in `[−5, 5]`, gaussian `g`, `θ` uniform in `[0.1, 10]`.
pub fn random_model(rng: &mut ChaCha8Rng, d: usize) -> CubicModel {
    let eigs: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    let h = with_spectrum(rng, &eigs);
    let g = gaussian(rng, d);
    CubicModel::new(g, h, rng.random_range(0.1..10.0)).unwrap()
}

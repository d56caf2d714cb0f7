#![allow(dead_code)]

use maslov_core::maslov::{LagrangianPath, SymplecticPath};
use maslov_core::symplectic::{random_symmetric, standard_j, LagrangianFrame};
use nalgebra::DMatrix;
use rand::Rng;

/// `t ↦ exp(J(t S₁ + t² S₂)) L₀` on `[0, 1]`.
pub fn random_lagrangian_path<R: Rng>(n: usize, scale: f64, rng: &mut R) -> LagrangianPath {
    let s1 = random_symmetric(2 * n, scale, rng);
    let s2 = random_symmetric(2 * n, scale, rng);
    let l0 = maslov_core::symplectic::random_lagrangian(n, rng).columns().clone();
    let j = standard_j(n);
    LagrangianPath::from_fn(n, 0.0, 1.0, 33, move |t| (&j * (&s1 * t + &s2 * (t * t))).exp() * &l0).unwrap()
}

/// `t ↦ Ψ₀ exp(J(t S₁ + t² S₂))` on `[0, 1]`.
pub fn random_symplectic_path<R: Rng>(n: usize, scale: f64, rng: &mut R) -> SymplecticPath {
    let s1 = random_symmetric(2 * n, scale, rng);
    let s2 = random_symmetric(2 * n, scale, rng);
    let psi = maslov_core::symplectic::random_symplectic_with(n, 0.5, rng).matrix().clone();
    let j = standard_j(n);
    SymplecticPath::from_fn(n, 0.0, 1.0, 33, move |t| &psi * (&j * (&s1 * t + &s2 * (t * t))).exp()).unwrap()
}

/// Signature of a symmetric matrix by eigenvalues.
pub fn signature(s: &DMatrix<f64>) -> i64 {
    let ev = s.clone().symmetric_eigenvalues();
    ev.iter().map(|&x| (x > 0.0) as i64 - (x < 0.0) as i64).sum()
}

pub fn min_abs_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()))
}

pub fn vertical(n: usize) -> LagrangianFrame {
    LagrangianFrame::vertical(n)
}

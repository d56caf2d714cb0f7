use maslov_core::flow::{flow_state, integrate_orbit, monodromy_index, mu_t, FlowConfig, HamiltonianSystem};
use maslov_core::maslov::MaslovConfig;
use maslov_core::systems::{self, InvertedSaddle};
use maslov_core::HalfInt;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

fn x(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[test]
fn harmonic_transfer_is_rotation() {
    let h = systems::harmonic_oscillator(&[1.0]).hamiltonian();
    let cfg = FlowConfig::default();
    let orbit = integrate_orbit(&h, 0.0, &x(&[0.3, -0.2]), 2.5, &cfg).unwrap();
    let t: f64 = 2.5;
    let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
    assert!((orbit.final_transfer() - expected).amax() < 1e-8);
    assert!(orbit.max_symplectic_residual() <= 1e-9);
    // q(t) = q0 cos t + p0 sin t
    let q = 0.3 * t.cos() - 0.2 * t.sin();
    assert!((orbit.final_state()[0] - q).abs() < 1e-8);
}

#[test]
fn hamilton_equations_sign() {
    let h = systems::pendulum().hamiltonian();
    let x0 = x(&[0.4, 0.7]);
    let f = maslov_core::flow::vector_field(&h, 0.0, &x0);
    assert!((f[0] - 0.7).abs() < 1e-15);
    assert!((f[1] + 0.4f64.sin()).abs() < 1e-15);
}

#[test]
fn saddle_stretches() {
    let cfg = FlowConfig::default();
    let xt = flow_state(&InvertedSaddle, 0.0, &x(&[1.0, 1.0]), 1.0, &cfg).unwrap();
    assert!((xt[0] - 1f64.exp()).abs() < 1e-8 && (xt[1] - (-1f64).exp()).abs() < 1e-8);
}

#[test]
fn mu_t_values() {
    let cfg = FlowConfig::default();
    let m = MaslovConfig::default();
    let ho: Arc<dyn HamiltonianSystem> = Arc::new(systems::harmonic_oscillator(&[1.0]).hamiltonian());
    assert_eq!(mu_t(ho.clone(), 0.0, &x(&[0.1, 0.2]), TAU, &cfg, &m).unwrap(), HalfInt::from_doubled(3));
    assert_eq!(mu_t(ho.clone(), 0.0, &x(&[0.1, 0.2]), 1.0, &cfg, &m).unwrap(), HalfInt::ZERO);
    assert_eq!(mu_t(ho, 0.0, &x(&[0.1, 0.2]), 0.0, &cfg, &m).unwrap(), HalfInt::ZERO);
    let pend: Arc<dyn HamiltonianSystem> = Arc::new(systems::pendulum().hamiltonian());
    assert_eq!(mu_t(pend.clone(), 0.0, &x(&[0.0, 0.0]), 4.0, &cfg, &m).unwrap(), HalfInt::from_int(1));
    assert_eq!(mu_t(pend.clone(), 0.0, &x(&[PI, 0.0]), 200.0, &cfg, &m).unwrap(), HalfInt::ZERO);
    assert_eq!(mu_t(pend, 0.0, &x(&[0.0, 3.0]), 10.0, &cfg, &m).unwrap(), HalfInt::ZERO);
    let flat: Arc<dyn HamiltonianSystem> = Arc::new(systems::flat_torus_geodesic(2).hamiltonian());
    assert_eq!(mu_t(flat, 0.0, &x(&[0.0, 0.0, 0.3, 0.7]), 100.0, &cfg, &m).unwrap(), HalfInt::ZERO);
}

#[test]
fn long_hyperbolic_orbit_restarts() {
    let pend = systems::pendulum().hamiltonian();
    let orbit = integrate_orbit(&pend, 0.0, &x(&[PI, 0.0]), 200.0, &FlowConfig::default()).unwrap();
    assert!(orbit.epochs() > 10);
    assert!(orbit.max_symplectic_residual() <= 1e-9);
}

#[test]
fn energy_is_conserved() {
    let pend = systems::pendulum().hamiltonian();
    let orbit = integrate_orbit(&pend, 0.0, &x(&[1.0, 0.5]), 1000.0, &FlowConfig::default()).unwrap();
    let drift = orbit.energy_drift().unwrap();
    println!("drift {drift:e}");
    assert!(drift <= 1e-7);
}

#[test]
fn equilibrium_monodromy() {
    let pend: Arc<dyn HamiltonianSystem> = Arc::new(systems::pendulum().hamiltonian());
    let r = monodromy_index(pend, &x(&[0.0, 0.0]), 7.0, &FlowConfig::default(), &MaslovConfig::default()).unwrap();
    assert_eq!(r.value, HalfInt::from_int(3));
}

use maslov_core::asymptotic::{
    asymptotic_index_measure, asymptotic_index_point, bott_index_periodic, measure_from_periodic_orbit, moment_diagnostics,
    pushforward_defect, DEFAULT_SCHEDULE,
};
use maslov_core::flow::{FlowConfig, HamiltonianSystem};
use maslov_core::maslov::MaslovConfig;
use maslov_core::systems;
use nalgebra::DVector;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

fn x(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

// Period of the librating pendulum by Simpson quadrature of 4∫dφ/√(1 − k² sin²φ).
fn period_oracle(e: f64) -> f64 {
    let k2 = (1.0 + e) / 2.0;
    let m = 4000;
    let h = FRAC_PI_2 / m as f64;
    let f = |phi: f64| 1.0 / (1.0 - k2 * phi.sin().powi(2)).sqrt();
    let mut s = f(0.0) + f(FRAC_PI_2);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    4.0 * s * h / 3.0
}

// μ̂ of a linear rotation with frequency ω over horizon T: (2⌊ωT/2π⌋ + 1)/T.
fn rotation_mean(omega: f64, t: f64) -> f64 {
    (2.0 * (omega * t / (2.0 * PI)).floor() + 1.0) / t
}

fn pendulum() -> Arc<dyn HamiltonianSystem> {
    Arc::new(systems::pendulum().hamiltonian())
}

#[test]
fn period_formula() {
    for e in [-0.9, -0.3, 0.0, 0.5, 0.95] {
        let tau = systems::pendulum_period(e).unwrap();
        assert!((tau - period_oracle(e)).abs() < 1e-9, "E={e}");
    }
    assert!((systems::pendulum_period(-1.0 + 1e-12).unwrap() - 2.0 * PI).abs() < 1e-5);
    let e = systems::pendulum_energy_for_frequency(0.5).unwrap();
    assert!((2.0 * PI / period_oracle(e) - 0.5).abs() < 1e-9);
}

#[test]
fn equilibrium_bott_index() {
    let b = bott_index_periodic(pendulum(), &x(&[0.0, 0.0]), 1.0, 2000, &FlowConfig::default(), &MaslovConfig::default()).unwrap();
    assert!(b.bound_holds);
    assert!((b.estimate.value - 1.0 / PI).abs() <= 1e-3, "{}", b.estimate.value);
    for (h, m) in b.iterates.iter().enumerate().step_by(97) {
        assert!((m.to_f64() / (h + 1) as f64 - rotation_mean(1.0, (h + 1) as f64)).abs() < 1e-12);
    }
}

#[test]
fn two_frequency_oscillator() {
    let w2 = 2f64.sqrt();
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(systems::harmonic_oscillator(&[1.0, w2]).hamiltonian());
    let b = bott_index_periodic(sys, &x(&[0.0; 4]), 1.0, 200, &FlowConfig::default(), &MaslovConfig::default()).unwrap();
    assert!(b.bound_holds);
    let exact = (1.0 + w2) / PI;
    assert!((b.estimate.value - exact).abs() <= b.estimate.halfwidth);
    let oracle = rotation_mean(1.0, 200.0) + rotation_mean(w2, 200.0);
    assert!((b.estimate.value - oracle).abs() < 1e-12);
}

#[test]
fn librating_orbit_mean_index() {
    let e = 0.2;
    let tau = period_oracle(e);
    let b = bott_index_periodic(pendulum(), &systems::pendulum_state(e), tau, 30, &FlowConfig::default(), &MaslovConfig::default())
        .unwrap();
    assert!(b.bound_holds);
    assert!((b.estimate.value - 2.0 / tau).abs() <= b.estimate.halfwidth);
    // one oscillation contributes exactly 2
    assert_eq!(b.iterates[9].to_f64() - b.iterates[8].to_f64(), 2.0);
    let p = asymptotic_index_point(pendulum(), 0.0, &systems::pendulum_state(e), &DEFAULT_SCHEDULE, &FlowConfig::default(), &MaslovConfig::default())
        .unwrap();
    assert!((p.value - 2.0 / tau).abs() <= p.halfwidth);
    assert!(p.band_consistent(&DEFAULT_SCHEDULE, 1));
}

#[test]
fn non_oscillating_orbits_vanish() {
    let cfg = FlowConfig::default();
    let mcfg = MaslovConfig::default();
    for x0 in [x(&[PI, 0.0]), x(&[0.0, 3.0]), x(&[1.0, -2.5])] {
        let p = asymptotic_index_point(pendulum(), 0.0, &x0, &DEFAULT_SCHEDULE, &cfg, &mcfg).unwrap();
        assert!(p.value.abs() <= p.halfwidth, "{x0:?}: {}", p.value);
        assert_eq!(p.sequence.len(), 4);
    }
    let saddle: Arc<dyn HamiltonianSystem> = Arc::new(systems::InvertedSaddle);
    let p = asymptotic_index_point(saddle, 0.0, &x(&[0.0, 0.0]), &[10.0, 20.0], &cfg, &mcfg).unwrap();
    assert!(p.value.abs() <= p.halfwidth);
}

#[test]
fn equilibrium_measure() {
    let sys = pendulum();
    let cfg = FlowConfig::default();
    let eta = measure_from_periodic_orbit(sys.as_ref(), &x(&[0.0, 0.0]), 1, 64, &cfg).unwrap();
    assert_eq!(eta.samples.len(), 64);
    let est = asymptotic_index_measure(sys.clone(), &eta, &[50.0, 100.0], &cfg, &MaslovConfig::default()).unwrap();
    assert!((est.value - 1.0 / PI).abs() <= est.halfwidth);
    let m = moment_diagnostics(&eta, 1.0);
    assert_eq!((m.first, m.second, m.tail_mass), (0.0, 0.0, 0.0));
    assert!(pushforward_defect(sys.as_ref(), &eta, 16, &cfg).unwrap() < 1e-12);
}

#[test]
fn forced_orbit_measure_is_invariant() {
    // the forced pendulum keeps the upright and hanging equilibria
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(systems::forced_pendulum(0.3).hamiltonian());
    let cfg = FlowConfig::default();
    let eta = measure_from_periodic_orbit(sys.as_ref(), &x(&[0.0, 0.0]), 2, 100, &cfg).unwrap();
    assert_eq!(eta.samples.len(), 128);
    assert!(eta.samples.iter().all(|s| s.x.amax() < 1e-12));
    assert!(pushforward_defect(sys.as_ref(), &eta, 8, &cfg).unwrap() < 1e-9);
}

#[test]
fn rejects_bad_input() {
    let cfg = FlowConfig::default();
    let mcfg = MaslovConfig::default();
    assert!(asymptotic_index_point(pendulum(), 0.0, &x(&[0.0, 1.0]), &[50.0, 25.0], &cfg, &mcfg).is_err());
    let e = bott_index_periodic(pendulum(), &x(&[0.0, 1.0]), 1.0, 3, &cfg, &mcfg).unwrap_err();
    assert!(matches!(e, maslov_core::Error::NotPeriodic(_)));
}

#[test]
fn subadditivity_along_pendulum_orbits() {
    use maslov_core::asymptotic::subadditivity_defect;
    let cfg = FlowConfig::default();
    let mcfg = MaslovConfig::default();
    let mut worst = 0;
    for (i, x0) in [x(&[0.5, 0.0]), x(&[0.0, 1.9]), x(&[2.0, 1.0]), x(&[0.1, 0.0])].iter().enumerate() {
        for (t, t2) in [(3.0, 4.5), (7.3, 11.1), (0.0, 5.0), (19.0, 20.0)] {
            let d = subadditivity_defect(pendulum(), 0.1 * i as f64, x0, t, t2, &cfg, &mcfg).unwrap();
            assert!(d.abs().to_f64() <= 2.0);
            worst = worst.max(d.abs().doubled());
        }
    }
    // μ_t is not additive along librating orbits
    assert!(worst > 0);
}

use maslov_core::flow::FlowConfig;
use maslov_core::maslov::MaslovConfig;
use maslov_core::periodic::{
    beta_estimate, find_periodic_orbits, find_periodic_orbits_up_to, lower_hull, pendulum_sweep, theorem_main_witness,
    SearchConfig, WitnessKind,
};
use maslov_core::systems;
use std::f64::consts::PI;

// Period of the librating pendulum, Simpson quadrature of 4∫dφ/√(1 − k² sin²φ).
// Near the separatrix the integrand is nearly singular; use K ≈ Λ + k′²(Λ − 1)/4 + 9k′⁴(Λ − 7/6)/64, Λ = ln(4/k′).
fn period_oracle(e: f64) -> f64 {
    let k2 = (1.0 + e) / 2.0;
    let kp2 = (1.0 - e) / 2.0;
    if kp2 < 1e-4 {
        let l = (4.0 / kp2.sqrt()).ln();
        return 4.0 * (l + kp2 * (l - 1.0) / 4.0 + 9.0 * kp2 * kp2 * (l - 7.0 / 6.0) / 64.0);
    }
    let m = 4000;
    let h = PI / 2.0 / m as f64;
    let f = |phi: f64| 1.0 / (1.0 - k2 * phi.sin().powi(2)).sqrt();
    let mut s = f(0.0) + f(PI / 2.0);
    for i in 1..m {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    4.0 * s * h / 3.0
}

fn small() -> SearchConfig {
    SearchConfig { q_points: 4, p_points: 5, bott_horizon: 60.0, ..SearchConfig::default() }
}

#[test]
fn pendulum_equilibria_for_small_periods() {
    let lag = systems::pendulum();
    let (flow, mcfg) = (FlowConfig::default(), MaslovConfig::default());
    for k in 1..=3 {
        let r = find_periodic_orbits(&lag, k, &small(), &flow, &mcfg).unwrap();
        let eq: Vec<_> = r.records.iter().filter(|x| x.x0[1].abs() < 1e-9 && (x.x0[0].abs() < 1e-9 || (x.x0[0].abs() - PI).abs() < 1e-9)).collect();
        assert_eq!(eq.len(), 2, "k={k}: {:?}", r.records);
        for x in &eq {
            assert!(x.residual < 1e-10 && x.minimal_period == 1 && x.contractible && x.bott_bound);
            // action of an equilibrium is −V(q*) = cos q*
            assert!((x.action - x.x0[0].cos()).abs() < 1e-12);
        }
        for x in &r.records {
            assert!(x.bott_bound && x.residual <= flow.tol.periodic);
        }
    }
}

#[test]
fn librating_orbit_with_integer_period() {
    let lag = systems::pendulum();
    let (flow, mcfg) = (FlowConfig::default(), MaslovConfig::default());
    let r = find_periodic_orbits(&lag, 7, &SearchConfig { q_points: 6, p_points: 9, bott_horizon: 70.0, ..SearchConfig::default() }, &flow, &mcfg)
        .unwrap();
    let lib: Vec<_> = r.records.iter().filter(|x| x.contractible && x.x0[1].abs() + (x.x0[0].abs() % PI) > 1e-6).collect();
    assert_eq!(lib.len(), 1, "{:#?}", r.records);
    let x = lib[0];
    let e = 0.5 * x.x0[1] * x.x0[1] - x.x0[0].cos();
    assert!((period_oracle(e) - 7.0).abs() < 1e-6);
    assert!((x.bott.value - 2.0 / 7.0).abs() <= x.bott.halfwidth);
    // rotating orbits are found too and are not contractible
    assert!(r.records.iter().any(|x| !x.contractible));
    let ids: Vec<_> = r.records.iter().map(|x| x.id).collect();
    assert_eq!(ids, (0..r.records.len()).collect::<Vec<_>>());
}

#[test]
fn harmonic_origin() {
    let lag = systems::harmonic_oscillator(&[1.0]);
    let r = find_periodic_orbits(&lag, 1, &small(), &FlowConfig::default(), &MaslovConfig::default()).unwrap();
    assert_eq!(r.records.len(), 1);
    let x = &r.records[0];
    assert!(x.x0.iter().all(|v| v.abs() < 1e-10));
    assert!((x.cz.to_f64() - x.bott.value).abs() <= 2.0);
    assert_eq!(x.cz.to_f64(), 1.0);
}

#[test]
fn hull_and_envelope() {
    let pts = [(0.0, 1.0), (1.0, 0.0), (2.0, 1.0), (1.0, 3.0), (0.5, 0.2), (1.5, 0.6)];
    let h = lower_hull(&pts);
    assert_eq!(h, vec![(0.0, 1.0), (0.5, 0.2), (1.0, 0.0), (2.0, 1.0)]);
    let lag = systems::pendulum();
    let (flow, mcfg) = (FlowConfig::default(), MaslovConfig::default());
    let r = find_periodic_orbits_up_to(&lag, 3, &small(), &flow, &mcfg).unwrap();
    let one = beta_estimate(&r.records[..1], 0.02, Some((0.0, 0.0))).unwrap();
    assert_eq!(one.bins.len(), 1);
    assert_eq!(one.hull.len(), 1);
    let curve = beta_estimate(&r.records, 0.02, None).unwrap();
    assert!(curve.hull_is_convex());
    for i in 0..=100 {
        let lo = curve.hull[0].0;
        let hi = curve.hull.last().unwrap().0;
        let x = lo + (hi - lo) * i as f64 / 100.0;
        let y = curve.hull_at(x).unwrap();
        assert!(curve.envelope.lower(x) <= y + 1e-12 && y <= curve.envelope.upper(x) + 1e-12);
    }
    for b in &curve.bins {
        if let (Some(beta), Some(r)) = (b.beta, b.witness_r) {
            assert!(beta >= curve.hull_at(r).unwrap() - 1e-12);
        }
    }
    // β̂(0) is attained by the hyperbolic equilibrium, action −1
    assert!((curve.bins[0].beta.unwrap() + 1.0).abs() < 1e-12);
    let w = theorem_main_witness(&lag, &r.records, Some(&curve), 1.0 / PI, 0.0, &flow).unwrap();
    assert_eq!(w.kind, WitnessKind::Orbit);
    let eq = &r.records[w.witnesses[0]];
    assert!(eq.x0.iter().all(|v| v.abs() < 1e-9));
    assert_eq!(w.moments.unwrap().second, 0.0);
    let none = theorem_main_witness(&lag, &r.records, Some(&curve), 0.6, 0.01, &flow).unwrap();
    assert_eq!(none.kind, WitnessKind::Inconclusive);
}

#[test]
fn flat_torus_every_orbit_is_a_zero_witness() {
    let lag = systems::flat_torus_geodesic(1);
    let (flow, mcfg) = (FlowConfig::default(), MaslovConfig::default());
    let r = find_periodic_orbits(&lag, 1, &small(), &flow, &mcfg).unwrap();
    assert!(!r.records.is_empty());
    for x in &r.records {
        assert!(x.bott.value.abs() <= x.bott.halfwidth);
    }
    let w = theorem_main_witness(&lag, &r.records, None, 0.0, 0.0, &flow).unwrap();
    assert_eq!(w.kind, WitnessKind::Orbit);
}

#[test]
fn sweep_fills_the_index_interval() {
    let (flow, mcfg) = (FlowConfig::default(), MaslovConfig::default());
    let recs = pendulum_sweep(8, 100.0, (0.05, 1.0 / PI - 0.005), &flow, &mcfg).unwrap();
    for r in &recs {
        assert!(r.bott_bound);
        // near the separatrix the computed orbit's period is sensitive to the energy
        assert!((r.period - period_oracle(r.energy)).abs() < 1e-4 * r.period, "{r:?}");
        assert!((r.bott.value - 2.0 / period_oracle(r.energy)).abs() <= r.bott.halfwidth + 1e-12);
        assert!((r.mu_hat.value - r.bott.value).abs() <= r.mu_hat.halfwidth + r.bott.halfwidth);
    }
    assert!(recs.windows(2).all(|w| w[1].energy < w[0].energy));
}

use maslov_core::flow::{monodromy_index, mu_t, Chart, FlowConfig, HamiltonianSystem};
use maslov_core::loops::{
    action, action_terms, iterate_loop, lemma1_check, length, max_acceleration, polygon_length, quadratic_form_index,
    random_fourier_loop, second_variation_index, slow_reparam, Boundary, FormConfig, Loop,
};
use maslov_core::maslov::MaslovConfig;
use maslov_core::systems;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

fn circle(m: usize, warp: f64) -> Loop {
    Loop::from_fn(1, Chart::Euclidean, m, vec![0, 0], |t| {
        let th = TAU * (t + warp * (TAU * t).sin() / TAU);
        DVector::from_column_slice(&[th.cos(), th.sin()])
    })
    .unwrap()
}

#[test]
fn circle_action_and_length() {
    let free = systems::harmonic_oscillator(&[0.0, 0.0]);
    let exact = 0.5 * TAU * TAU;
    let e1 = (action(&free, &circle(64, 0.0)) - exact).abs();
    let e2 = (action(&free, &circle(128, 0.0)) - exact).abs();
    assert!(e1 < 2e-2 && (e1 / e2 - 4.0).abs() < 0.05, "{e1} {e2}");
    assert!((length(&circle(64, 0.0)) - TAU).abs() < 1e-12);
    assert!((length(&circle(128, 0.5)) - TAU).abs() < 1e-9);
    assert!(polygon_length(&circle(64, 0.0)) < TAU);
}

#[test]
fn constant_loop_action() {
    let pend = systems::pendulum();
    for k in [1, 3] {
        let g = Loop::from_fn(k, Chart::Torus, 16, vec![0], |_| DVector::from_element(1, 0.7)).unwrap();
        assert!((action(&pend, &g) - 0.7f64.cos()).abs() < 1e-14);
        assert!(length(&g) < 1e-12);
    }
}

#[test]
fn iteration_scales_speeds() {
    let g = random_fourier_loop(2, Chart::Torus, 5, 1.0, 64, vec![1, 0], 3).unwrap();
    assert_eq!(iterate_loop(&g, 1).unwrap(), g);
    let g4 = iterate_loop(&g, 4).unwrap();
    for (a, b) in g.chord_velocities().iter().zip(g4.chord_velocities()) {
        assert!((a / 4.0 - b).amax() < 1e-12);
    }
    let flat = systems::flat_torus_geodesic(2);
    assert!((action(&flat, &g4) - action(&flat, &g) / 16.0).abs() < 1e-12);
}

#[test]
fn lemma1_on_magnetic_torus() {
    let lag = systems::magnetic_torus(11, 4, 0.8, 0.5);
    for seed in 0..20 {
        let g = random_fourier_loop(2, Chart::Torus, 8, 1.5, 128, vec![0, (seed % 3) as i64 - 1], seed).unwrap();
        for k in 1..=10 {
            let r = lemma1_check(&lag, &g, k).unwrap();
            assert!(r.holds && r.lhs <= r.intermediate + 1e-12 && r.intermediate <= r.rhs + 1e-12, "{seed} {k} {r:?}");
        }
    }
}

#[test]
fn change_of_variables_term_by_term() {
    // 𝔸_k(φ_k γ) = (2/k²)𝔸₁(γ) + ∫[⟨A(kt,γ),γ̇⟩/k − (2/k²)⟨A(t,γ),γ̇⟩ − V(kt,γ) + (2/k²)V(t,γ) − |γ̇|²/(2k²)]
    let lag = systems::magnetic_torus(5, 3, 0.6, 0.4);
    let g = random_fourier_loop(2, Chart::Torus, 6, 1.0, 96, vec![0, 0], 9).unwrap();
    let m = g.m() as i64;
    let h = 1.0 / m as f64;
    for k in [2usize, 5, 7] {
        let kf = k as f64;
        let mut rest = 0.0;
        for j in 0..m {
            let (a, b) = (g.node(j), g.node(j + 1));
            let q = (&a + &b) * 0.5;
            let v = (b - a) / h;
            let t = (j as f64 + 0.5) * h;
            rest += h
                * (lag.field.a(kf * t, &q).dot(&v) / kf - 2.0 / (kf * kf) * lag.field.a(t, &q).dot(&v) - lag.field.v(kf * t, &q)
                    + 2.0 / (kf * kf) * lag.field.v(t, &q)
                    - v.norm_squared() / (2.0 * kf * kf));
        }
        let lhs = action(&lag, &iterate_loop(&g, k).unwrap());
        let rhs = 2.0 / (kf * kf) * action(&lag, &g) + rest;
        assert!((lhs - rhs).abs() < 1e-12, "k={k}: {lhs} {rhs}");
    }
}

#[test]
fn free_lemma1_is_kinetic_scaling() {
    let free = systems::flat_torus_geodesic(2);
    let g = random_fourier_loop(2, Chart::Torus, 4, 1.0, 64, vec![0, 0], 1).unwrap();
    let r = lemma1_check(&free, &g, 3).unwrap();
    assert_eq!(r.c1, 0.0);
    assert!((r.lhs - action(&free, &g) / 9.0).abs() < 1e-12);
    let t = action_terms(&free, &g);
    assert_eq!((t.magnetic, t.potential), (0.0, 0.0));
}

#[test]
fn slow_reparametrization() {
    let uniform = slow_reparam(&circle(128, 0.0)).unwrap();
    for (a, b) in uniform.loop1.nodes().iter().zip(circle(128, 0.0).nodes()) {
        assert!((a - b).amax() < 1e-10);
    }
    let g = circle(256, 0.9);
    let r = slow_reparam(&g).unwrap();
    assert_eq!((r.sigma[0], *r.sigma.last().unwrap()), (0.0, 1.0));
    assert!(r.sigma.windows(2).all(|w| w[1] > w[0]));
    assert!(r.sup_speed <= r.normalizer + 1e-12 && r.normalizer <= r.bound);
    assert!(r.sup_speed <= 1.0 + TAU + 10.0 * g.spacing() * max_acceleration(&g));
    assert!((length(&r.loop1) - length(&g)).abs() < 1e-6);
}

// negative eigenvalues of −a φ̈ − c φ on [0, t] with zero ends: (jπ/t)² a < c
fn dirichlet_oracle(t: f64, a: f64, c: f64) -> usize {
    (t * (c / a).sqrt() / PI).floor() as usize
}

#[test]
fn dirichlet_model_form() {
    for (t, c) in [(1.0, 3.0), (2.0, 7.5), (5.0, 1.3), (3.3, 20.0)] {
        let spec = quadratic_form_index(1, t, Boundary::Dirichlet, &FormConfig::default(), |_, _| {
            Ok((DMatrix::from_element(1, 1, 0.5), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, -c)))
        })
        .unwrap();
        assert_eq!(spec.negative_count, dirichlet_oracle(t, 0.5, c), "t={t} c={c}");
        assert_eq!(spec.negative_count, (t * (2.0 * c).sqrt() / PI).floor() as usize);
        assert_eq!(spec.zero_count, 0);
    }
}

#[test]
fn second_variation_examples() {
    let flow = FlowConfig::default();
    let cfg = FormConfig::default();
    let pend = systems::pendulum();
    let eq = DVector::from_column_slice(&[0.0, 0.0]);
    let s = second_variation_index(&pend, 0.0, &eq, 4.0, Boundary::Dirichlet, &flow, &cfg).unwrap();
    assert_eq!(s.negative_count, 1);
    let flat = systems::flat_torus_geodesic(2);
    let x0 = DVector::from_column_slice(&[0.1, 0.2, 1.0, -0.4]);
    for t in [1.0, 10.0] {
        let s = second_variation_index(&flat, 0.0, &x0, t, Boundary::Dirichlet, &flow, &cfg).unwrap();
        assert_eq!((s.negative_count, s.zero_count), (0, 0));
    }
}

#[test]
fn morse_index_matches_maslov_on_librating_segments() {
    let flow = FlowConfig::default();
    let pend = systems::pendulum();
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(pend.hamiltonian());
    for (x0, t) in [([0.0, 1.0], 5.0), ([0.3, 0.9], 9.7), ([1.2, 0.0], 6.1), ([0.0, 1.7], 13.0)] {
        let x0 = DVector::from_column_slice(&x0);
        let s = second_variation_index(&pend, 0.0, &x0, t, Boundary::Dirichlet, &flow, &FormConfig::default()).unwrap();
        let mu = mu_t(sys.clone(), 0.0, &x0, t, &flow, &MaslovConfig::default()).unwrap();
        assert_eq!(mu.as_integer(), Some(s.negative_count as i64), "{x0:?} t={t}");
    }
}

#[test]
fn periodic_index_relations_at_equilibrium() {
    // m_k = 1 + 2⌊k/2π⌋ for ξ̈ + ξ = 0 with period k
    let flow = FlowConfig::default();
    let pend = systems::pendulum();
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(pend.hamiltonian());
    let eq = DVector::from_column_slice(&[0.0, 0.0]);
    for k in [1usize, 4, 7, 13] {
        let s = second_variation_index(&pend, 0.0, &eq, k as f64, Boundary::Periodic, &flow, &FormConfig::default()).unwrap();
        assert_eq!(s.negative_count, 1 + 2 * (k as f64 / TAU).floor() as usize);
        let cz = monodromy_index(sys.clone(), &eq, k as f64, &flow, &MaslovConfig::default()).unwrap().value;
        let lo = s.negative_count as f64;
        assert!(lo <= cz.to_f64() && cz.to_f64() <= lo + s.zero_count as f64);
    }
}

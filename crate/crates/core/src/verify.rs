//! Seeded property suites for the index axioms and the inequalities.
//!
//! Every case draws from its own generator seeded with `seed + case`, so a
//! suite report does not depend on thread count or on which other suites ran.

use crate::asymptotic::subadditivity_defect;
use crate::flow::{Chart, FlowConfig, HamiltonianSystem};
use crate::loops::{length, lemma1_check, max_acceleration, random_fourier_loop, slow_reparam};
use crate::maslov::{hormander_defect, intersection_dimension, maslov_index, LagrangianPath, MaslovConfig, SymplecticPath};
use crate::periodic::SweepRecord;
use crate::symplectic::{direct_sum_frame, random_lagrangian, random_symmetric, random_symplectic_with, standard_j, LagrangianFrame};
use crate::systems;
use crate::{HalfInt, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub const AXIOMS: [&str; 6] = ["naturality", "juxtaposition", "product", "homotopy", "localization", "zero"];
pub const INEQUALITIES: [&str; 5] = ["hormander", "subadditivity", "bott", "lemma1", "reparametrization"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseFailure {
    pub case: usize,
    pub n: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<CaseFailure>,
}

impl SuiteReport {
    pub fn ok(&self) -> bool {
        self.passed == self.cases && self.failures.is_empty()
    }
}

/// Dimension of case `case`: fixed when `n` is given, else cycling 1, 2, 3.
pub fn case_dim(n: Option<usize>, case: usize) -> usize {
    n.unwrap_or(1 + case % 3)
}

fn rng_for(seed: u64, case: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(case as u64))
}

type Check = Result<std::result::Result<(), String>>;

fn run_suite<F>(name: &str, cases: usize, n: Option<usize>, f: F) -> SuiteReport
where
    F: Fn(usize, usize) -> Check + Sync,
{
    let outcomes: Vec<Option<CaseFailure>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let dim = case_dim(n, case);
            match f(case, dim) {
                Ok(Ok(())) => None,
                Ok(Err(detail)) => Some(CaseFailure { case, n: dim, detail }),
                Err(e) => Some(CaseFailure { case, n: dim, detail: format!("error: {e}") }),
            }
        })
        .collect();
    let failures: Vec<CaseFailure> = outcomes.into_iter().flatten().collect();
    SuiteReport { name: name.into(), cases, passed: cases - failures.len(), failures }
}

fn expect_eq(what: &str, a: HalfInt, b: HalfInt) -> std::result::Result<(), String> {
    if a == b {
        Ok(())
    } else {
        Err(format!("{what}: {a} ≠ {b}"))
    }
}

/// `t ↦ exp(J(t S₁ + t² S₂)) L₀` on `[0, 1]`.
pub fn random_lagrangian_path<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Result<LagrangianPath> {
    let s1 = random_symmetric(2 * n, scale, rng);
    let s2 = random_symmetric(2 * n, scale, rng);
    let l0 = random_lagrangian(n, rng).columns().clone();
    let j = standard_j(n);
    LagrangianPath::from_fn(n, 0.0, 1.0, 33, move |t| (&j * (&s1 * t + &s2 * (t * t))).exp() * &l0)
}

/// `t ↦ Ψ₀ exp(J(t S₁ + t² S₂))` on `[0, 1]`.
pub fn random_symplectic_path<R: Rng>(n: usize, scale: f64, rng: &mut R) -> Result<SymplecticPath> {
    let (psi, s1, s2) = symplectic_path_data(n, scale, rng);
    let j = standard_j(n);
    SymplecticPath::from_fn(n, 0.0, 1.0, 33, move |t| &psi * (&j * (&s1 * t + &s2 * (t * t))).exp())
}

fn symplectic_path_data<R: Rng>(n: usize, scale: f64, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let s1 = random_symmetric(2 * n, scale, rng);
    let s2 = random_symmetric(2 * n, scale, rng);
    let psi = random_symplectic_with(n, 0.5, rng).into_matrix();
    (psi, s1, s2)
}

/// Signature of a symmetric matrix.
pub fn signature(s: &DMatrix<f64>) -> i64 {
    s.clone().symmetric_eigenvalues().iter().map(|&x| (x > 0.0) as i64 - (x < 0.0) as i64).sum()
}

fn min_abs_eigenvalue(s: &DMatrix<f64>) -> f64 {
    s.clone().symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()))
}

/// A quadratic symmetric path `A + tB + t²C` with `|eig| ≥ gap` at both ends.
fn nondegenerate_symmetric_path<R: Rng>(n: usize, gap: f64, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    loop {
        let a = random_symmetric(n, 2.0, rng);
        let b = random_symmetric(n, 2.0, rng);
        let c = random_symmetric(n, 2.0, rng);
        let end = &a + &b + &c;
        if min_abs_eigenvalue(&a) >= gap && min_abs_eigenvalue(&end) >= gap {
            return (a, b, c);
        }
    }
}

fn naturality(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    let p = random_lagrangian_path(n, 6.0, &mut rng)?;
    let l0 = random_lagrangian(n, &mut rng);
    let psi = random_symplectic_with(n, 0.7, &mut rng);
    let mu = maslov_index(&p, &l0, cfg)?.value;
    let mapped = maslov_index(&p.map(&psi)?, &l0.apply(&psi)?, cfg)?.value;
    Ok(expect_eq("μ(Ψλ, Ψλ₀) vs μ(λ, λ₀)", mapped, mu))
}

fn juxtaposition(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    let p = random_lagrangian_path(n, 6.0, &mut rng)?;
    let l0 = random_lagrangian(n, &mut rng);
    let mut c = rng.gen_range(0.2..0.8);
    let mut tries = 0;
    while intersection_dimension(&p.eval(c), &l0, 1e-4)? != 0 {
        c = rng.gen_range(0.2..0.8);
        tries += 1;
        if tries > 50 {
            return Ok(Err("no transverse split point".into()));
        }
    }
    let mu = maslov_index(&p, &l0, cfg)?.value;
    let left = maslov_index(&p.restrict(0.0, c)?, &l0, cfg)?.value;
    let right = maslov_index(&p.restrict(c, 1.0)?, &l0, cfg)?.value;
    Ok(expect_eq(&format!("split at {c:.4}"), left + right, mu))
}

fn product(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    let n2 = 1 + case % 2;
    let p = random_lagrangian_path(n, 6.0, &mut rng)?;
    let q = random_lagrangian_path(n2, 4.0, &mut rng)?;
    let l0 = random_lagrangian(n, &mut rng);
    let m0 = random_lagrangian(n2, &mut rng);
    let a = maslov_index(&p, &l0, cfg)?.value;
    let b = maslov_index(&q, &m0, cfg)?.value;
    let sum = maslov_index(&p.direct_sum(&q)?, &direct_sum_frame(&l0, &m0), cfg)?.value;
    Ok(expect_eq("μ(λ′⊕λ″) vs μ(λ′)+μ(λ″)", sum, a + b))
}

fn homotopy(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    let s1 = random_symmetric(2 * n, 6.0, &mut rng);
    let s2 = random_symmetric(2 * n, 6.0, &mut rng);
    let s3 = random_symmetric(2 * n, 6.0, &mut rng);
    let l = random_lagrangian(n, &mut rng).columns().clone();
    let l0 = random_lagrangian(n, &mut rng);
    let j = standard_j(n);
    let deform: f64 = rng.gen_range(0.5..1.5);
    let warp: f64 = rng.gen_range(-0.9..0.9);
    let path = |s: f64| {
        let (j, s1, s2, s3, l) = (j.clone(), s1.clone(), s2.clone(), s3.clone(), l.clone());
        LagrangianPath::from_fn(n, 0.0, 1.0, 33, move |t| {
            (&j * (&s1 * t + &s2 * (t * t) + &s3 * (s * t * (1.0 - t)))).exp() * &l
        })
    };
    let base = path(0.0)?;
    let mu = maslov_index(&base, &l0, cfg)?.value;
    // monotone change of parameter fixing the ends
    let re = base.reparametrize(0.0, 1.0, move |t| t + warp * (PI * t).sin() * t / PI)?;
    if let Err(e) = expect_eq("reparametrized", maslov_index(&re, &l0, cfg)?.value, mu) {
        return Ok(Err(e));
    }
    let moved = path(deform)?;
    Ok(expect_eq("fixed-endpoint homotopy", maslov_index(&moved, &l0, cfg)?.value, mu))
}

/// `μ(gr S, vertical) = (sign S(1) − sign S(0))/2` for a path with
/// nondegenerate ends.
pub fn localization_case(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    let (a, b, c) = nondegenerate_symmetric_path(n, 1e-3, &mut rng);
    let expected = HalfInt::from_doubled(signature(&(&a + &b + &c)) - signature(&a));
    let p = LagrangianPath::from_fn(n, 0.0, 1.0, 17, move |t| {
        let s = &a + &b * t + &c * (t * t);
        LagrangianFrame::fiber_graph(&s).map(|f| f.columns().clone()).unwrap_or_else(|_| DMatrix::zeros(2 * n, n))
    })?;
    Ok(expect_eq("localization", maslov_index(&p, &LagrangianFrame::vertical(n), cfg)?.value, expected))
}

fn zero(seed: u64, case: usize, n: usize, cfg: &MaslovConfig) -> Check {
    let mut rng = rng_for(seed, case);
    // S(t) = P(t)ᵀ Σ P(t) keeps its inertia, so gr S never meets the vertical
    let sigma = DMatrix::from_fn(n, n, |i, j| if i != j { 0.0 } else if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
    let mut b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let norm = b.norm();
    if norm > 0.0 {
        b *= 0.8 / norm;
    }
    let psi = random_symplectic_with(n, 0.5, &mut rng);
    let s = move |t: f64| {
        let p = DMatrix::identity(n, n) + &b * t;
        p.transpose() * &sigma * p
    };
    let s2 = s.clone();
    let transverse = LagrangianPath::from_fn(n, 0.0, 1.0, 17, move |t| LagrangianFrame::fiber_graph(&s2(t)).unwrap().columns().clone())?;
    let v = LagrangianFrame::vertical(n);
    let mu = maslov_index(&transverse.map(&psi)?, &v.apply(&psi)?, cfg)?.value;
    if let Err(e) = expect_eq("transverse stratum", mu, HalfInt::from_int(0)) {
        return Ok(Err(e));
    }
    // one constant vertical direction gives a stratum of dimension 1
    let fixed = LagrangianPath::from_fn(1, 0.0, 1.0, 3, |_| LagrangianFrame::vertical(1).columns().clone())?;
    let stacked = fixed.direct_sum(&transverse)?;
    let big = direct_sum_frame(&LagrangianFrame::vertical(1), &v);
    Ok(expect_eq("dimension-one stratum", maslov_index(&stacked, &big, cfg)?.value, HalfInt::from_int(0)))
}

/// Runs one named axiom suite.
pub fn axiom_suite(name: &str, n: Option<usize>, cases: usize, seed: u64, cfg: &MaslovConfig) -> Result<SuiteReport> {
    let f: fn(u64, usize, usize, &MaslovConfig) -> Check = match name {
        "naturality" => naturality,
        "juxtaposition" => juxtaposition,
        "product" => product,
        "homotopy" => homotopy,
        "localization" => localization_case,
        "zero" => zero,
        _ => return Err(crate::Error::Invalid(format!("unknown axiom suite {name:?}"))),
    };
    Ok(run_suite(name, cases, n, |case, dim| f(seed, case, dim, cfg)))
}

pub fn all_axioms(n: Option<usize>, cases: usize, seed: u64, cfg: &MaslovConfig) -> Result<Vec<SuiteReport>> {
    AXIOMS.iter().map(|name| axiom_suite(name, n, cases, seed, cfg)).collect()
}

/// `|μ_CZ(Φ) − μ(Φλ₀, λ₀)| ≤ 2n` on `per_n` random paths for each `n = 1..=n_max`.
pub fn hormander_suite(n_max: usize, per_n: usize, seed: u64, cfg: &MaslovConfig) -> SuiteReport {
    run_suite("hormander", n_max * per_n, None, |case, _| {
        let n = 1 + case / per_n;
        let mut rng = rng_for(seed, case);
        let p = random_symplectic_path(n, 6.0, &mut rng)?;
        let l0 = random_lagrangian(n, &mut rng);
        let d = hormander_defect(&p, &l0, cfg)?;
        Ok(if d.abs() <= HalfInt::from_int(2 * n as i64) { Ok(()) } else { Err(format!("n={n}: defect {d}")) })
    })
}

/// The defect of `Φ` and of `t ↦ Φ(t) exp(J sin(πt) S)` agree, the two paths
/// sharing their endpoints.
pub fn hormander_pairs(pairs: usize, seed: u64, cfg: &MaslovConfig) -> SuiteReport {
    run_suite("hormander-pairs", pairs, None, |case, n| {
        let mut rng = rng_for(seed, case);
        // milder than the bound suite: strongly hyperbolic paths sweep fast
        // loops between samples that no sampled index can resolve
        let (psi, s1, s2) = symplectic_path_data(n, 2.0, &mut rng);
        let s3 = random_symmetric(2 * n, 2.0, &mut rng);
        let l0 = random_lagrangian(n, &mut rng);
        let j = standard_j(n);
        let phi = move |t: f64| &psi * (&j * (&s1 * t + &s2 * (t * t))).exp();
        let phi2 = phi.clone();
        let j2 = standard_j(n);
        let a = SymplecticPath::from_fn(n, 0.0, 1.0, 33, phi)?;
        let b = SymplecticPath::from_fn(n, 0.0, 1.0, 33, move |t| phi2(t) * (&j2 * &s3 * (PI * t).sin()).exp())?;
        Ok(expect_eq("endpoint-matched defects", hormander_defect(&b, &l0, cfg)?, hormander_defect(&a, &l0, cfg)?))
    })
}

/// `|μ_{t+t′} − μ_t − μ_{t′}∘φ_t| ≤ 2n` along random pendulum orbits.
pub fn subadditivity_suite(orbits: usize, seed: u64, flow: &FlowConfig, cfg: &MaslovConfig) -> SuiteReport {
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(systems::pendulum().hamiltonian());
    run_suite("subadditivity", orbits, Some(1), |case, _| {
        let mut rng = rng_for(seed, case);
        let x = DVector::from_column_slice(&[rng.gen_range(-PI..PI), rng.gen_range(-2.5..2.5)]);
        let t = rng.gen_range(0.0..20.0);
        let t2 = rng.gen_range(0.0..20.0);
        let d = subadditivity_defect(sys.clone(), 0.0, &x, t, t2, flow, cfg)?;
        Ok(if d.abs() <= HalfInt::from_int(2) { Ok(()) } else { Err(format!("t={t:.3} t′={t2:.3}: defect {d}")) })
    })
}

/// Every sweep record satisfies `|μ_CZ^k − k μ̂| ≤ 2n` on all its iterates.
pub fn bott_suite(records: &[SweepRecord]) -> SuiteReport {
    let failures: Vec<CaseFailure> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.bott_bound)
        .map(|(case, r)| CaseFailure { case, n: 1, detail: format!("energy {}", r.energy) })
        .collect();
    SuiteReport { name: "bott".into(), cases: records.len(), passed: records.len() - failures.len(), failures }
}

/// Magnetic-torus loops used by the loop suites.
fn suite_loop(seed: u64, case: usize) -> Result<crate::loops::Loop> {
    let mut rng = rng_for(seed, case);
    let winding = vec![rng.gen_range(-1..=1), rng.gen_range(-1..=1)];
    let modes = rng.gen_range(1..=8);
    let amp = rng.gen_range(0.2..1.5);
    random_fourier_loop(2, Chart::Torus, modes, amp, 256, winding, seed.wrapping_mul(31).wrapping_add(case as u64))
}

/// The magnetic torus the loop suites run on.
pub fn suite_torus() -> systems::EmLagrangian {
    systems::magnetic_torus(11, 4, 0.8, 0.5)
}

/// `𝔸_k(φ_k γ) ≤ (2/k²)𝔸₁(γ) + c₁` for `k = 1..=k_max`.
pub fn lemma1_suite(loops: usize, k_max: usize, seed: u64) -> SuiteReport {
    let lag = suite_torus();
    run_suite("lemma1", loops, Some(2), |case, _| {
        let g = suite_loop(seed, case)?;
        for k in 1..=k_max {
            let r = lemma1_check(&lag, &g, k)?;
            if !r.holds {
                return Ok(Err(format!("k={k}: {} > {}", r.lhs, r.rhs)));
            }
        }
        Ok(Ok(()))
    })
}

/// Slow reparametrization: speed bound with the grid allowance, exact
/// endpoints of `σ`, and length preserved within `1e-6`.
pub fn reparametrization_suite(loops: usize, seed: u64) -> SuiteReport {
    run_suite("reparametrization", loops, Some(2), |case, _| {
        let g = suite_loop(seed, case)?;
        let r = slow_reparam(&g)?;
        let allowance = r.bound + 10.0 * g.spacing() * max_acceleration(&g);
        if r.sup_speed > allowance {
            return Ok(Err(format!("speed {} > {}", r.sup_speed, allowance)));
        }
        if r.sigma[0] != 0.0 || *r.sigma.last().unwrap() != 1.0 {
            return Ok(Err("σ endpoints".into()));
        }
        let dl = (length(&r.loop1) - length(&g)).abs();
        Ok(if dl <= 1e-6 { Ok(()) } else { Err(format!("length changed by {dl:e}")) })
    })
}

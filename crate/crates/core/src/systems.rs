//! Electromagnetic Lagrangians `L = ½|v|² + ⟨A(t,q), v⟩ − V(t,q)`, their
//! Fenchel duals `H = ½|p − A|² + V`, and the catalog of reference systems.
//!
//! Potentials are 1-periodic in time. On the torus chart they are also
//! 2π-periodic in every angle. The pendulum is `H = p²/2 − cos q`, i.e.
//! `V = −cos q`.

use crate::error::{Error, Result};
use crate::flow::{Chart, HamiltonianSystem, OrbitSegment};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

/// Vector and scalar potential with derivatives in `q` (and `∂_t A`).
pub trait EmField: Send + Sync {
    fn n(&self) -> usize;
    fn a(&self, t: f64, q: &DVector<f64>) -> DVector<f64>;
    /// `(∂A_i/∂q_j)_{ij}`.
    fn da(&self, t: f64, q: &DVector<f64>) -> DMatrix<f64>;
    /// `∂²A_i/∂q_j∂q_k` as one matrix per component `i`.
    fn d2a(&self, t: f64, q: &DVector<f64>) -> Vec<DMatrix<f64>>;
    fn a_t(&self, t: f64, q: &DVector<f64>) -> DVector<f64>;
    fn v(&self, t: f64, q: &DVector<f64>) -> f64;
    fn dv(&self, t: f64, q: &DVector<f64>) -> DVector<f64>;
    fn d2v(&self, t: f64, q: &DVector<f64>) -> DMatrix<f64>;
    /// Whether the potentials depend on time.
    fn time_dependent(&self) -> bool;
}

/// One term `c · cos(⟨m, q⟩ + 2π f t + φ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coeff: f64,
    pub m: Vec<i32>,
    pub freq: i32,
    pub phase: f64,
}

impl TrigTerm {
    fn arg(&self, t: f64, q: &DVector<f64>) -> f64 {
        self.m.iter().zip(q.iter()).map(|(&m, &x)| m as f64 * x).sum::<f64>() + TAU * self.freq as f64 * t + self.phase
    }
}

/// Finite trigonometric potentials, periodic in angles and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigField {
    pub n: usize,
    /// Terms of `A_i` for each component `i`.
    pub a_terms: Vec<Vec<TrigTerm>>,
    pub v_terms: Vec<TrigTerm>,
}

impl TrigField {
    pub fn scalar(n: usize, v_terms: Vec<TrigTerm>) -> Self {
        TrigField { n, a_terms: vec![Vec::new(); n], v_terms }
    }

    /// Random field with modes `|m_j| ≤ max_mode`, time frequencies in
    /// `{0, 1}` and coefficients uniform in `[−amp, amp]`.
    pub fn random(n: usize, terms: usize, max_mode: i32, amp_a: f64, amp_v: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let term = |amp: f64, rng: &mut ChaCha8Rng| TrigTerm {
            coeff: rng.gen_range(-amp..=amp),
            m: (0..n).map(|_| rng.gen_range(-max_mode..=max_mode)).collect(),
            freq: rng.gen_range(0..=1),
            phase: rng.gen_range(0.0..TAU),
        };
        let a_terms = (0..n).map(|_| (0..terms).map(|_| term(amp_a, &mut rng)).collect()).collect();
        let v_terms = (0..terms).map(|_| term(amp_v, &mut rng)).collect();
        TrigField { n, a_terms, v_terms }
    }
}

fn trig_value(terms: &[TrigTerm], t: f64, q: &DVector<f64>) -> f64 {
    terms.iter().map(|s| s.coeff * s.arg(t, q).cos()).sum()
}

fn trig_grad(terms: &[TrigTerm], n: usize, t: f64, q: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(n);
    for s in terms {
        let f = -s.coeff * s.arg(t, q).sin();
        for j in 0..n {
            g[j] += f * s.m[j] as f64;
        }
    }
    g
}

fn trig_hess(terms: &[TrigTerm], n: usize, t: f64, q: &DVector<f64>) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n, n);
    for s in terms {
        let f = -s.coeff * s.arg(t, q).cos();
        for j in 0..n {
            for k in 0..n {
                h[(j, k)] += f * (s.m[j] * s.m[k]) as f64;
            }
        }
    }
    h
}

fn trig_dt(terms: &[TrigTerm], t: f64, q: &DVector<f64>) -> f64 {
    terms.iter().map(|s| -s.coeff * TAU * s.freq as f64 * s.arg(t, q).sin()).sum()
}

impl EmField for TrigField {
    fn n(&self) -> usize {
        self.n
    }
    fn a(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| trig_value(&self.a_terms[i], t, q))
    }
    fn da(&self, t: f64, q: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            m.set_row(i, &trig_grad(&self.a_terms[i], self.n, t, q).transpose());
        }
        m
    }
    fn d2a(&self, t: f64, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        (0..self.n).map(|i| trig_hess(&self.a_terms[i], self.n, t, q)).collect()
    }
    fn a_t(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| trig_dt(&self.a_terms[i], t, q))
    }
    fn v(&self, t: f64, q: &DVector<f64>) -> f64 {
        trig_value(&self.v_terms, t, q)
    }
    fn dv(&self, t: f64, q: &DVector<f64>) -> DVector<f64> {
        trig_grad(&self.v_terms, self.n, t, q)
    }
    fn d2v(&self, t: f64, q: &DVector<f64>) -> DMatrix<f64> {
        trig_hess(&self.v_terms, self.n, t, q)
    }
    fn time_dependent(&self) -> bool {
        self.a_terms.iter().flatten().chain(self.v_terms.iter()).any(|s| s.freq != 0 && s.coeff != 0.0)
    }
}

/// `A = B q`, `V = ½ qᵀ K q` on ℝⁿ (time independent).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticField {
    pub b: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

impl EmField for QuadraticField {
    fn n(&self) -> usize {
        self.k.nrows()
    }
    fn a(&self, _t: f64, q: &DVector<f64>) -> DVector<f64> {
        &self.b * q
    }
    fn da(&self, _t: f64, _q: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }
    fn d2a(&self, _t: f64, _q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        vec![DMatrix::zeros(self.n(), self.n()); self.n()]
    }
    fn a_t(&self, _t: f64, _q: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.n())
    }
    fn v(&self, _t: f64, q: &DVector<f64>) -> f64 {
        0.5 * q.dot(&(&self.k * q))
    }
    fn dv(&self, _t: f64, q: &DVector<f64>) -> DVector<f64> {
        &self.k * q
    }
    fn d2v(&self, _t: f64, _q: &DVector<f64>) -> DMatrix<f64> {
        self.k.clone()
    }
    fn time_dependent(&self) -> bool {
        false
    }
}

/// Sup norms of `|A|` and `|V|` over one time period and the fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupNorms {
    pub a: f64,
    pub v: f64,
    /// `sup |∂_t A + ∇V|`, the constant in the velocity growth estimate.
    pub force: f64,
}

/// An electromagnetic Lagrangian on ℝⁿ or Tⁿ.
#[derive(Clone)]
pub struct EmLagrangian {
    pub name: String,
    pub chart: Chart,
    pub field: Arc<dyn EmField>,
    norms: Arc<OnceLock<SupNorms>>,
}

impl std::fmt::Debug for EmLagrangian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmLagrangian").field("name", &self.name).field("chart", &self.chart).finish()
    }
}

impl EmLagrangian {
    pub fn new(name: impl Into<String>, chart: Chart, field: Arc<dyn EmField>) -> Self {
        EmLagrangian { name: name.into(), chart, field, norms: Arc::new(OnceLock::new()) }
    }

    pub fn n(&self) -> usize {
        self.field.n()
    }

    pub fn lagrangian(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> f64 {
        0.5 * v.norm_squared() + self.field.a(t, q).dot(v) - self.field.v(t, q)
    }

    /// `p = v + A(t, q)`.
    pub fn legendre(&self, t: f64, q: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v + self.field.a(t, q)
    }

    /// `v = p − A(t, q)`.
    pub fn inverse_legendre(&self, t: f64, q: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        p - self.field.a(t, q)
    }

    pub fn hamiltonian(&self) -> EmHamiltonian {
        EmHamiltonian { lag: self.clone() }
    }

    /// Grid-scanned sup norms (cached). Only meaningful on the torus chart,
    /// where the fundamental domain is compact; on ℝⁿ the scan covers
    /// `[−π, π]ⁿ`.
    pub fn sup_norms(&self) -> SupNorms {
        *self.norms.get_or_init(|| self.scan_norms())
    }

    fn scan_norms(&self) -> SupNorms {
        let n = self.n();
        let per_dim: usize = match n {
            1 => 1024,
            2 => 128,
            _ => 24,
        };
        let slices = if self.field.time_dependent() { 32 } else { 1 };
        let total = per_dim.pow(n as u32);
        let (mut sa, mut sv, mut sf) = (0.0f64, 0.0f64, 0.0f64);
        for ts in 0..slices {
            let t = ts as f64 / slices as f64;
            for idx in 0..total {
                let mut r = idx;
                let q = DVector::from_fn(n, |_, _| {
                    let k = r % per_dim;
                    r /= per_dim;
                    -std::f64::consts::PI + TAU * k as f64 / per_dim as f64
                });
                sa = sa.max(self.field.a(t, &q).norm());
                sv = sv.max(self.field.v(t, &q).abs());
                sf = sf.max((self.field.a_t(t, &q) + self.field.dv(t, &q)).norm());
            }
        }
        SupNorms { a: sa, v: sv, force: sf }
    }
}

/// `H(t, q, p) = ½|p − A|² + V`.
#[derive(Clone, Debug)]
pub struct EmHamiltonian {
    pub lag: EmLagrangian,
}

impl HamiltonianSystem for EmHamiltonian {
    fn n(&self) -> usize {
        self.lag.n()
    }
    fn chart(&self) -> Chart {
        self.lag.chart
    }
    fn is_autonomous(&self) -> bool {
        !self.lag.field.time_dependent()
    }
    fn hamiltonian(&self, t: f64, x: &DVector<f64>) -> f64 {
        let n = self.n();
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        0.5 * (p - self.lag.field.a(t, &q)).norm_squared() + self.lag.field.v(t, &q)
    }
    fn gradient(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n();
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        let w = p - self.lag.field.a(t, &q);
        let da = self.lag.field.da(t, &q);
        let hq = -(da.transpose() * &w) + self.lag.field.dv(t, &q);
        let mut g = DVector::zeros(2 * n);
        g.rows_mut(0, n).copy_from(&hq);
        g.rows_mut(n, n).copy_from(&w);
        g
    }
    fn hessian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let q = x.rows(0, n).into_owned();
        let p = x.rows(n, n).into_owned();
        let w = p - self.lag.field.a(t, &q);
        let da = self.lag.field.da(t, &q);
        let d2a = self.lag.field.d2a(t, &q);
        let mut hqq = da.transpose() * &da + self.lag.field.d2v(t, &q);
        for (i, m) in d2a.iter().enumerate() {
            hqq -= m * w[i];
        }
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&hqq);
        h.view_mut((n, 0), (n, n)).copy_from(&(-&da));
        h.view_mut((0, n), (n, n)).copy_from(&(-da.transpose()));
        h.view_mut((n, n), (n, n)).fill_with_identity();
        h
    }
    fn analytic_hessian(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        self.lag.name.clone()
    }
}

/// `H = q p`: a hyperbolic saddle on ℝ².
#[derive(Clone, Copy, Debug, Default)]
pub struct InvertedSaddle;

impl HamiltonianSystem for InvertedSaddle {
    fn n(&self) -> usize {
        1
    }
    fn chart(&self) -> Chart {
        Chart::Euclidean
    }
    fn is_autonomous(&self) -> bool {
        true
    }
    fn hamiltonian(&self, _t: f64, x: &DVector<f64>) -> f64 {
        x[0] * x[1]
    }
    fn gradient(&self, _t: f64, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![x[1], x[0]])
    }
    fn hessian(&self, _t: f64, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }
    fn analytic_hessian(&self) -> bool {
        true
    }
    fn name(&self) -> String {
        "inverted_saddle".into()
    }
}

/// Catalog entry selected by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Pendulum,
    HarmonicOscillator {
        #[serde(default = "default_omega")]
        omega: Vec<f64>,
    },
    InvertedSaddle,
    FlatTorusGeodesic {
        #[serde(default = "default_two")]
        n: usize,
    },
    MagneticTorus {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_terms")]
        terms: usize,
        #[serde(default = "default_amp")]
        amp_a: f64,
        #[serde(default = "default_amp")]
        amp_v: f64,
    },
    UniformMagnetic {
        #[serde(default = "default_one")]
        b: f64,
    },
    ForcedPendulum {
        #[serde(default = "default_eps")]
        epsilon: f64,
    },
}

fn default_omega() -> Vec<f64> {
    vec![1.0]
}
fn default_two() -> usize {
    2
}
fn default_seed() -> u64 {
    1
}
fn default_terms() -> usize {
    3
}
fn default_amp() -> f64 {
    0.5
}
fn default_one() -> f64 {
    1.0
}
fn default_eps() -> f64 {
    0.1
}

/// A resolved catalog system.
#[derive(Clone)]
pub struct CatalogSystem {
    pub name: String,
    pub hamiltonian: Arc<dyn HamiltonianSystem>,
    pub lagrangian: Option<EmLagrangian>,
}

impl std::fmt::Debug for CatalogSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogSystem").field("name", &self.name).finish()
    }
}

pub const CATALOG: [&str; 7] = [
    "pendulum",
    "harmonic_oscillator",
    "inverted_saddle",
    "flat_torus_geodesic",
    "magnetic_torus",
    "uniform_magnetic",
    "forced_pendulum",
];

fn cos_term(coeff: f64, m: Vec<i32>, freq: i32) -> TrigTerm {
    TrigTerm { coeff, m, freq, phase: 0.0 }
}

fn from_lagrangian(l: EmLagrangian) -> CatalogSystem {
    CatalogSystem { name: l.name.clone(), hamiltonian: Arc::new(l.hamiltonian()), lagrangian: Some(l) }
}

/// `H = p²/2 − cos q` on T*S¹.
pub fn pendulum() -> EmLagrangian {
    EmLagrangian::new("pendulum", Chart::Torus, Arc::new(TrigField::scalar(1, vec![cos_term(-1.0, vec![1], 0)])))
}

/// Complete elliptic integral of the first kind `K(k)` by the AGM.
pub fn elliptic_k(k: f64) -> f64 {
    let (mut a, mut b) = (1.0, (1.0 - k * k).sqrt());
    while (a - b).abs() > 1e-15 * a {
        (a, b) = (0.5 * (a + b), (a * b).sqrt());
    }
    std::f64::consts::PI / (2.0 * a)
}

/// Period `4K(k)`, `k² = (1 + E)/2`, of the librating pendulum orbit of energy `E ∈ (−1, 1)`.
pub fn pendulum_period(energy: f64) -> Result<f64> {
    if !(energy > -1.0 && energy < 1.0) {
        return Err(Error::Invalid(format!("energy {energy} is not librating")));
    }
    Ok(4.0 * elliptic_k(((1.0 + energy) / 2.0).sqrt()))
}

/// State `(0, √(2(E + 1)))` on the pendulum orbit of energy `E`.
pub fn pendulum_state(energy: f64) -> DVector<f64> {
    DVector::from_column_slice(&[0.0, (2.0 * (energy + 1.0)).max(0.0).sqrt()])
}

/// Librating energy whose frequency `2π/τ(E)` equals `omega ∈ (0, 1)`, by bisection.
pub fn pendulum_energy_for_frequency(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::Invalid(format!("frequency {omega} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if TAU / pendulum_period(mid)? > omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `V = −(1 + ε cos 2πt) cos q`.
pub fn forced_pendulum(eps: f64) -> EmLagrangian {
    let terms = vec![
        cos_term(-1.0, vec![1], 0),
        cos_term(-0.5 * eps, vec![1], 1),
        cos_term(-0.5 * eps, vec![1], -1),
    ];
    EmLagrangian::new("forced_pendulum", Chart::Torus, Arc::new(TrigField::scalar(1, terms)))
}

/// `H = Σ (pᵢ² + ωᵢ² qᵢ²)/2` on ℝⁿ.
pub fn harmonic_oscillator(omega: &[f64]) -> EmLagrangian {
    let n = omega.len();
    let k = DMatrix::from_diagonal(&DVector::from_iterator(n, omega.iter().map(|w| w * w)));
    EmLagrangian::new("harmonic_oscillator", Chart::Euclidean, Arc::new(QuadraticField { b: DMatrix::zeros(n, n), k }))
}

/// `H = |p|²/2` on T*Tⁿ.
pub fn flat_torus_geodesic(n: usize) -> EmLagrangian {
    EmLagrangian::new("flat_torus_geodesic", Chart::Torus, Arc::new(TrigField::scalar(n, Vec::new())))
}

/// Random trigonometric magnetic field and potential on T².
pub fn magnetic_torus(seed: u64, terms: usize, amp_a: f64, amp_v: f64) -> EmLagrangian {
    EmLagrangian::new("magnetic_torus", Chart::Torus, Arc::new(TrigField::random(2, terms, 2, amp_a, amp_v, seed)))
}

/// Uniform field `A = (b/2)(−q₂, q₁)` on ℝ²: velocities rotate at rate `b`.
pub fn uniform_magnetic(b: f64) -> EmLagrangian {
    let bm = DMatrix::from_row_slice(2, 2, &[0.0, -0.5 * b, 0.5 * b, 0.0]);
    EmLagrangian::new("uniform_magnetic", Chart::Euclidean, Arc::new(QuadraticField { b: bm, k: DMatrix::zeros(2, 2) }))
}

pub fn build(spec: &SystemSpec) -> Result<CatalogSystem> {
    Ok(match spec {
        SystemSpec::Pendulum => from_lagrangian(pendulum()),
        SystemSpec::HarmonicOscillator { omega } => {
            if omega.is_empty() || omega.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::Invalid("omega must be a non-empty list of positive numbers".into()));
            }
            from_lagrangian(harmonic_oscillator(omega))
        }
        SystemSpec::InvertedSaddle => {
            CatalogSystem { name: "inverted_saddle".into(), hamiltonian: Arc::new(InvertedSaddle), lagrangian: None }
        }
        SystemSpec::FlatTorusGeodesic { n } => {
            if *n == 0 {
                return Err(Error::Invalid("n must be positive".into()));
            }
            from_lagrangian(flat_torus_geodesic(*n))
        }
        SystemSpec::MagneticTorus { seed, terms, amp_a, amp_v } => from_lagrangian(magnetic_torus(*seed, *terms, *amp_a, *amp_v)),
        SystemSpec::UniformMagnetic { b } => from_lagrangian(uniform_magnetic(*b)),
        SystemSpec::ForcedPendulum { epsilon } => from_lagrangian(forced_pendulum(*epsilon)),
    })
}

pub fn by_name(name: &str) -> Result<CatalogSystem> {
    let spec = match name {
        "pendulum" => SystemSpec::Pendulum,
        "harmonic_oscillator" => SystemSpec::HarmonicOscillator { omega: default_omega() },
        "inverted_saddle" => SystemSpec::InvertedSaddle,
        "flat_torus_geodesic" => SystemSpec::FlatTorusGeodesic { n: 2 },
        "magnetic_torus" => SystemSpec::MagneticTorus { seed: 1, terms: 3, amp_a: 0.5, amp_v: 0.5 },
        "uniform_magnetic" => SystemSpec::UniformMagnetic { b: 1.0 },
        "forced_pendulum" => SystemSpec::ForcedPendulum { epsilon: default_eps() },
        other => return Err(Error::Invalid(format!("unknown system '{other}'; known: {}", CATALOG.join(", ")))),
    };
    build(&spec)
}

/// Result of the velocity growth check along an orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c1: f64,
    /// Largest observed `|d/dt log(1 + |γ̇|²)|` between samples.
    pub max_rate: f64,
    pub holds: bool,
}

/// Checks `1 + |γ̇(t)|² ≤ (1 + |γ̇(s)|²) e^{c₁|t−s|}` along the orbit samples,
/// with `c₁ = sup |∂_t A + ∇V|` unless overridden.
pub fn growth_check(lag: &EmLagrangian, orbit: &OrbitSegment, c1: Option<f64>) -> GrowthReport {
    let n = lag.n();
    let c1 = c1.unwrap_or_else(|| lag.sup_norms().force);
    let g: Vec<f64> = orbit
        .times()
        .iter()
        .zip(orbit.states())
        .map(|(&t, x)| {
            let q = x.rows(0, n).into_owned();
            let p = x.rows(n, n).into_owned();
            (1.0 + lag.inverse_legendre(t, &q, &p).norm_squared()).ln()
        })
        .collect();
    let ts = orbit.times();
    let mut max_rate = 0.0f64;
    let mut holds = true;
    for i in 1..g.len() {
        let dt = ts[i] - ts[i - 1];
        let dg = (g[i] - g[i - 1]).abs();
        if dt > 0.0 {
            max_rate = max_rate.max(dg / dt);
        }
        if dg > c1 * dt + 1e-9 {
            holds = false;
        }
    }
    GrowthReport { c1, max_rate, holds }
}

//! Closed curves in configuration space, their actions, second variations
//! and reparametrizations.
//!
//! A [`Loop`] of period `k` stores `m` configuration samples on the uniform
//! grid `t_j = jk/m`; the closing node is implicit, equal to the first one
//! shifted by `2π·winding` on the torus chart. Between nodes the loop is the
//! trigonometric interpolant of its periodic part.

use crate::error::{Error, Result};
use crate::flow::{closing_error, flow_state, Chart, FlowConfig};
use crate::linalg;
use crate::systems::EmLagrangian;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    period: usize,
    chart: Chart,
    nodes: Vec<DVector<f64>>,
    winding: Vec<i64>,
}

impl Loop {
    /// `nodes` are the samples at `jk/m`, `j < m`, without the repeated end point.
    pub fn new(period: usize, chart: Chart, nodes: Vec<DVector<f64>>, winding: Vec<i64>) -> Result<Self> {
        if period == 0 {
            return Err(Error::Invalid("loop period must be positive".into()));
        }
        if nodes.len() < 4 {
            return Err(Error::InsufficientData("a loop needs at least 4 nodes".into()));
        }
        let n = nodes[0].len();
        if n == 0 || nodes.iter().any(|x| x.len() != n) || winding.len() != n {
            return Err(Error::Dimension("inconsistent loop dimensions".into()));
        }
        if chart == Chart::Euclidean && winding.iter().any(|&w| w != 0) {
            return Err(Error::Invalid("euclidean loops cannot wind".into()));
        }
        Ok(Loop { period, chart, nodes, winding })
    }

    /// Samples `f` on the uniform grid of `[0, k)`.
    pub fn from_fn(period: usize, chart: Chart, m: usize, winding: Vec<i64>, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let nodes = (0..m).map(|j| f(period as f64 * j as f64 / m as f64)).collect();
        Loop::new(period, chart, nodes, winding)
    }

    pub fn n(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[DVector<f64>] {
        &self.nodes
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    pub fn spacing(&self) -> f64 {
        self.period as f64 / self.m() as f64
    }

    fn shift(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.winding.iter().map(|&w| TAU * w as f64))
    }

    /// Node `j` for any integer `j`, continued by periodicity.
    pub fn node(&self, j: i64) -> DVector<f64> {
        let m = self.m() as i64;
        let wraps = j.div_euclid(m);
        &self.nodes[j.rem_euclid(m) as usize] + self.shift() * wraps as f64
    }

    /// Constant loops are contractible; on the torus so is every loop with
    /// zero winding.
    pub fn is_contractible(&self) -> bool {
        self.winding.iter().all(|&w| w == 0)
    }

    /// Chord velocities `(γ_{j+1} − γ_j)/Δ`.
    pub fn chord_velocities(&self) -> Vec<DVector<f64>> {
        let h = self.spacing();
        (0..self.m() as i64).map(|j| (self.node(j + 1) - self.node(j)) / h).collect()
    }

    // Fourier coefficients of the periodic part γ(t) − 2π w t/k.
    fn spectrum(&self) -> Spectrum {
        let m = self.m();
        let n = self.n();
        let k = self.period as f64;
        let drift = self.shift() / k;
        let half = m / 2;
        let mut cos = vec![DVector::zeros(n); half + 1];
        let mut sin = vec![DVector::zeros(n); half + 1];
        for i in 0..n {
            let y: Vec<f64> = self.nodes.iter().enumerate().map(|(j, x)| x[i] - drift[i] * k * j as f64 / m as f64).collect();
            let (c, sn) = real_dft(&y);
            for f in 0..=half {
                cos[f][i] = c[f];
                sin[f][i] = sn[f];
            }
        }
        Spectrum { k, drift, cos, sin }
    }
}

struct Spectrum {
    k: f64,
    drift: DVector<f64>,
    cos: Vec<DVector<f64>>,
    sin: Vec<DVector<f64>>,
}

impl Spectrum {
    fn eval(&self, t: f64) -> DVector<f64> {
        let mut y = &self.drift * t + &self.cos[0];
        for f in 1..self.cos.len() {
            let a = TAU * f as f64 * t / self.k;
            y += &self.cos[f] * a.cos() + &self.sin[f] * a.sin();
        }
        y
    }

    /// Velocities at `t = k i/q`, `i < q`, for `q` at least the node count.
    fn velocities_on(&self, q: usize) -> Vec<DVector<f64>> {
        let n = self.drift.len();
        let mut out = vec![self.drift.clone(); q];
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(q);
        for i in 0..n {
            let mut buf = vec![Complex64::new(0.0, 0.0); q];
            for f in 1..self.cos.len() {
                let w = TAU * f as f64 / self.k;
                buf[f % q] += Complex64::new(w * self.sin[f][i], w * self.cos[f][i]);
            }
            fft.process(&mut buf);
            for (o, z) in out.iter_mut().zip(&buf) {
                o[i] += z.re;
            }
        }
        out
    }

    fn acceleration(&self, t: f64) -> DVector<f64> {
        let mut y = DVector::zeros(self.drift.len());
        for f in 1..self.cos.len() {
            let w = TAU * f as f64 / self.k;
            let a = w * t;
            y -= (&self.cos[f] * a.cos() + &self.sin[f] * a.sin()) * (w * w);
        }
        y
    }
}

/// Average action `(1/k)∫₀^k L(t, γ, γ̇) dt` by the midpoint rule with chord
/// velocities; second order in the grid spacing.
pub fn action(lag: &EmLagrangian, g: &Loop) -> f64 {
    let terms = action_terms(lag, g);
    terms.kinetic + terms.magnetic - terms.potential
}

/// The three parts of the discrete action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionTerms {
    pub kinetic: f64,
    pub magnetic: f64,
    pub potential: f64,
    /// Largest `|A|` and `|V|` at the quadrature points.
    pub sup_a: f64,
    pub sup_v: f64,
}

pub fn action_terms(lag: &EmLagrangian, g: &Loop) -> ActionTerms {
    let h = g.spacing();
    let k = g.period as f64;
    let mut r = ActionTerms { kinetic: 0.0, magnetic: 0.0, potential: 0.0, sup_a: 0.0, sup_v: 0.0 };
    for j in 0..g.m() as i64 {
        let (a, b) = (g.node(j), g.node(j + 1));
        let q = (&a + &b) * 0.5;
        let v = (b - a) / h;
        let t = (j as f64 + 0.5) * h;
        let av = lag.field.a(t, &q);
        let vv = lag.field.v(t, &q);
        r.kinetic += 0.5 * v.norm_squared() * h;
        r.magnetic += av.dot(&v) * h;
        r.potential += vv * h;
        r.sup_a = r.sup_a.max(av.norm());
        r.sup_v = r.sup_v.max(vv.abs());
    }
    r.kinetic /= k;
    r.magnetic /= k;
    r.potential /= k;
    r
}

/// `∫₀^k |γ̇| dt` of the interpolant, trapezoid rule on a grid refined by
/// doubling until the sum settles.
pub fn length(g: &Loop) -> f64 {
    resolved_length(&g.spectrum(), g.m()).0
}

// Speed sums on q, 2q, … points (at most 64m) until two agree to 1e-12.
fn resolved_length(s: &Spectrum, m: usize) -> (f64, usize) {
    let sum = |q: usize| s.velocities_on(q).iter().map(|v| v.norm()).sum::<f64>() * s.k / q as f64;
    let mut q = m;
    let mut l = sum(q);
    while q < 64 * m {
        let finer = sum(2 * q);
        q *= 2;
        let done = (finer - l).abs() <= 1e-12 * (1.0 + finer.abs());
        l = finer;
        if done {
            break;
        }
    }
    (l, q)
}

/// Length of the inscribed polygon.
pub fn polygon_length(g: &Loop) -> f64 {
    let h = g.spacing();
    g.chord_velocities().iter().map(|v| v.norm() * h).sum()
}

/// `φ_k(γ)(t) = γ(t/k)`: the same nodes read on the period-`k` grid.
pub fn iterate_loop(g: &Loop, k: usize) -> Result<Loop> {
    if g.period != 1 || k == 0 {
        return Err(Error::Invalid("iterate_loop needs a period-1 loop and k ≥ 1".into()));
    }
    Loop::new(k, g.chart, g.nodes.clone(), g.winding.clone())
}

/// Both sides of `𝔸_k(φ_k γ) ≤ (2/k²) 𝔸₁(γ) + c₁`, with `c₁ = 3‖V‖ + (9/2)‖A‖²`,
/// and the sharper intermediate right-hand side
/// `(2/k²)𝔸₁ + (1/k + 2/k²)‖A‖‖γ̇‖ + (1 + 2/k²)‖V‖ − ‖γ̇‖²/(2k²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub intermediate: f64,
    pub c1: f64,
    pub sup_a: f64,
    pub sup_v: f64,
    pub holds: bool,
}

impl Lemma1Report {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

pub fn lemma1_check(lag: &EmLagrangian, g: &Loop, k: usize) -> Result<Lemma1Report> {
    let it = iterate_loop(g, k)?;
    let one = action_terms(lag, g);
    let many = action_terms(lag, &it);
    let norms = lag.sup_norms();
    let sup_a = norms.a.max(one.sup_a).max(many.sup_a);
    let sup_v = norms.v.max(one.sup_v).max(many.sup_v);
    let c1 = 3.0 * sup_v + 4.5 * sup_a * sup_a;
    let a1 = one.kinetic + one.magnetic - one.potential;
    let lhs = many.kinetic + many.magnetic - many.potential;
    let kf = k as f64;
    let rhs = 2.0 / (kf * kf) * a1 + c1;
    let l2 = (2.0 * one.kinetic).sqrt();
    let intermediate = 2.0 / (kf * kf) * a1 + (1.0 / kf + 2.0 / (kf * kf)) * sup_a * l2 + (1.0 + 2.0 / (kf * kf)) * sup_v
        - l2 * l2 / (2.0 * kf * kf);
    Ok(Lemma1Report { k, lhs, rhs, intermediate, c1, sup_a, sup_v, holds: lhs <= rhs })
}

/// Slow-speed reparametrization `γ₁ = γ ∘ τ_γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reparam {
    pub loop1: Loop,
    /// `σ_γ` at the original nodes and at `t = 1`.
    pub sigma: Vec<f64>,
    /// Largest chord speed of `γ₁`.
    pub sup_speed: f64,
    /// `1 + L(γ)`.
    pub bound: f64,
    /// `∫₀¹ √(1 + |γ̇|²)`, the exact sup speed of `γ₁`.
    pub normalizer: f64,
}

/// `σ_γ(t) = ∫₀^t √(1+|γ̇|²) / ∫₀¹ √(1+|γ̇|²)` and `γ₁ = γ ∘ σ_γ⁻¹`, sampled
/// on the grid of `γ` refined by doubling until its length is resolved.
pub fn slow_reparam(g: &Loop) -> Result<Reparam> {
    if g.period != 1 {
        return Err(Error::Invalid("slow_reparam needs a period-1 loop".into()));
    }
    let s = g.spectrum();
    let m = g.m();
    let (len, q) = resolved_length(&s, m);
    // σ on a table twice as fine as the one resolving the speed, from the
    // trigonometric interpolant of √(1+|γ̇|²)
    let qf = 2 * q;
    let f: Vec<f64> = s.velocities_on(qf).iter().map(|v| (1.0 + v.norm_squared()).sqrt()).collect();
    let spec = scalar_spectrum(&f);
    let z = spec.mean;
    let table: Vec<f64> = spec.integrals_on(qf).iter().map(|x| x / z).collect();
    let slope: Vec<f64> = f.iter().map(|x| x / z).collect();
    let h = 1.0 / qf as f64;
    let at = |i: usize| if i == qf { (1.0, slope[0]) } else { (table[i], slope[i]) };
    // cubic Hermite inverse of the table
    let invert = |target: f64| -> f64 {
        let i = table.partition_point(|&x| x <= target).saturating_sub(1).min(qf - 1);
        let ((y0, d0), (y1, d1)) = (at(i), at(i + 1));
        let herm = |u: f64| {
            let (u2, u3) = (u * u, u * u * u);
            let y = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * h * d1;
            let dy = (6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * h * d0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * h * d1;
            (y, dy)
        };
        let mut u = ((target - y0) / (y1 - y0)).clamp(0.0, 1.0);
        for _ in 0..30 {
            let (y, dy) = herm(u);
            let next = (u - (y - target) / dy).clamp(0.0, 1.0);
            if (next - u).abs() < 1e-15 {
                break;
            }
            u = next;
        }
        (i as f64 + u) * h
    };
    let resample = |mm: usize| Loop::new(1, g.chart, (0..mm).map(|j| s.eval(invert(j as f64 / mm as f64))).collect(), g.winding.clone());
    // γ₁ is sharper than γ where γ nearly stops; refine its grid until the
    // length of the interpolant settles
    let mut loop1 = resample(m)?;
    let mut len1 = length(&loop1);
    let mut mm = m;
    while mm < 128 * m {
        let finer = resample(2 * mm)?;
        let l = length(&finer);
        if (l - len1).abs() <= 1e-10 * (1.0 + l) {
            break;
        }
        loop1 = finer;
        len1 = l;
        mm *= 2;
    }
    let sup_speed = loop1.chord_velocities().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut sigma: Vec<f64> = (0..m).map(|j| table[j * qf / m]).collect();
    sigma[0] = 0.0;
    sigma.push(1.0);
    Ok(Reparam { loop1, sigma, sup_speed, bound: 1.0 + len, normalizer: z })
}

/// `max |γ̈|` of the interpolant, sampled at the nodes and midpoints.
pub fn max_acceleration(g: &Loop) -> f64 {
    let s = g.spectrum();
    let h = g.spacing();
    (0..2 * g.m()).map(|j| s.acceleration(0.5 * j as f64 * h).norm()).fold(0.0, f64::max)
}

struct ScalarSpectrum {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ScalarSpectrum {
    /// `∫₀^t` of the period-1 interpolant at `t = i/q`, `i < q`.
    fn integrals_on(&self, q: usize) -> Vec<f64> {
        // ∫ = mean t + Σ (c_f sin ωt + s_f (1 − cos ωt))/ω
        let mut buf = vec![Complex64::new(0.0, 0.0); q];
        let mut constant = 0.0;
        for f in 1..self.cos.len() {
            let w = TAU * f as f64;
            buf[f % q] += Complex64::new(self.cos[f] / w, -self.sin[f] / w);
            constant += self.sin[f] / w;
        }
        FftPlanner::<f64>::new().plan_fft_inverse(q).process(&mut buf);
        buf.iter().enumerate().map(|(i, z)| self.mean * i as f64 / q as f64 + constant + z.im).collect()
    }
}

fn scalar_spectrum(f: &[f64]) -> ScalarSpectrum {
    let (cos, sin) = real_dft(f);
    ScalarSpectrum { mean: cos[0], cos, sin }
}

/// `y_j = c₀ + Σ c_f cos(2πfj/m) + s_f sin(2πfj/m)`, `f ≤ m/2`.
fn real_dft(y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = y.len();
    let half = m / 2;
    let mut buf: Vec<Complex64> = y.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);
    let mut cos = vec![0.0; half + 1];
    let mut sin = vec![0.0; half + 1];
    for f in 0..=half {
        let scale = if f == 0 || (m % 2 == 0 && f == half) { 1.0 / m as f64 } else { 2.0 / m as f64 };
        cos[f] = buf[f].re * scale;
        sin[f] = -buf[f].im * scale;
    }
    if m % 2 == 0 {
        sin[half] = 0.0;
    }
    (cos, sin)
}

/// Seeded loop `c₀ + Σ_{j ≤ modes} aⱼ cos 2πjt + bⱼ sin 2πjt (+ 2π w t)` with
/// `|aⱼ|, |bⱼ| ≤ amplitude/j`.
pub fn random_fourier_loop(n: usize, chart: Chart, modes: usize, amplitude: f64, m: usize, winding: Vec<i64>, seed: u64) -> Result<Loop> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    let coeffs: Vec<(Vec<f64>, Vec<f64>)> = (1..=modes)
        .map(|j| {
            let r = amplitude / j as f64;
            ((0..n).map(|_| rng.gen_range(-r..=r)).collect(), (0..n).map(|_| rng.gen_range(-r..=r)).collect())
        })
        .collect();
    let w: Vec<f64> = if winding.is_empty() { vec![0.0; n] } else { winding.iter().map(|&x| x as f64).collect() };
    let winding = if winding.is_empty() { vec![0; n] } else { winding };
    Loop::from_fn(1, chart, m, winding, |t| {
        DVector::from_fn(n, |i, _| {
            let mut y = c0[i] + TAU * w[i] * t;
            for (j, (a, b)) in coeffs.iter().enumerate() {
                let ang = TAU * (j + 1) as f64 * t;
                y += a[i] * ang.cos() + b[i] * ang.sin();
            }
            y
        })
    })
}

/// Inertia of a symmetric quadratic form restricted to a finite-element space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormSpectrum {
    pub negative_count: usize,
    pub zero_count: usize,
    /// Generalized eigenvalues `Kv = λMv`, ascending, when the space is small
    /// enough for a dense solve.
    pub eigenvalues: Vec<f64>,
    /// Number of elements of the final mesh.
    pub elements: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Coefficients `(P, B, C)` of `∫ ⟨Pξ̇, ξ̇⟩ + 2⟨Bξ, ξ̇⟩ + ⟨Cξ, ξ⟩` at the mesh nodes.
pub type Coefficients = (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormConfig {
    pub initial_elements: usize,
    pub max_elements: usize,
    /// Relative nullity threshold.
    pub null_rel: f64,
    pub dense_limit: usize,
}

impl Default for FormConfig {
    fn default() -> Self {
        FormConfig { initial_elements: 32, max_elements: 1 << 15, null_rel: 1e-8, dense_limit: 400 }
    }
}

/// Inertia of the quadratic form on piecewise-linear elements over `[0, t]`.
///
/// `coeffs(j, m)` returns the coefficients at node `j` of the `m`-element
/// mesh (`j = 0..=m`); they are interpolated linearly on each element and
/// integrated with two-point Gauss quadrature. The mesh doubles until the
/// negative count is the same on three consecutive meshes.
pub fn quadratic_form_index(
    n: usize,
    t: f64,
    bc: Boundary,
    cfg: &FormConfig,
    mut coeffs: impl FnMut(usize, usize) -> Result<Coefficients>,
) -> Result<QuadraticFormSpectrum> {
    if !(t > 0.0) || n == 0 {
        return Err(Error::Invalid("interval length and dimension must be positive".into()));
    }
    let mut m = cfg.initial_elements.max(4);
    let mut history: Vec<usize> = Vec::new();
    loop {
        let c: Vec<Coefficients> = (0..=m).map(|j| coeffs(j, m)).collect::<Result<_>>()?;
        let (k, mass) = assemble(n, t, m, bc, &c);
        let spec = inertia_of(&k, &mass, n, t / m as f64, &c, cfg)?;
        history.push(spec.negative_count);
        let l = history.len();
        if l >= 3 && history[l - 1] == history[l - 2] && history[l - 2] == history[l - 3] {
            return Ok(QuadraticFormSpectrum { elements: m, ..spec });
        }
        if 2 * m > cfg.max_elements {
            return Err(Error::InsufficientData(format!("negative count not stable up to {m} elements: {history:?}")));
        }
        m *= 2;
    }
}

// Block-tridiagonal (cyclic for periodic boundary) stiffness and mass, as
// lists of diagonal and super-diagonal n×n blocks over the free nodes.
struct Blocks {
    diag: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
    corner: Option<DMatrix<f64>>,
}

fn assemble(n: usize, t: f64, m: usize, bc: Boundary, c: &[Coefficients]) -> (Blocks, Blocks) {
    let h = t / m as f64;
    let g = 0.5 / 3f64.sqrt();
    let gauss = [0.5 - g, 0.5 + g];
    let mut kd = vec![DMatrix::zeros(n, n); m + 1];
    let mut ku = vec![DMatrix::zeros(n, n); m];
    let mut md = vec![DMatrix::zeros(n, n); m + 1];
    let mut mu = vec![DMatrix::zeros(n, n); m];
    let id = DMatrix::<f64>::identity(n, n);
    for e in 0..m {
        let (c0, c1) = (&c[e], &c[e + 1]);
        for &s in &gauss {
            let w = 0.5 * h;
            let p = &c0.0 * (1.0 - s) + &c1.0 * s;
            let b = &c0.1 * (1.0 - s) + &c1.1 * s;
            let cc = &c0.2 * (1.0 - s) + &c1.2 * s;
            let phi = [1.0 - s, s];
            let dphi = [-1.0 / h, 1.0 / h];
            let block = |a: usize, bb: usize| {
                &p * (dphi[a] * dphi[bb]) + b.transpose() * (phi[a] * dphi[bb]) + &b * (dphi[a] * phi[bb]) + &cc * (phi[a] * phi[bb])
            };
            kd[e] += block(0, 0) * w;
            kd[e + 1] += block(1, 1) * w;
            ku[e] += block(0, 1) * w;
            md[e] += &id * (phi[0] * phi[0] * w);
            md[e + 1] += &id * (phi[1] * phi[1] * w);
            mu[e] += &id * (phi[0] * phi[1] * w);
        }
    }
    match bc {
        Boundary::Dirichlet => {
            let k = Blocks { diag: kd[1..m].to_vec(), upper: ku[1..m - 1].to_vec(), corner: None };
            let ms = Blocks { diag: md[1..m].to_vec(), upper: mu[1..m - 1].to_vec(), corner: None };
            (k, ms)
        }
        Boundary::Periodic => {
            // node m is node 0
            let mut kd0 = kd[..m].to_vec();
            kd0[0] += &kd[m];
            let mut md0 = md[..m].to_vec();
            md0[0] += &md[m];
            let kc = ku[m - 1].transpose();
            let mc = mu[m - 1].transpose();
            let k = Blocks { diag: kd0, upper: ku[..m - 1].to_vec(), corner: Some(kc) };
            let ms = Blocks { diag: md0, upper: mu[..m - 1].to_vec(), corner: Some(mc) };
            (k, ms)
        }
    }
}

impl Blocks {
    fn combine(&self, other: &Blocks, alpha: f64) -> Blocks {
        Blocks {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + b * alpha).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a + b * alpha).collect(),
            corner: self.corner.as_ref().map(|a| a + other.corner.as_ref().unwrap() * alpha),
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let nb = self.diag.len();
        let n = self.diag[0].nrows();
        let mut a = DMatrix::zeros(nb * n, nb * n);
        for (i, d) in self.diag.iter().enumerate() {
            a.view_mut((i * n, i * n), (n, n)).copy_from(d);
        }
        for (i, u) in self.upper.iter().enumerate() {
            a.view_mut((i * n, (i + 1) * n), (n, n)).copy_from(u);
            a.view_mut(((i + 1) * n, i * n), (n, n)).copy_from(&u.transpose());
        }
        if let Some(c) = &self.corner {
            // couples the first block (rows) with the last block (columns)
            let l = (nb - 1) * n;
            let mut blk = a.view((0, l), (n, n)).into_owned();
            blk += c;
            a.view_mut((0, l), (n, n)).copy_from(&blk);
            a.view_mut((l, 0), (n, n)).copy_from(&blk.transpose());
        }
        a
    }

    /// Number of negative eigenvalues by block LDLᵀ (Sylvester's law).
    fn negative_count(&self) -> Result<usize> {
        let nb = self.diag.len();
        let n = self.diag[0].nrows();
        let count = |d: &DMatrix<f64>| -> Result<(usize, f64)> {
            let e = linalg::sym_eigenvalues(d);
            let min = e.iter().fold(f64::INFINITY, |a, &x| a.min(x.abs()));
            Ok((e.iter().filter(|&&x| x < 0.0).count(), min))
        };
        let scale = self.diag.iter().map(|d| d.amax()).fold(0.0, f64::max).max(1e-300);
        let singular = |min: f64| min <= 1e-14 * scale;
        let inv = |d: &DMatrix<f64>| d.clone().try_inverse().ok_or_else(|| Error::DegeneratePath("singular pivot in LDLᵀ".into()));
        let mut neg = 0;
        match &self.corner {
            None => {
                let mut d = self.diag[0].clone();
                for i in 0..nb {
                    if i > 0 {
                        let u = &self.upper[i - 1];
                        d = &self.diag[i] - u.transpose() * inv(&d)? * u;
                    }
                    let (c, min) = count(&d)?;
                    if singular(min) {
                        return Err(Error::DegeneratePath("singular pivot in LDLᵀ".into()));
                    }
                    neg += c;
                }
            }
            Some(corner) => {
                if nb < 3 {
                    let e = linalg::sym_eigenvalues(&self.dense());
                    return Ok(e.iter().filter(|&&x| x < 0.0).count());
                }
                // eliminate blocks 0..nb-2, carrying the coupling E_i with the last block
                let last = nb - 1;
                let mut d = self.diag[0].clone();
                let mut e = corner.clone();
                let mut schur = self.diag[last].clone();
                for i in 0..last {
                    if i > 0 {
                        let u = &self.upper[i - 1];
                        let l = u.transpose() * inv(&d)?;
                        let couple = if i == last - 1 { self.upper[last - 1].clone() } else { DMatrix::zeros(n, n) };
                        d = &self.diag[i] - &l * u;
                        e = couple - &l * &e;
                    }
                    let (c, min) = count(&d)?;
                    if singular(min) {
                        return Err(Error::DegeneratePath("singular pivot in LDLᵀ".into()));
                    }
                    neg += c;
                    schur -= e.transpose() * inv(&d)? * &e;
                }
                let (c, min) = count(&schur)?;
                if singular(min) {
                    return Err(Error::DegeneratePath("singular pivot in LDLᵀ".into()));
                }
                neg += c;
            }
        }
        Ok(neg)
    }
}

fn inertia_of(
    k: &Blocks,
    mass: &Blocks,
    n: usize,
    h: f64,
    c: &[Coefficients],
    cfg: &FormConfig,
) -> Result<QuadraticFormSpectrum> {
    let dim = k.diag.len() * n;
    // largest generalized eigenvalue is at most about 12|P|/h² + |C|
    let pmax = c.iter().map(|x| x.0.norm()).fold(0.0, f64::max);
    let bmax = c.iter().map(|x| x.1.norm()).fold(0.0, f64::max);
    let cmax = c.iter().map(|x| x.2.norm()).fold(0.0, f64::max);
    let lam_max = 12.0 * pmax / (h * h) + 2.0 * bmax / h + cmax;
    let eps = cfg.null_rel * lam_max;
    let below = k.combine(mass, eps).negative_count()?;
    let above = k.combine(mass, -eps).negative_count()?;
    let eigenvalues = if dim <= cfg.dense_limit {
        let km = k.dense();
        let mm = mass.dense();
        let chol = mm.cholesky().ok_or_else(|| Error::Invalid("mass matrix not positive".into()))?;
        let linv = chol.l().try_inverse().ok_or_else(|| Error::Invalid("mass matrix not positive".into()))?;
        let a = &linv * km * linv.transpose();
        linalg::sym_eigenvalues(&((&a + a.transpose()) * 0.5))
    } else {
        Vec::new()
    };
    Ok(QuadraticFormSpectrum { negative_count: below, zero_count: above - below, eigenvalues, elements: 0 })
}

/// Inertia of the second variation of `∫_s^{s+t} L` at the solution through
/// `(s, x₀)` (phase-space state), over variations vanishing at the ends
/// (`Dirichlet`) or `t`-periodic ones (`Periodic`, `x₀` must then be
/// `t`-periodic). On a flat chart the form is
/// `∫ |ξ̇|² + 2⟨DA ξ, ξ̇⟩ + ⟨D²A[ξ, ξ], γ̇⟩ − D²V[ξ, ξ]`.
///
/// For a non-conjugate Dirichlet interval the negative count equals
/// `μ_t(s, x₀)`.
pub fn second_variation_index(
    lag: &EmLagrangian,
    s: f64,
    x0: &DVector<f64>,
    t: f64,
    bc: Boundary,
    flow: &FlowConfig,
    cfg: &FormConfig,
) -> Result<QuadraticFormSpectrum> {
    let n = lag.n();
    if x0.len() != 2 * n {
        return Err(Error::Dimension(format!("state of length {} for n = {n}", x0.len())));
    }
    let sys = lag.hamiltonian();
    if bc == Boundary::Periodic {
        let xt = flow_state(&sys, s, x0, t, flow)?;
        let err = closing_error(&sys, x0, &xt);
        if err > 10.0 * flow.tol.periodic.max(flow.tol.integration) * (1.0 + x0.amax()) {
            return Err(Error::NotPeriodic(format!("closing error {err:e}")));
        }
    }
    let mut states: Vec<DVector<f64>> = Vec::new();
    let mut current_m = 0;
    quadratic_form_index(n, t, bc, cfg, |j, m| {
        if m != current_m {
            // states at the nodes of the new mesh, by sequential flow steps
            let h = t / m as f64;
            states = Vec::with_capacity(m + 1);
            let mut x = x0.clone();
            states.push(x.clone());
            for i in 0..m {
                x = flow_state(&sys, s + i as f64 * h, &x, h, flow)?;
                states.push(x.clone());
            }
            current_m = m;
        }
        let tau = s + t * j as f64 / m as f64;
        let x = &states[j];
        let q = x.rows(0, n).into_owned();
        let v = lag.inverse_legendre(tau, &q, &x.rows(n, n).into_owned());
        let b = lag.field.da(tau, &q);
        let mut c = -lag.field.d2v(tau, &q);
        for (i, hess) in lag.field.d2a(tau, &q).iter().enumerate() {
            c += hess * v[i];
        }
        Ok((DMatrix::identity(n, n), b, c))
    })
}

//! Robbin–Salamon index of Lagrangian paths relative to a fixed Lagrangian,
//! and the Conley–Zehnder index of symplectic paths.
//!
//! Orientation: the crossing form of `λ(t)` at `t` is `Γ(v) = ω(v, ẇ)` where
//! `v + w(t) ∈ λ(t)` and `w(t)` lies in a fixed complement. For a frame
//! `F = [X; Y]` this reads `cᵀ(YᵀẊ − XᵀẎ)c` on the intersection. A fiber-convex
//! Hamiltonian flow applied to the vertical therefore has positive crossings.
//!
//! Crossings are detected through the relative unitary
//! `W = (U₀* U)(U₀* U)ᵀ`, `U = X + iY` for orthonormal frames. `λ ∩ λ₀`
//! is the 1-eigenspace of `W`, and eigenphases of `W` moving clockwise through
//! 1 are positive crossings. Summing the phases in `[0, 2π)` and counting
//! wraps between samples gives the index exactly once the sampling resolves the
//! phase lift. Individual crossings are then localized by bisection and their
//! crossing forms are evaluated by centered differences as a consistency check.

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{self, max_abs};
use crate::symplectic::{standard_j, DoubleForm, DoubleFrame, LagrangianFrame, SymplecticMatrix};
use crate::tol::Tolerances;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

pub type FrameFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// Samples joined by unitary interpolation.
    Sampled,
    /// A callback that can be evaluated at any parameter.
    Analytic,
}

/// A continuous path of Lagrangian subspaces on `[a, b]`.
#[derive(Clone)]
pub struct LagrangianPath {
    n: usize,
    grid: Vec<f64>,
    kind: PathKind,
    f: FrameFn,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath")
            .field("n", &self.n)
            .field("interval", &(self.start(), self.end()))
            .field("samples", &self.grid.len())
            .field("kind", &self.kind)
            .finish()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Invalid("a path needs at least two samples".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("sample times must be finite and strictly increasing".into()));
    }
    Ok(())
}

fn uniform_grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let m = samples.max(2) - 1;
    (0..=m).map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 }).collect()
}

fn locate(grid: &[f64], t: f64) -> (usize, f64) {
    let last = grid.len() - 1;
    if t <= grid[0] {
        return (0, 0.0);
    }
    if t >= grid[last] {
        return (last - 1, 1.0);
    }
    let i = grid.partition_point(|&x| x <= t) - 1;
    let i = i.min(last - 1);
    (i, (t - grid[i]) / (grid[i + 1] - grid[i]))
}

/// Geodesic-like interpolation between two orthonormal Lagrangian frames:
/// align the `O(n)` gauge, blend the unitaries and project back to U(n).
fn interpolate_frames(f0: &DMatrix<f64>, f1: &DMatrix<f64>, s: f64) -> DMatrix<f64> {
    if s <= 0.0 {
        return f0.clone();
    }
    if s >= 1.0 {
        return f1.clone();
    }
    let u0 = linalg::to_unitary(f0);
    let u1 = linalg::to_unitary(f1);
    let m = (u1.adjoint() * &u0).map(|z| z.re);
    let o = linalg::complex(&linalg::polar_orthogonal(&m));
    let u1a = u1 * o;
    let u = u0 * Complex64::new(1.0 - s, 0.0) + u1a * Complex64::new(s, 0.0);
    linalg::from_unitary(&linalg::polar_unitary(&u))
}

impl LagrangianPath {
    /// Path through the given frames, interpolated between samples.
    pub fn sampled(times: Vec<f64>, frames: Vec<LagrangianFrame>) -> Result<Self> {
        check_grid(&times)?;
        if frames.len() != times.len() {
            return Err(Error::Dimension(format!("{} times but {} frames", times.len(), frames.len())));
        }
        let n = frames[0].n();
        if frames.iter().any(|f| f.n() != n) {
            return Err(Error::Dimension("frames of different dimensions".into()));
        }
        let ortho: Vec<DMatrix<f64>> = frames
            .iter()
            .map(|f| linalg::lagrangian_projection(&linalg::orthonormalize(f.columns())))
            .collect();
        let grid = times.clone();
        let f: FrameFn = Arc::new(move |t| {
            let (i, s) = locate(&times, t);
            interpolate_frames(&ortho[i], &ortho[i + 1], s)
        });
        Ok(LagrangianPath { n, grid, kind: PathKind::Sampled, f })
    }

    /// Path given by a callback, with an initial uniform sampling grid.
    pub fn from_fn<F>(n: usize, a: f64, b: f64, samples: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self::with_grid(n, uniform_grid(a, b, samples), f)
    }

    pub fn with_grid<F>(n: usize, grid: Vec<f64>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        check_grid(&grid)?;
        if n == 0 {
            return Err(Error::Dimension("n must be positive".into()));
        }
        let probe = f(grid[0]);
        if probe.nrows() != 2 * n || probe.ncols() != n {
            return Err(Error::Dimension(format!(
                "callback returns {}x{}, expected {}x{}",
                probe.nrows(),
                probe.ncols(),
                2 * n,
                n
            )));
        }
        Ok(LagrangianPath { n, grid, kind: PathKind::Analytic, f: Arc::new(f) })
    }

    pub(crate) fn from_parts(n: usize, grid: Vec<f64>, kind: PathKind, f: FrameFn) -> Self {
        LagrangianPath { n, grid, kind, f }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Raw frame returned by the underlying callback or interpolation.
    pub fn eval_raw(&self, t: f64) -> DMatrix<f64> {
        (self.f)(t)
    }

    pub fn eval(&self, t: f64) -> LagrangianFrame {
        LagrangianFrame::new_unchecked(linalg::orthonormalize(&(self.f)(t)))
    }

    /// The path `Ψ λ(t)`.
    pub fn map(&self, psi: &SymplecticMatrix) -> Result<Self> {
        if psi.n() != self.n {
            return Err(Error::Dimension(format!("{}-dof map on {}-dof path", psi.n(), self.n)));
        }
        let m = psi.matrix().clone();
        let f = self.f.clone();
        Ok(LagrangianPath { n: self.n, grid: self.grid.clone(), kind: self.kind, f: Arc::new(move |t| &m * f(t)) })
    }

    /// Restriction to `[a, b]` (must lie inside the domain).
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        let eps = 1e-12 * (self.end() - self.start()).abs().max(1.0);
        if !(a < b) || a < self.start() - eps || b > self.end() + eps {
            return Err(Error::Invalid(format!(
                "[{a}, {b}] is not a subinterval of [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        let mut grid = vec![a];
        grid.extend(self.grid.iter().cloned().filter(|&t| t > a + eps && t < b - eps));
        grid.push(b);
        Ok(LagrangianPath { n: self.n, grid, kind: self.kind, f: self.f.clone() })
    }

    /// `t ↦ λ(φ(t))` on `[a, b]` for a continuous `φ` with `φ(a)`, `φ(b)` the
    /// old endpoints.
    pub fn reparametrize<P>(&self, a: f64, b: f64, phi: P) -> Result<Self>
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = self.f.clone();
        let grid = uniform_grid(a, b, 2 * self.grid.len());
        check_grid(&grid)?;
        Ok(LagrangianPath { n: self.n, grid, kind: self.kind, f: Arc::new(move |t| f(phi(t))) })
    }

    /// `λ'(t) ⊕ λ''(t)` in interleaved coordinates. Both paths must share
    /// their domain.
    pub fn direct_sum(&self, other: &LagrangianPath) -> Result<Self> {
        let eps = 1e-12 * (self.end() - self.start()).abs().max(1.0);
        if (self.start() - other.start()).abs() > eps || (self.end() - other.end()).abs() > eps {
            return Err(Error::Invalid("direct sum of paths on different intervals".into()));
        }
        let mut grid: Vec<f64> = self.grid.iter().chain(other.grid.iter()).cloned().collect();
        grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
        grid.dedup_by(|x, y| (*x - *y).abs() <= eps);
        let (fa, fb, na, nb) = (self.f.clone(), other.f.clone(), self.n, other.n);
        let kind = if self.kind == PathKind::Analytic && other.kind == PathKind::Analytic {
            PathKind::Analytic
        } else {
            PathKind::Sampled
        };
        Ok(LagrangianPath {
            n: na + nb,
            grid,
            kind,
            f: Arc::new(move |t| crate::symplectic::direct_sum_columns(&fa(t), &fb(t), na, nb)),
        })
    }
}

/// A continuous path in Sp(2n).
#[derive(Clone)]
pub struct SymplecticPath {
    n: usize,
    grid: Vec<f64>,
    kind: PathKind,
    f: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
}

impl std::fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymplecticPath")
            .field("n", &self.n)
            .field("interval", &(self.grid[0], self.grid[self.grid.len() - 1]))
            .field("samples", &self.grid.len())
            .finish()
    }
}

impl SymplecticPath {
    /// Samples joined linearly and projected back onto Sp(2n).
    pub fn sampled(times: Vec<f64>, mats: Vec<SymplecticMatrix>) -> Result<Self> {
        check_grid(&times)?;
        if mats.len() != times.len() {
            return Err(Error::Dimension(format!("{} times but {} matrices", times.len(), mats.len())));
        }
        let n = mats[0].n();
        if mats.iter().any(|m| m.n() != n) {
            return Err(Error::Dimension("matrices of different dimensions".into()));
        }
        let ms: Vec<DMatrix<f64>> = mats.into_iter().map(|m| m.into_matrix()).collect();
        let grid = times.clone();
        let f = Arc::new(move |t: f64| {
            let (i, s) = locate(&times, t);
            if s <= 0.0 {
                return ms[i].clone();
            }
            if s >= 1.0 {
                return ms[i + 1].clone();
            }
            let m = &ms[i] * (1.0 - s) + &ms[i + 1] * s;
            match crate::symplectic::resymplectify(&m) {
                Ok(r) => r.into_matrix(),
                Err(_) => m,
            }
        });
        Ok(SymplecticPath { n, grid, kind: PathKind::Sampled, f })
    }

    pub fn from_fn<F>(n: usize, a: f64, b: f64, samples: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let grid = uniform_grid(a, b, samples);
        check_grid(&grid)?;
        let probe = f(a);
        if probe.nrows() != 2 * n || probe.ncols() != 2 * n {
            return Err(Error::Dimension(format!("callback returns {}x{}", probe.nrows(), probe.ncols())));
        }
        Ok(SymplecticPath { n, grid, kind: PathKind::Analytic, f: Arc::new(f) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn eval(&self, t: f64) -> SymplecticMatrix {
        SymplecticMatrix::new_unchecked((self.f)(t))
    }

    /// `t ↦ Φ(t) λ₀`.
    pub fn lagrangian_image(&self, lambda0: &LagrangianFrame) -> Result<LagrangianPath> {
        if lambda0.n() != self.n {
            return Err(Error::Dimension("reference frame dimension".into()));
        }
        let l = lambda0.columns().clone();
        let f = self.f.clone();
        Ok(LagrangianPath::from_parts(self.n, self.grid.clone(), self.kind, Arc::new(move |t| f(t) * &l)))
    }

    /// `t ↦ graph Φ(t)`, transported to the standard 2n-dof space.
    pub fn graph_path(&self) -> LagrangianPath {
        let n = self.n;
        let t_map = DoubleForm { n }.to_standard();
        let f = self.f.clone();
        LagrangianPath::from_parts(
            2 * n,
            self.grid.clone(),
            self.kind,
            Arc::new(move |t| {
                let d = 2 * n;
                let mut c = DMatrix::zeros(2 * d, d);
                c.view_mut((0, 0), (d, d)).fill_with_identity();
                c.view_mut((d, 0), (d, d)).copy_from(&f(t));
                &t_map * c
            }),
        )
    }
}

/// Options for [`maslov_index`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaslovConfig {
    pub tol: Tolerances,
    /// Largest principal angle allowed between neighbouring samples.
    pub max_angle: f64,
    /// Relative step below which refinement gives up.
    pub min_step_rel: f64,
    /// Relative resolution to which crossings are localized.
    pub locate_rel: f64,
    /// Evaluate finite-difference crossing forms at isolated crossings.
    pub check_forms: bool,
}

impl Default for MaslovConfig {
    fn default() -> Self {
        MaslovConfig { tol: Tolerances::default(), max_angle: 0.2, min_step_rel: 1e-13, locate_rel: 1e-8, check_forms: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub time: f64,
    /// Dimension of `λ(t) ∩ λ₀`.
    pub dim: usize,
    /// Signature of the crossing. Endpoint crossings enter the index with
    /// half weight.
    pub signature: i64,
    pub endpoint: bool,
    /// Eigenvalues of the finite-difference crossing form, if evaluated.
    pub form_eigenvalues: Vec<f64>,
    /// The crossing form is nondegenerate and its signature agrees.
    pub regular: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    #[serde(rename = "value_doubled")]
    pub value: HalfInt,
    pub crossings: Vec<CrossingRecord>,
    /// Some crossing was non-regular or an endpoint was close to a crossing.
    pub degenerate: bool,
    pub samples: usize,
}

impl IndexResult {
    /// `½ Σ endpoint signatures + Σ interior signatures`.
    pub fn assembled(&self) -> HalfInt {
        self.crossings
            .iter()
            .map(|c| if c.endpoint { HalfInt::from_doubled(c.signature) } else { HalfInt::from_int(c.signature) })
            .sum()
    }
}

/// Dimension of the intersection of two Lagrangian subspaces: `n − rank((J G)ᵀ F)`
/// for orthonormal frames.
pub fn intersection_dimension(a: &LagrangianFrame, b: &LagrangianFrame, tol: f64) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::Dimension(format!("{} vs {}", a.n(), b.n())));
    }
    let fa = linalg::orthonormalize(a.columns());
    let fb = linalg::orthonormalize(b.columns());
    let m = (standard_j(a.n()) * fb).transpose() * fa;
    Ok(m.singular_values().iter().filter(|&&s| s < tol).count())
}

struct Pt {
    t: f64,
    frame: DMatrix<f64>,
    sum: f64,
    nonzero: usize,
    near: usize,
    ambiguous: bool,
    /// `det V` of the oriented frame; its square is `det W`.
    orient: Complex64,
}

struct Evaluator<'a> {
    path: &'a LagrangianPath,
    u0h: DMatrix<Complex64>,
    n: usize,
    tol: f64,
}

impl<'a> Evaluator<'a> {
    fn new(path: &'a LagrangianPath, lambda0: &LagrangianFrame, tol: f64) -> Self {
        let g = linalg::lagrangian_projection(&linalg::orthonormalize(lambda0.columns()));
        Evaluator { path, u0h: linalg::to_unitary(&g).adjoint(), n: path.n, tol }
    }

    fn point(&self, t: f64) -> Pt {
        let frame = linalg::orthonormalize(&self.path.eval_raw(t));
        let v = &self.u0h * linalg::to_unitary(&frame);
        let d = v.determinant();
        let orient = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let w = &v * v.transpose();
        let (mut sum, mut nonzero, mut near, mut ambiguous) = (0.0, 0, 0, false);
        for e in linalg::normal_eigenvalues(&w) {
            let mut psi = e.arg();
            if psi < 0.0 {
                psi += TAU;
            }
            let dist = psi.min(TAU - psi);
            if dist < 1e-4 {
                near += 1;
            }
            if dist <= self.tol {
                continue;
            }
            if dist <= 10.0 * self.tol {
                ambiguous = true;
            }
            nonzero += 1;
            sum += psi;
        }
        Pt { t, frame, sum, nonzero, near, ambiguous, orient }
    }

    fn clean(&self, p: &Pt) -> bool {
        p.nonzero == self.n
    }
}

/// Number of wraps through phase 0 between two samples, and the distance of
/// the raw phase difference from the chosen lift.
fn wraps(l: &Pt, r: &Pt) -> (i64, f64) {
    let d = r.sum - l.sum;
    let k = (d / TAU).round();
    (k as i64, (d - k * TAU).abs())
}

/// Whether `det V` turned as the chosen lift predicts. A half-turn
/// mismatch means an odd number of full eigenphase turns went unseen
/// between the samples, as happens when a strongly hyperbolic path whips
/// through a loop faster than the sampling.
fn orientation_consistent(l: &Pt, r: &Pt) -> bool {
    let (k, _) = wraps(l, r);
    let lift = r.sum - l.sum - TAU * k as f64;
    let predicted = l.orient * Complex64::from_polar(1.0, 0.5 * lift);
    (r.orient * predicted.conj()).re > 0.0
}

/// Doubled index contribution of the sub-path between two samples.
fn contribution(l: &Pt, r: &Pt) -> i64 {
    2 * wraps(l, r).0 - (r.nonzero as i64 - l.nonzero as i64)
}

/// The Robbin–Salamon index `μ(λ, λ₀)` with half-weight endpoint crossings.
pub fn maslov_index(path: &LagrangianPath, lambda0: &LagrangianFrame, cfg: &MaslovConfig) -> Result<IndexResult> {
    if lambda0.n() != path.n {
        return Err(Error::Dimension(format!("path in {} dof, reference in {} dof", path.n, lambda0.n())));
    }
    let ev = Evaluator::new(path, lambda0, cfg.tol.phase);
    let span = path.end() - path.start();
    let max_angle = cfg.max_angle.min(0.6 / path.n as f64);
    let min_dt = cfg.min_step_rel * span.abs().max(1.0);
    // interpolated samples carry no orientation across nodes
    let oriented_kind = path.kind == PathKind::Analytic;

    // refine until every gap is resolved
    let mut pts: Vec<Pt> = Vec::with_capacity(path.grid.len());
    pts.push(ev.point(path.grid[0]));
    for &t in &path.grid[1..] {
        let mut stack = vec![ev.point(t)];
        while let Some(right) = stack.pop() {
            let left = pts.last().unwrap();
            let close = linalg::max_principal_angle(&left.frame, &right.frame) <= max_angle
                && wraps(left, &right).1 < PI / 2.0;
            let oriented = !oriented_kind || orientation_consistent(left, &right);
            if close && (oriented || right.t - left.t < min_dt) {
                // a flip that survives down to the resolution limit is a
                // jump of the frame gauge, not of the subspace
                pts.push(right);
            } else {
                if right.t - left.t < min_dt {
                    return Err(Error::DegeneratePath(format!(
                        "path not resolved near t = {} (discontinuous or too fast)",
                        left.t
                    )));
                }
                let mid = ev.point(0.5 * (left.t + right.t));
                stack.push(right);
                stack.push(mid);
            }
        }
    }

    let value = HalfInt::from_doubled(pts.windows(2).map(|w| contribution(&w[0], &w[1])).sum());

    // localize crossings
    let t_res = cfg.locate_rel * span.abs().max(1e-300);
    for _ in 0..200 {
        let mut out: Vec<Pt> = Vec::with_capacity(pts.len() + 8);
        let mut changed = false;
        let mut it = pts.into_iter();
        let mut prev = it.next().unwrap();
        for next in it {
            let (cl, cr) = (ev.clean(&prev), ev.clean(&next));
            let len = next.t - prev.t;
            let split = if cl && cr { wraps(&prev, &next).0 != 0 && len > t_res } else { cl != cr && len > t_res };
            let mid = if split { Some(ev.point(0.5 * (prev.t + next.t))) } else { None };
            out.push(prev);
            if let Some(m) = mid {
                out.push(m);
                changed = true;
            }
            prev = next;
        }
        out.push(prev);
        pts = out;
        if !changed {
            break;
        }
    }

    let last = pts.len() - 1;
    let mut crossings = Vec::new();
    let mut i = 0;
    while i <= last {
        if ev.clean(&pts[i]) {
            if i < last && ev.clean(&pts[i + 1]) {
                let k = wraps(&pts[i], &pts[i + 1]).0;
                if k != 0 {
                    let mid = 0.5 * (pts[i].t + pts[i + 1].t);
                    let near = pts[i].near.max(pts[i + 1].near);
                    crossings.push(CrossingRecord {
                        time: mid,
                        dim: near.max(k.unsigned_abs() as usize),
                        signature: k,
                        endpoint: false,
                        form_eigenvalues: Vec::new(),
                        regular: true,
                    });
                }
            }
            i += 1;
            continue;
        }
        let mut j = i;
        while j < last && !ev.clean(&pts[j + 1]) {
            j += 1;
        }
        let mut c = 0;
        if i > 0 {
            c += contribution(&pts[i - 1], &pts[i]);
        }
        for k in i..j {
            c += contribution(&pts[k], &pts[k + 1]);
        }
        if j < last {
            c += contribution(&pts[j], &pts[j + 1]);
        }
        let endpoint = i == 0 || j == last;
        let dim = (i..=j).map(|k| path.n - pts[k].nonzero).max().unwrap();
        let time = if i == 0 { pts[0].t } else if j == last { pts[last].t } else { 0.5 * (pts[i].t + pts[j].t) };
        crossings.push(CrossingRecord {
            time,
            dim,
            signature: if endpoint { c } else { c / 2 },
            endpoint,
            form_eigenvalues: Vec::new(),
            regular: pts[j].t - pts[i].t <= 1e-4 * span.abs(),
        });
        i = j + 1;
    }
    crossings.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());

    let mut degenerate = pts[0].ambiguous || pts[last].ambiguous;
    let assembled: HalfInt = crossings
        .iter()
        .map(|c| if c.endpoint { HalfInt::from_doubled(c.signature) } else { HalfInt::from_int(c.signature) })
        .sum();
    if assembled != value {
        return Err(Error::DegeneratePath(format!("crossing assembly {assembled} disagrees with winding {value}")));
    }

    if cfg.check_forms {
        let spacing = span.abs() / (path.grid.len().max(2) - 1) as f64;
        let h = (1e-4 * spacing).max(1e-6).min(0.25 * span.abs());
        for c in crossings.iter_mut() {
            if !c.regular {
                degenerate = true;
                continue;
            }
            match form_at(path, lambda0, c.time, c.dim, h) {
                Ok(form) => {
                    let agrees = form.signature == c.signature;
                    c.regular = !form.degenerate && agrees;
                    c.form_eigenvalues = form.eigenvalues;
                }
                Err(_) => c.regular = false,
            }
            if !c.regular {
                degenerate = true;
            }
        }
    }

    Ok(IndexResult { value, crossings, degenerate, samples: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingForm {
    pub time: f64,
    pub dim: usize,
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub signature: i64,
    /// Zero eigenvalue or unstable signature under step halving.
    pub degenerate: bool,
}

/// Crossing form of `λ` relative to `λ₀` at `t`, by centered differences of
/// the gauge-free graph representative (one-sided at the ends of the domain).
pub fn crossing_form(path: &LagrangianPath, lambda0: &LagrangianFrame, t: f64, cfg: &MaslovConfig) -> Result<CrossingForm> {
    let f = linalg::orthonormalize(&path.eval_raw(t));
    let g = linalg::orthonormalize(lambda0.columns());
    let m = (standard_j(path.n) * g).transpose() * &f;
    let dim = m.singular_values().iter().filter(|&&s| s < cfg.tol.rank.max(1e-6)).count();
    let span = path.end() - path.start();
    let spacing = span.abs() / (path.grid.len().max(2) - 1) as f64;
    let h = (1e-4 * spacing).max(1e-6).min(0.25 * span.abs());
    form_at(path, lambda0, t, dim, h)
}

fn form_at(path: &LagrangianPath, lambda0: &LagrangianFrame, t: f64, dim: usize, h: f64) -> Result<CrossingForm> {
    let n = path.n;
    if dim == 0 {
        return Err(Error::Invalid(format!("no intersection at t = {t}")));
    }
    let fo = linalg::orthonormalize(&path.eval_raw(t));
    let g = linalg::orthonormalize(lambda0.columns());
    let j = standard_j(n);
    let m = (&j * &g).transpose() * &fo;
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let c = DMatrix::from_fn(n, dim, |r, k| vt[(order[k], r)]);

    let graph_rep = |s: f64| -> Option<DMatrix<f64>> {
        let fs = path.eval_raw(s);
        let a = fo.transpose() * &fs;
        a.try_inverse().map(|inv| fs * inv)
    };
    let deriv = |h: f64| -> Result<DMatrix<f64>> {
        let (a, b) = (path.start(), path.end());
        let fail = || Error::DegeneratePath(format!("graph chart singular near t = {t}"));
        if t - h < a - 1e-15 {
            let (g0, g1, g2) = (graph_rep(t).ok_or_else(fail)?, graph_rep(t + h).ok_or_else(fail)?, graph_rep(t + 2.0 * h).ok_or_else(fail)?);
            Ok((g1 * 4.0 - g0 * 3.0 - g2) / (2.0 * h))
        } else if t + h > b + 1e-15 {
            let (g0, g1, g2) = (graph_rep(t).ok_or_else(fail)?, graph_rep(t - h).ok_or_else(fail)?, graph_rep(t - 2.0 * h).ok_or_else(fail)?);
            Ok((g0 * 3.0 - g1 * 4.0 + g2) / (2.0 * h))
        } else {
            Ok((graph_rep(t + h).ok_or_else(fail)? - graph_rep(t - h).ok_or_else(fail)?) / (2.0 * h))
        }
    };
    let form = |h: f64| -> Result<DMatrix<f64>> {
        let q = c.transpose() * fo.transpose() * &j * deriv(h)? * &c;
        Ok((&q + q.transpose()) * 0.5)
    };
    let q1 = form(h)?;
    let q2 = form(0.5 * h)?;
    let ev1 = linalg::sym_eigenvalues(&q1);
    let ev2 = linalg::sym_eigenvalues(&q2);
    let sig = |ev: &[f64]| ev.iter().map(|&x| (x > 0.0) as i64 - (x < 0.0) as i64).sum::<i64>();
    let scale = ev2.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    let small = ev2.iter().any(|&x| x.abs() < 1e-7 * scale);
    let degenerate = small || sig(&ev1) != sig(&ev2) || max_abs(&(&q1 - &q2)) > 1e-3 * scale;
    Ok(CrossingForm { time: t, dim, signature: sig(&ev2), eigenvalues: ev2, matrix: q2, degenerate })
}

/// `μ_CZ(Φ) = μ(graph Φ, Δ)` in `(ℝ⁴ⁿ, (−ω) ⊕ ω)`.
pub fn conley_zehnder(path: &SymplecticPath, cfg: &MaslovConfig) -> Result<IndexResult> {
    let graph = path.graph_path();
    let diag = DoubleFrame::diagonal(path.n).to_standard();
    maslov_index(&graph, &diag, cfg)
}

/// `μ_CZ(Φ) − μ(Φ λ₀, λ₀)`; bounded by `2n` and independent of the path
/// between fixed endpoints.
pub fn hormander_defect(path: &SymplecticPath, lambda0: &LagrangianFrame, cfg: &MaslovConfig) -> Result<HalfInt> {
    let cz = conley_zehnder(path, cfg)?.value;
    let mu = maslov_index(&path.lagrangian_image(lambda0)?, lambda0, cfg)?.value;
    Ok(cz - mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_path(rate: f64, a: f64, b: f64) -> LagrangianPath {
        // harmonic flow applied to the vertical: (sin(rate t), cos(rate t))
        LagrangianPath::from_fn(1, a, b, 16, move |t| DMatrix::from_vec(2, 1, vec![(rate * t).sin(), (rate * t).cos()])).unwrap()
    }

    #[test]
    fn harmonic_vertical_counts_half_turns() {
        let cfg = MaslovConfig::default();
        let v = LagrangianFrame::vertical(1);
        let r = maslov_index(&rotation_path(1.0, 0.0, 2.0 * PI), &v, &cfg).unwrap();
        assert_eq!(r.value, HalfInt::from_int(2));
        assert_eq!(r.crossings.len(), 3);
        assert!(r.crossings.iter().all(|c| c.regular), "{:?}", r.crossings);
        let r = maslov_index(&rotation_path(1.0, 0.5, 4.0), &v, &cfg).unwrap();
        assert_eq!(r.value, HalfInt::from_int(1));
        let r = maslov_index(&rotation_path(-1.0, 0.0, 1.0), &v, &cfg).unwrap();
        assert_eq!(r.value, HalfInt::from_doubled(-1));
    }

    #[test]
    fn sampled_matches_analytic() {
        let cfg = MaslovConfig::default();
        let times: Vec<f64> = (0..=40).map(|i| 7.0 * i as f64 / 40.0).collect();
        let frames = times
            .iter()
            .map(|&t| LagrangianFrame::new(DMatrix::from_vec(2, 1, vec![t.sin(), t.cos()])).unwrap())
            .collect();
        let p = LagrangianPath::sampled(times, frames).unwrap();
        let v = LagrangianFrame::vertical(1);
        let a = maslov_index(&p, &v, &cfg).unwrap().value;
        let b = maslov_index(&rotation_path(1.0, 0.0, 7.0), &v, &cfg).unwrap().value;
        assert_eq!(a, b);
        assert_eq!(a, HalfInt::from_doubled(5));
    }
}

//! Hamiltonian flows and their linearizations.
//!
//! Hamilton's equations are `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q`, i.e. `ẋ = J⁻¹∇H`, and
//! the transfer matrix solves `Φ̇ = J⁻¹ Hess H Φ`. Both are advanced together
//! by an adaptive Dormand–Prince 5(4) scheme. The transfer is re-projected
//! onto Sp(2n) whenever its defect exceeds a tenth of the tolerance, and it
//! is restarted (a new epoch) whenever its entries exceed a bound, so that
//! hyperbolic orbits over long horizons stay well conditioned. The full
//! transfer is the product of the epoch transfers; Lagrangian frames are
//! pushed through the epochs with re-orthonormalization instead.

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{self, max_abs};
use crate::maslov::{maslov_index, IndexResult, LagrangianPath, MaslovConfig, PathKind};
use crate::symplectic::{resymplectify, standard_j, symplectic_residual, DoubleForm, DoubleFrame, LagrangianFrame};
use crate::tol::Tolerances;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    /// Coordinates on ℝⁿ.
    Euclidean,
    /// Angles on Tⁿ = ℝⁿ / 2πℤⁿ, kept unwrapped during integration.
    Torus,
}

impl Chart {
    /// Displacement `b − a` reduced to the fundamental domain for angles.
    pub fn displacement(&self, a: &DVector<f64>, b: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut d = b - a;
        if *self == Chart::Torus {
            for i in 0..n {
                d[i] = wrap_angle(d[i]);
            }
        }
        d
    }
}

/// Representative of an angle in `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = x - two_pi * (x / two_pi).round();
    if r <= -std::f64::consts::PI {
        r + two_pi
    } else {
        r
    }
}

/// A (possibly 1-periodic in time) Hamiltonian on `T*M`, `M = ℝⁿ` or `Tⁿ`.
pub trait HamiltonianSystem: Send + Sync {
    fn n(&self) -> usize;

    fn chart(&self) -> Chart;

    fn is_autonomous(&self) -> bool;

    fn hamiltonian(&self, t: f64, x: &DVector<f64>) -> f64;

    /// `(∂H/∂q, ∂H/∂p)`.
    fn gradient(&self, t: f64, x: &DVector<f64>) -> DVector<f64>;

    /// Defaults to centered differences of the gradient.
    fn hessian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        fd_hessian(|y| self.gradient(t, y), x)
    }

    /// Whether [`HamiltonianSystem::hessian`] is exact rather than a difference quotient.
    fn analytic_hessian(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

pub(crate) fn fd_hessian<G: Fn(&DVector<f64>) -> DVector<f64>>(grad: G, x: &DVector<f64>) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    for j in 0..d {
        let step = 1e-5 * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let col = (grad(&xp) - grad(&xm)) / (2.0 * step);
        h.set_column(j, &col);
    }
    (&h + h.transpose()) * 0.5
}

/// `J⁻¹ ∇H = (∂H/∂p, −∂H/∂q)`.
pub fn vector_field(sys: &dyn HamiltonianSystem, t: f64, x: &DVector<f64>) -> DVector<f64> {
    let n = sys.n();
    let g = sys.gradient(t, x);
    DVector::from_fn(2 * n, |i, _| if i < n { g[n + i] } else { -g[i - n] })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub tol: Tolerances,
    pub max_step: f64,
    pub first_step: f64,
    /// Entry bound on the epoch transfer that triggers a restart.
    pub restart_norm: f64,
    /// Max relative change of the transfer across one step.
    pub max_transfer_change: f64,
    pub blowup: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            tol: Tolerances::default(),
            max_step: 0.05,
            first_step: 1e-3,
            restart_norm: 32.0,
            max_transfer_change: 0.2,
            blowup: 1e8,
        }
    }
}

/// Samples of an orbit and of its linearization.
#[derive(Clone, Debug)]
pub struct OrbitSegment {
    n: usize,
    chart: Chart,
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
    local: Vec<DMatrix<f64>>,
    epoch: Vec<usize>,
    epoch_ends: Vec<DMatrix<f64>>,
    energies: Vec<f64>,
    max_residual: f64,
    autonomous: bool,
}

impl OrbitSegment {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().unwrap()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Max over samples of the symplectic defect of the stored transfers.
    pub fn max_symplectic_residual(&self) -> f64 {
        self.max_residual
    }

    /// `max |H(x(t)) − H(x(s))|` for autonomous systems.
    pub fn energy_drift(&self) -> Option<f64> {
        self.autonomous
            .then(|| self.energies.iter().fold(0.0f64, |a, &e| a.max((e - self.energies[0]).abs())))
    }

    pub fn epochs(&self) -> usize {
        self.epoch_ends.len() + 1
    }

    /// Full transfer `Φ(t_i)` as the product of epoch transfers. Can overflow
    /// for strongly hyperbolic orbits over long horizons.
    pub fn transfer(&self, i: usize) -> DMatrix<f64> {
        let mut m = self.local[i].clone();
        for e in (0..self.epoch[i]).rev() {
            m = m * &self.epoch_ends[e];
        }
        m
    }

    pub fn final_transfer(&self) -> DMatrix<f64> {
        self.transfer(self.times.len() - 1)
    }

    /// Orthonormal frames of `Φ(t_i) L` where `L` acts through `act(M, F)`.
    fn propagate<A>(&self, init: &DMatrix<f64>, act: A) -> Vec<DMatrix<f64>>
    where
        A: Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    {
        let mut base = linalg::orthonormalize(init);
        let mut cur = 0;
        let mut out = Vec::with_capacity(self.times.len());
        for i in 0..self.times.len() {
            while cur < self.epoch[i] {
                base = linalg::orthonormalize(&act(&self.epoch_ends[cur], &base));
                cur += 1;
            }
            out.push(linalg::orthonormalize(&act(&self.local[i], &base)));
        }
        out
    }

    /// Orthonormal frames of `Φ(t_i) · vertical`.
    pub fn vertical_frames(&self) -> Vec<DMatrix<f64>> {
        self.propagate(LagrangianFrame::vertical(self.n).columns(), |m, f| m * f)
    }

    fn double_frames(&self, init: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let d = 2 * self.n;
        self.propagate(init, move |m, f| {
            let mut g = f.clone();
            let bottom = m * f.rows(d, d);
            g.rows_mut(d, d).copy_from(&bottom);
            g
        })
    }

    /// `x(t)` for `t` inside the segment, by integrating from the nearest
    /// earlier sample.
    pub fn state_at(&self, sys: &dyn HamiltonianSystem, t: f64, cfg: &FlowConfig) -> Result<DVector<f64>> {
        let i = self.sample_before(t);
        let dt = t - self.times[i];
        if dt <= 0.0 {
            return Ok(self.states[i].clone());
        }
        let (x, _) = integrate_raw(sys, self.times[i], &self.states[i], dt, cfg, false)?;
        Ok(x)
    }

    fn sample_before(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.times.len() - 1)
    }

    /// CSV with columns `t, q.., p.., H, symplectic_residual`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n).map(|i| format!("q{i}")));
        header.extend((0..self.n).map(|i| format!("p{i}")));
        header.push("H".into());
        header.push("symplectic_residual".into());
        wr.write_record(&header)?;
        for i in 0..self.times.len() {
            let mut rec = vec![fmt_f64(self.times[i])];
            rec.extend(self.states[i].iter().map(|&v| fmt_f64(v)));
            rec.push(fmt_f64(self.energies[i]));
            rec.push(fmt_f64(symplectic_residual(&self.local[i]).unwrap_or(f64::NAN)));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const BS: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rhs<'a> {
    sys: &'a dyn HamiltonianSystem,
    n: usize,
    variational: bool,
    jinv: DMatrix<f64>,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        let d = 2 * self.n;
        let x = y.rows(0, d).into_owned();
        let mut out = DVector::zeros(y.len());
        out.rows_mut(0, d).copy_from(&vector_field(self.sys, t, &x));
        if self.variational {
            let l = DMatrix::from_column_slice(d, d, &y.as_slice()[d..]);
            let a = &self.jinv * self.sys.hessian(t, &x);
            let dl = a * l;
            out.rows_mut(d, d * d).copy_from_slice(dl.as_slice());
        }
        out
    }
}

struct Stepper<'a> {
    rhs: Rhs<'a>,
    cfg: &'a FlowConfig,
}

impl Stepper<'_> {
    /// One trial step; returns the candidate and its scaled error.
    fn step(&self, t: f64, y: &DVector<f64>, k1: &DVector<f64>, h: f64) -> (DVector<f64>, DVector<f64>, f64) {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(self.rhs.eval(t + C[s] * h, &ys));
        }
        let mut ynew = y.clone();
        let mut err = DVector::zeros(y.len());
        for s in 0..7 {
            if B[s] != 0.0 {
                ynew.axpy(h * B[s], &k[s], 1.0);
            }
            err.axpy(h * (B[s] - BS[s]), &k[s], 1.0);
        }
        let tol = self.cfg.tol.integration;
        let mut e = 0.0f64;
        for i in 0..y.len() {
            let sc = tol + tol * y[i].abs().max(ynew[i].abs());
            e = e.max(err[i].abs() / sc);
        }
        let fsal = k.pop().unwrap();
        (ynew, fsal, e)
    }
}

struct RawSample {
    t: f64,
    x: DVector<f64>,
    local: Option<DMatrix<f64>>,
    restart: bool,
}

/// Integrates from `(s, x0)` over a duration `t ≥ 0`, returning the final
/// state and, if requested, the sample sequence with epoch transfers.
fn integrate_core(
    sys: &dyn HamiltonianSystem,
    s: f64,
    x0: &DVector<f64>,
    t: f64,
    cfg: &FlowConfig,
    variational: bool,
    mut sink: Option<&mut Vec<RawSample>>,
) -> Result<(DVector<f64>, f64)> {
    let n = sys.n();
    let d = 2 * n;
    if x0.len() != d {
        return Err(Error::Dimension(format!("state of length {} for {n} degrees of freedom", x0.len())));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Invalid(format!("duration {t} must be finite and non-negative")));
    }
    let mut jinv = standard_j(n);
    jinv.neg_mut();
    let stepper = Stepper { rhs: Rhs { sys, n, variational, jinv }, cfg };
    let dim = if variational { d + d * d } else { d };
    let mut y = DVector::zeros(dim);
    y.rows_mut(0, d).copy_from(x0);
    if variational {
        for i in 0..d {
            y[d + i * d + i] = 1.0;
        }
    }
    let mut max_res = 0.0f64;
    if let Some(sink) = sink.as_deref_mut() {
        sink.push(RawSample {
            t: s,
            x: x0.clone(),
            local: variational.then(|| DMatrix::identity(d, d)),
            restart: false,
        });
    }
    let t_end = s + t;
    let mut tc = s;
    let mut h = cfg.first_step.min(cfg.max_step).min(t.max(1e-300));
    let mut k1 = stepper.rhs.eval(tc, &y);
    let h_min = 1e-13 * (1.0 + t_end.abs());
    let mut steps: u64 = 0;
    while tc < t_end {
        let last = tc + h >= t_end - 1e-14 * (1.0 + t_end.abs());
        let hh = if last { t_end - tc } else { h };
        let (mut ynew, fsal, err) = stepper.step(tc, &y, &k1, hh);
        let mut accept = err <= 1.0 && ynew.iter().all(|v| v.is_finite());
        if accept && variational {
            let lo = DMatrix::from_column_slice(d, d, &y.as_slice()[d..]);
            let ln = DMatrix::from_column_slice(d, d, &ynew.as_slice()[d..]);
            if max_abs(&(&ln - &lo)) > cfg.max_transfer_change * max_abs(&lo).max(1.0) {
                accept = false;
            }
        }
        if !accept {
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h = hh * factor;
            if h < h_min {
                return Err(Error::Integration(format!("step size underflow at t = {tc}")));
            }
            continue;
        }
        steps += 1;
        if steps > 50_000_000 {
            return Err(Error::Integration("step budget exhausted".into()));
        }
        tc = if last { t_end } else { tc + hh };
        let mut restart = false;
        let mut k_next = fsal;
        if variational {
            let mut l = DMatrix::from_column_slice(d, d, &ynew.as_slice()[d..]);
            let r = symplectic_residual(&l)?;
            if r > cfg.tol.symp / 10.0 {
                l = resymplectify(&l)
                    .map_err(|e| Error::Integration(format!("at t = {tc}: {e}")))?
                    .into_matrix();
                ynew.rows_mut(d, d * d).copy_from_slice(l.as_slice());
                k_next = stepper.rhs.eval(tc, &ynew);
            }
            max_res = max_res.max(symplectic_residual(&l)?);
            if max_abs(&l) > cfg.restart_norm && tc < t_end {
                restart = true;
            }
        }
        let xs = ynew.rows(0, d).into_owned();
        if xs.amax() > cfg.blowup {
            return Err(Error::Integration(format!("state blew up at t = {tc}")));
        }
        if let Some(sink) = sink.as_deref_mut() {
            sink.push(RawSample {
                t: tc,
                x: xs,
                local: variational.then(|| DMatrix::from_column_slice(d, d, &ynew.as_slice()[d..])),
                restart,
            });
        }
        y = ynew;
        if restart {
            for i in 0..d {
                for j in 0..d {
                    y[d + j * d + i] = if i == j { 1.0 } else { 0.0 };
                }
            }
            k_next = stepper.rhs.eval(tc, &y);
        }
        k1 = k_next;
        let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h = (hh * grow).min(cfg.max_step);
        if last {
            break;
        }
    }
    Ok((y.rows(0, d).into_owned(), max_res))
}

fn integrate_raw(
    sys: &dyn HamiltonianSystem,
    s: f64,
    x0: &DVector<f64>,
    t: f64,
    cfg: &FlowConfig,
    variational: bool,
) -> Result<(DVector<f64>, f64)> {
    integrate_core(sys, s, x0, t, cfg, variational, None)
}

/// `φ_{s,s+t}(x₀)` without the linearization.
pub fn flow_state(sys: &dyn HamiltonianSystem, s: f64, x0: &DVector<f64>, t: f64, cfg: &FlowConfig) -> Result<DVector<f64>> {
    Ok(integrate_raw(sys, s, x0, t, cfg, false)?.0)
}

/// Transfer matrix over `[s, s + t]` from state `x`, as a single matrix.
fn local_transfer(sys: &dyn HamiltonianSystem, s: f64, x: &DVector<f64>, t: f64, cfg: &FlowConfig) -> Result<DMatrix<f64>> {
    let mut samples = Vec::new();
    let mut c = *cfg;
    c.restart_norm = f64::INFINITY;
    integrate_core(sys, s, x, t, &c, true, Some(&mut samples))?;
    Ok(samples.pop().unwrap().local.unwrap())
}

/// Orbit of `(s, x₀)` over `[s, s + t]` with its transfer matrices.
pub fn integrate_orbit(sys: &dyn HamiltonianSystem, s: f64, x0: &DVector<f64>, t: f64, cfg: &FlowConfig) -> Result<OrbitSegment> {
    let mut raw = Vec::new();
    let (_, max_res) = integrate_core(sys, s, x0, t, cfg, true, Some(&mut raw))?;
    let n = sys.n();
    let mut seg = OrbitSegment {
        n,
        chart: sys.chart(),
        times: Vec::with_capacity(raw.len()),
        states: Vec::with_capacity(raw.len()),
        local: Vec::with_capacity(raw.len()),
        epoch: Vec::with_capacity(raw.len()),
        epoch_ends: Vec::new(),
        energies: Vec::with_capacity(raw.len()),
        max_residual: max_res,
        autonomous: sys.is_autonomous(),
    };
    let mut e = 0;
    for r in raw {
        seg.energies.push(sys.hamiltonian(r.t, &r.x));
        seg.times.push(r.t);
        seg.states.push(r.x);
        let l = r.local.unwrap();
        seg.epoch.push(e);
        if r.restart {
            seg.epoch_ends.push(l.clone());
            e += 1;
        }
        seg.local.push(l);
    }
    // samples that closed an epoch are stored with the closing transfer; the
    // epoch index must refer to the epoch they close
    Ok(seg)
}

fn frame_path<P>(
    sys: Arc<dyn HamiltonianSystem>,
    orbit: Arc<OrbitSegment>,
    frames: Vec<DMatrix<f64>>,
    path_n: usize,
    cfg: FlowConfig,
    act_post: P,
) -> LagrangianPath
where
    P: Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64> + Send + Sync + 'static,
{
    let grid = orbit.times.clone();
    let frames = Arc::new(frames);
    let f = Arc::new(move |t: f64| {
        let i = orbit.sample_before(t);
        let dt = t - orbit.times[i];
        if dt <= 0.0 || i + 1 == orbit.times.len() {
            return act_post(&DMatrix::identity(2 * orbit.n, 2 * orbit.n), &frames[i]);
        }
        match local_transfer(sys.as_ref(), orbit.times[i], &orbit.states[i], dt, &cfg) {
            Ok(l) => act_post(&l, &frames[i]),
            Err(_) => act_post(&DMatrix::identity(2 * orbit.n, 2 * orbit.n), &frames[i]),
        }
    });
    LagrangianPath::from_parts(path_n, grid, PathKind::Analytic, f)
}

/// `t ↦ Φ(t) · vertical` along the orbit, refinable between samples.
pub fn vertical_evolution(sys: Arc<dyn HamiltonianSystem>, orbit: Arc<OrbitSegment>, cfg: &FlowConfig) -> LagrangianPath {
    let frames = orbit.vertical_frames();
    let n = orbit.n;
    frame_path(sys, orbit, frames, n, *cfg, |l, f| l * f)
}

/// `t ↦ graph(Φ(t) Ψ)` along the orbit in the standard 2n-dof space, where
/// the double frame `init` spans `graph Ψ` (the diagonal when `None`).
pub fn graph_evolution(
    sys: Arc<dyn HamiltonianSystem>,
    orbit: Arc<OrbitSegment>,
    init: Option<&DMatrix<f64>>,
    cfg: &FlowConfig,
) -> (LagrangianPath, DMatrix<f64>) {
    let n = orbit.n;
    let d = 2 * n;
    let diag = DoubleFrame::diagonal(n).columns().clone();
    let frames = orbit.double_frames(init.unwrap_or(&diag));
    let last = frames.last().unwrap().clone();
    let t_map = DoubleForm { n }.to_standard();
    let path = frame_path(sys, orbit, frames, 2 * n, *cfg, move |l, f| {
        let mut g = f.clone();
        let bottom = l * f.rows(d, d);
        g.rows_mut(d, d).copy_from(&bottom);
        &t_map * g
    });
    (path, last)
}

/// Finite-time Maslov function `μ_t(s, x) = μ(Φ vertical |[s, s+t], vertical) − n/2`.
///
/// For `t = 0` the value is the limit from the right, `½ sign ∂²H/∂p² − n/2`,
/// which vanishes for fiber-convex Hamiltonians.
pub fn mu_t(sys: Arc<dyn HamiltonianSystem>, s: f64, x: &DVector<f64>, t: f64, cfg: &FlowConfig, mcfg: &MaslovConfig) -> Result<HalfInt> {
    Ok(mu_t_detailed(sys, s, x, t, cfg, mcfg)?.0)
}

pub fn mu_t_detailed(
    sys: Arc<dyn HamiltonianSystem>,
    s: f64,
    x: &DVector<f64>,
    t: f64,
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<(HalfInt, Option<IndexResult>)> {
    let n = sys.n();
    if t == 0.0 {
        let h = sys.hessian(s, x);
        let hpp = h.view((n, n), (n, n)).into_owned();
        let sig: i64 = linalg::sym_eigenvalues(&hpp).iter().map(|&e| (e > 0.0) as i64 - (e < 0.0) as i64).sum();
        return Ok((HalfInt::from_doubled(sig - n as i64), None));
    }
    let orbit = Arc::new(integrate_orbit(sys.as_ref(), s, x, t, cfg)?);
    let path = vertical_evolution(sys, orbit, cfg);
    let r = maslov_index(&path, &LagrangianFrame::vertical(n), mcfg)?;
    Ok((r.value - HalfInt::from_doubled(n as i64), Some(r)))
}

/// Closing error of a k-periodic candidate, angles reduced mod 2π.
pub fn closing_error(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, xk: &DVector<f64>) -> f64 {
    sys.chart().displacement(x0, xk, sys.n()).amax()
}

/// Conley–Zehnder index of the linearized flow along a k-periodic orbit.
pub fn monodromy_index(sys: Arc<dyn HamiltonianSystem>, x0: &DVector<f64>, k: f64, cfg: &FlowConfig, mcfg: &MaslovConfig) -> Result<IndexResult> {
    let orbit = Arc::new(integrate_orbit(sys.as_ref(), 0.0, x0, k, cfg)?);
    let err = closing_error(sys.as_ref(), x0, orbit.final_state());
    if err > 10.0 * cfg.tol.periodic.max(cfg.tol.integration) {
        return Err(Error::NotPeriodic(format!("closing error {err:e} after time {k}")));
    }
    let (path, _) = graph_evolution(sys, orbit, None, cfg);
    let diag = DoubleFrame::diagonal(path.n() / 2).to_standard();
    maslov_index(&path, &diag, mcfg)
}

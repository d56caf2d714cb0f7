//! Asymptotic Maslov index of orbits and invariant measures.
//!
//! Pointwise estimates use `μ_T / T` over a schedule of horizons; the
//! uniform bound `|μ̂ − μ_T/T| ≤ 2n/T` gives the reported half-width. For a
//! periodic orbit the Bott mean index `lim μ_CZ^{hk}/(hk)` is computed from
//! iterates of the linearized period map.

use crate::error::{Error, Result};
use crate::flow::{
    closing_error, flow_state, graph_evolution, mu_t, integrate_orbit, vertical_evolution, Chart, FlowConfig, HamiltonianSystem,
};
use crate::halfint::HalfInt;
use crate::maslov::{maslov_index, MaslovConfig};
use crate::symplectic::{DoubleFrame, LagrangianFrame};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const DEFAULT_SCHEDULE: [f64; 4] = [25.0, 50.0, 100.0, 200.0];

/// A mean-index estimate with its half-width `2n/T`. The band is rigorous
/// for Bott indices of periodic orbits and a heuristic for pointwise estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub halfwidth: f64,
    /// Estimates at each horizon of the schedule.
    pub sequence: Vec<f64>,
}

impl Estimate {
    /// Successive estimates differ by at most `2n(1/Tᵢ + 1/Tⱼ)`.
    pub fn band_consistent(&self, horizons: &[f64], n: usize) -> bool {
        let n = n as f64;
        for i in 0..self.sequence.len() {
            for j in 0..i {
                let band = 2.0 * n * (1.0 / horizons[i] + 1.0 / horizons[j]) + 1e-12;
                if (self.sequence[i] - self.sequence[j]).abs() > band {
                    return false;
                }
            }
        }
        true
    }
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() || schedule.iter().any(|&t| !(t > 0.0 && t.is_finite())) || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("horizon schedule must be positive and increasing".into()));
    }
    Ok(())
}

/// `μ_T(s, x)` for every `T` of an increasing schedule, from one orbit.
pub fn mu_t_schedule(
    sys: Arc<dyn HamiltonianSystem>,
    s: f64,
    x: &DVector<f64>,
    schedule: &[f64],
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<Vec<HalfInt>> {
    check_schedule(schedule)?;
    let n = sys.n();
    let tmax = *schedule.last().unwrap();
    let orbit = Arc::new(integrate_orbit(sys.as_ref(), s, x, tmax, cfg)?);
    let path = vertical_evolution(sys, orbit, cfg);
    let v = LagrangianFrame::vertical(n);
    let mut acc = HalfInt::ZERO;
    let mut prev = s;
    let mut out = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let end = if t == tmax { path.end() } else { s + t };
        acc += maslov_index(&path.restrict(prev, end)?, &v, mcfg)?.value;
        prev = end;
        out.push(acc - HalfInt::from_doubled(n as i64));
    }
    Ok(out)
}

/// `μ̂(s, x) ≈ μ_T/T` over the schedule, with the nominal half-width
/// `2n/T_max`; convergence shows in the spread of `sequence`.
pub fn asymptotic_index_point(
    sys: Arc<dyn HamiltonianSystem>,
    s: f64,
    x: &DVector<f64>,
    schedule: &[f64],
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<Estimate> {
    let n = sys.n();
    let mus = mu_t_schedule(sys, s, x, schedule, cfg, mcfg)?;
    let sequence: Vec<f64> = mus.iter().zip(schedule).map(|(m, t)| m.to_f64() / t).collect();
    let tmax = *schedule.last().unwrap();
    Ok(Estimate { value: *sequence.last().unwrap(), horizon: tmax, halfwidth: 2.0 * n as f64 / tmax, sequence })
}

/// `μ_{t+t′}(s, x) − μ_t(s, x) − μ_{t′}(φ_t(s, x))`, bounded by `2n` in absolute value.
pub fn subadditivity_defect(
    sys: Arc<dyn HamiltonianSystem>,
    s: f64,
    x: &DVector<f64>,
    t: f64,
    t2: f64,
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<HalfInt> {
    let whole = mu_t(sys.clone(), s, x, t + t2, cfg, mcfg)?;
    let first = mu_t(sys.clone(), s, x, t, cfg, mcfg)?;
    let xt = flow_state(sys.as_ref(), s, x, t, cfg)?;
    let second = mu_t(sys, s + t, &xt, t2, cfg, mcfg)?;
    Ok(whole - first - second)
}

/// Bott mean index of a periodic orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BottEstimate {
    pub estimate: Estimate,
    /// `μ_CZ` over `[0, hk]` for `h = 1..=h_max`.
    pub iterates: Vec<HalfInt>,
    /// `|μ_CZ^{hk} − hk·μ̂| ≤ 2n` for every iterate.
    pub bound_holds: bool,
}

/// `μ̂ = μ_CZ^{h_max k} / (h_max k)` for the orbit through `x₀` of period `k`
/// (any positive period for autonomous systems, an integer otherwise).
pub fn bott_index_periodic(
    sys: Arc<dyn HamiltonianSystem>,
    x0: &DVector<f64>,
    k: f64,
    h_max: usize,
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<BottEstimate> {
    if h_max == 0 || !(k > 0.0) {
        return Err(Error::Invalid("need k > 0 and h_max ≥ 1".into()));
    }
    if !sys.is_autonomous() && (k - k.round()).abs() > 1e-12 {
        return Err(Error::Invalid(format!("period {k} of a time-periodic system must be an integer")));
    }
    let n = sys.n();
    let orbit = Arc::new(integrate_orbit(sys.as_ref(), 0.0, x0, k, cfg)?);
    let err = closing_error(sys.as_ref(), x0, orbit.final_state());
    if err > cfg.tol.periodic.max(100.0 * cfg.tol.integration) * (1.0 + x0.amax()) {
        return Err(Error::NotPeriodic(format!("closing error {err:e} after time {k}")));
    }
    let diag = DoubleFrame::diagonal(n).to_standard();
    let mut init = DoubleFrame::diagonal(n).columns().clone();
    let mut acc = HalfInt::ZERO;
    let mut iterates = Vec::with_capacity(h_max);
    for _ in 0..h_max {
        let (path, last) = graph_evolution(sys.clone(), orbit.clone(), Some(&init), cfg);
        acc += maslov_index(&path, &diag, mcfg)?.value;
        iterates.push(acc);
        init = last;
    }
    let sequence: Vec<f64> = iterates.iter().enumerate().map(|(h, m)| m.to_f64() / ((h + 1) as f64 * k)).collect();
    let horizon = h_max as f64 * k;
    let value = *sequence.last().unwrap();
    let bound_holds = iterates
        .iter()
        .enumerate()
        .all(|(h, m)| (m.to_f64() - (h + 1) as f64 * k * value).abs() <= 2.0 * n as f64 + 1e-9);
    Ok(BottEstimate {
        estimate: Estimate { value, horizon, halfwidth: 2.0 * n as f64 / horizon, sequence },
        iterates,
        bound_holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSample {
    /// Time phase in `[0, 1)`.
    pub s: f64,
    pub x: DVector<f64>,
    pub w: f64,
}

/// A finitely supported probability measure on `S¹ × T*M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub n: usize,
    pub samples: Vec<MeasureSample>,
}

impl DiscreteMeasure {
    pub fn new(n: usize, samples: Vec<MeasureSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty measure".into()));
        }
        if samples.iter().any(|m| m.x.len() != 2 * n) {
            return Err(Error::Dimension("sample of wrong dimension".into()));
        }
        if samples.iter().any(|m| !(m.w >= 0.0) || !(0.0..1.0).contains(&m.s)) {
            return Err(Error::Invalid("weights must be non-negative and phases in [0, 1)".into()));
        }
        let total: f64 = samples.iter().map(|m| m.w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { n, samples })
    }
}

/// Uniform measure on the orbit of period `k`, sampled at `max(64k, min_samples)`
/// equally spaced times.
pub fn measure_from_periodic_orbit(
    sys: &dyn HamiltonianSystem,
    x0: &DVector<f64>,
    k: usize,
    min_samples: usize,
    cfg: &FlowConfig,
) -> Result<DiscreteMeasure> {
    if k == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    let m = (64 * k).max(min_samples);
    let m = m.div_ceil(k) * k;
    let orbit = integrate_orbit(sys, 0.0, x0, k as f64, cfg)?;
    let err = closing_error(sys, x0, orbit.final_state());
    if err > cfg.tol.periodic.max(100.0 * cfg.tol.integration) * (1.0 + x0.amax()) {
        return Err(Error::NotPeriodic(format!("closing error {err:e}")));
    }
    let w = 1.0 / m as f64;
    let mut samples = Vec::with_capacity(m);
    for j in 0..m {
        let t = k as f64 * j as f64 / m as f64;
        let x = orbit.state_at(sys, t, cfg)?;
        samples.push(MeasureSample { s: t - t.floor(), x, w });
    }
    DiscreteMeasure::new(sys.n(), samples)
}

/// `∫ μ_T dη / T` over the schedule, each sample evaluated independently.
pub fn asymptotic_index_measure(
    sys: Arc<dyn HamiltonianSystem>,
    eta: &DiscreteMeasure,
    schedule: &[f64],
    cfg: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<Estimate> {
    check_schedule(schedule)?;
    if eta.n != sys.n() {
        return Err(Error::Dimension("measure and system dimensions differ".into()));
    }
    let per: Vec<Result<Vec<HalfInt>>> = eta
        .samples
        .par_iter()
        .map(|m| mu_t_schedule(sys.clone(), m.s, &m.x, schedule, cfg, mcfg))
        .collect();
    let mut sums = vec![0.0; schedule.len()];
    for (m, r) in eta.samples.iter().zip(per) {
        for (acc, mu) in sums.iter_mut().zip(r?) {
            *acc += m.w * mu.to_f64();
        }
    }
    let sequence: Vec<f64> = sums.iter().zip(schedule).map(|(s, t)| s / t).collect();
    let tmax = *schedule.last().unwrap();
    Ok(Estimate { value: *sequence.last().unwrap(), horizon: tmax, halfwidth: 2.0 * sys.n() as f64 / tmax, sequence })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub first: f64,
    pub second: f64,
    pub tail_mass: f64,
}

/// `∫|p| dη`, `∫|p|² dη` and the mass with `|p| > cutoff`.
pub fn moment_diagnostics(eta: &DiscreteMeasure, cutoff: f64) -> Moments {
    let n = eta.n;
    let mut m = Moments { first: 0.0, second: 0.0, tail_mass: 0.0 };
    for s in &eta.samples {
        let p = s.x.rows(n, n).norm();
        m.first += s.w * p;
        m.second += s.w * p * p;
        if p > cutoff {
            m.tail_mass += s.w;
        }
    }
    m
}

/// Largest total-variation distance between coordinate histograms of `η` and
/// of its push-forward by the time-one map. Small for invariant measures.
pub fn pushforward_defect(sys: &dyn HamiltonianSystem, eta: &DiscreteMeasure, bins: usize, cfg: &FlowConfig) -> Result<f64> {
    let n = eta.n;
    let moved: Vec<DVector<f64>> = eta
        .samples
        .iter()
        .map(|m| flow_state(sys, m.s, &m.x, 1.0, cfg))
        .collect::<Result<_>>()?;
    let coord = |x: &DVector<f64>, i: usize| {
        if i < n && sys.chart() == Chart::Torus {
            crate::flow::wrap_angle(x[i])
        } else {
            x[i]
        }
    };
    let mut worst = 0.0f64;
    for i in 0..2 * n {
        let vals: Vec<f64> = eta.samples.iter().map(|m| coord(&m.x, i)).chain(moved.iter().map(|x| coord(x, i))).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo).max(1e-12) / bins as f64;
        let bin = |v: f64| (((v - lo) / width) as usize).min(bins - 1);
        let mut h = vec![0.0; bins];
        for (m, x) in eta.samples.iter().zip(&moved) {
            h[bin(coord(&m.x, i))] += m.w;
            h[bin(coord(x, i))] -= m.w;
        }
        worst = worst.max(0.5 * h.iter().map(|v: &f64| v.abs()).sum::<f64>());
    }
    Ok(worst)
}

//! Periodic orbits by shooting, their index–action cloud, and the empirical
//! β-function.
//!
//! β̂ is built from periodic-orbit measures only, a subset of all invariant
//! measures, so it estimates β from above.

use crate::asymptotic::{
    asymptotic_index_point, bott_index_periodic, measure_from_periodic_orbit, moment_diagnostics, Estimate, Moments,
};
use crate::error::{Error, Result};
use crate::flow::{
    closing_error, flow_state, integrate_orbit, vector_field, wrap_angle, Chart, FlowConfig, HamiltonianSystem,
};
use crate::halfint::HalfInt;
use crate::maslov::MaslovConfig;
use crate::systems::{self, EmLagrangian};
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitRecord {
    pub id: usize,
    /// Index of the seed Newton started from.
    pub seed: usize,
    pub k: usize,
    pub minimal_period: usize,
    pub x0: Vec<f64>,
    /// Net turns of each angle over one period `k` (zero on ℝⁿ).
    pub winding: Vec<i64>,
    pub contractible: bool,
    pub cz: HalfInt,
    pub bott: Estimate,
    /// `|μ_CZ^{hk} − hk·μ̂| ≤ 2n` for all computed iterates.
    pub bott_bound: bool,
    pub action: f64,
    pub residual: f64,
    /// Newton used a rank-deficient pseudo-inverse.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Seeds per configuration angle or coordinate.
    pub q_points: usize,
    /// Seeds per momentum coordinate, spread over `[−p_max, p_max]`.
    pub p_points: usize,
    pub p_max: f64,
    /// Range of configuration seeds on ℝⁿ (the torus uses `[−π, π)`).
    pub q_max: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Orbits closer than this are merged.
    pub dedup_tol: f64,
    /// The Bott index uses `h_max = ⌈bott_horizon/k⌉` iterates.
    pub bott_horizon: f64,
    /// Nodes of the action quadrature per unit time.
    pub action_nodes: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            q_points: 8,
            p_points: 9,
            p_max: 2.5,
            q_max: 2.0,
            newton_tol: 1e-10,
            max_newton: 40,
            dedup_tol: 1e-6,
            bott_horizon: 200.0,
            action_nodes: 256,
        }
    }
}

/// Outcome of a Newton run that did not produce a record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: usize,
    pub k: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub records: Vec<PeriodicOrbitRecord>,
    pub failures: Vec<SeedFailure>,
}

fn seeds(n: usize, chart: Chart, cfg: &SearchConfig) -> Vec<DVector<f64>> {
    let qs: Vec<f64> = (0..cfg.q_points)
        .map(|i| match chart {
            Chart::Torus => -PI + 2.0 * PI * (i as f64 + 0.5) / cfg.q_points as f64,
            Chart::Euclidean => -cfg.q_max + 2.0 * cfg.q_max * (i as f64 + 0.5) / cfg.q_points as f64,
        })
        .collect();
    let ps: Vec<f64> = (0..cfg.p_points)
        .map(|i| if cfg.p_points == 1 { 0.0 } else { -cfg.p_max + 2.0 * cfg.p_max * i as f64 / (cfg.p_points - 1) as f64 })
        .collect();
    let total = (cfg.q_points * cfg.p_points).pow(n as u32);
    let mut out = Vec::with_capacity(total + 2);
    // equilibria-friendly seeds first: the origin and the point (π, 0, ..)
    out.push(DVector::zeros(2 * n));
    if chart == Chart::Torus {
        let mut x = DVector::zeros(2 * n);
        x.rows_mut(0, n).fill(PI - 1e-3);
        out.push(x);
    }
    for idx in 0..total {
        let mut r = idx;
        let mut x = DVector::zeros(2 * n);
        for i in 0..n {
            x[i] = qs[r % cfg.q_points];
            r /= cfg.q_points;
            x[n + i] = ps[r % cfg.p_points];
            r /= cfg.p_points;
        }
        out.push(x);
    }
    out
}

fn reduce(chart: Chart, n: usize, x: &mut DVector<f64>) {
    if chart == Chart::Torus {
        for i in 0..n {
            x[i] = wrap_angle(x[i]);
        }
    }
}

struct Fixed {
    x: DVector<f64>,
    residual: f64,
    degenerate: bool,
}

/// Newton iteration on `x ↦ φ_k(x) − x` with Jacobian `Φ(k) − I`.
fn newton(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, k: f64, flow: &FlowConfig, cfg: &SearchConfig) -> Result<Fixed> {
    let n = sys.n();
    let chart = sys.chart();
    let id = DMatrix::<f64>::identity(2 * n, 2 * n);
    let mut x = x0.clone();
    reduce(chart, n, &mut x);
    let mut best: Option<Fixed> = None;
    let mut stalled = 0;
    for _ in 0..cfg.max_newton {
        let orbit = integrate_orbit(sys, 0.0, &x, k, flow)?;
        let f = chart.displacement(&x, orbit.final_state(), n);
        let res = f.amax();
        {
            let j = orbit.final_transfer() - &id;
            let svd = j.svd(true, true);
            let smax = svd.singular_values.max();
            let degenerate = svd.singular_values.iter().any(|&s| s <= 1e-8 * smax);
            if best.as_ref().is_none_or(|b| res < 0.5 * b.residual) {
                stalled = 0;
            } else {
                stalled += 1;
            }
            if best.as_ref().is_none_or(|b| res < b.residual) {
                best = Some(Fixed { x: x.clone(), residual: res, degenerate });
            }
            if res < 1e-13 || (stalled >= 3 && best.as_ref().is_some_and(|b| b.residual <= cfg.newton_tol)) || stalled >= 8 {
                break;
            }
            let mut step = -svd.solve(&f, 1e-8 * smax).map_err(|e| Error::Invalid(e.to_string()))?;
            let norm = step.norm();
            if norm > 1.0 {
                step /= norm;
            }
            if norm < 1e-15 {
                break;
            }
            x += step;
            reduce(chart, n, &mut x);
        }
        if x.amax() > 1e3 {
            return Err(Error::Integration("Newton iterate left the search region".into()));
        }
    }
    let best = best.unwrap();
    if best.residual > cfg.newton_tol.max(flow.tol.periodic) {
        return Err(Error::NotPeriodic(format!("Newton stalled at residual {:e}", best.residual)));
    }
    Ok(best)
}

/// Net turns of each angle along `[0, k]`.
fn winding(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, k: f64, flow: &FlowConfig) -> Result<Vec<i64>> {
    let n = sys.n();
    if sys.chart() == Chart::Euclidean {
        return Ok(vec![0; n]);
    }
    let orbit = integrate_orbit(sys, 0.0, x0, k, flow)?;
    let end = orbit.final_state();
    Ok((0..n).map(|i| ((end[i] - x0[i]) / (2.0 * PI)).round() as i64).collect())
}

/// Smallest divisor `d` of `k` with `φ_d(x₀) = x₀`.
fn minimal_period(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, k: usize, flow: &FlowConfig) -> Result<usize> {
    for d in (1..k).filter(|d| k % d == 0) {
        let xd = flow_state(sys, 0.0, x0, d as f64, flow)?;
        if closing_error(sys, x0, &xd) < 1e-6 {
            return Ok(d);
        }
    }
    Ok(k)
}

/// Chart distance from `y` to the orbit of `x0` over `[0, k]`: all times for
/// autonomous systems, integer times otherwise.
fn orbit_distance(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, k: usize, y: &DVector<f64>, flow: &FlowConfig) -> Result<f64> {
    let n = sys.n();
    let dist = |x: &DVector<f64>| sys.chart().displacement(x, y, n).norm();
    if !sys.is_autonomous() {
        let mut x = x0.clone();
        let mut best = dist(&x);
        for j in 1..k {
            x = flow_state(sys, (j - 1) as f64, &x, 1.0, flow)?;
            best = best.min(dist(&x));
        }
        return Ok(best);
    }
    let orbit = integrate_orbit(sys, 0.0, x0, k as f64, flow)?;
    let m = 64 * k;
    let mut best = (f64::INFINITY, 0.0);
    for j in 0..m {
        let t = k as f64 * j as f64 / m as f64;
        let d = dist(&orbit.state_at(sys, t, flow)?);
        if d < best.0 {
            best = (d, t);
        }
    }
    // Newton on ⟨x(t) − y, ẋ(t)⟩ = 0 from the nearest sample
    let mut t = best.1;
    let mut x = orbit.state_at(sys, t, flow)?;
    for _ in 0..8 {
        let f = vector_field(sys, t, &x);
        let d = sys.chart().displacement(y, &x, n);
        let ff = f.norm_squared();
        if ff < 1e-30 {
            break;
        }
        let dt = (-d.dot(&f) / ff).clamp(-0.5, 0.5);
        if dt.abs() < 1e-14 {
            break;
        }
        t = (t + dt).rem_euclid(k as f64);
        x = orbit.state_at(sys, t, flow)?;
    }
    Ok(best.0.min(dist(&x)))
}

/// `(1/T)∫₀^T L(t, γ, γ̇) dt` along the solution through `x₀`, composite
/// Simpson rule on `nodes` (rounded up to even) flow samples.
pub fn orbit_action(lag: &EmLagrangian, x0: &DVector<f64>, s: f64, period: f64, nodes: usize, flow: &FlowConfig) -> Result<f64> {
    let sys = lag.hamiltonian();
    let n = lag.n();
    let m = nodes.max(2).next_multiple_of(2);
    let h = period / m as f64;
    let mut x = x0.clone();
    let mut sum = 0.0;
    for j in 0..=m {
        let t = s + j as f64 * h;
        if j > 0 {
            x = flow_state(&sys, t - h, &x, h, flow)?;
        }
        let q = x.rows(0, n).into_owned();
        let v = lag.inverse_legendre(t, &q, &x.rows(n, n).into_owned());
        let w = if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * lag.lagrangian(t, &q, &v);
    }
    Ok(sum * h / 3.0 / period)
}

/// k-periodic orbits of an electromagnetic system from a grid of seeds.
///
/// Newton failures are collected per seed and never abort the search.
/// Records are deduplicated and sorted by seed index.
pub fn find_periodic_orbits(
    lag: &EmLagrangian,
    k: usize,
    cfg: &SearchConfig,
    flow: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<SearchResult> {
    if k == 0 {
        return Err(Error::Invalid("period must be positive".into()));
    }
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(lag.hamiltonian());
    let n = sys.n();
    let seeds = seeds(n, sys.chart(), cfg);
    let found: Vec<std::result::Result<Fixed, String>> = seeds
        .par_iter()
        .map(|s| newton(sys.as_ref(), s, k as f64, flow, cfg).map_err(|e| e.to_string()))
        .collect();
    let mut result = SearchResult::default();
    let mut kept: Vec<(usize, Fixed, usize)> = Vec::new();
    for (seed, f) in found.into_iter().enumerate() {
        match f {
            Err(reason) => result.failures.push(SeedFailure { seed, k, reason }),
            Ok(f) => {
                let minimal = minimal_period(sys.as_ref(), &f.x, k, flow)?;
                let mut duplicate = false;
                for (_, g, gm) in &kept {
                    if *gm == minimal && orbit_distance(sys.as_ref(), &g.x, k, &f.x, flow)? < cfg.dedup_tol.max(10.0 * f.residual) {
                        duplicate = true;
                        break;
                    }
                }
                if !duplicate {
                    kept.push((seed, f, minimal));
                }
            }
        }
    }
    let records: Vec<Result<PeriodicOrbitRecord>> = kept
        .par_iter()
        .enumerate()
        .map(|(id, (seed, f, minimal))| {
            let h_max = (cfg.bott_horizon / k as f64).ceil().max(1.0) as usize;
            let bott = bott_index_periodic(sys.clone(), &f.x, k as f64, h_max, flow, mcfg)?;
            let cz = bott.iterates[0];
            let w = winding(sys.as_ref(), &f.x, k as f64, flow)?;
            let action = orbit_action(lag, &f.x, 0.0, k as f64, cfg.action_nodes * k, flow)?;
            Ok(PeriodicOrbitRecord {
                id,
                seed: *seed,
                k,
                minimal_period: *minimal,
                x0: f.x.iter().copied().collect(),
                contractible: w.iter().all(|&v| v == 0),
                winding: w,
                cz,
                bott: bott.estimate,
                bott_bound: bott.bound_holds,
                action,
                residual: f.residual,
                degenerate: f.degenerate,
            })
        })
        .collect();
    for r in records {
        match r {
            Ok(r) => result.records.push(r),
            Err(e) => result.failures.push(SeedFailure { seed: usize::MAX, k, reason: e.to_string() }),
        }
    }
    Ok(result)
}

/// Periodic orbits for every `k ≤ k_max`, renumbered in order of discovery.
pub fn find_periodic_orbits_up_to(
    lag: &EmLagrangian,
    k_max: usize,
    cfg: &SearchConfig,
    flow: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<SearchResult> {
    let mut all = SearchResult::default();
    for k in 1..=k_max {
        let r = find_periodic_orbits(lag, k, cfg, flow, mcfg)?;
        all.failures.extend(r.failures);
        for mut rec in r.records {
            rec.id = all.records.len();
            all.records.push(rec);
        }
    }
    Ok(all)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaBin {
    pub r: f64,
    /// Minimal action among records within the bin, `None` for a gap.
    pub beta: Option<f64>,
    pub witness: Option<usize>,
    /// Mean index of the witness, within one bin width of `r`.
    pub witness_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub a1: f64,
    pub big_a1: f64,
    pub a2: f64,
    pub big_a2: f64,
}

impl Envelope {
    pub fn lower(&self, r: f64) -> f64 {
        self.a1 * r * r - self.big_a1
    }

    pub fn upper(&self, r: f64) -> f64 {
        self.a2 * r * r + self.big_a2
    }

    /// `C` with `a₂r² + A₂ ≤ C(1 + r²)`.
    pub fn growth_constant(&self) -> f64 {
        self.a2.max(self.big_a2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaCurve {
    pub bins: Vec<BetaBin>,
    /// Vertices `(r, action)` of the lower convex hull, increasing in `r`.
    pub hull: Vec<(f64, f64)>,
    pub envelope: Envelope,
}

impl BetaCurve {
    /// Piecewise-linear hull value, `None` outside its range.
    pub fn hull_at(&self, r: f64) -> Option<f64> {
        let h = &self.hull;
        if h.is_empty() || r < h[0].0 || r > h[h.len() - 1].0 {
            return None;
        }
        if h.len() == 1 {
            return Some(h[0].1);
        }
        let i = h.partition_point(|p| p.0 <= r).clamp(1, h.len() - 1);
        let (a, b) = (h[i - 1], h[i]);
        let s = if b.0 > a.0 { (r - a.0) / (b.0 - a.0) } else { 0.0 };
        Some(a.1 + s * (b.1 - a.1))
    }

    /// Slopes of consecutive hull edges are nondecreasing, in exact rational arithmetic.
    pub fn hull_is_convex(&self) -> bool {
        self.hull.windows(3).all(|w| orient(w[0], w[1], w[2]) != Ordering::Less)
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

// sign of the cross product (b − a) × (c − a), exactly
fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> Ordering {
    let (ax, ay, bx, by, cx, cy) = (rat(a.0), rat(a.1), rat(b.0), rat(b.1), rat(c.0), rat(c.1));
    let lhs = (&bx - &ax) * (&cy - &ay);
    let rhs = (&by - &ay) * (&cx - &ax);
    lhs.cmp(&rhs)
}

/// Lower convex hull of a point cloud (exact orientation tests).
pub fn lower_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) != Ordering::Greater {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// β̂ on bins of width `bin_width` over `[r_lo, r_hi]` (default
/// `[0, 1.2·max μ̂]`), the lower hull of the cloud, and a quadratic envelope
/// `a₁r² − A₁ ≤ hull ≤ a₂r² + A₂` valid on the whole hull range.
pub fn beta_estimate(records: &[PeriodicOrbitRecord], bin_width: f64, range: Option<(f64, f64)>) -> Result<BetaCurve> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no periodic-orbit records".into()));
    }
    if !(bin_width > 0.0) {
        return Err(Error::Invalid("bin width must be positive".into()));
    }
    let cloud: Vec<(f64, f64)> = records.iter().map(|r| (r.bott.value, r.action)).collect();
    let max_r = cloud.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = range.unwrap_or((0.0, 1.2 * max_r.max(0.0)));
    let count = ((hi - lo) / bin_width).floor() as usize + 1;
    let bins = (0..count)
        .map(|i| {
            let r = lo + i as f64 * bin_width;
            let best = records
                .iter()
                .filter(|rec| (rec.bott.value - r).abs() <= bin_width)
                .min_by(|a, b| a.action.total_cmp(&b.action).then(a.id.cmp(&b.id)));
            BetaBin { r, beta: best.map(|b| b.action), witness: best.map(|b| b.id), witness_r: best.map(|b| b.bott.value) }
        })
        .collect();
    let hull = lower_hull(&cloud);
    let envelope = fit_envelope(&hull);
    Ok(BetaCurve { bins, hull, envelope })
}

// Least-squares a·r² + b through the hull vertices, then the smallest
// offsets making both quadratics bracket the piecewise-linear hull.
fn fit_envelope(hull: &[(f64, f64)]) -> Envelope {
    let m = hull.len() as f64;
    let (sx, sy) = hull.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 * p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (mut cov, mut var) = (0.0, 0.0);
    for p in hull {
        let u = p.0 * p.0 - mx;
        cov += u * (p.1 - my);
        var += u * u;
    }
    let a = if var > 0.0 { (cov / var).max(1e-6) } else { 1e-6 };
    // lower: a r² − A₁ ≤ linear on each edge iff it holds at the vertices
    let big_a1 = hull.iter().map(|p| a * p.0 * p.0 - p.1).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    // upper: maximize the edge line minus a r² on each edge
    let mut big_a2 = hull.iter().map(|p| p.1 - a * p.0 * p.0).fold(f64::NEG_INFINITY, f64::max);
    for w in hull.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.0 > p.0 {
            let slope = (q.1 - p.1) / (q.0 - p.0);
            let r = (slope / (2.0 * a)).clamp(p.0, q.0);
            big_a2 = big_a2.max(p.1 + slope * (r - p.0) - a * r * r);
        }
    }
    Envelope { a1: a, big_a1, a2: a, big_a2: big_a2.max(0.0) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// A contractible orbit whose mean index is `r`.
    Orbit,
    /// Contractible orbits with increasing minimal periods and indices approaching `r`.
    Sequence,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub r: f64,
    pub kind: WitnessKind,
    /// Record ids of the witness (one for an orbit, increasing periods for a sequence).
    pub witnesses: Vec<usize>,
    pub moments: Option<Moments>,
    pub action: Option<f64>,
    /// `𝔸 ≤ C(1 + r²)` with `C` from the fitted envelope.
    pub action_bound: Option<bool>,
}

/// Searches the records for a witness of the alternative: an orbit of mean
/// index `r`, or a sequence of orbits with diverging minimal periods whose
/// indices converge to `r`. Only contractible orbits qualify.
pub fn theorem_main_witness(
    lag: &EmLagrangian,
    records: &[PeriodicOrbitRecord],
    curve: Option<&BetaCurve>,
    r: f64,
    tol_r: f64,
    flow: &FlowConfig,
) -> Result<WitnessReport> {
    let sys = lag.hamiltonian();
    let good: Vec<&PeriodicOrbitRecord> = records.iter().filter(|x| x.contractible).collect();
    let dist = |x: &PeriodicOrbitRecord| (x.bott.value - r).abs();
    let single = good
        .iter()
        .filter(|x| dist(x) <= tol_r + x.bott.halfwidth)
        .min_by(|a, b| dist(a).total_cmp(&dist(b)).then(a.action.total_cmp(&b.action)).then(a.id.cmp(&b.id)));
    let (kind, witnesses) = if let Some(w) = single {
        (WitnessKind::Orbit, vec![w.id])
    } else {
        // for each minimal period the closest record, then a chain with strictly improving distance
        let mut by_period: Vec<&PeriodicOrbitRecord> = Vec::new();
        let mut periods: Vec<usize> = good.iter().map(|x| x.minimal_period).collect();
        periods.sort_unstable();
        periods.dedup();
        for p in periods {
            if let Some(b) = good.iter().filter(|x| x.minimal_period == p).min_by(|a, b| dist(a).total_cmp(&dist(b))) {
                by_period.push(b);
            }
        }
        let mut chain: Vec<&PeriodicOrbitRecord> = Vec::new();
        for x in by_period {
            if chain.last().is_none_or(|l| dist(x) < dist(l)) {
                chain.push(x);
            }
        }
        if chain.len() >= 3 && dist(chain[chain.len() - 1]) < 0.5 * dist(chain[0]) {
            (WitnessKind::Sequence, chain.iter().map(|x| x.id).collect())
        } else {
            (WitnessKind::Inconclusive, Vec::new())
        }
    };
    let best = witnesses.last().and_then(|id| records.iter().find(|x| x.id == *id));
    let moments = match best {
        Some(w) => {
            let eta = measure_from_periodic_orbit(&sys, &DVector::from_column_slice(&w.x0), w.k, 64 * w.k, flow)?;
            Some(moment_diagnostics(&eta, 10.0))
        }
        None => None,
    };
    let action = best.map(|w| w.action);
    let action_bound = match (action, curve) {
        (Some(a), Some(c)) => Some(a <= c.envelope.growth_constant() * (1.0 + r * r)),
        _ => None,
    };
    Ok(WitnessReport { r, kind, witnesses, moments, action, action_bound })
}

/// Refines the period of an autonomous closed orbit near `guess` so that
/// `φ_τ(x₀) − x₀` is orthogonal to the flow.
pub fn refine_period(sys: &dyn HamiltonianSystem, x0: &DVector<f64>, guess: f64, flow: &FlowConfig) -> Result<(f64, f64)> {
    if !sys.is_autonomous() {
        return Err(Error::Invalid("period refinement needs an autonomous system".into()));
    }
    let n = sys.n();
    let mut tau = guess;
    // the variational integrator takes different steps than flow_state; close the orbit it produces
    let end = |t: f64| -> Result<DVector<f64>> { Ok(integrate_orbit(sys, 0.0, x0, t, flow)?.final_state().clone()) };
    let mut x = end(tau)?;
    for _ in 0..20 {
        let f = vector_field(sys, tau, &x);
        let d = sys.chart().displacement(x0, &x, n);
        let dt = -d.dot(&f) / f.norm_squared().max(1e-300);
        if dt.abs() < 1e-15 * tau {
            break;
        }
        tau += dt;
        x = end(tau)?;
    }
    Ok((tau, closing_error(sys, x0, &x)))
}

/// One librating pendulum orbit of the energy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub energy: f64,
    pub period: f64,
    /// `μ_T/T` at the point `(0, √(2(E+1)))`.
    pub mu_hat: Estimate,
    /// Bott index over iterates of the closed orbit.
    pub bott: Estimate,
    pub cz: HalfInt,
    pub bott_bound: bool,
    pub action: f64,
    pub residual: f64,
}

/// Librating pendulum orbits with frequencies `2π/τ` evenly spaced so that
/// `2/τ` covers `[r_lo, r_hi]`.
pub fn pendulum_sweep(
    energies: usize,
    horizon: f64,
    r_range: (f64, f64),
    flow: &FlowConfig,
    mcfg: &MaslovConfig,
) -> Result<Vec<SweepRecord>> {
    let (lo, hi) = r_range;
    if energies < 2 || !(0.0 < lo && lo < hi && hi < 1.0 / PI) {
        return Err(Error::Invalid(format!("need ≥ 2 energies and 0 < r_lo < r_hi < 1/π, got {energies} and {r_range:?}")));
    }
    let lag = systems::pendulum();
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(lag.hamiltonian());
    let schedule = [horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon];
    (0..energies)
        .into_par_iter()
        .map(|i| {
            let r = lo + (hi - lo) * i as f64 / (energies - 1) as f64;
            let energy = systems::pendulum_energy_for_frequency(PI * r)?;
            let x0 = systems::pendulum_state(energy);
            let (period, residual) = refine_period(sys.as_ref(), &x0, systems::pendulum_period(energy)?, flow)?;
            let mu_hat = asymptotic_index_point(sys.clone(), 0.0, &x0, &schedule, flow, mcfg)?;
            let h_max = (horizon / period).ceil() as usize;
            let bott = bott_index_periodic(sys.clone(), &x0, period, h_max, flow, mcfg)?;
            let action = orbit_action(&lag, &x0, 0.0, period, 2048, flow)?;
            let cz = bott.iterates[0];
            let bott_bound = bott.bound_holds;
            Ok(SweepRecord { energy, period, mu_hat, bott: bott.estimate, cz, bott_bound, action, residual })
        })
        .collect()
}

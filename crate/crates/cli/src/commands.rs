use crate::config::{ConfigError, RunConfig};
use crate::output::{num, Output};
use maslov_core::asymptotic::asymptotic_index_point;
use maslov_core::flow::{integrate_orbit, mu_t_detailed};
use maslov_core::periodic::{beta_estimate, find_periodic_orbits_up_to, pendulum_sweep, SweepRecord};
use maslov_core::systems::{self, CatalogSystem, SystemSpec};
use maslov_core::verify;
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

pub const COMMANDS: [&str; 7] = ["index", "orbit", "asymptotic", "sweep", "beta", "verify-axioms", "verify-inequalities"];

/// Runs `command`; `Ok(false)` when a verification found violations.
pub fn run(command: &str, cfg: &RunConfig, threads: usize) -> anyhow::Result<bool> {
    let hash = cfg.hash(command);
    let mut out = Output::new(cfg.output.clone(), hash, command)?;
    let ok = match command {
        "index" => index(cfg, &mut out)?,
        "orbit" => orbit(cfg, &mut out)?,
        "asymptotic" => asymptotic(cfg, &mut out)?,
        "sweep" => sweep(cfg, &mut out)?,
        "beta" => beta(cfg, &mut out)?,
        "verify-axioms" => axioms(cfg, &mut out)?,
        "verify-inequalities" => inequalities(cfg, &mut out)?,
        other => return Err(ConfigError(format!("unknown command '{other}'")).into()),
    };
    let mut shown = serde_json::to_value(cfg)?;
    shown["command"] = json!(command);
    out.finish(if ok { "ok" } else { "failed" }, threads, &shown)?;
    Ok(ok)
}

fn system(cfg: &RunConfig) -> anyhow::Result<CatalogSystem> {
    Ok(systems::build(&cfg.system)?)
}

fn state(sys: &CatalogSystem, x0: &[f64]) -> anyhow::Result<DVector<f64>> {
    let n = sys.hamiltonian.n();
    if x0.len() != 2 * n {
        return Err(ConfigError(format!("x0 has {} entries, {} has {} degrees of freedom", x0.len(), sys.name, n)).into());
    }
    Ok(DVector::from_column_slice(x0))
}

fn index(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let sys = system(cfg)?;
    let p = &cfg.index;
    let x = state(&sys, &p.x0)?;
    let (mu, detail) = mu_t_detailed(sys.hamiltonian.clone(), p.s, &x, p.t, &cfg.flow(), &cfg.maslov())?;
    let crossings = detail.as_ref().map(|d| d.crossings.clone()).unwrap_or_default();
    let rows: Vec<Vec<String>> = crossings
        .iter()
        .map(|c| vec![num(c.time), c.dim.to_string(), c.signature.to_string(), c.endpoint.to_string(), c.regular.to_string()])
        .collect();
    out.csv("crossings.csv", &["time", "dim", "signature", "endpoint", "regular"], &rows)?;
    out.json(
        "index.json",
        &json!({
            "system": sys.name, "x0": p.x0, "s": p.s, "t": p.t,
            "mu_t": mu.to_f64(),
            "degenerate": detail.as_ref().map(|d| d.degenerate).unwrap_or(false),
            "crossings": crossings.len(),
        }),
    )?;
    Ok(true)
}

fn orbit(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let sys = system(cfg)?;
    let p = &cfg.orbit;
    let x = state(&sys, &p.x0)?;
    let seg = integrate_orbit(sys.hamiltonian.as_ref(), p.s, &x, p.t, &cfg.flow())?;
    let n = seg.n();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..n).map(|i| format!("q{i}")));
    header.extend((0..n).map(|i| format!("p{i}")));
    header.push("H".into());
    let rows: Vec<Vec<String>> = (0..seg.times().len())
        .map(|i| {
            let mut r = vec![num(seg.times()[i])];
            r.extend(seg.states()[i].iter().map(|&v| num(v)));
            r.push(num(seg.energies()[i]));
            r
        })
        .collect();
    let h: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    out.csv("orbit.csv", &h, &rows)?;
    out.json(
        "orbit.json",
        &json!({
            "system": sys.name, "x0": p.x0, "s": p.s, "t": p.t,
            "final_state": seg.final_state().as_slice(),
            "samples": seg.times().len(),
            "epochs": seg.epochs(),
            "energy_drift": seg.energy_drift(),
            "max_symplectic_residual": seg.max_symplectic_residual(),
        }),
    )?;
    Ok(true)
}

fn asymptotic(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let sys = system(cfg)?;
    let p = &cfg.asymptotic;
    let x = state(&sys, &p.x0)?;
    let est = asymptotic_index_point(sys.hamiltonian.clone(), p.s, &x, &p.schedule, &cfg.flow(), &cfg.maslov())?;
    let rows: Vec<Vec<String>> = p.schedule.iter().zip(&est.sequence).map(|(t, v)| vec![num(*t), num(*v)]).collect();
    out.csv("asymptotic.csv", &["T", "mu_T_over_T"], &rows)?;
    out.json("asymptotic.json", &json!({ "system": sys.name, "x0": p.x0, "s": p.s, "estimate": est }))?;
    Ok(true)
}

/// Largest gap left in `[lo, hi]` by the sorted values.
pub fn max_gap(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut prev = lo;
    let mut gap: f64 = 0.0;
    for x in v.into_iter().filter(|&x| x >= lo && x <= hi) {
        gap = gap.max(x - prev);
        prev = x;
    }
    gap.max(hi - prev)
}

fn run_sweep(cfg: &RunConfig, energies: usize, horizon: f64) -> anyhow::Result<Vec<SweepRecord>> {
    if cfg.system != SystemSpec::Pendulum {
        return Err(ConfigError("the sweep is defined for the pendulum only".into()).into());
    }
    Ok(pendulum_sweep(energies, horizon, (cfg.sweep.r_lo, cfg.sweep.r_hi), &cfg.flow(), &cfg.maslov())?)
}

fn sweep(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let recs = run_sweep(cfg, cfg.sweep.energies, cfg.sweep.horizon)?;
    let rows: Vec<Vec<String>> = recs
        .iter()
        .map(|r| {
            vec![
                num(r.energy),
                num(r.period),
                num(r.mu_hat.value),
                num(r.mu_hat.halfwidth),
                num(r.bott.value),
                num(r.bott.halfwidth),
                num(r.cz.to_f64()),
                r.bott_bound.to_string(),
                num(r.action),
                num(r.residual),
            ]
        })
        .collect();
    out.csv(
        "sweep.csv",
        &["energy", "period", "mu_hat", "mu_hat_halfwidth", "bott", "bott_halfwidth", "cz", "bott_bound", "action", "residual"],
        &rows,
    )?;
    let mu: Vec<f64> = recs.iter().map(|r| r.mu_hat.value).collect();
    let lo = 0.01;
    let hi = 1.0 / std::f64::consts::PI - 0.01;
    out.json(
        "sweep.json",
        &json!({
            "records": recs,
            "mu_hat_min": mu.iter().cloned().fold(f64::INFINITY, f64::min),
            "mu_hat_max": mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            "coverage": { "lo": lo, "hi": hi, "max_gap": max_gap(&mu, lo, hi) },
            "bott_bound_holds": recs.iter().all(|r| r.bott_bound),
        }),
    )?;
    Ok(true)
}

fn beta(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let sys = system(cfg)?;
    let lag = sys.lagrangian.as_ref().ok_or_else(|| ConfigError(format!("{} has no Lagrangian; β needs one", sys.name)))?;
    let found = find_periodic_orbits_up_to(lag, cfg.beta.k_max, &cfg.beta.search, &cfg.flow(), &cfg.maslov())?;
    let rows: Vec<Vec<String>> = found
        .records
        .iter()
        .map(|r| {
            let x0: Vec<String> = r.x0.iter().map(|&v| num(v)).collect();
            vec![
                r.id.to_string(),
                r.k.to_string(),
                r.minimal_period.to_string(),
                x0.join(" "),
                r.contractible.to_string(),
                num(r.cz.to_f64()),
                num(r.bott.value),
                num(r.bott.halfwidth),
                r.bott_bound.to_string(),
                num(r.action),
                num(r.residual),
                r.degenerate.to_string(),
            ]
        })
        .collect();
    out.csv(
        "orbits.csv",
        &["id", "k", "minimal_period", "x0", "contractible", "cz", "bott", "bott_halfwidth", "bott_bound", "action", "residual", "degenerate"],
        &rows,
    )?;
    let curve = beta_estimate(&found.records, cfg.beta.bin_width, None)?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let rows: Vec<Vec<String>> = curve
        .bins
        .iter()
        .map(|b| vec![num(b.r), opt(b.beta), b.witness.map(|w| w.to_string()).unwrap_or_default(), opt(b.witness_r)])
        .collect();
    out.csv("beta_curve.csv", &["r", "beta", "witness", "witness_r"], &rows)?;
    let bracket = envelope_brackets(&curve);
    out.json(
        "hull.json",
        &json!({
            "system": sys.name,
            "hull": curve.hull,
            "convex": curve.hull_is_convex(),
            "envelope": curve.envelope,
            "envelope_brackets_hull": bracket,
            "records": found.records.len(),
            "seed_failures": found.failures.len(),
        }),
    )?;
    Ok(true)
}

/// `a₁r² − A₁ ≤ hull(r) ≤ a₂r² + A₂` at the hull vertices and bin centres.
pub fn envelope_brackets(curve: &maslov_core::periodic::BetaCurve) -> bool {
    let e = &curve.envelope;
    let pts = curve.hull.iter().map(|&(r, _)| r).chain(curve.bins.iter().map(|b| b.r));
    pts.filter_map(|r| curve.hull_at(r).map(|h| (r, h))).all(|(r, h)| {
        let slack = 1e-9 * (1.0 + h.abs());
        e.lower(r) <= h + slack && h <= e.upper(r) + slack
    })
}

#[derive(Serialize)]
struct Summary<'a> {
    suites: &'a [verify::SuiteReport],
    all_passed: bool,
}

fn report(out: &mut Output, name: &str, reports: &[verify::SuiteReport]) -> anyhow::Result<bool> {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| vec![r.name.clone(), r.cases.to_string(), r.passed.to_string(), (r.cases - r.passed).to_string()])
        .collect();
    out.csv(&format!("{name}.csv"), &["suite", "cases", "passed", "failed"], &rows)?;
    let ok = reports.iter().all(|r| r.ok());
    out.json(&format!("{name}.json"), &Summary { suites: reports, all_passed: ok })?;
    Ok(ok)
}

fn axioms(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    if let Some(n) = cfg.axioms.n {
        if n == 0 {
            return Err(ConfigError("axioms.n must be positive".into()).into());
        }
    }
    let reports = verify::all_axioms(cfg.axioms.n, cfg.axioms.cases, cfg.seed, &cfg.maslov())?;
    report(out, "axioms", &reports)
}

fn inequalities(cfg: &RunConfig, out: &mut Output) -> anyhow::Result<bool> {
    let p = &cfg.inequalities;
    let (flow, mcfg) = (cfg.flow(), cfg.maslov());
    let recs = run_sweep(cfg, p.bott_energies, p.bott_horizon)?;
    let reports = vec![
        verify::hormander_suite(3, p.hormander_per_n, cfg.seed, &mcfg),
        verify::hormander_pairs(p.hormander_pairs, cfg.seed, &mcfg),
        verify::subadditivity_suite(p.subadditivity_orbits, cfg.seed, &flow, &mcfg),
        verify::bott_suite(&recs),
        verify::lemma1_suite(p.loops, p.lemma1_k_max, cfg.seed),
        verify::reparametrization_suite(p.loops, cfg.seed),
    ];
    report(out, "inequalities", &reports)
}

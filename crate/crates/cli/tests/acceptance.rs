//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use maslov_core::asymptotic::{asymptotic_index_point, bott_index_periodic};
use maslov_core::flow::{integrate_orbit, monodromy_index, mu_t, vertical_evolution, FlowConfig, HamiltonianSystem};
use maslov_core::loops::{quadratic_form_index, second_variation_index, Boundary, FormConfig};
use maslov_core::maslov::{conley_zehnder, maslov_index, MaslovConfig, SymplecticPath};
use maslov_core::periodic::{beta_estimate, find_periodic_orbits_up_to, pendulum_sweep, BetaCurve, SearchConfig, SweepRecord};
use maslov_core::symplectic::LagrangianFrame;
use maslov_core::verify::{self, SuiteReport};
use maslov_core::{systems, HalfInt};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

const SEED: u64 = 20240611;

type Outcome = Result<String, String>;

fn x(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn pendulum() -> Arc<dyn HamiltonianSystem> {
    Arc::new(systems::pendulum().hamiltonian())
}

fn suites(reports: &[SuiteReport]) -> Outcome {
    let summary: Vec<String> = reports.iter().map(|r| format!("{} {}/{}", r.name, r.passed, r.cases)).collect();
    if reports.iter().all(|r| r.ok()) {
        Ok(summary.join(", "))
    } else {
        let fails: Vec<String> =
            reports.iter().flat_map(|r| r.failures.iter().take(3).map(move |f| format!("{} case {}: {}", r.name, f.case, f.detail))).collect();
        Err(format!("{}; {}", summary.join(", "), fails.join("; ")))
    }
}

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// Crossings of t ↦ R(ωt)·vertical with the vertical, R the rotation of the
// oscillator flow: one at every t = jπ/ω, each positive, halved at the ends.
fn rotation_maslov_oracle(omega: f64, a: f64, b: f64) -> f64 {
    crossing_sum(PI / omega, a, b, 1.0)
}

// Crossings of the graph of R(ωt) with the diagonal: R(ωt) = I at t = 2πj/ω,
// a two-dimensional positive crossing.
fn rotation_cz_oracle(omega: f64, a: f64, b: f64) -> f64 {
    crossing_sum(TAU / omega, a, b, 2.0)
}

fn crossing_sum(spacing: f64, a: f64, b: f64, weight: f64) -> f64 {
    let eps = 1e-9;
    let mut total = 0.0;
    let mut j = (a / spacing).ceil() as i64 - 1;
    loop {
        let t = j as f64 * spacing;
        if t > b + eps {
            break;
        }
        if t >= a - eps {
            let end = (t - a).abs() < eps || (t - b).abs() < eps;
            total += if end { weight / 2.0 } else { weight };
        }
        j += 1;
    }
    total
}

fn criterion1(mcfg: &MaslovConfig) -> Outcome {
    let start = Instant::now();
    let reports = verify::all_axioms(None, 100, SEED, mcfg).map_err(err)?;
    let elapsed = start.elapsed();
    let s = suites(&reports)?;
    check(elapsed < Duration::from_secs(120), format!("{s} in {:.1}s", elapsed.as_secs_f64()))
}

fn criterion2(mcfg: &MaslovConfig) -> Outcome {
    let mut bad = Vec::new();
    for case in 0..100 {
        if let Err(e) = verify::localization_case(SEED + 1, case, verify::case_dim(None, case), mcfg) {
            bad.push(format!("case {case}: {e}"));
        }
    }
    check(bad.is_empty(), if bad.is_empty() { "100/100 signature jumps".into() } else { bad.join("; ") })
}

fn criterion3(mcfg: &MaslovConfig) -> Outcome {
    suites(&[verify::hormander_suite(3, 50, SEED, mcfg), verify::hormander_pairs(5, SEED, mcfg)])
}

fn criterion4(flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    let sys: Arc<dyn HamiltonianSystem> = Arc::new(systems::harmonic_oscillator(&[1.0]).hamiltonian());
    let orbit = Arc::new(integrate_orbit(sys.as_ref(), 0.0, &x(&[0.0, 0.0]), TAU, flow).map_err(err)?);
    let v = LagrangianFrame::vertical(1);
    let mu = maslov_index(&vertical_evolution(sys.clone(), orbit, flow), &v, mcfg).map_err(err)?.value;
    let cz = monodromy_index(sys, &x(&[0.0, 0.0]), TAU, flow, mcfg).map_err(err)?.value;
    let rot = |t: f64| DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
    let path = SymplecticPath::from_fn(1, 0.0, TAU, 17, rot).map_err(err)?;
    let mu_explicit = maslov_index(&path.lagrangian_image(&v).map_err(err)?, &v, mcfg).map_err(err)?.value;
    let cz_explicit = conley_zehnder(&path, mcfg).map_err(err)?.value;
    let (mo, co) = (rotation_maslov_oracle(1.0, 0.0, TAU), rotation_cz_oracle(1.0, 0.0, TAU));
    if (mo, co) != (2.0, 2.0) {
        return Err(format!("oracle gives {mo}, {co}"));
    }
    let two = HalfInt::from_int(2);
    if [mu, cz, mu_explicit, cz_explicit] != [two; 4] {
        return Err(format!("μ = {mu}, μ_CZ = {cz}, explicit rotation μ = {mu_explicit}, μ_CZ = {cz_explicit}"));
    }
    let w2 = 2f64.sqrt();
    let sys2: Arc<dyn HamiltonianSystem> = Arc::new(systems::harmonic_oscillator(&[1.0, w2]).hamiltonian());
    let (k, h) = (1.0, 200);
    let b = bott_index_periodic(sys2, &x(&[0.0; 4]), k, h, flow, mcfg).map_err(err)?;
    let horizon = h as f64 * k;
    let oracle = (rotation_cz_oracle(1.0, 0.0, horizon) + rotation_cz_oracle(w2, 0.0, horizon)) / horizon;
    let exact = (1.0 + w2) / PI;
    let tol = 4.0 / horizon + 1e-3;
    check(
        (b.estimate.value - exact).abs() <= tol && (b.estimate.value - oracle).abs() < 1e-12,
        format!("μ = μ_CZ = 2; Bott {:.6} vs {exact:.6} (tol {tol:.4}), enumeration {oracle:.6}", b.estimate.value),
    )
}

fn criterion5(flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    suites(&[verify::subadditivity_suite(20, SEED, flow, mcfg)])
}

fn criterion6(records: &[SweepRecord]) -> Outcome {
    suites(&[verify::bott_suite(records)])
}

fn max_gap(values: &[f64], lo: f64, hi: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|r| (lo..=hi).contains(r)).collect();
    v.sort_by(f64::total_cmp);
    let mut pts = vec![lo];
    pts.extend(v);
    pts.push(hi);
    pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

fn criterion7(records: &[SweepRecord], flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    let eq = bott_index_periodic(pendulum(), &x(&[0.0, 0.0]), 1.0, 2000, flow, mcfg).map_err(err)?;
    let eq_ok = (eq.estimate.value - 1.0 / PI).abs() <= 1e-3;
    let schedule = [25.0, 50.0, 100.0, 200.0];
    let mut far = Vec::new();
    for x0 in [x(&[PI, 0.0]), x(&[0.0, 3.0])] {
        let p = asymptotic_index_point(pendulum(), 0.0, &x0, &schedule, flow, mcfg).map_err(err)?;
        far.push(p.value);
    }
    let far_ok = far.iter().all(|v| v.abs() <= 2.0 / 200.0);
    let mu_hats: Vec<f64> = records.iter().map(|r| r.mu_hat.value).collect();
    let gap = max_gap(&mu_hats, 0.01, 1.0 / PI - 0.01);
    check(
        eq_ok && far_ok && records.len() == 40 && gap < 0.05,
        format!(
            "equilibrium {:.6} (1/π = {:.6}); upright {}, rotating {}; {} energies, max gap {gap:.4}",
            eq.estimate.value,
            1.0 / PI,
            far[0],
            far[1],
            records.len()
        ),
    )
}

fn criterion8(flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    let mut count = 0;
    for n in [1, 2, 3] {
        let sys: Arc<dyn HamiltonianSystem> = Arc::new(systems::flat_torus_geodesic(n).hamiltonian());
        for i in 0..5 {
            let x0 = DVector::from_fn(2 * n, |j, _| (1.7 * (i * 2 * n + j) as f64 + 0.3).sin() * if j < n { PI } else { 2.0 });
            for t in [0.5, 3.0, 17.3, 64.0, 100.0] {
                let mu = mu_t(sys.clone(), 0.0, &x0, t, flow, mcfg).map_err(err)?;
                if mu != HalfInt::ZERO {
                    return Err(format!("n={n} x0={:?} t={t}: μ_t = {mu}", x0.as_slice()));
                }
                count += 1;
            }
        }
    }
    Ok(format!("μ_t = 0 on {count} orbit segments"))
}

// negative eigenvalues of −φ̈/2 − cφ with zero ends: (jπ/t)²/2 < c
fn dirichlet_oracle(t: f64, c: f64) -> usize {
    (t * (2.0 * c).sqrt() / PI).floor() as usize
}

fn criterion9(flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    let lag = systems::pendulum();
    let sys = pendulum();
    let form = FormConfig::default();
    let mut segments = 0;
    let mut i = 0;
    while segments < 10 {
        i += 1;
        let x0 = x(&[0.9 * (1.3 * i as f64).sin(), 0.8 * (0.7 * i as f64).cos()]);
        let t = 2.0 + (3.7 * i as f64) % 15.0;
        // non-conjugate: the evolved vertical stays transverse at t
        let orbit = integrate_orbit(sys.as_ref(), 0.0, &x0, t, flow).map_err(err)?;
        let m = orbit.final_transfer();
        if m[(0, 1)].abs() < 1e-2 * m.amax() {
            continue;
        }
        let fe = second_variation_index(&lag, 0.0, &x0, t, Boundary::Dirichlet, flow, &form).map_err(err)?;
        let mu = mu_t(sys.clone(), 0.0, &x0, t, flow, mcfg).map_err(err)?;
        if mu.as_integer() != Some(fe.negative_count as i64) {
            return Err(format!("x0={:?} t={t}: Maslov {mu}, finite elements {}", x0.as_slice(), fe.negative_count));
        }
        segments += 1;
    }
    let mut pairs = 0;
    let mut j = 0;
    while pairs < 20 {
        j += 1;
        let t = 0.5 + (2.3 * j as f64) % 9.0;
        let c = 0.2 + (5.9 * j as f64) % 12.0;
        let q = t * (2.0 * c).sqrt() / PI;
        if (q - q.round()).abs() < 0.05 {
            continue;
        }
        let spec = quadratic_form_index(1, t, Boundary::Dirichlet, &form, |_, _| {
            Ok((DMatrix::from_element(1, 1, 0.5), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, -c)))
        })
        .map_err(err)?;
        if spec.negative_count != dirichlet_oracle(t, c) {
            return Err(format!("t={t} c={c}: {} vs {}", spec.negative_count, dirichlet_oracle(t, c)));
        }
        pairs += 1;
    }
    Ok(format!("{segments} librating segments and {pairs} Dirichlet pairs match"))
}

fn criterion10() -> Outcome {
    suites(&[verify::lemma1_suite(100, 10, SEED)])
}

fn criterion11() -> Outcome {
    suites(&[verify::reparametrization_suite(100, SEED)])
}

fn envelope_brackets(curve: &BetaCurve) -> bool {
    let e = &curve.envelope;
    let pts = curve.hull.iter().map(|&(r, _)| r).chain(curve.bins.iter().map(|b| b.r));
    pts.filter_map(|r| curve.hull_at(r).map(|h| (r, h))).all(|(r, h)| {
        let slack = 1e-9 * (1.0 + h.abs());
        e.lower(r) <= h + slack && h <= e.upper(r) + slack
    })
}

fn criterion12(flow: &FlowConfig, mcfg: &MaslovConfig) -> Outcome {
    let found = find_periodic_orbits_up_to(&systems::pendulum(), 12, &SearchConfig::default(), flow, mcfg).map_err(err)?;
    let curve = beta_estimate(&found.records, 0.02, None).map_err(err)?;
    let convex = curve.hull_is_convex();
    let brackets = envelope_brackets(&curve);
    check(
        convex && brackets && !curve.hull.is_empty(),
        format!("{} orbits, {} hull vertices, convex {convex}, envelope brackets {brackets}", found.records.len(), curve.hull.len()),
    )
}

const FULL_SUITE: [(&str, &str); 7] = [
    ("index", "[index]\nx0 = [0.0, 1.0]\nt = 20.0\n"),
    ("orbit", "[orbit]\nx0 = [0.5, 0.0]\nt = 10.0\n"),
    ("asymptotic", "[asymptotic]\nx0 = [0.0, 1.0]\n"),
    ("sweep", "[sweep]\nenergies = 40\nhorizon = 200.0\n"),
    ("beta", "[beta]\nk_max = 12\n"),
    ("verify-axioms", "[axioms]\ncases = 100\n"),
    ("verify-inequalities", ""),
];

fn run_full_suite(root: &Path) -> Result<Duration, String> {
    let start = Instant::now();
    for (command, body) in FULL_SUITE {
        let dir = root.join(command);
        std::fs::create_dir_all(&dir).map_err(err)?;
        let config = format!("command = \"{command}\"\nseed = 11\noutput = \"out\"\n{body}");
        std::fs::write(dir.join("run.toml"), config).map_err(err)?;
        let status = Command::new(env!("CARGO_BIN_EXE_maslov-lab"))
            .args(["--config", "run.toml", "run"])
            .current_dir(&dir)
            .env_remove("MASLOV_LAB_THREADS")
            .status()
            .map_err(err)?;
        if !status.success() {
            return Err(format!("{command} exited with {status}"));
        }
    }
    Ok(start.elapsed())
}

fn artifacts(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for (command, _) in FULL_SUITE {
        let out = root.join(command).join("out");
        for entry in std::fs::read_dir(&out).map_err(err)? {
            let path = entry.map_err(err)?.path();
            let mut bytes = std::fs::read(&path).map_err(err)?;
            if path.file_name().is_some_and(|n| n == "manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).map_err(err)?;
                v.as_object_mut().ok_or("manifest is not an object")?.remove("wall_time_s");
                bytes = serde_json::to_vec(&v).map_err(err)?;
            }
            files.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
        }
    }
    Ok(files)
}

fn criterion13() -> Outcome {
    let base = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&base);
    let (a, b) = (base.join("first"), base.join("second"));
    let ta = run_full_suite(&a)?;
    let tb = run_full_suite(&b)?;
    let (fa, fb) = (artifacts(&a)?, artifacts(&b)?);
    let names_a: Vec<_> = fa.keys().collect();
    let names_b: Vec<_> = fb.keys().collect();
    if names_a != names_b {
        return Err(format!("file sets differ: {names_a:?} vs {names_b:?}"));
    }
    let differing: Vec<String> = fa.iter().filter(|(k, v)| fb[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    let limit = Duration::from_secs(30 * 60);
    check(
        differing.is_empty() && ta < limit && tb < limit,
        format!(
            "{} files compared, {} differ{}; runs took {:.1}s and {:.1}s",
            fa.len(),
            differing.len(),
            if differing.is_empty() { String::new() } else { format!(" ({})", differing.join(", ")) },
            ta.as_secs_f64(),
            tb.as_secs_f64()
        ),
    )
}

fn main() {
    let flow = FlowConfig::default();
    let mcfg = MaslovConfig::default();
    let start = Instant::now();
    let sweep = pendulum_sweep(40, 200.0, (0.05, 1.0 / PI - 0.005), &flow, &mcfg);
    let with_sweep = |f: &dyn Fn(&[SweepRecord]) -> Outcome| match &sweep {
        Ok(records) => f(records),
        Err(e) => Err(format!("sweep failed: {e}")),
    };
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "index axiom suites", criterion1(&mcfg)),
        (2, "localization closed form", criterion2(&mcfg)),
        (3, "Hörmander bound and path independence", criterion3(&mcfg)),
        (4, "rotation oracle", criterion4(&flow, &mcfg)),
        (5, "subadditivity along pendulum orbits", criterion5(&flow, &mcfg)),
        (6, "Bott bound on sweep records", with_sweep(&criterion6)),
        (7, "pendulum index interval", with_sweep(&|r| criterion7(r, &flow, &mcfg))),
        (8, "flat torus", criterion8(&flow, &mcfg)),
        (9, "Morse and Maslov counts", criterion9(&flow, &mcfg)),
        (10, "iterate action inequality", criterion10()),
        (11, "slow reparametrization", criterion11()),
        (12, "beta curve hull and envelope", criterion12(&flow, &mcfg)),
        (13, "determinism of the full suite", criterion13()),
    ];
    let mut failed = 0;
    for (i, name, outcome) in &results {
        match outcome {
            Ok(msg) => println!("PASS criterion {i}: {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {i}: {name}: {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}

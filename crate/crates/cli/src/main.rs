mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{ConfigError, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Maslov-index laboratory: indices of Hamiltonian flows, mean indices,
/// periodic orbits and property suites.
#[derive(Parser, Debug)]
#[command(name = "maslov-lab", version)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores); MASLOV_LAB_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// μ_t along an orbit, with its crossings.
    Index(OrbitArgs),
    /// Integrate an orbit and write its samples.
    Orbit(OrbitArgs),
    /// Pointwise mean index μ_T/T over a schedule of horizons.
    Asymptotic(AsymptoticArgs),
    /// Librating pendulum orbits covering the index interval.
    Sweep(SweepArgs),
    /// Periodic orbits up to period k_max and the β curve.
    Beta(BetaArgs),
    /// The six index axiom suites.
    VerifyAxioms(AxiomArgs),
    /// Hörmander, subadditivity, Bott, iterate-action and reparametrization checks.
    VerifyInequalities(InequalityArgs),
    /// Run the command named by the `command` key of the config.
    Run,
}

#[derive(Args, Debug)]
struct OrbitArgs {
    /// Catalog system name.
    system: Option<String>,
    /// Initial state `q..,p..`, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args, Debug)]
struct AsymptoticArgs {
    system: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long)]
    s: Option<f64>,
    /// Increasing horizons, comma separated.
    #[arg(long, value_delimiter = ',')]
    schedule: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    system: Option<String>,
    #[arg(long)]
    energies: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<f64>,
}

#[derive(Args, Debug)]
struct BetaArgs {
    system: Option<String>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    bin_width: Option<f64>,
}

#[derive(Args, Debug)]
struct AxiomArgs {
    /// Fixed dimension; default cycles through 1, 2, 3.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    cases: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct InequalityArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Random loops for the iterate-action and reparametrization suites.
    #[arg(long)]
    loops: Option<usize>,
}

fn system_spec(name: &str) -> anyhow::Result<maslov_core::systems::SystemSpec> {
    serde_json::from_value(serde_json::json!({ "name": name })).map_err(|_| {
        ConfigError(format!("unknown system '{name}'; known: {}", maslov_core::systems::CATALOG.join(", "))).into()
    })
}

fn apply(cfg: &mut RunConfig, command: &Command) -> anyhow::Result<&'static str> {
    let set_system = |cfg: &mut RunConfig, s: &Option<String>| -> anyhow::Result<()> {
        if let Some(name) = s {
            cfg.system = system_spec(name)?;
        }
        Ok(())
    };
    Ok(match command {
        Command::Index(a) | Command::Orbit(a) => {
            set_system(cfg, &a.system)?;
            let sec = if matches!(command, Command::Index(_)) { &mut cfg.index } else { &mut cfg.orbit };
            if let Some(x) = &a.x0 {
                sec.x0 = x.clone();
            }
            sec.s = a.s.unwrap_or(sec.s);
            sec.t = a.t.unwrap_or(sec.t);
            if matches!(command, Command::Index(_)) {
                "index"
            } else {
                "orbit"
            }
        }
        Command::Asymptotic(a) => {
            set_system(cfg, &a.system)?;
            if let Some(x) = &a.x0 {
                cfg.asymptotic.x0 = x.clone();
            }
            cfg.asymptotic.s = a.s.unwrap_or(cfg.asymptotic.s);
            if let Some(s) = &a.schedule {
                cfg.asymptotic.schedule = s.clone();
            }
            "asymptotic"
        }
        Command::Sweep(a) => {
            set_system(cfg, &a.system)?;
            cfg.sweep.energies = a.energies.unwrap_or(cfg.sweep.energies);
            cfg.sweep.horizon = a.horizon.unwrap_or(cfg.sweep.horizon);
            "sweep"
        }
        Command::Beta(a) => {
            set_system(cfg, &a.system)?;
            cfg.beta.k_max = a.k_max.unwrap_or(cfg.beta.k_max);
            cfg.beta.bin_width = a.bin_width.unwrap_or(cfg.beta.bin_width);
            "beta"
        }
        Command::VerifyAxioms(a) => {
            if a.n.is_some() {
                cfg.axioms.n = a.n;
            }
            cfg.axioms.cases = a.cases.unwrap_or(cfg.axioms.cases);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            "verify-axioms"
        }
        Command::VerifyInequalities(a) => {
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.inequalities.loops = a.loops.unwrap_or(cfg.inequalities.loops);
            "verify-inequalities"
        }
        Command::Run => match cfg.command.as_deref() {
            Some(c) if commands::COMMANDS.contains(&c) => commands::COMMANDS.iter().find(|&&x| x == c).unwrap(),
            Some(c) => return Err(ConfigError(format!("unknown command '{c}'")).into()),
            None => return Err(ConfigError("`run` needs a `command` key in the config".into()).into()),
        },
    })
}

fn threads(cfg: &RunConfig) -> anyhow::Result<usize> {
    match std::env::var("MASLOV_LAB_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| ConfigError(format!("MASLOV_LAB_THREADS={v:?} is not a count")).into()),
        Err(_) => Ok(cfg.threads),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() || e.downcast_ref::<std::io::Error>().is_some() || e.downcast_ref::<csv::Error>().is_some() {
        return 1;
    }
    match e.downcast_ref::<maslov_core::Error>() {
        Some(err) if err.is_input_error() => 1,
        Some(maslov_core::Error::Io(_)) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> anyhow::Result<bool> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(o) = &cli.out {
            cfg.output = o.clone();
        }
        if let Some(t) = cli.threads {
            cfg.threads = t;
        }
        let command = apply(&mut cfg, &cli.command)?;
        let n = threads(&cfg)?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
        commands::run(command, &cfg, rayon::current_num_threads())
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("maslov-lab: some checks failed; see the output directory");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("maslov-lab: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

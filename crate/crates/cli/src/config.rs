use maslov_core::flow::FlowConfig;
use maslov_core::maslov::MaslovConfig;
use maslov_core::periodic::SearchConfig;
use maslov_core::systems::SystemSpec;
use maslov_core::Tolerances;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Everything a run depends on. Loaded from TOML; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Subcommand used by `maslov-lab run`.
    pub command: Option<String>,
    pub system: SystemSpec,
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; `MASLOV_LAB_THREADS` wins, 0 means all cores.
    pub threads: usize,
    pub tol: Tolerances,
    pub flow: FlowSection,
    pub maslov: MaslovSection,
    pub index: OrbitSection,
    pub orbit: OrbitSection,
    pub asymptotic: AsymptoticSection,
    pub sweep: SweepSection,
    pub beta: BetaSection,
    pub axioms: AxiomSection,
    pub inequalities: InequalitySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            system: SystemSpec::Pendulum,
            seed: 7,
            output: PathBuf::from("out"),
            threads: 0,
            tol: Tolerances::default(),
            flow: FlowSection::default(),
            maslov: MaslovSection::default(),
            index: OrbitSection::default(),
            orbit: OrbitSection::default(),
            asymptotic: AsymptoticSection::default(),
            sweep: SweepSection::default(),
            beta: BetaSection::default(),
            axioms: AxiomSection::default(),
            inequalities: InequalitySection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSection {
    pub max_step: f64,
    pub first_step: f64,
    pub restart_norm: f64,
    pub max_transfer_change: f64,
    pub blowup: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowConfig::default();
        FlowSection {
            max_step: f.max_step,
            first_step: f.first_step,
            restart_norm: f.restart_norm,
            max_transfer_change: f.max_transfer_change,
            blowup: f.blowup,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaslovSection {
    pub max_angle: f64,
    pub min_step_rel: f64,
    pub locate_rel: f64,
    pub check_forms: bool,
}

impl Default for MaslovSection {
    fn default() -> Self {
        let m = MaslovConfig::default();
        MaslovSection { max_angle: m.max_angle, min_step_rel: m.min_step_rel, locate_rel: m.locate_rel, check_forms: m.check_forms }
    }
}

/// Initial point and horizon for `index` and `orbit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitSection {
    pub x0: Vec<f64>,
    pub s: f64,
    pub t: f64,
}

impl Default for OrbitSection {
    fn default() -> Self {
        OrbitSection { x0: vec![0.0, 1.0], s: 0.0, t: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticSection {
    pub x0: Vec<f64>,
    pub s: f64,
    pub schedule: Vec<f64>,
}

impl Default for AsymptoticSection {
    fn default() -> Self {
        AsymptoticSection { x0: vec![0.0, 1.0], s: 0.0, schedule: maslov_core::asymptotic::DEFAULT_SCHEDULE.to_vec() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub energies: usize,
    /// Horizon `T` of the pointwise estimate and of the Bott iterates.
    pub horizon: f64,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { energies: 40, horizon: 200.0, r_lo: 0.05, r_hi: 1.0 / std::f64::consts::PI - 0.005 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaSection {
    pub k_max: usize,
    pub bin_width: f64,
    pub search: SearchConfig,
}

impl Default for BetaSection {
    fn default() -> Self {
        BetaSection { k_max: 12, bin_width: 0.02, search: SearchConfig::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxiomSection {
    /// Fixed dimension; absent means cycling through 1, 2, 3.
    pub n: Option<usize>,
    pub cases: usize,
}

impl Default for AxiomSection {
    fn default() -> Self {
        AxiomSection { n: None, cases: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalitySection {
    pub hormander_per_n: usize,
    pub hormander_pairs: usize,
    pub subadditivity_orbits: usize,
    pub loops: usize,
    pub lemma1_k_max: usize,
    /// Energies of the sweep whose records feed the Bott check.
    pub bott_energies: usize,
    pub bott_horizon: f64,
}

impl Default for InequalitySection {
    fn default() -> Self {
        InequalitySection {
            hormander_per_n: 50,
            hormander_pairs: 5,
            subadditivity_orbits: 20,
            loops: 100,
            lemma1_k_max: 10,
            bott_energies: 40,
            bott_horizon: 200.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }

    pub fn flow(&self) -> FlowConfig {
        let f = &self.flow;
        FlowConfig {
            tol: self.tol,
            max_step: f.max_step,
            first_step: f.first_step,
            restart_norm: f.restart_norm,
            max_transfer_change: f.max_transfer_change,
            blowup: f.blowup,
        }
    }

    pub fn maslov(&self) -> MaslovConfig {
        let m = &self.maslov;
        MaslovConfig { tol: self.tol, max_angle: m.max_angle, min_step_rel: m.min_step_rel, locate_rel: m.locate_rel, check_forms: m.check_forms }
    }

    /// SHA-256 of the canonical JSON of the effective config and command.
    pub fn hash(&self, command: &str) -> String {
        let mut c = self.clone();
        c.command = Some(command.to_string());
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Bad configuration or command-line input; exits with code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

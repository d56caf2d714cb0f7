use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module. Passed explicitly; there is
/// no global state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max entry of `MᵀJM − J` accepted as symplectic.
    pub symp: f64,
    /// Max entry of `FᵀJF` (orthonormal F) accepted as isotropic.
    pub lagr: f64,
    /// Singular values below this count as zero.
    pub rank: f64,
    /// Absolute and relative local error of the integrator.
    pub integration: f64,
    /// Closing error for periodic orbits.
    pub periodic: f64,
    /// Allowed energy drift for autonomous systems.
    pub energy: f64,
    /// Relative null threshold for quadratic-form spectra.
    pub null_rel: f64,
    /// Eigenphases of the relative unitary below this are intersections.
    pub phase: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symp: 1e-9,
            lagr: 1e-9,
            rank: 1e-8,
            integration: 1e-10,
            periodic: 1e-8,
            energy: 1e-7,
            null_rel: 1e-8,
            phase: 1e-6,
        }
    }
}

use serde::{Deserialize, Serialize};

/// Tolerances, sample counts and the sampling seed shared by every check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Sample points per instantiation for numeric equivalence.
    pub n_eq: usize,
    pub eps_eq: f64,
    pub eps_act: f64,
    pub eps_drift: f64,
    pub eps_guard: f64,
    pub seed: u64,
    /// Composite Simpson panels for action integrals.
    pub simpson_panels: usize,
    pub harmonic_cap: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_eq: 50,
            eps_eq: 1e-9,
            eps_act: 1e-7,
            eps_drift: 1e-7,
            eps_guard: 1e-6,
            seed: 0x5eed,
            simpson_panels: 2000,
            harmonic_cap: 8,
        }
    }
}

impl Settings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        let positive = [self.eps_eq, self.eps_act, self.eps_drift, self.eps_guard];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(crate::Error::Input("tolerances must be positive".into()));
        }
        if self.n_eq == 0 || self.simpson_panels == 0 || !self.simpson_panels.is_multiple_of(2) {
            return Err(crate::Error::Input(
                "sample count must be positive and the panel count even".into(),
            ));
        }
        Ok(())
    }
}

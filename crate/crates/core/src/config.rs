//! The run configuration file (TOML) shared by all commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hill::{band_edges, BandStructure, PeriodicPotential};
use crate::oracle::{OracleConfig, Region};
use crate::resonance::SolverConfig;
use crate::window::PerturbationProfile;

fn default_band_tol() -> f64 {
    1e-11
}

fn default_samples() -> usize {
    801
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSettings {
    /// Upper end of the band scan; derived from the window and `W` when absent.
    pub e_max: Option<f64>,
    #[serde(default = "default_band_tol")]
    pub tol: f64,
}

impl Default for BandSettings {
    fn default() -> Self {
        BandSettings { e_max: None, tol: default_band_tol() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    /// `ε` values for the width-scaling fit; empty skips it.
    #[serde(default)]
    pub ladder: Vec<f64>,
    /// Energy whose resonance is followed along the ladder (window centre when absent).
    pub reference_energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitSettings {
    /// `ζ`-range of the portrait (profile extent ± 10 when absent).
    pub zeta_range: Option<[f64; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for PortraitSettings {
    fn default() -> Self {
        PortraitSettings { zeta_range: None, samples: default_samples() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfiguration {
    pub potential: PeriodicPotential,
    pub profile: PerturbationProfile,
    pub solver: SolverConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub bands: BandSettings,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub portrait: PortraitSettings,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfiguration {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfiguration = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Field and cross-field checks that need no spectral computation.
    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.profile.validate()?;
        self.solver.validate()?;
        self.oracle.validate()?;
        if !(self.bands.tol > 0.0) {
            return Err(Error::Config("bands.tol must be positive".into()));
        }
        let e_max = self.e_max();
        if !(e_max > self.solver.window[1]) {
            return Err(Error::Config(format!(
                "bands.e_max = {e_max} must exceed the top of the energy window {}",
                self.solver.window[1]
            )));
        }
        if let Some(bad) = self.verify.ladder.iter().find(|&&e| !(e > 0.0 && e <= 0.5)) {
            return Err(Error::Config(format!("verify.ladder entries must lie in (0, 0.5], got {bad}")));
        }
        if self.portrait.samples < 2 {
            return Err(Error::Config("portrait.samples must be at least 2".into()));
        }
        if let Some([a, b]) = self.portrait.zeta_range {
            if !(a < b) {
                return Err(Error::Config(format!("portrait.zeta_range must be increasing, got [{a}, {b}]")));
            }
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("output_dir must not be empty".into()));
        }
        Ok(())
    }

    /// `bands.e_max`, or `E_b − inf W + 10`, at least 50.
    pub fn e_max(&self) -> f64 {
        self.bands.e_max.unwrap_or_else(|| {
            let p = &self.profile;
            let w_low = p.mu - p.nu.abs() + p.bumps.iter().map(|b| b.height.min(0.0)).sum::<f64>();
            (self.solver.window[1] - w_low + 10.0).max(50.0)
        })
    }

    pub fn band_structure(&self) -> Result<BandStructure> {
        band_edges(&self.potential, self.e_max(), self.bands.tol)
    }

    /// Box-fits-window check for a fixed-size oracle box at every `ε` in use.
    pub fn check_oracle_fit(&self, bands: &BandStructure) -> Result<()> {
        if self.oracle.auto_fit {
            return Ok(());
        }
        let w = (self.solver.window[0], self.solver.window[1]);
        let region = Region::from_window(&self.profile, bands, w)?;
        for eps in std::iter::once(self.solver.epsilon).chain(self.verify.ladder.iter().copied()) {
            region.check(&self.oracle, self.solver.zeta, eps)?;
        }
        Ok(())
    }

    /// Built-in configuration for one of the fixtures.
    pub fn for_fixture(f: &crate::fixtures::Fixture, epsilon: f64) -> Self {
        RunConfiguration {
            potential: f.potential.clone(),
            profile: f.profile.clone(),
            solver: SolverConfig::new(epsilon, 0.0, f.window),
            oracle: OracleConfig::default(),
            bands: BandSettings { e_max: Some(f.e_max), tol: default_band_tol() },
            verify: VerifySettings::default(),
            portrait: PortraitSettings::default(),
            output_dir: default_output(),
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const SAMPLE: &str = r#"
output_dir = "runs/barrier"
seed = 7

[potential]
mean = 0.0
cos_coeffs = [2.0]

[profile]
mu = 0.0
nu = -2.1
bumps = [[4.2, 6.0, 2.0]]

[solver]
epsilon = 0.1
window = [11.7, 12.3]

[oracle]
half_length = 300.0
points_per_period = 32
cap_strength = 4.0
cap_onset = 0.7

[verify]
ladder = [0.12, 0.1]
"#;

    #[test]
    fn parse_validate_round_trip() {
        let cfg = RunConfiguration::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.profile, fixtures::h6_barrier().profile);
        assert_eq!(cfg.solver.root_tol, 1e-12);
        let again = RunConfiguration::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(again, cfg);
        for f in fixtures::all() {
            let c = RunConfiguration::for_fixture(&f, 0.1);
            assert_eq!(RunConfiguration::from_toml_str(&c.to_toml_string()).unwrap(), c);
        }
    }

    #[test]
    fn diagnostics_carry_positions_and_causes() {
        let broken = SAMPLE.replace("epsilon = 0.1", "epsilon = ");
        let err = RunConfiguration::from_toml_str(&broken).unwrap_err();
        assert!(err.is_configuration() && err.to_string().contains("line"), "{err}");
        let typo = SAMPLE.replace("seed = 7", "sead = 7");
        assert!(RunConfiguration::from_toml_str(&typo).is_err());
        let eps = SAMPLE.replace("epsilon = 0.1", "epsilon = 0.7");
        assert!(RunConfiguration::from_toml_str(&eps).unwrap_err().to_string().contains("epsilon"));
        let ladder = SAMPLE.replace("[0.12, 0.1]", "[0.12, -0.1]");
        assert!(RunConfiguration::from_toml_str(&ladder).is_err());
    }

    #[test]
    fn fixed_box_is_checked_against_the_window() {
        let small = SAMPLE.replace("cap_onset = 0.7", "cap_onset = 0.7\nauto_fit = false").replace("300.0", "40.0");
        let cfg = RunConfiguration::from_toml_str(&small).unwrap();
        let bands = cfg.band_structure().unwrap();
        let err = cfg.check_oracle_fit(&bands).unwrap_err();
        assert!(matches!(err, Error::WindowDoesNotFit(_)), "{err}");
    }
}

//! Scenario configuration files (TOML).
//!
//! ```toml
//! scenario = "pn-vs-area"
//! seed = 7
//!
//! [numerics]
//! rtol = 1e-9
//!
//! [pn-vs-area]
//! theta_pi = { start = 0, stop = 10, step = 0.05 }
//! tau_d = 0.1
//! ```
//!
//! All quantities are in units of the emitter decay rate. Pulse areas are
//! given in multiples of π.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PnVsArea,
    #[serde(rename = "pmn-vs-T")]
    PmnVsT,
    SpectrumMap,
    G2FrequencyMap,
    TimebinPurities,
    McValidate,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PnVsArea => "pn-vs-area",
            ScenarioKind::PmnVsT => "pmn-vs-T",
            ScenarioKind::SpectrumMap => "spectrum-map",
            ScenarioKind::G2FrequencyMap => "g2-frequency-map",
            ScenarioKind::TimebinPurities => "timebin-purities",
            ScenarioKind::McValidate => "mc-validate",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A list of values, a single value, or an evenly spaced range given by
/// either `step` or `count`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Single(f64),
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
    },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match *self {
            Grid::Single(x) => vec![x],
            Grid::List(ref xs) => xs.clone(),
            Grid::Range { start, stop, step, count } => {
                if !(start.is_finite() && stop.is_finite()) || stop < start {
                    return Err(ConfigError::new(format!("range needs finite start <= stop, got {start}..{stop}")));
                }
                match (step, count) {
                    (Some(h), None) => {
                        if !(h > 0.0) {
                            return Err(ConfigError::new(format!("range step must be positive, got {h}")));
                        }
                        let n = ((stop - start) / h + 1e-9).floor() as usize;
                        (0..=n).map(|k| start + k as f64 * h).collect()
                    }
                    (None, Some(n)) => match n {
                        0 => return Err(ConfigError::new("range count must be at least 1")),
                        1 => vec![start],
                        _ => (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect(),
                    },
                    _ => return Err(ConfigError::new("range needs exactly one of `step` and `count`")),
                }
            }
        };
        if v.is_empty() {
            return Err(ConfigError::new("empty grid"));
        }
        if v.iter().any(|x| x.is_nan()) {
            return Err(ConfigError::new("grid contains NaN"));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Mandel truncation order; 4 for bare emission by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Monte Carlo ensemble size per parameter point.
    #[serde(default = "default_trajectories")]
    pub trajectories: u64,
    /// Fock levels per filter mode in trajectories.
    #[serde(default = "default_filter_levels")]
    pub filter_levels: usize,
    #[serde(default = "default_max_jumps")]
    pub max_jumps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_rtol() -> f64 {
    dynrf::engine::DEFAULT_RTOL
}
fn default_atol() -> f64 {
    dynrf::engine::DEFAULT_ATOL
}
fn default_trajectories() -> u64 {
    100_000
}
fn default_filter_levels() -> usize {
    6
}
fn default_max_jumps() -> usize {
    dynrf::trajectories::MAX_JUMPS
}
fn default_tau_d() -> f64 {
    0.1
}
fn default_epsilon() -> f64 {
    dynrf::model::DEFAULT_COUPLING
}
fn default_filters() -> usize {
    1
}
fn default_spectrum_points() -> usize {
    401
}
fn default_map_points() -> usize {
    41
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            rtol: default_rtol(),
            atol: default_atol(),
            n_max: None,
            trajectories: default_trajectories(),
            filter_levels: default_filter_levels(),
            max_jumps: default_max_jumps(),
            workers: None,
        }
    }
}

/// A frequency filter (sensor) placed at `detuning` from the laser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(default)]
    pub detuning: f64,
    pub linewidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PnVsArea {
    pub theta_pi: Grid,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmnVsT {
    pub theta_pi: Grid,
    pub t: Grid,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
    /// Counts behind this filter instead of the bare emission.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumMap {
    pub theta_pi: Grid,
    /// Frequency axis; spans the drive sidebands when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Grid>,
    #[serde(default = "default_spectrum_points")]
    pub omega_points: usize,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
    /// Lorentzian filter width; 0 for the bare spectrum.
    #[serde(default)]
    pub filter_width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2FrequencyMap {
    pub theta_pi: Grid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Grid>,
    #[serde(default = "default_map_points")]
    pub omega_points: usize,
    pub linewidth: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimebinPurities {
    pub theta_pi: Grid,
    pub t: Grid,
    pub filter: FilterConfig,
    /// 1: one filtered mode; 2: two identical sensors counted as two modes,
    /// outcomes summed over both.
    #[serde(default = "default_filters")]
    pub filters: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McValidate {
    pub theta_pi: Grid,
    pub linewidth: Grid,
    pub t: Grid,
    #[serde(default)]
    pub filter_detuning: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_tau_d")]
    pub tau_d: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(rename = "pn-vs-area", default, skip_serializing_if = "Option::is_none")]
    pub pn_vs_area: Option<PnVsArea>,
    #[serde(rename = "pmn-vs-T", default, skip_serializing_if = "Option::is_none")]
    pub pmn_vs_t: Option<PmnVsT>,
    #[serde(rename = "spectrum-map", default, skip_serializing_if = "Option::is_none")]
    pub spectrum_map: Option<SpectrumMap>,
    #[serde(rename = "g2-frequency-map", default, skip_serializing_if = "Option::is_none")]
    pub g2_frequency_map: Option<G2FrequencyMap>,
    #[serde(rename = "timebin-purities", default, skip_serializing_if = "Option::is_none")]
    pub timebin_purities: Option<TimebinPurities>,
    #[serde(rename = "mc-validate", default, skip_serializing_if = "Option::is_none")]
    pub mc_validate: Option<McValidate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn section<'a, T>(&self, s: &'a Option<T>) -> Result<&'a T, ConfigError> {
        s.as_ref().ok_or_else(|| ConfigError::new(format!("missing [{}] section", self.scenario)))
    }

    pub fn pn_vs_area(&self) -> Result<&PnVsArea, ConfigError> {
        self.section(&self.pn_vs_area)
    }
    pub fn pmn_vs_t(&self) -> Result<&PmnVsT, ConfigError> {
        self.section(&self.pmn_vs_t)
    }
    pub fn spectrum_map(&self) -> Result<&SpectrumMap, ConfigError> {
        self.section(&self.spectrum_map)
    }
    pub fn g2_frequency_map(&self) -> Result<&G2FrequencyMap, ConfigError> {
        self.section(&self.g2_frequency_map)
    }
    pub fn timebin_purities(&self) -> Result<&TimebinPurities, ConfigError> {
        self.section(&self.timebin_purities)
    }
    pub fn mc_validate(&self) -> Result<&McValidate, ConfigError> {
        self.section(&self.mc_validate)
    }

    /// Checks the numeric settings shared by all scenarios.
    pub fn validate_numerics(&self) -> Result<(), ConfigError> {
        let n = &self.numerics;
        if !(n.rtol > 0.0 && n.atol > 0.0) {
            return Err(ConfigError::new("tolerances must be positive"));
        }
        if n.trajectories == 0 {
            return Err(ConfigError::new("trajectories must be at least 1"));
        }
        if n.workers == Some(0) {
            return Err(ConfigError::new("workers must be at least 1"));
        }
        if n.max_jumps == 0 {
            return Err(ConfigError::new("max_jumps must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::Range { start: 0.0, stop: 1.0, step: Some(0.25), count: None }.values().unwrap().len(), 5);
        assert_eq!(
            Grid::Range { start: 0.0, stop: 1.0, step: None, count: Some(3) }.values().unwrap(),
            vec![0.0, 0.5, 1.0]
        );
        assert!(Grid::Range { start: 1.0, stop: 0.0, step: Some(0.1), count: None }.values().is_err());
        assert!(Grid::Range { start: 0.0, stop: 1.0, step: Some(0.1), count: Some(3) }.values().is_err());
        assert!(Grid::List(vec![]).values().is_err());
    }

    #[test]
    fn parses_sections_and_defaults() {
        let c = ScenarioConfig::from_toml(
            r#"
            scenario = "pn-vs-area"
            [pn-vs-area]
            theta_pi = [1, 2]
            "#,
        )
        .unwrap();
        assert_eq!(c.scenario, ScenarioKind::PnVsArea);
        assert_eq!(c.numerics.trajectories, 100_000);
        assert_eq!(c.pn_vs_area().unwrap().tau_d, 0.1);
        assert!(c.pmn_vs_t().is_err());
        assert_eq!(ScenarioConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ScenarioConfig::from_toml("scenario = \"pn-vs-area\"\nbogus = 1").is_err());
        assert!(ScenarioConfig::from_toml("scenario = \"nope\"").is_err());
    }
}

//! Run configuration, read from a TOML document.
//!
//! Every section and field is optional; omitted values take the defaults
//! below. Unknown keys are rejected. See `configs/default.toml` for the
//! complete document with all defaults spelled out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{MONITOR_THRESHOLD, SWEEP_TIE_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{default_agents, AgentSpec, ReasonParams, ReasonSpec, WeightVector};
use crate::scenario::{build_scenario, ScenarioConfig};
use crate::scoring::{ClearanceMetric, ScoringContext, TIE_EPSILON};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConfig {
    pub clearance: ClearanceMetric,
    pub tie_epsilon: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            clearance: ClearanceMetric::Euclidean,
            tie_epsilon: TIE_EPSILON,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub id: String,
    pub reasons: Vec<ReasonSpec>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    /// Agent weights in agent order; uniform when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    /// Ideal distribution for the balance factor; uniform when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub resolution: usize,
    pub sweep_tie_threshold: f64,
    pub monitor_threshold: f64,
    /// Candidate to invert.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    /// Score series CSV read by `monitor`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            resolution: 100,
            sweep_tie_threshold: SWEEP_TIE_THRESHOLD,
            monitor_threshold: MONITOR_THRESHOLD,
            candidate: None,
            series: None,
        }
    }
}

/// Externally produced trajectories that replace or extend the generated ones.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub environment: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub reasons: ReasonParams,
    pub scoring: ScoringConfig,
    pub agents: Vec<AgentConfig>,
    pub weights: WeightsConfig,
    pub analysis: AnalysisConfig,
    pub inputs: InputsConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioConfig::default(),
            reasons: ReasonParams::default(),
            scoring: ScoringConfig::default(),
            agents: default_agents()
                .into_iter()
                .map(|a| AgentConfig {
                    id: a.id().to_owned(),
                    reasons: a.reasons().to_vec(),
                })
                .collect(),
            weights: WeightsConfig::default(),
            analysis: AnalysisConfig::default(),
            inputs: InputsConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

fn field_error(field: &str, err: Error) -> Error {
    let message = match err {
        Error::InvalidArgument(m) | Error::InvalidInput(m) | Error::Config(m) => m,
        other => other.to_string(),
    };
    Error::Config(format!("{field}: {message}"))
}

impl RunConfig {
    /// Parses and validates a TOML document. Relative input paths are kept as written.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::parse(origin, "configuration document is empty"));
        }
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::parse(origin, e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        build_scenario(&self.scenario).map_err(|e| field_error("scenario", e))?;
        self.reasons
            .validate()
            .map_err(|e| field_error("reasons", e))?;
        let agents = self.agents()?;
        self.weights_for(agents.len())?;
        let scoring = &self.scoring;
        if !(scoring.tie_epsilon.is_finite() && scoring.tie_epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "scoring.tie_epsilon must be non-negative, got {}",
                scoring.tie_epsilon
            )));
        }
        let a = &self.analysis;
        if a.resolution == 0 {
            return Err(Error::Config(
                "analysis.resolution must be at least 1".into(),
            ));
        }
        if !(a.sweep_tie_threshold.is_finite() && a.sweep_tie_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "analysis.sweep_tie_threshold must be non-negative, got {}",
                a.sweep_tie_threshold
            )));
        }
        if !(a.monitor_threshold > 0.0 && a.monitor_threshold < 1.0) {
            return Err(Error::Config(format!(
                "analysis.monitor_threshold must lie in (0, 1), got {}",
                a.monitor_threshold
            )));
        }
        Ok(())
    }

    pub fn agents(&self) -> Result<Vec<AgentSpec>> {
        if self.agents.is_empty() {
            return Err(Error::Config(
                "agents: at least one agent is required".into(),
            ));
        }
        self.agents
            .iter()
            .map(|a| {
                AgentSpec::new(a.id.clone(), a.reasons.clone())
                    .map_err(|e| field_error(&format!("agents.{}", a.id), e))
            })
            .collect()
    }

    pub fn weights(&self) -> Result<WeightVector> {
        self.weights_for(self.agents.len())
    }

    fn weights_for(&self, n: usize) -> Result<WeightVector> {
        let uniform = vec![1.0 / n as f64; n];
        let w = self.weights.w.clone().unwrap_or_else(|| uniform.clone());
        let ideal = self.weights.ideal.clone().unwrap_or(uniform);
        if w.len() != n {
            return Err(Error::Config(format!(
                "weights.w: {} weights for {n} agents",
                w.len()
            )));
        }
        if ideal.len() != n {
            return Err(Error::Config(format!(
                "weights.ideal: {} ideal weights for {n} agents",
                ideal.len()
            )));
        }
        let field = if self.weights.w.is_some() {
            "weights.w"
        } else {
            "weights.ideal"
        };
        WeightVector::new(w, ideal).map_err(|e| field_error(field, e))
    }

    pub fn context(&self) -> Result<ScoringContext> {
        Ok(ScoringContext {
            road: self.scenario.road()?,
            vehicle_width: self.scenario.vehicle_width,
            params: self.reasons,
            clearance: self.scoring.clearance,
        })
    }

    /// Resolves relative input paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.inputs.candidates);
        fix(&mut self.inputs.environment);
        fix(&mut self.analysis.series);
    }
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = RunConfig::from_toml_str(&text, path)?;
    if let Some(base) = path.parent() {
        config.resolve_paths(base);
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::from_toml_str(text, Path::new("test.toml"))
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let text = RunConfig::default().to_toml_string();
        assert_eq!(parse(&text).unwrap(), RunConfig::default());
    }

    #[test]
    fn default_weights_and_constants() {
        let c = RunConfig::default();
        let w = c.weights().unwrap();
        assert_eq!(w.w(), &[1.0 / 3.0; 3]);
        let r = c.reasons;
        assert_eq!([r.k1, r.k2, r.k3, r.k4], [0.2; 4]);
    }

    #[test]
    fn weights_must_sum_to_one() {
        let err = parse("[weights]\nw = [0.5, 0.6, 0.2]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("weights must sum to 1"), "{msg}");
        assert!(msg.contains("weights.w"), "{msg}");
    }

    #[test]
    fn empty_document_is_a_parse_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(parse("  \n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            parse("[weights]\nwx = [1.0]\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse("bogus = 1\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse("[reasons]\nk5 = 0.2\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let c = parse("[reasons]\nk1 = 0.5\n").unwrap();
        assert_eq!(c.reasons.k1, 0.5);
        assert_eq!(c.reasons.k2, 0.2);
        assert_eq!(c.scenario, ScenarioConfig::default());
    }

    #[test]
    fn missing_file_is_io() {
        let err = load_config("/nonexistent/config.toml").unwrap_err();
        assert!(err.is_io());
    }
}

//! Run configuration read from a JSON file. Unknown keys are rejected and
//! errors carry the path of the offending key.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eyecontact::harness::TrialConfig;
use eyecontact::{default_scenario, Method, Scenario, ViewingSituation};

use crate::error::CliError;

/// A scenario given inline or as a path to a JSON file. Relative paths are
/// resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Path(PathBuf),
    Inline(Box<Scenario>),
}

impl Default for ScenarioSource {
    fn default() -> Self {
        ScenarioSource::Inline(Box::new(default_scenario()))
    }
}

/// Synthetic motion for `track-demo`: the body walks back and forth across
/// the sensor's view while its facing swings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackDemoConfig {
    pub runs: usize,
    pub frames: u64,
    /// Distance from the sensor to the centre of the walk, metres.
    pub range: f64,
    /// Half length of the walk, metres.
    pub walk_half_length: f64,
    pub walk_speed: f64,
    pub turn_amplitude_deg: f64,
    pub turn_period_s: f64,
    /// Frames excluded from the statistics while the filter settles.
    pub warmup_frames: u64,
}

impl Default for TrackDemoConfig {
    fn default() -> Self {
        Self {
            runs: 10,
            frames: 300,
            range: 2.0,
            walk_half_length: 0.5,
            walk_speed: 0.3,
            turn_amplitude_deg: 45.0,
            turn_period_s: 6.0,
            warmup_frames: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub methods: Vec<Method>,
    pub situations: Vec<ViewingSituation>,
    pub n_per_cell: usize,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Also write one JSONL trace per trial from `experiment`.
    pub trace: bool,
    pub trial: TrialConfig,
    pub track_demo: TrackDemoConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioSource::default(),
            methods: Method::ALL.to_vec(),
            situations: ViewingSituation::ALL.to_vec(),
            n_per_cell: 12,
            base_seed: 42,
            output_dir: PathBuf::from("results"),
            trace: false,
            trial: TrialConfig::default(),
            track_demo: TrackDemoConfig::default(),
        }
    }
}

fn invalid(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{key}: {message}"))
}

/// Parses and validates a config document. The scenario is not loaded.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "config".to_string() } else { path };
        invalid(&path, e.into_inner())
    })?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(invalid("methods", "must name at least one method"));
        }
        if self.situations.is_empty() {
            return Err(invalid("situations", "must name at least one situation"));
        }
        if self.n_per_cell == 0 {
            return Err(invalid("n_per_cell", "must be at least 1"));
        }
        self.trial.validate().map_err(|e| invalid("trial", e))?;
        let demo = &self.track_demo;
        if demo.runs == 0 || demo.frames <= demo.warmup_frames {
            return Err(invalid("track_demo", "needs at least one run and more frames than warmup_frames"));
        }
        if !(demo.range > 0.0 && demo.walk_half_length >= 0.0 && demo.walk_speed >= 0.0 && demo.turn_period_s > 0.0) {
            return Err(invalid(
                "track_demo",
                "range and turn_period_s must be positive, walk values non-negative",
            ));
        }
        if let ScenarioSource::Inline(s) = &self.scenario {
            s.validate().map_err(|e| invalid("scenario", e))?;
        }
        Ok(())
    }

    /// Resolves the scenario, reading it from disk when given as a path.
    pub fn load_scenario(&self, base_dir: &Path) -> Result<Scenario, CliError> {
        match &self.scenario {
            ScenarioSource::Inline(s) => Ok((**s).clone()),
            ScenarioSource::Path(p) => {
                let path = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                let text = fs::read_to_string(&path).map_err(|e| invalid("scenario", format!("{}: {e}", path.display())))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                let s: Scenario =
                    serde_path_to_error::deserialize(de).map_err(|e| invalid(&format!("scenario.{}", e.path()), e.into_inner()))?;
                s.validate().map_err(|e| invalid("scenario", e))?;
                Ok(s)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.n_per_cell, 12);
        assert_eq!(c.base_seed, 42);
        assert_eq!(c.methods.len() * c.situations.len(), 16);
    }

    #[test]
    fn zero_cell_size_names_the_key() {
        let e = parse_config(r#"{"n_per_cell": 0}"#).unwrap_err();
        assert!(matches!(&e, CliError::Validation(m) if m.starts_with("n_per_cell")), "{e}");
    }

    #[test]
    fn single_cell_config() {
        let c = parse_config(r#"{"methods": ["M4"], "situations": ["OFOV"], "n_per_cell": 10000}"#).unwrap();
        assert_eq!(c.methods, [Method::M4]);
        assert_eq!(c.situations, [ViewingSituation::OutOfView]);
        assert_eq!(c.n_per_cell, 10_000);
    }

    #[test]
    fn unknown_and_nested_keys_rejected_with_path() {
        let e = parse_config(r#"{"n_per_cel": 3}"#).unwrap_err();
        assert!(e.to_string().contains("n_per_cel"), "{e}");
        let e = parse_config(r#"{"trial": {"body": {"particle_filter": {"n_particles": "many"}}}}"#).unwrap_err();
        assert!(e.to_string().contains("trial.body.particle_filter.n_particles"), "{e}");
        let e = parse_config(r#"{"methods": ["M5"]}"#).unwrap_err();
        assert!(e.to_string().starts_with("methods"), "{e}");
    }

    #[test]
    fn empty_sets_and_bad_trial_values_rejected() {
        assert!(parse_config(r#"{"methods": []}"#).is_err());
        assert!(parse_config(r#"{"situations": []}"#).is_err());
        let e = parse_config(r#"{"trial": {"startup_budget_s": 0}}"#).unwrap_err();
        assert!(e.to_string().contains("startup_budget_s"), "{e}");
        assert!(parse_config("[1, 2]").is_err());
        assert!(parse_config("{").is_err());
    }

    #[test]
    fn ground_truth_body_source() {
        let c = parse_config(r#"{"trial": {"body": "ground_truth"}}"#).unwrap();
        assert_eq!(c.trial, TrialConfig::ground_truth());
    }

    #[test]
    fn scenario_path_is_resolved_against_base() {
        let dir = std::env::temp_dir().join(format!("eyecontact-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join("room.json"), serde_json::to_string(&default_scenario()).unwrap()).unwrap();
        let c = parse_config(r#"{"scenario": "room.json"}"#).unwrap();
        assert_eq!(c.scenario, ScenarioSource::Path("room.json".into()));
        assert_eq!(c.load_scenario(&dir).unwrap(), default_scenario());
        assert!(c.load_scenario(Path::new("/nonexistent")).is_err());
        fs::remove_dir_all(dir).unwrap();
    }

    fn arb_config() -> impl Strategy<Value = RunConfig> {
        (
            proptest::sample::subsequence(Method::ALL.to_vec(), 1..=4),
            proptest::sample::subsequence(ViewingSituation::ALL.to_vec(), 1..=4),
            1usize..100_000,
            any::<u64>(),
            any::<bool>(),
            any::<bool>(),
        )
            .prop_map(|(methods, situations, n_per_cell, base_seed, trace, ground_truth)| RunConfig {
                methods,
                situations,
                n_per_cell,
                base_seed,
                trace,
                trial: if ground_truth {
                    TrialConfig::ground_truth()
                } else {
                    TrialConfig::default()
                },
                ..RunConfig::default()
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(c in arb_config()) {
            let text = serde_json::to_string(&c).unwrap();
            prop_assert_eq!(parse_config(&text).unwrap(), c);
        }
    }
}

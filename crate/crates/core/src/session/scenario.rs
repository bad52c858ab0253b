//! Declarative scenario files (TOML, or JSON when the text starts with `{`).
//!
//! ```toml
//! seed = 7
//! tick_rate = 10.0
//! run_limit = 200
//! default_model = "default"
//! listeners = []
//!
//! [topology]
//! width = 800
//! height = 600
//!
//! [mobility]
//! step = 5.0
//! width = 400
//! height = 300
//!
//! [models.default]
//! behavior = "red-green-v1"
//! comm_range = 100
//!
//! [[nodes]]
//! x = 100
//! y = 100
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::corpus;
use crate::geometry::Point;
use crate::mobility::RandomWaypoint;
use crate::property::Properties;
use crate::simulation::{Simulation, SimulationConfig};
use crate::topology::{
    NodeModel, DEFAULT_COMM_RANGE, DEFAULT_HEIGHT, DEFAULT_MODEL, DEFAULT_WIDTH,
};

pub const DEFAULT_TICK_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    /// Wall-clock pacing in ticks per second; 0 runs as fast as possible.
    #[serde(default = "default_tick_rate")]
    pub tick_rate: f64,
    #[serde(default)]
    pub run_limit: Option<u64>,
    #[serde(default = "default_model_name")]
    pub default_model: String,
    #[serde(default)]
    pub listeners: Vec<String>,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub models: BTreeMap<String, ModelBinding>,
    #[serde(default)]
    pub nodes: Vec<InitialNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub width: f64,
    pub height: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilityConfig {
    pub step: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        let rwp = RandomWaypoint::default();
        MobilityConfig {
            step: rwp.step,
            width: rwp.width,
            height: rwp.height,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBinding {
    #[serde(default)]
    pub behavior: Option<String>,
    #[serde(default = "default_comm_range")]
    pub comm_range: f64,
    #[serde(default = "default_true")]
    pub wireless: bool,
    #[serde(default)]
    pub properties: Properties,
}

impl Default for ModelBinding {
    fn default() -> Self {
        ModelBinding {
            behavior: None,
            comm_range: DEFAULT_COMM_RANGE,
            wireless: true,
            properties: Properties::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialNode {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub model: Option<String>,
}

fn default_tick_rate() -> f64 {
    DEFAULT_TICK_RATE
}

fn default_model_name() -> String {
    DEFAULT_MODEL.to_owned()
}

fn default_comm_range() -> f64 {
    DEFAULT_COMM_RANGE
}

fn default_true() -> bool {
    true
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            tick_rate: DEFAULT_TICK_RATE,
            run_limit: None,
            default_model: default_model_name(),
            listeners: Vec::new(),
            topology: TopologyConfig::default(),
            mobility: MobilityConfig::default(),
            models: BTreeMap::new(),
            nodes: Vec::new(),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |nl| before.len() - nl - 1)
        + 1;
    (line, col)
}

fn config_error(location: impl Into<String>, message: impl Into<String>) -> SessionError {
    SessionError::Config {
        location: location.into(),
        message: message.into(),
    }
}

impl ScenarioConfig {
    /// Parses and validates a scenario.
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let config: ScenarioConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| {
                config_error(
                    format!("line {}, column {}", e.line(), e.column()),
                    e.to_string(),
                )
            })?
        } else {
            toml::from_str(text).map_err(|e| {
                let location = match e.span() {
                    Some(span) => {
                        let (line, col) = line_col(text, span.start);
                        format!("line {line}, column {col}")
                    }
                    None => "document".to_owned(),
                };
                config_error(location, e.message().to_owned())
            })?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if !self.tick_rate.is_finite() || self.tick_rate < 0.0 {
            return Err(config_error("tick_rate", "must be a finite number ≥ 0"));
        }
        let t = &self.topology;
        if !(t.width.is_finite() && t.width > 0.0 && t.height.is_finite() && t.height > 0.0) {
            return Err(config_error(
                "topology",
                "width and height must be positive",
            ));
        }
        let m = &self.mobility;
        if !m.step.is_finite() || m.step < 0.0 {
            return Err(config_error("mobility.step", "must be a finite number ≥ 0"));
        }
        if m.width == 0 || m.height == 0 {
            return Err(config_error(
                "mobility",
                "waypoint region must be non-empty",
            ));
        }
        for (name, binding) in &self.models {
            if name.is_empty() {
                return Err(config_error("models", "model names must be non-empty"));
            }
            if let Some(b) = &binding.behavior {
                if corpus::behavior(b).is_none() {
                    return Err(config_error(
                        format!("models.{name}.behavior"),
                        format!(
                            "unknown behavior `{b}` (known: {})",
                            corpus::BEHAVIOR_NAMES.join(", ")
                        ),
                    ));
                }
            }
            if !binding.comm_range.is_finite() || binding.comm_range < 0.0 {
                return Err(config_error(
                    format!("models.{name}.comm_range"),
                    "must be ≥ 0",
                ));
            }
            if binding.properties.keys().any(String::is_empty) {
                return Err(config_error(
                    format!("models.{name}.properties"),
                    "empty property key",
                ));
            }
        }
        for (i, l) in self.listeners.iter().enumerate() {
            if corpus::topology_listener(l).is_none() {
                return Err(config_error(
                    format!("listeners[{i}]"),
                    format!(
                        "unknown listener `{l}` (known: {})",
                        corpus::LISTENER_NAMES.join(", ")
                    ),
                ));
            }
        }
        let known = |name: &str| name == DEFAULT_MODEL || self.models.contains_key(name);
        if !known(&self.default_model) {
            return Err(config_error(
                "default_model",
                format!("model `{}` is not defined", self.default_model),
            ));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if !Point::new(n.x, n.y).is_finite() {
                return Err(config_error(
                    format!("nodes[{i}]"),
                    "non-finite coordinates",
                ));
            }
            if let Some(model) = &n.model {
                if !known(model) {
                    return Err(config_error(
                        format!("nodes[{i}].model"),
                        format!("model `{model}` is not defined"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn waypoint(&self) -> RandomWaypoint {
        RandomWaypoint {
            step: self.mobility.step,
            width: self.mobility.width,
            height: self.mobility.height,
        }
    }

    /// Builds the simulation: models, then listeners, then initial nodes.
    pub fn build(&self) -> Result<Simulation, SessionError> {
        self.validate()?;
        let mut sim = Simulation::new(SimulationConfig {
            width: self.topology.width,
            height: self.topology.height,
            seed: self.seed,
            waypoint: self.waypoint(),
        });
        for (name, binding) in &self.models {
            let model = NodeModel {
                behavior: binding.behavior.as_deref().and_then(corpus::behavior),
                properties: binding.properties.clone(),
                comm_range: binding.comm_range,
                wireless: binding.wireless,
            };
            sim.set_model(name, model)
                .map_err(|e| config_error(format!("models.{name}"), e.to_string()))?;
        }
        for name in &self.listeners {
            if let Some(l) = corpus::topology_listener(name) {
                sim.add_topology_listener(l);
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            let model = n.model.as_deref().unwrap_or(&self.default_model);
            sim.add_node(Point::new(n.x, n.y), model)
                .map_err(|e| config_error(format!("nodes[{i}]"), e.to_string()))?;
        }
        Ok(sim)
    }
}

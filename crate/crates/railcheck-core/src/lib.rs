//! Rule-based quality checks for multi-sensor railway annotation scenes.
//!
//! This crate validates OpenLABEL-style annotation files (JSON) against nine
//! issue-detection rules covering attribute schemas, 3D dimension limits,
//! camera-horizon geometry and rail topology. Validation works on the
//! annotation files alone; raw sensor recordings are never read.
//!
//! The main entry points are:
//!
//! - [`model::parse_scene`] — strict parser from JSON text into a [`model::Scene`]
//! - [`config::RuleConfig`] — declarative check configuration with shipped defaults
//! - [`detect::run_checks`] — runs the selected detectors and aggregates a [`report::Report`]
//! - [`faultlab`] — seeded clean-scene generator and fault injector used to
//!   verify detector behaviour without access to a real dataset

pub mod config;
pub mod detect;
pub mod faultlab;
pub mod geometry;
pub mod issue;
pub mod model;
pub mod report;

pub use config::{default_config, load_config, ConfigError, RuleConfig};
pub use detect::run_checks;
pub use issue::{Issue, IssueType};
pub use model::{parse_scene, ParseError, Scene};
pub use report::Report;

//! Synthetic scenes and fault injection for exercising the detectors.
//!
//! The dataset the detectors were tuned on cannot ship with this crate, so
//! this module provides the next best thing: a deterministic generator for
//! geometrically consistent multi-sensor scenes that pass every check, and
//! an injector that plants exactly one describable fault at a time. Running
//! the checks on an injected scene and comparing against the returned
//! [`ExpectedIssue`] turns detector precision and recall into an ordinary
//! test suite — no annotation data required.

mod generate;
mod inject;
mod write;

pub use generate::{generate_scene, GenParams};
pub use inject::{
    inject_all_faults, inject_fault, ExpectedIssue, FaultSpec, FaultTarget, InjectError,
};
pub use write::scene_to_json;

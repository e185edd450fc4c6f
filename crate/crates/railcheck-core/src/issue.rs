//! Issue vocabulary: the nine detectable issue types and the [`Issue`]
//! record the detectors emit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The nine detectable issue types, ordered alphabetically by name.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum IssueType {
    AnnotationAboveHorizon,
    DimensionInvalid,
    InconsistentAttributeScope,
    MissingAttribute,
    MissingEgoTrack,
    RailSideCount,
    RailSideOrder,
    TransitionIdenticalStartAndEnd,
    UnexpectedAttribute,
}

impl IssueType {
    /// All nine types in canonical (alphabetical) order.
    pub const ALL: [IssueType; 9] = [
        IssueType::AnnotationAboveHorizon,
        IssueType::DimensionInvalid,
        IssueType::InconsistentAttributeScope,
        IssueType::MissingAttribute,
        IssueType::MissingEgoTrack,
        IssueType::RailSideCount,
        IssueType::RailSideOrder,
        IssueType::TransitionIdenticalStartAndEnd,
        IssueType::UnexpectedAttribute,
    ];

    /// Canonical name, as used in config, CLI flags, and reports.
    pub fn name(self) -> &'static str {
        match self {
            IssueType::AnnotationAboveHorizon => "AnnotationAboveHorizon",
            IssueType::DimensionInvalid => "DimensionInvalid",
            IssueType::InconsistentAttributeScope => "InconsistentAttributeScope",
            IssueType::MissingAttribute => "MissingAttribute",
            IssueType::MissingEgoTrack => "MissingEgoTrack",
            IssueType::RailSideCount => "RailSideCount",
            IssueType::RailSideOrder => "RailSideOrder",
            IssueType::TransitionIdenticalStartAndEnd => "TransitionIdenticalStartAndEnd",
            IssueType::UnexpectedAttribute => "UnexpectedAttribute",
        }
    }

    /// One-line description, shown by `list-checks`.
    pub fn description(self) -> &'static str {
        match self {
            IssueType::AnnotationAboveHorizon => {
                "a 2D polyline of a checked class has a point above the camera's flat-earth horizon"
            }
            IssueType::DimensionInvalid => {
                "a 3D cuboid's size violates the configured per-class, per-axis limits"
            }
            IssueType::InconsistentAttributeScope => {
                "an attribute that must stay constant across sensors or frames takes conflicting values"
            }
            IssueType::MissingAttribute => {
                "an annotation lacks an attribute required for its object class"
            }
            IssueType::MissingEgoTrack => {
                "a frame has no ego-track annotation in a required sensor"
            }
            IssueType::RailSideCount => {
                "a track has more than one left or more than one right rail in one camera frame"
            }
            IssueType::RailSideOrder => {
                "a track's left rail appears to the right of its right rail at the bottom of the image"
            }
            IssueType::TransitionIdenticalStartAndEnd => {
                "a transition starts and ends on the same track id"
            }
            IssueType::UnexpectedAttribute => {
                "an annotation carries an attribute its class does not define, or a disallowed value"
            }
        }
    }
}

impl fmt::Display for IssueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error for unrecognized issue-type names.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown issue type \"{0}\"; expected one of: {known}", known = IssueType::ALL.map(|t| t.name()).join(", "))]
pub struct UnknownIssueType(pub String);

impl FromStr for IssueType {
    type Err = UnknownIssueType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IssueType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| UnknownIssueType(s.to_string()))
    }
}

/// One detected problem.
///
/// Which location fields are set depends on the issue type: per-annotation
/// checks set all four; `MissingEgoTrack` sets frame and sensor only;
/// `InconsistentAttributeScope` describes a group, so the annotation uid is
/// unset and the frame is set only for frame-scoped rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub issue_type: IssueType,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frame_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sensor: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub object_uid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub annotation_uid: Option<String>,
    /// Human-readable, nonempty.
    pub message: String,
    /// Machine-readable specifics (attribute names, measured values, limits).
    pub details: BTreeMap<String, String>,
}

impl Issue {
    /// Key for the deterministic report ordering.
    pub fn sort_key(&self) -> impl Ord + '_ {
        (
            self.issue_type,
            self.frame_index,
            self.sensor.as_deref(),
            self.object_uid.as_deref(),
            self.annotation_uid.as_deref(),
            &self.message,
            &self.details,
        )
    }

    /// One text line: location, type, message.
    pub fn to_line(&self) -> String {
        let mut loc = Vec::new();
        if let Some(f) = self.frame_index {
            loc.push(format!("frame {f}"));
        }
        if let Some(s) = &self.sensor {
            loc.push(format!("sensor {s}"));
        }
        if let Some(o) = &self.object_uid {
            loc.push(format!("object {o}"));
        }
        if let Some(a) = &self.annotation_uid {
            loc.push(format!("annotation {a}"));
        }
        let loc = if loc.is_empty() {
            "scene".to_string()
        } else {
            loc.join(", ")
        };
        format!("[{}] {}: {}", self.issue_type, loc, self.message)
    }
}

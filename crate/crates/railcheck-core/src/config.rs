//! Declarative check configuration.
//!
//! [`RuleConfig`] holds everything the detectors need: per-class attribute
//! schemas, cuboid dimension limits, attribute scope rules, sensor roles and
//! tolerances. [`default_config`] ships a workable approximation of a
//! railway labeling guide; every part of it can be overridden from a JSON
//! document via [`load_config`]. Top-level sections present in the document
//! replace the corresponding default section; absent sections keep their
//! defaults. The fully-resolved config can be written back out with
//! [`dump_config`], and `load(dump(c)) == c`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::issue::IssueType;
use crate::model::{AnnotationKind, AttrValue, Modality};

/// Fully-resolved check configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleConfig {
    /// Attribute schema per object class; classes absent here are skipped by
    /// the attribute checks.
    pub class_schemas: BTreeMap<String, ClassSchema>,
    /// Cuboid size limits per object class.
    pub dimension_limits: BTreeMap<String, DimLimits>,
    /// Attributes whose value must stay constant within a scope.
    pub scoped_attributes: Vec<ScopeRule>,
    pub ego: EgoConfig,
    pub horizon: HorizonConfig,
    pub rail: RailConfig,
    pub transition: TransitionConfig,
    /// Issue types to run; reports are silent about unselected types.
    pub check_selection: BTreeSet<IssueType>,
    /// How stored sensor poses are oriented; see `docs/config.md`.
    pub extrinsics: ExtrinsicsConvention,
}

/// Interpretation of the rotation in a sensor pose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ExtrinsicsConvention {
    /// Pose rotations map sensor-frame vectors into the vehicle frame.
    #[default]
    SensorToVehicle,
    /// Pose rotations map vehicle-frame vectors into the sensor frame.
    VehicleToSensor,
}

/// Expected attributes for one object class.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSchema {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub required: Vec<AttributeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub optional: Vec<AttributeSpec>,
}

impl ClassSchema {
    /// All specs, required first.
    pub fn specs(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.required.iter().chain(self.optional.iter())
    }
}

/// One expected attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub name: String,
    pub value_type: ValueType,
    /// Canonical value strings this attribute may take; unrestricted if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<BTreeSet<String>>,
    /// Restricts which annotations the spec applies to; all if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applies_to: Option<AppliesTo>,
}

impl AttributeSpec {
    pub fn applies(&self, kind: AnnotationKind, modality: Modality) -> bool {
        self.applies_to
            .as_ref()
            .map_or(true, |f| f.matches(kind, modality))
    }
}

/// Value type of an attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueType {
    Text,
    Num,
    Bool,
    Vec,
}

impl ValueType {
    pub fn matches(self, value: &AttrValue) -> bool {
        matches!(
            (self, value),
            (ValueType::Text, AttrValue::Text(_))
                | (ValueType::Num, AttrValue::Num(_))
                | (ValueType::Bool, AttrValue::Bool(_))
                | (ValueType::Vec, AttrValue::Vec(_))
        )
    }
}

/// Annotation filter for an [`AttributeSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppliesTo {
    /// Geometry kinds ("bbox", "cuboid", "poly2d", "poly3d"); all if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinds: Option<BTreeSet<AnnotationKind>>,
    /// Sensor modalities ("camera", "lidar", ...); all if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modalities: Option<BTreeSet<Modality>>,
}

impl AppliesTo {
    pub fn matches(&self, kind: AnnotationKind, modality: Modality) -> bool {
        self.kinds.as_ref().map_or(true, |k| k.contains(&kind))
            && self.modalities.as_ref().map_or(true, |m| m.contains(&modality))
    }
}

/// Inclusive min/max for one cuboid axis, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisLimit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl AxisLimit {
    pub fn is_empty(&self) -> bool {
        self.min.is_none() && self.max.is_none()
    }
}

/// Cuboid size limits for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimLimits {
    #[serde(default, skip_serializing_if = "AxisLimit::is_empty")]
    pub sx: AxisLimit,
    #[serde(default, skip_serializing_if = "AxisLimit::is_empty")]
    pub sy: AxisLimit,
    #[serde(default, skip_serializing_if = "AxisLimit::is_empty")]
    pub sz: AxisLimit,
}

impl DimLimits {
    /// (axis name, limit) for all three axes.
    pub fn axes(&self) -> [(&'static str, AxisLimit); 3] {
        [("sx", self.sx), ("sy", self.sy), ("sz", self.sz)]
    }
}

/// Consistency domain of a scoped attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    /// Same value across all sensors and frames of one object.
    ObjectConstant,
    /// Same value across sensors within one frame.
    FrameConstant,
}

/// One scoped-attribute rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScopeRule {
    /// Object class the rule applies to, or `"*"` for any class.
    pub class_name: String,
    pub attribute_name: String,
    pub scope: Scope,
}

/// Wildcard class name accepted by [`ScopeRule::class_name`].
pub const ANY_CLASS: &str = "*";

/// Where the ego track must be annotated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoConfig {
    #[serde(default = "default_track_class")]
    pub track_class: String,
    #[serde(default = "default_track_id_attribute")]
    pub track_id_attribute: String,
    /// Track id value that marks the ego track.
    #[serde(default)]
    pub ego_value: f64,
    /// Sensors that must contain an ego-track annotation in every frame.
    #[serde(default = "default_required_sensors")]
    pub required_sensors: Vec<String>,
}

impl Default for EgoConfig {
    fn default() -> Self {
        EgoConfig {
            track_class: default_track_class(),
            track_id_attribute: default_track_id_attribute(),
            ego_value: 0.0,
            required_sensors: default_required_sensors(),
        }
    }
}

/// Flat-earth horizon parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    /// Ground-plane normal in the vehicle frame, unit length.
    #[serde(default = "default_ground_normal")]
    pub ground_normal_vehicle: [f64; 3],
    /// Ground-plane offset along the normal, meters (unused by the vanishing
    /// line itself, which depends only on orientation).
    #[serde(default)]
    pub ground_height: f64,
    /// Sky-side margin in pixels before a point counts as above the horizon.
    #[serde(default)]
    pub tolerance_px: f64,
    /// Object classes whose 2D polylines are horizon-checked.
    #[serde(default = "default_horizon_classes")]
    pub checked_classes: BTreeSet<String>,
}

impl Default for HorizonConfig {
    fn default() -> Self {
        HorizonConfig {
            ground_normal_vehicle: default_ground_normal(),
            ground_height: 0.0,
            tolerance_px: 0.0,
            checked_classes: default_horizon_classes(),
        }
    }
}

/// Rail-side attribute vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RailConfig {
    #[serde(default = "default_rail_side_attribute")]
    pub rail_side_attribute: String,
    #[serde(default = "default_left_value")]
    pub left_value: String,
    #[serde(default = "default_right_value")]
    pub right_value: String,
    #[serde(default = "default_track_class")]
    pub track_class: String,
}

impl Default for RailConfig {
    fn default() -> Self {
        RailConfig {
            rail_side_attribute: default_rail_side_attribute(),
            left_value: default_left_value(),
            right_value: default_right_value(),
            track_class: default_track_class(),
        }
    }
}

/// Transition (switch connection) attribute vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    #[serde(default = "default_transition_class")]
    pub transition_class: String,
    #[serde(default = "default_from_attribute")]
    pub from_attribute: String,
    #[serde(default = "default_to_attribute")]
    pub to_attribute: String,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        TransitionConfig {
            transition_class: default_transition_class(),
            from_attribute: default_from_attribute(),
            to_attribute: default_to_attribute(),
        }
    }
}

fn default_track_class() -> String {
    "track".into()
}
fn default_track_id_attribute() -> String {
    "trackID".into()
}
fn default_required_sensors() -> Vec<String> {
    vec!["rgb_center".into(), "lidar".into()]
}
fn default_ground_normal() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}
fn default_horizon_classes() -> BTreeSet<String> {
    BTreeSet::from(["track".to_string()])
}
fn default_rail_side_attribute() -> String {
    "railSide".into()
}
fn default_left_value() -> String {
    "leftRail".into()
}
fn default_right_value() -> String {
    "rightRail".into()
}
fn default_transition_class() -> String {
    "transition".into()
}
fn default_from_attribute() -> String {
    "fromTrackID".into()
}
fn default_to_attribute() -> String {
    "toTrackID".into()
}

impl RuleConfig {
    pub fn is_enabled(&self, issue_type: IssueType) -> bool {
        self.check_selection.contains(&issue_type)
    }

    pub fn schema_for(&self, class_name: &str) -> Option<&ClassSchema> {
        self.class_schemas.get(class_name)
    }
}

/// Why a config document was rejected.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown issue type \"{0}\" in check_selection")]
    UnknownCheck(String),
    #[error("dimension limit for class \"{class}\", axis {axis}: min {min} > max {max}")]
    LimitContradiction {
        class: String,
        axis: &'static str,
        min: f64,
        max: f64,
    },
    #[error("dimension limit for class \"{class}\", axis {axis}: {value} is not positive")]
    NonPositiveLimit {
        class: String,
        axis: &'static str,
        value: f64,
    },
    #[error("horizon ground normal {0:?} is not unit length")]
    NonUnitGroundNormal([f64; 3]),
    #[error("horizon tolerance_px must be ≥ 0, got {0}")]
    NegativeTolerance(f64),
    #[error("class \"{class}\": attribute \"{attribute}\" appears twice in the schema")]
    DuplicateAttribute { class: String, attribute: String },
    #[error("class \"{class}\", attribute \"{attribute}\": allowed_values must not be empty")]
    EmptyAllowedValues { class: String, attribute: String },
    #[error("rail left_value and right_value are both \"{0}\"")]
    RailSidesEqual(String),
    #[error("transition from_attribute and to_attribute are both \"{0}\"")]
    TransitionAttrsEqual(String),
    #[error("{rule_kind} names class \"{class}\", which has no class schema (use \"*\" in scope rules for any class)")]
    UnknownClassInRule {
        rule_kind: &'static str,
        class: String,
    },
    #[error("ego required_sensors must not be empty")]
    EmptyRequiredSensors,
}

/// Raw config document: every section optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleConfigDoc {
    class_schemas: Option<BTreeMap<String, ClassSchema>>,
    dimension_limits: Option<BTreeMap<String, DimLimits>>,
    scoped_attributes: Option<Vec<ScopeRule>>,
    ego: Option<EgoConfig>,
    horizon: Option<HorizonConfig>,
    rail: Option<RailConfig>,
    transition: Option<TransitionConfig>,
    check_selection: Option<Vec<String>>,
    extrinsics: Option<ExtrinsicsConvention>,
}

/// Parses a JSON config document, merging it over the shipped defaults.
pub fn load_config(document: &str) -> Result<RuleConfig, ConfigError> {
    let doc: RuleConfigDoc = serde_json::from_str(document)?;
    let mut config = default_config();
    if let Some(v) = doc.class_schemas {
        config.class_schemas = v;
    }
    if let Some(v) = doc.dimension_limits {
        config.dimension_limits = v;
    }
    if let Some(v) = doc.scoped_attributes {
        config.scoped_attributes = v;
    }
    if let Some(v) = doc.ego {
        config.ego = v;
    }
    if let Some(v) = doc.horizon {
        config.horizon = v;
    }
    if let Some(v) = doc.rail {
        config.rail = v;
    }
    if let Some(v) = doc.transition {
        config.transition = v;
    }
    if let Some(names) = doc.check_selection {
        let mut selection = BTreeSet::new();
        for name in names {
            match name.parse::<IssueType>() {
                Ok(t) => {
                    selection.insert(t);
                }
                Err(_) => return Err(ConfigError::UnknownCheck(name)),
            }
        }
        config.check_selection = selection;
    }
    if let Some(v) = doc.extrinsics {
        config.extrinsics = v;
    }
    validate(&config)?;
    Ok(config)
}

/// Serializes a resolved config as pretty JSON; `load_config` accepts it
/// back unchanged.
pub fn dump_config(config: &RuleConfig) -> String {
    let mut text = serde_json::to_string_pretty(config).expect("config serialization");
    text.push('\n');
    text
}

fn validate(config: &RuleConfig) -> Result<(), ConfigError> {
    for (class, schema) in &config.class_schemas {
        let mut seen = BTreeSet::new();
        for spec in schema.specs() {
            if !seen.insert(spec.name.as_str()) {
                return Err(ConfigError::DuplicateAttribute {
                    class: class.clone(),
                    attribute: spec.name.clone(),
                });
            }
            if let Some(allowed) = &spec.allowed_values {
                if allowed.is_empty() {
                    return Err(ConfigError::EmptyAllowedValues {
                        class: class.clone(),
                        attribute: spec.name.clone(),
                    });
                }
            }
        }
    }

    for (class, limits) in &config.dimension_limits {
        if !config.class_schemas.contains_key(class) {
            return Err(ConfigError::UnknownClassInRule {
                rule_kind: "dimension_limits",
                class: class.clone(),
            });
        }
        for (axis, limit) in limits.axes() {
            for value in [limit.min, limit.max].into_iter().flatten() {
                if value <= 0.0 {
                    return Err(ConfigError::NonPositiveLimit {
                        class: class.clone(),
                        axis,
                        value,
                    });
                }
            }
            if let (Some(min), Some(max)) = (limit.min, limit.max) {
                if min > max {
                    return Err(ConfigError::LimitContradiction {
                        class: class.clone(),
                        axis,
                        min,
                        max,
                    });
                }
            }
        }
    }

    for rule in &config.scoped_attributes {
        if rule.class_name != ANY_CLASS && !config.class_schemas.contains_key(&rule.class_name) {
            return Err(ConfigError::UnknownClassInRule {
                rule_kind: "scoped_attributes",
                class: rule.class_name.clone(),
            });
        }
    }

    if config.ego.required_sensors.is_empty() {
        return Err(ConfigError::EmptyRequiredSensors);
    }

    let n = config.horizon.ground_normal_vehicle;
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(ConfigError::NonUnitGroundNormal(n));
    }
    if config.horizon.tolerance_px < 0.0 {
        return Err(ConfigError::NegativeTolerance(config.horizon.tolerance_px));
    }

    if config.rail.left_value == config.rail.right_value {
        return Err(ConfigError::RailSidesEqual(config.rail.left_value.clone()));
    }
    if config.transition.from_attribute == config.transition.to_attribute {
        return Err(ConfigError::TransitionAttrsEqual(
            config.transition.from_attribute.clone(),
        ));
    }

    Ok(())
}

fn text_spec(name: &str, allowed: &[&str]) -> AttributeSpec {
    AttributeSpec {
        name: name.into(),
        value_type: ValueType::Text,
        allowed_values: Some(allowed.iter().map(|s| s.to_string()).collect()),
        applies_to: None,
    }
}

fn num_spec(name: &str) -> AttributeSpec {
    AttributeSpec {
        name: name.into(),
        value_type: ValueType::Num,
        allowed_values: None,
        applies_to: None,
    }
}

/// The shipped default configuration.
///
/// Class lists, attribute names and thresholds approximate a railway
/// labeling guide and are meant to be overridden per dataset; they are not
/// ground truth. See `docs/config.md`.
pub fn default_config() -> RuleConfig {
    let mut class_schemas = BTreeMap::new();

    class_schemas.insert(
        "person".to_string(),
        ClassSchema {
            required: vec![],
            optional: vec![text_spec(
                "pose",
                &["upright", "sitting", "lying", "bent", "squatting"],
            )],
        },
    );

    let rail_side = AttributeSpec {
        name: default_rail_side_attribute(),
        value_type: ValueType::Text,
        allowed_values: Some(BTreeSet::from([
            default_left_value(),
            default_right_value(),
        ])),
        applies_to: Some(AppliesTo {
            kinds: Some(BTreeSet::from([
                AnnotationKind::Poly2D,
                AnnotationKind::Poly3D,
            ])),
            modalities: None,
        }),
    };
    class_schemas.insert(
        "track".to_string(),
        ClassSchema {
            required: vec![num_spec("trackID"), rail_side.clone()],
            optional: vec![],
        },
    );

    class_schemas.insert(
        "transition".to_string(),
        ClassSchema {
            required: vec![num_spec("fromTrackID"), num_spec("toTrackID")],
            optional: vec![rail_side],
        },
    );

    class_schemas.insert(
        "catenary_pole".to_string(),
        ClassSchema {
            required: vec![],
            optional: vec![text_spec("Type", &["structured", "solid"])],
        },
    );

    class_schemas.insert(
        "animal".to_string(),
        ClassSchema {
            required: vec![],
            optional: vec![text_spec(
                "Species",
                &["deer", "boar", "bird", "dog", "fox", "horse", "sheep", "cow"],
            )],
        },
    );

    class_schemas.insert("train".to_string(), ClassSchema::default());
    class_schemas.insert("signal".to_string(), ClassSchema::default());

    let mut dimension_limits = BTreeMap::new();
    dimension_limits.insert(
        "person".to_string(),
        DimLimits {
            sx: AxisLimit {
                min: None,
                max: Some(2.0),
            },
            sy: AxisLimit {
                min: None,
                max: Some(2.0),
            },
            sz: AxisLimit {
                min: None,
                max: Some(3.0),
            },
        },
    );
    dimension_limits.insert(
        "animal".to_string(),
        DimLimits {
            sx: AxisLimit::default(),
            sy: AxisLimit::default(),
            sz: AxisLimit {
                min: None,
                max: Some(2.5),
            },
        },
    );

    let scoped_attributes = vec![
        ScopeRule {
            class_name: "catenary_pole".into(),
            attribute_name: "Type".into(),
            scope: Scope::ObjectConstant,
        },
        ScopeRule {
            class_name: "track".into(),
            attribute_name: "trackID".into(),
            scope: Scope::ObjectConstant,
        },
    ];

    RuleConfig {
        class_schemas,
        dimension_limits,
        scoped_attributes,
        ego: EgoConfig::default(),
        horizon: HorizonConfig::default(),
        rail: RailConfig::default(),
        transition: TransitionConfig::default(),
        check_selection: IssueType::ALL.into_iter().collect(),
        extrinsics: ExtrinsicsConvention::default(),
    }
}

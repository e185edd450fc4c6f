//! Targeted fault injection.
//!
//! Each mutation is built to create exactly one instance of its issue type
//! and nothing else: the attribute vocabulary, class names and limits are
//! taken from [`default_config`](crate::config::default_config), so an
//! injected scene validated with the default configuration reports precisely
//! the injected fault. Targets are chosen by seeded randomness or named
//! explicitly; when nothing in the scene can host the mutation, injection
//! fails with [`InjectError::NoTarget`] instead of guessing.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::default_config;
use crate::geometry::horizon_line;
use crate::issue::{Issue, IssueType};
use crate::model::{Annotation, AttrValue, Geometry, Modality, Scene};

/// Which element a mutation lands on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultTarget {
    /// Seeded random choice among all applicable elements.
    Random,
    /// A specific annotation, named by frame and annotation uid.
    Annotation {
        frame_index: u64,
        annotation_uid: String,
    },
    /// A specific object, named by uid (for object-level mutations).
    Object { object_uid: String },
}

/// A fault to inject: the issue type it must provoke and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSpec {
    pub issue_type: IssueType,
    pub target: FaultTarget,
}

impl FaultSpec {
    pub fn random(issue_type: IssueType) -> Self {
        FaultSpec {
            issue_type,
            target: FaultTarget::Random,
        }
    }
}

/// Where the provoked issue must show up.
///
/// `None` fields are unconstrained; a detector issue matches when its type
/// equals `issue_type` and every `Some` field agrees.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct ExpectedIssue {
    pub issue_type: IssueType,
    pub frame_index: Option<u64>,
    pub sensor: Option<String>,
    pub object_uid: Option<String>,
    pub annotation_uid: Option<String>,
}

impl ExpectedIssue {
    pub fn matches(&self, issue: &Issue) -> bool {
        fn agrees<T: PartialEq>(expected: &Option<T>, actual: &Option<T>) -> bool {
            expected.is_none() || expected == actual
        }
        issue.issue_type == self.issue_type
            && agrees(&self.frame_index, &issue.frame_index)
            && agrees(&self.sensor, &issue.sensor)
            && agrees(&self.object_uid, &issue.object_uid)
            && agrees(&self.annotation_uid, &issue.annotation_uid)
    }

    pub fn matched_by(&self, issues: &[Issue]) -> bool {
        issues.iter().any(|issue| self.matches(issue))
    }
}

/// Why a fault could not be injected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InjectError {
    #[error("no applicable target for {issue_type}: {reason}")]
    NoTarget {
        issue_type: IssueType,
        reason: String,
    },
}

fn no_target(issue_type: IssueType, reason: &str) -> InjectError {
    InjectError::NoTarget {
        issue_type,
        reason: reason.to_string(),
    }
}

/// A located annotation: indices to mutate through, names for the
/// [`ExpectedIssue`].
#[derive(Debug, Clone)]
struct Target {
    frame: u64,
    index: usize,
    uid: String,
    object_uid: String,
    sensor: String,
}

impl Target {
    fn expected(&self, issue_type: IssueType) -> ExpectedIssue {
        ExpectedIssue {
            issue_type,
            frame_index: Some(self.frame),
            sensor: Some(self.sensor.clone()),
            object_uid: Some(self.object_uid.clone()),
            annotation_uid: Some(self.uid.clone()),
        }
    }
}

fn annotation_targets(
    scene: &Scene,
    keep: impl Fn(u64, &Annotation) -> bool,
) -> Vec<Target> {
    let mut out = Vec::new();
    for (&frame, fr) in &scene.frames {
        for (index, ann) in fr.annotations.iter().enumerate() {
            if keep(frame, ann) {
                out.push(Target {
                    frame,
                    index,
                    uid: ann.uid.clone(),
                    object_uid: ann.object_uid.clone(),
                    sensor: ann.sensor.clone(),
                });
            }
        }
    }
    out
}

fn allows_annotation(target: &FaultTarget, frame: u64, uid: &str, object_uid: &str) -> bool {
    match target {
        FaultTarget::Random => true,
        FaultTarget::Annotation {
            frame_index,
            annotation_uid,
        } => *frame_index == frame && annotation_uid == uid,
        FaultTarget::Object { object_uid: wanted } => wanted == object_uid,
    }
}

fn pick<T>(
    mut candidates: Vec<T>,
    issue_type: IssueType,
    rng: &mut ChaCha8Rng,
    empty_reason: &str,
) -> Result<T, InjectError> {
    if candidates.is_empty() {
        return Err(no_target(issue_type, empty_reason));
    }
    let index = rng.random_range(0..candidates.len());
    Ok(candidates.swap_remove(index))
}

fn annotation_mut<'a>(scene: &'a mut Scene, target: &Target) -> &'a mut Annotation {
    &mut scene
        .frames
        .get_mut(&target.frame)
        .expect("target frame exists")
        .annotations[target.index]
}

/// True when the annotation is evidence of the ego track (class + id value).
fn is_ego_evidence(scene: &Scene, ann: &Annotation, ego: &crate::config::EgoConfig) -> bool {
    scene.class_of(ann) == ego.track_class
        && ann
            .attributes
            .get(&ego.track_id_attribute)
            .and_then(AttrValue::as_number)
            == Some(ego.ego_value)
}

/// One track's rail pair in one (frame, sensor), eligible for side mutations.
#[derive(Debug, Clone)]
struct RailPair {
    frame: u64,
    sensor: String,
    object_uid: String,
    left: Target,
    right: Target,
}

fn rail_pairs(scene: &Scene) -> Vec<RailPair> {
    let config = default_config();
    let rail = &config.rail;
    type Bucket = (Vec<Target>, Vec<Target>);
    let mut groups: BTreeMap<(u64, String, String), Bucket> = BTreeMap::new();
    for (&frame, fr) in &scene.frames {
        for (index, ann) in fr.annotations.iter().enumerate() {
            if !matches!(ann.geometry, Geometry::Poly2D { .. })
                || scene.class_of(ann) != rail.track_class
                || scene.modality_of(ann) != Modality::Camera
            {
                continue;
            }
            let Some(side) = ann.attributes.get(&rail.rail_side_attribute) else {
                continue;
            };
            let target = Target {
                frame,
                index,
                uid: ann.uid.clone(),
                object_uid: ann.object_uid.clone(),
                sensor: ann.sensor.clone(),
            };
            let side = side.canonical();
            let bucket = groups
                .entry((frame, ann.sensor.clone(), ann.object_uid.clone()))
                .or_default();
            if side == rail.left_value {
                bucket.0.push(target);
            } else if side == rail.right_value {
                bucket.1.push(target);
            }
        }
    }
    groups
        .into_iter()
        .filter_map(|((frame, sensor, object_uid), (left, right))| {
            let ([left], [right]) = (left.as_slice(), right.as_slice()) else {
                return None;
            };
            Some(RailPair {
                frame,
                sensor,
                object_uid,
                left: left.clone(),
                right: right.clone(),
            })
        })
        .collect()
}

fn allows_pair(target: &FaultTarget, pair: &RailPair) -> bool {
    match target {
        FaultTarget::Random => true,
        FaultTarget::Annotation {
            frame_index,
            annotation_uid,
        } => {
            *frame_index == pair.frame
                && (annotation_uid == &pair.left.uid || annotation_uid == &pair.right.uid)
        }
        FaultTarget::Object { object_uid } => object_uid == &pair.object_uid,
    }
}

/// Applies the mutation for `spec.issue_type` to a copy of the scene.
///
/// The scene is expected to be clean under the default configuration; the
/// returned [`ExpectedIssue`] then describes the one place the matching
/// detector must fire.
pub fn inject_fault(
    scene: &Scene,
    spec: &FaultSpec,
    seed: u64,
) -> Result<(Scene, ExpectedIssue), InjectError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = default_config();
    let kind = spec.issue_type;

    match kind {
        IssueType::MissingAttribute => {
            // Deleting the track id from one rail; a sibling rail keeps the
            // ego evidence alive for that frame and sensor.
            let mut evidence: BTreeMap<(u64, &str), u32> = BTreeMap::new();
            for (frame, ann) in scene.annotations() {
                if is_ego_evidence(scene, ann, &config.ego) {
                    *evidence.entry((frame, ann.sensor.as_str())).or_default() += 1;
                }
            }
            let candidates = annotation_targets(scene, |frame, ann| {
                scene.class_of(ann) == config.ego.track_class
                    && ann.attributes.contains_key(&config.ego.track_id_attribute)
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
                    && !(is_ego_evidence(scene, ann, &config.ego)
                        && evidence[&(frame, ann.sensor.as_str())] == 1)
            });
            let target = pick(candidates, kind, &mut rng, "no rail with a deletable track id")?;
            let mut out = scene.clone();
            annotation_mut(&mut out, &target)
                .attributes
                .remove(&config.ego.track_id_attribute);
            let expected = target.expected(kind);
            Ok((out, expected))
        }

        IssueType::UnexpectedAttribute => {
            let candidates = annotation_targets(scene, |frame, ann| {
                scene.class_of(ann) == "person"
                    && !ann.attributes.contains_key("Species")
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
            });
            let target = pick(candidates, kind, &mut rng, "no person annotation to decorate")?;
            let mut out = scene.clone();
            annotation_mut(&mut out, &target)
                .attributes
                .insert("Species".into(), AttrValue::Text("deer".into()));
            let expected = target.expected(kind);
            Ok((out, expected))
        }

        IssueType::InconsistentAttributeScope => {
            // Flip a pole's Type in one annotation to another allowed value;
            // the object's remaining annotations now disagree.
            let allowed: Vec<String> = config
                .class_schemas
                .get("catenary_pole")
                .and_then(|schema| schema.specs().find(|s| s.name == "Type").cloned())
                .and_then(|spec| spec.allowed_values)
                .map(|set| set.into_iter().collect())
                .unwrap_or_default();
            let mut carriers: BTreeMap<&str, u32> = BTreeMap::new();
            for (_, ann) in scene.annotations() {
                if scene.class_of(ann) == "catenary_pole" && ann.attributes.contains_key("Type") {
                    *carriers.entry(ann.object_uid.as_str()).or_default() += 1;
                }
            }
            let candidates = annotation_targets(scene, |frame, ann| {
                ann.attributes.contains_key("Type")
                    && carriers.get(ann.object_uid.as_str()).copied().unwrap_or(0) >= 2
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
            });
            let target = pick(
                candidates,
                kind,
                &mut rng,
                "no pole seen by two sensors or frames",
            )?;
            let mut out = scene.clone();
            let ann = annotation_mut(&mut out, &target);
            let current = ann.attributes["Type"].canonical();
            let flipped = allowed
                .iter()
                .find(|v| **v != current)
                .ok_or_else(|| no_target(kind, "the Type vocabulary has no second value"))?;
            ann.attributes
                .insert("Type".into(), AttrValue::Text(flipped.clone()));
            Ok((
                out,
                ExpectedIssue {
                    issue_type: kind,
                    frame_index: None, // object-wide scope: the issue carries no frame
                    sensor: None,
                    object_uid: Some(target.object_uid),
                    annotation_uid: None,
                },
            ))
        }

        IssueType::DimensionInvalid => {
            let candidates = annotation_targets(scene, |frame, ann| {
                matches!(ann.geometry, Geometry::Cuboid3D { .. })
                    && scene.class_of(ann) == "person"
                    && scene.modality_of(ann) == Modality::Lidar
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
            });
            let target = pick(candidates, kind, &mut rng, "no person cuboid in a lidar")?;
            let mut out = scene.clone();
            if let Geometry::Cuboid3D { size, .. } = &mut annotation_mut(&mut out, &target).geometry
            {
                size[2] = 3.2;
            }
            let expected = target.expected(kind);
            Ok((out, expected))
        }

        IssueType::AnnotationAboveHorizon => {
            // Move the far end of a rail 50 px onto the sky side. The near
            // end stays put, so the rail-order comparison row is untouched.
            let candidates = annotation_targets(scene, |frame, ann| {
                let Geometry::Poly2D { points, .. } = &ann.geometry else {
                    return false;
                };
                let span = points.iter().map(|p| p[1]).fold(f64::NAN, f64::max)
                    - points.iter().map(|p| p[1]).fold(f64::NAN, f64::min);
                config.horizon.checked_classes.contains(scene.class_of(ann))
                    && span > 0.0
                    && scene
                        .sensors
                        .get(&ann.sensor)
                        .is_some_and(|s| {
                            s.modality == Modality::Camera
                                && s.intrinsics.is_some()
                                && s.pose.is_some()
                        })
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
            });
            let target = pick(candidates, kind, &mut rng, "no calibrated camera rail")?;
            let sensor = &scene.sensors[&target.sensor];
            let line = horizon_line(
                sensor.intrinsics.as_ref().expect("candidate is calibrated"),
                sensor.pose.as_ref().expect("candidate is posed"),
                &config.horizon,
            )
            .map_err(|e| no_target(kind, &e.to_string()))?;
            let mut out = scene.clone();
            if let Geometry::Poly2D { points, .. } = &mut annotation_mut(&mut out, &target).geometry
            {
                let far = points
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1[1].total_cmp(&b.1[1]))
                    .map(|(i, _)| i)
                    .expect("candidate has points");
                let u = points[far][0];
                points[far][1] = (50.0 - line.a * u - line.c) / line.b;
            }
            let expected = target.expected(kind);
            Ok((out, expected))
        }

        IssueType::MissingEgoTrack => {
            // Relabel the ego track's object class. Its annotations drop out
            // of every track rule at once, so the only issues are the
            // ego-track failures (plus an unknown-class warning).
            let mut ego_objects: Vec<String> = Vec::new();
            for (_, ann) in scene.annotations() {
                if is_ego_evidence(scene, ann, &config.ego)
                    && !ego_objects.contains(&ann.object_uid)
                {
                    ego_objects.push(ann.object_uid.clone());
                }
            }
            ego_objects.sort();
            let candidates: Vec<String> = ego_objects
                .into_iter()
                .filter(|uid| match &spec.target {
                    FaultTarget::Random => true,
                    FaultTarget::Object { object_uid } => object_uid == uid,
                    FaultTarget::Annotation { .. } => false,
                })
                .collect();
            let object_uid = pick(candidates, kind, &mut rng, "no ego track to relabel")?;
            let mut out = scene.clone();
            out.objects
                .get_mut(&object_uid)
                .expect("ego object is declared")
                .class_name = "vegetation".into();
            let first_frame = out.frames.keys().next().copied();
            Ok((
                out,
                ExpectedIssue {
                    issue_type: kind,
                    frame_index: first_frame,
                    sensor: config.ego.required_sensors.first().cloned(),
                    object_uid: None, // the report names no object: none qualifies
                    annotation_uid: None,
                },
            ))
        }

        IssueType::RailSideCount => {
            let pairs: Vec<RailPair> = rail_pairs(scene)
                .into_iter()
                .filter(|p| allows_pair(&spec.target, p))
                .collect();
            let pair = pick(pairs, kind, &mut rng, "no track with exactly one rail per side")?;
            let mut out = scene.clone();
            let mut duplicate = out.frames[&pair.frame].annotations[pair.left.index].clone();
            duplicate.uid.push_str("_dup");
            while out.frames[&pair.frame]
                .annotations
                .iter()
                .any(|a| a.uid == duplicate.uid)
            {
                duplicate.uid.push_str("_dup");
            }
            out.frames
                .get_mut(&pair.frame)
                .expect("pair frame exists")
                .annotations
                .push(duplicate);
            Ok((
                out,
                ExpectedIssue {
                    issue_type: kind,
                    frame_index: Some(pair.frame),
                    sensor: Some(pair.sensor),
                    object_uid: Some(pair.object_uid),
                    annotation_uid: None, // the issue names the group, not one rail
                },
            ))
        }

        IssueType::RailSideOrder => {
            let pairs: Vec<RailPair> = rail_pairs(scene)
                .into_iter()
                .filter(|p| allows_pair(&spec.target, p))
                .collect();
            let pair = pick(pairs, kind, &mut rng, "no track with exactly one rail per side")?;
            let mut out = scene.clone();
            let attribute = default_config().rail.rail_side_attribute;
            let left_value = annotation_mut(&mut out, &pair.left).attributes[&attribute].clone();
            let right_value = annotation_mut(&mut out, &pair.right).attributes[&attribute].clone();
            annotation_mut(&mut out, &pair.left)
                .attributes
                .insert(attribute.clone(), right_value);
            annotation_mut(&mut out, &pair.right)
                .attributes
                .insert(attribute, left_value);
            Ok((
                out,
                ExpectedIssue {
                    issue_type: kind,
                    frame_index: Some(pair.frame),
                    sensor: Some(pair.sensor),
                    object_uid: Some(pair.object_uid),
                    annotation_uid: None,
                },
            ))
        }

        IssueType::TransitionIdenticalStartAndEnd => {
            let transition = &config.transition;
            let candidates = annotation_targets(scene, |frame, ann| {
                scene.class_of(ann) == transition.transition_class
                    && ann.attributes.contains_key(&transition.from_attribute)
                    && ann.attributes.contains_key(&transition.to_attribute)
                    && allows_annotation(&spec.target, frame, &ann.uid, &ann.object_uid)
            });
            let target = pick(candidates, kind, &mut rng, "no transition annotation")?;
            let mut out = scene.clone();
            let ann = annotation_mut(&mut out, &target);
            let from = ann.attributes[&transition.from_attribute].clone();
            ann.attributes.insert(transition.to_attribute.clone(), from);
            let expected = target.expected(kind);
            Ok((out, expected))
        }
    }
}

/// Injects one fault of every issue type into one scene.
///
/// Targets are partitioned up front so the nine mutations cannot mask each
/// other (in particular, the ego-track relabel is applied last and only to
/// the ego track, which no other mutation touches). Requires a generated
/// scene with at least 2 frames, 2 tracks, 1 person, 1 pole and the lidar.
pub fn inject_all_faults(
    scene: &Scene,
    seed: u64,
) -> Result<(Scene, Vec<ExpectedIssue>), InjectError> {
    let config = default_config();
    let mut frames = scene.frames.keys().copied();
    let (Some(f0), Some(f1)) = (frames.next(), frames.next()) else {
        return Err(no_target(
            IssueType::RailSideCount,
            "stacking all nine faults needs at least two frames",
        ));
    };
    let camera = config
        .ego
        .required_sensors
        .first()
        .cloned()
        .unwrap_or_default();

    // A non-ego track pair in the first camera: three of the mutations live
    // on it, the side-count duplicate on its second-frame twin.
    let pair = rail_pairs(scene)
        .into_iter()
        .find(|p| {
            p.frame == f0 && p.sensor == camera && {
                let ann = &scene.frames[&p.frame].annotations[p.left.index];
                !is_ego_evidence(scene, ann, &config.ego)
            }
        })
        .ok_or_else(|| {
            no_target(
                IssueType::RailSideOrder,
                "stacking all nine faults needs a non-ego track in the first camera",
            )
        })?;

    let person_bbox = scene.frames[&f0]
        .annotations
        .iter()
        .find(|a| scene.class_of(a) == "person" && matches!(a.geometry, Geometry::Bbox2D { .. }))
        .map(|a| a.uid.clone())
        .ok_or_else(|| no_target(IssueType::UnexpectedAttribute, "no person bbox in frame 1"))?;

    let at = |frame_index: u64, annotation_uid: &str| FaultTarget::Annotation {
        frame_index,
        annotation_uid: annotation_uid.to_string(),
    };

    let plan = [
        FaultSpec {
            issue_type: IssueType::MissingAttribute,
            target: at(f0, &pair.left.uid),
        },
        FaultSpec {
            issue_type: IssueType::AnnotationAboveHorizon,
            target: at(f0, &pair.right.uid),
        },
        FaultSpec {
            issue_type: IssueType::RailSideOrder,
            target: at(f0, &pair.left.uid),
        },
        FaultSpec {
            issue_type: IssueType::RailSideCount,
            target: at(f1, &pair.left.uid),
        },
        FaultSpec {
            issue_type: IssueType::UnexpectedAttribute,
            target: at(f0, &person_bbox),
        },
        FaultSpec::random(IssueType::DimensionInvalid),
        FaultSpec::random(IssueType::InconsistentAttributeScope),
        FaultSpec::random(IssueType::TransitionIdenticalStartAndEnd),
        FaultSpec::random(IssueType::MissingEgoTrack),
    ];

    let mut current = scene.clone();
    let mut expected = Vec::with_capacity(plan.len());
    for spec in &plan {
        let (next, exp) = inject_fault(&current, spec, seed)?;
        current = next;
        expected.push(exp);
    }
    Ok((current, expected))
}

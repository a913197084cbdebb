//! Skeletons, body-part placement and figure scenes.

mod place;
mod scene;
mod skeleton;

use thiserror::Error;

use crate::mesh::BodyPart;
use crate::sdf::SdfError;

pub use place::{assemble_figure, default_specs, place_part, quaternion_matrix, shortest_arc, BodyPartSpec, MaskSize};
pub use scene::{load_scene, save_scene, scene_distance, FigureScene, PartEntry, PlacedPart, SceneFile, TextureEntry};
pub use skeleton::{
    derive_extended_joints, joint_index, mirror_joint_name, Skeleton, CANONICAL_HEIGHT, JOINT_NAMES, JOINT_PARENTS, PELVIS,
};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("joint '{0}' is missing")]
    MissingJoint(String),
    #[error("unknown joint '{0}'")]
    UnknownJoint(String),
    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),
    #[error("invalid spec for {part}: {msg}")]
    InvalidSpec { part: BodyPart, msg: String },
    #[error("anchors of {0} coincide")]
    DegenerateBone(BodyPart),
    #[error("torso frame axes are collinear")]
    DegenerateFrame,
    #[error("no grid for body part {0}")]
    MissingPart(BodyPart),
    #[error("duplicate body part {0}")]
    DuplicatePart(BodyPart),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Grid(#[from] SdfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

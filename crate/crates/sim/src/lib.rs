//! A deterministic 2D vine-unveiling simulator.
//!
//! A [`Scene`] holds one grape with its stem and a few spring-loaded leaves
//! hinged above it, at least one of which hides the stem at rest. Scenes are
//! generated from a seed, rendered flat-shaded to RGB, and driven by a disc
//! gripper that follows a pixel trajectory: leaves pivot the least amount
//! needed to clear the gripper and spring back to rest when released. An
//! execution succeeds when, with the gripper parked at the final point, at
//! most a threshold fraction of the stem is still covered.
//!
//! All coordinates live in the scene's canonical pixel frame (640×480 by
//! default); [`render`] rescales to any output size.

pub mod color;
mod execute;
pub mod geometry;
mod oracle;
mod render;
mod scene;

use thiserror::Error;

pub use execute::{execute, ExecuteConfig, ExecutionReport};
pub use oracle::{oracle_demo, OracleConfig, ORACLE_POINTS};
pub use render::{render, Palette};
pub use scene::{
    generate_scene, occlusion_fraction, Background, Leaf, Range, Scene, SceneConfig, STEM_SAMPLES,
};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("could not satisfy scene invariants after {0} attempts")]
    ExhaustedAttempts(usize),
    #[error("trajectory point {index} ({x:.2}, {y:.2}) lies outside the {width}×{height} frame")]
    OutOfBounds {
        index: usize,
        x: f64,
        y: f64,
        width: u32,
        height: u32,
    },
    #[error("scene has no leaf covering the stem")]
    NoOccludingLeaf,
    #[error("scripted demonstration failed on all {0} jitters")]
    OracleFailed(usize),
    #[error("trajectory must be in image pixels")]
    WrongFrame,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed scene record: {0}")]
    Json(String),
}

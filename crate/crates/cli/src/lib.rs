//! Dataset generation, training, evaluation and prediction commands, and the
//! HTTP service behind the demonstration studio.
//!
//! A dataset directory holds `manifest.json`, `images/<id>.png`,
//! `trajs/<id>.json`, `scenes/<id>.json` and `aug_config.json`. Trajectories
//! are stored in the pixels of their image; scenes keep the simulator frame.

pub mod commands;
pub mod dataset;
pub mod generate;
pub mod server;

use thiserror::Error;

/// A failure caused by the caller's input rather than by the program. The
/// binary exits with status 1 for these and 2 for everything else.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UserError(pub String);

/// Exit status for an error chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<UserError>()) {
        1
    } else {
        2
    }
}

//! Harness around the alignment library: file formats, experiment sweeps,
//! summary statistics, and plot rendering. The binary in `main.rs` is a thin
//! argument-parsing layer over these modules.

use std::fmt;

pub mod io;
pub mod plot;
pub mod stats;
pub mod sweep;

/// A problem with user-supplied input (flags, config files, data files), as
/// opposed to a runtime failure. Input problems exit with status 2, runtime
/// failures with status 1.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn validation<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(anyhow::Error::new(ValidationError(message.into())))
}

///// Exit status for a failed run: 2 when the cause chain bottoms out in bad
/// input (including model validation errors from the core library), 1 for
/// everything else.
pub fn exit_code(error: &anyhow::Error) -> i32 {
    for cause in error.chain() {
        if cause.is::<ValidationError>() || cause.is::<dbalign_core::Error>() {
            return 2;
        }
    }
    1
}

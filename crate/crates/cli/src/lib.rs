//! File formats, the property suite and the command implementations behind
//! the `psdcone` binary.

pub mod commands;
pub mod format;
pub mod suite;

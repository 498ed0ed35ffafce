//! Problem-file parsing, report emission, and command implementations
//! behind the `fullstab` binary.

pub mod commands;
pub mod parse;
pub mod report;

//! File formats, configuration, reference oracles and the command-line
//! front end for `tiltgait-core`.

pub mod cli;
pub mod config;
pub mod lemmas;
pub mod oracle;
pub mod output;

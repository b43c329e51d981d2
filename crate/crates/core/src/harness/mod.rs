//! Run directories, oracle and verification suites, and reports behind the
//! command-line tool.

pub mod commands;
pub mod oracle;
pub mod report;
pub mod run;
pub mod verify;

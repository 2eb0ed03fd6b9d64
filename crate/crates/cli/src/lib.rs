//! Command implementations behind the `snakenav` binary.

pub mod bench;
pub mod commands;
pub mod config;

use snakenav_core::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const RUNTIME: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
}

/// Exit code for an error surfaced by a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidParam { .. }
        | Error::GridFormat(_)
        | Error::Checkpoint(_)
        | Error::Io(_)
        | Error::Dimension { .. } => exit::USAGE,
        Error::BlockedEndpoint(..) | Error::Unreachable | Error::InfeasibleSpacing { .. } => exit::INFEASIBLE,
        Error::SingularMassMatrix | Error::NonFinite(_) | Error::Diverged(_) | Error::Csv(_) | Error::Json(_) => exit::RUNTIME,
    }
}

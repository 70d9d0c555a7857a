use std::fmt;

use kpos_core::Error;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailKind {
    Usage,
    Input,
    Solver,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailKind,
    pub message: String,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { kind: FailKind::Usage, message: msg.into() }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Failure { kind: FailKind::Input, message: msg.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailKind::Usage | FailKind::Input => 1,
            FailKind::Solver => 2,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self.kind {
            FailKind::Usage => "usage",
            FailKind::Input => "input",
            FailKind::Solver => "solver",
        };
        json!({ "error": { "kind": kind, "message": self.message } })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match e {
            Error::Solver { .. } => FailKind::Solver,
            _ => FailKind::Input,
        };
        Failure { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, Failure>;

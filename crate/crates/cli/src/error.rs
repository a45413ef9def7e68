use std::fmt::Display;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    MissingInput,
    Input,
    Runtime,
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Display) -> Self {
        CliError {
            kind,
            message: message.to_string(),
            path: None,
        }
    }

    pub fn usage(message: impl Display) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn input(message: impl Display) -> Self {
        Self::new(ErrorKind::Input, message)
    }

    pub fn runtime(message: impl Display) -> Self {
        Self::new(ErrorKind::Runtime, message)
    }

    pub fn missing(path: &Path) -> Self {
        CliError {
            kind: ErrorKind::MissingInput,
            message: format!("input file not found: {}", path.display()),
            path: Some(path.display().to_string()),
        }
    }

    pub fn write(path: &Path, err: impl Display) -> Self {
        CliError {
            kind: ErrorKind::Runtime,
            message: format!("cannot write {}: {err}", path.display()),
            path: Some(path.display().to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage | ErrorKind::MissingInput => 2,
            ErrorKind::Input | ErrorKind::Runtime => 1,
        }
    }

    /// One line of JSON.
    pub fn to_line(&self) -> String {
        let mut e = serde_json::to_value(self).expect("error serializes");
        if let Some(m) = e.get_mut("message") {
            *m = m.as_str().unwrap_or_default().split_whitespace().collect::<Vec<_>>().join(" ").into();
        }
        e.to_string()
    }
}

pub type CliResult<T> = Result<T, CliError>;

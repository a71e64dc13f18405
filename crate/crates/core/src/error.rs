use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid object spec `{id}`: {reason}")]
    InvalidSpec { id: String, reason: String },

    #[error("object `{id}` exceeds the apparatus limit: {reason}")]
    ApparatusLimit { id: String, reason: String },

    #[error("object `{id}`: shape `{shape}` is not supported by {experiment}")]
    UnsupportedShape {
        id: String,
        shape: String,
        experiment: &'static str,
    },

    #[error("{0}: input is empty")]
    EmptyInput(&'static str),

    #[error("no plane found: every sampled point triple was degenerate")]
    NoPlaneFound,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A field failed a schema or invariant check. `path` is a JSON-pointer
    /// style location such as `/classes/2/marginals/rigidity`.
    #[error("{}: validation failed at `{path}`: {constraint}", source_name.display())]
    Validation {
        source_name: PathBuf,
        path: String,
        constraint: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("class `{0}` has no instances")]
    EmptyClass(String),

    #[error("neighbor graph is disconnected ({components} components); pass bridge_components to join them")]
    DisconnectedManifold { components: usize },

    #[error("sizing error: {0}")]
    Sizing(String),

    #[error("class `{name}` not found; known classes: {}", known.join(", "))]
    NotFound { name: String, known: Vec<String> },

    #[error("instance `{id}`: {source}")]
    Instance {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// Process exit status classes surfaced by the command-line front end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Validation => 1,
            ErrorClass::Io => 2,
            ErrorClass::Numeric => 3,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(
        source_name: impl Into<PathBuf>,
        path: impl Into<String>,
        constraint: impl Into<String>,
    ) -> Self {
        Error::Validation {
            source_name: source_name.into(),
            path: path.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn in_instance(self, id: &str) -> Self {
        Error::Instance {
            id: id.to_owned(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidSpec { .. }
            | Error::UnsupportedShape { .. }
            | Error::Validation { .. }
            | Error::NotFound { .. }
            | Error::EmptyClass(_)
            | Error::InvalidGeometry(_)
            | Error::ApparatusLimit { .. }
            | Error::EmptyInput(_) => ErrorClass::Validation,
            Error::Io { .. } | Error::Csv { .. } => ErrorClass::Io,
            Error::NoPlaneFound
            | Error::InsufficientData(_)
            | Error::DisconnectedManifold { .. }
            | Error::Sizing(_) => ErrorClass::Numeric,
            Error::Instance { source, .. } => source.class(),
        }
    }
}

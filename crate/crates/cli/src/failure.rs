use std::fmt;
use std::path::Path;

/// Exit code for I/O failures.
pub const EXIT_IO: i32 = 1;
/// Exit code for malformed or out-of-range input.
pub const EXIT_INVALID: i32 = 2;
/// Exit code for an index past the end of a list.
pub const EXIT_INDEX: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<spotgeom::Error> for Failure {
    fn from(e: spotgeom::Error) -> Self {
        let code = match e {
            spotgeom::Error::Io(_) => EXIT_IO,
            _ => EXIT_INVALID,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_IO, e.to_string())
    }
}

impl From<image::ImageError> for Failure {
    fn from(e: image::ImageError) -> Self {
        spotgeom::Error::from(e).into()
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

/// Prefixes failures with the file they concern.
pub trait AtPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<Failure>> AtPath<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let f = e.into();
            Failure::new(f.code, format!("{}: {}", path.display(), f.message))
        })
    }
}

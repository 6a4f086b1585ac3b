use std::fmt;

use sarprior_core::Error as CoreError;

/// Failure class, mapped one-to-one onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Io,
    Geometry,
    Fusion,
}

impl Category {
    pub fn exit_code(self) -> u8 {
        match self {
            Self::Config => 2,
            Self::Io => 3,
            Self::Geometry => 4,
            Self::Fusion => 5,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Config => "config",
            Self::Io => "io",
            Self::Geometry => "geometry",
            Self::Fusion => "fusion",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub category: Category,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(category: Category, error: impl Into<anyhow::Error>) -> Self {
        Self {
            category,
            error: error.into(),
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Self::new(Category::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn io(msg: impl fmt::Display) -> Self {
        Self::new(Category::Io, anyhow::anyhow!("{msg}"))
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            error: self.error.context(msg),
            ..self
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {:#}", self.category.label(), self.error)
    }
}

pub fn categorize(e: &CoreError) -> Category {
    match e {
        CoreError::Read { .. }
        | CoreError::Write { .. }
        | CoreError::MalformedMesh { .. }
        | CoreError::UnsupportedFormat(_)
        | CoreError::Image(_) => Category::Io,
        CoreError::EmptyMesh { .. } | CoreError::Geometry(_) => Category::Geometry,
        CoreError::Parameter(_) => Category::Config,
        CoreError::Dimension { .. } | CoreError::ZeroMagnitude(_) | CoreError::Weights(_) => Category::Fusion,
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        Self::new(categorize(&e), e)
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Attaches a category to foreign errors.
pub trait CategoryExt<T> {
    fn or_fail(self, category: Category) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> CategoryExt<T> for Result<T, E> {
    fn or_fail(self, category: Category) -> CliResult<T> {
        self.map_err(|e| Failure::new(category, e))
    }
}

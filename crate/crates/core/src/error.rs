use thiserror::Error;

/// Errors surfaced by law construction, spec validation and the numeric
/// routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid law: {0}")]
    InvalidLaw(String),
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no root: {0}")]
    NoRoot(String),
    /// A population count exceeded [`crate::process::POPULATION_CAP`].
    /// Counts are never silently wrapped or saturated.
    #[error("population overflow at generation {generation}")]
    Overflow { generation: usize },
    #[error("ill-conditioned numerical differentiation: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, Error>;

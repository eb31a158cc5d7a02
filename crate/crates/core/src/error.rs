use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameter: {0}")]
    InvalidMesh(String),

    #[error("mesh perturbation failed: {0}")]
    PerturbationFailed(String),

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("incompatible constraint: {0}")]
    IncompatibleConstraint(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("spaces live on different meshes")]
    MeshMismatch,

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("manufactured-solution validation failed: {0}")]
    CaseValidation(String),

    #[error("study failed at level n={level}: {source}")]
    StudyLevel {
        level: usize,
        #[source]
        source: Box<Error>,
    },
}

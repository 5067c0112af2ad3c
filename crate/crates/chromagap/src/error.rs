use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("map is not total: no image for `{0}`")]
    PartialMap(String),
    #[error("search budget of {0} nodes exceeded")]
    SearchBudgetExceeded(u64),
    #[error("enumeration budget of {0} exceeded")]
    EnumerationBudgetExceeded(u64),
    #[error("size budget exceeded: {0}")]
    SizeBudgetExceeded(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("expected a single binary symbol")]
    NotAGraphSignature,
    #[error("constraint {0} is not binary")]
    NotBinary(usize),
    #[error("subspaces live in different ambient spaces ({0} vs {1})")]
    AmbientMismatch(usize, usize),
    #[error("functional does not respect its own tuple: {0}")]
    RespectViolation(String),
    #[error("no extension exists: {0}")]
    ExtensionConflict(String),
    #[error("matrix dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("assignment keys do not match the structures: {0}")]
    KeyMismatch(String),
    #[error("verification failed: {0}")]
    VerificationFailure(String),
    #[error("instance is not bipartite projective")]
    NotBipartiteProjective,
    #[error("template is not connected")]
    NotConnected,
    #[error("template is not faithful")]
    NotFaithful,
    #[error("compatibility too low: have {have}, need {need}")]
    CompatibilityTooLow { have: usize, need: usize },
    #[error("transferred projectors disagree across the class of `{0}`")]
    WellDefinednessViolation(String),
    #[error("Sinkhorn scaling did not converge (residual {0:e})")]
    SinkhornDivergence(f64),
    #[error("spectral certification failed: {0}")]
    SpectralCertificationFailure(String),
    #[error("instance is not d-to-d: {0}")]
    NotDtoD(String),
    #[error("system is not regular for p = {0}")]
    NotRegular(usize),
    #[error("every constraint was discarded")]
    AllConstraintsDiscarded,
    #[error("variable `{0}` receives zero copies")]
    ZeroCopyCount(String),
    #[error("instance is not left-regular")]
    NotLeftRegular,
    #[error("instance is not d-to-1")]
    NotDto1,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

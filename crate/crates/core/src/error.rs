use thiserror::Error;

use crate::syslang::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("undecidable at sampled points")]
    Undecidable,
    #[error("uncovered leaf `{0}` at sample point")]
    UncoveredLeaf(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("on-shell comparison requires Kovalevskaya form")]
    MissingKovalevskaya,
    #[error("on-shell reduction exceeded its iteration bound")]
    ReductionBound,
    #[error("singular matrix")]
    SingularMatrix,
    #[error("homotopy requires polynomial jets; supply Lagrangian manually")]
    NonPolynomialHomotopy,
    #[error("system is not variational: {0}")]
    NotVariational(String),
    #[error("Kovalevskaya search failed; supply hints ({0})")]
    KovalevskayaSearch(String),
    #[error("candidate not symplectic on this symmetry")]
    NotSymplecticOnSymmetry,
    #[error("potential covering implemented for two independent variables only")]
    PotentialCoveringDimension,
    #[error("missing role: {0}")]
    MissingRole(String),
    #[error("not a symmetry: {0}")]
    NotASymmetry(String),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

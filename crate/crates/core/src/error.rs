use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("degenerate coefficient matrix: rows {0} and {1} are projectively equal")]
    DegenerateMatrix(usize, usize),
    #[error("constraint matrices are bound to different coefficient matrices")]
    CoefficientMismatch,
    #[error("invalid bound on row {0}: lower must be finite or -inf, upper finite or +inf")]
    InvalidBound(usize),
    #[error("unbounded result on row {0}")]
    UnboundedResult(usize),
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("scale must be positive")]
    NonPositiveScale,
    #[error("direction {0} is not a row of the coefficient matrix")]
    MissingRow(String),
    #[error("symmetry {0} is not compatible with the coefficient matrix")]
    NotCompatible(String),
    #[error("symmetry {0}: no single affine branch on this polytope ({1})")]
    BranchAmbiguous(String, String),
    #[error("unknown symmetry {0}")]
    UnknownSymmetry(String),
    #[error("group generated by the symmetries exceeds {0} elements")]
    GroupNotFinite(usize),
    #[error("point lies on a discontinuity")]
    OnDiscontinuity,
    #[error("point lies in no atom")]
    OnBoundary,
    #[error("unknown atom label {0}")]
    UnknownAtom(String),
    #[error("orbit left the ambient set at step {0}")]
    EscapedAmbient(usize),
    #[error("too many near-boundary points: {dropped} of {steps}")]
    BoundaryFlood { dropped: usize, steps: usize },
    #[error("cluster count never reaches a plateau")]
    NoPlateau,
    #[error("ambiguous transition from cluster {k} through atom {atom}: {detail}")]
    AmbiguousTransition { k: usize, atom: String, detail: String },
    #[error("image of cluster {k} through atom {atom} is not near any cluster")]
    UnassignedImage { k: usize, atom: String },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("delta infeasible: {0}")]
    DeltaInfeasible(String),
    #[error("singular linear system")]
    SingularSystem,
    #[error("verify does not bracket: {0}")]
    NotBracketing(String),
    #[error("pass/fail is not monotone in epsilon: {0}")]
    NonMonotone(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("parse error: {0}")]
    Parse(String),
}

use std::fmt;

use serde::Serialize;

/// Coordinates at which an evaluation failed: continuous axes plus lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Location {
    pub axes: [f64; 3],
    pub n: i64,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}; n={})",
            self.axes[0], self.axes[1], self.axes[2], self.n
        )
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("stencil-out-of-domain at {0}")]
    StencilOutOfDomain(Location),
    #[error("non-finite-sample at {0}")]
    NonFiniteSample(Location),
    #[error("empty-grid")]
    EmptyGrid,
    #[error("invalid-grid: {0}")]
    InvalidGrid(String),
    #[error("degenerate-transform: {0}")]
    DegenerateTransform(String),
    #[error("off-contour at {at}: contour defect {defect:e}")]
    OffContour { at: Location, defect: f64 },
    #[error("singular-T at {0}")]
    SingularT(Location),
    #[error("kernel-pole at {0}")]
    KernelPole(Location),
    #[error("solution-pole at {0}")]
    SolutionPole(Location),
    #[error("branch-violation at {0}")]
    BranchViolation(Location),
    #[error("out-of-chart at {0}")]
    OutOfChart(Location),
    #[error("tail-not-converged: {0}")]
    TailNotConverged(String),
    #[error("degenerate-sample at {0}")]
    DegenerateSample(Location),
    #[error("invalid-parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    /// Stable kebab-case identifier used in reports and exit diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::StencilOutOfDomain(_) => "stencil-out-of-domain",
            Error::NonFiniteSample(_) => "non-finite-sample",
            Error::EmptyGrid => "empty-grid",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::DegenerateTransform(_) => "degenerate-transform",
            Error::OffContour { .. } => "off-contour",
            Error::SingularT(_) => "singular-T",
            Error::KernelPole(_) => "kernel-pole",
            Error::SolutionPole(_) => "solution-pole",
            Error::BranchViolation(_) => "branch-violation",
            Error::OutOfChart(_) => "out-of-chart",
            Error::TailNotConverged(_) => "tail-not-converged",
            Error::DegenerateSample(_) => "degenerate-sample",
            Error::InvalidParameter { .. } => "invalid-parameter",
        }
    }

    pub fn location(&self) -> Option<Location> {
        match self {
            Error::StencilOutOfDomain(l)
            | Error::NonFiniteSample(l)
            | Error::SingularT(l)
            | Error::KernelPole(l)
            | Error::SolutionPole(l)
            | Error::BranchViolation(l)
            | Error::OutOfChart(l)
            | Error::DegenerateSample(l) => Some(*l),
            Error::OffContour { at, .. } => Some(*at),
            _ => None,
        }
    }

    /// True for the singularities of a dressed solution or kernel.
    pub fn is_pole(&self) -> bool {
        matches!(
            self,
            Error::SolutionPole(_) | Error::KernelPole(_) | Error::BranchViolation(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

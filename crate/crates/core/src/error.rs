use thiserror::Error;

use crate::lattice::Vertex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("region mismatch: {0}")]
    RegionMismatch(String),

    #[error("field magnitude {value} at {vertex:?} exceeds the supported bound 2^30")]
    FieldMagnitude { vertex: Vertex, value: f64 },

    #[error("region of {size} sites is too large for exhaustive search (limit {limit})")]
    RegionTooLarge { size: usize, limit: usize },

    #[error("invariant violated ({kind}): {detail}")]
    InvariantViolation { kind: Invariant, detail: String },
}

/// Which sample-by-sample check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    /// `sigma+ >= sigma-` pointwise.
    Coupling,
    /// Flipping a zero cluster never lowers either boundary energy.
    Stability,
    /// The cut value matches the Hamiltonian.
    CutEnergy,
    /// Disagreement on a larger box implies disagreement on a nested one.
    DomainMonotonicity,
    /// Raising the field never lowers a label.
    ShiftMonotonicity,
    /// Long common disagreement and inner concentration together.
    Exclusion,
    /// A common disagreement cluster that stops short of the boundary.
    Percolation,
    /// A finite geodesic shorter than `N/4`.
    GeodesicBound,
    /// The origin in `C_*` without the ring at `3N/16`.
    RingContainment,
    /// Anything else, such as test hooks.
    Other,
}

impl std::fmt::Display for Invariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Invariant::Coupling => "coupling",
            Invariant::Stability => "stability",
            Invariant::CutEnergy => "cut energy",
            Invariant::DomainMonotonicity => "domain monotonicity",
            Invariant::ShiftMonotonicity => "shift monotonicity",
            Invariant::Exclusion => "exclusion",
            Invariant::Percolation => "percolation",
            Invariant::GeodesicBound => "geodesic bound",
            Invariant::RingContainment => "ring containment",
            Invariant::Other => "other",
        };
        f.write_str(name)
    }
}

impl Error {
    pub fn violation(kind: Invariant, detail: impl Into<String>) -> Self {
        Error::InvariantViolation { kind, detail: detail.into() }
    }

    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::InvariantViolation { .. })
    }

    pub fn invariant(&self) -> Option<Invariant> {
        match self {
            Error::InvariantViolation { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

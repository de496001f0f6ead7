use core::fmt;

/// Errors raised by constructors and operations in this crate.
#[derive(Debug, Clone, PartialEq, Eq)]
#[non_exhaustive]
pub enum Error {
    /// Agent count is zero or exceeds [`crate::MAX_AGENTS`].
    AgentCount { n: usize },
    /// A type value is not strictly positive.
    TypeNotPositive { agent: usize },
    /// The weight on neighborhood behavior is outside `[0, 1)`.
    AlphaOutOfRange,
    /// The per-link benefit is negative.
    DeltaNegative,
    /// A parameter is not a finite number.
    NotFinite,
    /// An edge endpoint refers to a missing agent.
    EndpointOutOfRange { i: usize, j: usize, n: usize },
    /// An edge joins an agent to itself.
    SelfLoop { agent: usize },
    /// The same unordered edge appears twice.
    DuplicateEdge { i: usize, j: usize },
    /// An agent index is outside `0..n`.
    IndexOutOfRange { index: usize, n: usize },
    /// An effort profile has the wrong length.
    LengthMismatch { expected: usize, actual: usize },
    /// Instance and network disagree on the agent count.
    SizeMismatch { instance: usize, network: usize },
    /// An agent's degree exceeds [`crate::MAX_DEGREE`], so severance subsets
    /// cannot be enumerated.
    DegreeGuard { agent: usize, degree: usize },
    /// The agent count exceeds [`crate::MAX_ENUM_AGENTS`], so the network
    /// space cannot be enumerated.
    EnumerationGuard { n: usize },
    /// A pair of distinct agents was expected.
    NotAPair { i: usize, j: usize },
    /// A link was required to be absent but is present.
    LinkPresent { i: usize, j: usize },
    /// A strict type ordering between two agents was required.
    TypesNotOrdered { j: usize, k: usize },
    /// A horizon or round budget of zero was supplied.
    EmptyBudget,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Error::AgentCount { n } => {
                write!(f, "agent count {n} outside 1..={}", crate::MAX_AGENTS)
            }
            Error::TypeNotPositive { agent } => {
                write!(f, "type of agent {agent} must be strictly positive")
            }
            Error::AlphaOutOfRange => write!(f, "alpha must lie in [0, 1)"),
            Error::DeltaNegative => write!(f, "delta must be nonnegative"),
            Error::NotFinite => write!(f, "parameters must be finite numbers"),
            Error::EndpointOutOfRange { i, j, n } => {
                write!(f, "edge ({i}, {j}) has an endpoint outside 0..{n}")
            }
            Error::SelfLoop { agent } => write!(f, "self-loop at agent {agent}"),
            Error::DuplicateEdge { i, j } => write!(f, "duplicate edge ({i}, {j})"),
            Error::IndexOutOfRange { index, n } => {
                write!(f, "agent index {index} outside 0..{n}")
            }
            Error::LengthMismatch { expected, actual } => {
                write!(f, "effort profile has length {actual}, expected {expected}")
            }
            Error::SizeMismatch { instance, network } => {
                write!(
                    f,
                    "instance has {instance} agents but network has {network}"
                )
            }
            Error::DegreeGuard { agent, degree } => {
                write!(
                    f,
                    "agent {agent} has degree {degree}, above the enumeration cap {}",
                    crate::MAX_DEGREE
                )
            }
            Error::EnumerationGuard { n } => {
                write!(
                    f,
                    "network enumeration requires n <= {}, got {n}",
                    crate::MAX_ENUM_AGENTS
                )
            }
            Error::NotAPair { i, j } => write!(f, "({i}, {j}) is not a pair of distinct agents"),
            Error::LinkPresent { i, j } => write!(f, "link ({i}, {j}) is already present"),
            Error::TypesNotOrdered { j, k } => {
                write!(f, "agent {k} must have a strictly higher type than agent {j}")
            }
            Error::EmptyBudget => write!(f, "horizon or round budget must be at least 1"),
        }
    }
}

impl core::error::Error for Error {}

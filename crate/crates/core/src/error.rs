use thiserror::Error;

use crate::fixtures::{Format, MatchType, TeamId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pot rating must be in 1..=4, got {0}")]
    InvalidPot(u8),

    #[error("{format} format has no {match_type} match")]
    NoSuchType {
        format: Format,
        match_type: MatchType,
    },

    #[error("rank cutoff {cutoff} outside 1..={field_size} for the {format} format")]
    InvalidCutoff {
        format: Format,
        cutoff: usize,
        field_size: usize,
    },

    #[error("rank cutoff {cutoff} outside 1..={field_size}")]
    CutoffOutOfRange { cutoff: usize, field_size: usize },

    #[error("replication count must be positive")]
    NoReplications,

    #[error("expected {expected} teams, got {got}")]
    WrongTeamCount { expected: usize, got: usize },

    #[error("team {0} appears in more than one table row")]
    DuplicateTeam(TeamId),

    #[error("match references unknown team {0}")]
    UnknownTeam(TeamId),

    #[error("fixture pits team {0} against itself")]
    SelfFixture(TeamId),

    #[error("expected {expected} matches among the ranked teams, got {got}")]
    MissingMatches { expected: usize, got: usize },

    #[error(
        "degenerate denominator: p_draw - p_loss = {gap:.6} is within {factor} standard errors ({stderr:.6})"
    )]
    DegenerateDenominator { gap: f64, stderr: f64, factor: f64 },

    #[error("uplift table is incomplete: {0}")]
    IncompleteTable(String),

    #[error("enumeration needs {needed} outcomes, limit is {limit}")]
    EnumerationTooLarge { needed: u128, limit: u128 },

    #[error("mini format: {0}")]
    InvalidMini(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Monte Carlo estimation of the incentive to attack in round-robin football
//! tournaments.
//!
//! A focal match is fixed at 1-0, 0-0 or 0-1 while every other match is
//! simulated from a Poisson goal model; the change in the probability of
//! finishing above a prize threshold gives the expected payoff of attacking,
//!
//! ```text
//! I = (p_win - p_draw) / (p_draw - p_loss).
//! ```
//!
//! Two designs are modelled: the four-team double round-robin group of the
//! old Champions League and the 36-team incomplete round-robin league phase
//! that replaced it.
//!
//! ```
//! use incentive_core::{run_scenario, EngineOptions, Format, MatchType, Perspective, Scenario, ThresholdSpec};
//!
//! let scenario = Scenario {
//!     match_type: "1-2".parse().unwrap(),
//!     perspective: Perspective::Home,
//!     threshold: ThresholdSpec::new(Format::Group, 2).unwrap(),
//!     replications: 20_000,
//!     master_seed: 1,
//! };
//! let result = run_scenario(&scenario, &EngineOptions::default()).unwrap();
//! assert!(result.probs.p_win > result.probs.p_draw);
//! ```

pub mod engine;
pub mod error;
pub mod fixtures;
pub mod goal_model;
pub mod oracle;
pub mod rng;
pub mod standings;

pub use engine::{
    aggregate_uplift, run_batches, run_cell, run_figure2, run_scenario, simulate_focal, CellResult,
    EngineOptions, FocalBatch, IncentiveResult, OutcomeCounts, PairedStats, Perspective,
    ProbTriple, Scenario, ThresholdSpec, Uplift, UpliftCell, CONDITIONING, DEFAULT_REPLICATIONS,
};
pub use error::{Error, Result};
pub use fixtures::{
    focal_fixture, group_fixtures, league_fixtures, Fixture, Format, MatchType, TeamId, TieRule,
    Tournament,
};
pub use goal_model::{
    lambda_away, lambda_home, sample_scoreline, score_pmf, GoalModel, GoalModelParams, PotRating,
    Scoreline,
};
pub use oracle::{
    check_case, exact_prob_triple, exact_report, reference_cases, ExactReport, MiniFormat,
    OracleCase, OracleCheck,
};
pub use rng::StreamKey;
pub use standings::{
    accumulate, rank_by_league_chain, rank_group, rank_head_to_head, rank_league, PointsSystem,
    Ranking, ScoredMatch, TableRow,
};

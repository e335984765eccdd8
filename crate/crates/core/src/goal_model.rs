//! Independent Poisson goal model driven by seeding pots.
//!
//! A team is represented only by the pot it was drawn from. The expected
//! number of goals for each side depends on the pot gap and on the venue:
//!
//! ```text
//! log(lambda_home) = alpha_home + beta_home * (R_home - R_away)
//! log(lambda_away) = alpha_away + beta_away * (R_away - R_home)
//! ```
//!
//! The fitted coefficients were estimated on group matches only, which never
//! pair two teams from the same pot. Same-pot matches in the league phase use
//! the same formula with a zero gap, i.e. the model is extrapolated to them.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeding pot of a team, 1 (strongest) to 4 (weakest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PotRating(u8);

impl PotRating {
    pub const ALL: [PotRating; 4] = [PotRating(1), PotRating(2), PotRating(3), PotRating(4)];

    pub fn new(pot: u8) -> Result<Self> {
        if (1..=4).contains(&pot) {
            Ok(PotRating(pot))
        } else {
            Err(Error::InvalidPot(pot))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based index, handy for lookup tables.
    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }
}

impl TryFrom<u8> for PotRating {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        PotRating::new(value)
    }
}

impl From<PotRating> for u8 {
    fn from(value: PotRating) -> u8 {
        value.0
    }
}

impl fmt::Display for PotRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Coefficients of the four-parameter seeding model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalModelParams {
    pub alpha_home: f64,
    pub beta_home: f64,
    pub alpha_away: f64,
    pub beta_away: f64,
}

impl GoalModelParams {
    /// Maximum-likelihood fit on 1632 Champions League group matches
    /// (2003/04 to 2019/20).
    pub const FITTED: GoalModelParams = GoalModelParams {
        alpha_home: 0.4242,
        beta_home: -0.1693,
        alpha_away: 0.1080,
        beta_away: -0.1746,
    };
}

impl Default for GoalModelParams {
    fn default() -> Self {
        Self::FITTED
    }
}

/// Final score of one match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Scoreline {
    pub home_goals: u32,
    pub away_goals: u32,
}

impl Scoreline {
    pub const fn new(home_goals: u32, away_goals: u32) -> Self {
        Scoreline {
            home_goals,
            away_goals,
        }
    }
}

impl fmt::Display for Scoreline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.home_goals, self.away_goals)
    }
}

fn gap(own: PotRating, opponent: PotRating) -> f64 {
    f64::from(own.get()) - f64::from(opponent.get())
}

/// Expected goals of the home side.
pub fn lambda_home(params: &GoalModelParams, home: PotRating, away: PotRating) -> f64 {
    (params.alpha_home + params.beta_home * gap(home, away)).exp()
}

/// Expected goals of the away side.
pub fn lambda_away(params: &GoalModelParams, home: PotRating, away: PotRating) -> f64 {
    (params.alpha_away + params.beta_away * gap(away, home)).exp()
}

/// Poisson probability of exactly `m` goals at intensity `lambda`.
pub fn score_pmf(lambda: f64, m: u32) -> f64 {
    // log-space keeps large m from overflowing the factorial
    let log_fact: f64 = (1..=m).map(|k| f64::from(k).ln()).sum();
    (f64::from(m) * lambda.ln() - lambda - log_fact).exp()
}

/// Draws one Poisson variate by sequential-search inversion from zero.
///
/// Intensities in this model never exceed ~2.54, so the expected number of
/// loop iterations is below four.
pub fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut term = (-lambda).exp();
    let mut cdf = term;
    let mut m = 0u32;
    while u >= cdf {
        m += 1;
        term *= lambda / f64::from(m);
        let next = cdf + term;
        if next == cdf {
            // remaining tail is below double resolution
            return m - 1;
        }
        cdf = next;
    }
    m
}

/// Samples a scoreline directly from the parameters, without precomputed
/// tables. [`GoalModel::sample_scoreline`] is the fast path.
pub fn sample_scoreline<R: Rng + ?Sized>(
    params: &GoalModelParams,
    home: PotRating,
    away: PotRating,
    rng: &mut R,
) -> Scoreline {
    let home_goals = sample_poisson(lambda_home(params, home, away), rng);
    let away_goals = sample_poisson(lambda_away(params, home, away), rng);
    Scoreline {
        home_goals,
        away_goals,
    }
}

/// Cumulative distribution over goal counts for inversion sampling.
#[derive(Debug, Clone)]
struct CdfTable {
    cdf: Vec<f64>,
}

impl CdfTable {
    fn poisson(lambda: f64) -> Self {
        let mut cdf = Vec::with_capacity(32);
        let mut term = (-lambda).exp();
        let mut acc = term;
        cdf.push(acc);
        let mut m = 0u32;
        loop {
            m += 1;
            term *= lambda / f64::from(m);
            let next = acc + term;
            if next == acc {
                break;
            }
            acc = next;
            cdf.push(acc);
        }
        // Mirrors `sample_poisson`: a uniform beyond the representable tail
        // lands on the last count.
        *cdf.last_mut().unwrap() = f64::INFINITY;
        CdfTable { cdf }
    }

    /// Poisson restricted to 0..=cap and renormalised.
    fn truncated(lambda: f64, cap: u32) -> Self {
        let pmf: Vec<f64> = (0..=cap).map(|m| score_pmf(lambda, m)).collect();
        let total: f64 = pmf.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = f64::INFINITY;
        CdfTable { cdf }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut m = 0;
        while u >= self.cdf[m] {
            m += 1;
        }
        m as u32
    }
}

#[derive(Debug, Clone)]
struct PairTables {
    home: CdfTable,
    away: CdfTable,
}

/// Goal model with inversion tables precomputed for all 16 pot pairs.
#[derive(Debug, Clone)]
pub struct GoalModel {
    params: GoalModelParams,
    goal_cap: Option<u32>,
    tables: Vec<PairTables>,
}

impl GoalModel {
    pub fn new(params: GoalModelParams) -> Self {
        Self::build(params, None)
    }

    /// Samples from the Poisson law truncated to `0..=cap` and renormalised.
    /// Only meant for comparisons against exact enumeration.
    pub fn truncated(params: GoalModelParams, cap: u32) -> Self {
        Self::build(params, Some(cap))
    }

    fn build(params: GoalModelParams, goal_cap: Option<u32>) -> Self {
        let table = |lambda: f64| match goal_cap {
            Some(cap) => CdfTable::truncated(lambda, cap),
            None => CdfTable::poisson(lambda),
        };
        let mut tables = Vec::with_capacity(16);
        for home in PotRating::ALL {
            for away in PotRating::ALL {
                tables.push(PairTables {
                    home: table(lambda_home(&params, home, away)),
                    away: table(lambda_away(&params, home, away)),
                });
            }
        }
        GoalModel {
            params,
            goal_cap,
            tables,
        }
    }

    pub fn params(&self) -> &GoalModelParams {
        &self.params
    }

    pub fn goal_cap(&self) -> Option<u32> {
        self.goal_cap
    }

    pub fn lambda_home(&self, home: PotRating, away: PotRating) -> f64 {
        lambda_home(&self.params, home, away)
    }

    pub fn lambda_away(&self, home: PotRating, away: PotRating) -> f64 {
        lambda_away(&self.params, home, away)
    }

    #[inline]
    pub fn sample_scoreline<R: Rng + ?Sized>(
        &self,
        home: PotRating,
        away: PotRating,
        rng: &mut R,
    ) -> Scoreline {
        let pair = &self.tables[home.index() * 4 + away.index()];
        let home_goals = pair.home.sample(rng);
        let away_goals = pair.away.sample(rng);
        Scoreline {
            home_goals,
            away_goals,
        }
    }
}

impl Default for GoalModel {
    fn default() -> Self {
        GoalModel::new(GoalModelParams::FITTED)
    }
}

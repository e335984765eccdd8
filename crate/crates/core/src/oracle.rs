//! Exact conditional prize probabilities for miniature tournaments.
//!
//! Every combination of truncated scorelines of the non-focal matches is
//! enumerated and weighted by its renormalised Poisson probability. Residual
//! ties are averaged over all orders of the tied teams instead of sampled.
//! The table and tie-breaking logic here are written separately from
//! [`crate::standings`] so the two can check each other.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{simulate_focal, EngineOptions, Perspective, ProbTriple, CONDITIONING};
use crate::error::{Error, Result};
use crate::fixtures::{Fixture, TeamId, TieRule, Tournament};
use crate::goal_model::{lambda_away, lambda_home, score_pmf, GoalModelParams, Scoreline};

pub const ENUMERATION_LIMIT: u128 = 10_000_000;
pub const MAX_TEAMS: usize = 4;
pub const MAX_GOAL_CAP: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiniFormat {
    pub teams: Vec<TeamId>,
    /// All matches, the focal one included.
    pub fixtures: Vec<Fixture>,
    pub goal_cap: u32,
    pub tie_rule: TieRule,
}

impl MiniFormat {
    /// Teams are given by pot; `pairs` index into `pots` as (home, away).
    pub fn from_pots(
        pots: &[u8],
        pairs: &[(usize, usize)],
        goal_cap: u32,
        tie_rule: TieRule,
    ) -> Result<Self> {
        let mut teams = Vec::with_capacity(pots.len());
        for &p in pots {
            let index = teams.iter().filter(|t: &&TeamId| t.pot.get() == p).count() as u8;
            teams.push(TeamId::new(p, index)?);
        }
        let fixtures = pairs
            .iter()
            .map(|&(h, a)| {
                let team = |i: usize| {
                    teams
                        .get(i)
                        .copied()
                        .ok_or_else(|| Error::InvalidMini(format!("no team at position {i}")))
                };
                Fixture::new(team(h)?, team(a)?)
            })
            .collect::<Result<Vec<_>>>()?;
        MiniFormat::new(teams, fixtures, goal_cap, tie_rule)
    }

    pub fn new(
        teams: Vec<TeamId>,
        fixtures: Vec<Fixture>,
        goal_cap: u32,
        tie_rule: TieRule,
    ) -> Result<Self> {
        if teams.is_empty() || teams.len() > MAX_TEAMS {
            return Err(Error::InvalidMini(format!(
                "{} teams, expected 1..={MAX_TEAMS}",
                teams.len()
            )));
        }
        if goal_cap > MAX_GOAL_CAP {
            return Err(Error::InvalidMini(format!(
                "goal cap {goal_cap} above {MAX_GOAL_CAP}"
            )));
        }
        // reuse the tournament checks for duplicates and unknown teams
        Tournament::new(teams.clone(), fixtures.clone(), tie_rule)?;
        Ok(MiniFormat {
            teams,
            fixtures,
            goal_cap,
            tie_rule,
        })
    }

    pub fn tournament(&self) -> Tournament {
        Tournament::new(self.teams.clone(), self.fixtures.clone(), self.tie_rule)
            .expect("validated on construction")
    }

    /// Number of joint outcomes of the non-focal matches.
    pub fn enumeration_size(&self) -> u128 {
        let per_match = u128::from(self.goal_cap + 1).pow(2);
        per_match.saturating_pow(self.fixtures.len().saturating_sub(1) as u32)
    }
}

/// Exact probabilities plus how often the tie-breaking paths were taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactReport {
    pub probs: ProbTriple,
    /// Probability mass (summed over the three conditionings, so at most 3)
    /// of outcomes where head-to-head criteria were reapplied to a subset.
    pub recursion_mass: f64,
    /// Same, for outcomes where the focal side ended in a residual tie.
    pub residual_tie_mass: f64,
}

/// Home side's exact (win, draw, loss) prize probabilities under the fitted
/// model.
pub fn exact_prob_triple(mini: &MiniFormat, focal: Fixture, cutoff: usize) -> Result<ProbTriple> {
    Ok(exact_report(
        mini,
        focal,
        Perspective::Home,
        cutoff,
        &GoalModelParams::FITTED,
    )?
    .probs)
}

pub fn exact_report(
    mini: &MiniFormat,
    focal: Fixture,
    perspective: Perspective,
    cutoff: usize,
    params: &GoalModelParams,
) -> Result<ExactReport> {
    let needed = mini.enumeration_size();
    if needed > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            needed,
            limit: ENUMERATION_LIMIT,
        });
    }
    if cutoff == 0 || cutoff > mini.teams.len() {
        return Err(Error::CutoffOutOfRange {
            cutoff,
            field_size: mini.teams.len(),
        });
    }
    let focal_pos = mini
        .fixtures
        .iter()
        .position(|&f| f == focal)
        .ok_or_else(|| Error::InvalidMini(format!("focal fixture {focal} not in the mini")))?;
    let index_of = |t: TeamId| mini.teams.iter().position(|&u| u == t).unwrap();
    let subject = index_of(match perspective {
        Perspective::Home => focal.home,
        Perspective::Away => focal.away,
    });

    let others: Vec<(usize, usize)> = mini
        .fixtures
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != focal_pos)
        .map(|(_, f)| (index_of(f.home), index_of(f.away)))
        .collect();
    // outcome distributions per non-focal fixture
    let outcomes: Vec<Vec<(Scoreline, f64)>> = mini
        .fixtures
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != focal_pos)
        .map(|(_, f)| {
            let home = truncated_pmf(lambda_home(params, f.home.pot, f.away.pot), mini.goal_cap);
            let away = truncated_pmf(lambda_away(params, f.home.pot, f.away.pot), mini.goal_cap);
            let mut v = Vec::new();
            for (hg, ph) in home.iter().enumerate() {
                for (ag, pa) in away.iter().enumerate() {
                    v.push((Scoreline::new(hg as u32, ag as u32), ph * pa));
                }
            }
            v
        })
        .collect();

    // focal scorelines ordered win, draw, loss from the subject's side
    let focal_scores = match perspective {
        Perspective::Home => CONDITIONING,
        Perspective::Away => [CONDITIONING[2], CONDITIONING[1], CONDITIONING[0]],
    };
    let focal_pair = (index_of(focal.home), index_of(focal.away));

    let mut prob = [0.0f64; 3];
    let mut recursion_mass = 0.0;
    let mut residual_tie_mass = 0.0;
    let mut odometer = vec![0usize; others.len()];
    let mut results: Vec<((usize, usize), Scoreline)> = Vec::with_capacity(mini.fixtures.len());
    loop {
        let weight: f64 = odometer
            .iter()
            .zip(&outcomes)
            .map(|(&k, o)| o[k].1)
            .product();
        for (c, &fs) in focal_scores.iter().enumerate() {
            results.clear();
            results.extend(
                others
                    .iter()
                    .zip(&odometer)
                    .zip(&outcomes)
                    .map(|((&p, &k), o)| (p, o[k].0)),
            );
            results.push((focal_pair, fs));
            let mut recursed = false;
            let classes = match mini.tie_rule {
                TieRule::League => league_classes(mini.teams.len(), &results),
                TieRule::HeadToHead => h2h_classes(mini.teams.len(), &results, &mut recursed),
            };
            let (p, tied) = prize_probability(&classes, subject, cutoff);
            prob[c] += weight * p;
            if recursed {
                recursion_mass += weight;
            }
            if tied {
                residual_tie_mass += weight;
            }
        }
        // advance
        let mut i = 0;
        loop {
            if i == odometer.len() {
                let [p_win, p_draw, p_loss] = prob;
                return Ok(ExactReport {
                    probs: ProbTriple {
                        p_win,
                        p_draw,
                        p_loss,
                        stderr_win: 0.0,
                        stderr_draw: 0.0,
                        stderr_loss: 0.0,
                    },
                    recursion_mass,
                    residual_tie_mass,
                });
            }
            odometer[i] += 1;
            if odometer[i] < outcomes[i].len() {
                break;
            }
            odometer[i] = 0;
            i += 1;
        }
    }
}

/// A miniature tournament with a focal match and a prize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub name: String,
    pub mini: MiniFormat,
    pub focal: Fixture,
    pub perspective: Perspective,
    pub cutoff: usize,
}

/// Exact and simulated probabilities for one [`OracleCase`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub case: OracleCase,
    pub exact: ExactReport,
    pub simulated: ProbTriple,
    pub replications: u64,
}

impl OracleCheck {
    /// Largest deviation over the three probabilities in units of the
    /// binomial standard error at the exact value. A deviation from an exact
    /// 0 or 1 counts as infinitely many.
    pub fn max_z(&self) -> f64 {
        let n = self.replications as f64;
        let e = &self.exact.probs;
        let s = &self.simulated;
        [
            (e.p_win, s.p_win),
            (e.p_draw, s.p_draw),
            (e.p_loss, s.p_loss),
        ]
        .into_iter()
        .map(|(p, q)| {
            let se = (p * (1.0 - p) / n).sqrt();
            let diff = (q - p).abs();
            if diff < 1e-12 {
                0.0
            } else if se < 1e-12 {
                f64::INFINITY
            } else {
                diff / se
            }
        })
        .fold(0.0, f64::max)
    }
}

/// Small tournaments covering both tie rules, a recursive head-to-head
/// reapplication, an all-drawn table and the away side.
pub fn reference_cases() -> Vec<OracleCase> {
    let case =
        |name: &str, pots: &[u8], pairs: &[(usize, usize)], cap, rule, perspective, cutoff| {
            let mini = MiniFormat::from_pots(pots, pairs, cap, rule).expect("valid reference mini");
            OracleCase {
                name: name.to_string(),
                focal: mini.fixtures[0],
                mini,
                perspective,
                cutoff,
            }
        };
    let triangle = [(0, 1), (1, 2), (2, 0)];
    let round_robin_4 = [(0, 1), (2, 3), (0, 2), (1, 3), (3, 0), (1, 2)];
    vec![
        case(
            "three teams, league chain",
            &[1, 2, 3],
            &triangle,
            3,
            TieRule::League,
            Perspective::Home,
            1,
        ),
        case(
            "four teams, head-to-head chain",
            &[1, 2, 3, 4],
            &round_robin_4,
            2,
            TieRule::HeadToHead,
            Perspective::Home,
            2,
        ),
        case(
            "four teams, head-to-head chain, away side",
            &[2, 4, 1, 3],
            &round_robin_4,
            2,
            TieRule::HeadToHead,
            Perspective::Away,
            1,
        ),
        case(
            "goalless, everything tied",
            &[2, 2, 3],
            &triangle,
            0,
            TieRule::HeadToHead,
            Perspective::Home,
            1,
        ),
    ]
}

/// Runs the engine on a case with goals truncated at the case's cap and
/// pairs it with the exact answer.
pub fn check_case(
    case: &OracleCase,
    replications: u64,
    master_seed: u64,
    opts: &EngineOptions,
) -> Result<OracleCheck> {
    let exact = exact_report(
        &case.mini,
        case.focal,
        case.perspective,
        case.cutoff,
        &opts.params,
    )?;
    let opts = EngineOptions {
        goal_cap: Some(case.mini.goal_cap),
        ..*opts
    };
    let batch = simulate_focal(
        &case.mini.tournament(),
        case.focal,
        &[case.cutoff],
        replications,
        master_seed,
        &opts,
    )?;
    let simulated = batch
        .counts(case.perspective, case.cutoff)
        .expect("requested cutoff")
        .probs();
    Ok(OracleCheck {
        case: case.clone(),
        exact,
        simulated,
        replications,
    })
}

/// Poisson pmf on `0..=cap`, renormalised to sum to one.
pub fn truncated_pmf(lambda: f64, cap: u32) -> Vec<f64> {
    let raw: Vec<f64> = (0..=cap).map(|m| score_pmf(lambda, m)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Chance that `subject` finishes within `cutoff`, averaging over the
/// orders of its final tie class; also whether that class is a real tie.
fn prize_probability(classes: &[Vec<usize>], subject: usize, cutoff: usize) -> (f64, bool) {
    let mut above = 0;
    for class in classes {
        if class.contains(&subject) {
            let size = class.len();
            let inside = cutoff.saturating_sub(above).min(size);
            return (inside as f64 / size as f64, size > 1);
        }
        above += class.len();
    }
    unreachable!("subject is in some class")
}

#[derive(Debug, Clone, Copy, Default)]
struct Line {
    points: i64,
    scored: i64,
    conceded: i64,
    away_scored: i64,
    wins: i64,
    away_wins: i64,
}

/// Table over `teams`, counting only matches whose both sides are in it.
fn table(
    n: usize,
    results: &[((usize, usize), Scoreline)],
    include: impl Fn(usize) -> bool,
) -> Vec<Line> {
    let mut lines = vec![Line::default(); n];
    for &((h, a), s) in results {
        if !(include(h) && include(a)) {
            continue;
        }
        let (hg, ag) = (i64::from(s.home_goals), i64::from(s.away_goals));
        lines[h].scored += hg;
        lines[h].conceded += ag;
        lines[a].scored += ag;
        lines[a].conceded += hg;
        lines[a].away_scored += ag;
        if hg > ag {
            lines[h].points += 3;
            lines[h].wins += 1;
        } else if hg < ag {
            lines[a].points += 3;
            lines[a].wins += 1;
            lines[a].away_wins += 1;
        } else {
            lines[h].points += 1;
            lines[a].points += 1;
        }
    }
    lines
}

fn split_by<K: Ord>(members: &[usize], key: impl Fn(usize) -> K) -> Vec<Vec<usize>> {
    let mut buckets: BTreeMap<Reverse<K>, Vec<usize>> = BTreeMap::new();
    for &m in members {
        buckets.entry(Reverse(key(m))).or_default().push(m);
    }
    buckets.into_values().collect()
}

fn league_classes(n: usize, results: &[((usize, usize), Scoreline)]) -> Vec<Vec<usize>> {
    let all = table(n, results, |_| true);
    let members: Vec<usize> = (0..n).collect();
    split_by(&members, |t| {
        let l = all[t];
        (
            l.points,
            l.scored - l.conceded,
            l.scored,
            l.away_scored,
            l.wins,
            l.away_wins,
        )
    })
}

fn h2h_classes(
    n: usize,
    results: &[((usize, usize), Scoreline)],
    recursed: &mut bool,
) -> Vec<Vec<usize>> {
    let all = table(n, results, |_| true);
    let members: Vec<usize> = (0..n).collect();
    split_by(&members, |t| all[t].points)
        .into_iter()
        .flat_map(|level| refine(&level, n, results, &all, recursed))
        .collect()
}

fn refine(
    level: &[usize],
    n: usize,
    results: &[((usize, usize), Scoreline)],
    all: &[Line],
    recursed: &mut bool,
) -> Vec<Vec<usize>> {
    if level.len() < 2 {
        return vec![level.to_vec()];
    }
    let mini = table(n, results, |t| level.contains(&t));
    let parts = split_by(level, |t| {
        let l = mini[t];
        (l.points, l.scored - l.conceded, l.scored)
    });
    if parts.len() == 1 {
        return split_by(level, |t| (all[t].scored - all[t].conceded, all[t].scored));
    }
    let mut out = Vec::new();
    for part in parts {
        if part.len() > 1 {
            *recursed = true;
        }
        out.extend(refine(&part, n, results, all, recursed));
    }
    out
}

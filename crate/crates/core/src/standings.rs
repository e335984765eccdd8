//! Final tables and the two tie-breaking chains.
//!
//! Group stage: points, then head-to-head points, goal difference and goals
//! scored among the tied teams. When those criteria split a tied set but
//! leave a smaller subset still level, the head-to-head criteria are applied
//! again to that subset alone. If they separate nobody, overall goal
//! difference and goals scored decide. League phase: points, goal
//! difference, goals scored, away goals scored, wins, away wins.
//!
//! Whatever is still level after the chain is ordered uniformly at random.

use std::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{Fixture, TeamId};
use crate::goal_model::Scoreline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointsSystem {
    pub win: u32,
    pub draw: u32,
    pub loss: u32,
}

impl Default for PointsSystem {
    fn default() -> Self {
        PointsSystem {
            win: 3,
            draw: 1,
            loss: 0,
        }
    }
}

impl PointsSystem {
    /// Points for (home, away).
    #[inline]
    pub fn award(&self, score: Scoreline) -> (u32, u32) {
        use std::cmp::Ordering::*;
        match score.home_goals.cmp(&score.away_goals) {
            Greater => (self.win, self.loss),
            Equal => (self.draw, self.draw),
            Less => (self.loss, self.win),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredMatch {
    pub fixture: Fixture,
    pub score: Scoreline,
}

impl ScoredMatch {
    pub fn new(fixture: Fixture, home_goals: u32, away_goals: u32) -> Self {
        ScoredMatch {
            fixture,
            score: Scoreline::new(home_goals, away_goals),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub team: TeamId,
    pub points: u32,
    pub goals_for: u32,
    pub goals_against: u32,
    pub away_goals_for: u32,
    pub wins: u32,
    pub away_wins: u32,
}

impl TableRow {
    pub fn new(team: TeamId) -> Self {
        TableRow {
            team,
            points: 0,
            goals_for: 0,
            goals_against: 0,
            away_goals_for: 0,
            wins: 0,
            away_wins: 0,
        }
    }

    pub fn goal_difference(&self) -> i64 {
        i64::from(self.goals_for) - i64::from(self.goals_against)
    }

    /// Sort key of the league chain; larger is better.
    #[inline]
    pub fn league_key(&self) -> (u32, i64, u32, u32, u32, u32) {
        (
            self.points,
            self.goal_difference(),
            self.goals_for,
            self.away_goals_for,
            self.wins,
            self.away_wins,
        )
    }
}

/// Adds one result to the two rows involved.
#[inline]
pub(crate) fn record(
    home: &mut TableRow,
    away: &mut TableRow,
    score: Scoreline,
    points: &PointsSystem,
) {
    let (hp, ap) = points.award(score);
    home.points += hp;
    away.points += ap;
    home.goals_for += score.home_goals;
    home.goals_against += score.away_goals;
    away.goals_for += score.away_goals;
    away.goals_against += score.home_goals;
    away.away_goals_for += score.away_goals;
    if score.home_goals > score.away_goals {
        home.wins += 1;
    } else if score.away_goals > score.home_goals {
        away.wins += 1;
        away.away_wins += 1;
    }
}

/// Teams from rank 1 downward.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking(pub Vec<TeamId>);

impl Ranking {
    pub fn teams(&self) -> &[TeamId] {
        &self.0
    }

    /// 1-based rank of `team`.
    pub fn rank_of(&self, team: TeamId) -> Option<usize> {
        self.0.iter().position(|&t| t == team).map(|p| p + 1)
    }
}

/// Builds one row per team, in the order of `teams`.
pub fn accumulate(
    teams: &[TeamId],
    matches: &[ScoredMatch],
    points: &PointsSystem,
) -> Result<Vec<TableRow>> {
    check_distinct(teams.iter().copied())?;
    let mut rows: Vec<TableRow> = teams.iter().map(|&t| TableRow::new(t)).collect();
    for m in matches {
        let h = position(teams, m.fixture.home)?;
        let a = position(teams, m.fixture.away)?;
        if h == a {
            return Err(Error::SelfFixture(m.fixture.home));
        }
        let (home, away) = pair_mut(&mut rows, h, a);
        record(home, away, m.score, points);
    }
    Ok(rows)
}

fn position(teams: &[TeamId], team: TeamId) -> Result<usize> {
    teams
        .iter()
        .position(|&t| t == team)
        .ok_or(Error::UnknownTeam(team))
}

fn check_distinct(teams: impl Iterator<Item = TeamId> + Clone) -> Result<()> {
    for (i, t) in teams.clone().enumerate() {
        if teams.clone().take(i).any(|u| u == t) {
            return Err(Error::DuplicateTeam(t));
        }
    }
    Ok(())
}

pub(crate) fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

/// A result between two teams addressed by their row index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DenseMatch {
    pub home: usize,
    pub away: usize,
    pub score: Scoreline,
}

/// Deterministic part of a ranking: rows in final order, grouped into
/// blocks that no criterion separates.
#[derive(Debug, Clone, Default)]
pub(crate) struct TieBlocks {
    pub order: Vec<usize>,
    /// `(start, len)` into `order`, top block first.
    pub blocks: Vec<(usize, usize)>,
}

impl TieBlocks {
    pub fn clear(&mut self) {
        self.order.clear();
        self.blocks.clear();
    }

    /// 1-based rank of `row`, drawing its place uniformly inside its block.
    pub fn rank_of<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let pos = self
            .order
            .iter()
            .position(|&r| r == row)
            .expect("row is ranked");
        let &(start, len) = self
            .blocks
            .iter()
            .find(|&&(s, l)| (s..s + l).contains(&pos))
            .expect("blocks cover the order");
        if len == 1 {
            start + 1
        } else {
            start + rng.random_range(0..len) + 1
        }
    }

    fn into_ranking<R: Rng + ?Sized>(mut self, rows: &[TableRow], rng: &mut R) -> Ranking {
        for &(start, len) in &self.blocks {
            let block = &mut self.order[start..start + len];
            if len > 1 {
                // canonical order first, so the result does not depend on
                // how the rows were supplied
                block.sort_unstable_by_key(|&r| rows[r].team);
                block.shuffle(rng);
            }
        }
        Ranking(self.order.into_iter().map(|r| rows[r].team).collect())
    }
}

/// Head-to-head chain over any number of teams.
pub(crate) fn head_to_head_blocks(
    rows: &[TableRow],
    matches: &[DenseMatch],
    points: &PointsSystem,
    out: &mut TieBlocks,
) {
    out.clear();
    out.order.extend(0..rows.len());
    out.order.sort_by_key(|&r| Reverse(rows[r].points));
    let mut start = 0;
    while start < rows.len() {
        let pts = rows[out.order[start]].points;
        let len = out.order[start..]
            .iter()
            .take_while(|&&r| rows[r].points == pts)
            .count();
        resolve_head_to_head(rows, matches, points, out, start, len);
        start += len;
    }
}

fn resolve_head_to_head(
    rows: &[TableRow],
    matches: &[DenseMatch],
    points: &PointsSystem,
    out: &mut TieBlocks,
    start: usize,
    len: usize,
) {
    if len == 1 {
        out.blocks.push((start, 1));
        return;
    }
    // (points, goal difference, goals for) restricted to matches inside the set
    let members: Vec<usize> = out.order[start..start + len].to_vec();
    let mut mini = vec![(0i64, 0i64, 0i64); len];
    for m in matches {
        let (Some(h), Some(a)) = (
            members.iter().position(|&r| r == m.home),
            members.iter().position(|&r| r == m.away),
        ) else {
            continue;
        };
        let (hp, ap) = points.award(m.score);
        let (hg, ag) = (i64::from(m.score.home_goals), i64::from(m.score.away_goals));
        mini[h].0 += i64::from(hp);
        mini[h].1 += hg - ag;
        mini[h].2 += hg;
        mini[a].0 += i64::from(ap);
        mini[a].1 += ag - hg;
        mini[a].2 += ag;
    }
    let mut keyed: Vec<((i64, i64, i64), usize)> = mini.into_iter().zip(members).collect();
    keyed.sort_by_key(|&(k, _)| Reverse(k));
    let separated = keyed.first().map(|f| f.0) != keyed.last().map(|l| l.0);
    if separated {
        for (i, &(_, r)) in keyed.iter().enumerate() {
            out.order[start + i] = r;
        }
        let mut s = 0;
        while s < len {
            let run = keyed[s..].iter().take_while(|k| k.0 == keyed[s].0).count();
            resolve_head_to_head(rows, matches, points, out, start + s, run);
            s += run;
        }
    } else {
        let slice = &mut out.order[start..start + len];
        let overall = |r: usize| (rows[r].goal_difference(), rows[r].goals_for);
        slice.sort_by_key(|&r| Reverse(overall(r)));
        let mut s = 0;
        while s < len {
            let key = overall(out.order[start + s]);
            let run = out.order[start + s..start + len]
                .iter()
                .take_while(|&&r| overall(r) == key)
                .count();
            out.blocks.push((start + s, run));
            s += run;
        }
    }
}

/// League chain; blocks are runs of identical keys.
pub(crate) fn league_blocks(rows: &[TableRow], out: &mut TieBlocks) {
    out.clear();
    out.order.extend(0..rows.len());
    out.order.sort_by_key(|&r| Reverse(rows[r].league_key()));
    let mut start = 0;
    while start < rows.len() {
        let key = rows[out.order[start]].league_key();
        let len = out.order[start..]
            .iter()
            .take_while(|&&r| rows[r].league_key() == key)
            .count();
        out.blocks.push((start, len));
        start += len;
    }
}

/// Rank of one row under the league chain without sorting the table:
/// one plus the rows strictly ahead, plus a uniform place among the rows
/// level with it.
#[inline]
pub(crate) fn league_rank_of<R: Rng + ?Sized>(rows: &[TableRow], row: usize, rng: &mut R) -> usize {
    let key = rows[row].league_key();
    let mut ahead = 0;
    let mut level = 0;
    for r in rows {
        let k = r.league_key();
        if k > key {
            ahead += 1;
        } else if k == key {
            level += 1;
        }
    }
    if level == 1 {
        ahead + 1
    } else {
        ahead + rng.random_range(0..level) + 1
    }
}

fn densify(rows: &[TableRow], matches: &[ScoredMatch]) -> Result<Vec<DenseMatch>> {
    let teams: Vec<TeamId> = rows.iter().map(|r| r.team).collect();
    matches
        .iter()
        .map(|m| {
            Ok(DenseMatch {
                home: position(&teams, m.fixture.home)?,
                away: position(&teams, m.fixture.away)?,
                score: m.score,
            })
        })
        .collect()
}

/// Ranks a four-team group that has played its full double round-robin.
pub fn rank_group<R: Rng + ?Sized>(
    rows: &[TableRow],
    matches: &[ScoredMatch],
    points: &PointsSystem,
    rng: &mut R,
) -> Result<Ranking> {
    if rows.len() != 4 {
        return Err(Error::WrongTeamCount {
            expected: 4,
            got: rows.len(),
        });
    }
    let dense = densify(rows, matches)?;
    let mut pairs: Vec<(usize, usize)> = dense.iter().map(|m| (m.home, m.away)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    if dense.len() != 12 || pairs.len() != 12 {
        return Err(Error::MissingMatches {
            expected: 12,
            got: pairs.len(),
        });
    }
    rank_head_to_head(rows, matches, points, rng)
}

/// Head-to-head chain for any field size; matches outside the table are
/// rejected, incomplete schedules are allowed.
pub fn rank_head_to_head<R: Rng + ?Sized>(
    rows: &[TableRow],
    matches: &[ScoredMatch],
    points: &PointsSystem,
    rng: &mut R,
) -> Result<Ranking> {
    check_distinct(rows.iter().map(|r| r.team))?;
    let dense = densify(rows, matches)?;
    let mut blocks = TieBlocks::default();
    head_to_head_blocks(rows, &dense, points, &mut blocks);
    Ok(blocks.into_ranking(rows, rng))
}

/// Ranks the 36-team league phase table.
pub fn rank_league<R: Rng + ?Sized>(rows: &[TableRow], rng: &mut R) -> Result<Ranking> {
    if rows.len() != 36 {
        return Err(Error::WrongTeamCount {
            expected: 36,
            got: rows.len(),
        });
    }
    rank_by_league_chain(rows, rng)
}

/// League chain for any field size.
pub fn rank_by_league_chain<R: Rng + ?Sized>(rows: &[TableRow], rng: &mut R) -> Result<Ranking> {
    check_distinct(rows.iter().map(|r| r.team))?;
    let mut blocks = TieBlocks::default();
    league_blocks(rows, &mut blocks);
    Ok(blocks.into_ranking(rows, rng))
}

//! Match sets of the two tournament designs.
//!
//! Teams carry no identity beyond their pot, so a single canonical match set
//! per design is enough: every group is the same four pots playing a double
//! round-robin, and any feasible league-phase match set gives the same
//! incentive values. The league uses a cyclic construction over nine teams
//! per pot that is invariant under rotating all pot indices together, which
//! makes the teams inside a pot exchangeable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::goal_model::PotRating;

/// Old group stage or new incomplete round-robin league phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Group,
    League,
}

impl Format {
    pub const ALL: [Format; 2] = [Format::Group, Format::League];

    /// Teams drawn from each pot.
    pub fn teams_per_pot(self) -> usize {
        match self {
            Format::Group => 1,
            Format::League => 9,
        }
    }

    pub fn field_size(self) -> usize {
        4 * self.teams_per_pot()
    }

    /// The two prize cutoffs studied for this format.
    pub fn prize_cutoffs(self) -> [usize; 2] {
        match self {
            Format::Group => [2, 3],
            Format::League => [8, 24],
        }
    }

    pub fn tie_rule(self) -> TieRule {
        match self {
            Format::Group => TieRule::HeadToHead,
            Format::League => TieRule::League,
        }
    }

    pub fn fixtures(self) -> Vec<Fixture> {
        match self {
            Format::Group => group_fixtures(),
            Format::League => league_fixtures(),
        }
    }

    pub fn teams(self) -> Vec<TeamId> {
        let per_pot = self.teams_per_pot() as u8;
        PotRating::ALL
            .into_iter()
            .flat_map(|pot| (0..per_pot).map(move |index| TeamId { pot, index }))
            .collect()
    }

    pub fn tournament(self) -> Tournament {
        Tournament {
            teams: self.teams(),
            fixtures: self.fixtures(),
            tie_rule: self.tie_rule(),
        }
    }

    /// Cross-pot match types in plotting order: 1-2, 2-1, 1-3, 3-1, ...
    pub fn cross_pot_types() -> Vec<MatchType> {
        let mut out = Vec::with_capacity(12);
        for a in 1..=4u8 {
            for b in (a + 1)..=4u8 {
                out.push(MatchType::from_pots(a, b).unwrap());
                out.push(MatchType::from_pots(b, a).unwrap());
            }
        }
        out
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Group => "group",
            Format::League => "league",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "group" => Ok(Format::Group),
            "league" => Ok(Format::League),
            other => Err(format!(
                "unknown format `{other}` (expected group or league)"
            )),
        }
    }
}

/// Tie-breaking chain applied after points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Recursive head-to-head (points, goal difference, goals scored among
    /// the tied teams), then overall goal difference and goals scored.
    HeadToHead,
    /// Goal difference, goals scored, away goals scored, wins, away wins.
    League,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TeamId {
    pub pot: PotRating,
    pub index: u8,
}

impl TeamId {
    pub fn new(pot: u8, index: u8) -> Result<Self> {
        Ok(TeamId {
            pot: PotRating::new(pot)?,
            index,
        })
    }
}

impl fmt::Display for TeamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}.{}", self.pot, self.index)
    }
}

/// A scheduled match; `home` hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fixture {
    pub home: TeamId,
    pub away: TeamId,
}

impl Fixture {
    pub fn new(home: TeamId, away: TeamId) -> Result<Self> {
        if home == away {
            return Err(Error::SelfFixture(home));
        }
        Ok(Fixture { home, away })
    }

    pub fn match_type(&self) -> MatchType {
        MatchType {
            home_pot: self.home.pot,
            away_pot: self.away.pot,
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} v {}", self.home, self.away)
    }
}

/// Ordered pot pair of a match, written `home-away` (e.g. `4-1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MatchType {
    pub home_pot: PotRating,
    pub away_pot: PotRating,
}

impl MatchType {
    pub fn new(home_pot: PotRating, away_pot: PotRating) -> Self {
        MatchType { home_pot, away_pot }
    }

    pub fn from_pots(home: u8, away: u8) -> Result<Self> {
        Ok(MatchType {
            home_pot: PotRating::new(home)?,
            away_pot: PotRating::new(away)?,
        })
    }

    pub fn is_same_pot(&self) -> bool {
        self.home_pot == self.away_pot
    }
}

impl fmt::Display for MatchType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.home_pot, self.away_pot)
    }
}

impl FromStr for MatchType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, a) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| format!("match type `{s}` must look like `4-1`"))?;
        let parse = |p: &str| -> Result<u8, String> {
            let v: u8 = p
                .trim()
                .parse()
                .map_err(|_| format!("invalid pot `{p}` in match type `{s}`"))?;
            PotRating::new(v).map(u8::from).map_err(|e| e.to_string())
        };
        MatchType::from_pots(parse(h)?, parse(a)?).map_err(|e| e.to_string())
    }
}

/// Double round-robin among one team from each pot: 12 matches.
pub fn group_fixtures() -> Vec<Fixture> {
    let teams = Format::Group.teams();
    let mut out = Vec::with_capacity(12);
    for &home in &teams {
        for &away in &teams {
            if home != away {
                out.push(Fixture { home, away });
            }
        }
    }
    out
}

/// Cyclic incomplete round-robin over 4 pots of 9: 144 matches.
///
/// Inside pot `P`, team `i` hosts team `i+1 (mod 9)`. For pots `P < Q`,
/// `P_i` hosts `Q_i` and `Q_i` hosts `P_{i+1}`. Every team then meets two
/// distinct opponents from each pot, one at home and one away.
pub fn league_fixtures() -> Vec<Fixture> {
    const N: u8 = 9;
    let team = |pot: PotRating, index: u8| TeamId { pot, index };
    let mut out = Vec::with_capacity(144);
    for (pi, &p) in PotRating::ALL.iter().enumerate() {
        for i in 0..N {
            out.push(Fixture {
                home: team(p, i),
                away: team(p, (i + 1) % N),
            });
        }
        for &q in &PotRating::ALL[pi + 1..] {
            for i in 0..N {
                out.push(Fixture {
                    home: team(p, i),
                    away: team(q, i),
                });
                out.push(Fixture {
                    home: team(q, i),
                    away: team(p, (i + 1) % N),
                });
            }
        }
    }
    out.sort_unstable();
    out
}

/// The representative fixture of `match_type` in `format`: the
/// lexicographically smallest one with matching pots.
pub fn focal_fixture(format: Format, match_type: MatchType) -> Result<Fixture> {
    format
        .fixtures()
        .into_iter()
        .filter(|f| f.match_type() == match_type)
        .min()
        .ok_or(Error::NoSuchType { format, match_type })
}

/// A set of teams, the matches they play, and how ties are broken.
#[derive(Debug, Clone, PartialEq)]
pub struct Tournament {
    teams: Vec<TeamId>,
    fixtures: Vec<Fixture>,
    tie_rule: TieRule,
}

impl Tournament {
    /// Arbitrary tournament, e.g. a miniature used for exact checks.
    pub fn new(teams: Vec<TeamId>, fixtures: Vec<Fixture>, tie_rule: TieRule) -> Result<Self> {
        for (i, t) in teams.iter().enumerate() {
            if teams[..i].contains(t) {
                return Err(Error::DuplicateTeam(*t));
            }
        }
        for f in &fixtures {
            for side in [f.home, f.away] {
                if !teams.contains(&side) {
                    return Err(Error::UnknownTeam(side));
                }
            }
            if f.home == f.away {
                return Err(Error::SelfFixture(f.home));
            }
        }
        Ok(Tournament {
            teams,
            fixtures,
            tie_rule,
        })
    }

    pub fn teams(&self) -> &[TeamId] {
        &self.teams
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    pub fn tie_rule(&self) -> TieRule {
        self.tie_rule
    }

    pub fn team_index(&self, team: TeamId) -> Option<usize> {
        self.teams.iter().position(|&t| t == team)
    }
}

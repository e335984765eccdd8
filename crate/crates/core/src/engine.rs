//! Conditional prize probabilities and the attacking incentive.
//!
//! For a focal match the engine simulates every other match of the
//! tournament and evaluates the final table three times, with the focal
//! match fixed at 1-0, 0-0 and 0-1. With common random numbers (the default)
//! the three evaluations share the same simulated matches, so the two
//! differences in the incentive ratio
//!
//! ```text
//! I = (p_win - p_draw) / (p_draw - p_loss)
//! ```
//!
//! are estimated from paired observations. Each replication keeps the joint
//! outcome of the three indicator variables, which is enough for the exact
//! covariance of the paired differences and a delta-method standard error
//! of the ratio.
//!
//! Replications are split into fixed chunks that may run on any worker; the
//! reduction is an integer sum, so results are bit-identical for any thread
//! count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{focal_fixture, Fixture, Format, MatchType, TieRule, Tournament};
use crate::goal_model::{GoalModel, GoalModelParams, PotRating, Scoreline};
use crate::rng::StreamKey;
use crate::standings::{
    head_to_head_blocks, league_rank_of, pair_mut, record, DenseMatch, PointsSystem, TableRow,
    TieBlocks,
};

/// Which side of the focal match the incentive is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Home,
    Away,
}

impl Perspective {
    pub const ALL: [Perspective; 2] = [Perspective::Home, Perspective::Away];
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Perspective::Home => "home",
            Perspective::Away => "away",
        })
    }
}

impl FromStr for Perspective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "home" => Ok(Perspective::Home),
            "away" => Ok(Perspective::Away),
            other => Err(format!("unknown side `{other}` (expected home or away)")),
        }
    }
}

/// The three focal scorelines, from the home side's point of view.
pub const CONDITIONING: [Scoreline; 3] = [
    Scoreline::new(1, 0),
    Scoreline::new(0, 0),
    Scoreline::new(0, 1),
];
const HOME_WIN: usize = 0;
const DRAW: usize = 1;
const AWAY_WIN: usize = 2;

/// A prize: finishing at rank `rank_cutoff` or better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub format: Format,
    pub rank_cutoff: usize,
}

impl ThresholdSpec {
    pub fn new(format: Format, rank_cutoff: usize) -> Result<Self> {
        let field_size = format.field_size();
        if !(1..=field_size).contains(&rank_cutoff) {
            return Err(Error::InvalidCutoff {
                format,
                cutoff: rank_cutoff,
                field_size,
            });
        }
        Ok(ThresholdSpec {
            format,
            rank_cutoff,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub match_type: MatchType,
    pub perspective: Perspective,
    pub threshold: ThresholdSpec,
    pub replications: u64,
    pub master_seed: u64,
}

/// Knobs shared by all runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    pub params: GoalModelParams,
    pub points: PointsSystem,
    /// Share the simulated non-focal matches across the three conditionings.
    pub crn: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Truncate goal counts to `0..=cap`; only for exact-enumeration checks.
    pub goal_cap: Option<u32>,
    /// A ratio is reported only when `|p_draw - p_loss|` exceeds this many
    /// paired standard errors.
    pub degeneracy_factor: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            params: GoalModelParams::FITTED,
            points: PointsSystem::default(),
            crn: true,
            threads: 0,
            goal_cap: None,
            degeneracy_factor: 10.0,
        }
    }
}

pub const DEFAULT_REPLICATIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTriple {
    pub p_win: f64,
    pub p_draw: f64,
    pub p_loss: f64,
    pub stderr_win: f64,
    pub stderr_draw: f64,
    pub stderr_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncentiveResult {
    pub probs: ProbTriple,
    pub incentive: f64,
    pub incentive_stderr: f64,
}

/// Joint distribution of the (win, draw, loss) prize indicators over
/// replications. Index bits: 4 = prize after a win, 2 = after a draw,
/// 1 = after a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub patterns: [u64; 8],
}

/// Moments of the two paired differences of the ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedStats {
    /// p_win - p_draw
    pub gain: f64,
    /// p_draw - p_loss
    pub loss: f64,
    pub gain_stderr: f64,
    pub loss_stderr: f64,
    /// Covariance of the two per-replication differences.
    pub covariance: f64,
}

impl OutcomeCounts {
    pub fn replications(&self) -> u64 {
        self.patterns.iter().sum()
    }

    fn add(&mut self, other: &OutcomeCounts) {
        for (a, b) in self.patterns.iter_mut().zip(other.patterns) {
            *a += b;
        }
    }

    fn moment(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let n = self.replications() as f64;
        self.patterns
            .iter()
            .enumerate()
            .map(|(bits, &c)| {
                let w = ((bits >> 2) & 1) as f64;
                let d = ((bits >> 1) & 1) as f64;
                let l = (bits & 1) as f64;
                c as f64 * f(w, d, l)
            })
            .sum::<f64>()
            / n
    }

    pub fn probs(&self) -> ProbTriple {
        let n = self.replications() as f64;
        let p_win = self.moment(|w, _, _| w);
        let p_draw = self.moment(|_, d, _| d);
        let p_loss = self.moment(|_, _, l| l);
        let se = |p: f64| (p * (1.0 - p) / n).sqrt();
        ProbTriple {
            p_win,
            p_draw,
            p_loss,
            stderr_win: se(p_win),
            stderr_draw: se(p_draw),
            stderr_loss: se(p_loss),
        }
    }

    pub fn paired(&self) -> PairedStats {
        let n = self.replications() as f64;
        let gain = self.moment(|w, d, _| w - d);
        let loss = self.moment(|_, d, l| d - l);
        let var_gain = self.moment(|w, d, _| (w - d).powi(2)) - gain * gain;
        let var_loss = self.moment(|_, d, l| (d - l).powi(2)) - loss * loss;
        let covariance = self.moment(|w, d, l| (w - d) * (d - l)) - gain * loss;
        PairedStats {
            gain,
            loss,
            gain_stderr: (var_gain.max(0.0) / n).sqrt(),
            loss_stderr: (var_loss.max(0.0) / n).sqrt(),
            covariance,
        }
    }

    /// Ratio of the paired differences, or a degenerate-denominator error.
    pub fn incentive(&self, degeneracy_factor: f64) -> Result<IncentiveResult> {
        let n = self.replications() as f64;
        let s = self.paired();
        if s.loss.abs() <= degeneracy_factor * s.loss_stderr {
            return Err(Error::DegenerateDenominator {
                gap: s.loss,
                stderr: s.loss_stderr,
                factor: degeneracy_factor,
            });
        }
        let ratio = s.gain / s.loss;
        let var_gain = s.gain_stderr.powi(2) * n;
        let var_loss = s.loss_stderr.powi(2) * n;
        let var_ratio = (var_gain - 2.0 * ratio * s.covariance + ratio * ratio * var_loss)
            / (n * s.loss * s.loss);
        Ok(IncentiveResult {
            probs: self.probs(),
            incentive: ratio,
            incentive_stderr: var_ratio.max(0.0).sqrt(),
        })
    }
}

/// Counts for both sides of one focal match at several cutoffs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FocalBatch {
    pub focal: Fixture,
    pub cutoffs: Vec<usize>,
    /// `counts[cutoff_index][perspective]`
    counts: Vec<[OutcomeCounts; 2]>,
}

impl FocalBatch {
    pub fn counts(&self, perspective: Perspective, cutoff: usize) -> Option<&OutcomeCounts> {
        let i = self.cutoffs.iter().position(|&c| c == cutoff)?;
        Some(&self.counts[i][perspective as usize])
    }
}

/// The tournament flattened into index form for the hot loop.
struct Compiled {
    pots: Vec<PotRating>,
    /// Non-focal matches followed by the focal match in the last slot.
    fixtures: Vec<(usize, usize)>,
    tie_rule: TieRule,
}

impl Compiled {
    fn new(tournament: &Tournament, focal: Fixture) -> Result<Self> {
        let idx = |t| tournament.team_index(t).ok_or(Error::UnknownTeam(t));
        let focal_pos = tournament
            .fixtures()
            .iter()
            .position(|&f| f == focal)
            .ok_or(Error::UnknownTeam(focal.home))?;
        let mut fixtures = Vec::with_capacity(tournament.fixtures().len());
        for (i, f) in tournament.fixtures().iter().enumerate() {
            if i != focal_pos {
                fixtures.push((idx(f.home)?, idx(f.away)?));
            }
        }
        fixtures.push((idx(focal.home)?, idx(focal.away)?));
        Ok(Compiled {
            pots: tournament.teams().iter().map(|t| t.pot).collect(),
            fixtures,
            tie_rule: tournament.tie_rule(),
        })
    }

    fn focal(&self) -> (usize, usize) {
        *self.fixtures.last().unwrap()
    }

    fn others(&self) -> &[(usize, usize)] {
        &self.fixtures[..self.fixtures.len() - 1]
    }
}

/// Per-worker buffers.
struct Workspace {
    base: Vec<TableRow>,
    rows: Vec<TableRow>,
    matches: Vec<DenseMatch>,
    blocks: TieBlocks,
}

impl Workspace {
    fn new(tournament: &Tournament, compiled: &Compiled) -> Self {
        let rows: Vec<TableRow> = tournament
            .teams()
            .iter()
            .map(|&t| TableRow::new(t))
            .collect();
        Workspace {
            base: rows.clone(),
            rows,
            matches: compiled
                .fixtures
                .iter()
                .map(|&(home, away)| DenseMatch {
                    home,
                    away,
                    score: Scoreline::default(),
                })
                .collect(),
            blocks: TieBlocks::default(),
        }
    }

    /// Simulates every non-focal match into `base`.
    fn sample_others<R: Rng>(
        &mut self,
        compiled: &Compiled,
        model: &GoalModel,
        points: &PointsSystem,
        rng: &mut R,
    ) {
        for r in self.base.iter_mut() {
            *r = TableRow::new(r.team);
        }
        for (slot, &(h, a)) in compiled.others().iter().enumerate() {
            let score = model.sample_scoreline(compiled.pots[h], compiled.pots[a], rng);
            self.matches[slot].score = score;
            let (home, away) = pair_mut(&mut self.base, h, a);
            record(home, away, score, points);
        }
    }

    /// Ranks of the focal home and away teams with the focal match fixed.
    fn focal_ranks<R: Rng>(
        &mut self,
        compiled: &Compiled,
        points: &PointsSystem,
        focal_score: Scoreline,
        tie_rng: &mut R,
    ) -> (usize, usize) {
        let (h, a) = compiled.focal();
        self.rows.copy_from_slice(&self.base);
        {
            let (home, away) = pair_mut(&mut self.rows, h, a);
            record(home, away, focal_score, points);
        }
        match compiled.tie_rule {
            TieRule::League => (
                league_rank_of(&self.rows, h, tie_rng),
                league_rank_of(&self.rows, a, tie_rng),
            ),
            TieRule::HeadToHead => {
                self.matches.last_mut().unwrap().score = focal_score;
                head_to_head_blocks(&self.rows, &self.matches, points, &mut self.blocks);
                (
                    self.blocks.rank_of(h, tie_rng),
                    self.blocks.rank_of(a, tie_rng),
                )
            }
        }
    }
}

const CHUNK: u64 = 1024;

fn tie_rule_tag(rule: TieRule) -> u64 {
    match rule {
        TieRule::HeadToHead => 1,
        TieRule::League => 2,
    }
}

/// Simulates `replications` tournaments conditioned on each focal result
/// and tallies prize indicators for both focal teams at every cutoff.
pub fn simulate_focal(
    tournament: &Tournament,
    focal: Fixture,
    cutoffs: &[usize],
    replications: u64,
    master_seed: u64,
    opts: &EngineOptions,
) -> Result<FocalBatch> {
    if replications == 0 {
        return Err(Error::NoReplications);
    }
    let compiled = Compiled::new(tournament, focal)?;
    let field = tournament.teams().len();
    if let Some(&bad) = cutoffs.iter().find(|&&c| c == 0 || c > field) {
        return Err(Error::CutoffOutOfRange {
            cutoff: bad,
            field_size: field,
        });
    }
    let model = match opts.goal_cap {
        Some(cap) => GoalModel::truncated(opts.params, cap),
        None => GoalModel::new(opts.params),
    };
    let labels = [
        tie_rule_tag(tournament.tie_rule()),
        field as u64,
        tournament.fixtures().len() as u64,
        u64::from(focal.home.pot.get()),
        u64::from(focal.home.index),
        u64::from(focal.away.pot.get()),
        u64::from(focal.away.index),
    ];
    let shared_key = StreamKey::derive(master_seed, &labels);
    // independent streams per conditioning when CRN is off
    let split_keys: Vec<StreamKey> = (0..3u64)
        .map(|c| {
            let mut l = labels.to_vec();
            l.push(0xc0de + c);
            StreamKey::derive(master_seed, &l)
        })
        .collect();

    let run_chunk = |chunk: u64| -> Vec<[OutcomeCounts; 2]> {
        let mut ws = Workspace::new(tournament, &compiled);
        let mut counts = vec![[OutcomeCounts::default(); 2]; cutoffs.len()];
        let end = ((chunk + 1) * CHUNK).min(replications);
        for rep in chunk * CHUNK..end {
            let mut ranks = [(0usize, 0usize); 3];
            if opts.crn {
                let mut rng = shared_key.stream(rep);
                ws.sample_others(&compiled, &model, &opts.points, &mut rng);
                for (c, score) in CONDITIONING.iter().enumerate() {
                    let mut tie_rng = rng.clone();
                    ranks[c] = ws.focal_ranks(&compiled, &opts.points, *score, &mut tie_rng);
                }
            } else {
                for (c, score) in CONDITIONING.iter().enumerate() {
                    let mut rng = split_keys[c].stream(rep);
                    ws.sample_others(&compiled, &model, &opts.points, &mut rng);
                    ranks[c] = ws.focal_ranks(&compiled, &opts.points, *score, &mut rng);
                }
            }
            for (i, &cut) in cutoffs.iter().enumerate() {
                let home = |c: usize| usize::from(ranks[c].0 <= cut);
                let away = |c: usize| usize::from(ranks[c].1 <= cut);
                let home_bits = home(HOME_WIN) << 2 | home(DRAW) << 1 | home(AWAY_WIN);
                let away_bits = away(AWAY_WIN) << 2 | away(DRAW) << 1 | away(HOME_WIN);
                counts[i][Perspective::Home as usize].patterns[home_bits] += 1;
                counts[i][Perspective::Away as usize].patterns[away_bits] += 1;
            }
        }
        counts
    };

    let chunks = replications.div_ceil(CHUNK);
    let reduce = |mut acc: Vec<[OutcomeCounts; 2]>, part: Vec<[OutcomeCounts; 2]>| {
        for (a, p) in acc.iter_mut().zip(&part) {
            a[0].add(&p[0]);
            a[1].add(&p[1]);
        }
        acc
    };
    let empty = || vec![[OutcomeCounts::default(); 2]; cutoffs.len()];
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .expect("thread pool");
    let counts = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(run_chunk)
            .reduce(empty, reduce)
    });
    Ok(FocalBatch {
        focal,
        cutoffs: cutoffs.to_vec(),
        counts,
    })
}

fn format_batch(
    format: Format,
    match_type: MatchType,
    cutoffs: &[usize],
    replications: u64,
    master_seed: u64,
    opts: &EngineOptions,
) -> Result<FocalBatch> {
    let focal = focal_fixture(format, match_type)?;
    simulate_focal(
        &format.tournament(),
        focal,
        cutoffs,
        replications,
        master_seed,
        opts,
    )
}

/// Estimates the incentive of one side of one match type.
///
/// A scenario reuses the stream of the corresponding batch in
/// [`run_figure2`], so both give identical numbers for the same seed.
pub fn run_scenario(scenario: &Scenario, opts: &EngineOptions) -> Result<IncentiveResult> {
    run_cell(scenario, opts)?.incentive
}

/// Like [`run_scenario`], but keeps the probabilities when the ratio is
/// degenerate.
pub fn run_cell(scenario: &Scenario, opts: &EngineOptions) -> Result<CellResult> {
    let ThresholdSpec {
        format,
        rank_cutoff,
    } = ThresholdSpec::new(scenario.threshold.format, scenario.threshold.rank_cutoff)?;
    let batch = format_batch(
        format,
        scenario.match_type,
        &[rank_cutoff],
        scenario.replications,
        scenario.master_seed,
        opts,
    )?;
    let counts = *batch
        .counts(scenario.perspective, rank_cutoff)
        .expect("requested cutoff");
    Ok(CellResult {
        format,
        cutoff: rank_cutoff,
        match_type: scenario.match_type,
        perspective: scenario.perspective,
        replications: scenario.replications,
        seed: scenario.master_seed,
        counts: Some(counts),
        probs: counts.probs(),
        incentive: counts.incentive(opts.degeneracy_factor),
    })
}

/// One cell of the design comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub format: Format,
    pub cutoff: usize,
    pub match_type: MatchType,
    pub perspective: Perspective,
    pub replications: u64,
    pub seed: u64,
    /// Joint indicator counts; absent when the cell was read back from a
    /// report.
    pub counts: Option<OutcomeCounts>,
    pub probs: ProbTriple,
    pub incentive: Result<IncentiveResult>,
}

impl CellResult {
    pub fn sort_key(&self) -> (Format, usize, PotRating, PotRating, Perspective) {
        (
            self.format,
            self.cutoff,
            self.match_type.home_pot,
            self.match_type.away_pot,
            self.perspective,
        )
    }
}

/// Runs one batch per format and match type.
pub fn run_batches(
    formats: &[Format],
    match_types: &[MatchType],
    replications: u64,
    master_seed: u64,
    opts: &EngineOptions,
) -> Result<Vec<CellResult>> {
    let mut cells = Vec::new();
    for &format in formats {
        let cutoffs = format.prize_cutoffs();
        for &match_type in match_types {
            let batch = format_batch(
                format,
                match_type,
                &cutoffs,
                replications,
                master_seed,
                opts,
            )?;
            for cutoff in cutoffs {
                for perspective in Perspective::ALL {
                    let counts = *batch.counts(perspective, cutoff).unwrap();
                    cells.push(CellResult {
                        format,
                        cutoff,
                        match_type,
                        perspective,
                        replications,
                        seed: master_seed,
                        counts: Some(counts),
                        probs: counts.probs(),
                        incentive: counts.incentive(opts.degeneracy_factor),
                    });
                }
            }
        }
    }
    cells.sort_by_key(CellResult::sort_key);
    Ok(cells)
}

/// All 96 cells: 12 cross-pot match types, both sides, two prizes per
/// format. Each league batch serves both sides and both cutoffs.
pub fn run_figure2(
    replications: u64,
    master_seed: u64,
    opts: &EngineOptions,
) -> Result<Vec<CellResult>> {
    run_batches(
        &Format::ALL,
        &Format::cross_pot_types(),
        replications,
        master_seed,
        opts,
    )
}

/// League-over-group improvement for one match type and side, as fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpliftCell {
    pub match_type: MatchType,
    pub perspective: Perspective,
    /// I(top 8) / I(top 2) - 1
    pub first_prize: f64,
    /// I(top 24) / I(top 3) - 1
    pub second_prize: f64,
    /// Delta-method standard errors, treating the two formats as
    /// independent runs.
    pub first_prize_stderr: f64,
    pub second_prize_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uplift {
    /// Arithmetic mean of the per-cell uplifts, in percent.
    pub first_prize_pct: f64,
    pub second_prize_pct: f64,
    pub cells: Vec<UpliftCell>,
}

/// Average relative gain of the league phase over the group stage.
pub fn aggregate_uplift(table: &[CellResult]) -> Result<Uplift> {
    let find = |format: Format, cutoff: usize, mt: MatchType, side: Perspective| {
        table
            .iter()
            .find(|c| {
                c.format == format
                    && c.cutoff == cutoff
                    && c.match_type == mt
                    && c.perspective == side
            })
            .ok_or_else(|| {
                Error::IncompleteTable(format!("missing {format} top-{cutoff} {mt} {side}"))
            })
            .and_then(|c| c.incentive.clone())
    };
    let ratio = |league: &IncentiveResult, group: &IncentiveResult| {
        let r = league.incentive / group.incentive;
        let rel = (league.incentive_stderr / league.incentive).powi(2)
            + (group.incentive_stderr / group.incentive).powi(2);
        (r - 1.0, r.abs() * rel.sqrt())
    };
    let mut cells = Vec::with_capacity(24);
    for mt in Format::cross_pot_types() {
        for side in Perspective::ALL {
            let i2 = find(Format::Group, 2, mt, side)?;
            let i3 = find(Format::Group, 3, mt, side)?;
            let i8 = find(Format::League, 8, mt, side)?;
            let i24 = find(Format::League, 24, mt, side)?;
            let (first_prize, first_prize_stderr) = ratio(&i8, &i2);
            let (second_prize, second_prize_stderr) = ratio(&i24, &i3);
            cells.push(UpliftCell {
                match_type: mt,
                perspective: side,
                first_prize,
                second_prize,
                first_prize_stderr,
                second_prize_stderr,
            });
        }
    }
    let n = cells.len() as f64;
    Ok(Uplift {
        first_prize_pct: 100.0 * cells.iter().map(|c| c.first_prize).sum::<f64>() / n,
        second_prize_pct: 100.0 * cells.iter().map(|c| c.second_prize).sum::<f64>() / n,
        cells,
    })
}

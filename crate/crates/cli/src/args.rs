//! Command-line and config-file parsing.
//!
//! Every setting can come from a flag, from a `key = value` config file
//! given with `--config`, or from a built-in default, in that order of
//! precedence. The thread count additionally falls back to the
//! `INCENTIVE_THREADS` environment variable before the default.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use incentive_core::{
    focal_fixture, EngineOptions, Format, GoalModelParams, MatchType, Perspective, PointsSystem,
    Scenario, ThresholdSpec, DEFAULT_REPLICATIONS,
};

use crate::error::CliError;

pub const THREADS_ENV: &str = "INCENTIVE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "incentive",
    version,
    about = "Monte Carlo estimates of the incentive to attack in round-robin tournaments"
)]
struct Cli {
    /// Optional `key = value` file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Estimate the incentive of one side of one match type.
    Simulate {
        #[arg(long)]
        format: Option<Format>,
        /// Match type as `home_pot-away_pot`, e.g. 4-1.
        #[arg(long = "type", value_name = "H-A")]
        match_type: Option<MatchType>,
        #[arg(long)]
        side: Option<Perspective>,
        /// Prize threshold: finish at this rank or better.
        #[arg(long)]
        cutoff: Option<usize>,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// All 96 cells: 12 cross-pot match types, both sides, two prizes per format.
    Figure2 {
        #[command(flatten)]
        run: RunFlags,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Average league-over-group improvement of the incentive.
    Uplift {
        /// Read cells from a figure2 CSV instead of simulating.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
        /// Also write the per-type uplifts as CSV.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare the engine with exact enumeration on small tournaments.
    OracleCheck {
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Debug, Default, Args)]
struct RunFlags {
    #[arg(long, short = 'n')]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short = 'j')]
    threads: Option<usize>,
    /// Simulate the three focal results independently.
    #[arg(long)]
    no_crn: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Figure2,
    Uplift,
    OracleCheck,
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub format: Option<Format>,
    pub match_type: Option<MatchType>,
    pub perspective: Option<Perspective>,
    pub cutoff: Option<usize>,
    pub replications: u64,
    pub master_seed: u64,
    pub threads: usize,
    pub crn: bool,
    pub output_path: Option<PathBuf>,
    pub input_path: Option<PathBuf>,
    pub params: GoalModelParams,
    pub points: PointsSystem,
}

impl RunConfig {
    pub fn engine_options(&self) -> EngineOptions {
        EngineOptions {
            params: self.params,
            points: self.points,
            crn: self.crn,
            threads: self.threads,
            ..EngineOptions::default()
        }
    }

    /// The single scenario of a `simulate` run.
    pub fn scenario(&self) -> Option<Scenario> {
        Some(Scenario {
            match_type: self.match_type?,
            perspective: self.perspective?,
            threshold: ThresholdSpec::new(self.format?, self.cutoff?).ok()?,
            replications: self.replications,
            master_seed: self.master_seed,
        })
    }
}

const KEYS: [&str; 17] = [
    "format",
    "type",
    "side",
    "cutoff",
    "replications",
    "seed",
    "threads",
    "crn",
    "output",
    "input",
    "alpha_home",
    "beta_home",
    "alpha_away",
    "beta_away",
    "points_win",
    "points_draw",
    "points_loss",
];

/// Parsed `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    n + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.values.get(key).map(|v| v.to_ascii_lowercase()) {
            None => Ok(None),
            Some(v) if ["true", "yes", "on", "1"].contains(&v.as_str()) => Ok(Some(true)),
            Some(v) if ["false", "no", "off", "0"].contains(&v.as_str()) => Ok(Some(false)),
            Some(v) => Err(CliError::Usage(format!(
                "config key `{key}`: expected a boolean, got `{v}`"
            ))),
        }
    }
}

/// Parses `argv` (program name first) using the process environment.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    parse_args_with_env(argv, std::env::var(THREADS_ENV).ok())
}

/// Like [`parse_args`], with the thread environment variable passed in.
pub fn parse_args_with_env<I, T>(
    argv: I,
    env_threads: Option<String>,
) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    resolve(cli.command, &file, env_threads)
}

fn resolve(
    command: CliCommand,
    file: &ConfigFile,
    env_threads: Option<String>,
) -> Result<RunConfig, CliError> {
    let (command, run, format, match_type, side, cutoff, output, input) = match command {
        CliCommand::Simulate {
            format,
            match_type,
            side,
            cutoff,
            run,
            output,
        } => (
            Command::Simulate,
            run,
            format,
            match_type,
            side,
            cutoff,
            output,
            None,
        ),
        CliCommand::Figure2 { run, output } => {
            (Command::Figure2, run, None, None, None, None, output, None)
        }
        CliCommand::Uplift { input, run, output } => {
            (Command::Uplift, run, None, None, None, None, output, input)
        }
        CliCommand::OracleCheck { run } => (
            Command::OracleCheck,
            run,
            None,
            None,
            None,
            None,
            None,
            None,
        ),
    };

    let env_threads = env_threads
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
        })
        .transpose()?;
    let threads = match run.threads.or(file.get("threads")?).or(env_threads) {
        Some(0) => return Err(CliError::Usage("thread count must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let replications = run
        .replications
        .or(file.get("replications")?)
        .unwrap_or(DEFAULT_REPLICATIONS);
    if replications == 0 {
        return Err(CliError::Usage("replications must be at least 1".into()));
    }
    let crn = if run.no_crn {
        false
    } else {
        file.flag("crn")?.unwrap_or(true)
    };

    let fitted = GoalModelParams::FITTED;
    let params = GoalModelParams {
        alpha_home: file.get("alpha_home")?.unwrap_or(fitted.alpha_home),
        beta_home: file.get("beta_home")?.unwrap_or(fitted.beta_home),
        alpha_away: file.get("alpha_away")?.unwrap_or(fitted.alpha_away),
        beta_away: file.get("beta_away")?.unwrap_or(fitted.beta_away),
    };
    let standard = PointsSystem::default();
    let points = PointsSystem {
        win: file.get("points_win")?.unwrap_or(standard.win),
        draw: file.get("points_draw")?.unwrap_or(standard.draw),
        loss: file.get("points_loss")?.unwrap_or(standard.loss),
    };

    let mut config = RunConfig {
        command,
        format: None,
        match_type: None,
        perspective: None,
        cutoff: None,
        replications,
        master_seed: run.seed.or(file.get("seed")?).unwrap_or(0),
        threads,
        crn,
        output_path: output.or(file.get("output")?),
        input_path: None,
        params,
        points,
    };

    match command {
        Command::Simulate => {
            let missing = |what: &str| CliError::Usage(format!("simulate needs --{what}"));
            let format = format
                .or(file.get("format")?)
                .ok_or_else(|| missing("format"))?;
            let match_type = match_type
                .or(file.get("type")?)
                .ok_or_else(|| missing("type"))?;
            let side = side.or(file.get("side")?).ok_or_else(|| missing("side"))?;
            let cutoff = cutoff
                .or(file.get("cutoff")?)
                .ok_or_else(|| missing("cutoff"))?;
            focal_fixture(format, match_type).map_err(|e| CliError::Usage(e.to_string()))?;
            ThresholdSpec::new(format, cutoff).map_err(|e| CliError::Usage(e.to_string()))?;
            config.format = Some(format);
            config.match_type = Some(match_type);
            config.perspective = Some(side);
            config.cutoff = Some(cutoff);
        }
        Command::Uplift => config.input_path = input.or(file.get("input")?),
        Command::Figure2 | Command::OracleCheck => {}
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &str) -> Result<RunConfig, CliError> {
        parse_args_with_env(
            std::iter::once("incentive").chain(line.split_whitespace()),
            None,
        )
    }

    #[test]
    fn simulate_league_scenario() {
        let c = parse("simulate --format league --type 4-1 --side home --cutoff 8").unwrap();
        assert_eq!(c.command, Command::Simulate);
        let s = c.scenario().unwrap();
        assert_eq!(s.match_type, MatchType::from_pots(4, 1).unwrap());
        assert_eq!(s.perspective, Perspective::Home);
        assert_eq!(s.threshold, ThresholdSpec::new(Format::League, 8).unwrap());
        assert_eq!(s.replications, 1_000_000);
        assert_eq!(s.master_seed, 0);
        assert!(c.crn);
    }

    #[test]
    fn same_pot_group_type_is_rejected() {
        let err = parse("simulate --format group --type 3-3 --side home --cutoff 2").unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
        assert!(parse("simulate --format league --type 3-3 --side home --cutoff 2").is_ok());
    }

    #[test]
    fn figure2_batch() {
        let c = parse("figure2 --replications 100000 --seed 42").unwrap();
        assert_eq!(c.command, Command::Figure2);
        assert_eq!((c.replications, c.master_seed), (100_000, 42));
        assert!(c.scenario().is_none());
    }

    #[test]
    fn invalid_values() {
        for line in [
            "simulate --format group --type 5-1 --side home --cutoff 2",
            "simulate --format group --type 1-2 --side home --cutoff 5",
            "simulate --format league --type 1-2 --side home --cutoff 0",
            "simulate --format league --type 1-2 --side middle --cutoff 8",
            "simulate --format cup --type 1-2 --side home --cutoff 8",
            "simulate --format league --type 1-2 --side home",
            "figure2 --threads 0",
            "figure2 --replications 0",
            "figure2 --type 1-2",
            "oracle-check --output x.csv",
        ] {
            assert!(parse(line).is_err(), "{line}");
        }
    }

    #[test]
    fn config_file_and_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(
            &path,
            "# sensitivity run\nformat = league\ntype = 2-3\nside = away\ncutoff = 24\n\
             seed = 9  # trailing comment\nthreads = 3\ncrn = off\nalpha_home = 0.5\n",
        )
        .unwrap();
        let conf = path.to_str().unwrap();
        let c = parse(&format!("--config {conf} simulate --seed 11")).unwrap();
        assert_eq!(c.scenario().unwrap().threshold.rank_cutoff, 24);
        assert_eq!(c.perspective, Some(Perspective::Away));
        assert_eq!(c.master_seed, 11);
        assert_eq!(c.threads, 3);
        assert!(!c.crn);
        assert_eq!(c.params.alpha_home, 0.5);
        assert_eq!(c.params.beta_home, GoalModelParams::FITTED.beta_home);
    }

    #[test]
    fn bad_config_lines() {
        assert!(ConfigFile::parse("replications 10").is_err());
        assert!(ConfigFile::parse("colour = red").is_err());
        let f = ConfigFile::parse("crn = maybe").unwrap();
        assert!(f.flag("crn").is_err());
    }

    #[test]
    fn thread_environment_only_without_flag() {
        let argv = |extra: &[&'static str]| {
            let mut v = vec!["incentive", "figure2"];
            v.extend_from_slice(extra);
            v
        };
        let c = parse_args_with_env(argv(&[]), Some("5".into())).unwrap();
        assert_eq!(c.threads, 5);
        let c = parse_args_with_env(argv(&["--threads", "2"]), Some("5".into())).unwrap();
        assert_eq!(c.threads, 2);
        assert!(parse_args_with_env(argv(&[]), Some("many".into())).is_err());
    }
}

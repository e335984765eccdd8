//! Executes a parsed [`RunConfig`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use incentive_core::{
    aggregate_uplift, check_case, reference_cases, run_cell, run_figure2, CellResult, EngineOptions,
};

use crate::args::{Command, RunConfig};
use crate::error::CliError;
use crate::report::{read_csv, write_csv, write_uplift_csv, write_uplift_text};

/// `oracle-check` passes when every simulated probability is within this
/// many standard errors of the exact one.
pub const ORACLE_TOLERANCE_SE: f64 = 4.0;

/// How a completed run went.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    /// Scenarios that ended in an error state or failed a check.
    pub failures: usize,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failures > 0)
    }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn with_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let mut out = File::create(path)
        .map(BufWriter::new)
        .map_err(io_error(path))?;
    f(&mut out)?;
    out.flush().map_err(io_error(path))
}

/// CSV goes to the configured file, or to `stdout`.
fn emit(cells: &[CellResult], config: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &config.output_path {
        Some(path) => with_file(path, |out| write_csv(cells, out)),
        None => write_csv(cells, stdout),
    }
}

fn count_failures(cells: &[CellResult], stderr: &mut dyn Write) -> usize {
    let mut failures = 0;
    for c in cells {
        if let Err(e) = &c.incentive {
            failures += 1;
            let _ = writeln!(
                stderr,
                "{} top-{} {} {}: {e}",
                c.format, c.cutoff, c.match_type, c.perspective
            );
        }
    }
    failures
}

pub fn execute(
    config: &RunConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let opts = config.engine_options();
    let cells = match config.command {
        Command::Simulate => {
            let scenario = config
                .scenario()
                .ok_or_else(|| CliError::Usage("simulate needs a complete scenario".into()))?;
            vec![run_cell(&scenario, &opts)?]
        }
        Command::Figure2 => run_figure2(config.replications, config.master_seed, &opts)?,
        Command::Uplift => return uplift(config, &opts, stdout),
        Command::OracleCheck => return oracle_check(config, &opts, stdout),
    };
    emit(&cells, config, stdout)?;
    Ok(Outcome {
        failures: count_failures(&cells, stderr),
    })
}

fn uplift(
    config: &RunConfig,
    opts: &EngineOptions,
    stdout: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let cells = match &config.input_path {
        Some(path) => read_csv(File::open(path).map_err(io_error(path))?)?,
        None => run_figure2(config.replications, config.master_seed, opts)?,
    };
    let uplift = aggregate_uplift(&cells)?;
    if let Some(path) = &config.output_path {
        with_file(path, |out| write_uplift_csv(&uplift, out))?;
    }
    write_uplift_text(&uplift, stdout).map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })?;
    Ok(Outcome::default())
}

fn oracle_check(
    config: &RunConfig,
    opts: &EngineOptions,
    stdout: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let mut failures = 0;
    for case in reference_cases() {
        let check = check_case(&case, config.replications, config.master_seed, opts)?;
        let z = check.max_z();
        let pass = z <= ORACLE_TOLERANCE_SE;
        failures += usize::from(!pass);
        let (e, s) = (&check.exact.probs, &check.simulated);
        writeln!(
            stdout,
            "{} {}: exact ({:.6}, {:.6}, {:.6}) simulated ({:.6}, {:.6}, {:.6}) max |z| {:.2}",
            if pass { "PASS" } else { "FAIL" },
            case.name,
            e.p_win,
            e.p_draw,
            e.p_loss,
            s.p_win,
            s.p_draw,
            s.p_loss,
            z
        )
        .map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        })?;
    }
    Ok(Outcome { failures })
}

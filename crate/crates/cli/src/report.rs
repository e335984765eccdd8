//! CSV serialisation of simulation results.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use incentive_core::{
    CellResult, Error as CoreError, Format, IncentiveResult, MatchType, Perspective, ProbTriple,
    Uplift,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const HEADER: &str = "format,prize_cutoff,home_pot,away_pot,perspective,p_win,p_draw,p_loss,\
stderr_win,stderr_draw,stderr_loss,incentive,incentive_stderr,replications,seed";

const MISSING: &str = "NA";

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    format: String,
    prize_cutoff: usize,
    home_pot: u8,
    away_pot: u8,
    perspective: String,
    p_win: String,
    p_draw: String,
    p_loss: String,
    stderr_win: String,
    stderr_draw: String,
    stderr_loss: String,
    incentive: String,
    incentive_stderr: String,
    replications: u64,
    seed: u64,
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

impl From<&CellResult> for Row {
    fn from(c: &CellResult) -> Self {
        let (incentive, incentive_stderr) = match &c.incentive {
            Ok(r) => (fixed(r.incentive), fixed(r.incentive_stderr)),
            Err(_) => (MISSING.to_string(), MISSING.to_string()),
        };
        Row {
            format: c.format.to_string(),
            prize_cutoff: c.cutoff,
            home_pot: c.match_type.home_pot.get(),
            away_pot: c.match_type.away_pot.get(),
            perspective: c.perspective.to_string(),
            p_win: fixed(c.probs.p_win),
            p_draw: fixed(c.probs.p_draw),
            p_loss: fixed(c.probs.p_loss),
            stderr_win: fixed(c.probs.stderr_win),
            stderr_draw: fixed(c.probs.stderr_draw),
            stderr_loss: fixed(c.probs.stderr_loss),
            incentive,
            incentive_stderr,
            replications: c.replications,
            seed: c.seed,
        }
    }
}

/// Writes results in canonical row order, whatever order they come in.
pub fn write_csv<W: Write>(results: &[CellResult], out: W) -> Result<(), CliError> {
    let mut sorted: Vec<&CellResult> = results.iter().collect();
    sorted.sort_by_key(|c| c.sort_key());
    let mut w = csv::Writer::from_writer(out);
    for c in sorted {
        w.serialize(Row::from(c))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv(results: &[CellResult], output_path: &Path) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: output_path.to_path_buf(),
        source,
    };
    let file = File::create(output_path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_csv(results, &mut out)?;
    out.flush().map_err(io_err)
}

/// Reads rows written by [`write_csv`]. Joint indicator counts are not
/// stored, so `counts` is `None`; `NA` incentives come back as errors.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CellResult>, CliError> {
    let mut reader = csv::Reader::from_reader(input);
    let mut cells = Vec::new();
    for (i, record) in reader.deserialize::<Row>().enumerate() {
        let row = record?;
        let bad = |message: String| CliError::Report {
            row: i + 1,
            message,
        };
        let num = |field: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|e| bad(format!("{field} `{v}`: {e}")))
        };
        let format: Format = row.format.parse().map_err(bad)?;
        let perspective: Perspective = row.perspective.parse().map_err(bad)?;
        let match_type =
            MatchType::from_pots(row.home_pot, row.away_pot).map_err(|e| bad(e.to_string()))?;
        let probs = ProbTriple {
            p_win: num("p_win", &row.p_win)?,
            p_draw: num("p_draw", &row.p_draw)?,
            p_loss: num("p_loss", &row.p_loss)?,
            stderr_win: num("stderr_win", &row.stderr_win)?,
            stderr_draw: num("stderr_draw", &row.stderr_draw)?,
            stderr_loss: num("stderr_loss", &row.stderr_loss)?,
        };
        let incentive = if row.incentive == MISSING {
            Err(CoreError::IncompleteTable(format!(
                "{format} top-{} {match_type} {perspective} has no incentive",
                row.prize_cutoff
            )))
        } else {
            Ok(IncentiveResult {
                probs,
                incentive: num("incentive", &row.incentive)?,
                incentive_stderr: num("incentive_stderr", &row.incentive_stderr)?,
            })
        };
        cells.push(CellResult {
            format,
            cutoff: row.prize_cutoff,
            match_type,
            perspective,
            replications: row.replications,
            seed: row.seed,
            counts: None,
            probs,
            incentive,
        });
    }
    Ok(cells)
}

/// Per-type uplifts in percent.
pub fn write_uplift_csv<W: Write>(uplift: &Uplift, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "home_pot",
        "away_pot",
        "perspective",
        "first_prize_pct",
        "first_prize_stderr_pct",
        "second_prize_pct",
        "second_prize_stderr_pct",
    ])?;
    for c in &uplift.cells {
        w.write_record([
            c.match_type.home_pot.to_string(),
            c.match_type.away_pot.to_string(),
            c.perspective.to_string(),
            fixed(100.0 * c.first_prize),
            fixed(100.0 * c.first_prize_stderr),
            fixed(100.0 * c.second_prize),
            fixed(100.0 * c.second_prize_stderr),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Human-readable uplift summary.
pub fn write_uplift_text<W: Write>(uplift: &Uplift, mut out: W) -> io::Result<()> {
    writeln!(out, "type  side  first prize  second prize")?;
    for c in &uplift.cells {
        writeln!(
            out,
            "{:<5} {:<5} {:>10.1}%  {:>11.1}%",
            c.match_type.to_string(),
            c.perspective.to_string(),
            100.0 * c.first_prize,
            100.0 * c.second_prize
        )?;
    }
    writeln!(
        out,
        "mean        {:>10.1}%  {:>11.1}%",
        uplift.first_prize_pct, uplift.second_prize_pct
    )
}

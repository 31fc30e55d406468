//! Command-line entry point.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::config::ScenarioFile;
use crate::engine::ChargeMode;
use crate::output::format_report;
use crate::sweep::{expand, run_cells, Cell};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Plug,
    Swap,
}

impl From<ModeArg> for ChargeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Plug => ChargeMode::Plug,
            ModeArg::Swap => ChargeMode::Swap,
        }
    }
}

/// Simulate an electric AGV fleet serving an aluminium smelter.
#[derive(Debug, Parser)]
#[command(name = "fleetsim", version)]
pub struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Map file, overriding the scenario's.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Simulated duration, s.
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Coverage snapshot times, s (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
    /// Only print warnings and errors.
    #[arg(long)]
    pub quiet: bool,
}

fn init_logging(quiet: bool) {
    let level = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    init_logging(args.quiet);

    let mut file = match ScenarioFile::load(&args.config) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(map) = &args.map {
        file.map = Some(map.clone());
    }
    if let Some(d) = args.duration {
        file.duration_s = d;
    }
    if let Some(s) = args.seed {
        file.seed = s;
    }
    if let Some(m) = args.mode {
        file.mode = m.into();
    }
    if let Some(t) = &args.snapshot_times {
        file.snapshot_times_s = t.clone();
    }
    if let Err(e) = file.validate(&args.config) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }

    let base = file.config();
    let swept = file.sweep.is_some();
    let cells = match &file.sweep {
        Some(s) => expand(&base, s),
        None => vec![Cell {
            id: String::new(),
            config: base,
        }],
    };
    log::info!("running {} scenario(s)", cells.len());
    let outcomes = if swept {
        run_cells(&cells, Some(&args.out))
    } else {
        // a single run writes straight into --out
        let mut o = run_cells(&cells, None);
        if let Some(Ok((log, rows))) = o.first_mut().map(|c| c.result.as_mut()) {
            match crate::output::write_all(&args.out, log, &cells[0].config) {
                Ok(r) => *rows = r,
                Err(e) => o[0].result = Err(e.into()),
            }
        }
        o
    };

    let mut code = EXIT_OK;
    for o in &outcomes {
        match &o.result {
            Ok((_, rows)) => {
                if !args.quiet {
                    if swept {
                        println!("[{}]", o.id);
                    }
                    print!("{}", format_report(rows));
                }
            }
            Err(e) => {
                if swept {
                    eprintln!("error: [{}] {e}", o.id);
                } else {
                    eprintln!("error: {e}");
                }
                code = EXIT_RUNTIME;
            }
        }
    }
    code
}

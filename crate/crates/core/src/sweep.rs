//! Batches of scenario variations, run in parallel.
//!
//! Each cell is an independent simulation with its own configuration; its
//! outputs go to `<out>/<cell-id>/` and depend on nothing but that cell.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::SweepSpec;
use crate::engine::{run, ChargeMode, EngineError, MetricsLog, SimConfig};
use crate::output::{write_all, OutputError, ReportRow};

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    pub config: SimConfig,
}

fn mode_name(m: ChargeMode) -> &'static str {
    match m {
        ChargeMode::Plug => "plug",
        ChargeMode::Swap => "swap",
    }
}

/// Cartesian product of the sweep lists applied to `base`. An empty list
/// keeps the base value for that dimension.
pub fn expand(base: &SimConfig, sweep: &SweepSpec) -> Vec<Cell> {
    fn or_base<T: Clone>(list: &[T], base: T) -> Vec<T> {
        if list.is_empty() {
            vec![base]
        } else {
            list.to_vec()
        }
    }
    let fleets = or_base(&sweep.fleets, base.fleet);
    let weights = or_base(
        &sweep.weights,
        crate::config::WeightPair {
            w_visit: base.weights.w_visit,
            w_surv: base.weights.w_surv,
        },
    );
    let modes = or_base(&sweep.modes, base.mode);
    let seeds = or_base(&sweep.seeds, base.seed);

    let mut cells = Vec::new();
    for fleet in &fleets {
        for w in &weights {
            for &mode in &modes {
                for &seed in &seeds {
                    let mut config = base.clone();
                    config.fleet = *fleet;
                    config.weights.w_visit = w.w_visit;
                    config.weights.w_surv = w.w_surv;
                    config.mode = mode;
                    config.seed = seed;
                    let id = format!(
                        "fleet{fleet}_{}_wv{}_ws{}_seed{seed}",
                        mode_name(mode),
                        w.w_visit,
                        w.w_surv
                    );
                    cells.push(Cell { id, config });
                }
            }
        }
    }
    cells
}

#[derive(Debug, thiserror::Error)]
pub enum CellError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

#[derive(Debug)]
pub struct CellOutcome {
    pub id: String,
    pub dir: Option<PathBuf>,
    pub result: Result<(MetricsLog, Vec<ReportRow>), CellError>,
}

/// Runs every cell in parallel. With `out` set, each cell writes its files
/// into its own subdirectory. Outcomes keep the order of `cells`.
pub fn run_cells(cells: &[Cell], out: Option<&Path>) -> Vec<CellOutcome> {
    cells
        .par_iter()
        .map(|cell| {
            let dir = out.map(|o| o.join(&cell.id));
            let result = (|| {
                let log = run(&cell.config)?;
                let rows = match &dir {
                    Some(d) => write_all(d, &log, &cell.config)?,
                    None => Vec::new(),
                };
                Ok((log, rows))
            })();
            CellOutcome {
                id: cell.id.clone(),
                dir,
                result,
            }
        })
        .collect()
}

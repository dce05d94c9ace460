//! File-level entry points: one scenario into a directory, or a sweep into
//! a summary table.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::config::{LoadedScenario, SweepCell, SweepSpec};
use crate::economics::Policy;
use crate::engine::{run, DemandSource};
use crate::error::{Error, Result};
use crate::io::fmt_cents;
use crate::kpi::KpiReport;
use crate::shareability::{enumerate_rides, write_rides};

/// Process exit status for an error: 2 for bad input, 3 for IO failures,
/// 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 3,
        Error::Config(_) | Error::Parse { .. } | Error::InvalidArgument(_) | Error::Validation(_) => 2,
        Error::NotFound(_) | Error::Unreachable { .. } => 2,
        Error::Internal(_) => 1,
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Runs one scenario and writes `events.csv`, `outcomes.csv`, `drivers.csv`
/// and `kpi.toml` (plus `rides.csv` if requested) into `out_dir`.
pub fn run_scenario(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    policy: Option<Policy>,
) -> Result<KpiReport> {
    let loaded = LoadedScenario::read(config_path)?;
    let cfg = loaded.scenario(seed, policy)?;
    std::fs::create_dir_all(out_dir)?;

    let log = run(&cfg)?;
    let report = KpiReport::from_log(&log);
    log.write_all(out_dir)?;
    let mut w = create(&out_dir.join("kpi.toml"))?;
    w.write_all(report.to_toml().as_bytes())?;
    w.flush()?;

    if loaded.file.output.dump_rides {
        let requests = cfg.requests()?;
        let rides = enumerate_rides(&requests, &cfg.network, &cfg.travellers, &cfg.shareability())?;
        write_rides(out_dir.join("rides.csv"), &rides)?;
    }
    log::info!(
        "{} ({}, seed {}): {}/{} served",
        config_path.display(),
        cfg.pricing.policy,
        cfg.seed,
        report.n_served,
        report.n_requests
    );
    Ok(report)
}

/// Outcome of one sweep cell.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub result: std::result::Result<KpiReport, String>,
}

pub const SUMMARY_HEADER: &str =
    "policy,n_drivers,req_rate,seed,service_rate,gini,commission_eur,wait_mean_s,occupancy,status";

impl SweepRow {
    fn line(&self) -> String {
        let c = &self.cell;
        let mut s = format!("{},{},{},{}", c.policy, c.drivers, c.rate_per_h, c.seed);
        match &self.result {
            Ok(k) => {
                let wait = k.waits.as_ref().map_or_else(String::new, |w| format!("{:.6}", w.mean));
                let _ = write!(
                    s,
                    ",{:.6},{:.6},{},{wait},{:.6},ok",
                    k.service_rate,
                    k.revenue_gini,
                    fmt_cents(k.platform_commission_total.0),
                    k.occupancy
                );
            }
            Err(e) => {
                let msg: String = e.chars().map(|ch| if ch == ',' || ch == '\n' { ' ' } else { ch }).collect();
                let _ = write!(s, ",,,,,,error: {msg}");
            }
        }
        s
    }
}

/// Runs every cell of the sweep on `parallelism` threads. Failed cells are
/// reported in their row; the sweep itself only fails on bad input or IO.
pub fn run_sweep_cells(sweep_path: &Path, parallelism: usize) -> Result<Vec<SweepRow>> {
    let (spec, base) = SweepSpec::read(sweep_path)?;
    let network = Arc::new(base.network()?);
    // surface config problems once rather than in every row
    base.scenario_on(network.clone(), None, Some(spec.policies[0]))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let cells = spec.cells();
    let rows = pool.install(|| {
        cells
            .par_iter()
            .map(|&cell| {
                let result = base
                    .scenario_on(network.clone(), Some(cell.seed), Some(cell.policy))
                    .and_then(|mut cfg| {
                        cfg.supply.drivers = cell.drivers;
                        if let DemandSource::Poisson { rate_per_hour, .. } = &mut cfg.demand {
                            *rate_per_hour = cell.rate_per_h;
                        }
                        cfg.validate()?;
                        run(&cfg)
                    })
                    .map(|log| KpiReport::from_log(&log))
                    .map_err(|e| e.to_string());
                if let Err(e) = &result {
                    log::warn!("cell {cell:?} failed: {e}");
                }
                SweepRow { cell, result }
            })
            .collect()
    });
    Ok(rows)
}

/// Runs a sweep and writes `summary.csv` into `out_dir`. Returns the rows.
pub fn run_sweep(sweep_path: &Path, out_dir: &Path, parallelism: usize) -> Result<Vec<SweepRow>> {
    let rows = run_sweep_cells(sweep_path, parallelism)?;
    std::fs::create_dir_all(out_dir)?;
    let mut w = create(&out_dir.join("summary.csv"))?;
    writeln!(w, "{SUMMARY_HEADER}")?;
    for r in &rows {
        writeln!(w, "{}", r.line())?;
    }
    w.flush()?;
    Ok(rows)
}

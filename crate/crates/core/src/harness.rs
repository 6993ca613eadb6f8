//! Replicated runs, parameter sweeps and the experiment recipes built on
//! them, with CSV persistence.
//!
//! Replication `i` of sweep point `j` always runs with seed
//! `stream_seed(master_seed, j, i)`, so results do not depend on how
//! replications are scheduled across threads.

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run, EngineError, Mode, RunResult, SimConfig, StepTelemetry};
use crate::rng::{sim_rng, stream_seed};
use crate::stats::{linear_regression, Regression, StatsError};
use crate::workloads::{DagError, LayeredDagParams, WorkloadSpec};

pub const DEFAULT_REPLICATIONS: usize = 1000;

/// Point index reserved for drawing the fixed workload of a sweep point.
const WORKLOAD_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: column {column:?} not found")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: {value:?} is not a number")]
    BadNumber {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The parameter a sweep varies; every other field comes from the base.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepAxis {
    #[default]
    None,
    /// Total work per point; the workload is rebuilt for the base mode.
    Work {
        values: Vec<u64>,
    },
    Processors {
        values: Vec<usize>,
    },
    /// Modes per point, keeping the base total work.
    Mode {
        values: Vec<Mode>,
    },
    /// Standard versus cooperative stealing.
    Cooperative {
        values: Vec<bool>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SimConfig,
    #[serde(default)]
    pub axis: SweepAxis,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Rebuilt DAG workloads use a long critical path (`D ≈ W / 4m`).
    #[serde(default)]
    pub dag_long_path: bool,
}

fn default_reps() -> usize {
    DEFAULT_REPLICATIONS
}

/// Workload of `mode` with total work close to `w`: unit tasks exactly,
/// weighted tasks with processing times uniform in `1..=10`, or a layered
/// DAG sized by [`LayeredDagParams::for_work`].
pub fn workload_for(
    mode: Mode,
    w: u64,
    m: usize,
    long_path: bool,
    seed: u64,
) -> Result<WorkloadSpec, HarnessError> {
    let mut rng = sim_rng(seed);
    Ok(match mode {
        Mode::Unit => WorkloadSpec::UnitTasks { w },
        Mode::Weighted => {
            let n = ((w as f64 / 5.5).round() as usize).max(1);
            WorkloadSpec::uniform_weighted(n, 1, 10, &mut rng)
        }
        Mode::Dag => WorkloadSpec::DagTasks {
            dag: LayeredDagParams::for_work(w, m, long_path).generate(&mut rng)?,
        },
    })
}

impl SweepSpec {
    pub fn new(base: SimConfig, axis: SweepAxis, replications: usize, master_seed: u64) -> Self {
        SweepSpec {
            base,
            axis,
            replications,
            master_seed,
            dag_long_path: false,
        }
    }

    /// Configuration of each sweep point; seeds are set per replication.
    pub fn points(&self) -> Result<Vec<SimConfig>, HarnessError> {
        let base = &self.base;
        let rebuild = |j: usize, mode: Mode, w: u64, m: usize| {
            workload_for(
                mode,
                w,
                m,
                self.dag_long_path,
                stream_seed(self.master_seed, WORKLOAD_STREAM, j as u64),
            )
        };
        let pts = match &self.axis {
            SweepAxis::None => vec![base.clone()],
            SweepAxis::Work { values } => values
                .iter()
                .enumerate()
                .map(|(j, &w)| {
                    Ok(SimConfig {
                        workload: rebuild(j, base.mode, w, base.m)?,
                        ..base.clone()
                    })
                })
                .collect::<Result<_, HarnessError>>()?,
            SweepAxis::Processors { values } => values
                .iter()
                .map(|&m| SimConfig { m, ..base.clone() })
                .collect(),
            SweepAxis::Mode { values } => values
                .iter()
                .enumerate()
                .map(|(j, &mode)| {
                    let same = mode == base.mode;
                    Ok(SimConfig {
                        mode,
                        workload: if same {
                            base.workload.clone()
                        } else {
                            rebuild(j, mode, base.total_work(), base.m)?
                        },
                        protocol: if mode == Mode::Unit {
                            base.protocol
                        } else {
                            Default::default()
                        },
                        initial: if mode == Mode::Dag {
                            Default::default()
                        } else {
                            base.initial.clone()
                        },
                        ..base.clone()
                    })
                })
                .collect::<Result<_, HarnessError>>()?,
            SweepAxis::Cooperative { values } => values
                .iter()
                .map(|&c| {
                    let mut cfg = base.clone();
                    cfg.protocol.cooperative = c;
                    cfg
                })
                .collect(),
        };
        if pts.is_empty() {
            return Err(HarnessError::InvalidSpec(
                "the sweep axis lists no values".into(),
            ));
        }
        for p in &pts {
            p.validate().map_err(EngineError::from)?;
        }
        Ok(pts)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub seed: u64,
    pub mode: Mode,
    pub m: usize,
    #[serde(rename = "W")]
    pub w: u64,
    #[serde(rename = "D")]
    pub d: u64,
    pub cmax: u64,
    pub steals_total: u64,
    pub steals_ok: u64,
    pub steals_fail: u64,
    pub phi0: f64,
}

pub const CSV_HEADER: &str = "seed,mode,m,W,D,cmax,steals_total,steals_ok,steals_fail,phi0";

impl ExperimentRecord {
    pub fn from_run(cfg: &SimConfig, r: &RunResult) -> Self {
        ExperimentRecord {
            seed: cfg.seed,
            mode: cfg.mode,
            m: cfg.m,
            w: r.work,
            d: r.critical_path.unwrap_or(0),
            cmax: r.cmax,
            steals_total: r.steals_total,
            steals_ok: r.steals_ok,
            steals_fail: r.steals_fail,
            phi0: r.phi0,
        }
    }
}

/// A finished replication with its position in the sweep.
#[derive(Clone, Debug)]
pub struct Replication {
    pub point: usize,
    pub rep: usize,
    pub config: SimConfig,
    pub result: RunResult,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

/// Runs `reps` replications of `config` as sweep point `point`.
pub fn replicate(
    config: &SimConfig,
    reps: usize,
    master_seed: u64,
    point: usize,
    exec: Execution,
) -> Result<Vec<RunResult>, EngineError> {
    let one = |i: usize| {
        let mut cfg = config.clone();
        cfg.seed = stream_seed(master_seed, point as u64, i as u64);
        run(&cfg)
    };
    match exec {
        Execution::Serial => (0..reps).map(one).collect(),
        Execution::Parallel => (0..reps).into_par_iter().map(one).collect(),
    }
}

pub fn run_sweep_detailed(
    spec: &SweepSpec,
    exec: Execution,
) -> Result<Vec<Replication>, HarnessError> {
    let points = spec.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|j| (0..spec.replications).map(move |i| (j, i)))
        .collect();
    let one = |&(j, i): &(usize, usize)| -> Result<Replication, EngineError> {
        let mut cfg = points[j].clone();
        cfg.seed = stream_seed(spec.master_seed, j as u64, i as u64);
        let result = run(&cfg)?;
        Ok(Replication {
            point: j,
            rep: i,
            config: cfg,
            result,
        })
    };
    let out: Result<Vec<_>, EngineError> = match exec {
        Execution::Serial => jobs.iter().map(one).collect(),
        Execution::Parallel => jobs.par_iter().map(one).collect(),
    };
    Ok(out?)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ExperimentRecord>, HarnessError> {
    Ok(run_sweep_detailed(spec, Execution::Parallel)?
        .iter()
        .map(|r| ExperimentRecord::from_run(&r.config, &r.result))
        .collect())
}

fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Writes `records` to `path` through `<path>.partial`, renamed into place
/// once complete. On failure the `.partial` file is left behind as a marker.
pub fn write_csv(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    let tmp = partial_path(path);
    let csv_err = |source| HarnessError::Csv {
        path: tmp.clone(),
        source,
    };
    let mut w = csv::Writer::from_path(&tmp).map_err(csv_err)?;
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(&tmp))?;
    drop(w);
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Sidecar directory holding per-replication potential series.
pub fn sidecar_dir(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".phi");
    PathBuf::from(s)
}

fn write_series(path: &Path, phi0: f64, tel: &[StepTelemetry]) -> Result<(), HarnessError> {
    let mut buf = String::from("t,r_t,phi\n");
    buf.push_str(&format!("0,0,{phi0}\n"));
    for s in tel {
        let phi = s.phi.map_or(String::new(), |p| p.to_string());
        buf.push_str(&format!("{},{},{}\n", s.t + 1, s.r_t, phi));
    }
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(buf.as_bytes()).map_err(io_err(path))
}

/// Runs the sweep and writes its CSV to `out`. With `record_potential` set
/// on the base config, each replication's potential series also goes to
/// `<out>.phi/point{j}_rep{i}.csv` (columns `t,r_t,phi`; `r_t` is the
/// number of requests sent in the slot ending at `t`).
pub fn write_sweep(
    spec: &SweepSpec,
    out: &Path,
    exec: Execution,
) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let reps = run_sweep_detailed(spec, exec)?;
    if spec.base.record_potential {
        let dir = sidecar_dir(out);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for r in &reps {
            if let Some(tel) = &r.result.telemetry {
                let p = dir.join(format!("point{}_rep{}.csv", r.point, r.rep));
                write_series(&p, r.result.phi0, tel)?;
            }
        }
    }
    let records: Vec<_> = reps
        .iter()
        .map(|r| ExperimentRecord::from_run(&r.config, &r.result))
        .collect();
    write_csv(&records, out)?;
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    rd.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

/// Numeric values of one named column.
pub fn read_column(path: &Path, column: &str) -> Result<Vec<f64>, HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let idx = rd
        .headers()
        .map_err(csv_err)?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| HarnessError::MissingColumn {
            path: path.to_path_buf(),
            column: column.to_string(),
        })?;
    let mut out = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let raw = rec.get(idx).unwrap_or("");
        out.push(raw.trim().parse().map_err(|_| HarnessError::BadNumber {
            path: path.to_path_buf(),
            row: row + 1,
            value: raw.to_string(),
        })?);
    }
    Ok(out)
}

/// Makespan overhead `cmax - ceil(W/m)` of each record.
pub fn overheads(records: &[ExperimentRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.cmax as f64 - r.w.div_ceil(r.m as u64) as f64)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeResult {
    pub m: usize,
    pub cooperative: bool,
    pub regression: Regression,
    /// `(W, mean R / m)` per point.
    pub points: Vec<(u64, f64)>,
}

/// Regresses the mean steal overhead `R / m` on `log2 W` for unit tasks all
/// starting on processor 0.
pub fn slope_experiment(
    m: usize,
    w_list: &[u64],
    reps: usize,
    cooperative: bool,
    master_seed: u64,
) -> Result<SlopeResult, HarnessError> {
    let (lo, hi) = (
        w_list.iter().copied().min().unwrap_or(0),
        w_list.iter().copied().max().unwrap_or(0),
    );
    if w_list.len() < 3 || lo == 0 || hi < 16 * lo {
        return Err(HarnessError::InvalidSpec(
            "slope sweep needs at least 3 positive W values spanning 4 octaves".into(),
        ));
    }
    if reps == 0 {
        return Err(HarnessError::InvalidSpec(
            "replications must be positive".into(),
        ));
    }
    let mut points = Vec::with_capacity(w_list.len());
    for (j, &w) in w_list.iter().enumerate() {
        let mut cfg = SimConfig::unit(m, w, 0);
        cfg.protocol.cooperative = cooperative;
        let runs = replicate(&cfg, reps, master_seed, j, Execution::Parallel)?;
        let mean_r = runs.iter().map(|r| r.steals_total as f64).sum::<f64>() / reps as f64;
        points.push((w, mean_r / m as f64));
    }
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).log2()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    Ok(SlopeResult {
        m,
        cooperative,
        regression: linear_regression(&x, &y)?,
        points,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoopRatio {
    pub m: usize,
    pub w: u64,
    pub mean_standard: f64,
    pub mean_cooperative: f64,
    /// `1 - mean R_coop / mean R_std`.
    pub ratio: f64,
}

/// Standard and cooperative stealing on the same seeds; returns the
/// relative reduction in steal requests.
pub fn coop_ratio_experiment(
    m: usize,
    w: u64,
    reps: usize,
    master_seed: u64,
) -> Result<CoopRatio, HarnessError> {
    if reps == 0 {
        return Err(HarnessError::InvalidSpec(
            "replications must be positive".into(),
        ));
    }
    let std_cfg = SimConfig::unit(m, w, 0);
    let mut coop_cfg = std_cfg.clone();
    coop_cfg.protocol.cooperative = true;
    let mean = |runs: Vec<RunResult>| {
        runs.iter().map(|r| r.steals_total as f64).sum::<f64>() / reps as f64
    };
    let s = mean(replicate(
        &std_cfg,
        reps,
        master_seed,
        0,
        Execution::Parallel,
    )?);
    let c = mean(replicate(
        &coop_cfg,
        reps,
        master_seed,
        0,
        Execution::Parallel,
    )?);
    Ok(CoopRatio {
        m,
        w,
        mean_standard: s,
        mean_cooperative: c,
        ratio: if s == 0.0 { 0.0 } else { 1.0 - c / s },
    })
}

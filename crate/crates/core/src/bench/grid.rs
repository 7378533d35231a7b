use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::config::{budget_for, Algorithm, CellSpec, ExperimentConfig};
use super::knn::knn_kl_estimate;
use crate::distributions::PairSpec;
use crate::error::{Error, Result};
use crate::randomness::{derive_seed, keyed_uniform, DrawSlot, StreamKey};

/// Namespace of the reference target samples in bias runs.
const REFERENCE_NAMESPACE: u64 = u64::MAX;

/// One CSV row. Bias rows carry batch means in `steps`, `depth` and `payload_bits`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub family: String,
    pub d_kl_nats: f64,
    pub d_inf_nats: f64,
    pub n_modes: u32,
    pub t_extra_bits: Option<u32>,
    pub trial_index: u64,
    pub steps: Option<f64>,
    pub depth: Option<f64>,
    pub payload_bits: Option<f64>,
    pub kl_bias_estimate: Option<f64>,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str =
    "algorithm,family,d_kl_nats,d_inf_nats,n_modes,t_extra_bits,trial_index,\
steps,depth,payload_bits,kl_bias_estimate,error";

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidParameters(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    }
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidParameters(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::InvalidParameters(format!("csv: {e}")))
}

struct Cell {
    spec: CellSpec,
    pair: PairSpec,
    d_kl: f64,
    d_inf: f64,
}

impl Cell {
    fn new(spec: CellSpec) -> Result<Self> {
        let pair = spec.pair()?;
        let d_kl = pair.analytic_kl()?;
        let d_inf = pair.analytic_dinf();
        Ok(Self {
            spec,
            pair,
            d_kl,
            d_inf,
        })
    }

    fn row(&self, algorithm: Algorithm, t: Option<u32>, trial_index: u64) -> ResultRow {
        ResultRow {
            algorithm: algorithm.name().to_string(),
            family: self.spec.family().to_string(),
            d_kl_nats: self.d_kl,
            d_inf_nats: self.d_inf,
            n_modes: self.spec.n_modes(),
            t_extra_bits: t,
            trial_index,
            steps: None,
            depth: None,
            payload_bits: None,
            kl_bias_estimate: None,
            error: None,
        }
    }
}

struct Job {
    cell: usize,
    algorithm: Algorithm,
    extra_bits: Option<u32>,
}

fn jobs(config: &ExperimentConfig, cells: &[Cell]) -> Vec<Job> {
    let mut out = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for &algorithm in &config.algorithms {
            if algorithm == Algorithm::Pfr && cell.d_inf > config.pfr_max_dinf_nats {
                log::info!(
                    "skipping PFR on {:?}: D_inf {} above limit",
                    cell.spec,
                    cell.d_inf
                );
                continue;
            }
            if algorithm.is_budgeted() {
                out.extend(config.extra_bits.iter().map(|&t| Job {
                    cell: ci,
                    algorithm,
                    extra_bits: Some(t),
                }));
            } else {
                out.push(Job {
                    cell: ci,
                    algorithm,
                    extra_bits: None,
                });
            }
        }
    }
    out
}

fn trial_seed(config: &ExperimentConfig, trial: u64) -> u64 {
    derive_seed(config.seed, trial)
}

fn prepare(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    config.validate()?;
    config.cells.iter().map(|&c| Cell::new(c)).collect()
}

/// One encode per (cell, algorithm, extra bits, trial), with step counts.
///
/// Rows come out in job order whatever the thread schedule. Failed trials are
/// recorded in the `error` column.
pub fn run_runtime_grid(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let cells = prepare(config)?;
    let jobs = jobs(config, &cells);
    let tasks: Vec<(usize, u64)> = (0..jobs.len())
        .flat_map(|j| (0..config.trials as u64).map(move |t| (j, t)))
        .collect();
    Ok(tasks
        .par_iter()
        .map(|&(j, trial)| {
            let job = &jobs[j];
            let cell = &cells[job.cell];
            let budget = job.extra_bits.map_or(0, |t| budget_for(cell.d_kl, t));
            let coder = job.algorithm.coder(budget, config.pfr_max_steps);
            let mut row = cell.row(job.algorithm, job.extra_bits, trial);
            match coder.encode(&cell.pair, trial_seed(config, trial)) {
                Ok(e) => {
                    row.steps = Some(e.stats.steps as f64);
                    row.depth = Some(e.code.depth_or_budget as f64);
                    row.payload_bits = Some(e.stats.payload_bits as f64);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect())
}

/// Same as the runtime grid, restricted to mixture cells at one D∞.
pub fn run_mode_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut d_inf = None;
    for cell in &config.cells {
        let CellSpec::Mixture { d_inf_nats, .. } = *cell else {
            return Err(Error::InvalidParameters(
                "mode sweep takes mixture cells only".into(),
            ));
        };
        if d_inf.is_some_and(|d| d != d_inf_nats) {
            return Err(Error::InvalidParameters(
                "mode sweep cells must share one D_inf".into(),
            ));
        }
        d_inf = Some(d_inf_nats);
    }
    run_runtime_grid(config)
}

/// Bias rows: each repeat encodes `batch_size` samples and compares them with
/// as many fresh target samples through the k-NN KL estimator.
///
/// Encoder seeds and reference samples are shared across algorithms and extra
/// bits, so differences between rows are not diluted by independent noise.
pub fn run_bias_grid(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let cells = prepare(config)?;
    let jobs = jobs(config, &cells);
    let tasks: Vec<(usize, u64)> = (0..jobs.len())
        .flat_map(|j| (0..config.bias_repeats as u64).map(move |r| (j, r)))
        .collect();
    let batch = config.batch_size as u64;
    let reference_seed = derive_seed(config.seed, REFERENCE_NAMESPACE);

    Ok(tasks
        .par_iter()
        .map(|&(j, repeat)| {
            let job = &jobs[j];
            let cell = &cells[job.cell];
            let budget = job.extra_bits.map_or(0, |t| budget_for(cell.d_kl, t));
            let coder = job.algorithm.coder(budget, config.pfr_max_steps);
            let mut row = cell.row(job.algorithm, job.extra_bits, repeat);

            let run = || -> Result<(f64, f64, f64, f64)> {
                let (mut steps, mut depth, mut bits) = (0.0, 0.0, 0.0);
                let mut encoded = Vec::with_capacity(batch as usize);
                let mut reference = Vec::with_capacity(batch as usize);
                for i in 0..batch {
                    let index = repeat * batch + i;
                    let e = coder.encode(&cell.pair, trial_seed(config, index))?;
                    steps += e.stats.steps as f64;
                    depth += e.code.depth_or_budget as f64;
                    bits += e.stats.payload_bits as f64;
                    encoded.push(e.sample);
                    let u = keyed_uniform(StreamKey::new(reference_seed, index, DrawSlot::Sample));
                    reference.push(cell.pair.target().inv_cdf(u)?);
                }
                let bias = knn_kl_estimate(&encoded, &reference, 1)?;
                let b = batch as f64;
                Ok((steps / b, depth / b, bits / b, bias))
            };
            match run() {
                Ok((steps, depth, bits, bias)) => {
                    row.steps = Some(steps);
                    row.depth = Some(depth);
                    row.payload_bits = Some(bits);
                    row.kl_bias_estimate = Some(bias);
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect())
}

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything needed to reproduce one run, plus its outcome.
///
/// `rho` and `delta` are always present. For gw they are the zCDP guarantee
/// implied by (`epsilon`, `delta_dp`) at `delta` = `equiv_delta_cdp`; for the
/// Gaussian mechanisms `epsilon` and `delta_dp` are absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mechanism: String,
    pub rho: f64,
    pub delta: f64,
    pub epsilon: Option<f64>,
    pub delta_dp: Option<f64>,
    pub delta0: usize,
    pub iterations: usize,
    pub ratio: f64,
    pub seed: u64,
    pub workers: usize,
    pub buffer: Option<f64>,
    pub gw_truncation: String,
    pub dataset: String,
    pub num_users: usize,
    pub partitions_released: usize,
    pub elapsed_ms: u64,
    pub per_iteration_counts: Vec<usize>,
    pub engine_stages: u32,
}

/// Flat CSV form; `per_iteration_counts` is `;`-joined.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    mechanism: String,
    rho: f64,
    delta: f64,
    epsilon: Option<f64>,
    delta_dp: Option<f64>,
    delta0: usize,
    iterations: usize,
    ratio: f64,
    seed: u64,
    workers: usize,
    buffer: Option<f64>,
    gw_truncation: String,
    dataset: String,
    num_users: usize,
    partitions_released: usize,
    elapsed_ms: u64,
    per_iteration_counts: String,
    engine_stages: u32,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        CsvRow {
            mechanism: r.mechanism.clone(),
            rho: r.rho,
            delta: r.delta,
            epsilon: r.epsilon,
            delta_dp: r.delta_dp,
            delta0: r.delta0,
            iterations: r.iterations,
            ratio: r.ratio,
            seed: r.seed,
            workers: r.workers,
            buffer: r.buffer,
            gw_truncation: r.gw_truncation.clone(),
            dataset: r.dataset.clone(),
            num_users: r.num_users,
            partitions_released: r.partitions_released,
            elapsed_ms: r.elapsed_ms,
            per_iteration_counts: r
                .per_iteration_counts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            engine_stages: r.engine_stages,
        }
    }
}

impl TryFrom<CsvRow> for RunReport {
    type Error = CliError;

    fn try_from(r: CsvRow) -> Result<Self, CliError> {
        let per_iteration_counts = if r.per_iteration_counts.is_empty() {
            Vec::new()
        } else {
            r.per_iteration_counts
                .split(';')
                .map(|s| s.parse::<usize>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Data(format!("bad per_iteration_counts {:?}: {e}", r.per_iteration_counts)))?
        };
        Ok(RunReport {
            mechanism: r.mechanism,
            rho: r.rho,
            delta: r.delta,
            epsilon: r.epsilon,
            delta_dp: r.delta_dp,
            delta0: r.delta0,
            iterations: r.iterations,
            ratio: r.ratio,
            seed: r.seed,
            workers: r.workers,
            buffer: r.buffer,
            gw_truncation: r.gw_truncation,
            dataset: r.dataset,
            num_users: r.num_users,
            partitions_released: r.partitions_released,
            elapsed_ms: r.elapsed_ms,
            per_iteration_counts,
            engine_stages: r.engine_stages,
        })
    }
}

pub fn reports_to_csv(reports: &[RunReport]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(CsvRow::from(r)).map_err(|e| CliError::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data(e.to_string()))
}

pub fn reports_from_csv(text: &str) -> Result<Vec<RunReport>, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    rdr.deserialize::<CsvRow>()
        .map(|row| row.map_err(|e| CliError::Data(e.to_string())).and_then(RunReport::try_from))
        .collect()
}

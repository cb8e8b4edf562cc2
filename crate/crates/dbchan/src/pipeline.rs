//! Batch workflows behind the `dbchan` binary: measurement CSV ingest, the
//! fit-and-test pipeline that regenerates appendix-style tables, report
//! emission, and the command line dispatcher.
//!
//! Everything here is plumbing around the other modules. The only domain
//! logic is the fitting policy: power distributions are fitted with a free
//! location, delay distributions with the location pinned at zero, and
//! number-of-paths distributions on per-link counts.

use std::collections::BTreeMap;
use std::env;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, LocationProfile, Scenario};
use crate::metrics::{self, MedOptions, MpcRecord};
use crate::statdist::{fit_mle, DistFamily, GofResult};
use crate::synth::{
    draw_paths_indexed, frequency_response, write_channel_binary, ArrayConfig, FsplEval,
    SynthesisConfig, SPEED_OF_LIGHT_M_S,
};

/// Environment variable naming a catalog JSON file to use instead of the
/// built-in tables. The `--catalog` flag overrides both.
pub const CATALOG_ENV_VAR: &str = "DBCHAN_CATALOG";

/// Expected header of an MPC measurement CSV, in column order.
pub const MPC_CSV_HEADER: [&str; 8] = [
    "location",
    "link_id",
    "scenario",
    "distance_m",
    "delay_ns",
    "power_dbm",
    "aoa_deg",
    "aod_deg",
];

/// Minimum sample size for a distribution fit; smaller cells are reported
/// as insufficient rather than fitted.
pub const MIN_CELL_POINTS: usize = 3;

/// Candidate families for normalized power, matching the published
/// comparison tables.
pub const NPD_FAMILIES: [DistFamily; 9] = [
    DistFamily::Normal,
    DistFamily::Exponential,
    DistFamily::LogNormal,
    DistFamily::Rayleigh,
    DistFamily::Rician,
    DistFamily::Nakagami,
    DistFamily::Gamma,
    DistFamily::Beta,
    DistFamily::LogLogistic,
];

/// Candidate families for normalized delay; both are fitted with the
/// location pinned at zero.
pub const NDD_FAMILIES: [DistFamily; 2] = [DistFamily::Exponential, DistFamily::Weibull];

/// Candidate families for per-link path counts.
pub const NOP_FAMILIES: [DistFamily; 9] = NPD_FAMILIES;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad invocation; maps to exit code 1.
    #[error("{0}")]
    Usage(String),
    /// Malformed or inconsistent input data; maps to exit code 2.
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

// ============================================================================
// Ingest
// ============================================================================

/// Records of one measured link, sorted by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGroup {
    pub location: String,
    pub link_id: String,
    pub records: Vec<MpcRecord>,
}

/// Parsed measurement file: link groups in first-appearance order plus
/// non-fatal validation warnings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestResult {
    pub groups: Vec<LinkGroup>,
    pub warnings: Vec<String>,
}

impl IngestResult {
    pub fn record_count(&self) -> usize {
        self.groups.iter().map(|g| g.records.len()).sum()
    }
}

/// Reads an MPC measurement CSV into link groups.
///
/// The header must match [`MPC_CSV_HEADER`] exactly. Rows are validated as
/// they are read and any malformed row fails the whole ingest with its line
/// number. Locations missing from `catalog` are rejected unless
/// `allow_unknown` is set. A delay shorter than the straight-line travel
/// time is kept but reported in `warnings`, since measured first arrivals
/// carry timing jitter.
pub fn ingest<R: Read>(
    reader: R,
    catalog: &Catalog,
    allow_unknown: bool,
) -> Result<IngestResult, PipelineError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| PipelineError::Data(format!("failed to read CSV header: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != MPC_CSV_HEADER {
        return Err(PipelineError::Data(format!(
            "unexpected CSV header [{}], expected [{}]",
            got.join(","),
            MPC_CSV_HEADER.join(","),
        )));
    }

    let mut result = IngestResult::default();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for record in csv_reader.records() {
        let record =
            record.map_err(|e| PipelineError::Data(format!("failed to read CSV row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let rec: MpcRecord = record
            .deserialize(Some(&headers))
            .map_err(|e| PipelineError::Data(format!("line {line}: {e}")))?;
        if !rec.power_dbm.is_finite() {
            return Err(PipelineError::Data(format!(
                "line {line}: power {} dBm is not finite",
                rec.power_dbm
            )));
        }
        if !rec.delay_ns.is_finite() || rec.delay_ns <= 0.0 {
            return Err(PipelineError::Data(format!(
                "line {line}: delay {} ns is not a positive number",
                rec.delay_ns
            )));
        }
        if !rec.distance_m.is_finite() || rec.distance_m <= 0.0 {
            return Err(PipelineError::Data(format!(
                "line {line}: distance {} m is not a positive number",
                rec.distance_m
            )));
        }
        if catalog.location(&rec.location).is_err() && !allow_unknown {
            return Err(PipelineError::Data(format!(
                "line {line}: unknown location {:?}; pass --allow-unknown to keep it",
                rec.location
            )));
        }
        let travel_ns = rec.distance_m / SPEED_OF_LIGHT_M_S * 1e9;
        if rec.delay_ns < travel_ns {
            result.warnings.push(format!(
                "line {line}: {} link {} delay {} ns is earlier than the {:.3} ns straight-line travel time",
                rec.location, rec.link_id, rec.delay_ns, travel_ns
            ));
        }
        let key = (rec.location.clone(), rec.link_id.clone());
        let slot = *index.entry(key).or_insert_with(|| {
            result.groups.push(LinkGroup {
                location: rec.location.clone(),
                link_id: rec.link_id.clone(),
                records: Vec::new(),
            });
            result.groups.len() - 1
        });
        result.groups[slot].records.push(rec);
    }
    for group in &mut result.groups {
        group
            .records
            .sort_by(|a, b| a.delay_ns.total_cmp(&b.delay_ns));
    }
    Ok(result)
}

// ============================================================================
// Fit pipeline
// ============================================================================

/// Candidate families per fitted quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCandidates {
    pub npd: Vec<DistFamily>,
    pub ndd: Vec<DistFamily>,
    pub nop: Vec<DistFamily>,
}

impl Default for FitCandidates {
    fn default() -> Self {
        FitCandidates {
            npd: NPD_FAMILIES.to_vec(),
            ndd: NDD_FAMILIES.to_vec(),
            nop: NOP_FAMILIES.to_vec(),
        }
    }
}

/// Which quantity a report row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitBlock {
    /// Normalized power, dB, pooled over a (location, scenario) cell.
    Npd,
    /// Normalized delay, ns, pooled per link then over the cell.
    Ndd,
    /// Number of paths per link.
    Nop,
}

impl fmt::Display for FitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitBlock::Npd => "npd",
            FitBlock::Ndd => "ndd",
            FitBlock::Nop => "nop",
        })
    }
}

/// One attempted fit. Numeric fields are absent when the fit was skipped or
/// failed; `status` says why. `data_min`, `data_max`, and `data_mean`
/// summarize the fitted sample so the report echoes the observed ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub location: String,
    pub scenario: Scenario,
    pub block: FitBlock,
    pub family: DistFamily,
    pub status: String,
    pub ks_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub qq_correlation: Option<f64>,
    pub loc: Option<f64>,
    pub scale: Option<f64>,
    pub shape1: Option<f64>,
    pub shape2: Option<f64>,
    pub n: u64,
    pub data_min: Option<f64>,
    pub data_max: Option<f64>,
    pub data_mean: Option<f64>,
}

pub const FIT_STATUS_OK: &str = "ok";
pub const FIT_STATUS_INSUFFICIENT: &str = "insufficient data";

/// Fit results for every (location, scenario, block, family) attempted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub rows: Vec<FitRow>,
}

impl FitReport {
    /// Rows of one cell and block, in candidate order.
    pub fn cell(&self, location: &str, scenario: Scenario, block: FitBlock) -> Vec<&FitRow> {
        self.rows
            .iter()
            .filter(|r| r.location == location && r.scenario == scenario && r.block == block)
            .collect()
    }

    /// The fitted row with the smallest KS statistic in one cell and block.
    pub fn best_by_ks(
        &self,
        location: &str,
        scenario: Scenario,
        block: FitBlock,
    ) -> Option<&FitRow> {
        self.cell(location, scenario, block)
            .into_iter()
            .filter(|r| r.ks_statistic.is_some())
            .min_by(|a, b| a.ks_statistic.unwrap().total_cmp(&b.ks_statistic.unwrap()))
    }
}

struct FitCell {
    location: String,
    scenario: Scenario,
    /// Normalized power samples; absent when the location has no catalog
    /// profile to supply the link budget.
    npd: Option<Vec<f64>>,
    ndd: Vec<f64>,
    nop: Vec<f64>,
}

/// Runs every candidate fit over the ingested records.
///
/// Power rows use a free location, delay rows pin the location at zero, and
/// path-count rows fit the per-link record counts. Cells with fewer than
/// [`MIN_CELL_POINTS`] samples are reported with an insufficient-data
/// status; individual fit failures are likewise recorded per row rather
/// than aborting the run.
pub fn run_fit_pipeline(
    ingested: &IngestResult,
    catalog: &Catalog,
    candidates: &FitCandidates,
) -> FitReport {
    let mut cells: Vec<FitCell> = Vec::new();
    let mut index: BTreeMap<(String, Scenario), usize> = BTreeMap::new();
    for group in &ingested.groups {
        for scenario in Scenario::ALL {
            let link: Vec<&MpcRecord> = group
                .records
                .iter()
                .filter(|r| r.scenario == scenario)
                .collect();
            if link.is_empty() {
                continue;
            }
            let key = (group.location.clone(), scenario);
            let slot = *index.entry(key).or_insert_with(|| {
                cells.push(FitCell {
                    location: group.location.clone(),
                    scenario,
                    npd: catalog.location(&group.location).ok().map(|_| Vec::new()),
                    ndd: Vec::new(),
                    nop: Vec::new(),
                });
                cells.len() - 1
            });
            let cell = &mut cells[slot];
            if let Some(npd) = cell.npd.as_mut() {
                let profile = &catalog.location(&group.location).unwrap().profile;
                for rec in &link {
                    if let Ok(g) = metrics::normalize_power(rec, profile) {
                        npd.push(g);
                    }
                }
            }
            let delays: Vec<f64> = link.iter().map(|r| r.delay_ns).collect();
            if let Ok(normalized) = metrics::normalize_delay(&delays) {
                cell.ndd.extend(normalized);
            }
            cell.nop.push(link.len() as f64);
        }
    }

    let mut jobs: Vec<(usize, FitBlock, DistFamily)> = Vec::new();
    for (i, _) in cells.iter().enumerate() {
        for &family in &candidates.npd {
            jobs.push((i, FitBlock::Npd, family));
        }
        for &family in &candidates.ndd {
            jobs.push((i, FitBlock::Ndd, family));
        }
        for &family in &candidates.nop {
            jobs.push((i, FitBlock::Nop, family));
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(i, block, family)| fit_row(&cells[i], block, family))
        .collect();
    FitReport { rows }
}

fn fit_row(cell: &FitCell, block: FitBlock, family: DistFamily) -> FitRow {
    let missing_profile = block == FitBlock::Npd && cell.npd.is_none();
    let empty = Vec::new();
    let data: &Vec<f64> = match block {
        FitBlock::Npd => cell.npd.as_ref().unwrap_or(&empty),
        FitBlock::Ndd => &cell.ndd,
        FitBlock::Nop => &cell.nop,
    };
    let n = data.len();
    let mut row = FitRow {
        location: cell.location.clone(),
        scenario: cell.scenario,
        block,
        family,
        status: FIT_STATUS_OK.into(),
        ks_statistic: None,
        p_value: None,
        qq_correlation: None,
        loc: None,
        scale: None,
        shape1: None,
        shape2: None,
        n: n as u64,
        data_min: data.iter().copied().reduce(f64::min),
        data_max: data.iter().copied().reduce(f64::max),
        data_mean: (n > 0).then(|| data.iter().sum::<f64>() / n as f64),
    };
    if missing_profile {
        row.status = "failed: location not in catalog, power normalization unavailable".into();
        return row;
    }
    if n < MIN_CELL_POINTS {
        row.status = FIT_STATUS_INSUFFICIENT.into();
        return row;
    }
    let fix_loc = (block == FitBlock::Ndd).then_some(0.0);
    let spec = match fit_mle(family, data, fix_loc) {
        Ok(spec) => spec,
        Err(e) => {
            row.status = format!("failed: {e}");
            return row;
        }
    };
    match GofResult::evaluate(data, &spec) {
        Ok(gof) => {
            row.ks_statistic = Some(gof.ks_statistic);
            row.p_value = Some(gof.p_value);
            row.qq_correlation = Some(gof.qq_correlation);
            row.loc = Some(spec.loc());
            row.scale = Some(spec.scale());
            row.shape1 = spec.shape().first().copied();
            row.shape2 = spec.shape().get(1).copied();
        }
        Err(e) => row.status = format!("failed: {e}"),
    }
    row
}

// ============================================================================
// Report emission
// ============================================================================

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Serializes a report. CSV writes one row per line in declaration order;
/// JSON is pretty-printed with canonically sorted keys. Both forms parse
/// back losslessly via [`parse_report`].
pub fn emit_report(report: &FitReport, format: ReportFormat) -> Result<Vec<u8>, PipelineError> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &report.rows {
                writer
                    .serialize(row)
                    .map_err(|e| PipelineError::Data(format!("failed to write report row: {e}")))?;
            }
            writer
                .into_inner()
                .map_err(|e| PipelineError::Data(format!("failed to flush report: {e}")))
        }
        ReportFormat::Json => {
            let value = serde_json::to_value(report)
                .map_err(|e| PipelineError::Data(format!("failed to encode report: {e}")))?;
            let mut text = serde_json::to_string_pretty(&value)
                .map_err(|e| PipelineError::Data(format!("failed to encode report: {e}")))?;
            text.push('\n');
            Ok(text.into_bytes())
        }
    }
}

/// Parses bytes produced by [`emit_report`].
pub fn parse_report(bytes: &[u8], format: ReportFormat) -> Result<FitReport, PipelineError> {
    match format {
        ReportFormat::Csv => {
            let mut reader = csv::Reader::from_reader(bytes);
            let mut rows = Vec::new();
            for row in reader.deserialize() {
                rows.push(
                    row.map_err(|e| PipelineError::Data(format!("failed to parse report: {e}")))?,
                );
            }
            Ok(FitReport { rows })
        }
        ReportFormat::Json => serde_json::from_slice(bytes)
            .map_err(|e| PipelineError::Data(format!("failed to parse report: {e}"))),
    }
}

// ============================================================================
// Dataset conversion
// ============================================================================

/// Column mapping for converting a third-party MPC export into the ingest
/// schema, supplied as JSON:
///
/// ```json
/// {
///   "columns": {"location": "site", "delay_ns": "toa", "power_dbm": "rx_power"},
///   "constants": {"scenario": "LOS", "link_id": "1"},
///   "delay_scale": 1e9
/// }
/// ```
///
/// `columns` names the source column for each output field, `constants`
/// fills fields the source lacks, and `delay_scale` multiplies source delay
/// values into nanoseconds (1e9 when the source stores seconds). `aoa_deg`
/// and `aod_deg` may be omitted entirely; every other output field must be
/// covered by one of the two maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub columns: BTreeMap<String, String>,
    #[serde(default)]
    pub constants: BTreeMap<String, String>,
    #[serde(default = "default_delay_scale")]
    pub delay_scale: f64,
}

fn default_delay_scale() -> f64 {
    1.0
}

impl ColumnMapping {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let mapping: ColumnMapping = serde_json::from_str(text)
            .map_err(|e| PipelineError::Data(format!("bad column mapping: {e}")))?;
        mapping.validate()?;
        Ok(mapping)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        for field in self.columns.keys().chain(self.constants.keys()) {
            if !MPC_CSV_HEADER.contains(&field.as_str()) {
                return Err(PipelineError::Usage(format!(
                    "mapping names unknown output field {field:?}"
                )));
            }
        }
        for field in MPC_CSV_HEADER {
            let optional = field == "aoa_deg" || field == "aod_deg";
            if !optional && !self.columns.contains_key(field) && !self.constants.contains_key(field)
            {
                return Err(PipelineError::Usage(format!(
                    "mapping covers neither a column nor a constant for required field {field:?}"
                )));
            }
        }
        if !self.delay_scale.is_finite() || self.delay_scale <= 0.0 {
            return Err(PipelineError::Usage(format!(
                "delay_scale must be a positive number, got {}",
                self.delay_scale
            )));
        }
        Ok(())
    }
}

/// Rewrites a third-party CSV into the ingest schema using `mapping`.
/// Returns the number of converted rows. The output is suitable for
/// [`ingest`] and the `fit` subcommand.
pub fn convert_mpc_csv<R: Read, W: Write>(
    source: R,
    mapping: &ColumnMapping,
    sink: W,
) -> Result<u64, PipelineError> {
    mapping.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| PipelineError::Data(format!("failed to read source header: {e}")))?
        .clone();
    let mut source_index: BTreeMap<&str, usize> = BTreeMap::new();
    for field in MPC_CSV_HEADER {
        if let Some(column) = mapping.columns.get(field) {
            let idx = headers.iter().position(|h| h == column).ok_or_else(|| {
                PipelineError::Data(format!(
                    "source is missing column {column:?} mapped to {field:?}"
                ))
            })?;
            source_index.insert(field, idx);
        }
    }

    let mut writer = csv::Writer::from_writer(sink);
    writer
        .write_record(MPC_CSV_HEADER)
        .map_err(|e| PipelineError::Data(format!("failed to write header: {e}")))?;
    let mut rows = 0u64;
    for record in reader.records() {
        let record =
            record.map_err(|e| PipelineError::Data(format!("failed to read source row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        let mut out: Vec<String> = Vec::with_capacity(MPC_CSV_HEADER.len());
        for field in MPC_CSV_HEADER {
            let raw = match source_index.get(field) {
                Some(&idx) => record.get(idx).unwrap_or_default().to_string(),
                None => mapping.constants.get(field).cloned().unwrap_or_default(),
            };
            if field == "delay_ns" && mapping.delay_scale != 1.0 {
                let value: f64 = raw.parse().map_err(|_| {
                    PipelineError::Data(format!("line {line}: delay {raw:?} is not numeric"))
                })?;
                out.push(format!("{}", value * mapping.delay_scale));
            } else {
                out.push(raw);
            }
        }
        writer
            .write_record(&out)
            .map_err(|e| PipelineError::Data(format!("failed to write row: {e}")))?;
        rows += 1;
    }
    writer
        .flush()
        .map_err(|e| PipelineError::Data(format!("failed to flush output: {e}")))?;
    Ok(rows)
}

// ============================================================================
// Command line
// ============================================================================

#[derive(Debug, Parser)]
#[command(
    name = "dbchan",
    version,
    about = "D band multipath statistics and channel synthesis"
)]
struct Cli {
    /// Catalog JSON path; overrides the DBCHAN_CATALOG environment variable
    /// and the built-in tables.
    #[arg(long, global = true, value_name = "PATH")]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit candidate distributions to an MPC measurement CSV.
    Fit(FitArgs),
    /// Draw multipath realizations and write path sets and channel tensors.
    Generate(GenerateArgs),
    /// Monte Carlo maximum excess delay against the recorded references.
    Med(MedArgs),
    /// Print catalog profiles and fitted statistics.
    Catalog(CatalogArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// MPC measurement CSV; '-' reads standard input.
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    /// Keep records whose location is not in the catalog (their power rows
    /// are reported as failed since normalization needs a link budget).
    #[arg(long)]
    allow_unknown: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
    /// Output path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    location: String,
    /// LOS or NLOS.
    #[arg(long)]
    scenario: String,
    /// Tx-Rx separation in meters.
    #[arg(long)]
    distance: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of channel realizations to draw.
    #[arg(long, default_value_t = 1)]
    realizations: u64,
    /// Frequency samples across the sounded band.
    #[arg(long, default_value_t = 64)]
    points: usize,
    /// Receive elements in the uniform linear array.
    #[arg(long, default_value_t = 1)]
    rx: usize,
    /// Transmit elements in the uniform linear array.
    #[arg(long, default_value_t = 1)]
    tx: usize,
    /// Element spacing in wavelengths.
    #[arg(long, default_value_t = 0.5)]
    spacing: f64,
    /// Output directory for real###.paths.json and real###.chan.bin.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MedArgs {
    #[arg(long)]
    location: String,
    /// LOS or NLOS.
    #[arg(long)]
    scenario: String,
    /// Monte Carlo draws per link.
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise threshold override in dBm; default is the profile's floor plus
    /// margin.
    #[arg(long, value_name = "DBM")]
    threshold: Option<f64>,
    /// Exclude the Rx antenna gain from the link budget.
    #[arg(long)]
    no_rx_gain: bool,
    /// Also drop paths more than this many dB below the strongest survivor.
    #[arg(long, value_name = "DB")]
    dynamic_range: Option<f64>,
    /// Comma-separated link distances in meters; default is a grid over the
    /// measured range with one point per measured link.
    #[arg(long, value_delimiter = ',', value_name = "M,M,...")]
    distances: Vec<f64>,
    /// Write the summary as JSON to this path.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CatalogArgs {
    /// Restrict output to one location.
    #[arg(long)]
    location: Option<String>,
    /// Print catalog JSON instead of the summary table.
    #[arg(long)]
    json: bool,
}

/// Parses `argv` and runs the selected subcommand.
///
/// Returns the process exit code: 0 on success, 1 on usage errors, 2 on
/// data errors. Every invocation that takes a seed is byte-reproducible.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let ok = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if ok { 0 } else { 1 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err @ PipelineError::Usage(_)) => {
            eprintln!("error: {err}");
            1
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let catalog = load_catalog(cli.catalog.as_deref())?;
    match cli.command {
        Command::Fit(args) => run_fit(&catalog, args),
        Command::Generate(args) => run_generate(&catalog, args),
        Command::Med(args) => run_med(&catalog, args),
        Command::Catalog(args) => run_catalog(&catalog, args),
    }
}

fn load_catalog(flag: Option<&Path>) -> Result<Catalog, PipelineError> {
    let path = flag
        .map(PathBuf::from)
        .or_else(|| env::var_os(CATALOG_ENV_VAR).map(PathBuf::from));
    match path {
        Some(path) => Catalog::from_path(&path)
            .map_err(|e| PipelineError::Data(format!("catalog {}: {e}", path.display()))),
        None => Ok(Catalog::builtin().clone()),
    }
}

fn parse_scenario(text: &str) -> Result<Scenario, PipelineError> {
    Scenario::from_str(text).map_err(PipelineError::Usage)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), PipelineError> {
    match out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| PipelineError::Data(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout().write_all(bytes).map_err(PipelineError::from),
    }
}

fn run_fit(catalog: &Catalog, args: FitArgs) -> Result<(), PipelineError> {
    let ingested = if args.input.as_os_str() == "-" {
        ingest(io::stdin().lock(), catalog, args.allow_unknown)?
    } else {
        let file = fs::File::open(&args.input).map_err(|e| {
            PipelineError::Data(format!("cannot open {}: {e}", args.input.display()))
        })?;
        ingest(io::BufReader::new(file), catalog, args.allow_unknown)?
    };
    for warning in &ingested.warnings {
        eprintln!("warning: {warning}");
    }
    let report = run_fit_pipeline(&ingested, catalog, &FitCandidates::default());
    let bytes = emit_report(&report, args.format)?;
    write_output(args.out.as_deref(), &bytes)
}

fn run_generate(catalog: &Catalog, args: GenerateArgs) -> Result<(), PipelineError> {
    let scenario = parse_scenario(&args.scenario)?;
    let (profile, stats) = catalog
        .stats(&args.location, scenario)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    let (lo, hi) = profile.link_distance_range_m;
    if args.distance < lo || args.distance > hi {
        eprintln!(
            "warning: distance {} m is outside the measured {lo}..{hi} m range for {}",
            args.distance, profile.name
        );
    }
    if args.points == 0 {
        return Err(PipelineError::Usage(
            "at least one frequency point is required".into(),
        ));
    }
    let array = ArrayConfig {
        n_rx: args.rx,
        n_tx: args.tx,
        spacing_wavelengths: args.spacing,
        ..ArrayConfig::default()
    };
    let cfg = SynthesisConfig::new(&profile.name, scenario, args.seed);
    let grid = frequency_grid(profile, args.points);
    fs::create_dir_all(&args.out)
        .map_err(|e| PipelineError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    for realization in 0..args.realizations {
        let paths = draw_paths_indexed(profile, stats, &cfg, args.distance, realization)
            .map_err(|e| PipelineError::Data(e.to_string()))?;
        let response = frequency_response(&paths, &array, &grid, FsplEval::PerFrequency)
            .map_err(|e| PipelineError::Data(e.to_string()))?;
        let base = args.out.join(format!("real{realization:03}"));
        let json_path = base.with_extension("paths.json");
        fs::write(&json_path, paths.to_json()).map_err(|e| {
            PipelineError::Data(format!("cannot write {}: {e}", json_path.display()))
        })?;
        let bin_path = base.with_extension("chan.bin");
        let file = fs::File::create(&bin_path).map_err(|e| {
            PipelineError::Data(format!("cannot write {}: {e}", bin_path.display()))
        })?;
        write_channel_binary(io::BufWriter::new(file), &response)
            .map_err(|e| PipelineError::Data(e.to_string()))?;
    }
    println!(
        "wrote {} realization(s) for {} {} at {} m to {}",
        args.realizations,
        profile.name,
        scenario,
        args.distance,
        args.out.display()
    );
    Ok(())
}

fn frequency_grid(profile: &LocationProfile, points: usize) -> Vec<f64> {
    let (lo, hi) = profile.rf_band_hz;
    if points == 1 {
        return vec![profile.center_freq_hz];
    }
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

fn run_med(catalog: &Catalog, args: MedArgs) -> Result<(), PipelineError> {
    let scenario = parse_scenario(&args.scenario)?;
    let (profile, stats) = catalog
        .stats(&args.location, scenario)
        .map_err(|e| PipelineError::Data(e.to_string()))?;
    let distances = if args.distances.is_empty() {
        metrics::default_link_distances(profile, stats)
    } else {
        let (lo, hi) = profile.link_distance_range_m;
        for &d in &args.distances {
            if d < lo || d > hi {
                eprintln!(
                    "warning: distance {d} m is outside the measured {lo}..{hi} m range for {}",
                    profile.name
                );
            }
        }
        args.distances.clone()
    };
    let cfg = SynthesisConfig::new(&profile.name, scenario, args.seed);
    let options = MedOptions {
        threshold_dbm: args.threshold,
        include_rx_gain: !args.no_rx_gain,
        dynamic_range_db: args.dynamic_range,
    };
    let summary =
        metrics::monte_carlo_med_with(profile, stats, &cfg, &distances, args.draws, &options)
            .map_err(|e| PipelineError::Data(e.to_string()))?;
    println!(
        "{} {}: mean MED {:.2} ns over {} draws x {} links (surviving path fraction {:.3})",
        profile.name,
        scenario,
        summary.mean_med_ns,
        summary.n_draws,
        summary.per_link_med_ns.len(),
        summary.surviving_path_fraction
    );
    match catalog.med_reference(&profile.name, scenario) {
        Ok((empirical, model)) => {
            println!("reference MED: empirical {empirical} ns, model {model} ns");
        }
        Err(_) => println!("no reference MED recorded for this cell"),
    }
    if let Some(path) = &args.out {
        let value = serde_json::to_value(&summary)
            .map_err(|e| PipelineError::Data(format!("failed to encode summary: {e}")))?;
        let mut text = serde_json::to_string_pretty(&value)
            .map_err(|e| PipelineError::Data(format!("failed to encode summary: {e}")))?;
        text.push('\n');
        write_output(Some(path), text.as_bytes())?;
    }
    Ok(())
}

fn run_catalog(catalog: &Catalog, args: CatalogArgs) -> Result<(), PipelineError> {
    let entries: Vec<_> = match &args.location {
        Some(name) => {
            vec![catalog
                .location(name)
                .map_err(|e| PipelineError::Data(e.to_string()))?]
        }
        None => catalog.locations().iter().collect(),
    };
    if args.json {
        let value = serde_json::to_value(&entries)
            .map_err(|e| PipelineError::Data(format!("failed to encode catalog: {e}")))?;
        let mut text = serde_json::to_string_pretty(&value)
            .map_err(|e| PipelineError::Data(format!("failed to encode catalog: {e}")))?;
        text.push('\n');
        return write_output(None, text.as_bytes());
    }
    for entry in entries {
        let p = &entry.profile;
        let (flo, fhi) = p.rf_band_hz;
        let (dlo, dhi) = p.link_distance_range_m;
        println!(
            "{} ({}): {:.1}-{:.1} GHz, EIRP {} dBm, Rx gain {} dBi, {}-{} m links",
            p.name,
            p.environment,
            flo / 1e9,
            fhi / 1e9,
            p.eirp_dbm,
            p.rx_gain_dbi,
            dlo,
            dhi
        );
        for stats in &entry.scenarios {
            let npd = &stats.npd;
            let shapes: Vec<String> = npd.shape().iter().map(|s| format!("{s}")).collect();
            println!(
                "  {}: NPD {}({}, loc {}, scale {}), NDD {}(scale {} ns), NoP mean {} (min {}, max {}), {} points / {} links",
                stats.scenario,
                npd.family().name(),
                shapes.join("/"),
                npd.loc(),
                npd.scale(),
                stats.ndd.family().name(),
                stats.ndd.scale(),
                stats.nop.mean,
                stats.nop.min,
                stats.nop.max,
                stats.data_points,
                stats.measurements
            );
        }
    }
    Ok(())
}

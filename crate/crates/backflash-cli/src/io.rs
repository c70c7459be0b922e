//! File formats: click/genealogy CSVs, analysis CSVs, and run manifests.
//!
//! All timestamps are integer picoseconds. Schemas are documented
//! bit-exactly in `docs/formats.md`.

use crate::config::{AnalysisSpec, ConfigFile};
use crate::error::CliError;
use backflash_core::analysis::{CoincidenceHistogram, Peak, RMatrix};
use backflash_core::event::{ClickCause, ClickRecord, DetectorId, EventRef};
use backflash_core::engine::EventLog;
use backflash_core::receiver::Channel;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

/// Run manifest: everything needed to reproduce a run and its analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run: RunInfo,
    pub scenario: ConfigFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunInfo {
    pub version: String,
    /// Label of this run within a multi-run experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Channel Eve's analyzer targeted, for ratio-matrix assembly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve_target: Option<String>,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("manifest serialization: {e}")))?;
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn parent_id_field(click: &ClickRecord) -> String {
    match click.parent {
        Some(EventRef::Pulse(id)) | Some(EventRef::Click(id)) => id.to_string(),
        None => String::new(),
    }
}

/// Write `clicks.csv`: `channel,time_ps,cause,parent_id`, all clicks of
/// the run merged in time order. `parent_id` is a pulse id for signal and
/// reflection clicks, a click id for backflash clicks (see
/// `genealogy.csv` for the id table), empty for dark counts.
pub fn write_clicks(path: &Path, log: &EventLog) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record(["channel", "time_ps", "cause", "parent_id"])
        .map_err(|e| CliError::io_other(path, e))?;
    for click in merged_clicks(log) {
        writer
            .write_record([
                click.detector.label().to_string(),
                click.time_ps.to_string(),
                click.cause.label().to_string(),
                parent_id_field(click),
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Write `genealogy.csv`: `click_id,channel,time_ps,cause,parent_kind,
/// parent_id` — the click id table that `clicks.csv` parent ids refer to.
pub fn write_genealogy(path: &Path, log: &EventLog) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "click_id",
            "channel",
            "time_ps",
            "cause",
            "parent_kind",
            "parent_id",
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for click in merged_clicks(log) {
        let (parent_kind, parent_id) = match click.parent {
            Some(EventRef::Pulse(id)) => ("pulse", id.to_string()),
            Some(EventRef::Click(id)) => ("click", id.to_string()),
            None => ("none", String::new()),
        };
        writer
            .write_record([
                click.id.to_string(),
                click.detector.label().to_string(),
                click.time_ps.to_string(),
                click.cause.label().to_string(),
                parent_kind.to_string(),
                parent_id,
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

fn merged_clicks(log: &EventLog) -> Vec<&ClickRecord> {
    let mut all: Vec<&ClickRecord> = log.bob_clicks.iter().chain(log.eve_clicks.iter()).collect();
    all.sort_by_key(|c| (c.time_ps, c.id));
    all
}

fn parse_detector(label: &str) -> Option<DetectorId> {
    Some(match label {
        "H" => DetectorId::BobH,
        "V" => DetectorId::BobV,
        "D" => DetectorId::BobD,
        "A" => DetectorId::BobA,
        "EVE" => DetectorId::Eve,
        "DUT" => DetectorId::Dut,
        "SPCM" => DetectorId::Spcm,
        _ => return None,
    })
}

fn parse_cause(label: &str) -> Option<ClickCause> {
    Some(match label {
        "signal" => ClickCause::Signal,
        "dark" => ClickCause::Dark,
        "reflection" => ClickCause::Reflection,
        "backflash" => ClickCause::Backflash,
        _ => return None,
    })
}

/// Clicks read back from `clicks.csv`, split into the receiver-side and
/// observer-side streams (both in file order, i.e. time-sorted).
#[derive(Debug, Clone, Default)]
pub struct ClickTable {
    pub bob: Vec<ClickRecord>,
    pub eve: Vec<ClickRecord>,
}

pub fn read_clicks(path: &Path) -> Result<ClickTable, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    let mut table = ClickTable::default();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::io_other(path, e))?;
        let bad = |what: &str| {
            CliError::Config(format!(
                "{}: row {}: invalid {what}",
                path.display(),
                row + 2
            ))
        };
        let detector =
            parse_detector(record.get(0).unwrap_or("")).ok_or_else(|| bad("channel"))?;
        let time_ps: i64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|_| bad("time_ps"))?;
        let cause = parse_cause(record.get(2).unwrap_or("")).ok_or_else(|| bad("cause"))?;
        let parent = match (cause, record.get(3).unwrap_or("")) {
            (_, "") => None,
            (ClickCause::Backflash, id) => {
                Some(EventRef::Click(id.parse().map_err(|_| bad("parent_id"))?))
            }
            (_, id) => Some(EventRef::Pulse(id.parse().map_err(|_| bad("parent_id"))?)),
        };
        let click = ClickRecord {
            id: row as u64,
            detector,
            time_ps,
            cause,
            parent,
        };
        match detector {
            DetectorId::Eve | DetectorId::Spcm => table.eve.push(click),
            _ => table.bob.push(click),
        }
    }
    Ok(table)
}

/// Write `histogram.csv`: `bin,start_ps,end_ps,count` with `underflow` and
/// `overflow` rows bracketing the numbered bins.
pub fn write_histogram(path: &Path, hist: &CoincidenceHistogram) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record(["bin", "start_ps", "end_ps", "count"])
        .map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "underflow".to_string(),
            String::new(),
            String::new(),
            hist.underflow.to_string(),
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for (i, &count) in hist.counts.iter().enumerate() {
        writer
            .write_record([
                i.to_string(),
                hist.bin_start_ps(i).to_string(),
                hist.bin_end_ps(i).to_string(),
                count.to_string(),
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer
        .write_record([
            "overflow".to_string(),
            String::new(),
            String::new(),
            hist.overflow.to_string(),
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Write `peaks.csv`: one row per detected peak with its ground-truth
/// backflash purity.
pub fn write_peaks(path: &Path, peaks: &[(Peak, f64)]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "start_ps",
            "end_ps",
            "area",
            "significance",
            "backflash_purity",
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for (peak, purity) in peaks {
        writer
            .write_record([
                peak.start_ps.to_string(),
                peak.end_ps.to_string(),
                format!("{:.3}", peak.area),
                format!("{:.3}", peak.significance),
                format!("{:.6}", purity),
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Write `rmatrix.csv`: `bob_channel,eve_target,bob_clicks,coincidences,
/// ratio,leakage`; the leakage column is filled on same-channel rows as
/// `R_ii - R_i,conjugate(i)`.
pub fn write_rmatrix(path: &Path, matrix: &RMatrix) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "bob_channel",
            "eve_target",
            "bob_clicks",
            "coincidences",
            "ratio",
            "leakage",
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for &bob in matrix.channels() {
        for &eve in matrix.channels() {
            let cell = matrix.cell(bob, eve).expect("cell exists");
            let ratio = matrix.ratio(bob, eve).expect("ratio exists");
            let leakage = if bob == eve {
                backflash_core::analysis::observed_leakage(matrix, bob)
                    .map(|l| format!("{l:.6e}"))
                    .unwrap_or_default()
            } else {
                String::new()
            };
            writer
                .write_record([
                    bob.label().to_string(),
                    eve.label().to_string(),
                    cell.bob_clicks.to_string(),
                    cell.coincidences.to_string(),
                    format!("{ratio:.6e}"),
                    leakage,
                ])
                .map_err(|e| CliError::io_other(path, e))?;
        }
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Write `estimates.csv`: `key,value` rows.
pub fn write_estimates(path: &Path, rows: &[(String, String)]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record(["key", "value"])
        .map_err(|e| CliError::io_other(path, e))?;
    for (key, value) in rows {
        writer
            .write_record([key, value])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Read `estimates.csv` back into key/value pairs.
pub fn read_estimates(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::io_other(path, e))?;
        rows.push((
            record.get(0).unwrap_or("").to_string(),
            record.get(1).unwrap_or("").to_string(),
        ));
    }
    Ok(rows)
}

/// Write `extinction.csv` for the polarizer-scan preset.
pub fn write_extinction(
    path: &Path,
    rows: &[(char, backflash_core::optics::ScanExtrema)],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "channel",
            "max_angle_deg",
            "max_power_uw",
            "min_angle_deg",
            "min_power_uw",
            "extinction_ratio",
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for (channel, extrema) in rows {
        writer
            .write_record([
                channel.to_string(),
                format!("{}", extrema.max_angle_deg),
                format!("{:.6}", extrema.max_power),
                format!("{}", extrema.min_angle_deg),
                format!("{:.6}", extrema.min_power),
                format!("{:.4}", extrema.ratio),
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// One key-rate table row.
#[derive(Debug, Clone)]
pub struct KeyRateRow {
    pub sweep: String,
    pub value: f64,
    pub p_det: f64,
    pub qber: f64,
    pub tag_fraction: f64,
    pub leak_ec: f64,
    pub rate: f64,
    pub abort: Option<&'static str>,
}

/// Write `keyrate.csv`: `sweep,value,p_det,qber,tag_fraction,leak_ec,rate,
/// abort`.
pub fn write_keyrate(path: &Path, rows: &[KeyRateRow]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io_other(path, e))?;
    writer
        .write_record([
            "sweep",
            "value",
            "p_det",
            "qber",
            "tag_fraction",
            "leak_ec",
            "rate",
            "abort",
        ])
        .map_err(|e| CliError::io_other(path, e))?;
    for row in rows {
        writer
            .write_record([
                row.sweep.clone(),
                format!("{:.9e}", row.value),
                format!("{}", row.p_det),
                format!("{}", row.qber),
                format!("{:.9e}", row.tag_fraction),
                format!("{:.9e}", row.leak_ec),
                format!("{:.9e}", row.rate),
                row.abort.unwrap_or("").to_string(),
            ])
            .map_err(|e| CliError::io_other(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

/// Channel label parsing for manifest `eve_target` fields.
pub fn channel_from_label(label: &str) -> Option<Channel> {
    match label {
        "H" => Some(Channel::H),
        "V" => Some(Channel::V),
        "D" => Some(Channel::D),
        "A" => Some(Channel::A),
        _ => None,
    }
}

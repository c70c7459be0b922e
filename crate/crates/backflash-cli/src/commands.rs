//! Subcommand implementations: simulate, analyze, keyrate, preset.

use crate::config::{AnalysisSpec, ConfigFile, GateReferenceField};
use crate::error::CliError;
use crate::io::{self, ClickTable, KeyRateRow, Manifest, RunInfo};
use crate::presets::{self, Preset, PresetRun};
use backflash_core::analysis::{
    build_histogram, detect_peaks, ec_leakage, estimate_pb, expected_leakage, gated_counts,
    key_rate, observed_leakage, worst_case_tag_fraction, CoincidenceHistogram, GatedCounts,
    KeyRateInput, RMatrix,
};
use backflash_core::eavesdropper::gate_coincidences;
use backflash_core::engine::{run_scenario, EventLog};
use backflash_core::event::{ns_to_ps, ClickCause};
use backflash_core::optics::{extinction_ratio_from_scan, pbs_project, JonesVector, PbsSpec};
use backflash_core::receiver::Channel;
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs to execute plus the analysis spec to stamp into their manifests.
struct ResolvedSimulation {
    runs: Vec<PresetRun>,
    analysis: Option<AnalysisSpec>,
}

fn resolve_runs(
    config_path: Option<&Path>,
    preset_name: Option<&str>,
) -> Result<ResolvedSimulation, CliError> {
    match (config_path, preset_name) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            // Accept both bare scenario files and run manifests; a manifest
            // reproduces its run exactly, analysis spec included.
            if let Ok(manifest) = toml::from_str::<Manifest>(&text) {
                let eve_target = manifest
                    .run
                    .eve_target
                    .as_deref()
                    .and_then(|s| s.chars().next());
                return Ok(ResolvedSimulation {
                    runs: vec![PresetRun {
                        label: None,
                        eve_target,
                        config: manifest.scenario,
                    }],
                    analysis: manifest.analysis,
                });
            }
            let config = ConfigFile::from_toml(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let analysis = config.analysis.clone();
            Ok(ResolvedSimulation {
                runs: vec![PresetRun {
                    label: None,
                    eve_target: None,
                    config,
                }],
                analysis,
            })
        }
        (None, Some(name)) => match presets::lookup(name) {
            Some(Preset::MonteCarlo { runs, analysis }) => Ok(ResolvedSimulation {
                runs,
                analysis: Some(analysis),
            }),
            Some(_) => Err(CliError::Config(format!(
                "preset `{name}` is not a Monte Carlo scenario; use `preset run {name}`"
            ))),
            None => Err(CliError::Config(format!(
                "unknown preset `{name}`; see `preset list`"
            ))),
        },
        _ => Err(CliError::Config(
            "exactly one of --config and --preset is required".into(),
        )),
    }
}

fn run_dir(out: &Path, label: Option<&str>) -> PathBuf {
    match label {
        Some(label) => out.join(label),
        None => out.to_path_buf(),
    }
}

fn execute_run(
    run: &PresetRun,
    seed_override: Option<u64>,
    analysis: Option<&AnalysisSpec>,
    out: &Path,
) -> Result<(), CliError> {
    let dir = run_dir(out, run.label.as_deref());
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let scenario = run.config.to_scenario(seed_override)?;
    let log = run_scenario(&scenario)?;

    io::write_clicks(&dir.join("clicks.csv"), &log)?;
    io::write_genealogy(&dir.join("genealogy.csv"), &log)?;

    // Echo the effective seed so the manifest reproduces the run exactly.
    let mut echoed = run.config.clone();
    echoed.seed = scenario.seed;
    echoed.analysis = None;
    Manifest {
        run: RunInfo {
            version: VERSION.into(),
            label: run.label.clone(),
            eve_target: run.eve_target.map(|c| c.to_string()),
        },
        scenario: echoed,
        analysis: analysis.cloned(),
    }
    .write(&dir.join("manifest.toml"))
}

/// `simulate`: run the scenario(s) and write clicks, genealogy, and the
/// run manifest.
pub fn simulate(
    config_path: Option<&Path>,
    preset_name: Option<&str>,
    seed_override: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    let resolved = resolve_runs(config_path, preset_name)?;
    run_all(&resolved, seed_override, out, jobs)
}

/// Execute a batch of runs into `out` (labeled runs into subdirectories).
/// With `jobs > 1` the runs are distributed over a thread pool; outputs
/// are identical either way since every run derives its own rng streams.
pub fn run_simulations(
    runs: &[PresetRun],
    analysis: Option<&AnalysisSpec>,
    seed_override: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    if jobs > 1 && runs.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?;
        pool.install(|| {
            runs.par_iter()
                .map(|run| execute_run(run, seed_override, analysis, out))
                .collect::<Result<Vec<_>, _>>()
        })?;
    } else {
        for run in runs {
            execute_run(run, seed_override, analysis, out)?;
        }
    }
    Ok(())
}

fn run_all(
    resolved: &ResolvedSimulation,
    seed_override: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    run_simulations(
        &resolved.runs,
        resolved.analysis.as_ref(),
        seed_override,
        out,
        jobs,
    )
}

/// Time deltas (with ground-truth cause) that feed the histogram and the
/// peak purity calculation.
fn histogram_deltas(
    clicks: &ClickTable,
    spec: &crate::config::HistogramSpec,
    scenario: &ConfigFile,
) -> Result<Vec<(i64, ClickCause)>, CliError> {
    match spec.reference {
        GateReferenceField::BobClick => {
            // Start-stop intervals: each observer click against the latest
            // receiver-side click at or before it.
            let bob_times: Vec<i64> = clicks.bob.iter().map(|c| c.time_ps).collect();
            Ok(clicks
                .eve
                .iter()
                .filter_map(|eve| {
                    let idx = bob_times.partition_point(|&t| t <= eve.time_ps);
                    if idx == 0 {
                        None
                    } else {
                        Some((eve.time_ps - bob_times[idx - 1], eve.cause))
                    }
                })
                .collect())
        }
        GateReferenceField::AlicePulse => {
            let train = scenario.pulse_train.as_ref().ok_or_else(|| {
                CliError::Config(
                    "histogram reference `alice-pulse` needs a pulse_train in the scenario".into(),
                )
            })?;
            let period_ps = ns_to_ps(train.period_ns);
            Ok(clicks
                .eve
                .iter()
                .map(|eve| (eve.time_ps.rem_euclid(period_ps), eve.cause))
                .collect())
        }
    }
}

fn analyze_histogram(
    dir: &Path,
    spec: &AnalysisSpec,
    clicks: &ClickTable,
    scenario: &ConfigFile,
    rows: &mut Vec<(String, String)>,
) -> Result<(), CliError> {
    let Some(hist_spec) = &spec.histogram else {
        return Ok(());
    };
    let deltas = histogram_deltas(clicks, hist_spec, scenario)?;
    let pairs: Vec<(i64, i64)> = deltas.iter().map(|&(d, _)| (0, d)).collect();
    let hist: CoincidenceHistogram = build_histogram(
        &pairs,
        ns_to_ps(hist_spec.bin_ns),
        (ns_to_ps(hist_spec.range_ns[0]), ns_to_ps(hist_spec.range_ns[1])),
    )?;
    io::write_histogram(&dir.join("histogram.csv"), &hist)?;

    if let Some(sigma) = spec.peak_threshold_sigma {
        let peaks = detect_peaks(&hist, sigma)?;
        let with_purity: Vec<_> = peaks
            .iter()
            .map(|peak| {
                let (mut total, mut backflash) = (0u64, 0u64);
                for &(delta, cause) in &deltas {
                    if delta >= peak.start_ps && delta < peak.end_ps {
                        total += 1;
                        if cause == ClickCause::Backflash {
                            backflash += 1;
                        }
                    }
                }
                let purity = if total == 0 {
                    0.0
                } else {
                    backflash as f64 / total as f64
                };
                (*peak, purity)
            })
            .collect();
        io::write_peaks(&dir.join("peaks.csv"), &with_purity)?;
        rows.push(("peak_count".into(), peaks.len().to_string()));
        if let Some((largest, purity)) = with_purity
            .iter()
            .max_by(|a, b| a.0.area.partial_cmp(&b.0.area).unwrap())
        {
            rows.push(("largest_peak_start_ps".into(), largest.start_ps.to_string()));
            rows.push(("largest_peak_end_ps".into(), largest.end_ps.to_string()));
            rows.push(("largest_peak_area".into(), format!("{:.3}", largest.area)));
            rows.push(("largest_peak_purity".into(), format!("{purity:.6}")));
        }
    }
    Ok(())
}

fn effective_window_ns(
    spec: &AnalysisSpec,
    scenario: &ConfigFile,
) -> Option<(f64, f64)> {
    if let Some(window) = spec.coincidence_window_ns {
        return Some((window[0], window[1]));
    }
    // The eavesdropper's own gate only defines click-to-click intervals
    // when it is referenced to Bob's detections.
    scenario
        .eve
        .as_ref()
        .filter(|eve| eve.gate_reference == GateReferenceField::BobClick)
        .map(|eve| (eve.gate_window_ns[0], eve.gate_window_ns[1]))
}

fn analyze_single(dir: &Path, out: &Path) -> Result<(), CliError> {
    let manifest = Manifest::read(&dir.join("manifest.toml"))?;
    let spec = manifest.analysis.clone().unwrap_or_default();
    let clicks = io::read_clicks(&dir.join("clicks.csv"))?;

    let mut rows: Vec<(String, String)> = vec![
        ("bob_clicks".into(), clicks.bob.len().to_string()),
        ("eve_clicks".into(), clicks.eve.len().to_string()),
    ];

    if let Some((lo_ns, hi_ns)) = effective_window_ns(&spec, &manifest.scenario) {
        let window = (ns_to_ps(lo_ns), ns_to_ps(hi_ns));
        let pairs = gate_coincidences(&clicks.bob, &clicks.eve, window)?;
        rows.push(("coincidences".into(), pairs.len().to_string()));
        if let Some(pb_spec) = &spec.pb_estimator {
            if clicks.bob.is_empty() {
                rows.push(("p_b_estimate".into(), "0".into()));
            } else {
                let estimate = estimate_pb(
                    pairs.len() as u64,
                    pb_spec.efficiency,
                    pb_spec.channel_transmission,
                    clicks.bob.len() as u64,
                )?;
                rows.push(("p_b_estimate".into(), format!("{:.6e}", estimate.value)));
                rows.push(("p_b_clamped".into(), estimate.clamped.to_string()));
            }
        }
    }

    analyze_histogram(out, &spec, &clicks, &manifest.scenario, &mut rows)?;

    if let Some(exp) = &spec.expected_leakage {
        let value = expected_leakage(
            exp.efficiency,
            exp.eve_throughput,
            exp.reverse_transmission,
            exp.backflash_prob,
        )?;
        rows.push(("expected_leakage".into(), format!("{value:.6e}")));
    }

    io::write_estimates(&out.join("estimates.csv"), &rows)
}

fn table_as_log(clicks: ClickTable) -> EventLog {
    EventLog {
        bob_clicks: clicks.bob,
        eve_clicks: clicks.eve,
        pulse_count: 0,
        duration_ps: 0,
    }
}

fn analyze_multi(runs: Vec<(PathBuf, Manifest)>, out: &Path) -> Result<(), CliError> {
    let spec = runs
        .iter()
        .find_map(|(_, m)| m.analysis.clone())
        .unwrap_or_default();

    let mut per_target: Vec<(Channel, GatedCounts)> = Vec::new();
    let mut channels: Vec<Channel> = Vec::new();
    let mut rows: Vec<(String, String)> = Vec::new();
    for (dir, manifest) in &runs {
        let target_label = manifest.run.eve_target.as_deref().ok_or_else(|| {
            CliError::Config(format!(
                "{}: manifest lacks run.eve_target; cannot place this run in the ratio matrix",
                dir.display()
            ))
        })?;
        let target = io::channel_from_label(target_label).ok_or_else(|| {
            CliError::Config(format!("{}: bad eve_target `{target_label}`", dir.display()))
        })?;
        let (lo_ns, hi_ns) =
            effective_window_ns(&spec, &manifest.scenario).ok_or_else(|| {
                CliError::Config("ratio-matrix analysis needs a coincidence window".into())
            })?;
        let clicks = io::read_clicks(&dir.join("clicks.csv"))?;
        let label = manifest.run.label.clone().unwrap_or_else(|| target_label.into());
        rows.push((format!("{label}.bob_clicks"), clicks.bob.len().to_string()));
        rows.push((format!("{label}.eve_clicks"), clicks.eve.len().to_string()));
        let counts = gated_counts(
            &table_as_log(clicks),
            (ns_to_ps(lo_ns), ns_to_ps(hi_ns)),
        )?;
        per_target.push((target, counts));
        if !channels.contains(&target) {
            channels.push(target);
        }
    }
    channels.sort_by_key(|c| c.index());

    let matrix = RMatrix::from_runs(&channels, &per_target)?;
    io::write_rmatrix(&out.join("rmatrix.csv"), &matrix)?;

    for &channel in &channels {
        let leak = observed_leakage(&matrix, channel)?;
        rows.push((format!("observed_leakage_{}", channel.label()), format!("{leak:.6e}")));
    }
    if let Some(exp) = &spec.expected_leakage {
        let value = expected_leakage(
            exp.efficiency,
            exp.eve_throughput,
            exp.reverse_transmission,
            exp.backflash_prob,
        )?;
        rows.push(("expected_leakage".into(), format!("{value:.6e}")));
    }
    io::write_estimates(&out.join("estimates.csv"), &rows)
}

/// `analyze`: read the click CSVs of one run (or the labeled runs of a
/// multi-run experiment) and write the configured estimates.
pub fn analyze(in_dir: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let out = out_dir.unwrap_or(in_dir);
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    if in_dir.join("clicks.csv").exists() {
        return analyze_single(in_dir, out);
    }

    let mut runs: Vec<(PathBuf, Manifest)> = Vec::new();
    let entries = fs::read_dir(in_dir).map_err(|e| CliError::io(in_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(in_dir, e))?;
        let dir = entry.path();
        if dir.is_dir() && dir.join("clicks.csv").exists() {
            runs.push((dir.clone(), Manifest::read(&dir.join("manifest.toml"))?));
        }
    }
    if runs.is_empty() {
        return Err(CliError::Io(format!(
            "{}: no clicks.csv found (neither directly nor in run subdirectories)",
            in_dir.display()
        )));
    }
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    analyze_multi(runs, out)
}

/// Key-rate sweep request.
#[derive(Debug, Clone)]
pub struct KeyRateRequest {
    pub p_det: f64,
    pub qber: f64,
    /// Explicit error-correction leakage; otherwise computed as
    /// `ec_inefficiency * h(qber) * p_det`.
    pub leak_ec: Option<f64>,
    pub ec_inefficiency: f64,
    /// Evaluate a single tagged fraction.
    pub tag_fraction: Option<f64>,
    /// Sweep the tagged fraction from 0 to `p_det` in this many steps.
    pub sweep_tag_steps: Option<usize>,
    /// Sweep the error rate from 0 to 0.5 in this many steps.
    pub sweep_qber_steps: Option<usize>,
    /// Pull `p_b_estimate` from an estimates.csv and add a worst-case
    /// tagged-fraction point `P_E = P_b * T_b`.
    pub from_estimates: Option<PathBuf>,
    pub reverse_transmission: Option<f64>,
}

fn keyrate_row(
    sweep: &str,
    value: f64,
    p_det: f64,
    qber: f64,
    tag_fraction: f64,
    leak_ec: f64,
) -> Result<KeyRateRow, CliError> {
    let result = key_rate(&KeyRateInput {
        p_det,
        qber,
        leak_ec,
        tag_fraction,
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(KeyRateRow {
        sweep: sweep.into(),
        value,
        p_det,
        qber,
        tag_fraction,
        leak_ec,
        rate: result.rate,
        abort: result.abort.map(|a| a.label()),
    })
}

pub fn keyrate_rows(request: &KeyRateRequest) -> Result<Vec<KeyRateRow>, CliError> {
    let leak_ec = match request.leak_ec {
        Some(value) => value,
        None => ec_leakage(request.ec_inefficiency, request.qber, request.p_det)
            .map_err(|e| CliError::Config(e.to_string()))?,
    };
    let mut rows = Vec::new();

    if let Some(tag) = request.tag_fraction {
        rows.push(keyrate_row(
            "point",
            tag,
            request.p_det,
            request.qber,
            tag,
            leak_ec,
        )?);
    }
    if let Some(steps) = request.sweep_tag_steps {
        if steps == 0 {
            return Err(CliError::Config("sweep needs at least one step".into()));
        }
        for i in 0..=steps {
            let tag = request.p_det * i as f64 / steps as f64;
            rows.push(keyrate_row(
                "tag_fraction",
                tag,
                request.p_det,
                request.qber,
                tag,
                leak_ec,
            )?);
        }
    }
    if let Some(steps) = request.sweep_qber_steps {
        if steps == 0 {
            return Err(CliError::Config("sweep needs at least one step".into()));
        }
        let tag = request.tag_fraction.unwrap_or(0.0);
        for i in 0..=steps {
            let qber = 0.5 * i as f64 / steps as f64;
            // Per-point error-correction cost tracks the swept error rate.
            let point_leak = match request.leak_ec {
                Some(value) => value,
                None => ec_leakage(request.ec_inefficiency, qber, request.p_det)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            };
            rows.push(keyrate_row(
                "qber",
                qber,
                request.p_det,
                qber,
                tag,
                point_leak,
            )?);
        }
    }
    if let Some(path) = &request.from_estimates {
        let t_b = request.reverse_transmission.ok_or_else(|| {
            CliError::Config("--from-estimates needs --reverse-transmission".into())
        })?;
        let estimates = io::read_estimates(path)?;
        let p_b: f64 = estimates
            .iter()
            .find(|(key, _)| key == "p_b_estimate")
            .ok_or_else(|| {
                CliError::Config(format!("{}: no p_b_estimate row", path.display()))
            })?
            .1
            .parse()
            .map_err(|e| CliError::Config(format!("{}: bad p_b_estimate: {e}", path.display())))?;
        let tag = worst_case_tag_fraction(p_b, t_b)
            .map_err(|e| CliError::Config(e.to_string()))?;
        rows.push(keyrate_row(
            "worst-case-from-estimates",
            tag,
            request.p_det,
            request.qber,
            tag,
            leak_ec,
        )?);
    }

    if rows.is_empty() {
        return Err(CliError::Config(
            "nothing to evaluate: give --tag-fraction, a sweep, or --from-estimates".into(),
        ));
    }
    Ok(rows)
}

/// `keyrate`: evaluate the tagged-signal key rate over the requested
/// points and write `keyrate.csv`.
pub fn keyrate(request: &KeyRateRequest, out: &Path) -> Result<(), CliError> {
    let rows = keyrate_rows(request)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    io::write_keyrate(out, &rows)
}

/// `preset list`: one line per bundled preset.
pub fn preset_list() -> String {
    presets::PRESET_NAMES
        .iter()
        .map(|name| format!("{name:<24} {}\n", presets::describe(name)))
        .collect()
}

/// `preset run`: execute a preset end to end (simulate and analyze, or the
/// preset's deterministic computation) into `out`.
pub fn preset_run(
    name: &str,
    seed_override: Option<u64>,
    out: &Path,
    jobs: usize,
) -> Result<(), CliError> {
    let preset = presets::lookup(name)
        .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`; see `preset list`")))?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match preset {
        Preset::MonteCarlo { runs, analysis } => {
            let resolved = ResolvedSimulation {
                runs,
                analysis: Some(analysis),
            };
            run_all(&resolved, seed_override, out, jobs)?;
            analyze(out, None)
        }
        Preset::ExtinctionScan {
            channels,
            eve_throughput,
            scan_step_deg,
        } => {
            let mut results = Vec::new();
            for ch in &channels {
                let beam = JonesVector::linear_deg(ch.beam_angle_deg);
                // D is scanned on the 180-360 half-turn so the maximum
                // lands on the recorded analyzer angle; polarizer power is
                // pi-periodic.
                let start = if ch.channel == 'D' { 180.0 } else { 0.0 };
                let steps = (180.0 / scan_step_deg) as usize;
                let scan: Vec<(f64, f64)> = (0..steps)
                    .map(|i| {
                        let angle = start + i as f64 * scan_step_deg;
                        let pbs = PbsSpec::new(angle, ch.extinction_ratio)
                            .expect("preset extinction ratios are valid");
                        let transmitted = pbs_project(&beam, &pbs)
                            .expect("preset beam states are normalized")
                            .p_transmit;
                        let power = ch.source_power_uw
                            * ch.reverse_transmission
                            * eve_throughput
                            * transmitted;
                        (angle, power)
                    })
                    .collect();
                let extrema = extinction_ratio_from_scan(&scan)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                results.push((ch.channel, extrema));
            }
            io::write_extinction(&out.join("extinction.csv"), &results)
        }
        Preset::KeyRateSweep(spec) => {
            let worst_case = worst_case_tag_fraction(
                spec.worst_case_backflash_prob,
                spec.worst_case_reverse_transmission,
            )
            .map_err(|e| CliError::Internal(e.to_string()))?;
            let request = KeyRateRequest {
                p_det: spec.p_det,
                qber: spec.qber,
                leak_ec: None,
                ec_inefficiency: spec.ec_inefficiency,
                tag_fraction: Some(worst_case),
                sweep_tag_steps: Some(spec.steps),
                sweep_qber_steps: None,
                from_estimates: None,
                reverse_transmission: None,
            };
            keyrate(&request, &out.join("keyrate.csv"))
        }
    }
}

//! Scenario configuration and the four experiment runners behind the CLI.
//!
//! A scenario file is TOML with a `[params]` table (Table-style circuit
//! values, SI base units), a `[drive]` table, and one table per experiment
//! kind. Angles cross the file boundary in degrees and are converted to
//! radians on load. Every run writes its result CSVs plus a `manifest.json`
//! echoing the config, tool version, and the tolerances applied.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::Deserialize;

use crate::dq::{dq_steady_state_at, integrate_dq, vector_phase, DqInput};
use crate::error::{Error, Result};
use crate::identify::{identify_m, KnownParams};
use crate::oracle::{cycle_peaks, extract_steady_state, simulate, simulate_schedule, DriveSegment};
use crate::params::{DriveSpec, OperatingPoint, SystemParams, Waveform};
use crate::phasor::{linspace, solve_steady_state, solve_steady_state_complex};
use crate::map_ordered;

/// Tolerances enforced in `--check` mode. Values are fixed here, not
/// configurable: they are the acceptance bounds of the toolkit.
pub mod bounds {
    /// dq steady state vs phasor model, same linear system.
    pub const DQ_VS_PHASOR_REL: f64 = 1e-9;
    /// Model vs time-domain oracle, amplitude (relative).
    pub const MODEL_VS_ORACLE_AMP_REL: f64 = 5e-3;
    /// Model vs time-domain oracle, phase (degrees).
    pub const MODEL_VS_ORACLE_PHASE_DEG: f64 = 0.1;
    /// Step response, steady-state envelope agreement (relative).
    pub const STEP_STEADY_REL: f64 = 5e-3;
    /// Step response, transient envelope agreement (relative).
    pub const STEP_TRANSIENT_REL: f64 = 3e-2;
    /// Phase-check agreement (degrees).
    pub const PHASE_CHECK_DEG: f64 = 0.05;
    /// Identification accuracy bound (relative).
    pub const IDENTIFY_REL: f64 = 3e-2;
    /// Identification outlier ceiling: at most one point per load may fall
    /// in [IDENTIFY_REL, IDENTIFY_OUTLIER_REL).
    pub const IDENTIFY_OUTLIER_REL: f64 = 5e-2;
}

// ---------------------------------------------------------------------------
// config file schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    params: ParamsSection,
    drive: DriveSection,
    sweep: Option<SweepSection>,
    step: Option<StepSection>,
    phase: Option<PhaseSection>,
    identify: Option<IdentifySection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    l_t: f64,
    c_t: f64,
    r_t: f64,
    l_r: f64,
    c_r: f64,
    r_r: f64,
    r_l: f64,
    // no default: every scenario states its coupling explicitly
    m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriveSection {
    u_dc: f64,
    sigma_deg: f64,
    f_hz: f64,
    waveform: Waveform,
}

fn default_sweep_points() -> usize {
    81
}
fn default_oracle_spots() -> usize {
    5
}
fn default_settle_cycles() -> usize {
    200
}
fn default_fit_cycles() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    #[serde(default = "default_sweep_points")]
    pub points: usize,
    /// Mutual inductance values to sweep; defaults to the `[params]` value.
    #[serde(default)]
    pub m_values: Vec<f64>,
    #[serde(default = "default_oracle_spots")]
    pub oracle_spots: usize,
    #[serde(default = "default_settle_cycles")]
    pub settle_cycles: usize,
    #[serde(default = "default_fit_cycles")]
    pub fit_cycles: usize,
}

fn default_step_cycle() -> usize {
    100
}
fn default_total_cycles() -> usize {
    200
}
fn default_step_settle() -> usize {
    60
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub u_dc_before: f64,
    pub u_dc_after: f64,
    #[serde(default = "default_step_cycle")]
    pub step_cycle: usize,
    #[serde(default = "default_total_cycles")]
    pub total_cycles: usize,
    /// Cycles after t = 0 and after the step treated as transient.
    #[serde(default = "default_step_settle")]
    pub settle_cycles: usize,
}

fn default_phase_freqs() -> Vec<f64> {
    vec![85e3, 95e3, 105e3, 115e3, 125e3]
}
fn default_phase_settle() -> usize {
    290
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default = "default_phase_freqs")]
    pub f_list_hz: Vec<f64>,
    #[serde(default = "default_phase_settle")]
    pub settle_cycles: usize,
    #[serde(default = "default_fit_cycles")]
    pub fit_cycles: usize,
}

fn default_samples_per_cycle() -> usize {
    24
}
fn default_identify_settle() -> usize {
    200
}
fn default_measure_cycles() -> usize {
    15
}
fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifySection {
    pub k_values: Vec<f64>,
    pub r_l_values: Vec<f64>,
    /// Drive waveforms to evaluate; defaults to the `[drive]` waveform.
    #[serde(default)]
    pub waveforms: Vec<Waveform>,
    #[serde(default = "default_samples_per_cycle")]
    pub samples_per_cycle: usize,
    #[serde(default = "default_identify_settle")]
    pub settle_cycles: usize,
    #[serde(default = "default_measure_cycles")]
    pub measure_cycles: usize,
    /// Relative sensor noise standard deviation; active only with a seed.
    #[serde(default)]
    pub noise_std_rel: f64,
    /// Deliberate receiver-inductance mismatch factor for sensitivity runs.
    #[serde(default = "default_one")]
    pub l_r_mismatch_factor: f64,
}

/// A loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: SystemParams,
    pub drive: DriveSpec,
    pub sweep: Option<SweepSection>,
    pub step: Option<StepSection>,
    pub phase: Option<PhaseSection>,
    pub identify: Option<IdentifySection>,
    /// Raw config text, echoed into the manifest.
    pub raw: String,
}

/// Parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&raw)
}

pub fn parse_scenario(raw: &str) -> Result<Scenario> {
    let cfg: ConfigFile =
        toml::from_str(raw).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    let p = &cfg.params;
    let params = SystemParams::new(p.l_t, p.c_t, p.r_t, p.l_r, p.c_r, p.r_r, p.r_l, p.m)
        .map_err(|e| Error::Config(format!("[params]: {e}")))?;
    let d = &cfg.drive;
    let drive = DriveSpec::new(d.u_dc, d.sigma_deg.to_radians(), d.f_hz, d.waveform)
        .map_err(|e| Error::Config(format!("[drive]: {e}")))?;
    if let Some(s) = &cfg.sweep {
        if s.f_start_hz <= 0.0 || s.f_stop_hz < s.f_start_hz {
            return Err(Error::Config("[sweep]: invalid frequency range".into()));
        }
    }
    if let Some(s) = &cfg.step {
        if s.step_cycle < 60 {
            return Err(Error::Config(
                "[step]: step_cycle must allow at least 60 start-up cycles".into(),
            ));
        }
        if s.total_cycles <= s.step_cycle {
            return Err(Error::Config("[step]: total_cycles must exceed step_cycle".into()));
        }
    }
    if let Some(s) = &cfg.phase {
        if s.f_list_hz.is_empty() {
            return Err(Error::Config("[phase]: frequency list is empty".into()));
        }
    }
    if let Some(s) = &cfg.identify {
        if s.k_values.iter().any(|&k| !(0.0..=0.5).contains(&k)) {
            return Err(Error::Config("[identify]: k values must lie in (0, 0.5]".into()));
        }
        if s.r_l_values.iter().any(|&r| r <= 0.0) {
            return Err(Error::Config("[identify]: loads must be positive".into()));
        }
        if s.samples_per_cycle == 0 || s.samples_per_cycle % 4 != 0 {
            return Err(Error::Config(
                "[identify]: samples_per_cycle must be a positive multiple of 4".into(),
            ));
        }
    }
    Ok(Scenario {
        params,
        drive,
        sweep: cfg.sweep,
        step: cfg.step,
        phase: cfg.phase,
        identify: cfg.identify,
        raw: raw.to_string(),
    })
}

// ---------------------------------------------------------------------------
// run plumbing

/// Flags shared by all runners.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub oracle: bool,
    pub check: bool,
    pub seed: Option<u64>,
}

/// What a run produced and whether it stayed inside the check bounds.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Bound violations (exit 4 in --check mode).
    pub check_failures: Vec<String>,
    /// Per-point hard errors that did not abort the run (exit 3).
    pub hard_errors: Vec<String>,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.10e}")
}

fn write_file(out_dir: &Path, name: &str, contents: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, contents)?;
    files.push(path);
    Ok(())
}

fn write_manifest(
    out_dir: &Path,
    command: &str,
    scenario: &Scenario,
    opts: &RunOptions,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let manifest = serde_json::json!({
        "tool": "wpt-dq",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": opts.seed,
        "oracle": opts.oracle,
        "check": opts.check,
        "tolerances": {
            "dq_vs_phasor_rel": bounds::DQ_VS_PHASOR_REL,
            "model_vs_oracle_amp_rel": bounds::MODEL_VS_ORACLE_AMP_REL,
            "model_vs_oracle_phase_deg": bounds::MODEL_VS_ORACLE_PHASE_DEG,
            "step_steady_rel": bounds::STEP_STEADY_REL,
            "step_transient_rel": bounds::STEP_TRANSIENT_REL,
            "phase_check_deg": bounds::PHASE_CHECK_DEG,
            "identify_rel": bounds::IDENTIFY_REL,
            "identify_outlier_rel": bounds::IDENTIFY_OUTLIER_REL,
        },
        "config": scenario.raw,
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    write_file(out_dir, "manifest.json", &text, files)
}

fn m_tag(m: f64) -> String {
    format!("{:.2}uH", m * 1e6).replace('.', "p")
}

// ---------------------------------------------------------------------------
// frequency sweep

/// Phasor and dq steady states over a frequency grid, with optional
/// time-domain oracle spot checks.
pub fn run_frequency_sweep(
    scenario: &Scenario,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let sweep = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no [sweep] section".into()))?;
    let mut outcome = RunOutcome::default();
    let u_s = scenario.drive.fundamental_voltage();
    let freqs = linspace(sweep.f_start_hz, sweep.f_stop_hz, sweep.points);
    let m_values = if sweep.m_values.is_empty() {
        vec![scenario.params.m()]
    } else {
        sweep.m_values.clone()
    };

    for &m in &m_values {
        let params = scenario.params.with_m(m)?;
        let rows: Vec<Result<(f64, _, _, f64)>> = map_ordered(&freqs, |&f| {
            let op = OperatingPoint {
                omega: 2.0 * std::f64::consts::PI * f,
                u_s,
            };
            let ph = solve_steady_state_complex(&params, &op).map_err(|e| match e {
                Error::SingularSystem { .. } => Error::SingularSystem { f_hz: Some(f) },
                e => e,
            })?;
            let dq_ss = dq_steady_state_at(&params, &op)?;
            let dq_vec = [dq_ss.i_dqt, dq_ss.i_dqr, dq_ss.i_dqc];
            let scale = ph.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-30);
            let disc = ph
                .iter()
                .zip(dq_vec.iter())
                .map(|(a, b)| (a - b).norm() / scale)
                .fold(0.0f64, f64::max);
            Ok((f, ph, dq_vec, disc))
        });

        let mut phasor_csv =
            String::from("f_hz,i_t_amp,phi_t_deg,i_r_amp,phi_r_deg,i_c_amp,phi_c_deg\n");
        let mut compare_csv = String::from(
            "f_hz,ph_i_t_amp,ph_phi_t_deg,dq_i_t_amp,dq_phi_t_deg,ph_i_r_amp,ph_phi_r_deg,dq_i_r_amp,dq_phi_r_deg,ph_i_c_amp,ph_phi_c_deg,dq_i_c_amp,dq_phi_c_deg,dq_vs_phasor_rel\n",
        );
        let mut max_disc = 0.0f64;
        for row in rows {
            let (f, ph, dq_vec, disc) = row?;
            max_disc = max_disc.max(disc);
            let pol = |z: num_complex::Complex64| {
                let amp = z.norm();
                let phi = if amp == 0.0 {
                    0.0
                } else {
                    crate::params::wrap_phase(-z.arg()).to_degrees()
                };
                (amp, phi)
            };
            let (pt, ppt) = pol(ph[0]);
            let (pr, ppr) = pol(ph[1]);
            let (pc, ppc) = pol(ph[2]);
            let (dt, dpt) = pol(dq_vec[0]);
            let (dr, dpr) = pol(dq_vec[1]);
            let (dc, dpc) = pol(dq_vec[2]);
            let _ = writeln!(
                phasor_csv,
                "{},{},{},{},{},{},{}",
                fmt_f(f),
                fmt_f(pt),
                fmt_f(ppt),
                fmt_f(pr),
                fmt_f(ppr),
                fmt_f(pc),
                fmt_f(ppc)
            );
            let _ = writeln!(
                compare_csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                fmt_f(f),
                fmt_f(pt),
                fmt_f(ppt),
                fmt_f(dt),
                fmt_f(dpt),
                fmt_f(pr),
                fmt_f(ppr),
                fmt_f(dr),
                fmt_f(dpr),
                fmt_f(pc),
                fmt_f(ppc),
                fmt_f(dc),
                fmt_f(dpc),
                fmt_f(disc)
            );
        }
        let _ = writeln!(compare_csv, "# max_dq_vs_phasor_rel,{}", fmt_f(max_disc));
        if opts.check && max_disc > bounds::DQ_VS_PHASOR_REL {
            outcome.check_failures.push(format!(
                "sweep m={m:e}: dq-vs-phasor discrepancy {max_disc:e} exceeds {:e}",
                bounds::DQ_VS_PHASOR_REL
            ));
        }
        write_file(
            out_dir,
            &format!("sweep_phasor_{}.csv", m_tag(m)),
            &phasor_csv,
            &mut outcome.files,
        )?;
        write_file(
            out_dir,
            &format!("sweep_compare_{}.csv", m_tag(m)),
            &compare_csv,
            &mut outcome.files,
        )?;

        if opts.oracle {
            let spots = spot_indices(freqs.len(), sweep.oracle_spots);
            let spot_freqs: Vec<f64> = spots.iter().map(|&i| freqs[i]).collect();
            let settle = sweep.settle_cycles;
            let fit = sweep.fit_cycles;
            let drive_base = scenario.drive;
            let results: Vec<Result<(f64, [(f64, f64); 3])>> = map_ordered(&spot_freqs, |&f| {
                let drive = DriveSpec::new(
                    drive_base.u_dc(),
                    drive_base.sigma(),
                    f,
                    Waveform::SinusoidalFundamental,
                )?;
                let t_end = (settle + fit) as f64 / f;
                let out = simulate(&params, &drive, t_end, 1.0 / (1000.0 * f))?;
                let a = extract_steady_state(&out.i_t, f, fit)?;
                let b = extract_steady_state(&out.i_r, f, fit)?;
                let c = extract_steady_state(&out.i_c, f, fit)?;
                Ok((f, [a, b, c]))
            });
            let mut oracle_csv = String::from(
                "f_hz,signal,oracle_amp,oracle_phi_deg,model_amp,model_phi_deg,amp_rel_err,phi_err_deg\n",
            );
            for res in results {
                let (f, fits) = res?;
                let op = OperatingPoint {
                    omega: 2.0 * std::f64::consts::PI * f,
                    u_s,
                };
                let ph = solve_steady_state(&params, &op)?;
                let model = [
                    (ph.i_t_amp, ph.phi_t),
                    (ph.i_r_amp, ph.phi_r),
                    (ph.i_c_amp, ph.phi_c),
                ];
                for (sig, ((o_amp, o_phi), (m_amp, m_phi))) in
                    ["i_t", "i_r", "i_c"].iter().zip(fits.iter().zip(model.iter()))
                {
                    let amp_rel = (o_amp - m_amp).abs() / m_amp.abs().max(1e-30);
                    let mut dphi = (o_phi - m_phi).to_degrees();
                    dphi = (dphi + 180.0).rem_euclid(360.0) - 180.0;
                    let _ = writeln!(
                        oracle_csv,
                        "{},{},{},{},{},{},{},{}",
                        fmt_f(f),
                        sig,
                        fmt_f(*o_amp),
                        fmt_f(o_phi.to_degrees()),
                        fmt_f(*m_amp),
                        fmt_f(m_phi.to_degrees()),
                        fmt_f(amp_rel),
                        fmt_f(dphi)
                    );
                    if opts.check {
                        if amp_rel > bounds::MODEL_VS_ORACLE_AMP_REL {
                            outcome.check_failures.push(format!(
                                "sweep m={m:e} f={f}: {sig} amplitude error {amp_rel:e}"
                            ));
                        }
                        if dphi.abs() > bounds::MODEL_VS_ORACLE_PHASE_DEG {
                            outcome.check_failures.push(format!(
                                "sweep m={m:e} f={f}: {sig} phase error {dphi} deg"
                            ));
                        }
                    }
                }
            }
            write_file(
                out_dir,
                &format!("sweep_oracle_{}.csv", m_tag(m)),
                &oracle_csv,
                &mut outcome.files,
            )?;
        }
    }

    write_manifest(out_dir, "sweep", scenario, opts, &mut outcome.files)?;
    Ok(outcome)
}

fn spot_indices(n: usize, spots: usize) -> Vec<usize> {
    if n == 0 || spots == 0 {
        return Vec::new();
    }
    if spots >= n {
        return (0..n).collect();
    }
    if spots == 1 {
        return vec![n / 2];
    }
    (0..spots)
        .map(|i| (i as f64 * (n - 1) as f64 / (spots - 1) as f64).round() as usize)
        .collect()
}

// ---------------------------------------------------------------------------
// step response

/// dc-voltage step: oracle envelope vs dq magnitude on a shared timeline.
pub fn run_step_response(
    scenario: &Scenario,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let step = scenario
        .step
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no [step] section".into()))?;
    let mut outcome = RunOutcome::default();
    let f = scenario.drive.f();
    let t_step = step.step_cycle as f64 / f;
    let t_end = step.total_cycles as f64 / f;
    let drive_before = scenario.drive.with_u_dc(step.u_dc_before)?;
    let drive_after = scenario.drive.with_u_dc(step.u_dc_after)?;

    let out = simulate_schedule(
        &scenario.params,
        &[
            DriveSegment {
                t_from: 0.0,
                drive: drive_before,
            },
            DriveSegment {
                t_from: t_step,
                drive: drive_after,
            },
        ],
        t_end,
        1.0 / (1000.0 * f),
    )?;

    let u_before = drive_before.fundamental_voltage();
    let u_after = drive_after.fundamental_voltage();
    let omega = scenario.drive.omega();
    let traj = integrate_dq(
        &scenario.params,
        omega,
        |t| DqInput::real(if t < t_step { u_before } else { u_after }),
        t_end,
        1.0 / (200.0 * f),
    )?;

    // dq trajectory export
    let mut dq_csv = String::from(
        "t_s,i_dt,i_qt,i_dr,i_qr,i_dc,i_qc,mag_i_dqt,phase_i_dqt_deg\n",
    );
    for (t, s) in traj.t.iter().zip(traj.states.iter()) {
        let phase = vector_phase(s.i_dqt.re, s.i_dqt.im)
            .map(|p| p.to_degrees())
            .unwrap_or(0.0);
        let _ = writeln!(
            dq_csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f(*t),
            fmt_f(s.i_dqt.re),
            fmt_f(s.i_dqt.im),
            fmt_f(s.i_dqr.re),
            fmt_f(s.i_dqr.im),
            fmt_f(s.i_dqc.re),
            fmt_f(s.i_dqc.im),
            fmt_f(s.i_dqt.norm()),
            fmt_f(phase)
        );
    }
    write_file(out_dir, "step_dq.csv", &dq_csv, &mut outcome.files)?;

    // shared-timeline trace, decimated to the dq step width
    let mut trace_csv = String::from("t_s,u_s,i_t,mag_i_dqt\n");
    let decim = 5;
    for k in (0..out.i_t.len()).step_by(decim) {
        let t = out.i_t.time(k);
        let _ = writeln!(
            trace_csv,
            "{},{},{},{}",
            fmt_f(t),
            fmt_f(out.u_s.values[k]),
            fmt_f(out.i_t.values[k]),
            fmt_f(traj.interp_mag_t(t))
        );
    }
    write_file(out_dir, "step_trace.csv", &trace_csv, &mut outcome.files)?;

    // cycle-peak envelope comparison
    let peaks = cycle_peaks(&out.i_t, f);
    let mut env_csv = String::from("cycle,t_peak_s,i_t_peak,mag_i_dqt,rel_err,regime\n");
    for (cycle, (t_peak, peak)) in peaks.iter().enumerate() {
        let dq_mag = traj.interp_mag_t(*t_peak);
        let rel = (dq_mag - peak).abs() / peak.abs().max(1e-30);
        let regime = if cycle < step.settle_cycles
            || (cycle >= step.step_cycle && cycle < step.step_cycle + step.settle_cycles)
        {
            "transient"
        } else {
            "steady"
        };
        let _ = writeln!(
            env_csv,
            "{},{},{},{},{},{}",
            cycle,
            fmt_f(*t_peak),
            fmt_f(*peak),
            fmt_f(dq_mag),
            fmt_f(rel),
            regime
        );
        if opts.check {
            // start-up from zero state is outside the comparison window
            if cycle < step.settle_cycles {
                continue;
            }
            let bound = if regime == "steady" {
                bounds::STEP_STEADY_REL
            } else {
                bounds::STEP_TRANSIENT_REL
            };
            if rel > bound {
                outcome.check_failures.push(format!(
                    "step cycle {cycle} ({regime}): envelope error {rel:e} exceeds {bound:e}"
                ));
            }
        }
    }
    write_file(out_dir, "step_envelope.csv", &env_csv, &mut outcome.files)?;
    write_manifest(out_dir, "step", scenario, opts, &mut outcome.files)?;
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// phase check

/// Oracle-fitted vs dq-calculated transmitter current phase per frequency.
pub fn run_phase_check(
    scenario: &Scenario,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let phase = scenario
        .phase
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no [phase] section".into()))?;
    let mut outcome = RunOutcome::default();
    let params = scenario.params;
    let drive_base = scenario.drive;
    let settle = phase.settle_cycles;
    let fit = phase.fit_cycles;

    let rows: Vec<Result<(f64, f64, f64)>> = map_ordered(&phase.f_list_hz, |&f| {
        let drive = DriveSpec::new(drive_base.u_dc(), drive_base.sigma(), f, drive_base.waveform())?;
        let t_end = (settle + fit) as f64 / f;
        let out = simulate(&params, &drive, t_end, 1.0 / (1000.0 * f))?;
        let (_, actual) = extract_steady_state(&out.i_t, f, fit)?;
        let op = drive.operating_point();
        let ss = dq_steady_state_at(&params, &op)?;
        let calculated = vector_phase(ss.i_dqt.re, ss.i_dqt.im)?;
        Ok((f, actual.to_degrees(), calculated.to_degrees()))
    });

    let mut csv = String::from("f_hz,actual_phi_t_deg,calculated_phi_t_deg,diff_deg\n");
    let mut table = String::from(
        "f (kHz)   actual phi_t (deg)   calculated phi_t (deg)   diff (deg)\n",
    );
    for row in rows {
        let (f, actual, calculated) = row?;
        let mut diff = actual - calculated;
        diff = (diff + 180.0).rem_euclid(360.0) - 180.0;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_f(f),
            fmt_f(actual),
            fmt_f(calculated),
            fmt_f(diff)
        );
        let _ = writeln!(
            table,
            "{:<9.1} {:>18.3} {:>22.3} {:>14.4}",
            f / 1e3,
            actual,
            calculated,
            diff
        );
        if opts.check && diff.abs() > bounds::PHASE_CHECK_DEG {
            outcome.check_failures.push(format!(
                "phase f={f}: |actual - calculated| = {} deg exceeds {}",
                diff.abs(),
                bounds::PHASE_CHECK_DEG
            ));
        }
    }
    print!("{table}");
    write_file(out_dir, "phase_check.csv", &csv, &mut outcome.files)?;
    write_manifest(out_dir, "phase", scenario, opts, &mut outcome.files)?;
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// identification sweep

struct IdentifyPoint {
    index: usize,
    waveform: Waveform,
    r_l: f64,
    k: f64,
}

/// Full oracle -> sensor -> identification pipeline over the (k, load) grid.
pub fn run_identify_sweep(
    scenario: &Scenario,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    let ident = scenario
        .identify
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no [identify] section".into()))?;
    let mut outcome = RunOutcome::default();
    let f = scenario.drive.f();
    let waveforms = if ident.waveforms.is_empty() {
        vec![scenario.drive.waveform()]
    } else {
        ident.waveforms.clone()
    };

    let mut grid = Vec::new();
    for &waveform in &waveforms {
        for &r_l in &ident.r_l_values {
            for &k in &ident.k_values {
                grid.push(IdentifyPoint {
                    index: grid.len(),
                    waveform,
                    r_l,
                    k,
                });
            }
        }
    }

    let base = scenario.params;
    let drive_base = scenario.drive;
    let fine_per_cycle = 42 * ident.samples_per_cycle; // sensor instants land on the fine grid
    let results: Vec<(usize, std::result::Result<(f64, crate::identify::IdentificationResult), String>)> =
        map_ordered(&grid, |pt| {
            let run = || -> Result<(f64, crate::identify::IdentificationResult)> {
                let params = base.with_r_l(pt.r_l)?.with_coupling(pt.k)?;
                let m_true = params.m();
                let drive =
                    DriveSpec::new(drive_base.u_dc(), drive_base.sigma(), f, pt.waveform)?;
                let t_end = (ident.settle_cycles + ident.measure_cycles) as f64 / f;
                let out = simulate(&params, &drive, t_end, 1.0 / (fine_per_cycle as f64 * f))?;
                let mut sensor = out
                    .i_t
                    .resample_zoh(ident.samples_per_cycle as f64 * f)?;
                if ident.noise_std_rel > 0.0 {
                    if let Some(seed) = opts.seed {
                        let scale = sensor
                            .values
                            .iter()
                            .fold(0.0f64, |a, &v| a.max(v.abs()));
                        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(
                            seed.wrapping_add(pt.index as u64),
                        );
                        for v in &mut sensor.values {
                            let n: f64 = rng.sample(rand_distr::StandardNormal);
                            *v += ident.noise_std_rel * scale * n;
                        }
                    }
                }
                let tail = sensor.from_time(ident.settle_cycles as f64 / f)?;
                let mut known = KnownParams::from(&params);
                known.l_r *= ident.l_r_mismatch_factor;
                let res = identify_m(&tail, &known, &drive)?.with_true_m(m_true);
                Ok((m_true, res))
            };
            (pt.index, run().map_err(|e| e.to_string()))
        });

    let mut csv = String::from("m_true_h,m_hat_h,rel_err,k_true,r_l_ohm,waveform,f_hz\n");
    let mut per_group: std::collections::BTreeMap<(String, String), Vec<f64>> =
        std::collections::BTreeMap::new();
    for ((idx, res), pt) in results.into_iter().zip(grid.iter()) {
        debug_assert_eq!(idx, pt.index);
        match res {
            Ok((m_true, r)) => {
                let rel = r.relative_error.unwrap_or(f64::NAN);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    fmt_f(m_true),
                    fmt_f(r.m_hat),
                    fmt_f(rel),
                    fmt_f(pt.k),
                    fmt_f(pt.r_l),
                    pt.waveform.as_str(),
                    fmt_f(f)
                );
                per_group
                    .entry((pt.waveform.as_str().to_string(), format!("{}", pt.r_l)))
                    .or_default()
                    .push(rel);
            }
            Err(e) => {
                outcome.hard_errors.push(format!(
                    "identify point k={} r_l={} {}: {e}",
                    pt.k,
                    pt.r_l,
                    pt.waveform.as_str()
                ));
            }
        }
    }

    let mut summary = String::from("waveform,r_l_ohm,points,max_rel_err,outliers_3_to_5pct,pass\n");
    for ((waveform, r_l), errs) in &per_group {
        let max = errs.iter().cloned().fold(0.0f64, f64::max);
        let outliers = errs
            .iter()
            .filter(|&&e| e >= bounds::IDENTIFY_REL && e < bounds::IDENTIFY_OUTLIER_REL)
            .count();
        let hard = errs.iter().filter(|&&e| e >= bounds::IDENTIFY_OUTLIER_REL).count();
        let pass = hard == 0 && outliers <= 1;
        let _ = writeln!(
            summary,
            "{waveform},{r_l},{},{},{outliers},{}",
            errs.len(),
            fmt_f(max),
            if pass { "true" } else { "false" }
        );
        if opts.check && !pass {
            outcome.check_failures.push(format!(
                "identify {waveform} r_l={r_l}: max error {max:e}, {outliers} outliers in [3%,5%), {hard} beyond"
            ));
        }
    }
    write_file(out_dir, "identify_results.csv", &csv, &mut outcome.files)?;
    write_file(out_dir, "identify_summary.csv", &summary, &mut outcome.files)?;
    write_manifest(out_dir, "identify", scenario, opts, &mut outcome.files)?;
    Ok(outcome)
}

//! End-to-end identification pipeline tests: physical simulation in, sensor
//! sampling, dq demodulation, and the mutual-inductance estimate out.

use rand::{Rng, SeedableRng};

use wpt_dq::identify::{identify_m, relative_error, KnownParams};
use wpt_dq::oracle::simulate;
use wpt_dq::params::{DriveSpec, SystemParams, Waveform};
use wpt_dq::trace::SampledTrace;
use wpt_dq::Result;

const F: f64 = 105e3;
const SAMPLES_PER_CYCLE: f64 = 24.0;
/// Fine integration grid chosen so every sensor instant lands on it exactly.
const FINE_PER_CYCLE: f64 = 42.0 * SAMPLES_PER_CYCLE;

fn table_i(m: f64) -> SystemParams {
    SystemParams::new(140.90e-6, 16.45e-9, 0.200, 55.20e-6, 41.47e-9, 0.084, 100.0, m).unwrap()
}

fn sensor_trace(
    params: &SystemParams,
    drive: &DriveSpec,
    settle_cycles: usize,
    measure_cycles: usize,
) -> Result<SampledTrace> {
    let t_end = (settle_cycles + measure_cycles) as f64 / F;
    let out = simulate(params, drive, t_end, 1.0 / (FINE_PER_CYCLE * F))?;
    let sensor = out.i_t.resample_zoh(SAMPLES_PER_CYCLE * F)?;
    sensor.from_time(settle_cycles as f64 / F)
}

#[test]
fn identify_recovers_m_from_square_wave_trace() {
    let params = table_i(0.0).with_coupling(0.15).unwrap();
    let m_true = params.m();
    let drive = DriveSpec::new(20.0, 0.0, F, Waveform::PhaseShiftSquareWave).unwrap();
    let trace = sensor_trace(&params, &drive, 200, 15).unwrap();
    let res = identify_m(&trace, &KnownParams::from(&params), &drive).unwrap();
    let err = relative_error(res.m_hat, m_true);
    assert!(err < 3e-2, "relative error {err} for M = {m_true}");
    assert!((res.k_hat - 0.15).abs() / 0.15 < 3e-2, "k_hat = {}", res.k_hat);
}

#[test]
fn zero_coupling_reports_near_zero_m() {
    let params = table_i(0.0);
    let drive = DriveSpec::new(20.0, 0.0, F, Waveform::SinusoidalFundamental).unwrap();
    let trace = sensor_trace(&params, &drive, 120, 15).unwrap();
    let res = identify_m(&trace, &KnownParams::from(&params), &drive).unwrap();
    assert!(
        res.m_hat < 0.5e-6,
        "uncoupled coils should identify as (near) zero, got {} H",
        res.m_hat
    );
}

#[test]
fn estimate_increases_with_true_coupling() {
    let drive = DriveSpec::new(20.0, 0.0, F, Waveform::SinusoidalFundamental).unwrap();
    let estimates: Vec<f64> = [0.10, 0.14, 0.18]
        .iter()
        .map(|&k| {
            let params = table_i(0.0).with_coupling(k).unwrap();
            let trace = sensor_trace(&params, &drive, 120, 15).unwrap();
            identify_m(&trace, &KnownParams::from(&params), &drive)
                .unwrap()
                .m_hat
        })
        .collect();
    assert!(
        estimates.windows(2).all(|w| w[0] < w[1]),
        "estimates not monotone in true coupling: {estimates:?}"
    );
}

#[test]
fn identification_tolerates_sensor_noise() {
    let params = table_i(0.0).with_coupling(0.15).unwrap();
    let m_true = params.m();
    let drive = DriveSpec::new(20.0, 0.0, F, Waveform::SinusoidalFundamental).unwrap();
    let mut trace = sensor_trace(&params, &drive, 200, 15).unwrap();
    let peak = trace.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for v in &mut trace.values {
        let n: f64 = rng.sample(rand_distr::StandardNormal);
        *v += 0.01 * peak * n;
    }
    let res = identify_m(&trace, &KnownParams::from(&params), &drive).unwrap();
    let err = relative_error(res.m_hat, m_true);
    assert!(err < 5e-2, "relative error {err} with 1% sensor noise");
}

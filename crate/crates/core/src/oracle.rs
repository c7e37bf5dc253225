//! Time-domain ground truth: fixed-step RK4 integration of the physical SP
//! circuit, including the phase-shifted square-wave bridge output.
//!
//! State vector: (i_t, v_Ct, i_r, v_Cr). The coupled-inductor pair
//! [L_t M; M L_r] links the two current derivatives; the capacitor states
//! follow from i_t and the parallel-tank current split. The capacitor-branch
//! current is reconstructed from the state equation, i_c = i_r - v_Cr / R_L,
//! never by numerical differencing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{DriveSpec, SystemParams, Waveform};
use crate::solver::rk4_step;
use crate::trace::SampledTrace;

const DIVERGENCE_LIMIT: f64 = 1e9;

/// Instantaneous circuit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitState {
    pub i_t: f64,
    pub v_ct: f64,
    pub i_r: f64,
    pub v_cr: f64,
}

impl CircuitState {
    pub fn zero() -> Self {
        Self {
            i_t: 0.0,
            v_ct: 0.0,
            i_r: 0.0,
            v_cr: 0.0,
        }
    }
}

/// Instantaneous inverter output voltage.
///
/// Sinusoidal mode: U_s cos(w t) with U_s from the fundamental formula.
/// Square-wave mode: +U_dc on the conduction interval of width (pi - sigma)
/// centered per half cycle, -U_dc on the opposite half cycle, zero in the
/// sigma-wide freewheeling notches; the fundamental is then U_s cos(w t)
/// with zero phase.
pub fn drive_voltage(drive: &DriveSpec, t: f64) -> f64 {
    let omega = drive.omega();
    match drive.waveform() {
        Waveform::SinusoidalFundamental => drive.fundamental_voltage() * (omega * t).cos(),
        Waveform::PhaseShiftSquareWave => {
            let theta = (omega * t).rem_euclid(2.0 * PI);
            let half = (PI - drive.sigma()) / 2.0;
            if theta < half || theta >= 2.0 * PI - half {
                drive.u_dc()
            } else if (theta - PI).abs() < half {
                -drive.u_dc()
            } else {
                0.0
            }
        }
    }
}

/// State derivative for input voltage `u_s`.
pub fn derivatives(state: &CircuitState, params: &SystemParams, u_s: f64) -> Result<CircuitState> {
    let det = params.l_t() * params.l_r() - params.m() * params.m();
    if det <= 0.0 {
        return Err(Error::DegenerateCoupling);
    }
    let e_t = u_s - params.r_t() * state.i_t - state.v_ct;
    let e_r = -params.r_r() * state.i_r - state.v_cr;
    Ok(CircuitState {
        i_t: (params.l_r() * e_t - params.m() * e_r) / det,
        v_ct: state.i_t / params.c_t(),
        i_r: (params.l_t() * e_r - params.m() * e_t) / det,
        v_cr: (state.i_r - state.v_cr / params.r_l()) / params.c_r(),
    })
}

/// Drive active from `t_from` onward; segments must share one frequency.
#[derive(Debug, Clone, Copy)]
pub struct DriveSegment {
    pub t_from: f64,
    pub drive: DriveSpec,
}

/// Full set of traces from one simulation run, all on the same grid.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub u_s: SampledTrace,
    pub i_t: SampledTrace,
    pub i_r: SampledTrace,
    pub i_c: SampledTrace,
    pub v_cr: SampledTrace,
}

/// Simulate from zero initial state with a single drive.
pub fn simulate(
    params: &SystemParams,
    drive: &DriveSpec,
    t_end: f64,
    dt: f64,
) -> Result<SimOutput> {
    simulate_schedule(
        params,
        &[DriveSegment {
            t_from: 0.0,
            drive: *drive,
        }],
        t_end,
        dt,
    )
}

/// Simulate with a piecewise-constant drive schedule (e.g. a dc-voltage step).
pub fn simulate_schedule(
    params: &SystemParams,
    segments: &[DriveSegment],
    t_end: f64,
    dt: f64,
) -> Result<SimOutput> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidParams("empty drive schedule".into()))?;
    let f = first.drive.f();
    if segments.iter().any(|s| s.drive.f() != f) {
        return Err(Error::InvalidParams(
            "all drive segments must share one frequency".into(),
        ));
    }
    if dt > 1.0 / (200.0 * f) {
        return Err(Error::InvalidParams(format!(
            "dt = {dt} exceeds the resolution floor 1/(200 f) = {}",
            1.0 / (200.0 * f)
        )));
    }
    if t_end < 20.0 / f {
        return Err(Error::InvalidParams(format!(
            "t_end = {t_end} is shorter than 20 cycles = {}",
            20.0 / f
        )));
    }
    let det = params.l_t() * params.l_r() - params.m() * params.m();
    if det <= 0.0 {
        return Err(Error::DegenerateCoupling);
    }

    let u_of_t = |t: f64| {
        let seg = segments
            .iter()
            .rev()
            .find(|s| t >= s.t_from)
            .unwrap_or(first);
        drive_voltage(&seg.drive, t)
    };

    let steps = (t_end / dt).round() as usize;
    let mut y = [0.0f64; 4];
    let mut u_s = Vec::with_capacity(steps + 1);
    let mut i_t = Vec::with_capacity(steps + 1);
    let mut i_r = Vec::with_capacity(steps + 1);
    let mut i_c = Vec::with_capacity(steps + 1);
    let mut v_cr = Vec::with_capacity(steps + 1);

    let record = |t: f64, y: &[f64; 4], out: (&mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>)| {
        out.0.push(u_of_t(t));
        out.1.push(y[0]);
        out.2.push(y[2]);
        out.3.push(y[2] - y[3] / params.r_l());
        out.4.push(y[3]);
    };
    record(0.0, &y, (&mut u_s, &mut i_t, &mut i_r, &mut i_c, &mut v_cr));

    let mut rhs = |t: f64, y: &[f64; 4]| {
        let u = u_of_t(t);
        let e_t = u - params.r_t() * y[0] - y[1];
        let e_r = -params.r_r() * y[2] - y[3];
        [
            (params.l_r() * e_t - params.m() * e_r) / det,
            y[0] / params.c_t(),
            (params.l_t() * e_r - params.m() * e_t) / det,
            (y[2] - y[3] / params.r_l()) / params.c_r(),
        ]
    };

    for k in 0..steps {
        let t = k as f64 * dt;
        y = rk4_step(&y, t, dt, &mut rhs);
        if y.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { t: t + dt });
        }
        record(t + dt, &y, (&mut u_s, &mut i_t, &mut i_r, &mut i_c, &mut v_cr));
    }

    let rate = 1.0 / dt;
    Ok(SimOutput {
        u_s: SampledTrace::new(u_s, rate, 0.0)?,
        i_t: SampledTrace::new(i_t, rate, 0.0)?,
        i_r: SampledTrace::new(i_r, rate, 0.0)?,
        i_c: SampledTrace::new(i_c, rate, 0.0)?,
        v_cr: SampledTrace::new(v_cr, rate, 0.0)?,
    })
}

/// Fit a cos/sin pair at frequency `f` over the final `n_cycles` of the trace
/// and return (amplitude, phase) in the i(t) = I cos(w t - phi) convention.
pub fn extract_steady_state(trace: &SampledTrace, f: f64, n_cycles: usize) -> Result<(f64, f64)> {
    if n_cycles < 5 {
        return Err(Error::InsufficientSamples(format!(
            "need at least 5 fit cycles, got {n_cycles}"
        )));
    }
    let samples = (n_cycles as f64 * trace.sample_rate / f).round() as usize;
    if samples < 8 || samples > trace.len() {
        return Err(Error::InsufficientSamples(format!(
            "need {samples} samples for {n_cycles} cycles, have {}",
            trace.len()
        )));
    }
    let start = trace.len() - samples;
    let omega = 2.0 * PI * f;
    let (mut scc, mut scs, mut sss, mut scy, mut ssy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in start..trace.len() {
        let t = trace.time(k);
        let (s, c) = (omega * t).sin_cos();
        let y = trace.values[k];
        scc += c * c;
        scs += c * s;
        sss += s * s;
        scy += c * y;
        ssy += s * y;
    }
    let det = scc * sss - scs * scs;
    if det.abs() < 1e-12 * (scc * sss).abs().max(1.0) {
        return Err(Error::InsufficientSamples("degenerate fit basis".into()));
    }
    let a = (sss * scy - scs * ssy) / det;
    let b = (scc * ssy - scs * scy) / det;
    let amp = a.hypot(b);
    let phase = if amp == 0.0 { 0.0 } else { b.atan2(a) };
    Ok((amp, phase))
}

/// Per-cycle peak of |v| with quadratic refinement; returns (t_peak, peak).
pub fn cycle_peaks(trace: &SampledTrace, f: f64) -> Vec<(f64, f64)> {
    let period_samples = trace.sample_rate / f;
    let n_cycles = (trace.len() as f64 / period_samples).floor() as usize;
    let mut peaks = Vec::with_capacity(n_cycles);
    for c in 0..n_cycles {
        let lo = (c as f64 * period_samples).round() as usize;
        let hi = (((c + 1) as f64 * period_samples).round() as usize).min(trace.len());
        if hi <= lo + 2 {
            continue;
        }
        let (mut best, mut best_val) = (lo, trace.values[lo].abs());
        for k in lo..hi {
            let v = trace.values[k].abs();
            if v > best_val {
                best = k;
                best_val = v;
            }
        }
        if best == 0 || best + 1 >= trace.len() {
            peaks.push((trace.time(best), best_val));
            continue;
        }
        let ym = trace.values[best - 1].abs();
        let y0 = trace.values[best].abs();
        let yp = trace.values[best + 1].abs();
        let denom = ym - 2.0 * y0 + yp;
        if denom.abs() < 1e-300 {
            peaks.push((trace.time(best), y0));
            continue;
        }
        let delta = 0.5 * (ym - yp) / denom;
        let refined = y0 - 0.25 * (ym - yp) * delta;
        peaks.push((trace.time(best) + delta / trace.sample_rate, refined));
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::OperatingPoint;
    use crate::phasor::solve_steady_state;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn table_i(m: f64) -> SystemParams {
        SystemParams::new(140.90e-6, 16.45e-9, 0.200, 55.20e-6, 41.47e-9, 0.084, 100.0, m)
            .unwrap()
    }

    fn sine_drive(u_dc: f64, f: f64) -> DriveSpec {
        DriveSpec::new(u_dc, 0.0, f, Waveform::SinusoidalFundamental).unwrap()
    }

    #[test]
    fn sinusoidal_drive_starts_at_peak() {
        let d = sine_drive(20.0, 105e3);
        assert_relative_eq!(drive_voltage(&d, 0.0), d.fundamental_voltage(), max_relative = 1e-12);
    }

    #[test]
    fn square_wave_sigma_zero_is_full_square() {
        let d = DriveSpec::new(20.0, 0.0, 105e3, Waveform::PhaseShiftSquareWave).unwrap();
        // positive where the fundamental cosine is positive
        let period = 1.0 / 105e3;
        assert_eq!(drive_voltage(&d, 0.1 * period), 20.0);
        assert_eq!(drive_voltage(&d, 0.4 * period), -20.0);
        assert_eq!(drive_voltage(&d, 0.6 * period), -20.0);
        assert_eq!(drive_voltage(&d, 0.9 * period), 20.0);
    }

    #[test]
    fn square_wave_fundamental_matches_formula() {
        // midpoint-sampled Fourier coefficient over one period
        for sigma in [0.0, PI / 2.0, 2.0] {
            let d = DriveSpec::new(20.0, sigma, 105e3, Waveform::PhaseShiftSquareWave).unwrap();
            let period = 1.0 / d.f();
            let n = 16384;
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..n {
                let t = (k as f64 + 0.5) / n as f64 * period;
                let u = drive_voltage(&d, t);
                a += u * (d.omega() * t).cos();
                b += u * (d.omega() * t).sin();
            }
            a *= 2.0 / n as f64;
            b *= 2.0 / n as f64;
            assert_relative_eq!(
                a.hypot(b),
                d.fundamental_voltage(),
                max_relative = 1e-3
            );
            // zero-phase cosine: sine component vanishes
            assert!(b.abs() < 1e-3 * d.fundamental_voltage());
        }
    }

    #[test]
    fn zero_everything_is_equilibrium() {
        let p = table_i(9e-6);
        let d = derivatives(&CircuitState::zero(), &p, 0.0).unwrap();
        assert_eq!(d, CircuitState::zero());
    }

    #[test]
    fn zero_coupling_decouples_transmitter_derivative() {
        let p = table_i(0.0);
        let s = CircuitState {
            i_t: 1.0,
            v_ct: 2.0,
            i_r: -3.0,
            v_cr: 4.0,
        };
        let d = derivatives(&s, &p, 10.0).unwrap();
        let expected = (10.0 - p.r_t() * s.i_t - s.v_ct) / p.l_t();
        assert_relative_eq!(d.i_t, expected, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_coupling_rejected() {
        let p = table_i((140.90e-6f64 * 55.20e-6).sqrt());
        assert!(matches!(
            derivatives(&CircuitState::zero(), &p, 1.0),
            Err(Error::DegenerateCoupling)
        ));
    }

    #[test]
    fn zero_drive_simulation_stays_zero() {
        let p = table_i(9e-6);
        let d = sine_drive(0.0, 105e3);
        let out = simulate(&p, &d, 25.0 / 105e3, 1.0 / (1000.0 * 105e3)).unwrap();
        assert!(out.i_t.values.iter().all(|&v| v == 0.0));
        assert!(out.i_r.values.iter().all(|&v| v == 0.0));
        assert!(out.i_c.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn steady_state_matches_phasor_solution() {
        let p = table_i(15e-6);
        let f = 105e3;
        let d = sine_drive(20.0, f);
        let out = simulate(&p, &d, 200.0 / f, 1.0 / (1000.0 * f)).unwrap();
        let op = OperatingPoint {
            omega: d.omega(),
            u_s: d.fundamental_voltage(),
        };
        let ph = solve_steady_state(&p, &op).unwrap();
        let (amp_t, phi_t) = extract_steady_state(&out.i_t, f, 10).unwrap();
        let (amp_r, phi_r) = extract_steady_state(&out.i_r, f, 10).unwrap();
        let (amp_c, phi_c) = extract_steady_state(&out.i_c, f, 10).unwrap();
        assert_relative_eq!(amp_t, ph.i_t_amp, max_relative = 5e-3);
        assert_relative_eq!(amp_r, ph.i_r_amp, max_relative = 5e-3);
        assert_relative_eq!(amp_c, ph.i_c_amp, max_relative = 5e-3);
        assert!((phi_t - ph.phi_t).abs() < 5e-3);
        assert!((phi_r - ph.phi_r).abs() < 5e-3);
        assert!((phi_c - ph.phi_c).abs() < 5e-3);
    }

    #[test]
    fn extract_fits_pure_cosine_exactly() {
        let f = 105e3;
        let fs = 24.0 * f;
        let n = 24 * 40;
        let values: Vec<f64> = (0..n)
            .map(|k| 3.0 * (2.0 * PI * f * k as f64 / fs - 0.5).cos())
            .collect();
        let trace = SampledTrace::new(values, fs, 0.0).unwrap();
        let (amp, phi) = extract_steady_state(&trace, f, 10).unwrap();
        assert_relative_eq!(amp, 3.0, max_relative = 1e-9);
        assert_relative_eq!(phi, 0.5, max_relative = 1e-9);
    }

    #[test]
    fn extract_tolerates_additive_noise() {
        let f = 105e3;
        let fs = 24.0 * f;
        let n = 24 * 50;
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 / fs;
                    let noise: f64 = rng.sample(rand_distr::StandardNormal);
                    (2.0 * PI * f * t - 0.3).cos() + 0.01 * noise
                })
                .collect();
            let trace = SampledTrace::new(values, fs, 0.0).unwrap();
            let (amp, _) = extract_steady_state(&trace, f, 20).unwrap();
            worst = worst.max((amp - 1.0).abs());
        }
        assert!(worst < 5e-3, "worst amplitude error {worst}");
    }

    #[test]
    fn extract_requires_enough_cycles() {
        let trace = SampledTrace::new(vec![0.0; 48], 24.0 * 105e3, 0.0).unwrap();
        assert!(extract_steady_state(&trace, 105e3, 4).is_err());
        assert!(extract_steady_state(&trace, 105e3, 5).is_err());
    }

    #[test]
    fn cycle_peaks_of_pure_cosine() {
        let f = 1e3;
        let fs = 1000.0 * f;
        let n = 5000;
        let values: Vec<f64> = (0..n)
            .map(|k| 2.5 * (2.0 * PI * f * k as f64 / fs).cos())
            .collect();
        let trace = SampledTrace::new(values, fs, 0.0).unwrap();
        let peaks = cycle_peaks(&trace, f);
        assert_eq!(peaks.len(), 5);
        for (_, v) in peaks {
            assert_relative_eq!(v, 2.5, max_relative = 1e-6);
        }
    }
}

//! Sampled-signal chain turning a measured alpha-axis current into dq
//! components: quadrature construction by quarter-period delay, then the
//! rotation [i_d; i_q] = [sin th, -cos th; cos th, sin th] [i_alpha; i_beta].
//!
//! With the rotation as written, th = w t + pi/2 places the in-phase
//! component of a zero-phase cosine drive on the d axis (see
//! [`crate::params::drive_aligned_theta0`]).

use crate::error::{Error, Result};
use crate::trace::SampledTrace;

/// dq component streams produced after the quadrature delay line is full.
#[derive(Debug, Clone)]
pub struct DqSampleStream {
    pub i_d: Vec<f64>,
    pub i_q: Vec<f64>,
    pub sample_rate: f64,
    /// Fundamental frequency the rotation is locked to.
    pub f: f64,
    /// Time of the first output sample.
    pub t0: f64,
    /// Rotation angle at the first output sample.
    pub theta0: f64,
}

impl DqSampleStream {
    pub fn len(&self) -> usize {
        self.i_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_d.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }
}

/// Quarter-period delay line: beta[k] = alpha[k - samples_per_cycle/4].
///
/// The returned trace starts one quarter cycle later than the input; the
/// first quarter cycle has no valid quadrature partner and is dropped.
pub fn quadrature_delay(alpha: &SampledTrace, samples_per_cycle: usize) -> Result<SampledTrace> {
    if samples_per_cycle == 0 || samples_per_cycle % 4 != 0 {
        return Err(Error::InvalidParams(format!(
            "samples_per_cycle must be a positive multiple of 4, got {samples_per_cycle}"
        )));
    }
    let delay = samples_per_cycle / 4;
    if alpha.len() <= delay {
        return Err(Error::InsufficientSamples(format!(
            "trace of {} samples cannot fill a {delay}-sample delay line",
            alpha.len()
        )));
    }
    SampledTrace::new(
        alpha.values[..alpha.len() - delay].to_vec(),
        alpha.sample_rate,
        alpha.t0 + delay as f64 / alpha.sample_rate,
    )
}

/// Single-sample rotation into the dq frame.
pub fn alphabeta_to_dq(i_alpha: f64, i_beta: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (s * i_alpha - c * i_beta, c * i_alpha + s * i_beta)
}

/// Apply the quadrature delay and the per-sample rotation to a sampled
/// alpha-axis trace.
///
/// `theta0` is the rotation angle at the first *input* sample; subsequent
/// samples advance it by 2 pi f / sample_rate. The sample rate must be an
/// integer multiple of `f` divisible by 4 (24 samples per cycle in the
/// reference sensor setup).
pub fn stream_to_dq(alpha: &SampledTrace, f: f64, theta0: f64) -> Result<DqSampleStream> {
    let n = alpha
        .samples_per_cycle(f)
        .filter(|n| n % 4 == 0)
        .ok_or(Error::RateMismatch {
            sample_rate: alpha.sample_rate,
            f,
        })?;
    let delay = n / 4;
    if alpha.len() <= delay {
        return Err(Error::InsufficientSamples(format!(
            "trace of {} samples cannot fill a {delay}-sample delay line",
            alpha.len()
        )));
    }
    let dtheta = 2.0 * std::f64::consts::PI * f / alpha.sample_rate;
    let count = alpha.len() - delay;
    let mut i_d = Vec::with_capacity(count);
    let mut i_q = Vec::with_capacity(count);
    for k in delay..alpha.len() {
        let theta = theta0 + dtheta * k as f64;
        let (d, q) = alphabeta_to_dq(alpha.values[k], alpha.values[k - delay], theta);
        i_d.push(d);
        i_q.push(q);
    }
    Ok(DqSampleStream {
        i_d,
        i_q,
        sample_rate: alpha.sample_rate,
        f,
        t0: alpha.time(delay),
        theta0: theta0 + dtheta * delay as f64,
    })
}

/// Causal moving average over `window` samples applied to both components.
///
/// A one-cycle window nulls every harmonic of the fundamental, which removes
/// the ripple that square-wave drive harmonics alias into the dq components.
pub fn moving_average(stream: &DqSampleStream, window: usize) -> Result<DqSampleStream> {
    if window == 0 {
        return Err(Error::InvalidParams("window must be > 0".into()));
    }
    if stream.len() < window {
        return Err(Error::InsufficientSamples(format!(
            "stream of {} samples is shorter than window {window}",
            stream.len()
        )));
    }
    let avg = |v: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(v.len() - window + 1);
        let mut acc: f64 = v[..window].iter().sum();
        out.push(acc / window as f64);
        for k in window..v.len() {
            acc += v[k] - v[k - window];
            out.push(acc / window as f64);
        }
        out
    };
    let shift = window - 1;
    let dtheta = 2.0 * std::f64::consts::PI * stream.f / stream.sample_rate;
    Ok(DqSampleStream {
        i_d: avg(&stream.i_d),
        i_q: avg(&stream.i_q),
        sample_rate: stream.sample_rate,
        f: stream.f,
        t0: stream.time(shift),
        theta0: stream.theta0 + dtheta * shift as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dq::{vector_magnitude, vector_phase};
    use crate::params::drive_aligned_theta0;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cosine_trace(amp: f64, f: f64, phi: f64, n_per_cycle: usize, cycles: usize) -> SampledTrace {
        let fs = n_per_cycle as f64 * f;
        let values = (0..n_per_cycle * cycles)
            .map(|k| amp * (2.0 * PI * f * k as f64 / fs - phi).cos())
            .collect();
        SampledTrace::new(values, fs, 0.0).unwrap()
    }

    #[test]
    fn delay_turns_cos_into_sin() {
        let f = 105e3;
        let alpha = cosine_trace(1.0, f, 0.0, 24, 4);
        let beta = quadrature_delay(&alpha, 24).unwrap();
        // beta(t) = cos(w t - pi/2) = sin(w t)
        for k in 0..beta.len() {
            let t = beta.time(k);
            assert_relative_eq!(beta.values[k], (2.0 * PI * f * t).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn delay_of_zero_is_zero() {
        let alpha = SampledTrace::new(vec![0.0; 48], 24.0 * 105e3, 0.0).unwrap();
        let beta = quadrature_delay(&alpha, 24).unwrap();
        assert!(beta.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delay_rejects_bad_inputs() {
        let alpha = SampledTrace::new(vec![0.0; 5], 24.0 * 105e3, 0.0).unwrap();
        assert!(quadrature_delay(&alpha, 22).is_err());
        assert!(quadrature_delay(&alpha, 24).is_err()); // too short
    }

    #[test]
    fn rotation_special_angles() {
        // theta = pi/2 -> identity
        let (d, q) = alphabeta_to_dq(0.3, -0.7, FRAC_PI_2);
        assert_relative_eq!(d, 0.3, epsilon = 1e-15);
        assert_relative_eq!(q, -0.7, epsilon = 1e-15);
        // theta = 0 -> (-beta, alpha)
        let (d, q) = alphabeta_to_dq(0.3, -0.7, 0.0);
        assert_relative_eq!(d, 0.7, epsilon = 1e-15);
        assert_relative_eq!(q, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn drive_aligned_rotation_recovers_phase() {
        // ideal quadrature pair rotated with the drive-aligned angle gives
        // constant components carrying the amplitude and initial phase
        for phi in [-2.5, -0.7, 0.0, 0.3, 1.9] {
            for amp in [0.5, 2.0] {
                let omega = 1.0;
                for step in 0..50 {
                    let t = step as f64 * 0.13;
                    let i_alpha = amp * (omega * t - phi).cos();
                    let i_beta = amp * (omega * t - phi - FRAC_PI_2).cos();
                    let theta = drive_aligned_theta0(omega, 0.0) + omega * t;
                    let (d, q) = alphabeta_to_dq(i_alpha, i_beta, theta);
                    assert_relative_eq!(vector_magnitude(d, q), amp, max_relative = 1e-12);
                    let rec = vector_phase(d, q).unwrap();
                    let diff = (rec - phi + PI).rem_euclid(2.0 * PI) - PI;
                    assert!(diff.abs() < 1e-10, "phi {phi}, recovered {rec}");
                }
            }
        }
    }

    #[test]
    fn stream_of_pure_cosine_is_constant() {
        let f = 105e3;
        let amp = 2.0;
        let alpha = cosine_trace(amp, f, 0.4, 24, 20);
        let omega = 2.0 * PI * f;
        let stream = stream_to_dq(&alpha, f, drive_aligned_theta0(omega, alpha.t0)).unwrap();
        for k in 0..stream.len() {
            assert_relative_eq!(
                vector_magnitude(stream.i_d[k], stream.i_q[k]),
                amp,
                max_relative = 1e-9
            );
            let phi = vector_phase(stream.i_d[k], stream.i_q[k]).unwrap();
            assert_relative_eq!(phi, 0.4, max_relative = 1e-6);
        }
    }

    #[test]
    fn stream_rejects_rate_mismatch() {
        let f = 105e3;
        let alpha = SampledTrace::new(vec![0.0; 100], 22.0 * f, 0.0).unwrap();
        assert!(matches!(
            stream_to_dq(&alpha, f, 0.0),
            Err(Error::RateMismatch { .. })
        ));
        let alpha = SampledTrace::new(vec![0.0; 100], 24.5 * f, 0.0).unwrap();
        assert!(stream_to_dq(&alpha, f, 0.0).is_err());
    }

    #[test]
    fn frequency_mismatch_rotates_at_beat_frequency() {
        let f_design = 105e3;
        let df = 0.01 * f_design;
        let fs = 24.0 * f_design;
        let cycles = 200;
        let values: Vec<f64> = (0..24 * cycles)
            .map(|k| (2.0 * PI * (f_design + df) * k as f64 / fs).cos())
            .collect();
        let alpha = SampledTrace::new(values, fs, 0.0).unwrap();
        let omega = 2.0 * PI * f_design;
        let stream = stream_to_dq(&alpha, f_design, drive_aligned_theta0(omega, 0.0)).unwrap();
        // phase drifts at 2 pi * df; measure slope between two windows
        let phase_at = |k: usize| vector_phase(stream.i_d[k], stream.i_q[k]).unwrap();
        let k1 = 24 * 10;
        let k2 = 24 * 12;
        let dt = (k2 - k1) as f64 / fs;
        let mut dphi = phase_at(k2) - phase_at(k1);
        dphi = (dphi + PI).rem_euclid(2.0 * PI) - PI;
        // phi = -(w_in - w_design) t in the I cos(w t - phi) convention
        let rate = dphi / dt;
        assert_relative_eq!(rate, -2.0 * PI * df, max_relative = 0.15);
    }

    #[test]
    fn moving_average_flattens_ripple() {
        let f = 105e3;
        let fs = 24.0 * f;
        // constant plus a 2f ripple component
        let values: Vec<f64> = (0..24 * 30)
            .map(|k| (2.0 * PI * f * k as f64 / fs).cos() * (1.0 + 0.05 * (2.0 * 2.0 * PI * f * k as f64 / fs).cos()))
            .collect();
        let alpha = SampledTrace::new(values, fs, 0.0).unwrap();
        let omega = 2.0 * PI * f;
        let stream = stream_to_dq(&alpha, f, drive_aligned_theta0(omega, 0.0)).unwrap();
        let smooth = moving_average(&stream, 24).unwrap();
        let mags: Vec<f64> = (0..smooth.len())
            .map(|k| vector_magnitude(smooth.i_d[k], smooth.i_q[k]))
            .collect();
        let mean = mags.iter().sum::<f64>() / mags.len() as f64;
        let ripple = mags
            .iter()
            .map(|m| (m - mean).abs())
            .fold(0.0f64, f64::max);
        assert!(ripple / mean < 2e-3, "residual ripple {}", ripple / mean);
    }

    proptest! {
        #[test]
        fn rotation_is_orthonormal(
            i_alpha in -10.0f64..10.0,
            i_beta in -10.0f64..10.0,
            theta in -10.0f64..10.0,
        ) {
            let (d, q) = alphabeta_to_dq(i_alpha, i_beta, theta);
            let before = i_alpha * i_alpha + i_beta * i_beta;
            let after = d * d + q * q;
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
        }
    }
}

//! Transmitter-side mutual-inductance identification.
//!
//! From the sampled transmitter current and the known drive, the real and
//! imaginary parts of the transmitter dq equation yield the reflected EMF
//! components -wM I_qr and wM I_dr; their magnitude wM I_r combined with the
//! lumped receiver impedance |Z_r| closes the loop:
//!
//! ```text
//! M = sqrt(|Z_r| * wM I_r / (w^2 * I_t))
//! ```

use num_complex::Complex64;

use crate::dq::vector_magnitude;
use crate::error::{Error, Result};
use crate::params::{drive_aligned_theta0, DriveSpec, SystemParams};
use crate::phasor::receiver_branch_impedance_parts;
use crate::trace::SampledTrace;
use crate::transforms::{moving_average, stream_to_dq, DqSampleStream};

/// Per-sample estimates below this combined current are dropped from the
/// averaging window.
const CURRENT_FLOOR: f64 = 1e-6;

/// Averaging window for the per-sample EMF estimates, in cycles.
pub const AVERAGING_CYCLES: usize = 10;

/// Parameters assumed known on the transmitter side; excludes M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownParams {
    pub l_t: f64,
    pub c_t: f64,
    pub r_t: f64,
    pub l_r: f64,
    pub c_r: f64,
    pub r_r: f64,
    pub r_l: f64,
}

impl KnownParams {
    pub fn receiver_branch_impedance(&self, omega: f64) -> Complex64 {
        receiver_branch_impedance_parts(self.r_r, self.l_r, self.c_r, self.r_l, omega)
    }
}

impl From<&SystemParams> for KnownParams {
    fn from(p: &SystemParams) -> Self {
        Self {
            l_t: p.l_t(),
            c_t: p.c_t(),
            r_t: p.r_t(),
            l_r: p.l_r(),
            c_r: p.c_r(),
            r_r: p.r_r(),
            r_l: p.r_l(),
        }
    }
}

/// Intermediate quantities of the identification arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intermediates {
    pub minus_wm_iqr: f64,
    pub wm_idr: f64,
    pub wm_ir: f64,
    pub i_t_amp: f64,
    pub z_r_mag: f64,
}

/// Outcome of one identification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationResult {
    pub m_hat: f64,
    pub k_hat: f64,
    pub relative_error: Option<f64>,
    pub intermediates: Intermediates,
}

impl IdentificationResult {
    /// Attach the relative error against a known true mutual inductance.
    pub fn with_true_m(mut self, m_true: f64) -> Self {
        self.relative_error = Some(relative_error(self.m_hat, m_true));
        self
    }
}

/// Reflected-EMF components from the real and imaginary parts of the
/// transmitter dq equation, with the derivative realized as a backward
/// difference over one sensor sample.
///
/// Returns (-wM I_qr, wM I_dr), each averaged over the trailing
/// [`AVERAGING_CYCLES`] cycles of the stream.
pub fn transmitter_back_emf_terms(
    dq: &DqSampleStream,
    known: &KnownParams,
    omega: f64,
    u_s: f64,
) -> Result<(f64, f64)> {
    if dq.len() < 2 {
        return Err(Error::InsufficientSamples(
            "need at least 2 dq samples for the difference form".into(),
        ));
    }
    let dt = 1.0 / dq.sample_rate;
    let l_eff = known.l_t + 1.0 / (omega * omega * known.c_t);
    let x_t = omega * known.l_t - 1.0 / (omega * known.c_t);

    let per_cycle = (dq.sample_rate / dq.f).round() as usize;
    let window = (AVERAGING_CYCLES * per_cycle).min(dq.len() - 1);
    let start = dq.len() - window;

    let mut sum18 = 0.0;
    let mut sum19 = 0.0;
    let mut count = 0usize;
    for k in start..dq.len() {
        let i_d = dq.i_d[k];
        let i_q = dq.i_q[k];
        if i_d.abs() + i_q.abs() < CURRENT_FLOOR {
            continue;
        }
        let d_id = (i_d - dq.i_d[k - 1]) / dt;
        let d_iq = (i_q - dq.i_q[k - 1]) / dt;
        sum18 += u_s - known.r_t * i_d - l_eff * d_id + x_t * i_q;
        sum19 += -known.r_t * i_q - l_eff * d_iq - x_t * i_d;
        count += 1;
    }
    if count == 0 {
        // all samples below the current floor: no reflected EMF observable
        return Ok((0.0, 0.0));
    }
    Ok((sum18 / count as f64, sum19 / count as f64))
}

/// Magnitude of the reflected EMF: wM I_r = sqrt((-wM I_qr)^2 + (wM I_dr)^2).
pub fn receiver_emf_magnitude(minus_wm_iqr: f64, wm_idr: f64) -> f64 {
    minus_wm_iqr.hypot(wm_idr)
}

/// |M_hat - M_true| / M_true.
pub fn relative_error(m_hat: f64, m_true: f64) -> f64 {
    (m_hat - m_true).abs() / m_true
}

/// Mean transmitter-current amplitude over the trailing window of a stream.
fn mean_amplitude(dq: &DqSampleStream, window: usize) -> f64 {
    let start = dq.len().saturating_sub(window);
    let n = dq.len() - start;
    (start..dq.len())
        .map(|k| vector_magnitude(dq.i_d[k], dq.i_q[k]))
        .sum::<f64>()
        / n as f64
}

/// Full identification pipeline on a steady-state transmitter current trace.
///
/// The trace must be sampled at an integer multiple of the drive frequency
/// divisible by 4 (24 per cycle in the reference setup) and start after the
/// transient has decayed; its `t0` anchors the rotation angle to the drive
/// phase.
pub fn identify_m(
    i_t_trace: &SampledTrace,
    known: &KnownParams,
    drive: &DriveSpec,
) -> Result<IdentificationResult> {
    let op = drive.operating_point();
    let omega = op.omega;
    let theta0 = drive_aligned_theta0(omega, i_t_trace.t0);

    let stream = stream_to_dq(i_t_trace, drive.f(), theta0)?;
    let per_cycle = (stream.sample_rate / drive.f()).round() as usize;
    let smooth = moving_average(&stream, per_cycle)?;

    let (minus_wm_iqr, wm_idr) = transmitter_back_emf_terms(&smooth, known, omega, op.u_s)?;
    let wm_ir = receiver_emf_magnitude(minus_wm_iqr, wm_idr);
    let i_t_amp = mean_amplitude(&smooth, AVERAGING_CYCLES * per_cycle);
    if i_t_amp < CURRENT_FLOOR {
        return Err(Error::InsufficientSamples(
            "transmitter current amplitude below the measurable floor".into(),
        ));
    }
    let z_r_mag = known.receiver_branch_impedance(omega).norm();
    let radicand = z_r_mag * wm_ir / (omega * omega * i_t_amp);
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { radicand });
    }
    let m_hat = radicand.sqrt();
    Ok(IdentificationResult {
        m_hat,
        k_hat: m_hat / (known.l_t * known.l_r).sqrt(),
        relative_error: None,
        intermediates: Intermediates {
            minus_wm_iqr,
            wm_idr,
            wm_ir,
            i_t_amp,
            z_r_mag,
        },
    })
}

/// Identification on exact steady-state dq values, bypassing sampling.
///
/// Quantifies the intrinsic bias of ignoring the receiver-side derivatives,
/// separate from sensor-rate effects.
pub fn identify_m_from_dq_steady_state(
    i_dqt: Complex64,
    known: &KnownParams,
    omega: f64,
    u_s: f64,
) -> Result<IdentificationResult> {
    // derivative terms are exactly zero at steady state
    let x_t = omega * known.l_t - 1.0 / (omega * known.c_t);
    let i_d = i_dqt.re;
    let i_q = i_dqt.im;
    let minus_wm_iqr = u_s - known.r_t * i_d + x_t * i_q;
    let wm_idr = -known.r_t * i_q - x_t * i_d;
    let wm_ir = receiver_emf_magnitude(minus_wm_iqr, wm_idr);
    let i_t_amp = i_dqt.norm();
    if i_t_amp == 0.0 {
        return Err(Error::InsufficientSamples("zero transmitter current".into()));
    }
    let z_r_mag = known.receiver_branch_impedance(omega).norm();
    let radicand = z_r_mag * wm_ir / (omega * omega * i_t_amp);
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { radicand });
    }
    let m_hat = radicand.sqrt();
    Ok(IdentificationResult {
        m_hat,
        k_hat: m_hat / (known.l_t * known.l_r).sqrt(),
        relative_error: None,
        intermediates: Intermediates {
            minus_wm_iqr,
            wm_idr,
            wm_ir,
            i_t_amp,
            z_r_mag,
        },
    })
}

//! Electrical parameters of the SP-compensated link, inverter drive
//! description, and the derived operating point shared by every model.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverter output waveform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    /// Pure cosine at the fundamental amplitude 4/pi * U_dc * cos(sigma/2).
    SinusoidalFundamental,
    /// Full-bridge phase-shift square wave with freewheeling notches of
    /// width sigma, positioned so its fundamental is a zero-phase cosine.
    PhaseShiftSquareWave,
}

impl Waveform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Waveform::SinusoidalFundamental => "sinusoidal_fundamental",
            Waveform::PhaseShiftSquareWave => "phase_shift_square_wave",
        }
    }
}

/// Full electrical parameter set of the SP circuit.
///
/// Immutable and validated at construction: every element value is strictly
/// positive (mutual inductance may be zero) and the coupling coefficient
/// cannot exceed unity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    l_t: f64,
    c_t: f64,
    r_t: f64,
    l_r: f64,
    c_r: f64,
    r_r: f64,
    r_l: f64,
    m: f64,
}

impl SystemParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l_t: f64,
        c_t: f64,
        r_t: f64,
        l_r: f64,
        c_r: f64,
        r_r: f64,
        r_l: f64,
        m: f64,
    ) -> Result<Self> {
        let positive = [
            ("l_t", l_t),
            ("c_t", c_t),
            ("r_t", r_t),
            ("l_r", l_r),
            ("c_r", c_r),
            ("r_r", r_r),
            ("r_l", r_l),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "m must be finite and >= 0, got {m}"
            )));
        }
        if m > (l_t * l_r).sqrt() {
            return Err(Error::InvalidParams(format!(
                "m = {m} exceeds sqrt(l_t * l_r) = {}",
                (l_t * l_r).sqrt()
            )));
        }
        Ok(Self {
            l_t,
            c_t,
            r_t,
            l_r,
            c_r,
            r_r,
            r_l,
            m,
        })
    }

    pub fn l_t(&self) -> f64 {
        self.l_t
    }
    pub fn c_t(&self) -> f64 {
        self.c_t
    }
    pub fn r_t(&self) -> f64 {
        self.r_t
    }
    pub fn l_r(&self) -> f64 {
        self.l_r
    }
    pub fn c_r(&self) -> f64 {
        self.c_r
    }
    pub fn r_r(&self) -> f64 {
        self.r_r
    }
    pub fn r_l(&self) -> f64 {
        self.r_l
    }
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Same parameter set with a different mutual inductance.
    pub fn with_m(&self, m: f64) -> Result<Self> {
        Self::new(
            self.l_t, self.c_t, self.r_t, self.l_r, self.c_r, self.r_r, self.r_l, m,
        )
    }

    /// Same parameter set with a different load resistance.
    pub fn with_r_l(&self, r_l: f64) -> Result<Self> {
        Self::new(
            self.l_t, self.c_t, self.r_t, self.l_r, self.c_r, self.r_r, r_l, self.m,
        )
    }

    /// Same parameter set with M chosen for a target coupling coefficient.
    pub fn with_coupling(&self, k: f64) -> Result<Self> {
        self.with_m(k * (self.l_t * self.l_r).sqrt())
    }

    /// Coupling coefficient k = M / sqrt(L_t * L_r).
    pub fn coupling_coefficient(&self) -> f64 {
        self.m / (self.l_t * self.l_r).sqrt()
    }
}

/// Full-bridge inverter drive description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    u_dc: f64,
    sigma: f64,
    f: f64,
    waveform: Waveform,
}

impl DriveSpec {
    /// `sigma` is the phase-shift angle in radians, in [0, pi].
    pub fn new(u_dc: f64, sigma: f64, f: f64, waveform: Waveform) -> Result<Self> {
        if !(u_dc.is_finite() && u_dc >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "u_dc must be finite and >= 0, got {u_dc}"
            )));
        }
        if !(sigma.is_finite() && (0.0..=PI).contains(&sigma)) {
            return Err(Error::InvalidParams(format!(
                "sigma must lie in [0, pi], got {sigma}"
            )));
        }
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::InvalidParams(format!(
                "f must be finite and > 0, got {f}"
            )));
        }
        Ok(Self {
            u_dc,
            sigma,
            f,
            waveform,
        })
    }

    pub fn u_dc(&self) -> f64 {
        self.u_dc
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn f(&self) -> f64 {
        self.f
    }
    pub fn waveform(&self) -> Waveform {
        self.waveform
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.f
    }

    /// Fundamental amplitude of the phase-shifted bridge output:
    /// U_s = 4/pi * U_dc * cos(sigma / 2).
    pub fn fundamental_voltage(&self) -> f64 {
        4.0 / PI * self.u_dc * (self.sigma / 2.0).cos()
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            omega: self.omega(),
            u_s: self.fundamental_voltage(),
        }
    }

    /// Same drive with a different dc-link voltage (for step scenarios).
    pub fn with_u_dc(&self, u_dc: f64) -> Result<Self> {
        Self::new(u_dc, self.sigma, self.f, self.waveform)
    }
}

/// Angular frequency and fundamental voltage amplitude of a drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub omega: f64,
    pub u_s: f64,
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    p
}

/// Angle that maps a quadrature pair built from a zero-phase cosine into the
/// frame where the d axis carries the in-phase component.
///
/// With the rotation [sin th, -cos th; cos th, sin th], th = omega*t + pi/2
/// makes (i_d, i_q) = (I cos phi, -I sin phi) for i_alpha = I cos(omega*t - phi).
pub fn drive_aligned_theta0(omega: f64, t0: f64) -> f64 {
    FRAC_PI_2 + omega * t0
}

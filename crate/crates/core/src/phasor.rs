//! Closed-form sinusoidal steady-state solver for the SP circuit.
//!
//! The three mesh/node equations in complex phasor form are
//!
//! ```text
//! U_s = (R_t + j(wL_t - 1/(wC_t))) I_t + jwM I_r
//!   0 = jwM I_t + (R_r + jwL_r + R_L) I_r - R_L I_c
//!   0 = -R_L I_r + (R_L + 1/(jwC_r)) I_c
//! ```
//!
//! Currents follow the convention i(t) = I cos(w t - phi), so the reported
//! phase is phi = -arg(I_complex).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{wrap_phase, OperatingPoint, SystemParams};
use crate::solver::solve3;

/// Steady-state amplitude and initial phase of each of the three currents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorSolution {
    pub i_t_amp: f64,
    pub phi_t: f64,
    pub i_r_amp: f64,
    pub phi_r: f64,
    pub i_c_amp: f64,
    pub phi_c: f64,
}

impl PhasorSolution {
    /// Build from the complex solutions, using phi = -arg(I).
    pub fn from_complex(i_t: Complex64, i_r: Complex64, i_c: Complex64) -> Self {
        let polar = |z: Complex64| {
            let amp = z.norm();
            let phi = if amp == 0.0 { 0.0 } else { wrap_phase(-z.arg()) };
            (amp, phi)
        };
        let (i_t_amp, phi_t) = polar(i_t);
        let (i_r_amp, phi_r) = polar(i_r);
        let (i_c_amp, phi_c) = polar(i_c);
        Self {
            i_t_amp,
            phi_t,
            i_r_amp,
            phi_r,
            i_c_amp,
            phi_c,
        }
    }
}

/// Lumped receiver-side impedance Z_r = R_r + jwL_r + R_L / (1 + jwC_r R_L).
pub fn receiver_branch_impedance(params: &SystemParams, omega: f64) -> Complex64 {
    receiver_branch_impedance_parts(
        params.r_r(),
        params.l_r(),
        params.c_r(),
        params.r_l(),
        omega,
    )
}

pub(crate) fn receiver_branch_impedance_parts(
    r_r: f64,
    l_r: f64,
    c_r: f64,
    r_l: f64,
    omega: f64,
) -> Complex64 {
    let parallel = Complex64::new(r_l, 0.0) / Complex64::new(1.0, omega * c_r * r_l);
    Complex64::new(r_r, omega * l_r) + parallel
}

/// Coefficient matrix and right-hand side of the steady-state system.
///
/// Shared with the dq steady-state solver, which zeroes the same derivatives.
pub(crate) fn steady_state_system(
    params: &SystemParams,
    omega: f64,
    u: Complex64,
) -> ([[Complex64; 3]; 3], [Complex64; 3]) {
    let x_t = omega * params.l_t() - 1.0 / (omega * params.c_t());
    let zero = Complex64::new(0.0, 0.0);
    let jwm = Complex64::new(0.0, omega * params.m());
    let a = [
        [Complex64::new(params.r_t(), x_t), jwm, zero],
        [
            jwm,
            Complex64::new(params.r_r() + params.r_l(), omega * params.l_r()),
            Complex64::new(-params.r_l(), 0.0),
        ],
        [
            zero,
            Complex64::new(-params.r_l(), 0.0),
            Complex64::new(params.r_l(), -1.0 / (omega * params.c_r())),
        ],
    ];
    let b = [u, zero, zero];
    (a, b)
}

/// Complex steady-state currents (I_t, I_r, I_c).
pub fn solve_steady_state_complex(
    params: &SystemParams,
    op: &OperatingPoint,
) -> Result<[Complex64; 3]> {
    if !(op.omega.is_finite() && op.omega > 0.0) {
        return Err(Error::InvalidParams(format!(
            "omega must be > 0, got {}",
            op.omega
        )));
    }
    let (a, b) = steady_state_system(params, op.omega, Complex64::new(op.u_s, 0.0));
    solve3(&a, &b)
}

/// Amplitudes and initial phases of the steady-state currents.
pub fn solve_steady_state(params: &SystemParams, op: &OperatingPoint) -> Result<PhasorSolution> {
    let [i_t, i_r, i_c] = solve_steady_state_complex(params, op)?;
    Ok(PhasorSolution::from_complex(i_t, i_r, i_c))
}

/// Element-wise steady-state solve over a frequency list, order preserved.
pub fn frequency_sweep(
    params: &SystemParams,
    u_s: f64,
    f_list: &[f64],
) -> Result<Vec<(f64, PhasorSolution)>> {
    #[cfg(feature = "parallel")]
    {
        frequency_sweep_par(params, u_s, f_list)
    }
    #[cfg(not(feature = "parallel"))]
    {
        frequency_sweep_seq(params, u_s, f_list)
    }
}

/// Sequential sweep; always available for comparison.
pub fn frequency_sweep_seq(
    params: &SystemParams,
    u_s: f64,
    f_list: &[f64],
) -> Result<Vec<(f64, PhasorSolution)>> {
    f_list.iter().map(|&f| sweep_point(params, u_s, f)).collect()
}

/// Rayon-parallel sweep; output order matches the input list.
#[cfg(feature = "parallel")]
pub fn frequency_sweep_par(
    params: &SystemParams,
    u_s: f64,
    f_list: &[f64],
) -> Result<Vec<(f64, PhasorSolution)>> {
    use rayon::prelude::*;
    f_list
        .par_iter()
        .map(|&f| sweep_point(params, u_s, f))
        .collect()
}

fn sweep_point(params: &SystemParams, u_s: f64, f: f64) -> Result<(f64, PhasorSolution)> {
    let op = OperatingPoint {
        omega: 2.0 * std::f64::consts::PI * f,
        u_s,
    };
    match solve_steady_state(params, &op) {
        Ok(sol) => Ok((f, sol)),
        Err(Error::SingularSystem { .. }) => Err(Error::SingularSystem { f_hz: Some(f) }),
        Err(e) => Err(e),
    }
}

/// Evenly spaced frequency grid, endpoints included.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

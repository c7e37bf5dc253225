//! Small fixed-size numerical kernels shared by the integrators and the
//! steady-state solvers.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One classical 4th-order Runge-Kutta step.
pub(crate) fn rk4_step<const N: usize>(
    y: &[f64; N],
    t: f64,
    dt: f64,
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let k1 = f(t, y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * dt * k1[i];
    }
    let k2 = f(t + 0.5 * dt, &y2);
    let mut y3 = *y;
    for i in 0..N {
        y3[i] = y[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(t + 0.5 * dt, &y3);
    let mut y4 = *y;
    for i in 0..N {
        y4[i] = y[i] + dt * k3[i];
    }
    let k4 = f(t + dt, &y4);
    let mut out = *y;
    for i in 0..N {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Solve a 3x3 complex system by Gaussian elimination with partial pivoting.
///
/// Singularity threshold: 1e-12 times the largest row norm of the matrix.
pub(crate) fn solve3(a: &[[Complex64; 3]; 3], b: &[Complex64; 3]) -> Result<[Complex64; 3]> {
    let mut m = *a;
    let mut rhs = *b;
    let max_row_norm = m
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let threshold = 1e-12 * max_row_norm;

    for col in 0..3 {
        let pivot_row = (col..3)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        if m[pivot_row][col].norm() <= threshold {
            return Err(Error::SingularSystem { f_hz: None });
        }
        if pivot_row != col {
            m.swap(col, pivot_row);
            rhs.swap(col, pivot_row);
        }
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            for k in col..3 {
                let sub = factor * m[col][k];
                m[row][k] -= sub;
            }
            let sub = factor * rhs[col];
            rhs[row] -= sub;
        }
    }

    let mut x = [Complex64::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut acc = rhs[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

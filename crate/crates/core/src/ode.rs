//! Adaptive Dormand-Prince 5(4) integrator for small fixed-size systems.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            atol: T::lit(1e-12),
            max_steps: 1_000_000,
        }
    }
}

// Dormand-Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (`t_end >= t0`).
pub fn integrate<T, F, const N: usize>(
    f: F,
    t0: T,
    y0: [T; N],
    t_end: T,
    tol: Tolerances<T>,
) -> Result<[T; N], OdeError>
where
    T: Scalar,
    F: Fn(T, &[T; N]) -> [T; N],
{
    if t_end <= t0 {
        return Ok(y0);
    }
    let mut t = t0;
    let mut y = y0;
    let span = t_end - t0;
    let mut h = (span * T::lit(1e-3)).min(T::lit(1e-2));
    let min_h = span * T::epsilon() * T::lit(16.0);
    let safety = T::lit(0.9);

    for _ in 0..tol.max_steps {
        if t >= t_end {
            return Ok(y);
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[T::zero(); N]; 7];
        k[0] = f(t, &y);
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = T::lit(A[s][j]);
                if a != T::zero() {
                    for i in 0..N {
                        ys[i] = ys[i] + h * a * kj[i];
                    }
                }
            }
            k[s] = f(t + T::lit(C[s]) * h, &ys);
        }
        let mut y5 = y;
        let mut err = T::zero();
        for i in 0..N {
            let mut d5 = T::zero();
            let mut d4 = T::zero();
            for s in 0..7 {
                d5 = d5 + T::lit(B5[s]) * k[s][i];
                d4 = d4 + T::lit(B4[s]) * k[s][i];
            }
            y5[i] = y[i] + h * d5;
            let scale = tol.atol + tol.rtol * y[i].abs().max(y5[i].abs());
            let e = (h * (d5 - d4)) / scale;
            err = err + e * e;
        }
        err = (err / T::from_usize_lossy(N)).sqrt();
        if !err.is_finite() {
            return Err(OdeError::NonFinite {
                t: t.to_f64_lossy(),
            });
        }
        if err <= T::one() {
            t = t + h;
            y = y5;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite {
                    t: t.to_f64_lossy(),
                });
            }
        }
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (safety * err.powf(T::lit(-0.2)))
                .max(T::lit(0.2))
                .min(T::lit(5.0))
        };
        h = h * factor;
        if h < min_h && t < t_end {
            return Err(OdeError::StepUnderflow {
                t: t.to_f64_lossy(),
            });
        }
    }
    Err(OdeError::TooManySteps(tol.max_steps))
}

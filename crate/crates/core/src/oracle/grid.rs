use crate::scalar::Scalar;

use super::OracleError;

/// Periodic simulation grid `x_j = x_min + j dx`, `dx = x_span / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub n_points: usize,
    pub x_min: T,
    pub x_span: T,
    pub dt: T,
}

/// Largest real-time step accepted by the propagator.
pub const MAX_DT: f64 = 0.01;

impl<T: Scalar> GridSpec<T> {
    pub fn new(n_points: usize, x_min: T, x_span: T, dt: T) -> Result<Self, OracleError> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(OracleError::BadPointCount(n_points));
        }
        if !(x_span > T::zero()) || !x_span.is_finite() {
            return Err(OracleError::BadSpan(x_span.to_f64_lossy()));
        }
        check_dt(dt)?;
        Ok(Self {
            n_points,
            x_min,
            x_span,
            dt,
        })
    }

    /// Grid covering `[lo, hi]`.
    pub fn covering(n_points: usize, lo: T, hi: T, dt: T) -> Result<Self, OracleError> {
        Self::new(n_points, lo, hi - lo, dt)
    }

    pub fn with_dt(mut self, dt: T) -> Result<Self, OracleError> {
        check_dt(dt)?;
        self.dt = dt;
        Ok(self)
    }

    pub fn dx(&self) -> T {
        self.x_span / T::from_usize_lossy(self.n_points)
    }

    pub fn x_max(&self) -> T {
        self.x_min + self.x_span
    }

    pub fn positions(&self) -> Vec<T> {
        let dx = self.dx();
        (0..self.n_points)
            .map(|j| self.x_min + dx * T::from_usize_lossy(j))
            .collect()
    }

    /// FFT-ordered wavenumbers.
    pub fn wavenumbers(&self) -> Vec<T> {
        let n = self.n_points;
        let dk = T::TAU() / self.x_span;
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    dk * T::from_usize_lossy(j)
                } else {
                    -dk * T::from_usize_lossy(n - j)
                }
            })
            .collect()
    }

    /// Largest representable wavenumber `pi / dx`.
    pub fn k_max(&self) -> T {
        T::PI() / self.dx()
    }
}

pub(crate) fn check_dt<T: Scalar>(dt: T) -> Result<(), OracleError> {
    if !(dt > T::zero()) {
        return Err(OracleError::NonPositiveTimeStep(dt.to_f64_lossy()));
    }
    if dt > T::lit(MAX_DT) {
        return Err(OracleError::TimeStepTooLarge {
            dt: dt.to_f64_lossy(),
            limit: MAX_DT,
        });
    }
    Ok(())
}

/// External potential acting on the atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential<T> {
    Free,
    /// `omega^2 (x - center)^2 / 2`.
    Harmonic {
        omega: T,
        center: T,
    },
}

impl<T: Scalar> Potential<T> {
    pub fn harmonic(center: T) -> Self {
        Potential::Harmonic {
            omega: T::one(),
            center,
        }
    }

    pub fn value(&self, x: T) -> T {
        match *self {
            Potential::Free => T::zero(),
            Potential::Harmonic { omega, center } => {
                let u = x - center;
                omega * omega * u * u / T::lit(2.0)
            }
        }
    }

    pub fn is_confining(&self) -> bool {
        matches!(self, Potential::Harmonic { omega, .. } if *omega > T::zero())
    }
}

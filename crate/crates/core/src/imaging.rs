//! Finite imaging resolution: fringe contrast loss, normalized observed
//! densities and the resolution at which backflow stops being visible.

use thiserror::Error;

use crate::interference::{BraggConfig, FieldProfile};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImagingError {
    #[error("contrast factor zeta = {0} outside (0, 1]")]
    ZetaOutOfRange(f64),
    #[error("imaging resolution must be non-negative (got {0})")]
    NegativeResolution(f64),
    #[error("grid spacing {spacing} is not below sigma_r/4 = {limit}")]
    GridTooCoarse { spacing: f64, limit: f64 },
}

/// Fringe contrast after Gaussian imaging of width `sigma_r`:
/// `exp(-q^2 sigma_r^2 / 2)`.
pub fn zeta<T: Scalar>(q: T, sigma_r: T) -> T {
    (-(q * q * sigma_r * sigma_r) / T::lit(2.0)).exp()
}

fn check_zeta<T: Scalar>(zeta: T) -> Result<(), ImagingError> {
    if !(zeta > T::zero() && zeta <= T::one()) {
        return Err(ImagingError::ZetaOutOfRange(zeta.to_f64_lossy()));
    }
    Ok(())
}

/// Imaged fringe minimum over maximum near the packet centre,
/// `(A1^2 + A2^2 - 2 zeta A1 A2) / (A1^2 + A2^2 + 2 zeta A1 A2)`.
pub fn observed_min_norm<T: Scalar>(bragg: &BraggConfig<T>, zeta: T) -> Result<T, ImagingError> {
    observed_min_norm_with_envelope(bragg, zeta, T::one())
}

/// As [`observed_min_norm`], scaled by `|phi(x_min)|^2 / |phi_max|^2`.
pub fn observed_min_norm_with_envelope<T: Scalar>(
    bragg: &BraggConfig<T>,
    zeta: T,
    envelope_ratio: T,
) -> Result<T, ImagingError> {
    check_zeta(zeta)?;
    let s = bragg.a1() * bragg.a1() + bragg.a2() * bragg.a2();
    let cross = T::lit(2.0) * zeta * bragg.a1() * bragg.a2();
    Ok(envelope_ratio * (s - cross) / (s + cross))
}

/// Critical density over the fringe maximum near the centre, where
/// `grad_theta ~ k1`: `alpha/(alpha+2) (A1 - A2)/(A1 + A2)`.
pub fn critical_norm<T: Scalar>(bragg: &BraggConfig<T>, alpha: T) -> T {
    critical_norm_with_envelope(bragg, alpha, T::one())
}

pub fn critical_norm_with_envelope<T: Scalar>(
    bragg: &BraggConfig<T>,
    alpha: T,
    envelope_ratio: T,
) -> T {
    let (a1, a2) = (bragg.a1(), bragg.a2());
    envelope_ratio * alpha / (alpha + T::lit(2.0)) * (a1 * a1 - a2 * a2) / ((a1 + a2) * (a1 + a2))
}

/// Resolution at which the imaged minimum equals the critical value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalResolution<T> {
    /// Backflow is visible for `sigma_r` below this value (oscillator units).
    Finite(T),
    /// Critical value at or above 1: any resolution shows it.
    AlwaysDetectable,
    /// Even perfect imaging leaves the minimum above the critical value.
    NeverDetectable,
}

impl<T: Scalar> CriticalResolution<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            CriticalResolution::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CriticalResolution::Finite(_) => "finite",
            CriticalResolution::AlwaysDetectable => "always_detectable",
            CriticalResolution::NeverDetectable => "never_detectable",
        }
    }
}

/// Contrast at which `observed_min_norm(zeta) = critical_norm`, from
/// `(S - 2 zeta a)/(S + 2 zeta a) = r`: `zeta* = S (1 - r) / (2 a (1 + r))`.
pub fn critical_zeta<T: Scalar>(bragg: &BraggConfig<T>, alpha: T) -> CriticalResolution<T> {
    let r = critical_norm(bragg, alpha);
    if r >= T::one() {
        return CriticalResolution::AlwaysDetectable;
    }
    let a = bragg.a1() * bragg.a2();
    let s = bragg.a1() * bragg.a1() + bragg.a2() * bragg.a2();
    if a <= T::zero() {
        return CriticalResolution::NeverDetectable;
    }
    let z = s * (T::one() - r) / (T::lit(2.0) * a * (T::one() + r));
    if z >= T::one() {
        CriticalResolution::NeverDetectable
    } else {
        CriticalResolution::Finite(z)
    }
}

/// Closed-form critical resolution `sqrt(-2 ln zeta*) / q`.
pub fn critical_resolution<T: Scalar>(bragg: &BraggConfig<T>, alpha: T) -> CriticalResolution<T> {
    match critical_zeta(bragg, alpha) {
        CriticalResolution::Finite(z) => {
            CriticalResolution::Finite((-T::lit(2.0) * z.ln()).sqrt() / bragg.q())
        }
        other => other,
    }
}

/// Bisection on `sigma_r` for the same crossing; independent of the
/// closed-form algebra.
pub fn critical_resolution_bisection<T: Scalar>(
    bragg: &BraggConfig<T>,
    alpha: T,
    rel_tol: T,
) -> CriticalResolution<T> {
    let r = critical_norm(bragg, alpha);
    let gap = |sigma: T| -> T {
        observed_min_norm(bragg, zeta(bragg.q(), sigma)).expect("zeta in (0, 1]") - r
    };
    if gap(T::zero()) >= T::zero() {
        return CriticalResolution::NeverDetectable;
    }
    let mut hi = T::one() / bragg.q();
    let mut expansions = 0;
    while gap(hi) < T::zero() {
        hi = hi * T::lit(2.0);
        expansions += 1;
        // zeta underflows long before this; the imaged minimum tends to 1
        if expansions > 60 {
            return CriticalResolution::AlwaysDetectable;
        }
    }
    let mut lo = T::zero();
    for _ in 0..300 {
        let mid = (lo + hi) / T::lit(2.0);
        if gap(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi {
            break;
        }
    }
    CriticalResolution::Finite((lo + hi) / T::lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectabilityReport<T> {
    /// Resolution the report was evaluated at (oscillator units).
    pub sigma_r: T,
    pub zeta: T,
    pub observed_min_norm: T,
    pub critical_norm: T,
    pub detectable: bool,
    pub sigma_r_critical: CriticalResolution<T>,
}

pub fn detectability<T: Scalar>(
    bragg: &BraggConfig<T>,
    alpha: T,
    sigma_r: T,
) -> Result<DetectabilityReport<T>, ImagingError> {
    if !(sigma_r >= T::zero()) {
        return Err(ImagingError::NegativeResolution(sigma_r.to_f64_lossy()));
    }
    let z = zeta(bragg.q(), sigma_r);
    // zeta can underflow to 0 for absurd resolutions; the fringe is gone
    let observed = if z > T::zero() {
        observed_min_norm(bragg, z)?
    } else {
        T::one()
    };
    let critical = critical_norm(bragg, alpha);
    Ok(DetectabilityReport {
        sigma_r,
        zeta: z,
        observed_min_norm: observed,
        critical_norm: critical,
        detectable: observed < critical,
        sigma_r_critical: critical_resolution(bragg, alpha),
    })
}

impl<T: Scalar> DetectabilityReport<T> {
    pub const CSV_HEADER: &'static str =
        "sigma_r_m,zeta,observed_min_norm,critical_norm,detectable,sigma_r_critical_m";

    /// One CSV row; lengths converted with `length_unit` (metres per `a_x`).
    pub fn csv_row(&self, length_unit: f64) -> String {
        let crit = self
            .sigma_r_critical
            .value()
            .map(|v| format!("{:.16e}", v.to_f64_lossy() * length_unit))
            .unwrap_or_default();
        format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            self.sigma_r.to_f64_lossy() * length_unit,
            self.zeta.to_f64_lossy(),
            self.observed_min_norm.to_f64_lossy(),
            self.critical_norm.to_f64_lossy(),
            self.detectable,
            crit
        )
    }

    pub fn to_key_values(&self, length_unit: f64) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "sigma_r_m = {:.16e}\n",
            self.sigma_r.to_f64_lossy() * length_unit
        ));
        s.push_str(&format!("zeta = {:.16e}\n", self.zeta.to_f64_lossy()));
        s.push_str(&format!(
            "observed_min_norm = {:.16e}\n",
            self.observed_min_norm.to_f64_lossy()
        ));
        s.push_str(&format!(
            "critical_norm = {:.16e}\n",
            self.critical_norm.to_f64_lossy()
        ));
        s.push_str(&format!("detectable = {}\n", self.detectable));
        match self.sigma_r_critical {
            CriticalResolution::Finite(v) => s.push_str(&format!(
                "sigma_r_critical_m = {:.16e}\n",
                v.to_f64_lossy() * length_unit
            )),
            other => s.push_str(&format!("sigma_r_critical = {}\n", other.label())),
        }
        s
    }
}

/// Convolution of `values` (uniform spacing `dx`) with a unit-sum Gaussian
/// of standard deviation `sigma`, zero outside the grid.
pub fn gaussian_blur<T: Scalar>(values: &[T], dx: T, sigma: T) -> Vec<T> {
    if sigma == T::zero() || values.is_empty() {
        return values.to_vec();
    }
    let reach = (T::lit(8.0) * sigma / dx)
        .ceil()
        .to_usize()
        .unwrap_or(values.len());
    let reach = reach.min(values.len());
    let mut kernel: Vec<T> = (0..=reach)
        .map(|j| {
            let u = T::from_usize_lossy(j) * dx / sigma;
            (-(u * u) / T::lit(2.0)).exp()
        })
        .collect();
    let total = kernel[0] + T::lit(2.0) * kernel[1..].iter().copied().fold(T::zero(), |a, b| a + b);
    for w in &mut kernel {
        *w = *w / total;
    }
    let n = values.len();
    (0..n)
        .map(|i| {
            let mut acc = kernel[0] * values[i];
            for (j, &w) in kernel.iter().enumerate().skip(1) {
                if i >= j {
                    acc = acc + w * values[i - j];
                }
                if i + j < n {
                    acc = acc + w * values[i + j];
                }
            }
            acc
        })
        .collect()
}

/// Imaged profile: the density is convolved with the resolution kernel,
/// the other columns are carried over unchanged.
pub fn blur_profile<T: Scalar>(
    profile: &FieldProfile<T>,
    sigma_r: T,
) -> Result<FieldProfile<T>, ImagingError> {
    if !(sigma_r >= T::zero()) {
        return Err(ImagingError::NegativeResolution(sigma_r.to_f64_lossy()));
    }
    if sigma_r == T::zero() {
        return Ok(profile.clone());
    }
    let dx = profile.spacing();
    let limit = sigma_r / T::lit(4.0);
    if !(dx < limit) {
        return Err(ImagingError::GridTooCoarse {
            spacing: dx.to_f64_lossy(),
            limit: limit.to_f64_lossy(),
        });
    }
    let mut out = profile.clone();
    out.rho = gaussian_blur(&profile.rho, dx, sigma_r);
    Ok(out)
}

/// Minimum of the density nearest `x0`, divided by the global maximum.
pub fn measured_min_norm<T: Scalar>(profile: &FieldProfile<T>, x0: T) -> Option<T> {
    let max = profile.max_density();
    profile.nearest_minimum(x0).map(|(_, v)| v / max)
}

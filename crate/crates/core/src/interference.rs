//! Two-momentum superposition created by an instantaneous Bragg pulse:
//! total density, total current, the regime discriminant `eta` and the
//! critical density below which the current is negative.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::wavepacket::WavepacketState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterferenceError {
    #[error("Bragg amplitudes must be non-negative and not both zero (got A1 = {a1}, A2 = {a2})")]
    InvalidAmplitudes { a1: f64, a2: f64 },
    #[error("Bragg kick q must be strictly positive (got {0})")]
    NonPositiveKick(f64),
    #[error("amplitude A2 = {0} outside [0, 1]")]
    AmplitudeOutOfRange(f64),
    #[error("grid spacing {spacing} exceeds lambda/8 = {limit}; fringes are not resolved")]
    GridTooCoarse { spacing: f64, limit: f64 },
    #[error("grid needs at least 3 points and x_max > x_min")]
    DegenerateGrid,
}

/// Amplitudes, kick and phase of the Bragg superposition
/// `psi (A1 + A2 exp[i(q x + varphi)])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BraggConfig<T> {
    a1: T,
    a2: T,
    q: T,
    varphi: T,
}

impl<T: Scalar> BraggConfig<T> {
    /// Builds a configuration, rescaling the amplitudes so that
    /// `A1^2 + A2^2 = 1`.
    pub fn new(a1: T, a2: T, q: T, varphi: T) -> Result<Self, InterferenceError> {
        if !(a1 >= T::zero() && a2 >= T::zero()) || (a1 == T::zero() && a2 == T::zero()) {
            return Err(InterferenceError::InvalidAmplitudes {
                a1: a1.to_f64_lossy(),
                a2: a2.to_f64_lossy(),
            });
        }
        if !(q > T::zero()) || !q.is_finite() {
            return Err(InterferenceError::NonPositiveKick(q.to_f64_lossy()));
        }
        let n = a1.hypot(a2);
        Ok(Self {
            a1: a1 / n,
            a2: a2 / n,
            q,
            varphi,
        })
    }

    /// Kick `q = alpha k1` with `A1 = sqrt(1 - A2^2)`.
    pub fn from_alpha(alpha: T, k1: T, a2: T, varphi: T) -> Result<Self, InterferenceError> {
        if !(a2 >= T::zero() && a2 <= T::one()) {
            return Err(InterferenceError::AmplitudeOutOfRange(a2.to_f64_lossy()));
        }
        let a1 = (T::one() - a2 * a2).max(T::zero()).sqrt();
        Self::new(a1, a2, alpha * k1, varphi)
    }

    pub fn a1(&self) -> T {
        self.a1
    }

    pub fn a2(&self) -> T {
        self.a2
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn varphi(&self) -> T {
        self.varphi
    }

    pub fn with_varphi(mut self, varphi: T) -> Self {
        self.varphi = varphi;
        self
    }

    /// Fraction of atoms transferred, `A2^2`.
    pub fn transferred_fraction(&self) -> T {
        self.a2 * self.a2
    }

    pub fn alpha(&self, k1: T) -> T {
        self.q / k1
    }

    pub fn k2(&self, k1: T) -> T {
        k1 + self.q
    }

    /// Fringe period `2 pi / q`.
    pub fn wavelength(&self) -> T {
        T::TAU() / self.q
    }

    fn cos_phase(&self, x: T) -> T {
        (self.q * x + self.varphi).cos()
    }

    /// `A1 + A2 exp[i(q x + varphi)]`.
    pub fn factor(&self, x: T) -> Complex<T> {
        Complex::new(self.a1, T::zero()) + Complex::from_polar(self.a2, self.q * x + self.varphi)
    }

    /// `A1^2 + A2^2 + 2 A1 A2 cos(q x + varphi)`.
    pub fn modulation(&self, x: T) -> T {
        self.a1 * self.a1 + self.a2 * self.a2 + T::lit(2.0) * self.a1 * self.a2 * self.cos_phase(x)
    }
}

/// Which side of `eta = 0` a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    /// `eta > 0`: negative current has no classical counterpart.
    QuantumWindow,
    /// `eta <= 0`.
    ClassicalRegion,
}

impl RegionKind {
    pub fn label(self) -> &'static str {
        match self {
            RegionKind::QuantumWindow => "quantum_window",
            RegionKind::ClassicalRegion => "classical_region",
        }
    }
}

/// Critical density at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalDensity<T> {
    /// Quantum regime threshold. A negative value means the density can
    /// never drop below it (`A2 > A1`): backflow is impossible by this
    /// criterion there.
    Threshold(T),
    /// `eta <= 0`; the threshold is not used for detection.
    Classical,
}

impl<T: Scalar> CriticalDensity<T> {
    pub fn value(&self) -> Option<T> {
        match *self {
            CriticalDensity::Threshold(v) => Some(v),
            CriticalDensity::Classical => None,
        }
    }

    pub fn is_attainable(&self) -> bool {
        matches!(*self, CriticalDensity::Threshold(v) if v > T::zero())
    }
}

/// Superposition wavefunction `Psi(x)`.
pub fn total_psi<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> Complex<T> {
    wp.psi(x) * bragg.factor(x)
}

/// `rho = |phi|^2 (A1^2 + A2^2 + 2 A1 A2 cos(q x + varphi))`.
pub fn total_density<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> T {
    wp.density(x) * bragg.modulation(x)
}

/// Total current in the expanded two-term form
/// `|phi|^2 [q (A2^2 + A1 A2 cos) + grad_theta (A1^2 + A2^2 + 2 A1 A2 cos)]`.
pub fn total_current<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> T {
    let (a1, a2) = (bragg.a1, bragg.a2);
    let c = bragg.cos_phase(x);
    let kick = bragg.q * (a2 * a2 + a1 * a2 * c);
    wp.density(x) * (kick + wp.phase_gradient(x) * bragg.modulation(x))
}

/// Total current written through the total density,
/// `grad_theta rho + q/2 [rho + |phi|^2 (A2^2 - A1^2)]`.
pub fn current_from_density<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> T {
    let rho = total_density(wp, bragg, x);
    let phi2 = wp.density(x);
    let half_q = bragg.q / T::lit(2.0);
    wp.phase_gradient(x) * rho + half_q * (rho + phi2 * (bragg.a2 * bragg.a2 - bragg.a1 * bragg.a1))
}

/// `eta = 1 + 2 grad_theta / q`.
pub fn eta<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> T {
    T::one() + T::lit(2.0) * wp.phase_gradient(x) / bragg.q
}

pub fn region<T: Scalar>(wp: &WavepacketState<T>, bragg: &BraggConfig<T>, x: T) -> RegionKind {
    if eta(wp, bragg, x) > T::zero() {
        RegionKind::QuantumWindow
    } else {
        RegionKind::ClassicalRegion
    }
}

/// `rho_crit = q / (q + 2 grad_theta) |phi|^2 (A1^2 - A2^2)` for `eta > 0`.
pub fn critical_density<T: Scalar>(
    wp: &WavepacketState<T>,
    bragg: &BraggConfig<T>,
    x: T,
) -> CriticalDensity<T> {
    let grad = wp.phase_gradient(x);
    let denom = bragg.q + T::lit(2.0) * grad;
    if denom <= T::zero() {
        return CriticalDensity::Classical;
    }
    let contrast = bragg.a1 * bragg.a1 - bragg.a2 * bragg.a2;
    CriticalDensity::Threshold(bragg.q / denom * wp.density(x) * contrast)
}

/// Relative change of `grad_theta` across `centre +- fraction * width`,
/// measured against `k1`. Small values justify the plane-wave treatment.
pub fn center_window_variation<T: Scalar>(wp: &WavepacketState<T>, fraction: T) -> T {
    let h = fraction * wp.width();
    let c = wp.center();
    (wp.phase_gradient(c + h) - wp.phase_gradient(c - h)).abs() / wp.k1.abs()
}

/// Sampling of a field profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileGrid<T> {
    /// `centre +- half_widths * (b R0)`, with at least `n_points` samples and
    /// refined until the spacing is below `lambda / 40`.
    Auto { n_points: usize, half_widths: T },
    /// Fixed uniform grid; rejected when the spacing exceeds `lambda / 8`.
    Explicit { x_min: T, x_max: T, n_points: usize },
}

impl<T: Scalar> Default for ProfileGrid<T> {
    fn default() -> Self {
        ProfileGrid::Auto {
            n_points: 4096,
            half_widths: T::lit(5.0),
        }
    }
}

/// Density, current, critical density and regime sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile<T> {
    pub x: Vec<T>,
    pub rho: Vec<T>,
    pub current: Vec<T>,
    pub rho_crit: Vec<Option<T>>,
    pub eta: Vec<T>,
    pub regime: Vec<RegionKind>,
}

/// A contiguous interval of negative current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackflowWindow<T> {
    pub start: T,
    pub end: T,
    /// Position of the most negative current sample.
    pub deepest_x: T,
    pub min_current: T,
}

impl<T: Scalar> BackflowWindow<T> {
    pub fn center(&self) -> T {
        (self.start + self.end) / T::lit(2.0)
    }

    pub fn width(&self) -> T {
        self.end - self.start
    }
}

pub fn profile<T: Scalar>(
    wp: &WavepacketState<T>,
    bragg: &BraggConfig<T>,
    grid: ProfileGrid<T>,
) -> Result<FieldProfile<T>, InterferenceError> {
    let lambda = bragg.wavelength();
    let (x_min, x_max, n) = match grid {
        ProfileGrid::Auto {
            n_points,
            half_widths,
        } => {
            let half = half_widths * wp.width();
            let span = T::lit(2.0) * half;
            let needed = (span / (lambda / T::lit(40.0)))
                .ceil()
                .to_usize()
                .unwrap_or(usize::MAX);
            (
                wp.center() - half,
                wp.center() + half,
                n_points.max(needed + 1),
            )
        }
        ProfileGrid::Explicit {
            x_min,
            x_max,
            n_points,
        } => {
            if n_points < 3 || !(x_max > x_min) {
                return Err(InterferenceError::DegenerateGrid);
            }
            let spacing = (x_max - x_min) / T::from_usize_lossy(n_points - 1);
            let limit = lambda / T::lit(8.0);
            if spacing > limit {
                return Err(InterferenceError::GridTooCoarse {
                    spacing: spacing.to_f64_lossy(),
                    limit: limit.to_f64_lossy(),
                });
            }
            (x_min, x_max, n_points)
        }
    };
    if n < 3 || !(x_max > x_min) {
        return Err(InterferenceError::DegenerateGrid);
    }
    let dx = (x_max - x_min) / T::from_usize_lossy(n - 1);
    let x: Vec<T> = (0..n)
        .map(|i| x_min + dx * T::from_usize_lossy(i))
        .collect();
    let mut out = FieldProfile {
        rho: Vec::with_capacity(n),
        current: Vec::with_capacity(n),
        rho_crit: Vec::with_capacity(n),
        eta: Vec::with_capacity(n),
        regime: Vec::with_capacity(n),
        x,
    };
    for &xi in &out.x {
        out.rho.push(total_density(wp, bragg, xi));
        out.current.push(total_current(wp, bragg, xi));
        out.rho_crit.push(critical_density(wp, bragg, xi).value());
        out.eta.push(eta(wp, bragg, xi));
        out.regime.push(region(wp, bragg, xi));
    }
    Ok(out)
}

impl<T: Scalar> FieldProfile<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn spacing(&self) -> T {
        if self.x.len() < 2 {
            return T::zero();
        }
        self.x[1] - self.x[0]
    }

    pub fn max_density(&self) -> T {
        self.rho.iter().copied().fold(T::zero(), T::max)
    }

    /// `(x, rho)` of every interior local minimum of the density, refined by
    /// a parabola through the three neighbouring samples.
    pub fn density_minima(&self) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let r = &self.rho;
        let h = self.spacing();
        for i in 1..r.len().saturating_sub(1) {
            if r[i] < r[i - 1] && r[i] <= r[i + 1] {
                let curv = r[i - 1] - T::lit(2.0) * r[i] + r[i + 1];
                let (shift, value) = if curv > T::zero() {
                    let s = (r[i - 1] - r[i + 1]) / (T::lit(2.0) * curv);
                    (s, r[i] - (r[i - 1] - r[i + 1]) * s / T::lit(4.0))
                } else {
                    (T::zero(), r[i])
                };
                out.push((self.x[i] + shift * h, value));
            }
        }
        out
    }

    /// Density minimum closest to `x0`.
    pub fn nearest_minimum(&self, x0: T) -> Option<(T, T)> {
        self.density_minima().into_iter().min_by(|a, b| {
            (a.0 - x0)
                .abs()
                .partial_cmp(&(b.0 - x0).abs())
                .expect("finite grid")
        })
    }

    /// Runs of negative current while the unkicked packet moves forward
    /// (`grad_theta > 0`, i.e. `eta > 1`). Negative flow at `x < x_-` is the
    /// packet's own velocity field and is reported by
    /// [`Self::classical_flow_windows`] instead.
    pub fn backflow_windows(&self) -> Vec<BackflowWindow<T>> {
        self.windows_where(|i| self.eta[i] - T::one())
    }

    /// Runs of negative current where the packet itself moves backwards.
    pub fn classical_flow_windows(&self) -> Vec<BackflowWindow<T>> {
        self.windows_where(|i| T::one() - self.eta[i])
    }

    /// Every maximal run of `J < 0`.
    pub fn negative_current_windows(&self) -> Vec<BackflowWindow<T>> {
        self.windows_where(|_| T::one())
    }

    /// Runs where `J < 0` and `side > 0`. Edges are linear interpolations of
    /// whichever of the two quantities changes sign there.
    fn windows_where(&self, side: impl Fn(usize) -> T) -> Vec<BackflowWindow<T>> {
        let j = &self.current;
        let x = &self.x;
        let inside = |i: usize| j[i] < T::zero() && side(i) > T::zero();
        // `a` outside, `b` inside
        let edge = |a: usize, b: usize| {
            let (fa, fb) = if j[a] >= T::zero() {
                (j[a], j[b])
            } else {
                (side(a), side(b))
            };
            x[a] + (x[b] - x[a]) * fa / (fa - fb)
        };
        let mut out = Vec::new();
        let mut i = 0;
        while i < j.len() {
            if !inside(i) {
                i += 1;
                continue;
            }
            let first = i;
            while i < j.len() && inside(i) {
                i += 1;
            }
            let last = i - 1;
            let start = if first == 0 {
                x[0]
            } else {
                edge(first - 1, first)
            };
            let end = if last + 1 == j.len() {
                x[last]
            } else {
                edge(last + 1, last)
            };
            let (deepest, min_current) = (first..=last)
                .map(|k| (k, j[k]))
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite current"))
                .expect("non-empty window");
            out.push(BackflowWindow {
                start,
                end,
                deepest_x: x[deepest],
                min_current,
            });
        }
        out
    }

    /// Points in the quantum window whose density sits below the critical
    /// value but whose current is non-negative, or vice versa.
    pub fn threshold_mismatches(&self) -> usize {
        (0..self.len())
            .filter(|&i| self.regime[i] == RegionKind::QuantumWindow)
            .filter(|&i| {
                let below = self.rho_crit[i].is_some_and(|c| self.rho[i] < c);
                below != (self.current[i] < T::zero())
            })
            .count()
    }
}

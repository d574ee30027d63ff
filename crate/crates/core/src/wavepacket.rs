//! Analytic expanded wavepacket after release from the displaced trap.
//!
//! Oscillator units throughout (`hbar = m = omega_x = 1`). The release point
//! is the origin of both space and time, so the packet centre moves as
//! `x_c(t) = k1 t` and the wavefunction is
//!
//! ```text
//! psi(x, t) = b^{-1/2} psi0((x - k1 t) / b) exp[i x^2 b'/(2b) + i k1 x (1 - b' t / b)]
//! ```
//!
//! with the global phase dropped (it cancels from every observable).

use num_complex::Complex;
use thiserror::Error;

use crate::ode::{self, OdeError, Tolerances};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavepacketError {
    #[error("time must be non-negative (got {0})")]
    NegativeTime(f64),
    #[error("invalid initial profile: {0}")]
    InvalidProfile(&'static str),
    #[error("scaling ODE failed: {0}")]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    NonInteracting,
    ThomasFermi,
}

impl Regime {
    /// Factor `f` in the asymptotic classical-backflow condition
    /// `R0 > f v1 / omega_x`: the asymptotic expansion velocity `b'(inf)` is
    /// `1` (ideal gas) or `sqrt(2)` (Thomas-Fermi), and `f = 1 / b'(inf)`.
    pub fn asymptotic_factor<T: Scalar>(self) -> T {
        match self {
            Regime::NonInteracting => T::one(),
            Regime::ThomasFermi => T::FRAC_1_SQRT_2(),
        }
    }
}

/// Ground state of the axial trap before the shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialProfile<T> {
    /// `pi^{-1/4} exp(-x^2/2)`, unit norm.
    Gaussian,
    /// `sqrt((mu - x^2/2)/g)` inside `|x| < sqrt(2 mu)`.
    ThomasFermi { mu: T, g: T },
}

impl<T: Scalar> InitialProfile<T> {
    pub fn gaussian() -> Self {
        InitialProfile::Gaussian
    }

    /// Thomas-Fermi profile holding `norm` atoms at coupling `g`; the
    /// chemical potential follows from `norm = (4/3) mu R / g`.
    pub fn thomas_fermi(norm: T, g: T) -> Result<Self, WavepacketError> {
        if !(norm > T::zero() && g > T::zero()) {
            return Err(WavepacketError::InvalidProfile(
                "Thomas-Fermi profile needs positive norm and coupling",
            ));
        }
        let mu = (T::lit(3.0) * g * norm / (T::lit(4.0) * T::SQRT_2())).powf(T::lit(2.0 / 3.0));
        Ok(InitialProfile::ThomasFermi { mu, g })
    }

    pub fn regime(&self) -> Regime {
        match self {
            InitialProfile::Gaussian => Regime::NonInteracting,
            InitialProfile::ThomasFermi { .. } => Regime::ThomasFermi,
        }
    }

    /// Initial half width `R0`: the oscillator length for the Gaussian,
    /// the Thomas-Fermi radius otherwise.
    pub fn width(&self) -> T {
        match *self {
            InitialProfile::Gaussian => T::one(),
            InitialProfile::ThomasFermi { mu, .. } => (T::lit(2.0) * mu).sqrt(),
        }
    }

    pub fn norm(&self) -> T {
        match *self {
            InitialProfile::Gaussian => T::one(),
            InitialProfile::ThomasFermi { mu, g } => {
                T::lit(4.0 / 3.0) * mu * (T::lit(2.0) * mu).sqrt() / g
            }
        }
    }

    /// `psi0(x)`.
    pub fn amplitude(&self, x: T) -> T {
        match *self {
            InitialProfile::Gaussian => {
                T::PI().powf(T::lit(-0.25)) * (-(x * x) / T::lit(2.0)).exp()
            }
            InitialProfile::ThomasFermi { mu, g } => {
                ((mu - x * x / T::lit(2.0)) / g).max(T::zero()).sqrt()
            }
        }
    }
}

/// Scaling parameter `b(t)` and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingState<T> {
    pub b: T,
    pub b_dot: T,
    pub time: T,
}

impl<T: Scalar> ScalingState<T> {
    pub fn initial() -> Self {
        Self {
            b: T::one(),
            b_dot: T::zero(),
            time: T::zero(),
        }
    }
}

/// Conserved quantity `b'^2/2 + 1/b` of the Thomas-Fermi scaling equation.
pub fn tf_scaling_energy<T: Scalar>(s: &ScalingState<T>) -> T {
    s.b_dot * s.b_dot / T::lit(2.0) + T::one() / s.b
}

/// Scaling parameter after free expansion for time `t`: closed form for the
/// ideal gas, adaptive integration of `b'' = 1/b^2` for Thomas-Fermi.
pub fn scaling_evolve<T: Scalar>(regime: Regime, t: T) -> Result<ScalingState<T>, WavepacketError> {
    if t < T::zero() || !t.is_finite() {
        return Err(WavepacketError::NegativeTime(t.to_f64_lossy()));
    }
    match regime {
        Regime::NonInteracting => {
            let b = (T::one() + t * t).sqrt();
            Ok(ScalingState {
                b,
                b_dot: t / b,
                time: t,
            })
        }
        Regime::ThomasFermi => {
            let y = ode::integrate(
                |_t, y: &[T; 2]| [y[1], T::one() / (y[0] * y[0])],
                T::zero(),
                [T::one(), T::zero()],
                t,
                Tolerances::default(),
            )?;
            Ok(ScalingState {
                b: y[0],
                b_dot: y[1],
                time: t,
            })
        }
    }
}

/// Single released wavepacket at expansion time `scaling.time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavepacketState<T> {
    pub profile: InitialProfile<T>,
    pub scaling: ScalingState<T>,
    /// Release wavenumber `k1` (equal to the release velocity).
    pub k1: T,
}

impl<T: Scalar> WavepacketState<T> {
    pub fn new(profile: InitialProfile<T>, k1: T, t: T) -> Result<Self, WavepacketError> {
        let scaling = scaling_evolve(profile.regime(), t)?;
        Ok(Self {
            profile,
            scaling,
            k1,
        })
    }

    pub fn time(&self) -> T {
        self.scaling.time
    }

    /// Packet centre `k1 t`.
    pub fn center(&self) -> T {
        self.k1 * self.scaling.time
    }

    /// Current half width `b R0`.
    pub fn width(&self) -> T {
        self.scaling.b * self.profile.width()
    }

    /// `|phi(x)|`, the modulus of the expanded wavefunction.
    pub fn envelope(&self, x: T) -> T {
        let b = self.scaling.b;
        self.profile.amplitude((x - self.center()) / b) / b.sqrt()
    }

    /// Envelope at the packet centre, i.e. its maximum.
    pub fn peak_envelope(&self) -> T {
        self.envelope(self.center())
    }

    /// `theta(x)` with the global phase set to zero.
    pub fn phase(&self, x: T) -> T {
        let s = &self.scaling;
        let rate = s.b_dot / s.b;
        x * x * rate / T::lit(2.0) + self.k1 * x * (T::one() - rate * s.time)
    }

    /// Local wavenumber `x b'/b + k1 (1 - b' t / b)`.
    pub fn phase_gradient(&self, x: T) -> T {
        let s = &self.scaling;
        let rate = s.b_dot / s.b;
        x * rate + self.k1 * (T::one() - rate * s.time)
    }

    pub fn psi(&self, x: T) -> Complex<T> {
        Complex::from_polar(self.envelope(x), self.phase(x))
    }

    pub fn density(&self, x: T) -> T {
        let a = self.envelope(x);
        a * a
    }

    /// Flux of the packet alone, `|phi|^2 grad theta`.
    pub fn single_packet_current(&self, x: T) -> T {
        self.density(x) * self.phase_gradient(x)
    }

    /// Position `v1 (t - b/b')` left of which the single-packet flux is
    /// negative. `None` when `b' = 0` (no such region).
    pub fn x_minus(&self) -> Option<T> {
        let s = &self.scaling;
        if s.b_dot <= T::zero() {
            return None;
        }
        Some(self.k1 * (s.time - s.b / s.b_dot))
    }

    /// Left border `-b R0 + v1 t`.
    pub fn left_border(&self) -> T {
        self.center() - self.width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn ideal_gas_scaling_closed_form() {
        let s0 = scaling_evolve::<f64>(Regime::NonInteracting, 0.0).unwrap();
        assert_eq!((s0.b, s0.b_dot), (1.0, 0.0));
        let s1 = scaling_evolve::<f64>(Regime::NonInteracting, 1.0).unwrap();
        assert_relative_eq!(s1.b, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(s1.b_dot, 1.0 / 2f64.sqrt(), max_relative = 1e-15);
        assert!(matches!(
            scaling_evolve::<f64>(Regime::NonInteracting, -1.0),
            Err(WavepacketError::NegativeTime(_))
        ));
    }

    #[test]
    fn thomas_fermi_scaling_matches_reference_integration() {
        // Reference: scipy solve_ivp, rtol 1e-12.
        let s = scaling_evolve::<f64>(Regime::ThomasFermi, 50.0).unwrap();
        assert_relative_eq!(s.b, 68.410_284_66, max_relative = 1e-8);
        assert_relative_eq!(s.b_dot, 1.403_839_25, max_relative = 1e-8);
        // the expansion velocity approaches sqrt(2) much faster than b/(sqrt2 t)
        assert!((s.b_dot / 2f64.sqrt() - 1.0).abs() < 0.01);
    }

    #[test]
    fn thomas_fermi_scaling_energy_is_conserved() {
        let e0 = tf_scaling_energy(&ScalingState::<f64>::initial());
        for t in [0.5, 2.0, 10.0, 50.0, 200.0] {
            let s = scaling_evolve::<f64>(Regime::ThomasFermi, t).unwrap();
            let drift = (tf_scaling_energy(&s) - e0).abs() / e0;
            assert!(drift < 1e-8, "t = {t}: drift {drift}");
            assert!(s.b >= 1.0 && s.b_dot >= 0.0);
        }
    }

    #[test]
    fn scaling_is_monotone() {
        for regime in [Regime::NonInteracting, Regime::ThomasFermi] {
            let mut prev = 1.0;
            for i in 0..40 {
                let s = scaling_evolve::<f64>(regime, i as f64 * 0.25).unwrap();
                assert!(s.b >= prev);
                prev = s.b;
            }
        }
    }

    #[test]
    fn gaussian_envelope_peak_and_norm() {
        let k1: f64 = 2.1;
        for t in [0.0, 0.7, 5.0, 30.0] {
            let w = WavepacketState::new(InitialProfile::gaussian(), k1, t).unwrap();
            let expected = std::f64::consts::PI.powf(-0.25) / w.scaling.b.sqrt();
            assert_relative_eq!(w.envelope(k1 * t), expected, max_relative = 1e-14);
            let c = w.center();
            let half = 12.0 * w.scaling.b;
            let norm = trapezoid(|x| w.density(x), c - half, c + half, 20_000);
            assert!((norm - 1.0).abs() < 1e-9, "t = {t}: norm {norm}");
        }
    }

    #[test]
    fn thomas_fermi_envelope_support_and_norm() {
        let p = InitialProfile::<f64>::thomas_fermi(1.0, 100.0).unwrap();
        assert_relative_eq!(p.norm(), 1.0, max_relative = 1e-13);
        let w = WavepacketState::new(p, 2.0, 3.0).unwrap();
        let edge = w.center() + w.scaling.b * p.width();
        assert_eq!(w.envelope(edge), 0.0);
        assert_eq!(w.envelope(edge + 1e-3), 0.0);
        assert!(w.envelope(edge - 1e-3) > 0.0);
        // integrand has a square-root-free parabola: Simpson-exact up to the support edges
        let lo = w.center() - w.width();
        let norm = trapezoid(|x| w.density(x), lo, edge, 200_000);
        assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    }

    #[test]
    fn phase_gradient_identities() {
        let k1: f64 = 2.105_306_88;
        let w0 = WavepacketState::new(InitialProfile::gaussian(), k1, 0.0).unwrap();
        for x in [-3.0, 0.0, 5.0] {
            assert_eq!(w0.phase_gradient(x), k1);
        }
        for t in [0.1, 1.0, std::f64::consts::TAU, 100.0] {
            let w = WavepacketState::new(InitialProfile::gaussian(), k1, t).unwrap();
            assert!((w.phase_gradient(w.center()) - k1).abs() < 1e-12 * k1);
        }
    }

    #[test]
    fn phase_gradient_matches_finite_difference_of_phase() {
        let w = WavepacketState::new(InitialProfile::<f64>::gaussian(), 1.3, 2.5).unwrap();
        let h = 1e-5;
        for x in [-1.0, 0.5, 3.25, 7.0] {
            let fd = (w.phase(x + h) - w.phase(x - h)) / (2.0 * h);
            assert!((fd - w.phase_gradient(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn asymptotic_phase_gradient_is_x_over_t() {
        let k1: f64 = 2.0;
        let t: f64 = 1.0e4;
        for (profile, tol) in [
            (InitialProfile::gaussian(), 1e-6),
            (InitialProfile::thomas_fermi(1.0, 50.0).unwrap(), 1e-2),
        ] {
            let w = WavepacketState::new(profile, k1, t).unwrap();
            for u in [-0.8, 0.0, 0.8] {
                let x = w.center() + u * w.width();
                let rel = (w.phase_gradient(x) - x / t).abs() / (x / t).abs();
                assert!(rel < tol, "{:?} u = {u}: {rel}", profile.regime());
            }
        }
    }

    #[test]
    fn x_minus_limits() {
        let w = WavepacketState::new(InitialProfile::<f64>::gaussian(), 2.0, 0.0).unwrap();
        assert_eq!(w.x_minus(), None);
        let early = WavepacketState::new(InitialProfile::<f64>::gaussian(), 2.0, 1e-6).unwrap();
        assert!(early.x_minus().unwrap() < -1e5);
        // b/b' = t + 1/t, so x_- = -v1 / t for the ideal gas
        for t in [5.0, 20.0, 100.0] {
            let w = WavepacketState::new(InitialProfile::<f64>::gaussian(), 2.0, t).unwrap();
            assert_relative_eq!(w.x_minus().unwrap(), -2.0 / t, max_relative = 1e-10);
        }
    }

    #[test]
    fn single_packet_flux_changes_sign_at_x_minus() {
        let t = std::f64::consts::TAU;
        let w = WavepacketState::new(InitialProfile::gaussian(), 2.105_306_88, t).unwrap();
        let x_minus = w.x_minus().unwrap();
        assert!((x_minus + 0.335_069_996_86).abs() < 1e-9);
        let lo = w.center() - 6.0 * w.width();
        let hi = w.center() + 6.0 * w.width();
        let n = 4001;
        let dx = (hi - lo) / (n - 1) as f64;
        let mut crossings = vec![];
        let mut prev = w.single_packet_current(lo);
        for i in 1..n {
            let x = lo + i as f64 * dx;
            let j = w.single_packet_current(x);
            if prev.signum() != j.signum() {
                crossings.push(x);
            }
            prev = j;
        }
        assert_eq!(crossings.len(), 1);
        assert!((crossings[0] - x_minus).abs() <= dx);
    }

    #[test]
    fn asymptotic_factor() {
        assert_eq!(Regime::NonInteracting.asymptotic_factor::<f64>(), 1.0);
        assert_relative_eq!(
            Regime::ThomasFermi.asymptotic_factor::<f64>(),
            0.5f64.sqrt()
        );
    }

    #[test]
    fn single_precision_evaluation() {
        let w = WavepacketState::new(InitialProfile::<f32>::gaussian(), 2.0, 1.0).unwrap();
        assert!((w.phase_gradient(w.center()) - 2.0).abs() < 1e-5);
        assert!((w.scaling.b - 2f32.sqrt()).abs() < 1e-6);
    }
}

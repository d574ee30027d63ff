//! Experiment design: backflow strength `F(alpha, A2)`, the optimal Bragg
//! amplitude, and the guard conditions that keep the effect quantum.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;
use crate::wavepacket::{InitialProfile, Regime, ScalingState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("amplitude A2 = {0} outside [0, 1]")]
    AmplitudeOutOfRange(f64),
    #[error("kick ratio alpha must be strictly positive (got {0})")]
    NonPositiveAlpha(f64),
    #[error("imaging resolution must be strictly positive (got {0})")]
    NonPositiveResolution(f64),
}

/// Default factor standing in for "much greater than".
pub const DEFAULT_GUARD_MARGIN: f64 = 2.0;

/// `F(alpha, A2) = 1 + alpha A2^2 - (2 + alpha) A2 sqrt(1 - A2^2)`.
/// Negative values mean the plane-wave superposition has negative current
/// at the fringe minima.
pub fn backflow_strength<T: Scalar>(alpha: T, a2: T) -> Result<T, DesignError> {
    check_alpha(alpha)?;
    if !(a2 >= T::zero() && a2 <= T::one()) {
        return Err(DesignError::AmplitudeOutOfRange(a2.to_f64_lossy()));
    }
    let two = T::lit(2.0);
    Ok(T::one() + alpha * a2 * a2 - (two + alpha) * a2 * (T::one() - a2 * a2).sqrt())
}

/// `dF/dA2 = 2 alpha A2 - (2 + alpha)(1 - 2 A2^2) / sqrt(1 - A2^2)`, for `A2 < 1`.
pub fn backflow_strength_slope<T: Scalar>(alpha: T, a2: T) -> T {
    let two = T::lit(2.0);
    let s = (T::one() - a2 * a2).sqrt();
    two * alpha * a2 - (two + alpha) * (T::one() - two * a2 * a2) / s
}

/// Left side of the stationarity condition
/// `2 alpha A2 sqrt(1 - A2^2) + (2 + alpha)(2 A2^2 - 1)`; it equals
/// `sqrt(1 - A2^2) dF/dA2`.
pub fn stationarity_residual<T: Scalar>(alpha: T, a2: T) -> T {
    let two = T::lit(2.0);
    two * alpha * a2 * (T::one() - a2 * a2).sqrt() + (two + alpha) * (two * a2 * a2 - T::one())
}

/// Amplitude minimising `F` at fixed `alpha`.
///
/// With `A2 = sin u` the stationarity condition becomes
/// `tan 2u = (2 + alpha) / alpha`, so `A2 = sin(atan((2 + alpha)/alpha) / 2)`.
pub fn optimal_a2<T: Scalar>(alpha: T) -> Result<T, DesignError> {
    check_alpha(alpha)?;
    let two = T::lit(2.0);
    Ok((((two + alpha) / alpha).atan() / two).sin())
}

/// Same optimum found by bisection of the stationarity residual on
/// `(0, 1/sqrt 2)`, where it changes sign from `-(2 + alpha)` to `alpha`.
pub fn optimal_a2_bracketed<T: Scalar>(alpha: T, tol: T) -> Result<T, DesignError> {
    check_alpha(alpha)?;
    let mut lo = T::zero();
    let mut hi = T::FRAC_1_SQRT_2();
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if stationarity_residual(alpha, mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<(), DesignError> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(DesignError::NonPositiveAlpha(alpha.to_f64_lossy()));
    }
    Ok(())
}

/// Design-time description of the experiment in oscillator units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignInput<T> {
    /// `q / k1`.
    pub alpha: T,
    /// Trap shift `d / a_x` (equal to `k1 a_x`).
    pub shift: T,
    pub profile: InitialProfile<T>,
}

impl<T: Scalar> DesignInput<T> {
    pub fn new(alpha: T, shift: T, profile: InitialProfile<T>) -> Result<Self, DesignError> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            shift,
            profile,
        })
    }

    pub fn regime(&self) -> Regime {
        self.profile.regime()
    }

    /// Release velocity `v1 = omega_x d`, equal to `k1`.
    pub fn v1(&self) -> T {
        self.shift
    }
}

/// One named pass/fail condition. `margin` is the ratio by which the
/// condition is satisfied (`>= required` passes).
#[derive(Debug, Clone, PartialEq)]
pub struct GuardResult {
    pub name: &'static str,
    pub passed: bool,
    pub margin: f64,
    pub required: f64,
    pub detail: String,
}

impl fmt::Display for GuardResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} (margin {:.4}, required {:.4}) {}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.margin,
            self.required,
            self.detail
        )
    }
}

/// Guards against classical effects at expansion state `scaling`:
///
/// * `classical_backflow_now`: `R0 < v1 / b'(t)` (left border outruns `x_-`);
/// * `classical_backflow_asymptotic`: `R0 < f v1 / omega_x`;
/// * `negligible_negative_momenta`: `k1 a_x = d / a_x >= threshold`.
pub fn classical_guard<T: Scalar>(
    input: &DesignInput<T>,
    scaling: &ScalingState<T>,
    momentum_threshold: f64,
) -> Vec<GuardResult> {
    let r0 = input.profile.width().to_f64_lossy();
    let v1 = input.v1().to_f64_lossy();
    let b_dot = scaling.b_dot.to_f64_lossy();
    let f = input.regime().asymptotic_factor::<T>().to_f64_lossy();

    let now_limit = if b_dot > 0.0 {
        v1 / b_dot
    } else {
        f64::INFINITY
    };
    let now_margin = now_limit / r0;
    let asym_limit = f * v1;
    let asym_margin = asym_limit / r0;
    let k1ax = input.shift.to_f64_lossy();

    vec![
        GuardResult {
            name: "classical_backflow_now",
            passed: r0 < now_limit,
            margin: now_margin,
            required: 1.0,
            detail: format!("R0 = {r0:.4} a_x vs v1/b'(t) = {now_limit:.4} a_x"),
        },
        GuardResult {
            name: "classical_backflow_asymptotic",
            passed: r0 < asym_limit,
            margin: asym_margin,
            required: 1.0,
            detail: format!("R0 = {r0:.4} a_x vs f v1/omega_x = {asym_limit:.4} a_x (f = {f:.4})"),
        },
        GuardResult {
            name: "negligible_negative_momenta",
            passed: k1ax >= momentum_threshold,
            margin: k1ax,
            required: momentum_threshold,
            detail: format!("k1 a_x = d/a_x = {k1ax:.4}"),
        },
    ]
}

/// Ratios of the ordering `1 << d/a_x << (2 pi / alpha)(a_x / sigma_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyCheck {
    /// `d / a_x`.
    pub r1: f64,
    /// `(2 pi / alpha)(a_x / sigma_r) / (d / a_x)`.
    pub r2: f64,
    /// `(2 pi / alpha)(a_x / sigma_r)`.
    pub upper: f64,
    pub margin: f64,
    pub passed: bool,
}

impl HierarchyCheck {
    pub fn as_guards(&self) -> Vec<GuardResult> {
        vec![
            GuardResult {
                name: "hierarchy_lower",
                passed: self.r1 >= self.margin,
                margin: self.r1,
                required: self.margin,
                detail: format!("d/a_x = {:.4}", self.r1),
            },
            GuardResult {
                name: "hierarchy_upper",
                passed: self.r2 >= self.margin,
                margin: self.r2,
                required: self.margin,
                detail: format!("(2pi/alpha)(a_x/sigma_r) = {:.4}", self.upper),
            },
        ]
    }
}

/// `sigma_r` in units of `a_x`.
pub fn hierarchy_check<T: Scalar>(
    input: &DesignInput<T>,
    sigma_r: T,
    margin: f64,
) -> Result<HierarchyCheck, DesignError> {
    if !(sigma_r > T::zero()) {
        return Err(DesignError::NonPositiveResolution(sigma_r.to_f64_lossy()));
    }
    let r1 = input.shift.to_f64_lossy();
    let upper = std::f64::consts::TAU / input.alpha.to_f64_lossy() / sigma_r.to_f64_lossy();
    let r2 = upper / r1;
    Ok(HierarchyCheck {
        r1,
        r2,
        upper,
        margin,
        passed: r1 >= margin && r2 >= margin,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub alpha: f64,
    pub a2_opt: f64,
    pub f_min: f64,
    pub population_transfer: f64,
    pub guards: Vec<GuardResult>,
}

impl DesignReport {
    pub fn all_guards_pass(&self) -> bool {
        self.guards.iter().all(|g| g.passed)
    }

    /// Human-readable block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("alpha               = {:.6}\n", self.alpha));
        s.push_str(&format!("A2 (optimal)        = {:.6}\n", self.a2_opt));
        s.push_str(&format!(
            "A1                  = {:.6}\n",
            (1.0 - self.a2_opt * self.a2_opt).sqrt()
        ));
        s.push_str(&format!("F_min               = {:.6}\n", self.f_min));
        s.push_str(&format!(
            "population transfer = {:.4} %\n",
            100.0 * self.population_transfer
        ));
        s.push_str("guards:\n");
        for g in &self.guards {
            s.push_str(&format!("  {g}\n"));
        }
        s
    }

    /// `key = value` lines, full precision.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("alpha = {:.17e}\n", self.alpha));
        s.push_str(&format!("a2_opt = {:.17e}\n", self.a2_opt));
        s.push_str(&format!("f_min = {:.17e}\n", self.f_min));
        s.push_str(&format!(
            "population_transfer = {:.17e}\n",
            self.population_transfer
        ));
        for g in &self.guards {
            s.push_str(&format!("guard.{}.passed = {}\n", g.name, g.passed));
            s.push_str(&format!("guard.{}.margin = {:.17e}\n", g.name, g.margin));
        }
        s
    }
}

/// Optimum and guards for one design point. `sigma_r` (oscillator units)
/// enables the hierarchy check.
pub fn design_report<T: Scalar>(
    input: &DesignInput<T>,
    scaling: &ScalingState<T>,
    sigma_r: Option<T>,
    margin: f64,
) -> Result<DesignReport, DesignError> {
    let a2 = optimal_a2(input.alpha)?;
    let f_min = backflow_strength(input.alpha, a2)?;
    let mut guards = classical_guard(input, scaling, margin);
    if let Some(sigma) = sigma_r {
        guards.extend(hierarchy_check(input, sigma, margin)?.as_guards());
    }
    Ok(DesignReport {
        alpha: input.alpha.to_f64_lossy(),
        a2_opt: a2.to_f64_lossy(),
        f_min: f_min.to_f64_lossy(),
        population_transfer: (a2 * a2).to_f64_lossy(),
        guards,
    })
}

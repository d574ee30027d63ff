use crate::interference::{self, BraggConfig};
use crate::scalar::Scalar;
use crate::wavepacket::WavepacketState;

use super::grid::{GridSpec, Potential};
use super::propagator::{bragg_kick, ImagTimeOptions, Propagator, SimState};
use super::OracleError;

/// Full preparation sequence in oscillator units.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec<T> {
    /// Trap displacement `d / a_x`.
    pub shift: T,
    /// Time in the displaced trap before release.
    pub hold_time: T,
    /// Free expansion time before the Bragg pulse.
    pub expansion_time: T,
    /// Nonlinear coupling for a unit-normalized wavefunction.
    pub g: T,
    /// `None` stops after the expansion (single packet).
    pub bragg: Option<BraggConfig<T>>,
    pub grid: GridSpec<T>,
    pub imag_time: ImagTimeOptions<T>,
}

impl<T: Scalar> ProtocolSpec<T> {
    /// Centre-of-mass position at release, `d (1 - cos t1)`.
    pub fn release_center(&self) -> T {
        self.shift * (T::one() - self.hold_time.cos())
    }

    /// Momentum at release, `d sin t1`.
    pub fn release_momentum(&self) -> T {
        self.shift * self.hold_time.sin()
    }

    /// Grid large enough for the ground state and the expanded packet,
    /// assuming an initial half width `r0`.
    pub fn auto_grid(
        n_points: usize,
        shift: T,
        hold_time: T,
        expansion_time: T,
        r0: T,
        dt: T,
    ) -> Result<GridSpec<T>, OracleError> {
        let release = shift * (T::one() - hold_time.cos());
        let p = shift * hold_time.sin();
        let t = expansion_time;
        // ideal-gas spread bounds Thomas-Fermi growth `b ~ sqrt(2) t` within a factor
        let b = (T::one() + T::lit(2.0) * t * t).sqrt();
        let reach = T::lit(8.0) * r0.max(T::one()) * b;
        let final_center = release + p * t;
        let lo = (-T::lit(8.0) * r0.max(T::one())).min(final_center - reach);
        let hi = (shift + T::lit(8.0) * r0.max(T::one())).max(final_center + reach);
        GridSpec::covering(n_points, lo, hi, dt)
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolResult<T> {
    pub ground: SimState<T>,
    pub at_release: SimState<T>,
    pub before_kick: SimState<T>,
    pub after_kick: Option<SimState<T>>,
    /// Lab position of the release point; analytic coordinates are
    /// `x - release_center`.
    pub release_center: T,
}

impl<T: Scalar> ProtocolResult<T> {
    pub fn final_state(&self) -> &SimState<T> {
        self.after_kick.as_ref().unwrap_or(&self.before_kick)
    }
}

pub fn run_protocol<T: Scalar>(
    propagator: &mut Propagator<T>,
    spec: &ProtocolSpec<T>,
) -> Result<ProtocolResult<T>, OracleError> {
    let trap = Potential::harmonic(T::zero());
    let ground = propagator.ground_state(&trap, spec.g, T::one(), &spec.imag_time)?;

    let mut state = ground.clone();
    state.time = T::zero();
    propagator.evolve(&mut state, spec.hold_time, &Potential::harmonic(spec.shift))?;
    let at_release = state.clone();

    state.time = T::zero();
    propagator.evolve(&mut state, spec.expansion_time, &Potential::Free)?;
    let before_kick = state.clone();

    let release_center = spec.release_center();
    let after_kick = spec.bragg.as_ref().map(|b| {
        let mut kicked = state;
        bragg_kick(propagator, &mut kicked, b, release_center);
        kicked
    });

    Ok(ProtocolResult {
        ground,
        at_release,
        before_kick,
        after_kick,
        release_center,
    })
}

/// Worst-case deviations between an oracle state and the analytic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticComparison<T> {
    /// `max |rho_num - rho_ana| / max rho_ana`.
    pub density_linf: T,
    /// `max |J_num - J_ana| / max |J_ana|`.
    pub current_linf: T,
}

/// Compares `state` against the analytic superposition (or the single
/// packet when `bragg` is `None`), shifting lab coordinates by `origin`.
pub fn compare_with_analytic<T: Scalar>(
    propagator: &mut Propagator<T>,
    state: &SimState<T>,
    packet: &WavepacketState<T>,
    bragg: Option<&BraggConfig<T>>,
    origin: T,
) -> AnalyticComparison<T> {
    let rho_num = state.density();
    let j_num = propagator.measure_current(state);
    let (mut rho_max, mut j_max) = (T::zero(), T::zero());
    let (mut rho_err, mut j_err) = (T::zero(), T::zero());
    for (i, &x_lab) in propagator.positions().iter().enumerate() {
        let x = x_lab - origin;
        let (rho, j) = match bragg {
            Some(b) => (
                interference::total_density(packet, b, x),
                interference::total_current(packet, b, x),
            ),
            None => (packet.density(x), packet.single_packet_current(x)),
        };
        rho_max = rho_max.max(rho);
        j_max = j_max.max(j.abs());
        rho_err = rho_err.max((rho_num[i] - rho).abs());
        j_err = j_err.max((j_num[i] - j).abs());
    }
    AnalyticComparison {
        density_linf: rho_err / rho_max,
        current_linf: j_err / j_max,
    }
}

/// Residual of `d rho / dt + dJ/dx = 0` from a centred time difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityCheck<T> {
    pub max_residual: T,
    pub max_drho_dt: T,
}

impl<T: Scalar> ContinuityCheck<T> {
    pub fn relative(&self) -> T {
        self.max_residual / self.max_drho_dt
    }
}

/// Evolves copies of `state` by `delta` and `2 delta` in `potential` and
/// evaluates the continuity residual at the middle time.
pub fn continuity_residual<T: Scalar>(
    propagator: &mut Propagator<T>,
    state: &SimState<T>,
    potential: &Potential<T>,
    delta: T,
) -> Result<ContinuityCheck<T>, OracleError> {
    let rho0 = state.density();
    let mut mid = state.clone();
    propagator.evolve_with_dt(&mut mid, delta, potential, delta)?;
    let mut late = mid.clone();
    propagator.evolve_with_dt(&mut late, delta, potential, delta)?;
    let rho2 = late.density();
    let j = propagator.measure_current(&mid);
    let dj = propagator.derivative_real(&j);
    let two_delta = T::lit(2.0) * delta;
    let (mut res, mut rate) = (T::zero(), T::zero());
    for i in 0..rho0.len() {
        let drho = (rho2[i] - rho0[i]) / two_delta;
        rate = rate.max(drho.abs());
        res = res.max((drho + dj[i]).abs());
    }
    Ok(ContinuityCheck {
        max_residual: res,
        max_drho_dt: rate,
    })
}

/// Share of the total flux carried in the negative direction,
/// `integral max(-J, 0) / integral |J|`.
pub fn negative_flux_fraction<T: Scalar>(current: &[T]) -> T {
    let (neg, total) = current.iter().fold((T::zero(), T::zero()), |(n, t), &j| {
        (n + (-j).max(T::zero()), t + j.abs())
    });
    if total == T::zero() {
        T::zero()
    } else {
        neg / total
    }
}

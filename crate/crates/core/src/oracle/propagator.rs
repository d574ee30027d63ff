use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::interference::BraggConfig;
use crate::scalar::Scalar;

use super::grid::{check_dt, GridSpec, Potential};
use super::OracleError;

/// Wavefunction samples on the grid plus the interaction strength it evolves
/// under.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState<T> {
    pub psi: Vec<Complex<T>>,
    pub time: T,
    /// Nonlinear coupling `g` (zero for the ideal gas).
    pub g: T,
}

impl<T: Scalar> SimState<T> {
    pub fn density(&self) -> Vec<T> {
        self.psi.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Schedule for imaginary-time relaxation. Each rung runs until the energy
/// change per step and the state change per unit imaginary time both drop
/// below their tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagTimeOptions<T> {
    pub dt_ladder: Vec<T>,
    pub energy_tol: T,
    pub state_tol: T,
    pub max_steps_per_rung: usize,
    pub check_every: usize,
}

impl<T: Scalar> Default for ImagTimeOptions<T> {
    fn default() -> Self {
        Self {
            dt_ladder: vec![T::lit(1e-2), T::lit(1e-3), T::lit(1e-4)],
            energy_tol: T::lit(1e-12),
            state_tol: T::lit(1e-9),
            max_steps_per_rung: 400_000,
            check_every: 10,
        }
    }
}

impl<T: Scalar> ImagTimeOptions<T> {
    /// Looser schedule for quick runs (state error around 1e-6).
    pub fn quick() -> Self {
        Self {
            dt_ladder: vec![T::lit(1e-2), T::lit(1e-3)],
            state_tol: T::lit(1e-6),
            ..Self::default()
        }
    }
}

/// FFT plans and workspaces for one grid. Not shared between threads;
/// independent simulations each own one.
pub struct Propagator<T: Scalar> {
    grid: GridSpec<T>,
    x: Vec<T>,
    k: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> std::fmt::Debug for Propagator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("grid", &self.grid)
            .finish()
    }
}

/// Fraction of points at each edge inspected for boundary leakage.
const EDGE_FRACTION: usize = 64;
const BOUNDARY_RATIO: f64 = 1e-10;

impl<T: Scalar> Propagator<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.n_points);
        let inverse = planner.plan_fft_inverse(grid.n_points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            x: grid.positions(),
            k: grid.wavenumbers(),
            grid,
            forward,
            inverse,
            scratch: vec![Complex::new(T::zero(), T::zero()); scratch_len],
        }
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    pub fn positions(&self) -> &[T] {
        &self.x
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.k
    }

    fn check_len(&self, psi: &[Complex<T>]) -> Result<(), OracleError> {
        if psi.len() != self.grid.n_points {
            return Err(OracleError::SizeMismatch {
                expected: self.grid.n_points,
                got: psi.len(),
            });
        }
        Ok(())
    }

    fn fft(&mut self, buf: &mut [Complex<T>]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    fn ifft(&mut self, buf: &mut [Complex<T>]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let inv_n = T::one() / T::from_usize_lossy(buf.len());
        for c in buf.iter_mut() {
            *c = *c * inv_n;
        }
    }

    /// State built from samples of `f` on the grid.
    pub fn sample(&self, f: impl Fn(T) -> Complex<T>, g: T) -> SimState<T> {
        SimState {
            psi: self.x.iter().map(|&x| f(x)).collect(),
            time: T::zero(),
            g,
        }
    }

    pub fn norm(&self, state: &SimState<T>) -> T {
        state
            .psi
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            * self.grid.dx()
    }

    pub fn normalize(&self, state: &mut SimState<T>, target: T) {
        let n = self.norm(state);
        if n > T::zero() {
            let s = (target / n).sqrt();
            for c in &mut state.psi {
                *c = *c * s;
            }
        }
    }

    /// Spectral derivative `d psi / dx`.
    pub fn derivative(&mut self, psi: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut buf = psi.to_vec();
        self.fft(&mut buf);
        let n = buf.len();
        for (j, c) in buf.iter_mut().enumerate() {
            // the Nyquist mode has no well-defined odd derivative
            let k = if j == n / 2 { T::zero() } else { self.k[j] };
            *c = Complex::new(-c.im * k, c.re * k);
        }
        self.ifft(&mut buf);
        buf
    }

    /// Spectral derivative of a real periodic field.
    pub fn derivative_real(&mut self, f: &[T]) -> Vec<T> {
        let c: Vec<Complex<T>> = f.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.derivative(&c).into_iter().map(|c| c.re).collect()
    }

    /// Probability current `Im(psi* dpsi/dx)` (`hbar = m = 1`).
    pub fn measure_current(&mut self, state: &SimState<T>) -> Vec<T> {
        let d = self.derivative(&state.psi);
        state
            .psi
            .iter()
            .zip(d.iter())
            .map(|(p, dp)| (p.conj() * dp).im)
            .collect()
    }

    /// `E = integral |psi'|^2/2 + V |psi|^2 + g |psi|^4 / 2`.
    pub fn energy(&mut self, state: &SimState<T>, potential: &Potential<T>) -> T {
        let mut buf = state.psi.clone();
        self.fft(&mut buf);
        let n = T::from_usize_lossy(self.grid.n_points);
        let dx = self.grid.dx();
        let kinetic = buf
            .iter()
            .zip(self.k.iter())
            .fold(T::zero(), |acc, (c, &k)| acc + k * k * c.norm_sqr())
            * dx
            / (T::lit(2.0) * n);
        let half = T::lit(0.5);
        let rest = state
            .psi
            .iter()
            .zip(self.x.iter())
            .fold(T::zero(), |acc, (c, &x)| {
                let rho = c.norm_sqr();
                acc + potential.value(x) * rho + half * state.g * rho * rho
            })
            * dx;
        kinetic + rest
    }

    /// Momentum-space density `(k, n(k))`, sorted by `k`, normalized so that
    /// `sum n(k) dk` equals the norm.
    pub fn momentum_distribution(&mut self, state: &SimState<T>) -> Vec<(T, T)> {
        let mut buf = state.psi.clone();
        self.fft(&mut buf);
        let dx = self.grid.dx();
        let scale = dx * dx / T::TAU();
        let mut out: Vec<(T, T)> = buf
            .iter()
            .zip(self.k.iter())
            .map(|(c, &k)| (k, c.norm_sqr() * scale))
            .collect();
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite wavenumbers"));
        out
    }

    /// Ratio of the largest density in the outer edge bands to the peak.
    pub fn boundary_ratio(&self, state: &SimState<T>) -> T {
        let n = state.psi.len();
        let band = (n / EDGE_FRACTION).max(1);
        let rho = |i: usize| state.psi[i].norm_sqr();
        let peak = (0..n).map(rho).fold(T::zero(), T::max);
        if peak == T::zero() {
            return T::zero();
        }
        let edge = (0..band)
            .chain(n - band..n)
            .map(rho)
            .fold(T::zero(), T::max);
        edge / peak
    }

    fn check_boundary(&self, state: &SimState<T>) -> Result<(), OracleError> {
        if state
            .psi
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(OracleError::NonFinite);
        }
        let ratio = self.boundary_ratio(state);
        if ratio > T::lit(BOUNDARY_RATIO) {
            return Err(OracleError::BoundaryDensity {
                ratio: ratio.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Real-time Strang-split evolution over `duration` with the grid's `dt`.
    pub fn evolve(
        &mut self,
        state: &mut SimState<T>,
        duration: T,
        potential: &Potential<T>,
    ) -> Result<(), OracleError> {
        let dt = self.grid.dt;
        self.evolve_with_dt(state, duration, potential, dt)
    }

    /// As [`Self::evolve`] with an explicit step; the step is shrunk so an
    /// integer number of steps covers `duration` exactly.
    pub fn evolve_with_dt(
        &mut self,
        state: &mut SimState<T>,
        duration: T,
        potential: &Potential<T>,
        dt: T,
    ) -> Result<(), OracleError> {
        check_dt(dt)?;
        self.check_len(&state.psi)?;
        if duration <= T::zero() {
            return Ok(());
        }
        let steps = (duration / dt).ceil().to_usize().unwrap_or(1).max(1);
        let h = duration / T::from_usize_lossy(steps);
        let half = h / T::lit(2.0);

        let kinetic: Vec<Complex<T>> = self
            .k
            .iter()
            .map(|&k| Complex::from_polar(T::one(), -k * k * h / T::lit(2.0)))
            .collect();
        let v: Vec<T> = self.x.iter().map(|&x| potential.value(x)).collect();
        let linear = state.g == T::zero();
        let half_potential: Vec<Complex<T>> = if linear {
            v.iter()
                .map(|&v| Complex::from_polar(T::one(), -v * half))
                .collect()
        } else {
            Vec::new()
        };

        let mut psi = std::mem::take(&mut state.psi);
        for _ in 0..steps {
            self.potential_half_step(&mut psi, &v, &half_potential, state.g, half);
            self.fft(&mut psi);
            for (c, f) in psi.iter_mut().zip(kinetic.iter()) {
                *c = *c * f;
            }
            self.ifft(&mut psi);
            self.potential_half_step(&mut psi, &v, &half_potential, state.g, half);
        }
        state.psi = psi;
        state.time = state.time + duration;
        self.check_boundary(state)
    }

    fn potential_half_step(
        &self,
        psi: &mut [Complex<T>],
        v: &[T],
        precomputed: &[Complex<T>],
        g: T,
        half: T,
    ) {
        if precomputed.is_empty() {
            for (c, &vx) in psi.iter_mut().zip(v.iter()) {
                let phase = -(vx + g * c.norm_sqr()) * half;
                *c = *c * Complex::from_polar(T::one(), phase);
            }
        } else {
            for (c, f) in psi.iter_mut().zip(precomputed.iter()) {
                *c = *c * f;
            }
        }
    }

    /// Ground state in `potential` by imaginary-time relaxation from a
    /// Gaussian guess centred on the trap, normalized to `norm`.
    pub fn ground_state(
        &mut self,
        potential: &Potential<T>,
        g: T,
        norm: T,
        options: &ImagTimeOptions<T>,
    ) -> Result<SimState<T>, OracleError> {
        let (omega, center) = match *potential {
            Potential::Harmonic { omega, center } if omega > T::zero() => (omega, center),
            _ => return Err(OracleError::Unconfined),
        };
        // Gaussian guess, widened towards the Thomas-Fermi radius for large g
        let mut width = T::one() / omega.sqrt();
        if g > T::zero() {
            let mu = (T::lit(3.0) * g * norm * omega / (T::lit(4.0) * T::SQRT_2()))
                .powf(T::lit(2.0 / 3.0));
            let radius = (T::lit(2.0) * mu).sqrt() / omega;
            width = width.max(radius / T::lit(2.0));
        }
        let mut state = self.sample(
            |x| {
                let u = (x - center) / width;
                Complex::new((-(u * u) / T::lit(2.0)).exp(), T::zero())
            },
            g,
        );
        self.normalize(&mut state, norm);
        self.relax(&mut state, potential, norm, options)?;
        Ok(state)
    }

    /// Imaginary-time relaxation of an existing state.
    pub fn relax(
        &mut self,
        state: &mut SimState<T>,
        potential: &Potential<T>,
        norm: T,
        options: &ImagTimeOptions<T>,
    ) -> Result<(), OracleError> {
        if !potential.is_confining() {
            return Err(OracleError::Unconfined);
        }
        self.check_len(&state.psi)?;
        let v: Vec<T> = self.x.iter().map(|&x| potential.value(x)).collect();
        let every = options.check_every.max(1);
        for &tau in &options.dt_ladder {
            let half = tau / T::lit(2.0);
            let kinetic: Vec<T> = self
                .k
                .iter()
                .map(|&k| (-k * k * tau / T::lit(2.0)).exp())
                .collect();
            let mut energy = self.energy(state, potential);
            let mut last_psi = state.psi.clone();
            let mut converged = false;
            let mut steps = 0;
            let (mut de, mut ds) = (T::infinity(), T::infinity());
            while steps < options.max_steps_per_rung {
                for _ in 0..every {
                    let g = state.g;
                    for (c, &vx) in state.psi.iter_mut().zip(v.iter()) {
                        *c = *c * (-(vx + g * c.norm_sqr()) * half).exp();
                    }
                    let mut psi = std::mem::take(&mut state.psi);
                    self.fft(&mut psi);
                    for (c, &f) in psi.iter_mut().zip(kinetic.iter()) {
                        *c = *c * f;
                    }
                    self.ifft(&mut psi);
                    for (c, &vx) in psi.iter_mut().zip(v.iter()) {
                        *c = *c * (-(vx + g * c.norm_sqr()) * half).exp();
                    }
                    state.psi = psi;
                    self.normalize(state, norm);
                }
                steps += every;
                let e = self.energy(state, potential);
                let span = T::from_usize_lossy(every);
                de = (e - energy).abs() / span;
                ds = state
                    .psi
                    .iter()
                    .zip(last_psi.iter())
                    .map(|(a, b)| (a - b).norm())
                    .fold(T::zero(), T::max)
                    / (span * tau);
                energy = e;
                last_psi.copy_from_slice(&state.psi);
                if de < options.energy_tol && ds < options.state_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(OracleError::NotConverged {
                    steps,
                    energy_change: de.to_f64_lossy(),
                    state_change: ds.to_f64_lossy(),
                });
            }
        }
        if state.psi.iter().any(|c| !c.re.is_finite()) {
            return Err(OracleError::NonFinite);
        }
        Ok(())
    }
}

/// Instantaneous Bragg pulse: multiplies by
/// `A1 + A2 exp[i(q (x - origin) + varphi)]` and restores the norm.
pub fn bragg_kick<T: Scalar>(
    propagator: &Propagator<T>,
    state: &mut SimState<T>,
    bragg: &BraggConfig<T>,
    origin: T,
) {
    let before = propagator.norm(state);
    for (c, &x) in state.psi.iter_mut().zip(propagator.positions().iter()) {
        *c = *c * bragg.factor(x - origin);
    }
    propagator.normalize(state, before);
}

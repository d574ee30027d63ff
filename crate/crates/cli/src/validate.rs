//! Self-check suite behind `backflow validate`.

use std::fmt;

use backflow_core::design;
use backflow_core::imaging;
use backflow_core::oracle::{
    compare_with_analytic, continuity_residual, run_protocol, GridSpec, ImagTimeOptions, Potential,
    Propagator, SimState,
};
use backflow_core::physics::ConfigMap;
use num_complex::Complex;

use crate::commands::analyze;
use crate::error::CliError;
use crate::scenario::Scenario;

pub const BUNDLED_LI7: &str = include_str!("../scenarios/li7.cfg");

pub fn bundled_li7() -> Result<Scenario, CliError> {
    Scenario::from_map(&ConfigMap::parse(BUNDLED_LI7)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    pub quick: bool,
    /// Multiplies every oracle time step (negative control).
    pub dt_scale: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            quick: false,
            dt_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn check(name: &'static str, result: Result<(bool, String), CliError>) -> Check {
    match result {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn compute<T>(r: Result<T, impl fmt::Display>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Compute(e.to_string()))
}

pub fn run(opts: ValidateOptions) -> Vec<Check> {
    let n = if opts.quick { 1024 } else { 8192 };
    let imag = if opts.quick {
        ImagTimeOptions::quick()
    } else {
        ImagTimeOptions::default()
    };
    let dt = 1e-3 * opts.dt_scale;
    vec![
        check("optimal_amplitude", optimal_amplitude()),
        check("density_contrast", density_contrast()),
        check("regime_equivalence", regime_equivalence()),
        check("resolution_paths", resolution_paths()),
        check("ground_state", ground_state(dt)),
        check("free_expansion", free_expansion(dt)),
        check(
            "protocol_equivalence",
            protocol_equivalence(n, opts.dt_scale, imag),
        ),
        check("time_step_convergence", time_step_convergence(dt)),
    ]
}

fn optimal_amplitude() -> Result<(bool, String), CliError> {
    let closed: f64 = compute(design::optimal_a2(3.0))?;
    let bisected = compute(design::optimal_a2_bracketed(3.0, 1e-14))?;
    let ok = (closed - 0.49).abs() <= 0.005 && (closed - bisected).abs() < 1e-10;
    Ok((
        ok,
        format!(
            "A2 = {closed:.6} (bisection {bisected:.6}), transfer {:.2}%",
            100.0 * closed * closed
        ),
    ))
}

fn density_contrast() -> Result<(bool, String), CliError> {
    let sim = analyze(&bundled_li7()?)?;
    let (_, min) = sim
        .central_minimum
        .ok_or_else(|| CliError::Compute("no central minimum".into()))?;
    let crit = sim
        .critical_at_minimum
        .ok_or_else(|| CliError::Compute("centre is classical".into()))?;
    let ok =
        (min - 0.078).abs() <= 0.005 && (crit - 0.168).abs() <= 0.005 && !sim.windows.is_empty();
    Ok((
        ok,
        format!(
            "min {min:.4}, critical {crit:.4}, {} windows",
            sim.windows.len()
        ),
    ))
}

fn regime_equivalence() -> Result<(bool, String), CliError> {
    let base = bundled_li7()?;
    let mut worst = 0;
    for varphi in [0.0, 1.0, 2.5] {
        let mut s = base.clone();
        s.bragg = s.bragg.with_varphi(varphi);
        worst = worst.max(analyze(&s)?.profile.threshold_mismatches());
    }
    Ok((worst == 0, format!("{worst} mismatching points")))
}

fn resolution_paths() -> Result<(bool, String), CliError> {
    let s = bundled_li7()?;
    let closed = imaging::critical_resolution(&s.bragg, s.alpha).value();
    let bisected = imaging::critical_resolution_bisection(&s.bragg, s.alpha, 1e-12).value();
    match (closed, bisected) {
        (Some(c), Some(b)) => {
            let rel = ((c - b) / c).abs();
            Ok((
                rel < 1e-6,
                format!("{:.4} um, paths differ by {rel:.1e}", c * s.a_x() * 1e6),
            ))
        }
        _ => Ok((false, "no finite critical resolution".into())),
    }
}

fn ground_state(dt: f64) -> Result<(bool, String), CliError> {
    let grid = compute(GridSpec::covering(1024, -12.0, 12.0, dt))?;
    let mut p = Propagator::new(grid);
    let s = compute(p.ground_state(
        &Potential::harmonic(0.0),
        0.0,
        1.0,
        &ImagTimeOptions::default(),
    ))?;
    let norm = std::f64::consts::PI.powf(-0.25);
    // fix the global phase before comparing
    let centre = s.psi[grid.n_points / 2];
    let phase = centre / centre.norm();
    let err = s
        .psi
        .iter()
        .zip(p.positions())
        .map(|(c, &x)| (c / phase - Complex::new(norm * (-x * x / 2.0).exp(), 0.0)).norm())
        .fold(0.0, f64::max);
    Ok((err < 1e-8, format!("L_inf error {err:.2e}")))
}

fn free_expansion(dt: f64) -> Result<(bool, String), CliError> {
    let grid = compute(GridSpec::covering(2048, -60.0, 60.0, dt))?;
    let mut p = Propagator::new(grid);
    let mut s = p.sample(|x| Complex::new((-x * x / 2.0).exp(), 0.0), 0.0);
    p.normalize(&mut s, 1.0);
    let w0 = rms_width(&p, &s);
    compute(p.evolve(&mut s, 3.0, &Potential::Free))?;
    let ratio = rms_width(&p, &s) / w0 / 10f64.sqrt();
    Ok((
        (ratio - 1.0).abs() < 1e-3,
        format!("width / sqrt(1+t^2) = {ratio:.6} at t = 3"),
    ))
}

fn rms_width(p: &Propagator<f64>, s: &SimState<f64>) -> f64 {
    let rho = s.density();
    let x = p.positions();
    let n: f64 = rho.iter().sum();
    let m1: f64 = rho.iter().zip(x).map(|(r, x)| r * x).sum::<f64>() / n;
    (rho.iter()
        .zip(x)
        .map(|(r, x)| r * (x - m1) * (x - m1))
        .sum::<f64>()
        / n)
        .sqrt()
}

fn protocol_equivalence(
    n: usize,
    dt_scale: f64,
    imag: ImagTimeOptions<f64>,
) -> Result<(bool, String), CliError> {
    let s = bundled_li7()?;
    let spec = s.protocol(n, dt_scale, imag, true)?;
    let mut p = Propagator::new(spec.grid);
    let out = compute(run_protocol(&mut p, &spec))?;
    let state = out.final_state();
    let cmp = compare_with_analytic(&mut p, state, &s.packet, Some(&s.bragg), out.release_center);
    let cont = compute(continuity_residual(&mut p, state, &Potential::Free, 1e-4))?;
    let ok = cmp.density_linf < 0.01 && cmp.current_linf < 0.02 && cont.relative() < 1e-4;
    Ok((
        ok,
        format!(
            "{n} points: rho {:.2e}, J {:.2e}, continuity {:.2e}",
            cmp.density_linf,
            cmp.current_linf,
            cont.relative()
        ),
    ))
}

/// Halving the step must change a one-period dipole run by less than 1e-4 (L2).
fn time_step_convergence(dt: f64) -> Result<(bool, String), CliError> {
    let grid = compute(GridSpec::covering(512, -12.0, 12.0, dt))?;
    let mut p = Propagator::new(grid);
    let mut start = p.sample(
        |x| Complex::new((-(x + 1.0) * (x + 1.0) / 2.0).exp(), 0.0),
        0.0,
    );
    p.normalize(&mut start, 1.0);
    let trap = Potential::harmonic(1.5);
    let mut coarse = start.clone();
    compute(p.evolve_with_dt(&mut coarse, std::f64::consts::TAU, &trap, dt))?;
    let mut fine = start;
    compute(p.evolve_with_dt(&mut fine, std::f64::consts::TAU, &trap, dt / 2.0))?;
    let dx = grid.dx();
    let diff = coarse
        .psi
        .iter()
        .zip(&fine.psi)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>();
    let diff = (diff * dx).sqrt();
    Ok((
        diff < 1e-4,
        format!("dt = {dt:.1e}: |psi_dt - psi_dt/2| = {diff:.2e}"),
    ))
}

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use backflow_core::design::{self, DesignInput, DesignReport};
use backflow_core::imaging::{self, CriticalResolution, DetectabilityReport};
use backflow_core::interference::{self, BackflowWindow, FieldProfile};
use backflow_core::oracle::{
    compare_with_analytic, run_protocol, write_checkpoint, write_snapshot_csv, AnalyticComparison,
    ImagTimeOptions, Potential, Propagator, SimState, SnapshotUnits,
};
use backflow_core::physics::Quantity;

use crate::error::CliError;
use crate::output::{self, num, LinePlot, Marker, Series};
use crate::scenario::{AmplitudeSource, Scenario};

/// Minima annotated on the density plot.
const ANNOTATED_MINIMA: usize = 5;

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Analytic snapshot at the pulse time, in oscillator units.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub profile: FieldProfile<f64>,
    /// Negative current while the packet moves forward.
    pub windows: Vec<BackflowWindow<f64>>,
    /// Negative current carried by the packet's own backward velocity (`x < x_-`).
    pub classical_windows: Vec<BackflowWindow<f64>>,
    pub packet_center: f64,
    pub wavelength: f64,
    /// Density minimum closest to the packet centre: position and `rho / rho_max`.
    pub central_minimum: Option<(f64, f64)>,
    /// `rho_crit / rho_max` at the central minimum; `None` if classical there.
    pub critical_at_minimum: Option<f64>,
    pub center_window_variation: f64,
    pub detectability: DetectabilityReport<f64>,
    pub design: DesignReport,
}

pub fn analyze(scenario: &Scenario) -> Result<Simulation, CliError> {
    let wp = &scenario.packet;
    let bragg = &scenario.bragg;
    let profile = interference::profile(wp, bragg, scenario.grid).map_err(CliError::compute)?;
    let rho_max = profile.max_density();
    let packet_center = wp.center();
    let central_minimum = if bragg.a2() > 0.0 {
        profile
            .nearest_minimum(packet_center)
            .map(|(x, r)| (x, r / rho_max))
    } else {
        None
    };
    let critical_at_minimum = central_minimum.and_then(|(x, _)| {
        interference::critical_density(wp, bragg, x)
            .value()
            .map(|c| c / rho_max)
    });
    let detectability = imaging::detectability(bragg, scenario.alpha, scenario.sigma_r())
        .map_err(CliError::compute)?;
    let input = scenario.design_input()?;
    let sigma = (scenario.sigma_r() > 0.0).then(|| scenario.sigma_r());
    let design = design::design_report(&input, &wp.scaling, sigma, scenario.guard_margin)
        .map_err(CliError::compute)?;
    Ok(Simulation {
        windows: profile.backflow_windows(),
        classical_windows: profile.classical_flow_windows(),
        wavelength: bragg.wavelength(),
        center_window_variation: interference::center_window_variation(wp, scenario.center_window),
        profile,
        packet_center,
        central_minimum,
        critical_at_minimum,
        detectability,
        design,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub n_points: usize,
    pub dt_scale: f64,
    pub quick: bool,
}

impl OracleOptions {
    pub fn for_scenario(scenario: &Scenario, quick: bool) -> Self {
        Self {
            n_points: if quick { 1024 } else { scenario.oracle_points },
            dt_scale: 1.0,
            quick,
        }
    }

    fn imag_time(&self) -> ImagTimeOptions<f64> {
        if self.quick {
            ImagTimeOptions::quick()
        } else {
            ImagTimeOptions::default()
        }
    }
}

/// Runs the full protocol and compares the kicked state with the analytic fields.
pub fn oracle_check(
    scenario: &Scenario,
    opts: OracleOptions,
) -> Result<AnalyticComparison<f64>, CliError> {
    let spec = scenario.protocol(opts.n_points, opts.dt_scale, opts.imag_time(), true)?;
    let mut prop = Propagator::new(spec.grid);
    let out = run_protocol(&mut prop, &spec).map_err(CliError::compute)?;
    Ok(compare_with_analytic(
        &mut prop,
        out.final_state(),
        &scenario.packet,
        Some(&scenario.bragg),
        out.release_center,
    ))
}

pub fn simulate(
    scenario: &Scenario,
    out_dir: &Path,
    oracle: Option<OracleOptions>,
) -> Result<(Simulation, Vec<PathBuf>), CliError> {
    ensure_dir(out_dir)?;
    let sim = analyze(scenario)?;
    let a_x = scenario.a_x();
    let omega = scenario.params.omega_x;
    let mut files = vec![output::write_file(
        out_dir,
        "profile.csv",
        &output::profile_csv(&sim.profile, a_x, omega),
    )?];
    files.push(output::write_file(
        out_dir,
        "flux.svg",
        &flux_plot(&sim, a_x, omega).to_svg(),
    )?);
    files.push(output::write_file(
        out_dir,
        "density.svg",
        &density_plot(&sim, a_x).to_svg(),
    )?);

    let comparison = oracle.map(|o| oracle_check(scenario, o)).transpose()?;
    let report = simulation_report(scenario, &sim, comparison.as_ref());
    files.push(output::write_file(out_dir, "report.txt", &report)?);
    Ok((sim, files))
}

fn um(x: f64, a_x: f64) -> f64 {
    x * a_x * 1e6
}

fn flux_plot(sim: &Simulation, a_x: f64, omega: f64) -> LinePlot {
    let p = &sim.profile;
    LinePlot {
        title: "Probability current after the Bragg pulse".into(),
        x_label: "x (um, from release point)".into(),
        y_label: "J (1/s)".into(),
        series: vec![Series {
            label: "J".into(),
            color: "steelblue",
            dashed: false,
            points: p
                .x
                .iter()
                .zip(&p.current)
                .map(|(&x, &j)| (um(x, a_x), j * omega))
                .collect(),
        }],
        markers: Vec::new(),
        zero_line: true,
    }
}

fn density_plot(sim: &Simulation, a_x: f64) -> LinePlot {
    let p = &sim.profile;
    let rho_max = p.max_density();
    let mut minima = p.density_minima();
    minima.sort_by(|a, b| {
        (a.0 - sim.packet_center)
            .abs()
            .total_cmp(&(b.0 - sim.packet_center).abs())
    });
    minima.truncate(ANNOTATED_MINIMA);
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    LinePlot {
        title: "Density and critical density (normalized to peak)".into(),
        x_label: "x (um, from release point)".into(),
        y_label: "rho / rho_max".into(),
        series: vec![
            Series {
                label: "rho".into(),
                color: "black",
                dashed: false,
                points: p
                    .x
                    .iter()
                    .zip(&p.rho)
                    .map(|(&x, &r)| (um(x, a_x), r / rho_max))
                    .collect(),
            },
            Series {
                label: "rho_crit".into(),
                color: "darkorange",
                dashed: true,
                points: p
                    .x
                    .iter()
                    .zip(&p.rho_crit)
                    .map(|(&x, c)| (um(x, a_x), c.map_or(f64::NAN, |c| c / rho_max)))
                    .collect(),
            },
        ],
        markers: minima
            .into_iter()
            .map(|(x, r)| Marker {
                x: um(x, a_x),
                y: r / rho_max,
                label: format!("{:.1}%", 100.0 * r / rho_max),
            })
            .collect(),
        zero_line: false,
    }
}

fn simulation_report(
    scenario: &Scenario,
    sim: &Simulation,
    oracle: Option<&AnalyticComparison<f64>>,
) -> String {
    let a_x = scenario.a_x();
    let omega = scenario.params.omega_x;
    let s_um = |x: f64| um(x, a_x);
    let mut r = String::new();
    let _ = writeln!(r, "# backflow simulation report");
    let _ = writeln!(r, "a_x = {:.6} um", a_x * 1e6);
    let _ = writeln!(r, "v1 = {:.6} mm/s", scenario.scales.v1 * 1e3);
    let _ = writeln!(r, "k1 a_x = {:.6}", scenario.k1());
    let _ = writeln!(r, "regime = {:?}", scenario.profile.regime());
    let _ = writeln!(
        r,
        "A1 = {:.6}, A2 = {:.6} ({}), alpha = {:.6}, varphi = {:.6}",
        scenario.bragg.a1(),
        scenario.bragg.a2(),
        match scenario.amplitude_source {
            AmplitudeSource::Optimal => "optimal",
            AmplitudeSource::Configured => "configured",
        },
        scenario.alpha,
        scenario.bragg.varphi()
    );
    let _ = writeln!(
        r,
        "b(t) = {:.6}, b'(t) = {:.6}",
        scenario.packet.scaling.b, scenario.packet.scaling.b_dot
    );
    let _ = writeln!(r, "packet centre = {:.6} um", s_um(sim.packet_center));
    let _ = writeln!(r, "fringe spacing = {:.6} um", s_um(sim.wavelength));
    let _ = writeln!(
        r,
        "phase-gradient variation over centre +- {} widths = {:.3e} k1",
        scenario.center_window, sim.center_window_variation
    );
    for w in &scenario.warnings {
        let _ = writeln!(r, "warning: {w}");
    }

    let _ = writeln!(r, "\n## density");
    match sim.central_minimum {
        Some((x, m)) => {
            let _ = writeln!(r, "central minimum at {:.6} um", s_um(x));
            let _ = writeln!(r, "min rho / rho_max = {:.6}", m);
            match sim.critical_at_minimum {
                Some(c) => {
                    let _ = writeln!(r, "rho_crit / rho_max = {:.6}", c);
                }
                None => {
                    let _ = writeln!(r, "rho_crit / rho_max = n/a (classical region)");
                }
            }
        }
        None => {
            let _ = writeln!(r, "no interference minima");
        }
    }

    let _ = writeln!(r, "\n## backflow windows");
    if sim.windows.is_empty() {
        let _ = writeln!(r, "no backflow windows");
    } else {
        let _ = writeln!(r, "count = {}", sim.windows.len());
        let _ = writeln!(r, "start_um,end_um,deepest_um,min_J_per_s");
        for w in &sim.windows {
            let _ = writeln!(
                r,
                "{:.4},{:.4},{:.4},{:.6e}",
                s_um(w.start),
                s_um(w.end),
                s_um(w.deepest_x),
                w.min_current * omega
            );
        }
    }
    match sim.classical_windows.as_slice() {
        [] => {
            let _ = writeln!(r, "classical negative flow: none");
        }
        ws => {
            let (lo, hi) = (ws[0].start, ws[ws.len() - 1].end);
            let _ = writeln!(
                r,
                "classical negative flow (packet velocity < 0) between {:.4} and {:.4} um",
                s_um(lo),
                s_um(hi)
            );
        }
    }
    let _ = writeln!(
        r,
        "threshold mismatches in quantum window = {}",
        sim.profile.threshold_mismatches()
    );

    let _ = writeln!(r, "\n## imaging");
    let d = &sim.detectability;
    let _ = writeln!(
        r,
        "sigma_r = {:.4} um, zeta = {:.6}",
        s_um(d.sigma_r),
        d.zeta
    );
    let _ = writeln!(
        r,
        "observed min = {:.6}, critical = {:.6}, detectable = {}",
        d.observed_min_norm, d.critical_norm, d.detectable
    );
    match d.sigma_r_critical {
        CriticalResolution::Finite(v) => {
            let _ = writeln!(r, "critical resolution = {:.4} um", s_um(v));
        }
        other => {
            let _ = writeln!(r, "critical resolution: {}", other.label());
        }
    }

    let _ = writeln!(r, "\n## design and guards (advisory)");
    r.push_str(&sim.design.to_text());

    if let Some(c) = oracle {
        let _ = writeln!(r, "\n## split-step oracle");
        let _ = writeln!(
            r,
            "max |rho_num - rho_ana| / max rho = {:.3e}",
            c.density_linf
        );
        let _ = writeln!(r, "max |J_num - J_ana| / max |J| = {:.3e}", c.current_linf);
    }
    r
}

pub fn log_spaced(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..steps)
        .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp())
        .collect()
}

pub fn linear(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![lo];
    }
    (0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect()
}

/// One row per `alpha`; guards use the scenario's packet and resolution.
pub fn design_sweep(scenario: &Scenario, alphas: &[f64]) -> Result<Vec<DesignReport>, CliError> {
    alphas
        .iter()
        .map(|&alpha| {
            let input = DesignInput::new(alpha, scenario.k1(), scenario.profile)
                .map_err(CliError::input)?;
            let sigma = (scenario.sigma_r() > 0.0).then(|| scenario.sigma_r());
            design::design_report(
                &input,
                &scenario.packet.scaling,
                sigma,
                scenario.guard_margin,
            )
            .map_err(CliError::input)
        })
        .collect()
}

pub fn design_csv(rows: &[DesignReport]) -> String {
    let mut s = String::from("alpha,a2_opt,f_min,population_transfer");
    if let Some(first) = rows.first() {
        for g in &first.guards {
            let _ = write!(s, ",{0}_margin,{0}_passed", g.name);
        }
    }
    s.push('\n');
    for row in rows {
        let _ = write!(
            s,
            "{},{},{},{}",
            num(row.alpha),
            num(row.a2_opt),
            num(row.f_min),
            num(row.population_transfer)
        );
        for g in &row.guards {
            let _ = write!(s, ",{},{}", num(g.margin), g.passed);
        }
        s.push('\n');
    }
    s
}

pub fn design(
    scenario: &Scenario,
    alphas: &[f64],
    out_dir: &Path,
) -> Result<Vec<DesignReport>, CliError> {
    ensure_dir(out_dir)?;
    let rows = design_sweep(scenario, alphas)?;
    output::write_file(out_dir, "design_sweep.csv", &design_csv(&rows))?;
    let mut report = String::from("# design sweep\n");
    let here = design_sweep(scenario, &[scenario.alpha])?;
    let _ = writeln!(report, "scenario point:");
    report.push_str(&here[0].to_text());
    let _ = writeln!(report, "rows = {}", rows.len());
    output::write_file(out_dir, "design_report.txt", &report)?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct ImagingSweep {
    pub rows: Vec<DetectabilityReport<f64>>,
    /// Closed form and bisection, metres.
    pub sigma_r_critical: Option<f64>,
    pub sigma_r_critical_bisection: Option<f64>,
}

/// `sigmas` in metres.
pub fn imaging(
    scenario: &Scenario,
    sigmas: &[f64],
    out_dir: &Path,
) -> Result<ImagingSweep, CliError> {
    ensure_dir(out_dir)?;
    let a_x = scenario.a_x();
    let rows = sigmas
        .iter()
        .map(|&s| {
            imaging::detectability(&scenario.bragg, scenario.alpha, s / a_x)
                .map_err(CliError::input)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from(DetectabilityReport::<f64>::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_row(a_x));
        csv.push('\n');
    }
    output::write_file(out_dir, "detectability.csv", &csv)?;

    let closed = imaging::critical_resolution(&scenario.bragg, scenario.alpha);
    let bisected = imaging::critical_resolution_bisection(&scenario.bragg, scenario.alpha, 1e-12);
    let sweep = ImagingSweep {
        rows,
        sigma_r_critical: closed.value().map(|v| v * a_x),
        sigma_r_critical_bisection: bisected.value().map(|v| v * a_x),
    };
    let mut report = String::from("# imaging\n");
    match (sweep.sigma_r_critical, sweep.sigma_r_critical_bisection) {
        (Some(c), Some(b)) => {
            let _ = writeln!(
                report,
                "critical resolution (closed form) = {:.6} um",
                c * 1e6
            );
            let _ = writeln!(
                report,
                "critical resolution (bisection)   = {:.6} um",
                b * 1e6
            );
            let _ = writeln!(report, "relative difference = {:.3e}", ((c - b) / c).abs());
        }
        _ => {
            let _ = writeln!(report, "critical resolution: {}", closed.label());
        }
    }
    output::write_file(out_dir, "imaging_report.txt", &report)?;
    Ok(sweep)
}

/// Snapshots (SI units) at release, before and after the pulse, and at
/// `post_pulse_times` (seconds after the pulse), plus a checkpoint of the
/// last state.
pub fn oracle_run(
    scenario: &Scenario,
    opts: OracleOptions,
    post_pulse_times: &[f64],
    out_dir: &Path,
) -> Result<(AnalyticComparison<f64>, Vec<PathBuf>), CliError> {
    ensure_dir(out_dir)?;
    let spec = scenario.protocol(opts.n_points, opts.dt_scale, opts.imag_time(), true)?;
    let mut prop = Propagator::new(spec.grid);
    let out = run_protocol(&mut prop, &spec).map_err(CliError::compute)?;
    let comparison = compare_with_analytic(
        &mut prop,
        out.final_state(),
        &scenario.packet,
        Some(&scenario.bragg),
        out.release_center,
    );
    let scales = &scenario.scales;
    let units = SnapshotUnits {
        length: scales.unit_of(Quantity::Length),
        amplitude: scales.unit_of(Quantity::Density).sqrt(),
        density: scales.unit_of(Quantity::Density),
        current: scales.unit_of(Quantity::Current),
    };
    let mut files = Vec::new();
    let mut snapshot =
        |prop: &mut Propagator<f64>, state: &SimState<f64>, name: &str| -> Result<(), CliError> {
            let path = out_dir.join(name);
            let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_snapshot_csv(BufWriter::new(f), prop, state, units).map_err(CliError::compute)?;
            files.push(path);
            Ok(())
        };
    snapshot(&mut prop, &out.at_release, "snapshot_release.csv")?;
    snapshot(&mut prop, &out.before_kick, "snapshot_pre_pulse.csv")?;
    let mut state = out.final_state().clone();
    snapshot(&mut prop, &state, "snapshot_post_pulse.csv")?;
    let mut times: Vec<f64> = post_pulse_times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut elapsed = 0.0;
    for (i, &t) in times.iter().enumerate() {
        if !(t >= 0.0) {
            return Err(CliError::Input(format!("snapshot time {t} s is negative")));
        }
        let tau = scales.to_dimensionless::<f64>(t, Quantity::Time);
        prop.evolve(&mut state, tau - elapsed, &Potential::Free)
            .map_err(CliError::compute)?;
        elapsed = tau;
        snapshot(&mut prop, &state, &format!("snapshot_{i:02}.csv"))?;
    }
    let ckpt = out_dir.join("checkpoint.bin");
    let f = File::create(&ckpt).map_err(|e| CliError::io(&ckpt, e))?;
    write_checkpoint(BufWriter::new(f), prop.grid(), &state).map_err(CliError::compute)?;
    files.push(ckpt);

    let mut report = String::from("# oracle run\n");
    let _ = writeln!(
        report,
        "grid points = {}, dx = {:.4e} a_x, dt = {:.3e}",
        spec.grid.n_points,
        spec.grid.dx(),
        spec.grid.dt
    );
    let _ = writeln!(
        report,
        "release centre = {:.6} um",
        out.release_center * scenario.a_x() * 1e6
    );
    let _ = writeln!(
        report,
        "max |rho_num - rho_ana| / max rho = {:.3e}",
        comparison.density_linf
    );
    let _ = writeln!(
        report,
        "max |J_num - J_ana| / max |J| = {:.3e}",
        comparison.current_linf
    );
    for (i, t) in times.iter().enumerate() {
        let _ = writeln!(report, "snapshot_{i:02}.csv: {t} s after the pulse");
    }
    files.push(output::write_file(out_dir, "oracle_report.txt", &report)?);
    Ok((comparison, files))
}

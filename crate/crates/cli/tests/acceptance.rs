//! Acceptance criteria, one PASS/FAIL line each.
//!
//! `cargo test -p backflow-cli --test acceptance -- --nocapture` shows the
//! table. Criteria listed in `KNOWN_RED` are reported honestly and must stay
//! red until the underlying analysis changes; `strict_*` tests (ignored by
//! default) assert them as stated.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use backflow_cli::commands::{analyze, Simulation};
use backflow_cli::validate::bundled_li7;
use backflow_cli::Scenario;
use backflow_core::design::{self, DesignInput};
use backflow_core::imaging;
use backflow_core::interference::{self, BraggConfig, ProfileGrid, RegionKind};
use backflow_core::oracle::{
    compare_with_analytic, continuity_residual, negative_flux_fraction, run_protocol, GridSpec,
    ImagTimeOptions, Potential, Propagator, ProtocolSpec,
};
use backflow_core::physics::{derive_scales, ExperimentParams, Species};
use backflow_core::wavepacket::{scaling_evolve, InitialProfile, Regime, WavepacketState};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Criterion 7 asks for b/(sqrt2 t) within 2% of 1 at t = 50; the 1D
/// Thomas-Fermi solution gives 0.9675 there (the ratio approaches 1 only
/// logarithmically and enters the 2% band near t = 92.5).
const KNOWN_RED: &[u32] = &[7];

/// Negative-flux fraction separating "exhibits negative flux" from a
/// Gaussian tail.
const NEGATIVE_FLUX_THRESHOLD: f64 = 1e-3;

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn li7() -> (Scenario, Simulation) {
    let s = bundled_li7().expect("bundled scenario");
    let sim = analyze(&s).expect("analytic profile");
    (s, sim)
}

fn c1_optimal_amplitude() -> Outcome {
    let a2: f64 = design::optimal_a2(3.0).unwrap();
    let transfer = a2 * a2;
    Outcome {
        id: 1,
        title: "optimal Bragg amplitude",
        passed: (a2 - 0.49).abs() <= 0.005 && (transfer - 0.24).abs() <= 0.01,
        detail: format!("A2 = {a2:.5}, transfer = {:.3}%", 100.0 * transfer),
    }
}

fn c2_density_contrast() -> Outcome {
    let (_, sim) = li7();
    let min = sim.central_minimum.map(|m| m.1).unwrap_or(f64::NAN);
    let crit = sim.critical_at_minimum.unwrap_or(f64::NAN);
    Outcome {
        id: 2,
        title: "density contrast",
        passed: (min - 0.078).abs() <= 0.005 && (crit - 0.168).abs() <= 0.005,
        detail: format!("min rho/rho_max = {min:.5}, rho_crit/rho_max = {crit:.5}"),
    }
}

fn c3_derived_scales() -> Outcome {
    let params = ExperimentParams {
        atom_mass: Species::Li7.mass_kg(),
        ..ExperimentParams::li7_reference()
    };
    let sc = derive_scales(&params).unwrap();
    let a_um = sc.a_x * 1e6;
    let v_mm = sc.v1 * 1e3;
    Outcome {
        id: 3,
        title: "derived scales",
        passed: (a_um - 38.0).abs() <= 0.5 && (v_mm - 0.5).abs() <= 0.01,
        detail: format!("a_x = {a_um:.4} um, v1 = {v_mm:.5} mm/s"),
    }
}

fn c4_critical_resolution() -> Outcome {
    let (s, _) = li7();
    let closed = imaging::critical_resolution(&s.bragg, s.alpha)
        .value()
        .unwrap_or(f64::NAN);
    let bis = imaging::critical_resolution_bisection(&s.bragg, s.alpha, 1e-13)
        .value()
        .unwrap_or(f64::NAN);
    let um = closed * s.a_x() * 1e6;
    let rel = ((closed - bis) / closed).abs();
    Outcome {
        id: 4,
        title: "critical imaging resolution",
        passed: (2.9..=4.3).contains(&um) && rel < 1e-6,
        detail: format!("sigma_r* = {um:.4} um, closed vs bisection {rel:.1e}"),
    }
}

fn c5_backflow_geometry() -> Outcome {
    let (s, sim) = li7();
    let p = &sim.profile;
    let lambda = sim.wavelength;
    let c = sim.packet_center;
    let windows = &sim.windows;
    if windows.len() < 3 {
        return Outcome {
            id: 5,
            title: "backflow geometry",
            passed: false,
            detail: format!("{} windows", windows.len()),
        };
    }
    // centring: every window inside +-2 packet widths sits on a minimum
    let width = s.packet.width();
    let worst_offset = windows
        .iter()
        .filter(|w| (w.center() - c).abs() < 2.0 * width)
        .map(|w| {
            let (xm, _) = p.nearest_minimum(w.center()).unwrap();
            (xm - w.center()).abs() / lambda
        })
        .fold(0.0, f64::max);
    let n = windows.len() - 1;
    let mean_spacing = (windows[n].center() - windows[0].center()) / n as f64;
    let spacing_um = mean_spacing * s.a_x() * 1e6;
    let deepest = windows
        .iter()
        .min_by(|a, b| a.min_current.total_cmp(&b.min_current))
        .unwrap();
    let deep_offset = (deepest.deepest_x - c).abs() / lambda;
    let passed =
        worst_offset < 0.05 && (spacing_um / 37.8 - 1.0).abs() <= 0.01 && deep_offset < 1.0;
    Outcome {
        id: 5,
        title: "backflow geometry",
        passed,
        detail: format!(
            "{} windows, max centre-to-minimum {:.3} lambda, spacing {spacing_um:.3} um, deepest {:.2} lambda from centre",
            windows.len(),
            worst_offset,
            deep_offset
        ),
    }
}

fn c6_oracle_equivalence() -> Outcome {
    let (s, _) = li7();
    let spec = s
        .protocol(8192, 1.0, ImagTimeOptions::default(), true)
        .unwrap();
    let mut p = Propagator::new(spec.grid);
    let out = match run_protocol(&mut p, &spec) {
        Ok(o) => o,
        Err(e) => {
            return Outcome {
                id: 6,
                title: "analytic-oracle equivalence",
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let state = out.final_state();
    let cmp = compare_with_analytic(&mut p, state, &s.packet, Some(&s.bragg), out.release_center);
    let cont = continuity_residual(&mut p, state, &Potential::Free, 1e-4).unwrap();
    Outcome {
        id: 6,
        title: "analytic-oracle equivalence",
        passed: cmp.density_linf < 0.01 && cmp.current_linf < 0.02 && cont.relative() < 1e-4,
        detail: format!(
            "8192 points: rho L_inf {:.2e}, J {:.2e} of max|J|, continuity {:.2e}",
            cmp.density_linf,
            cmp.current_linf,
            cont.relative()
        ),
    }
}

fn c7_scaling_laws() -> Outcome {
    // free expansion of the oracle ground state
    let grid = GridSpec::covering(2048, -60.0, 60.0, 1e-3).unwrap();
    let mut p = Propagator::new(grid);
    let mut st = p
        .ground_state(
            &Potential::harmonic(0.0),
            0.0,
            1.0,
            &ImagTimeOptions::default(),
        )
        .unwrap();
    let rms = |p: &Propagator<f64>, st: &backflow_core::oracle::SimState<f64>| {
        let rho = st.density();
        let n: f64 = rho.iter().sum();
        let m: f64 = rho
            .iter()
            .zip(p.positions())
            .map(|(r, x)| r * x)
            .sum::<f64>()
            / n;
        (rho.iter()
            .zip(p.positions())
            .map(|(r, x)| r * (x - m) * (x - m))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let w0 = rms(&p, &st);
    let mut worst: f64 = 0.0;
    let mut elapsed = 0.0;
    for t in [1.0, 3.0, 6.0] {
        p.evolve(&mut st, t - elapsed, &Potential::Free).unwrap();
        elapsed = t;
        worst = worst.max((rms(&p, &st) / w0 / (1.0f64 + t * t).sqrt() - 1.0).abs());
    }
    let tf = scaling_evolve::<f64>(Regime::ThomasFermi, 50.0).unwrap();
    let ratio = tf.b / (SQRT_2 * 50.0);
    let rate = tf.b_dot / SQRT_2;
    Outcome {
        id: 7,
        title: "scaling laws",
        passed: worst < 1e-3 && (ratio - 1.0).abs() <= 0.02,
        detail: format!(
            "free width error {worst:.1e} (<1e-3); TF b/(sqrt2 t) at t=50 = {ratio:.5} (needs 0.98..1.02); b'/sqrt2 = {rate:.5}"
        ),
    }
}

fn c8_regime_classification() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed_ba5e);
    let mut mismatches = 0;
    let mut points = 0;
    let mut quantum = 0;
    let mut below = 0;
    for _ in 0..10 {
        let k1: f64 = rng.random_range(1.0..4.0);
        let t: f64 = rng.random_range(0.5..10.0);
        let alpha: f64 = rng.random_range(0.3..8.0);
        let a2: f64 = rng.random_range(0.05..0.95);
        let varphi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let profile = if rng.random_bool(0.5) {
            InitialProfile::gaussian()
        } else {
            InitialProfile::thomas_fermi(1.0, rng.random_range(5.0..200.0)).unwrap()
        };
        let wp = WavepacketState::new(profile, k1, t).unwrap();
        let b = BraggConfig::from_alpha(alpha, k1, a2, varphi).unwrap();
        let prof = interference::profile(&wp, &b, ProfileGrid::default()).unwrap();
        mismatches += prof.threshold_mismatches();
        points += prof.len();
        for i in 0..prof.len() {
            if prof.regime[i] == RegionKind::QuantumWindow {
                quantum += 1;
                below += usize::from(prof.rho_crit[i].is_some_and(|c| prof.rho[i] < c));
            }
        }
    }
    Outcome {
        id: 8,
        title: "regime classification",
        passed: mismatches == 0 && below > 0,
        detail: format!(
            "{mismatches} exceptions over {quantum} quantum-window points, {below} below critical ({points} total, 10 scenarios)"
        ),
    }
}

fn c9_classical_backflow() -> Outcome {
    // Thomas-Fermi packet wider than d / sqrt2 (oscillator units)
    let (g, shift, t) = (100.0, 2.0, 2.0);
    let tf_profile = InitialProfile::thomas_fermi(1.0, g).unwrap();
    let r_tf = tf_profile.width();
    let grid = ProtocolSpec::auto_grid(4096, shift, FRAC_PI_2, t, r_tf, 1e-3).unwrap();
    let spec = ProtocolSpec {
        shift,
        hold_time: FRAC_PI_2,
        expansion_time: t,
        g,
        bragg: None,
        grid,
        imag_time: ImagTimeOptions::default(),
    };
    let mut p = Propagator::new(grid);
    let out = run_protocol(&mut p, &spec).unwrap();
    let tf_frac = negative_flux_fraction(&p.measure_current(&out.before_kick));
    let tf_input = DesignInput::new(3.0, shift, tf_profile).unwrap();
    let tf_guard = design::classical_guard(
        &tf_input,
        &scaling_evolve(Regime::ThomasFermi, t).unwrap(),
        2.0,
    );

    // guarded non-interacting scenario
    let (s, _) = li7();
    let spec = s
        .protocol(4096, 1.0, ImagTimeOptions::default(), false)
        .unwrap();
    let mut p = Propagator::new(spec.grid);
    let out = run_protocol(&mut p, &spec).unwrap();
    let ni_frac = negative_flux_fraction(&p.measure_current(&out.before_kick));
    let ni_guard = design::classical_guard(
        &s.design_input().unwrap(),
        &s.packet.scaling,
        s.guard_margin,
    );

    let tf_flagged = !tf_guard[0].passed;
    let ni_clean = ni_guard.iter().all(|g| g.passed);
    Outcome {
        id: 9,
        title: "classical backflow demonstration",
        passed: r_tf > shift / SQRT_2
            && tf_frac > NEGATIVE_FLUX_THRESHOLD
            && ni_frac < NEGATIVE_FLUX_THRESHOLD
            && tf_flagged
            && ni_clean,
        detail: format!(
            "TF (R={r_tf:.2} > d/sqrt2={:.2}): negative flux {tf_frac:.2e}, guard flagged {tf_flagged}; \
             ideal 7Li: {ni_frac:.2e}, guards pass {ni_clean} (threshold {NEGATIVE_FLUX_THRESHOLD:.0e})",
            shift / SQRT_2
        ),
    }
}

#[test]
fn acceptance() {
    let outcomes = vec![
        c1_optimal_amplitude(),
        c2_density_contrast(),
        c3_derived_scales(),
        c4_critical_resolution(),
        c5_backflow_geometry(),
        c6_oracle_equivalence(),
        c7_scaling_laws(),
        c8_regime_classification(),
        c9_classical_backflow(),
    ];
    for o in &outcomes {
        let tag = match (o.passed, KNOWN_RED.contains(&o.id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known, see README)",
            (false, false) => "FAIL",
        };
        println!("[{}] {:<34} {tag}: {}", o.id, o.title, o.detail);
    }
    let unexpected: Vec<u32> = outcomes
        .iter()
        .filter(|o| o.passed == KNOWN_RED.contains(&o.id))
        .map(|o| o.id)
        .collect();
    assert!(
        unexpected.is_empty(),
        "criteria {unexpected:?} differ from the recorded status (known red: {KNOWN_RED:?})"
    );
}

#[test]
#[ignore = "criterion 7 as stated is unattainable at t = 50; kept for visibility"]
fn strict_criterion_7() {
    assert!(c7_scaling_laws().passed, "{}", c7_scaling_laws().detail);
}

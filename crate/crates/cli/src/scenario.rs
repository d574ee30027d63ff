//! Resolution of a flat config file into a complete, validated run setup.

use std::path::Path;

use backflow_core::design::{self, DesignInput, DEFAULT_GUARD_MARGIN};
use backflow_core::interference::{BraggConfig, ProfileGrid};
use backflow_core::oracle::{GridSpec, ImagTimeOptions, ProtocolSpec};
use backflow_core::physics::{
    derive_scales, ConfigMap, ConfigWarning, DerivedScales, ExperimentParams, PARAM_KEYS,
};
use backflow_core::wavepacket::{InitialProfile, Regime, WavepacketState};

use crate::error::CliError;

/// Keys accepted on top of the physical parameters.
pub const SCENARIO_KEYS: &[&str] = &[
    "alpha",
    "a2",
    "varphi",
    "regime",
    "grid_points",
    "grid_half_widths",
    "center_window",
    "guard_margin",
    "oracle_points",
    "oracle_dt",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeSource {
    Optimal,
    Configured,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: ExperimentParams,
    pub scales: DerivedScales,
    /// `q / k1`.
    pub alpha: f64,
    /// Dimensionless kick (`q` in units of `1/a_x`).
    pub bragg: BraggConfig<f64>,
    pub amplitude_source: AmplitudeSource,
    pub profile: InitialProfile<f64>,
    /// Analytic packet at the pulse time.
    pub packet: WavepacketState<f64>,
    pub grid: ProfileGrid<f64>,
    /// Half width of the central plane-wave window, in packet widths.
    pub center_window: f64,
    pub guard_margin: f64,
    pub oracle_points: usize,
    pub oracle_dt: f64,
    pub warnings: Vec<ConfigWarning>,
}

impl Scenario {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut map = ConfigMap::parse(&text)?;
        for o in overrides {
            map.apply_override(o)?;
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self, CliError> {
        if let Some(bad) = map
            .keys()
            .find(|k| !PARAM_KEYS.contains(k) && !SCENARIO_KEYS.contains(k))
        {
            return Err(CliError::Input(format!("unknown config key `{bad}`")));
        }
        let params = ExperimentParams::from_config(map)?;
        let warnings = params.validate()?;
        let scales = derive_scales(&params)?;
        let k1 = scales.k1_internal();

        let alpha = map.require_f64("alpha")?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(CliError::Input(format!(
                "alpha must be positive (got {alpha})"
            )));
        }
        let (a2, amplitude_source) = match map.get_f64("a2")? {
            Some(a2) => (a2, AmplitudeSource::Configured),
            None => (
                design::optimal_a2(alpha).map_err(CliError::input)?,
                AmplitudeSource::Optimal,
            ),
        };
        let varphi = map.get_f64("varphi")?.unwrap_or(0.0);
        let bragg = BraggConfig::from_alpha(alpha, k1, a2, varphi).map_err(CliError::input)?;

        let regime = match map.get_str("regime")?.unwrap_or("auto") {
            "auto" if scales.g_internal > 0.0 => Regime::ThomasFermi,
            "auto" | "non_interacting" => Regime::NonInteracting,
            "thomas_fermi" => Regime::ThomasFermi,
            other => {
                return Err(CliError::Input(format!(
                    "regime `{other}` (expected auto, non_interacting or thomas_fermi)"
                )))
            }
        };
        let profile = match regime {
            Regime::NonInteracting => InitialProfile::gaussian(),
            Regime::ThomasFermi => {
                InitialProfile::thomas_fermi(1.0, scales.g_internal).map_err(CliError::input)?
            }
        };
        let t = params.expansion_time_t * params.omega_x;
        let packet = WavepacketState::new(profile, k1, t).map_err(CliError::compute)?;

        let grid = ProfileGrid::Auto {
            n_points: positive_count(map, "grid_points", 4096)?,
            half_widths: positive(map, "grid_half_widths", 5.0)?,
        };
        let oracle_dt = positive(map, "oracle_dt", 1e-3)?;
        let oracle_points = positive_count(map, "oracle_points", 8192)?;

        Ok(Self {
            params,
            scales,
            alpha,
            bragg,
            amplitude_source,
            profile,
            packet,
            grid,
            center_window: positive(map, "center_window", 0.1)?,
            guard_margin: positive(map, "guard_margin", DEFAULT_GUARD_MARGIN)?,
            oracle_points,
            oracle_dt,
            warnings,
        })
    }

    pub fn k1(&self) -> f64 {
        self.scales.k1_internal()
    }

    pub fn a_x(&self) -> f64 {
        self.scales.a_x
    }

    /// Imaging resolution in oscillator units.
    pub fn sigma_r(&self) -> f64 {
        self.params.sigma_r / self.scales.a_x
    }

    pub fn design_input(&self) -> Result<DesignInput<f64>, CliError> {
        DesignInput::new(self.alpha, self.k1(), self.profile).map_err(CliError::input)
    }

    pub fn with_amplitude(&self, a2: f64) -> Result<Self, CliError> {
        let mut s = self.clone();
        s.bragg = BraggConfig::from_alpha(self.alpha, self.k1(), a2, self.bragg.varphi())
            .map_err(CliError::input)?;
        s.amplitude_source = AmplitudeSource::Configured;
        Ok(s)
    }

    /// Full oracle protocol in oscillator units. `dt_scale` multiplies the
    /// configured step.
    pub fn protocol(
        &self,
        n_points: usize,
        dt_scale: f64,
        imag_time: ImagTimeOptions<f64>,
        with_kick: bool,
    ) -> Result<ProtocolSpec<f64>, CliError> {
        let hold = self.params.hold_time_t1 * self.params.omega_x;
        let t = self.params.expansion_time_t * self.params.omega_x;
        let grid: GridSpec<f64> = ProtocolSpec::auto_grid(
            n_points,
            self.k1(),
            hold,
            t,
            self.profile.width(),
            self.oracle_dt * dt_scale,
        )
        .map_err(CliError::compute)?;
        Ok(ProtocolSpec {
            shift: self.k1(),
            hold_time: hold,
            expansion_time: t,
            g: match self.profile {
                InitialProfile::Gaussian => 0.0,
                InitialProfile::ThomasFermi { .. } => self.scales.g_internal,
            },
            bragg: with_kick.then_some(self.bragg),
            grid,
            imag_time,
        })
    }
}

fn positive(map: &ConfigMap, key: &'static str, default: f64) -> Result<f64, CliError> {
    let v = map.get_f64(key)?.unwrap_or(default);
    if !(v > 0.0) || !v.is_finite() {
        return Err(CliError::Input(format!(
            "`{key}` must be positive (got {v})"
        )));
    }
    Ok(v)
}

fn positive_count(map: &ConfigMap, key: &'static str, default: usize) -> Result<usize, CliError> {
    match map.get_f64(key)? {
        None => Ok(default),
        Some(v) if v >= 1.0 && v.fract() == 0.0 && v <= 1e8 => Ok(v as usize),
        Some(v) => Err(CliError::Input(format!(
            "`{key}` must be a positive integer (got {v})"
        ))),
    }
}

//! Physical constants, experiment parameters and the SI <-> oscillator unit
//! conversion.
//!
//! Everything downstream of this module works in oscillator units
//! (`hbar = m = omega_x = 1`): lengths in `a_x`, times in `1/omega_x`.
//! The SI values themselves are always `f64`; interaction constants such as
//! `g3d ~ 1e-50 J m^3` do not fit in `f32`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054571817e-34;
/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.66053907e-27;

/// Built-in atomic species.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Li7,
    Rb87,
}

impl Species {
    pub fn mass_amu(self) -> f64 {
        match self {
            Species::Li7 => 7.016_003_437,
            Species::Rb87 => 86.909_180_527,
        }
    }

    pub fn mass_kg(self) -> f64 {
        self.mass_amu() * AMU
    }
}

impl FromStr for Species {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "li7" | "7li" => Ok(Species::Li7),
            "rb87" | "87rb" => Ok(Species::Rb87),
            _ => Err(ConfigError::UnknownSpecies(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("parameter `{field}` must be strictly positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("parameter `{field}` must be non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("parameter `{field}` is not finite")]
    NotFinite { field: &'static str },
    #[error("missing required parameter `{0}`")]
    Missing(&'static str),
    #[error("unknown species `{0}` (known: li7, rb87)")]
    UnknownSpecies(String),
    #[error("unknown quantity kind `{0}`")]
    UnknownKind(String),
    #[error("key `{key}`: expected {expected}")]
    WrongType { key: String, expected: &'static str },
    #[error("malformed override `{0}` (expected key=value)")]
    BadOverride(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config key `{0}` holds a nested table; only flat key = value entries are allowed")]
    Nested(String),
}

/// Non-fatal findings from parameter validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigWarning {
    /// `omega_perp / omega_x` below the advisory ratio.
    WeakRadialConfinement { ratio: f64 },
    /// Release does not happen at the quarter period, so the condensate
    /// leaves the trap below its maximal velocity `omega_x d`.
    OffQuarterPeriodRelease { hold_time: f64, quarter_period: f64 },
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigWarning::WeakRadialConfinement { ratio } => write!(
                f,
                "omega_perp/omega_x = {ratio:.3} is not much larger than 1; 1D reduction is questionable"
            ),
            ConfigWarning::OffQuarterPeriodRelease {
                hold_time,
                quarter_period,
            } => write!(
                f,
                "hold_time_t1 = {hold_time:.6e} s differs from the quarter period {quarter_period:.6e} s; \
                 analytic model assumes release at maximal velocity"
            ),
        }
    }
}

/// Ratio `omega_perp / omega_x` below which a weak-confinement warning is raised.
pub const RADIAL_RATIO_ADVISORY: f64 = 10.0;

/// Physical setup of one experiment, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    /// kg
    pub atom_mass: f64,
    /// rad/s
    pub omega_x: f64,
    /// rad/s
    pub omega_perp: f64,
    /// Trap displacement, m.
    pub shift_d: f64,
    /// Time spent oscillating in the displaced trap before release, s.
    pub hold_time_t1: f64,
    /// Free expansion time before the Bragg pulse, s.
    pub expansion_time_t: f64,
    /// Imaging resolution, m. Zero means perfect imaging.
    pub sigma_r: f64,
    /// Atom number (Thomas-Fermi case).
    pub n_atoms: f64,
    /// 3D contact coupling `4 pi hbar^2 a_s / m`, J m^3.
    pub g3d: f64,
}

impl ExperimentParams {
    /// The non-interacting lithium-7 scenario: 1 Hz axial trap, 80 um shift,
    /// release at the quarter period, 1 s expansion.
    pub fn li7_reference() -> Self {
        let omega_x = 2.0 * PI;
        Self {
            atom_mass: Species::Li7.mass_kg(),
            omega_x,
            omega_perp: 2.0 * PI * 1000.0,
            shift_d: 80e-6,
            hold_time_t1: PI / (2.0 * omega_x),
            expansion_time_t: 1.0,
            sigma_r: 3e-6,
            n_atoms: 1.0,
            g3d: 0.0,
        }
    }

    /// Checks hard invariants and returns advisory warnings.
    pub fn validate(&self) -> Result<Vec<ConfigWarning>, ConfigError> {
        let positive = [
            ("atom_mass", self.atom_mass),
            ("omega_x", self.omega_x),
            ("omega_perp", self.omega_perp),
            ("hold_time_t1", self.hold_time_t1),
            ("expansion_time_t", self.expansion_time_t),
            ("n_atoms", self.n_atoms),
        ];
        let non_negative = [
            ("shift_d", self.shift_d),
            ("sigma_r", self.sigma_r),
            ("g3d", self.g3d),
        ];
        for (field, value) in positive.iter().chain(non_negative.iter()) {
            if !value.is_finite() {
                return Err(ConfigError::NotFinite { field });
            }
        }
        for (field, value) in positive {
            if value <= 0.0 {
                return Err(ConfigError::NonPositive { field, value });
            }
        }
        for (field, value) in non_negative {
            if value < 0.0 {
                return Err(ConfigError::Negative { field, value });
            }
        }

        let mut warnings = Vec::new();
        let ratio = self.omega_perp / self.omega_x;
        if ratio < RADIAL_RATIO_ADVISORY {
            warnings.push(ConfigWarning::WeakRadialConfinement { ratio });
        }
        let quarter = PI / (2.0 * self.omega_x);
        if ((self.hold_time_t1 - quarter) / quarter).abs() > 1e-6 {
            warnings.push(ConfigWarning::OffQuarterPeriodRelease {
                hold_time: self.hold_time_t1,
                quarter_period: quarter,
            });
        }
        Ok(warnings)
    }

    /// Quasi-1D coupling `g3d / (2 pi a_perp^2)`, J m.
    pub fn g1d(&self) -> f64 {
        let a_perp2 = HBAR / (self.atom_mass * self.omega_perp);
        self.g3d / (2.0 * PI * a_perp2)
    }

    /// Reads the parameter keys out of a flat config map. Keys not related
    /// to the physical setup are ignored here.
    pub fn from_config(map: &ConfigMap) -> Result<Self, ConfigError> {
        let atom_mass = match (map.get_str("species")?, map.get_f64("atom_mass_amu")?) {
            (_, Some(amu)) => amu * AMU,
            (Some(name), None) => name.parse::<Species>()?.mass_kg(),
            (None, None) => return Err(ConfigError::Missing("species or atom_mass_amu")),
        };
        let omega_x = map.require_f64("omega_x")?;
        let params = Self {
            atom_mass,
            omega_x,
            omega_perp: map.require_f64("omega_perp")?,
            shift_d: map.require_f64("shift_d")?,
            hold_time_t1: map.get_f64("hold_time_t1")?.unwrap_or(PI / (2.0 * omega_x)),
            expansion_time_t: map.require_f64("expansion_time_t")?,
            sigma_r: map.get_f64("sigma_r")?.unwrap_or(0.0),
            n_atoms: map.get_f64("n_atoms")?.unwrap_or(1.0),
            g3d: map.get_f64("g3d")?.unwrap_or(0.0),
        };
        params.validate()?;
        Ok(params)
    }
}

/// Keys understood by [`ExperimentParams::from_config`].
pub const PARAM_KEYS: &[&str] = &[
    "species",
    "atom_mass_amu",
    "omega_x",
    "omega_perp",
    "shift_d",
    "hold_time_t1",
    "expansion_time_t",
    "sigma_r",
    "n_atoms",
    "g3d",
];

/// Length, time and velocity scales of the axial trap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedScales {
    /// Axial oscillator length `sqrt(hbar / (m omega_x))`, m.
    pub a_x: f64,
    /// Radial oscillator length, m.
    pub a_perp: f64,
    /// Maximal dipole velocity `omega_x d`, m/s.
    pub v1: f64,
    /// Wavenumber `m v1 / hbar`, 1/m.
    pub k1: f64,
    /// `1/omega_x`, s.
    pub t_unit: f64,
    /// Equal to `a_x`, m.
    pub x_unit: f64,
    /// Quasi-1D coupling, J m.
    pub g1d: f64,
    /// Total interaction strength `N g1d / (hbar omega_x a_x)` felt by a
    /// unit-normalized wavefunction.
    pub g_internal: f64,
    pub atom_mass: f64,
    pub omega_x: f64,
}

pub fn derive_scales(params: &ExperimentParams) -> Result<DerivedScales, ConfigError> {
    params.validate()?;
    let m = params.atom_mass;
    let a_x = (HBAR / (m * params.omega_x)).sqrt();
    let a_perp = (HBAR / (m * params.omega_perp)).sqrt();
    let v1 = params.omega_x * params.shift_d;
    let k1 = m * v1 / HBAR;
    let g1d = params.g1d();
    Ok(DerivedScales {
        a_x,
        a_perp,
        v1,
        k1,
        t_unit: 1.0 / params.omega_x,
        x_unit: a_x,
        g1d,
        g_internal: params.n_atoms * g1d / (HBAR * params.omega_x * a_x),
        atom_mass: m,
        omega_x: params.omega_x,
    })
}

/// Physical dimension of a value crossing the SI boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// m
    Length,
    /// s
    Time,
    /// kg m/s
    Momentum,
    /// 1/m
    Wavenumber,
    /// m/s
    Velocity,
    /// Linear density, 1/m.
    Density,
    /// Particle current, 1/s.
    Current,
    /// J
    Energy,
}

impl FromStr for Quantity {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "length" => Quantity::Length,
            "time" => Quantity::Time,
            "momentum" => Quantity::Momentum,
            "wavenumber" => Quantity::Wavenumber,
            "velocity" => Quantity::Velocity,
            "density" => Quantity::Density,
            "current" => Quantity::Current,
            "energy" => Quantity::Energy,
            _ => return Err(ConfigError::UnknownKind(s.to_string())),
        })
    }
}

impl DerivedScales {
    /// SI value represented by one internal unit of `kind`.
    pub fn unit_of(&self, kind: Quantity) -> f64 {
        match kind {
            Quantity::Length => self.a_x,
            Quantity::Time => self.t_unit,
            Quantity::Momentum => HBAR / self.a_x,
            Quantity::Wavenumber => 1.0 / self.a_x,
            Quantity::Velocity => self.a_x * self.omega_x,
            Quantity::Density => 1.0 / self.a_x,
            Quantity::Current => self.omega_x,
            Quantity::Energy => HBAR * self.omega_x,
        }
    }

    pub fn to_dimensionless<T: Scalar>(&self, value: f64, kind: Quantity) -> T {
        T::lit(value / self.unit_of(kind))
    }

    pub fn from_dimensionless<T: Scalar>(&self, value: T, kind: Quantity) -> f64 {
        value.to_f64_lossy() * self.unit_of(kind)
    }

    /// `k1 a_x`, equal to `d / a_x`.
    pub fn k1_internal(&self) -> f64 {
        self.k1 * self.a_x
    }
}

/// Scalar value in a flat config file.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigValue {
    Number(f64),
    Text(String),
    Flag(bool),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Number(v) => write!(f, "{v}"),
            ConfigValue::Text(s) => write!(f, "{s}"),
            ConfigValue::Flag(b) => write!(f, "{b}"),
        }
    }
}

/// Flat `key = value` configuration (TOML syntax without tables).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, ConfigValue>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for (key, value) in table {
            let value = convert_toml(&key, value)?;
            entries.insert(key, value);
        }
        Ok(Self { entries })
    }

    /// Applies a `key=value` override; the value is read as TOML and falls
    /// back to a bare string (`--set species=li7`).
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(spec.to_string()))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::BadOverride(spec.to_string()));
        }
        let raw = raw.trim();
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => convert_toml(key, t.remove("v").expect("key present"))?,
            Err(_) => ConfigValue::Text(raw.to_string()),
        };
        self.entries.insert(key.to_string(), value);
        Ok(())
    }

    pub fn insert(&mut self, key: &str, value: ConfigValue) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&ConfigValue> {
        self.entries.get(key)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(ConfigValue::Number(v)) => Ok(Some(*v)),
            Some(_) => Err(ConfigError::WrongType {
                key: key.to_string(),
                expected: "a number",
            }),
        }
    }

    pub fn require_f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        self.get_f64(key)?.ok_or(ConfigError::Missing(key))
    }

    pub fn get_str(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(ConfigValue::Text(s)) => Ok(Some(s)),
            Some(_) => Err(ConfigError::WrongType {
                key: key.to_string(),
                expected: "a string",
            }),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(ConfigValue::Flag(b)) => Ok(Some(*b)),
            Some(_) => Err(ConfigError::WrongType {
                key: key.to_string(),
                expected: "true or false",
            }),
        }
    }
}

fn convert_toml(key: &str, value: toml::Value) -> Result<ConfigValue, ConfigError> {
    match value {
        toml::Value::Float(v) => Ok(ConfigValue::Number(v)),
        toml::Value::Integer(v) => Ok(ConfigValue::Number(v as f64)),
        toml::Value::String(s) => Ok(ConfigValue::Text(s)),
        toml::Value::Boolean(b) => Ok(ConfigValue::Flag(b)),
        toml::Value::Table(_) | toml::Value::Array(_) => Err(ConfigError::Nested(key.to_string())),
        toml::Value::Datetime(_) => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a number, string or boolean",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn li7_seven_amu() -> ExperimentParams {
        ExperimentParams {
            atom_mass: 7.0 * 1.66054e-27,
            ..ExperimentParams::li7_reference()
        }
    }

    #[test]
    fn li7_oscillator_length_and_velocity() {
        let s = derive_scales(&li7_seven_amu()).unwrap();
        assert!((s.a_x - 38e-6).abs() < 0.5e-6, "a_x = {}", s.a_x);
        assert!((s.v1 - 0.5e-3).abs() < 0.01e-3, "v1 = {}", s.v1);
        // independent evaluation: 3.79992e-5 m, 5.02655e-4 m/s
        assert_relative_eq!(s.a_x, 3.799_921e-5, max_relative = 1e-5);
        assert_relative_eq!(s.v1, 5.026_548e-4, max_relative = 1e-6);
    }

    #[test]
    fn unit_mass_and_frequency_give_unit_length() {
        let p = ExperimentParams {
            atom_mass: HBAR,
            omega_x: 1.0,
            omega_perp: 100.0,
            hold_time_t1: PI / 2.0,
            ..ExperimentParams::li7_reference()
        };
        let s = derive_scales(&p).unwrap();
        assert_relative_eq!(s.a_x, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn dimensionless_conversions() {
        let s = derive_scales(&li7_seven_amu()).unwrap();
        let one: f64 = s.to_dimensionless(s.a_x, Quantity::Length);
        assert_relative_eq!(one, 1.0, max_relative = 1e-15);
        let k1: f64 = s.to_dimensionless(s.k1, Quantity::Wavenumber);
        assert_relative_eq!(k1, 80e-6 / s.a_x, max_relative = 1e-12);
        assert!((k1 - 2.105_306_88).abs() < 1e-6);
        let t: f64 = s.to_dimensionless(1.0, Quantity::Time);
        assert_relative_eq!(t, 2.0 * PI, max_relative = 1e-15);
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(matches!(
            "temperature".parse::<Quantity>(),
            Err(ConfigError::UnknownKind(_))
        ));
        assert_eq!("Density".parse::<Quantity>().unwrap(), Quantity::Density);
    }

    #[test]
    fn validation_names_the_field() {
        let mut p = ExperimentParams::li7_reference();
        p.omega_x = 0.0;
        assert_eq!(
            derive_scales(&p).unwrap_err(),
            ConfigError::NonPositive {
                field: "omega_x",
                value: 0.0
            }
        );
        let mut p = ExperimentParams::li7_reference();
        p.shift_d = -1e-6;
        assert!(matches!(
            p.validate(),
            Err(ConfigError::Negative {
                field: "shift_d",
                ..
            })
        ));
        let mut p = ExperimentParams::li7_reference();
        p.shift_d = 0.0;
        assert!(p.validate().is_ok());
    }

    #[test]
    fn weak_radial_confinement_is_only_a_warning() {
        let mut p = ExperimentParams::li7_reference();
        p.omega_perp = 2.0 * p.omega_x;
        let w = p.validate().unwrap();
        assert!(matches!(w[0], ConfigWarning::WeakRadialConfinement { .. }));
        assert!(ExperimentParams::li7_reference()
            .validate()
            .unwrap()
            .is_empty());
    }

    #[test]
    fn quasi_1d_coupling() {
        let mut p = ExperimentParams::li7_reference();
        p.g3d = 1e-50;
        let a_perp2 = HBAR / (p.atom_mass * p.omega_perp);
        assert_relative_eq!(p.g1d(), 1e-50 / (2.0 * PI * a_perp2), max_relative = 1e-14);
    }

    #[test]
    fn config_file_and_overrides() {
        let text =
            "species = \"li7\"\nomega_x = 6.283185307179586\nomega_perp = 6283.185307179586\n\
                    shift_d = 80e-6\nexpansion_time_t = 1\n";
        let mut map = ConfigMap::parse(text).unwrap();
        let p = ExperimentParams::from_config(&map).unwrap();
        assert_relative_eq!(p.hold_time_t1, 0.25, max_relative = 1e-14);
        assert_eq!(p.expansion_time_t, 1.0);
        map.apply_override("shift_d=40e-6").unwrap();
        map.apply_override("atom_mass_amu = 87").unwrap();
        let p = ExperimentParams::from_config(&map).unwrap();
        assert_eq!(p.shift_d, 40e-6);
        assert_relative_eq!(p.atom_mass, 87.0 * AMU);
        map.apply_override("species=rb87").unwrap();
        assert_eq!(map.get_str("species").unwrap(), Some("rb87"));
        assert!(map.apply_override("nonsense").is_err());
        assert!(matches!(
            ConfigMap::parse("[section]\nx = 1"),
            Err(ConfigError::Nested(_))
        ));
        assert!(matches!(
            ExperimentParams::from_config(&ConfigMap::parse("omega_x = 1").unwrap()),
            Err(ConfigError::Missing(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            mass_amu in 1.0f64..200.0,
            freq in 0.1f64..1000.0,
            d in 1e-7f64..1e-3,
            value in -1e3f64..1e3,
        ) {
            let p = ExperimentParams {
                atom_mass: mass_amu * AMU,
                omega_x: freq,
                omega_perp: freq * 100.0,
                shift_d: d,
                hold_time_t1: PI / (2.0 * freq),
                ..ExperimentParams::li7_reference()
            };
            let s = derive_scales(&p).unwrap();
            for kind in [Quantity::Length, Quantity::Time, Quantity::Momentum, Quantity::Density,
                         Quantity::Current, Quantity::Velocity, Quantity::Wavenumber, Quantity::Energy] {
                let si = value * s.unit_of(kind);
                let back = s.from_dimensionless(s.to_dimensionless::<f64>(si, kind), kind);
                prop_assert!((back - si).abs() <= 1e-12 * si.abs().max(f64::MIN_POSITIVE));
            }
            // k1 a_x equals d / a_x
            prop_assert!((s.k1_internal() - d / s.a_x).abs() <= 1e-12 * (d / s.a_x));
        }
    }
}

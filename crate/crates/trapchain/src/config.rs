//! Run configuration, read from TOML. Unknown keys are rejected.
//!
//! Frequencies are given in cyclic Hz (`*_hz` keys) and converted to rad/s
//! here; everything downstream is angular.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;
use trapchain_core::trap::{derive_quantities, derive_quantities_unchecked};
use trapchain_core::{
    AnomalyMode, AxialDrive, ChainGeometry, DerivedQuantities, Orientation, PhysicalConstants, ThermalOccupations,
    TrapParams,
};

use crate::error::CliError;

pub const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Approx,
}

impl From<ModeName> for AnomalyMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Exact => AnomalyMode::ExactG,
            ModeName::Approx => AnomalyMode::Approx1e3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationName {
    Z,
    X,
}

impl From<OrientationName> for Orientation {
    fn from(o: OrientationName) -> Self {
        match o {
            OrientationName::Z => Orientation::AxialZ,
            OrientationName::X => Orientation::TransverseX,
        }
    }
}

/// Optional overrides of the built-in CODATA 2018 values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub e: Option<f64>,
    pub m_e: Option<f64>,
    pub hbar: Option<f64>,
    pub eps0: Option<f64>,
    pub g: Option<f64>,
    pub k_b: Option<f64>,
}

impl ConstantsConfig {
    pub fn is_default(&self) -> bool {
        [self.e, self.m_e, self.hbar, self.eps0, self.g, self.k_b]
            .iter()
            .all(Option::is_none)
    }

    pub fn resolve(&self) -> Result<PhysicalConstants, CliError> {
        let d = PhysicalConstants::CODATA_2018;
        let c = PhysicalConstants {
            e: self.e.unwrap_or(d.e),
            m_e: self.m_e.unwrap_or(d.m_e),
            hbar: self.hbar.unwrap_or(d.hbar),
            eps0: self.eps0.unwrap_or(d.eps0),
            g: self.g.unwrap_or(d.g),
            k_b: self.k_b.unwrap_or(d.k_b),
        };
        c.validate()?;
        Ok(c)
    }
}

/// One trap. Give either `cyclotron_hz` or `b0` (T), and either `axial_hz`
/// or both `v0` (V) and `ell` (m).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub cyclotron_hz: Option<f64>,
    pub b0: Option<f64>,
    pub axial_hz: Option<f64>,
    pub v0: Option<f64>,
    pub ell: Option<f64>,
    /// Field gradient (T/m).
    pub gradient: Option<f64>,
    pub anomaly_mode: Option<ModeName>,
}

/// Per-site overrides of the uniform trap.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub gradient: Option<f64>,
    pub axial_hz: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub orientation: OrientationName,
    pub sites: usize,
    /// Uniform spacing (m).
    pub spacing: f64,
    /// Explicit positions (m); overrides `sites` and `spacing`.
    pub positions: Option<Vec<f64>>,
    pub nearest_neighbor_only: bool,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            orientation: OrientationName::Z,
            sites: 2,
            spacing: 10e-6,
            positions: None,
            nearest_neighbor_only: false,
        }
    }
}

/// Either explicit `k_bar` and `n_bar`, or a `temperature` (K) from which
/// they follow. `l_bar` is always explicit.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OccupationConfig {
    pub k_bar: Option<f64>,
    pub n_bar: Option<f64>,
    pub temperature: Option<f64>,
    pub l_bar: f64,
}

impl Default for OccupationConfig {
    fn default() -> Self {
        Self {
            k_bar: None,
            n_bar: None,
            temperature: None,
            l_bar: 2.0,
        }
    }
}

pub const DEFAULT_TEMPERATURE: f64 = 0.08;

impl OccupationConfig {
    pub fn resolve(&self, dq: &DerivedQuantities, consts: &PhysicalConstants) -> Result<ThermalOccupations, CliError> {
        match (self.k_bar, self.n_bar, self.temperature) {
            (Some(k), Some(n), None) => Ok(ThermalOccupations::new(k, n, self.l_bar)?),
            (None, None, t) => Ok(ThermalOccupations::from_temperature(
                dq,
                t.unwrap_or(DEFAULT_TEMPERATURE),
                self.l_bar,
                consts,
            )?),
            _ => Err(CliError::Config(
                "occupations: give both k_bar and n_bar, or a temperature".into(),
            )),
        }
    }

    pub fn describe(&self) -> String {
        match self.temperature {
            _ if self.k_bar.is_some() => String::from("explicit"),
            Some(t) => format!("thermal at {t} K"),
            None => format!("thermal at {DEFAULT_TEMPERATURE} K"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferConfig {
    pub theta: f64,
    pub phi: f64,
    /// Average over the Bloch sphere instead of using `theta`, `phi`.
    pub bloch_average: bool,
    /// End of the time grid in units of the nearest-neighbour swap time.
    pub t_max_swaps: f64,
    pub points: usize,
    /// Single-excitation fast path (always used above the dense limit).
    pub fast: bool,
    pub max_sites: usize,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self {
            theta: PI / 2.0,
            phi: 0.0,
            bloch_average: true,
            t_max_swaps: 3.0,
            points: 201,
            fast: false,
            max_sites: trapchain_core::spin_chain::DEFAULT_MAX_SITES,
        }
    }
}

/// A sweep axis: explicit `values`, or `start`/`stop`/`points` (optionally
/// log-spaced).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub log: bool,
}

impl AxisConfig {
    pub fn expand(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let bad = |msg: &str| CliError::Config(format!("sweep.{name}: {msg}"));
        let values = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(bad("points must be positive"));
                }
                if self.log && (a <= 0.0 || b <= 0.0) {
                    return Err(bad("log axis needs positive bounds"));
                }
                (0..n)
                    .map(|k| {
                        let f = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
                        if self.log {
                            (a.ln() + f * (b.ln() - a.ln())).exp()
                        } else {
                            a + f * (b - a)
                        }
                    })
                    .collect()
            }
            _ => return Err(bad("give either values or start, stop and points")),
        };
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite and non-empty"));
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub gradient: Option<AxisConfig>,
    pub spacing: Option<AxisConfig>,
    pub axial_hz: Option<AxisConfig>,
    pub cyclotron_hz: Option<AxisConfig>,
    /// Fidelity floor for the constrained optimum.
    pub min_fidelity: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gradient: None,
            spacing: None,
            axial_hz: None,
            cyclotron_hz: None,
            min_fidelity: 0.99,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub epsilon: f64,
    /// `omega_c / omega_z`.
    pub ratio: f64,
    /// Coulomb scale in units of `omega_z`.
    pub xi: f64,
    pub cutoffs: Vec<usize>,
    pub tolerance: f64,
    pub exponent_min: f64,
    pub exponent_max: f64,
    pub anomaly_mode: ModeName,
    pub dim_limit: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.03,
            ratio: 20.0,
            xi: 1e-4,
            cutoffs: vec![1, 2, 3, 4],
            tolerance: 0.15,
            exponent_min: 1.8,
            exponent_max: 2.2,
            anomaly_mode: ModeName::Exact,
            dim_limit: trapchain_core::oracle::DEFAULT_DIM_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub trap: TrapConfig,
    #[serde(default)]
    pub sites: Vec<SiteConfig>,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub occupations: OccupationConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    /// Skip the regime gate on coupling calculations.
    #[serde(default)]
    pub force: bool,
}

pub const DEFAULT_CYCLOTRON_HZ: f64 = 8e9;
pub const DEFAULT_AXIAL_HZ: f64 = 490e6;
pub const DEFAULT_GRADIENT: f64 = 1800.0;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn anomaly_mode(&self) -> AnomalyMode {
        self.trap.anomaly_mode.unwrap_or(ModeName::Exact).into()
    }

    pub fn orientation(&self) -> Orientation {
        self.geometry.orientation.into()
    }

    pub fn constants(&self) -> Result<PhysicalConstants, CliError> {
        self.constants.resolve()
    }

    /// Trap parameters for site `site` (0-based), applying overrides.
    pub fn trap_params(&self, site: Option<usize>, consts: &PhysicalConstants) -> Result<TrapParams, CliError> {
        let t = &self.trap;
        let over = site.and_then(|i| self.sites.get(i));
        let b0 = match (t.cyclotron_hz, t.b0) {
            (Some(_), Some(_)) => return Err(CliError::Config("trap: give cyclotron_hz or b0, not both".into())),
            (Some(f), None) => TWO_PI * f * consts.m_e / consts.e,
            (None, Some(b)) => b,
            (None, None) => TWO_PI * DEFAULT_CYCLOTRON_HZ * consts.m_e / consts.e,
        };
        let axial_hz = over.and_then(|o| o.axial_hz).or(t.axial_hz);
        let axial = match (axial_hz, t.v0, t.ell) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(CliError::Config("trap: give axial_hz or v0 and ell, not both".into()))
            }
            (Some(f), None, None) => AxialDrive::Frequency(TWO_PI * f),
            (None, Some(v0), Some(ell)) => AxialDrive::Electrodes { v0, ell },
            (None, None, None) => AxialDrive::Frequency(TWO_PI * DEFAULT_AXIAL_HZ),
            _ => return Err(CliError::Config("trap: v0 and ell go together".into())),
        };
        let gradient = over
            .and_then(|o| o.gradient)
            .or(t.gradient)
            .unwrap_or(DEFAULT_GRADIENT);
        Ok(TrapParams {
            b0,
            gradient,
            axial,
            anomaly_mode: self.anomaly_mode(),
        })
    }

    pub fn geometry(&self) -> Result<ChainGeometry, CliError> {
        let g = &self.geometry;
        let geom = match &g.positions {
            Some(p) => ChainGeometry::new(self.orientation(), p.clone())?,
            None => ChainGeometry::uniform(self.orientation(), g.sites, g.spacing)?,
        };
        if !self.sites.is_empty() && self.sites.len() != geom.len() {
            return Err(CliError::Config(format!(
                "{} [[sites]] entries for {} sites",
                self.sites.len(),
                geom.len()
            )));
        }
        Ok(geom)
    }

    /// Derived quantities, one per site when per-site overrides are given,
    /// otherwise a single shared entry.
    pub fn derived(&self, consts: &PhysicalConstants) -> Result<Vec<DerivedQuantities>, CliError> {
        if self.sites.is_empty() {
            Ok(vec![derive_quantities(&self.trap_params(None, consts)?, consts)?])
        } else {
            (0..self.sites.len())
                .map(|i| Ok(derive_quantities(&self.trap_params(Some(i), consts)?, consts)?))
                .collect()
        }
    }

    /// Like [`RunConfig::derived`] for the shared trap, without the
    /// hierarchy gate.
    pub fn derived_unchecked(&self, consts: &PhysicalConstants) -> Result<DerivedQuantities, CliError> {
        Ok(derive_quantities_unchecked(&self.trap_params(None, consts)?, consts)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_table_case_a() {
        let cfg = RunConfig::from_toml("").unwrap();
        let c = cfg.constants().unwrap();
        let dq = cfg.derived(&c).unwrap();
        assert_eq!(dq.len(), 1);
        assert!((dq[0].omega_c / (TWO_PI * 8e9) - 1.0).abs() < 1e-12);
        assert!((dq[0].epsilon - 1.41e-2).abs() < 1e-4);
        assert_eq!(cfg.geometry().unwrap().len(), 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[trap]\ngradeint = 3.0\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn conflicting_inputs_rejected() {
        let cfg = RunConfig::from_toml("[trap]\ncyclotron_hz = 8e9\nb0 = 0.3\n").unwrap();
        assert!(cfg.trap_params(None, &PhysicalConstants::CODATA_2018).is_err());
        let cfg = RunConfig::from_toml("[occupations]\nk_bar = 1.0\ntemperature = 0.1\n").unwrap();
        let c = PhysicalConstants::CODATA_2018;
        let dq = cfg.derived(&c).unwrap();
        assert!(cfg.occupations.resolve(&dq[0], &c).is_err());
    }

    #[test]
    fn axes_expand() {
        let a = AxisConfig {
            start: Some(1.0),
            stop: Some(100.0),
            points: Some(3),
            log: true,
            ..Default::default()
        };
        let v = a.expand("x").unwrap();
        assert!((v[1] - 10.0).abs() < 1e-12);
        let bad = AxisConfig {
            values: Some(vec![1.0]),
            start: Some(1.0),
            ..Default::default()
        };
        assert!(bad.expand("x").is_err());
    }

    #[test]
    fn per_site_overrides() {
        let cfg = RunConfig::from_toml(
            "[geometry]\nsites = 2\n[[sites]]\ngradient = 1000.0\n[[sites]]\ngradient = 2000.0\n",
        )
        .unwrap();
        let c = PhysicalConstants::CODATA_2018;
        let dq = cfg.derived(&c).unwrap();
        assert_eq!(dq.len(), 2);
        assert!((dq[1].epsilon / dq[0].epsilon - 2.0).abs() < 1e-12);
    }
}

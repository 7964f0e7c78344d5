//! Single-trap quantities: motional frequencies, axial ground-state
//! amplitude, gradient coupling `epsilon` and the pairwise Coulomb scale `xi`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;


use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Separation factor below which a frequency ordering is an error.
pub const HIERARCHY_ERROR: f64 = 5.0;
/// Separation factor below which a frequency ordering only warns.
pub const HIERARCHY_WARN: f64 = 10.0;
/// A regime condition passes when its ratio is below this.
pub const REGIME_THRESHOLD: f64 = 0.1;

/// How the anomaly frequency `omega_a = omega_s - omega_c` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AnomalyMode {
    /// `omega_a = (g/2 - 1) omega_c` with the configured g.
    ExactG,
    /// `omega_a = 1e-3 omega_c`, the rounded value behind the `10^6`
    /// prefactor in the simplified flip-flop formula.
    Approx1e3,
}

impl AnomalyMode {
    pub fn label(self) -> &'static str {
        match self {
            AnomalyMode::ExactG => "exact",
            AnomalyMode::Approx1e3 => "approx",
        }
    }
}

/// Source of the axial confinement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AxialDrive {
    /// Axial angular frequency given directly (rad/s).
    Frequency(f64),
    /// Trap voltage `v0` (V) and characteristic length `ell` (m).
    Electrodes { v0: f64, ell: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrapParams {
    /// Uniform axial field (T).
    pub b0: f64,
    /// Local linear gradient (T/m).
    pub gradient: f64,
    pub axial: AxialDrive,
    pub anomaly_mode: AnomalyMode,
}

impl TrapParams {
    /// Builds parameters from target frequencies, solving `omega_c = |e| B0 / m_e`
    /// for the field.
    pub fn from_frequencies(
        omega_c: f64,
        omega_z: f64,
        gradient: f64,
        anomaly_mode: AnomalyMode,
        consts: &PhysicalConstants,
    ) -> Self {
        Self {
            b0: omega_c * consts.m_e / consts.e,
            gradient,
            axial: AxialDrive::Frequency(omega_z),
            anomaly_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0.is_finite() && self.b0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "b0",
                reason: "must be finite and > 0",
            });
        }
        if !(self.gradient.is_finite() && self.gradient >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gradient",
                reason: "must be finite and >= 0",
            });
        }
        match self.axial {
            AxialDrive::Frequency(w) if !(w.is_finite() && w > 0.0) => {
                Err(Error::InvalidParameter {
                    name: "omega_z",
                    reason: "must be finite and > 0",
                })
            }
            AxialDrive::Electrodes { v0, ell }
                if !(v0.is_finite() && v0 > 0.0 && ell.is_finite() && ell > 0.0) =>
            {
                Err(Error::InvalidParameter {
                    name: "v0/ell",
                    reason: "voltage and trap length must be finite and > 0",
                })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum HierarchyLevel {
    Ok,
    Warning,
    Violation,
}

/// One `lower << upper` ordering with its separation factor.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HierarchyCheck {
    pub which: &'static str,
    pub ratio: f64,
    pub level: HierarchyLevel,
}

impl HierarchyCheck {
    fn new(which: &'static str, ratio: f64) -> Self {
        let level = if ratio < HIERARCHY_ERROR {
            HierarchyLevel::Violation
        } else if ratio < HIERARCHY_WARN {
            HierarchyLevel::Warning
        } else {
            HierarchyLevel::Ok
        };
        Self { which, ratio, level }
    }
}

/// Everything downstream code needs about one trap. Angular frequencies in
/// rad/s, lengths in m.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DerivedQuantities {
    pub omega_m: f64,
    pub omega_c: f64,
    pub omega_z: f64,
    pub omega_s: f64,
    pub omega_a: f64,
    pub omega_c_tilde: f64,
    pub delta_z: f64,
    pub epsilon: f64,
    pub b0: f64,
    pub gradient: f64,
    pub anomaly_mode: AnomalyMode,
    /// `omega_z / omega_m` and `omega_c / omega_z` separations.
    pub hierarchy: [HierarchyCheck; 2],
}

impl DerivedQuantities {
    pub fn has_hierarchy_warning(&self) -> bool {
        self.hierarchy
            .iter()
            .any(|h| h.level != HierarchyLevel::Ok)
    }

    /// Same trap with the other anomaly convention.
    pub fn with_anomaly_mode(&self, mode: AnomalyMode, consts: &PhysicalConstants) -> Self {
        Self {
            omega_a: anomaly_frequency(self.omega_c, mode, consts),
            anomaly_mode: mode,
            ..*self
        }
    }
}

fn anomaly_frequency(omega_c: f64, mode: AnomalyMode, consts: &PhysicalConstants) -> f64 {
    match mode {
        AnomalyMode::ExactG => (consts.g / 2.0 - 1.0) * omega_c,
        AnomalyMode::Approx1e3 => 1e-3 * omega_c,
    }
}

/// Derives all single-trap quantities, rejecting orderings separated by
/// less than [`HIERARCHY_ERROR`].
pub fn derive_quantities(
    params: &TrapParams,
    consts: &PhysicalConstants,
) -> Result<DerivedQuantities> {
    let dq = derive_quantities_unchecked(params, consts)?;
    for h in dq.hierarchy {
        if h.level == HierarchyLevel::Violation {
            return Err(Error::HierarchyViolation {
                which: h.which,
                ratio: h.ratio,
                required: HIERARCHY_ERROR,
            });
        }
    }
    Ok(dq)
}

/// Like [`derive_quantities`] but only records hierarchy problems in
/// [`DerivedQuantities::hierarchy`]. A complex `omega_c_tilde` is still an
/// error.
pub fn derive_quantities_unchecked(
    params: &TrapParams,
    consts: &PhysicalConstants,
) -> Result<DerivedQuantities> {
    params.validate()?;
    consts.validate()?;

    let omega_c = consts.e * params.b0 / consts.m_e;
    let omega_z = match params.axial {
        AxialDrive::Frequency(w) => w,
        AxialDrive::Electrodes { v0, ell } => (2.0 * consts.e * v0 / (consts.m_e * ell * ell)).sqrt(),
    };
    let tilde_sq = omega_c * omega_c - 2.0 * omega_z * omega_z;
    if tilde_sq <= 0.0 {
        return Err(Error::ComplexFrequency);
    }
    let omega_m = omega_z * omega_z / (2.0 * omega_c);
    let omega_s = consts.g / 2.0 * omega_c;
    let delta_z = (consts.hbar / (2.0 * consts.m_e * omega_z)).sqrt();
    let epsilon = consts.e * params.gradient * delta_z / (consts.m_e * omega_z);

    Ok(DerivedQuantities {
        omega_m,
        omega_c,
        omega_z,
        omega_s,
        omega_a: anomaly_frequency(omega_c, params.anomaly_mode, consts),
        omega_c_tilde: tilde_sq.sqrt(),
        delta_z,
        epsilon,
        b0: params.b0,
        gradient: params.gradient,
        anomaly_mode: params.anomaly_mode,
        hierarchy: [
            HierarchyCheck::new("omega_z/omega_m", omega_z / omega_m),
            HierarchyCheck::new("omega_c/omega_z", omega_c / omega_z),
        ],
    })
}

/// Coulomb coupling rate `xi = e^2 / (8 pi eps0 m_e omega_z d^3)` (rad/s).
pub fn coulomb_scale(dq: &DerivedQuantities, d: f64, consts: &PhysicalConstants) -> Result<f64> {
    check_distance(d)?;
    Ok(consts.e * consts.e / (8.0 * PI * consts.eps0 * consts.m_e * dq.omega_z * d * d * d))
}

/// The same rate written as Coulomb energy times `(delta_z / d)^2`, over hbar.
pub fn coulomb_scale_energy_form(
    dq: &DerivedQuantities,
    d: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    check_distance(d)?;
    let energy = consts.e * consts.e / (4.0 * PI * consts.eps0 * d);
    let r = dq.delta_z / d;
    Ok(energy * r * r / consts.hbar)
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "d",
            reason: "inter-trap distance must be finite and > 0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeCondition {
    pub name: &'static str,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RegimeReport {
    pub conditions: Vec<RegimeCondition>,
    pub pass: bool,
}

impl RegimeReport {
    pub fn failed(&self) -> impl Iterator<Item = &RegimeCondition> {
        self.conditions.iter().filter(|c| !c.pass)
    }

    pub fn failure_summary(&self) -> String {
        let mut s = String::new();
        for c in self.failed() {
            if !s.is_empty() {
                s.push_str(", ");
            }
            s.push_str(c.name);
            s.push_str(" = ");
            push_sci(&mut s, c.ratio);
        }
        s
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(Error::RegimeViolation {
                failed: self.failure_summary(),
            })
        }
    }
}

fn push_sci(s: &mut String, v: f64) {
    use core::fmt::Write;
    let _ = write!(s, "{v:.3e}");
}

/// Checks every small parameter the effective model relies on. Each ratio
/// must stay below [`REGIME_THRESHOLD`].
pub fn validate_regime(dq: &DerivedQuantities, xi: f64, l_bar: f64) -> RegimeReport {
    let conditions = [
        ("omega_m/omega_z", dq.omega_m / dq.omega_z),
        ("omega_z/omega_c", dq.omega_z / dq.omega_c),
        ("l_bar*omega_m/omega_c", l_bar * dq.omega_m / dq.omega_c),
        ("epsilon", dq.epsilon),
        ("b*delta_z/B0", dq.gradient * dq.delta_z / dq.b0),
        ("xi/omega_z", xi / dq.omega_z),
        (
            "xi*omega_z/(omega_c_tilde*omega_c)",
            xi * dq.omega_z / (dq.omega_c_tilde * dq.omega_c),
        ),
    ];
    let conditions: Vec<RegimeCondition> = conditions
        .into_iter()
        .map(|(name, ratio)| RegimeCondition {
            name,
            ratio,
            pass: ratio.is_finite() && ratio < REGIME_THRESHOLD,
        })
        .collect();
    let pass = conditions.iter().all(|c| c.pass);
    RegimeReport { conditions, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TWO_PI: f64 = 2.0 * PI;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::CODATA_2018
    }

    fn case_a(b: f64, mode: AnomalyMode) -> DerivedQuantities {
        let p = TrapParams::from_frequencies(TWO_PI * 8e9, TWO_PI * 490e6, b, mode, &consts());
        derive_quantities(&p, &consts()).unwrap()
    }

    #[test]
    fn table_a_amplitude_and_epsilon() {
        // Reference values from direct evaluation with CODATA 2018 at 30 digits.
        let dq = case_a(1800.0, AnomalyMode::ExactG);
        assert_relative_eq!(dq.delta_z, 1.371_167_814_775_517e-7, max_relative = 1e-9);
        assert_relative_eq!(dq.epsilon, 1.409_965_757_205_528e-2, max_relative = 1e-9);
        assert_relative_eq!(dq.omega_c, TWO_PI * 8e9, max_relative = 1e-12);
    }

    #[test]
    fn zero_gradient_gives_zero_epsilon() {
        assert_eq!(case_a(0.0, AnomalyMode::ExactG).epsilon, 0.0);
    }

    #[test]
    fn exact_anomaly_frequency() {
        let dq = case_a(1800.0, AnomalyMode::ExactG);
        assert_relative_eq!(dq.omega_a, 5.829_047_637_485_803e7, max_relative = 1e-9);
        assert_relative_eq!(dq.omega_a / TWO_PI, 9.277_217e6, max_relative = 1e-6);
        let approx = case_a(1800.0, AnomalyMode::Approx1e3);
        assert_relative_eq!(approx.omega_a, 1e-3 * approx.omega_c, max_relative = 1e-15);
    }

    #[test]
    fn modes_differ_only_in_anomaly() {
        let a = case_a(1800.0, AnomalyMode::ExactG);
        let b = case_a(1800.0, AnomalyMode::Approx1e3);
        assert_ne!(a.omega_a, b.omega_a);
        let b_as_a = DerivedQuantities {
            omega_a: a.omega_a,
            anomaly_mode: a.anomaly_mode,
            ..b
        };
        assert_eq!(a, b_as_a);
        assert_eq!(a.with_anomaly_mode(AnomalyMode::Approx1e3, &consts()), b);
    }

    #[test]
    fn magnetron_definition() {
        let dq = case_a(1800.0, AnomalyMode::ExactG);
        assert_relative_eq!(
            dq.omega_m * 2.0 * dq.omega_c,
            dq.omega_z * dq.omega_z,
            max_relative = 1e-12
        );
    }

    #[test]
    fn electrode_drive_matches_frequency_drive() {
        let c = consts();
        let (v0, ell) = (10.0, 500e-6);
        let wz = (2.0 * c.e * v0 / (c.m_e * ell * ell)).sqrt();
        let by_electrodes = TrapParams {
            b0: 0.3,
            gradient: 100.0,
            axial: AxialDrive::Electrodes { v0, ell },
            anomaly_mode: AnomalyMode::ExactG,
        };
        let by_freq = TrapParams {
            axial: AxialDrive::Frequency(wz),
            ..by_electrodes
        };
        let a = derive_quantities_unchecked(&by_electrodes, &c).unwrap();
        let b = derive_quantities_unchecked(&by_freq, &c).unwrap();
        assert_relative_eq!(a.omega_z, b.omega_z, max_relative = 1e-15);
        assert_relative_eq!(a.epsilon, b.epsilon, max_relative = 1e-15);
    }

    #[test]
    fn hierarchy_errors_and_warnings() {
        let c = consts();
        // omega_c/omega_z = 3: violation.
        let p = TrapParams::from_frequencies(3.0e10, 1.0e10, 1.0, AnomalyMode::ExactG, &c);
        assert!(matches!(
            derive_quantities(&p, &c),
            Err(Error::HierarchyViolation { which: "omega_c/omega_z", .. })
        ));
        let unchecked = derive_quantities_unchecked(&p, &c).unwrap();
        assert_eq!(unchecked.hierarchy[1].level, HierarchyLevel::Violation);
        // omega_c/omega_z = 7: warning only.
        let p = TrapParams::from_frequencies(7.0e10, 1.0e10, 1.0, AnomalyMode::ExactG, &c);
        let dq = derive_quantities(&p, &c).unwrap();
        assert!(dq.has_hierarchy_warning());
        assert_eq!(dq.hierarchy[1].level, HierarchyLevel::Warning);
        assert_eq!(dq.hierarchy[0].level, HierarchyLevel::Ok);
    }

    #[test]
    fn complex_tilde_frequency() {
        let c = consts();
        let p = TrapParams::from_frequencies(1.0e10, 1.0e10, 1.0, AnomalyMode::ExactG, &c);
        assert_eq!(derive_quantities(&p, &c), Err(Error::ComplexFrequency));
        assert_eq!(derive_quantities_unchecked(&p, &c), Err(Error::ComplexFrequency));
    }

    #[test]
    fn rejects_bad_params() {
        let c = consts();
        let mut p = TrapParams::from_frequencies(1e11, 1e9, 1.0, AnomalyMode::ExactG, &c);
        p.gradient = -1.0;
        assert!(derive_quantities(&p, &c).is_err());
        p.gradient = 1.0;
        p.b0 = 0.0;
        assert!(derive_quantities(&p, &c).is_err());
    }

    #[test]
    fn coulomb_scale_table_a() {
        let c = consts();
        let dq = case_a(1800.0, AnomalyMode::ExactG);
        let xi = coulomb_scale(&dq, 10e-6, &c).unwrap();
        assert_relative_eq!(xi, 4.113_080_920_612_416e7, max_relative = 1e-9);
        assert_relative_eq!(xi / TWO_PI, 6.546e6, max_relative = 1e-3);
        let energy = coulomb_scale_energy_form(&dq, 10e-6, &c).unwrap();
        assert_relative_eq!(xi, energy, max_relative = 1e-12);
        let xi2 = coulomb_scale(&dq, 20e-6, &c).unwrap();
        assert_relative_eq!(xi2, xi / 8.0, max_relative = 1e-14);
        assert!(coulomb_scale(&dq, 0.0, &c).is_err());
    }

    #[test]
    fn regime_magnetron_margin() {
        // omega_c/omega_z = 500 gives omega_c/omega_m = 5e5.
        let c = consts();
        let p = TrapParams::from_frequencies(5.0e11, 1.0e9, 10.0, AnomalyMode::ExactG, &c);
        let dq = derive_quantities(&p, &c).unwrap();
        assert_relative_eq!(dq.omega_c / dq.omega_m, 5e5, max_relative = 1e-12);
        let report = validate_regime(&dq, 1e3, 50.0);
        let mag = report
            .conditions
            .iter()
            .find(|c| c.name == "l_bar*omega_m/omega_c")
            .unwrap();
        assert_relative_eq!(mag.ratio, 1e-4, max_relative = 1e-12);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn regime_zero_xi_passes() {
        let dq = case_a(1800.0, AnomalyMode::ExactG);
        let report = validate_regime(&dq, 0.0, 0.0);
        assert!(report.pass);
        assert!(report.clone().into_result().is_ok());
    }

    #[test]
    fn regime_strong_gradient_fails() {
        let c = consts();
        let dq0 = case_a(1.0, AnomalyMode::ExactG);
        // epsilon is linear in b, so this gradient gives epsilon = 0.5.
        let dq = case_a(0.5 / dq0.epsilon, AnomalyMode::ExactG);
        assert_relative_eq!(dq.epsilon, 0.5, max_relative = 1e-12);
        let xi = coulomb_scale(&dq, 10e-6, &c).unwrap();
        let report = validate_regime(&dq, xi, 0.0);
        assert!(!report.pass);
        assert!(report.failed().any(|f| f.name == "epsilon"));
        assert!(matches!(
            report.into_result(),
            Err(Error::RegimeViolation { .. })
        ));
    }

    #[test]
    fn epsilon_scaling_laws() {
        let c = consts();
        let wc = TWO_PI * 8e9;
        let base = derive_quantities(
            &TrapParams::from_frequencies(wc, TWO_PI * 300e6, 500.0, AnomalyMode::ExactG, &c),
            &c,
        )
        .unwrap();
        let double_b = derive_quantities(
            &TrapParams::from_frequencies(wc, TWO_PI * 300e6, 1000.0, AnomalyMode::ExactG, &c),
            &c,
        )
        .unwrap();
        let double_wz = derive_quantities(
            &TrapParams::from_frequencies(wc, TWO_PI * 600e6, 500.0, AnomalyMode::ExactG, &c),
            &c,
        )
        .unwrap();
        assert_relative_eq!(double_b.epsilon / base.epsilon, 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            double_wz.epsilon / base.epsilon,
            2f64.powf(-1.5),
            max_relative = 1e-12
        );
        let xi = coulomb_scale(&base, 10e-6, &c).unwrap();
        let xi_wz = coulomb_scale(&double_wz, 10e-6, &c).unwrap();
        assert_relative_eq!(xi_wz / xi, 0.5, max_relative = 1e-12);
    }
}

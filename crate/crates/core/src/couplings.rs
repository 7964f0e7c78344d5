//! Pairwise effective spin-spin couplings for a linear trap array.
//!
//! Both couplings fall off as `1/d^3` and are computed for every pair, not
//! only nearest neighbours.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::trap::{coulomb_scale, validate_regime, AnomalyMode, DerivedQuantities};

/// Direction of the array relative to the trapping field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Orientation {
    /// Traps stacked along the magnetic field (z).
    AxialZ,
    /// Traps placed across the field (x).
    TransverseX,
}

impl Orientation {
    pub fn label(self) -> &'static str {
        match self {
            Orientation::AxialZ => "z",
            Orientation::TransverseX => "x",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainGeometry {
    pub orientation: Orientation,
    /// Trap centres along the array axis (m), strictly increasing.
    pub positions: Vec<f64>,
}

impl ChainGeometry {
    pub fn new(orientation: Orientation, positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "a chain needs at least two sites",
            });
        }
        if positions.iter().any(|p| !p.is_finite())
            || positions.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "site positions must be finite and strictly increasing",
            });
        }
        Ok(Self {
            orientation,
            positions,
        })
    }

    /// `n` equally spaced sites starting at the origin.
    pub fn uniform(orientation: Orientation, n: usize, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter {
                name: "spacing",
                reason: "must be finite and > 0",
            });
        }
        Self::new(
            orientation,
            (0..n).map(|i| i as f64 * spacing).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.positions[i] - self.positions[j]).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingOptions {
    /// Zero every coupling beyond adjacent sites.
    pub nearest_neighbor_only: bool,
    /// Skip the regime check.
    pub force: bool,
    /// Mean magnetron number fed to the regime check.
    pub magnetron_occupation: f64,
}

/// Symmetric pair matrices with zero diagonal; entries in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub jz: DMatrix<f64>,
    pub jxy: DMatrix<f64>,
    pub xi: DMatrix<f64>,
    pub distance: DMatrix<f64>,
    pub anomaly_mode: AnomalyMode,
    pub orientation: Orientation,
    pub nearest_neighbor_only: bool,
}

impl CouplingMatrix {
    pub fn len(&self) -> usize {
        self.jz.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.jz.nrows() == 0
    }

    /// Builds a matrix from `f(i, j) = (J^z, J^xy)` for `i < j`, leaving
    /// `xi` and distances zero. Useful for idealised chains.
    pub fn from_fn(
        n: usize,
        orientation: Orientation,
        anomaly_mode: AnomalyMode,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Self {
        let mut jz = DMatrix::zeros(n, n);
        let mut jxy = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let (z, xy) = f(i, j);
                jz[(i, j)] = z;
                jz[(j, i)] = z;
                jxy[(i, j)] = xy;
                jxy[(j, i)] = xy;
            }
        }
        Self {
            jz,
            jxy,
            xi: DMatrix::zeros(n, n),
            distance: DMatrix::zeros(n, n),
            anomaly_mode,
            orientation,
            nearest_neighbor_only: false,
        }
    }

    /// Rows `(i, j, d, jz, jxy)` for `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64, f64, f64)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            ((i + 1)..n).map(move |j| {
                (
                    i,
                    j,
                    self.distance[(i, j)],
                    self.jz[(i, j)],
                    self.jxy[(i, j)],
                )
            })
        })
    }
}

/// Quantities entering a pair coupling once the two sites are combined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParameters {
    pub xi: f64,
    pub epsilon: f64,
    /// `omega_z^4 / (omega_a^2 omega_c_tilde^2)`.
    pub flip_flop_factor: f64,
}

fn flip_flop_factor(dq: &DerivedQuantities) -> f64 {
    let wz2 = dq.omega_z * dq.omega_z;
    wz2 * wz2 / (dq.omega_a * dq.omega_a * dq.omega_c_tilde * dq.omega_c_tilde)
}

/// Combines two (possibly different) traps at distance `d`. Each site
/// quantity enters through the geometric mean of the two sites' values;
/// identical traps reduce to the single-trap formulas exactly.
pub fn pair_parameters(
    a: &DerivedQuantities,
    b: &DerivedQuantities,
    d: f64,
    consts: &PhysicalConstants,
) -> Result<PairParameters> {
    let xi_a = coulomb_scale(a, d, consts)?;
    if a == b {
        return Ok(PairParameters {
            xi: xi_a,
            epsilon: a.epsilon,
            flip_flop_factor: flip_flop_factor(a),
        });
    }
    let xi_b = coulomb_scale(b, d, consts)?;
    Ok(PairParameters {
        xi: (xi_a * xi_b).sqrt(),
        epsilon: (a.epsilon * b.epsilon).sqrt(),
        flip_flop_factor: (flip_flop_factor(a) * flip_flop_factor(b)).sqrt(),
    })
}

/// `J^z = (g/2)^2 xi eps^2`.
pub fn jz_pair(p: &PairParameters, g: f64) -> f64 {
    let h = g / 2.0;
    h * h * p.xi * p.epsilon * p.epsilon
}

/// `J^xy = (g/4)^2 xi eps^2 omega_z^4 / (omega_a^2 omega_c_tilde^2)`.
pub fn jxy_pair(p: &PairParameters, g: f64) -> f64 {
    let q = g / 4.0;
    q * q * p.xi * p.epsilon * p.epsilon * p.flip_flop_factor
}

/// `J^z` with `xi` and `eps` expanded in terms of the applied fields.
pub fn jz_expanded(dq: &DerivedQuantities, d: f64, consts: &PhysicalConstants) -> f64 {
    let h = consts.g / 2.0;
    h * h * field_prefactor(dq.gradient, dq.omega_z, d, consts)
}

/// The simplified flip-flop law with `omega_a = 1e-3 omega_c` and
/// `omega_c_tilde = omega_c` substituted: `10^6 (g/4)^2 hbar e^4 b^2 /
/// (16 pi eps0 m_e^4 omega_c^4 d^3)`.
pub fn jxy_simplified(dq: &DerivedQuantities, d: f64, consts: &PhysicalConstants) -> f64 {
    let q = consts.g / 4.0;
    1e6 * q * q * field_prefactor(dq.gradient, dq.omega_c, d, consts)
}

fn field_prefactor(b: f64, omega: f64, d: f64, consts: &PhysicalConstants) -> f64 {
    let e2 = consts.e * consts.e;
    let m2 = consts.m_e * consts.m_e;
    let w2 = omega * omega;
    consts.hbar * e2 * e2 * b * b / (16.0 * PI * consts.eps0 * m2 * m2 * w2 * w2 * d * d * d)
}

/// Full dipolar coupling matrix. `sites` holds either one trap shared by
/// every site or one entry per site.
pub fn coupling_matrix(
    sites: &[DerivedQuantities],
    geom: &ChainGeometry,
    consts: &PhysicalConstants,
    opts: &CouplingOptions,
) -> Result<CouplingMatrix> {
    let n = geom.len();
    if sites.len() != 1 && sites.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sites.len(),
        });
    }
    let mode = sites[0].anomaly_mode;
    if sites.iter().any(|s| s.anomaly_mode != mode) {
        return Err(Error::InvalidParameter {
            name: "anomaly_mode",
            reason: "all sites must use the same anomaly convention",
        });
    }
    let site = |i: usize| if sites.len() == 1 { &sites[0] } else { &sites[i] };

    let mut out = CouplingMatrix {
        jz: DMatrix::zeros(n, n),
        jxy: DMatrix::zeros(n, n),
        xi: DMatrix::zeros(n, n),
        distance: DMatrix::zeros(n, n),
        anomaly_mode: mode,
        orientation: geom.orientation,
        nearest_neighbor_only: opts.nearest_neighbor_only,
    };
    let mut failures = String::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = geom.distance(i, j);
            let p = pair_parameters(site(i), site(j), d, consts)?;
            if !opts.force {
                for s in [site(i), site(j)] {
                    let report = validate_regime(s, p.xi, opts.magnetron_occupation);
                    if !report.pass && failures.is_empty() {
                        failures = report.failure_summary();
                    }
                }
            }
            let keep = !opts.nearest_neighbor_only || j == i + 1;
            let (jz, jxy) = if keep {
                (jz_pair(&p, consts.g), jxy_pair(&p, consts.g))
            } else {
                (0.0, 0.0)
            };
            for (a, b) in [(i, j), (j, i)] {
                out.distance[(a, b)] = d;
                out.xi[(a, b)] = p.xi;
                out.jz[(a, b)] = jz;
                out.jxy[(a, b)] = jxy;
            }
        }
    }
    if !failures.is_empty() {
        return Err(Error::RegimeViolation { failed: failures });
    }
    Ok(out)
}

/// Two-spin swap time `t_ex = pi / (4 J^xy)`.
pub fn swap_time(jxy: f64) -> Result<f64> {
    if jxy.is_finite() && jxy > 0.0 {
        Ok(PI / (4.0 * jxy))
    } else {
        Err(Error::ZeroCoupling)
    }
}

/// `2 J^z / J^xy = 8 omega_a^2 omega_c_tilde^2 / omega_z^4`; equals one at the
/// isotropic point.
pub fn isotropy_ratio(dq: &DerivedQuantities) -> f64 {
    8.0 / flip_flop_factor(dq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trap::{derive_quantities, TrapParams};
    use approx::assert_relative_eq;

    const TWO_PI: f64 = 2.0 * PI;

    fn c() -> PhysicalConstants {
        PhysicalConstants::CODATA_2018
    }

    fn dq(wc_hz: f64, wz_hz: f64, b: f64, mode: AnomalyMode) -> DerivedQuantities {
        derive_quantities(
            &TrapParams::from_frequencies(TWO_PI * wc_hz, TWO_PI * wz_hz, b, mode, &c()),
            &c(),
        )
        .unwrap()
    }

    fn pair(dq: &DerivedQuantities, d: f64) -> CouplingMatrix {
        let geom = ChainGeometry::uniform(Orientation::AxialZ, 2, d).unwrap();
        coupling_matrix(core::slice::from_ref(dq), &geom, &c(), &CouplingOptions::default())
            .unwrap()
    }

    #[test]
    fn table_a_row_d10() {
        let approx = pair(&dq(8e9, 490e6, 1800.0, AnomalyMode::Approx1e3), 10e-6);
        assert_relative_eq!(approx.jxy[(0, 1)], 2.905_536_228_889_885e4, max_relative = 1e-9);
        // Within a factor two of the tabulated "35" read as 10^3 rad/s.
        let r = approx.jxy[(0, 1)] / 35e3;
        assert!((0.5..2.0).contains(&r));

        let exact = pair(&dq(8e9, 490e6, 1800.0, AnomalyMode::ExactG), 10e-6);
        assert_relative_eq!(exact.jxy[(0, 1)], 2.160_582_213_501_757e4, max_relative = 1e-9);
        assert_relative_eq!(exact.jz[(0, 1)], 8.195_794_532_867_826e3, max_relative = 1e-9);
        assert_eq!(exact.anomaly_mode, AnomalyMode::ExactG);
    }

    #[test]
    fn table_a_row_d50() {
        let m = pair(&dq(8e9, 490e6, 350.0, AnomalyMode::Approx1e3), 50e-6);
        assert_relative_eq!(m.jxy[(0, 1)], 8.788_350_321_950_889, max_relative = 1e-9);
    }

    #[test]
    fn zero_gradient_zero_coupling() {
        let m = pair(&dq(8e9, 490e6, 0.0, AnomalyMode::ExactG), 10e-6);
        assert_eq!(m.jz[(0, 1)], 0.0);
        assert_eq!(m.jxy[(0, 1)], 0.0);
    }

    #[test]
    fn swap_time_values() {
        assert_relative_eq!(swap_time(2.2e4).unwrap(), 3.569_991_651_806_583e-5, max_relative = 1e-12);
        assert_relative_eq!(swap_time(PI / 4.0).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(
            swap_time(2.0 * 1234.5).unwrap(),
            swap_time(1234.5).unwrap() / 2.0,
            max_relative = 1e-15
        );
        assert_eq!(swap_time(0.0), Err(Error::ZeroCoupling));
        assert_eq!(swap_time(-1.0), Err(Error::ZeroCoupling));
    }

    #[test]
    fn isotropy_point() {
        let d = dq(18.8e9, 1e9, 100.0, AnomalyMode::Approx1e3);
        assert!((isotropy_ratio(&d) - 1.0).abs() < 0.01);
        let exact = d.with_anomaly_mode(AnomalyMode::ExactG, &c());
        assert_relative_eq!(isotropy_ratio(&exact), 1.336_325_864_489_21, max_relative = 1e-9);
        let far = dq(60e9, 1e9, 100.0, AnomalyMode::Approx1e3);
        assert!(isotropy_ratio(&far) > 50.0);
        // ratio follows from the matrix entries as well
        let m = pair(&d, 10e-6);
        assert_relative_eq!(
            2.0 * m.jz[(0, 1)] / m.jxy[(0, 1)],
            isotropy_ratio(&d),
            max_relative = 1e-12
        );
    }

    #[test]
    fn closed_forms_agree() {
        let d = dq(8e9, 490e6, 1800.0, AnomalyMode::Approx1e3);
        let m = pair(&d, 10e-6);
        assert_relative_eq!(m.jz[(0, 1)], jz_expanded(&d, 10e-6, &c()), max_relative = 1e-12);
        // The simplified law drops omega_c_tilde -> omega_c, within 1% here.
        let s = jxy_simplified(&d, 10e-6, &c());
        assert_relative_eq!(m.jxy[(0, 1)], s, max_relative = 1e-2);
    }

    #[test]
    fn nearest_neighbour_flag() {
        let d = dq(8e9, 490e6, 1800.0, AnomalyMode::ExactG);
        let geom = ChainGeometry::uniform(Orientation::AxialZ, 4, 10e-6).unwrap();
        let opts = CouplingOptions {
            nearest_neighbor_only: true,
            ..Default::default()
        };
        let m = coupling_matrix(&[d], &geom, &c(), &opts).unwrap();
        assert_eq!(m.jxy[(0, 2)], 0.0);
        assert!(m.jxy[(0, 1)] > 0.0);
        assert!(m.distance[(0, 2)] > 0.0);
        let full = coupling_matrix(&[d], &geom, &c(), &CouplingOptions::default()).unwrap();
        assert_relative_eq!(full.jxy[(0, 2)], full.jxy[(0, 1)] / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn regime_gate() {
        let weak = dq(8e9, 490e6, 1800.0, AnomalyMode::ExactG);
        let strong_b = 0.5 / weak.epsilon * 1800.0;
        let strong = dq(8e9, 490e6, strong_b, AnomalyMode::ExactG);
        let geom = ChainGeometry::uniform(Orientation::AxialZ, 2, 10e-6).unwrap();
        let err = coupling_matrix(&[strong], &geom, &c(), &CouplingOptions::default());
        assert!(matches!(err, Err(Error::RegimeViolation { .. })));
        let forced = CouplingOptions {
            force: true,
            ..Default::default()
        };
        assert!(coupling_matrix(&[strong], &geom, &c(), &forced).is_ok());
    }

    #[test]
    fn per_site_geometric_mean() {
        let a = dq(8e9, 490e6, 1800.0, AnomalyMode::ExactG);
        let b = dq(8e9, 490e6, 900.0, AnomalyMode::ExactG);
        let geom = ChainGeometry::uniform(Orientation::AxialZ, 2, 10e-6).unwrap();
        let m = coupling_matrix(&[a, b], &geom, &c(), &CouplingOptions::default()).unwrap();
        let ma = pair(&a, 10e-6);
        let mb = pair(&b, 10e-6);
        assert_relative_eq!(
            m.jxy[(0, 1)],
            (ma.jxy[(0, 1)] * mb.jxy[(0, 1)]).sqrt(),
            max_relative = 1e-12
        );
        let mixed = dq(8e9, 490e6, 900.0, AnomalyMode::Approx1e3);
        assert!(coupling_matrix(&[a, mixed], &geom, &c(), &CouplingOptions::default()).is_err());
        assert!(coupling_matrix(&[a, a, a], &geom, &c(), &CouplingOptions::default()).is_err());
    }

    #[test]
    fn geometry_validation() {
        assert!(ChainGeometry::new(Orientation::AxialZ, alloc::vec![0.0]).is_err());
        assert!(ChainGeometry::new(Orientation::AxialZ, alloc::vec![0.0, 0.0]).is_err());
        assert!(ChainGeometry::new(Orientation::AxialZ, alloc::vec![1.0, 0.0]).is_err());
        assert!(ChainGeometry::uniform(Orientation::AxialZ, 3, -1.0).is_err());
    }
}

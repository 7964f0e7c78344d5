//! Thermal error budget of the two-spin swap channel:
//! `F = 1 - E_r - eps^2 E_S`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::quadrature::BlochGrid;
use crate::spin_chain::SpinState;
use crate::trap::{AnomalyMode, DerivedQuantities};

use core::f64::consts::{FRAC_PI_2, LN_10};

/// Per-oscillator cutoff cap used unless overridden.
pub const DEFAULT_MAX_CUTOFF: usize = 100_000;
/// Transition estimates above this are flagged.
pub const TRANSITION_FLAG: f64 = 1e-4;

/// Mean excitation numbers of the axial (`k`), cyclotron (`n`) and
/// magnetron (`l`) modes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThermalOccupations {
    pub k_bar: f64,
    pub n_bar: f64,
    pub l_bar: f64,
}

impl ThermalOccupations {
    pub const GROUND: Self = Self {
        k_bar: 0.0,
        n_bar: 0.0,
        l_bar: 0.0,
    };

    pub fn new(k_bar: f64, n_bar: f64, l_bar: f64) -> Result<Self> {
        for (name, v) in [("k_bar", k_bar), ("n_bar", n_bar), ("l_bar", l_bar)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "occupation must be finite and non-negative",
                });
            }
        }
        Ok(Self { k_bar, n_bar, l_bar })
    }

    /// Axial and cyclotron modes thermalised at `temperature` (K); the
    /// magnetron occupation is given separately.
    pub fn from_temperature(
        dq: &DerivedQuantities,
        temperature: f64,
        l_bar: f64,
        consts: &PhysicalConstants,
    ) -> Result<Self> {
        Self::new(
            mean_occupation(dq.omega_z, temperature, consts)?,
            mean_occupation(dq.omega_c, temperature, consts)?,
            l_bar,
        )
    }
}

/// Bose-Einstein mean number `1 / (exp(hbar omega / k_B T) - 1)`.
pub fn mean_occupation(omega: f64, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(temperature.is_finite() && temperature >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "temperature",
            reason: "must be finite and non-negative",
        });
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: "must be positive",
        });
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (consts.hbar * omega / (consts.k_b * temperature)).exp_m1())
}

/// Thermal Fock-state probability `(1/(1+m)) (m/(1+m))^k`.
pub fn thermal_prob(m_bar: f64, m: usize) -> f64 {
    if m_bar == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let q = m_bar / (1.0 + m_bar);
    q.powi(m as i32) / (1.0 + m_bar)
}

/// Highest Fock index kept: `ceil(m_bar ln 1e10) + 10`.
pub fn thermal_cutoff(m_bar: f64) -> usize {
    (m_bar * 10.0 * LN_10).ceil() as usize + 10
}

/// Probability mass above `cutoff`.
pub fn thermal_tail(m_bar: f64, cutoff: usize) -> f64 {
    if m_bar == 0.0 {
        return 0.0;
    }
    (m_bar / (1.0 + m_bar)).powi(cutoff as i32 + 1)
}

fn thermal_weights(m_bar: f64, cutoff: usize) -> Vec<f64> {
    (0..=cutoff).map(|m| thermal_prob(m_bar, m)).collect()
}

/// Bloch-averaged two-spin swap fidelity at `t = pi / (4 J^xy)` for
/// detuning `zeta = delta_s / (4 J^xy)`.
pub fn fd(zeta: f64) -> f64 {
    let r = (1.0 + zeta * zeta).sqrt();
    let s = (FRAC_PI_2 * r).sin();
    (1.0 + (zeta * FRAC_PI_2).cos() * s / r + s * s / (r * r)) / 3.0
}

fn cyclotron_slope(dq: &DerivedQuantities) -> f64 {
    dq.omega_z * dq.omega_z / (2.0 * dq.omega_c * dq.omega_a) - 2.0
}

fn magnetron_slope(dq: &DerivedQuantities) -> f64 {
    dq.omega_z * dq.omega_z / (2.0 * dq.omega_c * dq.omega_c)
}

/// Detuning `omega_2 - omega_1` between two spins whose cyclotron and
/// magnetron modes sit in Fock states `(n1, l1)` and `(n2, l2)`.
pub fn delta_s(dq: &DerivedQuantities, n1: usize, l1: usize, n2: usize, l2: usize) -> f64 {
    delta_s_diff(dq, n2 as f64 - n1 as f64, l2 as f64 - l1 as f64)
}

fn delta_s_diff(dq: &DerivedQuantities, dn: f64, dl: f64) -> f64 {
    let e2 = dq.epsilon * dq.epsilon;
    e2 * dq.omega_z * (cyclotron_slope(dq) * dn - magnetron_slope(dq) * dl)
}

/// Motional-state dependent shift of one spin's precession frequency.
pub fn spin_shift(dq: &DerivedQuantities, n: usize, l: usize) -> f64 {
    let e2 = dq.epsilon * dq.epsilon;
    let base = dq.omega_z * dq.omega_z / (2.0 * dq.omega_c * dq.omega_a);
    e2 * dq.omega_z * (base + cyclotron_slope(dq) * n as f64 - magnetron_slope(dq) * l as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum ResidualMethod {
    /// Four nested sums over `(n1, l1, n2, l2)`.
    Direct,
    /// Sums over `n2 - n1` and `l2 - l1` with exact correlation weights.
    PairDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub method: ResidualMethod,
    pub max_cutoff: usize,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            method: ResidualMethod::PairDifference,
            max_cutoff: DEFAULT_MAX_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualError {
    pub e_r: f64,
    /// Probability mass of the four-mode distribution dropped by truncation.
    pub tail_mass: f64,
    pub n_cutoff: usize,
    pub l_cutoff: usize,
    /// RMS of `delta_s` over the thermal distribution (rad/s).
    pub delta_s_rms: f64,
    pub method: ResidualMethod,
}

/// `w(D) = sum_m P(m) P(m + D)` for `D` in `-M..=M`, index `D + M`.
fn difference_weights(p: &[f64]) -> Vec<f64> {
    let m = p.len() - 1;
    let mut w = alloc::vec![0.0; 2 * m + 1];
    for d in 0..=m {
        let s: f64 = (0..=m - d).map(|k| p[k] * p[k + d]).sum();
        w[m + d] = s;
        w[m - d] = s;
    }
    w
}

/// Residual-coupling error `E_r = 1 - sum P P P P F_d(delta_s / 4 J^xy)`
/// with the default options.
pub fn error_residual(dq: &DerivedQuantities, occ: &ThermalOccupations, jxy: f64) -> Result<ResidualError> {
    error_residual_with(dq, occ, jxy, &ResidualOptions::default())
}

pub fn error_residual_with(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    jxy: f64,
    opts: &ResidualOptions,
) -> Result<ResidualError> {
    if !(jxy.is_finite() && jxy > 0.0) {
        return Err(Error::ZeroCoupling);
    }
    let n_cut = thermal_cutoff(occ.n_bar);
    let l_cut = thermal_cutoff(occ.l_bar);
    for needed in [n_cut, l_cut] {
        if needed > opts.max_cutoff {
            return Err(Error::Truncation {
                needed,
                max: opts.max_cutoff,
            });
        }
    }
    let pn = thermal_weights(occ.n_bar, n_cut);
    let pl = thermal_weights(occ.l_bar, l_cut);
    let kept = pn.iter().sum::<f64>().powi(2) * pl.iter().sum::<f64>().powi(2);
    let scale = 1.0 / (4.0 * jxy);

    let (sum, second_moment) = match opts.method {
        ResidualMethod::Direct => {
            let mut sum = 0.0;
            let mut mom = 0.0;
            for (n1, p_n1) in pn.iter().enumerate() {
                for (n2, p_n2) in pn.iter().enumerate() {
                    for (l1, p_l1) in pl.iter().enumerate() {
                        for (l2, p_l2) in pl.iter().enumerate() {
                            let w = p_n1 * p_n2 * p_l1 * p_l2;
                            let ds = delta_s(dq, n1, l1, n2, l2);
                            sum += w * fd(ds * scale);
                            mom += w * ds * ds;
                        }
                    }
                }
            }
            (sum, mom)
        }
        ResidualMethod::PairDifference => {
            let wn = difference_weights(&pn);
            let wl = difference_weights(&pl);
            let mut sum = 0.0;
            let mut mom = 0.0;
            for (i, w_n) in wn.iter().enumerate() {
                let dn = i as f64 - n_cut as f64;
                for (j, w_l) in wl.iter().enumerate() {
                    let w = w_n * w_l;
                    if w == 0.0 {
                        continue;
                    }
                    let ds = delta_s_diff(dq, dn, j as f64 - l_cut as f64);
                    sum += w * fd(ds * scale);
                    mom += w * ds * ds;
                }
            }
            (sum, mom)
        }
    };

    // Renormalise to the kept mass so truncation only enters at second order.
    Ok(ResidualError {
        e_r: 1.0 - sum / kept,
        tail_mass: 1.0 - kept,
        n_cutoff: n_cut,
        l_cutoff: l_cut,
        delta_s_rms: (second_moment / kept).sqrt(),
        method: opts.method,
    })
}

/// Coupling prefactors in the un-averaged canonical error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum Prefactors {
    /// `g = 2` and `omega_c_tilde = omega_c`, the reductions under which the
    /// closed-form average is stated.
    #[default]
    Reduced,
    /// Actual `g` and `omega_c_tilde`.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalAveraging {
    ClosedForm,
    /// Quadrature of the un-averaged expression with ideal-swap expectations.
    BlochNumeric(BlochGrid),
}

/// Per-site `<sigma^z>` and `<sigma^->` over the initial (`0`) and final
/// (`f`) chain states.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainExpectations {
    pub sigma_z_initial: Vec<f64>,
    pub sigma_z_final: Vec<f64>,
    pub sigma_minus_initial: Vec<Complex64>,
    pub sigma_minus_final: Vec<Complex64>,
}

impl ChainExpectations {
    /// Ideal transfer: sender `(theta, phi)` on site 1 initially, on site N
    /// at the swap time, all other sites down.
    pub fn ideal_swap(n_sites: usize, theta: f64, phi: f64) -> Self {
        let mut z0 = alloc::vec![-1.0; n_sites];
        let mut m0 = alloc::vec![Complex64::new(0.0, 0.0); n_sites];
        z0[0] = -theta.cos();
        m0[0] = Complex64::from_polar(theta.sin() / 2.0, phi);
        let mut zf = z0.clone();
        let mut mf = m0.clone();
        zf.reverse();
        mf.reverse();
        Self {
            sigma_z_initial: z0,
            sigma_z_final: zf,
            sigma_minus_initial: m0,
            sigma_minus_final: mf,
        }
    }

    pub fn from_states(initial: &SpinState, fin: &SpinState) -> Result<Self> {
        let n = initial.n_sites();
        if fin.n_sites() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: fin.n_sites(),
            });
        }
        Ok(Self {
            sigma_z_initial: (0..n).map(|i| initial.sigma_z(i)).collect(),
            sigma_z_final: (0..n).map(|i| fin.sigma_z(i)).collect(),
            sigma_minus_initial: (0..n).map(|i| initial.sigma_minus(i)).collect(),
            sigma_minus_final: (0..n).map(|i| fin.sigma_minus(i)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.sigma_z_initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_z_initial.is_empty()
    }
}

/// Canonical-transformation error for one initial/final pair of chain states.
pub fn error_canonical_unaveraged(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    ex: &ChainExpectations,
    prefactors: Prefactors,
    g: f64,
) -> f64 {
    let (g, wct) = match prefactors {
        Prefactors::Reduced => (2.0, dq.omega_c),
        Prefactors::Exact => (g, dq.omega_c_tilde),
    };
    let q4 = (g / 4.0).powi(2);
    let a = (dq.omega_z / dq.omega_a).powi(2);
    let b = (dq.omega_z / (dq.omega_s - dq.omega_m)).powi(2);
    let ThermalOccupations { k_bar, n_bar, l_bar } = *occ;
    let motion = n_bar + dq.omega_m / dq.omega_c * l_bar;

    let mut total = 0.0;
    for i in 0..ex.len() {
        let z0 = ex.sigma_z_initial[i];
        let zf = ex.sigma_z_final[i];
        // <sigma^+> = conj(<sigma^->)
        let coh = ex.sigma_minus_initial[i].norm_sqr() + ex.sigma_minus_final[i].norm_sqr();
        let axial = (q4 * (2.0 - z0 * z0 - zf * zf) + g / 2.0 * (z0 - zf) * motion) * (2.0 * k_bar + 1.0);
        let radial = q4
            * dq.omega_z
            / wct
            * (a * (2.0 * n_bar + 1.0 + z0) + b * (2.0 * l_bar + 1.0 - z0)
                - (a * (2.0 * n_bar + 1.0) + b * (2.0 * l_bar + 1.0)) * coh);
        total += axial + radial;
    }
    total
}

/// Bloch-averaged canonical error for an `n_sites` chain at the swap time.
pub fn error_canonical(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    n_sites: usize,
    averaging: &CanonicalAveraging,
) -> Result<f64> {
    if n_sites < 2 {
        return Err(Error::InvalidParameter {
            name: "n_sites",
            reason: "need at least two sites",
        });
    }
    Ok(match averaging {
        CanonicalAveraging::ClosedForm => {
            let ThermalOccupations { k_bar, n_bar, l_bar } = *occ;
            let m = (n_sites - 1) as f64;
            let a = (dq.omega_z / dq.omega_a).powi(2);
            let b = (dq.omega_z / (dq.omega_s - dq.omega_m)).powi(2);
            (2.0 * k_bar + 1.0) / 3.0
                + dq.omega_z / (6.0 * dq.omega_c)
                    * (a * (2.0 * n_bar + 1.0 + 3.0 * m * n_bar)
                        + b * (2.0 * l_bar + 1.0 + 3.0 * m * (l_bar + 1.0)))
        }
        CanonicalAveraging::BlochNumeric(grid) => grid.average(|theta, phi| {
            let ex = ChainExpectations::ideal_swap(n_sites, theta, phi);
            error_canonical_unaveraged(dq, occ, &ex, Prefactors::Reduced, 2.0)
        }),
    })
}

/// Two-electron canonical error written in terms of the excitation numbers.
pub fn error_canonical_pair(dq: &DerivedQuantities, occ: &ThermalOccupations) -> f64 {
    let ThermalOccupations { k_bar, n_bar, l_bar } = *occ;
    let wz3 = dq.omega_z.powi(3);
    (2.0 * k_bar + 1.0) / 3.0
        + wz3 / (6.0 * dq.omega_a.powi(2) * dq.omega_c) * (5.0 * n_bar + 1.0)
        + wz3 / (6.0 * (dq.omega_s - dq.omega_m).powi(2) * dq.omega_c) * (5.0 * l_bar + 4.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TransitionEstimate {
    pub label: &'static str,
    pub probability: f64,
    pub flagged: bool,
}

/// Order-of-magnitude transition probabilities for each class of residual
/// coupling.
pub fn transition_probabilities(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    xi: f64,
) -> Vec<TransitionEstimate> {
    let e2 = dq.epsilon * dq.epsilon;
    let e4 = e2 * e2;
    let (wz, wc, wa, wm) = (dq.omega_z, dq.omega_c, dq.omega_a, dq.omega_m);
    let dw = (wc - wz).min(wz - wm).min(wc + wm);
    let cross = e2 * (xi / wz).powi(2);
    let raw = [
        (
            "axial-cyclotron-spin",
            e4 * wz.powi(3) / (wc * (wz - wa).powi(2)) * occ.k_bar * occ.n_bar,
        ),
        ("same-particle motional", e4 * (wz / dw).powi(2)),
        ("cross-particle axial", cross),
        (
            "cross-particle cyclotron",
            cross * (wz / wc).powi(3) * (wz / wa).powi(4),
        ),
    ];
    raw.into_iter()
        .map(|(label, probability)| TransitionEstimate {
            label,
            probability,
            flagged: probability > TRANSITION_FLAG,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FidelityReport {
    pub f_total: f64,
    /// `1 - eps^2 E_S`, the budget without residual couplings.
    pub f_canonical_only: f64,
    pub e_r: f64,
    pub e_s: f64,
    pub eps2_e_s: f64,
    pub delta_s_rms: f64,
    pub tail_mass: f64,
    pub n_cutoff: usize,
    pub l_cutoff: usize,
    pub n_sites: usize,
    pub anomaly_mode: AnomalyMode,
    /// `E_r` for more than two sites is the nearest-neighbour pair value.
    pub e_r_heuristic: bool,
    pub warnings: Vec<String>,
}

impl FidelityReport {
    pub fn in_range(&self) -> bool {
        (0.0..=1.0).contains(&self.f_total)
    }
}

/// `F = 1 - E_r - eps^2 E_S` with `E_S` in closed form. `jxy` is the
/// (nearest-neighbour) flip-flop coupling.
pub fn total_fidelity(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    jxy: f64,
    n_sites: usize,
) -> Result<FidelityReport> {
    total_fidelity_with(dq, occ, jxy, n_sites, &ResidualOptions::default())
}

pub fn total_fidelity_with(
    dq: &DerivedQuantities,
    occ: &ThermalOccupations,
    jxy: f64,
    n_sites: usize,
    opts: &ResidualOptions,
) -> Result<FidelityReport> {
    let residual = error_residual_with(dq, occ, jxy, opts)?;
    let e_s = error_canonical(dq, occ, n_sites, &CanonicalAveraging::ClosedForm)?;
    let eps2_e_s = dq.epsilon * dq.epsilon * e_s;
    let f_total = 1.0 - residual.e_r - eps2_e_s;

    let mut warnings = Vec::new();
    if !(0.0..=1.0).contains(&f_total) {
        warnings.push(format!("F = {f_total:.6e} outside [0, 1]: perturbative expansion unreliable"));
    }
    if residual.tail_mass > 1e-8 {
        warnings.push(format!("thermal truncation tail {:.3e}", residual.tail_mass));
    }
    if n_sites > 2 {
        warnings.push(String::from("E_r uses the two-spin nearest-neighbour value (heuristic extension)"));
    }
    if dq.has_hierarchy_warning() {
        warnings.push(String::from("frequency hierarchy separation below 10"));
    }
    Ok(FidelityReport {
        f_total,
        f_canonical_only: 1.0 - eps2_e_s,
        e_r: residual.e_r,
        e_s,
        eps2_e_s,
        delta_s_rms: residual.delta_s_rms,
        tail_mass: residual.tail_mass,
        n_cutoff: residual.n_cutoff,
        l_cutoff: residual.l_cutoff,
        n_sites,
        anomaly_mode: dq.anomaly_mode,
        e_r_heuristic: n_sites > 2,
        warnings,
    })
}

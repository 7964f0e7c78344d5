//! Brute-force checks of the effective spin model.
//!
//! * A two-electron simulation in a truncated Fock space (spin, cyclotron
//!   and axial mode per electron, magnetron dropped) of the unrotated
//!   Hamiltonian, from which the effective couplings are measured.
//! * Exact evolution of the 4x4 detuned two-spin Hamiltonian.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::couplings::Orientation;
use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, max_off_sector, SectorSpectrum, Spectrum};
use crate::quadrature::BlochGrid;
use crate::trap::{AnomalyMode, DerivedQuantities};

use core::f64::consts::PI;

/// Default cap on the two-electron Hilbert-space dimension.
pub const DEFAULT_DIM_LIMIT: usize = 2500;
/// Grid points used to locate the first population maximum.
pub const FIT_POINTS: usize = 4096;
/// Minimum population contrast for a fit to count.
pub const MIN_CONTRAST: f64 = 0.9;
/// Minimum dressed/bare overlap for state tracking.
pub const MIN_OVERLAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FockTruncation {
    /// Highest cyclotron Fock state kept.
    pub n_max: usize,
    /// Highest axial Fock state kept.
    pub k_max: usize,
}

impl FockTruncation {
    pub fn new(n_max: usize, k_max: usize) -> Result<Self> {
        if n_max < 1 || k_max < 1 {
            return Err(Error::InvalidParameter {
                name: "truncation",
                reason: "cutoffs must be at least 1",
            });
        }
        Ok(Self { n_max, k_max })
    }

    pub fn uniform(cutoff: usize) -> Result<Self> {
        Self::new(cutoff, cutoff)
    }

    pub fn electron_dim(&self) -> usize {
        2 * (self.n_max + 1) * (self.k_max + 1)
    }

    pub fn dimension(&self) -> usize {
        self.electron_dim() * self.electron_dim()
    }
}

/// Single-electron parameters entering the microscopic Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ElectronModel {
    pub omega_c: f64,
    pub omega_z: f64,
    pub omega_a: f64,
    pub epsilon: f64,
    pub g: f64,
}

impl ElectronModel {
    pub fn from_derived(dq: &DerivedQuantities, g: f64) -> Self {
        Self {
            omega_c: dq.omega_c,
            omega_z: dq.omega_z,
            omega_a: dq.omega_a,
            epsilon: dq.epsilon,
            g,
        }
    }

    /// Units where `omega_z = 1`, with `omega_c = ratio`.
    pub fn dimensionless(ratio: f64, epsilon: f64, mode: AnomalyMode, g: f64) -> Self {
        let omega_a = match mode {
            AnomalyMode::ExactG => (g / 2.0 - 1.0) * ratio,
            AnomalyMode::Approx1e3 => 1e-3 * ratio,
        };
        Self {
            omega_c: ratio,
            omega_z: 1.0,
            omega_a,
            epsilon,
            g,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    /// Spin precession `omega_c + omega_a`.
    pub fn omega_s(&self) -> f64 {
        self.omega_c + self.omega_a
    }

    pub fn omega_c_tilde(&self) -> f64 {
        (self.omega_c * self.omega_c - 2.0 * self.omega_z * self.omega_z).sqrt()
    }

    /// Spin-cyclotron exchange rate.
    pub fn spin_cyclotron_rate(&self) -> f64 {
        self.g / 4.0 * self.epsilon * self.omega_z * (self.omega_z / self.omega_c_tilde()).sqrt()
    }

    /// `g_c / omega_a`; the effective couplings hold when this is small.
    pub fn dispersive_parameter(&self) -> f64 {
        self.spin_cyclotron_rate() / self.omega_a
    }

    fn flip_flop_factor(&self) -> f64 {
        self.omega_z.powi(4) / (self.omega_a.powi(2) * self.omega_c_tilde().powi(2))
    }

    fn validate(&self) -> Result<()> {
        let all = [self.omega_c, self.omega_z, self.omega_a, self.g];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) || !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "electron",
                reason: "frequencies and g must be positive, epsilon non-negative",
            });
        }
        if self.omega_c * self.omega_c <= 2.0 * self.omega_z * self.omega_z {
            return Err(Error::ComplexFrequency);
        }
        Ok(())
    }
}

/// Two electrons in a truncated Fock space. Basis order per electron is
/// spin `{down, up}` x cyclotron x axial, electron 1 first.
#[derive(Debug, Clone)]
pub struct MicroscopicSystem {
    pub electrons: [ElectronModel; 2],
    pub xi: f64,
    pub orientation: Orientation,
    pub truncation: FockTruncation,
    pub hamiltonian: DMatrix<f64>,
    spectrum: SectorSpectrum,
}

fn annihilation(cutoff: usize) -> DMatrix<f64> {
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 })
}

fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        out = out.kronecker(*f);
    }
    out
}

struct Operators {
    sz: DMatrix<f64>,
    sp: DMatrix<f64>,
    sm: DMatrix<f64>,
    a: DMatrix<f64>,
    ad: DMatrix<f64>,
    b: DMatrix<f64>,
    bd: DMatrix<f64>,
    id_s: DMatrix<f64>,
    id_c: DMatrix<f64>,
    id_z: DMatrix<f64>,
}

impl Operators {
    fn new(t: &FockTruncation) -> Self {
        let a = annihilation(t.n_max);
        let b = annihilation(t.k_max);
        // {down, up}: sigma^+ |down> = |up>
        let sp = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        Self {
            sz: DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
            sm: sp.transpose(),
            sp,
            ad: a.transpose(),
            bd: b.transpose(),
            a,
            b,
            id_s: DMatrix::identity(2, 2),
            id_c: DMatrix::identity(t.n_max + 1, t.n_max + 1),
            id_z: DMatrix::identity(t.k_max + 1, t.k_max + 1),
        }
    }

    /// Operator acting as `(s, c, z)` on `electron` and identity elsewhere.
    fn on(&self, electron: usize, s: &DMatrix<f64>, c: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
        let local = kron_all(&[s, c, z]);
        let id = kron_all(&[&self.id_s, &self.id_c, &self.id_z]);
        if electron == 0 {
            local.kronecker(&id)
        } else {
            id.kronecker(&local)
        }
    }
}

/// Assembles the two-electron Hamiltonian (rad/s):
///
/// per electron `omega_c a^+a + omega_z b^+b + (omega_s/2) s^z +
/// (g/4) eps omega_z (b + b^+) s^z - g_c (s^+ a + s^- a^+)`, plus the
/// Coulomb cross terms
///
/// * `AxialZ`: `-2 xi X_1 X_2 + 2 xi (omega_z/omega_c_tilde) (a_1 a_2^+ + a_1^+ a_2)`
/// * `TransverseX`: `+xi X_1 X_2 - xi (omega_z/omega_c_tilde) (a_1 a_2^+ + a_1^+ a_2)`
///
/// with `X = b + b^+`.
pub fn build_microscopic(
    electrons: [ElectronModel; 2],
    xi: f64,
    orientation: Orientation,
    truncation: FockTruncation,
    dim_limit: usize,
) -> Result<MicroscopicSystem> {
    for e in &electrons {
        e.validate()?;
    }
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "xi",
            reason: "must be finite and non-negative",
        });
    }
    let dim = truncation.dimension();
    if dim > dim_limit {
        return Err(Error::DimensionOverflow {
            requested: dim,
            limit: dim_limit,
        });
    }
    let ops = Operators::new(&truncation);
    let mut h = DMatrix::zeros(dim, dim);
    let num_c = &ops.ad * &ops.a;
    let num_z = &ops.bd * &ops.b;
    let xz = &ops.b + &ops.bd;
    for (i, e) in electrons.iter().enumerate() {
        h += ops.on(i, &ops.id_s, &num_c, &ops.id_z) * e.omega_c;
        h += ops.on(i, &ops.id_s, &ops.id_c, &num_z) * e.omega_z;
        h += ops.on(i, &ops.sz, &ops.id_c, &ops.id_z) * (e.omega_s() / 2.0);
        h += ops.on(i, &ops.sz, &ops.id_c, &xz) * (e.g / 4.0 * e.epsilon * e.omega_z);
        let jc = ops.on(i, &ops.sp, &ops.a, &ops.id_z) + ops.on(i, &ops.sm, &ops.ad, &ops.id_z);
        h -= jc * e.spin_cyclotron_rate();
    }
    let ratio = (electrons[0].omega_z / electrons[0].omega_c_tilde()
        * electrons[1].omega_z
        / electrons[1].omega_c_tilde())
    .sqrt();
    // Products of single-electron operators on different electrons are
    // Kronecker products of the local factors.
    let x_local = kron_all(&[&ops.id_s, &ops.id_c, &xz]);
    let a_local = kron_all(&[&ops.id_s, &ops.a, &ops.id_z]);
    let ad_local = a_local.transpose();
    let axial = x_local.kronecker(&x_local);
    let exchange = a_local.kronecker(&ad_local) + ad_local.kronecker(&a_local);
    let (ax, cy) = match orientation {
        Orientation::AxialZ => (-2.0 * xi, 2.0 * xi * ratio),
        Orientation::TransverseX => (xi, -xi * ratio),
    };
    h += axial * ax + exchange * cy;

    let scale = h.amax().max(f64::MIN_POSITIVE);
    if max_asymmetry(&h) > 1e-10 * scale {
        return Err(Error::InvalidParameter {
            name: "hamiltonian",
            reason: "assembled matrix is not symmetric",
        });
    }
    let label = excitation_label(truncation);
    let spectrum = SectorSpectrum::build(dim, &label, |r, c| h[(r, c)])?;
    Ok(MicroscopicSystem {
        electrons,
        xi,
        orientation,
        truncation,
        hamiltonian: h,
        spectrum,
    })
}

/// Cyclotron quanta plus up spins of a basis index.
fn excitation_label(t: FockTruncation) -> impl Fn(usize) -> i64 {
    let c = t.n_max + 1;
    let k = t.k_max + 1;
    let per = 2 * c * k;
    move |idx| {
        let mut total = 0;
        for local in [idx / per, idx % per] {
            let spin = local / (c * k);
            let n = (local / k) % c;
            total += spin + n;
        }
        total as i64
    }
}

/// Spin configuration of two electrons, `true` = up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinPair(pub bool, pub bool);

impl MicroscopicSystem {
    pub fn dim(&self) -> usize {
        self.truncation.dimension()
    }

    /// Basis index with both motions in the ground state.
    pub fn motional_ground_index(&self, spins: SpinPair) -> usize {
        let t = &self.truncation;
        let block = (t.n_max + 1) * (t.k_max + 1);
        let per = 2 * block;
        usize::from(spins.0) * block * per + usize::from(spins.1) * block
    }

    /// Largest matrix element between different excitation-number sectors.
    pub fn excitation_leakage(&self) -> f64 {
        max_off_sector(&self.hamiltonian, excitation_label(self.truncation))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_asymmetry(&self.hamiltonian)
    }

    /// Sorted eigenvalues of the full matrix.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = self.spectrum.eigenvalues();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Analytic `J^xy` for this pair.
    pub fn predicted_jxy(&self) -> f64 {
        let [a, b] = &self.electrons;
        (a.g * b.g).sqrt().powi(2) / 16.0
            * self.xi
            * a.epsilon
            * b.epsilon
            * (a.flip_flop_factor() * b.flip_flop_factor()).sqrt()
    }

    /// Analytic `J^z` for this pair.
    pub fn predicted_jz(&self) -> f64 {
        let [a, b] = &self.electrons;
        a.g * b.g / 4.0 * self.xi * a.epsilon * b.epsilon
    }

    /// Effective `<du|H|ud>` predicted for the orientation: `2 J^xy` axial,
    /// `-J^xy` transverse.
    pub fn predicted_flip_flop_element(&self) -> f64 {
        match self.orientation {
            Orientation::AxialZ => 2.0 * self.predicted_jxy(),
            Orientation::TransverseX => -self.predicted_jxy(),
        }
    }

    /// Effective `sigma^z sigma^z` coefficient predicted for the orientation.
    pub fn predicted_zz_coefficient(&self) -> f64 {
        match self.orientation {
            Orientation::AxialZ => -2.0 * self.predicted_jz(),
            Orientation::TransverseX => self.predicted_jz(),
        }
    }

    /// Energy of the dressed state closest to `bare` (a real vector in the
    /// full basis supported on one excitation sector), with the overlap.
    fn dressed(&self, bare: &[(usize, f64)]) -> Result<(f64, f64, i64)> {
        let label = excitation_label(self.truncation);
        let l = label(bare[0].0);
        let sector = self.spectrum.sector(l).ok_or(Error::Eigen)?;
        let mut local = DVector::zeros(sector.indices.len());
        for &(idx, amp) in bare {
            let pos = sector.indices.iter().position(|&i| i == idx).ok_or(Error::Eigen)?;
            local[pos] = amp;
        }
        let (k, _) = sector.spectrum.best_match(&local);
        // Weight in the whole (possibly degenerate) eigenspace of the match.
        let values = &sector.spectrum.values;
        let tol = 1e-12 * values.amax().max(1.0);
        let proj = sector.spectrum.vectors.tr_mul(&local);
        let overlap = (0..values.len())
            .filter(|&j| (values[j] - values[k]).abs() <= tol)
            .map(|j| proj[j] * proj[j])
            .sum();
        Ok((values[k], overlap, l))
    }

    fn track(&self, state: &'static str, bare: &[(usize, f64)]) -> Result<f64> {
        let (e, overlap, _) = self.dressed(bare)?;
        if overlap < MIN_OVERLAP {
            return Err(Error::StateTrackingFailure { state, overlap });
        }
        Ok(e)
    }

    /// Dressed energies of `(|ud> + |du>)/sqrt2` and `(|ud> - |du>)/sqrt2`
    /// with motion in the ground state, plus their overlaps.
    pub fn flip_flop_doublet(&self) -> Result<FlipFlopDoublet> {
        let ud = self.motional_ground_index(SpinPair(true, false));
        let du = self.motional_ground_index(SpinPair(false, true));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (e_sym, o_sym, _) = self.dressed(&[(ud, h), (du, h)])?;
        let (e_asym, o_asym, _) = self.dressed(&[(ud, h), (du, -h)])?;
        Ok(FlipFlopDoublet {
            e_sym,
            e_asym,
            overlap_sym: o_sym,
            overlap_asym: o_asym,
        })
    }

    /// `|<du, 0, 0| exp(-i H t) |ud, 0, 0>|^2` on a time grid.
    pub fn swap_population(&self, times: &[f64]) -> Result<Vec<f64>> {
        let ud = self.motional_ground_index(SpinPair(true, false));
        let du = self.motional_ground_index(SpinPair(false, true));
        let label = excitation_label(self.truncation);
        let sector = self.spectrum.sector(label(ud)).ok_or(Error::Eigen)?;
        let pos = |idx: usize| sector.indices.iter().position(|&i| i == idx).ok_or(Error::Eigen);
        let (p_ud, p_du) = (pos(ud)?, pos(du)?);
        let v = &sector.spectrum.vectors;
        let weights: Vec<f64> = (0..v.ncols()).map(|k| v[(p_du, k)] * v[(p_ud, k)]).collect();
        Ok(times
            .iter()
            .map(|&t| {
                weights
                    .iter()
                    .zip(sector.spectrum.values.iter())
                    .map(|(w, e)| Complex64::from_polar(*w, -e * t))
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlipFlopDoublet {
    pub e_sym: f64,
    pub e_asym: f64,
    pub overlap_sym: f64,
    pub overlap_asym: f64,
}

impl FlipFlopDoublet {
    /// `E_sym - E_asym`, twice the effective flip-flop matrix element.
    pub fn splitting(&self) -> f64 {
        self.e_sym - self.e_asym
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum JxyMethod {
    /// Symmetric/antisymmetric level splitting.
    Splitting,
    /// First maximum of the swap population.
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct JxyMeasurement {
    /// Signed `<du|H_eff|ud> / 2`; compare with the prediction's sign
    /// convention via [`MicroscopicSystem::predicted_flip_flop_element`].
    pub jxy: f64,
    /// Effective flip-flop element `<du|H_eff|ud>`.
    pub flip_flop_element: f64,
    pub method: JxyMethod,
    /// Peak swap population (fit only).
    pub contrast: Option<f64>,
}

/// Measures the flip-flop coupling. The splitting method gives
/// `J = (E_sym - E_asym)/4`; the fit method locates the first maximum of
/// the swap population on [`FIT_POINTS`] points over two predicted periods,
/// refines it quadratically and returns `pi / (4 t_peak)` with the sign of
/// the splitting.
pub fn extract_effective_jxy(sys: &MicroscopicSystem, method: JxyMethod) -> Result<JxyMeasurement> {
    let doublet = sys.flip_flop_doublet()?;
    let split = doublet.splitting();
    match method {
        JxyMethod::Splitting => Ok(JxyMeasurement {
            jxy: split / 4.0,
            flip_flop_element: split / 2.0,
            method,
            contrast: None,
        }),
        JxyMethod::Fit => {
            let predicted = sys.predicted_flip_flop_element().abs();
            if predicted == 0.0 {
                return Ok(JxyMeasurement {
                    jxy: 0.0,
                    flip_flop_element: 0.0,
                    method,
                    contrast: Some(0.0),
                });
            }
            // Population oscillates at 2 |element|.
            let period = PI / predicted;
            let t_end = 2.0 * period;
            let dt = t_end / (FIT_POINTS - 1) as f64;
            let times: Vec<f64> = (0..FIT_POINTS).map(|k| k as f64 * dt).collect();
            let pop = sys.swap_population(&times)?;
            let contrast = pop.iter().copied().fold(0.0, f64::max);
            if contrast < MIN_CONTRAST {
                return Err(Error::FitFailure { contrast });
            }
            // First lobe above half contrast; its maximum is the peak. Fast
            // dressed-state ripples alias into the grid, so no local-maximum
            // test on raw neighbours.
            let threshold = 0.5 * contrast;
            let start = pop.iter().position(|&p| p >= threshold).ok_or(Error::FitFailure { contrast })?;
            let end = pop[start..]
                .iter()
                .position(|&p| p < threshold)
                .map_or(FIT_POINTS, |e| start + e);
            let k = (start..end)
                .max_by(|&a, &b| pop[a].total_cmp(&pop[b]))
                .filter(|&k| k > 0 && k + 1 < FIT_POINTS)
                .ok_or(Error::FitFailure { contrast })?;
            let (y0, y1, y2) = (pop[k - 1], pop[k], pop[k + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            let shift = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
            let t_peak = (k as f64 + shift) * dt;
            let magnitude = PI / (4.0 * t_peak);
            let jxy = magnitude.copysign(split);
            Ok(JxyMeasurement {
                jxy,
                flip_flop_element: 2.0 * jxy,
                method,
                contrast: Some(contrast),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct JzMeasurement {
    /// `-[E(uu) + E(dd) - E(sym) - E(asym)] / 8`.
    pub jz: f64,
    pub min_overlap: f64,
}

/// Measures the Ising coupling from dressed energies of the four spin
/// configurations with motion in the ground state.
pub fn extract_effective_jz(sys: &MicroscopicSystem) -> Result<JzMeasurement> {
    let e_uu = sys.track("up-up", &[(sys.motional_ground_index(SpinPair(true, true)), 1.0)])?;
    let e_dd = sys.track("down-down", &[(sys.motional_ground_index(SpinPair(false, false)), 1.0)])?;
    let d = sys.flip_flop_doublet()?;
    for (state, overlap) in [("symmetric", d.overlap_sym), ("antisymmetric", d.overlap_asym)] {
        if overlap < MIN_OVERLAP {
            return Err(Error::StateTrackingFailure { state, overlap });
        }
    }
    Ok(JzMeasurement {
        jz: -(e_uu + e_dd - d.e_sym - d.e_asym) / 8.0,
        min_overlap: d.overlap_sym.min(d.overlap_asym),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvergenceRow {
    pub cutoff: usize,
    pub dim: usize,
    pub flip_flop_measured: f64,
    pub flip_flop_predicted: f64,
    pub jz_measured: Option<f64>,
    pub jz_predicted: f64,
}

impl ConvergenceRow {
    pub fn flip_flop_ratio(&self) -> f64 {
        self.flip_flop_measured / self.flip_flop_predicted
    }
}

/// Splitting-based flip-flop element and `J^z` for identical electrons at
/// each uniform cutoff.
pub fn convergence_table(
    electron: ElectronModel,
    xi: f64,
    orientation: Orientation,
    cutoffs: &[usize],
    dim_limit: usize,
) -> Result<Vec<ConvergenceRow>> {
    cutoffs
        .iter()
        .map(|&c| {
            let sys = build_microscopic([electron; 2], xi, orientation, FockTruncation::uniform(c)?, dim_limit)?;
            let j = extract_effective_jxy(&sys, JxyMethod::Splitting)?;
            Ok(ConvergenceRow {
                cutoff: c,
                dim: sys.dim(),
                flip_flop_measured: j.flip_flop_element,
                flip_flop_predicted: sys.predicted_flip_flop_element(),
                jz_measured: extract_effective_jz(&sys).ok().map(|m| m.jz),
                jz_predicted: sys.predicted_jz(),
            })
        })
        .collect()
}

/// Exponent `p` in `J ~ eps^p` from two measurements.
pub fn scaling_exponent(j1: f64, eps1: f64, j2: f64, eps2: f64) -> f64 {
    (j1 / j2).abs().ln() / (eps1 / eps2).ln()
}

/// The detuned two-spin Hamiltonian in the `{dd, du, ud, uu}` basis:
/// `(omega_1/2) s^z_1 + (omega_2/2) s^z_2 + 2 J^xy (s^+_1 s^-_2 + s^-_1 s^+_2)
/// - 2 J^z s^z_1 s^z_2`, built from Kronecker products.
pub fn hsd_hamiltonian(omega1: f64, omega2: f64, jxy: f64, jz: f64) -> DMatrix<f64> {
    let sz = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let sp = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let sm = sp.transpose();
    let id = DMatrix::<f64>::identity(2, 2);
    sz.kronecker(&id) * (omega1 / 2.0)
        + id.kronecker(&sz) * (omega2 / 2.0)
        + (sp.kronecker(&sm) + sm.kronecker(&sp)) * (2.0 * jxy)
        - sz.kronecker(&sz) * (2.0 * jz)
}

/// Propagator `exp(-i H_sd t)`, columns are evolved basis states.
pub fn hsd_propagator(omega1: f64, omega2: f64, jxy: f64, jz: f64, t: f64) -> Result<DMatrix<Complex64>> {
    let s = Spectrum::new(hsd_hamiltonian(omega1, omega2, jxy, jz))?;
    let mut u = DMatrix::zeros(4, 4);
    for c in 0..4 {
        let mut e = DVector::zeros(4);
        e[c] = Complex64::new(1.0, 0.0);
        u.set_column(c, &s.evolve(&e, t));
    }
    Ok(u)
}

/// Bloch-averaged `|<psi_ideal(t)|psi(t)>|^2`, where `psi` evolves under the
/// detuned Hamiltonian and `psi_ideal` under the same Hamiltonian with both
/// spins at `omega1`. The sender state sits on spin 1, spin 2 starts down.
pub fn hsd_fidelity(omega1: f64, omega2: f64, jxy: f64, jz: f64, t: f64) -> Result<f64> {
    hsd_fidelity_on(omega1, omega2, jxy, jz, t, &BlochGrid::default())
}

pub fn hsd_fidelity_on(omega1: f64, omega2: f64, jxy: f64, jz: f64, t: f64, grid: &BlochGrid) -> Result<f64> {
    let u = hsd_propagator(omega1, omega2, jxy, jz, t)?;
    let u0 = hsd_propagator(omega1, omega1, jxy, jz, t)?;
    // basis {dd, du, ud, uu}; sender on spin 1 means dd and ud.
    Ok(grid.average(|theta, phi| {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::from_polar((theta / 2.0).sin(), phi);
        let psi = u.column(0) * c + u.column(2) * s;
        let ideal = u0.column(0) * c + u0.column(2) * s;
        ideal.dotc(&psi).norm_sqr()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::fd;
    use approx::assert_relative_eq;

    fn electron(eps: f64) -> ElectronModel {
        ElectronModel::dimensionless(20.0, eps, AnomalyMode::ExactG, crate::PhysicalConstants::CODATA_2018.g)
    }

    #[test]
    fn truncation_limits() {
        assert!(FockTruncation::new(0, 2).is_err());
        let t = FockTruncation::uniform(3).unwrap();
        assert_eq!(t.dimension(), 1024);
        let big = FockTruncation::uniform(6).unwrap();
        assert!(matches!(
            build_microscopic([electron(0.03); 2], 1e-3, Orientation::AxialZ, big, DEFAULT_DIM_LIMIT),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn ladder_commutator() {
        let a = annihilation(4);
        let comm = &a * a.transpose() - a.transpose() * &a;
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn decoupled_spectrum_is_free_ladders() {
        let e = electron(0.0);
        let sys = build_microscopic([e; 2], 0.0, Orientation::AxialZ, FockTruncation::new(1, 2).unwrap(), DEFAULT_DIM_LIMIT)
            .unwrap();
        let mut free = Vec::new();
        for s1 in [-1.0, 1.0] {
            for n1 in 0..2 {
                for k1 in 0..3 {
                    for s2 in [-1.0, 1.0] {
                        for n2 in 0..2 {
                            for k2 in 0..3 {
                                free.push(
                                    e.omega_c * (n1 + n2) as f64
                                        + e.omega_z * (k1 + k2) as f64
                                        + e.omega_s() / 2.0 * (s1 + s2),
                                );
                            }
                        }
                    }
                }
            }
        }
        free.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in sys.eigenvalues().iter().zip(&free) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn excitation_number_conserved_and_symmetric() {
        for orientation in [Orientation::AxialZ, Orientation::TransverseX] {
            let sys = build_microscopic(
                [electron(0.06), electron(0.04)],
                2e-3,
                orientation,
                FockTruncation::new(2, 3).unwrap(),
                DEFAULT_DIM_LIMIT,
            )
            .unwrap();
            let scale = sys.hamiltonian.amax();
            assert!(sys.excitation_leakage() < 1e-10 * scale);
            assert!(sys.hermiticity_residual() < 1e-10 * scale);
        }
    }

    #[test]
    fn zero_gradient_or_zero_coulomb_gives_no_coupling() {
        let t = FockTruncation::uniform(2).unwrap();
        let sys = build_microscopic([electron(0.0); 2], 1e-3, Orientation::AxialZ, t, DEFAULT_DIM_LIMIT).unwrap();
        let j = extract_effective_jxy(&sys, JxyMethod::Fit).unwrap();
        assert_eq!(j.jxy, 0.0);
        assert!(extract_effective_jxy(&sys, JxyMethod::Splitting).unwrap().jxy.abs() < 1e-12);
        assert!(extract_effective_jz(&sys).unwrap().jz.abs() < 1e-12);
        let sys = build_microscopic([electron(0.05); 2], 0.0, Orientation::AxialZ, t, DEFAULT_DIM_LIMIT).unwrap();
        assert!(extract_effective_jz(&sys).unwrap().jz.abs() < 1e-12);
    }

    #[test]
    fn dispersive_regime_matches_prediction() {
        let t = FockTruncation::uniform(2).unwrap();
        let sys = build_microscopic([electron(0.03); 2], 1e-4, Orientation::AxialZ, t, DEFAULT_DIM_LIMIT).unwrap();
        let split = extract_effective_jxy(&sys, JxyMethod::Splitting).unwrap();
        let fit = extract_effective_jxy(&sys, JxyMethod::Fit).unwrap();
        let predicted = sys.predicted_flip_flop_element();
        assert!((split.flip_flop_element / predicted - 1.0).abs() < 0.15);
        assert!((fit.jxy / split.jxy - 1.0).abs() < 2e-2, "{fit:?} {split:?}");
        assert!(fit.contrast.unwrap() > MIN_CONTRAST);
        let jz = extract_effective_jz(&sys).unwrap();
        assert!((jz.jz / sys.predicted_jz() - 1.0).abs() < 0.15, "{jz:?} {}", sys.predicted_jz());
    }

    #[test]
    fn transverse_sign_is_reversed() {
        let t = FockTruncation::uniform(2).unwrap();
        let z = build_microscopic([electron(0.03); 2], 1e-4, Orientation::AxialZ, t, DEFAULT_DIM_LIMIT).unwrap();
        let x = build_microscopic([electron(0.03); 2], 1e-4, Orientation::TransverseX, t, DEFAULT_DIM_LIMIT).unwrap();
        let jz = extract_effective_jxy(&z, JxyMethod::Splitting).unwrap().jxy;
        let jx = extract_effective_jxy(&x, JxyMethod::Splitting).unwrap().jxy;
        assert!(jz > 0.0 && jx < 0.0);
        assert!((jx / jz + 0.5).abs() < 0.02);
    }

    #[test]
    fn hsd_matches_fd() {
        assert!((hsd_fidelity(3.0, 3.0, 0.7, 0.2, PI / (4.0 * 0.7)).unwrap() - 1.0).abs() < 1e-12);
        for zeta in [0.5, 1.0, 2.0, 3.7] {
            let jxy = 1.3;
            let w1 = 50.0;
            let f = hsd_fidelity(w1, w1 + 4.0 * jxy * zeta, jxy, 0.4, PI / (4.0 * jxy)).unwrap();
            assert!((f - fd(zeta)).abs() < 1e-10, "{zeta}: {f} vs {}", fd(zeta));
        }
    }

    #[test]
    fn hsd_swap_amplitude() {
        let (jxy, jz, zeta) = (0.9, 0.3, 0.8);
        let t = PI / (4.0 * jxy);
        let w1 = 10.0;
        let u = hsd_propagator(w1, w1 + 4.0 * jxy * zeta, jxy, jz, t).unwrap();
        let r = (1.0 + zeta * zeta).sqrt();
        // <du| U |ud> = exp(-2 i J^z t) (-i sin(pi r / 2) / r)
        let expected = Complex64::from_polar(1.0, -2.0 * jz * t) * Complex64::new(0.0, -(PI / 2.0 * r).sin() / r);
        assert!((u[(1, 2)] - expected).norm() < 1e-12);
        let stay = Complex64::from_polar(1.0, -2.0 * jz * t)
            * Complex64::new((PI / 2.0 * r).cos(), zeta * (PI / 2.0 * r).sin() / r);
        assert!((u[(2, 2)] - stay).norm() < 1e-12);
        let dd = Complex64::from_polar(1.0, 2.0 * jz * t + (2.0 * w1 + 4.0 * jxy * zeta) / 2.0 * t);
        assert!((u[(0, 0)] - dd).norm() < 1e-12);
    }

    #[test]
    fn epsilon_scaling_in_dispersive_regime() {
        let t = FockTruncation::uniform(2).unwrap();
        let j = |eps: f64| {
            let sys = build_microscopic([electron(eps); 2], 1e-4, Orientation::AxialZ, t, DEFAULT_DIM_LIMIT).unwrap();
            extract_effective_jxy(&sys, JxyMethod::Splitting).unwrap().jxy
        };
        let p = scaling_exponent(j(0.02), 0.02, j(0.01), 0.01);
        assert!((p - 2.0).abs() < 0.1, "{p}");
    }

    #[test]
    fn convergence_rows() {
        let rows = convergence_table(electron(0.03), 1e-4, Orientation::AxialZ, &[1, 2], DEFAULT_DIM_LIMIT).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].dim, 324);
        assert_relative_eq!(rows[0].flip_flop_predicted, rows[1].flip_flop_predicted);
    }
}

//! Effective XXZ chain Hamiltonians, exact evolution and end-to-end state
//! transfer.
//!
//! Basis ordering: site 1 is the most significant tensor factor and each
//! site uses `{down, up}`, so basis index bit `n - 1 - k` is set when site
//! `k` (0-based) is up. `sigma_z |up> = +|up>`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
// Needed without std; shadowed by the inherent methods when std is linked.
#[allow(unused_imports)]
use num_traits::Float;

use crate::couplings::{CouplingMatrix, Orientation};
use crate::error::{Error, Result};
use crate::linalg::{SectorSpectrum, Spectrum};
use crate::quadrature::BlochGrid;

/// Default cap on the number of sites for 2^N representations.
pub const DEFAULT_MAX_SITES: usize = 14;
/// Largest chain for which [`SpinHamiltonian::to_dense`] is allowed.
pub const DENSE_MAX_SITES: usize = 12;

const NORM_TOL: f64 = 1e-12;

fn bit(n: usize, site: usize) -> usize {
    1 << (n - 1 - site)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n_sites: usize,
    amplitudes: DVector<Complex64>,
}

impl SpinState {
    pub fn from_amplitudes(n_sites: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        let dim = 1usize << n_sites;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let s = Self {
            n_sites,
            amplitudes,
        };
        if (s.norm() - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "amplitudes",
                reason: "state must be normalised",
            });
        }
        Ok(s)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_sites: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(1 << n_sites);
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            n_sites,
            amplitudes,
        }
    }

    /// All spins down.
    pub fn all_down(n_sites: usize) -> Self {
        Self::basis(n_sites, 0)
    }

    /// `(cos(theta/2)|down> + e^{i phi} sin(theta/2)|up>)` on site 1, every
    /// other site down.
    pub fn sender(n_sites: usize, theta: f64, phi: f64) -> Self {
        let mut amplitudes = DVector::zeros(1 << n_sites);
        amplitudes[0] = Complex64::new((theta / 2.0).cos(), 0.0);
        amplitudes[bit(n_sites, 0)] = Complex64::from_polar((theta / 2.0).sin(), phi);
        Self {
            n_sites,
            amplitudes,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn overlap(&self, other: &SpinState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn sigma_z(&self, site: usize) -> f64 {
        let m = bit(self.n_sites, site);
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| if i & m != 0 { z.norm_sqr() } else { -z.norm_sqr() })
            .sum()
    }

    /// `<sigma^->` with `sigma^- = |down><up|`.
    pub fn sigma_minus(&self, site: usize) -> Complex64 {
        let m = bit(self.n_sites, site);
        (0..self.amplitudes.len())
            .filter(|i| i & m == 0)
            .map(|i| self.amplitudes[i].conj() * self.amplitudes[i | m])
            .sum()
    }

    /// Reduced density matrix of one site, rows/columns ordered `{down, up}`.
    pub fn reduced_density(&self, site: usize) -> [[Complex64; 2]; 2] {
        let m = bit(self.n_sites, site);
        let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in (0..self.amplitudes.len()).filter(|i| i & m == 0) {
            let down = self.amplitudes[i];
            let up = self.amplitudes[i | m];
            rho[0][0] += down * down.conj();
            rho[1][1] += up * up.conj();
            rho[1][0] += up * down.conj();
        }
        rho[0][1] = rho[1][0].conj();
        rho
    }

    /// `(basis index, re, im)` for every amplitude.
    pub fn triples(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| (i, z.re, z.im))
    }
}

/// `<chi|rho|chi>` for a single-qubit pure target.
pub fn qubit_fidelity(rho: &[[Complex64; 2]; 2], down: Complex64, up: Complex64) -> f64 {
    let chi = [down, up];
    let mut f = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            f += chi[a].conj() * rho[a][b] * chi[b];
        }
    }
    f.re
}

/// `H / hbar = sum_i (omega_i / 2) sigma^z_i + sum_{i<j} [zz_ij sigma^z_i sigma^z_j
/// + xy_ij (sigma^x_i sigma^x_j + sigma^y_i sigma^y_j)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    n_sites: usize,
    pub orientation: Orientation,
    pub omega_s: f64,
    /// Per-site precession frequencies (all `omega_s` unless detuned).
    pub site_frequencies: Vec<f64>,
    /// Coefficient of `sigma^z_i sigma^z_j`.
    pub zz: DMatrix<f64>,
    /// Coefficient of `sigma^x_i sigma^x_j + sigma^y_i sigma^y_j`.
    pub xy: DMatrix<f64>,
}

/// Assembles the chain Hamiltonian for the given orientation:
///
/// * `AxialZ`: `- sum_{i>j} (2 J^z s^z s^z - J^xy s^x s^x - J^xy s^y s^y)`
/// * `TransverseX`: `+ 1/2 sum_{i<j} (2 J^z s^z s^z - J^xy s^x s^x - J^xy s^y s^y)`
///
/// plus `sum_i (omega_s / 2) sigma^z_i` in both cases. The transverse
/// couplings come out as exactly `-1/2` times the axial ones.
pub fn build_effective_hamiltonian(
    cm: &CouplingMatrix,
    omega_s: f64,
    orientation: Orientation,
    max_sites: usize,
) -> Result<SpinHamiltonian> {
    let n = cm.len();
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "couplings",
            reason: "need at least two sites",
        });
    }
    if n > max_sites || n >= usize::BITS as usize - 1 {
        return Err(Error::DimensionOverflow {
            requested: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
            limit: 1 << max_sites.min(usize::BITS as usize - 2),
        });
    }
    for i in 0..n {
        for j in 0..n {
            if cm.jz[(i, j)] != cm.jz[(j, i)] || cm.jxy[(i, j)] != cm.jxy[(j, i)] {
                return Err(Error::InvalidParameter {
                    name: "couplings",
                    reason: "coupling matrices must be symmetric",
                });
            }
        }
    }
    let (zz_scale, xy_scale) = match orientation {
        Orientation::AxialZ => (-2.0, 1.0),
        Orientation::TransverseX => (1.0, -0.5),
    };
    let mut zz = DMatrix::zeros(n, n);
    let mut xy = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                zz[(i, j)] = zz_scale * cm.jz[(i, j)];
                xy[(i, j)] = xy_scale * cm.jxy[(i, j)];
            }
        }
    }
    Ok(SpinHamiltonian {
        n_sites: n,
        orientation,
        omega_s,
        site_frequencies: alloc::vec![omega_s; n],
        zz,
        xy,
    })
}

impl SpinHamiltonian {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    /// Replaces the per-site precession frequencies.
    pub fn with_site_frequencies(mut self, freqs: Vec<f64>) -> Result<Self> {
        if freqs.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: freqs.len(),
            });
        }
        self.site_frequencies = freqs;
        Ok(self)
    }

    fn spin(&self, state: usize, site: usize) -> f64 {
        if state & bit(self.n_sites, site) != 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn diagonal(&self, state: usize) -> f64 {
        let n = self.n_sites;
        let mut e = 0.0;
        for i in 0..n {
            let si = self.spin(state, i);
            e += 0.5 * self.site_frequencies[i] * si;
            for j in (i + 1)..n {
                e += self.zz[(i, j)] * si * self.spin(state, j);
            }
        }
        e
    }

    /// Matrix element `<row| H/hbar |col>`.
    pub fn element(&self, row: usize, col: usize) -> f64 {
        if row == col {
            return self.diagonal(row);
        }
        let diff = row ^ col;
        if diff.count_ones() != 2 {
            return 0.0;
        }
        // Flip-flop only connects states where the two differing sites are
        // anti-aligned in both.
        let hi = usize::BITS - 1 - diff.leading_zeros();
        let lo = diff.trailing_zeros();
        let i = self.n_sites - 1 - hi as usize;
        let j = self.n_sites - 1 - lo as usize;
        let col_i = col & (1 << hi) != 0;
        let col_j = col & (1 << lo) != 0;
        if col_i == col_j {
            return 0.0;
        }
        // sigma^x sigma^x + sigma^y sigma^y = 2 (sigma^+ sigma^- + sigma^- sigma^+)
        2.0 * self.xy[(i, j)]
    }

    /// Dense `2^N x 2^N` matrix (units rad/s).
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n_sites > DENSE_MAX_SITES {
            return Err(Error::DimensionOverflow {
                requested: self.dim(),
                limit: 1 << DENSE_MAX_SITES,
            });
        }
        let d = self.dim();
        Ok(DMatrix::from_fn(d, d, |r, c| self.element(r, c)))
    }

    /// Eigendecomposition block by block in the number of up spins.
    pub fn spectrum(&self) -> Result<SectorSpectrum> {
        SectorSpectrum::build(
            self.dim(),
            |i| i64::from(i.count_ones()),
            |r, c| self.element(r, c),
        )
    }

    /// Restriction to the one-up-spin sector, site basis `|k>` with site `k` up.
    pub fn single_excitation(&self) -> Result<SingleExcitationChain> {
        let n = self.n_sites;
        let block = DMatrix::from_fn(n, n, |r, c| {
            self.element(bit(n, r), bit(n, c))
        });
        Ok(SingleExcitationChain {
            vacuum_energy: self.diagonal(0),
            spectrum: Spectrum::new(block)?,
        })
    }
}

/// Exact propagator sharing one eigendecomposition across many times.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_sites: usize,
    spectrum: SectorSpectrum,
}

impl Propagator {
    pub fn new(h: &SpinHamiltonian) -> Result<Self> {
        Ok(Self {
            n_sites: h.n_sites(),
            spectrum: h.spectrum()?,
        })
    }

    pub fn evolve(&self, psi: &SpinState, t: f64) -> Result<SpinState> {
        if psi.n_sites != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: psi.n_sites,
            });
        }
        Ok(SpinState {
            n_sites: self.n_sites,
            amplitudes: self.spectrum.evolve(&psi.amplitudes, t),
        })
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.spectrum.eigenvalues()
    }
}

/// `exp(-i H t / hbar) psi`, by eigendecomposition.
pub fn evolve(h: &SpinHamiltonian, psi: &SpinState, t: f64) -> Result<SpinState> {
    Propagator::new(h)?.evolve(psi, t)
}

/// One-excitation sector of an excitation-conserving chain. Dimension `N`,
/// so long chains stay cheap.
#[derive(Debug, Clone)]
pub struct SingleExcitationChain {
    pub vacuum_energy: f64,
    spectrum: Spectrum,
}

impl SingleExcitationChain {
    pub fn n_sites(&self) -> usize {
        self.spectrum.dim()
    }

    /// `<to| exp(-i H t) |from>` for single-excitation site states.
    pub fn amplitude(&self, from: usize, to: usize, t: f64) -> Complex64 {
        let v = &self.spectrum.vectors;
        (0..self.spectrum.dim())
            .map(|k| {
                Complex64::from_polar(v[(to, k)] * v[(from, k)], -self.spectrum.values[k] * t)
            })
            .sum()
    }

    /// End-to-end amplitude relative to the all-down phase,
    /// `<N|U(t)|1> exp(i E_0 t)`.
    pub fn transfer_amplitude(&self, t: f64) -> Complex64 {
        self.amplitude(0, self.n_sites() - 1, t) * Complex64::from_polar(1.0, self.vacuum_energy * t)
    }
}

/// Input state of the sending qubit.
#[derive(Debug, Clone, PartialEq)]
pub enum Sender {
    State { theta: f64, phi: f64 },
    /// Uniform average over the Bloch sphere.
    BlochAverage(BlochGrid),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TransferPoint {
    pub t: f64,
    /// Site-N fidelity after undoing the known sector phase.
    pub fidelity: f64,
    /// Site-N fidelity against the untouched sender state.
    pub raw_fidelity: f64,
    /// `<N|U(t)|1> exp(i E_0 t)`, whose argument is the sector phase.
    pub amplitude_re: f64,
    pub amplitude_im: f64,
}

impl TransferPoint {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.amplitude_re, self.amplitude_im)
    }
}

/// Fidelity of the last site's reduced state against the sender qubit, on a
/// time grid. Evolution uses the full `2^N` space.
///
/// The relative phase between the all-down and one-excitation sectors is a
/// property of the chain alone; `fidelity` compares against the sender
/// state rotated by that phase, `raw_fidelity` against the sender as is.
pub fn transfer_fidelity_curve(
    h: &SpinHamiltonian,
    sender: &Sender,
    t_grid: &[f64],
) -> Result<Vec<TransferPoint>> {
    let n = h.n_sites();
    let prop = Propagator::new(h)?;
    let vacuum = SpinState::all_down(n);
    let first = SpinState::basis(n, bit(n, 0));
    let last_idx = bit(n, n - 1);

    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if !t.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_grid",
                reason: "times must be finite",
            });
        }
        let vac_t = prop.evolve(&vacuum, t)?;
        let one_t = prop.evolve(&first, t)?;
        let vac_phase = vac_t.amplitudes[0];
        let amp = one_t.amplitudes[last_idx] * vac_phase.conj();
        let gamma = amp.arg();

        let fid_at = |theta: f64, phi: f64| {
            let c = (theta / 2.0).cos();
            let s = Complex64::from_polar((theta / 2.0).sin(), phi);
            let amps = vac_t.amplitudes.map(|z| z * c) + one_t.amplitudes.map(|z| z * s);
            let state = SpinState {
                n_sites: n,
                amplitudes: amps,
            };
            let rho = state.reduced_density(n - 1);
            let down = Complex64::new(c, 0.0);
            let raw = qubit_fidelity(&rho, down, s);
            let corrected = qubit_fidelity(&rho, down, s * Complex64::from_polar(1.0, gamma));
            (corrected, raw)
        };

        let (fidelity, raw_fidelity) = match sender {
            Sender::State { theta, phi } => fid_at(*theta, *phi),
            Sender::BlochAverage(grid) => grid.points().fold((0.0, 0.0), |acc, (th, ph, w)| {
                let (f, r) = fid_at(th, ph);
                (acc.0 + w * f, acc.1 + w * r)
            }),
        };
        out.push(TransferPoint {
            t,
            fidelity,
            raw_fidelity,
            amplitude_re: amp.re,
            amplitude_im: amp.im,
        });
    }
    Ok(out)
}

/// Phase-corrected site-N fidelity from the single-excitation sector only,
/// for chains too long for the full space.
pub fn transfer_fidelity_curve_fast(
    chain: &SingleExcitationChain,
    sender: &Sender,
    t_grid: &[f64],
) -> Vec<TransferPoint> {
    let fid = |theta: f64, f: f64| {
        let c2 = (theta / 2.0).cos().powi(2);
        let s2 = 1.0 - c2;
        c2 * (c2 + s2 * (1.0 - f * f)) + s2 * s2 * f * f + 2.0 * c2 * s2 * f
    };
    t_grid
        .iter()
        .map(|&t| {
            let amp = chain.transfer_amplitude(t);
            let f = amp.norm();
            let fidelity = match sender {
                Sender::State { theta, .. } => fid(*theta, f),
                Sender::BlochAverage(grid) => grid.average(|th, _| fid(th, f)),
            };
            let raw = match sender {
                Sender::State { theta, .. } => {
                    let c2 = (theta / 2.0).cos().powi(2);
                    let s2 = 1.0 - c2;
                    c2 * (c2 + s2 * (1.0 - f * f)) + s2 * s2 * f * f + 2.0 * c2 * s2 * amp.re
                }
                Sender::BlochAverage(grid) => grid.average(|th, _| {
                    let c2 = (th / 2.0).cos().powi(2);
                    let s2 = 1.0 - c2;
                    c2 * (c2 + s2 * (1.0 - f * f)) + s2 * s2 * f * f + 2.0 * c2 * s2 * amp.re
                }),
            };
            TransferPoint {
                t,
                fidelity,
                raw_fidelity: raw,
                amplitude_re: amp.re,
                amplitude_im: amp.im,
            }
        })
        .collect()
}

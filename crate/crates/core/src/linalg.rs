//! Dense real-symmetric eigendecomposition and unitary evolution.
//!
//! Every Hamiltonian in this crate is real symmetric in its natural basis,
//! so only states carry complex amplitudes.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenpairs of a real symmetric matrix (columns of `vectors`).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        if n != h.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: h.ncols(),
            });
        }
        if n == 0 {
            return Ok(Self {
                values: DVector::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            });
        }
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0).ok_or(Error::Eigen)?;
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Expansion coefficients `V^T psi`.
    pub fn coefficients(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let re = self.vectors.tr_mul(&psi.map(|z| z.re));
        let im = self.vectors.tr_mul(&psi.map(|z| z.im));
        re.zip_map(&im, Complex64::new)
    }

    /// Rebuilds a state from coefficients after phase `exp(-i E t)`.
    pub fn propagate_coefficients(&self, coeffs: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let phased = coeffs.zip_map(&self.values, |c, e| c * Complex64::from_polar(1.0, -e * t));
        let re = &self.vectors * phased.map(|z| z.re);
        let im = &self.vectors * phased.map(|z| z.im);
        re.zip_map(&im, Complex64::new)
    }

    /// `exp(-i H t) psi`.
    pub fn evolve(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        self.propagate_coefficients(&self.coefficients(psi), t)
    }

    /// Index of the eigenvector with the largest overlap with `state`, and
    /// that overlap `|<v|state>|^2`.
    pub fn best_match(&self, state: &DVector<f64>) -> (usize, f64) {
        let ov = self.vectors.tr_mul(state);
        let (k, v) = ov
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v * v))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        (k, v)
    }
}

/// A block of basis indices that the Hamiltonian never leaves.
#[derive(Debug, Clone)]
pub struct Sector {
    pub label: i64,
    pub indices: Vec<usize>,
    pub spectrum: Spectrum,
}

/// Block-diagonal spectrum, one [`Spectrum`] per conserved-quantity sector.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub dim: usize,
    pub sectors: Vec<Sector>,
}

impl SectorSpectrum {
    /// Groups basis states by `label(index)` and diagonalises each block
    /// built from `element(row, col)`.
    pub fn build(
        dim: usize,
        label: impl Fn(usize) -> i64,
        element: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut groups: Vec<(i64, Vec<usize>)> = Vec::new();
        for idx in 0..dim {
            let l = label(idx);
            match groups.iter_mut().find(|(g, _)| *g == l) {
                Some((_, v)) => v.push(idx),
                None => groups.push((l, alloc::vec![idx])),
            }
        }
        groups.sort_by_key(|(l, _)| *l);
        let mut sectors = Vec::with_capacity(groups.len());
        for (l, indices) in groups {
            let m = indices.len();
            let block = DMatrix::from_fn(m, m, |r, c| element(indices[r], indices[c]));
            sectors.push(Sector {
                label: l,
                spectrum: Spectrum::new(block)?,
                indices,
            });
        }
        Ok(Self { dim, sectors })
    }

    pub fn sector(&self, label: i64) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.label == label)
    }

    pub fn evolve(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for s in &self.sectors {
            let local = DVector::from_iterator(s.indices.len(), s.indices.iter().map(|&i| psi[i]));
            if local.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let evolved = s.spectrum.evolve(&local, t);
            for (k, &i) in s.indices.iter().enumerate() {
                out[i] = evolved[k];
            }
        }
        out
    }

    /// All eigenvalues, sector by sector.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.sectors
            .iter()
            .flat_map(|s| s.spectrum.values.iter().copied())
            .collect()
    }
}

/// Largest `|h[r, c]|` between basis states carrying different labels.
pub fn max_off_sector(h: &DMatrix<f64>, label: impl Fn(usize) -> i64) -> f64 {
    let n = h.nrows();
    let labels: Vec<i64> = (0..n).map(&label).collect();
    let mut worst: f64 = 0.0;
    for c in 0..n {
        for r in 0..n {
            if labels[r] != labels[c] {
                worst = worst.max(h[(r, c)].abs());
            }
        }
    }
    worst
}

/// Largest `|h - h^T|` entry.
pub fn max_asymmetry(h: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..h.ncols() {
        for r in 0..h.nrows() {
            worst = worst.max((h[(r, c)] - h[(c, r)]).abs());
        }
    }
    worst
}

//! Physical constants (CODATA 2018).

use crate::error::{Error, Result};

/// Label written into output headers so results can be traced to the
/// constant set that produced them.
pub const CODATA_2018: &str = "CODATA-2018";

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysicalConstants {
    /// Elementary charge magnitude (C).
    pub e: f64,
    /// Electron mass (kg).
    pub m_e: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Electron g-factor magnitude.
    pub g: f64,
    /// Boltzmann constant (J/K).
    pub k_b: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: Self = Self {
        e: 1.602_176_634e-19,
        m_e: 9.109_383_701_5e-31,
        hbar: 1.054_571_817e-34,
        eps0: 8.854_187_812_8e-12,
        g: 2.002_319_304_362_56,
        k_b: 1.380_649e-23,
    };

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e", self.e),
            ("m_e", self.m_e),
            ("hbar", self.hbar),
            ("eps0", self.eps0),
            ("k_b", self.k_b),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if !(2.0..=2.01).contains(&self.g) {
            return Err(Error::InvalidParameter {
                name: "g",
                reason: "must lie in [2.0, 2.01]",
            });
        }
        Ok(())
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

//! Design-space sweeps over gradient, spacing and trap frequencies.
//!
//! Grid points are evaluated in parallel and written back in grid order
//! (gradient slowest, cyclotron frequency fastest).

use rayon::prelude::*;
use trapchain_core::couplings::{jxy_pair, pair_parameters, swap_time};
use trapchain_core::fidelity::total_fidelity;
use trapchain_core::trap::{coulomb_scale, derive_quantities_unchecked, validate_regime, HierarchyLevel};
use trapchain_core::{AxialDrive, PhysicalConstants, TrapParams};

use crate::config::{RunConfig, TWO_PI};
use crate::error::{CliError, Result};
use crate::output::{Report, Table};

pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gradient: f64,
    pub spacing: f64,
    pub omega_z: f64,
    pub omega_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub jxy: f64,
    pub t_ex: f64,
    pub fidelity: f64,
    pub e_r: f64,
    pub eps2_e_s: f64,
    pub regime_ok: bool,
}

impl SweepRow {
    fn failed(point: SweepPoint) -> Self {
        Self {
            point,
            jxy: f64::NAN,
            t_ex: f64::NAN,
            fidelity: f64::NAN,
            e_r: f64::NAN,
            eps2_e_s: f64::NAN,
            regime_ok: false,
        }
    }
}

pub struct Axes {
    pub gradient: Vec<f64>,
    pub spacing: Vec<f64>,
    pub omega_z: Vec<f64>,
    pub omega_c: Vec<f64>,
}

impl Axes {
    /// Sweep axes, falling back to the single configured value for any axis
    /// left out.
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let consts = cfg.constants()?;
        let base = cfg.trap_params(None, &consts)?;
        let omega_z = match base.axial {
            AxialDrive::Frequency(w) => w,
            AxialDrive::Electrodes { v0, ell } => (2.0 * consts.e * v0 / (consts.m_e * ell * ell)).sqrt(),
        };
        let omega_c = consts.e * base.b0 / consts.m_e;
        let s = &cfg.sweep;
        let axis = |a: &Option<crate::config::AxisConfig>, name: &str, fallback: f64, scale: f64| -> Result<Vec<f64>> {
            match a {
                Some(a) => Ok(a.expand(name)?.into_iter().map(|v| v * scale).collect()),
                None => Ok(vec![fallback]),
            }
        };
        Ok(Self {
            gradient: axis(&s.gradient, "gradient", base.gradient, 1.0)?,
            spacing: axis(&s.spacing, "spacing", cfg.geometry.spacing, 1.0)?,
            omega_z: axis(&s.axial_hz, "axial_hz", omega_z, TWO_PI)?,
            omega_c: axis(&s.cyclotron_hz, "cyclotron_hz", omega_c, TWO_PI)?,
        })
    }

    pub fn len(&self) -> usize {
        [&self.gradient, &self.spacing, &self.omega_z, &self.omega_c]
            .iter()
            .fold(1usize, |n, a| n.saturating_mul(a.len()))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, mut k: usize) -> SweepPoint {
        let c = k % self.omega_c.len();
        k /= self.omega_c.len();
        let z = k % self.omega_z.len();
        k /= self.omega_z.len();
        let d = k % self.spacing.len();
        k /= self.spacing.len();
        SweepPoint {
            gradient: self.gradient[k],
            spacing: self.spacing[d],
            omega_z: self.omega_z[z],
            omega_c: self.omega_c[c],
        }
    }
}

fn evaluate(cfg: &RunConfig, consts: &PhysicalConstants, p: SweepPoint) -> SweepRow {
    let params = TrapParams::from_frequencies(p.omega_c, p.omega_z, p.gradient, cfg.anomaly_mode(), consts);
    let Ok(dq) = derive_quantities_unchecked(&params, consts) else {
        return SweepRow::failed(p);
    };
    let Ok(xi) = coulomb_scale(&dq, p.spacing, consts) else {
        return SweepRow::failed(p);
    };
    let Ok(pair) = pair_parameters(&dq, &dq, p.spacing, consts) else {
        return SweepRow::failed(p);
    };
    let jxy = jxy_pair(&pair, consts.g);
    let regime_ok = validate_regime(&dq, xi, cfg.occupations.l_bar).pass
        && dq.hierarchy.iter().all(|h| h.level != HierarchyLevel::Violation);
    let budget = cfg
        .occupations
        .resolve(&dq, consts)
        .ok()
        .and_then(|occ| total_fidelity(&dq, &occ, jxy, cfg.geometry.sites.max(2)).ok());
    let (fidelity, e_r, eps2_e_s) = budget.map_or((f64::NAN, f64::NAN, f64::NAN), |b| (b.f_total, b.e_r, b.eps2_e_s));
    SweepRow {
        point: p,
        jxy,
        t_ex: swap_time(jxy).unwrap_or(f64::INFINITY),
        fidelity,
        e_r,
        eps2_e_s,
        regime_ok,
    }
}

pub fn run(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let consts = cfg.constants()?;
    let axes = Axes::from_config(cfg)?;
    let points = axes.len();
    if points > MAX_GRID_POINTS {
        return Err(CliError::GridTooLarge {
            points,
            limit: MAX_GRID_POINTS,
        });
    }
    Ok((0..points)
        .into_par_iter()
        .map(|k| evaluate(cfg, &consts, axes.point(k)))
        .collect())
}

/// Rows not dominated in both `J^xy` and fidelity by another
/// regime-compliant row, sorted by increasing `J^xy`.
pub fn pareto_front(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut ok: Vec<SweepRow> = rows
        .iter()
        .filter(|r| r.regime_ok && r.jxy.is_finite() && r.fidelity.is_finite())
        .copied()
        .collect();
    // Descending J^xy, ties broken by descending fidelity; keep each row
    // whose fidelity beats everything with a larger coupling.
    ok.sort_by(|a, b| b.jxy.total_cmp(&a.jxy).then(b.fidelity.total_cmp(&a.fidelity)));
    let mut front = Vec::new();
    let mut best_f = f64::NEG_INFINITY;
    for r in ok {
        if r.fidelity > best_f {
            best_f = r.fidelity;
            front.push(r);
        }
    }
    front.reverse();
    front
}

/// The largest `J^xy` among regime-compliant rows with fidelity at least
/// `min_fidelity`.
pub fn best_coupling(rows: &[SweepRow], min_fidelity: f64) -> Option<SweepRow> {
    rows.iter()
        .filter(|r| r.regime_ok && r.fidelity >= min_fidelity)
        .max_by(|a, b| a.jxy.total_cmp(&b.jxy))
        .copied()
}

const COLUMNS: [&str; 10] = [
    "gradient", "spacing", "omega_z", "omega_c", "jxy", "t_ex", "fidelity", "e_r", "eps2_e_s", "regime_ok",
];

fn push_row(t: &mut Table, r: &SweepRow) {
    t.push(vec![
        r.point.gradient.into(),
        r.point.spacing.into(),
        r.point.omega_z.into(),
        r.point.omega_c.into(),
        r.jxy.into(),
        r.t_ex.into(),
        r.fidelity.into(),
        r.e_r.into(),
        r.eps2_e_s.into(),
        r.regime_ok.into(),
    ]);
}

pub fn report(cfg: &RunConfig, rows: &[SweepRow]) -> Report {
    let mut report = Report::new("sweep");
    report
        .meta("anomaly_mode", cfg.anomaly_mode().label())
        .meta("occupations", cfg.occupations.describe())
        .meta("min_fidelity", cfg.sweep.min_fidelity)
        .meta("order", "gradient, spacing, omega_z, omega_c (last fastest)");
    let mut grid = Table::new("grid", &COLUMNS);
    for r in rows {
        push_row(&mut grid, r);
    }
    let mut front = Table::new("pareto", &COLUMNS);
    for r in pareto_front(rows) {
        push_row(&mut front, &r);
    }
    let mut best = Table::new("best", &COLUMNS);
    if let Some(r) = best_coupling(rows, cfg.sweep.min_fidelity) {
        push_row(&mut best, &r);
    }
    report.tables.extend([grid, front, best]);
    report
}

//! Single-configuration commands: trap frequencies, couplings, transfer
//! curves and the fidelity budget.

use trapchain_core::couplings::{coupling_matrix, swap_time};
use trapchain_core::fidelity::{total_fidelity, transition_probabilities};
use trapchain_core::quadrature::BlochGrid;
use trapchain_core::spin_chain::{
    build_effective_hamiltonian, transfer_fidelity_curve, transfer_fidelity_curve_fast, Sender, DENSE_MAX_SITES,
};
use trapchain_core::trap::validate_regime;
use trapchain_core::{CouplingMatrix, CouplingOptions, DerivedQuantities, PhysicalConstants};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{Cell, Report, Table};

/// Everything the chain commands share.
pub struct Setup {
    pub consts: PhysicalConstants,
    pub sites: Vec<DerivedQuantities>,
    pub couplings: CouplingMatrix,
}

impl Setup {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let consts = cfg.constants()?;
        let sites = cfg.derived(&consts)?;
        let geom = cfg.geometry()?;
        let opts = CouplingOptions {
            nearest_neighbor_only: cfg.geometry.nearest_neighbor_only,
            force: cfg.force,
            magnetron_occupation: cfg.occupations.l_bar,
        };
        let couplings = coupling_matrix(&sites, &geom, &consts, &opts)?;
        Ok(Self {
            consts,
            sites,
            couplings,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.couplings.len()
    }

    /// Flip-flop coupling between the first two sites.
    pub fn nearest_jxy(&self) -> f64 {
        self.couplings.jxy[(0, 1)]
    }
}

fn base_report(command: &str, cfg: &RunConfig) -> Report {
    let mut r = Report::new(command);
    r.meta("anomaly_mode", cfg.anomaly_mode().label())
        .meta("orientation", cfg.orientation().label());
    if !cfg.constants.is_default() {
        r.meta("constants_overridden", true);
    }
    r
}

pub fn freqs(cfg: &RunConfig) -> Result<Report> {
    let consts = cfg.constants()?;
    let sites = cfg.derived(&consts)?;
    let geom = cfg.geometry()?;
    let d_min = (1..geom.len())
        .map(|i| geom.distance(i - 1, i))
        .fold(f64::INFINITY, f64::min);

    let mut report = base_report("freqs", cfg);
    let mut freqs = Table::new(
        "frequencies",
        &[
            "site", "omega_c", "omega_z", "omega_m", "omega_s", "omega_a", "omega_c_tilde", "delta_z", "epsilon", "b0",
            "gradient",
        ],
    );
    let mut hierarchy = Table::new("hierarchy", &["site", "ordering", "ratio", "level"]);
    let mut regime = Table::new("regime", &["site", "condition", "ratio", "pass"]);
    for (i, dq) in sites.iter().enumerate() {
        freqs.push(vec![
            i.into(),
            dq.omega_c.into(),
            dq.omega_z.into(),
            dq.omega_m.into(),
            dq.omega_s.into(),
            dq.omega_a.into(),
            dq.omega_c_tilde.into(),
            dq.delta_z.into(),
            dq.epsilon.into(),
            dq.b0.into(),
            dq.gradient.into(),
        ]);
        for h in dq.hierarchy {
            hierarchy.push(vec![i.into(), h.which.into(), h.ratio.into(), format!("{:?}", h.level).into()]);
        }
        let xi = if d_min.is_finite() {
            trapchain_core::trap::coulomb_scale(dq, d_min, &consts)?
        } else {
            0.0
        };
        for c in validate_regime(dq, xi, cfg.occupations.l_bar).conditions {
            regime.push(vec![i.into(), c.name.into(), c.ratio.into(), c.pass.into()]);
        }
    }
    report.tables.extend([freqs, hierarchy, regime]);
    Ok(report)
}

pub fn couplings(cfg: &RunConfig) -> Result<Report> {
    let setup = Setup::new(cfg)?;
    let mut report = base_report("couplings", cfg);
    report.meta("nearest_neighbor_only", cfg.geometry.nearest_neighbor_only);
    let mut t = Table::new("couplings", &["i", "j", "d", "jz", "jxy", "xi", "t_ex"]);
    for (i, j, d, jz, jxy) in setup.couplings.pairs() {
        let t_ex = swap_time(jxy).unwrap_or(f64::INFINITY);
        t.push(vec![
            i.into(),
            j.into(),
            d.into(),
            jz.into(),
            jxy.into(),
            setup.couplings.xi[(i, j)].into(),
            t_ex.into(),
        ]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn transfer(cfg: &RunConfig) -> Result<Report> {
    let tc = &cfg.transfer;
    if tc.points < 2 || !(tc.t_max_swaps.is_finite() && tc.t_max_swaps > 0.0) {
        return Err(CliError::Config("transfer: need points >= 2 and t_max_swaps > 0".into()));
    }
    let setup = Setup::new(cfg)?;
    let n = setup.n_sites();
    let t_ex = swap_time(setup.nearest_jxy())?;
    let mut h = build_effective_hamiltonian(&setup.couplings, setup.sites[0].omega_s, cfg.orientation(), tc.max_sites)?;
    if setup.sites.len() > 1 {
        h = h.with_site_frequencies(setup.sites.iter().map(|s| s.omega_s).collect())?;
    }
    let sender = if tc.bloch_average {
        Sender::BlochAverage(BlochGrid::default())
    } else {
        Sender::State {
            theta: tc.theta,
            phi: tc.phi,
        }
    };
    let t_grid: Vec<f64> = (0..tc.points)
        .map(|k| t_ex * tc.t_max_swaps * k as f64 / (tc.points - 1) as f64)
        .collect();
    let fast = tc.fast || n > DENSE_MAX_SITES;
    let curve = if fast {
        transfer_fidelity_curve_fast(&h.single_excitation()?, &sender, &t_grid)
    } else {
        transfer_fidelity_curve(&h, &sender, &t_grid)?
    };

    let mut report = base_report("transfer", cfg);
    report
        .meta("sites", n)
        .meta("t_ex", crate::output::format_float(t_ex))
        .meta("path", if fast { "single-excitation" } else { "full" })
        .meta(
            "sender",
            if tc.bloch_average {
                "bloch-average".to_string()
            } else {
                format!("theta={} phi={}", tc.theta, tc.phi)
            },
        );
    if let Some(best) = curve.iter().max_by(|a, b| a.fidelity.total_cmp(&b.fidelity)) {
        report
            .meta("peak_fidelity", crate::output::format_float(best.fidelity))
            .meta("peak_time", crate::output::format_float(best.t));
    }
    let mut t = Table::new("transfer", &["t", "t_over_tex", "fidelity", "raw_fidelity", "amp_re", "amp_im"]);
    for p in &curve {
        t.push(vec![
            p.t.into(),
            (p.t / t_ex).into(),
            p.fidelity.into(),
            p.raw_fidelity.into(),
            p.amplitude_re.into(),
            p.amplitude_im.into(),
        ]);
    }
    report.tables.push(t);
    Ok(report)
}

pub fn fidelity(cfg: &RunConfig) -> Result<Report> {
    let setup = Setup::new(cfg)?;
    let dq = &setup.sites[0];
    let occ = cfg.occupations.resolve(dq, &setup.consts)?;
    let jxy = setup.nearest_jxy();
    let budget = total_fidelity(dq, &occ, jxy, setup.n_sites())?;

    let mut report = base_report("fidelity", cfg);
    report.meta("occupations", cfg.occupations.describe());
    for w in &budget.warnings {
        report.meta("warning", w);
    }
    let mut t = Table::new("budget", &["quantity", "value"]);
    let rows: [(&str, Cell); 16] = [
        ("sites", budget.n_sites.into()),
        ("k_bar", occ.k_bar.into()),
        ("n_bar", occ.n_bar.into()),
        ("l_bar", occ.l_bar.into()),
        ("jxy", jxy.into()),
        ("t_ex", swap_time(jxy)?.into()),
        ("epsilon", dq.epsilon.into()),
        ("e_r", budget.e_r.into()),
        ("e_s", budget.e_s.into()),
        ("eps2_e_s", budget.eps2_e_s.into()),
        ("f_total", budget.f_total.into()),
        ("f_canonical_only", budget.f_canonical_only.into()),
        ("delta_s_rms", budget.delta_s_rms.into()),
        ("tail_mass", budget.tail_mass.into()),
        ("e_r_heuristic", budget.e_r_heuristic.into()),
        ("in_range", budget.in_range().into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    report.tables.push(t);

    let mut tr = Table::new("transitions", &["class", "probability", "flagged"]);
    for e in transition_probabilities(dq, &occ, setup.couplings.xi[(0, 1)]) {
        tr.push(vec![e.label.into(), e.probability.into(), e.flagged.into()]);
    }
    report.tables.push(tr);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::Cell;

    fn value(report: &Report, table: &str, key: &str) -> f64 {
        let t = report.table(table).unwrap();
        let row = t.rows.iter().find(|r| r[0] == Cell::from(key)).unwrap();
        match row[1] {
            Cell::Num(v) => v,
            Cell::Int(v) => v as f64,
            _ => panic!("not numeric"),
        }
    }

    #[test]
    fn freqs_without_gradient_gives_zero_epsilon() {
        let cfg = RunConfig::from_toml("[trap]\ngradient = 0.0\n").unwrap();
        let r = freqs(&cfg).unwrap();
        assert_eq!(r.table("frequencies").unwrap().numbers("epsilon"), vec![0.0]);
    }

    #[test]
    fn bad_hierarchy_is_a_regime_error() {
        let cfg = RunConfig::from_toml("[trap]\ncyclotron_hz = 1e9\naxial_hz = 4e8\n").unwrap();
        let err = freqs(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn two_site_transfer_peaks_at_swap_time() {
        let cfg = RunConfig::from_toml("[transfer]\npoints = 101\nt_max_swaps = 2.0\n").unwrap();
        let r = transfer(&cfg).unwrap();
        let t = r.table("transfer").unwrap();
        let f = t.numbers("fidelity");
        let x = t.numbers("t_over_tex");
        assert!((x[50] - 1.0).abs() < 1e-12);
        assert!((f[50] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn polar_sender_gives_flat_curve() {
        let cfg = RunConfig::from_toml("[transfer]\nbloch_average = false\ntheta = 0.0\npoints = 11\n").unwrap();
        let r = transfer(&cfg).unwrap();
        for f in r.table("transfer").unwrap().numbers("fidelity") {
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_budget_adds_up() {
        let cfg = RunConfig::from_toml("").unwrap();
        let r = fidelity(&cfg).unwrap();
        let f = value(&r, "budget", "f_total");
        let sum = 1.0 - value(&r, "budget", "e_r") - value(&r, "budget", "eps2_e_s");
        assert!((f - sum).abs() < 1e-15);
        assert_eq!(r.table("transitions").unwrap().rows.len(), 4);
    }

    #[test]
    fn couplings_table_has_all_pairs() {
        let cfg = RunConfig::from_toml("[geometry]\nsites = 4\n").unwrap();
        let r = couplings(&cfg).unwrap();
        let t = r.table("couplings").unwrap();
        assert_eq!(t.rows.len(), 6);
        let jxy = t.numbers("jxy");
        // Pairs (0,1) and (0,2): distance doubles.
        assert!((jxy[0] / jxy[1] - 8.0).abs() < 1e-9);
    }
}

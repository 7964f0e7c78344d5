//! Validation suite run by the `oracle` command: the microscopic
//! two-electron model against the effective couplings, and the detuned
//! two-spin evolution against the closed-form swap fidelity.

use trapchain_core::fidelity::fd;
use trapchain_core::oracle::{
    build_microscopic, convergence_table, extract_effective_jxy, hsd_fidelity, scaling_exponent, ConvergenceRow,
    ElectronModel, FockTruncation, JxyMethod,
};
use trapchain_core::{Orientation, PhysicalConstants};

use crate::config::OracleConfig;
use crate::error::{CliError, Result};
use crate::output::{Report, Table};

/// Detunings at which the two-spin evolution is compared to `fd`.
pub const ZETA_CHECKS: [f64; 5] = [0.0, 0.5, 1.0, 2.5, 5.0];
pub const FD_TOLERANCE: f64 = 1e-9;
/// Relative residual allowed for Hermiticity and sector leakage.
pub const STRUCTURE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            value,
            lower,
            upper,
        }
    }

    pub fn pass(&self) -> bool {
        self.value >= self.lower && self.value <= self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub convergence: Vec<ConvergenceRow>,
    /// Flip-flop element at half the coupling, finest cutoff.
    pub half_epsilon: ConvergenceRow,
    pub exponent: f64,
    pub checks: Vec<Check>,
}

impl SuiteResult {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass())
            .map(|c| format!("{} = {:.6e} outside [{:e}, {:e}]", c.name, c.value, c.lower, c.upper))
            .collect()
    }
}

/// Relative slack on successive differences, for values converged to
/// rounding.
pub const CONVERGENCE_SLACK: f64 = 1e-12;

/// True when the change in the measured flip-flop element between
/// successive cutoffs never grows.
pub fn converges_monotonically(rows: &[ConvergenceRow]) -> bool {
    let steps: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[1].flip_flop_measured - w[0].flip_flop_measured).abs())
        .collect();
    let slack = CONVERGENCE_SLACK * rows.iter().map(|r| r.flip_flop_measured.abs()).fold(0.0, f64::max);
    steps.windows(2).all(|s| s[1] <= s[0] + slack)
}

pub fn run(cfg: &OracleConfig, orientation: Orientation, consts: &PhysicalConstants) -> Result<SuiteResult> {
    if cfg.cutoffs.is_empty() {
        return Err(CliError::Config("oracle.cutoffs must not be empty".into()));
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return Err(CliError::Config("oracle.epsilon must be positive".into()));
    }
    let electron = ElectronModel::dimensionless(cfg.ratio, cfg.epsilon, cfg.anomaly_mode.into(), consts.g);
    let finest = *cfg.cutoffs.iter().max().expect("non-empty");
    let tol = cfg.tolerance;

    let convergence = convergence_table(electron, cfg.xi, orientation, &cfg.cutoffs, cfg.dim_limit)?;
    let last = convergence.last().expect("non-empty").clone();
    let half = electron.with_epsilon(cfg.epsilon / 2.0);
    let half_epsilon = convergence_table(half, cfg.xi, orientation, &[finest], cfg.dim_limit)?.remove(0);
    let exponent = scaling_exponent(
        last.flip_flop_measured,
        cfg.epsilon,
        half_epsilon.flip_flop_measured,
        cfg.epsilon / 2.0,
    );

    let sys = build_microscopic([electron; 2], cfg.xi, orientation, FockTruncation::uniform(finest)?, cfg.dim_limit)?;
    let scale = sys.hamiltonian.amax();
    let decoupled = build_microscopic(
        [electron.with_epsilon(0.0); 2],
        cfg.xi,
        orientation,
        FockTruncation::uniform(cfg.cutoffs[0])?,
        cfg.dim_limit,
    )?;
    let zero = extract_effective_jxy(&decoupled, JxyMethod::Splitting)?.jxy;

    let mut checks = vec![
        Check::new("hermiticity_residual", sys.hermiticity_residual() / scale, 0.0, STRUCTURE_TOLERANCE),
        Check::new("excitation_leakage", sys.excitation_leakage() / scale, 0.0, STRUCTURE_TOLERANCE),
        Check::new("flip_flop_ratio", last.flip_flop_ratio(), 1.0 - tol, 1.0 + tol),
        Check::new(
            "flip_flop_monotone",
            if converges_monotonically(&convergence) { 1.0 } else { 0.0 },
            1.0,
            1.0,
        ),
        Check::new("epsilon_exponent", exponent, cfg.exponent_min, cfg.exponent_max),
        Check::new("zero_epsilon_jxy", zero.abs() / cfg.xi, 0.0, 1e-9),
    ];
    match last.jz_measured {
        Some(jz) => checks.push(Check::new("jz_ratio", jz / last.jz_predicted, 1.0 - tol, 1.0 + tol)),
        None => checks.push(Check::new("jz_tracked", 0.0, 1.0, 1.0)),
    }
    // Swap fidelity at t_ex with detuning zeta = (omega2 - omega1)/(4 J^xy).
    let (jxy, jz) = (1.0, 0.5);
    let t_ex = std::f64::consts::PI / (4.0 * jxy);
    for zeta in ZETA_CHECKS {
        let f = hsd_fidelity(100.0, 100.0 + 4.0 * jxy * zeta, jxy, jz, t_ex)?;
        checks.push(Check::new(format!("fd_mismatch(zeta={zeta})"), (f - fd(zeta)).abs(), 0.0, FD_TOLERANCE));
    }
    Ok(SuiteResult {
        convergence,
        half_epsilon,
        exponent,
        checks,
    })
}

pub fn report(cfg: &OracleConfig, orientation: Orientation, result: &SuiteResult) -> Report {
    let mut report = Report::new("oracle");
    report
        .meta("anomaly_mode", trapchain_core::AnomalyMode::from(cfg.anomaly_mode).label())
        .meta("orientation", orientation.label())
        .meta("oracle_units", "omega_z = 1; couplings in units of omega_z")
        .meta("epsilon", cfg.epsilon)
        .meta("omega_c_over_omega_z", cfg.ratio)
        .meta("xi", cfg.xi)
        .meta("pass", result.pass());
    let mut conv = Table::new(
        "convergence",
        &["cutoff", "dim", "epsilon", "flip_flop_measured", "flip_flop_predicted", "ratio", "jz_measured", "jz_predicted"],
    );
    let rows = result.convergence.iter().map(|r| (cfg.epsilon, r));
    for (eps, r) in rows.chain(std::iter::once((cfg.epsilon / 2.0, &result.half_epsilon))) {
        conv.push(vec![
            r.cutoff.into(),
            r.dim.into(),
            eps.into(),
            r.flip_flop_measured.into(),
            r.flip_flop_predicted.into(),
            r.flip_flop_ratio().into(),
            r.jz_measured.unwrap_or(f64::NAN).into(),
            r.jz_predicted.into(),
        ]);
    }
    let mut checks = Table::new("checks", &["check", "value", "lower", "upper", "pass"]);
    for c in &result.checks {
        checks.push(vec![
            c.name.clone().into(),
            c.value.into(),
            c.lower.into(),
            c.upper.into(),
            c.pass().into(),
        ]);
    }
    report.tables.extend([conv, checks]);
    report
}

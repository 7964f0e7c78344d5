use proptest::prelude::*;
use trapchain_core::couplings::{coupling_matrix, isotropy_ratio, ChainGeometry, CouplingOptions, Orientation};
use trapchain_core::fidelity::{delta_s, error_residual, fd, thermal_cutoff, thermal_tail, ThermalOccupations};
use trapchain_core::spin_chain::{build_effective_hamiltonian, Propagator, SpinState};
use trapchain_core::trap::{derive_quantities, AnomalyMode, DerivedQuantities, TrapParams};
use trapchain_core::{CouplingMatrix, PhysicalConstants};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn trap(fc: f64, ratio: f64, b: f64) -> DerivedQuantities {
    let c = PhysicalConstants::CODATA_2018;
    let p = TrapParams::from_frequencies(TWO_PI * fc, TWO_PI * fc / ratio, b, AnomalyMode::ExactG, &c);
    derive_quantities(&p, &c).unwrap()
}

fn forced() -> CouplingOptions {
    CouplingOptions {
        force: true,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn excitation_number_and_norm_conserved(
        n in 2usize..6,
        seed in proptest::collection::vec(0.0f64..1.0, 30),
        t in 0.0f64..20.0,
        axial in any::<bool>(),
    ) {
        let orientation = if axial { Orientation::AxialZ } else { Orientation::TransverseX };
        let cm = CouplingMatrix::from_fn(n, orientation, AnomalyMode::ExactG, |i, j| {
            (seed[i + j], seed[(i * 5 + j) % 30] + 0.1)
        });
        let h = build_effective_hamiltonian(&cm, 3.0, orientation, 14).unwrap();
        let dense = h.to_dense().unwrap();
        let leak = trapchain_core::linalg::max_off_sector(&dense, |i| i64::from(i.count_ones()));
        prop_assert_eq!(leak, 0.0);
        let psi = SpinState::sender(n, 1.0 + seed[0], 2.0 * seed[1]);
        let out = Propagator::new(&h).unwrap().evolve(&psi, t).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        let ups = |s: &SpinState| s.triples().map(|(i, re, im)| (re * re + im * im) * i.count_ones() as f64).sum::<f64>();
        prop_assert!((ups(&out) - ups(&psi)).abs() < 1e-10);
    }

    #[test]
    fn dipolar_law(b in 100.0f64..2000.0, d in 2e-6f64..60e-6, n in 3usize..7) {
        let dq = trap(8e9, 16.0, b);
        let geom = ChainGeometry::uniform(Orientation::AxialZ, n, d).unwrap();
        let cm = coupling_matrix(&[dq], &geom, &PhysicalConstants::CODATA_2018, &forced()).unwrap();
        let reference = cm.jxy[(0, 1)] * d.powi(3);
        for (_, _, dist, jz, jxy) in cm.pairs() {
            prop_assert!((jxy * dist.powi(3) / reference - 1.0).abs() < 1e-12);
            prop_assert!((2.0 * jz / jxy / isotropy_ratio(&dq) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_is_even_and_bounded(z in -50.0f64..50.0) {
        prop_assert!((fd(z) - fd(-z)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&fd(z)));
    }

    #[test]
    fn thermal_tail_below_budget(m in 0.0f64..500.0) {
        prop_assert!(thermal_tail(m, thermal_cutoff(m)) < 1e-8);
    }

    #[test]
    fn detuning_antisymmetric(n1 in 0usize..20, l1 in 0usize..50, n2 in 0usize..20, l2 in 0usize..50) {
        let dq = trap(8e9, 16.3, 1800.0);
        prop_assert_eq!(delta_s(&dq, n1, l1, n2, l2), -delta_s(&dq, n2, l2, n1, l1));
    }

    #[test]
    fn residual_zero_without_motion(jxy in 1.0f64..1e6, b in 0.0f64..3000.0) {
        let dq = trap(8e9, 16.3, b);
        let e = error_residual(&dq, &ThermalOccupations::GROUND, jxy).unwrap().e_r;
        prop_assert!(e.abs() < 1e-12);
    }
}

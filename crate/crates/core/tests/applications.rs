use aris_core::channels::RngSeed;
use aris_core::d2d::{self, D2DOptions, D2DScenario};
use aris_core::linalg::{CMatrix, CVector};
use aris_core::pls::{self, PlsOptions, PlsScenario};
use aris_core::radarcomm::{self, LinkStrengths};
use aris_core::solvers::{ls_gradient, ls_objective, solve_disk_ls, solve_unit_modulus_gp, SolverOptions};
use aris_core::{ReflectionMode, C64};
use proptest::prelude::*;

const UNIT: LinkStrengths = LinkStrengths { direct_db: 0.0, to_ris_db: 0.0, from_ris_db: 0.0 };

fn radar(n: usize, m: usize, k: usize, direct_db: f64, seed: u64) -> radarcomm::RadarCommInstance {
    radarcomm::rayleigh_instance(n, m, k, LinkStrengths { direct_db, ..UNIT }, RngSeed(seed)).unwrap()
}

#[test]
fn more_elements_never_raise_the_absorptive_residual() {
    let opts = SolverOptions::least_squares();
    for seed in 0..20 {
        let full = radar(4, 4, 24, 10.0, seed);
        let mut previous = f64::INFINITY;
        for k in [2, 4, 8, 12, 16, 24] {
            let r = radarcomm::design_aris(&full.truncated(k).unwrap(), &opts).unwrap().residual;
            assert!(r <= previous * (1.0 + 1e-6) + 1e-9, "seed {seed}, K {k}: {r} > {previous}");
            previous = r;
        }
    }
}

#[test]
fn least_squares_gradient_matches_finite_differences() {
    let inst = radar(3, 2, 5, 0.0, 4);
    let (a, d) = radarcomm::build_ls_system(&inst);
    let phi = CVector::from_fn(5, |i, _| C64::from_polar(0.3 + 0.1 * i as f64, i as f64));
    let g = ls_gradient(&a, &d, &phi);
    let h = 1e-6;
    for i in 0..5 {
        for (dir, part) in [(C64::new(h, 0.0), g[i].re), (C64::new(0.0, h), g[i].im)] {
            let mut up = phi.clone();
            up[i] += dir;
            let mut down = phi.clone();
            down[i] -= dir;
            let fd = (ls_objective(&a, &d, &up) - ls_objective(&a, &d, &down)) / (2.0 * h);
            assert!((fd - part).abs() < 1e-5 * part.abs().max(1.0), "entry {i}: {fd} vs {part}");
        }
    }
}

#[test]
fn least_squares_traces_are_monotone() {
    let opts = SolverOptions::least_squares();
    for seed in 0..10 {
        let inst = radar(4, 4, 16, 5.0, seed);
        let (a, d) = radarcomm::build_ls_system(&inst);
        for sol in [solve_disk_ls(&a, &d, &opts).unwrap(), solve_unit_modulus_gp(&a, &d, &opts).unwrap()] {
            for w in sol.trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "seed {seed}: {} -> {}", w[0], w[1]);
            }
            let f: CMatrix<f64> = inst.effective_channel(&sol.phi).unwrap();
            assert!((f.norm() - sol.residual).abs() < 1e-9 * sol.residual.max(1.0));
        }
    }
}

#[test]
fn doubling_transmit_power_never_lowers_the_worst_sinr() {
    let sc = D2DScenario { links: 2, elements: 6, direct_db: 0.0, to_ris_db: 0.0, from_ris_db: 0.0, power: 10.0, noise_var: 1.0 };
    let opts = D2DOptions::default();
    for seed in 0..20 {
        let inst = d2d::rayleigh_instance(&sc, RngSeed(seed)).unwrap();
        let low = d2d::maxmin_design(&inst, ReflectionMode::Absorptive, &opts).unwrap();
        let high = d2d::maxmin_design(&inst.with_uniform_power(20.0).unwrap(), ReflectionMode::Absorptive, &opts).unwrap();
        assert!(high.worst_sinr >= low.worst_sinr, "seed {seed}: {} < {}", high.worst_sinr, low.worst_sinr);
    }
}

#[test]
fn dinkelbach_parameters_never_decrease() {
    let d2d_sc = D2DScenario { links: 3, elements: 8, direct_db: 0.0, to_ris_db: 0.0, from_ris_db: 0.0, power: 30.0, noise_var: 1.0 };
    let pls_sc = PlsScenario::uniform(6, 0.0);
    for seed in 0..10 {
        let inst = d2d::rayleigh_instance(&d2d_sc, RngSeed(seed)).unwrap();
        let (a, c) = d2d::maxmin_design_pair(&inst, &D2DOptions::default()).unwrap();
        let inst = pls::rayleigh_instance(&pls_sc, RngSeed(seed)).unwrap();
        let b = pls::maximize_secrecy(&inst, ReflectionMode::Absorptive, &PlsOptions::default()).unwrap();
        for trace in [&a.lambda_trace, &c.lambda_trace, &b.lambda_trace] {
            assert!(trace.windows(2).all(|w| w[1] >= w[0]), "seed {seed}: {trace:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn absorptive_residual_never_exceeds_phase_only(seed in any::<u64>(), n in 1usize..4, m in 1usize..4, k in 1usize..6, direct_db in -10.0f64..20.0) {
        let inst = radar(n, m, k, direct_db, seed);
        let opts = SolverOptions::least_squares();
        let a = radarcomm::design_aris(&inst, &opts).unwrap();
        let c = radarcomm::design_conventional(&inst, &opts).unwrap();
        prop_assert!(a.residual <= c.residual * (1.0 + 1e-6) + 1e-9);
        prop_assert!(a.phi.moduli().iter().all(|&r| r <= 1.0 + 1e-12));
        prop_assert!(c.phi.moduli().iter().all(|&r| (r - 1.0).abs() < 1e-9));
    }

    #[test]
    fn absorptive_residual_never_exceeds_the_surface_off(seed in any::<u64>(), k in 1usize..8) {
        let inst = radar(3, 3, k, 0.0, seed);
        let a = radarcomm::design_aris(&inst, &SolverOptions::least_squares()).unwrap();
        prop_assert!(a.residual <= inst.direct.norm() * (1.0 + 1e-9));
    }
}

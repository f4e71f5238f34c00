use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twospin::bethe::{bethe_vector, solve_bae, SolverConfig, VacuumData};
use twospin::integrable::{r_matrix, ybe_residual, POLE_GUARD};
use twospin::oracle::sector_spectrum;
use twospin::sampling::random_spec;
use twospin::spin::total_sz;
use twospin::{build_hamiltonian, couplings_from_spec, fit_parameters, CouplingSet, FitOutcome, IntegrableModel, ModelSpec, SiteList, Spin};

fn cluster() -> impl Strategy<Value = SiteList> {
    let species = prop::collection::vec(1u32..=2, 1..=2);
    (species.clone(), species).prop_map(|(a, b)| {
        let to_spins = |v: Vec<u32>| v.into_iter().map(|t| Spin::from_twice(t).unwrap()).collect();
        SiteList::new(to_spins(a), to_spins(b)).unwrap()
    })
}

fn spec() -> impl Strategy<Value = ModelSpec> {
    (cluster(), any::<u64>()).prop_map(|(s, seed)| random_spec(s, &mut ChaCha8Rng::seed_from_u64(seed)))
}

fn away_from_pole(z: Complex64, eta: f64) -> bool {
    (z + eta).norm() > 1e3 * POLE_GUARD
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn yang_baxter_holds(ur in -5.0..5.0f64, ui in -5.0..5.0f64, vr in -5.0..5.0f64, vi in -5.0..5.0f64, eta in 0.2..2.0f64) {
        let (u, v) = (Complex64::new(ur, ui), Complex64::new(vr, vi));
        prop_assume!(away_from_pole(u, eta) && away_from_pole(v, eta) && away_from_pole(u - v, eta));
        prop_assert!(ybe_residual(u, v, eta).unwrap() <= 1e-12);
    }

    #[test]
    fn r_matrix_is_identity_plus_permutation(ur in -5.0..5.0f64, ui in -5.0..5.0f64, eta in 0.2..2.0f64) {
        let u = Complex64::new(ur, ui);
        prop_assume!(away_from_pole(u, eta));
        let r = r_matrix(u, eta).unwrap();
        let s = u + eta;
        // (u + eta) R = u I + eta P
        for row in 0..4 {
            for col in 0..4 {
                let id = if row == col { u } else { Complex64::new(0.0, 0.0) };
                let swap = |i: usize| (i % 2) * 2 + i / 2;
                let perm = if swap(row) == col { Complex64::new(eta, 0.0) } else { Complex64::new(0.0, 0.0) };
                prop_assert!((r[(row, col)] * s - id - perm).norm() <= 1e-12 * s.norm().max(1.0));
            }
        }
    }

    #[test]
    fn hamiltonian_forms_agree_and_conserve_sz(spec in spec()) {
        let model = IntegrableModel::new(spec.clone()).unwrap();
        let h = model.hamiltonian().unwrap();
        let h2 = build_hamiltonian(&couplings_from_spec(&spec).unwrap(), &spec.sites).unwrap();
        let scale = h.max_abs().max(1.0);
        prop_assert!((&h - &h2).max_abs() <= 1e-10 * scale);
        prop_assert!(h.hermiticity_defect() <= 1e-12 * scale);
        prop_assert!(h.commutator(&total_sz(&spec.sites)).max_abs() <= 1e-11 * scale);
    }

    #[test]
    fn fit_round_trip(spec in spec()) {
        let cs = couplings_from_spec(&spec).unwrap();
        let fitted = match fit_parameters(&cs, &spec.sites) {
            FitOutcome::Feasible { spec } => spec,
            FitOutcome::Infeasible { reasons } => return Err(TestCaseError::fail(reasons.join("; "))),
        };
        let back = couplings_from_spec(&fitted).unwrap();
        prop_assert!(coupling_gap(&cs, &back) <= 1e-8 * cs.max_abs().max(1.0));
    }

    #[test]
    fn bethe_energies_lie_in_exact_spectrum(seed in any::<u64>()) {
        let spec = random_spec(SiteList::spin_half(1, 1).unwrap(), &mut ChaCha8Rng::seed_from_u64(seed));
        let model = IntegrableModel::new(spec.clone()).unwrap();
        let oracle = sector_spectrum(&model.hamiltonian().unwrap(), &spec.sites).unwrap();
        let labelled = oracle.labelled();
        let vac = VacuumData::product(&spec);
        let sz = total_sz(&spec.sites);
        for n in 0..=1 {
            for roots in solve_bae(n, &spec, &SolverConfig::default()).solutions {
                let Ok(e) = twospin::bethe::energy(&roots, &spec) else { continue };
                let target = vac.m_a + vac.m_b - n as f64;
                let near = labelled
                    .iter()
                    .filter(|(s, _)| (s.value() - target).abs() < 1e-12)
                    .any(|&(_, x)| (x - e).abs() <= 1e-7 * (1.0 + e.abs()));
                prop_assert!(near, "energy {e} for N = {n} not in the exact spectrum");
                let psi = bethe_vector(&model, &vac, &roots.roots);
                if !psi.null {
                    let m = sz.expectation(&psi.state).re / psi.state.norm_squared();
                    prop_assert!((m - target).abs() <= 1e-11);
                }
            }
        }
    }
}

fn coupling_gap(x: &CouplingSet, y: &CouplingSet) -> f64 {
    let flat = |c: &CouplingSet| -> Vec<f64> {
        let mut v = [&c.bz_a, &c.bz_b, &c.d_a, &c.d_b].iter().flat_map(|r| r.iter().copied()).collect::<Vec<_>>();
        for m in [&c.jz_aa, &c.jz_bb, &c.jz_ab, &c.jxy_ab] {
            v.extend(m.iter().flatten().copied());
        }
        v
    };
    flat(x).iter().zip(flat(y)).fold(0.0, |w, (a, b)| w.max((a - b).abs()))
}

//! Property tests over random systems, dwell specifications and sequences.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use impulse_iqc::analysis::{min_gain, SystemRef, TestKind, TestOptions};
use impulse_iqc::dwell::{enumerate_paths, is_admissible, sample_sequence, DwellSpec, Path, Policy};
use impulse_iqc::iqcfilter::basis_filter;
use impulse_iqc::matcore::{max_abs, Mat};
use impulse_iqc::model::{closed_loop, feedback_to_jump, jump_to_feedback, EstimationPlant, Estimator, JumpForm};
use impulse_iqc::sim::{empirical_gain, simulate, simulate_jump};

fn rmat(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-s..s))
}

fn jump_form(seed: u64, n: usize, nd: usize, ne: usize, rho: f64) -> JumpForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = rmat(&mut rng, n, n, 1.0);
    let r = a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max);
    if r > 1e-9 {
        a *= rho / r;
    }
    JumpForm::new(
        a,
        rmat(&mut rng, n, nd, 1.0),
        rmat(&mut rng, ne, n, 1.0),
        rmat(&mut rng, ne, nd, 0.5),
        rmat(&mut rng, n, n, 1.5),
        rmat(&mut rng, n, nd, 1.0),
        rmat(&mut rng, ne, n, 1.0),
        rmat(&mut rng, ne, nd, 0.5),
    )
    .unwrap()
}

fn estimation_plant(seed: u64, n: usize) -> EstimationPlant {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nz, nd, nv, ny) = (n + 1, 1, 1, 2);
    let mut r = |a, b| rmat(&mut rng, a, b, 1.0);
    EstimationPlant {
        a: r(n, n),
        bw: r(n, nz),
        bd: r(n, nd),
        cz: r(nz, n),
        dzw: Mat::zeros(nz, nz),
        dzd: r(nz, nd),
        cv: r(nv, n),
        dvw: r(nv, nz),
        dvd: r(nv, nd),
        cy: r(ny, n),
        dyw: r(ny, nz),
        dyd: r(ny, nd),
    }
}

fn estimator(seed: u64, order: usize, ny: usize, nv: usize) -> Estimator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Estimator {
        ae: rmat(&mut rng, order, order, 1.0),
        be: rmat(&mut rng, order, ny, 1.0),
        ce: rmat(&mut rng, nv, order, 1.0),
        de: rmat(&mut rng, nv, ny, 1.0),
    }
}

fn rdt() -> impl Strategy<Value = DwellSpec> {
    (1u32..6, 0u32..5).prop_map(|(lo, w)| DwellSpec::Rdt(lo, lo + w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_feedback_round_trip(seed in any::<u64>(), n in 1usize..4, nd in 0usize..3, ne in 0usize..3) {
        let j = jump_form(seed, n, nd, ne, 0.9);
        let back = feedback_to_jump(&jump_to_feedback(&j)).unwrap();
        for (x, y) in [(&j.aj, &back.aj), (&j.bj, &back.bj), (&j.cj, &back.cj), (&j.dj, &back.dj), (&j.a, &back.a), (&j.d, &back.d)] {
            prop_assert!(max_abs(&(x - y)) <= 1e-12);
        }
    }

    #[test]
    fn sampled_sequences_satisfy_spec(spec in rdt(), seed in any::<u64>(), horizon in 1i64..200) {
        for policy in [Policy::Minimal, Policy::Maximal, Policy::UniformRandom { seed }] {
            let seq = sample_sequence(&spec, horizon, policy).unwrap();
            prop_assert!(seq.satisfies(&spec));
            prop_assert!(seq.instants().iter().all(|&t| (0..=horizon).contains(&t)));
        }
    }

    #[test]
    fn unbounded_specs_sample_minimal(lo in 1u32..6, horizon in 1i64..100) {
        for spec in [DwellSpec::Mdt(lo), DwellSpec::Adt] {
            let seq = sample_sequence(&spec, horizon, Policy::Minimal).unwrap();
            prop_assert!(seq.satisfies(&spec));
        }
    }

    #[test]
    fn enumeration_matches_brute_force(spec in rdt(), l in 1usize..10) {
        let (tmin, tmax) = spec.range().unwrap();
        let mut brute: Vec<Path> = (0u32..(1 << l))
            .map(|m| Path((0..l).map(|i| ((m >> i) & 1) as u8).collect()))
            .filter(|p| is_admissible(p, tmin, tmax))
            .collect();
        brute.sort();
        prop_assert_eq!(enumerate_paths(tmin, tmax, l), brute);
    }

    #[test]
    fn basis_filter_is_nilpotent(nz in 1usize..4, nw in 1usize..4, nu in 0usize..5) {
        let psi = basis_filter(nz, nw, nu);
        prop_assert_eq!(psi.m(), (nz + nw) * (nu + 1));
        prop_assert_eq!(psi.nxi(), (nz + nw) * nu);
        let mut p = Mat::identity(psi.nxi(), psi.nxi());
        for _ in 0..nu {
            p = &p * &psi.a;
        }
        prop_assert!(max_abs(&p) == 0.0);
    }

    #[test]
    fn closed_loop_is_affine_in_estimator(seed in any::<u64>(), n in 1usize..4, order in 0usize..3, alpha in -2.0f64..2.0) {
        let p = estimation_plant(seed, n);
        let e1 = estimator(seed ^ 1, order, p.ny(), p.nv());
        let e2 = estimator(seed ^ 2, order, p.ny(), p.nv());
        let mix = Estimator {
            ae: &e1.ae * alpha + &e2.ae * (1.0 - alpha),
            be: &e1.be * alpha + &e2.be * (1.0 - alpha),
            ce: &e1.ce * alpha + &e2.ce * (1.0 - alpha),
            de: &e1.de * alpha + &e2.de * (1.0 - alpha),
        };
        let (f1, f2, fm) = (closed_loop(&p, &e1).unwrap(), closed_loop(&p, &e2).unwrap(), closed_loop(&p, &mix).unwrap());
        let pairs = [
            (&fm.a, &f1.a, &f2.a), (&fm.bw, &f1.bw, &f2.bw), (&fm.b, &f1.b, &f2.b),
            (&fm.c, &f1.c, &f2.c), (&fm.dew, &f1.dew, &f2.dew), (&fm.d, &f1.d, &f2.d),
        ];
        for (m, x, y) in pairs {
            prop_assert!(max_abs(&(m - (x * alpha + y * (1.0 - alpha)))) <= 1e-10);
        }
    }

    #[test]
    fn feedback_and_jump_simulations_agree(seed in any::<u64>(), n in 1usize..4, spec in rdt()) {
        let j = jump_form(seed, n, 1, 1, 0.95);
        let f = jump_to_feedback(&j);
        let horizon = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = sample_sequence(&spec, horizon as i64, Policy::UniformRandom { seed }).unwrap();
        let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let d = rmat(&mut rng, 1, horizon, 1.0);
        let a = simulate(&f, &seq, &x0, &d, horizon).unwrap();
        let b = simulate_jump(&j, &seq, &x0, &d, horizon).unwrap();
        let scale = 1.0 + max_abs(&a.x).max(max_abs(&a.e));
        prop_assert!(max_abs(&(&a.x - &b.x)) <= 1e-10 * scale);
        prop_assert!(max_abs(&(&a.e - &b.e)) <= 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn clock_gain_monotone_in_tmax(seed in any::<u64>(), n in 1usize..3, lo in 1u32..3, w in 0u32..2) {
        let j = jump_form(seed, n, 1, 1, 0.8);
        let opts = TestOptions::default();
        let (g0, _) = min_gain(TestKind::Clock, SystemRef::Jump(&j), &DwellSpec::Rdt(lo, lo + w), &opts).unwrap();
        let (g1, _) = min_gain(TestKind::Clock, SystemRef::Jump(&j), &DwellSpec::Rdt(lo, lo + w + 1), &opts).unwrap();
        prop_assert!(g0 <= g1 * (1.0 + 1e-3) + 1e-6, "γ {g0} > {g1}");
    }

    #[test]
    fn certified_gain_bounds_empirical_gain(seed in any::<u64>(), n in 1usize..3, spec in rdt()) {
        let j = jump_form(seed, n, 1, 1, 0.8);
        let (g, _) = min_gain(TestKind::Lifting, SystemRef::Jump(&j), &spec, &TestOptions::default()).unwrap();
        prop_assume!(g.is_finite());
        let emp = empirical_gain(&jump_to_feedback(&j), &spec, 12, 120, seed).unwrap();
        prop_assert!(emp <= g * (1.0 + 1e-6), "empirical {emp} > certified {g}");
    }
}

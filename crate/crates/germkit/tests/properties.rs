//! Property-based invariants over randomized inputs: the symplectic form,
//! Krein values, subspace geometry, the quotient frame, the stability
//! classifier, and the monodromy pipeline.

mod common;

use common::{coarse_step, random_block_symplectic, random_symplectic, specs, BlockKind};
use germkit::germ::analyze_model;
use germkit::linalg::{self, C64};
use germkit::monodromy::{integrate_combined, wrapped_distance, HamiltonianModel};
use germkit::models::make_cyclic_model;
use germkit::pli;
use germkit::spectral::{classify_stability, SpectralTolerances};
use germkit::symcore::{subspace_distance, Subspace, SymplecticSpace};
use ndarray::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_cvec<R: Rng>(rng: &mut R, dim: usize) -> Array1<C64> {
    Array1::from_shape_fn(dim, |_| {
        linalg::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

fn rand_subspace<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> Subspace {
    loop {
        let b = Array2::from_shape_fn((dim, rank), |_| {
            linalg::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        if let Ok(s) = Subspace::new(b) {
            return s;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn form_is_antisymmetric_and_bilinear(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = SymplecticSpace::new(n);
        let x = rand_cvec(&mut rng, 2 * n);
        let y = rand_cvec(&mut rng, 2 * n);
        let z = rand_cvec(&mut rng, 2 * n);
        let a = linalg::c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let xy = space.form_value(&x.view(), &y.view()).unwrap();
        let yx = space.form_value(&y.view(), &x.view()).unwrap();
        prop_assert!((xy + yx).norm() < 1e-12);
        // bilinearity (not sesquilinearity) in the first slot
        let ax_plus_z = &x.mapv(|v| v * a) + &z;
        let lhs = space.form_value(&ax_plus_z.view(), &y.view()).unwrap();
        let rhs = a * xy + space.form_value(&z.view(), &y.view()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn krein_value_flips_under_conjugation(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = SymplecticSpace::new(n);
        let x = rand_cvec(&mut rng, 2 * n);
        let k = space.krein_value(&x.view()).unwrap();
        let kc = space.krein_value(&x.mapv(|v| v.conj()).view()).unwrap();
        prop_assert!((k + kc).abs() < 1e-12);
    }

    #[test]
    fn subspace_distance_is_a_pseudometric(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * n;
        let rank = rng.gen_range(1..=n);
        let a = rand_subspace(&mut rng, dim, rank);
        let b = rand_subspace(&mut rng, dim, rank);
        let c = rand_subspace(&mut rng, dim, rank);
        prop_assert!(subspace_distance(&a, &a) < 1e-12);
        let dab = subspace_distance(&a, &b);
        let dba = subspace_distance(&b, &a);
        prop_assert!((dab - dba).abs() < 1e-10);
        let dac = subspace_distance(&a, &c);
        let dcb = subspace_distance(&c, &b);
        prop_assert!(dab <= dac + dcb + 1e-10);
        // distance is scale invariant in the basis
        let scaled = Subspace::new(a.basis().mapv(|v| v * linalg::c(3.0, -1.0))).unwrap();
        prop_assert!(subspace_distance(&a, &scaled) < 1e-10);
    }

    #[test]
    fn classifier_is_conjugation_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2;
        let blocks = [
            BlockKind::Rotation(rng.gen_range(0.3..2.8)),
            if rng.gen_bool(0.5) {
                BlockKind::Identity
            } else {
                BlockKind::Hyperbolic(rng.gen_range(0.05..0.4))
            },
        ];
        let (s, _) = random_block_symplectic(&mut rng, n, &blocks);
        let space = SymplecticSpace::new(n);
        let tols = SpectralTolerances::default();
        let class_a = classify_stability(&space, &s, &tols).unwrap().class;
        let p = linalg::to_complex(&random_symplectic(&mut rng, n, 0.3));
        let pinv = linalg::pinv(&p, 1e-12);
        let conjugated = p.dot(&s).dot(&pinv);
        let class_b = classify_stability(&space, &conjugated, &tols).unwrap().class;
        prop_assert_eq!(class_a, class_b);
    }

    #[test]
    fn stable_powers_stay_symplectic_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2;
        let blocks = [
            BlockKind::Rotation(rng.gen_range(0.3..2.8)),
            BlockKind::Rotation(rng.gen_range(0.3..2.8)),
        ];
        let (s, cond) = random_block_symplectic(&mut rng, n, &blocks);
        let space = SymplecticSpace::new(n);
        let mut p = s.clone();
        for _ in 0..6 {
            p = p.dot(&s);
            prop_assert!(space.symplectic_residual(&p).unwrap() < 1e-8);
            prop_assert!(linalg::spectral_norm(&p) <= 1.05 * cond + 1.0);
        }
    }

    #[test]
    fn pli_subspace_survives_operator_squaring(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 2;
        let mut a1: f64 = rng.gen_range(0.3..1.4);
        let a2 = rng.gen_range(1.6..2.8);
        if (a1 - a2).abs() < 0.2 { a1 += 0.25; }
        let (s, _) = random_block_symplectic(
            &mut rng,
            n,
            &[BlockKind::Rotation(a1), BlockKind::Rotation(a2)],
        );
        let space = SymplecticSpace::new(n);
        let tols = SpectralTolerances::default();
        let single = pli::pli_common(&space, &[s.clone()], &tols).unwrap();
        let with_square = pli::pli_common(&space, &[s.clone(), s.dot(&s)], &tols).unwrap();
        // adding a power of the same operator cannot move the subspace
        prop_assert!(subspace_distance(&single.subspace, &with_square.subspace) < 1e-8);
        let v = pli::verify_pli(&space, &[s], &single.subspace, 1e-8).unwrap();
        prop_assert!(v.pass);
    }

    #[test]
    fn wrapped_distance_handles_angle_periodicity(
        x in -10.0f64..10.0,
        turns in -3i32..3,
    ) {
        let tau = 2.0 * std::f64::consts::PI;
        let a = Array1::from(vec![x, 1.0]);
        let b = Array1::from(vec![x + turns as f64 * tau, 1.0]);
        let mask = vec![true, false];
        prop_assert!(wrapped_distance(&a, &b, &mask) < 1e-9);
        let c = Array1::from(vec![x, 2.0]);
        prop_assert!((wrapped_distance(&a, &c, &mask) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn quotient_projection_embeds_consistently() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tols = SpectralTolerances::default();
    let model = make_cyclic_model(&specs::k2_harmonic(1.3)).unwrap();
    let analysis = analyze_model(&model, &tols, coarse_step()).unwrap();
    let frame = &analysis.monodromy.frame;
    for _ in 0..50 {
        let r = rand_cvec(&mut rng, frame.reduced_dim());
        let v = frame.embed(&r.view());
        let back = frame.project(&v.view());
        for i in 0..frame.reduced_dim() {
            assert!((back[i] - r[i]).norm() < 1e-9);
        }
    }
}

#[test]
fn monodromy_is_base_point_independent() {
    let tols = SpectralTolerances::default();
    let step = coarse_step();
    let mut spec = specs::harmonic(2.0f64.sqrt());
    let a = analyze_model(&make_cyclic_model(&spec).unwrap(), &tols, step).unwrap();
    spec.base_point.theta = vec![1.1];
    spec.base_point.actions = vec![0.4];
    let b = analyze_model(&make_cyclic_model(&spec).unwrap(), &tols, step).unwrap();
    let d = (&a.monodromy.monodromies[0] - &b.monodromy.monodromies[0])
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    assert!(d < 1e-9, "monodromy moved by {d:.3e} under base-point change");
}

#[test]
fn combined_flow_has_the_group_property() {
    let model = make_cyclic_model(&specs::k2_harmonic(1.7)).unwrap();
    let step = coarse_step();
    let start = model.base_point();
    let t1 = Array1::from(vec![0.4, -0.3]);
    let t2 = Array1::from(vec![0.25, 0.6]);
    let (mid, y1) = integrate_combined(&model, &t1.view(), &start, step).unwrap();
    let (end_a, y2) = integrate_combined(&model, &t2.view(), &mid, step).unwrap();
    let total = &t1 + &t2;
    let (end_b, y12) = integrate_combined(&model, &total.view(), &start, step).unwrap();
    let dz = (&end_a - &end_b).iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let dy = (&y2.dot(&y1) - &y12)
        .iter()
        .map(|x| x.abs())
        .fold(0.0f64, f64::max);
    assert!(dz < 1e-9 && dy < 1e-9, "group property violated: dz {dz:.3e}, dy {dy:.3e}");
}

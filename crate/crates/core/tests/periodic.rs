mod common;

use minmax_tori::periodic::{beurling, d_z, d_zbar, dbar_inverse, dz_inverse, forward_transform, PGrid};
use proptest::prelude::*;

#[test]
fn round_trip_random_real_field() {
    let mut rng = common::rng(1);
    let f = common::smooth_real(&mut rng, 32, 64, 6);
    let back = forward_transform(&f).inverse();
    assert!(back.sub(&f).sup_norm() <= 1e-12 * f.sup_norm());
}

#[test]
fn dbar_inverse_is_a_right_inverse() {
    let mut rng = common::rng(2);
    let f = common::smooth_complex(&mut rng, 32, 32, 8).remove_mean();
    let s = dbar_inverse(&f).unwrap();
    assert!(d_zbar(&s).sub(&f).sup_norm() < 1e-10);
    assert!(s.mean().norm() < 1e-14);
    let t = dz_inverse(&f).unwrap();
    assert!(d_z(&t).sub(&f).sup_norm() < 1e-10);
}

#[test]
fn beurling_maps_dbar_to_d() {
    let mut rng = common::rng(3);
    let u = common::smooth_complex(&mut rng, 32, 32, 8).remove_mean();
    assert!(beurling(&d_zbar(&u)).sub(&d_z(&u)).sup_norm() < 1e-10);
}

#[test]
fn pgrid_file_round_trip() {
    let mut rng = common::rng(4);
    let f = common::smooth_complex(&mut rng, 8, 16, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.pgrid");
    PGrid::from_complex(&f).write(&path).unwrap();
    let g = PGrid::read(&path).unwrap().to_complex().unwrap();
    assert_eq!(g, f);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn beurling_is_an_isometry_on_zero_mean(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let f = common::smooth_complex(&mut rng, 16, 16, 7).remove_mean();
        let b = beurling(&f);
        prop_assert!((b.l2_norm() - f.l2_norm()).abs() <= 1e-12 * f.l2_norm().max(1.0));
    }

    #[test]
    fn derivatives_commute(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let f = common::smooth_complex(&mut rng, 16, 32, 7);
        let a = d_z(&d_zbar(&f));
        let b = d_zbar(&d_z(&f));
        prop_assert!(a.sub(&b).l2_norm() <= 1e-10 * f.l2_norm());
    }

    #[test]
    fn dbar_of_real_is_conjugate_of_d(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let f = common::smooth_real(&mut rng, 16, 16, 8);
        let a = d_zbar(&f);
        let b = d_z(&f).map(|z| z.conj());
        prop_assert!(a.sub(&b).sup_norm() <= 1e-12);
    }

    #[test]
    fn unit_modulus_multiplier(m in -64i64..64, n in -64i64..64) {
        prop_assume!((m, n) != (0, 0));
        let s = minmax_tori::periodic::beurling_symbol(m, n, false, false);
        prop_assert!((s.norm() - 1.0).abs() < 1e-15);
    }
}

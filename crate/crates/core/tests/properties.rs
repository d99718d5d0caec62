use ap3_core::bohr::{bohr_set, smooth};
use ap3_core::lambda::{count_t3, lambda_direct, lambda_indicator, lambda_spectral};
use ap3_core::minimizer::{extract_level_set, round_to_indicator};
use ap3_core::r3::{behrend_construct, is_ap_free};
use ap3_core::zp::{affine_image, GridFn, IndicatorSet, PrimeField};
use proptest::prelude::*;

const PRIMES: [u64; 6] = [5, 7, 11, 13, 31, 97];

fn density_fn() -> impl Strategy<Value = GridFn> {
    prop::sample::select(&PRIMES[..]).prop_flat_map(|p| {
        prop::collection::vec(0.0f64..=1.0, p as usize)
            .prop_map(move |v| GridFn::density(PrimeField::new(p).unwrap(), v).unwrap())
    })
}

fn indicator() -> impl Strategy<Value = IndicatorSet> {
    prop::sample::select(&PRIMES[..]).prop_flat_map(|p| {
        prop::collection::vec(any::<bool>(), p as usize).prop_map(move |bits| {
            let field = PrimeField::new(p).unwrap();
            IndicatorSet::from_members(field, bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
        })
    })
}

proptest! {
    #[test]
    fn lambda_paths_agree(f in density_fn()) {
        prop_assert!((lambda_spectral(&f).unwrap() - lambda_direct(&f)).abs() <= 1e-9);
        prop_assert!(lambda_direct(&f) >= -1e-12);
    }

    #[test]
    fn indicator_lambda_counts_trivial_progressions(s in indicator()) {
        let p = s.field().p() as f64;
        let expect = (count_t3(&s) as f64 + s.len() as f64) / (p * p);
        prop_assert!((lambda_indicator(&s) - expect).abs() <= 1e-12);
    }

    #[test]
    fn affine_images_preserve_lambda(s in indicator(), m in 1usize..1000, t in 0usize..1000) {
        let p = s.field().p();
        let m = 1 + m % (p - 1);
        let image = affine_image(&s, m, t % p);
        prop_assert_eq!(image.len(), s.len());
        prop_assert_eq!(count_t3(&image), count_t3(&s));
    }

    #[test]
    fn rounding_is_nearest(f in density_fn()) {
        let (c, dist) = round_to_indicator(&f);
        let manual: f64 = f.values().iter().map(|&v| v.min(1.0 - v)).sum();
        prop_assert!((dist - manual).abs() <= 1e-9);
        prop_assert!((c.as_gridfn().l1_distance(&f) - dist).abs() <= 1e-9);
        prop_assert!(extract_level_set(&f).distance + 1e-9 >= dist);
    }

    #[test]
    fn smoothing_keeps_mean_and_range(f in density_fn(), b in 0usize..97, eps0 in 0.05f64..0.5) {
        let field = f.field();
        let set = bohr_set(&[b % field.p()], eps0, field).unwrap();
        prop_assert!(set.is_symmetric());
        let g = smooth(&f, &set).unwrap();
        prop_assert!((g.mean() - f.mean()).abs() <= 1e-9);
        prop_assert!(g.min() >= f.min() - 1e-12 && g.max() <= f.max() + 1e-12);
    }

    #[test]
    fn behrend_sets_are_progression_free(n in 8usize..400) {
        prop_assert!(is_ap_free(&behrend_construct(n).unwrap()));
    }
}

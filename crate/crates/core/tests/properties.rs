use harmpack_core::boundcert::{pattern_max, Certifier, LinearConstraint, PatternModel, PiecewiseFn, TailMode};
use harmpack_core::harmonic1d::{w_h, HarmonicState};
use harmpack_core::pack2d::{slices_by_type, validate_geometry, w2d, Item2D, Orientation, TensorRun};
use harmpack_core::params::builtin_shplus;
use harmpack_core::rational::{parse_rational, q_int, rat, render_fraction, to_q, Rational};
use harmpack_core::superharmonic::ShState;
use harmpack_core::weighting::WeightFunctionSet;
use harmpack_core::Q;
use num_traits::Zero;
use proptest::prelude::*;

// Mostly grid sizes in (0, 1], with some tiny ones below 1/38.
fn size() -> impl Strategy<Value = Rational> {
    prop_oneof![
        4 => (1..=1000i128).prop_map(|n| rat(n, 1000)),
        1 => (1..=2630i128).prop_map(|n| rat(n, 100_000)),
    ]
}

fn weights(n: usize) -> impl Strategy<Value = PiecewiseFn> {
    (prop::collection::vec(0..=2000i64, n), 0..=2000i64).prop_map(|(v, t)| PiecewiseFn {
        values: v.into_iter().map(|x| q_int(x) / q_int(1000)).collect(),
        tail_slope: q_int(t) / q_int(1000),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counter_law_after_every_insertion(sizes in prop::collection::vec(size(), 1..400)) {
        let table = builtin_shplus();
        let mut sh = ShState::new(&table).unwrap();
        for s in sizes {
            let p = sh.insert(s).unwrap();
            prop_assert!(sh.check_step(&p).is_empty());
        }
        prop_assert!(sh.check_invariants().is_empty(), "{:?}", sh.check_invariants());
        prop_assert!(sh.check_structural_zeroes().is_empty());
        prop_assert_eq!(sh.census().total_bins(), sh.cost() as u64);
    }

    #[test]
    fn harmonic_within_its_weight(sizes in prop::collection::vec(size(), 0..500)) {
        let mut h = HarmonicState::new(38).unwrap();
        let mut weight = Rational::zero();
        for s in sizes {
            h.insert(s).unwrap();
            weight += w_h(s, 38).unwrap();
        }
        prop_assert!(Rational::from(h.cost() as i128) <= weight + Rational::from(38));
    }

    #[test]
    fn transpose_identity(i in 1..=7usize, j in 1..=7usize, x in size(), y in size()) {
        let set = WeightFunctionSet::new(&builtin_shplus());
        prop_assert_eq!(w2d(i, j, x, y, &set).unwrap(), w2d(j, i, y, x, &set).unwrap());
    }

    #[test]
    fn exact_tail_g_bounds_the_ratio(
        i in 1..=7usize,
        j in 1..=7usize,
        lambda in 400..=700i128,
        points in prop::collection::vec((size(), size()), 1..20),
    ) {
        let table = builtin_shplus();
        let set = WeightFunctionSet::new(&table);
        let certifier = Certifier::new(&set, PatternModel::basic(&table)).unwrap();
        let f = certifier.build_f(i, &to_q(&rat(lambda, 1000)));
        let g = certifier.build_g(i, j, &f, TailMode::Exact).unwrap();
        for (x, y) in points {
            let w = w2d(i, j, x, y, &set).unwrap();
            prop_assert!(w <= f.at(y, &set).unwrap() * g.at(x, &set).unwrap());
        }
    }

    #[test]
    fn tensor_geometry_and_slice_accounting(
        sides in prop::collection::vec((size(), size()), 0..300),
        transpose in any::<bool>(),
    ) {
        let table = builtin_shplus();
        let orientation = if transpose { Orientation::BxH } else { Orientation::HxB };
        let mut run = TensorRun::new(&table, orientation, rat(1, 10_000)).unwrap();
        for (w, h) in sides {
            run.insert(Item2D::new(w, h).unwrap()).unwrap();
        }
        prop_assert!(validate_geometry(&run.packing()).is_empty());
        let per_type = slices_by_type(&run, table.k());
        let sh = run.shelf_state();
        for i in 1..=table.k() {
            prop_assert_eq!(per_type[i - 1], sh.seen(i));
        }
        prop_assert_eq!(per_type[table.k()], sh.small_count());
    }

    #[test]
    fn cuts_never_raise_the_maximum(f in weights(12), coefs in prop::collection::vec(0..4i128, 12), rhs in 1..20i128) {
        let table = builtin_shplus();
        let loose = PatternModel::shplus(&table).unwrap().truncated(12).without_cuts();
        let cut = LinearConstraint::new((1..=12).zip(coefs.into_iter().map(|c| rat(c, 1))).collect(), rat(rhs, 1));
        let tight = loose.with_cut(cut).unwrap();
        let a = pattern_max(&f, &loose).unwrap();
        let b = pattern_max(&f, &tight).unwrap();
        prop_assert!(b.value <= a.value);
        prop_assert!(tight.admits(&b.pattern));
        prop_assert_eq!(harmpack_core::boundcert::objective(&f, &tight, &b.pattern), b.value);
    }

    #[test]
    fn fractions_round_trip(n in -10_000i128..10_000, d in 1..10_000i128) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rational(&render_fraction(&r)).unwrap(), r);
    }
}

#[test]
fn tiny_ratio_tail_can_understate_g() {
    // With λ ≠ 1/2 the tiny/tiny ratio need not be the supremum on tiny x.
    let table = builtin_shplus();
    let set = WeightFunctionSet::new(&table);
    let certifier = Certifier::new(&set, PatternModel::basic(&table)).unwrap();
    let x = rat(1, 100);
    let mut understated = 0;
    for i in 1..=7 {
        for j in 1..=7 {
            let f = certifier.build_f(i, &to_q(&rat(6, 10)));
            let compat = certifier.build_g(i, j, &f, TailMode::TinyRatio).unwrap();
            let exact = certifier.build_g(i, j, &f, TailMode::Exact).unwrap();
            assert_eq!(exact.values, compat.values);
            assert!(exact.tail_slope >= compat.tail_slope);
            // t_n is the right end of interval n
            for n in 1..=table.k() {
                let y = table.t(n);
                let w: Q = w2d(i, j, x, y, &set).unwrap();
                let fy = f.at(y, &set).unwrap();
                assert!(w <= &fy * exact.at(x, &set).unwrap());
                if w > fy * compat.at(x, &set).unwrap() {
                    understated += 1;
                }
            }
        }
    }
    assert!(understated > 0);
}

use dctif::coeffgen::{coefficient_table, DctifParams, FractionalPosition, MAX_J, MAX_S, MAX_TABS, MIN_TABS};
use dctif::fixedpoint::{quantize, truncate_to, QFormat};
use dctif::hwmodel::build_engine;
use dctif::regions::{compute_boundaries, saturation_start_bisection, saturation_start_closed_form, tanh_complement};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = DctifParams> {
    (MIN_TABS..=MAX_TABS, 1..=MAX_J, 1..=MAX_S).prop_filter_map("invalid", |(t, j, s)| DctifParams::new(t, j, s).ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_normalised_and_dc_preserving(p in params(), level in -40_000i64..40_000) {
        for set in coefficient_table(&p).unwrap().iter() {
            prop_assert_eq!(set.sum(), 1i64 << p.s());
            prop_assert_eq!(set.dot(&vec![level; set.values().len()]), level << p.s());
        }
    }

    #[test]
    fn even_tab_positions_mirror(p in params().prop_filter("even", |p| p.tab_count() % 2 == 0), r in 1u32..64) {
        let r = 1 + r % ((1 << p.j()) - 1);
        let table = coefficient_table(&p).unwrap();
        let pos = FractionalPosition::new(r, p.j()).unwrap();
        let a = table.get(r).unwrap().values().to_vec();
        let mut b = table.get(pos.mirrored().r()).unwrap().values().to_vec();
        b.reverse();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn saturation_bisection_matches_closed_form(eps in 1e-7f64..0.49) {
        let d = (saturation_start_bisection(eps).unwrap() - saturation_start_closed_form(eps)).abs();
        prop_assert!(d <= 1e-9);
    }

    #[test]
    fn region_boundaries_meet_tolerance(eps in 1e-7f64..0.2) {
        let b = compute_boundaries(eps).unwrap();
        prop_assert!(b.pass_end < b.sat_start);
        prop_assert!(b.pass_end - b.pass_end.tanh() <= eps);
        prop_assert!(tanh_complement(b.sat_start) <= eps * (1.0 + 1e-9));
    }

    #[test]
    fn truncation_never_rounds_up(raw in -2048i64..2048, drop in 0u32..6) {
        let from = QFormat::new(3, 8).unwrap();
        let to = QFormat::new(3, 8 - drop).unwrap();
        let v = from.from_raw(raw);
        let t = truncate_to(v, to);
        prop_assert!(t.to_real() <= v.to_real());
        prop_assert!(v.to_real() - t.to_real() < to.lsb());
    }

    #[test]
    fn engine_odd_and_bounded(tabs in prop::sample::select(vec![2u32, 4, 6]), s in 4u32..=6, x in -8.0f64..8.0) {
        let p = DctifParams::new(tabs, 2, s).unwrap();
        let e = build_engine(p, 1e-4, QFormat::new(3, 6).unwrap(), QFormat::new(0, 15).unwrap()).unwrap();
        let code = quantize(x, e.in_fmt());
        let y = e.evaluate(code);
        if code.raw() > e.in_fmt().min_raw() {
            prop_assert_eq!(e.evaluate(code.neg_saturating()).raw(), -y.raw());
        }
        prop_assert!(y.to_real().abs() < 1.0);
        prop_assert_eq!(e.evaluate_traced(code).output, y);
    }
}

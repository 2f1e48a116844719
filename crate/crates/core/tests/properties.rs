mod support;

use proptest::prelude::*;

#[test]
fn action_is_compatible_with_products() {
    support::action_property(1000).unwrap();
}

#[test]
fn mod_ell_homology_satisfies_universal_coefficients() {
    support::uct_property(1000).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn norm_is_multiplicative(
        (x, y) in support::field().prop_flat_map(|f| ((-50i64..50, -50i64..50), (-50i64..50, -50i64..50)).prop_map(move |((a, b), (c, d))| (f.int(a, b), f.int(c, d))))
    ) {
        prop_assert_eq!((x * y).norm(), x.norm() * y.norm());
        prop_assert_eq!((x * x.conj()).a, x.norm());
        prop_assert_eq!((x * x.conj()).b, 0);
    }
}

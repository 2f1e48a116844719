//! Independent recomputations of the field arithmetic and of the floor.

mod support;

use bianchi_core::iqfield::{class_group, is_squarefree, make_field};

#[test]
fn class_numbers_match_the_analytic_formula() {
    assert_eq!(support::class_number_mismatches(500), Vec::<i64>::new());
    let ones: Vec<i64> = (1..=500).filter(|&m| is_squarefree(m) && class_group(&make_field(m).unwrap()).class_number == 1).collect();
    assert_eq!(ones, [1, 2, 3, 7, 11, 19, 43, 67, 163]);
    assert_eq!(support::dirichlet_class_number(5), 2);
    assert_eq!(support::dirichlet_class_number(14), 4);
}

#[test]
fn floor_is_the_upper_envelope_of_all_hemispheres() {
    for m in [1, 2, 3, 5, 6, 7, 15, 19] {
        support::check_floor(m, 10_000, 7).unwrap();
    }
}

#[test]
fn squarefree_check() {
    let sf: Vec<i64> = (1..=20).filter(|&m| is_squarefree(m)).collect();
    assert_eq!(sf, [1, 2, 3, 5, 6, 7, 10, 11, 13, 14, 15, 17, 19]);
}

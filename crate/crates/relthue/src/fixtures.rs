//! Shared test data: the totally real cubic base field, its paired sextic
//! extension, the verified unit system, and the unit equation they induce.

use crate::bigfloat::Prec;
use crate::order::{elem_from_i64, make_context, OrderContext};
use crate::poly::IntPoly;
use crate::units::UnitSystem;
use crate::unitsolve::UnitEquation;

/// The totally real cubic base order `Z[μ]`, `μ³ − 8μ² + 15μ − 7 = 0`.
pub(crate) fn cubic_base() -> OrderContext {
    make_context(&IntPoly::from_i64(&[-7, 15, -8, 1]), Prec::new(60)).unwrap()
}

/// The sextic order `Z[γ]`, `γ² = μ`, paired with [`cubic_base`].
pub(crate) fn paired_sextic() -> OrderContext {
    let m = cubic_base();
    let g = make_context(&IntPoly::from_i64(&[-7, 0, 15, 0, -8, 0, 1]), Prec::new(60)).unwrap();
    let inj = vec![
        elem_from_i64(&[1, 0, 0, 0, 0, 0]),
        elem_from_i64(&[0, 0, 1, 0, 0, 0]),
        elem_from_i64(&[0, 0, 0, 0, 1, 0]),
    ];
    g.with_base(&m, inj).unwrap()
}

/// Five independent units of the sextic order with their involution action.
pub(crate) fn reference_system(g: &OrderContext) -> UnitSystem {
    let units = vec![
        elem_from_i64(&[1, 1, 0, 0, 0, 0]),
        elem_from_i64(&[1, -1, 0, 0, 0, 0]),
        elem_from_i64(&[2, 0, -1, 0, 0, 0]),
        elem_from_i64(&[3, 1, -1, 0, 0, 0]),
        elem_from_i64(&[3, -7, 0, 7, 0, -1]),
    ];
    let action = vec![
        vec![0, 1, 0, 0, 0],
        vec![1, 0, 0, 0, 0],
        vec![0, 0, 1, 0, 0],
        vec![-1, -1, 1, -1, 0],
        vec![-1, -1, 1, 0, -1],
    ];
    UnitSystem::new(g, units, action, vec![1; 5]).unwrap()
}

/// Fundamental units of the cubic base order: `μ − 2` and `μ − 1`.
pub(crate) fn cubic_base_units() -> Vec<crate::order::Elem> {
    vec![elem_from_i64(&[-2, 1, 0]), elem_from_i64(&[-1, 1, 0])]
}

/// The unit equation `½X + ½σX = 1` of the sextic pair, cross-multiplied.
pub(crate) fn sextic_equation() -> UnitEquation {
    let g = paired_sextic();
    let units = reference_system(&g);
    UnitEquation::new_single(
        g,
        units,
        elem_from_i64(&[0, -1, 0, 0, 0, 0]),
        elem_from_i64(&[0, -2, 0, 0, 0, 0]),
        elem_from_i64(&[0, 2, 0, 0, 0, 0]),
        elem_from_i64(&[0, -4, 0, 0, 0, 0]),
        elem_from_i64(&[0, 4, 0, 0, 0, 0]),
    )
    .unwrap()
}

/// Sieve primes splitting the sextic completely.
pub(crate) const SEXTIC_PRIMES: [u64; 4] = [113, 787, 1223, 2053];

/// Exponent vectors of the three solutions of [`sextic_equation`].
pub(crate) fn known_solutions() -> Vec<Vec<i64>> {
    vec![
        vec![0, 0, 0, 0, 0],
        vec![0, 1, 0, 0, 0],
        vec![1, 0, 0, 0, 0],
    ]
}

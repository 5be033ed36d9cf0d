//! Exact rational oracles for the counterexample objective.

use ddsm_core::objective::{f_eval, p_deriv, p_eval, Polynomial};
use num_rational::Ratio;

type Q = Ratio<i128>;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn p_exact(x: Q) -> Q {
    let c = [-18, 60, -69, 34, -6];
    let mut acc = q(0, 1);
    let mut pow = q(1, 1);
    for coeff in c {
        acc += pow * q(coeff, 1);
        pow *= x;
    }
    acc
}

/// `f` on dyadic rationals by repeated doubling/halving to find the branch.
fn f_exact(x: Q) -> Q {
    if x <= q(0, 1) {
        let s = x + q(1, 1);
        return s * s - q(2, 1);
    }
    let mut scale = q(1, 1);
    while x / scale >= q(2, 1) {
        scale *= q(2, 1);
    }
    while x / scale < q(1, 1) {
        scale /= q(2, 1);
    }
    scale * p_exact(x / scale)
}

fn to_f64(v: Q) -> f64 {
    *v.numer() as f64 / *v.denom() as f64
}

#[test]
fn p_matches_exact_values() {
    assert_eq!(p_exact(q(1, 1)), q(1, 1));
    assert_eq!(p_exact(q(2, 1)), q(2, 1));
    assert_eq!(p_exact(q(5, 4)), q(121, 128));
    assert_eq!(p_exact(q(3, 2)), q(9, 8));
    for x in [q(1, 1), q(5, 4), q(3, 2), q(7, 4), q(2, 1), q(9, 8)] {
        assert_eq!(p_eval(to_f64(x)), to_f64(p_exact(x)), "x = {x}");
    }
}

#[test]
fn derivative_matches_difference_quotient() {
    // central differences of the exact polynomial at small rational steps
    for x in [q(1, 1), q(5, 4), q(2, 1), q(3, 2)] {
        let h = q(1, 1 << 20);
        let fd = (p_exact(x + h) - p_exact(x - h)) / (h * q(2, 1));
        assert!((p_deriv(to_f64(x)) - to_f64(fd)).abs() < 1e-9, "x = {x}");
    }
    for x in [1.0, 1.25, 2.0] {
        assert!(p_deriv(x).abs() <= 1e-12);
    }
}

#[test]
fn second_derivative_signs() {
    let d2 = Polynomial::counterexample().derivative().derivative();
    let h = q(1, 1 << 16);
    for (x, sign) in [(q(1, 1), -1.0), (q(5, 4), 1.0), (q(2, 1), -1.0)] {
        let exact = (p_exact(x + h) - q(2, 1) * p_exact(x) + p_exact(x - h)) / (h * h);
        assert_eq!(to_f64(exact).signum(), sign);
        assert_eq!(d2.eval(to_f64(x)).signum(), sign);
    }
}

#[test]
fn f_matches_exact_on_dyadic_grid() {
    // all multiples of 1/64 in [-4, 8]
    for i in -256..=512 {
        let x = q(i, 64);
        assert_eq!(f_eval(to_f64(x)), to_f64(f_exact(x)), "x = {x}");
    }
    assert_eq!(f_eval(0.75), 9.0 / 16.0);
    assert_eq!(to_f64(f_exact(q(3, 4))), 9.0 / 16.0);
}

#[test]
fn quadratic_branch_on_samples() {
    for i in 0..1000 {
        let x = -(i as f64) * 0.013 - 1e-9 * i as f64;
        let s = x + 1.0;
        assert_eq!(f_eval(x), s * s - 2.0);
    }
}

use heun_spectrum::frobenius::{coefficients, truncation_solutions_with, RecurrenceParams};
use heun_spectrum::model::{effective_potential, scale, unscale_energy};
use heun_spectrum::oracle::{fd_spectrum, GridSpec};
use heun_spectrum::ritz::{hamiltonian_matrix, inverse_xi_matrix, ritz_spectrum, BasisSpec};
use heun_spectrum::{PhysicalParams, Precision, ScaledModel};
use proptest::prelude::*;
use rug::Float;

fn prec() -> Precision {
    Precision::digits(40).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coefficients_alternate_under_alpha_flip(
        l in -3i32..=3,
        w in 0.5f64..20.0,
        alpha in -5.0f64..5.0,
    ) {
        let p = prec();
        let params = RecurrenceParams::new(l as f64, w).unwrap();
        let plus = coefficients(&params, &p.float(alpha), 12);
        let minus = coefficients(&params, &p.float(-alpha), 12);
        for (j, (a, b)) in plus.iter().zip(&minus).enumerate() {
            let expected = if j % 2 == 0 { a.clone() } else { Float::with_val(p.bits(), -a) };
            let diff = Float::with_val(p.bits(), &expected - b).abs();
            let scale = Float::with_val(p.bits(), a.abs_ref()).max(&Float::with_val(p.bits(), 1));
            prop_assert!(diff <= scale * 1e-30, "j = {}", j);
        }
    }

    #[test]
    fn truncation_roots_are_symmetric(l in 0u32..4, n in 1u32..7) {
        let sol = truncation_solutions_with(l as f64, n, prec()).unwrap();
        let roots = sol.roots_f64();
        prop_assert_eq!(roots.len(), n as usize + 1);
        for (a, b) in roots.iter().zip(roots.iter().rev()) {
            prop_assert!((a + b).abs() < 1e-25);
        }
        prop_assert!(roots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn spectrum_ignores_sign_of_l(l in 0.0f64..3.0, alpha in -3.0f64..3.0) {
        let p = prec();
        let up = ritz_spectrum(&ScaledModel::new(l, alpha).unwrap(), 8, p).unwrap();
        let down = ritz_spectrum(&ScaledModel::new(-l, alpha).unwrap(), 8, p).unwrap();
        prop_assert_eq!(up.eigenvalues, down.eigenvalues);
    }

    #[test]
    fn hamiltonian_is_affine_in_alpha(l in 0u32..3, alpha in -4.0f64..4.0) {
        let p = prec();
        let basis = BasisSpec::new(l as f64, 6, p).unwrap();
        let h_plus = hamiltonian_matrix(&basis, &p.float(alpha)).unwrap();
        let h_minus = hamiltonian_matrix(&basis, &p.float(-alpha)).unwrap();
        let x = inverse_xi_matrix(&basis).unwrap();
        let (hp, hm, xv) = (h_plus.to_f64(), h_minus.to_f64(), x.to_f64());
        for i in 0..6 {
            for j in 0..6 {
                let lhs = hp[i][j] - hm[i][j];
                let rhs = -2.0 * alpha * xv[i][j];
                prop_assert!(rel_close(lhs, rhs, 1e-12), "({}, {}): {} vs {}", i, j, lhs, rhs);
            }
        }
    }

    #[test]
    fn potential_difference_is_coulomb(l in -2i32..=2, alpha in -4.0f64..4.0, xi in 0.05f64..6.0) {
        let plus = ScaledModel::new(l as f64, alpha).unwrap();
        let minus = ScaledModel::new(l as f64, -alpha).unwrap();
        for centrifugal in [false, true] {
            let d = effective_potential(&plus, xi, centrifugal).unwrap()
                - effective_potential(&minus, xi, centrifugal).unwrap();
            prop_assert!(rel_close(d, -2.0 * alpha / xi, 1e-12));
        }
    }

    #[test]
    fn scaling_is_homogeneous(
        m in 0.1f64..10.0,
        omega in 0.1f64..10.0,
        q in 0.1f64..5.0,
        e0 in 0.1f64..5.0,
        k in -2.0f64..2.0,
        t in 0.2f64..5.0,
    ) {
        let base = scale(&PhysicalParams::new(m, omega, q, e0, k).unwrap(), 0.0).unwrap();
        let swapped = scale(&PhysicalParams::new(m, omega, q * t, e0 / t, k).unwrap(), 0.0).unwrap();
        prop_assert!(rel_close(base.alpha_f64(), swapped.alpha_f64(), 1e-12));
        let flipped = scale(&PhysicalParams::new(m, omega, -q, e0, k).unwrap(), 0.0).unwrap();
        prop_assert!(rel_close(base.alpha_f64(), -flipped.alpha_f64(), 1e-12));
    }

    #[test]
    fn energy_map_is_affine(
        m in 0.1f64..10.0,
        omega in 0.1f64..10.0,
        k in -2.0f64..2.0,
        w1 in -5.0f64..30.0,
        w2 in -5.0f64..30.0,
    ) {
        let params = PhysicalParams::new(m, omega, 1.0, 1.0, k).unwrap();
        let e1 = unscale_energy(w1, &params).unwrap();
        let e2 = unscale_energy(w2, &params).unwrap();
        let mid = unscale_energy((w1 + w2) / 2.0, &params).unwrap();
        prop_assert!(rel_close(mid, (e1 + e2) / 2.0, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ritz_bounds_from_above(l in 0u32..2, alpha in -2.5f64..2.5) {
        let model = ScaledModel::new(l as f64, alpha).unwrap();
        let grid = GridSpec { npoints: 8_000, ..GridSpec::default() };
        let oracle = fd_spectrum(&model, &grid, 3).unwrap();
        let ritz = ritz_spectrum(&model, 6, Precision::digits(30).unwrap()).unwrap();
        for (w, level) in ritz.eigenvalues_f64().iter().zip(&oracle.levels) {
            prop_assert!(*w >= level.value - level.error_bar - 1e-9, "{} < {}", w, level.value);
        }
    }

    #[test]
    fn levels_fall_as_alpha_grows(l in 0u32..2, alpha in -2.5f64..2.5, delta in 0.05f64..1.0) {
        let p = Precision::digits(40).unwrap();
        let lo = ritz_spectrum(&ScaledModel::new(l as f64, alpha).unwrap(), 12, p).unwrap();
        let hi = ritz_spectrum(&ScaledModel::new(l as f64, alpha + delta).unwrap(), 12, p).unwrap();
        for (a, b) in lo.eigenvalues_f64().iter().zip(hi.eigenvalues_f64()).take(3) {
            prop_assert!(b < *a);
        }
    }

    #[test]
    fn attraction_and_repulsion_differ(l in 0u32..2, alpha in 0.1f64..3.0) {
        let p = Precision::digits(40).unwrap();
        let att = ritz_spectrum(&ScaledModel::new(l as f64, alpha).unwrap(), 12, p).unwrap();
        let rep = ritz_spectrum(&ScaledModel::new(l as f64, -alpha).unwrap(), 12, p).unwrap();
        prop_assert!(att.eigenvalues_f64()[0] < rep.eigenvalues_f64()[0] - 1e-3);
    }
}

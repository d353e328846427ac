use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

use gslac::spin_model::{
    anticrossing_gap, build_hamiltonian, eigensystem, find_gslac, levels, spin_mixing, FieldVector,
    HyperfineParams, SpinSystemParams,
};

const GAMMA: f64 = 28.024e9;
const D: f64 = 2.87e9;

fn params(d: f64, hyperfine: bool) -> SpinSystemParams {
    SpinSystemParams {
        zero_field_splitting_hz: d,
        hyperfine: hyperfine.then_some(HyperfineParams {
            a_parallel_hz: -2.14e6,
            a_perpendicular_hz: -2.7e6,
            quadrupole_hz: -4.95e6,
        }),
        ..SpinSystemParams::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn hamiltonian_invariants(
        b in 0.0..0.3f64,
        theta in 0.0..179.9f64,
        phi in 0.0..360.0f64,
        d in 1e9..4e9f64,
        hyperfine in any::<bool>(),
    ) {
        let p = params(d, hyperfine);
        let h = build_hamiltonian(&p, &FieldVector::new(b, theta, phi).unwrap()).unwrap();
        let scale = h.max_abs();
        prop_assert!(h.hermiticity_residual() < 1e-9 * scale);
        prop_assert_eq!(h.dim(), if hyperfine { 9 } else { 3 });

        let eig = eigensystem(&h);
        prop_assert!(eig.energies.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = eig.energies.iter().sum();
        prop_assert!((sum - h.trace()).abs() <= 1e-8 * h.trace().abs().max(scale));

        let v = &eig.states;
        let n = v.ncols();
        let gram = v.adjoint() * v - DMatrix::<Complex<f64>>::identity(n, n);
        prop_assert!(gram.iter().all(|z| z.norm() < 1e-10));

        let hm = h.as_matrix();
        let norm = hm.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for k in 0..n {
            let col: DVector<Complex<f64>> = v.column(k).into_owned();
            let r = hm * &col - col.scale(eig.energies[k]);
            prop_assert!(r.norm() < 1e-8 * norm);
        }
    }

    #[test]
    fn aligned_field_levels_are_analytic(b in 0.0..0.3f64, d in 1e9..4e9f64) {
        let set = levels(&params(d, false), &FieldVector::aligned(b).unwrap()).unwrap();
        let mut expected = [0.0, d - GAMMA * b, d + GAMMA * b];
        expected.sort_by(f64::total_cmp);
        for (e, x) in set.energies.iter().zip(expected) {
            prop_assert!((e - x).abs() <= 1e-12 * (d + GAMMA * b));
        }
    }

    #[test]
    fn crossing_sits_at_d_over_gamma(d in 1e9..4e9f64) {
        let oracle = d / GAMMA;
        let loc = find_gslac(&params(d, false), 0.0, (0.8 * oracle, 1.2 * oracle)).unwrap();
        prop_assert!(((loc.center - oracle) / oracle).abs() < 1e-4);
    }

    #[test]
    fn mixing_is_azimuthally_symmetric(b in 0.05..0.15f64, theta in 0.0..10.0f64, phi in 0.0..360.0f64) {
        let p = SpinSystemParams::default();
        let a = spin_mixing(&p, &FieldVector::new(b, theta, 0.0).unwrap()).unwrap();
        let c = spin_mixing(&p, &FieldVector::new(b, theta, phi).unwrap()).unwrap();
        prop_assert!((a - c).abs() < 1e-10);
    }

    #[test]
    fn aligned_field_has_no_mixing(b in 0.0..0.3f64) {
        prop_assume!((b - D / GAMMA).abs() > 1e-4);
        let m = spin_mixing(&SpinSystemParams::default(), &FieldVector::aligned(b).unwrap()).unwrap();
        prop_assert!(m.abs() < 1e-12);
    }

    #[test]
    fn field_components_are_consistent(b in 0.0..1.0f64, theta in 0.0..179.99f64, phi in -720.0..720.0f64) {
        let f = FieldVector::new(b, theta, phi).unwrap();
        prop_assert!((f.parallel().powi(2) + f.transverse().powi(2) - b * b).abs() <= 1e-12 * b * b);
        prop_assert!((0.0..360.0).contains(&f.phi_deg()));
    }
}

#[test]
fn gap_grows_with_transverse_field() {
    let p = SpinSystemParams::default();
    let mut last = -1.0;
    for i in 0..20 {
        let t = 1e-3 * i as f64 / 19.0;
        let gap = find_gslac(&p, t, (0.09, 0.115)).unwrap().min_gap_hz;
        assert!(gap >= last, "gap {gap} at {t} T below {last}");
        last = gap;
    }
}

/// Minimum gap on a dense field grid, independent of the golden-section search.
fn brute_force_min_gap(p: &SpinSystemParams, transverse: f64) -> f64 {
    (0..=20_000)
        .map(|i| {
            let b = 0.1014 + 0.002 * i as f64 / 20_000.0;
            anticrossing_gap(p, &FieldVector::with_transverse(b, transverse).unwrap()).unwrap()
        })
        .fold(f64::MAX, f64::min)
}

#[test]
fn gap_search_matches_dense_scan() {
    let p = SpinSystemParams::default();
    let wide = find_gslac(&p, 97e-6, (0.09, 0.115)).unwrap().min_gap_hz;
    let narrow = find_gslac(&p, 10e-6, (0.09, 0.115)).unwrap().min_gap_hz;
    assert!(narrow > 0.0 && wide > narrow);
    let oracle = brute_force_min_gap(&p, 97e-6);
    assert!(wide <= oracle * (1.0 + 1e-9));
    assert!((wide - oracle).abs() < 1e-3 * oracle);
}

#[test]
fn mixing_grows_with_misalignment() {
    let p = SpinSystemParams::default();
    let small = spin_mixing(&p, &FieldVector::new(0.1024, 0.005, 0.0).unwrap()).unwrap();
    let large = spin_mixing(&p, &FieldVector::new(0.1024, 0.054, 0.0).unwrap()).unwrap();
    assert!(large > small);
    let perpendicular = spin_mixing(&p, &FieldVector::new(0.1024, 90.0, 0.0).unwrap()).unwrap();
    assert!(perpendicular > 0.0 && perpendicular <= 1.0);
}

/// Real roots of the characteristic polynomial by sign-change scan and bisection.
fn characteristic_roots(h: &DMatrix<Complex<f64>>) -> Vec<f64> {
    let m = |i: usize, j: usize| h[(i, j)];
    let tr = (m(0, 0) + m(1, 1) + m(2, 2)).re;
    let minors = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0)
        + m(1, 1) * m(2, 2)
        - m(1, 2) * m(2, 1))
    .re;
    let det = (m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
        - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0)))
    .re;
    let poly = |x: f64| ((x - tr) * x + minors) * x - det;
    let bound = 1.0 + h.iter().map(|z| z.norm()).sum::<f64>();
    let steps = 2_000_000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev = poly(prev_x);
    for i in 1..=steps {
        let x = -bound + 2.0 * bound * i as f64 / steps as f64;
        let v = poly(x);
        if prev == 0.0 {
            roots.push(prev_x);
        } else if prev.signum() != v.signum() && v != 0.0 {
            let (mut a, mut b) = (prev_x, x);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if poly(mid).signum() == poly(a).signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev = v;
    }
    roots
}

#[test]
fn eigenvalues_match_characteristic_polynomial() {
    let p = SpinSystemParams::default();
    let h = build_hamiltonian(&p, &FieldVector::new(0.1024, 0.054, 0.0).unwrap()).unwrap();
    let roots = characteristic_roots(h.as_matrix());
    let eig = eigensystem(&h);
    assert_eq!(roots.len(), 3);
    for (r, e) in roots.iter().zip(&eig.energies) {
        assert!((r - e).abs() < 1.0, "{r} vs {e}");
    }
}

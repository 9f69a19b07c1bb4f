//! Property tests for the model invariants that hold on *every* admissible
//! input, not just the curated points of the unit suites.
//!
//! Each block encodes a statement with mathematical content:
//!
//! * the single-particle symbol is bounded, even, and `2*pi`-periodic;
//! * the pair dispersion is symmetric under exchange of the two identical
//!   fermions;
//! * the two-body fiber eigenvalue zeroes the fiber determinant, sits
//!   strictly below the fiber band, and (for strong coupling) obeys the
//!   two-sided sandwich `-lambda + 3(1+gamma) - 9(1+gamma)^2/lambda <
//!   z - eps(q) < -lambda + 3(1+gamma)`;
//! * the fiber determinant is strictly decreasing in the spectral parameter
//!   below the band (Birman-Schwinger monotonicity);
//! * the essential-spectrum bands are ordered and the gap interval is
//!   exactly the space between them;
//! * deep-coupling expansions improve order by order;
//! * the dense fiber oracle interlaces with its diagonal and its ground
//!   state zeroes the grid determinant;
//! * the Birman-Schwinger discretization certifies the dense three-body
//!   spectrum at random couplings;
//! * the eigensolver survives entries of wildly different magnitude;
//! * the CLI number formatter round-trips through `parse` and stays valid
//!   JSON, and range specifications sample exactly what they advertise.

use std::f64::consts::PI;

use proptest::prelude::*;
use trimer::cli::{fmt_sig, RangeSpec};
use trimer::dispersion::{epsilon, fiber_band_min, total_energy, ModelParams};
use trimer::linalg::{sym_eigen, sym_eigenvalues, SymMatrix};
use trimer::oracle::{bs_exactness_check, dense_fiber};
use trimer::torus_grid::make_grid;
use trimer::two_body::{delta, essential_spectrum, fiber_eigenvalue, DeltaMethod};

/// Componentwise-uniform momentum in the fundamental cube `(-pi, pi]^3`.
fn momentum() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-PI..PI)
}

proptest! {
    #[test]
    fn symbol_is_bounded_even_and_periodic(p in momentum()) {
        let e = epsilon(p);
        prop_assert!((0.0..=6.0).contains(&e), "epsilon out of range: {e}");
        let neg = epsilon([-p[0], -p[1], -p[2]]);
        prop_assert_eq!(e.to_bits(), neg.to_bits(), "epsilon is not even");
        let shifted = epsilon([p[0] + 2.0 * PI, p[1], p[2]]);
        prop_assert!((e - shifted).abs() <= 1e-12, "not 2*pi-periodic: {e} vs {shifted}");
    }

    #[test]
    fn pair_energy_is_exchange_symmetric(
        gamma in 0.2f64..8.0,
        p in momentum(),
        q in momentum(),
        k in momentum(),
    ) {
        let params = ModelParams::new(gamma, 10.0, k).unwrap();
        let a = total_energy(&params, p, q);
        let b = total_energy(&params, q, p);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fiber_eigenvalue_zeroes_the_determinant_below_the_band(
        gamma in 0.3f64..8.0,
        lambda in 5.0f64..80.0,
        q in momentum(),
        k in momentum(),
    ) {
        let params = ModelParams::new(gamma, lambda, k).unwrap();
        let sol = fiber_eigenvalue(&params, q);
        let emin = fiber_band_min(&params, q);
        if sol.is_bound {
            prop_assert!(sol.z < emin, "bound value {} not below band {emin}", sol.z);
            let resid = delta(&params, q, sol.z, DeltaMethod::Bessel).unwrap();
            prop_assert!(resid.abs() <= 1e-7, "determinant residual {resid:.3e}");
        } else {
            prop_assert_eq!(sol.z.to_bits(), emin.to_bits(), "convention value must be the band edge");
        }
    }

    #[test]
    fn strong_coupling_obeys_the_two_sided_sandwich(
        gamma in 0.2f64..6.0,
        ratio in 6.0f64..40.0,
        q in momentum(),
    ) {
        let lambda = ratio * (1.0 + gamma);
        let params = ModelParams::new(gamma, lambda, [0.0; 3]).unwrap();
        let sol = fiber_eigenvalue(&params, q);
        prop_assert!(sol.is_bound, "lambda = {ratio}(1+gamma) must bind every fiber");
        let zhat = sol.z - epsilon(q);
        let upper = -lambda + 3.0 * (1.0 + gamma);
        let lower = upper - 9.0 * (1.0 + gamma) * (1.0 + gamma) / lambda;
        prop_assert!(zhat > lower, "zhat = {zhat} at or below lower bound {lower}");
        prop_assert!(zhat < upper, "zhat = {zhat} at or above upper bound {upper}");
    }

    #[test]
    fn fiber_determinant_decreases_in_the_spectral_parameter(
        gamma in 0.3f64..8.0,
        lambda in 1.0f64..80.0,
        q in momentum(),
        k in momentum(),
        back in 0.01f64..5.0,
        step in 0.01f64..10.0,
    ) {
        let params = ModelParams::new(gamma, lambda, k).unwrap();
        let z2 = fiber_band_min(&params, q) - back;
        let z1 = z2 - step;
        let d1 = delta(&params, q, z1, DeltaMethod::Bessel).unwrap();
        let d2 = delta(&params, q, z2, DeltaMethod::Bessel).unwrap();
        prop_assert!(d1 > d2, "determinant not decreasing: {d1} at {z1} vs {d2} at {z2}");
    }

    #[test]
    fn essential_bands_are_ordered_and_the_gap_is_their_space(
        gamma in 0.2f64..8.0,
        lambda in 0.5f64..150.0,
        k in momentum(),
    ) {
        let params = ModelParams::new(gamma, lambda, k).unwrap();
        let bands = essential_spectrum(&params);
        let (tau_min, tau_max) = bands.two_particle;
        let (e_min, e_max) = bands.three_particle;
        prop_assert!(tau_min <= tau_max);
        prop_assert!(e_min <= e_max);
        match bands.gap {
            Some((a, b)) => {
                prop_assert!(a < b, "empty gap interval ({a}, {b})");
                prop_assert_eq!(a.to_bits(), tau_max.to_bits());
                prop_assert_eq!(b.to_bits(), e_min.to_bits());
            }
            None => prop_assert!(
                tau_max >= e_min,
                "gap missing although tau_max = {tau_max} < E_min = {e_min}"
            ),
        }
    }

    #[test]
    fn deep_coupling_expansion_improves_order_by_order(
        gamma in 0.5f64..4.0,
        q in momentum(),
    ) {
        let lambda = 60.0 * (1.0 + gamma);
        let params = ModelParams::new(gamma, lambda, [0.0; 3]).unwrap();
        let z = fiber_eigenvalue(&params, q).z;
        let err: Vec<f64> = [0u32, 1, 3]
            .iter()
            .map(|&ord| (trimer::two_body::asymptotic_z(&params, q, ord).unwrap() - z).abs())
            .collect();
        prop_assert!(err[1] <= 0.5 * err[0], "order 1 not better: {:?}", err);
        prop_assert!(err[2] <= 0.5 * err[1], "order 3 not better: {:?}", err);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dense_fiber_interlaces_and_zeroes_the_grid_determinant(
        gamma in 0.5f64..6.0,
        lambda in 5.0f64..60.0,
        q in momentum(),
        k in momentum(),
    ) {
        let params = ModelParams::new(gamma, lambda, k).unwrap();
        let grid = make_grid(3, 0.0).unwrap();
        let spec = dense_fiber(&params, q, &grid).unwrap();
        prop_assert_eq!(spec.eigenvalues.len(), grid.len());
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]), "not ascending");
        // Interlacing with the sorted unperturbed diagonal: the rank-one
        // attraction moves every level down, but never past the previous
        // diagonal entry.
        let mut diag: Vec<f64> = (0..grid.len())
            .map(|i| total_energy(&params, grid.node(i), q))
            .collect();
        diag.sort_by(f64::total_cmp);
        for (i, (&ev, &d)) in spec.eigenvalues.iter().zip(&diag).enumerate() {
            prop_assert!(ev <= d + 1e-9, "level {i}: {ev} above its diagonal bound {d}");
            if i > 0 {
                prop_assert!(ev >= diag[i - 1] - 1e-9, "level {i} fell past {}", diag[i - 1]);
            }
        }
        let z0 = spec.eigenvalues[0];
        let resid = delta(&params, q, z0, DeltaMethod::Grid(3)).unwrap();
        prop_assert!(resid.abs() <= 1e-8, "grid determinant at the ground state: {resid:.3e}");
    }

    #[test]
    fn eigensolver_survives_wide_dynamic_range(
        n in 2usize..9,
        seed in any::<u64>(),
        span in 0.0f64..25.0,
    ) {
        // D M D with log-uniform D stresses the tridiagonal QL deflation
        // tests across ~10^50 of dynamic range.
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let scales: Vec<f64> = (0..n).map(|_| 10f64.powf(span * (2.0 * next() - 1.0))).collect();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set_sym(i, j, (2.0 * next() - 1.0) * scales[i] * scales[j]);
            }
        }
        let values = sym_eigenvalues(&m);
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]), "not ascending: {values:?}");
        let (d, vecs) = sym_eigen(&m);
        for (a, b) in values.iter().zip(&d) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "paths disagree: {a} vs {b}");
        }
        let mut anorm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                anorm = anorm.max(m.at(i, j).abs());
            }
        }
        anorm *= n as f64;
        let mut av = vec![0.0; n];
        for col in 0..n {
            let v: Vec<f64> = (0..n).map(|r| vecs[r * n + col]).collect();
            m.matvec(&v, &mut av);
            let resid = av
                .iter()
                .zip(&v)
                .map(|(avi, vi)| (avi - d[col] * vi).abs())
                .fold(0.0, f64::max);
            prop_assert!(resid <= 1e-11 * (1.0 + anorm), "residual {resid:.3e} vs norm {anorm:.3e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn exactness_certificate_holds_at_random_couplings(
        gamma in 0.5f64..8.0,
        lambda in 10.0f64..80.0,
        k in prop_oneof![Just([0.0; 3]), momentum()],
    ) {
        let params = ModelParams::new(gamma, lambda, k).unwrap();
        let grid = make_grid(3, 0.0).unwrap();
        let report = bs_exactness_check(&params, &grid).unwrap();
        prop_assert!(!report.levels.is_empty(), "no isolated levels to certify");
        prop_assert_eq!(report.multiplicity_mismatches, 0);
        prop_assert!(
            report.max_deviation <= 1e-8,
            "worst Birman-Schwinger deviation {:.3e}",
            report.max_deviation
        );
    }
}

proptest! {
    #[test]
    fn formatted_numbers_round_trip_and_stay_json(x in any::<f64>()) {
        prop_assume!(x.is_finite());
        let s = fmt_sig(x);
        let back: f64 = s.parse().expect("formatter output must parse");
        prop_assert!(
            (back - x).abs() <= 2e-11 * x.abs(),
            "round trip {x} -> {s} -> {back}"
        );
        // serde_json's float parse may differ from the stdlib's correctly
        // rounded one by an ulp at extreme exponents; assert validity and
        // the same relative tolerance, not bitwise agreement.
        let json: f64 = serde_json::from_str(&s).expect("formatter output must be a JSON number");
        prop_assert!((json - x).abs() <= 2e-11 * x.abs(), "JSON parse {json} vs {x}");
    }

    #[test]
    fn range_specs_sample_exactly_what_they_advertise(
        start in -100.0f64..100.0,
        stop in -100.0f64..100.0,
        count in 2usize..50,
    ) {
        let spec = RangeSpec::parse(&format!("{start}:{stop}:{count}"), "--test").unwrap();
        let values = spec.values();
        prop_assert_eq!(values.len(), count);
        prop_assert_eq!(values[0].to_bits(), start.to_bits());
        prop_assert!((values[count - 1] - stop).abs() <= 1e-12 * (1.0 + stop.abs()));
        if start < stop {
            prop_assert!(values.windows(2).all(|w| w[0] < w[1]), "not increasing");
        }
    }

    #[test]
    fn log_ranges_keep_a_constant_ratio(
        start in 1e-3f64..1e3,
        factor in 1.1f64..100.0,
        count in 3usize..30,
    ) {
        let stop = start * factor;
        let spec = RangeSpec::parse(&format!("log:{start}:{stop}:{count}"), "--test").unwrap();
        let values = spec.values();
        prop_assert_eq!(values.len(), count);
        let r0 = values[1] / values[0];
        for w in values.windows(2) {
            prop_assert!((w[1] / w[0] - r0).abs() <= 1e-9 * r0, "ratio drifts");
        }
    }

    #[test]
    fn torus_grids_cover_the_cube(n in 2usize..9, offset in 0.0f64..1.0) {
        let grid = make_grid(n, offset).unwrap();
        prop_assert_eq!(grid.len(), n * n * n);
        prop_assert_eq!(grid.n(), n);
        for i in 0..grid.len() {
            let p = grid.node(i);
            for c in p {
                prop_assert!(c > -PI - 1e-12 && c <= PI + 1e-12, "node {p:?} escapes the cube");
            }
        }
    }
}

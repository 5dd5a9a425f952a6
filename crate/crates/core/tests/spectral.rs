mod common;

use common::*;
use fracshape::spectral::*;
use fracshape::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn interval(h: f64, half_width: f64, radius: f64) -> (GridSpec, MultiIndicator) {
    let grid = GridSpec::new(1, h, half_width, 1).unwrap();
    let a = MultiIndicator::ball(grid, 0, [0.0, 0.0], radius).unwrap();
    (grid, a)
}

#[test]
fn congruent_pieces_in_two_copies_give_the_union_spectrum() {
    let grid = GridSpec::new(2, 0.25, 1.5, 2).unwrap();
    let kp = KernelParams::new(2, 0.5).unwrap();
    let piece = MultiIndicator::ball(grid, 0, [0.1, -0.2], 0.8).unwrap();
    let other = MultiIndicator::ball(grid, 1, [0.0, 0.3], 0.6).unwrap();
    let single = |a: &MultiIndicator| dirichlet_eigs(a, &kp, a.count()).unwrap().eigenvalues;
    let mut expected: Vec<f64> = single(&piece).into_iter().chain(single(&other)).collect();
    expected.sort_by(f64::total_cmp);
    let both = piece.union(&other);
    let got = dirichlet_eigs(&both, &kp, both.count()).unwrap().eigenvalues;
    for (g, e) in got.iter().zip(&expected) {
        assert!((g - e).abs() <= 1e-10 * e.abs(), "{g} vs {e}");
    }
    // Identical pieces double every eigenvalue.
    let mut copy1 = MultiIndicator::empty(grid);
    for (_, i) in piece.cells() {
        copy1.insert(1, i).unwrap();
    }
    let doubled = piece.union(&copy1);
    let spec = dirichlet_eigs(&doubled, &kp, 6).unwrap();
    let base = single(&piece);
    for j in 0..3 {
        assert!((spec.eigenvalues[2 * j] - base[j]).abs() <= 1e-10 * base[j]);
        assert!((spec.eigenvalues[2 * j + 1] - base[j]).abs() <= 1e-10 * base[j]);
        assert!(spec.numerically_multiple(2 * j + 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn first_eigenvalue_is_monotone_under_inclusion(
        (small, extra) in (1usize..=2).prop_flat_map(|n| {
            let grid = small_grid(n, 1);
            (mask_strategy(grid), mask_strategy(grid))
        }),
        s in 0.1f64..0.9,
    ) {
        let big = small.union(&extra);
        let kp = KernelParams::new(small.grid().n(), s).unwrap();
        let l_small = dirichlet_eigs(&small, &kp, 1).unwrap().eigenvalues[0];
        let l_big = dirichlet_eigs(&big, &kp, 1).unwrap().eigenvalues[0];
        prop_assert!(l_big <= l_small * (1.0 + 1e-12), "{l_big} > {l_small}");
    }

    #[test]
    fn rayleigh_quotient_bounds_first_eigenvalue(
        a in mask_strategy(small_grid(1, 1)),
        vals in prop::collection::vec(-1.0f64..1.0, 1..20),
    ) {
        let kp = KernelParams::new(1, 0.35).unwrap();
        let u = field_on(&a, &vals);
        prop_assume!(u.max_abs() > 0.0);
        let form = assemble_form(&a, &kp).unwrap();
        let l1 = eigs_of_form(&form, 1, EigenSolver::Dense).unwrap().eigenvalues[0];
        prop_assert!(rayleigh(&form, &u).unwrap() >= l1 * (1.0 - 1e-12));
    }
}

#[test]
fn ritz_values_respect_min_max() {
    let grid = small_grid(1, 1);
    let kp = KernelParams::new(1, 0.6).unwrap();
    let a = MultiIndicator::ball(grid, 0, [0.1, 0.0], 1.2).unwrap();
    assert!(a.count() <= 30);
    let form = assemble_form(&a, &kp).unwrap();
    let spec = eigs_of_form(&form, a.count(), EigenSolver::Dense).unwrap();
    let s = form.stiffness() / grid.cell_volume();
    let mut rng_state = 12345u64;
    let mut next = || {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (rng_state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for j in 1..=5 {
        // Span of the first j eigenvectors attains λ_j.
        let basis: Vec<DVector<f64>> = spec.eigenfields[..j].iter().map(|f| form.vector_of(f).unwrap()).collect();
        let q = DMatrix::from_columns(&basis).qr().q();
        let ritz = (q.transpose() * &s * &q).symmetric_eigenvalues();
        let top = ritz.iter().copied().fold(f64::MIN, f64::max);
        assert!((top - spec.eigenvalues[j - 1]).abs() <= 1e-9 * spec.eigenvalues[j - 1]);
        // Any other j-dimensional subspace does no better.
        for _ in 0..20 {
            let m = DMatrix::from_fn(form.len(), j, |_, _| next());
            let q = m.qr().q();
            let ritz = (q.transpose() * &s * &q).symmetric_eigenvalues();
            let top = ritz.iter().copied().fold(f64::MIN, f64::max);
            assert!(top >= spec.eigenvalues[j - 1] * (1.0 - 1e-12));
        }
    }
}

#[test]
fn first_eigenfield_is_positive_on_connected_domains() {
    for (grid, a) in [
        interval(1.0 / 32.0, 2.0, 0.9),
        {
            let g = GridSpec::new(2, 0.125, 1.5, 1).unwrap();
            (g, MultiIndicator::ball(g, 0, [0.0, 0.0], 1.0).unwrap())
        },
    ] {
        let kp = KernelParams::new(grid.n(), 0.5).unwrap();
        let spec = dirichlet_eigs(&a, &kp, 2).unwrap();
        assert!(a.cells().iter().all(|&(c, i)| spec.eigenfields[0].get(c, i) > 0.0));
        assert!(spec.residuals.iter().zip(&spec.eigenvalues).all(|(r, l)| *r <= 1e-8 * l));
    }
}

#[test]
fn eigenvalue_refinement_oracle() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let (_, coarse) = interval(2.0 / 256.0, 1.5, 1.0);
    let (_, fine) = interval(2.0 / 1024.0, 1.5, 1.0);
    let lc = dirichlet_eigs(&coarse, &kp, 1).unwrap().eigenvalues[0];
    let lf = dirichlet_eigs(&fine, &kp, 1).unwrap().eigenvalues[0];
    assert!(rel(lc, lf) <= 0.02, "{lc} vs {lf}");
}

#[test]
fn sup_norm_ratio_does_not_blow_up_under_refinement() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let mut ratios = Vec::new();
    for k in [32.0, 64.0, 128.0] {
        let (_, a) = interval(1.0 / k, 1.5, 1.0);
        let spec = dirichlet_eigs(&a, &kp, 3).unwrap();
        let n = 1.0;
        let ratio: Vec<f64> = spec
            .eigenfields
            .iter()
            .zip(&spec.eigenvalues)
            .map(|(u, l)| u.max_abs() / (l.powf(n / (4.0 * kp.s())) * u.l2_norm()))
            .collect();
        ratios.push(ratio);
    }
    for w in ratios.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!(*b <= 2.0 * a, "{a} -> {b}");
        }
    }
}

#[test]
fn torsion_energy_scales_like_a_power_of_volume() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let grid = GridSpec::new(1, 1.0 / 64.0, 2.0, 1).unwrap();
    let table = KernelTable::new(grid, kp).unwrap();
    let exponent = (1.0 + 2.0 * kp.s()) / 1.0;
    let ratios: Vec<f64> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&r| {
            let a = MultiIndicator::ball(grid, 0, [0.0, 0.0], r).unwrap();
            let t = torsion_solve_with(&a, &table).unwrap();
            assert!(t.energy < 0.0);
            assert!(a.cells().iter().all(|&(c, i)| t.field.get(c, i) >= 0.0));
            t.energy.abs() / a.volume().powf(exponent)
        })
        .collect();
    let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 1.15, "{ratios:?}");
}

#[test]
fn objective_scan_has_an_interior_minimum() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let grid = GridSpec::new(1, 1.0 / 16.0, 2.5, 1).unwrap();
    let table = KernelTable::new(grid, kp).unwrap();
    let radii: Vec<f64> = (2..=20).map(|k| 0.1 * k as f64).collect();
    let values: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let a = MultiIndicator::ball(grid, 0, [0.0, 0.0], r + 1e-9).unwrap();
            let f = objective_with(&a, &table, 1).unwrap();
            let l = dirichlet_eigs_with(&a, &table, 1, EigenSolver::Auto).unwrap().eigenvalues[0];
            assert_eq!(f, l + a.volume());
            f
        })
        .collect();
    let argmin = (0..values.len()).min_by(|&i, &j| values[i].total_cmp(&values[j])).unwrap();
    assert!(argmin > 0 && argmin + 1 < values.len());
    assert!(values[..argmin].windows(2).all(|w| w[1] < w[0]));
    assert!(values[argmin..].windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn gamma_distance_properties() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let grid = GridSpec::new(1, 1.0 / 32.0, 2.0, 1).unwrap();
    let table = KernelTable::new(grid, kp).unwrap();
    let big = MultiIndicator::ball(grid, 0, [0.0, 0.0], 1.0).unwrap();
    let small = MultiIndicator::ball(grid, 0, [0.2, 0.0], 0.5).unwrap();
    assert_eq!(gamma_distance_with(&big, &big, &table).unwrap(), 0.0);
    let d = gamma_distance_with(&big, &small, &table).unwrap();
    assert_eq!(d, gamma_distance_with(&small, &big, &table).unwrap());
    let ub = torsion_solve_with(&big, &table).unwrap().field;
    let us = torsion_solve_with(&small, &table).unwrap().field;
    let mut signed = 0.0;
    for i in 0..grid.cells_per_copy() {
        let diff = ub.get(0, i) - us.get(0, i);
        assert!(diff >= -1e-12);
        signed += diff;
    }
    assert!(rel(d, signed * grid.h()) <= 1e-12);
}

#[test]
fn errors_are_reported() {
    let kp = KernelParams::new(1, 0.5).unwrap();
    let (grid, a) = interval(0.25, 2.0, 0.3);
    assert!(matches!(dirichlet_eigs(&MultiIndicator::empty(grid), &kp, 1), Err(Error::EmptyDomain)));
    assert!(matches!(dirichlet_eigs(&a, &kp, a.count() + 1), Err(Error::TooManyEigenpairs { .. })));
    assert!(objective(&MultiIndicator::empty(grid), &kp, 1).is_err());
}

mod common;

use common::*;
use fracshape::*;
use proptest::prelude::*;

fn grid_and_mask() -> impl Strategy<Value = (MultiIndicator, Vec<f64>, f64)> {
    (1usize..=2, 1usize..=2, 0.1f64..0.9)
        .prop_flat_map(|(n, copies, s)| {
            (mask_strategy(small_grid(n, copies)), prop::collection::vec(-2.0f64..2.0, 1..40), Just(s))
        })
        .prop_filter("at most 200 cells", |(a, _, _)| a.count() <= 200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bilinear_matches_double_sum((a, vals, s) in grid_and_mask()) {
        let kp = KernelParams::new(a.grid().n(), s).unwrap();
        let form = assemble_form(&a, &kp).unwrap();
        let u = field_on(&a, &vals);
        let b = bilinear(&form, &u, &u).unwrap();
        let o = oracle_form(&u, s);
        prop_assert!(rel(b, o) <= 1e-10, "form {b} oracle {o}");
    }

    #[test]
    fn bilinear_symmetric_and_positive((a, vals, s) in grid_and_mask()) {
        let kp = KernelParams::new(a.grid().n(), s).unwrap();
        let form = assemble_form(&a, &kp).unwrap();
        let u = field_on(&a, &vals);
        let rev: Vec<f64> = vals.iter().rev().map(|v| v * 0.7 - 0.1).collect();
        let v = field_on(&a, &rev);
        let uv = bilinear(&form, &u, &v).unwrap();
        let vu = bilinear(&form, &v, &u).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(1e-12));
        let uu = bilinear(&form, &u, &u).unwrap();
        prop_assert!(uu > 0.0 || u.max_abs() == 0.0);
        for p in 0..form.len() {
            prop_assert!(form.exterior()[p] > 0.0);
            for q in 0..form.len() {
                prop_assert!(form.weight(p, q) >= 0.0);
                prop_assert_eq!(form.weight(p, q), form.weight(q, p));
            }
        }
    }

    #[test]
    fn decomposition_sums_and_copies_do_not_interact((a, vals, s) in grid_and_mask()) {
        let grid = a.grid();
        let kp = KernelParams::new(grid.n(), s).unwrap();
        let form = assemble_form(&a, &kp).unwrap();
        let u = field_on(&a, &vals);
        // Split by copy when there are two, otherwise by a half plane.
        let a1 = if grid.copies() > 1 {
            MultiIndicator::from_masks(grid, vec![a.mask(0).to_vec(), vec![false; grid.cells_per_copy()]]).unwrap()
        } else {
            let mut part = MultiIndicator::empty(grid);
            for (c, i) in a.cells() {
                if grid.position(i)[0] < 0.0 {
                    part.insert(c, i).unwrap();
                }
            }
            part
        };
        let mut a2 = MultiIndicator::empty(grid);
        for (c, i) in a.cells() {
            if !a1.contains(c, i) {
                a2.insert(c, i).unwrap();
            }
        }
        let dec = energy_decomposition(&form, &u, &a1, &a2).unwrap();
        let total = bilinear(&form, &u, &u).unwrap();
        prop_assert!((dec.total() - total).abs() <= 1e-10 * total.abs().max(1e-300));
        prop_assert_eq!(dec.c_c, 0.0);
        if grid.copies() > 1 {
            prop_assert_eq!(dec.cross_term, 0.0);
            prop_assert_eq!(dec.a1_a2, 0.0);
        }
    }
}

#[test]
fn far_pair_weight_and_two_cell_interaction() {
    let grid = GridSpec::new(1, 1.0, 12.0, 1).unwrap();
    let kp = KernelParams::new(1, 0.5).unwrap();
    let table = KernelTable::new(grid, kp).unwrap();
    assert!((table.weight([5, 0]) - 0.04).abs() < 1e-15);
    let c = grid.center_index();
    let mut a1 = MultiIndicator::empty(grid);
    a1.insert(0, c).unwrap();
    let mut a2 = MultiIndicator::empty(grid);
    a2.insert(0, c + 4).unwrap();
    let u = LatticeField::from_fn(a1.union(&a2), |_, _| 1.0);
    assert!((interaction_energy(&table, &u, &a1, &a2).unwrap() + 0.25).abs() < 1e-15);
}

#[test]
fn cross_term_sign_rules() {
    let grid = GridSpec::new(1, 1.0 / 16.0, 2.0, 1).unwrap();
    let kp = KernelParams::new(1, 0.5).unwrap();
    let table = KernelTable::new(grid, kp).unwrap();
    let a1 = MultiIndicator::ball(grid, 0, [-0.6, 0.0], 0.3).unwrap();
    let a2 = MultiIndicator::ball(grid, 0, [0.6, 0.0], 0.3).unwrap();
    let same = LatticeField::from_fn(a1.union(&a2), |_, _| 1.0);
    let opposite = LatticeField::from_fn(a1.union(&a2), |_, x| x[0].signum());
    assert!(interaction_energy(&table, &same, &a1, &a2).unwrap() < 0.0);
    assert!(interaction_energy(&table, &opposite, &a1, &a2).unwrap() > 0.0);
    let empty = MultiIndicator::empty(grid);
    let only = LatticeField::from_fn(a1.clone(), |_, _| 1.0);
    assert_eq!(interaction_energy(&table, &only, &a1, &empty).unwrap(), 0.0);
}

#[test]
fn translating_a_component_changes_only_cross_pieces() {
    for (n, grid) in [(1, GridSpec::new(1, 1.0 / 16.0, 2.0, 1).unwrap()), (2, GridSpec::new(2, 0.125, 1.5, 1).unwrap())] {
        let kp = KernelParams::new(n, 0.4).unwrap();
        let table = KernelTable::new(grid, kp).unwrap();
        let a1 = MultiIndicator::ball(grid, 0, [-0.5, 0.0], 0.3).unwrap();
        let a2 = MultiIndicator::ball(grid, 0, [0.5, 0.0], 0.3).unwrap();
        let profile = |x: [f64; 2]| 1.0 + 0.3 * x[0] - 0.2 * x[1] * x[1];
        let u = LatticeField::from_fn(a1.union(&a2), |_, x| profile(x));
        let before = energy_decomposition(&assemble_with_table(u.support(), &table).unwrap(), &u, &a1, &a2).unwrap();
        let (v, a2s) = fracshape::shape_opt::shift_part(&u, &a1, &a2, [1, 0]).unwrap();
        let after = energy_decomposition(&assemble_with_table(v.support(), &table).unwrap(), &v, &a1, &a2s).unwrap();
        assert!(rel(before.a1_a1, after.a1_a1) <= 1e-10);
        assert!(rel(before.a2_a2, after.a2_a2) <= 1e-10);
        // Re-sum the cross pairs directly.
        let cross = |w: &LatticeField, b2: &MultiIndicator| {
            let mut acc = 0.0;
            for (c, p) in a1.cells() {
                for (c2, q) in b2.cells() {
                    acc += -4.0 * table.cell_weight((c, p), (c2, q)) * w.get(c, p) * w.get(c2, q);
                }
            }
            acc
        };
        let predicted = cross(&v, &a2s) - cross(&u, &a2);
        let change = after.total() - before.total();
        assert!((change - predicted).abs() <= 1e-10 * before.total().abs());
    }
}

#[test]
fn refinement_changes_the_form_by_less_than_ten_percent() {
    let bump = |x: f64| (1.0 - 4.0 * x * x).max(0.0).powi(2);
    let mut last = None;
    for k in [32.0, 64.0, 128.0] {
        let grid = GridSpec::new(1, 1.0 / k, 2.0, 1).unwrap();
        let kp = KernelParams::new(1, 0.5).unwrap();
        let a = MultiIndicator::ball(grid, 0, [0.0, 0.0], 0.5).unwrap();
        let u = LatticeField::from_fn(a.clone(), |_, x| bump(x[0]));
        let b = bilinear(&assemble_form(&a, &kp).unwrap(), &u, &u).unwrap();
        if let Some(prev) = last {
            assert!(rel(b, prev) <= 0.10, "{prev} -> {b}");
        }
        last = Some(b);
    }
}

#[test]
fn form_dump_roundtrip_preserves_coefficients() {
    let grid = small_grid(2, 2);
    let a = MultiIndicator::ball(grid, 1, [0.0, 0.0], 0.6).unwrap();
    let form = assemble_form(&a, &KernelParams::new(2, 0.3).unwrap()).unwrap();
    let mut buf = Vec::new();
    fracshape::gagliardo::write_form_dump(&form, &mut buf).unwrap();
    let dump = fracshape::gagliardo::read_form_dump(buf.as_slice()).unwrap();
    assert_eq!(dump.exterior, form.exterior());
    assert_eq!(dump.cells.len(), form.len());
}

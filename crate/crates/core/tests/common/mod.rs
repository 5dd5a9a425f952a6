#![allow(dead_code)]

use fracshape::{GridSpec, LatticeField, MultiIndicator};
use proptest::prelude::*;

/// Direct subcell double sum for one pair of cells in the same copy.
pub fn oracle_weight(grid: &GridSpec, s: f64, p: [i64; 2], q: [i64; 2]) -> f64 {
    let n = grid.n();
    let h = grid.h();
    let e = n as f64 + 2.0 * s;
    let dx = (q[0] - p[0]) as f64;
    let dy = (q[1] - p[1]) as f64;
    let dist_cells = dx.hypot(dy);
    if dist_cells == 0.0 {
        return 0.0;
    }
    if dist_cells > 3.0 {
        return h.powi(2 * n as i32) * (h * dist_cells).powf(-e);
    }
    let sub: Vec<f64> = (0..4).map(|k| (k as f64 + 0.5) / 4.0 - 0.5).collect();
    let pts: Vec<[f64; 2]> = if n == 1 {
        sub.iter().map(|&a| [a, 0.0]).collect()
    } else {
        sub.iter().flat_map(|&a| sub.iter().map(move |&b| [a, b])).collect()
    };
    let mut acc = 0.0;
    for a in &pts {
        for b in &pts {
            let rx = dx + b[0] - a[0];
            let ry = dy + b[1] - a[1];
            acc += (h * rx.hypot(ry)).powf(-e);
        }
    }
    h.powi(2 * n as i32) * acc / (pts.len() * pts.len()) as f64
}

/// `∫_{|y|_∞ > half} |y|^{-(n+2s)} dy` by composite Simpson in polar form.
pub fn oracle_cube_tail(n: usize, s: f64, half: f64) -> f64 {
    if n == 1 {
        return half.powf(-2.0 * s) / s;
    }
    let m = 20_000;
    let b = std::f64::consts::FRAC_PI_4;
    let f = |t: f64| (half / t.cos()).powf(-2.0 * s) / (2.0 * s);
    let hstep = b / m as f64;
    let mut acc = f(0.0) + f(b);
    for k in 1..m {
        acc += f(k as f64 * hstep) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    8.0 * acc * hstep / 3.0
}

/// `B[u, u]` by a plain double loop over every cell pair of the grid.
pub fn oracle_form(u: &LatticeField, s: f64) -> f64 {
    let grid = u.grid();
    let a = u.support();
    let m = grid.half_cells() as i64;
    let reach = 2 * m;
    let mut total = 0.0;
    for (c, i) in a.cells() {
        let pi = grid.coords(i);
        for (c2, j) in a.cells() {
            if c2 != c || j == i {
                continue;
            }
            let d = u.get(c, i) - u.get(c2, j);
            total += oracle_weight(&grid, s, pi, grid.coords(j)) * d * d;
        }
        // Everything outside A within the offset cube, then the analytic rest.
        let mut ext = 0.0;
        let ys = if grid.n() == 2 { -reach..=reach } else { 0..=0 };
        for dx in -reach..=reach {
            for dy in ys.clone() {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let q = [pi[0] + dx, pi[1] + dy];
                let inside = grid.index(q).map_or(false, |k| a.contains(c, k));
                if !inside {
                    ext += oracle_weight(&grid, s, pi, q);
                }
            }
        }
        let half = (reach as f64 + 0.5) * grid.h();
        ext += grid.cell_volume() * oracle_cube_tail(grid.n(), s, half);
        total += 2.0 * ext * u.get(c, i).powi(2);
    }
    total
}

pub fn small_grid(n: usize, copies: usize) -> GridSpec {
    match n {
        1 => GridSpec::new(1, 0.125, 1.5, copies).unwrap(),
        _ => GridSpec::new(2, 0.25, 1.5, copies).unwrap(),
    }
}

/// Random nonempty mask on the interior of `grid`.
pub fn mask_strategy(grid: GridSpec) -> impl Strategy<Value = MultiIndicator> {
    let len = grid.copies() * grid.cells_per_copy();
    prop::collection::vec(prop::bool::weighted(0.4), len).prop_filter_map("nonempty", move |bits| {
        let mut a = MultiIndicator::empty(grid);
        for (k, b) in bits.into_iter().enumerate() {
            let (c, i) = (k / grid.cells_per_copy(), k % grid.cells_per_copy());
            if b && grid.is_interior(i) {
                a.insert(c, i).unwrap();
            }
        }
        (!a.is_empty()).then_some(a)
    })
}

/// Field with values drawn from `values` on the cells of `a`, in cell order.
pub fn field_on(a: &MultiIndicator, values: &[f64]) -> LatticeField {
    let mut u = LatticeField::zeros(a.clone());
    for (k, (c, i)) in a.cells().into_iter().enumerate() {
        u.set(c, i, values[k % values.len()]).unwrap();
    }
    u
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

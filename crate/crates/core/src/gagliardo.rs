//! Discrete Gagliardo form on piecewise-constant lattice fields.
//!
//! For a field with cell values `u_p` the form is
//!
//! ```text
//! B[u, u] = Σ_{p ≠ q} w_pq (u_p - u_q)^2 + Σ_p e_p u_p^2
//! ```
//!
//! where the sum runs over ordered pairs of active cells, `w_pq ≈ ∬ K` over the
//! two cells and `e_p = 2 h^n ∫_{complement} K(x_p, y) dy` couples cell `p` to
//! the zero exterior (the factor 2 accounts for both orders of the pair).
//!
//! Pair weights depend only on the lattice offset. Far pairs use the midpoint
//! rule `h^{2n} |x_p - x_q|^{-(n+2s)}`; pairs within `near_field_radius` cells
//! use `4^n`-point subcell midpoint quadrature in each cell. The exterior
//! coefficient is `2 (T - Σ_{q ∈ A, q ≠ p} w_pq)`, where `T` is the interaction
//! of one cell with everything else: an exact lattice sum over a cube of offsets
//! covering twice the box, plus the analytic kernel integral beyond that cube.
//! `T` does not depend on `p`, so the form is exactly translation invariant.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, KernelParams, LatticeField, MultiIndicator};

/// Subcell points per axis for near-field pairs.
const SUBCELLS: usize = 4;

/// Offset-indexed pair weights for one grid and kernel.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: GridSpec,
    kp: KernelParams,
    reach: i64,
    weights: Vec<f64>,
    total: f64,
}

impl KernelTable {
    pub fn new(grid: GridSpec, kp: KernelParams) -> Result<Self> {
        kp.check_grid(&grid)?;
        let n = grid.n();
        let reach = 2 * grid.half_cells() as i64;
        let span = (2 * reach + 1) as usize;
        let len = span.pow(n as u32);
        let weights: Vec<f64> = (0..len)
            .into_par_iter()
            .map(|k| {
                let delta = match n {
                    1 => [k as i64 - reach, 0],
                    _ => [(k / span) as i64 - reach, (k % span) as i64 - reach],
                };
                pair_weight(&grid, &kp, delta)
            })
            .collect();
        let lattice_sum: f64 = weights.iter().sum();
        let half = (reach as f64 + 0.5) * grid.h();
        let total = lattice_sum + grid.cell_volume() * cube_exterior_integral(n, kp.s(), half);
        Ok(Self { grid, kp, reach, weights, total })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn kernel_params(&self) -> KernelParams {
        self.kp
    }

    /// Weight for a same-copy lattice offset; zero for the zero offset.
    pub fn weight(&self, delta: [i64; 2]) -> f64 {
        let span = 2 * self.reach + 1;
        debug_assert!(delta.iter().all(|d| d.abs() <= self.reach));
        let k = match self.grid.n() {
            1 => delta[0] + self.reach,
            _ => (delta[0] + self.reach) * span + delta[1] + self.reach,
        };
        self.weights[k as usize]
    }

    /// Weight between two cells, zero across copies.
    pub fn cell_weight(&self, p: (usize, usize), q: (usize, usize)) -> f64 {
        if p.0 != q.0 {
            return 0.0;
        }
        let (a, b) = (self.grid.coords(p.1), self.grid.coords(q.1));
        self.weight([b[0] - a[0], b[1] - a[1]])
    }

    /// Interaction of one cell with the rest of `R^n`, `h^n ∫_{R^n ∖ cell} K`.
    pub fn total_interaction(&self) -> f64 {
        self.total
    }
}

/// `w(δ)` for a nonzero offset; midpoint rule far, subcell quadrature near.
fn pair_weight(grid: &GridSpec, kp: &KernelParams, delta: [i64; 2]) -> f64 {
    // Canonical representative under the lattice symmetries, so that the table
    // is bitwise symmetric.
    let (a, b) = (delta[0].abs(), delta[1].abs());
    let delta = [a.max(b), a.min(b)];
    let n = grid.n();
    let h = grid.h();
    let d2 = (delta[0] * delta[0] + delta[1] * delta[1]) as f64;
    if d2 == 0.0 {
        return 0.0;
    }
    let scale = h.powi(2 * n as i32);
    let near = kp.near_field_radius() as f64;
    if d2 > near * near {
        return scale * kp.kernel(h * d2.sqrt());
    }
    // Differences of subcell midpoints: (a - b) / SUBCELLS for a, b in 0..SUBCELLS.
    let q = SUBCELLS as i64;
    let mut acc = 0.0;
    let axis_offsets: Vec<(f64, f64)> = (-(q - 1)..q)
        .map(|k| (k as f64 / q as f64, (q - k.abs()) as f64))
        .collect();
    match n {
        1 => {
            for &(o, mult) in &axis_offsets {
                let r = h * (delta[0] as f64 + o).abs();
                acc += mult * kp.kernel(r);
            }
        }
        _ => {
            for &(ox, mx) in &axis_offsets {
                for &(oy, my) in &axis_offsets {
                    let r = h * (delta[0] as f64 + ox).hypot(delta[1] as f64 + oy);
                    acc += mx * my * kp.kernel(r);
                }
            }
        }
    }
    let points = (SUBCELLS as f64).powi(2 * n as i32);
    scale * acc / points
}

/// `∫_{|y|_∞ > half} |y|^{-(n+2s)} dy`, the kernel mass outside a centred cube.
pub(crate) fn cube_exterior_integral(n: usize, s: f64, half: f64) -> f64 {
    match n {
        1 => 2.0 * half.powf(-2.0 * s) / (2.0 * s),
        _ => {
            // Polar form: (1/2s) ∫ ρ(θ)^{-2s} dθ with ρ = half / cos θ on each of
            // eight symmetric octants.
            let integral = gauss_legendre(0.0, std::f64::consts::FRAC_PI_4, |t| {
                t.cos().powf(2.0 * s)
            });
            8.0 * half.powf(-2.0 * s) * integral / (2.0 * s)
        }
    }
}

/// 32-point composite Gauss-Legendre (4 panels of 8 nodes).
pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = 4;
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let (mid, half) = (lo + 0.5 * width, 0.5 * width);
        for (x, w) in X.iter().zip(W) {
            acc += w * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    acc
}

/// Assembled form on the active cells of a domain.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    grid: GridSpec,
    kp: KernelParams,
    domain: MultiIndicator,
    cells: Vec<(usize, usize)>,
    lookup: Vec<Vec<Option<usize>>>,
    weights: DMatrix<f64>,
    exterior: Vec<f64>,
}

/// Assembles the form on `a`, building a fresh kernel table.
pub fn assemble_form(a: &MultiIndicator, kp: &KernelParams) -> Result<FormMatrix> {
    let table = KernelTable::new(a.grid(), *kp)?;
    assemble_with_table(a, &table)
}

/// Assembles the form on `a` reusing a kernel table for the same grid.
pub fn assemble_with_table(a: &MultiIndicator, table: &KernelTable) -> Result<FormMatrix> {
    let grid = a.grid();
    if grid != table.grid() {
        return Err(Error::InvalidArgument("kernel table built for a different grid".into()));
    }
    if a.is_empty() {
        return Err(Error::EmptyDomain);
    }
    for (copy, mask) in a.masks().iter().enumerate() {
        if let Some(cell) = mask.iter().enumerate().position(|(i, &b)| b && !grid.is_interior(i)) {
            return Err(Error::TouchesBoundary { copy, cell });
        }
    }
    let cells = a.cells();
    let count = cells.len();
    let mut lookup = vec![vec![None; grid.cells_per_copy()]; grid.copies()];
    for (k, &(c, i)) in cells.iter().enumerate() {
        lookup[c][i] = Some(k);
    }
    let coords: Vec<[i64; 2]> = cells.iter().map(|&(_, i)| grid.coords(i)).collect();
    let rows: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|p| {
            (0..count)
                .map(|q| {
                    if p == q || cells[p].0 != cells[q].0 {
                        0.0
                    } else {
                        table.weight([coords[q][0] - coords[p][0], coords[q][1] - coords[p][1]])
                    }
                })
                .collect()
        })
        .collect();
    let total = table.total_interaction();
    let exterior = rows
        .iter()
        .map(|row| 2.0 * (total - row.iter().sum::<f64>()))
        .collect();
    let weights = DMatrix::from_fn(count, count, |p, q| rows[p][q]);
    Ok(FormMatrix {
        grid,
        kp: table.kernel_params(),
        domain: a.clone(),
        cells,
        lookup,
        weights,
        exterior,
    })
}

impl FormMatrix {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn kernel_params(&self) -> KernelParams {
        self.kp
    }

    pub fn domain(&self) -> &MultiIndicator {
        &self.domain
    }

    /// Active cells as `(copy, index)`, copy-major row-major.
    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    pub fn active_index(&self, copy: usize, index: usize) -> Option<usize> {
        self.lookup[copy][index]
    }

    pub fn weight(&self, p: usize, q: usize) -> f64 {
        self.weights[(p, q)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn exterior(&self) -> &[f64] {
        &self.exterior
    }

    /// Symmetric matrix `S` with `B[u, v] = uᵀ S v`.
    pub fn stiffness(&self) -> DMatrix<f64> {
        let mut s = &self.weights * -2.0;
        for p in 0..self.len() {
            let row_sum: f64 = self.weights.row(p).iter().sum();
            s[(p, p)] = 2.0 * row_sum + self.exterior[p];
        }
        s
    }

    /// Active-cell values of a field; errors if it is nonzero off the active set.
    pub fn vector_of(&self, u: &LatticeField) -> Result<DVector<f64>> {
        if u.grid() != self.grid {
            return Err(Error::SupportMismatch);
        }
        for (c, vals) in u.values().iter().enumerate() {
            for (i, &v) in vals.iter().enumerate() {
                if v != 0.0 && self.lookup[c][i].is_none() {
                    return Err(Error::SupportMismatch);
                }
            }
        }
        Ok(DVector::from_iterator(self.len(), self.cells.iter().map(|&(c, i)| u.get(c, i))))
    }

    /// Field supported on the domain with the given active-cell values.
    pub fn field_of(&self, v: &DVector<f64>) -> LatticeField {
        let mut f = LatticeField::zeros(self.domain.clone());
        for (k, &(c, i)) in self.cells.iter().enumerate() {
            f.set(c, i, v[k]).expect("active cell is in the support");
        }
        f
    }

    fn bilinear_vec(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let n = self.len();
        let mut acc = 0.0;
        for p in 0..n {
            let mut row = 0.0;
            for q in 0..n {
                let w = self.weights[(p, q)];
                if w != 0.0 {
                    row += w * (u[p] - u[q]) * (v[p] - v[q]);
                }
            }
            acc += row + self.exterior[p] * u[p] * v[p];
        }
        acc
    }
}

/// `B[u, v]`, summed row by row in active-cell order.
pub fn bilinear(form: &FormMatrix, u: &LatticeField, v: &LatticeField) -> Result<f64> {
    let (uu, vv) = (form.vector_of(u)?, form.vector_of(v)?);
    Ok(form.bilinear_vec(&uu, &vv))
}

/// `B[u, u] / (h^n Σ u²)`.
pub fn rayleigh(form: &FormMatrix, u: &LatticeField) -> Result<f64> {
    let uu = form.vector_of(u)?;
    let mass = form.grid.cell_volume() * uu.norm_squared();
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(form.bilinear_vec(&uu, &uu) / mass)
}

/// The six region pieces of `B[u, u]` for a split of the domain into `A1 ∪ A2`,
/// with `C` the complement.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EnergyDecomposition {
    pub a1_a1: f64,
    pub a2_a2: f64,
    pub c_c: f64,
    /// Includes the factor 2 for both orders.
    pub a1_a2: f64,
    pub a1_c: f64,
    pub a2_c: f64,
    /// `-4 Σ_{p ∈ A1, q ∈ A2} w_pq u_p u_q`: the only part of `B[u, u]` that
    /// changes when `A1` and `A2` are moved rigidly relative to each other.
    pub cross_term: f64,
}

impl EnergyDecomposition {
    pub fn total(&self) -> f64 {
        self.a1_a1 + self.a2_a2 + self.c_c + self.a1_a2 + self.a1_c + self.a2_c
    }
}

/// Side of the split each active cell belongs to.
fn split_sides(form: &FormMatrix, a1: &MultiIndicator, a2: &MultiIndicator) -> Result<Vec<u8>> {
    if a1.grid() != form.grid || a2.grid() != form.grid {
        return Err(Error::SupportMismatch);
    }
    let mut side = vec![0u8; form.len()];
    for (k, &(c, i)) in form.cells.iter().enumerate() {
        match (a1.contains(c, i), a2.contains(c, i)) {
            (true, true) => return Err(Error::Overlap(k)),
            (true, false) => side[k] = 1,
            (false, true) => side[k] = 2,
            (false, false) => {
                return Err(Error::InvalidArgument(format!(
                    "active cell {k} lies in neither part of the split"
                )))
            }
        }
    }
    for part in [a1, a2] {
        if part.cells().iter().any(|&(c, i)| form.lookup[c][i].is_none()) {
            return Err(Error::InvalidArgument("split part leaves the active set".into()));
        }
    }
    Ok(side)
}

pub fn energy_decomposition(
    form: &FormMatrix,
    u: &LatticeField,
    a1: &MultiIndicator,
    a2: &MultiIndicator,
) -> Result<EnergyDecomposition> {
    let side = split_sides(form, a1, a2)?;
    let uu = form.vector_of(u)?;
    let n = form.len();
    let mut d = EnergyDecomposition {
        a1_a1: 0.0,
        a2_a2: 0.0,
        c_c: 0.0,
        a1_a2: 0.0,
        a1_c: 0.0,
        a2_c: 0.0,
        cross_term: 0.0,
    };
    for p in 0..n {
        for q in 0..n {
            let w = form.weights[(p, q)];
            if w == 0.0 {
                continue;
            }
            let diff2 = w * (uu[p] - uu[q]).powi(2);
            match (side[p], side[q]) {
                (1, 1) => d.a1_a1 += diff2,
                (2, 2) => d.a2_a2 += diff2,
                (1, 2) => {
                    // Ordered pairs (p, q) and (q, p) together make 2∫_{A1}∫_{A2}.
                    d.a1_a2 += 2.0 * diff2;
                    d.cross_term -= 4.0 * w * uu[p] * uu[q];
                }
                _ => {}
            }
        }
        let ext = form.exterior[p] * uu[p] * uu[p];
        if side[p] == 1 {
            d.a1_c += ext;
        } else {
            d.a2_c += ext;
        }
    }
    Ok(d)
}

/// `-4 Σ_{p ∈ A1, q ∈ A2} w_pq u_p u_q` computed from the kernel table, so the
/// parts may sit anywhere on the lattice (not only on an assembled domain).
pub fn interaction_energy(
    table: &KernelTable,
    u: &LatticeField,
    a1: &MultiIndicator,
    a2: &MultiIndicator,
) -> Result<f64> {
    if a1.grid() != table.grid() || a2.grid() != table.grid() {
        return Err(Error::SupportMismatch);
    }
    let c1 = a1.cells();
    let c2 = a2.cells();
    if let Some(k) = c1.iter().position(|&(c, i)| a2.contains(c, i)) {
        return Err(Error::Overlap(k));
    }
    let mut acc = 0.0;
    for &p in &c1 {
        let up = u.get(p.0, p.1);
        if up == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for &q in &c2 {
            row += table.cell_weight(p, q) * u.get(q.0, q.1);
        }
        acc += up * row;
    }
    Ok(-4.0 * acc)
}

const DUMP_MAGIC: &[u8; 8] = b"FSFORM01";

/// Writes the form as: magic, header (n, copies, M, h, s, near radius, cell
/// count), the active-cell map, exterior coefficients, then `(p, q, w)`
/// triplets for `p < q`, `w > 0`. Little-endian throughout.
pub fn write_form_dump<W: Write>(form: &FormMatrix, mut out: W) -> std::io::Result<()> {
    let g = form.grid;
    out.write_all(DUMP_MAGIC)?;
    for v in [g.n() as u64, g.copies() as u64, g.half_cells() as u64] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in [g.h(), form.kp.s()] {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(&(form.kp.near_field_radius() as u64).to_le_bytes())?;
    out.write_all(&(form.len() as u64).to_le_bytes())?;
    for &(c, i) in &form.cells {
        out.write_all(&(c as u64).to_le_bytes())?;
        out.write_all(&(i as u64).to_le_bytes())?;
    }
    for e in &form.exterior {
        out.write_all(&e.to_le_bytes())?;
    }
    let mut triplets = Vec::new();
    for p in 0..form.len() {
        for q in p + 1..form.len() {
            let w = form.weights[(p, q)];
            if w != 0.0 {
                triplets.push((p as u64, q as u64, w));
            }
        }
    }
    out.write_all(&(triplets.len() as u64).to_le_bytes())?;
    for (p, q, w) in triplets {
        out.write_all(&p.to_le_bytes())?;
        out.write_all(&q.to_le_bytes())?;
        out.write_all(&w.to_le_bytes())?;
    }
    Ok(())
}

/// Decoded form dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FormDump {
    pub n: usize,
    pub copies: usize,
    pub half_cells: usize,
    pub h: f64,
    pub s: f64,
    pub near_field_radius: usize,
    pub cells: Vec<(usize, usize)>,
    pub exterior: Vec<f64>,
    pub triplets: Vec<(usize, usize, f64)>,
}

pub fn read_form_dump<R: Read>(mut input: R) -> Result<FormDump> {
    let io = |e: std::io::Error| Error::Format(e.to_string());
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut buf = [0u8; 8];
    let mut u64_next = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut buf).map_err(io)?;
        Ok(u64::from_le_bytes(buf))
    };
    let n = u64_next(&mut input)? as usize;
    let copies = u64_next(&mut input)? as usize;
    let half_cells = u64_next(&mut input)? as usize;
    let h = f64::from_bits(u64_next(&mut input)?);
    let s = f64::from_bits(u64_next(&mut input)?);
    let near_field_radius = u64_next(&mut input)? as usize;
    let count = u64_next(&mut input)? as usize;
    let mut cells = Vec::with_capacity(count);
    for _ in 0..count {
        let c = u64_next(&mut input)? as usize;
        let i = u64_next(&mut input)? as usize;
        cells.push((c, i));
    }
    let mut exterior = Vec::with_capacity(count);
    for _ in 0..count {
        exterior.push(f64::from_bits(u64_next(&mut input)?));
    }
    let t = u64_next(&mut input)? as usize;
    let mut triplets = Vec::with_capacity(t);
    for _ in 0..t {
        let p = u64_next(&mut input)? as usize;
        let q = u64_next(&mut input)? as usize;
        let w = f64::from_bits(u64_next(&mut input)?);
        if p >= count || q >= count {
            return Err(Error::Format(format!("triplet index ({p}, {q}) out of range")));
        }
        triplets.push((p, q, w));
    }
    Ok(FormDump { n, copies, half_cells, h, s, near_field_radius, cells, exterior, triplets })
}

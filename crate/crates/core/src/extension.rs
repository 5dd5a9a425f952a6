//! Weighted extension `div(|y|^a ∇u) = 0` of a one-dimensional trace to the
//! half plane, its energy, and the Weiss functional.
//!
//! The half-plane grid has columns at `x_i = x_offset + i h`, `|i| ≤ M`, and
//! rows at `y_j = (j + ½) h`, `0 ≤ j < J`; the trace sits at `y = 0`. Edge
//! conductances integrate the weight exactly along the edge direction so the
//! weight is never evaluated at `y = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, KernelParams, LatticeField};

const CG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2d {
    h: f64,
    half_cells: usize,
    rows: usize,
    x_offset: f64,
}

impl Grid2d {
    pub fn new(h: f64, half_width: f64, height: f64, x_offset: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        let m = half_width / h;
        let j = height / h;
        if (m - m.round()).abs() > 1e-9 || m.round() < 2.0 {
            return Err(Error::InvalidGrid(format!("half width {half_width} is not a multiple ≥ 2 of h")));
        }
        if (j - j.round()).abs() > 1e-9 || j.round() < 2.0 {
            return Err(Error::InvalidGrid(format!("height {height} is not a multiple ≥ 2 of h")));
        }
        Ok(Self { h, half_cells: m.round() as usize, rows: j.round() as usize, x_offset })
    }

    /// Columns coincide with the cells of a one-dimensional lattice; height = half width.
    pub fn over(grid: &GridSpec) -> Result<Self> {
        if grid.n() != 1 {
            return Err(Error::InvalidArgument(format!("extension needs n = 1, got {}", grid.n())));
        }
        Self::new(grid.h(), grid.half_width(), grid.half_width(), 0.0)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_cells as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.rows as f64 * self.h
    }

    pub fn x_offset(&self) -> f64 {
        self.x_offset
    }

    pub fn columns(&self) -> usize {
        2 * self.half_cells + 1
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn x(&self, col: usize) -> f64 {
        self.x_offset + (col as f64 - self.half_cells as f64) * self.h
    }

    pub fn y(&self, row: usize) -> f64 {
        (row as f64 + 0.5) * self.h
    }
}

/// Edge conductances for weight `y^a`.
#[derive(Debug, Clone)]
struct Conductances {
    /// Horizontal edges in row `j`.
    x: Vec<f64>,
    /// Vertical edge between rows `j` and `j + 1`; the last one reaches the zero top.
    y: Vec<f64>,
    /// Trace row to row 0.
    trace: f64,
}

impl Conductances {
    fn new(grid: &Grid2d, a: f64) -> Self {
        let h = grid.h;
        let x = (0..grid.rows)
            .map(|j| {
                let (lo, hi) = (j as f64, j as f64 + 1.0);
                h.powf(a) * (hi.powf(1.0 + a) - lo.powf(1.0 + a)) / (1.0 + a)
            })
            .collect();
        let y = (0..grid.rows)
            .map(|j| {
                let (lo, hi) = (j as f64 + 0.5, j as f64 + 1.5);
                let resistance = h.powf(1.0 - a) * (hi.powf(1.0 - a) - lo.powf(1.0 - a)) / (1.0 - a);
                h / resistance
            })
            .collect();
        let trace = h / ((h / 2.0).powf(1.0 - a) / (1.0 - a));
        Self { x, y, trace }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionField {
    grid: Grid2d,
    s: f64,
    /// Row-major nodal values, `values[j * columns + i]`.
    values: Vec<f64>,
    trace: Vec<f64>,
    /// Columns counted in the thin positivity measure.
    support: Vec<bool>,
    /// Largest absolute discrete residual at unknown nodes.
    pub residual: f64,
    pub iterations: usize,
}

impl ExtensionField {
    pub fn grid(&self) -> Grid2d {
        self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `a = 1 - 2s`.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.grid.columns() + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn with_support(mut self, support: Vec<bool>) -> Result<Self> {
        if support.len() != self.grid.columns() {
            return Err(Error::SupportMismatch);
        }
        self.support = support;
        Ok(self)
    }

    /// Bilinear interpolation, evenly reflected in `y`; zero outside the grid.
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let y = y.abs();
        let fx = (x - g.x(0)) / g.h;
        if fx < 0.0 || fx > (g.columns() - 1) as f64 {
            return 0.0;
        }
        // Level 0 is the trace, level j + 1 is row j.
        let fy = if y <= 0.5 * g.h { y / (0.5 * g.h) } else { y / g.h + 0.5 };
        let top = g.rows as f64;
        if fy > top {
            // Between the last row and the zero top.
            let w = (fy - top).min(1.0);
            let col_val = self.column_interp(fx, g.rows);
            return (1.0 - w) * col_val;
        }
        let ly = (fy.floor() as usize).min(g.rows - 1);
        let ty = fy - ly as f64;
        (1.0 - ty) * self.column_interp(fx, ly) + ty * self.column_interp(fx, ly + 1)
    }

    fn level(&self, col: usize, level: usize) -> f64 {
        if level == 0 {
            self.trace[col]
        } else {
            self.value(col, level - 1)
        }
    }

    fn column_interp(&self, fx: f64, level: usize) -> f64 {
        let c = self.grid.columns();
        let lx = (fx.floor() as usize).min(c - 2);
        let tx = fx - lx as f64;
        (1.0 - tx) * self.level(lx, level) + tx * self.level(lx + 1, level)
    }

    /// Per-edge energies `c (Δu)^2` with the dual cell each edge represents,
    /// as `(x_lo, x_hi, y_lo, y_hi, energy)` in the upper half plane.
    fn edge_energies(&self) -> Vec<[f64; 5]> {
        let g = &self.grid;
        let cond = Conductances::new(g, self.a());
        let h = g.h;
        let cols = g.columns();
        let mut out = Vec::with_capacity(3 * cols * g.rows);
        for i in 0..cols {
            let x = g.x(i);
            let d = self.value(i, 0) - self.trace[i];
            out.push([x - h / 2.0, x + h / 2.0, 0.0, h / 2.0, cond.trace * d * d]);
        }
        for j in 0..g.rows {
            let (ylo, yhi) = (j as f64 * h, (j as f64 + 1.0) * h);
            for i in 0..cols - 1 {
                let d = self.value(i + 1, j) - self.value(i, j);
                out.push([g.x(i), g.x(i + 1), ylo, yhi, cond.x[j] * d * d]);
            }
            for i in 0..cols {
                let above = if j + 1 < g.rows { self.value(i, j + 1) } else { 0.0 };
                let d = above - self.value(i, j);
                let x = g.x(i);
                out.push([x - h / 2.0, x + h / 2.0, g.y(j), g.y(j) + h, cond.y[j] * d * d]);
            }
        }
        out
    }

    /// `∫ |y|^a |∇u|^2` over the whole plane (twice the half-plane value).
    pub fn energy(&self) -> f64 {
        2.0 * self.edge_energies().iter().map(|e| e[4]).sum::<f64>()
    }

    /// `u_r(X) = r^{-s} u(r X)`, realised by rescaling the grid.
    pub fn rescaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::RadiusOutOfRange(r));
        }
        let g = &self.grid;
        let grid = Grid2d { h: g.h / r, half_cells: g.half_cells, rows: g.rows, x_offset: g.x_offset / r };
        let f = r.powf(-self.s);
        Ok(Self {
            grid,
            s: self.s,
            values: self.values.iter().map(|v| v * f).collect(),
            trace: self.trace.iter().map(|v| v * f).collect(),
            support: self.support.clone(),
            residual: self.residual * f,
            iterations: self.iterations,
        })
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidKernel(format!("s = {s} must lie in (0, 1)")));
    }
    Ok(())
}

/// Solves for the extension of copy `copy` of `trace` with zero data on the
/// outer boundary of the half-plane box.
pub fn extend(trace: &LatticeField, copy: usize, s: f64) -> Result<ExtensionField> {
    check_s(s)?;
    let lattice = trace.grid();
    if copy >= lattice.copies() {
        return Err(Error::InvalidArgument(format!("copy {copy} out of range")));
    }
    let grid = Grid2d::over(&lattice)?;
    let values: Vec<f64> = trace.values()[copy].clone();
    let support: Vec<bool> = trace.support().mask(copy).to_vec();
    if values[0] != 0.0 || values[values.len() - 1] != 0.0 {
        return Err(Error::TouchesBoundary { copy, cell: 0 });
    }
    solve(grid, s, values, support)
}

/// Extension of explicit column data on an arbitrary half-plane grid.
pub fn extend_on(grid: Grid2d, s: f64, trace: Vec<f64>, support: Vec<bool>) -> Result<ExtensionField> {
    check_s(s)?;
    if trace.len() != grid.columns() || support.len() != grid.columns() {
        return Err(Error::SupportMismatch);
    }
    if trace[0] != 0.0 || trace[trace.len() - 1] != 0.0 {
        return Err(Error::TouchesBoundary { copy: 0, cell: 0 });
    }
    solve(grid, s, trace, support)
}

fn solve(grid: Grid2d, s: f64, trace: Vec<f64>, support: Vec<bool>) -> Result<ExtensionField> {
    let a = 1.0 - 2.0 * s;
    let cond = Conductances::new(&grid, a);
    let cols = grid.columns();
    let rows = grid.rows;
    let len = cols * rows;
    let unknown = |k: usize| {
        let i = k % cols;
        i != 0 && i != cols - 1
    };
    let diag: Vec<f64> = (0..len)
        .map(|k| {
            let j = k / cols;
            let below = if j == 0 { cond.trace } else { cond.y[j - 1] };
            2.0 * cond.x[j] + below + cond.y[j]
        })
        .collect();
    // Operator on the unknown nodes; Dirichlet columns are held at zero.
    let apply = |v: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(cols).enumerate().for_each(|(j, row)| {
            for i in 1..cols - 1 {
                let k = j * cols + i;
                let mut acc = diag[k] * v[k];
                acc -= cond.x[j] * (v[k - 1] + v[k + 1]);
                if j > 0 {
                    acc -= cond.y[j - 1] * v[k - cols];
                }
                if j + 1 < rows {
                    acc -= cond.y[j] * v[k + cols];
                }
                row[i] = acc;
            }
            row[0] = 0.0;
            row[cols - 1] = 0.0;
        });
    };
    let mut b = vec![0.0; len];
    for i in 1..cols - 1 {
        b[i] = cond.trace * trace[i];
    }
    let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(a, b)| a * b).sum() };
    let mut x = vec![0.0; len];
    let mut r = b.clone();
    let precond = |r: &[f64], z: &mut [f64]| {
        for k in 0..len {
            z[k] = if unknown(k) { r[k] / diag[k] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; len];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let bnorm = dot(&b, &b).sqrt();
    let mut ap = vec![0.0; len];
    let mut iterations = 0;
    if bnorm > 0.0 {
        let max_iter = 20 * (cols + rows) + 1000;
        loop {
            if dot(&r, &r).sqrt() <= CG_TOL * bnorm {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::Numerical("extension solve did not converge".into()));
            }
            apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Numerical("extension operator is not positive definite".into()));
            }
            let alpha = rz / pap;
            for k in 0..len {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            precond(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            for k in 0..len {
                p[k] = z[k] + beta * p[k];
            }
            rz = rz_new;
            iterations += 1;
        }
    }
    apply(&x, &mut ap);
    let residual = (0..len).filter(|&k| unknown(k)).map(|k| (ap[k] - b[k]).abs()).fold(0.0, f64::max);
    Ok(ExtensionField { grid, s, values: x, trace, support, residual, iterations })
}

/// Exact samples of `U = (ρ^{1/2} cos(θ/2))^{2s}`, with the positive axis as support.
pub fn homogeneous_profile(s: f64, grid: Grid2d) -> Result<ExtensionField> {
    check_s(s)?;
    let cols = grid.columns();
    let mut values = Vec::with_capacity(cols * grid.rows);
    for j in 0..grid.rows {
        for i in 0..cols {
            values.push(homogeneous_value(s, grid.x(i), grid.y(j)));
        }
    }
    let trace = (0..cols).map(|i| homogeneous_value(s, grid.x(i), 0.0)).collect();
    let support = (0..cols).map(|i| grid.x(i) > 0.0).collect();
    Ok(ExtensionField { grid, s, values, trace, support, residual: 0.0, iterations: 0 })
}

pub fn homogeneous_value(s: f64, x: f64, y: f64) -> f64 {
    // ρ^{1/2} cos(θ/2) = ((ρ + x) / 2)^{1/2}
    ((x.hypot(y) + x) / 2.0).max(0.0).powf(s)
}

/// Half-plane Poisson kernel for `s = ½`: `y / (π (x² + y²))`.
pub fn poisson_kernel(x: f64, y: f64) -> f64 {
    y / (std::f64::consts::PI * (x * x + y * y))
}

/// `κ_s C_{n,s}` with `κ_s = 2^{1-2s} Γ(1-s) / Γ(s)`: the factor with
/// `∫ |y|^a |∇u|^2 = κ_s C_{n,s} B[g, g]` for the bare form `B`.
pub fn extension_energy_constant(kp: &KernelParams) -> f64 {
    use statrs::function::gamma::gamma;
    let s = kp.s();
    2f64.powf(1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s) * kp.fractional_laplacian_constant()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeissRow {
    pub r: f64,
    #[serde(rename = "W")]
    pub w: f64,
    /// `∫_{B_r} |y|^a |∇u|^2`.
    pub bulk: f64,
    /// `|{u ≠ 0} ∩ B'_r|` on the thin line.
    pub thin: f64,
    /// `∫_{∂B_r} |y|^a u^2`.
    pub boundary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeissCurve {
    pub center: f64,
    pub s: f64,
    pub rows: Vec<WeissRow>,
}

impl WeissCurve {
    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.w).collect()
    }

    /// Largest `max(0, W(r_i) - W(r_{i+1})) / ((r_i^{2s-1} + 1) Δr)`: the
    /// constant the decreasing increments need.
    pub fn monotonicity_constant(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| {
                let dr = w[1].r - w[0].r;
                let drop = (w[0].w - w[1].w).max(0.0);
                drop / ((w[0].r.powf(2.0 * self.s - 1.0) + 1.0) * dr)
            })
            .fold(0.0, f64::max)
    }
}

const BOUNDARY_ARCS: usize = 360;
const SUBSAMPLES: usize = 8;

/// `W(r) = r^{-n} (∫_{B_r} |y|^a |∇u|^2 + |{u ≠ 0} ∩ B'_r|) - s r^{-(n+1)} ∫_{∂B_r} |y|^a u^2`
/// with `n = 1` and balls centred at `(x0, 0)`.
pub fn weiss(u: &ExtensionField, x0: f64, radii: &[f64]) -> Result<WeissCurve> {
    let g = &u.grid;
    let limit = g.half_width().min(g.height()) / 2.0;
    for &r in radii {
        if !(r > 0.0 && r < limit) || x0 - r < g.x(0) || x0 + r > g.x(g.columns() - 1) {
            return Err(Error::RadiusOutOfRange(r));
        }
    }
    let edges = u.edge_energies();
    let a = u.a();
    let s = u.s;
    let rows = radii
        .par_iter()
        .map(|&r| {
            let bulk = 2.0 * bulk_in_ball(&edges, x0, r);
            let thin = thin_measure(u, x0, r);
            let boundary = boundary_integral(u, x0, r, a);
            WeissRow { r, w: (bulk + thin) / r - s * boundary / (r * r), bulk, thin, boundary }
        })
        .collect();
    Ok(WeissCurve { center: x0, s, rows })
}

/// Curves at several centres, evaluated concurrently.
pub fn weiss_many(u: &ExtensionField, centers: &[f64], radii: &[f64]) -> Result<Vec<WeissCurve>> {
    centers.par_iter().map(|&c| weiss(u, c, radii)).collect()
}

fn bulk_in_ball(edges: &[[f64; 5]], x0: f64, r: f64) -> f64 {
    let r2 = r * r;
    let inside = |x: f64, y: f64| (x - x0) * (x - x0) + y * y < r2;
    edges
        .iter()
        .filter(|e| e[4] != 0.0)
        .map(|&[xl, xh, yl, yh, energy]| {
            // Nearest and farthest points of the box from the centre.
            let nx = x0.clamp(xl, xh) - x0;
            let ny = 0f64.clamp(yl, yh);
            if nx * nx + ny * ny >= r2 {
                return 0.0;
            }
            let fx = (xl - x0).abs().max((xh - x0).abs());
            let fy = yl.abs().max(yh.abs());
            if fx * fx + fy * fy < r2 {
                return energy;
            }
            let mut hits = 0;
            for p in 0..SUBSAMPLES {
                let x = xl + (p as f64 + 0.5) / SUBSAMPLES as f64 * (xh - xl);
                for q in 0..SUBSAMPLES {
                    let y = yl + (q as f64 + 0.5) / SUBSAMPLES as f64 * (yh - yl);
                    if inside(x, y) {
                        hits += 1;
                    }
                }
            }
            energy * hits as f64 / (SUBSAMPLES * SUBSAMPLES) as f64
        })
        .sum()
}

fn thin_measure(u: &ExtensionField, x0: f64, r: f64) -> f64 {
    let g = &u.grid;
    let h = g.h;
    (0..g.columns())
        .filter(|&i| u.support[i])
        .map(|i| {
            let x = g.x(i);
            ((x + h / 2.0).min(x0 + r) - (x - h / 2.0).max(x0 - r)).max(0.0)
        })
        .sum()
}

/// `∫ sin^a θ dθ` over `[t0, t1] ⊂ [0, π]`.
fn sin_weight(t0: f64, t1: f64, a: f64) -> f64 {
    use std::f64::consts::PI;
    let dt = t1 - t0;
    if t0 <= 0.0 {
        let g = ((0.5 * dt).sin() / (0.5 * dt)).powf(a);
        return g * dt.powf(1.0 + a) / (1.0 + a);
    }
    if t1 >= PI {
        return sin_weight(0.0, PI - t0, a);
    }
    crate::gagliardo::gauss_legendre(t0, t1, |t| t.sin().powf(a))
}

fn boundary_integral(u: &ExtensionField, x0: f64, r: f64, a: f64) -> f64 {
    use std::f64::consts::PI;
    let arcs = BOUNDARY_ARCS / 2;
    let dt = PI / arcs as f64;
    let mut total = 0.0;
    for k in 0..arcs {
        let (t0, t1) = (k as f64 * dt, (k as f64 + 1.0) * dt);
        let t = 0.5 * (t0 + t1);
        let v = u.value_at(x0 + r * t.cos(), r * t.sin());
        total += sin_weight(t0, t1, a) * v * v;
    }
    // Upper and lower halves, arc length r dθ, weight r^a sin^a θ.
    2.0 * r.powf(1.0 + a) * total
}

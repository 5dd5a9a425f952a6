//! Lattice geometry over `k` disjoint copies of `R^n`.
//!
//! Every copy carries the same cell-centred lattice: centres at `i * h` for
//! integer `|i| <= M` in each coordinate, where `M = L / h`. Cells on the outer
//! ring (`|i| == M` in some coordinate) belong to the box but may never be part
//! of a domain, so every domain stays strictly inside the box.
//!
//! Points in different copies are infinitely far apart: their distance is
//! `+inf` and the kernel between them vanishes identically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice geometry shared by every copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    h: f64,
    half_cells: usize,
    copies: usize,
}

impl GridSpec {
    /// `half_width / h` must be a positive integer (up to rounding noise).
    pub fn new(n: usize, h: f64, half_width: f64, copies: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGrid(format!("dimension n = {n} must be 1 or 2")));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if copies == 0 {
            return Err(Error::InvalidGrid("need at least one copy".into()));
        }
        let ratio = half_width / h;
        let m = ratio.round();
        if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width L = {half_width} is not a positive integer multiple of h = {h}"
            )));
        }
        Ok(Self { n, h, half_cells: m as usize, copies })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    /// `M = L / h`.
    pub fn half_cells(&self) -> usize {
        self.half_cells
    }

    pub fn half_width(&self) -> f64 {
        self.half_cells as f64 * self.h
    }

    /// Cells per coordinate axis, `2M + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_cells + 1
    }

    pub fn cells_per_copy(&self) -> usize {
        self.side().pow(self.n as u32)
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Same geometry with a different number of copies.
    pub fn with_copies(&self, copies: usize) -> Result<Self> {
        Self::new(self.n, self.h, self.half_width(), copies)
    }

    /// Integer lattice coordinates of a row-major cell index. Unused axes are 0.
    pub fn coords(&self, index: usize) -> [i64; 2] {
        let m = self.half_cells as i64;
        match self.n {
            1 => [index as i64 - m, 0],
            _ => {
                let side = self.side();
                [(index / side) as i64 - m, (index % side) as i64 - m]
            }
        }
    }

    /// Row-major cell index of lattice coordinates, if inside the box.
    pub fn index(&self, coords: [i64; 2]) -> Option<usize> {
        let m = self.half_cells as i64;
        let ok = |c: i64| (-m..=m).contains(&c);
        match self.n {
            1 => ok(coords[0]).then(|| (coords[0] + m) as usize),
            _ => (ok(coords[0]) && ok(coords[1]))
                .then(|| (coords[0] + m) as usize * self.side() + (coords[1] + m) as usize),
        }
    }

    pub fn position(&self, index: usize) -> [f64; 2] {
        let c = self.coords(index);
        [c[0] as f64 * self.h, c[1] as f64 * self.h]
    }

    /// True when the cell is not on the outer ring of the box.
    pub fn is_interior(&self, index: usize) -> bool {
        let m = self.half_cells as i64;
        let c = self.coords(index);
        c[..self.n].iter().all(|v| v.abs() < m)
    }

    pub fn center_index(&self) -> usize {
        self.index([0, 0]).expect("centre cell exists")
    }

    /// Number of cells a domain may occupy in one copy.
    pub fn interior_cells_per_copy(&self) -> usize {
        (self.side() - 2).pow(self.n as u32)
    }
}

/// Fractional order and near-field quadrature settings.
///
/// The kernel is the bare Gagliardo kernel `|x - y|^{-(n + 2s)}` with unit
/// normalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    s: f64,
    n: usize,
    near_field_radius: usize,
}

impl KernelParams {
    pub const DEFAULT_NEAR_FIELD_RADIUS: usize = 3;

    pub fn new(n: usize, s: f64) -> Result<Self> {
        Self::with_near_field_radius(n, s, Self::DEFAULT_NEAR_FIELD_RADIUS)
    }

    pub fn with_near_field_radius(n: usize, s: f64, near_field_radius: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidKernel(format!("s = {s} must lie in (0, 1)")));
        }
        if n != 1 && n != 2 {
            return Err(Error::InvalidKernel(format!("dimension n = {n} must be 1 or 2")));
        }
        if near_field_radius < 1 {
            return Err(Error::InvalidKernel("near_field_radius must be at least 1".into()));
        }
        Ok(Self { s, n, near_field_radius })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn near_field_radius(&self) -> usize {
        self.near_field_radius
    }

    /// `n + 2s`.
    pub fn exponent(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    /// `K = r^{-(n+2s)}`; zero at infinite distance (distinct copies).
    pub fn kernel(&self, distance: f64) -> f64 {
        if distance.is_infinite() {
            0.0
        } else {
            distance.powf(-self.exponent())
        }
    }

    /// `C_{n,s} = 4^s Γ(n/2 + s) / (π^{n/2} |Γ(-s)|)`, the constant that turns
    /// the principal-value integral into the operator with symbol `|ξ|^{2s}`.
    ///
    /// Everything in this crate uses the bare form; this is only needed to
    /// compare against closed forms stated for the normalised operator.
    pub fn fractional_laplacian_constant(&self) -> f64 {
        use statrs::function::gamma::gamma;
        let n = self.n as f64;
        4f64.powf(self.s) * gamma(n / 2.0 + self.s)
            / (std::f64::consts::PI.powf(n / 2.0) * gamma(-self.s).abs())
    }

    /// Factor converting a bare-form torsion field into the solution of
    /// `(-Δ)^s u = 1` for the normalised operator: `2 / C_{n,s}`.
    pub fn normalized_torsion_scale(&self) -> f64 {
        2.0 / self.fractional_laplacian_constant()
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.n() != self.n {
            return Err(Error::InvalidKernel(format!(
                "kernel dimension {} does not match grid dimension {}",
                self.n,
                grid.n()
            )));
        }
        Ok(())
    }
}

/// A lattice point tagged with the copy it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    pub copy: usize,
    pub coords: [i64; 2],
}

/// Euclidean distance within a copy, `+inf` across copies.
pub fn pair_distance(grid: &GridSpec, p: LatticePoint, q: LatticePoint) -> f64 {
    if p.copy != q.copy {
        return f64::INFINITY;
    }
    let dx = (p.coords[0] - q.coords[0]) as f64;
    let dy = (p.coords[1] - q.coords[1]) as f64;
    grid.h() * (dx * dx + dy * dy).sqrt()
}

/// A domain: one boolean mask per copy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndicator {
    grid: GridSpecKey,
    masks: Vec<Vec<bool>>,
}

// GridSpec holds an f64, so equality/hash of indicators go through its bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GridSpecKey {
    n: usize,
    h_bits: u64,
    half_cells: usize,
    copies: usize,
}

impl From<GridSpec> for GridSpecKey {
    fn from(g: GridSpec) -> Self {
        Self { n: g.n, h_bits: g.h.to_bits(), half_cells: g.half_cells, copies: g.copies }
    }
}

impl From<GridSpecKey> for GridSpec {
    fn from(k: GridSpecKey) -> Self {
        Self { n: k.n, h: f64::from_bits(k.h_bits), half_cells: k.half_cells, copies: k.copies }
    }
}

impl MultiIndicator {
    pub fn empty(grid: GridSpec) -> Self {
        let masks = vec![vec![false; grid.cells_per_copy()]; grid.copies()];
        Self { grid: grid.into(), masks }
    }

    pub fn from_masks(grid: GridSpec, masks: Vec<Vec<bool>>) -> Result<Self> {
        if masks.len() != grid.copies() || masks.iter().any(|m| m.len() != grid.cells_per_copy()) {
            return Err(Error::InvalidGrid("mask shape does not match the grid".into()));
        }
        for (copy, mask) in masks.iter().enumerate() {
            if let Some(cell) = mask.iter().enumerate().position(|(i, &b)| b && !grid.is_interior(i)) {
                return Err(Error::TouchesBoundary { copy, cell });
            }
        }
        Ok(Self { grid: grid.into(), masks })
    }

    /// Cells of `copy` whose centres satisfy `pred`.
    pub fn from_predicate<F>(grid: GridSpec, copy: usize, pred: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> bool,
    {
        let mut a = Self::empty(grid);
        for idx in 0..grid.cells_per_copy() {
            if pred(grid.position(idx)) {
                a.insert(copy, idx)?;
            }
        }
        Ok(a)
    }

    /// Cells of `copy` with centre strictly within `radius` of `center`.
    pub fn ball(grid: GridSpec, copy: usize, center: [f64; 2], radius: f64) -> Result<Self> {
        Self::from_predicate(grid, copy, |x| {
            let d2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
            d2 < radius * radius
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid.into()
    }

    pub fn masks(&self) -> &[Vec<bool>] {
        &self.masks
    }

    pub fn mask(&self, copy: usize) -> &[bool] {
        &self.masks[copy]
    }

    pub fn contains(&self, copy: usize, index: usize) -> bool {
        self.masks[copy][index]
    }

    pub fn insert(&mut self, copy: usize, index: usize) -> Result<()> {
        let grid = self.grid();
        if copy >= grid.copies() || index >= grid.cells_per_copy() {
            return Err(Error::InvalidArgument(format!("cell ({copy}, {index}) outside lattice")));
        }
        if !grid.is_interior(index) {
            return Err(Error::TouchesBoundary { copy, cell: index });
        }
        self.masks[copy][index] = true;
        Ok(())
    }

    pub fn remove(&mut self, copy: usize, index: usize) {
        self.masks[copy][index] = false;
    }

    pub fn count(&self) -> usize {
        self.masks.iter().map(|m| m.iter().filter(|&&b| b).count()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.iter().all(|m| m.iter().all(|&b| !b))
    }

    /// `h^n` times the number of true cells.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid().cell_volume()
    }

    /// `(copy, index)` of every true cell, copy-major then row-major.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.masks
            .iter()
            .enumerate()
            .flat_map(|(c, m)| m.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (c, i)))
            .collect()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (c, m) in other.masks.iter().enumerate() {
            for (i, &b) in m.iter().enumerate() {
                out.masks[c][i] |= b;
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.masks
            .iter()
            .zip(&other.masks)
            .all(|(a, b)| a.iter().zip(b).all(|(&x, &y)| !x || y))
    }

    /// Run-length encoding per copy; runs alternate starting with `false`.
    pub fn to_rle(&self) -> Vec<Vec<u32>> {
        self.masks
            .iter()
            .map(|mask| {
                let mut runs = Vec::new();
                let mut current = false;
                let mut len = 0u32;
                for &b in mask {
                    if b == current {
                        len += 1;
                    } else {
                        runs.push(len);
                        current = b;
                        len = 1;
                    }
                }
                runs.push(len);
                runs
            })
            .collect()
    }

    pub fn from_rle(grid: GridSpec, runs: &[Vec<u32>]) -> Result<Self> {
        let masks = runs
            .iter()
            .map(|r| {
                let mut mask = Vec::with_capacity(grid.cells_per_copy());
                for (k, &len) in r.iter().enumerate() {
                    mask.extend(std::iter::repeat(k % 2 == 1).take(len as usize));
                }
                mask
            })
            .collect();
        Self::from_masks(grid, masks)
    }

    /// Shifts every cell of `copy` by a lattice offset.
    pub fn translated(&self, copy: usize, shift: [i64; 2]) -> Result<Self> {
        let grid = self.grid();
        let mut out = self.clone();
        out.masks[copy].iter_mut().for_each(|b| *b = false);
        for (i, _) in self.masks[copy].iter().enumerate().filter(|(_, &b)| b) {
            let c = grid.coords(i);
            let target = grid
                .index([c[0] + shift[0], c[1] + shift[1]])
                .filter(|&t| grid.is_interior(t))
                .ok_or(Error::ShiftOutOfBox)?;
            out.masks[copy][target] = true;
        }
        Ok(out)
    }

    pub fn geometry_record(&self) -> GeometryRecord {
        let g = self.grid();
        GeometryRecord {
            n: g.n(),
            h: g.h(),
            half_width: g.half_width(),
            copies: g.copies(),
            masks_rle: self.to_rle(),
        }
    }
}

/// Serialised lattice geometry for run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryRecord {
    pub n: usize,
    pub h: f64,
    pub half_width: f64,
    pub copies: usize,
    pub masks_rle: Vec<Vec<u32>>,
}

impl GeometryRecord {
    pub fn to_indicator(&self) -> Result<MultiIndicator> {
        let grid = GridSpec::new(self.n, self.h, self.half_width, self.copies)?;
        MultiIndicator::from_rle(grid, &self.masks_rle)
    }
}

/// A real field on the lattice, zero off its support.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    support: MultiIndicator,
    values: Vec<Vec<f64>>,
}

impl LatticeField {
    pub fn zeros(support: MultiIndicator) -> Self {
        let g = support.grid();
        let values = vec![vec![0.0; g.cells_per_copy()]; g.copies()];
        Self { support, values }
    }

    pub fn new(support: MultiIndicator, values: Vec<Vec<f64>>) -> Result<Self> {
        let g = support.grid();
        if values.len() != g.copies() || values.iter().any(|v| v.len() != g.cells_per_copy()) {
            return Err(Error::InvalidArgument("value array shape does not match the grid".into()));
        }
        for (c, v) in values.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::InvalidArgument(format!("non-finite value at ({c}, {i})")));
                }
                if x != 0.0 && !support.contains(c, i) {
                    return Err(Error::SupportMismatch);
                }
            }
        }
        Ok(Self { support, values })
    }

    /// Samples `f(copy, x)` at the centres of the support cells.
    pub fn from_fn<F>(support: MultiIndicator, f: F) -> Self
    where
        F: Fn(usize, [f64; 2]) -> f64,
    {
        let g = support.grid();
        let mut field = Self::zeros(support);
        for (c, i) in field.support.cells() {
            field.values[c][i] = f(c, g.position(i));
        }
        field
    }

    pub fn grid(&self) -> GridSpec {
        self.support.grid()
    }

    pub fn support(&self) -> &MultiIndicator {
        &self.support
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, copy: usize, index: usize) -> f64 {
        self.values[copy][index]
    }

    /// Writes a value on a support cell.
    pub fn set(&mut self, copy: usize, index: usize, value: f64) -> Result<()> {
        if value != 0.0 && !self.support.contains(copy, index) {
            return Err(Error::SupportMismatch);
        }
        self.values[copy][index] = value;
        Ok(())
    }

    /// `(h^n Σ u²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.values.iter().flatten().map(|v| v * v).sum();
        (self.grid().cell_volume() * sum).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h^n Σ u`.
    pub fn integral(&self) -> f64 {
        self.grid().cell_volume() * self.values.iter().flatten().sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        Self { support: self.support.clone(), values }
    }

    pub fn abs(&self) -> Self {
        let values = self.values.iter().map(|v| v.iter().map(|x| x.abs()).collect()).collect();
        Self { support: self.support.clone(), values }
    }

    /// Same values viewed on a larger support.
    pub fn with_support(&self, support: MultiIndicator) -> Result<Self> {
        Self::new(support, self.values.clone())
    }

    /// The set where the field is nonzero.
    pub fn nonzero_set(&self) -> MultiIndicator {
        let masks = self.values.iter().map(|v| v.iter().map(|&x| x != 0.0).collect()).collect();
        MultiIndicator { grid: self.support.grid, masks }
    }
}

/// Sign of a field on one connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentSign {
    Positive,
    Negative,
    Zero,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub copy: usize,
    pub cells: Vec<usize>,
}

/// Face-adjacent connected components of a domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    /// `labels[copy][cell]`, `None` off the domain.
    pub labels: Vec<Vec<Option<usize>>>,
    pub components: Vec<Component>,
}

impl ComponentDecomposition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn signs(&self, field: &LatticeField) -> Vec<ComponentSign> {
        self.components
            .iter()
            .map(|comp| {
                let (mut pos, mut neg) = (false, false);
                for &i in &comp.cells {
                    let v = field.get(comp.copy, i);
                    pos |= v > 0.0;
                    neg |= v < 0.0;
                }
                match (pos, neg) {
                    (true, true) => ComponentSign::Mixed,
                    (true, false) => ComponentSign::Positive,
                    (false, true) => ComponentSign::Negative,
                    (false, false) => ComponentSign::Zero,
                }
            })
            .collect()
    }

    /// Component as its own indicator.
    pub fn indicator(&self, grid: GridSpec, component: usize) -> MultiIndicator {
        let comp = &self.components[component];
        let mut a = MultiIndicator::empty(grid);
        for &i in &comp.cells {
            a.masks[comp.copy][i] = true;
        }
        a
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Face-adjacent neighbours of a cell that lie inside the box.
pub fn face_neighbors(grid: &GridSpec, index: usize) -> impl Iterator<Item = usize> + '_ {
    let c = grid.coords(index);
    let n = grid.n();
    (0..n).flat_map(move |axis| {
        [-1i64, 1].into_iter().filter_map(move |d| {
            let mut q = c;
            q[axis] += d;
            grid.index(q)
        })
    })
}

/// Union-find labelling in row-major scan order; components never span copies.
pub fn connected_components(a: &MultiIndicator) -> ComponentDecomposition {
    let grid = a.grid();
    let mut labels = vec![vec![None; grid.cells_per_copy()]; grid.copies()];
    let mut components = Vec::new();
    for (copy, mask) in a.masks().iter().enumerate() {
        let cells = grid.cells_per_copy();
        let mut parent: Vec<usize> = (0..cells).collect();
        for idx in 0..cells {
            if !mask[idx] {
                continue;
            }
            // Earlier neighbours in the scan are the lower-index ones.
            for nb in face_neighbors(&grid, idx) {
                if nb < idx && mask[nb] {
                    let (ra, rb) = (find(&mut parent, idx), find(&mut parent, nb));
                    if ra != rb {
                        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                        parent[hi] = lo;
                    }
                }
            }
        }
        let mut root_label = std::collections::HashMap::new();
        for idx in 0..cells {
            if !mask[idx] {
                continue;
            }
            let root = find(&mut parent, idx);
            let label = *root_label.entry(root).or_insert_with(|| {
                components.push(Component { copy, cells: Vec::new() });
                components.len() - 1
            });
            labels[copy][idx] = Some(label);
            components[label].cells.push(idx);
        }
    }
    ComponentDecomposition { labels, components }
}

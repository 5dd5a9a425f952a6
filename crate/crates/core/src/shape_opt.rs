//! Annealing over lattice domains for `λ_k(A) + |A|`, the translation
//! sensitivity of the cross term between two parts, and free-boundary
//! diagnostics of an eigenfield.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gagliardo::{interaction_energy, KernelTable};
use crate::lattice::{
    connected_components, face_neighbors, ComponentSign, GridSpec, LatticeField, MultiIndicator,
};
use crate::spectral::{dirichlet_eigs_with, EigenSolver, SpectralResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    Flip,
    Translate,
    Relocate,
}

impl MoveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MoveKind::Flip => "flip",
            MoveKind::Translate => "translate",
            MoveKind::Relocate => "relocate",
        }
    }
}

/// A concrete move. The derived ordering is the lexicographic move encoding
/// used to break ties between equal-objective moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    /// Toggle a cell on the boundary of the domain.
    Flip { copy: usize, cell: usize },
    /// Shift a component by one cell along `axis` in direction `sign` (0 is -1).
    Translate { component: usize, axis: usize, sign: usize },
    /// Move a component to another copy.
    Relocate { component: usize, target: usize },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Flip { .. } => MoveKind::Flip,
            Move::Translate { .. } => MoveKind::Translate,
            Move::Relocate { .. } => MoveKind::Relocate,
        }
    }
}

/// Cells that can be toggled: domain cells with an outside face neighbour and
/// interior non-domain cells with a domain face neighbour.
pub fn flip_candidates(a: &MultiIndicator) -> Vec<(usize, usize)> {
    let grid = a.grid();
    let mut out = Vec::new();
    for copy in 0..grid.copies() {
        let mask = a.mask(copy);
        for cell in 0..grid.cells_per_copy() {
            if !grid.is_interior(cell) {
                continue;
            }
            let inside = mask[cell];
            if face_neighbors(&grid, cell).any(|nb| mask[nb] != inside) {
                out.push((copy, cell));
            }
        }
    }
    out
}

/// Applies a move; `None` if it is not admissible (leaves the box, overlaps,
/// or would drop below `min_cells`).
pub fn apply_move(a: &MultiIndicator, mv: Move, min_cells: usize) -> Option<MultiIndicator> {
    let grid = a.grid();
    match mv {
        Move::Flip { copy, cell } => {
            let mut b = a.clone();
            if a.contains(copy, cell) {
                if a.count() <= min_cells.max(1) {
                    return None;
                }
                b.remove(copy, cell);
            } else {
                b.insert(copy, cell).ok()?;
            }
            Some(b)
        }
        Move::Translate { component, axis, sign } => {
            let dec = connected_components(a);
            let comp = dec.components.get(component)?;
            let mut shift = [0i64; 2];
            shift[axis] = if sign == 0 { -1 } else { 1 };
            let mut b = a.clone();
            for &i in &comp.cells {
                b.remove(comp.copy, i);
            }
            let mut moved = Vec::with_capacity(comp.cells.len());
            for &i in &comp.cells {
                let c = grid.coords(i);
                let t = grid.index([c[0] + shift[0], c[1] + shift[1]])?;
                if !grid.is_interior(t) || b.contains(comp.copy, t) {
                    return None;
                }
                moved.push(t);
            }
            for t in moved {
                b.insert(comp.copy, t).ok()?;
            }
            Some(b)
        }
        Move::Relocate { component, target } => {
            let dec = connected_components(a);
            let comp = dec.components.get(component)?;
            if target == comp.copy || target >= grid.copies() {
                return None;
            }
            let mut b = a.clone();
            for &i in &comp.cells {
                b.remove(comp.copy, i);
            }
            let placed = place_in_copy(&b, target, &comp.cells)?;
            for t in placed {
                b.insert(target, t).ok()?;
            }
            Some(b)
        }
    }
}

/// Finds the translate of `cells` closest to the box centre that fits in the
/// interior of `copy` without touching (face or overlap) existing cells there.
fn place_in_copy(a: &MultiIndicator, copy: usize, cells: &[usize]) -> Option<Vec<usize>> {
    let grid = a.grid();
    let coords: Vec<[i64; 2]> = cells.iter().map(|&i| grid.coords(i)).collect();
    let n = grid.n();
    let mut lo = [i64::MAX; 2];
    let mut hi = [i64::MIN; 2];
    for c in &coords {
        for d in 0..n {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let mut centre = [0i64; 2];
    for d in 0..n {
        centre[d] = (lo[d] + hi[d]).div_euclid(2);
    }
    let m = grid.half_cells() as i64;
    let mut shifts: Vec<[i64; 2]> = Vec::new();
    for dx in -2 * m..=2 * m {
        if n == 1 {
            shifts.push([dx - centre[0], 0]);
        } else {
            for dy in -2 * m..=2 * m {
                shifts.push([dx - centre[0], dy - centre[1]]);
            }
        }
    }
    // Closest to the centre first; ties by the shift itself.
    shifts.sort_by_key(|s| ((s[0] + centre[0]).pow(2) + (s[1] + centre[1]).pow(2), *s));
    let mask = a.mask(copy);
    'shift: for s in shifts {
        let mut out = Vec::with_capacity(coords.len());
        for c in &coords {
            let t = match grid.index([c[0] + s[0], c[1] + s[1]]) {
                Some(t) if grid.is_interior(t) => t,
                _ => continue 'shift,
            };
            if mask[t] || face_neighbors(&grid, t).any(|nb| mask[nb]) {
                continue 'shift;
            }
            out.push(t);
        }
        return Some(out);
    }
    None
}

/// Annealing schedule. `t0 = None` means `0.1 ×` the initial objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub t0: Option<f64>,
    pub cooling: f64,
    pub steps: usize,
    pub seed: u64,
    /// Greedy best-improvement sweep over all flip and translate moves after
    /// annealing, ties broken by move encoding.
    pub polish: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { t0: None, cooling: 0.995, steps: 5000, seed: 0, polish: true }
    }
}

impl Schedule {
    fn validate(&self) -> Result<()> {
        if let Some(t0) = self.t0 {
            if !(t0 > 0.0) || !t0.is_finite() {
                return Err(Error::InvalidSchedule(format!("T0 = {t0} must be positive")));
            }
        }
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(Error::InvalidSchedule(format!("cooling = {} must lie in (0, 1)", self.cooling)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub temperature: f64,
    pub objective: f64,
    pub accepted: bool,
    pub move_kind: Option<MoveKind>,
}

/// Live annealing state.
#[derive(Debug, Clone)]
pub struct AnnealState {
    pub current: MultiIndicator,
    pub current_objective: f64,
    pub temperature: f64,
    pub step: usize,
    pub seed: u64,
    pub best: MultiIndicator,
    pub best_objective: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub best: MultiIndicator,
    pub best_objective: f64,
    pub spectrum: SpectralResult,
    pub trace: Vec<TraceRow>,
    /// Accepted moves per kind `[flip, translate, relocate]`.
    pub accepted: [usize; 3],
}

/// Objective evaluator holding the kernel table and `k`.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub table: &'a KernelTable,
    pub k: usize,
}

impl Objective<'_> {
    pub fn eval(&self, a: &MultiIndicator) -> Result<f64> {
        let spec = dirichlet_eigs_with(a, self.table, self.k, EigenSolver::Auto)?;
        Ok(spec.eigenvalues[self.k - 1] + a.volume())
    }
}

fn propose(a: &MultiIndicator, rng: &mut ChaCha8Rng) -> Option<Move> {
    let grid = a.grid();
    let roll: f64 = rng.gen();
    let multi_copy = grid.copies() > 1;
    if roll < 0.8 || (!multi_copy && roll < 0.9) {
        let cands = flip_candidates(a);
        if cands.is_empty() {
            return None;
        }
        let (copy, cell) = cands[rng.gen_range(0..cands.len())];
        Some(Move::Flip { copy, cell })
    } else {
        let comps = connected_components(a).len();
        if comps == 0 {
            return None;
        }
        let component = rng.gen_range(0..comps);
        if roll < 0.9 || !multi_copy {
            Some(Move::Translate {
                component,
                axis: rng.gen_range(0..grid.n()),
                sign: rng.gen_range(0..2),
            })
        } else {
            // Uniform over the other copies.
            let dec = connected_components(a);
            let from = dec.components[component].copy;
            let mut target = rng.gen_range(0..grid.copies() - 1);
            if target >= from {
                target += 1;
            }
            Some(Move::Relocate { component, target })
        }
    }
}

/// Simulated annealing with Metropolis acceptance; returns the best domain seen.
pub fn minimize(
    table: &KernelTable,
    k: usize,
    init: &MultiIndicator,
    schedule: &Schedule,
) -> Result<MinimizeResult> {
    schedule.validate()?;
    if init.grid() != table.grid() {
        return Err(Error::InvalidArgument("initial domain is on a different grid".into()));
    }
    if init.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if k == 0 || init.count() < k {
        return Err(Error::TooManyEigenpairs { requested: k, available: init.count() });
    }
    let objective = Objective { table, k };
    let f0 = objective.eval(init)?;
    let t0 = schedule.t0.unwrap_or(0.1 * f0.abs());
    if !(t0 > 0.0) {
        return Err(Error::InvalidSchedule(format!("derived T0 = {t0} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut state = AnnealState {
        current: init.clone(),
        current_objective: f0,
        temperature: t0,
        step: 0,
        seed: schedule.seed,
        best: init.clone(),
        best_objective: f0,
        trace: vec![TraceRow { step: 0, temperature: t0, objective: f0, accepted: true, move_kind: None }],
    };
    let mut accepted = [0usize; 3];
    for step in 1..=schedule.steps {
        state.step = step;
        let mv = propose(&state.current, &mut rng);
        // The uniform draw is consumed every step so the stream stays aligned.
        let u: f64 = rng.gen();
        let mut row = TraceRow {
            step,
            temperature: state.temperature,
            objective: state.current_objective,
            accepted: false,
            move_kind: mv.map(|m| m.kind()),
        };
        if let Some(candidate) = mv.and_then(|m| apply_move(&state.current, m, k)) {
            let f = objective.eval(&candidate)?;
            let delta = f - state.current_objective;
            if delta <= 0.0 || u < (-delta / state.temperature).exp() {
                state.current = candidate;
                state.current_objective = f;
                row.accepted = true;
                row.objective = f;
                accepted[mv.expect("candidate implies a move").kind() as usize] += 1;
                if f < state.best_objective {
                    state.best_objective = f;
                    state.best = state.current.clone();
                }
            }
        }
        state.trace.push(row);
        state.temperature *= schedule.cooling;
    }
    if schedule.polish {
        let (best, f) = polish(&objective, &state.best, state.best_objective)?;
        if f < state.best_objective {
            state.trace.push(TraceRow {
                step: schedule.steps + 1,
                temperature: 0.0,
                objective: f,
                accepted: true,
                move_kind: None,
            });
            state.best = best;
            state.best_objective = f;
        }
    }
    let spectrum = dirichlet_eigs_with(&state.best, table, k, EigenSolver::Auto)?;
    Ok(MinimizeResult {
        best: state.best,
        best_objective: state.best_objective,
        spectrum,
        trace: state.trace,
        accepted,
    })
}

/// Best-improvement descent over all flip and translate moves.
fn polish(objective: &Objective<'_>, start: &MultiIndicator, f_start: f64) -> Result<(MultiIndicator, f64)> {
    let mut current = start.clone();
    let mut f_current = f_start;
    let grid = start.grid();
    loop {
        let mut moves: Vec<Move> = flip_candidates(&current)
            .into_iter()
            .map(|(copy, cell)| Move::Flip { copy, cell })
            .collect();
        let comps = connected_components(&current).len();
        for component in 0..comps {
            for axis in 0..grid.n() {
                for sign in 0..2 {
                    moves.push(Move::Translate { component, axis, sign });
                }
            }
        }
        moves.sort();
        let evaluated: Vec<Option<(f64, Move, MultiIndicator)>> = moves
            .par_iter()
            .map(|&mv| {
                let cand = apply_move(&current, mv, objective.k)?;
                objective.eval(&cand).ok().map(|f| (f, mv, cand))
            })
            .collect();
        let best = evaluated
            .into_iter()
            .flatten()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match best {
            Some((f, _, cand)) if f < f_current * (1.0 - 1e-12) => {
                current = cand;
                f_current = f;
            }
            _ => return Ok((current, f_current)),
        }
    }
}

/// Independent annealing runs with per-start seeds split from `master_seed`.
pub fn multistart(
    table: &KernelTable,
    k: usize,
    inits: &[MultiIndicator],
    schedule: &Schedule,
    master_seed: u64,
) -> Result<Vec<MinimizeResult>> {
    inits
        .par_iter()
        .enumerate()
        .map(|(i, init)| {
            let sched = Schedule { seed: stream_seed(master_seed, i as u64), ..*schedule };
            minimize(table, k, init, &sched)
        })
        .collect()
}

/// Counter-based seed split: word 0 of ChaCha8 stream `index` under key `master`.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// `cells` distinct interior cells of `copy` drawn uniformly from the centred
/// ball holding twice as many cells: a scattered blob.
pub fn random_blob(grid: &GridSpec, copy: usize, cells: usize, seed: u64) -> Result<MultiIndicator> {
    let order = crate::rearrange::center_outward_order(grid);
    let pool = (2 * cells).min(order.len());
    if cells == 0 || cells > pool {
        return Err(Error::InvalidArgument(format!("cannot draw {cells} cells from {pool}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, pool, cells);
    let mut a = MultiIndicator::empty(*grid);
    for p in picks.iter() {
        a.insert(copy, order[p])?;
    }
    Ok(a)
}

/// Moves the part of `u` on `part` by `shift` cells; returns the new field on
/// `rest ∪ shifted part` together with the shifted part.
pub fn shift_part(
    u: &LatticeField,
    rest: &MultiIndicator,
    part: &MultiIndicator,
    shift: [i64; 2],
) -> Result<(LatticeField, MultiIndicator)> {
    let grid = u.grid();
    let mut moved = MultiIndicator::empty(grid);
    let mut values = vec![vec![0.0; grid.cells_per_copy()]; grid.copies()];
    for (c, i) in rest.cells() {
        values[c][i] = u.get(c, i);
    }
    for (c, i) in part.cells() {
        let x = grid.coords(i);
        let t = grid
            .index([x[0] + shift[0], x[1] + shift[1]])
            .filter(|&t| grid.is_interior(t))
            .ok_or(Error::ShiftOutOfBox)?;
        if rest.contains(c, t) {
            return Err(Error::Overlap(t));
        }
        moved.insert(c, t)?;
        values[c][t] = u.get(c, i);
    }
    let field = LatticeField::new(rest.union(&moved), values)?;
    Ok((field, moved))
}

/// Central difference of the cross term under shifting `a2` along a lattice
/// unit vector, per unit length. A positive value means moving `a2` along
/// `direction` raises the cross term.
pub fn translation_gradient(
    table: &KernelTable,
    u: &LatticeField,
    a1: &MultiIndicator,
    a2: &MultiIndicator,
    direction: [i64; 2],
) -> Result<f64> {
    let unit = direction.iter().map(|d| d.abs()).sum::<i64>() == 1;
    if !unit {
        return Err(Error::InvalidArgument(format!("{direction:?} is not a lattice unit vector")));
    }
    let neg = [-direction[0], -direction[1]];
    let (fp, ap) = shift_part(u, a1, a2, direction)?;
    let (fm, am) = shift_part(u, a1, a2, neg)?;
    let ep = interaction_energy(table, &fp, a1, &ap)?;
    let em = interaction_energy(table, &fm, a1, &am)?;
    Ok((ep - em) / (2.0 * table.grid().h()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticStatus {
    Ok,
    /// `λ_k` is numerically multiple; the eigenfield is not well defined.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusStats {
    pub radius: f64,
    /// `min_x sup_{B_r(x)} |u| / r^s` over free-boundary cells.
    pub nondegeneracy_min: f64,
    /// `min_x |{u > 0} ∩ B_r(x)| / r^n`.
    pub positive_density_min: f64,
    /// `min_x |{u < 0} ∩ B_r(x)| / r^n`.
    pub negative_density_min: f64,
    /// `min_x |{u = 0} ∩ B_r(x)| / r^n`.
    pub zero_density_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub status: DiagnosticStatus,
    pub component_signs: Vec<ComponentSign>,
    /// Face-adjacent pairs with `u > 0` on one side and `u < 0` on the other.
    pub adjacency_violations: usize,
    pub boundary_cells: usize,
    pub radii: Vec<RadiusStats>,
    /// Smallest nondegeneracy ratio over all radii: the fitted `c_0`.
    pub fitted_c0: f64,
    pub multiplicity_flag: bool,
}

/// Free-boundary diagnostics of `u` on `a`; radii in length units.
pub fn diagnostics(
    a: &MultiIndicator,
    u: &LatticeField,
    s: f64,
    radii: &[f64],
    multiplicity_flag: bool,
) -> Result<DiagnosticsReport> {
    let grid = a.grid();
    if u.grid() != grid {
        return Err(Error::SupportMismatch);
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidArgument("radii must be positive".into()));
    }
    let dec = connected_components(a);
    let component_signs = dec.signs(u);
    let mut adjacency_violations = 0;
    let mut boundary = Vec::new();
    for (copy, cell) in a.cells() {
        let v = u.get(copy, cell);
        let mut on_boundary = false;
        for nb in face_neighbors(&grid, cell) {
            let w = u.get(copy, nb);
            if nb > cell && v * w < 0.0 {
                adjacency_violations += 1;
            }
            on_boundary |= !a.contains(copy, nb);
        }
        if on_boundary {
            boundary.push((copy, cell));
        }
    }
    let h = grid.h();
    let n = grid.n() as i32;
    let mut stats = Vec::with_capacity(radii.len());
    for &r in radii {
        let reach = (r / h).floor() as i64;
        let mut st = RadiusStats {
            radius: r,
            nondegeneracy_min: f64::INFINITY,
            positive_density_min: f64::INFINITY,
            negative_density_min: f64::INFINITY,
            zero_density_min: f64::INFINITY,
        };
        for &(copy, cell) in &boundary {
            let c = grid.coords(cell);
            let (mut sup, mut pos, mut neg, mut zero) = (0.0f64, 0usize, 0usize, 0usize);
            let ys = if n == 2 { -reach..=reach } else { 0..=0 };
            for dx in -reach..=reach {
                for dy in ys.clone() {
                    if ((dx * dx + dy * dy) as f64) * h * h > r * r {
                        continue;
                    }
                    if let Some(q) = grid.index([c[0] + dx, c[1] + dy]) {
                        let v = u.get(copy, q);
                        sup = sup.max(v.abs());
                        if v > 0.0 {
                            pos += 1;
                        } else if v < 0.0 {
                            neg += 1;
                        } else {
                            zero += 1;
                        }
                    }
                }
            }
            let scale = grid.cell_volume() / r.powi(n);
            st.nondegeneracy_min = st.nondegeneracy_min.min(sup / r.powf(s));
            st.positive_density_min = st.positive_density_min.min(pos as f64 * scale);
            st.negative_density_min = st.negative_density_min.min(neg as f64 * scale);
            st.zero_density_min = st.zero_density_min.min(zero as f64 * scale);
        }
        stats.push(st);
    }
    let fitted_c0 = stats.iter().map(|s| s.nondegeneracy_min).fold(f64::INFINITY, f64::min);
    Ok(DiagnosticsReport {
        status: if multiplicity_flag { DiagnosticStatus::Inconclusive } else { DiagnosticStatus::Ok },
        component_signs,
        adjacency_violations,
        boundary_cells: boundary.len(),
        radii: stats,
        fitted_c0,
        multiplicity_flag,
    })
}

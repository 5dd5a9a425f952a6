//! Dirichlet eigenpairs, torsion, γ-distance and the objective `λ_k(A) + |A|`.
//!
//! The discrete eigenproblem is `S v = λ h^n v` with `S` the stiffness matrix of
//! the Gagliardo form on the active cells. Eigenvalues are in bare Gagliardo
//! units; eigenfields are normalised so that `h^n Σ u² = 1`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gagliardo::{assemble_with_table, FormMatrix, KernelTable};
use crate::lattice::{KernelParams, LatticeField, MultiIndicator};

/// Above this many active cells the dense solver gives way to shift-invert.
pub const DENSE_LIMIT: usize = 4000;

/// Relative gap below which consecutive eigenvalues count as one multiple value.
pub const MULTIPLICITY_TOL: f64 = 1e-6;

const RESIDUAL_TOL: f64 = 1e-8;
const TORSION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense up to [`DENSE_LIMIT`] cells, shift-invert beyond.
    #[default]
    Auto,
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    pub eigenfields: Vec<LatticeField>,
    /// `‖S v - λ h^n v‖ / h^n` for Euclidean-unit `v`.
    pub residuals: Vec<f64>,
    /// `λ_{j+1} - λ_j`.
    pub multiplicity_gaps: Vec<f64>,
}

impl SpectralResult {
    /// Whether eigenvalue `j` (0-based) sits within [`MULTIPLICITY_TOL`] of a
    /// computed neighbour.
    pub fn numerically_multiple(&self, j: usize) -> bool {
        let lam = self.eigenvalues[j];
        let tight = |gap: f64| gap < MULTIPLICITY_TOL * lam;
        (j > 0 && tight(self.multiplicity_gaps[j - 1]))
            || (j + 1 < self.eigenvalues.len() && tight(self.multiplicity_gaps[j]))
    }

    pub fn record(&self) -> SpectralRecord {
        SpectralRecord {
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
            multiplicity_gaps: self.multiplicity_gaps.clone(),
            numerically_multiple: (0..self.eigenvalues.len())
                .map(|j| self.numerically_multiple(j))
                .collect(),
        }
    }
}

/// JSON-facing summary of a spectral solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralRecord {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub multiplicity_gaps: Vec<f64>,
    pub numerically_multiple: Vec<bool>,
}

pub fn dirichlet_eigs(a: &MultiIndicator, kp: &KernelParams, count: usize) -> Result<SpectralResult> {
    let table = KernelTable::new(a.grid(), *kp)?;
    dirichlet_eigs_with(a, &table, count, EigenSolver::Auto)
}

pub fn dirichlet_eigs_with(
    a: &MultiIndicator,
    table: &KernelTable,
    count: usize,
    solver: EigenSolver,
) -> Result<SpectralResult> {
    let form = assemble_with_table(a, table)?;
    eigs_of_form(&form, count, solver)
}

pub fn eigs_of_form(form: &FormMatrix, count: usize, solver: EigenSolver) -> Result<SpectralResult> {
    if count == 0 {
        return Err(Error::InvalidArgument("eigenpair count must be positive".into()));
    }
    if count > form.len() {
        return Err(Error::TooManyEigenpairs { requested: count, available: form.len() });
    }
    let hn = form.grid().cell_volume();
    let op = form.stiffness() / hn;
    let dense = match solver {
        EigenSolver::Auto => form.len() <= DENSE_LIMIT,
        EigenSolver::Dense => true,
        EigenSolver::ShiftInvert => false,
    };
    let (values, vectors) = if dense {
        dense_lowest(&op, count)
    } else {
        shift_invert_lowest(&op, count)?
    };
    let mut eigenfields = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for (j, mut v) in vectors.into_iter().enumerate() {
        let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        residuals.push((&op * &v - &v * values[j]).norm());
        eigenfields.push(form.field_of(&(&v / hn.sqrt())));
    }
    let multiplicity_gaps = values.windows(2).map(|w| w[1] - w[0]).collect();
    if values[0] <= 0.0 {
        return Err(Error::Numerical(format!("non-positive first eigenvalue {}", values[0])));
    }
    Ok(SpectralResult { eigenvalues: values, eigenfields, residuals, multiplicity_gaps })
}

fn dense_lowest(op: &DMatrix<f64>, count: usize) -> (Vec<f64>, Vec<DVector<f64>>) {
    let eig = SymmetricEigen::new(op.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .take(count)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .unzip()
}

/// Block inverse iteration with Rayleigh-Ritz (shift 0; the operator is
/// positive definite), using one Cholesky factorisation.
fn shift_invert_lowest(op: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let n = op.nrows();
    let block = (2 * count).max(count + 4).min(n);
    let chol = op
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("operator is not positive definite".into()))?;
    // Deterministic start: low-frequency cosine modes over the active-cell order.
    let mut x = DMatrix::from_fn(n, block, |i, j| {
        ((j as f64 + 1.0) * std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos() + 1e-3 * ((i * 7 + j * 13) % 11) as f64
    });
    for _ in 0..500 {
        let y = chol.solve(&x);
        let q = y.qr().q();
        let small = q.transpose() * op * &q;
        let eig = SymmetricEigen::new(small);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vecs = DMatrix::from_fn(block, block, |i, j| eig.eigenvectors[(i, order[j])]);
        x = &q * vecs;
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let converged = (0..count).all(|j| {
            let v = x.column(j);
            (op * v - v * values[j]).norm() <= RESIDUAL_TOL * values[j]
        });
        if converged {
            let vectors = (0..count).map(|j| x.column(j).into_owned()).collect();
            return Ok((values[..count].to_vec(), vectors));
        }
    }
    Err(Error::Numerical("shift-invert iteration did not converge".into()))
}

/// `λ_k(A) + |A|` with `k` 1-based.
pub fn objective(a: &MultiIndicator, kp: &KernelParams, k: usize) -> Result<f64> {
    let table = KernelTable::new(a.grid(), *kp)?;
    objective_with(a, &table, k)
}

pub fn objective_with(a: &MultiIndicator, table: &KernelTable, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k is 1-based".into()));
    }
    let spec = dirichlet_eigs_with(a, table, k, EigenSolver::Auto)?;
    Ok(spec.eigenvalues[k - 1] + a.volume())
}

#[derive(Debug, Clone)]
pub struct TorsionResult {
    pub field: LatticeField,
    /// `½ B[u, u] - h^n Σ u` at the discrete minimiser.
    pub energy: f64,
    pub iterations: usize,
}

pub fn torsion_solve(a: &MultiIndicator, kp: &KernelParams) -> Result<TorsionResult> {
    let table = KernelTable::new(a.grid(), *kp)?;
    torsion_solve_with(a, &table)
}

pub fn torsion_solve_with(a: &MultiIndicator, table: &KernelTable) -> Result<TorsionResult> {
    let form = assemble_with_table(a, table)?;
    torsion_of_form(&form)
}

pub fn torsion_of_form(form: &FormMatrix) -> Result<TorsionResult> {
    let hn = form.grid().cell_volume();
    let s = form.stiffness();
    let rhs = DVector::from_element(form.len(), hn);
    let (u, iterations) = conjugate_gradient(&s, &rhs, TORSION_TOL)?;
    let energy = 0.5 * u.dot(&(&s * &u)) - hn * u.sum();
    Ok(TorsionResult { field: form.field_of(&u), energy, iterations })
}

/// Plain CG from a zero start; stops at `‖r‖ ≤ tol ‖b‖`.
pub fn conjugate_gradient(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol: f64,
) -> Result<(DVector<f64>, usize)> {
    let n = b.len();
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let target = tol * b.norm();
    for it in 0..10 * n + 100 {
        if rr.sqrt() <= target {
            return Ok((x, it));
        }
        let ap = a * &p;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical("torsion system is not positive definite".into()));
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.dot(&r);
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    Err(Error::Numerical("conjugate gradient did not converge".into()))
}

/// `h^n Σ |u_A - u_B|` over the lattice, both torsion fields extended by zero.
pub fn gamma_distance(a: &MultiIndicator, b: &MultiIndicator, kp: &KernelParams) -> Result<f64> {
    let table = KernelTable::new(a.grid(), *kp)?;
    gamma_distance_with(a, b, &table)
}

pub fn gamma_distance_with(a: &MultiIndicator, b: &MultiIndicator, table: &KernelTable) -> Result<f64> {
    let ua = torsion_solve_with(a, table)?.field;
    let ub = torsion_solve_with(b, table)?.field;
    Ok(field_l1_distance(&ua, &ub))
}

pub(crate) fn field_l1_distance(u: &LatticeField, v: &LatticeField) -> f64 {
    let sum: f64 = u
        .values()
        .iter()
        .flatten()
        .zip(v.values().iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .sum();
    u.grid().cell_volume() * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::GridSpec;

    fn interval(h: f64, l: f64, r: f64) -> MultiIndicator {
        let g = GridSpec::new(1, h, l, 1).unwrap();
        MultiIndicator::ball(g, 0, [0.0, 0.0], r).unwrap()
    }

    #[test]
    fn errors() {
        let kp = KernelParams::new(1, 0.5).unwrap();
        let g = GridSpec::new(1, 0.25, 2.0, 1).unwrap();
        assert_eq!(dirichlet_eigs(&MultiIndicator::empty(g), &kp, 1).unwrap_err(), Error::EmptyDomain);
        assert_eq!(objective(&MultiIndicator::empty(g), &kp, 1).unwrap_err(), Error::EmptyDomain);
        let a = interval(0.25, 2.0, 0.3);
        assert!(matches!(dirichlet_eigs(&a, &kp, 5), Err(Error::TooManyEigenpairs { .. })));
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residuals() {
        let kp = KernelParams::new(1, 0.4).unwrap();
        let a = interval(1.0 / 16.0, 2.0, 1.0);
        let spec = dirichlet_eigs(&a, &kp, 5).unwrap();
        let hn = a.grid().cell_volume();
        for (i, u) in spec.eigenfields.iter().enumerate() {
            for (j, v) in spec.eigenfields.iter().enumerate() {
                let ip: f64 = hn * u.values()[0].iter().zip(&v.values()[0]).map(|(a, b)| a * b).sum::<f64>();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10);
            }
            assert!(spec.residuals[i] <= 1e-8 * spec.eigenvalues[i]);
        }
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        // Perron: first eigenfield strictly positive on a connected domain.
        assert!(a.cells().iter().all(|&(c, i)| spec.eigenfields[0].get(c, i) > 0.0));
    }

    #[test]
    fn shift_invert_agrees_with_dense() {
        let kp = KernelParams::new(1, 0.6).unwrap();
        let a = interval(1.0 / 32.0, 2.0, 1.0);
        let table = KernelTable::new(a.grid(), kp).unwrap();
        let d = dirichlet_eigs_with(&a, &table, 3, EigenSolver::Dense).unwrap();
        let s = dirichlet_eigs_with(&a, &table, 3, EigenSolver::ShiftInvert).unwrap();
        for j in 0..3 {
            assert!((d.eigenvalues[j] - s.eigenvalues[j]).abs() < 1e-9 * d.eigenvalues[j]);
            assert!(s.residuals[j] <= 1e-8 * s.eigenvalues[j]);
        }
    }

    #[test]
    fn torsion_is_nonnegative_and_energy_consistent() {
        let kp = KernelParams::new(1, 0.3).unwrap();
        let a = interval(1.0 / 16.0, 2.0, 0.8);
        let t = torsion_solve(&a, &kp).unwrap();
        assert!(t.field.values()[0].iter().all(|&v| v >= 0.0));
        assert!(t.energy < 0.0);
        assert!((t.energy + 0.5 * t.field.integral()).abs() < 1e-8 * t.energy.abs());
    }

    #[test]
    fn gamma_distance_basic() {
        let kp = KernelParams::new(1, 0.5).unwrap();
        let a = interval(1.0 / 16.0, 2.0, 0.8);
        let b = interval(1.0 / 16.0, 2.0, 0.5);
        assert_eq!(gamma_distance(&a, &a, &kp).unwrap(), 0.0);
        let (dab, dba) = (gamma_distance(&a, &b, &kp).unwrap(), gamma_distance(&b, &a, &kp).unwrap());
        assert_eq!(dab, dba);
        let ua = torsion_solve(&a, &kp).unwrap().field;
        let ub = torsion_solve(&b, &kp).unwrap().field;
        assert!(ua.values()[0].iter().zip(&ub.values()[0]).all(|(x, y)| x >= y));
        assert!((dab - (ua.integral() - ub.integral())).abs() < 1e-12);
    }

    #[test]
    fn multiplicity_flag_for_identical_copies() {
        let kp = KernelParams::new(1, 0.5).unwrap();
        let g = GridSpec::new(1, 0.125, 1.0, 2).unwrap();
        let a = MultiIndicator::ball(g, 0, [0.0, 0.0], 0.5)
            .unwrap()
            .union(&MultiIndicator::ball(g, 1, [0.0, 0.0], 0.5).unwrap());
        let spec = dirichlet_eigs(&a, &kp, 3).unwrap();
        assert!(spec.numerically_multiple(0));
        assert!(spec.numerically_multiple(1));
        assert!(!spec.numerically_multiple(2));
    }
}

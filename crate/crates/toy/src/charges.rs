use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Signed charges `m_i` at points `x_i ∈ R^n` with pair energy `-4 m_i m_j |x_i - x_j|^{-p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeConfig {
    n: usize,
    p: f64,
    /// Flat coordinates, point `i` at `positions[i * n .. (i + 1) * n]`.
    positions: Vec<f64>,
    masses: Vec<f64>,
}

const MASS_TOL: f64 = 1e-9;

impl ChargeConfig {
    /// Exponent `p = n + 2s`.
    pub fn new(n: usize, s: f64, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 1)")));
        }
        Self::with_exponent(n, n as f64 + 2.0 * s, positions, masses)
    }

    pub fn with_exponent(n: usize, p: f64, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent p = {p} must be positive")));
        }
        if masses.is_empty() || positions.len() != n * masses.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not match {} points in R^{n}",
                positions.len(),
                masses.len()
            )));
        }
        if positions.iter().chain(&masses).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate or mass".into()));
        }
        let norm: f64 = masses.iter().map(|m| m * m).sum();
        if (norm - 1.0).abs() > MASS_TOL {
            return Err(Error::MassNormalization(norm));
        }
        let c = Self { n, p, positions, masses };
        c.check_distinct()?;
        Ok(c)
    }

    /// Rescales `masses` onto the unit sphere first.
    pub fn normalized(n: usize, s: f64, positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let norm = masses.iter().map(|m| m * m).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::MassNormalization(0.0));
        }
        Self::new(n, s, positions, masses.iter().map(|m| m / norm).collect())
    }

    fn check_distinct(&self) -> Result<()> {
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if self.distance(i, j) == 0.0 {
                    return Err(Error::CoincidentPoints(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Number of charges `d`.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.positions[i * self.n..(i + 1) * self.n]
    }

    /// Same charges at new positions.
    pub fn moved(&self, positions: Vec<f64>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::InvalidParameter("position vector has the wrong length".into()));
        }
        let c = Self { positions, ..self.clone() };
        c.check_distinct()?;
        Ok(c)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i).iter().zip(self.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.min(self.distance(i, j));
            }
        }
        best
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(self.distance(i, j));
            }
        }
        best
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for i in 0..self.len() {
            for (k, x) in self.point(i).iter().enumerate() {
                c[k] += x;
            }
        }
        c.iter().map(|v| v / self.len() as f64).collect()
    }

    fn diff(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(i).iter().zip(self.point(j)).map(|(a, b)| a - b).collect()
    }
}

/// `E = Σ_{i≠j} -2 m_i m_j |x_i - x_j|^{-p}` over ordered pairs.
pub fn energy(c: &ChargeConfig) -> f64 {
    let mut e = 0.0;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            e += -4.0 * c.masses[i] * c.masses[j] * c.distance(i, j).powf(-c.p);
        }
    }
    e
}

/// `∂E/∂x_i = Σ_{j≠i} 4p m_i m_j (x_i - x_j) |x_i - x_j|^{-p-2}`, flat like the positions.
pub fn gradient(c: &ChargeConfig) -> Vec<f64> {
    let n = c.n;
    let mut g = vec![0.0; c.positions.len()];
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let z = c.diff(i, j);
            let f = 4.0 * c.p * c.masses[i] * c.masses[j] * c.distance(i, j).powf(-c.p - 2.0);
            for k in 0..n {
                g[i * n + k] += f * z[k];
                g[j * n + k] -= f * z[k];
            }
        }
    }
    g
}

/// Hessian of `φ(z) = k |z|^{-p}`: `-k p (|z|^{-p-2} I - (p+2) z zᵀ |z|^{-p-4})`.
pub fn pair_hessian(k: f64, p: f64, z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    let r2: f64 = z.iter().map(|v| v * v).sum();
    let r = r2.sqrt();
    let a = -k * p * r.powf(-p - 2.0);
    let b = k * p * (p + 2.0) * r.powf(-p - 4.0);
    DMatrix::from_fn(n, n, |u, v| if u == v { a } else { 0.0 } + b * z[u] * z[v])
}

/// `Δ |z|^{-p} = p (p + 2 - n) |z|^{-p-2}`; zero exactly when `p = n - 2`.
pub fn pair_trace(n: usize, p: f64, r: f64) -> f64 {
    p * (p + 2.0 - n as f64) * r.powf(-p - 2.0)
}

/// Full `nd × nd` Hessian of `E` in the flat position ordering.
pub fn hessian(c: &ChargeConfig) -> DMatrix<f64> {
    let n = c.n;
    let dim = c.positions.len();
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let block = pair_hessian(-4.0 * c.masses[i] * c.masses[j], c.p, &c.diff(i, j));
            for u in 0..n {
                for v in 0..n {
                    let b = block[(u, v)];
                    h[(i * n + u, i * n + v)] += b;
                    h[(j * n + u, j * n + v)] += b;
                    h[(i * n + u, j * n + v)] -= b;
                    h[(j * n + u, i * n + v)] -= b;
                }
            }
        }
    }
    h
}

/// `⟨∇E, x - centroid⟩ + pE`, zero by homogeneity.
pub fn euler_residual(c: &ChargeConfig) -> f64 {
    let g = gradient(c);
    let centroid = c.centroid();
    let mut dot = 0.0;
    for i in 0..c.len() {
        for k in 0..c.n {
            dot += g[i * c.n + k] * (c.positions[i * c.n + k] - centroid[k]);
        }
    }
    dot + c.p * energy(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(sign: f64) -> ChargeConfig {
        let m = std::f64::consts::FRAC_1_SQRT_2;
        ChargeConfig::new(1, 0.5, vec![0.0, 1.0], vec![m, sign * m]).unwrap()
    }

    #[test]
    fn single_charge_has_zero_energy() {
        let c = ChargeConfig::new(2, 0.3, vec![0.2, 0.4], vec![-1.0]).unwrap();
        assert_eq!(energy(&c), 0.0);
    }

    #[test]
    fn two_charge_values() {
        assert!((energy(&pair(1.0)) + 2.0).abs() < 1e-15);
        assert!((energy(&pair(-1.0)) - 2.0).abs() < 1e-15);
        let g = gradient(&pair(1.0));
        assert!((g[0] + 4.0).abs() < 1e-14 && (g[1] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ChargeConfig::new(1, 0.5, vec![0.0, 0.0], vec![0.6, 0.8]),
            Err(Error::CoincidentPoints(0, 1))
        ));
        assert!(matches!(
            ChargeConfig::new(1, 0.5, vec![0.0, 1.0], vec![1.0, 1.0]),
            Err(Error::MassNormalization(_))
        ));
        assert!(ChargeConfig::new(1, 1.5, vec![0.0], vec![1.0]).is_err());
    }
}

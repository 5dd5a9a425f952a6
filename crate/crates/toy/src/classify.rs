use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::charges::{energy, euler_residual, gradient, hessian, ChargeConfig};

/// Thresholds on the scale-free quantities `|∇E| D^{p+1}` and `λ_min D^{p+2}`,
/// `D` the diameter of the configuration.
pub const GRADIENT_TOL: f64 = 1e-9;
pub const STABLE_EIG_TOL: f64 = 1e-8;
pub const COLLAPSE_DISTANCE: f64 = 1e-6;
pub const ESCAPE_DIAMETER: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    StationaryStable,
    StationaryUnstable,
    NonStationary,
    CollapseDiverged,
    EscapeDiverged,
}

impl Classification {
    pub const ALL: [Classification; 5] = [
        Classification::StationaryStable,
        Classification::StationaryUnstable,
        Classification::NonStationary,
        Classification::CollapseDiverged,
        Classification::EscapeDiverged,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::StationaryStable => "stationary-stable",
            Classification::StationaryUnstable => "stationary-unstable",
            Classification::NonStationary => "non-stationary",
            Classification::CollapseDiverged => "collapse-diverged",
            Classification::EscapeDiverged => "escape-diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub energy: f64,
    /// `|∇E|` with rigid translations projected out.
    pub gradient_norm: f64,
    /// Smallest Hessian eigenvalue on the complement of the translations;
    /// `None` when that complement is trivial (one charge).
    pub hessian_min_eig: Option<f64>,
    pub euler_residual: f64,
    pub diameter: f64,
    pub min_distance: f64,
    pub scaled_gradient: f64,
    pub scaled_min_eig: Option<f64>,
    /// Stationary with no negative direction beyond `-1e-8` (scaled): the
    /// scaling mode is null at every stationary point, so strict stability
    /// cannot hold there and this records the borderline case.
    pub weakly_stable: bool,
    pub classification: Classification,
}

fn translation_projected(c: &ChargeConfig, g: &[f64]) -> Vec<f64> {
    let n = c.n();
    let d = c.len() as f64;
    let mut mean = vec![0.0; n];
    for (k, v) in g.iter().enumerate() {
        mean[k % n] += v / d;
    }
    g.iter().enumerate().map(|(k, v)| v - mean[k % n]).collect()
}

/// Smallest eigenvalue of `H` restricted to the orthogonal complement of the
/// `n` rigid translations.
pub fn min_eig_off_translations(c: &ChargeConfig, h: &DMatrix<f64>) -> Option<f64> {
    let n = c.n();
    let d = c.len();
    if d < 2 {
        return None;
    }
    let dim = n * d;
    let mut proj = DMatrix::<f64>::identity(dim, dim);
    for k in 0..n {
        for i in 0..d {
            for j in 0..d {
                proj[(i * n + k, j * n + k)] -= 1.0 / d as f64;
            }
        }
    }
    let shift = h.norm() + 1.0;
    let restricted = &proj * h * &proj + (DMatrix::identity(dim, dim) - &proj) * shift;
    let eig = SymmetricEigen::new(restricted);
    Some(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn classify(c: &ChargeConfig) -> StationarityReport {
    let e = energy(c);
    let g = translation_projected(c, &gradient(c));
    let gradient_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hessian_min_eig = min_eig_off_translations(c, &hessian(c));
    let diameter = c.diameter();
    let min_distance = c.min_distance();
    let p = c.p();
    let scaled_gradient = if c.len() < 2 { 0.0 } else { gradient_norm * diameter.powf(p + 1.0) };
    let scaled_min_eig = hessian_min_eig.map(|l| l * diameter.powf(p + 2.0));
    let stationary = scaled_gradient < GRADIENT_TOL;
    let weakly_stable = stationary && scaled_min_eig.map_or(true, |l| l >= -STABLE_EIG_TOL);
    let classification = if c.len() >= 2 && min_distance < COLLAPSE_DISTANCE {
        Classification::CollapseDiverged
    } else if diameter > ESCAPE_DIAMETER {
        Classification::EscapeDiverged
    } else if !stationary {
        Classification::NonStationary
    } else if scaled_min_eig.map_or(true, |l| l > STABLE_EIG_TOL) {
        Classification::StationaryStable
    } else {
        Classification::StationaryUnstable
    };
    StationarityReport {
        energy: e,
        gradient_norm,
        hessian_min_eig,
        euler_residual: euler_residual(c),
        diameter,
        min_distance,
        scaled_gradient,
        scaled_min_eig,
        weakly_stable,
        classification,
    }
}

/// Masses `∝ (1, -2^{-p-1}, 1)` at `-1, 0, 1` on a line: each outer charge
/// feels no net force.
pub fn collinear_stationary(n: usize, s: f64) -> crate::Result<ChargeConfig> {
    let p = n as f64 + 2.0 * s;
    let mut positions = vec![0.0; 3 * n];
    positions[0] = -1.0;
    positions[2 * n] = 1.0;
    ChargeConfig::normalized(n, s, positions, vec![1.0, -(2f64.powf(-p - 1.0)), 1.0])
}

//! Deterministic linear SVM solver.
//!
//! Dual coordinate descent on the L2-regularized hinge-loss problem
//! (liblinear's L1-loss dual). The bias is learned as an extra
//! always-one feature. Coordinate order is reshuffled each epoch with a
//! seeded generator, so retraining with the same seed and data order
//! reproduces identical weights bit for bit.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Hinge-loss penalty C.
    pub c: f64,
    /// Seed for the per-epoch coordinate shuffle.
    pub seed: u64,
    /// Hard cap on passes over the data.
    pub max_epochs: usize,
    /// Convergence threshold on the largest projected-gradient violation.
    pub tolerance: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            seed: 1,
            max_epochs: 1000,
            tolerance: 1e-6,
        }
    }
}

/// Hyperplane returned by [`solve`]: `score(x) = <weights, x> + bias`.
#[derive(Debug, Clone)]
pub struct Hyperplane {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
}

impl Hyperplane {
    #[inline]
    pub fn score(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.weights.len());
        dot(&self.weights, x) + self.bias
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on dense rows; `labels[i]` must be +1 or -1.
pub fn solve(rows: &[&[f64]], labels: &[i8], cfg: &SvmConfig) -> Result<Hyperplane> {
    assert_eq!(rows.len(), labels.len());
    assert!(labels.iter().all(|&l| l == 1 || l == -1));
    let n = rows.len();
    if !labels.contains(&1) || !labels.contains(&-1) {
        return Err(Error::DegenerateData);
    }
    let dim = rows[0].len();
    assert!(rows.iter().all(|r| r.len() == dim));

    // Q_ii = ||x_i||^2 plus 1.0 for the implicit bias feature.
    let q_diag: Vec<f64> = rows.iter().map(|r| dot(r, r) + 1.0).collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs_run = 0;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &i in &order {
            let x = rows[i];
            let y = f64::from(labels[i]);
            let g = y * (dot(&w, x) + b) - 1.0;

            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= cfg.c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() <= 1e-12 {
                continue;
            }

            let new_alpha = (alpha[i] - g / q_diag[i]).clamp(0.0, cfg.c);
            let delta = (new_alpha - alpha[i]) * y;
            if delta != 0.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += delta * xj;
                }
                b += delta;
            }
            alpha[i] = new_alpha;
        }
        epochs_run = epoch + 1;
        if max_violation < cfg.tolerance {
            break;
        }
    }

    Ok(Hyperplane {
        weights: w,
        bias: b,
        epochs_run,
    })
}

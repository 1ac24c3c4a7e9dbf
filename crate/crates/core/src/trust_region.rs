//! Exact global minimisation of a separable quadratic over the unit ball,
//! `min ½ Σ h_i z_i² + Σ g_i z_i` subject to `‖z‖ ≤ 1`.
//!
//! The optimum satisfies `(h_i + λ) z_i = −g_i` with `λ ≥ max(0, −min h)`
//! and `λ (1 − ‖z‖) = 0`. `λ` comes from bisection on the secular function
//! `‖z(λ)‖² − 1 = Σ g_i²/(h_i+λ)² − 1`, which is strictly decreasing on the
//! bracket.

use crate::error::{ConeError, Result};

pub const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub z: Vec<f64>,
    /// Objective `½ zᵀHz + gᵀz` at `z`.
    pub value: f64,
    pub lambda: f64,
    pub hard_case: bool,
}

fn objective(h: &[f64], g: &[f64], z: &[f64]) -> f64 {
    h.iter()
        .zip(g)
        .zip(z)
        .map(|((h, g), z)| 0.5 * h * z * z + g * z)
        .sum()
}

pub fn solve_diagonal(h: &[f64], g: &[f64]) -> Result<TrsSolution> {
    assert_eq!(h.len(), g.len());
    if h.iter().chain(g).any(|x| !x.is_finite()) {
        return Err(ConeError::NonFinite("trust-region data"));
    }
    let h_min = h.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda_lo = (-h_min).max(0.0);
    let scale = h.iter().chain(g).fold(1.0_f64, |m, x| m.max(x.abs()));
    // Coordinates whose shifted curvature vanishes at λ_lo.
    let singular = |i: usize| h[i] + lambda_lo <= 1e-14 * scale;

    let z_at = |lambda: f64| -> Vec<f64> {
        h.iter()
            .zip(g)
            .map(|(h, g)| if *g == 0.0 { 0.0 } else { -g / (h + lambda) })
            .collect()
    };
    let norm2 = |z: &[f64]| z.iter().map(|x| x * x).sum::<f64>();

    let blocked = (0..h.len()).any(|i| singular(i) && g[i] != 0.0);
    if !blocked {
        let mut z: Vec<f64> = (0..h.len())
            .map(|i| if singular(i) { 0.0 } else { -g[i] / (h[i] + lambda_lo) })
            .collect();
        let nz = norm2(&z);
        if nz <= 1.0 {
            let mut hard_case = false;
            if lambda_lo > 0.0 {
                // Negative curvature: move along the smallest-index null
                // direction until the boundary is reached.
                let i = (0..h.len()).find(|&i| singular(i)).expect("h_min attained");
                z[i] = (1.0 - nz).max(0.0).sqrt();
                hard_case = true;
            }
            let value = objective(h, g, &z);
            return Ok(TrsSolution {
                z,
                value,
                lambda: lambda_lo,
                hard_case,
            });
        }
    }

    // Boundary solution with λ > λ_lo. At λ_lo + ‖g‖ every |h_i+λ| ≥ ‖g‖.
    let gnorm = norm2(g).sqrt();
    let mut lo = lambda_lo;
    let mut hi = lambda_lo + gnorm.max(f64::MIN_POSITIVE);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm2(&z_at(mid)) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = hi;
    let mut z = z_at(lambda);
    let nz = norm2(&z).sqrt();
    if !(nz > 0.0) || !nz.is_finite() {
        return Err(ConeError::NoConvergence(MAX_BISECTIONS));
    }
    if nz > 1.0 {
        z.iter_mut().for_each(|x| *x /= nz);
    }
    let value = objective(h, g, &z);
    Ok(TrsSolution {
        z,
        value,
        lambda,
        hard_case: false,
    })
}

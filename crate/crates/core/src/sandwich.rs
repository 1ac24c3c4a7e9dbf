//! Width of the band between the necessary and sufficient moment tests
//! along rays `t ↦ (1, t·w, t·W)` in rescaled coordinates.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::model::{MomentVector, RescaledMomentVector};
use crate::moment::{limit_residual, necessary_condition, sufficient_condition};

/// Rays leaving the limit cone later than this are discarded: their gap
/// is dominated by how slowly the ray approaches the boundary.
pub const MAX_LIMIT_CROSSING: f64 = 3.0;
const T_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ray {
    pub w: Vec<f64>,
    pub ww: Vec<f64>,
}

impl Ray {
    /// Uniform direction on the unit sphere of `ℝ^{2d}`.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let v: Vec<f64> = (0..2 * d).map(|_| StandardNormal.sample(rng)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        Self {
            w: v[..d].iter().map(|x| x / r).collect(),
            ww: v[d..].iter().map(|x| x / r).collect(),
        }
    }

    pub fn rescaled_at(&self, t: f64) -> RescaledMomentVector {
        RescaledMomentVector {
            z0: 1.0,
            zt: self.w.iter().map(|x| t * x).collect(),
            zzt: self.ww.iter().map(|x| t * x).collect(),
        }
    }

    pub fn at(&self, t: f64, n: usize) -> Result<MomentVector> {
        self.rescaled_at(t).unrescale(n)
    }
}

/// Largest `t` with `inside(t)`, assuming `inside` holds on an interval
/// `[0, t*]`; `None` if it holds up to [`T_MAX`].
fn exit_time(mut inside: impl FnMut(f64) -> bool) -> Option<f64> {
    let mut hi = 1.0;
    while inside(hi) {
        hi *= 2.0;
        if hi > T_MAX {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

pub fn limit_crossing(ray: &Ray) -> Option<f64> {
    exit_time(|t| limit_residual(&ray.rescaled_at(t)) >= 0.0)
}

/// `(t_necessary, t_sufficient)` exit times at `n`.
pub fn exit_times(ray: &Ray, n: usize) -> Result<Option<(f64, f64)>> {
    let probe = |nec: bool| {
        exit_time(|t| {
            let m = ray.at(t, n).expect("valid dims");
            if nec {
                necessary_condition(&m, 0.0).0
            } else {
                sufficient_condition(&m, 0.0).0
            }
        })
    };
    Ok(probe(true).zip(probe(false)))
}

/// Least-squares fit of `gap ≈ c·n^{−p}` on log–log axes; returns `(c, p)`.
pub fn fit_power_law(ns: &[usize], gaps: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    ((my - slope * mx).exp(), -slope)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayGap {
    pub ray: Ray,
    pub limit_crossing: f64,
    pub ns: Vec<usize>,
    pub gaps: Vec<f64>,
    pub c: f64,
    pub p: f64,
}

/// Gap profile of one ray, or `None` when the ray is discarded (it never
/// leaves the limit cone, leaves it after [`MAX_LIMIT_CROSSING`], or one of
/// the finite-`n` tests never fails).
pub fn ray_gap(ray: &Ray, ns: &[usize]) -> Result<Option<RayGap>> {
    let Some(tl) = limit_crossing(ray) else { return Ok(None) };
    if tl > MAX_LIMIT_CROSSING {
        return Ok(None);
    }
    let mut gaps = Vec::with_capacity(ns.len());
    for &n in ns {
        let Some((tn, ts)) = exit_times(ray, n)? else { return Ok(None) };
        gaps.push(tn - ts);
    }
    if gaps.iter().any(|g| !(*g > 0.0)) {
        return Ok(None);
    }
    let (c, p) = fit_power_law(ns, &gaps);
    Ok(Some(RayGap {
        ray: ray.clone(),
        limit_crossing: tl,
        ns: ns.to_vec(),
        gaps,
        c,
        p,
    }))
}

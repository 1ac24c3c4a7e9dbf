//! Minimisation of a symmetric quadratic over `(S^{d−1})^n` restricted to
//! configurations with at most `2d` distinct points, together with the
//! univariate critical polynomial satisfied by first coordinates of
//! stationary points.
//!
//! A configuration with multiplicities `k_1..k_m` and distinct points
//! `y_1..y_m` has `S_α = Σ_j k_j y_{j,α}` and objective
//! `A_0 + Σ A_α S_α + Σ A_αα (S_α² − Σ_j k_j y_{j,α}²)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::measures::{sample_configuration_with, Support};
use crate::model::{evaluate, power_sums, Configuration, ProblemDims, SymmetricQuadratic};

pub const DEFAULT_RESTARTS: usize = 32;
pub const CLUSTER_TOL: f64 = 1e-5;
const MAX_ITERS: usize = 3000;

/// A partition of `n` in nonincreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct MultiplicityPattern {
    pub counts: Vec<usize>,
}

impl MultiplicityPattern {
    pub fn new(mut counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(ConeError::InvalidArgument("pattern counts must be positive".into()));
        }
        counts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Every partition of `n` into at most `2d` parts, each exactly once.
pub fn enumerate_patterns(n: usize, d: usize) -> Vec<MultiplicityPattern> {
    fn rec(rest: usize, max_part: usize, parts_left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiplicityPattern>) {
        if rest == 0 {
            out.push(MultiplicityPattern { counts: cur.clone() });
            return;
        }
        if parts_left == 0 {
            return;
        }
        for p in (1..=max_part.min(rest)).rev() {
            cur.push(p);
            rec(rest - p, p, parts_left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, 2 * d, &mut Vec::new(), &mut out);
    }
    out
}

struct PatternProblem<'a> {
    q: &'a SymmetricQuadratic,
    k: Vec<f64>,
    d: usize,
}

impl PatternProblem<'_> {
    fn sums(&self, y: &[Vec<f64>]) -> Vec<f64> {
        (0..self.d)
            .map(|a| self.k.iter().zip(y).map(|(k, p)| k * p[a]).sum())
            .collect()
    }

    fn value(&self, y: &[Vec<f64>]) -> f64 {
        let s = self.sums(y);
        let mut v = self.q.a0();
        for a in 0..self.d {
            let sq: f64 = self.k.iter().zip(y).map(|(k, p)| k * p[a] * p[a]).sum();
            v += self.q.a()[a] * s[a] + self.q.aa()[a] * (s[a] * s[a] - sq);
        }
        v
    }

    /// Tangential gradient: `∂F/∂y_{j,α} = k_j (A_α + 2A_αα (S_α − y_{j,α}))`
    /// with the radial part removed.
    fn riemannian_gradient(&self, y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let s = self.sums(y);
        y.iter()
            .zip(&self.k)
            .map(|(p, k)| {
                let g: Vec<f64> = (0..self.d)
                    .map(|a| k * (self.q.a()[a] + 2.0 * self.q.aa()[a] * (s[a] - p[a])))
                    .collect();
                let radial: f64 = g.iter().zip(p).map(|(g, p)| g * p).sum();
                g.iter().zip(p).map(|(g, p)| g - radial * p).collect()
            })
            .collect()
    }
}

fn normalize(v: &mut [f64]) {
    let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r > 0.0 {
        v.iter_mut().for_each(|x| *x /= r);
    } else if let Some(x) = v.first_mut() {
        *x = 1.0;
    }
}

fn sq_norm(g: &[Vec<f64>]) -> f64 {
    g.iter().flatten().map(|x| x * x).sum()
}

/// Projected gradient descent on the product of spheres: Barzilai–Borwein
/// trial steps, Armijo backtracking, retraction by renormalisation.
fn descend(prob: &PatternProblem<'_>, mut y: Vec<Vec<f64>>) -> (f64, Vec<Vec<f64>>) {
    let scale = prob.q.scale();
    let mut f = prob.value(&y);
    let mut g = prob.riemannian_gradient(&y);
    let mut step = 1.0 / scale;
    for _ in 0..MAX_ITERS {
        let gn2 = sq_norm(&g);
        if gn2.sqrt() <= 1e-13 * scale {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<Vec<f64>> = y
                .iter()
                .zip(&g)
                .map(|(p, gp)| {
                    let mut c: Vec<f64> = p.iter().zip(gp).map(|(p, g)| p - t * g).collect();
                    normalize(&mut c);
                    c
                })
                .collect();
            let fc = prob.value(&cand);
            if fc <= f - 1e-4 * t * gn2 {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((ny, nf)) = accepted else { break };
        let ng = prob.riemannian_gradient(&ny);
        let mut ss = 0.0;
        let mut sy = 0.0;
        for ((a, b), (ga, gb)) in ny.iter().zip(&y).zip(ng.iter().zip(&g)) {
            for i in 0..prob.d {
                let s = a[i] - b[i];
                ss += s * s;
                sy += s * (ga[i] - gb[i]);
            }
        }
        step = if sy.abs() > 0.0 { (ss / sy.abs()).clamp(1e-12 / scale, 1e6) } else { t * 2.0 };
        let done = f - nf <= 1e-17 * scale && sq_norm(&ng) <= 1e-20 * scale * scale;
        y = ny;
        f = nf;
        g = ng;
        if done {
            break;
        }
    }
    (prob.value(&y), y)
}

fn expand(pattern_k: &[usize], y: &[Vec<f64>]) -> Configuration {
    let points = pattern_k
        .iter()
        .zip(y)
        .flat_map(|(&k, p)| std::iter::repeat_n(p.clone(), k))
        .collect();
    Configuration::new(points).expect("unit vectors")
}

/// Best value found over the pattern, with the expanded configuration.
/// Exact for `d = 1` (all sign choices); multistart descent otherwise, which
/// only bounds the pattern minimum from above.
pub fn min_over_pattern<R: Rng + ?Sized>(
    q: &SymmetricQuadratic,
    pattern: &MultiplicityPattern,
    restarts: usize,
    rng: &mut R,
) -> Result<(f64, Configuration)> {
    if pattern.total() != q.n() {
        return Err(ConeError::InvalidArgument(format!(
            "pattern sums to {}, expected n = {}",
            pattern.total(),
            q.n()
        )));
    }
    let d = q.d();
    let prob = PatternProblem {
        q,
        k: pattern.counts.iter().map(|&k| k as f64).collect(),
        d,
    };
    let m = pattern.counts.len();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut consider = |v: f64, y: Vec<Vec<f64>>| {
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, y));
        }
    };
    if d == 1 {
        for signs in 0..1u32 << m {
            let y: Vec<Vec<f64>> = (0..m)
                .map(|j| vec![if signs >> j & 1 == 1 { -1.0 } else { 1.0 }])
                .collect();
            consider(prob.value(&y), y);
        }
    } else {
        for _ in 0..restarts.max(1) {
            let y0 = (0..m).map(|_| crate::measures::sample_point(d, Support::Sphere, rng)).collect();
            let (v, y) = descend(&prob, y0);
            consider(v, y);
        }
    }
    let (v, y) = best.expect("at least one start");
    Ok((v, expand(&pattern.counts, &y)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereMinimum {
    pub value: f64,
    pub config: Configuration,
}

fn task_rng(seed: u64, task: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task as u64);
    rng
}

/// Minimum over all patterns; the result is independent of thread count.
pub fn reduced_global_min(q: &SymmetricQuadratic, restarts: usize, seed: u64) -> Result<SphereMinimum> {
    let patterns = enumerate_patterns(q.n(), q.d());
    let results: Vec<(f64, Configuration)> = patterns
        .par_iter()
        .enumerate()
        .map(|(i, p)| min_over_pattern(q, p, restarts, &mut task_rng(seed, i)))
        .collect::<Result<_>>()?;
    let (value, config) = results
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one pattern");
    Ok(SphereMinimum { value, config })
}

/// Oracle: `samples` random configurations on `(S^{d−1})^n`, each polished
/// by descent over all `n` points independently.
pub fn full_bruteforce_min(q: &SymmetricQuadratic, samples: usize, seed: u64) -> Result<SphereMinimum> {
    let dims = q.dims();
    let prob = PatternProblem {
        q,
        k: vec![1.0; dims.n],
        d: dims.d,
    };
    let best = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i);
            let start = sample_configuration_with(dims, Support::Sphere, &mut rng).into_points();
            if dims.d == 1 {
                (prob.value(&start), start)
            } else {
                descend(&prob, start)
            }
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one sample");
    let config = Configuration::new(best.1)?;
    Ok(SphereMinimum {
        value: evaluate(q, &config)?,
        config,
    })
}

/// Per-point Lagrange residual `‖R_α − (λ_i + 2A_αα) ξ_{i,α}‖` with
/// `R_α = A_α + 2A_αα s_α` and `λ_i` fitted by least squares; returns the
/// largest over all points.
pub fn stationarity_residual(q: &SymmetricQuadratic, config: &Configuration) -> f64 {
    let r = gradient_offsets(q, config);
    let aa = q.aa();
    config
        .points()
        .iter()
        .map(|xi| {
            let n2: f64 = xi.iter().map(|x| x * x).sum();
            let lambda = if n2 > 0.0 {
                (0..xi.len()).map(|a| xi[a] * (r[a] - 2.0 * aa[a] * xi[a])).sum::<f64>() / n2
            } else {
                0.0
            };
            (0..xi.len())
                .map(|a| {
                    let e = r[a] - (lambda + 2.0 * aa[a]) * xi[a];
                    e * e
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// `R_α = A_α + 2A_αα s_α` at a configuration.
pub fn gradient_offsets(q: &SymmetricQuadratic, config: &Configuration) -> Vec<f64> {
    let (s, _) = power_sums(config);
    (0..q.d()).map(|a| q.a()[a] + 2.0 * q.aa()[a] * s[a]).collect()
}

/// Number of clusters of points at distance at most `tol` (greedy).
pub fn count_distinct_points(config: &Configuration, tol: f64) -> usize {
    let mut reps: Vec<&Vec<f64>> = Vec::new();
    for p in config.points() {
        let near = reps.iter().any(|r| {
            r.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= tol
        });
        if !near {
            reps.push(p);
        }
    }
    reps.len()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalData {
    pub r: Vec<f64>,
    /// Coefficients of `P(t)` in increasing degree, length `2d+1`.
    pub poly_coeffs: Vec<f64>,
    /// Second-moment coefficients actually used (jittered if they collided).
    pub aa_used: Vec<f64>,
}

impl CriticalData {
    pub fn eval(&self, t: f64) -> f64 {
        self.poly_coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn norm(&self) -> f64 {
        self.poly_coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn degree(&self) -> usize {
        let tol = 1e-14 * self.norm();
        self.poly_coeffs.iter().rposition(|c| c.abs() > tol).unwrap_or(0)
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Perturbs coinciding second-moment coefficients by a deterministic
/// relative jitter of `1e−10`.
fn distinct_aa(q: &SymmetricQuadratic) -> Vec<f64> {
    let aa = q.aa().to_vec();
    let scale = aa.iter().fold(1e-300_f64, |m, x| m.max(x.abs()));
    let collide = (0..aa.len()).any(|i| (i + 1..aa.len()).any(|j| (aa[i] - aa[j]).abs() <= 1e-14 * scale));
    if !collide {
        return aa;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    aa.iter()
        .map(|x| x + 1e-10 * scale * rng.random_range(-1.0..1.0))
        .collect()
}

/// `P(t) = Σ_β R_β² t² Π_{α≠β} L_α(t)² − Π_α L_α(t)²` with
/// `L_α(t) = R_1 + 2(A_αα − A_11) t`. Roots contain the first coordinate of
/// every point of a stationary configuration with offsets `R`.
pub fn critical_polynomial(q: &SymmetricQuadratic, r: &[f64]) -> Result<CriticalData> {
    let d = q.d();
    if r.len() != d {
        return Err(ConeError::BadLength {
            field: "R",
            expected: d,
            got: r.len(),
        });
    }
    let rscale = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if r[0].abs() <= 1e-12 * rscale.max(q.inf_norm()) || r[0] == 0.0 {
        return Err(ConeError::Degenerate(
            "R_1 = 0: minima lie on coordinate axes".into(),
        ));
    }
    let aa = distinct_aa(q);
    let l2: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            let l = [r[0], 2.0 * (aa[a] - aa[0])];
            poly_mul(&l, &l)
        })
        .collect();
    let prod_except = |skip: Option<usize>| {
        (0..d)
            .filter(|&a| Some(a) != skip)
            .fold(vec![1.0], |acc, a| poly_mul(&acc, &l2[a]))
    };
    let mut p = vec![0.0; 2 * d + 1];
    for b in 0..d {
        let term = poly_mul(&[0.0, 0.0, r[b] * r[b]], &prod_except(Some(b)));
        for (i, c) in term.iter().enumerate() {
            p[i] += c;
        }
    }
    for (i, c) in prod_except(None).iter().enumerate() {
        p[i] -= c;
    }
    p.truncate(2 * d + 1);
    Ok(CriticalData {
        r: r.to_vec(),
        poly_coeffs: p,
        aa_used: aa,
    })
}

/// Points with first coordinate `t` solving the stationarity equations:
/// `ξ_α = R_α t / L_α(t)`. An axis with `L_α(t) = 0` is fixed by the unit
/// norm, giving two candidates.
pub fn recover_point(q: &SymmetricQuadratic, r: &[f64], t: f64) -> Result<Vec<Vec<f64>>> {
    let data = critical_polynomial(q, r)?;
    let aa = &data.aa_used;
    let d = q.d();
    let mut xi = vec![0.0; d];
    let mut free = None;
    for a in 0..d {
        let l = r[0] + 2.0 * (aa[a] - aa[0]) * t;
        if l.abs() <= 1e-12 * r[0].abs() {
            free = Some(a);
        } else {
            xi[a] = r[a] * t / l;
        }
    }
    match free {
        None => Ok(vec![xi]),
        Some(a0) => {
            let rest: f64 = xi.iter().map(|x| x * x).sum();
            let v = (1.0 - rest).max(0.0).sqrt();
            let mut plus = xi.clone();
            plus[a0] = v;
            let mut minus = xi;
            minus[a0] = -v;
            Ok(vec![plus, minus])
        }
    }
}

/// Largest `|P(ξ_{i,a})| / ‖P‖` over the points of `config`, with axes
/// permuted so the reference axis `a` has the largest `|R_a|`. `None` when
/// every offset vanishes.
pub fn critical_root_residual(q: &SymmetricQuadratic, config: &Configuration) -> Option<f64> {
    let r = gradient_offsets(q, config);
    let axis = (0..r.len()).max_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs()))?;
    if r[axis].abs() <= 1e-9 * q.scale() {
        return None;
    }
    let d = q.d();
    let perm: Vec<usize> = std::iter::once(axis).chain((0..d).filter(|&a| a != axis)).collect();
    let pq = SymmetricQuadratic::new(
        q.dims(),
        q.a0(),
        perm.iter().map(|&a| q.a()[a]).collect(),
        perm.iter().map(|&a| q.aa()[a]).collect(),
    )
    .ok()?;
    let pr: Vec<f64> = perm.iter().map(|&a| r[a]).collect();
    let data = critical_polynomial(&pq, &pr).ok()?;
    let norm = data.norm();
    Some(
        config
            .points()
            .iter()
            .map(|p| data.eval(p[axis]).abs() / norm)
            .fold(0.0, f64::max),
    )
}

/// Dimension helper for callers holding only `(n, d)`.
pub fn pattern_count(dims: ProblemDims) -> usize {
    enumerate_patterns(dims.n, dims.d).len()
}

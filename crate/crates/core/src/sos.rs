//! Membership in the sum-of-squares cone `Σ_{n,d}` and its expansion
//! `Σ'_{n,d}`.
//!
//! Two independent routes decide `Σ_{n,d}`:
//!
//! * the arrow-shaped pencil `M + cN` of size `2d+2` (S-lemma form), decided
//!   by maximising its Schur slack over the admissible `c`;
//! * the global minimum of
//!   `P_Q(X,Y) = A_0 + √n Σ A_α X_α + (n−1) Σ A_αα X_α² − n Σ A_αα Y_α²`
//!   over the ellipsoid `‖Y‖² + ‖X‖²/n ≤ 1`, solved as a trust-region
//!   subproblem.
//!
//! Both compute the same number: the maximal slack equals the ellipsoid
//! minimum by Lagrangian duality.
//!
//! For members, [`sos_witness`] rebuilds the explicit decomposition
//! `Q = ⟨S,G⟩ + ⟨F,H⟩ + c (n − Σ p_αα)` with `G` arrow-shaped and `H`
//! diagonal.

use rand::Rng;
use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::model::{evaluate, power_sums, Configuration, SymmetricQuadratic};
use crate::trust_region::{self, MAX_BISECTIONS};
use crate::verdict::{ConeVerdict, Status, Witness};

pub const DEFAULT_TOL: f64 = 1e-9;

/// A point `(X, Y)` of the ellipsoid `‖Y‖² + ‖X‖²/n ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EllipsoidPoint {
    pub fn new(n: usize, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(ConeError::BadLength {
                field: "y",
                expected: x.len(),
                got: y.len(),
            });
        }
        let p = Self { x, y };
        let r = p.norm2(n);
        if r > 1.0 + crate::model::BALL_EPS {
            return Err(ConeError::InvalidArgument(format!(
                "ellipsoid point has ‖Y‖² + ‖X‖²/n = {r} > 1"
            )));
        }
        Ok(p)
    }

    /// The point induced by a configuration:
    /// `X_α = s_α/√n`, `Y_α² = Σ_i ξ_{i,α}²/n − X_α²/n`.
    pub fn from_configuration(config: &Configuration) -> Self {
        let n = config.dims().nf();
        let (s, _) = power_sums(config);
        let d = config.dims().d;
        let mut sq = vec![0.0; d];
        for p in config.points() {
            for a in 0..d {
                sq[a] += p[a] * p[a];
            }
        }
        let x: Vec<f64> = s.iter().map(|s| s / n.sqrt()).collect();
        let y = sq
            .iter()
            .zip(&x)
            .map(|(q, x)| (q / n - x * x / n).max(0.0).sqrt())
            .collect();
        Self { x, y }
    }

    pub fn norm2(&self, n: usize) -> f64 {
        let nf = n as f64;
        self.y.iter().map(|y| y * y).sum::<f64>() + self.x.iter().map(|x| x * x).sum::<f64>() / nf
    }
}

pub fn pq_evaluate(q: &SymmetricQuadratic, pt: &EllipsoidPoint) -> Result<f64> {
    if pt.x.len() != q.d() {
        return Err(ConeError::BadLength {
            field: "x",
            expected: q.d(),
            got: pt.x.len(),
        });
    }
    let n = q.n() as f64;
    let mut v = q.a0();
    for a in 0..q.d() {
        let (x, y) = (pt.x[a], pt.y[a]);
        v += n.sqrt() * q.a()[a] * x + (n - 1.0) * q.aa()[a] * x * x - n * q.aa()[a] * y * y;
    }
    Ok(v)
}

/// Global minimum of `P_Q` over the ellipsoid.
///
/// With `u = X/√n` the feasible set is the unit ball in `(u, Y)`, the
/// Hessian is diagonal (`2n(n−1)A_αα` on `u`, `−2nA_αα` on `Y`) and the
/// linear term is `nA_α` on `u`.
pub fn ellipsoid_quadratic_min(q: &SymmetricQuadratic) -> Result<(f64, EllipsoidPoint)> {
    let d = q.d();
    let n = q.n() as f64;
    let mut h = Vec::with_capacity(2 * d);
    let mut g = Vec::with_capacity(2 * d);
    for a in 0..d {
        h.push(2.0 * n * (n - 1.0) * q.aa()[a]);
        g.push(n * q.a()[a]);
    }
    for a in 0..d {
        h.push(-2.0 * n * q.aa()[a]);
        g.push(0.0);
    }
    let sol = trust_region::solve_diagonal(&h, &g)?;
    let x = sol.z[..d].iter().map(|u| u * n.sqrt()).collect();
    let y = sol.z[d..].to_vec();
    Ok((q.a0() + sol.value, EllipsoidPoint { x, y }))
}

/// Feasibility data of the arrow pencil.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrowFeasibility {
    /// Pencil parameter (Remark scale) maximising the Schur slack.
    pub c: f64,
    /// Maximal Schur slack over all admissible `c ≥ lower`; equals the
    /// ellipsoid minimum of `P_Q`.
    pub marginal: f64,
    /// Admissible interval `[lower, A_0]`; `None` when empty.
    pub c_range: Option<(f64, f64)>,
}

/// Smallest `c` making the diagonal blocks of the pencil nonnegative:
/// `c ≥ 0`, `c ≥ n A_αα`, `c ≥ −n(n−1) A_αα`.
pub fn admissible_lower_bound(q: &SymmetricQuadratic) -> f64 {
    let n = q.n() as f64;
    q.aa()
        .iter()
        .fold(0.0_f64, |lo, &a| lo.max(n * a).max(-n * (n - 1.0) * a))
}

/// Schur slack `f(c) = (A_0 − c) − Σ_α (n A_α²/4) / ((n−1) A_αα + c/n)`.
/// A zero denominator is admissible only with `A_α = 0`; otherwise `−∞`.
pub fn schur_slack(q: &SymmetricQuadratic, c: f64) -> f64 {
    let n = q.n() as f64;
    let mut f = q.a0() - c;
    for (&a, &aa) in q.a().iter().zip(q.aa()) {
        if a == 0.0 {
            continue;
        }
        let den = (n - 1.0) * aa + c / n;
        if den <= 0.0 {
            return f64::NEG_INFINITY;
        }
        f -= n * a * a / 4.0 / den;
    }
    f
}

/// `f'(c) = −1 + Σ_α A_α² / (4 den_α²)`, strictly decreasing in `c`.
fn schur_slack_derivative(q: &SymmetricQuadratic, c: f64) -> f64 {
    let n = q.n() as f64;
    let mut df = -1.0;
    for (&a, &aa) in q.a().iter().zip(q.aa()) {
        if a == 0.0 {
            continue;
        }
        let den = (n - 1.0) * aa + c / n;
        if den <= 0.0 {
            return f64::INFINITY;
        }
        df += a * a / (4.0 * den * den);
    }
    df
}

/// Maximiser of the concave slack over `[lower, ∞)`.
fn maximize_slack(q: &SymmetricQuadratic, lower: f64) -> Result<f64> {
    if schur_slack_derivative(q, lower) <= 0.0 {
        return Ok(lower);
    }
    let mut step = lower.abs().max(1.0);
    let mut hi = lower + step;
    let mut grow = 0;
    while schur_slack_derivative(q, hi) > 0.0 {
        step *= 2.0;
        hi = lower + step;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(ConeError::NoConvergence(grow));
        }
    }
    let mut lo = lower;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if schur_slack_derivative(q, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // `hi` sits on the nonpositive-derivative side, so f(hi) is finite.
    Ok(hi)
}

/// Membership in `Σ_{n,d}` through the arrow pencil.
pub fn sigma_membership_lmi(q: &SymmetricQuadratic, tol: f64) -> Result<(ConeVerdict, ArrowFeasibility)> {
    let lower = admissible_lower_bound(q);
    let c_star = maximize_slack(q, lower)?;
    let marginal = schur_slack(q, c_star);
    let bound = tol * q.scale();
    let upper = q.a0();
    let c_range = (lower <= upper + bound).then_some((lower, upper.max(lower)));
    let feas = ArrowFeasibility {
        c: c_star.min(upper.max(lower)),
        marginal,
        c_range,
    };
    let status = if c_range.is_some() && marginal >= -bound {
        Status::Member
    } else {
        Status::NonMember
    };
    let verdict = ConeVerdict::new(status, marginal.abs() < bound, Witness::Arrow(feas.clone()));
    Ok((verdict, feas))
}

/// Membership in `Σ'_{n,d}`: `(n/(n−1) A_0, A_α, A_αα) ∈ Σ_{n,d}`.
pub fn sigma_prime_membership(q: &SymmetricQuadratic, tol: f64) -> Result<(ConeVerdict, ArrowFeasibility)> {
    let n = q.n() as f64;
    sigma_membership_lmi(&expand_constant(q, n / (n - 1.0)), tol)
}

pub(crate) fn expand_constant(q: &SymmetricQuadratic, factor: f64) -> SymmetricQuadratic {
    q.with_a0(factor * q.a0())
}

/// Membership in `Σ_{n,d}` by the sign of the ellipsoid minimum.
pub fn sigma_membership_ellipsoid(q: &SymmetricQuadratic, tol: f64) -> Result<ConeVerdict> {
    let (value, argmin) = ellipsoid_quadratic_min(q)?;
    let bound = tol * q.scale();
    Ok(ConeVerdict::new(
        if value >= -bound {
            Status::Member
        } else {
            Status::NonMember
        },
        value.abs() < bound,
        Witness::EllipsoidMinimum { value, argmin },
    ))
}

/// Explicit decomposition `Q = ⟨S,G⟩ + ⟨F,H⟩ + c (n − Σ_α p_αα)`, where
/// `S_αβ = sym(s_α s_β)` (`s_0 = 1`), `F_αα = (n−1) p_αα − s_αα` and
/// `p_αα = Σ_i ξ_{i,α}²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SosWitness {
    /// Proof-scale multiplier (the pencil parameter divided by `n`).
    pub c: f64,
    /// `(d+1)×(d+1)` arrow matrix `[[g_0, g_α/2], [g_α/2, diag(g_αα)]]`.
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    /// Diagonal entries `h_αα`.
    #[serde(rename = "H")]
    pub h: Vec<f64>,
}

/// Builds the witness for proof-scale `c`:
/// `g_0 = A_0 − cn`, `g_α = A_α`, `g_αα = (n−1)/n A_αα + c/n`,
/// `h_αα = (c − g_αα)/(n−1)`.
pub fn sos_witness(q: &SymmetricQuadratic, c: f64, tol: f64) -> Result<SosWitness> {
    let n = q.n() as f64;
    let d = q.d();
    let bound = tol * q.scale();
    if c < -bound {
        return Err(ConeError::InfeasibleParameter {
            c,
            reason: "c must be nonnegative".into(),
        });
    }
    if n * c < admissible_lower_bound(q) - bound {
        return Err(ConeError::InfeasibleParameter {
            c,
            reason: "diagonal blocks are not nonnegative".into(),
        });
    }
    if schur_slack(q, n * c) < -bound {
        return Err(ConeError::InfeasibleParameter {
            c,
            reason: "Schur complement is negative".into(),
        });
    }
    let mut g = vec![vec![0.0; d + 1]; d + 1];
    g[0][0] = q.a0() - c * n;
    let mut h = vec![0.0; d];
    for a in 0..d {
        let gaa = (n - 1.0) / n * q.aa()[a] + c / n;
        g[0][a + 1] = 0.5 * q.a()[a];
        g[a + 1][0] = 0.5 * q.a()[a];
        g[a + 1][a + 1] = gaa;
        h[a] = (c - gaa) / (n - 1.0);
    }
    Ok(SosWitness { c, g, h })
}

/// Witness for a member, taking `c` from the pencil route.
pub fn sos_witness_for_member(q: &SymmetricQuadratic, tol: f64) -> Result<SosWitness> {
    let (_, feas) = sigma_membership_lmi(q, tol)?;
    sos_witness(q, feas.c / q.n() as f64, tol)
}

/// Right-hand side of the decomposition evaluated at `config`.
pub fn sos_reconstruct(w: &SosWitness, config: &Configuration) -> f64 {
    let dims = config.dims();
    let n = dims.nf();
    let d = dims.d;
    let (s, ss) = power_sums(config);
    let mut p = vec![0.0; d];
    for pt in config.points() {
        for a in 0..d {
            p[a] += pt[a] * pt[a];
        }
    }
    let mut v = w.g[0][0];
    for a in 0..d {
        // sym(s_α²) = s_α².
        v += 2.0 * w.g[0][a + 1] * s[a] + w.g[a + 1][a + 1] * s[a] * s[a];
        v += w.h[a] * ((n - 1.0) * p[a] - ss[a]);
    }
    v + w.c * (n - p.iter().sum::<f64>())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SosCheck {
    /// Largest |Q(x) − reconstruction(x)| over the sampled configurations.
    pub identity_residual: f64,
    /// Smallest eigenvalue of `G` (arrow structure: diagonal signs + Schur).
    pub g_min_eigenvalue: f64,
    pub h_min: f64,
    pub c: f64,
}

impl SosCheck {
    pub fn is_valid(&self, tol: f64) -> bool {
        self.identity_residual <= tol
            && self.g_min_eigenvalue >= -tol
            && self.h_min >= -tol
            && self.c >= -tol
    }
}

/// Checks the decomposition identity at `samples` random configurations in
/// `K_n^d` and the semidefiniteness of `G`, `H`, `c`.
pub fn verify_sos_witness<R: Rng + ?Sized>(
    w: &SosWitness,
    q: &SymmetricQuadratic,
    samples: usize,
    rng: &mut R,
) -> Result<SosCheck> {
    let dims = q.dims();
    if w.g.len() != dims.d + 1 || w.h.len() != dims.d {
        return Err(ConeError::BadLength {
            field: "witness",
            expected: dims.d + 1,
            got: w.g.len(),
        });
    }
    let mut identity_residual = 0.0_f64;
    for _ in 0..samples {
        let config = crate::measures::random_ball_configuration(dims, rng);
        let lhs = evaluate(q, &config)?;
        identity_residual = identity_residual.max((lhs - sos_reconstruct(w, &config)).abs());
    }
    let gm = nalgebra::DMatrix::from_fn(dims.d + 1, dims.d + 1, |i, j| w.g[i][j]);
    let g_min_eigenvalue = crate::linalg::min_eigenvalue(&gm);
    let h_min = w.h.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SosCheck {
        identity_residual,
        g_min_eigenvalue,
        h_min,
        c: w.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: usize, a0: f64, a: Vec<f64>, aa: Vec<f64>) -> SymmetricQuadratic {
        SymmetricQuadratic::new(ProblemDims::new(n, a.len()).unwrap(), a0, a, aa).unwrap()
    }

    #[test]
    fn pq_examples() {
        let one = q(5, 1.0, vec![0.0, 0.0], vec![0.0, 0.0]);
        let pt = EllipsoidPoint::new(5, vec![1.0, 0.5], vec![0.2, 0.1]).unwrap();
        assert_eq!(pq_evaluate(&one, &pt).unwrap(), 1.0);
        let e1 = q(5, 0.0, vec![0.0, 0.0], vec![1.0, 0.0]);
        let pt = EllipsoidPoint::new(5, vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(pq_evaluate(&e1, &pt).unwrap(), -5.0);
    }

    #[test]
    fn pq_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(2..10);
            let d = rng.random_range(1..4);
            let dims = ProblemDims::new(n, d).unwrap();
            let flat: Vec<f64> = (0..2 * d + 1).map(|_| rng.random_range(-2.0..2.0)).collect();
            let qq = SymmetricQuadratic::from_flat(dims, &flat).unwrap();
            let config = crate::measures::random_ball_configuration(dims, &mut rng);
            let pt = EllipsoidPoint::from_configuration(&config);
            assert!(pt.norm2(n) <= 1.0 + 1e-12);
            let a = pq_evaluate(&qq, &pt).unwrap();
            let b = evaluate(&qq, &config).unwrap();
            assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn ellipsoid_min_examples() {
        for n in 2..8 {
            let nf = n as f64;
            let (v, _) = ellipsoid_quadratic_min(&q(n, 1.0, vec![0.0], vec![0.0])).unwrap();
            assert_eq!(v, 1.0);
            let (v, pt) = ellipsoid_quadratic_min(&q(n, 0.0, vec![1.0], vec![0.0])).unwrap();
            assert!((v + nf).abs() < 1e-9);
            assert!((pt.x[0] + nf.sqrt()).abs() < 1e-9);
            assert!(pt.y[0].abs() < 1e-9);
            let (v, pt) = ellipsoid_quadratic_min(&q(n, 0.0, vec![0.0], vec![1.0])).unwrap();
            assert!((v + nf).abs() < 1e-9);
            assert!((pt.y[0].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lmi_examples() {
        let (v, f) = sigma_membership_lmi(&q(4, 1.0, vec![0.0; 2], vec![0.0; 2]), DEFAULT_TOL).unwrap();
        assert!(v.is_member());
        assert_eq!(f.c, 0.0);
        let (v, f) = sigma_membership_lmi(&q(4, 0.0, vec![0.0], vec![1.0]), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::NonMember);
        assert!(f.c_range.is_none());
        for n in 2..10 {
            let nf = n as f64;
            let qq = q(n, nf, vec![0.0], vec![1.0]);
            let (v, f) = sigma_membership_lmi(&qq, DEFAULT_TOL).unwrap();
            assert!(v.is_member() && v.boundary);
            assert_eq!(f.c, nf);
            let (m, _) = ellipsoid_quadratic_min(&qq).unwrap();
            assert!(m.abs() < 1e-9);
        }
    }

    #[test]
    fn sigma_prime_examples() {
        let zero = q(3, 0.0, vec![0.0], vec![1.0]);
        assert_eq!(sigma_prime_membership(&zero, DEFAULT_TOL).unwrap().0.status, Status::NonMember);
        for n in 2..12 {
            for r in crate::exact_d1::p_n1_extreme_rays(n).unwrap() {
                assert!(sigma_prime_membership(&r, DEFAULT_TOL).unwrap().0.is_member());
            }
        }
    }

    #[test]
    fn zero_denominator_policy() {
        // n=3, A_11 = −1/6 puts the lower bound at c = 1, where the α-block
        // denominator vanishes; admissible only with A_1 = 0.
        let ok = q(3, 2.0, vec![0.0], vec![-1.0 / 6.0]);
        assert!(sigma_membership_lmi(&ok, DEFAULT_TOL).unwrap().0.is_member());
        assert_eq!(schur_slack(&q(3, 2.0, vec![1.0], vec![-1.0 / 6.0]), 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn witness_examples() {
        let n = 5;
        let nf = n as f64;
        let c = 0.7;
        let qq = q(n, c * nf, vec![0.0, 0.0], vec![0.0, 0.0]);
        let w = sos_witness(&qq, c, DEFAULT_TOL).unwrap();
        assert!(w.g[0][0].abs() < 1e-15);
        assert!((w.g[1][1] - c / nf).abs() < 1e-15);
        assert!((w.h[0] - c / nf).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let check = verify_sos_witness(&w, &qq, 100, &mut rng).unwrap();
        assert!(check.identity_residual < 1e-9);

        let one = q(3, 1.0, vec![0.0], vec![0.0]);
        let w = sos_witness(&one, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!(w.g, vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(w.h, vec![0.0]);
        let check = verify_sos_witness(&w, &one, 50, &mut rng).unwrap();
        assert_eq!(check.identity_residual, 0.0);

        assert!(matches!(
            sos_witness(&q(3, 0.0, vec![0.0], vec![1.0]), 0.0, DEFAULT_TOL),
            Err(ConeError::InfeasibleParameter { .. })
        ));
    }

    #[test]
    fn witness_json_layout() {
        let w = SosWitness {
            c: 1.0,
            g: vec![vec![1.0]],
            h: vec![],
        };
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"c":1.0,"G":[[1.0]],"H":[]}"#);
    }
}

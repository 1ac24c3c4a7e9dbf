//! Exact tests for the polyhedral d=1 cones.
//!
//! For d=1 a polynomial in `V_{n,1}` is affine in every coordinate, so it is
//! nonnegative on `[−1,1]^n` iff it is nonnegative on the `n+1` hypercube
//! levels `s_1 = n − 2k`. These tests are the ground truth every other d=1
//! route is compared against.

use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::model::{pair, MomentVector, ProblemDims, SymmetricQuadratic};
use crate::verdict::{ConeVerdict, Status, Witness};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FacetReport {
    pub k: usize,
    pub residual: f64,
}

fn require_d1(d: usize) -> Result<()> {
    if d != 1 {
        return Err(ConeError::RequiresD1(d));
    }
    Ok(())
}

/// `A_0 + A_1 (n−2k) + A_11 ((n−2k)² − n)` for `k = 0..=n`.
pub fn hypercube_residuals(q: &SymmetricQuadratic) -> Result<Vec<FacetReport>> {
    require_d1(q.d())?;
    let n = q.n();
    let nf = n as f64;
    Ok((0..=n)
        .map(|k| {
            let s = nf - 2.0 * k as f64;
            FacetReport {
                k,
                residual: q.a0() + q.a()[0] * s + q.aa()[0] * (s * s - nf),
            }
        })
        .collect())
}

fn worst(facets: &[FacetReport]) -> FacetReport {
    *facets
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least one facet")
}

/// Membership in `P_{n,1}`. A NonMember verdict names the violating
/// hypercube level.
pub fn p_n1_membership(q: &SymmetricQuadratic, tol: f64) -> Result<(ConeVerdict, Vec<FacetReport>)> {
    let facets = hypercube_residuals(q)?;
    let w = worst(&facets);
    let bound = tol * q.scale();
    let status = if w.residual >= -bound {
        Status::Member
    } else {
        Status::NonMember
    };
    let verdict = ConeVerdict::new(
        status,
        w.residual.abs() < bound,
        Witness::Facet {
            k: w.k,
            residual: w.residual,
        },
    );
    Ok((verdict, facets))
}

/// The `n+1` extreme rays of `P_{n,1}`. Ray `k < n` vanishes on the
/// consecutive levels `k` and `k+1`; ray `n` vanishes on levels `n` and `0`.
pub fn p_n1_extreme_rays(n: usize) -> Result<Vec<SymmetricQuadratic>> {
    let dims = ProblemDims::new(n, 1)?;
    let nf = n as f64;
    let mut rays = Vec::with_capacity(n + 1);
    for k in 0..n {
        let c = nf - 1.0 - 2.0 * k as f64;
        rays.push(SymmetricQuadratic::new(dims, nf - 1.0 + c * c, vec![-2.0 * c], vec![1.0])?);
    }
    rays.push(SymmetricQuadratic::new(dims, nf * (nf - 1.0), vec![0.0], vec![-1.0])?);
    Ok(rays)
}

/// Membership in `C_{n,1}`: nonnegative pairing with every extreme ray of
/// `P_{n,1}`. A NonMember verdict carries the violated ray.
pub fn c_n1_membership(m: &MomentVector, tol: f64) -> Result<ConeVerdict> {
    require_d1(m.d())?;
    let n = m.n();
    let rays = p_n1_extreme_rays(n)?;
    let mut facets = Vec::with_capacity(rays.len());
    for (k, q) in rays.iter().enumerate() {
        facets.push(FacetReport {
            k,
            residual: pair(q, m)?,
        });
    }
    let w = worst(&facets);
    let bound = tol * (n as f64).powi(2) * m.scale().max(f64::MIN_POSITIVE);
    Ok(if w.residual >= -bound {
        ConeVerdict::new(
            Status::Member,
            w.residual.abs() < bound,
            Witness::Facet {
                k: w.k,
                residual: w.residual,
            },
        )
    } else {
        ConeVerdict::new(
            Status::NonMember,
            false,
            Witness::SeparatingPolynomial {
                q: rays[w.k].clone(),
                pairing: w.residual,
            },
        )
    })
}

/// `P_Q(X) = A_0 − n A_11 + √n A_1 X + n A_11 X²`, with `A_0` replaced by
/// `n/(n−1) A_0` when `expanded`.
pub fn interval_polynomial(q: &SymmetricQuadratic, expanded: bool) -> Result<[f64; 3]> {
    require_d1(q.d())?;
    let nf = q.n() as f64;
    let a0 = if expanded { nf / (nf - 1.0) * q.a0() } else { q.a0() };
    Ok([a0 - nf * q.aa()[0], nf.sqrt() * q.a()[0], nf * q.aa()[0]])
}

/// Minimum of `c0 + c1 X + c2 X²` over `[lo, hi]`, closed form.
pub fn interval_quadratic_min(c: [f64; 3], lo: f64, hi: f64) -> (f64, f64) {
    let f = |x: f64| c[0] + c[1] * x + c[2] * x * x;
    let mut best = (f(lo), lo);
    let fh = f(hi);
    if fh < best.0 {
        best = (fh, hi);
    }
    if c[2] > 0.0 {
        let xv = -c[1] / (2.0 * c[2]);
        if xv > lo && xv < hi {
            let fv = f(xv);
            if fv < best.0 {
                best = (fv, xv);
            }
        }
    }
    best
}

/// Membership in `Σ_{n,1}` (or `Σ'_{n,1}` when `expanded`): `P_Q ≥ 0` on
/// `[−√n, √n]`.
pub fn sigma_n1_membership(q: &SymmetricQuadratic, expanded: bool, tol: f64) -> Result<ConeVerdict> {
    let c = interval_polynomial(q, expanded)?;
    let r = (q.n() as f64).sqrt();
    let (value, argmin) = interval_quadratic_min(c, -r, r);
    let bound = tol * q.scale();
    let status = if value >= -bound {
        Status::Member
    } else {
        Status::NonMember
    };
    Ok(ConeVerdict::new(
        status,
        value.abs() < bound,
        Witness::IntervalMinimum { value, argmin },
    ))
}

/// Limit cone of the rescaled d=1 cones: `[[B0−B11, B1/2], [B1/2, B11]] ⪰ 0`.
pub fn limit_cone_d1(b: [f64; 3], tol: f64) -> ConeVerdict {
    let m = [[b[0] - b[2], 0.5 * b[1]], [0.5 * b[1], b[2]]];
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = ((m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[0][1]).sqrt();
    let min_eigenvalue = 0.5 * (tr - disc);
    let s = b.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    let psd = m[0][0] >= -tol * s && m[1][1] >= -tol * s && det >= -tol * s * s;
    ConeVerdict::new(
        if psd { Status::Member } else { Status::NonMember },
        min_eigenvalue.abs() < tol * s,
        Witness::Matrix2 {
            matrix: m,
            min_eigenvalue,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{moments_of_configuration, Configuration};

    fn q1(n: usize, a0: f64, a1: f64, a11: f64) -> SymmetricQuadratic {
        SymmetricQuadratic::new(ProblemDims::new(n, 1).unwrap(), a0, vec![a1], vec![a11]).unwrap()
    }

    fn m1(n: usize, z0: f64, z1: f64, z11: f64) -> MomentVector {
        MomentVector::new(ProblemDims::new(n, 1).unwrap(), z0, vec![z1], vec![z11]).unwrap()
    }

    #[test]
    fn p_n1_examples() {
        for n in 2..10 {
            assert!(p_n1_membership(&q1(n, 1.0, 0.0, 0.0), DEFAULT_TOL).unwrap().0.is_member());
        }
        let (v, facets) = p_n1_membership(&q1(2, 0.0, 0.0, -1.0), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::NonMember);
        assert_eq!(facets[0].residual, -2.0);

        // q = (3, 0, −1), n = 3: residual 6 − (3−2k)², minimum −3 at k=0 and k=3.
        let (v, facets) = p_n1_membership(&q1(3, 3.0, 0.0, -1.0), DEFAULT_TOL).unwrap();
        let rs: Vec<f64> = facets.iter().map(|f| f.residual).collect();
        assert_eq!(rs, vec![-3.0, 5.0, 5.0, -3.0]);
        assert!(matches!(v.witness, Witness::Facet { k: 0, residual } if residual == -3.0));
    }

    #[test]
    fn p_n1_rejects_d2() {
        let q = SymmetricQuadratic::constant(ProblemDims::new(3, 2).unwrap(), 1.0).unwrap();
        assert_eq!(p_n1_membership(&q, DEFAULT_TOL).unwrap_err(), ConeError::RequiresD1(2));
    }

    #[test]
    fn extreme_rays_vanish_on_adjacent_levels() {
        for n in 2..12 {
            let rays = p_n1_extreme_rays(n).unwrap();
            for (k, q) in rays.iter().enumerate() {
                let facets = hypercube_residuals(q).unwrap();
                let zeros: Vec<usize> =
                    facets.iter().filter(|f| f.residual.abs() < 1e-9).map(|f| f.k).collect();
                let expected = if k < n { vec![k, k + 1] } else { vec![0, n] };
                assert_eq!(zeros, expected, "n={n} k={k}");
                assert!(facets.iter().all(|f| f.residual > -1e-9));
            }
        }
    }

    #[test]
    fn c_n1_examples() {
        for n in 2..10 {
            assert!(c_n1_membership(&m1(n, 1.0, 0.0, 0.0), DEFAULT_TOL).unwrap().is_member());
        }
        let v = c_n1_membership(&m1(3, 1.0, 6.0, 0.0), DEFAULT_TOL).unwrap();
        assert_eq!(v.status, Status::NonMember);
        let Witness::SeparatingPolynomial { q, pairing } = &v.witness else {
            panic!("expected separator")
        };
        assert!(*pairing < 0.0);
        assert!(p_n1_membership(q, DEFAULT_TOL).unwrap().0.is_member());
        // s_11 ≤ n(n−1) on K_n^1, so (1, 0, 3) is outside C_{2,1}.
        assert_eq!(c_n1_membership(&m1(2, 1.0, 0.0, 3.0), DEFAULT_TOL).unwrap().status, Status::NonMember);
    }

    #[test]
    fn c_n1_contains_all_hypercube_moments() {
        for n in 2..=10 {
            for mask in 0u32..(1 << n) {
                let pts = (0..n)
                    .map(|i| vec![if mask >> i & 1 == 1 { -1.0 } else { 1.0 }])
                    .collect();
                let m = moments_of_configuration(&Configuration::new(pts).unwrap());
                assert!(c_n1_membership(&m, DEFAULT_TOL).unwrap().is_member());
            }
        }
    }

    #[test]
    fn sigma_n1_examples() {
        for n in 2..8 {
            assert!(sigma_n1_membership(&q1(n, 1.0, 0.0, 0.0), false, DEFAULT_TOL).unwrap().is_member());
            let v = sigma_n1_membership(&q1(n, 0.0, 0.0, 1.0), false, DEFAULT_TOL).unwrap();
            assert_eq!(v.status, Status::NonMember);
            match v.witness {
                Witness::IntervalMinimum { value, argmin } => {
                    assert!((value + n as f64).abs() < 1e-12);
                    assert_eq!(argmin, 0.0);
                }
                _ => panic!(),
            }
        }
    }

    #[test]
    fn extreme_rays_lie_in_expanded_sigma() {
        for n in 2..30 {
            for q in p_n1_extreme_rays(n).unwrap() {
                assert!(sigma_n1_membership(&q, true, DEFAULT_TOL).unwrap().is_member(), "n={n}");
            }
        }
    }

    #[test]
    fn strict_containment_witness() {
        // Adjacent-level rays have minimum −A_11 = −1 strictly between lattice
        // points, so they sit in P_{n,1} but outside Σ_{n,1}.
        for n in 2..20 {
            let q = &p_n1_extreme_rays(n).unwrap()[0];
            assert!(p_n1_membership(q, DEFAULT_TOL).unwrap().0.is_member());
            let v = sigma_n1_membership(q, false, DEFAULT_TOL).unwrap();
            assert_eq!(v.status, Status::NonMember);
            if let Witness::IntervalMinimum { value, .. } = v.witness {
                assert!((value + 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interval_min_handles_linear_and_concave() {
        assert_eq!(interval_quadratic_min([0.0, 1.0, 0.0], -2.0, 2.0), (-2.0, -2.0));
        assert_eq!(interval_quadratic_min([0.0, 1.0, -1.0], -2.0, 2.0), (-6.0, -2.0));
        assert_eq!(interval_quadratic_min([1.0, 0.0, 1.0], -2.0, 2.0), (1.0, 0.0));
    }

    #[test]
    fn limit_cone_examples() {
        assert!(limit_cone_d1([1.0, 0.0, 0.0], DEFAULT_TOL).is_member());
        assert_eq!(limit_cone_d1([0.0, 0.0, 1.0], DEFAULT_TOL).status, Status::NonMember);
        assert_eq!(limit_cone_d1([1.0, 2.0, 1.0], DEFAULT_TOL).status, Status::NonMember);
        assert!(limit_cone_d1([2.0, 2.0, 1.0], DEFAULT_TOL).is_member());
    }
}

//! Semialgebraic and LMI tests for the moment cone `C_{n,d}`.
//!
//! With `z'_0 = z_0` (necessary side) or `z'_0 = (n−1)/n·z_0` (sufficient
//! side), both tests read
//!
//! ```text
//! Σ_α max{ z'_0 z_αα/(n−1), z_α²/n }  ≤  z'_0² + Σ_α z'_0 z_αα/n
//! ```
//!
//! The residual is `rhs − lhs`. Expanding each `max` gives `2^d` linear
//! alternatives, indexed by a bit pattern with the first axis in the most
//! significant bit and a set bit selecting the `z_αα` term.

use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::linalg;
use crate::model::{pair, MomentVector, ProblemDims, RescaledMomentVector, SymmetricQuadratic};
use crate::verdict::{ConeVerdict, Status, Witness};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const MAX_EXPANDED_D: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Necessary,
    Sufficient,
}

impl Side {
    fn effective_z0(self, m: &MomentVector) -> f64 {
        match self {
            Side::Necessary => m.z0(),
            Side::Sufficient => (m.n() as f64 - 1.0) / m.n() as f64 * m.z0(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub side: Side,
    /// Either the single max-form residual or all `2^d` expanded residuals.
    pub terms: Vec<f64>,
    /// Max-form residual `rhs − lhs`; equals the minimum of the expanded ones.
    pub residual: f64,
    /// Per axis, whether the `z_αα` alternative attains the max.
    pub worst_pattern: Vec<bool>,
}

impl InequalityReport {
    /// Bit index of `worst_pattern` (first axis most significant).
    pub fn worst_index(&self) -> u64 {
        self.worst_pattern
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }
}

/// Residual tolerance for moment inequalities: every term is bounded by the
/// square of [`MomentVector::scale`], and there are `d+1` of them.
pub fn residual_bound(m: &MomentVector, tol: f64) -> f64 {
    tol * (m.d() as f64 + 1.0) * m.scale().powi(2)
}

struct Terms {
    zz_terms: Vec<f64>,
    z_terms: Vec<f64>,
    rhs: f64,
}

fn terms(m: &MomentVector, side: Side) -> Terms {
    let n = m.n() as f64;
    let z0 = side.effective_z0(m);
    let zz_terms = m.zz().iter().map(|zz| z0 * zz / (n - 1.0)).collect();
    let z_terms = m.z().iter().map(|z| z * z / n).collect();
    let rhs = z0 * z0 + m.zz().iter().map(|zz| z0 * zz / n).sum::<f64>();
    Terms {
        zz_terms,
        z_terms,
        rhs,
    }
}

fn max_form(m: &MomentVector, side: Side) -> InequalityReport {
    let t = terms(m, side);
    let worst_pattern: Vec<bool> = t.zz_terms.iter().zip(&t.z_terms).map(|(a, b)| a >= b).collect();
    let lhs: f64 = t.zz_terms.iter().zip(&t.z_terms).map(|(a, b)| a.max(*b)).sum();
    let residual = t.rhs - lhs;
    InequalityReport {
        side,
        terms: vec![residual],
        residual,
        worst_pattern,
    }
}

fn decide(m: &MomentVector, side: Side, tol: f64) -> (bool, InequalityReport) {
    let report = max_form(m, side);
    if m.is_zero() {
        return (true, report);
    }
    let ok = m.z0() > tol * m.scale() && report.residual >= -residual_bound(m, tol);
    (ok, report)
}

/// `z_0 > 0` and the necessary inequality; violation proves `m ∉ C_{n,d}`.
pub fn necessary_condition(m: &MomentVector, tol: f64) -> (bool, InequalityReport) {
    decide(m, Side::Necessary, tol)
}

/// `z_0 > 0` and the sufficient inequality; success proves `m ∈ C_{n,d}`.
pub fn sufficient_condition(m: &MomentVector, tol: f64) -> (bool, InequalityReport) {
    decide(m, Side::Sufficient, tol)
}

/// All `2^d` alternatives of the max-form inequality.
pub fn expand_inequalities(m: &MomentVector, side: Side) -> Result<InequalityReport> {
    let d = m.d();
    if d > MAX_EXPANDED_D {
        return Err(ConeError::TooManyPatterns(d));
    }
    let t = terms(m, side);
    let residuals: Vec<f64> = (0..1u64 << d)
        .map(|p| {
            let lhs: f64 = (0..d)
                .map(|a| {
                    if (p >> (d - 1 - a)) & 1 == 1 {
                        t.zz_terms[a]
                    } else {
                        t.z_terms[a]
                    }
                })
                .sum();
            t.rhs - lhs
        })
        .collect();
    let mut report = max_form(m, side);
    report.terms = residuals;
    Ok(report)
}

/// A polynomial in `Σ_{n,d}` whose pairing with `m` is negative, for `m`
/// failing the necessary condition.
///
/// For `z_0 > 0` this is the tangent at `t = z/z_0` of the violated
/// alternative; its pairing equals `residual/z_0`.
pub fn separating_polynomial(m: &MomentVector, tol: f64) -> Result<(SymmetricQuadratic, f64)> {
    let dims = m.dims();
    let n = dims.nf();
    if m.z0() < 0.0 {
        let q = SymmetricQuadratic::constant(dims, 1.0)?;
        let p = pair(&q, m)?;
        return Ok((q, p));
    }
    let report = max_form(m, Side::Necessary);
    if m.z0() > tol * m.scale() || (m.z0() > 0.0 && report.residual < 0.0) {
        let t: Vec<f64> = m.z().iter().map(|z| z / m.z0()).collect();
        let q = tangent_polynomial(dims, &t, &report.worst_pattern)?;
        let p = pair(&q, m)?;
        return Ok((q, p));
    }
    // Vanishing mass: separate with a steep tangent along sign(z).
    let pattern: Vec<bool> = m
        .z()
        .iter()
        .zip(m.zz())
        .map(|(&z, &zz)| z == 0.0 && zz >= 0.0)
        .collect();
    let mut k = 1.0 / m.scale().max(f64::MIN_POSITIVE) * n.sqrt();
    let mut best = None;
    for _ in 0..200 {
        let t: Vec<f64> = m.z().iter().map(|&z| k * z.signum() * f64::from(z != 0.0)).collect();
        let q = tangent_polynomial(dims, &t, &pattern)?;
        let p = pair(&q, m)?;
        if p < 0.0 {
            return Ok((q, p));
        }
        best = Some((q, p));
        k *= 2.0;
    }
    best.ok_or_else(|| ConeError::Degenerate("no separating polynomial".into()))
}

/// `A_0 = 1 + Σ_U t_α²/n`, `A_α = −2t_α/n` and `A_αα = 1/n` on `U`,
/// `A_αα = −1/(n(n−1))` on `T`, where `T` is the set of flagged axes.
fn tangent_polynomial(dims: ProblemDims, t: &[f64], on_zz: &[bool]) -> Result<SymmetricQuadratic> {
    let n = dims.nf();
    let mut a0 = 1.0;
    let mut a = vec![0.0; dims.d];
    let mut aa = vec![0.0; dims.d];
    for i in 0..dims.d {
        if on_zz[i] {
            aa[i] = -1.0 / (n * (n - 1.0));
        } else {
            a0 += t[i] * t[i] / n;
            a[i] = -2.0 * t[i] / n;
            aa[i] = 1.0 / n;
        }
    }
    SymmetricQuadratic::new(dims, a0, a, aa)
}

/// Three-way verdict: sufficient ⇒ Member, necessary fails ⇒ NonMember,
/// otherwise Indeterminate carrying both residuals.
pub fn classify(m: &MomentVector, tol: f64) -> Result<ConeVerdict> {
    let (nec_ok, nec) = necessary_condition(m, tol);
    let (suf_ok, suf) = sufficient_condition(m, tol);
    let bound = residual_bound(m, tol);
    if m.is_zero() {
        let w = MomentWitnessMatrix::zero(m.dims());
        return Ok(ConeVerdict::new(Status::Member, true, Witness::MomentMatrix(w)));
    }
    if suf_ok {
        let (_, w) = lmi_dual_feasibility(m, Side::Sufficient, tol)?;
        let w = w.expect("sufficient side has z0 > 0");
        return Ok(ConeVerdict::new(
            Status::Member,
            suf.residual.abs() < bound,
            Witness::MomentMatrix(w),
        ));
    }
    if !nec_ok {
        let (q, pairing) = separating_polynomial(m, tol)?;
        return Ok(ConeVerdict::new(
            Status::NonMember,
            nec.residual.abs() < bound,
            Witness::SeparatingPolynomial { q, pairing },
        ));
    }
    Ok(ConeVerdict::new(
        Status::Indeterminate,
        nec.residual.abs() < bound,
        Witness::Gap {
            necessary: nec,
            sufficient: suf,
        },
    ))
}

/// Explicit PSD certificate of size `2d+2`.
///
/// Index 0 is the mass row, `1..=d` the first-moment block, `d+1..=2d` the
/// second diagonal block and `2d+1` the corner `x_0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentWitnessMatrix {
    pub side: Side,
    pub x: Vec<Vec<f64>>,
    pub xdiag: Vec<f64>,
    pub x0: f64,
}

impl MomentWitnessMatrix {
    fn zero(dims: ProblemDims) -> Self {
        let k = 2 * dims.d + 2;
        Self {
            side: Side::Necessary,
            x: vec![vec![0.0; k]; k],
            xdiag: vec![0.0; dims.d],
            x0: 0.0,
        }
    }

    pub fn size(&self) -> usize {
        self.x.len()
    }
}

/// Schur-complement construction of the witness matrix. Member iff the
/// corner `x_0 = residual/z'_0` is nonnegative within tolerance.
pub fn lmi_dual_feasibility(
    m: &MomentVector,
    side: Side,
    tol: f64,
) -> Result<(ConeVerdict, Option<MomentWitnessMatrix>)> {
    let n = m.n() as f64;
    let d = m.d();
    if m.is_zero() {
        let w = MomentWitnessMatrix::zero(m.dims());
        return Ok((
            ConeVerdict::new(Status::Member, true, Witness::MomentMatrix(w.clone())),
            Some(w),
        ));
    }
    if m.z0() <= tol * m.scale() {
        let (q, pairing) = separating_polynomial(m, tol)?;
        return Ok((
            ConeVerdict::new(Status::NonMember, false, Witness::SeparatingPolynomial { q, pairing }),
            None,
        ));
    }
    let z0 = side.effective_z0(m);
    let k = 2 * d + 2;
    let mut x = vec![vec![0.0; k]; k];
    x[0][0] = z0;
    let xdiag: Vec<f64> = (0..d)
        .map(|a| {
            (m.zz()[a] / (n - 1.0))
                .max(m.z()[a] * m.z()[a] / (n * z0))
                .max(0.0)
        })
        .collect();
    for i in 0..d {
        x[0][i + 1] = m.z()[i] / n.sqrt();
        x[i + 1][0] = x[0][i + 1];
        for j in 0..d {
            x[i + 1][j + 1] = if i == j {
                xdiag[i]
            } else {
                m.z()[i] * m.z()[j] / (n * z0)
            };
        }
        x[d + 1 + i][d + 1 + i] = (n - 1.0) / n * xdiag[i] - m.zz()[i] / n;
    }
    let x0 = z0 + m.zz().iter().sum::<f64>() / n - xdiag.iter().sum::<f64>();
    x[k - 1][k - 1] = x0;
    let w = MomentWitnessMatrix {
        side,
        x,
        xdiag,
        x0,
    };
    let bound = residual_bound(m, tol) / z0;
    let status = if x0 >= -bound {
        Status::Member
    } else {
        Status::NonMember
    };
    Ok((
        ConeVerdict::new(status, x0.abs() < bound, Witness::MomentMatrix(w.clone())),
        Some(w),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentWitnessCheck {
    /// Largest violation among `⟨D,X⟩ = 0`, `⟨M_0,X⟩ = z_0`, `⟨M_α,X⟩ = z_α`,
    /// `⟨M_αα,X⟩ = z_αα`.
    pub linear_residual: f64,
    pub min_eigenvalue: f64,
}

/// Re-validates a witness against the linear constraints and by a dense
/// eigenvalue computation, independently of its construction.
pub fn verify_moment_witness(w: &MomentWitnessMatrix, m: &MomentVector) -> Result<MomentWitnessCheck> {
    let n = m.n() as f64;
    let d = m.d();
    let k = 2 * d + 2;
    if w.size() != k {
        return Err(ConeError::BadLength {
            field: "witness",
            expected: k,
            got: w.size(),
        });
    }
    let x = &w.x;
    let mass_scale = match w.side {
        Side::Necessary => 1.0,
        Side::Sufficient => n / (n - 1.0),
    };
    // D = diag(−1, 1/n ×d, 1 ×d, 1).
    let mut dx = -x[0][0] + x[k - 1][k - 1];
    for a in 0..d {
        dx += x[a + 1][a + 1] / n + x[d + 1 + a][d + 1 + a];
    }
    let mut worst = dx.abs().max((mass_scale * x[0][0] - m.z0()).abs());
    for a in 0..d {
        let ma = n.sqrt() / 2.0 * (x[0][a + 1] + x[a + 1][0]);
        let maa = (n - 1.0) * x[a + 1][a + 1] - n * x[d + 1 + a][d + 1 + a];
        worst = worst.max((ma - m.z()[a]).abs()).max((maa - m.zz()[a]).abs());
    }
    let mat = nalgebra::DMatrix::from_fn(k, k, |i, j| x[i][j]);
    Ok(MomentWitnessCheck {
        linear_residual: worst,
        min_eigenvalue: linalg::min_eigenvalue(&mat),
    })
}

/// Large-`n` limit cone in rescaled coordinates:
/// `z_0 > 0` and `Σ max{z_0 z̃_αα, z̃_α²} ≤ z_0² + Σ z_0 z̃_αα`.
pub fn limit_cone_membership(rm: &RescaledMomentVector, tol: f64) -> ConeVerdict {
    let residual = limit_residual(rm);
    if rm.is_zero() {
        return ConeVerdict::new(Status::Member, true, Witness::LimitResidual { residual });
    }
    let scale = rescaled_scale(rm);
    let bound = tol * (rm.d() as f64 + 1.0) * scale * scale;
    let ok = rm.z0 > tol * scale && residual >= -bound;
    ConeVerdict::new(
        if ok { Status::Member } else { Status::NonMember },
        residual.abs() < bound,
        Witness::LimitResidual { residual },
    )
}

pub fn limit_residual(rm: &RescaledMomentVector) -> f64 {
    let z0 = rm.z0;
    let lhs: f64 = rm
        .zt
        .iter()
        .zip(&rm.zzt)
        .map(|(z, zz)| (z0 * zz).max(z * z))
        .sum();
    z0 * z0 + rm.zzt.iter().map(|zz| z0 * zz).sum::<f64>() - lhs
}

fn rescaled_scale(rm: &RescaledMomentVector) -> f64 {
    rm.zt
        .iter()
        .chain(&rm.zzt)
        .fold(rm.z0.abs(), |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sos::sigma_membership_lmi;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mv(n: usize, z0: f64, z: Vec<f64>, zz: Vec<f64>) -> MomentVector {
        MomentVector::new(ProblemDims::new(n, z.len()).unwrap(), z0, z, zz).unwrap()
    }

    #[test]
    fn necessary_examples() {
        assert!(necessary_condition(&mv(5, 1.0, vec![0.0; 2], vec![0.0; 2]), DEFAULT_TOL).0);
        let (ok, r) = necessary_condition(&mv(2, 1.0, vec![2.0], vec![2.0]), DEFAULT_TOL);
        assert!(ok);
        assert_eq!(r.residual, 0.0);
        for n in 2..8 {
            let nf = n as f64;
            assert!(!necessary_condition(&mv(n, 1.0, vec![2.0 * nf], vec![0.0]), DEFAULT_TOL).0);
        }
        assert!(necessary_condition(&MomentVector::zero(ProblemDims::new(3, 2).unwrap()), DEFAULT_TOL).0);
        assert!(!necessary_condition(&mv(3, 0.0, vec![0.0], vec![1.0]), DEFAULT_TOL).0);
    }

    #[test]
    fn sufficient_examples() {
        for n in 2..8 {
            assert!(sufficient_condition(&mv(n, 1.0, vec![0.0; 3], vec![0.0; 3]), DEFAULT_TOL).0);
        }
        assert!(!sufficient_condition(&mv(2, 1.0, vec![2.0], vec![2.0]), DEFAULT_TOL).0);
        let (ok, r) = sufficient_condition(&mv(4, 1.0, vec![0.0], vec![3.0]), DEFAULT_TOL);
        assert!(ok);
        assert!((r.residual - (1.125 - 0.75)).abs() < 1e-15);
    }

    #[test]
    fn classify_examples() {
        assert!(classify(&mv(4, 1.0, vec![0.0], vec![0.0]), DEFAULT_TOL).unwrap().is_member());
        let v = classify(&mv(3, 1.0, vec![6.0], vec![0.0]), DEFAULT_TOL).unwrap();
        assert!(v.is_non_member());
        assert_eq!(
            classify(&mv(2, 1.0, vec![2.0], vec![2.0]), DEFAULT_TOL).unwrap().status,
            Status::Indeterminate
        );
    }

    #[test]
    fn lmi_template_by_hand() {
        let (v, w) = lmi_dual_feasibility(&mv(2, 1.0, vec![2.0], vec![2.0]), Side::Necessary, DEFAULT_TOL)
            .unwrap();
        let w = w.unwrap();
        assert!(v.is_member() && v.boundary);
        assert_eq!(w.xdiag, vec![2.0]);
        assert_eq!(w.x0, 0.0);

        let m = mv(4, 1.0, vec![0.0; 2], vec![0.0; 2]);
        let (v, w) = lmi_dual_feasibility(&m, Side::Necessary, DEFAULT_TOL).unwrap();
        let w = w.unwrap();
        assert!(v.is_member());
        assert_eq!(w.x0, 1.0);
        assert_eq!(w.xdiag, vec![0.0, 0.0]);
        let c = verify_moment_witness(&w, &m).unwrap();
        assert_eq!(c.linear_residual, 0.0);
    }

    #[test]
    fn expanded_minimum_matches_max_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.random_range(2..30);
            let d = rng.random_range(1..6);
            let dims = ProblemDims::new(n, d).unwrap();
            let flat: Vec<f64> = (0..2 * d + 1).map(|_| rng.random_range(-3.0..3.0)).collect();
            let m = MomentVector::from_flat(dims, &flat).unwrap();
            for side in [Side::Necessary, Side::Sufficient] {
                let r = expand_inequalities(&m, side).unwrap();
                assert_eq!(r.terms.len(), 1 << d);
                let min = r.terms.iter().copied().fold(f64::INFINITY, f64::min);
                assert!((min - r.residual).abs() <= 1e-12 * (1.0 + r.residual.abs()));
                assert_eq!(r.terms[r.worst_index() as usize], min);
            }
        }
        assert_eq!(expand_inequalities(&mv(3, 1.0, vec![0.0], vec![0.0]), Side::Necessary).unwrap().terms.len(), 2);
        let big = MomentVector::zero(ProblemDims::new(3, 21).unwrap());
        assert!(matches!(expand_inequalities(&big, Side::Necessary), Err(ConeError::TooManyPatterns(21))));
    }

    #[test]
    fn separators_are_sos_and_separate() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut seen = 0;
        while seen < 500 {
            let n = rng.random_range(2..20);
            let d = rng.random_range(1..5);
            let dims = ProblemDims::new(n, d).unwrap();
            let mut flat: Vec<f64> = (0..2 * d + 1).map(|_| rng.random_range(-4.0..4.0)).collect();
            if rng.random_bool(0.1) {
                flat[0] = 0.0;
            }
            let m = MomentVector::from_flat(dims, &flat).unwrap();
            if necessary_condition(&m, DEFAULT_TOL).0 {
                continue;
            }
            seen += 1;
            let (q, p) = separating_polynomial(&m, DEFAULT_TOL).unwrap();
            assert!(p < 0.0, "{m:?} {q:?} {p}");
            assert!(sigma_membership_lmi(&q, 1e-9).unwrap().0.is_member(), "{q:?}");
        }
    }

    #[test]
    fn limit_cone_examples() {
        let r = |z0: f64, zt: f64, zzt: f64| RescaledMomentVector::new(z0, vec![zt], vec![zzt]).unwrap();
        assert!(limit_cone_membership(&r(1.0, 0.0, 0.0), DEFAULT_TOL).is_member());
        assert!(limit_cone_membership(&r(1.0, 2.0, 1.0), DEFAULT_TOL).is_non_member());
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..2000 {
            let (z0, zt, zzt) = (
                rng.random_range(0.01..2.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let member = limit_cone_membership(&r(z0, zt, zzt), 0.0).is_member();
            let psd = z0 + zzt >= 0.0 && (z0 + zzt) * z0 - zt * zt >= 0.0;
            assert_eq!(member, psd, "{z0} {zt} {zzt}");
        }
    }
}

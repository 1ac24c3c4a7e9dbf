//! Shared domain types: the coefficient space `V_{n,d}` spanned by
//! `1, s_α, s_αα`, the matching moment coordinates, and configurations of
//! `n` points in the closed unit `d`-ball.
//!
//! `s_α = Σ_i ξ_{i,α}` and `s_αα = Σ_{i≠j} ξ_{i,α} ξ_{j,α}` over ordered
//! pairs, so `s_αα = s_α² − Σ_i ξ_{i,α}²`.

use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};

/// Slack allowed on `‖x_i‖ ≤ 1` when validating configurations.
pub const BALL_EPS: f64 = 1e-12;

/// Number of balls `n` and ball dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemDims {
    pub n: usize,
    pub d: usize,
}

impl ProblemDims {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(ConeError::InvalidDims { n, d });
        }
        Ok(Self { n, d })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub(crate) fn ensure_same(&self, other: &ProblemDims) -> Result<()> {
        if self != other {
            return Err(ConeError::DimensionMismatch {
                expected_n: self.n,
                expected_d: self.d,
                n: other.n,
                d: other.d,
            });
        }
        Ok(())
    }
}

fn check_vec(field: &'static str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(ConeError::BadLength {
            field,
            expected: d,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(ConeError::NonFinite(field));
    }
    Ok(())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `Q = A_0 + Σ A_α s_α + Σ A_αα s_αα`, stored as its coefficient tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadraticWire", into = "QuadraticWire")]
pub struct SymmetricQuadratic {
    dims: ProblemDims,
    a0: f64,
    a: Vec<f64>,
    aa: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct QuadraticWire {
    n: usize,
    d: usize,
    a0: f64,
    a: Vec<f64>,
    aa: Vec<f64>,
}

impl TryFrom<QuadraticWire> for SymmetricQuadratic {
    type Error = ConeError;
    fn try_from(w: QuadraticWire) -> Result<Self> {
        SymmetricQuadratic::new(ProblemDims::new(w.n, w.d)?, w.a0, w.a, w.aa)
    }
}

impl From<SymmetricQuadratic> for QuadraticWire {
    fn from(q: SymmetricQuadratic) -> Self {
        QuadraticWire {
            n: q.dims.n,
            d: q.dims.d,
            a0: q.a0,
            a: q.a,
            aa: q.aa,
        }
    }
}

impl SymmetricQuadratic {
    pub fn new(dims: ProblemDims, a0: f64, a: Vec<f64>, aa: Vec<f64>) -> Result<Self> {
        if !a0.is_finite() {
            return Err(ConeError::NonFinite("a0"));
        }
        check_vec("a", &a, dims.d)?;
        check_vec("aa", &aa, dims.d)?;
        Ok(Self { dims, a0, a, aa })
    }

    /// The constant polynomial `c`.
    pub fn constant(dims: ProblemDims, c: f64) -> Result<Self> {
        Self::new(dims, c, vec![0.0; dims.d], vec![0.0; dims.d])
    }

    /// Flat layout `[A_0, A_1..A_d, A_11..A_dd]`.
    pub fn from_flat(dims: ProblemDims, flat: &[f64]) -> Result<Self> {
        let d = dims.d;
        if flat.len() != 2 * d + 1 {
            return Err(ConeError::BadLength {
                field: "coefficients",
                expected: 2 * d + 1,
                got: flat.len(),
            });
        }
        Self::new(
            dims,
            flat[0],
            flat[1..=d].to_vec(),
            flat[d + 1..].to_vec(),
        )
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dims.d + 1);
        v.push(self.a0);
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.aa);
        v
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }
    pub fn n(&self) -> usize {
        self.dims.n
    }
    pub fn d(&self) -> usize {
        self.dims.d
    }
    pub fn a0(&self) -> f64 {
        self.a0
    }
    pub fn a(&self) -> &[f64] {
        &self.a
    }
    pub fn aa(&self) -> &[f64] {
        &self.aa
    }

    pub fn with_a0(&self, a0: f64) -> Self {
        Self {
            a0,
            ..self.clone()
        }
    }

    pub fn inf_norm(&self) -> f64 {
        self.a0.abs().max(inf_norm(&self.a)).max(inf_norm(&self.aa))
    }

    /// Normalisation used for residual tolerances: `max(1, ‖q‖∞·n²)`.
    pub fn scale(&self) -> f64 {
        (self.inf_norm() * self.dims.nf().powi(2)).max(1.0)
    }

    /// d=1 rescaling `(B_0, B_1, B_11) = (A_0, √n A_1, n A_11)`.
    pub fn rescale_d1(&self) -> Result<[f64; 3]> {
        if self.dims.d != 1 {
            return Err(ConeError::RequiresD1(self.dims.d));
        }
        let n = self.dims.nf();
        Ok([self.a0, n.sqrt() * self.a[0], n * self.aa[0]])
    }

    pub fn from_rescaled_d1(n: usize, b: [f64; 3]) -> Result<Self> {
        let dims = ProblemDims::new(n, 1)?;
        let nf = dims.nf();
        Self::new(dims, b[0], vec![b[1] / nf.sqrt()], vec![b[2] / nf])
    }
}

/// Candidate moments `(z_0, z_α, z_αα)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentWire", into = "MomentWire")]
pub struct MomentVector {
    dims: ProblemDims,
    z0: f64,
    z: Vec<f64>,
    zz: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MomentWire {
    n: usize,
    d: usize,
    z0: f64,
    z: Vec<f64>,
    zz: Vec<f64>,
}

impl TryFrom<MomentWire> for MomentVector {
    type Error = ConeError;
    fn try_from(w: MomentWire) -> Result<Self> {
        MomentVector::new(ProblemDims::new(w.n, w.d)?, w.z0, w.z, w.zz)
    }
}

impl From<MomentVector> for MomentWire {
    fn from(m: MomentVector) -> Self {
        MomentWire {
            n: m.dims.n,
            d: m.dims.d,
            z0: m.z0,
            z: m.z,
            zz: m.zz,
        }
    }
}

impl MomentVector {
    pub fn new(dims: ProblemDims, z0: f64, z: Vec<f64>, zz: Vec<f64>) -> Result<Self> {
        if !z0.is_finite() {
            return Err(ConeError::NonFinite("z0"));
        }
        check_vec("z", &z, dims.d)?;
        check_vec("zz", &zz, dims.d)?;
        Ok(Self { dims, z0, z, zz })
    }

    pub fn zero(dims: ProblemDims) -> Self {
        Self {
            dims,
            z0: 0.0,
            z: vec![0.0; dims.d],
            zz: vec![0.0; dims.d],
        }
    }

    /// Flat layout `[z_0, z_1..z_d, z_11..z_dd]`.
    pub fn from_flat(dims: ProblemDims, flat: &[f64]) -> Result<Self> {
        let d = dims.d;
        if flat.len() != 2 * d + 1 {
            return Err(ConeError::BadLength {
                field: "moments",
                expected: 2 * d + 1,
                got: flat.len(),
            });
        }
        Self::new(
            dims,
            flat[0],
            flat[1..=d].to_vec(),
            flat[d + 1..].to_vec(),
        )
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dims.d + 1);
        v.push(self.z0);
        v.extend_from_slice(&self.z);
        v.extend_from_slice(&self.zz);
        v
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }
    pub fn n(&self) -> usize {
        self.dims.n
    }
    pub fn d(&self) -> usize {
        self.dims.d
    }
    pub fn z0(&self) -> f64 {
        self.z0
    }
    pub fn z(&self) -> &[f64] {
        &self.z
    }
    pub fn zz(&self) -> &[f64] {
        &self.zz
    }

    pub fn is_zero(&self) -> bool {
        self.z0 == 0.0 && self.z.iter().all(|&x| x == 0.0) && self.zz.iter().all(|&x| x == 0.0)
    }

    /// Magnitude in rescaled coordinates: `max(|z_0|, |z_α|/√n, |z_αα|/n)`.
    /// Every term of the cone inequalities is quadratic in this quantity.
    pub fn scale(&self) -> f64 {
        let n = self.dims.nf();
        self.z0
            .abs()
            .max(inf_norm(&self.z) / n.sqrt())
            .max(inf_norm(&self.zz) / n)
    }

    /// `self + w·other` (conic combinations of moment vectors).
    pub fn add_scaled(&self, w: f64, other: &MomentVector) -> Result<Self> {
        self.dims.ensure_same(&other.dims)?;
        Ok(Self {
            dims: self.dims,
            z0: self.z0 + w * other.z0,
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + w * b).collect(),
            zz: self.zz.iter().zip(&other.zz).map(|(a, b)| a + w * b).collect(),
        })
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            dims: self.dims,
            z0: w * self.z0,
            z: self.z.iter().map(|x| w * x).collect(),
            zz: self.zz.iter().map(|x| w * x).collect(),
        }
    }
}

/// Moments in the rescaled coordinates `z̃_α = z_α/√n`, `z̃_αα = z_αα/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledMomentVector {
    pub z0: f64,
    pub zt: Vec<f64>,
    pub zzt: Vec<f64>,
}

impl RescaledMomentVector {
    pub fn new(z0: f64, zt: Vec<f64>, zzt: Vec<f64>) -> Result<Self> {
        if !z0.is_finite() {
            return Err(ConeError::NonFinite("z0"));
        }
        check_vec("zt", &zt, zt.len())?;
        check_vec("zzt", &zzt, zt.len())?;
        Ok(Self { z0, zt, zzt })
    }

    pub fn d(&self) -> usize {
        self.zt.len()
    }

    pub fn is_zero(&self) -> bool {
        self.z0 == 0.0 && self.zt.iter().all(|&x| x == 0.0) && self.zzt.iter().all(|&x| x == 0.0)
    }

    /// Inverse of [`rescale_moments`].
    pub fn unrescale(&self, n: usize) -> Result<MomentVector> {
        let dims = ProblemDims::new(n, self.d())?;
        let nf = dims.nf();
        MomentVector::new(
            dims,
            self.z0,
            self.zt.iter().map(|x| x * nf.sqrt()).collect(),
            self.zzt.iter().map(|x| x * nf).collect(),
        )
    }
}

pub fn rescale_moments(m: &MomentVector) -> RescaledMomentVector {
    let n = m.dims.nf();
    RescaledMomentVector {
        z0: m.z0,
        zt: m.z.iter().map(|x| x / n.sqrt()).collect(),
        zzt: m.zz.iter().map(|x| x / n).collect(),
    }
}

/// `n` points of the closed unit `d`-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    dims: ProblemDims,
    points: Vec<Vec<f64>>,
}

impl Configuration {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        let dims = ProblemDims::new(n, d)?;
        for (i, p) in points.iter().enumerate() {
            check_vec("point", p, d)?;
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1.0 + BALL_EPS {
                return Err(ConeError::OutsideBall { index: i, norm });
            }
        }
        Ok(Self { dims, points })
    }

    /// d=1 hypercube vertex with the first `k` coordinates equal to −1.
    pub fn hypercube(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(ConeError::InvalidArgument(format!("k = {k} > n = {n}")));
        }
        Self::new((0..n).map(|i| vec![if i < k { -1.0 } else { 1.0 }]).collect())
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
    pub fn into_points(self) -> Vec<Vec<f64>> {
        self.points
    }
}

/// Power sums `(s_α, s_αα)` of a configuration.
pub fn power_sums(config: &Configuration) -> (Vec<f64>, Vec<f64>) {
    let d = config.dims.d;
    let mut s = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for p in &config.points {
        for a in 0..d {
            s[a] += p[a];
            sq[a] += p[a] * p[a];
        }
    }
    let ss = s.iter().zip(&sq).map(|(s, q)| s * s - q).collect();
    (s, ss)
}

pub fn evaluate(q: &SymmetricQuadratic, config: &Configuration) -> Result<f64> {
    q.dims.ensure_same(&config.dims)?;
    let (s, ss) = power_sums(config);
    Ok(q.a0 + dot(&q.a, &s) + dot(&q.aa, &ss))
}

/// Moments of the unit point mass at `config`.
pub fn moments_of_configuration(config: &Configuration) -> MomentVector {
    let (s, ss) = power_sums(config);
    MomentVector {
        dims: config.dims,
        z0: 1.0,
        z: s,
        zz: ss,
    }
}

/// The duality pairing `⟨q, m⟩ = A_0 z_0 + Σ A_α z_α + Σ A_αα z_αα`.
pub fn pair(q: &SymmetricQuadratic, m: &MomentVector) -> Result<f64> {
    q.dims.ensure_same(&m.dims)?;
    Ok(q.a0 * m.z0 + dot(&q.a, &m.z) + dot(&q.aa, &m.zz))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

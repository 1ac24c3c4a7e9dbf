//! Atomic symmetric measures and the explicit near-target configuration
//! used to show `Σ'_{n,d}` polynomials are nonnegative on the moment side.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};
use crate::model::{moments_of_configuration, Configuration, MomentVector, ProblemDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Ball,
    Sphere,
    /// Signed unit axis vectors `±e_α`.
    Hypercube,
}

fn sphere_point<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-300 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

pub fn sample_point<R: Rng + ?Sized>(d: usize, support: Support, rng: &mut R) -> Vec<f64> {
    match support {
        Support::Sphere => sphere_point(d, rng),
        Support::Ball => {
            let u: f64 = rng.random();
            let r = u.powf(1.0 / d as f64);
            sphere_point(d, rng).into_iter().map(|x| x * r).collect()
        }
        Support::Hypercube => {
            let mut v = vec![0.0; d];
            v[rng.random_range(0..d)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            v
        }
    }
}

pub fn sample_configuration_with<R: Rng + ?Sized>(
    dims: ProblemDims,
    support: Support,
    rng: &mut R,
) -> Configuration {
    let points = (0..dims.n).map(|_| sample_point(dims.d, support, rng)).collect();
    Configuration::new(points).expect("sampled points lie in the ball")
}

/// `n` i.i.d. points drawn from `support`, deterministic in `seed`.
pub fn sample_configuration(dims: ProblemDims, seed: u64, support: Support) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_configuration_with(dims, support, &mut rng)
}

pub(crate) fn random_ball_configuration<R: Rng + ?Sized>(dims: ProblemDims, rng: &mut R) -> Configuration {
    sample_configuration_with(dims, Support::Ball, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub config: Configuration,
}

/// Finite conic combination of point masses on `K_n^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureWire", into = "MeasureWire")]
pub struct AtomicMeasure {
    dims: ProblemDims,
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct AtomWire {
    w: f64,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MeasureWire {
    atoms: Vec<AtomWire>,
}

impl TryFrom<MeasureWire> for AtomicMeasure {
    type Error = ConeError;
    fn try_from(w: MeasureWire) -> Result<Self> {
        let atoms = w
            .atoms
            .into_iter()
            .map(|a| {
                Ok(Atom {
                    weight: a.w,
                    config: Configuration::new(a.points)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::new(atoms)
    }
}

impl From<AtomicMeasure> for MeasureWire {
    fn from(m: AtomicMeasure) -> Self {
        MeasureWire {
            atoms: m
                .atoms
                .into_iter()
                .map(|a| AtomWire {
                    w: a.weight,
                    points: a.config.into_points(),
                })
                .collect(),
        }
    }
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let dims = atoms
            .first()
            .map(|a| a.config.dims())
            .ok_or_else(|| ConeError::InvalidArgument("measure needs at least one atom".into()))?;
        for a in &atoms {
            dims.ensure_same(&a.config.dims())?;
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(ConeError::InvalidArgument(format!("atom weight {} is not a finite nonnegative number", a.weight)));
            }
        }
        Ok(Self { dims, atoms })
    }

    pub fn dims(&self) -> ProblemDims {
        self.dims
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }
}

pub fn measure_moments(mu: &AtomicMeasure) -> MomentVector {
    mu.atoms.iter().fold(MomentVector::zero(mu.dims), |acc, a| {
        acc.add_scaled(a.weight, &moments_of_configuration(&a.config))
            .expect("atoms share dimensions")
    })
}

/// `atoms` configurations from `support` with Exp(1) weights.
pub fn random_atomic_measure<R: Rng + ?Sized>(
    dims: ProblemDims,
    atoms: usize,
    support: Support,
    rng: &mut R,
) -> AtomicMeasure {
    let atoms = (0..atoms.max(1))
        .map(|_| Atom {
            weight: -(1.0 - rng.random::<f64>()).ln(),
            config: sample_configuration_with(dims, support, rng),
        })
        .collect();
    AtomicMeasure::new(atoms).expect("valid atoms")
}

/// A configuration whose induced `X` equals `target` exactly, with `Y_α = 0`
/// for `α < d` and `Y_d²` within `1/n` of `1 − ‖X‖²/n`.
///
/// Every point shares the leading coordinates `X_α/√n`. The last coordinate
/// is `±r`, `r = √(1 − Σ_{α<d} X_α²/n)`, on the first `n−1` points, with the
/// number of positive signs chosen to bring the partial sum closest to
/// `√n X_d` (ties toward fewer positive signs); the last point absorbs the
/// remainder.
pub fn lemma_approx_construct(target: &[f64], n: usize) -> Result<Configuration> {
    let dims = ProblemDims::new(n, target.len())?;
    if target.iter().any(|x| !x.is_finite()) {
        return Err(ConeError::NonFinite("target"));
    }
    let nf = dims.nf();
    let norm2: f64 = target.iter().map(|x| x * x).sum();
    if norm2 > nf * (1.0 + 1e-12) {
        return Err(ConeError::TargetOutsideBall { norm2, n });
    }
    let d = dims.d;
    let lead: Vec<f64> = target[..d - 1].iter().map(|x| x / nf.sqrt()).collect();
    let goal = nf.sqrt() * target[d - 1];
    // On the sphere the rounded radius can fall just short of |goal|/n.
    let r = (1.0 - lead.iter().map(|x| x * x).sum::<f64>()).max(0.0).sqrt().max(goal.abs() / nf);

    let partial = |k: usize| (2.0 * k as f64 - (nf - 1.0)) * r;
    let k = (0..n)
        .min_by(|&a, &b| (goal - partial(a)).abs().total_cmp(&(goal - partial(b)).abs()))
        .expect("n >= 2");
    let z = (goal - partial(k)).clamp(-r, r);

    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = lead.clone();
        p.push(if i + 1 == n {
            z
        } else if i < k {
            r
        } else {
            -r
        });
        points.push(p);
    }
    Configuration::new(points)
}

//! Randomised property suites. Iteration `i` draws from its own RNG stream,
//! so summaries do not depend on the number of threads.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::exact_d1::c_n1_membership;
use crate::halfdeg::{
    count_distinct_points, critical_root_residual, full_bruteforce_min, reduced_global_min, CLUSTER_TOL,
    DEFAULT_RESTARTS,
};
use crate::measures::{lemma_approx_construct, measure_moments, random_atomic_measure, sample_point, Support};
use crate::model::{pair, MomentVector, ProblemDims, SymmetricQuadratic};
use crate::moment::{
    classify, lmi_dual_feasibility, necessary_condition, sufficient_condition, verify_moment_witness, Side,
};
use crate::sos::{
    ellipsoid_quadratic_min, sigma_membership_lmi, sigma_prime_membership, sos_witness_for_member,
    verify_sos_witness,
};
use crate::spin::{
    coherent_state, entanglement_witness, random_pure_state, random_state, spin_form_mismatch, Family, SpinVerdict,
};
use crate::verdict::{Status, Witness};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Decision tolerance shared by the two routes of the equivalence suite.
pub const ROUTE_TOL: f64 = 1e-8;

pub fn task_rng(seed: u64, task: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(task);
    rng
}

fn dims_in<R: Rng + ?Sized>(rng: &mut R, n: std::ops::RangeInclusive<usize>, d: std::ops::RangeInclusive<usize>) -> ProblemDims {
    ProblemDims::new(rng.random_range(n), rng.random_range(d)).expect("ranges are valid")
}

/// Coefficients uniform in `[−1, 1]`, constant term in `[−n, 2n]`.
pub fn random_quadratic<R: Rng + ?Sized>(dims: ProblemDims, rng: &mut R) -> SymmetricQuadratic {
    let n = dims.nf();
    let a = (0..dims.d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let aa = (0..dims.d).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymmetricQuadratic::new(dims, rng.random_range(-n..2.0 * n), a, aa).expect("finite")
}

/// Mixture of measure moments, perturbed measure moments and unstructured
/// vectors of the natural magnitude (`|z_α| ~ √n`, `|z_αα| ~ n`).
pub fn random_moment<R: Rng + ?Sized>(dims: ProblemDims, rng: &mut R) -> MomentVector {
    let n = dims.nf();
    let noise = |rng: &mut R, m: &MomentVector, eps: f64| {
        let flat: Vec<f64> = m
            .to_flat()
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let s = if i == 0 { 1.0 } else if i <= dims.d { n.sqrt() } else { n };
                x + eps * s * rng.random_range(-1.0..1.0)
            })
            .collect();
        MomentVector::from_flat(dims, &flat).expect("finite")
    };
    match rng.random_range(0..4) {
        0 => measure_moments(&random_atomic_measure(dims, rng.random_range(1..4), Support::Ball, rng)),
        1 => {
            let m = measure_moments(&random_atomic_measure(dims, rng.random_range(1..3), Support::Sphere, rng));
            noise(rng, &m.scaled(1.0 / m.z0()), 0.2)
        }
        _ => {
            let z0 = if rng.random_bool(0.05) { rng.random_range(-1.0..0.0) } else { rng.random_range(0.2..2.0) };
            let z = (0..dims.d).map(|_| n.sqrt() * rng.random_range(-1.5..1.5)).collect();
            let zz = (0..dims.d).map(|_| n * rng.random_range(-1.2..1.5)).collect();
            MomentVector::new(dims, z0, z, zz).expect("finite")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Soundness,
    Equivalence,
    Halfdeg,
    Lemma,
    Spin,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Soundness, Suite::Equivalence, Suite::Halfdeg, Suite::Lemma, Suite::Spin];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Soundness => "soundness",
            Suite::Equivalence => "equivalence",
            Suite::Halfdeg => "halfdeg",
            Suite::Lemma => "lemma",
            Suite::Spin => "spin",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = ConeError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ConeError::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reproducer {
    pub seed: u64,
    pub iteration: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub suite: Suite,
    pub seed: u64,
    pub iters: u64,
    pub violations: u64,
    /// Lowest failing iteration.
    pub first_failure: Option<Reproducer>,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond { Ok(()) } else { Err(msg()) }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_default()
}

fn lift(r: Result<Check>) -> Check {
    r.unwrap_or_else(|e| Err(e.to_string()))
}

/// Atomic measures pass the necessary test; sufficient-side vectors pair
/// nonnegatively with random members of `Σ'`.
pub fn soundness_case<R: Rng + ?Sized>(rng: &mut R, tol: f64) -> Check {
    let dims = dims_in(rng, 2..=64, 1..=4);
    let support = [Support::Ball, Support::Sphere, Support::Hypercube][rng.random_range(0..3)];
    let mu = random_atomic_measure(dims, rng.random_range(1..5), support, rng);
    let m = measure_moments(&mu);
    let (ok, rep) = necessary_condition(&m, tol);
    ensure(ok, || format!("measure fails necessary test (residual {:e}): {}", rep.residual, json(&m)))?;

    let dims = dims_in(rng, 2..=12, 1..=4);
    let m = random_moment(dims, rng);
    if sufficient_condition(&m, tol).0 {
        let q = random_quadratic(dims, rng);
        if lift(sigma_prime_membership(&q, tol).map(|(v, _)| ensure(v.is_member(), String::new))).is_ok() {
            let p = pair(&q, &m).map_err(|e| e.to_string())?;
            let bound = tol * q.scale() * m.scale() * (dims.d as f64 + 1.0);
            ensure(p >= -bound, || format!("pair {p:e} < 0 for q = {}, m = {}", json(&q), json(&m)))?;
        }
    }
    Ok(())
}

/// Route agreement and witness validity for one random polynomial.
pub fn poly_equivalence_case<R: Rng + ?Sized>(rng: &mut R, dims: ProblemDims, witness_samples: usize) -> Check {
    let q = random_quadratic(dims, rng);
    lift((|| {
        let (v, _) = sigma_membership_lmi(&q, ROUTE_TOL)?;
        let (min, _) = ellipsoid_quadratic_min(&q)?;
        let ell_member = min >= -ROUTE_TOL * q.scale();
        if v.is_member() != ell_member {
            return Ok(Err(format!("routes disagree (ellipsoid min {min:e}) on {}", json(&q))));
        }
        if v.is_member() {
            let w = sos_witness_for_member(&q, ROUTE_TOL)?;
            let c = verify_sos_witness(&w, &q, witness_samples, rng)?;
            let bound = 1e-8 * q.scale();
            if !c.is_valid(bound) {
                return Ok(Err(format!("sos witness invalid ({}) for {}", json(&c), json(&q))));
            }
        }
        Ok(Ok(()))
    })())
}

/// Closed form vs. witness matrix on both sides, plus separator validity.
pub fn moment_equivalence_case<R: Rng + ?Sized>(rng: &mut R, dims: ProblemDims, tol: f64) -> Check {
    let m = random_moment(dims, rng);
    lift((|| {
        for side in [Side::Necessary, Side::Sufficient] {
            let closed = match side {
                Side::Necessary => necessary_condition(&m, tol).0,
                Side::Sufficient => sufficient_condition(&m, tol).0,
            };
            let (v, w) = lmi_dual_feasibility(&m, side, tol)?;
            if v.is_member() != closed {
                return Ok(Err(format!("{side:?} side: closed form {closed} vs matrix on {}", json(&m))));
            }
            if let (true, Some(w)) = (v.is_member(), w) {
                let c = verify_moment_witness(&w, &m)?;
                let scale = w.x.iter().flatten().fold(1.0_f64, |a, x| a.max(x.abs()));
                if c.min_eigenvalue < -1e-8 * scale || c.linear_residual > 1e-10 * scale {
                    return Ok(Err(format!("witness check failed ({}) on {}", json(&c), json(&m))));
                }
            }
        }
        let v = classify(&m, tol)?;
        if let Witness::SeparatingPolynomial { q, pairing } = &v.witness {
            let inside = sigma_membership_lmi(q, tol)?.0.is_member();
            if !inside || !(*pairing < 0.0) {
                return Ok(Err(format!("bad separator {} (pairing {pairing:e}) for {}", json(q), json(&m))));
            }
        }
        if dims.d == 1 {
            let exact = c_n1_membership(&m, tol)?;
            let clash = (v.status == Status::Member && exact.is_non_member())
                || (v.status == Status::NonMember && exact.is_member());
            if clash {
                return Ok(Err(format!("classify contradicts the exact d=1 cone on {}", json(&m))));
            }
        }
        Ok(Ok(()))
    })())
}

pub fn equivalence_case<R: Rng + ?Sized>(rng: &mut R, tol: f64) -> Check {
    let dims = dims_in(rng, 2..=10, 1..=4);
    poly_equivalence_case(rng, dims, 20)?;
    moment_equivalence_case(rng, dims, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfdegOutcome {
    pub reduced: f64,
    pub bruteforce: f64,
    pub distinct: usize,
    pub critical: Option<f64>,
}

pub fn halfdeg_outcome(q: &SymmetricQuadratic, seed: u64) -> Result<HalfdegOutcome> {
    let red = reduced_global_min(q, DEFAULT_RESTARTS, seed)?;
    let bf = full_bruteforce_min(q, 64, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    Ok(HalfdegOutcome {
        reduced: red.value,
        bruteforce: bf.value,
        distinct: count_distinct_points(&red.config, CLUSTER_TOL),
        critical: critical_root_residual(q, &red.config),
    })
}

pub fn halfdeg_case<R: Rng + ?Sized>(rng: &mut R) -> Check {
    let dims = dims_in(rng, 3..=6, 2..=3);
    let q = random_quadratic(dims, rng);
    let seed = rng.random();
    let o = halfdeg_outcome(&q, seed).map_err(|e| e.to_string())?;
    ensure((o.reduced - o.bruteforce).abs() <= 1e-6, || {
        format!("reduced {} vs brute force {} on {}", o.reduced, o.bruteforce, json(&q))
    })?;
    ensure(o.distinct <= 2 * dims.d, || format!("{} distinct points on {}", o.distinct, json(&q)))?;
    ensure(o.critical.is_none_or(|r| r < 1e-6), || {
        format!("critical polynomial residual {:?} on {}", o.critical, json(&q))
    })
}

/// Uniform target in the ball of radius `√n`, on its boundary one time in ten.
pub fn random_lemma_target<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Vec<f64> {
    let support = if rng.random_bool(0.1) { Support::Sphere } else { Support::Ball };
    sample_point(d, support, rng)
        .into_iter()
        .map(|x| x * (n as f64).sqrt())
        .collect()
}

pub fn lemma_check(target: &[f64], n: usize) -> Check {
    let c = lemma_approx_construct(target, n).map_err(|e| e.to_string())?;
    let nf = n as f64;
    let d = target.len();
    let norm2: f64 = target.iter().map(|x| x * x).sum();
    for a in 0..d {
        let s: f64 = c.points().iter().map(|p| p[a]).sum();
        let sq: f64 = c.points().iter().map(|p| p[a] * p[a]).sum();
        let x = s / nf.sqrt();
        ensure((x - target[a]).abs() <= 1e-12 * (1.0 + target[a].abs()) * nf.sqrt(), || {
            format!("X mismatch on axis {a}: {x} vs {} (target {target:?}, n = {n})", target[a])
        })?;
        let y2 = sq / nf - x * x / nf;
        if a + 1 < d {
            ensure(y2.abs() <= 1e-12, || format!("Y{a}² = {y2:e} (target {target:?}, n = {n})"))?;
        } else {
            let gap = (y2 - (1.0 - norm2 / nf)).abs();
            ensure(gap <= 1.0 / nf + 1e-12, || format!("Y gap {gap} > 1/n (target {target:?}, n = {n})"))?;
        }
    }
    ensure(c.points().iter().all(|p| p.iter().map(|x| x * x).sum::<f64>() <= 1.0 + 1e-12), || {
        format!("point outside ball (target {target:?}, n = {n})")
    })
}

pub fn lemma_case<R: Rng + ?Sized>(rng: &mut R) -> Check {
    let n = rng.random_range(2..=64);
    let d = rng.random_range(1..=4);
    let target = random_lemma_target(d, n, rng);
    lemma_check(&target, n)
}

pub fn spin_case<R: Rng + ?Sized>(rng: &mut R, tol: f64) -> Check {
    let n = rng.random_range(2..=32);
    let s = if rng.random_bool(0.5) { random_state(n, rng) } else { random_pure_state(n, rng) }
        .map_err(|e| e.to_string())?;
    let r = entanglement_witness(&s, tol).map_err(|e| e.to_string())?;
    let bound = tol * (n * n) as f64;
    ensure(
        r.inequalities
            .iter()
            .filter(|e| e.side == Side::Necessary && e.family == Family::Trivial)
            .all(|e| e.residual >= -bound),
        || format!("trivial inequality violated for {}", json(&s)),
    )?;
    let mm = spin_form_mismatch(&s).map_err(|e| e.to_string())?;
    ensure(mm < 1e-12, || format!("spin forms differ from moment forms by {mm:e}"))?;

    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let c = coherent_state(n, theta, phi).map_err(|e| e.to_string())?;
    let r = entanglement_witness(&c, tol).map_err(|e| e.to_string())?;
    ensure(r.verdict != SpinVerdict::EntanglementDetected, || {
        format!("coherent state detected (n = {n}, θ = {theta}, φ = {phi})")
    })?;
    ensure(
        r.inequalities
            .iter()
            .filter(|e| e.side == Side::Necessary && e.family == Family::Second)
            .all(|e| e.residual.abs() <= bound),
        || format!("coherent state does not saturate the second family (n = {n}, θ = {theta}, φ = {phi})"),
    )
}

pub fn run_case(suite: Suite, rng: &mut ChaCha8Rng, tol: f64) -> Check {
    match suite {
        Suite::Soundness => soundness_case(rng, tol),
        Suite::Equivalence => equivalence_case(rng, tol),
        Suite::Halfdeg => halfdeg_case(rng),
        Suite::Lemma => lemma_case(rng),
        Suite::Spin => spin_case(rng, tol),
    }
}

pub fn run_suite(suite: Suite, iters: u64, seed: u64, tol: f64) -> FuzzSummary {
    let failures: Vec<(u64, String)> = (0..iters)
        .into_par_iter()
        .filter_map(|i| run_case(suite, &mut task_rng(seed, i), tol).err().map(|m| (i, m)))
        .collect();
    let first_failure = failures.iter().min_by_key(|(i, _)| *i).map(|(i, m)| Reproducer {
        seed,
        iteration: *i,
        message: m.clone(),
    });
    FuzzSummary {
        suite,
        seed,
        iters,
        violations: failures.len() as u64,
        first_failure,
    }
}

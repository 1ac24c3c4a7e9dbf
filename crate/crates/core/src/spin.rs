//! Symmetric `n`-qubit states, collective spin moments, and the spin form of
//! the `d = 3` moment inequalities.
//!
//! States live in the Dicke basis `|j,m⟩`, `j = n/2`, ordered
//! `m = j, j−1, …, −j`. The moment dictionary is `z_0 = 1`,
//! `z_k = 2⟨J_k⟩`, `z_kk = 4⟨J_k²⟩ − n`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};
use crate::linalg::hermitian_eigenvalues;
use crate::model::{MomentVector, ProblemDims};
use crate::moment::{expand_inequalities, Side};

pub type C64 = Complex<f64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-9;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Density matrix on the symmetric subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateWire", into = "StateWire")]
pub struct SymmetricState {
    n: usize,
    rho: DMatrix<C64>,
}

#[derive(Serialize, Deserialize)]
struct StateWire {
    n: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl TryFrom<StateWire> for SymmetricState {
    type Error = ConeError;
    fn try_from(w: StateWire) -> Result<Self> {
        let k = w.n + 1;
        let bad = |what: &str| ConeError::InvalidState(format!("{what} must be {k}×{k}"));
        if w.re.len() != k || w.re.iter().any(|r| r.len() != k) {
            return Err(bad("re"));
        }
        if w.im.len() != k || w.im.iter().any(|r| r.len() != k) {
            return Err(bad("im"));
        }
        let rho = DMatrix::from_fn(k, k, |i, j| C64::new(w.re[i][j], w.im[i][j]));
        SymmetricState::new(w.n, rho)
    }
}

impl From<SymmetricState> for StateWire {
    fn from(s: SymmetricState) -> Self {
        let k = s.n + 1;
        StateWire {
            n: s.n,
            re: (0..k).map(|i| (0..k).map(|j| s.rho[(i, j)].re).collect()).collect(),
            im: (0..k).map(|i| (0..k).map(|j| s.rho[(i, j)].im).collect()).collect(),
        }
    }
}

impl SymmetricState {
    pub fn new(n: usize, rho: DMatrix<C64>) -> Result<Self> {
        let k = n + 1;
        if n == 0 || rho.nrows() != k || rho.ncols() != k {
            return Err(ConeError::InvalidState(format!("need n >= 1 and a {k}×{k} matrix")));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(ConeError::NonFinite("rho"));
        }
        let herm = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| (rho[(i, j)] - rho[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(ConeError::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(ConeError::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = hermitian_eigenvalues(&rho).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -EIGEN_TOL {
            return Err(ConeError::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { n, rho })
    }

    /// `|ψ⟩⟨ψ|` for a nonzero amplitude vector, normalised.
    pub fn pure(n: usize, amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != n + 1 {
            return Err(ConeError::InvalidState(format!(
                "need {} amplitudes, got {}",
                n + 1,
                amplitudes.len()
            )));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(ConeError::InvalidState("zero amplitude vector".into()));
        }
        let k = n + 1;
        let rho = DMatrix::from_fn(k, k, |i, j| amplitudes[i] * amplitudes[j].conj() / norm2);
        Self::new(n, hermitize(rho))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> &DMatrix<C64> {
        &self.rho
    }
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let a = m.adjoint();
    (m + a).map(|z| z * 0.5)
}

/// `(J_x, J_y, J_z)` in the spin-`n/2` representation.
pub fn collective_operators(n: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    let k = n + 1;
    let j = n as f64 / 2.0;
    let m = |i: usize| j - i as f64;
    let mut jp = DMatrix::<C64>::zeros(k, k);
    for i in 1..k {
        let mi = m(i);
        jp[(i - 1, i)] = C64::new((j * (j + 1.0) - mi * (mi + 1.0)).max(0.0).sqrt(), 0.0);
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm).map(|z| z * 0.5);
    let jy = (&jp - &jm).map(|z| z / C64::new(0.0, 2.0));
    let jz = DMatrix::from_fn(k, k, |a, b| if a == b { C64::new(m(a), 0.0) } else { C64::new(0.0, 0.0) });
    (jx, jy, jz)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinMoments {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jz2: f64,
}

impl SpinMoments {
    fn first(&self) -> [f64; 3] {
        [self.jx, self.jy, self.jz]
    }

    fn second(&self) -> [f64; 3] {
        [self.jx2, self.jy2, self.jz2]
    }

    pub fn variances(&self) -> [f64; 3] {
        let (f, s) = (self.first(), self.second());
        [s[0] - f[0] * f[0], s[1] - f[1] * f[1], s[2] - f[2] * f[2]]
    }
}

fn expectation(rho: &DMatrix<C64>, op: &DMatrix<C64>) -> f64 {
    (rho * op).trace().re
}

pub fn spin_moments(state: &SymmetricState) -> SpinMoments {
    let (jx, jy, jz) = collective_operators(state.n);
    let r = &state.rho;
    SpinMoments {
        jx: expectation(r, &jx),
        jy: expectation(r, &jy),
        jz: expectation(r, &jz),
        jx2: expectation(r, &(&jx * &jx)),
        jy2: expectation(r, &(&jy * &jy)),
        jz2: expectation(r, &(&jz * &jz)),
    }
}

/// `z_0 = 1`, `z_k = 2⟨J_k⟩`, `z_kk = 4⟨J_k²⟩ − n`.
pub fn moments_from_spin(sm: &SpinMoments, n: usize) -> Result<MomentVector> {
    let nf = n as f64;
    MomentVector::new(
        ProblemDims::new(n, 3)?,
        1.0,
        sm.first().iter().map(|x| 2.0 * x).collect(),
        sm.second().iter().map(|x| 4.0 * x - nf).collect(),
    )
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Spin coherent state `|θ,φ⟩^{⊗n}` projected on the Dicke basis:
/// amplitude of `|j,m⟩` is `√C(n, j+m) cos^{j+m}(θ/2) sin^{j−m}(θ/2) e^{i(j−m)φ}`.
pub fn coherent_state(n: usize, theta: f64, phi: f64) -> Result<SymmetricState> {
    if !theta.is_finite() || !phi.is_finite() {
        return Err(ConeError::NonFinite("angle"));
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let amps: Vec<C64> = (0..=n)
        .map(|i| {
            // i = j − m down-steps.
            let up = n - i;
            let mag = (0.5 * ln_binomial(n, i)).exp() * c.powi(up as i32) * s.powi(i as i32);
            C64::from_polar(mag, i as f64 * phi)
        })
        .collect();
    SymmetricState::pure(n, &amps)
}

/// `|j,m⟩`; `m` must satisfy `|m| ≤ j` with `j − m` an integer.
pub fn dicke_state(n: usize, m: f64) -> Result<SymmetricState> {
    let j = n as f64 / 2.0;
    let steps = j - m;
    if !(m.abs() <= j) || (steps - steps.round()).abs() > 1e-9 {
        return Err(ConeError::InvalidState(format!("invalid m = {m} for j = {j}")));
    }
    let mut amps = vec![C64::new(0.0, 0.0); n + 1];
    amps[steps.round() as usize] = C64::new(1.0, 0.0);
    SymmetricState::pure(n, &amps)
}

/// `(|j,j⟩ + |j,−j⟩)/√2`.
pub fn ghz_state(n: usize) -> Result<SymmetricState> {
    let mut amps = vec![C64::new(0.0, 0.0); n + 1];
    amps[0] = C64::new(1.0, 0.0);
    amps[n] = C64::new(1.0, 0.0);
    SymmetricState::pure(n, &amps)
}

/// Convex combination with weights normalised to sum one.
pub fn mixed(states: &[SymmetricState], weights: &[f64]) -> Result<SymmetricState> {
    if states.is_empty() || states.len() != weights.len() {
        return Err(ConeError::InvalidState("need one weight per state".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(ConeError::InvalidState("weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(ConeError::InvalidState("weights sum to zero".into()));
    }
    let n = states[0].n;
    let k = n + 1;
    let mut rho = DMatrix::<C64>::zeros(k, k);
    for (s, w) in states.iter().zip(weights) {
        if s.n != n {
            return Err(ConeError::InvalidState("states have different n".into()));
        }
        rho += s.rho.map(|z| z * (w / total));
    }
    SymmetricState::new(n, hermitize(rho))
}

/// Identity on the symmetric subspace divided by `n+1`.
pub fn maximally_mixed(n: usize) -> Result<SymmetricState> {
    let k = n + 1;
    SymmetricState::new(n, DMatrix::from_fn(k, k, |i, j| {
        C64::new(if i == j { 1.0 / k as f64 } else { 0.0 }, 0.0)
    }))
}

/// Hermitian Gaussian matrix shifted by its smallest eigenvalue and
/// normalised to unit trace.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SymmetricState> {
    let k = n + 1;
    let g = DMatrix::from_fn(k, k, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let h = hermitize(g);
    let lmin = hermitian_eigenvalues(&h).into_iter().fold(f64::INFINITY, f64::min);
    // A small extra shift keeps the result full rank.
    let shifted = h - DMatrix::from_diagonal_element(k, k, C64::new(lmin - 1e-3, 0.0));
    let tr = shifted.trace().re;
    SymmetricState::new(n, hermitize(shifted.map(|z| z / tr)))
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<SymmetricState> {
    let amps: Vec<C64> = (0..=n)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    SymmetricState::pure(n, &amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Empty or full pattern; the necessary versions hold for every state.
    Trivial,
    /// One axis on the second-moment side.
    First,
    /// Two axes on the second-moment side.
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinInequality {
    pub name: String,
    pub side: Side,
    pub family: Family,
    /// Pattern bits over `(x, y, z)`, `x` most significant; a set bit puts
    /// that axis on the second-moment side.
    pub pattern: u8,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs − rhs`; negative means violated.
    pub residual: f64,
    pub boundary: bool,
}

/// Ratio between the spin-form residual and the moment-form residual.
pub fn spin_form_factor(side: Side, pattern: u8, n: usize) -> f64 {
    let nf = n as f64;
    match side {
        Side::Sufficient => nf * nf,
        Side::Necessary if pattern == 0 => nf / 2.0,
        Side::Necessary => nf * (nf - 1.0),
    }
}

fn axes_of(pattern: u8) -> [bool; 3] {
    [pattern & 4 != 0, pattern & 2 != 0, pattern & 1 != 0]
}

/// `(lhs, rhs, family, name)` of one spin inequality.
pub fn spin_form(sm: &SpinMoments, n: usize, side: Side, pattern: u8) -> (f64, f64, Family, String) {
    let nf = n as f64;
    let var = sm.variances();
    let first = sm.first();
    let second = sm.second();
    let on = axes_of(pattern);
    let count = on.iter().filter(|&&b| b).count();
    let tag = match side {
        Side::Necessary => "necessary",
        Side::Sufficient => "sufficient",
    };
    match count {
        0 => {
            let v: f64 = var.iter().sum();
            let (lhs, rhs) = match side {
                Side::Necessary => (2.0 * v, nf),
                Side::Sufficient => (
                    4.0 * (nf - 1.0) * v,
                    4.0 * first.iter().map(|x| x * x).sum::<f64>() + (2.0 * nf + 1.0) * (nf - 1.0),
                ),
            };
            (lhs, rhs, Family::Trivial, format!("{tag}:total_variance"))
        }
        3 => {
            let s: f64 = second.iter().sum();
            let lhs = match side {
                Side::Necessary => nf * (nf + 2.0),
                Side::Sufficient => nf * nf + nf + 1.0,
            };
            (lhs, 4.0 * s, Family::Trivial, format!("{tag}:second_moment_sum"))
        }
        1 => {
            let a = on.iter().position(|&b| b).expect("one axis");
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let lhs = 4.0 * (nf - 1.0) * (var[b] + var[c]);
            let rhs = match side {
                Side::Necessary => nf * (nf - 2.0) + 4.0 * second[a],
                Side::Sufficient => {
                    nf * nf - nf - 1.0 + 4.0 * (second[a] + first[b] * first[b] + first[c] * first[c])
                }
            };
            (lhs, rhs, Family::First, format!("{tag}:transverse_variance_{}", AXES[a]))
        }
        _ => {
            let a = on.iter().position(|&b| !b).expect("one axis off");
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let lhs = 4.0 * (nf - 1.0) * var[a];
            let rhs = match side {
                Side::Necessary => 4.0 * (second[b] + second[c]) - 2.0 * nf,
                Side::Sufficient => 4.0 * (second[b] + second[c] + first[a] * first[a]) - (nf + 1.0),
            };
            (lhs, rhs, Family::Second, format!("{tag}:axis_variance_{}", AXES[a]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinVerdict {
    /// Every sufficient-side inequality holds: the projected moments admit a
    /// separable representation, so nothing is detectable from them.
    SeparabilityCertified,
    EntanglementDetected,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub n: usize,
    pub moments: SpinMoments,
    pub inequalities: Vec<SpinInequality>,
    pub verdict: SpinVerdict,
    /// Most violated necessary inequality when entanglement is detected.
    pub detected_by: Option<String>,
}

/// Evaluates the eight necessary inequalities and their sufficient-side
/// counterparts. Residuals are compared against `tol·n²`.
pub fn entanglement_witness(state: &SymmetricState, tol: f64) -> Result<WitnessReport> {
    let n = state.n;
    if n < 2 {
        return Err(ConeError::InvalidState("entanglement witness needs n >= 2".into()));
    }
    let sm = spin_moments(state);
    let bound = tol * (n * n) as f64;
    let mut inequalities = Vec::with_capacity(16);
    for side in [Side::Necessary, Side::Sufficient] {
        for pattern in 0..8u8 {
            let (lhs, rhs, family, name) = spin_form(&sm, n, side, pattern);
            let residual = lhs - rhs;
            inequalities.push(SpinInequality {
                name,
                side,
                family,
                pattern,
                lhs,
                rhs,
                residual,
                boundary: residual.abs() <= bound,
            });
        }
    }
    let trivial_broken = inequalities
        .iter()
        .find(|e| e.side == Side::Necessary && e.family == Family::Trivial && e.residual < -bound);
    if let Some(e) = trivial_broken {
        return Err(ConeError::InvalidState(format!(
            "{} violated by {:e}; state is not physical",
            e.name, e.residual
        )));
    }
    let worst = inequalities
        .iter()
        .filter(|e| e.side == Side::Necessary && e.residual < -bound)
        .min_by(|a, b| a.residual.total_cmp(&b.residual));
    let (verdict, detected_by) = if let Some(e) = worst {
        (SpinVerdict::EntanglementDetected, Some(e.name.clone()))
    } else if inequalities
        .iter()
        .filter(|e| e.side == Side::Sufficient)
        .all(|e| e.residual >= -bound)
    {
        (SpinVerdict::SeparabilityCertified, None)
    } else {
        (SpinVerdict::Inconclusive, None)
    };
    Ok(WitnessReport {
        n,
        moments: sm,
        inequalities,
        verdict,
        detected_by,
    })
}

/// Largest `|spin residual − factor · moment residual|` over all sixteen
/// inequalities, relative to `n²`.
pub fn spin_form_mismatch(state: &SymmetricState) -> Result<f64> {
    let n = state.n;
    let sm = spin_moments(state);
    let m = moments_from_spin(&sm, n)?;
    let mut worst = 0.0_f64;
    for side in [Side::Necessary, Side::Sufficient] {
        let expanded = expand_inequalities(&m, side)?;
        for pattern in 0..8u8 {
            let (lhs, rhs, _, _) = spin_form(&sm, n, side, pattern);
            let expected = spin_form_factor(side, pattern, n) * expanded.terms[pattern as usize];
            worst = worst.max(((lhs - rhs) - expected).abs() / (n * n) as f64);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moment::{necessary_condition, DEFAULT_TOL as MOMENT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-10 * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn operators_basic() {
        let (jx, jy, jz) = collective_operators(1);
        let mut ev = hermitian_eigenvalues(&jx);
        ev.sort_by(f64::total_cmp);
        assert!(close(ev[0], -0.5) && close(ev[1], 0.5));
        let (_, _, jz2) = collective_operators(2);
        let d: Vec<f64> = jz2.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![1.0, 0.0, -1.0]);
        for n in 1..12 {
            let (jx, jy, jz) = collective_operators(n);
            let j = n as f64 / 2.0;
            let cas = &jx * &jx + &jy * &jy + &jz * &jz;
            let comm = &jx * &jy - &jy * &jx - jz.map(|z| z * C64::new(0.0, 1.0));
            for i in 0..=n {
                assert!((cas[(i, i)].re - j * (j + 1.0)).abs() < 1e-12);
            }
            assert!(comm.iter().all(|z| z.norm() < 1e-12));
        }
        let _ = (jy, jz);
    }

    #[test]
    fn coherent_and_dicke_moments() {
        for n in 2..10 {
            let nf = n as f64;
            let s = coherent_state(n, 0.0, 0.0).unwrap();
            assert_eq!(s, dicke_state(n, nf / 2.0).unwrap());
            let sm = spin_moments(&s);
            assert!(close(sm.jz, nf / 2.0) && close(sm.jz2, nf * nf / 4.0));
            assert!(close(sm.jx2, nf / 4.0) && close(sm.jy2, nf / 4.0));
            let m = moments_from_spin(&sm, n).unwrap();
            assert!(close(m.zz()[2], nf * nf - nf) && m.zz()[0].abs() < 1e-12);
            if n % 2 == 0 {
                let sm = spin_moments(&dicke_state(n, 0.0).unwrap());
                let j = nf / 2.0;
                assert!(sm.jz.abs() < 1e-12 && sm.jz2.abs() < 1e-12);
                assert!(close(sm.jx2, j * (j + 1.0) / 2.0));
                let m = moments_from_spin(&sm, n).unwrap();
                assert!(close(m.zz()[2], -nf) && close(m.zz()[0], nf * nf / 2.0));
            }
        }
        let sm = spin_moments(&maximally_mixed(4).unwrap());
        assert!(sm.jx.abs() < 1e-12 && sm.jy.abs() < 1e-12 && sm.jz.abs() < 1e-12);
    }

    #[test]
    fn constructors() {
        let d = dicke_state(2, 1.0).unwrap();
        assert_eq!(d.rho()[(0, 0)], C64::new(1.0, 0.0));
        assert!(dicke_state(2, 1.5).is_err());
        assert!(dicke_state(3, 0.0).is_err());
        assert!(dicke_state(3, 0.5).is_ok());
        let g = ghz_state(3).unwrap();
        let a = coherent_state(3, 0.4, 1.0).unwrap();
        assert_eq!(mixed(&[a.clone(), g], &[1.0, 0.0]).unwrap(), a);
    }

    #[test]
    fn state_validation_and_json() {
        let s = dicke_state(1, 0.5).unwrap();
        let js = serde_json::to_string(&s).unwrap();
        assert_eq!(js, r#"{"n":1,"re":[[1.0,0.0],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#);
        let back: SymmetricState = serde_json::from_str(&js).unwrap();
        assert_eq!(back, s);
        for bad in [
            r#"{"n":1,"re":[[2.0,0.0],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#,
            r#"{"n":1,"re":[[1.0,0.5],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#,
            r#"{"n":1,"re":[[1.5,0.0],[0.0,-0.5]],"im":[[0.0,0.0],[0.0,0.0]]}"#,
            r#"{"n":2,"re":[[1.0,0.0],[0.0,0.0]],"im":[[0.0,0.0],[0.0,0.0]]}"#,
        ] {
            assert!(serde_json::from_str::<SymmetricState>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn witness_examples() {
        for n in 2..12 {
            let r = entanglement_witness(&coherent_state(n, 0.0, 0.0).unwrap(), DEFAULT_TOL).unwrap();
            assert_ne!(r.verdict, SpinVerdict::EntanglementDetected);
            let x = r.inequalities.iter().find(|e| e.name == "necessary:axis_variance_x").unwrap();
            assert!(x.boundary && x.residual.abs() < 1e-9);
        }
        let r = entanglement_witness(&dicke_state(4, 0.0).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(r.verdict, SpinVerdict::EntanglementDetected);
        let z = r.inequalities.iter().find(|e| e.name == "necessary:axis_variance_z").unwrap();
        assert!(close(z.lhs, 0.0) && close(z.rhs, 16.0));
        let r = entanglement_witness(&maximally_mixed(2).unwrap(), DEFAULT_TOL).unwrap();
        assert_ne!(r.verdict, SpinVerdict::EntanglementDetected);
        assert_eq!(r.inequalities.len(), 16);
    }

    #[test]
    fn spin_forms_match_expanded_inequalities() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.random_range(2..16);
            let s = if rng.random_bool(0.5) {
                random_state(n, &mut rng).unwrap()
            } else {
                random_pure_state(n, &mut rng).unwrap()
            };
            assert!(spin_form_mismatch(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn product_states_pass_necessary_side() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let n = rng.random_range(2..20);
            let s = coherent_state(n, rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.0..6.3)).unwrap();
            let m = moments_from_spin(&spin_moments(&s), n).unwrap();
            assert!(necessary_condition(&m, MOMENT_TOL).0);
            let sm = spin_moments(&s);
            let j = n as f64 / 2.0;
            assert!((sm.jx2 + sm.jy2 + sm.jz2 - j * (j + 1.0)).abs() < 1e-9);
        }
    }
}

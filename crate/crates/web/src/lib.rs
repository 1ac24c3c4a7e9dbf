//! wasm-bindgen surface for the static demo page in `www/`.

use serde_json::json;
use symcone::moment::{classify, necessary_condition, sufficient_condition};
use symcone::slice::{compute_slice, MembershipOracle, Plane, SliceCone, SliceResult};
use symcone::spin::{coherent_state, dicke_state, entanglement_witness, ghz_state, mixed, SymmetricState};
use symcone::{MomentVector, ProblemDims};
use wasm_bindgen::prelude::*;

const TOL: f64 = 1e-9;

#[wasm_bindgen]
pub struct Slice {
    inner: SliceResult,
}

#[wasm_bindgen]
impl Slice {
    /// Row-major membership, `member[j * grid + i]` at `(xs[i], ys[j])`.
    pub fn member(&self) -> Vec<u8> {
        self.inner.member.iter().flatten().map(|&m| u8::from(m)).collect()
    }

    /// Boundary points flattened as `x0, y0, x1, y1, …`.
    pub fn boundary(&self) -> Vec<f64> {
        self.inner.boundary.iter().flat_map(|&(x, y)| [x, y]).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.inner.xs.clone()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.inner.ys.clone()
    }
}

pub fn slice_result(cone: &str, n: usize, d: usize, plane: &str, grid: usize) -> Result<SliceResult, String> {
    let run = || {
        let cone: SliceCone = cone.parse()?;
        let plane = Plane::parse(plane, cone, d)?;
        let oracle = MembershipOracle::new(cone, ProblemDims::new(n, d)?, TOL, 0)?;
        compute_slice(&oracle, &plane, grid)
    };
    run().map_err(|e| e.to_string())
}

/// Membership grid of `cone` over the plane, e.g. `a0=1,x=a1:-2:2,y=aa1:-1:1`.
#[wasm_bindgen]
pub fn slice(cone: &str, n: usize, d: usize, plane: &str, grid: usize) -> Result<Slice, JsError> {
    slice_result(cone, n, d, plane, grid)
        .map(|inner| Slice { inner })
        .map_err(|e| JsError::new(&e))
}

pub fn moment_report(n: usize, values: &[f64]) -> Result<String, String> {
    if values.len() < 3 || values.len() % 2 == 0 {
        return Err("expected z0, z1..zd, z11..zdd".into());
    }
    let d = (values.len() - 1) / 2;
    let m = ProblemDims::new(n, d)
        .and_then(|dims| MomentVector::from_flat(dims, values))
        .map_err(|e| e.to_string())?;
    let v = classify(&m, TOL).map_err(|e| e.to_string())?;
    let report = json!({
        "status": v.status,
        "boundary": v.boundary,
        "necessary_residual": necessary_condition(&m, TOL).1.residual,
        "sufficient_residual": sufficient_condition(&m, TOL).1.residual,
        "witness": v.witness,
    });
    Ok(report.to_string())
}

/// Classifies `(z0, z…, zz…)` and returns the verdict as JSON.
#[wasm_bindgen]
pub fn classify_moments(n: usize, values: &[f64]) -> Result<String, JsError> {
    moment_report(n, values).map_err(|e| JsError::new(&e))
}

fn preset_state(preset: &str, n: usize, m: f64, theta: f64, phi: f64) -> symcone::Result<SymmetricState> {
    match preset {
        "coherent" => coherent_state(n, theta, phi),
        "dicke" => dicke_state(n, m),
        "ghz" => ghz_state(n),
        "mixed" => {
            let h = std::f64::consts::FRAC_PI_2;
            let s = [(h, 0.0), (h, h), (0.0, 0.0)]
                .into_iter()
                .map(|(t, p)| coherent_state(n, t, p))
                .collect::<symcone::Result<Vec<_>>>()?;
            mixed(&s, &[1.0; 3])
        }
        other => Err(symcone::ConeError::InvalidArgument(format!("unknown preset `{other}`"))),
    }
}

pub fn spin_report(preset: &str, n: usize, m: f64, theta: f64, phi: f64) -> Result<String, String> {
    let state = preset_state(preset, n, m, theta, phi).map_err(|e| e.to_string())?;
    let report = entanglement_witness(&state, TOL).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Spin-squeezing witness of a preset state, as JSON.
#[wasm_bindgen]
pub fn spin_witness(preset: &str, n: usize, m: f64, theta: f64, phi: f64) -> Result<String, JsError> {
    spin_report(preset, n, m, theta, phi).map_err(|e| JsError::new(&e))
}

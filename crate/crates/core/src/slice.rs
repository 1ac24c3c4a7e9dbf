//! Membership of cones over a two-dimensional affine slice of coefficient or
//! moment space, with boundary points refined along grid edges.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ConeError, Result};
use crate::exact_d1::{c_n1_membership, limit_cone_d1, p_n1_membership, sigma_n1_membership};
use crate::halfdeg::{reduced_global_min, DEFAULT_RESTARTS};
use crate::model::{MomentVector, ProblemDims, RescaledMomentVector, SymmetricQuadratic};
use crate::moment::{limit_cone_membership, necessary_condition, sufficient_condition};
use crate::sos::{sigma_membership_lmi, sigma_prime_membership};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SliceCone {
    /// Nonnegative quadratics; exact for `d = 1`, half-degree search above.
    P,
    Sigma,
    SigmaPrime,
    /// Exact moment cone, `d = 1` only.
    C,
    CNec,
    CSuf,
    /// Globally nonnegative `B_0 + B_1 X + B_11 (X² − 1)`, coordinates
    /// `b0, b1, b11` (`d = 1`).
    Limit,
    /// Large-`n` moment cone in rescaled coordinates `z0, zt*, zzt*`.
    CLimit,
}

impl SliceCone {
    pub const ALL: [SliceCone; 8] = [
        SliceCone::P,
        SliceCone::Sigma,
        SliceCone::SigmaPrime,
        SliceCone::C,
        SliceCone::CNec,
        SliceCone::CSuf,
        SliceCone::Limit,
        SliceCone::CLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SliceCone::P => "P",
            SliceCone::Sigma => "Sigma",
            SliceCone::SigmaPrime => "SigmaPrime",
            SliceCone::C => "C",
            SliceCone::CNec => "C-nec",
            SliceCone::CSuf => "C-suf",
            SliceCone::Limit => "limit",
            SliceCone::CLimit => "C-limit",
        }
    }

    /// Coordinate names, in flat order.
    pub fn coordinates(self, d: usize) -> Vec<String> {
        let (c0, c1, c2) = match self {
            SliceCone::P | SliceCone::Sigma | SliceCone::SigmaPrime => ("a0", "a", "aa"),
            SliceCone::C | SliceCone::CNec | SliceCone::CSuf => ("z0", "z", "zz"),
            SliceCone::Limit => return vec!["b0".into(), "b1".into(), "b11".into()],
            SliceCone::CLimit => ("z0", "zt", "zzt"),
        };
        std::iter::once(c0.to_string())
            .chain((1..=d).map(|i| format!("{c1}{i}")))
            .chain((1..=d).map(|i| format!("{c2}{i}")))
            .collect()
    }
}

impl fmt::Display for SliceCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SliceCone {
    type Err = ConeError;
    fn from_str(s: &str) -> Result<Self> {
        SliceCone::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConeError::InvalidArgument(format!("unknown cone `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub coord: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Base point plus two coordinate axes with ranges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plane {
    pub base: Vec<f64>,
    pub x: Axis,
    pub y: Axis,
}

impl Plane {
    /// Parses `name=value` pins and `x=name:lo:hi`, `y=name:lo:hi` axes,
    /// comma separated. Unpinned coordinates are zero.
    pub fn parse(text: &str, cone: SliceCone, d: usize) -> Result<Self> {
        let names = cone.coordinates(d);
        let index = |name: &str| {
            names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ConeError::InvalidArgument(format!("unknown coordinate `{name}` for cone {cone}")))
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ConeError::InvalidArgument(format!("bad number `{s}`")))
        };
        let mut base = vec![0.0; names.len()];
        let (mut x, mut y) = (None, None);
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| ConeError::InvalidArgument(format!("expected key=value, got `{part}`")))?;
            match key.trim() {
                k @ ("x" | "y") => {
                    let f: Vec<&str> = val.split(':').collect();
                    if f.len() != 3 {
                        return Err(ConeError::InvalidArgument(format!("axis `{k}` needs name:lo:hi")));
                    }
                    let axis = Axis {
                        coord: index(f[0].trim())?,
                        lo: num(f[1])?,
                        hi: num(f[2])?,
                    };
                    if !(axis.lo < axis.hi) {
                        return Err(ConeError::InvalidArgument(format!("axis `{k}` has an empty range")));
                    }
                    if k == "x" { x = Some(axis) } else { y = Some(axis) }
                }
                name => base[index(name)?] = num(val)?,
            }
        }
        let (x, y) = x
            .zip(y)
            .ok_or_else(|| ConeError::InvalidArgument("plane needs both x and y axes".into()))?;
        if x.coord == y.coord {
            return Err(ConeError::InvalidArgument("x and y must be different coordinates".into()));
        }
        Ok(Self { base, x, y })
    }

    pub fn point(&self, u: f64, v: f64) -> Vec<f64> {
        let mut p = self.base.clone();
        p[self.x.coord] = u;
        p[self.y.coord] = v;
        p
    }
}

pub struct MembershipOracle {
    cone: SliceCone,
    dims: ProblemDims,
    tol: f64,
    seed: u64,
}

impl MembershipOracle {
    pub fn new(cone: SliceCone, dims: ProblemDims, tol: f64, seed: u64) -> Result<Self> {
        if matches!(cone, SliceCone::C | SliceCone::Limit) && dims.d != 1 {
            return Err(ConeError::RequiresD1(dims.d));
        }
        Ok(Self { cone, dims, tol, seed })
    }

    pub fn contains(&self, flat: &[f64]) -> Result<bool> {
        let dims = self.dims;
        let tol = self.tol;
        let poly = || SymmetricQuadratic::from_flat(dims, flat);
        let mom = || MomentVector::from_flat(dims, flat);
        Ok(match self.cone {
            SliceCone::P if dims.d == 1 => p_n1_membership(&poly()?, tol)?.0.is_member(),
            SliceCone::P => {
                // Q is affine in each point, so its minimum over the balls is
                // attained on the spheres.
                let q = poly()?;
                reduced_global_min(&q, DEFAULT_RESTARTS, self.seed)?.value >= -tol * q.scale()
            }
            SliceCone::Sigma if dims.d == 1 => sigma_n1_membership(&poly()?, false, tol)?.is_member(),
            SliceCone::SigmaPrime if dims.d == 1 => sigma_n1_membership(&poly()?, true, tol)?.is_member(),
            SliceCone::Sigma => sigma_membership_lmi(&poly()?, tol)?.0.is_member(),
            SliceCone::SigmaPrime => sigma_prime_membership(&poly()?, tol)?.0.is_member(),
            SliceCone::C => c_n1_membership(&mom()?, tol)?.is_member(),
            SliceCone::CNec => necessary_condition(&mom()?, tol).0,
            SliceCone::CSuf => sufficient_condition(&mom()?, tol).0 || mom()?.is_zero(),
            SliceCone::Limit => limit_cone_d1([flat[0], flat[1], flat[2]], tol).is_member(),
            SliceCone::CLimit => {
                let d = dims.d;
                let rm = RescaledMomentVector::new(flat[0], flat[1..=d].to_vec(), flat[d + 1..].to_vec())?;
                limit_cone_membership(&rm, tol).is_member()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceResult {
    pub cone: SliceCone,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `member[j][i]` at `(xs[i], ys[j])`.
    pub member: Vec<Vec<bool>>,
    /// Boundary crossings on grid edges, refined to [`BOUNDARY_TOL`].
    pub boundary: Vec<(f64, f64)>,
}

fn linspace(lo: f64, hi: f64, g: usize) -> Vec<f64> {
    if g == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..g).map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64).collect()
}

/// Crossing point between `a` (member) and `b` (non-member) or vice versa.
fn refine(oracle: &MembershipOracle, plane: &Plane, a: (f64, f64), b: (f64, f64), a_in: bool) -> Result<(f64, f64)> {
    let (mut inside, mut outside) = if a_in { (a, b) } else { (b, a) };
    let dist = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    while dist(inside, outside) > BOUNDARY_TOL {
        let mid = (0.5 * (inside.0 + outside.0), 0.5 * (inside.1 + outside.1));
        if mid == inside || mid == outside {
            break;
        }
        if oracle.contains(&plane.point(mid.0, mid.1))? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok((0.5 * (inside.0 + outside.0), 0.5 * (inside.1 + outside.1)))
}

pub fn compute_slice(oracle: &MembershipOracle, plane: &Plane, grid: usize) -> Result<SliceResult> {
    if grid == 0 {
        return Err(ConeError::InvalidArgument("grid must be positive".into()));
    }
    let xs = linspace(plane.x.lo, plane.x.hi, grid);
    let ys = linspace(plane.y.lo, plane.y.hi, grid);
    let member: Vec<Vec<bool>> = ys
        .par_iter()
        .map(|&y| xs.iter().map(|&x| oracle.contains(&plane.point(x, y))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut edges = Vec::new();
    for j in 0..grid {
        for i in 0..grid {
            if i + 1 < grid && member[j][i] != member[j][i + 1] {
                edges.push(((xs[i], ys[j]), (xs[i + 1], ys[j]), member[j][i]));
            }
            if j + 1 < grid && member[j][i] != member[j + 1][i] {
                edges.push(((xs[i], ys[j]), (xs[i], ys[j + 1]), member[j][i]));
            }
        }
    }
    let boundary = edges
        .par_iter()
        .map(|&(a, b, a_in)| refine(oracle, plane, a, b, a_in))
        .collect::<Result<_>>()?;
    Ok(SliceResult {
        cone: oracle.cone,
        xs,
        ys,
        member,
        boundary,
    })
}

impl SliceResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,x,y,member\n");
        for (j, row) in self.member.iter().enumerate() {
            for (i, &m) in row.iter().enumerate() {
                out.push_str(&format!("grid,{},{},{}\n", self.xs[i], self.ys[j], u8::from(m)));
            }
        }
        for (x, y) in &self.boundary {
            out.push_str(&format!("boundary,{x},{y},\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_parsing() {
        let p = Plane::parse("a0=1, x=a1:-2:2, y=aa1:-1:1", SliceCone::P, 1).unwrap();
        assert_eq!(p.base, vec![1.0, 0.0, 0.0]);
        assert_eq!((p.x.coord, p.y.coord), (1, 2));
        assert!(Plane::parse("a0=1,x=a1:-2:2", SliceCone::P, 1).is_err());
        assert!(Plane::parse("q=1,x=a1:-2:2,y=aa1:0:1", SliceCone::P, 1).is_err());
        assert!(Plane::parse("x=a1:2:-2,y=aa1:0:1", SliceCone::P, 1).is_err());
        assert!(Plane::parse("x=a1:0:1,y=a1:0:1", SliceCone::P, 1).is_err());
        assert_eq!(SliceCone::CLimit.coordinates(2), vec!["z0", "zt1", "zt2", "zzt1", "zzt2"]);
        assert_eq!("c-NEC".parse::<SliceCone>().unwrap(), SliceCone::CNec);
    }

    #[test]
    fn nesting_on_a_d1_slice() {
        let dims = ProblemDims::new(5, 1).unwrap();
        let grid = 31;
        let slice = |cone| {
            let plane = Plane::parse("a0=1,x=a1:-1.5:1.5,y=aa1:-0.5:0.5", cone, 1).unwrap();
            compute_slice(&MembershipOracle::new(cone, dims, DEFAULT_TOL, 0).unwrap(), &plane, grid).unwrap()
        };
        let (s, p, sp) = (slice(SliceCone::Sigma), slice(SliceCone::P), slice(SliceCone::SigmaPrime));
        let mut strict = 0;
        for j in 0..grid {
            for i in 0..grid {
                assert!(!s.member[j][i] || p.member[j][i]);
                assert!(!p.member[j][i] || sp.member[j][i]);
                strict += usize::from(p.member[j][i] && !s.member[j][i]);
            }
        }
        assert!(strict > 0);
        assert!(!p.boundary.is_empty());
    }

    #[test]
    fn p_slice_matches_facets() {
        let n = 5;
        let dims = ProblemDims::new(n, 1).unwrap();
        let plane = Plane::parse("a0=1,x=a1:-1:1,y=aa1:-0.3:0.3", SliceCone::P, 1).unwrap();
        let r = compute_slice(&MembershipOracle::new(SliceCone::P, dims, 0.0, 0).unwrap(), &plane, 21).unwrap();
        for &(x, y) in &r.boundary {
            // Some facet is active at every boundary point.
            let nearest = (0..=n)
                .map(|k| {
                    let l = n as f64 - 2.0 * k as f64;
                    (1.0 + x * l + y * (l * l - n as f64)).abs()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-4, "{x} {y} {nearest}");
        }
        let csv = r.to_csv();
        assert!(csv.starts_with("kind,x,y,member\ngrid,"));
    }
}

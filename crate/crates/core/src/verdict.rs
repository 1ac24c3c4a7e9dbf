use serde::Serialize;

use crate::model::SymmetricQuadratic;
use crate::moment::{InequalityReport, MomentWitnessMatrix};
use crate::sos::{ArrowFeasibility, EllipsoidPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Member,
    NonMember,
    Indeterminate,
}

/// Evidence attached to a verdict. Every variant can be re-checked without
/// re-running the routine that produced it.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Smallest facet residual of a polyhedral d=1 test; for `P_{n,1}` the
    /// index `k` names the hypercube vertex with `k` coordinates equal to −1.
    Facet { k: usize, residual: f64 },
    /// `q` is nonnegative on the cone's dual side but `⟨q, m⟩ < 0`.
    SeparatingPolynomial {
        q: SymmetricQuadratic,
        pairing: f64,
    },
    /// Minimum of the univariate `P_Q` over `[−√n, √n]`.
    IntervalMinimum { value: f64, argmin: f64 },
    /// 2×2 matrix whose semidefiniteness decides the limit cone.
    Matrix2 {
        matrix: [[f64; 2]; 2],
        min_eigenvalue: f64,
    },
    Arrow(ArrowFeasibility),
    EllipsoidMinimum { value: f64, argmin: EllipsoidPoint },
    MomentMatrix(MomentWitnessMatrix),
    /// Both closed-form residuals, for verdicts left undecided.
    Gap {
        necessary: InequalityReport,
        sufficient: InequalityReport,
    },
    /// Residual of the large-`n` limit inequality.
    LimitResidual { residual: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ConeVerdict {
    pub status: Status,
    /// Set when the deciding residual lies within tolerance of zero.
    pub boundary: bool,
    pub witness: Witness,
}

impl ConeVerdict {
    pub fn new(status: Status, boundary: bool, witness: Witness) -> Self {
        Self {
            status,
            boundary,
            witness,
        }
    }

    pub fn is_member(&self) -> bool {
        self.status == Status::Member
    }

    pub fn is_non_member(&self) -> bool {
        self.status == Status::NonMember
    }
}

//! Velocity relation `Jp * [x', y', z'] = Jq * [yA1', yA2', yA3']` and
//! singularity classification.
//!
//! Row `i` of `Jp` comes from differentiating the length constraint of
//! chain `i` after substituting `alpha' = -x' / (l4 sin(alpha))` and
//! `beta' = -x' / (l6 sin(beta))`:
//!
//! ```text
//! f_i1 = cot(alpha|beta) * (zCi - zBi),  f_i2 = yCi - yBi,  f_i3 = zCi - zBi
//! ```
//!
//! `Jq = diag(yCi - yBi)`.

use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fk::{self, FkSolution};
use crate::ik::IkSolution;
use crate::params::{JointInputs, Pose, ValidatedParams};

/// `|sin(alpha)|` or `|sin(beta)|` below this makes the cotangent blow up.
pub const COT_EPS: f64 = 1e-9;

/// The point at which the Jacobians are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Configuration {
    pub pose: Pose,
    pub inputs: JointInputs,
    pub alpha: f64,
    pub beta: f64,
}

impl Configuration {
    pub fn from_ik(pose: &Pose, solution: &IkSolution) -> Self {
        Configuration {
            pose: *pose,
            inputs: solution.inputs,
            alpha: solution.alpha,
            beta: solution.beta,
        }
    }

    pub fn from_fk(solution: &FkSolution, inputs: &JointInputs) -> Self {
        Configuration {
            pose: solution.pose,
            inputs: *inputs,
            alpha: solution.intermediates.alpha,
            beta: solution.intermediates.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianPair {
    pub jp: Matrix3<f64>,
    pub jq: Matrix3<f64>,
    pub det_jp: f64,
    pub det_jq: f64,
    /// `det(Jp)` divided by the product of its row norms, in `[-1, 1]`.
    pub norm_det_jp: f64,
    /// `u_ii / l2` for chains 1 and 2, `u_33 / l6` for chain 3.
    pub norm_u: [f64; 3],
    /// Product of `norm_u`.
    pub norm_det_jq: f64,
    pub config: Configuration,
}

/// Builds the pair at an inverse solution of `pose`.
pub fn build(pose: &Pose, solution: &IkSolution, params: &ValidatedParams) -> Result<JacobianPair> {
    build_at(&Configuration::from_ik(pose, solution), params)
}

pub fn build_at(config: &Configuration, params: &ValidatedParams) -> Result<JacobianPair> {
    let p = params;
    let (sa, ca) = config.alpha.sin_cos();
    let (sb, cb) = config.beta.sin_cos();
    if sa.abs() < COT_EPS {
        return Err(Error::CotangentSingular {
            angle: "alpha",
            value: sa.abs(),
        });
    }
    if sb.abs() < COT_EPS {
        return Err(Error::CotangentSingular {
            angle: "beta",
            value: sb.abs(),
        });
    }
    let cot = [ca / sa, ca / sa, cb / sb];
    let Pose { y, z, .. } = config.pose;
    let yc = [y + p.l3 / 2.0, y - p.l3 / 2.0, y];
    let zc = [z - p.l4 * sa, z - p.l4 * sa, z - p.l8 - p.l6 * sb - p.l7];
    let yb = config.inputs.as_array();
    let links = [p.l2, p.l2, p.l6];

    let mut jp = Matrix3::zeros();
    let mut u = [0.0; 3];
    for i in 0..3 {
        let dz = zc[i] - p.l1;
        u[i] = yc[i] - yb[i];
        jp[(i, 0)] = cot[i] * dz;
        jp[(i, 1)] = u[i];
        jp[(i, 2)] = dz;
    }
    let jq = Matrix3::from_diagonal(&Vector3::from(u));
    let det_jp = jp.determinant();
    let row_norms: f64 = (0..3).map(|i| jp.row(i).norm()).product();
    let norm_det_jp = if row_norms > 0.0 {
        det_jp / row_norms
    } else {
        0.0
    };
    let norm_u: [f64; 3] = std::array::from_fn(|i| u[i] / links[i]);
    Ok(JacobianPair {
        jp,
        jq,
        det_jp,
        det_jq: u[0] * u[1] * u[2],
        norm_det_jp,
        norm_u,
        norm_det_jq: norm_u.iter().product(),
        config: *config,
    })
}

impl JacobianPair {
    /// `d(pose) / d(inputs) = Jp^-1 Jq`, or `None` when `Jp` is singular.
    pub fn forward_map(&self) -> Option<Matrix3<f64>> {
        self.jp.try_inverse().map(|inv| inv * self.jq)
    }
}

/// Dimensionless thresholds on the normalized quantities of a
/// [`JacobianPair`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub serial: f64,
    pub parallel: f64,
}

impl Thresholds {
    pub fn uniform(v: f64) -> Self {
        Thresholds {
            serial: v,
            parallel: v,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::uniform(1e-3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityKind {
    Regular,
    Serial,
    Parallel,
    Comprehensive,
}

impl SingularityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SingularityKind::Regular => "regular",
            SingularityKind::Serial => "serial",
            SingularityKind::Parallel => "parallel",
            SingularityKind::Comprehensive => "comprehensive",
        }
    }

    pub fn is_serial(self) -> bool {
        matches!(
            self,
            SingularityKind::Serial | SingularityKind::Comprehensive
        )
    }

    pub fn is_parallel(self) -> bool {
        matches!(
            self,
            SingularityKind::Parallel | SingularityKind::Comprehensive
        )
    }
}

impl fmt::Display for SingularityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which way `Jp` lost rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum ParallelCase {
    /// Two rows are proportional (1-based row indices). Rows 1 and 2 mean
    /// `B1C1` and `B2C2` are parallel.
    RowPair { rows: (usize, usize) },
    /// No two rows are proportional; all three are dependent.
    General,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SingularityClass {
    pub kind: SingularityKind,
    /// Chains `i` (1-based) with `yCi - yBi = 0`, i.e. `Ai`, `Bi`, `Ci`
    /// collinear.
    pub serial_chains: Vec<usize>,
    pub parallel_case: Option<ParallelCase>,
}

/// Classifies a configuration.
///
/// Serial: some `|u_ii| / L_i` is at or below `thresholds.serial`. Parallel:
/// `|det(Jp)| / prod(|row_i|)` is at or below `thresholds.parallel`.
/// Comprehensive: both.
pub fn classify(pair: &JacobianPair, thresholds: &Thresholds) -> SingularityClass {
    let serial_chains: Vec<usize> = (0..3)
        .filter(|&i| pair.norm_u[i].abs() <= thresholds.serial)
        .map(|i| i + 1)
        .collect();
    let parallel = pair.norm_det_jp.abs() <= thresholds.parallel;
    let parallel_case = parallel.then(|| {
        let rows: [Vector3<f64>; 3] = std::array::from_fn(|i| pair.jp.row(i).transpose());
        [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .map(|(i, j)| {
                let denom = rows[i].norm() * rows[j].norm();
                let sine = if denom > 0.0 {
                    rows[i].cross(&rows[j]).norm() / denom
                } else {
                    0.0
                };
                (sine, (i + 1, j + 1))
            })
            .filter(|&(sine, _)| sine <= thresholds.parallel)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or(ParallelCase::General, |(_, rows)| ParallelCase::RowPair {
                rows,
            })
    });
    let kind = match (!serial_chains.is_empty(), parallel) {
        (false, false) => SingularityKind::Regular,
        (true, false) => SingularityKind::Serial,
        (false, true) => SingularityKind::Parallel,
        (true, true) => SingularityKind::Comprehensive,
    };
    SingularityClass {
        kind,
        serial_chains,
        parallel_case,
    }
}

/// Outcome of [`fd_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdCheck {
    /// `max |numeric - analytic| / max |analytic|`.
    pub deviation: f64,
    pub analytic: Matrix3<f64>,
    pub numeric: Matrix3<f64>,
}

/// Compares `Jp^-1 Jq` with central differences of the direct solution,
/// following the direct-solution branch that reproduces `pose`.
pub fn fd_check(
    pose: &Pose,
    solution: &IkSolution,
    params: &ValidatedParams,
    step: f64,
) -> Result<FdCheck> {
    let pair = build(pose, solution, params)?;
    let analytic = pair
        .forward_map()
        .ok_or_else(|| Error::NonComparable("Jp is singular".into()))?;

    let base_inputs = solution.inputs;
    let base = fk::solve(&base_inputs, params).map_err(|e| match e {
        Error::IndeterminateGamma { .. } => {
            Error::NonComparable("direct solution is indeterminate at this configuration".into())
        }
        other => other,
    })?;
    let base = base
        .iter()
        .filter(|s| s.pose.max_abs_diff(pose) <= 1e-6)
        .min_by(|a, b| {
            a.pose
                .max_abs_diff(pose)
                .total_cmp(&b.pose.max_abs_diff(pose))
        })
        .ok_or_else(|| Error::NonComparable("no direct solution matches the pose".into()))?;

    let perturbed = |i: usize, delta: f64| -> Result<Pose> {
        let mut v = base_inputs.as_array();
        v[i] += delta;
        let sols = fk::solve(&JointInputs::from_array(v), params)?;
        sols.iter()
            .filter(|s| s.branch == base.branch)
            .min_by(|a, b| {
                a.pose
                    .max_abs_diff(&base.pose)
                    .total_cmp(&b.pose.max_abs_diff(&base.pose))
            })
            .map(|s| s.pose)
            .ok_or_else(|| Error::NonComparable(format!("branch lost when perturbing yA{}", i + 1)))
    };

    let mut numeric = Matrix3::zeros();
    for i in 0..3 {
        let plus = perturbed(i, step)?.as_array();
        let minus = perturbed(i, -step)?.as_array();
        for r in 0..3 {
            numeric[(r, i)] = (plus[r] - minus[r]) / (2.0 * step);
        }
    }
    let scale = analytic.amax().max(f64::MIN_POSITIVE);
    let deviation = (numeric - analytic).amax() / scale;
    Ok(FdCheck {
        deviation,
        analytic,
        numeric,
    })
}

//! Closed-form inverse kinematics.
//!
//! `x` alone fixes `cos(alpha)` and `cos(beta)`; the sign of each angle is
//! free. With both angles chosen the `C` points are known, and each chain
//! length constraint gives `yAi = yCi ± sqrt(Mi)`. That is five binary
//! choices, 32 combinations in total.
//!
//! Every emitted solution is pushed back through [`fk`] and tagged with the
//! outcome.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fk::{self, clamp_unit};
use crate::params::{JointInputs, Pose, ValidatedParams};
use crate::sign::Sign;

/// Number of sign combinations before any feasibility check.
pub const THEORETICAL_COUNT: usize = 32;
/// A radicand within this fraction of the squared link length is a double
/// root.
const RADICAND_EPS: f64 = 1e-14;

/// Which root of `yAi = yCi ± sqrt(Mi)` was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Root {
    Plus,
    Minus,
    /// `Mi = 0`: both roots coincide and the chain is at a serial singularity.
    Double,
}

impl Root {
    fn value(self) -> f64 {
        match self {
            Root::Plus => 1.0,
            Root::Minus => -1.0,
            Root::Double => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct IkBranch {
    pub alpha: Sign,
    pub beta: Sign,
    pub roots: [Root; 3],
}

/// Outcome of pushing an inverse solution back through the direct solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RoundTrip {
    /// The direct solution set contains the target pose.
    Consistent {
        error: f64,
    },
    /// `yA1 - yA2 = l3`: the first loop is a parallelogram, so the direct
    /// solver has no unique `gamma`. The check is done with `gamma` taken
    /// from this configuration.
    PinnedGamma {
        error: f64,
    },
    /// No direct solution reproduces the pose within tolerance.
    Inconsistent {
        error: Option<f64>,
    },
    Unchecked,
}

impl RoundTrip {
    pub fn is_consistent(&self) -> bool {
        matches!(
            self,
            RoundTrip::Consistent { .. } | RoundTrip::PinnedGamma { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IkSolution {
    pub inputs: JointInputs,
    pub branch: IkBranch,
    /// `M1, M2, M3`, mm^2.
    pub radicands: [f64; 3],
    pub alpha: f64,
    pub beta: f64,
    pub round_trip: RoundTrip,
}

impl IkSolution {
    /// Some chain sits on its `Mi = 0` boundary.
    pub fn is_serial_boundary(&self) -> bool {
        self.branch.roots.contains(&Root::Double)
    }

    /// The first loop is a parallelogram (`yA1 - yA2 = l3`).
    pub fn is_parallelogram_assembly(&self, params: &ValidatedParams) -> bool {
        (self.inputs.ya1 - params.l3 - self.inputs.ya2).abs() <= fk::EPS_B
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IkReport {
    pub solutions: Vec<IkSolution>,
    /// Sign combinations (out of 32) rejected for a negative radicand.
    pub complex_combinations: usize,
    /// Real solutions the direct solver does not reproduce.
    pub round_trip_failures: usize,
}

/// `C`-point `y` coordinates and radicands for one `(alpha, beta)` choice.
struct ChainGeometry {
    yc: [f64; 3],
    radicands: [f64; 3],
}

fn chain_geometry(
    pose: &Pose,
    sin_alpha: f64,
    sin_beta: f64,
    p: &ValidatedParams,
) -> ChainGeometry {
    let zc12 = pose.z - p.l4 * sin_alpha;
    let zc3 = pose.z - p.l8 - p.l6 * sin_beta - p.l7;
    let m12 = p.l2 * p.l2 - (zc12 - p.l1).powi(2);
    let m3 = p.l6 * p.l6 - (zc3 - p.l1).powi(2);
    ChainGeometry {
        yc: [pose.y + p.l3 / 2.0, pose.y - p.l3 / 2.0, pose.y],
        radicands: [m12, m12, m3],
    }
}

fn root_choices(m: f64, link: f64) -> &'static [Root] {
    if m.abs() <= RADICAND_EPS * link * link {
        &[Root::Double]
    } else if m > 0.0 {
        &[Root::Plus, Root::Minus]
    } else {
        &[]
    }
}

/// The `(sign, angle)` pairs of `±acos(arg)`; one pair when the two coincide.
fn signed_acos(arg: f64) -> Vec<(Sign, f64)> {
    let a = arg.acos();
    if a == 0.0 || a == std::f64::consts::PI {
        vec![(Sign::Plus, a)]
    } else {
        vec![(Sign::Plus, a), (Sign::Minus, -a)]
    }
}

/// All real inverse solutions without the round-trip check, sorted by
/// `(yA1, yA2, yA3)`.
pub fn enumerate(pose: &Pose, params: &ValidatedParams) -> Result<Vec<IkSolution>> {
    Ok(enumerate_counted(pose, params)?.0)
}

fn enumerate_counted(pose: &Pose, params: &ValidatedParams) -> Result<(Vec<IkSolution>, usize)> {
    let p = params;
    let arg_a = (pose.x + p.b - p.d) / p.l4;
    let arg_b = (pose.x + p.d - p.b) / p.l6;
    let (Some(arg_a), Some(arg_b)) = (clamp_unit(arg_a), clamp_unit(arg_b)) else {
        return Err(Error::Unreachable {
            reason: format!(
                "x = {} is outside the arccos domain ((x+b-d)/l4 = {arg_a:.6}, (x+d-b)/l6 = {arg_b:.6})",
                pose.x
            ),
        });
    };
    let alphas = signed_acos(arg_a);
    let betas = signed_acos(arg_b);
    let links = [p.l2, p.l2, p.l6];

    let mut out = Vec::new();
    let mut complex = 0;
    for &(a_sign, alpha) in &alphas {
        for &(b_sign, beta) in &betas {
            let g = chain_geometry(pose, alpha.sin(), beta.sin(), p);
            let choices: Vec<&[Root]> = (0..3)
                .map(|i| root_choices(g.radicands[i], links[i]))
                .collect();
            let multiplicity = (3 - alphas.len()) * (3 - betas.len());
            if choices.iter().any(|c| c.is_empty()) {
                complex += 8 * multiplicity;
                continue;
            }
            for &r1 in choices[0] {
                for &r2 in choices[1] {
                    for &r3 in choices[2] {
                        let roots = [r1, r2, r3];
                        let ya: [f64; 3] = std::array::from_fn(|i| {
                            g.yc[i] + roots[i].value() * g.radicands[i].max(0.0).sqrt()
                        });
                        out.push(IkSolution {
                            inputs: JointInputs::from_array(ya),
                            branch: IkBranch {
                                alpha: a_sign,
                                beta: b_sign,
                                roots,
                            },
                            radicands: g.radicands,
                            alpha,
                            beta,
                            round_trip: RoundTrip::Unchecked,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(order);
    Ok((out, complex))
}

fn order(a: &IkSolution, b: &IkSolution) -> Ordering {
    let (x, y) = (a.inputs, b.inputs);
    x.ya1
        .total_cmp(&y.ya1)
        .then(x.ya2.total_cmp(&y.ya2))
        .then(x.ya3.total_cmp(&y.ya3))
        .then(a.branch.cmp(&b.branch))
}

/// Pushes `solution` back through the direct solver and compares with
/// `pose`.
pub fn round_trip(
    solution: &IkSolution,
    pose: &Pose,
    params: &ValidatedParams,
    tol: f64,
) -> RoundTrip {
    let nearest = |sols: &[fk::FkSolution]| {
        sols.iter()
            .map(|s| s.pose.max_abs_diff(pose))
            .min_by(f64::total_cmp)
    };
    match fk::solve_with_tolerance(&solution.inputs, params, tol) {
        Ok(sols) => match nearest(&sols) {
            Some(e) if e <= tol => RoundTrip::Consistent { error: e },
            e => RoundTrip::Inconsistent { error: e },
        },
        Err(Error::IndeterminateGamma { .. }) => {
            let p = params;
            let zc = pose.z - p.l4 * solution.alpha.sin();
            let cos_gamma = (pose.y + p.l3 / 2.0 - solution.inputs.ya1) / p.l2;
            let sin_gamma = (zc - p.l1) / p.l2;
            let sols = fk::solve_with_gamma(&solution.inputs, cos_gamma, sin_gamma, p, tol);
            match nearest(&sols) {
                Some(e) if e <= tol => RoundTrip::PinnedGamma { error: e },
                e => RoundTrip::Inconsistent { error: e },
            }
        }
        Err(_) => RoundTrip::Inconsistent { error: None },
    }
}

/// All real inverse solutions, round-trip checked at `tol`, with both
/// rejection counts.
pub fn solve_report(pose: &Pose, params: &ValidatedParams, tol: f64) -> Result<IkReport> {
    let (mut solutions, complex_combinations) = enumerate_counted(pose, params)?;
    for s in &mut solutions {
        s.round_trip = round_trip(s, pose, params, tol);
    }
    let round_trip_failures = solutions
        .iter()
        .filter(|s| !s.round_trip.is_consistent())
        .count();
    Ok(IkReport {
        solutions,
        complex_combinations,
        round_trip_failures,
    })
}

/// All real inverse solutions, round-trip checked at the default closure
/// tolerance.
pub fn solve(pose: &Pose, params: &ValidatedParams) -> Result<Vec<IkSolution>> {
    Ok(solve_report(pose, params, fk::CLOSURE_TOL)?.solutions)
}

/// Number of real inverse solutions; 0 when unreachable.
pub fn count_real(pose: &Pose, params: &ValidatedParams) -> usize {
    enumerate(pose, params).map(|s| s.len()).unwrap_or(0)
}

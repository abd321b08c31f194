//! Closed-form direct kinematics.
//!
//! The first loop (`A1 B1 C1 C2 B2 A2`) fixes the virtual angle `gamma`
//! from `yA1` and `yA2` alone. The second loop then closes through the
//! stacked parallelograms: `t = l4 sin(alpha) - l6 sin(beta)` from the
//! chain-3 length constraint, and `alpha` from a tangent-half-angle
//! quadratic after eliminating `beta`.
//!
//! Every `±` is enumerated and each candidate is kept only if it satisfies
//! all closure equations to the requested tolerance.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{JointInputs, Pose, ValidatedParams};
use crate::sign::Sign;

/// `|B|` at or below this is treated as the parallel singularity `B = 0`, mm.
pub const EPS_B: f64 = 1e-9;
/// Default closure tolerance for generated solutions, mm.
pub const CLOSURE_TOL: f64 = 1e-6;
/// Arguments of `acos`/`asin` within this of `±1` are clamped.
pub(crate) const CLAMP_EPS: f64 = 1e-12;
/// Below this `|J2 - J3|` the conjugate form of the half-angle root is used.
const HALF_ANGLE_EPS: f64 = 1e-9;
/// Two solutions closer than this (mm) are the same double root.
const DEDUP_EPS: f64 = 1e-9;

pub(crate) fn clamp_unit(v: f64) -> Option<f64> {
    if v.abs() <= 1.0 {
        Some(v)
    } else if v.abs() <= 1.0 + CLAMP_EPS {
        Some(v.signum())
    } else {
        None
    }
}

/// Sign choices that produced one direct solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FkBranch {
    pub sin_gamma: Sign,
    pub t: Sign,
    pub alpha: Sign,
}

/// Intermediate quantities of the direct solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FkIntermediates {
    /// `2 l2`.
    pub a: f64,
    /// `yA1 - l3 - yA2`.
    pub b: f64,
    pub cos_gamma: f64,
    pub sin_gamma: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `l4 sin(alpha) - l6 sin(beta)`.
    pub t: f64,
    pub h1: f64,
    pub h2: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FkSolution {
    pub pose: Pose,
    pub branch: FkBranch,
    pub intermediates: FkIntermediates,
    /// Largest of the four closure residuals, mm.
    pub residual: f64,
}

/// Result of the first loop: one `cos(gamma)` and the two elbow choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRoots {
    pub a: f64,
    pub b: f64,
    pub cos_gamma: f64,
    /// `[+sqrt(1 - cos^2), -sqrt(1 - cos^2)]`.
    pub sin_gamma: [f64; 2],
}

/// Solves the first loop.
///
/// Expanding `|B2C2| = l2` gives `B (2 l2 cos(gamma) + B) = 0`, so the only
/// regular root is `cos(gamma) = -B / (2 l2)`; the remaining freedom is the
/// sign of `sin(gamma)`.
pub fn solve_gamma(inputs: &JointInputs, params: &ValidatedParams) -> Result<GammaRoots> {
    let a = 2.0 * params.l2;
    let b = inputs.ya1 - params.l3 - inputs.ya2;
    if b.abs() <= EPS_B {
        return Err(Error::IndeterminateGamma { b });
    }
    let ratio = -b / a;
    let cos_gamma = clamp_unit(ratio).ok_or(Error::GammaOutOfRange { ratio: ratio.abs() })?;
    let s = (1.0 - cos_gamma * cos_gamma).max(0.0).sqrt();
    Ok(GammaRoots {
        a,
        b,
        cos_gamma,
        sin_gamma: [s, -s],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TRoots {
    pub h1: f64,
    pub h2: f64,
    /// `[-H1 + sqrt(H2), -H1 - sqrt(H2)]`.
    pub t: [f64; 2],
}

/// Chain-3 length constraint `|B3C3| = l6`, written as `(H1 + t)^2 = H2`.
pub fn solve_t(sin_gamma: f64, ya3: f64, pose_y: f64, params: &ValidatedParams) -> Result<TRoots> {
    let h1 = params.l2 * sin_gamma - params.l8 - params.l7;
    let dy = pose_y - ya3;
    let mut h2 = params.l6 * params.l6 - dy * dy;
    if h2 < 0.0 {
        if h2 >= -CLAMP_EPS * params.l6 * params.l6 {
            h2 = 0.0;
        } else {
            return Err(Error::ChainIIUnreachable { h2 });
        }
    }
    let r = h2.sqrt();
    Ok(TRoots {
        h1,
        h2,
        t: [-h1 + r, -h1 - r],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRoot {
    pub sign: Sign,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaRoots {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub discriminant: f64,
    pub roots: Vec<AlphaRoot>,
}

/// Solves `J1 sin(alpha) + J2 cos(alpha) + J3 = 0` with `k = tan(alpha / 2)`
/// and recovers `beta` from the two loop-2 relations.
pub fn solve_alpha(t: f64, params: &ValidatedParams) -> Result<AlphaRoots> {
    let (l4, l6) = (params.l4, params.l6);
    let off = params.rail_offset();
    let j1 = 2.0 * l4 * t;
    let j2 = 4.0 * l4 * off;
    let j3 = l6 * l6 - l4 * l4 - t * t - 4.0 * off * off;
    let scale = j1 * j1 + j2 * j2 + j3 * j3;
    let mut disc = j1 * j1 + j2 * j2 - j3 * j3;
    if disc < 0.0 {
        if disc >= -1e-14 * scale {
            disc = 0.0;
        } else {
            return Err(Error::AlphaUnreachable {
                reason: format!("discriminant J1^2 + J2^2 - J3^2 = {disc} < 0"),
            });
        }
    }
    if scale == 0.0 || (j1 == 0.0 && j2 == 0.0) {
        // every alpha (or none) satisfies the equation
        return Err(Error::AlphaUnreachable {
            reason: "degenerate alpha equation (J1 = J2 = 0)".into(),
        });
    }
    let root = disc.sqrt();
    let mut roots = Vec::with_capacity(2);
    for sign in Sign::BOTH {
        let s = sign.value();
        // k = (J1 + s sqrt(D)) / (J2 - J3) and its conjugate form
        // k = -(J2 + J3) / (J1 - s sqrt(D)); take the better conditioned one.
        let (num_a, den_a) = (j1 + s * root, j2 - j3);
        let (num_b, den_b) = (-(j2 + j3), j1 - s * root);
        let (num, den) = if den_a.abs() >= HALF_ANGLE_EPS && den_a.abs() >= den_b.abs() {
            (num_a, den_a)
        } else {
            (num_b, den_b)
        };
        if num == 0.0 && den == 0.0 {
            continue;
        }
        let alpha = wrap_angle(2.0 * num.atan2(den));
        let (sa, ca) = alpha.sin_cos();
        let cos_beta = (l4 * ca + 2.0 * params.d - 2.0 * params.b) / l6;
        let sin_beta = (l4 * sa - t) / l6;
        if cos_beta.abs() > 1.0 + CLAMP_EPS {
            continue;
        }
        if (sin_beta * sin_beta + cos_beta * cos_beta - 1.0).abs() > 1e-9 {
            continue;
        }
        let beta = sin_beta.atan2(cos_beta);
        if roots
            .iter()
            .any(|r: &AlphaRoot| angle_distance(r.alpha, alpha) <= 1e-12)
        {
            continue;
        }
        roots.push(AlphaRoot { sign, alpha, beta });
    }
    if roots.is_empty() {
        return Err(Error::AlphaUnreachable {
            reason: "no half-angle root closes the second loop".into(),
        });
    }
    Ok(AlphaRoots {
        j1,
        j2,
        j3,
        discriminant: disc,
        roots,
    })
}

/// Wraps into `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a.rem_euclid(TAU);
    if w > PI {
        w -= TAU;
    }
    w
}

fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// A point in the `(gamma, t, alpha, beta)` space the direct solution is
/// assembled from, not necessarily closure-consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub cos_gamma: f64,
    pub sin_gamma: f64,
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Candidate {
    /// Platform centre from `gamma` and `alpha`.
    pub fn pose(&self, inputs: &JointInputs, params: &ValidatedParams) -> Pose {
        let (sa, ca) = self.alpha.sin_cos();
        Pose {
            x: -params.b + params.l4 * ca + params.d,
            y: inputs.ya1 + params.l2 * self.cos_gamma - params.l3 / 2.0,
            z: params.l1 + params.l2 * self.sin_gamma + params.l4 * sa,
        }
    }
}

/// The four closure residuals of a candidate, mm:
/// `| |B2C2| - l2 |`, `| |B3C3| - l6 |`, the `t` definition and the
/// X-closure of the second loop.
pub fn residuals(c: &Candidate, inputs: &JointInputs, params: &ValidatedParams) -> [f64; 4] {
    let p = params;
    let pose = c.pose(inputs, p);
    let (sa, ca) = c.alpha.sin_cos();
    let (sb, cb) = c.beta.sin_cos();

    // C2 = C1 - l3 y; only the y and z offsets from B2 matter.
    let c2y = inputs.ya1 + p.l2 * c.cos_gamma - p.l3;
    let c2z = p.l1 + p.l2 * c.sin_gamma;
    let r_loop1 = ((c2y - inputs.ya2).hypot(c2z - p.l1) - p.l2).abs();

    let c3z = pose.z - p.l8 - p.l6 * sb - p.l7;
    let r_chain3 = ((pose.y - inputs.ya3).hypot(c3z - p.l1) - p.l6).abs();

    let r_t = (p.l4 * sa - p.l6 * sb - c.t).abs();
    let r_x = (p.l4 * ca + 2.0 * p.d - p.l6 * cb - 2.0 * p.b).abs();
    [r_loop1, r_chain3, r_t, r_x]
}

/// All direct solutions within [`CLOSURE_TOL`].
pub fn solve(inputs: &JointInputs, params: &ValidatedParams) -> Result<Vec<FkSolution>> {
    solve_with_tolerance(inputs, params, CLOSURE_TOL)
}

/// All direct solutions whose closure residual is within `tol`, sorted by
/// `(x, y, z)`.
///
/// `IndeterminateGamma` is the only error; unreachable inputs give an empty
/// list.
pub fn solve_with_tolerance(
    inputs: &JointInputs,
    params: &ValidatedParams,
    tol: f64,
) -> Result<Vec<FkSolution>> {
    let gamma = match solve_gamma(inputs, params) {
        Ok(g) => g,
        Err(Error::GammaOutOfRange { .. }) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::with_capacity(8);
    for (sign, sin_gamma) in Sign::BOTH.into_iter().zip(gamma.sin_gamma) {
        close_second_loop(
            inputs,
            params,
            (gamma.a, gamma.b),
            (gamma.cos_gamma, sin_gamma, sign),
            tol,
            &mut out,
        );
    }
    Ok(finish(out))
}

/// Direct solutions with `gamma` supplied by the caller.
///
/// Used at the parallel singularity `B = 0`, where the first loop is a
/// parallelogram and leaves `gamma` free.
pub fn solve_with_gamma(
    inputs: &JointInputs,
    cos_gamma: f64,
    sin_gamma: f64,
    params: &ValidatedParams,
    tol: f64,
) -> Vec<FkSolution> {
    let a = 2.0 * params.l2;
    let b = inputs.ya1 - params.l3 - inputs.ya2;
    let mut out = Vec::with_capacity(4);
    close_second_loop(
        inputs,
        params,
        (a, b),
        (cos_gamma, sin_gamma, Sign::of(sin_gamma)),
        tol,
        &mut out,
    );
    finish(out)
}

fn close_second_loop(
    inputs: &JointInputs,
    params: &ValidatedParams,
    (a, b): (f64, f64),
    (cos_gamma, sin_gamma, gamma_sign): (f64, f64, Sign),
    tol: f64,
    out: &mut Vec<FkSolution>,
) {
    let y = inputs.ya1 + params.l2 * cos_gamma - params.l3 / 2.0;
    let Ok(troots) = solve_t(sin_gamma, inputs.ya3, y, params) else {
        return;
    };
    for (t_sign, t) in Sign::BOTH.into_iter().zip(troots.t) {
        let Ok(alphas) = solve_alpha(t, params) else {
            continue;
        };
        for root in &alphas.roots {
            let cand = Candidate {
                cos_gamma,
                sin_gamma,
                t,
                alpha: root.alpha,
                beta: root.beta,
            };
            let residual = residuals(&cand, inputs, params)
                .into_iter()
                .fold(0.0, f64::max);
            if residual > tol {
                continue;
            }
            out.push(FkSolution {
                pose: cand.pose(inputs, params),
                branch: FkBranch {
                    sin_gamma: gamma_sign,
                    t: t_sign,
                    alpha: root.sign,
                },
                intermediates: FkIntermediates {
                    a,
                    b,
                    cos_gamma,
                    sin_gamma,
                    gamma: sin_gamma.atan2(cos_gamma),
                    alpha: root.alpha,
                    beta: root.beta,
                    t,
                    h1: troots.h1,
                    h2: troots.h2,
                    j1: alphas.j1,
                    j2: alphas.j2,
                    j3: alphas.j3,
                },
                residual,
            });
        }
    }
}

fn pose_order(a: &Pose, b: &Pose) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

fn finish(mut out: Vec<FkSolution>) -> Vec<FkSolution> {
    out.sort_by(|a, b| pose_order(&a.pose, &b.pose).then(a.branch.cmp(&b.branch)));
    // double roots (sin(gamma) = 0, H2 = 0, zero discriminant) appear twice
    out.dedup_by(|later, earlier| later.pose.max_abs_diff(&earlier.pose) <= DEDUP_EPS);
    out
}

/// Closure residual of an externally given pose against `inputs`: the
/// largest link-length violation of the three chains, minimized over the
/// `alpha`/`beta` sign choices. `None` when `x` is outside both `acos`
/// domains.
pub fn pose_residual(pose: &Pose, inputs: &JointInputs, params: &ValidatedParams) -> Option<f64> {
    let p = params;
    let ca = clamp_unit((pose.x + p.b - p.d) / p.l4)?;
    let cb = clamp_unit((pose.x + p.d - p.b) / p.l6)?;
    let sa = (1.0 - ca * ca).max(0.0).sqrt();
    let sb = (1.0 - cb * cb).max(0.0).sqrt();
    let mut best = f64::INFINITY;
    for a_sign in Sign::BOTH {
        for b_sign in Sign::BOTH {
            let zc = pose.z - p.l4 * a_sign.value() * sa;
            let zc3 = pose.z - p.l8 - p.l6 * b_sign.value() * sb - p.l7;
            let r1 = ((pose.y + p.l3 / 2.0 - inputs.ya1).hypot(zc - p.l1) - p.l2).abs();
            let r2 = ((pose.y - p.l3 / 2.0 - inputs.ya2).hypot(zc - p.l1) - p.l2).abs();
            let r3 = ((pose.y - inputs.ya3).hypot(zc3 - p.l1) - p.l6).abs();
            best = best.min(r1.max(r2).max(r3));
        }
    }
    Some(best)
}

//! Geometric parameters, frames and shared value types.
//!
//! Frame `O-XYZ` sits at the centre of the base platform. The rails of the
//! prismatic joints run along Y: `P1` and `P2` share the rail at `x = -b`,
//! `P3` runs on the rail at `x = +b`. All lengths are millimetres and all
//! angles are radians.

use std::fmt;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Link lengths and platform dimensions, in millimetres.
///
/// `a` and `l5` do not enter any kinematic equation. They are kept so the
/// full drawing can be described and are still checked for positivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismParams {
    /// Base half-length (structural only).
    pub a: f64,
    /// Base half-width; X offset of the rails.
    pub b: f64,
    /// Moving platform half-length.
    pub d: f64,
    /// Actuated link length (vertical offset of the `B` points).
    pub l1: f64,
    /// Connecting links of the planar loop.
    pub l2: f64,
    /// Intermediate link 11 (distance `C1C2`).
    pub l3: f64,
    /// Intermediate link 12 (distance `D1D2`).
    pub l4: f64,
    /// Parallelogram short links (structural only).
    pub l5: f64,
    /// Parallelogram long links.
    pub l6: f64,
    /// Link between the two parallelograms.
    pub l7: f64,
    /// Connecting link 8 below the platform.
    pub l8: f64,
}

impl MechanismParams {
    /// The reference prototype dimensions.
    pub const fn reference() -> Self {
        MechanismParams {
            a: 300.0,
            b: 150.0,
            d: 50.0,
            l1: 30.0,
            l2: 280.0,
            l3: 140.0,
            l4: 180.0,
            l5: 90.0,
            l6: 230.0,
            l7: 0.0,
            l8: 0.0,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "parameter file".into(),
            source,
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }

    fn fields(&self) -> [(&'static str, f64); 11] {
        [
            ("a", self.a),
            ("b", self.b),
            ("d", self.d),
            ("l1", self.l1),
            ("l2", self.l2),
            ("l3", self.l3),
            ("l4", self.l4),
            ("l5", self.l5),
            ("l6", self.l6),
            ("l7", self.l7),
            ("l8", self.l8),
        ]
    }

    pub fn validate(self) -> Result<ValidatedParams> {
        validate(self)
    }
}

/// Checks every invariant and reports the first violation in field order.
pub fn validate(params: MechanismParams) -> Result<ValidatedParams> {
    for (name, value) in params.fields() {
        if !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be finite, got {value}"),
            });
        }
        let may_be_zero = matches!(name, "l7" | "l8");
        if may_be_zero && value < 0.0 {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be >= 0, got {value}"),
            });
        }
        if !may_be_zero && value <= 0.0 {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be > 0, got {value}"),
            });
        }
    }
    // B2C2 = l2 forces cos(gamma) = -B / (2 l2); with l3 >= 2 l2 there is no
    // regular closure for any input pair.
    if params.l3 >= 2.0 * params.l2 {
        return Err(Error::InvalidParameter {
            name: "l3",
            reason: format!("must be < 2 * l2 = {}, got {}", 2.0 * params.l2, params.l3),
        });
    }
    Ok(ValidatedParams(params))
}

/// A parameter set that passed [`validate`]. Downstream code relies on it
/// instead of re-checking lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ValidatedParams(MechanismParams);

impl ValidatedParams {
    pub fn reference() -> Self {
        ValidatedParams(MechanismParams::reference())
    }

    pub fn into_inner(self) -> MechanismParams {
        self.0
    }

    /// `b - d`, the X offset between the platform edge and the rails.
    pub(crate) fn rail_offset(&self) -> f64 {
        self.0.b - self.0.d
    }
}

impl Deref for ValidatedParams {
    type Target = MechanismParams;

    fn deref(&self) -> &MechanismParams {
        &self.0
    }
}

fn check_finite(what: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { what, value })
    }
}

/// Prismatic joint positions along the base Y axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointInputs {
    pub ya1: f64,
    pub ya2: f64,
    pub ya3: f64,
}

impl JointInputs {
    pub fn new(ya1: f64, ya2: f64, ya3: f64) -> Result<Self> {
        Ok(JointInputs {
            ya1: check_finite("yA1", ya1)?,
            ya2: check_finite("yA2", ya2)?,
            ya3: check_finite("yA3", ya3)?,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.ya1, self.ya2, self.ya3]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        JointInputs {
            ya1: v[0],
            ya2: v[1],
            ya3: v[2],
        }
    }

    pub fn max_abs_diff(&self, other: &JointInputs) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for JointInputs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.ya1, self.ya2, self.ya3)
    }
}

/// Position of the platform centre `O'` in the base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Ok(Pose {
            x: check_finite("x", x)?,
            y: check_finite("y", y)?,
            z: check_finite("z", z)?,
        })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Pose {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }

    /// Largest per-coordinate difference.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Numerical tolerances shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum closure residual of a generated solution, mm.
    pub closure: f64,
    /// Comparison tolerance against 4-decimal reference values, mm.
    pub table: f64,
    /// Dimensionless threshold on normalized Jacobian quantities.
    pub singularity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closure: 1e-6,
            table: 5e-2,
            singularity: 1e-3,
        }
    }
}

//! Mobility and coupling-degree arithmetic over a loop decomposition.
//!
//! ```text
//! F       = sum(f_i) - sum(xi_Lj)
//! Delta_j = sum(f_i over SOC_j) - I_j - xi_Lj
//! kappa   = 1/2 * sum(|Delta_j|)       (for an AKC, sum(Delta_j) = 0)
//! ```
//!
//! The position-and-orientation set algebra that yields each `xi_Lj` is not
//! evaluated here; those counts are inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output motion of the moving platform: three translations, no rotation.
pub const PLATFORM_TRANSLATIONS: u32 = 3;
pub const PLATFORM_ROTATIONS: u32 = 0;
/// Independent displacement equations of the planar 2P4R loop.
pub const XI_LOOP_1: u32 = 3;
/// Independent displacement equations of the loop closed through the
/// parallelogram chain.
pub const XI_LOOP_2: u32 = 5;

/// One independent loop, closed by a single-opened chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    /// Sum of joint DOF along the loop's single-opened chain.
    pub joint_dof_sum: u32,
    /// Actuated joints in that chain.
    pub actuated_count: u32,
    /// Independent displacement equations of the loop.
    pub independent_eq_count: u32,
}

impl LoopSpec {
    pub fn new(joint_dof_sum: u32, actuated_count: u32, independent_eq_count: u32) -> Result<Self> {
        let spec = LoopSpec {
            joint_dof_sum,
            actuated_count,
            independent_eq_count,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.independent_eq_count > 6 {
            return Err(Error::InvalidLoop(format!(
                "at most 6 independent equations per loop, got {}",
                self.independent_eq_count
            )));
        }
        Ok(())
    }

    pub fn constraint_degree(&self) -> i64 {
        i64::from(self.joint_dof_sum)
            - i64::from(self.actuated_count)
            - i64::from(self.independent_eq_count)
    }
}

/// A whole mechanism: total joint DOF and its loop decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyInput {
    pub total_joint_dof_sum: u32,
    pub loops: Vec<LoopSpec>,
}

impl TopologyInput {
    /// The reference mechanism: 6 + 5 joint DOF, loops `(6, 2, 3)` and
    /// `(5, 1, 5)`.
    pub fn reference() -> Self {
        TopologyInput {
            total_joint_dof_sum: 11,
            loops: vec![
                LoopSpec {
                    joint_dof_sum: 6,
                    actuated_count: 2,
                    independent_eq_count: XI_LOOP_1,
                },
                LoopSpec {
                    joint_dof_sum: 5,
                    actuated_count: 1,
                    independent_eq_count: XI_LOOP_2,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopologyReport {
    pub dof: i64,
    pub deltas: Vec<i64>,
    pub kappa: u64,
}

pub fn dof(total_joint_dof_sum: u32, loops: &[LoopSpec]) -> i64 {
    let xi: i64 = loops
        .iter()
        .map(|l| i64::from(l.independent_eq_count))
        .sum();
    i64::from(total_joint_dof_sum) - xi
}

/// `Delta_j` for each loop; errors unless they sum to zero.
pub fn constraint_degrees(loops: &[LoopSpec]) -> Result<Vec<i64>> {
    for l in loops {
        l.check()?;
    }
    let deltas: Vec<i64> = loops.iter().map(LoopSpec::constraint_degree).collect();
    let sum: i64 = deltas.iter().sum();
    if sum != 0 {
        return Err(Error::InvalidAkc { sum });
    }
    Ok(deltas)
}

/// `kappa` of the given decomposition. Minimizing over decompositions is
/// left to the caller.
pub fn coupling_degree(deltas: &[i64]) -> Result<u64> {
    let sum: i64 = deltas.iter().sum();
    if sum != 0 {
        return Err(Error::InvalidAkc { sum });
    }
    // a zero sum makes sum(|Delta|) even
    let abs_sum: u64 = deltas.iter().map(|d| d.unsigned_abs()).sum();
    Ok(abs_sum / 2)
}

pub fn report(input: &TopologyInput) -> Result<TopologyReport> {
    let deltas = constraint_degrees(&input.loops)?;
    let kappa = coupling_degree(&deltas)?;
    Ok(TopologyReport {
        dof: dof(input.total_joint_dof_sum, &input.loops),
        deltas,
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(f: u32, i: u32, xi: u32) -> LoopSpec {
        LoopSpec::new(f, i, xi).unwrap()
    }

    #[test]
    fn reference_mechanism() {
        let r = report(&TopologyInput::reference()).unwrap();
        assert_eq!(r.dof, 3);
        assert_eq!(r.deltas, vec![1, -1]);
        assert_eq!(r.kappa, 1);
    }

    #[test]
    fn dof_cases() {
        assert_eq!(dof(11, &[l(6, 2, 3), l(5, 1, 5)]), 3);
        assert_eq!(dof(7, &[]), 7);
        assert_eq!(dof(6, &[l(6, 0, 6)]), 0);
    }

    #[test]
    fn constraint_degree_cases() {
        assert_eq!(
            constraint_degrees(&[l(6, 2, 3), l(5, 1, 5)]).unwrap(),
            vec![1, -1]
        );
        assert_eq!(constraint_degrees(&[l(4, 1, 3)]).unwrap(), vec![0]);
        assert!(matches!(
            constraint_degrees(&[l(6, 2, 3), l(5, 1, 4)]),
            Err(Error::InvalidAkc { sum: 1 })
        ));
    }

    #[test]
    fn coupling_degree_cases() {
        assert_eq!(coupling_degree(&[1, -1]).unwrap(), 1);
        assert_eq!(coupling_degree(&[0, 0]).unwrap(), 0);
        assert_eq!(coupling_degree(&[2, -1, -1]).unwrap(), 2);
        assert!(coupling_degree(&[2, -1]).is_err());
    }

    #[test]
    fn loop_equation_count_is_bounded() {
        assert!(LoopSpec::new(6, 0, 7).is_err());
        let bad = TopologyInput {
            total_joint_dof_sum: 6,
            loops: vec![LoopSpec {
                joint_dof_sum: 7,
                actuated_count: 0,
                independent_eq_count: 7,
            }],
        };
        assert!(report(&bad).is_err());
    }

    #[test]
    fn json_loop_list() {
        let text = r#"{"total_joint_dof_sum": 11, "loops": [
            {"joint_dof_sum": 6, "actuated_count": 2, "independent_eq_count": 3},
            {"joint_dof_sum": 5, "actuated_count": 1, "independent_eq_count": 5}]}"#;
        let input: TopologyInput = serde_json::from_str(text).unwrap();
        assert_eq!(input, TopologyInput::reference());
    }
}

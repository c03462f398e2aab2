use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MdhParam, DOF};
use crate::error::{Error, Result};

const DEFAULT_PROFILE: &str = include_str!("../../data/mdams_default.toml");

/// Supported profile schema version.
pub const MODEL_VERSION: u32 = 1;

pub const TRUNK_JOINTS: usize = 5;
pub const ARM_JOINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// One frame of a branch: the constant MDH parameters plus the generalized
/// variable that drives it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdhRow {
    pub alpha: f64,
    pub a: f64,
    pub theta: f64,
    pub d: f64,
    pub joint: JointKind,
    pub index: usize,
}

impl MdhRow {
    /// MDH parameters with the joint value `q` applied.
    pub fn at(&self, q: f64) -> MdhParam {
        match self.joint {
            JointKind::Revolute => MdhParam::new(self.alpha, self.a, self.theta + q, self.d),
            JointKind::Prismatic => MdhParam::new(self.alpha, self.a, self.theta, self.d + q),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    pub l: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub l6: f64,
    pub l7: f64,
    pub l8: f64,
    pub l9: f64,
    pub l10: f64,
}

impl Dimensions {
    /// Shoulder-to-wrist length of one arm.
    pub fn arm_reach(&self) -> f64 {
        self.l3 + self.l4 + self.l5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EeOffsets {
    pub right_offset: f64,
    pub left_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonParams {
    pub base_com_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Profile {
    model_version: u32,
    dimensions: Dimensions,
    end_effector: EeOffsets,
    skeleton: SkeletonParams,
    trunk: Vec<MdhRow>,
    right_arm: Vec<MdhRow>,
    left_arm: Vec<MdhRow>,
    joints: Vec<JointSpec>,
}

/// Kinematic description of the robot. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub dimensions: Dimensions,
    pub ee_offsets: EeOffsets,
    pub skeleton: SkeletonParams,
    trunk: [MdhRow; TRUNK_JOINTS],
    right_arm: [MdhRow; ARM_JOINTS],
    left_arm: [MdhRow; ARM_JOINTS],
    joints: Vec<JointSpec>,
    mass_weights: [f64; DOF],
}

impl RobotModel {
    /// The bundled default profile.
    pub fn default_profile() -> Self {
        Self::from_toml_str(DEFAULT_PROFILE).expect("bundled robot profile is valid")
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let profile: Profile = toml::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        Self::from_profile(profile)
    }

    fn from_profile(p: Profile) -> Result<Self> {
        if p.model_version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model_version {} (expected {MODEL_VERSION})",
                p.model_version
            )));
        }
        let trunk: [MdhRow; TRUNK_JOINTS] = p.trunk.try_into().map_err(|v: Vec<_>| {
            Error::Model(format!("trunk needs {TRUNK_JOINTS} rows, got {}", v.len()))
        })?;
        let right_arm: [MdhRow; ARM_JOINTS] = p.right_arm.try_into().map_err(|v: Vec<_>| {
            Error::Model(format!(
                "right arm needs {ARM_JOINTS} rows, got {}",
                v.len()
            ))
        })?;
        let left_arm: [MdhRow; ARM_JOINTS] = p.left_arm.try_into().map_err(|v: Vec<_>| {
            Error::Model(format!("left arm needs {ARM_JOINTS} rows, got {}", v.len()))
        })?;
        if p.joints.len() != DOF {
            return Err(Error::Model(format!(
                "expected {DOF} joint entries, got {}",
                p.joints.len()
            )));
        }

        let mut seen = [false; DOF];
        for row in trunk.iter().chain(&right_arm).chain(&left_arm) {
            let finite = [row.alpha, row.a, row.theta, row.d]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Model("non-finite MDH parameter".into()));
            }
            if row.index >= DOF || seen[row.index] {
                return Err(Error::Model(format!(
                    "joint index {} reused or out of range",
                    row.index
                )));
            }
            seen[row.index] = true;
        }
        // Arms must be driven by the 7-blocks that follow the 5 trunk variables.
        for (k, row) in right_arm.iter().enumerate() {
            if row.index != TRUNK_JOINTS + k {
                return Err(Error::Model(
                    "right arm rows must drive indices 5..12 in order".into(),
                ));
            }
        }
        for (k, row) in left_arm.iter().enumerate() {
            if row.index != TRUNK_JOINTS + ARM_JOINTS + k {
                return Err(Error::Model(
                    "left arm rows must drive indices 12..19 in order".into(),
                ));
            }
        }
        for j in &p.joints {
            if !(j.min.is_finite() && j.max.is_finite()) || j.max <= j.min {
                return Err(Error::Model(format!(
                    "joint {} has degenerate limits [{}, {}]",
                    j.name, j.min, j.max
                )));
            }
            if !(j.mass.is_finite() && j.mass >= 0.0) {
                return Err(Error::Model(format!("joint {} has invalid mass", j.name)));
            }
        }

        let mass_weights = distal_mass_weights(&p.joints)?;
        Ok(Self {
            dimensions: p.dimensions,
            ee_offsets: p.end_effector,
            skeleton: p.skeleton,
            trunk,
            right_arm,
            left_arm,
            joints: p.joints,
            mass_weights,
        })
    }

    pub fn trunk(&self) -> &[MdhRow; TRUNK_JOINTS] {
        &self.trunk
    }

    pub fn right_arm(&self) -> &[MdhRow; ARM_JOINTS] {
        &self.right_arm
    }

    pub fn left_arm(&self) -> &[MdhRow; ARM_JOINTS] {
        &self.left_arm
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn limits(&self) -> Vec<(f64, f64)> {
        self.joints.iter().map(|j| (j.min, j.max)).collect()
    }

    pub fn link_masses(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.mass).collect()
    }

    /// Normalized weights `W_i = M_i / sum_j M_j`, where `M_i` is the mass
    /// carried distally of joint `i` (its own link up to the end-effector).
    pub fn mass_weights(&self) -> &[f64; DOF] {
        &self.mass_weights
    }

    /// Returns a copy with a different per-link mass profile.
    pub fn with_masses(&self, masses: &[f64]) -> Result<Self> {
        if masses.len() != DOF {
            return Err(Error::Dimension {
                expected: DOF,
                actual: masses.len(),
            });
        }
        let mut joints = self.joints.clone();
        for (j, &m) in joints.iter_mut().zip(masses) {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::Model(format!("joint {} has invalid mass", j.name)));
            }
            j.mass = m;
        }
        let mass_weights = distal_mass_weights(&joints)?;
        Ok(Self {
            joints,
            mass_weights,
            ..self.clone()
        })
    }
}

fn distal_mass_weights(joints: &[JointSpec]) -> Result<[f64; DOF]> {
    let m: Vec<f64> = joints.iter().map(|j| j.mass).collect();
    let arm_r = TRUNK_JOINTS..TRUNK_JOINTS + ARM_JOINTS;
    let arm_l = TRUNK_JOINTS + ARM_JOINTS..DOF;
    let arms_total: f64 = m[TRUNK_JOINTS..].iter().sum();

    let mut carried = [0.0; DOF];
    for i in 0..TRUNK_JOINTS {
        carried[i] = m[i..TRUNK_JOINTS].iter().sum::<f64>() + arms_total;
    }
    for range in [arm_r, arm_l] {
        for i in range.clone() {
            carried[i] = m[i..range.end].iter().sum();
        }
    }
    let total: f64 = carried.iter().sum();
    if total <= 0.0 {
        return Err(Error::Model("link masses sum to zero".into()));
    }
    let mut w = [0.0; DOF];
    for (wi, ci) in w.iter_mut().zip(carried) {
        *wi = ci / total;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_matches_table_dimensions() {
        let m = RobotModel::default_profile();
        let d = &m.dimensions;
        let expected = [
            0.16, 0.262, 0.45, 0.15, 0.3, 0.15, 0.2, 0.05, 0.2, 0.05, 0.05, 0.05,
        ];
        let got = [
            d.l, d.l0, d.l1, d.l2, d.l3, d.l4, d.l5, d.l6, d.l7, d.l8, d.l9, d.l10,
        ];
        assert_eq!(got, expected);
        assert!((d.arm_reach() - 0.65).abs() < 1e-12);
    }

    #[test]
    fn mass_weights_sum_to_one() {
        let m = RobotModel::default_profile();
        let s: f64 = m.mass_weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        // base translation carries everything, hand roll only the hand
        assert!(m.mass_weights()[0] > m.mass_weights()[11]);
        assert_eq!(m.mass_weights()[11], m.mass_weights()[18]);
    }

    #[test]
    fn rejects_degenerate_limits() {
        let text = DEFAULT_PROFILE.replacen("max = 1.0", "max = -3.0", 1);
        assert!(matches!(
            RobotModel::from_toml_str(&text),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn rejects_wrong_version_and_unknown_keys() {
        let text = DEFAULT_PROFILE.replacen("model_version = 1", "model_version = 7", 1);
        assert!(RobotModel::from_toml_str(&text).is_err());
        let text = DEFAULT_PROFILE.replacen("model_version = 1", "model_version = 1\nbogus = 3", 1);
        assert!(RobotModel::from_toml_str(&text).is_err());
    }

    #[test]
    fn with_masses_reweights() {
        let m = RobotModel::default_profile();
        let mut masses = vec![0.0; DOF];
        masses[11] = 1.0;
        let m2 = m.with_masses(&masses).unwrap();
        // trunk joints carry the hand as well, so weights spread over trunk + right arm
        assert!(m2.mass_weights()[12..].iter().all(|&w| w == 0.0));
        assert!(m2.with_masses(&[0.0; DOF]).is_err());
    }
}

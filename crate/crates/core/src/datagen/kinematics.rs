use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::JOINT_NAMES;
use crate::error::{Error, Result};

/// One body configuration: seven joint angles in radians, in [`JOINT_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    pub angles: [f64; 7],
}

impl JointSample {
    pub fn new(angles: [f64; 7]) -> Self {
        Self { angles }
    }

    pub fn head_yaw(&self) -> f64 {
        self.angles[0]
    }
    pub fn head_pitch(&self) -> f64 {
        self.angles[1]
    }
    pub fn shoulder_roll(&self) -> f64 {
        self.angles[2]
    }
    pub fn shoulder_pitch(&self) -> f64 {
        self.angles[3]
    }
    pub fn elbow_roll(&self) -> f64 {
        self.angles[4]
    }
    pub fn elbow_yaw(&self) -> f64 {
        self.angles[5]
    }
    pub fn wrist(&self) -> f64 {
        self.angles[6]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Homogeneous 4x4 rigid transform, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform(pub [[f64; 4]; 4]);

impl Transform {
    pub fn identity() -> Self {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Transform(m)
    }

    pub fn translation(t: [f64; 3]) -> Self {
        let mut m = Self::identity();
        for (i, v) in t.iter().enumerate() {
            m.0[i][3] = *v;
        }
        m
    }

    pub fn rotation(axis: Axis, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = match axis {
            Axis::X => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
            Axis::Y => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
            Axis::Z => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        };
        let mut m = Self::identity();
        for i in 0..3 {
            m.0[i][..3].copy_from_slice(&r[i]);
        }
        m
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
        }
        out
    }
}

impl Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Transform(out)
    }
}

/// Geometry of the right arm and head chains plus the touch predicate.
///
/// Torso frame: x forward, y left, z up. The arm runs torso, shoulder
/// (pitch then roll), upper arm along x, elbow (yaw then roll), forearm plus
/// hand along x, wrist; the hand point is the origin of the last frame. The
/// head runs torso, neck, yaw, pitch, with the face target fixed in the head
/// frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    /// `(lo, hi)` radians per joint, in [`JOINT_NAMES`] order.
    pub limits: [(f64, f64); 7],
    /// Rotation axis per joint, in [`JOINT_NAMES`] order.
    pub axes: [Axis; 7],
    pub shoulder_offset: [f64; 3],
    pub neck_offset: [f64; 3],
    pub upper_arm: f64,
    pub forearm_hand: f64,
    pub face_target: [f64; 3],
    pub touch_radius: f64,
}

impl Default for ChainSpec {
    /// Nao-like right arm and head geometry in meters and radians.
    fn default() -> Self {
        Self {
            limits: [
                (-2.0857, 2.0857),
                (-0.6720, 0.5149),
                (-1.3265, 0.3142),
                (-2.0857, 2.0857),
                (0.0349, 1.5446),
                (-2.0857, 2.0857),
                (-1.8238, 1.8238),
            ],
            axes: [Axis::Z, Axis::Y, Axis::Z, Axis::Y, Axis::Z, Axis::X, Axis::X],
            shoulder_offset: [0.0, -0.098, 0.100],
            neck_offset: [0.0, 0.0, 0.1265],
            upper_arm: 0.105,
            forearm_hand: 0.114,
            face_target: [0.05, 0.0, 0.05],
            touch_radius: 0.03,
        }
    }
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, &(lo, hi)) in JOINT_NAMES.iter().zip(&self.limits) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Configuration(format!(
                    "joint limit for {name} must satisfy lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        if !(self.upper_arm > 0.0 && self.forearm_hand > 0.0) {
            return Err(Error::Configuration("link lengths must be positive".into()));
        }
        if !(self.touch_radius > 0.0) {
            return Err(Error::Configuration(format!(
                "touch radius must be positive, got {}",
                self.touch_radius
            )));
        }
        let finite = self
            .shoulder_offset
            .iter()
            .chain(&self.neck_offset)
            .chain(&self.face_target)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Configuration("chain offsets must be finite".into()));
        }
        Ok(())
    }

    pub fn check_limits(&self, sample: &JointSample) -> Result<()> {
        for ((name, &(lo, hi)), &a) in JOINT_NAMES.iter().zip(&self.limits).zip(&sample.angles) {
            if !(a >= lo && a <= hi) {
                return Err(Error::Domain(format!(
                    "{name} = {a} outside joint limits [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn hand_and_face(&self, q: &JointSample) -> ([f64; 3], [f64; 3]) {
        let rot = |j: usize| Transform::rotation(self.axes[j], q.angles[j]);
        let hand = Transform::translation(self.shoulder_offset)
            * rot(3)
            * rot(2)
            * Transform::translation([self.upper_arm, 0.0, 0.0])
            * rot(5)
            * rot(4)
            * Transform::translation([self.forearm_hand, 0.0, 0.0])
            * rot(6);
        let head = Transform::translation(self.neck_offset) * rot(0) * rot(1);
        (hand.apply([0.0; 3]), head.apply(self.face_target))
    }
}

/// Hand and face-target positions in the torso frame, meters.
pub fn forward_kinematics(sample: &JointSample, chain: &ChainSpec) -> Result<([f64; 3], [f64; 3])> {
    chain.check_limits(sample)?;
    Ok(chain.hand_and_face(sample))
}

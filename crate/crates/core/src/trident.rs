//! The trident snake: a triangular body of circumradius 1 with three legs of
//! length 1, joint angles `φ_i`, and a passive wheel pair at the end of each leg
//! that cannot move across the leg.
//!
//! Two parametrisations of the control fields are provided. In
//! [`Parametrization::Original`] the planar coordinates are the world position
//! of the root and the fields carry `cos θ, sin θ` factors. In
//! [`Parametrization::Transformed`] the planar velocity components are written
//! in the body frame (`ẇ = R_θ v`), which removes `θ` from the fields; the
//! kinematics below rotate them back when computing wheel velocities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::symexpr::{Affine, Expr};
use crate::vfield::{Coords, VectorField};

pub const BODY_RADIUS: f64 = 1.0;
pub const LEG_LENGTH: f64 = 1.0;

/// Generalised coordinates `(x, y, θ, φ1, φ2, φ3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Configuration {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub phi: [f64; 3],
}

impl Configuration {
    pub fn origin() -> Self {
        Configuration::default()
    }

    pub fn from_array(q: [f64; 6]) -> Self {
        Configuration {
            x: q[0],
            y: q[1],
            theta: q[2],
            phi: [q[3], q[4], q[5]],
        }
    }

    pub fn from_slice(q: &[f64]) -> Self {
        let mut a = [0.0; 6];
        a.copy_from_slice(&q[..6]);
        Configuration::from_array(a)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.x, self.y, self.theta, self.phi[0], self.phi[1], self.phi[2]]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parametrization {
    Original,
    Transformed,
}

impl Parametrization {
    /// Angular position `ψ_i` of each leg's vertex on the body.
    pub fn leg_offsets(self) -> [f64; 3] {
        match self {
            Parametrization::Original => [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            Parametrization::Transformed => [-2.0 * PI / 3.0, 0.0, 2.0 * PI / 3.0],
        }
    }

    pub fn fields(self) -> [VectorField; 3] {
        match self {
            Parametrization::Original => fields_original(),
            Parametrization::Transformed => fields_transformed(),
        }
    }

    /// World-frame root velocity for a coordinate velocity at `q`.
    pub fn root_velocity(self, q: &Configuration, qdot: &[f64]) -> [f64; 2] {
        match self {
            Parametrization::Original => [qdot[0], qdot[1]],
            Parametrization::Transformed => {
                let (s, c) = q.theta.sin_cos();
                [c * qdot[0] - s * qdot[1], s * qdot[0] + c * qdot[1]]
            }
        }
    }
}

/// Control fields in generalised coordinates with leg offsets `0, 2π/3, 4π/3`.
pub fn fields_original() -> [VectorField; 3] {
    let offsets = Parametrization::Original.leg_offsets();
    let theta = Affine::shifted(2, 0.0);
    let leg = |k: usize| Affine::shifted(3 + k, offsets[k]);
    let mut g1 = vec![Expr::cos(theta.clone()), Expr::sin(theta.clone()), Expr::zero()];
    let mut g2 = vec![Expr::neg(Expr::sin(theta.clone())), Expr::cos(theta), Expr::zero()];
    let mut g3 = vec![Expr::zero(), Expr::zero(), Expr::one()];
    for k in 0..3 {
        g1.push(Expr::sin(leg(k)));
        g2.push(Expr::neg(Expr::cos(leg(k))));
        g3.push(Expr::neg(Expr::sum(vec![
            Expr::one(),
            Expr::cos(Affine::shifted(3 + k, 0.0)),
        ])));
    }
    [
        VectorField::new(Coords::X, g1),
        VectorField::new(Coords::X, g2),
        VectorField::new(Coords::X, g3),
    ]
}

/// Control fields after the body-frame change of the planar velocity
/// (leg offsets `−2π/3, 0, 2π/3`).
pub fn fields_transformed() -> [VectorField; 3] {
    let offsets = Parametrization::Transformed.leg_offsets();
    let leg = |k: usize| Affine::shifted(3 + k, offsets[k]);
    let mut g1 = vec![Expr::one(), Expr::zero(), Expr::zero()];
    let mut g2 = vec![Expr::zero(), Expr::one(), Expr::zero()];
    let mut g3 = vec![Expr::zero(), Expr::zero(), Expr::one()];
    for k in 0..3 {
        g1.push(Expr::sin(leg(k)));
        g2.push(Expr::neg(Expr::cos(leg(k))));
        g3.push(Expr::neg(Expr::sum(vec![
            Expr::one(),
            Expr::cos(Affine::shifted(3 + k, 0.0)),
        ])));
    }
    [
        VectorField::new(Coords::X, g1),
        VectorField::new(Coords::X, g2),
        VectorField::new(Coords::X, g3),
    ]
}

/// Planar rotation by `theta` extended by 1 on the angular axis.
pub fn rotation(theta: f64) -> [[f64; 3]; 3] {
    let (s, c) = theta.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

/// `R_θ^T`, the form that maps world velocities into the body frame.
pub fn rotation_transpose(theta: f64) -> [[f64; 3]; 3] {
    let r = rotation(theta);
    let mut t = [[0.0; 3]; 3];
    for (i, row) in r.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

/// Positions of the tracked points of the robot in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodyPose {
    pub root: [f64; 2],
    pub vertices: [[f64; 2]; 3],
    pub wheels: [[f64; 2]; 3],
    pub link_directions: [[f64; 2]; 3],
}

/// Pose with the root at `(q.x, q.y)`.
pub fn kinematics(q: &Configuration, param: Parametrization) -> BodyPose {
    kinematics_at(q, [q.x, q.y], param)
}

/// Pose with an explicitly given world root position.
///
/// In the transformed parametrisation the planar coordinates are body-frame
/// quasi-coordinates, so trajectories reconstruct the world root separately.
pub fn kinematics_at(q: &Configuration, root: [f64; 2], param: Parametrization) -> BodyPose {
    let offsets = param.leg_offsets();
    let mut vertices = [[0.0; 2]; 3];
    let mut wheels = [[0.0; 2]; 3];
    let mut link_directions = [[0.0; 2]; 3];
    for i in 0..3 {
        let a = q.theta + offsets[i];
        let b = a + q.phi[i];
        vertices[i] = [root[0] + BODY_RADIUS * a.cos(), root[1] + BODY_RADIUS * a.sin()];
        link_directions[i] = [b.cos(), b.sin()];
        wheels[i] = [
            vertices[i][0] + LEG_LENGTH * link_directions[i][0],
            vertices[i][1] + LEG_LENGTH * link_directions[i][1],
        ];
    }
    BodyPose {
        root,
        vertices,
        wheels,
        link_directions,
    }
}

/// Wheel velocity components normal to each leg.
///
/// Differentiating the kinematics gives
/// `ẇ_i = ṙ + r θ̇ a_i^⊥ + l (θ̇ + φ̇_i) b_i^⊥`, projected on the leg normal `b_i^⊥`.
pub fn slip(q: &Configuration, qdot: &[f64], param: Parametrization) -> [f64; 3] {
    let root_vel = param.root_velocity(q, qdot);
    let offsets = param.leg_offsets();
    let theta_dot = qdot[2];
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = q.theta + offsets[i];
        let b = a + q.phi[i];
        let normal = [-b.sin(), b.cos()];
        let vertex_vel = [
            root_vel[0] - BODY_RADIUS * theta_dot * a.sin(),
            root_vel[1] + BODY_RADIUS * theta_dot * a.cos(),
        ];
        let link_rate = LEG_LENGTH * (theta_dot + qdot[3 + i]);
        let wheel_vel = [
            vertex_vel[0] + link_rate * normal[0],
            vertex_vel[1] + link_rate * normal[1],
        ];
        out[i] = wheel_vel[0] * normal[0] + wheel_vel[1] * normal[1];
    }
    out
}

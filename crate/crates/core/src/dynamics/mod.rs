//! Articulated floating-base model of the slithering robot.

mod equations;
mod kinematics;
mod model;

pub use equations::{
    compute_dynamics, compute_dynamics_with, contact_queries, kinetic_energy, linear_momentum,
    potential_energy, step, step_with, DynamicsMatrices, ExternalContact, OpenField,
    PhysicsOptions, StepOutcome, GRAVITY, MAX_SPEED,
};
pub use kinematics::{
    body_jacobians, euler_from_rotation, euler_rate_axes, euler_rotation, forward_kinematics,
    integrate_configuration, BodyJacobian, FrameSet,
};
pub use model::{wrap_angle, ConfigState, JointFamily, RobotModel, RobotParams};

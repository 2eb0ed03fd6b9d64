//! Equations of motion of the floating chain and the time stepper.
//!
//! The mass matrix is `D = Σ m Jvᵀ Jv + βᵀ (R I Rᵀ) β`, assembled from
//! composite spatial inertias along the chain. The bias vector is the generalized
//! projection of the Newton-Euler inertial forces at zero generalized
//! acceleration plus gravity, `H = Σ Jvᵀ m (J̇v q̇ - g) + βᵀ (I β̇ q̇ + ω × I ω)`,
//! where the velocity-product terms come from a forward recursion along the
//! chain.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};

use super::kinematics::{integrate_configuration, Kinematics};
use super::model::{ConfigState, RobotModel};
use crate::contact::{ground_reaction_with_damping, ContactQuery, GroundParams};
use crate::error::{Error, Result};

/// Generalized speed (rad/s or m/s) beyond which a step is reported as
/// diverged.
pub const MAX_SPEED: f64 = 1e4;

pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone)]
pub struct DynamicsMatrices {
    pub mass: DMatrix<f64>,
    pub bias: DVector<f64>,
    /// Maps joint torques to generalized forces.
    pub actuation: DMatrix<f64>,
    /// Stacked contact-point Jacobians, three rows per contact.
    pub contact_jacobian: DMatrix<f64>,
}

/// Extra contact forces beyond the ground plane, e.g. maze walls.
pub trait ExternalContact {
    /// Force at a contact point and its velocity stiffness `-∂F/∂v`.
    fn contact(&self, position: &Vector3<f64>, velocity: &Vector3<f64>)
        -> (Vector3<f64>, Matrix3<f64>);
}

/// No obstacles besides the ground.
#[derive(Debug, Clone, Copy, Default)]
pub struct OpenField;

impl ExternalContact for OpenField {
    fn contact(&self, _: &Vector3<f64>, _: &Vector3<f64>) -> (Vector3<f64>, Matrix3<f64>) {
        (Vector3::zeros(), Matrix3::zeros())
    }
}

/// Physics switches. Tests turn pieces off to audit conservation laws.
#[derive(Debug, Clone, Copy)]
pub struct PhysicsOptions {
    pub gravity: f64,
    pub ground_contact: bool,
}

impl Default for PhysicsOptions {
    fn default() -> Self {
        Self {
            gravity: GRAVITY,
            ground_contact: true,
        }
    }
}

fn gravity_vec(g: f64) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -g)
}

/// Spatial inertia of a body about the head origin in `(ω, v)` twist
/// coordinates, where `v` is the velocity of the point at the head origin.
fn spatial_inertia(mass: f64, inertia: &Matrix3<f64>, r: &Vector3<f64>) -> Matrix6<f64> {
    let rx = r.cross_matrix();
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia + rx.transpose() * rx * mass));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(rx.transpose() * -mass));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(rx * -mass));
    out.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    out
}

/// `Gᵀ K G` for a point at offset `s` from the head origin, where
/// `G = [-[s]×, I]` maps a twist to the point velocity.
fn point_block(k: &Matrix3<f64>, s: &Vector3<f64>) -> Matrix6<f64> {
    let g = -s.cross_matrix();
    let kg = k * g;
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&(g.transpose() * kg));
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&(g.transpose() * k));
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&kg);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(k);
    out
}

/// First body moved by generalized velocity `i`.
fn first_body(n: usize, i: usize) -> usize {
    if i < n {
        i + 1
    } else {
        0
    }
}

/// Twist generated by a unit rate of each generalized velocity, about the
/// head origin.
fn motion_axes(model: &RobotModel, k: &Kinematics) -> Vec<Vector6<f64>> {
    let n = model.n_joints;
    let o = k.origins[0];
    let mut axes = Vec::with_capacity(model.dof());
    for j in 0..n {
        let a = k.joint_axes[j];
        let v = a.cross(&(o - k.joint_positions[j]));
        axes.push(Vector6::new(a.x, a.y, a.z, v.x, v.y, v.z));
    }
    for i in 0..3 {
        let mut e = Vector6::zeros();
        e[3 + i] = 1.0;
        axes.push(e);
    }
    for i in 0..3 {
        let mut e = Vector6::zeros();
        e[i] = 1.0;
        axes.push(e);
    }
    axes
}

fn inertia_blocks(model: &RobotModel, k: &Kinematics) -> Vec<Matrix6<f64>> {
    let o = k.origins[0];
    (0..model.n_bodies())
        .map(|b| {
            let rot = k.rotations[b];
            let inertia = rot * model.link_inertia[b] * rot.transpose();
            spatial_inertia(model.link_mass, &inertia, &(k.coms[b] - o))
        })
        .collect()
}

/// `Σ_b J6_bᵀ A_b J6_b` for per-body 6×6 blocks `A_b`, assembled from
/// composite blocks along the chain. Exactly symmetric.
fn assemble(model: &RobotModel, k: &Kinematics, blocks: &[Matrix6<f64>]) -> DMatrix<f64> {
    let n = model.n_joints;
    let dof = model.dof();
    let mut composite = blocks.to_vec();
    for b in (0..composite.len() - 1).rev() {
        let next = composite[b + 1];
        composite[b] += next;
    }
    let axes = motion_axes(model, k);
    let forces: Vec<Vector6<f64>> = (0..dof)
        .map(|j| composite[first_body(n, j)] * axes[j])
        .collect();
    let mut out = DMatrix::zeros(dof, dof);
    for j in 0..dof {
        for i in 0..=j {
            let v = if first_body(n, i) <= first_body(n, j) {
                axes[i].dot(&forces[j])
            } else {
                axes[j].dot(&forces[i])
            };
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn mass_matrix(model: &RobotModel, k: &Kinematics) -> DMatrix<f64> {
    assemble(model, k, &inertia_blocks(model, k))
}

/// `∂P/∂ν_i` for the total linear momentum `P`.
fn momentum_columns(model: &RobotModel, k: &Kinematics) -> Vec<Vector3<f64>> {
    let n = model.n_joints;
    let nb = model.n_bodies();
    let o = k.origins[0];
    // Composite mass and first moment about the head origin.
    let mut mass = vec![0.0; nb + 1];
    let mut moment = vec![Vector3::zeros(); nb + 1];
    for b in (0..nb).rev() {
        mass[b] = mass[b + 1] + model.link_mass;
        moment[b] = moment[b + 1] + (k.coms[b] - o) * model.link_mass;
    }
    motion_axes(model, k)
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let b = first_body(n, i);
            let w = xi.fixed_rows::<3>(0).into_owned();
            let v = xi.fixed_rows::<3>(3).into_owned();
            v * mass[b] + w.cross(&moment[b])
        })
        .collect()
}

fn bias_vector(model: &RobotModel, k: &Kinematics, gravity: f64) -> DVector<f64> {
    let mut bias = DVector::zeros(model.dof());
    let g = gravity_vec(gravity);
    for b in 0..model.n_bodies() {
        let com = k.coms[b];
        let acc = k.point_accel_bias(b, &com);
        k.add_point_force(&mut bias, b, &com, &(model.link_mass * (acc - g)));
        let rot = k.rotations[b];
        let inertia = rot * model.link_inertia[b] * rot.transpose();
        let w = k.omegas[b];
        let tau = inertia * k.alpha_bias[b] + w.cross(&(inertia * w));
        k.add_body_torque(&mut bias, b, &tau);
    }
    bias
}

pub fn compute_dynamics(model: &RobotModel, state: &ConfigState) -> Result<DynamicsMatrices> {
    compute_dynamics_with(model, state, GRAVITY)
}

pub fn compute_dynamics_with(
    model: &RobotModel,
    state: &ConfigState,
    gravity: f64,
) -> Result<DynamicsMatrices> {
    model.check_state(state)?;
    let k = Kinematics::with_velocities(model, state);
    let n = model.n_joints;
    let mut actuation = DMatrix::zeros(model.dof(), n);
    for j in 0..n {
        actuation[(j, j)] = 1.0;
    }
    let mut contact_jacobian = DMatrix::zeros(3 * model.n_contacts(), model.dof());
    let mut row = 0;
    for b in 0..model.n_bodies() {
        for off in &model.contact_offsets[b] {
            let p = k.origins[b] + k.rotations[b] * off;
            contact_jacobian
                .view_mut((row, 0), (3, model.dof()))
                .copy_from(&k.point_jacobian(b, &p));
            row += 3;
        }
    }
    Ok(DynamicsMatrices {
        mass: mass_matrix(model, &k),
        bias: bias_vector(model, &k, gravity),
        actuation,
        contact_jacobian,
    })
}

/// Contact-point positions and velocities in world coordinates.
pub fn contact_queries(model: &RobotModel, state: &ConfigState) -> Result<Vec<ContactQuery>> {
    model.check_state(state)?;
    let k = Kinematics::with_velocities(model, state);
    Ok(contact_queries_of(model, &k))
}

fn contact_queries_of(model: &RobotModel, k: &Kinematics) -> Vec<ContactQuery> {
    let mut out = Vec::with_capacity(model.n_contacts());
    for b in 0..model.n_bodies() {
        for off in &model.contact_offsets[b] {
            let p = k.origins[b] + k.rotations[b] * off;
            out.push(ContactQuery {
                position: p,
                velocity: k.point_velocity(b, &p),
            });
        }
    }
    out
}

/// Result of one integration step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: ConfigState,
    pub accel: DVector<f64>,
}

/// Advances the state by `dt` with the ground model only.
pub fn step(
    model: &RobotModel,
    state: &ConfigState,
    torques: &[f64],
    ground: &GroundParams,
    dt: f64,
) -> Result<ConfigState> {
    step_with(model, state, torques, ground, dt, &OpenField, PhysicsOptions::default())
        .map(|o| o.state)
}

/// Semi-implicit Euler step: solve `D ν̇ = Ba u + Jcᵀ F - H`, update the
/// velocities, then the configuration with the new velocities. The head translation rate
/// is then corrected so the chain's linear momentum obeys the discrete
/// balance `P' = P + dt dP/dt` exactly.
pub fn step_with(
    model: &RobotModel,
    state: &ConfigState,
    torques: &[f64],
    ground: &GroundParams,
    dt: f64,
    obstacles: &dyn ExternalContact,
    options: PhysicsOptions,
) -> Result<StepOutcome> {
    model.check_state(state)?;
    if torques.len() != model.n_joints {
        return Err(Error::Dimension {
            what: "torques",
            expected: model.n_joints,
            actual: torques.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(crate::error::invalid("dt", "must be > 0"));
    }
    if torques.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("torques"));
    }
    let k = Kinematics::with_velocities(model, state);
    let mut blocks = inertia_blocks(model, &k);
    let mut rhs = -bias_vector(model, &k, options.gravity);
    for (j, u) in torques.iter().enumerate() {
        rhs[j] += u;
    }
    // Contact damping is integrated linearly implicitly: the velocity update
    // uses (D + dt Jᵀ K J), which keeps the stiff friction boundary layer and
    // the normal damping stable at millisecond steps.
    let origin = k.origins[0];
    for b in 0..model.n_bodies() {
        for off in &model.contact_offsets[b] {
            let p = k.origins[b] + k.rotations[b] * off;
            let v = k.point_velocity(b, &p);
            let (mut f, mut damping) = obstacles.contact(&p, &v);
            if options.ground_contact {
                let (fg, kg) = ground_reaction_with_damping(
                    ground,
                    &ContactQuery {
                        position: p,
                        velocity: v,
                    },
                );
                f += fg;
                damping += kg;
            }
            if f != Vector3::zeros() {
                k.add_point_force(&mut rhs, b, &p, &f);
            }
            if damping != Matrix3::zeros() {
                blocks[b] += point_block(&(damping * dt), &(p - origin));
            }
        }
    }
    let mass = assemble(model, &k, &blocks);
    let chol = mass.cholesky().ok_or(Error::SingularMassMatrix)?;
    let accel = chol.solve(&rhs);
    if accel.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("generalized acceleration"));
    }
    // Rate of the total linear momentum implied by this step's accelerations:
    // dP/dt = Σ m (Jv ν̇ + J̇v ν).
    let columns = momentum_columns(model, &k);
    let momentum_rate: Vector3<f64> = columns
        .iter()
        .zip(accel.iter())
        .map(|(c, a)| c * *a)
        .sum::<Vector3<f64>>()
        + (0..model.n_bodies())
            .map(|b| k.point_accel_bias(b, &k.coms[b]) * model.link_mass)
            .sum::<Vector3<f64>>();
    let momentum_before: Vector3<f64> = (0..model.n_bodies())
        .map(|b| model.link_mass * k.point_velocity(b, &k.coms[b]))
        .sum();

    let mut qdot = &state.qdot + &accel * dt;
    let mut q = integrate_configuration(model, &state.q, &qdot, dt);

    // Enforce the discrete momentum balance P' = P + dt dP/dt through the
    // head translation rate, which enters P with the total mass.
    let after = Kinematics::with_velocities(
        model,
        &ConfigState {
            q: q.clone(),
            qdot: qdot.clone(),
            time: 0.0,
        },
    );
    let momentum_after: Vector3<f64> = (0..model.n_bodies())
        .map(|b| model.link_mass * after.point_velocity(b, &after.coms[b]))
        .sum();
    let correction = (momentum_before + momentum_rate * dt - momentum_after) / model.total_mass();
    let p = model.head_pos_index();
    for i in 0..3 {
        qdot[p + i] += correction[i];
        q[p + i] += correction[i] * dt;
    }
    let next = ConfigState {
        q,
        qdot,
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    if next.qdot.amax() > MAX_SPEED {
        return Err(Error::Diverged(next.qdot.amax()));
    }
    Ok(StepOutcome {
        state: next,
        accel,
    })
}

/// Kinetic energy `½ νᵀ D ν`.
pub fn kinetic_energy(model: &RobotModel, state: &ConfigState) -> f64 {
    let k = Kinematics::positions(model, &state.q);
    let mass = mass_matrix(model, &k);
    0.5 * state.qdot.dot(&(&mass * &state.qdot))
}

pub fn potential_energy(model: &RobotModel, state: &ConfigState, gravity: f64) -> f64 {
    let k = Kinematics::positions(model, &state.q);
    k.coms.iter().map(|c| model.link_mass * gravity * c.z).sum()
}

/// Total linear momentum of the chain.
pub fn linear_momentum(model: &RobotModel, state: &ConfigState) -> Vector3<f64> {
    let k = Kinematics::with_velocities(model, state);
    (0..model.n_bodies())
        .map(|b| model.link_mass * k.point_velocity(b, &k.coms[b]))
        .sum()
}

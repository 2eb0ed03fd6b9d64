//! Hierarchical navigation for an articulated slithering robot.
//!
//! The stack has four layers. A global planner turns an occupancy grid into
//! waypoints, a DDPG policy picks gait parameters for each waypoint, two
//! coupled-oscillator pattern generators turn those parameters into joint
//! targets, and per-joint PID loops track the targets on a rigid-body model
//! with compliant Stribeck ground contact.

pub mod contact;
pub mod control;
pub mod cpg;
pub mod dynamics;
pub mod error;
pub mod navigator;
pub mod planner;
pub mod rl;
pub mod sim;

pub use error::{Error, Result};

//! Gauss-Markov velocity process and position integration.
//!
//! Velocities follow the first-order recursion
//! `v' = w*v + (1-w)*v_mean + sqrt(1-w^2) * n`, `n ~ N(0, s^2)` per axis,
//! applied independently per axis with a common memory degree `w` and
//! asymptotic std `s`. The stationary law per axis is N(v_mean, s^2).
//!
//! Positions integrate `q' = q + v*dt`. Components that leave `[0, area]`
//! reflect off the boundary; the violated velocity component and the
//! matching component of the asymptotic mean flip sign so the process keeps
//! pulling the vehicle inward.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::scenario::{MobilityParams, VehicleState};

/// One Gauss-Markov velocity update.
pub fn step_velocity(
    velocity: [f64; 2],
    mean_velocity: [f64; 2],
    memory_degree: f64,
    vel_std: f64,
    rng: &mut impl Rng,
) -> [f64; 2] {
    debug_assert!((0.0..=1.0).contains(&memory_degree));
    let noise_scale = (1.0 - memory_degree * memory_degree).sqrt();
    let normal = Normal::new(0.0, vel_std.max(0.0)).expect("valid std");
    let mut next = [0.0; 2];
    for axis in 0..2 {
        let w = normal.sample(rng);
        next[axis] =
            memory_degree * velocity[axis] + (1.0 - memory_degree) * mean_velocity[axis] + noise_scale * w;
    }
    next
}

/// Reflect a scalar coordinate into `[0, area]`, flipping `sign` once per
/// bounce.
fn reflect(mut x: f64, area: f64, sign: &mut f64) -> f64 {
    while x < 0.0 || x > area {
        if x < 0.0 {
            x = -x;
        } else {
            x = 2.0 * area - x;
        }
        *sign = -*sign;
    }
    x
}

/// Integrate one slot of motion and reflect at the area boundary.
/// Returns the new position plus the (possibly sign-flipped) velocity and
/// asymptotic mean velocity.
pub fn step_position(
    position: [f64; 2],
    velocity: [f64; 2],
    mean_velocity: [f64; 2],
    dt: f64,
    area: f64,
) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let mut q = [0.0; 2];
    let mut v = velocity;
    let mut v_mean = mean_velocity;
    for axis in 0..2 {
        let mut sign = 1.0;
        q[axis] = reflect(position[axis] + velocity[axis] * dt, area, &mut sign);
        v[axis] *= sign;
        v_mean[axis] *= sign;
    }
    (q, v, v_mean)
}

/// Advance one vehicle by a slot: move with the current velocity, then update
/// the velocity.
pub fn advance_vehicle(
    vehicle: &mut VehicleState,
    params: &MobilityParams,
    dt: f64,
    area: f64,
    rng: &mut impl Rng,
) {
    let (q, v, v_mean) = step_position(
        vehicle.position_m,
        vehicle.velocity_mps,
        vehicle.mean_velocity_mps,
        dt,
        area,
    );
    vehicle.position_m = q;
    vehicle.mean_velocity_mps = v_mean;
    vehicle.velocity_mps = step_velocity(v, v_mean, params.memory_degree, params.vel_std_mps, rng);
}

//! Gauss-Markov mobility inside a circular cell centred on the access point.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Position and motion of one device. Positions are in metres, speeds in
/// metres per slot (slots last one second).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityState {
    pub x_m: f64,
    pub y_m: f64,
    pub speed: f64,
    pub direction: f64,
    pub mean_speed: f64,
    pub mean_direction: f64,
    /// Memory level in `[0, 1]`: 1 keeps the previous speed and direction,
    /// 0 redraws them around the means every slot.
    pub memory: f64,
}

impl MobilityState {
    pub fn distance(&self) -> f64 {
        self.x_m.hypot(self.y_m)
    }
}

/// Update speed and direction:
/// `s' = a s + (1 - a) mean + sqrt(1 - a^2) w` with `w ~ N(0, 1)`,
/// and the speed clamped to `[0, 2 * mean_speed]`.
pub fn gmmm_step<R: Rng + ?Sized>(state: &MobilityState, rng: &mut R) -> MobilityState {
    let a = state.memory;
    let noise_scale = (1.0 - a * a).max(0.0).sqrt();
    let w_speed: f64 = rng.sample(StandardNormal);
    let w_dir: f64 = rng.sample(StandardNormal);
    let speed = a * state.speed + (1.0 - a) * state.mean_speed + noise_scale * w_speed;
    let direction = a * state.direction + (1.0 - a) * state.mean_direction + noise_scale * w_dir;
    MobilityState {
        speed: speed.clamp(0.0, 2.0 * state.mean_speed),
        direction,
        ..*state
    }
}

/// Move one slot along the current heading. A device that would leave the
/// cell is put back on the boundary and both its heading and mean heading
/// are turned toward the centre.
pub fn position_step(state: &MobilityState, cell_radius: f64) -> MobilityState {
    let mut next = *state;
    next.x_m += state.speed * state.direction.cos();
    next.y_m += state.speed * state.direction.sin();
    let r = next.distance();
    if r > cell_radius {
        let scale = cell_radius / r;
        next.x_m *= scale;
        next.y_m *= scale;
        let inward = (-next.y_m).atan2(-next.x_m);
        next.direction = inward;
        next.mean_direction = inward;
    }
    next
}

/// Uniform position in the disc with uniform mean heading and a mean speed
/// drawn from `[speed_min, speed_max]`. The device starts at its means.
pub fn initial_state<R: Rng + ?Sized>(
    rng: &mut R,
    cell_radius: f64,
    speed_min: f64,
    speed_max: f64,
    memory: f64,
) -> MobilityState {
    let r = cell_radius * super::uniform(rng, 0.0, 1.0).sqrt();
    let theta = super::uniform(rng, 0.0, 2.0 * PI);
    let mean_speed = super::uniform(rng, speed_min, speed_max);
    let mean_direction = super::uniform(rng, 0.0, 2.0 * PI);
    MobilityState {
        x_m: r * theta.cos(),
        y_m: r * theta.sin(),
        speed: mean_speed,
        direction: mean_direction,
        mean_speed,
        mean_direction,
        memory,
    }
}

//! Uplink channel: log-distance path loss, log-normal shadowing and
//! Rayleigh fading, redrawn independently every slot.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::mobility::MobilityState;
use super::world::WorldConfig;
use crate::model::ChannelState;
use crate::units::{db_to_linear, dbm_to_watts};

/// Path loss in dB at `distance_m`, floored at the 1 m reference.
pub fn path_loss_db(distance_m: f64, ref_db: f64, exponent: f64) -> f64 {
    ref_db + 10.0 * exponent * distance_m.max(1.0).log10()
}

/// Draw one slot's channel for a device at `position`. Consumes exactly one
/// normal and one exponential draw regardless of configuration.
pub fn channel_sample<R: Rng + ?Sized>(
    position: &MobilityState,
    cfg: &WorldConfig,
    rng: &mut R,
) -> ChannelState {
    let shadow: f64 = rng.sample(StandardNormal);
    let fade: f64 = rng.sample(Exp1);
    let loss_db = path_loss_db(
        position.distance(),
        cfg.pathloss_ref_db,
        cfg.pathloss_exponent,
    ) + cfg.shadowing_sigma_db * shadow;
    let fading = if cfg.rayleigh_fading {
        fade.max(f64::MIN_POSITIVE)
    } else {
        1.0
    };
    ChannelState {
        gain: db_to_linear(-loss_db) * fading,
        bandwidth_hz: cfg.bandwidth_hz,
        noise_power_w: dbm_to_watts(cfg.noise_power_dbm),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::stream_rng;

    fn at(x: f64) -> MobilityState {
        MobilityState {
            x_m: x,
            y_m: 0.0,
            speed: 0.0,
            direction: 0.0,
            mean_speed: 4.0,
            mean_direction: 0.0,
            memory: 0.8,
        }
    }

    #[test]
    fn doubling_distance_costs_nine_db() {
        let a = path_loss_db(10.0, 30.0, 3.0);
        let b = path_loss_db(20.0, 30.0, 3.0);
        assert!((b - a - 30.0 * 2f64.log10()).abs() < 1e-12);
        assert!((b - a - 9.03).abs() < 0.01);
    }

    #[test]
    fn path_loss_floors_at_reference() {
        assert_eq!(path_loss_db(0.0, 30.0, 3.0), 30.0);
        assert_eq!(path_loss_db(0.5, 30.0, 3.0), 30.0);
        assert_eq!(path_loss_db(1.0, 30.0, 3.0), 30.0);
    }

    #[test]
    fn deterministic_channel_without_randomness() {
        let cfg = WorldConfig {
            shadowing_sigma_db: 0.0,
            rayleigh_fading: false,
            ..WorldConfig::default()
        };
        let mut rng = stream_rng(0, 0);
        let near = channel_sample(&at(10.0), &cfg, &mut rng);
        let far = channel_sample(&at(20.0), &cfg, &mut rng);
        let ratio_db = 10.0 * (near.gain / far.gain).log10();
        assert!((ratio_db - 30.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn gain_positive_and_decreasing_in_distance_on_average() {
        let cfg = WorldConfig::default();
        let mut means = Vec::new();
        for d in [5.0, 15.0, 45.0] {
            let mut rng = stream_rng(77, 1);
            let n = 20_000;
            let mut sum = 0.0;
            for _ in 0..n {
                let ch = channel_sample(&at(d), &cfg, &mut rng);
                assert!(ch.gain > 0.0 && ch.gain.is_finite());
                sum += ch.gain;
            }
            means.push(sum / n as f64);
        }
        assert!(means[0] > means[1] && means[1] > means[2]);
    }
}

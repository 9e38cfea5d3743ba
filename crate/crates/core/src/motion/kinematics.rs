//! Acceleration-limited straight-line travel and discrete turning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicParams {
    /// m/s², used for both acceleration and braking.
    pub accel: f64,
    /// m/s.
    pub vmax: f64,
    /// Seconds for a full 360° rotation.
    pub full_turn_time: f64,
    /// Seconds to lift or to set down a pod.
    pub lift_set_time: f64,
}

impl Default for KinematicParams {
    fn default() -> Self {
        Self { accel: 0.5, vmax: 1.5, full_turn_time: 2.5, lift_set_time: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Error)]
pub enum KinematicsError {
    #[error("invalid segment input: distance {distance}, v_in {v_in}, v_out {v_out}")]
    Invalid { distance: f64, v_in: f64, v_out: f64 },
    #[error("cannot change speed from {v_in} to {v_out} m/s within {distance} m")]
    Infeasible { distance: f64, v_in: f64, v_out: f64 },
    #[error("kinematic parameters must be positive")]
    BadParams,
}

/// Cardinal heading; `y` grows northwards.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Heading {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, 1),
            Heading::East => (1, 0),
            Heading::South => (0, -1),
            Heading::West => (-1, 0),
        }
    }

    pub fn from_index(i: usize) -> Heading {
        Self::ALL[i & 3]
    }

    pub fn opposite(self) -> Heading {
        Self::from_index(self as usize + 2)
    }

    /// Number of quarter turns between two headings (0, 1 or 2).
    pub fn quarter_turns(self, to: Heading) -> u32 {
        match (to as i32 - self as i32).rem_euclid(4) {
            0 => 0,
            2 => 2,
            _ => 1,
        }
    }
}

impl KinematicParams {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let ok = [self.accel, self.vmax, self.full_turn_time, self.lift_set_time]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok { Ok(()) } else { Err(KinematicsError::BadParams) }
    }

    /// Minimal time to cover `distance` entering at `v_in` and leaving at `v_out`.
    pub fn segment_time(&self, distance: f64, v_in: f64, v_out: f64) -> Result<f64, KinematicsError> {
        let bad = !(distance >= 0.0 && distance.is_finite())
            || !(0.0..=self.vmax + EPS).contains(&v_in)
            || !(0.0..=self.vmax + EPS).contains(&v_out);
        if bad {
            return Err(KinematicsError::Invalid { distance, v_in, v_out });
        }
        let a = self.accel;
        if libm::fabs(v_out * v_out - v_in * v_in) > 2.0 * a * distance + EPS {
            return Err(KinematicsError::Infeasible { distance, v_in, v_out });
        }
        let peak = self.peak_speed(distance, v_in, v_out);
        if peak <= 0.0 {
            return Ok(0.0);
        }
        let d_acc = (peak * peak - v_in * v_in) / (2.0 * a);
        let d_dec = (peak * peak - v_out * v_out) / (2.0 * a);
        let cruise = (distance - d_acc - d_dec).max(0.0);
        Ok((peak - v_in) / a + cruise / peak + (peak - v_out) / a)
    }

    fn peak_speed(&self, distance: f64, v_in: f64, v_out: f64) -> f64 {
        let a = self.accel;
        let reach = libm::sqrt((2.0 * a * distance + v_in * v_in + v_out * v_out) / 2.0);
        reach.min(self.vmax).max(v_in).max(v_out)
    }

    /// Rest-to-rest travel time over `distance`.
    pub fn rest_to_rest(&self, distance: f64) -> f64 {
        // Always feasible from rest to rest.
        self.segment_time(distance, 0.0, 0.0).unwrap_or(0.0)
    }

    /// Time at which a rest-to-rest run over `total` metres reaches `x`.
    pub fn time_at(&self, total: f64, x: f64) -> f64 {
        let x = x.clamp(0.0, total);
        let a = self.accel;
        let peak = self.peak_speed(total, 0.0, 0.0);
        if peak <= 0.0 {
            return 0.0;
        }
        let d_ramp = peak * peak / (2.0 * a);
        let t_ramp = peak / a;
        let cruise = (total - 2.0 * d_ramp).max(0.0);
        if x <= d_ramp {
            libm::sqrt(2.0 * x / a)
        } else if x <= d_ramp + cruise {
            t_ramp + (x - d_ramp) / peak
        } else {
            let rest = (total - x).max(0.0);
            2.0 * t_ramp + cruise / peak - libm::sqrt(2.0 * rest / a)
        }
    }

    pub fn turn_time(&self, from: Heading, to: Heading) -> f64 {
        from.quarter_turns(to) as f64 * self.full_turn_time / 4.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> KinematicParams {
        KinematicParams::default()
    }

    #[test]
    fn anchors() {
        assert_eq!(k().segment_time(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((k().segment_time(4.5, 0.0, 0.0).unwrap() - 6.0).abs() < 1e-12);
        let t = k().segment_time(1.0, 0.0, 0.0).unwrap();
        assert!((t - 2.0 * libm::sqrt(2.0)).abs() < 1e-12);
    }

    #[test]
    fn cruise_phase() {
        // 3 s up, 3 s down over 4.5 m, plus 1.5 m at 1.5 m/s.
        assert!((k().rest_to_rest(6.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn moving_entry_and_exit() {
        assert!((k().segment_time(3.0, 1.5, 1.5).unwrap() - 2.0).abs() < 1e-12);
        // Braking from vmax to rest takes exactly the braking distance.
        assert!((k().segment_time(2.25, 1.5, 0.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_invalid() {
        assert!(matches!(k().segment_time(1.0, 1.5, 0.0), Err(KinematicsError::Infeasible { .. })));
        assert!(matches!(k().segment_time(-1.0, 0.0, 0.0), Err(KinematicsError::Invalid { .. })));
        assert!(matches!(k().segment_time(1.0, 2.0, 0.0), Err(KinematicsError::Invalid { .. })));
    }

    #[test]
    fn time_at_matches_partial_profile() {
        let p = k();
        assert_eq!(p.time_at(4.5, 0.0), 0.0);
        assert!((p.time_at(4.5, 4.5) - 6.0).abs() < 1e-12);
        assert!((p.time_at(4.5, 2.25) - 3.0).abs() < 1e-12);
        assert!((p.time_at(10.0, 5.0) - p.rest_to_rest(10.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn turns() {
        let p = k();
        assert_eq!(p.turn_time(Heading::North, Heading::North), 0.0);
        assert_eq!(p.turn_time(Heading::North, Heading::East), 0.625);
        assert_eq!(p.turn_time(Heading::North, Heading::West), 0.625);
        assert_eq!(p.turn_time(Heading::East, Heading::West), 1.25);
    }
}

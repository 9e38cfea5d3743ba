//! Robot kinematics, reservations and path planning.

mod kinematics;
mod planner;
mod reservation;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use kinematics::{Heading, KinematicParams, KinematicsError};
pub use planner::{Move, PlanError, PlanRequest, Planner, PlannerConfig, TimedPath};
pub use reservation::{slice_of, slice_range, Hold, ReservationTable, OPEN, SLICE};

use crate::layout::{Layout, StationRef};
use crate::{CellId, PodId, RobotId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: RobotId,
    /// Cell the robot rests on, or is heading for while a trip is underway.
    pub cell: CellId,
    pub heading: Heading,
    pub carrying: Option<PodId>,
    pub assigned_station: Option<StationRef>,
    /// Metres driven so far.
    pub distance_traveled: f64,
}

impl Robot {
    pub fn new(id: RobotId, cell: CellId) -> Self {
        Self { id, cell, heading: Heading::North, carrying: None, assigned_station: None, distance_traveled: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TripLeg {
    Lift(PodId),
    SetDown,
    Travel(CellId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TripEvent {
    Lifted { pod: PodId, at: f64 },
    SetDown { pod: PodId, at: f64 },
    Arrived { cell: CellId, at: f64 },
}

/// Runs `legs` back to back for one robot, reserving each travel leg, and
/// returns the resulting event stream.
pub fn execute_trip(
    layout: &Layout,
    planner: &mut Planner,
    table: &mut ReservationTable,
    robot: &mut Robot,
    legs: &[TripLeg],
    t0: f64,
) -> Result<Vec<TripEvent>, PlanError> {
    let mut t = t0;
    let mut events = Vec::new();
    let lift = layout.kinematics.lift_set_time;
    for leg in legs {
        match *leg {
            TripLeg::Lift(pod) => {
                debug_assert!(robot.carrying.is_none(), "lift while carrying");
                t += lift;
                robot.carrying = Some(pod);
                events.push(TripEvent::Lifted { pod, at: t });
            }
            TripLeg::SetDown => {
                t += lift;
                if let Some(pod) = robot.carrying.take() {
                    events.push(TripEvent::SetDown { pod, at: t });
                }
            }
            TripLeg::Travel(goal) => {
                let req = PlanRequest {
                    robot: robot.id,
                    start: robot.cell,
                    heading: robot.heading,
                    t0: t,
                    goal,
                    carrying: robot.carrying.is_some(),
                };
                let path = planner.plan(layout, table, req)?;
                t = path.end;
                robot.cell = goal;
                robot.heading = path.heading;
                robot.distance_traveled += path.distance;
                events.push(TripEvent::Arrived { cell: goal, at: t });
            }
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_layout, LayoutConfig};

    fn setup() -> (Layout, Planner, ReservationTable) {
        let cfg = LayoutConfig { aisles: 3, cross_aisles: 3, storage_locations: 128, pods: 100, ..LayoutConfig::default() };
        let l = build_layout(&cfg, KinematicParams::default()).unwrap();
        let t = ReservationTable::new(l.len(), 1);
        (l, Planner::new(PlannerConfig::default()), t)
    }

    #[test]
    fn lift_only() {
        let (l, mut p, mut t) = setup();
        let mut r = Robot::new(RobotId(0), l.storage_locations()[0]);
        let ev = execute_trip(&l, &mut p, &mut t, &mut r, &[TripLeg::Lift(PodId(4))], 10.0).unwrap();
        assert_eq!(ev, [TripEvent::Lifted { pod: PodId(4), at: 13.0 }]);
    }

    #[test]
    fn store_to_adjacent_cell() {
        let (l, mut p, mut t) = setup();
        let ox = l.config.buffer_depth as i32 + 1;
        let a = l.at(ox + 1, 1).unwrap();
        let b = l.at(ox + 2, 1).unwrap();
        let mut r = Robot::new(RobotId(0), a);
        r.heading = Heading::East;
        let legs = [TripLeg::Lift(PodId(0)), TripLeg::Travel(b), TripLeg::SetDown];
        let ev = execute_trip(&l, &mut p, &mut t, &mut r, &legs, 0.0).unwrap();
        let one = l.kinematics.rest_to_rest(1.0);
        assert_eq!(ev.len(), 3);
        match ev[2] {
            TripEvent::SetDown { at, .. } => assert!((at - (6.0 + one)).abs() < 1e-9),
            _ => panic!(),
        }
        assert_eq!(r.distance_traveled, 1.0);
    }

    #[test]
    fn idle_trip_has_no_lifts() {
        let (l, mut p, mut t) = setup();
        let mut r = Robot::new(RobotId(0), l.storage_locations()[0]);
        let dwell = l.dwell_points()[0];
        let ev = execute_trip(&l, &mut p, &mut t, &mut r, &[TripLeg::Travel(dwell)], 0.0).unwrap();
        assert!(ev.iter().all(|e| matches!(e, TripEvent::Arrived { .. })));
    }
}

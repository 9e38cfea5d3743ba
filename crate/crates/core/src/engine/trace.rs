use core::fmt;

use crate::layout::StationRef;
use crate::{CellId, OrderId, PodId, RobotId, SkuId};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Something observable that happened during a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TraceEvent {
    Plan { robot: RobotId, from: CellId, to: CellId, arrive: f64 },
    Lift { robot: RobotId, pod: PodId, cell: CellId },
    SetDown { robot: RobotId, pod: PodId, cell: CellId },
    AtStation { robot: RobotId, pod: PodId, station: StationRef },
    Pick { station: StationRef, pod: PodId, order: OrderId, sku: SkuId },
    Put { station: StationRef, pod: PodId, order: OrderId, units: u32 },
    OrderAssigned { station: StationRef, order: OrderId },
    OrderDone { station: StationRef, order: OrderId },
    ReplAssigned { station: StationRef, pod: PodId, order: OrderId },
    Pause { pick: bool, repl: bool, utilization: f64 },
}

impl fmt::Display for StationRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            crate::layout::StationKind::Pick => write!(f, "pick{}", self.index),
            crate::layout::StationKind::Replenishment => write!(f, "repl{}", self.index),
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TraceEvent::Plan { robot, from, to, arrive } => write!(f, "plan {robot} {from}->{to} eta={arrive:.3}"),
            TraceEvent::Lift { robot, pod, cell } => write!(f, "lift {robot} {pod} at {cell}"),
            TraceEvent::SetDown { robot, pod, cell } => write!(f, "setdown {robot} {pod} at {cell}"),
            TraceEvent::AtStation { robot, pod, station } => write!(f, "present {robot} {pod} at {station}"),
            TraceEvent::Pick { station, pod, order, sku } => write!(f, "pick {station} {pod} {order} {sku}"),
            TraceEvent::Put { station, pod, order, units } => write!(f, "put {station} {pod} {order} x{units}"),
            TraceEvent::OrderAssigned { station, order } => write!(f, "assign {order} to {station}"),
            TraceEvent::OrderDone { station, order } => write!(f, "done {order} at {station}"),
            TraceEvent::ReplAssigned { station, pod, order } => write!(f, "assign {order} to {station} on {pod}"),
            TraceEvent::Pause { pick, repl, utilization } => {
                write!(f, "pause pick={pick} repl={repl} util={utilization:.4}")
            }
        }
    }
}

/// Receives the event trace of a run.
pub trait TraceSink {
    fn record(&mut self, time: f64, event: &TraceEvent);
}

/// Running hash over the formatted trace lines.
pub(crate) struct TraceHasher(pub u64);

impl Default for TraceHasher {
    fn default() -> Self {
        Self(FNV_OFFSET)
    }
}

impl fmt::Write for TraceHasher {
    fn write_str(&mut self, s: &str) -> fmt::Result {
        self.0 = fnv1a(self.0, s.as_bytes());
        Ok(())
    }
}

impl TraceHasher {
    pub fn add(&mut self, time: f64, event: &TraceEvent) {
        self.0 = fnv1a(self.0, &time.to_bits().to_le_bytes());
        let _ = fmt::write(self, format_args!("{event}\n"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(FNV_OFFSET, b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(FNV_OFFSET, b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(FNV_OFFSET, b"foobar"), 0x85944171f73967e8);
    }
}

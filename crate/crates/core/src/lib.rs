//! Discrete-event simulation core for Robotic Mobile Fulfillment Systems.
//!
//! The crate is `no_std` (with `alloc`) and carries no IO: layouts, inventory,
//! order streams, robot motion, the decision-rule catalogs, the event engine,
//! metrics and experiment enumeration all live here. File formats, the
//! parallel runner and the command line live in the `rmfs` companion crate.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod dispatch;
pub mod engine;
pub mod experiments;
pub mod inventory;
pub mod layout;
pub mod metrics;
pub mod motion;
pub mod orders;
pub mod rng;
pub mod rules;

mod ids;

pub use ids::{CellId, OrderId, PodId, RobotId, SkuId, StationId};

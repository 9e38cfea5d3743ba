use core::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident, $inner:ty, $prefix:literal) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub $inner);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(
    /// Index of a waypoint in a [`crate::layout::WaypointGraph`].
    CellId, u32, "w"
);
id_type!(PodId, u32, "p");
id_type!(SkuId, u32, "i");
id_type!(RobotId, u32, "r");
id_type!(
    /// Stations are numbered per kind, in activation order.
    StationId, u32, "s"
);
id_type!(OrderId, u64, "o");

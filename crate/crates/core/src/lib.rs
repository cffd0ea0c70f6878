//! Numerical laboratory for mean equicontinuity of group actions.
//!
//! The crate realizes the acting group `Z` (and boxes in `Z^2`) with
//! counting measure, a catalog of symbolic and circle systems, Birkhoff and
//! Weyl averaging along Følner windows, the Besicovitch and Weyl
//! pseudometrics with their diagnostics, explicit maximal equicontinuous
//! factors, Weyl-sum eigenvalue detection, and elements of the topological
//! full group of the dyadic odometer.
//!
//! Every limsup is truncated to a declared tail of window indices and every
//! estimate records the parameters that produced it.

pub mod ergodic;
pub mod error;
pub mod factor;
pub mod fixed;
pub mod fullgroup;
pub mod group;
pub mod mean_equi;
pub mod point;
pub mod rng;
pub mod spectrum;
pub mod systems;

pub use error::{Error, Result};
pub use group::{FoelnerFamily, GroupElement, Tail, Window};
pub use point::{
    CirclePoint, Distance, OdometerPoint, Point, ProductMode, RotationNumber, SymbolicPoint,
};
pub use systems::{System, SystemHandle};

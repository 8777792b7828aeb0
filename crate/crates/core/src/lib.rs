//! Validated numerics for the universal area-preserving map.
//!
//! The crate builds the period-doubling fixed point of the renormalization
//! operator on generating functions, the map it induces, and rigorous
//! covering, cone and dimension checks on top of that map.

pub mod cones;
pub mod coords;
pub mod dimension;
pub mod error;
pub mod genfunc;
pub mod hexfloat;
pub mod hsets;
pub mod interval;
pub mod manifold;
pub mod map;
pub mod pipeline;
pub mod renorm;
pub mod tables;
pub mod tangle;
pub mod toy;

pub use error::{Error, Result};
pub use genfunc::{PolyBall, Var};
pub use interval::{eig2_real, mat2_solve, newton_step, IMat2, IVec2, Interval, NewtonVerdict};

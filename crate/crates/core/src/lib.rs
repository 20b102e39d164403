//! Stationary and transient solutions of the MEMS equation
//! `u_t = Δu + λ f(x) / g(u)` on an interval or a radially symmetric ball.

// `!(x < y)` is used deliberately so that NaN lands on the rejecting side.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod problem;
pub mod special;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Field, GridDomain, Shape};
pub use model::{ForcingProfile, NonlinearityProfile};
pub use problem::Problem;

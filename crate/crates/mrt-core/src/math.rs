//! Float functions for `no_std`, routed through libm.

pub(crate) use libm::{atan2, ceil, cos, exp, expm1, floor, log, log1p, pow, round, sin, sqrt, tan, tanh};

//! Surrogate construction and the integer-programming machinery behind the
//! design loops.

mod bnb;
mod ilp_text;
mod lp;
mod realify;
mod surrogate;

pub use bnb::{solve_bnb, solve_bnb_with, BnbOptions, BnbResult, BnbStatus, DEFAULT_NODE_LIMIT};
pub use ilp_text::{parse_ilp, write_ilp};
pub use lp::{lp_relaxation, solve_lp, LinearProgram, LpSolution, LpStatus};
pub use realify::{realify, realify_rows, realify_vector, unrealify, ContinuousVar, IlpInstance};
pub use surrogate::{
    build_surrogate, linear_surrogate, majorize_to_linear, minorize_inverse_quadratic,
    quadratic_surrogate, SurrogateState,
};

//! Division-property MILP models, built gadget by gadget, with an LP-format
//! emitter and solver backends.

pub mod gadgets;
pub mod ineq;
pub mod linear;
pub mod model;
pub mod solve;

pub use gadgets::{
    add_invertibility_cuts, build_and, build_fbk, build_ksg, build_linear_layer, build_wg7_eval,
    build_wgp, build_xor, AndModel, EvalConfig, KeyMode, ModelSize, Wg7Model,
};
pub use ineq::{IneqSet21, Inequality};
pub use linear::{copy_xor_counts, LinearLayerCounts};
pub use model::{LinConstraint, MilpModel, MilpVar, Objective, Sense, VarId};
pub use solve::{
    replay_witness, solve, BuiltinBackend, ExternalSolver, SolveOutcome, SolverBackend,
};

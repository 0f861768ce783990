//! Explainable multi-agent path finding on 4-connected grids.
//!
//! A plan is explained by cutting it into time windows in which the agents'
//! paths are vertex-disjoint; the number of windows is the plan's index.
//! [`highlevel::solve_xg_cbs`] searches for collision-free plans whose index
//! stays under a bound, [`highlevel::solve_cbs`] is the shortest-plan
//! baseline, and [`render`] draws one picture per window.

pub mod bench;
pub mod highlevel;
pub mod lowlevel;
pub mod plan;
pub mod render;
pub mod segmentation;
pub mod world;

pub use highlevel::{
    conflict_check, solve_cbs, solve_xg_cbs, Budget, ConflictCheck, Outcome, SearchStats,
    SegBranch, Solution, SrFallback, XgCbsOptions,
};
pub use lowlevel::{LowLevel, Weight, XgOptions};
pub use plan::{Conflict, Constraint, Path, Plan};
pub use segmentation::{greedy_decompose, index_with_collision_breaks, Decomposition};
pub use world::{AgentTask, Cell, GridWorld, Instance};

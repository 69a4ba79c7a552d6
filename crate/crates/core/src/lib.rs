//! Wildfire initial-attack simulation and planning.
//!
//! A stochastic cellular fire model runs on a 100x100 grid of 2 m cells.
//! Two drones survey it and maintain a shared belief map; a helicopter drops
//! water every few minutes. Both planners are Monte Carlo tree searches over
//! generative models built from the belief. The `experiments` module wraps
//! everything into seeded multi-run campaigns with statistics and reports.

pub mod coordinator;
pub mod drops;
pub mod experiments;
pub mod grid;
pub mod gridstate;
pub mod mcts;
pub mod propagation;
pub mod rng;
pub mod suppress_planner;
pub mod surveil_planner;
pub mod uav;

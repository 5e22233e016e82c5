//! Peer-to-peer energy sharing through a supply-demand function market.
//!
//! Prosumers submit one number each, the bid `b_i`, and receive `q_i = a·λ_c + b_i`
//! where the platform sets `λ_c` so that trades net to zero. This crate computes the
//! resulting Nash equilibrium in closed form, simulates the iterative bidding loop
//! that reaches it, handles prosumers with several resources, and runs the
//! comparison and sweep experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod equilibrium;
pub mod error;
pub mod market;
pub mod mrp;
pub mod protocol;

pub use equilibrium::{
    social_disutility, solve_individual, solve_ne, solve_ne_closed_form, solve_ne_heterogeneous, solve_social_optimum,
    SolveReport,
};
pub use error::{MarketError, Result};
pub use market::{clear, clear_price, Bid, EquilibriumOutcome, MarketParams, Prosumer, Role, Scenario, TradeOutcome};
pub use mrp::{solve_mrp_ne, solve_mrp_social, MrpProsumer, MrpResource, MrpScenario, MrpSolveReport};
pub use protocol::{run_protocol, simulate, ProtocolConfig, SimulationResult, UpdateMode};

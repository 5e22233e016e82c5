//! Round-based simulation of the smart-meter bidding loop.
//!
//! Each round every meter reads the broadcast clearing price, infers the sum of the
//! other meters' bids from it and its own last bid, and answers with its best
//! response. The platform clears the new bids and broadcasts the price again. The
//! loop stops once the price (and every bid) has stopped moving.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{clear_price, Bid, EquilibriumOutcome, MarketParams, Prosumer, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    /// All meters answer the same broadcast price (Jacobi).
    #[default]
    Simultaneous,
    /// Meters answer in index order; the platform re-clears after each bid (Gauss–Seidel).
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub update_mode: UpdateMode,
    /// Weight of the new best response in `b ← (1−γ)·b_old + γ·b_response`.
    pub damping: f64,
    /// Stop once `|Δλ_c|` falls to this value ($/kW).
    pub price_tolerance: f64,
    /// ...and every bid moved by at most this much (kW).
    pub bid_tolerance: f64,
    pub max_iter: usize,
    /// Price broadcast before the first round ($/kW).
    pub initial_price: f64,
    /// Keep per-round bid vectors in the log. Price residuals are always kept.
    pub log_bids: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            update_mode: UpdateMode::Simultaneous,
            damping: 0.5,
            price_tolerance: 1e-10,
            bid_tolerance: 1e-9,
            max_iter: 10_000,
            initial_price: 0.0,
            log_bids: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(MarketError::invalid("damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.price_tolerance > 0.0) {
            return Err(MarketError::invalid("price_tolerance", "must be > 0"));
        }
        if !(self.bid_tolerance > 0.0) {
            return Err(MarketError::invalid("bid_tolerance", "must be > 0"));
        }
        if self.max_iter == 0 {
            return Err(MarketError::invalid("max_iter", "must be >= 1"));
        }
        if !self.initial_price.is_finite() {
            return Err(MarketError::invalid("initial_price", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// Bids after this round (empty when bid logging is off).
    pub bids: Vec<f64>,
    /// Clearing price of those bids.
    pub lambda_c: f64,
    /// `|λ_c − λ_c(previous round)|`.
    pub residual: f64,
    /// Largest bid change in this round (kW).
    pub max_bid_change: f64,
    /// `Σ_{j≠i} b_j` as inferred by each meter this round (empty when bid logging is off).
    pub deduced_others: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub converged: bool,
    pub rounds: Vec<RoundLog>,
    pub outcome: EquilibriumOutcome,
}

impl SimulationResult {
    pub fn residual_history(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.residual).collect()
    }
}

/// Sum of the other bids implied by a broadcast price: `−N·a·λ − b_own`.
pub fn deduce_neighbor_sum(own_bid: f64, price: f64, market: &MarketParams) -> f64 {
    deduce_with_sensitivity_sum(own_bid, price, market.a * market.n as f64)
}

/// Same inference with heterogeneous sensitivities: `−(Σa_j)·λ − b_own`.
pub fn deduce_with_sensitivity_sum(own_bid: f64, price: f64, a_sum: f64) -> f64 {
    -a_sum * price - own_bid
}

/// Best bid for a prosumer in a homogeneous market given the sum of the other bids.
pub fn best_response(prosumer: &Prosumer, others_bid_sum: f64, market: &MarketParams) -> Bid {
    best_response_with_sensitivity(prosumer, others_bid_sum, market.a, market.a * (market.n as f64 - 1.0))
}

/// Best bid when the prosumer's own slope is `own_a` and the others' slopes sum to `others_a`.
///
/// The cost `f(D − q(b)) + q(b)·λ(b)` with `λ = −(b + S)/(own_a + others_a)` is a strictly
/// convex quadratic in `b`; its stationarity condition
/// `md(p) − λ + q / others_a = 0` is linear in `b` and solved directly.
pub fn best_response_with_sensitivity(prosumer: &Prosumer, others_bid_sum: f64, own_a: f64, others_a: f64) -> Bid {
    let a_sum = own_a + others_a;
    let lambda0 = -others_bid_sum / a_sum;
    let lambda1 = -1.0 / a_sum;
    let q0 = own_a * lambda0;
    let q1 = 1.0 + own_a * lambda1;
    let c = prosumer.c;
    let g0 = 2.0 * c * (prosumer.demand - q0) + prosumer.d - lambda0 + q0 / others_a;
    let slope = -2.0 * c * q1 - lambda1 + q1 / others_a;
    Bid(-g0 / slope)
}

/// Cost of prosumer `i` when it bids `b` and the others' bids sum to `others_bid_sum`.
pub fn bid_cost(prosumer: &Prosumer, b: f64, others_bid_sum: f64, own_a: f64, others_a: f64) -> f64 {
    let lambda = -(b + others_bid_sum) / (own_a + others_a);
    let q = own_a * lambda + b;
    prosumer.disutility(prosumer.demand - q) + q * lambda
}

/// Runs the protocol and reports the outcome whether or not it converged.
pub fn simulate(scenario: &Scenario, config: &ProtocolConfig) -> Result<SimulationResult> {
    scenario.validate()?;
    config.validate()?;
    let n = scenario.n();
    let a = scenario.sensitivities();
    let a_sum: f64 = a.iter().sum();
    let overrides = scenario.sensitivity_overrides();
    let overrides = overrides.as_deref();
    let gamma = config.damping;

    let mut bids = vec![Bid(0.0); n];
    let mut price = config.initial_price;
    let mut rounds = Vec::new();
    let mut converged = false;
    let mut deduced = vec![0.0; n];

    for round in 1..=config.max_iter {
        let previous_price = price;
        let previous_bids = bids.clone();
        match config.update_mode {
            UpdateMode::Simultaneous => {
                for i in 0..n {
                    deduced[i] = deduce_with_sensitivity_sum(bids[i].0, price, a_sum);
                }
                for i in 0..n {
                    let response = best_response_with_sensitivity(&scenario.prosumers[i], deduced[i], a[i], a_sum - a[i]);
                    bids[i] = Bid((1.0 - gamma) * bids[i].0 + gamma * response.0);
                }
                price = clear_price(&bids, &scenario.market, overrides)?;
            }
            UpdateMode::Sequential => {
                for i in 0..n {
                    deduced[i] = deduce_with_sensitivity_sum(bids[i].0, price, a_sum);
                    let response = best_response_with_sensitivity(&scenario.prosumers[i], deduced[i], a[i], a_sum - a[i]);
                    bids[i] = Bid((1.0 - gamma) * bids[i].0 + gamma * response.0);
                    price = clear_price(&bids, &scenario.market, overrides)?;
                }
            }
        }
        let residual = (price - previous_price).abs();
        let max_bid_change = bids.iter().zip(&previous_bids).map(|(b, o)| (b.0 - o.0).abs()).fold(0.0, f64::max);
        rounds.push(RoundLog {
            round,
            bids: if config.log_bids { bids.iter().map(|b| b.0).collect() } else { Vec::new() },
            lambda_c: price,
            residual,
            max_bid_change,
            deduced_others: if config.log_bids { deduced.clone() } else { Vec::new() },
        });
        if residual <= config.price_tolerance && max_bid_change <= config.bid_tolerance {
            converged = true;
            break;
        }
    }

    let outcome = EquilibriumOutcome::from_bids(scenario, bids)?;
    Ok(SimulationResult { converged, rounds, outcome })
}

/// Runs the protocol; non-convergence is an error carrying the residual history.
pub fn run_protocol(scenario: &Scenario, config: &ProtocolConfig) -> Result<SimulationResult> {
    let result = simulate(scenario, config)?;
    if result.converged {
        Ok(result)
    } else {
        let history = result.residual_history();
        Err(MarketError::NonConvergence {
            iterations: result.rounds.len(),
            residual: history.last().copied().unwrap_or(f64::NAN),
            history,
        })
    }
}

/// Writes `round,lambda_c,residual,b_1..b_N`.
pub fn write_rounds_csv<W: Write>(rounds: &[RoundLog], n: usize, mut out: W) -> io::Result<()> {
    write!(out, "round,lambda_c,residual")?;
    for i in 1..=n {
        write!(out, ",b_{i}")?;
    }
    writeln!(out)?;
    for r in rounds {
        write!(out, "{},{},{}", r.round, r.lambda_c, r.residual)?;
        for b in &r.bids {
            write!(out, ",{b}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

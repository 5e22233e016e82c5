//! Direct solvers for the single-resource sharing game.
//!
//! The Nash equilibrium of the bidding game is the unique minimiser of a separable
//! strictly convex program with one balance constraint:
//!
//! ```text
//!     min  Σ (c_i − 1/(2(N−1)a)) p_i² + (d_i + D_i/((N−1)a)) p_i
//!     s.t. Σ p_i = Σ D_i                                  : ξ
//! ```
//!
//! Its KKT conditions are solved in closed form. Bids are recovered from
//! `λ* = mean(2c_i p_i* + d_i)` and `b_i* = D_i − p_i* − a·λ*`.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{Bid, EquilibriumOutcome, Prosumer, Scenario};
use crate::protocol::{run_protocol, ProtocolConfig};

/// Output of a direct solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// Production adjustment per prosumer (kW).
    pub productions: Vec<f64>,
    /// Equilibrium bids; empty for planner problems, which involve no bidding.
    pub bids: Vec<Bid>,
    /// Clearing price at equilibrium, or the common marginal disutility for planner problems ($/kW).
    pub price: f64,
    /// Multiplier of the balance constraint; `ξ = −λ*` at a solution.
    pub dual: f64,
    /// Largest absolute stationarity violation at the returned point.
    pub kkt_residual: f64,
}

impl SolveReport {
    pub fn social_disutility(&self, scenario: &Scenario) -> f64 {
        social_disutility(&scenario.prosumers, &self.productions)
    }

    pub fn marginal_disutilities(&self, scenario: &Scenario) -> Vec<f64> {
        scenario.prosumers.iter().zip(&self.productions).map(|(pr, &p)| pr.marginal_disutility(p)).collect()
    }

    /// Full market outcome implied by the bids. Fails for planner reports (no bids).
    pub fn outcome(&self, scenario: &Scenario) -> Result<EquilibriumOutcome> {
        EquilibriumOutcome::from_bids(scenario, self.bids.clone())
    }
}

pub fn social_disutility(prosumers: &[Prosumer], p: &[f64]) -> f64 {
    prosumers.iter().zip(p).map(|(pr, &p)| pr.disutility(p)).sum()
}

/// Minimises `Σ α_k x_k² + β_k x_k` subject to `Σ x_k = total`, all `α_k > 0`.
///
/// Returns the minimiser and the multiplier `ξ` of the constraint
/// (stationarity `2α_k x_k + β_k + ξ = 0`).
pub(crate) fn separable_qp(alpha: &[f64], beta: &[f64], total: f64) -> (Vec<f64>, f64) {
    let w: Vec<f64> = alpha.iter().map(|a| 1.0 / (2.0 * a)).collect();
    let w_sum: f64 = w.iter().sum();
    let wb: f64 = w.iter().zip(beta).map(|(w, b)| w * b).sum();
    let xi = -(total + wb) / w_sum;
    let x = w.iter().zip(beta).map(|(w, b)| -(b + xi) * w).collect();
    (x, xi)
}

fn require_homogeneous(scenario: &Scenario) -> Result<()> {
    scenario.validate()?;
    if scenario.is_heterogeneous() {
        return Err(MarketError::WrongMode { expected: "homogeneous (no a_i overrides)" });
    }
    Ok(())
}

/// Unique Nash equilibrium of a homogeneous scenario via the closed form of the convex program.
pub fn solve_ne_closed_form(scenario: &Scenario) -> Result<SolveReport> {
    require_homogeneous(scenario)?;
    let n = scenario.n();
    let a = scenario.market.a;
    let k = (n as f64 - 1.0) * a;
    let alpha: Vec<f64> = scenario.prosumers.iter().map(|p| p.c - 1.0 / (2.0 * k)).collect();
    let beta: Vec<f64> = scenario.prosumers.iter().map(|p| p.d + p.demand / k).collect();
    let (productions, xi) = separable_qp(&alpha, &beta, scenario.total_demand());

    let price = scenario.prosumers.iter().zip(&productions).map(|(pr, &p)| pr.marginal_disutility(p)).sum::<f64>()
        / n as f64;
    let bids = scenario.prosumers.iter().zip(&productions).map(|(pr, &p)| Bid(pr.demand - p - a * price)).collect();
    let kkt_residual = alpha
        .iter()
        .zip(&beta)
        .zip(&productions)
        .map(|((al, be), p)| (2.0 * al * p + be + xi).abs())
        .fold(0.0, f64::max);
    Ok(SolveReport { productions, bids, price, dual: xi, kkt_residual })
}

/// Planner's problem: minimise total disutility subject to aggregate balance.
///
/// Works for any non-empty prosumer list, including a single prosumer.
pub fn social_optimum(prosumers: &[Prosumer]) -> SolveReport {
    let alpha: Vec<f64> = prosumers.iter().map(|p| p.c).collect();
    let beta: Vec<f64> = prosumers.iter().map(|p| p.d).collect();
    let total: f64 = prosumers.iter().map(|p| p.demand).sum();
    let (productions, xi) = separable_qp(&alpha, &beta, total);
    let kkt_residual =
        prosumers.iter().zip(&productions).map(|(pr, &p)| (pr.marginal_disutility(p) + xi).abs()).fold(0.0, f64::max);
    SolveReport { productions, bids: Vec::new(), price: -xi, dual: xi, kkt_residual }
}

pub fn solve_social_optimum(scenario: &Scenario) -> Result<SolveReport> {
    scenario.validate()?;
    Ok(social_optimum(&scenario.prosumers))
}

/// Each prosumer covers its own reduction: `p_i = D_i`, cost `f_i(D_i)`.
pub fn solve_individual(scenario: &Scenario) -> Vec<f64> {
    individual_costs(&scenario.prosumers)
}

pub fn individual_costs(prosumers: &[Prosumer]) -> Vec<f64> {
    prosumers.iter().map(|p| p.disutility(p.demand)).collect()
}

/// Stationarity residual of each prosumer's best-response problem at `outcome`:
/// `md_i − λ + q_i / Σ_{j≠i} a_j`.
pub fn stationarity_residuals(scenario: &Scenario, outcome: &EquilibriumOutcome) -> Vec<f64> {
    let a = scenario.sensitivities();
    let a_sum: f64 = a.iter().sum();
    scenario
        .prosumers
        .iter()
        .enumerate()
        .map(|(i, pr)| {
            let others = a_sum - a[i];
            pr.marginal_disutility(outcome.p[i]) - outcome.trade.lambda_c + outcome.trade.q[i] / others
        })
        .collect()
}

/// Equilibrium with per-prosumer sensitivities, found as the fixed point of damped best responses.
///
/// Accepts homogeneous scenarios too, treating every `a_i` as `a`.
pub fn solve_ne_heterogeneous(scenario: &Scenario) -> Result<SolveReport> {
    solve_ne_heterogeneous_with(scenario, &ProtocolConfig { log_bids: false, ..ProtocolConfig::default() })
}

pub fn solve_ne_heterogeneous_with(scenario: &Scenario, config: &ProtocolConfig) -> Result<SolveReport> {
    scenario.validate()?;
    let sim = run_protocol(scenario, config)?;
    if !sim.converged {
        let history: Vec<f64> = sim.rounds.iter().map(|r| r.residual).collect();
        return Err(MarketError::NonConvergence {
            iterations: sim.rounds.len(),
            residual: history.last().copied().unwrap_or(f64::NAN),
            history,
        });
    }
    let outcome = sim.outcome;
    let kkt_residual = stationarity_residuals(scenario, &outcome).into_iter().map(f64::abs).fold(0.0, f64::max);
    Ok(SolveReport {
        productions: outcome.p,
        bids: outcome.bids,
        price: outcome.trade.lambda_c,
        dual: -outcome.trade.lambda_c,
        kkt_residual,
    })
}

/// Nash equilibrium by the appropriate route: closed form when homogeneous, best-response
/// iteration when prosumers carry their own sensitivities.
pub fn solve_ne(scenario: &Scenario) -> Result<SolveReport> {
    if scenario.is_heterogeneous() {
        solve_ne_heterogeneous(scenario)
    } else {
        solve_ne_closed_form(scenario)
    }
}

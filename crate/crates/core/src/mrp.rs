//! Multi-resource prosumers: each participant controls several resources but submits one bid.
//!
//! With `I` prosumers and `t = −1/((I−1)a) > 0` the equilibrium productions solve
//!
//! ```text
//!     2c_i^k p_i^k + t·Σ_j p_i^j + d_i^k − t·D_i + ξ' = 0     for every resource (i, k)
//!     Σ_{i,k} p_i^k = Σ_i D_i
//! ```
//!
//! a dense linear system of size `N + 1`, `N = Σ K_i`. Each prosumer's block
//! `2·diag(c_i) + t·𝟙𝟙ᵀ` is positive definite, which is checked before the solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibrium::separable_qp;
use crate::error::{MarketError, Result};
use crate::market::{disutility, marginal_disutility, Bid, MarketParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrpResource {
    pub c: f64,
    pub d: f64,
}

impl MrpResource {
    pub fn new(c: f64, d: f64) -> Self {
        Self { c, d }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrpProsumer {
    pub resources: Vec<MrpResource>,
    #[serde(rename = "D")]
    pub demand: f64,
}

impl MrpProsumer {
    pub fn new(resources: Vec<MrpResource>, demand: f64) -> Self {
        Self { resources, demand }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resources.is_empty() {
            return Err(MarketError::invalid("resources", "need at least one resource"));
        }
        if !self.demand.is_finite() {
            return Err(MarketError::invalid("D", format!("must be finite, got {}", self.demand)));
        }
        for (k, r) in self.resources.iter().enumerate() {
            if !(r.c.is_finite() && r.c > 0.0) {
                return Err(MarketError::invalid(format!("resources[{k}].c"), format!("must be finite and > 0, got {}", r.c)));
            }
            if !(r.d.is_finite() && r.d > 0.0) {
                return Err(MarketError::invalid(format!("resources[{k}].d"), format!("must be finite and > 0, got {}", r.d)));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.resources.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrpScenario {
    /// `a` and the prosumer count `I` (which may be 1 here).
    pub market: MarketParams,
    pub prosumers: Vec<MrpProsumer>,
}

impl MrpScenario {
    pub fn new(a: f64, prosumers: Vec<MrpProsumer>) -> Result<Self> {
        let s = Self { market: MarketParams { a, n: prosumers.len() }, prosumers };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.market.a;
        if !(a.is_finite() && a < 0.0) {
            return Err(MarketError::invalid("a", format!("must be finite and < 0, got {a}")));
        }
        if self.prosumers.is_empty() {
            return Err(MarketError::TooFewParticipants { got: 0, min: 1 });
        }
        if self.market.n != self.prosumers.len() {
            return Err(MarketError::LengthMismatch { what: "prosumers", expected: self.market.n, got: self.prosumers.len() });
        }
        for (i, p) in self.prosumers.iter().enumerate() {
            p.validate().map_err(|e| e.at_index("prosumers", i))?;
        }
        Ok(())
    }

    /// Number of prosumers `I`.
    pub fn i(&self) -> usize {
        self.prosumers.len()
    }

    /// Total number of resources `N = Σ K_i`.
    pub fn resource_count(&self) -> usize {
        self.prosumers.iter().map(MrpProsumer::k).sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.prosumers.iter().map(|p| p.demand).sum()
    }

    fn resources(&self) -> impl Iterator<Item = &MrpResource> {
        self.prosumers.iter().flat_map(|p| p.resources.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrpSolveReport {
    /// `productions[i][k]` is resource `k` of prosumer `i` (kW).
    pub productions: Vec<Vec<f64>>,
    /// One bid per prosumer; empty for planner problems.
    pub bids: Vec<Bid>,
    pub price: f64,
    /// Multiplier `ξ'` of the balance constraint.
    pub dual: f64,
    pub kkt_residual: f64,
}

impl MrpSolveReport {
    pub fn total_disutility(&self, scenario: &MrpScenario) -> f64 {
        scenario
            .prosumers
            .iter()
            .zip(&self.productions)
            .flat_map(|(pr, p)| pr.resources.iter().zip(p))
            .map(|(r, &p)| disutility(r.c, r.d, p))
            .sum()
    }

    /// Marginal disutility of every resource, flattened in prosumer order.
    pub fn marginal_disutilities(&self, scenario: &MrpScenario) -> Vec<f64> {
        scenario
            .prosumers
            .iter()
            .zip(&self.productions)
            .flat_map(|(pr, p)| pr.resources.iter().zip(p))
            .map(|(r, &p)| marginal_disutility(r.c, r.d, p))
            .collect()
    }

    /// `Σ_k p_i^k` per prosumer.
    pub fn prosumer_totals(&self) -> Vec<f64> {
        self.productions.iter().map(|p| p.iter().sum()).collect()
    }
}

/// Cheapest way for one prosumer to cover its own reduction with its resources.
pub fn solve_mrp_individual(prosumer: &MrpProsumer) -> Result<Vec<f64>> {
    prosumer.validate()?;
    let c: Vec<f64> = prosumer.resources.iter().map(|r| r.c).collect();
    let d: Vec<f64> = prosumer.resources.iter().map(|r| r.d).collect();
    Ok(separable_qp(&c, &d, prosumer.demand).0)
}

/// Planner's problem over all resources: every marginal disutility equal.
pub fn solve_mrp_social(scenario: &MrpScenario) -> Result<MrpSolveReport> {
    scenario.validate()?;
    let c: Vec<f64> = scenario.resources().map(|r| r.c).collect();
    let d: Vec<f64> = scenario.resources().map(|r| r.d).collect();
    let (flat, xi) = separable_qp(&c, &d, scenario.total_demand());
    let kkt_residual = c.iter().zip(&d).zip(&flat).map(|((c, d), p)| (2.0 * c * p + d + xi).abs()).fold(0.0, f64::max);
    Ok(MrpSolveReport { productions: unflatten(scenario, &flat), bids: Vec::new(), price: -xi, dual: xi, kkt_residual })
}

fn unflatten(scenario: &MrpScenario, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(scenario.i());
    let mut offset = 0;
    for pr in &scenario.prosumers {
        out.push(flat[offset..offset + pr.k()].to_vec());
        offset += pr.k();
    }
    out
}

/// Per-prosumer Hessian block `2·diag(c_i) + t·𝟙𝟙ᵀ`.
pub fn hessian_block(prosumer: &MrpProsumer, t: f64) -> DMatrix<f64> {
    let k = prosumer.k();
    DMatrix::from_fn(k, k, |r, c| if r == c { t + 2.0 * prosumer.resources[r].c } else { t })
}

fn bids_from(scenario: &MrpScenario, productions: &[Vec<f64>], price: f64) -> Vec<Bid> {
    scenario
        .prosumers
        .iter()
        .zip(productions)
        .map(|(pr, p)| Bid(pr.demand - p.iter().sum::<f64>() - scenario.market.a * price))
        .collect()
}

/// Mean over prosumers of each prosumer's (common) marginal disutility.
fn average_prosumer_md(scenario: &MrpScenario, productions: &[Vec<f64>]) -> f64 {
    let per_prosumer = scenario.prosumers.iter().zip(productions).map(|(pr, p)| {
        pr.resources.iter().zip(p).map(|(r, &p)| marginal_disutility(r.c, r.d, p)).sum::<f64>() / pr.k() as f64
    });
    per_prosumer.sum::<f64>() / scenario.i() as f64
}

/// Nash equilibrium of the multi-resource sharing game.
///
/// With a single prosumer there is nobody to trade with and the problem is the
/// planner's problem; the bid then just offsets `a·λ` so that `q = 0`.
pub fn solve_mrp_ne(scenario: &MrpScenario) -> Result<MrpSolveReport> {
    scenario.validate()?;
    if scenario.i() == 1 {
        let mut report = solve_mrp_social(scenario)?;
        report.bids = bids_from(scenario, &report.productions, report.price);
        return Ok(report);
    }

    let n = scenario.resource_count();
    let t = -1.0 / ((scenario.i() as f64 - 1.0) * scenario.market.a);
    let mut m = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    let mut offset = 0;
    for (i, pr) in scenario.prosumers.iter().enumerate() {
        let block = hessian_block(pr, t);
        if block.clone().cholesky().is_none() {
            return Err(MarketError::InfeasibleParameters(format!("Hessian block of prosumer {i} is not positive definite")));
        }
        let k = pr.k();
        m.view_mut((offset, offset), (k, k)).copy_from(&block);
        m.view_mut((offset, n), (k, 1)).fill(1.0);
        for (r, res) in pr.resources.iter().enumerate() {
            rhs[offset + r] = -res.d + t * pr.demand;
        }
        offset += k;
    }
    m.view_mut((n, 0), (1, n)).fill(1.0);
    rhs[n] = scenario.total_demand();

    let x = m
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| MarketError::InfeasibleParameters("singular KKT matrix".into()))?;
    let xi = x[n];
    let kkt_residual = (&m * &x - &rhs).rows(0, n).amax();

    let productions = unflatten(scenario, &x.as_slice()[..n]);
    let price = average_prosumer_md(scenario, &productions);
    let bids = bids_from(scenario, &productions, price);
    Ok(MrpSolveReport { productions, bids, price, dual: xi, kkt_residual })
}

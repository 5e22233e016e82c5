//! Market vocabulary: prosumers, the supply-demand function, clearing and costs.
//!
//! Every participant submits a single number `b` (willingness to buy). With price
//! sensitivity `a < 0` its traded quantity at price `λ` is `q = a·λ + b`; the
//! platform picks the price at which the quantities sum to zero. Positive `q`
//! means the prosumer buys from the sharing market, negative means it sells.

use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};

/// Absolute tolerance on `b_i - b̄` below which a prosumer is classified neutral.
pub const NEUTRAL_BID_TOL: f64 = 1e-12;

/// One participant of the single-resource sharing game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prosumer {
    /// Quadratic disutility coefficient ($/kW²).
    pub c: f64,
    /// Linear disutility coefficient ($/kW).
    pub d: f64,
    /// Required load reduction (kW).
    #[serde(rename = "D")]
    pub demand: f64,
    /// Private price sensitivity; `None` means the market-wide value applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_i: Option<f64>,
}

impl Prosumer {
    pub fn new(c: f64, d: f64, demand: f64) -> Self {
        Self { c, d, demand, a_i: None }
    }

    pub fn with_sensitivity(mut self, a_i: f64) -> Self {
        self.a_i = Some(a_i);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(MarketError::invalid("c", format!("must be finite and > 0, got {}", self.c)));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(MarketError::invalid("d", format!("must be finite and > 0, got {}", self.d)));
        }
        if !self.demand.is_finite() {
            return Err(MarketError::invalid("D", format!("must be finite, got {}", self.demand)));
        }
        if let Some(a_i) = self.a_i {
            if !(a_i.is_finite() && a_i < 0.0) {
                return Err(MarketError::invalid("a_i", format!("must be finite and < 0, got {a_i}")));
            }
        }
        Ok(())
    }

    /// `f(p) = c·p² + d·p`.
    pub fn disutility(&self, p: f64) -> f64 {
        disutility(self.c, self.d, p)
    }

    /// `md(p) = 2·c·p + d`.
    pub fn marginal_disutility(&self, p: f64) -> f64 {
        marginal_disutility(self.c, self.d, p)
    }
}

pub fn disutility(c: f64, d: f64, p: f64) -> f64 {
    c * p * p + d * p
}

pub fn marginal_disutility(c: f64, d: f64, p: f64) -> f64 {
    2.0 * c * p + d
}

/// Disutility plus the money paid (or received, when `q < 0`) in the sharing market.
pub fn total_cost(prosumer: &Prosumer, p: f64, q: f64, lambda_c: f64) -> f64 {
    prosumer.disutility(p) + q * lambda_c
}

/// Market-wide parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    /// Universal price sensitivity (kW per $/kW), strictly negative.
    pub a: f64,
    /// Number of participants.
    pub n: usize,
}

impl MarketParams {
    pub fn new(a: f64, n: usize) -> Result<Self> {
        let market = Self { a, n };
        market.validate()?;
        Ok(market)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a < 0.0) {
            return Err(MarketError::invalid("a", format!("must be finite and < 0, got {}", self.a)));
        }
        if self.n < 2 {
            return Err(MarketError::TooFewParticipants { got: self.n, min: 2 });
        }
        Ok(())
    }
}

/// A market instance. Either every prosumer carries `a_i` (heterogeneous mode) or none does.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub market: MarketParams,
    pub prosumers: Vec<Prosumer>,
}

impl Scenario {
    pub fn new(a: f64, prosumers: Vec<Prosumer>) -> Result<Self> {
        let scenario = Self { market: MarketParams { a, n: prosumers.len() }, prosumers };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.prosumers.len() != self.market.n {
            return Err(MarketError::LengthMismatch {
                what: "prosumers",
                expected: self.market.n,
                got: self.prosumers.len(),
            });
        }
        for (i, p) in self.prosumers.iter().enumerate() {
            p.validate().map_err(|e| e.at_index("prosumers", i))?;
        }
        let with_override = self.prosumers.iter().filter(|p| p.a_i.is_some()).count();
        if with_override != 0 && with_override != self.prosumers.len() {
            return Err(MarketError::MixedSensitivityModes { with_override, n: self.prosumers.len() });
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.prosumers.len()
    }

    pub fn is_heterogeneous(&self) -> bool {
        self.prosumers.first().is_some_and(|p| p.a_i.is_some())
    }

    /// Per-prosumer price sensitivities: the overrides when present, else `a` repeated.
    pub fn sensitivities(&self) -> Vec<f64> {
        self.prosumers.iter().map(|p| p.a_i.unwrap_or(self.market.a)).collect()
    }

    pub fn sensitivity_overrides(&self) -> Option<Vec<f64>> {
        self.prosumers.iter().map(|p| p.a_i).collect()
    }

    pub fn total_demand(&self) -> f64 {
        self.prosumers.iter().map(|p| p.demand).sum()
    }

    /// Same scenario with the market sensitivity (and any overrides) scaled by `factor`.
    pub fn with_scaled_sensitivity(&self, factor: f64) -> Self {
        let mut scaled = self.clone();
        scaled.market.a *= factor;
        for p in &mut scaled.prosumers {
            p.a_i = p.a_i.map(|a| a * factor);
        }
        scaled
    }
}

/// Willingness to buy (kW). No sign restriction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bid(pub f64);

impl Bid {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<f64> for Bid {
    fn from(b: f64) -> Self {
        Bid(b)
    }
}

/// Result of clearing a bid vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeOutcome {
    /// Traded quantity per prosumer (kW, buyer-positive).
    pub q: Vec<f64>,
    /// Clearing price ($/kW).
    pub lambda_c: f64,
}

impl TradeOutcome {
    pub fn net_quantity(&self) -> f64 {
        self.q.iter().sum()
    }

    /// Net money flow `Σ q_i·λ_c`; zero for a cleared market.
    pub fn net_payment(&self) -> f64 {
        self.q.iter().map(|q| q * self.lambda_c).sum()
    }
}

fn sensitivity_sum(market: &MarketParams, a_overrides: Option<&[f64]>, n: usize) -> Result<f64> {
    let total = match a_overrides {
        Some(a) => {
            if a.len() != n {
                return Err(MarketError::LengthMismatch { what: "a_overrides", expected: n, got: a.len() });
            }
            a.iter().sum()
        }
        None => market.a * n as f64,
    };
    if total == 0.0 || !total.is_finite() {
        return Err(MarketError::DegenerateSensitivity(total));
    }
    Ok(total)
}

/// Price that zeroes net traded quantity: `-Σb / (N·a)`, or `-Σb / Σa_i` with overrides.
pub fn clear_price(bids: &[Bid], market: &MarketParams, a_overrides: Option<&[f64]>) -> Result<f64> {
    if bids.len() != market.n {
        return Err(MarketError::LengthMismatch { what: "bids", expected: market.n, got: bids.len() });
    }
    let a_sum = sensitivity_sum(market, a_overrides, bids.len())?;
    let b_sum: f64 = bids.iter().map(|b| b.0).sum();
    Ok(-b_sum / a_sum)
}

/// Clears the market and evaluates each prosumer's supply-demand function at the price.
pub fn clear(bids: &[Bid], market: &MarketParams, a_overrides: Option<&[f64]>) -> Result<TradeOutcome> {
    let lambda_c = clear_price(bids, market, a_overrides)?;
    let q = bids
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let a_i = a_overrides.map_or(market.a, |a| a[i]);
            a_i * lambda_c + b.0
        })
        .collect();
    Ok(TradeOutcome { q, lambda_c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Seller,
    Buyer,
    Neutral,
}

/// Buyer above the average bid, seller below it, neutral within [`NEUTRAL_BID_TOL`].
pub fn classify_roles(bids: &[Bid], market: &MarketParams) -> Result<Vec<Role>> {
    if bids.len() != market.n {
        return Err(MarketError::LengthMismatch { what: "bids", expected: market.n, got: bids.len() });
    }
    let mean = bids.iter().map(|b| b.0).sum::<f64>() / bids.len() as f64;
    Ok(bids
        .iter()
        .map(|b| {
            let gap = b.0 - mean;
            if gap.abs() <= NEUTRAL_BID_TOL {
                Role::Neutral
            } else if gap > 0.0 {
                Role::Buyer
            } else {
                Role::Seller
            }
        })
        .collect())
}

/// Complete market outcome: productions, bids, trades and costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    /// Production adjustment per prosumer (kW).
    pub p: Vec<f64>,
    pub bids: Vec<Bid>,
    pub trade: TradeOutcome,
    /// Disutility plus market payment per prosumer ($).
    pub cost_per_prosumer: Vec<f64>,
    /// Sum of disutilities ($).
    pub social_disutility: f64,
}

impl EquilibriumOutcome {
    /// Clears `bids` and sets each production from the energy balance `p_i = D_i - q_i`.
    pub fn from_bids(scenario: &Scenario, bids: Vec<Bid>) -> Result<Self> {
        let overrides = scenario.sensitivity_overrides();
        let trade = clear(&bids, &scenario.market, overrides.as_deref())?;
        let p: Vec<f64> = scenario.prosumers.iter().zip(&trade.q).map(|(pr, q)| pr.demand - q).collect();
        let cost_per_prosumer = scenario
            .prosumers
            .iter()
            .zip(p.iter().zip(&trade.q))
            .map(|(pr, (&p, &q))| total_cost(pr, p, q, trade.lambda_c))
            .collect();
        let social_disutility = scenario.prosumers.iter().zip(&p).map(|(pr, &p)| pr.disutility(p)).sum();
        Ok(Self { p, bids, trade, cost_per_prosumer, social_disutility })
    }

    pub fn marginal_disutilities(&self, scenario: &Scenario) -> Vec<f64> {
        scenario.prosumers.iter().zip(&self.p).map(|(pr, &p)| pr.marginal_disutility(p)).collect()
    }

    pub fn roles(&self, scenario: &Scenario) -> Result<Vec<Role>> {
        classify_roles(&self.bids, &scenario.market)
    }

    /// Money each prosumer pays into the market (negative for sellers).
    pub fn settlements(&self) -> Vec<f64> {
        self.trade.q.iter().map(|q| q * self.trade.lambda_c).collect()
    }
}

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_individual, solve_ne, solve_social_optimum, SolveReport};
use crate::error::Result;
use crate::market::Scenario;
use crate::mrp::{MrpScenario, MrpSolveReport};

/// Individual (IDL), sharing-market equilibrium (NE) and social optimum (SCO) side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `f_i(D_i)` per prosumer ($).
    pub idl_costs: Vec<f64>,
    /// Disutility plus market payment per prosumer at the equilibrium ($).
    pub ne_costs: Vec<f64>,
    /// `f_i(p̄_i)` per prosumer ($).
    pub sco_costs: Vec<f64>,
    pub idl_total: f64,
    /// Total disutility at the equilibrium ($).
    pub ne_total: f64,
    pub sco_total: f64,
    /// `(Σf(IDL) − Σf(SCO)) / Σf(SCO)`.
    pub relative_gap_idl: f64,
    /// `(Σf(NE) − Σf(SCO)) / Σf(SCO)`.
    pub relative_gap_ne: f64,
    /// `Σf(NE) / Σf(SCO)`.
    pub price_of_anarchy: f64,
    /// Equilibrium clearing price ($/kW).
    pub price: f64,
    /// Population variance of the equilibrium marginal disutilities (($/kW)²).
    pub md_variance: f64,
}

pub(crate) fn relative_gap(value: f64, reference: f64) -> f64 {
    let diff = value - reference;
    if diff == 0.0 {
        0.0
    } else {
        diff / reference
    }
}

pub fn compare_schemes(scenario: &Scenario) -> Result<ComparisonReport> {
    let ne = solve_ne(scenario)?;
    let sco = solve_social_optimum(scenario)?;
    let idl_costs = solve_individual(scenario);
    let outcome = ne.outcome(scenario)?;
    let sco_costs: Vec<f64> =
        scenario.prosumers.iter().zip(&sco.productions).map(|(pr, &p)| pr.disutility(p)).collect();

    let idl_total: f64 = idl_costs.iter().sum();
    let ne_total = ne.social_disutility(scenario);
    let sco_total: f64 = sco_costs.iter().sum();
    Ok(ComparisonReport {
        relative_gap_idl: relative_gap(idl_total, sco_total),
        relative_gap_ne: relative_gap(ne_total, sco_total),
        price_of_anarchy: if ne_total == sco_total { 1.0 } else { ne_total / sco_total },
        price: ne.price,
        md_variance: md_variance(scenario, &ne),
        idl_costs,
        ne_costs: outcome.cost_per_prosumer,
        sco_costs,
        idl_total,
        ne_total,
        sco_total,
    })
}

/// `(1/N)·Σ (x_i − mean)²`.
pub fn population_variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Variance of the marginal disutilities at a single-resource solution.
pub fn md_variance(scenario: &Scenario, report: &SolveReport) -> f64 {
    population_variance(&report.marginal_disutilities(scenario))
}

/// Variance over all `N` resource-level marginal disutilities.
pub fn mrp_md_variance(scenario: &MrpScenario, report: &MrpSolveReport) -> f64 {
    population_variance(&report.marginal_disutilities(scenario))
}

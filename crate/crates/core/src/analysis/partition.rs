//! Equal partitions: splitting every prosumer into `Z` smaller ones to add competition.
//!
//! Prosumer `i` with resources `1..K` becomes `Z` prosumers owning consecutive groups
//! of `K/Z` resources. Each new prosumer gets the demand
//!
//! ```text
//!     D'_z = Σ_{k ∈ group z} p_i^k* + (D_i − Σ_k p_i^k*) / Z
//! ```
//!
//! with `p*` the equilibrium of the unsplit market, so every group carries the same
//! residual and all pairwise residual products are non-negative.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::compare::{mrp_md_variance, relative_gap};
use crate::error::{MarketError, Result};
use crate::mrp::{solve_mrp_ne, solve_mrp_social, MrpProsumer, MrpScenario};

pub const PRODUCT_TOL: f64 = 1e-12;
pub const DEMAND_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub z: usize,
    /// `groups[i][z]` lists the resource indices of original prosumer `i` given to its `z`-th part.
    pub groups: Vec<Vec<Vec<usize>>>,
    /// New demands, `Z` consecutive entries per original prosumer (kW).
    pub demands: Vec<f64>,
    /// Residual `D'_z − Σ_{group} p*` of every new prosumer at the original equilibrium (kW).
    pub residuals: Vec<f64>,
    /// Smallest pairwise residual product within any original prosumer (kW²).
    pub min_residual_product: f64,
    /// Largest `|Σ_z D'_z − D_i|` (kW).
    pub demand_sum_error: f64,
    pub scenario: MrpScenario,
}

impl PartitionPlan {
    pub fn satisfies_sign_condition(&self) -> bool {
        self.min_residual_product >= -PRODUCT_TOL
    }

    pub fn demands_balance(&self) -> bool {
        self.demand_sum_error <= DEMAND_SUM_TOL
    }
}

/// Splits every prosumer into `z` parts. With `strict`, every resource must share one
/// `c` and every prosumer must own the same number of resources.
pub fn make_equal_partition(scenario: &MrpScenario, z: usize, strict: bool) -> Result<PartitionPlan> {
    scenario.validate()?;
    if z == 0 {
        return Err(MarketError::InvalidPartition("Z must be at least 1".into()));
    }
    for (i, pr) in scenario.prosumers.iter().enumerate() {
        if pr.k() % z != 0 {
            return Err(MarketError::InvalidPartition(format!("Z={z} does not divide K={} of prosumer {i}", pr.k())));
        }
    }
    if strict {
        let c0 = scenario.prosumers[0].resources[0].c;
        if scenario.prosumers.iter().flat_map(|p| &p.resources).any(|r| r.c != c0) {
            return Err(MarketError::InvalidPartition("strict mode requires equal c on every resource".into()));
        }
        let k0 = scenario.prosumers[0].k();
        if scenario.prosumers.iter().any(|p| p.k() != k0) {
            return Err(MarketError::InvalidPartition("strict mode requires the same K for every prosumer".into()));
        }
    }

    let ne = solve_mrp_ne(scenario)?;
    let mut groups = Vec::with_capacity(scenario.i());
    let mut demands = Vec::with_capacity(scenario.i() * z);
    let mut residuals = Vec::with_capacity(scenario.i() * z);
    let mut prosumers = Vec::with_capacity(scenario.i() * z);
    let mut min_product = f64::INFINITY;
    let mut sum_error: f64 = 0.0;

    for (pr, p) in scenario.prosumers.iter().zip(&ne.productions) {
        let size = pr.k() / z;
        let share = (pr.demand - p.iter().sum::<f64>()) / z as f64;
        let own_groups: Vec<Vec<usize>> = (0..z).map(|g| (g * size..(g + 1) * size).collect()).collect();
        let mut split: Vec<f64> = own_groups.iter().map(|g| g.iter().map(|&k| p[k]).sum::<f64>() + share).collect();
        // Close the split on the last part so the demands add back up to D_i.
        let head: f64 = split[..z - 1].iter().sum();
        split[z - 1] = pr.demand - head;

        let res: Vec<f64> = own_groups.iter().zip(&split).map(|(g, d)| d - g.iter().map(|&k| p[k]).sum::<f64>()).collect();
        for a in 0..z {
            for b in a + 1..z {
                min_product = min_product.min(res[a] * res[b]);
            }
        }
        sum_error = sum_error.max((split.iter().sum::<f64>() - pr.demand).abs());

        for (g, &d) in own_groups.iter().zip(&split) {
            prosumers.push(MrpProsumer::new(g.iter().map(|&k| pr.resources[k]).collect(), d));
        }
        demands.extend_from_slice(&split);
        residuals.extend(res);
        groups.push(own_groups);
    }
    if z == 1 {
        min_product = 0.0;
    }

    let new_scenario = MrpScenario::new(scenario.market.a, prosumers)?;
    Ok(PartitionPlan {
        z,
        groups,
        demands,
        residuals,
        min_residual_product: min_product,
        demand_sum_error: sum_error,
        scenario: new_scenario,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    /// Split applied to reach this step; 1 for the starting scenario.
    pub z: usize,
    /// Number of prosumers `I`.
    pub prosumers: usize,
    pub total_disutility: f64,
    pub md_variance: f64,
    /// `Σf(NE)/Σf(SCO) − 1`, SCO being the `I = 1` cost.
    pub relative_social_cost: f64,
    pub min_residual_product: f64,
    pub demand_sum_error: f64,
    /// `−2ac ≤ N` when all `c` are equal, `None` otherwise.
    pub variance_condition: Option<bool>,
}

fn common_c(scenario: &MrpScenario) -> Option<f64> {
    let c0 = scenario.prosumers[0].resources[0].c;
    scenario.prosumers.iter().flat_map(|p| &p.resources).all(|r| r.c == c0).then_some(c0)
}

/// Applies each `Z` of the chain in turn and reports the equilibrium after every step.
pub fn partition_study(scenario: &MrpScenario, z_chain: &[usize], strict: bool) -> Result<Vec<PartitionRow>> {
    scenario.validate()?;
    let sco_total = solve_mrp_social(scenario)?.total_disutility(scenario);
    let variance_condition =
        common_c(scenario).map(|c| -2.0 * scenario.market.a * c <= scenario.resource_count() as f64);

    let row = |s: &MrpScenario, z: usize, product: f64, sum_error: f64| -> Result<PartitionRow> {
        let ne = solve_mrp_ne(s)?;
        let total = ne.total_disutility(s);
        Ok(PartitionRow {
            z,
            prosumers: s.i(),
            total_disutility: total,
            md_variance: mrp_md_variance(s, &ne),
            relative_social_cost: relative_gap(total, sco_total),
            min_residual_product: product,
            demand_sum_error: sum_error,
            variance_condition,
        })
    };

    let mut rows = vec![row(scenario, 1, 0.0, 0.0)?];
    let mut current = scenario.clone();
    for &z in z_chain {
        let plan = make_equal_partition(&current, z, strict)?;
        rows.push(row(&plan.scenario, z, plan.min_residual_product, plan.demand_sum_error)?);
        current = plan.scenario;
    }
    Ok(rows)
}

pub fn write_partition_csv<W: Write>(rows: &[PartitionRow], mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "z,prosumers,total_disutility_usd,md_variance_usd2_per_kw2,relative_social_cost,min_residual_product_kw2,demand_sum_error_kw"
    )?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e},{:e}",
            r.z, r.prosumers, r.total_disutility, r.md_variance, r.relative_social_cost, r.min_residual_product, r.demand_sum_error
        )?;
    }
    Ok(())
}

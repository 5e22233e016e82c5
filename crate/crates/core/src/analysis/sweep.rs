//! Parameter sweeps. Cells are independent solver calls and run on the rayon pool;
//! rows always come back in input order.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compare::{compare_schemes, relative_gap};
use super::generator::{generate_scenario, GeneratorBounds};
use crate::equilibrium::{solve_ne, solve_social_optimum};
use crate::error::{MarketError, Result};
use crate::market::Scenario;

pub const MAX_SWEEP_N: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepNRow {
    pub n: usize,
    pub seed: u64,
    /// `Σf(NE)/Σf(SCO) − 1`.
    pub relative_gap: f64,
    pub md_variance: f64,
    /// `(Σf(NE) − Σf(SCO))/N` ($).
    pub average_gap: f64,
    pub price_of_anarchy: f64,
    pub price: f64,
}

fn check_n_values(n_values: &[usize]) -> Result<()> {
    match n_values.iter().find(|&&n| !(2..=MAX_SWEEP_N).contains(&n)) {
        Some(n) => Err(MarketError::invalid("n_values", format!("every N must lie in [2, {MAX_SWEEP_N}], got {n}"))),
        None => Ok(()),
    }
}

fn sweep_cell(bounds: &GeneratorBounds, n: usize, seed: u64) -> Result<SweepNRow> {
    let scenario = generate_scenario(&bounds.with_seed(seed), n)?;
    let report = compare_schemes(&scenario)?;
    Ok(SweepNRow {
        n,
        seed,
        relative_gap: report.relative_gap_ne,
        md_variance: report.md_variance,
        average_gap: (report.ne_total - report.sco_total) / n as f64,
        price_of_anarchy: report.price_of_anarchy,
        price: report.price,
    })
}

/// One row per `(N, seed)`, ordered by `N` then seed. `bounds.seed` is ignored.
pub fn sweep_n(bounds: &GeneratorBounds, n_values: &[usize], seeds: &[u64]) -> Result<Vec<SweepNRow>> {
    bounds.validate()?;
    check_n_values(n_values)?;
    let cells: Vec<(usize, u64)> = n_values.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    cells.par_iter().map(|&(n, seed)| sweep_cell(bounds, n, seed)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepNSummary {
    pub n: usize,
    pub median_relative_gap: f64,
    pub max_relative_gap: f64,
    pub median_md_variance: f64,
    pub median_average_gap: f64,
    pub max_average_gap: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Median and maximum across seeds for every `N`, in order of first appearance.
pub fn summarize_sweep_n(rows: &[SweepNRow]) -> Vec<SweepNSummary> {
    let mut ns: Vec<usize> = Vec::new();
    for r in rows {
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    ns.into_iter()
        .map(|n| {
            let cell: Vec<&SweepNRow> = rows.iter().filter(|r| r.n == n).collect();
            let col = |f: fn(&SweepNRow) -> f64| cell.iter().map(|r| f(r)).collect::<Vec<_>>();
            let max = |v: Vec<f64>| v.into_iter().fold(f64::NEG_INFINITY, f64::max);
            SweepNSummary {
                n,
                median_relative_gap: median(&col(|r| r.relative_gap)),
                max_relative_gap: max(col(|r| r.relative_gap)),
                median_md_variance: median(&col(|r| r.md_variance)),
                median_average_gap: median(&col(|r| r.average_gap)),
                max_average_gap: max(col(|r| r.average_gap)),
            }
        })
        .collect()
}

/// Empirical constant in `PoA ≤ 1 + β/N`: the largest `N·(PoA − 1)` in the sweep.
pub fn estimate_beta(rows: &[SweepNRow]) -> f64 {
    rows.iter().map(|r| r.n as f64 * (r.price_of_anarchy - 1.0)).fold(0.0, f64::max)
}

pub fn write_sweep_n_csv<W: Write>(rows: &[SweepNRow], mut out: W) -> io::Result<()> {
    writeln!(out, "n,seed,relative_gap,md_variance_usd2_per_kw2,average_gap_usd,price_of_anarchy,price_usd_per_kw")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e},{:e}",
            r.n, r.seed, r.relative_gap, r.md_variance, r.average_gap, r.price_of_anarchy, r.price
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepARow {
    pub multiplier: f64,
    pub a: f64,
    pub ne_total: f64,
    pub sco_total: f64,
    pub relative_gap: f64,
    pub price: f64,
}

/// Scales every price sensitivity by each multiplier and re-solves.
pub fn sweep_a(scenario: &Scenario, multipliers: &[f64]) -> Result<Vec<SweepARow>> {
    scenario.validate()?;
    if let Some(m) = multipliers.iter().find(|m| !(m.is_finite() && **m >= 1.0)) {
        return Err(MarketError::invalid("multipliers", format!("must be finite and >= 1, got {m}")));
    }
    let sco_total = solve_social_optimum(scenario)?.social_disutility(scenario);
    multipliers
        .par_iter()
        .map(|&m| {
            let scaled = scenario.with_scaled_sensitivity(m);
            let ne = solve_ne(&scaled)?;
            let ne_total = ne.social_disutility(&scaled);
            Ok(SweepARow {
                multiplier: m,
                a: scaled.market.a,
                ne_total,
                sco_total,
                relative_gap: relative_gap(ne_total, sco_total),
                price: ne.price,
            })
        })
        .collect()
}

pub fn write_sweep_a_csv<W: Write>(rows: &[SweepARow], mut out: W) -> io::Result<()> {
    writeln!(out, "multiplier,a_kw2_per_usd,ne_total_usd,sco_total_usd,relative_gap,price_usd_per_kw")?;
    for r in rows {
        writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e}", r.multiplier, r.a, r.ne_total, r.sco_total, r.relative_gap, r.price)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityRow {
    pub factor: f64,
    pub n: usize,
    pub seed: u64,
    pub relative_gap: f64,
    pub average_gap: f64,
}

/// Like [`sweep_n`] with per-prosumer sensitivities drawn from `[A·a, 0)` for each factor `A`.
pub fn sweep_heterogeneity(
    bounds: &GeneratorBounds,
    factors: &[f64],
    n_values: &[usize],
    seeds: &[u64],
) -> Result<Vec<HeterogeneityRow>> {
    check_n_values(n_values)?;
    let cells: Vec<(f64, usize, u64)> = factors
        .iter()
        .flat_map(|&f| n_values.iter().flat_map(move |&n| seeds.iter().map(move |&s| (f, n, s))))
        .collect();
    for &(f, ..) in &cells {
        bounds.with_heterogeneity(Some(f)).validate()?;
    }
    cells
        .par_iter()
        .map(|&(factor, n, seed)| {
            let b = bounds.with_heterogeneity(Some(factor)).with_seed(seed);
            let scenario = generate_scenario(&b, n)?;
            let ne_total = solve_ne(&scenario)?.social_disutility(&scenario);
            let sco_total = solve_social_optimum(&scenario)?.social_disutility(&scenario);
            Ok(HeterogeneityRow {
                factor,
                n,
                seed,
                relative_gap: relative_gap(ne_total, sco_total),
                average_gap: (ne_total - sco_total) / n as f64,
            })
        })
        .collect()
}

pub fn write_heterogeneity_csv<W: Write>(rows: &[HeterogeneityRow], mut out: W) -> io::Result<()> {
    writeln!(out, "factor,n,seed,relative_gap,average_gap_usd")?;
    for r in rows {
        writeln!(out, "{:e},{},{},{:e},{:e}", r.factor, r.n, r.seed, r.relative_gap, r.average_gap)?;
    }
    Ok(())
}

//! Wall-clock comparison of the direct equilibrium solve against the bidding loop.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::generator::{generate_scenario, GeneratorBounds};
use super::sweep::median;
use crate::equilibrium::solve_ne_closed_form;
use crate::error::{MarketError, Result};
use crate::protocol::{run_protocol, ProtocolConfig, UpdateMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub repeats: usize,
    /// Median seconds for the closed-form solve.
    pub direct_median_s: f64,
    /// Median seconds for the sequential bidding loop to converge.
    pub iterative_median_s: f64,
    /// Rounds used by the bidding loop.
    pub iterative_rounds: usize,
}

/// Settings of the bidding loop being timed: one prosumer at a time, no damping.
pub fn iterative_config() -> ProtocolConfig {
    ProtocolConfig { update_mode: UpdateMode::Sequential, damping: 1.0, log_bids: false, ..ProtocolConfig::default() }
}

pub fn timing_benchmark(bounds: &GeneratorBounds, n_values: &[usize], repeats: usize) -> Result<Vec<TimingRow>> {
    if repeats == 0 {
        return Err(MarketError::invalid("repeats", "must be >= 1"));
    }
    let config = iterative_config();
    n_values
        .iter()
        .map(|&n| {
            let scenario = generate_scenario(bounds, n)?;
            let mut direct = Vec::with_capacity(repeats);
            let mut iterative = Vec::with_capacity(repeats);
            let mut rounds = 0;
            for _ in 0..repeats {
                let t = Instant::now();
                std::hint::black_box(solve_ne_closed_form(std::hint::black_box(&scenario))?);
                direct.push(t.elapsed().as_secs_f64());

                let t = Instant::now();
                let sim = std::hint::black_box(run_protocol(std::hint::black_box(&scenario), &config)?);
                iterative.push(t.elapsed().as_secs_f64());
                rounds = sim.rounds.len();
            }
            Ok(TimingRow {
                n,
                repeats,
                direct_median_s: median(&direct),
                iterative_median_s: median(&iterative),
                iterative_rounds: rounds,
            })
        })
        .collect()
}

pub fn write_timing_csv<W: Write>(rows: &[TimingRow], mut out: W) -> io::Result<()> {
    writeln!(out, "n,repeats,direct_median_s,iterative_median_s,iterative_rounds")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{:e},{}", r.n, r.repeats, r.direct_median_s, r.iterative_median_s, r.iterative_rounds)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_one_row_per_n() {
        let rows = timing_benchmark(&GeneratorBounds::reference(0), &[2, 8], 3).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![2, 8]);
        assert!(rows.iter().all(|r| r.direct_median_s >= 0.0 && r.iterative_rounds > 0));
        assert!(timing_benchmark(&GeneratorBounds::reference(0), &[2], 0).is_err());
    }
}

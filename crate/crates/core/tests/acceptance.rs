//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fail.

use std::time::Instant;

use energy_sharing::analysis::{
    compare_schemes, generate_mrp_scenario, generate_scenario, partition_study,
    summarize_sweep_n, sweep_a, sweep_n, timing_benchmark, GeneratorBounds,
};
use energy_sharing::equilibrium::solve_ne_closed_form;
use energy_sharing::market::{marginal_disutility, Prosumer, Role, Scenario};
use energy_sharing::mrp::{solve_mrp_ne, solve_mrp_social, MrpScenario};
use energy_sharing::protocol::{run_protocol, ProtocolConfig, UpdateMode};

const EQUIVALENCE_TOL: f64 = 1e-6;
const PRICE_IDENTITY_TOL: f64 = 1e-9;
const PARETO_TOL: f64 = 1e-9;
const ROLE_TOL: f64 = 1e-9;
const CRITERION1_BUDGET_S: f64 = 5.0;
const SWEEP_MAX_GAP_N2: f64 = 0.05;
const SWEEP_MAX_GAP_N60: f64 = 1.5e-3;
const CRITERION5_BUDGET_S: f64 = 30.0;
const MONOTONE_TOL: f64 = 1e-9;
const MRP_TOL: f64 = 1e-9;
const PRODUCT_TOL: f64 = 1e-12;
const DEMAND_SUM_TOL: f64 = 1e-9;
const BUDGET_TOL: f64 = 1e-9;

struct Suite {
    failed: Vec<u32>,
}

impl Suite {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        println!("criterion {id:>2} {:<28} {}  {detail}", name, if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed.push(id);
        }
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * y.abs().max(1.0)
}

fn all_close(x: &[f64], y: &[f64], tol: f64) -> bool {
    x.len() == y.len() && x.iter().zip(y).all(|(a, b)| close(*a, *b, tol))
}

fn benchmark() -> Scenario {
    Scenario::new(-200.0, vec![Prosumer::new(0.003, 0.042, 100.0), Prosumer::new(0.006, 0.072, 200.0)]).unwrap()
}

/// Benchmark plus 100 draws with N spread over 2..=100.
fn criterion1_scenarios() -> Vec<Scenario> {
    let mut out = vec![benchmark()];
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 37) % 99;
        out.push(generate_scenario(&GeneratorBounds::reference(seed), n).unwrap());
    }
    out
}

/// One equilibrium as (p, b, λ).
#[derive(Clone)]
struct Ne {
    p: Vec<f64>,
    b: Vec<f64>,
    lambda: f64,
}

/// Projected gradient descent on the potential
/// `Σ (c_i − 1/(2(N−1)a)) p_i² + (d_i + D_i/((N−1)a)) p_i` over `Σp = ΣD`.
fn potential_minimizer(s: &Scenario) -> Ne {
    let n = s.n();
    let k = (n as f64 - 1.0) * s.market.a;
    let alpha: Vec<f64> = s.prosumers.iter().map(|p| p.c - 1.0 / (2.0 * k)).collect();
    let beta: Vec<f64> = s.prosumers.iter().map(|p| p.d + p.demand / k).collect();
    let lip = alpha.iter().fold(0.0f64, |m, &x| m.max(2.0 * x));
    let mut p: Vec<f64> = s.prosumers.iter().map(|p| p.demand).collect();
    let scale = p.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    for _ in 0..1_000_000 {
        let g: Vec<f64> = (0..n).map(|i| 2.0 * alpha[i] * p[i] + beta[i]).collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        let mut step: f64 = 0.0;
        for i in 0..n {
            let dp = (g[i] - mean) / lip;
            p[i] -= dp;
            step = step.max(dp.abs());
        }
        if step < 1e-14 * scale {
            break;
        }
    }
    // The multiplier of the balance constraint is −λ.
    let lambda = (0..n).map(|i| 2.0 * alpha[i] * p[i] + beta[i]).sum::<f64>() / n as f64;
    let b = s.prosumers.iter().zip(&p).map(|(pr, &pi)| pr.demand - pi - s.market.a * lambda).collect();
    Ne { p, b, lambda }
}

fn closed_form(s: &Scenario) -> Ne {
    let r = solve_ne_closed_form(s).unwrap();
    Ne { p: r.productions, b: r.bids.iter().map(|b| b.0).collect(), lambda: r.price }
}

fn protocol(s: &Scenario) -> Option<Ne> {
    let sim = run_protocol(s, &ProtocolConfig { log_bids: false, ..ProtocolConfig::default() }).ok()?;
    let o = sim.outcome;
    Some(Ne { p: o.p, b: o.bids.iter().map(|b| b.0).collect(), lambda: o.trade.lambda_c })
}

fn agree(x: &Ne, y: &Ne) -> bool {
    all_close(&x.p, &y.p, EQUIVALENCE_TOL)
        && all_close(&x.b, &y.b, EQUIVALENCE_TOL)
        && close(x.lambda, y.lambda, EQUIVALENCE_TOL)
}

fn mean_md(s: &Scenario, p: &[f64]) -> f64 {
    s.prosumers.iter().zip(p).map(|(pr, &x)| pr.marginal_disutility(x)).sum::<f64>() / s.n() as f64
}

fn budget_residual(bids: &[f64], a: f64, lambda: f64) -> f64 {
    bids.iter().map(|b| (a * lambda + b) * lambda).sum::<f64>()
}

fn main() {
    let mut suite = Suite { failed: Vec::new() };
    let scenarios = criterion1_scenarios();

    // 1. Closed form, potential minimizer and bidding protocol agree.
    let start = Instant::now();
    let mut solved: Vec<(Ne, Ne, Option<Ne>)> = Vec::new();
    let mut disagreements = 0;
    for s in &scenarios {
        let cf = closed_form(s);
        let num = potential_minimizer(s);
        let proto = protocol(s);
        let ok = agree(&cf, &num) && proto.as_ref().is_some_and(|p| agree(&cf, p) && agree(&num, p));
        if !ok {
            disagreements += 1;
        }
        solved.push((cf, num, proto));
    }
    let elapsed = start.elapsed().as_secs_f64();
    suite.record(
        1,
        "equilibrium equivalence",
        disagreements == 0 && elapsed < CRITERION1_BUDGET_S,
        format!("{} scenarios, {disagreements} disagreeing, {elapsed:.2}s (limit {CRITERION1_BUDGET_S}s)", scenarios.len()),
    );

    // 2. λ* equals the average marginal disutility.
    let mut worst: f64 = 0.0;
    for (s, (cf, num, proto)) in scenarios.iter().zip(&solved) {
        for ne in [Some(cf), Some(num), proto.as_ref()].into_iter().flatten() {
            worst = worst.max((ne.lambda - mean_md(s, &ne.p)).abs());
        }
    }
    suite.record(2, "price identity", worst <= PRICE_IDENTITY_TOL, format!("max |λ − mean md| = {worst:.3e}"));

    // 3. Nobody is worse off than acting alone; someone gains whenever trade happens.
    let mut violations = 0;
    let mut no_gain = 0;
    for s in &scenarios {
        let report = compare_schemes(s).unwrap();
        let cf = solve_ne_closed_form(s).unwrap();
        for (ne, idl) in report.ne_costs.iter().zip(&report.idl_costs) {
            if *ne > idl + PARETO_TOL {
                violations += 1;
            }
        }
        let trades = cf.productions.iter().zip(&s.prosumers).any(|(p, pr)| (p - pr.demand).abs() > 1e-9);
        if trades && !report.ne_costs.iter().zip(&report.idl_costs).any(|(ne, idl)| ne < idl) {
            no_gain += 1;
        }
    }
    suite.record(
        3,
        "Pareto improvement",
        violations == 0 && no_gain == 0,
        format!("{violations} prosumers worse off, {no_gain} trading scenarios without a strict gain"),
    );

    // 4. Sellers have md below the price, buyers above.
    let mut wrong = 0;
    let mut checked = 0;
    for s in &scenarios {
        let outcome = solve_ne_closed_form(s).unwrap().outcome(s).unwrap();
        let lambda = outcome.trade.lambda_c;
        for ((pr, &p), &q) in s.prosumers.iter().zip(&outcome.p).zip(&outcome.trade.q) {
            if q.abs() > ROLE_TOL {
                checked += 1;
                if (pr.marginal_disutility(p) - lambda).signum() != q.signum() {
                    wrong += 1;
                }
            }
        }
    }
    suite.record(4, "buyer/seller law", wrong == 0, format!("{wrong} of {checked} traders with mismatched sign"));

    // 5. Efficiency loss vanishes as N grows.
    let start = Instant::now();
    let n_values: Vec<usize> = (2..=100).collect();
    let seeds: Vec<u64> = (0..10).collect();
    let rows = sweep_n(&GeneratorBounds::reference(0), &n_values, &seeds).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let summary = summarize_sweep_n(&rows);
    let nonpositive = rows.iter().filter(|r| r.relative_gap <= 0.0).count();
    let max_n2 = summary[0].max_relative_gap;
    let max_n60 = summary.iter().filter(|s| s.n >= 60).map(|s| s.max_relative_gap).fold(0.0, f64::max);
    // Median md variance over consecutive blocks of ten N values.
    let blocks: Vec<f64> = summary
        .chunks(10)
        .map(|c| {
            let v: Vec<f64> = c.iter().map(|s| s.median_md_variance).collect();
            energy_sharing::analysis::sweep::median(&v)
        })
        .collect();
    let variance_decreasing = blocks.windows(2).all(|w| w[1] < w[0]);
    suite.record(
        5,
        "asymptotic efficiency",
        nonpositive == 0
            && max_n2 < SWEEP_MAX_GAP_N2
            && max_n60 < SWEEP_MAX_GAP_N60
            && variance_decreasing
            && elapsed < CRITERION5_BUDGET_S,
        format!(
            "non-positive gaps {nonpositive}; max gap N=2 {max_n2:.4} (limit {SWEEP_MAX_GAP_N2}); max gap N>=60 {max_n60:.3e} \
             (limit {SWEEP_MAX_GAP_N60}); block-median md variance decreasing {variance_decreasing}; {elapsed:.2}s"
        ),
    );

    // 6. Social cost falls as the market becomes more price sensitive.
    let a_rows = sweep_a(&benchmark(), &[1.0, 1.5, 2.0, 2.5, 3.0, 3.5]).unwrap();
    let monotone = a_rows.windows(2).all(|w| w[1].ne_total <= w[0].ne_total + MONOTONE_TOL);
    let above_sco = a_rows.iter().all(|r| r.ne_total >= r.sco_total - MONOTONE_TOL);
    let costs: Vec<String> = a_rows.iter().map(|r| format!("{:.3}", r.ne_total)).collect();
    suite.record(
        6,
        "price-sensitivity monotonicity",
        monotone && above_sco,
        format!("Σf(NE) = [{}], Σf(SCO) = {:.3}", costs.join(", "), a_rows[0].sco_total),
    );

    // 7. Multi-resource solver.
    let mut issues = Vec::new();
    for seed in 0..50u64 {
        let b = GeneratorBounds::reference(1000 + seed);
        let s = generate_mrp_scenario(&b, 2 + seed as usize % 5, 1 + seed as usize % 4, seed % 2 == 0).unwrap();
        let ne = solve_mrp_ne(&s).unwrap();
        if ne.kkt_residual > MRP_TOL {
            issues.push(format!("seed {seed}: KKT residual {:.2e}", ne.kkt_residual));
        }
        for (pr, p) in s.prosumers.iter().zip(&ne.productions) {
            let md: Vec<f64> = pr.resources.iter().zip(p).map(|(r, &x)| marginal_disutility(r.c, r.d, x)).collect();
            let spread = md.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - md.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > MRP_TOL {
                issues.push(format!("seed {seed}: md spread {spread:.2e}"));
            }
        }

        let alone = MrpScenario::new(s.market.a, vec![s.prosumers[0].clone()]).unwrap();
        let (one, sco) = (solve_mrp_ne(&alone).unwrap(), solve_mrp_social(&alone).unwrap());
        if !all_close(&one.productions[0], &sco.productions[0], MRP_TOL) {
            issues.push(format!("seed {seed}: I=1 differs from SCO"));
        }

        let single = generate_mrp_scenario(&b, 2 + seed as usize % 7, 1, false).unwrap();
        let flat = Scenario::new(
            single.market.a,
            single.prosumers.iter().map(|p| Prosumer::new(p.resources[0].c, p.resources[0].d, p.demand)).collect(),
        )
        .unwrap();
        let (m, r) = (solve_mrp_ne(&single).unwrap(), solve_ne_closed_form(&flat).unwrap());
        let mp: Vec<f64> = m.productions.iter().map(|p| p[0]).collect();
        let mb: Vec<f64> = m.bids.iter().map(|b| b.0).collect();
        let rb: Vec<f64> = r.bids.iter().map(|b| b.0).collect();
        if !(all_close(&mp, &r.productions, MRP_TOL) && all_close(&mb, &rb, MRP_TOL) && close(m.price, r.price, MRP_TOL)) {
            issues.push(format!("seed {seed}: I=N differs from the single-resource game"));
        }
    }
    suite.record(
        7,
        "multi-resource correctness",
        issues.is_empty(),
        if issues.is_empty() { "50 instances".into() } else { issues.join("; ") },
    );

    // 8. Equal partitions.
    let mut issues = Vec::new();
    for seed in 0..10u64 {
        let s = generate_mrp_scenario(&GeneratorBounds::reference(2000 + seed), 2, 8, true).unwrap();
        let rows = partition_study(&s, &[2, 2, 2], true).unwrap();
        for r in &rows[1..] {
            if r.min_residual_product < -PRODUCT_TOL || r.demand_sum_error > DEMAND_SUM_TOL {
                issues.push(format!("seed {seed} I={}: residual condition broken", r.prosumers));
            }
        }
        for w in rows.windows(2) {
            if w[1].total_disutility > w[0].total_disutility + MONOTONE_TOL {
                issues.push(format!("seed {seed} I={}: cost rose", w[1].prosumers));
            }
            if w[1].variance_condition == Some(true) && w[1].md_variance > w[0].md_variance + MONOTONE_TOL {
                issues.push(format!("seed {seed} I={}: md variance rose", w[1].prosumers));
            }
        }
    }
    suite.record(
        8,
        "equal partition",
        issues.is_empty(),
        if issues.is_empty() { "10 instances, chain I = 2, 4, 8, 16".into() } else { issues.join("; ") },
    );

    // 9. Payments net to zero in every round and at every equilibrium.
    let mut worst: f64 = 0.0;
    for mode in [UpdateMode::Simultaneous, UpdateMode::Sequential] {
        for s in scenarios.iter().take(20) {
            let sim = run_protocol(s, &ProtocolConfig { update_mode: mode, ..ProtocolConfig::default() }).unwrap();
            for round in &sim.rounds {
                worst = worst.max(budget_residual(&round.bids, s.market.a, round.lambda_c).abs());
            }
        }
    }
    for (s, (cf, ..)) in scenarios.iter().zip(&solved) {
        worst = worst.max(budget_residual(&cf.b, s.market.a, cf.lambda).abs());
    }
    suite.record(9, "budget balance", worst <= BUDGET_TOL, format!("max |Σ q λ| = {worst:.3e} $"));

    // 10. Table I prints IDL costs (72, 384), SMK (27, 322.13) and SCO (231.83, 101.67) for
    // c = (0.003, 0.006), d = (0.042, 0.072), D = (100, 200). Evaluating f = c p² + d p with
    // those coefficients gives IDL (34.2, 254.4), and the printed SCO pair does not even
    // match its own printed adjustments (216.67, 83.33). Only the ordering of the social
    // totals and the seller/buyer roles are reproduced here.
    let s = benchmark();
    let report = compare_schemes(&s).unwrap();
    let outcome = solve_ne_closed_form(&s).unwrap().outcome(&s).unwrap();
    let roles = outcome.roles(&s).unwrap();
    let ordered = report.idl_total > report.ne_total && report.ne_total > report.sco_total;
    suite.record(
        10,
        "Table I ordering and roles",
        ordered && roles == vec![Role::Seller, Role::Buyer],
        format!(
            "Σf IDL {:.2} > NE {:.2} > SCO {:.2}; roles {:?}",
            report.idl_total, report.ne_total, report.sco_total, roles
        ),
    );

    // 11. Direct solve beats the bidding loop.
    let timing = timing_benchmark(&GeneratorBounds::reference(0), &[2, 4, 8, 16, 32], 15).unwrap();
    let last = timing.last().unwrap();
    let cells: Vec<String> = timing
        .iter()
        .map(|t| format!("N={} direct {:.1}us iterative {:.1}us", t.n, t.direct_median_s * 1e6, t.iterative_median_s * 1e6))
        .collect();
    suite.record(11, "timing", last.direct_median_s <= last.iterative_median_s, cells.join("; "));

    if suite.failed.is_empty() {
        println!("acceptance: all 11 criteria pass");
    } else {
        println!("acceptance: failed criteria {:?}", suite.failed);
        std::process::exit(1);
    }
}

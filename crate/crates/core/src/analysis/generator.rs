//! Seeded random scenarios.
//!
//! Draws are uniform and i.i.d. from a ChaCha8 stream seeded with `seed`, one prosumer
//! at a time, so a scenario of size `n` is always a prefix of the scenario of size
//! `n + 1` drawn with the same seed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::market::{Prosumer, Scenario};
use crate::mrp::{MrpProsumer, MrpResource, MrpScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBounds {
    pub c: Interval,
    pub d: Interval,
    #[serde(rename = "D")]
    pub demand: Interval,
    /// Market price sensitivity.
    pub a: f64,
    /// When set to `A`, each prosumer draws its own `a_i` uniformly from `[A·a, 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneity: Option<f64>,
    pub seed: u64,
}

impl GeneratorBounds {
    /// c ∈ [0.001, 0.01] $/kW², d ∈ [0.02, 0.12] $/kW, D ∈ [0, 1000] kW, a = −200.
    pub fn reference(seed: u64) -> Self {
        Self {
            c: Interval::new(0.001, 0.01),
            d: Interval::new(0.02, 0.12),
            demand: Interval::new(0.0, 1000.0),
            a: -200.0,
            heterogeneity: None,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_heterogeneity(mut self, factor: Option<f64>) -> Self {
        self.heterogeneity = factor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, iv: &Interval, positive: bool| -> Result<()> {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo <= iv.hi) {
                return Err(MarketError::invalid(name, format!("need lo <= hi, got [{}, {}]", iv.lo, iv.hi)));
            }
            if positive && !(iv.lo > 0.0) {
                return Err(MarketError::invalid(name, format!("lower bound must be > 0, got {}", iv.lo)));
            }
            Ok(())
        };
        check("c", &self.c, true)?;
        check("d", &self.d, true)?;
        check("D", &self.demand, false)?;
        if !(self.a.is_finite() && self.a < 0.0) {
            return Err(MarketError::invalid("a", format!("must be finite and < 0, got {}", self.a)));
        }
        if let Some(factor) = self.heterogeneity {
            if !(factor.is_finite() && factor > 0.0) {
                return Err(MarketError::invalid("heterogeneity", format!("must be > 0, got {factor}")));
            }
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Draws `n` prosumers (c, d, D and, when heterogeneous, a_i, in that order per prosumer).
pub fn generate_scenario(bounds: &GeneratorBounds, n: usize) -> Result<Scenario> {
    bounds.validate()?;
    let mut rng = bounds.rng();
    let prosumers = (0..n)
        .map(|_| {
            let c = bounds.c.sample(&mut rng);
            let d = bounds.d.sample(&mut rng);
            let demand = bounds.demand.sample(&mut rng);
            let mut p = Prosumer::new(c, d, demand);
            if let Some(factor) = bounds.heterogeneity {
                p.a_i = Some(rng.gen_range(factor * bounds.a..0.0));
            }
            p
        })
        .collect();
    Scenario::new(bounds.a, prosumers)
}

/// Draws `prosumers` multi-resource prosumers with `k` resources each.
///
/// With `equal_c` a single `c` is drawn first and shared by every resource.
pub fn generate_mrp_scenario(bounds: &GeneratorBounds, prosumers: usize, k: usize, equal_c: bool) -> Result<MrpScenario> {
    bounds.validate()?;
    if k == 0 {
        return Err(MarketError::invalid("k", "need at least one resource per prosumer"));
    }
    let mut rng = bounds.rng();
    let shared_c = if equal_c { Some(bounds.c.sample(&mut rng)) } else { None };
    let list = (0..prosumers)
        .map(|_| {
            let resources = (0..k)
                .map(|_| {
                    let c = shared_c.unwrap_or_else(|| bounds.c.sample(&mut rng));
                    MrpResource::new(c, bounds.d.sample(&mut rng))
                })
                .collect();
            MrpProsumer::new(resources, bounds.demand.sample(&mut rng))
        })
        .collect();
    MrpScenario::new(bounds.a, list)
}

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use sysrisk_core::aggregation::{AggregationModel, MaxFlowPaths, ResourceAllocation};
use sysrisk_core::model::{LiabilityNetwork, ScenarioSpace, WealthProcess};
use sysrisk_core::risk::BaseRiskMeasure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random (d+1)x(d+1) liabilities with society at node 0, density ~60%.
pub fn random_network<R: Rng>(rng: &mut R, d: usize) -> LiabilityNetwork {
    let mut l = vec![vec![0.0; d + 1]; d + 1];
    for i in 1..=d {
        l[i][0] = rng.gen_range(0.1..2.0);
        for j in 1..=d {
            if i != j && rng.gen_bool(0.6) {
                l[i][j] = rng.gen_range(0.0..2.0);
            }
        }
    }
    LiabilityNetwork::new(l).unwrap()
}

pub fn two_bank() -> LiabilityNetwork {
    LiabilityNetwork::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap()
}

pub fn random_space<R: Rng>(rng: &mut R, n: usize) -> ScenarioSpace {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let tail: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - tail;
    ScenarioSpace::new(p).unwrap()
}

pub fn random_wealth<R: Rng>(rng: &mut R, n: usize, d: usize, lo: f64, hi: f64) -> WealthProcess {
    let space = random_space(rng, n);
    let values = (0..n).map(|_| (0..d).map(|_| rng.gen_range(lo..hi)).collect()).collect();
    WealthProcess::new(space, values).unwrap()
}

pub fn diamond() -> MaxFlowPaths {
    MaxFlowPaths::new(vec![(0, 1), (1, 3), (0, 2), (2, 3)], 0, 3).unwrap()
}

pub fn small_resource() -> ResourceAllocation {
    ResourceAllocation::new(vec![vec![1.0, 2.0], vec![1.0, 0.0]], vec![1.0, 1.5]).unwrap()
}

/// One representative of each aggregation family.
pub fn all_aggregations() -> Vec<AggregationModel> {
    vec![
        AggregationModel::total_pl(2).unwrap(),
        AggregationModel::total_loss(2).unwrap(),
        AggregationModel::entropic(2).unwrap(),
        AggregationModel::eisenberg_noe(two_bank()),
        AggregationModel::eisenberg_noe_ccp(&two_bank()),
        AggregationModel::ResourceAllocation(small_resource()),
        AggregationModel::MaxFlow(diamond()),
    ]
}

/// Base measures for which the interiority assumption holds with `agg`,
/// plus the coherent/entropic ones where it does not (for dual checks).
pub fn all_bases() -> Vec<BaseRiskMeasure> {
    vec![
        BaseRiskMeasure::expectation(0.0).unwrap(),
        BaseRiskMeasure::Entropic,
        BaseRiskMeasure::avar(0.5).unwrap(),
    ]
}

/// A shifted expectation satisfying the interiority assumption for `agg`.
pub fn valid_expectation(agg: &AggregationModel) -> BaseRiskMeasure {
    let r = agg.value_range();
    let lo = r.lower.to_f64();
    let hi = r.upper.to_f64();
    // rho(0) = -lambda0 must sit strictly inside (lo, hi)
    let target = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 0.5,
        (false, false) => 0.0,
    };
    BaseRiskMeasure::expectation(-target).unwrap()
}

/// Wealth in the natural domain of `agg` (nonnegative for network and
/// resource models so that scenarios stay feasible).
pub fn wealth_for<R: Rng>(rng: &mut R, agg: &AggregationModel, n: usize) -> WealthProcess {
    match agg {
        AggregationModel::EisenbergNoe { .. }
        | AggregationModel::EisenbergNoeCcp { .. }
        | AggregationModel::ResourceAllocation(_) => random_wealth(rng, n, agg.dim(), 0.0, 3.0),
        _ => random_wealth(rng, n, agg.dim(), -2.0, 2.0),
    }
}

#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sysrisk_core::aggregation::{AggregationModel, MaxFlowPaths, ResourceAllocation};
use sysrisk_core::model::{LiabilityNetwork, ScenarioSpace, WealthProcess};
use sysrisk_core::risk::BaseRiskMeasure;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

pub fn schema_path(command: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{command}.schema.json"))
}

pub fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

pub fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sysrisk"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

/// Random (d+1)x(d+1) liabilities with society at node 0.
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
    let head: f64 = p[..n - 1].iter().sum();
    p[n - 1] = 1.0 - head;
    ScenarioSpace::new(p).unwrap()
}

pub fn random_wealth<R: Rng>(rng: &mut R, n: usize, d: usize, lo: f64, hi: f64) -> WealthProcess {
    let space = random_space(rng, n);
    let values = (0..n).map(|_| (0..d).map(|_| rng.gen_range(lo..hi)).collect()).collect();
    WealthProcess::new(space, values).unwrap()
}

pub fn all_aggregations() -> Vec<AggregationModel> {
    vec![
        AggregationModel::total_pl(2).unwrap(),
        AggregationModel::total_loss(2).unwrap(),
        AggregationModel::entropic(2).unwrap(),
        AggregationModel::eisenberg_noe(two_bank()),
        AggregationModel::eisenberg_noe_ccp(&two_bank()),
        AggregationModel::ResourceAllocation(
            ResourceAllocation::new(vec![vec![1.0, 2.0], vec![1.0, 0.0]], vec![1.0, 1.5]).unwrap(),
        ),
        AggregationModel::MaxFlow(MaxFlowPaths::new(vec![(0, 1), (1, 3), (0, 2), (2, 3)], 0, 3).unwrap()),
    ]
}

/// Expectation shifted so that rho(0) is interior to the aggregation range.
pub fn valid_expectation(agg: &AggregationModel) -> BaseRiskMeasure {
    let r = agg.value_range();
    let (lo, hi) = (r.lower.to_f64(), r.upper.to_f64());
    let target = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo + 1.0,
        (false, true) => hi - 0.5,
        (false, false) => 0.0,
    };
    BaseRiskMeasure::expectation(-target).unwrap()
}

/// Each aggregation with the shifted expectation, entropic risk and AV@R.
pub fn all_pairs() -> Vec<(AggregationModel, BaseRiskMeasure)> {
    let mut out = Vec::new();
    for agg in all_aggregations() {
        for base in [valid_expectation(&agg), BaseRiskMeasure::Entropic, BaseRiskMeasure::avar(0.5).unwrap()] {
            out.push((agg.clone(), base));
        }
    }
    out
}

/// Wealth that keeps network and resource scenarios feasible.
pub fn wealth_for<R: Rng>(rng: &mut R, agg: &AggregationModel, n: usize) -> WealthProcess {
    match agg {
        AggregationModel::EisenbergNoe { .. }
        | AggregationModel::EisenbergNoeCcp { .. }
        | AggregationModel::ResourceAllocation(_) => random_wealth(rng, n, agg.dim(), 0.0, 3.0),
        _ => random_wealth(rng, n, agg.dim(), -2.0, 2.0),
    }
}
